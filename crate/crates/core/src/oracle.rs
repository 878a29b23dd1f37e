//! Independent brute-force references used by the test suites.
//!
//! [`exhaustive_joint_map`] enumerates every label sequence of a short frame
//! and marginalizes exactly; it shares the per-branch likelihood functions
//! with the demodulator but none of its recursion code. [`mc_conditional_stats`]
//! estimates the noncoherent conditional mean and variance by Monte Carlo
//! regression, which adjudicates the sign of the conditional-variance cross
//! term independently of any closed-form derivation.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::{ChannelParams, ChannelRealization};
use crate::demod::{
    build_trellis, coherent_branch_metric, noncoherent_branch_metric, BranchLabel,
    DetectionMode, JointApp, PriorTable, Trellis, TrellisState,
};
use crate::error::{Error, Result};
use crate::rng::derive_rng;

/// Hard cap on the enumerated frame length (4^8 = 65536 sequences).
pub const MAX_ORACLE_EPOCHS: usize = 8;

/// Output of the exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// Exact per-epoch joint label posteriors.
    pub app: JointApp,
    /// Log of the total (unnormalized) frame likelihood.
    pub log_evidence: f64,
}

/// Exact joint MAP by enumeration of all `4^N` label sequences.
///
/// Evaluates the product of the same per-branch likelihoods the demodulator
/// uses (priors included), accumulates per-epoch label marginals and
/// normalizes. The initial state is the all-plus reference state.
pub fn exhaustive_joint_map(
    r: &[Complex64],
    mode: DetectionMode,
    csi: Option<&ChannelRealization>,
    prior: &PriorTable,
    params: &ChannelParams,
) -> Result<OracleResult> {
    if r.len() < 2 {
        return Err(Error::EmptyInput("received frame needs at least 2 symbols"));
    }
    let n = r.len() - 1;
    if n > MAX_ORACLE_EPOCHS {
        return Err(Error::OracleTooLong {
            epochs: n,
            max: MAX_ORACLE_EPOCHS,
        });
    }
    if prior.len() != n {
        return Err(Error::LengthMismatch {
            context: "oracle prior table",
            left: prior.len(),
            right: n,
        });
    }
    if mode == DetectionMode::Coherent && csi.is_none() {
        return Err(Error::InvalidParameter {
            name: "csi",
            reason: "coherent oracle requires channel state information".into(),
        });
    }

    let trellis = build_trellis();
    let mut marginals = vec![[0.0f64; 4]; n];
    let mut total = 0.0f64;

    let sequences = 4usize.pow(n as u32);
    let mut labels = vec![0usize; n];
    for seq in 0..sequences {
        let mut v = seq;
        for slot in labels.iter_mut() {
            *slot = v & 0b11;
            v >>= 2;
        }

        let mut state = Trellis::initial_state();
        let mut weight = 1.0f64;
        for (k, &l) in labels.iter().enumerate() {
            let label = BranchLabel::from_index(l);
            let st = TrellisState::from_index(state);
            let p = prior.epoch(k)[l];
            let gamma = match mode {
                DetectionMode::Coherent => {
                    let csi = csi.unwrap();
                    coherent_branch_metric(r[k + 1], csi.h1[k + 1], csi.h2[k + 1], st, label, p, params)
                }
                DetectionMode::Noncoherent => {
                    noncoherent_branch_metric(r[k + 1], r[k], st, label, p, params)
                }
            };
            weight *= gamma;
            if weight == 0.0 {
                break;
            }
            state = trellis.next(state, l);
        }
        if weight == 0.0 {
            continue;
        }
        total += weight;
        for (k, &l) in labels.iter().enumerate() {
            marginals[k][l] += weight;
        }
    }

    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::ZeroNormalizer(0));
    }
    for row in marginals.iter_mut() {
        for p in row.iter_mut() {
            *p /= total;
        }
    }
    Ok(OracleResult {
        app: joint_app_from_rows(marginals),
        log_evidence: total.ln(),
    })
}

fn joint_app_from_rows(rows: Vec<[f64; 4]>) -> JointApp {
    JointApp::from_rows_unchecked(rows)
}

/// Least-squares fit of `r(k)` on `r(k-1)` for one branch.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalFit {
    /// Empirical regression slope (estimates the conditional-mean multiplier).
    pub slope: Complex64,
    /// Empirical residual variance (estimates the conditional variance).
    pub residual_var: f64,
}

/// Monte Carlo regression of `r(k)` on `r(k-1)` under one `(state, label)`
/// branch with gains held constant across the two epochs.
///
/// Draws `(h1, h2, n(k-1), n(k))`, forms the two received samples and
/// returns the least-squares slope and residual variance. These estimate
/// the conditional mean multiplier and conditional variance used by the
/// noncoherent branch metric.
pub fn mc_conditional_stats(
    state: TrellisState,
    label: BranchLabel,
    params: &ChannelParams,
    num_samples: usize,
    seed: u64,
) -> ConditionalFit {
    let mut rng = derive_rng(seed, 0x4D43, (state.index() * 4 + label.index()) as u64);
    let (d1, d2) = label.signs();
    let amp = params.es.sqrt();
    let x1_prev = amp * f64::from(state.u1_prev);
    let x2_prev = amp * f64::from(state.u2_prev);
    let x1 = x1_prev * d1;
    let x2 = x2_prev * d2;

    let s1 = (2.0 * params.sigma1_sq).sqrt();
    let s2 = (2.0 * params.sigma2_sq).sqrt();
    let sn = (2.0 * params.delta_sq).sqrt();

    let mut cross = Complex64::ZERO; // sum r(k) * conj(r(k-1))
    let mut power = 0.0f64; // sum |r(k-1)|^2
    let mut pairs = Vec::with_capacity(num_samples);
    for _ in 0..num_samples {
        let h1 = s1 * standard_complex(&mut rng);
        let h2 = s2 * standard_complex(&mut rng);
        let r_prev = h1 * x1_prev + h2 * x2_prev + sn * standard_complex(&mut rng);
        let r_cur = h1 * x1 + h2 * x2 + sn * standard_complex(&mut rng);
        cross += r_cur * r_prev.conj();
        power += r_prev.norm_sqr();
        pairs.push((r_prev, r_cur));
    }
    let slope = cross / power;
    let residual_var = pairs
        .iter()
        .map(|(p, c)| (c - slope * p).norm_sqr())
        .sum::<f64>()
        / num_samples as f64;
    ConditionalFit {
        slope,
        residual_var,
    }
}

fn standard_complex<R: Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{draw_realization, mac_transmit, JakesModel};
    use crate::demod::{demodulate, noncoherent_stats};
    use crate::signal::{differential_encode, BitSeq};

    fn random_prior(n: usize, rng: &mut rand_chacha::ChaCha8Rng) -> PriorTable {
        let rows: Vec<[f64; 4]> = (0..n)
            .map(|_| {
                let mut row = [0.0; 4];
                for v in row.iter_mut() {
                    *v = rng.random::<f64>() + 0.05;
                }
                row
            })
            .collect();
        PriorTable::from_epochs(rows).unwrap()
    }

    #[test]
    fn single_epoch_oracle_is_metric_normalization() {
        let params = ChannelParams::new(0.5, 0.5, 0.5, 1.0, 0.03).unwrap();
        let r = vec![Complex64::new(0.4, -0.9), Complex64::new(-1.2, 0.3)];
        let prior = PriorTable::uniform(1);
        let out = exhaustive_joint_map(&r, DetectionMode::Noncoherent, None, &prior, &params)
            .unwrap();
        // Direct normalization over the four labels from the known start state.
        let st = TrellisState { u1_prev: 1, u2_prev: 1 };
        let raw: Vec<f64> = (0..4)
            .map(|l| {
                noncoherent_branch_metric(r[1], r[0], st, BranchLabel::from_index(l), 0.25, &params)
            })
            .collect();
        let sum: f64 = raw.iter().sum();
        for l in 0..4 {
            assert!((out.app.epoch(0)[l] - raw[l] / sum).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_rejects_long_frames() {
        let params = ChannelParams::new(0.5, 0.5, 0.5, 1.0, 0.03).unwrap();
        let r = vec![Complex64::ZERO; MAX_ORACLE_EPOCHS + 2];
        let prior = PriorTable::uniform(MAX_ORACLE_EPOCHS + 1);
        assert!(matches!(
            exhaustive_joint_map(&r, DetectionMode::Noncoherent, None, &prior, &params),
            Err(Error::OracleTooLong { .. })
        ));
    }

    #[test]
    fn demodulator_matches_oracle_on_short_frames() {
        // A handful of draws here; the acceptance suite runs the full 100.
        let mut rng = derive_rng(2024, 9, 0);
        let params = ChannelParams::new(0.5, 0.5, 0.4, 1.0, 0.03).unwrap();
        let model = JakesModel::new(params.fd_ts).unwrap();
        for trial in 0..10 {
            let n = 6;
            let c1 = BitSeq::coded((0..n).map(|_| rng.random_range(0..=1u8)).collect()).unwrap();
            let c2 = BitSeq::coded((0..n).map(|_| rng.random_range(0..=1u8)).collect()).unwrap();
            let x1 = differential_encode(&c1, 1, params.es).unwrap();
            let x2 = differential_encode(&c2, 1, params.es).unwrap();
            let real = draw_realization(&params, &model, n + 1, &mut rng).unwrap();
            let r = mac_transmit(&x1, &x2, &real).unwrap();
            let prior = random_prior(n, &mut rng);

            for mode in [DetectionMode::Coherent, DetectionMode::Noncoherent] {
                let csi = (mode == DetectionMode::Coherent).then_some(&real);
                let (_, app) = demodulate(&r, mode, csi, &prior, &params).unwrap();
                let oracle = exhaustive_joint_map(&r, mode, csi, &prior, &params).unwrap();
                for k in 0..n {
                    for l in 0..4 {
                        let diff = (app.epoch(k)[l] - oracle.app.epoch(k)[l]).abs();
                        assert!(diff < 1e-9, "trial {trial} {mode} epoch {k} label {l}: {diff}");
                    }
                }
            }
        }
    }

    #[test]
    fn mc_regression_single_user_slope() {
        let params = ChannelParams {
            sigma1_sq: 0.5,
            sigma2_sq: 0.0,
            delta_sq: 0.25,
            es: 1.0,
            fd_ts: 0.03,
        };
        let state = TrellisState { u1_prev: 1, u2_prev: 1 };
        let label = BranchLabel { c1: 1, c2: 0 };
        let fit = mc_conditional_stats(state, label, &params, 1_000_000, 5);
        let expect = noncoherent_stats(state, label, &params);
        let scale = expect.mr_coeff.norm().max(0.1);
        assert!((fit.slope - expect.mr_coeff).norm() < 0.01 * scale);
    }

    #[test]
    fn mc_regression_matches_closed_form_for_all_labels() {
        // The adjudicating experiment for the conditional-variance cross
        // term: the minus-sign (identity-derived) form must match the data.
        let params = ChannelParams::new(0.5, 0.5, 0.25, 1.0, 0.03).unwrap();
        let state = TrellisState { u1_prev: 1, u2_prev: -1 };
        for l in 0..4 {
            let label = BranchLabel::from_index(l);
            let fit = mc_conditional_stats(state, label, &params, 1_000_000, 77);
            let expect = noncoherent_stats(state, label, &params);
            let slope_scale = (2.0 * params.es * (params.sigma1_sq + params.sigma2_sq))
                / expect.sigma_r_sq;
            assert!(
                (fit.slope - expect.mr_coeff).norm() < 0.01 * slope_scale,
                "label {l}: slope {} vs {}",
                fit.slope,
                expect.mr_coeff
            );
            assert!(
                (fit.residual_var - expect.delta_r_sq).abs() < 0.01 * expect.delta_r_sq,
                "label {l}: residual {} vs {}",
                fit.residual_var,
                expect.delta_r_sq
            );
        }
    }
}
