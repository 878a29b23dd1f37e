//! Rayleigh flat-fading generation (Jakes Doppler spectrum), the two-user
//! multiple-access channel, and SNR bookkeeping.
//!
//! Fading is produced by an autoregressive model fitted to the Jakes
//! autocorrelation `2σ²·J0(2π·fdTs·m)` via Yule-Walker, driven by white
//! complex Gaussian innovations and started from its exact stationary
//! distribution. The output is therefore exactly Gaussian at every sample
//! and matches the Bessel autocorrelation at all fitted lags.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math::{bessel_j0, cholesky, levinson};
use crate::rng::derive_rng;
use crate::signal::SymbolSeq;

/// Order of the autoregressive Doppler model.
const AR_ORDER: usize = 8;
/// Diagonal loading applied to the lag-0 autocovariance; keeps the
/// Yule-Walker system well conditioned for narrowband (small fdTs) spectra.
const AR_LOADING: f64 = 1e-6;
/// Largest supported normalized fade rate (one-sided Doppler at Nyquist).
pub const MAX_FD_TS: f64 = 0.5;

/// Channel parameterization shared by the simulator and both detectors.
///
/// `sigma1_sq`/`sigma2_sq` and `delta_sq` are *per-dimension* variances: the
/// fading gains have total variance `2σᵢ²` and the additive noise `2δ²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub delta_sq: f64,
    pub es: f64,
    pub fd_ts: f64,
}

impl ChannelParams {
    pub fn new(sigma1_sq: f64, sigma2_sq: f64, delta_sq: f64, es: f64, fd_ts: f64) -> Result<Self> {
        let params = Self {
            sigma1_sq,
            sigma2_sq,
            delta_sq,
            es,
            fd_ts,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
            ("delta_sq", self.delta_sq),
            ("es", self.es),
        ];
        for (name, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        if !(0.0..=MAX_FD_TS).contains(&self.fd_ts) {
            return Err(Error::InvalidParameter {
                name: "fd_ts",
                reason: format!("must lie in [0, {MAX_FD_TS}], got {}", self.fd_ts),
            });
        }
        Ok(())
    }
}

/// One draw of both fading processes and the additive noise over a frame.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub h1: Vec<Complex64>,
    pub h2: Vec<Complex64>,
    pub noise: Vec<Complex64>,
}

impl ChannelRealization {
    pub fn len(&self) -> usize {
        self.h1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h1.is_empty()
    }
}

/// Precomputed Jakes Doppler model for one normalized fade rate.
///
/// Building the model solves a small Yule-Walker system; generating a frame
/// is then a cheap linear recursion, so one model is typically shared across
/// all frames of a sweep point.
#[derive(Debug, Clone)]
pub struct JakesModel {
    fd_ts: f64,
    /// AR prediction coefficients (empty for the frozen fdTs = 0 process).
    coeffs: Vec<f64>,
    /// Innovation standard deviation per real dimension.
    innovation_sigma: f64,
    /// Cholesky factor of the stationary covariance of `AR_ORDER`
    /// consecutive samples of the unit-variance process.
    init_chol: Vec<f64>,
}

impl JakesModel {
    pub fn new(fd_ts: f64) -> Result<Self> {
        if !fd_ts.is_finite() || fd_ts < 0.0 {
            return Err(Error::InvalidParameter {
                name: "fd_ts",
                reason: format!("must be nonnegative, got {fd_ts}"),
            });
        }
        if fd_ts > MAX_FD_TS {
            return Err(Error::InvalidParameter {
                name: "fd_ts",
                reason: format!("must not exceed {MAX_FD_TS}, got {fd_ts}"),
            });
        }
        if fd_ts == 0.0 {
            return Ok(Self {
                fd_ts,
                coeffs: Vec::new(),
                innovation_sigma: 0.0,
                init_chol: Vec::new(),
            });
        }

        // Unit-power target autocovariance with diagonal loading at lag 0.
        let mut r = [0.0f64; AR_ORDER + 1];
        for (m, slot) in r.iter_mut().enumerate() {
            *slot = bessel_j0(2.0 * std::f64::consts::PI * fd_ts * m as f64);
        }
        r[0] += AR_LOADING;

        let (coeffs, innovation_var) = levinson(&r);
        if !(innovation_var > 0.0) {
            return Err(Error::InvalidParameter {
                name: "fd_ts",
                reason: format!("Doppler model is numerically singular at fdTs = {fd_ts}"),
            });
        }

        let mut toeplitz = vec![0.0f64; AR_ORDER * AR_ORDER];
        for i in 0..AR_ORDER {
            for j in 0..AR_ORDER {
                toeplitz[i * AR_ORDER + j] = r[i.abs_diff(j)];
            }
        }
        let init_chol = cholesky(&toeplitz, AR_ORDER).ok_or(Error::InvalidParameter {
            name: "fd_ts",
            reason: format!("stationary covariance not positive definite at fdTs = {fd_ts}"),
        })?;

        Ok(Self {
            fd_ts,
            coeffs,
            innovation_sigma: innovation_var.sqrt(),
            init_chol,
        })
    }

    pub fn fd_ts(&self) -> f64 {
        self.fd_ts
    }

    /// Generates `length` correlated fading samples with total variance
    /// `variance` (`2σ²`), deterministically from `rng`.
    pub fn generate(
        &self,
        length: usize,
        variance: f64,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<Complex64>> {
        if length == 0 {
            return Err(Error::EmptyInput("fading sequence length"));
        }
        if !(variance > 0.0) {
            return Err(Error::InvalidParameter {
                name: "variance",
                reason: format!("must be positive, got {variance}"),
            });
        }
        let scale = variance.sqrt();

        if self.fd_ts == 0.0 {
            // Zero Doppler freezes the process at a single Rayleigh draw.
            let g = scale * standard_complex(rng);
            return Ok(vec![g; length]);
        }

        // Exact stationary start: AR_ORDER jointly-Gaussian history samples.
        let z: Vec<Complex64> = (0..AR_ORDER).map(|_| standard_complex(rng)).collect();
        let mut history = [Complex64::ZERO; AR_ORDER];
        for i in 0..AR_ORDER {
            let mut acc = Complex64::ZERO;
            for k in 0..=i {
                acc += self.init_chol[i * AR_ORDER + k] * z[k];
            }
            history[i] = acc;
        }
        // history[AR_ORDER - 1] is the most recent sample.

        let mut out = Vec::with_capacity(length);
        for _ in 0..length {
            let mut acc = self.innovation_sigma * standard_complex(rng);
            for (j, a) in self.coeffs.iter().enumerate() {
                acc += a * history[AR_ORDER - 1 - j];
            }
            history.rotate_left(1);
            history[AR_ORDER - 1] = acc;
            out.push(scale * acc);
        }
        Ok(out)
    }
}

/// Unit-variance circular complex Gaussian sample (each dimension N(0, 1/2)).
fn standard_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One-shot Jakes fading draw with total variance `variance_2sigma_sq`,
/// reproducible from `seed`.
pub fn jakes_fading(
    length: usize,
    variance_2sigma_sq: f64,
    fd_ts: f64,
    seed: u64,
) -> Result<Vec<Complex64>> {
    let model = JakesModel::new(fd_ts)?;
    let mut rng = derive_rng(seed, 0x4A4B_4553, 0);
    model.generate(length, variance_2sigma_sq, &mut rng)
}

/// Draws a full channel realization (both fading processes plus noise) for a
/// frame of `length` symbols. The two links fade independently.
pub fn draw_realization(
    params: &ChannelParams,
    model: &JakesModel,
    length: usize,
    rng: &mut ChaCha8Rng,
) -> Result<ChannelRealization> {
    let h1 = model.generate(length, 2.0 * params.sigma1_sq, rng)?;
    let h2 = model.generate(length, 2.0 * params.sigma2_sq, rng)?;
    let noise_sigma = (2.0 * params.delta_sq).sqrt();
    let noise = (0..length)
        .map(|_| noise_sigma * standard_complex(rng))
        .collect();
    Ok(ChannelRealization { h1, h2, noise })
}

/// Superimposes the two transmitted frames through their fading processes
/// and adds the noise: `r(k) = h1(k)x1(k) + h2(k)x2(k) + n(k)`.
pub fn mac_transmit(
    x1: &SymbolSeq,
    x2: &SymbolSeq,
    realization: &ChannelRealization,
) -> Result<Vec<Complex64>> {
    if x1.len() != x2.len() {
        return Err(Error::LengthMismatch {
            context: "mac_transmit symbol sequences",
            left: x1.len(),
            right: x2.len(),
        });
    }
    if x1.len() != realization.len() || realization.h2.len() != realization.len()
        || realization.noise.len() != realization.len()
    {
        return Err(Error::LengthMismatch {
            context: "mac_transmit realization",
            left: x1.len(),
            right: realization.len(),
        });
    }
    Ok(x1
        .symbols()
        .iter()
        .zip(x2.symbols())
        .zip(realization.h1.iter().zip(&realization.h2))
        .zip(&realization.noise)
        .map(|(((s1, s2), (g1, g2)), n)| g1 * s1 + g2 * s2 + n)
        .collect())
}

/// Converts a per-source Eb/N0 operating point (dB) into the per-dimension
/// noise variance δ².
///
/// Definition used throughout this crate: the received energy per symbol of
/// source i is `Es·2σᵢ²`; averaging over the two sources and dividing by the
/// outer code rate gives the energy per information bit,
/// `Eb = Es·(2σ₁² + 2σ₂²) / (2·rate)`. With `N0 = 2δ²`,
/// `δ² = Es·(σ₁² + σ₂²) / (2·rate·10^(EbN0_dB/10))`.
pub fn ebn0_to_noise_var(
    ebn0_db: f64,
    code_rate: f64,
    es: f64,
    sigma1_sq: f64,
    sigma2_sq: f64,
) -> Result<f64> {
    if !(code_rate > 0.0 && code_rate <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "code_rate",
            reason: format!("must lie in (0, 1], got {code_rate}"),
        });
    }
    if !(es > 0.0) || !(sigma1_sq > 0.0) || !(sigma2_sq > 0.0) {
        return Err(Error::InvalidParameter {
            name: "es/sigma_sq",
            reason: "energies and variances must be positive".into(),
        });
    }
    let ebn0_lin = 10f64.powf(ebn0_db / 10.0);
    Ok(es * (sigma1_sq + sigma2_sq) / (2.0 * code_rate * ebn0_lin))
}

/// Human-readable statement of the Eb/N0 convention, for run metadata files.
pub fn ebn0_definition() -> &'static str {
    "Eb/N0 per source with received energy: Eb = Es*(2*sigma1^2 + 2*sigma2^2)/(2*rate), N0 = 2*delta^2"
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{differential_encode, BitSeq};

    fn autocov(samples: &[Complex64], lag: usize) -> f64 {
        let n = samples.len() - lag;
        let mut acc = 0.0;
        for k in 0..n {
            acc += (samples[k + lag] * samples[k].conj()).re;
        }
        acc / n as f64
    }

    #[test]
    fn zero_doppler_freezes_the_process() {
        let h = jakes_fading(256, 1.0, 0.0, 9).unwrap();
        for g in &h {
            assert_eq!(*g, h[0]);
        }
        assert!(h[0].norm_sqr() > 0.0);
    }

    #[test]
    fn sample_power_matches_target() {
        let h = jakes_fading(1_000_000, 1.0, 0.03, 7).unwrap();
        let mean_power = h.iter().map(|g| g.norm_sqr()).sum::<f64>() / h.len() as f64;
        assert!(
            (mean_power - 1.0).abs() < 0.01,
            "mean |h|^2 = {mean_power}, expected 1 +- 0.01"
        );
    }

    #[test]
    fn lag_one_autocorrelation_matches_bessel() {
        let fd_ts = 0.03;
        let h = jakes_fading(1_000_000, 1.0, fd_ts, 11).unwrap();
        let r0 = autocov(&h, 0);
        let r1 = autocov(&h, 1);
        let target = bessel_j0(2.0 * std::f64::consts::PI * fd_ts);
        // J0(2*pi*0.03) ~= 0.9911.
        assert!((target - 0.9911).abs() < 1e-3);
        let rel = (r1 / r0 - target).abs() / target;
        assert!(rel < 0.01, "lag-1 autocorrelation off by {rel}");
    }

    #[test]
    fn fading_marginal_moments_are_gaussian() {
        // Moment test at the 1% level over 1e6 samples: mean, variance,
        // skewness and kurtosis of each quadrature against N(0, sigma^2).
        let h = jakes_fading(1_000_000, 1.0, 0.03, 13).unwrap();
        let n = h.len() as f64;
        // Correlated samples: the effective sample count for moment error
        // bars is roughly n * 2 * fdTs.
        let n_eff = n * 2.0 * 0.03;
        for (name, xs) in [
            ("re", h.iter().map(|g| g.re).collect::<Vec<_>>()),
            ("im", h.iter().map(|g| g.im).collect::<Vec<_>>()),
        ] {
            let mean = xs.iter().sum::<f64>() / n;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
            let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
            let skew = m3 / var.powf(1.5);
            let kurt = m4 / (var * var);
            // 1% two-sided z is about 2.58; pad generously for correlation.
            let tol_mean = 3.0 * (var / n_eff).sqrt();
            assert!(mean.abs() < tol_mean, "{name}: mean {mean} vs tol {tol_mean}");
            assert!((var - 0.5).abs() / 0.5 < 0.02, "{name}: var {var}");
            assert!(skew.abs() < 3.0 * (6.0 / n_eff).sqrt(), "{name}: skew {skew}");
            assert!(
                (kurt - 3.0).abs() < 3.0 * (24.0 / n_eff).sqrt(),
                "{name}: kurtosis {kurt}"
            );
        }
    }

    #[test]
    fn slow_fading_premise_holds_at_default_rate() {
        let h = jakes_fading(500_000, 1.0, 0.03, 17).unwrap();
        let diff_power = h
            .windows(2)
            .map(|w| (w[1] - w[0]).norm_sqr())
            .sum::<f64>()
            / (h.len() - 1) as f64;
        let power = h.iter().map(|g| g.norm_sqr()).sum::<f64>() / h.len() as f64;
        assert!(
            diff_power / power < 0.05,
            "E|h(k)-h(k-1)|^2 / 2sigma^2 = {}",
            diff_power / power
        );
    }

    #[test]
    fn identical_seeds_reproduce_bit_identical_fading() {
        let a = jakes_fading(4096, 0.7, 0.03, 123).unwrap();
        let b = jakes_fading(4096, 0.7, 0.03, 123).unwrap();
        assert_eq!(a, b);
        let c = jakes_fading(4096, 0.7, 0.03, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn negative_fd_ts_rejected() {
        assert!(jakes_fading(8, 1.0, -1.0, 0).is_err());
    }

    #[test]
    fn mac_transmit_trivial_cases() {
        let ones = BitSeq::coded(vec![1, 1, 1]).unwrap();
        let x = differential_encode(&ones, 1, 1.0).unwrap();
        let n = x.len();
        let unit = vec![Complex64::new(1.0, 0.0); n];
        let real = ChannelRealization {
            h1: unit.clone(),
            h2: unit,
            noise: vec![Complex64::ZERO; n],
        };
        let r = mac_transmit(&x, &x, &real).unwrap();
        for v in r {
            assert!((v - Complex64::new(2.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn mac_transmit_componentwise() {
        let mut rng = derive_rng(5, 0, 0);
        let bits1 = BitSeq::coded((0..16).map(|_| rng.random_range(0..=1u8)).collect()).unwrap();
        let bits2 = BitSeq::coded((0..16).map(|_| rng.random_range(0..=1u8)).collect()).unwrap();
        let x1 = differential_encode(&bits1, 1, 1.0).unwrap();
        let x2 = differential_encode(&bits2, 1, 1.0).unwrap();
        let n = x1.len();
        let real = ChannelRealization {
            h1: (0..n).map(|_| standard_complex(&mut rng)).collect(),
            h2: (0..n).map(|_| standard_complex(&mut rng)).collect(),
            noise: (0..n).map(|_| standard_complex(&mut rng)).collect(),
        };
        let r = mac_transmit(&x1, &x2, &real).unwrap();
        for k in 0..n {
            let expect = real.h1[k] * x1.symbols()[k] + real.h2[k] * x2.symbols()[k]
                + real.noise[k];
            assert!((r[k] - expect).norm() < 1e-12);
        }
    }

    #[test]
    fn mac_transmit_length_mismatch() {
        let a = BitSeq::coded(vec![1, 1]).unwrap();
        let b = BitSeq::coded(vec![1]).unwrap();
        let x1 = differential_encode(&a, 1, 1.0).unwrap();
        let x2 = differential_encode(&b, 1, 1.0).unwrap();
        let real = ChannelRealization {
            h1: vec![Complex64::ZERO; 3],
            h2: vec![Complex64::ZERO; 3],
            noise: vec![Complex64::ZERO; 3],
        };
        assert!(mac_transmit(&x1, &x2, &real).is_err());
    }

    #[test]
    fn ebn0_reference_point() {
        // rate 1, Es 1, sigma^2 = 0.5 per link, 0 dB -> delta^2 = 0.5.
        let d = ebn0_to_noise_var(0.0, 1.0, 1.0, 0.5, 0.5).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ebn0_scaling() {
        let d0 = ebn0_to_noise_var(0.0, 0.5, 1.0, 0.5, 0.5).unwrap();
        let d3 = ebn0_to_noise_var(3.010_299_956_639_812, 0.5, 1.0, 0.5, 0.5).unwrap();
        assert!((d0 / d3 - 2.0).abs() < 1e-9, "+3.01 dB must halve delta^2");
        let dhuge = ebn0_to_noise_var(200.0, 0.5, 1.0, 0.5, 0.5).unwrap();
        assert!(dhuge < 1e-18);
    }

    #[test]
    fn ebn0_rejects_bad_rate() {
        assert!(ebn0_to_noise_var(0.0, 0.0, 1.0, 0.5, 0.5).is_err());
        assert!(ebn0_to_noise_var(0.0, -0.3, 1.0, 0.5, 0.5).is_err());
    }
}
