//! Joint trellis demodulation of two superimposed differentially-encoded
//! BPSK signals.
//!
//! The pair of previous symbol signs `(u1(k-1), u2(k-1))` forms a 4-state
//! trellis with one branch per coded-bit pair `(c1(k), c2(k))`. A
//! forward-backward sweep over per-branch likelihoods produces the joint
//! a-posteriori probabilities of the four label pairs at every epoch, which
//! are then marginalized into log-likelihood ratios of the XOR bit
//! `c1 ⊕ c2` for the outer decoder.
//!
//! Two branch metrics are provided:
//!
//! * **coherent** — Gaussian residual against the known fading gains;
//! * **noncoherent** — conditional Gaussian of `r(k)` given `r(k-1)` under
//!   the assumption that both fading gains are constant across the two
//!   consecutive symbols. No channel knowledge is used.
//!
//! All recursions run in the linear domain with per-epoch renormalization.
//! LLR convention throughout: `L = log Pr(bit = 1) / Pr(bit = 0)`.

use num_complex::Complex64;

use crate::channel::{ChannelParams, ChannelRealization};
use crate::error::{Error, Result};

/// Hard clamp applied to all emitted LLRs; keeps certain events finite.
pub const DEFAULT_LLR_CLAMP: f64 = 50.0;

/// Detection mode of the relay demodulator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionMode {
    /// Fading gains known at the relay.
    Coherent,
    /// No channel knowledge; relies on gain constancy over two symbols.
    Noncoherent,
}

impl std::fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DetectionMode::Coherent => write!(f, "coherent"),
            DetectionMode::Noncoherent => write!(f, "noncoherent"),
        }
    }
}

/// Trellis state: the previous symbol sign of each user.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrellisState {
    pub u1_prev: i8,
    pub u2_prev: i8,
}

impl TrellisState {
    pub fn from_index(index: usize) -> Self {
        debug_assert!(index < 4);
        Self {
            u1_prev: if index & 0b10 != 0 { -1 } else { 1 },
            u2_prev: if index & 0b01 != 0 { -1 } else { 1 },
        }
    }

    pub fn index(&self) -> usize {
        (usize::from(self.u1_prev == -1) << 1) | usize::from(self.u2_prev == -1)
    }
}

/// Branch label: the coded-bit pair `(c1(k), c2(k))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchLabel {
    pub c1: u8,
    pub c2: u8,
}

impl BranchLabel {
    pub fn from_index(index: usize) -> Self {
        debug_assert!(index < 4);
        Self {
            c1: ((index >> 1) & 1) as u8,
            c2: (index & 1) as u8,
        }
    }

    pub fn index(&self) -> usize {
        ((self.c1 as usize) << 1) | self.c2 as usize
    }

    pub fn xor(&self) -> u8 {
        self.c1 ^ self.c2
    }

    /// Per-user phase-difference signs `d_i = 2c_i - 1`.
    pub fn signs(&self) -> (f64, f64) {
        (
            f64::from(2 * i16::from(self.c1) - 1),
            f64::from(2 * i16::from(self.c2) - 1),
        )
    }
}

/// The 4-state, 4-branch differential trellis shared by both sources.
#[derive(Debug, Clone)]
pub struct Trellis {
    next: [[usize; 4]; 4],
}

/// Builds the joint trellis: from state `(u1, u2)`, label `(c1, c2)` leads
/// to `(u1·(2c1-1), u2·(2c2-1))`.
pub fn build_trellis() -> Trellis {
    let mut next = [[0usize; 4]; 4];
    for (s, row) in next.iter_mut().enumerate() {
        let state = TrellisState::from_index(s);
        for (l, slot) in row.iter_mut().enumerate() {
            let label = BranchLabel::from_index(l);
            let (d1, d2) = label.signs();
            let to = TrellisState {
                u1_prev: if f64::from(state.u1_prev) * d1 > 0.0 { 1 } else { -1 },
                u2_prev: if f64::from(state.u2_prev) * d2 > 0.0 { 1 } else { -1 },
            };
            *slot = to.index();
        }
    }
    Trellis { next }
}

impl Trellis {
    pub fn next(&self, state: usize, label: usize) -> usize {
        self.next[state][label]
    }

    /// Index of the state with both reference signs +1 (the frame start).
    pub fn initial_state() -> usize {
        TrellisState {
            u1_prev: 1,
            u2_prev: 1,
        }
        .index()
    }
}

/// Branch metric table of one epoch, indexed `[state][label]`.
pub type BranchMetrics = [[f64; 4]; 4];

/// Per-epoch probability tables over the four labels, indexed by
/// `BranchLabel::index()`: (0,0), (0,1), (1,0), (1,1).
#[derive(Debug, Clone, PartialEq)]
pub struct PriorTable {
    probs: Vec<[f64; 4]>,
}

impl PriorTable {
    /// Uniform priors (¼ each) over `epochs` epochs.
    pub fn uniform(epochs: usize) -> Self {
        Self {
            probs: vec![[0.25; 4]; epochs],
        }
    }

    /// Wraps raw per-epoch tables, normalizing each to sum 1.
    pub fn from_epochs(mut probs: Vec<[f64; 4]>) -> Result<Self> {
        for (k, row) in probs.iter_mut().enumerate() {
            let sum: f64 = row.iter().sum();
            if !(sum > 0.0) || !sum.is_finite() {
                return Err(Error::ZeroNormalizer(k));
            }
            for p in row.iter_mut() {
                if *p < 0.0 {
                    return Err(Error::InvalidParameter {
                        name: "prior",
                        reason: format!("negative entry at epoch {k}"),
                    });
                }
                *p /= sum;
            }
        }
        Ok(Self { probs })
    }

    pub fn epoch(&self, k: usize) -> &[f64; 4] {
        &self.probs[k]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `log (P(0,1) + P(1,0)) / (P(0,0) + P(1,1))` at epoch `k`: the XOR
    /// log-ratio already contained in this prior, clamped.
    pub fn xor_log_ratio(&self, k: usize, clamp: f64) -> f64 {
        let p = &self.probs[k];
        clamped_log_ratio(p[1] + p[2], p[0] + p[3], clamp)
    }
}

/// Joint a-posteriori probabilities of the label pairs, one normalized
/// 4-entry table per epoch (same index order as [`PriorTable`]).
#[derive(Debug, Clone, PartialEq)]
pub struct JointApp {
    probs: Vec<[f64; 4]>,
}

impl JointApp {
    fn from_normalized(probs: Vec<[f64; 4]>) -> Self {
        Self { probs }
    }

    /// Wraps rows that are already normalized (oracle construction path).
    pub(crate) fn from_rows_unchecked(probs: Vec<[f64; 4]>) -> Self {
        Self { probs }
    }

    pub fn epoch(&self, k: usize) -> &[f64; 4] {
        &self.probs[k]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Second-order statistics of the received pair `(r(k-1), r(k))` given a
/// branch, used by the noncoherent metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoncoherentStats {
    /// Total variance of `r(k-1)` given the symbols: `2σ₁²Es + 2σ₂²Es + 2δ²`.
    pub sigma_r_sq: f64,
    /// Multiplier with `E[r(k) | r(k-1)] = mr_coeff · r(k-1)`.
    pub mr_coeff: Complex64,
    /// Total conditional variance of `r(k)` given `r(k-1)`.
    pub delta_r_sq: f64,
}

/// Coherent branch metric: prior times the Gaussian likelihood of the
/// residual against the known gains,
/// `prior · exp(-|r(k) - h1 x1(k) - h2 x2(k)|² / 2δ²)`
/// with `x_i(k) = √Es · u_i(k-1) · (2c_i - 1)`.
///
/// The value may underflow to zero for very small δ²; the demodulator's
/// internal path rescales exponents per epoch before exponentiating.
pub fn coherent_branch_metric(
    r_k: Complex64,
    h1_k: Complex64,
    h2_k: Complex64,
    state: TrellisState,
    label: BranchLabel,
    prior: f64,
    params: &ChannelParams,
) -> f64 {
    let (d1, d2) = label.signs();
    let amp = params.es.sqrt();
    let x1 = amp * f64::from(state.u1_prev) * d1;
    let x2 = amp * f64::from(state.u2_prev) * d2;
    let resid = r_k - h1_k * x1 - h2_k * x2;
    prior * (-resid.norm_sqr() / (2.0 * params.delta_sq)).exp()
}

/// Conditional statistics of `r(k)` given `r(k-1)` for one branch, assuming
/// both gains constant over the two symbols.
///
/// With `cov = 2σ₁² x1(k)x1*(k-1) + 2σ₂² x2(k)x2*(k-1)`:
/// `mr_coeff = cov / σ_r²` and, by the jointly-Gaussian conditional-variance
/// identity, `delta_r_sq = σ_r² - |cov|² / σ_r²`. For BPSK the covariance
/// reduces to `2Es(σ₁²d₁ + σ₂²d₂)`, so the cross term of `|cov|²` enters
/// `delta_r_sq` with a *negative* sign for `d₁d₂ = -1` labels.
pub fn noncoherent_stats(
    state: TrellisState,
    label: BranchLabel,
    params: &ChannelParams,
) -> NoncoherentStats {
    let (d1, d2) = label.signs();
    let amp = params.es.sqrt();
    let x1_prev = amp * f64::from(state.u1_prev);
    let x2_prev = amp * f64::from(state.u2_prev);
    let x1 = x1_prev * d1;
    let x2 = x2_prev * d2;

    let sigma_r_sq =
        2.0 * params.sigma1_sq * params.es + 2.0 * params.sigma2_sq * params.es
            + 2.0 * params.delta_sq;
    let cov = 2.0 * params.sigma1_sq * x1 * x1_prev + 2.0 * params.sigma2_sq * x2 * x2_prev;
    let delta_r_sq = sigma_r_sq - cov * cov / sigma_r_sq;
    NoncoherentStats {
        sigma_r_sq,
        mr_coeff: Complex64::new(cov / sigma_r_sq, 0.0),
        delta_r_sq,
    }
}

/// Noncoherent branch metric: prior times the conditional complex Gaussian
/// density of `r(k)` given `r(k-1)`,
/// `prior · exp(-|r(k) - mr_coeff·r(k-1)|² / δ_r²) / (π δ_r²)`.
///
/// The label-independent density of `r(k-1)` itself is a common factor at
/// every epoch (constant-modulus signalling) and is omitted.
pub fn noncoherent_branch_metric(
    r_k: Complex64,
    r_km1: Complex64,
    state: TrellisState,
    label: BranchLabel,
    prior: f64,
    params: &ChannelParams,
) -> f64 {
    let stats = noncoherent_stats(state, label, params);
    let resid = r_k - stats.mr_coeff * r_km1;
    prior * (-resid.norm_sqr() / stats.delta_r_sq).exp()
        / (std::f64::consts::PI * stats.delta_r_sq)
}

/// Forward/backward recursions over per-epoch branch metrics.
///
/// Returns per-epoch state distributions `alpha[0..=N]` and `beta[0..=N]`,
/// each renormalized to sum 1. The final `beta` is uniform (the differential
/// trellis is unterminated). An epoch whose metrics drive every state to
/// zero is reported as a dead trellis.
pub fn forward_backward(
    trellis: &Trellis,
    metrics: &[BranchMetrics],
    init: &[f64; 4],
) -> Result<(Vec<[f64; 4]>, Vec<[f64; 4]>)> {
    let n = metrics.len();
    if n == 0 {
        return Err(Error::EmptyInput("branch metrics"));
    }

    let mut alpha = vec![[0.0f64; 4]; n + 1];
    let init_sum: f64 = init.iter().sum();
    if !(init_sum > 0.0) || !init_sum.is_finite() {
        return Err(Error::ZeroNormalizer(0));
    }
    for s in 0..4 {
        alpha[0][s] = init[s] / init_sum;
    }

    for k in 0..n {
        let mut next = [0.0f64; 4];
        for s in 0..4 {
            let a = alpha[k][s];
            if a == 0.0 {
                continue;
            }
            for l in 0..4 {
                next[trellis.next(s, l)] += a * metrics[k][s][l];
            }
        }
        let sum: f64 = next.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::DeadTrellis(k));
        }
        for (dst, v) in alpha[k + 1].iter_mut().zip(next) {
            *dst = v / sum;
        }
    }

    let mut beta = vec![[0.0f64; 4]; n + 1];
    beta[n] = [0.25; 4];
    for k in (0..n).rev() {
        let mut cur = [0.0f64; 4];
        for s in 0..4 {
            let mut acc = 0.0;
            for l in 0..4 {
                acc += metrics[k][s][l] * beta[k + 1][trellis.next(s, l)];
            }
            cur[s] = acc;
        }
        let sum: f64 = cur.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::DeadTrellis(k));
        }
        for (dst, v) in beta[k].iter_mut().zip(cur) {
            *dst = v / sum;
        }
    }

    Ok((alpha, beta))
}

/// Combines the recursions into per-epoch joint label posteriors:
/// `Pr(c1(k), c2(k) | r) ∝ Σ_s α_k(s) γ_k(s, label) β_{k+1}(next(s, label))`.
pub fn joint_app(
    trellis: &Trellis,
    alpha: &[[f64; 4]],
    beta: &[[f64; 4]],
    metrics: &[BranchMetrics],
) -> Result<JointApp> {
    let n = metrics.len();
    if alpha.len() != n + 1 || beta.len() != n + 1 {
        return Err(Error::LengthMismatch {
            context: "joint_app recursions",
            left: alpha.len(),
            right: n + 1,
        });
    }
    let mut probs = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = [0.0f64; 4];
        for s in 0..4 {
            let a = alpha[k][s];
            if a == 0.0 {
                continue;
            }
            for l in 0..4 {
                row[l] += a * metrics[k][s][l] * beta[k + 1][trellis.next(s, l)];
            }
        }
        let sum: f64 = row.iter().sum();
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(Error::ZeroNormalizer(k));
        }
        for p in row.iter_mut() {
            *p /= sum;
        }
        probs.push(row);
    }
    Ok(JointApp::from_normalized(probs))
}

fn clamped_log_ratio(num: f64, den: f64, clamp: f64) -> f64 {
    if num <= 0.0 {
        return -clamp;
    }
    if den <= 0.0 {
        return clamp;
    }
    (num / den).ln().clamp(-clamp, clamp)
}

/// Marginalizes a joint label posterior into XOR LLRs,
/// `L(k) = log (P(0,1) + P(1,0)) / (P(0,0) + P(1,1))`, clamped to ±`clamp`.
/// Positive values favor `c1 ⊕ c2 = 1`.
pub fn xor_llr(app: &JointApp, clamp: f64) -> Vec<f64> {
    (0..app.len())
        .map(|k| {
            let p = app.epoch(k);
            clamped_log_ratio(p[1] + p[2], p[0] + p[3], clamp)
        })
        .collect()
}


/// Full demodulation pass over a received frame `r(0..=N)`: builds branch
/// metrics for the chosen mode, runs the forward-backward sweep and returns
/// the clamped XOR LLRs together with the joint label posteriors.
///
/// Coded epoch `k` spans observations `r(k)` and `r(k+1)`; `r(0)` observes
/// the reference symbols. Coherent mode requires `csi` (only the gain
/// sequences are read); noncoherent mode ignores it.
pub fn demodulate(
    r: &[Complex64],
    mode: DetectionMode,
    csi: Option<&ChannelRealization>,
    prior: &PriorTable,
    params: &ChannelParams,
) -> Result<(Vec<f64>, JointApp)> {
    if r.len() < 2 {
        return Err(Error::EmptyInput("received frame needs at least 2 symbols"));
    }
    let n = r.len() - 1;
    if prior.len() != n {
        return Err(Error::LengthMismatch {
            context: "prior table epochs",
            left: prior.len(),
            right: n,
        });
    }

    let trellis = build_trellis();
    let metrics = match mode {
        DetectionMode::Coherent => {
            let csi = csi.ok_or(Error::InvalidParameter {
                name: "csi",
                reason: "coherent detection requires channel state information".into(),
            })?;
            if csi.h1.len() != r.len() || csi.h2.len() != r.len() {
                return Err(Error::LengthMismatch {
                    context: "csi gain sequences",
                    left: csi.h1.len(),
                    right: r.len(),
                });
            }
            coherent_metric_table(r, csi, prior, params)
        }
        DetectionMode::Noncoherent => noncoherent_metric_table(r, prior, params),
    };

    let mut init = [0.0f64; 4];
    init[Trellis::initial_state()] = 1.0;

    let (alpha, beta) = forward_backward(&trellis, &metrics, &init)?;
    let app = joint_app(&trellis, &alpha, &beta, &metrics)?;
    let llr = xor_llr(&app, DEFAULT_LLR_CLAMP);
    Ok((llr, app))
}

/// Coherent metric table with per-epoch exponent rescaling (underflow-safe).
fn coherent_metric_table(
    r: &[Complex64],
    csi: &ChannelRealization,
    prior: &PriorTable,
    params: &ChannelParams,
) -> Vec<BranchMetrics> {
    let n = r.len() - 1;
    let amp = params.es.sqrt();
    let inv_two_delta = 1.0 / (2.0 * params.delta_sq);
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let rk = r[k + 1];
        let h1 = csi.h1[k + 1];
        let h2 = csi.h2[k + 1];
        let mut expo = [[0.0f64; 4]; 4];
        let mut max = f64::NEG_INFINITY;
        for s in 0..4 {
            let state = TrellisState::from_index(s);
            for l in 0..4 {
                let (d1, d2) = BranchLabel::from_index(l).signs();
                let x1 = amp * f64::from(state.u1_prev) * d1;
                let x2 = amp * f64::from(state.u2_prev) * d2;
                let resid = rk - h1 * x1 - h2 * x2;
                let e = -resid.norm_sqr() * inv_two_delta;
                expo[s][l] = e;
                if e > max {
                    max = e;
                }
            }
        }
        let mut table = [[0.0f64; 4]; 4];
        for s in 0..4 {
            for l in 0..4 {
                table[s][l] = prior.epoch(k)[l] * (expo[s][l] - max).exp();
            }
        }
        out.push(table);
    }
    out
}

/// Noncoherent metric table with per-epoch exponent rescaling.
fn noncoherent_metric_table(
    r: &[Complex64],
    prior: &PriorTable,
    params: &ChannelParams,
) -> Vec<BranchMetrics> {
    let n = r.len() - 1;
    // Conditional stats per (state, label); for BPSK they collapse to a
    // per-label value but are kept per-branch for clarity.
    let mut mr = [[Complex64::ZERO; 4]; 4];
    let mut inv_var = [[0.0f64; 4]; 4];
    let mut log_norm = [[0.0f64; 4]; 4];
    for s in 0..4 {
        let state = TrellisState::from_index(s);
        for l in 0..4 {
            let stats = noncoherent_stats(state, BranchLabel::from_index(l), params);
            mr[s][l] = stats.mr_coeff;
            inv_var[s][l] = 1.0 / stats.delta_r_sq;
            log_norm[s][l] = -(std::f64::consts::PI * stats.delta_r_sq).ln();
        }
    }

    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let rk = r[k + 1];
        let rkm1 = r[k];
        let mut expo = [[0.0f64; 4]; 4];
        let mut max = f64::NEG_INFINITY;
        for s in 0..4 {
            for l in 0..4 {
                let resid = rk - mr[s][l] * rkm1;
                let e = -resid.norm_sqr() * inv_var[s][l] + log_norm[s][l];
                expo[s][l] = e;
                if e > max {
                    max = e;
                }
            }
        }
        let mut table = [[0.0f64; 4]; 4];
        for s in 0..4 {
            for l in 0..4 {
                table[s][l] = prior.epoch(k)[l] * (expo[s][l] - max).exp();
            }
        }
        out.push(table);
    }
    out
}
