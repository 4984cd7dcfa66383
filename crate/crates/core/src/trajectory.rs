//! Monte Carlo simulation of the discretized apparatus: N exact
//! weak-measurement steps with feedforward sign switching, producing
//! empirical error probabilities and convergence sweeps toward the
//! minimum-error bound.
//!
//! Two execution paths produce identical statistics:
//!
//! * a generic Fock-state path ([`step`], [`run_trajectory`]) sampling each
//!   outcome from the exact branch probabilities `‖M^(k)ψ‖²`;
//! * a closed-form path for coherent signals: every `M^(k)` maps `|γ⟩` to
//!   `|γ cosθ⟩` times a scalar, so the outcome distribution is exactly
//!   Poisson with mean `sin²θ |β − γ|²` and only the count stream is
//!   random. The per-step distributions of the two paths agree to rounding
//!   (asserted in tests), and the fast path is what the sweep drivers use.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coherent::{helstrom_pe, CoherentSchedule, Sign};
use crate::error::{CoreError, Result};
use crate::fock::FockState;
use crate::kraus::{MeasurementRecord, Schedule};
use crate::qubit::QubitSchedule;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Beamsplitter cascade parameters; `horizon = n_steps · theta²` exactly.
#[derive(Clone, Copy, Debug)]
pub struct ApparatusConfig {
    pub theta: f64,
    pub n_steps: usize,
    pub horizon: f64,
    pub cutoff: usize,
    /// Detector outcome range per step (`k = 0..=ancilla_cutoff`).
    pub ancilla_cutoff: usize,
    /// Optional clamp on the local-oscillator magnitude.
    pub beta_cap: Option<f64>,
    pub seed: u64,
}

impl ApparatusConfig {
    /// Rounds the step count to `n = round(horizon/θ²)` and stores the
    /// exactly consistent `horizon = n θ²`.
    pub fn from_theta_horizon(theta: f64, horizon: f64, cutoff: usize, seed: u64) -> Result<Self> {
        if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2) {
            return Err(CoreError::InvalidParameter(format!(
                "mixing angle must lie in (0, π/2), got {theta}"
            )));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(CoreError::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let n = (horizon / (theta * theta)).round().max(1.0) as usize;
        Ok(Self {
            theta,
            n_steps: n,
            horizon: n as f64 * theta * theta,
            cutoff,
            ancilla_cutoff: 12,
            beta_cap: None,
            seed,
        })
    }

    pub fn validity_warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.theta * self.theta > 0.01 {
            w.push(format!(
                "θ² = {:.4} exceeds 0.01; the weak-measurement regime is questionable",
                self.theta * self.theta
            ));
        }
        w
    }

    fn clamp_beta(&self, beta: Complex64) -> Complex64 {
        match self.beta_cap {
            Some(cap) if beta.norm() > cap => beta * Complex64::new(cap / beta.norm(), 0.0),
            _ => beta,
        }
    }
}

/// Feedforward policy: which β the LO applies at position `l` after a
/// given number of sign flips, and how record parity maps to a hypothesis.
#[derive(Clone, Copy, Debug)]
pub enum SchedulePolicy {
    /// β±(l) for the coherent pair, switching sign on odd counts.
    CoherentDolinar { alpha: Complex64, initial_sign: Sign },
    /// Interval functions for the qubit basis.
    QubitDolinar { f0: f64, f1: f64, phi: f64 },
    /// Fixed LO (sign still switches); the baseline receivers.
    Constant { beta: Complex64 },
    /// No LO: pure loss.
    Zero,
}

impl SchedulePolicy {
    pub fn beta(&self, l: f64, flips: usize) -> Complex64 {
        match *self {
            SchedulePolicy::CoherentDolinar {
                alpha,
                initial_sign,
            } => CoherentSchedule::with_sign(alpha, initial_sign).beta(l, flips),
            SchedulePolicy::QubitDolinar { f0, f1, phi } => QubitSchedule { f0, f1, phi }.beta(l, flips),
            SchedulePolicy::Constant { beta } => {
                if flips % 2 == 0 {
                    beta
                } else {
                    -beta
                }
            }
            SchedulePolicy::Zero => ZERO,
        }
    }

    /// Map the parity of the total count onto a hypothesis index.
    pub fn decision(&self, parity: usize) -> usize {
        match *self {
            SchedulePolicy::CoherentDolinar {
                initial_sign: Sign::Minus,
                ..
            } => 1 - parity,
            SchedulePolicy::QubitDolinar { f0, f1, .. } if f0 < f1 => 1 - parity,
            _ => parity,
        }
    }
}

/// Outcome of a single simulated trajectory.
#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub record: MeasurementRecord,
    pub decision: usize,
    pub true_signal: usize,
    /// Σ ln ‖M^(k_n) ψ_n‖² over the sampled branches.
    pub log_weight: f64,
}

// ---------------------------------------------------------------------------
// exact Fock-space step
// ---------------------------------------------------------------------------

/// Apply the factored step Kraus operator
/// `M^(k) = e^{−|β|²sin²θ/2}(βsinθ − a tanθ)^k/√k! · e^{aβ*sin²θ/cosθ} e^{a†a ln cosθ}`
/// to `amps` in place. All factors lower or preserve photon number, so this
/// equals the truncation of the untruncated operator.
fn factored_kraus_in_place(amps: &mut [Complex64], theta: f64, beta: Complex64, k: u32) {
    let dim = amps.len();
    let (s, c) = theta.sin_cos();
    // damping e^{a†a ln cosθ}
    let mut damp = 1.0;
    for a in amps.iter_mut().skip(1) {
        damp *= c;
        *a *= damp;
    }
    // exp(x a) with x = β* sin²θ/cosθ, truncated nilpotent series
    let x = beta.conj() * Complex64::new(s * s / c, 0.0);
    if x != ZERO {
        let mut term: Vec<Complex64> = amps.to_vec();
        for j in 1..dim {
            // term ← (x/j) a·term
            let f = x / Complex64::new(j as f64, 0.0);
            for m in 0..dim - 1 {
                term[m] = f * Complex64::new(((m + 1) as f64).sqrt(), 0.0) * term[m + 1];
            }
            term[dim - 1] = ZERO;
            let mut mag = 0.0;
            for (a, t) in amps.iter_mut().zip(term.iter()) {
                *a += t;
                mag += t.norm_sqr();
            }
            if mag < 1e-60 {
                break;
            }
        }
    }
    // (β sinθ − a tanθ)^k / √k!
    let bs = beta * Complex64::new(s, 0.0);
    let t = s / c;
    for j in 1..=k {
        for m in 0..dim - 1 {
            amps[m] = bs * amps[m]
                - Complex64::new(t * ((m + 1) as f64).sqrt(), 0.0) * amps[m + 1];
        }
        amps[dim - 1] = bs * amps[dim - 1];
        let inv = 1.0 / (j as f64).sqrt();
        for a in amps.iter_mut() {
            *a *= inv;
        }
    }
    let scale = (-beta.norm_sqr() * s * s / 2.0).exp();
    for a in amps.iter_mut() {
        *a *= scale;
    }
}

/// One exact weak-measurement step on a normalized state: sample `k` from
/// the branch probabilities `‖M^(k)ψ‖²`, return `(k, renormalized
/// post-state, branch probability)`.
///
/// Fails when the outcome mass within `0..=k_max` leaves more than `1e-9`
/// unaccounted (Fock/detector truncation breach).
pub fn step<R: Rng + ?Sized>(
    state: &FockState,
    theta: f64,
    beta: Complex64,
    k_max: usize,
    rng: &mut R,
) -> Result<(u32, FockState, f64)> {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    let mut last: Option<(u32, Vec<Complex64>, f64)> = None;
    for k in 0..=k_max {
        let mut amps: Vec<Complex64> = state.amps().to_vec();
        factored_kraus_in_place(&mut amps, theta, beta, k as u32);
        let q: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
        cum += q;
        if u <= cum {
            let inv = Complex64::new(1.0 / q.sqrt(), 0.0);
            for a in amps.iter_mut() {
                *a *= inv;
            }
            return Ok((k as u32, FockState::from_amplitudes(amps)?, q));
        }
        last = Some((k as u32, amps, q));
    }
    if cum < 1.0 - 1e-9 {
        return Err(CoreError::ProbabilityLeak {
            sum: cum,
            leak: 1.0 - cum,
        });
    }
    // u landed in the rounding sliver above the accumulated mass
    let (k, mut amps, q) = last.expect("k_max ≥ 0");
    let inv = Complex64::new(1.0 / q.sqrt(), 0.0);
    for a in amps.iter_mut() {
        *a *= inv;
    }
    Ok((k, FockState::from_amplitudes(amps)?, q))
}

/// Run one trajectory of the full cascade on an arbitrary signal state.
///
/// β is evaluated at slice midpoints `l_n = (n−½)θ²` (the continuum LO
/// diverges at `l = 0`; the midpoint rule needs no special casing). The
/// schedule sign flips after every odd-count step and the decision is the
/// parity of the total count mapped through the policy.
pub fn run_trajectory<R: Rng + ?Sized>(
    signal: &FockState,
    true_signal: usize,
    config: &ApparatusConfig,
    policy: &SchedulePolicy,
    rng: &mut R,
) -> Result<TrajectoryResult> {
    if (signal.norm_sqr() - 1.0).abs() > 1e-6 {
        return Err(CoreError::InvalidParameter(
            "trajectory input must be normalized".into(),
        ));
    }
    let th2 = config.theta * config.theta;
    let mut state = signal.normalized();
    let mut flips = 0usize;
    let mut jumps: Vec<(f64, u32)> = Vec::new();
    let mut log_weight = 0.0;
    for n in 1..=config.n_steps {
        let l_mid = (n as f64 - 0.5) * th2;
        let beta = config.clamp_beta(policy.beta(l_mid, flips));
        let (k, post, q) = step(&state, config.theta, beta, config.ancilla_cutoff, rng)?;
        state = post;
        log_weight += q.ln();
        if k > 0 {
            jumps.push((l_mid, k));
            if k % 2 == 1 {
                flips += 1;
            }
        }
    }
    let record = MeasurementRecord::new(jumps, config.horizon)?;
    let decision = policy.decision(record.parity());
    Ok(TrajectoryResult {
        record,
        decision,
        true_signal,
        log_weight,
    })
}

// ---------------------------------------------------------------------------
// coherent fast path
// ---------------------------------------------------------------------------

/// Per-step tables for the closed-form coherent path: the signal amplitude
/// decays deterministically (`γ_n = ±α cos^{n−1}θ`) and the LO takes one of
/// two values per step depending on the flip parity.
struct CoherentTables {
    sin_sq: f64,
    /// γ_n for the hypothesis-0 signal (+α); hypothesis 1 is its negative.
    gamma: Vec<Complex64>,
    /// β at the slice midpoint for even [0] / odd [1] flip parity.
    beta: [Vec<Complex64>; 2],
    /// `exp(−sin²θ |β − γ|²)` indexed `[signal][flip parity]`.
    p0: [[Vec<f64>; 2]; 2],
}

impl CoherentTables {
    fn build(policy: &SchedulePolicy, alpha: Complex64, config: &ApparatusConfig) -> Self {
        let n = config.n_steps;
        let th2 = config.theta * config.theta;
        let sin_sq = config.theta.sin().powi(2);
        let cos = config.theta.cos();
        let mut gamma = Vec::with_capacity(n);
        let mut beta = [Vec::with_capacity(n), Vec::with_capacity(n)];
        let mut decay = Complex64::new(1.0, 0.0);
        for i in 0..n {
            let l_mid = (i as f64 + 0.5) * th2;
            gamma.push(alpha * decay);
            beta[0].push(config.clamp_beta(policy.beta(l_mid, 0)));
            beta[1].push(config.clamp_beta(policy.beta(l_mid, 1)));
            decay *= Complex64::new(cos, 0.0);
        }
        let table = |sig: f64, fp: usize| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mu = sin_sq * (beta[fp][i] - gamma[i] * sig).norm_sqr();
                    (-mu).exp()
                })
                .collect()
        };
        let p0 = [
            [table(1.0, 0), table(1.0, 1)],
            [table(-1.0, 0), table(-1.0, 1)],
        ];
        Self {
            sin_sq,
            gamma,
            beta,
            p0,
        }
    }

    /// Total count parity of one trajectory (true distribution, one uniform
    /// draw per step; the Poisson tail reuses the same draw).
    fn sample_parity(&self, signal: usize, rng: &mut ChaCha8Rng) -> u64 {
        let sig = if signal == 0 { 1.0 } else { -1.0 };
        let mut fp = 0usize;
        let mut n_tot = 0u64;
        let p0_pair = &self.p0[signal];
        for i in 0..self.gamma.len() {
            let u: f64 = rng.gen();
            let p0 = p0_pair[fp][i];
            if u <= p0 {
                continue;
            }
            // inversion through the Poisson tail
            let mu = self.sin_sq * (self.beta[fp][i] - self.gamma[i] * sig).norm_sqr();
            let mut p = p0;
            let mut cum = p0;
            let mut k = 0u64;
            while u > cum && k < 500 {
                k += 1;
                p *= mu / k as f64;
                cum += p;
            }
            n_tot += k;
            if k % 2 == 1 {
                fp ^= 1;
            }
        }
        n_tot
    }
}

/// Odd/even parity counts per signal hypothesis from the fast coherent
/// path. Trajectory `i` uses ChaCha stream `i` of the master seed and
/// carries signal `+α` for even `i`, `−α` for odd `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParityCounts {
    pub n_plus: u64,
    pub odd_plus: u64,
    pub n_minus: u64,
    pub odd_minus: u64,
}

/// Simulate `n_traj` trajectories of coherent signals `±α` under `policy`
/// and tally odd-parity outcomes per hypothesis. Deterministic in `seed`
/// regardless of thread scheduling.
pub fn parity_statistics(
    policy: &SchedulePolicy,
    alpha: Complex64,
    config: &ApparatusConfig,
    n_traj: usize,
    seed: u64,
) -> Result<ParityCounts> {
    if n_traj == 0 {
        return Err(CoreError::InvalidParameter(
            "trajectory count must be positive".into(),
        ));
    }
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(CoreError::NonFiniteAmplitude);
    }
    let tables = CoherentTables::build(policy, alpha, config);
    let (odd_plus, odd_minus) = (0..n_traj)
        .into_par_iter()
        .with_min_len(512)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let signal = i % 2;
            let odd = tables.sample_parity(signal, &mut rng) % 2;
            if signal == 0 {
                (odd, 0u64)
            } else {
                (0u64, odd)
            }
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n_plus = (n_traj as u64).div_ceil(2);
    Ok(ParityCounts {
        n_plus,
        odd_plus,
        n_minus: n_traj as u64 - n_plus,
        odd_minus,
    })
}

/// Empirical error probability for discriminating equiprobable `±α` with
/// the sign-switching schedule: `(estimate, standard_error)`, deterministic
/// given `seed`.
pub fn empirical_error(
    alpha: Complex64,
    config: &ApparatusConfig,
    n_traj: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    let policy = SchedulePolicy::CoherentDolinar {
        alpha,
        initial_sign: Sign::Plus,
    };
    let counts = parity_statistics(&policy, alpha, config, n_traj, seed)?;
    // even parity decides hypothesis 0 (+α)
    let wrong = counts.odd_plus + (counts.n_minus - counts.odd_minus);
    let n = n_traj as f64;
    let p = wrong as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}

/// One row of a convergence sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub n_steps: usize,
    pub horizon: f64,
    pub alpha_sq: f64,
    pub empirical_error: f64,
    pub stderr: f64,
    pub helstrom_pe: f64,
}

/// Empirical error across a list of mixing angles at fixed horizon, rows
/// ordered by θ descending. Row `i` derives its seed from `(seed, i)`, so
/// the whole table is reproducible.
pub fn convergence_sweep(
    alpha: Complex64,
    theta_list: &[f64],
    horizon: f64,
    n_traj: usize,
    cutoff: usize,
    seed: u64,
) -> Result<Vec<SweepRow>> {
    if theta_list.is_empty() {
        return Err(CoreError::InvalidParameter(
            "sweep needs at least one mixing angle".into(),
        ));
    }
    let mut thetas = theta_list.to_vec();
    thetas.sort_by(|a, b| b.partial_cmp(a).expect("finite theta"));
    let pe = helstrom_pe(alpha);
    let mut rows = Vec::with_capacity(thetas.len());
    for (i, &theta) in thetas.iter().enumerate() {
        let row_seed = seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let config = ApparatusConfig::from_theta_horizon(theta, horizon, cutoff, row_seed)?;
        let (est, se) = empirical_error(alpha, &config, n_traj, row_seed)?;
        rows.push(SweepRow {
            theta,
            n_steps: config.n_steps,
            horizon: config.horizon,
            alpha_sq: alpha.norm_sqr(),
            empirical_error: est,
            stderr: se,
            helstrom_pe: pe,
        });
    }
    Ok(rows)
}

/// Monte Carlo qubit discrimination through the generic Fock path:
/// equiprobable `ω₀/ω₁` signals, parity decision, `(estimate, stderr)`.
pub fn qubit_empirical_error(
    f0: f64,
    f1: f64,
    phi: f64,
    config: &ApparatusConfig,
    n_traj: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_traj == 0 {
        return Err(CoreError::InvalidParameter(
            "trajectory count must be positive".into(),
        ));
    }
    let pair = crate::qubit::qubit_basis(f0, f1, phi, config.cutoff)?;
    let policy = SchedulePolicy::QubitDolinar { f0, f1, phi };
    let wrong: u64 = (0..n_traj)
        .into_par_iter()
        .with_min_len(16)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let true_signal = i % 2;
            let signal = if true_signal == 0 {
                &pair.omega0
            } else {
                &pair.omega1
            };
            let res = run_trajectory(signal, true_signal, config, &policy, &mut rng)
                .expect("trajectory step failure");
            u64::from(res.decision != true_signal)
        })
        .sum();
    let n = n_traj as f64;
    let p = wrong as f64 / n;
    Ok((p, (p * (1.0 - p) / n).sqrt()))
}
