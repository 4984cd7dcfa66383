//! Truncated Fock-space states and the elementary single- and two-mode
//! operators: coherent states, displacements, beamsplitters, annihilation
//! and number damping.
//!
//! Mode conventions used throughout the crate:
//!
//! * mode A is the signal, mode B the detected ancilla;
//! * the beamsplitter is `B(θ) = exp[θ(a†b − ab†)]`, which sends a coherent
//!   product `|γ⟩_A |0⟩_B` to `|γ cosθ⟩_A |−γ sinθ⟩_B`;
//! * the displacement is `D(γ) = exp(γ b† − γ* b)`.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::linalg;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Poisson-tail bound used by [`default_cutoff`].
pub const CUTOFF_TAIL_TOLERANCE: f64 = 1e-12;
/// Smallest cutoff ever returned by [`default_cutoff`].
pub const MIN_CUTOFF: usize = 15;

/// A single-mode state in the photon-number basis `|0⟩ .. |cutoff⟩`.
///
/// States produced by conditional (Kraus) evolution are deliberately left
/// unnormalized; their squared norm is the branch weight. The zero vector is
/// representable and marks an impossible branch.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    amps: Array1<Complex64>,
}

impl FockState {
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(CoreError::InvalidParameter(
                "a Fock state needs at least the vacuum amplitude".into(),
            ));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(CoreError::NonFiniteAmplitude);
        }
        Ok(Self {
            amps: Array1::from(amps),
        })
    }

    pub fn vacuum(cutoff: usize) -> Self {
        let mut amps = Array1::from_elem(cutoff + 1, ZERO);
        amps[0] = ONE;
        Self { amps }
    }

    /// The number state `|m⟩`.
    pub fn number(m: usize, cutoff: usize) -> Result<Self> {
        if m > cutoff {
            return Err(CoreError::InvalidParameter(format!(
                "number state |{m}⟩ exceeds cutoff {cutoff}"
            )));
        }
        let mut amps = Array1::from_elem(cutoff + 1, ZERO);
        amps[m] = ONE;
        Ok(Self { amps })
    }

    /// All-zero vector (impossible branch marker).
    pub fn zero(cutoff: usize) -> Self {
        Self {
            amps: Array1::from_elem(cutoff + 1, ZERO),
        }
    }

    pub fn cutoff(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amps(&self) -> &Array1<Complex64> {
        &self.amps
    }

    pub fn amp(&self, m: usize) -> Complex64 {
        self.amps[m]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            amps: self.amps.mapv(|z| z * c),
        }
    }

    /// Unit-norm copy; the zero vector is returned unchanged.
    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(Complex64::new(1.0 / n, 0.0))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.cutoff() != other.cutoff() {
            return Err(CoreError::CutoffMismatch(self.cutoff(), other.cutoff()));
        }
        Ok(Self {
            amps: &self.amps + &other.amps,
        })
    }

    pub(crate) fn from_array(amps: Array1<Complex64>) -> Self {
        Self { amps }
    }
}

/// Smallest cutoff whose Poisson tail for mean `|alpha|²` drops below
/// [`CUTOFF_TAIL_TOLERANCE`], floored at [`MIN_CUTOFF`]. Keeps truncation
/// error far below every test tolerance in the crate.
pub fn default_cutoff(alpha: Complex64) -> usize {
    let lambda = alpha.norm_sqr();
    if lambda == 0.0 {
        return MIN_CUTOFF;
    }
    let mut pmf = (-lambda).exp();
    let mut tail = 1.0 - pmf;
    let mut n = 0usize;
    while tail > CUTOFF_TAIL_TOLERANCE && n < 4096 {
        n += 1;
        pmf *= lambda / n as f64;
        tail -= pmf;
        if tail < 0.0 {
            tail = 0.0;
        }
    }
    n.max(MIN_CUTOFF)
}

/// Truncated coherent state `|α⟩`, amplitudes `e^{−|α|²/2} α^m / √(m!)`.
///
/// Not renormalized after truncation, so the missing Poisson tail shows up
/// as a norm deficit.
pub fn make_coherent(alpha: Complex64, cutoff: usize) -> Result<FockState> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(CoreError::NonFiniteAmplitude);
    }
    let mut amps = Array1::from_elem(cutoff + 1, ZERO);
    let mut c = Complex64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps[0] = c;
    for m in 1..=cutoff {
        c = c * alpha / Complex64::new((m as f64).sqrt(), 0.0);
        amps[m] = c;
    }
    Ok(FockState { amps })
}

/// `⟨s0|s1⟩`, conjugate-linear in the first argument.
pub fn inner_product(s0: &FockState, s1: &FockState) -> Result<Complex64> {
    if s0.cutoff() != s1.cutoff() {
        return Err(CoreError::CutoffMismatch(s0.cutoff(), s1.cutoff()));
    }
    Ok(s0
        .amps
        .iter()
        .zip(s1.amps.iter())
        .map(|(a, b)| a.conj() * b)
        .sum())
}

/// Number damping `exp[−(L/2) a†a]`: amplitude `m` picks up `e^{−mL/2}`.
pub fn damping_apply(state: &FockState, l: f64) -> Result<FockState> {
    if !(l >= 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "damping parameter must be nonnegative, got {l}"
        )));
    }
    let amps = Array1::from_iter(
        state
            .amps
            .iter()
            .enumerate()
            .map(|(m, z)| z * Complex64::new((-(m as f64) * l / 2.0).exp(), 0.0)),
    );
    Ok(FockState { amps })
}

/// Annihilation `a`: `(aψ)_m = √(m+1) ψ_{m+1}`. The amplitude at the cutoff
/// is dropped (truncation loss).
pub fn annihilation_apply(state: &FockState) -> FockState {
    let c = state.cutoff();
    let mut amps = Array1::from_elem(c + 1, ZERO);
    for m in 0..c {
        amps[m] = Complex64::new(((m + 1) as f64).sqrt(), 0.0) * state.amps[m + 1];
    }
    FockState { amps }
}

// ---------------------------------------------------------------------------
// matrices
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorLabel {
    Displacement,
    BeamsplitterReduced,
    Damping,
    Annihilation,
}

/// A dense single-mode operator on the truncated space.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub entries: Array2<Complex64>,
    pub label: OperatorLabel,
}

impl OperatorMatrix {
    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, state: &FockState) -> Result<FockState> {
        if self.dim() != state.cutoff() + 1 {
            return Err(CoreError::CutoffMismatch(self.dim() - 1, state.cutoff()));
        }
        Ok(FockState {
            amps: self.entries.dot(&state.amps),
        })
    }

    pub fn dagger(&self) -> Array2<Complex64> {
        self.entries.t().mapv(|z| z.conj())
    }
}

pub fn annihilation_matrix(cutoff: usize) -> OperatorMatrix {
    let mut m = Array2::from_elem((cutoff + 1, cutoff + 1), ZERO);
    for n in 1..=cutoff {
        m[[n - 1, n]] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    OperatorMatrix {
        entries: m,
        label: OperatorLabel::Annihilation,
    }
}

pub fn creation_matrix(cutoff: usize) -> Array2<Complex64> {
    annihilation_matrix(cutoff).entries.t().mapv(|z| z.conj())
}

pub fn damping_matrix(l: f64, cutoff: usize) -> Result<OperatorMatrix> {
    if !(l >= 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "damping parameter must be nonnegative, got {l}"
        )));
    }
    let mut m = Array2::from_elem((cutoff + 1, cutoff + 1), ZERO);
    for n in 0..=cutoff {
        m[[n, n]] = Complex64::new((-(n as f64) * l / 2.0).exp(), 0.0);
    }
    Ok(OperatorMatrix {
        entries: m,
        label: OperatorLabel::Damping,
    })
}

/// Matrix element `⟨m|D(γ)|n⟩` of the untruncated displacement operator,
/// via the associated-Laguerre closed form. Serves as the analytic oracle
/// for the exponential construction and for leakage estimates.
pub fn displacement_element(gamma: Complex64, m: usize, n: usize) -> Complex64 {
    let x = gamma.norm_sqr();
    let (lo, hi, pref) = if m >= n {
        (n, m, gamma.powu((m - n) as u32))
    } else {
        (m, n, (-gamma.conj()).powu((n - m) as u32))
    };
    let k = hi - lo;
    // √(lo!/hi!) = 1/√((lo+1)(lo+2)..hi)
    let mut ratio = 1.0;
    for j in (lo + 1)..=hi {
        ratio /= j as f64;
    }
    let lag = associated_laguerre(lo, k as i32, x);
    pref * Complex64::new(ratio.sqrt() * (-x / 2.0).exp() * lag, 0.0)
}

fn associated_laguerre(n: usize, k: i32, x: f64) -> f64 {
    let kf = k as f64;
    let lm1 = 1.0; // L_0
    if n == 0 {
        return lm1;
    }
    let mut lm1 = lm1;
    let mut l = 1.0 + kf - x; // L_1
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * l - (jf + kf) * lm1) / (jf + 1.0);
        lm1 = l;
        l = next;
    }
    l
}

/// Norm lost outside the truncated space when the exact `D(γ)` acts on `|j⟩`.
pub fn displacement_column_leakage(gamma: Complex64, cutoff: usize, j: usize) -> f64 {
    let captured: f64 = (0..=cutoff)
        .map(|m| displacement_element(gamma, m, j).norm_sqr())
        .sum();
    (1.0 - captured).max(0.0)
}

/// Displacement `D(γ) = exp(γ a† − γ* a)` as an exact matrix exponential of
/// the truncated generator (hence exactly unitary on the truncated space).
///
/// Rejects amplitudes whose exact operator would leak more than `1e-8` of a
/// low-lying column (`j ≤ cutoff/3`) outside the cutoff, since entries are
/// then unreliable there.
pub fn displacement_matrix(gamma: Complex64, cutoff: usize) -> Result<OperatorMatrix> {
    if !gamma.re.is_finite() || !gamma.im.is_finite() {
        return Err(CoreError::NonFiniteAmplitude);
    }
    const LEAK_TOL: f64 = 1e-8;
    let leakage = (0..=cutoff / 3)
        .map(|j| displacement_column_leakage(gamma, cutoff, j))
        .fold(0.0, f64::max);
    if leakage > LEAK_TOL {
        return Err(CoreError::TruncationLeakage {
            leakage,
            tolerance: LEAK_TOL,
        });
    }
    let dim = cutoff + 1;
    let mut gen = Array2::from_elem((dim, dim), ZERO);
    for n in 0..cutoff {
        let s = Complex64::new(((n + 1) as f64).sqrt(), 0.0);
        gen[[n + 1, n]] = gamma * s; // γ a†
        gen[[n, n + 1]] = -gamma.conj() * s; // −γ* a
    }
    Ok(OperatorMatrix {
        entries: linalg::expm(&gen),
        label: OperatorLabel::Displacement,
    })
}

// ---------------------------------------------------------------------------
// two-mode states
// ---------------------------------------------------------------------------

/// Two-mode state, amplitudes indexed `(n_A, n_B)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoModeState {
    amps: Array2<Complex64>,
}

impl TwoModeState {
    pub fn from_array(amps: Array2<Complex64>) -> Self {
        Self { amps }
    }

    /// `signal ⊗ |0⟩_B` with ancilla cutoff `cutoff_b`.
    pub fn signal_with_vacuum(signal: &FockState, cutoff_b: usize) -> Self {
        let mut amps = Array2::from_elem((signal.cutoff() + 1, cutoff_b + 1), ZERO);
        for (n, z) in signal.amps().iter().enumerate() {
            amps[[n, 0]] = *z;
        }
        Self { amps }
    }

    pub fn product(a: &FockState, b: &FockState) -> Self {
        let mut amps = Array2::from_elem((a.cutoff() + 1, b.cutoff() + 1), ZERO);
        for (na, za) in a.amps().iter().enumerate() {
            for (nb, zb) in b.amps().iter().enumerate() {
                amps[[na, nb]] = za * zb;
            }
        }
        Self { amps }
    }

    pub fn amps(&self) -> &Array2<Complex64> {
        &self.amps
    }

    pub fn cutoff_a(&self) -> usize {
        self.amps.nrows() - 1
    }

    pub fn cutoff_b(&self) -> usize {
        self.amps.ncols() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn overlap(&self, other: &TwoModeState) -> Complex64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Project mode B onto `|k⟩`, returning the unnormalized signal state.
    pub fn project_b(&self, k: usize) -> FockState {
        let col = self.amps.column(k).to_owned();
        FockState { amps: col }
    }

    /// Displace mode B only: `(I ⊗ D)`.
    pub fn displace_b(&self, d: &OperatorMatrix) -> Result<TwoModeState> {
        if d.dim() != self.cutoff_b() + 1 {
            return Err(CoreError::CutoffMismatch(d.dim() - 1, self.cutoff_b()));
        }
        // rows of amps are B-vectors; apply D on the right transposed
        let out = self.amps.dot(&d.entries.t().to_owned());
        Ok(TwoModeState { amps: out })
    }
}

/// Two-mode beamsplitter `B(θ) = exp[θ(a†b − ab†)]`.
///
/// The generator conserves total photon number, so it is exponentiated
/// exactly block-by-block (one block per total `n_A + n_B`, clipped to the
/// rectangular truncation). Norm is preserved up to the clipping.
pub fn apply_beamsplitter(state: &TwoModeState, theta: f64) -> Result<TwoModeState> {
    if !(0.0..std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(CoreError::InvalidParameter(format!(
            "beamsplitter angle must lie in [0, π/2), got {theta}"
        )));
    }
    let ca = state.cutoff_a();
    let cb = state.cutoff_b();
    let mut out = Array2::from_elem((ca + 1, cb + 1), ZERO);

    for s in 0..=(ca + cb) {
        let na_min = s.saturating_sub(cb);
        let na_max = s.min(ca);
        if na_min > na_max {
            continue;
        }
        let dim = na_max - na_min + 1;
        // generator block: ⟨nA+1, nB−1| θ(a†b − ab†) |nA, nB⟩ = θ√((nA+1)nB)
        let mut gen = Array2::from_elem((dim, dim), ZERO);
        for i in 0..dim.saturating_sub(1) {
            let na = na_min + i;
            let nb = s - na;
            let v = theta * (((na + 1) * nb) as f64).sqrt();
            gen[[i + 1, i]] = Complex64::new(v, 0.0);
            gen[[i, i + 1]] = Complex64::new(-v, 0.0);
        }
        let u = linalg::expm(&gen);
        for i in 0..dim {
            let mut acc = ZERO;
            for j in 0..dim {
                let naj = na_min + j;
                acc += u[[i, j]] * state.amps[[naj, s - naj]];
            }
            let nai = na_min + i;
            out[[nai, s - nai]] = acc;
        }
    }
    Ok(TwoModeState { amps: out })
}
