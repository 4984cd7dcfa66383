//! Numerical form of the no-go analysis for finite detection schemes: the
//! orthogonality-preservation moment conditions and their first-order
//! closed forms, whose only solution is ν₁ = 0.
//!
//! The detected mode decomposes as `ĉ = ν₁ â + b_aux ĉ_aux + γ`. An
//! arbitrary auxiliary state enters the first-order condition only through
//! the scalar expectation of its term, so no auxiliary state is ever
//! constructed here.

use num_complex::Complex64;

use crate::coherent::CoherentSignalPair;
use crate::error::{CoreError, Result};
use crate::fock::{annihilation_apply, inner_product};
use crate::qubit::QubitBasisPair;

/// Decomposition of the first detected mode.
///
/// `aux_term` is the collapsed auxiliary expectation `⟨A|b_aux ĉ_aux|A⟩`;
/// the dagger variant entering the qubit condition is its conjugate
/// (`b_aux` is real).
#[derive(Clone, Copy, Debug)]
pub struct DetectionDecomposition {
    pub nu1: Complex64,
    pub gamma: Complex64,
    pub aux_term: Complex64,
}

impl DetectionDecomposition {
    pub fn new(nu1: Complex64, gamma: Complex64, aux_term: Complex64) -> Result<Self> {
        if nu1.norm() > 1.0 + 1e-12 {
            return Err(CoreError::InvalidParameter(format!(
                "|ν₁| ≤ 1 required (unitary matrix entry), got {}",
                nu1.norm()
            )));
        }
        Ok(Self {
            nu1,
            gamma,
            aux_term,
        })
    }

    /// `δ = ν₁* α* (γ + ⟨A|b_aux ĉ_aux|A⟩)` (coherent pair).
    pub fn delta_coherent(&self, alpha: Complex64) -> Complex64 {
        self.nu1.conj() * alpha.conj() * (self.gamma + self.aux_term)
    }

    /// `δ = ν₁ (γ* + ⟨A|b_aux ĉ_aux†|A⟩)` (qubit pair).
    pub fn delta_qubit(&self) -> Complex64 {
        self.nu1 * (self.gamma + self.aux_term).conj()
    }
}

/// Signal pair the moment conditions are evaluated on.
pub enum MomentPair<'a> {
    Coherent(&'a CoherentSignalPair),
    Qubit(&'a QubitBasisPair),
}

/// First-order residual for the coherent Helstrom pair:
/// `|ν₁|²|α|² − i √(1−κ²) Im δ`. The real part is `|ν₁|²|α|²` whatever the
/// auxiliary terms do, so the condition is satisfiable only at ν₁ = 0.
pub fn first_order_residual_coherent(
    nu1: Complex64,
    alpha: Complex64,
    delta: Complex64,
) -> Complex64 {
    let kappa_sq = (-4.0 * alpha.norm_sqr()).exp();
    Complex64::new(nu1.norm_sqr() * alpha.norm_sqr(), 0.0)
        - Complex64::new(0.0, (1.0 - kappa_sq).sqrt() * delta.im)
}

/// First-order residual for the qubit pair: `|ν₁|² − 2i Im δ`.
pub fn first_order_residual_qubit(nu1: Complex64, delta: Complex64) -> Complex64 {
    Complex64::new(nu1.norm_sqr(), 0.0) - Complex64::new(0.0, 2.0 * delta.im)
}

/// Orthogonality-preservation condition `⟨A|⟨ω₀|(ĉ†)ⁿ ĉⁿ|ω₁⟩|A⟩ = 0`,
/// evaluated from the Fock amplitudes of the pair.
///
/// * `n = 0` returns `⟨ω₀|ω₁⟩`.
/// * `n = 1` returns the left-minus-right residual of the printed
///   first-order condition: the raw sesquilinear expectation rescaled onto
///   the closed-form normalization (`(1−κ²)/(2κ)` for the coherent pair;
///   `−2 · conj` for the qubit pair, whose printed condition uses the
///   opposite bra/ket ordering).
/// * `n ≥ 2` needs an explicit auxiliary state and is rejected.
pub fn moment_condition(
    n: usize,
    pair: &MomentPair<'_>,
    decomposition: &DetectionDecomposition,
) -> Result<Complex64> {
    let (omega0, omega1) = match pair {
        MomentPair::Coherent(p) => (&p.omega0, &p.omega1),
        MomentPair::Qubit(p) => (&p.omega0, &p.omega1),
    };
    match n {
        0 => inner_product(omega0, omega1),
        1 => {
            let a0 = annihilation_apply(omega0);
            let a1 = annihilation_apply(omega1);
            let nu1 = decomposition.nu1;
            let shift = decomposition.gamma + decomposition.aux_term;
            // ⟨ω₀|ĉ†ĉ|ω₁⟩ with ⟨ω₀|ω₁⟩ = 0 killing the scalar term
            let raw = nu1.norm_sqr() * inner_product(&a0, &a1)?
                + nu1.conj() * shift * inner_product(&a0, omega1)?
                + nu1 * shift.conj() * inner_product(omega0, &a1)?;
            Ok(match pair {
                MomentPair::Coherent(p) => {
                    let kappa = p.kappa;
                    raw * Complex64::new((1.0 - kappa * kappa) / (2.0 * kappa), 0.0)
                }
                MomentPair::Qubit(_) => raw.conj() * Complex64::new(-2.0, 0.0),
            })
        }
        _ => Err(CoreError::InvalidParameter(format!(
            "moment condition implemented for n ∈ {{0, 1}} only, got {n}"
        ))),
    }
}
