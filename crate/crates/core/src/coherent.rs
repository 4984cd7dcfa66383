//! Minimum-error discrimination of the binary coherent signals
//! `{|α⟩, |−α⟩}`: the orthonormal measurement basis, its error-probability
//! formulas, the displacement schedules `β±(l)` with sign switching on
//! detections, analytic final-state classification, and an independent
//! brute-force optimum as oracle.

use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::fock::{inner_product, make_coherent, FockState};
use crate::kraus::{MeasurementRecord, Schedule};

#[cfg(test)]
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Which of the two displacement solutions `β±` a schedule starts from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flipped(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Sign after `flips` switches.
    pub fn after(self, flips: usize) -> Sign {
        if flips % 2 == 0 {
            self
        } else {
            self.flipped()
        }
    }
}

// --- error-probability kinematics -----------------------------------------
//
// κ = ⟨α|−α⟩ = e^{−2|α|²}. After interaction length l the effective overlap
// parameter is κ_l = e^{−2|α|²(1−e^{−l})} and
//
//   P_e^l = (1 − √(1−κ_l²))/2 ,  √(1−κ_l²) computed via expm1 for stability.

fn one_minus_exp_neg(l: f64) -> f64 {
    -(-l).exp_m1()
}

/// `κ_l = e^{−2|α|²(1−e^{−l})}`; equals `κ` in the limit `l → ∞`.
pub fn kappa_rel(alpha: Complex64, l: f64) -> f64 {
    (-2.0 * alpha.norm_sqr() * one_minus_exp_neg(l)).exp()
}

fn v_param(alpha_sq: f64, l: f64) -> f64 {
    // v = √(1 − κ_l²) = 1 − 2 P_e^l
    (-(-4.0 * alpha_sq * one_minus_exp_neg(l)).exp_m1()).sqrt()
}

fn atanh_v(alpha_sq: f64, l: f64) -> f64 {
    // artanh(v) = ln(1+v) − ½ ln(1−v²), and 1−v² = κ_l² exactly
    let v = v_param(alpha_sq, l);
    (1.0 + v).ln() + 2.0 * alpha_sq * one_minus_exp_neg(l)
}

/// Minimum error probability for equiprobable `{|α⟩, |−α⟩}`:
/// `P_e = (1 − √(1−κ²))/2`.
pub fn helstrom_pe(alpha: Complex64) -> f64 {
    let kappa_sq = (-4.0 * alpha.norm_sqr()).exp();
    kappa_sq / (2.0 * (1.0 + (-(-4.0 * alpha.norm_sqr()).exp_m1()).sqrt()))
}

/// Error probability available after interaction length `l`:
/// `P_e^l = (1 − √(1 − e^{−4|α|²(1−e^{−l})}))/2`, with `P_e^0 = 1/2` and
/// `P_e^∞ = P_e`.
pub fn pe_at_l(alpha: Complex64, l: f64) -> Result<f64> {
    if !(l >= 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "interaction length must be nonnegative, got {l}"
        )));
    }
    let alpha_sq = alpha.norm_sqr();
    let x = (-4.0 * alpha_sq * one_minus_exp_neg(l)).exp();
    Ok(x / (2.0 * (1.0 + v_param(alpha_sq, l))))
}

/// The orthonormal measurement basis achieving `P_e`, together with the
/// generating signal parameters.
#[derive(Clone, Debug)]
pub struct CoherentSignalPair {
    pub alpha: Complex64,
    pub kappa: f64,
    pub pe: f64,
    pub omega0: FockState,
    pub omega1: FockState,
    /// Equal priors; the receiver is derived for this case only.
    pub priors: (f64, f64),
}

/// Build `|ω₀⟩, |ω₁⟩` from the signal amplitude:
///
/// ```text
/// |ω₀⟩ = √((1−P_e)/(1−κ²)) |α⟩ − √(P_e/(1−κ²)) |−α⟩
/// |ω₁⟩ = √(P_e/(1−κ²)) |α⟩ − √((1−P_e)/(1−κ²)) |−α⟩
/// ```
pub fn helstrom_basis(alpha: Complex64, cutoff: usize) -> Result<CoherentSignalPair> {
    if alpha.norm_sqr() == 0.0 {
        return Err(CoreError::DegenerateSignal);
    }
    let kappa = (-2.0 * alpha.norm_sqr()).exp();
    let pe = helstrom_pe(alpha);
    let denom = 1.0 - kappa * kappa;
    let plus = make_coherent(alpha, cutoff)?;
    let minus = make_coherent(-alpha, cutoff)?;
    let a = Complex64::new(((1.0 - pe) / denom).sqrt(), 0.0);
    let b = Complex64::new((pe / denom).sqrt(), 0.0);
    let omega0 = plus.scaled(a).add(&minus.scaled(-b))?;
    let omega1 = plus.scaled(b).add(&minus.scaled(-a))?;
    Ok(CoherentSignalPair {
        alpha,
        kappa,
        pe,
        omega0,
        omega1,
        priors: (0.5, 0.5),
    })
}

/// Minimum average error probability for discriminating two pure states
/// with the given priors — the independent oracle. Computed from the
/// eigenvalues of `p₀|s₀⟩⟨s₀| − p₁|s₁⟩⟨s₁|` in the two-dimensional span:
/// `P_err = (1 − |λ₊| − |λ₋|)/2`.
pub fn brute_force_helstrom(s0: &FockState, s1: &FockState, priors: (f64, f64)) -> Result<f64> {
    let (p0, p1) = priors;
    if p0 < 0.0 || p1 < 0.0 || (p0 + p1 - 1.0).abs() > 1e-12 {
        return Err(CoreError::InvalidParameter(format!(
            "priors must be nonnegative and sum to 1, got ({p0}, {p1})"
        )));
    }
    let n0 = s0.norm();
    let n1 = s1.norm();
    if n0 == 0.0 || n1 == 0.0 {
        return Err(CoreError::InvalidParameter(
            "cannot discriminate a zero state".into(),
        ));
    }
    let e0 = s0.scaled(Complex64::new(1.0 / n0, 0.0));
    let u1 = s1.scaled(Complex64::new(1.0 / n1, 0.0));
    let c = inner_product(&e0, &u1)?;
    let s_sq = (1.0 - c.norm_sqr()).max(0.0);
    if s_sq < 1e-28 {
        // identical states up to phase: guessing the likelier one is optimal
        return Ok(p0.min(p1));
    }
    // Λ in the orthonormal basis {e₀, e₂}, with |ŝ₁⟩ = c e₀ + s e₂
    let s = s_sq.sqrt();
    let t00 = p0 - p1 * c.norm_sqr();
    let t11 = -p1 * s_sq;
    let t01 = -p1 * c * Complex64::new(s, 0.0);
    let tr = t00 + t11;
    let det = t00 * t11 - t01.norm_sqr();
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let l_plus = 0.5 * (tr + disc);
    let l_minus = 0.5 * (tr - disc);
    Ok(0.5 * (1.0 - l_plus.abs() - l_minus.abs()))
}

// --- displacement schedules -------------------------------------------------

/// The orthogonality-preserving local-oscillator function
///
/// ```text
/// β±(l) = ± α e^{−l/2} / √(1 − exp[−4|α|²(1−e^{−l})])
/// ```
///
/// Diverges like `(α/|α|)/(2√l)` as `l → 0`; the integral against
/// `e^{−l/2}` stays finite. For `α = 0` the schedule is defined as zero
/// (degenerate signal, no information to extract).
pub fn beta_pm(l: f64, alpha: Complex64, sign: Sign) -> Result<Complex64> {
    if !(l > 0.0) {
        return Err(CoreError::InvalidParameter(format!(
            "β±(l) requires l > 0, got {l}"
        )));
    }
    let alpha_sq = alpha.norm_sqr();
    if alpha_sq == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let v = v_param(alpha_sq, l);
    Ok(alpha * Complex64::new(sign.as_f64() * (-l / 2.0).exp() / v, 0.0))
}

/// `∫_{l0}^{l1} β_σ*(l) e^{−l/2} dl` in closed form:
/// `σ (α*/|α|²) · [artanh(v(l1)) − artanh(v(l0))]/2` with `v = √(1−κ_l²)`.
pub fn beta_segment_integral(l0: f64, l1: f64, alpha: Complex64, sign: Sign) -> Complex64 {
    let alpha_sq = alpha.norm_sqr();
    if alpha_sq == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let delta = 0.5 * (atanh_v(alpha_sq, l1) - atanh_v(alpha_sq, l0));
    alpha.conj() * Complex64::new(sign.as_f64() * delta / alpha_sq, 0.0)
}

/// Feedforward schedule for the coherent pair: start from `β₊` (or `β₋`)
/// and switch sign on every odd-count detection.
#[derive(Clone, Copy, Debug)]
pub struct CoherentSchedule {
    pub alpha: Complex64,
    pub initial_sign: Sign,
}

impl CoherentSchedule {
    pub fn new(alpha: Complex64) -> Self {
        Self {
            alpha,
            initial_sign: Sign::Plus,
        }
    }

    pub fn with_sign(alpha: Complex64, initial_sign: Sign) -> Self {
        Self {
            alpha,
            initial_sign,
        }
    }
}

impl Schedule for CoherentSchedule {
    fn beta(&self, l: f64, flips: usize) -> Complex64 {
        beta_pm(l.max(f64::MIN_POSITIVE), self.alpha, self.initial_sign.after(flips))
            .expect("positive l")
    }

    fn segment_integral(&self, l0: f64, l1: f64, flips: usize) -> Complex64 {
        beta_segment_integral(l0, l1, self.alpha, self.initial_sign.after(flips))
    }
}

/// One maximal no-count interval of a schedule reconstruction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SignSegment {
    pub l0: f64,
    pub l1: f64,
    pub sign: Sign,
}

/// Reconstruct the per-interval sign state from a record: interval `j`
/// carries `initial_sign` flipped once per odd-count jump before it.
pub fn schedule_from_record(initial_sign: Sign, record: &MeasurementRecord) -> Vec<SignSegment> {
    let mut segments = Vec::with_capacity(record.jumps().len() + 1);
    let mut sign = initial_sign;
    let mut pos = 0.0;
    for &(lj, k) in record.jumps() {
        segments.push(SignSegment {
            l0: pos,
            l1: lj,
            sign,
        });
        if k % 2 == 1 {
            sign = sign.flipped();
        }
        pos = lj;
    }
    segments.push(SignSegment {
        l0: pos,
        l1: record.horizon(),
        sign,
    });
    segments
}

/// Conditional basis states after a full record, in the canonical
/// normalization of the telescoped closed form.
#[derive(Clone, Debug)]
pub struct ClassifiedPair {
    pub state0: FockState,
    pub state1: FockState,
    pub orthogonality_residual: f64,
    /// Index of the hypothesis compatible with the record parity.
    pub surviving: usize,
}

/// Analytic final states after the jump/no-jump string of `record` at
/// horizon `l`, classified by the parity of the total count.
///
/// The closed form telescopes over the record: only the parity of `N_tot`
/// survives in the coefficients,
///
/// ```text
/// even: |ω₀^L⟩ ∝ √(1−P_e)√(1−P_e^L)|αe^{−L/2}⟩ − √P_e √(P_e^L)|−αe^{−L/2}⟩
///       |ω₁^L⟩ ∝ √P_e √(1−P_e^L)|αe^{−L/2}⟩ − √(1−P_e)√(P_e^L)|−αe^{−L/2}⟩
/// ```
///
/// with the `P_e^L ↔ 1−P_e^L` roles swapped for odd parity. Starting from
/// `β₋` swaps the roles again and flips the parity→hypothesis map.
pub fn evolve_and_classify(
    pair: &CoherentSignalPair,
    record: &MeasurementRecord,
    horizon: f64,
    initial_sign: Sign,
) -> Result<ClassifiedPair> {
    if horizon != record.horizon() {
        return Err(CoreError::InvalidRecord(format!(
            "horizon {horizon} does not match record horizon {}",
            record.horizon()
        )));
    }
    let cutoff = pair.omega0.cutoff();
    let pe = pair.pe;
    let pe_l = pe_at_l(pair.alpha, horizon)?;
    let parity = record.parity();
    let swapped = (parity == 1) ^ (initial_sign == Sign::Minus);
    let (f_keep, f_decay) = if swapped {
        (pe_l, 1.0 - pe_l)
    } else {
        (1.0 - pe_l, pe_l)
    };
    let decay = Complex64::new((-horizon / 2.0).exp(), 0.0);
    let plus = make_coherent(pair.alpha * decay, cutoff)?;
    let minus = make_coherent(-pair.alpha * decay, cutoff)?;
    let coeff = |x: f64, y: f64| Complex64::new((x * y).sqrt(), 0.0);

    let state0 = plus
        .scaled(coeff(1.0 - pe, f_keep))
        .add(&minus.scaled(-coeff(pe, f_decay)))?;
    let state1 = plus
        .scaled(coeff(pe, f_keep))
        .add(&minus.scaled(-coeff(1.0 - pe, f_decay)))?;
    let residual = inner_product(&state0, &state1)?.norm();
    let surviving = if initial_sign == Sign::Plus {
        parity
    } else {
        1 - parity
    };
    Ok(ClassifiedPair {
        state0,
        state1,
        orthogonality_residual: residual,
        surviving,
    })
}

/// Closed-form jump factors `β₊(L) ∓ αe^{−L/2}` (the coherent eigenvalues
/// of `Ĵ_L` on the two decaying signal branches):
///
/// ```text
/// β₊(L) − αe^{−L/2} = 2 P_e^L     αe^{−L/2} / √(1−κ_L²)
/// β₊(L) + αe^{−L/2} = 2 (1−P_e^L) αe^{−L/2} / √(1−κ_L²)
/// ```
pub fn jump_factor(l: f64, alpha: Complex64, branch_sign: Sign) -> Result<Complex64> {
    let pe_l = pe_at_l(alpha, l)?;
    let v = v_param(alpha.norm_sqr(), l);
    let p = match branch_sign {
        Sign::Plus => pe_l,        // β₊(L) − αe^{−L/2}
        Sign::Minus => 1.0 - pe_l, // β₊(L) + αe^{−L/2}
    };
    Ok(alpha * Complex64::new(2.0 * p * (-l / 2.0).exp() / v, 0.0))
}

/// The branch-independent scalar in front of the `Ĵ Ŝ` relations for the
/// `β₊` process over `[l_j, l']`:
///
/// ```text
/// Ĵ_{l'} Ŝ |±αe^{−l_j/2}⟩ = c · r_± |±αe^{−l'/2}⟩ ,
/// r_+ = √(P_e^{l'})/√(1−P_e^{l_j}) ,  r_− = √(1−P_e^{l'})/√(P_e^{l_j}) ,
/// c = e^{−|α|²(e^{−l'}−e^{−l_j})/2} · αe^{−l'/2} · κ_{l'} / √(1−κ_{l'}²).
/// ```
pub fn jump_relation_scalar(l_j: f64, l_next: f64, alpha: Complex64) -> Complex64 {
    let alpha_sq = alpha.norm_sqr();
    let delta = (-l_next).exp() - (-l_j).exp();
    let damp = (-alpha_sq * delta / 2.0).exp();
    let k_rel = kappa_rel(alpha, l_next);
    let v = v_param(alpha_sq, l_next);
    alpha * Complex64::new(damp * (-l_next / 2.0).exp() * k_rel / v, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::default_cutoff;
    use crate::kraus::{
        apply_record, j_operator_apply, s_operator_apply, ContinuumSegment,
    };
    use crate::quad;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn helstrom_pe_limits() {
        assert!((helstrom_pe(c(0.0, 0.0)) - 0.5).abs() < 1e-15);
        assert!(helstrom_pe(c(20.0, 0.0)) < 1e-300);
        // |α|² = 0.2
        let alpha = c(0.2_f64.sqrt(), 0.0);
        let want = 0.5 * (1.0 - (1.0 - (-0.8_f64).exp()).sqrt());
        assert!((helstrom_pe(alpha) - want).abs() < 1e-14);
    }

    #[test]
    fn pe_formula_consistency_with_brute_force() {
        for &a in &[0.3, 0.6, 1.1] {
            let alpha = c(a, 0.0);
            let cut = default_cutoff(alpha);
            let s0 = make_coherent(alpha, cut).unwrap();
            let s1 = make_coherent(-alpha, cut).unwrap();
            let bf = brute_force_helstrom(&s0, &s1, (0.5, 0.5)).unwrap();
            assert!(
                (bf - helstrom_pe(alpha)).abs() < 1e-10,
                "α={a}: {bf} vs {}",
                helstrom_pe(alpha)
            );
        }
    }

    #[test]
    fn brute_force_edge_cases() {
        let cut = 10;
        let v = FockState::vacuum(cut);
        let one = FockState::number(1, cut).unwrap();
        assert!(brute_force_helstrom(&v, &one, (0.5, 0.5)).unwrap() < 1e-14);
        assert!((brute_force_helstrom(&v, &v, (0.3, 0.7)).unwrap() - 0.3).abs() < 1e-14);
        assert!(brute_force_helstrom(&v, &one, (0.4, 0.7)).is_err());
    }

    #[test]
    fn pe_at_l_interpolates_between_half_and_pe() {
        let alpha = c(0.8, 0.0);
        assert!((pe_at_l(alpha, 0.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((pe_at_l(alpha, 500.0).unwrap() - helstrom_pe(alpha)).abs() < 1e-14);
        let mut prev = 0.5;
        for i in 1..=60 {
            let l = 0.25 * i as f64;
            let p = pe_at_l(alpha, l).unwrap();
            assert!(p < prev, "P_e^l not decreasing at l={l}");
            prev = p;
        }
        assert!(pe_at_l(alpha, -1.0).is_err());
    }

    #[test]
    fn helstrom_basis_is_orthonormal() {
        let pair = helstrom_basis(c(0.7, 0.0), default_cutoff(c(0.7, 0.0))).unwrap();
        assert!(inner_product(&pair.omega0, &pair.omega1).unwrap().norm() < 1e-10);
        assert!((pair.omega0.norm() - 1.0).abs() < 1e-10);
        assert!((pair.omega1.norm() - 1.0).abs() < 1e-10);
        assert!(matches!(
            helstrom_basis(c(0.0, 0.0), 10),
            Err(CoreError::DegenerateSignal)
        ));
    }

    #[test]
    fn helstrom_basis_large_alpha_approaches_signal() {
        let alpha = c(3.0, 0.0);
        let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
        let sig = make_coherent(alpha, pair.omega0.cutoff()).unwrap();
        let ov = inner_product(&pair.omega0, &sig).unwrap().norm();
        assert!(1.0 - ov < 1e-6, "overlap deficit {}", 1.0 - ov);
    }

    #[test]
    fn omega0_overlap_gives_success_probability() {
        let alpha = c(0.9, 0.0);
        let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
        let sig = make_coherent(alpha, pair.omega0.cutoff()).unwrap();
        let p_ok = inner_product(&pair.omega0, &sig).unwrap().norm_sqr();
        assert!((p_ok - (1.0 - pair.pe)).abs() < 1e-10);
    }

    #[test]
    fn beta_pm_limit_and_errors() {
        let alpha = c(0.8, 0.0);
        let l = 40.0;
        let want = alpha * c((-l / 2.0_f64).exp() / (1.0 - (-4.0 * 0.64_f64).exp()).sqrt(), 0.0);
        let got = beta_pm(l, alpha, Sign::Plus).unwrap();
        assert!((got - want).norm() < 1e-25);
        assert!(beta_pm(0.0, alpha, Sign::Plus).is_err());
        assert!(beta_pm(-1.0, alpha, Sign::Minus).is_err());
        assert_eq!(beta_pm(1.0, c(0.0, 0.0), Sign::Plus).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn beta_plus_satisfies_orthogonality_condition() {
        // κ cosh(2B) = e^{−2|α|² e^{−L}} with B = α ∫₀^L β₊ e^{−l/2} dl
        let alpha = c(0.8, 0.0);
        let kappa = (-2.0 * alpha.norm_sqr()).exp();
        for &l1 in &[0.1, 1.0, 5.0] {
            let b = (alpha * beta_segment_integral(0.0, l1, alpha, Sign::Plus).conj()).re;
            let lhs = kappa * (2.0 * b).cosh();
            let rhs = (-2.0 * alpha.norm_sqr() * (-l1).exp()).exp();
            assert!((lhs - rhs).abs() < 1e-10, "L1={l1}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn beta_integral_relation_closed_form_vs_quadrature() {
        // exp[α ∫ β₊ e^{−l/2}] = (e^{−|α|²e^{−Lj+1}}/e^{−|α|²e^{−Lj}})
        //                        · √(1−P_e^{Lj+1})/√(1−P_e^{Lj})
        let alpha = c(0.8, 0.0);
        let (l0, l1) = (0.4, 2.3);
        let by_quad = quad::integrate_sqrt_lower(
            |l| {
                beta_pm(l, alpha, Sign::Plus).unwrap() * c((-l / 2.0).exp(), 0.0)
            },
            l0,
            l1,
            1e-13,
        );
        let closed = beta_segment_integral(l0, l1, alpha, Sign::Plus).conj();
        assert!((by_quad - closed).norm() < 1e-10);

        let lhs = (alpha * by_quad).exp().re;
        let a2 = alpha.norm_sqr();
        let rhs = (-a2 * ((-l1).exp() - (-l0).exp())).exp()
            * ((1.0 - pe_at_l(alpha, l1).unwrap()) / (1.0 - pe_at_l(alpha, l0).unwrap())).sqrt();
        assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
    }

    #[test]
    fn corrected_prefactor_identity() {
        // √(P_e^L (1−P_e^L)) = κ_L/2 = e^{−2|α|²(1−e^{−L})}/2
        for &a in &[0.3, 0.8, 1.5] {
            let alpha = c(a, 0.0);
            for &l in &[0.2, 1.0, 3.0, 5.0] {
                let p = pe_at_l(alpha, l).unwrap();
                let lhs = (p * (1.0 - p)).sqrt();
                let rhs = 0.5 * kappa_rel(alpha, l);
                assert!((lhs - rhs).abs() < 1e-12, "α={a} L={l}");
            }
        }
    }

    #[test]
    fn jump_factor_identities() {
        let alpha = c(0.8, 0.0);
        for &l in &[0.3, 1.7, 4.0] {
            let beta = beta_pm(l, alpha, Sign::Plus).unwrap();
            let gamma = alpha * c((-l / 2.0).exp(), 0.0);
            assert!((beta - gamma - jump_factor(l, alpha, Sign::Plus).unwrap()).norm() < 1e-12);
            assert!((beta + gamma - jump_factor(l, alpha, Sign::Minus).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn jump_relations_hold_with_common_scalar() {
        // Ĵ Ŝ applied to the decaying coherent branches reproduces the
        // √P_e-ratio structure with one branch-independent prefactor.
        let alpha = c(0.8, 0.0);
        let cut = default_cutoff(alpha);
        let (lj, ln) = (0.6, 1.9);
        let pe_j = pe_at_l(alpha, lj).unwrap();
        let pe_n = pe_at_l(alpha, ln).unwrap();
        let scalar = jump_relation_scalar(lj, ln, alpha);

        for (branch, ratio, sched_sign) in [
            (Sign::Plus, (pe_n / (1.0 - pe_j)).sqrt(), Sign::Plus),
            (Sign::Minus, ((1.0 - pe_n) / pe_j).sqrt(), Sign::Plus),
            (Sign::Plus, ((1.0 - pe_n) / pe_j).sqrt(), Sign::Minus),
            (Sign::Minus, (pe_n / (1.0 - pe_j)).sqrt(), Sign::Minus),
        ] {
            let branch_amp = alpha * c(branch.as_f64(), 0.0);
            let input = make_coherent(branch_amp * c((-lj / 2.0).exp(), 0.0), cut).unwrap();
            let sched = CoherentSchedule::with_sign(alpha, sched_sign);
            let seg = ContinuumSegment::from_schedule(&sched, lj, ln, 0).unwrap();
            let after_s = s_operator_apply(&input, &seg).unwrap();
            let out = j_operator_apply(&after_s, sched.beta(ln, 0));

            // the β₋ process carries the mirrored scalar −c
            let expect_scalar = scalar * c(sched_sign.as_f64() * ratio, 0.0);
            let target = make_coherent(branch_amp * c((-ln / 2.0).exp(), 0.0), cut)
                .unwrap()
                .scaled(expect_scalar);
            let diff = out.add(&target.scaled(-ONE)).unwrap();
            assert!(
                diff.norm() < 1e-8,
                "branch {branch:?}, schedule {sched_sign:?}: residual {}",
                diff.norm()
            );
        }
    }

    #[test]
    fn schedule_from_record_signs() {
        let horizon = 5.0;
        let empty = MeasurementRecord::empty(horizon).unwrap();
        let segs = schedule_from_record(Sign::Plus, &empty);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].sign, Sign::Plus);

        let one = MeasurementRecord::new(vec![(1.0, 1)], horizon).unwrap();
        let segs = schedule_from_record(Sign::Plus, &one);
        assert_eq!(
            segs.iter().map(|s| s.sign).collect::<Vec<_>>(),
            vec![Sign::Plus, Sign::Minus]
        );

        let two = MeasurementRecord::new(vec![(1.0, 1), (2.5, 1)], horizon).unwrap();
        let segs = schedule_from_record(Sign::Plus, &two);
        assert_eq!(
            segs.iter().map(|s| s.sign).collect::<Vec<_>>(),
            vec![Sign::Plus, Sign::Minus, Sign::Plus]
        );

        // even-count jumps do not flip
        let even = MeasurementRecord::new(vec![(1.0, 2)], horizon).unwrap();
        let segs = schedule_from_record(Sign::Plus, &even);
        assert_eq!(
            segs.iter().map(|s| s.sign).collect::<Vec<_>>(),
            vec![Sign::Plus, Sign::Plus]
        );
    }

    #[test]
    fn no_count_final_states_approach_vacuum_classification() {
        let alpha = c(0.8, 0.0);
        let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
        let record = MeasurementRecord::empty(30.0).unwrap();
        let out = evolve_and_classify(&pair, &record, 30.0, Sign::Plus).unwrap();
        assert_eq!(out.surviving, 0);
        let vac = FockState::vacuum(out.state0.cutoff());
        let fid = inner_product(&vac, &out.state0.normalized()).unwrap().norm();
        assert!(fid > 1.0 - 1e-6, "vacuum fidelity {fid}");
        let ratio = out.state1.norm_sqr() / out.state0.norm_sqr();
        assert!(ratio < 1e-10, "wrong-branch weight ratio {ratio:.3e}");
    }

    #[test]
    fn classified_states_orthogonal_at_any_horizon() {
        let alpha = c(0.8, 0.0);
        let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
        for &l in &[0.5, 1.0, 2.0, 5.0] {
            for jumps in [vec![], vec![(0.2_f64.min(l / 2.0), 1u32)]] {
                let record = MeasurementRecord::new(jumps, l).unwrap();
                let out = evolve_and_classify(&pair, &record, l, Sign::Plus).unwrap();
                assert!(
                    out.orthogonality_residual < 1e-8,
                    "residual {} at L={l}",
                    out.orthogonality_residual
                );
            }
        }
    }

    #[test]
    fn first_order_coefficients_cancel_in_overlap() {
        // the |0⟩⟨0| and |1⟩⟨1| contributions to ⟨ω₀^L|ω₁^L⟩ at order e^{−L}
        // are ∓|α|² e^{−2|α|²} e^{−L} and cancel
        let alpha = c(0.8, 0.0);
        let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
        let want = alpha.norm_sqr() * (-2.0 * alpha.norm_sqr()).exp();
        let coeff_at = |l: f64| {
            let record = MeasurementRecord::empty(l).unwrap();
            let out = evolve_and_classify(&pair, &record, l, Sign::Plus).unwrap();
            let c0 = (out.state0.amp(0).conj() * out.state1.amp(0)).re;
            let c1 = (out.state0.amp(1).conj() * out.state1.amp(1)).re;
            (c0, c1)
        };
        for &l in &[8.0, 10.0, 12.0] {
            let (c0, c1) = coeff_at(l);
            let scale = (-l).exp();
            assert!(
                (c0 / scale + want).abs() < 1e-3 * want,
                "L={l}: c0/e^{{-L}} = {} vs {}",
                c0 / scale,
                -want
            );
            assert!((c1 / scale - want).abs() < 1e-3 * want);
            assert!((c0 + c1).abs() < 1e-3 * want * scale);
        }
        // leading coefficient decays as e^{−L}: ratio over ΔL = 2 is e²
        let (c0_a, _) = coeff_at(8.0);
        let (c0_b, _) = coeff_at(10.0);
        assert!((c0_a / c0_b - 2.0_f64.exp()).abs() < 1e-2 * 2.0_f64.exp());
    }

    #[test]
    fn classification_matches_operator_path() {
        // dual route: canonical closed form vs numeric Ĵ/Ŝ application
        let alpha = c(0.8, 0.0);
        let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
        let record = MeasurementRecord::new(vec![(0.7, 1), (2.1, 1), (3.4, 1)], 6.0).unwrap();
        let sched = CoherentSchedule::new(alpha);
        let canon = evolve_and_classify(&pair, &record, 6.0, Sign::Plus).unwrap();
        let (num0, w0) = apply_record(&pair.omega0, &record, &sched).unwrap();
        let (num1, w1) = apply_record(&pair.omega1, &record, &sched).unwrap();

        let ov0 = inner_product(&num0.normalized(), &canon.state0.normalized())
            .unwrap()
            .norm();
        let ov1 = inner_product(&num1.normalized(), &canon.state1.normalized())
            .unwrap()
            .norm();
        assert!(ov0 > 1.0 - 1e-9, "state0 mismatch, overlap {ov0}");
        assert!(ov1 > 1.0 - 1e-9, "state1 mismatch, overlap {ov1}");

        // branch-weight ratios agree between the two routes
        let canon_ratio = canon.state1.norm_sqr() / canon.state0.norm_sqr();
        let num_ratio = w1 / w0;
        assert!(
            (canon_ratio / num_ratio - 1.0).abs() < 1e-8,
            "weight ratio {canon_ratio} vs {num_ratio}"
        );
    }

    #[test]
    fn single_jump_record_matches_printed_ratio_structure() {
        // after normalization the state after Ĵ_{L₁}Ŝ matches
        // √(1−P_e)√(P_e^{L₁})|+⟩ − √P_e√(1−P_e^{L₁})|−⟩ (common √P_e⁰ dropped)
        let alpha = c(0.8, 0.0);
        let cut = default_cutoff(alpha);
        let pair = helstrom_basis(alpha, cut).unwrap();
        let l1 = 1.0;
        let record = MeasurementRecord::new(vec![(l1, 1)], l1).unwrap();
        let (num, _) = apply_record(&pair.omega0, &record, &CoherentSchedule::new(alpha)).unwrap();

        let pe_l1 = pe_at_l(alpha, l1).unwrap();
        let d = c((-l1 / 2.0).exp(), 0.0);
        let want = make_coherent(alpha * d, cut)
            .unwrap()
            .scaled(c(((1.0 - pair.pe) * pe_l1).sqrt(), 0.0))
            .add(
                &make_coherent(-alpha * d, cut)
                    .unwrap()
                    .scaled(-c((pair.pe * (1.0 - pe_l1)).sqrt(), 0.0)),
            )
            .unwrap();
        let ov = inner_product(&num.normalized(), &want.normalized()).unwrap();
        assert!(ov.norm() > 1.0 - 1e-8, "overlap {}", ov.norm());
    }

    #[test]
    fn minus_start_mirrors_classification() {
        let alpha = c(0.8, 0.0);
        let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
        let record = MeasurementRecord::empty(30.0).unwrap();
        let out = evolve_and_classify(&pair, &record, 30.0, Sign::Minus).unwrap();
        // with β₋ and no counts, hypothesis 1 survives
        assert_eq!(out.surviving, 1);
        let ratio = out.state0.norm_sqr() / out.state1.norm_sqr();
        assert!(ratio < 1e-10);
        assert!(out.orthogonality_residual < 1e-10);
    }

    #[test]
    fn parity_classification_weight_bound() {
        for &a in &[0.3, 0.8, 1.5] {
            let alpha = c(a, 0.0);
            let pair = helstrom_basis(alpha, default_cutoff(alpha)).unwrap();
            for record in [
                MeasurementRecord::empty(25.0).unwrap(),
                MeasurementRecord::new(vec![(0.9, 1), (3.0, 1)], 25.0).unwrap(),
            ] {
                let out = evolve_and_classify(&pair, &record, 25.0, Sign::Plus).unwrap();
                let (wrong, right) = (out.state1.norm_sqr(), out.state0.norm_sqr());
                assert!(
                    wrong / (wrong + right) < 1e-8,
                    "α={a}: wrong-parity weight {:.3e}",
                    wrong / (wrong + right)
                );
            }
        }
    }
}
