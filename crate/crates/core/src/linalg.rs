//! Dense complex linear algebra helpers: matrix exponential, LU solve,
//! spectral norm. Self-contained so the operator builders do not need an
//! external LAPACK backend.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

pub fn identity(n: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(n, ONE)
}

/// Maximum absolute column sum.
pub fn one_norm(a: &Array2<Complex64>) -> f64 {
    let mut best = 0.0_f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

pub fn max_abs(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Padé(13) coefficients for the matrix exponential (Higham 2005).
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371_920_351_148_152;

/// exp(A) by scaling-and-squaring with a Padé(13) approximant.
pub fn expm(a: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }

    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scale = Complex64::new(1.0 / f64::powi(2.0, squarings as i32), 0.0);
    let a1 = a * scale;

    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let eye = identity(n);

    let c = |i: usize| Complex64::new(PADE13[i], 0.0);
    let w1 = &a6 * c(13) + &a4 * c(11) + &a2 * c(9);
    let w2 = w1.dot(&a6) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &eye * c(1);
    let u = a1.dot(&w2);
    let z1 = &a6 * c(12) + &a4 * c(10) + &a2 * c(8);
    let v = z1.dot(&a6) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &eye * c(0);

    // exp(A1) ≈ (V - U)^{-1} (V + U)
    let mut result = lu_solve(&(&v - &u), &(&v + &u));
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}

/// Solve A X = B with partial-pivot LU; panics on a numerically singular A.
pub fn lu_solve(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols());
    assert_eq!(n, b.nrows());
    let m = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();

    for k in 0..n {
        let mut piv = k;
        let mut best = lu[[k, k]].norm();
        for r in (k + 1)..n {
            let v = lu[[r, k]].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        assert!(best > 0.0, "lu_solve: singular matrix");
        if piv != k {
            for c in 0..n {
                lu.swap([k, c], [piv, c]);
            }
            for c in 0..m {
                x.swap([k, c], [piv, c]);
            }
        }
        let d = lu[[k, k]];
        for r in (k + 1)..n {
            let f = lu[[r, k]] / d;
            lu[[r, k]] = f;
            if f != ZERO {
                for c in (k + 1)..n {
                    let t = lu[[k, c]];
                    lu[[r, c]] -= f * t;
                }
                for c in 0..m {
                    let t = x[[k, c]];
                    x[[r, c]] -= f * t;
                }
            }
        }
    }
    // back substitution
    for c in 0..m {
        for r in (0..n).rev() {
            let mut s = x[[r, c]];
            for j in (r + 1)..n {
                s -= lu[[r, j]] * x[[j, c]];
            }
            x[[r, c]] = s / lu[[r, r]];
        }
    }
    x
}

/// Largest singular value by power iteration on A†A.
pub fn spectral_norm(a: &Array2<Complex64>) -> f64 {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return 0.0;
    }
    // Deterministic, mildly irregular start vector.
    let mut v: Array1<Complex64> = Array1::from_iter(
        (0..n).map(|i| Complex64::new(1.0 + 0.37 * ((i * 7919 % 101) as f64) / 101.0, 0.0)),
    );
    let mut lambda = 0.0_f64;
    for _ in 0..200 {
        let av = a.dot(&v);
        let w = a.t().mapv(|z| z.conj()).dot(&av);
        let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        let next = norm;
        v = w.mapv(|z| z / Complex64::new(norm, 0.0));
        if (next - lambda).abs() <= 1e-14 * next.max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<Complex64>::zeros((4, 4));
        let e = expm(&z);
        assert!(max_abs(&(&e - &identity(4))) < 1e-15);
    }

    #[test]
    fn expm_diagonal_matches_scalar_exp() {
        let mut a = Array2::<Complex64>::zeros((3, 3));
        a[[0, 0]] = c(0.3, 0.0);
        a[[1, 1]] = c(-1.2, 0.7);
        a[[2, 2]] = c(2.0, -0.4);
        let e = expm(&a);
        for i in 0..3 {
            assert!((e[[i, i]] - a[[i, i]].exp()).norm() < 1e-13);
        }
        assert!((e[[0, 1]].norm() + e[[1, 2]].norm()) < 1e-14);
    }

    #[test]
    fn expm_nilpotent_is_truncated_series() {
        let mut a = Array2::<Complex64>::zeros((2, 2));
        a[[0, 1]] = c(3.5, -1.0);
        let e = expm(&a);
        assert!((e[[0, 0]] - ONE).norm() < 1e-14);
        assert!((e[[0, 1]] - a[[0, 1]]).norm() < 1e-13);
        assert!((e[[1, 1]] - ONE).norm() < 1e-14);
    }

    #[test]
    fn expm_anti_hermitian_is_unitary() {
        let n = 6;
        let mut a = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..i {
                let v = c(
                    ((i * 31 + j * 17) % 13) as f64 / 7.0 - 0.9,
                    ((i * 5 + j * 23) % 11) as f64 / 5.0 - 1.0,
                );
                a[[i, j]] = v;
                a[[j, i]] = -v.conj();
            }
            a[[i, i]] = c(0.0, (i as f64) / 3.0 - 1.0);
        }
        let u = expm(&a);
        let udu = u.t().mapv(|z| z.conj()).dot(&u);
        assert!(max_abs(&(&udu - &identity(n))) < 1e-12);
    }

    #[test]
    fn lu_solve_recovers_known_solution() {
        let n = 5;
        let mut a = Array2::<Complex64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                a[[i, j]] = c(
                    ((i * 3 + j * 7) % 9) as f64 - 4.0,
                    ((i + 2 * j) % 5) as f64 - 2.0,
                );
            }
            a[[i, i]] += c(10.0, 0.0);
        }
        let x_true = Array2::from_shape_fn((n, 2), |(i, j)| c(i as f64 - 1.5, j as f64 + 0.25));
        let b = a.dot(&x_true);
        let x = lu_solve(&a, &b);
        assert!(max_abs(&(&x - &x_true)) < 1e-11);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let mut a = Array2::<Complex64>::zeros((3, 3));
        a[[0, 0]] = c(0.0, -2.5);
        a[[1, 1]] = c(1.0, 0.0);
        a[[2, 2]] = c(0.3, 0.4);
        assert!((spectral_norm(&a) - 2.5).abs() < 1e-10);
    }
}
