//! Dense complex linear algebra kernels: norms, LU solves, matrix
//! exponential, eigenvalues.
//!
//! Everything here operates on plain `Array2<Complex64>` and is wrapped by
//! the leg-aware [`crate::tensor::Operator`] API. Matrices in this crate top
//! out around 128x128, so the kernels favor clarity and determinism over
//! blocked performance.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Condition-number threshold above which inversion is refused.
pub const COND_LIMIT: f64 = 1e12;

/// Frobenius norm.
pub fn fro_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum-absolute-column-sum norm.
pub fn one_norm(a: &Array2<C64>) -> f64 {
    let mut best = 0.0_f64;
    for col in a.columns() {
        let s: f64 = col.iter().map(|z| z.norm()).sum();
        best = best.max(s);
    }
    best
}

/// Relative Frobenius residual `|x - y|_F / max(1, |y|_F)`.
///
/// This is the single comparison convention for every identity check in the
/// crate. Identities stated as a vanishing commutator are evaluated as
/// `rel_residual(AB, BA)` so the denominator carries the scale of the
/// operands instead of defaulting to 1.
pub fn rel_residual(x: &Array2<C64>, y: &Array2<C64>) -> f64 {
    assert_eq!(x.dim(), y.dim(), "residual of unequal dimensions");
    let diff = x - y;
    fro_norm(&diff) / fro_norm(y).max(1.0)
}

/// Identity matrix.
pub fn eye(n: usize) -> Array2<C64> {
    Array2::eye(n)
}

pub fn is_finite(a: &Array2<C64>) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// LU decomposition with partial pivoting, PA = LU packed in place.
pub struct Lu {
    lu: Array2<C64>,
    piv: Vec<usize>,
}

pub fn lu_factor(a: &Array2<C64>) -> Result<Lu> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "LU of a non-square matrix");
    let mut lu = a.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let (mut p, mut best) = (k, lu[[k, k]].norm());
        for i in k + 1..n {
            let v = lu[[i, k]].norm();
            if v > best {
                p = i;
                best = v;
            }
        }
        if best == 0.0 {
            return Err(Error::Singular(format!("zero pivot at column {k}")));
        }
        if p != k {
            piv.swap(p, k);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[p, j]];
                lu[[p, j]] = tmp;
            }
        }
        let pivot = lu[[k, k]];
        for i in k + 1..n {
            let m = lu[[i, k]] / pivot;
            lu[[i, k]] = m;
            for j in k + 1..n {
                let sub = m * lu[[k, j]];
                lu[[i, j]] -= sub;
            }
        }
    }
    Ok(Lu { lu, piv })
}

impl Lu {
    /// Solve A X = B for a matrix right-hand side.
    pub fn solve_mat(&self, b: &Array2<C64>) -> Array2<C64> {
        let n = self.lu.nrows();
        assert_eq!(b.nrows(), n, "RHS row count does not match");
        let m = b.ncols();
        let mut x = Array2::<C64>::zeros((n, m));
        for i in 0..n {
            for j in 0..m {
                x[[i, j]] = b[[self.piv[i], j]];
            }
        }
        // forward: L y = P b  (unit lower)
        for k in 0..n {
            for i in k + 1..n {
                let m_ik = self.lu[[i, k]];
                for j in 0..m {
                    let sub = m_ik * x[[k, j]];
                    x[[i, j]] -= sub;
                }
            }
        }
        // backward: U x = y
        for k in (0..n).rev() {
            let d = self.lu[[k, k]];
            for j in 0..m {
                x[[k, j]] /= d;
            }
            for i in 0..k {
                let u_ik = self.lu[[i, k]];
                for j in 0..m {
                    let sub = u_ik * x[[k, j]];
                    x[[i, j]] -= sub;
                }
            }
        }
        x
    }
}

/// Solve A X = B.
pub fn solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    Ok(lu_factor(a)?.solve_mat(b))
}

/// Inverse together with the 1-norm condition estimate `|A|_1 |A^-1|_1`.
pub fn inv_with_cond(a: &Array2<C64>) -> Result<(Array2<C64>, f64)> {
    let n = a.nrows();
    let inv = lu_factor(a)?.solve_mat(&eye(n));
    let cond = one_norm(a) * one_norm(&inv);
    Ok((inv, cond))
}

/// Inverse, refusing matrices with condition estimate above [`COND_LIMIT`].
pub fn inv(a: &Array2<C64>) -> Result<Array2<C64>> {
    let (inv, cond) = inv_with_cond(a)?;
    if !cond.is_finite() || cond > COND_LIMIT {
        return Err(Error::Singular(format!(
            "condition estimate {cond:.3e} exceeds {COND_LIMIT:.0e}"
        )));
    }
    Ok(inv)
}

/// Pade(13) coefficients for the matrix exponential (Higham 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn is_diagonal(a: &Array2<C64>) -> bool {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[[i, j]] != C64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}

/// Matrix exponential by scaling-and-squaring with a Pade(13) approximant.
///
/// Diagonal input short-circuits to entrywise scalar exponentials, so
/// exp(diag) is exact up to the scalar `exp` itself.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm of a non-square matrix");
    if !is_finite(a) {
        return Err(Error::Numeric("non-finite entries in expm input".into()));
    }
    if is_diagonal(a) {
        let mut out = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            out[[i, i]] = a[[i, i]].exp();
        }
        return Ok(out);
    }

    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let scale = C64::new((0.5_f64).powi(s as i32), 0.0);
    let a1 = a.mapv(|z| z * scale);

    let a2 = a1.dot(&a1);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let id = eye(n);
    let b = |k: usize| C64::new(PADE13[k], 0.0);

    let u_inner = a6.mapv(|z| z * b(13)) + &a4.mapv(|z| z * b(11)) + &a2.mapv(|z| z * b(9));
    let u_poly = a6.dot(&u_inner)
        + &a6.mapv(|z| z * b(7))
        + &a4.mapv(|z| z * b(5))
        + &a2.mapv(|z| z * b(3))
        + &id.mapv(|z| z * b(1));
    let u = a1.dot(&u_poly);

    let v_inner = a6.mapv(|z| z * b(12)) + &a4.mapv(|z| z * b(10)) + &a2.mapv(|z| z * b(8));
    let v = a6.dot(&v_inner)
        + &a6.mapv(|z| z * b(6))
        + &a4.mapv(|z| z * b(4))
        + &a2.mapv(|z| z * b(2))
        + &id.mapv(|z| z * b(0));

    let p = &v + &u;
    let q = &v - &u;
    let mut r = solve(&q, &p)?;
    for _ in 0..s {
        r = r.dot(&r);
    }
    Ok(r)
}

/// Eigenvalues of a general complex matrix, sorted by (re, im).
pub fn sorted_eigenvalues(a: &Array2<C64>) -> Result<Vec<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigenvalues of a non-square matrix");
    if !is_finite(a) {
        return Err(Error::Numeric("non-finite entries in eigenvalue input".into()));
    }
    let m = nalgebra::DMatrix::<C64>::from_fn(n, n, |i, j| a[[i, j]]);
    let schur = m
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::Numeric("Schur iteration did not converge".into()))?;
    let ev = schur
        .eigenvalues()
        .ok_or_else(|| Error::Numeric("Schur form left unresolved blocks".into()))?;
    let mut out: Vec<C64> = ev.iter().copied().collect();
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_matrix(n: usize, seed: u64) -> Array2<C64> {
        // small deterministic fill, entries in [-1, 1]
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        Array2::from_shape_fn((n, n), |_| C64::new(next(), next()))
    }

    #[test]
    fn lu_solve_roundtrip() {
        let a = lcg_matrix(8, 7);
        let b = lcg_matrix(8, 11);
        let x = solve(&a, &b).unwrap();
        assert!(rel_residual(&a.dot(&x), &b) < 1e-12);
    }

    #[test]
    fn inv_residual_small() {
        let a = lcg_matrix(8, 3);
        let ainv = inv(&a).unwrap();
        assert!(fro_norm(&(a.dot(&ainv) - eye(8))) < 1e-11);
    }

    #[test]
    fn inv_identity() {
        let ainv = inv(&eye(4)).unwrap();
        assert!(fro_norm(&(ainv - eye(4))) == 0.0);
    }

    #[test]
    fn inv_rejects_singular() {
        let mut a = Array2::<C64>::zeros((3, 3));
        a[[0, 0]] = C64::new(1.0, 0.0);
        a[[1, 1]] = C64::new(1.0, 0.0);
        assert!(matches!(inv(&a), Err(Error::Singular(_))));
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = Array2::<C64>::zeros((5, 5));
        let e = expm(&z).unwrap();
        assert!(fro_norm(&(e - eye(5))) == 0.0);
    }

    #[test]
    fn expm_diagonal_exact() {
        let mut a = Array2::<C64>::zeros((2, 2));
        a[[0, 0]] = C64::new(0.0, std::f64::consts::PI);
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]] - C64::new(-1.0, 0.0)).norm() < 1e-15);
        assert!((e[[1, 1]] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(e[[0, 1]], C64::new(0.0, 0.0));
    }

    #[test]
    fn expm_inverse_pair() {
        let mut a = lcg_matrix(6, 19);
        let scale = 2.0 / one_norm(&a);
        a.mapv_inplace(|z| z * scale);
        let e = expm(&a).unwrap();
        let em = expm(&a.mapv(|z| -z)).unwrap();
        assert!(fro_norm(&(e.dot(&em) - eye(6))) < 1e-11);
    }

    #[test]
    fn expm_rejects_non_finite() {
        let mut a = Array2::<C64>::zeros((2, 2));
        a[[0, 1]] = C64::new(f64::NAN, 0.0);
        assert!(matches!(expm(&a), Err(Error::Numeric(_))));
    }

    #[test]
    fn eigenvalues_sum_to_trace() {
        let a = lcg_matrix(9, 23);
        let ev = sorted_eigenvalues(&a).unwrap();
        let s: C64 = ev.iter().sum();
        let tr: C64 = (0..9).map(|i| a[[i, i]]).sum();
        assert!((s - tr).norm() < 1e-12);
    }
}
