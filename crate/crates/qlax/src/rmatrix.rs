//! The constant GL_q(d) R-matrix, its signed variants R+ / R-, and the
//! quantum-trace matrix D.
//!
//! The construction convention is
//!
//! ```text
//! R = q * sum_i E_ii (x) E_ii  +  sum_{i != j} E_ii (x) E_jj
//!                              +  (q - 1/q) * sum_{i > j} E_ij (x) E_ji
//! ```
//!
//! so every term has a lower-triangular first factor and an upper-triangular
//! second factor. That orientation is what makes the Lax matrix M+ (and
//! hence the factor g+) upper triangular in the auxiliary space, with M- and
//! g- lower triangular. The overall scalar is normalized so that R = I at
//! q = 1.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::tensor::{Leg, LegShape, Operator};

/// Tolerance on the Yang–Baxter residual enforced at construction.
pub const YBE_CONSTRUCTION_TOL: f64 = 1e-12;

/// Numerical R-matrix data for one (q, d) point.
#[derive(Clone, Debug)]
pub struct RMatrix {
    q: C64,
    d: usize,
    op: Operator,
}

/// Labels of the two auxiliary legs the raw R-matrix is stored on.
pub const R_LEGS: (&str, &str) = ("a1", "a2");

fn aux_pair(d: usize) -> LegShape {
    LegShape::new(vec![Leg::aux(R_LEGS.0, d), Leg::aux(R_LEGS.1, d)])
        .expect("fixed distinct labels")
}

/// The flip (permutation) matrix P on two d-dimensional legs.
pub fn flip(d: usize) -> Array2<C64> {
    let mut p = Array2::<C64>::zeros((d * d, d * d));
    for i in 0..d {
        for j in 0..d {
            p[[i * d + j, j * d + i]] = C64::new(1.0, 0.0);
        }
    }
    p
}

impl RMatrix {
    /// Build the R-matrix for deformation parameter `q` and local dimension
    /// `d`, verifying the Yang–Baxter equation and invertibility.
    pub fn new(q: impl Into<C64>, d: usize) -> Result<RMatrix> {
        let q: C64 = q.into();
        if q.norm() == 0.0 {
            return Err(Error::Parameter("q must be nonzero".into()));
        }
        if !q.re.is_finite() || !q.im.is_finite() {
            return Err(Error::Parameter("q must be finite".into()));
        }
        if d < 2 {
            return Err(Error::Parameter(format!("local dimension {d} is below 2")));
        }
        let lambda = q - q.inv();
        let mut r = Array2::<C64>::zeros((d * d, d * d));
        for i in 0..d {
            for j in 0..d {
                // coefficient of E_ij (x) E_kl sits at [(i,k), (j,l)]
                if i == j {
                    r[[i * d + i, i * d + i]] = q;
                } else {
                    r[[i * d + j, i * d + j]] = C64::new(1.0, 0.0);
                }
            }
        }
        for i in 0..d {
            for j in 0..i {
                r[[i * d + j, j * d + i]] = lambda;
            }
        }
        let op = Operator::new(aux_pair(d), r)?;
        let built = RMatrix { q, d, op };
        let ybe = built.yang_baxter_residual();
        if ybe > YBE_CONSTRUCTION_TOL {
            return Err(Error::Numeric(format!(
                "constructed R-matrix violates Yang–Baxter: residual {ybe:.3e}"
            )));
        }
        linalg::lu_factor(built.matrix())?;
        Ok(built)
    }

    pub fn q(&self) -> C64 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// R as an operator on the two auxiliary legs `a1`, `a2`.
    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> &Array2<C64> {
        self.op.data()
    }

    /// R reinterpreted onto an arbitrary pair of legs of dimension d.
    pub fn on_legs(&self, first: Leg, second: Leg) -> Result<Operator> {
        self.op.reinterpret(LegShape::new(vec![first, second])?)
    }

    /// R+ = R_21, the flip conjugate.
    pub fn r_plus(&self) -> Operator {
        let p = flip(self.d);
        let data = p.dot(self.matrix()).dot(&p);
        Operator::new(aux_pair(self.d), data).expect("dimensions preserved by conjugation")
    }

    /// R- = R^-1.
    pub fn r_minus(&self) -> Result<Operator> {
        Ok(Operator::new(aux_pair(self.d), linalg::inv(self.matrix())?)?)
    }

    /// R+ or R- by sign.
    pub fn r_signed(&self, plus: bool) -> Result<Operator> {
        if plus {
            Ok(self.r_plus())
        } else {
            self.r_minus()
        }
    }

    /// hat(R) = P R, the braid form entering the quantum-trace identity.
    pub fn rhat(&self) -> Array2<C64> {
        flip(self.d).dot(self.matrix())
    }

    /// Relative residual of R12 R13 R23 = R23 R13 R12 on three legs.
    pub fn yang_baxter_residual(&self) -> f64 {
        yang_baxter_residual_mat(self.matrix(), self.d)
    }

    /// Norm of the coefficients violating the lower-(x)-upper splitting.
    pub fn triangular_split_residual(&self) -> f64 {
        triangular_split_residual_mat(self.matrix(), self.d)
    }

    /// Residual of the Hecke relation (PR - q)(PR + 1/q) = 0, a sanity
    /// check on the chosen normalization.
    pub fn hecke_residual(&self) -> f64 {
        let rhat = self.rhat();
        let n = self.d * self.d;
        let lhs = (&rhat - &linalg::eye(n).mapv(|z| z * self.q))
            .dot(&(&rhat + &linalg::eye(n).mapv(|z| z * self.q.inv())));
        linalg::rel_residual(&lhs, &Array2::zeros((n, n)))
    }

    /// Residual of R- being a two-sided inverse of R.
    pub fn inverse_pair_residual(&self) -> Result<f64> {
        let rm = self.r_minus()?;
        let id = linalg::eye(self.d * self.d);
        let left = linalg::rel_residual(&rm.data().dot(self.matrix()), &id);
        let right = linalg::rel_residual(&self.matrix().dot(rm.data()), &id);
        Ok(left.max(right))
    }

    /// The unique D with Tr_1( hat(R)^-1 D_1 ) = I.
    pub fn quantum_trace_matrix(&self) -> Result<QTraceMatrix> {
        let d = self.d;
        let rhat_inv = linalg::inv(&self.rhat())?;
        // assemble the linear map D -> Tr_1( hat(R)^-1 D_1 ) column by column;
        // on the matrix unit E_ab the image is [k,l] -> hat(R)^-1[(b,k),(a,l)]
        let mut phi = Array2::<C64>::zeros((d * d, d * d));
        for a in 0..d {
            for b in 0..d {
                let col = a * d + b;
                for k in 0..d {
                    for l in 0..d {
                        phi[[k * d + l, col]] = rhat_inv[[b * d + k, a * d + l]];
                    }
                }
            }
        }
        let mut rhs = Array2::<C64>::zeros((d * d, 1));
        for k in 0..d {
            rhs[[k * d + k, 0]] = C64::new(1.0, 0.0);
        }
        let sol = linalg::solve(&phi, &rhs)
            .map_err(|_| Error::Degenerate("quantum-trace linear system is singular".into()))?;
        let mut dmat = Array2::<C64>::zeros((d, d));
        for a in 0..d {
            for b in 0..d {
                dmat[[a, b]] = sol[[a * d + b, 0]];
            }
        }
        Ok(QTraceMatrix { dmat })
    }
}

/// Yang–Baxter residual for a raw d^2 x d^2 matrix on legs (1,2).
pub fn yang_baxter_residual_mat(r: &Array2<C64>, d: usize) -> f64 {
    let legs = LegShape::new(vec![Leg::aux("y1", d), Leg::aux("y2", d), Leg::aux("y3", d)])
        .expect("fixed distinct labels");
    let on = |l1: &str, l2: &str| {
        Operator::new(
            LegShape::new(vec![Leg::aux(l1, d), Leg::aux(l2, d)]).expect("distinct"),
            r.clone(),
        )
        .expect("square data")
        .embed(&legs)
        .expect("legs present")
    };
    let r12 = on("y1", "y2");
    let r13 = on("y1", "y3");
    let r23 = on("y2", "y3");
    let lhs = r12.dot(&r13).unwrap().dot(&r23).unwrap();
    let rhs = r23.dot(&r13).unwrap().dot(&r12).unwrap();
    lhs.rel_residual(&rhs).expect("identical shapes")
}

/// Norm of coefficients of E_ij (x) E_kl with i < j or k > l.
///
/// Zero exactly when the matrix splits as (lower) (x) (upper).
pub fn triangular_split_residual_mat(r: &Array2<C64>, d: usize) -> f64 {
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    if i < j || k > l {
                        sum += r[[i * d + k, j * d + l]].norm_sqr();
                    }
                }
            }
        }
    }
    sum.sqrt()
}

/// The quantum-trace matrix D.
#[derive(Clone, Debug)]
pub struct QTraceMatrix {
    dmat: Array2<C64>,
}

impl QTraceMatrix {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.dmat
    }

    pub fn dim(&self) -> usize {
        self.dmat.nrows()
    }

    /// Residual of the defining identity Tr_1( hat(R)^-1 D_1 ) = I.
    pub fn identity_residual(&self, r: &RMatrix) -> Result<f64> {
        let d = self.dim();
        let rhat_inv = linalg::inv(&r.rhat())?;
        let d1 = ndarray::linalg::kron(&self.dmat, &linalg::eye(d));
        let m = rhat_inv.dot(&d1);
        let mut out = Array2::<C64>::zeros((d, d));
        for k in 0..d {
            for l in 0..d {
                for i in 0..d {
                    out[[k, l]] += m[[i * d + k, i * d + l]];
                }
            }
        }
        Ok(linalg::rel_residual(&out, &linalg::eye(d)))
    }

    /// Norm of the off-diagonal part; the default R gives a diagonal D.
    pub fn off_diagonal_norm(&self) -> f64 {
        let d = self.dim();
        let mut sum = 0.0;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    sum += self.dmat[[i, j]].norm_sqr();
                }
            }
        }
        sum.sqrt()
    }
}
