//! Chain objects: site L-operators, partial and full monodromies, the
//! commuting Hamiltonian tower, and the Lax matrices M± (global and
//! per-site).
//!
//! Every one-auxiliary-leg object lives on the canonical shape
//! `[aux "a", site "s1", ..., site "sN"]`; exchange-relation checks use a
//! second (and the Yang–Baxter check a third) auxiliary leg. Site n + 1 is
//! read periodically, and the closure M±(N+1) = M±(1) is checked rather
//! than assumed.

use crate::error::{Error, Result};
use crate::rmatrix::RMatrix;
use crate::tensor::{Leg, LegShape, Operator};

/// Hard cap on the number of chain sites.
pub const MAX_SITES: usize = 10;
/// Hard cap on the side length of any dense matrix built here.
pub const MAX_MATRIX_SIDE: usize = 1 << 13;

/// Which of the two Lax matrices M± is meant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "plus",
            Sign::Minus => "minus",
        }
    }
}

/// Selects the Hamiltonian h_k = Tr_{1..k}(T_1 ... T_k) of the tower.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HamiltonianSpec {
    pub level: usize,
}

impl std::fmt::Display for HamiltonianSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "trace of T over {} auxiliary cop{}", self.level, if self.level == 1 { "y" } else { "ies" })
    }
}

/// An N-site chain with cached L-operators, partial products, monodromy,
/// and the Hamiltonian tower.
#[derive(Clone, Debug)]
pub struct ChainSystem {
    r: RMatrix,
    n_sites: usize,
    tower_depth: usize,
    shape: LegShape,
    site_shape: LegShape,
    site_ops: Vec<Operator>,
    psi: Vec<Operator>,
    monodromy: Operator,
    ham_tower: Vec<Operator>,
}

pub(crate) fn site_label(n: usize) -> String {
    format!("s{n}")
}

pub(crate) fn aux_label(k: usize) -> String {
    format!("a{k}")
}

impl ChainSystem {
    /// Build the chain: L^n = R on (aux, site n), psi^n = L^1 ... L^{n-1},
    /// T = L^1 ... L^N, and h_k = Tr_{1..k}(T_1 ... T_k) for k = 1..K.
    pub fn build(r: RMatrix, n_sites: usize, tower_depth: usize) -> Result<ChainSystem> {
        if n_sites == 0 {
            return Err(Error::Parameter("the chain needs at least one site".into()));
        }
        if tower_depth == 0 {
            return Err(Error::Parameter("the Hamiltonian tower needs depth >= 1".into()));
        }
        if n_sites > MAX_SITES {
            return Err(Error::Capacity(format!(
                "{n_sites} sites exceeds the dense-storage cap of {MAX_SITES}"
            )));
        }
        let d = r.dim();
        let aux_count = tower_depth.max(3);
        let mut side = d.checked_pow(n_sites as u32).unwrap_or(usize::MAX);
        for _ in 0..aux_count {
            side = side.checked_mul(d).unwrap_or(usize::MAX);
        }
        if side > MAX_MATRIX_SIDE {
            return Err(Error::Capacity(format!(
                "largest required matrix side {side} exceeds the cap of {MAX_MATRIX_SIDE}"
            )));
        }

        let mut legs = vec![Leg::aux("a", d)];
        legs.extend((1..=n_sites).map(|n| Leg::site(site_label(n), d)));
        let shape = LegShape::new(legs)?;
        let site_shape = LegShape::new(
            (1..=n_sites).map(|n| Leg::site(site_label(n), d)).collect(),
        )?;

        let mut site_ops = Vec::with_capacity(n_sites);
        for n in 1..=n_sites {
            let l = r
                .on_legs(Leg::aux("a", d), Leg::site(site_label(n), d))?
                .embed(&shape)?;
            site_ops.push(l);
        }

        let mut psi = Vec::with_capacity(n_sites + 1);
        psi.push(Operator::identity(shape.clone()));
        for l in &site_ops {
            let prev = psi.last().expect("seeded with the identity");
            psi.push(prev.dot(l)?);
        }
        let monodromy = psi.last().expect("N >= 1").clone();

        let mut ham_tower = Vec::with_capacity(tower_depth);
        for k in 1..=tower_depth {
            ham_tower.push(tower_hamiltonian(&monodromy, &site_shape, d, k)?);
        }

        Ok(ChainSystem {
            r,
            n_sites,
            tower_depth,
            shape,
            site_shape,
            site_ops,
            psi,
            monodromy,
            ham_tower,
        })
    }

    pub fn rmatrix(&self) -> &RMatrix {
        &self.r
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn tower_depth(&self) -> usize {
        self.tower_depth
    }

    /// Canonical one-auxiliary-leg shape `[a, s1, ..., sN]`.
    pub fn shape(&self) -> &LegShape {
        &self.shape
    }

    /// Site legs only.
    pub fn site_shape(&self) -> &LegShape {
        &self.site_shape
    }

    /// L^n for n = 1..N.
    pub fn site_op(&self, n: usize) -> Result<&Operator> {
        self.site_ops
            .get(n.checked_sub(1).ok_or_else(|| site_range_err(n, self.n_sites))?)
            .ok_or_else(|| site_range_err(n, self.n_sites))
    }

    /// psi^n = L^1 ... L^{n-1} for n = 1..N+1; psi^1 = I, psi^{N+1} = T.
    pub fn psi(&self, n: usize) -> Result<&Operator> {
        self.psi
            .get(n.checked_sub(1).ok_or_else(|| site_range_err(n, self.n_sites + 1))?)
            .ok_or_else(|| site_range_err(n, self.n_sites + 1))
    }

    /// The monodromy T = L^1 ... L^N.
    pub fn monodromy(&self) -> &Operator {
        &self.monodromy
    }

    /// h_k on the site legs, k = 1..tower_depth.
    pub fn hamiltonian(&self, spec: HamiltonianSpec) -> Result<&Operator> {
        self.ham_tower
            .get(spec.level.checked_sub(1).ok_or_else(|| {
                Error::Parameter("tower level starts at 1".into())
            })?)
            .ok_or_else(|| {
                Error::Parameter(format!(
                    "tower level {} exceeds the built depth {}",
                    spec.level, self.tower_depth
                ))
            })
    }

    /// h_1 = Tr_1 T_1, the Hamiltonian generating the Lax flow.
    pub fn h1(&self) -> &Operator {
        &self.ham_tower[0]
    }

    /// 1 (x) h_1 on the canonical shape.
    pub fn h1_embedded(&self) -> Operator {
        self.ham_tower[0]
            .embed(&self.shape)
            .expect("site legs are part of the canonical shape")
    }

    fn two_aux_shape(&self) -> LegShape {
        let d = self.r.dim();
        let mut legs = vec![Leg::aux(aux_label(1), d), Leg::aux(aux_label(2), d)];
        legs.extend(self.site_shape.legs().iter().cloned());
        LegShape::new(legs).expect("distinct labels")
    }

    /// Relabel a canonical-shape operator onto auxiliary copy `k` of an
    /// enlarged shape.
    fn on_aux_copy(&self, x: &Operator, k: usize, target: &LegShape) -> Result<Operator> {
        let d = self.r.dim();
        let mut legs = vec![Leg::aux(aux_label(k), d)];
        legs.extend(self.site_shape.legs().iter().cloned());
        x.reinterpret(LegShape::new(legs)?)?.embed(target)
    }

    /// Relative RTT residual R12 X1 X2 = X2 X1 R12 for a canonical-shape X.
    pub fn rtt_residual(&self, x: &Operator) -> Result<f64> {
        let d = self.r.dim();
        let target = self.two_aux_shape();
        let r12 = self
            .r
            .on_legs(Leg::aux(aux_label(1), d), Leg::aux(aux_label(2), d))?
            .embed(&target)?;
        let x1 = self.on_aux_copy(x, 1, &target)?;
        let x2 = self.on_aux_copy(x, 2, &target)?;
        let lhs = r12.dot(&x1)?.dot(&x2)?;
        let rhs = x2.dot(&x1)?.dot(&r12)?;
        lhs.rel_residual(&rhs)
    }

    /// Largest commutation residual of L^i_1 with L^j_2 over pairs i != j.
    pub fn ultra_locality_residual(&self) -> Result<f64> {
        let target = self.two_aux_shape();
        let mut worst = 0.0_f64;
        for i in 1..=self.n_sites {
            for j in 1..=self.n_sites {
                if i == j {
                    continue;
                }
                let li = self.on_aux_copy(self.site_op(i)?, 1, &target)?;
                let lj = self.on_aux_copy(self.site_op(j)?, 2, &target)?;
                worst = worst.max(li.commute_residual(&lj)?);
            }
        }
        Ok(worst)
    }

    /// Largest commutation residual [h_j, h_k] over tower levels j < k.
    pub fn tower_commutation_residual(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for j in 0..self.ham_tower.len() {
            for k in j + 1..self.ham_tower.len() {
                worst = worst.max(self.ham_tower[j].commute_residual(&self.ham_tower[k])?);
            }
        }
        Ok(worst)
    }

    /// The shifted monodromy T^n = (psi^n)^-1 T psi^n = L^n ... L^N L^1 ... L^{n-1}.
    pub fn shifted_monodromy(&self, n: usize) -> Result<Operator> {
        let psi = self.psi(n)?;
        psi.inv()?.dot(&self.monodromy)?.dot(psi)
    }

    /// Largest deviation of Tr_1 T^n_1 from h_1 over n = 1..N+1.
    pub fn trace_cyclicity_residual(&self) -> Result<f64> {
        let mut worst = 0.0_f64;
        for n in 1..=self.n_sites + 1 {
            let shifted = self.shifted_monodromy(n)?.partial_trace("a")?;
            worst = worst.max(shifted.rel_residual(self.h1())?);
        }
        Ok(worst)
    }

    /// The site Lax matrix M±(n) on the canonical shape,
    ///
    /// ```text
    /// M∓(n) = Tr_1[ (1 - (R±_12)^-1) (psi^n_1)^-1 T_1 psi^n_1 ]
    /// ```
    ///
    /// Note the sign crossing: the returned M+ uses R-, the returned M-
    /// uses R+. Site n = 1 gives the global Lax matrix; n ranges to N + 1,
    /// where psi^{N+1} = T closes the chain periodically.
    pub fn lax_m_site(&self, n: usize, sign: Sign) -> Result<Operator> {
        let psi = self.psi(n)?;
        let conjugated = psi.inv()?.dot(&self.monodromy)?.dot(psi)?;
        self.lax_m_of(&conjugated, sign)
    }

    /// M± computed from an arbitrary canonical-shape monodromy-like operator.
    pub(crate) fn lax_m_of(&self, t: &Operator, sign: Sign) -> Result<Operator> {
        let d = self.r.dim();
        let target = self.two_aux_shape();
        // M+ pairs with (R-)^-1 = R, M- with (R+)^-1
        let use_plus_r = matches!(sign, Sign::Minus);
        let r_pm_inv = Operator::new(
            self.r.op().shape().clone(),
            crate::linalg::inv(self.r.r_signed(use_plus_r)?.data())?,
        )?
        .reinterpret(LegShape::new(vec![
            Leg::aux(aux_label(1), d),
            Leg::aux(aux_label(2), d),
        ])?)?
        .embed(&target)?;
        let t1 = self.on_aux_copy(t, 1, &target)?;
        let integrand = t1.sub(&r_pm_inv.dot(&t1)?)?;
        let traced = integrand.partial_trace(&aux_label(1))?;
        // result carries leg a2 + sites; rename back to the canonical shape
        traced.reinterpret(self.shape.clone())
    }

    /// All site Lax matrices plus the global pair and M = M+ - M-.
    pub fn lax_matrices(&self) -> Result<LaxMatrices> {
        let mut m_plus_site = Vec::with_capacity(self.n_sites + 1);
        let mut m_minus_site = Vec::with_capacity(self.n_sites + 1);
        for n in 1..=self.n_sites + 1 {
            m_plus_site.push(self.lax_m_site(n, Sign::Plus)?);
            m_minus_site.push(self.lax_m_site(n, Sign::Minus)?);
        }
        let m_plus = m_plus_site[0].clone();
        let m_minus = m_minus_site[0].clone();
        let m = m_plus.sub(&m_minus)?;
        Ok(LaxMatrices { m_plus_site, m_minus_site, m_plus, m_minus, m })
    }

    /// Residuals of the global Lax form: [1 (x) h, T] against [M±, T].
    pub fn prop1_residuals(&self) -> Result<(f64, f64)> {
        let h = self.h1_embedded();
        let lhs = h.commutator(&self.monodromy)?;
        let plus = self.lax_m_site(1, Sign::Plus)?.commutator(&self.monodromy)?;
        let minus = self.lax_m_site(1, Sign::Minus)?.commutator(&self.monodromy)?;
        Ok((lhs.rel_residual(&plus)?, lhs.rel_residual(&minus)?))
    }

    /// Residual of the site Lax form for site n:
    /// [1 (x) h, L^n] against M±(n) L^n - L^n M±(n+1).
    pub fn prop5_residual(&self, n: usize, sign: Sign) -> Result<f64> {
        if n == 0 || n > self.n_sites {
            return Err(site_range_err(n, self.n_sites));
        }
        let l = self.site_op(n)?;
        let h = self.h1_embedded();
        let lhs = h.commutator(l)?;
        let m_n = self.lax_m_site(n, sign)?;
        let m_next = self.lax_m_site(n + 1, sign)?;
        let rhs = m_n.dot(l)?.sub(&l.dot(&m_next)?)?;
        lhs.rel_residual(&rhs)
    }

    /// Residual of the two-auxiliary-leg conjugation identity
    ///
    /// ```text
    /// psi^n_1 (R±_12)^-1 (psi^n_1)^-1 T_1 = (psi^n_2)^-1 (R±_12)^-1 T_1 psi^n_2
    /// ```
    ///
    /// tested leg-wise (before any trace contraction).
    pub fn thm2_conjugation_residual(&self, n: usize, sign: Sign) -> Result<f64> {
        if n == 0 || n > self.n_sites {
            return Err(site_range_err(n, self.n_sites));
        }
        let d = self.r.dim();
        let target = self.two_aux_shape();
        let r_pm_inv = Operator::new(
            self.r.op().shape().clone(),
            crate::linalg::inv(self.r.r_signed(matches!(sign, Sign::Plus))?.data())?,
        )?
        .reinterpret(LegShape::new(vec![
            Leg::aux(aux_label(1), d),
            Leg::aux(aux_label(2), d),
        ])?)?
        .embed(&target)?;
        let psi1 = self.on_aux_copy(self.psi(n)?, 1, &target)?;
        let psi2 = self.on_aux_copy(self.psi(n)?, 2, &target)?;
        let t1 = self.on_aux_copy(&self.monodromy, 1, &target)?;
        let lhs = psi1.dot(&r_pm_inv)?.dot(&psi1.inv()?)?.dot(&t1)?;
        let rhs = psi2.inv()?.dot(&r_pm_inv)?.dot(&t1)?.dot(&psi2)?;
        lhs.rel_residual(&rhs)
    }
}

fn site_range_err(n: usize, max: usize) -> Error {
    Error::Parameter(format!("site index {n} outside 1..={max}"))
}

/// h_k = Tr_{1..k}(T_1 ... T_k) with k independent auxiliary legs.
fn tower_hamiltonian(
    monodromy: &Operator,
    site_shape: &LegShape,
    d: usize,
    k: usize,
) -> Result<Operator> {
    let mut legs: Vec<Leg> = (1..=k).map(|i| Leg::aux(aux_label(i), d)).collect();
    legs.extend(site_shape.legs().iter().cloned());
    let target = LegShape::new(legs)?;
    let mut product = Operator::identity(target.clone());
    for i in 1..=k {
        let mut copy_legs = vec![Leg::aux(aux_label(i), d)];
        copy_legs.extend(site_shape.legs().iter().cloned());
        let t_i = monodromy
            .reinterpret(LegShape::new(copy_legs)?)?
            .embed(&target)?;
        product = product.dot(&t_i)?;
    }
    let mut traced = product;
    for i in 1..=k {
        traced = traced.partial_trace(&aux_label(i))?;
    }
    Ok(traced)
}

/// Global and per-site Lax matrices.
#[derive(Clone, Debug)]
pub struct LaxMatrices {
    /// M+(n) for n = 1..N+1.
    pub m_plus_site: Vec<Operator>,
    /// M-(n) for n = 1..N+1.
    pub m_minus_site: Vec<Operator>,
    /// Global M+ (= site value at n = 1).
    pub m_plus: Operator,
    /// Global M- (= site value at n = 1).
    pub m_minus: Operator,
    /// M = M+ - M-.
    pub m: Operator,
}

impl LaxMatrices {
    /// Residual of the periodic closure M±(N+1) = M±(1).
    pub fn periodic_closure_residual(&self, sign: Sign) -> Result<f64> {
        let side = match sign {
            Sign::Plus => &self.m_plus_site,
            Sign::Minus => &self.m_minus_site,
        };
        side.last()
            .expect("built with at least two entries")
            .rel_residual(&side[0])
    }
}
