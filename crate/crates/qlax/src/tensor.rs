//! Leg-labeled dense complex operators on tensor-product spaces.
//!
//! An [`Operator`] is a square complex matrix together with a [`LegShape`]
//! naming the tensor factors of the space it acts on. Legs come in two
//! kinds: auxiliary legs (matrix slots of R-matrices, monodromies, Lax
//! matrices) and chain-site legs. The composite index is row-major in
//! declaration order, and builders keep auxiliary legs first so that traces
//! over them are contiguous-block operations.

use ndarray::{linalg::kron as nd_kron, Array2, ArrayD, Axis, IxDyn};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg;

/// Role of a tensor leg.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LegKind {
    Aux,
    Site,
}

/// One tensor factor: a label, a local dimension, and a kind.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Leg {
    pub label: String,
    pub dim: usize,
    pub kind: LegKind,
}

impl Leg {
    pub fn aux(label: impl Into<String>, dim: usize) -> Self {
        Leg { label: label.into(), dim, kind: LegKind::Aux }
    }

    pub fn site(label: impl Into<String>, dim: usize) -> Self {
        Leg { label: label.into(), dim, kind: LegKind::Site }
    }
}

/// Ordered list of legs with unique labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LegShape {
    legs: Vec<Leg>,
}

impl LegShape {
    pub fn new(legs: Vec<Leg>) -> Result<Self> {
        for leg in &legs {
            if leg.dim == 0 {
                return Err(Error::Shape(format!("leg '{}' has dimension 0", leg.label)));
            }
        }
        for (i, a) in legs.iter().enumerate() {
            for b in &legs[i + 1..] {
                if a.label == b.label {
                    return Err(Error::Shape(format!("duplicate leg label '{}'", a.label)));
                }
            }
        }
        Ok(LegShape { legs })
    }

    /// The zero-leg shape: total dimension 1, carriers of scalars.
    pub fn scalar() -> Self {
        LegShape { legs: Vec::new() }
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn len(&self) -> usize {
        self.legs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.legs.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.legs.iter().map(|l| l.dim).product()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.legs.iter().map(|l| l.dim).collect()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.legs.iter().position(|l| l.label == label)
    }

    pub fn leg(&self, label: &str) -> Option<&Leg> {
        self.legs.iter().find(|l| l.label == label)
    }

    pub fn contains(&self, other: &LegShape) -> bool {
        other.legs.iter().all(|l| self.leg(&l.label) == Some(l))
    }

    fn concat(&self, other: &LegShape) -> Result<LegShape> {
        let mut legs = self.legs.clone();
        legs.extend(other.legs.iter().cloned());
        LegShape::new(legs)
    }

    fn without(&self, label: &str) -> LegShape {
        LegShape {
            legs: self.legs.iter().filter(|l| l.label != label).cloned().collect(),
        }
    }
}

/// Dense complex operator carrying its leg shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    shape: LegShape,
    data: Array2<C64>,
}

impl Operator {
    pub fn new(shape: LegShape, data: Array2<C64>) -> Result<Self> {
        let d = shape.total_dim();
        if data.nrows() != d || data.ncols() != d {
            return Err(Error::Shape(format!(
                "matrix is {}x{} but the shape has total dimension {}",
                data.nrows(),
                data.ncols(),
                d
            )));
        }
        Ok(Operator { shape, data })
    }

    pub fn identity(shape: LegShape) -> Self {
        let d = shape.total_dim();
        Operator { shape, data: linalg::eye(d) }
    }

    pub fn zeros(shape: LegShape) -> Self {
        let d = shape.total_dim();
        Operator { shape, data: Array2::zeros((d, d)) }
    }

    /// Scalar (zero-leg) operator holding a single value.
    pub fn scalar(value: C64) -> Self {
        let mut data = Array2::zeros((1, 1));
        data[[0, 0]] = value;
        Operator { shape: LegShape::scalar(), data }
    }

    pub fn shape(&self) -> &LegShape {
        &self.shape
    }

    pub fn data(&self) -> &Array2<C64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<C64> {
        self.data
    }

    /// Reinterpret the same matrix under a new shape with identical dims.
    ///
    /// Used to move an R-matrix from generic auxiliary legs onto (aux, site)
    /// pairs: the data does not change, only the labeling does.
    pub fn reinterpret(&self, shape: LegShape) -> Result<Operator> {
        if shape.dims() != self.shape.dims() {
            return Err(Error::Shape(format!(
                "cannot reinterpret dims {:?} as {:?}",
                self.shape.dims(),
                shape.dims()
            )));
        }
        Ok(Operator { shape, data: self.data.clone() })
    }

    /// Tensor product with concatenated leg lists.
    pub fn kron(&self, other: &Operator) -> Result<Operator> {
        let shape = self.shape.concat(&other.shape)?;
        let data = nd_kron(&self.data, &other.data);
        Ok(Operator { shape, data })
    }

    /// Reorder legs; `order[k]` is the current position of the leg that ends
    /// up at position `k`. Pure data movement, bit-exact.
    pub fn permute(&self, order: &[usize]) -> Result<Operator> {
        let l = self.shape.len();
        if order.len() != l {
            return Err(Error::Shape(format!(
                "permutation of length {} applied to {} legs",
                order.len(),
                l
            )));
        }
        let mut seen = vec![false; l];
        for &p in order {
            if p >= l || seen[p] {
                return Err(Error::Shape("invalid leg permutation".into()));
            }
            seen[p] = true;
        }
        if l <= 1 || order.iter().enumerate().all(|(k, &p)| k == p) {
            return Ok(self.clone());
        }
        let dims = self.shape.dims();
        let full: Vec<usize> = dims.iter().chain(dims.iter()).copied().collect();
        let tens = self
            .data
            .view()
            .into_shape_with_order(IxDyn(&full))
            .expect("total dimension is invariant under leg reshaping");
        let axes: Vec<usize> = order.iter().copied().chain(order.iter().map(|&p| p + l)).collect();
        let permuted = tens.permuted_axes(IxDyn(&axes));
        let contiguous = permuted.as_standard_layout().into_owned();
        let d = self.shape.total_dim();
        let data = contiguous
            .into_shape_with_order((d, d))
            .expect("total dimension is invariant under leg reshaping");
        let legs = order.iter().map(|&p| self.shape.legs()[p].clone()).collect();
        Ok(Operator { shape: LegShape { legs }, data })
    }

    /// Extend to `target` by acting as the identity on all legs not present
    /// in `self`, then permute legs into target order.
    pub fn embed(&self, target: &LegShape) -> Result<Operator> {
        for leg in self.shape.legs() {
            match target.leg(&leg.label) {
                Some(t) if t == leg => {}
                Some(t) => {
                    return Err(Error::Shape(format!(
                        "leg '{}' is {}-dimensional {:?} here but {}-dimensional {:?} in the target",
                        leg.label, leg.dim, leg.kind, t.dim, t.kind
                    )))
                }
                None => {
                    return Err(Error::Shape(format!(
                        "leg '{}' is missing from the embedding target",
                        leg.label
                    )))
                }
            }
        }
        let rest = LegShape {
            legs: target
                .legs()
                .iter()
                .filter(|l| self.shape.position(&l.label).is_none())
                .cloned()
                .collect(),
        };
        let ext = self.kron(&Operator::identity(rest))?;
        let order: Vec<usize> = target
            .legs()
            .iter()
            .map(|l| ext.shape.position(&l.label).expect("leg present by construction"))
            .collect();
        ext.permute(&order)
    }

    /// Trace over the named leg; the result loses that leg.
    pub fn partial_trace(&self, label: &str) -> Result<Operator> {
        let p = self
            .shape
            .position(label)
            .ok_or_else(|| Error::Shape(format!("no leg labeled '{label}'")))?;
        let l = self.shape.len();
        let dims = self.shape.dims();
        let d = dims[p];
        let out_shape = self.shape.without(label);
        let out_dim = out_shape.total_dim();

        let full: Vec<usize> = dims.iter().chain(dims.iter()).copied().collect();
        let tens = self
            .data
            .view()
            .into_shape_with_order(IxDyn(&full))
            .expect("total dimension is invariant under leg reshaping");
        let rest: Vec<usize> = full
            .iter()
            .enumerate()
            .filter(|&(ax, _)| ax != p && ax != p + l)
            .map(|(_, &d)| d)
            .collect();
        let mut acc = ArrayD::<C64>::zeros(IxDyn(&rest));
        for i in 0..d {
            let row = tens.index_axis(Axis(p), i);
            // removing axis p shifts the column copy down by one
            let diag = row.index_axis(Axis(p + l - 1), i);
            acc = acc + &diag;
        }
        let contiguous = acc.as_standard_layout().into_owned();
        let data = contiguous
            .into_shape_with_order((out_dim, out_dim))
            .expect("total dimension is invariant under leg reshaping");
        Ok(Operator { shape: out_shape, data })
    }

    fn align(&self, other: &Operator) -> Result<(Operator, Operator)> {
        if self.shape == other.shape {
            return Ok((self.clone(), other.clone()));
        }
        if self.shape.contains(&other.shape) {
            return Ok((self.clone(), other.embed(&self.shape)?));
        }
        if other.shape.contains(&self.shape) {
            return Ok((self.embed(&other.shape)?, other.clone()));
        }
        Err(Error::Shape(format!(
            "incompatible shapes: {:?} vs {:?}",
            self.shape
                .legs()
                .iter()
                .map(|l| l.label.as_str())
                .collect::<Vec<_>>(),
            other
                .shape
                .legs()
                .iter()
                .map(|l| l.label.as_str())
                .collect::<Vec<_>>()
        )))
    }

    /// Operator product. If one shape is a sub-shape of the other, the
    /// smaller operand is identity-padded by [`Operator::embed`] first.
    pub fn dot(&self, other: &Operator) -> Result<Operator> {
        let (a, b) = self.align(other)?;
        Ok(Operator { shape: a.shape, data: a.data.dot(&b.data) })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        let (a, b) = self.align(other)?;
        Ok(Operator { shape: a.shape, data: a.data + b.data })
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        let (a, b) = self.align(other)?;
        Ok(Operator { shape: a.shape, data: a.data - b.data })
    }

    pub fn scale(&self, c: C64) -> Operator {
        Operator { shape: self.shape.clone(), data: self.data.mapv(|z| z * c) }
    }

    /// Commutator `[self, other]` after alignment.
    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.dot(other)?.sub(&other.dot(self)?)
    }

    pub fn trace(&self) -> C64 {
        self.data.diag().iter().sum()
    }

    pub fn fro_norm(&self) -> f64 {
        linalg::fro_norm(&self.data)
    }

    /// Matrix exponential (exact on diagonal input).
    pub fn exp(&self) -> Result<Operator> {
        Ok(Operator { shape: self.shape.clone(), data: linalg::expm(&self.data)? })
    }

    /// Inverse, refusing condition estimates above `1e12`.
    pub fn inv(&self) -> Result<Operator> {
        Ok(Operator { shape: self.shape.clone(), data: linalg::inv(&self.data)? })
    }

    /// Relative Frobenius residual against `other`, aligned first.
    pub fn rel_residual(&self, other: &Operator) -> Result<f64> {
        let (a, b) = self.align(other)?;
        Ok(linalg::rel_residual(&a.data, &b.data))
    }

    /// Commutation residual `rel(AB, BA)`; zero iff the operators commute.
    pub fn commute_residual(&self, other: &Operator) -> Result<f64> {
        self.dot(other)?.rel_residual(&other.dot(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn aux2(label: &str) -> Leg {
        Leg::aux(label, 2)
    }

    fn shape(legs: Vec<Leg>) -> LegShape {
        LegShape::new(legs).unwrap()
    }

    fn mat2(a: [[C64; 2]; 2]) -> Array2<C64> {
        Array2::from_shape_fn((2, 2), |(i, j)| a[i][j])
    }

    fn rng_mat2(seed: u64) -> Array2<C64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        Array2::from_shape_fn((2, 2), |_| C64::new(next(), next()))
    }

    /// 2x2 inverse by the adjugate formula; independent of linalg::inv.
    fn inv2(a: &Array2<C64>) -> Array2<C64> {
        let det = a[[0, 0]] * a[[1, 1]] - a[[0, 1]] * a[[1, 0]];
        mat2([
            [a[[1, 1]] / det, -a[[0, 1]] / det],
            [-a[[1, 0]] / det, a[[0, 0]] / det],
        ])
    }

    #[test]
    fn kron_identities() {
        let i2 = Operator::identity(shape(vec![aux2("a")]));
        let j2 = Operator::identity(shape(vec![aux2("b")]));
        let k = i2.kron(&j2).unwrap();
        assert_eq!(k.data(), Operator::identity(shape(vec![aux2("a"), aux2("b")])).data());
    }

    #[test]
    fn kron_basis_placement() {
        // E_11 (x) E_22 in 1-based index notation
        let zero = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let e11 = mat2([[one, zero], [zero, zero]]);
        let e22 = mat2([[zero, zero], [zero, one]]);
        let a = Operator::new(shape(vec![aux2("a")]), e11).unwrap();
        let b = Operator::new(shape(vec![aux2("b")]), e22).unwrap();
        let k = a.kron(&b).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == 1 && j == 1 { one } else { zero };
                assert_eq!(k.data()[[i, j]], expect);
            }
        }
    }

    #[test]
    fn kron_respects_products() {
        let a = rng_mat2(5);
        let b = rng_mat2(9);
        let ai = inv2(&a);
        let bi = inv2(&b);
        let sa = shape(vec![aux2("a")]);
        let sb = shape(vec![aux2("b")]);
        let lhs = Operator::new(sa.clone(), a).unwrap().kron(&Operator::new(sb.clone(), b).unwrap()).unwrap();
        let rhs = Operator::new(sa, ai).unwrap().kron(&Operator::new(sb, bi).unwrap()).unwrap();
        let prod = lhs.dot(&rhs).unwrap();
        let id = Operator::identity(prod.shape().clone());
        assert!(prod.rel_residual(&id).unwrap() < 1e-12);
    }

    #[test]
    fn kron_rejects_duplicate_labels() {
        let a = Operator::identity(shape(vec![aux2("a")]));
        assert!(matches!(a.kron(&a), Err(Error::Shape(_))));
    }

    #[test]
    fn embed_identity_grows() {
        let target = shape(vec![Leg::site("s1", 2), Leg::site("s2", 2)]);
        let i2 = Operator::identity(shape(vec![Leg::site("s1", 2)]));
        let e = i2.embed(&target).unwrap();
        assert_eq!(e.data(), Operator::identity(target).data());
    }

    #[test]
    fn embed_noop_on_equal_shape() {
        let s = shape(vec![Leg::site("s1", 2)]);
        let x = Operator::new(s.clone(), rng_mat2(1)).unwrap();
        let e = x.embed(&s).unwrap();
        assert_eq!(e.data(), x.data());
    }

    #[test]
    fn embeds_on_disjoint_legs_commute() {
        let target = shape(vec![Leg::site("s1", 2), Leg::site("s2", 2)]);
        let x = Operator::new(shape(vec![Leg::site("s2", 2)]), rng_mat2(2)).unwrap();
        let y = Operator::new(shape(vec![Leg::site("s1", 2)]), rng_mat2(3)).unwrap();
        let xe = x.embed(&target).unwrap();
        let ye = y.embed(&target).unwrap();
        assert!(xe.commute_residual(&ye).unwrap() < 1e-14);
    }

    #[test]
    fn embed_rejects_missing_and_mismatched_legs() {
        let target = shape(vec![Leg::site("s1", 2)]);
        let x = Operator::identity(shape(vec![Leg::site("s9", 2)]));
        assert!(matches!(x.embed(&target), Err(Error::Shape(_))));
        let y = Operator::identity(shape(vec![Leg::site("s1", 3)]));
        assert!(matches!(y.embed(&target), Err(Error::Shape(_))));
    }

    #[test]
    fn partial_trace_identity_factor() {
        let s = shape(vec![aux2("a"), Leg::site("s1", 2)]);
        let x = Operator::new(shape(vec![Leg::site("s1", 2)]), rng_mat2(4)).unwrap();
        let e = x.embed(&s).unwrap();
        let tr = e.partial_trace("a").unwrap();
        assert!(tr.rel_residual(&x.scale(c(2.0, 0.0))).unwrap() < 1e-15);
    }

    #[test]
    fn partial_trace_factorizes() {
        let a = rng_mat2(6);
        let b = rng_mat2(7);
        let ta: C64 = a.diag().iter().sum();
        let oa = Operator::new(shape(vec![aux2("a")]), a).unwrap();
        let ob = Operator::new(shape(vec![aux2("b")]), b.clone()).unwrap();
        let k = oa.kron(&ob).unwrap();
        let tr = k.partial_trace("a").unwrap();
        let expect = ob.scale(ta);
        assert!(tr.rel_residual(&expect).unwrap() < 1e-14);
        // also check b's data is untouched by the trace machinery
        assert_eq!(ob.data(), &b);
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        // independent oracle: explicit sum over composite indices
        let s = shape(vec![aux2("a"), aux2("b")]);
        let mut state = 77u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data = Array2::from_shape_fn((4, 4), |_| C64::new(next(), next()));
        let x = Operator::new(s, data.clone()).unwrap();
        let tr = x.partial_trace("a").unwrap();
        // row-major composite: index = i_a * 2 + i_b
        let mut oracle = Array2::<C64>::zeros((2, 2));
        for k in 0..2 {
            for l in 0..2 {
                let mut sum = C64::new(0.0, 0.0);
                for i in 0..2 {
                    sum += data[[i * 2 + k, i * 2 + l]];
                }
                oracle[[k, l]] = sum;
            }
        }
        assert_eq!(tr.data(), &oracle);
    }

    #[test]
    fn partial_trace_unknown_label() {
        let x = Operator::identity(shape(vec![aux2("a")]));
        assert!(matches!(x.partial_trace("zz"), Err(Error::Shape(_))));
    }

    #[test]
    fn permute_round_trip_is_bit_exact() {
        let s = shape(vec![aux2("a"), Leg::site("s1", 2), Leg::site("s2", 3)]);
        let d = s.total_dim();
        let mut state = 5u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let data = Array2::from_shape_fn((d, d), |_| C64::new(next(), next()));
        let x = Operator::new(s, data).unwrap();
        let fwd = [2usize, 0, 1];
        let mut back = [0usize; 3];
        for (k, &p) in fwd.iter().enumerate() {
            back[p] = k;
        }
        let y = x.permute(&fwd).unwrap().permute(&back).unwrap();
        assert_eq!(x.data(), y.data());
        assert_eq!(x.shape(), y.shape());
    }

    #[test]
    fn dot_aligns_subshapes() {
        let big = shape(vec![aux2("a"), Leg::site("s1", 2)]);
        let small = Operator::new(shape(vec![Leg::site("s1", 2)]), rng_mat2(8)).unwrap();
        let t = Operator::new(big.clone(), {
            let mut state = 13u64;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
            };
            Array2::from_shape_fn((4, 4), |_| C64::new(next(), next()))
        })
        .unwrap();
        let prod = small.dot(&t).unwrap();
        assert_eq!(prod.shape(), &big);
        let explicit = small.embed(&big).unwrap().dot(&t).unwrap();
        assert_eq!(prod.data(), explicit.data());
    }

    #[test]
    fn scalar_operator_traces() {
        let s = Operator::scalar(c(3.0, -1.0));
        assert_eq!(s.trace(), c(3.0, -1.0));
        let x = Operator::new(shape(vec![aux2("a")]), rng_mat2(21)).unwrap();
        let full = x.partial_trace("a").unwrap();
        assert_eq!(full.shape().len(), 0);
        assert!((full.trace() - x.trace()).norm() < 1e-15);
    }
}
