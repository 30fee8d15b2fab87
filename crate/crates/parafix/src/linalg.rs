//! Dense vectors, stacked block states, row-stochastic matrices and the
//! norm machinery used by every other module.
//!
//! All block combinations accumulate in ascending agent index. Floating
//! point addition is not associative, so a single canonical order is what
//! lets the stacked engine and the message-passing simulator produce
//! bit-identical trajectories; both route their sums through
//! [`weighted_sum`].

use serde::Serialize;
use thiserror::Error;

/// Tolerance for stochasticity checks (row sums and entry bounds).
pub const STOCHASTIC_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("vector must have at least one entry")]
    EmptyVector,
    #[error("entry {index} is not finite")]
    NonFiniteEntry { index: usize },
    #[error("norm order p must satisfy 1 < p < inf, got {p}")]
    InvalidNormOrder { p: f64 },
    #[error("stacked state must have at least one block")]
    EmptyStack,
    #[error("block {index} has dimension {got}, expected {expected}")]
    BlockDimMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("matrix data has length {len}, expected {m}x{m}")]
    BadShape { len: usize, m: usize },
    #[error("entry ({row},{col}) = {value} outside [0,1]")]
    EntryOutOfRange { row: usize, col: usize, value: f64 },
    #[error("row {row} sums to {sum}, not 1 within {STOCHASTIC_TOL}")]
    RowSumOffUnity { row: usize, sum: f64 },
    #[error("row {row} sums to {sum} and cannot be renormalized")]
    RowNotRenormalizable { row: usize, sum: f64 },
    #[error("operand has {got} blocks, expected {expected}")]
    BlockCountMismatch { got: usize, expected: usize },
    #[error("matrix is {got}x{got}, expected {expected}x{expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("matrix product of an empty factor list")]
    EmptyProduct,
}

/// Norm order `p` with `1 < p < inf`. The endpoints are rejected because
/// the strictness arguments behind the convergence machinery rely on
/// Minkowski strictness, which fails at p = 1 and p = inf.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct NormOrder(f64);

impl NormOrder {
    pub fn new(p: f64) -> Result<Self, LinalgError> {
        if p.is_finite() && p > 1.0 {
            Ok(NormOrder(p))
        } else {
            Err(LinalgError::InvalidNormOrder { p })
        }
    }

    /// The Euclidean order, p = 2.
    pub fn euclidean() -> Self {
        NormOrder(2.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// A real vector of dimension n >= 1 with finite entries.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct VecN(Vec<f64>);

impl VecN {
    /// Validating constructor: rejects empty vectors and NaN/Inf entries.
    pub fn new(entries: Vec<f64>) -> Result<Self, LinalgError> {
        if entries.is_empty() {
            return Err(LinalgError::EmptyVector);
        }
        if let Some(index) = entries.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFiniteEntry { index });
        }
        Ok(VecN(entries))
    }

    /// Internal constructor for computed values; finiteness is re-checked
    /// by the run loops, not here, so transient overflow surfaces as a run
    /// failure instead of a panic.
    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        debug_assert!(!entries.is_empty());
        VecN(entries)
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "vector dimension must be at least 1");
        VecN(vec![0.0; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// (sum_k |x_k|^p)^(1/p); zero iff the vector is zero.
    pub fn p_norm(&self, order: NormOrder) -> f64 {
        let p = order.value();
        let mut sum = 0.0;
        for &v in &self.0 {
            sum += v.abs().powf(p);
        }
        sum.powf(1.0 / p)
    }

    /// Dot product, ascending index.
    pub fn dot(&self, other: &VecN) -> f64 {
        assert_eq!(self.dim(), other.dim(), "dot dimension mismatch");
        let mut sum = 0.0;
        for (a, b) in self.0.iter().zip(&other.0) {
            sum += a * b;
        }
        sum
    }

    pub fn add(&self, other: &VecN) -> VecN {
        assert_eq!(self.dim(), other.dim(), "add dimension mismatch");
        VecN(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &VecN) -> VecN {
        assert_eq!(self.dim(), other.dim(), "sub dimension mismatch");
        VecN(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, factor: f64) -> VecN {
        VecN(self.0.iter().map(|a| factor * a).collect())
    }
}

/// m blocks of equal dimension n: the stacked state of all agents.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StackedState {
    blocks: Vec<VecN>,
}

impl StackedState {
    pub fn new(blocks: Vec<VecN>) -> Result<Self, LinalgError> {
        if blocks.is_empty() {
            return Err(LinalgError::EmptyStack);
        }
        let n = blocks[0].dim();
        for (index, b) in blocks.iter().enumerate() {
            if b.dim() != n {
                return Err(LinalgError::BlockDimMismatch {
                    index,
                    got: b.dim(),
                    expected: n,
                });
            }
        }
        Ok(StackedState { blocks })
    }

    pub(crate) fn from_raw(blocks: Vec<VecN>) -> Self {
        debug_assert!(!blocks.is_empty());
        StackedState { blocks }
    }

    /// The consensus stack: m copies of `y`.
    pub fn consensus(y: &VecN, m: usize) -> Self {
        assert!(m >= 1, "need at least one block");
        StackedState {
            blocks: vec![y.clone(); m],
        }
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dim(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn block(&self, i: usize) -> &VecN {
        &self.blocks[i]
    }

    pub fn blocks(&self) -> &[VecN] {
        &self.blocks
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().all(VecN::is_finite)
    }

    /// Mixed vector norm: max over blocks of the block's p-norm.
    pub fn mixed_norm(&self, order: NormOrder) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.p_norm(order))
            .fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &StackedState) -> StackedState {
        assert_eq!(self.num_blocks(), other.num_blocks());
        StackedState {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    /// Largest pairwise block distance in the p-norm; zero on consensus.
    pub fn max_block_distance(&self, order: NormOrder) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.blocks.len() {
            for j in (i + 1)..self.blocks.len() {
                worst = worst.max(self.blocks[i].sub(&self.blocks[j]).p_norm(order));
            }
        }
        worst
    }
}

/// The one accumulation routine behind every block combination in the
/// crate: sum of `weight * block` in the order the iterator yields terms.
/// Callers pass terms in ascending agent index.
pub(crate) fn weighted_sum<'a, I>(n: usize, terms: I) -> VecN
where
    I: Iterator<Item = (f64, &'a VecN)>,
{
    let mut acc = vec![0.0; n];
    for (w, v) in terms {
        debug_assert_eq!(v.dim(), n);
        for (a, x) in acc.iter_mut().zip(v.entries()) {
            *a += w * x;
        }
    }
    VecN::from_raw(acc)
}

/// Row-stochastic m x m matrix; `entry(i, j)` is the weight agent i places
/// on agent j. Entries in [0,1] and unit row sums are enforced within
/// [`STOCHASTIC_TOL`] (floating-point products of stochastic matrices can
/// stray from the exact bounds by an ulp).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StochasticMatrix {
    m: usize,
    entries: Vec<f64>,
}

impl StochasticMatrix {
    pub fn new(m: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if m == 0 || entries.len() != m * m {
            return Err(LinalgError::BadShape {
                len: entries.len(),
                m,
            });
        }
        for row in 0..m {
            let mut sum = 0.0;
            for col in 0..m {
                let value = entries[row * m + col];
                if !value.is_finite()
                    || !(-STOCHASTIC_TOL..=1.0 + STOCHASTIC_TOL).contains(&value)
                {
                    return Err(LinalgError::EntryOutOfRange { row, col, value });
                }
                sum += value;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(LinalgError::RowSumOffUnity { row, sum });
            }
        }
        Ok(StochasticMatrix { m, entries })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, LinalgError> {
        let m = rows.len();
        for row in &rows {
            if row.len() != m {
                return Err(LinalgError::BadShape {
                    len: row.len() * m,
                    m,
                });
            }
        }
        Self::new(m, rows.into_iter().flatten().collect())
    }

    /// Explicit renormalization path: scales each row by its sum. Rejects
    /// negative entries and rows that do not sum to something positive.
    /// Plain `new` never renormalizes, so off-unity rows surface as errors
    /// instead of being silently patched.
    pub fn new_renormalized(m: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        if m == 0 || entries.len() != m * m {
            return Err(LinalgError::BadShape {
                len: entries.len(),
                m,
            });
        }
        let mut scaled = entries;
        for row in 0..m {
            let mut sum = 0.0;
            for col in 0..m {
                let value = scaled[row * m + col];
                if !value.is_finite() || value < 0.0 {
                    return Err(LinalgError::EntryOutOfRange { row, col, value });
                }
                sum += value;
            }
            if sum <= 0.0 || !sum.is_finite() {
                return Err(LinalgError::RowNotRenormalizable { row, sum });
            }
            for col in 0..m {
                scaled[row * m + col] /= sum;
            }
        }
        Self::new(m, scaled)
    }

    pub fn identity(m: usize) -> Self {
        assert!(m >= 1);
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            entries[i * m + i] = 1.0;
        }
        StochasticMatrix { m, entries }
    }

    pub fn size(&self) -> usize {
        self.m
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.m..(i + 1) * self.m]
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Entrywise positivity: every entry strictly greater than `eps`.
    pub fn is_positive(&self, eps: f64) -> bool {
        self.min_entry() > eps
    }

    /// Applies `S (x) I` blockwise: block i of the result is
    /// `sum_j s_ij * x_j` in ascending j, skipping exact-zero entries (the
    /// same terms, in the same order, as a message-passing inbox).
    pub fn apply_blockwise(&self, x: &StackedState) -> Result<StackedState, LinalgError> {
        if x.num_blocks() != self.m {
            return Err(LinalgError::BlockCountMismatch {
                got: x.num_blocks(),
                expected: self.m,
            });
        }
        let n = x.block_dim();
        let blocks = (0..self.m)
            .map(|i| {
                weighted_sum(
                    n,
                    self.row(i)
                        .iter()
                        .enumerate()
                        .filter(|(_, s)| **s != 0.0)
                        .map(|(j, s)| (*s, x.block(j))),
                )
            })
            .collect();
        Ok(StackedState::from_raw(blocks))
    }

    /// `self * rhs`, revalidated as stochastic.
    pub fn multiply(&self, rhs: &StochasticMatrix) -> Result<StochasticMatrix, LinalgError> {
        if rhs.m != self.m {
            return Err(LinalgError::SizeMismatch {
                got: rhs.m,
                expected: self.m,
            });
        }
        let m = self.m;
        let mut entries = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let mut sum = 0.0;
                for k in 0..m {
                    sum += self.entry(i, k) * rhs.entry(k, j);
                }
                entries[i * m + j] = sum;
            }
        }
        Self::new(m, entries)
    }
}

/// Product of a factor list with later-indexed factors on the left:
/// `product(&[s1, s2, s3]) = s3 * s2 * s1`, matching a composition window
/// `S(q) S(q-1) ... S(1)`.
pub fn stochastic_product(factors: &[StochasticMatrix]) -> Result<StochasticMatrix, LinalgError> {
    let (first, rest) = factors.split_first().ok_or(LinalgError::EmptyProduct)?;
    let mut acc = first.clone();
    for f in rest {
        acc = f.multiply(&acc)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[f64]) -> VecN {
        VecN::new(entries.to_vec()).unwrap()
    }

    fn stack(blocks: &[&[f64]]) -> StackedState {
        StackedState::new(blocks.iter().map(|b| v(b)).collect()).unwrap()
    }

    #[test]
    fn p_norm_known_values() {
        let p2 = NormOrder::new(2.0).unwrap();
        assert!((v(&[3.0, 4.0]).p_norm(p2) - 5.0).abs() < 1e-12);
        let p3 = NormOrder::new(3.0).unwrap();
        assert_eq!(v(&[0.0, 0.0, 0.0]).p_norm(p3), 0.0);
        assert!((v(&[1.0, 1.0]).p_norm(p2) - std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn p_norm_zero_iff_zero_vector() {
        let p = NormOrder::new(1.5).unwrap();
        assert_eq!(v(&[0.0, 0.0]).p_norm(p), 0.0);
        assert!(v(&[0.0, 1e-30]).p_norm(p) > 0.0);
    }

    #[test]
    fn norm_order_rejects_endpoints() {
        assert!(NormOrder::new(1.0).is_err());
        assert!(NormOrder::new(0.5).is_err());
        assert!(NormOrder::new(f64::INFINITY).is_err());
        assert!(NormOrder::new(f64::NAN).is_err());
        assert!(NormOrder::new(1.0000001).is_ok());
    }

    #[test]
    fn vecn_rejects_bad_input() {
        assert_eq!(VecN::new(vec![]), Err(LinalgError::EmptyVector));
        assert_eq!(
            VecN::new(vec![1.0, f64::NAN]),
            Err(LinalgError::NonFiniteEntry { index: 1 })
        );
    }

    #[test]
    fn mixed_norm_known_values() {
        let p2 = NormOrder::new(2.0).unwrap();
        assert!((stack(&[&[3.0, 4.0], &[1.0, 0.0]]).mixed_norm(p2) - 5.0).abs() < 1e-12);
        assert_eq!(stack(&[&[0.0], &[0.0]]).mixed_norm(p2), 0.0);
        let single = stack(&[&[2.0, -1.0]]);
        assert_eq!(single.mixed_norm(p2), single.block(0).p_norm(p2));
    }

    #[test]
    fn apply_blockwise_known_values() {
        let s = StochasticMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        let out = s.apply_blockwise(&stack(&[&[0.0], &[4.0]])).unwrap();
        assert_eq!(out, stack(&[&[0.0], &[2.0]]));

        let avg = StochasticMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
        let out = avg.apply_blockwise(&stack(&[&[2.0], &[4.0]])).unwrap();
        assert_eq!(out, stack(&[&[3.0], &[3.0]]));
    }

    #[test]
    fn apply_blockwise_identity_is_exact() {
        let x = stack(&[&[1.25, -7.5], &[0.1, 0.2]]);
        let out = StochasticMatrix::identity(2).apply_blockwise(&x).unwrap();
        assert_eq!(out, x);
    }

    #[test]
    fn apply_blockwise_dimension_mismatch() {
        let s = StochasticMatrix::identity(2);
        let x = stack(&[&[1.0]]);
        assert!(matches!(
            s.apply_blockwise(&x),
            Err(LinalgError::BlockCountMismatch { got: 1, expected: 2 })
        ));
    }

    #[test]
    fn product_known_values() {
        let s1 = StochasticMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.0, 1.0]]).unwrap();
        let s2 = StochasticMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        // S(2) * S(1) with factors listed in time order [S(1), S(2)].
        let prod = stochastic_product(&[s1.clone(), s2]).unwrap();
        let expected =
            StochasticMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((prod.entry(i, j) - expected.entry(i, j)).abs() < 1e-15);
            }
        }

        assert_eq!(stochastic_product(std::slice::from_ref(&s1)).unwrap(), s1);
        let id = StochasticMatrix::identity(3);
        assert_eq!(
            stochastic_product(&[id.clone(), id.clone(), id.clone()]).unwrap(),
            id
        );
        assert!(matches!(
            stochastic_product(&[]),
            Err(LinalgError::EmptyProduct)
        ));
    }

    #[test]
    fn positivity_known_values() {
        let pos = StochasticMatrix::from_rows(vec![vec![0.5, 0.5], vec![0.25, 0.75]]).unwrap();
        assert!(pos.is_positive(0.0));
        assert!(!StochasticMatrix::identity(2).is_positive(0.0));
        let part = StochasticMatrix::from_rows(vec![vec![1.0, 0.0], vec![0.5, 0.5]]).unwrap();
        assert!(!part.is_positive(0.0));
    }

    #[test]
    fn stochastic_validation() {
        assert!(matches!(
            StochasticMatrix::from_rows(vec![vec![0.6, 0.6], vec![0.5, 0.5]]),
            Err(LinalgError::RowSumOffUnity { row: 0, .. })
        ));
        assert!(matches!(
            StochasticMatrix::from_rows(vec![vec![-0.2, 1.2], vec![0.5, 0.5]]),
            Err(LinalgError::EntryOutOfRange { row: 0, col: 0, .. })
        ));
    }

    #[test]
    fn renormalization_is_explicit() {
        let s = StochasticMatrix::new_renormalized(2, vec![2.0, 2.0, 1.0, 3.0]).unwrap();
        assert_eq!(s.row(0), &[0.5, 0.5]);
        assert_eq!(s.row(1), &[0.25, 0.75]);
        assert!(StochasticMatrix::new(2, vec![2.0, 2.0, 1.0, 3.0]).is_err());
        assert!(matches!(
            StochasticMatrix::new_renormalized(2, vec![0.0, 0.0, 1.0, 1.0]),
            Err(LinalgError::RowNotRenormalizable { row: 0, .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn arb_norm_order() -> impl Strategy<Value = NormOrder> {
            prop::sample::select(vec![1.5, 2.0, 3.0]).prop_map(|p| NormOrder::new(p).unwrap())
        }

        fn arb_stochastic(m: usize) -> impl Strategy<Value = StochasticMatrix> {
            prop::collection::vec(0.01..1.0f64, m * m)
                .prop_map(move |raw| StochasticMatrix::new_renormalized(m, raw).unwrap())
        }

        fn arb_stack(m: usize, n: usize) -> impl Strategy<Value = StackedState> {
            prop::collection::vec(prop::collection::vec(-50.0..50.0f64, n), m).prop_map(|rows| {
                StackedState::new(rows.into_iter().map(|r| VecN::new(r).unwrap()).collect())
                    .unwrap()
            })
        }

        proptest! {
            // Stochastic averaging never expands the mixed-norm distance to
            // a consensus point.
            #[test]
            fn stochastic_nonexpansion(
                (s, x, y) in (2usize..5, 1usize..4).prop_flat_map(|(m, n)| (
                    arb_stochastic(m),
                    arb_stack(m, n),
                    prop::collection::vec(-10.0..10.0f64, n),
                )),
                p in arb_norm_order(),
            ) {
                let m = s.size();
                let y = VecN::new(y).unwrap();
                let ybar = StackedState::consensus(&y, m);
                let before = x.sub(&ybar).mixed_norm(p);
                let after = s.apply_blockwise(&x).unwrap().sub(&ybar).mixed_norm(p);
                prop_assert!(after <= before + 1e-12);
            }

            #[test]
            fn product_of_stochastic_is_stochastic(
                factors in (2usize..5, 1usize..5).prop_flat_map(|(m, count)| {
                    prop::collection::vec(arb_stochastic(m), count)
                }),
            ) {
                // `new` inside multiply re-asserts unit row sums within 1e-12.
                prop_assert!(stochastic_product(&factors).is_ok());
            }

            #[test]
            fn triangle_inequality(
                a in prop::collection::vec(-100.0..100.0f64, 1..6),
                b_scale in -2.0..2.0f64,
                p in arb_norm_order(),
            ) {
                let x = VecN::new(a.clone()).unwrap();
                let y = VecN::new(a.iter().map(|v| v * b_scale + 1.0).collect()).unwrap();
                let lhs = x.add(&y).p_norm(p);
                prop_assert!(lhs <= x.p_norm(p) + y.p_norm(p) + 1e-12);
            }

            #[test]
            fn permutation_permutes_blocks_exactly(
                n in 1usize..4,
                rows in prop::collection::vec(prop::collection::vec(-9.0..9.0f64, 3), 3),
                shift in 0usize..3,
            ) {
                let m = 3;
                let x = StackedState::new(
                    rows.iter()
                        .map(|r| VecN::new(r[..n].to_vec()).unwrap())
                        .collect(),
                )
                .unwrap();
                // Cyclic permutation: block i of result = block (i+shift) mod m.
                let mut entries = vec![0.0; m * m];
                for i in 0..m {
                    entries[i * m + (i + shift) % m] = 1.0;
                }
                let s = StochasticMatrix::new(m, entries).unwrap();
                let out = s.apply_blockwise(&x).unwrap();
                for i in 0..m {
                    prop_assert_eq!(out.block(i), x.block((i + shift) % m));
                }
            }
        }
    }
}
