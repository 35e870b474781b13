//! Group partitions, per-group factorizations `X_I = U R`, group effects,
//! and the grouped sorted-L1 norm with its prox.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::sorted_l1::{dual_norm, prox_sorted_l1, sorted_l1_norm};

/// Singular values at or below this fraction of the largest one are dropped.
pub const RANK_TOL: f64 = 1e-10;

/// Disjoint, covering groups of variable indices with positive weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    weights: Vec<f64>,
    p: usize,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, weights: Vec<f64>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::InvalidPartition("no groups".into()));
        }
        check_len("group weights", groups.len(), weights.len())?;
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidPartition("weights must be positive".into()));
        }
        let p: usize = groups.iter().map(Vec::len).sum();
        let mut seen = vec![false; p];
        for (i, g) in groups.iter().enumerate() {
            if g.is_empty() {
                return Err(Error::InvalidPartition(format!("group {i} is empty")));
            }
            for &j in g {
                if j >= p || seen[j] {
                    return Err(Error::InvalidPartition(format!(
                        "groups must partition 0..{p}; index {j} is out of range or repeated"
                    )));
                }
                seen[j] = true;
            }
        }
        Ok(Self { groups, weights, p })
    }

    /// Groups from one label per variable; groups are ordered by label and
    /// all weights are 1.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut by_label: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (j, &g) in labels.iter().enumerate() {
            by_label.entry(g).or_default().push(j);
        }
        let groups: Vec<Vec<usize>> = by_label.into_values().collect();
        let m = groups.len();
        Self::new(groups, vec![1.0; m])
    }

    /// Consecutive groups of the given sizes.
    pub fn contiguous(sizes: &[usize]) -> Result<Self> {
        let mut start = 0;
        let groups = sizes
            .iter()
            .map(|&s| {
                let g: Vec<usize> = (start..start + s).collect();
                start += s;
                g
            })
            .collect();
        Self::new(groups, vec![1.0; sizes.len()])
    }

    pub fn with_weights(self, weights: Vec<f64>) -> Result<Self> {
        Self::new(self.groups, weights)
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn num_vars(&self) -> usize {
        self.p
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// Group index of every variable.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = vec![0; self.p];
        for (i, g) in self.groups.iter().enumerate() {
            for &j in g {
                out[j] = i;
            }
        }
        out
    }
}

/// How group weights are derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightRule {
    One,
    Size,
    SqrtSize,
    SqrtRank,
}

impl WeightRule {
    pub fn weights(self, sizes: &[usize], ranks: &[usize]) -> Vec<f64> {
        let src = match self {
            WeightRule::Size | WeightRule::SqrtSize | WeightRule::One => sizes,
            WeightRule::SqrtRank => ranks,
        };
        src.iter()
            .map(|&s| match self {
                WeightRule::One => 1.0,
                WeightRule::Size => s as f64,
                WeightRule::SqrtSize | WeightRule::SqrtRank => (s as f64).sqrt(),
            })
            .collect()
    }
}

impl std::str::FromStr for WeightRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" => Ok(WeightRule::One),
            "size" => Ok(WeightRule::Size),
            "sqrt_size" => Ok(WeightRule::SqrtSize),
            "sqrt_rank" => Ok(WeightRule::SqrtRank),
            other => Err(Error::Config(format!("unknown weight rule {other:?}"))),
        }
    }
}

/// Nonnegative per-group effects `||X_{I_i} b_{I_i}||_2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupEffects(Vec<f64>);

impl GroupEffects {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::domain("group effects must be nonnegative"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Groups whose effect exceeds `rel_tol` times the largest effect.
    pub fn support(&self, rel_tol: f64) -> Vec<usize> {
        let max = self.0.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return Vec::new();
        }
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > rel_tol * max)
            .map(|(i, _)| i)
            .collect()
    }
}

/// A design matrix together with its per-group factorizations and the
/// standardized design `Xtilde = [U_1 ... U_m]`.
#[derive(Debug, Clone)]
pub struct GroupedDesign {
    x: DMatrix<f64>,
    partition: GroupPartition,
    ranks: Vec<usize>,
    u_blocks: Vec<DMatrix<f64>>,
    r_blocks: Vec<DMatrix<f64>>,
    // minimum-norm right inverse of each R_i
    r_pinv: Vec<DMatrix<f64>>,
    xtilde: DMatrix<f64>,
    offsets: Vec<usize>,
    cross_gram: OnceLock<f64>,
    // squared spectral norm of Xtilde M for the current weights
    lipschitz: OnceLock<f64>,
}

/// Builds the grouped design with a thin SVD per group.
pub fn build_grouped_design(x: DMatrix<f64>, partition: GroupPartition) -> Result<GroupedDesign> {
    GroupedDesign::new(x, partition)
}

impl GroupedDesign {
    pub fn new(x: DMatrix<f64>, partition: GroupPartition) -> Result<Self> {
        check_len("design columns", partition.num_vars(), x.ncols())?;
        let n = x.nrows();
        let m = partition.num_groups();
        let mut ranks = Vec::with_capacity(m);
        let mut u_blocks = Vec::with_capacity(m);
        let mut r_blocks = Vec::with_capacity(m);
        let mut r_pinv = Vec::with_capacity(m);

        for (i, group) in partition.groups().iter().enumerate() {
            let sub = x.select_columns(group);
            let svd = sub.svd(true, true);
            let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
            let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
            if !(sigma_max > 0.0) {
                return Err(Error::ZeroRankGroup(i));
            }
            let mut keep: Vec<usize> = (0..svd.singular_values.len())
                .filter(|&k| svd.singular_values[k] > RANK_TOL * sigma_max)
                .collect();
            keep.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
            let l = keep.len();
            let k = group.len();
            let mut u_i = DMatrix::zeros(n, l);
            let mut r_i = DMatrix::zeros(l, k);
            let mut pinv_i = DMatrix::zeros(k, l);
            for (c, &s_idx) in keep.iter().enumerate() {
                let s = svd.singular_values[s_idx];
                u_i.set_column(c, &u.column(s_idx));
                for col in 0..k {
                    r_i[(c, col)] = s * v_t[(s_idx, col)];
                    pinv_i[(col, c)] = v_t[(s_idx, col)] / s;
                }
            }
            ranks.push(l);
            u_blocks.push(u_i);
            r_blocks.push(r_i);
            r_pinv.push(pinv_i);
        }

        let mut offsets = Vec::with_capacity(m + 1);
        offsets.push(0);
        for l in &ranks {
            offsets.push(offsets.last().unwrap() + l);
        }
        let p_tilde = *offsets.last().unwrap();
        let mut xtilde = DMatrix::zeros(n, p_tilde);
        for (i, u) in u_blocks.iter().enumerate() {
            xtilde.columns_mut(offsets[i], ranks[i]).copy_from(u);
        }

        Ok(Self {
            x,
            partition,
            ranks,
            u_blocks,
            r_blocks,
            r_pinv,
            xtilde,
            offsets,
            cross_gram: OnceLock::new(),
            lipschitz: OnceLock::new(),
        })
    }

    /// Same factorization, weights replaced.
    pub fn with_weights(mut self, weights: Vec<f64>) -> Result<Self> {
        self.partition = self.partition.with_weights(weights)?;
        self.lipschitz = OnceLock::new();
        Ok(self)
    }

    pub fn with_weight_rule(self, rule: WeightRule) -> Result<Self> {
        let w = rule.weights(&self.partition.sizes(), &self.ranks);
        self.with_weights(w)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn partition(&self) -> &GroupPartition {
        &self.partition
    }

    pub fn weights(&self) -> &[f64] {
        self.partition.weights()
    }

    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    pub fn u_block(&self, i: usize) -> &DMatrix<f64> {
        &self.u_blocks[i]
    }

    pub fn r_block(&self, i: usize) -> &DMatrix<f64> {
        &self.r_blocks[i]
    }

    pub fn xtilde(&self) -> &DMatrix<f64> {
        &self.xtilde
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn p_tilde(&self) -> usize {
        self.xtilde.ncols()
    }

    pub fn num_groups(&self) -> usize {
        self.partition.num_groups()
    }

    /// Start offsets of the standardized blocks, with a trailing `p_tilde`.
    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub(crate) fn cached_lipschitz(&self, compute: impl FnOnce() -> f64) -> f64 {
        *self.lipschitz.get_or_init(compute)
    }

    /// Largest |U_i^T U_j| entry over pairs of distinct groups.
    pub fn max_cross_inner_product(&self) -> f64 {
        *self.cross_gram.get_or_init(|| {
            let gram = self.xtilde.tr_mul(&self.xtilde);
            let labels = self.tilde_labels();
            let mut worst: f64 = 0.0;
            for c in 0..gram.ncols() {
                for r in 0..gram.nrows() {
                    if labels[r] != labels[c] {
                        worst = worst.max(gram[(r, c)].abs());
                    }
                }
            }
            worst
        })
    }

    fn tilde_labels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.p_tilde());
        for (i, l) in self.ranks.iter().enumerate() {
            out.extend(std::iter::repeat(i).take(*l));
        }
        out
    }

    /// Maps standardized coefficients `c` (length `p_tilde`) to a
    /// minimum-norm `beta` with `R_i beta_{I_i} = c_i` for every group.
    pub fn coefficients_from_tilde(&self, c: &[f64]) -> Result<DVector<f64>> {
        check_len("standardized coefficients", self.p_tilde(), c.len())?;
        let mut beta = DVector::zeros(self.p());
        for (i, group) in self.partition.groups().iter().enumerate() {
            let block = DVector::from_column_slice(&c[self.offsets[i]..self.offsets[i + 1]]);
            if block.iter().all(|&v| v == 0.0) {
                continue;
            }
            let b = &self.r_pinv[i] * block;
            for (k, &j) in group.iter().enumerate() {
                beta[j] = b[k];
            }
        }
        Ok(beta)
    }

    /// `c_i = R_i beta_{I_i}` stacked.
    pub fn tilde_from_coefficients(&self, beta: &[f64]) -> Result<Vec<f64>> {
        check_len("coefficients", self.p(), beta.len())?;
        let mut out = Vec::with_capacity(self.p_tilde());
        for (i, group) in self.partition.groups().iter().enumerate() {
            let b = DVector::from_iterator(group.len(), group.iter().map(|&j| beta[j]));
            out.extend((&self.r_blocks[i] * b).iter());
        }
        Ok(out)
    }

    /// Group effects computed directly as `||X_{I_i} b_{I_i}||_2`.
    pub fn group_effects_direct(&self, b: &[f64]) -> Result<GroupEffects> {
        check_len("coefficients", self.p(), b.len())?;
        let values = self
            .partition
            .groups()
            .iter()
            .map(|g| {
                let mut acc = DVector::<f64>::zeros(self.n());
                for &j in g {
                    acc.axpy(b[j], &self.x.column(j), 1.0);
                }
                acc.norm()
            })
            .collect();
        GroupEffects::new(values)
    }
}

/// Euclidean norms of consecutive blocks of the given sizes.
pub fn block_norms(sizes: &[usize], y: &[f64]) -> Result<Vec<f64>> {
    check_len("blocked vector", sizes.iter().sum(), y.len())?;
    let mut start = 0;
    Ok(sizes
        .iter()
        .map(|&s| {
            let n = y[start..start + s]
                .iter()
                .map(|v| v * v)
                .sum::<f64>()
                .sqrt();
            start += s;
            n
        })
        .collect())
}

/// `||R_i b_{I_i}||_2` for every group.
pub fn group_effects(design: &GroupedDesign, b: &[f64]) -> Result<GroupEffects> {
    let c = design.tilde_from_coefficients(b)?;
    GroupEffects::new(block_norms(design.ranks(), &c)?)
}

/// `J_lambda(W [[b]])`.
pub fn grouped_norm(lambda: &[f64], design: &GroupedDesign, b: &[f64]) -> Result<f64> {
    check_len("lambda", design.num_groups(), lambda.len())?;
    let effects = group_effects(design, b)?;
    let weighted: Vec<f64> = effects
        .values()
        .iter()
        .zip(design.weights())
        .map(|(e, w)| e * w)
        .collect();
    sorted_l1_norm(lambda, &weighted)
}

/// Prox of `J_lambda([[y]])` in unit-weight standardized coordinates: the
/// SLOPE prox of the block norms, each block rescaled along its direction.
pub fn prox_grouped(lambda: &[f64], sizes: &[usize], y: &[f64]) -> Result<Vec<f64>> {
    check_len("lambda", sizes.len(), lambda.len())?;
    let norms = block_norms(sizes, y)?;
    let shrunk = prox_sorted_l1(lambda, &norms)?;
    let mut out = vec![0.0; y.len()];
    let mut start = 0;
    for ((&s, &norm), &target) in sizes.iter().zip(&norms).zip(&shrunk) {
        if norm > 0.0 && target > 0.0 {
            let f = target / norm;
            for k in start..start + s {
                out[k] = f * y[k];
            }
        }
        start += s;
    }
    Ok(out)
}

/// Dual norm of `J_lambda([[.]])` in unit-weight standardized coordinates.
pub fn grouped_dual_norm(lambda: &[f64], sizes: &[usize], x: &[f64]) -> Result<f64> {
    dual_norm(lambda, &block_norms(sizes, x)?)
}
