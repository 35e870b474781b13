//! Genotype screening, correlation clumping and group SLOPE on cluster
//! representatives.
//!
//! Every SNP contributes a group made of its additive dummy (minor-allele
//! count) and its dominance dummy (heterozygote indicator), both centered and
//! scaled to unit norm. SNPs are screened with a one-way ANOVA on the
//! genotype classes, clumped around the smallest p-values, and the cluster
//! representatives enter a group SLOPE fit with estimated noise level.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::group_structure::{GroupPartition, GroupedDesign, WeightRule};
use crate::lambda_gen::lambda_corrected;
use crate::sigma_est::solve_with_sigma_estimation;
use crate::solver::SolveOptions;
use crate::special_fns::f_sf;

/// Minor-allele counts, one column per SNP.
#[derive(Debug, Clone, PartialEq)]
pub struct GenotypeMatrix {
    n: usize,
    // column-major, n entries per SNP
    values: Vec<u8>,
    snp_ids: Vec<String>,
}

impl GenotypeMatrix {
    /// `columns[j]` holds the genotypes of SNP `j` for all individuals.
    pub fn from_columns(columns: Vec<Vec<u8>>, snp_ids: Vec<String>) -> Result<Self> {
        check_len("SNP identifiers", columns.len(), snp_ids.len())?;
        let n = columns.first().map_or(0, Vec::len);
        if n < 2 {
            return Err(Error::domain("at least two individuals are required"));
        }
        let mut values = Vec::with_capacity(n * columns.len());
        for (j, col) in columns.iter().enumerate() {
            check_len("genotype column", n, col.len())?;
            if let Some(v) = col.iter().find(|&&v| v > 2) {
                return Err(Error::domain(format!(
                    "genotype {v} in SNP {j} is not 0, 1 or 2"
                )));
            }
            values.extend_from_slice(col);
        }
        Ok(Self { n, values, snp_ids })
    }

    /// Row-major input: `rows[i][j]` is individual `i` at SNP `j`.
    pub fn from_rows(rows: &[Vec<u8>], snp_ids: Vec<String>) -> Result<Self> {
        let s = snp_ids.len();
        let mut columns = vec![Vec::with_capacity(rows.len()); s];
        for row in rows {
            check_len("genotype row", s, row.len())?;
            for (j, &v) in row.iter().enumerate() {
                columns[j].push(v);
            }
        }
        Self::from_columns(columns, snp_ids)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_snps(&self) -> usize {
        self.snp_ids.len()
    }

    pub fn snp(&self, j: usize) -> &[u8] {
        &self.values[j * self.n..(j + 1) * self.n]
    }

    pub fn snp_ids(&self) -> &[String] {
        &self.snp_ids
    }

    /// Number of distinct genotype classes observed at SNP `j`.
    pub fn classes(&self, j: usize) -> usize {
        let mut seen = [false; 3];
        self.snp(j).iter().for_each(|&v| seen[v as usize] = true);
        seen.iter().filter(|&&s| s).count()
    }
}

/// Independent SNPs in Hardy-Weinberg equilibrium with the given minor-allele
/// frequencies.
pub fn simulate_genotypes<R: Rng + ?Sized>(
    n: usize,
    mafs: &[f64],
    rng: &mut R,
) -> Result<GenotypeMatrix> {
    let columns = mafs
        .iter()
        .map(|&f| {
            (0..n)
                .map(|_| rng.random_bool(f) as u8 + rng.random_bool(f) as u8)
                .collect()
        })
        .collect();
    let ids = (0..mafs.len()).map(|j| format!("snp{j}")).collect();
    GenotypeMatrix::from_columns(columns, ids)
}

/// Centered, unit-norm dummies. Constant columns are left at zero and flagged.
#[derive(Debug, Clone)]
pub struct DummyEncoding {
    pub additive: DMatrix<f64>,
    pub dominance: DMatrix<f64>,
    pub additive_ok: Vec<bool>,
    pub dominance_ok: Vec<bool>,
}

impl DummyEncoding {
    /// Nonconstant dummy columns of SNP `j`, additive first.
    pub fn group_columns(&self, j: usize) -> Vec<DVector<f64>> {
        let mut out = Vec::with_capacity(2);
        if self.additive_ok[j] {
            out.push(self.additive.column(j).into_owned());
        }
        if self.dominance_ok[j] {
            out.push(self.dominance.column(j).into_owned());
        }
        out
    }
}

fn standardize(raw: impl Iterator<Item = f64>, n: usize) -> Option<DVector<f64>> {
    let mut v = DVector::from_iterator(n, raw);
    let mean = v.mean();
    v.add_scalar_mut(-mean);
    let norm = v.norm();
    // raw entries are small integers, so anything nonconstant has norm >= 1/sqrt(n)
    if norm < 1e-8 {
        return None;
    }
    Some(v / norm)
}

pub fn dummy_encode(g: &GenotypeMatrix) -> DummyEncoding {
    let (n, s) = (g.n(), g.num_snps());
    let mut additive = DMatrix::zeros(n, s);
    let mut dominance = DMatrix::zeros(n, s);
    let mut additive_ok = vec![false; s];
    let mut dominance_ok = vec![false; s];
    for j in 0..s {
        let snp = g.snp(j);
        if let Some(c) = standardize(snp.iter().map(|&v| v as f64), n) {
            additive.set_column(j, &c);
            additive_ok[j] = true;
        }
        if let Some(c) = standardize(snp.iter().map(|&v| (v == 1) as u8 as f64), n) {
            dominance.set_column(j, &c);
            dominance_ok[j] = true;
        }
        if !additive_ok[j] {
            log::warn!("SNP {} is monomorphic and is excluded", g.snp_ids()[j]);
        }
    }
    DummyEncoding {
        additive,
        dominance,
        additive_ok,
        dominance_ok,
    }
}

/// One-way ANOVA p-value of `y` across the genotype classes of every SNP.
/// A single observed class gives 1; zero within-class variance gives 0 when
/// the class means differ and 1 otherwise.
pub fn anova_pvalues(g: &GenotypeMatrix, y: &[f64]) -> Result<Vec<f64>> {
    check_len("phenotype", g.n(), y.len())?;
    let n = g.n();
    let grand = y.iter().sum::<f64>() / n as f64;
    (0..g.num_snps())
        .map(|j| {
            let mut count = [0usize; 3];
            let mut sum = [0.0; 3];
            for (&v, &yi) in g.snp(j).iter().zip(y) {
                count[v as usize] += 1;
                sum[v as usize] += yi;
            }
            let k = count.iter().filter(|&&c| c > 0).count();
            if k < 2 || n <= k {
                return Ok(1.0);
            }
            let mean = |c: usize| sum[c] / count[c] as f64;
            let ssb: f64 = (0..3)
                .filter(|&c| count[c] > 0)
                .map(|c| count[c] as f64 * (mean(c) - grand).powi(2))
                .sum();
            let ssw: f64 = g
                .snp(j)
                .iter()
                .zip(y)
                .map(|(&v, &yi)| (yi - mean(v as usize)).powi(2))
                .sum();
            let (df1, df2) = ((k - 1) as u32, (n - k) as u32);
            // relative to the total sum of squares, anything this small is round-off
            let tiny = 1e-14 * (ssb + ssw);
            if ssw <= tiny {
                return Ok(if ssb > tiny { 0.0 } else { 1.0 });
            }
            let f = (ssb / df1 as f64) / (ssw / df2 as f64);
            f_sf(df1, df2, f)
        })
        .collect()
}

/// Source of pairwise SNP correlations for clumping.
pub trait CorrelationProvider {
    fn correlation(&self, i: usize, j: usize) -> f64;
}

impl<F: Fn(usize, usize) -> f64> CorrelationProvider for F {
    fn correlation(&self, i: usize, j: usize) -> f64 {
        self(i, j)
    }
}

/// Pearson correlations of additive dummies; monomorphic SNPs correlate 0
/// with everything else.
pub struct AdditiveCorrelation<'a>(pub &'a DummyEncoding);

impl CorrelationProvider for AdditiveCorrelation<'_> {
    fn correlation(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        self.0.additive.column(i).dot(&self.0.additive.column(j))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub representative: usize,
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClumpResult {
    /// Representatives in formation order.
    pub representatives: Vec<usize>,
    pub clusters: Vec<Cluster>,
}

/// Greedy clumping: among SNPs with `p < pi`, the smallest p-value (lowest
/// index on ties) forms a cluster with every remaining screened SNP whose
/// absolute correlation with it is at least `r`.
pub fn clump<C: CorrelationProvider + ?Sized>(
    pvals: &[f64],
    corr: &C,
    pi: f64,
    r: f64,
) -> Result<ClumpResult> {
    if !(pi > 0.0 && pi <= 1.0) {
        return Err(Error::domain(format!(
            "screening threshold must lie in (0, 1], got {pi}"
        )));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!(
            "correlation threshold must lie in (0, 1), got {r}"
        )));
    }
    let mut remaining: Vec<usize> = (0..pvals.len()).filter(|&j| pvals[j] < pi).collect();
    remaining.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]).then(a.cmp(&b)));
    let mut out = ClumpResult::default();
    while let Some(&rep) = remaining.first() {
        let (mut members, rest): (Vec<usize>, Vec<usize>) = remaining
            .iter()
            .partition(|&&j| j == rep || corr.correlation(rep, j).abs() >= r);
        members.sort_unstable();
        remaining = rest;
        out.representatives.push(rep);
        out.clusters.push(Cluster {
            representative: rep,
            members,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub pi: f64,
    pub r: f64,
    pub q: f64,
}

/// Outcome of the screening, clumping and selection pipeline. SNPs are
/// referred to by column index.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GeneReport {
    pub num_snps: usize,
    pub screened: Vec<usize>,
    pub clusters: Vec<Cluster>,
    pub representatives: Vec<usize>,
    /// Rank of each representative's dummy group.
    pub ranks: Vec<usize>,
    pub selected_representatives: Vec<usize>,
    /// All members of the selected clusters.
    pub selected_snps: Vec<usize>,
    /// Group effects aligned with `representatives`.
    pub effects: Vec<f64>,
    pub sigma_hat: Option<f64>,
    /// Corrected sequence over all polymorphic SNPs, of length `num_snps`.
    pub lambda_full: Vec<f64>,
    /// The leading `representatives.len()` entries actually used.
    pub lambda_used: Vec<f64>,
    pub converged: bool,
}

pub fn gene_gslope(
    g: &GenotypeMatrix,
    y: &[f64],
    params: PipelineParams,
    opts: &SolveOptions,
) -> Result<GeneReport> {
    if !(params.q > 0.0 && params.q < 1.0) {
        return Err(Error::domain(format!(
            "q must lie in (0, 1), got {}",
            params.q
        )));
    }
    let enc = dummy_encode(g);
    let pvals = anova_pvalues(g, y)?;
    let clumps = clump(&pvals, &AdditiveCorrelation(&enc), params.pi, params.r)?;
    let s = g.num_snps();
    let mut screened: Vec<usize> = (0..s).filter(|&j| pvals[j] < params.pi).collect();
    screened.sort_unstable();
    let mut report = GeneReport {
        num_snps: s,
        screened,
        converged: true,
        ..Default::default()
    };
    if clumps.representatives.is_empty() {
        return Ok(report);
    }

    // the chi components come from every polymorphic SNP, the levels from all s SNPs
    let all_ranks: Vec<usize> = (0..s)
        .map(|j| g.classes(j) - 1)
        .filter(|&l| l > 0)
        .collect();
    let all_weights: Vec<f64> = all_ranks.iter().map(|&l| (l as f64).sqrt()).collect();
    let lambda_full = lambda_corrected(params.q, &all_weights, &all_ranks, s, g.n())?.into_values();

    let mut columns = Vec::new();
    let mut sizes = Vec::new();
    for &rep in &clumps.representatives {
        let cols = enc.group_columns(rep);
        sizes.push(cols.len());
        columns.extend(cols);
    }
    let x = DMatrix::from_columns(&columns);
    let design = GroupedDesign::new(x, GroupPartition::contiguous(&sizes)?)?
        .with_weight_rule(WeightRule::SqrtRank)?;
    let lambda_used = lambda_full[..clumps.representatives.len()].to_vec();

    let est = solve_with_sigma_estimation(&design, &lambda_used, y, opts)?;
    let selected_representatives: Vec<usize> = est
        .result
        .selected
        .iter()
        .map(|&i| clumps.representatives[i])
        .collect();
    let mut selected_snps: Vec<usize> = est
        .result
        .selected
        .iter()
        .flat_map(|&i| clumps.clusters[i].members.iter().copied())
        .collect();
    selected_snps.sort_unstable();

    report.ranks = design.ranks().to_vec();
    report.representatives = clumps.representatives;
    report.clusters = clumps.clusters;
    report.selected_representatives = selected_representatives;
    report.selected_snps = selected_snps;
    report.effects = est.result.effects.values().to_vec();
    report.sigma_hat = Some(est.sigma_hat);
    report.lambda_full = lambda_full;
    report.lambda_used = lambda_used;
    report.converged = est.converged && est.result.converged;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn ids(s: usize) -> Vec<String> {
        (0..s).map(|j| format!("rs{j}")).collect()
    }

    #[test]
    fn encoding_of_a_small_snp() {
        let g = GenotypeMatrix::from_columns(vec![vec![0, 1, 2], vec![1, 1, 1]], ids(2)).unwrap();
        let enc = dummy_encode(&g);
        let a = enc.additive.column(0);
        let s = 2f64.sqrt();
        for (v, e) in a.iter().zip([-1.0 / s, 0.0, 1.0 / s]) {
            assert!((v - e).abs() < 1e-15);
        }
        // dominance raw (0, 1, 0): centered (-1/3, 2/3, -1/3), norm sqrt(2/3)
        let d = enc.dominance.column(0);
        let nrm = (2.0f64 / 3.0).sqrt();
        for (v, e) in d.iter().zip([-1.0 / 3.0, 2.0 / 3.0, -1.0 / 3.0]) {
            assert!((v - e / nrm).abs() < 1e-15);
        }
        assert!(!enc.additive_ok[1] && !enc.dominance_ok[1]);
        assert_eq!(enc.group_columns(1).len(), 0);
        assert!(GenotypeMatrix::from_columns(vec![vec![0, 3]], ids(1)).is_err());
        assert!(GenotypeMatrix::from_columns(vec![vec![0]], ids(1)).is_err());
    }

    #[test]
    fn encoded_columns_are_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = simulate_genotypes(300, &[0.05, 0.2, 0.4, 0.5], &mut rng).unwrap();
        let enc = dummy_encode(&g);
        for j in 0..4 {
            for c in enc.group_columns(j) {
                assert!((c.norm() - 1.0).abs() < 1e-12);
                assert!(c.sum().abs() < 1e-12);
            }
        }
    }

    #[test]
    fn anova_degenerate_cases() {
        let g =
            GenotypeMatrix::from_columns(vec![vec![0, 0, 1, 1, 2, 2], vec![1; 6]], ids(2)).unwrap();
        // equal class means
        let p = anova_pvalues(&g, &[1.0, 3.0, 2.0, 2.0, 0.0, 4.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12);
        assert_eq!(p[1], 1.0);
        // perfectly separated classes with no spread
        let p = anova_pvalues(&g, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]).unwrap();
        assert_eq!(p[0], 0.0);
    }

    #[test]
    fn two_class_anova_matches_t_test() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let col: Vec<u8> = (0..40).map(|_| rng.random_range(0..2u8) * 2).collect();
            if col.iter().all(|&v| v == col[0]) {
                continue;
            }
            let y: Vec<f64> = col
                .iter()
                .map(|&v| 0.3 * v as f64 + rng.sample::<f64, _>(StandardNormal))
                .collect();
            let g = GenotypeMatrix::from_columns(vec![col.clone()], ids(1)).unwrap();
            let p = anova_pvalues(&g, &y).unwrap()[0];

            let (a, b): (Vec<f64>, Vec<f64>) = {
                let a = y
                    .iter()
                    .zip(&col)
                    .filter(|(_, &c)| c == 0)
                    .map(|(v, _)| *v)
                    .collect();
                let b = y
                    .iter()
                    .zip(&col)
                    .filter(|(_, &c)| c == 2)
                    .map(|(v, _)| *v)
                    .collect();
                (a, b)
            };
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let ss = |v: &[f64]| v.iter().map(|x| (x - mean(v)).powi(2)).sum::<f64>();
            let df = (a.len() + b.len() - 2) as f64;
            let pooled = (ss(&a) + ss(&b)) / df;
            let t = (mean(&a) - mean(&b))
                / (pooled * (1.0 / a.len() as f64 + 1.0 / b.len() as f64)).sqrt();
            let oracle = 2.0 * (1.0 - StudentsT::new(0.0, 1.0, df).unwrap().cdf(t.abs()));
            assert!((p - oracle).abs() < 1e-9, "{p} vs {oracle}");
        }
    }

    #[test]
    fn null_pvalues_look_uniform() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mafs: Vec<f64> = (0..1000).map(|_| rng.random_range(0.1..0.5)).collect();
        let g = simulate_genotypes(200, &mafs, &mut rng).unwrap();
        let y: Vec<f64> = (0..200)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let mut p = anova_pvalues(&g, &y).unwrap();
        p.sort_by(f64::total_cmp);
        let n = p.len() as f64;
        let d = p
            .iter()
            .enumerate()
            .map(|(i, &v)| ((i + 1) as f64 / n - v).max(v - i as f64 / n))
            .fold(0.0, f64::max);
        // 1% critical value of the one-sample KS statistic
        assert!(d < 1.63 / n.sqrt(), "KS statistic {d}");
    }

    #[test]
    fn clumping_examples() {
        let p = [0.01, 0.001, 0.2, 0.03, 0.001];
        let none = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let c = clump(&p, &none, 0.05, 0.5).unwrap();
        // tie between 1 and 4 goes to the lower index
        assert_eq!(c.representatives, vec![1, 4, 0, 3]);
        assert!(c
            .clusters
            .iter()
            .all(|k| k.members == vec![k.representative]));

        // SNPs 0 and 3 are twins; 4 is anticorrelated with 1
        let corr = |i: usize, j: usize| match (i.min(j), i.max(j)) {
            (a, b) if a == b => 1.0,
            (0, 3) => 1.0,
            (1, 4) => -0.9,
            _ => 0.1,
        };
        let c = clump(&p, &corr, 0.05, 0.5).unwrap();
        assert_eq!(c.representatives, vec![1, 0]);
        assert_eq!(c.clusters[0].members, vec![1, 4]);
        assert_eq!(c.clusters[1].members, vec![0, 3]);
        assert!(clump(&p, &none, 0.0, 0.5).is_err());
        assert!(clump(&p, &none, 0.05, 1.0).is_err());
    }

    #[test]
    fn clusters_partition_the_screened_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let base = simulate_genotypes(150, &[0.3; 20], &mut rng).unwrap();
        // copies with a few flipped genotypes create correlated blocks
        let mut cols: Vec<Vec<u8>> = Vec::new();
        for j in 0..20 {
            let src = base.snp(j).to_vec();
            for _ in 0..3 {
                cols.push(
                    src.iter()
                        .map(|&v| {
                            if rng.random_bool(0.1) {
                                rng.random_range(0..3u8)
                            } else {
                                v
                            }
                        })
                        .collect(),
                );
            }
        }
        let g = GenotypeMatrix::from_columns(cols, ids(60)).unwrap();
        let enc = dummy_encode(&g);
        let y: Vec<f64> = (0..150)
            .map(|i| base.snp(2)[i] as f64 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let p = anova_pvalues(&g, &y).unwrap();
        let c = clump(&p, &AdditiveCorrelation(&enc), 0.5, 0.3).unwrap();
        let mut all: Vec<usize> = c.clusters.iter().flat_map(|k| k.members.clone()).collect();
        all.sort_unstable();
        let screened: Vec<usize> = (0..60).filter(|&j| p[j] < 0.5).collect();
        assert_eq!(all, screened);
        assert!(c.representatives.windows(2).all(|w| p[w[0]] <= p[w[1]]));
        for k in &c.clusters {
            assert!(k.members.iter().all(|&j| p[j] >= p[k.representative]));
        }
    }

    #[test]
    fn pipeline_finds_a_strong_causal_snp() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mafs: Vec<f64> = (0..120).map(|_| rng.random_range(0.1..0.5)).collect();
        let g = simulate_genotypes(400, &mafs, &mut rng).unwrap();
        let y: Vec<f64> = g
            .snp(7)
            .iter()
            .map(|&v| 0.8 * v as f64 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let params = PipelineParams {
            pi: 0.05,
            r: 0.3,
            q: 0.1,
        };
        let rep = gene_gslope(&g, &y, params, &SolveOptions::default()).unwrap();
        assert!(rep.selected_snps.contains(&7), "{rep:?}");
        assert_eq!(rep.lambda_full.len(), 120);
        assert_eq!(
            rep.lambda_used[..],
            rep.lambda_full[..rep.representatives.len()]
        );
        assert!(rep.sigma_hat.unwrap() > 0.5 && rep.sigma_hat.unwrap() < 1.5);
        assert!(rep.ranks.iter().all(|&l| l == 1 || l == 2));
    }

    #[test]
    fn empty_screen_gives_an_empty_report() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = simulate_genotypes(50, &[0.3; 10], &mut rng).unwrap();
        let y: Vec<f64> = (0..50)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let params = PipelineParams {
            pi: 1e-12,
            r: 0.3,
            q: 0.1,
        };
        let rep = gene_gslope(&g, &y, params, &SolveOptions::default()).unwrap();
        assert!(rep.representatives.is_empty() && rep.selected_snps.is_empty());
        assert_eq!(rep.sigma_hat, None);
    }

    #[test]
    fn rank_follows_observed_classes() {
        // only homozygotes: the two dummies collapse to one direction
        let g = GenotypeMatrix::from_columns(
            vec![vec![0, 2, 0, 2, 2, 0], vec![0, 1, 2, 1, 0, 2]],
            ids(2),
        )
        .unwrap();
        assert_eq!(g.classes(0), 2);
        let enc = dummy_encode(&g);
        assert_eq!(enc.group_columns(0).len(), 1);
        let cols = enc.group_columns(1);
        let x = DMatrix::from_columns(&cols);
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[2]).unwrap()).unwrap();
        assert_eq!(d.ranks(), &[2]);
        // heterozygotes and one homozygote class: both dummies nonconstant but collinear
        let g = GenotypeMatrix::from_columns(vec![vec![0, 1, 0, 1, 1, 0]], ids(1)).unwrap();
        let enc = dummy_encode(&g);
        let x = DMatrix::from_columns(&enc.group_columns(0));
        let d = GroupedDesign::new(x, GroupPartition::contiguous(&[2]).unwrap()).unwrap();
        assert_eq!(d.ranks(), &[g.classes(0) - 1]);
    }
}
