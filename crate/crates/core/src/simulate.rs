//! Monte-Carlo estimation of group FDR and power.
//!
//! Randomness comes from a ChaCha8 generator seeded with the configured seed.
//! Stream 0 draws the group sizes and any design shared by all replications;
//! replication `r` uses stream `r + 1`, so results do not depend on how
//! replications are scheduled across threads.

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::group_structure::{GroupPartition, GroupedDesign, WeightRule};
use crate::lambda_gen::lambda_sequence;
use crate::sigma_est::solve_with_sigma_estimation;
use crate::solver::{solve_orthogonal, SolveOptions};
use crate::sorted_l1::LambdaKind;

/// `B(m, l) = sqrt(4 ln m / (1 - m^{-2/l}) - l)`.
pub fn signal_strength(m: usize, l: usize) -> Result<f64> {
    let bound = max_chi_sq_bound(m, l)?;
    let inner = bound - l as f64;
    if !(inner > 0.0) || !inner.is_finite() {
        return Err(Error::domain(format!(
            "signal strength undefined for m = {m}, l = {l}"
        )));
    }
    Ok(inner.sqrt())
}

/// Upper bound `4 ln m / (1 - m^{-2/l})` on the expected maximum of `m` iid
/// chi-square variables with `l` degrees of freedom. Infinite once the
/// denominator underflows.
pub fn max_chi_sq_bound(m: usize, l: usize) -> Result<f64> {
    if m < 2 || l == 0 {
        return Err(Error::domain("the bound needs m >= 2 and l >= 1"));
    }
    let ln_m = (m as f64).ln();
    // 1 - m^{-2/l} without cancellation
    let denom = -(-2.0 * ln_m / l as f64).exp_m1();
    if denom <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(4.0 * ln_m / denom)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupSizeSpec {
    Fixed(usize),
    List(Vec<usize>),
    /// `offset + Binomial(trials, prob)`, drawn once per configuration.
    Binomial {
        trials: u64,
        prob: f64,
        #[serde(default = "one")]
        offset: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignKind {
    Identity,
    Orthogonal,
    Gaussian,
}

impl DesignKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignKind::Identity => "identity",
            DesignKind::Orthogonal => "orthogonal",
            DesignKind::Gaussian => "gaussian",
        }
    }
}

fn one_or_many<'de, D, T>(de: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(de)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

fn default_sigma() -> f64 {
    1.0
}

fn default_weights() -> WeightRule {
    WeightRule::SqrtSize
}

fn default_lambda() -> LambdaKind {
    LambdaKind::Max
}

/// A simulation scenario. `q` and `k` may list several values; every
/// `(q, k)` pair is one cell of the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub m: usize,
    pub n: usize,
    pub group_sizes: GroupSizeSpec,
    pub design: DesignKind,
    #[serde(deserialize_with = "one_or_many")]
    pub q: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub k: Vec<usize>,
    #[serde(default = "default_weights")]
    pub weights_rule: WeightRule,
    #[serde(default = "default_lambda")]
    pub lambda_kind: LambdaKind,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    /// Noise level of the generated responses.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    /// Estimate the noise level instead of using the true one. Defaults to
    /// true for Gaussian designs only.
    #[serde(default)]
    pub estimate_sigma: Option<bool>,
    #[serde(default)]
    pub solver: SolveOptions,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if self.m == 0 || self.n == 0 {
            return bad("m and n must be positive".into());
        }
        if self.q.is_empty() || self.k.is_empty() {
            return bad("at least one q and one k are required".into());
        }
        if let Some(q) = self.q.iter().find(|&&q| !(q > 0.0 && q < 1.0)) {
            return bad(format!("q must lie in (0, 1), got {q}"));
        }
        if let Some(k) = self.k.iter().find(|&&k| k > self.m) {
            return bad(format!("k = {k} exceeds the number of groups {}", self.m));
        }
        if !(self.sigma > 0.0) {
            return bad("sigma must be positive".into());
        }
        match &self.group_sizes {
            GroupSizeSpec::Fixed(0) => return bad("group size must be positive".into()),
            GroupSizeSpec::List(v) if v.len() != self.m || v.contains(&0) => {
                return bad(format!("size list needs {} positive entries", self.m))
            }
            GroupSizeSpec::Binomial { prob, .. } if !(0.0..=1.0).contains(prob) => {
                return bad("binomial probability must lie in [0, 1]".into())
            }
            GroupSizeSpec::Binomial {
                trials: 0,
                offset: 0,
                ..
            } => return bad("groups would be empty".into()),
            _ => {}
        }
        if self.lambda_kind == LambdaKind::Custom {
            return bad("simulations need a generated lambda sequence".into());
        }
        Ok(())
    }

    fn estimates_sigma(&self) -> bool {
        self.estimate_sigma
            .unwrap_or(self.design == DesignKind::Gaussian)
    }
}

/// Estimates for one `(q, k)` cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub q: f64,
    pub k: usize,
    pub m: usize,
    pub n: usize,
    pub p: usize,
    pub design: DesignKind,
    pub lambda_kind: LambdaKind,
    pub replications: usize,
    pub gfdr_hat: f64,
    pub se_gfdr: f64,
    pub power_hat: f64,
    pub se_power: f64,
    /// `q (m - k) / m`.
    pub nominal_bound: f64,
    pub mean_discoveries: f64,
    /// Replications whose solve failed; they are left out of the estimates.
    pub failures: usize,
}

/// Outcome of one replication.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepOutcome {
    pub discoveries: usize,
    pub false_discoveries: usize,
    pub true_discoveries: usize,
    pub fdp: f64,
    pub power: f64,
}

impl RepOutcome {
    pub fn from_selection(selected: &[usize], relevant: &[bool]) -> Self {
        let k = relevant.iter().filter(|&&r| r).count();
        let true_discoveries = selected.iter().filter(|&&i| relevant[i]).count();
        let discoveries = selected.len();
        let false_discoveries = discoveries - true_discoveries;
        Self {
            discoveries,
            false_discoveries,
            true_discoveries,
            fdp: false_discoveries as f64 / discoveries.max(1) as f64,
            power: if k == 0 {
                0.0
            } else {
                true_discoveries as f64 / k as f64
            },
        }
    }
}

fn master(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Group sizes for the configuration, drawn from stream 0 when random.
pub fn group_sizes(config: &SimConfig) -> Result<Vec<usize>> {
    Ok(match &config.group_sizes {
        GroupSizeSpec::Fixed(l) => vec![*l; config.m],
        GroupSizeSpec::List(v) => v.clone(),
        GroupSizeSpec::Binomial {
            trials,
            prob,
            offset,
        } => {
            let dist = Binomial::new(*trials, *prob).map_err(|e| Error::Config(e.to_string()))?;
            let mut rng = master(config.seed, 0);
            (0..config.m)
                .map(|_| (dist.sample(&mut rng) as usize + offset).max(1))
                .collect()
        }
    })
}

/// Draws a design of the configured kind with the given group sizes.
pub fn gen_design<R: Rng + ?Sized>(
    config: &SimConfig,
    sizes: &[usize],
    rng: &mut R,
) -> Result<GroupedDesign> {
    let p: usize = sizes.iter().sum();
    let n = config.n;
    let x = match config.design {
        DesignKind::Identity => {
            if n != p {
                return Err(Error::Config(format!(
                    "identity design needs n = p, got n = {n}, p = {p}"
                )));
            }
            DMatrix::identity(n, p)
        }
        DesignKind::Orthogonal => {
            if n < p {
                return Err(Error::Config(format!(
                    "orthogonal design needs n >= p, got n = {n}, p = {p}"
                )));
            }
            let g = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
            g.qr().q()
        }
        DesignKind::Gaussian => {
            let scale = 1.0 / (n as f64).sqrt();
            let mut x = DMatrix::from_fn(n, p, |_, _| scale * rng.sample::<f64, _>(StandardNormal));
            for mut c in x.column_iter_mut() {
                let mean = c.mean();
                c.add_scalar_mut(-mean);
                let norm = c.norm();
                if norm > 0.0 {
                    c /= norm;
                }
            }
            x
        }
    };
    let partition = GroupPartition::contiguous(sizes)?;
    GroupedDesign::new(x, partition)?.with_weight_rule(config.weights_rule)
}

/// Plants `k` relevant groups chosen uniformly at random. Coefficients are
/// iid `U[0.1, 1.1]` and each relevant block is rescaled so its group effect
/// is `a sqrt(l_i)` with `a = sum_i B(m, l_i) / sum_i sqrt(l_i)` over all
/// groups. Returns the coefficients and the relevance indicator.
pub fn gen_signal<R: Rng + ?Sized>(
    design: &GroupedDesign,
    k: usize,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<bool>)> {
    let m = design.num_groups();
    if k > m {
        return Err(Error::domain(format!("k = {k} exceeds m = {m}")));
    }
    let mut beta = vec![0.0; design.p()];
    let mut relevant = vec![false; m];
    if k == 0 {
        return Ok((beta, relevant));
    }
    let ranks = design.ranks();
    let mut strength_sum = 0.0;
    for &l in ranks {
        strength_sum += signal_strength(m, l)?;
    }
    let a = strength_sum / ranks.iter().map(|&l| (l as f64).sqrt()).sum::<f64>();

    let mut chosen = index::sample(rng, m, k).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        relevant[i] = true;
        let group = &design.partition().groups()[i];
        let raw: Vec<f64> = group.iter().map(|_| rng.random_range(0.1..1.1)).collect();
        let mut fit = DVector::<f64>::zeros(design.n());
        for (&j, &b) in group.iter().zip(&raw) {
            fit.axpy(b, &design.x().column(j), 1.0);
        }
        let target = a * (ranks[i] as f64).sqrt();
        let scale = target / fit.norm();
        for (&j, &b) in group.iter().zip(&raw) {
            beta[j] = b * scale;
        }
    }
    Ok((beta, relevant))
}

struct Cell<'a> {
    config: &'a SimConfig,
    sizes: &'a [usize],
    shared: Option<&'a GroupedDesign>,
    lambda: Vec<f64>,
    q: f64,
    k: usize,
}

impl Cell<'_> {
    fn replicate(&self, rep: usize) -> Result<RepOutcome> {
        let mut rng = master(self.config.seed, rep as u64 + 1);
        let owned;
        let design = match self.shared {
            Some(d) => d,
            None => {
                owned = gen_design(self.config, self.sizes, &mut rng)?;
                &owned
            }
        };
        let (beta, relevant) = gen_signal(design, self.k, &mut rng)?;
        let mut y = design.x() * DVector::from_vec(beta);
        for v in y.iter_mut() {
            *v += self.config.sigma * rng.sample::<f64, _>(StandardNormal);
        }

        let lambda = if design.ranks() == self.sizes {
            self.lambda.clone()
        } else {
            let m = design.num_groups();
            lambda_sequence(
                self.config.lambda_kind,
                self.q,
                design.weights(),
                design.ranks(),
                m,
                Some(design.n()),
            )?
            .into_values()
        };
        let opts = self.config.solver;
        let selected = if self.config.estimates_sigma() {
            solve_with_sigma_estimation(design, &lambda, y.as_slice(), &opts)?
                .result
                .selected
        } else {
            let opts = opts.with_sigma(self.config.sigma);
            let res = match self.config.design {
                DesignKind::Gaussian => {
                    crate::solver::solve_gslope(design, &lambda, y.as_slice(), &opts)?
                }
                _ => solve_orthogonal(design, &lambda, y.as_slice(), &opts)?,
            };
            if !res.converged {
                log::warn!("replication {rep} did not converge");
            }
            res.selected
        };
        Ok(RepOutcome::from_selection(&selected, &relevant))
    }
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs every `(q, k)` cell single-threaded. Cells are ordered by `q`, then `k`.
pub fn run_experiment(config: &SimConfig) -> Result<Vec<SimulationReport>> {
    run_experiment_threaded(config, 1)
}

/// Runs every cell with replications spread over `threads` workers. Outcomes
/// are gathered in replication order, so the report does not depend on
/// `threads`.
pub fn run_experiment_threaded(
    config: &SimConfig,
    threads: usize,
) -> Result<Vec<SimulationReport>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;

    let sizes = group_sizes(config)?;
    let shared = match config.design {
        DesignKind::Gaussian => None,
        _ => Some(gen_design(config, &sizes, &mut master(config.seed, 0))?),
    };
    let weights = config.weights_rule.weights(&sizes, &sizes);

    let mut reports = Vec::with_capacity(config.q.len() * config.k.len());
    for &q in &config.q {
        let lambda = lambda_sequence(
            config.lambda_kind,
            q,
            &weights,
            &sizes,
            config.m,
            Some(config.n),
        )?
        .into_values();
        for &k in &config.k {
            let cell = Cell {
                config,
                sizes: &sizes,
                shared: shared.as_ref(),
                lambda: lambda.clone(),
                q,
                k,
            };
            let outcomes: Vec<Result<RepOutcome>> = pool.install(|| {
                (0..config.replications)
                    .into_par_iter()
                    .map(|r| cell.replicate(r))
                    .collect()
            });
            reports.push(summarize(config, &sizes, q, k, outcomes));
        }
    }
    Ok(reports)
}

fn summarize(
    config: &SimConfig,
    sizes: &[usize],
    q: f64,
    k: usize,
    outcomes: Vec<Result<RepOutcome>>,
) -> SimulationReport {
    let mut fdp = Vec::with_capacity(outcomes.len());
    let mut power = Vec::with_capacity(outcomes.len());
    let mut discoveries = 0.0;
    let mut failures = 0;
    for (rep, out) in outcomes.into_iter().enumerate() {
        match out {
            Ok(o) => {
                fdp.push(o.fdp);
                power.push(o.power);
                discoveries += o.discoveries as f64;
            }
            Err(e) => {
                log::warn!("replication {rep} failed: {e}");
                failures += 1;
            }
        }
    }
    let (gfdr_hat, se_gfdr) = mean_and_se(&fdp);
    let (power_hat, se_power) = mean_and_se(&power);
    SimulationReport {
        q,
        k,
        m: config.m,
        n: config.n,
        p: sizes.iter().sum(),
        design: config.design,
        lambda_kind: config.lambda_kind,
        replications: config.replications,
        gfdr_hat,
        se_gfdr,
        power_hat,
        se_power,
        nominal_bound: q * (config.m - k) as f64 / config.m as f64,
        mean_discoveries: discoveries / fdp.len().max(1) as f64,
        failures,
    }
}
