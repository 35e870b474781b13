mod io;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use gslope::group_structure::{GroupPartition, GroupedDesign, WeightRule};
use gslope::lambda_gen::lambda_sequence;
use gslope::screen_clump::{gene_gslope, GenotypeMatrix, PipelineParams};
use gslope::sigma_est::solve_with_sigma_estimation;
use gslope::simulate::{run_experiment_threaded, SimConfig};
use gslope::solver::{solve_auto, SolveOptions, SolveResult};
use gslope::sorted_l1::{LambdaKind, LambdaSequence};
use serde::Serialize;

const USAGE: u8 = 1;
const NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "gslope", version = version(), about = "Group SLOPE regression with group FDR control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn version() -> String {
    format!(
        "{} (library {})",
        env!("CARGO_PKG_VERSION"),
        gslope::VERSION
    )
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Max,
    Mean,
    Corrected,
}

impl From<Kind> for LambdaKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Max => LambdaKind::Max,
            Kind::Mean => LambdaKind::Mean,
            Kind::Corrected => LambdaKind::Corrected,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print a regularization sequence as CSV.
    Lambda {
        #[arg(long, value_enum)]
        kind: Kind,
        #[arg(long)]
        q: f64,
        /// Sequence length.
        #[arg(long)]
        m: usize,
        /// Group ranks: one value for m equal groups, or a comma-separated list.
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        /// one, size, sqrt_size or sqrt_rank, applied to the ranks.
        #[arg(long, default_value = "sqrt_size")]
        weights: WeightRule,
        /// Sample size, required by the corrected sequence.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit group SLOPE to a design and response.
    Solve {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        /// CSV with header variable_index,group_index (0-based variable indices).
        #[arg(long)]
        groups: PathBuf,
        /// A weight rule, or a CSV file with header group_index,weight.
        #[arg(long, default_value = "sqrt_size")]
        weights: String,
        /// max, mean, corrected, or a CSV file with header index,value.
        #[arg(long, default_value = "corrected")]
        lambda: String,
        #[arg(long, default_value_t = 0.1)]
        q: f64,
        /// A positive noise level, or "estimate".
        #[arg(long, default_value = "1")]
        sigma: String,
        #[arg(long, default_value_t = 1e-6)]
        gap_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        infeas_tol: f64,
        #[arg(long, default_value_t = 20_000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate group FDR and power by simulation.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Overrides the seed in the configuration.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Screen, clump and select SNPs.
    Gwas {
        #[arg(long)]
        geno: PathBuf,
        #[arg(long)]
        pheno: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        pi: f64,
        #[arg(long, default_value_t = 0.3)]
        r: f64,
        #[arg(long, default_value_t = 0.1)]
        q: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure carrying the process exit code.
#[derive(Debug)]
struct Exit {
    code: u8,
    error: anyhow::Error,
}

fn usage(error: anyhow::Error) -> Exit {
    Exit { code: USAGE, error }
}

fn classify(error: anyhow::Error) -> Exit {
    let code = match error.downcast_ref::<gslope::Error>() {
        Some(gslope::Error::NonConvergence { .. } | gslope::Error::SupportTooLarge { .. }) => {
            NUMERICAL
        }
        _ => USAGE,
    };
    Exit { code, error }
}

#[derive(Serialize)]
struct LambdaRow {
    index: usize,
    value: f64,
}

fn cmd_lambda(
    kind: Kind,
    q: f64,
    m: usize,
    ranks: Vec<usize>,
    weights: WeightRule,
    n: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let ranks = if ranks.len() == 1 {
        vec![ranks[0]; m]
    } else {
        ranks
    };
    let w = weights.weights(&ranks, &ranks);
    let seq = lambda_sequence(kind.into(), q, &w, &ranks, m, n)?;
    let rows: Vec<LambdaRow> = seq
        .iter()
        .enumerate()
        .map(|(i, &value)| LambdaRow {
            index: i + 1,
            value,
        })
        .collect();
    io::write_csv(&rows, out)
}

#[derive(Serialize)]
struct Diagnostics {
    converged: bool,
    final_gap: f64,
    final_infeas: f64,
    iterations: usize,
    objective: f64,
    sigma: f64,
    sigma_estimated: bool,
    sigma_iterations: Option<usize>,
    lambda_kind: LambdaKind,
    lambda: Vec<f64>,
    weights: Vec<f64>,
    ranks: Vec<usize>,
}

#[derive(Serialize)]
struct SolveOutput {
    beta: Vec<f64>,
    /// Group labels in the order of `effects`.
    groups: Vec<usize>,
    effects: Vec<f64>,
    /// Labels of the selected groups.
    selected: Vec<usize>,
    diagnostics: Diagnostics,
}

fn parse_weights(spec: &str, labels: &[usize]) -> Result<Option<Vec<f64>>> {
    if spec.parse::<WeightRule>().is_ok() {
        return Ok(None);
    }
    let path = Path::new(spec);
    if !path.exists() {
        bail!(
            "--weights must be one, size, sqrt_size, sqrt_rank or an existing file, got {spec:?}"
        );
    }
    let table: BTreeMap<usize, f64> = io::read_pairs(path)?.into_iter().collect();
    labels
        .iter()
        .map(|l| {
            table
                .get(l)
                .copied()
                .with_context(|| format!("no weight for group {l} in {spec}"))
        })
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

fn parse_lambda(spec: &str, q: f64, design: &GroupedDesign) -> Result<LambdaSequence> {
    let m = design.num_groups();
    let kind = match spec {
        "max" => LambdaKind::Max,
        "mean" => LambdaKind::Mean,
        "corrected" => LambdaKind::Corrected,
        file => {
            let mut rows: Vec<(usize, f64)> = io::read_pairs(Path::new(file))?;
            rows.sort_by_key(|r| r.0);
            if rows.len() != m {
                bail!("{file}: {} lambda values for {m} groups", rows.len());
            }
            return Ok(LambdaSequence::custom(
                rows.into_iter().map(|r| r.1).collect(),
            )?);
        }
    };
    Ok(lambda_sequence(
        kind,
        q,
        design.weights(),
        design.ranks(),
        m,
        Some(design.n()),
    )?)
}

#[allow(clippy::too_many_arguments)]
fn cmd_solve(
    x: &Path,
    y: &Path,
    groups: &Path,
    weights: &str,
    lambda: &str,
    q: f64,
    sigma: &str,
    opts: SolveOptions,
    out: Option<&Path>,
) -> std::result::Result<(), Exit> {
    let (_, xm) = io::read_matrix(x).map_err(usage)?;
    let yv = io::read_vector(y).map_err(usage)?;
    let pairs: Vec<(usize, usize)> = io::read_pairs(groups).map_err(usage)?;
    let p = xm.ncols();
    let mut label_of = vec![None; p];
    for &(var, label) in &pairs {
        if var >= p {
            return Err(usage(anyhow::anyhow!(
                "variable index {var} out of range for {p} columns"
            )));
        }
        if label_of[var].replace(label).is_some() {
            return Err(usage(anyhow::anyhow!("variable {var} is assigned twice")));
        }
    }
    let labels: Vec<usize> = label_of
        .into_iter()
        .enumerate()
        .map(|(j, l)| l.with_context(|| format!("variable {j} has no group")))
        .collect::<Result<_>>()
        .map_err(usage)?;
    let partition = GroupPartition::from_labels(&labels).map_err(|e| usage(e.into()))?;
    let group_labels: Vec<usize> = {
        let mut v = labels.clone();
        v.sort_unstable();
        v.dedup();
        v
    };

    let design = GroupedDesign::new(xm, partition).map_err(|e| classify(e.into()))?;
    let design = match parse_weights(weights, &group_labels).map_err(usage)? {
        Some(w) => design.with_weights(w),
        None => design.with_weight_rule(weights.parse().expect("checked above")),
    }
    .map_err(|e| usage(e.into()))?;
    let seq = parse_lambda(lambda, q, &design).map_err(classify)?;

    let (result, sigma_estimated, sigma_iterations): (SolveResult, bool, Option<usize>) =
        if sigma == "estimate" {
            let est = solve_with_sigma_estimation(&design, seq.values(), &yv, &opts)
                .map_err(|e| classify(e.into()))?;
            let iters = est.trace.len();
            (est.result, true, Some(iters))
        } else {
            let s: f64 = sigma
                .parse()
                .ok()
                .filter(|s: &f64| *s > 0.0 && s.is_finite())
                .ok_or_else(|| {
                    usage(anyhow::anyhow!(
                        "--sigma must be a positive number or \"estimate\""
                    ))
                })?;
            let r = solve_auto(&design, seq.values(), &yv, &opts.with_sigma(s))
                .map_err(|e| classify(e.into()))?;
            (r, false, None)
        };

    let converged = result.converged;
    let output = SolveOutput {
        beta: result.beta,
        selected: result.selected.iter().map(|&i| group_labels[i]).collect(),
        groups: group_labels,
        effects: result.effects.values().to_vec(),
        diagnostics: Diagnostics {
            converged,
            final_gap: result.final_gap,
            final_infeas: result.final_infeas,
            iterations: result.iterations,
            objective: result.objective,
            sigma: result.sigma,
            sigma_estimated,
            sigma_iterations,
            lambda_kind: seq.kind(),
            lambda: seq.values().to_vec(),
            weights: design.weights().to_vec(),
            ranks: design.ranks().to_vec(),
        },
    };
    io::write_json(&output, out).map_err(usage)?;
    if !converged {
        return Err(Exit {
            code: NUMERICAL,
            error: anyhow::anyhow!("solver did not converge"),
        });
    }
    Ok(())
}

fn cmd_simulate(
    config: &Path,
    out: Option<&Path>,
    threads: usize,
    seed: Option<u64>,
) -> std::result::Result<(), Exit> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("cannot read {}", config.display()))
        .map_err(usage)?;
    let mut cfg: SimConfig = serde_json::from_str(&text)
        .with_context(|| format!("invalid configuration {}", config.display()))
        .map_err(usage)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate().map_err(|e| usage(e.into()))?;
    let reports = run_experiment_threaded(&cfg, threads).map_err(|e| classify(e.into()))?;
    io::write_csv(&reports, out).map_err(usage)?;
    if reports.iter().any(|r| r.failures > 0) {
        return Err(Exit {
            code: NUMERICAL,
            error: anyhow::anyhow!("some replications failed"),
        });
    }
    Ok(())
}

#[derive(Serialize)]
struct ClusterOut {
    representative: String,
    members: Vec<String>,
}

#[derive(Serialize)]
struct LambdaOut {
    kind: LambdaKind,
    /// Length of the full sequence: the number of SNPs in the input.
    m: usize,
    n: usize,
    q: f64,
    full: Vec<f64>,
    used: Vec<f64>,
}

#[derive(Serialize)]
struct GwasOutput {
    num_snps: usize,
    screened: Vec<String>,
    clusters: Vec<ClusterOut>,
    representatives: Vec<String>,
    effects: Vec<f64>,
    ranks: Vec<usize>,
    selected_representatives: Vec<String>,
    selected_snps: Vec<String>,
    sigma_hat: Option<f64>,
    converged: bool,
    lambda: LambdaOut,
}

fn cmd_gwas(
    geno: &Path,
    pheno: &Path,
    params: PipelineParams,
    out: Option<&Path>,
) -> std::result::Result<(), Exit> {
    let (ids, rows) = io::read_genotypes(geno).map_err(usage)?;
    let y = io::read_vector(pheno).map_err(usage)?;
    let g = GenotypeMatrix::from_rows(&rows, ids.clone()).map_err(|e| usage(e.into()))?;
    let rep =
        gene_gslope(&g, &y, params, &SolveOptions::default()).map_err(|e| classify(e.into()))?;
    let name = |v: &[usize]| v.iter().map(|&j| ids[j].clone()).collect::<Vec<_>>();
    let output = GwasOutput {
        num_snps: rep.num_snps,
        screened: name(&rep.screened),
        clusters: rep
            .clusters
            .iter()
            .map(|c| ClusterOut {
                representative: ids[c.representative].clone(),
                members: name(&c.members),
            })
            .collect(),
        representatives: name(&rep.representatives),
        effects: rep.effects.clone(),
        ranks: rep.ranks.clone(),
        selected_representatives: name(&rep.selected_representatives),
        selected_snps: name(&rep.selected_snps),
        sigma_hat: rep.sigma_hat,
        converged: rep.converged,
        lambda: LambdaOut {
            kind: LambdaKind::Corrected,
            m: rep.num_snps,
            n: g.n(),
            q: params.q,
            full: rep.lambda_full.clone(),
            used: rep.lambda_used.clone(),
        },
    };
    io::write_json(&output, out).map_err(usage)?;
    if !rep.converged {
        return Err(Exit {
            code: NUMERICAL,
            error: anyhow::anyhow!("noise estimation or solver did not converge"),
        });
    }
    Ok(())
}

fn run(cli: Cli) -> std::result::Result<(), Exit> {
    match cli.command {
        Command::Lambda {
            kind,
            q,
            m,
            ranks,
            weights,
            n,
            out,
        } => cmd_lambda(kind, q, m, ranks, weights, n, out.as_deref()).map_err(classify),
        Command::Solve {
            x,
            y,
            groups,
            weights,
            lambda,
            q,
            sigma,
            gap_tol,
            infeas_tol,
            max_iter,
            out,
        } => {
            let opts = SolveOptions {
                dual_gap_tol: gap_tol,
                infeas_tol,
                max_iter,
                sigma: 1.0,
            };
            cmd_solve(
                &x,
                &y,
                &groups,
                &weights,
                &lambda,
                q,
                &sigma,
                opts,
                out.as_deref(),
            )
        }
        Command::Simulate {
            config,
            out,
            threads,
            seed,
        } => cmd_simulate(&config, out.as_deref(), threads, seed),
        Command::Gwas {
            geno,
            pheno,
            pi,
            r,
            q,
            out,
        } => cmd_gwas(&geno, &pheno, PipelineParams { pi, r, q }, out.as_deref()),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Exit { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}
