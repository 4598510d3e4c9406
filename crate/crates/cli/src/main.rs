//! `hilbert-ot`: runs transport, rank and Monte-Carlo experiments from a config
//! file and writes CSV tables, JSON metadata and a run manifest.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use config::{LoadedConfig, TargetSource};
use hilbert_ot::experiments::{
    run_clt, run_counterexample_a, run_counterexample_b, run_stability, CltConfig,
};
use hilbert_ot::measures::discretize_reference;
use hilbert_ot::maps::{null_domain_diagnostic, null_domain_expectation, pathological_push};
use hilbert_ot::ot::{
    certify_cyclic_monotonicity, coupling_to_csv, dual_to_csv, solve_transport,
};
use hilbert_ot::ranks::{fit_rank, fit_rank_to_spec, local_gc_experiment};
use output::{Outputs, RunManifest};

#[derive(Parser)]
#[command(name = "hilbert-ot", version, about = "Monotone transport maps and stability experiments")]
struct Cli {
    /// Config file (TOML, or JSON when the extension is .json).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Optimal coupling between two discrete measures, with its dual and a
    /// cyclic-monotonicity certificate.
    Transport,
    /// Empirical rank map of (functional) data against a discretised reference.
    Rank,
    /// Convergence of empirical rank maps to the population map on a compact set.
    LocalGc,
    /// Stability of optimal couplings as the marginals converge.
    Stability,
    /// Divergence when the target supports are unbounded.
    CounterexampleA,
    /// Non-convergence at a boundary point of the source support.
    CounterexampleB,
    /// Fluctuations of the empirical transport cost.
    Clt,
    /// Diagnostics for the operator `A eᵢ = 4ⁱ eᵢ` and its null domain.
    NullDomain,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Transport => "transport",
            Command::Rank => "rank",
            Command::LocalGc => "local-gc",
            Command::Stability => "stability",
            Command::CounterexampleA => "counterexample-a",
            Command::CounterexampleB => "counterexample-b",
            Command::Clt => "clt",
            Command::NullDomain => "null-domain",
        }
    }

    /// Subcommands that run without a config file, using defaults.
    fn config_optional(self) -> bool {
        matches!(self, Command::CounterexampleA | Command::CounterexampleB | Command::NullDomain)
    }
}

/// Failure classes, each with its own exit code.
#[derive(Debug)]
enum CliError {
    Config(String),
    Solver(String, Option<String>),
    Output(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(..) => 3,
            CliError::Output(_) => 1,
        }
    }

    fn to_json(&self) -> Value {
        match self {
            CliError::Config(m) => json!({"error": "config", "message": m}),
            CliError::Solver(m, dump) => json!({"error": "solver", "message": m, "instance": dump}),
            CliError::Output(m) => json!({"error": "output", "message": m}),
        }
    }
}

impl From<hilbert_ot::Error> for CliError {
    fn from(e: hilbert_ot::Error) -> Self {
        use hilbert_ot::Error as E;
        match e {
            E::InvalidInput(_) | E::DimensionMismatch { .. } | E::Csv(_) | E::Io(_) => {
                CliError::Config(e.to_string())
            }
            E::Convergence { .. } => CliError::Solver(e.to_string(), None),
            E::Solver { message, dump } => CliError::Solver(message, Some(dump)),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let loaded = match &cli.config {
        Some(path) => config::load(path, cli.seed)?,
        None if cli.command.config_optional() => config::empty(cli.seed),
        None => return Err(CliError::Config("--config is required for this command".into())),
    };
    let start = Instant::now();
    let mut outputs = Outputs::default();
    let seed = dispatch(cli.command, &loaded, &mut outputs)?;
    let manifest = RunManifest::new(cli.command.name(), &loaded, seed, &outputs, start.elapsed());
    outputs.json("manifest.json", &manifest)?;
    outputs.commit(&cli.out)
}

/// Runs `command` and stages its outputs; returns the effective seed.
fn dispatch(command: Command, cfg: &LoadedConfig, out: &mut Outputs) -> CliResult<Option<u64>> {
    match command {
        Command::Transport => {
            let c: config::TransportConfig = cfg.parse()?;
            let src = c.source.load(&cfg.base_dir)?;
            let tgt = c.target.load(&cfg.base_dir)?;
            let plan = solve_transport(&src, &tgt)?;
            let cert = certify_cyclic_monotonicity(&plan.coupling, &c.certify())?;
            let mut buf = Vec::new();
            coupling_to_csv(&plan.coupling, &mut buf)?;
            out.bytes("coupling.csv", buf);
            let mut buf = Vec::new();
            dual_to_csv(&plan.dual, &mut buf)?;
            out.bytes("dual.csv", buf);
            out.json("certificate.json", &cert)?;
            out.json(
                "summary.json",
                &json!({
                    "cost": plan.coupling.cost(),
                    "support_size": plan.coupling.entries().len(),
                    "dual_objective": plan.dual.objective(&src, &tgt),
                    "dual_max_violation": plan.dual.max_violation(&src, &tgt)?,
                    "certificate_passed": cert.passed(),
                }),
            )?;
            Ok(Some(c.seed))
        }
        Command::Rank => {
            let c: config::RankConfig = cfg.parse()?;
            let (data, weights) = c.data.load_points(&cfg.base_dir)?;
            if weights.is_some() {
                return Err(CliError::Config("rank data cannot carry weights".into()));
            }
            let (rank, reference) = match &c.reference {
                TargetSource::Atoms(points) => {
                    let reference = points.load(&cfg.base_dir)?;
                    (fit_rank(&data, &reference)?, reference)
                }
                TargetSource::Spec { spec, strategy, seed, .. } => {
                    let seed = seed.unwrap_or(c.seed);
                    let reference = discretize_reference(spec, data.len(), *strategy, seed)?.measure;
                    (fit_rank_to_spec(&data, spec, *strategy, seed)?, reference)
                }
            };
            let mut buf = Vec::new();
            rank.to_csv(&mut buf)?;
            out.bytes("ranks.csv", buf);
            out.json(
                "metadata.json",
                &json!({
                    "n": rank.len(),
                    "reference": rank.reference_meta(),
                    "reproduces_reference": rank.reproduces(&reference),
                    "assignment": rank.assignment(),
                }),
            )?;
            Ok(Some(c.reference.seed().unwrap_or(c.seed)))
        }
        Command::LocalGc => {
            let c: config::LocalGcFile = cfg.parse()?;
            let gc = c.build()?;
            let rows = local_gc_experiment(&gc)?;
            let mut csv = String::from("experiment,n,rep,direction_index,gap,points_in_k\n");
            for r in &rows {
                csv += &format!(
                    "local-gc,{},{},{},{},{}\n",
                    r.n,
                    r.rep,
                    r.direction,
                    output::opt(r.gap),
                    r.in_k
                );
            }
            out.bytes("local_gc.csv", csv.into_bytes());
            out.json("metadata.json", &json!({"config": gc}))?;
            Ok(Some(gc.seed))
        }
        Command::Stability => {
            let c: config::StabilityFile = cfg.parse()?;
            let (sc, population_meta) = c.build()?;
            let report = run_stability(&sc)?;
            let mut csv = String::from(
                "experiment,n,seed,rep,direction_index,gap,norm_gap,potential_gap,pairs_in_k,bound_violation\n",
            );
            for r in &report.rows {
                csv += &format!(
                    "stability,{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.seed,
                    r.rep,
                    r.direction,
                    output::opt(r.gap),
                    output::opt(r.norm_gap),
                    output::opt(r.potential_gap),
                    r.pairs_in_k,
                    r.bound_violation
                );
            }
            out.bytes("stability.csv", csv.into_bytes());
            out.json(
                "metadata.json",
                &json!({
                    "config": sc,
                    "population_source": population_meta,
                    "truncation_d": sc.p.dim(),
                    "verdicts": report.verdicts,
                }),
            )?;
            Ok(Some(sc.seed))
        }
        Command::CounterexampleA => {
            let c: config::CounterexampleAConfig = cfg.parse()?;
            let rows = run_counterexample_a(c.d, &c.n_grid)?;
            let mut csv = String::from(
                "experiment,n,m,norm,threshold_met,direction_index,gap,full_gap,full_norm\n",
            );
            for r in &rows {
                csv += &format!(
                    "counterexample-a,{},{},{},{},{},{},{},{}\n",
                    r.n, r.m, r.norm, r.threshold_met, r.direction, r.gap, r.full_gap, r.full_norm
                );
            }
            out.bytes("counterexample_a.csv", csv.into_bytes());
            out.json("metadata.json", &json!({"config": c, "truncation_d": c.d}))?;
            Ok(None)
        }
        Command::CounterexampleB => {
            let c: config::CounterexampleBConfig = cfg.parse()?;
            let rows = run_counterexample_b(&c.n_grid, &c.probes)?;
            let mut csv = String::from(
                "experiment,n,probe,sub_lo,sub_hi,gap,limit_value,printed_lo,printed_hi,matches_printed\n",
            );
            for r in &rows {
                csv += &format!(
                    "counterexample-b,{},{},{},{},{},{},{},{},{}\n",
                    r.n,
                    r.probe,
                    r.sub_lo,
                    r.sub_hi,
                    r.gap,
                    r.limit_value,
                    output::opt(r.printed_lo),
                    output::opt(r.printed_hi),
                    r.matches_printed.map_or(String::new(), |b| b.to_string())
                );
            }
            out.bytes("counterexample_b.csv", csv.into_bytes());
            out.json("metadata.json", &json!({"config": c}))?;
            Ok(None)
        }
        Command::Clt => {
            let c: config::CltFile = cfg.parse()?;
            let q = c.q.load(&cfg.base_dir, c.seed)?;
            let clt = CltConfig {
                p: c.p.clone(),
                q,
                n: c.n,
                reps: c.reps,
                seed: c.seed,
                semidiscrete: c.semidiscrete.clone(),
                mc_n: c.mc_n,
            };
            let report = run_clt(&clt)?;
            let mut csv = String::from("experiment,rep,seed,statistic,cost\n");
            for (rep, (s, cost)) in report.statistics.iter().zip(&report.costs).enumerate() {
                csv += &format!("clt,{rep},{},{s},{cost}\n", c.seed.wrapping_add(rep as u64));
            }
            out.bytes("clt.csv", csv.into_bytes());
            out.json(
                "metadata.json",
                &json!({
                    "config": c,
                    "truncation_d": clt.p.dim(),
                    "sigma2_formula": report.sigma2_formula,
                    "sigma2_empirical": report.sigma2_empirical,
                    "ks_to_normal": report.ks_to_normal,
                    "variance_ratio": report.variance_ratio,
                    "degenerate": report.degenerate,
                    "semidiscrete_mismatch": report.semidiscrete_mismatch,
                }),
            )?;
            Ok(Some(c.seed))
        }
        Command::NullDomain => {
            let c: config::NullDomainConfig = cfg.parse()?;
            let rows = null_domain_diagnostic(c.d_max, c.seeds, c.seed)?;
            let mut csv = String::from("experiment,seed,d,s_d\n");
            for r in &rows {
                csv += &format!("null-domain,{},{},{}\n", r.seed, r.d, r.s_d);
            }
            out.bytes("null_domain.csv", csv.into_bytes());
            let means: Vec<Value> = (1..=c.d_max)
                .map(|d| {
                    let v: Vec<f64> = rows.iter().filter(|r| r.d == d).map(|r| r.s_d).collect();
                    json!({
                        "d": d,
                        "mean": v.iter().sum::<f64>() / v.len() as f64,
                        "expected": null_domain_expectation(d),
                    })
                })
                .collect();
            let push = pathological_push(c.pathological_d, c.pathological_n, c.seed)?;
            out.json(
                "metadata.json",
                &json!({
                    "config": c,
                    "means": means,
                    "pathological_exact": push.exact,
                }),
            )?;
            Ok(Some(c.seed))
        }
    }
}
