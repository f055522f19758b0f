//! Command-line front end. `main.rs` only forwards to [`run`].

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::adversary;
use crate::config::{read_json, write_csv, write_json, RunConfig};
use crate::domain::{load_domain, DatasetSource, Domain, DomainExport};
use crate::error::{Error, Result};
use crate::grid::{binary_partition, PartitionTree};
use crate::mechanism::{
    build_matrix, verify_all_cross_pls, verify_dp_within_pls, verify_geo_indistinguishability, verify_row_stochastic,
    DpReport, GeoIndReport, MatrixExport, ObfuscationMatrix, StochasticityReport,
};
use crate::moea::{dpive_baseline, evolve_with, pso_baseline, Evolution, Individual, PsoSolution};
use crate::pls::{ret_c, PartitionExport, PlsPartition};
use crate::rng;
use crate::sim::{run_simulation, scenario, WorkerMode};

#[derive(Debug, Parser)]
#[command(name = "geomoea", version, about = "Location obfuscation with protection location sets and multi-objective search")]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed (falls back to the config file, then GEOMOEA_SEED).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Suppress progress output on stderr.
    #[arg(long, short = 'q', global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct DatasetArgs {
    /// CSV of `id,x,y` (km) locations instead of the configured dataset.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Treat CSV columns as `id,lon,lat` degrees.
    #[arg(long, requires = "dataset")]
    pub geo: bool,
}

#[derive(Debug, Args, Default)]
pub struct PrivacyArgs {
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long)]
    pub em: Option<f64>,
    #[arg(long)]
    pub n0: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct SearchArgs {
    #[arg(long)]
    pub pop: Option<usize>,
    #[arg(long)]
    pub gens: Option<usize>,
    /// Baselines to run alongside the search (comma separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub baseline: Vec<Baseline>,
    /// Matrix file format.
    #[arg(long, value_enum, default_value_t = MatrixFormat::Json)]
    pub format: MatrixFormat,
}

#[derive(Debug, Args, Default)]
pub struct SimArgs {
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub tasks: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Dpive,
    Pso,
    None,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum MatrixFormat {
    #[default]
    Json,
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Uniform,
    #[value(name = "one_to_four", alias = "one-to-four")]
    OneToFour,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load, partition, optimize, run baselines and simulate; write every artifact.
    Pipeline {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        search: SearchArgs,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Build the cell partition and one randomized PLS partition.
    Partition {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[arg(long, value_enum, default_value_t = MatrixFormat::Json)]
        format: MatrixFormat,
    },
    /// Run the multi-objective search (and optional baselines).
    Optimize {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[command(flatten)]
        privacy: PrivacyArgs,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Score a matrix: quality loss, expected inference error and its floor.
    Evaluate {
        #[arg(long)]
        matrix: PathBuf,
        /// Defaults to `domain.json` next to the matrix.
        #[arg(long)]
        domain: Option<PathBuf>,
    },
    /// Geocast simulation over a matrix (or without obfuscation).
    Simulate {
        #[arg(long, required_unless_present = "non_privacy")]
        matrix: Option<PathBuf>,
        /// Defaults to `domain.json` next to the matrix, else the configured dataset.
        #[arg(long)]
        domain: Option<PathBuf>,
        #[arg(long)]
        non_privacy: bool,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Hypervolume and mean travel distance over a grid of privacy knobs.
    Sweep {
        #[command(flatten)]
        dataset: DatasetArgs,
        #[arg(long, value_delimiter = ',', default_values_t = default_eps0_grid())]
        eps0_list: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = default_em_grid())]
        em_list: Vec<f64>,
        #[arg(long)]
        n0: Option<usize>,
        #[arg(long)]
        pop: Option<usize>,
        #[arg(long)]
        gens: Option<usize>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// Check a matrix against its partition: DP ratios, range bound,
    /// stochasticity and the inference-error floor.
    Verify {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        partition: PathBuf,
        /// Defaults to `domain.json` next to the matrix.
        #[arg(long)]
        domain: Option<PathBuf>,
        /// Emit the report as JSON.
        #[arg(long)]
        json: bool,
    },
}

fn default_eps0_grid() -> Vec<f64> {
    (1..=10).map(|i| i as f64 / 10.0).collect()
}

fn default_em_grid() -> Vec<f64> {
    (0..=10).map(|i| 0.05 + 0.025 * i as f64).map(|v| (v * 1000.0).round() / 1000.0).collect()
}

/// Parses `args`, runs the command, reports errors as JSON on stderr, and
/// returns the process exit code: 0 success, 1 failure (including a failed
/// verification), 2 bad input (missing file, schema, parse or config error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            let mut body = serde_json::json!({ "kind": e.kind(), "message": e.to_string() });
            if let Some(p) = error_path(&e) {
                body["path"] = serde_json::Value::String(p);
            }
            eprintln!("{}", serde_json::json!({ "error": body }));
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::MissingFile(_) | Error::Schema { .. } | Error::Parse { .. } | Error::InvalidConfig(_) => 2,
        _ => 1,
    }
}

fn error_path(e: &Error) -> Option<String> {
    match e {
        Error::MissingFile(p) | Error::Io { path: p, .. } => Some(p.display().to_string()),
        Error::Schema { path, .. } | Error::Parse { path, .. } => Some(path.clone()),
        _ => None,
    }
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    quiet: bool,
}

impl Ctx {
    fn log(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn ensure_out(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| Error::io(&self.out, e))
    }
}

fn execute(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidConfig("--threads must be >= 1".into()));
        }
        // A second call in the same process (tests) keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    cfg.resolve_seed(cli.seed)?;
    let out = cli.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let mut ctx = Ctx {
        cfg,
        out,
        quiet: cli.quiet,
    };

    match cli.command {
        Command::Pipeline {
            dataset,
            privacy,
            search,
            sim,
        } => {
            apply_dataset(&mut ctx.cfg, &dataset);
            apply_privacy(&mut ctx.cfg, &privacy);
            apply_search(&mut ctx.cfg, &search);
            apply_sim(&mut ctx.cfg, &sim);
            cmd_pipeline(&ctx, search.format)
        }
        Command::Partition {
            dataset,
            privacy,
            format,
        } => {
            apply_dataset(&mut ctx.cfg, &dataset);
            apply_privacy(&mut ctx.cfg, &privacy);
            cmd_partition(&ctx, format)
        }
        Command::Optimize {
            dataset,
            privacy,
            search,
        } => {
            apply_dataset(&mut ctx.cfg, &dataset);
            apply_privacy(&mut ctx.cfg, &privacy);
            apply_search(&mut ctx.cfg, &search);
            cmd_optimize(&ctx, search.format)
        }
        Command::Evaluate { matrix, domain } => cmd_evaluate(&matrix, domain.as_deref()),
        Command::Simulate {
            matrix,
            domain,
            non_privacy,
            sim,
        } => {
            apply_sim(&mut ctx.cfg, &sim);
            cmd_simulate(&ctx, matrix.as_deref(), domain.as_deref(), non_privacy)
        }
        Command::Sweep {
            dataset,
            eps0_list,
            em_list,
            n0,
            pop,
            gens,
            sim,
        } => {
            apply_dataset(&mut ctx.cfg, &dataset);
            apply_privacy(
                &mut ctx.cfg,
                &PrivacyArgs {
                    n0,
                    ..Default::default()
                },
            );
            apply_search(
                &mut ctx.cfg,
                &SearchArgs {
                    pop,
                    gens,
                    ..Default::default()
                },
            );
            apply_sim(&mut ctx.cfg, &sim);
            cmd_sweep(&ctx, &eps0_list, &em_list)
        }
        Command::Verify {
            matrix,
            partition,
            domain,
            json,
        } => cmd_verify(&matrix, &partition, domain.as_deref(), json),
    }
}

fn apply_dataset(cfg: &mut RunConfig, a: &DatasetArgs) {
    if let Some(p) = &a.dataset {
        cfg.dataset.source = DatasetSource::Csv {
            path: p.clone(),
            geo: a.geo,
        };
    }
}

fn apply_privacy(cfg: &mut RunConfig, a: &PrivacyArgs) {
    if let Some(v) = a.eps0 {
        cfg.privacy.epsilon0 = v;
    }
    if let Some(v) = a.em {
        cfg.privacy.e_m = v;
    }
    if let Some(v) = a.n0 {
        cfg.privacy.n0 = v;
    }
}

fn apply_search(cfg: &mut RunConfig, a: &SearchArgs) {
    if let Some(v) = a.pop {
        cfg.moea.population = v;
    }
    if let Some(v) = a.gens {
        cfg.moea.max_generations = v;
    }
    if !a.baseline.is_empty() {
        let has = |b| a.baseline.contains(&b) || a.baseline.contains(&Baseline::All);
        cfg.baselines.dpive = has(Baseline::Dpive);
        cfg.baselines.pso = has(Baseline::Pso);
    }
}

fn apply_sim(cfg: &mut RunConfig, a: &SimArgs) {
    if let Some(v) = a.workers {
        cfg.sim.workers = v;
    }
    if let Some(v) = a.tasks {
        cfg.sim.tasks = v;
    }
    if let Some(m) = a.mode {
        cfg.sim.mode = match m {
            ModeArg::Uniform => WorkerMode::Uniform,
            ModeArg::OneToFour => WorkerMode::OneToFour,
        };
    }
}

fn prepare(ctx: &Ctx) -> Result<(Domain, PartitionTree)> {
    ctx.cfg.validate()?;
    let domain = load_domain(&ctx.cfg.dataset)?;
    let tree = binary_partition(&domain, ctx.cfg.privacy.n0)?;
    ctx.log(format!(
        "domain: {} locations, {} cells ({} levels)",
        domain.len(),
        tree.cells.len(),
        tree.levels
    ));
    Ok((domain, tree))
}

fn write_matrix(ctx: &Ctx, stem: &str, matrix: &ObfuscationMatrix, domain: &Domain, format: MatrixFormat) -> Result<()> {
    match format {
        MatrixFormat::Json => write_json(&ctx.path(&format!("{stem}.json")), &matrix.to_export(domain)),
        MatrixFormat::Binary => {
            let p = ctx.path(&format!("{stem}.bin"));
            let f = fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
            let mut w = std::io::BufWriter::new(f);
            matrix.write_binary(domain, &mut w).map_err(|e| Error::io(&p, e))?;
            w.flush().map_err(|e| Error::io(&p, e))
        }
    }
}

/// Reads a matrix in either format, sniffing the binary magic.
pub fn read_matrix(path: &Path, domain: &Domain) -> Result<ObfuscationMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let schema = |message: String| Error::Schema {
        path: path.display().to_string(),
        message,
    };
    if bytes.starts_with(b"GMOBFMAT") {
        return ObfuscationMatrix::read_binary(domain, bytes.as_slice()).map_err(|e| schema(e.to_string()));
    }
    let export: MatrixExport = serde_json::from_slice(&bytes).map_err(|e| schema(e.to_string()))?;
    ObfuscationMatrix::from_export(&export, domain).map_err(|e| schema(e.to_string()))
}

fn domain_beside(explicit: Option<&Path>, anchor: &Path) -> Result<PathBuf> {
    if !anchor.exists() {
        return Err(Error::MissingFile(anchor.to_path_buf()));
    }
    Ok(explicit
        .map(Path::to_path_buf)
        .unwrap_or_else(|| anchor.parent().unwrap_or(Path::new(".")).join("domain.json")))
}

pub fn read_domain(path: &Path) -> Result<Domain> {
    let export: DomainExport = read_json(path)?;
    Domain::from_export(&export).map_err(|e| Error::Schema {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSummary {
    pub qloss: f64,
    pub exp_err: f64,
    pub min_conditional_error: f64,
    pub plss: usize,
}

impl From<&Individual> for SolutionSummary {
    fn from(i: &Individual) -> Self {
        SolutionSummary {
            qloss: i.qloss(),
            exp_err: i.exp_err(),
            min_conditional_error: i.min_conditional_error,
            plss: i.partition.plss.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub mode: WorkerMode,
    pub workers: usize,
    pub tasks: usize,
    pub mean_wtd_non_privacy: f64,
    pub mean_wtd_obfuscated: Option<f64>,
    pub mean_wtd_dpive: Option<f64>,
}

/// `summary.json` written by `pipeline` and `optimize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSummary {
    pub seed: u64,
    pub epsilon0: f64,
    pub e_m: f64,
    pub n0: usize,
    pub locations: usize,
    pub cells: usize,
    pub generations: usize,
    pub converged: bool,
    pub hypervolume: f64,
    pub front_size: usize,
    pub min_qloss: SolutionSummary,
    pub dpive: Option<SolutionSummary>,
    pub pso: Option<Vec<PsoRow>>,
    pub simulation: Option<SimulationSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsoRow {
    pub alpha: f64,
    pub score: f64,
    pub qloss: f64,
    pub exp_err: f64,
    pub min_conditional_error: f64,
}

impl From<&PsoSolution> for PsoRow {
    fn from(s: &PsoSolution) -> Self {
        PsoRow {
            alpha: s.alpha,
            score: s.score,
            qloss: s.best.qloss(),
            exp_err: s.best.exp_err(),
            min_conditional_error: s.best.min_conditional_error,
        }
    }
}

#[derive(Serialize)]
struct HvRow {
    generation: usize,
    hv: f64,
}

struct Optimized {
    evolution: Evolution,
    dpive: Option<Individual>,
    pso: Option<Vec<PsoSolution>>,
}

fn optimize(ctx: &Ctx, domain: &Domain, tree: &PartitionTree) -> Result<Optimized> {
    let cfg = &ctx.cfg;
    let start = Instant::now();
    let evolution = evolve_with(domain, tree, &cfg.privacy, &cfg.moea, |s| {
        if s.generation % 25 == 0 {
            ctx.log(format!(
                "generation {:>4}  hv {:.6}  front {:>3}  {:.1}s",
                s.generation,
                s.hypervolume,
                s.archive_size,
                start.elapsed().as_secs_f64()
            ));
        }
    })?;
    ctx.log(format!(
        "search finished after {} generation(s){}",
        evolution.generations,
        if evolution.converged { " (hypervolume stalled)" } else { "" }
    ));
    let dpive = if cfg.baselines.dpive {
        let mut r = rng::stream(cfg.moea.seed, &[0xd1]);
        Some(dpive_baseline(domain, tree, &cfg.privacy, cfg.baselines.dpive_restarts, &mut r)?)
    } else {
        None
    };
    let pso = if cfg.baselines.pso {
        ctx.log("running scalarized swarm baseline");
        Some(pso_baseline(domain, tree, &cfg.privacy, &cfg.moea, &cfg.pso, &cfg.baselines.alphas)?)
    } else {
        None
    };
    Ok(Optimized { evolution, dpive, pso })
}

fn write_optimized(ctx: &Ctx, domain: &Domain, o: &Optimized, format: MatrixFormat) -> Result<ObfuscationMatrix> {
    let cfg = &ctx.cfg;
    let front = &o.evolution.front;
    write_json(&ctx.path("front.json"), &front.to_export(domain, &cfg.privacy))?;
    write_csv(
        &ctx.path("hv_trace.csv"),
        front.hv_trace.iter().enumerate().map(|(generation, &hv)| HvRow { generation, hv }),
    )?;
    let best = front.min_qloss().ok_or_else(|| Error::Invariant("empty front".into()))?;
    write_json(&ctx.path("partition.json"), &best.partition.to_export(domain, &cfg.privacy))?;
    let matrix = build_matrix(&best.partition, domain)?;
    write_matrix(ctx, "matrix", &matrix, domain, format)?;
    if let Some(d) = &o.dpive {
        write_json(&ctx.path("dpive_partition.json"), &d.partition.to_export(domain, &cfg.privacy))?;
    }
    if let Some(p) = &o.pso {
        write_csv(&ctx.path("pso.csv"), p.iter().map(PsoRow::from))?;
    }
    Ok(matrix)
}

fn summary(ctx: &Ctx, domain: &Domain, tree: &PartitionTree, o: &Optimized) -> RunSummary {
    let cfg = &ctx.cfg;
    let front = &o.evolution.front;
    RunSummary {
        seed: cfg.moea.seed,
        epsilon0: cfg.privacy.epsilon0,
        e_m: cfg.privacy.e_m,
        n0: cfg.privacy.n0,
        locations: domain.len(),
        cells: tree.cells.len(),
        generations: o.evolution.generations,
        converged: o.evolution.converged,
        hypervolume: front.hypervolume(),
        front_size: front.members.len(),
        min_qloss: front.min_qloss().map(SolutionSummary::from).expect("nonempty front"),
        dpive: o.dpive.as_ref().map(SolutionSummary::from),
        pso: o.pso.as_ref().map(|p| p.iter().map(PsoRow::from).collect()),
        simulation: None,
    }
}

fn write_common(ctx: &Ctx, domain: &Domain, tree: &PartitionTree) -> Result<()> {
    ctx.ensure_out()?;
    write_json(&ctx.path("domain.json"), &domain.to_export())?;
    write_json(&ctx.path("cells.json"), &tree.to_export(domain))
}

fn cmd_pipeline(ctx: &Ctx, format: MatrixFormat) -> Result<i32> {
    let (domain, tree) = prepare(ctx)?;
    write_common(ctx, &domain, &tree)?;
    let o = optimize(ctx, &domain, &tree)?;
    let matrix = write_optimized(ctx, &domain, &o, format)?;

    let cfg = &ctx.cfg;
    let seed = cfg.moea.seed;
    let (workers, tasks) = scenario(&domain, &cfg.sim, seed)?;
    let obf = run_simulation(&domain, Some(&matrix), &workers, &tasks, &cfg.sim, seed)?;
    let plain = run_simulation(&domain, None, &workers, &tasks, &cfg.sim, seed)?;
    let dpive_wtd = match &o.dpive {
        Some(d) => {
            let m = build_matrix(&d.partition, &domain)?;
            Some(run_simulation(&domain, Some(&m), &workers, &tasks, &cfg.sim, seed)?.mean_wtd)
        }
        None => None,
    };
    write_csv(&ctx.path("assignments.csv"), &obf.assignments)?;
    write_csv(&ctx.path("assignments_non_privacy.csv"), &plain.assignments)?;

    let mut s = summary(ctx, &domain, &tree, &o);
    s.simulation = Some(SimulationSummary {
        mode: cfg.sim.mode,
        workers: cfg.sim.workers,
        tasks: cfg.sim.tasks,
        mean_wtd_non_privacy: plain.mean_wtd,
        mean_wtd_obfuscated: Some(obf.mean_wtd),
        mean_wtd_dpive: dpive_wtd,
    });
    write_json(&ctx.path("summary.json"), &s)?;
    ctx.log(format!(
        "min-QLoss solution: qloss {:.4} km, exp_err {:.4} km; mean WTD {:.4} km (non-privacy {:.4} km)",
        s.min_qloss.qloss, s.min_qloss.exp_err, obf.mean_wtd, plain.mean_wtd
    ));
    ctx.log(format!("artifacts written to {}", ctx.out.display()));
    Ok(0)
}

fn cmd_partition(ctx: &Ctx, format: MatrixFormat) -> Result<i32> {
    let (domain, tree) = prepare(ctx)?;
    write_common(ctx, &domain, &tree)?;
    let mut r = rng::stream(ctx.cfg.moea.seed, &[0x9a]);
    let mut partition = ret_c(&tree, &domain, &ctx.cfg.privacy, &mut r)?;
    let matrix = build_matrix(&partition, &domain)?;
    partition.objectives = Some(adversary::evaluate(&domain, &matrix).objectives());
    write_json(&ctx.path("partition.json"), &partition.to_export(&domain, &ctx.cfg.privacy))?;
    write_matrix(ctx, "matrix", &matrix, &domain, format)?;
    ctx.log(format!("{} PLSs written to {}", partition.plss.len(), ctx.out.display()));
    Ok(0)
}

fn cmd_optimize(ctx: &Ctx, format: MatrixFormat) -> Result<i32> {
    let (domain, tree) = prepare(ctx)?;
    write_common(ctx, &domain, &tree)?;
    let o = optimize(ctx, &domain, &tree)?;
    write_optimized(ctx, &domain, &o, format)?;
    write_json(&ctx.path("summary.json"), &summary(ctx, &domain, &tree, &o))?;
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub qloss: f64,
    pub exp_err: f64,
    pub min_cond_err: f64,
}

fn cmd_evaluate(matrix: &Path, domain: Option<&Path>) -> Result<i32> {
    let domain = read_domain(&domain_beside(domain, matrix)?)?;
    let m = read_matrix(matrix, &domain)?;
    let e = adversary::evaluate(&domain, &m);
    let report = EvaluationReport {
        qloss: e.qloss,
        exp_err: e.exp_err,
        min_cond_err: e.min_conditional_error,
    };
    println!("{}", serde_json::to_string(&report)?);
    Ok(0)
}

/// `summary.json` written by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSummary {
    pub seed: u64,
    pub mode: WorkerMode,
    pub workers: usize,
    pub tasks: usize,
    pub non_privacy: bool,
    pub mean_wtd: f64,
}

fn cmd_simulate(ctx: &Ctx, matrix: Option<&Path>, domain: Option<&Path>, non_privacy: bool) -> Result<i32> {
    ctx.cfg.sim.validate()?;
    let domain = match (domain, matrix) {
        (Some(d), _) => read_domain(d)?,
        (None, Some(m)) => read_domain(&domain_beside(None, m)?)?,
        (None, None) => {
            ctx.cfg.dataset.validate()?;
            load_domain(&ctx.cfg.dataset)?
        }
    };
    let m = match matrix {
        Some(p) if !non_privacy => Some(read_matrix(p, &domain)?),
        _ => None,
    };
    let seed = ctx.cfg.moea.seed;
    let (workers, tasks) = scenario(&domain, &ctx.cfg.sim, seed)?;
    let outcome = run_simulation(&domain, m.as_ref(), &workers, &tasks, &ctx.cfg.sim, seed)?;
    ctx.ensure_out()?;
    write_csv(&ctx.path("assignments.csv"), &outcome.assignments)?;
    let s = SimulateSummary {
        seed,
        mode: ctx.cfg.sim.mode,
        workers: ctx.cfg.sim.workers,
        tasks: ctx.cfg.sim.tasks,
        non_privacy: m.is_none(),
        mean_wtd: outcome.mean_wtd,
    };
    write_json(&ctx.path("summary.json"), &s)?;
    ctx.log(format!("mean WTD {:.4} km over {} tasks", s.mean_wtd, s.tasks));
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub epsilon0: f64,
    pub e_m: f64,
    /// Number or `NA`.
    pub hv: String,
    /// Number or `NA`.
    pub mean_wtd: String,
    pub status: String,
}

fn cmd_sweep(ctx: &Ctx, eps0_list: &[f64], em_list: &[f64]) -> Result<i32> {
    if eps0_list.is_empty() || em_list.is_empty() {
        return Err(Error::InvalidConfig("sweep grid must be nonempty".into()));
    }
    let (domain, tree) = prepare(ctx)?;
    ctx.ensure_out()?;
    let seed = ctx.cfg.moea.seed;
    let (workers, tasks) = scenario(&domain, &ctx.cfg.sim, seed)?;
    let mut rows = Vec::new();
    for &em in em_list {
        for &eps0 in eps0_list {
            let mut privacy = ctx.cfg.privacy.clone();
            privacy.epsilon0 = eps0;
            privacy.e_m = em;
            let na = |status: &str| SurfaceRow {
                epsilon0: eps0,
                e_m: em,
                hv: "NA".into(),
                mean_wtd: "NA".into(),
                status: status.into(),
            };
            if let Err(e) = privacy.validate() {
                ctx.log(format!("eps0={eps0} E_m={em}: {e}"));
                rows.push(na("invalid"));
                continue;
            }
            match evolve_with(&domain, &tree, &privacy, &ctx.cfg.moea, |_| {}) {
                Ok(ev) => {
                    let best = ev.front.min_qloss().expect("nonempty front");
                    let m = build_matrix(&best.partition, &domain)?;
                    let wtd = run_simulation(&domain, Some(&m), &workers, &tasks, &ctx.cfg.sim, seed)?.mean_wtd;
                    ctx.log(format!("eps0={eps0} E_m={em}: hv {:.6}, mean WTD {wtd:.4}", ev.front.hypervolume()));
                    rows.push(SurfaceRow {
                        epsilon0: eps0,
                        e_m: em,
                        hv: format!("{}", ev.front.hypervolume()),
                        mean_wtd: format!("{wtd}"),
                        status: "ok".into(),
                    });
                }
                Err(Error::CellInfeasible { cell, .. }) => {
                    ctx.log(format!("eps0={eps0} E_m={em}: infeasible (cell {cell})"));
                    rows.push(na("infeasible"));
                }
                Err(e) => return Err(e),
            }
        }
    }
    write_csv(&ctx.path("surface.csv"), &rows)?;
    ctx.log(format!("{} rows written to {}", rows.len(), ctx.path("surface.csv").display()));
    Ok(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSummary {
    pub pairs_checked: usize,
    pub violations: usize,
    /// Largest `observed / bound` over checked pairs.
    pub worst_fraction_of_bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloorReport {
    pub min_conditional_error: f64,
    pub e_m: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub within_pls: DpReport,
    pub cross_pls: CrossSummary,
    pub geo_indistinguishability: GeoIndReport,
    pub row_stochastic: StochasticityReport,
    pub error_floor: FloorReport,
    pub pass: bool,
}

/// All verifiers on one matrix/partition pair.
pub fn verify_artifacts(matrix: &ObfuscationMatrix, partition: &PlsPartition, domain: &Domain, epsilon0: f64, e_m: f64) -> VerifyReport {
    let within = verify_dp_within_pls(matrix, partition, domain, epsilon0);
    let cross = verify_all_cross_pls(matrix, partition, domain, epsilon0);
    let cross = CrossSummary {
        pairs_checked: cross.len(),
        violations: cross.iter().filter(|c| !c.pass).count(),
        worst_fraction_of_bound: cross.iter().map(|c| c.observed_max / c.bound).fold(0.0, f64::max),
        pass: cross.iter().all(|c| c.pass),
    };
    let geo = verify_geo_indistinguishability(matrix, partition, domain);
    let rows = verify_row_stochastic(matrix, domain);
    let floor = adversary::min_conditional_error(domain, matrix);
    let floor = FloorReport {
        min_conditional_error: floor,
        e_m,
        pass: floor >= e_m - 1e-9,
    };
    let pass = within.pass && cross.pass && geo.pass && rows.pass && floor.pass;
    VerifyReport {
        within_pls: within,
        cross_pls: cross,
        geo_indistinguishability: geo,
        row_stochastic: rows,
        error_floor: floor,
        pass,
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn cmd_verify(matrix: &Path, partition: &Path, domain: Option<&Path>, json: bool) -> Result<i32> {
    let domain = read_domain(&domain_beside(domain, matrix)?)?;
    let m = read_matrix(matrix, &domain)?;
    let export: PartitionExport = read_json(partition)?;
    let p = PlsPartition::from_export(&export, &domain).map_err(|e| Error::Schema {
        path: partition.display().to_string(),
        message: e.to_string(),
    })?;
    let r = verify_artifacts(&m, &p, &domain, export.epsilon0, export.e_m);
    if json {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        let witness = r
            .within_pls
            .worst
            .map(|w| format!(" at x={}, y={}, output={}", w.x, w.y, w.output))
            .unwrap_or_default();
        println!(
            "within-PLS DP          {}  max ratio {:.6} (bound e^eps0 = {:.6}){witness}",
            verdict(r.within_pls.pass),
            r.within_pls.max_ratio,
            r.within_pls.bound
        );
        println!(
            "cross-PLS bound        {}  {} pair(s), {} violation(s), worst observed/bound {:.6}",
            verdict(r.cross_pls.pass),
            r.cross_pls.pairs_checked,
            r.cross_pls.violations,
            r.cross_pls.worst_fraction_of_bound
        );
        println!(
            "geo-indistinguishable  {}  max log-ratio excess {:.3e}",
            verdict(r.geo_indistinguishability.pass),
            r.geo_indistinguishability.max_excess
        );
        let row = r
            .row_stochastic
            .worst_row
            .map(|id| format!(" (worst row: location {id})"))
            .unwrap_or_default();
        println!(
            "row stochasticity      {}  max |sum - 1| = {:.3e}{row}",
            verdict(r.row_stochastic.pass),
            r.row_stochastic.max_deviation
        );
        println!(
            "inference-error floor  {}  min ExpEr = {:.6} vs E_m = {}",
            verdict(r.error_floor.pass),
            r.error_floor.min_conditional_error,
            r.error_floor.e_m
        );
        println!("overall                {}", verdict(r.pass));
    }
    Ok(if r.pass { 0 } else { 1 })
}
