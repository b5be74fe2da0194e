//! Command-line front end. `main.rs` only maps [`run`]'s result to a
//! process exit code.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::Utc;
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    generate_checkerboard, generate_synthetic, load_dataset, read_json, read_labels_csv, save_dataset,
    write_dense_csv, write_json, write_labels_csv, CheckerboardSpec, MultiViewDataset, SyntheticSpec,
};
use crate::error::{MvmcError, Result};
use crate::metrics::{build_report, dunn_index, silhouette, ClusteringReport, MetricSpace, QualityScores};
use crate::solver::mvmc::{MvmcConfig, MvmcOutcome, MvmcSolver};
use crate::solver::mvmcc::{MvmccConfig, MvmccOutcome, MvmccSolver};
use crate::solver::{trace_csv, AlmSettings, TraceRow};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PARAMETER: i32 = 2;
pub const EXIT_NOT_CONVERGED: i32 = 3;
pub const EXIT_DIVERGENCE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "mvmc", version, about = "Multi-view multiple clustering and co-clustering")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic dataset described by a JSON spec.
    Generate(GenerateArgs),
    /// Alternative clusterings with a shared matrix and h individuality matrices.
    Mvmc(SolveArgs),
    /// One co-clustering per view.
    Mvmcc(CoClusterArgs),
    /// Score externally produced label files.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Spec JSON (a checkerboard spec with --checkerboard).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Planted co-clustering data instead of planted clusterings.
    #[arg(long)]
    pub checkerboard: bool,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Dataset directory containing manifest.json.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for sweep sub-runs; a single run is always sequential.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Freeze the shared matrix at zero.
    #[arg(long)]
    pub no_shared: bool,
    /// `key=lo..hi[:steps]`; lambda1, lambda2 and mu0 are log-spaced, h is an integer range.
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long, value_enum, default_value_t = SpaceArg::Concat)]
    pub metric_space: SpaceArg,
    /// Also write the kNN similarity matrices and the summed Laplacian.
    #[arg(long)]
    pub dump_graphs: bool,
    /// Also write the final U, D and indicator matrices.
    #[arg(long)]
    pub snapshot: bool,
}

#[derive(Debug, Args)]
pub struct CoClusterArgs {
    #[command(flatten)]
    pub common: SolveArgs,
    /// Also score the row (feature) clusterings of each view.
    #[arg(long)]
    pub report_rows: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// One label CSV per clustering.
    #[arg(long, num_args = 1.., required = true)]
    pub labels: Vec<PathBuf>,
    /// Ground-truth label CSVs; adds NMI-to-truth to the report.
    #[arg(long, num_args = 1..)]
    pub truth: Vec<PathBuf>,
    /// Report JSON path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SpaceArg::Concat)]
    pub metric_space: SpaceArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SpaceArg {
    Concat,
    PerView,
}

impl From<SpaceArg> for MetricSpace {
    fn from(s: SpaceArg) -> Self {
        match s {
            SpaceArg::Concat => MetricSpace::Concat,
            SpaceArg::PerView => MetricSpace::PerView,
        }
    }
}

/// Provenance of one solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub dataset: String,
    pub seed: u64,
    /// SHA-256 of the canonical JSON form of the effective config.
    pub config_hash: String,
    pub use_shared: bool,
    pub started: String,
    pub finished: String,
    pub outputs: Vec<String>,
    pub converged: bool,
}

/// Outcome of a command, before mapping to an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    NotConverged,
}

pub fn exit_code(result: &Result<Status>) -> i32 {
    match result {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::NotConverged) => EXIT_NOT_CONVERGED,
        Err(e) => error_exit_code(e),
    }
}

pub fn error_exit_code(e: &MvmcError) -> i32 {
    match e {
        MvmcError::Divergence { .. } => EXIT_DIVERGENCE,
        MvmcError::Io { .. } => EXIT_IO,
        _ => EXIT_PARAMETER,
    }
}

pub fn run(cli: Cli) -> Result<Status> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a).map(|_| Status::Ok),
        Command::Mvmc(a) => cmd_mvmc(&a),
        Command::Mvmcc(a) => cmd_mvmcc(&a),
        Command::Report(a) => cmd_report(&a).map(|_| Status::Ok),
    }
}

/// SHA-256 over the key-sorted JSON form, so re-serializing a config
/// never changes its hash.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let value = serde_json::to_value(cfg).expect("configs serialize");
    let canonical = serde_json::to_string(&value).expect("values serialize");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| MvmcError::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| MvmcError::io(path, e))
}

fn now() -> String {
    Utc::now().to_rfc3339()
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<()> {
    create_dir(&args.out)?;
    if args.checkerboard {
        let spec: CheckerboardSpec = read_json(&args.spec)?;
        let cb = generate_checkerboard(&spec)?;
        save_dataset(&cb.dataset, &args.out)?;
        for (v, rows) in cb.row_truths.iter().enumerate() {
            write_labels_csv(&args.out.join(format!("row_truth_{v}.csv")), rows)?;
        }
        write_json(&args.out.join("spec.json"), &spec)
    } else {
        let spec: SyntheticSpec = read_json(&args.spec)?;
        let ds = generate_synthetic(&spec)?;
        save_dataset(&ds, &args.out)?;
        write_json(&args.out.join("spec.json"), &spec)
    }
}

// ---------------------------------------------------------------------------
// sweeps

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parses `key=lo..hi[:steps]`. Without `steps` the grid has one point per
/// decade. `h` is swept linearly over integers.
pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let bad = || MvmcError::param(format!("sweep '{text}' is not key=lo..hi[:steps]"));
    let (key, range) = text.split_once('=').ok_or_else(bad)?;
    let (range, steps) = match range.split_once(':') {
        Some((r, s)) => (r, Some(s.parse::<usize>().map_err(|_| bad())?)),
        None => (range, None),
    };
    let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let key = key.trim().to_string();
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(bad());
    }
    let values = match key.as_str() {
        "h" => {
            if lo < 1.0 || lo.fract() != 0.0 || hi.fract() != 0.0 {
                return Err(MvmcError::param("h sweeps need integer bounds >= 1"));
            }
            (lo as usize..=hi as usize).map(|h| h as f64).collect()
        }
        "lambda1" | "lambda2" | "mu0" => {
            if lo <= 0.0 {
                return Err(MvmcError::param("log-spaced sweeps need lo > 0"));
            }
            let steps = steps.unwrap_or_else(|| (hi / lo).log10().round() as usize + 1);
            if steps == 0 {
                return Err(bad());
            }
            if steps == 1 {
                vec![lo]
            } else {
                let (a, b) = (lo.log10(), hi.log10());
                (0..steps)
                    .map(|i| {
                        let e = a + (b - a) * i as f64 / (steps - 1) as f64;
                        // snap exact decades so directory names stay clean
                        let snapped = e.round();
                        10f64.powf(if (e - snapped).abs() < 1e-9 { snapped } else { e })
                    })
                    .collect()
            }
        }
        other => return Err(MvmcError::param(format!("cannot sweep '{other}'"))),
    };
    Ok(SweepSpec { key, values })
}

fn apply_alm(alm: &mut AlmSettings, key: &str, value: f64) {
    match key {
        "lambda1" => alm.lambda1 = value,
        "lambda2" => alm.lambda2 = value,
        "mu0" => {
            alm.mu0 = value;
            alm.mu_max = alm.mu_max.max(value);
        }
        _ => {}
    }
}

#[derive(Debug, Clone, Serialize)]
struct SweepRow {
    run: String,
    lambda1: f64,
    lambda2: f64,
    h: usize,
    mean_sc: Option<f64>,
    mean_di: Option<f64>,
    mean_nmi: Option<f64>,
    mean_jc: Option<f64>,
    status: String,
}

fn sweep_summary_csv(rows: &[SweepRow]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from("run,lambda1,lambda2,h,mean_sc,mean_di,mean_nmi,mean_jc,status\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.run,
            r.lambda1,
            r.lambda2,
            r.h,
            opt(r.mean_sc),
            opt(r.mean_di),
            opt(r.mean_nmi),
            opt(r.mean_jc),
            r.status
        ));
    }
    out
}

/// Runs `one` for every grid point (in parallel over `threads` workers),
/// then writes `sweep_summary.csv`. The worst sub-run status wins.
fn run_sweep<C: Clone + Send + Sync>(
    args: &SolveArgs,
    base: &C,
    sweep: &SweepSpec,
    set: impl Fn(&mut C, &str, f64) -> Result<()> + Sync,
    describe: impl Fn(&C) -> (f64, f64, usize) + Sync,
    one: impl Fn(&C, &Path) -> Result<(Status, ClusteringReport)> + Sync,
) -> Result<Status> {
    create_dir(&args.out)?;
    let configs: Vec<(String, C)> = sweep
        .values
        .iter()
        .enumerate()
        .map(|(i, &value)| {
            let mut cfg = base.clone();
            set(&mut cfg, &sweep.key, value)?;
            Ok((format!("run_{i:02}_{}_{value}", sweep.key), cfg))
        })
        .collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.max(1))
        .build()
        .map_err(|e| MvmcError::param(format!("thread pool: {e}")))?;
    let results: Vec<Result<(Status, ClusteringReport)>> = pool.install(|| {
        configs
            .par_iter()
            .map(|(name, cfg)| one(cfg, &args.out.join(name)))
            .collect()
    });
    let mut rows = Vec::new();
    let mut worst = Status::Ok;
    let mut first_err = None;
    for ((name, cfg), res) in configs.iter().zip(results) {
        let (lambda1, lambda2, h) = describe(cfg);
        let mut row = SweepRow {
            run: name.clone(),
            lambda1,
            lambda2,
            h,
            mean_sc: None,
            mean_di: None,
            mean_nmi: None,
            mean_jc: None,
            status: String::new(),
        };
        match res {
            Ok((status, report)) => {
                row.mean_sc = report.mean_sc;
                row.mean_di = report.mean_di;
                row.mean_nmi = report.mean_nmi;
                row.mean_jc = report.mean_jc;
                row.status = match status {
                    Status::Ok => "converged".into(),
                    Status::NotConverged => "not_converged".into(),
                };
                if status == Status::NotConverged {
                    worst = Status::NotConverged;
                }
            }
            Err(e) => {
                row.status = format!("error: {e}").replace(',', ";");
                first_err.get_or_insert(e);
            }
        }
        rows.push(row);
    }
    write_text(&args.out.join("sweep_summary.csv"), &sweep_summary_csv(&rows))?;
    match first_err {
        Some(e) => Err(e),
        None => Ok(worst),
    }
}

// ---------------------------------------------------------------------------
// mvmc

fn load_config<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => read_json(p),
        None => Ok(T::default()),
    }
}

pub fn cmd_mvmc(args: &SolveArgs) -> Result<Status> {
    let ds = load_dataset(&args.data)?;
    let mut cfg: MvmcConfig = load_config(args.config.as_deref())?;
    if let Some(seed) = args.seed {
        cfg.alm.seed = seed;
    }
    if args.no_shared {
        cfg.use_shared = false;
    }
    match &args.sweep {
        None => mvmc_single(args, &ds, &cfg, &args.out).map(|(s, _)| s),
        Some(text) => {
            let sweep = parse_sweep(text)?;
            run_sweep(
                args,
                &cfg,
                &sweep,
                |c: &mut MvmcConfig, key, value| {
                    if key == "h" {
                        c.h = value as usize;
                        if c.r.len() > 1 {
                            c.r.resize(c.h, *c.r.last().expect("nonempty"));
                        }
                    } else {
                        apply_alm(&mut c.alm, key, value);
                    }
                    c.validate(ds.n())
                },
                |c| (c.alm.lambda1, c.alm.lambda2, c.h),
                |c, dir| mvmc_single(args, &ds, c, dir),
            )
        }
    }
}

fn write_trace(out: &Path, trace: &[TraceRow], outputs: &mut Vec<String>) -> Result<()> {
    write_text(&out.join("trace.csv"), &trace_csv(trace))?;
    outputs.push("trace.csv".into());
    Ok(())
}

fn dump_graphs(out: &Path, graphs: &crate::graph::GraphSet, outputs: &mut Vec<String>) -> Result<()> {
    for (v, w) in graphs.similarities.iter().enumerate() {
        let name = format!("graph_v{v}.csv");
        write_dense_csv(&out.join(&name), w)?;
        outputs.push(name);
    }
    write_dense_csv(&out.join("laplacian.csv"), &graphs.laplacian_sum)?;
    outputs.push("laplacian.csv".into());
    Ok(())
}

struct RunContext<'a> {
    command: &'a str,
    args: &'a SolveArgs,
    seed: u64,
    config_hash: String,
    use_shared: bool,
    started: String,
}

impl RunContext<'_> {
    fn finish(self, out: &Path, mut outputs: Vec<String>, converged: bool) -> Result<()> {
        outputs.push("manifest.json".into());
        let manifest = RunManifest {
            command: self.command.into(),
            dataset: self.args.data.display().to_string(),
            seed: self.seed,
            config_hash: self.config_hash,
            use_shared: self.use_shared,
            started: self.started,
            finished: now(),
            outputs,
            converged,
        };
        write_json(&out.join("manifest.json"), &manifest)
    }
}

/// On divergence the trace gathered so far is still written.
fn write_divergence_trace(out: &Path, err: &MvmcError) -> Result<()> {
    if let MvmcError::Divergence { trace, .. } = err {
        write_text(&out.join("trace.csv"), &trace_csv(trace))?;
    }
    Ok(())
}

fn mvmc_single(
    args: &SolveArgs,
    ds: &MultiViewDataset,
    cfg: &MvmcConfig,
    out: &Path,
) -> Result<(Status, ClusteringReport)> {
    let ctx = RunContext {
        command: "mvmc",
        args,
        seed: cfg.alm.seed,
        config_hash: config_hash(cfg),
        use_shared: cfg.use_shared,
        started: now(),
    };
    create_dir(out)?;
    let solver = MvmcSolver::new(ds, cfg)?;
    let mut outputs = Vec::new();
    write_json(&out.join("config.json"), cfg)?;
    outputs.push("config.json".into());
    if args.dump_graphs {
        dump_graphs(out, solver.graphs(), &mut outputs)?;
    }
    let outcome: MvmcOutcome = match solver.run() {
        Ok(o) => o,
        Err(e) => {
            write_divergence_trace(out, &e)?;
            return Err(e);
        }
    };
    for (k, labels) in outcome.labelings.iter().enumerate() {
        let name = format!("labels_k{k}.csv");
        write_labels_csv(&out.join(&name), labels)?;
        outputs.push(name);
    }
    let report = build_report(ds, &outcome.labelings, args.metric_space.into(), false)?;
    write_json(&out.join("report.json"), &report)?;
    outputs.push("report.json".into());
    write_trace(out, &outcome.state.trace, &mut outputs)?;
    if args.snapshot {
        let state = &outcome.state;
        let mut mats = vec![("U.csv".to_string(), &state.u)];
        for (k, d) in state.ds.iter().enumerate() {
            mats.push((format!("D_k{k}.csv"), d));
        }
        for (k, head) in state.heads.iter().enumerate() {
            mats.push((format!("R_k{k}.csv"), &head.r));
        }
        for (name, m) in mats {
            write_dense_csv(&out.join(&name), m)?;
            outputs.push(name);
        }
    }
    ctx.finish(out, outputs, outcome.converged)?;
    let status = if outcome.converged { Status::Ok } else { Status::NotConverged };
    Ok((status, report))
}

// ---------------------------------------------------------------------------
// mvmcc

/// Quality of one view's feature clustering, with features as points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowQuality {
    pub view: usize,
    pub quality: QualityScores,
}

pub fn cmd_mvmcc(args: &CoClusterArgs) -> Result<Status> {
    let common = &args.common;
    let ds = load_dataset(&common.data)?;
    let mut cfg: MvmccConfig = load_config(common.config.as_deref())?;
    if let Some(seed) = common.seed {
        cfg.alm.seed = seed;
    }
    if common.no_shared {
        cfg.use_shared = false;
    }
    match &common.sweep {
        None => mvmcc_single(args, &ds, &cfg, &common.out).map(|(s, _)| s),
        Some(text) => {
            let sweep = parse_sweep(text)?;
            if sweep.key == "h" {
                return Err(MvmcError::param("co-clustering fixes h to the number of views"));
            }
            run_sweep(
                common,
                &cfg,
                &sweep,
                |c: &mut MvmccConfig, key, value| {
                    apply_alm(&mut c.alm, key, value);
                    c.validate(&ds)
                },
                |c| (c.alm.lambda1, c.alm.lambda2, ds.m()),
                |c, dir| mvmcc_single(args, &ds, c, dir),
            )
        }
    }
}

fn mvmcc_single(
    args: &CoClusterArgs,
    ds: &MultiViewDataset,
    cfg: &MvmccConfig,
    out: &Path,
) -> Result<(Status, ClusteringReport)> {
    let common = &args.common;
    let ctx = RunContext {
        command: "mvmcc",
        args: common,
        seed: cfg.alm.seed,
        config_hash: config_hash(cfg),
        use_shared: cfg.use_shared,
        started: now(),
    };
    create_dir(out)?;
    let solver = MvmccSolver::new(ds, cfg)?;
    let mut outputs = Vec::new();
    write_json(&out.join("config.json"), cfg)?;
    outputs.push("config.json".into());
    if common.dump_graphs {
        dump_graphs(out, solver.graphs(), &mut outputs)?;
    }
    let outcome: MvmccOutcome = match solver.run() {
        Ok(o) => o,
        Err(e) => {
            write_divergence_trace(out, &e)?;
            return Err(e);
        }
    };
    for v in 0..ds.m() {
        let name = format!("row_labels_v{v}.csv");
        write_labels_csv(&out.join(&name), &outcome.row_labelings[v])?;
        outputs.push(name);
        let name = format!("col_labels_v{v}.csv");
        write_labels_csv(&out.join(&name), &outcome.col_labelings[v])?;
        outputs.push(name);
    }
    let report = build_report(ds, &outcome.col_labelings, common.metric_space.into(), false)?;
    write_json(&out.join("report.json"), &report)?;
    outputs.push("report.json".into());
    if args.report_rows {
        let rows: Vec<RowQuality> = ds
            .views()
            .iter()
            .zip(&outcome.row_labelings)
            .enumerate()
            .map(|(v, (x, labels))| {
                let points = x.transpose();
                RowQuality {
                    view: v,
                    quality: QualityScores {
                        sc: silhouette(&points, labels).ok(),
                        di: dunn_index(&points, labels).ok(),
                    },
                }
            })
            .collect();
        write_json(&out.join("row_report.json"), &rows)?;
        outputs.push("row_report.json".into());
    }
    write_trace(out, &outcome.state.trace, &mut outputs)?;
    if common.snapshot {
        let state = &outcome.state;
        write_dense_csv(&out.join("U.csv"), &state.u)?;
        outputs.push("U.csv".into());
        for (v, d) in state.ds.iter().enumerate() {
            let name = format!("D_v{v}.csv");
            write_dense_csv(&out.join(&name), d)?;
            outputs.push(name);
        }
    }
    ctx.finish(out, outputs, outcome.converged)?;
    let status = if outcome.converged { Status::Ok } else { Status::NotConverged };
    Ok((status, report))
}

// ---------------------------------------------------------------------------
// report

pub fn cmd_report(args: &ReportArgs) -> Result<ClusteringReport> {
    let ds = load_dataset(&args.data)?;
    let labelings = args
        .labels
        .iter()
        .map(|p| read_labels_csv(p))
        .collect::<Result<Vec<_>>>()?;
    let with_truths = !args.truth.is_empty();
    let ds = if with_truths {
        let truths = args
            .truth
            .iter()
            .map(|p| read_labels_csv(p))
            .collect::<Result<Vec<_>>>()?;
        MultiViewDataset::with_names(ds.views().to_vec(), ds.names().to_vec(), truths)?
    } else {
        ds
    };
    let report = build_report(&ds, &labelings, args.metric_space.into(), with_truths)?;
    match &args.out {
        Some(path) => write_json(path, &report)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("reports serialize")
        ),
    }
    Ok(report)
}
