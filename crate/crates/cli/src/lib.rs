//! Command-line front end for `gld-core`: loads JSON inputs, runs one of
//! the engines over a rate grid and writes a CSV plus `MANIFEST.json`.

pub mod formats;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gld_core::expurgated::{self, zchannel, ExpurgationProblem};
use gld_core::jsc::{JscEngine, JscProblem};
use gld_core::rce::{RceEngine, RceProblem};
use gld_core::simulator::{self, Engine, SimConfig};
use gld_core::{Channel, Distribution, SimplexGrid};
use serde_json::json;

use formats::*;

pub const THREADS_ENV: &str = "GLD_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] gld_core::Error),
    #[error("{path}: {source}")]
    InvalidFile {
        path: PathBuf,
        source: gld_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 3 for configurations that cannot be evaluated, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        let core = match self {
            CliError::Core(e) | CliError::InvalidFile { source: e, .. } => Some(e),
            _ => None,
        };
        match core {
            Some(gld_core::Error::EmptyCouplings { .. } | gld_core::Error::InstanceTooLarge(_)) => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "gld", version, about = "Error exponents of the generalized likelihood decoder")]
pub struct Cli {
    /// Worker threads (default: GLD_THREADS, else all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Random coding exponent curve.
    Rce(RceArgs),
    /// Expurgated exponent curve, optionally with the CKM baseline.
    Expurgated(ExpurgatedArgs),
    /// Source-channel exponent with decoder side information.
    Jsc(JscArgs),
    /// Monte Carlo error probability of random constant-composition codes.
    Simulate(SimulateArgs),
    /// Exact ensemble error probability of tiny instances.
    Oracle(OracleArgs),
    /// z-channel comparison: GLD expurgated, CKM and random coding.
    Zchannel(ZchannelArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Output CSV path; MANIFEST.json is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write full-precision JSON next to the CSV.
    #[arg(long)]
    pub json: bool,
    /// Report rates and exponents in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Args)]
pub struct ChannelInputs {
    /// Channel file: {"matrix": [[...], ...]}.
    #[arg(long)]
    pub channel: PathBuf,
    /// Input composition file: {"probs": [...]}; uniform when omitted.
    #[arg(long)]
    pub input_dist: Option<PathBuf>,
    /// Decoder metric file; matched with beta = 1 when omitted.
    #[arg(long)]
    pub metric: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RceArgs {
    #[command(flatten)]
    pub inputs: ChannelInputs,
    /// START:STOP:STEP in nats, or a comma list.
    #[arg(long)]
    pub rates: String,
    /// Grid resolution (default 64 for binary alphabets, 16 otherwise).
    #[arg(long)]
    pub grid: Option<u32>,
    /// Polish each outer minimizer off the grid.
    #[arg(long)]
    pub refine: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Baseline {
    Ckm,
}

#[derive(Debug, Args)]
pub struct ExpurgatedArgs {
    /// Channel file; not needed with --zchannel.
    #[arg(long, required_unless_present = "zchannel")]
    pub channel: Option<PathBuf>,
    #[arg(long)]
    pub input_dist: Option<PathBuf>,
    #[arg(long)]
    pub metric: Option<PathBuf>,
    #[arg(long)]
    pub rates: String,
    /// Grid resolution (default 16).
    #[arg(long)]
    pub grid: Option<u32>,
    /// Expurgation slack applied inside alpha.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Add a baseline column.
    #[arg(long, value_enum)]
    pub baseline: Option<Baseline>,
    /// Emit the z-channel three-curve table for this parameter instead.
    #[arg(long, value_name = "W")]
    pub zchannel: Option<f64>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct JscArgs {
    /// Joint source/side-information file: {"table": [[...], ...]}, rows u.
    #[arg(long)]
    pub source: PathBuf,
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long)]
    pub input_dist: Option<PathBuf>,
    /// Source metric file; matched with beta = 1 when omitted.
    #[arg(long)]
    pub f: Option<PathBuf>,
    /// Channel metric file; matched with beta = 1 when omitted.
    #[arg(long)]
    pub g: Option<PathBuf>,
    #[arg(long)]
    pub rates: String,
    /// Grid resolution (default 8).
    #[arg(long)]
    pub grid: Option<u32>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineArg {
    Types,
    Explicit,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub inputs: ChannelInputs,
    /// Block lengths, comma separated.
    #[arg(long)]
    pub n: String,
    /// Rate in nats; M = round(exp(nR)).
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = EngineArg::Types)]
    pub engine: EngineArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub inputs: ChannelInputs,
    #[arg(long)]
    pub n: String,
    #[arg(long)]
    pub rate: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args)]
pub struct ZchannelArgs {
    /// Crossover probability of the z-channel.
    #[arg(long)]
    pub w: f64,
    #[arg(long)]
    pub rates: String,
    /// Grid resolution of the random coding curve (default 64).
    #[arg(long)]
    pub grid: Option<u32>,
    #[command(flatten)]
    pub output: Output,
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors are reported on stderr.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, CliError> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = thread_count(cli.threads)?;
    match threads {
        Some(0) => Err(CliError::Usage("thread count must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(|| dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    let started = Instant::now();
    let mut manifest = match command {
        Command::Rce(a) => rce(a)?,
        Command::Expurgated(a) => expurgated_cmd(a)?,
        Command::Jsc(a) => jsc(a)?,
        Command::Simulate(a) => simulate(a)?,
        Command::Oracle(a) => oracle(a)?,
        Command::Zchannel(a) => zchannel_cmd(a)?,
    };
    manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    write_json(&manifest_path(Path::new(&manifest.output)), &manifest)
}

fn grid(k: u32) -> Result<SimplexGrid, CliError> {
    Ok(SimplexGrid::new(k)?)
}

/// Nats or bits for display.
#[derive(Clone, Copy)]
struct Units(bool);

impl Units {
    fn show(self, x: f64) -> String {
        format!("{}", if self.0 { x / std::f64::consts::LN_2 } else { x })
    }

    fn name(self) -> &'static str {
        if self.0 {
            "bits"
        } else {
            "nats"
        }
    }
}

fn manifest(verb: &str, output: &Output, grid: Option<u32>, rates: Vec<f64>, seed: Option<u64>) -> RunManifest {
    RunManifest {
        verb: verb.into(),
        inputs: BTreeMap::new(),
        grid,
        rates,
        seed,
        output: output.out.display().to_string(),
        units: Units(output.bits).name().into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: 0.0,
        notes: BTreeMap::new(),
    }
}

fn record(m: &mut RunManifest, name: &str, path: Option<&Path>) {
    if let Some(p) = path {
        m.inputs.insert(name.into(), p.display().to_string());
    }
}

struct Loaded {
    channel: Channel,
    q_x: Distribution,
}

fn load_inputs(channel: &Path, input_dist: Option<&Path>) -> Result<Loaded, CliError> {
    let channel = load_channel(channel)?;
    let q_x = match input_dist {
        Some(p) => load_distribution(p)?,
        None => Distribution::uniform(channel.inputs())?,
    };
    Ok(Loaded { channel, q_x })
}

fn channel_manifest(m: &mut RunManifest, inputs: &ChannelInputs) {
    record(m, "channel", Some(&inputs.channel));
    record(m, "input_dist", inputs.input_dist.as_deref());
    record(m, "metric", inputs.metric.as_deref());
}

fn rce(a: RceArgs) -> Result<RunManifest, CliError> {
    let rates = parse_rates(&a.rates)?;
    let l = load_inputs(&a.inputs.channel, a.inputs.input_dist.as_deref())?;
    let metric = load_metric(a.inputs.metric.as_deref(), &l.channel)?;
    let k = a
        .grid
        .unwrap_or_else(|| SimplexGrid::default_for_alphabet(l.channel.inputs().max(l.channel.outputs())).resolution());
    let prob = RceProblem::new(l.q_x, l.channel, metric, grid(k)?.with_refinement(a.refine))?;
    let engine = RceEngine::new(&prob)?;
    let curve = engine.curve(&rates)?;
    let u = Units(a.output.bits);
    let rows: Vec<Vec<String>> = curve
        .points()
        .iter()
        .map(|p| vec![u.show(p.rate), u.show(p.exponent), joint_cell(&p.witness_q), joint_cell(&p.witness_qprime)])
        .collect();
    write_csv(&a.output.out, &["rate", "exponent", "witness_q", "witness_qprime"], &rows)?;
    let critical = engine.critical_rate();
    if a.output.json {
        let points: Vec<_> = curve
            .points()
            .iter()
            .map(|p| {
                json!({"rate": p.rate, "exponent": p.exponent,
                       "witness_q": p.witness_q.table(), "witness_qprime": p.witness_qprime.table()})
            })
            .collect();
        write_json(&json_path(&a.output.out), &json!({"points": points}))?;
    }
    let mut m = manifest("rce", &a.output, Some(k), rates, None);
    channel_manifest(&mut m, &a.inputs);
    m.notes.insert("refine".into(), json!(a.refine));
    m.notes.insert(
        "critical_rate".into(),
        json!({"r0": critical.r0, "lower_bound": critical.lower_bound, "upper_bound": critical.upper_bound}),
    );
    Ok(m)
}

fn zchannel_rows(w: f64, rates: &[f64], k: u32, output: &Output) -> Result<(), CliError> {
    let rows = zchannel::zchannel_curves_with_grid(w, rates, &grid(k)?)?;
    let u = Units(output.bits);
    let csv_rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![u.show(r.rate), u.show(r.e_gld), u.show(r.e_ckm), u.show(r.e_rc)])
        .collect();
    write_csv(&output.out, &["rate", "e_gld", "e_ckm", "e_rc"], &csv_rows)?;
    if output.json {
        let points: Vec<_> = rows
            .iter()
            .map(|r| json!({"rate": r.rate, "e_gld": r.e_gld, "e_ckm": r.e_ckm, "e_rc": r.e_rc}))
            .collect();
        write_json(&json_path(&output.out), &json!({"w": w, "points": points}))?;
    }
    Ok(())
}

fn zchannel_cmd(a: ZchannelArgs) -> Result<RunManifest, CliError> {
    let rates = parse_rates(&a.rates)?;
    let k = a.grid.unwrap_or(zchannel::RC_RESOLUTION);
    zchannel_rows(a.w, &rates, k, &a.output)?;
    let mut m = manifest("zchannel", &a.output, Some(k), rates, None);
    m.notes.insert("w".into(), json!(a.w));
    Ok(m)
}

fn expurgated_cmd(a: ExpurgatedArgs) -> Result<RunManifest, CliError> {
    let rates = parse_rates(&a.rates)?;
    if let Some(w) = a.zchannel {
        let k = a.grid.unwrap_or(zchannel::RC_RESOLUTION);
        zchannel_rows(w, &rates, k, &a.output)?;
        let mut m = manifest("expurgated", &a.output, Some(k), rates, None);
        m.notes.insert("zchannel".into(), json!(w));
        return Ok(m);
    }
    let channel_path = a.channel.as_deref().expect("required by clap");
    let l = load_inputs(channel_path, a.input_dist.as_deref())?;
    let metric = load_metric(a.metric.as_deref(), &l.channel)?;
    let k = a.grid.unwrap_or(16);
    let g = grid(k)?;
    let prob = ExpurgationProblem::new(l.q_x.clone(), l.channel.clone(), metric, g)?.with_epsilon(a.epsilon)?;
    let u = Units(a.output.bits);
    let mut rows = Vec::with_capacity(rates.len());
    let mut points = Vec::with_capacity(rates.len());
    for &r in &rates {
        let p = expurgated::expurgated_point(&prob, r)?;
        let mut row = vec![u.show(r), u.show(p.exponent)];
        let mut point = json!({"rate": r, "exponent": p.exponent, "raw": p.raw, "feasible": p.feasible,
                               "witness_qxx": p.witness_qxx.as_ref().map(|q| q.table().to_vec()),
                               "witness_qxxy": p.witness_qxxy.as_ref().map(|q| q.table.clone())});
        if a.baseline == Some(Baseline::Ckm) {
            let ckm = expurgated::ckm_baseline(&l.q_x, &l.channel, r, &g)?;
            row.push(u.show(ckm));
            point["ckm"] = json!(ckm);
        }
        rows.push(row);
        points.push(point);
    }
    let mut header = vec!["rate", "exponent"];
    if a.baseline == Some(Baseline::Ckm) {
        header.push("ckm");
    }
    write_csv(&a.output.out, &header, &rows)?;
    if a.output.json {
        write_json(&json_path(&a.output.out), &json!({"points": points}))?;
    }
    let mut m = manifest("expurgated", &a.output, Some(k), rates, None);
    record(&mut m, "channel", a.channel.as_deref());
    record(&mut m, "input_dist", a.input_dist.as_deref());
    record(&mut m, "metric", a.metric.as_deref());
    m.notes.insert("epsilon".into(), json!(a.epsilon));
    Ok(m)
}

fn jsc(a: JscArgs) -> Result<RunManifest, CliError> {
    let rates = parse_rates(&a.rates)?;
    let p_uv = load_joint(&a.source)?;
    let l = load_inputs(&a.channel, a.input_dist.as_deref())?;
    let f = load_source_metric(a.f.as_deref(), &p_uv)?;
    let g = load_metric(a.g.as_deref(), &l.channel)?;
    let k = a.grid.unwrap_or(8);
    let prob = JscProblem::new(p_uv, l.q_x, l.channel, f, g, grid(k)?)?;
    let ex = JscEngine::new(&prob)?.exponents(&rates)?;
    let u = Units(a.output.bits);
    let rows: Vec<Vec<String>> = ex
        .e2_curve
        .points()
        .iter()
        .zip(ex.e_of_r.points())
        .map(|(p2, p)| vec![u.show(p.rate), u.show(p2.exponent), u.show(ex.e5), u.show(p.exponent)])
        .collect();
    write_csv(&a.output.out, &["rate", "e2", "e5", "e"], &rows)?;
    if a.output.json {
        let points: Vec<_> = ex
            .e2_curve
            .points()
            .iter()
            .zip(ex.e_of_r.points())
            .map(|(p2, p)| {
                json!({"rate": p.rate, "e2": p2.exponent, "e5": ex.e5, "e": p.exponent,
                       "witness_quv": p.witness_q.table(), "witness_qupv": p.witness_qprime.table()})
            })
            .collect();
        write_json(
            &json_path(&a.output.out),
            &json!({"points": points, "saturation_rate": ex.saturation_rate}),
        )?;
    }
    let mut m = manifest("jsc", &a.output, Some(k), rates, None);
    record(&mut m, "source", Some(&a.source));
    record(&mut m, "channel", Some(&a.channel));
    record(&mut m, "input_dist", a.input_dist.as_deref());
    record(&mut m, "f", a.f.as_deref());
    record(&mut m, "g", a.g.as_deref());
    m.notes.insert("e5".into(), json!(ex.e5));
    m.notes.insert("saturation_rate".into(), json!(ex.saturation_rate));
    Ok(m)
}

fn simulate(a: SimulateArgs) -> Result<RunManifest, CliError> {
    let ns = parse_list(&a.n)?;
    let l = load_inputs(&a.inputs.channel, a.inputs.input_dist.as_deref())?;
    let metric = load_metric(a.inputs.metric.as_deref(), &l.channel)?;
    let engine = match a.engine {
        EngineArg::Types => Engine::TypeDomain,
        EngineArg::Explicit => Engine::Explicit,
    };
    let u = Units(a.output.bits);
    let mut rows = Vec::with_capacity(ns.len());
    let mut results = Vec::with_capacity(ns.len());
    for &n in &ns {
        let r = simulator::run_monte_carlo(&SimConfig {
            n,
            rate: a.rate,
            channel: l.channel.clone(),
            composition: l.q_x.clone(),
            metric: metric.clone(),
            trials: a.trials,
            seed: a.seed,
            engine,
        })?;
        rows.push(vec![
            n.to_string(),
            u.show(a.rate),
            r.trials.to_string(),
            r.errors.to_string(),
            format!("{}", r.error_estimate),
            format!("{}", r.stderr),
            u.show(r.empirical_exponent),
        ]);
        results.push(json!({"n": n, "rate": a.rate, "codebook_size": r.codebook_size,
                            "effective_rate": r.effective_rate, "trials": r.trials, "errors": r.errors,
                            "p_hat": r.error_estimate, "stderr": r.stderr,
                            "emp_exponent": r.empirical_exponent, "fallbacks": r.fallbacks}));
    }
    write_csv(
        &a.output.out,
        &["n", "rate", "trials", "errors", "p_hat", "stderr", "emp_exponent"],
        &rows,
    )?;
    if a.output.json {
        write_json(&json_path(&a.output.out), &json!({"results": results}))?;
    }
    let mut m = manifest("simulate", &a.output, None, vec![a.rate], Some(a.seed));
    channel_manifest(&mut m, &a.inputs);
    m.notes.insert("n".into(), json!(ns));
    m.notes.insert("trials".into(), json!(a.trials));
    m.notes.insert("engine".into(), json!(format!("{:?}", engine)));
    m.notes.insert(
        "codebook_sizes".into(),
        json!(results.iter().map(|r| r["codebook_size"].clone()).collect::<Vec<_>>()),
    );
    Ok(m)
}

fn oracle(a: OracleArgs) -> Result<RunManifest, CliError> {
    let ns = parse_list(&a.n)?;
    let l = load_inputs(&a.inputs.channel, a.inputs.input_dist.as_deref())?;
    let metric = load_metric(a.inputs.metric.as_deref(), &l.channel)?;
    let u = Units(a.output.bits);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in &ns {
        let m = simulator::codebook_size(n, a.rate)?;
        let p = simulator::exact_ensemble_error(&l.q_x, n, m, &l.channel, &metric)?;
        rows.push(vec![n.to_string(), u.show(a.rate), m.to_string(), format!("{p}")]);
    }
    write_csv(&a.output.out, &["n", "rate", "codebook_size", "p_exact"], &rows)?;
    if a.output.json {
        let results: Vec<_> = rows
            .iter()
            .map(|r| json!({"n": r[0].parse::<usize>().unwrap(), "codebook_size": r[2].parse::<usize>().unwrap(),
                            "p_exact": r[3].parse::<f64>().unwrap()}))
            .collect();
        write_json(&json_path(&a.output.out), &json!({"rate": a.rate, "results": results}))?;
    }
    let mut m = manifest("oracle", &a.output, None, vec![a.rate], None);
    channel_manifest(&mut m, &a.inputs);
    m.notes.insert("n".into(), json!(ns));
    Ok(m)
}
