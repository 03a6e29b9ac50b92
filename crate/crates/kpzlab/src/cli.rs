//! Command-line front end: subcommands, `key = value` config files, output
//! emitters and run manifests.
//!
//! Config files hold one `key = value` per line, keys being the long flag
//! names of the chosen subcommand (`eps-inv` or `eps_inv`); explicit flags
//! win. Every file written with `--out`/`--report` gets a sibling
//! `<out>.manifest.json`.

use crate::asep::{self, AsepSim, BernoulliPath, ColoredConfiguration, ProfileSim, RingStart};
use crate::error::{invalid, Error, Result};
use crate::lpp::{self, Environment};
use crate::qboson::{self, ExactSampler, QBoson};
use crate::randomness::{parse_seed, replica_seed, CounterRng, SeedSpec};
use crate::s6v::{self, BoundaryCondition};
use crate::scaling::{self, Variant};
use crate::verify::{self, EmpiricalDistribution, Scale, TestReport, VerificationReport};
use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Parser, Debug)]
#[command(name = "kpzlab", version, about = "Colored ASEP / stochastic six-vertex / q-Boson toolkit")]
pub struct Cli {
    /// Plain-text `key = value` file of flag defaults; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replica-level worker threads (fallback: KPZLAB_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Colored ASEP simulation.
    Asep {
        #[command(subcommand)]
        cmd: AsepCmd,
    },
    /// Colored stochastic six-vertex simulation.
    S6v {
        #[command(subcommand)]
        cmd: S6vCmd,
    },
    /// Exact colored q-Boson computations.
    Qboson {
        #[command(subcommand)]
        cmd: QbosonCmd,
    },
    /// Run a verification suite and write a JSON report.
    Verify(VerifyArgs),
    /// Rescaled sheet S^ε(x; y) on a grid.
    Sheet(SheetArgs),
    /// Rescaled landscape L^ε(x, s; y, t) on a grid.
    Landscape(LandscapeArgs),
    /// Last passage values across a curve file.
    Lpp {
        #[command(subcommand)]
        cmd: LppCmd,
    },
    /// Two-point function of the two-color ring proxy.
    Twopoint(TwoPointArgs),
}

#[derive(Subcommand, Debug)]
pub enum AsepCmd {
    /// Evolve and export heights as NDJSON.
    #[command(after_help = "Output: NDJSON, one record per (x, y, t):\n  \
        x  color threshold (particles of color ≥ −x counted); step:x gives the step location; null for bernoulli\n  \
        s  start time (0)\n  y  site; h counts particles strictly right of y\n  t  time\n  \
        h  height\n  seed  the --seed value verbatim\n  q  left jump rate")]
    Simulate(AsepSimArgs),
}

#[derive(Args, Debug)]
pub struct AsepSimArgs {
    /// Left jump rate, in [0, 1).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub q: f64,
    /// Observation times, comma separated.
    #[arg(long, allow_hyphen_values = true, default_value = "10")]
    pub t: String,
    /// Half-width of the simulated window (default: certified for the query).
    #[arg(long, allow_negative_numbers = true)]
    pub window: Option<i64>,
    /// packed | step:x1,x2,.. | bernoulli:p | ring:L:n1,n2,..
    #[arg(long, allow_hyphen_values = true, default_value = "packed")]
    pub init: String,
    /// x values: `a`, `a,b,c` or `lo:hi[:step]`.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub xs: String,
    /// y values, same syntax.
    #[arg(long, allow_hyphen_values = true, default_value = "-10:10")]
    pub ys: String,
    /// Ring burn-in before time 0 (ring init only).
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub burn_in: f64,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum S6vCmd {
    /// Sample and export colored heights as NDJSON.
    #[command(after_help = "Output: NDJSON, one record per (x, y, t):\n  \
        x  color threshold (arrows of color ≥ x counted)\n  y  row; h counts arrows strictly above y\n  \
        t  column\n  h  height\n  q, z, N  model parameters\n  seed  the --seed value verbatim\n\
        Boundary file: one `row color` pair per line, `#` comments.")]
    Simulate(S6vSimArgs),
}

#[derive(Args, Debug)]
pub struct S6vSimArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.4)]
    pub z: f64,
    /// Packed boundary on ⟦−N, N⟧.
    #[arg(long = "N", allow_negative_numbers = true, default_value_t = 10)]
    pub n: i64,
    /// Observation columns, comma separated.
    #[arg(long, allow_hyphen_values = true, default_value = "10")]
    pub t: String,
    /// `packed` or a boundary file path.
    #[arg(long, default_value = "packed")]
    pub boundary: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub xs: String,
    /// Default: ⟦−N, N⟧.
    #[arg(long, allow_hyphen_values = true)]
    pub ys: Option<String>,
    /// Row cap (default: automatic).
    #[arg(long, allow_negative_numbers = true)]
    pub cap: Option<i64>,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum QbosonCmd {
    /// Exact exit law, partition function and (with --K) all configurations.
    #[command(after_help = "Output: JSON with partition_truncated (Σ weights with activity in ⟦−K,0⟧),\n\
        closed_form ((1−qz)/(1−z))^{NM}, exit_law [{word, probability}] (word read bottom to top),\n\
        configurations [{exits, weight}] when --K is given.")]
    Enumerate(QbosonArgs),
    /// Exact samples as NDJSON.
    #[command(after_help = "Output: NDJSON, one record per sample: sample index, seed (verbatim),\n\
        exits (cut words c_{−1}, c_{−2}, …), ensembles[k−1] = curves L^{(k)}_1..L^{(k)}_K on ⟦0, N+M⟧.")]
    Sample(QbosonSampleArgs),
    /// yang-baxter | partition | merge | gibbs.
    Verify(QbosonVerifyArgs),
}

#[derive(Args, Debug)]
pub struct QbosonArgs {
    #[arg(long = "N", default_value_t = 2)]
    pub n: usize,
    #[arg(long = "M", default_value_t = 2)]
    pub m: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.4)]
    pub z: f64,
    /// Column cutoff.
    #[arg(long = "K")]
    pub k: Option<usize>,
    /// `packed` or colors bottom to top, e.g. `1,2`.
    #[arg(long, default_value = "packed")]
    pub sigma: String,
    #[arg(long, alias = "out")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QbosonSampleArgs {
    #[arg(long = "N", default_value_t = 2)]
    pub n: usize,
    #[arg(long = "M", default_value_t = 2)]
    pub m: usize,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.4)]
    pub z: f64,
    #[arg(long = "K", default_value_t = 20)]
    pub k: usize,
    #[arg(long, default_value = "packed")]
    pub sigma: String,
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QbosonVerifyArgs {
    pub suite: String,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    #[arg(long, alias = "out")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(after_help = "Suites: yang-baxter partition color-merge matching pitman gibbs inequalities\n\
    merge-commutation q-invariance stationarity degeneration scaling finite-speed\n\
    monotonicity twopoint all.\n\
    Report: JSON {suite, seed, scale, pass, tests: [{name, parameters, statistic, threshold,\n\
    pass, samples, std_error, details}]}. Exit status 1 if any test fails.\n\
    --tw-cdf FILE: two columns `value cdf`; adds a KS comparison of the one-point sheet law.")]
pub struct VerifyArgs {
    pub suite: String,
    /// Trial count (yang-baxter only).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Smaller sample sizes for a smoke run.
    #[arg(long)]
    pub quick: bool,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    #[arg(long, alias = "out")]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub tw_cdf: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct ScalingArgs {
    /// asep | s6v
    #[arg(long, default_value = "asep")]
    pub variant: String,
    /// Characteristic direction, inside the rarefaction fan.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub q: f64,
    /// Required for s6v.
    #[arg(long, allow_negative_numbers = true)]
    pub z: Option<f64>,
    #[arg(long, allow_negative_numbers = true, default_value_t = 500.0)]
    pub eps_inv: f64,
    /// Shorthand for --xs and --ys.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// `lo:hi:step` or a single value.
    #[arg(long, allow_hyphen_values = true)]
    pub xs: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub ys: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub replicas: usize,
    /// S6V packed boundary size (default ⌈2α/ε⌉ + 1).
    #[arg(long, allow_negative_numbers = true)]
    pub rows: Option<i64>,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(after_help = "Output: CSV. Line 1: `# seed=<seed>`. Header `replica,x,<y values…>`, then one\n\
    row per (replica, x); each cell is the rescaled sheet value at (x, y) for that replica.")]
pub struct SheetArgs {
    #[command(flatten)]
    pub common: ScalingArgs,
}

#[derive(Args, Debug)]
#[command(after_help = "Output: CSV. Line 1: `# seed=<seed>`. Header `replica,x,<y values…>`, then one\n\
    row per (replica, x); each cell is L^ε(x, s; y, t) for that replica.")]
pub struct LandscapeArgs {
    #[command(flatten)]
    pub common: ScalingArgs,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub s: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub t: f64,
}

#[derive(Subcommand, Debug)]
pub enum LppCmd {
    /// f[(u,k) → (v,j)] over a curve file.
    #[command(after_help = "Environment file: one curve per line (curve 1 first), space-separated integers\n\
        on a common domain starting at 0. Output: JSON {from, to, value}.")]
    Eval(LppArgs),
}

#[derive(Args, Debug)]
pub struct LppArgs {
    #[arg(long)]
    pub env: PathBuf,
    /// `u,k`
    #[arg(long, allow_hyphen_values = true)]
    pub from: String,
    /// `v,j`
    #[arg(long, allow_hyphen_values = true)]
    pub to: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(after_help = "Output: CSV. Line 1: `# seed=<seed>`. Header\n\
    `x,S11,S12,S21,S22,se11,se12,se21,se22`: S_kl(time, x) = Cov(η^(k)_0(0), η^(l)_time(x)) with\n\
    η^(1) = color ≥ 1, η^(2) = color 2, time = 2t/((1−q)ε); se = replica standard errors.\n\
    --report FILE additionally writes the full estimate (with window sums) as JSON.")]
pub struct TwoPointArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 512.0)]
    pub eps_inv: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    pub q: f64,
    /// Rescaled time.
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.25)]
    pub t: f64,
    #[arg(long, default_value_t = 384)]
    pub ring: usize,
    /// Default: the ring size.
    #[arg(long, allow_negative_numbers = true)]
    pub burn_in: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value = "-64:64")]
    pub offsets: String,
    #[arg(long, default_value_t = 200)]
    pub replicas: usize,
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    pub seed: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub report: Option<PathBuf>,
}

// ---------------------------------------------------------------------------
// Manifests

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: Option<String>,
    pub params: Value,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

struct Run {
    argv: Vec<String>,
    started: Instant,
}

impl Run {
    /// Write `data` to `out` (stdout when absent) plus its manifest.
    fn emit(&self, out: Option<&Path>, data: &str, seed: Option<&str>, params: Value) -> Result<()> {
        let Some(path) = out else {
            print!("{data}");
            return Ok(());
        };
        std::fs::write(path, data)?;
        let manifest = RunManifest {
            command_line: self.argv.clone(),
            seed: seed.map(str::to_owned),
            params,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_s: self.started.elapsed().as_secs_f64(),
            outputs: vec![OutputDigest { path: path.display().to_string(), sha256: sha256_hex(data.as_bytes()) }],
        };
        std::fs::write(manifest_path(path), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Argument helpers

/// `a`, `a,b,c` or `lo:hi[:step]` over the integers.
pub fn parse_int_list(s: &str) -> Result<Vec<i64>> {
    let bad = || Error::Invalid(format!("`{s}` is not an integer list (`a,b,c` or `lo:hi[:step]`)"));
    if s.contains(':') {
        let p: Vec<i64> = s.split(':').map(|t| t.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?;
        let (lo, hi, step) = match p[..] {
            [lo, hi] => (lo, hi, 1),
            [lo, hi, step] => (lo, hi, step),
            _ => return Err(bad()),
        };
        if step <= 0 || hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).step_by(step as usize).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| Error::Invalid(format!("`{t}` is not a number"))))
        .collect::<Result<_>>()?;
    if v.iter().any(|t| !(*t >= 0.0)) {
        return invalid("times must be ≥ 0");
    }
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn parse_pair(s: &str) -> Result<(i64, usize)> {
    let (a, b) = s.split_once(',').ok_or_else(|| Error::Invalid(format!("`{s}` is not `a,b`")))?;
    let a = a.trim().parse().map_err(|_| Error::Invalid(format!("`{a}` is not an integer")))?;
    let b = b.trim().parse().map_err(|_| Error::Invalid(format!("`{b}` is not a curve index")))?;
    Ok((a, b))
}

fn seed_of(s: &str) -> Result<u64> {
    parse_seed(s)
}

fn ndjson(records: &[Value]) -> String {
    records.iter().map(|r| r.to_string() + "\n").collect()
}

// ---------------------------------------------------------------------------
// Config files

/// Parse `key = value` lines; `#` starts a comment. Keys are normalized to
/// the long-flag spelling.
pub fn parse_config(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(Error::Parse { line: n + 1, msg: "expected `key = value`".into() })?;
        let key = k.trim().replace('_', "-");
        let val = v.trim().trim_matches('"').to_owned();
        if key.is_empty() || val.is_empty() {
            return Err(Error::Parse { line: n + 1, msg: "empty key or value".into() });
        }
        out.push((n + 1, key, val));
    }
    Ok(out)
}

/// Splice config values into `argv` after the subcommand path, skipping keys
/// given explicitly on the command line.
fn expand_config(argv: &[String]) -> std::result::Result<Vec<String>, CliError> {
    let matches = Cli::command().try_get_matches_from(argv).map_err(CliError::Clap)?;
    let mut path = Vec::new();
    let mut leaf: &ArgMatches = &matches;
    while let Some((name, sub)) = leaf.subcommand() {
        path.push(name.to_owned());
        leaf = sub;
    }
    let Some(cfg) = leaf.get_one::<PathBuf>("config") else { return Ok(argv.to_vec()) };
    let text = std::fs::read_to_string(cfg).map_err(|e| CliError::Lib(e.into()))?;
    let entries = parse_config(&text).map_err(CliError::Lib)?;

    let mut cmd = Cli::command();
    cmd.build();
    let mut sub = &cmd;
    for name in &path {
        sub = sub.find_subcommand(name).expect("parsed subcommand exists");
    }
    let mut injected = Vec::new();
    for (line, key, val) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && !matches!(key.as_str(), "config" | "help" | "version"));
        let Some(arg) = arg else {
            return Err(CliError::Lib(Error::Parse { line, msg: format!("unknown key `{key}` for `{}`", path.join(" ")) }));
        };
        if leaf.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine) {
            continue;
        }
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}={val}"));
        } else {
            match val.as_str() {
                "true" => injected.push(format!("--{key}")),
                "false" => {}
                _ => return Err(CliError::Lib(Error::Parse { line, msg: format!("`{key}` expects true or false") })),
            }
        }
    }
    // Insert right after the last subcommand token.
    let mut at = 1;
    let mut j = 0;
    for (i, a) in argv.iter().enumerate().skip(1) {
        if j < path.len() && *a == path[j] {
            j += 1;
            at = i + 1;
        }
    }
    let mut out = argv[..at].to_vec();
    out.extend(injected);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Entry point

#[derive(Debug)]
enum CliError {
    Clap(clap::Error),
    Lib(Error),
}

/// Parse and run; returns the process exit status (0 ok, 1 verification
/// failure or I/O error, 2 usage or validation error).
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    let result = expand_config(&argv).and_then(|full| Cli::try_parse_from(&full).map_err(CliError::Clap));
    let cli = match result {
        Ok(cli) => cli,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(CliError::Lib(e)) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let threads = cli.threads.or_else(|| std::env::var("KPZLAB_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        // Already initialized (e.g. repeated in-process calls) is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let run = Run { argv, started: Instant::now() };
    match dispatch(&run, cli.command) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) | Error::Resource(_) => 1,
                _ => 2,
            }
        }
    }
}

/// `Ok(false)` signals a failed verification.
fn dispatch(run: &Run, cmd: Command) -> Result<bool> {
    match cmd {
        Command::Asep { cmd: AsepCmd::Simulate(a) } => asep_simulate(run, a),
        Command::S6v { cmd: S6vCmd::Simulate(a) } => s6v_simulate(run, a),
        Command::Qboson { cmd: QbosonCmd::Enumerate(a) } => qboson_enumerate(run, a),
        Command::Qboson { cmd: QbosonCmd::Sample(a) } => qboson_sample(run, a),
        Command::Qboson { cmd: QbosonCmd::Verify(a) } => {
            let suite = match a.suite.as_str() {
                "merge" => "color-merge".to_owned(),
                s @ ("yang-baxter" | "partition" | "gibbs") => s.to_owned(),
                s => return invalid(format!("unknown qboson suite `{s}` (yang-baxter | partition | merge | gibbs)")),
            };
            verify_cmd(run, VerifyArgs { suite, trials: None, quick: false, seed: a.seed, report: a.report, tw_cdf: None })
        }
        Command::Verify(a) => verify_cmd(run, a),
        Command::Sheet(a) => grid_cmd(run, a.common, None),
        Command::Landscape(a) => grid_cmd(run, a.common, Some((a.s, a.t))),
        Command::Lpp { cmd: LppCmd::Eval(a) } => lpp_eval(run, a),
        Command::Twopoint(a) => twopoint_cmd(run, a),
    }
}

fn asep_simulate(run: &Run, a: AsepSimArgs) -> Result<bool> {
    let seed = seed_of(&a.seed)?;
    let times = parse_f64_list(&a.t)?;
    let xs = parse_int_list(&a.xs)?;
    let ys = parse_int_list(&a.ys)?;
    let t_max = *times.last().expect("nonempty");
    let radius = xs.iter().chain(&ys).map(|v| v.abs()).max().unwrap_or(0);
    let w = a.window.unwrap_or_else(|| asep::safe_half_width(t_max, radius));
    let spec = SeedSpec::asep(seed);
    let record = |x: Value, y: i64, t: f64, h: i64| json!({"x": x, "s": 0.0, "y": y, "t": t, "h": h, "seed": a.seed, "q": a.q});
    let mut recs = Vec::new();
    let (kind, rest) = a.init.split_once(':').unwrap_or((a.init.as_str(), ""));
    match kind {
        "packed" => {
            let mut sim = AsepSim::new(ColoredConfiguration::packed(w), spec, a.q, 0.0)?;
            for &t in &times {
                sim.advance_to(t)?;
                for &x in &xs {
                    for &y in &ys {
                        recs.push(record(json!(x), y, t, asep::colored_height(sim.config(), x, y, t)?));
                    }
                }
            }
        }
        "step" | "bernoulli" => {
            let inits: Vec<(Value, BernoulliPath)> = if kind == "step" {
                parse_int_list(rest)?.into_iter().map(|x| (json!(x), BernoulliPath::step(x, -w, w))).collect()
            } else {
                let p: f64 = rest.parse().map_err(|_| Error::Invalid(format!("bad density `{rest}`")))?;
                if !(0.0..=1.0).contains(&p) {
                    return invalid("bernoulli density must lie in [0, 1]");
                }
                vec![(Value::Null, verify::random_path(w, p, &mut CounterRng::new(replica_seed(seed, 0))))]
            };
            for (label, h0) in inits {
                let mut sim = ProfileSim::new(&h0, 0.0, spec, a.q)?;
                for &t in &times {
                    sim.advance_to(t)?;
                    for &y in &ys {
                        recs.push(record(label.clone(), y, t, sim.height(y)?));
                    }
                }
            }
        }
        "ring" => {
            let (l, counts) = rest.split_once(':').ok_or_else(|| Error::Invalid("ring init is `ring:L:n1,n2,..`".into()))?;
            let l: usize = l.parse().map_err(|_| Error::Invalid(format!("bad ring size `{l}`")))?;
            let counts: Vec<usize> =
                parse_int_list(counts)?.into_iter().map(|c| usize::try_from(c).map_err(|_| Error::Invalid("negative count".into()))).collect::<Result<_>>()?;
            let cfg = asep::ring_start(&counts, l, RingStart::Shuffled, seed)?;
            let mut sim = AsepSim::new(cfg, spec, a.q, 0.0)?;
            for &t in &times {
                sim.advance_to(a.burn_in + t)?;
                for &x in &xs {
                    for &y in &ys {
                        recs.push(record(json!(x), y, t, asep::count_at_least(sim.config(), -(x as i32), y)));
                    }
                }
            }
        }
        other => return invalid(format!("unknown init `{other}` (packed | step:x1,.. | bernoulli:p | ring:L:n1,..)")),
    }
    let params = json!({"q": a.q, "t": times, "window": w, "init": a.init, "xs": xs, "ys": ys, "burn_in": a.burn_in});
    run.emit(a.out.as_deref(), &ndjson(&recs), Some(&a.seed), params)?;
    eprintln!("asep simulate: {} records, window ±{w}", recs.len());
    Ok(true)
}

fn s6v_simulate(run: &Run, a: S6vSimArgs) -> Result<bool> {
    let seed = seed_of(&a.seed)?;
    let times: Vec<i64> = parse_int_list(&a.t)?;
    if times.iter().any(|&t| t < 0) {
        return invalid("columns must be ≥ 0");
    }
    let bd = if a.boundary == "packed" {
        BoundaryCondition::packed(a.n)
    } else {
        BoundaryCondition::parse(&std::fs::read_to_string(&a.boundary)?, None)?
    };
    let xs = parse_int_list(&a.xs)?;
    let ys = match &a.ys {
        Some(s) => parse_int_list(s)?,
        None => (-a.n..=a.n).collect(),
    };
    let t_max = *times.iter().max().unwrap_or(&0);
    let field = s6v::sample(&bd, a.q, a.z, t_max, a.cap, seed)?;
    let mut recs = Vec::new();
    for &t in &times {
        for &x in &xs {
            for &y in &ys {
                let h = field.colored_height(x, y, t)?;
                recs.push(json!({"x": x, "y": y, "t": t, "h": h, "q": a.q, "z": a.z, "N": a.n, "seed": a.seed}));
            }
        }
    }
    let params = json!({"q": a.q, "z": a.z, "N": a.n, "t": times, "boundary": a.boundary, "cap": field.cap});
    run.emit(a.out.as_deref(), &ndjson(&recs), Some(&a.seed), params)?;
    eprintln!("s6v simulate: {} records, row cap {}", recs.len(), field.cap);
    Ok(true)
}

fn qboson_enumerate(run: &Run, a: QbosonArgs) -> Result<bool> {
    let sigma = qboson::parse_sigma(&a.sigma, a.n)?;
    let model = QBoson::new(a.n, a.m, sigma.clone(), a.q, a.z)?;
    let tm = model.transfer_matrix()?;
    let exit: Vec<Value> = tm.exit_law()?.into_iter().map(|(w, p)| json!({"word": w, "probability": p})).collect();
    let mut report = json!({
        "n": a.n, "m": a.m, "sigma": sigma, "q": a.q, "z": a.z,
        "closed_form": model.closed_form(),
        "partition_exact": tm.partition_exact()?,
        "exit_law": exit,
    });
    if let Some(k) = a.k {
        report["k"] = json!(k);
        report["partition_truncated"] = json!(tm.partition_truncated(k));
        let configs = qboson::enumerate(&model, k, 2_000_000)?;
        report["configurations"] = configs.into_iter().map(|(c, w)| json!({"exits": c.exits, "weight": w})).collect();
    }
    let text = serde_json::to_string_pretty(&report)? + "\n";
    run.emit(a.report.as_deref(), &text, None, json!({"n": a.n, "m": a.m, "q": a.q, "z": a.z, "k": a.k, "sigma": a.sigma}))?;
    eprintln!("qboson enumerate: {} exit words", report["exit_law"].as_array().map_or(0, Vec::len));
    Ok(true)
}

fn qboson_sample(run: &Run, a: QbosonSampleArgs) -> Result<bool> {
    let seed = seed_of(&a.seed)?;
    let sigma = qboson::parse_sigma(&a.sigma, a.n)?;
    let model = QBoson::new(a.n, a.m, sigma, a.q, a.z)?;
    let sampler = ExactSampler::new(&model, a.k)?;
    let colors = model.colors() as u8;
    let recs: Vec<Value> = (0..a.samples)
        .into_par_iter()
        .map(|i| {
            let cfg = sampler.sample(&mut CounterRng::new(replica_seed(seed, i as u64)));
            let ens: Vec<Vec<Vec<i64>>> = (1..=colors).map(|c| cfg.line_ensemble(c, a.k).curves).collect();
            json!({"sample": i, "seed": a.seed, "exits": cfg.exits, "ensembles": ens})
        })
        .collect();
    let params = json!({"n": a.n, "m": a.m, "q": a.q, "z": a.z, "k": a.k, "sigma": a.sigma, "samples": a.samples});
    run.emit(a.out.as_deref(), &ndjson(&recs), Some(&a.seed), params)?;
    eprintln!("qboson sample: {} samples", recs.len());
    Ok(true)
}

fn verify_cmd(run: &Run, a: VerifyArgs) -> Result<bool> {
    let seed = seed_of(&a.seed)?;
    let scale = if a.quick { Scale::Quick } else { Scale::Full };
    let mut report = match (a.suite.as_str(), a.trials) {
        ("yang-baxter", Some(n)) => VerificationReport { tests: vec![verify::yang_baxter_suite(n, seed)?] },
        (_, Some(_)) => return invalid("--trials applies to yang-baxter only"),
        (s, None) => verify::run_suite(s, scale, seed)?,
    };
    if let Some(path) = &a.tw_cdf {
        report.tests.push(tw_reference(path, scale, seed)?);
    }
    for t in &report.tests {
        println!("{}", t.line());
    }
    let pass = report.pass();
    let body = json!({"suite": a.suite, "seed": a.seed, "scale": scale, "pass": pass, "tests": report.tests});
    if let Some(path) = &a.report {
        run.emit(Some(path), &(serde_json::to_string_pretty(&body)? + "\n"), Some(&a.seed), json!({"suite": a.suite, "trials": a.trials, "quick": a.quick}))?;
    }
    Ok(pass)
}

/// KS of the S6V one-point sheet law (q = 0) against a user-supplied CDF.
fn tw_reference(path: &Path, scale: Scale, seed: u64) -> Result<TestReport> {
    let table = verify::parse_cdf_table(&std::fs::read_to_string(path)?)?;
    let eps_inv = if scale == Scale::Full { 500.0 } else { 125.0 };
    let replicas = if scale == Scale::Full { 10_000 } else { 1000 };
    let p = scaling::constants(Variant::S6v, 1.0, 0.0, Some(0.25), 1.0 / eps_inv)?;
    let xs = verify::one_point_samples(&p, 0.0, 0.0, p.default_n(), replicas, seed)?;
    let ks = verify::ks_against_reference(&EmpiricalDistribution::from_samples(&xs), &table)?;
    Ok(TestReport::at_most("reference-cdf", json!({"file": path.display().to_string(), "eps_inv": eps_inv, "replicas": replicas}), ks, 0.05, replicas as u64)
        .with_se(verify::ks_critical(replicas as u64, u64::MAX / 2, 0.32)))
}

fn grid_cmd(run: &Run, a: ScalingArgs, times: Option<(f64, f64)>) -> Result<bool> {
    let seed = seed_of(&a.seed)?;
    let variant: Variant = a.variant.parse()?;
    if a.replicas == 0 {
        return invalid("need at least one replica");
    }
    let p = scaling::constants(variant, a.alpha, a.q, a.z, 1.0 / a.eps_inv)?;
    let grid = |s: &Option<String>| -> Result<Vec<f64>> {
        match s.as_ref().or(a.grid.as_ref()) {
            Some(g) => scaling::parse_grid(g),
            None => Ok(vec![0.0]),
        }
    };
    let (xs, ys) = (grid(&a.xs)?, grid(&a.ys)?);
    let n = a.rows.unwrap_or_else(|| p.default_n());
    let (s, t) = times.unwrap_or((0.0, 1.0));
    let grids = (0..a.replicas)
        .into_par_iter()
        .map(|r| scaling::landscape_grid(&p, &xs, s, &ys, t, n, replica_seed(seed, r as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut csv = format!("# seed={}\nreplica,x", a.seed);
    for y in &ys {
        csv.push_str(&format!(",{y}"));
    }
    csv.push('\n');
    for (r, g) in grids.iter().enumerate() {
        for (x, row) in g.xs.iter().zip(&g.values) {
            csv.push_str(&format!("{r},{x}"));
            for v in row {
                csv.push_str(&format!(",{v}"));
            }
            csv.push('\n');
        }
    }
    let params = json!({"scaling": p, "xs": xs, "ys": ys, "s": s, "t": t, "n": n, "replicas": a.replicas});
    run.emit(a.out.as_deref(), &csv, Some(&a.seed), params)?;
    eprintln!("{}: {} replicas × {} × {} grid", if times.is_some() { "landscape" } else { "sheet" }, a.replicas, xs.len(), ys.len());
    Ok(true)
}

fn lpp_eval(run: &Run, a: LppArgs) -> Result<bool> {
    let env = Environment::parse(&std::fs::read_to_string(&a.env)?)?;
    let (u, k) = parse_pair(&a.from)?;
    let (v, j) = parse_pair(&a.to)?;
    let value = lpp::lpp_value(&env, u, k, v, j)?;
    let body = json!({"from": [u, k], "to": [v, j], "value": value});
    run.emit(a.out.as_deref(), &(body.to_string() + "\n"), None, json!({"env": a.env.display().to_string()}))?;
    eprintln!("lpp eval: f[({u},{k}) → ({v},{j})] = {value}");
    Ok(true)
}

fn twopoint_cmd(run: &Run, a: TwoPointArgs) -> Result<bool> {
    let seed = seed_of(&a.seed)?;
    let offsets = parse_int_list(&a.offsets)?;
    let burn = a.burn_in.unwrap_or(a.ring as f64);
    let e = verify::twopoint(a.beta, 1.0 / a.eps_inv, a.q, a.t, a.ring, burn, &offsets, a.replicas, seed)?;
    let mut csv = format!("# seed={}\nx,S11,S12,S21,S22,se11,se12,se21,se22\n", a.seed);
    for (i, x) in offsets.iter().enumerate() {
        let s = |k: usize, l: usize| e.entries[k][l][i];
        let se = |k: usize, l: usize| e.std_errors[k][l][i];
        csv.push_str(&format!(
            "{x},{},{},{},{},{},{},{},{}\n",
            s(0, 0),
            s(0, 1),
            s(1, 0),
            s(1, 1),
            se(0, 0),
            se(0, 1),
            se(1, 0),
            se(1, 1)
        ));
    }
    let params = json!({"beta": a.beta, "eps_inv": a.eps_inv, "q": a.q, "t": a.t, "ring": a.ring, "burn_in": burn, "replicas": a.replicas});
    run.emit(a.out.as_deref(), &csv, Some(&a.seed), params.clone())?;
    if let Some(path) = &a.report {
        run.emit(Some(path), &(serde_json::to_string_pretty(&e)? + "\n"), Some(&a.seed), params)?;
    }
    let ws = e.window_sums;
    eprintln!(
        "twopoint: time {:.1}, window sums S11 {:.4} S12 {:.4} S21 {:.4} S22 {:.4}",
        e.time, ws[0][0].0, ws[0][1].0, ws[1][0].0, ws[1][1].0
    );
    Ok(true)
}
