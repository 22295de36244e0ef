//! Command-line flags, the optional `key = value` config file, and the
//! resolved [`RunConfig`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cycle_density::special::cache::GRID_CACHE_ENV;
use cycle_density::special::grid::{
    DEFAULT_BUCHSTAB_V_MAX, DEFAULT_DICKMAN_V_MAX, DEFAULT_STEPS_PER_UNIT,
};
use cycle_density::Backend;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Largest `n` for which the exact `ν` table is built.
pub const NU_EXACT_CEILING: usize = 10_000_000;
/// Largest `n` for which the exact `κ` table is built.
pub const KAPPA_EXACT_CEILING: usize = 1_000_000;
/// Largest `n` accepted anywhere; beyond it `n/r` loses integer precision.
pub const N_CEILING: usize = 1 << 52;
/// Largest number of `(n, r)` rows in one run.
pub const ROW_CEILING: usize = 1_000_000;
/// Largest grid end point accepted by `cache-grids`.
pub const V_MAX_CAP: usize = 200;
pub const DEFAULT_CACHE_DIR: &str = "grid-cache";

#[derive(Parser, Debug)]
#[command(
    name = "cycle-density",
    version,
    about = "Densities of permutations with restricted cycle lengths and their asymptotics"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Subcommand, Debug)]
pub enum CommandArgs {
    /// Evaluate one quantity at a single (n, r)
    Eval(CommonArgs),
    /// Exact-vs-asymptotic comparison over ranges of n and r
    Sweep(CommonArgs),
    /// Total variation distance and H(u) over ranges of n and r
    Dtv(CommonArgs),
    /// Explicit and asymptotic bounds on |κ(n, r) − e^{−H_r}|
    Bounds(CommonArgs),
    /// Build or refresh the cached Dickman and Buchstab grids
    CacheGrids(CacheArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// nu, kappa or dtv
    #[arg(long, value_enum)]
    pub quantity: Option<QuantityArg>,
    /// n values: `8`, `10,20`, `100..200`, `100..200/10` or `1000..8000*2`
    #[arg(long)]
    pub n: Option<String>,
    /// r values, same syntax as --n
    #[arg(long)]
    pub r: Option<String>,
    /// Fix u = n/r and take n = round(u r) for each r
    #[arg(long)]
    pub u: Option<f64>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Truncation tolerance of the distance series, in (0, 1e-6]
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<OutputFormat>,
    /// Write to this file instead of standard output
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Directory of cached grids
    #[arg(long)]
    pub grid_cache: Option<PathBuf>,
    /// Mesh points per unit interval of the special-function grids
    #[arg(long)]
    pub steps: Option<usize>,
    /// Worker threads for sweeps
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Fail instead of omitting exact values above the capacity ceilings
    #[arg(long)]
    pub require_exact: bool,
    /// key = value file whose keys mirror the long flags
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone)]
pub struct CacheArgs {
    /// Target directory; defaults to $CYCLE_DENSITY_GRID_CACHE, then ./grid-cache
    #[arg(long)]
    pub dir: Option<PathBuf>,
    #[arg(long)]
    pub dickman_v_max: Option<usize>,
    #[arg(long)]
    pub buchstab_v_max: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuantityArg {
    Nu,
    Kappa,
    Dtv,
}

impl QuantityArg {
    pub fn name(&self) -> &'static str {
        match self {
            QuantityArg::Nu => "nu",
            QuantityArg::Kappa => "kappa",
            QuantityArg::Dtv => "dtv",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Float,
    Rational,
}

impl From<BackendArg> for Backend {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::Float => Backend::Float64,
            BackendArg::Rational => Backend::ExactRational,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Eval,
    Sweep,
    Dtv,
    Bounds,
    CacheGrids,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval => "eval",
            Command::Sweep => "sweep",
            Command::Dtv => "dtv",
            Command::Bounds => "bounds",
            Command::CacheGrids => "cache-grids",
        }
    }
}

/// How the `(n, r)` pairs of a run are chosen.
#[derive(Clone, Debug, PartialEq)]
pub enum PairSpec {
    /// Every `n` with every `r`, `n`-major.
    Grid { n: Vec<usize>, r: Vec<usize> },
    /// `n = round(u r)` for each `r`.
    FixedU { u: f64, r: Vec<usize> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub quantity: QuantityArg,
    pub pairs: PairSpec,
    pub backend: Backend,
    pub tol: f64,
    pub output_format: OutputFormat,
    pub output_path: Option<PathBuf>,
    pub grid_cache_path: Option<PathBuf>,
    pub steps_per_unit: usize,
    pub jobs: Option<usize>,
    pub require_exact: bool,
    pub dickman_v_max: usize,
    pub buchstab_v_max: usize,
}

impl RunConfig {
    /// The `(n, r)` pairs admissible for this command, in output order.
    /// Sweeps drop inadmissible pairs; the result is never empty.
    pub fn pairs(&self) -> Result<Vec<(usize, usize)>, CliError> {
        let raw: Vec<(usize, usize)> = match &self.pairs {
            PairSpec::Grid { n, r } => n
                .iter()
                .flat_map(|&n| r.iter().map(move |&r| (n, r)))
                .collect(),
            PairSpec::FixedU { u, r } => r
                .iter()
                .map(|&r| ((u * r as f64).round() as usize, r))
                .collect(),
        };
        let admissible = |&(n, r): &(usize, usize)| match (self.command, self.quantity) {
            (Command::Bounds, _) => r >= 1 && 2 * r < n,
            (_, QuantityArg::Kappa) => r >= 1 && r < n,
            _ => r >= 1 && r <= n,
        };
        if self.command == Command::Eval {
            if raw.len() != 1 {
                return Err(CliError::Usage(
                    "eval takes a single n and a single r".into(),
                ));
            }
            if !admissible(&raw[0]) {
                let (n, r) = raw[0];
                return Err(CliError::Usage(format!(
                    "(n, r) = ({n}, {r}) is outside the domain of {}",
                    self.quantity.name()
                )));
            }
            return Ok(raw);
        }
        let kept: Vec<_> = raw.into_iter().filter(admissible).collect();
        if kept.is_empty() {
            return Err(CliError::Usage(
                "empty range: no admissible (n, r) pairs".into(),
            ));
        }
        if kept.len() > ROW_CEILING {
            return Err(CliError::Usage(format!(
                "{} rows requested, the ceiling is {ROW_CEILING}",
                kept.len()
            )));
        }
        Ok(kept)
    }
}

/// Parses `8`, `1e6`, `10,20`, `100..200`, `100..200/10` and `1000..8000*2`
/// (inclusive ranges, with an additive step or a multiplicative factor).
pub fn parse_range(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = |msg: &str| CliError::Usage(format!("bad range `{spec}`: {msg}"));
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim) {
        if item.is_empty() {
            return Err(bad("empty item"));
        }
        let Some((lo, rest)) = item.split_once("..") else {
            out.push(parse_count(item).map_err(|m| bad(&m))?);
            continue;
        };
        let lo = parse_count(lo).map_err(|m| bad(&m))?;
        let (hi, step) = if let Some((hi, s)) = rest.split_once('/') {
            (hi, Step::Add(parse_count(s).map_err(|m| bad(&m))?))
        } else if let Some((hi, f)) = rest.split_once('*') {
            (hi, Step::Mul(parse_count(f).map_err(|m| bad(&m))?))
        } else {
            (rest, Step::Add(1))
        };
        let hi = parse_count(hi).map_err(|m| bad(&m))?;
        if hi < lo {
            return Err(bad("upper end below lower end"));
        }
        let mut v = lo;
        match step {
            Step::Add(0) => return Err(bad("step must be positive")),
            Step::Mul(f) if f < 2 || lo == 0 => {
                return Err(bad("factor must be at least 2 and the start positive"))
            }
            _ => {}
        }
        while v <= hi {
            out.push(v);
            if out.len() > ROW_CEILING {
                return Err(bad("too many points"));
            }
            v = match step {
                Step::Add(s) => v.saturating_add(s),
                Step::Mul(f) => v.saturating_mul(f),
            };
            if v == usize::MAX {
                break;
            }
        }
    }
    if out.is_empty() {
        return Err(bad("no values"));
    }
    Ok(out)
}

enum Step {
    Add(usize),
    Mul(usize),
}

fn parse_count(s: &str) -> Result<usize, String> {
    let s = s.trim();
    if let Ok(v) = s.parse::<usize>() {
        return check_count(v);
    }
    let f: f64 = s
        .parse()
        .map_err(|_| format!("`{s}` is not a non-negative integer"))?;
    if f.is_nan() || f < 0.0 || f.fract() != 0.0 || f > N_CEILING as f64 {
        return Err(format!("`{s}` is not an integer in [0, 2^52]"));
    }
    check_count(f as usize)
}

fn check_count(v: usize) -> Result<usize, String> {
    if v > N_CEILING {
        return Err(format!("{v} is above the ceiling 2^52"));
    }
    Ok(v)
}

/// Reads `key = value` lines; `#` starts a comment.
pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected key = value",
                i + 1
            )));
        };
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

const COMMON_KEYS: &[&str] = &[
    "quantity",
    "n",
    "r",
    "u",
    "backend",
    "tol",
    "format",
    "output",
    "grid-cache",
    "steps",
    "jobs",
    "require-exact",
];
const CACHE_KEYS: &[&str] = &["dir", "dickman-v-max", "buchstab-v-max", "steps"];

struct Layered<'a> {
    file: &'a BTreeMap<String, String>,
}

impl Layered<'_> {
    fn get<T, F>(&self, flag: Option<T>, key: &str, parse: F) -> Result<Option<T>, CliError>
    where
        F: Fn(&str) -> Result<T, String>,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(v) => parse(v)
                .map(Some)
                .map_err(|m| CliError::Usage(format!("config key `{key}`: {m}"))),
        }
    }
}

fn parse_enum<T: ValueEnum>(s: &str) -> Result<T, String> {
    T::from_str(s, true)
}

fn parse_num<T: std::str::FromStr>(s: &str) -> Result<T, String> {
    s.parse().map_err(|_| format!("cannot parse `{s}`"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("`{s}` is not a boolean")),
    }
}

fn check_keys(file: &BTreeMap<String, String>, allowed: &[&str]) -> Result<(), CliError> {
    for k in file.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(CliError::Usage(format!("unknown config key `{k}`")));
        }
    }
    Ok(())
}

fn env_cache_dir() -> Option<PathBuf> {
    std::env::var_os(GRID_CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

fn check_steps(steps: usize) -> Result<usize, CliError> {
    if !(8..=1 << 16).contains(&steps) || !steps.is_power_of_two() {
        return Err(CliError::Usage(format!(
            "steps must be a power of two in [8, 65536], got {steps}"
        )));
    }
    Ok(steps)
}

impl RunConfig {
    /// Flags win over the config file, which wins over the environment.
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        match cli.command {
            CommandArgs::Eval(a) => Self::from_common(Command::Eval, a),
            CommandArgs::Sweep(a) => Self::from_common(Command::Sweep, a),
            CommandArgs::Dtv(a) => Self::from_common(Command::Dtv, a),
            CommandArgs::Bounds(a) => Self::from_common(Command::Bounds, a),
            CommandArgs::CacheGrids(a) => Self::from_cache(a),
        }
    }

    fn from_common(command: Command, a: CommonArgs) -> Result<Self, CliError> {
        let file = match &a.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        check_keys(&file, COMMON_KEYS)?;
        let l = Layered { file: &file };

        let quantity = match command {
            Command::Dtv => {
                let q = l.get(a.quantity, "quantity", parse_enum::<QuantityArg>)?;
                if q.is_some_and(|q| q != QuantityArg::Dtv) {
                    return Err(CliError::Usage("the dtv command only computes dtv".into()));
                }
                QuantityArg::Dtv
            }
            Command::Bounds => {
                let q = l.get(a.quantity, "quantity", parse_enum::<QuantityArg>)?;
                if q.is_some_and(|q| q != QuantityArg::Kappa) {
                    return Err(CliError::Usage(
                        "the bounds command only covers kappa".into(),
                    ));
                }
                QuantityArg::Kappa
            }
            _ => l
                .get(a.quantity, "quantity", parse_enum::<QuantityArg>)?
                .ok_or_else(|| CliError::Usage("--quantity is required".into()))?,
        };

        let n = l.get(a.n, "n", |s| Ok(s.to_string()))?;
        let r = l
            .get(a.r, "r", |s| Ok(s.to_string()))?
            .ok_or_else(|| CliError::Usage("--r is required".into()))?;
        let u = l.get(a.u, "u", parse_num::<f64>)?;
        let r = parse_range(&r)?;
        let pairs = match (n, u) {
            (Some(_), Some(_)) => {
                return Err(CliError::Usage("give either --n or --u, not both".into()))
            }
            (None, None) => return Err(CliError::Usage("--n or --u is required".into())),
            (Some(n), None) => PairSpec::Grid {
                n: parse_range(&n)?,
                r,
            },
            (None, Some(u)) => {
                if !u.is_finite()
                    || u < 1.0
                    || u * (*r.iter().max().unwrap() as f64) > N_CEILING as f64
                {
                    return Err(CliError::Usage(format!(
                        "u must be finite and at least 1, got {u}"
                    )));
                }
                PairSpec::FixedU { u, r }
            }
        };

        let backend: Backend = l
            .get(a.backend, "backend", parse_enum::<BackendArg>)?
            .unwrap_or(BackendArg::Float)
            .into();
        let tol = l
            .get(a.tol, "tol", parse_num::<f64>)?
            .unwrap_or(cycle_density::dtv::DEFAULT_TOL);
        if !(tol > 0.0 && tol <= 1e-6) {
            return Err(CliError::Usage(format!(
                "tol must lie in (0, 1e-6], got {tol}"
            )));
        }
        let default_format = if command == Command::Eval {
            OutputFormat::Table
        } else {
            OutputFormat::Csv
        };
        let output_format = l
            .get(a.format, "format", parse_enum::<OutputFormat>)?
            .unwrap_or(default_format);
        let output_path = l.get(a.output, "output", |s| Ok(PathBuf::from(s)))?;
        let grid_cache_path = l
            .get(a.grid_cache, "grid-cache", |s| Ok(PathBuf::from(s)))?
            .or_else(env_cache_dir);
        let steps_per_unit = check_steps(
            l.get(a.steps, "steps", parse_num::<usize>)?
                .unwrap_or(DEFAULT_STEPS_PER_UNIT),
        )?;
        let jobs = l.get(a.jobs, "jobs", parse_num::<usize>)?;
        if jobs == Some(0) {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        let require_exact =
            a.require_exact || l.get(None, "require-exact", parse_bool)?.unwrap_or(false);

        Ok(Self {
            command,
            quantity,
            pairs,
            backend,
            tol,
            output_format,
            output_path,
            grid_cache_path,
            steps_per_unit,
            jobs,
            require_exact,
            dickman_v_max: DEFAULT_DICKMAN_V_MAX,
            buchstab_v_max: DEFAULT_BUCHSTAB_V_MAX,
        })
    }

    fn from_cache(a: CacheArgs) -> Result<Self, CliError> {
        let file = match &a.config {
            Some(p) => read_config_file(p)?,
            None => BTreeMap::new(),
        };
        check_keys(&file, CACHE_KEYS)?;
        let l = Layered { file: &file };
        let dir = l
            .get(a.dir, "dir", |s| Ok(PathBuf::from(s)))?
            .or_else(env_cache_dir)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR));
        let dickman_v_max = l
            .get(a.dickman_v_max, "dickman-v-max", parse_num::<usize>)?
            .unwrap_or(DEFAULT_DICKMAN_V_MAX);
        let buchstab_v_max = l
            .get(a.buchstab_v_max, "buchstab-v-max", parse_num::<usize>)?
            .unwrap_or(DEFAULT_BUCHSTAB_V_MAX);
        for (name, v) in [("dickman", dickman_v_max), ("buchstab", buchstab_v_max)] {
            if !(3..=V_MAX_CAP).contains(&v) {
                return Err(CliError::Usage(format!(
                    "{name} v_max must lie in [3, {V_MAX_CAP}], got {v}"
                )));
            }
        }
        let steps_per_unit = check_steps(
            l.get(a.steps, "steps", parse_num::<usize>)?
                .unwrap_or(DEFAULT_STEPS_PER_UNIT),
        )?;
        Ok(Self {
            command: Command::CacheGrids,
            quantity: QuantityArg::Nu,
            pairs: PairSpec::Grid {
                n: vec![],
                r: vec![],
            },
            backend: Backend::Float64,
            tol: cycle_density::dtv::DEFAULT_TOL,
            output_format: OutputFormat::Table,
            output_path: None,
            grid_cache_path: Some(dir),
            steps_per_unit,
            jobs: None,
            require_exact: false,
            dickman_v_max,
            buchstab_v_max,
        })
    }
}
