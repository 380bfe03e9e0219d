//! Experiment configuration: TOML documents, command-line overlays and
//! validation into a fully resolved [`ExperimentConfig`].

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use orthospline::{Family, KnotSequence, PartitionSpec, TestFunction};
use serde::{Deserialize, Serialize, Serializer};

pub const MAX_ORDER: usize = 10;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_PARTITION: &str = "dyadic:16";
pub const DEFAULT_FUNCTION: &str = "sin";
/// Largest interval count of any generated partition, finest ladder level included.
pub const MAX_INTERVALS: usize = 1 << 22;
pub const MAX_LEVELS: usize = 20;
pub const MAX_MAXIMAL_GRID: usize = 1 << 15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid `{field}`: {constraint}")]
    Validation { field: String, constraint: String },
}

fn invalid(field: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        field: field.to_string(),
        constraint: constraint.into(),
    }
}

/// A generated partition or a knot file.
#[derive(Debug, Clone, PartialEq)]
pub enum PartitionSource {
    Spec(PartitionSpec),
    File(PathBuf),
}

impl fmt::Display for PartitionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionSource::Spec(s) => write!(f, "{s}"),
            PartitionSource::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl Serialize for PartitionSource {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl PartitionSource {
    /// `file:PATH`, a partition spec, or a path to an existing knot file.
    pub fn parse(text: &str, seed: u64) -> Result<Self, ConfigError> {
        if let Some(path) = text.strip_prefix("file:") {
            return Ok(PartitionSource::File(PathBuf::from(path)));
        }
        match PartitionSpec::from_str(text) {
            Ok(mut spec) => {
                // a random spec without its own seed takes the experiment seed
                let body = text.split('@').next().unwrap_or(text);
                if matches!(spec.family, Family::Random { .. }) && body.split(':').count() == 2 {
                    spec.family = Family::Random { seed };
                }
                Ok(PartitionSource::Spec(spec))
            }
            Err(e) if Path::new(text).is_file() => {
                let _ = e;
                Ok(PartitionSource::File(PathBuf::from(text)))
            }
            Err(e) => Err(invalid("partition", e.to_string())),
        }
    }
}

/// Every key of the config document, all optional. Command-line flags are
/// parsed into the same shape and laid over the file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct RawConfig {
    pub k: Option<usize>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub partition: Option<String>,
    pub family: Option<String>,
    pub ratio: Option<f64>,
    pub n: Option<usize>,
    pub multiplicity: Option<usize>,
    pub function: Option<String>,
    pub levels: Option<usize>,
    pub seed: Option<u64>,
    pub eval_grid: Option<usize>,
    pub maximal_grid: Option<usize>,
    pub kernel_grid: Option<usize>,
    pub samples_per_cell: Option<usize>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    pub probes: Option<Vec<f64>>,
    pub points: Option<Vec<f64>>,
    pub thresholds: Option<Vec<f64>>,
    pub out: Option<PathBuf>,
}

impl RawConfig {
    /// `over` wins field by field. Setting a partition in `over` discards a
    /// family in `self` and vice versa.
    pub fn overlay(self, over: RawConfig) -> RawConfig {
        let family_over = over.family.is_some() || over.n.is_some() || over.ratio.is_some();
        let (partition, family, ratio, n) = if over.partition.is_some() {
            (over.partition, None, None, None)
        } else if family_over {
            (None, over.family.or(self.family), over.ratio.or(self.ratio), over.n.or(self.n))
        } else {
            (self.partition, self.family, self.ratio, self.n)
        };
        RawConfig {
            k: over.k.or(self.k),
            a: over.a.or(self.a),
            b: over.b.or(self.b),
            partition,
            family,
            ratio,
            n,
            multiplicity: over.multiplicity.or(self.multiplicity),
            function: over.function.or(self.function),
            levels: over.levels.or(self.levels),
            seed: over.seed.or(self.seed),
            eval_grid: over.eval_grid.or(self.eval_grid),
            maximal_grid: over.maximal_grid.or(self.maximal_grid),
            kernel_grid: over.kernel_grid.or(self.kernel_grid),
            samples_per_cell: over.samples_per_cell.or(self.samples_per_cell),
            trials: over.trials.or(self.trials),
            tol: over.tol.or(self.tol),
            probes: over.probes.or(self.probes),
            points: over.points.or(self.points),
            thresholds: over.thresholds.or(self.thresholds),
            out: over.out.or(self.out),
        }
    }
}

/// A validated configuration with every default filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub k: usize,
    pub a: f64,
    pub b: f64,
    pub partition: PartitionSource,
    pub function: String,
    /// Ladder length for the refinement commands: the partition is level 0.
    pub levels: usize,
    pub seed: u64,
    pub eval_grid: usize,
    pub maximal_grid: usize,
    pub kernel_grid: usize,
    pub samples_per_cell: usize,
    pub trials: usize,
    pub tol: f64,
    pub probes: Vec<f64>,
    pub points: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub out: PathBuf,
}

/// Parse and validate a TOML config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    resolve(parse_raw(text)?)
}

pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigError> {
    toml::from_str(text).map_err(|e| {
        let offset = e.span().map(|s| s.start).unwrap_or(0);
        let (line, column) = position(text, offset);
        ConfigError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

/// 1-based line and column of a byte offset.
fn position(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

impl ExperimentConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    /// The knot sequence of a single-partition command.
    pub fn knots(&self) -> Result<KnotSequence, ConfigError> {
        match &self.partition {
            PartitionSource::Spec(s) => s
                .generate(self.k, self.a, self.b)
                .map_err(|e| invalid("partition", e.to_string())),
            PartitionSource::File(p) => load_knots(p),
        }
    }

    /// `levels` partitions, the interval count doubling from one to the next.
    pub fn ladder(&self) -> Result<Vec<KnotSequence>, ConfigError> {
        match &self.partition {
            PartitionSource::Spec(s) => orthospline::Ladder::new(s.clone(), self.levels)
                .generate(self.k, self.a, self.b)
                .map_err(|e| invalid("partition", e.to_string())),
            PartitionSource::File(_) => Err(invalid(
                "partition",
                "refinement commands need a generated partition, not a knot file",
            )),
        }
    }
}

fn load_knots(path: &Path) -> Result<KnotSequence, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid("partition", format!("cannot read {}: {e}", path.display())))?;
    KnotSequence::from_text(&text).map_err(|e| invalid("partition", format!("{}: {e}", path.display())))
}

fn in_range<T: PartialOrd + fmt::Display + Copy>(field: &str, v: T, lo: T, hi: T) -> Result<T, ConfigError> {
    if v < lo || v > hi {
        return Err(invalid(field, format!("must be in [{lo}, {hi}], got {v}")));
    }
    Ok(v)
}

fn partition_from_family(raw: &RawConfig, seed: u64) -> Result<PartitionSource, ConfigError> {
    let family = raw.family.as_deref().unwrap_or("uniform");
    let n = raw.n.unwrap_or(16);
    if raw.ratio.is_some() && family != "geometric" {
        return Err(invalid("ratio", "only the geometric family takes a ratio"));
    }
    let spec = match family {
        "uniform" => PartitionSpec::uniform(n),
        "dyadic" => PartitionSpec::new(Family::Dyadic, n),
        "geometric" => {
            let q = raw
                .ratio
                .ok_or_else(|| invalid("ratio", "required for the geometric family"))?;
            PartitionSpec::geometric(q, n)
        }
        "random" => PartitionSpec::random(seed, n),
        other => {
            return Err(invalid(
                "family",
                format!("unknown family '{other}' (uniform, dyadic, geometric, random)"),
            ))
        }
    };
    Ok(PartitionSource::Spec(spec))
}

/// Validates and fills defaults. Resolving the serialized form of a resolved
/// config gives the same config back.
pub fn resolve(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let k = in_range("k", raw.k.ok_or_else(|| invalid("k", "required"))?, 1, MAX_ORDER)?;
    let seed = raw.seed.unwrap_or(DEFAULT_SEED);
    if seed > i64::MAX as u64 {
        return Err(invalid("seed", format!("must be at most {}", i64::MAX)));
    }
    let family_given = raw.family.is_some() || raw.n.is_some() || raw.ratio.is_some();
    let mut partition = match (&raw.partition, family_given) {
        (Some(_), true) => return Err(invalid("partition", "give either a partition or a family, not both")),
        (Some(text), false) => PartitionSource::parse(text, seed)?,
        (None, true) => partition_from_family(&raw, seed)?,
        (None, false) => PartitionSource::parse(DEFAULT_PARTITION, seed)?,
    };
    let (mut a, mut b) = (raw.a.unwrap_or(0.0), raw.b.unwrap_or(1.0));
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(invalid("a", format!("need finite a < b, got [{a}, {b}]")));
    }
    let levels = in_range("levels", raw.levels.unwrap_or(5), 1, MAX_LEVELS)?;
    match &mut partition {
        PartitionSource::Spec(spec) => {
            if let Some(m) = raw.multiplicity {
                spec.interior_multiplicity = m;
            }
            in_range("multiplicity", spec.interior_multiplicity, 1, k)?;
            let finest = spec
                .n_intervals
                .checked_shl(levels as u32 - 1)
                .filter(|&v| v <= MAX_INTERVALS && v >> (levels - 1) == spec.n_intervals);
            if finest.is_none() {
                return Err(invalid(
                    "partition",
                    format!("{} intervals refined over {levels} levels exceeds {MAX_INTERVALS}", spec.n_intervals),
                ));
            }
            spec.generate(k, a, b).map_err(|e| invalid("partition", e.to_string()))?;
        }
        PartitionSource::File(path) => {
            if raw.multiplicity.is_some() {
                return Err(invalid("multiplicity", "a knot file fixes its own multiplicities"));
            }
            let knots = load_knots(path)?;
            if knots.order() != k {
                return Err(invalid(
                    "partition",
                    format!("knot file has order {}, config has k = {k}", knots.order()),
                ));
            }
            (a, b) = (knots.a(), knots.b());
        }
    }
    let function = raw.function.unwrap_or_else(|| DEFAULT_FUNCTION.to_string());
    let f = TestFunction::from_name(&function).map_err(|e| invalid("function", e.to_string()))?;
    let eval_grid = in_range("eval-grid", raw.eval_grid.unwrap_or(1024), 1, MAX_INTERVALS)?;
    let maximal_grid = in_range("maximal-grid", raw.maximal_grid.unwrap_or(4096), 16, MAX_MAXIMAL_GRID)?;
    let kernel_grid = in_range("kernel-grid", raw.kernel_grid.unwrap_or(64), 1, 1024)?;
    let samples_per_cell = in_range("samples-per-cell", raw.samples_per_cell.unwrap_or(4), 2, 64)?;
    let trials = in_range("trials", raw.trials.unwrap_or(20), 1, 100_000)?;
    let tol = raw.tol.unwrap_or(orthospline::projection::MOMENT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(invalid("tol", format!("must be in (0, 1), got {tol}")));
    }
    let inside = |field: &str, xs: &[f64]| -> Result<(), ConfigError> {
        match xs.iter().find(|x| !(a..=b).contains(*x)) {
            Some(x) => Err(invalid(field, format!("{x} lies outside [{a}, {b}]"))),
            None => Ok(()),
        }
    };
    let probes = match raw.probes {
        Some(p) => {
            inside("probes", &p)?;
            if let Some(x) = p.iter().find(|&&x| !f.is_lebesgue_point(x)) {
                return Err(invalid("probes", format!("{x} is not a Lebesgue point of {function}")));
            }
            p
        }
        None => [0.25, 0.5, 0.75]
            .iter()
            .map(|q| a + q * (b - a))
            .filter(|&x| f.is_lebesgue_point(x))
            .collect(),
    };
    let points = raw.points.unwrap_or_default();
    inside("points", &points)?;
    let thresholds = raw.thresholds.unwrap_or_default();
    if let Some(t) = thresholds.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(invalid("thresholds", format!("must be positive and finite, got {t}")));
    }
    Ok(ExperimentConfig {
        k,
        a,
        b,
        partition,
        function,
        levels,
        seed,
        eval_grid,
        maximal_grid,
        kernel_grid,
        samples_per_cell,
        trials,
        tol,
        probes,
        points,
        thresholds,
        out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
    })
}
