//! Line-oriented run configuration.
//!
//! ```text
//! [run]
//! command = simulate
//! seed = 7
//! [grid]
//! n_cells = 256
//! [damping]
//! kind = bump
//! a0 = 2.0
//! omega = 0.6 1.0
//! [energy]
//! p = 1.5 2 4
//! ```
//!
//! `#` starts a comment. Every key belongs to a section; unknown sections
//! and keys are rejected with their line number.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use lpwave::energy::OverbarReading;
use lpwave::ineq::SuiteConfig;
use lpwave::types::{build_cutoffs, DampingSpec, InitialData, Interval};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Decay,
    GlobalBound,
    OracleCompare,
    VerifyInequalities,
    Plot,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::Simulate,
        Command::Decay,
        Command::GlobalBound,
        Command::OracleCompare,
        Command::VerifyInequalities,
        Command::Plot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Decay => "decay",
            Command::GlobalBound => "global-bound",
            Command::OracleCompare => "oracle-compare",
            Command::VerifyInequalities => "verify-inequalities",
            Command::Plot => "plot",
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
                format!("unknown command '{s}' (expected one of {})", names.join(", "))
            })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parse or validation failure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}: {k}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "{k}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line: None,
        key: Some(key.to_string()),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub n_cells: usize,
    pub t_end: f64,
    pub record_stride: usize,
    pub damping: DampingSpec,
    /// Half-values of constant damping for `global-bound`.
    pub alphas: Vec<f64>,
    pub initial: String,
    pub p_list: Vec<f64>,
    pub overbar: OverbarReading,
    pub cutoffs: Option<[f64; 3]>,
    pub oracle_n: Vec<usize>,
    pub oracle_t_end: f64,
    pub oracle_tol: f64,
    pub decay_window: Option<Interval>,
    pub inequalities: SuiteConfig,
    pub plot_input: Option<PathBuf>,
    pub plot_output: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: Command::Simulate,
            seed: 0,
            n_cells: 256,
            t_end: 20.0,
            record_stride: 1,
            damping: DampingSpec::SmoothBump {
                a0: 2.0,
                omega: Interval::new(0.6, 1.0),
                ramp: 0.1,
            },
            alphas: Vec::new(),
            initial: "sine".into(),
            p_list: vec![2.0],
            overbar: OverbarReading::SignSafe,
            cutoffs: None,
            oracle_n: vec![64, 128, 256],
            oracle_t_end: 2.0,
            oracle_tol: 1e-13,
            decay_window: None,
            inequalities: SuiteConfig::default(),
            plot_input: None,
            plot_output: None,
            out_dir: PathBuf::from("out"),
        }
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("run", &["command", "seed"]),
    ("grid", &["n_cells"]),
    ("time", &["t_end", "record_stride"]),
    ("damping", &["kind", "a0", "omega", "alpha", "ramp", "value"]),
    ("initial", &["data"]),
    ("energy", &["p", "overbar"]),
    ("cutoffs", &["eps"]),
    ("oracle", &["n_list", "t_end", "tol"]),
    ("decay", &["window"]),
    ("inequalities", &["samples", "polynomial_samples", "p_general", "p_modified"]),
    ("plot", &["input", "output"]),
    ("output", &["dir"]),
];

/// Raw `section.key -> (line, value)` entries.
type Entries = BTreeMap<String, (usize, String)>;

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut entries = Entries::new();
    let mut section: Option<&str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |key: Option<&str>, message: String| ConfigError {
            line: Some(line_no),
            key: key.map(str::to_string),
            message,
        };
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| err(None, format!("malformed section header '{line}'")))?
                .trim();
            let known = KEYS
                .iter()
                .find(|(s, _)| *s == name)
                .ok_or_else(|| err(None, format!("unknown section [{name}]")))?;
            section = Some(known.0);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(None, format!("expected 'key = value', got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| err(Some(key), "key outside of any [section]".into()))?;
        let allowed = KEYS.iter().find(|(s, _)| *s == sec).map(|x| x.1).unwrap_or(&[]);
        if !allowed.contains(&key) {
            return Err(err(Some(key), format!("unknown key '{key}' in [{sec}]")));
        }
        if value.is_empty() {
            return Err(err(Some(key), "missing value".into()));
        }
        let full = format!("{sec}.{key}");
        if entries.contains_key(&full) {
            return Err(err(Some(key), format!("duplicate key '{full}'")));
        }
        entries.insert(full, (line_no, value.to_string()));
    }
    Ok(entries)
}

struct Reader {
    entries: Entries,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.entries.get(key)
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v.parse::<T>().map(Some).map_err(|e| ConfigError {
                line: Some(*line),
                key: Some(key.to_string()),
                message: format!("cannot parse '{v}': {e}"),
            }),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse::<T>().map_err(|e| ConfigError {
                        line: Some(*line),
                        key: Some(key.to_string()),
                        message: format!("cannot parse '{s}': {e}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Some),
        }
    }

    fn pair(&self, key: &str) -> Result<Option<(f64, f64)>, ConfigError> {
        match self.list::<f64>(key)? {
            None => Ok(None),
            Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some(v) => Err(ConfigError {
                line: self.raw(key).map(|x| x.0),
                key: Some(key.to_string()),
                message: format!("expected two numbers, got {}", v.len()),
            }),
        }
    }
}

/// Parse and validate a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let r = Reader {
        entries: tokenize(text)?,
    };
    let mut cfg = RunConfig::default();
    if let Some(c) = r.parse::<Command>("run.command")? {
        cfg.command = c;
    }
    if let Some(s) = r.parse("run.seed")? {
        cfg.seed = s;
    }
    if let Some(n) = r.parse("grid.n_cells")? {
        cfg.n_cells = n;
    }
    if let Some(t) = r.parse("time.t_end")? {
        cfg.t_end = t;
    }
    if let Some(s) = r.parse("time.record_stride")? {
        cfg.record_stride = s;
    }
    if let Some(d) = r.parse::<String>("initial.data")? {
        cfg.initial = d;
    }
    if let Some(p) = r.list("energy.p")? {
        cfg.p_list = p;
    }
    if let Some(o) = r.parse::<String>("energy.overbar")? {
        cfg.overbar = match o.as_str() {
            "sign-safe" => OverbarReading::SignSafe,
            "literal" => OverbarReading::Literal,
            other => return Err(invalid("energy.overbar", format!("expected sign-safe or literal, got '{other}'"))),
        };
    }
    if let Some(e) = r.list::<f64>("cutoffs.eps")? {
        if e.len() != 3 {
            return Err(invalid("cutoffs.eps", format!("expected three numbers, got {}", e.len())));
        }
        cfg.cutoffs = Some([e[0], e[1], e[2]]);
    }
    if let Some(n) = r.list("oracle.n_list")? {
        cfg.oracle_n = n;
    }
    if let Some(t) = r.parse("oracle.t_end")? {
        cfg.oracle_t_end = t;
    }
    if let Some(t) = r.parse("oracle.tol")? {
        cfg.oracle_tol = t;
    }
    if let Some((lo, hi)) = r.pair("decay.window")? {
        cfg.decay_window = Some(Interval::new(lo, hi));
    }
    if let Some(s) = r.parse("inequalities.samples")? {
        cfg.inequalities.samples = s;
    }
    if let Some(s) = r.parse("inequalities.polynomial_samples")? {
        cfg.inequalities.polynomial_samples = s;
    }
    if let Some(p) = r.list("inequalities.p_general")? {
        cfg.inequalities.p_general = p;
    }
    if let Some(p) = r.list("inequalities.p_modified")? {
        cfg.inequalities.p_modified = p;
    }
    cfg.plot_input = r.parse::<String>("plot.input")?.map(PathBuf::from);
    cfg.plot_output = r.parse::<String>("plot.output")?.map(PathBuf::from);
    if let Some(d) = r.parse::<String>("output.dir")? {
        cfg.out_dir = PathBuf::from(d);
    }
    cfg.alphas = r.list("damping.alpha")?.unwrap_or_default();
    cfg.damping = parse_damping(&r, &cfg.alphas)?;
    if cfg.alphas.is_empty() {
        if let DampingSpec::Constant { value } = cfg.damping {
            cfg.alphas = vec![0.5 * value];
        }
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn parse_damping(r: &Reader, alphas: &[f64]) -> Result<DampingSpec, ConfigError> {
    let kind = r.parse::<String>("damping.kind")?;
    let a0 = r.parse::<f64>("damping.a0")?;
    let omega = r.pair("damping.omega")?.map(|(lo, hi)| Interval::new(lo, hi));
    let ramp = r.parse::<f64>("damping.ramp")?;
    let value = r.parse::<f64>("damping.value")?;
    let default_omega = Interval::new(0.6, 1.0);
    Ok(match kind.as_deref() {
        None | Some("bump") => DampingSpec::SmoothBump {
            a0: a0.unwrap_or(2.0),
            omega: omega.unwrap_or(default_omega),
            ramp: ramp.unwrap_or(0.1),
        },
        Some("indicator") => DampingSpec::IndicatorSmoothed {
            a0: a0.unwrap_or(2.0),
            omega: omega.unwrap_or(default_omega),
        },
        Some("zero") => DampingSpec::Zero,
        Some("constant") => {
            let v = match (value.or(a0), alphas) {
                (Some(v), _) => v,
                (None, [alpha]) => 2.0 * alpha,
                (None, []) => return Err(invalid("damping.value", "constant damping needs value, a0 or a single alpha")),
                (None, _) => return Err(invalid("damping.alpha", "several alphas given; set damping.value for the simulated profile")),
            };
            DampingSpec::Constant { value: v }
        }
        Some(other) => {
            return Err(invalid(
                "damping.kind",
                format!("expected zero, constant, bump or indicator, got '{other}'"),
            ))
        }
    })
}

fn validate(cfg: &RunConfig) -> Result<(), ConfigError> {
    if cfg.n_cells < 2 {
        return Err(invalid("grid.n_cells", format!("must be at least 2, got {}", cfg.n_cells)));
    }
    if !(cfg.t_end > 0.0) || !cfg.t_end.is_finite() {
        return Err(invalid("time.t_end", format!("must be positive, got {}", cfg.t_end)));
    }
    if cfg.record_stride == 0 {
        return Err(invalid("time.record_stride", "must be positive"));
    }
    if cfg.p_list.is_empty() || cfg.p_list.iter().any(|&p| !(p >= 1.0) || !p.is_finite()) {
        return Err(invalid("energy.p", "every exponent must be a finite number >= 1"));
    }
    InitialData::from_tag(&cfg.initial).map_err(|e| invalid("initial.data", e.to_string()))?;
    if let Some([e0, e1, e2]) = cfg.cutoffs {
        let omega = match cfg.damping {
            DampingSpec::SmoothBump { omega, .. } | DampingSpec::IndicatorSmoothed { omega, .. } => omega,
            _ => Interval::new(0.0, 1.0),
        };
        build_cutoffs(e0, e1, e2, omega).map_err(|e| invalid("cutoffs.eps", e.to_string()))?;
    }
    if cfg.oracle_n.iter().any(|&n| n < 2) {
        return Err(invalid("oracle.n_list", "every resolution must be at least 2"));
    }
    if !(cfg.oracle_tol > 0.0) {
        return Err(invalid("oracle.tol", "must be positive"));
    }
    if !(cfg.oracle_t_end > 0.0) {
        return Err(invalid("oracle.t_end", "must be positive"));
    }
    if let Some(w) = cfg.decay_window {
        if !(w.lo < w.hi) {
            return Err(invalid("decay.window", format!("empty window {w}")));
        }
    }
    if cfg.inequalities.samples == 0 || cfg.inequalities.polynomial_samples == 0 {
        return Err(invalid("inequalities.samples", "sample counts must be positive"));
    }
    if cfg.inequalities.p_general.iter().any(|&p| !(p > 1.0)) {
        return Err(invalid("inequalities.p_general", "exponents must exceed 1"));
    }
    if cfg.inequalities.p_modified.iter().any(|&p| !(p > 1.0 && p < 2.0)) {
        return Err(invalid("inequalities.p_modified", "exponents must lie in (1, 2)"));
    }
    Ok(())
}

/// `key = value` echo of the settings that determine the outputs.
pub fn describe(cfg: &RunConfig) -> String {
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    s.push_str(&format!("command = {}\n", cfg.command));
    s.push_str(&format!("seed = {}\n", cfg.seed));
    s.push_str(&format!("n_cells = {}\n", cfg.n_cells));
    s.push_str(&format!("t_end = {}\n", cfg.t_end));
    s.push_str(&format!("record_stride = {}\n", cfg.record_stride));
    s.push_str(&format!("damping = {:?}\n", cfg.damping));
    s.push_str(&format!("initial = {}\n", cfg.initial));
    s.push_str(&format!("p = {}\n", list(&cfg.p_list)));
    s
}
