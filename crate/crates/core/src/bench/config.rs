use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{build_scenario, ChannelMode, ScenarioSpec, DEFAULT_PER_CLASS};
use crate::engine::{default_learning_rate, ConsolidationMode, ProtocolConfig};
use crate::error::{Error, Result};
use crate::metrics::TaskAccuracyMode;
use crate::nn::{Architecture, Hyper, Precision};
use crate::regularizers::{CombineMode, Method};

/// Environment variable consulted for the dataset root when none is given.
pub const DATA_DIR_ENV: &str = "HAR_DATA_DIR";

/// Every knob of a benchmark run. Built from defaults, then a key = value
/// file, then command-line overrides, in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data_dir: Option<PathBuf>,
    pub scenario: u8,
    pub case: Option<u8>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// `None` picks the per-method default.
    pub learning_rate: Option<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub dropout: f64,
    pub alpha: f64,
    pub temperature: f64,
    pub lambda: f64,
    pub per_class: usize,
    pub pretrain_per_class: usize,
    pub pretrain_epochs: usize,
    pub pretrain_lr: f64,
    pub fisher_samples: Option<usize>,
    pub channels: ChannelMode,
    pub precision: Precision,
    pub combine_mode: CombineMode,
    pub accuracy_mode: TaskAccuracyMode,
    pub consolidation: ConsolidationMode,
    /// Where results go; not part of the serialized configuration.
    #[serde(skip)]
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = Hyper::default();
        Self {
            data_dir: None,
            scenario: 2,
            case: None,
            methods: vec![Method::Ewc, Method::Lwf, Method::EwcLwf],
            seeds: (1..=5).collect(),
            learning_rate: None,
            epochs: h.epochs_per_round,
            batch_size: h.batch_size,
            dropout: h.dropout_rate,
            alpha: h.alpha,
            temperature: h.temperature,
            lambda: h.lambda,
            per_class: DEFAULT_PER_CLASS,
            pretrain_per_class: 10,
            pretrain_epochs: 20,
            pretrain_lr: 0.01,
            fisher_samples: None,
            channels: ChannelMode::Nine,
            precision: Precision::F64,
            combine_mode: CombineMode::Single,
            accuracy_mode: TaskAccuracyMode::RoundMean,
            consolidation: ConsolidationMode::TaskBoundary,
            out: PathBuf::from("results"),
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> Error {
    Error::Usage(format!("invalid value '{value}' for key '{key}': {why}"))
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

/// `1,2,5` or `1-5` or a mix (`1-3,7`).
fn parse_seeds(key: &str, value: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (parse(key, a.trim())?, parse(key, b.trim())?);
                if a > b {
                    return Err(bad(key, value, "descending range"));
                }
                out.extend(a..=b);
            }
            None => out.push(parse(key, part)?),
        }
    }
    Ok(out)
}

fn optional<T: FromStr>(key: &str, value: &str, none: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if value == none {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

impl RunConfig {
    /// Apply one `key = value` setting. Dashes and underscores are interchangeable.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let value = value.trim();
        let k = key.as_str();
        match k {
            "data_dir" => self.data_dir = (!value.is_empty()).then(|| PathBuf::from(value)),
            "scenario" => self.scenario = parse(k, value)?,
            "case" => self.case = optional(k, value, "none")?,
            "method" | "methods" => self.methods = parse_list(k, value)?,
            "seed" | "seeds" => self.seeds = parse_seeds(k, value)?,
            "lr" | "learning_rate" => self.learning_rate = optional(k, value, "auto")?,
            "epochs" => self.epochs = parse(k, value)?,
            "batch_size" => self.batch_size = parse(k, value)?,
            "dropout" => self.dropout = parse(k, value)?,
            "alpha" => self.alpha = parse(k, value)?,
            "temperature" => self.temperature = parse(k, value)?,
            "lambda" => self.lambda = parse(k, value)?,
            "per_class" => self.per_class = parse(k, value)?,
            "pretrain_per_class" => self.pretrain_per_class = parse(k, value)?,
            "pretrain_epochs" => self.pretrain_epochs = parse(k, value)?,
            "pretrain_lr" => self.pretrain_lr = parse(k, value)?,
            "fisher_samples" => self.fisher_samples = optional(k, value, "all")?,
            "channels" => self.channels = parse(k, value)?,
            "precision" => self.precision = parse(k, value)?,
            "combine_mode" => self.combine_mode = parse(k, value)?,
            "accuracy_mode" => self.accuracy_mode = parse(k, value)?,
            "consolidation" => self.consolidation = parse(k, value)?,
            "out" => self.out = PathBuf::from(value),
            _ => return Err(Error::Usage(format!("unknown configuration key '{key}'"))),
        }
        Ok(())
    }

    /// Apply a flat `key = value` text; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Usage(format!(
                    "config line {}: expected key = value, got '{line}'",
                    i + 1
                )));
            };
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Usage(format!("cannot read config file {}: {e}", path.display()))
        })?;
        self.apply_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        c.resolve()
    }

    /// Fill environment defaults, normalize, and validate.
    pub fn resolve(mut self) -> Result<Self> {
        if self.data_dir.is_none() {
            self.data_dir = std::env::var_os(DATA_DIR_ENV).map(PathBuf::from);
        }
        if self.scenario == 2 {
            self.case = None;
        } else if self.case.is_none() {
            self.case = Some(1);
        }
        if self.methods.is_empty() {
            return Err(Error::Usage(
                "key 'methods': at least one method is required".into(),
            ));
        }
        if self.seeds.is_empty() {
            return Err(Error::Usage(
                "key 'seeds': at least one seed is required".into(),
            ));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(m) = self.methods.iter().find(|m| !seen.insert(**m)) {
            return Err(Error::Usage(format!("key 'methods': '{m}' listed twice")));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(s) = self.seeds.iter().find(|s| !seen.insert(**s)) {
            return Err(Error::Usage(format!("key 'seeds': seed {s} listed twice")));
        }
        if self.per_class == 0 {
            return Err(Error::Usage("key 'per_class': must be at least 1".into()));
        }
        self.scenario_spec().map_err(usage("scenario"))?;
        for &m in &self.methods {
            self.protocol(m, self.seeds[0])
                .validate()
                .map_err(usage("hyperparameters"))?;
        }
        Ok(self)
    }

    pub fn scenario_spec(&self) -> Result<ScenarioSpec> {
        Ok(build_scenario(self.scenario, self.case)?.with_per_class(self.per_class))
    }

    pub fn data_dir(&self) -> Result<&Path> {
        self.data_dir.as_deref().ok_or_else(|| {
            Error::Usage(format!(
                "no dataset directory: pass --data-dir or set {DATA_DIR_ENV}"
            ))
        })
    }

    pub fn learning_rate_for(&self, method: Method) -> f64 {
        self.learning_rate
            .unwrap_or_else(|| default_learning_rate(method))
    }

    /// Engine configuration for one (method, seed) run.
    pub fn protocol(&self, method: Method, seed: u64) -> ProtocolConfig {
        let mut p = ProtocolConfig::new(method);
        p.hyper = Hyper {
            learning_rate: self.learning_rate_for(method),
            batch_size: self.batch_size,
            dropout_rate: self.dropout,
            epochs_per_round: self.epochs,
            temperature: self.temperature,
            alpha: self.alpha,
            lambda: self.lambda,
            seed,
            precision: self.precision,
        };
        p.combine = self.combine_mode;
        p.task_accuracy = self.accuracy_mode;
        p.consolidation = self.consolidation;
        p.pretrain_per_class = self.pretrain_per_class;
        p.pretrain_epochs = self.pretrain_epochs;
        p.pretrain_learning_rate = self.pretrain_lr;
        p.fisher_samples = self.fisher_samples;
        p.architecture = Architecture::har().with_channels(self.channels.channels());
        p
    }

    /// Resolved settings as `key = value` text; parsing it back yields the
    /// same configuration. The output directory is not part of it.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# har-cl resolved configuration\n");
        let join = |v: Vec<String>| v.join(",");
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv(
            "data_dir",
            self.data_dir
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        kv("scenario", self.scenario.to_string());
        kv("case", self.case.map_or("none".into(), |c| c.to_string()));
        kv(
            "methods",
            join(self.methods.iter().map(|m| m.to_string()).collect()),
        );
        kv(
            "seeds",
            join(self.seeds.iter().map(|m| m.to_string()).collect()),
        );
        kv(
            "lr",
            self.learning_rate.map_or("auto".into(), |v| v.to_string()),
        );
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("dropout", self.dropout.to_string());
        kv("alpha", self.alpha.to_string());
        kv("temperature", self.temperature.to_string());
        kv("lambda", self.lambda.to_string());
        kv("per_class", self.per_class.to_string());
        kv("pretrain_per_class", self.pretrain_per_class.to_string());
        kv("pretrain_epochs", self.pretrain_epochs.to_string());
        kv("pretrain_lr", self.pretrain_lr.to_string());
        kv(
            "fisher_samples",
            self.fisher_samples.map_or("all".into(), |v| v.to_string()),
        );
        kv("channels", self.channels.channels().to_string());
        kv("precision", self.precision.to_string());
        kv("combine_mode", self.combine_mode.to_string());
        kv("accuracy_mode", self.accuracy_mode.to_string());
        kv("consolidation", self.consolidation.to_string());
        for m in &self.methods {
            let _ = writeln!(s, "# effective lr for {m}: {}", self.learning_rate_for(*m));
        }
        s
    }
}

fn usage(what: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Usage(_) => e,
        Error::Config(msg) | Error::Structural(msg) => Error::Usage(format!("{what}: {msg}")),
        other => other,
    }
}
