//! The run configuration: one JSON document, overridable field by field
//! from the command line, resolved against per-system defaults.

use std::path::{Path, PathBuf};

use hypermeasure::equilibrium::TestDictionary;
use hypermeasure::pressure::{Domain, Variant};
use hypermeasure::systems::{Family, Point, Potential, PotentialKind, SymbolWord, System};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};
use crate::SCHEMA_VERSION;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
}

impl Default for SystemSpec {
    fn default() -> Self {
        SystemSpec { family: Family::FullShift { p: 2 }, tau: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    #[default]
    Zero,
    Geometric { t: f64 },
    Bernoulli { weights: Vec<f64> },
    LocallyConstant { depth: usize, values: Vec<f64> },
    Tabulated { start: i64, depth: usize, values: Vec<f64> },
    Trig { amplitude: f64, k: i32, l: i32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    Torus { x: f64, y: f64 },
    /// Attractor point reached along the given backward branch bits.
    Solenoid { theta: f64, history: u64 },
    /// Past nearest first.
    Horseshoe { future: Vec<u8>, past: Vec<u8> },
    /// Past in index order, ending at index −1.
    Word { past: Vec<u8>, future: Vec<u8> },
}

impl PointSpec {
    pub fn point(&self, sys: &System) -> Result<Point> {
        Ok(match self {
            PointSpec::Torus { x, y } => Point::torus(*x, *y),
            PointSpec::Solenoid { theta, history } => sys.attractor_point(*theta, *history)?,
            PointSpec::Horseshoe { future, past } => sys.horseshoe_coded(future, past)?,
            PointSpec::Word { past, future } => {
                let p = sys.alphabet().ok_or_else(|| CliError::Config("word point on a geometric system".into()))?;
                Point::Word(SymbolWord::from_parts(p, past, future)?)
            }
        })
    }

    fn defaults(family: &Family) -> Vec<PointSpec> {
        match family {
            Family::CatMap => vec![PointSpec::Torus { x: 0.2, y: 0.3 }, PointSpec::Torus { x: 0.71, y: 0.45 }],
            Family::Solenoid => vec![PointSpec::Solenoid { theta: 0.4, history: 5 }, PointSpec::Solenoid { theta: 2.9, history: 9 }],
            Family::Horseshoe { .. } => vec![
                PointSpec::Horseshoe { future: vec![0, 1, 1, 0, 1, 0, 0, 1], past: vec![1, 0, 1, 1, 0, 0, 1, 0] },
                PointSpec::Horseshoe { future: vec![1, 0, 0, 1, 1, 1, 0, 1], past: vec![0, 1, 1, 0, 1, 0, 1, 1] },
            ],
            Family::FullShift { .. } => vec![
                PointSpec::Word { past: vec![1, 0], future: vec![0, 1, 1, 0] },
                PointSpec::Word { past: vec![0, 1], future: vec![0, 0, 1, 1] },
            ],
            // words through the least admissible continuation of symbol 0
            Family::Sft { .. } => vec![PointSpec::Word { past: vec![0], future: vec![0] }, PointSpec::Word { past: vec![0, 0], future: vec![0] }],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    #[default]
    Whole,
    /// `B^u(base, radius)`.
    Leaf { radius: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DictionarySpec {
    #[default]
    Default,
    Fourier { kmax: i32 },
    Solenoid { kmax: i32 },
    Cylinders { depth: usize },
    CylindersOfLength { len: usize },
    Strips { depth: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MethodSpec {
    #[default]
    ClosedForm,
    Numerical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    #[default]
    Sft,
    Geometric,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub system: SystemSpec,
    pub potential: PotentialSpec,
    #[serde(skip_serializing_if = "is_zero")]
    pub potential_shift: f64,
    /// Bowen-ball radius; 0.7 on shifts and 0.05 elsewhere when absent.
    pub r: Option<f64>,
    /// Radius sensitivity schedule; `[r]` when empty.
    pub rs: Vec<f64>,
    pub ns: Vec<usize>,
    /// `per` on the whole space for the cat map and the horseshoe, `sep`
    /// otherwise.
    pub variant: Option<Variant>,
    /// A leaf of half-length τ for the solenoid, the whole space otherwise.
    pub domain: Option<DomainSpec>,
    pub base: Option<PointSpec>,
    /// Half-length of leaf charts; the system's τ when absent.
    pub chart_tau: Option<f64>,
    /// Reference-measure order; 16 on shifts and 8 elsewhere when absent.
    pub order: Option<usize>,
    pub p_hat: Option<f64>,
    pub leaves: Vec<PointSpec>,
    /// Averaging length; 10 on shifts and 20 elsewhere when absent.
    pub n: Option<usize>,
    pub schedule: Vec<usize>,
    pub budget: usize,
    pub dictionary: DictionarySpec,
    pub seed: Option<u64>,
    pub samples: usize,
    pub input_measure: Option<PathBuf>,
    pub tolerance: f64,
    pub method: MethodSpec,
    pub t_grid: [f64; 2],
    pub t_points: usize,
    pub level: usize,
    pub suite: Suite,
    pub output_dir: Option<PathBuf>,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            system: SystemSpec::default(),
            potential: PotentialSpec::Zero,
            potential_shift: 0.0,
            r: None,
            rs: Vec::new(),
            ns: (1..=12).collect(),
            variant: None,
            domain: None,
            base: None,
            chart_tau: None,
            order: None,
            p_hat: None,
            leaves: Vec::new(),
            n: None,
            schedule: Vec::new(),
            budget: hypermeasure::equilibrium::DEFAULT_BUDGET,
            dictionary: DictionarySpec::Default,
            seed: None,
            samples: 1000,
            input_measure: None,
            tolerance: 1e-10,
            method: MethodSpec::ClosedForm,
            t_grid: [0.0, 2.0],
            t_points: 21,
            level: 8,
            suite: Suite::Sft,
            output_dir: None,
        }
    }
}

/// Reads the document at `path` (or `{}`), replaces top-level fields by
/// `overrides` and deserializes.
pub fn load(path: Option<&Path>, overrides: &[(String, Value)]) -> Result<RunConfig> {
    let mut doc: Value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    let obj = doc.as_object_mut().ok_or_else(|| CliError::Config("config must be a JSON object".into()))?;
    for (k, v) in overrides {
        obj.insert(k.clone(), v.clone());
    }
    let cfg: RunConfig = serde_json::from_value(doc).map_err(|e| CliError::Config(e.to_string()))?;
    if cfg.schema_version != SCHEMA_VERSION {
        return Err(CliError::Config(format!("schema_version {} is not {SCHEMA_VERSION}", cfg.schema_version)));
    }
    Ok(cfg)
}

fn field(name: &str, reason: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("`{name}`: {reason}"))
}

/// The config with every default filled in, plus the objects it names.
pub struct Resolved {
    pub config: RunConfig,
    pub sys: System,
    pub phi: Potential,
    pub r: f64,
    pub order: usize,
    pub n: usize,
}

impl Resolved {
    pub fn new(mut config: RunConfig) -> Result<Self> {
        let mut sys = System::new(config.system.family.clone())?;
        if let Some(tau) = config.system.tau {
            sys = sys.with_tau(tau)?;
        }
        config.system.tau = Some(sys.tau);
        let phi = match &config.potential {
            PotentialSpec::Zero => Potential::zero(),
            PotentialSpec::Geometric { t } => Potential::geometric(*t),
            PotentialSpec::Bernoulli { weights } => {
                if weights.iter().any(|w| !(*w > 0.0)) {
                    return Err(field("potential.weights", "must be positive"));
                }
                Potential::bernoulli(weights)
            }
            PotentialSpec::LocallyConstant { depth, values } => Potential::locally_constant(*depth, values.clone()),
            PotentialSpec::Tabulated { start, depth, values } => Potential::tabulated(*start, *depth, values.clone()),
            PotentialSpec::Trig { amplitude, k, l } => Potential::trig(*amplitude, *k, *l),
        }
        .shifted(config.potential_shift);
        phi.validate(&sys)?;
        let r = config.r.unwrap_or(if sys.is_shift() { 0.7 } else { 0.05 });
        if !(r > 0.0 && r.is_finite()) {
            return Err(field("r", "must be positive"));
        }
        config.r = Some(r);
        if config.rs.is_empty() {
            config.rs = vec![r];
        }
        if config.ns.is_empty() || config.ns.contains(&0) {
            return Err(field("ns", "orders must be positive"));
        }
        let shift = sys.is_shift();
        let chart_tau = config.chart_tau.unwrap_or(sys.tau);
        if !(chart_tau > 0.0) {
            return Err(field("chart_tau", "must be positive"));
        }
        config.chart_tau = Some(chart_tau);
        let domain = config.domain.clone().unwrap_or(match sys.family {
            Family::Solenoid => DomainSpec::Leaf { radius: sys.tau },
            _ => DomainSpec::Whole,
        });
        config.variant.get_or_insert(if !shift && domain == DomainSpec::Whole { Variant::Per } else { Variant::Sep });
        config.domain = Some(domain);
        let defaults = PointSpec::defaults(&sys.family);
        if config.base.is_none() {
            config.base = Some(defaults[0].clone());
        }
        if config.leaves.is_empty() {
            config.leaves = defaults;
        }
        let order = config.order.unwrap_or(if shift { 16 } else { 8 });
        if order == 0 {
            return Err(field("order", "must be >= 1"));
        }
        config.order = Some(order);
        let n = config.n.unwrap_or(if shift { 10 } else { 20 });
        if n == 0 {
            return Err(field("n", "must be >= 1"));
        }
        config.n = Some(n);
        if config.schedule.is_empty() {
            config.schedule = hypermeasure::equilibrium::default_schedule(n);
        }
        if config.schedule.windows(2).any(|w| w[0] >= w[1]) || config.schedule[0] == 0 {
            return Err(field("schedule", "must be positive and increasing"));
        }
        if config.budget == 0 {
            return Err(field("budget", "must be positive"));
        }
        if config.samples == 0 {
            return Err(field("samples", "must be positive"));
        }
        if !(config.tolerance > 0.0) {
            return Err(field("tolerance", "must be positive"));
        }
        if !(config.t_grid[0] < config.t_grid[1]) || config.t_points < 3 {
            return Err(field("t_grid", "need lo < hi and at least three points"));
        }
        Ok(Resolved { config, sys, phi, r, order, n })
    }

    pub fn seed(&self) -> Result<u64> {
        self.config.seed.ok_or_else(|| field("seed", "required for stochastic steps"))
    }

    pub fn base(&self) -> Result<Point> {
        self.config.base.as_ref().expect("resolved").point(&self.sys)
    }

    pub fn chart_tau(&self) -> f64 {
        self.config.chart_tau.expect("resolved")
    }

    /// `r` for leaf constructions.
    pub fn leaf_r(&self) -> Result<f64> {
        if self.r >= self.sys.tau / 3.0 {
            return Err(field("r", format!("leaf constructions need r < tau/3 = {}", self.sys.tau / 3.0)));
        }
        Ok(self.r)
    }

    pub fn domain(&self) -> Result<Domain> {
        Ok(match *self.config.domain.as_ref().expect("resolved") {
            DomainSpec::Whole => Domain::Whole,
            DomainSpec::Leaf { radius } => {
                self.leaf_r()?;
                Domain::Leaf { base: self.base()?, radius }
            }
        })
    }

    pub fn variant(&self) -> Variant {
        self.config.variant.expect("resolved")
    }

    pub fn dictionary(&self) -> Result<TestDictionary> {
        let p = self.sys.alphabet();
        let need_p = || p.ok_or_else(|| field("dictionary", "cylinders need a shift"));
        Ok(match self.config.dictionary {
            DictionarySpec::Default => TestDictionary::default_for(&self.sys)?,
            DictionarySpec::Fourier { kmax } => TestDictionary::fourier(kmax),
            DictionarySpec::Solenoid { kmax } => TestDictionary::solenoid(kmax),
            DictionarySpec::Cylinders { depth } => TestDictionary::cylinders(need_p()?, depth),
            DictionarySpec::CylindersOfLength { len } => TestDictionary::cylinders_of_length(need_p()?, len),
            DictionarySpec::Strips { depth } => TestDictionary::strips(&self.sys, depth)?,
        })
    }

    pub fn is_geometric_family(&self) -> bool {
        matches!(self.phi.kind, PotentialKind::GeometricT { .. })
    }
}
