//! Flat `key = value` run configuration.
//!
//! ```text
//! # rigid body just past the Hopf point
//! model = rigid_body
//! I1 = 0.8
//! I2 = 0.5
//! I3 = 0.4
//! alpha = 0.3
//! m = 1.5
//! tau = 0.81
//! h = 1e-3
//! t_end = 200
//! initial = perturbed
//! eps = 0.01
//! direction = 0, 1, 1
//! ```
//!
//! Every key must be meaningful for the selected model; leftovers are
//! reported by name.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use lpdelay::history::InitialFunction;
use lpdelay::integrator::DDEProblem;
use lpdelay::models::{
    circle_problem, cylinder_problem, landau_lifschitz_problem, machine_tool_problem, neuron_problem,
    rigid_body_problem, sphere_problem, Activation, LandauLifschitzParams, MachineToolParams, NeuronParams,
    RigidBodyParams,
};

use crate::error::CliError;

/// Parsed key/value pairs, remembering which keys were consumed.
#[derive(Debug, Default)]
pub struct KeyValues {
    entries: BTreeMap<String, (String, usize)>,
    used: RefCell<BTreeSet<String>>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("line {}: expected `key = value`, got `{line}`", n + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(CliError::config(format!("line {}: empty key", n + 1)));
            }
            if entries.insert(key.to_string(), (value.trim().to_string(), n + 1)).is_some() {
                return Err(CliError::config(format!("line {}: duplicate key `{key}`", n + 1)));
            }
        }
        Ok(Self { entries, used: RefCell::new(BTreeSet::new()) })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        let (v, _) = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some(v.as_str())
    }

    pub fn string(&self, key: &str) -> Result<&str, CliError> {
        self.raw(key).ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    pub fn f64_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key).map(|v| parse_number(key, v)).transpose()
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        self.f64_opt(key)?.ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    pub fn vector_opt(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key).map(|v| parse_vector(key, v)).transpose()
    }

    pub fn vector(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.vector_opt(key)?.ok_or_else(|| CliError::config(format!("missing required key `{key}`")))
    }

    /// Keys present in the file that nothing asked for.
    pub fn unused(&self) -> Vec<String> {
        let used = self.used.borrow();
        self.entries.keys().filter(|k| !used.contains(*k)).cloned().collect()
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.1)
    }
}

fn parse_number(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| CliError::config(format!("key `{key}`: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::config(format!("key `{key}`: value must be finite")));
    }
    Ok(x)
}

fn parse_vector(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|s| parse_number(key, s.trim())).collect()
}

fn fixed<const N: usize>(key: &str, v: Vec<f64>) -> Result<[f64; N], CliError> {
    let n = v.len();
    v.try_into().map_err(|_| CliError::config(format!("key `{key}`: expected {N} components, got {n}")))
}

/// Scalar function of the state, such as an energy.
pub type StateFunction = Box<dyn Fn(&[f64]) -> f64>;

/// Model selection with its parameters.
#[derive(Debug, Clone)]
pub enum ModelConfig {
    RigidBody(RigidBodyParams<f64>),
    LandauLifschitz(LandauLifschitzParams<f64>),
    Sphere { tau: f64 },
    Circle { c: f64, tau: f64 },
    Cylinder { b: f64, c: f64, tau: f64 },
    Neuron(NeuronParams<f64>),
    MachineTool(MachineToolParams<f64>),
}

pub const MODEL_NAMES: &[&str] =
    &["rigid_body", "landau_lifschitz", "sphere", "circle", "cylinder", "neuron", "machine_tool"];

impl ModelConfig {
    pub fn name(&self) -> &'static str {
        match self {
            ModelConfig::RigidBody(_) => "rigid_body",
            ModelConfig::LandauLifschitz(_) => "landau_lifschitz",
            ModelConfig::Sphere { .. } => "sphere",
            ModelConfig::Circle { .. } => "circle",
            ModelConfig::Cylinder { .. } => "cylinder",
            ModelConfig::Neuron(_) => "neuron",
            ModelConfig::MachineTool(_) => "machine_tool",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelConfig::Circle { .. } => 1,
            ModelConfig::Cylinder { .. } | ModelConfig::MachineTool(_) => 2,
            ModelConfig::Neuron(p) => 2 * p.n,
            _ => 3,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            ModelConfig::RigidBody(p) => p.tau,
            ModelConfig::LandauLifschitz(p) => p.tau,
            ModelConfig::Sphere { tau } | ModelConfig::Circle { tau, .. } | ModelConfig::Cylinder { tau, .. } => *tau,
            ModelConfig::Neuron(p) => p.tau,
            ModelConfig::MachineTool(p) => p.delay(),
        }
    }

    /// Rest state used by `initial = perturbed` when no `equilibrium` key is given.
    fn default_equilibrium(&self) -> Option<Vec<f64>> {
        match self {
            ModelConfig::RigidBody(p) => Some(p.equilibrium().to_vec()),
            ModelConfig::Circle { .. } | ModelConfig::Cylinder { .. } | ModelConfig::MachineTool(_) => {
                Some(vec![0.0; self.dim()])
            }
            ModelConfig::Neuron(p) => Some(vec![0.0; 2 * p.n]),
            _ => None,
        }
    }

    /// `‖x‖` for the models that conserve it.
    pub fn casimir(&self) -> Option<fn(&[f64]) -> f64> {
        match self {
            ModelConfig::RigidBody(_) | ModelConfig::LandauLifschitz(_) | ModelConfig::Sphere { .. } => {
                Some(|x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            }
            _ => None,
        }
    }

    pub fn energy(&self) -> Option<StateFunction> {
        match self {
            ModelConfig::RigidBody(p) => {
                let p = *p;
                Some(Box::new(move |x| p.energy(&[x[0], x[1], x[2]])))
            }
            ModelConfig::LandauLifschitz(p) => {
                let p = *p;
                Some(Box::new(move |x| p.energy(&[x[0], x[1], x[2]])))
            }
            _ => None,
        }
    }

    pub fn problem(&self, initial: InitialFunction<f64>) -> Result<DDEProblem<f64>, CliError> {
        let r = match self {
            ModelConfig::RigidBody(p) => rigid_body_problem(p, initial),
            ModelConfig::LandauLifschitz(p) => landau_lifschitz_problem(p, initial),
            ModelConfig::Sphere { tau } => sphere_problem(*tau, initial),
            ModelConfig::Circle { c, tau } => circle_problem(*c, *tau, initial),
            ModelConfig::Cylinder { b, c, tau } => cylinder_problem(*b, *c, *tau, initial),
            ModelConfig::Neuron(p) => neuron_problem(p, initial),
            ModelConfig::MachineTool(p) => machine_tool_problem(p, initial),
        };
        r.map_err(|e| CliError::config(e.to_string()))
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self, CliError> {
        match self {
            ModelConfig::RigidBody(p) => Ok(ModelConfig::RigidBody(p.with_tau(tau))),
            ModelConfig::LandauLifschitz(p) => Ok(ModelConfig::LandauLifschitz(LandauLifschitzParams { tau, ..*p })),
            ModelConfig::Sphere { .. } => Ok(ModelConfig::Sphere { tau }),
            ModelConfig::Circle { c, .. } => Ok(ModelConfig::Circle { c: *c, tau }),
            ModelConfig::Cylinder { b, c, .. } => Ok(ModelConfig::Cylinder { b: *b, c: *c, tau }),
            ModelConfig::Neuron(p) => Ok(ModelConfig::Neuron(NeuronParams { tau, ..p.clone() })),
            ModelConfig::MachineTool(_) => {
                Err(CliError::config("machine_tool derives its delay from `omega_rot`; tau cannot be swept"))
            }
        }
    }

    fn from_keys(kv: &KeyValues) -> Result<Self, CliError> {
        let model = kv.string("model")?;
        let tau = |kv: &KeyValues| kv.f64("tau");
        Ok(match model {
            "rigid_body" => ModelConfig::RigidBody(RigidBodyParams::new(
                [kv.f64("I1")?, kv.f64("I2")?, kv.f64("I3")?],
                kv.f64("alpha")?,
                tau(kv)?,
                kv.f64_or("m", 1.0)?,
            )),
            "landau_lifschitz" => ModelConfig::LandauLifschitz(LandauLifschitzParams {
                gamma_ratio: kv.f64("gamma_ratio")?,
                lambda_damp: kv.f64("lambda_damp")?,
                b: fixed("B", kv.vector("B")?)?,
                tau: tau(kv)?,
            }),
            "sphere" => ModelConfig::Sphere { tau: tau(kv)? },
            "circle" => ModelConfig::Circle { c: kv.f64("c")?, tau: tau(kv)? },
            "cylinder" => ModelConfig::Cylinder { b: kv.f64("b")?, c: kv.f64("c")?, tau: tau(kv)? },
            "neuron" => {
                let n = kv.f64_or("n", 2.0)?;
                if n < 1.0 || n.fract() != 0.0 {
                    return Err(CliError::config(format!("key `n`: expected a positive integer, got {n}")));
                }
                match kv.raw("activation").unwrap_or("tanh") {
                    "tanh" => {}
                    other => return Err(CliError::config(format!("key `activation`: unknown activation `{other}`"))),
                }
                ModelConfig::Neuron(NeuronParams {
                    a: kv.f64("a")?,
                    b: kv.f64("b")?,
                    c: kv.f64("c")?,
                    d: kv.f64("d")?,
                    h_gain: kv.f64("h_gain")?,
                    n: n as usize,
                    tau: tau(kv)?,
                    activation: Activation::Tanh,
                })
            }
            "machine_tool" => ModelConfig::MachineTool(MachineToolParams {
                k_damp: kv.f64("k_damp")?,
                omega_nat: kv.f64("omega_nat")?,
                mass: kv.f64("mass")?,
                k1: kv.f64("k1")?,
                beta: kv.f64("beta")?,
                omega_rot: kv.f64("omega_rot")?,
            }),
            other => {
                return Err(CliError::config(format!(
                    "key `model` (line {}): unknown model `{other}`; expected one of {}",
                    kv.line_of("model"),
                    MODEL_NAMES.join(", ")
                )))
            }
        })
    }
}

/// How the history on `[−τ, 0]` is built.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialSpec {
    Constant(Vec<f64>),
    Perturbed { equilibrium: Vec<f64>, eps: f64, direction: Vec<f64> },
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>> },
}

impl InitialSpec {
    pub fn build(&self, tau: f64) -> Result<InitialFunction<f64>, CliError> {
        match self {
            InitialSpec::Constant(x) => Ok(InitialFunction::constant(x.clone(), tau)),
            InitialSpec::Perturbed { equilibrium, eps, direction } => {
                let n = direction.iter().map(|d| d * d).sum::<f64>().sqrt();
                let x: Vec<f64> = equilibrium.iter().zip(direction).map(|(e, d)| e + eps * d / n).collect();
                Ok(InitialFunction::constant(x, tau))
            }
            InitialSpec::Tabulated { times, values } => {
                if times.first().is_some_and(|&t| t > -tau) {
                    return Err(CliError::config(format!(
                        "key `initial_times`: table starts at {} but must cover -tau = {}",
                        times[0], -tau
                    )));
                }
                InitialFunction::tabulated(times.clone(), values.clone(), tau)
                    .map_err(|e| CliError::config(format!("key `initial_values`: {e}")))
            }
        }
    }

    fn from_keys(kv: &KeyValues, model: &ModelConfig) -> Result<Self, CliError> {
        let dim = model.dim();
        let check = |key: &str, v: &[f64]| {
            if v.len() == dim {
                Ok(())
            } else {
                Err(CliError::config(format!("key `{key}`: expected {dim} components, got {}", v.len())))
            }
        };
        let kind =
            kv.raw("initial").unwrap_or(if model.default_equilibrium().is_some() { "perturbed" } else { "constant" });
        match kind {
            "constant" => {
                let x = kv.vector("x0")?;
                check("x0", &x)?;
                Ok(InitialSpec::Constant(x))
            }
            "perturbed" => {
                let equilibrium = match kv.vector_opt("equilibrium")? {
                    Some(v) => v,
                    None => model.default_equilibrium().ok_or_else(|| {
                        CliError::config(format!("key `equilibrium` is required for model {}", model.name()))
                    })?,
                };
                check("equilibrium", &equilibrium)?;
                let eps = kv.f64_or("eps", 0.01)?;
                let direction = kv.vector_opt("direction")?.unwrap_or_else(|| vec![1.0; dim]);
                check("direction", &direction)?;
                if direction.iter().all(|&d| d == 0.0) && eps != 0.0 {
                    return Err(CliError::config("key `direction`: must be non-zero"));
                }
                Ok(InitialSpec::Perturbed { equilibrium, eps, direction })
            }
            "tabulated" => {
                let times = kv.vector("initial_times")?;
                let values: Vec<Vec<f64>> = kv
                    .string("initial_values")?
                    .split(';')
                    .map(|row| parse_vector("initial_values", row))
                    .collect::<Result<_, _>>()?;
                if values.len() != times.len() {
                    return Err(CliError::config(format!(
                        "key `initial_values`: {} rows for {} times",
                        values.len(),
                        times.len()
                    )));
                }
                for v in &values {
                    check("initial_values", v)?;
                }
                Ok(InitialSpec::Tabulated { times, values })
            }
            other => Err(CliError::config(format!(
                "key `initial`: unknown initial function `{other}`; expected constant, perturbed or tabulated"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub h: f64,
    pub t_end: f64,
    pub initial: InitialSpec,
    pub output_csv: Option<PathBuf>,
    pub output_json: Option<PathBuf>,
    /// Drop history older than one delay while integrating.
    pub prune: bool,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        Self::parse_relative(text, None)
    }

    /// Output paths are resolved against `base` when relative.
    pub fn parse_relative(text: &str, base: Option<&Path>) -> Result<Self, CliError> {
        let kv = KeyValues::parse(text)?;
        let model = ModelConfig::from_keys(&kv)?;
        let h = kv.f64("h")?;
        let t_end = kv.f64("t_end")?;
        if h <= 0.0 {
            return Err(CliError::config(format!("key `h`: must be > 0, got {h}")));
        }
        if t_end <= 0.0 {
            return Err(CliError::config(format!("key `t_end`: must be > 0, got {t_end}")));
        }
        let initial = InitialSpec::from_keys(&kv, &model)?;
        let resolve = |p: &str| {
            let p = PathBuf::from(p);
            match base {
                Some(b) if p.is_relative() => b.join(p),
                _ => p,
            }
        };
        let output_csv = kv.raw("output_csv").map(resolve);
        let output_json = kv.raw("output_json").map(resolve);
        let prune = match kv.raw("prune_history") {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => {
                return Err(CliError::config(format!("key `prune_history`: expected true or false, got `{other}`")))
            }
        };
        let unused = kv.unused();
        if let Some(key) = unused.first() {
            return Err(CliError::config(format!(
                "key `{key}` (line {}) is not valid for model {}",
                kv.line_of(key),
                model.name()
            )));
        }
        Ok(Self { model, h, t_end, initial, output_csv, output_json, prune })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_relative(&text, path.parent())
    }

    pub fn rigid_body(&self) -> Option<&RigidBodyParams<f64>> {
        match &self.model {
            ModelConfig::RigidBody(p) => Some(p),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RIGID: &str = "model = rigid_body\nI1 = 0.8\nI2 = 0.5\nI3 = 0.4\nalpha = 0.3\ntau = 0.5\nm = 1.5\nh = 1e-3\nt_end = 10 # short\n";

    #[test]
    fn rigid_body_defaults_to_perturbed_equilibrium() {
        let c = RunConfig::parse(RIGID).unwrap();
        assert_eq!(c.model.name(), "rigid_body");
        match c.initial {
            InitialSpec::Perturbed { equilibrium, eps, .. } => {
                assert_eq!(equilibrium, vec![1.5, 0.0, 0.0]);
                assert_eq!(eps, 0.01);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_named() {
        let e = RunConfig::parse(&format!("{RIGID}gamma_ratio = 1\n")).unwrap_err();
        assert!(e.to_string().contains("`gamma_ratio`"), "{e}");
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn unknown_model_is_named() {
        let e = RunConfig::parse("model = pendulum\nh = 0.1\nt_end = 1\n").unwrap_err();
        assert!(e.to_string().contains("`model`") && e.to_string().contains("pendulum"), "{e}");
    }

    #[test]
    fn malformed_lines() {
        assert!(RunConfig::parse("model rigid_body").is_err());
        assert!(RunConfig::parse("h = 1\nh = 2").unwrap_err().to_string().contains("duplicate"));
        assert!(RunConfig::parse(&RIGID.replace("h = 1e-3", "h = fast")).unwrap_err().to_string().contains("`h`"));
        assert!(RunConfig::parse(&RIGID.replace("h = 1e-3", "h = -1")).is_err());
    }

    #[test]
    fn tabulated_history() {
        let text = "model = sphere\ntau = 1\nh = 0.01\nt_end = 1\ninitial = tabulated\ninitial_times = -1, 0\ninitial_values = 1, 0, 0; 0, 1, 0\n";
        let c = RunConfig::parse(text).unwrap();
        let phi = c.initial.build(1.0).unwrap();
        assert_eq!(phi.eval(-0.5).unwrap(), vec![0.5, 0.5, 0.0]);
        let short = text.replace("-1, 0", "-0.5, 0");
        assert!(RunConfig::parse(&short).unwrap().initial.build(1.0).is_err());
    }

    #[test]
    fn component_count_checked() {
        let e = RunConfig::parse("model = sphere\ntau = 1\nh = 0.01\nt_end = 1\ninitial = constant\nx0 = 1, 0\n")
            .unwrap_err();
        assert!(e.to_string().contains("`x0`"));
    }
}
