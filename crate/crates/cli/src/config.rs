//! Run configuration: JSON schema, validation and conversion into library
//! objects.

use std::collections::BTreeMap;
use std::path::Path;

use corrdyn::density::{extract_correlators, from_correlators, CorrelatorVector, DensityMatrix};
use corrdyn::dynamics::Method;
use corrdyn::hamiltonian::{SpinHamiltonian, Tensor};
use corrdyn::pauli::{index_of, parse_pauli, CorrelatorIndex, PauliString};
use corrdyn::states;
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Evolve,
    Spectrum,
    Resolvent,
    Decompose,
    Validate,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Rk4,
    ExpAction,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Rk4 => Method::Rk4,
            MethodName::ExpAction => Method::ExpAction,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub i: usize,
    pub j: usize,
    pub tensor: Tensor,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NamedState {
    pub name: String,
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// One Bloch vector per site.
    Product(Vec<[f64; 3]>),
    Named(NamedState),
    /// Sparse map from Pauli-string label to expectation value.
    Correlators(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    pub t_max: f64,
    /// Defaults to 0.01/‖𝕄‖∞.
    pub dt: Option<f64>,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSettings {
    pub epsilon: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ResolventSettings {
    /// Probe points as [re, im] pairs.
    pub z: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sites: usize,
    #[serde(default)]
    pub fields: Vec<[f64; 3]>,
    #[serde(default)]
    pub couplings: Vec<Coupling>,
    pub initial_state: Option<InitialState>,
    pub time: Option<TimeGrid>,
    #[serde(default)]
    pub observables: Vec<String>,
    #[serde(default = "default_tasks")]
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub method: MethodName,
    #[serde(default)]
    pub spectrum: SpectrumSettings,
    pub resolvent: Option<ResolventSettings>,
    /// Seed for random named states.
    #[serde(default)]
    pub seed: u64,
}

fn default_tasks() -> Vec<Task> {
    vec![Task::Evolve]
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

/// A requested output column: a Cartesian correlator, or a ladder string
/// expanded into Cartesian correlators with complex weights.
#[derive(Clone, Debug, PartialEq)]
pub enum Observable {
    Cartesian { label: String, index: CorrelatorIndex },
    Ladder { label: String, terms: Vec<(C64, CorrelatorIndex)> },
}

impl Observable {
    pub fn parse(label: &str, n_sites: usize) -> Result<Self, CliError> {
        if label.split_whitespace().next().is_none() {
            return Err(parse_err("observable label is empty"));
        }
        let s = parse_pauli(label, n_sites)?;
        let label = s.to_string();
        if s.is_cartesian() {
            return Ok(Observable::Cartesian {
                index: index_of(&s)?,
                label,
            });
        }
        let terms = s
            .cartesian_expansion()
            .into_iter()
            .map(|(w, p)| Ok((w, index_of(&p)?)))
            .collect::<Result<_, CliError>>()?;
        Ok(Observable::Ladder { label, terms })
    }

    pub fn label(&self) -> &str {
        match self {
            Observable::Cartesian { label, .. } | Observable::Ladder { label, .. } => label,
        }
    }

    pub fn evaluate(&self, v: &CorrelatorVector) -> C64 {
        match self {
            Observable::Cartesian { index, .. } => C64::new(v.get(*index), 0.0),
            Observable::Ladder { terms, .. } => terms.iter().map(|(w, c)| w * v.get(*c)).sum(),
        }
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Observable::Ladder { .. })
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| parse_err(format!("config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.sites == 0 {
            return Err(parse_err("sites must be at least 1"));
        }
        if !self.fields.is_empty() && self.fields.len() != self.sites {
            return Err(parse_err(format!(
                "fields has {} entries for {} sites",
                self.fields.len(),
                self.sites
            )));
        }
        for c in &self.couplings {
            if c.i >= c.j {
                return Err(parse_err(format!("coupling ({}, {}) must have i < j", c.i, c.j)));
            }
            if c.j >= self.sites {
                return Err(parse_err(format!("coupling site {} >= {}", c.j, self.sites)));
            }
        }
        let finite = self.fields.iter().flatten().all(|x| x.is_finite())
            && self.couplings.iter().flat_map(|c| c.tensor.iter().flatten()).all(|x| x.is_finite());
        if !finite {
            return Err(parse_err("fields and couplings must be finite"));
        }
        if let Some(t) = &self.time {
            if !(t.t_max >= 0.0 && t.t_max.is_finite()) {
                return Err(parse_err("time.t_max must be a nonnegative number"));
            }
            if let Some(dt) = t.dt {
                if !(dt > 0.0 && dt.is_finite()) {
                    return Err(parse_err("time.dt must be positive"));
                }
            }
            if t.stride == 0 {
                return Err(parse_err("time.stride must be at least 1"));
            }
        }
        if let Some(e) = self.spectrum.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(parse_err("spectrum.epsilon must be positive"));
            }
        }
        if self.spectrum.points == Some(0) || self.spectrum.points == Some(1) {
            return Err(parse_err("spectrum.points must be at least 2"));
        }
        self.observables()?;
        Ok(())
    }

    pub fn observables(&self) -> Result<Vec<Observable>, CliError> {
        if self.observables.is_empty() {
            // every single-site Cartesian correlator
            let mut out = Vec::new();
            for site in 0..self.sites {
                for axis in ["x", "y", "z"] {
                    out.push(Observable::parse(&format!("{axis}{site}"), self.sites)?);
                }
            }
            return Ok(out);
        }
        self.observables
            .iter()
            .map(|l| Observable::parse(l, self.sites))
            .collect()
    }

    pub fn hamiltonian(&self) -> Result<SpinHamiltonian, CliError> {
        let mut h = SpinHamiltonian::new(self.sites)?;
        for (i, f) in self.fields.iter().enumerate() {
            h.set_field(i, *f)?;
        }
        for c in &self.couplings {
            h.set_coupling(c.i, c.j, c.tensor)?;
        }
        Ok(h)
    }

    pub fn time_grid(&self) -> Result<&TimeGrid, CliError> {
        self.time.as_ref().ok_or_else(|| parse_err("missing \"time\" section"))
    }

    fn initial(&self) -> Result<&InitialState, CliError> {
        self.initial_state
            .as_ref()
            .ok_or_else(|| parse_err("missing \"initial_state\" section"))
    }

    /// Initial correlator vector; no dense matrix is formed for the
    /// `correlators` form.
    pub fn initial_correlators(&self) -> Result<CorrelatorVector, CliError> {
        match self.initial()? {
            InitialState::Correlators(map) => self.correlator_map(map),
            _ => Ok(extract_correlators(&self.initial_density()?)?),
        }
    }

    /// Initial density matrix (dense; subject to the size cap).
    pub fn initial_density(&self) -> Result<DensityMatrix, CliError> {
        let n = self.sites;
        Ok(match self.initial()? {
            InitialState::Product(bloch) => {
                if bloch.len() != n {
                    return Err(parse_err(format!(
                        "product state has {} Bloch vectors for {n} sites",
                        bloch.len()
                    )));
                }
                states::product(bloch)?
            }
            InitialState::Named(named) => self.named_state(named)?,
            InitialState::Correlators(map) => from_correlators(&self.correlator_map(map)?)?,
        })
    }

    fn correlator_map(&self, map: &BTreeMap<String, f64>) -> Result<CorrelatorVector, CliError> {
        let parsed = map
            .iter()
            .map(|(label, v)| {
                let s = parse_pauli(label, self.sites)?;
                if !s.is_cartesian() {
                    return Err(parse_err(format!("initial correlator \"{label}\" must be Cartesian")));
                }
                if s.is_identity() {
                    return Err(parse_err("initial correlators cannot set the identity slot"));
                }
                Ok((s, *v))
            })
            .collect::<Result<Vec<(PauliString, f64)>, CliError>>()?;
        Ok(CorrelatorVector::from_entries(
            self.sites,
            parsed.iter().map(|(s, v)| (s, *v)),
        )?)
    }

    fn named_state(&self, named: &NamedState) -> Result<DensityMatrix, CliError> {
        let n = self.sites;
        let fixed = |want: usize| {
            if n == want {
                Ok(())
            } else {
                Err(parse_err(format!("state \"{}\" needs {want} sites, config has {n}", named.name)))
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Ok(match named.name.as_str() {
            "cat" => states::cat(n, named.phase)?,
            "ghz" => states::ghz(n)?,
            "w" => states::w_state(n)?,
            "all_up" => states::all_up(n)?,
            "maximally_mixed" => DensityMatrix::maximally_mixed(n)?,
            "random_pure" => states::random_pure(n, &mut rng)?,
            "random_mixed" => states::random_mixed(n, &mut rng)?,
            "psi3_a" => {
                fixed(3)?;
                states::psi3_a()
            }
            "psi3_b" => {
                fixed(3)?;
                states::psi3_b()
            }
            "psi3_c" => {
                fixed(3)?;
                states::psi3_c()
            }
            "mixed_example" => {
                fixed(2)?;
                states::mixed_example()
            }
            other => return Err(parse_err(format!("unknown named state \"{other}\""))),
        })
    }

    pub fn probe_points(&self) -> Result<Vec<C64>, CliError> {
        let r = self
            .resolvent
            .as_ref()
            .ok_or_else(|| parse_err("missing \"resolvent\" section"))?;
        if r.z.is_empty() {
            return Err(parse_err("resolvent.z is empty"));
        }
        Ok(r.z.iter().map(|[re, im]| C64::new(*re, *im)).collect())
    }
}
