//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use hybrid_moments::algebra::parse_rational;
use hybrid_moments::dynamics::{initial_state, IntegratorConfig, Method, SimState};
use hybrid_moments::hamiltonian::{generate_eom, EomSystem, PolyHamiltonian};
use hybrid_moments::{BracketKind, CentroidSymbol, Error, MomentKey, SystemSignature};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub signature: SignatureConfig,
    pub hamiltonian: Vec<TermConfig>,
    pub kind: KindConfig,
    pub truncation: u32,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<IntegratorSection>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignatureConfig {
    pub n_classical: usize,
    pub n_quantum: usize,
    pub hbar: f64,
}

/// `coefficient · Π q_i^{a_i} p_i^{b_i}` with `exponents[i] = [a_i, b_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub exponents: Vec<[u32; 2]>,
    /// Exact rational such as `"1/2"`, `"-3"` or `"0.25"`.
    pub coefficient: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindConfig {
    Quantum,
    Classical,
    Hybrid,
}

impl From<KindConfig> for BracketKind {
    fn from(k: KindConfig) -> Self {
        match k {
            KindConfig::Quantum => BracketKind::Quantum,
            KindConfig::Classical => BracketKind::Classical,
            KindConfig::Hybrid => BracketKind::Hybrid,
        }
    }
}

/// Sparse initial data; keys are `q1`, `p2`, ... and `d[2,0;0,1]`, ...
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub centroids: BTreeMap<String, f64>,
    #[serde(default)]
    pub moments: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum IntegratorSection {
    Rk4 {
        step: f64,
        t_end: f64,
        #[serde(default = "default_stride")]
        output_stride: usize,
    },
    Rk45 {
        #[serde(default = "default_rtol")]
        rtol: f64,
        #[serde(default = "default_atol")]
        atol: f64,
        #[serde(default = "default_initial_step")]
        initial_step: f64,
        t_end: f64,
        #[serde(default = "default_stride")]
        output_stride: usize,
    },
}

fn default_stride() -> usize {
    1
}
fn default_rtol() -> f64 {
    1e-9
}
fn default_atol() -> f64 {
    1e-12
}
fn default_initial_step() -> f64 {
    1e-3
}

impl From<IntegratorSection> for IntegratorConfig {
    fn from(s: IntegratorSection) -> Self {
        match s {
            IntegratorSection::Rk4 { step, t_end, output_stride } => {
                IntegratorConfig { method: Method::Rk4 { step }, t_end, output_stride }
            }
            IntegratorSection::Rk45 { rtol, atol, initial_step, t_end, output_stride } => {
                IntegratorConfig { method: Method::Rk45 { rtol, atol, initial_step }, t_end, output_stride }
            }
        }
    }
}

/// Output paths; anything unset goes to stdout.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

/// A validated configuration ready to run.
pub struct Prepared {
    pub system: EomSystem,
    pub initial: SimState,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    #[cfg(test)]
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn signature(&self) -> Result<SystemSignature, Error> {
        let s = self.signature;
        SystemSignature::new(s.n_classical, s.n_quantum, s.hbar)
    }

    pub fn hamiltonian(&self) -> Result<PolyHamiltonian, Error> {
        let dofs = self.signature()?.dofs();
        let mut h = PolyHamiltonian::new(dofs);
        for (i, t) in self.hamiltonian.iter().enumerate() {
            if t.exponents.len() != dofs {
                return Err(Error::InvalidConfig(format!(
                    "hamiltonian term {i} has {} exponent pairs, signature has {dofs} degrees of freedom",
                    t.exponents.len()
                )));
            }
            let c = parse_rational(&t.coefficient)?;
            h.add_term(t.exponents.iter().map(|e| (e[0], e[1])).collect(), c)?;
        }
        Ok(h)
    }

    pub fn system(&self) -> Result<EomSystem, Error> {
        let sig = self.signature()?;
        let kind = BracketKind::from(self.kind);
        match kind {
            BracketKind::Quantum if sig.n_classical() > 0 => {
                return Err(Error::InvalidConfig("quantum kind needs a purely quantum signature".into()))
            }
            BracketKind::Classical if sig.n_quantum() > 0 => {
                return Err(Error::InvalidConfig("classical kind needs a purely classical signature".into()))
            }
            _ => {}
        }
        generate_eom(&self.hamiltonian()?, &sig, kind, self.truncation)
    }

    pub fn integrator(&self) -> Result<IntegratorConfig, Error> {
        let section = self.integrator.ok_or_else(|| Error::InvalidConfig("missing integrator section".into()))?;
        let cfg = IntegratorConfig::from(section);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn prepare(&self) -> Result<Prepared, Error> {
        let system = self.system()?;
        let centroids = self
            .initial
            .centroids
            .iter()
            .map(|(k, v)| {
                let c = CentroidSymbol::parse(k)?;
                if c.dof >= system.signature().dofs() {
                    return Err(Error::InvalidConfig(format!("centroid {k} is outside the signature")));
                }
                Ok((c, *v))
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let moments = self
            .initial
            .moments
            .iter()
            .map(|(k, v)| Ok((MomentKey::parse(k)?, *v)))
            .collect::<Result<Vec<_>, Error>>()?;
        let initial = initial_state(&system, &centroids, &moments)?;
        Ok(Prepared { system, initial })
    }
}
