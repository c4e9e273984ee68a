//! Catalogue of integrable and superintegrable systems with their hidden invariants.

mod calogero;
mod kepler;
mod neumann;
mod oscillator;
mod quantum_dot;
mod toda;
mod tops;
mod two_center;

use serde::{Deserialize, Serialize};

use crate::dynamics::{HamiltonianSystem, Observable, PhasePoint};
use crate::error::{Error, Result};
use crate::lax::LaxPair;

pub use calogero::Calogero;
pub use kepler::Kepler;
pub use neumann::{omega_product, Neumann, CONSTRAINT_TOL};
pub use oscillator::{su_basis, Oscillator};
pub use quantum_dot::QuantumDot;
pub use toda::Toda;
pub(crate) use toda::TodaLax;
pub use tops::{moments, Top, TopKind};
pub use two_center::TwoCenter;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Parameter {
    pub name: String,
    pub value: f64,
    pub units: String,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: f64, units: impl Into<String>) -> Self {
        Self { name: name.into(), value, units: units.into() }
    }
}

/// A system together with the quantities it is claimed to conserve.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub name: String,
    pub parameters: Vec<Parameter>,
    pub system: HamiltonianSystem,
    pub invariants: Vec<Observable>,
    pub lax: Option<LaxPair>,
    /// A generic initial condition inside the domain.
    pub reference: Option<PhasePoint>,
}

impl SystemSpec {
    pub fn invariant(&self, name: &str) -> Option<&Observable> {
        self.invariants.iter().find(|o| o.name == name)
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|p| p.name == name).map(|p| p.value)
    }
}

fn one() -> f64 {
    1.0
}

/// Scenario-level description of a catalogue system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    Kepler {
        #[serde(default = "one")]
        m: f64,
        #[serde(default = "one")]
        k: f64,
        #[serde(default)]
        spherical: bool,
    },
    Calogero {
        n: usize,
        #[serde(default = "one")]
        g: f64,
    },
    Toda {
        /// bond couplings, one fewer than particles
        g: Vec<f64>,
    },
    Neumann {
        omega: Vec<f64>,
    },
    TwoCenter {
        k1: f64,
        k2: f64,
        a: f64,
        #[serde(default = "one")]
        m: f64,
    },
    GcTop {
        #[serde(default = "one")]
        alpha: f64,
    },
    Kovalevskaya {
        #[serde(default = "one")]
        alpha: f64,
    },
    QuantumDot {
        omega0: f64,
        omega_z: f64,
        #[serde(default)]
        omega_l: f64,
        #[serde(default)]
        a: f64,
    },
    Oscillator {
        n: usize,
        #[serde(default = "one")]
        m: f64,
        #[serde(default = "one")]
        omega: f64,
    },
}

impl SystemConfig {
    pub fn build(&self) -> Result<SystemSpec> {
        Ok(match self {
            Self::Kepler { m, k, spherical } => {
                let kp = Kepler::new(*m, *k)?;
                if *spherical {
                    let sys = kp.spherical_system();
                    SystemSpec {
                        name: "kepler-spherical".into(),
                        parameters: vec![Parameter::new("m", *m, "mass"), Parameter::new("k", *k, "coupling")],
                        invariants: vec![sys.h.clone()],
                        system: sys,
                        lax: None,
                        reference: PhasePoint::new(vec![1.0, 1.2, 0.0], vec![0.1, 0.4, 0.6]).ok(),
                    }
                } else {
                    kp.spec()
                }
            }
            Self::Calogero { n, g } => Calogero::new(*n, *g)?.spec(),
            Self::Toda { g } => Toda::new(g.clone())?.spec(),
            Self::Neumann { omega } => Neumann::new(omega.clone())?.spec(),
            Self::TwoCenter { k1, k2, a, m } => TwoCenter::new(*k1, *k2, *a, *m)?.spec(),
            Self::GcTop { alpha } => Top::goryachev_chaplygin(*alpha)?.spec(),
            Self::Kovalevskaya { alpha } => Top::kovalevskaya(*alpha)?.spec(),
            Self::QuantumDot { omega0, omega_z, omega_l, a } => QuantumDot::new(*omega0, *omega_z, *omega_l, *a)?.spec(),
            Self::Oscillator { n, m, omega } => Oscillator::new(*n, *m, *omega)?.spec(),
        })
    }
}

/// Named presets.
pub const PRESETS: &[&str] = &[
    "kepler",
    "kepler-spherical",
    "calogero-3",
    "toda-4",
    "neumann-3",
    "two-center",
    "gc-top",
    "kovalevskaya",
    "quantum-dot-tau2",
    "quantum-dot-tau1",
    "quantum-dot-tau-half",
    "oscillator-2",
];

pub fn preset(name: &str) -> Result<SystemConfig> {
    let tau_half = {
        let (w0, wl) = (1.0, 0.5);
        0.5 * f64::hypot(w0, wl)
    };
    Ok(match name {
        "kepler" => SystemConfig::Kepler { m: 1.0, k: 1.0, spherical: false },
        "kepler-spherical" => SystemConfig::Kepler { m: 1.0, k: 1.0, spherical: true },
        "calogero-3" => SystemConfig::Calogero { n: 3, g: 1.0 },
        "toda-4" => SystemConfig::Toda { g: vec![1.0; 3] },
        "neumann-3" => SystemConfig::Neumann { omega: vec![0.5, 1.0, 1.5] },
        "two-center" => SystemConfig::TwoCenter { k1: 1.0, k2: 0.5, a: 0.5, m: 1.0 },
        "gc-top" => SystemConfig::GcTop { alpha: 1.0 },
        "kovalevskaya" => SystemConfig::Kovalevskaya { alpha: 1.0 },
        "quantum-dot-tau2" => SystemConfig::QuantumDot { omega0: 1.0, omega_z: 2.0, omega_l: 0.0, a: 0.1 },
        "quantum-dot-tau1" => SystemConfig::QuantumDot { omega0: 1.0, omega_z: 1.0, omega_l: 0.0, a: 0.1 },
        "quantum-dot-tau-half" => SystemConfig::QuantumDot { omega0: 1.0, omega_z: tau_half, omega_l: 0.5, a: 0.1 },
        "oscillator-2" => SystemConfig::Oscillator { n: 2, m: 1.0, omega: 1.0 },
        other => {
            return Err(Error::Config(format!("unknown system preset '{other}'; known presets: {}", PRESETS.join(", "))))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_builds_with_reference_in_domain() {
        for name in PRESETS {
            let spec = preset(name).unwrap().build().unwrap();
            let x = spec.reference.clone().expect("reference state");
            assert_eq!(x.n(), spec.system.n, "{name}");
            assert!(spec.system.in_domain(&x.to_flat()), "{name}");
            assert!(spec.invariants.iter().all(|o| o.value(&x).is_finite()), "{name}");
        }
    }

    #[test]
    fn unknown_preset_names_the_culprit() {
        let e = preset("kepler-5d").unwrap_err().to_string();
        assert!(e.contains("kepler-5d"));
    }

    #[test]
    fn tau_half_preset() {
        let spec = preset("quantum-dot-tau-half").unwrap().build().unwrap();
        assert!((spec.parameter("tau").unwrap() - 0.5).abs() < 1e-15);
    }
}
