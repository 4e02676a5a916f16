//! JSON run configuration shared by the command-line tool.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bands::{wannier_for, LatticeSpec, WannierBasis};
use crate::error::{Error, Result};
use crate::model::{
    ground_state_with, onsite_aa, onsite_cavity, EffectivePotential, GroundState, HubbardProblem,
    SolverOptions,
};
use crate::observables::{lyapunov_fit, photon_number, FitOptions, LocalizationMetrics};
use crate::sweep::{
    default_kappa_over_er, default_sites, Axis, AxisName, ModelKind, Observable, PotentialConfig,
    PumpConfig, SweepSpec, V0Units,
};

/// One sweep of a run. `fixed` overrides top-level parameters for this sweep
/// only, keyed by axis name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub name: String,
    pub axis1: Axis,
    pub axis2: Axis,
    #[serde(default)]
    pub fixed: BTreeMap<AxisName, f64>,
    #[serde(default = "sweep_observables")]
    pub observables: Vec<Observable>,
}

fn sweep_observables() -> Vec<Observable> {
    vec![Observable::Ipr]
}

/// Log-spaced AA scan in units of `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BaselineConfig {
    pub v0_over_t_start: f64,
    pub v0_over_t_stop: f64,
    pub count: usize,
    /// `v0/(2t)` values at which the fitted exponent is reported.
    pub thouless_ratios: Vec<f64>,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            v0_over_t_start: 0.5,
            v0_over_t_stop: 8.0,
            count: 241,
            thouless_ratios: vec![1.5, 2.0, 3.0, 4.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub sites: usize,
    pub potential: PotentialConfig,
    pub pump: PumpConfig,
    /// `hbar kappa / E_r`.
    pub kappa_over_er: f64,
    pub sweeps: Vec<SweepSection>,
    pub baseline: BaselineConfig,
    pub solver: SolverOptions,
    pub fit: FitOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            lattice: LatticeSpec::default(),
            sites: default_sites(),
            potential: PotentialConfig::default(),
            pump: PumpConfig::default(),
            kappa_over_er: default_kappa_over_er(),
            sweeps: Vec::new(),
            baseline: BaselineConfig::default(),
            solver: SolverOptions::default(),
            fit: FitOptions::default(),
        }
    }
}

impl RunConfig {
    /// Parses a config document. A sweep sidecar is accepted too, in which
    /// case the configuration stored in its metadata is used.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let value = match value.pointer("/metadata/effective_config") {
            Some(inner) => inner.clone(),
            None => value,
        };
        let cfg: RunConfig = serde_json::from_value(value)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.pump.validate()?;
        if self.sites < 3 {
            return Err(Error::invalid("sites", "need at least 3 sites"));
        }
        if !(self.kappa_over_er > 0.0) {
            return Err(Error::invalid("kappa_over_er", "must be positive"));
        }
        let b = &self.baseline;
        if !(b.v0_over_t_start > 0.0 && b.v0_over_t_stop > b.v0_over_t_start) || b.count < 2 {
            return Err(Error::invalid(
                "baseline",
                "needs 0 < v0_over_t_start < v0_over_t_stop and count >= 2",
            ));
        }
        for s in &self.sweeps {
            self.sweep_spec(s)?.validate()?;
        }
        Ok(())
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn sweep_spec(&self, section: &SweepSection) -> Result<SweepSpec> {
        let mut spec = SweepSpec::new(section.name.clone(), section.axis1.clone(), section.axis2.clone());
        spec.potential = self.potential;
        spec.pump = self.pump;
        spec.kappa_over_er = self.kappa_over_er;
        spec.lattice = self.lattice.clone();
        spec.sites = self.sites;
        spec.observables = section.observables.clone();
        spec.fit = self.fit;
        spec.solver = self.solver;
        for (&name, &value) in &section.fixed {
            match name {
                AxisName::V0 => spec.potential.v0 = value,
                AxisName::C => spec.potential.cooperativity = value,
                AxisName::DeltaCPrime => spec.potential.delta_c_prime = value,
                AxisName::Eta => spec.pump.eta = value,
                AxisName::U0 => spec.potential.u0 = value,
                AxisName::DeltaC => spec.potential.delta_c = value,
                AxisName::W0 => spec.lattice.depth_w0 = value,
            }
        }
        Ok(spec)
    }

    /// The AA scan behind the `baseline-aa` command.
    pub fn baseline_spec(&self) -> SweepSpec {
        let b = &self.baseline;
        let mut spec = SweepSpec::new(
            "baseline_aa",
            Axis::log(AxisName::V0, b.v0_over_t_start, b.v0_over_t_stop, b.count),
            Axis::single(AxisName::W0, self.lattice.depth_w0),
        );
        spec.potential = PotentialConfig {
            mode: ModelKind::Aa,
            v0_units: V0Units::T,
            ..self.potential
        };
        spec.lattice = self.lattice.clone();
        spec.sites = self.sites;
        spec.observables = vec![Observable::Ipr, Observable::Gamma, Observable::Vc];
        spec.fit = self.fit;
        spec.solver = self.solver;
        spec
    }
}

/// Result of a single ground-state solve.
#[derive(Debug, Clone)]
pub struct PointSolution {
    pub basis: WannierBasis,
    pub potential: EffectivePotential,
    pub state: GroundState,
    pub metrics: LocalizationMetrics,
    pub nbar: Option<f64>,
}

pub fn solve_point(cfg: &RunConfig) -> Result<PointSolution> {
    let basis = wannier_for(&cfg.lattice)?;
    solve_point_with(cfg, basis)
}

/// As [`solve_point`] with a precomputed basis for `cfg.lattice`.
pub fn solve_point_with(cfg: &RunConfig, basis: WannierBasis) -> Result<PointSolution> {
    let point = cfg
        .potential
        .resolve(&cfg.pump, cfg.kappa_over_er, &basis, &[])?;
    let pot = point.potential;
    let onsite = if pot.is_cavity() {
        onsite_cavity(&basis, &pot, cfg.sites)?
    } else {
        onsite_aa(pot.v0, pot.beta, cfg.sites)?
    };
    let state = ground_state_with(&HubbardProblem::new(basis.t(), onsite)?, &cfg.solver)?;
    let metrics = lyapunov_fit(&state, &cfg.fit);
    let nbar = match point.cavity {
        Some((zeta, delta_c, u0, kappa)) => {
            Some(photon_number(&state, &basis, &zeta, delta_c, u0, kappa)?.mean_photon_number)
        }
        None => None,
    };
    Ok(PointSolution {
        basis,
        potential: pot,
        state,
        metrics,
        nbar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_json("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.sites, 233);
        assert_eq!(cfg.lattice.depth_w0, -15.0);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = RunConfig::from_json(r#"{"lattice": {"depth_w0": -10}}"#).unwrap_err();
        assert!(err.to_string().contains("depth_w0"), "{err}");
        let err = RunConfig::from_json(r#"{"site": 10}"#).unwrap_err();
        assert!(err.to_string().contains("site"), "{err}");
    }

    #[test]
    fn low_cutoff_names_the_key() {
        let err = RunConfig::from_json(r#"{"lattice": {"planewave_cutoff_M": 1}}"#).unwrap_err();
        assert!(err.to_string().contains("planewave_cutoff_M"), "{err}");
    }

    #[test]
    fn sidecar_wrapper_is_unwrapped() {
        let cfg = RunConfig {
            sites: 55,
            ..RunConfig::default()
        };
        let doc = serde_json::json!({"metadata": {"effective_config": cfg.to_value()}});
        assert_eq!(RunConfig::from_json(&doc.to_string()).unwrap(), cfg);
    }

    #[test]
    fn fixed_values_override() {
        let mut cfg = RunConfig::default();
        cfg.potential.mode = ModelKind::Physical;
        let section = SweepSection {
            name: "s".into(),
            axis1: Axis::single(AxisName::Eta, 1.0),
            axis2: Axis::single(AxisName::U0, -1.0),
            fixed: [(AxisName::DeltaC, -5.5), (AxisName::W0, -14.0)].into_iter().collect(),
            observables: vec![Observable::Ipr],
        };
        let spec = cfg.sweep_spec(&section).unwrap();
        assert_eq!(spec.potential.delta_c, -5.5);
        assert_eq!(spec.lattice.depth_w0, -14.0);
    }
}
