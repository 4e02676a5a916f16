//! Parameter mapping and phase-diagram sweeps over two axes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bands::{wannier_for, LatticeSpec, WannierBasis};
use crate::error::{Error, Result};
use crate::model::{
    ground_state_with, onsite_aa, onsite_cavity, EffectivePotential, HubbardProblem, SolveMethod,
    SolverOptions,
};
use crate::observables::{
    critical_v_cav, detect_transition, ipr, lyapunov_fit, photon_number, FitOptions, PumpProfile,
    TRANSITION_METHOD,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpMode {
    CavityPumped,
    AtomPumped,
}

/// Pump parameters; frequencies are in units where `kappa` is given.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PumpConfig {
    pub pump_mode: PumpMode,
    pub eta: f64,
    #[serde(rename = "Omega")]
    pub omega: f64,
    #[serde(rename = "Delta_a")]
    pub delta_a: f64,
    pub g: f64,
    pub kappa: f64,
}

impl Default for PumpConfig {
    fn default() -> Self {
        Self {
            pump_mode: PumpMode::CavityPumped,
            eta: 1.0,
            omega: 1.0,
            delta_a: -1.0,
            g: 1.0,
            kappa: 1.0,
        }
    }
}

impl PumpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::invalid("kappa", "must be positive"));
        }
        match self.pump_mode {
            PumpMode::CavityPumped if !(self.eta >= 0.0) => {
                Err(Error::invalid("eta", "cavity pumping needs eta >= 0"))
            }
            PumpMode::AtomPumped if self.delta_a == 0.0 || !self.delta_a.is_finite() => {
                Err(Error::invalid("Delta_a", "atom pumping needs a finite nonzero Delta_a"))
            }
            _ => Ok(()),
        }
    }

    pub fn profile(&self) -> PumpProfile {
        match self.pump_mode {
            PumpMode::CavityPumped => PumpProfile::Constant { eta: self.eta },
            PumpMode::AtomPumped => PumpProfile::AtomPumped {
                omega: self.omega,
                g: self.g,
                delta_a: self.delta_a,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// In E_r.
    pub v0: f64,
    #[serde(rename = "C")]
    pub cooperativity: f64,
    pub delta_c_prime: f64,
}

/// `delta_c' = delta_c/kappa`, `C = U0/kappa`, and `v0 = hbar eta^2/kappa`
/// (cavity pumped) or `hbar Omega^2 delta_c'/Delta_a` (atom pumped), in E_r
/// given `hbar kappa = kappa_over_er * E_r`.
pub fn map_physical_params(
    pump: &PumpConfig,
    u0: f64,
    delta_c: f64,
    kappa_over_er: f64,
) -> Result<ModelParams> {
    pump.validate()?;
    if !(kappa_over_er > 0.0) {
        return Err(Error::invalid("kappa_over_er", "must be positive"));
    }
    let kappa = pump.kappa;
    let delta_c_prime = delta_c / kappa;
    let cooperativity = u0 / kappa;
    let v0 = match pump.pump_mode {
        PumpMode::CavityPumped => (pump.eta / kappa).powi(2) * kappa_over_er,
        PumpMode::AtomPumped => {
            (pump.omega / kappa).powi(2) / (pump.delta_a / kappa) * delta_c_prime * kappa_over_er
        }
    };
    if v0 < 0.0 {
        return Err(Error::invalid(
            "Delta_a",
            format!(
                "atom pumping gives v0 = {v0} < 0 for delta_c' = {delta_c_prime}; flip the sign of Delta_a"
            ),
        ));
    }
    Ok(ModelParams {
        v0,
        cooperativity,
        delta_c_prime,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// Aubry-Andre onsite energies.
    Aa,
    /// Cavity potential from model parameters `(v0, C, delta_c')`.
    Cavity,
    /// Cavity potential from `(pump, U0, delta_c)`.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum V0Units {
    /// Multiples of the hopping of the lattice in use.
    T,
    Er,
    /// Multiples of the analytic critical strength: `2t` for the
    /// Aubry-Andre chain, `(4t/alpha)(delta_c'^2 + 1)/|C|` for the cavity.
    Vc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PotentialConfig {
    pub mode: ModelKind,
    pub v0: f64,
    pub v0_units: V0Units,
    #[serde(rename = "C")]
    pub cooperativity: f64,
    pub delta_c_prime: f64,
    #[serde(rename = "U0")]
    pub u0: f64,
    pub delta_c: f64,
}

impl Default for PotentialConfig {
    fn default() -> Self {
        Self {
            mode: ModelKind::Cavity,
            v0: 4.0,
            v0_units: V0Units::T,
            cooperativity: -0.5,
            delta_c_prime: 0.0,
            u0: -1.0,
            delta_c: 0.0,
        }
    }
}

/// Parameters of one model instance after unit conversion and mapping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPoint {
    pub potential: EffectivePotential,
    /// `(zeta, delta_c, U0, kappa)` for the photon number, when defined.
    pub cavity: Option<(PumpProfile, f64, f64, f64)>,
}

impl PotentialConfig {
    /// Resolves the model for lattice `wb`, applying axis overrides.
    pub fn resolve(
        &self,
        pump: &PumpConfig,
        kappa_over_er: f64,
        wb: &WannierBasis,
        overrides: &[(AxisName, f64)],
    ) -> Result<ResolvedPoint> {
        let mut cfg = *self;
        let mut pump = *pump;
        for &(name, value) in overrides {
            match name {
                AxisName::V0 => cfg.v0 = value,
                AxisName::C => cfg.cooperativity = value,
                AxisName::DeltaCPrime => cfg.delta_c_prime = value,
                AxisName::Eta => pump.eta = value,
                AxisName::U0 => cfg.u0 = value,
                AxisName::DeltaC => cfg.delta_c = value,
                AxisName::W0 => {}
            }
        }
        let beta = wb.beta();
        let v0_er = |v0: f64| -> Result<f64> {
            match cfg.v0_units {
                V0Units::T => Ok(v0 * wb.t()),
                V0Units::Er => Ok(v0),
                V0Units::Vc if cfg.mode == ModelKind::Aa => Ok(v0 * 2.0 * wb.t()),
                V0Units::Vc => Ok(v0
                    * critical_v_cav(wb.t(), wb.alpha(), cfg.delta_c_prime, cfg.cooperativity)?),
            }
        };
        match cfg.mode {
            ModelKind::Aa => Ok(ResolvedPoint {
                potential: EffectivePotential::aubry_andre(v0_er(cfg.v0)?, beta)?,
                cavity: None,
            }),
            ModelKind::Cavity => {
                let v0 = v0_er(cfg.v0)?;
                let potential =
                    EffectivePotential::cavity(v0, cfg.cooperativity, cfg.delta_c_prime, beta)?;
                let zeta = match pump.pump_mode {
                    PumpMode::CavityPumped => PumpProfile::Constant {
                        eta: pump.kappa * (v0 / kappa_over_er).sqrt(),
                    },
                    PumpMode::AtomPumped => pump.profile(),
                };
                Ok(ResolvedPoint {
                    potential,
                    cavity: Some((
                        zeta,
                        cfg.delta_c_prime * pump.kappa,
                        cfg.cooperativity * pump.kappa,
                        pump.kappa,
                    )),
                })
            }
            ModelKind::Physical => {
                let mp = map_physical_params(&pump, cfg.u0, cfg.delta_c, kappa_over_er)?;
                Ok(ResolvedPoint {
                    potential: EffectivePotential::cavity(
                        mp.v0,
                        mp.cooperativity,
                        mp.delta_c_prime,
                        beta,
                    )?,
                    cavity: Some((pump.profile(), cfg.delta_c, cfg.u0, pump.kappa)),
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AxisName {
    #[serde(rename = "v0")]
    V0,
    #[serde(rename = "C")]
    C,
    #[serde(rename = "delta_c_prime")]
    DeltaCPrime,
    #[serde(rename = "eta")]
    Eta,
    #[serde(rename = "U0")]
    U0,
    #[serde(rename = "delta_c")]
    DeltaC,
    #[serde(rename = "W0")]
    W0,
}

impl AxisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisName::V0 => "v0",
            AxisName::C => "C",
            AxisName::DeltaCPrime => "delta_c_prime",
            AxisName::Eta => "eta",
            AxisName::U0 => "U0",
            AxisName::DeltaC => "delta_c",
            AxisName::W0 => "W0",
        }
    }

    fn allowed_for(&self, kind: ModelKind) -> bool {
        use AxisName::*;
        match kind {
            ModelKind::Aa => matches!(self, V0 | W0),
            ModelKind::Cavity => matches!(self, V0 | C | DeltaCPrime | W0),
            ModelKind::Physical => matches!(self, Eta | U0 | DeltaC | W0),
        }
    }
}

impl fmt::Display for AxisName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    #[serde(default)]
    pub spacing: Spacing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Explicit values; takes precedence over start/stop/count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Axis {
    pub fn linear(name: AxisName, start: f64, stop: f64, count: usize) -> Self {
        Self {
            name,
            spacing: Spacing::Linear,
            start: Some(start),
            stop: Some(stop),
            count: Some(count),
            values: None,
        }
    }

    pub fn log(name: AxisName, start: f64, stop: f64, count: usize) -> Self {
        Self {
            spacing: Spacing::Log,
            ..Self::linear(name, start, stop, count)
        }
    }

    pub fn explicit(name: AxisName, values: Vec<f64>) -> Self {
        Self {
            name,
            spacing: Spacing::Linear,
            start: None,
            stop: None,
            count: None,
            values: Some(values),
        }
    }

    pub fn single(name: AxisName, value: f64) -> Self {
        Self::explicit(name, vec![value])
    }

    pub fn grid(&self) -> Result<Vec<f64>> {
        if let Some(v) = &self.values {
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid("values", format!("non-finite value on axis {}", self.name)));
            }
            return Ok(v.clone());
        }
        let (Some(start), Some(stop), Some(count)) = (self.start, self.stop, self.count) else {
            return Err(Error::invalid(
                "axis",
                format!("axis {} needs either values or start/stop/count", self.name),
            ));
        };
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::invalid("axis", format!("axis {} bounds must be finite", self.name)));
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        let frac = |k: usize| k as f64 / (count - 1) as f64;
        match self.spacing {
            Spacing::Linear => Ok((0..count).map(|k| start + (stop - start) * frac(k)).collect()),
            Spacing::Log => {
                if !(start > 0.0 && stop > 0.0) {
                    return Err(Error::invalid(
                        "spacing",
                        format!("log axis {} needs positive bounds", self.name),
                    ));
                }
                let (a, b) = (start.ln(), stop.ln());
                Ok((0..count).map(|k| (a + (b - a) * frac(k)).exp()).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    Ipr,
    Gamma,
    Nbar,
    Vc,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default = "default_name")]
    pub name: String,
    pub axis1: Axis,
    pub axis2: Axis,
    #[serde(default)]
    pub potential: PotentialConfig,
    #[serde(default)]
    pub pump: PumpConfig,
    #[serde(default = "default_kappa_over_er")]
    pub kappa_over_er: f64,
    #[serde(default)]
    pub lattice: LatticeSpec,
    #[serde(default = "default_sites")]
    pub sites: usize,
    #[serde(default = "default_observables")]
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub fit: FitOptions,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_name() -> String {
    "sweep".into()
}
pub(crate) fn default_kappa_over_er() -> f64 {
    1.0
}
pub(crate) fn default_sites() -> usize {
    233
}
fn default_observables() -> Vec<Observable> {
    vec![Observable::Ipr]
}

impl SweepSpec {
    pub fn new(name: impl Into<String>, axis1: Axis, axis2: Axis) -> Self {
        Self {
            name: name.into(),
            axis1,
            axis2,
            potential: PotentialConfig::default(),
            pump: PumpConfig::default(),
            kappa_over_er: default_kappa_over_er(),
            lattice: LatticeSpec::default(),
            sites: default_sites(),
            observables: default_observables(),
            fit: FitOptions::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn wants(&self, obs: Observable) -> bool {
        self.observables.contains(&obs)
    }

    pub fn file_stem(&self) -> String {
        format!("{}_{}x{}", self.name, self.axis1.name, self.axis2.name)
    }

    pub fn validate(&self) -> Result<()> {
        self.lattice.validate()?;
        self.pump.validate()?;
        if self.sites < 3 {
            return Err(Error::invalid("sites", "need at least 3 sites"));
        }
        if self.axis1.name == self.axis2.name {
            return Err(Error::invalid("axis2", format!("duplicates axis1 ({})", self.axis1.name)));
        }
        for axis in [&self.axis1, &self.axis2] {
            if !axis.name.allowed_for(self.potential.mode) {
                return Err(Error::invalid(
                    "axis",
                    format!("axis {} is not a parameter of mode {:?}", axis.name, self.potential.mode),
                ));
            }
            axis.grid()?;
        }
        if self.wants(Observable::Vc)
            && self.axis1.name != AxisName::V0
            && self.axis2.name != AxisName::V0
        {
            return Err(Error::invalid("observables", "vc needs a v0 axis"));
        }
        if self.name.contains(['/', '\\']) {
            return Err(Error::invalid("name", "must not contain path separators"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    pub axis1: f64,
    pub axis2: f64,
    pub v0: f64,
    #[serde(rename = "C")]
    pub cooperativity: f64,
    pub delta_c_prime: f64,
    pub e0: f64,
    pub ipr: f64,
    pub gamma: Option<f64>,
    pub gamma_err: Option<f64>,
    pub fit_r2: Option<f64>,
    pub nbar: Option<f64>,
    pub vc: Option<f64>,
    pub vc_analytic: Option<f64>,
    pub flags: Vec<String>,
}

impl Record {
    pub fn failed(&self) -> bool {
        self.flags.iter().any(|f| f.starts_with("error"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeConstants {
    #[serde(rename = "W0")]
    pub w0: f64,
    pub t: f64,
    pub t_band: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
}

impl From<&WannierBasis> for LatticeConstants {
    fn from(wb: &WannierBasis) -> Self {
        let c = wb.constants();
        Self {
            w0: wb.depth(),
            t: wb.t(),
            t_band: wb.t_band(),
            a: c.a,
            b: c.b,
            alpha: c.alpha,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxisMeta {
    pub name: AxisName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetadata {
    pub name: String,
    pub code_version: String,
    pub timestamp_unix: u64,
    pub axis1: AxisMeta,
    pub axis2: AxisMeta,
    pub lattice: Vec<LatticeConstants>,
    /// "default" when the built-in lattice depth was used.
    pub lattice_depth_source: String,
    pub sites: usize,
    pub vc_method: String,
    pub spec: SweepSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective_config: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub records: Vec<Record>,
    pub metadata: SweepMetadata,
}

impl SweepResult {
    pub fn failure_fraction(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.failed()).count() as f64 / self.records.len() as f64
    }
}

pub type ProgressFn = dyn Fn(usize, usize) + Sync;

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    run_sweep_with(spec, None, None)
}

struct Context<'a> {
    spec: &'a SweepSpec,
    bases: BTreeMap<u64, std::result::Result<WannierBasis, String>>,
}

impl Context<'_> {
    fn basis(&self, w0: f64) -> std::result::Result<&WannierBasis, String> {
        match self.bases.get(&w0.to_bits()) {
            Some(Ok(wb)) => Ok(wb),
            Some(Err(e)) => Err(e.clone()),
            None => Err(format!("no lattice basis for W0 = {w0}")),
        }
    }

    fn evaluate(&self, a1: f64, a2: f64) -> Record {
        let spec = self.spec;
        let overrides = [(spec.axis1.name, a1), (spec.axis2.name, a2)];
        let w0 = overrides
            .iter()
            .find(|(n, _)| *n == AxisName::W0)
            .map_or(spec.lattice.depth_w0, |(_, v)| *v);
        let mut rec = Record {
            axis1: a1,
            axis2: a2,
            v0: f64::NAN,
            cooperativity: f64::NAN,
            delta_c_prime: f64::NAN,
            e0: f64::NAN,
            ipr: f64::NAN,
            gamma: None,
            gamma_err: None,
            fit_r2: None,
            nbar: None,
            vc: None,
            vc_analytic: None,
            flags: Vec::new(),
        };
        if let Err(msg) = self.fill(&mut rec, w0, &overrides) {
            rec.flags.push(format!("error:{}", sanitize(&msg)));
        }
        rec
    }

    fn fill(&self, rec: &mut Record, w0: f64, overrides: &[(AxisName, f64)]) -> std::result::Result<(), String> {
        let spec = self.spec;
        let wb = self.basis(w0)?;
        let point = spec
            .potential
            .resolve(&spec.pump, spec.kappa_over_er, wb, overrides)
            .map_err(|e| e.to_string())?;
        let pot = point.potential;
        rec.v0 = pot.v0;
        rec.cooperativity = pot.cooperativity;
        rec.delta_c_prime = pot.delta_c_prime;
        let onsite = if pot.is_cavity() {
            onsite_cavity(wb, &pot, spec.sites)
        } else {
            onsite_aa(pot.v0, pot.beta, spec.sites)
        }
        .map_err(|e| e.to_string())?;
        let problem = HubbardProblem::new(wb.t(), onsite).map_err(|e| e.to_string())?;
        let gs = ground_state_with(&problem, &spec.solver).map_err(|e| e.to_string())?;
        if gs.method == SolveMethod::QlFallback {
            rec.flags.push("ql_fallback".into());
        }
        rec.e0 = gs.energy;
        rec.ipr = ipr(&gs);
        if spec.wants(Observable::Gamma) {
            let m = lyapunov_fit(&gs, &spec.fit);
            rec.fit_r2 = Some(m.fit_r2);
            rec.gamma = m.lyapunov_gamma;
            rec.gamma_err = m.gamma_err;
            if m.lyapunov_gamma.is_none() {
                rec.flags.push("gamma_absent".into());
            } else if m.asymmetric {
                rec.flags.push("fit_asymmetric".into());
            }
        }
        if spec.wants(Observable::Nbar) {
            match point.cavity {
                Some((zeta, delta_c, u0, kappa)) => {
                    let n = photon_number(&gs, wb, &zeta, delta_c, u0, kappa).map_err(|e| e.to_string())?;
                    rec.nbar = Some(n.mean_photon_number);
                }
                None => rec.flags.push("nbar_unavailable".into()),
            }
        }
        if spec.wants(Observable::Vc) {
            rec.vc_analytic = if !pot.is_cavity() {
                Some(2.0 * wb.t())
            } else if pot.cooperativity != 0.0 {
                critical_v_cav(wb.t(), wb.alpha(), pot.delta_c_prime, pot.cooperativity).ok()
            } else {
                None
            };
        }
        Ok(())
    }
}

fn sanitize(msg: &str) -> String {
    msg.replace([',', '|', '\n', '"'], ";")
}

#[cfg(feature = "parallel")]
fn evaluate_all(
    ctx: &Context<'_>,
    points: &[(f64, f64)],
    workers: Option<usize>,
    progress: Option<&ProgressFn>,
) -> Result<Vec<Record>> {
    use rayon::prelude::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    let done = AtomicUsize::new(0);
    let total = points.len();
    let job = || {
        points
            .par_iter()
            .map(|&(a1, a2)| {
                let rec = ctx.evaluate(a1, a2);
                let k = done.fetch_add(1, Ordering::Relaxed) + 1;
                if let Some(p) = progress {
                    p(k, total);
                }
                rec
            })
            .collect()
    };
    match workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::invalid("workers", e.to_string()))?;
            Ok(pool.install(job))
        }
        None => Ok(job()),
    }
}

#[cfg(not(feature = "parallel"))]
fn evaluate_all(
    ctx: &Context<'_>,
    points: &[(f64, f64)],
    _workers: Option<usize>,
    progress: Option<&ProgressFn>,
) -> Result<Vec<Record>> {
    let total = points.len();
    Ok(points
        .iter()
        .enumerate()
        .map(|(k, &(a1, a2))| {
            let rec = ctx.evaluate(a1, a2);
            if let Some(p) = progress {
                p(k + 1, total);
            }
            rec
        })
        .collect())
}

/// Runs every grid point (row-major over axis1 then axis2). Per-point
/// failures are recorded in the record flags. The output does not depend
/// on `workers`.
pub fn run_sweep_with(
    spec: &SweepSpec,
    workers: Option<usize>,
    progress: Option<&ProgressFn>,
) -> Result<SweepResult> {
    spec.validate()?;
    let g1 = spec.axis1.grid()?;
    let g2 = spec.axis2.grid()?;

    let depths: Vec<f64> = if spec.axis1.name == AxisName::W0 {
        g1.clone()
    } else if spec.axis2.name == AxisName::W0 {
        g2.clone()
    } else {
        vec![spec.lattice.depth_w0]
    };
    let mut bases = BTreeMap::new();
    for w0 in depths {
        bases.entry(w0.to_bits()).or_insert_with(|| {
            let lattice = LatticeSpec {
                depth_w0: w0,
                ..spec.lattice.clone()
            };
            wannier_for(&lattice).map_err(|e| e.to_string())
        });
    }
    let ctx = Context { spec, bases };

    let points: Vec<(f64, f64)> = g1
        .iter()
        .flat_map(|&a| g2.iter().map(move |&b| (a, b)))
        .collect();
    let mut records = evaluate_all(&ctx, &points, workers, progress)?;

    if spec.wants(Observable::Vc) && !records.is_empty() {
        attach_transitions(spec, &mut records, g1.len(), g2.len());
    }

    let lattice = ctx
        .bases
        .values()
        .filter_map(|b| b.as_ref().ok())
        .map(LatticeConstants::from)
        .collect();
    let metadata = SweepMetadata {
        name: spec.name.clone(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp_unix: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        axis1: AxisMeta {
            name: spec.axis1.name,
            values: g1,
        },
        axis2: AxisMeta {
            name: spec.axis2.name,
            values: g2,
        },
        lattice,
        lattice_depth_source: if spec.lattice.depth_w0 == LatticeSpec::default().depth_w0 {
            "default".into()
        } else {
            "configured".into()
        },
        sites: spec.sites,
        vc_method: TRANSITION_METHOD.into(),
        spec: spec.clone(),
        effective_config: None,
    };
    Ok(SweepResult { records, metadata })
}

/// Runs `detect_transition` along every v0 line and stores the result in
/// each record of the line.
fn attach_transitions(spec: &SweepSpec, records: &mut [Record], n1: usize, n2: usize) {
    let v0_first = spec.axis1.name == AxisName::V0;
    let (lines, along) = if v0_first { (n2, n1) } else { (n1, n2) };
    let index = |line: usize, k: usize| if v0_first { k * n2 + line } else { line * n2 + k };
    for line in 0..lines {
        let idx: Vec<usize> = (0..along).map(|k| index(line, k)).collect();
        let v0: Vec<f64> = idx.iter().map(|&i| records[i].v0).collect();
        let iprs: Vec<f64> = idx.iter().map(|&i| records[i].ipr).collect();
        let analytic = idx.iter().find_map(|&i| records[i].vc_analytic);
        let flag = match detect_transition(&v0, &iprs, analytic) {
            Ok(est) => {
                for &i in &idx {
                    records[i].vc = Some(est.v_c_numerical);
                }
                (!est.resolved).then(|| "vc_unresolved".to_string())
            }
            Err(e) => Some(format!("vc_error:{}", sanitize(&e.to_string()))),
        };
        if let Some(f) = flag {
            for &i in &idx {
                records[i].flags.push(f.clone());
            }
        }
    }
}

pub fn csv_header(result: &SweepResult) -> Vec<String> {
    let mut h = vec![
        format!("axis1_{}", result.metadata.axis1.name),
        format!("axis2_{}", result.metadata.axis2.name),
    ];
    h.extend(
        [
            "v0", "C", "delta_c_prime", "E0", "ipr", "gamma", "gamma_err", "fit_r2", "nbar", "vc",
            "vc_analytic", "flags",
        ]
        .map(String::from),
    );
    h
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes the records as CSV at `path` and the metadata as `path` with a
/// `.json` extension. Returns the sidecar path.
pub fn export_csv(result: &SweepResult, path: &Path) -> Result<PathBuf> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(csv_header(result)).map_err(csv_err)?;
    for r in &result.records {
        w.write_record([
            fmt_f64(r.axis1),
            fmt_f64(r.axis2),
            fmt_f64(r.v0),
            fmt_f64(r.cooperativity),
            fmt_f64(r.delta_c_prime),
            fmt_f64(r.e0),
            fmt_f64(r.ipr),
            fmt_opt(r.gamma),
            fmt_opt(r.gamma_err),
            fmt_opt(r.fit_r2),
            fmt_opt(r.nbar),
            fmt_opt(r.vc),
            fmt_opt(r.vc_analytic),
            r.flags.join("|"),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let sidecar = path.with_extension("json");
    let doc = serde_json::json!({ "metadata": result.metadata });
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(&sidecar, text).map_err(|e| Error::io(&sidecar, e))?;
    Ok(sidecar)
}

/// Parses a CSV written by [`export_csv`].
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Record>)> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rd = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = rd.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|_| Error::invalid("csv", format!("bad number {s:?} in {}", path.display())))
    };
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    let mut records = Vec::new();
    for row in rd.records() {
        let row = row.map_err(csv_err)?;
        if row.len() != 14 {
            return Err(Error::invalid("csv", format!("expected 14 fields, got {}", row.len())));
        }
        records.push(Record {
            axis1: num(&row[0])?,
            axis2: num(&row[1])?,
            v0: num(&row[2])?,
            cooperativity: num(&row[3])?,
            delta_c_prime: num(&row[4])?,
            e0: num(&row[5])?,
            ipr: num(&row[6])?,
            gamma: opt(&row[7])?,
            gamma_err: opt(&row[8])?,
            fit_r2: opt(&row[9])?,
            nbar: opt(&row[10])?,
            vc: opt(&row[11])?,
            vc_analytic: opt(&row[12])?,
            flags: if row[13].is_empty() {
                vec![]
            } else {
                row[13].split('|').map(String::from).collect()
            },
        });
    }
    Ok((header, records))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mapping_reference_points() {
        let pump = PumpConfig {
            eta: 0.0,
            ..PumpConfig::default()
        };
        assert_eq!(map_physical_params(&pump, 0.0, 0.0, 1.0).unwrap().v0, 0.0);
        let pump = PumpConfig {
            eta: 1.0,
            kappa: 1.0,
            ..PumpConfig::default()
        };
        let mp = map_physical_params(&pump, -1.0, -5.5, 1.0).unwrap();
        assert_eq!(mp.v0, 1.0);
        assert_eq!(mp.cooperativity, -1.0);
        assert_eq!(mp.delta_c_prime, -5.5);
    }

    #[test]
    fn atom_pumping_sign() {
        let pump = PumpConfig {
            pump_mode: PumpMode::AtomPumped,
            omega: 2.0,
            delta_a: -10.0,
            ..PumpConfig::default()
        };
        let mp = map_physical_params(&pump, -1.0, -2.0, 1.0).unwrap();
        assert!((mp.v0 - 0.8).abs() < 1e-15);
        let err = map_physical_params(&pump, -1.0, 2.0, 1.0).unwrap_err().to_string();
        assert!(err.contains("flip the sign"), "{err}");
        let zero = PumpConfig {
            delta_a: 0.0,
            ..pump
        };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn axis_grids() {
        let g = Axis::log(AxisName::V0, 1.0, 100.0, 3).grid().unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        let g = Axis::linear(AxisName::C, -4.0, -0.1, 40).grid().unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], -4.0);
        assert!(Axis::log(AxisName::C, -1.0, 1.0, 3).grid().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut spec = SweepSpec::new("x", Axis::single(AxisName::V0, 1.0), Axis::single(AxisName::V0, 2.0));
        assert!(spec.validate().is_err());
        spec.axis2 = Axis::single(AxisName::Eta, 1.0);
        assert!(spec.validate().is_err());
        spec.axis2 = Axis::single(AxisName::C, -1.0);
        assert!(spec.validate().is_ok());
        spec.potential.mode = ModelKind::Aa;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn unknown_spec_keys_rejected() {
        let text = r#"{"axis1": {"name": "v0", "values": [1.0]}, "axis2": {"name": "C", "values": [-1.0]}, "lattic": {}}"#;
        let err = serde_json::from_str::<SweepSpec>(text).unwrap_err().to_string();
        assert!(err.contains("lattic"), "{err}");
    }
}
