//! Incommensurate onsite potential and the open-boundary Hubbard chain.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bands::{WannierBasis, SITE_SPACING};
use crate::error::{Error, Result};
use crate::tridiag::{l2, SymTridiagonal};

/// Relative `|w0|` at the window edge above which the quadrature window is
/// considered to cut off the Wannier support.
pub const SUPPORT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialMode {
    /// `v0 cos(2 pi beta n)` directly on the sites.
    Aa,
    /// `v0 arctan(-delta_c' + C cos^2(beta x))`
    CavityCos2,
    /// `v0 arctan(-delta_c' + C sin^2(beta x))`, used for `C > 0`
    CavitySin2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivePotential {
    pub mode: PotentialMode,
    pub v0: f64,
    #[serde(rename = "C")]
    pub cooperativity: f64,
    pub delta_c_prime: f64,
    pub beta: f64,
}

impl EffectivePotential {
    pub fn aubry_andre(v0: f64, beta: f64) -> Result<Self> {
        Self::checked(PotentialMode::Aa, v0, 0.0, 0.0, beta)
    }

    /// Cavity potential; the `sin^2` registration is chosen for `C > 0` so the
    /// deepest well sits where `cos^2(beta x) = 1` sits for `C < 0`.
    pub fn cavity(v0: f64, cooperativity: f64, delta_c_prime: f64, beta: f64) -> Result<Self> {
        let mode = if cooperativity > 0.0 {
            PotentialMode::CavitySin2
        } else {
            PotentialMode::CavityCos2
        };
        Self::checked(mode, v0, cooperativity, delta_c_prime, beta)
    }

    pub fn with_mode(
        mode: PotentialMode,
        v0: f64,
        cooperativity: f64,
        delta_c_prime: f64,
        beta: f64,
    ) -> Result<Self> {
        Self::checked(mode, v0, cooperativity, delta_c_prime, beta)
    }

    fn checked(mode: PotentialMode, v0: f64, c: f64, dc: f64, beta: f64) -> Result<Self> {
        if !(v0 >= 0.0 && v0.is_finite()) {
            return Err(Error::invalid("v0", format!("must be finite and >= 0, got {v0}")));
        }
        if !c.is_finite() {
            return Err(Error::invalid("C", "must be finite"));
        }
        if !dc.is_finite() {
            return Err(Error::invalid("delta_c_prime", "must be finite"));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::invalid("beta", format!("must lie in (0, 1), got {beta}")));
        }
        Ok(Self {
            mode,
            v0,
            cooperativity: c,
            delta_c_prime: dc,
            beta,
        })
    }

    pub fn is_cavity(&self) -> bool {
        self.mode != PotentialMode::Aa
    }

    pub fn with_v0(&self, v0: f64) -> Result<Self> {
        Self::checked(self.mode, v0, self.cooperativity, self.delta_c_prime, self.beta)
    }
}

/// Dimensionless cavity potential `f(x)` (principal branch of arctan).
pub fn f_eval(pot: &EffectivePotential, x: f64) -> Result<f64> {
    let phase = pot.beta * x;
    let profile = match pot.mode {
        PotentialMode::Aa => return Err(Error::NotCavityMode),
        PotentialMode::CavityCos2 => phase.cos().powi(2),
        PotentialMode::CavitySin2 => phase.sin().powi(2),
    };
    Ok((-pot.delta_c_prime + pot.cooperativity * profile).atan())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OnsiteProfile {
    pub values: Vec<f64>,
}

impl OnsiteProfile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shifted(&self, offset: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v + offset).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

fn check_sites(sites: usize) -> Result<()> {
    if sites < 3 {
        return Err(Error::invalid("L", format!("need at least 3 sites, got {sites}")));
    }
    Ok(())
}

/// Site positions `x_n = n a`, `n = 1..=L`, in the cavity frame.
pub fn site_positions(sites: usize) -> impl Iterator<Item = f64> {
    (1..=sites).map(|n| n as f64 * SITE_SPACING)
}

/// `v0 cos(2 pi beta n)` for `n = 1..=L`. No sign restriction on `v0` here.
pub fn onsite_aa(v0: f64, beta: f64, sites: usize) -> Result<OnsiteProfile> {
    check_sites(sites)?;
    Ok(OnsiteProfile {
        values: (1..=sites)
            .map(|n| v0 * (2.0 * std::f64::consts::PI * beta * n as f64).cos())
            .collect(),
    })
}

/// `v0 int w0(u)^2 f(u + x_n) du` on the Wannier grid. The uniform offset
/// `v0 arctan(-delta_c')` is kept.
pub fn onsite_cavity(wb: &WannierBasis, pot: &EffectivePotential, sites: usize) -> Result<OnsiteProfile> {
    check_sites(sites)?;
    onsite_cavity_at(wb, pot, site_positions(sites))
}

/// Same quadrature as [`onsite_cavity`] at arbitrary site positions.
pub fn onsite_cavity_at(
    wb: &WannierBasis,
    pot: &EffectivePotential,
    positions: impl IntoIterator<Item = f64>,
) -> Result<OnsiteProfile> {
    if !pot.is_cavity() {
        return Err(Error::NotCavityMode);
    }
    if wb.edge_decay() > SUPPORT_TOLERANCE {
        return Err(Error::WindowTooSmall {
            sites: wb.window_sites(),
            reason: format!(
                "|w0| at the window edge is {:.2e} of its peak (tolerance {SUPPORT_TOLERANCE:.0e})",
                wb.edge_decay()
            ),
        });
    }
    let weights = QuadratureWeights::new(wb);
    let values = positions
        .into_iter()
        .map(|xn| pot.v0 * weights.integrate(|u| f_eval(pot, xn + u).expect("cavity mode")))
        .collect();
    Ok(OnsiteProfile { values })
}

/// Trapezoid weights `h w0(u)^2`, restricted to where the density matters.
pub(crate) struct QuadratureWeights {
    points: Vec<(f64, f64)>,
}

impl QuadratureWeights {
    pub(crate) fn new(wb: &WannierBasis) -> Self {
        let h = wb.step();
        let w = wb.w0_samples();
        let peak = w.iter().map(|v| v * v).fold(0.0, f64::max);
        let last = w.len() - 1;
        let points = wb
            .grid()
            .iter()
            .zip(w)
            .enumerate()
            .filter(|(_, (_, v))| *v * *v > 1e-20 * peak)
            .map(|(k, (&u, v))| {
                let end = if k == 0 || k == last { 0.5 } else { 1.0 };
                (u, end * h * v * v)
            })
            .collect();
        Self { points }
    }

    pub(crate) fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.points.iter().map(|&(u, wt)| wt * g(u)).sum()
    }
}

/// Open-boundary chain with uniform hopping `t` and onsite energies.
#[derive(Debug, Clone, PartialEq)]
pub struct HubbardProblem {
    pub t: f64,
    pub onsite: OnsiteProfile,
}

impl HubbardProblem {
    pub fn new(t: f64, onsite: OnsiteProfile) -> Result<Self> {
        check_sites(onsite.len())?;
        if !t.is_finite() {
            return Err(Error::invalid("t", "must be finite"));
        }
        if let Some(bad) = onsite.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("onsite", format!("non-finite value at site {}", bad + 1)));
        }
        Ok(Self { t, onsite })
    }

    pub fn sites(&self) -> usize {
        self.onsite.len()
    }
}

/// Diagonal `delta eps_n`, off-diagonal `-t`, no wraparound.
pub fn assemble(problem: &HubbardProblem) -> SymTridiagonal {
    SymTridiagonal {
        diag: problem.onsite.values.clone(),
        off: vec![-problem.t; problem.sites() - 1],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    BisectionInverseIteration,
    QlFallback,
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveMethod::BisectionInverseIteration => "bisection+inverse-iteration",
            SolveMethod::QlFallback => "implicit-ql",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    /// Relative bisection tolerance on the ground energy.
    pub tolerance: f64,
    /// Residual target `||H psi - E psi|| <= residual * ||H||`.
    pub residual: f64,
    pub max_inverse_iterations: usize,
    /// Extra sweeps after convergence, for accurate far tails.
    pub polish_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            residual: 1e-12,
            max_inverse_iterations: 8,
            polish_iterations: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub amplitudes: Vec<f64>,
    pub energy: f64,
    pub method: SolveMethod,
}

impl GroundState {
    pub fn densities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a * a).collect()
    }

    /// Builds a state from arbitrary amplitudes, normalized and sign-fixed.
    /// Handy for synthetic profiles; `energy` is left at zero.
    pub fn from_amplitudes(amplitudes: Vec<f64>) -> Result<Self> {
        let norm = l2(&amplitudes);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("amplitudes", "need a finite nonzero vector"));
        }
        let mut amplitudes: Vec<f64> = amplitudes.into_iter().map(|a| a / norm).collect();
        fix_sign(&mut amplitudes);
        Ok(Self {
            amplitudes,
            energy: 0.0,
            method: SolveMethod::BisectionInverseIteration,
        })
    }
}

fn fix_sign(v: &mut [f64]) {
    let peak = v
        .iter()
        .copied()
        .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
    if peak < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

pub fn ground_state(problem: &HubbardProblem) -> Result<GroundState> {
    ground_state_with(problem, &SolverOptions::default())
}

/// Lowest eigenpair: bisection for the energy, inverse iteration for the
/// vector, implicit QL if inverse iteration stalls.
pub fn ground_state_with(problem: &HubbardProblem, opts: &SolverOptions) -> Result<GroundState> {
    let h = assemble(problem);
    let e0 = h.lowest_eigenvalue(opts.tolerance.min(1e-12));
    let (mut amplitudes, energy, method) =
        match h.inverse_iteration(e0, opts.residual, opts.max_inverse_iterations) {
            Some((mut v, _)) => {
                let rq = h.polish(e0, &mut v, opts.polish_iterations);
                (v, rq, SolveMethod::BisectionInverseIteration)
            }
            None => {
                let (vals, vecs) = h.eigh()?;
                let v = vecs.into_iter().next().expect("non-empty");
                (v, vals[0], SolveMethod::QlFallback)
            }
        };
    fix_sign(&mut amplitudes);
    Ok(GroundState {
        amplitudes,
        energy,
        method,
    })
}

/// Residual `||H psi - E psi||` relative to `||H||_inf`.
pub fn relative_residual(problem: &HubbardProblem, gs: &GroundState) -> f64 {
    let h = assemble(problem);
    let hx = h.matvec(&gs.amplitudes);
    let res = hx
        .iter()
        .zip(&gs.amplitudes)
        .map(|(a, b)| (a - gs.energy * b).powi(2))
        .sum::<f64>()
        .sqrt();
    res / h.norm_inf()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::bands::{golden_beta, wannier_for, LatticeSpec};

    #[test]
    fn f_constant_without_cooperativity() {
        let pot = EffectivePotential::cavity(1.0, 0.0, 0.7, golden_beta()).unwrap();
        for x in [0.0, 1.3, 100.0] {
            assert_eq!(f_eval(&pot, x).unwrap(), (-0.7f64).atan());
        }
    }

    #[test]
    fn f_root_at_half_filling_of_cos2() {
        let beta = golden_beta();
        let pot = EffectivePotential::cavity(1.0, 2.0, 1.0, beta).unwrap();
        // cos^2 = sin^2 = 1/2 at beta x = pi/4
        let x = PI / 4.0 / beta;
        assert!(f_eval(&pot, x).unwrap().abs() < 1e-15);
    }

    #[test]
    fn f_small_c_amplitude() {
        // f - mean -> (C/2) cos(2 beta x) / (dc^2 + 1) as C -> 0
        let beta = golden_beta();
        let c = 1e-5;
        let pot = EffectivePotential::with_mode(PotentialMode::CavityCos2, 1.0, c, 0.0, beta).unwrap();
        let mean = (c / 2.0).atan();
        for x in [0.0, 0.4, 2.2] {
            let got = f_eval(&pot, x).unwrap() - mean;
            let want = c / 2.0 * (2.0 * beta * x).cos();
            assert!((got - want).abs() < 1e-12 * 1e3 * c, "{got} vs {want}");
        }
    }

    #[test]
    fn f_rejects_aa_mode() {
        let pot = EffectivePotential::aubry_andre(1.0, golden_beta()).unwrap();
        assert!(matches!(f_eval(&pot, 0.0), Err(Error::NotCavityMode)));
    }

    #[test]
    fn mode_selected_by_sign_of_c() {
        let b = golden_beta();
        assert_eq!(EffectivePotential::cavity(1.0, 0.5, 0.0, b).unwrap().mode, PotentialMode::CavitySin2);
        assert_eq!(EffectivePotential::cavity(1.0, -0.5, 0.0, b).unwrap().mode, PotentialMode::CavityCos2);
        assert_eq!(EffectivePotential::cavity(1.0, 0.0, 0.0, b).unwrap().mode, PotentialMode::CavityCos2);
        assert!(EffectivePotential::cavity(-1.0, 0.5, 0.0, b).is_err());
    }

    #[test]
    fn aa_profile_values() {
        assert!(onsite_aa(0.0, golden_beta(), 10).unwrap().values.iter().all(|v| *v == 0.0));
        let p = onsite_aa(2.0, golden_beta(), 233).unwrap();
        assert!(p.values.iter().all(|v| v.abs() < 2.0));
        // cos(2 pi 0.6180339887498949) = -0.7373688780783197
        assert!((p.values[0] - 2.0 * -0.737_368_878_078_319_7).abs() < 1e-14);
        assert!(onsite_aa(1.0, 0.5, 2).is_err());
    }

    #[test]
    fn cavity_profile_limits() {
        let wb = wannier_for(&LatticeSpec::default()).unwrap();
        let beta = wb.beta();
        let zero = EffectivePotential::cavity(0.0, -1.0, 0.3, beta).unwrap();
        assert!(onsite_cavity(&wb, &zero, 50).unwrap().values.iter().all(|v| *v == 0.0));
        let flat = EffectivePotential::cavity(2.0, 0.0, 0.3, beta).unwrap();
        let want = 2.0 * (-0.3f64).atan();
        for v in onsite_cavity(&wb, &flat, 50).unwrap().values {
            assert!((v - want).abs() < 1e-12);
        }
        let strong = EffectivePotential::cavity(3.0, -40.0, -1.0, beta).unwrap();
        for v in onsite_cavity(&wb, &strong, 233).unwrap().values {
            assert!(v.abs() <= 3.0 * PI / 2.0);
        }
    }

    #[test]
    fn cavity_profile_rejects_truncated_window() {
        let spec = LatticeSpec {
            window_sites: 1,
            ..LatticeSpec::with_depth(-5.0)
        };
        let wb = wannier_for(&spec).unwrap();
        let pot = EffectivePotential::cavity(1.0, -1.0, 0.0, wb.beta()).unwrap();
        assert!(matches!(onsite_cavity(&wb, &pot, 10), Err(Error::WindowTooSmall { .. })));
    }

    #[test]
    fn three_site_spectrum_and_hermiticity() {
        let p = HubbardProblem::new(1.0, OnsiteProfile { values: vec![0.0; 3] }).unwrap();
        let h = assemble(&p);
        let dense = h.to_dense();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(dense[i][j], dense[j][i]);
            }
        }
        let (vals, _) = h.eigh().unwrap();
        let s = 2f64.sqrt();
        assert!((vals[0] + s).abs() < 1e-14 && vals[1].abs() < 1e-14 && (vals[2] - s).abs() < 1e-14);
    }

    #[test]
    fn no_hopping_gives_onsite_spectrum() {
        let values = vec![0.4, -1.5, 2.0, 0.1];
        let p = HubbardProblem::new(0.0, OnsiteProfile { values: values.clone() }).unwrap();
        let (vals, _) = assemble(&p).eigh().unwrap();
        let mut sorted = values;
        sorted.sort_by(f64::total_cmp);
        assert_eq!(vals, sorted);
        let gs = ground_state(&p).unwrap();
        assert!((gs.energy + 1.5).abs() < 1e-14);
        assert!((gs.amplitudes[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_chain_ground_state_is_a_sine() {
        let l = 233;
        let t = 0.37;
        let p = HubbardProblem::new(t, OnsiteProfile { values: vec![0.0; l] }).unwrap();
        let gs = ground_state(&p).unwrap();
        let e = -2.0 * t * (PI / (l as f64 + 1.0)).cos();
        assert!((gs.energy - e).abs() < 1e-13, "{} {e} {:?}", gs.energy, gs.method);
        let norm = (2.0 / (l as f64 + 1.0)).sqrt();
        for (n, a) in gs.amplitudes.iter().enumerate() {
            let want = norm * (PI * (n + 1) as f64 / (l as f64 + 1.0)).sin();
            assert!((a - want).abs() < 1e-10);
        }
        assert!(relative_residual(&p, &gs) < 1e-10);
    }

    #[test]
    fn single_deep_site_localizes() {
        let mut values = vec![0.0; 101];
        values[40] = -100.0;
        let p = HubbardProblem::new(1.0, OnsiteProfile { values }).unwrap();
        let gs = ground_state(&p).unwrap();
        let peak = gs
            .amplitudes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert_eq!(peak, 40);
        let ipr: f64 = gs.amplitudes.iter().map(|a| a.powi(4)).sum();
        assert!(ipr > 0.95);
    }

    #[test]
    fn too_few_sites_rejected() {
        assert!(HubbardProblem::new(1.0, OnsiteProfile { values: vec![0.0; 2] }).is_err());
    }
}
