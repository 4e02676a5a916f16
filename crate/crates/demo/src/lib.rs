//! Browser bindings for the static demo page in `www/`.
//!
//! Every exported function has a plain-Rust twin so the numbers the page
//! draws are covered by native tests.

use cavloc::bands::{wannier_for, LatticeSpec, WannierBasis};
use cavloc::model::{f_eval, ground_state, onsite_aa, onsite_cavity, EffectivePotential, HubbardProblem};
use cavloc::observables::{critical_v_cav, ipr};
use wasm_bindgen::prelude::*;

fn js(e: cavloc::Error) -> JsError {
    JsError::new(&e.to_string())
}

/// Potential built from page controls. `c == 0` selects the Aubry-Andre chain;
/// `v0_over_vc` is relative to the analytic critical strength.
fn potential(wb: &WannierBasis, v0_over_vc: f64, c: f64, delta_c_prime: f64) -> cavloc::Result<EffectivePotential> {
    if c == 0.0 {
        EffectivePotential::aubry_andre(v0_over_vc * 2.0 * wb.t(), wb.beta())
    } else {
        let vc = critical_v_cav(wb.t(), wb.alpha(), delta_c_prime, c)?;
        EffectivePotential::cavity(v0_over_vc * vc, c, delta_c_prime, wb.beta())
    }
}

fn solve(wb: &WannierBasis, pot: &EffectivePotential, sites: usize) -> cavloc::Result<cavloc::GroundState> {
    let onsite = if pot.is_cavity() {
        onsite_cavity(wb, pot, sites)?
    } else {
        onsite_aa(pot.v0, pot.beta, sites)?
    };
    ground_state(&HubbardProblem::new(wb.t(), onsite)?)
}

#[wasm_bindgen]
pub struct Lattice {
    basis: WannierBasis,
}

impl Lattice {
    pub fn build(depth_w0: f64) -> cavloc::Result<Self> {
        Ok(Self {
            basis: wannier_for(&LatticeSpec::with_depth(depth_w0))?,
        })
    }

    pub fn density_profile(&self, v0_over_vc: f64, c: f64, delta_c_prime: f64, sites: usize) -> cavloc::Result<Vec<f64>> {
        let pot = potential(&self.basis, v0_over_vc, c, delta_c_prime)?;
        Ok(solve(&self.basis, &pot, sites)?.densities())
    }

    /// IPR on `count` log-spaced points of `v0/v_c` in `[start, stop]`.
    pub fn ipr_scan(
        &self,
        c: f64,
        delta_c_prime: f64,
        sites: usize,
        start: f64,
        stop: f64,
        count: usize,
    ) -> cavloc::Result<Vec<f64>> {
        log_grid(start, stop, count)
            .into_iter()
            .map(|r| {
                let pot = potential(&self.basis, r, c, delta_c_prime)?;
                Ok(ipr(&solve(&self.basis, &pot, sites)?))
            })
            .collect()
    }
}

#[wasm_bindgen]
impl Lattice {
    #[wasm_bindgen(constructor)]
    pub fn new(depth_w0: f64) -> Result<Lattice, JsError> {
        Lattice::build(depth_w0).map_err(js)
    }

    /// Hopping in E_r.
    pub fn t(&self) -> f64 {
        self.basis.t()
    }

    pub fn alpha(&self) -> f64 {
        self.basis.alpha()
    }

    pub fn density(&self, v0_over_vc: f64, c: f64, delta_c_prime: f64, sites: usize) -> Result<Vec<f64>, JsError> {
        self.density_profile(v0_over_vc, c, delta_c_prime, sites).map_err(js)
    }

    pub fn ipr_curve(
        &self,
        c: f64,
        delta_c_prime: f64,
        sites: usize,
        start: f64,
        stop: f64,
        count: usize,
    ) -> Result<Vec<f64>, JsError> {
        self.ipr_scan(c, delta_c_prime, sites, start, stop, count).map_err(js)
    }

    /// Analytic critical strength in units of `t` (`2` for `c == 0`).
    pub fn vc_over_t(&self, c: f64, delta_c_prime: f64) -> Result<f64, JsError> {
        if c == 0.0 {
            return Ok(2.0);
        }
        critical_v_cav(self.basis.t(), self.basis.alpha(), delta_c_prime, c)
            .map(|v| v / self.basis.t())
            .map_err(js)
    }
}

#[wasm_bindgen]
pub fn log_grid(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let (a, b) = (start.ln(), stop.ln());
            (0..count)
                .map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// `f(x)` on `points` samples of `[0, x_max]` (x in units of 1/k0).
pub fn cavity_profile(c: f64, delta_c_prime: f64, x_max: f64, points: usize) -> cavloc::Result<Vec<f64>> {
    let pot = EffectivePotential::cavity(1.0, c, delta_c_prime, cavloc::bands::golden_beta())?;
    let step = if points > 1 { x_max / (points - 1) as f64 } else { 0.0 };
    (0..points).map(|k| f_eval(&pot, k as f64 * step)).collect()
}

#[wasm_bindgen]
pub fn potential_curve(c: f64, delta_c_prime: f64, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    cavity_profile(c, delta_c_prime, x_max, points).map_err(js)
}
