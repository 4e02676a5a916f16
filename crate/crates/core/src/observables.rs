//! Localization diagnostics and the intracavity photon number.

use serde::{Deserialize, Serialize};

use crate::bands::{WannierBasis, SITE_SPACING};
use crate::error::{Error, Result};
use crate::model::{GroundState, QuadratureWeights};

/// Inverse participation ratio `sum_n |psi_n|^4`.
pub fn ipr(gs: &GroundState) -> f64 {
    gs.amplitudes.iter().map(|a| a.powi(4)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitOptions {
    /// Fit window keeps sites denser than this multiple of the background.
    pub background_factor: f64,
    /// Densities below this are treated as numerical noise.
    pub density_floor: f64,
    pub min_window: usize,
    pub min_r2: f64,
    /// Minimum decades of decay between the peak and the window edge.
    pub min_decades: f64,
    /// Relative left/right slope mismatch that flags the state.
    pub asymmetry_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            background_factor: 10.0,
            density_floor: 1e-280,
            min_window: 10,
            min_r2: 0.9,
            min_decades: 3.0,
            asymmetry_tolerance: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SideFit {
    pub gamma: f64,
    pub gamma_err: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationMetrics {
    pub ipr: f64,
    /// Present only for a resolved exponential profile.
    pub lyapunov_gamma: Option<f64>,
    pub gamma_err: Option<f64>,
    pub fit_r2: f64,
    pub peak_site: usize,
    pub background_level: f64,
    pub window: (usize, usize),
    pub left: Option<SideFit>,
    pub right: Option<SideFit>,
    pub asymmetric: bool,
}

impl LocalizationMetrics {
    pub fn window_len(&self) -> usize {
        self.window.1 + 1 - self.window.0
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct LineFit {
    intercept: f64,
    slope: f64,
    slope_err: f64,
}

fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let n = points.len() as f64;
    if points.len() < 3 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    let slope_err = (ss_res / (n - 2.0) / sxx).sqrt();
    Some(LineFit {
        intercept,
        slope,
        slope_err,
    })
}

/// Fits `log|psi_n|^2 = c - 2 gamma |n - n0|` separately on each side of the
/// peak and averages the two slopes.
pub fn lyapunov_fit(gs: &GroundState, opts: &FitOptions) -> LocalizationMetrics {
    let density = gs.densities();
    let l = density.len();
    let peak = density
        .iter()
        .enumerate()
        .fold(0, |best, (i, d)| if *d > density[best] { i } else { best });

    let mut by_distance: Vec<usize> = (0..l).collect();
    by_distance.sort_by_key(|&i| std::cmp::Reverse(i.abs_diff(peak)));
    let far = l.div_ceil(4);
    let background = median(by_distance[..far].iter().map(|&i| density[i]).collect());

    let threshold = (opts.background_factor * background).max(opts.density_floor);
    let mut lo = peak;
    while lo > 0 && density[lo - 1] > threshold {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < l && density[hi + 1] > threshold {
        hi += 1;
    }

    let side = |range: Vec<usize>| -> Option<(SideFit, LineFit, Vec<(f64, f64)>)> {
        let pts: Vec<(f64, f64)> = range
            .into_iter()
            .map(|i| (i.abs_diff(peak) as f64, density[i].ln()))
            .collect();
        let fit = fit_line(&pts)?;
        Some((
            SideFit {
                gamma: -fit.slope / 2.0,
                gamma_err: fit.slope_err / 2.0,
                points: pts.len(),
            },
            fit,
            pts,
        ))
    };
    let left = side((lo..=peak).rev().collect());
    let right = side((peak..=hi).collect());

    // r^2 of the piecewise model over the whole window
    let ys: Vec<f64> = (lo..=hi).map(|i| density[i].ln()).collect();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let mut ss_res = 0.0;
    for (idx, i) in (lo..=hi).enumerate() {
        let d = i.abs_diff(peak) as f64;
        let model = if i < peak { left.as_ref() } else { right.as_ref() }
            .or(left.as_ref())
            .or(right.as_ref())
            .map(|(_, f, _)| f.intercept + f.slope * d);
        if let Some(m) = model {
            ss_res += (ys[idx] - m).powi(2);
        }
    }
    let fit_r2 = if ss_tot > 0.0 && (left.is_some() || right.is_some()) {
        1.0 - ss_res / ss_tot
    } else {
        0.0
    };

    let sides: Vec<SideFit> = [&left, &right].iter().filter_map(|s| s.as_ref().map(|s| s.0)).collect();
    let (gamma, gamma_err) = match sides.as_slice() {
        [] => (None, None),
        [one] => (Some(one.gamma), Some(one.gamma_err)),
        [a, b] => (
            Some(0.5 * (a.gamma + b.gamma)),
            Some(0.5 * a.gamma_err.hypot(b.gamma_err)),
        ),
        _ => unreachable!(),
    };
    let asymmetric = match (&left, &right) {
        (Some(a), Some(b)) => {
            let m = 0.5 * (a.0.gamma + b.0.gamma);
            m != 0.0 && (a.0.gamma - b.0.gamma).abs() / m.abs() > opts.asymmetry_tolerance
        }
        _ => false,
    };

    let window_len = hi + 1 - lo;
    let decades = (density[peak] / threshold).log10();
    let resolved = window_len >= opts.min_window
        && fit_r2 >= opts.min_r2
        && decades >= opts.min_decades
        && gamma.is_some_and(|g| g > 0.0);

    LocalizationMetrics {
        ipr: ipr(gs),
        lyapunov_gamma: gamma.filter(|_| resolved),
        gamma_err: gamma_err.filter(|_| resolved),
        fit_r2,
        peak_site: peak + 1,
        background_level: background,
        window: (lo + 1, hi + 1),
        left: left.map(|s| s.0),
        right: right.map(|s| s.0),
        asymmetric,
    }
}

/// `log(v0 / v_c)`, valid in the localized phase.
pub fn thouless_reference(v0: f64, v_c: f64) -> Result<f64> {
    if !(v_c > 0.0) {
        return Err(Error::invalid("v_c", "must be positive"));
    }
    if v0 <= v_c {
        return Err(Error::invalid("v0", format!("Thouless formula needs v0 > v_c, got {v0} <= {v_c}")));
    }
    Ok((v0 / v_c).ln())
}

/// `(4t/alpha) (delta_c'^2 + 1) / |C|`.
pub fn critical_v_cav(t: f64, alpha: f64, delta_c_prime: f64, cooperativity: f64) -> Result<f64> {
    if cooperativity == 0.0 {
        return Err(Error::invalid("C", "no cavity potential at C = 0"));
    }
    if !(alpha > 0.0) {
        return Err(Error::invalid("alpha", "must be positive"));
    }
    Ok(4.0 * t / alpha * (delta_c_prime * delta_c_prime + 1.0) / cooperativity.abs())
}

pub const TRANSITION_METHOD: &str = "steepest d(log IPR)/d(log v0) on the scanned grid; v_c = geometric midpoint of that interval";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionEstimate {
    pub v_c_numerical: f64,
    pub v_c_analytic: Option<f64>,
    pub grid: Vec<f64>,
    pub method: String,
    pub max_slope: f64,
    pub interval: usize,
    /// False when the steepest interval touches the grid boundary.
    pub resolved: bool,
}

/// Locates the steepest rise of `log IPR` against `log v0`. `v_c_analytic`
/// is attached by the caller when the potential is a cavity one.
pub fn detect_transition(v0: &[f64], ipr: &[f64], v_c_analytic: Option<f64>) -> Result<TransitionEstimate> {
    if v0.len() != ipr.len() {
        return Err(Error::invalid("curve", "v0 and IPR arrays differ in length"));
    }
    if v0.len() < 20 {
        return Err(Error::invalid("grid", format!("need >= 20 points, got {}", v0.len())));
    }
    if v0.iter().any(|v| !(*v > 0.0)) || v0.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid", "v0 must be positive and strictly increasing"));
    }
    if v0[v0.len() - 1] / v0[0] < 10.0 * (1.0 - 1e-12) {
        return Err(Error::invalid("grid", "v0 grid must span at least one decade"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for k in 0..v0.len() - 1 {
        let slope = (ipr[k + 1].ln() - ipr[k].ln()) / (v0[k + 1].ln() - v0[k].ln());
        if slope > best.1 {
            best = (k, slope);
        }
    }
    let (k, max_slope) = best;
    Ok(TransitionEstimate {
        v_c_numerical: (v0[k] * v0[k + 1]).sqrt(),
        v_c_analytic,
        grid: v0.to_vec(),
        method: TRANSITION_METHOD.to_string(),
        max_slope,
        interval: k,
        resolved: k > 0 && k + 2 < v0.len(),
    })
}

/// Cavity pump amplitude `zeta(z)`; frequencies in units of kappa's unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PumpProfile {
    /// Pump on the cavity mirror: `zeta = eta`.
    Constant { eta: f64 },
    /// Transverse atom pump: `zeta(z) = cos(beta z) Omega g / Delta_a`.
    AtomPumped { omega: f64, g: f64, delta_a: f64 },
}

impl PumpProfile {
    fn squared(&self, beta: f64, z: f64) -> f64 {
        match *self {
            PumpProfile::Constant { eta } => eta * eta,
            PumpProfile::AtomPumped { omega, g, delta_a } => {
                let amp = (beta * z).cos() * omega * g / delta_a;
                amp * amp
            }
        }
    }

    /// Largest value of `zeta^2`.
    pub fn max_squared(&self) -> f64 {
        match *self {
            PumpProfile::Constant { eta } => eta * eta,
            PumpProfile::AtomPumped { omega, g, delta_a } => (omega * g / delta_a).powi(2),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavityObservables {
    pub mean_photon_number: f64,
}

/// Occupation threshold below which a site is skipped.
const OCCUPATION_CUTOFF: f64 = 1e-12;

/// `n = sum_m |psi_m|^2 int w0(z - z_m)^2 zeta(z)^2 / [(delta_c - U0 cos^2(beta z))^2 + kappa^2] dz`
/// with `z_m = m a`.
pub fn photon_number(
    gs: &GroundState,
    wb: &WannierBasis,
    zeta: &PumpProfile,
    delta_c: f64,
    u0: f64,
    kappa: f64,
) -> Result<CavityObservables> {
    if !(kappa > 0.0) {
        return Err(Error::invalid("kappa", "must be positive"));
    }
    let beta = wb.beta();
    let weights = QuadratureWeights::new(wb);
    let mut total = 0.0;
    for (m, amp) in gs.amplitudes.iter().enumerate() {
        let occ = amp * amp;
        if occ <= OCCUPATION_CUTOFF {
            continue;
        }
        let zm = (m + 1) as f64 * SITE_SPACING;
        total += occ
            * weights.integrate(|u| {
                let z = zm + u;
                let detuning = delta_c - u0 * (beta * z).cos().powi(2);
                zeta.squared(beta, z) / (detuning * detuning + kappa * kappa)
            });
    }
    Ok(CavityObservables {
        mean_photon_number: total,
    })
}
