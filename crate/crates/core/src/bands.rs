//! Lowest Bloch band of the lattice `W0 cos^2(k0 x)` and its real Wannier
//! function.
//!
//! Units throughout: energies in the recoil energy `E_r = hbar^2 k0^2 / 2m`,
//! lengths in `1/k0`. The lattice spacing is therefore `a = pi` and the
//! kinetic operator is `-d^2/dx^2`.
//!
//! In the plane-wave basis `exp(i (q + 2j) x)`, `j = -M..=M`, the Bloch
//! Hamiltonian is real symmetric tridiagonal: diagonal `(q + 2j)^2 + W0/2`,
//! off-diagonal `W0/4`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{f_eval, EffectivePotential};
use crate::tridiag::SymTridiagonal;

/// Lattice spacing `pi / k0` in units of `1/k0`.
pub const SITE_SPACING: f64 = PI;

/// Inverse golden ratio, the default incommensurate ratio `k / k0`.
pub fn golden_beta() -> f64 {
    (5f64.sqrt() - 1.0) / 2.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeSpec {
    /// Lattice depth in E_r. Negative depths put the minima at `x = 0`.
    #[serde(rename = "depth_W0")]
    pub depth_w0: f64,
    /// Plane waves span reciprocal vectors `-M..=M`.
    #[serde(rename = "planewave_cutoff_M")]
    pub planewave_cutoff_m: usize,
    #[serde(rename = "quasimomentum_samples_Nq")]
    pub quasimomentum_samples: usize,
    pub beta: f64,
    /// Half-width `S` of the real-space window, in sites.
    pub window_sites: usize,
    pub points_per_site: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self {
            depth_w0: -15.0,
            planewave_cutoff_m: 15,
            quasimomentum_samples: 128,
            beta: golden_beta(),
            window_sites: 5,
            points_per_site: 64,
        }
    }
}

impl LatticeSpec {
    pub fn with_depth(depth_w0: f64) -> Self {
        Self {
            depth_w0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.depth_w0.is_finite() {
            return Err(Error::invalid("depth_W0", "must be finite"));
        }
        if self.planewave_cutoff_m < 8 {
            return Err(Error::invalid(
                "planewave_cutoff_M",
                format!("must be >= 8, got {}", self.planewave_cutoff_m),
            ));
        }
        if self.quasimomentum_samples < 64 || !self.quasimomentum_samples.is_multiple_of(2) {
            return Err(Error::invalid(
                "quasimomentum_samples_Nq",
                format!("must be even and >= 64, got {}", self.quasimomentum_samples),
            ));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid("beta", format!("must lie in (0, 1), got {}", self.beta)));
        }
        if self.window_sites < 1 {
            return Err(Error::invalid("window_sites", "must be >= 1"));
        }
        if self.points_per_site < 8 {
            return Err(Error::invalid(
                "points_per_site",
                format!("must be >= 8, got {}", self.points_per_site),
            ));
        }
        Ok(())
    }

    /// Position of the potential minimum used as the Wannier center.
    pub fn site_center(&self) -> f64 {
        if self.depth_w0 > 0.0 {
            0.5 * SITE_SPACING
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct BlochBand {
    /// First Brillouin zone samples in `[-1, 1)` (units of k0).
    pub quasimomenta: Vec<f64>,
    pub energies: Vec<f64>,
    /// Plane-wave coefficients for `j = -M..=M`, unit-normalized.
    pub eigenvectors: Vec<Vec<f64>>,
    pub cutoff: usize,
}

impl BlochBand {
    pub fn bandwidth(&self) -> f64 {
        let (lo, hi) = self
            .energies
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        hi - lo
    }
}

/// Lowest eigenpair of the plane-wave Bloch Hamiltonian at each sampled q.
pub fn solve_lowest_band(spec: &LatticeSpec) -> Result<BlochBand> {
    spec.validate()?;
    let m = spec.planewave_cutoff_m as i64;
    let nq = spec.quasimomentum_samples;
    let mut quasimomenta = Vec::with_capacity(nq);
    let mut energies = Vec::with_capacity(nq);
    let mut eigenvectors = Vec::with_capacity(nq);
    for i in 0..nq {
        let q = -1.0 + 2.0 * i as f64 / nq as f64;
        let diag = (-m..=m)
            .map(|j| {
                let k = q + 2.0 * j as f64;
                k * k + 0.5 * spec.depth_w0
            })
            .collect();
        let off = vec![0.25 * spec.depth_w0; 2 * m as usize];
        let h = SymTridiagonal::new(diag, off)?;
        let (vals, vecs) = h.eigh().map_err(|_| Error::BandNonConvergence { q })?;
        if !vals[0].is_finite() {
            return Err(Error::BandNonConvergence { q });
        }
        quasimomenta.push(q);
        energies.push(vals[0]);
        eigenvectors.push(vecs.into_iter().next().expect("non-empty basis"));
    }
    Ok(BlochBand {
        quasimomenta,
        energies,
        eigenvectors,
        cutoff: spec.planewave_cutoff_m,
    })
}

/// Tight-binding Fourier coefficient of the band: `t = -(1/Nq) sum_q E(q) cos(q a)`.
pub fn tunneling_from_band(band: &BlochBand) -> f64 {
    let nq = band.energies.len() as f64;
    -band
        .quasimomenta
        .iter()
        .zip(&band.energies)
        .map(|(q, e)| e * (q * SITE_SPACING).cos())
        .sum::<f64>()
        / nq
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionConstants {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub alpha: f64,
}

/// Lowest-band Wannier function sampled on `[-S a, S a]` around its center,
/// together with the constants derived from it. Immutable once built.
#[derive(Debug, Clone)]
pub struct WannierBasis {
    spec: LatticeSpec,
    center: f64,
    grid: Vec<f64>,
    w0: Vec<f64>,
    w0_second_derivative: Vec<f64>,
    t: f64,
    t_band: f64,
    constants: CorrectionConstants,
}

impl WannierBasis {
    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }
    /// Offsets `u` from the Wannier center; the absolute position is `center + u`.
    pub fn grid(&self) -> &[f64] {
        &self.grid
    }
    pub fn center(&self) -> f64 {
        self.center
    }
    pub fn w0_samples(&self) -> &[f64] {
        &self.w0
    }
    pub fn w0_second_derivative(&self) -> &[f64] {
        &self.w0_second_derivative
    }
    pub fn site_spacing(&self) -> f64 {
        SITE_SPACING
    }
    pub fn step(&self) -> f64 {
        SITE_SPACING / self.spec.points_per_site as f64
    }
    pub fn points_per_site(&self) -> usize {
        self.spec.points_per_site
    }
    pub fn window_sites(&self) -> usize {
        self.spec.window_sites
    }
    pub fn depth(&self) -> f64 {
        self.spec.depth_w0
    }
    pub fn beta(&self) -> f64 {
        self.spec.beta
    }
    /// Hopping from the real-space integral (the value used by the model).
    pub fn t(&self) -> f64 {
        self.t
    }
    /// Hopping from the band Fourier coefficient.
    pub fn t_band(&self) -> f64 {
        self.t_band
    }
    pub fn constants(&self) -> CorrectionConstants {
        self.constants
    }
    pub fn alpha(&self) -> f64 {
        self.constants.alpha
    }

    fn center_index(&self) -> usize {
        self.spec.window_sites * self.spec.points_per_site
    }

    /// `|w0|` at the window edge relative to the center value.
    pub fn edge_decay(&self) -> f64 {
        let edge = self.w0[0].abs().max(self.w0[self.w0.len() - 1].abs());
        edge / self.w0[self.center_index()].abs()
    }

    /// `int w0(u) w0(u - n a) du` over the overlap of the shifted windows.
    pub fn overlap(&self, shift_sites: usize) -> f64 {
        let p = self.spec.points_per_site * shift_sites;
        if p >= self.w0.len() {
            return 0.0;
        }
        trapezoid(
            self.step(),
            (p..self.w0.len()).map(|k| self.w0[k] * self.w0[k - p]),
        )
    }

    /// Largest `|w0(c + u) - w0(c - u)|` on the grid.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.w0.len();
        (0..n / 2)
            .map(|k| (self.w0[k] - self.w0[n - 1 - k]).abs())
            .fold(0.0, f64::max)
    }

    /// `int w0^2(u) g(u) du` by trapezoid over the window.
    pub(crate) fn density_integral(&self, g: impl Fn(f64) -> f64) -> f64 {
        trapezoid(
            self.step(),
            self.grid.iter().zip(&self.w0).map(|(&u, &w)| w * w * g(u)),
        )
    }

    /// Two-column CSV `x,w0` with absolute positions.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut body = String::from("x,w0\n");
        for (u, w) in self.grid.iter().zip(&self.w0) {
            body.push_str(&format!("{:.16e},{:.16e}\n", self.center + u, w));
        }
        out.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

/// Trapezoid rule on a uniform grid.
pub(crate) fn trapezoid(h: f64, values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for v in values {
        if first.is_none() {
            first = Some(v);
        }
        sum += v;
        last = v;
    }
    match first {
        None => 0.0,
        Some(f) => h * (sum - 0.5 * (f + last)),
    }
}

/// Builds `w0(x) = Nq^{-1/2} sum_q phi_q(x)` with each Bloch function phased
/// to be real and positive at the site center.
pub fn build_wannier(band: &BlochBand, spec: &LatticeSpec) -> Result<WannierBasis> {
    spec.validate()?;
    if band.cutoff != spec.planewave_cutoff_m || band.energies.len() != spec.quasimomentum_samples {
        return Err(Error::invalid("band", "band was solved for a different lattice spec"));
    }
    let m = band.cutoff as i64;
    let center = spec.site_center();

    // phase factors conj(z)/|z| with z = phi_q(center)
    let mut phases = Vec::with_capacity(band.quasimomenta.len());
    for (q, c) in band.quasimomenta.iter().zip(&band.eigenvectors) {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, cj) in (-m..=m).zip(c) {
            let arg = (q + 2.0 * j as f64) * center;
            re += cj * arg.cos();
            im += cj * arg.sin();
        }
        let mag = re.hypot(im);
        if mag < 1e-12 {
            return Err(Error::PhaseFixing { q: *q, magnitude: mag });
        }
        phases.push((re / mag, -im / mag));
    }

    let s = spec.window_sites as i64;
    let p = spec.points_per_site as i64;
    let h = SITE_SPACING / p as f64;
    let grid: Vec<f64> = (-s * p..=s * p).map(|k| k as f64 * h).collect();
    let mut w0 = Vec::with_capacity(grid.len());
    let mut lap = Vec::with_capacity(grid.len());
    let mut harmonics = vec![(0.0, 0.0); (2 * m + 1) as usize];
    for &u in &grid {
        let x = center + u;
        for (slot, j) in harmonics.iter_mut().zip(-m..=m) {
            let arg = 2.0 * j as f64 * x;
            *slot = (arg.cos(), arg.sin());
        }
        let (mut w, mut d2) = (0.0, 0.0);
        for ((q, c), &(pr, pi)) in band.quasimomenta.iter().zip(&band.eigenvectors).zip(&phases) {
            let (mut sr, mut si, mut s2r, mut s2i) = (0.0, 0.0, 0.0, 0.0);
            for ((cj, &(hr, hi)), j) in c.iter().zip(&harmonics).zip(-m..=m) {
                let k = q + 2.0 * j as f64;
                sr += cj * hr;
                si += cj * hi;
                s2r += k * k * cj * hr;
                s2i += k * k * cj * hi;
            }
            let (er, ei) = ((q * x).cos(), (q * x).sin());
            // Re[phase * e^{iqx} * S]
            let (ar, ai) = (pr * er - pi * ei, pr * ei + pi * er);
            w += ar * sr - ai * si;
            d2 -= ar * s2r - ai * s2i;
        }
        w0.push(w);
        lap.push(d2);
    }
    let norm = trapezoid(h, w0.iter().map(|w| w * w)).sqrt();
    w0.iter_mut().for_each(|w| *w /= norm);
    lap.iter_mut().for_each(|w| *w /= norm);

    let mut basis = WannierBasis {
        spec: spec.clone(),
        center,
        grid,
        w0,
        w0_second_derivative: lap,
        t: 0.0,
        t_band: tunneling_from_band(band),
        constants: CorrectionConstants {
            a: 0.0,
            b: 0.0,
            alpha: 0.0,
        },
    };
    if spec.window_sites >= 2 {
        basis.t = tunneling_from_integral(&basis, spec)?;
    } else {
        basis.t = basis.t_band;
    }
    basis.constants = correction_constants(&basis, spec.beta);
    Ok(basis)
}

/// Band solve plus Wannier construction.
pub fn wannier_for(spec: &LatticeSpec) -> Result<WannierBasis> {
    let band = solve_lowest_band(spec)?;
    build_wannier(&band, spec)
}

/// `t = -int w0(x) [-d^2/dx^2 + W0 cos^2 x] w0(x - a) dx`, positive for the
/// lowest band so the chain carries `-t` off the diagonal.
pub fn tunneling_from_integral(wb: &WannierBasis, spec: &LatticeSpec) -> Result<f64> {
    if spec.window_sites < 2 || wb.window_sites() < 2 {
        return Err(Error::WindowTooSmall {
            sites: wb.window_sites().min(spec.window_sites),
            reason: "tunneling integral needs S >= 2".into(),
        });
    }
    let p = wb.points_per_site();
    let n = wb.w0.len();
    let center = wb.center();
    let integrand = (p..n).map(|k| {
        let neighbor = wb.w0[k - p];
        let x = center + wb.grid[k];
        let cos = x.cos();
        let h_neighbor = -wb.w0_second_derivative[k - p] + spec.depth_w0 * cos * cos * neighbor;
        wb.w0[k] * h_neighbor
    });
    Ok(-trapezoid(wb.step(), integrand))
}

/// `A = -int w0^2 sin(2 beta u)`, `B = int w0^2 cos(2 beta u)`, `alpha = sqrt(A^2 + B^2)`,
/// with `u` measured from the Wannier center.
pub fn correction_constants(wb: &WannierBasis, beta: f64) -> CorrectionConstants {
    let a = -wb.density_integral(|u| (2.0 * beta * u).sin());
    let b = wb.density_integral(|u| (2.0 * beta * u).cos());
    CorrectionConstants {
        a,
        b,
        alpha: a.hypot(b),
    }
}

/// Cavity-induced corrections `t_n = int w_n V_eff w_{n+1}` for `n = 1..L-1`,
/// with site `n` centered at `x_n = n a` in the cavity frame.
pub fn cavity_tunneling_corrections(
    wb: &WannierBasis,
    pot: &EffectivePotential,
    sites: usize,
) -> Result<Vec<f64>> {
    if !pot.is_cavity() {
        return Err(Error::NotCavityMode);
    }
    let p = wb.points_per_site();
    let n = wb.w0.len();
    let mut out = Vec::with_capacity(sites.saturating_sub(1));
    for site in 1..sites {
        let xn = site as f64 * SITE_SPACING;
        // w_n(x) = w0(u), w_{n+1}(x) = w0(u - a), with x = x_n + u
        let integrand = (p..n).map(|k| {
            let u = wb.grid[k];
            wb.w0[k] * wb.w0[k - p] * f_eval(pot, xn + u).unwrap_or(0.0)
        });
        out.push(pot.v0 * trapezoid(wb.step(), integrand));
    }
    Ok(out)
}
