//! Real symmetric tridiagonal eigenproblems.
//!
//! Two routes are provided: Sturm-sequence bisection for the lowest eigenvalue
//! followed by inverse iteration with a pivoted tridiagonal LU, and a full
//! implicit QL sweep with eigenvector accumulation. The second is used as a
//! fallback for the first and for the small plane-wave band problems.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix. `off[i]` couples rows `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::invalid("diag", "matrix must have at least one row"));
        }
        if off.len() + 1 != diag.len() {
            return Err(Error::invalid(
                "off",
                format!("expected {} off-diagonal entries, got {}", diag.len() - 1, off.len()),
            ));
        }
        Ok(Self { diag, off })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Dense row-major copy, mostly for tests and debugging.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diag[i];
            if i + 1 < n {
                m[i][i + 1] = self.off[i];
                m[i + 1][i] = self.off[i];
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            y[i] = acc;
        }
        y
    }

    /// Gershgorin radius of row `i`.
    fn radius(&self, i: usize) -> f64 {
        let left = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
        let right = if i + 1 < self.dim() { self.off[i].abs() } else { 0.0 };
        left + right
    }

    /// Infinity norm; an upper bound on the spectral norm.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.diag[i].abs() + self.radius(i))
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        (0..self.dim()).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| {
            let r = self.radius(i);
            (lo.min(self.diag[i] - r), hi.max(self.diag[i] + r))
        })
    }

    /// Number of eigenvalues strictly below `x` (Sturm count via the LDL^T pivots).
    pub fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.max(f64::EPSILON * self.norm_inf() * 1e-3);
        let mut count = 0;
        let mut q = self.diag[0] - x;
        for i in 0..self.dim() {
            if i > 0 {
                q = self.diag[i] - x - self.off[i - 1] * self.off[i - 1] / q;
            }
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Lowest eigenvalue by bisection on the Sturm count, to relative tolerance `rtol`.
    pub fn lowest_eigenvalue(&self, rtol: f64) -> f64 {
        let (mut lo, _) = self.gershgorin();
        // variational bound: E0 <= min diag
        let min_diag = self.diag.iter().copied().fold(f64::INFINITY, f64::min);
        let scale = self.norm_inf().max(f64::MIN_POSITIVE);
        let mut hi = min_diag + 4.0 * f64::EPSILON * scale;
        lo -= 4.0 * f64::EPSILON * scale;
        for _ in 0..256 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) >= 1 {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= rtol * scale {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(T - shift) x = rhs` in place with partial pivoting.
    /// Zero pivots are replaced by a tiny multiple of the norm, as needed
    /// when the shift is an eigenvalue.
    fn solve_shifted(&self, shift: f64, rhs: &mut [f64]) {
        let n = self.dim();
        let tiny = f64::EPSILON * self.norm_inf().max(f64::MIN_POSITIVE);
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        if n == 1 {
            if d[0].abs() < tiny {
                d[0] = tiny;
            }
            rhs[0] /= d[0];
            return;
        }
        let mut dl = self.off.clone();
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n - 1];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i].abs() < tiny {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        if d[n - 1].abs() < tiny {
            d[n - 1] = tiny;
        }
        for i in 0..n - 1 {
            if swapped[i] {
                let temp = rhs[i];
                rhs[i] = rhs[i + 1];
                rhs[i + 1] = temp - dl[i] * rhs[i];
            } else {
                rhs[i + 1] -= dl[i] * rhs[i];
            }
        }
        rhs[n - 1] /= d[n - 1];
        rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
        }
    }

    /// Inverse iteration at `shift`. Returns the normalized vector and its
    /// Rayleigh quotient, or `None` if the residual never drops below
    /// `tol * norm_inf` within `max_iter` solves.
    pub fn inverse_iteration(&self, shift: f64, tol: f64, max_iter: usize) -> Option<(Vec<f64>, f64)> {
        let n = self.dim();
        let norm = self.norm_inf().max(f64::MIN_POSITIVE);
        let mut x = vec![1.0 / (n as f64).sqrt(); n];
        for _ in 0..max_iter {
            self.solve_shifted(shift, &mut x);
            let nrm = l2(&x);
            if !nrm.is_finite() || nrm == 0.0 {
                return None;
            }
            x.iter_mut().for_each(|v| *v /= nrm);
            let hx = self.matvec(&x);
            let rq = dot(&x, &hx);
            let res = hx
                .iter()
                .zip(&x)
                .map(|(h, v)| (h - rq * v).powi(2))
                .sum::<f64>()
                .sqrt();
            if res <= tol * norm {
                return Some((x, rq));
            }
        }
        None
    }

    /// Further inverse-iteration sweeps on a converged vector. These purify
    /// the exponentially small components that the residual test cannot see.
    /// Returns the updated Rayleigh quotient.
    pub fn polish(&self, shift: f64, x: &mut [f64], sweeps: usize) -> f64 {
        for _ in 0..sweeps {
            let prev = x.to_vec();
            self.solve_shifted(shift, x);
            let nrm = l2(x);
            if !nrm.is_finite() || nrm == 0.0 {
                x.copy_from_slice(&prev);
                break;
            }
            let s = if dot(x, &prev) < 0.0 { -nrm } else { nrm };
            x.iter_mut().for_each(|v| *v /= s);
        }
        dot(x, &self.matvec(x))
    }

    /// All eigenpairs by implicit QL with Wilkinson-type shifts.
    /// Eigenvalues are returned ascending; `vectors[k]` is the k-th eigenvector.
    pub fn eigh(&self) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.dim();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        // z[row][col]; columns become eigenvectors
        let mut z = vec![vec![0.0; n]; n];
        for (i, row) in z.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > 60 {
                    return Err(Error::QlNonConvergence { index: l });
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut deflated = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        deflated = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    for row in z.iter_mut() {
                        let f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
                if deflated {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&k| d[k]).collect();
        let vectors = order
            .iter()
            .map(|&k| z.iter().map(|row| row[k]).collect())
            .collect();
        Ok((values, vectors))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn l2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
