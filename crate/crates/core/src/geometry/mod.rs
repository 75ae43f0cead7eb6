//! Reference spheres, real spherical-harmonic transforms and graph geometry.

mod curvature;
pub mod io;

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;

pub use curvature::{
    graph_curvature, graph_normal_and_velocity, linearized_curvature_mode, sphere_signed_distance, translated_sphere_height, GraphPatch,
};

/// Surface measure of the unit sphere in R^n.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

// Γ(n/2) for integer n ≥ 1.
fn gamma_half(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        (1..n / 2).map(|k| k as f64).product()
    } else {
        let mut g = PI.sqrt();
        let mut x = 0.5;
        while x < n as f64 / 2.0 - 0.25 {
            g *= x;
            x += 1.0;
        }
        g
    }
}

/// Number of real harmonics of degree ≤ l_max on S^{n−1}.
pub fn harmonic_count(n: usize, l_max: usize) -> usize {
    if n == 2 {
        2 * l_max + 1
    } else {
        (l_max + 1) * (l_max + 1)
    }
}

/// Storage position of the (l, m) harmonic. For n = 2, m ∈ {−l, l}.
pub fn harmonic_index(n: usize, l: usize, m: i64) -> usize {
    if n == 2 {
        if l == 0 {
            0
        } else {
            2 * l - 1 + usize::from(m > 0)
        }
    } else {
        (l * l) + (m + l as i64) as usize
    }
}

/// (l, m) pairs in storage order.
pub fn harmonic_labels(n: usize, l_max: usize) -> Vec<(usize, i64)> {
    let mut out = Vec::with_capacity(harmonic_count(n, l_max));
    for l in 0..=l_max {
        if n == 2 {
            if l == 0 {
                out.push((0, 0));
            } else {
                out.push((l, -(l as i64)));
                out.push((l, l as i64));
            }
        } else {
            for m in -(l as i64)..=(l as i64) {
                out.push((l, m));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Harmonics {
    pub n: usize,
    pub l_max: usize,
    pub coeffs: Vec<f64>,
}

impl Harmonics {
    pub fn zeros(n: usize, l_max: usize) -> Self {
        Harmonics { n, l_max, coeffs: vec![0.0; harmonic_count(n, l_max)] }
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        self.coeffs[harmonic_index(self.n, l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: f64) {
        let k = harmonic_index(self.n, l, m);
        self.coeffs[k] = v;
    }

    /// Squared coefficient mass above degree `l`.
    pub fn energy_above(&self, l: usize) -> f64 {
        harmonic_labels(self.n, self.l_max)
            .iter()
            .zip(&self.coeffs)
            .filter(|((ll, _), _)| *ll > l)
            .map(|(_, c)| c * c)
            .sum()
    }
}

/// Field values and angular derivatives at the nodes.
#[derive(Debug, Clone, Default)]
pub struct NodalDerivatives {
    pub f: Vec<f64>,
    pub f_t: Vec<f64>,
    pub f_p: Vec<f64>,
    pub f_tt: Vec<f64>,
    pub f_tp: Vec<f64>,
    pub f_pp: Vec<f64>,
}

/// Sphere of radius `radius` in R^n with a tensor-product quadrature grid and
/// a real harmonic transform up to degree `l_max`. Supported: n ∈ {2, 3}.
#[derive(Clone)]
pub struct ReferenceSphere {
    pub n: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub l_max: usize,
    /// Colatitudes (n = 3) or the single value π/2 (n = 2).
    pub colat: Vec<f64>,
    colat_weights: Vec<f64>,
    pub n_lon: usize,
    // [l][m][i] normalized associated Legendre values and θ-derivatives
    plm: Vec<Vec<Vec<f64>>>,
    dplm: Vec<Vec<Vec<f64>>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ReferenceSphere {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceSphere")
            .field("n", &self.n)
            .field("center", &self.center)
            .field("radius", &self.radius)
            .field("l_max", &self.l_max)
            .field("n_lon", &self.n_lon)
            .finish()
    }
}

impl ReferenceSphere {
    pub fn new(n: usize, center: Vec<f64>, radius: f64, l_max: usize) -> Result<Self> {
        if n != 2 && n != 3 {
            return Err(Error::Config(format!("dimension {n} not supported (2 or 3)")));
        }
        if center.len() != n {
            return Err(Error::Shape(format!("center has {} components, expected {n}", center.len())));
        }
        if !(radius > 0.0) {
            return Err(Error::Config("sphere radius must be positive".into()));
        }
        let n_lon = 2 * l_max + 2;
        let (colat, colat_weights) = if n == 2 {
            (vec![PI / 2.0], vec![1.0])
        } else {
            let (x, w) = gauss_legendre(l_max + 1);
            // ascending colatitude: x = cos θ descending
            (x.iter().rev().map(|x| x.acos()).collect(), w.iter().rev().copied().collect())
        };
        let (plm, dplm) = if n == 3 { legendre_tables(l_max, &colat) } else { (Vec::new(), Vec::new()) };
        let mut planner = FftPlanner::new();
        Ok(ReferenceSphere {
            n,
            center,
            radius,
            l_max,
            colat,
            colat_weights,
            n_lon,
            plm,
            dplm,
            forward: planner.plan_fft_forward(n_lon),
            inverse: planner.plan_fft_inverse(n_lon),
        })
    }

    pub fn unit(n: usize, l_max: usize) -> Result<Self> {
        Self::new(n, vec![0.0; n], 1.0, l_max)
    }

    pub fn node_count(&self) -> usize {
        self.colat.len() * self.n_lon
    }

    pub fn longitude(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_lon as f64
    }

    /// (colatitude, longitude) per node; node index = i·n_lon + j.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        self.colat.iter().flat_map(|&t| (0..self.n_lon).map(move |j| (t, 2.0 * PI * j as f64 / self.n_lon as f64))).collect()
    }

    /// Outward unit normal of the reference sphere at each node.
    pub fn unit_normals(&self) -> Vec<Vec<f64>> {
        self.nodes().into_iter().map(|(t, p)| self.direction(t, p)).collect()
    }

    pub fn direction(&self, t: f64, p: f64) -> Vec<f64> {
        if self.n == 2 {
            vec![p.cos(), p.sin()]
        } else {
            vec![t.sin() * p.cos(), t.sin() * p.sin(), t.cos()]
        }
    }

    /// Orthonormal tangent frame (e_θ, e_φ) at a node; for n = 2 only e_φ.
    pub fn tangent_frame(&self, t: f64, p: f64) -> Vec<Vec<f64>> {
        if self.n == 2 {
            vec![vec![-p.sin(), p.cos()]]
        } else {
            vec![vec![t.cos() * p.cos(), t.cos() * p.sin(), -t.sin()], vec![-p.sin(), p.cos(), 0.0]]
        }
    }

    /// Quadrature weights on the unit sphere (sum = ω_n).
    pub fn weights(&self) -> Vec<f64> {
        let dphi = 2.0 * PI / self.n_lon as f64;
        self.colat_weights.iter().flat_map(|&w| std::iter::repeat_n(w * dphi, self.n_lon)).collect()
    }

    /// ∫ f dS over the sphere of radius `radius`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let scale = self.radius.powi(self.n as i32 - 1);
        scale * self.weights().iter().zip(f).map(|(w, v)| w * v).sum::<f64>()
    }

    fn check_len(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.node_count() {
            return Err(Error::Shape(format!("field has {} values, grid has {} nodes", f.len(), self.node_count())));
        }
        Ok(())
    }

    fn row_fft(&self, row: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = row.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn row_synth(&self, cos: &[f64], sin: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.n_lon];
        for k in 0..cos.len() {
            buf[k] = Complex64::new(cos[k], -sin[k]);
        }
        self.inverse.process(&mut buf);
        buf.iter().map(|c| c.re).collect()
    }

    /// Coefficients in the orthonormal real basis of the unit sphere.
    pub fn analyze(&self, f: &[f64]) -> Result<Harmonics> {
        self.check_len(f)?;
        let mut h = Harmonics::zeros(self.n, self.l_max);
        let dphi = 2.0 * PI / self.n_lon as f64;
        let sq_pi = PI.sqrt();
        for (i, row) in f.chunks(self.n_lon).enumerate() {
            let spec = self.row_fft(row);
            let w = self.colat_weights[i] * dphi;
            for l in 0..=self.l_max {
                if self.n == 2 {
                    if l == 0 {
                        h.coeffs[0] += w * spec[0].re / (2.0 * PI).sqrt();
                    } else {
                        h.coeffs[harmonic_index(2, l, -(l as i64))] += w * (-spec[l].im) / sq_pi;
                        h.coeffs[harmonic_index(2, l, l as i64)] += w * spec[l].re / sq_pi;
                    }
                    continue;
                }
                for m in 0..=l {
                    let p = self.plm[l][m][i];
                    if m == 0 {
                        h.coeffs[harmonic_index(3, l, 0)] += w * p * spec[0].re / (2.0 * PI).sqrt();
                    } else {
                        h.coeffs[harmonic_index(3, l, m as i64)] += w * p * spec[m].re / sq_pi;
                        h.coeffs[harmonic_index(3, l, -(m as i64))] += w * p * (-spec[m].im) / sq_pi;
                    }
                }
            }
        }
        Ok(h)
    }

    pub fn synthesize(&self, h: &Harmonics) -> Result<Vec<f64>> {
        Ok(self.synthesize_derivatives(h)?.f)
    }

    /// Values and θ/φ derivatives of the band-limited field with coefficients `h`.
    pub fn synthesize_derivatives(&self, h: &Harmonics) -> Result<NodalDerivatives> {
        if h.n != self.n || h.l_max > self.l_max {
            return Err(Error::Shape(format!("coefficients (n={}, l_max={}) do not fit this grid", h.n, h.l_max)));
        }
        let lm = h.l_max;
        let sq_pi = PI.sqrt();
        let s2 = (2.0 * PI).sqrt();
        let mut out = NodalDerivatives::default();
        for (i, &theta) in self.colat.iter().enumerate() {
            // per-m Fourier amplitudes of f, f_θ, f_θθ
            let mut ca = [vec![0.0; lm + 1], vec![0.0; lm + 1], vec![0.0; lm + 1]];
            let mut sa = [vec![0.0; lm + 1], vec![0.0; lm + 1], vec![0.0; lm + 1]];
            if self.n == 2 {
                ca[0][0] = h.coeffs[0] / s2;
                for l in 1..=lm {
                    ca[0][l] = h.get(l, l as i64) / sq_pi;
                    sa[0][l] = h.get(l, -(l as i64)) / sq_pi;
                }
            } else {
                let (st, ct) = theta.sin_cos();
                let cot = ct / st;
                for l in 0..=lm {
                    let ll = (l * (l + 1)) as f64;
                    for m in 0..=l {
                        let p = self.plm[l][m][i];
                        let dp = self.dplm[l][m][i];
                        let ddp = -cot * dp - (ll - (m * m) as f64 / (st * st)) * p;
                        let (a, b) = if m == 0 {
                            (h.get(l, 0) / s2, 0.0)
                        } else {
                            (h.get(l, m as i64) / sq_pi, h.get(l, -(m as i64)) / sq_pi)
                        };
                        for (k, v) in [p, dp, ddp].into_iter().enumerate() {
                            ca[k][m] += a * v;
                            sa[k][m] += b * v;
                        }
                    }
                }
            }
            let ks: Vec<f64> = (0..=lm).map(|k| k as f64).collect();
            let d_c: Vec<f64> = (0..=lm).map(|k| ks[k] * sa[0][k]).collect();
            let d_s: Vec<f64> = (0..=lm).map(|k| -ks[k] * ca[0][k]).collect();
            let dd_c: Vec<f64> = (0..=lm).map(|k| -ks[k] * ks[k] * ca[0][k]).collect();
            let dd_s: Vec<f64> = (0..=lm).map(|k| -ks[k] * ks[k] * sa[0][k]).collect();
            let dt_c: Vec<f64> = (0..=lm).map(|k| ks[k] * sa[1][k]).collect();
            let dt_s: Vec<f64> = (0..=lm).map(|k| -ks[k] * ca[1][k]).collect();
            out.f.extend(self.row_synth(&ca[0], &sa[0]));
            out.f_t.extend(self.row_synth(&ca[1], &sa[1]));
            out.f_tt.extend(self.row_synth(&ca[2], &sa[2]));
            out.f_p.extend(self.row_synth(&d_c, &d_s));
            out.f_pp.extend(self.row_synth(&dd_c, &dd_s));
            out.f_tp.extend(self.row_synth(&dt_c, &dt_s));
        }
        Ok(out)
    }

    /// Nodal values of the orthonormal harmonic Y_{l,m}.
    pub fn harmonic(&self, l: usize, m: i64) -> Result<Vec<f64>> {
        if l > self.l_max || m.unsigned_abs() as usize > l || (self.n == 2 && l > 0 && m.unsigned_abs() as usize != l) {
            return Err(Error::Config(format!("no harmonic (l={l}, m={m}) on this grid")));
        }
        let mut h = Harmonics::zeros(self.n, self.l_max);
        h.set(l, m, 1.0);
        self.synthesize(&h)
    }
}

// Orthonormal associated Legendre functions (∫_{-1}^{1} P̄² dx = 1) and dP̄/dθ.
fn legendre_tables(l_max: usize, colat: &[f64]) -> (Vec<Vec<Vec<f64>>>, Vec<Vec<Vec<f64>>>) {
    let nt = colat.len();
    let mut p = vec![vec![vec![0.0; nt]; l_max + 1]; l_max + 1];
    let mut d = p.clone();
    for (i, &t) in colat.iter().enumerate() {
        let (s, x) = t.sin_cos();
        let mut pmm = (0.5f64).sqrt();
        for m in 0..=l_max {
            if m > 0 {
                pmm *= ((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * s;
            }
            p[m][m][i] = pmm;
            if m < l_max {
                p[m + 1][m][i] = ((2 * m + 3) as f64).sqrt() * x * pmm;
            }
            for l in m + 2..=l_max {
                let a = |l: usize| (((4 * l * l - 1) as f64) / ((l * l - m * m) as f64)).sqrt();
                p[l][m][i] = a(l) * (x * p[l - 1][m][i] - p[l - 2][m][i] / a(l - 1));
            }
            for l in m..=l_max {
                let prev = if l > m { p[l - 1][m][i] } else { 0.0 };
                let c = if l > 0 { (((2 * l + 1) * (l * l - m * m)) as f64 / (2 * l - 1) as f64).sqrt() } else { 0.0 };
                d[l][m][i] = (l as f64 * x * p[l][m][i] - c * prev) / s;
            }
        }
    }
    (p, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((unit_sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn products_integrate_exactly() {
        for n in [2, 3] {
            let sph = ReferenceSphere::unit(n, 10).unwrap();
            let labels = harmonic_labels(n, 10);
            let ys: Vec<Vec<f64>> = labels.iter().map(|&(l, m)| sph.harmonic(l, m).unwrap()).collect();
            for a in 0..ys.len() {
                for b in 0..ys.len() {
                    let prod: Vec<f64> = ys[a].iter().zip(&ys[b]).map(|(x, y)| x * y).collect();
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((sph.integrate(&prod) - want).abs() < 1e-10, "n={n} {:?} {:?}", labels[a], labels[b]);
                }
            }
        }
    }

    #[test]
    fn round_trip() {
        for n in [2, 3] {
            let sph = ReferenceSphere::unit(n, 12).unwrap();
            let mut h = Harmonics::zeros(n, 12);
            for (k, c) in h.coeffs.iter_mut().enumerate() {
                *c = ((k * 37 % 11) as f64 - 5.0) / 7.0;
            }
            let f = sph.synthesize(&h).unwrap();
            let back = sph.analyze(&f).unwrap();
            for (a, b) in h.coeffs.iter().zip(&back.coeffs) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_closed_forms() {
        let sph = ReferenceSphere::unit(3, 6).unwrap();
        // Y ∝ sinθ cosθ cos φ (l=2, m=1)
        let mut h = Harmonics::zeros(3, 6);
        h.set(2, 1, 1.0);
        let d = sph.synthesize_derivatives(&h).unwrap();
        let scale = d.f[1] / {
            let (t, p) = sph.nodes()[1];
            t.sin() * t.cos() * p.cos()
        };
        for (k, (t, p)) in sph.nodes().into_iter().enumerate() {
            let (s, c) = t.sin_cos();
            let check = [
                (d.f[k], s * c * p.cos()),
                (d.f_t[k], (c * c - s * s) * p.cos()),
                (d.f_tt[k], -4.0 * s * c * p.cos()),
                (d.f_p[k], -s * c * p.sin()),
                (d.f_pp[k], -s * c * p.cos()),
                (d.f_tp[k], -(c * c - s * s) * p.sin()),
            ];
            for (got, want) in check {
                assert!((got - scale * want).abs() < 1e-12, "node {k}: {got} vs {}", scale * want);
            }
        }
    }

    #[test]
    fn laplacian_eigenvalues() {
        let sph = ReferenceSphere::unit(3, 8).unwrap();
        for (l, m) in [(1usize, 0i64), (2, -2), (3, 1), (5, 4)] {
            let mut h = Harmonics::zeros(3, 8);
            h.set(l, m, 1.0);
            let d = sph.synthesize_derivatives(&h).unwrap();
            for (k, (t, _)) in sph.nodes().into_iter().enumerate() {
                let (s, c) = t.sin_cos();
                let lap = d.f_tt[k] + c / s * d.f_t[k] + d.f_pp[k] / (s * s);
                assert!((lap + (l * (l + 1)) as f64 * d.f[k]).abs() < 1e-10);
            }
        }
    }
}
