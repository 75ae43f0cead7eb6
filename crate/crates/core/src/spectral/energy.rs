//! Quadratic energy balance of eigenpairs and interface-driven solutions.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use serde::Serialize;

use super::assemble::{source_flow, toroidal_operator, ModePencil, PencilKind};
use super::cheb::RadialGrid;
use super::{laplace_eig, LinearizationParams, RadialGeometry};
use crate::geometry::linearized_curvature_mode;
use crate::quad::gauss_legendre_on;

/// Integrated terms of the balance
/// `Re(lambda) kinetic + dissipation + sigma Re(lambda) surface + theta_*(Re(lambda) thermal + conduction) = 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct EnergyTerms {
    pub kinetic: f64,
    pub dissipation: f64,
    pub surface: f64,
    pub thermal: f64,
    pub conduction: f64,
    pub sigma: f64,
    pub theta_star: f64,
    /// `|h|^2 |Sigma|`, part of the state norm even where the curvature term vanishes
    pub height: f64,
}

impl EnergyTerms {
    fn parts(&self, re: f64) -> [f64; 5] {
        [
            re * self.kinetic,
            self.dissipation,
            self.sigma * re * self.surface,
            self.theta_star * re * self.thermal,
            self.theta_star * self.conduction,
        ]
    }

    pub fn total(&self, lambda: C) -> f64 {
        self.parts(lambda.re).iter().sum()
    }

    /// Imbalance relative to the sum of magnitudes of the terms. When every term is
    /// negligible against the state norm the imbalance is measured against that norm.
    pub fn residual(&self, lambda: C) -> f64 {
        let mag: f64 = self.parts(lambda.re).iter().map(|v| v.abs()).sum();
        let norm = self.kinetic + self.surface.abs() + self.theta_star * self.thermal + self.height;
        let total = self.total(lambda).abs();
        if mag <= 1e-10 * norm {
            total / norm
        } else if mag > 0.0 {
            total / mag
        } else {
            0.0
        }
    }
}

pub(crate) struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    interp: DMatrix<f64>,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

impl Quadrature {
    /// Gauss rule on the grid's interval with `r^(n-1)` folded into the weights.
    pub fn on(g: &RadialGrid, a: f64, b: f64, n: usize) -> Self {
        let (nodes, w) = gauss_legendre_on(2 * g.len() + 16, a, b);
        let weights = nodes.iter().zip(&w).map(|(r, w)| w * r.powi(n as i32 - 1)).collect();
        let interp = g.interpolation(&nodes);
        let d1 = g.derivative_interpolation(&nodes) * &g.d1;
        let d2 = &interp * &g.d2;
        Quadrature { nodes, weights, interp, d1, d2 }
    }

    pub fn values(&self, f: &DVector<C>) -> [Vec<C>; 3] {
        let apply = |m: &DMatrix<f64>| -> Vec<C> { (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| f[j] * m[(i, j)]).sum()).collect() };
        [apply(&self.interp), apply(&self.d1), apply(&self.d2)]
    }
}

fn quads(ball: &RadialGrid, shell: &RadialGrid, geom: &RadialGeometry) -> [Quadrature; 2] {
    [Quadrature::on(ball, 0.0, geom.radius, geom.n), Quadrature::on(shell, geom.radius, geom.r_out, geom.n)]
}

/// Kinetic energy and viscous dissipation of a poloidal field with profiles `f`.
pub(crate) fn poloidal_energy(l: usize, geom: &RadialGeometry, par: &LinearizationParams, ball: &RadialGrid, shell: &RadialGrid, f: [&DVector<C>; 2]) -> (f64, f64) {
    let n = geom.n;
    let big_l = laplace_eig(l, n);
    let nm2 = n as f64 - 2.0;
    let qs = quads(ball, shell, geom);
    let (mut kin, mut diss) = (0.0, 0.0);
    for j in 0..2 {
        let q = &qs[j];
        let [v, v1, v2] = q.values(f[j]);
        for k in 0..q.nodes.len() {
            let r = q.nodes[k];
            let u = v[k] * big_l / r;
            let du = (v1[k] / r - v[k] / (r * r)) * big_l;
            let w = v1[k] + v[k] * nm2 / r;
            let dw = v2[k] + (v1[k] / r - v[k] / (r * r)) * nm2;
            let shear = dw - w / r + u / r;
            let strain = du.norm_sqr()
                + 0.5 * big_l * shear.norm_sqr()
                + (w.norm_sqr() * (big_l * big_l - nm2 * big_l) - 2.0 * big_l * (u * w.conj()).re + (n as f64 - 1.0) * u.norm_sqr()) / (r * r);
            kin += q.weights[k] * par.rho[j] * (u.norm_sqr() + big_l * w.norm_sqr());
            diss += q.weights[k] * 2.0 * par.mu[j] * strain;
        }
    }
    (kin, diss)
}

fn thermal_energy(l: usize, geom: &RadialGeometry, par: &LinearizationParams, ball: &RadialGrid, shell: &RadialGrid, th: [&DVector<C>; 2]) -> (f64, f64) {
    let big_l = laplace_eig(l, geom.n);
    let qs = quads(ball, shell, geom);
    let (mut cap, mut cond) = (0.0, 0.0);
    for j in 0..2 {
        let q = &qs[j];
        let [v, v1, _] = q.values(th[j]);
        for k in 0..q.nodes.len() {
            let r = q.nodes[k];
            cap += q.weights[k] * par.rho[j] * par.kappa[j] * v[k].norm_sqr();
            cond += q.weights[k] * par.d[j] * (v1[k].norm_sqr() + big_l * v[k].norm_sqr() / (r * r));
        }
    }
    (cap, cond)
}

/// Heat capacity and conduction integrals of a temperature mode.
pub(crate) fn heat_energy(l: usize, geom: &RadialGeometry, par: &LinearizationParams, ball: &RadialGrid, shell: &RadialGrid, th: [&DVector<C>; 2]) -> (f64, f64) {
    thermal_energy(l, geom, par, ball, shell, th)
}

/// Kinetic energy and dissipation of the shell source flow `a r^(1-n) e_r`.
pub(crate) fn source_energy(geom: &RadialGeometry, par: &LinearizationParams, amp: C) -> (f64, f64) {
    let n = geom.n;
    let (nodes, w) = gauss_legendre_on(64, geom.radius, geom.r_out);
    let (mut kin, mut diss) = (0.0, 0.0);
    for (r, wk) in nodes.iter().zip(&w) {
        let (v, vp, _) = source_flow(n, *r);
        let jac = wk * r.powi(n as i32 - 1);
        kin += jac * par.rho[1] * v * v;
        diss += jac * 2.0 * par.mu[1] * (vp * vp + (n as f64 - 1.0) * v * v / (r * r));
    }
    (kin * amp.norm_sqr(), diss * amp.norm_sqr())
}

fn segment(x: &DVector<C>, off: usize, len: usize) -> DVector<C> {
    x.rows(off, len).into_owned()
}

/// Energy balance terms of the eigenpair `(lambda, x)` of `pencil`.
pub fn energy_residual(pencil: &ModePencil, x: &DVector<C>) -> EnergyTerms {
    let geom = &pencil.geom;
    let par = &pencil.params;
    let np = pencil.np();
    let l = pencil.l;
    let mut t = EnergyTerms { sigma: par.sigma, theta_star: par.theta_star, ..Default::default() };
    let area = geom.radius.powi(geom.n as i32 - 1);
    if let Some([a, b]) = pencil.theta_offsets() {
        let (th1, th2) = (segment(x, a, np), segment(x, b, np));
        let (cap, cond) = thermal_energy(l, geom, par, &pencil.ball, &pencil.shell, [&th1, &th2]);
        t.thermal = cap;
        t.conduction = cond;
    }
    if let Some(h) = pencil.h_index() {
        t.height = x[h].norm_sqr() * area;
        t.surface = linearized_curvature_mode(l, geom.n, geom.radius) * t.height;
    }
    match pencil.kind {
        PencilKind::Poloidal => {
            let (f1, f2) = (segment(x, 0, np), segment(x, np, np));
            let (kin, diss) = poloidal_energy(l, geom, par, &pencil.ball, &pencil.shell, [&f1, &f2]);
            t.kinetic = kin;
            t.dissipation = diss;
        }
        PencilKind::RadialReservoir => {
            let (kin, diss) = source_energy(geom, par, x[pencil.tail() + 2]);
            t.kinetic = kin;
            t.dissipation = diss;
        }
        PencilKind::Toroidal => {
            let (le, ne) = toroidal_operator(l, geom.n).expect("toroidal pencil exists");
            let big_l = laplace_eig(le, ne);
            // swirl carries the unit-norm angular factor; spherical toroidal fields carry |grad Y|^2 = L
            let (lfac, extra) = if ne == 3 { (big_l, 0.5 * big_l * (big_l - 2.0)) } else { (1.0, 0.0) };
            let qs = quads(&pencil.ball, &pencil.shell, geom);
            for (j, q) in qs.iter().enumerate() {
                let w = segment(x, j * np, np);
                let [v, v1, _] = q.values(&w);
                for k in 0..q.nodes.len() {
                    let r = q.nodes[k];
                    let shear = v1[k] - v[k] / r;
                    t.kinetic += q.weights[k] * par.rho[j] * lfac * v[k].norm_sqr();
                    t.dissipation += q.weights[k] * 2.0 * par.mu[j] * (0.5 * lfac * shear.norm_sqr() + extra * v[k].norm_sqr() / (r * r));
                }
            }
        }
        PencilKind::Radial | PencilKind::Heat => {}
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_is_relative_to_the_terms() {
        let t = EnergyTerms { kinetic: 2.0, dissipation: 3.0, surface: 1.0, thermal: 0.5, conduction: 1.0, sigma: 1.0, theta_star: 2.0, height: 1.0 };
        // -1 * 2 + 3 - 1 - 1 + 2 = 1, magnitudes sum to 9
        assert!((t.total(C::new(-1.0, 7.0)) - 1.0).abs() < 1e-15);
        assert!((t.residual(C::new(-1.0, 0.0)) - 1.0 / 9.0).abs() < 1e-15);
        let silent = EnergyTerms { height: 1.0, kinetic: 1e-30, ..Default::default() };
        assert!(silent.residual(C::new(0.0, 0.0)) < 1e-25);
    }

    #[test]
    fn source_flow_energy_matches_closed_form() {
        // n = 3: v = r^-2, |v'|^2 + 2 v^2 / r^2 = 6 r^-6
        let geom = RadialGeometry::new(3, 1.0, 2.0, 8).unwrap();
        let par = LinearizationParams { rho: [1.0, 2.0], mu: [1.0, 3.0], kappa: [1.0, 1.0], d: [1.0, 1.0], l_star: 0.0, sigma: 1.0, theta_star: 1.0 };
        let (kin, diss) = source_energy(&geom, &par, C::new(0.0, 2.0));
        // int_1^2 r^-4 r^2 dr = 1/2, int_1^2 6 r^-6 r^2 dr = 2 (1 - 1/8)
        assert!((kin - 4.0 * 2.0 * 0.5).abs() < 1e-12);
        assert!((diss - 4.0 * 2.0 * 3.0 * 2.0 * 0.875).abs() < 1e-12);
    }
}
