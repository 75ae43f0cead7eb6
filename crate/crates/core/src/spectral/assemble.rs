//! Collocation assembly of the per-mode radial systems.
//!
//! Poloidal velocity fields are written through a scalar profile `f`:
//! `u = (L f / r) Y e_r + (f' + (n - 2) f / r) grad Y`, `L = l (l + n - 2)`, which is
//! divergence free for every `f`. The momentum equation then reduces to
//! `lambda rho f - mu lap_l f = Psi` with `Psi` a radial harmonic profile and
//! pressure `-(r Psi' + (n - 2) Psi)`.

use nalgebra::{DMatrix, DVector};

use super::cheb::RadialGrid;
use super::{laplace_eig, LinearizationParams, OuterBoundary, RadialGeometry};
use crate::geometry::linearized_curvature_mode;

pub(crate) type Row = Vec<(usize, f64)>;

pub(crate) fn comb(parts: &[(&Row, f64)]) -> Row {
    parts.iter().flat_map(|(r, s)| r.iter().map(move |&(c, v)| (c, v * s))).collect()
}

fn unit(col: usize) -> Row {
    vec![(col, 1.0)]
}

pub(crate) struct Builder {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub rhs: DVector<f64>,
    row: usize,
}

impl Builder {
    pub fn new(size: usize) -> Self {
        Builder { a: DMatrix::zeros(size, size), b: DMatrix::zeros(size, size), rhs: DVector::zeros(size), row: 0 }
    }

    pub fn push(&mut self, a: &Row, b: &Row) -> usize {
        for &(c, v) in a {
            self.a[(self.row, c)] += v;
        }
        for &(c, v) in b {
            self.b[(self.row, c)] += v;
        }
        self.row += 1;
        self.row - 1
    }

    pub fn push_a(&mut self, a: &Row) -> usize {
        self.push(a, &Vec::new())
    }

    pub fn finish(self) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        assert_eq!(self.row, self.a.nrows(), "collocation system is not square");
        (self.a, self.b, self.rhs)
    }
}

/// One phase's block of unknowns on its grid.
#[derive(Clone, Copy)]
pub(crate) struct Phase<'a> {
    pub g: &'a RadialGrid,
    pub off: usize,
}

impl Phase<'_> {
    pub fn val(&self, i: usize) -> Row {
        unit(self.off + i)
    }

    fn mat_row(&self, m: &DMatrix<f64>, i: usize) -> Row {
        (0..self.g.len()).map(|j| (self.off + j, m[(i, j)])).collect()
    }

    pub fn d1(&self, i: usize) -> Row {
        self.mat_row(&self.g.d1, i)
    }

    pub fn d2(&self, i: usize) -> Row {
        self.mat_row(&self.g.d2, i)
    }

    /// `f'' + (n - 1) f' / r - big_l f / r^2` at node i.
    pub fn laplace(&self, i: usize, n: usize, big_l: f64) -> Row {
        let r = self.g.r[i];
        comb(&[(&self.d2(i), 1.0), (&self.d1(i), (n as f64 - 1.0) / r), (&self.val(i), -big_l / (r * r))])
    }
}

/// Interface and wall rows of the poloidal Stokes block.
pub(crate) struct Poloidal {
    pub u: [Row; 2],
    pub w: [Row; 2],
    pub tangential: [Row; 2],
    pub normal: [Row; 2],
    pub wall: [Row; 2],
}

pub(crate) fn poloidal_block(bld: &mut Builder, l: usize, geom: &RadialGeometry, par: &LinearizationParams, ph: [Phase; 2], coef: usize) -> Poloidal {
    let n = geom.n;
    let big_l = laplace_eig(l, n);
    let rr = geom.radius;
    let decay = (l + n - 2) as f64;
    for (j, p) in ph.iter().enumerate() {
        for i in p.g.interior() {
            let r = p.g.r[i];
            let mut a = comb(&[(&p.laplace(i, n, big_l), par.mu[j])]);
            a.push((coef + j, (r / rr).powi(l as i32)));
            if j == 1 {
                a.push((coef + 2, (rr / r).powf(decay)));
            }
            bld.push(&a, &comb(&[(&p.val(i), par.rho[j])]));
        }
    }
    let nm2 = n as f64 - 2.0;
    // radial velocity, tangential profile, shear and normal stress at node i of phase j
    let at = |j: usize, i: usize| {
        let p = ph[j];
        let r = p.g.r[i];
        let (f, f1, f2) = (p.val(i), p.d1(i), p.d2(i));
        let u = comb(&[(&f, big_l / r)]);
        let du = comb(&[(&f1, big_l / r), (&f, -big_l / (r * r))]);
        let w = comb(&[(&f1, 1.0), (&f, nm2 / r)]);
        let dw = comb(&[(&f2, 1.0), (&f1, nm2 / r), (&f, -nm2 / (r * r))]);
        let tangential = comb(&[(&dw, par.mu[j]), (&w, -par.mu[j] / r), (&u, par.mu[j] / r)]);
        let mut pressure = vec![(coef + j, -decay * (r / rr).powi(l as i32))];
        if j == 1 {
            pressure.push((coef + 2, l as f64 * (rr / r).powf(decay)));
        }
        let normal = comb(&[(&du, 2.0 * par.mu[j]), (&pressure, -1.0)]);
        (u, w, tangential, normal)
    };
    let (u0, w0, t0, n0) = at(0, ph[0].g.inner);
    let (u1, w1, t1, n1) = at(1, ph[1].g.inner);
    let s = ph[1];
    let wall = match geom.outer {
        OuterBoundary::Wall => [s.val(s.g.outer), s.d1(s.g.outer)],
        OuterBoundary::Reservoir => {
            let (_, _, to, no) = at(1, s.g.outer);
            [to, no]
        }
    };
    Poloidal { u: [u0, u1], w: [w0, w1], tangential: [t0, t1], normal: [n0, n1], wall }
}

pub(crate) struct Heat {
    pub val: [Row; 2],
    pub flux: [Row; 2],
    pub outer: Row,
}

pub(crate) fn heat_block(bld: &mut Builder, l: usize, geom: &RadialGeometry, par: &LinearizationParams, ph: [Phase; 2]) -> Heat {
    let n = geom.n;
    let big_l = laplace_eig(l, n);
    for (j, p) in ph.iter().enumerate() {
        for i in p.g.interior() {
            bld.push(&comb(&[(&p.laplace(i, n, big_l), par.d[j])]), &comb(&[(&p.val(i), par.rho[j] * par.kappa[j])]));
        }
    }
    let at = |j: usize| {
        let p = ph[j];
        (p.val(p.g.inner), comb(&[(&p.d1(p.g.inner), par.d[j])]))
    };
    let (v0, q0) = at(0);
    let (v1, q1) = at(1);
    let s = ph[1];
    let outer = match geom.outer {
        OuterBoundary::Wall => s.d1(s.g.outer),
        OuterBoundary::Reservoir => s.val(s.g.outer),
    };
    Heat { val: [v0, v1], flux: [q0, q1], outer }
}

/// Which unknown set a pencil carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilKind {
    /// `[f1, f2, c1, c2, d2, theta1, theta2, h]`, degree l >= 1
    Poloidal,
    /// `[theta1, theta2, h, p1, p2]`, degree 0 with a wall
    Radial,
    /// `[theta1, theta2, h, p1, a, c]`, degree 0 with a reservoir: shell flow `a r^(1-n) e_r`
    RadialReservoir,
    /// `[w1, w2]`: tangential swirl decoupled from the interface
    Toroidal,
    /// `[theta1, theta2]` with the flux condition stripped of its velocity coupling
    Heat,
}

/// Generalized eigenproblem `A x = lambda B x` for one harmonic degree.
#[derive(Debug, Clone)]
pub struct ModePencil {
    pub kind: PencilKind,
    pub l: usize,
    pub geom: RadialGeometry,
    pub params: LinearizationParams,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub(crate) ball: RadialGrid,
    pub(crate) shell: RadialGrid,
}

impl ModePencil {
    pub fn size(&self) -> usize {
        self.a.nrows()
    }

    pub(crate) fn np(&self) -> usize {
        self.geom.points
    }

    /// Offset of the first scalar unknown after the radial profiles.
    pub(crate) fn tail(&self) -> usize {
        match self.kind {
            PencilKind::Poloidal => 4 * self.np() + 3,
            PencilKind::Radial | PencilKind::RadialReservoir => 2 * self.np(),
            PencilKind::Toroidal | PencilKind::Heat => 2 * self.np(),
        }
    }

    /// Column offsets of the temperature profiles, if present.
    pub(crate) fn theta_offsets(&self) -> Option<[usize; 2]> {
        let np = self.np();
        match self.kind {
            PencilKind::Poloidal => Some([2 * np + 3, 3 * np + 3]),
            PencilKind::Radial | PencilKind::RadialReservoir | PencilKind::Heat => Some([0, np]),
            PencilKind::Toroidal => None,
        }
    }

    pub(crate) fn h_index(&self) -> Option<usize> {
        match self.kind {
            PencilKind::Poloidal | PencilKind::Radial | PencilKind::RadialReservoir => Some(self.tail()),
            _ => None,
        }
    }

    /// Columns of the velocity/pressure/height unknowns (everything but temperature).
    pub fn mechanical_columns(&self) -> Vec<usize> {
        let th = self.theta_offsets();
        let np = self.np();
        (0..self.size()).filter(|&c| th.is_none_or(|[a, b]| !((a..a + np).contains(&c) || (b..b + np).contains(&c)))).collect()
    }
}

fn grids(geom: &RadialGeometry, parity: usize) -> (RadialGrid, RadialGrid) {
    (RadialGrid::ball(geom.points, geom.radius, parity), RadialGrid::shell(geom.points, geom.radius, geom.r_out))
}

pub(crate) fn poloidal_pencil(l: usize, geom: &RadialGeometry, par: &LinearizationParams) -> ModePencil {
    assert!(l >= 1);
    let np = geom.points;
    let (ball, shell) = grids(geom, l);
    let size = 4 * np + 4;
    let coef = 2 * np;
    let (t0, t1, h) = (2 * np + 3, 3 * np + 3, 4 * np + 3);
    let mut bld = Builder::new(size);
    let st = poloidal_block(&mut bld, l, geom, par, [Phase { g: &ball, off: 0 }, Phase { g: &shell, off: np }], coef);
    let al = linearized_curvature_mode(l, geom.n, geom.radius);
    let hr = unit(h);
    bld.push_a(&comb(&[(&st.w[1], 1.0), (&st.w[0], -1.0)]));
    bld.push_a(&comb(&[(&st.tangential[1], 1.0), (&st.tangential[0], -1.0)]));
    let hp = heat_block(&mut bld, l, geom, par, [Phase { g: &ball, off: t0 }, Phase { g: &shell, off: t1 }]);
    bld.push_a(&comb(&[(&st.normal[1], 1.0), (&st.normal[0], -1.0), (&hr, -par.sigma * al)]));
    bld.push_a(&comb(&[(&st.normal[1], 1.0 / par.rho[1]), (&st.normal[0], -1.0 / par.rho[0]), (&hp.val[0], -par.l_star)]));
    bld.push_a(&st.wall[0]);
    bld.push_a(&st.wall[1]);
    bld.push_a(&comb(&[(&hp.val[1], 1.0), (&hp.val[0], -1.0)]));
    let lc = par.l_star / par.theta_star / par.jump_inv_rho();
    bld.push_a(&comb(&[(&st.u[1], -lc), (&st.u[0], lc), (&hp.flux[1], -1.0), (&hp.flux[0], 1.0)]));
    bld.push_a(&hp.outer);
    bld.push(&comb(&[(&st.u[1], par.rho[1]), (&st.u[0], -par.rho[0])]), &comb(&[(&hr, par.jump_rho())]));
    let (a, b, _) = bld.finish();
    ModePencil { kind: PencilKind::Poloidal, l, geom: *geom, params: *par, a, b, ball, shell }
}

/// Radial flow profile `r^(1-n)`, its derivative, and a pressure potential with `phi' = -V`.
pub(crate) fn source_flow(n: usize, r: f64) -> (f64, f64, f64) {
    if n == 2 {
        (1.0 / r, -1.0 / (r * r), -r.ln())
    } else {
        (1.0 / (r * r), -2.0 / (r * r * r), 1.0 / r)
    }
}

pub(crate) fn radial_pencil(geom: &RadialGeometry, par: &LinearizationParams) -> ModePencil {
    let np = geom.points;
    let (ball, shell) = grids(geom, 0);
    let reservoir = geom.outer == OuterBoundary::Reservoir;
    let size = 2 * np + if reservoir { 4 } else { 3 };
    let (h, p1, x1, x2) = (2 * np, 2 * np + 1, 2 * np + 2, 2 * np + 3);
    let mut bld = Builder::new(size);
    let hp = heat_block(&mut bld, 0, geom, par, [Phase { g: &ball, off: 0 }, Phase { g: &shell, off: np }]);
    let a0 = linearized_curvature_mode(0, geom.n, geom.radius);
    let (hr, pr) = (unit(h), unit(p1));
    bld.push_a(&comb(&[(&hp.val[1], 1.0), (&hp.val[0], -1.0)]));
    bld.push_a(&hp.outer);
    let rr = geom.radius;
    if reservoir {
        let (amp, cst) = (unit(x1), unit(x2));
        let (v, vp, phi) = source_flow(geom.n, rr);
        let (_, vpo, phio) = source_flow(geom.n, geom.r_out);
        let lc = par.l_star / par.theta_star / par.jump_inv_rho();
        bld.push_a(&comb(&[(&amp, -lc * v), (&hp.flux[1], -1.0), (&hp.flux[0], 1.0)]));
        bld.push(&comb(&[(&amp, par.rho[1] * v)]), &comb(&[(&hr, par.jump_rho())]));
        bld.push(&comb(&[(&amp, 2.0 * par.mu[1] * vpo), (&cst, -1.0)]), &comb(&[(&amp, par.rho[1] * phio)]));
        let t2 = comb(&[(&amp, 2.0 * par.mu[1] * vp), (&cst, -1.0)]);
        bld.push(&comb(&[(&t2, 1.0), (&pr, 1.0), (&hr, -par.sigma * a0)]), &comb(&[(&amp, par.rho[1] * phi)]));
        bld.push(&comb(&[(&t2, 1.0 / par.rho[1]), (&pr, 1.0 / par.rho[0]), (&hp.val[0], -par.l_star)]), &comb(&[(&amp, phi)]));
    } else {
        let p2 = unit(x1);
        bld.push_a(&comb(&[(&hp.flux[1], -1.0), (&hp.flux[0], 1.0)]));
        bld.push(&Vec::new(), &comb(&[(&hr, par.jump_rho())]));
        bld.push_a(&comb(&[(&p2, -1.0), (&pr, 1.0), (&hr, -par.sigma * a0)]));
        bld.push_a(&comb(&[(&p2, -1.0 / par.rho[1]), (&pr, 1.0 / par.rho[0]), (&hp.val[0], -par.l_star)]));
    }
    let (a, b, _) = bld.finish();
    let kind = if reservoir { PencilKind::RadialReservoir } else { PencilKind::Radial };
    ModePencil { kind, l: 0, geom: *geom, params: *par, a, b, ball, shell }
}

/// Degree and dimension entering the toroidal operator: `(l, 3)` for n = 3 and the
/// swirl `(1, 2)` for n = 2, l = 0.
pub(crate) fn toroidal_operator(l: usize, n: usize) -> Option<(usize, usize)> {
    match (n, l) {
        (3, l) if l >= 1 => Some((l, 3)),
        (2, 0) => Some((1, 2)),
        _ => None,
    }
}

pub(crate) fn toroidal_pencil(l: usize, geom: &RadialGeometry, par: &LinearizationParams) -> Option<ModePencil> {
    let (le, ne) = toroidal_operator(l, geom.n)?;
    let np = geom.points;
    let (ball, shell) = grids(geom, le);
    let big_l = laplace_eig(le, ne);
    let mut bld = Builder::new(2 * np);
    let ph = [Phase { g: &ball, off: 0 }, Phase { g: &shell, off: np }];
    for (j, p) in ph.iter().enumerate() {
        for i in p.g.interior() {
            bld.push(&comb(&[(&p.laplace(i, ne, big_l), par.mu[j])]), &comb(&[(&p.val(i), par.rho[j])]));
        }
    }
    let rr = geom.radius;
    let shear = |j: usize| {
        let p = ph[j];
        comb(&[(&p.d1(p.g.inner), par.mu[j]), (&p.val(p.g.inner), -par.mu[j] / rr)])
    };
    bld.push_a(&comb(&[(&ph[1].val(shell.inner), 1.0), (&ph[0].val(ball.inner), -1.0)]));
    bld.push_a(&comb(&[(&shear(1), 1.0), (&shear(0), -1.0)]));
    match geom.outer {
        OuterBoundary::Wall => bld.push_a(&ph[1].val(shell.outer)),
        OuterBoundary::Reservoir => {
            let r = shell.r[shell.outer];
            bld.push_a(&comb(&[(&ph[1].d1(shell.outer), 1.0), (&ph[1].val(shell.outer), -1.0 / r)]))
        }
    };
    let (a, b, _) = bld.finish();
    Some(ModePencil { kind: PencilKind::Toroidal, l, geom: *geom, params: *par, a, b, ball, shell })
}

/// Temperature block alone: diffusion with insulated (or held) outer boundary and no
/// velocity coupling in the flux condition. With `rhs` set, the flux row carries unit data.
pub(crate) fn heat_pencil(l: usize, geom: &RadialGeometry, par: &LinearizationParams) -> (ModePencil, DVector<f64>) {
    let np = geom.points;
    let (ball, shell) = grids(geom, l);
    let mut bld = Builder::new(2 * np);
    let hp = heat_block(&mut bld, l, geom, par, [Phase { g: &ball, off: 0 }, Phase { g: &shell, off: np }]);
    bld.push_a(&comb(&[(&hp.val[1], 1.0), (&hp.val[0], -1.0)]));
    let fr = bld.push_a(&comb(&[(&hp.flux[1], -1.0), (&hp.flux[0], 1.0)]));
    bld.push_a(&hp.outer);
    bld.rhs[fr] = 1.0;
    let (a, b, rhs) = bld.finish();
    (ModePencil { kind: PencilKind::Heat, l, geom: *geom, params: *par, a, b, ball, shell }, rhs)
}

/// Data rows closing the poloidal Stokes system for interface-driven problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum StokesData {
    /// prescribed jumps of normal stress and of normal stress over density, tangential velocity continuous
    Asymmetric,
    /// full velocity continuity and prescribed normal-stress jump
    Continuous,
}

pub(crate) struct StokesSystem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    /// rows carrying the interface data, in order
    pub data_rows: Vec<usize>,
    pub u: [Row; 2],
    pub ball: RadialGrid,
    pub shell: RadialGrid,
}

pub(crate) fn stokes_system(l: usize, geom: &RadialGeometry, par: &LinearizationParams, data: StokesData) -> StokesSystem {
    assert!(l >= 1);
    let np = geom.points;
    let (ball, shell) = grids(geom, l);
    let mut bld = Builder::new(2 * np + 3);
    let st = poloidal_block(&mut bld, l, geom, par, [Phase { g: &ball, off: 0 }, Phase { g: &shell, off: np }], 2 * np);
    bld.push_a(&comb(&[(&st.w[1], 1.0), (&st.w[0], -1.0)]));
    bld.push_a(&comb(&[(&st.tangential[1], 1.0), (&st.tangential[0], -1.0)]));
    bld.push_a(&st.wall[0]);
    bld.push_a(&st.wall[1]);
    let jump_normal = comb(&[(&st.normal[1], -1.0), (&st.normal[0], 1.0)]);
    let data_rows = match data {
        StokesData::Asymmetric => {
            let r1 = bld.push_a(&jump_normal);
            let r2 = bld.push_a(&comb(&[(&st.normal[1], -1.0 / par.rho[1]), (&st.normal[0], 1.0 / par.rho[0])]));
            vec![r1, r2]
        }
        StokesData::Continuous => {
            bld.push_a(&comb(&[(&st.u[1], 1.0), (&st.u[0], -1.0)]));
            vec![bld.push_a(&jump_normal)]
        }
    };
    let (a, b, _) = bld.finish();
    StokesSystem { a, b, data_rows, u: st.u, ball, shell }
}
