//! Neumann-to-Dirichlet operators of the heat and Stokes transmission problems, per mode.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use serde::Serialize;

use super::assemble::{heat_pencil, source_flow, stokes_system, StokesData};
use super::energy::{heat_energy, poloidal_energy};
use super::{LinearizationParams, OuterBoundary, RadialGeometry};
use crate::error::{Error, Result};

fn complex_solve(a: &DMatrix<f64>, b: &DMatrix<f64>, r: &DVector<C>, lambda: C) -> Result<DVector<C>> {
    let m: DMatrix<C> = a.map(|v| C::new(v, 0.0)) - b.map(|v| C::new(v, 0.0)) * lambda;
    let x = m.clone().lu().solve(r).ok_or_else(|| Error::Convergence(format!("collocation system singular at lambda = {lambda}")))?;
    let res = (&m * &x - r).norm();
    let scale = m.norm() * x.norm() + r.norm();
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) || res > 1e-8 * scale {
        return Err(Error::Convergence(format!("collocation system ill-conditioned at lambda = {lambda}")));
    }
    Ok(x)
}

/// Temperature profiles of the unit-flux transmission problem.
#[derive(Debug, Clone)]
pub struct HeatSolution {
    pub lambda: C,
    pub l: usize,
    /// interface value: the mode value of the Neumann-to-Dirichlet operator
    pub value: C,
    pub theta: [DVector<C>; 2],
    pub r: [Vec<f64>; 2],
    /// `lambda |sqrt(rho kappa) theta|^2` and `|sqrt(d) grad theta|^2`
    pub capacity: f64,
    pub conduction: f64,
    pub area: f64,
}

impl HeatSolution {
    /// Relative defect of `conj(N) |Sigma| = lambda |sqrt(rho kappa) theta|^2 + |sqrt(d) grad theta|^2`.
    pub fn quadratic_form_defect(&self) -> f64 {
        let lhs = self.value.conj() * self.area;
        let rhs = self.lambda * self.capacity + self.conduction;
        (lhs - rhs).norm() / lhs.norm().max(rhs.norm())
    }
}

/// Unit-flux heat transmission problem at degree `l`; outer condition from `geom.outer`.
pub fn heat_ntd_profile(lambda: C, l: usize, geom: &RadialGeometry, par: &LinearizationParams) -> Result<HeatSolution> {
    geom.validate()?;
    if lambda.re < 0.0 {
        return Err(Error::Domain(format!("heat operator needs Re lambda >= 0, got {lambda}")));
    }
    if l == 0 && lambda == C::new(0.0, 0.0) && geom.outer == OuterBoundary::Wall {
        return Err(Error::Solvability("constant flux data at lambda = 0 has no insulated solution".into()));
    }
    let (p, rhs) = heat_pencil(l, geom, par);
    let x = complex_solve(&p.a, &p.b, &rhs.map(|v| C::new(v, 0.0)), lambda)?;
    let np = geom.points;
    let theta = [x.rows(0, np).into_owned(), x.rows(np, np).into_owned()];
    let (cap, cond) = heat_energy(l, geom, par, &p.ball, &p.shell, [&theta[0], &theta[1]]);
    Ok(HeatSolution {
        lambda,
        l,
        value: theta[0][p.ball.inner],
        r: [p.ball.r.clone(), p.shell.r.clone()],
        theta,
        capacity: cap,
        conduction: cond,
        area: geom.radius.powi(geom.n as i32 - 1),
    })
}

/// Mode value of the heat Neumann-to-Dirichlet operator.
pub fn heat_ntd(lambda: C, l: usize, geom: &RadialGeometry, par: &LinearizationParams) -> Result<C> {
    Ok(heat_ntd_profile(lambda, l, geom, par)?.value)
}

/// Per-mode response of the Stokes transmission problems.
#[derive(Debug, Clone, Serialize)]
pub struct StokesModeResponse {
    pub l: usize,
    pub lambda: C,
    /// `[[rho u.nu]] / [[rho]]` for the supplied data
    pub k: C,
    /// `[[u.nu]] / [[1/rho]]` for the supplied data
    pub j: C,
    /// normal velocity for unit normal-stress jump with continuous velocity
    pub ns: C,
    /// `[[S11, S12], [S21, S22]]`
    pub s: [[C; 2]; 2],
    /// degree-0 data: only the mean mode is touched, the response is restricted
    pub mean_mode: bool,
    /// relative defect of `(g | S g) |Sigma| = lambda |sqrt(rho) u|^2 + 2 |sqrt(mu) D(u)|^2` for the supplied data
    pub quadratic_defect: f64,
}

impl StokesModeResponse {
    pub fn asymmetry(&self) -> f64 {
        let s = &self.s;
        (s[0][1] - s[1][0]).norm() / (s[0][0].norm() + s[1][1].norm() + s[0][1].norm()).max(f64::MIN_POSITIVE)
    }

    /// `S11 - S12 S21 / S22`, the Schur complement that should reproduce `ns`.
    pub fn schur_ns(&self) -> Result<C> {
        let s = &self.s;
        if s[1][1].norm() == 0.0 {
            return Err(Error::Degenerate("S22 vanishes".into()));
        }
        Ok(s[0][0] - s[0][1] * s[1][0] / s[1][1])
    }
}

struct Flow {
    k: C,
    j: C,
    u: C,
    kin: f64,
    diss: f64,
}

fn poloidal_flow(lambda: C, l: usize, geom: &RadialGeometry, par: &LinearizationParams, kind: StokesData, data: &[C]) -> Result<Flow> {
    let sys = stokes_system(l, geom, par, kind);
    let mut rhs = DVector::zeros(sys.a.nrows());
    for (&row, &g) in sys.data_rows.iter().zip(data) {
        rhs[row] = g;
    }
    let x = complex_solve(&sys.a, &sys.b, &rhs, lambda)?;
    let eval = |row: &Vec<(usize, f64)>| row.iter().map(|&(c, v)| x[c] * v).sum::<C>();
    let (u1, u2) = (eval(&sys.u[0]), eval(&sys.u[1]));
    let np = geom.points;
    let f1 = x.rows(0, np).into_owned();
    let f2 = x.rows(np, np).into_owned();
    let (kin, diss) = poloidal_energy(l, geom, par, &sys.ball, &sys.shell, [&f1, &f2]);
    Ok(Flow {
        k: (u2 * par.rho[1] - u1 * par.rho[0]) / par.jump_rho(),
        j: (u2 - u1) / par.jump_inv_rho(),
        u: u2,
        kin,
        diss,
    })
}

/// Degree-0 asymmetric problem in closed form: the ball is at rest and the shell carries
/// the source flow `a r^(1-n)`, which a wall forces to vanish.
fn radial_flow(lambda: C, geom: &RadialGeometry, par: &LinearizationParams, g1: C, g2: C) -> Flow {
    if geom.outer == OuterBoundary::Wall {
        let zero = C::new(0.0, 0.0);
        return Flow { k: zero, j: zero, u: zero, kin: 0.0, diss: 0.0 };
    }
    let (v, vp, phi) = source_flow(geom.n, geom.radius);
    let (_, vpo, phio) = source_flow(geom.n, geom.r_out);
    let tau = C::new(2.0 * par.mu[1] * (vp - vpo), 0.0) - lambda * par.rho[1] * (phi - phio);
    let amp = (g1 / par.rho[0] - g2) / (tau * par.jump_inv_rho());
    let u = amp * v;
    let (kin, diss) = super::energy::source_energy(geom, par, amp);
    Flow { k: u * par.rho[1] / par.jump_rho(), j: u / par.jump_inv_rho(), u, kin, diss }
}

/// Solves the asymmetric Stokes transmission problem with normal-stress data `(g1, g2)`
/// and assembles the 2x2 mode matrix of the data-to-jump map and the continuous-velocity
/// Neumann-to-Dirichlet value.
pub fn stokes_mode_solve(lambda: C, l: usize, geom: &RadialGeometry, par: &LinearizationParams, data: (C, C)) -> Result<StokesModeResponse> {
    geom.validate()?;
    if lambda.re < 0.0 {
        return Err(Error::Domain(format!("Stokes operator needs Re lambda >= 0, got {lambda}")));
    }
    let (g1, g2) = data;
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let (col1, col2, given, ns) = if l == 0 {
        // continuous velocity leaves the ball at rest and forbids any source flow
        (radial_flow(lambda, geom, par, one, zero), radial_flow(lambda, geom, par, zero, one), radial_flow(lambda, geom, par, g1, g2), zero)
    } else {
        let solve = |a: C, b: C| poloidal_flow(lambda, l, geom, par, StokesData::Asymmetric, &[a, b]);
        let ns = poloidal_flow(lambda, l, geom, par, StokesData::Continuous, &[one])?.u;
        let (c1, c2, given) = (solve(one, zero)?, solve(zero, one)?, solve(g1, g2)?);
        (c1, c2, given, ns)
    };
    let area = geom.radius.powi(geom.n as i32 - 1);
    let form = (given.k.conj() * g1 + given.j.conj() * g2) * area;
    let balance = lambda * given.kin + given.diss;
    let quadratic_defect = if form.norm() == 0.0 && balance.norm() == 0.0 { 0.0 } else { (form - balance).norm() / form.norm().max(balance.norm()) };
    Ok(StokesModeResponse {
        l,
        lambda,
        k: given.k,
        j: given.j,
        ns,
        s: [[col1.k, col2.k], [col1.j, col2.j]],
        mean_mode: l == 0 && (g1 != zero || g2 != zero),
        quadratic_defect,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::cheb::RadialGrid;
    use crate::thermo::MaterialParams;
    use nalgebra::{Matrix3, Vector3};
    use proptest::prelude::*;

    fn sample(grid: &RadialGrid, v: &DVector<C>, t: &[f64]) -> Vec<C> {
        let p = grid.interpolation(t);
        (0..t.len()).map(|i| (0..v.len()).map(|j| v[j] * p[(i, j)]).sum()).collect()
    }

    fn setup(n: usize, points: usize) -> (RadialGeometry, LinearizationParams) {
        let par = LinearizationParams::from_material(&MaterialParams::default(), std::f64::consts::E).unwrap();
        (RadialGeometry::new(n, 1.0, 2.0, points).unwrap(), par)
    }

    /// Radial l = 0 solution in three dimensions built from `sinh(k r)/r` and `exp(+-k r)/r`.
    fn closed_form(lam: f64, geom: &RadialGeometry, par: &LinearizationParams) -> impl Fn(f64) -> f64 {
        let k = [0, 1].map(|j| (par.rho[j] * par.kappa[j] * lam / par.d[j]).sqrt());
        let (r0, ro) = (geom.radius, geom.r_out);
        let ball = move |r: f64| ((k[0] * r).sinh() / r, (k[0] * r * (k[0] * r).cosh() - (k[0] * r).sinh()) / (r * r));
        // growing solution scaled at the outer radius
        let up = move |r: f64| ((k[1] * (r - ro)).exp() / r, (k[1] * (r - ro)).exp() * (k[1] * r - 1.0) / (r * r));
        let down = move |r: f64| ((-k[1] * (r - r0)).exp() / r, -(-k[1] * (r - r0)).exp() * (k[1] * r + 1.0) / (r * r));
        let m = Matrix3::new(
            0.0, up(ro).1, down(ro).1,
            -ball(r0).0, up(r0).0, down(r0).0,
            par.d[0] * ball(r0).1, -par.d[1] * up(r0).1, -par.d[1] * down(r0).1,
        );
        let c = m.lu().solve(&Vector3::new(0.0, 0.0, 1.0)).unwrap();
        move |r: f64| if r <= r0 { c[0] * ball(r).0 } else { c[1] * up(r).0 + c[2] * down(r).0 }
    }

    #[test]
    fn heat_matches_closed_form_in_three_dimensions() {
        let (geom, par) = setup(3, 24);
        for lam in [0.5, 3.0, 40.0] {
            let exact = closed_form(lam, &geom, &par);
            let sol = heat_ntd_profile(C::new(lam, 0.0), 0, &geom, &par).unwrap();
            assert!((sol.value.re - exact(1.0)).abs() <= 1e-8 * exact(1.0).abs(), "lambda {lam}");
            assert!(sol.value.im.abs() < 1e-14);
            let (p, _) = heat_pencil(0, &geom, &par);
            let tb = [0.05, 0.5, 0.93];
            let ts = [1.2, 1.6, 1.99];
            for (v, t) in sample(&p.ball, &sol.theta[0], &tb).iter().zip(tb) {
                assert!((v.re - exact(t)).abs() <= 1e-8 * exact(1.0).abs());
            }
            for (v, t) in sample(&p.shell, &sol.theta[1], &ts).iter().zip(ts) {
                assert!((v.re - exact(t)).abs() <= 1e-8 * exact(1.0).abs());
            }
        }
    }

    #[test]
    fn heat_quadratic_form_identity() {
        for n in [2, 3] {
            let (geom, par) = setup(n, 24);
            for (lam, l) in [(C::new(0.0, 0.0), 2), (C::new(0.7, 0.0), 0), (C::new(2.0, 5.0), 1), (C::new(100.0, -3.0), 3)] {
                let sol = heat_ntd_profile(lam, l, &geom, &par).unwrap();
                assert!(sol.quadratic_form_defect() < 1e-8, "n {n} l {l} lambda {lam}: {:e}", sol.quadratic_form_defect());
                assert!(sol.value.re > 0.0);
            }
        }
    }

    #[test]
    fn heat_decays_at_large_lambda() {
        let (geom, par) = setup(3, 48);
        let lams = crate::thermo::log_grid(1.0, 1e4, 9);
        let ys: Vec<f64> = lams.iter().map(|&x| heat_ntd(C::new(x, 0.0), 2, &geom, &par).unwrap().norm().ln()).collect();
        let xs: Vec<f64> = lams.iter().map(|x| x.ln()).collect();
        let (mx, my) = (xs.iter().sum::<f64>() / 9.0, ys.iter().sum::<f64>() / 9.0);
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(slope <= -0.05, "slope {slope}");
        assert!(slope > -1.0);
    }

    #[test]
    fn heat_rejects_insulated_constant_flux_at_rest() {
        let (geom, par) = setup(2, 12);
        assert!(matches!(heat_ntd(C::new(0.0, 0.0), 0, &geom, &par), Err(Error::Solvability(_))));
        assert!(matches!(heat_ntd(C::new(-1.0, 0.0), 2, &geom, &par), Err(Error::Domain(_))));
        let open = geom.with_outer(OuterBoundary::Reservoir);
        assert!(heat_ntd(C::new(0.0, 0.0), 0, &open, &par).unwrap().re > 0.0);
    }

    #[test]
    fn stokes_structure_at_reference_lambdas() {
        for n in [2, 3] {
            let (geom, par) = setup(n, 24);
            for lam in [0.0, 1.0, 100.0] {
                let lam = C::new(lam, 0.0);
                let mean = stokes_mode_solve(lam, 0, &geom, &par, (C::new(1.0, 0.0), C::new(0.0, 0.0))).unwrap();
                assert!(mean.ns.norm() < 1e-8 && mean.mean_mode);
                for l in 1..4 {
                    let r = stokes_mode_solve(lam, l, &geom, &par, (C::new(0.4, 0.0), C::new(-1.1, 0.0))).unwrap();
                    assert!(r.asymmetry() < 1e-8, "n {n} l {l}: {:e}", r.asymmetry());
                    let schur = r.schur_ns().unwrap();
                    assert!((schur - r.ns).norm() <= 1e-8 * r.ns.norm(), "n {n} l {l}");
                    assert!(r.quadratic_defect < 1e-8, "n {n} l {l}: {:e}", r.quadratic_defect);
                    // real symmetric and positive semidefinite at real lambda >= 0
                    let s = r.s;
                    let tr = s[0][0].re + s[1][1].re;
                    let det = s[0][0].re * s[1][1].re - s[0][1].re * s[1][0].re;
                    assert!(tr > 0.0 && det >= -1e-10 * tr * tr);
                    assert!(r.ns.re > 0.0);
                }
            }
        }
    }

    #[test]
    fn wall_freezes_the_mean_mode() {
        let (geom, par) = setup(3, 12);
        let r = stokes_mode_solve(C::new(1.0, 0.0), 0, &geom, &par, (C::new(1.0, 0.0), C::new(2.0, 0.0))).unwrap();
        assert_eq!(r.k, C::new(0.0, 0.0));
        let open = geom.with_outer(OuterBoundary::Reservoir);
        let r = stokes_mode_solve(C::new(1.0, 0.0), 0, &open, &par, (C::new(1.0, 0.0), C::new(2.0, 0.0))).unwrap();
        assert!(r.k.norm() > 0.0 && r.asymmetry() < 1e-12 && r.quadratic_defect < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn quadratic_forms_hold_in_the_closed_right_half_plane(re in 0.0f64..50.0, im in -20.0f64..20.0, l in 1usize..5, n in 2usize..4, g1 in -2.0f64..2.0, g2 in -2.0f64..2.0) {
            let (geom, par) = setup(n, 24);
            let lam = C::new(re, im);
            let h = heat_ntd_profile(lam, l, &geom, &par).unwrap();
            prop_assert!(h.quadratic_form_defect() < 1e-8);
            prop_assert!(h.value.re >= 0.0);
            let s = stokes_mode_solve(lam, l, &geom, &par, (C::new(g1, 0.0), C::new(g2, 0.0))).unwrap();
            prop_assert!(s.asymmetry() < 1e-8);
            prop_assert!(s.quadratic_defect < 1e-7 || (g1.abs() + g2.abs()) < 1e-6);
        }
    }
}
