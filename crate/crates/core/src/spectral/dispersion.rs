//! Reduced scalar dispersion function and the block model for several balls.

use num_complex::Complex64 as C;
use serde::Serialize;

use super::assemble::radial_pencil;
use super::eig::generalized_eigenvalues;
use super::ntd::{heat_ntd, stokes_mode_solve};
use super::{LinearizationParams, OuterBoundary, RadialGeometry};
use crate::equilibria::increasing_root;
use crate::error::{Error, Result};
use crate::geometry::linearized_curvature_mode;
use crate::thermo::log_grid;

/// `b(lambda, l) = lambda t + sigma a_l` with `1 / t = S11 - c S12 S21 N / (1 + c N S22)`;
/// its zeros on `(0, inf)` are the positive eigenvalues at degree `l`.
pub fn reduced_dispersion(lambda: f64, l: usize, geom: &RadialGeometry, par: &LinearizationParams) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::Domain(format!("dispersion function needs lambda >= 0, got {lambda}")));
    }
    let al = par.sigma * linearized_curvature_mode(l, geom.n, geom.radius);
    if lambda == 0.0 {
        return Ok(al);
    }
    let lam = C::new(lambda, 0.0);
    let nh = heat_ntd(lam, l, geom, par)?;
    let s = stokes_mode_solve(lam, l, geom, par, (C::new(0.0, 0.0), C::new(0.0, 0.0)))?.s;
    let c = par.c_star();
    let denom = C::new(1.0, 0.0) + nh * s[1][1] * c;
    if denom.norm() < 1e-14 {
        return Err(Error::Degenerate(format!("1 + c N S22 vanishes at lambda = {lambda}")));
    }
    let t_inv = s[0][0] - s[0][1] * s[1][0] * nh * c / denom;
    let scale = s[0][0].norm() + s[0][1].norm() + s[1][1].norm();
    if t_inv.norm() <= 1e-13 * scale.max(f64::MIN_POSITIVE) || scale == 0.0 {
        return Err(Error::Degenerate(format!("interface operator vanishes at degree {l} (the mean mode is frozen by the outer boundary)")));
    }
    Ok((lam / t_inv).re + al)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DispersionOptions {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub samples: usize,
    pub rtol: f64,
}

impl Default for DispersionOptions {
    fn default() -> Self {
        DispersionOptions { lambda_min: 1e-6, lambda_max: 1e4, samples: 121, rtol: 1e-12 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Crossing {
    pub lambda: f64,
    /// number of identical eigenvalue curves crossing here
    pub multiplicity: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockSpectrum {
    pub m: usize,
    pub positive_eigenvalue_count: usize,
    pub crossings: Vec<Crossing>,
    /// value of the eigenvalue curve of the mean-zero block at lambda = 0
    pub curve_at_zero: f64,
    /// sampled `(lambda, curve value)`
    pub curve: Vec<(f64, f64)>,
}

/// Block model of `m` identical, far-separated balls, each inside its own reservoir shell.
/// On per-ball constant heights with zero total mean the interface operator is
/// `lambda t_0(lambda) - sigma (n-1)/R^2` times the identity of dimension `m - 1`; every sign
/// change of this curve yields `m - 1` positive eigenvalues.
pub fn multi_ball_block_spectrum(m: usize, geom: &RadialGeometry, par: &LinearizationParams, opts: &DispersionOptions) -> Result<BlockSpectrum> {
    if m == 0 {
        return Err(Error::Config("need at least one ball".into()));
    }
    let g = geom.with_outer(OuterBoundary::Reservoir);
    let curve_fn = |lam: f64| reduced_dispersion(lam, 0, &g, par);
    let grid = log_grid(opts.lambda_min, opts.lambda_max, opts.samples);
    let mut curve = Vec::with_capacity(grid.len());
    for &lam in &grid {
        curve.push((lam, curve_fn(lam)?));
    }
    let mut crossings = Vec::new();
    for w in curve.windows(2) {
        let ((a, fa), (b, fb)) = (w[0], w[1]);
        if fa < 0.0 && fb >= 0.0 {
            crossings.push(Crossing { lambda: increasing_root(curve_fn, a, b, opts.rtol)?, multiplicity: m - 1 });
        } else if fa >= 0.0 && fb < 0.0 {
            crossings.push(Crossing { lambda: increasing_root(|x| curve_fn(x).map(|v| -v), a, b, opts.rtol)?, multiplicity: m - 1 });
        }
    }
    Ok(BlockSpectrum {
        m,
        positive_eigenvalue_count: crossings.len() * (m - 1),
        crossings: if m > 1 { crossings } else { Vec::new() },
        curve_at_zero: curve_fn(0.0)?,
        curve,
    })
}

/// Positive eigenvalues of the degree-0 pencil of one ball inside a reservoir shell.
pub fn block_ball_eigenvalues(geom: &RadialGeometry, par: &LinearizationParams) -> Result<Vec<f64>> {
    let g = geom.with_outer(OuterBoundary::Reservoir);
    let p = radial_pencil(&g, par);
    let ev = generalized_eigenvalues(&p.a, &p.b, 0.5 * par.default_margin(&g))?;
    let mut out: Vec<f64> = ev.iter().filter(|z| z.re > 1e-8 && z.im.abs() <= 1e-8 * z.norm().max(1.0)).map(|z| z.re).collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}
