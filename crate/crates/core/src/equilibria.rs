//! Equilibrium radius and temperature from conserved mass and energy, energy and
//! entropy functionals, and the constrained entropy probe over ball radii.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{unit_sphere_area, ReferenceSphere};
use crate::quad::gauss_legendre_on;
use crate::thermo::{eval_phase, MaterialParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedQuantities {
    pub c0: f64,
    pub e0: f64,
    pub volume: f64,
    pub n: usize,
    pub m: usize,
}

impl ConservedQuantities {
    /// Phase-1 volume (ρ2|Ω| − c0)/[[ρ]].
    pub fn phase1_volume(&self, mat: &MaterialParams) -> f64 {
        (mat.rho2 * self.volume - self.c0) / mat.jump_rho()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumConfig {
    pub m: usize,
    pub n: usize,
    pub radius: f64,
    pub theta_star: f64,
    pub centers: Vec<Vec<f64>>,
    /// Radius of the ball-shaped ambient domain.
    pub r_out: f64,
}

impl EquilibriumConfig {
    pub fn manifold_dimension(&self) -> usize {
        manifold_dimension(self.m, self.n)
    }

    pub fn phase1_volume(&self) -> f64 {
        self.m as f64 * unit_sphere_area(self.n) * self.radius.powi(self.n as i32) / self.n as f64
    }

    pub fn domain_volume(&self) -> f64 {
        unit_sphere_area(self.n) * self.r_out.powi(self.n as i32) / self.n as f64
    }

    pub fn interface_area(&self) -> f64 {
        self.m as f64 * unit_sphere_area(self.n) * self.radius.powi(self.n as i32 - 1)
    }

    /// Balls pairwise separated and inside the domain, each by at least `gap`.
    pub fn check_nondegenerate(&self, gap: f64) -> Result<()> {
        if self.centers.len() != self.m || self.centers.iter().any(|c| c.len() != self.n) {
            return Err(Error::Shape("centers do not match m and n".into()));
        }
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        let origin = vec![0.0; self.n];
        for (i, a) in self.centers.iter().enumerate() {
            if dist(a, &origin) + self.radius + gap > self.r_out {
                return Err(Error::Infeasible(format!("ball {i} reaches the outer boundary")));
            }
            for (j, b) in self.centers.iter().enumerate().skip(i + 1) {
                if dist(a, b) < 2.0 * self.radius + gap {
                    return Err(Error::Infeasible(format!("balls {i} and {j} touch")));
                }
            }
        }
        Ok(())
    }
}

pub fn manifold_dimension(m: usize, n: usize) -> usize {
    n * m + 2
}

pub fn radius_from_mass(q: &ConservedQuantities, mat: &MaterialParams) -> Result<f64> {
    mat.validate()?;
    if q.m == 0 || q.n < 2 {
        return Err(Error::Config(format!("need m ≥ 1 and n ≥ 2, got m={} n={}", q.m, q.n)));
    }
    let v1 = q.phase1_volume(mat);
    if !(v1 > 0.0) {
        return Err(Error::NoEquilibrium(format!("phase-1 volume {v1} is not positive")));
    }
    if v1 >= q.volume {
        return Err(Error::Infeasible(format!("phase-1 volume {v1} exceeds |Omega| = {}", q.volume)));
    }
    Ok((q.n as f64 * v1 / (q.m as f64 * unit_sphere_area(q.n))).powf(1.0 / q.n as f64))
}

/// Bulk internal energy ρ1|Ω1|ε1(θ) + ρ2|Ω2|ε2(θ).
fn bulk_energy(theta: f64, v1: f64, v2: f64, mat: &MaterialParams) -> Result<f64> {
    Ok(mat.rho1 * v1 * eval_phase(theta, 1, mat)?.eps + mat.rho2 * v2 * eval_phase(theta, 2, mat)?.eps)
}

/// Root of an increasing function on [lo, hi] by secant steps safeguarded with geometric bisection.
pub fn increasing_root<F>(f: F, lo: f64, hi: f64, rtol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa > 0.0 {
        return Err(Error::NoEquilibrium(format!("target below the attainable range (residual {fa:e} at {lo:e})")));
    }
    if fb < 0.0 {
        return Err(Error::Range(format!("no sign change in [{lo:e}, {hi:e}]")));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    for it in 0..400 {
        if fb == 0.0 || (b - a) <= rtol * b {
            break;
        }
        let secant = b - fb * (b - a) / (fb - fa);
        let mid = if a > 0.0 && b / a > 4.0 { (a * b).sqrt() } else { 0.5 * (a + b) };
        let width = b - a;
        let mut x = if secant > a && secant < b && it % 3 != 2 { secant } else { mid };
        // keep steps away from the bracket ends
        let guard = 1e-3 * width;
        x = x.clamp(a + guard, b - guard);
        let fx = f(x)?;
        if fx < 0.0 {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Ok(if fb.abs() < fa.abs() { b } else { a })
}

const THETA_BRACKET: (f64, f64) = (1e-8, 1e8);

pub fn temperature_from_energy(q: &ConservedQuantities, radius: f64, mat: &MaterialParams) -> Result<f64> {
    temperature_for_radii(q, &vec![radius; q.m], mat)
}

/// Temperature with balls of the given radii; the phase-1 volume is taken from the radii.
pub fn temperature_for_radii(q: &ConservedQuantities, radii: &[f64], mat: &MaterialParams) -> Result<f64> {
    let wn = unit_sphere_area(q.n);
    let v1: f64 = radii.iter().map(|r| wn * r.powi(q.n as i32) / q.n as f64).sum();
    let area: f64 = radii.iter().map(|r| wn * r.powi(q.n as i32 - 1)).sum();
    let v2 = q.volume - v1;
    if !(v2 > 0.0) {
        return Err(Error::Infeasible("balls fill the domain".into()));
    }
    let surface = mat.sigma * area;
    increasing_root(|t| Ok(bulk_energy(t, v1, v2, mat)? + surface - q.e0), THETA_BRACKET.0, THETA_BRACKET.1, 1e-15)
}

/// Centers on a circle in the first coordinate plane, separated by at least `gap`.
pub fn place_centers(m: usize, n: usize, radius: f64, r_out: f64, gap: f64) -> Result<Vec<Vec<f64>>> {
    let ring = if m == 1 { 0.0 } else { (2.0 * radius + gap) / (2.0 * (PI / m as f64).sin()) };
    if ring + radius + gap > r_out {
        return Err(Error::Infeasible(format!("{m} balls of radius {radius} do not fit in radius {r_out}")));
    }
    Ok((0..m)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / m as f64;
            let mut c = vec![0.0; n];
            c[0] = ring * a.cos();
            c[1] = ring * a.sin();
            c
        })
        .collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSummary {
    pub radius: f64,
    pub theta_star: f64,
    pub manifold_dim: usize,
    pub feasible: bool,
    pub config: Option<EquilibriumConfig>,
}

/// Radius, temperature and a non-degenerate placement in the ball of volume |Ω|.
pub fn solve_equilibrium(q: &ConservedQuantities, mat: &MaterialParams, gap_fraction: f64) -> Result<EquilibriumSummary> {
    let radius = radius_from_mass(q, mat)?;
    let theta_star = temperature_from_energy(q, radius, mat)?;
    let r_out = (q.n as f64 * q.volume / unit_sphere_area(q.n)).powf(1.0 / q.n as f64);
    let gap = gap_fraction * radius;
    let config = place_centers(q.m, q.n, radius, r_out, gap).ok().map(|centers| EquilibriumConfig {
        m: q.m,
        n: q.n,
        radius,
        theta_star,
        centers,
        r_out,
    });
    let feasible = config.as_ref().is_some_and(|c| c.check_nondegenerate(gap).is_ok());
    Ok(EquilibriumSummary { radius, theta_star, manifold_dim: manifold_dimension(q.m, q.n), feasible, config })
}

/// Quadrature nodes over the domain with phase labels. Phase-2 integrals use the
/// full domain ball minus the balls, so phase-2 nodes may carry negative weights.
#[derive(Debug, Clone)]
pub struct BulkGrid {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub phase: Vec<u8>,
    pub interface_area: f64,
    key: (usize, usize, u64),
}

fn ball_nodes(center: &[f64], radius: f64, n: usize, nr: usize, l_max: usize) -> Result<Vec<(Vec<f64>, f64)>> {
    let sph = ReferenceSphere::unit(n, l_max)?;
    let (rs, rw) = gauss_legendre_on(nr, 0.0, radius);
    let dirs = sph.unit_normals();
    let aw = sph.weights();
    let mut out = Vec::with_capacity(nr * dirs.len());
    for (r, wr) in rs.iter().zip(&rw) {
        for (d, wa) in dirs.iter().zip(&aw) {
            let p = d.iter().zip(center).map(|(x, c)| c + r * x).collect();
            out.push((p, wr * wa * r.powi(n as i32 - 1)));
        }
    }
    Ok(out)
}

impl BulkGrid {
    pub fn new(config: &EquilibriumConfig, nr: usize, l_max: usize) -> Result<Self> {
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut phase = Vec::new();
        let origin = vec![0.0; config.n];
        for (p, w) in ball_nodes(&origin, config.r_out, config.n, 2 * nr, l_max)? {
            points.push(p);
            weights.push(w);
            phase.push(2);
        }
        for c in &config.centers {
            for (p, w) in ball_nodes(c, config.radius, config.n, nr, l_max)? {
                points.push(p.clone());
                weights.push(-w);
                phase.push(2);
                points.push(p);
                weights.push(w);
                phase.push(1);
            }
        }
        Ok(BulkGrid { points, weights, phase, interface_area: config.interface_area(), key: config_key(config) })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn config_key(c: &EquilibriumConfig) -> (usize, usize, u64) {
    (c.m, c.n, c.radius.to_bits())
}

/// Velocity and temperature at the nodes of a `BulkGrid`.
#[derive(Debug, Clone)]
pub struct BulkState {
    pub u: Vec<Vec<f64>>,
    pub theta: Vec<f64>,
}

impl BulkState {
    pub fn at_rest(grid: &BulkGrid, n: usize, theta: f64) -> Self {
        BulkState { u: vec![vec![0.0; n]; grid.len()], theta: vec![theta; grid.len()] }
    }
}

fn check_state(state: &BulkState, grid: &BulkGrid, config: &EquilibriumConfig) -> Result<()> {
    if grid.key != config_key(config) {
        return Err(Error::Shape("grid was built for a different configuration".into()));
    }
    if state.u.len() != grid.len() || state.theta.len() != grid.len() || state.u.iter().any(|v| v.len() != config.n) {
        return Err(Error::Shape(format!("state does not match the {}-node grid", grid.len())));
    }
    Ok(())
}

/// E = ∫ (ρ/2 |u|² + ρ ε(θ)) dx + σ|Γ|.
pub fn total_energy(state: &BulkState, grid: &BulkGrid, config: &EquilibriumConfig, mat: &MaterialParams) -> Result<f64> {
    check_state(state, grid, config)?;
    let mut e = 0.0;
    for k in 0..grid.len() {
        let rho = mat.rho(grid.phase[k]);
        let u2: f64 = state.u[k].iter().map(|v| v * v).sum();
        e += grid.weights[k] * rho * (0.5 * u2 + eval_phase(state.theta[k], grid.phase[k], mat)?.eps);
    }
    Ok(e + mat.sigma * grid.interface_area)
}

/// Φ = ∫ ρ η(θ) dx.
pub fn total_entropy(state: &BulkState, grid: &BulkGrid, config: &EquilibriumConfig, mat: &MaterialParams) -> Result<f64> {
    check_state(state, grid, config)?;
    let mut s = 0.0;
    for k in 0..grid.len() {
        s += grid.weights[k] * mat.rho(grid.phase[k]) * eval_phase(state.theta[k], grid.phase[k], mat)?.eta;
    }
    Ok(s)
}

/// Entropy of the reduced state: balls with the given radii at the uniform temperature fixed by energy.
pub fn reduced_entropy(q: &ConservedQuantities, radii: &[f64], mat: &MaterialParams) -> Result<f64> {
    let theta = temperature_for_radii(q, radii, mat)
        .map_err(|e| Error::Infeasible(format!("temperature constraint failed: {e}")))?;
    let wn = unit_sphere_area(q.n);
    let v1: f64 = radii.iter().map(|r| wn * r.powi(q.n as i32) / q.n as f64).sum();
    let v2 = q.volume - v1;
    Ok(mat.rho1 * v1 * eval_phase(theta, 1, mat)?.eta + mat.rho2 * v2 * eval_phase(theta, 2, mat)?.eta)
}

/// Radii after moving the fraction `delta` of one ball's volume from ball 2 to ball 1.
pub fn transfer_radii(m: usize, n: usize, radius: f64, delta: f64) -> Vec<f64> {
    let mut r = vec![radius; m];
    if m >= 2 {
        r[0] = radius * (1.0 + delta).powf(1.0 / n as f64);
        r[1] = radius * (1.0 - delta).powf(1.0 / n as f64);
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub n_samples: usize,
    /// Relative radius perturbation.
    pub step: f64,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions { n_samples: 32, step: 1e-2, seed: 7 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub is_local_max: bool,
    pub base_entropy: f64,
    /// Direction (relative radius changes, mean zero) with the largest entropy change.
    pub worst_direction: Vec<f64>,
    pub worst_change: f64,
    /// Entropy changes along the two-ball volume transfer at the sampled fractions.
    pub transfer_path: Vec<(f64, f64)>,
}

/// Samples mean-zero radius perturbations at fixed phase-1 volume and energy and
/// reports whether the equal-radius point is a strict local entropy maximum.
pub fn entropy_criticality_probe(config: &EquilibriumConfig, q: &ConservedQuantities, mat: &MaterialParams, opts: &ProbeOptions) -> Result<ProbeReport> {
    let m = config.m;
    let base = reduced_entropy(q, &vec![config.radius; m], mat)?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    if m >= 2 {
        let mut transfer = vec![0.0; m];
        transfer[0] = 1.0;
        transfer[1] = -1.0;
        dirs.push(transfer);
        for _ in 1..opts.n_samples.max(1) {
            let mut d: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean = d.iter().sum::<f64>() / m as f64;
            d.iter_mut().for_each(|x| *x -= mean);
            dirs.push(d);
        }
        for d in dirs.iter_mut() {
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            d.iter_mut().for_each(|x| *x /= norm);
        }
    }
    let n = config.n as i32;
    let target: f64 = m as f64 * config.radius.powi(n);
    let changes: Vec<f64> = dirs
        .par_iter()
        .map(|d| {
            let mut radii: Vec<f64> = d.iter().map(|x| config.radius * (1.0 + opts.step * x)).collect();
            let scale = (target / radii.iter().map(|r| r.powi(n)).sum::<f64>()).powf(1.0 / n as f64);
            radii.iter_mut().for_each(|r| *r *= scale);
            Ok(reduced_entropy(q, &radii, mat)? - base)
        })
        .collect::<Result<_>>()?;
    let (worst_direction, worst_change) = dirs
        .iter()
        .zip(&changes)
        .fold((Vec::new(), f64::NEG_INFINITY), |acc, (d, &c)| if c > acc.1 { (d.clone(), c) } else { acc });
    let transfer_path = if m >= 2 {
        [0.0, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2]
            .iter()
            .map(|&delta| Ok((delta, reduced_entropy(q, &transfer_radii(m, config.n, config.radius, delta), mat)? - base)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    Ok(ProbeReport {
        is_local_max: changes.iter().all(|&c| c < 0.0),
        base_entropy: base,
        worst_direction,
        worst_change: if changes.is_empty() { 0.0 } else { worst_change },
        transfer_path,
    })
}
