//! Acceptance criteria 1 to 11, shared by the `acceptance` test target and `selftest`.
//!
//! Every criterion is a list of checks with pinned tolerances. A failed check may carry
//! a known-discrepancy note: the check is still reported as failing.

use std::f64::consts::{E, FRAC_PI_2, PI};
use std::time::Instant;

use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::equilibria::{entropy_criticality_probe, radius_from_mass, solve_equilibrium, temperature_from_energy, ConservedQuantities, ProbeOptions};
use crate::error::{Error, Result};
use crate::flat_symbols::{formula_limits_at_infinity, psi_and_ell, stated_limits_at_infinity, stated_limits_at_zero, symbols, z_ell_limit, FlatParams, Variant};
use crate::geometry::{graph_curvature, linearized_curvature_mode, unit_sphere_area, GraphPatch, ReferenceSphere};
use crate::spectral::{
    block_ball_eigenvalues, decoupling_check, heat_ntd, heat_ntd_profile, kernel_analysis, mode_spectra, multi_ball_block_spectrum, stokes_mode_solve,
    LinearizationParams, RadialGeometry,
};
use crate::thermo::{latent_heat, log_grid, FreeEnergy, MaterialParams};
use crate::zerocert::{certify_planted, certify_zero_free, Region, Verdict};

/// The stated limits of `q_k` at infinity contradict the component formulas.
pub const KNOWN_Q_INFINITY: &str =
    "stated q_k limit at infinity disagrees with the limit of the component formulas, (sqrt(rho1 mu1) + sqrt(rho2 mu2))^2 (times 1/rho_k for S22), which the factorization also requires";

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub tol: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub known: Option<&'static str>,
}

impl Check {
    /// Passes when `value <= tol`.
    pub fn le(label: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { label: label.into(), value, tol, passed: value <= tol, known: None }
    }

    /// Passes when `value < tol`.
    pub fn lt(label: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { label: label.into(), value, tol, passed: value < tol, known: None }
    }

    /// Passes when `value >= tol`.
    pub fn ge(label: impl Into<String>, value: f64, tol: f64) -> Self {
        Check { label: label.into(), value, tol, passed: value >= tol, known: None }
    }

    pub fn count(label: impl Into<String>, got: usize, want: usize) -> Self {
        Check { label: label.into(), value: got as f64, tol: want as f64, passed: got == want, known: None }
    }

    pub fn flag(label: impl Into<String>, ok: bool) -> Self {
        Check { label: label.into(), value: ok as u8 as f64, tol: 1.0, passed: ok, known: None }
    }

    fn known(mut self, note: &'static str) -> Self {
        self.known = Some(note);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    pub checks: Vec<Check>,
    /// set when the criterion could not be evaluated
    pub error: Option<String>,
    pub seconds: f64,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed)
    }

    /// Every failure carries a known-discrepancy note.
    pub fn only_known_failures(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.passed || c.known.is_some())
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// One-line summary.
    pub fn line(&self) -> String {
        let head = format!("criterion {:>2} {:<34}", self.id, self.title);
        if let Some(e) = &self.error {
            return format!("{head} ERROR {e}");
        }
        let fails = self.failures();
        if fails.is_empty() {
            format!("{head} PASS ({} checks, {:.1} s)", self.checks.len(), self.seconds)
        } else {
            let known = fails.iter().filter(|c| c.known.is_some()).count();
            let first = fails[0];
            format!(
                "{head} FAIL ({}/{} checks failed, {known} known; first: {} = {:.6e} vs {:.3e})",
                fails.len(),
                self.checks.len(),
                first.label,
                first.value,
                first.tol
            )
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub criteria: Vec<Criterion>,
}

impl Suite {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(Criterion::passed)
    }

    pub fn only_known_failures(&self) -> bool {
        self.criteria.iter().all(Criterion::only_known_failures)
    }

    pub fn any_error(&self) -> bool {
        self.criteria.iter().any(|c| c.error.is_some())
    }
}

pub const TITLES: [&str; 11] = [
    "symbol exactness",
    "factorization",
    "zero-freeness certificates",
    "psi/ell properties",
    "heat Neumann-to-Dirichlet",
    "Stokes operator structure",
    "spectrum, connected interface",
    "spectrum, disconnected block model",
    "decoupling at zero latent heat",
    "equilibria",
    "geometry",
];

/// Runs criterion `id` (1 to 11).
pub fn run_criterion(id: u8, cfg: &RunConfig) -> Criterion {
    let start = Instant::now();
    let out = match id {
        1 => symbol_exactness(cfg),
        2 => factorization(cfg),
        3 => certificates(cfg),
        4 => psi_ell(cfg),
        5 => heat(cfg),
        6 => stokes(cfg),
        7 => connected_spectrum(cfg),
        8 => block_model(cfg),
        9 => decoupling(cfg),
        10 => equilibria(cfg),
        11 => geometry(cfg),
        _ => Err(Error::Config(format!("no acceptance criterion {id}"))),
    };
    let title = TITLES.get(id.wrapping_sub(1) as usize).copied().unwrap_or("unknown");
    let (checks, error) = match out {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Criterion { id, title, checks, error, seconds: start.elapsed().as_secs_f64() }
}

pub fn run_suite(cfg: &RunConfig) -> Suite {
    Suite { criteria: (1..=11).map(|id| run_criterion(id, cfg)).collect() }
}

fn draws(cfg: &RunConfig) -> Vec<FlatParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed);
    (0..cfg.run.draws).map(|_| FlatParams::random(&mut rng)).collect()
}

/// Points of the closed right half plane with log-uniform modulus in `[1e-4, rmax]`.
fn rhp_samples(rng: &mut ChaCha8Rng, count: usize, rmax: f64) -> Vec<C> {
    (0..count)
        .map(|_| {
            let r = rng.gen_range(-4.0..rmax.log10());
            let t = rng.gen_range(-FRAC_PI_2..=FRAC_PI_2);
            C::from_polar(10f64.powf(r), t)
        })
        .collect()
}

fn rel(a: C, b: f64) -> f64 {
    (a - b).norm() / b.abs().max(1.0)
}

const FAR: f64 = 1e8;
const FAR_ANGLES: [f64; 3] = [0.0, PI / 3.0, -PI / 3.0];
const NAMES: [&str; 4] = ["p1", "p2", "q1", "q2"];

fn symbol_exactness(cfg: &RunConfig) -> Result<Vec<Check>> {
    let ps = draws(cfg);
    let mut checks = Vec::new();
    for variant in [Variant::S11, Variant::S22] {
        let mut at_zero = [0.0f64; 4];
        let mut at_far = [0.0f64; 4];
        let mut formula_far = [0.0f64; 4];
        for p in &ps {
            let b = symbols(variant, C::new(0.0, 0.0), p)?;
            let got = [b.p1, b.p2, b.q1, b.q2];
            let want = stated_limits_at_zero(variant, p);
            for k in 0..4 {
                at_zero[k] = at_zero[k].max(rel(got[k], want[k]));
            }
            let stated = stated_limits_at_infinity(variant, p);
            let derived = formula_limits_at_infinity(variant, p);
            for t in FAR_ANGLES {
                let b = symbols(variant, C::from_polar(FAR, t), p)?;
                let got = [b.p1, b.p2, b.q1, b.q2];
                for k in 0..4 {
                    at_far[k] = at_far[k].max((got[k] - stated[k]).norm() / stated[k].abs());
                    formula_far[k] = formula_far[k].max((got[k] - derived[k]).norm() / derived[k].abs());
                }
            }
        }
        let v = format!("{variant:?}").to_lowercase();
        for k in 0..4 {
            checks.push(Check::le(format!("{v} {} at 0", NAMES[k]), at_zero[k], 1e-12));
        }
        for k in 0..4 {
            let c = Check::le(format!("{v} {} at |z|=1e8, stated", NAMES[k]), at_far[k], 1e-3);
            checks.push(if k >= 2 && !c.passed { c.known(KNOWN_Q_INFINITY) } else { c });
        }
        for k in 2..4 {
            checks.push(Check::le(format!("{v} {} at |z|=1e8, formula limit", NAMES[k]), formula_far[k], 1e-3));
        }
    }
    Ok(checks)
}

fn factorization(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed.wrapping_add(1));
    let mut checks = Vec::new();
    for variant in [Variant::S11, Variant::S22] {
        let mut worst = 0.0f64;
        for p in draws(cfg) {
            for z in rhp_samples(&mut rng, 200, 1e6) {
                worst = worst.max(symbols(variant, z, &p)?.factorization_residual());
            }
        }
        checks.push(Check::le(format!("{variant:?} |r - r1 r2| / (1 + |r|)"), worst, 1e-9));
    }
    Ok(checks)
}

fn certificates(cfg: &RunConfig) -> Result<Vec<Check>> {
    let ps = draws(cfg);
    let opts = cfg.symbol.winding;
    let margin = cfg.symbol.margin;
    let mut checks = Vec::new();
    for variant in [Variant::S11, Variant::S22] {
        for rmax in [1e1, 1e3, 1e6] {
            let region = Region { margin, ..Region::half_plane(rmax) };
            let results: Vec<(i64, bool)> = ps
                .par_iter()
                .map(|p| certify_zero_free(variant, &region, p, &opts).map(|c| (c.winding, c.verdict == Verdict::ZeroFree)))
                .collect::<Result<_>>()?;
            let worst = results.iter().map(|r| r.0.abs()).max().unwrap_or(0);
            checks.push(Check::count(format!("{variant:?} winding, Rmax = {rmax:e}"), worst as usize, 0));
            checks.push(Check::flag(format!("{variant:?} zero-free verdicts, Rmax = {rmax:e}"), results.iter().all(|r| r.1)));
        }
        let region = Region { margin, ..Region::half_plane(1e3) };
        let planted: Vec<i64> = ps
            .par_iter()
            .map(|p| certify_planted(variant, &region, p, C::new(1.0, 0.5), &opts).map(|c| c.winding))
            .collect::<Result<_>>()?;
        checks.push(Check::flag(format!("{variant:?} planted zero adds exactly 1"), planted.iter().all(|&w| w == 1)));
    }
    Ok(checks)
}

fn psi_ell(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed.wrapping_add(2));
    let (mut psi0, mut ell0, mut min_re, mut far) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for p in draws(cfg) {
        let (psi, ell) = psi_and_ell(C::new(0.0, 0.0), &p)?;
        psi0 = psi0.max(rel(psi, 2.0 * (p.mu1 + p.mu2)));
        ell0 = ell0.max(ell.norm());
        for z in rhp_samples(&mut rng, 500, 1e6) {
            min_re = min_re.min(psi_and_ell(z, &p)?.0.re);
        }
        let lim = z_ell_limit(&p);
        for t in FAR_ANGLES {
            let z = C::from_polar(FAR, t);
            far = far.max((z * psi_and_ell(z, &p)?.1 - lim).norm() / lim.abs());
        }
    }
    Ok(vec![
        Check::le("psi(0) - 2(mu1 + mu2)", psi0, 1e-12),
        Check::le("|ell(0)|", ell0, 1e-12),
        Check::flag(format!("Re psi > 0 on 500 samples per draw (min {min_re:.3e})"), min_re > 0.0),
        Check::le("z ell(z) at |z|=1e8 vs limit, relative", far, 1e-3),
    ])
}

/// Exact degree-0 heat response in three dimensions from `sinh(k r)/r` and `exp(+-k r)/r`.
pub fn heat_closed_form(lambda: f64, geom: &RadialGeometry, par: &LinearizationParams) -> impl Fn(f64) -> f64 {
    let k = [0, 1].map(|j| (par.rho[j] * par.kappa[j] * lambda / par.d[j]).sqrt());
    let (r0, ro) = (geom.radius, geom.r_out);
    let ball = move |r: f64| ((k[0] * r).sinh() / r, (k[0] * r * (k[0] * r).cosh() - (k[0] * r).sinh()) / (r * r));
    let up = move |r: f64| ((k[1] * (r - ro)).exp() / r, (k[1] * (r - ro)).exp() * (k[1] * r - 1.0) / (r * r));
    let down = move |r: f64| ((-k[1] * (r - r0)).exp() / r, -(-k[1] * (r - r0)).exp() * (k[1] * r + 1.0) / (r * r));
    let m = nalgebra::Matrix3::new(
        0.0, up(ro).1, down(ro).1,
        -ball(r0).0, up(r0).0, down(r0).0,
        par.d[0] * ball(r0).1, -par.d[1] * up(r0).1, -par.d[1] * down(r0).1,
    );
    let c = m.lu().solve(&nalgebra::Vector3::new(0.0, 0.0, 1.0)).expect("regular transmission system");
    move |r: f64| if r <= r0 { c[0] * ball(r).0 } else { c[1] * up(r).0 + c[2] * down(r).0 }
}

fn spectral_setup(cfg: &RunConfig, n: usize) -> Result<(RadialGeometry, LinearizationParams)> {
    let g = cfg.radial_geometry()?;
    Ok((RadialGeometry { n, ..g }, cfg.linearization()?))
}

/// Least-squares slope of `ln|N|` against `ln lambda`.
pub fn decay_slope(lams: &[f64], values: &[f64]) -> f64 {
    let xs: Vec<f64> = lams.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|y| y.abs().ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>()
}

fn heat(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let (geom, par) = spectral_setup(cfg, 3)?;
    let mut worst = 0.0f64;
    for lam in [0.5, 3.0, 40.0] {
        let exact = heat_closed_form(lam, &geom, &par);
        let sol = heat_ntd_profile(C::new(lam, 0.0), 0, &geom, &par)?;
        let scale = exact(geom.radius).abs();
        worst = worst.max(rel(sol.value, exact(geom.radius)) / scale.min(1.0));
        for j in 0..2 {
            for (v, &r) in sol.theta[j].iter().zip(&sol.r[j]) {
                worst = worst.max((v - exact(r)).norm() / scale);
            }
        }
    }
    checks.push(Check::le("l=0, n=3 against closed form", worst, 1e-8));
    let mut defect = 0.0f64;
    for n in [2, 3] {
        let (geom, par) = spectral_setup(cfg, n)?;
        for l in 0..4 {
            for lam in [C::new(0.5, 0.0), C::new(1.0, 2.0), C::new(30.0, -5.0), C::new(100.0, 0.0)] {
                defect = defect.max(heat_ntd_profile(lam, l, &geom, &par)?.quadratic_form_defect());
            }
        }
    }
    checks.push(Check::le("quadratic-form identity", defect, 1e-8));
    let lams = log_grid(1.0, 1e4, 9);
    let mut slope = f64::NEG_INFINITY;
    for n in [2, 3] {
        let (geom, par) = spectral_setup(cfg, n)?;
        let fine = RadialGeometry { points: geom.points.max(64), ..geom };
        for l in 0..3 {
            let vals: Vec<f64> = lams.iter().map(|&x| heat_ntd(C::new(x, 0.0), l, &fine, &par).map(|v| v.norm())).collect::<Result<_>>()?;
            slope = slope.max(decay_slope(&lams, &vals));
        }
    }
    checks.push(Check::le("fitted decay slope on [1, 1e4]", slope, -0.05));
    Ok(checks)
}

fn stokes(cfg: &RunConfig) -> Result<Vec<Check>> {
    let (mut asym, mut schur, mut mean) = (0.0f64, 0.0f64, 0.0f64);
    for n in [2, 3] {
        let (geom, par) = spectral_setup(cfg, n)?;
        for lam in [0.0, 1.0, 100.0] {
            let lam = C::new(lam, 0.0);
            let r0 = stokes_mode_solve(lam, 0, &geom, &par, (C::new(1.0, 0.0), C::new(0.0, 0.0)))?;
            mean = mean.max(r0.ns.norm());
            for l in 1..=4 {
                let r = stokes_mode_solve(lam, l, &geom, &par, (C::new(1.0, 0.0), C::new(0.0, 0.0)))?;
                asym = asym.max(r.asymmetry());
                schur = schur.max((r.schur_ns()? - r.ns).norm() / r.ns.norm());
            }
        }
    }
    Ok(vec![
        Check::le("S symmetric, relative", asym, 1e-8),
        Check::le("Schur identity, relative", schur, 1e-8),
        Check::le("constant data annihilated", mean, 1e-8),
    ])
}

fn connected_spectrum(cfg: &RunConfig) -> Result<Vec<Check>> {
    let opts = cfg.spectrum_options();
    let mut checks = Vec::new();
    for n in [2, 3] {
        let (geom, par) = spectral_setup(cfg, n)?;
        let spectra = mode_spectra(cfg.geometry.l_max, &geom, &par, &opts)?;
        let zero = |z: &C| z.norm() <= opts.zero_tol;
        let largest = spectra.iter().flat_map(|s| s.eigenvalues.iter()).filter(|z| !zero(z)).map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let zeros: usize = spectra.iter().map(|s| s.zero_count * s.harmonics).sum();
        let imag = spectra.iter().flat_map(|s| s.eigenvalues.iter()).filter(|z| z.re >= 0.0).map(|z| z.im.abs()).fold(0.0, f64::max);
        let kernel = kernel_analysis(&geom, &par, 1, &opts)?;
        let unconverged: usize = spectra.iter().map(|s| s.unconverged.len()).sum();
        checks.push(Check::lt(format!("n={n} largest Re of nonzero eigenvalues"), largest, 1e-8));
        checks.push(Check::count(format!("n={n} zero eigenvalues over degrees"), zeros, n + 2));
        checks.push(Check::count(format!("n={n} kernel dimension"), kernel.dim, n + 2));
        checks.push(Check::flag(format!("n={n} semi-simple, decided"), kernel.semisimple && !kernel.inconclusive && spectra.iter().all(|s| s.semisimple)));
        checks.push(Check::le(format!("n={n} grid change under N -> 2N"), spectra.iter().map(|s| s.grid_change).fold(0.0, f64::max), 1e-7));
        checks.push(Check::count(format!("n={n} unconverged window eigenvalues"), unconverged, 0));
        checks.push(Check::le(format!("n={n} energy identity residual"), spectra.iter().map(|s| s.max_residual()).fold(0.0, f64::max), 1e-6));
        checks.push(Check::le(format!("n={n} |Im| of eigenvalues with Re >= 0"), imag, 1e-8));
    }
    Ok(checks)
}

fn block_model(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in [2, 3] {
        let (geom, par) = spectral_setup(cfg, n)?;
        let pencil = block_ball_eigenvalues(&geom, &par)?;
        for m in [2, 3, 5] {
            let b = multi_ball_block_spectrum(m, &geom, &par, &cfg.dispersion_options())?;
            checks.push(Check::count(format!("n={n} m={m} positive eigenvalues"), b.positive_eigenvalue_count, m - 1));
            if m == 2 {
                let gap = match (b.crossings.first(), pencil.first()) {
                    (Some(c), Some(&p)) if pencil.len() == 1 => (c.lambda - p).abs() / p,
                    _ => f64::INFINITY,
                };
                checks.push(Check::le(format!("n={n} crossing vs pencil eigenvalue"), gap, 1e-6));
            }
        }
    }
    Ok(checks)
}

/// Temperature with vanishing latent heat, searched on `[1e-3, 1e3]`.
pub fn zero_latent_heat_temperature(mat: &MaterialParams) -> Result<f64> {
    let grid = log_grid(1e-3, 1e3, 241);
    let f = |t: f64| latent_heat(t, mat);
    for w in grid.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (f(a)?, f(b)?);
        if fa == 0.0 {
            return Ok(a);
        }
        if fa * fb < 0.0 {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 || hi - lo <= 4.0 * f64::EPSILON * mid {
                    return Ok(mid);
                }
                if fm * flo < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
    }
    Err(Error::Range("latent heat has no sign change on [1e-3, 1e3]".into()))
}

fn decoupling(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mat = cfg.material()?;
    let theta = zero_latent_heat_temperature(&mat)?;
    let residual = latent_heat(theta, &mat)?.abs();
    let mut checks = vec![Check::le(format!("|l(theta_*)| at theta_* = {theta}"), residual, 1e-12)];
    let (mut shift, mut triangular, mut compared) = (0.0f64, true, 0);
    for n in [2, 3] {
        let (geom, _) = spectral_setup(cfg, n)?;
        let mut par = LinearizationParams::from_material(&mat, theta)?;
        par.l_star = 0.0;
        for l in 0..=3 {
            let r = decoupling_check(l, &geom, &par, &cfg.spectrum_options())?;
            shift = shift.max(r.max_shift);
            triangular &= r.block_triangular;
            compared += r.compared;
        }
    }
    checks.push(Check::flag("temperature block decouples", triangular));
    checks.push(Check::ge("mechanical eigenvalues compared", compared as f64, 1.0));
    checks.push(Check::le("mechanical spectrum shift under x10 kappa, d", shift, 1e-9));
    Ok(checks)
}

fn equilibria(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mat = MaterialParams::default();
    let (mut mass, mut temp) = (0.0f64, 0.0f64);
    let mut probes = Vec::new();
    for n in [2usize, 3] {
        for m in [1usize, 2] {
            let volume = unit_sphere_area(n) * 2f64.powi(n as i32) / n as f64;
            let v1 = 0.1 * volume;
            let c0 = mat.rho1 * v1 + mat.rho2 * (volume - v1);
            let area_of = |r: f64| m as f64 * unit_sphere_area(n) * r.powi(n as i32 - 1);
            let mut q = ConservedQuantities { c0, e0: 0.0, volume, n, m };
            let r = radius_from_mass(&q, &mat)?;
            let v1_back = m as f64 * unit_sphere_area(n) * r.powi(n as i32) / n as f64;
            let c0_back = mat.rho1 * v1_back + mat.rho2 * (volume - v1_back);
            mass = mass.max((c0_back - c0).abs() / c0);
            // linear laws: eps_j = c_j theta + e0_j
            let lin = |law: &FreeEnergy| match *law {
                FreeEnergy::Reference { c, e0, .. } => Ok((c, e0)),
                _ => Err(Error::Config("closed form needs reference laws".into())),
            };
            let ((c1, e1), (c2, e2)) = (lin(&mat.phase1.free_energy)?, lin(&mat.phase2.free_energy)?);
            let (m1, m2) = (mat.rho1 * v1_back, mat.rho2 * (volume - v1_back));
            q.e0 = (m1 * c1 + m2 * c2) * E + m1 * e1 + m2 * e2 + mat.sigma * area_of(r);
            let theta = temperature_from_energy(&q, r, &mat)?;
            let closed = (q.e0 - mat.sigma * area_of(r) - m1 * e1 - m2 * e2) / (m1 * c1 + m2 * c2);
            temp = temp.max((theta - closed).abs() / closed);
            let eq = solve_equilibrium(&q, &mat, cfg.run.gap_fraction)?;
            let config = eq.config.ok_or_else(|| Error::Infeasible(format!("n={n} m={m}: balls do not fit")))?;
            let probe = entropy_criticality_probe(&config, &q, &mat, &ProbeOptions { seed: cfg.run.seed, ..cfg.probe_options() })?;
            probes.push((n, m, probe));
        }
    }
    let mut checks = vec![Check::le("mass/radius round trip", mass, 1e-12), Check::le("temperature vs linear closed form", temp, 1e-10)];
    for (n, m, p) in probes {
        if m == 1 {
            checks.push(Check::flag(format!("n={n} m=1 entropy local maximum"), p.is_local_max));
        } else {
            let path: Vec<f64> = p.transfer_path.iter().map(|x| x.1).collect();
            let increasing = path.len() >= 3 && path.windows(2).all(|w| w[1] > w[0]);
            checks.push(Check::flag(format!("n={n} m=2 entropy strictly increasing along volume transfer"), increasing));
        }
    }
    Ok(checks)
}

fn geometry(cfg: &RunConfig) -> Result<Vec<Check>> {
    let radius = cfg.geometry.radius;
    let mut checks = Vec::new();
    for n in [2, 3] {
        let sph = ReferenceSphere::new(n, vec![0.0; n], radius, 16)?;
        let h0 = graph_curvature(&sph, &GraphPatch::new(&sph, vec![0.0; sph.node_count()])?)?;
        let want = -(n as f64 - 1.0) / radius;
        checks.push(Check::le(format!("n={n} curvature of the sphere"), h0.iter().map(|h| (h - want).abs()).fold(0.0, f64::max), 1e-10));
        let mut order = f64::INFINITY;
        for (l, m) in [(2usize, if n == 2 { 2i64 } else { 1 }), (3, -3)] {
            let y = sph.harmonic(l, m)?;
            let a = linearized_curvature_mode(l, n, radius);
            let rem: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
                .iter()
                .map(|&e| {
                    let hh = graph_curvature(&sph, &GraphPatch::new(&sph, y.iter().map(|v| e * v * radius).collect())?)?;
                    Ok(hh.iter().zip(&h0).zip(&y).map(|((a1, b), yv)| (a1 - b + e * radius * a * yv).abs()).fold(0.0, f64::max))
                })
                .collect::<Result<_>>()?;
            for w in rem.windows(2) {
                order = order.min((w[0] / w[1]).log2());
            }
        }
        checks.push(Check::ge(format!("n={n} linearization order"), order, 1.9));
        checks.push(Check::flag(format!("n={n} a_1 = 0 exactly"), [0.3, 1.0, radius, 7.5].iter().all(|&r| linearized_curvature_mode(1, n, r) == 0.0)));
    }
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_constructors() {
        assert!(Check::le("a", 1.0, 1.0).passed);
        assert!(!Check::lt("a", 1.0, 1.0).passed);
        assert!(Check::count("c", 3, 3).passed && !Check::count("c", 2, 3).passed);
        let k = Check::le("b", 2.0, 1.0).known("x");
        let crit = Criterion { id: 1, title: "t", checks: vec![k, Check::flag("f", true)], error: None, seconds: 0.0 };
        assert!(!crit.passed() && crit.only_known_failures());
        assert!(crit.line().contains("FAIL") && crit.line().contains("1 known"));
    }

    #[test]
    fn slope_of_a_power_law() {
        let lams = log_grid(1.0, 1e4, 5);
        let vals: Vec<f64> = lams.iter().map(|x| 3.0 * x.powf(-0.4)).collect();
        assert!((decay_slope(&lams, &vals) + 0.4).abs() < 1e-12);
    }

    #[test]
    fn zero_latent_heat_for_reference_laws_is_one() {
        assert_eq!(zero_latent_heat_temperature(&MaterialParams::default()).unwrap(), 1.0);
    }

    #[test]
    fn unknown_criterion_is_an_error() {
        let c = run_criterion(12, &RunConfig::default());
        assert!(c.error.is_some() && !c.passed());
    }
}
