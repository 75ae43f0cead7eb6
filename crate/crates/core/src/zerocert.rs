//! Argument-principle certificates: winding numbers along piecewise contours,
//! zero-freeness of the reduced Lopatinskii determinants, and lower-bound scans
//! of the boundary symbol.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flat_symbols::{self, psi_and_ell, CurvatureSymbol, FlatParams, Variant};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Line { a: C, b: C },
    Arc { center: C, radius: f64, from: f64, to: f64 },
}

impl Segment {
    pub fn point(&self, t: f64) -> C {
        match *self {
            Segment::Line { a, b } => a + (b - a) * t,
            Segment::Arc { center, radius, from, to } => center + C::from_polar(radius, from + (to - from) * t),
        }
    }
}

/// Closed path made of consecutive segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub segments: Vec<Segment>,
}

impl Contour {
    pub fn circle(center: C, radius: f64) -> Self {
        Contour { segments: vec![Segment::Arc { center, radius, from: 0.0, to: TAU }] }
    }

    /// Polyline from `a` to `b` split at geometrically spaced breakpoints measured from `origin`.
    fn log_ray(origin: C, dir: C, from: f64, to: f64, segs: &mut Vec<Segment>) {
        let mut marks = vec![from];
        let (lo, hi) = (from.min(to), from.max(to));
        let mut m = 10f64.powf(lo.max(1e-300).log10().floor() + 1.0);
        let mut inner = Vec::new();
        while m < hi {
            if m > lo {
                inner.push(m);
            }
            m *= 10.0;
        }
        if from > to {
            inner.reverse();
        }
        marks.extend(inner);
        marks.push(to);
        for w in marks.windows(2) {
            segs.push(Segment::Line { a: origin + dir * w[0], b: origin + dir * w[1] });
        }
    }

    pub fn is_closed(&self) -> bool {
        let n = self.segments.len();
        (0..n).all(|k| {
            let end = self.segments[k].point(1.0);
            let start = self.segments[(k + 1) % n].point(0.0);
            (end - start).norm() <= 1e-9 * (1.0 + end.norm())
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionKind {
    /// {Re z ≥ 0, |z| ≤ rmax}
    HalfPlane,
    /// {|arg z| ≤ phi, r ≤ |z| ≤ rmax}
    Sector { phi: f64, r: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub rmax: f64,
    /// Minimum distance between the boundary and either branch cut.
    pub margin: f64,
}

impl Region {
    pub fn half_plane(rmax: f64) -> Self {
        Region { kind: RegionKind::HalfPlane, rmax, margin: 1e-3 }
    }

    pub fn sector(phi: f64, r: f64, rmax: f64) -> Self {
        Region { kind: RegionKind::Sector { phi, r }, rmax, margin: 1e-3 }
    }

    /// Positively oriented boundary.
    pub fn contour(&self) -> Contour {
        let mut segs = Vec::new();
        match self.kind {
            RegionKind::HalfPlane => {
                let r = self.rmax;
                segs.push(Segment::Arc { center: C::new(0.0, 0.0), radius: r, from: -FRAC_PI_2, to: FRAC_PI_2 });
                let up = C::new(0.0, 1.0);
                let near = 1e-3f64.min(r / 10.0);
                Contour::log_ray(C::new(0.0, 0.0), up, r, near, &mut segs);
                segs.push(Segment::Line { a: up * near, b: -up * near });
                Contour::log_ray(C::new(0.0, 0.0), -up, near, r, &mut segs);
            }
            RegionKind::Sector { phi, r } => {
                let top = C::from_polar(1.0, phi);
                let bottom = C::from_polar(1.0, -phi);
                segs.push(Segment::Arc { center: C::new(0.0, 0.0), radius: self.rmax, from: -phi, to: phi });
                Contour::log_ray(C::new(0.0, 0.0), top, self.rmax, r, &mut segs);
                segs.push(Segment::Arc { center: C::new(0.0, 0.0), radius: r, from: phi, to: -phi });
                Contour::log_ray(C::new(0.0, 0.0), bottom, r, self.rmax, &mut segs);
            }
        }
        Contour { segments: segs }
    }

    pub fn contains(&self, z: C) -> bool {
        match self.kind {
            RegionKind::HalfPlane => z.re >= 0.0 && z.norm() <= self.rmax,
            RegionKind::Sector { phi, r } => z.arg().abs() <= phi && z.norm() >= r && z.norm() <= self.rmax,
        }
    }

    /// Checks the boundary clearance from both cuts on a dense sampling.
    pub fn validate(&self, p: &FlatParams) -> Result<()> {
        if !(self.rmax > 0.0) {
            return Err(Error::Config("region radius must be positive".into()));
        }
        if let RegionKind::Sector { phi, r } = self.kind {
            if !(r > 0.0 && r < self.rmax && phi > 0.0 && phi < PI) {
                return Err(Error::Config(format!("bad sector phi={phi} r={r}")));
            }
        }
        for seg in &self.contour().segments {
            for k in 0..=256 {
                let z = seg.point(k as f64 / 256.0);
                if p.cut_distance(z) < self.margin {
                    return Err(Error::Branch(z));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindingOptions {
    /// Samples per segment before adaptive refinement.
    pub initial_samples: usize,
    /// Refinement continues while an adjacent argument step reaches this value.
    pub max_arg_step: f64,
    pub depth_cap: u32,
    pub min_modulus_tol: f64,
    pub band: f64,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions {
            initial_samples: 32,
            max_arg_step: PI / 4.0,
            depth_cap: 20,
            min_modulus_tol: 1e-12,
            band: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    ZeroFree,
    ZerosDetected { count: i64 },
    Inconclusive { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub function: String,
    pub points: Vec<C>,
    pub values: Vec<C>,
    pub total_arg: f64,
    pub winding: i64,
    pub winding_real: f64,
    pub min_modulus: f64,
    pub min_modulus_at: C,
    pub max_depth: u32,
    pub max_arg_step: f64,
    pub verdict: Verdict,
}

#[derive(Default)]
struct PairStats {
    depth: u32,
    step: f64,
}

fn refine<F>(f: &F, seg: &Segment, a: (f64, C), b: (f64, C), depth: u32, opts: &WindingOptions, out: &mut Vec<(C, C)>, st: &mut PairStats) -> Result<()>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let step = (b.1 / a.1).arg().abs();
    if step < opts.max_arg_step || depth >= opts.depth_cap {
        st.depth = st.depth.max(depth);
        st.step = st.step.max(step);
        return Ok(());
    }
    let tm = 0.5 * (a.0 + b.0);
    let zm = seg.point(tm);
    let vm = eval_checked(f, zm, opts)?;
    refine(f, seg, a, (tm, vm), depth + 1, opts, out, st)?;
    out.push((zm, vm));
    refine(f, seg, (tm, vm), b, depth + 1, opts, out, st)
}

fn eval_checked<F>(f: &F, z: C, opts: &WindingOptions) -> Result<C>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let v = f(z)?;
    if !(v.norm() > opts.min_modulus_tol) {
        return Err(Error::ZeroOnContour { at: z, modulus: v.norm() });
    }
    Ok(v)
}

/// Winding number of `f` along `contour` by adaptive argument tracking.
pub fn winding_number<F>(name: &str, f: &F, contour: &Contour, opts: &WindingOptions) -> Result<Certificate>
where
    F: Fn(C) -> Result<C> + Sync,
{
    if !contour.is_closed() {
        return Err(Error::Config("contour is not closed".into()));
    }
    let n0 = opts.initial_samples.max(2);
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut max_depth = 0;
    let mut max_step: f64 = 0.0;
    for seg in &contour.segments {
        let ts: Vec<f64> = (0..=n0).map(|k| k as f64 / n0 as f64).collect();
        let base: Vec<(f64, C, C)> = ts
            .par_iter()
            .map(|&t| {
                let z = seg.point(t);
                eval_checked(f, z, opts).map(|v| (t, z, v))
            })
            .collect::<Result<_>>()?;
        let pieces: Vec<(Vec<(C, C)>, PairStats)> = base
            .par_windows(2)
            .map(|w| {
                let mut out = Vec::new();
                let mut st = PairStats::default();
                refine(f, seg, (w[0].0, w[0].2), (w[1].0, w[1].2), 0, opts, &mut out, &mut st)?;
                Ok((out, st))
            })
            .collect::<Result<_>>()?;
        for (k, (inner, st)) in pieces.into_iter().enumerate() {
            points.push(base[k].1);
            values.push(base[k].2);
            for (z, v) in inner {
                points.push(z);
                values.push(v);
            }
            max_depth = max_depth.max(st.depth);
            max_step = max_step.max(st.step);
        }
    }
    points.push(points[0]);
    values.push(values[0]);
    let mut total = 0.0;
    for w in values.windows(2) {
        let d = (w[1] / w[0]).arg();
        max_step = max_step.max(d.abs());
        total += d;
    }
    let (min_modulus, min_modulus_at) = values
        .iter()
        .zip(&points)
        .map(|(v, z)| (v.norm(), *z))
        .fold((f64::INFINITY, C::new(0.0, 0.0)), |acc, x| if x.0 < acc.0 { x } else { acc });
    let winding_real = total / TAU;
    let winding = winding_real.round() as i64;
    let verdict = if max_step >= FRAC_PI_2 {
        Verdict::Inconclusive { reason: format!("argument step {max_step:.3} not resolved at depth cap") }
    } else if (winding_real - winding as f64).abs() > opts.band {
        Verdict::Inconclusive { reason: format!("winding {winding_real:.4} is not near an integer") }
    } else if winding == 0 {
        Verdict::ZeroFree
    } else {
        Verdict::ZerosDetected { count: winding }
    };
    Ok(Certificate {
        function: name.to_string(),
        points,
        values,
        total_arg: total,
        winding,
        winding_real,
        min_modulus,
        min_modulus_at,
        max_depth,
        max_arg_step: max_step,
        verdict,
    })
}

/// Certificate for the reduced determinant r₂⁰ of `variant` over `region`.
pub fn certify_zero_free(variant: Variant, region: &Region, p: &FlatParams, opts: &WindingOptions) -> Result<Certificate> {
    region.validate(p)?;
    let f = |z: C| flat_symbols::r2(variant, z, p);
    winding_number(&format!("r2_{variant:?}").to_lowercase(), &f, &region.contour(), opts)
}

/// Same certificate with a zero planted at `z0`, which must lie inside the region.
pub fn certify_planted(variant: Variant, region: &Region, p: &FlatParams, z0: C, opts: &WindingOptions) -> Result<Certificate> {
    region.validate(p)?;
    let f = |z: C| flat_symbols::r2(variant, z, p).map(|v| v * (z - z0));
    winding_number(&format!("r2_{variant:?}_planted").to_lowercase(), &f, &region.contour(), opts)
}

/// One certificate per truncation radius.
pub fn certify_nested(variant: Variant, region: &Region, rmaxes: &[f64], p: &FlatParams, opts: &WindingOptions) -> Result<Vec<Certificate>> {
    rmaxes
        .iter()
        .map(|&rmax| certify_zero_free(variant, &Region { rmax, ..*region }, p, opts))
        .collect()
}

/// Coefficients of the composite boundary symbol.
pub struct SymbolParams<'a> {
    pub flat: FlatParams,
    pub sigma: f64,
    pub c0: f64,
    pub b0_norm: f64,
    pub m_fn: &'a dyn CurvatureSymbol,
}

impl SymbolParams<'_> {
    /// s(λ, τ) with the drift entering through its projection `drift` = b0·ξ/|ξ|.
    pub fn eval(&self, lambda: C, tau: f64, drift: f64) -> Result<C> {
        let z = lambda / (tau * tau);
        let jr = self.flat.jump_rho();
        let mut s = lambda + self.m_fn.eval(z) * (self.sigma * tau / (jr * jr)) + C::new(0.0, tau * drift / jr);
        if self.c0 != 0.0 {
            s += psi_and_ell(z, &self.flat)?.1 * (self.c0 * tau / jr);
        } else {
            flat_symbols::symbol_point(z, &self.flat)?;
        }
        Ok(s)
    }

    /// Threshold C > 2(σM/[[ρ]]² + |c0|L/[[ρ]] + |b0|/[[ρ]]) for a decay constant `ell_bound`.
    pub fn threshold(&self, ell_bound: f64) -> f64 {
        let jr = self.flat.jump_rho().abs();
        2.0 * (self.sigma * self.m_fn.bound() / (jr * jr) + self.c0.abs() * ell_bound / jr + self.b0_norm / jr)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanGrid {
    pub lambda0: f64,
    pub lambda_max: f64,
    pub n_radius: usize,
    pub n_angle: usize,
    /// Half-opening of the λ sector.
    pub phi: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub n_tau: usize,
    pub n_drift: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid {
            lambda0: 1.0,
            lambda_max: 1e6,
            n_radius: 25,
            n_angle: 13,
            phi: FRAC_PI_2 + 0.1,
            tau_min: 1e-3,
            tau_max: 1e4,
            n_tau: 29,
            n_drift: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub c_hat: f64,
    pub argmin_lambda: C,
    pub argmin_tau: f64,
    pub argmin_drift: f64,
    pub evaluated: usize,
    pub skipped: usize,
}

fn spaced(lo: f64, hi: f64, n: usize, log: bool) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    (0..n)
        .map(|k| {
            let s = k as f64 / (n - 1) as f64;
            if log {
                (lo.ln() + (hi.ln() - lo.ln()) * s).exp()
            } else {
                lo + (hi - lo) * s
            }
        })
        .collect()
}

/// Empirical c = min |s(λ,τ)|/(|λ|+τ) over the grid.
pub fn lower_bound_scan(sp: &SymbolParams<'_>, grid: &ScanGrid) -> Result<LowerBound> {
    let radii = spaced(grid.lambda0, grid.lambda_max, grid.n_radius, true);
    let angles = spaced(-grid.phi, grid.phi, grid.n_angle, false);
    let taus = spaced(grid.tau_min, grid.tau_max, grid.n_tau, true);
    let drifts: Vec<f64> = spaced(0.0, PI, grid.n_drift, false).into_iter().map(|a| sp.b0_norm * a.cos()).collect();
    let lambdas: Vec<C> = radii.iter().flat_map(|&r| angles.iter().map(move |&a| C::from_polar(r, a))).collect();
    let rows: Vec<(f64, C, f64, f64, usize, usize)> = lambdas
        .par_iter()
        .map(|&lam| {
            let mut best = (f64::INFINITY, lam, 0.0, 0.0, 0usize, 0usize);
            for &tau in &taus {
                for &drift in &drifts {
                    match sp.eval(lam, tau, drift) {
                        Ok(s) => {
                            best.4 += 1;
                            let ratio = s.norm() / (lam.norm() + tau);
                            if ratio < best.0 {
                                best = (ratio, lam, tau, drift, best.4, best.5);
                            }
                        }
                        Err(Error::Branch(_)) => best.5 += 1,
                        Err(e) => return Err(e),
                    }
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut out = LowerBound {
        c_hat: f64::INFINITY,
        argmin_lambda: C::new(0.0, 0.0),
        argmin_tau: 0.0,
        argmin_drift: 0.0,
        evaluated: 0,
        skipped: 0,
    };
    for r in rows {
        out.evaluated += r.4;
        out.skipped += r.5;
        if r.0 < out.c_hat {
            out.c_hat = r.0;
            out.argmin_lambda = r.1;
            out.argmin_tau = r.2;
            out.argmin_drift = r.3;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat_symbols::ConstantM;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn identity_on_circle() {
        let cert = winding_number("z", &|z: C| Ok(z), &Contour::circle(c(0.0, 0.0), 1.0), &WindingOptions::default()).unwrap();
        assert_eq!(cert.winding, 1);
        assert_eq!(cert.verdict, Verdict::ZerosDetected { count: 1 });
    }

    #[test]
    fn constant_has_no_winding() {
        let region = Region::half_plane(10.0);
        let cert = winding_number("k", &|_z: C| Ok(c(2.0, -1.0)), &region.contour(), &WindingOptions::default()).unwrap();
        assert_eq!(cert.winding, 0);
        assert_eq!(cert.verdict, Verdict::ZeroFree);
    }

    #[test]
    fn quadratic_counts_inner_root() {
        let f = |z: C| Ok((z - 0.5) * (z + 2.0));
        let cert = winding_number("q", &f, &Contour::circle(c(0.0, 0.0), 1.0), &WindingOptions::default()).unwrap();
        assert_eq!(cert.winding, 1);
        let cert = winding_number("q", &f, &Contour::circle(c(0.0, 0.0), 3.0), &WindingOptions::default()).unwrap();
        assert_eq!(cert.winding, 2);
    }

    #[test]
    fn zero_on_contour_is_an_error() {
        let f = |z: C| Ok(z - 1.0);
        let r = winding_number("z", &f, &Contour::circle(c(0.0, 0.0), 1.0), &WindingOptions::default());
        assert!(matches!(r, Err(Error::ZeroOnContour { .. })));
    }

    #[test]
    fn fast_rotation_is_resolved() {
        let f = |z: C| Ok(z.powi(40));
        let cert = winding_number("z40", &f, &Contour::circle(c(0.0, 0.0), 1.0), &WindingOptions { initial_samples: 16, ..Default::default() }).unwrap();
        assert_eq!(cert.winding, 40);
        assert!(cert.max_arg_step < FRAC_PI_2);
    }

    #[test]
    fn contours_are_closed_and_positive() {
        for region in [Region::half_plane(1e6), Region::sector(2.0, 0.5, 1e3)] {
            let contour = region.contour();
            assert!(contour.is_closed());
            let inside = match region.kind {
                RegionKind::HalfPlane => c(1.0, 0.3),
                RegionKind::Sector { .. } => c(2.0, 0.5),
            };
            let cert = winding_number("z", &|z: C| Ok(z - inside), &contour, &WindingOptions::default()).unwrap();
            assert_eq!(cert.winding, 1);
        }
    }

    #[test]
    fn s11_zero_free_example() {
        let p = FlatParams::new(1.0, 2.0, 1.0, 1.0);
        let cert = certify_zero_free(Variant::S11, &Region::half_plane(1e3), &p, &WindingOptions::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::ZeroFree);
        let planted = certify_planted(Variant::S11, &Region::half_plane(1e3), &p, c(1.0, 0.0), &WindingOptions::default()).unwrap();
        assert_eq!(planted.winding, 1);
    }

    #[test]
    fn s22_random_draws_zero_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let p = FlatParams::random(&mut rng);
            let cert = certify_zero_free(Variant::S22, &Region::half_plane(1e3), &p, &WindingOptions::default()).unwrap();
            assert_eq!(cert.verdict, Verdict::ZeroFree, "{p:?}");
        }
    }

    #[test]
    fn refinement_invariance_and_reproducibility() {
        let p = FlatParams::new(0.6, 3.1, 2.0, 0.4);
        let region = Region::half_plane(1e6);
        let coarse = certify_zero_free(Variant::S11, &region, &p, &WindingOptions { initial_samples: 32, ..Default::default() }).unwrap();
        let fine = certify_zero_free(Variant::S11, &region, &p, &WindingOptions { initial_samples: 128, ..Default::default() }).unwrap();
        assert_eq!(coarse.winding, fine.winding);
        let again = certify_zero_free(Variant::S11, &region, &p, &WindingOptions { initial_samples: 32, ..Default::default() }).unwrap();
        assert_eq!(coarse, again);
    }

    #[test]
    fn sector_region_rejects_cut() {
        let p = FlatParams::new(1.0, 2.0, 1.0, 1.0);
        assert!(Region::sector(PI - 1e-5, 0.1, 10.0).validate(&p).is_err());
        assert!(Region::sector(2.5, 0.1, 10.0).validate(&p).is_ok());
    }

    fn plain(m0: f64, sigma: f64) -> (FlatParams, ConstantM, f64) {
        (FlatParams::new(1.0, 2.0, 1.0, 1.5), ConstantM(m0), sigma)
    }

    #[test]
    fn real_ray_bound() {
        let (flat, m, sigma) = plain(0.8, 0.7);
        let sp = SymbolParams { flat, sigma, c0: 0.0, b0_norm: 0.0, m_fn: &m };
        let grid = ScanGrid { n_angle: 1, phi: 0.0, ..ScanGrid::default() };
        let lb = lower_bound_scan(&sp, &ScanGrid { lambda0: 0.5, ..grid }).unwrap();
        let jr = flat.jump_rho();
        assert!(lb.c_hat >= (1.0f64).min(sigma * 0.8 / (2.0 * jr * jr)));
        assert!(lb.c_hat > 0.0);
    }

    #[test]
    fn parabolic_scaling() {
        let (flat, m, sigma) = plain(1.3, 0.4);
        let sp = SymbolParams { flat, sigma, c0: 0.6, b0_norm: 0.9, m_fn: &m };
        let lam = c(2.0, 3.0);
        let tau = 0.7;
        let base = sp.eval(lam, tau, 0.5).unwrap() - lam;
        for a in [2.0, 4.0] {
            let scaled = sp.eval(lam * (a * a), a * tau, 0.5).unwrap() - lam * (a * a);
            assert!((scaled - base * a).norm() < 1e-12 * scaled.norm());
        }
    }

    #[test]
    fn small_tau_limit() {
        let (flat, m, sigma) = plain(1.0, 1.0);
        let sp = SymbolParams { flat, sigma, c0: 0.3, b0_norm: 0.5, m_fn: &m };
        let lam = c(3.0, 1.0);
        let s = sp.eval(lam, 1e-9, 0.5).unwrap();
        assert!((s.norm() / (lam.norm() + 1e-9) - 1.0).abs() < 1e-6);
    }
}
