//! Eigenvalues of the linearization per harmonic degree, kernel structure, and the
//! decoupled-temperature check.

use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rayon::prelude::*;
use serde::Serialize;

use super::assemble::{poloidal_pencil, radial_pencil, toroidal_pencil, ModePencil, PencilKind};
use super::eig::{generalized_eigenvalues, null_vector, NullSpace};
use super::energy::energy_residual;
use super::{LinearizationParams, RadialGeometry};
use crate::error::{Error, Result};
use crate::geometry::harmonic_count;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectrumOptions {
    /// left margin: eigenvalues with `Re lambda >= -margin` are reported; `None` uses `sigma (n-1) / (2 R^2)`
    pub margin: Option<f64>,
    /// eigenvalues closer than this to 0 count as zero
    pub zero_tol: f64,
    /// grid-independence gate, relative to `max(1, |lambda|)`
    pub persist_tol: f64,
    /// relative singular value below which a direction is in the kernel
    pub kernel_tol: f64,
    /// smallest admissible relative singular value of the Jordan test block
    pub jordan_tol: f64,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { margin: None, zero_tol: 1e-8, persist_tol: 1e-7, kernel_tol: 1e-9, jordan_tol: 1e-7 }
    }
}

/// Eigenvalues of the linearization restricted to one harmonic degree.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSpectrum {
    pub l: usize,
    /// number of independent harmonics of this degree
    pub harmonics: usize,
    /// eigenvalues in the search window that survive grid refinement (fine-grid values)
    pub eigenvalues: Vec<C>,
    /// energy balance residual of each reported eigenpair
    pub residuals: Vec<f64>,
    /// window eigenvalues that moved under refinement
    pub unconverged: Vec<C>,
    /// largest refinement change among reported eigenvalues
    pub grid_change: f64,
    /// geometric multiplicity of 0 per harmonic
    pub kernel_dim: usize,
    /// number of reported eigenvalues within the zero tolerance per harmonic
    pub zero_count: usize,
    pub semisimple: bool,
    /// rank decisions near the tolerance
    pub kernel_inconclusive: bool,
    /// largest interface-height share of eigenvectors at nonzero eigenvalues (degree 0 only)
    pub mean_height: Option<f64>,
}

impl ModeSpectrum {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Reported eigenvalues with real part at least `tol`.
    pub fn unstable(&self, tol: f64) -> Vec<C> {
        self.eigenvalues.iter().copied().filter(|z| z.re >= tol).collect()
    }
}

fn build(l: usize, geom: &RadialGeometry, par: &LinearizationParams) -> Vec<ModePencil> {
    let main = if l == 0 { radial_pencil(geom, par) } else { poloidal_pencil(l, geom, par) };
    let mut out = vec![main];
    if let Some(t) = toroidal_pencil(l, geom, par) {
        out.push(t);
    }
    out
}

fn shift_for(margin: f64) -> f64 {
    0.2718 * margin
}

/// One-to-one nearest matching of `coarse` into `fine`.
fn match_lists(coarse: &[C], fine: &[C]) -> Vec<Option<(usize, f64)>> {
    let mut used = vec![false; fine.len()];
    let mut order: Vec<usize> = (0..coarse.len()).collect();
    order.sort_by(|&a, &b| coarse[a].norm().total_cmp(&coarse[b].norm()));
    let mut out = vec![None; coarse.len()];
    for i in order {
        let best = fine.iter().enumerate().filter(|(k, _)| !used[*k]).map(|(k, z)| (k, (z - coarse[i]).norm())).min_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((k, d)) = best {
            used[k] = true;
            out[i] = Some((k, d));
        }
    }
    out
}

/// Discretized eigenvalues of the linearization at degree `l` in the window
/// `Re lambda >= -margin`, checked against a grid with twice the points.
pub fn full_mode_eigenvalues(l: usize, geom: &RadialGeometry, par: &LinearizationParams, opts: &SpectrumOptions) -> Result<ModeSpectrum> {
    geom.validate()?;
    par.validate()?;
    let margin = opts.margin.unwrap_or_else(|| par.default_margin(geom));
    let fine_geom = geom.refined();
    let coarse = build(l, geom, par);
    let fine = build(l, &fine_geom, par);
    let mut spec = ModeSpectrum {
        l,
        harmonics: harmonic_count(geom.n, l) - if l == 0 { 0 } else { harmonic_count(geom.n, l - 1) },
        eigenvalues: Vec::new(),
        residuals: Vec::new(),
        unconverged: Vec::new(),
        grid_change: 0.0,
        kernel_dim: 0,
        zero_count: 0,
        semisimple: true,
        kernel_inconclusive: false,
        mean_height: None,
    };
    for (pc, pf) in coarse.iter().zip(&fine) {
        let shift = shift_for(margin);
        let ec = generalized_eigenvalues(&pc.a, &pc.b, shift)?;
        let ef = generalized_eigenvalues(&pf.a, &pf.b, shift)?;
        let win = |z: &C| z.re >= -margin;
        let wc: Vec<C> = ec.iter().copied().filter(win).collect();
        let matches = match_lists(&wc, &ef);
        let mut hit = vec![false; ef.len()];
        for (z, m) in wc.iter().zip(&matches) {
            match m {
                Some((k, d)) if *d <= opts.persist_tol * z.norm().max(1.0) => {
                    hit[*k] = true;
                    let lam = ef[*k];
                    spec.grid_change = spec.grid_change.max(*d / z.norm().max(1.0));
                    let (x, _) = null_vector(&pf.a, &pf.b, lam);
                    spec.residuals.push(energy_residual(pf, &x).residual(lam));
                    if let (PencilKind::Radial, Some(h)) = (pf.kind, pf.h_index()) {
                        if lam.norm() > opts.zero_tol {
                            let share = x[h].norm() / x.norm();
                            spec.mean_height = Some(spec.mean_height.unwrap_or(0.0).max(share));
                        }
                    }
                    spec.eigenvalues.push(lam);
                }
                _ => spec.unconverged.push(*z),
            }
        }
        for (k, z) in ef.iter().enumerate() {
            if win(z) && !hit[k] && !wc.iter().any(|c| (c - z).norm() <= opts.persist_tol * z.norm().max(1.0)) {
                spec.unconverged.push(*z);
            }
        }
        let ns = NullSpace::of(&pf.a, &pf.b, opts.kernel_tol);
        spec.kernel_dim += ns.dim;
        spec.kernel_inconclusive |= ns.ambiguous;
        if ns.dim > 0 && ns.jordan_gap(&pf.b) <= opts.jordan_tol {
            spec.semisimple = false;
        }
    }
    spec.zero_count = spec.eigenvalues.iter().filter(|z| z.norm() <= opts.zero_tol).count();
    if spec.zero_count != spec.kernel_dim {
        spec.semisimple = false;
    }
    let mut idx: Vec<usize> = (0..spec.eigenvalues.len()).collect();
    idx.sort_by(|&a, &b| spec.eigenvalues[b].re.total_cmp(&spec.eigenvalues[a].re).then(spec.eigenvalues[a].im.total_cmp(&spec.eigenvalues[b].im)));
    spec.eigenvalues = idx.iter().map(|&i| spec.eigenvalues[i]).collect();
    spec.residuals = idx.iter().map(|&i| spec.residuals[i]).collect();
    Ok(spec)
}

/// Spectra of degrees `0..=l_max`, computed in parallel and returned in degree order.
pub fn mode_spectra(l_max: usize, geom: &RadialGeometry, par: &LinearizationParams, opts: &SpectrumOptions) -> Result<Vec<ModeSpectrum>> {
    (0..=l_max).into_par_iter().map(|l| full_mode_eigenvalues(l, geom, par, opts)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub dim: usize,
    pub semisimple: bool,
    pub inconclusive: bool,
    /// kernel dimension per harmonic at degrees 0 and 1
    pub per_degree: [usize; 2],
    /// `m n + 2`
    pub expected: usize,
}

/// Dimension and semi-simplicity of the eigenvalue 0 for `m` identical balls, assembled
/// from the single-ball degree-0 and degree-1 spectra.
pub fn kernel_analysis(geom: &RadialGeometry, par: &LinearizationParams, m: usize, opts: &SpectrumOptions) -> Result<KernelReport> {
    if m == 0 {
        return Err(Error::Config("need at least one ball".into()));
    }
    let s0 = full_mode_eigenvalues(0, geom, par, opts)?;
    let s1 = full_mode_eigenvalues(1, geom, par, opts)?;
    Ok(KernelReport {
        dim: s0.kernel_dim * s0.harmonics + s1.kernel_dim * s1.harmonics * m,
        semisimple: s0.semisimple && s1.semisimple,
        inconclusive: s0.kernel_inconclusive || s1.kernel_inconclusive,
        per_degree: [s0.kernel_dim, s1.kernel_dim],
        expected: m * geom.n + 2,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DecouplingReport {
    pub l: usize,
    /// no row couples temperature unknowns into the mechanical equations
    pub block_triangular: bool,
    /// mechanical eigenvalues compared across the perturbations
    pub compared: usize,
    /// largest change of a mechanical eigenvalue, relative to `max(1, |lambda|)`
    pub max_shift: f64,
}

fn sub_pencil(p: &ModePencil, cols: &[usize]) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let rows: Vec<usize> = (0..p.size()).filter(|&i| cols.iter().any(|&c| p.a[(i, c)] != 0.0 || p.b[(i, c)] != 0.0)).collect();
    if rows.len() != cols.len() {
        return None;
    }
    let a = DMatrix::from_fn(rows.len(), cols.len(), |i, j| p.a[(rows[i], cols[j])]);
    let b = DMatrix::from_fn(rows.len(), cols.len(), |i, j| p.b[(rows[i], cols[j])]);
    Some((a, b))
}

fn strip(all: &[C], remove: &[C], tol: f64) -> Vec<C> {
    let mut used = vec![false; remove.len()];
    all.iter()
        .copied()
        .filter(|z| {
            if let Some(k) = (0..remove.len()).find(|&k| !used[k] && (remove[k] - z).norm() <= tol * z.norm().max(1.0)) {
                used[k] = true;
                false
            } else {
                true
            }
        })
        .collect()
}

const COMPARED: usize = 6;

/// With zero latent heat, compares the rightmost mechanical eigenvalues of the degree-`l` spectrum
/// under tenfold changes of heat capacity and conductivity.
pub fn decoupling_check(l: usize, geom: &RadialGeometry, par: &LinearizationParams, opts: &SpectrumOptions) -> Result<DecouplingReport> {
    if par.l_star != 0.0 {
        return Err(Error::Config(format!("decoupling needs zero latent heat, got {}", par.l_star)));
    }
    thermal_perturbation(l, geom, par, opts)
}

fn thermal_perturbation(l: usize, geom: &RadialGeometry, par: &LinearizationParams, opts: &SpectrumOptions) -> Result<DecouplingReport> {
    let margin = opts.margin.unwrap_or_else(|| par.default_margin(geom));
    let mechanical = |p: &ModePencil| -> Result<(bool, Vec<C>)> {
        let mech = p.mechanical_columns();
        let theta: Vec<usize> = (0..p.size()).filter(|c| !mech.contains(c)).collect();
        let mech_rows: Vec<usize> = (0..p.size()).filter(|&i| mech.iter().any(|&c| p.a[(i, c)] != 0.0 || p.b[(i, c)] != 0.0)).collect();
        let triangular = mech_rows.iter().all(|&i| theta.iter().all(|&c| p.a[(i, c)] == 0.0 && p.b[(i, c)] == 0.0));
        let all = generalized_eigenvalues(&p.a, &p.b, shift_for(margin))?;
        let heat = match sub_pencil(p, &theta) {
            Some((a, b)) if !theta.is_empty() => generalized_eigenvalues(&a, &b, shift_for(margin))?,
            _ => Vec::new(),
        };
        Ok((triangular, strip(&all, &heat, 1e-9)))
    };
    let main = |q: &LinearizationParams| if l == 0 { radial_pencil(geom, q) } else { poloidal_pencil(l, geom, q) };
    let (tri0, base) = mechanical(&main(par))?;
    // the rightmost part of the mechanical spectrum, not only the search window
    let mut base_win = base.clone();
    base_win.sort_by(|a, b| b.re.total_cmp(&a.re));
    base_win.truncate(COMPARED);
    let mut report = DecouplingReport { l, block_triangular: tri0, compared: base_win.len(), max_shift: 0.0 };
    for (fk, fd) in [(10.0, 1.0), (1.0, 10.0), (10.0, 10.0)] {
        let mut q = *par;
        q.kappa = [par.kappa[0] * fk, par.kappa[1] * fk];
        q.d = [par.d[0] * fd, par.d[1] * fd];
        let (tri, other) = mechanical(&main(&q))?;
        report.block_triangular &= tri;
        for (z, m) in base_win.iter().zip(match_lists(&base_win, &other)) {
            let shift = m.map_or(f64::INFINITY, |(_, d)| d / z.norm().max(1.0));
            report.max_shift = report.max_shift.max(shift);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermo::MaterialParams;

    fn setup(n: usize, theta: f64) -> (RadialGeometry, LinearizationParams) {
        let par = LinearizationParams::from_material(&MaterialParams::default(), theta).unwrap();
        (RadialGeometry::new(n, 1.0, 2.0, 24).unwrap(), par)
    }

    #[test]
    fn connected_interface_has_only_the_equilibrium_kernel() {
        let opts = SpectrumOptions::default();
        for n in [2, 3] {
            let (geom, par) = setup(n, std::f64::consts::E);
            let mut zeros = 0;
            for l in 0..3 {
                let s = full_mode_eigenvalues(l, &geom, &par, &opts).unwrap();
                assert!(s.unstable(1e-8).is_empty(), "n {n} l {l}: {:?}", s.eigenvalues);
                assert!(s.unconverged.is_empty());
                assert!(s.grid_change <= 1e-7);
                assert!(s.max_residual() <= 1e-6, "n {n} l {l}: {:e}", s.max_residual());
                assert!(s.semisimple && !s.kernel_inconclusive);
                for z in s.eigenvalues.iter().filter(|z| z.re >= 0.0) {
                    assert!(z.im.abs() <= 1e-8);
                }
                zeros += s.zero_count * s.harmonics;
            }
            assert_eq!(zeros, n + 2);
        }
    }

    #[test]
    fn kernel_dimension_follows_ball_count() {
        let opts = SpectrumOptions::default();
        let (geom, par) = setup(2, std::f64::consts::E);
        for m in [1, 2] {
            let k = kernel_analysis(&geom, &par, m, &opts).unwrap();
            assert_eq!(k.dim, k.expected);
            assert_eq!(k.dim, 2 * m + 2);
            assert!(k.semisimple && !k.inconclusive);
            assert_eq!(k.per_degree, [2, 1]);
        }
    }

    #[test]
    fn zero_latent_heat_decouples_temperature() {
        let opts = SpectrumOptions::default();
        for n in [2, 3] {
            let (geom, par) = setup(n, 1.0);
            assert_eq!(par.l_star, 0.0);
            for l in 0..3 {
                let r = decoupling_check(l, &geom, &par, &opts).unwrap();
                assert!(r.block_triangular && r.compared > 0 && r.max_shift <= 1e-9, "{r:?}");
            }
            let (_, hot) = setup(n, std::f64::consts::E);
            assert!(decoupling_check(2, &geom, &hot, &opts).is_err());
            let coupled = thermal_perturbation(2, &geom, &hot, &opts).unwrap();
            assert!(!coupled.block_triangular && coupled.max_shift > 1e-6, "{coupled:?}");
        }
    }

    #[test]
    fn matching_is_one_to_one() {
        let a = [C::new(0.0, 0.0), C::new(1.0, 0.0)];
        let b = [C::new(1.0 + 1e-9, 0.0), C::new(5.0, 0.0), C::new(1e-12, 0.0)];
        let m = match_lists(&a, &b);
        assert_eq!(m[0].unwrap().0, 2);
        assert_eq!(m[1].unwrap().0, 0);
        assert_eq!(strip(&b, &a, 1e-6), vec![C::new(5.0, 0.0)]);
    }
}
