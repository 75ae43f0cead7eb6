use crate::error::{Error, Result};

use super::{Harmonics, NodalDerivatives, ReferenceSphere};

pub fn sphere_signed_distance(x: &[f64], sph: &ReferenceSphere) -> Result<f64> {
    if x.len() != sph.n {
        return Err(Error::Shape(format!("point has {} components, expected {}", x.len(), sph.n)));
    }
    let r: f64 = x.iter().zip(&sph.center).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
    Ok(r - sph.radius)
}

/// Eigenvalue of the linearized curvature operator on degree-l harmonics.
pub fn linearized_curvature_mode(l: usize, n: usize, radius: f64) -> f64 {
    ((l * (l + n - 2)) as f64 - (n as f64 - 1.0)) / (radius * radius)
}

/// Height over `sph` of the sphere of the same radius whose center is moved by `offset`.
pub fn translated_sphere_height(sph: &ReferenceSphere, offset: &[f64]) -> Result<Vec<f64>> {
    if offset.len() != sph.n {
        return Err(Error::Shape("offset dimension mismatch".into()));
    }
    let r = sph.radius;
    let d2: f64 = offset.iter().map(|v| v * v).sum();
    if d2.sqrt() >= r {
        return Err(Error::Geometry("translated sphere does not contain the center".into()));
    }
    Ok(sph
        .unit_normals()
        .iter()
        .map(|w| {
            let dw: f64 = w.iter().zip(offset).map(|(a, b)| a * b).sum();
            dw + (r * r - d2 + dw * dw).sqrt() - r
        })
        .collect())
}

/// Height field over a reference sphere with its spectral derivatives.
#[derive(Debug, Clone)]
pub struct GraphPatch {
    pub h: Vec<f64>,
    pub coeffs: Harmonics,
    derivs: NodalDerivatives,
    /// Surface gradient in the orthonormal tangent frame, per node.
    pub grad: Vec<Vec<f64>>,
    /// Transform round-trip defect; nonzero when h carries degrees above l_max.
    pub aliasing: f64,
}

impl GraphPatch {
    pub fn new(sph: &ReferenceSphere, h: Vec<f64>) -> Result<Self> {
        let coeffs = sph.analyze(&h)?;
        let derivs = sph.synthesize_derivatives(&coeffs)?;
        let aliasing = derivs.f.iter().zip(&h).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let r = sph.radius;
        let grad = sph
            .nodes()
            .iter()
            .enumerate()
            .map(|(k, &(t, _))| {
                if sph.n == 2 {
                    vec![derivs.f_p[k] / r]
                } else {
                    vec![derivs.f_t[k] / r, derivs.f_p[k] / (r * t.sin())]
                }
            })
            .collect();
        Ok(GraphPatch { h, coeffs, derivs, grad, aliasing })
    }

    pub fn from_coeffs(sph: &ReferenceSphere, coeffs: &Harmonics) -> Result<Self> {
        Self::new(sph, sph.synthesize(coeffs)?)
    }

    pub fn max_height(&self) -> f64 {
        self.h.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_slope(&self) -> f64 {
        self.grad.iter().map(|g| g.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// |h|_∞ < R/10 and |∇h|_∞ < 1/10.
    pub fn is_admissible(&self, sph: &ReferenceSphere) -> bool {
        self.max_height() < sph.radius / 10.0 && self.max_slope() < 0.1
    }

    fn check_admissible(&self, sph: &ReferenceSphere) -> Result<()> {
        if self.is_admissible(sph) {
            Ok(())
        } else {
            Err(Error::Geometry(format!(
                "|h| = {:.3e} (limit {:.3e}), |grad h| = {:.3e} (limit 0.1)",
                self.max_height(),
                sph.radius / 10.0,
                self.max_slope()
            )))
        }
    }

    fn alpha_beta(&self, k: usize, r: f64) -> (Vec<f64>, f64) {
        let phi = r / (r + self.h[k]);
        let alpha: Vec<f64> = self.grad[k].iter().map(|g| phi * g).collect();
        let a2: f64 = alpha.iter().map(|a| a * a).sum();
        (alpha, 1.0 / (1.0 + a2).sqrt())
    }
}

/// Normal ν = β(ν_Σ − α) and normal velocity V = β ∂_t h at each node.
pub fn graph_normal_and_velocity(sph: &ReferenceSphere, patch: &GraphPatch, dt_h: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    patch.check_admissible(sph)?;
    if dt_h.len() != patch.h.len() {
        return Err(Error::Shape("dt_h length differs from the grid".into()));
    }
    let mut normals = Vec::with_capacity(patch.h.len());
    let mut vel = Vec::with_capacity(patch.h.len());
    for (k, (t, p)) in sph.nodes().into_iter().enumerate() {
        let (alpha, beta) = patch.alpha_beta(k, sph.radius);
        let mut nu = sph.direction(t, p);
        for (a, e) in alpha.iter().zip(sph.tangent_frame(t, p)) {
            for (x, ei) in nu.iter_mut().zip(e) {
                *x -= a * ei;
            }
        }
        normals.push(nu.into_iter().map(|x| beta * x).collect());
        vel.push(beta * dt_h[k]);
    }
    Ok((normals, vel))
}

/// Curvature H (sum of principal curvatures, negative on spheres) of the graph at each node.
pub fn graph_curvature(sph: &ReferenceSphere, patch: &GraphPatch) -> Result<Vec<f64>> {
    patch.check_admissible(sph)?;
    let norm = patch.coeffs.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
    let tail = patch.coeffs.energy_above(sph.l_max / 2).sqrt();
    let scale = norm.max(patch.max_height());
    if tail > 1e-10 * scale + 1e-14 || patch.aliasing > 1e-10 * scale + 1e-14 {
        return Err(Error::Resolution(format!(
            "height field not band-limited to degree {}: tail {tail:.2e}, aliasing {:.2e}",
            sph.l_max / 2,
            patch.aliasing
        )));
    }
    let r = sph.radius;
    let n = sph.n as f64;
    let d = &patch.derivs;
    let out = sph
        .nodes()
        .into_iter()
        .enumerate()
        .map(|(k, (t, _))| {
            let h = patch.h[k];
            let g = &patch.grad[k];
            let (lap, hgg) = if sph.n == 2 {
                let hess = d.f_pp[k] / (r * r);
                (hess, hess * g[0] * g[0])
            } else {
                let (s, c) = t.sin_cos();
                let cot = c / s;
                let htt = d.f_tt[k] / (r * r);
                let htp = (d.f_tp[k] - cot * d.f_p[k]) / (r * r * s);
                let hpp = (d.f_pp[k] / (s * s) + cot * d.f_t[k]) / (r * r);
                (htt + hpp, htt * g[0] * g[0] + 2.0 * htp * g[0] * g[1] + hpp * g[1] * g[1])
            };
            let g2: f64 = g.iter().map(|v| v * v).sum();
            let phi = r / (r + h);
            let dphi = -r / ((r + h) * (r + h));
            let beta = 1.0 / (1.0 + phi * phi * g2).sqrt();
            let div_alpha = phi * lap + dphi * g2;
            let quad = phi * phi * (phi * hgg + dphi * g2 * g2);
            beta * (-(n - 1.0) / (r + h) + phi * div_alpha - beta * beta * phi * quad)
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::harmonic_labels;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_patch(sph: &ReferenceSphere, seed: u64, amp: f64) -> GraphPatch {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut h = Harmonics::zeros(sph.n, sph.l_max);
        for (k, (l, _)) in harmonic_labels(sph.n, sph.l_max).into_iter().enumerate() {
            if l > 0 && l <= sph.l_max / 2 {
                h.coeffs[k] = amp * rng.gen_range(-1.0..1.0) / ((l * l) as f64);
            }
        }
        GraphPatch::from_coeffs(sph, &h).unwrap()
    }

    #[test]
    fn signed_distance() {
        let sph = ReferenceSphere::new(3, vec![1.0, 0.0, -1.0], 1.0, 4).unwrap();
        assert_eq!(sphere_signed_distance(&[1.0, 0.0, -1.0], &sph).unwrap(), -1.0);
        assert_eq!(sphere_signed_distance(&[1.0, 1.0, -1.0], &sph).unwrap(), 0.0);
        assert_eq!(sphere_signed_distance(&[2.5, 0.0, -1.0], &sph).unwrap(), 0.5);
    }

    #[test]
    fn mode_eigenvalues() {
        for n in [2, 3, 4] {
            assert_eq!(linearized_curvature_mode(1, n, 1.7), 0.0);
        }
        assert_eq!(linearized_curvature_mode(0, 3, 1.0), -2.0);
        assert_eq!(linearized_curvature_mode(2, 3, 1.0), 4.0);
    }

    #[test]
    fn flat_and_constant_heights() {
        for n in [2, 3] {
            let sph = ReferenceSphere::unit(n, 16).unwrap();
            let zero = GraphPatch::new(&sph, vec![0.0; sph.node_count()]).unwrap();
            for v in graph_curvature(&sph, &zero).unwrap() {
                assert!((v + (n as f64 - 1.0)).abs() < 1e-12);
            }
            let c = GraphPatch::new(&sph, vec![0.05; sph.node_count()]).unwrap();
            for v in graph_curvature(&sph, &c).unwrap() {
                assert!((v + (n as f64 - 1.0) / 1.05).abs() < 1e-12);
            }
            let (nu, vel) = graph_normal_and_velocity(&sph, &c, &vec![0.3; sph.node_count()]).unwrap();
            for (a, b) in nu.iter().zip(sph.unit_normals()) {
                for (x, y) in a.iter().zip(b) {
                    assert!((x - y).abs() < 1e-13);
                }
            }
            assert!(vel.iter().all(|v| (v - 0.3).abs() < 1e-15));
        }
        let sph = ReferenceSphere::unit(2, 8).unwrap();
        let c = GraphPatch::new(&sph, vec![0.1 - 1e-12; sph.node_count()]).unwrap();
        for v in graph_curvature(&sph, &c).unwrap() {
            assert!((v + 1.0 / 1.1).abs() < 1e-10);
        }
    }

    #[test]
    fn random_normals_are_unit() {
        for n in [2, 3] {
            let sph = ReferenceSphere::new(n, vec![0.0; n], 2.0, 20).unwrap();
            let patch = random_patch(&sph, 5, 0.02);
            assert!(patch.is_admissible(&sph));
            let (nu, _) = graph_normal_and_velocity(&sph, &patch, &vec![0.0; sph.node_count()]).unwrap();
            for v in nu {
                assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn translated_sphere_keeps_curvature() {
        for n in [2, 3] {
            let sph = ReferenceSphere::new(n, vec![0.0; n], 1.5, 48).unwrap();
            let off: Vec<f64> = [0.01, -0.006, 0.004][..n].to_vec();
            let patch = GraphPatch::new(&sph, translated_sphere_height(&sph, &off).unwrap()).unwrap();
            for v in graph_curvature(&sph, &patch).unwrap() {
                assert!((v + (n as f64 - 1.0) / 1.5).abs() < 1e-6, "n={n}: {v}");
            }
        }
    }

    #[test]
    fn inadmissible_rejected() {
        let sph = ReferenceSphere::unit(3, 8).unwrap();
        let big = GraphPatch::new(&sph, vec![0.2; sph.node_count()]).unwrap();
        assert!(matches!(graph_curvature(&sph, &big), Err(Error::Geometry(_))));
        let mut h = Harmonics::zeros(3, 8);
        h.set(4, 2, 0.1);
        let steep = GraphPatch::from_coeffs(&sph, &h).unwrap();
        assert!(steep.max_height() < 0.1);
        assert!(matches!(graph_normal_and_velocity(&sph, &steep, &vec![0.0; sph.node_count()]), Err(Error::Geometry(_))));
    }

    #[test]
    fn under_resolved_rejected() {
        let sph = ReferenceSphere::unit(3, 8).unwrap();
        let mut h = Harmonics::zeros(3, 8);
        h.set(7, 1, 1e-3);
        let patch = GraphPatch::from_coeffs(&sph, &h).unwrap();
        assert!(matches!(graph_curvature(&sph, &patch), Err(Error::Resolution(_))));
    }

    #[test]
    fn linearization_is_second_order() {
        for n in [2, 3] {
            let sph = ReferenceSphere::unit(n, 16).unwrap();
            let h0 = graph_curvature(&sph, &GraphPatch::new(&sph, vec![0.0; sph.node_count()]).unwrap()).unwrap();
            for (l, m) in [(2usize, if n == 2 { 2i64 } else { 1 }), (3, -3)] {
                let y = sph.harmonic(l, m).unwrap();
                let a = linearized_curvature_mode(l, n, 1.0);
                let rem: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
                    .iter()
                    .map(|&e| {
                        let patch = GraphPatch::new(&sph, y.iter().map(|v| e * v).collect()).unwrap();
                        let hh = graph_curvature(&sph, &patch).unwrap();
                        hh.iter().zip(&h0).zip(&y).map(|((a1, b), yv)| (a1 - b + e * a * yv).abs()).fold(0.0, f64::max)
                    })
                    .collect();
                for w in rem.windows(2) {
                    let order = (w[0] / w[1]).log2();
                    assert!(order >= 1.9, "n={n} l={l}: order {order}");
                }
            }
        }
    }
}
