//! Dense generalized eigenvalue and null-space utilities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

use crate::error::{Error, Result};

/// Row and column scalings making every row and column of `[A B]` of unit max-norm.
fn equilibrate(a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, Vec<f64>) {
    let (nr, nc) = a.shape();
    let mut a = a.clone();
    let mut b = b.clone();
    for i in 0..nr {
        let m = (0..nc).map(|j| a[(i, j)].abs().max(b[(i, j)].abs())).fold(0.0, f64::max);
        if m > 0.0 {
            for j in 0..nc {
                a[(i, j)] /= m;
                b[(i, j)] /= m;
            }
        }
    }
    let mut cols = vec![1.0; nc];
    for (j, cj) in cols.iter_mut().enumerate() {
        let m = (0..nr).map(|i| a[(i, j)].abs().max(b[(i, j)].abs())).fold(0.0, f64::max);
        if m > 0.0 {
            *cj = 1.0 / m;
            for i in 0..nr {
                a[(i, j)] *= *cj;
                b[(i, j)] *= *cj;
            }
        }
    }
    (a, b, cols)
}

/// Finite eigenvalues of `A x = lambda B x` by shift-and-invert around `shift`.
///
/// Infinite eigenvalues (from rows with no `B` part) map to the origin of the
/// inverted problem and are discarded.
pub fn generalized_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>, shift: f64) -> Result<Vec<C>> {
    let (a, b, _) = equilibrate(a, b);
    let scale = shift.abs().max(1e-3);
    for k in 0..6 {
        let s = shift + scale * [0.0, 0.137, -0.291, 0.414, -0.533, 0.761][k];
        let shifted = &a - &b * s;
        let lu = shifted.lu();
        let Some(m) = lu.solve(&b) else { continue };
        if !m.iter().all(|v| v.is_finite()) {
            continue;
        }
        let nu = m.complex_eigenvalues();
        let top = nu.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(top.is_finite()) || top > 1e13 {
            continue;
        }
        let floor = 1e-10 * top;
        return Ok(nu.iter().filter(|z| z.norm() > floor).map(|z| s + 1.0 / z).collect());
    }
    Err(Error::Convergence("shifted pencil is singular for every trial shift".into()))
}

/// Unit vector minimizing `|(A - lambda B) x|`, with its relative smallest singular value.
pub fn null_vector(a: &DMatrix<f64>, b: &DMatrix<f64>, lambda: C) -> (DVector<C>, f64) {
    let (a, b, cols) = equilibrate(a, b);
    let m: DMatrix<C> = a.map(|v| C::new(v, 0.0)) - b.map(|v| C::new(v, 0.0)) * lambda;
    let svd = m.svd(false, true);
    let s = &svd.singular_values;
    let (imin, smin) = s.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let smax = s.iter().copied().fold(0.0, f64::max);
    let vt = svd.v_t.expect("requested");
    let mut x: DVector<C> = vt.row(imin).transpose().map(|z| z.conj());
    for (xi, c) in x.iter_mut().zip(&cols) {
        *xi *= *c;
    }
    let nrm = x.norm();
    (x / C::new(nrm, 0.0), smin / smax)
}

/// Right and left null spaces of a square matrix, with the rank decision recorded.
#[derive(Debug, Clone)]
pub struct NullSpace {
    pub dim: usize,
    /// columns span the right null space (in the unscaled variables)
    pub right: DMatrix<f64>,
    /// columns span the left null space (in the unscaled equations)
    pub left: DMatrix<f64>,
    /// largest relative singular value counted as zero
    pub null_level: f64,
    /// smallest relative singular value counted as nonzero
    pub range_level: f64,
    /// the decision falls within the ambiguity band
    pub ambiguous: bool,
}

impl NullSpace {
    /// Null space of `A`, equilibrated jointly with `B` so that `B` acts consistently on it.
    pub fn of(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> Self {
        let (nr, _) = a.shape();
        let (a_s, _, cols) = equilibrate(a, b);
        // row scales are recovered from the scaled matrix to map left vectors back
        let rows: Vec<f64> = (0..nr)
            .map(|i| {
                let m = (0..a.ncols()).map(|j| a[(i, j)].abs().max(b[(i, j)].abs())).fold(0.0, f64::max);
                if m > 0.0 { 1.0 / m } else { 1.0 }
            })
            .collect();
        let svd = a_s.svd(true, true);
        let s = &svd.singular_values;
        let smax = s.iter().copied().fold(0.0, f64::max);
        let mut order: Vec<usize> = (0..s.len()).collect();
        order.sort_by(|&i, &j| s[i].total_cmp(&s[j]));
        let rel: Vec<f64> = order.iter().map(|&i| s[i] / smax).collect();
        let dim = rel.iter().take_while(|&&v| v <= tol).count();
        let null_level = if dim > 0 { rel[dim - 1] } else { 0.0 };
        let range_level = rel.get(dim).copied().unwrap_or(f64::INFINITY);
        let ambiguous = rel.iter().any(|&v| v > tol * 1e-2 && v < tol * 1e2);
        let u = svd.u.expect("requested");
        let vt = svd.v_t.expect("requested");
        let mut right = DMatrix::zeros(a.ncols(), dim);
        let mut left = DMatrix::zeros(nr, dim);
        for (k, &i) in order.iter().take(dim).enumerate() {
            for j in 0..a.ncols() {
                right[(j, k)] = vt[(i, j)] * cols[j];
            }
            for j in 0..nr {
                left[(j, k)] = u[(j, i)] * rows[j];
            }
        }
        NullSpace { dim, right, left, null_level, range_level, ambiguous }
    }

    /// Smallest relative singular value of `Y^T B X` computed on orthonormalized bases.
    /// Zero signals a Jordan chain at the eigenvalue.
    pub fn jordan_gap(&self, b: &DMatrix<f64>) -> f64 {
        if self.dim == 0 {
            return f64::INFINITY;
        }
        let x = self.right.clone().qr().q();
        let y = self.left.clone().qr().q();
        let bn = b.norm().max(f64::MIN_POSITIVE);
        let g = y.transpose() * b * x;
        let sv = g.singular_values();
        sv.iter().copied().fold(f64::INFINITY, f64::min) / bn
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_diagonal_pencil_with_infinite_part() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.0, 0.0, 0.0, -3.0, 0.0, 0.0, 0.0, 1.0]);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let mut ev: Vec<f64> = generalized_eigenvalues(&a, &b, 0.3).unwrap().iter().map(|z| z.re).collect();
        ev.sort_by(f64::total_cmp);
        assert_eq!(ev.len(), 2);
        assert!((ev[0] + 3.0).abs() < 1e-13 && (ev[1] - 2.0).abs() < 1e-13);
    }

    #[test]
    fn jordan_block_is_detected() {
        // A = [[0,1],[0,0]], B = I: double eigenvalue 0, one eigenvector
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = DMatrix::identity(2, 2);
        let ns = NullSpace::of(&a, &b, 1e-9);
        assert_eq!(ns.dim, 1);
        assert!(ns.jordan_gap(&b) < 1e-12);
        let a2 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let ns2 = NullSpace::of(&a2, &b, 1e-9);
        assert_eq!(ns2.dim, 1);
        assert!(ns2.jordan_gap(&b) > 0.5);
    }

    #[test]
    fn null_vector_solves_shifted_system() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = DMatrix::identity(2, 2);
        let ev = generalized_eigenvalues(&a, &b, 0.1).unwrap();
        for lam in ev {
            let (x, s) = null_vector(&a, &b, lam);
            assert!(s < 1e-14);
            let ac = a.map(|v| C::new(v, 0.0));
            let r = &ac * &x - x.clone() * lam;
            assert!(r.norm() < 1e-12);
        }
    }
}
