//! Chebyshev-extrema collocation on the ball and on the shell.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Nodes `cos(pi j / k)`, `j = 0..=k`, and the differentiation matrix on them.
pub fn cheb(k: usize) -> (Vec<f64>, DMatrix<f64>) {
    if k == 0 {
        return (vec![1.0], DMatrix::zeros(1, 1));
    }
    let x: Vec<f64> = (0..=k).map(|j| (PI * j as f64 / k as f64).cos()).collect();
    let c = |i: usize| {
        let s = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        if i == 0 || i == k { 2.0 * s } else { s }
    };
    let mut d = DMatrix::zeros(k + 1, k + 1);
    for i in 0..=k {
        let mut row = 0.0;
        for j in 0..=k {
            if i != j {
                let v = c(i) / c(j) / (x[i] - x[j]);
                d[(i, j)] = v;
                row += v;
            }
        }
        d[(i, i)] = -row;
    }
    (x, d)
}

fn bary_weights(k: usize) -> Vec<f64> {
    (0..=k)
        .map(|j| {
            let s = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == k { 0.5 * s } else { s }
        })
        .collect()
}

/// Row of barycentric interpolation weights from Chebyshev nodes `x` to `t`.
fn bary_row(x: &[f64], w: &[f64], t: f64) -> Vec<f64> {
    if let Some(hit) = x.iter().position(|&xj| (t - xj).abs() < 1e-15) {
        let mut row = vec![0.0; x.len()];
        row[hit] = 1.0;
        return row;
    }
    let terms: Vec<f64> = x.iter().zip(w).map(|(xj, wj)| wj / (t - xj)).collect();
    let sum: f64 = terms.iter().sum();
    terms.into_iter().map(|v| v / sum).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// `[0, R]`, parity-folded from the symmetric grid on `[-R, R]`.
    Ball { parity_even: bool },
    /// `[R, R_out]`.
    Shell,
}

/// Collocation grid for one phase with first and second derivative matrices in r.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub kind: GridKind,
    pub r: Vec<f64>,
    pub d1: DMatrix<f64>,
    pub d2: DMatrix<f64>,
    /// index of the node at the interface radius
    pub inner: usize,
    /// index of the node at the far end (outer wall for the shell, the node nearest 0 for the ball)
    pub outer: usize,
    lo: f64,
    hi: f64,
}

impl RadialGrid {
    /// `n` nodes in `(0, R]` carrying functions of parity `(-1)^parity`.
    pub fn ball(n: usize, radius: f64, parity: usize) -> Self {
        let k = 2 * n - 1;
        let (x, d) = cheb(k);
        let dd = &d * &d;
        let p = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
        let mut d1 = DMatrix::zeros(n, n);
        let mut d2 = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                d1[(i, j)] = (d[(i, j)] + p * d[(i, k - j)]) / radius;
                d2[(i, j)] = (dd[(i, j)] + p * dd[(i, k - j)]) / (radius * radius);
            }
        }
        RadialGrid {
            kind: GridKind::Ball { parity_even: parity.is_multiple_of(2) },
            r: x[..n].iter().map(|v| v * radius).collect(),
            d1,
            d2,
            inner: 0,
            outer: n - 1,
            lo: -radius,
            hi: radius,
        }
    }

    /// `n` nodes on `[R, R_out]`.
    pub fn shell(n: usize, radius: f64, r_out: f64) -> Self {
        let k = n - 1;
        let (x, d) = cheb(k);
        let s = 2.0 / (r_out - radius);
        let d1 = &d * s;
        let d2 = &d1 * &d1;
        RadialGrid {
            kind: GridKind::Shell,
            r: x.iter().map(|v| radius + (r_out - radius) * (1.0 + v) / 2.0).collect(),
            d1,
            d2,
            inner: k,
            outer: 0,
            lo: radius,
            hi: r_out,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Nodes where the differential equation is collocated.
    pub fn interior(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| i != self.inner && (self.kind != GridKind::Shell || i != self.outer)).collect()
    }

    /// Interpolation matrix from nodal values to the points `t`.
    pub fn interpolation(&self, t: &[f64]) -> DMatrix<f64> {
        self.interpolation_parity(t, false)
    }

    /// Interpolation of nodal values of the first derivative (opposite parity on the ball).
    pub fn derivative_interpolation(&self, t: &[f64]) -> DMatrix<f64> {
        self.interpolation_parity(t, true)
    }

    fn interpolation_parity(&self, t: &[f64], flip: bool) -> DMatrix<f64> {
        let n = self.len();
        let mut out = DMatrix::zeros(t.len(), n);
        match self.kind {
            GridKind::Shell => {
                let k = n - 1;
                let w = bary_weights(k);
                let x: Vec<f64> = (0..=k).map(|j| (PI * j as f64 / k as f64).cos()).collect();
                for (row, &ti) in t.iter().enumerate() {
                    let xi = 2.0 * (ti - self.lo) / (self.hi - self.lo) - 1.0;
                    for (j, v) in bary_row(&x, &w, xi).into_iter().enumerate() {
                        out[(row, j)] = v;
                    }
                }
            }
            GridKind::Ball { parity_even } => {
                let k = 2 * n - 1;
                let p = if parity_even != flip { 1.0 } else { -1.0 };
                let w = bary_weights(k);
                let x: Vec<f64> = (0..=k).map(|j| (PI * j as f64 / k as f64).cos()).collect();
                for (row, &ti) in t.iter().enumerate() {
                    let xi = ti / self.hi;
                    for (j, v) in bary_row(&x, &w, xi).into_iter().enumerate() {
                        if j < n {
                            out[(row, j)] += v;
                        } else {
                            out[(row, k - j)] += p * v;
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn apply(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        (m * nalgebra::DVector::from_column_slice(v)).iter().copied().collect()
    }

    #[test]
    fn shell_derivatives_are_exact_on_polynomials() {
        let n = 12;
        let g = RadialGrid::shell(n, 1.0, 2.5);
        for deg in 0..n {
            let f: Vec<f64> = g.r.iter().map(|r| r.powi(deg as i32)).collect();
            let df = apply(&g.d1, &f);
            let ddf = apply(&g.d2, &f);
            for (i, r) in g.r.iter().enumerate() {
                let e1 = deg as f64 * r.powi(deg as i32 - 1);
                let e2 = (deg * deg.saturating_sub(1)) as f64 * r.powi(deg as i32 - 2);
                assert!((df[i] - e1).abs() <= 1e-10 * e1.abs().max(1.0), "deg {deg}");
                assert!((ddf[i] - e2).abs() <= 1e-9 * e2.abs().max(1.0), "deg {deg}");
            }
        }
    }

    #[test]
    fn ball_fold_respects_parity() {
        let n = 10;
        for parity in 0..2 {
            let g = RadialGrid::ball(n, 0.7, parity);
            for deg in (parity..2 * n - 1).step_by(2) {
                let f: Vec<f64> = g.r.iter().map(|r| r.powi(deg as i32)).collect();
                let df = apply(&g.d1, &f);
                let ddf = apply(&g.d2, &f);
                for (i, r) in g.r.iter().enumerate() {
                    let e1 = deg as f64 * r.powi(deg as i32 - 1);
                    let e2 = (deg * deg.saturating_sub(1)) as f64 * r.powi(deg as i32 - 2);
                    assert!((df[i] - e1).abs() <= 1e-10 * e1.abs().max(1.0));
                    assert!((ddf[i] - e2).abs() <= 1e-9 * e2.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn interpolation_reproduces_polynomials() {
        let shell = RadialGrid::shell(9, 1.0, 3.0);
        let ball = RadialGrid::ball(9, 1.0, 1);
        let t = [0.013, 0.4, 0.999];
        let ts = [1.0, 1.77, 2.9];
        let f: Vec<f64> = ball.r.iter().map(|r| r * r * r - 2.0 * r).collect();
        for (v, x) in apply(&ball.interpolation(&t), &f).iter().zip(t) {
            assert!((v - (x * x * x - 2.0 * x)).abs() < 1e-13);
        }
        let g: Vec<f64> = shell.r.iter().map(|r| r.powi(5) - r).collect();
        for (v, x) in apply(&shell.interpolation(&ts), &g).iter().zip(ts) {
            assert!((v - (x.powi(5) - x)).abs() < 1e-11);
        }
    }

    #[test]
    fn interior_excludes_closure_rows() {
        let b = RadialGrid::ball(6, 1.0, 0);
        let s = RadialGrid::shell(6, 1.0, 2.0);
        assert_eq!(b.interior().len(), 5);
        assert!(!b.interior().contains(&b.inner));
        assert_eq!(s.interior().len(), 4);
        assert!((s.r[s.inner] - 1.0).abs() < 1e-15 && (s.r[s.outer] - 2.0).abs() < 1e-15);
    }
}
