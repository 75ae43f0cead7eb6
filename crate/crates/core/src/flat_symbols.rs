//! Flat-interface boundary symbols: branch functions ω_j, γ_j, the ψ/ℓ pair,
//! the two transmission symbol families and their Lopatinskii determinants,
//! and the composite boundary symbol s(λ, τ).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::MaterialParams;

type C = Complex64;

/// Frozen densities and viscosities of the two phases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    pub rho1: f64,
    pub rho2: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl FlatParams {
    pub fn new(rho1: f64, rho2: f64, mu1: f64, mu2: f64) -> Self {
        FlatParams { rho1, rho2, mu1, mu2 }
    }

    pub fn from_material(mat: &MaterialParams, theta: f64) -> Self {
        FlatParams {
            rho1: mat.rho1,
            rho2: mat.rho2,
            mu1: mat.phase1.mu.eval(theta),
            mu2: mat.phase2.mu.eval(theta),
        }
    }

    /// Random draw with densities and viscosities in [0.2, 5] and |ρ1 − ρ2| ≥ 0.1.
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let mut draw = || (rng.gen_range(0.2f64.ln()..5.0f64.ln())).exp();
        loop {
            let p = FlatParams::new(draw(), draw(), draw(), draw());
            if (p.rho1 - p.rho2).abs() >= 0.1 {
                return p;
            }
        }
    }

    pub fn jump_rho(&self) -> f64 {
        self.rho2 - self.rho1
    }

    /// Left endpoints −μ_j/ρ_j of the two branch cuts.
    pub fn cut_endpoints(&self) -> [f64; 2] {
        [-self.mu1 / self.rho1, -self.mu2 / self.rho2]
    }

    /// Distance from z to the nearer branch cut.
    pub fn cut_distance(&self, z: C) -> f64 {
        self.cut_endpoints()
            .iter()
            .map(|&e| if z.re <= e { z.im.abs() } else { (z - e).norm() })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolPoint {
    pub z: C,
    pub omega1: C,
    pub omega2: C,
    pub gamma1: C,
    pub gamma2: C,
    pub gamma: C,
}

pub fn symbol_point(z: C, p: &FlatParams) -> Result<SymbolPoint> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Branch(z));
    }
    let [e1, e2] = p.cut_endpoints();
    if z.im == 0.0 && z.re <= e1.max(e2) {
        return Err(Error::Branch(z));
    }
    let omega1 = (1.0 + z * (p.rho1 / p.mu1)).sqrt();
    let omega2 = (1.0 + z * (p.rho2 / p.mu2)).sqrt();
    let gamma1 = omega1 + omega1.inv();
    let gamma2 = omega2 + omega2.inv();
    Ok(SymbolPoint {
        z,
        omega1,
        omega2,
        gamma1,
        gamma2,
        gamma: gamma1 * p.mu1 + gamma2 * p.mu2,
    })
}

/// ψ(z) and ℓ(z) of the flat boundary symbol.
pub fn psi_and_ell(z: C, p: &FlatParams) -> Result<(C, C)> {
    let sp = symbol_point(z, p)?;
    let (w1, w2) = (sp.omega1, sp.omega2);
    let bracket = |w: C| (w - 1.0) / w + (w + 1.0) * 2.0 / (w * w + 1.0);
    let b1 = bracket(w1);
    let b2 = bracket(w2);
    let psi = (w1 + 1.0) / (w1 * w1 + 1.0) * p.mu2 * b2 + (w2 + 1.0) / (w2 * w2 + 1.0) * p.mu1 * b1;
    if psi.norm() < 1e-14 {
        return Err(Error::Degenerate(format!("|psi({z})| = {:e}", psi.norm())));
    }
    let num = (w1 - 1.0) / (w1 * (w1 * w1 + 1.0)) * (p.rho1 * p.mu2) * b2
        - (w2 - 1.0) / (w2 * (w2 * w2 + 1.0)) * (p.rho2 * p.mu1) * b1;
    Ok((psi, num / psi))
}

/// Closed-form limit of z·ℓ(z) as |z| → ∞ off the negative axis.
pub fn z_ell_limit(p: &FlatParams) -> f64 {
    let a = (p.mu1 / p.rho1).sqrt();
    let b = (p.mu2 / p.rho2).sqrt();
    2.0 * p.mu1 * p.mu2 * (b - a) / (p.mu1 * b + p.mu2 * a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    S11,
    S22,
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s11" => Ok(Variant::S11),
            "s22" => Ok(Variant::S22),
            _ => Err(Error::Config(format!("unknown symbol variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymbolBundle {
    pub variant: Variant,
    pub p1: C,
    pub p2: C,
    pub q1: C,
    pub q2: C,
    /// Unfactored determinant p1·q2 + p2·q1.
    pub r: C,
    pub r1: C,
    pub r2: C,
    /// Interface pressures π̂_k per unit |ξ|·(data), i.e. J·p_{3−k}·γ²/r.
    pub pressure: [C; 2],
}

impl SymbolBundle {
    pub fn factorization_residual(&self) -> f64 {
        (self.r - self.r1 * self.r2).norm() / (1.0 + self.r.norm())
    }
}

fn r1_of(sp: &SymbolPoint) -> C {
    sp.gamma / (sp.omega1 * sp.omega2 * (sp.omega1 + 1.0) * (sp.omega2 + 1.0))
}

/// The individual summands of the reduced determinant r₂⁰.
pub fn r2_summands(variant: Variant, sp: &SymbolPoint, p: &FlatParams) -> Vec<C> {
    let (w1, w2) = (sp.omega1, sp.omega2);
    let b1 = w1 + 1.0;
    let b2 = w2 + 1.0;
    match variant {
        Variant::S11 => {
            let a = p.mu2 * p.rho1 / (p.mu1 * p.rho2);
            let b = p.mu1 * p.rho2 / (p.mu2 * p.rho1);
            vec![
                (w1 * (p.rho2 / p.rho1) + w2 * (p.rho1 / p.rho2)) * b1 * b2,
                (w1 - 1.0) * (w2 - 1.0) * 2.0,
                (w2 - 1.0) * (2.0 * a),
                (w1 - 1.0) * (2.0 * b),
                (w2 * w2 + 1.0) * b2 * a,
                sp.gamma1 * w1 * b1 * b,
            ]
        }
        Variant::S22 => {
            let a = p.mu2 / p.mu1;
            let b = p.mu1 / p.mu2;
            vec![
                (w1 + w2) * b1 * b2,
                (w1 - 1.0) * (w2 - 1.0) * 2.0,
                (w2 - 1.0) * (2.0 * a),
                (w2 * w2 + 1.0) * b2 * a,
                (w1 - 1.0) * (2.0 * b),
                (w1 * w1 + 1.0) * b1 * b,
            ]
        }
    }
}

pub fn r2(variant: Variant, z: C, p: &FlatParams) -> Result<C> {
    let sp = symbol_point(z, p)?;
    Ok(r2_summands(variant, &sp, p).into_iter().sum())
}

pub fn s11_symbols(z: C, p: &FlatParams) -> Result<SymbolBundle> {
    let sp = symbol_point(z, p)?;
    let (w1, w2, g) = (sp.omega1, sp.omega2, sp.gamma);
    let jump = p.mu2 / p.rho2 - p.mu1 / p.rho1;
    let p1 = 1.0 / p.rho1 - (w1 - 1.0) * (2.0 * jump) / (g * w1 * (w1 + 1.0));
    let p2 = 1.0 / p.rho2 + (w2 - 1.0) * (2.0 * jump) / (g * w2 * (w2 + 1.0));
    let q1 = g
        * (p.rho1 / w1
            + sp.gamma2 * (p.rho1 * p.mu2 / p.mu1) / (w1 * (w1 + 1.0))
            + (w1 - 1.0) * p.rho2 / (w1 * w2 * (w1 + 1.0)));
    let q2 = g
        * (p.rho2 / w2
            + sp.gamma1 * (p.rho2 * p.mu1 / p.mu2) / (w2 * (w2 + 1.0))
            + (w2 - 1.0) * p.rho1 / (w1 * w2 * (w2 + 1.0)));
    Ok(bundle(Variant::S11, &sp, p, p.jump_rho(), p1, p2, q1, q2))
}

pub fn s22_symbols(z: C, p: &FlatParams) -> Result<SymbolBundle> {
    let sp = symbol_point(z, p)?;
    let (w1, w2, g) = (sp.omega1, sp.omega2, sp.gamma);
    let jump = p.mu2 - p.mu1;
    let p1 = 1.0 - (w1 - 1.0) * (2.0 * jump) / (g * w1 * (w1 + 1.0));
    let p2 = 1.0 + (w2 - 1.0) * (2.0 * jump) / (g * w2 * (w2 + 1.0));
    let q1 = g / w1
        * (1.0 + (w1 - 1.0) / (w2 * (w1 + 1.0)) + sp.gamma2 * (p.mu2 / p.mu1) / (w1 + 1.0));
    let q2 = g / w2
        * (1.0 + (w2 - 1.0) / (w1 * (w2 + 1.0)) + sp.gamma1 * (p.mu1 / p.mu2) / (w2 + 1.0));
    let jump_inv_rho = 1.0 / p.rho2 - 1.0 / p.rho1;
    Ok(bundle(Variant::S22, &sp, p, jump_inv_rho, p1, p2, q1, q2))
}

pub fn symbols(variant: Variant, z: C, p: &FlatParams) -> Result<SymbolBundle> {
    match variant {
        Variant::S11 => s11_symbols(z, p),
        Variant::S22 => s22_symbols(z, p),
    }
}

#[allow(clippy::too_many_arguments)]
fn bundle(variant: Variant, sp: &SymbolPoint, p: &FlatParams, data_jump: f64, p1: C, p2: C, q1: C, q2: C) -> SymbolBundle {
    let r = p1 * q2 + p2 * q1;
    let g2 = sp.gamma * sp.gamma;
    SymbolBundle {
        variant,
        p1,
        p2,
        q1,
        q2,
        r,
        r1: r1_of(sp),
        r2: r2_summands(variant, sp, p).into_iter().sum(),
        pressure: [p2 * g2 * data_jump / r, p1 * g2 * data_jump / r],
    }
}

/// Limit values (p1, p2, q1, q2) as stated for z = 0.
pub fn stated_limits_at_zero(variant: Variant, p: &FlatParams) -> [f64; 4] {
    let s = 2.0 * (p.mu1 + p.mu2).powi(2);
    match variant {
        Variant::S11 => [1.0 / p.rho1, 1.0 / p.rho2, s * p.rho1 / p.mu1, s * p.rho2 / p.mu2],
        Variant::S22 => [1.0, 1.0, s / p.mu1, s / p.mu2],
    }
}

/// Limit values (p1, p2, q1, q2) as stated for |z| → ∞.
pub fn stated_limits_at_infinity(variant: Variant, p: &FlatParams) -> [f64; 4] {
    let root_sum = (p.rho1 * p.mu1).sqrt() + (p.rho2 * p.mu2).sqrt();
    match variant {
        Variant::S11 => {
            let s = p.rho1 + p.rho2;
            [1.0 / p.rho1, 1.0 / p.rho2, s * (p.rho1 * p.mu1).sqrt(), s * (p.rho2 * p.mu2).sqrt()]
        }
        Variant::S22 => [1.0, 1.0, root_sum * root_sum * p.rho1, root_sum * root_sum * p.rho2],
    }
}

/// Limit values (p1, p2, q1, q2) obtained by letting ω_k → ∞ in the component formulas.
pub fn formula_limits_at_infinity(variant: Variant, p: &FlatParams) -> [f64; 4] {
    let root_sum = (p.rho1 * p.mu1).sqrt() + (p.rho2 * p.mu2).sqrt();
    let s = root_sum * root_sum;
    match variant {
        Variant::S11 => [1.0 / p.rho1, 1.0 / p.rho2, s, s],
        Variant::S22 => [1.0, 1.0, s / p.rho1, s / p.rho2],
    }
}

/// Interface curvature symbol m(z), injected by the caller.
pub trait CurvatureSymbol: Sync {
    fn eval(&self, z: C) -> C;
    /// Bound M with |m(z)| ≤ M on the sectors of interest.
    fn bound(&self) -> f64;
}

/// Constant m ≡ m0. Not a physical model; for plumbing and tests only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantM(pub f64);

impl CurvatureSymbol for ConstantM {
    fn eval(&self, _z: C) -> C {
        C::new(self.0, 0.0)
    }

    fn bound(&self) -> f64 {
        self.0.abs()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SymbolCoefficients<'a> {
    pub sigma: f64,
    pub c0: f64,
    pub b0: &'a [f64],
}

/// s(λ, τ) = λ + στ m(z)/[[ρ]]² + c0 τ ℓ(z)/[[ρ]] + iτ (b0·ξ/|ξ|)/[[ρ]], z = λ/τ².
pub fn s_boundary_symbol(
    lambda: C,
    xi: &[f64],
    p: &FlatParams,
    coef: SymbolCoefficients<'_>,
    m_fn: Option<&dyn CurvatureSymbol>,
) -> Result<C> {
    let m_fn = m_fn.ok_or_else(|| Error::Config("no curvature symbol m(z) supplied".into()))?;
    if xi.len() != coef.b0.len() {
        return Err(Error::Shape(format!("xi has {} components, b0 has {}", xi.len(), coef.b0.len())));
    }
    let tau = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(tau > 0.0) {
        return Err(Error::Domain("tau = |xi| must be positive".into()));
    }
    let z = lambda / (tau * tau);
    let jr = p.jump_rho();
    let drift: f64 = xi.iter().zip(coef.b0).map(|(x, b)| x * b).sum::<f64>() / tau;
    let mut s = lambda + m_fn.eval(z) * (coef.sigma * tau / (jr * jr)) + C::new(0.0, tau * drift / jr);
    if coef.c0 != 0.0 {
        let (_, ell) = psi_and_ell(z, p)?;
        s += ell * (coef.c0 * tau / jr);
    }
    Ok(s)
}
