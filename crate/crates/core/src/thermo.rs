//! Phase-wise thermodynamics: free energy laws and the quantities derived from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Free energy ψ(θ) with its first two derivatives in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", content = "coeffs", rename_all = "snake_case")]
pub enum FreeEnergy {
    /// ψ = −cθ(ln θ − 1) + e0 − s0θ, so ε = cθ + e0 and κ = c.
    Reference { c: f64, e0: f64, s0: f64 },
    /// ψ = −aθ ln θ − bθ²/2, so κ = a + bθ.
    TwoTerm { a: f64, b: f64 },
}

impl FreeEnergy {
    pub fn reference(c: f64) -> Self {
        FreeEnergy::Reference { c, e0: 0.0, s0: 0.0 }
    }

    pub fn psi(&self, t: f64) -> f64 {
        match *self {
            FreeEnergy::Reference { c, e0, s0 } => -c * t * (t.ln() - 1.0) + e0 - s0 * t,
            FreeEnergy::TwoTerm { a, b } => -a * t * t.ln() - 0.5 * b * t * t,
        }
    }

    pub fn dpsi(&self, t: f64) -> f64 {
        match *self {
            FreeEnergy::Reference { c, s0, .. } => -c * t.ln() - s0,
            FreeEnergy::TwoTerm { a, b } => -a * (t.ln() + 1.0) - b * t,
        }
    }

    pub fn ddpsi(&self, t: f64) -> f64 {
        match *self {
            FreeEnergy::Reference { c, .. } => -c / t,
            FreeEnergy::TwoTerm { a, b } => -a / t - b,
        }
    }

    pub fn from_coeffs(name: &str, coeffs: &[f64]) -> Result<Self> {
        let law = match (name, coeffs) {
            ("reference", [c]) => FreeEnergy::reference(*c),
            ("reference", [c, e0, s0]) => FreeEnergy::Reference { c: *c, e0: *e0, s0: *s0 },
            ("two_term", [a, b]) => FreeEnergy::TwoTerm { a: *a, b: *b },
            _ => {
                return Err(Error::Config(format!(
                    "unknown free energy law {name:?} with {} coefficients",
                    coeffs.len()
                )))
            }
        };
        law.validate()?;
        Ok(law)
    }

    pub fn name(&self) -> &'static str {
        match self {
            FreeEnergy::Reference { .. } => "reference",
            FreeEnergy::TwoTerm { .. } => "two_term",
        }
    }

    pub fn coeffs(&self) -> Vec<f64> {
        match *self {
            FreeEnergy::Reference { c, e0, s0 } => vec![c, e0, s0],
            FreeEnergy::TwoTerm { a, b } => vec![a, b],
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            FreeEnergy::Reference { c, .. } => c > 0.0,
            FreeEnergy::TwoTerm { a, b } => a > 0.0 && b >= 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("{self:?} has non-positive heat capacity")))
        }
    }
}

/// Positive coefficient laws used for viscosity and conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", content = "coeffs", rename_all = "snake_case")]
pub enum ScalarLaw {
    Constant(f64),
    /// a·exp(b/θ)
    Arrhenius { a: f64, b: f64 },
    /// a·θ^p
    Power { a: f64, p: f64 },
}

impl ScalarLaw {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ScalarLaw::Constant(v) => v,
            ScalarLaw::Arrhenius { a, b } => a * (b / t).exp(),
            ScalarLaw::Power { a, p } => a * t.powf(p),
        }
    }

    pub fn from_coeffs(name: &str, coeffs: &[f64]) -> Result<Self> {
        let law = match (name, coeffs) {
            ("constant", [v]) => ScalarLaw::Constant(*v),
            ("arrhenius", [a, b]) => ScalarLaw::Arrhenius { a: *a, b: *b },
            ("power", [a, p]) => ScalarLaw::Power { a: *a, p: *p },
            _ => {
                return Err(Error::Config(format!(
                    "unknown coefficient law {name:?} with {} coefficients",
                    coeffs.len()
                )))
            }
        };
        let lead = match law {
            ScalarLaw::Constant(v) => v,
            ScalarLaw::Arrhenius { a, .. } | ScalarLaw::Power { a, .. } => a,
        };
        if lead > 0.0 {
            Ok(law)
        } else {
            Err(Error::Config(format!("{law:?} is not positive")))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScalarLaw::Constant(_) => "constant",
            ScalarLaw::Arrhenius { .. } => "arrhenius",
            ScalarLaw::Power { .. } => "power",
        }
    }

    pub fn coeffs(&self) -> Vec<f64> {
        match *self {
            ScalarLaw::Constant(v) => vec![v],
            ScalarLaw::Arrhenius { a, b } => vec![a, b],
            ScalarLaw::Power { a, p } => vec![a, p],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseLaw {
    pub free_energy: FreeEnergy,
    pub mu: ScalarLaw,
    pub d: ScalarLaw,
}

impl PhaseLaw {
    pub fn reference(c: f64, mu: f64, d: f64) -> Self {
        PhaseLaw {
            free_energy: FreeEnergy::reference(c),
            mu: ScalarLaw::Constant(mu),
            d: ScalarLaw::Constant(d),
        }
    }

    pub fn kappa(&self, t: f64) -> f64 {
        -t * self.free_energy.ddpsi(t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaterialParams {
    pub rho1: f64,
    pub rho2: f64,
    pub sigma: f64,
    pub phase1: PhaseLaw,
    pub phase2: PhaseLaw,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            rho1: 1.0,
            rho2: 2.0,
            sigma: 1.0,
            phase1: PhaseLaw::reference(1.0, 1.0, 1.0),
            phase2: PhaseLaw::reference(2.0, 2.0, 1.5),
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho1 > 0.0 && self.rho2 > 0.0) {
            return Err(Error::Config("densities must be positive".into()));
        }
        if self.rho1 == self.rho2 {
            return Err(Error::Config("equal densities: [[rho]] = 0".into()));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::Config("surface tension must be positive".into()));
        }
        Ok(())
    }

    pub fn phase(&self, phase: u8) -> Result<&PhaseLaw> {
        match phase {
            1 => Ok(&self.phase1),
            2 => Ok(&self.phase2),
            _ => Err(Error::Domain(format!("phase index {phase} is not 1 or 2"))),
        }
    }

    pub fn rho(&self, phase: u8) -> f64 {
        if phase == 1 {
            self.rho1
        } else {
            self.rho2
        }
    }

    pub fn jump_rho(&self) -> f64 {
        self.rho2 - self.rho1
    }

    pub fn jump_inv_rho(&self) -> f64 {
        1.0 / self.rho2 - 1.0 / self.rho1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermoState {
    pub theta: f64,
    pub psi: f64,
    pub eta: f64,
    pub eps: f64,
    pub kappa: f64,
}

fn check_theta(theta: f64) -> Result<()> {
    if theta > 0.0 && theta.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("temperature must be positive, got {theta}")))
    }
}

pub fn eval_phase(theta: f64, phase: u8, mat: &MaterialParams) -> Result<ThermoState> {
    check_theta(theta)?;
    let law = mat.phase(phase)?;
    let psi = law.free_energy.psi(theta);
    let eta = -law.free_energy.dpsi(theta);
    Ok(ThermoState {
        theta,
        psi,
        eta,
        eps: psi + theta * eta,
        kappa: law.kappa(theta),
    })
}

pub fn latent_heat(theta: f64, mat: &MaterialParams) -> Result<f64> {
    check_theta(theta)?;
    Ok(theta * (mat.phase2.free_energy.dpsi(theta) - mat.phase1.free_energy.dpsi(theta)))
}

pub fn phase_flux_from_normal_jump(jump_u_normal: f64, mat: &MaterialParams) -> Result<f64> {
    if mat.rho1 == mat.rho2 {
        return Err(Error::Config("phase flux undefined for equal densities".into()));
    }
    Ok(jump_u_normal / mat.jump_inv_rho())
}

/// Log-spaced temperatures used by the consistency sweeps.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::E;

    fn laws() -> Vec<PhaseLaw> {
        vec![
            PhaseLaw::reference(1.0, 1.0, 1.0),
            PhaseLaw::reference(2.0, 0.5, 3.0),
            PhaseLaw {
                free_energy: FreeEnergy::Reference { c: 1.5, e0: -2.0, s0: 0.7 },
                mu: ScalarLaw::Arrhenius { a: 0.3, b: 1.2 },
                d: ScalarLaw::Power { a: 2.0, p: 0.5 },
            },
            PhaseLaw {
                free_energy: FreeEnergy::TwoTerm { a: 1.0, b: 0.25 },
                mu: ScalarLaw::Power { a: 1.0, p: -0.5 },
                d: ScalarLaw::Constant(0.1),
            },
        ]
    }

    fn mat_with(c1: f64, c2: f64) -> MaterialParams {
        MaterialParams {
            phase1: PhaseLaw::reference(c1, 1.0, 1.0),
            phase2: PhaseLaw::reference(c2, 1.0, 1.0),
            ..MaterialParams::default()
        }
    }

    // Oracle: ψ = −cθ(lnθ−1) gives η = c lnθ, ε = cθ, κ = c.
    #[test]
    fn reference_law_values() {
        let s = eval_phase(1.0, 1, &mat_with(1.0, 2.0)).unwrap();
        assert!(s.eta.abs() < 1e-15);
        assert!((s.eps - 1.0).abs() < 1e-15);
        assert!((s.kappa - 1.0).abs() < 1e-15);

        let s = eval_phase(E, 1, &mat_with(2.0, 2.0)).unwrap();
        assert!((s.eta - 2.0).abs() < 1e-14);
        assert!((s.eps - 2.0 * E).abs() < 1e-14);
        assert!((s.kappa - 2.0).abs() < 1e-14);
    }

    #[test]
    fn latent_heat_values() {
        let mat = mat_with(1.0, 2.0);
        assert_eq!(latent_heat(1.0, &mat).unwrap(), 0.0);
        assert!((latent_heat(E, &mat).unwrap() + E).abs() < 1e-14);
        let same = mat_with(1.3, 1.3);
        for t in log_grid(1e-3, 1e3, 20) {
            assert_eq!(latent_heat(t, &same).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_bad_temperature() {
        let mat = MaterialParams::default();
        assert!(matches!(eval_phase(0.0, 1, &mat), Err(Error::Domain(_))));
        assert!(matches!(eval_phase(-1.0, 2, &mat), Err(Error::Domain(_))));
        assert!(matches!(latent_heat(-0.1, &mat), Err(Error::Domain(_))));
        assert!(eval_phase(1.0, 3, &mat).is_err());
    }

    #[test]
    fn phase_flux() {
        let mat = MaterialParams::default();
        assert_eq!(phase_flux_from_normal_jump(0.0, &mat).unwrap(), 0.0);
        let j = phase_flux_from_normal_jump(-0.5, &mat).unwrap();
        assert!((j - 1.0).abs() < 1e-15);
        assert_eq!(mat.jump_inv_rho() * j, -0.5);
        let eq = MaterialParams { rho2: 1.0, ..mat };
        assert!(matches!(phase_flux_from_normal_jump(1.0, &eq), Err(Error::Config(_))));
    }

    #[test]
    fn registered_laws_positive_on_log_grid() {
        for law in laws() {
            for t in log_grid(1e-3, 1e3, 64) {
                assert!(law.kappa(t) > 0.0);
                assert!(law.mu.eval(t) > 0.0);
                assert!(law.d.eval(t) > 0.0);
            }
        }
    }

    #[test]
    fn energy_derivative_is_heat_capacity() {
        for law in laws() {
            let mat = MaterialParams { phase1: law, ..MaterialParams::default() };
            for t in log_grid(1e-3, 1e3, 64) {
                let h = 1e-4 * t;
                let ep = eval_phase(t + h, 1, &mat).unwrap().eps;
                let em = eval_phase(t - h, 1, &mat).unwrap().eps;
                let fd = (ep - em) / (2.0 * h);
                let k = law.kappa(t);
                assert!((fd - k).abs() <= 1e-6 * k.max(1.0), "t={t} fd={fd} k={k}");
            }
        }
    }

    #[test]
    fn latent_heat_is_minus_theta_entropy_jump() {
        let ls = laws();
        for a in &ls {
            for b in &ls {
                let mat = MaterialParams { phase1: *a, phase2: *b, ..MaterialParams::default() };
                for t in log_grid(1e-3, 1e3, 64) {
                    let l = latent_heat(t, &mat).unwrap();
                    let e1 = eval_phase(t, 1, &mat).unwrap().eta;
                    let e2 = eval_phase(t, 2, &mat).unwrap().eta;
                    let r = l + t * (e2 - e1);
                    assert!(r.abs() <= 1e-12 * l.abs().max(t * e1.abs()).max(1e-300));
                }
            }
        }
    }

    #[test]
    fn law_names_round_trip() {
        for law in laws() {
            let fe = law.free_energy;
            assert_eq!(FreeEnergy::from_coeffs(fe.name(), &fe.coeffs()).unwrap(), fe);
            assert_eq!(ScalarLaw::from_coeffs(law.mu.name(), &law.mu.coeffs()).unwrap(), law.mu);
        }
        assert!(FreeEnergy::from_coeffs("reference", &[-1.0]).is_err());
        assert!(ScalarLaw::from_coeffs("cubic", &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn eps_identity_exact(t in 1e-3f64..1e3, c in 0.1f64..10.0, e0 in -5f64..5.0, s0 in -5f64..5.0) {
            let law = PhaseLaw { free_energy: FreeEnergy::Reference { c, e0, s0 }, ..PhaseLaw::reference(1.0, 1.0, 1.0) };
            let mat = MaterialParams { phase2: law, ..MaterialParams::default() };
            let s = eval_phase(t, 2, &mat).unwrap();
            let scale = s.psi.abs() + (t * s.eta).abs();
            prop_assert!((s.eps - s.psi - t * s.eta).abs() <= 2.0 * f64::EPSILON * scale);
        }
    }
}
