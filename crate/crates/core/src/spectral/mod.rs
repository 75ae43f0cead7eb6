//! Mode-by-mode spectral analysis of the linearization at a spherical equilibrium
//! inside a concentric ball.
//!
//! Every quantity is expanded in orthonormal spherical harmonics of degree `l`; the
//! radial profiles are discretized by Chebyshev collocation on the ball `[0, R]`
//! (parity-folded) and on the shell `[R, R_out]`.

mod assemble;
pub mod cheb;
mod dispersion;
mod eig;
mod energy;
mod ntd;
mod spectrum;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::thermo::{latent_heat, MaterialParams};

pub use assemble::{ModePencil, PencilKind};
pub use dispersion::{block_ball_eigenvalues, multi_ball_block_spectrum, reduced_dispersion, BlockSpectrum, Crossing, DispersionOptions};
pub use eig::{generalized_eigenvalues, null_vector, NullSpace};
pub use energy::{energy_residual, EnergyTerms};
pub use ntd::{heat_ntd, heat_ntd_profile, stokes_mode_solve, HeatSolution, StokesModeResponse};
pub use spectrum::{decoupling_check, full_mode_eigenvalues, kernel_analysis, mode_spectra, DecouplingReport, KernelReport, ModeSpectrum, SpectrumOptions};

/// Condition imposed on the outer sphere `r = R_out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OuterBoundary {
    /// no-slip wall, insulated
    Wall,
    /// traction-free, temperature held at the equilibrium value
    Reservoir,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialGeometry {
    pub n: usize,
    pub radius: f64,
    pub r_out: f64,
    /// collocation points per radial subinterval
    pub points: usize,
    #[serde(default = "default_outer")]
    pub outer: OuterBoundary,
}

fn default_outer() -> OuterBoundary {
    OuterBoundary::Wall
}

impl RadialGeometry {
    pub fn new(n: usize, radius: f64, r_out: f64, points: usize) -> Result<Self> {
        let g = RadialGeometry { n, radius, r_out, points, outer: OuterBoundary::Wall };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n != 2 && self.n != 3 {
            return Err(Error::Config(format!("spectral analysis supports n = 2, 3 (got {})", self.n)));
        }
        if !(self.radius > 0.0 && self.r_out > self.radius && self.r_out.is_finite()) {
            return Err(Error::Config(format!("need 0 < R < R_out (R = {}, R_out = {})", self.radius, self.r_out)));
        }
        if self.points < 6 {
            return Err(Error::Config(format!("need at least 6 collocation points, got {}", self.points)));
        }
        Ok(())
    }

    pub fn with_outer(&self, outer: OuterBoundary) -> Self {
        RadialGeometry { outer, ..*self }
    }

    pub fn refined(&self) -> Self {
        RadialGeometry { points: 2 * self.points, ..*self }
    }

    /// Area of the interface.
    pub fn interface_area(&self) -> f64 {
        crate::geometry::unit_sphere_area(self.n) * self.radius.powi(self.n as i32 - 1)
    }
}

/// Coefficients of the linearization frozen at the equilibrium temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationParams {
    pub rho: [f64; 2],
    pub mu: [f64; 2],
    pub kappa: [f64; 2],
    pub d: [f64; 2],
    pub l_star: f64,
    pub sigma: f64,
    pub theta_star: f64,
}

impl LinearizationParams {
    pub fn from_material(mat: &MaterialParams, theta_star: f64) -> Result<Self> {
        mat.validate()?;
        if !(theta_star > 0.0) {
            return Err(Error::Domain(format!("equilibrium temperature must be positive, got {theta_star}")));
        }
        let (p1, p2) = (&mat.phase1, &mat.phase2);
        let lp = LinearizationParams {
            rho: [mat.rho1, mat.rho2],
            mu: [p1.mu.eval(theta_star), p2.mu.eval(theta_star)],
            kappa: [p1.kappa(theta_star), p2.kappa(theta_star)],
            d: [p1.d.eval(theta_star), p2.d.eval(theta_star)],
            l_star: latent_heat(theta_star, mat)?,
            sigma: mat.sigma,
            theta_star,
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = self.rho.iter().chain(&self.mu).chain(&self.kappa).chain(&self.d).all(|v| *v > 0.0 && v.is_finite());
        if !pos || !(self.sigma > 0.0) || !(self.theta_star > 0.0) || !self.l_star.is_finite() {
            return Err(Error::Config("linearization coefficients must be positive (latent heat finite)".into()));
        }
        if self.rho[0] == self.rho[1] {
            return Err(Error::Config("densities must differ".into()));
        }
        Ok(())
    }

    pub fn c_star(&self) -> f64 {
        self.l_star * self.l_star / self.theta_star
    }

    pub fn jump_rho(&self) -> f64 {
        self.rho[1] - self.rho[0]
    }

    pub fn jump_inv_rho(&self) -> f64 {
        1.0 / self.rho[1] - 1.0 / self.rho[0]
    }

    /// Default left margin of the eigenvalue search window.
    pub fn default_margin(&self, geom: &RadialGeometry) -> f64 {
        0.5 * self.sigma * (geom.n as f64 - 1.0) / (geom.radius * geom.radius)
    }
}

/// `l (l + n - 2)`
pub(crate) fn laplace_eig(l: usize, n: usize) -> f64 {
    (l * (l + n - 2)) as f64
}
