//! Coupled heat (θ) and moisture (φ) transport on linear triangles.
//!
//! Unknowns are interleaved per node as `[θ_0, φ_0, θ_1, φ_1, ...]`. The
//! semi-discrete system `C(r) ṙ + K(r) r = F(t)` is advanced with the
//! generalized trapezoidal rule and Picard iteration on the coefficients.

mod assemble;
pub mod nonlinear;

use thiserror::Error;

pub use assemble::{
    AssembledSystem, BoundaryConditions, StepReport, StorageEvaluation, SurfaceCondition, TransportModel, TransportOptions,
    VaporExchange,
};
pub use nonlinear::{nonlinear_iterate, PicardOptions, PicardOutcome};

use crate::constitutive::{self, ConstitutiveError, IceContent, TransportParams};
use crate::ice::IceModel;
use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
    #[error("element {element}: {source}")]
    Coefficient {
        element: usize,
        #[source]
        source: ConstitutiveError,
    },
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
    #[error(transparent)]
    Linear(#[from] LinalgError),
    #[error("nonlinear iteration diverged at iteration {iteration} (relative residual {residual:e})")]
    Diverged { iteration: usize, residual: f64 },
    #[error("no convergence after {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
}

/// Coefficients of the coupled system at one point.
///
/// Heat flux `-(k_tt ∇θ + k_tp ∇φ)`, moisture flux `-(k_pt ∇θ + k_pp ∇φ)`,
/// storage `c_tt ∂θ/∂t` and `c_pp ∂φ/∂t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointCoefficients {
    pub k_tt: f64,
    pub k_tp: f64,
    pub k_pt: f64,
    pub k_pp: f64,
    pub c_tt: f64,
    pub c_pp: f64,
}

pub trait TransportCoefficients: Sync {
    fn evaluate(&self, theta: f64, phi: f64) -> Result<PointCoefficients, ConstitutiveError>;

    /// Coefficients over a step that starts at `theta_old`, with storage
    /// terms as difference quotients where the material has them.
    fn evaluate_over_step(&self, theta_old: f64, theta: f64, phi: f64) -> Result<PointCoefficients, ConstitutiveError> {
        let _ = theta_old;
        self.evaluate(theta, phi)
    }

    /// Saturation vapour pressure used by the surface vapour exchange.
    fn saturation_pressure(&self, theta: f64) -> Result<f64, ConstitutiveError> {
        constitutive::saturation_pressure(theta)
    }
}

/// Constant coefficients; the system is linear.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCoefficients(pub PointCoefficients);

impl TransportCoefficients for ConstantCoefficients {
    fn evaluate(&self, _theta: f64, _phi: f64) -> Result<PointCoefficients, ConstitutiveError> {
        Ok(self.0)
    }
}

/// Künzel material with optional ice formation.
#[derive(Debug, Clone)]
pub struct KunzelMaterial {
    pub params: TransportParams,
    pub ice: Option<IceModel>,
}

impl TransportCoefficients for KunzelMaterial {
    fn evaluate(&self, theta: f64, phi: f64) -> Result<PointCoefficients, ConstitutiveError> {
        let p = &self.params;
        let w = constitutive::water_content(phi, p)?;
        let lambda = constitutive::thermal_conductivity(w, p)?;
        let delta_v = constitutive::vapor_permeability(theta, p)?;
        let p_sat = constitutive::saturation_pressure(theta)?;
        let dp_sat = constitutive::saturation_pressure_slope(theta)?;
        let h_v = constitutive::latent_heat_vapor(theta)?;
        let d_phi = constitutive::liquid_conductivity(phi, p)?;
        let c_tt = match &self.ice {
            Some(ice) => constitutive::effective_heat_capacity(theta, phi, p, ice)?,
            None => constitutive::effective_heat_capacity(theta, phi, p, &constitutive::NoIce)?,
        };
        Ok(PointCoefficients {
            k_tt: lambda + h_v * delta_v * phi * dp_sat,
            k_tp: h_v * delta_v * p_sat,
            k_pt: delta_v * phi * dp_sat,
            k_pp: d_phi + delta_v * p_sat,
            c_tt,
            c_pp: constitutive::moisture_capacity(phi, p)?,
        })
    }

    fn evaluate_over_step(&self, theta_old: f64, theta: f64, phi: f64) -> Result<PointCoefficients, ConstitutiveError> {
        self.evaluate_chord(theta_old, theta, phi)
    }
}

impl KunzelMaterial {
    /// Like [`TransportCoefficients::evaluate`], with the latent heat of
    /// fusion as a chord over `[theta_old, theta]`.
    fn evaluate_chord(&self, theta_old: f64, theta: f64, phi: f64) -> Result<PointCoefficients, ConstitutiveError> {
        let mut c = self.evaluate(theta, phi)?;
        if let Some(ice) = &self.ice {
            c.c_tt = constitutive::chord_heat_capacity(theta_old, theta, phi, &self.params, ice)?;
        }
        Ok(c)
    }

    /// Ice content `(w_i, dw_i/dθ)` at a point, zero without an ice model.
    pub fn ice_content(&self, theta: f64, phi: f64) -> Result<(f64, f64), ConstitutiveError> {
        let w = constitutive::water_content(phi, &self.params)?;
        Ok(self.ice.as_ref().map_or((0.0, 0.0), |ice| ice.ice_content(theta, w)))
    }
}

/// Nodal fields at one instant; `rdot` is interleaved like the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportState {
    pub t: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub rdot: Vec<f64>,
}

impl TransportState {
    pub fn uniform(n_nodes: usize, theta: f64, phi: f64) -> Self {
        Self {
            t: 0.0,
            theta: vec![theta; n_nodes],
            phi: vec![phi; n_nodes],
            rdot: vec![0.0; 2 * n_nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.theta.len()
    }

    /// Interleaved unknown vector.
    pub fn packed(&self) -> Vec<f64> {
        self.theta.iter().zip(&self.phi).flat_map(|(&t, &p)| [t, p]).collect()
    }

    pub fn from_packed(t: f64, r: &[f64], rdot: Vec<f64>) -> Self {
        Self {
            t,
            theta: r.iter().step_by(2).copied().collect(),
            phi: r.iter().skip(1).step_by(2).copied().collect(),
            rdot,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_round_trips() {
        let s = TransportState {
            t: 1.0,
            theta: vec![1.0, 2.0],
            phi: vec![0.1, 0.2],
            rdot: vec![0.0; 4],
        };
        let r = s.packed();
        assert_eq!(r, vec![1.0, 0.1, 2.0, 0.2]);
        assert_eq!(TransportState::from_packed(1.0, &r, vec![0.0; 4]), s);
    }

    #[test]
    fn zero_vapor_permeability_decouples_blocks() {
        let material = KunzelMaterial { params: TransportParams { mu: 1e300, ..Default::default() }, ice: None };
        let c = material.evaluate(5.0, 0.6).unwrap();
        assert!(c.k_tp.abs() < 1e-300 && c.k_pt.abs() < 1e-300);
    }

    #[test]
    fn kunzel_blocks_follow_the_product_rule() {
        let material = KunzelMaterial { params: TransportParams::default(), ice: None };
        let (theta, phi) = (8.0, 0.7);
        let c = material.evaluate(theta, phi).unwrap();
        let dv = constitutive::vapor_permeability(theta, &material.params).unwrap();
        let h = 1e-5;
        let pv = |t: f64, f: f64| f * constitutive::saturation_pressure(t).unwrap();
        let dpv_dt = (pv(theta + h, phi) - pv(theta - h, phi)) / (2.0 * h);
        let dpv_df = (pv(theta, phi + h) - pv(theta, phi - h)) / (2.0 * h);
        assert!((c.k_pt - dv * dpv_dt).abs() < 1e-7 * c.k_pt);
        assert!((c.k_pp - constitutive::liquid_conductivity(phi, &material.params).unwrap() - dv * dpv_df).abs() < 1e-7 * c.k_pp);
    }
}
