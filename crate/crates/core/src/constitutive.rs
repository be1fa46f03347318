//! Künzel hygrothermal material functions: sorption isotherm, vapour and
//! liquid transport coefficients, thermal conductivity, latent heat and
//! the apparent heat capacity of a partially frozen porous solid.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Atmospheric pressure [Pa].
pub const P_ATM: f64 = 101_325.0;
/// Gas constant of water vapour [J kg^-1 K^-1].
pub const R_VAPOR: f64 = 461.5;
/// Universal gas constant as tabulated for the model [J kmol^-1 K^-1].
pub const R_UNIVERSAL: f64 = 8314.41;
/// Molar mass of water [kg kmol^-1].
pub const M_WATER: f64 = 18.01528;
/// 0 °C in kelvin.
pub const T_ZERO: f64 = 273.15;
/// Saturation pressure at 0 °C [Pa].
pub const P_SAT_ZERO: f64 = 611.0;

/// Validity window of the temperature-dependent correlations [°C].
pub const THETA_RANGE: (f64, f64) = (-40.0, 60.0);

const B_PHI_CAP: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstitutiveError {
    #[error("invalid material parameters: {0}")]
    InvalidParameters(String),
    #[error("{quantity} = {value} is outside the valid range [{min}, {max}]")]
    Domain {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
}

fn check_range(quantity: &'static str, value: f64, min: f64, max: f64) -> Result<(), ConstitutiveError> {
    if value >= min && value <= max {
        Ok(())
    } else {
        Err(ConstitutiveError::Domain { quantity, value, min, max })
    }
}

fn check_phi(phi: f64) -> Result<(), ConstitutiveError> {
    check_range("relative humidity", phi, 0.0, 1.0)
}

fn check_theta(theta: f64) -> Result<(), ConstitutiveError> {
    check_range("temperature", theta, THETA_RANGE.0, THETA_RANGE.1)
}

fn check_absolute(theta: f64) -> Result<(), ConstitutiveError> {
    if theta > -T_ZERO && theta.is_finite() {
        Ok(())
    } else {
        Err(ConstitutiveError::Domain {
            quantity: "temperature",
            value: theta,
            min: -T_ZERO,
            max: f64::INFINITY,
        })
    }
}

/// Form of the exponent in the capillary transport coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CapillaryExponent {
    /// `10^(3 w / (w_f - 1))`.
    #[default]
    Literal,
    /// `10^(3 (w / w_f - 1))`.
    Kunzel,
}

/// Measured transport properties; `build` derives the sorption factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportInputs {
    pub w_f: f64,
    pub w_80: f64,
    pub lambda_0: f64,
    pub b_tcs: f64,
    pub rho_s: f64,
    pub mu: f64,
    pub a_abs: f64,
    pub c_s: f64,
    pub c_l: f64,
    pub c_i: f64,
    pub h_i: f64,
    pub capillary_exponent_variant: CapillaryExponent,
}

impl Default for TransportInputs {
    fn default() -> Self {
        Self {
            w_f: 160.0,
            w_80: 23.0,
            lambda_0: 0.45,
            b_tcs: 9.0,
            rho_s: 1670.0,
            mu: 9.63,
            a_abs: 0.82,
            c_s: 1000.0,
            c_l: 4187.0,
            c_i: 2100.0,
            h_i: 3.34e5,
            capillary_exponent_variant: CapillaryExponent::Literal,
        }
    }
}

impl TransportInputs {
    pub fn build(&self) -> Result<TransportParams, ConstitutiveError> {
        let positive = [
            ("lambda_0", self.lambda_0),
            ("rho_s", self.rho_s),
            ("mu", self.mu),
            ("a_abs", self.a_abs),
            ("c_s", self.c_s),
            ("c_l", self.c_l),
            ("c_i", self.c_i),
            ("h_i", self.h_i),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConstitutiveError::InvalidParameters(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.b_tcs >= 0.0 && self.b_tcs.is_finite()) {
            return Err(ConstitutiveError::InvalidParameters(format!(
                "b_tcs must be non-negative, got {}",
                self.b_tcs
            )));
        }
        let b_phi = derive_b_phi(self.w_f, self.w_80)?;
        Ok(TransportParams {
            w_f: self.w_f,
            w_80: self.w_80,
            b_phi,
            lambda_0: self.lambda_0,
            b_tcs: self.b_tcs,
            rho_s: self.rho_s,
            mu: self.mu,
            a_abs: self.a_abs,
            c_s: self.c_s,
            c_l: self.c_l,
            c_i: self.c_i,
            h_i: self.h_i,
            capillary_exponent_variant: self.capillary_exponent_variant,
        })
    }
}

/// Validated transport properties.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportParams {
    pub w_f: f64,
    pub w_80: f64,
    pub b_phi: f64,
    pub lambda_0: f64,
    pub b_tcs: f64,
    pub rho_s: f64,
    pub mu: f64,
    pub a_abs: f64,
    pub c_s: f64,
    pub c_l: f64,
    pub c_i: f64,
    pub h_i: f64,
    pub capillary_exponent_variant: CapillaryExponent,
}

impl Default for TransportParams {
    fn default() -> Self {
        TransportInputs::default().build().expect("default material is valid")
    }
}

/// Sorption approximation factor from the free saturation and the water
/// content at 80 % relative humidity.
pub fn derive_b_phi(w_f: f64, w_80: f64) -> Result<f64, ConstitutiveError> {
    if !(w_80 > 0.0 && w_f > w_80 && w_f.is_finite()) {
        return Err(ConstitutiveError::InvalidParameters(format!(
            "need 0 < w_80 < w_f (w_80 = {w_80}, w_f = {w_f})"
        )));
    }
    let denom = 0.8 * w_f - w_80;
    if denom <= 0.0 {
        return Err(ConstitutiveError::InvalidParameters(format!(
            "w_80 = {w_80} must be below 0.8 w_f = {} for a convex isotherm",
            0.8 * w_f
        )));
    }
    let b = 0.8 * (w_f - w_80) / denom;
    if !(b > 1.0) || b > B_PHI_CAP {
        return Err(ConstitutiveError::InvalidParameters(format!(
            "approximation factor {b} outside (1, {B_PHI_CAP}]"
        )));
    }
    Ok(b)
}

pub fn water_content(phi: f64, p: &TransportParams) -> Result<f64, ConstitutiveError> {
    check_phi(phi)?;
    Ok(p.w_f * (p.b_phi - 1.0) * phi / (p.b_phi - phi))
}

/// Inverse of [`water_content`].
pub fn relative_humidity(w: f64, p: &TransportParams) -> Result<f64, ConstitutiveError> {
    check_range("water content", w, 0.0, p.w_f)?;
    Ok((w * p.b_phi / (p.w_f * (p.b_phi - 1.0) + w)).min(1.0))
}

/// dw/dφ.
pub fn moisture_capacity(phi: f64, p: &TransportParams) -> Result<f64, ConstitutiveError> {
    check_phi(phi)?;
    let d = p.b_phi - phi;
    Ok(p.w_f * (p.b_phi - 1.0) * p.b_phi / (d * d))
}

fn magnus(theta: f64) -> (f64, f64) {
    if theta < 0.0 {
        (22.44, 272.44)
    } else {
        (17.08, 234.18)
    }
}

pub fn saturation_pressure(theta: f64) -> Result<f64, ConstitutiveError> {
    check_theta(theta)?;
    let (a, t0) = magnus(theta);
    Ok(P_SAT_ZERO * (a * theta / (t0 + theta)).exp())
}

/// dp_sat/dθ on the branch containing `theta`.
pub fn saturation_pressure_slope(theta: f64) -> Result<f64, ConstitutiveError> {
    let p = saturation_pressure(theta)?;
    let (a, t0) = magnus(theta);
    Ok(p * a * t0 / ((t0 + theta) * (t0 + theta)))
}

/// Vapour diffusion coefficient of still air at atmospheric pressure.
pub fn vapor_diffusivity_air(theta: f64) -> Result<f64, ConstitutiveError> {
    check_absolute(theta)?;
    let t = theta + T_ZERO;
    Ok(2.306e-5 / (R_VAPOR * t) * (t / T_ZERO).powf(1.81))
}

pub fn vapor_permeability(theta: f64, p: &TransportParams) -> Result<f64, ConstitutiveError> {
    Ok(vapor_diffusivity_air(theta)? / p.mu)
}

/// Capillary transport coefficient D_l [m^2 s^-1] at water content `w`.
pub fn capillary_transport(w: f64, p: &TransportParams) -> f64 {
    let exponent = match p.capillary_exponent_variant {
        CapillaryExponent::Literal => 3.0 * w / (p.w_f - 1.0),
        CapillaryExponent::Kunzel => 3.0 * (w / p.w_f - 1.0),
    };
    let ratio = p.a_abs / p.w_f;
    3.8 * ratio * ratio * 10f64.powf(exponent)
}

/// D_φ = D_l dw/dφ.
pub fn liquid_conductivity(phi: f64, p: &TransportParams) -> Result<f64, ConstitutiveError> {
    let w = water_content(phi, p)?;
    Ok(capillary_transport(w, p) * moisture_capacity(phi, p)?)
}

pub fn thermal_conductivity(w: f64, p: &TransportParams) -> Result<f64, ConstitutiveError> {
    check_range("water content", w, 0.0, f64::INFINITY)?;
    Ok(p.lambda_0 * (1.0 + p.b_tcs * w / p.rho_s))
}

pub fn latent_heat_vapor(theta: f64) -> Result<f64, ConstitutiveError> {
    check_absolute(theta)?;
    let t = theta + T_ZERO;
    Ok(2.5008e6 * (T_ZERO / t).powf(0.167 + 3.67e-4 * t))
}

/// Source of ice content and its temperature derivative for the enthalpy.
pub trait IceContent {
    /// `(w_i, dw_i/dθ)` for total water content `w` at temperature `theta`.
    fn ice_content(&self, theta: f64, w: f64) -> (f64, f64);
}

/// Ice-free material: latent heat of fusion is ignored.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoIce;

impl IceContent for NoIce {
    fn ice_content(&self, _theta: f64, _w: f64) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// ∂H/∂θ including the latent heat released by freezing pore water.
pub fn effective_heat_capacity(
    theta: f64,
    phi: f64,
    p: &TransportParams,
    ice: &dyn IceContent,
) -> Result<f64, ConstitutiveError> {
    let w = water_content(phi, p)?;
    let (w_i, dw_i) = ice.ice_content(theta, w);
    Ok(p.rho_s * p.c_s + (w - w_i) * p.c_l + w_i * p.c_i - p.h_i * dw_i.min(0.0))
}

/// Capacity over the interval from `theta_old` to `theta`. The latent part
/// is the difference quotient of the ice content rather than its tangent,
/// so the heat released by freezing over a step is exact. Falls back to
/// [`effective_heat_capacity`] for intervals below 1e-3 K.
pub fn chord_heat_capacity(
    theta_old: f64,
    theta: f64,
    phi: f64,
    p: &TransportParams,
    ice: &dyn IceContent,
) -> Result<f64, ConstitutiveError> {
    if (theta - theta_old).abs() < 1e-3 {
        return effective_heat_capacity(theta, phi, p, ice);
    }
    let w = water_content(phi, p)?;
    let (w_i, _) = ice.ice_content(theta, w);
    let (w_i_old, _) = ice.ice_content(theta_old, w);
    let slope = ((w_i - w_i_old) / (theta - theta_old)).min(0.0);
    Ok(p.rho_s * p.c_s + (w - w_i) * p.c_l + w_i * p.c_i - p.h_i * slope)
}
