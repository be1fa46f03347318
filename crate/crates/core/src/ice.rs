//! Ice crystallization in a pore network described by its cumulative pore
//! size distribution: critical radius, wall pressure, averaged pore pressure
//! and the freezable share of the pore water.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{self, ConstitutiveError, IceContent, TransportParams};

/// Half-width of the temperature difference quotient for dw_i/dθ [K].
pub const ICE_SLOPE_STEP: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IceError {
    #[error("temperature {0} °C is not below freezing")]
    NotFreezing(f64),
    #[error("pore radius {radius} m is below the critical radius {critical} m")]
    BelowCritical { radius: f64, critical: f64 },
    #[error("invalid pore size distribution: {0}")]
    InvalidPsd(String),
    #[error("invalid ice parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IceParams {
    /// Liquid/ice surface tension [N m^-1].
    pub gamma_li: f64,
    /// Melting entropy per unit volume [Pa K^-1].
    pub delta_s_m: f64,
    /// Total porosity [-].
    pub n: f64,
    /// Reference liquid pressure [Pa], gauge.
    pub p_l: f64,
}

impl Default for IceParams {
    fn default() -> Self {
        Self { gamma_li: 0.0409, delta_s_m: 1.2e6, n: 0.35, p_l: 0.0 }
    }
}

impl IceParams {
    pub fn validate(&self) -> Result<(), IceError> {
        if !(self.gamma_li > 0.0 && self.gamma_li.is_finite()) {
            return Err(IceError::InvalidParameters(format!("gamma_li = {} must be positive", self.gamma_li)));
        }
        if !(self.delta_s_m > 0.0 && self.delta_s_m.is_finite()) {
            return Err(IceError::InvalidParameters(format!("delta_s_m = {} must be positive", self.delta_s_m)));
        }
        if !(self.n > 0.0 && self.n < 1.0) {
            return Err(IceError::InvalidParameters(format!("porosity {} must lie in (0, 1)", self.n)));
        }
        if !self.p_l.is_finite() {
            return Err(IceError::InvalidParameters("p_l must be finite".into()));
        }
        Ok(())
    }
}

/// Tabulated cumulative porosity: `psi[j]` is the volume fraction of pores
/// with radius above `radii[j]`. Interpolation is linear in `ln r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoreSizeDistribution {
    radii: Vec<f64>,
    psi: Vec<f64>,
}

impl PoreSizeDistribution {
    pub fn new(radii: Vec<f64>, psi: Vec<f64>) -> Result<Self, IceError> {
        if radii.len() != psi.len() {
            return Err(IceError::InvalidPsd(format!(
                "{} radii but {} porosity values",
                radii.len(),
                psi.len()
            )));
        }
        if radii.is_empty() {
            return Err(IceError::InvalidPsd("empty table".into()));
        }
        if !radii.iter().all(|r| *r > 0.0 && r.is_finite()) {
            return Err(IceError::InvalidPsd("radii must be positive and finite".into()));
        }
        if let Some(j) = radii.windows(2).position(|w| w[1] <= w[0]) {
            return Err(IceError::InvalidPsd(format!("radii not strictly increasing at row {}", j + 2)));
        }
        if !psi.iter().all(|p| p.is_finite()) {
            return Err(IceError::InvalidPsd("porosity values must be finite".into()));
        }
        if let Some(j) = psi.windows(2).position(|w| w[1] > w[0]) {
            return Err(IceError::InvalidPsd(format!("cumulative porosity increases at row {}", j + 2)));
        }
        if *psi.last().unwrap() < 0.0 {
            return Err(IceError::InvalidPsd("cumulative porosity is negative".into()));
        }
        if !(psi[0] > 0.0 && psi[0] < 1.0) {
            return Err(IceError::InvalidPsd(format!("total porosity {} outside (0, 1)", psi[0])));
        }
        Ok(Self { radii, psi })
    }

    /// Parses `radius_m,cum_porosity` CSV.
    pub fn from_csv(text: &str) -> Result<Self, IceError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| IceError::InvalidPsd(e.to_string()))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["radius_m", "cum_porosity"] {
            return Err(IceError::InvalidPsd(format!(
                "expected header `radius_m,cum_porosity`, found `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let (mut radii, mut psi) = (Vec::new(), Vec::new());
        for (i, record) in reader.records().enumerate() {
            let row = i + 2;
            let record = record.map_err(|e| IceError::InvalidPsd(format!("row {row}: {e}")))?;
            let field = |k: usize| -> Result<f64, IceError> {
                record
                    .get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| IceError::InvalidPsd(format!("row {row}: invalid number in column {}", k + 1)))
            };
            radii.push(field(0)?);
            psi.push(field(1)?);
        }
        Self::new(radii, psi)
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn psi(&self) -> &[f64] {
        &self.psi
    }

    /// ψ at the smallest tabulated radius.
    pub fn porosity(&self) -> f64 {
        self.psi[0]
    }

    /// ψ(r), held constant outside the table.
    pub fn cumulative(&self, r: f64) -> f64 {
        let n = self.radii.len();
        if r <= self.radii[0] {
            return self.psi[0];
        }
        if r >= self.radii[n - 1] {
            return self.psi[n - 1];
        }
        let j = self.radii.partition_point(|&x| x <= r) - 1;
        let (r0, r1) = (self.radii[j], self.radii[j + 1]);
        let t = (r / r0).ln() / (r1 / r0).ln();
        self.psi[j] + t * (self.psi[j + 1] - self.psi[j])
    }

    /// Same distribution with every bin split into `factor` log-uniform parts.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let mut radii = Vec::with_capacity((self.radii.len() - 1) * factor + 1);
        for w in self.radii.windows(2) {
            let ratio = w[1] / w[0];
            for k in 0..factor {
                radii.push(w[0] * ratio.powf(k as f64 / factor as f64));
            }
        }
        radii.push(*self.radii.last().unwrap());
        let psi = radii.iter().map(|&r| self.cumulative(r)).collect();
        Self { radii, psi }
    }
}

fn freezing(theta: f64) -> Result<(), IceError> {
    if theta < 0.0 {
        Ok(())
    } else {
        Err(IceError::NotFreezing(theta))
    }
}

/// Thickness of the unfreezable adsorbed film [m].
pub fn adsorbed_layer(theta: f64) -> Result<f64, IceError> {
    freezing(theta)?;
    Ok(1.97e-9 * (1.0 / theta.abs()).cbrt())
}

/// Radius of curvature of the ice/liquid interface [m].
pub fn interface_radius(theta: f64, p: &IceParams) -> Result<f64, IceError> {
    freezing(theta)?;
    Ok(2.0 * p.gamma_li / (p.delta_s_m * theta.abs()))
}

/// Smallest pore radius that can host ice; `+inf` at or above 0 °C.
pub fn critical_radius(theta: f64, p: &IceParams) -> f64 {
    if theta >= 0.0 {
        return f64::INFINITY;
    }
    1.97e-9 * (1.0 / theta.abs()).cbrt() + 2.0 * p.gamma_li / (p.delta_s_m * theta.abs())
}

/// Crystallization pressure on the wall of a frozen pore of radius `r`.
pub fn wall_pressure(r: f64, theta: f64, p: &IceParams) -> Result<f64, IceError> {
    let r_ar = adsorbed_layer(theta)?;
    let r_ir = interface_radius(theta, p)?;
    let r_cr = r_ar + r_ir;
    if r < r_cr * (1.0 - 1e-12) {
        return Err(IceError::BelowCritical { radius: r, critical: r_cr });
    }
    Ok(chi(r, r_ar, r_ir, p.gamma_li))
}

fn chi(r: f64, r_ar: f64, r_ir: f64, gamma: f64) -> f64 {
    gamma * (2.0 / r_ir - 1.0 / (r - r_ar).max(r_ir))
}

fn check_porosity(psd: &PoreSizeDistribution, p: &IceParams) -> Result<(), IceError> {
    if (psd.porosity() - p.n).abs() > 1e-6 {
        return Err(IceError::InvalidPsd(format!(
            "distribution porosity {} differs from material porosity {}",
            psd.porosity(),
            p.n
        )));
    }
    Ok(())
}

/// Pore pressure averaged over the frozen part of the pore space.
///
/// Each bin above the critical radius contributes `χ(r_mid) Δψ` with the
/// geometric bin midpoint; the bin holding `r_cr` is cut there. Porosity
/// left above the largest tabulated radius is charged at that radius.
pub fn average_pore_pressure(theta: f64, psd: &PoreSizeDistribution, p: &IceParams) -> Result<f64, IceError> {
    check_porosity(psd, p)?;
    Ok(pore_pressure_unchecked(theta, psd, p))
}

fn pore_pressure_unchecked(theta: f64, psd: &PoreSizeDistribution, p: &IceParams) -> f64 {
    if theta >= 0.0 {
        return p.p_l;
    }
    let t = theta.abs();
    let r_ar = 1.97e-9 * (1.0 / t).cbrt();
    let r_ir = 2.0 * p.gamma_li / (p.delta_s_m * t);
    let r_cr = r_ar + r_ir;

    let mut sum = 0.0;
    for j in 0..psd.radii.len() - 1 {
        let hi = psd.radii[j + 1];
        if hi <= r_cr {
            continue;
        }
        let (lo, psi_lo) = if psd.radii[j] < r_cr {
            (r_cr, psd.cumulative(r_cr))
        } else {
            (psd.radii[j], psd.psi[j])
        };
        let d_psi = psi_lo - psd.psi[j + 1];
        if d_psi > 0.0 {
            sum += chi((lo * hi).sqrt(), r_ar, r_ir, p.gamma_li) * d_psi;
        }
    }
    let last = *psd.radii.last().unwrap();
    let tail = *psd.psi.last().unwrap();
    if tail > 0.0 {
        sum += chi(last.max(r_cr), r_ar, r_ir, p.gamma_li) * tail;
    }
    p.p_l + sum / p.n
}

/// How the ice content entering the enthalpy is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IceContentModel {
    /// Water in pores wider than the critical radius is frozen.
    #[default]
    FreezableFraction,
    /// No ice; the latent heat of fusion is ignored.
    None,
}

/// Frozen share of the pore water, `ψ(r_cr)/n`.
fn frozen_fraction(theta: f64, psd: &PoreSizeDistribution, p: &IceParams) -> f64 {
    if theta >= 0.0 {
        0.0
    } else {
        (psd.cumulative(critical_radius(theta, p)) / p.n).clamp(0.0, 1.0)
    }
}

/// `(w_i, dw_i/dθ)` at temperature `theta` and relative humidity `phi`.
pub fn ice_content(
    theta: f64,
    phi: f64,
    psd: &PoreSizeDistribution,
    p: &IceParams,
    transport: &TransportParams,
) -> Result<(f64, f64), IceError> {
    check_porosity(psd, p)?;
    let w = constitutive::water_content(phi, transport)?;
    Ok(ice_content_of_water(theta, w, psd, p))
}

fn ice_content_of_water(theta: f64, w: f64, psd: &PoreSizeDistribution, p: &IceParams) -> (f64, f64) {
    let h = ICE_SLOPE_STEP;
    let w_i = w * frozen_fraction(theta, psd, p);
    let slope =
        w * (frozen_fraction(theta + h, psd, p) - frozen_fraction(theta - h, psd, p)) / (2.0 * h);
    (w_i, slope.min(0.0))
}

/// Validated ice description of a material.
#[derive(Debug, Clone)]
pub struct IceModel {
    params: IceParams,
    psd: PoreSizeDistribution,
    content: IceContentModel,
}

impl IceModel {
    pub fn new(params: IceParams, psd: PoreSizeDistribution, content: IceContentModel) -> Result<Self, IceError> {
        params.validate()?;
        check_porosity(&psd, &params)?;
        Ok(Self { params, psd, content })
    }

    pub fn params(&self) -> &IceParams {
        &self.params
    }

    pub fn psd(&self) -> &PoreSizeDistribution {
        &self.psd
    }

    pub fn pore_pressure(&self, theta: f64) -> f64 {
        pore_pressure_unchecked(theta, &self.psd, &self.params)
    }
}

impl IceContent for IceModel {
    fn ice_content(&self, theta: f64, w: f64) -> (f64, f64) {
        match self.content {
            IceContentModel::FreezableFraction => ice_content_of_water(theta, w, &self.psd, &self.params),
            IceContentModel::None => (0.0, 0.0),
        }
    }
}
