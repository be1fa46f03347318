use serde::{Deserialize, Serialize};

use super::MechanicsError;

/// Mechanical properties of the skeleton.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MechParams {
    /// Young's modulus [Pa].
    pub e: f64,
    pub nu: f64,
    /// Tensile strength [Pa].
    pub f_t: f64,
    /// Equivalent strain at complete loss of stiffness.
    pub eps_f: f64,
    /// Internal length of the nonlocal average [m].
    pub l_intl: f64,
    /// Linear thermal expansion [K^-1].
    pub alpha: f64,
}

impl Default for MechParams {
    fn default() -> Self {
        Self { e: 1e10, nu: 0.2, f_t: 2.5e6, eps_f: 2.5e-3, l_intl: 1e-3, alpha: 1.2e-5 }
    }
}

impl MechParams {
    /// Equivalent strain at the elastic limit, `f_t / E`.
    pub fn eps_0(&self) -> f64 {
        self.f_t / self.e
    }

    pub fn validate(&self) -> Result<(), MechanicsError> {
        let fail = |m: String| Err(MechanicsError::InvalidParameters(m));
        if !(self.e > 0.0 && self.e.is_finite()) {
            return fail(format!("Young's modulus {} must be positive", self.e));
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return fail(format!("Poisson's ratio {} must lie in (0, 0.5)", self.nu));
        }
        if !(self.f_t > 0.0) {
            return fail(format!("tensile strength {} must be positive", self.f_t));
        }
        if !(self.eps_f > self.eps_0()) {
            return fail(format!(
                "eps_f = {} must exceed the elastic limit f_t/E = {}",
                self.eps_f,
                self.eps_0()
            ));
        }
        if !(self.l_intl > 0.0 && self.l_intl.is_finite()) {
            return fail(format!("internal length {} must be positive", self.l_intl));
        }
        if !self.alpha.is_finite() {
            return fail("thermal expansion must be finite".into());
        }
        Ok(())
    }
}

/// Biot coefficient of a porous skeleton with porosity `n`.
pub fn biot_coefficient(n: f64) -> Result<f64, MechanicsError> {
    if !(0.0..=1.0).contains(&n) {
        return Err(MechanicsError::InvalidParameters(format!("porosity {n} outside [0, 1]")));
    }
    Ok(2.0 * n / (n + 1.0))
}

/// Plane-strain isotropic stiffness in Voigt form `[xx, yy, xy(engineering)]`.
pub fn elastic_stiffness(e: f64, nu: f64) -> [[f64; 3]; 3] {
    let f = e / ((1.0 + nu) * (1.0 - 2.0 * nu));
    [
        [f * (1.0 - nu), f * nu, 0.0],
        [f * nu, f * (1.0 - nu), 0.0],
        [0.0, 0.0, f * (1.0 - 2.0 * nu) / 2.0],
    ]
}

/// Mazars equivalent strain from the positive principal strains of the
/// in-plane tensor `[ε_xx, ε_yy, γ_xy]`; the out-of-plane strain is zero.
pub fn mazars_equivalent_strain(strain: [f64; 3]) -> f64 {
    let [exx, eyy, gxy] = strain;
    let mean = 0.5 * (exx + eyy);
    let radius = (0.25 * (exx - eyy) * (exx - eyy) + 0.25 * gxy * gxy).sqrt();
    let pos = |x: f64| x.max(0.0);
    let (e1, e2) = (pos(mean + radius), pos(mean - radius));
    (e1 * e1 + e2 * e2).sqrt()
}

/// Damage as a function of the history variable: zero up to the elastic
/// limit, linear up to `eps_f`, complete beyond.
pub fn damage_function(kappa: f64, p: &MechParams) -> f64 {
    let eps_0 = p.eps_0();
    if kappa <= eps_0 {
        0.0
    } else if kappa >= p.eps_f {
        1.0
    } else {
        (kappa - eps_0) / (p.eps_f - eps_0)
    }
}
