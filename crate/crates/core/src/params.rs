//! Physical constants, derived dimensionless groups and time scaling.
//!
//! Physical values are SI unless a field says otherwise. Defaults are the
//! tabulated tear-film values (viscosity of tears, surface tension, initial
//! film thickness of 4.5 µm, peak thinning rate of 10 µm/min, ...).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Molar mass of sodium fluorescein in g/mol, used to turn the critical
/// fluorescein mass fraction into a molar concentration.
pub const FLUORESCEIN_MOLAR_MASS: f64 = 376.27;

/// Dimensional model constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParams {
    /// Viscosity, Pa·s.
    pub mu: f64,
    /// Surface tension, N/m.
    pub sigma0: f64,
    /// Density, kg/m³.
    pub rho: f64,
    /// Initial film thickness, m.
    pub d: f64,
    /// Peak thinning rate, m/s.
    pub v_max: f64,
    /// Background thinning rate, m/s.
    pub v_min: f64,
    /// Molar volume of water, m³/mol.
    pub v_w: f64,
    /// Fluorescein diffusivity, m²/s.
    pub d_f: f64,
    /// Salt diffusivity, m²/s.
    pub d_o: f64,
    /// Isotonic osmolarity, mol/m³.
    pub c0: f64,
    /// Corneal permeability, m/s.
    pub p0: f64,
    /// Napierian extinction coefficient, 1/(M·m).
    pub eps_f: f64,
    /// Critical fluorescein concentration as a mass fraction.
    pub f_cr: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        let v_max = 10e-6 / 60.0;
        Self {
            mu: 1.3e-3,
            sigma0: 0.045,
            rho: 1e3,
            d: 4.5e-6,
            v_max,
            // Not tabulated; chosen so that v_min / v_max = 0.07.
            v_min: 0.07 * v_max,
            v_w: 1.8e-5,
            d_f: 0.39e-9,
            d_o: 1.6e-9,
            c0: 300.0,
            p0: 12.1e-6,
            eps_f: 1.75e7,
            f_cr: 0.002,
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu", self.mu),
            ("sigma0", self.sigma0),
            ("rho", self.rho),
            ("d", self.d),
            ("v_max", self.v_max),
            ("v_min", self.v_min),
            ("v_w", self.v_w),
            ("d_f", self.d_f),
            ("d_o", self.d_o),
            ("c0", self.c0),
            ("p0", self.p0),
            ("eps_f", self.eps_f),
            ("f_cr", self.f_cr),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(domain(
                    name,
                    format!("must be finite and positive, got {value}"),
                ));
            }
        }
        if self.v_min >= self.v_max {
            return Err(domain("v_min", "must be smaller than v_max"));
        }
        Ok(())
    }

    /// Transverse length scale ℓ = (σ0/μ/v_max)^{1/4} d.
    pub fn length_scale(&self) -> f64 {
        (self.sigma0 / self.mu / self.v_max).powf(0.25) * self.d
    }

    /// Critical fluorescein concentration in mol/L.
    pub fn f_cr_molar(&self) -> f64 {
        // mass fraction × density (kg/m³ == g/L) / molar mass
        self.f_cr * self.rho / FLUORESCEIN_MOLAR_MASS
    }

    /// Reads parameters from a TOML key/value file. Missing keys keep their
    /// defaults, unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let params: PhysicalParams =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

/// Dimensionless groups of the lubrication model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NondimParams {
    /// Aspect ratio d/ℓ.
    pub eps: f64,
    /// Transverse length scale in metres.
    pub ell: f64,
    /// Corneal permeability group.
    pub pc: f64,
    /// Osmolarity Péclet number.
    pub pe_c: f64,
    /// Fluorescein Péclet number.
    pub pe_f: f64,
    /// Nondimensional Napierian extinction coefficient.
    pub phi: f64,
    /// Time scale d/v_max in seconds.
    pub t_scale: f64,
    /// Background evaporation ratio v_min/v_max.
    pub v_b: f64,
}

impl Default for NondimParams {
    fn default() -> Self {
        derive_nondim(&PhysicalParams::default()).expect("default parameters are valid")
    }
}

impl NondimParams {
    /// Same groups with the osmotic permeability replaced.
    pub fn with_pc(mut self, pc: f64) -> Self {
        self.pc = pc;
        self
    }
}

pub fn derive_nondim(params: &PhysicalParams) -> Result<NondimParams> {
    params.validate()?;
    let ell = params.length_scale();
    let eps = params.d / ell;
    let pc = params.p0 * params.v_w * params.c0 / params.v_max;
    let pe_f = params.v_max * ell / (eps * params.d_f);
    let pe_c = params.v_max * ell / (eps * params.d_o);
    let phi = params.eps_f * params.f_cr_molar() * params.d;
    Ok(NondimParams {
        eps,
        ell,
        pc,
        pe_c,
        pe_f,
        phi,
        t_scale: params.d / params.v_max,
        v_b: params.v_min / params.v_max,
    })
}

/// Converts an elapsed time in seconds to model time.
pub fn nondim_time(seconds: f64, nd: &NondimParams) -> f64 {
    seconds / nd.t_scale
}
