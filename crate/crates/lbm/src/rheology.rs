//! Power-law (Ostwald-de Waele) rheology: strain-rate reconstruction from
//! non-equilibrium moments and the shear-dependent viscosity closure.
//!
//! In BGK-LBM the strain-rate tensor is recoverable locally, without
//! finite differences, from the non-equilibrium second moment:
//!
//! ```text
//! E_ab = -(3 f / 2 rho) * sum_i e_ia e_ib (f_i - f_i^eq)
//! ```
//!
//! where f is the relaxation frequency. The apparent viscosity is then
//! mu = K * gamma^(n-1) with shear rate gamma = sqrt(2 E:E), floored and
//! clamped to keep the relaxation frequency inside a stable range.

use crate::error::{Error, Result};
use crate::field::{DistributionField, ScalarField, TensorField};
use crate::kernel::RelaxationParam;
use crate::lattice::LatticeD2Q9;

/// Relaxation-frequency clamp bounds shared by all power-law runs.
pub const FREQ_MIN: f64 = 0.05;
pub const FREQ_MAX: f64 = 1.95;

/// Default shear-rate floor; the power law is singular at zero shear for
/// n < 1 and its derivative vanishes for n > 1.
pub const SHEAR_FLOOR: f64 = 1e-12;

/// Power-law viscosity model mu = K * gamma^(n-1).
///
/// Viscosities are kinematic at the unit lattice reference density, so mu
/// and nu coincide numerically; this also makes the n = 1 case reduce
/// exactly to a constant-viscosity run with nu = K.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawModel {
    /// Consistency index K.
    pub consistency: f64,
    /// Flow behavior index n (n < 1 shear-thinning, n > 1 shear-thickening).
    pub behavior_index: f64,
    /// Shear rates below this are treated as this value.
    pub shear_floor: f64,
    /// Viscosity clamp, chosen so the relaxation frequency stays within
    /// [FREQ_MIN, FREQ_MAX].
    pub nu_min: f64,
    pub nu_max: f64,
}

impl PowerLawModel {
    pub fn new(consistency: f64, behavior_index: f64) -> Result<Self> {
        if !consistency.is_finite() || consistency <= 0.0 {
            return Err(Error::ParameterRange(format!(
                "consistency index must be positive, got {consistency}"
            )));
        }
        if !behavior_index.is_finite() || behavior_index <= 0.0 {
            return Err(Error::ParameterRange(format!(
                "behavior index must be positive, got {behavior_index}"
            )));
        }
        Ok(PowerLawModel {
            consistency,
            behavior_index,
            shear_floor: SHEAR_FLOOR,
            nu_min: (1.0 / FREQ_MAX - 0.5) / 3.0,
            nu_max: (1.0 / FREQ_MIN - 0.5) / 3.0,
        })
    }

    /// Apparent viscosity at a given shear rate (already floored).
    #[inline(always)]
    pub fn viscosity_at(&self, shear_rate: f64) -> f64 {
        let gamma = shear_rate.max(self.shear_floor);
        let mu = self.consistency * pow_pos(gamma, self.behavior_index - 1.0);
        mu.clamp(self.nu_min, self.nu_max)
    }

    /// Relaxation frequency for the local shear rate, clamped to
    /// [FREQ_MIN, FREQ_MAX].
    #[inline(always)]
    pub fn freq_at(&self, shear_rate: f64) -> f64 {
        freq_from_viscosity_clamped(self.viscosity_at(shear_rate))
    }
}

/// 1/(3 nu + 1/2), clamped to the stable frequency window.
#[inline(always)]
pub(crate) fn freq_from_viscosity_clamped(nu: f64) -> f64 {
    (1.0 / (3.0 * nu + 0.5)).clamp(FREQ_MIN, FREQ_MAX)
}

/// x^p for x > 0 with exact fast paths for the exponents that appear in
/// common behavior indices (n = 1, 1.25, 1.5, 0.5). The general path is
/// `powf`; the dyadic paths are sqrt chains, which cost a few ns instead
/// of tens and differ from powf by at most an ulp.
#[inline(always)]
fn pow_pos(x: f64, p: f64) -> f64 {
    if p == 0.0 {
        1.0
    } else if p == 0.5 {
        x.sqrt()
    } else if p == 0.25 {
        x.sqrt().sqrt()
    } else if p == -0.5 {
        1.0 / x.sqrt()
    } else {
        x.powf(p)
    }
}

/// Per-node non-equilibrium second moments (pxx, pyy, pxy) from the nine
/// population differences. Shared by the standalone op and the fused
/// stepper so both produce identical bits.
#[inline(always)]
pub(crate) fn noneq_moments(fneq: &[f64; 9]) -> (f64, f64, f64) {
    // Directions with e_x != 0: 1, 3, 5, 6, 7, 8; e_y != 0: 2, 4, 5, 6, 7, 8.
    let pxx = fneq[1] + fneq[3] + fneq[5] + fneq[6] + fneq[7] + fneq[8];
    let pyy = fneq[2] + fneq[4] + fneq[5] + fneq[6] + fneq[7] + fneq[8];
    // e_x * e_y: +1 for (1,1) and (-1,-1), -1 for (-1,1) and (1,-1).
    let pxy = fneq[5] - fneq[6] + fneq[7] - fneq[8];
    (pxx, pyy, pxy)
}

/// Strain-rate tensor from non-equilibrium moments with a uniform
/// relaxation frequency: E_ab = -(3 f / 2 rho) sum_i e_ia e_ib f_i^neq.
pub fn strain_rate_noneq(
    f: &DistributionField,
    feq: &DistributionField,
    rho: &ScalarField,
    freq: RelaxationParam,
    lat: &LatticeD2Q9,
) -> Result<TensorField> {
    let field = ScalarField::constant(rho.nx(), rho.ny(), freq.freq_val);
    strain_rate_noneq_field(f, feq, rho, &field, lat)
}

/// Strain-rate tensor with a per-node relaxation frequency field.
pub fn strain_rate_noneq_field(
    f: &DistributionField,
    feq: &DistributionField,
    rho: &ScalarField,
    freq: &ScalarField,
    lat: &LatticeD2Q9,
) -> Result<TensorField> {
    let _ = lat;
    if !f.same_shape(feq) {
        return Err(Error::ShapeMismatch("strain_rate_noneq: f vs feq".into()));
    }
    if f.nx() != rho.nx() || f.ny() != rho.ny() || f.nx() != freq.nx() || f.ny() != freq.ny() {
        return Err(Error::ShapeMismatch(
            "strain_rate_noneq: field shapes disagree".into(),
        ));
    }
    let nx = f.nx();
    let mut e = TensorField::new(f.nx(), f.ny());
    let fp = f.planes();
    let qp = feq.planes();
    let rho_d = rho.data();
    let freq_d = freq.data();
    for y in 0..f.ny() {
        for x in 0..nx {
            let j = y * nx + x;
            let r = rho_d[j];
            if !(r > 0.0) {
                return Err(Error::NonPositiveDensity { x, y, value: r });
            }
            let fneq: [f64; 9] = std::array::from_fn(|i| fp[i][j] - qp[i][j]);
            let (pxx, pyy, pxy) = noneq_moments(&fneq);
            let c = -1.5 * freq_d[j] / r;
            e.set(x, y, c * pxx, c * pyy, c * pxy);
        }
    }
    Ok(e)
}

/// Apparent kinematic viscosity field from the strain-rate tensor:
/// gamma = max(sqrt(2 E:E), floor), nu = clamp(K gamma^(n-1)).
pub fn powerlaw_viscosity(e: &TensorField, model: &PowerLawModel) -> ScalarField {
    let mut nu = ScalarField::new(e.nx(), e.ny());
    let xx = e.xx_plane();
    let yy = e.yy_plane();
    let xy = e.xy_plane();
    let out = nu.data_mut();
    for j in 0..out.len() {
        let ee = xx[j] * xx[j] + yy[j] * yy[j] + 2.0 * xy[j] * xy[j];
        let gamma = (2.0 * ee).sqrt();
        out[j] = model.viscosity_at(gamma);
    }
    nu
}
