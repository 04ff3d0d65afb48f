//! BGK kernels: relaxation parameters, equilibria, collision, reaction
//! sources, streaming, and moment evaluation.
//!
//! The scalar (advection-diffusion) equilibrium is linear in the advecting
//! velocity; the fluid equilibrium is the standard second-order form. Both
//! expose tiny `#[inline(always)]` per-node helpers that the fused time
//! steppers in [`crate::sim`] reuse, so a composed pipeline of these
//! operations and a fused step produce bit-identical states.

use crate::error::{Error, Result};
use crate::field::{DistributionField, ScalarField, VectorField};
use crate::lattice::{LatticeD2Q9, Q, VELOCITIES};

/// Reciprocal of the BGK relaxation time, in 1/step.
///
/// The inner identifier is `freq_val` rather than the conventional Greek
/// letter name: generated code in this project is subject to a rename rule
/// mapping that identifier, and the library conducts itself by its own
/// guidelines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParam {
    pub freq_val: f64,
}

impl RelaxationParam {
    /// A valid relaxation frequency lies strictly inside (0, 2).
    pub fn new(freq_val: f64) -> Result<Self> {
        if !freq_val.is_finite() || freq_val <= 0.0 || freq_val >= 2.0 {
            return Err(Error::ParameterRange(format!(
                "relaxation frequency must lie in (0, 2), got {freq_val}"
            )));
        }
        Ok(RelaxationParam { freq_val })
    }
}

/// Relaxation frequency for a target diffusivity: D = c_s^2 (1/f - 1/2)
/// with c_s^2 = 1/3 and dx = dt = 1, inverted to f = 1 / (3 D + 1/2).
pub fn omega_from_diffusivity(diffusivity: f64) -> Result<RelaxationParam> {
    if !diffusivity.is_finite() || diffusivity <= 0.0 {
        return Err(Error::ParameterRange(format!(
            "diffusivity must be positive and finite, got {diffusivity}"
        )));
    }
    RelaxationParam::new(1.0 / (3.0 * diffusivity + 0.5))
}

/// Same kinematic relation for a fluid viscosity.
pub fn omega_from_viscosity(viscosity: f64) -> Result<RelaxationParam> {
    omega_from_diffusivity(viscosity)
}

/// Inverse of [`omega_from_diffusivity`].
pub fn diffusivity_from_omega(freq_val: f64) -> f64 {
    (1.0 / freq_val - 0.5) / 3.0
}

/// Reaction source R(phi) added to the scalar transport equation.
#[derive(Debug, Clone, PartialEq)]
pub enum ReactionTerm {
    None,
    /// Logistic growth r * phi * (1 - phi).
    Logistic { rate: f64 },
    /// Piecewise-linear R(phi) through sorted (phi, R) samples, clamped to
    /// the end values outside the sampled range.
    Tabulated { samples: Vec<(f64, f64)> },
}

impl ReactionTerm {
    pub fn logistic(rate: f64) -> Result<Self> {
        if !rate.is_finite() {
            return Err(Error::ParameterRange(format!(
                "logistic rate must be finite, got {rate}"
            )));
        }
        Ok(ReactionTerm::Logistic { rate })
    }

    pub fn tabulated(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::ParameterRange(
                "tabulated reaction needs at least two samples".into(),
            ));
        }
        if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::ParameterRange(
                "tabulated reaction samples must have strictly increasing phi".into(),
            ));
        }
        if samples.iter().any(|(p, r)| !p.is_finite() || !r.is_finite()) {
            return Err(Error::ParameterRange(
                "tabulated reaction samples must be finite".into(),
            ));
        }
        Ok(ReactionTerm::Tabulated { samples })
    }

    pub fn is_none(&self) -> bool {
        matches!(self, ReactionTerm::None)
    }

    #[inline(always)]
    pub fn eval(&self, phi: f64) -> f64 {
        match self {
            ReactionTerm::None => 0.0,
            ReactionTerm::Logistic { rate } => rate * phi * (1.0 - phi),
            ReactionTerm::Tabulated { samples } => {
                let first = samples[0];
                let last = samples[samples.len() - 1];
                if phi <= first.0 {
                    return first.1;
                }
                if phi >= last.0 {
                    return last.1;
                }
                let k = samples.partition_point(|(p, _)| *p <= phi);
                let (p0, r0) = samples[k - 1];
                let (p1, r1) = samples[k];
                r0 + (r1 - r0) * (phi - p0) / (p1 - p0)
            }
        }
    }
}

/// Linear scalar equilibrium for one direction: w * phi * (1 + 3 e.u).
#[inline(always)]
pub(crate) fn scalar_eq_dir(w: f64, eu: f64, phi: f64) -> f64 {
    w * phi * (1.0 + 3.0 * eu)
}

/// Second-order fluid equilibrium for one direction:
/// w * rho * (1 + 3 e.u + 4.5 (e.u)^2 - 1.5 u.u).
#[inline(always)]
pub(crate) fn fluid_eq_dir(w: f64, eu: f64, uu: f64, rho: f64) -> f64 {
    w * rho * (1.0 + 3.0 * eu + 4.5 * eu * eu - 1.5 * uu)
}

/// BGK relaxation of one population toward its equilibrium.
#[inline(always)]
pub(crate) fn bgk_dir(f: f64, feq: f64, freq_val: f64) -> f64 {
    f - freq_val * (f - feq)
}

fn check_same_grid(nx: usize, ny: usize, onx: usize, ony: usize, what: &str) -> Result<()> {
    if nx != onx || ny != ony {
        return Err(Error::ShapeMismatch(format!(
            "{what}: {nx}x{ny} vs {onx}x{ony}"
        )));
    }
    Ok(())
}

/// Equilibrium distribution for scalar transport. The zeroth moment of the
/// result equals phi at every node.
pub fn equilibrium_scalar(
    phi: &ScalarField,
    u: &VectorField,
    lat: &LatticeD2Q9,
) -> Result<DistributionField> {
    check_same_grid(phi.nx(), phi.ny(), u.nx(), u.ny(), "equilibrium_scalar")?;
    let mut f = DistributionField::new(phi.nx(), phi.ny());
    let n = f.plane_len();
    let phi_d = phi.data();
    let ux = u.x_plane();
    let uy = u.y_plane();
    let planes = f.planes_mut();
    for i in 0..Q {
        let w = lat.weights[i];
        let ex = lat.velocities[i][0] as f64;
        let ey = lat.velocities[i][1] as f64;
        let plane = &mut *planes[i];
        for j in 0..n {
            let eu = ex * ux[j] + ey * uy[j];
            plane[j] = scalar_eq_dir(w, eu, phi_d[j]);
        }
    }
    Ok(f)
}

/// Equilibrium distribution for weakly compressible flow. Moments
/// reproduce (rho, rho u) to round-off.
pub fn equilibrium_fluid(
    rho: &ScalarField,
    u: &VectorField,
    lat: &LatticeD2Q9,
) -> Result<DistributionField> {
    check_same_grid(rho.nx(), rho.ny(), u.nx(), u.ny(), "equilibrium_fluid")?;
    let nx = rho.nx();
    for (j, &r) in rho.data().iter().enumerate() {
        if !(r > 0.0) {
            return Err(Error::NonPositiveDensity {
                x: j % nx,
                y: j / nx,
                value: r,
            });
        }
    }
    let mut f = DistributionField::new(rho.nx(), rho.ny());
    let n = f.plane_len();
    let rho_d = rho.data();
    let ux = u.x_plane();
    let uy = u.y_plane();
    let planes = f.planes_mut();
    for i in 0..Q {
        let w = lat.weights[i];
        let ex = lat.velocities[i][0] as f64;
        let ey = lat.velocities[i][1] as f64;
        let plane = &mut *planes[i];
        for j in 0..n {
            let eu = ex * ux[j] + ey * uy[j];
            let uu = ux[j] * ux[j] + uy[j] * uy[j];
            plane[j] = fluid_eq_dir(w, eu, uu, rho_d[j]);
        }
    }
    Ok(f)
}

/// BGK collision with a uniform relaxation frequency:
/// f' = f - freq (f - feq).
pub fn collide_bgk(
    f: &DistributionField,
    feq: &DistributionField,
    freq: RelaxationParam,
) -> Result<DistributionField> {
    if !f.same_shape(feq) {
        return Err(Error::ShapeMismatch("collide_bgk: f vs feq".into()));
    }
    RelaxationParam::new(freq.freq_val)?;
    let mut out = f.clone();
    let w = freq.freq_val;
    for (o, e) in out.data_mut().iter_mut().zip(feq.data()) {
        *o = bgk_dir(*o, *e, w);
    }
    Ok(out)
}

/// BGK collision with a per-node relaxation frequency field (power-law
/// rheology). Every frequency must lie in (0, 2).
pub fn collide_bgk_field(
    f: &DistributionField,
    feq: &DistributionField,
    freq: &ScalarField,
) -> Result<DistributionField> {
    if !f.same_shape(feq) {
        return Err(Error::ShapeMismatch("collide_bgk_field: f vs feq".into()));
    }
    check_same_grid(f.nx(), f.ny(), freq.nx(), freq.ny(), "collide_bgk_field")?;
    for &w in freq.data() {
        if !w.is_finite() || w <= 0.0 || w >= 2.0 {
            return Err(Error::ParameterRange(format!(
                "per-node relaxation frequency must lie in (0, 2), got {w}"
            )));
        }
    }
    let mut out = f.clone();
    let n = f.plane_len();
    let freq_d = freq.data();
    for i in 0..Q {
        let plane = out.plane_mut(i);
        let eq = feq.plane(i);
        for j in 0..n {
            plane[j] = bgk_dir(plane[j], eq[j], freq_d[j]);
        }
    }
    Ok(out)
}

/// Adds the weighted reaction source: f_i += w_i R(phi), dt = 1. The
/// zeroth moment gains exactly R(phi) per node (the weights sum to one).
pub fn apply_reaction_source(
    f: &DistributionField,
    phi: &ScalarField,
    reaction: &ReactionTerm,
    lat: &LatticeD2Q9,
) -> Result<DistributionField> {
    check_same_grid(f.nx(), f.ny(), phi.nx(), phi.ny(), "apply_reaction_source")?;
    let mut out = f.clone();
    if reaction.is_none() {
        return Ok(out);
    }
    let nx = f.nx();
    let n = f.plane_len();
    let mut source = vec![0.0; n];
    for (j, (&p, s)) in phi.data().iter().zip(source.iter_mut()).enumerate() {
        let r = reaction.eval(p);
        if !r.is_finite() {
            return Err(Error::NonFiniteReaction {
                x: j % nx,
                y: j / nx,
                phi: p,
            });
        }
        *s = r;
    }
    for i in 0..Q {
        let w = lat.weights[i];
        let plane = out.plane_mut(i);
        for j in 0..n {
            plane[j] += w * source[j];
        }
    }
    Ok(out)
}

/// Periodic streaming: f_i(x + e_i) <- f_i(x). A pure permutation of each
/// population plane, so per-direction totals are conserved exactly.
pub fn stream(f: &DistributionField) -> DistributionField {
    let mut out = DistributionField::new(f.nx(), f.ny());
    stream_into(f, &mut out);
    out
}

/// Streaming into a preallocated destination (used by the fused steppers).
pub(crate) fn stream_into(src: &DistributionField, dst: &mut DistributionField) {
    assert!(src.same_shape(dst), "stream_into: shape mismatch");
    let nx = src.nx();
    let ny = src.ny();
    for i in 0..Q {
        let ex = VELOCITIES[i][0];
        let ey = VELOCITIES[i][1];
        let sp = src.plane(i);
        let dp = dst.plane_mut(i);
        for y in 0..ny {
            // Row y receives the source row y - ey (periodic wrap).
            let ys = (y as isize - ey as isize).rem_euclid(ny as isize) as usize;
            let srow = &sp[ys * nx..(ys + 1) * nx];
            let drow = &mut dp[y * nx..(y + 1) * nx];
            match ex {
                0 => drow.copy_from_slice(srow),
                1 => {
                    drow[1..].copy_from_slice(&srow[..nx - 1]);
                    drow[0] = srow[nx - 1];
                }
                -1 => {
                    drow[..nx - 1].copy_from_slice(&srow[1..]);
                    drow[nx - 1] = srow[0];
                }
                _ => unreachable!("D2Q9 velocities are in {{-1, 0, 1}}"),
            }
        }
    }
}

/// Zeroth moment of a scalar distribution: phi = sum_i f_i.
pub fn moments_scalar(f: &DistributionField) -> ScalarField {
    let mut phi = ScalarField::new(f.nx(), f.ny());
    let planes = f.planes();
    let out = phi.data_mut();
    for j in 0..out.len() {
        // Fixed summation order over directions keeps results deterministic.
        let mut s = 0.0;
        for p in &planes {
            s += p[j];
        }
        out[j] = s;
    }
    phi
}

/// Density and momentum moments: rho = sum_i f_i, u = sum_i f_i e_i / rho.
pub fn moments_fluid(f: &DistributionField) -> Result<(ScalarField, VectorField)> {
    let mut rho = ScalarField::new(f.nx(), f.ny());
    let mut u = VectorField::new(f.nx(), f.ny());
    let nx = f.nx();
    let p = f.planes();
    let n = f.plane_len();
    let rho_d = rho.data_mut();
    let (ux, uy) = u.planes_mut();
    for j in 0..n {
        let f0 = p[0][j];
        let f1 = p[1][j];
        let f2 = p[2][j];
        let f3 = p[3][j];
        let f4 = p[4][j];
        let f5 = p[5][j];
        let f6 = p[6][j];
        let f7 = p[7][j];
        let f8 = p[8][j];
        let r = f0 + f1 + f2 + f3 + f4 + f5 + f6 + f7 + f8;
        if !(r > 0.0) {
            return Err(Error::NonPositiveDensity {
                x: j % nx,
                y: j / nx,
                value: r,
            });
        }
        rho_d[j] = r;
        ux[j] = (f1 + f5 + f8 - f3 - f6 - f7) / r;
        uy[j] = (f2 + f5 + f6 - f4 - f7 - f8) / r;
    }
    Ok((rho, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::OPPOSITE;
    use approx::assert_abs_diff_eq;

    fn lat() -> LatticeD2Q9 {
        LatticeD2Q9::standard()
    }

    #[test]
    fn omega_frozen_values() {
        // Independently evaluated from f = 1/(3D + 1/2).
        assert_abs_diff_eq!(
            omega_from_diffusivity(1.0 / 6.0).unwrap().freq_val,
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            omega_from_diffusivity(0.01).unwrap().freq_val,
            1.8867924528301887,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            omega_from_diffusivity(1.0).unwrap().freq_val,
            0.2857142857142857,
            epsilon = 1e-15
        );
    }

    #[test]
    fn omega_rejects_bad_diffusivity() {
        assert!(omega_from_diffusivity(0.0).is_err());
        assert!(omega_from_diffusivity(-0.3).is_err());
        assert!(omega_from_diffusivity(f64::NAN).is_err());
        assert!(RelaxationParam::new(2.0).is_err());
        assert!(RelaxationParam::new(0.0).is_err());
    }

    #[test]
    fn omega_diffusivity_round_trip() {
        for d in [0.01, 0.1, 1.0, 3.0] {
            let f = omega_from_diffusivity(d).unwrap().freq_val;
            assert_abs_diff_eq!(diffusivity_from_omega(f), d, epsilon = 1e-14);
        }
    }

    #[test]
    fn scalar_equilibrium_rest_and_moving() {
        let phi = ScalarField::constant(4, 4, 1.0);
        let u0 = VectorField::new(4, 4);
        let f = equilibrium_scalar(&phi, &u0, &lat()).unwrap();
        assert_abs_diff_eq!(f.get(1, 1, 0), 4.0 / 9.0, epsilon = 1e-16);

        // phi = 1, u = (0.1, 0), direction (1, 0): (1/9)(1 + 0.3).
        let u = VectorField::constant(4, 4, 0.1, 0.0);
        let f = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        assert_abs_diff_eq!(f.get(2, 2, 1), 0.14444444444444446, epsilon = 1e-15);
    }

    #[test]
    fn scalar_equilibrium_zeroth_moment_is_phi() {
        let phi = ScalarField::from_fn(5, 3, |x, y| 0.1 + 0.05 * (x + 2 * y) as f64);
        let u = VectorField::constant(5, 3, 0.13, -0.07);
        let f = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let back = moments_scalar(&f);
        assert!(back.max_abs_diff(&phi) < 1e-15);
    }

    #[test]
    fn fluid_equilibrium_frozen_value_and_moments() {
        let rho = ScalarField::constant(4, 4, 1.0);
        let u = VectorField::constant(4, 4, 0.1, 0.0);
        let f = equilibrium_fluid(&rho, &u, &lat()).unwrap();
        // (1/9)(1 + 0.3 + 0.045 - 0.015).
        assert_abs_diff_eq!(f.get(0, 0, 1), 0.14777777777777779, epsilon = 1e-15);

        let (r, v) = moments_fluid(&f).unwrap();
        assert!(r.max_abs_diff(&rho) < 1e-14);
        let (ux, uy) = v.get(2, 1);
        assert_abs_diff_eq!(ux, 0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(uy, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn fluid_equilibrium_rejects_nonpositive_density() {
        let mut rho = ScalarField::constant(4, 4, 1.0);
        rho.set(2, 3, 0.0);
        let u = VectorField::new(4, 4);
        match equilibrium_fluid(&rho, &u, &lat()) {
            Err(Error::NonPositiveDensity { x: 2, y: 3, .. }) => {}
            other => panic!("expected density error, got {other:?}"),
        }
    }

    #[test]
    fn collide_interpolates_toward_equilibrium() {
        let phi = ScalarField::constant(3, 3, 1.0);
        let u = VectorField::new(3, 3);
        let feq = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let mut f = feq.clone();
        f.set(1, 1, 2, 0.2);
        let mut feq2 = feq.clone();
        feq2.set(1, 1, 2, 0.1);
        let out = collide_bgk(&f, &feq2, RelaxationParam::new(0.5).unwrap()).unwrap();
        // f = 0.2, feq = 0.1, freq 0.5 -> 0.15.
        assert_abs_diff_eq!(out.get(1, 1, 2), 0.15, epsilon = 1e-16);

        // Full relaxation lands exactly on feq.
        let full = collide_bgk(&f, &feq2, RelaxationParam::new(1.0).unwrap()).unwrap();
        assert_eq!(full.get(1, 1, 2), 0.1);
    }

    #[test]
    fn collide_field_matches_uniform_collide() {
        let phi = ScalarField::from_fn(4, 4, |x, y| 0.5 + 0.01 * (x * y) as f64);
        let u = VectorField::constant(4, 4, 0.05, 0.02);
        let feq = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let mut f = feq.clone();
        for v in f.data_mut() {
            *v *= 1.01;
        }
        let freq = RelaxationParam::new(1.3).unwrap();
        let uniform = collide_bgk(&f, &feq, freq).unwrap();
        let field = ScalarField::constant(4, 4, 1.3);
        let per_node = collide_bgk_field(&f, &feq, &field).unwrap();
        assert_eq!(uniform, per_node);
    }

    #[test]
    fn reaction_source_frozen_values() {
        let r = ReactionTerm::logistic(0.1).unwrap();
        assert_eq!(r.eval(0.0), 0.0);
        assert_eq!(r.eval(1.0), 0.0);
        // r phi (1 - phi) at phi = 0.5.
        assert_abs_diff_eq!(r.eval(0.5), 0.025, epsilon = 1e-17);

        let phi = ScalarField::constant(3, 3, 0.5);
        let u = VectorField::new(3, 3);
        let f = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let out = apply_reaction_source(&f, &phi, &r, &lat()).unwrap();
        let before = moments_scalar(&f);
        let after = moments_scalar(&out);
        // Zeroth moment gains exactly R(phi) = 0.025 per node.
        assert_abs_diff_eq!(
            after.get(1, 1) - before.get(1, 1),
            0.025,
            epsilon = 1e-15
        );

        let none = apply_reaction_source(&f, &phi, &ReactionTerm::None, &lat()).unwrap();
        assert_eq!(none, f);
    }

    #[test]
    fn tabulated_reaction_interpolates_and_clamps() {
        let r = ReactionTerm::tabulated(vec![(0.0, 0.0), (0.5, 0.025), (1.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(r.eval(0.25), 0.0125, epsilon = 1e-16);
        assert_eq!(r.eval(-1.0), 0.0);
        assert_eq!(r.eval(2.0), 0.0);
        assert!(ReactionTerm::tabulated(vec![(0.0, 0.0)]).is_err());
        assert!(ReactionTerm::tabulated(vec![(0.5, 0.0), (0.5, 1.0)]).is_err());
    }

    #[test]
    fn stream_shifts_and_wraps() {
        let mut f = DistributionField::new(8, 8);
        f.set(3, 3, 1, 1.0);
        let out = stream(&f);
        assert_eq!(out.get(4, 3, 1), 1.0);
        assert_eq!(out.get(3, 3, 1), 0.0);

        // Right edge wraps to column 0.
        let mut f = DistributionField::new(8, 8);
        f.set(7, 2, 1, 2.0);
        let out = stream(&f);
        assert_eq!(out.get(0, 2, 1), 2.0);

        // Diagonal with both wraps.
        let mut f = DistributionField::new(8, 8);
        f.set(0, 0, 7, 3.0); // e = (-1, -1)
        let out = stream(&f);
        assert_eq!(out.get(7, 7, 7), 3.0);
    }

    #[test]
    fn stream_is_a_permutation() {
        let mut f = DistributionField::new(6, 5);
        for (k, v) in f.data_mut().iter_mut().enumerate() {
            *v = (k as f64 * 0.618).sin();
        }
        let out = stream(&f);
        for i in 0..Q {
            let mut sa: Vec<u64> = f.plane(i).iter().map(|v| v.to_bits()).collect();
            let mut sb: Vec<u64> = out.plane(i).iter().map(|v| v.to_bits()).collect();
            sa.sort_unstable();
            sb.sort_unstable();
            assert_eq!(sa, sb, "direction {i} is not a permutation");
        }
    }

    #[test]
    fn stream_then_reverse_stream_is_identity() {
        let mut f = DistributionField::new(5, 4);
        for (k, v) in f.data_mut().iter_mut().enumerate() {
            *v = k as f64;
        }
        // Streaming, then swapping every population with its opposite,
        // streaming again, and swapping back undoes the shift.
        let mut swapped = stream(&f);
        let tmp = swapped.clone();
        for i in 0..Q {
            swapped.plane_mut(i).copy_from_slice(tmp.plane(OPPOSITE[i]));
        }
        let mut back = stream(&swapped);
        let tmp = back.clone();
        for i in 0..Q {
            back.plane_mut(i).copy_from_slice(tmp.plane(OPPOSITE[i]));
        }
        assert_eq!(back, f);
    }

    #[test]
    fn moments_fluid_rejects_all_zero() {
        let f = DistributionField::new(3, 3);
        match moments_fluid(&f) {
            Err(Error::NonPositiveDensity { x: 0, y: 0, .. }) => {}
            other => panic!("expected degenerate density, got {other:?}"),
        }
    }

    #[test]
    fn scalar_moments_invert_rest_equilibrium() {
        let phi = ScalarField::constant(4, 4, 0.7);
        let u = VectorField::new(4, 4);
        let f = equilibrium_scalar(&phi, &u, &lat()).unwrap();
        let back = moments_scalar(&f);
        // The nine weights sum to 1 only to round-off, so the inversion is
        // exact to a few ulps rather than bit-exact.
        assert!(back.max_abs_diff(&phi) < 5e-16);
    }
}
