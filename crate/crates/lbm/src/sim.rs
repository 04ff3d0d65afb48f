//! Time steppers.
//!
//! Each step performs collide (+ reaction source) in place, streams into a
//! spare buffer, applies the boundary pass (which reads the pre-stream
//! populations), swaps buffers, and refreshes the macroscopic moments with
//! a non-finiteness guard. The collide loops are fused per node but call
//! the same inlined per-direction helpers as the standalone kernel ops, so
//! a fused step and the equivalent op composition produce bit-identical
//! states.

use crate::bc::BcPass;
use crate::error::{Error, Result};
use crate::field::{DistributionField, ScalarField, VectorField};
use crate::kernel::{
    bgk_dir, equilibrium_fluid, equilibrium_scalar, fluid_eq_dir, scalar_eq_dir, stream_into,
    ReactionTerm, RelaxationParam,
};
use crate::lattice::{LatticeD2Q9, Q};
use crate::rheology::{freq_from_viscosity_clamped, noneq_moments, PowerLawModel};

const EX: [f64; Q] = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0, -1.0, -1.0, 1.0];
const EY: [f64; Q] = [0.0, 0.0, 1.0, 0.0, -1.0, 1.0, 1.0, -1.0, -1.0];
const W: [f64; Q] = crate::lattice::WEIGHTS;

/// Advection-diffusion(-reaction) stepper for a scalar carried by a fixed
/// velocity field.
pub struct ScalarSim {
    freq: RelaxationParam,
    reaction: ReactionTerm,
    bc: BcPass,
    velocity: VectorField,
    f: DistributionField,
    f_next: DistributionField,
    phi: ScalarField,
    source_buf: Vec<f64>,
    step_index: usize,
}

impl ScalarSim {
    pub fn new(
        diffusivity: f64,
        velocity: VectorField,
        reaction: ReactionTerm,
        bc: BcPass,
        phi0: &ScalarField,
        lat: &LatticeD2Q9,
    ) -> Result<Self> {
        if !phi0.same_shape(&ScalarField::new(velocity.nx(), velocity.ny())) {
            return Err(Error::ShapeMismatch("ScalarSim: phi0 vs velocity".into()));
        }
        bc.check_scalar_compatible()?;
        let freq = crate::kernel::omega_from_diffusivity(diffusivity)?;
        let f = equilibrium_scalar(phi0, &velocity, lat)?;
        let phi = crate::kernel::moments_scalar(&f);
        let f_next = DistributionField::new(phi0.nx(), phi0.ny());
        let n = phi.len();
        Ok(ScalarSim {
            freq,
            reaction,
            bc,
            velocity,
            f,
            f_next,
            phi,
            source_buf: vec![0.0; n],
            step_index: 0,
        })
    }

    pub fn phi(&self) -> &ScalarField {
        &self.phi
    }

    pub fn velocity(&self) -> &VectorField {
        &self.velocity
    }

    pub fn f(&self) -> &DistributionField {
        &self.f
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn step(&mut self) -> Result<()> {
        self.collide_and_source()?;
        stream_into(&self.f, &mut self.f_next);
        self.bc.apply_scalar(&mut self.f_next, &self.f);
        std::mem::swap(&mut self.f, &mut self.f_next);
        self.refresh_moments()?;
        self.step_index += 1;
        Ok(())
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    fn collide_and_source(&mut self) -> Result<()> {
        let n = self.f.plane_len();
        let nx = self.f.nx();
        let fr = self.freq.freq_val;
        let has_reaction = !self.reaction.is_none();
        if has_reaction {
            let reaction = &self.reaction;
            for (j, (&p, s)) in self
                .phi
                .data()
                .iter()
                .zip(self.source_buf.iter_mut())
                .enumerate()
            {
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
        }
        let phi_d = self.phi.data();
        let ux = self.velocity.x_plane();
        let uy = self.velocity.y_plane();
        let src = &self.source_buf[..n];
        let planes = self.f.planes_mut();
        let [p0, p1, p2, p3, p4, p5, p6, p7, p8] = planes.map(|p| &mut p[..n]);
        for j in 0..n {
            let phi = phi_d[j];
            let vx = ux[j];
            let vy = uy[j];
            let s = if has_reaction { src[j] } else { 0.0 };
            macro_rules! relax {
                ($p:ident, $i:expr) => {{
                    let eu = EX[$i] * vx + EY[$i] * vy;
                    let feq = scalar_eq_dir(W[$i], eu, phi);
                    $p[j] = bgk_dir($p[j], feq, fr) + W[$i] * s;
                }};
            }
            relax!(p0, 0);
            relax!(p1, 1);
            relax!(p2, 2);
            relax!(p3, 3);
            relax!(p4, 4);
            relax!(p5, 5);
            relax!(p6, 6);
            relax!(p7, 7);
            relax!(p8, 8);
        }
        Ok(())
    }

    fn refresh_moments(&mut self) -> Result<()> {
        let n = self.f.plane_len();
        let planes = self.f.planes();
        let out = &mut self.phi.data_mut()[..n];
        let mut finite = true;
        for j in 0..n {
            let mut s = 0.0;
            for p in &planes {
                s += p[j];
            }
            out[j] = s;
            finite &= s.is_finite();
        }
        if !finite {
            return Err(Error::Unstable {
                step: self.step_index,
            });
        }
        Ok(())
    }
}

/// How the fluid stepper obtains its relaxation frequency.
#[derive(Debug, Clone, PartialEq)]
pub enum ViscosityModel {
    /// Newtonian: one frequency everywhere.
    Constant(RelaxationParam),
    /// Power-law rheology: a per-node frequency recomputed before each
    /// collision from the non-equilibrium strain rate, using the previous
    /// step's frequency inside the strain formula (lagged), refined by the
    /// given number of fixed-point iterations (at least 1).
    PowerLaw {
        model: PowerLawModel,
        iterations: usize,
    },
}

/// Initial state of a fluid run.
pub enum FluidInit {
    /// rho = 1, u = 0 everywhere.
    Quiescent,
    /// Start from given macroscopic fields (equilibrium populations).
    Fields { rho: ScalarField, u: VectorField },
}

/// Weakly compressible flow stepper (Newtonian or power-law).
pub struct FluidSim {
    model: ViscosityModel,
    bc: BcPass,
    f: DistributionField,
    f_next: DistributionField,
    rho: ScalarField,
    u: VectorField,
    freq_field: ScalarField,
    step_index: usize,
}

impl FluidSim {
    pub fn new(
        nx: usize,
        ny: usize,
        model: ViscosityModel,
        bc: BcPass,
        init: FluidInit,
        lat: &LatticeD2Q9,
    ) -> Result<Self> {
        bc.check_fluid_compatible()?;
        if let ViscosityModel::PowerLaw { iterations, .. } = &model {
            if *iterations == 0 {
                return Err(Error::ParameterRange(
                    "power-law fixed-point iteration count must be at least 1".into(),
                ));
            }
        }
        let (rho, u) = match init {
            FluidInit::Quiescent => (
                ScalarField::constant(nx, ny, 1.0),
                VectorField::new(nx, ny),
            ),
            FluidInit::Fields { rho, u } => {
                if rho.nx() != nx || rho.ny() != ny || u.nx() != nx || u.ny() != ny {
                    return Err(Error::ShapeMismatch("FluidSim: init fields vs grid".into()));
                }
                (rho, u)
            }
        };
        let f = equilibrium_fluid(&rho, &u, lat)?;
        // Zero-shear frequency is the consistent lag seed; for n = 1 it
        // equals the constant-viscosity frequency exactly.
        let seed_freq = match &model {
            ViscosityModel::Constant(p) => p.freq_val,
            ViscosityModel::PowerLaw { model, .. } => model.freq_at(0.0),
        };
        Ok(FluidSim {
            model,
            bc,
            f_next: DistributionField::new(nx, ny),
            freq_field: ScalarField::constant(nx, ny, seed_freq),
            rho,
            u,
            f,
            step_index: 0,
        })
    }

    pub fn rho(&self) -> &ScalarField {
        &self.rho
    }

    pub fn u(&self) -> &VectorField {
        &self.u
    }

    pub fn f(&self) -> &DistributionField {
        &self.f
    }

    /// Per-node relaxation frequency used by the most recent collision.
    pub fn freq_field(&self) -> &ScalarField {
        &self.freq_field
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn step(&mut self) -> Result<()> {
        self.collide();
        stream_into(&self.f, &mut self.f_next);
        self.bc.apply_fluid(&mut self.f_next, &self.f);
        std::mem::swap(&mut self.f, &mut self.f_next);
        self.refresh_moments()?;
        self.step_index += 1;
        Ok(())
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    fn collide(&mut self) {
        let n = self.f.plane_len();
        let rho_d = self.rho.data();
        let ux = self.u.x_plane();
        let uy = self.u.y_plane();
        let model = &self.model;
        let freq_d = &mut self.freq_field.data_mut()[..n];
        let planes = self.f.planes_mut();
        let [p0, p1, p2, p3, p4, p5, p6, p7, p8] = planes.map(|p| &mut p[..n]);
        for j in 0..n {
            let rho = rho_d[j];
            let vx = ux[j];
            let vy = uy[j];
            let uu = vx * vx + vy * vy;
            macro_rules! feq_at {
                ($i:expr) => {{
                    let eu = EX[$i] * vx + EY[$i] * vy;
                    fluid_eq_dir(W[$i], eu, uu, rho)
                }};
            }
            let feq = [
                feq_at!(0),
                feq_at!(1),
                feq_at!(2),
                feq_at!(3),
                feq_at!(4),
                feq_at!(5),
                feq_at!(6),
                feq_at!(7),
                feq_at!(8),
            ];
            let fr = match model {
                ViscosityModel::Constant(p) => p.freq_val,
                ViscosityModel::PowerLaw { model, iterations } => {
                    let fneq = [
                        p0[j] - feq[0],
                        p1[j] - feq[1],
                        p2[j] - feq[2],
                        p3[j] - feq[3],
                        p4[j] - feq[4],
                        p5[j] - feq[5],
                        p6[j] - feq[6],
                        p7[j] - feq[7],
                        p8[j] - feq[8],
                    ];
                    let (pxx, pyy, pxy) = noneq_moments(&fneq);
                    let mut fr = freq_d[j];
                    for _ in 0..*iterations {
                        let c = -1.5 * fr / rho;
                        let exx = c * pxx;
                        let eyy = c * pyy;
                        let exy = c * pxy;
                        let ee = exx * exx + eyy * eyy + 2.0 * exy * exy;
                        let gamma = (2.0 * ee).sqrt();
                        fr = freq_from_viscosity_clamped(model.viscosity_at(gamma));
                    }
                    freq_d[j] = fr;
                    fr
                }
            };
            macro_rules! relax {
                ($p:ident, $i:expr) => {
                    $p[j] = bgk_dir($p[j], feq[$i], fr);
                };
            }
            relax!(p0, 0);
            relax!(p1, 1);
            relax!(p2, 2);
            relax!(p3, 3);
            relax!(p4, 4);
            relax!(p5, 5);
            relax!(p6, 6);
            relax!(p7, 7);
            relax!(p8, 8);
        }
    }

    fn refresh_moments(&mut self) -> Result<()> {
        let n = self.f.plane_len();
        let planes = self.f.planes();
        let rho_out = &mut self.rho.data_mut()[..n];
        let (ux_out, uy_out) = self.u.planes_mut();
        let ux_out = &mut ux_out[..n];
        let uy_out = &mut uy_out[..n];
        let mut ok = true;
        for j in 0..n {
            let f0 = planes[0][j];
            let f1 = planes[1][j];
            let f2 = planes[2][j];
            let f3 = planes[3][j];
            let f4 = planes[4][j];
            let f5 = planes[5][j];
            let f6 = planes[6][j];
            let f7 = planes[7][j];
            let f8 = planes[8][j];
            let r = f0 + f1 + f2 + f3 + f4 + f5 + f6 + f7 + f8;
            rho_out[j] = r;
            ux_out[j] = (f1 + f5 + f8 - f3 - f6 - f7) / r;
            uy_out[j] = (f2 + f5 + f6 - f4 - f7 - f8) / r;
            ok &= r.is_finite() && r > 0.0;
        }
        if !ok {
            return Err(Error::Unstable {
                step: self.step_index,
            });
        }
        Ok(())
    }
}
