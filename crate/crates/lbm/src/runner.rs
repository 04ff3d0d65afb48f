//! Task execution: step loop, snapshot schedule, manifest, time series.
//!
//! `run_tester` is the one entry point everything else drives: it builds
//! the right stepper from the task config, writes VTK snapshots (always at
//! step 0 and the final step, plus every `output_every` steps when that is
//! nonzero), records a coarse time series, and stops early once the field
//! stops changing. Runs are deterministic: the same task yields
//! byte-identical snapshots and manifest.

use crate::config::{Physics, SimulationConfig};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::kernel::RelaxationParam;
use crate::lattice::LatticeD2Q9;
use crate::manifest::{sha256_file, write_manifest, ManifestEntry};
use crate::rheology::PowerLawModel;
use crate::sim::{FluidInit, FluidSim, ScalarSim, ViscosityModel};
use crate::task::TaskSpec;
use crate::vtk::{write_vtk_scalar, write_vtk_vector};
use std::collections::BTreeMap;
use std::path::Path;

/// Fields are compared against their value 100 steps earlier; a max-norm
/// change at or below this stops the run.
pub const STEADY_TOL: f64 = 1e-8;
pub const STEADY_INTERVAL: usize = 100;
/// Cadence of the in-memory time series.
pub const SERIES_INTERVAL: usize = 50;

/// One time-series sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub step: usize,
    pub metrics: BTreeMap<String, f64>,
}

/// Everything a finished run hands back.
#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub final_step: usize,
    /// True when the steady-state criterion ended the run before the cap.
    pub steady: bool,
    pub series: Vec<Sample>,
    pub snapshots: Vec<ManifestEntry>,
    /// Final scalar field (scalar runs).
    pub phi: Option<ScalarField>,
    /// Final density (fluid runs).
    pub rho: Option<ScalarField>,
    /// Final velocity (fluid runs).
    pub u: Option<VectorField>,
}

/// Reject configs the step loop cannot honor.
pub fn validate_for_run(config: &SimulationConfig) -> Result<()> {
    if config.steps == 0 {
        return Err(Error::Config("steps must be at least 1".into()));
    }
    if config.output_every > config.steps {
        return Err(Error::Config(format!(
            "output_every ({}) exceeds steps ({})",
            config.output_every, config.steps
        )));
    }
    Ok(())
}

fn snapshot_filename(task_name: &str, step: usize) -> String {
    format!("{task_name}_{step:06}.vtk")
}

fn scalar_snapshot(
    dir: &Path,
    task_name: &str,
    step: usize,
    field: &ScalarField,
) -> Result<ManifestEntry> {
    let filename = snapshot_filename(task_name, step);
    let path = dir.join(&filename);
    write_vtk_scalar(&path, field, "phi", &format!("{task_name} step {step}"))?;
    Ok(ManifestEntry {
        timestep: step,
        filename,
        field_names: vec!["phi".into()],
        checksum: sha256_file(&path)?,
    })
}

fn vector_snapshot(
    dir: &Path,
    task_name: &str,
    step: usize,
    field: &VectorField,
) -> Result<ManifestEntry> {
    let filename = snapshot_filename(task_name, step);
    let path = dir.join(&filename);
    write_vtk_vector(&path, field, "velocity", &format!("{task_name} step {step}"))?;
    Ok(ManifestEntry {
        timestep: step,
        filename,
        field_names: vec!["velocity".into()],
        checksum: sha256_file(&path)?,
    })
}

fn scalar_metrics(phi: &ScalarField) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("total".to_string(), phi.sum()),
        ("min".to_string(), phi.min()),
        ("max".to_string(), phi.max()),
    ])
}

fn fluid_metrics(rho: &ScalarField, u: &VectorField) -> BTreeMap<String, f64> {
    BTreeMap::from([
        ("rho_total".to_string(), rho.sum()),
        ("rho_min".to_string(), rho.min()),
        ("rho_max".to_string(), rho.max()),
        ("max_speed".to_string(), crate::analysis::max_speed(u)),
    ])
}

/// Build the scalar stepper a config describes.
pub fn scalar_sim_from_config(config: &SimulationConfig) -> Result<ScalarSim> {
    let Physics::Scalar {
        diffusivity,
        reaction,
        ..
    } = &config.physics
    else {
        return Err(Error::Config("config is not a scalar run".into()));
    };
    let velocity = config.velocity_field()?;
    let phi0 = config.init.build_scalar(config.nx, config.ny)?;
    ScalarSim::new(
        *diffusivity,
        velocity,
        reaction.to_term()?,
        config.bc_pass()?,
        &phi0,
        &LatticeD2Q9::standard(),
    )
}

/// Build the fluid stepper a config describes. `init` overrides the
/// config's initial condition (used for warm starts); pass None to honor
/// the config.
pub fn fluid_sim_from_config(
    config: &SimulationConfig,
    init: Option<FluidInit>,
) -> Result<FluidSim> {
    let Physics::PowerLawFluid {
        consistency,
        behavior_index,
    } = &config.physics
    else {
        return Err(Error::Config("config is not a fluid run".into()));
    };
    let init = match init {
        Some(i) => i,
        None => match config.init {
            crate::config::InitSpec::Quiescent => FluidInit::Quiescent,
            other => {
                return Err(Error::Config(format!(
                    "fluid runs start quiescent; got init {other:?}"
                )))
            }
        },
    };
    let model = if *behavior_index == 1.0 {
        // Newtonian reduction: K is the kinematic viscosity directly.
        ViscosityModel::Constant(RelaxationParam::new(
            crate::kernel::omega_from_viscosity(*consistency)?.freq_val,
        )?)
    } else {
        ViscosityModel::PowerLaw {
            model: PowerLawModel::new(*consistency, *behavior_index)?,
            iterations: 1,
        }
    };
    FluidSim::new(
        config.nx,
        config.ny,
        model,
        config.bc_pass()?,
        init,
        &LatticeD2Q9::standard(),
    )
}

/// Run a task to completion in `out_dir`, writing snapshots and the
/// manifest there. The directory is created if needed.
pub fn run_tester(task: &TaskSpec, out_dir: &Path) -> Result<SimulationOutput> {
    validate_for_run(&task.config)?;
    std::fs::create_dir_all(out_dir)?;
    match task.config.physics {
        Physics::Scalar { .. } => run_scalar(task, out_dir),
        Physics::PowerLawFluid { .. } => run_fluid(task, out_dir, None),
    }
}

/// As `run_tester`, with an explicit fluid initial condition.
pub fn run_tester_fluid_init(
    task: &TaskSpec,
    out_dir: &Path,
    init: FluidInit,
) -> Result<SimulationOutput> {
    validate_for_run(&task.config)?;
    std::fs::create_dir_all(out_dir)?;
    run_fluid(task, out_dir, Some(init))
}

fn run_scalar(task: &TaskSpec, out_dir: &Path) -> Result<SimulationOutput> {
    let config = &task.config;
    let mut sim = scalar_sim_from_config(config)?;
    let mut snapshots = vec![scalar_snapshot(out_dir, &task.name, 0, sim.phi())?];
    let mut series = vec![Sample {
        step: 0,
        metrics: scalar_metrics(sim.phi()),
    }];
    let mut prev = sim.phi().clone();
    let mut steady = false;
    while sim.step_index() < config.steps {
        sim.step()?;
        let t = sim.step_index();
        if t % SERIES_INTERVAL == 0 {
            series.push(Sample {
                step: t,
                metrics: scalar_metrics(sim.phi()),
            });
        }
        if config.output_every > 0 && t % config.output_every == 0 {
            snapshots.push(scalar_snapshot(out_dir, &task.name, t, sim.phi())?);
        }
        if t % STEADY_INTERVAL == 0 {
            if sim.phi().max_abs_diff(&prev) <= STEADY_TOL {
                steady = true;
                break;
            }
            prev = sim.phi().clone();
        }
    }
    let t = sim.step_index();
    if series.last().map(|s| s.step) != Some(t) {
        series.push(Sample {
            step: t,
            metrics: scalar_metrics(sim.phi()),
        });
    }
    if snapshots.last().map(|s| s.timestep) != Some(t) {
        snapshots.push(scalar_snapshot(out_dir, &task.name, t, sim.phi())?);
    }
    write_manifest(out_dir, &snapshots)?;
    Ok(SimulationOutput {
        final_step: t,
        steady,
        series,
        snapshots,
        phi: Some(sim.phi().clone()),
        rho: None,
        u: None,
    })
}

fn run_fluid(
    task: &TaskSpec,
    out_dir: &Path,
    init: Option<FluidInit>,
) -> Result<SimulationOutput> {
    let config = &task.config;
    let mut sim = fluid_sim_from_config(config, init)?;
    let mut snapshots = vec![vector_snapshot(out_dir, &task.name, 0, sim.u())?];
    let mut series = vec![Sample {
        step: 0,
        metrics: fluid_metrics(sim.rho(), sim.u()),
    }];
    let mut prev = sim.u().clone();
    let mut steady = false;
    while sim.step_index() < config.steps {
        sim.step()?;
        let t = sim.step_index();
        if t % SERIES_INTERVAL == 0 {
            series.push(Sample {
                step: t,
                metrics: fluid_metrics(sim.rho(), sim.u()),
            });
        }
        if config.output_every > 0 && t % config.output_every == 0 {
            snapshots.push(vector_snapshot(out_dir, &task.name, t, sim.u())?);
        }
        if t % STEADY_INTERVAL == 0 {
            if sim.u().max_abs_diff(&prev) <= STEADY_TOL {
                steady = true;
                break;
            }
            prev = sim.u().clone();
        }
    }
    let t = sim.step_index();
    if series.last().map(|s| s.step) != Some(t) {
        series.push(Sample {
            step: t,
            metrics: fluid_metrics(sim.rho(), sim.u()),
        });
    }
    if snapshots.last().map(|s| s.timestep) != Some(t) {
        snapshots.push(vector_snapshot(out_dir, &task.name, t, sim.u())?);
    }
    write_manifest(out_dir, &snapshots)?;
    Ok(SimulationOutput {
        final_step: t,
        steady,
        series,
        snapshots,
        phi: None,
        rho: Some(sim.rho().clone()),
        u: Some(sim.u().clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{BcSpec, InitSpec, ReactionSpec};
    use crate::task::AcceptanceCheck;
    use tempfile::tempdir;

    fn small_task() -> TaskSpec {
        TaskSpec {
            name: "mini".into(),
            equations: "e".into(),
            algorithm: "a".into(),
            tester_notes: "t".into(),
            config: SimulationConfig {
                nx: 24,
                ny: 24,
                steps: 60,
                physics: Physics::Scalar {
                    diffusivity: 0.05,
                    velocity: (0.05, 0.0),
                    reaction: ReactionSpec::None,
                },
                bc: [BcSpec::Periodic; 4],
                init: InitSpec::Gaussian { sigma: 3.0 },
                output_every: 20,
                output_dir: "output".into(),
            },
            acceptance: Vec::<AcceptanceCheck>::new(),
        }
    }

    #[test]
    fn snapshot_schedule_and_manifest_match() {
        let dir = tempdir().unwrap();
        let out = run_tester(&small_task(), dir.path()).unwrap();
        let steps: Vec<usize> = out.snapshots.iter().map(|s| s.timestep).collect();
        assert_eq!(steps, vec![0, 20, 40, 60]);
        let listed = crate::manifest::verify_manifest(dir.path()).unwrap();
        assert_eq!(listed, out.snapshots);
        for entry in &listed {
            assert_eq!(entry.field_names, vec!["phi".to_string()]);
        }
        assert_eq!(out.final_step, 60);
        assert!(!out.steady);
    }

    #[test]
    fn runs_are_byte_deterministic() {
        let d1 = tempdir().unwrap();
        let d2 = tempdir().unwrap();
        run_tester(&small_task(), d1.path()).unwrap();
        run_tester(&small_task(), d2.path()).unwrap();
        for name in ["mini_000000.vtk", "mini_000060.vtk", "manifest.json"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn zero_step_config_is_rejected() {
        let mut task = small_task();
        task.config.steps = 0;
        task.config.output_every = 0;
        let dir = tempdir().unwrap();
        assert!(matches!(
            run_tester(&task, dir.path()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn output_every_beyond_steps_is_rejected() {
        let mut task = small_task();
        task.config.output_every = 61;
        let dir = tempdir().unwrap();
        assert!(run_tester(&task, dir.path()).is_err());
    }

    #[test]
    fn steady_uniform_run_stops_early() {
        let mut task = small_task();
        // Uniform periodic state never changes; the steady check fires at
        // the first interval.
        task.config.init = InitSpec::Uniform { value: 0.3 };
        task.config.steps = 10_000;
        task.config.output_every = 0;
        let dir = tempdir().unwrap();
        let out = run_tester(&task, dir.path()).unwrap();
        assert!(out.steady);
        assert_eq!(out.final_step, STEADY_INTERVAL);
        let steps: Vec<usize> = out.snapshots.iter().map(|s| s.timestep).collect();
        assert_eq!(steps, vec![0, STEADY_INTERVAL]);
    }

    #[test]
    fn series_covers_start_and_end() {
        let dir = tempdir().unwrap();
        let out = run_tester(&small_task(), dir.path()).unwrap();
        assert_eq!(out.series.first().map(|s| s.step), Some(0));
        assert_eq!(out.series.last().map(|s| s.step), Some(60));
        assert!(out.series.iter().all(|s| s.metrics.contains_key("total")));
    }

    #[test]
    fn scalar_mass_is_conserved_on_periodic_grid() {
        let dir = tempdir().unwrap();
        let out = run_tester(&small_task(), dir.path()).unwrap();
        let t0 = out.series.first().unwrap().metrics["total"];
        let t1 = out.series.last().unwrap().metrics["total"];
        assert!(((t1 - t0) / t0).abs() < 1e-12, "mass drifted: {t0} -> {t1}");
    }
}
