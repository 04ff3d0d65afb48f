//! Run configuration: a flat `key = value` text format.
//!
//! The format is deliberately dumb: one assignment per line, `#` comments,
//! no sections, no nesting. `parse_config(render_config(&c))` reproduces
//! `c` exactly; floats are printed with Rust's shortest round-trip
//! formatting.

use crate::bc::{BcKind, BcPass, BcRule, BoundaryEdge};
use crate::error::{Error, Result};
use crate::field::{ScalarField, VectorField};
use crate::kernel::ReactionTerm;

/// Reaction selector expressible in config text.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReactionSpec {
    None,
    Logistic { rate: f64 },
}

impl ReactionSpec {
    pub fn to_term(self) -> Result<ReactionTerm> {
        match self {
            ReactionSpec::None => Ok(ReactionTerm::None),
            ReactionSpec::Logistic { rate } => ReactionTerm::logistic(rate),
        }
    }

    fn render(self) -> String {
        match self {
            ReactionSpec::None => "none".into(),
            ReactionSpec::Logistic { rate } => format!("logistic:{rate}"),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        if s == "none" {
            return Ok(ReactionSpec::None);
        }
        if let Some(rest) = s.strip_prefix("logistic:") {
            let rate = parse_f64(rest, "reaction rate")?;
            return Ok(ReactionSpec::Logistic { rate });
        }
        Err(Error::Config(format!(
            "unknown reaction '{s}' (expected none or logistic:<rate>)"
        )))
    }
}

/// Boundary selector for one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcSpec {
    Periodic,
    Dirichlet(f64),
    Neumann,
    NoSlip,
    Wall { ux: f64, uy: f64 },
}

impl BcSpec {
    pub fn to_kind(self) -> BcKind {
        match self {
            BcSpec::Periodic => BcKind::Periodic,
            BcSpec::Dirichlet(v) => BcKind::DirichletScalar(v),
            BcSpec::Neumann => BcKind::NeumannZero,
            BcSpec::NoSlip => BcKind::NoSlip,
            BcSpec::Wall { ux, uy } => BcKind::MovingWall { ux, uy },
        }
    }

    fn render(self) -> String {
        match self {
            BcSpec::Periodic => "periodic".into(),
            BcSpec::Dirichlet(v) => format!("dirichlet:{v}"),
            BcSpec::Neumann => "neumann".into(),
            BcSpec::NoSlip => "noslip".into(),
            BcSpec::Wall { ux, uy } => format!("wall:{ux},{uy}"),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "periodic" => return Ok(BcSpec::Periodic),
            "neumann" => return Ok(BcSpec::Neumann),
            "noslip" => return Ok(BcSpec::NoSlip),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("dirichlet:") {
            return Ok(BcSpec::Dirichlet(parse_f64(rest, "dirichlet value")?));
        }
        if let Some(rest) = s.strip_prefix("wall:") {
            let (a, b) = rest.split_once(',').ok_or_else(|| {
                Error::Config(format!("wall boundary needs 'wall:<ux>,<uy>', got '{s}'"))
            })?;
            return Ok(BcSpec::Wall {
                ux: parse_f64(a, "wall ux")?,
                uy: parse_f64(b, "wall uy")?,
            });
        }
        Err(Error::Config(format!(
            "unknown boundary '{s}' (expected periodic, dirichlet:<v>, neumann, noslip, or wall:<ux>,<uy>)"
        )))
    }
}

/// Initial condition selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitSpec {
    /// Unit-amplitude Gaussian centered at (nx/2, ny/2).
    Gaussian { sigma: f64 },
    /// Constant value everywhere.
    Uniform { value: f64 },
    /// rho = 1, u = 0 (fluid runs only).
    Quiescent,
}

impl InitSpec {
    fn render(self) -> String {
        match self {
            InitSpec::Gaussian { sigma } => format!("gaussian:{sigma}"),
            InitSpec::Uniform { value } => format!("uniform:{value}"),
            InitSpec::Quiescent => "quiescent".into(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        if s == "quiescent" {
            return Ok(InitSpec::Quiescent);
        }
        if let Some(rest) = s.strip_prefix("gaussian:") {
            let sigma = parse_f64(rest, "gaussian sigma")?;
            if !(sigma > 0.0) {
                return Err(Error::Config(format!(
                    "gaussian sigma must be positive, got {sigma}"
                )));
            }
            return Ok(InitSpec::Gaussian { sigma });
        }
        if let Some(rest) = s.strip_prefix("uniform:") {
            return Ok(InitSpec::Uniform {
                value: parse_f64(rest, "uniform value")?,
            });
        }
        Err(Error::Config(format!(
            "unknown init '{s}' (expected gaussian:<sigma>, uniform:<v>, or quiescent)"
        )))
    }

    /// Materialize the scalar field for a grid.
    pub fn build_scalar(self, nx: usize, ny: usize) -> Result<ScalarField> {
        match self {
            InitSpec::Uniform { value } => Ok(ScalarField::constant(nx, ny, value)),
            InitSpec::Gaussian { sigma } => {
                let cx = nx as f64 / 2.0;
                let cy = ny as f64 / 2.0;
                Ok(ScalarField::from_fn(nx, ny, |x, y| {
                    let dx = crate::analysis::periodic_delta(cx, x as f64, nx);
                    let dy = crate::analysis::periodic_delta(cy, y as f64, ny);
                    (-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp()
                }))
            }
            InitSpec::Quiescent => Err(Error::Config(
                "init quiescent applies to fluid runs, not scalar runs".into(),
            )),
        }
    }
}

/// Which equations a run solves, with their parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Physics {
    /// Advection-diffusion(-reaction) of a scalar in a fixed uniform flow.
    Scalar {
        diffusivity: f64,
        velocity: (f64, f64),
        reaction: ReactionSpec,
    },
    /// Weakly compressible power-law fluid (n = 1 is Newtonian).
    PowerLawFluid { consistency: f64, behavior_index: f64 },
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub nx: usize,
    pub ny: usize,
    pub steps: usize,
    pub physics: Physics,
    /// Order: top, bottom, left, right.
    pub bc: [BcSpec; 4],
    pub init: InitSpec,
    /// Snapshot cadence; 0 means initial and final state only.
    pub output_every: usize,
    pub output_dir: String,
}

impl SimulationConfig {
    /// Assemble the boundary pass, skipping periodic edges.
    pub fn bc_pass(&self) -> Result<BcPass> {
        let edges = [
            BoundaryEdge::Top,
            BoundaryEdge::Bottom,
            BoundaryEdge::Left,
            BoundaryEdge::Right,
        ];
        let rules: Vec<BcRule> = edges
            .iter()
            .zip(self.bc.iter())
            .filter(|(_, spec)| **spec != BcSpec::Periodic)
            .map(|(edge, spec)| BcRule {
                edge: *edge,
                kind: spec.to_kind(),
            })
            .collect();
        crate::bc::assemble_bc_pass(&rules)
    }

    pub fn velocity_field(&self) -> Result<VectorField> {
        match &self.physics {
            Physics::Scalar { velocity, .. } => Ok(VectorField::constant(
                self.nx,
                self.ny,
                velocity.0,
                velocity.1,
            )),
            Physics::PowerLawFluid { .. } => Err(Error::Config(
                "fluid runs evolve their own velocity".into(),
            )),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::Config(format!(
                "grid must be at least 3x3, got {}x{}",
                self.nx, self.ny
            )));
        }
        match &self.physics {
            Physics::Scalar {
                diffusivity,
                velocity,
                ..
            } => {
                if !(*diffusivity > 0.0) {
                    return Err(Error::Config(format!(
                        "diffusivity must be positive, got {diffusivity}"
                    )));
                }
                if !velocity.0.is_finite() || !velocity.1.is_finite() {
                    return Err(Error::Config("velocity must be finite".into()));
                }
            }
            Physics::PowerLawFluid {
                consistency,
                behavior_index,
            } => {
                if !(*consistency > 0.0) {
                    return Err(Error::Config(format!(
                        "consistency_K must be positive, got {consistency}"
                    )));
                }
                if !(*behavior_index > 0.0) {
                    return Err(Error::Config(format!(
                        "behavior_n must be positive, got {behavior_index}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{what}: cannot parse '{s}' as a number")))?;
    if !v.is_finite() {
        return Err(Error::Config(format!("{what}: value must be finite")));
    }
    Ok(v)
}

fn parse_usize(s: &str, what: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Config(format!("{what}: cannot parse '{s}' as a non-negative integer")))
}

/// Parse the flat key=value format. Unknown keys are errors; missing keys
/// fall back to defaults where one exists (velocity 0, reaction none,
/// boundaries periodic, output_every 0, output_dir "output").
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let mut seen: std::collections::BTreeMap<&str, String> = std::collections::BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim();
        let value = value.trim().to_string();
        const KEYS: [&str; 16] = [
            "nx",
            "ny",
            "steps",
            "diffusivity",
            "velocity_x",
            "velocity_y",
            "reaction",
            "consistency_K",
            "behavior_n",
            "bc_top",
            "bc_bottom",
            "bc_left",
            "bc_right",
            "init",
            "output_every",
            "output_dir",
        ];
        let canonical = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| Error::Config(format!("line {}: unknown key '{key}'", lineno + 1)))?;
        if seen.insert(canonical, value).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key '{key}'",
                lineno + 1
            )));
        }
    }
    let take = |k: &str| seen.get(k).cloned();
    let require = |k: &str| {
        take(k).ok_or_else(|| Error::Config(format!("missing required key '{k}'")))
    };

    let nx = parse_usize(&require("nx")?, "nx")?;
    let ny = parse_usize(&require("ny")?, "ny")?;
    let steps = parse_usize(&require("steps")?, "steps")?;

    let has_scalar = seen.contains_key("diffusivity");
    let has_fluid = seen.contains_key("consistency_K") || seen.contains_key("behavior_n");
    let physics = match (has_scalar, has_fluid) {
        (true, true) => {
            return Err(Error::Config(
                "config mixes scalar keys (diffusivity) with fluid keys (consistency_K/behavior_n)"
                    .into(),
            ))
        }
        (false, false) => {
            return Err(Error::Config(
                "config must set either diffusivity (scalar run) or consistency_K + behavior_n (fluid run)"
                    .into(),
            ))
        }
        (true, false) => Physics::Scalar {
            diffusivity: parse_f64(&require("diffusivity")?, "diffusivity")?,
            velocity: (
                take("velocity_x").map_or(Ok(0.0), |v| parse_f64(&v, "velocity_x"))?,
                take("velocity_y").map_or(Ok(0.0), |v| parse_f64(&v, "velocity_y"))?,
            ),
            reaction: take("reaction").map_or(Ok(ReactionSpec::None), |v| ReactionSpec::parse(&v))?,
        },
        (false, true) => {
            for k in ["velocity_x", "velocity_y", "reaction"] {
                if seen.contains_key(k) {
                    return Err(Error::Config(format!(
                        "key '{k}' does not apply to a fluid run"
                    )));
                }
            }
            Physics::PowerLawFluid {
                consistency: parse_f64(&require("consistency_K")?, "consistency_K")?,
                behavior_index: parse_f64(&require("behavior_n")?, "behavior_n")?,
            }
        }
    };

    let bc_of = |k: &str| -> Result<BcSpec> {
        take(k).map_or(Ok(BcSpec::Periodic), |v| BcSpec::parse(&v))
    };
    let bc = [
        bc_of("bc_top")?,
        bc_of("bc_bottom")?,
        bc_of("bc_left")?,
        bc_of("bc_right")?,
    ];

    let init = InitSpec::parse(&require("init")?)?;
    let output_every = take("output_every").map_or(Ok(0), |v| parse_usize(&v, "output_every"))?;
    let output_dir = take("output_dir").unwrap_or_else(|| "output".into());

    let config = SimulationConfig {
        nx,
        ny,
        steps,
        physics,
        bc,
        init,
        output_every,
        output_dir,
    };
    config.validate()?;
    Ok(config)
}

/// Render in canonical key order. All keys are written explicitly so the
/// output is self-describing and parses back to an equal value.
pub fn render_config(c: &SimulationConfig) -> String {
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    kv("nx", c.nx.to_string());
    kv("ny", c.ny.to_string());
    kv("steps", c.steps.to_string());
    match &c.physics {
        Physics::Scalar {
            diffusivity,
            velocity,
            reaction,
        } => {
            kv("diffusivity", diffusivity.to_string());
            kv("velocity_x", velocity.0.to_string());
            kv("velocity_y", velocity.1.to_string());
            kv("reaction", reaction.render());
        }
        Physics::PowerLawFluid {
            consistency,
            behavior_index,
        } => {
            kv("consistency_K", consistency.to_string());
            kv("behavior_n", behavior_index.to_string());
        }
    }
    kv("bc_top", c.bc[0].render());
    kv("bc_bottom", c.bc[1].render());
    kv("bc_left", c.bc[2].render());
    kv("bc_right", c.bc[3].render());
    kv("init", c.init.render());
    kv("output_every", c.output_every.to_string());
    kv("output_dir", c.output_dir.clone());
    out
}
