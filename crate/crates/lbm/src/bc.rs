//! Halfway bounce-back boundary rules.
//!
//! Walls sit halfway between the last fluid node and a virtual outside
//! node, so the grid itself never changes. All rules are applied as a pass
//! over the post-stream field: for every boundary node and every direction
//! i that points out of the domain there, the incoming slot opposite to i
//! (which streaming filled with a periodic-wrap artifact) is overwritten
//! using the pre-stream, post-collision value of f_i at the same node:
//!
//! * zero-gradient scalar / resting wall: f_op = f_i
//! * moving wall:                         f_op = f_i - 6 w_i rho_w (e_i.u_w)
//! * scalar Dirichlet (anti-bounce-back): f_op = -f_i + 2 w_i phi_wall
//!
//! Unlisted edges stay periodic (streaming already wrapped them). The pass
//! applies edges in the fixed order top, bottom, left, right; at corners
//! the later edge owns the doubly-written slot, which keeps the pass
//! deterministic.

use crate::error::{Error, Result};
use crate::field::DistributionField;
use crate::lattice::{OPPOSITE, VELOCITIES, WEIGHTS};

/// One of the four domain edges. `Top` is the row y = ny - 1, `Bottom`
/// y = 0, `Left` the column x = 0, `Right` x = nx - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryEdge {
    Top,
    Bottom,
    Left,
    Right,
}

impl BoundaryEdge {
    /// Fixed application order; later edges own corner slots.
    pub const APPLICATION_ORDER: [BoundaryEdge; 4] = [
        BoundaryEdge::Top,
        BoundaryEdge::Bottom,
        BoundaryEdge::Left,
        BoundaryEdge::Right,
    ];

    pub fn index(self) -> usize {
        match self {
            BoundaryEdge::Top => 0,
            BoundaryEdge::Bottom => 1,
            BoundaryEdge::Left => 2,
            BoundaryEdge::Right => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundaryEdge::Top => "top",
            BoundaryEdge::Bottom => "bottom",
            BoundaryEdge::Left => "left",
            BoundaryEdge::Right => "right",
        }
    }

    /// Lattice directions that point out of the domain on this edge.
    pub fn outgoing(self) -> [usize; 3] {
        match self {
            BoundaryEdge::Top => [2, 5, 6],    // e_y = +1
            BoundaryEdge::Bottom => [4, 7, 8], // e_y = -1
            BoundaryEdge::Left => [3, 6, 7],   // e_x = -1
            BoundaryEdge::Right => [1, 5, 8],  // e_x = +1
        }
    }

    fn for_each_node(self, nx: usize, ny: usize, mut f: impl FnMut(usize, usize)) {
        match self {
            BoundaryEdge::Top => (0..nx).for_each(|x| f(x, ny - 1)),
            BoundaryEdge::Bottom => (0..nx).for_each(|x| f(x, 0)),
            BoundaryEdge::Left => (0..ny).for_each(|y| f(0, y)),
            BoundaryEdge::Right => (0..ny).for_each(|y| f(nx - 1, y)),
        }
    }
}

/// The boundary condition applied on one edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BcKind {
    /// Streaming wrap; the default when no rule is given for an edge.
    Periodic,
    /// Fixed scalar value on the wall (anti-bounce-back).
    DirichletScalar(f64),
    /// Zero normal flux for a scalar (plain bounce-back).
    NeumannZero,
    /// Resting solid wall.
    NoSlip,
    /// Solid wall translating tangentially at the given velocity.
    MovingWall { ux: f64, uy: f64 },
}

impl BcKind {
    pub fn is_periodic(&self) -> bool {
        matches!(self, BcKind::Periodic)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BcKind::DirichletScalar(v) if !v.is_finite() => Err(Error::ParameterRange(format!(
                "dirichlet value must be finite, got {v}"
            ))),
            BcKind::MovingWall { ux, uy } if !ux.is_finite() || !uy.is_finite() => {
                Err(Error::ParameterRange(format!(
                    "wall velocity must be finite, got ({ux}, {uy})"
                )))
            }
            _ => Ok(()),
        }
    }
}

/// One edge's boundary condition assignment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcRule {
    pub edge: BoundaryEdge,
    pub kind: BcKind,
}

/// A validated, ordered boundary pass over all four edges.
#[derive(Debug, Clone, PartialEq)]
pub struct BcPass {
    kinds: [BcKind; 4],
}

/// Builds the boundary pass from per-edge rules. At most one rule per
/// edge; unlisted edges default to periodic.
pub fn assemble_bc_pass(rules: &[BcRule]) -> Result<BcPass> {
    let mut kinds = [None; 4];
    for rule in rules {
        rule.kind.validate()?;
        let slot = &mut kinds[rule.edge.index()];
        if slot.is_some() {
            return Err(Error::DuplicateEdge(rule.edge));
        }
        *slot = Some(rule.kind);
    }
    Ok(BcPass {
        kinds: kinds.map(|k| k.unwrap_or(BcKind::Periodic)),
    })
}

impl BcPass {
    pub fn all_periodic() -> Self {
        BcPass {
            kinds: [BcKind::Periodic; 4],
        }
    }

    pub fn kind(&self, edge: BoundaryEdge) -> &BcKind {
        &self.kinds[edge.index()]
    }

    pub fn is_all_periodic(&self) -> bool {
        self.kinds.iter().all(BcKind::is_periodic)
    }

    /// Rejects rules that have no meaning for scalar transport.
    pub fn check_scalar_compatible(&self) -> Result<()> {
        for edge in BoundaryEdge::APPLICATION_ORDER {
            match self.kind(edge) {
                BcKind::NoSlip | BcKind::MovingWall { .. } => {
                    return Err(Error::IncompatibleBc(format!(
                        "{} edge: wall velocity rules do not apply to a scalar field",
                        edge.name()
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Rejects rules that have no meaning for a fluid.
    pub fn check_fluid_compatible(&self) -> Result<()> {
        for edge in BoundaryEdge::APPLICATION_ORDER {
            match self.kind(edge) {
                BcKind::DirichletScalar(_) | BcKind::NeumannZero => {
                    return Err(Error::IncompatibleBc(format!(
                        "{} edge: scalar value rules do not apply to a fluid",
                        edge.name()
                    )));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Applies the scalar rules to a freshly streamed field, reading
    /// pre-stream (post-collision) populations.
    pub fn apply_scalar(&self, post_stream: &mut DistributionField, post_collision: &DistributionField) {
        for edge in BoundaryEdge::APPLICATION_ORDER {
            match *self.kind(edge) {
                BcKind::Periodic => {}
                BcKind::DirichletScalar(v) => {
                    apply_dirichlet_scalar(post_stream, post_collision, edge, v)
                }
                // Wall kinds are rejected by check_scalar_compatible; a
                // plain bounce (zero flux) is the only sane fallback.
                BcKind::NeumannZero | BcKind::NoSlip | BcKind::MovingWall { .. } => {
                    apply_neumann_zero_scalar(post_stream, post_collision, edge)
                }
            }
        }
    }

    /// Applies the wall rules to a freshly streamed field, reading
    /// pre-stream (post-collision) populations.
    pub fn apply_fluid(&self, post_stream: &mut DistributionField, post_collision: &DistributionField) {
        for edge in BoundaryEdge::APPLICATION_ORDER {
            match *self.kind(edge) {
                BcKind::Periodic => {}
                BcKind::MovingWall { ux, uy } => {
                    apply_moving_wall(post_stream, post_collision, edge, (ux, uy), 1.0)
                }
                // NeumannZero is rejected upstream for fluids; bounce-back
                // is its exact fluid counterpart anyway.
                BcKind::NoSlip | BcKind::NeumannZero | BcKind::DirichletScalar(_) => {
                    apply_noslip(post_stream, post_collision, edge)
                }
            }
        }
    }
}

#[inline(always)]
fn overwrite_incoming(
    post_stream: &mut DistributionField,
    edge: BoundaryEdge,
    mut value: impl FnMut(usize, usize, usize) -> f64,
) {
    let nx = post_stream.nx();
    let ny = post_stream.ny();
    let outgoing = edge.outgoing();
    edge.for_each_node(nx, ny, |x, y| {
        for &i in &outgoing {
            let v = value(x, y, i);
            post_stream.set(x, y, OPPOSITE[i], v);
        }
    });
}

/// Anti-bounce-back scalar Dirichlet: f_op = -f_i + 2 w_i phi_wall.
pub fn apply_dirichlet_scalar(
    post_stream: &mut DistributionField,
    post_collision: &DistributionField,
    edge: BoundaryEdge,
    phi_wall: f64,
) {
    debug_assert!(post_stream.same_shape(post_collision));
    overwrite_incoming(post_stream, edge, |x, y, i| {
        -post_collision.get(x, y, i) + 2.0 * WEIGHTS[i] * phi_wall
    });
}

/// Plain bounce-back of scalar populations: zero normal flux.
pub fn apply_neumann_zero_scalar(
    post_stream: &mut DistributionField,
    post_collision: &DistributionField,
    edge: BoundaryEdge,
) {
    debug_assert!(post_stream.same_shape(post_collision));
    overwrite_incoming(post_stream, edge, |x, y, i| post_collision.get(x, y, i));
}

/// Resting wall: halfway bounce-back of fluid populations.
pub fn apply_noslip(
    post_stream: &mut DistributionField,
    post_collision: &DistributionField,
    edge: BoundaryEdge,
) {
    debug_assert!(post_stream.same_shape(post_collision));
    overwrite_incoming(post_stream, edge, |x, y, i| post_collision.get(x, y, i));
}

/// Moving wall: bounce-back with a momentum correction,
/// f_op = f_i - 6 w_i rho_wall (e_i . u_wall).
pub fn apply_moving_wall(
    post_stream: &mut DistributionField,
    post_collision: &DistributionField,
    edge: BoundaryEdge,
    u_wall: (f64, f64),
    rho_wall: f64,
) {
    debug_assert!(post_stream.same_shape(post_collision));
    overwrite_incoming(post_stream, edge, |x, y, i| {
        let eu = VELOCITIES[i][0] as f64 * u_wall.0 + VELOCITIES[i][1] as f64 * u_wall.1;
        post_collision.get(x, y, i) - 6.0 * WEIGHTS[i] * rho_wall * eu
    });
}
