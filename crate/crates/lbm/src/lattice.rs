//! The D2Q9 velocity set.
//!
//! Direction numbering, with +x to the right and +y upward:
//!
//! ```text
//!   6  2  5
//!   3  0  1
//!   7  4  8
//! ```
//!
//! Rest direction first, then the four axis directions counterclockwise
//! from +x, then the four diagonals counterclockwise from (+1, +1).

/// Number of discrete velocities.
pub const Q: usize = 9;

/// Integer lattice velocities e_i, indexed as in the module diagram.
pub const VELOCITIES: [[i32; 2]; Q] = [
    [0, 0],
    [1, 0],
    [0, 1],
    [-1, 0],
    [0, -1],
    [1, 1],
    [-1, 1],
    [-1, -1],
    [1, -1],
];

/// Quadrature weights w_i. Rest 4/9, axes 1/9, diagonals 1/36.
pub const WEIGHTS: [f64; Q] = [
    4.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
];

/// OPPOSITE[i] is the index j with e_j = -e_i.
pub const OPPOSITE: [usize; Q] = [0, 3, 4, 1, 2, 7, 8, 5, 6];

/// Lattice sound speed squared, c_s^2 = 1/3 in lattice units.
pub const SOUND_SPEED_SQ: f64 = 1.0 / 3.0;

/// The D2Q9 lattice: velocity set, weights, and derived constants bundled
/// so kernels take one handle instead of loose arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeD2Q9 {
    pub velocities: [[i32; 2]; Q],
    pub weights: [f64; Q],
    pub sound_speed_sq: f64,
}

impl LatticeD2Q9 {
    pub const fn standard() -> Self {
        LatticeD2Q9 {
            velocities: VELOCITIES,
            weights: WEIGHTS,
            sound_speed_sq: SOUND_SPEED_SQ,
        }
    }

    /// x component of e_i as a float.
    #[inline(always)]
    pub fn ex(&self, i: usize) -> f64 {
        self.velocities[i][0] as f64
    }

    /// y component of e_i as a float.
    #[inline(always)]
    pub fn ey(&self, i: usize) -> f64 {
        self.velocities[i][1] as f64
    }

    /// Index of the direction opposite to i.
    #[inline(always)]
    pub fn opposite(&self, i: usize) -> usize {
        OPPOSITE[i]
    }
}

impl Default for LatticeD2Q9 {
    fn default() -> Self {
        Self::standard()
    }
}
