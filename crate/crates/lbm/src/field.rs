//! Flat field storage.
//!
//! All fields are row-major over (x, y) with x fastest: `idx = y * nx + x`.
//! Multi-component fields store whole components ("planes") contiguously,
//! so a distribution function is nine scalar planes back to back. This
//! keeps per-direction passes (streaming, moment sums) on contiguous
//! memory.

use crate::lattice::Q;

/// A scalar field on an nx-by-ny grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl ScalarField {
    /// Zero-initialized field. Panics if either extent is zero.
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "field extents must be positive");
        ScalarField {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    pub fn constant(nx: usize, ny: usize, value: f64) -> Self {
        let mut f = Self::new(nx, ny);
        f.data.fill(value);
        f
    }

    pub fn from_fn(nx: usize, ny: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut out = Self::new(nx, ny);
        for y in 0..ny {
            for x in 0..nx {
                out.data[y * nx + x] = f(x, y);
            }
        }
        out
    }

    #[inline(always)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline(always)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline(always)]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline(always)]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline(always)]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny);
        y * self.nx + x
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[self.idx(x, y)]
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        let i = self.idx(x, y);
        self.data[i] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    /// Sum of all values, in fixed storage order (deterministic).
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Max-norm difference against a field of the same shape.
    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        assert!(self.same_shape(other), "max_abs_diff: shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A two-component vector field stored as an x plane followed by a y plane.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl VectorField {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "field extents must be positive");
        VectorField {
            nx,
            ny,
            data: vec![0.0; 2 * nx * ny],
        }
    }

    /// Spatially uniform vector field.
    pub fn constant(nx: usize, ny: usize, ux: f64, uy: f64) -> Self {
        let mut f = Self::new(nx, ny);
        let n = nx * ny;
        f.data[..n].fill(ux);
        f.data[n..].fill(uy);
        f
    }

    /// Fill from a function of the node coordinates.
    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> (f64, f64)) -> Self {
        let mut field = Self::new(nx, ny);
        for y in 0..ny {
            for x in 0..nx {
                let (ux, uy) = f(x, y);
                field.set(x, y, ux, uy);
            }
        }
        field
    }

    #[inline(always)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline(always)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline(always)]
    pub fn idx(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny);
        y * self.nx + x
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = self.idx(x, y);
        let n = self.nx * self.ny;
        (self.data[i], self.data[n + i])
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, ux: f64, uy: f64) {
        let i = self.idx(x, y);
        let n = self.nx * self.ny;
        self.data[i] = ux;
        self.data[n + i] = uy;
    }

    pub fn x_plane(&self) -> &[f64] {
        &self.data[..self.nx * self.ny]
    }

    pub fn y_plane(&self) -> &[f64] {
        &self.data[self.nx * self.ny..]
    }

    /// Both planes, mutably.
    pub fn planes_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        self.data.split_at_mut(self.nx * self.ny)
    }

    pub fn same_shape(&self, other: &VectorField) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Max-norm difference over both components.
    pub fn max_abs_diff(&self, other: &VectorField) -> f64 {
        assert!(self.same_shape(other), "max_abs_diff: shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Distribution functions: nine scalar planes, one per lattice direction.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl DistributionField {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "field extents must be positive");
        DistributionField {
            nx,
            ny,
            data: vec![0.0; Q * nx * ny],
        }
    }

    #[inline(always)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline(always)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    /// Nodes per plane.
    #[inline(always)]
    pub fn plane_len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline(always)]
    pub fn idx(&self, x: usize, y: usize, i: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny && i < Q);
        i * self.nx * self.ny + y * self.nx + x
    }

    #[inline(always)]
    pub fn get(&self, x: usize, y: usize, i: usize) -> f64 {
        self.data[self.idx(x, y, i)]
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, i: usize, value: f64) {
        let j = self.idx(x, y, i);
        self.data[j] = value;
    }

    pub fn plane(&self, i: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn plane_mut(&mut self, i: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[i * n..(i + 1) * n]
    }

    /// All nine planes, mutably and disjointly.
    pub fn planes_mut(&mut self) -> [&mut [f64]; Q] {
        let n = self.plane_len();
        let mut rest: &mut [f64] = &mut self.data;
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(Q);
        for _ in 0..Q {
            let (head, tail) = std::mem::take(&mut rest).split_at_mut(n);
            out.push(head);
            rest = tail;
        }
        out.try_into().expect("exactly Q planes")
    }

    /// All nine planes, shared.
    pub fn planes(&self) -> [&[f64]; Q] {
        std::array::from_fn(|i| self.plane(i))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn same_shape(&self, other: &DistributionField) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn max_abs_diff(&self, other: &DistributionField) -> f64 {
        assert!(self.same_shape(other), "max_abs_diff: shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Sum over every direction and node (conserved mass for periodic
    /// scalar transport), in fixed storage order.
    pub fn total(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// A symmetric 2x2 tensor field: planes xx, yy, xy.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    nx: usize,
    ny: usize,
    data: Vec<f64>,
}

impl TensorField {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx > 0 && ny > 0, "field extents must be positive");
        TensorField {
            nx,
            ny,
            data: vec![0.0; 3 * nx * ny],
        }
    }

    #[inline(always)]
    pub fn nx(&self) -> usize {
        self.nx
    }

    #[inline(always)]
    pub fn ny(&self) -> usize {
        self.ny
    }

    #[inline(always)]
    fn node(&self, x: usize, y: usize) -> usize {
        debug_assert!(x < self.nx && y < self.ny);
        y * self.nx + x
    }

    #[inline(always)]
    pub fn xx(&self, x: usize, y: usize) -> f64 {
        self.data[self.node(x, y)]
    }

    #[inline(always)]
    pub fn yy(&self, x: usize, y: usize) -> f64 {
        let n = self.nx * self.ny;
        self.data[n + self.node(x, y)]
    }

    #[inline(always)]
    pub fn xy(&self, x: usize, y: usize) -> f64 {
        let n = self.nx * self.ny;
        self.data[2 * n + self.node(x, y)]
    }

    #[inline(always)]
    pub fn set(&mut self, x: usize, y: usize, xx: f64, yy: f64, xy: f64) {
        let n = self.nx * self.ny;
        let j = self.node(x, y);
        self.data[j] = xx;
        self.data[n + j] = yy;
        self.data[2 * n + j] = xy;
    }

    pub fn xx_plane(&self) -> &[f64] {
        &self.data[..self.nx * self.ny]
    }

    pub fn yy_plane(&self) -> &[f64] {
        let n = self.nx * self.ny;
        &self.data[n..2 * n]
    }

    pub fn xy_plane(&self) -> &[f64] {
        let n = self.nx * self.ny;
        &self.data[2 * n..]
    }
}
