//! Box domains in one or two dimensions, split into a regular cell grid.

use alloc::format;

use crate::error::{Error, Result};

/// A location in `D̄`. One-dimensional domains ignore the second coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Point(pub [f64; 2]);

impl Point {
    pub const fn new1(x: f64) -> Self {
        Point([x, 0.0])
    }

    pub const fn new2(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.0[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.0[1]
    }

    /// The first `dim` coordinates.
    pub fn coords(&self, dim: usize) -> &[f64] {
        &self.0[..dim]
    }
}

/// Closed axis-aligned box `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBox {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl AxisBox {
    pub const fn interval(a: f64, b: f64) -> Self {
        AxisBox {
            lower: [a, 0.0],
            upper: [b, 0.0],
        }
    }

    pub const fn rect(lower: [f64; 2], upper: [f64; 2]) -> Self {
        AxisBox { lower, upper }
    }

    pub fn contains(&self, p: Point, dim: usize) -> bool {
        (0..dim).all(|a| p.0[a] >= self.lower[a] && p.0[a] <= self.upper[a])
    }

    /// Lebesgue measure of `self ∩ other` in `dim` dimensions.
    pub fn overlap_volume(&self, other: &AxisBox, dim: usize) -> f64 {
        (0..dim)
            .map(|a| {
                let lo = self.lower[a].max(other.lower[a]);
                let hi = self.upper[a].min(other.upper[a]);
                (hi - lo).max(0.0)
            })
            .product()
    }
}

/// Bounded box domain `D` with `cells_per_axis^dim` closed cells, indexed
/// row-major (the x index varies fastest).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxDomain {
    dim: usize,
    lower: [f64; 2],
    upper: [f64; 2],
    cells_per_axis: usize,
}

impl BoxDomain {
    pub fn new(lower: &[f64], upper: &[f64], cells_per_axis: usize) -> Result<Self> {
        let dim = lower.len();
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidDomain(format!("dimension must be 1 or 2, got {dim}")));
        }
        if upper.len() != dim {
            return Err(Error::InvalidDomain(format!(
                "lower has {dim} coordinates but upper has {}",
                upper.len()
            )));
        }
        if cells_per_axis == 0 {
            return Err(Error::InvalidDomain("cells_per_axis must be positive".into()));
        }
        let mut lo = [0.0; 2];
        let mut hi = [0.0; 2];
        for a in 0..dim {
            if !(lower[a].is_finite() && upper[a].is_finite() && lower[a] < upper[a]) {
                return Err(Error::InvalidDomain(format!(
                    "axis {a}: need finite lower < upper, got [{}, {}]",
                    lower[a], upper[a]
                )));
            }
            lo[a] = lower[a];
            hi[a] = upper[a];
        }
        Ok(BoxDomain {
            dim,
            lower: lo,
            upper: hi,
            cells_per_axis,
        })
    }

    pub fn interval(a: f64, b: f64, cells: usize) -> Result<Self> {
        Self::new(&[a], &[b], cells)
    }

    pub fn unit_interval(cells: usize) -> Self {
        Self::interval(0.0, 1.0, cells).expect("unit interval is valid")
    }

    pub fn rect(lower: [f64; 2], upper: [f64; 2], cells_per_axis: usize) -> Result<Self> {
        Self::new(&lower, &upper, cells_per_axis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower[..self.dim]
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper[..self.dim]
    }

    pub fn cells_per_axis(&self) -> usize {
        self.cells_per_axis
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis.pow(self.dim as u32)
    }

    pub fn cell_width(&self, axis: usize) -> f64 {
        (self.upper[axis] - self.lower[axis]) / self.cells_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.cell_width(a)).product()
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|a| self.upper[a] - self.lower[a]).product()
    }

    pub fn bounds(&self) -> AxisBox {
        AxisBox::rect(self.lower, self.upper)
    }

    /// Per-axis cell indices of a flat cell index.
    pub fn cell_indices(&self, cell: usize) -> [usize; 2] {
        let n = self.cells_per_axis;
        if self.dim == 1 {
            [cell, 0]
        } else {
            [cell % n, cell / n]
        }
    }

    pub fn cell_center(&self, cell: usize) -> Point {
        let idx = self.cell_indices(cell);
        let mut p = [0.0; 2];
        for (a, coord) in p.iter_mut().enumerate().take(self.dim) {
            *coord = self.lower[a] + (idx[a] as f64 + 0.5) * self.cell_width(a);
        }
        Point(p)
    }

    pub fn cell_bounds(&self, cell: usize) -> AxisBox {
        let idx = self.cell_indices(cell);
        let mut b = AxisBox::rect([0.0; 2], [0.0; 2]);
        for a in 0..self.dim {
            let w = self.cell_width(a);
            b.lower[a] = self.lower[a] + idx[a] as f64 * w;
            b.upper[a] = if idx[a] + 1 == self.cells_per_axis {
                self.upper[a]
            } else {
                self.lower[a] + (idx[a] + 1) as f64 * w
            };
        }
        b
    }

    pub fn contains(&self, p: Point) -> bool {
        self.bounds().contains(p, self.dim)
    }

    /// Cell holding `p`; points on a shared face go to the upper cell, the
    /// outer boundary belongs to the adjacent cell.
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        let n = self.cells_per_axis;
        let mut flat = 0;
        let mut stride = 1;
        for a in 0..self.dim {
            let t = (p.0[a] - self.lower[a]) / self.cell_width(a);
            let i = (libm::floor(t) as usize).min(n - 1);
            flat += i * stride;
            stride *= n;
        }
        Some(flat)
    }

    /// Point at the fractional position `frac` (each in `[0,1)`) inside `cell`.
    pub fn point_in_cell(&self, cell: usize, frac: [f64; 2]) -> Point {
        let b = self.cell_bounds(cell);
        let mut p = [0.0; 2];
        for a in 0..self.dim {
            p[a] = b.lower[a] + frac[a] * (b.upper[a] - b.lower[a]);
        }
        Point(p)
    }

    /// Same extent, `factor` times as many cells per axis.
    pub fn refined(&self, factor: usize) -> Self {
        BoxDomain {
            cells_per_axis: self.cells_per_axis * factor.max(1),
            ..self.clone()
        }
    }

    /// Domain of `arity`-tuples of 1-D locations, as a box in `arity` dimensions.
    /// Only `arity ≤ 2` over a 1-D base fits in a `BoxDomain`.
    pub fn product(&self, arity: usize) -> Result<Self> {
        if self.dim * arity > 2 {
            return Err(Error::Unsupported(format!(
                "product of {arity} copies of a {}-D domain",
                self.dim
            )));
        }
        let lo = [self.lower[0]; 2];
        let hi = [self.upper[0]; 2];
        Self::new(&lo[..arity], &hi[..arity], self.cells_per_axis)
    }
}
