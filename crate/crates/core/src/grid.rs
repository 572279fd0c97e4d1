//! Uniform 2D grid, the flat field storage it indexes, and a small 2-vector.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::LAMBDA_C;

/// Plain 2-vector used for positions, momenta and gradients.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl std::ops::Add for Vec2 {
    type Output = Vec2;
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl std::ops::Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl std::ops::Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl std::ops::Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// How the 5-point stencil treats cells beyond the grid edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Wrap-around; used by the dispersion and conservation test boxes.
    Periodic,
    /// Ghost cells are held at zero (a hard reflecting box). Production runs
    /// combine this with an absorbing sponge band.
    Fixed,
}

/// Uniform square-celled grid with its time step.
///
/// `origin` is the physical position of the *center* of cell `(0, 0)`; cell
/// `(ix, iy)` is centered at `origin + (ix*dx, iy*dx)`. Lengths and times are
/// natural units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dt: f64,
    pub origin: Vec2,
}

impl Grid2D {
    pub const MIN_CELLS: usize = 16;

    pub fn new(nx: usize, ny: usize, dx: f64, dt: f64, origin: Vec2) -> Result<Self> {
        if nx < Self::MIN_CELLS || ny < Self::MIN_CELLS {
            return Err(Error::config(format!(
                "grid must be at least {0}x{0} cells, got {1}x{2}",
                Self::MIN_CELLS,
                nx,
                ny
            )));
        }
        if !(dx > 0.0) || !(dt > 0.0) {
            return Err(Error::config("grid spacing and time step must be positive"));
        }
        let cfl_limit = dx / f64::sqrt(2.0);
        if dt > cfl_limit {
            return Err(Error::config(format!(
                "CFL condition violated: dt = {dt:.6} exceeds dx/sqrt(2) = {cfl_limit:.6}"
            )));
        }
        Ok(Grid2D { nx, ny, dx, dt, origin })
    }

    /// Build a grid covering at least `[x_range] x [y_range]` (natural units)
    /// at `cells_per_lambda_c` resolution, with `dt = 0.4 dx`.
    pub fn covering(
        cells_per_lambda_c: u32,
        x_range: (f64, f64),
        y_range: (f64, f64),
    ) -> Result<Self> {
        if cells_per_lambda_c == 0 {
            return Err(Error::config("resolution must be at least 1 cell per lambda_c"));
        }
        let dx = LAMBDA_C / cells_per_lambda_c as f64;
        let dt = 0.4 * dx;
        let nx = ((x_range.1 - x_range.0) / dx).ceil() as usize + 1;
        let ny = ((y_range.1 - y_range.0) / dx).ceil() as usize + 1;
        Grid2D::new(nx, ny, dx, dt, Vec2::new(x_range.0, y_range.0))
    }

    #[inline]
    pub fn x(&self, ix: usize) -> f64 {
        self.origin.x + ix as f64 * self.dx
    }

    #[inline]
    pub fn y(&self, iy: usize) -> f64 {
        self.origin.y + iy as f64 * self.dx
    }

    #[inline]
    pub fn pos(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(self.x(ix), self.y(iy))
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.y(self.ny - 1)
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dx
    }

    /// Total physical area covered by the cells.
    pub fn area(&self) -> f64 {
        self.cell_area() * (self.nx * self.ny) as f64
    }

    /// True if `pos` is at least `margin` inside the outermost cell centers.
    pub fn in_interior(&self, pos: Vec2, margin: f64) -> bool {
        pos.x >= self.origin.x + margin
            && pos.x <= self.x_max() - margin
            && pos.y >= self.origin.y + margin
            && pos.y <= self.y_max() - margin
    }
}

/// Flat row-major scalar field over a grid (`idx = iy * nx + ix`).
#[derive(Debug, Clone, PartialEq)]
pub struct Field2 {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Field2 {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Field2 { nx, ny, data: vec![0.0; nx * ny] }
    }

    pub fn constant(nx: usize, ny: usize, value: f64) -> Self {
        Field2 { nx, ny, data: vec![value; nx * ny] }
    }

    pub fn from_fn(grid: &Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut out = Field2::zeros(grid.nx, grid.ny);
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                out.data[iy * grid.nx + ix] = f(grid.x(ix), grid.y(iy));
            }
        }
        out
    }

    #[inline]
    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    #[inline]
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.data[iy * self.nx + ix]
    }

    #[inline]
    pub fn set(&mut self, ix: usize, iy: usize, v: f64) {
        self.data[iy * self.nx + ix] = v;
    }

    pub fn same_shape(&self, other: &Field2) -> bool {
        self.nx == other.nx && self.ny == other.ny
    }

    pub fn matches(&self, grid: &Grid2D) -> bool {
        self.nx == grid.nx && self.ny == grid.ny
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
