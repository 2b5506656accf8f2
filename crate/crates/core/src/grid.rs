//! Uniformly sampled planes: complex fields and real power-density maps.

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum GridError {
    #[error("grid spacing must be positive and finite (got {dx}, {dy})")]
    BadSpacing { dx: f64, dy: f64 },
    #[error("sample counts must be even and non-zero (got {nx}x{ny})")]
    OddCounts { nx: usize, ny: usize },
    #[error("grids do not match: {0}")]
    Mismatch(&'static str),
    #[error("window half-widths must be positive")]
    BadWindow,
}

/// Complex amplitude samples on an origin-centred grid.
///
/// Data is stored `[row, col] = [y, x]`; sample `(i, j)` sits at
/// `x = (j - nx/2)·dx`, `y = (i - ny/2)·dy`, so index `n/2` is the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    data: Array2<Complex64>,
    dx: f64,
    dy: f64,
}

impl FieldGrid {
    pub fn new(data: Array2<Complex64>, dx: f64, dy: f64) -> Result<Self, GridError> {
        if !(dx > 0.0 && dy > 0.0 && dx.is_finite() && dy.is_finite()) {
            return Err(GridError::BadSpacing { dx, dy });
        }
        let (ny, nx) = data.dim();
        if nx == 0 || ny == 0 || nx % 2 != 0 || ny % 2 != 0 {
            return Err(GridError::OddCounts { nx, ny });
        }
        Ok(Self { data, dx, dy })
    }

    pub fn zeros(nx: usize, ny: usize, dx: f64, dy: f64) -> Result<Self, GridError> {
        Self::new(Array2::zeros((ny, nx)), dx, dy)
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn<F: Fn(f64, f64) -> Complex64>(
        nx: usize,
        ny: usize,
        dx: f64,
        dy: f64,
        f: F,
    ) -> Result<Self, GridError> {
        let mut g = Self::zeros(nx, ny, dx, dy)?;
        let (hx, hy) = ((nx / 2) as f64, (ny / 2) as f64);
        for ((i, j), v) in g.data.indexed_iter_mut() {
            *v = f((j as f64 - hx) * dx, (i as f64 - hy) * dy);
        }
        Ok(g)
    }

    pub fn nx(&self) -> usize {
        self.data.ncols()
    }

    pub fn ny(&self) -> usize {
        self.data.nrows()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn x(&self, col: usize) -> f64 {
        (col as f64 - (self.nx() / 2) as f64) * self.dx
    }

    pub fn y(&self, row: usize) -> f64 {
        (row as f64 - (self.ny() / 2) as f64) * self.dy
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    /// `Σ|a|²·dx·dy`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.cell_area()
    }

    pub fn same_geometry(&self, other: &FieldGrid) -> bool {
        self.data.dim() == other.data.dim() && self.dx == other.dx && self.dy == other.dy
    }

    pub fn scaled(&self, k: f64) -> FieldGrid {
        FieldGrid { data: self.data.mapv(|c| c * k), dx: self.dx, dy: self.dy }
    }

    /// Rescales so that [`energy`](Self::energy) equals `target`.
    pub fn with_energy(&self, target: f64) -> FieldGrid {
        let e = self.energy();
        if e == 0.0 {
            return self.clone();
        }
        self.scaled((target / e).sqrt())
    }

    /// `|a|²` as a power-density map on the same sample positions.
    pub fn intensity(&self) -> PowerDensityMap {
        PowerDensityMap {
            values: self.data.mapv(|c| c.norm_sqr()),
            x0: self.x(0),
            y0: self.y(0),
            dx: self.dx,
            dy: self.dy,
        }
    }
}

/// Rectangular observation window centred on the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub half_width: f64,
    pub half_height: f64,
}

impl Window {
    pub fn square(half_width: f64) -> Self {
        Self { half_width, half_height: half_width }
    }
}

/// Default map resolution per axis.
pub const DEFAULT_MAP_RESOLUTION: usize = 256;

/// Non-negative real density (W/m²) on a uniform grid.
///
/// Sample `(i, j)` (row, col) sits at `(x0 + j·dx, y0 + i·dy)` and stands for
/// the cell of size `dx × dy` centred there.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDensityMap {
    values: Array2<f64>,
    x0: f64,
    y0: f64,
    dx: f64,
    dy: f64,
}

impl PowerDensityMap {
    /// Cell-centred grid covering `window` with `nx × ny` cells, filled with `f`.
    pub fn from_window<F: Fn(f64, f64) -> f64>(
        window: Window,
        nx: usize,
        ny: usize,
        f: F,
    ) -> Result<Self, GridError> {
        if !(window.half_width > 0.0 && window.half_height > 0.0) {
            return Err(GridError::BadWindow);
        }
        if nx == 0 || ny == 0 {
            return Err(GridError::OddCounts { nx, ny });
        }
        let dx = 2.0 * window.half_width / nx as f64;
        let dy = 2.0 * window.half_height / ny as f64;
        let x0 = -window.half_width + 0.5 * dx;
        let y0 = -window.half_height + 0.5 * dy;
        let values = Array2::from_shape_fn((ny, nx), |(i, j)| f(x0 + j as f64 * dx, y0 + i as f64 * dy));
        Ok(Self { values, x0, y0, dx, dy })
    }

    pub fn from_parts(values: Array2<f64>, x0: f64, y0: f64, dx: f64, dy: f64) -> Result<Self, GridError> {
        if !(dx > 0.0 && dy > 0.0) {
            return Err(GridError::BadSpacing { dx, dy });
        }
        Ok(Self { values, x0, y0, dx, dy })
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn nx(&self) -> usize {
        self.values.ncols()
    }

    pub fn ny(&self) -> usize {
        self.values.nrows()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dy(&self) -> f64 {
        self.dy
    }

    pub fn x(&self, col: usize) -> f64 {
        self.x0 + col as f64 * self.dx
    }

    pub fn y(&self, row: usize) -> f64 {
        self.y0 + row as f64 * self.dy
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    /// Outer edges of the covered area: `(x_min, x_max, y_min, y_max)`.
    pub fn extent(&self) -> (f64, f64, f64, f64) {
        (
            self.x0 - 0.5 * self.dx,
            self.x0 + (self.nx() as f64 - 0.5) * self.dx,
            self.y0 - 0.5 * self.dy,
            self.y0 + (self.ny() as f64 - 0.5) * self.dy,
        )
    }

    /// Sum of density times cell area.
    pub fn total_power(&self) -> f64 {
        self.values.sum() * self.cell_area()
    }

    pub fn scaled(&self, k: f64) -> PowerDensityMap {
        PowerDensityMap { values: self.values.mapv(|v| v * k), x0: self.x0, y0: self.y0, dx: self.dx, dy: self.dy }
    }

    /// Grid position of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = (0, 0);
        let mut best_v = f64::NEG_INFINITY;
        for ((i, j), &v) in self.values.indexed_iter() {
            if v > best_v {
                best_v = v;
                best = (i, j);
            }
        }
        (self.x(best.1), self.y(best.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_grid_is_origin_centred() {
        let g = FieldGrid::zeros(8, 4, 0.5, 2.0).unwrap();
        assert_eq!(g.x(4), 0.0);
        assert_eq!(g.y(2), 0.0);
        assert_eq!(g.x(0), -2.0);
        assert!(FieldGrid::zeros(7, 4, 1.0, 1.0).is_err());
        assert!(FieldGrid::zeros(8, 4, 0.0, 1.0).is_err());
    }

    #[test]
    fn energy_and_rescale() {
        let g = FieldGrid::from_fn(4, 4, 0.5, 0.5, |_, _| Complex64::new(1.0, 1.0)).unwrap();
        assert!((g.energy() - 16.0 * 2.0 * 0.25).abs() < 1e-15);
        assert!((g.with_energy(3.0).energy() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn map_is_cell_centred_and_symmetric() {
        let m = PowerDensityMap::from_window(Window::square(1.0), 4, 4, |x, y| x + 10.0 * y).unwrap();
        assert_eq!(m.x(0), -0.75);
        assert_eq!(m.x(3), 0.75);
        assert_eq!(m.extent(), (-1.0, 1.0, -1.0, 1.0));
        assert!(m.values().sum().abs() < 1e-12);
    }
}
