//! Centred 2-D Fourier transforms mapping the array plane to a lens focal plane.
//!
//! The focal-plane field is
//! `T(u, v) = (1/λf) ∬ t(x, y) exp(-2πi(xu + yv)/λf) dx dy`,
//! discretised as `T[k] = (ΔxΔy/λf)·Σ_j t[j]·exp(-2πi (j - n/2)(k - n/2)/n)`
//! with focal-plane spacing `Δu = λf/(nΔx)`. With that scale the discrete
//! Parseval identity `Σ|T|²ΔuΔv = Σ|t|²ΔxΔy` holds exactly.

use std::sync::Arc;

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::OpticalSetup;
use crate::grid::FieldGrid;

/// Planned forward and inverse transforms for one grid shape.
///
/// Rows and columns are transformed in parallel; each 1-D transform is exact
/// and independent, so the result does not depend on the thread count.
pub struct Fft2 {
    nx: usize,
    ny: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

fn transform_rows(data: &mut Array2<Complex64>, fft: &Arc<dyn Fft<f64>>) {
    let scratch_len = fft.get_inplace_scratch_len();
    data.axis_iter_mut(Axis(0)).into_par_iter().for_each_init(
        || vec![Complex64::default(); scratch_len],
        |scratch, mut r| match r.as_slice_mut() {
            Some(s) => fft.process_with_scratch(s, scratch),
            None => {
                let mut buf = r.to_vec();
                fft.process_with_scratch(&mut buf, scratch);
                r.iter_mut().zip(buf).for_each(|(d, s)| *d = s);
            }
        },
    );
}

impl Fft2 {
    pub fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            row_fwd: planner.plan_fft_forward(nx),
            row_inv: planner.plan_fft_inverse(nx),
            col_fwd: planner.plan_fft_forward(ny),
            col_inv: planner.plan_fft_inverse(ny),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    /// Unnormalised centred transform in place; `inverse` flips the kernel sign.
    pub fn centered(&mut self, data: &mut Array2<Complex64>, inverse: bool) {
        assert_eq!(data.dim(), (self.ny, self.nx), "grid shape does not match the plan");
        roll_half(data);
        let (row, col) = if inverse { (&self.row_inv, &self.col_inv) } else { (&self.row_fwd, &self.col_fwd) };
        transform_rows(data, row);
        let mut columns = data.t().as_standard_layout().into_owned();
        transform_rows(&mut columns, col);
        data.assign(&columns.t());
        roll_half(data);
    }
}

/// Cyclic shift by half the length on both axes (fftshift == ifftshift for even sizes).
fn roll_half(data: &mut Array2<Complex64>) {
    let (ny, nx) = data.dim();
    let (hy, hx) = (ny / 2, nx / 2);
    for mut r in data.axis_iter_mut(Axis(0)) {
        if let Some(s) = r.as_slice_mut() {
            s.rotate_left(hx);
        } else {
            let mut v = r.to_vec();
            v.rotate_left(hx);
            r.iter_mut().zip(v).for_each(|(d, s)| *d = s);
        }
    }
    for i in 0..hy {
        for j in 0..nx {
            data.swap((i, j), (i + hy, j));
        }
    }
}

/// Focal-plane spacing `(Δu, Δv)` for a near-field grid.
pub fn focal_spacing(field: &FieldGrid, setup: &OpticalSetup) -> (f64, f64) {
    let lf = setup.wavelength * setup.focal_length;
    (lf / (field.nx() as f64 * field.dx()), lf / (field.ny() as f64 * field.dy()))
}

/// Forward transform using a caller-owned plan (avoids replanning in loops).
pub fn fraunhofer_with(plan: &mut Fft2, field: &FieldGrid, setup: &OpticalSetup) -> FieldGrid {
    let (du, dv) = focal_spacing(field, setup);
    let scale = field.cell_area() / (setup.wavelength * setup.focal_length);
    let mut data = field.data().clone();
    plan.centered(&mut data, false);
    data.mapv_inplace(|c| c * scale);
    FieldGrid::new(data, du, dv).expect("even counts and positive spacing carry over")
}

/// Inverse of [`fraunhofer_with`]: focal-plane field back to the array plane.
pub fn inverse_fraunhofer_with(plan: &mut Fft2, far: &FieldGrid, setup: &OpticalSetup) -> FieldGrid {
    let lf = setup.wavelength * setup.focal_length;
    let dx = lf / (far.nx() as f64 * far.dx());
    let dy = lf / (far.ny() as f64 * far.dy());
    let n = (far.nx() * far.ny()) as f64;
    // forward scale was dx·dy/λf; the unnormalised inverse adds a factor n
    let scale = lf / (dx * dy * n);
    let mut data = far.data().clone();
    plan.centered(&mut data, true);
    data.mapv_inplace(|c| c * scale);
    FieldGrid::new(data, dx, dy).expect("even counts and positive spacing carry over")
}

/// Far field of `field` on the lens focal plane.
pub fn fraunhofer(field: &FieldGrid, setup: &OpticalSetup) -> FieldGrid {
    let mut plan = Fft2::new(field.nx(), field.ny());
    fraunhofer_with(&mut plan, field, setup)
}

pub fn inverse_fraunhofer(far: &FieldGrid, setup: &OpticalSetup) -> FieldGrid {
    let mut plan = Fft2::new(far.nx(), far.ny());
    inverse_fraunhofer_with(&mut plan, far, setup)
}
