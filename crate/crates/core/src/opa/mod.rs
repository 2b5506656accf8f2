//! Optical phased array (OPA) surfaces.
//!
//! The array is an `rows × cols` grid of square phase pixels of side `d` on a
//! pitch `Δd`. Light landing on the active part of pixel `(m, n)` picks up the
//! programmable phase `φ_mn`; light landing in the gaps between pixels picks up
//! the fixed phase `φ_c`. A lens maps the reflected field onto its focal plane
//! as a scaled Fourier transform.

pub mod fourier;
pub mod retrieval;

use std::f64::consts::TAU;

use ndarray::Array2;
use num_complex::Complex64;
use thiserror::Error;

use crate::grid::{FieldGrid, GridError};
use crate::ma::GaussianBeam;

pub use fourier::{focal_spacing, fraunhofer, fraunhofer_with, inverse_fraunhofer, Fft2};
pub use retrieval::{retrieve_phase, InitialPhase, Retrieval, RetrievalConfig, RetrievalReport, ZeroOrder};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum OpaError {
    #[error("invalid phased array: {0}")]
    InvalidArray(&'static str),
    #[error("invalid optical setup: {0}")]
    InvalidSetup(&'static str),
    #[error("sampling error: {0}")]
    Sampling(String),
    #[error("target energy {target:.6e} exceeds the deliverable budget {budget:.6e}")]
    Infeasible { target: f64, budget: f64 },
    #[error("target grid does not match the focal-plane grid of the incident field")]
    GridMismatch,
    #[error("reflected field carries no energy")]
    ZeroField,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Wavelength and lens focal length, both in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalSetup {
    pub wavelength: f64,
    pub focal_length: f64,
}

impl OpticalSetup {
    pub fn new(wavelength: f64, focal_length: f64) -> Result<Self, OpaError> {
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(OpaError::InvalidSetup("wavelength must be positive"));
        }
        if !(focal_length > 0.0 && focal_length.is_finite()) {
            return Err(OpaError::InvalidSetup("focal length must be positive"));
        }
        Ok(Self { wavelength, focal_length })
    }

    pub fn wave_number(&self) -> f64 {
        TAU / self.wavelength
    }
}

fn wrap(phase: f64) -> f64 {
    let w = phase.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhasedArray {
    pitch: f64,
    active: f64,
    phase: Array2<f64>,
    gap_phase: f64,
}

impl PhasedArray {
    /// Flat (all-zero) phase, zero gap phase.
    pub fn new(rows: usize, cols: usize, pitch: f64, active: f64) -> Result<Self, OpaError> {
        if rows == 0 || cols == 0 {
            return Err(OpaError::InvalidArray("array needs at least one pixel"));
        }
        if !(pitch > 0.0 && pitch.is_finite()) {
            return Err(OpaError::InvalidArray("pitch must be positive"));
        }
        if !(active > 0.0 && active <= pitch) {
            return Err(OpaError::InvalidArray("active pixel size must lie in (0, pitch]"));
        }
        Ok(Self { pitch, active, phase: Array2::zeros((rows, cols)), gap_phase: 0.0 })
    }

    /// Pixel size chosen so that `(d/Δd)²` equals `fill_factor`.
    pub fn with_fill_factor(rows: usize, cols: usize, pitch: f64, fill_factor: f64) -> Result<Self, OpaError> {
        if !(fill_factor > 0.0 && fill_factor <= 1.0) {
            return Err(OpaError::InvalidArray("fill factor must lie in (0, 1]"));
        }
        Self::new(rows, cols, pitch, (pitch * fill_factor.sqrt()).min(pitch))
    }

    pub fn with_gap_phase(mut self, gap_phase: f64) -> Self {
        self.gap_phase = wrap(gap_phase);
        self
    }

    pub fn with_phase(mut self, phase: Array2<f64>) -> Result<Self, OpaError> {
        self.set_phase(phase)?;
        Ok(self)
    }

    /// Replaces the phase grid; entries are wrapped into `[0, 2π)`.
    pub fn set_phase(&mut self, phase: Array2<f64>) -> Result<(), OpaError> {
        if phase.dim() != self.phase.dim() {
            return Err(OpaError::InvalidArray("phase grid shape does not match the array"));
        }
        if phase.iter().any(|p| !p.is_finite()) {
            return Err(OpaError::InvalidArray("phase entries must be finite"));
        }
        self.phase = phase.mapv(wrap);
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.phase.nrows()
    }

    pub fn cols(&self) -> usize {
        self.phase.ncols()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn active(&self) -> f64 {
        self.active
    }

    pub fn gap_phase(&self) -> f64 {
        self.gap_phase
    }

    pub fn phase(&self) -> &Array2<f64> {
        &self.phase
    }

    pub fn fill_factor(&self) -> f64 {
        (self.active / self.pitch).powi(2)
    }

    /// Physical aperture `(width, height)` = `(cols·Δd, rows·Δd)`.
    pub fn aperture(&self) -> (f64, f64) {
        (self.cols() as f64 * self.pitch, self.rows() as f64 * self.pitch)
    }
}

/// How an array's pixels map onto the samples of a particular grid.
///
/// Pixel `(m, n)` covers sample rows `row0 + m·spp_y ..` and columns
/// `col0 + n·spp_x ..`; the aperture is centred on the grid origin to within
/// half a sample. `frac_x[k]·frac_y[l]` is the fraction of sample `(l, k)`
/// (pixel-local indices) covered by the active square.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PixelLayout {
    spp_x: usize,
    spp_y: usize,
    col0: usize,
    row0: usize,
    frac_x: Vec<f64>,
    frac_y: Vec<f64>,
}

fn samples_per_pitch(pitch: f64, spacing: f64) -> Result<usize, OpaError> {
    let ratio = pitch / spacing;
    let n = ratio.round();
    if (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
        return Err(OpaError::Sampling(format!("pitch is {ratio:.6} samples, not an integer")));
    }
    if n < 4.0 {
        return Err(OpaError::Sampling(format!("need at least 4 samples per pitch, got {n}")));
    }
    Ok(n as usize)
}

fn active_fractions(spp: usize, active_samples: f64) -> Vec<f64> {
    let lo = (spp as f64 - active_samples) / 2.0;
    let hi = lo + active_samples;
    (0..spp)
        .map(|k| {
            let (a, b) = (k as f64, k as f64 + 1.0);
            (b.min(hi) - a.max(lo)).clamp(0.0, 1.0)
        })
        .collect()
}

impl PixelLayout {
    pub(crate) fn new(array: &PhasedArray, grid: &FieldGrid) -> Result<Self, OpaError> {
        let spp_x = samples_per_pitch(array.pitch, grid.dx())?;
        let spp_y = samples_per_pitch(array.pitch, grid.dy())?;
        let (wx, wy) = (array.cols() * spp_x, array.rows() * spp_y);
        if wx > grid.nx() || wy > grid.ny() {
            return Err(OpaError::Sampling(format!(
                "grid {}x{} does not cover the {}x{}-sample aperture",
                grid.nx(),
                grid.ny(),
                wx,
                wy
            )));
        }
        Ok(Self {
            spp_x,
            spp_y,
            col0: grid.nx() / 2 - wx / 2,
            row0: grid.ny() / 2 - wy / 2,
            frac_x: active_fractions(spp_x, array.active / grid.dx()),
            frac_y: active_fractions(spp_y, array.active / grid.dy()),
        })
    }

    pub(crate) fn aperture_rows(&self, array: &PhasedArray) -> std::ops::Range<usize> {
        self.row0..self.row0 + array.rows() * self.spp_y
    }

    pub(crate) fn aperture_cols(&self, array: &PhasedArray) -> std::ops::Range<usize> {
        self.col0..self.col0 + array.cols() * self.spp_x
    }

    /// Pixel index and active fraction for an in-aperture sample.
    #[inline]
    pub(crate) fn locate(&self, row: usize, col: usize) -> ((usize, usize), f64) {
        let (r, c) = (row - self.row0, col - self.col0);
        ((r / self.spp_y, c / self.spp_x), self.frac_y[r % self.spp_y] * self.frac_x[c % self.spp_x])
    }
}

/// Which part of the reflectance to synthesise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Part {
    Full,
    Gap,
    Active,
}

pub(crate) fn render(
    array: &PhasedArray,
    incident: &FieldGrid,
    layout: &PixelLayout,
    part: Part,
    out: &mut Array2<Complex64>,
) {
    out.fill(Complex64::default());
    let gap = Complex64::from_polar(1.0, array.gap_phase);
    let phasors = array.phase.mapv(|p| Complex64::from_polar(1.0, p));
    let inc = incident.data();
    for i in layout.aperture_rows(array) {
        for j in layout.aperture_cols(array) {
            let ((m, n), f) = layout.locate(i, j);
            let r = match part {
                Part::Full => phasors[[m, n]] * f + gap * (1.0 - f),
                Part::Gap => gap * (1.0 - f),
                Part::Active => phasors[[m, n]] * f,
            };
            out[[i, j]] = inc[[i, j]] * r;
        }
    }
}

fn reflectance_part(array: &PhasedArray, incident: &FieldGrid, part: Part) -> Result<FieldGrid, OpaError> {
    let layout = PixelLayout::new(array, incident)?;
    let mut out = Array2::zeros(incident.data().dim());
    render(array, incident, &layout, part, &mut out);
    Ok(FieldGrid::new(out, incident.dx(), incident.dy())?)
}

/// Reflected near field `t(x, y)`.
///
/// Samples inside a pixel's active square carry `i·e^{iφ_mn}`, samples in the
/// gaps carry `i·e^{iφ_c}`, samples outside the aperture are zero. A sample
/// straddling an active edge carries the area-weighted mix of the two.
pub fn build_reflectance(array: &PhasedArray, incident: &FieldGrid) -> Result<FieldGrid, OpaError> {
    reflectance_part(array, incident, Part::Full)
}

/// Gap-only reflectance (active samples zeroed).
pub fn gap_reflectance(array: &PhasedArray, incident: &FieldGrid) -> Result<FieldGrid, OpaError> {
    reflectance_part(array, incident, Part::Gap)
}

/// Far field of the gaps alone; it cannot be steered by the pixel phases.
pub fn non_adjustable_field(
    array: &PhasedArray,
    incident: &FieldGrid,
    setup: &OpticalSetup,
) -> Result<FieldGrid, OpaError> {
    Ok(fraunhofer(&gap_reflectance(array, incident)?, setup))
}

/// Share of far-field energy carried by the adjustable (active-pixel) term:
/// `energy(T - T_gap) / energy(T)`.
pub fn opa_efficiency(array: &PhasedArray, incident: &FieldGrid, setup: &OpticalSetup) -> Result<f64, OpaError> {
    let layout = PixelLayout::new(array, incident)?;
    let mut plan = Fft2::new(incident.nx(), incident.ny());
    let mut buf = Array2::zeros(incident.data().dim());
    render(array, incident, &layout, Part::Full, &mut buf);
    let total = fraunhofer_with(&mut plan, &FieldGrid::new(buf.clone(), incident.dx(), incident.dy())?, setup);
    render(array, incident, &layout, Part::Gap, &mut buf);
    let gap = fraunhofer_with(&mut plan, &FieldGrid::new(buf, incident.dx(), incident.dy())?, setup);
    let e_total = total.energy();
    if e_total == 0.0 {
        return Err(OpaError::ZeroField);
    }
    let adjustable: f64 = total.data().iter().zip(gap.data()).map(|(t, g)| (t - g).norm_sqr()).sum::<f64>()
        * total.cell_area();
    Ok(adjustable / e_total)
}

/// Near-field grid for `array` with `samples_per_pitch` samples per pixel
/// pitch, zero-padded by `padding` on each axis (counts rounded up to even).
pub fn array_grid(array: &PhasedArray, samples_per_pitch: usize, padding: usize) -> Result<FieldGrid, OpaError> {
    if samples_per_pitch < 4 {
        return Err(OpaError::Sampling("need at least 4 samples per pitch".into()));
    }
    let padding = padding.max(1);
    let even = |n: usize| n + n % 2;
    let nx = even(array.cols() * samples_per_pitch * padding);
    let ny = even(array.rows() * samples_per_pitch * padding);
    let d = array.pitch / samples_per_pitch as f64;
    Ok(FieldGrid::zeros(nx, ny, d, d)?)
}

/// Uniform unit-amplitude illumination on `grid`.
pub fn uniform_incident(grid: &FieldGrid) -> FieldGrid {
    resample(grid, |_, _| Complex64::new(1.0, 0.0))
}

/// Gaussian illumination with amplitude `√κ·(A₀/ω)·exp(-r²/ω²)`, so that
/// `|i|²` equals the beam's power density. Only the transverse part of the
/// beam centre is used.
pub fn gaussian_incident(grid: &FieldGrid, beam: &GaussianBeam) -> FieldGrid {
    let a = (beam.kappa).sqrt() * beam.amplitude / beam.waist;
    let w2 = beam.waist * beam.waist;
    let (cx, cy) = (beam.center.x, beam.center.y);
    resample(grid, |x, y| {
        let r2 = (x - cx).powi(2) + (y - cy).powi(2);
        Complex64::new(a * (-r2 / w2).exp(), 0.0)
    })
}

fn resample<F: Fn(f64, f64) -> Complex64>(grid: &FieldGrid, f: F) -> FieldGrid {
    FieldGrid::from_fn(grid.nx(), grid.ny(), grid.dx(), grid.dy(), f).expect("geometry already validated")
}

/// Incident energy falling inside the array aperture.
pub fn aperture_energy(array: &PhasedArray, incident: &FieldGrid) -> Result<f64, OpaError> {
    let layout = PixelLayout::new(array, incident)?;
    let inc = incident.data();
    let mut e = 0.0;
    for i in layout.aperture_rows(array) {
        for j in layout.aperture_cols(array) {
            e += inc[[i, j]].norm_sqr();
        }
    }
    Ok(e * incident.cell_area())
}
