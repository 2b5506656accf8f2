//! Phase-mask retrieval for a prescribed focal-plane amplitude.
//!
//! Iterative Fourier-transform retrieval with a signal window: propagate the
//! current mask to the focal plane, impose the target magnitude inside the
//! window while keeping the phase, leave the field outside the window free,
//! propagate back and project onto the nearest phase-only mask (one phase per
//! pixel). The gap field is part of the forward model, so the mask compensates
//! for it automatically.

use std::f64::consts::TAU;

use ndarray::{Array2, Zip};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::fourier::{fraunhofer_with, inverse_fraunhofer_with, Fft2};
use super::{
    aperture_energy, focal_spacing, opa_efficiency, render, OpaError, OpticalSetup, Part, PhasedArray, PixelLayout,
};
use crate::grid::FieldGrid;

/// Treatment of the fixed zero-order field produced by the pixel gaps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroOrder {
    /// Ignore it; the target is used as given.
    Ignore,
    /// Add the gap far field to the target before imposing magnitudes.
    Superimpose,
    /// A stop of `radius` (meters) at the focal point; that disk is removed
    /// from the signal window.
    Block { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialPhase {
    Flat,
    /// Uniform on `[0, 2π)` from the configured seed.
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalConfig {
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
    pub zero_order: ZeroOrder,
    pub initial: InitialPhase,
    /// Round phases to this many equally spaced levels.
    pub quantization: Option<u32>,
    /// Rebalance the connected regions of the window toward their target
    /// power shares each iteration.
    pub region_feedback: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            seed: 0,
            zero_order: ZeroOrder::Ignore,
            initial: InitialPhase::Random,
            quantization: None,
            region_feedback: true,
        }
    }
}

/// Minimum iterations before the stall test may stop the loop.
const MIN_ITERS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievalReport {
    pub iterations: usize,
    /// Best amplitude correlation reached.
    pub correlation: f64,
    /// Best-so-far correlation after each iteration (non-decreasing).
    pub history: Vec<f64>,
    /// True when the loop stopped on the stall test rather than `max_iters`.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    /// The input array carrying the retrieved phase.
    pub array: PhasedArray,
    /// Focal-plane field produced by that mask.
    pub far_field: FieldGrid,
    pub report: RetrievalReport,
    /// Sample mask where the target magnitude was imposed.
    pub window: Array2<bool>,
}

/// Uncentred normalised cross-correlation `Σab / √(Σa²·Σb²)` over `window`.
pub fn amplitude_correlation(achieved: &Array2<f64>, target: &Array2<f64>, window: &Array2<bool>) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    Zip::from(achieved).and(target).and(window).for_each(|&a, &b, &w| {
        if w {
            ab += a * b;
            aa += a * a;
            bb += b * b;
        }
    });
    if aa == 0.0 || bb == 0.0 {
        0.0
    } else {
        ab / (aa * bb).sqrt()
    }
}

fn quantize(phase: f64, levels: Option<u32>) -> f64 {
    match levels {
        Some(n) if n > 0 => {
            let step = TAU / n as f64;
            ((phase / step).round() * step).rem_euclid(TAU)
        }
        _ => phase.rem_euclid(TAU),
    }
}

/// 4-connected components of `mask`; label 0 is background, regions are 1-based.
fn label_regions(mask: &Array2<bool>) -> (Array2<usize>, usize) {
    let (ny, nx) = mask.dim();
    let mut labels = Array2::zeros((ny, nx));
    let mut count = 0;
    let mut stack = Vec::new();
    for ((i, j), &m) in mask.indexed_iter() {
        if !m || labels[[i, j]] != 0 {
            continue;
        }
        count += 1;
        labels[[i, j]] = count;
        stack.push((i, j));
        while let Some((a, b)) = stack.pop() {
            let next = [(a.wrapping_sub(1), b), (a + 1, b), (a, b.wrapping_sub(1)), (a, b + 1)];
            for (p, q) in next {
                if p < ny && q < nx && mask[[p, q]] && labels[[p, q]] == 0 {
                    labels[[p, q]] = count;
                    stack.push((p, q));
                }
            }
        }
    }
    (labels, count)
}

/// Largest per-iteration change of a region gain.
const MAX_GAIN_STEP: f64 = 1.25;

/// Per-region amplitude gains that steer each region's share of the in-window
/// energy toward its share in the target.
struct RegionWeights {
    labels: Array2<usize>,
    wanted: Vec<f64>,
    gains: Vec<f64>,
    per_sample: Array2<f64>,
}

impl RegionWeights {
    fn new(window: &Array2<bool>, target_mag: &Array2<f64>) -> Self {
        let (labels, count) = label_regions(window);
        let mut wanted = vec![0.0; count];
        for (&l, &t) in labels.iter().zip(target_mag) {
            if l > 0 {
                wanted[l - 1] += t * t;
            }
        }
        let total: f64 = wanted.iter().sum();
        wanted.iter_mut().for_each(|w| *w /= total);
        Self { per_sample: Array2::ones(labels.dim()), labels, wanted, gains: vec![1.0; count] }
    }

    fn update(&mut self, magnitude: &Array2<f64>) {
        let mut got = vec![0.0; self.gains.len()];
        for (&l, &a) in self.labels.iter().zip(magnitude) {
            if l > 0 {
                got[l - 1] += a * a;
            }
        }
        let total: f64 = got.iter().sum();
        if total == 0.0 {
            return;
        }
        for ((g, &want), &have) in self.gains.iter_mut().zip(&self.wanted).zip(&got) {
            if have > 0.0 {
                *g *= (want / (have / total)).sqrt().clamp(1.0 / MAX_GAIN_STEP, MAX_GAIN_STEP);
            }
        }
        // Keep the imposed in-window energy equal to the target's.
        let norm = self.wanted.iter().zip(&self.gains).map(|(w, g)| w * g * g).sum::<f64>().sqrt();
        Zip::from(&mut self.per_sample).and(&self.labels).for_each(|s, &l| {
            if l > 0 {
                *s = self.gains[l - 1] / norm;
            }
        });
    }
}

/// Forward model with the per-sample weights precomputed.
struct Forward {
    layout: PixelLayout,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
    /// `i·f` per sample (active weight).
    active: Array2<Complex64>,
    /// `i·(1 - f)·e^{iφ_c}` per sample.
    gap: Array2<Complex64>,
    dx: f64,
    dy: f64,
}

impl Forward {
    fn new(array: &PhasedArray, incident: &FieldGrid) -> Result<Self, OpaError> {
        let layout = PixelLayout::new(array, incident)?;
        let mut active = Array2::zeros(incident.data().dim());
        let flat = array.clone().with_phase(Array2::zeros((array.rows(), array.cols())))?;
        render(&flat, incident, &layout, Part::Active, &mut active);
        let mut gap = Array2::zeros(incident.data().dim());
        render(array, incident, &layout, Part::Gap, &mut gap);
        Ok(Self {
            rows: layout.aperture_rows(array),
            cols: layout.aperture_cols(array),
            layout,
            active,
            gap,
            dx: incident.dx(),
            dy: incident.dy(),
        })
    }

    fn near_field(&self, phase: &Array2<f64>, out: &mut Array2<Complex64>) {
        let phasors = phase.mapv(|p| Complex64::from_polar(1.0, p));
        out.fill(Complex64::default());
        for i in self.rows.clone() {
            for j in self.cols.clone() {
                let ((m, n), _) = self.layout.locate(i, j);
                out[[i, j]] = self.active[[i, j]] * phasors[[m, n]] + self.gap[[i, j]];
            }
        }
    }

    /// Least-squares phase per pixel: `arg Σ conj(i·f)·t'`.
    fn project(&self, near: &Array2<Complex64>, shape: (usize, usize), levels: Option<u32>) -> Array2<f64> {
        let mut acc = Array2::<Complex64>::zeros(shape);
        for i in self.rows.clone() {
            for j in self.cols.clone() {
                let ((m, n), _) = self.layout.locate(i, j);
                acc[[m, n]] += self.active[[i, j]].conj() * near[[i, j]];
            }
        }
        acc.mapv(|c| quantize(c.arg(), levels))
    }
}

/// Retrieves a phase mask whose far field matches `|target|` inside the
/// signal window (the target's support, minus the zero-order stop if any).
///
/// Fails with [`OpaError::Infeasible`] when the target asks for more energy
/// than the aperture can deliver through the adjustable term. Running out of
/// iterations is not an error; the report carries the correlation reached.
pub fn retrieve_phase(
    target: &FieldGrid,
    array: &PhasedArray,
    incident: &FieldGrid,
    setup: &OpticalSetup,
    config: &RetrievalConfig,
) -> Result<Retrieval, OpaError> {
    let (du, dv) = focal_spacing(incident, setup);
    let matches = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    if target.data().dim() != incident.data().dim() || !matches(target.dx(), du) || !matches(target.dy(), dv) {
        return Err(OpaError::GridMismatch);
    }

    let flat = array.clone().with_phase(Array2::from_elem((array.rows(), array.cols()), array.gap_phase()))?;
    let budget = aperture_energy(array, incident)? * opa_efficiency(&flat, incident, setup)?;
    let demand = target.energy();
    if demand > budget * (1.0 + 1e-12) {
        return Err(OpaError::Infeasible { target: demand, budget });
    }

    let forward = Forward::new(array, incident)?;
    let mut plan = Fft2::new(incident.nx(), incident.ny());
    let shape = (array.rows(), array.cols());

    let mut window = target.data().mapv(|c| c.norm() > 0.0);
    let target_mag = match config.zero_order {
        ZeroOrder::Ignore => target.data().mapv(|c| c.norm()),
        ZeroOrder::Superimpose => {
            let gap = FieldGrid::new(forward.gap.clone(), forward.dx, forward.dy)?;
            let fixed = fraunhofer_with(&mut plan, &gap, setup);
            Zip::from(target.data()).and(fixed.data()).map_collect(|t, g| (t + g).norm())
        }
        ZeroOrder::Block { radius } => {
            let r2 = radius * radius;
            for ((i, j), w) in window.indexed_iter_mut() {
                if target.x(j).powi(2) + target.y(i).powi(2) <= r2 {
                    *w = false;
                }
            }
            target.data().mapv(|c| c.norm())
        }
    };
    if !Zip::from(&target_mag).and(&window).any(|&t, &w| w && t > 0.0) {
        return Err(OpaError::InvalidSetup("target is zero throughout the signal window"));
    }

    let mut phase = match config.initial {
        InitialPhase::Flat => Array2::zeros(shape),
        InitialPhase::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            Array2::from_shape_simple_fn(shape, || rng.random::<f64>() * TAU)
        }
    };
    phase.mapv_inplace(|p| quantize(p, config.quantization));

    let mut near = Array2::zeros(incident.data().dim());
    let mut best = (f64::NEG_INFINITY, phase.clone());
    let mut history = Vec::with_capacity(config.max_iters);
    let mut previous: Option<f64> = None;
    let mut converged = false;
    let mut region_weights = RegionWeights::new(&window, &target_mag);

    for it in 0..config.max_iters.max(1) {
        forward.near_field(&phase, &mut near);
        let near_grid = FieldGrid::new(std::mem::take(&mut near), forward.dx, forward.dy)?;
        let mut far = fraunhofer_with(&mut plan, &near_grid, setup);
        near = near_grid.into_data();

        let magnitude = far.data().mapv(|c| c.norm());
        let rho = amplitude_correlation(&magnitude, &target_mag, &window);
        if rho > best.0 {
            best = (rho, phase.clone());
        }
        history.push(best.0);
        if let Some(prev) = previous {
            if it + 1 >= MIN_ITERS && (rho - prev).abs() < config.tol {
                converged = true;
                break;
            }
        }
        previous = Some(rho);
        if it + 1 == config.max_iters {
            break;
        }

        if config.region_feedback {
            region_weights.update(&magnitude);
        }
        Zip::from(far.data_mut()).and(&target_mag).and(&window).and(&region_weights.per_sample).for_each(
            |c, &t, &w, &g| {
                if w {
                    let arg = if c.norm() > 0.0 { c.arg() } else { 0.0 };
                    *c = Complex64::from_polar(t * g, arg);
                }
            },
        );
        let back = inverse_fraunhofer_with(&mut plan, &far, setup);
        phase = forward.project(back.data(), shape, config.quantization);
    }

    let (correlation, phase) = best;
    let result_array = array.clone().with_phase(phase.clone())?;
    forward.near_field(result_array.phase(), &mut near);
    let far_field = fraunhofer_with(&mut plan, &FieldGrid::new(near, forward.dx, forward.dy)?, setup);
    Ok(Retrieval {
        array: result_array,
        far_field,
        report: RetrievalReport { iterations: history.len(), correlation, history, converged },
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opa::{array_grid, build_reflectance, fraunhofer, uniform_incident};

    fn setup() -> OpticalSetup {
        OpticalSetup::new(532e-9, 0.25).unwrap()
    }

    #[test]
    fn correlation_bounds() {
        let a = Array2::from_shape_fn((4, 4), |(i, j)| (i + j) as f64);
        let w = Array2::from_elem((4, 4), true);
        assert!((amplitude_correlation(&a, &a, &w) - 1.0).abs() < 1e-15);
        assert!((amplitude_correlation(&a, &a.mapv(|v| 3.0 * v), &w) - 1.0).abs() < 1e-15);
        assert_eq!(amplitude_correlation(&a, &Array2::zeros((4, 4)), &w), 0.0);
    }

    #[test]
    fn quantization_levels() {
        assert_eq!(quantize(0.1, Some(4)), 0.0);
        assert!((quantize(1.5, Some(4)) - TAU / 4.0).abs() < 1e-15);
        assert!(quantize(-0.1, None) > 6.0);
    }

    #[test]
    fn rejects_mismatched_target() {
        let array = PhasedArray::new(4, 4, 4e-6, 4e-6).unwrap();
        let inc = uniform_incident(&array_grid(&array, 4, 2).unwrap());
        let target = FieldGrid::zeros(32, 32, 1.0, 1.0).unwrap();
        assert_eq!(
            retrieve_phase(&target, &array, &inc, &setup(), &RetrievalConfig::default()),
            Err(OpaError::GridMismatch)
        );
    }

    #[test]
    fn rejects_overdemanding_target() {
        let array = PhasedArray::new(4, 4, 4e-6, 4e-6).unwrap();
        let inc = uniform_incident(&array_grid(&array, 4, 2).unwrap());
        let far = fraunhofer(&build_reflectance(&array, &inc).unwrap(), &setup());
        let greedy = far.scaled(1.5);
        assert!(matches!(
            retrieve_phase(&greedy, &array, &inc, &setup(), &RetrievalConfig::default()),
            Err(OpaError::Infeasible { .. })
        ));
    }

    #[test]
    fn flat_start_is_fixed_point() {
        let array = PhasedArray::new(8, 8, 4e-6, 4e-6).unwrap();
        let inc = uniform_incident(&array_grid(&array, 4, 2).unwrap());
        let far = fraunhofer(&build_reflectance(&array, &inc).unwrap(), &setup());
        let cfg = RetrievalConfig { initial: InitialPhase::Flat, max_iters: 10, ..Default::default() };
        let r = retrieve_phase(&far, &array, &inc, &setup(), &cfg).unwrap();
        assert!(r.report.correlation > 0.999_999);
        let p0 = r.array.phase()[[0, 0]];
        for &p in r.array.phase() {
            let d = (p - p0).rem_euclid(TAU);
            assert!(d.min(TAU - d) < 1e-9);
        }
    }
}
