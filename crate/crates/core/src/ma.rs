//! Micro-mirror array (MA) surfaces.
//!
//! Every element is a flat square mirror that redirects its share of an
//! incident Gaussian beam toward a receiver. The receiver-plane density is the
//! superposition of the per-element Gaussian patches, each attenuated by the
//! cosine of the element's deflection angle and clipped to the spot region.

use std::fmt;

use ndarray::Array2;
use rayon::prelude::*;
use thiserror::Error;

use crate::geom::{deflected_normal, deflection_angle, rotation_between, GeomError, RotationMatrix, UnitVec3, Vec3};
use crate::grid::{GridError, PowerDensityMap, Window};
use crate::quadrature::{integrate_disk, integrate_rect, DEFAULT_REL_TOL};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MaError {
    #[error("invalid beam: {0}")]
    InvalidBeam(&'static str),
    #[error("invalid array: {0}")]
    InvalidArray(&'static str),
    #[error("element ({row}, {col}): {source}")]
    Geometry { row: usize, col: usize, source: GeomError },
    #[error("target lies in the array plane")]
    TargetInArrayPlane,
    #[error("aim solution has no active elements")]
    EmptyAim,
    #[error("aim solution covers {got} elements, array has {expected}")]
    AimMismatch { expected: usize, got: usize },
    #[error("ring layout mismatch: {0}")]
    LayoutMismatch(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Gaussian illumination on the array plane.
///
/// Power density is `κ(A₀/ω)²·exp(-2r²/ω²)` with `r` measured from `center`
/// in the array plane; total power is `πκA₀²/2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBeam {
    pub amplitude: f64,
    pub waist: f64,
    pub kappa: f64,
    pub center: Vec3,
    pub direction: UnitVec3,
}

impl GaussianBeam {
    pub fn new(amplitude: f64, waist: f64, kappa: f64, center: Vec3, direction: Vec3) -> Result<Self, MaError> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(MaError::InvalidBeam("amplitude must be positive"));
        }
        if !(waist > 0.0 && waist.is_finite()) {
            return Err(MaError::InvalidBeam("waist must be positive"));
        }
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(MaError::InvalidBeam("power factor must be positive"));
        }
        if !center.is_finite() {
            return Err(MaError::InvalidBeam("center must be finite"));
        }
        let direction = UnitVec3::normalize(direction).map_err(|_| MaError::InvalidBeam("direction must be non-zero"))?;
        Ok(Self { amplitude, waist, kappa, center, direction })
    }

    /// Unit-power-factor beam travelling along -z, centred on the origin.
    pub fn normal_incidence(amplitude: f64, waist: f64) -> Result<Self, MaError> {
        Self::new(amplitude, waist, 1.0, Vec3::ZERO, Vec3::new(0.0, 0.0, -1.0))
    }

    pub fn with_center(mut self, center: Vec3) -> Self {
        self.center = center;
        self
    }

    /// Total beam power `P₀ = πκA₀²/2`.
    pub fn total_power(&self) -> f64 {
        std::f64::consts::PI * self.kappa * self.amplitude * self.amplitude / 2.0
    }

    /// Peak density `κA₀²/ω²`.
    pub fn peak_density(&self) -> f64 {
        self.kappa * self.amplitude * self.amplitude / (self.waist * self.waist)
    }

    /// Density at array-plane point `(x, y)`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        let (dx, dy) = (x - self.center.x, y - self.center.y);
        self.peak_density() * (-2.0 * (dx * dx + dy * dy) / (self.waist * self.waist)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MirrorElement {
    pub row: usize,
    pub col: usize,
    pub center: Vec3,
    pub side: f64,
    pub initial_normal: UnitVec3,
}

impl MirrorElement {
    pub fn area(&self) -> f64 {
        self.side * self.side
    }
}

/// Rectangular grid of square mirrors in the `z = 0` plane, centred on the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorArray {
    rows: usize,
    cols: usize,
    side: f64,
    gap: f64,
    elements: Vec<MirrorElement>,
}

impl MirrorArray {
    /// Elements face `+z`; row `i` sits at `y = (i - (rows-1)/2)·pitch`,
    /// column `j` at `x = (j - (cols-1)/2)·pitch`.
    pub fn grid(rows: usize, cols: usize, side: f64, gap: f64) -> Result<Self, MaError> {
        Self::grid_with_normal(rows, cols, side, gap, UnitVec3::Z)
    }

    pub fn grid_with_normal(
        rows: usize,
        cols: usize,
        side: f64,
        gap: f64,
        initial_normal: UnitVec3,
    ) -> Result<Self, MaError> {
        if rows == 0 || cols == 0 {
            return Err(MaError::InvalidArray("array needs at least one row and one column"));
        }
        if !(side > 0.0 && side.is_finite()) {
            return Err(MaError::InvalidArray("element side must be positive"));
        }
        if !(gap >= 0.0 && gap.is_finite()) {
            return Err(MaError::InvalidArray("element gap must be non-negative"));
        }
        let pitch = side + gap;
        let mut elements = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            for col in 0..cols {
                let x = (col as f64 - (cols as f64 - 1.0) / 2.0) * pitch;
                let y = (row as f64 - (rows as f64 - 1.0) / 2.0) * pitch;
                elements.push(MirrorElement { row, col, center: Vec3::new(x, y, 0.0), side, initial_normal });
            }
        }
        Ok(Self { rows, cols, side, gap, elements })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn pitch(&self) -> f64 {
        self.side + self.gap
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Row-major element list.
    pub fn elements(&self) -> &[MirrorElement] {
        &self.elements
    }

    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }
}

/// Control state of one aimed element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementAim {
    pub rotation: RotationMatrix,
    /// Deflection angle `arccos|h·h'|`, in `[0, π/2]`.
    pub theta: f64,
    pub normal: UnitVec3,
    pub target_id: usize,
}

/// Per-element rotations, row-major; `None` marks an idle element.
#[derive(Debug, Clone, PartialEq)]
pub struct AimSolution {
    entries: Vec<Option<ElementAim>>,
}

impl AimSolution {
    pub fn from_entries(entries: Vec<Option<ElementAim>>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[Option<ElementAim>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn active_count(&self) -> usize {
        self.entries.iter().flatten().count()
    }

    /// Keeps only the elements aimed at `target_id`.
    pub fn restricted_to(&self, target_id: usize) -> AimSolution {
        AimSolution {
            entries: self.entries.iter().map(|e| e.filter(|a| a.target_id == target_id)).collect(),
        }
    }

    /// Overrides the deflection angle of one element; rotation is left untouched.
    /// Used to study the cosine loss in isolation.
    pub fn with_theta(mut self, index: usize, theta: f64) -> Self {
        if let Some(Some(a)) = self.entries.get_mut(index) {
            a.theta = theta;
        }
        self
    }
}

fn aim_element(element: &MirrorElement, beam: &GaussianBeam, target: Vec3, target_id: usize) -> Result<ElementAim, MaError> {
    let geometry = |source| MaError::Geometry { row: element.row, col: element.col, source };
    let normal = deflected_normal(element.center, beam.direction.get(), target).map_err(geometry)?;
    Ok(ElementAim {
        rotation: rotation_between(element.initial_normal, normal),
        theta: deflection_angle(element.initial_normal, normal),
        normal,
        target_id,
    })
}

fn check_target(array: &MirrorArray, target: Vec3) -> Result<(), MaError> {
    let e = &array.elements[0];
    if (target - e.center).dot(e.initial_normal.get()).abs() < 1e-12 {
        return Err(MaError::TargetInArrayPlane);
    }
    Ok(())
}

/// Rotates every element so that it reflects the beam toward `target`.
pub fn aim_array(array: &MirrorArray, beam: &GaussianBeam, target: Vec3) -> Result<AimSolution, MaError> {
    check_target(array, target)?;
    let entries = array
        .elements
        .iter()
        .map(|e| aim_element(e, beam, target, 0).map(Some))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AimSolution { entries })
}

/// Aims each element at `targets[assignment[i] - 1]`; assignment `0` leaves
/// the element idle.
pub fn aim_groups(
    array: &MirrorArray,
    beam: &GaussianBeam,
    targets: &[Vec3],
    assignment: &[usize],
) -> Result<AimSolution, MaError> {
    if assignment.len() != array.len() {
        return Err(MaError::AimMismatch { expected: array.len(), got: assignment.len() });
    }
    for &t in targets {
        check_target(array, t)?;
    }
    let entries = array
        .elements
        .iter()
        .zip(assignment)
        .map(|(e, &g)| match g {
            0 => Ok(None),
            g => targets
                .get(g - 1)
                .ok_or(MaError::InvalidArray("assignment refers to a missing target"))
                .and_then(|&t| aim_element(e, beam, t, g - 1).map(Some)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AimSolution { entries })
}

/// Power falling on one element, by adaptive quadrature over its square.
pub fn element_incident_power(beam: &GaussianBeam, element: &MirrorElement) -> f64 {
    let h = element.side / 2.0;
    let (cx, cy) = (element.center.x, element.center.y);
    integrate_rect(|x, y| beam.density(x, y), cx - h, cx + h, cy - h, cy + h, DEFAULT_REL_TOL)
}

/// Power falling on a disk of `radius` centred at array-plane point `(cx, cy)`.
pub fn disk_incident_power(beam: &GaussianBeam, cx: f64, cy: f64, radius: f64) -> f64 {
    integrate_disk(|x, y| beam.density(x, y), cx, cy, radius, DEFAULT_REL_TOL)
}

/// Cosine deflection loss: `P·cosθ`.
pub fn reflected_power(incident: f64, theta: f64) -> f64 {
    incident * theta.cos()
}

fn check_aim(array: &MirrorArray, aim: &AimSolution) -> Result<(), MaError> {
    if aim.len() != array.len() {
        return Err(MaError::AimMismatch { expected: array.len(), got: aim.len() });
    }
    if aim.active_count() == 0 {
        return Err(MaError::EmptyAim);
    }
    Ok(())
}

/// Receiver-plane density, in the target's local frame.
///
/// Inside the spot square `C` (side `spot_side`, defaulting to the element
/// side) every aimed element contributes
/// `κA₀²/ω²·exp(-2((x + x_ij - b_x)² + (y + y_ij - b_y)²)/ω²)·cosθ_ij`;
/// outside `C` the density is zero.
pub fn receiver_power_density(
    array: &MirrorArray,
    beam: &GaussianBeam,
    aim: &AimSolution,
    window: Window,
    resolution: usize,
    spot_side: Option<f64>,
) -> Result<PowerDensityMap, MaError> {
    check_aim(array, aim)?;
    let half = spot_side.unwrap_or(array.side) / 2.0;
    let terms: Vec<(f64, f64, f64)> = array
        .elements
        .iter()
        .zip(aim.entries())
        .filter_map(|(e, a)| a.map(|a| (e.center.x - beam.center.x, e.center.y - beam.center.y, a.theta.cos())))
        .collect();
    let peak = beam.peak_density();
    let w2 = beam.waist * beam.waist;
    let density = |x: f64, y: f64| {
        if x.abs() > half || y.abs() > half {
            return 0.0;
        }
        peak * terms
            .iter()
            .map(|&(ex, ey, c)| {
                let (u, v) = (x + ex, y + ey);
                (-2.0 * (u * u + v * v) / w2).exp() * c
            })
            .sum::<f64>()
    };
    // Fill rows in parallel; each cell's sum runs in element order, so the
    // result does not depend on the thread count.
    let blank = PowerDensityMap::from_window(window, resolution, resolution, |_, _| 0.0)?;
    let mut values = Array2::<f64>::zeros((resolution, resolution));
    values
        .axis_iter_mut(ndarray::Axis(0))
        .into_par_iter()
        .enumerate()
        .for_each(|(i, mut row)| {
            let y = blank.y(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = density(blank.x(j), y);
            }
        });
    Ok(PowerDensityMap::from_parts(values, blank.x(0), blank.y(0), blank.dx(), blank.dy())?)
}

/// Concentric square annuli used by the ring efficiency estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct RingLayout {
    pub ring_radius: f64,
    /// Row-major ring index (1-based) per element.
    pub regions: Vec<Option<usize>>,
}

impl RingLayout {
    /// Ring `k` holds the elements whose centre lies at Chebyshev distance in
    /// `((k-1)ω, kω]` from the beam centre.
    pub fn square_annuli(array: &MirrorArray, beam: &GaussianBeam, ring_radius: f64) -> Result<Self, MaError> {
        if ring_radius.is_nan() || ring_radius <= 0.0 {
            return Err(MaError::LayoutMismatch("ring radius must be positive".into()));
        }
        let regions = array
            .elements
            .iter()
            .map(|e| {
                let d = (e.center.x - beam.center.x).abs().max((e.center.y - beam.center.y).abs());
                Some(((d / ring_radius - 1e-12).ceil() as usize).max(1))
            })
            .collect();
        Ok(Self { ring_radius, regions })
    }

    pub fn ring_count(&self) -> usize {
        self.regions.iter().flatten().copied().max().unwrap_or(0)
    }
}

/// Ring-based efficiency estimate
/// `Σ_k Σ_{(i,j)∈C_k} (e^{-2(k-1)²ω²/ω_z²} - e^{-2k²ω²/ω_z²})·cosθ_ij / 4k²`.
pub fn efficiency_ring_estimate(layout: &RingLayout, beam: &GaussianBeam, aim: &AimSolution) -> Result<f64, MaError> {
    if layout.regions.len() != aim.len() {
        return Err(MaError::LayoutMismatch(format!(
            "layout has {} elements, aim has {}",
            layout.regions.len(),
            aim.len()
        )));
    }
    let a = layout.ring_radius * layout.ring_radius / (beam.waist * beam.waist);
    let mut eta = 0.0;
    for (idx, (region, entry)) in layout.regions.iter().zip(aim.entries()).enumerate() {
        let Some(entry) = entry else { continue };
        let k = match region {
            Some(k) if *k >= 1 => *k as f64,
            _ => return Err(MaError::LayoutMismatch(format!("element {idx} has no region"))),
        };
        let share = ((-2.0 * (k - 1.0) * (k - 1.0) * a).exp() - (-2.0 * k * k * a).exp()) / (4.0 * k * k);
        eta += share * entry.theta.cos();
    }
    Ok(eta)
}

/// Reference efficiency `Σ P_ij cosθ_ij / P₀` from per-element quadrature.
pub fn efficiency_numeric(array: &MirrorArray, beam: &GaussianBeam, aim: &AimSolution) -> Result<f64, MaError> {
    check_aim(array, aim)?;
    let delivered: f64 = array
        .elements
        .iter()
        .zip(aim.entries())
        .filter_map(|(e, a)| a.map(|a| reflected_power(element_incident_power(beam, e), a.theta)))
        .sum();
    Ok(delivered / beam.total_power())
}

/// Both efficiency estimates side by side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfficiencyComparison {
    pub ring: f64,
    pub numeric: f64,
}

impl EfficiencyComparison {
    pub fn compute(
        array: &MirrorArray,
        beam: &GaussianBeam,
        aim: &AimSolution,
        layout: &RingLayout,
    ) -> Result<Self, MaError> {
        Ok(Self {
            ring: efficiency_ring_estimate(layout, beam, aim)?,
            numeric: efficiency_numeric(array, beam, aim)?,
        })
    }

    /// `(ring - numeric) / numeric`.
    pub fn relative_difference(&self) -> f64 {
        (self.ring - self.numeric) / self.numeric
    }
}

impl fmt::Display for EfficiencyComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "eta_ring={:.6} eta_numeric={:.6} relative_difference={:+.4}",
            self.ring,
            self.numeric,
            self.relative_difference()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::reflect;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4, PI};

    fn single(side: f64) -> MirrorArray {
        MirrorArray::grid(1, 1, side, 0.0).unwrap()
    }

    #[test]
    fn beam_validation() {
        assert!(GaussianBeam::normal_incidence(0.0, 1.0).is_err());
        assert!(GaussianBeam::normal_incidence(1.0, -1.0).is_err());
        assert!(GaussianBeam::new(1.0, 1.0, 0.0, Vec3::ZERO, Vec3::new(0.0, 0.0, -1.0)).is_err());
        assert!(GaussianBeam::new(1.0, 1.0, 1.0, Vec3::ZERO, Vec3::ZERO).is_err());
    }

    #[test]
    fn retro_aim_is_identity() {
        let beam = GaussianBeam::normal_incidence(1.0, 0.01).unwrap();
        let aim = aim_array(&single(0.01), &beam, Vec3::new(0.0, 0.0, 5.0)).unwrap();
        let a = aim.entries()[0].unwrap();
        assert_eq!(a.theta, 0.0);
        assert_eq!(a.rotation, RotationMatrix::IDENTITY);
    }

    #[test]
    fn diagonal_aim_tilts_by_half_the_turn() {
        // Outgoing ray turns 45° from the retro direction; the normal turns half that.
        let beam = GaussianBeam::normal_incidence(1.0, 0.01).unwrap();
        let aim = aim_array(&single(0.01), &beam, Vec3::new(5.0, 0.0, 5.0)).unwrap();
        assert!((aim.entries()[0].unwrap().theta - FRAC_PI_4 / 2.0).abs() < 1e-15);
    }

    #[test]
    fn experiment_array_hits_target() {
        let array = MirrorArray::grid(4, 4, 0.04, 0.002).unwrap();
        let beam = GaussianBeam::normal_incidence(1.0, 0.06).unwrap();
        let target = Vec3::new(0.0, 0.0, 0.25);
        let aim = aim_array(&array, &beam, target).unwrap();
        for (e, a) in array.elements().iter().zip(aim.entries()) {
            let a = a.unwrap();
            let n = a.rotation.apply(e.initial_normal.get());
            let out = reflect(beam.direction.get(), UnitVec3::normalize(n).unwrap());
            let err = crate::geom::angle_between(out, target - e.center);
            assert!(err < 1e-9, "element ({}, {}) misses by {err}", e.row, e.col);
            assert!((0.0..=PI / 2.0).contains(&a.theta));
        }
    }

    #[test]
    fn target_in_plane_rejected() {
        let beam = GaussianBeam::normal_incidence(1.0, 0.01).unwrap();
        assert_eq!(aim_array(&single(0.01), &beam, Vec3::new(1.0, 0.0, 0.0)), Err(MaError::TargetInArrayPlane));
    }

    #[test]
    fn reflected_power_examples() {
        assert_eq!(reflected_power(1.0, 0.0), 1.0);
        assert!((reflected_power(1.0, FRAC_PI_3) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn huge_element_captures_whole_beam() {
        let beam = GaussianBeam::normal_incidence(2.0, 0.01).unwrap();
        let p = element_incident_power(&beam, &single(1.0).elements()[0]);
        assert!((p - beam.total_power()).abs() / beam.total_power() < 1e-6);
    }

    #[test]
    fn empty_aim_rejected() {
        let array = single(0.01);
        let beam = GaussianBeam::normal_incidence(1.0, 0.01).unwrap();
        let aim = AimSolution::from_entries(vec![None]);
        assert_eq!(
            receiver_power_density(&array, &beam, &aim, Window::square(0.01), 8, None),
            Err(MaError::EmptyAim)
        );
        assert_eq!(efficiency_numeric(&array, &beam, &aim), Err(MaError::EmptyAim));
    }

    #[test]
    fn single_element_map_is_clipped_gaussian() {
        let array = single(0.02);
        let beam = GaussianBeam::normal_incidence(1.0, 0.01).unwrap();
        let aim = aim_array(&array, &beam, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let map = receiver_power_density(&array, &beam, &aim, Window::square(0.02), 64, None).unwrap();
        for ((i, j), &v) in map.values().indexed_iter() {
            let (x, y) = (map.x(j), map.y(i));
            let expected = if x.abs() <= 0.01 && y.abs() <= 0.01 { beam.density(x, y) } else { 0.0 };
            assert!((v - expected).abs() <= 1e-12 * beam.peak_density());
        }
    }

    #[test]
    fn ring_layout_for_4x4() {
        let array = MirrorArray::grid(4, 4, 0.04, 0.002).unwrap();
        let beam = GaussianBeam::normal_incidence(1.0, 0.06).unwrap();
        let layout = RingLayout::square_annuli(&array, &beam, array.pitch()).unwrap();
        let inner = layout.regions.iter().filter(|r| **r == Some(1)).count();
        let outer = layout.regions.iter().filter(|r| **r == Some(2)).count();
        assert_eq!((inner, outer, layout.ring_count()), (4, 12, 2));
    }

    #[test]
    fn ring_estimate_missing_region() {
        let array = MirrorArray::grid(2, 2, 0.01, 0.0).unwrap();
        let beam = GaussianBeam::normal_incidence(1.0, 0.06).unwrap();
        let aim = aim_array(&array, &beam, Vec3::new(0.0, 0.0, 1.0)).unwrap();
        let layout = RingLayout { ring_radius: 0.01, regions: vec![Some(1), None, Some(1), Some(1)] };
        assert!(matches!(efficiency_ring_estimate(&layout, &beam, &aim), Err(MaError::LayoutMismatch(_))));
    }

    #[test]
    fn ring_estimate_telescopes_for_wide_region() {
        let array = MirrorArray::grid(2, 2, 0.01, 0.0).unwrap();
        let beam = GaussianBeam::normal_incidence(1.0, 0.01).unwrap();
        let aim = aim_array(&array, &beam, Vec3::new(0.0, 0.0, 1e6)).unwrap();
        let aim = AimSolution::from_entries(
            aim.entries().iter().map(|e| e.map(|mut a| { a.theta = 0.0; a })).collect(),
        );
        let layout = RingLayout { ring_radius: 1.0, regions: vec![Some(1); 4] };
        let eta = efficiency_ring_estimate(&layout, &beam, &aim).unwrap();
        assert!((eta - (1.0 - (-2.0f64 * 1e4).exp())).abs() < 1e-12);

        let tilted = AimSolution::from_entries(
            aim.entries().iter().map(|e| e.map(|mut a| { a.theta = FRAC_PI_3; a })).collect(),
        );
        let half = efficiency_ring_estimate(&layout, &beam, &tilted).unwrap();
        assert!((half - 0.5 * eta).abs() < 1e-15);
    }
}
