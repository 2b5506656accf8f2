//! Reference scenarios shared by tests, benchmarks and the example configs.

use crate::geom::Vec3;
use crate::grid::FieldGrid;
use crate::ma::{GaussianBeam, MaError, MirrorArray, RingLayout};
use crate::opa::{array_grid, focal_spacing, uniform_incident, OpaError, OpticalSetup, PhasedArray};
use crate::split::{SplitSpec, SplitTarget};

/// 4×4 mirror array under a normally incident Gaussian beam.
#[derive(Debug, Clone)]
pub struct MaBench {
    pub array: MirrorArray,
    pub beam: GaussianBeam,
    pub target: Vec3,
    pub ring_radius: f64,
}

pub const MA_SIDE: f64 = 0.04;
pub const MA_GAP: f64 = 0.002;
pub const MA_WAIST: f64 = 0.06;
pub const MA_RANGE: f64 = 0.25;

pub fn ma_bench() -> MaBench {
    let array = MirrorArray::grid(4, 4, MA_SIDE, MA_GAP).expect("valid array");
    let beam = GaussianBeam::normal_incidence(1.0, MA_WAIST).expect("valid beam");
    MaBench { ring_radius: array.pitch(), array, beam, target: Vec3::new(0.0, 0.0, MA_RANGE) }
}

impl MaBench {
    pub fn ring_layout(&self) -> Result<RingLayout, MaError> {
        RingLayout::square_annuli(&self.array, &self.beam, self.ring_radius)
    }
}

/// Three 2 cm disks with power ratio 1:2:3, centres in meters on the
/// observation plane.
pub fn three_disk_targets(plane_z: f64) -> SplitSpec {
    let disk = |x: f64, y: f64, w: f64| SplitTarget { center: Vec3::new(x, y, plane_z), weight: w, radius: 0.01 };
    SplitSpec::new(vec![disk(0.02, 0.03, 1.0), disk(-0.03, -0.04, 2.0), disk(-0.04, 0.03, 3.0)])
        .expect("valid spec")
}

/// Desk-scale phased array: 64×64 pixels, 95.7% fill factor, 532 nm light,
/// 0.25 m lens, with a pitch giving a 16 cm wide central diffraction order.
#[derive(Debug, Clone)]
pub struct DeskOpa {
    pub array: PhasedArray,
    pub setup: OpticalSetup,
    pub incident: FieldGrid,
}

pub const DESK_PIXELS: usize = 64;
pub const DESK_WAVELENGTH: f64 = 532e-9;
pub const DESK_FOCAL: f64 = 0.25;
pub const DESK_ORDER_WIDTH: f64 = 0.16;
pub const DESK_FILL: f64 = 0.957;
pub const DESK_SAMPLES_PER_PITCH: usize = 8;
pub const DESK_PADDING: usize = 2;

pub fn desk_opa() -> Result<DeskOpa, OpaError> {
    desk_opa_with_fill(DESK_FILL)
}

pub fn desk_opa_with_fill(fill_factor: f64) -> Result<DeskOpa, OpaError> {
    let setup = OpticalSetup::new(DESK_WAVELENGTH, DESK_FOCAL)?;
    let pitch = DESK_WAVELENGTH * DESK_FOCAL / DESK_ORDER_WIDTH;
    let array = PhasedArray::with_fill_factor(DESK_PIXELS, DESK_PIXELS, pitch, fill_factor)?;
    let incident = uniform_incident(&array_grid(&array, DESK_SAMPLES_PER_PITCH, DESK_PADDING)?);
    Ok(DeskOpa { array, setup, incident })
}

impl DeskOpa {
    /// Empty field on the focal-plane grid of the incident field.
    pub fn focal_grid(&self) -> FieldGrid {
        let (du, dv) = focal_spacing(&self.incident, &self.setup);
        FieldGrid::zeros(self.incident.nx(), self.incident.ny(), du, dv).expect("valid focal grid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_focal_spacing() {
        let d = desk_opa().unwrap();
        let g = d.focal_grid();
        assert_eq!(g.nx(), 1024);
        assert!((g.dx() - 1.25e-3).abs() < 1e-15);
    }

    #[test]
    fn bench_pitch() {
        assert!((ma_bench().ring_radius - 0.042).abs() < 1e-15);
    }
}
