//! Simulation toolkit for optical intelligent reflecting surfaces.
//!
//! Two surface families are modelled: micro-mirror arrays ([`ma`]), which
//! steer a Gaussian beam by geometric reflection, and optical phased arrays
//! ([`opa`]), which shape it through a lens by Fourier optics. [`split`]
//! divides one beam into sub-beams with a prescribed power ratio and
//! [`analysis`] integrates received power under pointing error.
//!
//! Units are meters, radians and watts throughout.

pub mod analysis;
pub mod export;
pub mod fixtures;
pub mod geom;
pub mod grid;
pub mod ma;
pub mod opa;
pub mod quadrature;
pub mod split;

pub use analysis::{
    fading_samples, offset_sweep, received_power, AnalysisError, FadingSampleSet, FadingSummary, Receiver, SweepPoint,
};
pub use geom::{
    angle_between, deflected_normal, deflection_angle, reflect, rotation_axis, rotation_between, rotation_matrix,
    GeomError, RotationMatrix, UnitVec3, Vec3,
};
pub use grid::{FieldGrid, GridError, PowerDensityMap, Window, DEFAULT_MAP_RESOLUTION};
pub use ma::{
    aim_array, aim_groups, disk_incident_power, efficiency_numeric, efficiency_ring_estimate, element_incident_power,
    receiver_power_density, reflected_power, AimSolution, EfficiencyComparison, ElementAim, GaussianBeam, MaError,
    MirrorArray, MirrorElement, RingLayout,
};
pub use opa::{
    array_grid, build_reflectance, fraunhofer, gaussian_incident, inverse_fraunhofer, non_adjustable_field,
    opa_efficiency, retrieve_phase, uniform_incident, InitialPhase, OpaError, OpticalSetup, PhasedArray, Retrieval,
    RetrievalConfig, RetrievalReport, ZeroOrder,
};
pub use split::{
    brute_force_grouping, compose_target_field, optimize_grouping, power_matrices, ratio_deviation, region_powers,
    Partition, PowerMatrix, SplitConfig, SplitError, SplitSpec, SplitTarget,
};
