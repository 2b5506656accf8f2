use std::f64::consts::SQRT_2;

use oirs_core::fixtures::ma_bench;
use oirs_core::{
    aim_array, efficiency_numeric, element_incident_power, power_matrices, receiver_power_density, received_power,
    GaussianBeam, MirrorArray, Receiver, SplitSpec, SplitTarget, Vec3, Window,
};
use proptest::prelude::*;

/// Power of a unit-κ Gaussian over `[x0,x1]×[y0,y1]` by separable erf.
fn erf_box(beam: &GaussianBeam, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let s = SQRT_2 / beam.waist;
    let fx = libm::erf(s * (x1 - beam.center.x)) - libm::erf(s * (x0 - beam.center.x));
    let fy = libm::erf(s * (y1 - beam.center.y)) - libm::erf(s * (y0 - beam.center.y));
    beam.total_power() * fx * fy / 4.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn element_power_matches_erf_product(
        waist in 0.005..0.1f64,
        bx in -0.03..0.03f64, by in -0.03..0.03f64,
        rows in 1usize..5, cols in 1usize..5,
    ) {
        let beam = GaussianBeam::normal_incidence(0.7, waist).unwrap().with_center(Vec3::new(bx, by, 0.0));
        let array = MirrorArray::grid(rows, cols, 0.02, 0.001).unwrap();
        for e in array.elements() {
            let h = e.side / 2.0;
            let want = erf_box(&beam, e.center.x - h, e.center.x + h, e.center.y - h, e.center.y + h);
            let got = element_incident_power(&beam, e);
            prop_assert!((got - want).abs() <= 1e-7 * beam.total_power(), "got {got}, want {want}");
        }
    }

    #[test]
    fn efficiency_is_scale_invariant(k in 0.1..10.0f64) {
        let f = ma_bench();
        let aim = aim_array(&f.array, &f.beam, f.target).unwrap();
        let mut bright = f.beam;
        bright.amplitude *= k;
        let a = efficiency_numeric(&f.array, &f.beam, &aim).unwrap();
        let b = efficiency_numeric(&f.array, &bright, &aim).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn larger_tilt_lowers_efficiency() {
    let f = ma_bench();
    let aim = aim_array(&f.array, &f.beam, f.target).unwrap();
    let theta = aim.entries()[5].unwrap().theta;
    let base = efficiency_numeric(&f.array, &f.beam, &aim).unwrap();
    let tilted = efficiency_numeric(&f.array, &f.beam, &aim.clone().with_theta(5, theta + 0.1)).unwrap();
    assert!(tilted < base);
}

#[test]
fn on_axis_target_gives_mirror_symmetric_powers() {
    let f = ma_bench();
    let spec = SplitSpec::new(vec![SplitTarget { center: Vec3::new(0.0, 0.0, 0.25), weight: 1.0, radius: 0.0 }]).unwrap();
    let m = &power_matrices(&f.array, &f.beam, &spec).unwrap()[0];
    let v = m.values();
    let (r, c) = v.dim();
    for i in 0..r {
        for j in 0..c {
            assert!((v[[i, j]] - v[[r - 1 - i, j]]).abs() < 1e-12 * v[[i, j]]);
            assert!((v[[i, j]] - v[[i, c - 1 - j]]).abs() < 1e-12 * v[[i, j]]);
            assert!((v[[i, j]] - v[[j, i]]).abs() < 1e-12 * v[[i, j]]);
        }
    }
}

#[test]
fn single_untilted_element_gives_the_gaussian_profile() {
    // One element at the beam centre, aimed straight back: the receiver map
    // is the incident Gaussian clipped to the element square.
    let array = MirrorArray::grid(1, 1, 0.04, 0.0).unwrap();
    let beam = GaussianBeam::normal_incidence(1.0, 0.01).unwrap();
    let aim = aim_array(&array, &beam, Vec3::new(0.0, 0.0, 1.0)).unwrap();
    assert_eq!(aim.entries()[0].unwrap().theta, 0.0);
    let map = receiver_power_density(&array, &beam, &aim, Window::square(0.03), 256, None).unwrap();
    for (i, j) in [(128, 128), (100, 140), (60, 200), (10, 10)] {
        let (x, y) = (map.x(j), map.y(i));
        let want = if x.abs() <= 0.02 && y.abs() <= 0.02 { beam.density(x, y) } else { 0.0 };
        assert!((map.values()[[i, j]] - want).abs() <= 1e-12 * beam.peak_density());
    }
    // Disk power against 1 - exp(-2r²/ω²), within the cell-centre discretisation.
    let r = 0.008;
    let p = received_power(&map, &Receiver::new((0.0, 0.0), r).unwrap()).unwrap();
    let want = beam.total_power() * (1.0 - (-2.0 * r * r / (beam.waist * beam.waist)).exp());
    assert!((p / want - 1.0).abs() < 0.01, "{p} vs {want}");
}
