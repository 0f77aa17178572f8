mod common;

use interfall::propagators::PhysicalConfig;
use interfall::slit::{
    classical_displacement, freefall_transform, fringe_spacing, multi_slit_wavefunction, pointwise_relative_error,
    screen_grid, SlitGeometry,
};
use interfall::Error;
use proptest::prelude::*;

fn neutron(g: f64, lambda: f64) -> PhysicalConfig {
    PhysicalConfig::neutron(g, lambda, 0.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gravity_only_translates_the_pattern(
        g in 1.0f64..15.0,
        lambda in 2e-10f64..1e-9,
        a in 3e-6f64..2e-5,
        d in 0.5f64..3.0,
        l in 0.5f64..8.0,
        sep in 1.5f64..4.0,
        double in any::<bool>(),
    ) {
        let cfg = neutron(g, lambda);
        let geom = if double { SlitGeometry::double(d, l, a, sep * a) } else { SlitGeometry::single(d, l, a, 0.0) }.unwrap();
        let grid = screen_grid(&geom, &cfg).unwrap();
        let w = multi_slit_wavefunction(&geom, &cfg, grid).unwrap();
        prop_assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
        let moved = freefall_transform(&w, &geom, &cfg).unwrap();
        let xc = classical_displacement(&geom, &cfg);
        prop_assert!((moved.grid.start() - (grid.start() - xc)).abs() < 1e-15);
    }
}

#[test]
fn zero_gravity_centred_slit_is_symmetric() {
    let cfg = neutron(0.0, 1e-9);
    let geom = SlitGeometry::single(2.0, 3.0, 1e-5, 0.0).unwrap();
    let grid = screen_grid(&geom, &cfg).unwrap();
    let rho = multi_slit_wavefunction(&geom, &cfg, grid).unwrap().density();
    let mirrored: Vec<f64> = rho.iter().rev().copied().collect();
    assert!(pointwise_relative_error(&rho, &mirrored) < 1e-9);
}

#[test]
fn far_field_fringes_are_lambda_l_over_slit_separation() {
    let cfg = neutron(0.0, 1e-9);
    let (a, b) = (2.5e-7, 5e-6);
    let geom = SlitGeometry::double(1.0, 2.0, a, b).unwrap();
    let spacing = fringe_spacing(&geom, &cfg).unwrap();
    assert!((spacing - 1e-9 * 2.0 / (2.0 * b)).abs() < 1e-18);
    let grid = screen_grid(&geom, &cfg).unwrap();
    let rho = multi_slit_wavefunction(&geom, &cfg, grid).unwrap().density();
    let xs = grid.points();
    // The neighbouring bright fringe lies within the window (0.5, 1.5) spacings.
    let (lo, hi) = (
        xs.iter().position(|x| *x > 0.5 * spacing).unwrap(),
        xs.iter().position(|x| *x > 1.5 * spacing).unwrap(),
    );
    let peak = common::peak_position(&xs[lo - 1..=hi], &rho[lo - 1..=hi]);
    assert!((peak / spacing - 1.0).abs() < 2e-3, "{}", peak / spacing);
    let centre = common::peak_position(&xs, &rho);
    assert!(centre.abs() < 1e-3 * spacing);
}

#[test]
fn validity_limits_are_configuration_errors() {
    let cfg = neutron(9.8, 1e-9);
    let wide = SlitGeometry::single(2.0, 1.0, 2e-2, 0.0).unwrap();
    assert!(matches!(screen_grid(&wide, &cfg), Err(Error::Config(_))));
    let overlapping = SlitGeometry::new(2.0, 1.0, 1e-5, vec![0.0, 1.5e-5]);
    assert!(overlapping.is_err());
    let long_wave = neutron(9.8, 1e-2);
    let geom = SlitGeometry::single(2.0, 1.0, 1e-5, 0.0).unwrap();
    assert!(matches!(screen_grid(&geom, &long_wave), Err(Error::Config(_))));
}

#[test]
fn grid_off_the_pattern_is_a_coverage_error() {
    let cfg = neutron(9.8, 1e-9);
    let geom = SlitGeometry::single(2.0, 1.0, 1e-5, 0.0).unwrap();
    let grid = screen_grid(&geom, &cfg).unwrap();
    let off = grid.shifted(0.5 * (grid.end() - grid.start()));
    assert!(matches!(multi_slit_wavefunction(&geom, &cfg, off), Err(Error::Coverage(_))));
}
