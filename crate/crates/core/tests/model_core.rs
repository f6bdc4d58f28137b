use approx::assert_relative_eq;
use proptest::prelude::*;
use tearfilm::*;

#[test]
fn tabulated_physics_gives_tabulated_groups() {
    let nd = derive_nondim(&PhysicalParams::default()).unwrap();
    for (got, want) in [
        (nd.eps, 8.3e-3),
        (nd.pc, 0.392),
        (nd.pe_f, 27.7),
        (nd.pe_c, 6.76),
        (nd.phi, 0.417),
    ] {
        assert!((got - want).abs() / want <= 0.01, "{got} vs {want}");
    }
    assert_relative_eq!(nd.t_scale, 27.0, max_relative = 1e-12);
    assert_relative_eq!(nd.v_b, 0.07, max_relative = 1e-12);
}

#[test]
fn aspect_ratio_has_closed_form() {
    let p = PhysicalParams::default();
    let nd = derive_nondim(&p).unwrap();
    assert_relative_eq!(
        nd.eps,
        (p.mu * p.v_max / p.sigma0).powf(0.25),
        max_relative = 1e-12
    );
    assert_relative_eq!(nd.ell, p.length_scale(), max_relative = 1e-15);
    let doubled = derive_nondim(&PhysicalParams {
        v_max: 2.0 * p.v_max,
        ..p
    })
    .unwrap();
    assert_relative_eq!(doubled.pc, 0.5 * nd.pc, max_relative = 1e-14);
}

#[test]
fn time_scaling() {
    let nd = NondimParams::default();
    assert_eq!(nondim_time(0.0, &nd), 0.0);
    assert_relative_eq!(nondim_time(27.0, &nd), 1.0, max_relative = 1e-12);
    assert_relative_eq!(nondim_time(13.5, &nd), 0.5, max_relative = 1e-12);
}

#[test]
fn intensity_reference_values() {
    assert_relative_eq!(
        intensity_at(1.0, 1.0, 1.0, 0.417),
        (1.0 - (-0.417f64).exp()) / 2.0,
        max_relative = 1e-14
    );
    assert!((intensity_at(1.0, 1.0, 1.0, 0.417) - 0.17046).abs() < 5e-5);
    let i0 = normalization_coefficient(1.0, 0.417).unwrap();
    assert!((i0 - 5.8667).abs() < 2e-3);
    assert!(normalization_coefficient(0.0, 0.417).is_err());
    assert!(normalization_coefficient(1.0, 1e-13).is_err());
    assert_eq!(
        intensity(&[0.0, 1.0], &[1.0, 0.0], i0, 0.417),
        vec![0.0, 0.0]
    );
}

#[test]
fn bad_physics_is_rejected() {
    let p = PhysicalParams::default();
    assert!(derive_nondim(&PhysicalParams { mu: 0.0, ..p }).is_err());
    assert!(derive_nondim(&PhysicalParams {
        v_min: p.v_max,
        ..p
    })
    .is_err());
    assert!(PhysicalParams::from_toml_str("d = 3e-6\nbogus = 1").is_err());
    assert_eq!(PhysicalParams::from_toml_str("d = 3e-6").unwrap().d, 3e-6);
}

proptest! {
    #[test]
    fn initial_state_has_unit_intensity(f0 in 0.01f64..10.0, phi in 0.01f64..5.0) {
        let i0 = normalization_coefficient(f0, phi).unwrap();
        prop_assert!((intensity_at(1.0, f0, i0, phi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn intensity_grows_with_thickness(f in 0.01f64..5.0, h in 0.0f64..2.0, dh in 1e-3f64..1.0) {
        prop_assert!(intensity_at(h + dh, f, 1.0, 0.4186) > intensity_at(h, f, 1.0, 0.4186));
    }
}

#[test]
fn quenching_peak_is_interior() {
    let samples: Vec<f64> = (1..2000)
        .map(|k| intensity_at(1.0, k as f64 * 0.005, 1.0, 0.4186))
        .collect();
    let (best, _) = samples.iter().enumerate().fold(
        (0, 0.0),
        |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc },
    );
    assert!(best > 0 && best < samples.len() - 1);
}

#[test]
fn grid_nodes_exclude_minus_pi() {
    let g = Grid2D::new(8, 6).unwrap();
    assert_relative_eq!(g.x(7), std::f64::consts::PI);
    assert_relative_eq!(g.x(0), -std::f64::consts::PI + g.dx());
    assert!(Grid2D::new(7, 6).is_err());
}
