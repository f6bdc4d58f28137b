use tearfilm_web::{ellipse_field, uniform_thinning, window_grid};

#[test]
fn ellipse_field_peaks_at_the_centre() {
    let n = 32;
    let out = ellipse_field(n, 0.07, 0.8, 0.3, 0.3, 0.0, 0.0, 0.8, 0.5).unwrap();
    assert_eq!(out.len(), n * n + 1);
    let (field, defect) = out.split_at(n * n);
    assert!(defect[0] < 1e-3);
    let max = field.iter().cloned().fold(f64::MIN, f64::max);
    // node (n/2 − 1, n/2 − 1) sits at the origin
    let centre = field[(n / 2 - 1) * n + n / 2 - 1];
    assert!((centre - max).abs() < 1e-12);
    assert!((centre - 0.8).abs() < 1e-9);
    assert!(field.iter().all(|&v| v >= 0.035 - 1e-12));
}

#[test]
fn ellipse_field_rejects_bad_geometry() {
    assert!(ellipse_field(32, 0.07, 0.8, 0.3, 0.3, 0.0, 0.0, 1.5, 0.5).is_err());
    assert!(ellipse_field(31, 0.07, 0.8, 0.3, 0.3, 0.0, 0.0, 0.8, 0.5).is_err());
}

#[test]
fn uniform_thinning_without_osmosis_is_linear() {
    let rows = uniform_thinning(0.3, 1.0, 0.0, 1.0, 5).unwrap();
    assert_eq!(rows.len(), 25);
    for r in rows.chunks(5) {
        let (t, h, c, f) = (r[0], r[1], r[2], r[3]);
        assert!((h - (1.0 - 0.3 * t)).abs() < 1e-8);
        assert!((c * h - 1.0).abs() < 1e-8);
        assert!((f * h - 1.0).abs() < 1e-8);
    }
    assert!((rows[4] - 1.0).abs() < 1e-12);
    assert!(rows[24] < rows[4]);
}

#[test]
fn uniform_thinning_stops_at_touchdown() {
    let rows = uniform_thinning(3.0, 1.0, 0.0, 1.0, 11).unwrap();
    // h = 1 − 3t reaches zero at t = 1/3
    assert_eq!(rows.len(), 4 * 5);
    assert!(uniform_thinning(0.3, 1.0, 0.0, 0.0, 5).is_err());
}

#[test]
fn window_is_one_inside_and_matches_at_edges() {
    let n = 41;
    let w = window_grid(n, -2.6, 2.6, 5.0).unwrap();
    assert!((w[20 * n + 20] - 1.0).abs() < 1e-8);
    for p in 0..n {
        assert!((w[p] - w[(n - 1) * n + p]).abs() < 1e-15);
        assert!((w[p * n] - w[p * n + n - 1]).abs() < 1e-15);
    }
    assert!(window_grid(41, 1.0, -1.0, 5.0).is_err());
}
