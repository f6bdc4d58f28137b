mod common;

use common::*;
use proptest::prelude::*;
use tearfilm::forward::{output_times, solve_2d, SolverOptions};
use tearfilm::inverse::report::{format_table, report_row, write_report_csv};
use tearfilm::inverse::*;
use tearfilm::*;

fn rosenbrock(p: &[f64]) -> f64 {
    100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2)
}

/// Minimal pseudo-random stream for test data.
fn lcg(seed: &mut u64) -> f64 {
    *seed = seed
        .wrapping_mul(6364136223846793005)
        .wrapping_add(1442695040888963407);
    (*seed >> 11) as f64 / (1u64 << 53) as f64
}

const TRUTH: [f64; 8] = [0.07, 0.8, 0.5, 0.5, 0.0, 0.0, 0.9, 0.5];

fn setup(n: usize) -> ModelSetup {
    ModelSetup::full(
        NondimParams::default(),
        InitialConditions::default(),
        SolverOptions {
            grid: n,
            rel_tol: 1e-9,
            abs_tol: 1e-11,
            ..Default::default()
        },
    )
}

fn synthetic(spec: &EvaporationSpec, n: usize) -> FitData {
    let s = setup(n);
    let res = solve_2d(spec, &s.nd, &s.ic, &output_times(1.0, 11), &s.solver).unwrap();
    FitData::from_solve(&res, &s.nd, &s.ic).unwrap()
}

fn objective(layout: Layout, data: &FitData) -> Objective {
    let w = Rectangle::default().mask(&data.grid()).unwrap();
    Objective::new(
        layout,
        setup(data.n),
        data.times.clone(),
        data.frames.clone(),
        w,
        DEFAULT_PENALTY,
    )
    .unwrap()
}

proptest! {
    #[test]
    fn ellipse_vectors_round_trip(p in prop::collection::vec(0.01f64..2.0, 8)) {
        let spec = Layout::Ellipse.decode(&p).unwrap();
        prop_assert_eq!(Layout::Ellipse.encode(&spec).unwrap(), p.clone());
        prop_assert_eq!(Layout::Ellipse.decode(&Layout::Ellipse.encode(&spec).unwrap()).unwrap(), spec);
    }

    #[test]
    fn multi_spot_vectors_round_trip(p in prop::collection::vec(0.01f64..2.0, 15)) {
        let l = Layout::MultiSpot { peaks: 2 };
        let spec = l.decode(&p).unwrap();
        prop_assert_eq!(l.encode(&spec).unwrap(), p);
    }

    #[test]
    fn one_dimensional_vectors_round_trip(p in prop::collection::vec(0.01f64..2.0, 4), x_c in -1.0f64..1.0) {
        for l in [Layout::Radial, Layout::Streak { x_c }] {
            prop_assert_eq!(l.encode(&l.decode(&p).unwrap()).unwrap(), p.clone());
        }
    }

    #[test]
    fn rel_err_is_scale_free(alpha in 0.01f64..100.0, seed in 0u64..1000) {
        let mut s = seed;
        let m: Vec<Vec<f64>> = (0..3).map(|_| (0..25).map(|_| lcg(&mut s)).collect()).collect();
        let d: Vec<Vec<f64>> = (0..3).map(|_| (0..25).map(|_| lcg(&mut s)).collect()).collect();
        let scale = |f: &[Vec<f64>]| f.iter().map(|r| r.iter().map(|v| alpha * v).collect()).collect::<Vec<Vec<f64>>>();
        let w = vec![1.0; 25];
        let a = relative_error_trace(&m, &d, &w).unwrap();
        let b = relative_error_trace(&scale(&m), &scale(&d), &w).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.unwrap() - y.unwrap()).abs() <= 1e-12 * x.unwrap().max(1.0));
        }
    }
}

#[test]
fn wrong_vector_lengths_are_rejected() {
    assert!(Layout::Ellipse.decode(&[0.1; 7]).is_err());
    assert!(Layout::MultiSpot { peaks: 2 }.decode(&[0.1; 8]).is_err());
}

#[test]
fn rel_err_reference_cases() {
    let mut s = 7;
    let d: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..25).map(|_| lcg(&mut s)).collect())
        .collect();
    let m: Vec<Vec<f64>> = (0..4)
        .map(|_| (0..25).map(|_| lcg(&mut s)).collect())
        .collect();
    let w = vec![1.0; 25];
    assert!(relative_error_trace(&d, &d, &w)
        .unwrap()
        .iter()
        .all(|v| *v == Some(0.0)));
    let twice: Vec<Vec<f64>> = d
        .iter()
        .map(|f| f.iter().map(|v| 2.0 * v).collect())
        .collect();
    assert!(relative_error_trace(&twice, &d, &w)
        .unwrap()
        .iter()
        .all(|v| (v.unwrap() - 1.0).abs() < 1e-15));
    let got = relative_error_trace(&m, &d, &w).unwrap();
    for k in 0..4 {
        // brute-force double loop over the 5×5 array
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for i in 0..5 {
            for j in 0..5 {
                num += (m[k][i * 5 + j] - d[k][i * 5 + j]).powi(2);
                den += d[k][i * 5 + j].powi(2);
            }
        }
        assert!((got[k].unwrap() - (num / den).sqrt()).abs() < 1e-12);
    }
    let zero = vec![vec![0.0; 25]];
    assert_eq!(
        relative_error_trace(&m[..1], &zero, &w).unwrap(),
        vec![None]
    );
    assert!(relative_error_trace(&m[..1], &d[..2], &w).is_err());
}

#[test]
fn rectangle_masks_the_centre() {
    let grid = Grid2D::square(40).unwrap();
    let m = Rectangle::default().mask(&grid).unwrap();
    let inside = m.iter().filter(|&&v| v > 0.0).count();
    // nodes −π + 2π(j+1)/40 within ±2.6
    let per_axis = (0..40).filter(|&j| grid.x(j).abs() <= 2.6).count();
    assert_eq!(inside, per_axis * per_axis);
    let sliver = Rectangle {
        x_min: 0.1,
        x_max: 0.2,
        y_min: 0.1,
        y_max: 0.2,
    };
    assert!(sliver.mask(&Grid2D::square(4).unwrap()).is_err());
}

#[test]
fn objective_is_tiny_at_truth_and_deterministic() {
    let data = synthetic(&reference_ellipse(), 12);
    let obj = objective(Layout::Ellipse, &data);
    let at_truth = obj.evaluate(&TRUTH);
    assert!(at_truth <= 1e-10, "{at_truth}");
    let mut p = TRUTH;
    p[1] = 0.75;
    let (a, b) = (obj.evaluate(&p), obj.evaluate(&p));
    assert_eq!(a.to_bits(), b.to_bits());
    assert!(a > at_truth);
}

#[test]
fn unusable_candidates_get_exactly_the_penalty() {
    let data = synthetic(&reference_ellipse(), 12);
    let obj = objective(Layout::Ellipse, &data);
    // semi-axes of about 3 reach the domain edge
    let wide = [0.07, 0.8, 0.3, 0.0, 0.0, 0.0, 0.1, 0.5];
    assert_eq!(obj.evaluate(&wide), DEFAULT_PENALTY);
    let mut negative = TRUTH;
    negative[0] = -0.01;
    assert_eq!(obj.evaluate(&negative), DEFAULT_PENALTY);
    let mut bad_beta = TRUTH;
    bad_beta[7] = 0.0;
    assert_eq!(obj.evaluate(&bad_beta), DEFAULT_PENALTY);
    assert_eq!(obj.evaluate(&[f64::NAN; 8]), DEFAULT_PENALTY);
}

#[test]
fn touchdown_before_the_last_frame_is_penalized() {
    let data = synthetic(&reference_ellipse(), 12);
    let mut obj = objective(Layout::Ellipse, &data);
    obj.setup.nd = obj.setup.nd.with_pc(0.0);
    // uniform thinning at rate ≥ 1/T empties the film before T = 1
    let flat_fast = [1.5, 1.5, 0.5, 0.5, 0.0, 0.0, 0.9, 1.0];
    assert_eq!(obj.evaluate(&flat_fast), DEFAULT_PENALTY);
}

#[test]
fn penalty_must_dominate_any_misfit() {
    let data = synthetic(&reference_ellipse(), 12);
    let w = Rectangle::default().mask(&data.grid()).unwrap();
    let points = w.iter().filter(|&&v| v > 0.0).count() as f64;
    let small = points * 11.0;
    assert!(Objective::new(
        Layout::Ellipse,
        setup(12),
        data.times.clone(),
        data.frames.clone(),
        w.clone(),
        small
    )
    .is_err());
    assert!(Objective::new(
        Layout::Ellipse,
        setup(12),
        data.times,
        data.frames,
        w,
        small + 1.0
    )
    .is_ok());
}

#[test]
fn peak_order_and_inert_peaks_do_not_matter() {
    let data = synthetic(&reference_ellipse(), 12);
    let obj = objective(Layout::MultiSpot { peaks: 2 }, &data);
    // layout: v_b, a1, a2, F1, F2, c1, c2, e1, e2, β1, β2
    let p = [
        0.07, 0.8, 0.6, 0.5, 0.5, 0.2, -0.1, 0.0, 0.0, 1.0, -1.0, 0.9, 0.6, 0.5, 0.7,
    ];
    let swapped = [
        0.07, 0.6, 0.8, 0.2, -0.1, 0.5, 0.5, 1.0, -1.0, 0.0, 0.0, 0.6, 0.9, 0.7, 0.5,
    ];
    let (a, b) = (obj.evaluate(&p), obj.evaluate(&swapped));
    assert!((a - b).abs() <= 1e-9 * a.max(1e-12), "{a} {b}");
    // second amplitude equal to its background share: one-spot truth again
    let inert = [
        0.07, 0.8, 0.035, 0.5, 0.5, 0.2, -0.1, 0.0, 0.0, 1.0, -1.0, 0.9, 0.6, 0.5, 0.5,
    ];
    assert!(obj.evaluate(&inert) <= 1e-10);
}

#[test]
fn both_minimizers_solve_rosenbrock() {
    for algorithm in [Algorithm::NelderMead, Algorithm::Praxis] {
        let opts = OptimizerOptions {
            algorithm,
            ..Default::default()
        };
        let out = opts.run(&mut |p: &[f64]| rosenbrock(p), &[-1.2, 1.0]);
        assert!(out.f < 1e-8, "{algorithm:?} {}", out.f);
        assert!(out.iterations <= 500);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
        assert!((out.x[0] - 1.0).abs() < 1e-3 && (out.x[1] - 1.0).abs() < 1e-3);
    }
}

#[test]
fn quadratic_bowls_converge_from_anywhere() {
    let target = [0.3, -1.2, 2.0, 0.05];
    let d = [1.0, 10.0, 0.5, 100.0];
    let mut seed = 3;
    for algorithm in [Algorithm::NelderMead, Algorithm::Praxis] {
        for _ in 0..3 {
            let start: Vec<f64> = (0..4).map(|_| 4.0 * lcg(&mut seed) - 2.0).collect();
            let opts = OptimizerOptions {
                algorithm,
                x_tol: 1e-8,
                max_iterations: 2000,
                ..Default::default()
            };
            let mut bowl = |p: &[f64]| {
                p.iter()
                    .zip(&target)
                    .zip(&d)
                    .map(|((x, t), d)| d * (x - t).powi(2))
                    .sum::<f64>()
            };
            let out = opts.run(&mut bowl, &start);
            for (x, t) in out.x.iter().zip(&target) {
                assert!((x - t).abs() < 1e-5, "{algorithm:?} {:?}", out.x);
            }
        }
    }
}

#[test]
fn optimizers_escape_a_penalized_start() {
    for algorithm in [Algorithm::NelderMead, Algorithm::Praxis] {
        let opts = OptimizerOptions {
            algorithm,
            ..Default::default()
        };
        let mut walled = |p: &[f64]| {
            if p[0] > 1.0 {
                DEFAULT_PENALTY
            } else {
                (p[0] + 0.5).powi(2) + p[1] * p[1]
            }
        };
        let out = opts.run(&mut walled, &[1.05, 0.3]);
        assert!(out.f < 1e-8, "{algorithm:?} {}", out.f);
    }
}

#[test]
fn iteration_cap_reports_non_convergence_with_best_point() {
    let data = synthetic(&reference_ellipse(), 12);
    let obj = objective(Layout::Ellipse, &data);
    let start = [0.07, 0.85, 0.5, 0.5, 0.0, 0.0, 0.9, 0.5];
    let opts = OptimizerOptions {
        algorithm: Algorithm::NelderMead,
        max_iterations: 3,
        ..Default::default()
    };
    let fit = minimize(&obj, &start, &opts).unwrap();
    assert_eq!(fit.status, FitStatus::MaxIterations);
    assert!(fit.objective <= obj.evaluate(&start));
    assert_eq!(fit.objective, obj.evaluate(&fit.parameters));
    assert_eq!(fit.rel_err.len(), 11);
}

#[test]
fn fit_from_its_own_optimum_stays_put() {
    let data = synthetic(&reference_ellipse(), 12);
    let fit = fit_planar(
        &data,
        Layout::Ellipse,
        &TRUTH,
        &setup(12),
        &Rectangle::default(),
        &OptimizerOptions::default(),
    )
    .unwrap();
    assert!(fit.objective <= 1e-10);
    // β and v_b only enter as a product, so check the identifiable set
    for k in [1, 2, 3, 4, 5, 6] {
        assert!(
            (fit.parameters[k] - TRUTH[k]).abs() <= 1e-5,
            "{k}: {}",
            fit.parameters[k]
        );
    }
    assert!((fit.parameters[0] * fit.parameters[7] - 0.035).abs() < 1e-6);
    assert!(fit.final_rel_err().unwrap() < 1e-5);
}

#[test]
fn planar_fit_recovers_a_perturbed_start() {
    let data = synthetic(&reference_ellipse(), 12);
    let start = [0.07, 0.9, 0.45, 0.55, 0.05, -0.05, 0.85, 0.5];
    let s = setup(12);
    let opts = OptimizerOptions {
        algorithm: Algorithm::Praxis,
        ..Default::default()
    };
    let fit = fit_planar(
        &data,
        Layout::Ellipse,
        &start,
        &s,
        &Rectangle::default(),
        &opts,
    )
    .unwrap();
    let obj = objective(Layout::Ellipse, &data);
    assert!(fit.objective < 1e-3 * obj.evaluate(&start));
    for k in [1, 2, 3, 4, 5, 6] {
        assert!(
            (fit.parameters[k] - TRUTH[k]).abs() < 1e-2 * TRUTH[k].abs().max(1.0),
            "{k}: {}",
            fit.parameters[k]
        );
    }
    assert!(fit.history.windows(2).all(|w| w[1] <= w[0]));
    assert!(fit_planar(
        &data,
        Layout::Ellipse,
        &start,
        &setup(16),
        &Rectangle::default(),
        &opts
    )
    .is_err());
}

#[test]
fn radial_fit_matches_circular_data() {
    let spec = EvaporationSpec {
        v_b: 0.07,
        peaks: vec![Peak::Circular(CircularPeak {
            x0: 0.0,
            y0: 0.0,
            xw: 0.6,
            yw: 0.6,
            a: 0.8,
        })],
    };
    let data = synthetic(&spec, 24);
    let start = [0.05, 0.5, 0.7, 1.0];
    let fit = fit_radial_to_2d(
        &data,
        &start,
        &setup(24),
        &Rectangle::default(),
        &OptimizerOptions::default(),
    )
    .unwrap();
    let e = fit.final_lifted_rel_err().unwrap();
    assert!(e <= 1e-2, "{e}");
    let p = &fit.fit.parameters;
    assert!(
        (p[2] - 0.8).abs() < 0.05 && (p[1] - 0.6).abs() < 0.05,
        "{p:?}"
    );
}

#[test]
fn radial_fit_of_flat_data_flattens_j() {
    let n = 16;
    let data = FitData::new(n, output_times(1.0, 6), vec![vec![1.0; n * n]; 6]).unwrap();
    let fit = fit_radial_to_2d(
        &data,
        &[0.05, 0.5, 0.3, 1.0],
        &setup(n),
        &Rectangle::default(),
        &OptimizerOptions::default(),
    )
    .unwrap();
    let p = &fit.fit.parameters;
    assert!((p[2] - p[0] * p[3]).abs() < 1e-3 && p[2] < 1e-3, "{p:?}");
}

#[test]
fn streak_fit_matches_streak_data_only_along_its_axis() {
    let n = 24;
    let spec = EvaporationSpec {
        v_b: 0.07,
        peaks: vec![Peak::Circular(CircularPeak {
            x0: 0.0,
            y0: 0.0,
            xw: 0.5,
            yw: 1e3,
            a: 0.8,
        })],
    };
    let data = synthetic(&spec, n);
    let start = [0.05, 0.6, 0.7, 1.0];
    let (s, r, o) = (setup(n), Rectangle::default(), OptimizerOptions::default());
    let along = fit_streak_to_2d(&data, StreakAxis::Horizontal, &start, &s, &r, &o).unwrap();
    assert!(
        along.lifted_rel_err.iter().all(|e| e.unwrap() <= 1e-2),
        "{:?}",
        along.lifted_rel_err
    );
    let across = fit_streak_to_2d(&data, StreakAxis::Vertical, &start, &s, &r, &o).unwrap();
    assert!(across.final_lifted_rel_err().unwrap() > along.final_lifted_rel_err().unwrap());
}

#[test]
fn multi_spot_needs_two_peaks() {
    let data = synthetic(&reference_ellipse(), 12);
    let r = fit_multi_spot(
        &data,
        1,
        &[0.1; 8],
        &setup(12),
        &Rectangle::default(),
        &OptimizerOptions::default(),
    );
    assert!(r.is_err());
}

#[test]
fn reports_serialize_and_tabulate() {
    let data = synthetic(&reference_ellipse(), 12);
    let opts = OptimizerOptions {
        algorithm: Algorithm::NelderMead,
        max_iterations: 2,
        ..Default::default()
    };
    let one = minimize(&objective(Layout::Ellipse, &data), &TRUTH, &opts).unwrap();
    let two_p = [
        0.07, 0.8, 0.035, 0.5, 0.5, 0.2, -0.1, 0.0, 0.0, 1.0, -1.0, 0.9, 0.6, 0.5, 0.5,
    ];
    let two = minimize(
        &objective(Layout::MultiSpot { peaks: 2 }, &data),
        &two_p,
        &opts,
    )
    .unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fit.json");
    one.write_json(&path).unwrap();
    assert_eq!(FitResult::read_json(&path).unwrap(), one);
    one.write_rel_err_csv(&dir.path().join("rel.csv")).unwrap();
    let mut rd = csv::Reader::from_path(dir.path().join("rel.csv")).unwrap();
    assert_eq!(rd.records().count(), 11);

    let rows = vec![report_row("one", &one), report_row("two", &two)];
    let csv_path = dir.path().join("report.csv");
    write_report_csv(&csv_path, &rows).unwrap();
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    let header: Vec<String> = rd.headers().unwrap().iter().map(str::to_string).collect();
    let recs: Vec<csv::StringRecord> = rd.records().map(|r| r.unwrap()).collect();
    assert_eq!(recs.len(), 2);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    assert_eq!(&recs[0][col("f_x")], "0.5");
    assert_eq!(&recs[0][col("a_2")], "");
    assert_eq!(&recs[1][col("a_2")], "0.035");
    assert_eq!(format_table(&rows).lines().count(), 3);

    write_report_csv(&csv_path, &[]).unwrap();
    let mut rd = csv::Reader::from_path(&csv_path).unwrap();
    assert_eq!(rd.headers().unwrap().len(), 7);
    assert_eq!(rd.records().count(), 0);
}
