mod common;

use common::*;
use tearfilm::forward::*;
use tearfilm::rom::*;
use tearfilm::*;

fn state(h: Vec<f64>, shape: (usize, usize)) -> FieldState {
    let n = h.len();
    FieldState {
        t: 0.0,
        shape,
        h,
        c: vec![1.0; n],
        f: vec![1.0; n],
        p: vec![0.0; n],
        u_bar: vec![0.0; n],
        v_bar: vec![0.0; n],
    }
}

fn three_pattern_snapshots() -> Vec<FieldState> {
    let grid = Grid2D::square(8).unwrap();
    let patterns = [
        grid.sample(|x, _| x.sin()),
        grid.sample(|_, y| y.cos()),
        grid.sample(|x, y| (x + 2.0 * y).sin()),
    ];
    (0..10)
        .map(|s| {
            let s = s as f64;
            let coef = [
                (1.3 * s).sin(),
                (0.7 * s + 1.0).cos(),
                0.1 * s * s - 0.5 * s,
            ];
            let h = (0..grid.len())
                .map(|k| 1.0 + 0.1 * (0..3).map(|p| coef[p] * patterns[p][k]).sum::<f64>())
                .collect();
            state(h, (8, 8))
        })
        .collect()
}

fn tight_rom(threshold: f64) -> RomOptions {
    RomOptions {
        energy_threshold: threshold,
        ..Default::default()
    }
}

#[test]
fn identical_snapshots_keep_no_modes() {
    let grid = Grid2D::square(8).unwrap();
    let s = state(grid.sample(|x, y| 1.0 + 0.1 * (x * y).cos()), (8, 8));
    let basis = build_basis(&[s.clone(), s.clone(), s.clone()], &RomOptions::default()).unwrap();
    assert_eq!(basis.mode_counts(), vec![0, 0, 0]);
    assert!(max_abs_diff(basis.fields[0].mean.as_slice(), &s.h) < 1e-15);
}

#[test]
fn three_patterns_give_three_modes() {
    let basis = build_basis(&three_pattern_snapshots(), &tight_rom(1.0 - 1e-12)).unwrap();
    assert_eq!(basis.mode_counts(), vec![3, 3, 3]);
}

#[test]
fn modes_are_orthonormal_and_spectrum_sorted() {
    let snaps = collect_snapshots(
        &reference_ellipse(),
        &NondimParams::default(),
        &InitialConditions::default(),
        1.0,
        &SolverOptions {
            grid: 16,
            ..Default::default()
        },
        &RomOptions::default(),
    )
    .unwrap();
    let basis = build_basis(&snaps.states, &RomOptions::default()).unwrap();
    for f in &basis.fields {
        assert!(f.rank() > 0);
        let gram = f.modes.tr_mul(&f.modes);
        for i in 0..f.rank() {
            for j in 0..f.rank() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((gram[(i, j)] - want).abs() <= 1e-10);
            }
        }
        assert!(f.singular_values.windows(2).all(|w| w[0] >= w[1]));
        assert!(
            f.energy() >= basis.energy_threshold
                || f.rank() == f.singular_values.iter().filter(|s| **s > 0.0).count()
        );
    }
}

#[test]
fn training_snapshots_reconstruct_within_the_energy_bound() {
    let snaps = three_pattern_snapshots();
    let threshold = 1.0 - 1e-6;
    let basis = build_basis(&snaps, &tight_rom(threshold)).unwrap();
    let field = &basis.fields[0];
    for s in &snaps {
        let back = field.lift(field.project(&s.h).as_slice());
        let err: f64 = back
            .iter()
            .zip(&s.h)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = s.h.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err / norm <= (1.0 - threshold).sqrt());
    }
}

#[test]
fn more_modes_never_reconstruct_worse() {
    let snaps = collect_snapshots(
        &reference_ellipse(),
        &NondimParams::default(),
        &InitialConditions::default(),
        1.0,
        &SolverOptions {
            grid: 12,
            ..Default::default()
        },
        &RomOptions::default(),
    )
    .unwrap();
    let basis = build_basis(&snaps.states, &RomOptions::default()).unwrap();
    let full = &basis.fields[0];
    let mut last = f64::INFINITY;
    for r in 0..=full.rank() {
        let b = full.truncated(r);
        let err: f64 = snaps
            .states
            .iter()
            .map(|s| {
                let back = b.lift(b.project(&s.h).as_slice());
                back.iter()
                    .zip(&s.h)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
            })
            .sum();
        assert!(err <= last * (1.0 + 1e-12) + 1e-28);
        last = err;
    }
}

#[test]
fn own_trajectory_basis_reproduces_the_full_solve() {
    let (nd, ic) = (NondimParams::default(), InitialConditions::default());
    let opts = SolverOptions {
        grid: 24,
        ..Default::default()
    };
    let rom = RomOptions {
        snapshot_window: 1.0,
        ..Default::default()
    };
    let snaps = collect_snapshots(&reference_ellipse(), &nd, &ic, 1.0, &opts, &rom).unwrap();
    let basis = build_basis(&snaps.states, &rom).unwrap();
    let times = output_times(1.0, 6);
    let full = solve_2d(&reference_ellipse(), &nd, &ic, &times, &opts).unwrap();
    let red = solve_reduced(&reference_ellipse(), &nd, &ic, &times, &basis, &opts).unwrap();
    assert_eq!(red.status, SolveStatus::Success);
    for (a, b) in full.states.iter().zip(&red.states) {
        let err: f64 =
            a.h.iter()
                .zip(&b.h)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
        let norm: f64 = a.h.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(err / norm <= 1e-3, "t {} err {}", a.t, err / norm);
    }
}

#[test]
fn uniform_j_reduces_to_the_mean_and_one_constant_mode() {
    let nd = NondimParams::default();
    let opts = SolverOptions {
        grid: 16,
        rel_tol: 1e-10,
        abs_tol: 1e-12,
        ..Default::default()
    };
    let rom = RomOptions {
        snapshot_window: 1.0,
        ..Default::default()
    };
    for pair in UNIFORM_ORACLE.chunks(2) {
        let (j, f0) = (pair[0].0, pair[0].1);
        let ic = InitialConditions::new(f0).unwrap();
        let spec = EvaporationSpec::uniform(j);
        let snaps = collect_snapshots(&spec, &nd, &ic, 1.0, &opts, &rom).unwrap();
        let basis = build_basis(&snaps.states, &rom).unwrap();
        // h and h c vary in time but not in space; h f is conserved pointwise
        assert_eq!(basis.mode_counts(), vec![1, 0, 0]);
        let red = solve_reduced(&spec, &nd, &ic, &[0.5, 1.0], &basis, &opts).unwrap();
        for (row, st) in pair.iter().zip(&red.states) {
            assert!(st.h.iter().all(|h| (h - row.3).abs() <= 1e-6));
            assert!(st.c.iter().all(|c| (c - row.4).abs() <= 1e-6));
            assert!(st.f.iter().all(|f| (f - row.5).abs() <= 1e-6));
        }
    }
}

#[test]
fn basis_file_round_trips_and_rejects_garbage() {
    let dir = tempfile::tempdir().unwrap();
    let basis = build_basis(&three_pattern_snapshots(), &tight_rom(1.0 - 1e-12)).unwrap();
    let path = dir.path().join("basis.bin");
    basis.save(&path).unwrap();
    let back = PodBasis::load(&path).unwrap();
    assert_eq!(back.mode_counts(), basis.mode_counts());
    assert_eq!((back.nx, back.ny, back.snapshot_count), (8, 8, 10));
    for (a, b) in back.fields.iter().zip(&basis.fields) {
        assert_eq!(a.name, b.name);
        assert_eq!(a.modes, b.modes);
        assert_eq!(a.mean, b.mean);
    }
    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(PodBasis::load(&path), Err(Error::Format(_))));
    std::fs::write(&path, &bytes[..20]).unwrap();
    assert!(PodBasis::load(&path).is_err());
}

#[test]
fn basis_must_match_the_grid() {
    let basis = build_basis(&three_pattern_snapshots(), &RomOptions::default()).unwrap();
    let err = solve_reduced(
        &reference_ellipse(),
        &NondimParams::default(),
        &InitialConditions::default(),
        &[1.0],
        &basis,
        &SolverOptions {
            grid: 16,
            ..Default::default()
        },
    );
    assert!(matches!(err, Err(Error::Basis(_))));
}

#[test]
fn options_are_validated() {
    for bad in [
        RomOptions {
            snapshot_window: 0.0,
            ..Default::default()
        },
        RomOptions {
            energy_threshold: 0.5,
            ..Default::default()
        },
        RomOptions {
            energy_threshold: 1.0,
            ..Default::default()
        },
        RomOptions {
            snapshot_count: 1,
            ..Default::default()
        },
    ] {
        assert!(bad.validate().is_err());
    }
    assert!(build_basis(&three_pattern_snapshots()[..1], &RomOptions::default()).is_err());
}

#[test]
fn speedup_report_marks_the_mode() {
    let (nd, ic) = (NondimParams::default(), InitialConditions::default());
    let opts = SolverOptions {
        grid: 16,
        ..Default::default()
    };
    let times = output_times(1.0, 5);
    let full = rom_speedup_report(&reference_ellipse(), &nd, &ic, &times, &opts, None).unwrap();
    assert_eq!(full.mode, "full-order");
    assert!(full.mode_counts.is_empty());
    let red = rom_speedup_report(
        &reference_ellipse(),
        &nd,
        &ic,
        &times,
        &opts,
        Some(&RomOptions::default()),
    )
    .unwrap();
    assert_eq!(red.mode, "reduced");
    assert!(red.speedup > 0.0 && red.mode_counts.len() == 3);
}
