use std::fs;
use std::path::{Path, PathBuf};

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use tearfilm::forward::export::write_solve;
use tearfilm::forward::{output_times, SolveResult};
use tearfilm::inverse::report::{format_table, report_row, write_report_csv};
use tearfilm::inverse::{
    fit_multi_spot, fit_planar, fit_radial_to_2d, fit_streak_to_2d, FitData, FitResult, FitStatus,
    Layout, ModelSetup, ModelSpec,
};
use tearfilm::preprocess::io::{
    read_processed, save_frame_png, write_alignment_csv, write_processed, write_sequence,
    METADATA_FILE,
};
use tearfilm::preprocess::{
    initial_guess_from_final_frame, io::load_sequence, preprocess as run_preprocess, Frame,
    FrameSequence, ProcessedSequence, WindowParams,
};
use tearfilm::{Error, EvaporationSpec};

use crate::config::{FitMode, RunConfig};
use crate::render::{
    frame_from, intensity_frames, sample_indices, save_stretched, side_by_side, write_summary,
};
use crate::Failure;

fn input_error(e: Error) -> Failure {
    Failure::Config(e.to_string())
}

/// Validation problems are config errors; anything raised while solving is
/// a solver failure.
fn fit_error(e: Error) -> Failure {
    match e {
        Error::Config(_)
        | Error::ParameterDomain { .. }
        | Error::Shape(_)
        | Error::Grid(_)
        | Error::Geometry(_) => Failure::Config(e.to_string()),
        other => Failure::Solver(other.to_string()),
    }
}

fn mkdir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))
}

fn forward(cfg: &RunConfig) -> Result<(SolveResult, Vec<Frame>), Failure> {
    let setup = ModelSetup::full(cfg.nondim()?, cfg.initial_conditions()?, cfg.solver);
    let times = output_times(cfg.model.t_end, cfg.model.frames);
    let res = setup.solve(&cfg.evaporation, &times).map_err(input_error)?;
    let frames = intensity_frames(
        &cfg.evaporation,
        &res,
        &setup.nd,
        &setup.ic,
        cfg.solver.grid,
    )?;
    Ok((res, frames))
}

fn solve_status(res: &SolveResult) -> Result<(), Failure> {
    if res.status.is_success() {
        Ok(())
    } else {
        Err(Failure::Solver(format!(
            "{:?} at t = {}; {} of the requested frames written",
            res.status,
            res.failed_at.map_or("?".to_string(), |t| format!("{t:.6}")),
            res.states.len()
        )))
    }
}

pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let (res, frames) = forward(cfg)?;
    cfg.write_resolved(out)?;
    let params = serde_json::to_value(&cfg.evaporation).map_err(Failure::io)?;
    write_solve(&out.join("fields"), &res, params).map_err(Failure::io)?;
    let dir = out.join("frames");
    mkdir(&dir)?;
    for (k, f) in frames.iter().enumerate() {
        save_frame_png(&dir.join(format!("frame_{k:04}.png")), f, 0.0, 1.0).map_err(Failure::io)?;
    }
    write_summary(&out.join("intensity_summary.csv"), &res.times, &frames)?;
    println!(
        "simulated {} frames to t = {} ({} steps, {:.2} s)",
        res.states.len(),
        res.times.last().copied().unwrap_or(0.0),
        res.stats.steps,
        res.stats.wall_seconds
    );
    solve_status(&res)
}

pub fn synth(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    if !matches!(cfg.evaporation, ModelSpec::Planar(_)) {
        return Err(Failure::Config(
            "synth needs a planar evaporation spec".into(),
        ));
    }
    let (res, mut frames) = forward(cfg)?;
    cfg.write_resolved(out)?;
    solve_status(&res)?;
    if cfg.synth.noise > 0.0 {
        let normal =
            Normal::new(0.0, cfg.synth.noise).map_err(|e| Failure::Config(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for f in &mut frames {
            for v in &mut f.data {
                *v += normal.sample(&mut rng);
            }
        }
    }
    let nd = cfg.nondim()?;
    let dt = cfg.model.t_end / (cfg.model.frames - 1) as f64 * nd.t_scale;
    let seq = FrameSequence {
        frames: frames.clone(),
        dt,
        t0: 0.0,
        f0_estimate: cfg.model.f0,
        center: None,
        radii: None,
    };
    write_sequence(&out.join("frames"), &seq).map_err(Failure::io)?;
    let processed = ProcessedSequence {
        n: cfg.solver.grid,
        dt,
        t0: 0.0,
        f0_estimate: cfg.model.f0,
        sigma: 0.0,
        window: WindowParams::default(),
        scale: 1.0,
        frames: frames.into_iter().map(|f| f.data).collect(),
    };
    write_processed(&out.join("processed"), &processed).map_err(Failure::io)?;
    println!(
        "wrote {} frames ({}x{}, {dt:.4} s apart, noise {})",
        processed.len(),
        processed.n,
        processed.n,
        cfg.synth.noise
    );
    Ok(())
}

pub fn preprocess(cfg: &RunConfig, out: &Path) -> Result<(), Failure> {
    let dir = cfg
        .paths
        .frames
        .as_ref()
        .ok_or_else(|| Failure::Config("paths.frames is required".into()))?;
    if !dir.join(METADATA_FILE).is_file() {
        return Err(Failure::Config(format!(
            "{} has no {METADATA_FILE}; required keys: dt, f0_estimate (optional: t0, center, radii)",
            dir.display()
        )));
    }
    let seq = load_sequence(dir).map_err(input_error)?;
    if seq.frames.len() < 2 {
        return Err(Failure::Config(format!(
            "alignment needs at least 2 frames, {} holds {}",
            dir.display(),
            seq.frames.len()
        )));
    }
    let (processed, track) = run_preprocess(&seq, &cfg.preprocess).map_err(input_error)?;
    cfg.write_resolved(out)?;
    write_processed(&out.join("processed"), &processed).map_err(Failure::io)?;
    write_alignment_csv(&out.join("alignment.csv"), &track).map_err(Failure::io)?;
    let preview = out.join("preview");
    mkdir(&preview)?;
    let last = seq.frames.len() - 1;
    for (tag, k) in [("first", 0), ("last", last)] {
        save_stretched(&preview.join(format!("raw_{tag}.png")), &seq.frames[k])?;
        save_stretched(
            &preview.join(format!("processed_{tag}.png")),
            &frame_from(processed.n, &processed.frames[k]),
        )?;
    }
    println!(
        "processed {} frames onto a {}x{} grid (scale {:.6})",
        processed.len(),
        processed.n,
        processed.n,
        processed.scale
    );
    Ok(())
}

fn default_start(cfg: &RunConfig, data: &FitData) -> Result<Vec<f64>, Failure> {
    let guess = initial_guess_from_final_frame(
        data.frames.last().expect("non-empty"),
        &data.grid(),
        &cfg.fit.guess,
    )
    .map_err(input_error)?;
    for w in &guess.warnings {
        eprintln!("initial guess: {w}");
    }
    let (v_b, a, beta) = (guess.v_b, guess.peak.a, guess.peak.beta);
    match cfg.fit.mode {
        FitMode::Ellipse => Layout::Ellipse
            .encode(&ModelSpec::Planar(EvaporationSpec::single_ellipse(
                v_b, guess.peak,
            )))
            .map_err(input_error),
        FitMode::Multi => Err(Failure::Config(format!(
            "fit.initial is required in multi mode ({} values)",
            7 * cfg.fit.peaks + 1
        ))),
        FitMode::Radial | FitMode::Streak => Ok(vec![v_b, 0.5, a, beta]),
    }
}

pub fn fit(cfg: &mut RunConfig, out: &Path) -> Result<(), Failure> {
    let dir = cfg
        .paths
        .processed
        .clone()
        .ok_or_else(|| Failure::Config("paths.processed is required".into()))?;
    let seq = read_processed(&dir).map_err(input_error)?;
    let data =
        FitData::from_processed(&seq, &cfg.nondim()?, cfg.fit.stride).map_err(input_error)?;
    if cfg.solver.grid != data.n {
        eprintln!("solver grid set to the data grid {}", data.n);
        cfg.solver.grid = data.n;
    }
    let p0 = match &cfg.fit.initial {
        Some(p) => p.clone(),
        None => default_start(cfg, &data)?,
    };
    cfg.fit.initial = Some(p0.clone());
    cfg.write_resolved(out)?;
    let setup = cfg.setup()?;
    let (rect, opts) = (&cfg.fit.rectangle, &cfg.fit.optimizer);

    let (mut result, model_frames): (FitResult, Option<Vec<Vec<f64>>>) = match cfg.fit.mode {
        FitMode::Ellipse | FitMode::Multi => {
            let r = if cfg.fit.mode == FitMode::Ellipse {
                fit_planar(&data, Layout::Ellipse, &p0, &setup, rect, opts)
            } else {
                fit_multi_spot(&data, cfg.fit.peaks, &p0, &setup, rect, opts)
            }
            .map_err(fit_error)?;
            let frames = setup.render(&r.spec, &data.times).ok();
            (r, frames)
        }
        FitMode::Radial | FitMode::Streak => {
            let lifted = if cfg.fit.mode == FitMode::Radial {
                fit_radial_to_2d(&data, &p0, &setup, rect, opts)
            } else {
                fit_streak_to_2d(&data, cfg.fit.axis, &p0, &setup, rect, opts)
            }
            .map_err(fit_error)?;
            lifted
                .fit
                .write_rel_err_csv(&out.join("profile_rel_err.csv"))
                .map_err(Failure::io)?;
            let mut r = lifted.fit;
            // the reported error is always measured against the 2D data
            r.rel_err = lifted.lifted_rel_err;
            let frames = (!lifted.lifted.is_empty()).then_some(lifted.lifted);
            (r, frames)
        }
    };
    result.seconds = (result.seconds * 1e3).round() / 1e3;
    result
        .write_json(&out.join("fit.json"))
        .map_err(Failure::io)?;
    result
        .write_rel_err_csv(&out.join("rel_err.csv"))
        .map_err(Failure::io)?;
    match model_frames {
        Some(model) => {
            let dir = out.join("compare");
            mkdir(&dir)?;
            for k in sample_indices(data.frames.len(), cfg.fit.comparison_frames) {
                let pair = side_by_side(
                    &frame_from(data.n, &model[k]),
                    &frame_from(data.n, &data.frames[k]),
                );
                save_stretched(&dir.join(format!("compare_{k:04}.png")), &pair)?;
            }
        }
        None => eprintln!("fitted model could not be rendered; no comparison frames"),
    }
    let summary = result
        .parameter_names
        .iter()
        .zip(&result.parameters)
        .map(|(n, v)| format!("{n}={v:.6}"))
        .collect::<Vec<_>>()
        .join(" ");
    println!(
        "{} fit: {} iterations, objective {:.4e}, final RelErr {}; {summary}",
        cfg.fit.optimizer.algorithm.name(),
        result.iterations,
        result.objective,
        result
            .final_rel_err()
            .map_or("-".to_string(), |e| format!("{:.3}%", 100.0 * e)),
    );
    match result.status {
        FitStatus::Converged => Ok(()),
        FitStatus::MaxIterations => Err(Failure::NotConverged(format!(
            "stopped after {} iterations; report written",
            result.iterations
        ))),
    }
}

fn case_name(path: &Path) -> String {
    let name = |p: &Path| p.file_name().map(|s| s.to_string_lossy().into_owned());
    if path.is_dir() {
        return name(path).unwrap_or_else(|| path.display().to_string());
    }
    if path.file_name().is_some_and(|f| f == "fit.json") {
        if let Some(parent) = path.parent().and_then(name) {
            return parent;
        }
    }
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

pub fn report(paths: &[PathBuf], out: &Path) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for p in paths {
        let file = if p.is_dir() {
            p.join("fit.json")
        } else {
            p.clone()
        };
        match FitResult::read_json(&file) {
            Ok(fit) => rows.push(report_row(&case_name(p), &fit)),
            Err(e) => eprintln!("skipping {}: {e}", file.display()),
        }
    }
    mkdir(out)?;
    write_report_csv(&out.join("report.csv"), &rows).map_err(Failure::io)?;
    let table = format_table(&rows);
    fs::write(out.join("report.txt"), &table).map_err(Failure::io)?;
    print!("{table}");
    Ok(())
}
