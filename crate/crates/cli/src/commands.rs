use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use knotfield::experiment::{run_sweep, summarize, summary_csv, write_rows, SweepConfig};
use knotfield::field::field;
use knotfield::geometry::{make_circle, make_double, make_folded};
use knotfield::insertion::{default_max_iters, run_insertion};
use knotfield::knot::{run_program, KnotName, KnotProgram, KnotScenario};
use knotfield::{FieldParams, InsertionParams, Loop, StopRule, Termination, Vec3};
use rayon::prelude::*;

use crate::args::{Cli, Command, InsertArgs, KnotArgs, LoopArgs, LoopShape, ProbeArgs, StopArgs, SweepArgs};
use crate::Failure;

pub fn run(cli: Cli) -> Result<(), Failure> {
    if cli.workers > 0 {
        // Ignore "already initialised": only the first pool can be global.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    match cli.command {
        Command::Sweep(a) => sweep(a, cli.workers),
        Command::Insert(a) => insert(a),
        Command::ProbeField(a) => probe(a),
        Command::Knot(a) => knot(a),
    }
}

fn io_fail(path: Option<&Path>, e: io::Error) -> Failure {
    match path {
        Some(p) => Failure::Run(format!("{}: {e}", p.display())),
        None => Failure::Run(e.to_string()),
    }
}

/// File at `path`, or `fallback` when no path was given.
fn sink(path: &Option<PathBuf>, fallback: Box<dyn Write>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => Ok(Box::new(BufWriter::new(File::create(p).map_err(|e| io_fail(Some(p), e))?))),
        None => Ok(fallback),
    }
}

fn stdout() -> Box<dyn Write> {
    Box::new(BufWriter::new(io::stdout().lock()))
}

fn stderr() -> Box<dyn Write> {
    Box::new(io::stderr())
}

fn read_input(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn stop_rule(a: &StopArgs, default: StopRule) -> Result<StopRule, Failure> {
    let rule = StopRule {
        persistence: a.stop_k.unwrap_or(default.persistence),
        window: a.stop_window.unwrap_or(default.window),
        drop: a.stop_drop.unwrap_or(default.drop),
    };
    rule.validate()?;
    Ok(rule)
}

fn sweep(a: SweepArgs, workers: usize) -> Result<(), Failure> {
    let config = SweepConfig {
        sigmas: a.sigmas,
        kinds: a.kinds,
        combos: a.combos,
        trials: a.trials,
        gamma: a.gamma,
        start: a.start,
        seed: a.seed,
        workers,
        stop: stop_rule(&a.stop, StopRule::noisy())?,
        loop_radius: a.radius,
        loop_step: a.step,
        max_iters: a.max_iters,
    };
    config.validate()?;
    let rows = run_sweep(&config)?;
    let mut out = sink(&a.out, stdout())?;
    write_rows(&mut out, &rows)?;
    let mut summary = sink(&a.summary, stderr())?;
    summary
        .write_all(summary_csv(&config, &summarize(&rows)).as_bytes())
        .and_then(|_| summary.flush())
        .map_err(|e| io_fail(a.summary.as_deref(), e))
}

fn build_loop(a: &LoopArgs) -> Result<Loop, Failure> {
    let lp = match &a.loop_file {
        Some(path) => Loop::parse(&read_input(path)?)?,
        None => match a.shape {
            LoopShape::Circle => make_circle(a.radius, a.step, Vec3::zeros(), Vec3::z())?,
            LoopShape::Folded => make_folded(a.radius, a.step, a.fold_angle)?,
            LoopShape::Double => make_double(a.radius, a.step, a.pitch)?,
        },
    };
    Ok(if a.reverse { lp.reversed() } else { lp })
}

fn insert(a: InsertArgs) -> Result<(), Failure> {
    let lp = build_loop(&a.source)?;
    let area = lp.area_vector();
    if area.norm() <= 0.0 {
        return Err(Failure::Usage("loop encloses no area; give --start explicitly".into()));
    }
    let start = match a.start {
        Some(s) => s,
        None => lp.centroid() - area.normalize() * (2.0 * lp.mean_radius()),
    };
    let field_params = FieldParams::new(1.0, a.gamma, a.alpha, a.beta)?;
    let distance = (start - lp.centroid()).norm();
    let params = InsertionParams::new(
        field_params,
        a.max_iters.unwrap_or_else(|| default_max_iters(distance, a.gamma)),
        stop_rule(&a.stop, StopRule::strict())?,
        a.alpha != a.beta,
    )?;
    let out = run_insertion(start, &lp, |_| lp.clone(), &params);

    let mut dump = sink(&a.dump, stdout())?;
    let mut text = String::from("iter,x,y,z,flux\n");
    for (i, (p, f)) in out.trajectory.positions.iter().zip(&out.trajectory.flux).enumerate() {
        text.push_str(&format!("{i},{},{},{},{f}\n", p.x, p.y, p.z));
    }
    dump.write_all(text.as_bytes()).and_then(|_| dump.flush()).map_err(|e| io_fail(a.dump.as_deref(), e))?;

    let s = out.stop_point;
    let fmt = |v: Option<String>| v.unwrap_or_else(|| "none".into());
    eprintln!(
        "termination={} success={} quality={} delay={} stop={},{},{} iters={}",
        out.termination.label(),
        out.success,
        fmt(out.quality.map(|q| q.to_string())),
        fmt(out.delay.map(|d| d.to_string())),
        s.x,
        s.y,
        s.z,
        out.trajectory.len()
    );
    match out.termination {
        Termination::FieldDrop => Ok(()),
        Termination::MaxIters => Err(Failure::Run("no field drop within the iteration budget".into())),
        Termination::Error(e) => Err(Failure::Run(e.to_string())),
    }
}

fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![min];
    }
    (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect()
}

fn probe(a: ProbeArgs) -> Result<(), Failure> {
    let lp = build_loop(&a.source)?;
    let params = FieldParams::new(a.scale, 0.01, 1.0, 1.0)?;
    let [nx, ny, nz] = a.samples;
    let (xs, ys, zs) = (axis(a.min.x, a.max.x, nx), axis(a.min.y, a.max.y, ny), axis(a.min.z, a.max.z, nz));
    let mut points = Vec::with_capacity(nx * ny * nz);
    for &x in &xs {
        for &y in &ys {
            for &z in &zs {
                points.push(Vec3::new(x, y, z));
            }
        }
    }
    // Singular samples keep their coordinates, leave the vector columns empty
    // and carry `singular` in place of the norm.
    let rows: Vec<(String, bool)> = points
        .par_iter()
        .map(|p| match field(&lp, p, &params) {
            Ok(b) => (format!("{},{},{},{},{},{},{}\n", p.x, p.y, p.z, b.x, b.y, b.z, b.norm()), false),
            Err(_) => (format!("{},{},{},,,,singular\n", p.x, p.y, p.z), true),
        })
        .collect();
    let mut out = sink(&a.out, stdout())?;
    let mut text = String::from("x,y,z,Bx,By,Bz,Bnorm\n");
    for (row, _) in &rows {
        text.push_str(row);
    }
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| io_fail(a.out.as_deref(), e))?;
    let singular = rows.iter().filter(|(_, s)| *s).count();
    eprintln!("samples={} singular={singular}", rows.len());
    Ok(())
}

fn knot(a: KnotArgs) -> Result<(), Failure> {
    let mut program = match (&a.program, &a.name) {
        (Some(path), _) => KnotProgram::parse(&read_input(path)?)?,
        (None, Some(name)) => KnotProgram::knot(name.parse::<KnotName>()?),
        (None, None) => return Err(Failure::Usage("give a knot name or --program FILE".into())),
    };
    if let Some(step) = &a.step6 {
        program = program.with_step6(step)?;
    }
    let seed = a.seed.unwrap_or(0);
    let mut scene = KnotScenario::new(a.anchor_radius, a.anchor_step)?;
    if a.seed.is_some() {
        scene = scene.jitter(seed);
    }
    if a.loop_segments > 1 {
        scene = scene.with_anchor_step(a.anchor_step / a.loop_segments as f64)?;
    }
    if let Some(ratio) = a.wave_ratio {
        scene = scene.with_wave(ratio, seed)?;
    }
    if let Some(speed) = a.loop_speed {
        scene = scene.with_motion(speed, seed)?;
    }
    let result = run_program(&program, &scene)?;
    let mut log = sink(&a.log, stdout())?;
    log.write_all(result.log_csv().as_bytes()).and_then(|_| log.flush()).map_err(|e| io_fail(a.log.as_deref(), e))?;
    eprintln!(
        "program={} completed={} insertions={} twists={} link={} ticks={} max_length_error={:e} max_binding_error={:e}",
        result.program,
        result.completed,
        result.insertion_count,
        result.twist_count,
        result.link_check.map_or("none".into(), |l| l.to_string()),
        result.ticks,
        result.max_length_error,
        result.max_binding_error,
    );
    match result.failure {
        None if result.completed => Ok(()),
        failure => Err(Failure::Run(failure.unwrap_or_else(|| "program did not complete".into()))),
    }
}
