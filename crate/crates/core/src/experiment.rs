//! Seeded Monte Carlo sweeps of noisy insertions.
//!
//! Every trial draws from its own ChaCha stream whose seed depends only on
//! the master seed and the trial's `(cell, trial)` coordinates, so results do
//! not depend on how trials are scheduled across workers.

use std::fmt::Write as _;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::FieldParams;
use crate::geometry::{make_circle, Loop, Vec3};
use crate::insertion::{default_max_iters, run_insertion, InsertionOutcome, InsertionParams, StopRule, Termination};
use crate::perturbation::{NoiseKind, NoisePerturber, NoiseSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub sigmas: Vec<f64>,
    pub kinds: Vec<NoiseKind>,
    pub combos: Vec<(f64, f64)>,
    pub trials: usize,
    pub gamma: f64,
    pub start: Vec3,
    pub seed: u64,
    /// 0 means "use the rayon default".
    pub workers: usize,
    pub stop: StopRule,
    pub loop_radius: f64,
    pub loop_step: f64,
    /// `None` selects [`default_max_iters`].
    pub max_iters: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sigmas: (0..=6).map(|k| k as f64 * 5.0 / 100.0).collect(),
            kinds: vec![NoiseKind::Isotropic, NoiseKind::Cylindrical],
            combos: vec![(1.0, 1.0), (2.0, 1.0), (1.0, 2.0)],
            trials: 1000,
            gamma: 0.01,
            start: Vec3::new(0.3, 0.0, 2.0),
            seed: 42,
            workers: 0,
            stop: StopRule::noisy(),
            loop_radius: 1.0,
            loop_step: 0.1,
            max_iters: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.sigmas.is_empty() || self.kinds.is_empty() || self.combos.is_empty() {
            return Err(Error::InvalidParameter("sweep needs at least one sigma, kind and alpha/beta pair".into()));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s >= 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {s}")));
        }
        for &(alpha, beta) in &self.combos {
            FieldParams::new(1.0, self.gamma, alpha, beta)?;
        }
        self.stop.validate()?;
        if !self.start.iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter("start must be finite".into()));
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &kind in &self.kinds {
            for &sigma in &self.sigmas {
                for &(alpha, beta) in &self.combos {
                    cells.push(Cell { kind, sigma, alpha, beta });
                }
            }
        }
        cells
    }

    pub fn row_count(&self) -> usize {
        self.kinds.len() * self.sigmas.len() * self.combos.len() * self.trials
    }

    /// Nominal circle in the XY plane, oriented so its field at the loop
    /// centre points away from the start (the start side is the entry side).
    pub fn nominal_loop(&self) -> Result<Loop> {
        let normal = if self.start.z > 0.0 { -Vec3::z() } else { Vec3::z() };
        make_circle(self.loop_radius, self.loop_step, Vec3::zeros(), normal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub kind: NoiseKind,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub cell: Cell,
    pub trial: usize,
    pub seed: u64,
    pub success: bool,
    pub quality: Option<f64>,
    pub delay: Option<usize>,
    pub termination: Termination,
}

pub const SWEEP_HEADER: &str = "noise_kind,sigma,alpha,beta,trial,seed,success,quality,delay,termination";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.cell.kind.label(),
            self.cell.sigma,
            self.cell.alpha,
            self.cell.beta,
            self.trial,
            self.seed,
            self.success as u8,
            opt(self.quality.map(|q| q.to_string())),
            opt(self.delay.map(|d| d.to_string())),
            self.termination.label(),
        )
    }
}

/// splitmix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in cell `cell`:
/// `mix64(mix64(master ^ mix64(cell + 1)) + trial)`.
pub fn trial_seed(master: u64, cell: usize, trial: usize) -> u64 {
    let c = mix64(master ^ mix64(cell as u64 + 1));
    mix64(c.wrapping_add(trial as u64))
}

pub fn run_trial(config: &SweepConfig, nominal: &Loop, cell: &Cell, seed: u64) -> Result<InsertionOutcome> {
    let field = FieldParams::new(1.0, config.gamma, cell.alpha, cell.beta)?;
    let distance = (config.start - nominal.centroid()).norm();
    let params = InsertionParams::new(
        field,
        config.max_iters.unwrap_or_else(|| default_max_iters(distance, config.gamma)),
        config.stop,
        cell.alpha != cell.beta,
    )?;
    let perturber = NoisePerturber::new(nominal.clone(), NoiseSpec::new(cell.kind, cell.sigma)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(run_insertion(config.start, nominal, |_| perturber.sample(&mut rng), &params))
}

/// Runs every trial; rows come back ordered by `(cell, trial)`.
pub fn run_sweep(config: &SweepConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let nominal = config.nominal_loop()?;
    let cells = config.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..config.trials).map(move |t| (c, t))).collect();
    let work = || {
        jobs.par_iter()
            .map(|&(c, t)| {
                let cell = cells[c];
                let seed = trial_seed(config.seed, c, t);
                match run_trial(config, &nominal, &cell, seed) {
                    Ok(out) => SweepRow {
                        cell,
                        trial: t,
                        seed,
                        success: out.success,
                        quality: out.quality,
                        delay: out.delay,
                        termination: out.termination,
                    },
                    Err(e) => SweepRow {
                        cell,
                        trial: t,
                        seed,
                        success: false,
                        quality: None,
                        delay: None,
                        termination: Termination::Error(e),
                    },
                }
            })
            .collect::<Vec<_>>()
    };
    if config.workers == 0 {
        Ok(work())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.workers)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("worker pool: {e}")))?;
        Ok(pool.install(work))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: Cell,
    pub trials: usize,
    pub failures: usize,
    pub quality_mean: f64,
    pub quality_std: f64,
    pub delay_mean: f64,
    pub delay_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-cell statistics in first-appearance order. Quality and delay
/// average over trials that reached the loop plane.
pub fn summarize(rows: &[SweepRow]) -> Vec<CellSummary> {
    let mut groups: Vec<(Cell, Vec<&SweepRow>)> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(c, _)| *c == row.cell) {
            Some((_, g)) => g.push(row),
            None => groups.push((row.cell, vec![row])),
        }
    }
    groups
        .into_iter()
        .map(|(cell, g)| {
            let q: Vec<f64> = g.iter().filter_map(|r| r.quality).collect();
            let d: Vec<f64> = g.iter().filter_map(|r| r.delay.map(|d| d as f64)).collect();
            let (quality_mean, quality_std) = mean_std(&q);
            let (delay_mean, delay_std) = mean_std(&d);
            CellSummary {
                cell,
                trials: g.len(),
                failures: g.iter().filter(|r| !r.success).count(),
                quality_mean,
                quality_std,
                delay_mean,
                delay_std,
            }
        })
        .collect()
}

pub const SUMMARY_HEADER: &str =
    "noise_kind,sigma,alpha,beta,trials,failures,quality_mean,quality_std,delay_mean,delay_std";

pub fn summary_csv(config: &SweepConfig, summaries: &[CellSummary]) -> String {
    let mut out = String::new();
    let s = config.start;
    let r = config.stop;
    let _ = writeln!(
        out,
        "# start={},{},{} seed={} gamma={} stop_k={} stop_window={} stop_drop={}",
        s.x, s.y, s.z, config.seed, config.gamma, r.persistence, r.window, r.drop
    );
    let _ = writeln!(out, "{SUMMARY_HEADER}");
    for c in summaries {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            c.cell.kind.label(),
            c.cell.sigma,
            c.cell.alpha,
            c.cell.beta,
            c.trials,
            c.failures,
            c.quality_mean,
            c.quality_std,
            c.delay_mean,
            c.delay_std
        );
    }
    let total: usize = summaries.iter().map(|c| c.failures).sum();
    let _ = writeln!(out, "# total_failures={total}");
    out
}

pub fn write_rows<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for row in rows {
        writeln!(w, "{}", row.to_csv())?;
    }
    w.flush()?;
    Ok(())
}
