//! Command-line definitions and the key=value config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use knotfield::perturbation::NoiseKind;
use knotfield::Vec3;

pub const WORKERS_ENV: &str = "KNOTFIELD_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "knotfield", version, about = "Field-guided rope insertion and knot-tying experiments")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file of defaults for the chosen subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 0)]
    pub workers: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo sweep of noisy insertions; rows as CSV.
    Sweep(SweepArgs),
    /// One insertion; trajectory as CSV `iter,x,y,z,flux`.
    Insert(InsertArgs),
    /// Sample the field on a grid; CSV `x,y,z,Bx,By,Bz,Bnorm`.
    ProbeField(ProbeArgs),
    /// Run a knot program; tick log as CSV.
    Knot(KnotArgs),
}

impl Command {
    pub const NAMES: [&'static str; 4] = ["sweep", "insert", "probe-field", "knot"];
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.05,0.1,0.15,0.2,0.25,0.3")]
    pub sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_kind, default_value = "isotropic,cylindrical")]
    pub kinds: Vec<NoiseKind>,
    /// alpha:beta pairs.
    #[arg(long, value_delimiter = ',', value_parser = parse_combo, default_value = "1:1,2:1,1:2")]
    pub combos: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "0.3,0,2")]
    pub start: Vec3,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub stop: StopArgs,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// Row CSV destination (default stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Per-cell summary destination (default stderr).
    #[arg(long, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}

/// Smoothed flux-drop stopping rule; defaults differ per subcommand.
#[derive(Debug, Args, Clone, Copy)]
pub struct StopArgs {
    /// Consecutive decreases needed to stop.
    #[arg(long)]
    pub stop_k: Option<usize>,
    /// Moving-mean window over the flux.
    #[arg(long)]
    pub stop_window: Option<usize>,
    /// Required relative drop below the running peak.
    #[arg(long)]
    pub stop_drop: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LoopShape {
    Circle,
    Folded,
    Double,
}

#[derive(Debug, Args)]
pub struct LoopArgs {
    #[arg(long = "loop", value_enum, default_value = "circle")]
    pub shape: LoopShape,
    /// Plain-text loop, one `x y z` per line; overrides --loop.
    #[arg(long, value_name = "FILE")]
    pub loop_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
    /// Fold of the folded loop (rad).
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub fold_angle: f64,
    /// Rise per turn of the double loop.
    #[arg(long, default_value_t = 0.1)]
    pub pitch: f64,
    /// Reverse the loop orientation.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value_t = false)]
    pub reverse: bool,
}

#[derive(Debug, Args)]
pub struct InsertArgs {
    #[command(flatten)]
    pub source: LoopArgs,
    /// Start point (default: 2 m out on the axis, entry side).
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true)]
    pub start: Option<Vec3>,
    #[arg(long, default_value_t = 0.01)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[command(flatten)]
    pub stop: StopArgs,
    /// Trajectory CSV destination (default stdout).
    #[arg(long, value_name = "FILE")]
    pub dump: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[command(flatten)]
    pub source: LoopArgs,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "-1.5,0,-1.5")]
    pub min: Vec3,
    #[arg(long, value_parser = parse_vec3, allow_hyphen_values = true, default_value = "1.5,0,1.5")]
    pub max: Vec3,
    /// Samples per axis, `nx,ny,nz`.
    #[arg(long, value_parser = parse_counts, default_value = "31,1,31")]
    pub samples: [usize; 3],
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct KnotArgs {
    /// unknot, 3_1, 4_1, 5_2 or 7_3.
    pub name: Option<String>,
    /// Program file (`step <id>` per line); overrides NAME.
    #[arg(long, value_name = "FILE")]
    pub program: Option<PathBuf>,
    /// Pin step 6 to 6.1 (turn base) or 6.2 (twist).
    #[arg(long)]
    pub step6: Option<String>,
    /// Wave amplitude over anchor radius.
    #[arg(long)]
    pub wave_ratio: Option<f64>,
    /// Anchor discretization, `4x` = four times finer.
    #[arg(long, value_parser = parse_factor, default_value = "1x")]
    pub loop_segments: u32,
    /// Peak anchor speed (m/s).
    #[arg(long)]
    pub loop_speed: Option<f64>,
    /// Seeds the rope layout jitter and the wave/motion parameters.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.12)]
    pub anchor_radius: f64,
    #[arg(long, default_value_t = 0.1)]
    pub anchor_step: f64,
    /// Tick log destination (default stdout).
    #[arg(long, value_name = "FILE")]
    pub log: Option<PathBuf>,
}

pub fn parse_vec3(s: &str) -> Result<Vec3, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| format!("not a number: {p:?}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] => Ok(Vec3::new(x, y, z)),
        _ => Err(format!("expected x,y,z, got {s:?}")),
    }
}

fn parse_counts(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|_| format!("not a count: {p:?}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok([a, b, c]),
        _ => Err(format!("expected three positive counts nx,ny,nz, got {s:?}")),
    }
}

fn parse_combo(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected alpha:beta, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    Ok((num(a)?, num(b)?))
}

fn parse_kind(s: &str) -> Result<NoiseKind, String> {
    s.parse().map_err(|e: knotfield::Error| e.to_string())
}

fn parse_factor(s: &str) -> Result<u32, String> {
    let t = s.trim().trim_end_matches(['x', 'X']);
    match t.parse::<u32>() {
        Ok(k) if k >= 1 => Ok(k),
        _ => Err(format!("expected a refinement like 4x, got {s:?}")),
    }
}

/// Turns `key = value` lines into `--key=value` arguments. Booleans become
/// bare flags when true and are dropped when false.
pub fn config_args(text: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) =
            line.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        if key.is_empty() || key == "config" {
            return Err(format!("config line {}: bad key {key:?}", i + 1));
        }
        match value {
            "true" => out.push(format!("--{key}")),
            "false" => {}
            v => out.push(format!("--{key}={v}")),
        }
    }
    Ok(out)
}

/// Places config-file arguments right after the subcommand name so that
/// flags given on the command line override them.
pub fn merge_config(argv: Vec<String>, config: Vec<String>) -> Vec<String> {
    let Some(pos) = argv.iter().skip(1).position(|a| Command::NAMES.contains(&a.as_str())) else {
        return argv;
    };
    let at = pos + 2;
    let mut merged = argv[..at].to_vec();
    merged.extend(config);
    merged.extend_from_slice(&argv[at..]);
    merged
}

/// Value of `--config` in raw arguments, if any.
pub fn config_path(argv: &[String]) -> Option<PathBuf> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_lines_become_flags() {
        let text = "# sweep defaults\ntrials = 20\nsigmas=0,0.1\nreverse = true\nplanar = false\nmax_iters = 50\n";
        assert_eq!(config_args(text).unwrap(), vec!["--trials=20", "--sigmas=0,0.1", "--reverse", "--max-iters=50"]);
        assert!(config_args("trials 20\n").is_err());
    }

    #[test]
    fn config_goes_after_subcommand() {
        let argv: Vec<String> = ["knotfield", "--workers", "2", "sweep", "--trials", "5"].map(String::from).to_vec();
        let merged = merge_config(argv, vec!["--trials=9".into(), "--seed=3".into()]);
        assert_eq!(merged, ["knotfield", "--workers", "2", "sweep", "--trials=9", "--seed=3", "--trials", "5"]);
        let cli = Cli::try_parse_from(&merged).unwrap();
        match cli.command {
            Command::Sweep(s) => assert_eq!((s.trials, s.seed), (5, 3)),
            _ => panic!("wrong subcommand"),
        }
    }

    #[test]
    fn value_parsers() {
        assert_eq!(parse_vec3("1, 2,3").unwrap(), Vec3::new(1.0, 2.0, 3.0));
        assert!(parse_vec3("1,2").is_err());
        assert_eq!(parse_combo("2:1").unwrap(), (2.0, 1.0));
        assert_eq!(parse_factor("4x").unwrap(), 4);
        assert!(parse_factor("0x").is_err());
        assert!(parse_counts("3,0,2").is_err());
    }
}
