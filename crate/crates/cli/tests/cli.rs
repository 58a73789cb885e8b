use std::f64::consts::TAU;
use std::path::Path;
use std::process::{Command, Output};

fn knotfield(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_knotfield"))
        .args(args)
        .env_remove("KNOTFIELD_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Numeric CSV body as rows of `Option<f64>` (empty or text cells are `None`).
fn table(text: &str) -> (Vec<String>, Vec<Vec<Option<f64>>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|c| c.parse().ok()).collect()).collect();
    (header, rows)
}

fn trajectory(o: &Output) -> Vec<[f64; 4]> {
    let (header, rows) = table(&stdout(o));
    assert_eq!(header, ["iter", "x", "y", "z", "flux"]);
    rows.iter().map(|r| [r[1].unwrap(), r[2].unwrap(), r[3].unwrap(), r[4].unwrap()]).collect()
}

fn summary_field(o: &Output, key: &str) -> String {
    let err = stderr(o);
    let line = err.lines().find(|l| l.contains(&format!("{key}="))).expect("summary line");
    line.split_whitespace().find_map(|kv| kv.strip_prefix(&format!("{key}="))).unwrap().to_string()
}

#[test]
fn exit_codes() {
    assert_eq!(knotfield(&[]).status.code(), Some(2));
    assert_eq!(knotfield(&["--help"]).status.code(), Some(0));
    assert_eq!(knotfield(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(knotfield(&["insert", "--gamma", "nope"]).status.code(), Some(2));
    assert_eq!(knotfield(&["insert", "--gamma", "0"]).status.code(), Some(2));
    assert_eq!(knotfield(&["insert", "--loop-file", "/no/such/loop"]).status.code(), Some(2));
    assert_eq!(knotfield(&["knot"]).status.code(), Some(2));
    assert_eq!(knotfield(&["knot", "9_9"]).status.code(), Some(2));
    assert_eq!(knotfield(&["sweep", "--trials", "0"]).status.code(), Some(2));
    let o = knotfield(&["insert", "--max-iters", "5"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(summary_field(&o, "termination"), "max_iters");
}

#[test]
fn failed_knot_program_exits_one_with_log() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("bad.txt");
    std::fs::write(&prog, "step 1\nstep 7\n").unwrap();
    let o = knotfield(&["knot", "--program", prog.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).lines().last().unwrap().contains(",7,failure,"));
    assert_eq!(summary_field(&o, "completed"), "false");
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("sweep.cfg");
    std::fs::write(&cfg, "# tiny sweep\ntrials = 2\nsigmas = 0,0.1\ncombos = 1:1\nkinds = isotropic\nseed = 7\n")
        .unwrap();
    let c = cfg.to_str().unwrap();
    let o = knotfield(&["--config", c, "sweep"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 2);
    assert!(stderr(&o).contains("seed=7"));
    let o = knotfield(&["sweep", "--config", c, "--trials", "3"]);
    assert_eq!(stdout(&o).lines().count(), 1 + 2 * 3);

    std::fs::write(&cfg, "not a pair\n").unwrap();
    assert_eq!(knotfield(&["--config", c, "sweep"]).status.code(), Some(2));
    std::fs::write(&cfg, "no_such_flag = 1\n").unwrap();
    assert_eq!(knotfield(&["--config", c, "sweep"]).status.code(), Some(2));
}

#[test]
fn worker_env_is_accepted() {
    let o = Command::new(env!("CARGO_BIN_EXE_knotfield"))
        .args(["sweep", "--trials", "2", "--sigmas", "0", "--combos", "1:1"])
        .env("KNOTFIELD_WORKERS", "3")
        .output()
        .unwrap();
    assert!(o.status.success());
    let o = Command::new(env!("CARGO_BIN_EXE_knotfield"))
        .args(["sweep", "--trials", "2"])
        .env("KNOTFIELD_WORKERS", "lots")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn every_loop_shape_stops() {
    for shape in ["circle", "folded", "double"] {
        let o = knotfield(&["insert", "--loop", shape]);
        assert!(o.status.success(), "{shape}: {}", stderr(&o));
        assert_eq!(summary_field(&o, "termination"), "field_drop");
        assert_eq!(summary_field(&o, "success"), "true");
        let t = trajectory(&o);
        // Strict stop: the last sample is the first one below its predecessor.
        let n = t.len();
        assert!(t[n - 1][3] < t[n - 2][3]);
        assert!(t[..n - 1].windows(2).all(|w| w[1][3] >= w[0][3]), "{shape}");
    }
}

#[test]
fn loop_file_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("loop.txt");
    let n = 63;
    let text: String = (0..n)
        .map(|k| {
            let a = TAU * k as f64 / n as f64;
            format!("{} {} 0\n", a.cos(), a.sin())
        })
        .collect();
    std::fs::write(&path, text).unwrap();
    let from_file = knotfield(&["insert", "--loop-file", path.to_str().unwrap()]);
    let built = knotfield(&["insert"]);
    assert!(from_file.status.success());
    let (a, b) = (trajectory(&from_file), trajectory(&built));
    assert_eq!(a.len(), b.len());
    for (p, q) in a.iter().zip(&b) {
        assert!((0..4).all(|k| (p[k] - q[k]).abs() < 1e-9));
    }
}

#[test]
fn reversed_loop_is_approached_from_the_other_side() {
    let fwd = trajectory(&knotfield(&["insert"]));
    let rev = trajectory(&knotfield(&["insert", "--reverse"]));
    assert!(fwd[0][2] < 0.0 && rev[0][2] > 0.0);
    assert_eq!(fwd.len(), rev.len());
    for (p, q) in fwd.iter().zip(&rev) {
        assert!((p[2] + q[2]).abs() < 1e-9 && (p[3] - q[3]).abs() < 1e-9);
    }
}

#[test]
fn weights_change_the_planar_path() {
    let start = ["insert", "--start", "0.4,0.1,-1.5"];
    let base = trajectory(&knotfield(&[&start[..], &["--alpha", "1", "--beta", "1"]].concat()));
    let a = trajectory(&knotfield(&[&start[..], &["--alpha", "2", "--beta", "1"]].concat()));
    let b = trajectory(&knotfield(&[&start[..], &["--alpha", "1", "--beta", "2"]].concat()));
    let gap = |t: &[[f64; 4]]| {
        base.iter().zip(t).map(|(p, q)| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt()).fold(0.0, f64::max)
    };
    assert!(gap(&a) > 0.01 && gap(&b) > 0.01);
    // Heavier in-plane weight pulls the crossing toward the centre.
    let radius_at_plane = |t: &[[f64; 4]]| {
        let w = t.windows(2).find(|w| w[0][2] < 0.0 && w[1][2] >= 0.0).unwrap();
        let s = -w[0][2] / (w[1][2] - w[0][2]);
        let (x, y) = (w[0][0] + s * (w[1][0] - w[0][0]), w[0][1] + s * (w[1][1] - w[0][1]));
        x.hypot(y)
    };
    assert!(radius_at_plane(&a) < radius_at_plane(&base));
    assert!(radius_at_plane(&base) < radius_at_plane(&b));
}

#[test]
fn insert_writes_dump_file() {
    let dir = tempfile::tempdir().unwrap();
    let dump = dir.path().join("t.csv");
    let o = knotfield(&["insert", "--dump", dump.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&dump).unwrap().starts_with("iter,x,y,z,flux\n"));
}

fn probe(args: &[&str]) -> Vec<Vec<Option<f64>>> {
    let o = knotfield(&[&["probe-field"], args].concat());
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = table(&stdout(&o));
    assert_eq!(header, ["x", "y", "z", "Bx", "By", "Bz", "Bnorm"]);
    rows
}

#[test]
fn probe_is_mirror_symmetric() {
    // 64 vertices, so the polygon is symmetric under x -> -x as well as z -> -z.
    let rows = probe(&["--samples", "11,1,11", "--step", "0.0985"]);
    assert_eq!(rows.len(), 121);
    let at = |i: usize, j: usize| rows[i * 11 + j][6].unwrap();
    for i in 0..11 {
        for j in 0..11 {
            let b = at(i, j);
            for m in [at(10 - i, j), at(i, 10 - j), at(10 - i, 10 - j)] {
                assert!((b - m).abs() <= 1e-12 * b.max(1.0), "({i},{j}) {b} vs {m}");
            }
        }
    }
}

#[test]
fn probe_axis_matches_formula() {
    for (scale, radius) in [(1.0, 1.0), (2.0, 0.5)] {
        let (s, r) = (scale.to_string(), radius.to_string());
        let rows = probe(&["--min", "0,0,-2", "--max", "0,0,2", "--samples", "1,1,9", "--scale", &s, "--radius", &r]);
        for row in rows {
            let z = row[2].unwrap();
            let want = TAU * scale * radius * radius / (radius * radius + z * z).powf(1.5);
            assert!((row[6].unwrap() - want).abs() / want < 5e-3, "z={z}");
            assert!((row[5].unwrap() - want).abs() / want < 5e-3);
        }
    }
}

#[test]
fn probe_reversal_negates_vectors() {
    let grid = ["--min", "-1,-0.5,-1", "--max", "1,0.5,1", "--samples", "5,3,5"];
    let fwd = probe(&grid);
    let rev = probe(&[&grid[..], &["--reverse"]].concat());
    for (a, b) in fwd.iter().zip(&rev) {
        if a[6].is_none() {
            // On the conductor; both runs flag it.
            assert!(b[6].is_none());
            continue;
        }
        for k in 3..6 {
            let (p, q) = (a[k].unwrap(), b[k].unwrap());
            assert!((p + q).abs() <= 1e-12 * a[6].unwrap().max(1.0));
        }
        assert!((a[6].unwrap() - b[6].unwrap()).abs() <= 1e-12 * a[6].unwrap().max(1.0));
    }
}

#[test]
fn probe_flags_singular_rows() {
    let o = knotfield(&["probe-field", "--min", "1,0,0", "--max", "1,0,1", "--samples", "1,1,2"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[1], "1,0,0,,,,singular");
    assert!(!lines[2].contains("singular"));
    assert_eq!(summary_field(&o, "singular"), "1");
}

#[test]
fn knot_trefoil_completes() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let o = knotfield(&["knot", "3_1", "--log", log.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(summary_field(&o, "completed"), "true");
    assert_eq!(summary_field(&o, "insertions"), "2");
    assert_eq!(summary_field(&o, "twists"), "1");
    let text = std::fs::read_to_string(&log).unwrap();
    assert!(text.starts_with("tick,active_step,status"));
    assert!(Path::new(&log).exists() && o.stdout.is_empty());
}

#[test]
fn knot_program_file_and_step_choice() {
    let dir = tempfile::tempdir().unwrap();
    let prog = dir.path().join("trefoil.txt");
    std::fs::write(
        &prog,
        "name mine\nstep 1\nstep 2\nstep 3\nstep 4\nstep 5\nstep 6\nstep 7\nstep 8\nstep 9\nstep 10\n",
    )
    .unwrap();
    let o = knotfield(&["knot", "--program", prog.to_str().unwrap(), "--step6", "6.1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(summary_field(&o, "program"), "mine");
    assert_eq!(knotfield(&["knot", "3_1", "--step6", "6.9"]).status.code(), Some(2));
}
