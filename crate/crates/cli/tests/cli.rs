use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn band(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_band"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "0")
        .env_remove("BAND_THREADS")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn solve_small(dir: &Path, out: &str) -> Output {
    band(&["solve", "--n", "64", "--out", out], dir)
}

#[test]
fn too_few_nodes_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let o = band(&["solve", "--n", "4"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("n_nodes"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn unknown_flag_and_missing_config_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(band(&["solve", "--nope"], dir.path()).status.code(), Some(1));
    let o = band(&["solve", "--config", "absent.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("absent.cfg"), "{}", stderr(&o));
}

#[test]
fn bad_config_value_names_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.cfg"), "n_nodes = 64\nA = -1\n").unwrap();
    let o = band(&["solve", "--config", "run.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("A"), "{}", stderr(&o));
}

#[test]
fn solve_analyze_export_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = solve_small(dir.path(), "run");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let run = dir.path().join("run");
    for f in ["profile.csv", "curve.csv", "report.txt"] {
        assert!(run.join(f).is_file(), "{f}");
    }
    let report = fs::read_to_string(run.join("report.txt")).unwrap();
    assert!(report.contains("converged: true"));

    let o = band(&["analyze", "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fields = fs::read_to_string(run.join("fields.csv")).unwrap();
    let mut data = fields.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(data.next(), Some("s,K,W,phi,T,N,B,Mt,Mn,Mb,r23,r24"));
    assert_eq!(data.count(), 64);
    let analysis = fs::read_to_string(run.join("analysis.txt")).unwrap();
    assert!(analysis.contains("s_X:"));
    assert!(run.join("analysis.csv").is_file());
    assert!(run.join("residuals.txt").is_file());

    let o = band(&["export", "--out", "run", "--width", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let obj = fs::read_to_string(run.join("band.obj")).unwrap();
    assert_eq!(obj.lines().filter(|l| l.starts_with("v ")).count(), 128);
    assert_eq!(obj.lines().filter(|l| l.starts_with("f ")).count(), 128);
    // One circuit carries the -g edge onto the +g edge: the closing faces join
    // the last node's edges to the opposite edges of node 0, whose generator
    // points the other way.
    let verts: Vec<[f64; 3]> = obj
        .lines()
        .filter_map(|l| l.strip_prefix("v "))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect();
    let faces: Vec<&str> = obj.lines().filter(|l| l.starts_with("f ")).collect();
    assert_eq!(faces[faces.len() - 2], "f 127 2 1");
    assert_eq!(faces[faces.len() - 1], "f 127 1 128");
    let rung = |i: usize| -> Vec<f64> { (0..3).map(|j| verts[2 * i + 1][j] - verts[2 * i][j]).collect() };
    let (first, last) = (rung(0), rung(63));
    let cos = first.iter().zip(&last).map(|(a, b)| a * b).sum::<f64>() / 0.01;
    assert!(cos < -0.9, "{cos}");
    for f in ["K.csv", "W.csv", "phi.csv"] {
        let table = fs::read_to_string(run.join(f)).unwrap();
        let rows: Vec<&str> = table.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(rows.len(), 65, "{f}");
        assert!(rows.iter().all(|r| r.split(',').count() == 2), "{f}");
    }
    assert_eq!(band(&["export", "--out", "run", "--width", "0"], dir.path()).status.code(), Some(1));
}

#[test]
fn malformed_profile_reports_its_line() {
    let dir = tempfile::tempdir().unwrap();
    let run = dir.path().join("run");
    fs::create_dir(&run).unwrap();
    fs::write(
        run.join("profile.csv"),
        "# length = 6.283185307179586\n# closure = moebius\ns,K,W\n0.1,1,0\n0.2,oops,0\n",
    )
    .unwrap();
    fs::write(run.join("curve.csv"), "").unwrap();
    let o = band(&["analyze", "--out", "run"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(":5:"), "{}", stderr(&o));
}

#[test]
fn outputs_are_byte_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(solve_small(dir.path(), "a").status.code(), Some(0));
    let o = Command::new(env!("CARGO_BIN_EXE_band"))
        .args(["solve", "--n", "64", "--out", "b"])
        .current_dir(dir.path())
        .env("SOURCE_DATE_EPOCH", "0")
        .env("BAND_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["profile.csv", "curve.csv", "report.txt"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        let strip = |bytes: &[u8]| {
            String::from_utf8_lossy(bytes)
                .lines()
                .filter(|l| !l.starts_with("# output:"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&a), strip(&b), "{f}");
    }
}

#[test]
fn exhausted_budget_exits_two_and_still_writes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("short.cfg"),
        "n_nodes = 64\nmax_outer = 1\npolish = false\npenalty_schedule = 1:5\nepsilon_schedule = 0.1\n",
    )
    .unwrap();
    let o = band(&["solve", "--config", "short.cfg", "--out", "run", "--checkpoint", "ck.csv"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(dir.path().join("run/profile.csv").is_file());
    assert!(dir.path().join("ck.csv").is_file());
    let report = fs::read_to_string(dir.path().join("run/report.txt")).unwrap();
    assert!(report.contains("converged: false"));
}

#[test]
fn quick_validation_passes() {
    let dir = tempfile::tempdir().unwrap();
    let started = std::time::Instant::now();
    let o = band(&["validate", "--quick"], dir.path());
    assert!(started.elapsed().as_secs_f64() < 30.0);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{text}");
    assert!(text.lines().any(|l| l.starts_with("PASS")));
    assert!(!text.contains("FAIL"));
}
