use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riesz-lab"))
        .args(args)
        .current_dir(dir)
        .env("RIESZ_CACHE_DIR", dir.join("cache"))
        .output()
        .unwrap()
}

fn status(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

#[test]
fn zero_epsilon_is_rejected_without_output() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(d.path(), &["growth", "--epsilon", "0", "--out", "g"]);
    assert_eq!(status(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("code=invalid-input"));
    assert_eq!(fs::read_dir(d.path()).unwrap().count(), 0);
}

#[test]
fn zeta_second_riesz_mean_error_is_bounded() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(d.path(), &["riesz", "--testbed", "zeta", "--k", "2", "--xmax", "1e6", "--out", "r"]);
    assert_eq!(status(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "r.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema: riesz-report/1"));
    assert_eq!(lines.next(), Some("x,S_k,main,error"));
    let mut last_x = 0.0;
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!(cells[3].abs() <= 1.0, "{line}");
        last_x = cells[0];
    }
    assert_eq!(last_x, 1e6);
    let j = json(d.path(), "r.json");
    assert_eq!(j["schema"], "riesz-report/1");
    assert_eq!(j["c_source"], "residue-hint");
}

#[test]
fn perron_example_slope() {
    let d = tempfile::tempdir().unwrap();
    let o = bin(d.path(), &["perron", "--k", "3", "--y", "2", "--out", "p"]);
    let j = json(d.path(), "p.json");
    let slope = j["cells"][0]["fit"]["slope"].as_f64().unwrap();
    println!("slope {slope}");
    assert_eq!(status(&o), if (slope + 3.0).abs() <= 0.5 { 0 } else { 3 });
    assert!((slope + 3.0).abs() <= 0.5);
    assert!(read(d.path(), "p.csv").lines().nth(1) == Some("y,k,T,abs_error"));
}

#[test]
fn warm_cache_reruns_are_byte_identical() {
    let d = tempfile::tempdir().unwrap();
    let args = ["reduce", "--testbed", "zeta2", "--residue", "1", "--xmax", "3e4", "--out"];
    let run = |stem: &str, workers: &str| {
        let mut a = args.to_vec();
        a.extend([stem, "--workers", workers]);
        assert_eq!(status(&bin(d.path(), &a)), 0);
    };
    run("a", "1");
    run("b", "1");
    run("c", "3");
    for suffix in [".json", ".level-k0.csv", ".level-k2.csv"] {
        let a = read(d.path(), &format!("a{suffix}"));
        assert_eq!(a, read(d.path(), &format!("b{suffix}")), "{suffix}");
        assert_eq!(a, read(d.path(), &format!("c{suffix}")), "{suffix}");
    }
    assert_eq!(json(d.path(), "a.meta.json")["cache"][0]["status"], "miss");
    assert_eq!(json(d.path(), "b.meta.json")["cache"][0]["status"], "hit");
}

#[test]
fn corrupted_cache_is_regenerated() {
    let d = tempfile::tempdir().unwrap();
    let args = |stem: &'static str| ["coeffs", "--testbed", "zeta2", "--cutoff", "5000", "--out", stem];
    assert_eq!(status(&bin(d.path(), &args("a"))), 0);
    let file = d.path().join("cache").join("zeta2-5000.rzc");
    let mut bytes = fs::read(&file).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    fs::write(&file, &bytes).unwrap();

    let o = bin(d.path(), &args("b"));
    assert_eq!(status(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("regenerating"));
    let meta = json(d.path(), "b.meta.json");
    assert_eq!(meta["cache"][0]["status"], "regenerated");
    assert_eq!(meta["cache"][0]["reason"], "checksum");
    assert_eq!(read(d.path(), "a.csv"), read(d.path(), "b.csv"));
    assert!(riesz_lab::coeffs::load_table(&file).is_ok());

    assert_eq!(status(&bin(d.path(), &args("c"))), 0);
    assert_eq!(json(d.path(), "c.meta.json")["cache"][0]["status"], "hit");
}

#[test]
fn config_file_with_flag_override() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("run.toml"),
        "command = \"probe-identity\"\ntestbed = \"zeta\"\nk = 1\nxmax = 1e3\nout = \"probe\"\n",
    )
    .unwrap();
    assert_eq!(status(&bin(d.path(), &["--config", "run.toml"])), 0);
    let j = json(d.path(), "probe.json");
    assert_eq!(j["k"], 1);
    assert_eq!(j["max_abs_gap"], 0.0);
    assert_eq!(status(&bin(d.path(), &["--config", "run.toml", "probe-identity", "--k", "2"])), 0);
    assert_eq!(json(d.path(), "probe.json")["k"], 2);

    fs::write(d.path().join("bad.toml"), "comand = \"riesz\"\n").unwrap();
    assert_eq!(status(&bin(d.path(), &["--config", "bad.toml"])), 2);
}

#[test]
fn exit_statuses() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(status(&bin(p, &["contour", "--left-sigma", "-1.0005"])), 3);
    assert_eq!(status(&bin(p, &["coeffs", "--testbed", "rs-delta", "--cutoff", "30000"])), 4);
    assert_eq!(status(&bin(p, &["riesz", "--testbed", "zeta2"])), 2);
    assert_eq!(status(&bin(p, &["riesz", "--grid-ratio", "1"])), 2);
    assert_eq!(status(&bin(p, &["riesz", "--testbed", "nope"])), 2);
    assert_eq!(status(&bin(p, &[])), 2);
    let o = bin(p, &["contour", "--testbed", "eisenstein:0,1,-1"]);
    assert_eq!(status(&o), 0);
    let j: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(j["schema"], "riesz-report/1");
    assert_eq!(j["other_poles"].as_array().unwrap().len(), 3);
}

#[test]
fn every_command_embeds_the_schema() {
    let d = tempfile::tempdir().unwrap();
    let runs: [&[&str]; 7] = [
        &["coeffs", "--cutoff", "100"],
        &["riesz", "--xmax", "1e3"],
        &["perron", "--k", "3", "--y", "2", "--tmax", "1600"],
        &["growth", "--sigma", "2", "--windows", "8", "--step", "2"],
        &["growth", "--conversion", "--tmax", "200"],
        &["residue", "--testbed", "eisenstein:0,0.5,-0.5"],
        &["probe-identity", "--xmax", "1e3"],
    ];
    for (i, args) in runs.iter().enumerate() {
        let stem = format!("r{i}");
        let mut a = args.to_vec();
        a.extend(["--out", &stem]);
        let o = bin(d.path(), &a);
        assert_eq!(status(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(json(d.path(), &format!("{stem}.json"))["schema"], "riesz-report/1");
        assert!(read(d.path(), &format!("{stem}.csv")).starts_with("# schema: riesz-report/1\n"));
    }
}
