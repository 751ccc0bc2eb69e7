use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const REFERENCE: [&str; 4] = ["--theta", "pi/5", "--e", "0.30,0.33,0.29,0.30"];

fn qrng(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrng"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = qrng(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    qrng(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn csv_rows(path: PathBuf) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn bits_text(path: PathBuf) -> String {
    fs::read_to_string(path).unwrap().lines().skip(1).collect()
}

fn write_bits(dir: &Path, name: &str, bits: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, format!("#bits={}\n{bits}\n", bits.len())).unwrap();
    p
}

/// Every output file except the manifest, by name.
fn outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap())
        .filter(|e| e.file_name() != "manifest.json")
        .map(|e| {
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

/// Re-runs a manifest's argv into `dir` and returns the new output directory.
fn replay(manifest: &Path, dir: &Path) -> PathBuf {
    let m = json(manifest.to_path_buf());
    let mut argv: Vec<String> = m["argv"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    let at = argv.iter().position(|a| a == "--out").unwrap();
    argv[at + 1] = dir.to_str().unwrap().to_string();
    let args: Vec<&str> = argv.iter().map(String::as_str).collect();
    ok(&args);
    dir.to_path_buf()
}

#[test]
fn exact_reproduces_tabulated_point_mass() {
    let t = TempDir::new().unwrap();
    let out = t.path().join("q");
    let mut args = vec!["exact", "--n", "10", "--j", "0"];
    args.extend(REFERENCE);
    args.extend(["--out", s(&out)]);
    ok(&args);
    let rows = csv_rows(out.join("distribution.csv"));
    assert_eq!(rows.len(), 1024);
    assert_eq!(rows[174][1], "0010101110");
    let p: f64 = rows[174][2].parse().unwrap();
    assert!((p / 5.90e-4 - 1.0).abs() < 5e-3, "{p}");
    let dev = csv_rows(out.join("deviation.csv"));
    let d: f64 = dev[174][2].parse().unwrap();
    assert!((d - (p - 1.0 / 1024.0)).abs() < 1e-18);
}

#[test]
fn exact_offset_law_is_uniform_with_equal_efficiencies() {
    let t = TempDir::new().unwrap();
    ok(&[
        "exact",
        "--n",
        "4",
        "--j",
        "1",
        "--equal-e",
        "--out",
        s(t.path()),
    ]);
    let rows = csv_rows(t.path().join("distribution.csv"));
    assert_eq!(rows.len(), 16);
    for r in rows {
        assert!((r[2].parse::<f64>().unwrap() - 0.0625).abs() < 1e-15);
    }
}

#[test]
fn exact_distance_report() {
    let t = TempDir::new().unwrap();
    let mut args = vec!["exact", "--n", "10", "--j", "2", "--tv"];
    args.extend(REFERENCE);
    args.extend(["--out", s(t.path())]);
    let stdout = ok(&args);
    assert!(stdout.contains("tv = "));
    let r = json(t.path().join("tv.json"));
    assert!((r["l1"].as_f64().unwrap() - 0.00440061).abs() < 1e-6);
    assert!((r["tv"].as_f64().unwrap() - 0.00440061 / 2.0).abs() < 1e-6);
    assert_eq!(r["n"], 10);
    assert_eq!(r["j"], 2);
    assert_eq!(r["config"]["e1_plus"], 0.33);
}

#[test]
fn exact_joint_law() {
    let t = TempDir::new().unwrap();
    ok(&[
        "exact",
        "--n",
        "2",
        "--joint",
        "--theta",
        "0",
        "--out",
        s(t.path()),
    ]);
    let rows = csv_rows(t.path().join("distribution.csv"));
    assert_eq!(rows.len(), 16);
    assert_eq!(rows[5][1], "01|01");
    assert!((rows[5][2].parse::<f64>().unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(rows[6][2].parse::<f64>().unwrap(), 0.0);
}

#[test]
fn config_file_matches_flags() {
    let t = TempDir::new().unwrap();
    let cfg = t.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"theta": 0.6283185307179586, "e0_plus": 0.30, "e1_plus": 0.33, "e0_times": 0.29, "e1_times": 0.30}"#,
    )
    .unwrap();
    let a = t.path().join("a");
    let b = t.path().join("b");
    ok(&[
        "exact",
        "--n",
        "6",
        "--j",
        "1",
        "--config",
        s(&cfg),
        "--out",
        s(&a),
    ]);
    let mut args = vec!["exact", "--n", "6", "--j", "1"];
    args.extend(REFERENCE);
    args.extend(["--out", s(&b)]);
    ok(&args);
    assert_eq!(outputs(&a), outputs(&b));

    let c = t.path().join("c");
    ok(&[
        "exact",
        "--n",
        "3",
        "--config",
        s(&cfg),
        "--theta",
        "0",
        "--out",
        s(&c),
    ]);
    assert_eq!(json(c.join("tv.json"))["config"]["theta"], 0.0);
}

#[test]
fn exit_codes() {
    let t = TempDir::new().unwrap();
    let o = s(t.path());
    assert_eq!(code(&["exact", "--n", "12", "--j", "1", "--out", o]), 3);
    assert_eq!(
        code(&[
            "simulate",
            "--pairs",
            "1e6",
            "--max-pairs",
            "1000",
            "--out",
            o
        ]),
        3
    );
    assert_eq!(code(&["exact", "--n", "4", "--theta", "2", "--out", o]), 2);
    assert_eq!(
        code(&["exact", "--n", "4", "--e", "0.3,0.3,0.3", "--out", o]),
        2
    );
    assert_eq!(
        code(&["exact", "--n", "4", "--e", "0.3,0.3,0.3,1.5", "--out", o]),
        2
    );
    assert_eq!(code(&["simulate", "--pairs", "1.5", "--out", o]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
    assert_eq!(code(&["extract", "--method", "vn", "--out", o]), 2);

    let bad = t.path().join("bad.bits");
    fs::write(&bad, "#bits=4\n01x1\n").unwrap();
    assert_eq!(code(&["analyze", "--input", s(&bad), "--out", o]), 4);
    fs::write(&bad, "#bits=9\n0101\n").unwrap();
    assert_eq!(
        code(&["extract", "--method", "vn", "--input", s(&bad), "--out", o]),
        4
    );
    let stream = t.path().join("s.ndjson");
    fs::write(
        &stream,
        "{\"t\":1.0,\"a\":0,\"b\":1}\n{\"t\":0.5,\"a\":0,\"b\":1}\n",
    )
    .unwrap();
    assert_eq!(code(&["analyze", "--stream", s(&stream), "--out", o]), 4);
    let cfg = t.path().join("c.json");
    fs::write(&cfg, "{\"theta\": 0.5, \"e0_plus\": 1").unwrap();
    assert_eq!(
        code(&["exact", "--n", "2", "--config", s(&cfg), "--out", o]),
        4
    );
    fs::write(
        &cfg,
        r#"{"theta":0.5,"e0_plus":1,"e1_plus":1,"e0_times":1,"e1_times":1,"colour":"red"}"#,
    )
    .unwrap();
    assert_eq!(
        code(&["exact", "--n", "2", "--config", s(&cfg), "--out", o]),
        4
    );
}

#[test]
fn simulation_is_byte_identical_per_seed() {
    let t = TempDir::new().unwrap();
    let run = |name: &str, seed: &str| {
        let dir = t.path().join(name);
        let mut args = vec![
            "simulate",
            "--pairs",
            "20000",
            "--seed",
            seed,
            "--physical",
            "--double-count",
            "0.1",
        ];
        args.extend(REFERENCE);
        args.extend(["--out", s(&dir)]);
        ok(&args);
        dir
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    let names: Vec<_> = outputs(&a).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        names,
        [
            "plus.bits",
            "stream.ndjson",
            "summary.json",
            "times.bits",
            "xor.bits"
        ]
    );
    assert_eq!(outputs(&a), outputs(&b));
    assert_ne!(outputs(&a), outputs(&c));
    let summary = json(a.join("summary.json"));
    assert_eq!(summary["seed"], 7);
    assert_eq!(summary["raw_count"], 20000);
}

#[test]
fn manifests_replay_runs() {
    let t = TempDir::new().unwrap();
    let root = t.path();

    let sim = root.join("sim");
    ok(&[
        "simulate",
        "--pairs",
        "5000",
        "--theta",
        "pi/3",
        "--dead-time",
        "3e-7",
        "--demon",
        "0.8",
        "--out",
        s(&sim),
    ]);
    let m = json(sim.join("manifest.json"));
    assert!(m["seed"].is_u64(), "random seed recorded");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 5);
    assert_eq!(
        outputs(&sim),
        outputs(&replay(&sim.join("manifest.json"), &root.join("sim2")))
    );

    let sweep = root.join("sweep");
    ok(&[
        "sweep",
        "--points",
        "7",
        "--empirical",
        "2000",
        "--equal-e",
        "--out",
        s(&sweep),
    ]);
    assert_eq!(
        outputs(&sweep),
        outputs(&replay(&sweep.join("manifest.json"), &root.join("sweep2")))
    );

    let demon = root.join("demon");
    ok(&[
        "demon-demo",
        "--rho",
        "0.75",
        "--bits",
        "5000",
        "--out",
        s(&demon),
    ]);
    assert_eq!(
        outputs(&demon),
        outputs(&replay(&demon.join("manifest.json"), &root.join("demon2")))
    );

    let ex = root.join("ex");
    let mut args = vec!["exact", "--n", "5", "--j", "1", "--config"];
    let cfg = root.join("cfg.json");
    fs::write(&cfg, r#"{"theta":0.3,"e0_plus":0.5,"e1_plus":0.6,"e0_times":0.7,"e1_times":0.8,"dead_time_Td":1e-7}"#)
        .unwrap();
    args.extend([s(&cfg), "--out", s(&ex)]);
    ok(&args);
    fs::remove_file(&cfg).unwrap();
    assert_eq!(
        outputs(&ex),
        outputs(&replay(&ex.join("manifest.json"), &root.join("ex2")))
    );

    let ext = root.join("ext");
    let stream = sim.join("stream.ndjson");
    ok(&[
        "extract",
        "--stream",
        s(&stream),
        "--method",
        "peres",
        "--depth",
        "3",
        "--source",
        "plus",
        "--out",
        s(&ext),
    ]);
    assert_eq!(
        outputs(&ext),
        outputs(&replay(&ext.join("manifest.json"), &root.join("ext2")))
    );

    let an = root.join("an");
    ok(&[
        "analyze",
        "--stream",
        s(&stream),
        "--alpha",
        "0.05",
        "--out",
        s(&an),
    ]);
    assert_eq!(
        outputs(&an),
        outputs(&replay(&an.join("manifest.json"), &root.join("an2")))
    );
}

#[test]
fn demon_flag_forces_every_second_xor_bit() {
    let t = TempDir::new().unwrap();
    ok(&[
        "simulate",
        "--pairs",
        "20000",
        "--seed",
        "3",
        "--demon",
        "0.5",
        "--out",
        s(t.path()),
    ]);
    let z = bits_text(t.path().join("xor.bits"));
    assert!(z.len() > 10_000);
    assert!(z.bytes().skip(1).step_by(2).all(|b| b == b'0'));
    assert!(
        json(t.path().join("summary.json"))["dropped_demon"]
            .as_u64()
            .unwrap()
            > 0
    );
}

#[test]
fn uniform_simulation_passes_tests_downstream() {
    let t = TempDir::new().unwrap();
    let sim = t.path().join("sim");
    ok(&[
        "simulate",
        "--pairs",
        "1e6",
        "--theta",
        "pi/4",
        "--equal-e",
        "--seed",
        "11",
        "--out",
        s(&sim),
    ]);
    let an = t.path().join("an");
    ok(&[
        "analyze",
        "--input",
        s(&sim.join("xor.bits")),
        "--out",
        s(&an),
    ]);
    let report = json(an.join("report.json"));
    assert_eq!(report["bits"], 1_000_000);
    let tests = report["tests"].as_array().unwrap();
    let chi2: Vec<&Value> = tests
        .iter()
        .filter(|r| r["test_name"] == "chi2-uniformity")
        .collect();
    assert_eq!(chi2.len(), 8);
    assert!(chi2[0]["p_value"].as_f64().unwrap() > 1e-3);
    assert!(
        chi2.iter().all(|r| r["p_value"].as_f64().unwrap() > 1e-3),
        "{chi2:?}"
    );
    assert!(tests
        .iter()
        .filter(|r| r["test_name"] == "borel-normality")
        .all(|r| r["pass"] == true));
    let table = fs::read_to_string(an.join("table.csv")).unwrap();
    assert!(table.starts_with("test,k=1,k=2,k=3,k=4,k=5,k=6,k=7,k=8\n"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn analyze_flags_constant_input() {
    let t = TempDir::new().unwrap();
    let zeros = write_bits(t.path(), "z.bits", &"0".repeat(1000));
    ok(&["analyze", "--input", s(&zeros), "--out", s(t.path())]);
    let report = json(t.path().join("report.json"));
    let k1 = &report["tests"][0];
    assert_eq!(k1["k"], 1);
    assert!(k1["p_value"].as_f64().unwrap() < 1e-10);
    assert_eq!(k1["pass"], false);
    assert!(report.get("paired").is_none());
}

#[test]
fn analyze_paired_streams_estimates_angle() {
    let t = TempDir::new().unwrap();
    let sim = t.path().join("sim");
    ok(&[
        "simulate",
        "--pairs",
        "200000",
        "--theta",
        "pi/5",
        "--equal-e",
        "--seed",
        "5",
        "--out",
        s(&sim),
    ]);
    let an = t.path().join("an");
    let stdout = ok(&[
        "analyze",
        "--input",
        s(&sim.join("plus.bits")),
        "--input2",
        s(&sim.join("times.bits")),
        "--out",
        s(&an),
    ]);
    assert!(stdout.contains("theta="));
    let p = &json(an.join("report.json"))["paired"];
    let theta = p["theta"]["theta"].as_f64().unwrap();
    let stderr = p["theta"]["stderr"].as_f64().unwrap();
    assert!((stderr - 0.5 / 200_000f64.sqrt()).abs() < 1e-15);
    assert!(
        (theta - std::f64::consts::PI / 5.0).abs() < 5.0 * stderr,
        "{theta}"
    );
    let c = p["correlation"].as_f64().unwrap();
    assert!((p["exor_rate"].as_f64().unwrap() - (1.0 - c) / 2.0).abs() < 1e-12);
}

#[test]
fn extract_von_neumann_example() {
    let t = TempDir::new().unwrap();
    let input = write_bits(t.path(), "in.bits", "00011011");
    let out = t.path().join("o");
    ok(&[
        "extract",
        "--method",
        "vn",
        "--input",
        s(&input),
        "--out",
        s(&out),
    ]);
    assert_eq!(bits_text(out.join("extracted.bits")), "01");
    let y = json(out.join("yield.json"));
    assert_eq!(
        (y["in"].as_u64(), y["out"].as_u64(), y["discarded"].as_u64()),
        (Some(8), Some(2), Some(4))
    );
    assert_eq!(y["method"], "vn");
}

#[test]
fn extract_xor_of_shifted_copies() {
    let t = TempDir::new().unwrap();
    let x = "1101001110010111";
    let y = format!("0{}", &x[..x.len() - 1]);
    let xi = write_bits(t.path(), "x.bits", x);
    let yi = write_bits(t.path(), "y.bits", &y);
    let out = t.path().join("o");
    ok(&[
        "extract",
        "--method",
        "xor",
        "--j",
        "1",
        "--input",
        s(&xi),
        "--input2",
        s(&yi),
        "--out",
        s(&out),
    ]);
    assert_eq!(bits_text(out.join("extracted.bits")), "0".repeat(15));
    let out0 = t.path().join("o0");
    ok(&[
        "extract",
        "--method",
        "xor",
        "--input",
        s(&xi),
        "--input2",
        s(&yi),
        "--out",
        s(&out0),
    ]);
    assert_eq!(bits_text(out0.join("extracted.bits")), "1011101001011100");
    assert_eq!(
        code(&[
            "extract",
            "--method",
            "pair-vn",
            "--input",
            s(&xi),
            "--out",
            s(&out)
        ]),
        2
    );
}

#[test]
fn extract_pair_von_neumann_yield() {
    let t = TempDir::new().unwrap();
    let sim = t.path().join("sim");
    ok(&[
        "simulate",
        "--pairs",
        "1e6",
        "--theta",
        "pi/4",
        "--equal-e",
        "--seed",
        "21",
        "--out",
        s(&sim),
    ]);
    let out = t.path().join("o");
    ok(&[
        "extract",
        "--method",
        "pair-vn",
        "--stream",
        s(&sim.join("stream.ndjson")),
        "--packed",
        "--out",
        s(&out),
    ]);
    let y = json(out.join("yield.json"));
    let rate = y["out"].as_f64().unwrap() / y["in"].as_f64().unwrap();
    let sd = (0.5e6 * 0.75 * 0.25f64).sqrt() / 1e6;
    assert!((rate - 0.375).abs() < 3.0 * sd, "{rate}");
    let packed = fs::read(out.join("extracted.bin")).unwrap();
    assert_eq!(
        packed.len(),
        y["out"].as_u64().unwrap().div_ceil(8) as usize
    );
}

#[test]
fn packed_bits_round_trip_through_analyze() {
    let t = TempDir::new().unwrap();
    let sim = t.path().join("sim");
    ok(&[
        "simulate",
        "--pairs",
        "4000",
        "--seed",
        "1",
        "--packed",
        "--out",
        s(&sim),
    ]);
    let kept = json(sim.join("summary.json"))["kept"]
        .as_u64()
        .unwrap()
        .to_string();
    let a = t.path().join("a");
    ok(&[
        "analyze",
        "--input",
        s(&sim.join("xor.bin")),
        "--len",
        &kept,
        "--out",
        s(&a),
    ]);
    assert_eq!(
        json(a.join("report.json"))["bits"]
            .as_u64()
            .unwrap()
            .to_string(),
        kept
    );
}

#[test]
fn sweep_curves() {
    let t = TempDir::new().unwrap();
    ok(&["sweep", "--thetas", "0,pi/4,pi/2", "--out", s(t.path())]);
    let rows = csv_rows(t.path().join("sweep.csv"));
    let col = |i: usize| {
        rows.iter()
            .map(|r| r[i].parse::<f64>().unwrap())
            .collect::<Vec<_>>()
    };
    assert_eq!(col(1), [1.0, 0.5, 0.0]);
    assert_eq!(col(2), [1.0, 0.5, 0.0]);

    let d = t.path().join("d");
    let lo = std::f64::consts::FRAC_PI_4 - 0.1;
    let hi = std::f64::consts::FRAC_PI_4 + 0.1;
    ok(&["sweep", "--thetas", &format!("{lo},{hi}"), "--out", s(&d)]);
    let rows = csv_rows(d.join("sweep.csv"));
    let v = |r: usize, c: usize| rows[r][c].parse::<f64>().unwrap();
    assert!((v(1, 1) - v(0, 1)).abs() > (v(1, 2) - v(0, 2)).abs());
}

#[test]
fn sweep_empirical_column_tracks_quantum_curve() {
    let t = TempDir::new().unwrap();
    ok(&[
        "sweep",
        "--points",
        "5",
        "--empirical",
        "1e5",
        "--equal-e",
        "--seed",
        "4",
        "--out",
        s(t.path()),
    ]);
    let text = fs::read_to_string(t.path().join("sweep.csv")).unwrap();
    assert!(text.starts_with("theta,e_quantum,e_classical,e_empirical\n"));
    for r in csv_rows(t.path().join("sweep.csv")) {
        let q: f64 = r[1].parse().unwrap();
        let e: f64 = r[3].parse().unwrap();
        assert!((q - e).abs() < 4.0 * 0.5 / 1e5f64.sqrt() + 1e-12, "{r:?}");
    }
}

#[test]
fn demon_demo_report() {
    let t = TempDir::new().unwrap();
    ok(&[
        "demon-demo",
        "--rho",
        "0.5",
        "--bits",
        "1e6",
        "--seed",
        "2",
        "--out",
        s(t.path()),
    ]);
    let r = json(t.path().join("demon.json"));
    assert_eq!(r["period"], 2);
    assert_eq!(r["forced_slots_zero"], true);
    let f = r["rejected_fraction"].as_f64().unwrap();
    assert!((0.30..=0.37).contains(&f), "{f}");
    let out = bits_text(t.path().join("demon.bits"));
    assert_eq!(out.len() as u64, r["output_bits"].as_u64().unwrap());

    let input = write_bits(t.path(), "in.bits", "01");
    let d = t.path().join("d");
    ok(&[
        "demon-demo",
        "--rho",
        "0.5",
        "--input",
        s(&input),
        "--out",
        s(&d),
    ]);
    assert_eq!(bits_text(d.join("demon.bits")), "0");
    assert_eq!(json(d.join("demon.json"))["rejected"], 1);
}
