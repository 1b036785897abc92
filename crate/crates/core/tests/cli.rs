use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use weak_concurrence::estimator::estimate;
use weak_concurrence::io::{read_image_raw, read_positions, image_from_csv, write_image_raw};
use weak_concurrence::linalg::C64;
use weak_concurrence::pointer::{branch_images, CouplingStrength, IntensityImage, OpticalSetup, PointerGrid};
use weak_concurrence::qubit_core::{PureState, Subsystem};

const BELL: &str = r#"{"amplitudes": [[0.7071067811865476,0],[0,0],[0,0],[0.7071067811865476,0]]}"#;
const THREE_TERM: &str =
    r#"{"amplitudes": [[0.5773502691896258,0],[0.5773502691896258,0],[0,0],[0.5773502691896258,0]]}"#;
const WORKED: &str = r#"{"amplitudes": [[0.7071067811865476,0],[0.5,0],[0,0],[0,0.5]]}"#;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weak-concurrence")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json report")
}

fn concurrence(v: &Value) -> f64 {
    v["report"]["concurrence"].as_f64().unwrap()
}

#[test]
fn estimate_bell_and_three_term() {
    let v = json(&bin(&["estimate", "--state", BELL]));
    assert_eq!(concurrence(&v), 1.0);
    assert_eq!(v["report"]["route"], "DiagonalIntensity");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("state.json");
    std::fs::write(&path, THREE_TERM).unwrap();
    let v = json(&bin(&["estimate", "--state", path.to_str().unwrap()]));
    assert!((concurrence(&v) - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(v["report"]["route"], "WeakValueFormula");
}

#[test]
fn reports_echo_the_defaults() {
    let p = &json(&bin(&["estimate", "--state", BELL]))["parameters"];
    assert_eq!(p["grid_n"], 512);
    assert_eq!(p["extent"], 6.0);
    assert_eq!(p["lambda"], 0.01);
    assert_eq!(p["photons"], 1_000_000);
    assert_eq!(p["efficiency"], 1.0);
}

#[test]
fn invalid_input_exits_with_2() {
    let out = bin(&["estimate", "--state", r#"{"amplitudes": [[1,0],[1,0],[0,0],[0,0]]}"#]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("norm invariant"));
    assert_eq!(bin(&["estimate", "--state", "{not json"]).status.code(), Some(2));
    assert_eq!(bin(&["estimate", "--state", "/does/not/exist.json"]).status.code(), Some(2));
    assert_eq!(bin(&["simulate", "--state", BELL, "--grid-n", "16"]).status.code(), Some(2));
    assert_eq!(bin(&["mc", "--state", BELL, "--efficiency", "0"]).status.code(), Some(2));
    assert_eq!(bin(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn dark_images_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let grid = PointerGrid::square(64, 4.0).unwrap();
    for b in 0..2 {
        let img = IntensityImage::new(grid, vec![0.0; grid.len()]).unwrap();
        write_image_raw(&img, &dir.path().join(format!("image_{b}.bin"))).unwrap();
    }
    let out = bin(&["mc", "--images", dir.path().to_str().unwrap(), "--photons", "100"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn simulate_matches_the_worked_state() {
    let v = json(&bin(&["simulate", "--state", WORKED]));
    assert!((concurrence(&v) - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
    assert!(v["report"]["warnings"].as_array().unwrap().is_empty());

    let v = json(&bin(&["simulate", "--state", WORKED, "--lambda", "0.5", "--grid-n", "128"]));
    let diags = v["report"]["diagnostics"].as_array().unwrap();
    assert!(diags.iter().any(|d| d["name"].as_str().unwrap().starts_with("weakness_violated")));
    assert!(!v["report"]["warnings"].as_array().unwrap().is_empty());
}

fn check_dump(dir: &Path, images: &[IntensityImage; 2]) {
    for (b, img) in images.iter().enumerate() {
        let raw = read_image_raw(&dir.join(format!("image_{b}.bin"))).unwrap();
        let csv = image_from_csv(std::fs::File::open(dir.join(format!("image_{b}.csv"))).unwrap()).unwrap();
        let bits = |i: &IntensityImage| i.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(raw.grid, img.grid);
        assert_eq!(csv.grid, img.grid);
        assert_eq!(bits(&raw), bits(img));
        assert_eq!(bits(&csv), bits(img));
    }
}

#[test]
fn dumped_images_round_trip_bit_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin(&["simulate", "--state", WORKED, "--grid-n", "96", "--dump-images", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let s = PureState::new([
        C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        C64::new(0.5, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.5),
    ])
    .unwrap();
    let setup = OpticalSetup::new(PointerGrid::square(96, 6.0).unwrap(), CouplingStrength::new(0.01).unwrap());
    check_dump(dir.path(), &branch_images(&s.reduced(Subsystem::A), &setup).unwrap());
}

#[test]
fn mc_is_byte_identical_for_a_seed() {
    let args = ["mc", "--state", THREE_TERM, "--seed", "42", "--photons", "20000", "--grid-n", "128"];
    let a = bin(&args);
    let b = bin(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = bin(&["mc", "--state", THREE_TERM, "--seed", "43", "--photons", "20000", "--grid-n", "128"]);
    assert_ne!(a.stdout, c.stdout);
    let v = json(&a);
    assert_eq!(v["parameters"]["seed"], 42);
    assert!(v["report"]["uncertainty"]["sigma"].as_f64().unwrap() > 0.0);
}

#[test]
fn mc_position_dump() {
    let dir = tempfile::tempdir().unwrap();
    let v = json(&bin(&[
        "mc", "--state", BELL, "--photons", "5000", "--grid-n", "64", "--extent", "4", "--dump-positions",
        dir.path().to_str().unwrap(),
    ]));
    let n0 = read_positions(std::fs::File::open(dir.path().join("positions_0.bin")).unwrap()).unwrap();
    let n1 = read_positions(std::fs::File::open(dir.path().join("positions_1.bin")).unwrap()).unwrap();
    assert_eq!(n0.len() + n1.len(), 10_000);
    let detected0 = v["report"]["diagnostics"].as_array().unwrap().iter().find(|d| d["name"] == "detected_0").unwrap();
    assert_eq!(detected0["value"].as_f64().unwrap() as usize, n0.len());
    assert!(n0.iter().chain(&n1).all(|p| p.0.abs() <= 4.0 && p.1.abs() <= 4.0));
}

#[test]
fn sweep_writes_the_surface() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    let out = bin(&["sweep", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("m0,m1,C"));
    assert_eq!(lines.count(), 201 * 201);
    // diagonal entries follow sqrt(1 - m^2)
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        let (m0, m1): (f64, f64) = (f[0].parse().unwrap(), f[1].parse().unwrap());
        if m0 == m1 && m0 > 0.0 && m0 <= 1.0 {
            let c: f64 = f[2].parse().unwrap();
            assert!((c - (1.0 - m0 * m0).sqrt()).abs() < 1e-12);
        }
    }
}

#[test]
fn robustness_campaign_and_single_state() {
    let out = bin(&["robustness", "--samples", "200", "--refine-iters", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let slack_cols: Vec<usize> = header.iter().enumerate().filter(|(_, h)| h.ends_with("_slack")).map(|(i, _)| i).collect();
    assert_eq!(slack_cols.len(), 7);
    assert_eq!(text.lines().count(), 201);
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(slack_cols.iter().all(|&i| f[i] >= -1e-12), "{line}");
    }

    let werner = r#"{"density": [
        [[0.475,0],[0,0],[0,0],[0.45,0]],
        [[0,0],[0.025,0],[0,0],[0,0]],
        [[0,0],[0,0],[0.025,0],[0,0]],
        [[0.45,0],[0,0],[0,0],[0.475,0]]]}"#;
    let v = json(&bin(&["robustness", "--state", werner, "--refine-iters", "0"]));
    assert!((v["report"]["m_upper"].as_f64().unwrap() - 0.075).abs() < 1e-12);
}

#[test]
fn commands_equal_library_calls() {
    let v = json(&bin(&["estimate", "--state", WORKED]));
    let s = PureState::new([
        C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
        C64::new(0.5, 0.0),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.5),
    ])
    .unwrap();
    let direct = estimate(&s.reduced(Subsystem::A)).unwrap();
    assert_eq!(concurrence(&v), direct.concurrence);
    assert_eq!(v["report"], serde_json::to_value(&direct).unwrap());
}
