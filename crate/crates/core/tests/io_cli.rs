use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use tempfile::TempDir;
use vttn::datagen::{mixer_signals, planted_tn_model};
use vttn::io::{load_csv, load_model, model_from_bytes, model_to_bytes, save_csv, save_model};
use vttn::{SystemShape, VolterraModel, VttnError};

fn vttn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vttn")).args(args).output().unwrap()
}

fn stdout_value(out: &Output, key: &str) -> f64 {
    let text = String::from_utf8_lossy(&out.stdout);
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {text}"))
        .parse()
        .unwrap()
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn model_bytes_round_trip(
        (pp, l, m, d) in (1..3usize, 1..3usize, 1..3usize, 1..5usize),
        r in 1..4usize,
        seed in any::<u64>(),
    ) {
        let shape = SystemShape::new(pp, l, m, d).unwrap();
        let interior = vec![r; d - 1];
        let chain = shape.rank_chain(&interior).unwrap_or_else(|_| shape.rank_chain(&vec![1; d - 1]).unwrap());
        let model = planted_tn_model(shape, &chain, seed).unwrap();
        let bytes = model_to_bytes(&model).unwrap();
        let back = model_from_bytes(&bytes).unwrap();
        for (a, b) in model.cores().iter().zip(back.cores()) {
            let bits = |c: &vttn::TnCore| c.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(a), bits(b));
        }
        prop_assert_eq!(model_to_bytes(&back).unwrap(), bytes);
    }
}

#[test]
fn file_size_matches_parameter_count() {
    let shape = SystemShape::new(1, 1, 7, 10).unwrap();
    let mut ranks = vec![1];
    ranks.extend([8; 9]);
    ranks.push(1);
    let model = VolterraModel::zeros(shape, &ranks).unwrap();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.vttn");
    save_model(&path, &model).unwrap();
    let header = 5 + 4 * 4 + 4 * 11 + 1;
    let size = std::fs::metadata(&path).unwrap().len() as usize;
    assert_eq!(size, header + 8 * model.parameter_count() + 4);
    assert_eq!(load_model(&path).unwrap(), model);
}

#[test]
fn mixer_csv_round_trips_exactly() {
    let data = mixer_signals(5000.0, 1.0).unwrap();
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("mixer.csv");
    save_csv(&path, &data).unwrap();
    let back = load_csv(&path).unwrap();
    assert_eq!(back.len(), 5000);
    assert_eq!((back.p(), back.l()), (2, 1));
    for (a, b) in data.inputs().iter().chain(data.outputs()).zip(back.inputs().iter().chain(back.outputs())) {
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
    assert!((back.sample_rate().unwrap() - 5000.0).abs() < 1e-6);
}

#[test]
fn header_only_csv_is_empty() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "u1,y1\n").unwrap();
    let err = load_csv(&path).unwrap_err();
    assert!(matches!(err, VttnError::Csv { .. }) && err.to_string().contains("no rows"));
}

fn gen_exp(dir: &TempDir, d: &str) -> String {
    let data = p(dir, "exp.csv");
    let out = vttn(&["gen", "exp", "--d", d, "--samples", "1000", "--seed", "3", "--out", &data]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data
}

#[test]
fn identify_is_deterministic_and_validates_consistently() {
    let dir = TempDir::new().unwrap();
    let data = gen_exp(&dir, "3");
    let run = |name: &str| {
        let model = p(&dir, name);
        let out = vttn(&[
            "identify", "--data", &data, "--p", "1", "--l", "1", "--M", "7", "--d", "3", "--algo", "mals",
            "--seed", "11", "--train-n", "700", "--out", &model,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        (model, out)
    };
    let (m1, report) = run("a.vttn");
    let (m2, _) = run("b.vttn");
    assert_eq!(std::fs::read(&m1).unwrap(), std::fs::read(&m2).unwrap());

    let final_residual = stdout_value(&report, "final_residual");
    assert!(final_residual < 1e-4);
    let out = vttn(&["validate", "--model", &m1, "--data", &data, "--end", "700"]);
    assert!(out.status.success());
    assert!((stdout_value(&out, "relative_residual") - final_residual).abs() <= 1e-12);

    let sim = p(&dir, "yhat.csv");
    let out = vttn(&["simulate", "--model", &m1, "--data", &data, "--out", &sim]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&sim).unwrap().starts_with("y1\n"));
}

#[test]
fn zero_model_has_unit_residual() {
    let dir = TempDir::new().unwrap();
    let data = gen_exp(&dir, "2");
    let model = p(&dir, "zero.vttn");
    let shape = SystemShape::new(1, 1, 7, 2).unwrap();
    save_model(Path::new(&model), &VolterraModel::zeros(shape, &[1, 3, 1]).unwrap()).unwrap();
    let out = vttn(&["validate", "--model", &model, "--data", &data]);
    assert!(out.status.success());
    assert_eq!(stdout_value(&out, "relative_residual"), 1.0);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = gen_exp(&dir, "1");
    let model = p(&dir, "lin.vttn");
    let linear = vttn(&[
        "identify", "--data", &data, "--p", "1", "--l", "1", "--M", "7", "--d", "1", "--algo", "als",
        "--out", &model,
    ]);
    assert_eq!(linear.status.code(), Some(0), "{}", String::from_utf8_lossy(&linear.stderr));
    assert!(stdout_value(&linear, "final_residual") < 1e-12);

    let capped = vttn(&[
        "identify", "--data", &data, "--p", "1", "--l", "1", "--M", "1", "--d", "3", "--max-sweeps", "1", "--max-rank",
        "1", "--tol", "1e-12", "--out", &p(&dir, "capped.vttn"),
    ]);
    assert_eq!(capped.status.code(), Some(2));
    assert!(dir.path().join("capped.vttn").exists());

    let bad = vttn(&["identify", "--data", &data, "--p", "0", "--l", "1", "--M", "7", "--d", "2", "--out", &model]);
    assert_eq!(bad.status.code(), Some(1));

    let mismatch = vttn(&["validate", "--model", &model, "--data", &p(&dir, "missing.csv")]);
    assert_eq!(mismatch.status.code(), Some(1));
    assert!(!mismatch.stderr.is_empty());

    let underdetermined = vttn(&[
        "identify", "--data", &data, "--p", "1", "--l", "1", "--M", "7", "--d", "3", "--algo", "als", "--ranks", "8,8",
        "--train-n", "20", "--out", &model,
    ]);
    assert_eq!(underdetermined.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&underdetermined.stderr).contains("core"));
}
