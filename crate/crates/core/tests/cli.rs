use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gonscan(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gonscan"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(gonscan(&[]).status.code(), Some(1));
    assert_eq!(gonscan(&["theorem", "--which", "4"]).status.code(), Some(1));
    assert_eq!(
        gonscan(&["petri", "--level", "38", "--degree", "5"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        gonscan(&["petri", "--level", "38", "--delta", "2", "--degree", "2"])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn classnum_csv() {
    let out = gonscan(&["classnum", "--max-h", "3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text, "h,count,smallest\n1,13,-163\n2,29,-427\n3,25,-907\n");
}

#[test]
fn json_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ram.json");
    let out = gonscan(&[
        "ram",
        "--max-d",
        "4",
        "--format",
        "json",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 2);
}

#[test]
fn petri_report_for_a_known_curve() {
    let out = gonscan(&[
        "petri",
        "--level",
        "73",
        "--degree",
        "3",
        "--format",
        "csv",
        "--threads",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.lines()
            .nth(1)
            .unwrap()
            .starts_with("73,full,5,false,{},false,{2}"),
        "{text}"
    );
}

#[test]
fn nonsense_basis_is_an_anomaly() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(38);
    let mut text =
        String::from("MFBASIS 1\nlevel=38\ndelta=full\nweight=2\nprecision=40\ngenus=4\n");
    for _ in 0..4 {
        let row: Vec<String> = (0..40)
            .map(|_| rng.gen_range(-50i64..=50).to_string())
            .collect();
        text += &row.join(" ");
        text.push('\n');
    }
    std::fs::write(dir.path().join("X38_full.mfb"), text).unwrap();
    let out = gonscan(&[
        "petri",
        "--level",
        "38",
        "--degree",
        "2",
        "--basis-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}
