use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phasemax::ingest::edf;
use phasemax::ingest::{read_matrix_text, TextOptions};

fn phasemax(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phasemax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const CONFIG: &str = r#"
preset = "uncorrelated"

[mixing]
matrix = [[1.3, 2.0], [1.0, 3.0]]

[montecarlo]
runs = 5
seed = 11
noise_sd = [0.001]

[[montecarlo.methods]]
method = "max"

[[montecarlo.methods]]
method = "pca"
"#;

#[test]
fn gen_then_separate_recovers_sources() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.toml", CONFIG);
    let out = phasemax(&[
        "gen",
        "-c",
        &path(d, "run.toml"),
        "-o",
        &path(d, "s.csv"),
        "--mixed",
        &path(d, "z.csv"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = phasemax(&[
        "separate",
        "-i",
        &path(d, "z.csv"),
        "--out-estimates",
        &path(d, "est.csv"),
        "--out-directions",
        &path(d, "dirs.toml"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let est = read_matrix_text(d.join("est.csv"), &TextOptions::default()).unwrap();
    assert_eq!(est.labels, vec!["est1", "est2"]);
    assert_eq!(est.signal.n_samples(), 1000);

    let dirs: toml::Table = std::fs::read_to_string(d.join("dirs.toml"))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(dirs["method"].as_str(), Some("max"));
    assert_eq!(dirs["whitening"].as_str(), Some("gram-schmidt"));
    assert_eq!(dirs["estimates"].as_array().unwrap().len(), 2);
    assert_eq!(dirs["whitening_matrix"].as_array().unwrap().len(), 2);

    let out = phasemax(&[
        "evaluate",
        "--truth",
        &path(d, "s.csv"),
        "--estimates",
        &path(d, "est.csv"),
        "--report",
        &path(d, "eval.toml"),
    ]);
    assert_eq!(code(&out), 0);
    let report: toml::Table = std::fs::read_to_string(d.join("eval.toml"))
        .unwrap()
        .parse()
        .unwrap();
    for pair in report["pairs"].as_array().unwrap() {
        assert!(pair["correlation"].as_float().unwrap().abs() >= 0.999);
    }
}

#[test]
fn montecarlo_table_layout() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "run.toml", CONFIG);
    let out = phasemax(&[
        "montecarlo",
        "-c",
        &path(d, "run.toml"),
        "-o",
        &path(d, "rms.csv"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(d.join("rms.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "sample,truth_s1,truth_s2,max-gram-schmidt_sd0.001_s1,max-gram-schmidt_sd0.001_s2,pca_sd0.001_s1,pca_sd0.001_s2"
    );
    assert_eq!(text.lines().count(), 1001);
}

#[test]
fn phase_marks_one_maximum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "z.txt", "0 0\n1 0\n0 2\n-3 0\n0.5 0.5\n");
    let out = phasemax(&[
        "phase",
        "-i",
        &path(d, "z.txt"),
        "-o",
        &path(d, "phase.csv"),
    ]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(d.join("phase.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "sample,z1,z2,r,is_max");
    let flagged: Vec<&str> = lines[1..]
        .iter()
        .filter(|l| l.ends_with(",1"))
        .copied()
        .collect();
    assert_eq!(flagged.len(), 1);
    assert!(flagged[0].starts_with("3,"));
}

#[test]
fn edf_subcommand_selects_and_truncates() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let h = edf::simple_header(
        &["thorax", "abd1", "abd2"],
        10,
        3,
        (-1.0, 1.0),
        (-1000, 1000),
    );
    let digital: Vec<Vec<i16>> = (0..3)
        .map(|c| (0..30).map(|k| (k * 10 + c) as i16).collect())
        .collect();
    edf::write_edf(d.join("r.edf"), &h, &digital).unwrap();
    let out = phasemax(&[
        "edf",
        "-i",
        &path(d, "r.edf"),
        "--channels",
        "2-3",
        "--samples",
        "25",
        "-o",
        &path(d, "r.csv"),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let rec = read_matrix_text(d.join("r.csv"), &TextOptions::default()).unwrap();
    assert_eq!(rec.labels, vec!["abd1", "abd2"]);
    assert_eq!(rec.signal.n_samples(), 25);
    assert!((rec.signal.channel(0)[2] - 0.021).abs() < 1e-12);

    let out = phasemax(&[
        "edf",
        "-i",
        &path(d, "r.edf"),
        "--channels",
        "abd2",
        "-o",
        &path(d, "l.csv"),
    ]);
    assert_eq!(code(&out), 0);
    let rec = read_matrix_text(d.join("l.csv"), &TextOptions::default()).unwrap();
    assert_eq!(rec.labels, vec!["abd2"]);
}

#[test]
fn usage_and_config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&phasemax(&["frobnicate"])), 2);
    assert_eq!(code(&phasemax(&["separate"])), 2);
    write(d, "bad.toml", "preset = \"uncorrelated\"\nspeed = 3\n");
    let out = phasemax(&["gen", "-c", &path(d, "bad.toml"), "-o", &path(d, "s.csv")]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("speed"));
    write(d, "z.txt", "1 2\n3 4\n");
    let out = phasemax(&[
        "mix",
        "-i",
        &path(d, "z.txt"),
        "-m",
        "1,2,3;4,5,6;7,8,9",
        "-o",
        &path(d, "o.csv"),
    ]);
    assert_eq!(code(&out), 2);
    let out = phasemax(&[
        "phase",
        "-i",
        &path(d, "z.txt"),
        "--channels",
        "3",
        "-o",
        &path(d, "o.csv"),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = phasemax(&["phase", "-i", &path(d, "nope.txt"), "-o", &path(d, "o.csv")]);
    assert_eq!(code(&missing), 3);
    write(d, "bad.txt", "1 2\n3 oops\n");
    let out = phasemax(&["phase", "-i", &path(d, "bad.txt"), "-o", &path(d, "o.csv")]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    write(d, "ragged.txt", "1 2\n3\n");
    assert_eq!(
        code(&phasemax(&[
            "phase",
            "-i",
            &path(d, "ragged.txt"),
            "-o",
            &path(d, "o.csv")
        ])),
        3
    );
    write(d, "junk.edf", "not an edf file");
    assert_eq!(
        code(&phasemax(&[
            "edf",
            "-i",
            &path(d, "junk.edf"),
            "-o",
            &path(d, "o.csv")
        ])),
        3
    );
}

#[test]
fn degenerate_data_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write(d, "zero.txt", "0 0\n0 0\n0 0\n");
    let out = phasemax(&[
        "separate",
        "-i",
        &path(d, "zero.txt"),
        "--out-estimates",
        &path(d, "e.csv"),
        "--out-directions",
        &path(d, "d.toml"),
    ]);
    assert_eq!(code(&out), 4);
    write(d, "dup.txt", "1 1\n2 2\n0 0\n");
    assert_eq!(
        code(&phasemax(&[
            "whiten",
            "-i",
            &path(d, "dup.txt"),
            "-o",
            &path(d, "w.csv")
        ])),
        4
    );
}

#[test]
fn unsupported_edf_features_exit_5() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut h = edf::simple_header(&["A"], 4, 1, (-1.0, 1.0), (-100, 100));
    h.reserved = "EDF+D".into();
    edf::write_edf(d.join("d.edf"), &h, &[vec![0; 4]]).unwrap();
    assert_eq!(
        code(&phasemax(&[
            "edf",
            "-i",
            &path(d, "d.edf"),
            "-o",
            &path(d, "o.csv")
        ])),
        5
    );
}

#[test]
fn help_exits_0() {
    let out = phasemax(&["--help"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("montecarlo"));
}
