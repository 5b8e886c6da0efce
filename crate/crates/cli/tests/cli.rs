use std::path::Path;
use std::process::{Command, Output};

use lpembed_cli::report::{all_finite, AuditReport, SparsifyReport};
use lpembed_cli::RunReport;
use serde_json::Value;

fn lpembed(args: &[&str], extra: &[&Path]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lpembed"));
    cmd.args(args);
    for p in extra {
        cmd.arg(p);
    }
    cmd.output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn gen(dir: &Path, kind: &str, k: &str, m: &str, scale: &str) -> std::path::PathBuf {
    let path = dir.join(format!("{kind}.csv"));
    let out = lpembed(
        &[
            "gen", "--kind", kind, "--k", k, "--m", m, "--scale", scale, "--seed", "7", "--output",
        ],
        &[&path],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    path
}

#[test]
fn gen_simplex_rows_are_at_distance_ten() {
    let dir = tempfile::tempdir().unwrap();
    let path = gen(dir.path(), "simplex", "12", "300", "5");
    let rows = lpembed_cli::io::read_points(&path).unwrap();
    assert_eq!(rows.len(), 12);
    for u in 0..12 {
        for v in u + 1..12 {
            let d: f64 = rows[u]
                .iter()
                .zip(&rows[v])
                .map(|(a, b)| (a - b).abs())
                .sum();
            assert_eq!(d, 10.0);
        }
    }
    let again = dir.path().join("again.csv");
    let out = lpembed(
        &[
            "gen", "--kind", "simplex", "--k", "12", "--m", "300", "--scale", "5", "--seed", "7",
            "--output",
        ],
        &[&again],
    );
    assert_eq!(code(&out), 0);
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn gen_rejects_unknown_kind() {
    let out = lpembed(&["gen", "--kind", "unknown", "--k", "3", "--m", "3"], &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn reduce_writes_files_within_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen(dir.path(), "gaussian", "8", "30", "1");
    let (red, rep) = (dir.path().join("red.json"), dir.path().join("rep.json"));
    let out = lpembed(
        &[
            "reduce",
            "--p",
            "1.0",
            "--eps-snow",
            "0.1",
            "--d-bss",
            "9",
            "--input",
        ],
        &[&input],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = Command::new(env!("CARGO_BIN_EXE_lpembed"))
        .args([
            "reduce",
            "--p",
            "1.0",
            "--eps-snow",
            "0.1",
            "--d-bss",
            "9",
            "--input",
        ])
        .arg(&input)
        .arg("--output")
        .arg(&red)
        .arg("--report")
        .arg(&rep)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let text = std::fs::read_to_string(&rep).unwrap();
    let report: RunReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.schema_version, 1);
    assert!(report.distortion.within_certificate(1e-12));
    assert_eq!(report.distortion.pairs, 28);
    assert!(report.n <= report.support_bound);
    assert_eq!(report.sigma.len(), report.n);
    assert!(all_finite(&serde_json::from_str(&text).unwrap()));
    // Lossless round trip through the serialized form.
    let back: RunReport = serde_json::from_str(&serde_json::to_string(&report).unwrap()).unwrap();
    assert_eq!(back, report);

    let reduced: Value = serde_json::from_str(&std::fs::read_to_string(&red).unwrap()).unwrap();
    assert_eq!(reduced["schema_version"], 1);
    assert_eq!(reduced["points"].as_array().unwrap().len(), 8);
}

#[test]
fn reduce_round_trips_every_generator() {
    let dir = tempfile::tempdir().unwrap();
    for kind in ["gaussian", "simplex", "clustered"] {
        let input = gen(dir.path(), kind, "9", "20", "3");
        let rep = dir.path().join(format!("{kind}.json"));
        let out = Command::new(env!("CARGO_BIN_EXE_lpembed"))
            .args([
                "reduce",
                "--p",
                "0.5",
                "--eps",
                "0.3",
                "--normalization",
                "certified",
                "--input",
            ])
            .arg(&input)
            .arg("--output")
            .arg(dir.path().join("red.json"))
            .arg("--report")
            .arg(&rep)
            .output()
            .unwrap();
        assert_eq!(code(&out), 0, "{kind}: {}", stderr(&out));
        let report: RunReport =
            serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
        assert!(report.distortion.within_certificate(1e-12), "{kind}");
        // Certified normalization puts every ratio at or above 1.
        assert!(report.distortion.min_power_ratio >= 1.0 - 1e-12, "{kind}");
    }
}

#[test]
fn reduce_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen(dir.path(), "gaussian", "4", "5", "1");
    let out = lpembed(&["reduce", "--p", "2.5", "--input"], &[&input]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("(0, 2)"), "{}", stderr(&out));

    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let out = lpembed(&["reduce", "--p", "1", "--input"], &[&empty]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("parse error"));

    let ragged = dir.path().join("ragged.csv");
    std::fs::write(&ragged, "1,2\n3\n").unwrap();
    assert_eq!(
        code(&lpembed(&["reduce", "--p", "1", "--input"], &[&ragged])),
        2
    );

    let missing = dir.path().join("missing.csv");
    assert_eq!(
        code(&lpembed(&["reduce", "--p", "1", "--input"], &[&missing])),
        2
    );

    let out = lpembed(
        &[
            "reduce", "--p", "1", "--umin", "5", "--umax", "6", "--input",
        ],
        &[&input],
    );
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    assert_eq!(
        code(&lpembed(
            &["reduce", "--p", "1", "--d-bss", "1", "--input"],
            &[&input]
        )),
        2
    );
}

#[test]
fn reduce_accepts_header_and_duplicates() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("pts.csv");
    std::fs::write(&input, "x,y,z\n0,1,5\n0,1,5\n2,1,5\n0,3,5\n").unwrap();
    let rep = dir.path().join("rep.json");
    let out = Command::new(env!("CARGO_BIN_EXE_lpembed"))
        .args(["reduce", "--p", "1", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(dir.path().join("red.json"))
        .arg("--report")
        .arg(&rep)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: RunReport = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert_eq!(report.k, 4);
    assert_eq!(report.distortion.duplicate_pairs, 1);
    assert_eq!(report.distortion.violations, 0);
}

#[test]
fn sparsify_identity_family() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("id.csv");
    std::fs::write(&input, "1,0,0,0\n0,1,0,0\n0,0,1,0\n0,0,0,1\n").unwrap();
    let output = dir.path().join("w.json");
    let out = lpembed(&["sparsify", "--d", "4", "--verify", "--input"], &[&input]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = Command::new(env!("CARGO_BIN_EXE_lpembed"))
        .args(["sparsify", "--d", "4", "--verify", "--input"])
        .arg(&input)
        .arg("--output")
        .arg(&output)
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    let report: SparsifyReport =
        serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    assert_eq!(report.support.len(), 4);
    assert_eq!(report.rank, 4);
    assert!(report.kappa <= 9.0);
    let v = report.verification.unwrap();
    assert!(v.contained);
    // Each weight is the eigenvalue for its own direction.
    for e in &report.support {
        assert!(e.weight >= v.lower - 1e-8 && e.weight <= v.upper + 1e-8);
    }
}

#[test]
fn sparsify_verify_on_random_family() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen(dir.path(), "gaussian", "40", "6", "1");
    let out = lpembed(
        &["sparsify", "--eps", "0.5", "--verify", "--input"],
        &[&input],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: SparsifyReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.verification.unwrap().contained);
    assert!(report.support.len() <= (report.d * 6.0).ceil() as usize);
}

#[test]
fn sparsify_rejects_small_d() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen(dir.path(), "gaussian", "5", "2", "1");
    assert_eq!(
        code(&lpembed(&["sparsify", "--d", "1", "--input"], &[&input])),
        2
    );
    assert_eq!(code(&lpembed(&["sparsify", "--input"], &[&input])), 2);
}

#[test]
fn snowflake_audit_command() {
    let out = lpembed(
        &[
            "snowflake-audit",
            "--rho",
            "0.5",
            "--eps",
            "0.1",
            "--umin",
            "0.01",
            "--umax",
            "100",
        ],
        &[],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: AuditReport = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report.within_target);
    assert!(report.audit.max_ratio <= 1.1 && report.audit.min_ratio >= 1.0 / 1.1);
    assert_eq!(report.audit.samples, 10_000);

    let out = lpembed(
        &[
            "snowflake-audit",
            "--rho",
            "1.5",
            "--umin",
            "0.01",
            "--umax",
            "100",
        ],
        &[],
    );
    assert_eq!(code(&out), 2);
    let out = lpembed(
        &[
            "snowflake-audit",
            "--rho",
            "0.5",
            "--umin",
            "10",
            "--umax",
            "1",
        ],
        &[],
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn bench_rows() {
    let out = lpembed(&["bench", "--k", "8,16,32", "--m", "32", "--p", "1.5"], &[]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let mut rdr = csv::Reader::from_reader(out.stdout.as_slice());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        &headers[..6],
        [
            "k",
            "s",
            "n_bound",
            "n_actual",
            "measured_distortion",
            "certified_distortion"
        ]
    );
    let rows: Vec<lpembed_cli::report::BenchRow> = rdr.deserialize().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.n_bound * 8, rows[0].n_bound * r.k);
        assert_eq!(r.s, rows[0].s);
        assert!(r.n_actual <= r.n_bound);
        assert!(r.measured_distortion <= r.certified_distortion);
    }

    assert_eq!(code(&lpembed(&["bench", "--k", ""], &[])), 2);
    assert_eq!(code(&lpembed(&["bench", "--k", "1"], &[])), 2);
}
