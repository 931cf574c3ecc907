use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use slaterflo::nogo::CircuitStep;
use slaterflo_cli::format::{circuit_to_file, parse_circuit};
use slaterflo_cli::CliError;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slaterflo"))
}

fn circuits_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("circuits")
}

fn circuit(name: &str) -> PathBuf {
    circuits_dir().join(name)
}

fn state(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("states").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_path(cmd: &str, path: &Path, extra: &[&str]) -> Output {
    let mut c = bin();
    c.arg(cmd).arg(path).args(extra);
    c.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("transcript is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn example_circuits() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(circuits_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    v.sort();
    assert!(!v.is_empty());
    v
}

#[test]
fn rotation_only_has_no_measurements() {
    let out = run_path("simulate", &circuit("rotation_only.json"), &["--seed", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    let steps = doc["steps"].as_array().unwrap();
    assert_eq!(steps.len(), 3);
    for s in steps {
        assert_eq!(s["kind"], "rotate");
        assert!(s["probability"].is_null());
        assert_eq!(s["terms"], 1);
    }
    assert_eq!(doc["generator"], "ChaCha8Rng");
    assert_eq!(doc["seed"], 1);
}

#[test]
fn forced_middle_outcome_gives_two_terms() {
    let out = run_path("simulate", &circuit("p1_generic.json"), &["--oracle-check"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    let last = doc["steps"].as_array().unwrap().last().unwrap().clone();
    assert_eq!(last["outcome"], "1");
    assert_eq!(last["terms"], 2);
    assert_eq!(doc["oracle"]["passed"], true);
}

#[test]
fn seeded_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for path in example_circuits() {
        let a = dir.path().join("a.json");
        let b = dir.path().join("b.json");
        for target in [&a, &b] {
            let out = run_path("simulate", &path, &["--seed", "7", "--out", target.to_str().unwrap()]);
            assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), stderr(&out));
        }
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{}", path.display());
        let direct = run_path("simulate", &path, &["--seed", "7"]);
        assert_eq!(direct.stdout, std::fs::read(&a).unwrap());
    }
}

#[test]
fn every_example_passes_the_oracle_check() {
    for path in example_circuits() {
        let out = run_path("simulate", &path, &["--seed", "3", "--oracle-check"]);
        assert_eq!(out.status.code(), Some(0), "{}: {}", path.display(), stderr(&out));
        let doc = json(&out);
        assert!(doc["oracle"]["max_probability_deviation"].as_f64().unwrap() <= 1e-8);
        assert!(doc["oracle"]["min_fidelity"].as_f64().unwrap() >= 1.0 - 1e-8);
    }
}

#[test]
fn examples_round_trip() {
    for path in example_circuits() {
        let text = std::fs::read_to_string(&path).unwrap();
        let first = parse_circuit(&text, &mut Vec::new()).unwrap();
        let written = serde_json::to_string_pretty(&circuit_to_file(&first)).unwrap();
        let second = parse_circuit(&written, &mut Vec::new()).unwrap();
        assert_eq!(first.modes, second.modes);
        assert_eq!(first.electrons, second.electrons);
        assert_eq!(first.steps.len(), second.steps.len());
        let close = |a: &slaterflo::CMatrix, b: &slaterflo::CMatrix| (a - b).iter().all(|z| z.norm() <= 1e-12);
        let vclose = |a: &slaterflo::ModeVector, b: &slaterflo::ModeVector| {
            (a.components() - b.components()).iter().all(|z| z.norm() <= 1e-12)
        };
        for (a, b) in first.steps.iter().zip(&second.steps) {
            let same = match (a, b) {
                (CircuitStep::Rotate { unitary: x }, CircuitStep::Rotate { unitary: y }) => close(x, y),
                (
                    CircuitStep::Generate { generator: x, tau: s },
                    CircuitStep::Generate { generator: y, tau: t },
                ) => close(x, y) && s == t,
                (
                    CircuitStep::MeasureOne { kappa: k1, policy: p1 },
                    CircuitStep::MeasureOne { kappa: k2, policy: p2 },
                ) => vclose(k1, k2) && p1 == p2,
                (
                    CircuitStep::MeasureTwo {
                        kappa: k1,
                        lambda: l1,
                        grouping: g1,
                        policy: p1,
                    },
                    CircuitStep::MeasureTwo {
                        kappa: k2,
                        lambda: l2,
                        grouping: g2,
                        policy: p2,
                    },
                ) => vclose(k1, k2) && vclose(l1, l2) && g1 == g2 && p1 == p2,
                _ => false,
            };
            assert!(same, "{}: step differs after round trip", path.display());
        }
    }
}

#[test]
fn nogo_deterministic_circuit_is_certain() {
    let out = run_path("nogo", &circuit("deterministic.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    for s in doc["steps"].as_array().unwrap() {
        assert!((s["probability"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn nogo_keeps_a_single_term() {
    let out = run_path("nogo", &circuit("nogo_generic.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let doc = json(&out);
    let mut product = 1.0;
    for s in doc["steps"].as_array().unwrap() {
        assert_eq!(s["terms"], 1);
        if let Some(p) = s["probability"].as_f64() {
            assert!(p > 1e-12);
            product *= p;
            assert!(!s["outcome"].is_null());
        }
    }
    assert!((doc["cumulative_probability"].as_f64().unwrap() - product).abs() < 1e-9);
    assert!(product < 1.0);
}

#[test]
fn nogo_rejects_parity() {
    let out = run_path("nogo", &circuit("parity.json"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[ParityGroupingUnsupported]:"));
    assert!(err.contains("does not apply to the parity measurement"));
}

#[test]
fn term_cap_exit_code() {
    let out = run_path("simulate", &circuit("parity.json"), &["--max-terms", "1"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr(&out).starts_with("error[TermCapExceeded]:"));
}

#[test]
fn parse_errors_report_position() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"modes\": 4,\n  \"electrons\": 2,\n  \"steps\": [ {\"rotate\": }\n]}\n").unwrap();
    let out = run_path("simulate", &bad, &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("error[ParseError]:"));
    assert!(err.contains("line 4"), "{err}");

    let grouping = dir.path().join("grouping.json");
    std::fs::write(
        &grouping,
        r#"{"modes": 3, "electrons": 1, "steps": [{"measure2": {"kappa": 0, "lambda": 1, "grouping": "0/1/2"}}]}"#,
    )
    .unwrap();
    let out = run_path("simulate", &grouping, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown grouping"));

    let out = run(&["simulate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[ParseError]:"));
}

#[test]
fn renormalization_warning() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"modes": 2, "electrons": 1, "steps": [{"measure1": {"mode": [[1.0, 0.0], [1.0, 0.0]], "policy": {"forced": "1"}}}]}"#,
    )
    .unwrap();
    let out = run_path("simulate", &path, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning: mode vector renormalized"));
    let doc = json(&out);
    assert!((doc["steps"][0]["probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn oracle_check_needs_small_circuits() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.json");
    std::fs::write(&path, r#"{"modes": 7, "electrons": 2, "steps": []}"#).unwrap();
    let out = run_path("simulate", &path, &["--oracle-check"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[TooManyModes]:"));
}

#[test]
fn exit_code_for_failed_oracle_check() {
    let e = CliError::OracleCheckFailed {
        deviation: 1e-3,
        fidelity: 0.9,
    };
    assert_eq!(e.exit_code(), 3);
    assert_eq!(e.kind(), "OracleCheckFailed");
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let comments = text.lines().filter(|l| l.starts_with('#')).map(String::from).collect();
    let rows = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(String::from).collect())
        .collect();
    (comments, rows)
}

#[test]
fn bands_detection_probability() {
    let out = run(&["bands", "--sites", "15", "--electrons", "7", "--outcome", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    let (comments, rows) = csv_rows(&text);
    assert_eq!(comments[0], "# outcome = 1");
    let p: f64 = comments[1].trim_start_matches("# probability = ").parse().unwrap();
    assert!((p - 7.0 / 15.0).abs() < 1e-12);
    assert_eq!(rows[0].join(","), "x,density_before,density_after,orbital_re,orbital_im,closed_form");
    assert_eq!(rows.len(), 16);
    assert!(rows.iter().all(|r| r.len() == 6));
    let origin = rows.iter().find(|r| r[0] == "0").unwrap();
    assert!((origin[2].parse::<f64>().unwrap() - 1.0).abs() < 1e-10);
}

#[test]
fn bands_empty_origin() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bands.csv");
    let out = run(&["bands", "--sites", "15", "--electrons", "7", "--outcome", "0", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (_, rows) = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert!(rows.iter().all(|r| r.len() == 6));
    let origin = rows.iter().find(|r| r[0] == "0").unwrap();
    let re: f64 = origin[3].parse().unwrap();
    let im: f64 = origin[4].parse().unwrap();
    assert!(re.hypot(im) <= 1e-12);
}

#[test]
fn bands_sampling_is_seeded() {
    let a = run(&["bands", "--sites", "9", "--electrons", "3", "--outcome", "sample", "--seed", "11"]);
    let b = run(&["bands", "--sites", "9", "--electrons", "3", "--outcome", "sample", "--seed", "11"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn bands_bad_config() {
    let out = run(&["bands", "--sites", "14", "--electrons", "7"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).starts_with("error[BadConfig]:"));
    let out = run(&["bands", "--sites", "15", "--electrons", "7", "--outcome", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

fn report_value(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("no {key} in report:\n{text}"))
        .parse()
        .unwrap()
}

#[test]
fn slater_rank_at_maximal_closed_form() {
    let out = run(&["slater-rank", "--angles", "0", "1.5707963", "0.7853982"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let pf = report_value(&text, "|pfaffian|");
    assert!((pf - 1.0).abs() <= 1e-6, "|Pf| reported as {pf}\n{text}");
}

#[test]
fn slater_rank_degenerate_angles() {
    let out = run(&["slater-rank", "--angles", "0", "0", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(report_value(&text, "slater_number") <= 1.0);
}

#[test]
fn slater_rank_generic_angles() {
    let out = run(&["slater-rank", "--angles", "0.4", "1.0", "0.6", "--electrons", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report_value(&text, "slater_number"), 2.0);
    assert!(report_value(&text, "|pfaffian|") > 1e-3);
}

#[test]
fn slater_rank_state_files() {
    let out = run_path("slater-rank", &state("single_determinant.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report_value(&text, "slater_number"), 1.0);

    let out = run_path("slater-rank", &state("two_determinants.json"), &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(report_value(&text, "slater_number"), 2.0);
    assert!((report_value(&text, "|pfaffian|") - 0.12).abs() < 1e-12);

    let out = run(&["slater-rank"]);
    assert_eq!(out.status.code(), Some(1));
}
