//! End-to-end runs of the `qwalk` binary against the shipped configurations.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qwalk_cli::config::{
    parse_config, Amplitudes, ExperimentKind, Format, InitialConfig, PerturbationConfig,
    PolarizationName, PrepName, RunConfig, ScheduleSource, SearchConfig, SweepConfig,
    TomographyConfig, TransferConfig,
};
use qwalk_core::photonics::{PhotonBudget, TimingConfig};
use qwalk_core::LossModel;
use serde_json::Value;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn example_configs() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(configs_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

fn qwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qwalk"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn subcommand_for(config: &Path) -> &'static str {
    let v: Value = serde_json::from_str(&fs::read_to_string(config).unwrap()).unwrap();
    match v["experiment"].as_str().unwrap() {
        "budget" => "budget",
        "sweep" => "sweep",
        "transfer-search" => "transfer-search",
        "montecarlo" => "montecarlo",
        _ if v.get("tomography").is_some() => "tomography",
        _ => "simulate",
    }
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Data lines of one CSV table: metadata comments dropped.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// Rows of the named table in multi-table CSV output.
fn csv_table(text: &str, name: &str) -> Vec<Vec<String>> {
    text.split("# table: ")
        .find(|t| t.lines().next() == Some(name))
        .and_then(|t| t.split_once('\n'))
        .map(|(_, body)| csv_rows(body))
        .unwrap_or_default()
}

fn json_table<'a>(doc: &'a Value, name: &str) -> &'a Value {
    doc["tables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["name"] == name)
        .unwrap()
}

#[test]
fn every_example_runs_and_is_byte_identical() {
    let configs = example_configs();
    assert!(configs.len() >= 12);
    for config in configs {
        let sub = subcommand_for(&config);
        let c = config.to_str().unwrap();
        for format in ["csv", "json"] {
            let tmp = tempfile::tempdir().unwrap();
            let a = tmp.path().join("a");
            let b = tmp.path().join("b");
            for dir in [&a, &b] {
                let o = qwalk(&[
                    sub,
                    "--config",
                    c,
                    "--format",
                    format,
                    "--out",
                    dir.to_str().unwrap(),
                ]);
                assert!(o.status.success(), "{sub} {c}: {}", stderr(&o));
            }
            let names: Vec<_> = fs::read_dir(&a)
                .unwrap()
                .map(|e| e.unwrap().file_name())
                .collect();
            assert!(!names.is_empty(), "{c} wrote nothing");
            for n in names {
                assert_eq!(
                    fs::read(a.join(&n)).unwrap(),
                    fs::read(b.join(&n)).unwrap(),
                    "{c}: {n:?} differs"
                );
            }
        }
        assert_eq!(
            stdout(&qwalk(&[sub, "--config", c])),
            stdout(&qwalk(&[sub, "--config", c]))
        );
    }
}

#[test]
fn every_example_conforms_to_the_schema_keys() {
    let schema: Value = serde_json::from_str(
        &fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run-config.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let props = schema["properties"].as_object().unwrap();
    for config in example_configs() {
        let v: Value = serde_json::from_str(&fs::read_to_string(&config).unwrap()).unwrap();
        for (k, section) in v.as_object().unwrap() {
            let declared = props
                .get(k)
                .unwrap_or_else(|| panic!("{config:?}: `{k}` missing from schema"));
            if let (Some(obj), Some(inner)) = (section.as_object(), declared.get("properties")) {
                for key in obj.keys() {
                    assert!(
                        inner.get(key).is_some(),
                        "{config:?}: `{k}.{key}` missing from schema"
                    );
                }
            }
        }
        parse_config(&fs::read_to_string(&config).unwrap()).unwrap();
    }
}

#[test]
fn schema_declares_exactly_the_config_fields() {
    let full = RunConfig {
        experiment: ExperimentKind::Finite,
        description: Some(String::new()),
        steps: Some(1),
        seed: 0,
        format: Format::Csv,
        initial: Some(InitialConfig {
            position: 0,
            polarization: Some(PolarizationName::H),
            amplitudes: Some(Amplitudes {
                h: [1.0, 0.0],
                v: [0.0, 0.0],
            }),
        }),
        coin: Some("H".into()),
        boundary: Some(1),
        schedule: Some(ScheduleSource::Inline(String::new())),
        prep: Some(PrepName::Vvhh),
        transfer: Some(TransferConfig {
            period: 5,
            periods: Some(1),
        }),
        search: Some(SearchConfig {
            period: 5,
            source: 0,
            target: 1,
        }),
        losses: Some(LossModel::paper()),
        timing: Some(TimingConfig::paper()),
        budget: Some(PhotonBudget::paper()),
        sweep: Some(SweepConfig {
            losses: vec![],
            dynamic_range_db: vec![],
            cap: 1,
        }),
        perturbation: Some(PerturbationConfig::default()),
        tomography: Some(TomographyConfig {
            step: Some(1),
            position: Some(0),
            shots: Some(1),
        }),
    };
    let v = serde_json::to_value(&full).unwrap();
    let schema: Value = serde_json::from_str(
        &fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("schema/run-config.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    let keys = |o: &Value| {
        o.as_object()
            .unwrap()
            .keys()
            .cloned()
            .collect::<BTreeSet<_>>()
    };
    assert_eq!(keys(&v), keys(&schema["properties"]));
    for section in [
        "initial",
        "transfer",
        "search",
        "losses",
        "timing",
        "budget",
        "sweep",
        "perturbation",
        "tomography",
    ] {
        assert_eq!(
            keys(&v[section]),
            keys(&schema["properties"][section]["properties"]),
            "{section}"
        );
    }
}

#[test]
fn finite_chessboard_is_confined() {
    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(
        tmp.path(),
        "b3.json",
        r#"{"experiment": "finite", "steps": 20, "boundary": 3, "coin": "qwp 45"}"#,
    );
    let out = tmp.path().join("out");
    let o = qwalk(&[
        "simulate",
        "--config",
        c.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&fs::read_to_string(out.join("chessboard.csv")).unwrap());
    assert_eq!(rows[0], ["step", "-3", "-2", "-1", "0", "1", "2", "3"]);
    assert_eq!(rows.len() - 1, 21);
    for (i, r) in rows[1..].iter().enumerate() {
        assert_eq!(r[0], i.to_string());
        let total: f64 = r[1..].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-8);
    }
}

#[test]
fn transfer_json_reports_unit_fidelities() {
    let c = configs_dir().join("transfer-5.json");
    let o = qwalk(&[
        "simulate",
        "--config",
        c.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(o.status.success());
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let t = json_table(&doc, "fidelity");
    let rows = t["rows"].as_array().unwrap();
    let got: Vec<(i64, i64, f64)> = rows
        .iter()
        .map(|r| {
            (
                r[0].as_i64().unwrap(),
                r[1].as_i64().unwrap(),
                r[2].as_f64().unwrap(),
            )
        })
        .collect();
    assert_eq!(got, [(5, 1, 1.0), (10, 0, 1.0), (15, 1, 1.0)]);
}

#[test]
fn budget_table_holds_the_photon_numbers() {
    let c = configs_dir().join("budget.json");
    let o = qwalk(&["budget", "--config", c.to_str().unwrap(), "--steps", "8"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("damage threshold"));
    let rows = csv_table(&stdout(&o), "photon_budget");
    assert_eq!(rows.len(), 9);
    let n3: f64 = rows.iter().find(|r| r[0] == "3").unwrap()[1]
        .parse()
        .unwrap();
    let n5: f64 = rows.iter().find(|r| r[0] == "5").unwrap()[1]
        .parse()
        .unwrap();
    assert!((n3 - 1.12).abs() < 0.01, "{n3}");
    assert!((n5 - 0.263).abs() < 0.005, "{n5}");
}

#[test]
fn metadata_header_records_version_hash_and_seed() {
    let c = configs_dir().join("finite-b3-montecarlo.json");
    let c = c.to_str().unwrap();
    let a = stdout(&qwalk(&["montecarlo", "--config", c]));
    let b = stdout(&qwalk(&["montecarlo", "--config", c, "--seed", "5"]));
    let header = |s: &str| s.lines().take(4).map(str::to_string).collect::<Vec<_>>();
    let ha = header(&a);
    assert_eq!(ha[0], format!("# qwalk {}", env!("CARGO_PKG_VERSION")));
    assert_eq!(ha[1], "# experiment: montecarlo");
    assert!(
        ha[2].starts_with("# config_sha256: ") && ha[2].len() == "# config_sha256: ".len() + 64
    );
    assert_eq!(ha[3], "# seed: 2024");
    let hb = header(&b);
    assert_eq!(hb[3], "# seed: 5");
    assert_ne!(ha[2], hb[2]);
    assert_ne!(csv_table(&a, "errorbars"), csv_table(&b, "errorbars"));
}

#[test]
fn errorbar_columns() {
    let c = configs_dir().join("finite-b3-montecarlo.json");
    let out = stdout(&qwalk(&[
        "montecarlo",
        "--config",
        c.to_str().unwrap(),
        "--steps",
        "4",
    ]));
    let rows = csv_table(&out, "errorbars");
    assert_eq!(
        rows[0],
        ["step", "position", "polarization", "mean", "stddev"]
    );
    assert!(rows[1..]
        .iter()
        .all(|r| r.len() == 5 && (r[2] == "H" || r[2] == "V")));
    assert!(rows[1..].iter().any(|r| r[4].parse::<f64>().unwrap() > 0.0));
}

#[test]
fn validate_reports_timing_overlap_without_boundaries() {
    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment": "unrestricted", "steps": 14, "coin": "qwp 45"}"#,
    );
    let o = qwalk(&["validate", "--config", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).starts_with("error: `steps`"), "{}", stdout(&o));

    let o = qwalk(&["validate", "--config", c.to_str().unwrap(), "--steps", "13"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn validate_well_formed_four_site_config_is_clean() {
    let c = configs_dir().join("finite-b3.json");
    let o = qwalk(&[
        "validate",
        "--config",
        c.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v, Value::Array(vec![]));
}

#[test]
fn validate_warns_on_damage_and_coin_levels() {
    let c = configs_dir().join("budget.json");
    let o = qwalk(&[
        "validate",
        "--config",
        c.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v[0]["severity"], "warning");
    assert_eq!(v[0]["field"], "budget");

    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment": "finite", "schedule": {"inline":
            "steps 6\ndefault coin qwp 45\nat * pos -3,3 coin R\nat 2 pos 0 coin T\nat 4 pos 0 coin hwp 10\n"}}"#,
    );
    let o = qwalk(&["validate", "--config", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("warning: `schedule`: 4 distinct coin operators"));
}

#[test]
fn config_errors_exit_one_and_name_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            r#"{"experiment": "finite", "steps": 5, "boundary": 3, "coin": "qwp 45", "colour": 1}"#,
            "colour",
        ),
        (
            r#"{"experiment": "budget", "budget": {"p_laser": 1}}"#,
            "budget",
        ),
        (
            r#"{"experiment": "finite", "steps": 5, "boundary": 3, "coin": "qwp 45", "initial": {"polarisation": "H"}}"#,
            "initial.polarisation",
        ),
        (
            r#"{"experiment": "finite", "steps": 5, "coin": "qwp 45"}"#,
            "`boundary`",
        ),
        (
            r#"{"experiment": "unrestricted", "steps": 5, "coin": "waveplate"}"#,
            "`coin`",
        ),
        (
            r#"{"experiment": "unrestricted", "schedule": {"file": "missing.schedule"}}"#,
            "`schedule.file`",
        ),
        (
            r#"{"experiment": "unrestricted", "schedule": {"inline": "steps 3\nat 1 pos x coin R\n"}}"#,
            "line 2, column 10",
        ),
        (r#"{"experiment": "budget", "boundary": 2}"#, "`boundary`"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let c = write_config(tmp.path(), &format!("c{i}.json"), text);
        let sub = if text.contains("budget") {
            "budget"
        } else {
            "simulate"
        };
        let o = qwalk(&[sub, "--config", c.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(qwalk(&["simulate"]).status.code(), Some(1));
    assert_eq!(qwalk(&["frobnicate"]).status.code(), Some(1));
    let c = configs_dir().join("budget.json");
    let o = qwalk(&["simulate", "--config", c.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("cannot run under `simulate`"));
    assert_eq!(qwalk(&["--help"]).status.code(), Some(0));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = write_config(tmp.path(), "occupied", "");
    let c = configs_dir().join("finite-b3.json");
    let o = qwalk(&[
        "simulate",
        "--config",
        c.to_str().unwrap(),
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn schedule_file_matches_generated_schedule() {
    let from_file = stdout(&qwalk(&[
        "simulate",
        "--config",
        configs_dir()
            .join("finite-b3-from-file.json")
            .to_str()
            .unwrap(),
    ]));
    let generated = stdout(&qwalk(&[
        "simulate",
        "--config",
        configs_dir().join("finite-b3.json").to_str().unwrap(),
        "--steps",
        "20",
    ]));
    let board = csv_table(&from_file, "chessboard");
    assert_eq!(board.len(), 22);
    assert_eq!(board, csv_table(&generated, "chessboard"));
}

#[test]
fn tomography_recovers_the_transferred_state() {
    let c = configs_dir().join("transfer-5-tomography.json");
    let o = qwalk(&[
        "tomography",
        "--config",
        c.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = json_table(&doc, "density_matrix")["rows"]
        .as_array()
        .unwrap()
        .clone();
    assert_eq!(rows[0][0], "reconstructed");
    assert_eq!(rows[0][2], 1);
    assert!(rows[0][3].as_f64().unwrap() > 0.99);
    assert_eq!(rows[1][3].as_f64().unwrap(), 1.0);
}

#[test]
fn prep_steps_count_from_the_prepared_state() {
    let tmp = tempfile::tempdir().unwrap();
    let c = write_config(
        tmp.path(),
        "p.json",
        r#"{"experiment": "prep", "prep": "VVHH", "coin": "qwp 45", "steps": 4}"#,
    );
    let rows = csv_table(
        &stdout(&qwalk(&["simulate", "--config", c.to_str().unwrap()])),
        "chessboard",
    );
    assert_eq!(rows.len(), 6);
    let header = &rows[0];
    let first = &rows[1];
    assert_eq!(first[0], "0");
    let at = |x: &str| header.iter().position(|h| h == x).unwrap();
    for x in ["-3", "-1", "1", "3"] {
        assert_eq!(first[at(x)], "0.25");
    }
}
