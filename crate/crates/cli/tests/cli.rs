use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use xlra_cli::config::RunConfig;
use xlra_cli::emit::{read_rows_csv, HEADER};

fn xlra(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xlra"))
        .args(args)
        .output()
        .expect("run xlra")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sweep_output_is_deterministic_and_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| {
        vec![
            "sweep".to_string(),
            "--protocol".into(),
            "sucre-xl,novr-xl".into(),
            "--k".into(),
            "300,100".into(),
            "--seed".into(),
            "2,1".into(),
            "--blocks".into(),
            "60".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    for out in [&a, &b] {
        let o = Command::new(env!("CARGO_BIN_EXE_xlra"))
            .args(args(out))
            .output()
            .unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    assert_eq!(
        fs::read(dir.path().join("a.csv.summary")).unwrap(),
        fs::read(dir.path().join("b.csv.summary")).unwrap()
    );

    let rows = read_rows_csv(&ta[..]).unwrap();
    let keys: Vec<(String, usize, u64)> = rows.iter().map(|r| (r.protocol.clone(), r.k, r.seed)).collect();
    let expect: Vec<(String, usize, u64)> = ["novr-xl", "sucre-xl"]
        .iter()
        .flat_map(|p| {
            [100, 300]
                .into_iter()
                .flat_map(move |k| [1, 2].map(|s| (p.to_string(), k, s)))
        })
        .collect();
    assert_eq!(keys, expect);
    assert!(rows.iter().all(|r| r.markov_bound >= r.fail_prob));

    let summary = fs::read_to_string(dir.path().join("a.csv.summary")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 4);
}

#[test]
fn run_writes_one_row_in_either_format() {
    let o = xlra(&[
        "run",
        "--protocol",
        "msucre-xl",
        "--k",
        "200",
        "--blocks",
        "50",
        "--seed",
        "4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().next().unwrap(), HEADER.join(","));
    assert!(text.lines().nth(1).unwrap().starts_with("msucre-xl,200,4,"));

    let o = xlra(&["run", "--k", "200", "--blocks", "50", "--format", "json-lines"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["protocol"], "novr-xl");
    assert_eq!(v["K"], 200);
}

#[test]
fn config_file_sets_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.cfg", "# four SAs\nB = 4\ntau_ra = 3\n");
    let o = xlra(&["overheads", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        String::from_utf8(o.stdout).unwrap(),
        "protocol,tau_ra,B,channel_uses\nnovr-xl,3,4,95\nsucre-xl,3,4,113\nmsucre-xl,3,4,117\n"
    );
}

#[test]
fn serialized_config_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.scenario.ue_tx_power = 1e-3;
    cfg.sweep.k_values = vec![100, 700];
    let path = write(dir.path(), "round.cfg", &cfg.serialize());
    assert_eq!(RunConfig::load(Path::new(&path)).unwrap(), cfg);
}

#[test]
fn errors_exit_nonzero_with_a_message() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write(dir.path(), "unknown.cfg", "P_b = 0.5\nwidgets = 3\n");
    let o = xlra(&["overheads", "--config", &unknown]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("widgets"), "{}", stderr(&o));

    let range = write(dir.path(), "range.cfg", "P_b = 1.5\n");
    let o = xlra(&["run", "--config", &range]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("P_b"), "{}", stderr(&o));

    let o = xlra(&["run", "--protocol", "aloha"]);
    assert!(!o.status.success());

    let o = xlra(&["sweep", "--k", "0", "--blocks", "1"]);
    assert!(!o.status.success());

    let o = xlra(&[
        "overheads",
        "--config",
        dir.path().join("missing.cfg").to_str().unwrap(),
    ]);
    assert!(!o.status.success());

    let o = xlra(&[
        "overheads",
        "--out",
        dir.path().join("no/such/dir.csv").to_str().unwrap(),
    ]);
    assert!(!o.status.success());
}

#[test]
fn exclusivity_grid_and_calibration_report() {
    let o = xlra(&["exclusivity"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 30);
    assert!(text.lines().any(|l| l.starts_with("20,5,0.4700")));

    let o = xlra(&["calibrate", "--samples", "500"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# ue_tx_power = 0.1 W"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn shipped_calibrated_config_loads() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/calibrated.cfg");
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.scenario.ue_tx_power, 1e-3);
    assert_eq!(cfg.sweep.k_values, vec![2000]);
}
