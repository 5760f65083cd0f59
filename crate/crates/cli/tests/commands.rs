use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flatsaddle"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn classify_two_site_chain_at_the_pitchfork() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["classify", "--potential", "chain", "--params", "N=2,gamma=0.5", "--seeds", "0.2,-0.1;1,1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("classify.json"));
    let origin = &v["points"][0];
    assert_eq!(origin["tag"], "Codim1");
    assert_eq!(origin["verdict"], "Saddle");
    // the soft direction converges only linearly; 1e-6 is the attainable accuracy
    assert!(origin["location"][0].as_f64().unwrap().abs() < 1e-6);
    assert_eq!(v["points"][1]["tag"], "LocalMinimum");
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn classify_three_site_chain_at_the_double_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["classify", "--potential", "chain", "--params", "N=3,gamma=0.6666666666666666", "--seeds", "0,0,0"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("classify.json"));
    assert_eq!(v["points"][0]["tag"], "Codim2");
    assert_eq!(v["points"][0]["verdict"], "Saddle");
}

#[test]
fn classify_without_seeds_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["classify", "--potential", "chain", "--params", "N=2,gamma=0.5"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn malformed_potential_file_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    std::fs::write(&file, "{\"dimension\": 2, \"terms\": [{\"coef\": 1.0}]}").unwrap();
    let o = run(&["classify", "--potential", file.to_str().unwrap(), "--seeds", "0,0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_single_point_gives_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--scenario", "transverse", "--grid", "-0.3", "--eps", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "control_parameter,eps,barrier,prefactor,expected_time,regime_tag,error_order");
}

#[test]
fn transverse_sweep_has_an_interior_minimum_at_negative_lambda() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--scenario", "transverse", "--grid", "-1:1:201", "--eps", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_path(dir.path().join("sweep.csv")).unwrap();
    let rows: Vec<(f64, f64)> = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            (rec[0].parse().unwrap(), rec[3].parse().unwrap())
        })
        .collect();
    let (i, _) = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .unwrap();
    assert!(i > 0 && i < rows.len() - 1);
    assert!(rows[i].0 < 0.0);
}

#[test]
fn unknown_scenario_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--scenario", "saddle-node", "--grid", "0", "--eps", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_one_dimensional_well_agrees_with_exact_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--potential", "double-well", "--saddle", "0.05", "--eps", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("verify.json"));
    let row = &v["rows"][0];
    let upper = row["upper"]["value"].as_f64().unwrap();
    let exact = row["exact_1d"].as_f64().unwrap();
    assert!((upper / exact - 1.0).abs() < 1e-8);
}

#[test]
fn verify_rotated_pair_reports_ordered_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["verify", "--potential", "rotated2", "--params", "gamma=0.5", "--saddle", "0,0", "--eps", "0.02"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let v = json(&dir.path().join("verify.json"));
    let r = &v["rows"][0]["ratios"];
    let (lo, up) = (r["lower"].as_f64().unwrap(), r["upper"].as_f64().unwrap());
    assert!(lo <= up);
    assert!(up > 0.85 && up < 1.0, "upper/closed = {up}");
}

#[test]
fn verify_in_four_dimensions_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["verify", "--potential", "chain", "--params", "N=4,gamma=0.5", "--saddle", "0,0,0,0", "--eps", "0.1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_from_a_seed_without_stationary_point_fails_to_converge() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("tilt.json");
    // V = x: no stationary point anywhere
    std::fs::write(&file, r#"{"dimension": 1, "terms": [{"exponents": [1], "coeff": 1.0}]}"#).unwrap();
    let o = run(&["verify", "--potential", file.to_str().unwrap(), "--saddle", "0.3", "--eps", "0.1"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

const SIM: &[&str] = &[
    "simulate",
    "--potential",
    "double-well",
    "--start=-1",
    "--target",
    "1",
    "--target-radius",
    "0.2",
    "--eps",
    "0.25",
    "--replicas",
    "300",
    "--seed",
    "42",
    "--minimum=-1",
    "--saddle",
    "0.1",
    "--times-csv",
];

#[test]
fn simulation_rerun_is_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(SIM, a.path()).status.code(), Some(0));
    assert_eq!(run(SIM, b.path()).status.code(), Some(0));
    for f in ["times.csv", "simulate.json", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let v = json(&a.path().join("simulate.json"));
    assert_eq!(v["validation"]["verdict"], "pass");
}

#[test]
fn manifest_replay_reproduces_outputs() {
    let a = tempfile::tempdir().unwrap();
    let o = run(&["sweep", "--scenario", "sombrero", "--grid", "-0.5:0.1:7", "--eps", "0.01,0.001"], a.path());
    assert_eq!(o.status.code(), Some(0));
    let b = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_flatsaddle"))
        .arg("--manifest")
        .arg(a.path().join("manifest.json"))
        .arg("--out")
        .arg(b.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    for f in ["sweep.csv", "manifest.json"] {
        assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
    }
}

#[test]
fn zero_replicas_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["simulate", "--potential", "double-well", "--start=-1", "--target", "1", "--eps", "0.2", "--replicas", "0"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn heavy_censoring_exits_with_invariant_code_and_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "simulate", "--potential", "double-well", "--start=-1", "--target", "1", "--eps", "0.1", "--replicas", "40",
            "--max-time", "2",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(3));
    let v = json(&dir.path().join("simulate.json"));
    assert!(v["estimate"]["censored_fraction"].as_f64().unwrap() > 0.1);
}

#[test]
fn tabulate_chi_at_zero_is_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["tabulate-special", "--function", "chi", "--alphas", "0,1", "--route", "closed"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("tabulate.csv")).unwrap();
    assert_eq!(text.lines().nth(1).unwrap(), "chi,0.0,2.0,closed_form");
}

#[test]
fn rate_over_two_parallel_saddles_adds_capacities() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "rate", "--potential", "rotated2", "--params", "gamma=0.25", "--minimum=-1.4,0", "--saddle", "-0.35,0.8;-0.35,-0.8",
            "--eps", "0.1",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&dir.path().join("rate.json"));
    let row = &v[0];
    let caps: f64 = row["saddles"].as_array().unwrap().iter().map(|s| s["capacity"].as_f64().unwrap()).sum();
    assert_eq!(row["saddles"].as_array().unwrap().len(), 2);
    assert!((row["combined_capacity"].as_f64().unwrap() / caps - 1.0).abs() < 1e-14);
}
