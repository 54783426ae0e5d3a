//! Black-box tests of the installed binary: exit codes, output schemas,
//! command-line overrides, and diagnostics.

use std::path::PathBuf;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qqland"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

struct Sandbox {
    dir: tempfile::TempDir,
}

impl Sandbox {
    fn new() -> Self {
        Sandbox {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &str) -> String {
        let path = self.dir.path().join(name);
        std::fs::write(&path, contents).unwrap();
        path.to_string_lossy().into_owned()
    }

    fn out(&self, name: &str) -> String {
        self.dir.path().join(name).to_string_lossy().into_owned()
    }

    fn read(&self, name: &str) -> String {
        std::fs::read_to_string(self.dir.path().join(name)).unwrap()
    }
}

fn jc_spec(task: &str, extra: &str) -> String {
    format!(
        "kind = \"jc\"\ntask = \"{task}\"\n{extra}\n[jc]\nomega = 1.0\nnu = 1.1\nOmega = 0.2\nnB = 4\n"
    )
}

#[test]
fn bounds_json_schema_and_success_exit() {
    let sb = Sandbox::new();
    let spec = sb.file("b.toml", &jc_spec("bounds", "T = 12.0\n"));
    let out = sb.out("b.json");
    let result = run(&["bounds", "--spec", &spec, "--out", &out]);
    assert!(result.status.success(), "{}", stderr(&result));
    let text = sb.read("b.json");
    assert!(text.ends_with('\n'));
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = json.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["T", "jMax", "jMin"]);
    assert!(json["jMax"].as_f64().unwrap() >= json["jMin"].as_f64().unwrap());
    assert_eq!(json["T"].as_f64().unwrap(), 12.0);
}

#[test]
fn optimal_json_carries_the_eigenspace() {
    let sb = Sandbox::new();
    let spec = sb.file("o.toml", &jc_spec("optimal", "T = 12.0\n"));
    let out = sb.out("o.json");
    let result = run(&["optimal", "--spec", &spec, "--out", &out]);
    assert!(result.status.success(), "{}", stderr(&result));
    let json: serde_json::Value = serde_json::from_str(&sb.read("o.json")).unwrap();
    let degeneracy = json["degeneracy"].as_u64().unwrap() as usize;
    assert!(degeneracy >= 1);
    let representative = json["representative"].as_array().unwrap();
    assert_eq!(representative.len(), 4);
    assert_eq!(representative[0].as_array().unwrap().len(), 4);
    // Entries are [re, im] pairs.
    assert_eq!(
        representative[0].as_array().unwrap()[0]
            .as_array()
            .unwrap()
            .len(),
        2
    );
    let eigenspace = json["eigenspace"].as_array().unwrap();
    assert_eq!(eigenspace.len(), 4);
    assert_eq!(eigenspace[0].as_array().unwrap().len(), degeneracy);
}

#[test]
fn parse_failures_exit_2() {
    let sb = Sandbox::new();
    let broken = sb.file("broken.toml", "kind = \"jc\"\ntask = ");
    let out = sb.out("x.json");
    let result = run(&["bounds", "--spec", &broken, "--out", &out]);
    assert_eq!(result.status.code(), Some(2), "{}", stderr(&result));

    let missing = sb.out("never-written.toml");
    let result = run(&["bounds", "--spec", &missing, "--out", &out]);
    assert_eq!(result.status.code(), Some(2));

    let unknown_key = sb.file("unknown.toml", &jc_spec("bounds", "T = 1.0\nbogus = 3\n"));
    let result = run(&["bounds", "--spec", &unknown_key, "--out", &out]);
    assert_eq!(result.status.code(), Some(2));
    assert!(stderr(&result).contains("bogus"), "{}", stderr(&result));

    let bad_grid = sb.file("grid.toml", &jc_spec("bounds", "T = 1.0\n"));
    let result = run(&["bounds", "--spec", &bad_grid, "--out", &out, "--grid", "0:10"]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn validation_failures_exit_3_with_located_diagnostics() {
    let sb = Sandbox::new();
    let out = sb.out("x.json");

    let non_hermitian = sb.file(
        "nh.toml",
        "kind = \"generic\"\ntask = \"bounds\"\nT = 1.0\n\n[system]\nhA0 = [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]\nhB0 = [[[0.0, 0.0]]]\nrhoA = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]\noA = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]\n",
    );
    let result = run(&["bounds", "--spec", &non_hermitian, "--out", &out]);
    assert_eq!(result.status.code(), Some(3));
    let message = stderr(&result);
    assert!(message.contains("hA0"), "{message}");
    assert!(message.contains(":6:"), "expected a line 6 position: {message}");

    let spec = sb.file("task.toml", &jc_spec("bounds", "T = 1.0\n"));
    let result = run(&["sweep", "--spec", &spec, "--out", &out]);
    assert_eq!(result.status.code(), Some(3));
    assert!(stderr(&result).contains("task=bounds"), "{}", stderr(&result));

    let missing_t = sb.file("no-t.toml", &jc_spec("optimal", ""));
    let result = run(&["optimal", "--spec", &missing_t, "--out", &out]);
    assert_eq!(result.status.code(), Some(3));

    let generic_sweep = sb.file(
        "gs.toml",
        "kind = \"generic\"\ntask = \"sweep\"\n\n[system]\nhA0 = [[[0.0, 0.0]]]\nhB0 = [[[0.0, 0.0]]]\nrhoA = [[[1.0, 0.0]]]\noA = [[[1.0, 0.0]]]\n",
    );
    let result = run(&["sweep", "--spec", &generic_sweep, "--out", &out]);
    assert_eq!(result.status.code(), Some(3));
}

#[test]
fn unconverged_entangled_writes_report_and_exits_4() {
    let sb = Sandbox::new();
    let spec = sb.file(
        "e.toml",
        &jc_spec(
            "entangled",
            "T = 7.0\n\n[tolerances]\nmaxIters = 2\nsolverTol = 1e-14\n",
        ),
    );
    let out = sb.out("e.json");
    let result = run(&["entangled", "--spec", &spec, "--out", &out]);
    assert_eq!(result.status.code(), Some(4), "{}", stderr(&result));
    let json: serde_json::Value = serde_json::from_str(&sb.read("e.json")).unwrap();
    assert_eq!(json["converged"], serde_json::Value::Bool(false));
    assert_eq!(json["iterations"].as_u64(), Some(2));
    assert_eq!(
        json["objective_history"].as_array().unwrap().len(),
        3,
        "history holds the initial iterate plus one entry per step"
    );
    assert!(json["constraint_residual"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn converged_entangled_report_is_consistent() {
    let sb = Sandbox::new();
    let spec = sb.file("e.toml", &jc_spec("entangled", "T = 7.0\n"));
    let out = sb.out("e.json");
    let result = run(&["entangled", "--spec", &spec, "--out", &out]);
    assert!(result.status.success(), "{}", stderr(&result));
    let json: serde_json::Value = serde_json::from_str(&sb.read("e.json")).unwrap();
    assert_eq!(json["converged"], serde_json::Value::Bool(true));
    let history = json["objective_history"].as_array().unwrap();
    assert_eq!(
        history.len() as u64,
        json["iterations"].as_u64().unwrap() + 1
    );
    let objective = json["objective"].as_f64().unwrap();
    assert!((history.last().unwrap().as_f64().unwrap() - objective).abs() <= 1e-12);
    let state = json["state"].as_array().unwrap();
    assert_eq!(state.len(), 8, "joint state lives on the 2x4 product space");
    // Maximizing monotone history.
    for pair in history.windows(2) {
        assert!(pair[1].as_f64().unwrap() >= pair[0].as_f64().unwrap() - 1e-12);
    }
}

#[test]
fn grid_and_sense_overrides_change_the_result() {
    let sb = Sandbox::new();
    let spec = sb.file(
        "s.toml",
        &jc_spec("sweep", "\n[grid]\ntStart = 0.0\ntEnd = 10.0\nsteps = 11\n"),
    );
    let out = sb.out("s.csv");
    let result = run(&["sweep", "--spec", &spec, "--out", &out]);
    assert!(result.status.success());
    assert_eq!(sb.read("s.csv").lines().count(), 12);
    let result = run(&["sweep", "--spec", &spec, "--out", &out, "--grid", "0:10:21"]);
    assert!(result.status.success());
    assert_eq!(sb.read("s.csv").lines().count(), 22);

    let opt = sb.file("o.toml", &jc_spec("optimal", "T = 12.0\n"));
    let out_max = sb.out("max.json");
    let out_min = sb.out("min.json");
    assert!(run(&["optimal", "--spec", &opt, "--out", &out_max]).status.success());
    assert!(run(&["optimal", "--spec", &opt, "--out", &out_min, "--sense", "min"])
        .status
        .success());
    let j_max: serde_json::Value = serde_json::from_str(&sb.read("max.json")).unwrap();
    let j_min: serde_json::Value = serde_json::from_str(&sb.read("min.json")).unwrap();
    assert!(
        j_max["objective"].as_f64().unwrap() > j_min["objective"].as_f64().unwrap(),
        "sense override did not flip the optimum"
    );
}

#[test]
fn multi_truncation_sweep_emits_long_form_csv() {
    let sb = Sandbox::new();
    let spec = sb.file(
        "s.toml",
        &jc_spec("sweep", "\n[grid]\ntStart = 0.0\ntEnd = 20.0\nsteps = 41\n"),
    );
    let out = sb.out("levels.csv");
    let result = run(&[
        "sweep", "--spec", &spec, "--out", &out, "--levels", "4,8,16",
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    let csv = sb.read("levels.csv");
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "T,j_max,j_min,argmax_level,n_levels,delta"
    );
    assert_eq!(csv.lines().count(), 1 + 3 * 41);
    let levels: std::collections::BTreeSet<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap())
        .collect();
    assert_eq!(
        levels.into_iter().collect::<Vec<_>>(),
        ["16", "4", "8"],
        "every requested truncation appears"
    );
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').count(), 6);
        assert_eq!(line.split(',').nth(5).unwrap(), "1.00000000000e-1");
    }

    // On resonance the 16-level curve reaches full transfer somewhere.
    let resonant = sb.file(
        "res.toml",
        &jc_spec("sweep", "").replace("nu = 1.1", "nu = 1.0"),
    );
    let out = sb.out("resonant.csv");
    let result = run(&[
        "sweep", "--spec", &resonant, "--out", &out, "--levels", "16", "--grid", "0:100:1001",
    ]);
    assert!(result.status.success(), "{}", stderr(&result));
    let peak = sb
        .read("resonant.csv")
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0f64, f64::max);
    assert!(peak >= 0.99, "resonant peak {peak} < 0.99");
}

#[test]
fn shipped_specs_drive_every_documented_task() {
    let sb = Sandbox::new();
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    let generic = root.join("specs/coupled-qubit-qutrit.toml");
    let out = sb.out("shipped-optimal.json");
    let result = run(&["optimal", "--spec", generic.to_str().unwrap(), "--out", &out]);
    assert!(result.status.success(), "{}", stderr(&result));
    let json: serde_json::Value = serde_json::from_str(&sb.read("shipped-optimal.json")).unwrap();
    assert!(json["objective"].as_f64().unwrap() > 0.0);

    let jc = root.join("specs/atom-field-sweep.toml");
    let out = sb.out("shipped-sweep.csv");
    let result = run(&["sweep", "--spec", jc.to_str().unwrap(), "--out", &out]);
    assert!(result.status.success(), "{}", stderr(&result));
    let csv = sb.read("shipped-sweep.csv");
    assert_eq!(csv.lines().next().unwrap(), "T,j_max,j_min,argmax_level");
    assert_eq!(csv.lines().count(), 1002);
}

#[test]
fn verify_reports_every_property_by_name() {
    let sb = Sandbox::new();
    let spec = sb.file(
        "v.toml",
        &jc_spec("verify", "\n[grid]\ntStart = 0.0\ntEnd = 60.0\nsteps = 201\n"),
    );
    let out = sb.out("v.json");
    let result = run(&["verify", "--spec", &spec, "--out", &out, "--seed", "9"]);
    assert!(result.status.success(), "{}", stderr(&result));
    let json: serde_json::Value = serde_json::from_str(&sb.read("v.json")).unwrap();
    assert_eq!(json["passed"], serde_json::Value::Bool(true));
    let names: Vec<&str> = json["properties"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["name"].as_str().unwrap())
        .collect();
    for expected in [
        "kernel.propagator_unitary",
        "kernel.eigh_reconstruction",
        "kernel.tensor_algebra",
        "jc.analytic_agreement",
        "jc.numeric_bounds",
        "jc.sweep_integrity",
        "jc.floor_pinned_at_zero",
        "jc.transfer_cap",
        "jc.argmax_level_jumps",
    ] {
        assert!(names.contains(&expected), "missing property {expected}");
    }
    for p in json["properties"].as_array().unwrap() {
        assert!(!p["detail"].as_str().unwrap().is_empty());
    }
}
