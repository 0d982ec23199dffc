//! End-to-end runs of the `collapsar` binary: exit codes, output files and
//! the sweep and suite behaviours that only show at the CLI level.

use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

struct Run {
    output: Output,
    dir: PathBuf,
}

impl Run {
    fn code(&self) -> i32 {
        self.output.status.code().expect("exited normally")
    }

    fn report(&self) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.dir.join("report.json")).unwrap())
            .unwrap()
    }

    fn file(&self, name: &str) -> String {
        std::fs::read_to_string(self.dir.join(name)).unwrap()
    }

    fn stderr(&self) -> String {
        String::from_utf8_lossy(&self.output.stderr).into_owned()
    }
}

fn collapsar(tmp: &TempDir, tag: &str, experiment: &str, config: &str, extra: &[&str]) -> Run {
    let cfg = tmp.path().join(format!("{tag}.cfg"));
    std::fs::write(&cfg, config).unwrap();
    let dir = tmp.path().join(tag);
    let output = Command::new(env!("CARGO_BIN_EXE_collapsar"))
        .arg(experiment)
        .arg("--config")
        .arg(&cfg)
        .arg("--output-dir")
        .arg(&dir)
        .args(extra)
        .output()
        .unwrap();
    Run { output, dir }
}

const SMALL_SWEEP: &str = "grid.n = 16\ngrid.box_length = 8\nparams.t_end = 0.2\n";

#[test]
fn config_errors_exit_with_2() {
    let tmp = TempDir::new().unwrap();
    let cases = [
        ("evolve", "params.lambda = 1\ngrid.points = 16\n"),
        ("evolve", "params.lambda = 1\nparams.lambda = 2\n"),
        ("nonsense", "params.lambda = 1\n"),
        ("blowup", "experiment = evolve\nparams.lambda = 1\n"),
        ("reg-sweep", "params.lambda = 1\nsweep.alpha = 0.1, 0.05\n"),
    ];
    for (i, (experiment, text)) in cases.iter().enumerate() {
        let r = collapsar(&tmp, &format!("bad{i}"), experiment, text, &[]);
        assert_eq!(r.code(), 2, "{experiment} / {text:?}: {}", r.stderr());
        assert!(r.stderr().contains("config error"), "{}", r.stderr());
    }
    let missing = Command::new(env!("CARGO_BIN_EXE_collapsar"))
        .args(["evolve", "--config", "/nonexistent/x.cfg"])
        .output()
        .unwrap();
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn aborted_sweep_exits_with_3_and_names_the_run() {
    let tmp = TempDir::new().unwrap();
    // a zero tail threshold fires on the first sample of the reference run
    let text = format!(
        "{SMALL_SWEEP}params.lambda = 1\nblowup.tail_max = 0\nsweep.alpha = 0.2, 0.1, 0.05, 0.02\n"
    );
    let r = collapsar(&tmp, "abort", "reg-sweep", &text, &[]);
    assert_eq!(r.code(), 3);
    assert!(r.stderr().contains("alpha = 0"), "{}", r.stderr());
    assert!(r.stderr().contains("BlowupDetected"), "{}", r.stderr());
}

#[test]
fn free_sweep_has_zero_distances_and_undefined_slopes() {
    let tmp = TempDir::new().unwrap();
    let text = format!("{SMALL_SWEEP}params.lambda = 0\nsweep.alpha = 0.2, 0.1, 0.05, 0.02\n");
    let plain = collapsar(&tmp, "free", "reg-sweep", &text, &[]);
    assert_eq!(plain.code(), 0, "{}", plain.stderr());
    let report = plain.report();
    assert!(report["fitted_slope_l2"].is_null());
    assert!(report["fitted_slope_h_half"].is_null());
    assert_eq!(report["slopes_defined"], false);
    for row in report["rows"].as_array().unwrap() {
        assert_eq!(row["sup_l2_distance"], 0.0);
        assert_eq!(row["sup_h_half_distance"], 0.0);
    }
    let checked = collapsar(&tmp, "free-check", "reg-sweep", &text, &["--check"]);
    assert_eq!(checked.code(), 4);
}

#[test]
fn sweep_output_ignores_alpha_order_and_job_count() {
    let tmp = TempDir::new().unwrap();
    let sorted = format!("{SMALL_SWEEP}params.lambda = 1\nsweep.alpha = 0.2, 0.1, 0.05, 0.02\n");
    let shuffled = format!("{SMALL_SWEEP}params.lambda = 1\nsweep.alpha = 0.05, 0.2, 0.02, 0.1\n");
    let a = collapsar(&tmp, "sorted", "reg-sweep", &sorted, &[]);
    let b = collapsar(&tmp, "shuffled", "reg-sweep", &shuffled, &["--jobs", "3"]);
    assert_eq!(a.code(), 0, "{}", a.stderr());
    assert_eq!(b.code(), 0, "{}", b.stderr());
    for name in ["sweep.csv", "monitors.csv", "report.json"] {
        assert_eq!(a.file(name), b.file(name), "{name} differs");
    }
    let csv = a.file("sweep.csv");
    let alphas: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(alphas, vec![0.2, 0.1, 0.05, 0.02]);
    assert!(csv.starts_with(
        "alpha,sup_l2_distance,sup_h_half_distance,n,box_length,lambda,dt_init,t_end\n"
    ));
    let slope = a.report()["fitted_slope_l2"].as_f64().unwrap();
    assert!(slope > 0.5 && slope < 1.5, "slope {slope}");
}

#[test]
fn monitor_rows_carry_run_metadata() {
    let tmp = TempDir::new().unwrap();
    let text = "grid.n = 16\ngrid.box_length = 8\nparams.alpha = 0.1\nparams.t_end = 0.1\n\
                params.dt_init = 0.02\nsweep.lambda = 0.5, 1.5\n";
    let r = collapsar(&tmp, "evolve", "evolve", text, &["--check"]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let csv = r.file("monitors.csv");
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert!(rows
        .iter()
        .all(|r| r[col("n")] == 16.0 && r[col("box_length")] == 8.0));
    assert!(rows
        .iter()
        .all(|r| r[col("alpha")] == 0.1 && r[col("dt_init")] == 0.02));
    let lambdas: Vec<f64> = rows.iter().map(|r| r[col("lambda")]).collect();
    assert!(lambdas.contains(&0.5) && lambdas.contains(&1.5));
    assert!(!Path::new(&r.dir.join("sweep.csv")).exists());
    assert_eq!(r.report()["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn small_cutoff_fock_suite_is_degraded_not_failed() {
    let tmp = TempDir::new().unwrap();
    let r = collapsar(
        &tmp,
        "fock4",
        "fock-check",
        "fock.n_max = 4\nfock.trials = 20\nseed = 3\n",
        &["--check"],
    );
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let report = r.report();
    assert_eq!(report["status"], "degraded");
    let ids = report["identities"].as_object().unwrap();
    assert!(ids["weyl_composition"]["skipped"].as_u64().unwrap() > 0);
    assert!(ids["phase_average"]["skip_reason"].is_string());
    assert!(ids.values().all(|v| v["failed"] == 0));
}

#[test]
fn seed_override_controls_the_random_family() {
    let tmp = TempDir::new().unwrap();
    let text = "grid.n = 16\ngrid.box_length = 8\ninequalities.trials = 6\nseed = 1\n";
    let a = collapsar(&tmp, "a", "inequalities", text, &[]);
    let b = collapsar(&tmp, "b", "inequalities", text, &["--seed", "1"]);
    let c = collapsar(&tmp, "c", "inequalities", text, &["--seed", "2"]);
    assert_eq!(a.file("sweep.csv"), b.file("sweep.csv"));
    assert_ne!(a.file("sweep.csv"), c.file("sweep.csv"));
    assert_eq!(c.report()["seed"], 2);
    assert_eq!(a.report()["evaluated"], 6);
}

#[test]
fn blowup_report_records_the_collapse_hypothesis() {
    let tmp = TempDir::new().unwrap();
    let text = "grid.n = 16\ngrid.box_length = 8\nparams.lambda = 1\nparams.t_end = 0.2\n";
    let r = collapsar(&tmp, "quiet", "blowup", text, &[]);
    assert_eq!(r.code(), 0, "{}", r.stderr());
    let report = r.report();
    let fl = &report["fl_check"];
    assert_eq!(fl["eligible"], false);
    assert_eq!(fl["energy_negative"], false);
    assert_eq!(report["run"]["verdict"]["detected"], false);
    assert!(report["lambda_threshold"].as_f64().unwrap() > 1.0);
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut count = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "cfg") {
            collapsar::ExperimentConfig::load(&path, None)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert_eq!(count, 6);
}
