use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stochmech"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn em_budget_writes_the_run_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "em.toml", "experiment = \"em-budget\"\nseed = 5\n");
    let out = tmp.path().join("runs");
    let st = bin().args(["em-budget", "--config"]).arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let dirs: Vec<_> = fs::read_dir(&out).unwrap().map(|d| d.unwrap().path()).collect();
    assert_eq!(dirs.len(), 1);
    let d = &dirs[0];
    assert!(d.file_name().unwrap().to_string_lossy().starts_with("em-budget-"));
    for f in ["manifest.json", "results.json", "invariants.json"] {
        assert!(d.join(f).exists(), "{f}");
    }
    let results: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("results.json")).unwrap()).unwrap();
    assert_eq!(results["seed"], 5);
    let m = results["budget"]["magnetic_mass"].as_f64().unwrap();
    assert_eq!(format!("{m:.5e}"), "9.10952e-31");
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["wall_time_s"].as_f64().is_some());
}

#[test]
fn validate_reports_diagnostics() {
    let tmp = tempfile::tempdir().unwrap();
    let good = write(tmp.path(), "good.toml", "experiment = \"spin-checks\"\nseed = 1\n[params]\npairs = 10\n");
    assert!(bin().args(["validate", "--config"]).arg(&good).output().unwrap().status.success());

    let bad = write(tmp.path(), "bad.toml", "experiment = \"spin-checks\"\n");
    let o = bin().args(["validate", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("seed:"), "{err}");

    let broken = write(tmp.path(), "broken.toml", "seed = 1\nexperiment = [\n");
    let o = bin().args(["validate", "--config"]).arg(&broken).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line "));
}

#[test]
fn invariant_failure_sets_the_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "fp.toml",
        "experiment = \"fp-evolve\"\nseed = 1\n[params]\nlevels = 2\nmin_order = 3.0\n",
    );
    let o = bin().args(["fp-evolve", "--config"]).arg(&cfg).arg("--out").arg(tmp.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAILED  continuity_order"));
}

#[test]
fn mismatched_subcommand_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "m.toml", "experiment = \"mass-audit\"\nseed = 1\n");
    let o = bin().args(["em-budget", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("mass-audit"));
}

#[test]
fn environment_overrides_output_and_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "s.toml",
        "experiment = \"spin-checks\"\nseed = 2\n[params]\ndensities = 2\n[output]\ndir = \"ignored\"\n",
    );
    let env_out = tmp.path().join("env-out");
    let st = bin()
        .args(["spin-checks", "--config"])
        .arg(&cfg)
        .env("STOCHMECH_OUT", &env_out)
        .env("STOCHMECH_THREADS", "2")
        .output()
        .unwrap();
    assert!(st.status.success());
    assert!(env_out.exists());
    assert!(!tmp.path().join("ignored").exists());
    let run = fs::read_dir(&env_out).unwrap().next().unwrap().unwrap().path();
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
}

#[test]
fn reruns_are_byte_identical_across_thread_caps() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "d.toml",
        "experiment = \"diffusion-recovery\"\nseed = 11\n[params]\npaths = 2000\nsteps = 100\n",
    );
    let mut csvs = Vec::new();
    for t in ["1", "3"] {
        let out = tmp.path().join(format!("t{t}"));
        let st = bin().args(["diffusion-recovery", "--config"]).arg(&cfg).args(["--threads", t]).arg("--out").arg(&out).output().unwrap();
        assert!(st.status.success());
        let run = fs::read_dir(&out).unwrap().next().unwrap().unwrap().path();
        csvs.push((fs::read(run.join("results.csv")).unwrap(), fs::read(run.join("results.json")).unwrap()));
    }
    assert_eq!(csvs[0], csvs[1]);
}
