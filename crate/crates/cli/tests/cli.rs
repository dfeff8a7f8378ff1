use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn censtail() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_censtail"));
    cmd.env_remove("CENSTAIL_THREADS");
    cmd
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run(args: &[&str], file: &Path) -> Output {
    censtail().args(args).arg(file).output().unwrap()
}

const FIXTURE: &str = "z,delta\n1.5,1\n2.0,0\n3.1,1\n";

#[test]
fn ingest_summary_line() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "s.csv", FIXTURE);
    let o = run(&["estimate", "--est", "hill", "--k", "1"], &f);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(
        stderr(&o).contains("n=3 censored=1 (33.33%)"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn hill_on_exponential_ladder() {
    let dir = TempDir::new().unwrap();
    let e = std::f64::consts::E;
    let f = write(
        &dir,
        "ladder.csv",
        &format!("z,delta\n1,1\n{e},1\n{},1\n", e * e),
    );
    let o = run(&["estimate", "--est", "hill", "--k", "2"], &f);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let value: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("estimate"))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert!((value - 1.5).abs() < 1e-12, "{text}");
    assert!(text.contains("p_hat      1"));
}

#[test]
fn path_for_p_hat_has_two_rows() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "s.csv", FIXTURE);
    let o = run(&["path", "--est", "p-hat"], &f);
    assert!(o.status.success(), "{}", stderr(&o));
    // top three: 3.1 (δ=1), 2.0 (δ=0), 1.5 (δ=1)
    assert_eq!(
        stdout(&o),
        "k,estimate,reason\n2,0.5,\n3,0.6666666666666666,\n"
    );
}

#[test]
fn path_reports_failures_with_reason_codes() {
    let dir = TempDir::new().unwrap();
    let f = write(&dir, "s.csv", "z,delta\n1,1\n2,1\n3,0\n4,0\n");
    let o = run(&["path", "--est", "efg", "--k-min", "1"], &f);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.starts_with("k,estimate,reason\n1,,all_censored_tail\n2,,all_censored_tail\n3,"),
        "{text}"
    );
}

#[test]
fn kselect_on_constant_path() {
    let dir = TempDir::new().unwrap();
    let rows: String = (1..=30).map(|k| format!("{k},0.7,\n")).collect();
    let f = write(&dir, "path.csv", &format!("k,estimate,reason\n{rows}"));
    let o = censtail()
        .args(["kselect", "--from-path"])
        .arg(&f)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "k_opt,criterion\n2,0\n");
}

#[test]
fn kselect_on_dataset_and_auto_k_agree() {
    let dir = TempDir::new().unwrap();
    let rows: String = (1..=60)
        .map(|i| format!("{},{}\n", (i as f64).powf(1.7), u8::from(i % 4 != 0)))
        .collect();
    let f = write(&dir, "d.csv", &format!("z,delta\n{rows}"));
    let sel = run(&["kselect", "--est", "weighted-na", "--beta", "1.01"], &f);
    assert!(sel.status.success(), "{}", stderr(&sel));
    let k_opt = stdout(&sel)
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .to_owned();
    let est = run(
        &[
            "estimate",
            "--est",
            "weighted-na",
            "--beta",
            "1.01",
            "--auto-k",
            "--ci",
            "0.95",
        ],
        &f,
    );
    assert!(est.status.success(), "{}", stderr(&est));
    let text = stdout(&est);
    assert!(
        text.contains(&format!("k          {k_opt} (reiss-thomas")),
        "{text}"
    );
    assert!(text.contains("ci         ["), "{text}");
}

#[test]
fn estimate_json_report() {
    let dir = TempDir::new().unwrap();
    let rows: String = (1..=40)
        .map(|i| format!("{},{}\n", i as f64 * 1.3, u8::from(i % 3 != 0)))
        .collect();
    let f = write(&dir, "d.csv", &format!("z,delta\n{rows}"));
    let json = dir.path().join("out.json");
    let o = censtail()
        .args([
            "estimate",
            "--est",
            "weighted-km",
            "--beta",
            "1.5",
            "--k",
            "10",
            "--ci",
            "0.9",
            "--json",
        ])
        .arg(&json)
        .arg(&f)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(v["estimator"], "weighted_km[1.5]");
    assert_eq!(v["k"], 10);
    assert_eq!(v["n"], 40);
    assert!(v["ci"]["lower"].as_f64().unwrap() < v["estimate"].as_f64().unwrap());
}

#[test]
fn compare_has_one_column_per_estimator() {
    let dir = TempDir::new().unwrap();
    let rows: String = (1..=20)
        .map(|i| format!("{},{}\n", (i as f64).exp2(), u8::from(i % 2 == 0)))
        .collect();
    let f = write(&dir, "d.csv", &format!("z,delta\n{rows}"));
    let o = run(&["compare"], &f);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "k,hill,p_hat,efg,worms_km,mns_na,weighted_na[1.01],weighted_km[1.01],bw[0]"
    );
    assert_eq!(lines.count(), 18);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let good = write(&dir, "good.csv", FIXTURE);

    // usage
    let o = censtail()
        .args(["estimate", "--est", "hill"])
        .arg(&good)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["estimate", "--est", "nonsense", "--k", "1"], &good);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["estimate", "--est", "weighted-na", "--k", "1"], &good);
    assert_eq!(o.status.code(), Some(2), "missing beta");
    let o = run(&["estimate", "--est", "hill", "--k", "7"], &good);
    assert_eq!(o.status.code(), Some(2), "k out of range");
    let o = run(
        &["estimate", "--est", "hill", "--k", "1", "--ci", "0.9"],
        &good,
    );
    assert_eq!(o.status.code(), Some(2), "ci for hill");

    // data
    let bad = write(&dir, "bad.csv", "z,delta\n1.5,1\n2.0,3\n");
    let o = run(&["estimate", "--est", "hill", "--k", "1"], &bad);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));
    let o = run(
        &["estimate", "--est", "hill", "--k", "1"],
        &dir.path().join("missing.csv"),
    );
    assert_eq!(o.status.code(), Some(3));

    // numerical: the top observation is censored
    let top_censored = write(&dir, "tc.csv", "z,delta\n1,1\n2,1\n3,0\n");
    let o = run(&["estimate", "--est", "efg", "--k", "1"], &top_censored);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("censored"), "{}", stderr(&o));
}

const CONFIG: &str = r#"{
    "schema_version": 1,
    "scenario": {"target": {"frechet": {"zeta": 0.7}}, "censor": {"matched": {"p": 0.3}}},
    "n": 120,
    "replications": 150,
    "estimators": [{"kind": "weighted_na", "beta": 1.5}, {"kind": "efg"}],
    "k_grid": {"range": {"min": 2, "max": 119, "stride": 3}},
    "seed": 4
}"#;

#[test]
fn simulate_is_reproducible_across_workers() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", CONFIG);
    let one = censtail()
        .args(["simulate", "--threads", "1", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let many = censtail()
        .args(["simulate", "--threads", "6", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    let capped = censtail()
        .args(["simulate", "--threads", "6", "--config"])
        .arg(&cfg)
        .env("CENSTAIL_THREADS", "2")
        .output()
        .unwrap();
    assert!(one.status.success(), "{}", stderr(&one));
    assert_eq!(one.stdout, many.stdout);
    assert_eq!(one.stdout, capped.stdout);
    let text = stdout(&one);
    assert!(text.starts_with("k,estimator_id,beta,abs_bias,mse,failures\n2,efg,,"));
    assert_eq!(text.lines().count(), 1 + 2 * 40);

    let reseeded = censtail()
        .args(["simulate", "--seed", "5", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_ne!(one.stdout, reseeded.stdout);

    let out = dir.path().join("table.csv");
    let o = censtail()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), one.stdout);
    let rows = censtail::io::read_figure_table(std::fs::File::open(&out).unwrap()).unwrap();
    assert_eq!(rows.len(), 80);
}

#[test]
fn simulate_schema_violations_are_named() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        &CONFIG.replace("\"seed\": 4", "\"seed\": 4, \"workers\": 3"),
    );
    let o = censtail()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("workers"), "{}", stderr(&o));

    let cfg = write(
        &dir,
        "v.json",
        &CONFIG.replace("\"schema_version\": 1", "\"schema_version\": 9"),
    );
    let o = censtail()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("schema_version"), "{}", stderr(&o));

    let cfg = write(&dir, "k.json", &CONFIG.replace("\"min\": 2", "\"min\": 1"));
    let o = censtail()
        .args(["simulate", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("k_grid"), "{}", stderr(&o));
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let config = censtail::io::RunConfig::load(&path).unwrap();
        config
            .to_mc_config()
            .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    }
}
