use std::path::Path;
use std::process::{Command, Output};

fn orb(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orb")).args(args).current_dir(dir).output().expect("orb runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) {
    let mut all = vec!["gen", "-o", name];
    all.extend_from_slice(args);
    let o = orb(&all, dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "7", "gen", "--q", "3", "--regime", "small_w", "--l-kind", "unramified", "--r", "2"];
    let a = orb(&args, dir.path());
    let b = orb(&args, dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["version"], "orbfl-instance/1");
    assert_eq!(v["r"], 2);
    assert_eq!(v["spec"]["seed"], 7);
}

#[test]
fn ramified_k1_is_rejected_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = orb(
        &["gen", "--q", "3", "--regime", "small_w", "--l-kind", "unramified", "--r", "1", "--k1-kind", "ramified"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());
}

#[test]
fn analytic_geometric_and_verify_fl() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "i.json", &["--q", "3", "--regime", "small_w", "--l-kind", "unramified", "--r", "1"]);
    let a = orb(&["analytic", "i.json"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["u_coeffs"], serde_json::json!([5, 8, 5]));
    assert_eq!(v["value_at_s0"], 2);
    let g = orb(&["geometric", "i.json"], dir.path());
    assert_eq!(serde_json::from_slice::<serde_json::Value>(&g.stdout).unwrap()["geometric"], 2);
    let f = orb(&["verify-fl", "i.json"], dir.path());
    assert_eq!(f.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&f.stdout).unwrap();
    assert!(rep["verdicts"].as_object().unwrap().values().all(|x| x == "PASS"));
    let t = orb(&["verify-fl", "i.json", "--format", "tsv"], dir.path());
    assert_eq!(stdout(&t).lines().count(), 2);
}

#[test]
fn hecke_flag_parses() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "i.json", &["--q", "3", "--regime", "small_w", "--l-kind", "ramified", "--r", "0"]);
    let unit = orb(&["analytic", "i.json"], dir.path());
    let trivial = orb(&["analytic", "i.json", "--hecke", "0,0"], dir.path());
    assert!(trivial.status.success());
    assert_eq!(unit.stdout, trivial.stdout);
    let bad = orb(&["analytic", "i.json", "--hecke", "x"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn afl_and_reduction_on_uniformizer() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "u.json", &["--q", "3", "--regime", "uniformizer_w", "--l-kind", "ramified", "--v", "3"]);
    let a = orb(&["verify-afl", "u.json"], dir.path());
    assert_eq!(a.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(rep["derivative"], 2);
    let r = orb(&["verify-reduction", "u.json"], dir.path());
    assert_eq!(r.status.code(), Some(0));
    let rep: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(rep["rank2"]["u_coeffs"], serde_json::json!([1, 1, 1, 1]));
    let red = orb(&["reduce", "u.json"], dir.path());
    let dto: serde_json::Value = serde_json::from_slice(&red.stdout).unwrap();
    assert_eq!(dto["base"]["kind"], "ramified");
    assert_eq!(dto["pair"]["h"], 1);
}

#[test]
fn reduction_rejects_positive_conductor() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "i.json", &["--q", "3", "--regime", "small_w", "--l-kind", "ramified", "--r", "1"]);
    assert_eq!(orb(&["verify-reduction", "i.json"], dir.path()).status.code(), Some(2));
}

#[test]
fn table_rows_and_headers() {
    let dir = tempfile::tempdir().unwrap();
    let o = orb(&["table", "--q", "3", "--r-max", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r.ends_with("\tPASS")));
    // sweep order is kept despite parallel evaluation
    assert!(rows[0].starts_with("3\tunramified\t0\t"));
    assert!(rows[5].starts_with("3\tramified\t2\t"));

    let empty = orb(&["table", "--q", ""], dir.path());
    assert_eq!(stdout(&empty).lines().count(), 1);
    assert_eq!(empty.status.code(), Some(0));
}

#[test]
fn table_marks_guard_hits() {
    let dir = tempfile::tempdir().unwrap();
    let o = orb(&["--guard", "1", "table", "--q", "3", "--r-max", "3", "--l-kinds", "unramified"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("SKIPPED(guard)"));
}

#[test]
fn algebra_and_lattices() {
    let dir = tempfile::tempdir().unwrap();
    let a = orb(&["algebra", "--kind", "unramified", "--q", "3"], dir.path());
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["algebra"]["kind"], "unramified");
    assert_eq!(v["algebra"]["minpoly"].as_array().unwrap().len(), 3);

    let s = |c: u32, val: i32| serde_json::json!({"val": val, "coeffs": [[c]], "prec": 20});
    let zero = serde_json::json!({"val": null, "coeffs": [], "prec": 20});
    let std_ = serde_json::json!([[s(1, 0), zero.clone()], [zero.clone(), s(1, 0)]]);
    let tstd = serde_json::json!([[s(1, 1), zero.clone()], [zero.clone(), s(1, 1)]]);
    std::fs::write(dir.path().join("top.json"), std_.to_string()).unwrap();
    std::fs::write(dir.path().join("bot.json"), tstd.to_string()).unwrap();
    let l = orb(&["lattices", "--q", "3", "--between", "top.json", "bot.json"], dir.path());
    assert!(l.status.success(), "{}", String::from_utf8_lossy(&l.stderr));
    let v: serde_json::Value = serde_json::from_slice(&l.stdout).unwrap();
    // O^2, tO^2 and the q + 1 lines of F_3^2
    assert_eq!(v["count"], 6);
}
