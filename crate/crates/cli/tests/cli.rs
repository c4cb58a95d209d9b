use std::path::Path;
use std::process::{Command, Output};

fn ife(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ife")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

fn text(o: &Output) -> String {
    format!("{}{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
}

const PATCH: &str = r#"
schema_version = 1
study = "solve"

[problem]
name = "patch_test"

[mesh]
ns = [4]

[solver]
tol = 1e-14

[output]
vtk = true
surface_map = true
record_timings = false
"#;

#[test]
fn patch_test_passes_check_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "patch.toml", PATCH);
    let out = dir.path().join("out");
    let o = ife(&["run", &cfg, "--check", "--threads", "2", "--out", out.to_str().unwrap()]);
    let s = text(&o);
    assert!(s.contains("check PASS: N=4 patch test"), "{s}");
    assert!(s.contains("N=4 structure"), "{s}");
    let failed = s.lines().any(|l| l.starts_with("check FAIL"));
    assert_eq!(o.status.code(), Some(if failed { 2 } else { 0 }), "{s}");
    for f in ["solve.csv", "solution_N4.vtk", "interface_N4.vtk", "surface_N4.csv", "surface_N4.vtk"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("solve.csv")).unwrap();
    assert!(csv.starts_with("N,h,dofs,l2,h1,linf,energy,l2_order,h1_order,iterations,assemble_s,solve_s\n"));
}

#[test]
fn reruns_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
study = "convergence"
[problem]
name = "example1"
[mesh]
ns = [4, 8]
[output]
record_timings = false
"#;
    let cfg = write_config(dir.path(), "c.toml", body);
    let mut files = Vec::new();
    for (k, threads) in ["1", "3"].iter().enumerate() {
        let out = dir.path().join(format!("out{k}"));
        let o = ife(&["run", &cfg, "--threads", threads, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", text(&o));
        files.push(std::fs::read(out.join("convergence.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    let csv = String::from_utf8(files[0].clone()).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn failed_gate_exits_with_status_2() {
    // a coarse pair cannot reach the asymptotic orders
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
study = "convergence"
[problem]
name = "example2"
[mesh]
ns = [2, 3]
"#;
    let cfg = write_config(dir.path(), "c.toml", body);
    let out = dir.path().join("out");
    let o = ife(&["run", &cfg, "--check", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("check FAIL: convergence order"));
    // without --check the same run succeeds
    let o = ife(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
}

#[test]
fn config_errors_name_line_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &PATCH.replace("ns = [4]", "ns = [8, 4]"));
    let o = ife(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(1));
    let s = text(&o);
    assert!(s.contains("line 9") && s.contains("mesh.ns"), "{s}");
    let cfg = write_config(dir.path(), "bad2.toml", &PATCH.replace("[mesh]", "[mesh]\nsize = 3"));
    let s = text(&ife(&["run", &cfg]));
    assert!(s.contains("size") && s.contains("line 9"), "{s}");
    let s = text(&ife(&["run", &dir.path().join("missing.toml").to_string_lossy()]));
    assert!(s.contains("cannot read"), "{s}");
}

#[test]
fn conditioning_study_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
study = "conditioning"
[problem]
name = "example1"
[mesh]
ns = [4]
[conditioning]
rhos = [1.0, 100.0]
lanczos_steps = 60
"#;
    let cfg = write_config(dir.path(), "k.toml", body);
    let out = dir.path().join("out");
    let o = ife(&["run", &cfg, "--check", "--out", out.to_str().unwrap()]);
    let s = text(&o);
    assert!(s.contains("check PASS: N=4 rho=1e0 positive definite"), "{s}");
    assert!(s.contains("N=4 kappa monotone in rho"), "{s}");
    let csv = std::fs::read_to_string(out.join("conditioning.csv")).unwrap();
    assert!(csv.starts_with("N,rho,dofs,lambda_min,lambda_max,kappa,lanczos_steps\n"));
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn robustness_study_runs_example3() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
study = "epsilon_robustness"
[problem]
name = "example3"
[mesh]
ns = [4, 6]
[robustness]
epsilons = [1e-1, 1e-6]
"#;
    let cfg = write_config(dir.path(), "r.toml", body);
    let out = dir.path().join("out");
    let o = ife(&["run", &cfg, "--check", "--out", out.to_str().unwrap()]);
    let s = text(&o);
    assert!(s.contains("iterations bounded") && s.contains("iterations flat in epsilon"), "{s}");
    let csv = std::fs::read_to_string(out.join("robustness.csv")).unwrap();
    assert!(csv.starts_with("epsilon,N,h,"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn custom_formula_problem_matches_builtin_plane_patch() {
    // the patch test written as formulas reproduces the exact solution
    let dir = tempfile::tempdir().unwrap();
    let body = r#"
schema_version = 1
study = "solve"
[problem]
name = "custom"
beta_minus = 1.0
beta_plus = 100.0
[problem.domain]
lo = [0.0, 0.0, 0.0]
hi = [1.0, 1.0, 1.0]
[problem.interface]
expression = "x - 0.31"
[problem.custom]
u_minus = "100 * (x - 0.31) + y - 2 * z"
u_plus = "(x - 0.31) + y - 2 * z"
[mesh]
ns = [4]
[solver]
tol = 1e-14
"#;
    let cfg = write_config(dir.path(), "p.toml", body);
    let out = dir.path().join("out");
    let o = ife(&["run", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", text(&o));
    let csv = std::fs::read_to_string(out.join("solve.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let l2: f64 = row[3].parse().unwrap();
    assert!(l2 < 1e-9, "{csv}");
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let c = ife_cli::config::RunConfig::load(&path).unwrap_or_else(|e| panic!("{e:#}"));
        c.problem().unwrap();
        n += 1;
    }
    assert!(n >= 5);
}
