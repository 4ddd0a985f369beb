use perfmm::apply::ApplyPath;
use perfmm::harness::{self, format_sources, format_targets, CellSpec, RunConfig};
use perfmm::kernels::Pde;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("perfmm-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn perfmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_perfmm")).args(args).output().unwrap()
}

fn apply(pde: &str, sources: &PathBuf, targets: &PathBuf) -> Output {
    perfmm(&[
        "apply",
        "--pde",
        pde,
        "--cell",
        "1,0.1,0.6",
        "--accel",
        "direct",
        "--eps",
        "1e-10",
        "--sources",
        sources.to_str().unwrap(),
        "--targets",
        targets.to_str().unwrap(),
    ])
}

fn values(stdout: &[u8]) -> Vec<Vec<f64>> {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().skip(2).map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn apply_matches_the_library_bitwise() {
    let cfg = RunConfig {
        pde: Pde::Stokes,
        cell: CellSpec::Explicit { d: 1.0, xi: 0.1, eta: 0.6 },
        n_src: 30,
        samples: 12,
        eps: 1e-10,
        accel: ApplyPath::Direct,
        ..RunConfig::default()
    };
    let fields = harness::validation_fields(&cfg).unwrap();
    let src = scratch("lib_src.txt", &format_sources(&fields.system.sources, &fields.system.strengths, None));
    let tgt = scratch("lib_tgt.txt", &format_targets(&fields.system.targets));
    let out = apply("stokes", &src, &tgt);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let got: Vec<f64> = values(&out.stdout).into_iter().flatten().collect();
    let want: Vec<f64> = fields.values.iter().map(|z| z.re).collect();
    assert_eq!(got, want);
    let again = apply("stokes", &src, &tgt);
    assert_eq!(again.stdout, out.stdout);
}

#[test]
fn empty_targets_succeed_with_a_header_only() {
    let src = scratch("empty_src.txt", "0.1 0.1 1\n-0.2 0.05 -1\n");
    let tgt = scratch("empty_tgt.txt", "# no targets\n");
    let out = apply("mhelm", &src, &tgt);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "# x y u0\n");
}

#[test]
fn parse_errors_exit_2_with_the_line() {
    let src = scratch("bad_src.txt", "0.1 0.1 1\n0.2 0.2\n");
    let tgt = scratch("bad_tgt.txt", "0 0\n");
    let out = apply("mhelm", &src, &tgt);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn validate_reports_json_and_exit_codes() {
    let out = perfmm(&["validate", "--pde", "poisson", "--n-src", "40", "--samples", "20", "--eps", "1e-10", "--aspect", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["runs"].as_array().unwrap().len(), 1);

    let out = perfmm(&["validate", "--eps", "1e-15"]);
    assert_eq!(out.status.code(), Some(2));
    let out = perfmm(&["validate", "--pde", "poisson", "--pressure"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn angles_accept_pi_fractions() {
    let out = perfmm(&["validate", "--pde", "mhelm", "--theta", "pi/3", "--aspect", "2", "--n-src", "30", "--samples", "20"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = perfmm(&["validate", "--theta", "pi/x"]);
    assert_eq!(out.status.code(), Some(2));
}
