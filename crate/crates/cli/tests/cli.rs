use std::path::PathBuf;
use std::process::Command;

use lem_cli::acceptance::table1_case;
use lem_cli::report::{parse_csv, read_csv, write_csv, ReportRow};
use lem_cli::{parse_config, run_sweep, BenchCase, CaseKind, Cell, StepTarget};
use lem_core::steppers::Method;
use proptest::prelude::*;

fn lem() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lem"));
    cmd.env("RUST_LOG", "error");
    cmd
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

#[test]
fn shipped_configs_parse() {
    for name in ["table1.toml", "table2.toml", "nonlinear.toml", "rotation2d.toml"] {
        let cases = parse_config(&config(name)).unwrap_or_else(|e| panic!("{name}: {e:#}"));
        assert!(!cases.is_empty() && cases.iter().all(|c| !c.cells.is_empty()), "{name}");
    }
    assert_eq!(parse_config(&config("table1.toml")).unwrap()[0], table1_case());
}

#[test]
fn table1_sweep_has_23_rows_and_skips_one_cell() {
    let rows = run_sweep(&table1_case(), 1, false).unwrap();
    assert_eq!(rows.len(), 23);
    assert!(!rows.iter().any(|r| r.subdomains == 20 && r.buffer == 20));
    for r in &rows {
        assert_eq!(r.dof_updates_per_step, 400 + 2 * r.buffer * r.subdomains);
        assert!(!r.failed(), "{r:?}");
    }
    // Errors are essentially independent of D at adequate buffer widths. At
    // C = 8 the buffer of 20 leaves a spread of about 7e-3 at D = 10.
    for dt in [0.025, 0.05, 0.1] {
        let errs: Vec<f64> = rows.iter().filter(|r| (r.dt - dt).abs() < 1e-12).map(|r| r.err_l2_rel).collect();
        let (lo, hi) = errs.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        assert!((hi - lo) / lo <= 2e-3, "dt {dt}: {errs:?}");
    }
}

#[test]
fn sweeps_are_deterministic() {
    let mut case = BenchCase::new(CaseKind::Burgers1d);
    case.params.n = 120;
    case.t_end = 0.5;
    case.methods = vec![Method::ExpRB2, Method::ExpRB3];
    case.subdomains = vec![1, 3];
    case.cells = vec![Cell { target: StepTarget::Courant(1.0), buffer: 10 }];
    let strip = |rows: Vec<ReportRow>| rows.into_iter().map(|r| (r.method, r.subdomains, r.err_l2_rel.to_bits(), r.err_linf_rel.to_bits())).collect::<Vec<_>>();
    let timed = strip(run_sweep(&case, 1, true).unwrap());
    assert_eq!(timed, strip(run_sweep(&case, 1, true).unwrap()));
    assert_eq!(timed, strip(run_sweep(&case, 2, false).unwrap()));
}

#[test]
fn run_writes_csv_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "[[case]]\nname = \"advdiff1d\"\nn = 100\nt_end = 0.5\nmethods = [\"expeuler\", \"rk4\"]\nsubdomains = [1, 4]\n\n[[case.cell]]\ncourant = 1.0\nbuffer = 6\n",
    )
    .unwrap();
    let out = dir.path().join("report.csv");
    let status = lem().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap();
    assert!(status.success());
    let rows = parse_csv(&out).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.wall_seconds >= 0.0 && !r.failed()));

    let stdout = lem().arg("run").arg(&cfg).arg("--no-timing").output().unwrap();
    assert!(stdout.status.success());
    let rows = read_csv(stdout.stdout.as_slice()).unwrap();
    assert!(rows.iter().all(|r| r.wall_seconds.is_nan()));
}

#[test]
fn hard_errors_exit_with_one() {
    let missing = lem().args(["run", "/nonexistent/config.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("nonexistent"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[[case]]\nname = \"advdiff1d\"\n\n[[case]]\nname = \"heat\"\n").unwrap();
    let out = lem().arg("run").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
    let decay = lem().args(["decay", "heat", "--courant", "1", "--out", "/tmp/never.csv"]).output().unwrap();
    assert_eq!(decay.status.code(), Some(1));
}

#[test]
fn decay_command_writes_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("profile.csv");
    let status = lem().args(["decay", "advection1d", "--courant", "0.5", "--n", "200", "--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 200);
    let beyond: Vec<f64> = text.lines().skip(1).filter_map(|l| {
        let f: Vec<&str> = l.split(',').collect();
        (f[0].parse::<usize>().unwrap() > 20).then(|| f[1].parse().unwrap())
    }).collect();
    assert!(beyond.iter().all(|&m| m < 1e-12));
}

#[test]
fn verify_exit_codes() {
    let pass = lem().args(["verify", "--only", "7,8"]).output().unwrap();
    assert_eq!(pass.status.code(), Some(0));
    let text = String::from_utf8_lossy(&pass.stdout);
    assert!(text.contains("criterion  7 PASS") && text.contains("criterion  8 PASS"), "{text}");
    let fail = lem().args(["verify", "--only", "13"]).output().unwrap();
    assert_eq!(fail.status.code(), Some(2));
}

fn any_float() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |v| v.is_finite()), Just(f64::NAN), Just(0.0), Just(f64::MIN_POSITIVE)]
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

proptest! {
    #[test]
    fn csv_round_trip_is_exact(
        rows in prop::collection::vec(
            (0usize..8, 1usize..64, 0usize..64, any_float(), any_float(), any_float(), any_float(), any_float(), any_float(), 1usize..100_000, "[ -~]{0,30}"),
            0..6,
        )
    ) {
        let rows: Vec<ReportRow> = rows
            .into_iter()
            .map(|(m, d, b, c, mu, dt, wall, l2, linf, dof, warnings)| ReportRow {
                case: "burgers1d".into(),
                method: Method::ALL[m],
                subdomains: d,
                buffer: b,
                courant: c,
                mu,
                dt,
                wall_seconds: wall,
                err_l2_rel: l2,
                err_linf_rel: linf,
                dof_updates_per_step: dof,
                warnings,
            })
            .collect();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(&back) {
            prop_assert_eq!((&a.case, a.method, a.subdomains, a.buffer, a.dof_updates_per_step, &a.warnings), (&b.case, b.method, b.subdomains, b.buffer, b.dof_updates_per_step, &b.warnings));
            for (x, y) in [(a.courant, b.courant), (a.mu, b.mu), (a.dt, b.dt), (a.wall_seconds, b.wall_seconds), (a.err_l2_rel, b.err_l2_rel), (a.err_linf_rel, b.err_linf_rel)] {
                prop_assert!(same(x, y), "{} vs {}", x, y);
            }
        }
    }
}
