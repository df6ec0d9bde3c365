use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use maxent_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(maxent_last_error()) }
        .to_string_lossy()
        .into_owned()
}

fn solve(problem: *const MaxentProblem) -> *mut MaxentSolution {
    let mut s = ptr::null_mut();
    let status = unsafe { maxent_solve(problem, 0.0, 0, &mut s) };
    assert_eq!(status, MaxentStatus::Ok, "{}", last_error());
    s
}

fn column(
    s: *const MaxentSolution,
    f: unsafe extern "C" fn(*const MaxentSolution, *mut f64, usize) -> MaxentStatus,
) -> Vec<f64> {
    let n = unsafe { maxent_solution_node_count(s) };
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { f(s, buf.as_mut_ptr(), n) }, MaxentStatus::Ok);
    buf
}

#[test]
fn continuous_cara_round_trip() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            maxent_problem_new_continuous(0.0, 5.0, 256, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(maxent_problem_add_power(p, 1, 1.0), MaxentStatus::Ok);
        let s = solve(p);
        assert_eq!(maxent_solution_node_count(s), 256);
        assert_eq!(maxent_solution_constraint_count(s), 1);

        let mut lambda = [0.0];
        assert_eq!(
            maxent_solution_multipliers(s, lambda.as_mut_ptr(), 1),
            MaxentStatus::Ok
        );
        assert!((lambda[0] - 0.960_201_509_944_503_6).abs() < 1e-8);

        let gamma = column(s, maxent_solution_gamma);
        assert!(gamma.iter().all(|g| *g == lambda[0]));
        let curve = column(s, maxent_solution_curve);
        assert!(curve.windows(2).all(|w| w[1] > w[0]));
        let nodes = column(s, maxent_solution_nodes);
        assert!(nodes.iter().all(|x| *x > 0.0 && *x < 5.0));
        let density = column(s, maxent_solution_density);
        assert!(density.iter().all(|u| *u > 0.0));

        let h = maxent_solution_entropy(s);
        let logz = maxent_solution_log_partition(s);
        assert!(h.is_finite() && logz.is_finite());

        maxent_solution_free(s);
        maxent_problem_free(p);
    }
}

#[test]
fn assessment_gives_piecewise_density() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            maxent_problem_new_continuous(0.0, 1.0, 128, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(maxent_problem_add_assessment(p, 0.5, 0.8), MaxentStatus::Ok);
        let s = solve(p);
        let nodes = column(s, maxent_solution_nodes);
        let density = column(s, maxent_solution_density);
        for (x, u) in nodes.iter().zip(&density) {
            let want = if *x < 0.5 { 1.6 } else { 0.4 };
            assert!((u - want).abs() < 1e-6);
        }
        maxent_solution_free(s);
        maxent_problem_free(p);
    }
}

#[test]
fn discrete_interval_and_tabulated() {
    unsafe {
        let points = [0.0, 1.0];
        let mut p = ptr::null_mut();
        assert_eq!(
            maxent_problem_new_discrete(points.as_ptr(), 2, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(
            maxent_problem_add_power_interval(p, 1, 0.7, 0.9),
            MaxentStatus::Ok
        );
        let s = solve(p);
        let mass = column(s, maxent_solution_density);
        assert!((mass[0] - 0.3).abs() < 1e-9);
        let gamma = column(s, maxent_solution_gamma);
        assert!(gamma.iter().all(|g| g.is_nan()));
        maxent_solution_free(s);
        maxent_problem_free(p);

        let points = [0.0, 1.0, 2.0];
        let table = [0.0, 1.0, 4.0];
        assert_eq!(
            maxent_problem_new_discrete(points.as_ptr(), 3, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(
            maxent_problem_add_tabulated(p, table.as_ptr(), ptr::null(), 3, 1.5),
            MaxentStatus::Ok
        );
        let s = solve(p);
        let mass = column(s, maxent_solution_density);
        let m: f64 = mass.iter().zip(&table).map(|(p, h)| p * h).sum();
        assert!((m - 1.5).abs() < 1e-9);
        maxent_solution_free(s);
        maxent_problem_free(p);
    }
}

#[test]
fn indicator_interval_stays_slack_when_uniform_fits() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            maxent_problem_new_continuous(0.0, 1.0, 64, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(
            maxent_problem_add_indicator_interval(p, 0.0, 0.25, 0.1, 0.5),
            MaxentStatus::Ok
        );
        let s = solve(p);
        let mut lambda = [1.0];
        assert_eq!(
            maxent_solution_multipliers(s, lambda.as_mut_ptr(), 1),
            MaxentStatus::Ok
        );
        assert_eq!(lambda[0], 0.0);
        maxent_solution_free(s);
        maxent_problem_free(p);

        assert_eq!(
            maxent_problem_new_continuous(0.0, 1.0, 64, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(
            maxent_problem_add_indicator(p, 0.0, 0.25, 0.5),
            MaxentStatus::Ok
        );
        let s = solve(p);
        let curve = column(s, maxent_solution_curve);
        assert!(curve.iter().all(|u| (0.0..=1.0).contains(u)));
        maxent_solution_free(s);
        maxent_problem_free(p);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut p = ptr::null_mut();
        assert_eq!(
            maxent_problem_new_continuous(1.0, 0.0, 64, &mut p),
            MaxentStatus::InvalidInput
        );
        assert!(p.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(
            maxent_problem_new_continuous(0.0, 1.0, 64, ptr::null_mut()),
            MaxentStatus::NullPointer
        );
        assert_eq!(
            maxent_problem_add_power(ptr::null_mut(), 1, 0.5),
            MaxentStatus::NullPointer
        );

        assert_eq!(
            maxent_problem_new_continuous(0.0, 1.0, 64, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(maxent_problem_add_power(p, 1, 1.5), MaxentStatus::Ok);
        let mut s = ptr::null_mut();
        assert_eq!(maxent_solve(p, 0.0, 0, &mut s), MaxentStatus::Infeasible);
        assert!(s.is_null());
        assert!(last_error().contains("infeasible"), "{}", last_error());
        maxent_problem_free(p);

        assert_eq!(
            maxent_problem_new_continuous(0.0, 1.0, 64, &mut p),
            MaxentStatus::Ok
        );
        assert_eq!(maxent_problem_add_power(p, 1, 0.3), MaxentStatus::Ok);
        let s = solve(p);
        let mut small = [0.0; 4];
        assert_eq!(
            maxent_solution_nodes(s, small.as_mut_ptr(), small.len()),
            MaxentStatus::BufferTooSmall
        );
        assert_eq!(
            maxent_solution_nodes(s, ptr::null_mut(), 64),
            MaxentStatus::NullPointer
        );
        maxent_solution_free(s);
        maxent_problem_free(p);

        // freeing null handles is a no-op
        maxent_solution_free(ptr::null_mut());
        maxent_problem_free(ptr::null_mut());
        assert_eq!(maxent_solution_node_count(ptr::null()), 0);
        assert!(maxent_solution_entropy(ptr::null()).is_nan());
    }
}

#[test]
fn standalone_functions() {
    unsafe {
        let masses = [0.25, 0.75];
        let mut h = 0.0;
        assert_eq!(
            maxent_discrete_entropy(masses.as_ptr(), 2, false, &mut h),
            MaxentStatus::Ok
        );
        assert!((h - 0.562_335_144_618_808_3).abs() < 1e-15);
        let bad = [0.5, 0.6];
        assert_eq!(
            maxent_discrete_entropy(bad.as_ptr(), 2, false, &mut h),
            MaxentStatus::InvalidInput
        );

        let mut v = 0.0;
        assert_eq!(maxent_utility_volume(5, &mut v), MaxentStatus::Ok);
        assert_eq!(v, 1.0 / 6.0);
        assert_eq!(maxent_utility_volume(2, &mut v), MaxentStatus::InvalidInput);
    }
}

fn target_dir() -> PathBuf {
    // tests run from target/<profile>/deps
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_header_and_staticlib() {
    if Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping C smoke test: no C compiler");
        return;
    }
    // Test builds only produce the rlib; ask cargo for the static library.
    let built = Command::new(env!("CARGO"))
        .args(["build", "--quiet", "--lib", "-p", "maxent-ffi"])
        .status()
        .unwrap();
    assert!(built.success());
    let lib = target_dir().join("libmaxent_ffi.a");
    assert!(lib.exists(), "{}", lib.display());
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(root.join("tests/smoke.c"))
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}
