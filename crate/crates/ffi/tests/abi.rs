use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use freshsim_ffi::*;

fn last_error() -> String {
    let p = freshsim_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(freshsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn scalar_functions() {
    let mut out = 0.0;
    unsafe {
        assert_eq!(
            freshsim_cost(FRESHSIM_KIND_EXPONENTIAL, 1.0, 1.0, &mut out),
            FreshsimStatus::Ok
        );
        assert!((out - (1f64.exp() - 1.0)).abs() < 1e-15);
        assert_eq!(
            freshsim_voiu(FRESHSIM_KIND_LOGARITHMIC, 0.5, 2.0, 0.0, &mut out),
            FreshsimStatus::Ok
        );
        assert_eq!(out, 1.0);
        assert_eq!(
            freshsim_area(FRESHSIM_KIND_LINEAR, 2.0, 1.0, 1.0, &mut out),
            FreshsimStatus::Ok
        );
        assert!((out - 3.0).abs() < 1e-15);
        assert_eq!(
            freshsim_cost(7, 1.0, 1.0, &mut out),
            FreshsimStatus::InvalidArgument
        );
        assert!(last_error().contains('7'));
        assert_eq!(
            freshsim_cost(FRESHSIM_KIND_LINEAR, 1.0, 1.0, ptr::null_mut()),
            FreshsimStatus::NullPointer
        );
        assert_eq!(
            freshsim_cost(FRESHSIM_KIND_LINEAR, 1.0, -1.0, &mut out),
            FreshsimStatus::Domain
        );
    }
}

#[test]
fn analytic_and_validity() {
    let mut a = FreshsimAnalytic::default();
    unsafe {
        assert_eq!(
            freshsim_analytic(FRESHSIM_KIND_EXPONENTIAL, 0.1, 0.5, 1.0, &mut a),
            FreshsimStatus::Ok
        );
        assert!((a.avg_coud - 0.5625).abs() < 1e-12);
        assert_eq!(a.valid, 1);
        assert_eq!(
            freshsim_analytic(FRESHSIM_KIND_EXPONENTIAL, 0.6, 0.5, 1.0, &mut a),
            FreshsimStatus::Ok
        );
        assert!(a.avg_coud.is_infinite());
        assert_eq!(a.valid, 0);
        assert_eq!(
            freshsim_analytic(FRESHSIM_KIND_LINEAR, 1.0, 1.0, 1.0, &mut a),
            FreshsimStatus::UnstableQueue
        );
    }
}

#[test]
fn optimize_linear() {
    let mut o = FreshsimOptimum::default();
    unsafe {
        assert_eq!(
            freshsim_optimize(
                FRESHSIM_OBJECTIVE_MIN_COUD,
                FRESHSIM_KIND_LINEAR,
                1.0,
                1.0,
                1e-4,
                &mut o
            ),
            FreshsimStatus::Ok
        );
        assert!((o.rho_star - 0.531).abs() < 1e-3);
        assert_eq!(
            freshsim_optimize(3, FRESHSIM_KIND_LINEAR, 1.0, 1.0, 1e-4, &mut o),
            FreshsimStatus::InvalidArgument
        );
    }
}

#[test]
fn simulation_handle_lifecycle() {
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(
            freshsim_simulation_run(
                FRESHSIM_KIND_LINEAR,
                1.0,
                0.5,
                1.0,
                2000,
                42,
                0.1,
                0.0,
                &mut sim
            ),
            FreshsimStatus::Ok
        );
        assert!(!sim.is_null());
        assert_eq!(freshsim_simulation_record_count(sim), 2000);
        let mut first = FreshsimRecord::default();
        assert_eq!(
            freshsim_simulation_record(sim, 0, &mut first),
            FreshsimStatus::Ok
        );
        assert_eq!(first.i, 1);
        assert_eq!(first.interarrival, first.t_gen);
        let mut s = FreshsimSummary::default();
        assert_eq!(freshsim_simulation_summary(sim, &mut s), FreshsimStatus::Ok);
        assert_eq!(s.n_updates, 2000);
        freshsim_simulation_free(sim);

        assert_eq!(freshsim_simulation_record_count(ptr::null()), 0);
        assert_eq!(
            freshsim_simulation_summary(ptr::null(), &mut s),
            FreshsimStatus::NullPointer
        );
        freshsim_simulation_free(ptr::null_mut());
        assert_eq!(
            freshsim_simulation_run(
                FRESHSIM_KIND_LINEAR,
                0.0,
                0.5,
                1.0,
                10,
                1,
                0.1,
                0.0,
                &mut sim
            ),
            FreshsimStatus::InvalidArgument
        );
    }
}

#[test]
fn replications_summary() {
    let mut s = FreshsimSummary::default();
    unsafe {
        assert_eq!(
            freshsim_replications(FRESHSIM_KIND_LINEAR, 1.0, 0.5, 1.0, 20_000, 42, 4, &mut s),
            FreshsimStatus::Ok
        );
        assert_eq!(s.replications, 4);
        assert!((s.avg_coud - 3.5).abs() < 0.2);
        assert_eq!(
            freshsim_replications(FRESHSIM_KIND_LINEAR, 1.0, 0.5, 1.0, 20_000, 42, 1, &mut s),
            FreshsimStatus::InvalidArgument
        );
    }
}

/// Compiles tests/c/smoke.c against the generated header and the static
/// library. Skipped when no C compiler is on PATH.
#[test]
fn c_program_links_against_header() {
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    if Command::new(&cc).arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler");
        return;
    }
    let manifest = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    // target/<profile>/deps/abi-<hash> -> target/<profile>
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libfreshsim_ffi.a");
    assert!(
        lib.exists(),
        "static library not found at {}",
        lib.display()
    );
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let status = Command::new(&cc)
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("ok "));
}
