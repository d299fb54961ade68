use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use echo_consonance_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ec_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(ec_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn scalar_functions() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(ec_state_rate(2.0, &mut x), EcStatus::Ok);
        assert!((x + 28571.43).abs() < 0.1);
        assert_eq!(ec_resistance(100.0, &mut x), EcStatus::Ok);
        assert!((x / 1817.2 - 1.0).abs() < 1e-3);
        assert_eq!(
            ec_pair_dissonance(110.0, 129.5, 1.0, 1.0, &mut x),
            EcStatus::Ok
        );
        assert!((x - 0.899).abs() < 0.002);
    }
}

#[test]
fn errors_set_status_and_message() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(ec_resistance(100.0, ptr::null_mut()), EcStatus::NullPointer);
        assert!(last_error().contains("null"));
        assert_eq!(
            ec_pair_dissonance(-1.0, 10.0, 1.0, 1.0, &mut x),
            EcStatus::Domain
        );
        assert!(!last_error().is_empty());
        let mut h = ptr::null_mut();
        let bad = CString::new("not-an-interval").unwrap();
        let st = ec_snesm_run(ptr::null(), bad.as_ptr(), 55.0, -1.0, &mut h);
        assert_ne!(st, EcStatus::Ok);
        assert!(h.is_null());
        let cfg = CString::new("{\"snesm\": {\"generations\": 0}}").unwrap();
        let q = CString::new("unison").unwrap();
        assert_eq!(
            ec_snesm_run(cfg.as_ptr(), q.as_ptr(), 55.0, -1.0, &mut h),
            EcStatus::Validation
        );
        assert!(last_error().contains("generations"));
    }
}

#[test]
fn null_handles_are_tolerated() {
    unsafe {
        ec_circuit_free(ptr::null_mut());
        ec_run_free(ptr::null_mut());
        ec_string_free(ptr::null_mut());
        assert_eq!(ec_run_generations(ptr::null()), 0);
        assert_eq!(
            ec_circuit_step(ptr::null_mut(), 1e-5, 0.0, 0.0, 0.0),
            EcStatus::NullPointer
        );
    }
}

#[test]
fn circuit_lifecycle() {
    unsafe {
        let mut h = ptr::null_mut();
        assert_eq!(
            ec_circuit_new(EcCircuitKind::Synapse, 0.0, &mut h),
            EcStatus::Ok
        );
        let mut len = 0usize;
        assert_eq!(
            ec_circuit_states(h, ptr::null_mut(), 0, &mut len),
            EcStatus::Ok
        );
        assert_eq!(len, 4);
        let mut one = [0.0; 1];
        assert_eq!(
            ec_circuit_states(h, one.as_mut_ptr(), 1, &mut len),
            EcStatus::BufferTooSmall
        );

        let (mut v_out, mut i_s) = (1.0, 0.0);
        assert_eq!(
            ec_circuit_observe(h, 5.0, &mut v_out, &mut i_s),
            EcStatus::Ok
        );
        assert!(v_out.abs() < 1e-9, "balanced bridge drives {v_out}");
        assert!(i_s > 0.0);

        let dt = 1.0 / 65536.0;
        for n in 0..2048 {
            let v = |k: f64| 20.0 * (2.0 * std::f64::consts::PI * 55.0 * (n as f64 + k) * dt).sin();
            assert_eq!(ec_circuit_step(h, dt, v(0.0), v(0.5), v(1.0)), EcStatus::Ok);
        }
        let mut r = [0.0; 4];
        assert_eq!(
            ec_circuit_states(h, r.as_mut_ptr(), 4, &mut len),
            EcStatus::Ok
        );
        assert!(r.iter().all(|&x| (100.0..=390.0).contains(&x)));
        assert_eq!(
            ec_circuit_step(h, -1.0, 0.0, 0.0, 0.0),
            EcStatus::InvalidArgument
        );
        ec_circuit_free(h);
    }
}

#[test]
fn snesm_run_exposes_windows_and_peaks() {
    unsafe {
        let q = CString::new("perfect5").unwrap();
        let mut h = ptr::null_mut();
        assert_eq!(
            ec_snesm_run(ptr::null(), q.as_ptr(), 66.0, 0.5, &mut h),
            EcStatus::Ok
        );
        let gens = ec_run_generations(h);
        assert_eq!(gens, 10);

        let mut len = 0;
        assert_eq!(
            ec_run_window(h, 1, ptr::null_mut(), 0, &mut len),
            EcStatus::Ok
        );
        assert_eq!(len, 16384);
        let mut w = vec![0.0; len];
        assert_eq!(
            ec_run_window(h, 1, w.as_mut_ptr(), w.len(), &mut len),
            EcStatus::Ok
        );
        assert!(w.iter().any(|&x| x != 0.0));

        assert_eq!(
            ec_run_peaks(h, 1, ptr::null_mut(), 0, &mut len),
            EcStatus::Ok
        );
        let mut p = vec![0.0; len];
        assert_eq!(
            ec_run_peaks(h, 1, p.as_mut_ptr(), p.len(), &mut len),
            EcStatus::Ok
        );
        assert!(p.windows(2).all(|x| x[0] < x[1]));

        assert_eq!(
            ec_run_window(h, gens, ptr::null_mut(), 0, &mut len),
            EcStatus::InvalidArgument
        );
        ec_run_free(h);
    }
}

#[test]
fn default_config_round_trips() {
    unsafe {
        let s = ec_config_default_json();
        assert!(!s.is_null());
        let text = CStr::from_ptr(s).to_str().unwrap().to_owned();
        ec_string_free(s);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!(v.get("snesm").is_some());
    }
}

#[test]
fn tiny_study_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = serde_json::json!({
        "output_dir": dir.path(),
        "score": {"base_freqs": [55.0], "intervals": ["unison"]},
        "outputs": {"plots": false},
    });
    let cfg = CString::new(cfg.to_string()).unwrap();
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(
            ec_study_run(cfg.as_ptr(), 1, &mut out),
            EcStatus::Ok,
            "{}",
            last_error()
        );
        let manifest = CStr::from_ptr(out).to_str().unwrap().to_owned();
        ec_string_free(out);
        let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        assert_eq!(v["runs"], 1);
        assert!(!v["files"].as_array().unwrap().is_empty());
    }
    assert!(dir.path().join("manifest.json").is_file());
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/echo_consonance.h");
    let text = std::fs::read_to_string(&header).expect("header generated by build script");
    for name in [
        "ec_circuit_new",
        "ec_snesm_run",
        "ec_study_run",
        "EC_STATUS_OK",
        "EcRun",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("check.c");
    std::fs::write(
        &src,
        "#include \"echo_consonance.h\"\nint main(void) { EcStatus s = EC_STATUS_OK; return (int)s; }\n",
    )
    .unwrap();
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header.parent().unwrap())
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "{cc} rejected the header"),
        Err(_) => eprintln!("no C compiler found, skipping syntax check"),
    }
}
