use std::ffi::{CStr, CString};
use std::ptr;

use ldtl_shield_ffi::*;

fn sample_site_toml() -> CString {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/sample_site.toml")).unwrap();
    CString::new(text).unwrap()
}

fn load() -> *mut LdtlScenario {
    let mut scn = ptr::null_mut();
    assert_eq!(unsafe { ldtl_scenario_from_toml(sample_site_toml().as_ptr(), &mut scn) }, LdtlStatus::Ok);
    assert!(!scn.is_null());
    scn
}

fn last_error() -> String {
    let p = ldtl_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

#[test]
fn scenario_dimensions() {
    let scn = load();
    unsafe {
        assert_eq!(ldtl_scenario_num_states(scn), 40);
        assert_eq!(ldtl_scenario_num_actions(scn), 9);
        assert_eq!(ldtl_scenario_num_observations(scn), 8);
        ldtl_scenario_free(scn);
        assert_eq!(ldtl_scenario_num_states(ptr::null()), 0);
    }
}

#[test]
fn episode_round_trip_through_jsonl() {
    let scn = load();
    let mut a = ptr::null_mut();
    let mut b = ptr::null_mut();
    unsafe {
        assert_eq!(ldtl_run_episode(scn, 3, &mut a), LdtlStatus::Ok);
        assert_eq!(ldtl_run_episode(scn, 3, &mut b), LdtlStatus::Ok);
        assert!(ldtl_trace_steps(a) > 0);
        assert_eq!(ldtl_trace_violations(a), 0);
        assert!(ldtl_trace_overrides(a) > 0);
        let mut ja = ptr::null_mut();
        let mut jb = ptr::null_mut();
        assert_eq!(ldtl_trace_to_jsonl(a, &mut ja), LdtlStatus::Ok);
        assert_eq!(ldtl_trace_to_jsonl(b, &mut jb), LdtlStatus::Ok);
        let text = CStr::from_ptr(ja).to_str().unwrap();
        assert_eq!(text, CStr::from_ptr(jb).to_str().unwrap());
        assert!(text.starts_with("{\"header\""));
        ldtl_string_free(ja);
        ldtl_string_free(jb);
        ldtl_trace_free(a);
        ldtl_trace_free(b);
        ldtl_scenario_free(scn);
    }
}

#[test]
fn belief_update_matches_hand_computation() {
    let scn = load();
    // uniform prior, joint action (stay, hold, survey), reading (site, none)
    let n = 40;
    let prior = vec![1.0 / n as f64; n];
    let mut post = vec![0.0; n];
    let status = unsafe { ldtl_belief_update(scn, prior.as_ptr(), n, 0, 4, post.as_mut_ptr()) };
    assert_eq!(status, LdtlStatus::Ok);
    // stay/hold keep the state; weight = zone(f, site) * survey(d, none)
    let zone = [0.1, 0.9];
    let survey = [0.94, 0.16, 0.16, 0.16];
    let total: f64 = (0..n).map(|q| zone[(q / 4) % 2] * survey[q % 4]).sum();
    for (q, p) in post.iter().enumerate() {
        let want = zone[(q / 4) % 2] * survey[q % 4] / total;
        assert!((p - want).abs() < 1e-12, "state {q}: {p} vs {want}");
    }
    unsafe { ldtl_scenario_free(scn) };
}

#[test]
fn belief_update_rejects_bad_input() {
    let scn = load();
    let mut out = vec![0.0; 40];
    let bad = vec![0.5; 40];
    unsafe {
        assert_eq!(ldtl_belief_update(scn, bad.as_ptr(), 40, 0, 0, out.as_mut_ptr()), LdtlStatus::OutOfRange);
        let ok = vec![1.0 / 40.0; 40];
        assert_eq!(ldtl_belief_update(scn, ok.as_ptr(), 39, 0, 0, out.as_mut_ptr()), LdtlStatus::OutOfRange);
        assert_eq!(ldtl_belief_update(scn, ok.as_ptr(), 40, 9, 0, out.as_mut_ptr()), LdtlStatus::OutOfRange);
        assert!(last_error().contains('9'));
        assert_eq!(ldtl_belief_update(ptr::null(), ok.as_ptr(), 40, 0, 0, out.as_mut_ptr()), LdtlStatus::NullPointer);
        ldtl_scenario_free(scn);
    }
}

#[test]
fn invalid_scenarios_report_status_and_message() {
    let mut scn = ptr::null_mut();
    let garbage = CString::new("formula = ").unwrap();
    assert_eq!(unsafe { ldtl_scenario_from_toml(garbage.as_ptr(), &mut scn) }, LdtlStatus::Parse);
    assert!(scn.is_null());
    let text = sample_site_toml().into_string().unwrap().replacen("G !(f1 | f2)", "G !(f1 | f9)", 1);
    let text = CString::new(text).unwrap();
    assert_eq!(unsafe { ldtl_scenario_from_toml(text.as_ptr(), &mut scn) }, LdtlStatus::InvalidScenario);
    assert!(last_error().contains("f9"));
    let path = CString::new("/nonexistent/scenario.toml").unwrap();
    assert_eq!(unsafe { ldtl_scenario_load(path.as_ptr(), &mut scn) }, LdtlStatus::Io);
    assert_eq!(unsafe { ldtl_scenario_from_toml(ptr::null(), &mut scn) }, LdtlStatus::NullPointer);
}

#[test]
fn scenario_load_from_path() {
    let path = CString::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/sample_site_unshielded.toml")).unwrap();
    let mut scn = ptr::null_mut();
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(ldtl_scenario_load(path.as_ptr(), &mut scn), LdtlStatus::Ok);
        assert_eq!(ldtl_run_episode(scn, 0, &mut t), LdtlStatus::Ok);
        assert!(ldtl_trace_violations(t) > 0);
        assert_eq!(ldtl_trace_overrides(t), 0);
        ldtl_trace_free(t);
        ldtl_scenario_free(scn);
    }
}

#[test]
fn barrier_checks() {
    let mut ok = false;
    let mut bound = 0u64;
    unsafe {
        assert_eq!(ldtl_dtbf_check(1.0, 0.5, 0.5, &mut ok), LdtlStatus::Ok);
        assert!(ok);
        assert_eq!(ldtl_dtbf_check(1.0, 0.4, 0.5, &mut ok), LdtlStatus::Ok);
        assert!(!ok);
        assert_eq!(ldtl_ft_dtbf_check(-1.0, -0.98, 0.99, 0.1, &mut ok), LdtlStatus::Ok);
        assert!(ok);
        assert_eq!(ldtl_ft_time_bound(-0.4, 0.99, 0.1, &mut bound), LdtlStatus::Ok);
        // ln((eps - h0) / eps) / ln(1 / rho) = ln 5 / ln(1/0.99) = 160.13...
        assert_eq!(bound, 161);
        assert_eq!(ldtl_ft_time_bound(-0.4, 1.0, 0.1, &mut bound), LdtlStatus::InvalidParameter);
        assert!(!last_error().is_empty());
        assert_eq!(ldtl_ft_time_bound(-0.4, 0.99, 0.1, ptr::null_mut()), LdtlStatus::NullPointer);
    }
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(ldtl_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/ldtl_shield.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 18, "{exports:?}");
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct LdtlScenario LdtlScenario;"));
    assert!(header.contains("LDTL_STATUS_OK = 0"));
}
