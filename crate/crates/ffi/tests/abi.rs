use std::ffi::{CStr, CString};
use std::ptr;

use wisp_ffi::*;

fn last_error() -> String {
    let p = wisp_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn null_and_missing_inputs_report_codes() {
    let mut frames = ptr::null_mut();
    let st = unsafe { wisp_frames_load(ptr::null(), ptr::null(), &mut frames) };
    assert_eq!(st, WispStatus::NullArgument);
    assert!(frames.is_null());
    assert!(last_error().contains("frames_path"));

    let missing = CString::new("/nonexistent/frames.jsonl").unwrap();
    let st = unsafe { wisp_frames_load(missing.as_ptr(), ptr::null(), &mut frames) };
    assert_eq!(st, WispStatus::Io);
    assert!(last_error().contains("nonexistent"));

    let bad = CString::new("no_such_scenario").unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { wisp_simulate(bad.as_ptr(), 0, false, &mut sim) }, WispStatus::InvalidArgument);

    let st = unsafe { wisp_analyze(ptr::null(), ptr::null(), ptr::null_mut()) };
    assert_eq!(st, WispStatus::NullArgument);
    unsafe {
        wisp_frames_free(ptr::null_mut());
        wisp_analysis_free(ptr::null_mut());
        wisp_string_free(ptr::null_mut());
    }
}

#[test]
fn garbage_frames_file_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frames.jsonl");
    std::fs::write(&path, "not json\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut frames = ptr::null_mut();
    assert_eq!(unsafe { wisp_frames_load(c.as_ptr(), ptr::null(), &mut frames) }, WispStatus::Parse);
}

#[test]
fn simulate_write_reload_analyze() {
    let name = CString::new("guest_visit").unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { wisp_simulate(name.as_ptr(), 0, false, &mut sim) }, WispStatus::Ok);
    assert!(unsafe { wisp_simulation_frame_count(sim) } > 0);

    let mut direct = ptr::null_mut();
    assert_eq!(unsafe { wisp_simulation_analyze(sim, &mut direct) }, WispStatus::Ok);
    assert_eq!(unsafe { wisp_analysis_guest_count(direct) }, 2);
    assert!(unsafe { wisp_analysis_event_count(direct) } > 0);

    let dir = tempfile::tempdir().unwrap();
    let d = CString::new(dir.path().to_str().unwrap()).unwrap();
    assert_eq!(unsafe { wisp_simulation_write(sim, d.as_ptr()) }, WispStatus::Ok);

    let fp = CString::new(dir.path().join("frames.jsonl").to_str().unwrap()).unwrap();
    let bp = CString::new(dir.path().join("ble.jsonl").to_str().unwrap()).unwrap();
    let mut frames = ptr::null_mut();
    assert_eq!(unsafe { wisp_frames_load(fp.as_ptr(), bp.as_ptr(), &mut frames) }, WispStatus::Ok);
    assert_eq!(unsafe { wisp_frames_len(frames) }, unsafe { wisp_simulation_frame_count(sim) });

    let layout = CString::new(dir.path().join("layout.tsv").to_str().unwrap()).unwrap();
    let opts = WispOptions {
        window_s: 0,
        bssid: ptr::null(),
        layout_path: layout.as_ptr(),
        zones_path: ptr::null(),
        rules_path: ptr::null(),
    };
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { wisp_analyze(frames, &opts, &mut a) }, WispStatus::Ok);
    assert_eq!(unsafe { wisp_analysis_device_count(a) }, unsafe { wisp_analysis_device_count(direct) });

    let s = unsafe { wisp_analysis_summary(a) };
    assert!(!s.is_null());
    assert!(unsafe { CStr::from_ptr(s) }.to_str().unwrap().contains("[devices]"));
    unsafe { wisp_string_free(s) };

    let rep = dir.path().join("report");
    let r = CString::new(rep.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { wisp_analysis_write_report(a, r.as_ptr()) }, WispStatus::Ok);
    assert!(rep.join("summary.txt").is_file());

    unsafe {
        wisp_analysis_free(a);
        wisp_analysis_free(direct);
        wisp_frames_free(frames);
        wisp_simulation_free(sim);
    }
}

#[test]
fn bad_bssid_option() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("frames.jsonl");
    std::fs::write(&path, "").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut frames = ptr::null_mut();
    assert_eq!(unsafe { wisp_frames_load(c.as_ptr(), ptr::null(), &mut frames) }, WispStatus::Ok);
    let bssid = CString::new("zz:zz").unwrap();
    let opts = WispOptions { window_s: 10, bssid: bssid.as_ptr(), layout_path: ptr::null(), zones_path: ptr::null(), rules_path: ptr::null() };
    let mut a = ptr::null_mut();
    assert_eq!(unsafe { wisp_analyze(frames, &opts, &mut a) }, WispStatus::InvalidArgument);
    assert!(a.is_null());
    unsafe { wisp_frames_free(frames) };
}
