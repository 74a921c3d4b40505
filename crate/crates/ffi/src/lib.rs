//! C ABI over the wisp toolkit.
//!
//! Every fallible call returns a [`WispStatus`]; on failure the message is
//! available from [`wisp_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. Strings returned to the
//! caller are released with [`wisp_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufReader;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::ptr;

use wisp::ble::{read_ble_records, BleAdvRecord};
use wisp::har::{compile_rules, DEFAULT_RULES};
use wisp::identity::{parse_oui_db, SAMPLE_OUI};
use wisp::pipeline::{analyze, Analysis, PipelineConfig};
use wisp::report::{render_bundle, summary_text, write_atomic};
use wisp::rf::{SnifferLayout, ZoneModel};
use wisp::sim::{self, SimOutput};
use wisp::wire::{decode_pcap, read_records, FrameRecord};
use wisp::MacAddress;

#[repr(C)]
#[derive(Debug, Copy, Clone, PartialEq, Eq)]
pub enum WispStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    InvalidArgument = 5,
    Analysis = 6,
    Panic = 7,
}

/// Frame and BLE records loaded from disk.
pub struct WispFrames {
    frames: Vec<FrameRecord>,
    ble: Vec<BleAdvRecord>,
}

/// One simulator run.
pub struct WispSimulation {
    output: SimOutput,
    bssid: Option<MacAddress>,
}

/// A finished analysis.
pub struct WispAnalysis {
    analysis: Analysis,
    smoothing_windows: usize,
}

/// Analysis settings. Null pointers mean "not given".
#[repr(C)]
pub struct WispOptions {
    /// Window length in seconds; 0 selects the default.
    pub window_s: u32,
    pub bssid: *const c_char,
    pub layout_path: *const c_char,
    pub zones_path: *const c_char,
    pub rules_path: *const c_char,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(WispStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> WispStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => WispStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("panic inside wisp".into());
            WispStatus::Panic
        }
    }
}

unsafe fn opt_str<'a>(p: *const c_char) -> Result<Option<&'a str>, Failure> {
    if p.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Some)
        .map_err(|_| Failure(WispStatus::InvalidUtf8, "argument is not UTF-8".into()))
}

unsafe fn req_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    opt_str(p)?.ok_or_else(|| Failure(WispStatus::NullArgument, format!("{name} is null")))
}

unsafe fn req_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(WispStatus::NullArgument, format!("{name} is null")))
}

fn check_out<T>(out: *mut *mut T) -> Result<(), Failure> {
    if out.is_null() {
        Err(Failure(WispStatus::NullArgument, "output pointer is null".into()))
    } else {
        Ok(())
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure(WispStatus::Io, format!("{}: {e}", path.display())))
}

fn read_text(path: &str) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(WispStatus::Io, format!("{path}: {e}")))
}

fn parse_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure(WispStatus::Parse, format!("{}: {e}", path.display()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn wisp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn wisp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn wisp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads frame records (JSON lines) and optionally BLE records.
///
/// # Safety
/// `frames_path` must be a valid C string, `ble_path` null or a valid C
/// string, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wisp_frames_load(
    frames_path: *const c_char,
    ble_path: *const c_char,
    out: *mut *mut WispFrames,
) -> WispStatus {
    guard(|| {
        check_out(out)?;
        let fp = PathBuf::from(req_str(frames_path, "frames_path")?);
        let frames = read_records(open(&fp)?).map_err(|e| parse_err(&fp, e))?;
        let ble = match opt_str(ble_path)? {
            Some(p) => {
                let p = PathBuf::from(p);
                read_ble_records(open(&p)?).map_err(|e| parse_err(&p, e))?
            }
            None => Vec::new(),
        };
        *out = Box::into_raw(Box::new(WispFrames { frames, ble }));
        Ok(())
    })
}

/// Decodes one pcap file. Undecodable packets are skipped; a truncated file
/// keeps the frames read before the damage.
///
/// # Safety
/// `pcap_path` and `sniffer_id` must be valid C strings and `out` a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn wisp_frames_from_pcap(
    pcap_path: *const c_char,
    sniffer_id: *const c_char,
    out: *mut *mut WispFrames,
) -> WispStatus {
    guard(|| {
        check_out(out)?;
        let p = PathBuf::from(req_str(pcap_path, "pcap_path")?);
        let id = req_str(sniffer_id, "sniffer_id")?;
        let (frames, _skipped, err) = decode_pcap(id, open(&p)?);
        if let (Some(e), true) = (err, frames.is_empty()) {
            return Err(parse_err(&p, e));
        }
        *out = Box::into_raw(Box::new(WispFrames { frames, ble: Vec::new() }));
        Ok(())
    })
}

/// # Safety
/// `frames` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wisp_frames_len(frames: *const WispFrames) -> usize {
    frames.as_ref().map_or(0, |f| f.frames.len())
}

/// # Safety
/// `frames` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wisp_frames_free(frames: *mut WispFrames) {
    if !frames.is_null() {
        drop(Box::from_raw(frames));
    }
}

/// Runs a bundled scenario, or a TOML scenario file. `seed` replaces the
/// scenario seed when `override_seed` is true.
///
/// # Safety
/// `scenario` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wisp_simulate(
    scenario: *const c_char,
    seed: u64,
    override_seed: bool,
    out: *mut *mut WispSimulation,
) -> WispStatus {
    guard(|| {
        check_out(out)?;
        let name = req_str(scenario, "scenario")?;
        let mut s = sim::load_scenario(name).map_err(|e| Failure(WispStatus::InvalidArgument, e.to_string()))?;
        if override_seed {
            s.seed = seed;
        }
        let output = sim::simulate(&s).map_err(|e| Failure(WispStatus::InvalidArgument, e.to_string()))?;
        let bssid = s.access_point().map(|d| d.mac);
        *out = Box::into_raw(Box::new(WispSimulation { output, bssid }));
        Ok(())
    })
}

/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wisp_simulation_frame_count(sim: *const WispSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.output.frames.len())
}

/// Writes frames, BLE records, layout, zones and ground truth into `dir`.
///
/// # Safety
/// `sim` must be a live handle and `dir` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn wisp_simulation_write(sim: *const WispSimulation, dir: *const c_char) -> WispStatus {
    guard(|| {
        let s = req_ref(sim, "sim")?;
        let dir = req_str(dir, "dir")?;
        sim::write_output(&s.output, Path::new(dir)).map_err(|e| Failure(WispStatus::Io, format!("{dir}: {e}")))
    })
}

/// Analyzes a simulation with its own layout, zone model and time grid.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wisp_simulation_analyze(sim: *const WispSimulation, out: *mut *mut WispAnalysis) -> WispStatus {
    guard(|| {
        check_out(out)?;
        let s = req_ref(sim, "sim")?;
        let t = &s.output.truth;
        let config = PipelineConfig {
            bssid: s.bssid,
            window_s: t.window_s,
            start_us: Some(t.start_us),
            n_windows: Some(t.n_windows),
            layout: Some(s.output.layout.clone()),
            zones: s.output.zones.clone(),
            low_confidence_zones: t.excluded_zones.iter().cloned().collect(),
            rules: compile_rules(DEFAULT_RULES).map_err(|e| Failure(WispStatus::Analysis, e.to_string()))?,
            oui: parse_oui_db(SAMPLE_OUI),
            ..Default::default()
        };
        run(&s.output.frames, &s.output.ble, config, out)
    })
}

unsafe fn run(frames: &[FrameRecord], ble: &[BleAdvRecord], config: PipelineConfig, out: *mut *mut WispAnalysis) -> Result<(), Failure> {
    let analysis = analyze(frames, ble, &config).map_err(|e| Failure(WispStatus::Analysis, e.to_string()))?;
    *out = Box::into_raw(Box::new(WispAnalysis { analysis, smoothing_windows: config.smoothing_windows }));
    Ok(())
}

/// # Safety
/// `sim` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wisp_simulation_free(sim: *mut WispSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Analyzes loaded records. `options` may be null.
///
/// # Safety
/// `frames` must be a live handle, `options` null or valid with each string
/// field null or a valid C string, and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn wisp_analyze(
    frames: *const WispFrames,
    options: *const WispOptions,
    out: *mut *mut WispAnalysis,
) -> WispStatus {
    guard(|| {
        check_out(out)?;
        let f = req_ref(frames, "frames")?;
        let mut config = PipelineConfig {
            rules: compile_rules(DEFAULT_RULES).map_err(|e| Failure(WispStatus::Analysis, e.to_string()))?,
            oui: parse_oui_db(SAMPLE_OUI),
            ..Default::default()
        };
        if let Some(o) = options.as_ref() {
            if o.window_s > 0 {
                config.window_s = o.window_s;
            }
            if let Some(b) = opt_str(o.bssid)? {
                config.bssid = Some(b.parse().map_err(|_| Failure(WispStatus::InvalidArgument, format!("bad bssid {b:?}")))?);
            }
            if let Some(p) = opt_str(o.layout_path)? {
                config.layout = Some(SnifferLayout::from_tsv(&read_text(p)?).map_err(|e| parse_err(Path::new(p), e))?);
            }
            if let Some(p) = opt_str(o.zones_path)? {
                config.zones = Some(ZoneModel::from_tsv(&read_text(p)?).map_err(|e| parse_err(Path::new(p), e))?);
            }
            if let Some(p) = opt_str(o.rules_path)? {
                config.rules = compile_rules(&read_text(p)?).map_err(|e| parse_err(Path::new(p), e))?;
            }
        }
        run(&f.frames, &f.ble, config, out)
    })
}

/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wisp_analysis_device_count(a: *const WispAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.analysis.devices.len())
}

/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wisp_analysis_event_count(a: *const WispAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.analysis.events.len())
}

/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wisp_analysis_guest_count(a: *const WispAnalysis) -> usize {
    a.as_ref().map_or(0, |a| a.analysis.guests.len())
}

/// Plain-text summary; free with [`wisp_string_free`]. Null on failure.
///
/// # Safety
/// `a` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn wisp_analysis_summary(a: *const WispAnalysis) -> *mut c_char {
    match a.as_ref() {
        Some(a) => catch_unwind(AssertUnwindSafe(|| into_c_string(summary_text(&a.analysis, None)))).unwrap_or(ptr::null_mut()),
        None => ptr::null_mut(),
    }
}

/// Writes the full report bundle into `dir`.
///
/// # Safety
/// `a` must be a live handle and `dir` a valid C string.
#[no_mangle]
pub unsafe extern "C" fn wisp_analysis_write_report(a: *const WispAnalysis, dir: *const c_char) -> WispStatus {
    guard(|| {
        let a = req_ref(a, "analysis")?;
        let dir = Path::new(req_str(dir, "dir")?);
        for (name, contents) in render_bundle(&a.analysis, None, a.smoothing_windows) {
            let path = dir.join(name);
            write_atomic(&path, contents.as_bytes()).map_err(|e| Failure(WispStatus::Io, format!("{}: {e}", path.display())))?;
        }
        Ok(())
    })
}

/// # Safety
/// `a` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn wisp_analysis_free(a: *mut WispAnalysis) {
    if !a.is_null() {
        drop(Box::from_raw(a));
    }
}
