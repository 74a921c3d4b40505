//! Command-line front end. `run` maps every outcome to an exit code:
//! 0 success, 1 bad input or arguments, 2 internal failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::{BufReader, Write as _};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::ble::{read_ble_records, BleAdvRecord};
use crate::har::{compile_rules, DEFAULT_RULES};
use crate::identity::{parse_oui_db, GeoClient, LiveConfig, SAMPLE_OUI};
use crate::mac::MacAddress;
use crate::pipeline::{analyze, Analysis, PipelineConfig};
use crate::report::{self, write_atomic};
use crate::rf::{PathLossParams, SnifferLayout, ZoneModel};
use crate::sim::{self, score_against_truth, GroundTruth, Predictions};
use crate::time::{iso, parse_iso};
use crate::wire::{decode_pcap, read_records, write_records, FrameRecord};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Output { .. } => 1,
            CliError::Internal(_) => 2,
        }
    }
}

fn input_err(what: impl std::fmt::Display) -> CliError {
    CliError::Input(what.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "wisp", version, about = "Passive smart-home inference from 802.11 captures and BLE advertisements")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run a scenario and write captures plus ground truth.
    Simulate(SimulateArgs),
    /// Decode pcap files into frame records.
    Ingest(IngestArgs),
    /// Device inventory and probed networks.
    Identify(AnalysisCmd),
    /// Per-window traffic counts and off/idle/active states.
    States(AnalysisCmd),
    /// Positions, directions and zones per window.
    Localize(AnalysisCmd),
    /// Presence intervals, weekly routines and sleep/wake times.
    Schedule(AnalysisCmd),
    /// Activity events from the rule set, plus guests.
    Har(AnalysisCmd),
    /// Compare the analysis with simulator ground truth.
    Score(ScoreArgs),
    /// Full report bundle.
    Report(ReportArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    /// One JSON object per row.
    Lines,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Bundled scenario name or TOML path.
    #[arg(long, default_value = "flat")]
    pub scenario: String,
    /// Override the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write one pcap per sniffer.
    #[arg(long)]
    pub pcap: bool,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Pcap files, or directories searched for `*.pcap`.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Frame-record file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// `lines` writes frame records other commands read back; `csv` is
    /// for spreadsheets.
    #[arg(long, value_enum, default_value_t = Format::Lines)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct AnalysisArgs {
    /// Directory holding `frames.jsonl` (and optionally BLE, layout, zone
    /// and truth files), or a frame-record file.
    #[arg(long)]
    pub input: PathBuf,
    /// BLE record file; `ble.jsonl` next to the frames by default.
    #[arg(long)]
    pub ble: Option<PathBuf>,
    /// Network to analyze; the busiest access point by default.
    #[arg(long)]
    pub bssid: Option<MacAddress>,
    /// Window length in seconds.
    #[arg(long, default_value_t = 10)]
    pub window: u32,
    /// Sniffer layout, `id<TAB>x<TAB>y` per line.
    #[arg(long)]
    pub layout: Option<PathBuf>,
    #[arg(long, default_value_t = 4.0)]
    pub pathloss_n: f64,
    #[arg(long, default_value_t = -40.0, allow_hyphen_values = true)]
    pub pathloss_p0: f64,
    /// Zone reference model.
    #[arg(long)]
    pub zones: Option<PathBuf>,
    /// Zones reported with a low-confidence marker; repeatable.
    #[arg(long = "low-confidence-zone")]
    pub low_confidence_zones: Vec<String>,
    /// Activity rule file; the bundled rules by default.
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Scenario whose layout and excluded rooms apply.
    #[arg(long)]
    pub scenario: Option<String>,
    /// OUI registry in IEEE text format; a bundled excerpt by default.
    #[arg(long)]
    pub oui: Option<PathBuf>,
    /// Guest observation start, `YYYY-MM-DDTHH:MM:SS`.
    #[arg(long)]
    pub observe_from: Option<String>,
    /// Join BLE names to WiFi macs by hex suffix.
    #[arg(long)]
    pub fuzzy_ble: bool,
}

#[derive(Args, Debug)]
pub struct AnalysisCmd {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Output file, or directory for `identify` and `schedule`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
    /// SSID location fixture (`identify` only).
    #[arg(long)]
    pub geo_fixture: Option<PathBuf>,
    /// Live SSID search endpoint (`identify` only); credentials from the
    /// environment.
    #[arg(long)]
    pub geo_endpoint: Option<String>,
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Directory with the ground-truth files; the input directory by
    /// default.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Include metrics against the ground truth in this directory.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<std::fs::File>, CliError> {
    std::fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn write_out(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    write_atomic(path, contents).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}

/// CSV text, or the same rows as JSON objects keyed by column.
fn render_table(csv_text: &str, format: Format) -> Result<String, CliError> {
    if format == Format::Csv {
        return Ok(csv_text.to_string());
    }
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    let header = r.headers().map_err(|e| CliError::Internal(e.to_string()))?.clone();
    let mut out = String::new();
    for row in r.records() {
        let row = row.map_err(|e| CliError::Internal(e.to_string()))?;
        let obj: BTreeMap<&str, &str> = header.iter().zip(row.iter()).collect();
        let line = serde_json::to_string(&obj).map_err(|e| CliError::Internal(e.to_string()))?;
        let _ = writeln!(out, "{line}");
    }
    Ok(out)
}

/// Everything an analysis needs, resolved from the arguments.
struct Inputs {
    frames: Vec<FrameRecord>,
    ble: Vec<BleAdvRecord>,
    config: PipelineConfig,
    truth: Option<GroundTruth>,
}

fn load_inputs(args: &AnalysisArgs, truth_dir: Option<&Path>) -> Result<Inputs, CliError> {
    let (dir, frames_path) = if args.input.is_dir() {
        (args.input.clone(), args.input.join(sim::FRAMES_FILE))
    } else {
        let parent = args.input.parent().map(Path::to_path_buf).unwrap_or_default();
        (parent, args.input.clone())
    };
    let frames = read_records(open(&frames_path)?).map_err(|e| input_err(format!("{}: {e}", frames_path.display())))?;
    let ble_path = args.ble.clone().or_else(|| Some(dir.join(sim::BLE_FILE)).filter(|p| p.is_file()));
    let ble = match ble_path {
        Some(p) => read_ble_records(open(&p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?,
        None => Vec::new(),
    };
    let scenario = args.scenario.as_deref().map(sim::load_scenario).transpose().map_err(input_err)?;

    let layout_path = args.layout.clone().or_else(|| Some(dir.join(sim::LAYOUT_FILE)).filter(|p| p.is_file()));
    let layout = match (layout_path, &scenario) {
        (Some(p), _) => Some(SnifferLayout::from_tsv(&read_text(&p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?),
        (None, Some(s)) => Some(sim::layout_of(s).map_err(input_err)?),
        (None, None) => None,
    };
    let zones_path = args.zones.clone().or_else(|| Some(dir.join(sim::ZONES_FILE)).filter(|p| p.is_file()));
    let zones = zones_path
        .map(|p| ZoneModel::from_tsv(&read_text(&p)?).map_err(|e| input_err(format!("{}: {e}", p.display()))))
        .transpose()?;
    let rules = match &args.rules {
        Some(p) => compile_rules(&read_text(p)?).map_err(|e| input_err(format!("{}: {e}", p.display())))?,
        None => compile_rules(DEFAULT_RULES).map_err(|e| CliError::Internal(e.to_string()))?,
    };
    let oui = match &args.oui {
        Some(p) => parse_oui_db(&read_text(p)?),
        None => parse_oui_db(SAMPLE_OUI),
    };
    let pathloss = PathLossParams::new(args.pathloss_p0, args.pathloss_n).map_err(input_err)?;
    let observe_from_us = args
        .observe_from
        .as_deref()
        .map(|s| parse_iso(s).ok_or_else(|| input_err(format!("bad --observe-from {s:?}"))))
        .transpose()?;
    if args.window == 0 {
        return Err(input_err("--window must be at least 1"));
    }

    let truth_dir = truth_dir.map(Path::to_path_buf).or_else(|| Some(dir.clone()).filter(|d| d.join(sim::TRUTH_META_FILE).is_file()));
    let truth = match truth_dir {
        Some(d) => Some(sim::read_truth(&d).map_err(|e| input_err(format!("{}: {e}", d.display())))?),
        None => None,
    };

    let mut low_confidence_zones: std::collections::BTreeSet<String> = args.low_confidence_zones.iter().cloned().collect();
    if let Some(s) = &scenario {
        low_confidence_zones.extend(s.rooms.iter().filter(|r| r.excluded).map(|r| r.label.clone()));
    }
    if let Some(t) = &truth {
        low_confidence_zones.extend(t.excluded_zones.iter().cloned());
    }
    // Align with the truth grid when the window sizes allow it.
    let (start_us, n_windows) = match &truth {
        Some(t) if (t.n_windows as u64 * u64::from(t.window_s)) % u64::from(args.window) == 0 => (
            Some(t.start_us),
            Some((t.n_windows as u64 * u64::from(t.window_s) / u64::from(args.window)) as usize),
        ),
        _ => (None, None),
    };
    let config = PipelineConfig {
        bssid: args.bssid,
        window_s: args.window,
        start_us,
        n_windows,
        layout,
        pathloss,
        zones,
        low_confidence_zones,
        rules,
        observe_from_us,
        oui,
        profile_options: crate::identity::ProfileOptions { fuzzy_ble_join: args.fuzzy_ble },
        ..Default::default()
    };
    Ok(Inputs { frames, ble, config, truth })
}

fn run_analysis(args: &AnalysisArgs, truth_dir: Option<&Path>) -> Result<(Analysis, Inputs), CliError> {
    let inputs = load_inputs(args, truth_dir)?;
    let a = analyze(&inputs.frames, &inputs.ble, &inputs.config).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok((a, inputs))
}

fn simulate_cmd(args: &SimulateArgs) -> Result<(), CliError> {
    let mut s = sim::load_scenario(&args.scenario).map_err(input_err)?;
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    let out = sim::simulate(&s).map_err(|e| CliError::Internal(e.to_string()))?;
    let io = |source| CliError::Output { path: args.out.clone(), source };
    std::fs::create_dir_all(&args.out).map_err(io)?;
    sim::write_output(&out, &args.out).map_err(io)?;
    if args.pcap {
        sim::write_pcaps(&out, &args.out).map_err(io)?;
    }
    eprintln!("{}: {} frames, {} BLE advertisements", s.name, out.frames.len(), out.ble.len());
    Ok(())
}

fn pcap_files(inputs: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| input_err(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "pcap"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn sniffer_id(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    stem.strip_prefix("capture_").map(str::to_string).unwrap_or(stem)
}

fn frames_csv(frames: &[FrameRecord]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let _ = w.write_record([
        "sniffer", "ts_us", "rssi_dbm", "freq_mhz", "ftype", "subtype", "direction", "sa", "da", "ta", "ra", "bssid", "body_len", "ssid",
    ]);
    for f in frames {
        let _ = w.write_record([
            f.sniffer_id.clone(),
            f.ts_us().to_string(),
            f.meta.rssi_dbm.map_or(String::new(), |v| v.to_string()),
            f.meta.channel_freq_mhz.map_or(String::new(), |v| v.to_string()),
            f.fc.ftype.as_str().to_string(),
            f.fc.subtype.to_string(),
            f.direction.as_str().to_string(),
            f.addrs.sa.to_string(),
            f.addrs.da.to_string(),
            f.addrs.ta.to_string(),
            f.addrs.ra.to_string(),
            f.addrs.bssid.map_or(String::new(), |b| b.to_string()),
            f.body_len_bytes.to_string(),
            f.ssid_lossy().unwrap_or_default(),
        ]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

fn ingest_cmd(args: &IngestArgs) -> Result<(), CliError> {
    let mut frames = Vec::new();
    for path in pcap_files(&args.input)? {
        let (records, skipped, err) = decode_pcap(&sniffer_id(&path), open(&path)?);
        match err {
            Some(e) if records.is_empty() => return Err(input_err(format!("{}: {e}", path.display()))),
            Some(e) => eprintln!("{}: {e}; kept {} frames", path.display(), records.len()),
            None => {}
        }
        if skipped > 0 {
            eprintln!("{}: skipped {skipped} undecodable packets", path.display());
        }
        frames.extend(records);
    }
    frames.sort_by(|a, b| (a.ts_us(), &a.sniffer_id).cmp(&(b.ts_us(), &b.sniffer_id)));
    let bytes = match args.format {
        Format::Lines => {
            let mut buf = Vec::new();
            write_records(&mut buf, &frames).map_err(|e| CliError::Internal(e.to_string()))?;
            buf
        }
        Format::Csv => frames_csv(&frames).into_bytes(),
    };
    write_out(&args.out, &bytes)
}

fn identify_cmd(cmd: &AnalysisCmd) -> Result<(), CliError> {
    let (a, _) = run_analysis(&cmd.analysis, None)?;
    let mut geo = match (&cmd.geo_fixture, &cmd.geo_endpoint) {
        (Some(p), _) => Some(GeoClient::from_fixture_file(p).map_err(input_err)?),
        (None, Some(url)) => Some(GeoClient::live(LiveConfig::from_env(url.clone()).map_err(input_err)?)),
        (None, None) => None,
    };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let _ = w.write_record(["mac", "ssid", "count", "first_seen", "last_seen", "latitude", "longitude", "located_at"]);
    for (mac, ssids) in &a.probes.by_source {
        for (ssid, stat) in ssids {
            let name = String::from_utf8_lossy(ssid).into_owned();
            let base = [mac.to_string(), name.clone(), stat.count.to_string(), iso(stat.first_seen), iso(stat.last_seen)];
            let hits = match geo.as_mut() {
                Some(g) => g.geolocate_ssid(&name).map_err(|e| CliError::Internal(e.to_string()))?,
                None => Vec::new(),
            };
            if hits.is_empty() {
                let _ = w.write_record(base.iter().cloned().chain([String::new(), String::new(), String::new()]));
            }
            for h in hits {
                let _ = w.write_record(base.iter().cloned().chain([
                    format!("{:.6}", h.latitude),
                    format!("{:.6}", h.longitude),
                    h.last_seen.format("%Y-%m-%dT%H:%M:%S").to_string(),
                ]));
            }
        }
    }
    let probes = String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default();
    write_out(&cmd.out.join(report::DEVICES_FILE), render_table(&report::devices_csv(&a), cmd.format)?.as_bytes())?;
    write_out(&cmd.out.join("probes.csv"), render_table(&probes, cmd.format)?.as_bytes())
}

fn schedule_csvs(a: &Analysis) -> (String, String) {
    let mut routine = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let _ = routine.write_record(["device", "group", "days", "absence_start", "absence_end", "wake"]);
    for d in a.devices.values() {
        for g in d.routine.iter().flat_map(|r| &r.groups) {
            let wake = g.wake_s.map_or(String::new(), crate::time::hhmm);
            if g.absences.is_empty() {
                let _ = routine.write_record([d.profile.mac.to_string(), g.group.as_str().into(), g.days.to_string(), String::new(), String::new(), wake.clone()]);
            }
            for &(s, e) in &g.absences {
                let _ = routine.write_record([
                    d.profile.mac.to_string(),
                    g.group.as_str().into(),
                    g.days.to_string(),
                    crate::time::hhmm(s),
                    crate::time::hhmm(e),
                    wake.clone(),
                ]);
            }
        }
    }
    let mut sleep = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let _ = sleep.write_record(["day", "wake_iso", "sleep_iso"]);
    for s in &a.sleep {
        let (wake, bed) = s.sleep_wake.map_or((String::new(), String::new()), |w| (iso(w.wake_us), iso(w.sleep_us)));
        let _ = sleep.write_record([iso(s.day_start_us)[..10].to_string(), wake, bed]);
    }
    let text = |w: csv::Writer<Vec<u8>>| String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default();
    (text(routine), text(sleep))
}

fn analysis_cmd(name: &str, cmd: &AnalysisCmd) -> Result<(), CliError> {
    let (a, _) = run_analysis(&cmd.analysis, None)?;
    write_analysis(name, cmd, &a)
}

fn write_analysis(name: &str, cmd: &AnalysisCmd, a: &Analysis) -> Result<(), CliError> {
    let table = |csv: String| render_table(&csv, cmd.format);
    match name {
        "states" => write_out(&cmd.out, table(report::states_csv(a))?.as_bytes()),
        "localize" => write_out(&cmd.out, table(report::track_csv(a))?.as_bytes()),
        "har" => write_out(&cmd.out, table(report::events_csv(a))?.as_bytes()),
        "schedule" => {
            let (routine, sleep) = schedule_csvs(a);
            write_out(&cmd.out.join(report::PRESENCE_FILE), table(report::presence_csv(a))?.as_bytes())?;
            write_out(&cmd.out.join("routine.csv"), table(routine)?.as_bytes())?;
            write_out(&cmd.out.join("sleep.csv"), table(sleep)?.as_bytes())
        }
        _ => Err(CliError::Internal(format!("no analysis command {name}"))),
    }
}

fn guests_csv(a: &Analysis) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let _ = w.write_record(["mac", "arrival_iso", "departure_iso", "resembles"]);
    for g in &a.guests {
        let _ = w.write_record([g.mac.to_string(), iso(g.arrival_us), g.departure_us.map_or(String::new(), iso), g.resembles.as_str().into()]);
    }
    String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
}

fn har_cmd(cmd: &AnalysisCmd) -> Result<(), CliError> {
    let (a, _) = run_analysis(&cmd.analysis, None)?;
    write_analysis("har", cmd, &a)?;
    let guests = cmd.out.with_extension("guests.csv");
    write_out(&guests, render_table(&guests_csv(&a), cmd.format)?.as_bytes())
}

fn score_cmd(args: &ScoreArgs) -> Result<(), CliError> {
    let truth_dir = args.truth.clone().unwrap_or_else(|| {
        if args.analysis.input.is_dir() {
            args.analysis.input.clone()
        } else {
            args.analysis.input.parent().map(Path::to_path_buf).unwrap_or_default()
        }
    });
    let (a, inputs) = run_analysis(&args.analysis, Some(&truth_dir))?;
    let truth = inputs.truth.ok_or_else(|| input_err("no ground truth"))?;
    let m = score_against_truth(&Predictions::from_analysis(&a), &truth).map_err(input_err)?;
    write_out(&args.out, m.to_text().as_bytes())
}

fn report_cmd(args: &ReportArgs) -> Result<(), CliError> {
    let (a, inputs) = run_analysis(&args.analysis, args.truth.as_deref())?;
    let metrics = match (&args.truth, &inputs.truth) {
        (Some(_), Some(t)) => Some(score_against_truth(&Predictions::from_analysis(&a), t).map_err(input_err)?),
        _ => None,
    };
    let files = report::render_bundle(&a, metrics.as_ref(), inputs.config.smoothing_windows);
    for (name, contents) in &files {
        write_out(&args.out.join(name), contents.as_bytes())?;
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Simulate(a) => simulate_cmd(a),
        Command::Ingest(a) => ingest_cmd(a),
        Command::Identify(a) => identify_cmd(a),
        Command::States(a) => analysis_cmd("states", a),
        Command::Localize(a) => analysis_cmd("localize", a),
        Command::Schedule(a) => analysis_cmd("schedule", a),
        Command::Har(a) => har_cmd(a),
        Command::Score(a) => score_cmd(a),
        Command::Report(a) => report_cmd(a),
    }
}

/// Parses `argv` and runs the chosen subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            e.exit_code()
        }
    }
}
