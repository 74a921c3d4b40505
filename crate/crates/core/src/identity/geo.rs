//! SSID geolocation against a wardriving database, or a local fixture.

use std::collections::BTreeMap;
use std::path::Path;
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine;
use chrono::{DateTime, NaiveDateTime};
use serde::Deserialize;
use thiserror::Error;

pub const ENV_USER: &str = "WISP_GEO_USER";
pub const ENV_TOKEN: &str = "WISP_GEO_TOKEN";

#[derive(Debug, Clone, PartialEq)]
pub struct GeoHit {
    pub latitude: f64,
    pub longitude: f64,
    pub last_seen: NaiveDateTime,
}

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("lookup failed, retry later: {0}")]
    RetriableLookupError(String),
    #[error("fixture line {line}: {message}")]
    Fixture { line: usize, message: String },
    #[error("missing credentials: set {ENV_USER} and {ENV_TOKEN}")]
    MissingCredentials,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct LiveConfig {
    /// Search endpoint, queried as `GET <endpoint>?ssid=<ssid>`.
    pub endpoint: String,
    pub user: String,
    pub token: String,
    pub min_interval: Duration,
    pub timeout: Duration,
}

impl LiveConfig {
    pub fn from_env(endpoint: impl Into<String>) -> Result<Self, GeoError> {
        let user = std::env::var(ENV_USER).map_err(|_| GeoError::MissingCredentials)?;
        let token = std::env::var(ENV_TOKEN).map_err(|_| GeoError::MissingCredentials)?;
        Ok(LiveConfig {
            endpoint: endpoint.into(),
            user,
            token,
            min_interval: Duration::from_secs(2),
            timeout: Duration::from_secs(15),
        })
    }
}

enum Mode {
    Fixture(BTreeMap<String, Vec<GeoHit>>),
    Live {
        config: LiveConfig,
        agent: ureq::Agent,
        last_request: Option<Instant>,
    },
}

pub struct GeoClient {
    mode: Mode,
}

#[derive(Deserialize)]
struct LiveResponse {
    #[serde(default)]
    results: Vec<LiveResult>,
}

#[derive(Deserialize)]
struct LiveResult {
    trilat: f64,
    trilong: f64,
    #[serde(default)]
    lastupdt: Option<String>,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    DateTime::parse_from_rfc3339(s)
        .map(|d| d.naive_utc())
        .ok()
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok())
        .or_else(|| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S").ok())
}

fn sort_by_recency(hits: &mut [GeoHit]) {
    hits.sort_by(|a, b| {
        b.last_seen
            .cmp(&a.last_seen)
            .then(a.latitude.total_cmp(&b.latitude))
            .then(a.longitude.total_cmp(&b.longitude))
    });
}

impl GeoClient {
    /// Fixture rows are `ssid<TAB>lat<TAB>lon<TAB>last_seen_iso8601`.
    pub fn from_fixture_text(text: &str) -> Result<Self, GeoError> {
        let mut table: BTreeMap<String, Vec<GeoHit>> = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: &str| GeoError::Fixture {
                line: i + 1,
                message: message.to_string(),
            };
            let cols: Vec<&str> = line.split('\t').collect();
            let [ssid, lat, lon, seen] = cols[..] else {
                return Err(err("expected 4 tab-separated columns"));
            };
            let hit = GeoHit {
                latitude: lat.trim().parse().map_err(|_| err("bad latitude"))?,
                longitude: lon.trim().parse().map_err(|_| err("bad longitude"))?,
                last_seen: parse_timestamp(seen.trim()).ok_or_else(|| err("bad timestamp"))?,
            };
            table.entry(ssid.to_string()).or_default().push(hit);
        }
        for hits in table.values_mut() {
            sort_by_recency(hits);
        }
        Ok(GeoClient {
            mode: Mode::Fixture(table),
        })
    }

    pub fn from_fixture_file(path: &Path) -> Result<Self, GeoError> {
        Self::from_fixture_text(&std::fs::read_to_string(path)?)
    }

    pub fn live(config: LiveConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .new_agent();
        GeoClient {
            mode: Mode::Live {
                config,
                agent,
                last_request: None,
            },
        }
    }

    /// Locations where `ssid` was observed, most recent first. An unknown
    /// SSID yields an empty list.
    pub fn geolocate_ssid(&mut self, ssid: &str) -> Result<Vec<GeoHit>, GeoError> {
        match &mut self.mode {
            Mode::Fixture(table) => Ok(table.get(ssid).cloned().unwrap_or_default()),
            Mode::Live {
                config,
                agent,
                last_request,
            } => {
                if let Some(prev) = *last_request {
                    let since = prev.elapsed();
                    if since < config.min_interval {
                        thread::sleep(config.min_interval - since);
                    }
                }
                *last_request = Some(Instant::now());
                let credentials = base64::engine::general_purpose::STANDARD
                    .encode(format!("{}:{}", config.user, config.token));
                let retriable = |e: ureq::Error| GeoError::RetriableLookupError(e.to_string());
                let body = agent
                    .get(&config.endpoint)
                    .query("ssid", ssid)
                    .header("Authorization", format!("Basic {credentials}"))
                    .call()
                    .map_err(retriable)?
                    .into_body()
                    .read_to_string()
                    .map_err(retriable)?;
                let parsed: LiveResponse = serde_json::from_str(&body)
                    .map_err(|e| GeoError::RetriableLookupError(format!("bad response: {e}")))?;
                let mut hits: Vec<GeoHit> = parsed
                    .results
                    .into_iter()
                    .map(|r| GeoHit {
                        latitude: r.trilat,
                        longitude: r.trilong,
                        last_seen: r
                            .lastupdt
                            .as_deref()
                            .and_then(parse_timestamp)
                            .unwrap_or_default(),
                    })
                    .collect();
                sort_by_recency(&mut hits);
                Ok(hits)
            }
        }
    }
}
