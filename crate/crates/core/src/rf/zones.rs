use super::fingerprint::{median, RssiFingerprint};
use super::RfError;

/// Labeled reference fingerprints in dB space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZoneModel {
    pub sniffer_ids: Vec<String>,
    pub references: Vec<(String, Vec<Option<f64>>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneMatch {
    pub label: String,
    pub distance_db: f64,
    pub compared: usize,
}

pub const MIN_REFERENCE_FINGERPRINTS: usize = 10;

/// One reference point per label: the component-wise median of that
/// label's usable fingerprints.
pub fn learn_reference_points(
    sniffer_ids: &[String],
    labeled: &[(String, Vec<RssiFingerprint>)],
) -> Result<ZoneModel, RfError> {
    let mut references = Vec::new();
    for (i, (label, fps)) in labeled.iter().enumerate() {
        if labeled[..i].iter().any(|(l, _)| l == label) {
            return Err(RfError::DuplicateLabel(label.clone()));
        }
        let usable: Vec<&RssiFingerprint> = fps.iter().filter(|f| f.usable()).collect();
        if usable.len() < MIN_REFERENCE_FINGERPRINTS {
            return Err(RfError::InsufficientData(format!(
                "label {label:?} has {} usable fingerprints, need {MIN_REFERENCE_FINGERPRINTS}",
                usable.len()
            )));
        }
        let values = (0..sniffer_ids.len())
            .map(|s| {
                let mut col: Vec<f64> = usable
                    .iter()
                    .filter_map(|f| f.values.get(s).copied().flatten())
                    .collect();
                median(&mut col)
            })
            .collect();
        references.push((label.clone(), values));
    }
    Ok(ZoneModel {
        sniffer_ids: sniffer_ids.to_vec(),
        references,
    })
}

/// Root-mean-square difference over mutually present components, with the
/// number of components compared. `None` when nothing overlaps.
pub fn fingerprint_distance(a: &[Option<f64>], b: &[Option<f64>]) -> Option<(f64, usize)> {
    let (ss, n) = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some((x.as_ref()? - y.as_ref()?).powi(2)))
        .fold((0.0, 0usize), |(s, n), d| (s + d, n + 1));
    (n > 0).then(|| ((ss / n as f64).sqrt(), n))
}

/// Nearest reference point sharing at least two sniffers with the query.
/// Ties go to the lexicographically smaller label.
pub fn match_zone(model: &ZoneModel, fingerprint: &RssiFingerprint) -> Result<ZoneMatch, RfError> {
    let mut best: Option<ZoneMatch> = None;
    for (label, reference) in &model.references {
        let Some((d, n)) = fingerprint_distance(&fingerprint.values, reference) else {
            continue;
        };
        if n < 2 {
            continue;
        }
        let better = match &best {
            None => true,
            Some(b) => d < b.distance_db || (d == b.distance_db && *label < b.label),
        };
        if better {
            best = Some(ZoneMatch {
                label: label.clone(),
                distance_db: d,
                compared: n,
            });
        }
    }
    best.ok_or(RfError::NoComparableReference)
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x}"))
}

impl ZoneModel {
    /// Header `label<TAB>sniffer...`, then one row per reference; absent
    /// values are `NA`. Values use shortest round-trip formatting.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("label");
        for id in &self.sniffer_ids {
            out.push('\t');
            out.push_str(id);
        }
        out.push('\n');
        for (label, values) in &self.references {
            out.push_str(label);
            for v in values {
                out.push('\t');
                out.push_str(&fmt_value(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, RfError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| RfError::Layout("empty zone model".into()))?;
        let mut cols = header.split('\t');
        if cols.next() != Some("label") {
            return Err(RfError::Layout("zone model header must start with 'label'".into()));
        }
        let sniffer_ids: Vec<String> = cols.map(str::to_string).collect();
        let mut references = Vec::new();
        for (i, line) in lines.enumerate() {
            let err = || RfError::Layout(format!("zone model row {}", i + 2));
            let mut cols = line.split('\t');
            let label = cols.next().ok_or_else(err)?.to_string();
            let values = cols
                .map(|c| match c {
                    "NA" => Ok(None),
                    v => v.parse::<f64>().map(Some).map_err(|_| err()),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if values.len() != sniffer_ids.len() {
                return Err(err());
            }
            if references.iter().any(|(l, _)| l == &label) {
                return Err(RfError::DuplicateLabel(label));
            }
            references.push((label, values));
        }
        Ok(ZoneModel {
            sniffer_ids,
            references,
        })
    }
}
