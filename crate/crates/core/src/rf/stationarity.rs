use super::fingerprint::RssiFingerprint;
use super::RfError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mobility {
    Stationary,
    Mobile,
}

impl Mobility {
    pub fn as_str(self) -> &'static str {
        match self {
            Mobility::Stationary => "stationary",
            Mobility::Mobile => "mobile",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityConfig {
    pub tau_db: f64,
    pub min_usable: usize,
    /// Sniffers with fewer present values do not contribute a spread.
    pub min_values_per_sniffer: usize,
}

impl Default for StationarityConfig {
    fn default() -> Self {
        StationarityConfig {
            tau_db: 4.0,
            min_usable: 50,
            min_values_per_sniffer: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub mobility: Mobility,
    /// Interquartile range per sniffer, `None` where too few readings.
    pub iqr_db: Vec<Option<f64>>,
}

impl StationarityReport {
    pub fn max_iqr(&self) -> f64 {
        self.iqr_db.iter().flatten().copied().fold(0.0, f64::max)
    }
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn iqr(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25)
}

/// A device is stationary when no sniffer sees its per-window RSSI spread
/// wider than `tau_db`.
pub fn classify_stationarity(
    fingerprints: &[RssiFingerprint],
    config: &StationarityConfig,
) -> Result<StationarityReport, RfError> {
    let usable = fingerprints.iter().filter(|f| f.usable()).count();
    if usable < config.min_usable {
        return Err(RfError::InsufficientData(format!(
            "{usable} usable fingerprints, need {}",
            config.min_usable
        )));
    }
    let width = fingerprints.iter().map(|f| f.values.len()).max().unwrap_or(0);
    let iqr_db: Vec<Option<f64>> = (0..width)
        .map(|s| {
            let vals: Vec<f64> = fingerprints
                .iter()
                .filter_map(|f| f.values.get(s).copied().flatten())
                .collect();
            (vals.len() >= config.min_values_per_sniffer.max(1)).then(|| iqr(&vals))
        })
        .collect();
    let max = iqr_db.iter().flatten().copied().fold(0.0, f64::max);
    Ok(StationarityReport {
        mobility: if max <= config.tau_db {
            Mobility::Stationary
        } else {
            Mobility::Mobile
        },
        iqr_db,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::MacAddress;

    fn fp(values: [f64; 3]) -> RssiFingerprint {
        RssiFingerprint {
            device: MacAddress::default(),
            window_start_us: 0,
            values: values.iter().map(|&v| Some(v)).collect(),
            support: vec![1; 3],
        }
    }

    #[test]
    fn constant_is_stationary() {
        let fps: Vec<_> = (0..60).map(|_| fp([-60.0, -70.0, -80.0])).collect();
        let r = classify_stationarity(&fps, &StationarityConfig::default()).unwrap();
        assert_eq!(r.mobility, Mobility::Stationary);
        assert_eq!(r.max_iqr(), 0.0);
    }

    #[test]
    fn wandering_is_mobile() {
        let fps: Vec<_> = (0..60).map(|i| fp([-50.0 - i as f64, -70.0, -80.0])).collect();
        let r = classify_stationarity(&fps, &StationarityConfig::default()).unwrap();
        assert_eq!(r.mobility, Mobility::Mobile);
        assert!(classify_stationarity(&fps[..10], &StationarityConfig::default()).is_err());
    }

    #[test]
    fn quantiles() {
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0);
        assert_eq!(iqr(&[7.0]), 0.0);
    }
}
