use super::RfError;

/// Log-distance path-loss model: received power `p0_dbm` at 1 m, decaying
/// with exponent `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossParams {
    pub p0_dbm: f64,
    pub n: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        PathLossParams { p0_dbm: -40.0, n: 4.0 }
    }
}

impl PathLossParams {
    pub fn new(p0_dbm: f64, n: f64) -> Result<Self, RfError> {
        if !p0_dbm.is_finite() || !(1.5..=6.0).contains(&n) {
            return Err(RfError::InvalidParams(format!("p0={p0_dbm} n={n}")));
        }
        Ok(PathLossParams { p0_dbm, n })
    }

    /// Mean received power at `d` meters.
    pub fn rssi_at(&self, d: f64) -> f64 {
        self.p0_dbm - 10.0 * self.n * d.log10()
    }
}

pub fn rssi_to_distance(rssi_dbm: f64, params: &PathLossParams) -> f64 {
    10f64.powf((params.p0_dbm - rssi_dbm) / (10.0 * params.n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form() {
        let p = PathLossParams::new(-40.0, 4.0).unwrap();
        assert_eq!(rssi_to_distance(-40.0, &p), 1.0);
        assert!((rssi_to_distance(-80.0, &p) - 10.0).abs() < 1e-12);
        let p2 = PathLossParams::new(-40.0, 2.0).unwrap();
        assert!((rssi_to_distance(-60.0, &p2) - 10.0).abs() < 1e-12);
        assert!(PathLossParams::new(-40.0, 1.0).is_err());
    }
}
