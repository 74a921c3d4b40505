use super::fingerprint::RssiFingerprint;
use super::layout::SnifferLayout;
use super::pathloss::{rssi_to_distance, PathLossParams};
use super::RfError;

const MIN_TRIANGLE_AREA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionEstimate {
    pub x: f64,
    pub y: f64,
    /// Unit vector from the layout centroid towards the estimate; `None`
    /// when the estimate sits exactly on the centroid or is unusable.
    pub direction: Option<(f64, f64)>,
    /// Root-mean-square range residual in meters.
    pub residual: f64,
    pub usable: bool,
}

impl PositionEstimate {
    fn unusable() -> Self {
        PositionEstimate {
            x: f64::NAN,
            y: f64::NAN,
            direction: None,
            residual: f64::NAN,
            usable: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrilaterationOptions {
    /// Polish the linearized solution by minimizing the range residual.
    pub refine: bool,
}

impl Default for TrilaterationOptions {
    fn default() -> Self {
        TrilaterationOptions { refine: true }
    }
}

/// Least-squares solution of the linearized range equations
/// `2(s_i - s_1)·p = d_1² - d_i² + |s_i|² - |s_1|²`.
pub fn linearized_solution(anchors: &[(f64, f64)], dists: &[f64]) -> Result<(f64, f64), RfError> {
    let (x1, y1) = anchors[0];
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&(xi, yi), &di) in anchors.iter().zip(dists).skip(1) {
        let (ax, ay) = (2.0 * (xi - x1), 2.0 * (yi - y1));
        let rhs = dists[0] * dists[0] - di * di + (xi * xi + yi * yi) - (x1 * x1 + y1 * y1);
        a11 += ax * ax;
        a12 += ax * ay;
        a22 += ay * ay;
        b1 += ax * rhs;
        b2 += ay * rhs;
    }
    let det = a11 * a22 - a12 * a12;
    let scale = (a11 + a22).powi(2);
    if det.abs() <= 1e-15 * scale || scale == 0.0 {
        return Err(RfError::DegenerateLayout);
    }
    Ok(((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det))
}

pub fn range_residual(p: (f64, f64), anchors: &[(f64, f64)], dists: &[f64]) -> f64 {
    let ss: f64 = anchors
        .iter()
        .zip(dists)
        .map(|(&(x, y), &d)| ((p.0 - x).hypot(p.1 - y) - d).powi(2))
        .sum();
    (ss / anchors.len() as f64).sqrt()
}

/// Levenberg-Marquardt on the sum of squared range errors.
fn refine(start: (f64, f64), anchors: &[(f64, f64)], dists: &[f64]) -> (f64, f64) {
    let cost = |p: (f64, f64)| range_residual(p, anchors, dists);
    let mut p = start;
    let mut c = cost(p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let (mut h11, mut h12, mut h22, mut g1, mut g2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (&(x, y), &d) in anchors.iter().zip(dists) {
            let r = (p.0 - x).hypot(p.1 - y);
            if r < 1e-12 {
                continue;
            }
            let (jx, jy) = ((p.0 - x) / r, (p.1 - y) / r);
            let e = r - d;
            h11 += jx * jx;
            h12 += jx * jy;
            h22 += jy * jy;
            g1 += jx * e;
            g2 += jy * e;
        }
        let mut improved = false;
        while lambda < 1e12 {
            let (d11, d22) = (h11 + lambda * h11.max(1e-9), h22 + lambda * h22.max(1e-9));
            let det = d11 * d22 - h12 * h12;
            if det.abs() < 1e-300 {
                lambda *= 10.0;
                continue;
            }
            let step = ((d22 * g1 - h12 * g2) / det, (d11 * g2 - h12 * g1) / det);
            let cand = (p.0 - step.0, p.1 - step.1);
            let cc = cost(cand);
            if cc < c {
                let moved = step.0.hypot(step.1);
                p = cand;
                c = cc;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if moved < 1e-12 {
                    return p;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

/// Position from the present sniffers' pseudo-distances. Fewer than three
/// readings give an unusable estimate.
pub fn trilaterate(
    fingerprint: &RssiFingerprint,
    layout: &SnifferLayout,
    params: &PathLossParams,
    options: TrilaterationOptions,
) -> Result<PositionEstimate, RfError> {
    let present: Vec<usize> = fingerprint
        .present_indices()
        .into_iter()
        .filter(|&i| i < layout.len())
        .collect();
    if present.len() < 3 {
        return Ok(PositionEstimate::unusable());
    }
    if layout.max_triangle_area(&present) <= MIN_TRIANGLE_AREA {
        return Err(RfError::DegenerateLayout);
    }
    let anchors: Vec<(f64, f64)> = present.iter().map(|&i| layout.position(i)).collect();
    let dists: Vec<f64> = present
        .iter()
        .map(|&i| rssi_to_distance(fingerprint.values[i].unwrap(), params))
        .collect();
    let linear = linearized_solution(&anchors, &dists)?;
    let p = if options.refine {
        let mut starts = vec![linear, layout.centroid()];
        starts.extend(anchors.iter().copied());
        starts
            .into_iter()
            .map(|s| refine(s, &anchors, &dists))
            .map(|q| (range_residual(q, &anchors, &dists), q))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, q)| q)
            .unwrap_or(linear)
    } else {
        linear
    };
    Ok(PositionEstimate {
        x: p.0,
        y: p.1,
        direction: direction_vector(p, layout).ok(),
        residual: range_residual(p, &anchors, &dists),
        usable: true,
    })
}

pub fn direction_vector(p: (f64, f64), layout: &SnifferLayout) -> Result<(f64, f64), RfError> {
    let (cx, cy) = layout.centroid();
    let (dx, dy) = (p.0 - cx, p.1 - cy);
    let norm = dx.hypot(dy);
    if norm == 0.0 || !norm.is_finite() {
        return Err(RfError::UndefinedDirection);
    }
    Ok((dx / norm, dy / norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::MacAddress;
    use crate::rf::layout::Sniffer;

    fn layout(points: &[(f64, f64)]) -> SnifferLayout {
        SnifferLayout::new(
            points
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| Sniffer { id: format!("s{i}"), x, y })
                .collect(),
        )
        .unwrap()
    }

    fn fp(values: &[Option<f64>]) -> RssiFingerprint {
        RssiFingerprint {
            device: MacAddress::default(),
            window_start_us: 0,
            values: values.to_vec(),
            support: vec![1; values.len()],
        }
    }

    #[test]
    fn equilateral_symmetry() {
        let h = 3f64.sqrt() / 2.0;
        let l = layout(&[(0.0, 0.0), (1.0, 0.0), (0.5, h)]);
        let params = PathLossParams::default();
        let linear = TrilaterationOptions { refine: false };
        let est = trilaterate(&fp(&[Some(-45.0); 3]), &l, &params, linear).unwrap();
        let (cx, cy) = l.centroid();
        assert!((est.x - cx).abs() < 1e-9 && (est.y - cy).abs() < 1e-9);
        assert!(est.usable);
        let ranges: Vec<f64> = l.sniffers.iter().map(|s| (est.x - s.x).hypot(est.y - s.y)).collect();
        assert!((ranges[0] - ranges[1]).abs() < 1e-9 && (ranges[1] - ranges[2]).abs() < 1e-9);
    }

    #[test]
    fn noiseless_recovery() {
        let l = layout(&[(6.0, 0.5), (8.5, 1.5), (11.0, 0.5)]);
        let params = PathLossParams::new(-38.0, 3.0).unwrap();
        let truth = (2.0, 7.0);
        let vals: Vec<Option<f64>> = l
            .sniffers
            .iter()
            .map(|s| Some(params.rssi_at((truth.0 - s.x).hypot(truth.1 - s.y))))
            .collect();
        for refine in [false, true] {
            let est = trilaterate(&fp(&vals), &l, &params, TrilaterationOptions { refine }).unwrap();
            assert!((est.x - truth.0).hypot(est.y - truth.1) < 1e-6, "{est:?}");
            assert!(est.residual < 1e-6);
        }
    }

    #[test]
    fn too_few_and_collinear() {
        let l = layout(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        let params = PathLossParams::default();
        let est = trilaterate(&fp(&[Some(-50.0), None, Some(-50.0)]), &l, &params, Default::default()).unwrap();
        assert!(!est.usable);
        assert!(matches!(
            trilaterate(&fp(&[Some(-50.0); 3]), &l, &params, Default::default()),
            Err(RfError::DegenerateLayout)
        ));
    }

    #[test]
    fn direction_axis() {
        let l = layout(&[(0.0, 0.0), (2.0, 0.0), (1.0, 3.0)]);
        let (cx, cy) = l.centroid();
        assert_eq!(direction_vector((cx + 1.0, cy), &l).unwrap(), (1.0, 0.0));
        assert!(matches!(direction_vector((cx, cy), &l), Err(RfError::UndefinedDirection)));
    }
}
