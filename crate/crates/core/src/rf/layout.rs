use super::RfError;

#[derive(Debug, Clone, PartialEq)]
pub struct Sniffer {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SnifferLayout {
    pub sniffers: Vec<Sniffer>,
}

impl SnifferLayout {
    pub fn new(sniffers: Vec<Sniffer>) -> Result<Self, RfError> {
        for (i, s) in sniffers.iter().enumerate() {
            if sniffers[..i].iter().any(|o| o.id == s.id) {
                return Err(RfError::Layout(format!("duplicate sniffer id {:?}", s.id)));
            }
            if !s.x.is_finite() || !s.y.is_finite() {
                return Err(RfError::Layout(format!("sniffer {:?} has a non-finite position", s.id)));
            }
        }
        Ok(SnifferLayout { sniffers })
    }

    pub fn len(&self) -> usize {
        self.sniffers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sniffers.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.sniffers.iter().position(|s| s.id == id)
    }

    pub fn position(&self, i: usize) -> (f64, f64) {
        (self.sniffers[i].x, self.sniffers[i].y)
    }

    pub fn centroid(&self) -> (f64, f64) {
        let n = self.sniffers.len().max(1) as f64;
        let (sx, sy) = self
            .sniffers
            .iter()
            .fold((0.0, 0.0), |(ax, ay), s| (ax + s.x, ay + s.y));
        (sx / n, sy / n)
    }

    /// Largest triangle spanned by the given sniffers.
    pub fn max_triangle_area(&self, indices: &[usize]) -> f64 {
        let mut best = 0.0f64;
        for (a, &i) in indices.iter().enumerate() {
            for (b, &j) in indices.iter().enumerate().skip(a + 1) {
                for &k in &indices[b + 1..] {
                    let (p, q, r) = (self.position(i), self.position(j), self.position(k));
                    let area = ((q.0 - p.0) * (r.1 - p.1) - (r.0 - p.0) * (q.1 - p.1)).abs() / 2.0;
                    best = best.max(area);
                }
            }
        }
        best
    }

    /// Parses `sniffer_id<TAB>x_m<TAB>y_m` rows; `#` starts a comment.
    pub fn from_tsv(text: &str) -> Result<Self, RfError> {
        let mut sniffers = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = || RfError::Layout(format!("line {}: expected id, x, y", i + 1));
            let cols: Vec<&str> = line.split('\t').collect();
            let [id, x, y] = cols[..] else {
                return Err(err());
            };
            sniffers.push(Sniffer {
                id: id.trim().to_string(),
                x: x.trim().parse().map_err(|_| err())?,
                y: y.trim().parse().map_err(|_| err())?,
            });
        }
        Self::new(sniffers)
    }

    pub fn to_tsv(&self) -> String {
        self.sniffers
            .iter()
            .map(|s| format!("{}\t{}\t{}\n", s.id, s.x, s.y))
            .collect()
    }
}
