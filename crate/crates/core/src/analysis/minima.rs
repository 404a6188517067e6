/// Interior indices strictly below both neighbours. Flat-bottomed minima are ignored.
pub fn detect_local_minima(series: &[f64]) -> Vec<usize> {
    series
        .windows(3)
        .enumerate()
        .filter(|(_, w)| w[1] < w[0] && w[1] < w[2])
        .map(|(i, _)| i + 1)
        .collect()
}

/// Local minima per sample.
pub fn throughput(series: &[f64]) -> f64 {
    if series.is_empty() {
        return 0.0;
    }
    detect_local_minima(series).len() as f64 / series.len() as f64
}

/// Streaming form of [`detect_local_minima`] for orbits too long to store.
#[derive(Debug, Clone, Default)]
pub struct MinimaScanner {
    prev: Option<f64>,
    cur: Option<f64>,
    index: usize,
}

impl MinimaScanner {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds the next sample; returns `(index, value)` when the previous sample turns
    /// out to be a strict local minimum.
    #[inline]
    pub fn push(&mut self, v: f64) -> Option<(usize, f64)> {
        let out = match (self.prev, self.cur) {
            (Some(p), Some(c)) if c < p && c < v => Some((self.index - 1, c)),
            _ => None,
        };
        self.prev = self.cur;
        self.cur = Some(v);
        self.index += 1;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn definition_cases() {
        assert_eq!(detect_local_minima(&[1.0, 0.0, 1.0]), vec![1]);
        assert!(detect_local_minima(&[0.0, 1.0, 2.0, 3.0]).is_empty());
        assert!(detect_local_minima(&[1.0, 0.0, 0.0, 1.0]).is_empty());
        assert!(detect_local_minima(&[1.0, 0.0]).is_empty());
        assert_eq!(throughput(&[0.0, 1.0, 2.0]), 0.0);
    }

    #[test]
    fn scanner_matches_batch() {
        let s: Vec<f64> = (0..500).map(|i| ((i as f64) * 0.37).sin() + 0.3 * (i as f64 * 1.3).cos()).collect();
        let mut sc = MinimaScanner::new();
        let streamed: Vec<usize> = s.iter().filter_map(|&v| sc.push(v)).map(|(i, _)| i).collect();
        assert_eq!(streamed, detect_local_minima(&s));
    }
}
