//! Per-evaluation run log.

use alloc::vec::Vec;

use crate::Point;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based, contiguous.
    pub eval_index: usize,
    pub point: Point,
    pub value: f64,
    pub incumbent_after: f64,
    pub subregion_id: usize,
    /// Subregion probabilities computed right after this evaluation, when
    /// instrumentation is on.
    pub probabilities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunTrace {
    pub records: Vec<TraceRecord>,
    /// Times a surrogate sampler fell back to uniform sampling.
    pub fallback_count: usize,
    /// Set when a run stopped before its budget (e.g. a rejection cap).
    pub truncated: bool,
}

impl RunTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends an evaluation, computing its index and running incumbent.
    pub fn push(&mut self, point: Point, value: f64, subregion_id: usize) {
        let incumbent_after = match self.records.last() {
            Some(r) => r.incumbent_after.min(value),
            None => value,
        };
        self.records.push(TraceRecord {
            eval_index: self.records.len() + 1,
            point,
            value,
            incumbent_after,
            subregion_id,
            probabilities: None,
        });
    }

    pub fn final_incumbent(&self) -> Option<f64> {
        self.records.last().map(|r| r.incumbent_after)
    }

    pub fn first_value(&self) -> Option<f64> {
        self.records.first().map(|r| r.value)
    }

    /// Running best values, one per record.
    pub fn incumbents(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.incumbent_after).collect()
    }

    /// Best value within the first `k` evaluations (held at the last value
    /// when the trace is shorter).
    pub fn incumbent_at(&self, k: usize) -> Option<f64> {
        if self.records.is_empty() || k == 0 {
            return None;
        }
        let i = k.min(self.records.len()) - 1;
        Some(self.records[i].incumbent_after)
    }

    /// Checks that indices are contiguous from 1 and incumbents never rise.
    pub fn is_well_formed(&self) -> bool {
        self.records
            .iter()
            .enumerate()
            .all(|(i, r)| r.eval_index == i + 1)
            && self
                .records
                .windows(2)
                .all(|w| w[1].incumbent_after <= w[0].incumbent_after)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn incumbent_tracks_running_min() {
        let mut t = RunTrace::new();
        for v in [3.0, 5.0, 1.0, 2.0] {
            t.push(vec![v], v, 0);
        }
        assert_eq!(t.incumbents(), vec![3.0, 3.0, 1.0, 1.0]);
        assert!(t.is_well_formed());
        assert_eq!(t.incumbent_at(2), Some(3.0));
        assert_eq!(t.incumbent_at(99), Some(1.0));
        assert_eq!(t.incumbent_at(0), None);
    }
}
