use crate::loss::Metric;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub elapsed_s: f64,
    pub objective: f64,
    pub metric: f64,
}

/// Convergence history of one run plus the configuration it ran with.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub metric: Metric,
    pub metadata: Vec<(String, String)>,
    pub records: Vec<TraceRecord>,
}

impl RunTrace {
    pub fn new(metric: Metric, metadata: Vec<(String, String)>) -> Self {
        Self {
            metric,
            metadata,
            records: Vec::new(),
        }
    }

    pub fn push(&mut self, iter: usize, elapsed_s: f64, objective: f64, metric: f64) {
        self.records.push(TraceRecord {
            iter,
            elapsed_s,
            objective,
            metric,
        });
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}
