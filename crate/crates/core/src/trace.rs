//! Per-iteration run records shared by every solver front end.

/// One recorded iteration. `objective` and `consensus_residual` are NaN when
/// the running algorithm has no meaningful value for them; sinks encode NaN
/// as an empty field.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub time_s: f64,
    pub objective: f64,
    pub fp_residual: f64,
    pub consensus_residual: f64,
    /// Activated batch/agent ids this tick (stochastic and async runs only).
    pub active_set: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn new() -> Self {
        IterationTrace::default()
    }

    pub fn push(&mut self, record: TraceRecord) {
        debug_assert!(
            self.records.last().is_none_or(|r| record.iter > r.iter),
            "iteration numbers must be strictly increasing"
        );
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.records.last().map(|r| r.objective)
    }

    pub fn final_fp_residual(&self) -> Option<f64> {
        self.records.last().map(|r| r.fp_residual)
    }
}
