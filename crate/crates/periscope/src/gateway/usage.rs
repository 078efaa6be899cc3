//! Session-wide usage accounting, thread-safe via atomics, plus the
//! per-call log every defense statistic is recomputed from.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::role::PromptRole;

#[derive(Debug, Default)]
pub struct UsageAccumulator {
    input_tokens: AtomicU64,
    output_tokens: AtomicU64,
    calls: AtomicU64,
    refusals: AtomicU64,
    parse_errors: AtomicU64,
    elapsed_nanos: AtomicU64,
}

impl UsageAccumulator {
    pub fn record(&self, input: u64, output: u64, latency: Duration, outcome_label: &str) {
        self.input_tokens.fetch_add(input, Ordering::Relaxed);
        self.output_tokens.fetch_add(output, Ordering::Relaxed);
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.elapsed_nanos
            .fetch_add(latency.as_nanos() as u64, Ordering::Relaxed);
        match outcome_label {
            "refusal" => {
                self.refusals.fetch_add(1, Ordering::Relaxed);
            }
            "parse_error" => {
                self.parse_errors.fetch_add(1, Ordering::Relaxed);
            }
            _ => {}
        }
    }

    pub fn report(&self) -> UsageReport {
        let calls = self.calls.load(Ordering::Relaxed);
        let refusals = self.refusals.load(Ordering::Relaxed);
        let input = self.input_tokens.load(Ordering::Relaxed);
        let output = self.output_tokens.load(Ordering::Relaxed);
        UsageReport {
            input_tokens: input,
            output_tokens: output,
            total_tokens: input + output,
            total_time: Duration::from_nanos(self.elapsed_nanos.load(Ordering::Relaxed)),
            calls,
            refusals,
            parse_errors: self.parse_errors.load(Ordering::Relaxed),
            refusal_rate: if calls == 0 {
                0.0
            } else {
                refusals as f64 / calls as f64
            },
        }
    }
}

/// Totals over one gateway session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsageReport {
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub total_tokens: u64,
    pub total_time: Duration,
    pub calls: u64,
    pub refusals: u64,
    pub parse_errors: u64,
    /// Refusals over role invocations within this session; 0 when idle.
    pub refusal_rate: f64,
}

/// One logged request/response pair. Per-stage defense statistics are
/// recomputable from a sequence of these alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CallRecord {
    pub role: PromptRole,
    pub outcome: String,
    pub input_tokens: u64,
    pub output_tokens: u64,
    pub latency_ms: u64,
    pub guardrailed: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_sum_over_calls() {
        let acc = UsageAccumulator::default();
        acc.record(100, 50, Duration::from_millis(5), "parsed");
        acc.record(10, 5, Duration::from_millis(5), "parsed");
        let report = acc.report();
        assert_eq!(report.total_tokens, 165);
        assert_eq!(report.calls, 2);
        assert_eq!(report.refusal_rate, 0.0);
    }

    #[test]
    fn empty_session_is_all_zeros() {
        let report = UsageAccumulator::default().report();
        assert_eq!(report.total_tokens, 0);
        assert_eq!(report.calls, 0);
        assert_eq!(report.refusal_rate, 0.0);
    }

    #[test]
    fn refusal_rate_counts_refusals_per_call() {
        let acc = UsageAccumulator::default();
        acc.record(1, 1, Duration::ZERO, "refusal");
        acc.record(1, 1, Duration::ZERO, "parsed");
        acc.record(1, 1, Duration::ZERO, "parsed");
        acc.record(1, 1, Duration::ZERO, "parsed");
        assert!((acc.report().refusal_rate - 0.25).abs() < 1e-12);
    }
}
