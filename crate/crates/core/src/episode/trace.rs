use serde::{Deserialize, Serialize};

/// Default phase headers, in required order.
pub const PHASE_HEADERS: [&str; 3] = [
    "Assessing Current Understanding",
    "Evaluating Potential Actions",
    "Strategic Decision-Making",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceReport {
    pub complete: bool,
    pub missing: Vec<String>,
    pub order_violation: bool,
}

/// Checks which phase headers appear and whether they appear in order.
/// Diagnostic only.
pub fn validate_reasoning_trace(text: &str, headers: &[&str]) -> TraceReport {
    let positions: Vec<Option<usize>> = headers.iter().map(|h| text.find(h)).collect();
    let missing: Vec<String> = headers
        .iter()
        .zip(&positions)
        .filter(|(_, p)| p.is_none())
        .map(|(h, _)| h.to_string())
        .collect();
    let found: Vec<usize> = positions.iter().flatten().copied().collect();
    let order_violation = found.windows(2).any(|w| w[0] > w[1]);
    TraceReport {
        complete: missing.is_empty() && !order_violation,
        missing,
        order_violation,
    }
}
