use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The measurement agrees with the statement.
    Confirmed,
    /// The statement, read literally, disagrees with the measurement.
    RefutedAsPrinted,
    /// Reported without a pass/fail reading.
    Informational,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Confirmed => "confirmed",
            Verdict::RefutedAsPrinted => "refuted-as-printed",
            Verdict::Informational => "informational",
        }
    }

    /// `Confirmed` when `ok`, otherwise `RefutedAsPrinted`.
    pub fn from_check(ok: bool) -> Self {
        if ok {
            Verdict::Confirmed
        } else {
            Verdict::RefutedAsPrinted
        }
    }
}

/// One audited statement: what was claimed, where it comes from, what was
/// measured and what the statement asserts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub claim: String,
    pub paper_anchor: String,
    pub measured: Value,
    pub asserted: Value,
    pub verdict: Verdict,
}
