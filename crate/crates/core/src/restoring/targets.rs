use serde::{Deserialize, Serialize};

use crate::chain::GradedBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RestoreMode {
    /// Every element of nonzero coherence order.
    AllOrders,
    /// Only the nonzero even orders; the sender carries no odd orders.
    EvenOnly,
}

impl RestoreMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            RestoreMode::AllOrders => "all_orders",
            RestoreMode::EvenOnly => "even_only",
        }
    }
}

impl std::str::FromStr for RestoreMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "all" | "all_orders" => Ok(RestoreMode::AllOrders),
            "even" | "even_only" => Ok(RestoreMode::EvenOnly),
            other => Err(format!("unknown mode '{other}' (expected all or even)")),
        }
    }
}

impl std::fmt::Display for RestoreMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Upper-triangle receiver elements `(a, b)`, `a < b`, in graded positions,
/// whose coherence order is targeted by `mode`. Their conjugate partners
/// `(b, a)` are restored with them.
pub fn restored_element_set(receiver: &GradedBasis, mode: RestoreMode) -> Vec<(usize, usize)> {
    let dim = receiver.dim();
    let mut out = Vec::new();
    for a in 0..dim {
        for b in a + 1..dim {
            let order = receiver.excitation(b) as i64 - receiver.excitation(a) as i64;
            let keep = match mode {
                RestoreMode::AllOrders => order != 0,
                RestoreMode::EvenOnly => order != 0 && order % 2 == 0,
            };
            if keep {
                out.push((a, b));
            }
        }
    }
    out
}

/// Fraction of restored receiver elements as `(numerator, denominator)`,
/// counting both triangles.
pub fn restored_fraction(receiver: &GradedBasis, targets: &[(usize, usize)]) -> (usize, usize) {
    (2 * targets.len(), receiver.dim() * receiver.dim())
}
