use serde::{Deserialize, Serialize};

use super::StaticStructure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpKind {
    Insert,
    Query,
}

/// Probes spent by one operation, split by phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCost {
    pub kind: OpKind,
    pub query_probes: u64,
    pub insert_probes: u64,
    pub rebuilt_level: Option<usize>,
}

impl OpCost {
    pub fn total(&self) -> u64 {
        self.query_probes + self.insert_probes
    }
}

/// Exact probe totals implied by the rebuild schedule for `ops` operations
/// that each insert one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub ops: u64,
    /// Sum over fired rebuilds of the preprocessing cost of the rebuilt level.
    pub rebuild_total: u64,
    /// Sum over operations of the query cost of every occupied level.
    pub query_total: u64,
}

/// Per-operation amortized predictions from the cost model; reported, not
/// asserted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Predictions {
    /// `sum_i Q(2^i) + sum_i P(2^i) / 2^i` for `i = 1..=ceil(log2 n)`.
    pub sum_form: f64,
    /// `log n * Q(n) + log n * P(n) / n`.
    pub informal_form: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub ops: u64,
    pub per_op_probes: Vec<u64>,
    pub query_phase_total: u64,
    pub insert_phase_total: u64,
    pub amortized_insert_probes: f64,
    pub amortized_query_probes: f64,
    /// Worst-case probes of an insert operation (`t_u`).
    pub worst_case_update_probes: u64,
    /// Mean probes of a query operation (`t_q`).
    pub expected_query_probes: f64,
    pub closed_form: ClosedForm,
    pub predictions: Predictions,
}

/// Replays the binary counter for `ops` single-item inserts.
pub fn closed_form<S: StaticStructure>(base: &S, ops: u64) -> ClosedForm {
    let mut rebuild_total = 0;
    let mut query_total = 0;
    for count in 0..ops {
        // Occupied levels before this operation are the set bits of `count`.
        let mut bits = count;
        while bits != 0 {
            let b = bits.trailing_zeros();
            query_total += base.query_probes(1 << b);
            bits &= bits - 1;
        }
        // The insert that takes the counter to `count + 1` rebuilds the level
        // of its lowest set bit.
        rebuild_total += base.preprocess_probes(1 << (count + 1).trailing_zeros());
    }
    ClosedForm {
        ops,
        rebuild_total,
        query_total,
    }
}

fn ceil_log2(n: u64) -> u32 {
    if n <= 1 {
        0
    } else {
        64 - (n - 1).leading_zeros()
    }
}

pub fn predictions<S: StaticStructure>(base: &S, ops: u64) -> Predictions {
    let levels = ceil_log2(ops);
    let mut sum_form = 0.0;
    for i in 1..=levels {
        let size = 1u64 << i;
        sum_form +=
            base.query_probes(size) as f64 + base.preprocess_probes(size) as f64 / size as f64;
    }
    let informal_form = if ops == 0 {
        0.0
    } else {
        let log_n = (ops as f64).log2();
        log_n * base.query_probes(ops) as f64
            + log_n * base.preprocess_probes(ops) as f64 / ops as f64
    };
    Predictions {
        sum_form,
        informal_form,
    }
}

/// Summarizes a session's cost log next to the closed-form totals.
pub fn cost_account<S: StaticStructure>(log: &[super::OpCost], base: &S) -> CostReport {
    let ops = log.len() as u64;
    let query_phase_total: u64 = log.iter().map(|c| c.query_probes).sum();
    let insert_phase_total: u64 = log.iter().map(|c| c.insert_probes).sum();
    let per_op_probes: Vec<u64> = log.iter().map(OpCost::total).collect();
    let worst_case_update_probes = log
        .iter()
        .filter(|c| c.kind == OpKind::Insert)
        .map(OpCost::total)
        .max()
        .unwrap_or(0);
    let queries: Vec<u64> = log
        .iter()
        .filter(|c| c.kind == OpKind::Query)
        .map(OpCost::total)
        .collect();
    let expected_query_probes = if queries.is_empty() {
        0.0
    } else {
        queries.iter().sum::<u64>() as f64 / queries.len() as f64
    };
    let per_op = |total: u64| {
        if ops == 0 {
            0.0
        } else {
            total as f64 / ops as f64
        }
    };
    CostReport {
        ops,
        per_op_probes,
        query_phase_total,
        insert_phase_total,
        amortized_insert_probes: per_op(insert_phase_total),
        amortized_query_probes: per_op(query_phase_total),
        worst_case_update_probes,
        expected_query_probes,
        closed_form: closed_form(base, ops),
        predictions: predictions(base, ops),
    }
}
