use std::cmp::Ordering;

use super::Candidate;

/// `a` dominates `b` when it is no worse in both MAE and complexity and
/// strictly better in at least one.
pub fn dominates(a: (f64, u32), b: (f64, u32)) -> bool {
    (a.1 <= b.1 && a.0 < b.0) || (a.1 < b.1 && a.0 <= b.0)
}

/// Non-dominated candidates under joint minimisation of MAE and complexity,
/// sorted by complexity ascending with MAE strictly decreasing.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParetoFront {
    entries: Vec<Candidate>,
}

impl ParetoFront {
    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lowest-MAE member (the last entry).
    pub fn most_accurate(&self) -> Option<&Candidate> {
        self.entries.last()
    }

    /// Front of the union of this front and `more`.
    pub fn merged<'a>(&'a self, more: impl IntoIterator<Item = &'a Candidate>) -> ParetoFront {
        pareto_front(self.entries.iter().chain(more))
    }
}

/// Preference among candidates with equal `(mae, complexity)`: earlier
/// generation, then lexicographically smaller token sequence.
fn tie_order(a: &Candidate, b: &Candidate) -> Ordering {
    a.generation
        .cmp(&b.generation)
        .then_with(|| a.sequence.tokens().cmp(b.sequence.tokens()))
}

/// Exactly the non-dominated set. Among candidates sharing the same
/// `(mae, complexity)` one representative is kept, chosen by earlier
/// generation and then token order.
pub fn pareto_front<'a>(candidates: impl IntoIterator<Item = &'a Candidate>) -> ParetoFront {
    let mut sorted: Vec<&Candidate> = candidates.into_iter().filter(|c| c.mae.is_finite()).collect();
    sorted.sort_by(|a, b| {
        a.complexity
            .cmp(&b.complexity)
            .then(a.mae.total_cmp(&b.mae))
            .then_with(|| tie_order(a, b))
    });
    // Sweep by complexity: a candidate survives when its MAE is strictly
    // below every MAE seen at lower complexity, and it is the first (best)
    // of its complexity group.
    let mut entries: Vec<Candidate> = Vec::new();
    let mut best_mae = f64::INFINITY;
    let mut last_cx: Option<u32> = None;
    for c in sorted {
        if last_cx == Some(c.complexity) {
            continue;
        }
        last_cx = Some(c.complexity);
        if c.mae < best_mae {
            best_mae = c.mae;
            entries.push(c.clone());
        }
    }
    ParetoFront { entries }
}
