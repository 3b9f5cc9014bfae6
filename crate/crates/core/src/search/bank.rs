use super::Candidate;
use crate::expr::PrefixSequence;

/// Bank of best formulas: at most `capacity` candidates with distinct token
/// sequences, kept in ascending MSE order.
#[derive(Clone, Debug, Default)]
pub struct Bank {
    capacity: usize,
    entries: Vec<Candidate>,
}

impl Bank {
    pub fn new(capacity: usize) -> Self {
        Bank {
            capacity,
            entries: Vec::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Candidate] {
        &self.entries
    }

    pub fn best(&self) -> Option<&Candidate> {
        self.entries.first()
    }

    pub fn sequences(&self) -> Vec<PrefixSequence> {
        self.entries.iter().map(|c| c.sequence.clone()).collect()
    }

    /// Inserts `cand` if it improves the bank. Returns whether the bank
    /// changed.
    ///
    /// A duplicate sequence replaces the existing entry only when its MSE is
    /// lower. Otherwise the candidate enters when the bank has room or when
    /// it beats the current worst entry, which is then evicted.
    pub fn update(&mut self, cand: Candidate) -> bool {
        if self.capacity == 0 {
            return false;
        }
        if let Some(pos) = self.entries.iter().position(|c| c.sequence == cand.sequence) {
            if cand.mse < self.entries[pos].mse {
                self.entries.remove(pos);
                self.insert_sorted(cand);
                return true;
            }
            return false;
        }
        if self.entries.len() >= self.capacity {
            let worst = self.entries.last().expect("full bank is non-empty");
            if cand.bank_cmp(worst).is_ge() {
                return false;
            }
            self.entries.pop();
        }
        self.insert_sorted(cand);
        true
    }

    fn insert_sorted(&mut self, cand: Candidate) {
        let at = self.entries.partition_point(|c| c.bank_cmp(&cand).is_lt());
        self.entries.insert(at, cand);
    }
}
