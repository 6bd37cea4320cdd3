//! Binary feature masks.
//!
//! A [`BinaryMask`] is the central object of the selection algorithm: one bit
//! per feature column, 1 = active, 0 = removed. Masks carry an optional
//! history of committed snapshots so a selection run can be audited after the
//! fact; committed snapshots are monotone (a removed feature never comes
//! back), while the working `bits` may be flipped freely between commits —
//! trial removals get rolled back all the time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A 0/1 mask over feature columns, with a history of committed snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMask")]
pub struct BinaryMask {
    bits: Vec<u8>,
    history: Vec<Vec<u8>>,
}

/// Serde helper so deserialized masks go through the same validation as
/// constructed ones.
#[derive(Deserialize)]
struct RawMask {
    bits: Vec<u8>,
    #[serde(default)]
    history: Vec<Vec<u8>>,
}

impl TryFrom<RawMask> for BinaryMask {
    type Error = Error;

    fn try_from(raw: RawMask) -> Result<Self> {
        let mut mask = BinaryMask::from_bits(raw.bits)?;
        for snapshot in raw.history {
            if let Some(&bad) = snapshot.iter().find(|&&b| b > 1) {
                return Err(Error::NotBinary { found: bad as f64 });
            }
            let current = std::mem::replace(&mut mask.bits, snapshot);
            // Re-play the snapshots through record() so ordering rules hold.
            mask.record()?;
            mask.bits = current;
        }
        // The final bits must be consistent with the last snapshot.
        if let Some(last) = mask.history.last() {
            check_monotone(last, &mask.bits)?;
        }
        Ok(mask)
    }
}

impl BinaryMask {
    /// An all-ones mask of width `len`.
    ///
    /// # Panics
    /// Panics if `len == 0`; zero-width masks are a programming error, not a
    /// data condition.
    pub fn ones(len: usize) -> Self {
        assert!(len > 0, "BinaryMask::ones: zero-width mask");
        BinaryMask {
            bits: vec![1; len],
            history: Vec::new(),
        }
    }

    /// Builds a mask from raw bits, rejecting empty vectors and non-binary
    /// entries.
    pub fn from_bits(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::shape("BinaryMask: empty bit vector"));
        }
        if let Some(&bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::NotBinary { found: bad as f64 });
        }
        Ok(BinaryMask {
            bits,
            history: Vec::new(),
        })
    }

    /// Number of feature columns the mask covers.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// True if the mask covers no columns (never true for a valid mask).
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// The raw bits, one per feature column.
    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Committed snapshots, oldest first.
    pub fn history(&self) -> &[Vec<u8>] {
        &self.history
    }

    /// Bit at `index` as a bool (1 = active).
    pub fn is_active(&self, index: usize) -> bool {
        self.bits[index] == 1
    }

    /// Sets bit `index` to 1 (`active = true`) or 0.
    pub fn set(&mut self, index: usize, active: bool) {
        self.bits[index] = active as u8;
    }

    /// Number of active (1) bits.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Indices of active bits, ascending.
    pub fn active_indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b == 1)
            .map(|(i, _)| i)
            .collect()
    }

    /// Fraction of active bits, `count_ones / len`.
    pub fn sparsity(&self) -> f64 {
        self.count_ones() as f64 / self.len() as f64
    }

    /// Commits the current bits as a history snapshot.
    ///
    /// Fails with [`Error::MaskRegrew`] if any bit that was 0 in the previous
    /// snapshot is 1 now: committed masks may only remove features.
    pub fn record(&mut self) -> Result<()> {
        if let Some(last) = self.history.last() {
            check_monotone(last, &self.bits)?;
        }
        self.history.push(self.bits.clone());
        Ok(())
    }

    /// True if every active bit of `self` is also active in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.len() == other.len()
            && self
                .bits
                .iter()
                .zip(other.bits())
                .all(|(&a, &b)| a == 0 || b == 1)
    }
}

fn check_monotone(prev: &[u8], next: &[u8]) -> Result<()> {
    if prev.len() != next.len() {
        return Err(Error::shape(format!(
            "mask history width changed from {} to {}",
            prev.len(),
            next.len()
        )));
    }
    for (i, (&p, &n)) in prev.iter().zip(next).enumerate() {
        if p == 0 && n == 1 {
            return Err(Error::MaskRegrew { index: i });
        }
    }
    Ok(())
}
