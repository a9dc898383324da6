use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Label, LabelVector};
use crate::error::{Error, Result};

/// Disjoint train/valid/test node sets, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn new(mut train: Vec<usize>, mut valid: Vec<usize>, mut test: Vec<usize>) -> Self {
        train.sort_unstable();
        valid.sort_unstable();
        test.sort_unstable();
        Split { train, valid, test }
    }

    /// Checks disjointness, coverage of `0..N` and known labels on train/valid.
    pub fn check(&self, labels: &LabelVector) -> Result<()> {
        let n = labels.len();
        let mut owner = vec![None::<&str>; n];
        for (name, set) in [("train", &self.train), ("valid", &self.valid), ("test", &self.test)] {
            for &i in set {
                if i >= n {
                    return Err(Error::InvalidSplit(format!(
                        "{name} node {i} out of range (N = {n})"
                    )));
                }
                if let Some(prev) = owner[i].replace(name) {
                    return Err(Error::InvalidSplit(format!(
                        "node {i} in both {prev} and {name}"
                    )));
                }
                if name != "test" && labels.get(i) == Label::Unknown {
                    return Err(Error::InvalidSplit(format!(
                        "{name} node {i} has an unknown label"
                    )));
                }
            }
        }
        if let Some(i) = owner.iter().position(Option::is_none) {
            return Err(Error::InvalidSplit(format!("node {i} in no set")));
        }
        Ok(())
    }
}

/// Fractions of each class sent to train, valid and test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            valid: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    fn check(&self) -> Result<()> {
        let all = [self.train, self.valid, self.test];
        if all.iter().any(|r| !r.is_finite() || *r <= 0.0) {
            return Err(Error::InvalidSplit(format!(
                "ratios must be positive, got {all:?}"
            )));
        }
        if (all.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!("ratios must sum to 1, got {all:?}")));
        }
        Ok(())
    }
}

// absorbs representation error such as 0.2 * 15 = 3.0000000000000004
fn floor_share(ratio: f64, size: usize) -> usize {
    (ratio * size as f64 + 1e-9).floor() as usize
}

/// Per-class stratified split.
///
/// Within each class the members are shuffled with a generator seeded from
/// `seed`; `floor(ratio * size)` go to valid and test and the remainder to
/// train.
pub fn stratified_split(labels: &LabelVector, ratios: SplitRatios, seed: u64) -> Result<Split> {
    ratios.check()?;
    labels.require_known()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = Split {
        train: Vec::new(),
        valid: Vec::new(),
        test: Vec::new(),
    };
    for (class, label) in [(0u8, Label::Negative), (1u8, Label::Positive)] {
        let mut members: Vec<usize> = labels
            .iter()
            .enumerate()
            .filter(|&(_, l)| l == label)
            .map(|(i, _)| i)
            .collect();
        if members.len() < 3 {
            return Err(Error::ClassTooSmall {
                class,
                size: members.len(),
            });
        }
        members.shuffle(&mut rng);
        let n_valid = floor_share(ratios.valid, members.len());
        let n_test = floor_share(ratios.test, members.len());
        split.valid.extend_from_slice(&members[..n_valid]);
        split.test.extend_from_slice(&members[n_valid..n_valid + n_test]);
        split.train.extend_from_slice(&members[n_valid + n_test..]);
    }
    Ok(Split::new(split.train, split.valid, split.test))
}
