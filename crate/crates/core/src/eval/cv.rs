//! Stratified k-fold assignment.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{indices_by_class, ClassId, LabeledDataset};
use crate::error::{Error, Result};

/// Fold index per instance. Each class is shuffled and dealt round-robin;
/// the dealing position carries over between classes so fold sizes stay
/// within one of each other overall as well as per class.
pub fn stratified_kfold(ds: &LabeledDataset, folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::config("need at least 2 folds"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![0; ds.len()];
    let mut next = 0;
    for (j, mut members) in indices_by_class(ds.labels(), ds.class_count())
        .into_iter()
        .enumerate()
    {
        if members.len() < folds {
            return Err(Error::ClassTooSmall {
                class: ds.class_name(ClassId(j)).to_string(),
                size: members.len(),
                folds,
            });
        }
        members.shuffle(&mut rng);
        for i in members {
            assignment[i] = next;
            next = (next + 1) % folds;
        }
    }
    Ok(assignment)
}

/// `(train, test)` row indices for one fold.
pub fn split(assignment: &[usize], fold: usize) -> (Vec<usize>, Vec<usize>) {
    (0..assignment.len()).partition(|&i| assignment[i] != fold)
}
