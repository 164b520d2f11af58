//! K-fold partitions of row indices.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Assignment of every row to exactly one of `K` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    fold_of: Vec<usize>,
    counts: Vec<usize>,
}

impl FoldAssignment {
    /// Builds an assignment from explicit fold ids; every fold in `0..k`
    /// must be non-empty.
    pub fn from_fold_ids(fold_of: Vec<usize>, k: usize) -> Result<Self> {
        check_k(fold_of.len(), k)?;
        let mut counts = vec![0; k];
        for &f in &fold_of {
            if f >= k {
                return Err(Error::Config(format!("fold id {f} out of range for K={k}")));
            }
            counts[f] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Config(format!("fold {empty} is empty")));
        }
        Ok(FoldAssignment { fold_of, counts })
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    pub fn n(&self) -> usize {
        self.fold_of.len()
    }

    pub fn fold_of(&self) -> &[usize] {
        &self.fold_of
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// Row indices in fold `k`, ascending.
    pub fn members(&self, k: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] == k).collect()
    }

    /// Row indices outside fold `k`, ascending.
    pub fn complement(&self, k: usize) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.fold_of[i] != k).collect()
    }
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if k < 2 {
        return Err(Error::Config(format!("K={k} folds; need at least 2")));
    }
    if k > n {
        return Err(Error::Config(format!("K={k} folds exceeds n={n} rows")));
    }
    Ok(())
}

/// Shuffled K-fold split. The first `n mod K` folds get one extra row.
pub fn make_folds(n: usize, k: usize, seed: u64) -> Result<FoldAssignment> {
    check_k(n, k)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::rng_for(seed, "folds", &[]));
    let (base, extra) = (n / k, n % k);
    let counts: Vec<usize> = (0..k).map(|f| base + usize::from(f < extra)).collect();
    let mut fold_of = vec![0; n];
    let mut pos = 0;
    for (f, &c) in counts.iter().enumerate() {
        for &row in &order[pos..pos + c] {
            fold_of[row] = f;
        }
        pos += c;
    }
    Ok(FoldAssignment { fold_of, counts })
}

/// Stratified K-fold split for class codes.
///
/// Members of each class are shuffled and dealt round-robin. The deal
/// starts at a seeded fold and continues across classes (in code order)
/// from where the previous class stopped, so per-class counts differ by at
/// most one between folds and overall fold sizes do too.
pub fn make_stratified_folds(labels: &[usize], k: usize, seed: u64) -> Result<FoldAssignment> {
    let n = labels.len();
    check_k(n, k)?;
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut next = rng::rng_for(seed, "stratified-offset", &[]).gen_range(0..k);
    let mut fold_of = vec![0; n];
    let mut counts = vec![0; k];
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng::rng_for(seed, "stratified", &[class as u64]));
        for row in members {
            fold_of[row] = next;
            counts[next] += 1;
            next = (next + 1) % k;
        }
    }
    Ok(FoldAssignment { fold_of, counts })
}

/// Leave-one-out: row `i` is fold `i`.
pub fn loocv_folds(n: usize) -> Result<FoldAssignment> {
    if n < 2 {
        return Err(Error::Config(format!(
            "leave-one-out needs n >= 2, got {n}"
        )));
    }
    Ok(FoldAssignment {
        fold_of: (0..n).collect(),
        counts: vec![1; n],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fold_count_examples() {
        assert_eq!(make_folds(6, 3, 1).unwrap().counts(), &[2, 2, 2]);
        assert_eq!(make_folds(7, 3, 1).unwrap().counts(), &[3, 2, 2]);
        assert!(make_folds(5, 6, 1).is_err());
        assert!(make_folds(5, 1, 1).is_err());
    }

    #[test]
    fn stratified_examples() {
        let f = make_stratified_folds(&[0, 0, 0, 0, 1, 1, 1, 1], 2, 9).unwrap();
        for fold in 0..2 {
            let m = f.members(fold);
            assert_eq!(m.iter().filter(|&&i| i < 4).count(), 2);
            assert_eq!(m.iter().filter(|&&i| i >= 4).count(), 2);
        }

        let labels = [0, 0, 0, 1];
        let f = make_stratified_folds(&labels, 2, 4).unwrap();
        for fold in 0..2 {
            assert!(f.members(fold).iter().any(|&i| labels[i] == 0));
        }
        assert_eq!((0..2).filter(|&k| f.members(k).contains(&3)).count(), 1);

        assert_eq!(f, make_stratified_folds(&labels, 2, 4).unwrap());
        assert!(make_stratified_folds(&labels, 5, 4).is_err());
        assert!(make_stratified_folds(&labels, 1, 4).is_err());
    }

    #[test]
    fn loocv_examples() {
        let f = loocv_folds(3).unwrap();
        assert_eq!(f.fold_of(), &[0, 1, 2]);
        assert_eq!(f.counts(), &[1, 1, 1]);
        assert_eq!(loocv_folds(2).unwrap().k(), 2);
        assert!(loocv_folds(1).is_err());
    }

    #[test]
    fn loocv_matches_make_folds_with_k_equal_n() {
        for seed in [0, 5, 77] {
            let shuffled = make_folds(9, 9, seed).unwrap();
            let mut groups: Vec<Vec<usize>> = (0..9).map(|k| shuffled.members(k)).collect();
            groups.sort();
            let expected: Vec<Vec<usize>> = (0..9).map(|i| vec![i]).collect();
            assert_eq!(groups, expected);
        }
    }

    #[test]
    fn from_fold_ids_validates() {
        assert!(FoldAssignment::from_fold_ids(vec![0, 1, 0, 1], 2).is_ok());
        assert!(FoldAssignment::from_fold_ids(vec![0, 0, 0], 2).is_err());
        assert!(FoldAssignment::from_fold_ids(vec![0, 2, 1], 2).is_err());
    }

    proptest! {
        #[test]
        fn partition_balance_and_determinism(n in 2usize..120, kf in 0.0f64..1.0, seed: u64) {
            let k = 2 + ((n - 2) as f64 * kf) as usize;
            let f = make_folds(n, k, seed).unwrap();
            prop_assert_eq!(f.counts().iter().sum::<usize>(), n);
            let (lo, hi) = (f.counts().iter().min().unwrap(), f.counts().iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
            let mut seen = vec![0; k];
            for &id in f.fold_of() { seen[id] += 1; }
            prop_assert_eq!(&seen[..], f.counts());
            prop_assert_eq!(&f, &make_folds(n, k, seed).unwrap());
            let other = make_folds(n, k, seed.wrapping_add(1)).unwrap();
            prop_assert_eq!(f.counts(), other.counts());
        }

        #[test]
        fn stratified_per_class_balance(labels in prop::collection::vec(0usize..4, 2..80), kf in 0.0f64..1.0, seed: u64) {
            let n = labels.len();
            let k = 2 + ((n - 2) as f64 * kf) as usize;
            let f = make_stratified_folds(&labels, k, seed).unwrap();
            prop_assert!(f.counts().iter().all(|&c| c > 0));
            for class in 0..4 {
                let per_fold: Vec<usize> = (0..k)
                    .map(|fold| f.members(fold).iter().filter(|&&i| labels[i] == class).count())
                    .collect();
                let (lo, hi) = (per_fold.iter().min().unwrap(), per_fold.iter().max().unwrap());
                prop_assert!(hi - lo <= 1);
            }
        }
    }
}
