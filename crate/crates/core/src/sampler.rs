//! Dynamic weighted sampling over a fixed set of items.
//!
//! A Fenwick tree over `f64` weights. Selection returns the smallest index
//! whose inclusive prefix sum exceeds `u * total`; the linear scan in
//! [`oracle_sample`] implements the same rule and exists for equivalence
//! checks.

use crate::error::{Error, Result};

/// Default number of updates between full rebuilds of the prefix tree.
pub const DEFAULT_REBUILD_EVERY: u64 = 1 << 20;

#[derive(Debug, Clone)]
pub struct WeightIndex {
    weights: Vec<f64>,
    // 1-based Fenwick array, tree[0] unused.
    tree: Vec<f64>,
    // Largest power of two <= n, the starting step of the descent.
    top_bit: usize,
    updates_since_rebuild: u64,
    rebuild_every: u64,
}

impl WeightIndex {
    pub fn build(weights: &[f64]) -> Result<Self> {
        Self::with_rebuild_every(weights, DEFAULT_REBUILD_EVERY)
    }

    pub fn with_rebuild_every(weights: &[f64], rebuild_every: u64) -> Result<Self> {
        check_weights(weights)?;
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(Error::EmptySupport);
        }
        if rebuild_every == 0 {
            return Err(Error::param("rebuild cadence must be >= 1"));
        }
        let n = weights.len();
        let top_bit = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        let mut ix = Self {
            weights: weights.to_vec(),
            tree: vec![0.0; n + 1],
            top_bit,
            updates_since_rebuild: 0,
            rebuild_every,
        };
        ix.rebuild();
        Ok(ix)
    }

    fn rebuild(&mut self) {
        let n = self.weights.len();
        self.tree[1..].copy_from_slice(&self.weights);
        self.tree[0] = 0.0;
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
        self.updates_since_rebuild = 0;
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Sum of weights as seen by the prefix tree.
    pub fn total(&self) -> f64 {
        self.prefix(self.weights.len())
    }

    /// Sum of the first `count` weights.
    pub fn prefix(&self, count: usize) -> f64 {
        let mut sum = 0.0;
        let mut i = count;
        while i > 0 {
            sum += self.tree[i];
            i &= i - 1;
        }
        sum
    }

    pub fn sample(&self, u: f64) -> Result<usize> {
        let total = self.total();
        if total.is_nan() || total <= 0.0 {
            return Err(Error::EmptySupport);
        }
        let target = u * total;
        let n = self.weights.len();
        let mut pos = 0;
        let mut remaining = target;
        let mut step = self.top_bit;
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= remaining {
                pos = next;
                remaining -= self.tree[next];
            }
            step >>= 1;
        }
        if pos < n {
            Ok(pos)
        } else {
            // `u * total` rounded up to the total; fall back to the last
            // item that can be selected.
            last_positive(&self.weights).ok_or(Error::EmptySupport)
        }
    }

    pub fn update(&mut self, i: usize, new_weight: f64) -> Result<()> {
        if i >= self.weights.len() {
            return Err(Error::param(format!(
                "index {i} out of range for {} weights",
                self.weights.len()
            )));
        }
        if !(new_weight.is_finite() && new_weight >= 0.0) {
            return Err(Error::param(format!(
                "weight must be finite and >= 0, got {new_weight}"
            )));
        }
        let delta = new_weight - self.weights[i];
        self.weights[i] = new_weight;
        self.updates_since_rebuild += 1;
        if self.updates_since_rebuild >= self.rebuild_every {
            self.rebuild();
            return Ok(());
        }
        let n = self.weights.len();
        let mut j = i + 1;
        while j <= n {
            self.tree[j] += delta;
            j += j & j.wrapping_neg();
        }
        Ok(())
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::param(format!("weight {i} must be finite and >= 0, got {w}")));
    }
    Ok(())
}

fn last_positive(weights: &[f64]) -> Option<usize> {
    weights.iter().rposition(|&w| w > 0.0)
}

/// Linear-scan reference for [`WeightIndex::sample`].
pub fn oracle_sample(weights: &[f64], u: f64) -> Result<usize> {
    check_weights(weights)?;
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::EmptySupport);
    }
    let target = u * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if acc > target {
            return Ok(i);
        }
    }
    last_positive(weights).ok_or(Error::EmptySupport)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn check_both(weights: &[f64], u: f64, expected: usize) {
        let ix = WeightIndex::build(weights).unwrap();
        assert_eq!(ix.sample(u).unwrap(), expected, "tree on {weights:?} u={u}");
        assert_eq!(
            oracle_sample(weights, u).unwrap(),
            expected,
            "oracle on {weights:?} u={u}"
        );
    }

    #[test]
    fn build_totals() {
        assert_eq!(WeightIndex::build(&[1.0, 1.0, 1.0, 1.0]).unwrap().total(), 4.0);
        assert_eq!(WeightIndex::build(&[0.0, 0.0, 5.0]).unwrap().total(), 5.0);
    }

    #[test]
    fn build_rejects_degenerate_input() {
        assert!(matches!(WeightIndex::build(&[0.0, 0.0]), Err(Error::EmptySupport)));
        assert!(matches!(WeightIndex::build(&[]), Err(Error::EmptySupport)));
        assert!(matches!(WeightIndex::build(&[1.0, -1.0]), Err(Error::Parameter(_))));
        assert!(matches!(WeightIndex::build(&[f64::NAN]), Err(Error::Parameter(_))));
    }

    #[test]
    fn sample_examples() {
        check_both(&[1.0, 1.0, 1.0, 1.0], 0.30, 1);
        check_both(&[0.0, 0.0, 5.0], 0.99, 2);
        // target is exactly 5: the strict rule moves past the boundary
        check_both(&[2.0, 3.0, 5.0], 0.5, 2);
        check_both(&[0.0, 7.0, 0.0, 0.0], 0.0, 1);
        check_both(&[0.0, 7.0, 0.0, 0.0], 0.999_999, 1);
    }

    #[test]
    fn update_examples() {
        let mut ix = WeightIndex::build(&[1.0, 1.0]).unwrap();
        ix.update(0, 3.0).unwrap();
        assert_eq!(ix.total(), 4.0);
        assert_eq!(ix.sample(0.9).unwrap(), 1);
        assert!(ix.update(2, 1.0).is_err());
        assert!(ix.update(0, -0.5).is_err());
    }

    #[test]
    fn sample_near_one_never_overflows() {
        let u = 1.0 - f64::EPSILON / 2.0;
        check_both(&[0.1, 0.2, 0.3, 0.0], u, 2);
    }

    #[test]
    fn total_tracks_recomputation_under_random_updates() {
        let mut rng = replicate_rng(5, 0);
        let n = 1000;
        let init: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 100.0).collect();
        let mut ix = WeightIndex::build(&init).unwrap();
        for _ in 0..100_000 {
            let i = rng.random_range(0..n);
            let w = rng.random::<f64>() * 10f64.powi(rng.random_range(-3..4));
            ix.update(i, w).unwrap();
        }
        let exact: f64 = ix.weights().iter().sum();
        assert!(((ix.total() - exact) / exact).abs() <= 1e-9);
    }

    #[test]
    fn rebuild_cadence_resets_drift() {
        let mut ix = WeightIndex::with_rebuild_every(&[1e16, 1.0, 1.0], 4).unwrap();
        ix.update(0, 0.0).unwrap();
        ix.update(0, 1e16).unwrap();
        ix.update(0, 0.0).unwrap();
        ix.update(0, 0.0).unwrap();
        assert_eq!(ix.total(), 2.0);
    }

    #[test]
    fn one_entry_holding_all_mass() {
        let mut rng = replicate_rng(9, 0);
        let w = [0.0, 0.0, 0.0, 3.5, 0.0];
        for _ in 0..1000 {
            check_both(&w, rng.random(), 3);
        }
    }

    // Weights on a 1/256 grid keep every partial sum exact, so tree and
    // scan must agree bit for bit.
    fn dyadic_weights() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![Just(0u32), 0u32..100_000], 1..200)
            .prop_filter("needs positive mass", |v| v.iter().any(|&x| x > 0))
            .prop_map(|v| v.into_iter().map(|x| f64::from(x) / 256.0).collect())
    }

    proptest! {
        #[test]
        fn tree_matches_scan_exactly(weights in dyadic_weights(), u in 0.0f64..1.0) {
            let ix = WeightIndex::build(&weights).unwrap();
            prop_assert_eq!(ix.sample(u).unwrap(), oracle_sample(&weights, u).unwrap());
        }

        #[test]
        fn tree_matches_scan_after_updates(
            weights in dyadic_weights(),
            ups in prop::collection::vec((any::<prop::sample::Index>(), 0u32..100_000), 0..50),
            u in 0.0f64..1.0,
        ) {
            let mut ix = WeightIndex::build(&weights).unwrap();
            let mut shadow = weights.clone();
            for (i, w) in ups {
                let i = i.index(shadow.len());
                let w = f64::from(w) / 256.0;
                ix.update(i, w).unwrap();
                shadow[i] = w;
            }
            prop_assume!(shadow.iter().any(|&w| w > 0.0));
            prop_assert_eq!(ix.sample(u).unwrap(), oracle_sample(&shadow, u).unwrap());
        }

        #[test]
        fn selected_item_has_positive_weight(weights in prop::collection::vec(0.0f64..1e6, 1..100), u in 0.0f64..1.0) {
            prop_assume!(weights.iter().any(|&w| w > 0.0));
            let ix = WeightIndex::build(&weights).unwrap();
            let i = ix.sample(u).unwrap();
            prop_assert!(weights[i] > 0.0);
        }
    }
}
