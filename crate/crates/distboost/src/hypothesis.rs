//! Enumerable hypothesis classes over a finite domain, classifiers built
//! from them, and the exact ERM oracle.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::model::{Example, Label, Sample};

/// The supported class kinds.
///
/// Singletons and thresholds are VC-dimension-1 classes; an explicit finite
/// table enables small brute-force cross-checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Singletons,
    Thresholds,
    ExplicitFinite,
}

/// An enumerable concept class over `[0, n)`.
///
/// Enumeration order is canonical and deterministic:
/// * `Singletons`: `h_i(x) = +1` iff `x = i`, for `i = 0..n`.
/// * `Thresholds`: `h_j(x) = +1` iff `x < j`, for `j = 0..=n` (`n+1`
///   hypotheses; `h_0` is all-minus, `h_n` all-plus).
/// * `ExplicitFinite`: the given rows in order; rows must be distinct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisClass {
    kind: ClassKind,
    n: usize,
    table: Vec<Vec<Label>>,
}

impl HypothesisClass {
    pub fn singletons(n: usize) -> Self {
        HypothesisClass { kind: ClassKind::Singletons, n, table: Vec::new() }
    }

    pub fn thresholds(n: usize) -> Self {
        HypothesisClass { kind: ClassKind::Thresholds, n, table: Vec::new() }
    }

    pub fn explicit(n: usize, table: Vec<Vec<Label>>) -> Result<Self> {
        for row in &table {
            if row.len() != n {
                return Err(Error::DomainMismatch { expected: n, got: row.len() });
            }
        }
        for (i, row) in table.iter().enumerate() {
            if table[..i].contains(row) {
                return Err(Error::DuplicateBehavior);
            }
        }
        Ok(HypothesisClass { kind: ClassKind::ExplicitFinite, n, table })
    }

    pub fn kind(&self) -> ClassKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of hypotheses in the canonical enumeration.
    pub fn size(&self) -> usize {
        match self.kind {
            ClassKind::Singletons => self.n,
            ClassKind::Thresholds => self.n + 1,
            ClassKind::ExplicitFinite => self.table.len(),
        }
    }

    /// Label assigned by hypothesis `idx` to point `x`.
    pub fn hyp_label(&self, idx: usize, x: usize) -> Label {
        debug_assert!(idx < self.size() && x < self.n);
        match self.kind {
            ClassKind::Singletons => {
                if x == idx {
                    Label::Plus
                } else {
                    Label::Minus
                }
            }
            ClassKind::Thresholds => {
                if x < idx {
                    Label::Plus
                } else {
                    Label::Minus
                }
            }
            ClassKind::ExplicitFinite => self.table[idx][x],
        }
    }

    /// Canonical enumeration as ±1 behavior vectors over the domain.
    pub fn enumerate(&self) -> Vec<Vec<Label>> {
        (0..self.size())
            .map(|idx| (0..self.n).map(|x| self.hyp_label(idx, x)).collect())
            .collect()
    }

    /// VC dimension: 1 for singletons and thresholds, computed by
    /// brute-force shattering search for explicit tables.
    pub fn vc_dimension(&self) -> usize {
        match self.kind {
            ClassKind::Singletons | ClassKind::Thresholds => 1,
            ClassKind::ExplicitFinite => self.explicit_vc(),
        }
    }

    fn explicit_vc(&self) -> usize {
        // The VC dimension is bounded by log2 of the number of behaviors.
        let mut max_d = 0;
        while (1usize << (max_d + 1)) <= self.table.len() {
            max_d += 1;
        }
        let mut best = 0;
        for d in (1..=max_d.min(self.n)).rev() {
            if self.some_subset_shattered(&mut Vec::new(), 0, d) {
                best = d;
                break;
            }
        }
        best
    }

    fn some_subset_shattered(&self, chosen: &mut Vec<usize>, from: usize, d: usize) -> bool {
        if chosen.len() == d {
            return self.is_shattered(chosen);
        }
        for x in from..self.n {
            chosen.push(x);
            if self.some_subset_shattered(chosen, x + 1, d) {
                chosen.pop();
                return true;
            }
            chosen.pop();
        }
        false
    }

    fn is_shattered(&self, pts: &[usize]) -> bool {
        let mut seen = std::collections::BTreeSet::new();
        for row in 0..self.size() {
            let mut pat = 0usize;
            for (i, &x) in pts.iter().enumerate() {
                if self.hyp_label(row, x) == Label::Plus {
                    pat |= 1 << i;
                }
            }
            seen.insert(pat);
        }
        seen.len() == 1 << pts.len()
    }

    /// Weighted mistake totals for every hypothesis in the enumeration:
    /// entry `h` is the sum of `weights[j]` over items misclassified by `h`.
    ///
    /// Closed forms are used for singletons and thresholds so the cost is
    /// `O(|items| + n)` rather than `O(|items| * |H|)`.
    pub fn mistake_weights(&self, items: &[Example], weights: &[BigUint]) -> Vec<BigUint> {
        assert_eq!(items.len(), weights.len());
        match self.kind {
            ClassKind::Singletons => {
                // mistakes(h_i) = (total +1 weight) - w(i,+1) + w(i,-1)
                let mut plus_total = BigUint::zero();
                let mut plus_at: BTreeMap<usize, BigUint> = BTreeMap::new();
                let mut minus_at: BTreeMap<usize, BigUint> = BTreeMap::new();
                for (e, w) in items.iter().zip(weights) {
                    match e.label {
                        Label::Plus => {
                            plus_total += w;
                            *plus_at.entry(e.point).or_default() += w;
                        }
                        Label::Minus => {
                            *minus_at.entry(e.point).or_default() += w;
                        }
                    }
                }
                (0..self.n)
                    .map(|i| {
                        let mut m = plus_total.clone();
                        if let Some(p) = plus_at.get(&i) {
                            m -= p;
                        }
                        if let Some(q) = minus_at.get(&i) {
                            m += q;
                        }
                        m
                    })
                    .collect()
            }
            ClassKind::Thresholds => {
                // mistakes(h_0) = total +1 weight;
                // mistakes(h_{j+1}) = mistakes(h_j) + w(j,-1) - w(j,+1).
                let mut plus_total = BigUint::zero();
                let mut plus_at: BTreeMap<usize, BigUint> = BTreeMap::new();
                let mut minus_at: BTreeMap<usize, BigUint> = BTreeMap::new();
                for (e, w) in items.iter().zip(weights) {
                    match e.label {
                        Label::Plus => {
                            plus_total += w;
                            *plus_at.entry(e.point).or_default() += w;
                        }
                        Label::Minus => {
                            *minus_at.entry(e.point).or_default() += w;
                        }
                    }
                }
                let mut out = Vec::with_capacity(self.n + 1);
                // Signed running value kept as (gain, loss) to stay unsigned.
                let mut cur = plus_total;
                out.push(cur.clone());
                for j in 0..self.n {
                    if let Some(q) = minus_at.get(&j) {
                        cur += q;
                    }
                    if let Some(p) = plus_at.get(&j) {
                        cur -= p;
                    }
                    out.push(cur.clone());
                }
                out
            }
            ClassKind::ExplicitFinite => (0..self.size())
                .map(|idx| {
                    let mut m = BigUint::zero();
                    for (e, w) in items.iter().zip(weights) {
                        if self.hyp_label(idx, e.point) != e.label {
                            m += w;
                        }
                    }
                    m
                })
                .collect(),
        }
    }

    /// Unweighted mistake counts per hypothesis.
    pub fn mistake_counts(&self, s: &Sample) -> Vec<usize> {
        let ones = vec![BigUint::one(); s.len()];
        self.mistake_weights(s.items(), &ones)
            .into_iter()
            .map(|c| c.try_into().expect("mistake count fits usize"))
            .collect()
    }
}

/// `OPT`: the exact minimum of `E_S(h)` over the canonical enumeration,
/// with ties broken by smallest index. Returns `(count, argmin index)`.
pub fn opt(s: &Sample, class: &HypothesisClass) -> (usize, usize) {
    let counts = class.mistake_counts(s);
    let (idx, best) = counts
        .iter()
        .enumerate()
        .min_by_key(|(i, c)| (*c, *i))
        .expect("non-empty enumeration");
    (*best, idx)
}

/// A sample is realizable iff some hypothesis in the class is consistent.
pub fn is_realizable(s: &Sample, class: &HypothesisClass) -> bool {
    opt(s, class).0 == 0
}

/// A classifier: a base hypothesis from the class enumeration, a majority
/// vote over base hypotheses, or a patch table over a removed multiset with
/// a fallback.
///
/// A majority vote evaluates to the sign of the vote sum with
/// `sign(0) = +1`. A patched classifier consults the patch first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Classifier {
    Base(usize),
    Majority(Vec<usize>),
    Patched {
        patch: BTreeMap<usize, Label>,
        fallback: Box<Classifier>,
    },
}

impl Classifier {
    pub fn evaluate(&self, class: &HypothesisClass, x: usize) -> Label {
        match self {
            Classifier::Base(idx) => class.hyp_label(*idx, x),
            Classifier::Majority(hs) => {
                let sum: i64 = hs.iter().map(|h| class.hyp_label(*h, x).value()).sum();
                if sum >= 0 {
                    Label::Plus
                } else {
                    Label::Minus
                }
            }
            Classifier::Patched { patch, fallback } => match patch.get(&x) {
                Some(l) => *l,
                None => fallback.evaluate(class, x),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{empirical_errors, Label::*};

    fn ex(p: usize, l: i64) -> Example {
        Example::new(p, Label::from_value(l).unwrap())
    }

    #[test]
    fn enumerate_singletons_n2() {
        let c = HypothesisClass::singletons(2);
        assert_eq!(c.enumerate(), vec![vec![Plus, Minus], vec![Minus, Plus]]);
    }

    #[test]
    fn enumerate_thresholds_n1() {
        let c = HypothesisClass::thresholds(1);
        assert_eq!(c.enumerate(), vec![vec![Minus], vec![Plus]]);
    }

    #[test]
    fn enumerate_explicit_in_order() {
        let rows = vec![vec![Plus, Plus], vec![Minus, Plus], vec![Plus, Minus]];
        let c = HypothesisClass::explicit(2, rows.clone()).unwrap();
        assert_eq!(c.enumerate(), rows);
    }

    #[test]
    fn explicit_rejects_duplicates() {
        let rows = vec![vec![Plus, Plus], vec![Plus, Plus]];
        assert!(matches!(
            HypothesisClass::explicit(2, rows),
            Err(Error::DuplicateBehavior)
        ));
    }

    #[test]
    fn vc_dimensions() {
        assert_eq!(HypothesisClass::singletons(7).vc_dimension(), 1);
        assert_eq!(HypothesisClass::thresholds(7).vc_dimension(), 1);

        // Full cube over 3 points shatters all 3.
        let mut rows = Vec::new();
        for mask in 0..8u32 {
            rows.push(
                (0..3)
                    .map(|i| if mask >> i & 1 == 1 { Plus } else { Minus })
                    .collect(),
            );
        }
        let c = HypothesisClass::explicit(3, rows).unwrap();
        assert_eq!(c.vc_dimension(), 3);

        let c = HypothesisClass::explicit(3, vec![vec![Plus, Plus, Plus]]).unwrap();
        assert_eq!(c.vc_dimension(), 0);
    }

    #[test]
    fn opt_realizable_singleton() {
        let class = HypothesisClass::singletons(3);
        let s = Sample::new(3, vec![ex(2, 1), ex(0, -1), ex(1, -1)]).unwrap();
        assert_eq!(opt(&s, &class), (0, 2));
        assert!(is_realizable(&s, &class));
    }

    #[test]
    fn opt_tie_break_smallest_index() {
        let class = HypothesisClass::singletons(2);
        let s = Sample::new(2, vec![ex(0, 1), ex(0, -1), ex(1, -1)]).unwrap();
        // h_0 errs once ((0,-1)); h_1 errs twice ((0,+1) and (1,-1)... h_1:
        // -1 at 0 so errs on (0,+1); +1 at 1 so errs on (1,-1) -> 2.
        assert_eq!(opt(&s, &class), (1, 0));
    }

    #[test]
    fn realizability_edges() {
        let class = HypothesisClass::singletons(2);
        assert!(is_realizable(&Sample::empty(2), &class));
        let s = Sample::new(2, vec![ex(1, 1), ex(1, -1)]).unwrap();
        assert!(!is_realizable(&s, &class));
    }

    #[test]
    fn mistake_weights_match_bruteforce() {
        // Cross-check closed forms against direct evaluation.
        let s = Sample::new(
            5,
            vec![ex(0, 1), ex(0, -1), ex(2, 1), ex(4, -1), ex(2, 1), ex(3, -1)],
        )
        .unwrap();
        let weights: Vec<BigUint> =
            [3u32, 1, 4, 1, 5, 9].iter().map(|&w| BigUint::from(w)).collect();
        for class in [HypothesisClass::singletons(5), HypothesisClass::thresholds(5)] {
            let fast = class.mistake_weights(s.items(), &weights);
            let slow: Vec<BigUint> = (0..class.size())
                .map(|idx| {
                    let mut m = BigUint::zero();
                    for (e, w) in s.items().iter().zip(&weights) {
                        if class.hyp_label(idx, e.point) != e.label {
                            m += w;
                        }
                    }
                    m
                })
                .collect();
            assert_eq!(fast, slow);
        }
    }

    #[test]
    fn majority_tie_is_plus() {
        let class = HypothesisClass::thresholds(2);
        // h_0 all-minus, h_2 all-plus: zero vote sum everywhere.
        let f = Classifier::Majority(vec![0, 2]);
        assert_eq!(f.evaluate(&class, 0), Plus);
        assert_eq!(f.evaluate(&class, 1), Plus);
    }

    #[test]
    fn patched_consults_patch_first() {
        let class = HypothesisClass::singletons(3);
        let mut patch = BTreeMap::new();
        patch.insert(1usize, Minus);
        let f = Classifier::Patched { patch, fallback: Box::new(Classifier::Base(1)) };
        assert_eq!(f.evaluate(&class, 1), Minus);
        assert_eq!(f.evaluate(&class, 0), Minus);
        let s = Sample::new(3, vec![ex(1, 1)]).unwrap();
        assert_eq!(empirical_errors(&s, &f, &class), 1);
    }

    #[test]
    fn opt_at_least_best_any() {
        let class = HypothesisClass::singletons(3);
        let s = Sample::new(3, vec![ex(0, 1), ex(0, -1), ex(1, 1), ex(2, 1)]).unwrap();
        let (c, _) = opt(&s, &class);
        assert!(c >= crate::model::best_any_classifier_errors(&s));
    }
}
