//! Labeled samples over a finite domain, exact losses, and the brute-force
//! oracles everything else is tested against.
//!
//! The domain is always `[0, n)`; callers map their universe into indices.
//! All losses are exact rationals; no floating point is used anywhere in the
//! protocol path.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::hypothesis::{Classifier, HypothesisClass};

/// Exact rational number used for all losses, thresholds and deviations.
pub type Rat = Ratio<BigInt>;

/// Convenience constructor for small rational constants.
pub fn rat(num: i64, den: i64) -> Rat {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

/// A ±1 label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Plus,
    Minus,
}

impl Label {
    pub fn value(self) -> i64 {
        match self {
            Label::Plus => 1,
            Label::Minus => -1,
        }
    }

    pub fn from_value(v: i64) -> Option<Self> {
        match v {
            1 => Some(Label::Plus),
            -1 => Some(Label::Minus),
            _ => None,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Label::Plus => Label::Minus,
            Label::Minus => Label::Plus,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Plus => write!(f, "+1"),
            Label::Minus => write!(f, "-1"),
        }
    }
}

/// A labeled domain point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Example {
    pub point: usize,
    pub label: Label,
}

impl Example {
    pub fn new(point: usize, label: Label) -> Self {
        Example { point, label }
    }
}

/// An ordered multiset of examples over the domain `[0, n)`.
///
/// Duplicates are permitted and order is preserved so that serialization and
/// transcripts are deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    items: Vec<Example>,
    n: usize,
}

impl Sample {
    pub fn new(n: usize, items: Vec<Example>) -> Result<Self> {
        for e in &items {
            if e.point >= n {
                return Err(Error::PointOutOfRange { point: e.point, n });
            }
        }
        Ok(Sample { items, n })
    }

    pub fn empty(n: usize) -> Self {
        Sample { items: Vec::new(), n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[Example] {
        &self.items
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Example> {
        self.items.iter()
    }

    pub fn push(&mut self, e: Example) -> Result<()> {
        if e.point >= self.n {
            return Err(Error::PointOutOfRange { point: e.point, n: self.n });
        }
        self.items.push(e);
        Ok(())
    }

    /// Multiset of (example -> multiplicity).
    pub fn counts(&self) -> BTreeMap<Example, usize> {
        let mut m = BTreeMap::new();
        for e in &self.items {
            *m.entry(*e).or_insert(0) += 1;
        }
        m
    }

    /// Multiset subtraction: removes `min(count_self, count_other)`
    /// occurrences of each example value, preserving the order of the
    /// survivors.
    pub fn multiset_subtract(&self, other: &Sample) -> Sample {
        let mut to_remove = other.counts();
        let items = self
            .items
            .iter()
            .filter(|e| {
                if let Some(c) = to_remove.get_mut(e) {
                    if *c > 0 {
                        *c -= 1;
                        return false;
                    }
                }
                true
            })
            .copied()
            .collect();
        Sample { items, n: self.n }
    }

    /// One example per line, `point,label` with label in `{+1,-1}`.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        for e in &self.items {
            s.push_str(&format!("{},{}\n", e.point, e.label));
        }
        s
    }

    pub fn from_lines(n: usize, text: &str) -> Result<Self> {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (p, l) = line.split_once(',').ok_or_else(|| Error::ParseSample {
                line: i + 1,
                reason: "expected point,label".into(),
            })?;
            let point: usize = p.trim().parse().map_err(|_| Error::ParseSample {
                line: i + 1,
                reason: format!("bad point {p:?}"),
            })?;
            let label = match l.trim() {
                "+1" | "1" => Label::Plus,
                "-1" => Label::Minus,
                other => {
                    return Err(Error::ParseSample {
                        line: i + 1,
                        reason: format!("bad label {other:?}"),
                    })
                }
            };
            items.push(Example::new(point, label));
        }
        Sample::new(n, items)
    }
}

/// A sample partitioned among `k` players over a shared domain.
///
/// The logical input sample is the concatenation of the parts in player
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistributedSample {
    parts: Vec<Sample>,
}

impl DistributedSample {
    pub fn new(parts: Vec<Sample>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Protocol("need at least one player".into()));
        }
        let n = parts[0].n();
        for p in &parts[1..] {
            if p.n() != n {
                return Err(Error::DomainMismatch { expected: n, got: p.n() });
            }
        }
        Ok(DistributedSample { parts })
    }

    pub fn k(&self) -> usize {
        self.parts.len()
    }

    pub fn n(&self) -> usize {
        self.parts[0].n()
    }

    pub fn parts(&self) -> &[Sample] {
        &self.parts
    }

    pub fn part(&self, i: usize) -> &Sample {
        &self.parts[i]
    }

    pub fn concat(&self) -> Sample {
        let mut items = Vec::new();
        for p in &self.parts {
            items.extend_from_slice(p.items());
        }
        Sample { items, n: self.n() }
    }

    pub fn total_len(&self) -> usize {
        self.parts.iter().map(|p| p.len()).sum()
    }
}

/// An exact probability distribution over the items of a sample.
///
/// Probabilities are stored as non-negative integer weights over a common
/// implicit denominator (their sum), so every derived probability is an
/// exact rational.
#[derive(Debug, Clone)]
pub struct Distribution {
    support: Sample,
    weights: Vec<BigUint>,
    total: BigUint,
}

impl Distribution {
    pub fn new(support: Sample, weights: Vec<BigUint>) -> Result<Self> {
        if weights.len() != support.len() {
            return Err(Error::LengthMismatch {
                weights: weights.len(),
                sample: support.len(),
            });
        }
        let total: BigUint = weights.iter().sum();
        if total.is_zero() {
            return Err(Error::EmptyDistribution);
        }
        Ok(Distribution { support, weights, total })
    }

    pub fn uniform(support: Sample) -> Result<Self> {
        let w = vec![BigUint::one(); support.len()];
        Distribution::new(support, w)
    }

    pub fn support(&self) -> &Sample {
        &self.support
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn total(&self) -> &BigUint {
        &self.total
    }

    /// The exact probability vector; sums to 1 by construction.
    pub fn probs(&self) -> Vec<Rat> {
        let total = BigInt::from(self.total.clone());
        self.weights
            .iter()
            .map(|w| Ratio::new(BigInt::from(w.clone()), total.clone()))
            .collect()
    }
}

/// `E_S(f)`: exact count of misclassified items, multiset semantics.
pub fn empirical_errors(s: &Sample, f: &Classifier, class: &HypothesisClass) -> usize {
    s.iter().filter(|e| f.evaluate(class, e.point) != e.label).count()
}

/// `L_S(f)`: empirical loss as an exact rational. Errors on an empty sample.
pub fn empirical_loss(s: &Sample, f: &Classifier, class: &HypothesisClass) -> Result<Rat> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(Ratio::new(
        BigInt::from(empirical_errors(s, f, class)),
        BigInt::from(s.len()),
    ))
}

/// `L_p(f)`: probability of a mistake under `p`, exact.
pub fn dist_loss(p: &Distribution, f: &Classifier, class: &HypothesisClass) -> Rat {
    let mut bad = BigUint::zero();
    for (e, w) in p.support().iter().zip(p.weights()) {
        if f.evaluate(class, e.point) != e.label {
            bad += w;
        }
    }
    Ratio::new(BigInt::from(bad), BigInt::from(p.total().clone()))
}

/// The least number of errors among *all* classifiers, not only those in
/// some class: per point, the minority label count.
pub fn best_any_classifier_errors(s: &Sample) -> usize {
    let mut plus = BTreeMap::new();
    let mut minus = BTreeMap::new();
    for e in s.iter() {
        match e.label {
            Label::Plus => *plus.entry(e.point).or_insert(0usize) += 1,
            Label::Minus => *minus.entry(e.point).or_insert(0usize) += 1,
        }
    }
    let mut total = 0;
    for (pt, c) in &plus {
        if let Some(d) = minus.get(pt) {
            total += c.min(d);
        }
    }
    total
}
