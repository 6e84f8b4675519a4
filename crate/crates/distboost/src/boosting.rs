//! The boosting arithmetic shared by the distributed protocol and the
//! centralized reference implementation: dyadic weight tables, the halving
//! update, majority combination, and margin accounting.

use num_bigint::{BigInt, BigUint};
use num_rational::Ratio;
use num_traits::One;

use crate::error::{Error, Result};
use crate::hypothesis::{Classifier, HypothesisClass};
use crate::model::{Distribution, Rat, Sample};

/// Per-example weights at round `t`, stored as integer mantissas at scale
/// `2^{-(t-1)}`: the true weight of example `j` is
/// `mantissas[j] / 2^(round-1)`.
///
/// At round 1 every mantissa is 1. After each round, the mantissa of an
/// example equals `2^(number of rounds whose hypothesis misclassified it)`,
/// so the true weight is `2^(-number of correct rounds)`. All arithmetic is
/// exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightTable {
    round: usize,
    mantissas: Vec<BigUint>,
}

impl WeightTable {
    pub fn init(len: usize) -> Self {
        WeightTable { round: 1, mantissas: vec![BigUint::one(); len] }
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn len(&self) -> usize {
        self.mantissas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mantissas.is_empty()
    }

    pub fn mantissas(&self) -> &[BigUint] {
        &self.mantissas
    }

    /// Sum of mantissas: the total weight scaled by `2^(round-1)`. This is
    /// exactly the integer transmitted as the player's weight sum.
    pub fn scaled_total(&self) -> BigUint {
        self.mantissas.iter().sum()
    }

    /// Direct constructor for protocol test hooks that need to install a
    /// deliberately wrong table.
    #[doc(hidden)]
    pub fn from_parts(round: usize, mantissas: Vec<BigUint>) -> Self {
        WeightTable { round, mantissas }
    }

    /// Total true weight as an exact rational.
    pub fn total(&self) -> Rat {
        Ratio::new(
            BigInt::from(self.scaled_total()),
            BigInt::from(BigUint::one() << (self.round - 1)),
        )
    }
}

/// One boosting update: the weight of each correctly classified example is
/// halved exactly; misclassified examples keep their weight. The round is
/// incremented and mantissas are rescaled to stay integral.
pub fn weight_update(
    w: &WeightTable,
    s: &Sample,
    h: &Classifier,
    class: &HypothesisClass,
) -> Result<WeightTable> {
    if w.len() != s.len() {
        return Err(Error::LengthMismatch { weights: w.len(), sample: s.len() });
    }
    let mantissas = w
        .mantissas
        .iter()
        .zip(s.iter())
        .map(|(m, e)| {
            if h.evaluate(class, e.point) == e.label {
                m.clone()
            } else {
                m << 1
            }
        })
        .collect();
    Ok(WeightTable { round: w.round + 1, mantissas })
}

/// The exact distribution proportional to the current weights.
pub fn normalize(w: &WeightTable, s: &Sample) -> Result<Distribution> {
    if w.len() != s.len() {
        return Err(Error::LengthMismatch { weights: w.len(), sample: s.len() });
    }
    Distribution::new(s.clone(), w.mantissas.clone())
}

/// Majority vote over base hypotheses: pointwise sign of the vote sum with
/// `sign(0) = +1`. Errors on an empty list.
pub fn majority_combine(hs: &[usize]) -> Result<Classifier> {
    if hs.is_empty() {
        return Err(Error::EmptyHypothesisList);
    }
    Ok(Classifier::Majority(hs.to_vec()))
}

/// Per-example mistake fraction `(1/T) * sum_t 1[h_t(x) != y]`, exact.
pub fn margin_profile(s: &Sample, hs: &[usize], class: &HypothesisClass) -> Vec<Rat> {
    let t = BigInt::from(hs.len());
    s.iter()
        .map(|e| {
            let bad = hs
                .iter()
                .filter(|&&h| class.hyp_label(h, e.point) != e.label)
                .count();
            Ratio::new(BigInt::from(bad), t.clone())
        })
        .collect()
}

/// Number of boosting rounds `T = ceil(6 * log2 |S|)`, with `T = 1` for a
/// single-example sample.
pub fn rounds_for(sample_len: usize) -> usize {
    if sample_len <= 1 {
        return 1;
    }
    // ceil(6*log2 m) = ceil(log2 m^6) = bit_length(m^6 - 1).
    let m6 = BigUint::from(sample_len).pow(6);
    (m6 - BigUint::one()).bits() as usize
}

/// Centralized reference boosting: `T` rounds of ERM as the weak learner
/// with the halving update, combined by majority vote.
///
/// Fails if at some round no hypothesis has loss at most `1/2 - 1/15` under
/// the current distribution.
pub fn centralized_adaboost(
    s: &Sample,
    class: &HypothesisClass,
    t_rounds: usize,
) -> Result<Classifier> {
    if s.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut w = WeightTable::init(s.len());
    let mut hs = Vec::with_capacity(t_rounds);
    for round in 1..=t_rounds {
        let mistakes = class.mistake_weights(s.items(), w.mantissas());
        let (idx, best) = mistakes
            .iter()
            .enumerate()
            .min_by_key(|(i, c)| ((*c).clone(), *i))
            .expect("non-empty enumeration");
        // Edge check: L_{p_t}(h) <= 1/2 - 1/15 = 13/30, exactly.
        let total = w.scaled_total();
        if best * BigUint::from(30u32) > total * BigUint::from(13u32) {
            return Err(Error::WeakLearnerFailure { round });
        }
        let h = Classifier::Base(idx);
        w = weight_update(&w, s, &h, class)?;
        hs.push(idx);
    }
    majority_combine(&hs)
}
