//! Instance generators: realizable samples, samples with a planted number
//! of forced errors, and strategies for splitting a sample among players.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hypothesis::{Classifier, HypothesisClass};
use crate::model::{DistributedSample, Example, Label, Sample};

/// How a sample is distributed among `k` players.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitStrategy {
    /// Item `j` goes to player `j mod k`.
    RoundRobin,
    /// `k` contiguous blocks of (near) equal size, in input order.
    Contiguous,
    /// Sort by `(label, point)` first, then split contiguously, so each
    /// player sees a maximally homogeneous slice.
    Adversarial,
}

impl SplitStrategy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "round-robin" => Ok(SplitStrategy::RoundRobin),
            "contiguous" => Ok(SplitStrategy::Contiguous),
            "adversarial" => Ok(SplitStrategy::Adversarial),
            other => Err(Error::Protocol(format!("unknown split strategy `{other}`"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SplitStrategy::RoundRobin => "round-robin",
            SplitStrategy::Contiguous => "contiguous",
            SplitStrategy::Adversarial => "adversarial",
        }
    }
}

/// Split a sample among `k` players.
pub fn split(s: &Sample, k: usize, strategy: SplitStrategy) -> Result<DistributedSample> {
    if k == 0 {
        return Err(Error::Protocol("need at least one player".into()));
    }
    let mut items: Vec<Example> = s.items().to_vec();
    let mut parts: Vec<Vec<Example>> = vec![Vec::new(); k];
    match strategy {
        SplitStrategy::RoundRobin => {
            for (j, e) in items.iter().enumerate() {
                parts[j % k].push(*e);
            }
        }
        SplitStrategy::Contiguous => {
            chunk_into(&items, &mut parts);
        }
        SplitStrategy::Adversarial => {
            items.sort_by_key(|e| (e.label.value(), e.point));
            chunk_into(&items, &mut parts);
        }
    }
    DistributedSample::new(
        parts
            .into_iter()
            .map(|p| Sample::new(s.n(), p))
            .collect::<Result<Vec<_>>>()?,
    )
}

fn chunk_into(items: &[Example], parts: &mut [Vec<Example>]) {
    let k = parts.len();
    let m = items.len();
    let base = m / k;
    let extra = m % k;
    let mut at = 0;
    for (i, part) in parts.iter_mut().enumerate() {
        let take = base + usize::from(i < extra);
        part.extend_from_slice(&items[at..at + take]);
        at += take;
    }
}

/// A realizable sample: pick a hypothesis uniformly from the class, draw
/// `m` points uniformly (with replacement), label them by the hypothesis.
pub fn random_realizable(
    class: &HypothesisClass,
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Sample> {
    let n = class.n();
    if n == 0 {
        return Err(Error::Protocol("empty domain".into()));
    }
    let h = Classifier::Base(rng.gen_range(0..class.size()));
    let items = (0..m)
        .map(|_| {
            let x = rng.gen_range(0..n);
            Example::new(x, h.evaluate(class, x))
        })
        .collect();
    Sample::new(n, items)
}

/// A sample whose best-in-class error count is exactly `planted_opt`:
/// a realizable base plus `planted_opt` contradicting pairs at distinct
/// points outside the base's support. Each pair forces one error on every
/// classifier, in or out of the class, so `opt = best_any = planted_opt`.
pub fn planted_opt_instance(
    class: &HypothesisClass,
    base_m: usize,
    planted_opt: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Sample> {
    let n = class.n();
    if 2 * planted_opt > n {
        return Err(Error::Protocol(format!(
            "cannot plant {planted_opt} pairs at distinct points in a domain of size {n}"
        )));
    }
    let mut points: Vec<usize> = (0..n).collect();
    points.shuffle(rng);
    let pair_points = &points[..planted_opt];
    let base_points: Vec<usize> = points[planted_opt..].to_vec();
    if base_points.is_empty() && base_m > 0 {
        return Err(Error::Protocol("no room for base points".into()));
    }
    let h = Classifier::Base(rng.gen_range(0..class.size()));
    let mut items: Vec<Example> = (0..base_m)
        .map(|_| {
            let x = base_points[rng.gen_range(0..base_points.len())];
            Example::new(x, h.evaluate(class, x))
        })
        .collect();
    for &x in pair_points {
        items.push(Example::new(x, Label::Plus));
        items.push(Example::new(x, Label::Minus));
    }
    items.shuffle(rng);
    Sample::new(n, items)
}

/// A noisy sample: realizable base with exactly `flips` labels flipped at
/// distinct points. The planted count is an upper bound on the best
/// in-class error count (a flip at a point seen once may leave the sample
/// realizable), so callers certify the true value with the `opt` oracle.
pub fn random_noisy_flips(
    class: &HypothesisClass,
    m: usize,
    flips: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Sample> {
    if flips > m {
        return Err(Error::Protocol(format!("cannot flip {flips} labels in {m} examples")));
    }
    let base = random_realizable(class, m, rng)?;
    let mut items = base.items().to_vec();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(rng);
    let mut flipped_points = std::collections::BTreeSet::new();
    let mut done = 0;
    for j in idx {
        if done == flips {
            break;
        }
        if flipped_points.insert(items[j].point) {
            items[j] = Example::new(items[j].point, items[j].label.flip());
            done += 1;
        }
    }
    if done < flips {
        return Err(Error::Protocol(format!(
            "only {done} distinct points available for {flips} flips"
        )));
    }
    Sample::new(base.n(), items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypothesis::opt;
    use crate::model::best_any_classifier_errors;
    use rand::SeedableRng;

    #[test]
    fn split_round_robin_interleaves() {
        let s = Sample::from_lines(4, "0,+1\n1,-1\n2,+1\n3,-1").unwrap();
        let ds = split(&s, 2, SplitStrategy::RoundRobin).unwrap();
        assert_eq!(ds.part(0).items(), &[Example::new(0, Label::Plus), Example::new(2, Label::Plus)]);
        assert_eq!(ds.part(1).items(), &[Example::new(1, Label::Minus), Example::new(3, Label::Minus)]);
    }

    #[test]
    fn split_contiguous_preserves_order_and_sizes() {
        let s = Sample::from_lines(4, "0,+1\n1,-1\n2,+1\n3,-1\n0,+1").unwrap();
        let ds = split(&s, 3, SplitStrategy::Contiguous).unwrap();
        assert_eq!(ds.part(0).len(), 2);
        assert_eq!(ds.part(1).len(), 2);
        assert_eq!(ds.part(2).len(), 1);
        assert_eq!(ds.concat().counts(), s.counts());
    }

    #[test]
    fn split_adversarial_groups_labels() {
        let s = Sample::from_lines(4, "0,+1\n1,-1\n2,+1\n3,-1").unwrap();
        let ds = split(&s, 2, SplitStrategy::Adversarial).unwrap();
        assert!(ds.part(0).iter().all(|e| e.label == Label::Minus));
        assert!(ds.part(1).iter().all(|e| e.label == Label::Plus));
    }

    #[test]
    fn realizable_instances_have_opt_zero() {
        let class = HypothesisClass::thresholds(16);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s = random_realizable(&class, 40, &mut rng).unwrap();
            assert_eq!(opt(&s, &class).0, 0);
        }
    }

    #[test]
    fn planted_opt_is_exact() {
        let class = HypothesisClass::singletons(32);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for planted in 0..6 {
            let s = planted_opt_instance(&class, 30, planted, &mut rng).unwrap();
            assert_eq!(opt(&s, &class).0, planted);
            assert_eq!(best_any_classifier_errors(&s), planted);
        }
    }

    #[test]
    fn noisy_flips_bound_opt() {
        let class = HypothesisClass::thresholds(16);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for flips in 0..5 {
            let s = random_noisy_flips(&class, 30, flips, &mut rng).unwrap();
            assert!(opt(&s, &class).0 <= flips);
        }
    }

    #[test]
    fn planted_opt_rejects_overfull_domain() {
        let class = HypothesisClass::singletons(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(planted_opt_instance(&class, 0, 3, &mut rng).is_err());
    }
}
