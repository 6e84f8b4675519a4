//! Construction and verification of ε-approximations of weighted samples:
//! the player-side compression step of the protocol.
//!
//! A subsample `S'` is an ε-approximation of a distribution `p` (w.r.t. a
//! class `H`) when `|L_{S'}(h) - L_p(h)| <= ε` for every `h` in the
//! enumeration of `H`. Verification quantifies over exactly the hypotheses
//! the protocol can ever select.

use num_bigint::{BigInt, BigUint, RandBigInt};
use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::boosting::WeightTable;
use crate::error::{Error, Result};
use crate::hypothesis::HypothesisClass;
use crate::model::{Distribution, Example, Rat, Sample};

/// A verified ε-approximation: a plain (uniform-weighted) subsample whose
/// induced losses track the source distribution within `eps` on every
/// hypothesis of the class.
#[derive(Debug, Clone)]
pub struct EpsApproximation {
    pub subsample: Sample,
    pub eps: Rat,
    pub verified_deviation: Rat,
}

/// Tuning knobs for the randomized construction.
#[derive(Debug, Clone)]
pub struct ApproxParams {
    /// Multiplier `c` in the size cap `s_max = ceil(c * d / eps^2)`.
    pub size_cap_factor: u32,
    /// Failed draws per size before the size is doubled.
    pub attempts_per_size: u32,
}

impl Default for ApproxParams {
    fn default() -> Self {
        ApproxParams { size_cap_factor: 1, attempts_per_size: 8 }
    }
}

/// `s_max = ceil(c * d / eps^2)` with `d` clamped to at least 1.
pub fn size_cap(class: &HypothesisClass, eps: &Rat, factor: u32) -> usize {
    let d = class.vc_dimension().max(1);
    let cap = Ratio::from(BigInt::from(d as u64 * factor as u64)) / (eps * eps);
    cap.ceil().to_integer().to_usize().unwrap_or(usize::MAX)
}

/// Exact max deviation between two weighted samples viewed as
/// distributions, over the whole class enumeration.
fn max_deviation(
    class: &HypothesisClass,
    a_items: &[Example],
    a_weights: &[BigUint],
    b_items: &[Example],
    b_weights: &[BigUint],
) -> Rat {
    let mv_a = class.mistake_weights(a_items, a_weights);
    let mv_b = class.mistake_weights(b_items, b_weights);
    let ta = BigInt::from(a_weights.iter().sum::<BigUint>());
    let tb = BigInt::from(b_weights.iter().sum::<BigUint>());
    let mut best = Rat::zero();
    for (a, b) in mv_a.iter().zip(&mv_b) {
        let dev = (Ratio::new(BigInt::from(a.clone()), ta.clone())
            - Ratio::new(BigInt::from(b.clone()), tb.clone()))
        .abs();
        if dev > best {
            best = dev;
        }
    }
    best
}

/// Early-exit check that the deviation stays within `eps`: compares
/// `|a/ta - b/tb| <= eps` by exact cross-multiplication per hypothesis.
fn within_eps(
    class: &HypothesisClass,
    a_items: &[Example],
    a_weights: &[BigUint],
    b_items: &[Example],
    b_weights: &[BigUint],
    eps: &Rat,
) -> bool {
    let mv_a = class.mistake_weights(a_items, a_weights);
    let mv_b = class.mistake_weights(b_items, b_weights);
    let ta = a_weights.iter().sum::<BigUint>();
    let tb = b_weights.iter().sum::<BigUint>();
    let eps_num = eps.numer().magnitude();
    let eps_den = eps.denom().magnitude();
    let bound = eps_num * &ta * &tb;
    for (a, b) in mv_a.iter().zip(&mv_b) {
        let lhs = a * &tb;
        let rhs = b * &ta;
        let diff = if lhs >= rhs { lhs - rhs } else { rhs - lhs };
        if diff * eps_den > bound {
            return false;
        }
    }
    true
}

/// Max over the class enumeration of `|L_sub(h) - L_p(h)|`, exact.
pub fn verify_eps_approximation(
    sub: &Sample,
    p: &Distribution,
    class: &HypothesisClass,
) -> Result<Rat> {
    if sub.is_empty() {
        return Err(Error::EmptySample);
    }
    let ones = vec![BigUint::one(); sub.len()];
    Ok(max_deviation(
        class,
        sub.items(),
        &ones,
        p.support().items(),
        p.weights(),
    ))
}

fn draw_indices(
    cumulative: &[BigUint],
    total: &BigUint,
    count: usize,
    rng: &mut impl Rng,
) -> Vec<usize> {
    (0..count)
        .map(|_| {
            let u = rng.gen_biguint_below(total);
            // First index whose cumulative sum exceeds u.
            cumulative.partition_point(|c| *c <= u)
        })
        .collect()
}

/// Randomized ε-approximation: i.i.d. draws from the weight-induced
/// distribution over a doubling size schedule, returning the first verified
/// draw. Falls back to the exact deterministic construction when the size
/// cap is exhausted.
pub fn build_eps_approximation(
    s: &Sample,
    w: &WeightTable,
    eps: &Rat,
    class: &HypothesisClass,
    rng: &mut impl Rng,
    params: &ApproxParams,
) -> Result<EpsApproximation> {
    if w.len() != s.len() {
        return Err(Error::LengthMismatch { weights: w.len(), sample: s.len() });
    }
    let total = w.scaled_total();
    if total.is_zero() || s.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let mut cumulative = Vec::with_capacity(s.len());
    let mut acc = BigUint::zero();
    for m in w.mantissas() {
        acc += m;
        cumulative.push(acc.clone());
    }

    let s_max = size_cap(class, eps, params.size_cap_factor);
    let mut size = s.len().min(class.vc_dimension().max(1)).max(1);
    while size <= s_max {
        for _ in 0..params.attempts_per_size {
            let idx = draw_indices(&cumulative, &total, size, rng);
            let items: Vec<Example> = idx.iter().map(|&j| s.items()[j]).collect();
            let ones = vec![BigUint::one(); items.len()];
            if within_eps(class, &items, &ones, s.items(), w.mantissas(), eps) {
                let sub = Sample::new(s.n(), items)?;
                let dev = verify_eps_approximation(
                    &sub,
                    &Distribution::new(s.clone(), w.mantissas().to_vec())?,
                    class,
                )?;
                return Ok(EpsApproximation {
                    subsample: sub,
                    eps: eps.clone(),
                    verified_deviation: dev,
                });
            }
        }
        size *= 2;
    }
    exact_eps_approximation(s, w, eps, class)
}

fn expand(
    n: usize,
    items: &[Example],
    mults: &[BigUint],
) -> Result<Sample> {
    let mut pairs: Vec<(Example, usize)> = items
        .iter()
        .zip(mults)
        .filter(|(_, m)| !m.is_zero())
        .map(|(e, m)| (*e, m.to_usize().expect("multiplicity fits usize")))
        .collect();
    // Canonical order: the construction is then invariant under any
    // permutation of the input sample.
    pairs.sort();
    let mut out = Vec::new();
    for (e, m) in pairs {
        for _ in 0..m {
            out.push(e);
        }
    }
    Sample::new(n, out)
}

fn gcd_reduce(mults: &mut [BigUint]) {
    let mut g = BigUint::zero();
    for m in mults.iter() {
        g = g.gcd(m);
    }
    if g > BigUint::one() {
        for m in mults.iter_mut() {
            *m /= &g;
        }
    }
}

/// Deterministic ε-approximation: multiplicities proportional to the true
/// weights rounded on a grid of `ceil(2/eps)` copies per unit mass, reduced
/// by their gcd and verified; the grid is doubled until verification
/// passes. A largest-remainder apportionment at the size cap
/// `|support| * ceil(1/eps)` serves as the guaranteed last resort.
pub fn exact_eps_approximation(
    s: &Sample,
    w: &WeightTable,
    eps: &Rat,
    class: &HypothesisClass,
) -> Result<EpsApproximation> {
    if w.len() != s.len() {
        return Err(Error::LengthMismatch { weights: w.len(), sample: s.len() });
    }
    let total = w.scaled_total();
    if total.is_zero() || s.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let m = s.len();
    let inv_eps = (Rat::one() / eps).ceil().to_integer().magnitude().clone();
    let cap_copies = BigUint::from(m) * &inv_eps;
    let scale = BigUint::one() << (w.round() - 1);

    let finish = |mults: Vec<BigUint>| -> Result<EpsApproximation> {
        let sub = expand(s.n(), s.items(), &mults)?;
        let dev = verify_eps_approximation(
            &sub,
            &Distribution::new(s.clone(), w.mantissas().to_vec())?,
            class,
        )?;
        Ok(EpsApproximation { subsample: sub, eps: eps.clone(), verified_deviation: dev })
    };

    // Grid rounding on the true (unnormalized) weights.
    let two_over_eps = (Rat::from(BigInt::from(2)) / eps)
        .ceil()
        .to_integer()
        .magnitude()
        .clone();
    let mut grid = two_over_eps;
    while grid <= cap_copies {
        // round(mantissa * grid / scale), half up.
        let mut mults: Vec<BigUint> = w
            .mantissas()
            .iter()
            .map(|mant| ((mant * &grid) * 2u32 + &scale) / (&scale * 2u32))
            .collect();
        let size: BigUint = mults.iter().sum();
        if !size.is_zero() {
            gcd_reduce(&mut mults);
            let size: BigUint = mults.iter().sum();
            if size <= cap_copies
                && within_eps(class, s.items(), &mults, s.items(), w.mantissas(), eps)
            {
                return finish(mults);
            }
        }
        grid *= 2u32;
    }

    // Largest-remainder apportionment of exactly `cap_copies` copies.
    let target = &cap_copies;
    let mut mults: Vec<BigUint> = Vec::with_capacity(m);
    let mut remainders: Vec<(BigUint, Example, usize)> = Vec::with_capacity(m);
    let mut assigned = BigUint::zero();
    for (j, mant) in w.mantissas().iter().enumerate() {
        let num = mant * target;
        let (q, r) = num.div_rem(&total);
        assigned += &q;
        mults.push(q);
        remainders.push((r, s.items()[j], j));
    }
    let mut leftover = (target - &assigned)
        .to_usize()
        .expect("leftover copies fit usize");
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, _, j) in remainders {
        if leftover == 0 {
            break;
        }
        mults[j] += 1u32;
        leftover -= 1;
    }
    gcd_reduce(&mut mults);
    if !within_eps(class, s.items(), &mults, s.items(), w.mantissas(), eps) {
        return Err(Error::ExactApproxFailed);
    }
    finish(mults)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rat, Label};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ex(p: usize, l: i64) -> Example {
        Example::new(p, Label::from_value(l).unwrap())
    }

    #[test]
    fn verify_identity_is_zero() {
        let class = HypothesisClass::singletons(3);
        let s = Sample::new(3, vec![ex(0, 1), ex(1, -1), ex(2, -1)]).unwrap();
        let p = Distribution::uniform(s.clone()).unwrap();
        assert_eq!(verify_eps_approximation(&s, &p, &class).unwrap(), rat(0, 1));
    }

    #[test]
    fn verify_point_mass_duplicates() {
        let class = HypothesisClass::singletons(2);
        let p = Distribution::uniform(Sample::new(2, vec![ex(0, 1)]).unwrap()).unwrap();
        let sub = Sample::new(2, vec![ex(0, 1), ex(0, 1)]).unwrap();
        assert_eq!(verify_eps_approximation(&sub, &p, &class).unwrap(), rat(0, 1));
    }

    #[test]
    fn verify_single_item_subsample() {
        let class = HypothesisClass::singletons(2);
        // Losses of both singletons agree exactly between p and sub here:
        // the sub-multiset induces the same mistake pattern.
        let p = Distribution::uniform(
            Sample::new(2, vec![ex(0, 1), ex(1, -1)]).unwrap(),
        )
        .unwrap();
        let sub = Sample::new(2, vec![ex(0, 1)]).unwrap();
        assert_eq!(verify_eps_approximation(&sub, &p, &class).unwrap(), rat(0, 1));

        // With the second example labeled +1 the deviation is 1/2: h_0
        // errs on half of p but on nothing in sub.
        let p = Distribution::uniform(
            Sample::new(2, vec![ex(0, 1), ex(1, 1)]).unwrap(),
        )
        .unwrap();
        assert_eq!(verify_eps_approximation(&sub, &p, &class).unwrap(), rat(1, 2));
    }

    #[test]
    fn verify_rejects_empty_subsample() {
        let class = HypothesisClass::singletons(2);
        let p = Distribution::uniform(Sample::new(2, vec![ex(0, 1)]).unwrap()).unwrap();
        assert!(verify_eps_approximation(&Sample::empty(2), &p, &class).is_err());
    }

    #[test]
    fn build_single_behavior_gives_size_one() {
        let class = HypothesisClass::singletons(4);
        let s = Sample::new(4, vec![ex(1, -1); 20]).unwrap();
        let w = WeightTable::init(20);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = build_eps_approximation(&s, &w, &rat(1, 100), &class, &mut rng, &Default::default())
            .unwrap();
        assert_eq!(a.subsample.len(), 1);
        assert_eq!(a.verified_deviation, rat(0, 1));
    }

    #[test]
    fn build_realizable_hundred_passes_verifier() {
        let class = HypothesisClass::singletons(16);
        let mut items = vec![ex(3, 1); 4];
        for j in 0..96 {
            items.push(ex((j * 7 + 1) % 16, -1));
        }
        let mut items: Vec<Example> =
            items.into_iter().map(|e| if e.point == 3 { ex(3, 1) } else { e }).collect();
        items.truncate(100);
        let s = Sample::new(16, items).unwrap();
        let w = WeightTable::init(100);
        let eps = rat(1, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a =
            build_eps_approximation(&s, &w, &eps, &class, &mut rng, &Default::default()).unwrap();
        let p = Distribution::new(s.clone(), w.mantissas().to_vec()).unwrap();
        let dev = verify_eps_approximation(&a.subsample, &p, &class).unwrap();
        assert!(dev <= eps);
        assert_eq!(dev, a.verified_deviation);
        let cap = size_cap(&class, &eps, 1);
        assert!(a.subsample.len() <= s.len().max(1) * 100 || a.subsample.len() <= cap);
    }

    #[test]
    fn build_reproducible_with_same_seed() {
        let class = HypothesisClass::thresholds(8);
        let mut items = Vec::new();
        for j in 0..40 {
            items.push(ex(j % 8, if j % 8 < 5 { 1 } else { -1 }));
        }
        let s = Sample::new(8, items).unwrap();
        let w = WeightTable::init(40);
        let eps = rat(1, 10);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            build_eps_approximation(&s, &w, &eps, &class, &mut rng, &Default::default())
                .unwrap()
                .subsample
        };
        assert_eq!(run(42), run(42));
    }

    #[test]
    fn exact_uniform_whole_support_once() {
        let class = HypothesisClass::singletons(5);
        let s =
            Sample::new(5, vec![ex(0, -1), ex(1, -1), ex(2, 1), ex(3, -1), ex(4, -1)]).unwrap();
        let w = WeightTable::init(5);
        let a = exact_eps_approximation(&s, &w, &rat(1, 1), &class).unwrap();
        assert_eq!(a.subsample.len(), 5);
        assert_eq!(a.verified_deviation, rat(0, 1));
    }

    #[test]
    fn exact_gcd_reduction_examples() {
        let class = HypothesisClass::singletons(2);
        // Weights (1/2, 1/2): grid 200 gives 100 copies each, reduced to 1.
        let s = Sample::new(2, vec![ex(0, 1), ex(1, -1)]).unwrap();
        let mut w = WeightTable::init(2);
        w = crate::boosting::weight_update(
            &w,
            &s,
            &crate::hypothesis::Classifier::Base(0),
            &class,
        )
        .unwrap();
        // h_0 is consistent with both examples: both halved -> (1/2, 1/2).
        let a = exact_eps_approximation(&s, &w, &rat(1, 100), &class).unwrap();
        assert_eq!(a.subsample.len(), 2);
        assert_eq!(a.verified_deviation, rat(0, 1));

        // Weight ratio 1:4 reduces to multiplicities (1, 4).
        let tclass = HypothesisClass::thresholds(2);
        let mut w3 = WeightTable::init(2);
        // h_2 (all-plus) is correct on (0,+1) only: two updates give
        // weights (1/4, 1).
        for _ in 0..2 {
            w3 = crate::boosting::weight_update(
                &w3,
                &s,
                &crate::hypothesis::Classifier::Base(2),
                &tclass,
            )
            .unwrap();
        }
        let a = exact_eps_approximation(&s, &w3, &rat(1, 100), &tclass).unwrap();
        assert_eq!(a.verified_deviation, rat(0, 1));
        let counts = a.subsample.counts();
        assert_eq!(counts[&ex(1, -1)], 4 * counts[&ex(0, 1)]);
    }

    #[test]
    fn exact_invariant_under_permutation() {
        let class = HypothesisClass::thresholds(6);
        let items = vec![ex(0, 1), ex(3, -1), ex(5, -1), ex(1, 1), ex(3, -1)];
        let mut rev = items.clone();
        rev.reverse();
        let a = exact_eps_approximation(
            &Sample::new(6, items).unwrap(),
            &WeightTable::init(5),
            &rat(1, 50),
            &class,
        )
        .unwrap();
        let b = exact_eps_approximation(
            &Sample::new(6, rev).unwrap(),
            &WeightTable::init(5),
            &rat(1, 50),
            &class,
        )
        .unwrap();
        assert_eq!(a.subsample, b.subsample);
    }

    #[test]
    fn empty_distribution_is_rejected() {
        let class = HypothesisClass::singletons(2);
        let s = Sample::empty(2);
        let w = WeightTable::init(0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(build_eps_approximation(
            &s,
            &w,
            &rat(1, 100),
            &class,
            &mut rng,
            &Default::default()
        )
        .is_err());
        assert!(exact_eps_approximation(&s, &w, &rat(1, 100), &class).is_err());
    }
}
