//! The two distributed protocols: a boosting attempt that may get stuck,
//! and the outer resilient learning loop that removes non-realizable
//! subsamples and patches the final classifier.
//!
//! Players and the center are state machines advanced by a single-threaded
//! round scheduler; every exchanged value crosses the metered channel as an
//! encoded bit string and is decoded on the receiving side, so the
//! transcript alone determines what each party knows.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::approx::{
    build_eps_approximation, exact_eps_approximation, size_cap, ApproxParams,
};
use crate::boosting::{majority_combine, margin_profile, rounds_for, weight_update, WeightTable};
use crate::error::{Error, Result};
use crate::hypothesis::{is_realizable, opt, Classifier, HypothesisClass};
use crate::model::{Distribution, DistributedSample, Label, Rat, Sample};
use crate::network::{
    self, decode_approx_sample, decode_patch_table, encode_approx_sample,
    encode_hypothesis_index, encode_patch_table, encode_weight_sum, example_width, width_for,
    Bits, BitReader, Channel, Message, MessageKind, Party,
};

/// How players construct their per-round ε-approximations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApproxMode {
    /// I.i.d. draws over a doubling size schedule (seeded, reproducible).
    Randomized,
    /// Grid-rounded proportional multiset; the whole protocol is then
    /// deterministic.
    ExactDeterministic,
}

/// Protocol parameters. The defaults realize the protocol as stated: a
/// `1/100`-approximation per player per round and a `1/100` weak-loss
/// threshold at the center.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    pub eps: Rat,
    pub weak_threshold: Rat,
    pub approx_mode: ApproxMode,
    pub approx_params: ApproxParams,
    pub check_invariants: bool,
    /// Test hook: players apply a corrupted weight update. Used as a
    /// negative control for the invariant checker.
    #[doc(hidden)]
    pub sabotage_weight_update: bool,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            eps: crate::model::rat(1, 100),
            weak_threshold: crate::model::rat(1, 100),
            approx_mode: ApproxMode::ExactDeterministic,
            approx_params: ApproxParams::default(),
            check_invariants: true,
            sabotage_weight_update: false,
        }
    }
}

/// Outcome of a single boosting attempt.
#[derive(Debug, Clone)]
pub enum BoostOutcome {
    /// All parties agree on a classifier consistent with the attempt input.
    Finished(Classifier),
    /// The round's approximations, whose concatenation is not realizable.
    Stuck(Vec<Sample>),
}

/// Tallies of every invariant checked during a run.
#[derive(Debug, Clone, Default)]
pub struct InvariantLog {
    pub enabled: bool,
    pub edge_checks: usize,
    pub edge_violations: usize,
    pub worst_edge: Option<Rat>,
    pub approx_checks: usize,
    pub approx_violations: usize,
    pub margin_checks: usize,
    pub margin_violations: usize,
    pub worst_margin: Option<Rat>,
    pub stuck_checks: usize,
    pub stuck_violations: usize,
    pub progress_checks: usize,
    pub progress_violations: usize,
    pub agreement_ok: Option<bool>,
    pub ledger_within_bound: Option<bool>,
    /// `(E_S(f), best_any)` recorded when the final classifier misses the
    /// unrestricted optimum; logged, never a failure.
    pub opt_gap: Option<(usize, usize)>,
}

impl InvariantLog {
    pub fn all_ok(&self) -> bool {
        self.edge_violations == 0
            && self.approx_violations == 0
            && self.margin_violations == 0
            && self.stuck_violations == 0
            && self.progress_violations == 0
            && self.agreement_ok != Some(false)
            && self.ledger_within_bound != Some(false)
    }

    pub fn report(&self) -> String {
        let line = |name: &str, checks: usize, viol: usize| {
            format!(
                "{}: {} ({} checks, {} violations)\n",
                name,
                if viol == 0 { "pass" } else { "FAIL" },
                checks,
                viol
            )
        };
        let mut s = String::new();
        s.push_str(&line("edge<=threshold+eps", self.edge_checks, self.edge_violations));
        s.push_str(&line("approx<=eps", self.approx_checks, self.approx_violations));
        s.push_str(&line("margin<=1/3", self.margin_checks, self.margin_violations));
        s.push_str(&line("stuck-not-realizable", self.stuck_checks, self.stuck_violations));
        s.push_str(&line("progress-decrement", self.progress_checks, self.progress_violations));
        s.push_str(&format!(
            "agreement: {}\n",
            match self.agreement_ok {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "not checked",
            }
        ));
        s.push_str(&format!(
            "ledger-bound: {}\n",
            match self.ledger_within_bound {
                Some(true) => "pass",
                Some(false) => "FAIL",
                None => "not checked",
            }
        ));
        if let Some((e, b)) = self.opt_gap {
            s.push_str(&format!("note: E_S(f)={e} exceeds best-any={b} (logged)\n"));
        }
        s
    }
}

/// Result of the full outer protocol.
#[derive(Debug, Clone)]
pub struct RunResult {
    /// The agreed final classifier (patched when any removals happened).
    pub classifier: Classifier,
    /// The classifier returned by the last, successful boosting attempt.
    pub base_classifier: Classifier,
    pub stuck_iterations: usize,
    /// The removed multiset held by the center.
    pub removed: Sample,
    pub invariants: InvariantLog,
    /// Closed-form upper bound on the ledger total for this run's shape.
    pub closed_form_bound: usize,
}

/// The mixture the center forms on the concatenated approximations:
/// element `j` of `S'_i` has probability `(1/|S'_i|) * (W^{(i)} / W)`.
///
/// Weight sums are the scaled integers of a common round, so the mixture is
/// exact. Players with zero weight sum contribute nothing.
pub fn mixture_distribution(approxs: &[Sample], weight_sums: &[BigUint]) -> Result<Distribution> {
    if approxs.len() != weight_sums.len() {
        return Err(Error::Protocol("approx/weight-sum arity mismatch".into()));
    }
    let mut lcm = BigUint::one();
    for (a, w) in approxs.iter().zip(weight_sums) {
        if !w.is_zero() {
            if a.is_empty() {
                return Err(Error::Protocol(
                    "positive weight sum with empty approximation".into(),
                ));
            }
            lcm = lcm.lcm(&BigUint::from(a.len()));
        }
    }
    let n = approxs
        .iter()
        .map(|a| a.n())
        .max()
        .ok_or_else(|| Error::Protocol("no players".into()))?;
    let mut items = Vec::new();
    let mut weights = Vec::new();
    for (a, w) in approxs.iter().zip(weight_sums) {
        if w.is_zero() {
            continue;
        }
        let per_item = w * (&lcm / BigUint::from(a.len()));
        for e in a.iter() {
            items.push(*e);
            weights.push(per_item.clone());
        }
    }
    Distribution::new(Sample::new(n, items)?, weights)
}

/// Scan the enumeration for the minimizer of `L_D`; return it when its loss
/// is at most the threshold (inclusive, exact comparison).
pub fn weak_search(d: &Distribution, class: &HypothesisClass, threshold: &Rat) -> Option<usize> {
    let mv = class.mistake_weights(d.support().items(), d.weights());
    let (idx, best) = mv
        .iter()
        .enumerate()
        .min_by_key(|(i, c)| ((*c).clone(), *i))
        .expect("non-empty enumeration");
    let num = threshold.numer().magnitude();
    let den = threshold.denom().magnitude();
    if best * den <= num * d.total() {
        Some(idx)
    } else {
        None
    }
}

struct PlayerSim {
    sample: Sample,
    weights: WeightTable,
    rng: ChaCha8Rng,
    /// Hypothesis indices decoded from the center during the current
    /// attempt.
    hyps: Vec<usize>,
    patch: Option<Vec<(usize, Label)>>,
}

struct Sim<'a> {
    class: &'a HypothesisClass,
    cfg: &'a ProtocolConfig,
    ch: &'a mut Channel,
    players: Vec<PlayerSim>,
    /// Checker-side reference weights maintained by the specified update
    /// rule, independent of what players actually do.
    ref_weights: Vec<WeightTable>,
    n: usize,
    m0: usize,
    log: InvariantLog,
    bound_bits: usize,
}

enum AttemptOutcome {
    Finished { hyps: Vec<usize> },
    Stuck { approxs: Vec<Sample> },
    EmptyInput,
}

impl<'a> Sim<'a> {
    fn new(
        ds: &DistributedSample,
        class: &'a HypothesisClass,
        ch: &'a mut Channel,
        seed: u64,
        cfg: &'a ProtocolConfig,
    ) -> Self {
        let players = ds
            .parts()
            .iter()
            .enumerate()
            .map(|(i, s)| PlayerSim {
                sample: s.clone(),
                weights: WeightTable::init(s.len()),
                rng: ChaCha8Rng::seed_from_u64(
                    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i as u64 + 1),
                ),
                hyps: Vec::new(),
                patch: None,
            })
            .collect();
        let mut log = InvariantLog::default();
        log.enabled = cfg.check_invariants;
        Sim {
            class,
            cfg,
            ch,
            players,
            ref_weights: Vec::new(),
            n: ds.n(),
            m0: ds.total_len(),
            log,
            bound_bits: 0,
        }
    }

    fn k(&self) -> usize {
        self.players.len()
    }

    fn concat(&self) -> Sample {
        let mut items = Vec::new();
        for p in &self.players {
            items.extend_from_slice(p.sample.items());
        }
        Sample::new(self.n, items).expect("points already validated")
    }

    /// Largest subsample player `i` may send this attempt; known to both
    /// link ends from the current size exchange.
    fn approx_cap(&self, len: usize) -> usize {
        if len == 0 {
            return 0;
        }
        let inv_eps = (Rat::one() / &self.cfg.eps)
            .ceil()
            .to_integer()
            .to_usize()
            .unwrap_or(usize::MAX);
        size_cap(self.class, &self.cfg.eps, self.cfg.approx_params.size_cap_factor)
            .max(len.saturating_mul(inv_eps))
    }

    fn send(
        &mut self,
        kind: MessageKind,
        attempt: usize,
        round: usize,
        sender: Party,
        receiver: Party,
        payload: Bits,
    ) -> Bits {
        self.ch.record_and_deliver(Message { kind, attempt, round, sender, receiver, payload })
    }

    /// Input-description broadcast: domain size, player count, class id and
    /// the per-player sizes. Metered as attempt 0 and excluded from
    /// per-OPT scaling fits.
    fn setup(&mut self) {
        for i in 0..self.k() {
            let mut b = Bits::new();
            b.push_uint(self.players[i].sample.len(), 32);
            let sent = self.send(MessageKind::Setup, 0, 0, Party::Player(i), Party::Center, b);
            self.bound_bits += sent.len();
        }
        let sizes: Vec<usize> = self.players.iter().map(|p| p.sample.len()).collect();
        for i in 0..self.k() {
            let mut b = Bits::new();
            b.push_uint(self.n, 32);
            b.push_uint(self.k(), 16);
            b.push_uint(self.class.size(), 32);
            for s in &sizes {
                b.push_uint(*s, 32);
            }
            let sent = self.send(MessageKind::Setup, 0, 0, Party::Center, Party::Player(i), b);
            self.bound_bits += sent.len();
        }
    }

    fn run_attempt(&mut self, attempt: usize) -> Result<AttemptOutcome> {
        let k = self.k();
        let n = self.n;
        let size_w = width_for(self.m0 + 1);
        let hyp_w = width_for(self.class.size());
        let ex_w = example_width(n);

        // Size exchange: players report current sizes, center announces the
        // total so everyone derives the round count.
        let mut sizes = Vec::with_capacity(k);
        for i in 0..k {
            let mut b = Bits::new();
            b.push_uint(self.players[i].sample.len(), size_w);
            let payload =
                self.send(MessageKind::Setup, attempt, 0, Party::Player(i), Party::Center, b);
            sizes.push(BitReader::new(&payload).read_uint(size_w)?);
        }
        let m: usize = sizes.iter().sum();
        let mut player_m = vec![0usize; k];
        for i in 0..k {
            let mut b = Bits::new();
            b.push_uint(m, size_w);
            let payload =
                self.send(MessageKind::Setup, attempt, 0, Party::Center, Party::Player(i), b);
            player_m[i] = BitReader::new(&payload).read_uint(size_w)?;
        }
        self.bound_bits += 2 * k * size_w;
        if m == 0 {
            return Ok(AttemptOutcome::EmptyInput);
        }

        // Initialize: every weight is 1 at the start of an attempt.
        for p in &mut self.players {
            p.weights = WeightTable::init(p.sample.len());
            p.hyps.clear();
        }
        if self.cfg.check_invariants {
            self.ref_weights =
                self.players.iter().map(|p| WeightTable::init(p.sample.len())).collect();
        }

        let t_rounds = rounds_for(m);
        let caps: Vec<usize> = sizes.iter().map(|&s| self.approx_cap(s)).collect();
        let mut hyps: Vec<usize> = Vec::with_capacity(t_rounds);

        for t in 1..=t_rounds {
            // Per-round ledger budget: k approximations + k weight sums up,
            // then a continue bit and possibly a hypothesis index down.
            for i in 0..k {
                self.bound_bits += width_for(caps[i] + 1)
                    + caps[i] * ex_w
                    + if sizes[i] > 0 { network::weight_sum_width(sizes[i], t) } else { 0 };
            }
            self.bound_bits += k * (1 + hyp_w);

            // Uplink: approximations and weight sums.
            let mut approxs: Vec<Sample> = Vec::with_capacity(k);
            let mut weight_sums: Vec<BigUint> = Vec::with_capacity(k);
            for i in 0..k {
                let (sub, scaled) = self.player_round_message(i, t)?;
                let mut b = Bits::new();
                encode_approx_sample(&mut b, &sub, n, caps[i])?;
                let payload = self
                    .send(MessageKind::ApproxSample, attempt, t, Party::Player(i), Party::Center, b);
                let decoded =
                    decode_approx_sample(&mut BitReader::new(&payload), n, caps[i])?;

                let mut b = Bits::new();
                if sizes[i] > 0 {
                    encode_weight_sum(&mut b, &scaled, sizes[i], t)?;
                }
                let payload = self
                    .send(MessageKind::WeightSum, attempt, t, Party::Player(i), Party::Center, b);
                let decoded_sum = if sizes[i] > 0 {
                    BitReader::new(&payload)
                        .read_biguint(network::weight_sum_width(sizes[i], t))?
                } else {
                    BigUint::zero()
                };

                if self.cfg.check_invariants && !decoded.is_empty() {
                    self.check_approx(i, &decoded);
                }
                approxs.push(decoded);
                weight_sums.push(decoded_sum);
            }

            // The center forms the mixture and searches for
            // a weak hypothesis.
            let mixture = mixture_distribution(&approxs, &weight_sums)?;
            let found = weak_search(&mixture, self.class, &self.cfg.weak_threshold);

            match found {
                Some(idx) => {
                    for i in 0..k {
                        let mut b = Bits::new();
                        b.push_bit(false); // continue
                        self.send(
                            MessageKind::StuckSignal,
                            attempt,
                            t,
                            Party::Center,
                            Party::Player(i),
                            b,
                        );
                        let mut b = Bits::new();
                        encode_hypothesis_index(&mut b, idx, self.class.size())?;
                        let payload = self.send(
                            MessageKind::HypothesisIndex,
                            attempt,
                            t,
                            Party::Center,
                            Party::Player(i),
                            b,
                        );
                        let got = BitReader::new(&payload).read_uint(hyp_w)?;
                        self.players[i].hyps.push(got);
                        self.apply_update(i, got)?;
                    }
                    if self.cfg.check_invariants {
                        self.check_edge(idx);
                        self.advance_ref_weights(idx)?;
                    }
                    hyps.push(idx);
                }
                None => {
                    // Stuck: one bit to each player.
                    for i in 0..k {
                        let mut b = Bits::new();
                        b.push_bit(true);
                        self.send(
                            MessageKind::StuckSignal,
                            attempt,
                            t,
                            Party::Center,
                            Party::Player(i),
                            b,
                        );
                    }
                    return Ok(AttemptOutcome::Stuck { approxs });
                }
            }
        }
        Ok(AttemptOutcome::Finished { hyps })
    }

    /// Player `i`'s uplink content for round `t`: its verified
    /// ε-approximation of `p_t^i` and the scaled weight sum.
    fn player_round_message(&mut self, i: usize, _t: usize) -> Result<(Sample, BigUint)> {
        let class = self.class;
        let cfg = self.cfg;
        let n = self.n;
        let p = &mut self.players[i];
        if p.sample.is_empty() {
            return Ok((Sample::empty(n), BigUint::zero()));
        }
        let approx = match cfg.approx_mode {
            ApproxMode::Randomized => build_eps_approximation(
                &p.sample,
                &p.weights,
                &cfg.eps,
                class,
                &mut p.rng,
                &cfg.approx_params,
            )?,
            ApproxMode::ExactDeterministic => {
                exact_eps_approximation(&p.sample, &p.weights, &cfg.eps, class)?
            }
        };
        Ok((approx.subsample, p.weights.scaled_total()))
    }

    fn apply_update(&mut self, i: usize, hyp: usize) -> Result<()> {
        let h = Classifier::Base(hyp);
        let class = self.class;
        let sabotage = self.cfg.sabotage_weight_update;
        let p = &mut self.players[i];
        if p.sample.is_empty() {
            return Ok(());
        }
        if sabotage {
            // Corrupted rule: double the weight of correctly classified
            // examples instead of halving it.
            let mantissas = p
                .weights
                .mantissas()
                .iter()
                .zip(p.sample.iter())
                .map(|(mant, e)| {
                    if h.evaluate(class, e.point) == e.label {
                        mant << 2
                    } else {
                        mant.clone()
                    }
                })
                .collect::<Vec<_>>();
            p.weights = WeightTable::from_parts(p.weights.round() + 1, mantissas);
            return Ok(());
        }
        p.weights = weight_update(&p.weights, &p.sample, &h, class)?;
        Ok(())
    }

    fn advance_ref_weights(&mut self, hyp: usize) -> Result<()> {
        let h = Classifier::Base(hyp);
        for (w, p) in self.ref_weights.iter_mut().zip(&self.players) {
            if !p.sample.is_empty() {
                *w = weight_update(w, &p.sample, &h, self.class)?;
            }
        }
        Ok(())
    }

    /// Approximation invariant: the decoded subsample is within `eps` of
    /// the reference distribution `p_t^i`.
    fn check_approx(&mut self, i: usize, sub: &Sample) {
        let p = &self.players[i];
        let w = &self.ref_weights[i];
        if p.sample.is_empty() {
            return;
        }
        let dist = Distribution::new(p.sample.clone(), w.mantissas().to_vec())
            .expect("reference distribution");
        let dev = crate::approx::verify_eps_approximation(sub, &dist, self.class)
            .expect("non-empty subsample");
        self.log.approx_checks += 1;
        if dev > self.cfg.eps {
            self.log.approx_violations += 1;
        }
    }

    /// Edge invariant: the broadcast hypothesis has loss at most
    /// `threshold + eps` under the true global weight distribution.
    fn check_edge(&mut self, hyp: usize) {
        let mut items = Vec::new();
        let mut weights = Vec::new();
        for (p, w) in self.players.iter().zip(&self.ref_weights) {
            items.extend_from_slice(p.sample.items());
            weights.extend_from_slice(w.mantissas());
        }
        let total: BigUint = weights.iter().sum();
        if total.is_zero() {
            return;
        }
        let mv = self.class.mistake_weights(&items, &weights);
        let loss = Rat::new(mv[hyp].clone().into(), total.into());
        let bound = &self.cfg.weak_threshold + &self.cfg.eps;
        self.log.edge_checks += 1;
        if loss > bound {
            self.log.edge_violations += 1;
        }
        if self.log.worst_edge.as_ref().map_or(true, |w| loss > *w) {
            self.log.worst_edge = Some(loss);
        }
    }
}

/// A single boosting attempt on a fresh distributed sample.
///
/// Per round each player sends a verified
/// ε-approximation of its normalized weights plus its weight sum; the
/// center forms the mixture, searches for a hypothesis with loss at most
/// the threshold, and either broadcasts it or declares the attempt stuck.
pub fn boost_attempt(
    ds: &DistributedSample,
    class: &HypothesisClass,
    ch: &mut Channel,
    seed: u64,
    cfg: &ProtocolConfig,
) -> Result<BoostOutcome> {
    if ds.total_len() == 0 {
        return Err(Error::EmptySample);
    }
    let mut sim = Sim::new(ds, class, ch, seed, cfg);
    sim.setup();
    match sim.run_attempt(1)? {
        AttemptOutcome::Finished { hyps } => Ok(BoostOutcome::Finished(majority_combine(&hyps)?)),
        AttemptOutcome::Stuck { approxs } => Ok(BoostOutcome::Stuck(approxs)),
        AttemptOutcome::EmptyInput => Err(Error::EmptySample),
    }
}

/// The outer resilient protocol: repeat boosting attempts, removing each
/// stuck round's approximations from play, then patch the final classifier
/// by majority label over the removed pool and broadcast the patch.
pub fn accurately_classify(
    ds: &DistributedSample,
    class: &HypothesisClass,
    ch: &mut Channel,
    seed: u64,
    cfg: &ProtocolConfig,
) -> Result<RunResult> {
    if ds.total_len() == 0 {
        return Err(Error::EmptySample);
    }
    let n = ds.n();
    let k = ds.k();
    let mut sim = Sim::new(ds, class, ch, seed, cfg);
    sim.setup();

    let mut removed = Sample::empty(n);
    let mut stuck_iterations = 0usize;
    let mut attempt = 1usize;
    let (hyps, empty_final) = loop {
        let before_opt = if cfg.check_invariants {
            Some(opt(&sim.concat(), class).0)
        } else {
            None
        };
        match sim.run_attempt(attempt)? {
            AttemptOutcome::Finished { hyps } => break (hyps, false),
            AttemptOutcome::EmptyInput => break (Vec::new(), true),
            AttemptOutcome::Stuck { approxs } => {
                stuck_iterations += 1;
                // Center: D := D ∪ S'.
                for a in &approxs {
                    for e in a.iter() {
                        removed.push(*e)?;
                    }
                }
                if cfg.check_invariants {
                    let concat: Vec<_> =
                        approxs.iter().flat_map(|a| a.items().iter().copied()).collect();
                    let s_prime = Sample::new(n, concat)?;
                    sim.log.stuck_checks += 1;
                    if is_realizable(&s_prime, class) {
                        sim.log.stuck_violations += 1;
                    }
                }
                // Players: S_i := S_i \ S'_i (multiset subtraction).
                for (p, a) in sim.players.iter_mut().zip(&approxs) {
                    p.sample = p.sample.multiset_subtract(a);
                }
                if let Some(before) = before_opt {
                    let after = opt(&sim.concat(), class).0;
                    sim.log.progress_checks += 1;
                    if after >= before {
                        sim.log.progress_violations += 1;
                    }
                }
                attempt += 1;
            }
        }
    };

    // The remainder the final attempt ran on.
    let final_input = sim.concat();
    let g = if empty_final {
        // Empty remainder: trivially realizable; a zero-vote majority
        // evaluates to the constant +1 everywhere.
        Classifier::Majority(Vec::new())
    } else {
        majority_combine(&hyps)?
    };

    if cfg.check_invariants && !hyps.is_empty() {
        let margins = margin_profile(&final_input, &hyps, class);
        let third = crate::model::rat(1, 3);
        for mgn in margins {
            sim.log.margin_checks += 1;
            if mgn > third {
                sim.log.margin_violations += 1;
            }
            if sim.log.worst_margin.as_ref().map_or(true, |w| mgn > *w) {
                sim.log.worst_margin = Some(mgn);
            }
        }
    }

    // Patch rule over the removed pool: +1 when n_+(x) >= 1 and
    // n_+(x) >= n_-(x); -1 when n_-(x) >= 1 and n_-(x) > n_+(x).
    let mut plus = std::collections::BTreeMap::new();
    let mut minus = std::collections::BTreeMap::new();
    for e in removed.iter() {
        match e.label {
            Label::Plus => *plus.entry(e.point).or_insert(0usize) += 1,
            Label::Minus => *minus.entry(e.point).or_insert(0usize) += 1,
        }
    }
    let mut points: Vec<usize> = plus.keys().chain(minus.keys()).copied().collect();
    points.sort_unstable();
    points.dedup();
    let entries: Vec<(usize, Label)> = points
        .into_iter()
        .map(|x| {
            let np = plus.get(&x).copied().unwrap_or(0);
            let nm = minus.get(&x).copied().unwrap_or(0);
            (x, if np >= 1 && np >= nm { Label::Plus } else { Label::Minus })
        })
        .collect();

    // Broadcast the patch so all parties hold the identical classifier.
    let final_attempt = attempt;
    for i in 0..k {
        let mut b = Bits::new();
        encode_patch_table(&mut b, &entries, n)?;
        let payload = sim.send(
            MessageKind::PatchTable,
            final_attempt,
            0,
            Party::Center,
            Party::Player(i),
            b,
        );
        let decoded = decode_patch_table(&mut BitReader::new(&payload), n)?;
        sim.players[i].patch = Some(decoded);
    }
    sim.bound_bits += k * (width_for(n + 1) + n * example_width(n));

    let classifier = if entries.is_empty() {
        g.clone()
    } else {
        Classifier::Patched {
            patch: entries.iter().copied().collect(),
            fallback: Box::new(g.clone()),
        }
    };

    if cfg.check_invariants {
        // Agreement: each player's transcript view matches the center's
        // classifier on every domain point.
        let mut ok = true;
        for p in &sim.players {
            let local_g = if empty_final {
                Classifier::Majority(Vec::new())
            } else {
                Classifier::Majority(p.hyps.clone())
            };
            let local = match p.patch.as_ref() {
                Some(entries) if !entries.is_empty() => Classifier::Patched {
                    patch: entries.iter().copied().collect(),
                    fallback: Box::new(local_g),
                },
                _ => local_g,
            };
            for x in 0..n {
                if local.evaluate(class, x) != classifier.evaluate(class, x) {
                    ok = false;
                    break;
                }
            }
        }
        sim.log.agreement_ok = Some(ok);
        sim.log.ledger_within_bound = Some(sim.ch.total_bits() <= sim.bound_bits);

        let original = ds.concat();
        let errors = crate::model::empirical_errors(&original, &classifier, class);
        let best = crate::model::best_any_classifier_errors(&original);
        if errors > best {
            sim.log.opt_gap = Some((errors, best));
        }
    }

    Ok(RunResult {
        classifier,
        base_classifier: g,
        stuck_iterations,
        removed,
        invariants: sim.log,
        closed_form_bound: sim.bound_bits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{planted_opt_instance, random_realizable, split, SplitStrategy};
    use crate::model::{empirical_errors, rat, Example};
    use rand::SeedableRng;

    fn run(
        ds: &DistributedSample,
        class: &HypothesisClass,
        seed: u64,
        cfg: &ProtocolConfig,
    ) -> (RunResult, Channel) {
        let mut ch = Channel::new();
        let r = accurately_classify(ds, class, &mut ch, seed, cfg).unwrap();
        (r, ch)
    }

    #[test]
    fn mixture_weights_players_by_weight_sum() {
        let a = Sample::from_lines(2, "0,+1").unwrap();
        let b = Sample::from_lines(2, "1,-1").unwrap();
        let d = mixture_distribution(
            &[a, b],
            &[BigUint::from(3u32), BigUint::from(1u32)],
        )
        .unwrap();
        let probs = d.probs();
        assert_eq!(probs[0], rat(3, 4));
        assert_eq!(probs[1], rat(1, 4));
    }

    #[test]
    fn mixture_skips_zero_weight_players() {
        let a = Sample::from_lines(2, "0,+1").unwrap();
        let b = Sample::empty(2);
        let d = mixture_distribution(&[a, b], &[BigUint::from(2u32), BigUint::zero()]).unwrap();
        assert_eq!(d.support().len(), 1);
    }

    #[test]
    fn mixture_rejects_positive_weight_empty_approx() {
        let a = Sample::empty(2);
        assert!(mixture_distribution(&[a], &[BigUint::from(1u32)]).is_err());
    }

    #[test]
    fn weak_search_inclusive_threshold() {
        // Uniform on 100 points, one hypothesis errs on exactly 1 of them.
        let class = HypothesisClass::singletons(100);
        let items = (1..100).map(|x| Example::new(x, Label::Minus)).chain(
            std::iter::once(Example::new(0, Label::Minus)),
        );
        let s = Sample::new(100, items.collect()).unwrap();
        let d = Distribution::uniform(s).unwrap();
        // h_x errs only on (x,-1): loss exactly 1/100 for every x.
        assert_eq!(weak_search(&d, &class, &rat(1, 100)), Some(0));
        assert_eq!(weak_search(&d, &class, &rat(1, 101)), None);
    }

    #[test]
    fn realizable_run_is_exact_and_never_stuck() {
        let class = HypothesisClass::thresholds(32);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cfg = ProtocolConfig::default();
        for trial in 0..5 {
            let s = random_realizable(&class, 60, &mut rng).unwrap();
            let ds = split(&s, 3, SplitStrategy::RoundRobin).unwrap();
            let (r, _) = run(&ds, &class, trial, &cfg);
            assert_eq!(r.stuck_iterations, 0);
            assert_eq!(empirical_errors(&s, &r.classifier, &class), 0);
            assert!(r.invariants.all_ok(), "{}", r.invariants.report());
        }
    }

    #[test]
    fn planted_errors_bounded_by_opt() {
        let class = HypothesisClass::singletons(32);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cfg = ProtocolConfig::default();
        for planted in 1..4usize {
            let s = planted_opt_instance(&class, 40, planted, &mut rng).unwrap();
            let ds = split(&s, 2, SplitStrategy::Contiguous).unwrap();
            let (r, _) = run(&ds, &class, planted as u64, &cfg);
            assert!(r.stuck_iterations <= planted);
            assert!(empirical_errors(&s, &r.classifier, &class) <= planted);
            assert!(r.invariants.all_ok(), "{}", r.invariants.report());
        }
    }

    #[test]
    fn randomized_mode_matches_guarantees() {
        let class = HypothesisClass::singletons(16);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = ProtocolConfig {
            approx_mode: ApproxMode::Randomized,
            ..ProtocolConfig::default()
        };
        let s = planted_opt_instance(&class, 20, 1, &mut rng).unwrap();
        let ds = split(&s, 2, SplitStrategy::RoundRobin).unwrap();
        let (r, _) = run(&ds, &class, 17, &cfg);
        assert!(empirical_errors(&s, &r.classifier, &class) <= 1);
        assert!(r.invariants.all_ok(), "{}", r.invariants.report());
    }

    #[test]
    fn identical_seed_identical_transcript() {
        let class = HypothesisClass::thresholds(16);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = planted_opt_instance(&class, 24, 2, &mut rng).unwrap();
        let ds = split(&s, 2, SplitStrategy::RoundRobin).unwrap();
        let cfg = ProtocolConfig {
            approx_mode: ApproxMode::Randomized,
            ..ProtocolConfig::default()
        };
        let (_, ch1) = run(&ds, &class, 42, &cfg);
        let (_, ch2) = run(&ds, &class, 42, &cfg);
        let (_, ch3) = run(&ds, &class, 43, &cfg);
        assert_eq!(ch1.digest(), ch2.digest());
        assert_ne!(ch1.digest(), ch3.digest());
    }

    #[test]
    fn sabotage_trips_invariant_checker() {
        let class = HypothesisClass::thresholds(16);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = random_realizable(&class, 40, &mut rng).unwrap();
        let ds = split(&s, 2, SplitStrategy::RoundRobin).unwrap();
        let cfg = ProtocolConfig {
            sabotage_weight_update: true,
            ..ProtocolConfig::default()
        };
        let mut ch = Channel::new();
        match accurately_classify(&ds, &class, &mut ch, 1, &cfg) {
            Ok(r) => assert!(!r.invariants.all_ok()),
            Err(_) => {} // diverging weights may also break the run outright
        }
    }

    #[test]
    fn empty_input_rejected() {
        let class = HypothesisClass::singletons(4);
        let ds = DistributedSample::new(vec![Sample::empty(4), Sample::empty(4)]).unwrap();
        let mut ch = Channel::new();
        assert!(accurately_classify(&ds, &class, &mut ch, 0, &ProtocolConfig::default()).is_err());
    }

    #[test]
    fn single_player_matches_centralized_adaboost() {
        use crate::boosting::{centralized_adaboost, rounds_for};
        let class = HypothesisClass::thresholds(16);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for trial in 0..5 {
            let s = random_realizable(&class, 30, &mut rng).unwrap();
            let ds = DistributedSample::new(vec![s.clone()]).unwrap();
            let mut ch = Channel::new();
            let out = boost_attempt(&ds, &class, &mut ch, trial, &ProtocolConfig::default())
                .unwrap();
            let f = match out {
                BoostOutcome::Finished(f) => f,
                BoostOutcome::Stuck(_) => panic!("realizable input got stuck"),
            };
            let g = centralized_adaboost(&s, &class, rounds_for(s.len())).unwrap();
            assert_eq!(
                empirical_errors(&s, &f, &class),
                empirical_errors(&s, &g, &class)
            );
        }
    }
}
