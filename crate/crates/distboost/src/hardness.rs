//! The set-disjointness reduction: learning singletons without a promise on
//! the number of forced errors solves DISJ, so communication must grow with
//! that number. This module builds the hard instances, runs the reduction
//! through the real protocol, and sweeps the cost against the planted
//! optimum.

use crate::error::{Error, Result};
use crate::hypothesis::{opt, HypothesisClass};
use crate::model::{
    best_any_classifier_errors, empirical_errors, DistributedSample, Example, Label, Sample,
};
use crate::network::{width_for, Bits, Channel, Message, MessageKind, Party};
use crate::protocol::{accurately_classify, ProtocolConfig};

/// Alice's map: one example per coordinate, labeled `+1` where her bit is
/// set and `-1` elsewhere.
pub fn map_fa(x: &[bool]) -> Result<Sample> {
    let items = x
        .iter()
        .enumerate()
        .map(|(i, &b)| Example::new(i, if b { Label::Plus } else { Label::Minus }))
        .collect();
    Sample::new(x.len(), items)
}

/// Bob's map is identical; the asymmetry lives only in whose bits go in.
pub fn map_fb(y: &[bool]) -> Result<Sample> {
    map_fa(y)
}

/// `1` when the supports are disjoint, `0` when some coordinate is set in
/// both strings.
pub fn disj(x: &[bool], y: &[bool]) -> u8 {
    if x.iter().zip(y).any(|(&a, &b)| a && b) {
        0
    } else {
        1
    }
}

fn weight(x: &[bool]) -> usize {
    x.iter().filter(|&&b| b).count()
}

/// A two-player disjointness instance: `r`-bit inputs padded with zeros to
/// an `n`-coordinate domain, mapped to one sample per player.
#[derive(Debug, Clone)]
pub struct DisjInstance {
    pub x: Vec<bool>,
    pub y: Vec<bool>,
    pub r: usize,
    pub n: usize,
    pub sample: DistributedSample,
}

impl DisjInstance {
    pub fn new(x: &[bool], y: &[bool], n: usize) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::Protocol("input length mismatch".into()));
        }
        let r = x.len();
        if n < r {
            return Err(Error::Protocol(format!("domain {n} smaller than input length {r}")));
        }
        let mut xp = x.to_vec();
        let mut yp = y.to_vec();
        xp.resize(n, false);
        yp.resize(n, false);
        let sample = DistributedSample::new(vec![map_fa(&xp)?, map_fb(&yp)?])?;
        Ok(DisjInstance { x: x.to_vec(), y: y.to_vec(), r, n, sample })
    }

    /// The disjoint instance with `x` on the first `r` coordinates and `y`
    /// on the next `r`: exactly `2r` contradicting pairs, so the planted
    /// optimum is `2r`.
    pub fn disjoint_blocks(r: usize, n: usize) -> Result<Self> {
        if n < 2 * r {
            return Err(Error::Protocol(format!("need n >= 2r, got n={n}, r={r}")));
        }
        let mut x = vec![false; 2 * r];
        let mut y = vec![false; 2 * r];
        for i in 0..r {
            x[i] = true;
            y[r + i] = true;
        }
        DisjInstance::new(&x, &y, n)
    }

    pub fn w_x(&self) -> usize {
        weight(&self.x)
    }

    pub fn w_y(&self) -> usize {
        weight(&self.y)
    }
}

/// Certified properties of an instance's combined sample: the best error
/// count within singletons and over all classifiers.
pub fn instance_properties(inst: &DisjInstance) -> (usize, usize) {
    let class = HypothesisClass::singletons(inst.n);
    let s = inst.sample.concat();
    (opt(&s, &class).0, best_any_classifier_errors(&s))
}

/// Result of deciding disjointness through the learning protocol.
#[derive(Debug, Clone)]
pub struct DisjRun {
    /// `1` = disjoint, `0` = intersecting; the reduction's output.
    pub output: u8,
    /// `E_S(f)` of the learned classifier on the combined sample.
    pub errors: usize,
    pub stuck_iterations: usize,
    pub total_bits: usize,
    pub uplink_bits: usize,
    pub downlink_bits: usize,
}

/// Decide DISJ by learning: publish the two Hamming weights, learn the
/// combined sample with the two-player protocol, and output "disjoint" iff
/// the learned classifier's error count reaches `w(x) + w(y)`.
///
/// Disjoint inputs force every classifier to at least `w(x) + w(y)` errors;
/// intersecting inputs admit a singleton with `w(x) + w(y) - 2`, which the
/// protocol's error guarantee then beats.
pub fn disj_via_learning(
    inst: &DisjInstance,
    ch: &mut Channel,
    seed: u64,
    cfg: &ProtocolConfig,
) -> Result<DisjRun> {
    // The published weights: one uplink per player, log(r+1) bits each.
    let w_width = width_for(inst.r + 1);
    for (i, w) in [inst.w_x(), inst.w_y()].into_iter().enumerate() {
        let mut b = Bits::new();
        b.push_uint(w, w_width);
        ch.record_and_deliver(Message {
            kind: MessageKind::Setup,
            attempt: 0,
            round: 0,
            sender: Party::Player(i),
            receiver: Party::Center,
            payload: b,
        });
    }

    let class = HypothesisClass::singletons(inst.n);
    let run = accurately_classify(&inst.sample, &class, ch, seed, cfg)?;
    let errors = empirical_errors(&inst.sample.concat(), &run.classifier, &class);
    let threshold = inst.w_x() + inst.w_y();
    Ok(DisjRun {
        output: u8::from(errors >= threshold),
        errors,
        stuck_iterations: run.stuck_iterations,
        total_bits: ch.total_bits(),
        uplink_bits: ch.uplink_bits(),
        downlink_bits: ch.downlink_bits(),
    })
}

/// One sweep row: planted optimum versus communication spent.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub r: usize,
    pub opt: usize,
    pub stuck_iterations: usize,
    pub total_bits: usize,
    pub uplink_bits: usize,
    pub downlink_bits: usize,
}

/// Run disjoint block instances for each `r` and record how the ledger
/// grows with the planted optimum `2r`.
pub fn opt_sweep(
    rs: &[usize],
    n: usize,
    seed: u64,
    cfg: &ProtocolConfig,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(rs.len());
    for &r in rs {
        let inst = DisjInstance::disjoint_blocks(r, n)?;
        let (planted_opt, _) = instance_properties(&inst);
        let mut ch = Channel::new();
        let run = disj_via_learning(&inst, &mut ch, seed, cfg)?;
        rows.push(SweepRow {
            r,
            opt: planted_opt,
            stuck_iterations: run.stuck_iterations,
            total_bits: run.total_bits,
            uplink_bits: run.uplink_bits,
            downlink_bits: run.downlink_bits,
        });
    }
    Ok(rows)
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("r,opt,stuck_iterations,total_bits,uplink_bits,downlink_bits\n");
    for row in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.r, row.opt, row.stuck_iterations, row.total_bits, row.uplink_bits,
            row.downlink_bits
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    #[test]
    fn disj_matches_definition() {
        assert_eq!(disj(&bits("1010"), &bits("0101")), 1);
        assert_eq!(disj(&bits("1010"), &bits("0110")), 0);
        assert_eq!(disj(&bits("0000"), &bits("0000")), 1);
    }

    #[test]
    fn map_labels_by_bit() {
        let s = map_fa(&bits("10")).unwrap();
        assert_eq!(s.items()[0], Example::new(0, Label::Plus));
        assert_eq!(s.items()[1], Example::new(1, Label::Minus));
    }

    #[test]
    fn disjoint_forces_weight_sum_errors() {
        // x = 110, y = 001: disjoint, w(x)+w(y) = 3 contradicting pairs.
        let inst = DisjInstance::new(&bits("110"), &bits("001"), 3).unwrap();
        let s = inst.sample.concat();
        assert_eq!(best_any_classifier_errors(&s), 3);
        let (o, _) = instance_properties(&inst);
        assert_eq!(o, 3);
    }

    #[test]
    fn intersecting_admits_weight_sum_minus_two() {
        // x = 110, y = 011: intersect at coordinate 1.
        let inst = DisjInstance::new(&bits("110"), &bits("011"), 3).unwrap();
        let (o, _) = instance_properties(&inst);
        assert_eq!(o, 2 + 2 - 2);
    }

    #[test]
    fn padding_preserves_structure() {
        let inst = DisjInstance::new(&bits("11"), &bits("00"), 8).unwrap();
        assert_eq!(inst.sample.total_len(), 16);
        let (o, _) = instance_properties(&inst);
        assert_eq!(o, 2);
    }

    #[test]
    fn blocks_have_planted_opt_2r() {
        for r in [1usize, 2, 3] {
            let inst = DisjInstance::disjoint_blocks(r, 16).unwrap();
            let (o, best) = instance_properties(&inst);
            assert_eq!(o, 2 * r);
            assert_eq!(best, 2 * r);
        }
    }

    #[test]
    fn learning_decides_small_disjointness() {
        let cfg = ProtocolConfig::default();
        let cases = [
            ("10", "01", 1u8),
            ("11", "01", 0u8),
            ("00", "00", 1u8),
            ("11", "11", 0u8),
        ];
        for (x, y, want) in cases {
            let inst = DisjInstance::new(&bits(x), &bits(y), 8).unwrap();
            let mut ch = Channel::new();
            let run = disj_via_learning(&inst, &mut ch, 5, &cfg).unwrap();
            assert_eq!(run.output, want, "x={x} y={y}");
            assert_eq!(run.output, disj(&bits(x), &bits(y)));
        }
    }

    #[test]
    fn sweep_rows_report_planted_opt() {
        let rows = opt_sweep(&[1, 2], 16, 3, &ProtocolConfig::default()).unwrap();
        assert_eq!(rows[0].opt, 2);
        assert_eq!(rows[1].opt, 4);
        assert!(rows[1].total_bits > rows[0].total_bits);
    }
}
