//! Simulated star-topology channel with bit-exact message encodings and a
//! communication ledger.
//!
//! Widths are chosen so every message has a closed-form length, making the
//! ledger directly comparable to the communication bound. The channel is
//! lossless and synchronous.

use std::fmt;

use num_bigint::BigUint;
use num_traits::Zero;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{Example, Label, Sample};

/// Bits needed to express values in `[0, count)`; 0 when `count <= 1`.
pub fn width_for(count: usize) -> usize {
    if count <= 1 {
        0
    } else {
        (usize::BITS - (count - 1).leading_zeros()) as usize
    }
}

/// Bits needed for a big value range `[0, count)`.
pub fn width_for_big(count: &BigUint) -> usize {
    if *count <= BigUint::from(1u32) {
        0
    } else {
        (count - 1u32).bits() as usize
    }
}

/// A bit string with explicit length; the unit of everything metered.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bits {
    bits: Vec<bool>,
}

impl Bits {
    pub fn new() -> Self {
        Bits::default()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push_bit(&mut self, b: bool) {
        self.bits.push(b);
    }

    /// Big-endian fixed-width unsigned value.
    pub fn push_uint(&mut self, value: usize, width: usize) {
        for i in (0..width).rev() {
            self.bits.push(value >> i & 1 == 1);
        }
    }

    pub fn push_biguint(&mut self, value: &BigUint, width: usize) {
        debug_assert!(value.bits() as usize <= width || width == 0 && value.is_zero());
        for i in (0..width).rev() {
            self.bits.push(value.bit(i as u64));
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; (self.bits.len() + 7) / 8];
        for (i, b) in self.bits.iter().enumerate() {
            if *b {
                out[i / 8] |= 1 << (7 - i % 8);
            }
        }
        out
    }
}

impl fmt::Display for Bits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{}", if *b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Cursor for decoding a received payload.
pub struct BitReader<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(b: &'a Bits) -> Self {
        BitReader { bits: &b.bits, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Result<bool> {
        let b = *self
            .bits
            .get(self.pos)
            .ok_or_else(|| Error::Protocol("payload underrun".into()))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn read_uint(&mut self, width: usize) -> Result<usize> {
        let mut v = 0usize;
        for _ in 0..width {
            v = (v << 1) | self.read_bit()? as usize;
        }
        Ok(v)
    }

    pub fn read_biguint(&mut self, width: usize) -> Result<BigUint> {
        let mut v = BigUint::zero();
        for _ in 0..width {
            v <<= 1;
            if self.read_bit()? {
                v |= BigUint::from(1u32);
            }
        }
        Ok(v)
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.pos
    }
}

/// `ceil(log2 n)` bits for the point, big-endian, plus one label bit
/// (`+1 -> 1`).
pub fn encode_example(bits: &mut Bits, e: &Example, n: usize) -> Result<()> {
    if e.point >= n {
        return Err(Error::PointOutOfRange { point: e.point, n });
    }
    bits.push_uint(e.point, width_for(n));
    bits.push_bit(e.label == Label::Plus);
    Ok(())
}

pub fn decode_example(r: &mut BitReader<'_>, n: usize) -> Result<Example> {
    let point = r.read_uint(width_for(n))?;
    let label = if r.read_bit()? { Label::Plus } else { Label::Minus };
    if point >= n {
        return Err(Error::PointOutOfRange { point, n });
    }
    Ok(Example::new(point, label))
}

/// Bits of an encoded example over a domain of size `n`.
pub fn example_width(n: usize) -> usize {
    width_for(n) + 1
}

/// Fixed width for a round-`t` weight sum of a player holding `len`
/// examples: the scaled integer `w * 2^(t-1)` is at most `len * 2^(t-1)`.
pub fn weight_sum_width(len: usize, round: usize) -> usize {
    let max = BigUint::from(len) << (round - 1);
    width_for_big(&(max + 1u32))
}

/// The scaled integer value `w * 2^(t-1)` in exactly `weight_sum_width`
/// bits; both ends know the width from the round number and the initial
/// size exchange.
pub fn encode_weight_sum(bits: &mut Bits, scaled: &BigUint, len: usize, round: usize) -> Result<()> {
    let width = weight_sum_width(len, round);
    if scaled.bits() as usize > width {
        return Err(Error::NonIntegralWeight);
    }
    bits.push_biguint(scaled, width);
    Ok(())
}

/// Length-prefixed sequence of examples. The prefix width covers the
/// largest subsample the sender may produce.
pub fn encode_approx_sample(
    bits: &mut Bits,
    sub: &Sample,
    n: usize,
    max_len: usize,
) -> Result<()> {
    if sub.len() > max_len {
        return Err(Error::Protocol(format!(
            "approximation of {} items exceeds prefix capacity {}",
            sub.len(),
            max_len
        )));
    }
    bits.push_uint(sub.len(), width_for(max_len + 1));
    for e in sub.iter() {
        encode_example(bits, e, n)?;
    }
    Ok(())
}

pub fn decode_approx_sample(r: &mut BitReader<'_>, n: usize, max_len: usize) -> Result<Sample> {
    let len = r.read_uint(width_for(max_len + 1))?;
    let mut items = Vec::with_capacity(len);
    for _ in 0..len {
        items.push(decode_example(r, n)?);
    }
    Sample::new(n, items)
}

/// Fixed width `ceil(log2 |H|)` bits.
pub fn encode_hypothesis_index(bits: &mut Bits, idx: usize, class_size: usize) -> Result<()> {
    if idx >= class_size {
        return Err(Error::HypothesisIndexOutOfRange { index: idx, size: class_size });
    }
    bits.push_uint(idx, width_for(class_size));
    Ok(())
}

/// Count-prefixed deduplicated patch table `(point, majority label)` pairs.
pub fn encode_patch_table(
    bits: &mut Bits,
    entries: &[(usize, Label)],
    n: usize,
) -> Result<()> {
    bits.push_uint(entries.len(), width_for(n + 1));
    for (pt, l) in entries {
        encode_example(bits, &Example::new(*pt, *l), n)?;
    }
    Ok(())
}

pub fn decode_patch_table(r: &mut BitReader<'_>, n: usize) -> Result<Vec<(usize, Label)>> {
    let count = r.read_uint(width_for(n + 1))?;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let e = decode_example(r, n)?;
        out.push((e.point, e.label));
    }
    Ok(out)
}

/// Message categories; each has a closed-form payload length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MessageKind {
    Setup,
    ApproxSample,
    WeightSum,
    HypothesisIndex,
    StuckSignal,
    PatchTable,
}

impl MessageKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MessageKind::Setup => "setup",
            MessageKind::ApproxSample => "approx_sample",
            MessageKind::WeightSum => "weight_sum",
            MessageKind::HypothesisIndex => "hypothesis_index",
            MessageKind::StuckSignal => "stuck_signal",
            MessageKind::PatchTable => "patch_table",
        }
    }

    fn tag(&self) -> u8 {
        match self {
            MessageKind::Setup => 0,
            MessageKind::ApproxSample => 1,
            MessageKind::WeightSum => 2,
            MessageKind::HypothesisIndex => 3,
            MessageKind::StuckSignal => 4,
            MessageKind::PatchTable => 5,
        }
    }
}

/// A party on the star: the center or one of the `k` players (0-based id).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Center,
    Player(usize),
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::Center => write!(f, "center"),
            Party::Player(i) => write!(f, "player{}", i + 1),
        }
    }
}

/// A framed message on the channel.
#[derive(Debug, Clone)]
pub struct Message {
    pub kind: MessageKind,
    pub attempt: usize,
    pub round: usize,
    pub sender: Party,
    pub receiver: Party,
    pub payload: Bits,
}

/// One ledger row per delivered message.
#[derive(Debug, Clone)]
pub struct LedgerRecord {
    pub attempt: usize,
    pub round: usize,
    pub sender: Party,
    pub receiver: Party,
    pub kind: MessageKind,
    pub bits: usize,
}

impl LedgerRecord {
    pub fn is_uplink(&self) -> bool {
        matches!(self.sender, Party::Player(_))
    }
}

/// The lossless, reliable channel: records every message in the ledger,
/// folds it into the transcript digest, and delivers the payload unchanged.
#[derive(Debug, Default)]
pub struct Channel {
    records: Vec<LedgerRecord>,
    hasher: Sha256,
}

impl Channel {
    pub fn new() -> Self {
        Channel { records: Vec::new(), hasher: Sha256::new() }
    }

    /// Append a ledger record, absorb the message into the transcript
    /// digest, and deliver the payload.
    pub fn record_and_deliver(&mut self, msg: Message) -> Bits {
        self.records.push(LedgerRecord {
            attempt: msg.attempt,
            round: msg.round,
            sender: msg.sender,
            receiver: msg.receiver,
            kind: msg.kind,
            bits: msg.payload.len(),
        });
        self.hasher.update([msg.kind.tag()]);
        self.hasher.update((msg.attempt as u64).to_be_bytes());
        self.hasher.update((msg.round as u64).to_be_bytes());
        self.hasher.update(msg.sender.to_string().as_bytes());
        self.hasher.update(msg.receiver.to_string().as_bytes());
        self.hasher.update((msg.payload.len() as u64).to_be_bytes());
        self.hasher.update(msg.payload.to_bytes());
        msg.payload
    }

    pub fn records(&self) -> &[LedgerRecord] {
        &self.records
    }

    pub fn total_bits(&self) -> usize {
        self.records.iter().map(|r| r.bits).sum()
    }

    pub fn uplink_bits(&self) -> usize {
        self.records.iter().filter(|r| r.is_uplink()).map(|r| r.bits).sum()
    }

    pub fn downlink_bits(&self) -> usize {
        self.records.iter().filter(|r| !r.is_uplink()).map(|r| r.bits).sum()
    }

    /// Total bits excluding the input-description setup broadcast.
    pub fn protocol_bits(&self) -> usize {
        self.records
            .iter()
            .filter(|r| !(r.kind == MessageKind::Setup && r.attempt == 0))
            .map(|r| r.bits)
            .sum()
    }

    /// Transcript digest over everything delivered so far, as hex.
    pub fn digest(&self) -> String {
        let h = self.hasher.clone().finalize();
        h.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Ledger CSV: `round,attempt,sender,kind,bits`.
    pub fn ledger_csv(&self) -> String {
        let mut s = String::from("round,attempt,sender,kind,bits\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                r.round,
                r.attempt,
                r.sender,
                r.kind.as_str(),
                r.bits
            ));
        }
        s
    }

    /// Transcript CSV: `round,direction,sender,bytes,bits,kind`.
    pub fn transcript_csv(&self) -> String {
        let mut s = String::from("round,direction,sender,bytes,bits,kind\n");
        for r in &self.records {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.round,
                if r.is_uplink() { "uplink" } else { "downlink" },
                r.sender,
                (r.bits + 7) / 8,
                r.bits,
                r.kind.as_str()
            ));
        }
        s
    }
}
