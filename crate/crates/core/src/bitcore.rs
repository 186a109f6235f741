//! Bit-level algebra shared by every protocol in the crate.
//!
//! Positions are stored 0-based. Everything user-facing (transcripts, CLI
//! output, golden-vector diagnostics) numbers positions from 1, so position
//! `k` in a report is element `k - 1` of the underlying vector.
//!
//! The randomness here is for simulation only. [`RandomSource`] is a seeded
//! ChaCha8 stream so that every session is reproducible bit for bit; it is
//! not meant to produce key material for real use.

use std::fmt;
use std::ops::{BitXor, Index, Not};
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// A single binary digit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Bit(bool);

impl Bit {
    pub const ZERO: Bit = Bit(false);
    pub const ONE: Bit = Bit(true);

    pub const fn new(value: bool) -> Self {
        Bit(value)
    }

    pub const fn is_one(self) -> bool {
        self.0
    }

    pub const fn as_u8(self) -> u8 {
        self.0 as u8
    }

    pub fn to_char(self) -> char {
        if self.0 {
            '1'
        } else {
            '0'
        }
    }

    pub fn from_char(c: char) -> Option<Bit> {
        match c {
            '0' => Some(Bit::ZERO),
            '1' => Some(Bit::ONE),
            _ => None,
        }
    }
}

impl From<bool> for Bit {
    fn from(value: bool) -> Self {
        Bit(value)
    }
}

impl From<Bit> for bool {
    fn from(bit: Bit) -> Self {
        bit.0
    }
}

impl BitXor for Bit {
    type Output = Bit;

    fn bitxor(self, rhs: Bit) -> Bit {
        Bit(self.0 ^ rhs.0)
    }
}

impl Not for Bit {
    type Output = Bit;

    fn not(self) -> Bit {
        Bit(!self.0)
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_char())
    }
}

/// The selector `f(z, x, y)`: `x` when `z = 0`, `y` when `z = 1`.
pub fn select(z: Bit, x: Bit, y: Bit) -> Bit {
    if z.is_one() {
        y
    } else {
        x
    }
}

/// Fixed-length sequence of bits. Textual form is a run of `0`/`1`
/// characters with position 1 first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitString {
    bits: Vec<Bit>,
}

impl BitString {
    pub fn new(bits: Vec<Bit>) -> Self {
        BitString { bits }
    }

    pub fn zeros(len: usize) -> Self {
        BitString {
            bits: vec![Bit::ZERO; len],
        }
    }

    pub fn ones(len: usize) -> Self {
        BitString {
            bits: vec![Bit::ONE; len],
        }
    }

    pub fn from_fn(len: usize, f: impl FnMut(usize) -> Bit) -> Self {
        BitString {
            bits: (0..len).map(f).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// 0-based access.
    pub fn get(&self, index: usize) -> Option<Bit> {
        self.bits.get(index).copied()
    }

    pub fn set(&mut self, index: usize, bit: Bit) {
        self.bits[index] = bit;
    }

    pub fn push(&mut self, bit: Bit) {
        self.bits.push(bit);
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = Bit> + '_ {
        self.bits.iter().copied()
    }

    pub fn as_slice(&self) -> &[Bit] {
        &self.bits
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|b| b.is_one()).count()
    }

    /// 0-based positions holding a one.
    pub fn ones_positions(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(k, b)| b.is_one().then_some(k))
            .collect()
    }

    /// Elementwise XOR.
    pub fn xor(&self, other: &BitString) -> Result<BitString> {
        check_len(self, other)?;
        Ok(self.zip_map(other, |a, b| a ^ b))
    }

    pub fn complement(&self) -> BitString {
        BitString {
            bits: self.bits.iter().map(|&b| !b).collect(),
        }
    }

    /// Keeps the bits at the given 0-based positions, in the order given.
    pub fn restrict(&self, positions: &[usize]) -> BitString {
        BitString {
            bits: positions.iter().map(|&k| self.bits[k]).collect(),
        }
    }

    /// Number of positions where the two strings differ.
    pub fn hamming_distance(&self, other: &BitString) -> Result<usize> {
        check_len(self, other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    fn zip_map(&self, other: &BitString, f: impl Fn(Bit, Bit) -> Bit) -> BitString {
        BitString {
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }
}

fn check_len(a: &BitString, b: &BitString) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

/// Elementwise [`select`] over three equal-length strings.
pub fn select_strings(z: &BitString, x: &BitString, y: &BitString) -> Result<BitString> {
    check_len(z, x)?;
    check_len(z, y)?;
    Ok(BitString::from_fn(z.len(), |k| {
        select(z.bits[k], x.bits[k], y.bits[k])
    }))
}

impl Index<usize> for BitString {
    type Output = Bit;

    fn index(&self, index: usize) -> &Bit {
        &self.bits[index]
    }
}

impl FromIterator<Bit> for BitString {
    fn from_iter<I: IntoIterator<Item = Bit>>(iter: I) -> Self {
        BitString {
            bits: iter.into_iter().collect(),
        }
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits.iter().map(|b| b.to_char()).collect();
        f.write_str(&s)
    }
}

impl FromStr for BitString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .enumerate()
            .map(|(k, c)| {
                Bit::from_char(c).ok_or(Error::InvalidBit {
                    position: k + 1,
                    found: c,
                })
            })
            .collect::<Result<Vec<_>>>()
            .map(BitString::new)
    }
}

/// Anything that can hand out fair coin flips. Measurement in a conjugate
/// basis draws from one of these.
pub trait BitSource {
    fn next_bit(&mut self) -> Bit;
}

/// Deterministic seeded generator. The algorithm is fixed to ChaCha8 with
/// `seed_from_u64` key expansion, which is specified independently of the
/// host platform.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub const ALGORITHM: &'static str = "chacha8";

    pub fn new(seed: u64) -> Self {
        RandomSource {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Source for one party of one trial. The seed is
    /// `mix(mix(mix(master) ^ stream) ^ fnv1a(tag))` where `mix` is the
    /// SplitMix64 finalizer.
    pub fn derive(master: u64, stream: u64, tag: &str) -> Self {
        RandomSource::new(derive_seed(master, stream, tag))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// True with probability `p`. Draws nothing when `p` is 0 or 1.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        if p <= 0.0 {
            false
        } else if p >= 1.0 {
            true
        } else {
            self.rng.random_bool(p)
        }
    }

    /// `amount` distinct positions out of `0..len`, in ascending order.
    pub fn sample_positions(&mut self, len: usize, amount: usize) -> Vec<usize> {
        let mut picked = index::sample(&mut self.rng, len, amount).into_vec();
        picked.sort_unstable();
        picked
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl BitSource for RandomSource {
    fn next_bit(&mut self) -> Bit {
        Bit((self.rng.next_u32() >> 31) == 1)
    }
}

/// Replays a fixed list of coin outcomes; used to pin the outcomes of
/// conjugate-basis measurements in worked examples.
#[derive(Clone, Debug)]
pub struct ScriptedBits {
    bits: Vec<Bit>,
    cursor: usize,
}

impl ScriptedBits {
    pub fn new(bits: impl IntoIterator<Item = Bit>) -> Self {
        ScriptedBits {
            bits: bits.into_iter().collect(),
            cursor: 0,
        }
    }

    pub fn consumed(&self) -> usize {
        self.cursor
    }

    pub fn remaining(&self) -> usize {
        self.bits.len() - self.cursor
    }
}

impl BitSource for ScriptedBits {
    fn next_bit(&mut self) -> Bit {
        let bit = *self
            .bits
            .get(self.cursor)
            .expect("scripted coin outcomes exhausted");
        self.cursor += 1;
        bit
    }
}

/// `n` fresh bits from `src`.
pub fn random_bitstring(src: &mut impl BitSource, n: usize) -> BitString {
    (0..n).map(|_| src.next_bit()).collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

pub fn derive_seed(master: u64, stream: u64, tag: &str) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ fnv1a(tag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn all_strings(len: usize) -> Vec<BitString> {
        (0..1u32 << len)
            .map(|v| BitString::from_fn(len, |k| Bit::new((v >> k) & 1 == 1)))
            .collect()
    }

    #[test]
    fn xor_matches_worked_example() {
        assert_eq!(
            bs("10100000").xor(&bs("11000110")).unwrap(),
            bs("01100110")
        );
    }

    #[test]
    fn xor_identity_and_self_inverse() {
        let a = bs("01101100");
        assert_eq!(a.xor(&BitString::zeros(8)).unwrap(), a);
        assert_eq!(a.xor(&a).unwrap(), BitString::zeros(8));
    }

    #[test]
    fn xor_length_mismatch_names_both_lengths() {
        let err = bs("101").xor(&bs("10")).unwrap_err();
        assert_eq!(err, Error::LengthMismatch { left: 3, right: 2 });
        assert!(err.to_string().contains('3') && err.to_string().contains('2'));
    }

    #[test]
    fn complement_examples() {
        assert_eq!(bs("01100110").complement(), bs("10011001"));
        assert_eq!(bs("00000000").complement(), bs("11111111"));
        let a = bs("1101001");
        assert_eq!(a.complement().complement(), a);
    }

    #[test]
    fn select_definition() {
        assert_eq!(select(Bit::ZERO, Bit::ONE, Bit::ZERO), Bit::ONE);
        assert_eq!(select(Bit::ONE, Bit::ONE, Bit::ZERO), Bit::ZERO);
        for z in [Bit::ZERO, Bit::ONE] {
            for c in [Bit::ZERO, Bit::ONE] {
                assert_eq!(select(z, c, c), c);
            }
        }
    }

    #[test]
    fn select_is_linear_form_exhaustive() {
        for v in 0..8u8 {
            let (z, x, y) = (
                Bit::new(v & 1 == 1),
                Bit::new(v & 2 == 2),
                Bit::new(v & 4 == 4),
            );
            let and = |p: Bit, q: Bit| Bit::new(p.is_one() && q.is_one());
            assert_eq!(select(z, x, y), and(!z, x) ^ and(z, y));
        }
    }

    #[test]
    fn select_strings_examples() {
        let x = bs("10110");
        let y = bs("01011");
        assert_eq!(select_strings(&BitString::zeros(5), &x, &y).unwrap(), x);
        assert_eq!(select_strings(&BitString::ones(5), &x, &y).unwrap(), y);
        assert!(select_strings(&BitString::zeros(4), &x, &y).is_err());
    }

    #[test]
    fn select_strings_recovers_worked_key_i_for_any_star_fill() {
        // a = **101**0 and b = 10***00*; every star assignment gives the same result.
        let l = bs("11000110");
        let y = bs("11000101");
        for fill in 0..256u32 {
            let star = |n: u32| Bit::new((fill >> n) & 1 == 1);
            let a: BitString = [star(0), star(1), Bit::ONE, Bit::ZERO, Bit::ONE, star(2), star(3), Bit::ZERO]
                .into_iter()
                .collect();
            let b: BitString = [Bit::ONE, Bit::ZERO, star(4), star(5), star(6), Bit::ZERO, Bit::ZERO, star(7)]
                .into_iter()
                .collect();
            let by = b.xor(&y).unwrap();
            assert_eq!(select_strings(&l, &a, &by).unwrap(), bs("01101100"));
        }
    }

    #[test]
    fn xor_group_laws_exhaustive_small() {
        for len in 0..=3 {
            let strings = all_strings(len);
            for a in &strings {
                for b in &strings {
                    let ab = a.xor(b).unwrap();
                    assert_eq!(ab, b.xor(a).unwrap());
                    assert_eq!(ab.xor(b).unwrap(), *a);
                    for c in &strings {
                        assert_eq!(
                            ab.xor(c).unwrap(),
                            a.xor(&b.xor(c).unwrap()).unwrap()
                        );
                    }
                }
            }
        }
    }

    fn arb_triple() -> impl Strategy<Value = (BitString, BitString, BitString)> {
        (0usize..=64).prop_flat_map(|n| {
            let s = || proptest::collection::vec(any::<bool>(), n)
                .prop_map(|v| v.into_iter().map(Bit::new).collect::<BitString>());
            (s(), s(), s())
        })
    }

    proptest! {
        #[test]
        fn xor_group_laws_random((a, b, c) in arb_triple()) {
            prop_assert_eq!(a.xor(&b).unwrap(), b.xor(&a).unwrap());
            prop_assert_eq!(
                a.xor(&b).unwrap().xor(&c).unwrap(),
                a.xor(&b.xor(&c).unwrap()).unwrap()
            );
            prop_assert_eq!(a.xor(&a).unwrap(), BitString::zeros(a.len()));
        }

        #[test]
        fn text_form_round_trips((a, _, _) in arb_triple()) {
            prop_assert_eq!(a.to_string().parse::<BitString>().unwrap(), a);
        }
    }

    #[test]
    fn parse_rejects_bad_characters() {
        assert_eq!(
            "01x".parse::<BitString>().unwrap_err(),
            Error::InvalidBit { position: 3, found: 'x' }
        );
    }

    #[test]
    fn random_bitstring_is_reproducible() {
        assert!(random_bitstring(&mut RandomSource::new(42), 0).is_empty());
        let a = random_bitstring(&mut RandomSource::new(42), 8);
        let b = random_bitstring(&mut RandomSource::new(42), 8);
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
    }

    #[test]
    fn random_bitstring_is_balanced() {
        let n = 100_000;
        let ones = random_bitstring(&mut RandomSource::new(42), n).count_ones();
        let frac = ones as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.01, "fraction of ones {frac}");
    }

    #[test]
    fn derived_seeds_differ_by_stream_and_tag() {
        let a = derive_seed(7, 0, "alice");
        assert_eq!(a, derive_seed(7, 0, "alice"));
        assert_ne!(a, derive_seed(7, 1, "alice"));
        assert_ne!(a, derive_seed(7, 0, "bob"));
        assert_ne!(a, derive_seed(8, 0, "alice"));
    }

    #[test]
    fn scripted_bits_replay_in_order() {
        let mut s = ScriptedBits::new([Bit::ONE, Bit::ZERO]);
        assert_eq!(s.next_bit(), Bit::ONE);
        assert_eq!(s.next_bit(), Bit::ZERO);
        assert_eq!(s.remaining(), 0);
        assert_eq!(s.consumed(), 2);
    }
}
