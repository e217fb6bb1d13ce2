//! Lossless residual, conditional and conditional-residual coders.
//!
//! All three use static frequency tables derived from the exact pixel model
//! and a byte-oriented range coder. The conditional coders select a table by
//! the quantized prediction `Xhat_p`.
//!
//! Bitstream layout (little-endian):
//!
//! | offset | size | field                                              |
//! |--------|------|----------------------------------------------------|
//! | 0      | 4    | magic `CRLB`                                       |
//! | 4      | 1    | version (1)                                        |
//! | 5      | 1    | paradigm: 0 residual, 1 conditional, 2 cond. resid. |
//! | 6      | 2    | alphabet size `M`                                  |
//! | 8      | 8    | symbol count `n`                                   |
//! | 16     | ...  | range-coder payload, empty when `n = 0`            |
//!
//! The payload is produced by a range coder with a 64-bit `low`, a 32-bit
//! `range`, frequency totals of `2^16`, byte-wise renormalization while
//! `range < 2^24`, and carry propagation through a cached byte plus a count
//! of pending `0xFF` bytes. The encoder emits its cached byte before the first
//! shifted byte and flushes with five shifts, so the decoder primes itself
//! with five bytes and consumes exactly one byte per renormalization.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pixel::{build_joint, PixelModelParams, Quantizer, R, X, XHAT_P};

pub const MAGIC: [u8; 4] = *b"CRLB";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 16;
pub const TOTAL_BITS: u32 = 16;
pub const TOTAL: u32 = 1 << TOTAL_BITS;
const TOP: u32 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Paradigm {
    Residual = 0,
    Conditional = 1,
    CondRes = 2,
}

impl Paradigm {
    pub const ALL: [Paradigm; 3] = [Paradigm::Residual, Paradigm::Conditional, Paradigm::CondRes];

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Paradigm::Residual),
            1 => Ok(Paradigm::Conditional),
            2 => Ok(Paradigm::CondRes),
            _ => Err(Error::Format(format!("unknown paradigm byte {b}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::Residual => "residual",
            Paradigm::Conditional => "conditional",
            Paradigm::CondRes => "condres",
        }
    }

    /// Whether the coded symbol is the residual `x - x_p`.
    pub fn codes_residual(self) -> bool {
        self != Paradigm::Conditional
    }

    /// Whether tables are selected by `Xhat_p`.
    pub fn uses_context(self) -> bool {
        self != Paradigm::Residual
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Paradigm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "residual" => Ok(Paradigm::Residual),
            "conditional" => Ok(Paradigm::Conditional),
            "condres" | "conditional-residual" => Ok(Paradigm::CondRes),
            _ => Err(Error::InvalidParameter(format!(
                "unknown paradigm `{s}` (expected residual, conditional or condres)"
            ))),
        }
    }
}

/// Symbol counts summing to [`TOTAL`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FreqTable {
    counts: Vec<u32>,
    cum: Vec<u32>,
}

impl FreqTable {
    /// Quantizes a distribution: `floor(p * T)`, at least 1 for every symbol
    /// with positive probability, then repaired to sum to `T` by largest
    /// remainder (or by trimming the most over-allocated symbols).
    pub fn from_probs(probs: &[f64]) -> Result<Self> {
        let support = probs.iter().filter(|&&p| p > 0.0).count();
        if support == 0 {
            return Err(Error::InvalidDistribution("frequency table has no mass".into()));
        }
        if support > TOTAL as usize {
            return Err(Error::InvalidParameter(format!(
                "{support} symbols do not fit a total of {TOTAL}"
            )));
        }
        let mass: f64 = probs.iter().sum();
        let ideal: Vec<f64> = probs.iter().map(|&p| p / mass * TOTAL as f64).collect();
        let mut counts: Vec<u32> = probs
            .iter()
            .zip(&ideal)
            .map(|(&p, &t)| if p > 0.0 { (t.floor() as u32).max(1) } else { 0 })
            .collect();
        let mut sum: i64 = counts.iter().map(|&c| c as i64).sum();
        while sum < TOTAL as i64 {
            let k = (0..counts.len())
                .filter(|&k| probs[k] > 0.0)
                .max_by(|&a, &b| {
                    let ra = ideal[a] - counts[a] as f64;
                    let rb = ideal[b] - counts[b] as f64;
                    ra.total_cmp(&rb).then(b.cmp(&a))
                })
                .expect("nonempty support");
            counts[k] += 1;
            sum += 1;
        }
        while sum > TOTAL as i64 {
            let k = (0..counts.len())
                .filter(|&k| counts[k] > 1)
                .max_by(|&a, &b| {
                    let ea = counts[a] as f64 - ideal[a];
                    let eb = counts[b] as f64 - ideal[b];
                    ea.total_cmp(&eb).then(b.cmp(&a))
                })
                .expect("some count above one");
            counts[k] -= 1;
            sum -= 1;
        }
        Ok(Self::from_counts(counts))
    }

    fn from_counts(counts: Vec<u32>) -> Self {
        let mut cum = Vec::with_capacity(counts.len() + 1);
        let mut acc = 0;
        cum.push(0);
        for &c in &counts {
            acc += c;
            cum.push(acc);
        }
        FreqTable { counts, cum }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Symbol whose cumulative interval contains `target`.
    fn find(&self, target: u32) -> usize {
        self.cum.partition_point(|&c| c <= target) - 1
    }

    /// Cross-entropy in bits of `probs` under this table.
    pub fn cross_entropy(&self, probs: &[f64]) -> f64 {
        probs
            .iter()
            .zip(&self.counts)
            .filter(|(&p, _)| p > 0.0)
            .map(|(&p, &c)| -p * (c as f64 / TOTAL as f64).log2())
            .sum()
    }
}

/// Static model of one paradigm on one pixel model.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityModel {
    paradigm: Paradigm,
    alphabet_size: usize,
    quantizer: Quantizer,
    tables: Vec<FreqTable>,
    /// Table index for each prediction value `x_p`.
    context_of: Vec<u32>,
}

impl ProbabilityModel {
    pub fn from_pixel_model(params: &PixelModelParams, paradigm: Paradigm) -> Result<Self> {
        let joint = build_joint(params)?;
        let m = params.alphabet_size;
        let quantizer = params.quantizer();
        let target = if paradigm.codes_residual() { R } else { X };
        let symbols = joint.alphabet(target)?.clone();
        let offset = if paradigm.codes_residual() { m as i64 - 1 } else { 0 };
        let width = if paradigm.codes_residual() { 2 * m - 1 } else { m };
        // Dense position of every alphabet entry.
        let position: Vec<usize> = (0..symbols.len())
            .map(|i| (symbols.value(i) as i64 + offset) as usize)
            .collect();

        let (tables, context_of) = if paradigm.uses_context() {
            let pair = joint.marginalize(&[target, XHAT_P])?;
            let xhat = pair.alphabet(XHAT_P)?.clone();
            let mut dense = vec![vec![0.0; width]; xhat.len()];
            let codes_t = pair.atom_codes(target)?;
            let codes_c = pair.atom_codes(XHAT_P)?;
            for ((&t, &c), &p) in codes_t.iter().zip(codes_c).zip(pair.atom_probs()) {
                dense[c as usize][position[t as usize]] += p;
            }
            let tables = dense
                .iter()
                .map(|probs| FreqTable::from_probs(probs))
                .collect::<Result<Vec<_>>>()?;
            let pixels = params.pixel_alphabet(X);
            let context_of = (0..m)
                .map(|x_p| {
                    let value = quantizer.reconstruct(pixels.symbol(x_p));
                    xhat.index_of(&value)
                        .map(|i| i as u32)
                        .ok_or_else(|| Error::UnknownSymbol(value.to_string()))
                })
                .collect::<Result<Vec<_>>>()?;
            (tables, context_of)
        } else {
            let marginal = joint.marginalize(&[target])?;
            let mut probs = vec![0.0; width];
            for (&t, &p) in marginal.atom_codes(target)?.iter().zip(marginal.atom_probs()) {
                probs[position[t as usize]] += p;
            }
            (vec![FreqTable::from_probs(&probs)?], vec![0; m])
        };
        Ok(ProbabilityModel {
            paradigm,
            alphabet_size: m,
            quantizer,
            tables,
            context_of,
        })
    }

    pub fn paradigm(&self) -> Paradigm {
        self.paradigm
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn quantizer(&self) -> Quantizer {
        self.quantizer
    }

    pub fn tables(&self) -> &[FreqTable] {
        &self.tables
    }

    /// Table index and dense symbol index of one pixel.
    fn locate(&self, x: u32, x_p: u32) -> (usize, usize) {
        let context = self.context_of[x_p as usize] as usize;
        let symbol = if self.paradigm.codes_residual() {
            (x as i64 - x_p as i64 + self.alphabet_size as i64 - 1) as usize
        } else {
            x as usize
        };
        (context, symbol)
    }

    fn symbol_value(&self, symbol: usize) -> i64 {
        if self.paradigm.codes_residual() {
            symbol as i64 - (self.alphabet_size as i64 - 1)
        } else {
            symbol as i64
        }
    }
}

/// Range encoder over 16-bit frequency tables.
#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    range: u32,
    cache: u8,
    pending: u64,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            range: u32::MAX,
            cache: 0,
            pending: 1,
            out: Vec::new(),
        }
    }

    /// Codes the interval `[cum, cum + freq)` of a total of `2^16`.
    pub fn encode(&mut self, cum: u32, freq: u32) {
        debug_assert!(freq > 0 && cum + freq <= TOTAL);
        let r = self.range >> TOTAL_BITS;
        self.low += r as u64 * cum as u64;
        self.range = r * freq;
        while self.range < TOP {
            self.range <<= 8;
            self.shift_low();
        }
    }

    fn shift_low(&mut self) {
        if (self.low as u32) < 0xFF00_0000 || (self.low >> 32) != 0 {
            let carry = (self.low >> 32) as u8;
            let mut byte = self.cache;
            loop {
                self.out.push(byte.wrapping_add(carry));
                byte = 0xFF;
                self.pending -= 1;
                if self.pending == 0 {
                    break;
                }
            }
            self.cache = (self.low >> 24) as u8;
        }
        self.pending += 1;
        self.low = (self.low & 0x00FF_FFFF) << 8;
    }

    pub fn finish(mut self) -> Vec<u8> {
        for _ in 0..5 {
            self.shift_low();
        }
        self.out
    }
}

/// Range decoder matching [`RangeEncoder`].
#[derive(Debug)]
pub struct RangeDecoder<'a> {
    code: u32,
    range: u32,
    input: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(input: &'a [u8]) -> Result<Self> {
        let mut dec = RangeDecoder {
            code: 0,
            range: u32::MAX,
            input,
            pos: 0,
        };
        for _ in 0..5 {
            dec.code = (dec.code << 8) | dec.next_byte()? as u32;
        }
        Ok(dec)
    }

    fn next_byte(&mut self) -> Result<u8> {
        let b = *self
            .input
            .get(self.pos)
            .ok_or_else(|| Error::Integrity("payload truncated".into()))?;
        self.pos += 1;
        Ok(b)
    }

    pub fn decode(&mut self, table: &FreqTable) -> Result<usize> {
        let r = self.range >> TOTAL_BITS;
        let target = self.code / r;
        if target >= TOTAL {
            return Err(Error::Integrity("code value outside the coding interval".into()));
        }
        let symbol = table.find(target);
        let (cum, freq) = (table.cum[symbol], table.counts[symbol]);
        if freq == 0 {
            return Err(Error::Integrity("decoded a zero-frequency symbol".into()));
        }
        self.code -= r * cum;
        self.range = r * freq;
        while self.range < TOP {
            self.code = (self.code << 8) | self.next_byte()? as u32;
            self.range <<= 8;
        }
        Ok(symbol)
    }

    /// Bytes not yet consumed.
    pub fn remaining(&self) -> usize {
        self.input.len() - self.pos
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bitstream {
    pub paradigm: Paradigm,
    pub alphabet_size: u16,
    pub n: u64,
    pub payload: Vec<u8>,
}

impl Bitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&MAGIC);
        out.push(VERSION);
        out.push(self.paradigm as u8);
        out.extend_from_slice(&self.alphabet_size.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Format(format!(
                "stream of {} bytes is shorter than the {HEADER_LEN}-byte header",
                bytes.len()
            )));
        }
        if bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Format(format!("unsupported version {}", bytes[4])));
        }
        let paradigm = Paradigm::from_byte(bytes[5])?;
        let alphabet_size = u16::from_le_bytes([bytes[6], bytes[7]]);
        let n = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        Ok(Bitstream {
            paradigm,
            alphabet_size,
            n,
            payload: bytes[HEADER_LEN..].to_vec(),
        })
    }
}

fn check_model(model: &ProbabilityModel, paradigm: Paradigm) -> Result<()> {
    if model.paradigm != paradigm {
        return Err(Error::Format(format!(
            "stream paradigm {paradigm} does not match the {} model",
            model.paradigm
        )));
    }
    if model.alphabet_size > u16::MAX as usize {
        return Err(Error::InvalidParameter(format!(
            "alphabet size {} does not fit the header",
            model.alphabet_size
        )));
    }
    Ok(())
}

/// Encodes `(x, x_p)` pairs. The conditional coders derive the context
/// `Xhat_p` from `x_p` with the model's quantizer.
pub fn encode(seq: &[(u32, u32)], paradigm: Paradigm, model: &ProbabilityModel) -> Result<Bitstream> {
    check_model(model, paradigm)?;
    let m = model.alphabet_size as u32;
    let mut enc = RangeEncoder::new();
    for &(x, x_p) in seq {
        if x >= m || x_p >= m {
            return Err(Error::InvalidParameter(format!(
                "pixel pair ({x}, {x_p}) outside 0..{m}"
            )));
        }
        let (context, symbol) = model.locate(x, x_p);
        let table = &model.tables[context];
        let freq = table.counts[symbol];
        if freq == 0 {
            return Err(Error::ModelCoverage {
                context,
                symbol: model.symbol_value(symbol),
            });
        }
        enc.encode(table.cum[symbol], freq);
    }
    let payload = if seq.is_empty() { Vec::new() } else { enc.finish() };
    Ok(Bitstream {
        paradigm,
        alphabet_size: m as u16,
        n: seq.len() as u64,
        payload,
    })
}

/// Decodes a stream given the predictions, which both sides know.
pub fn decode(bs: &Bitstream, x_p_seq: &[u32], model: &ProbabilityModel) -> Result<Vec<u32>> {
    check_model(model, bs.paradigm)?;
    if bs.alphabet_size as usize != model.alphabet_size {
        return Err(Error::Format(format!(
            "stream alphabet size {} does not match the model's {}",
            bs.alphabet_size, model.alphabet_size
        )));
    }
    if x_p_seq.len() as u64 != bs.n {
        return Err(Error::InvalidParameter(format!(
            "stream holds {} symbols but {} predictions were supplied",
            bs.n,
            x_p_seq.len()
        )));
    }
    if bs.n == 0 {
        if !bs.payload.is_empty() {
            return Err(Error::Integrity("payload present in an empty stream".into()));
        }
        return Ok(Vec::new());
    }
    let m = model.alphabet_size as i64;
    let mut dec = RangeDecoder::new(&bs.payload)?;
    let mut out = Vec::with_capacity(x_p_seq.len());
    for &x_p in x_p_seq {
        if x_p as i64 >= m {
            return Err(Error::InvalidParameter(format!("prediction {x_p} outside 0..{m}")));
        }
        let context = model.context_of[x_p as usize] as usize;
        let symbol = dec.decode(&model.tables[context])?;
        let x = if model.paradigm.codes_residual() {
            model.symbol_value(symbol) + x_p as i64
        } else {
            symbol as i64
        };
        if !(0..m).contains(&x) {
            return Err(Error::Integrity(format!("decoded pixel {x} outside 0..{m}")));
        }
        out.push(x as u32);
    }
    if dec.remaining() != 0 {
        return Err(Error::Integrity(format!(
            "{} trailing payload bytes",
            dec.remaining()
        )));
    }
    Ok(out)
}

/// Payload bits per symbol.
pub fn measure_rate(bs: &Bitstream, n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("rate of an empty sequence".into()));
    }
    Ok(8.0 * bs.payload.len() as f64 / n as f64)
}

/// Draws `n` independent `(x, x_p)` pairs from the pixel model.
pub fn sample_pixels(params: &PixelModelParams, n: usize, seed: u64) -> Result<Vec<(u32, u32)>> {
    params.validate()?;
    let m = params.alphabet_size as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let x = rng.random_range(0..m);
            let x_p = if rng.random_bool(params.occlusion_prob) {
                rng.random_range(0..m)
            } else {
                x
            };
            (x, x_p)
        })
        .collect())
}

/// The entropy a paradigm's ideal coder achieves on the pixel model.
pub fn target_entropy(report: &crate::pixel::EntropyReport, paradigm: Paradigm) -> f64 {
    match paradigm {
        Paradigm::Residual => report.h_r.value(),
        Paradigm::Conditional => report.h_x_given_xphat.value(),
        Paradigm::CondRes => report.h_r_given_xphat.value(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pixel::entropy_report;
    use num_rational::Rational64;
    use proptest::prelude::{any, prop, prop_assert_eq, prop_assume, proptest, ProptestConfig};

    fn params(m: usize, p: f64, q: i64) -> PixelModelParams {
        PixelModelParams::new(m, p, Rational64::from_integer(q)).unwrap()
    }

    fn round_trip(params: &PixelModelParams, paradigm: Paradigm, n: usize, seed: u64) -> (Bitstream, f64) {
        let model = ProbabilityModel::from_pixel_model(params, paradigm).unwrap();
        let seq = sample_pixels(params, n, seed).unwrap();
        let bs = encode(&seq, paradigm, &model).unwrap();
        let bytes = bs.to_bytes();
        let back = Bitstream::from_bytes(&bytes).unwrap();
        let preds: Vec<u32> = seq.iter().map(|&(_, xp)| xp).collect();
        let xs = decode(&back, &preds, &model).unwrap();
        assert!(xs.iter().zip(&seq).all(|(a, (b, _))| a == b));
        let rate = if n > 0 { measure_rate(&bs, n as u64).unwrap() } else { 0.0 };
        (bs, rate)
    }

    #[test]
    fn tables_sum_to_total_and_cover_support() {
        let probs = [0.5, 1e-9, 0.0, 0.25, 0.25 - 1e-9];
        let t = FreqTable::from_probs(&probs).unwrap();
        assert_eq!(t.counts().iter().sum::<u32>(), TOTAL);
        assert_eq!(t.counts()[2], 0);
        assert!(t.counts()[1] >= 1);
        let many: Vec<f64> = (0..511).map(|k| if k == 255 { 0.9 } else { 0.1 / 510.0 }).collect();
        let t = FreqTable::from_probs(&many).unwrap();
        assert_eq!(t.counts().iter().sum::<u32>(), TOTAL);
        assert!(t.counts().iter().all(|&c| c >= 1));
    }

    #[test]
    fn empty_sequence_is_header_only() {
        let (bs, _) = round_trip(&params(16, 0.5, 2), Paradigm::CondRes, 0, 1);
        assert!(bs.payload.is_empty());
        assert_eq!(bs.to_bytes().len(), HEADER_LEN);
    }

    #[test]
    fn header_layout_is_little_endian() {
        let bs = Bitstream {
            paradigm: Paradigm::Conditional,
            alphabet_size: 256,
            n: 0x0102,
            payload: vec![9],
        };
        assert_eq!(
            bs.to_bytes(),
            vec![b'C', b'R', b'L', b'B', 1, 1, 0, 1, 2, 1, 0, 0, 0, 0, 0, 0, 9]
        );
    }

    #[test]
    fn perfect_prediction_costs_almost_nothing() {
        let (_, rate) = round_trip(&params(256, 0.0, 2), Paradigm::CondRes, 100_000, 7);
        assert!(rate < 0.01, "{rate}");
    }

    #[test]
    fn uncorrelated_residual_rate() {
        let (_, rate) = round_trip(&params(256, 1.0, 1), Paradigm::Residual, 100_000, 7);
        assert!((8.72..=8.90).contains(&rate), "{rate}");
    }

    #[test]
    fn rates_track_entropies() {
        let p = params(256, 0.5, 2);
        let report = entropy_report(&p).unwrap();
        for paradigm in Paradigm::ALL {
            let (_, rate) = round_trip(&p, paradigm, 100_000, 11);
            let h = target_entropy(&report, paradigm);
            assert!((rate - h).abs() <= 0.02 * h, "{paradigm}: {rate} vs {h}");
        }
    }

    #[test]
    fn corrupted_streams_are_rejected() {
        let p = params(16, 0.5, 2);
        let model = ProbabilityModel::from_pixel_model(&p, Paradigm::CondRes).unwrap();
        let seq = sample_pixels(&p, 10_000, 3).unwrap();
        let preds: Vec<u32> = seq.iter().map(|&(_, xp)| xp).collect();
        let bs = encode(&seq, Paradigm::CondRes, &model).unwrap();

        let mut bytes = bs.to_bytes();
        bytes[5] = 1;
        let wrong = Bitstream::from_bytes(&bytes).unwrap();
        assert!(matches!(decode(&wrong, &preds, &model), Err(Error::Format(_))));
        bytes[5] = 7;
        assert!(matches!(Bitstream::from_bytes(&bytes), Err(Error::Format(_))));
        assert!(matches!(Bitstream::from_bytes(b"CRLX"), Err(Error::Format(_))));

        let mut cut = bs.clone();
        cut.payload.truncate(cut.payload.len() - 1);
        assert!(matches!(decode(&cut, &preds, &model), Err(Error::Integrity(_))));
        let mut long = bs.clone();
        long.payload.push(0);
        assert!(matches!(decode(&long, &preds, &model), Err(Error::Integrity(_))));
    }

    #[test]
    fn unmodelled_symbols_are_refused() {
        let p = params(16, 0.0, 1);
        let model = ProbabilityModel::from_pixel_model(&p, Paradigm::CondRes).unwrap();
        let err = encode(&[(3, 5)], Paradigm::CondRes, &model).unwrap_err();
        assert!(matches!(err, Error::ModelCoverage { symbol: -2, .. }), "{err}");
        assert!(encode(&[(16, 0)], Paradigm::CondRes, &model).is_err());
        assert!(encode(&[(1, 1)], Paradigm::Residual, &model).is_err());
    }

    #[test]
    fn measure_rate_arithmetic() {
        let bs = Bitstream {
            paradigm: Paradigm::Residual,
            alphabet_size: 2,
            n: 1000,
            payload: vec![0; 125],
        };
        assert_eq!(measure_rate(&bs, 1000).unwrap(), 1.0);
        assert!(measure_rate(&bs, 0).is_err());
    }

    #[test]
    fn carries_propagate_through_runs_of_ff() {
        // Skewed tables push `low` against the carry boundary often.
        let table = FreqTable::from_probs(&[1e-4, 0.9998, 1e-4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let symbols: Vec<usize> = (0..50_000)
            .map(|_| match rng.random_range(0..10_000) {
                0 => 0,
                1 => 2,
                _ => 1,
            })
            .collect();
        let mut enc = RangeEncoder::new();
        for &s in &symbols {
            enc.encode(table.cum[s], table.counts[s]);
        }
        let bytes = enc.finish();
        let mut dec = RangeDecoder::new(&bytes).unwrap();
        for &s in &symbols {
            assert_eq!(dec.decode(&table).unwrap(), s);
        }
        assert_eq!(dec.remaining(), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn round_trips_any_model(m in 2usize..40, p in 0.0f64..=1.0, q in 1i64..6, n in 0usize..400, seed in any::<u64>(), which in 0usize..3) {
            round_trip(&params(m, p, q), Paradigm::ALL[which], n, seed);
        }

        #[test]
        fn range_coder_round_trips(weights in prop::collection::vec(0u32..50, 2..20), picks in prop::collection::vec(any::<u16>(), 0..500)) {
            let total: u32 = weights.iter().sum();
            prop_assume!(total > 0);
            let probs: Vec<f64> = weights.iter().map(|&w| w as f64 / total as f64).collect();
            let table = FreqTable::from_probs(&probs).unwrap();
            let support: Vec<usize> = (0..probs.len()).filter(|&k| probs[k] > 0.0).collect();
            let symbols: Vec<usize> = picks.iter().map(|&r| support[r as usize % support.len()]).collect();
            let mut enc = RangeEncoder::new();
            for &s in &symbols {
                enc.encode(table.cum[s], table.counts[s]);
            }
            let bytes = enc.finish();
            let mut dec = RangeDecoder::new(&bytes).unwrap();
            for &s in &symbols {
                prop_assert_eq!(dec.decode(&table).unwrap(), s);
            }
            prop_assert_eq!(dec.remaining(), 0);
        }
    }
}
