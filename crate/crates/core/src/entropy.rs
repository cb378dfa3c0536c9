//! Canonical Huffman coding of codebook index streams.
//!
//! Tables are fully determined by per-symbol code lengths: codes are handed
//! out in (length, symbol) order, so only lengths are stored. Bits are packed
//! MSB-first and the final byte is zero-padded.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const MAX_CODE_LENGTH: u8 = 16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTable {
    lengths: Vec<u8>,
    codes: Vec<u32>,
}

impl HuffmanTable {
    /// Validates code lengths and derives canonical codes.
    pub fn from_lengths(lengths: Vec<u8>) -> Result<Self> {
        if lengths.is_empty() || lengths.len() > u16::MAX as usize {
            return Err(Error::CorruptTable(format!(
                "symbol count {} out of range",
                lengths.len()
            )));
        }
        if let Some(&l) = lengths.iter().find(|&&l| l > MAX_CODE_LENGTH) {
            return Err(Error::CorruptTable(format!("code length {l} exceeds 16")));
        }
        if lengths.iter().all(|&l| l == 0) {
            return Err(Error::CorruptTable("no symbol has a code".into()));
        }
        if kraft_units(&lengths) > 1 << MAX_CODE_LENGTH {
            return Err(Error::CorruptTable("code lengths violate the Kraft inequality".into()));
        }
        let codes = canonical_codes(&lengths);
        Ok(Self { lengths, codes })
    }

    pub fn symbol_count(&self) -> usize {
        self.lengths.len()
    }

    pub fn code_lengths(&self) -> &[u8] {
        &self.lengths
    }

    /// `(code, length)` for a symbol; length 0 means the symbol is unused.
    pub fn code(&self, symbol: usize) -> Option<(u32, u8)> {
        match self.lengths.get(symbol) {
            Some(&l) if l > 0 => Some((self.codes[symbol], l)),
            _ => None,
        }
    }

    /// Kraft sum in units of 2^-16.
    pub fn kraft_units(&self) -> u64 {
        kraft_units(&self.lengths)
    }

    pub fn is_complete(&self) -> bool {
        self.kraft_units() == 1 << MAX_CODE_LENGTH
    }

    /// Symbol count as u16 LE, then one length byte per symbol.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(2 + self.lengths.len());
        out.extend((self.lengths.len() as u16).to_le_bytes());
        out.extend(&self.lengths);
        out
    }

    /// Parses a table from the front of `bytes`, returning it with the number of bytes consumed.
    pub fn deserialize(bytes: &[u8]) -> Result<(Self, usize)> {
        let count = bytes
            .get(..2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]) as usize)
            .ok_or_else(|| Error::CorruptTable("truncated symbol count".into()))?;
        if count == 0 {
            return Err(Error::CorruptTable("zero symbols".into()));
        }
        let lengths = bytes
            .get(2..2 + count)
            .ok_or_else(|| Error::CorruptTable("truncated code lengths".into()))?;
        Ok((Self::from_lengths(lengths.to_vec())?, 2 + count))
    }
}

fn kraft_units(lengths: &[u8]) -> u64 {
    lengths
        .iter()
        .filter(|&&l| l > 0)
        .map(|&l| 1u64 << (MAX_CODE_LENGTH - l))
        .sum()
}

fn canonical_codes(lengths: &[u8]) -> Vec<u32> {
    let mut order: Vec<usize> = (0..lengths.len()).filter(|&s| lengths[s] > 0).collect();
    order.sort_by_key(|&s| (lengths[s], s));
    let mut codes = vec![0u32; lengths.len()];
    let mut code = 0u32;
    let mut prev_len = 0u8;
    for s in order {
        code <<= lengths[s] - prev_len;
        codes[s] = code;
        code += 1;
        prev_len = lengths[s];
    }
    codes
}

pub fn build_table(frequencies: &[u64]) -> Result<HuffmanTable> {
    if frequencies.len() > u16::MAX as usize {
        return Err(Error::CorruptTable(format!(
            "alphabet of {} symbols exceeds 65535",
            frequencies.len()
        )));
    }
    let used: Vec<usize> = (0..frequencies.len())
        .filter(|&s| frequencies[s] > 0)
        .collect();
    if used.is_empty() {
        return Err(Error::EmptyAlphabet);
    }
    let mut lengths = vec![0u8; frequencies.len()];
    if used.len() == 1 {
        lengths[used[0]] = 1;
        return HuffmanTable::from_lengths(lengths);
    }

    // Min-heap keyed by (weight, lowest symbol in subtree, subtree size).
    // Leaves are nodes 0..n, internal nodes get appended with their children.
    struct Node {
        children: Option<(usize, usize)>,
        symbol: usize,
    }
    let mut nodes: Vec<Node> = used
        .iter()
        .map(|&s| Node {
            children: None,
            symbol: s,
        })
        .collect();
    let mut heap: BinaryHeap<Reverse<(u64, usize, usize, usize)>> = used
        .iter()
        .enumerate()
        .map(|(i, &s)| Reverse((frequencies[s], s, 1, i)))
        .collect();
    while heap.len() > 1 {
        let Reverse((w1, s1, n1, a)) = heap.pop().unwrap();
        let Reverse((w2, s2, n2, b)) = heap.pop().unwrap();
        nodes.push(Node {
            children: Some((a, b)),
            symbol: s1.min(s2),
        });
        heap.push(Reverse((w1 + w2, s1.min(s2), n1 + n2, nodes.len() - 1)));
    }

    let root = nodes.len() - 1;
    let mut stack = vec![(root, 0u32)];
    let mut depths = vec![0u32; frequencies.len()];
    while let Some((i, d)) = stack.pop() {
        match nodes[i].children {
            Some((a, b)) => {
                stack.push((a, d + 1));
                stack.push((b, d + 1));
            }
            None => depths[nodes[i].symbol] = d,
        }
    }
    limit_lengths(&mut depths, &used, frequencies);
    for &s in &used {
        lengths[s] = depths[s] as u8;
    }
    HuffmanTable::from_lengths(lengths)
}

/// Clamps lengths to 16 bits and restores the Kraft inequality by lengthening
/// the rarest codes that still have room.
fn limit_lengths(depths: &mut [u32], used: &[usize], frequencies: &[u64]) {
    let max = MAX_CODE_LENGTH as u32;
    if used.iter().all(|&s| depths[s] <= max) {
        return;
    }
    for &s in used {
        depths[s] = depths[s].min(max);
    }
    let budget = 1u64 << max;
    let units = |d: &[u32]| -> u64 { used.iter().map(|&s| 1u64 << (max - d[s])).sum() };
    let mut by_rarity: Vec<usize> = used.to_vec();
    by_rarity.sort_by_key(|&s| (frequencies[s], Reverse(s)));
    while units(depths) > budget {
        // deepest code below the cap, rarest first: lengthening it frees the least
        let victim = by_rarity
            .iter()
            .copied()
            .filter(|&s| depths[s] < max)
            .max_by_key(|&s| depths[s])
            .expect("a 16-bit code always has room for 65535 symbols");
        depths[victim] += 1;
    }
}

/// Packed bit string. `bytes.len() == ceil(bit_count / 8)` with zero padding.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitPayload {
    pub bit_count: u64,
    pub bytes: Vec<u8>,
}

impl BitPayload {
    pub fn from_parts(bit_count: u64, bytes: Vec<u8>) -> Result<Self> {
        if bytes.len() as u64 != bit_count.div_ceil(8) {
            return Err(Error::CorruptStream(format!(
                "{} payload bytes for {bit_count} bits",
                bytes.len()
            )));
        }
        let tail = (bit_count % 8) as u32;
        if tail != 0 && bytes.last().is_some_and(|b| b & (0xff >> tail) != 0) {
            return Err(Error::CorruptStream("nonzero padding bits".into()));
        }
        Ok(Self { bit_count, bytes })
    }
}

#[derive(Default)]
struct BitWriter {
    bytes: Vec<u8>,
    bits: u64,
}

impl BitWriter {
    fn put(&mut self, code: u32, len: u8) {
        for i in (0..len).rev() {
            let bit = (code >> i) & 1;
            if self.bits.is_multiple_of(8) {
                self.bytes.push(0);
            }
            if bit == 1 {
                *self.bytes.last_mut().unwrap() |= 0x80 >> (self.bits % 8);
            }
            self.bits += 1;
        }
    }
}

pub fn encode(symbols: &[usize], table: &HuffmanTable) -> Result<BitPayload> {
    let mut w = BitWriter::default();
    for &s in symbols {
        let (code, len) = table.code(s).ok_or(Error::UnknownSymbol(s))?;
        w.put(code, len);
    }
    Ok(BitPayload {
        bit_count: w.bits,
        bytes: w.bytes,
    })
}

/// Decodes exactly `symbol_count` symbols; trailing bits are ignored.
pub fn decode(payload: &BitPayload, table: &HuffmanTable, symbol_count: usize) -> Result<Vec<usize>> {
    // canonical decoding tables: per length, first code and offset into `sorted`
    let max = MAX_CODE_LENGTH as usize;
    let mut count = vec![0u32; max + 1];
    for &l in table.code_lengths() {
        if l > 0 {
            count[l as usize] += 1;
        }
    }
    let mut sorted: Vec<usize> = (0..table.symbol_count())
        .filter(|&s| table.lengths[s] > 0)
        .collect();
    sorted.sort_by_key(|&s| (table.lengths[s], s));

    let available = payload.bit_count.min(payload.bytes.len() as u64 * 8);
    let mut out = Vec::with_capacity(symbol_count);
    let mut pos = 0u64;
    for _ in 0..symbol_count {
        let mut code = 0u32;
        let mut first = 0u32;
        let mut index = 0u32;
        let mut found = None;
        for &n in &count[1..=max] {
            if pos >= available {
                return Err(Error::CorruptStream("payload exhausted".into()));
            }
            let bit = (payload.bytes[(pos / 8) as usize] >> (7 - pos % 8)) & 1;
            pos += 1;
            code |= bit as u32;
            if code < first + n {
                found = Some(sorted[(index + code - first) as usize]);
                break;
            }
            index += n;
            first = (first + n) << 1;
            code <<= 1;
        }
        out.push(found.ok_or_else(|| Error::CorruptStream("invalid prefix".into()))?);
    }
    Ok(out)
}

/// Empirical entropy in bits per symbol.
pub fn entropy_bits(frequencies: &[u64]) -> f64 {
    let total: u64 = frequencies.iter().sum();
    if total == 0 {
        return 0.0;
    }
    frequencies
        .iter()
        .filter(|&&f| f > 0)
        .map(|&f| {
            let p = f as f64 / total as f64;
            -p * p.log2()
        })
        .sum()
}

pub fn histogram(symbols: &[usize], symbol_count: usize) -> Vec<u64> {
    let mut h = vec![0u64; symbol_count];
    for &s in symbols {
        h[s] += 1;
    }
    h
}
