//! Simple and encoded bitmap indexes over in-memory columns, plus the
//! cardinality advisor deciding when a bitmap index is worth building.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::path::Path;

use thiserror::Error;

use crate::flatfile::{find_table_files, for_each_record, split_record, FlatFileError};
use crate::par::Parallelism;
use crate::schema::Table;

#[derive(Debug, Error)]
pub enum BitmapError {
    #[error("cannot index an empty column")]
    EmptyColumn,
    #[error("advisor needs rows >= distinct >= 1, got distinct={distinct} rows={rows}")]
    InvalidCounts { distinct: u64, rows: u64 },
    #[error("table {table} has no column `{column}`")]
    UnknownColumn { table: Table, column: String },
    #[error("no data files for table {0}")]
    NoData(Table),
    #[error(transparent)]
    FlatFile(#[from] FlatFileError),
}

/// Fixed-length bit sequence packed into `u64` words; padding bits past
/// `len` are always zero.
#[derive(Clone, PartialEq, Eq)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        BitVec { words: vec![0; len.div_ceil(64)], len }
    }

    pub fn ones(len: usize) -> Self {
        let mut v = BitVec { words: vec![u64::MAX; len.div_ceil(64)], len };
        v.clear_padding();
        v
    }

    fn from_words(words: Vec<u64>, len: usize) -> Self {
        debug_assert_eq!(words.len(), len.div_ceil(64));
        let mut v = BitVec { words, len };
        v.clear_padding();
        v
    }

    fn clear_padding(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize) {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn and(&self, other: &BitVec) -> BitVec {
        self.zip(other, |a, b| a & b)
    }

    pub fn and_not(&self, other: &BitVec) -> BitVec {
        self.zip(other, |a, b| a & !b)
    }

    pub fn or(&self, other: &BitVec) -> BitVec {
        self.zip(other, |a, b| a | b)
    }

    fn zip(&self, other: &BitVec, f: impl Fn(u64, u64) -> u64) -> BitVec {
        assert_eq!(self.len, other.len, "bit vector lengths differ");
        let words = self.words.iter().zip(&other.words).map(|(a, b)| f(*a, *b)).collect();
        BitVec::from_words(words, self.len)
    }

    /// Positions of set bits, ascending.
    pub fn positions(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.count_ones());
        for (wi, &w) in self.words.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                out.push(wi * 64 + w.trailing_zeros() as usize);
                w &= w - 1;
            }
        }
        out
    }

    pub fn bytes(&self) -> usize {
        self.words.len() * 8
    }
}

/// Renders as `0`/`1` characters, row 0 first.
impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

/// Distinct values in first-appearance order and the code of every row.
fn encode_column<V: Hash + Eq + Clone>(column: &[V]) -> (Vec<V>, HashMap<V, u32>, Vec<u32>) {
    let mut domain = Vec::new();
    let mut codes_of = HashMap::new();
    let codes = column
        .iter()
        .map(|v| {
            *codes_of.entry(v.clone()).or_insert_with(|| {
                domain.push(v.clone());
                domain.len() as u32 - 1
            })
        })
        .collect();
    (domain, codes_of, codes)
}

const WORDS_PER_CHUNK: usize = 256;

/// Word-index ranges covering `len` bits, one per unit of parallel work.
fn word_chunks(len: usize) -> Vec<(usize, usize)> {
    let words = len.div_ceil(64);
    (0..words).step_by(WORDS_PER_CHUNK).map(|s| (s, (s + WORDS_PER_CHUNK).min(words))).collect()
}

/// Bits `w*64 .. w*64+63` of `codes` as (code, word) pairs, for one word.
fn word_of(codes: &[u32], w: usize, mut bit: impl FnMut(usize, u32)) {
    let start = w * 64;
    for (i, &c) in codes[start..(start + 64).min(codes.len())].iter().enumerate() {
        bit(i, c);
    }
}

/// Width in bits of codes for `distinct` values: `⌈log2 d⌉`, at least 1.
pub fn encoded_width(distinct: usize) -> u32 {
    if distinct <= 2 {
        1
    } else {
        usize::BITS - (distinct - 1).leading_zeros()
    }
}

/// One bit vector per distinct value.
#[derive(Debug, Clone)]
pub struct SimpleBitmap<V> {
    pub domain: Vec<V>,
    pub vectors: Vec<BitVec>,
    lookup: HashMap<V, u32>,
    rows: usize,
}

impl<V: Hash + Eq + Clone + Send + Sync> SimpleBitmap<V> {
    pub fn build(column: &[V]) -> Result<Self, BitmapError> {
        Self::build_with(column, Parallelism::default())
    }

    pub fn build_with(column: &[V], par: Parallelism) -> Result<Self, BitmapError> {
        if column.is_empty() {
            return Err(BitmapError::EmptyColumn);
        }
        let (domain, lookup, codes) = encode_column(column);
        let n = column.len();
        let codes = &codes;
        // Each chunk yields its words as (value, word index, bits) triples,
        // at most 64 per word, which are then scattered into the vectors.
        let parts = par.map(word_chunks(n), |(a, b)| {
            let mut out: Vec<(u32, usize, u64)> = Vec::new();
            for w in a..b {
                let mut local: Vec<(u32, u64)> = Vec::new();
                word_of(codes, w, |i, c| match local.iter_mut().find(|(v, _)| *v == c) {
                    Some((_, bits)) => *bits |= 1 << i,
                    None => local.push((c, 1 << i)),
                });
                out.extend(local.into_iter().map(|(c, bits)| (c, w, bits)));
            }
            out
        });
        let words = n.div_ceil(64);
        let mut raw = vec![vec![0u64; words]; domain.len()];
        for (c, w, bits) in parts.into_iter().flatten() {
            raw[c as usize][w] = bits;
        }
        let vectors = raw.into_iter().map(|w| BitVec::from_words(w, n)).collect();
        Ok(SimpleBitmap { domain, vectors, lookup, rows: n })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn vector(&self, value: &V) -> Option<&BitVec> {
        self.lookup.get(value).map(|&c| &self.vectors[c as usize])
    }

    pub fn query_eq_bits(&self, value: &V) -> BitVec {
        self.vector(value).cloned().unwrap_or_else(|| BitVec::zeros(self.rows))
    }

    /// Row ids holding `value`, ascending.
    pub fn query_eq(&self, value: &V) -> Vec<usize> {
        self.vector(value).map_or_else(Vec::new, BitVec::positions)
    }

    /// Row ids holding any of `values`.
    pub fn query_in(&self, values: &[V]) -> Vec<usize> {
        values.iter().fold(BitVec::zeros(self.rows), |acc, v| acc.or(&self.query_eq_bits(v))).positions()
    }

    pub fn bytes(&self) -> usize {
        self.vectors.iter().map(BitVec::bytes).sum()
    }
}

/// `⌈log2 d⌉` bit slices plus a value → code mapping.
#[derive(Debug, Clone)]
pub struct EncodedBitmap<V> {
    pub width: u32,
    /// `slices[j]` holds bit `j` of each row's code (`slices[0]` is B0).
    pub slices: Vec<BitVec>,
    /// Values by code.
    pub domain: Vec<V>,
    mapping: HashMap<V, u32>,
    rows: usize,
}

impl<V: Hash + Eq + Clone + Send + Sync> EncodedBitmap<V> {
    pub fn build(column: &[V]) -> Result<Self, BitmapError> {
        Self::build_with(column, Parallelism::default())
    }

    pub fn build_with(column: &[V], par: Parallelism) -> Result<Self, BitmapError> {
        if column.is_empty() {
            return Err(BitmapError::EmptyColumn);
        }
        let (domain, mapping, codes) = encode_column(column);
        let n = column.len();
        let width = encoded_width(domain.len());
        let codes = &codes;
        let parts = par.map(word_chunks(n), |(a, b)| {
            let mut out = vec![vec![0u64; b - a]; width as usize];
            for w in a..b {
                word_of(codes, w, |i, c| {
                    for (j, slice) in out.iter_mut().enumerate() {
                        slice[w - a] |= ((c >> j) as u64 & 1) << i;
                    }
                });
            }
            out
        });
        let mut raw = vec![Vec::with_capacity(n.div_ceil(64)); width as usize];
        for chunk in parts {
            for (j, words) in chunk.into_iter().enumerate() {
                raw[j].extend(words);
            }
        }
        let slices = raw.into_iter().map(|w| BitVec::from_words(w, n)).collect();
        Ok(EncodedBitmap { width, slices, domain, mapping, rows: n })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn code(&self, value: &V) -> Option<u32> {
        self.mapping.get(value).copied()
    }

    /// Code as a `width`-character binary string, high bit first.
    pub fn code_string(&self, value: &V) -> Option<String> {
        self.code(value).map(|c| format!("{c:0w$b}", w = self.width as usize))
    }

    /// Code stored at `row`, read back from the slices.
    pub fn decode_row(&self, row: usize) -> u32 {
        self.slices.iter().enumerate().map(|(j, s)| (s.get(row) as u32) << j).sum()
    }

    /// Rows whose slices spell `code`; codes outside the mapping match nothing.
    pub fn query_code_bits(&self, code: u32) -> BitVec {
        if code as usize >= self.domain.len() {
            return BitVec::zeros(self.rows);
        }
        self.slices.iter().enumerate().fold(BitVec::ones(self.rows), |acc, (j, s)| {
            if code >> j & 1 == 1 {
                acc.and(s)
            } else {
                acc.and_not(s)
            }
        })
    }

    pub fn query_eq_bits(&self, value: &V) -> BitVec {
        self.code(value).map_or_else(|| BitVec::zeros(self.rows), |c| self.query_code_bits(c))
    }

    pub fn query_eq(&self, value: &V) -> Vec<usize> {
        self.query_eq_bits(value).positions()
    }

    pub fn query_in(&self, values: &[V]) -> Vec<usize> {
        values.iter().fold(BitVec::zeros(self.rows), |acc, v| acc.or(&self.query_eq_bits(v))).positions()
    }

    pub fn bytes(&self) -> usize {
        self.slices.iter().map(BitVec::bytes).sum()
    }
}

/// Linear scan, the reference for both index kinds.
pub fn scan_eq<V: PartialEq>(column: &[V], value: &V) -> Vec<usize> {
    column.iter().enumerate().filter(|(_, v)| *v == value).map(|(i, _)| i).collect()
}

/// Largest distinct/rows ratio for which a bitmap index is advised.
pub const MAX_BITMAP_RATIO: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advice {
    pub distinct: u64,
    pub rows: u64,
    /// `distinct / rows`.
    pub ratio: f64,
    pub bitmap_eligible: bool,
    pub too_high_cardinality: bool,
}

impl Advice {
    pub fn ratio_percent(&self) -> f64 {
        self.ratio * 100.0
    }
}

/// Bitmap indexes suit columns whose distinct count is at most 0.1% of the
/// row count (boundary included).
pub fn advise(distinct: u64, rows: u64) -> Result<Advice, BitmapError> {
    if distinct == 0 || rows < distinct {
        return Err(BitmapError::InvalidCounts { distinct, rows });
    }
    let eligible = distinct as u128 * 1000 <= rows as u128;
    Ok(Advice {
        distinct,
        rows,
        ratio: distinct as f64 / rows as f64,
        bitmap_eligible: eligible,
        too_high_cardinality: !eligible,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProfile {
    pub table: Table,
    pub column: String,
    pub rows: u64,
    pub distinct: u64,
    pub advice: Advice,
    pub simple_bytes: usize,
    pub encoded_width: u32,
    pub encoded_bytes: usize,
}

/// Reads one column of a generated table from `dir` and profiles it.
pub fn profile_flat_column(dir: &Path, table: Table, column: &str, par: Parallelism) -> Result<ColumnProfile, BitmapError> {
    let idx = table
        .column_index(column)
        .ok_or_else(|| BitmapError::UnknownColumn { table, column: column.to_string() })?;
    let files = find_table_files(dir, table);
    if files.is_empty() {
        return Err(BitmapError::NoData(table));
    }
    let mut values = Vec::new();
    for path in files {
        for_each_record(&path, table, |_, line| {
            values.push(split_record(line)[idx].to_string());
            Ok(())
        })?;
    }
    let simple = SimpleBitmap::build_with(&values, par)?;
    let encoded = EncodedBitmap::build_with(&values, par)?;
    let distinct = simple.domain.len() as u64;
    Ok(ColumnProfile {
        table,
        column: column.to_string(),
        rows: values.len() as u64,
        distinct,
        advice: advise(distinct, values.len() as u64)?,
        simple_bytes: simple.bytes(),
        encoded_width: encoded.width,
        encoded_bytes: encoded.bytes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const COLUMN: [char; 5] = ['a', 'b', 'c', 'c', 'a'];

    #[test]
    fn simple_vectors() {
        let s = SimpleBitmap::build(&COLUMN).unwrap();
        assert_eq!(s.domain, vec!['a', 'b', 'c']);
        let bits: Vec<String> = s.vectors.iter().map(|v| v.to_string()).collect();
        assert_eq!(bits, ["10001", "01000", "00110"]);
        assert_eq!(s.query_eq(&'c'), vec![2, 3]);
        assert!(s.query_eq(&'z').is_empty());
    }

    #[test]
    fn encoded_slices() {
        let e = EncodedBitmap::build(&COLUMN).unwrap();
        assert_eq!(e.width, 2);
        assert_eq!(e.slices[1].to_string(), "00110");
        assert_eq!(e.slices[0].to_string(), "01000");
        assert_eq!(e.code_string(&'a').unwrap(), "00");
        assert_eq!(e.code_string(&'b').unwrap(), "01");
        assert_eq!(e.code_string(&'c').unwrap(), "10");
        assert_eq!(e.query_eq(&'a'), vec![0, 4]);
        assert!(e.query_code_bits(3).positions().is_empty());
    }

    #[test]
    fn widths() {
        assert_eq!(encoded_width(1), 1);
        assert_eq!(encoded_width(2), 1);
        assert_eq!(encoded_width(3), 2);
        assert_eq!(encoded_width(4), 2);
        assert_eq!(encoded_width(5), 3);
        assert_eq!(encoded_width(12_000), 14);
    }

    #[test]
    fn single_value_column() {
        let col = vec![7u8; 130];
        let s = SimpleBitmap::build(&col).unwrap();
        assert_eq!(s.vectors.len(), 1);
        assert_eq!(s.vectors[0], BitVec::ones(130));
        let e = EncodedBitmap::build(&col).unwrap();
        assert_eq!(e.width, 1);
        assert_eq!(e.query_eq(&7).len(), 130);
    }

    #[test]
    fn empty_column_rejected() {
        assert!(matches!(SimpleBitmap::<u8>::build(&[]), Err(BitmapError::EmptyColumn)));
        assert!(matches!(EncodedBitmap::<u8>::build(&[]), Err(BitmapError::EmptyColumn)));
    }

    #[test]
    fn advisor() {
        let a = advise(27, 100_000).unwrap();
        assert!(a.bitmap_eligible);
        assert!((a.ratio_percent() - 0.027).abs() < 1e-12);
        assert!(!advise(1, 1).unwrap().bitmap_eligible);
        assert!(advise(100, 100_000).unwrap().bitmap_eligible);
        assert!(!advise(101, 100_000).unwrap().bitmap_eligible);
        assert!(advise(0, 5).is_err());
        assert!(advise(6, 5).is_err());
    }

    #[test]
    fn bitvec_padding_stays_clear() {
        let v = BitVec::ones(70);
        assert_eq!(v.count_ones(), 70);
        let z = BitVec::zeros(70);
        assert_eq!(z.and_not(&z).count_ones(), 0);
        assert_eq!(BitVec::ones(70).and_not(&z).count_ones(), 70);
    }
}
