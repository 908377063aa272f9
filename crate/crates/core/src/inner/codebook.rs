//! Block-code codebooks, the codebook text format, and edit distances.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Maps each of the `2^k` input labels to a length-`n` word over `{0, .., q-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codebook {
    pub id: usize,
    pub n: usize,
    pub k: usize,
    entries: Vec<Vec<u8>>,
}

impl Codebook {
    pub fn new(id: usize, n: usize, k: usize, entries: Vec<Vec<u8>>, q: usize) -> Result<Self> {
        if k > 16 {
            return Err(Error::Codebook(format!("dimension k = {k} is too large")));
        }
        if entries.len() != 1 << k {
            return Err(Error::Codebook(format!(
                "codebook {id}: expected {} entries, found {}",
                1usize << k,
                entries.len()
            )));
        }
        let mut seen = HashSet::with_capacity(entries.len());
        for (label, word) in entries.iter().enumerate() {
            if word.len() != n {
                return Err(Error::Codebook(format!(
                    "codebook {id}: word for label {label} has length {}, expected {n}",
                    word.len()
                )));
            }
            if let Some(&s) = word.iter().find(|&&s| s as usize >= q) {
                return Err(Error::Codebook(format!(
                    "codebook {id}: symbol {s} in label {label} outside alphabet of size {q}"
                )));
            }
            if !seen.insert(word.as_slice()) {
                return Err(Error::Codebook(format!(
                    "codebook {id}: duplicate word for label {label}"
                )));
            }
        }
        Ok(Codebook { id, n, k, entries })
    }

    /// The codebook mapping label `l` to the base-`q` digits of `l` (most significant first).
    pub fn identity(id: usize, n: usize, k: usize, q: usize) -> Result<Self> {
        let entries = (0..1usize << k)
            .map(|label| {
                let mut word = vec![0u8; n];
                let mut rest = label;
                for slot in word.iter_mut().rev() {
                    *slot = (rest % q) as u8;
                    rest /= q;
                }
                word
            })
            .collect();
        Self::new(id, n, k, entries, q)
    }

    /// The `2^k` words of smallest Hamming weight, ties broken lexicographically,
    /// assigned to labels in that order. Added to a random offset this is the
    /// sparse codebook of a watermark code.
    pub fn sparse(id: usize, n: usize, k: usize, q: usize) -> Result<Self> {
        let total = (q as u64)
            .checked_pow(n as u32)
            .filter(|&t| t <= 1 << 24 && t >= 1 << k)
            .ok_or_else(|| Error::Codebook(format!("no sparse book with n={n} k={k} over {q} symbols")))?;
        let mut words: Vec<Vec<u8>> = (0..total as usize)
            .map(|mut v| {
                let mut w = vec![0u8; n];
                for slot in w.iter_mut().rev() {
                    *slot = (v % q) as u8;
                    v /= q;
                }
                w
            })
            .collect();
        words.sort_by_key(|w| w.iter().filter(|&&s| s != 0).count());
        words.truncate(1 << k);
        Self::new(id, n, k, words, q)
    }

    pub fn word(&self, label: usize) -> &[u8] {
        &self.entries[label]
    }

    pub fn entries(&self) -> &[Vec<u8>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Which edit distance to measure between codewords.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMetric {
    /// Insertions, deletions and substitutions all cost one.
    #[default]
    Edit,
    /// Insertions and deletions only: `|a| + |b| - 2 LCS(a, b)`.
    Indel,
}

/// Levenshtein distance with unit insertion, deletion and substitution costs.
pub fn levenshtein(a: &[u8], b: &[u8]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Insertion/deletion distance, `|a| + |b| - 2 LCS(a, b)`.
pub fn indel_distance(a: &[u8], b: &[u8]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            cur[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    a.len() + b.len() - 2 * prev[b.len()]
}

pub fn distance(metric: DistanceMetric, a: &[u8], b: &[u8]) -> usize {
    match metric {
        DistanceMetric::Edit => levenshtein(a, b),
        DistanceMetric::Indel => indel_distance(a, b),
    }
}

/// Minimum pairwise distance over distinct codewords.
pub fn codebook_min_distance(cb: &Codebook, metric: DistanceMetric) -> Result<usize> {
    if cb.len() < 2 {
        return Err(Error::Codebook("need at least two codewords".into()));
    }
    let words = cb.entries();
    let mut best = usize::MAX;
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            best = best.min(distance(metric, a, b));
        }
    }
    Ok(best)
}

/// Minimum pairwise Levenshtein (edit) distance of a codebook.
pub fn codebook_min_levenshtein(cb: &Codebook) -> Result<usize> {
    codebook_min_distance(cb, DistanceMetric::Edit)
}

fn parse_symbol(c: char) -> Option<u8> {
    match c.to_ascii_uppercase() {
        'A' => Some(0),
        'C' => Some(1),
        'G' => Some(2),
        'T' => Some(3),
        d if d.is_ascii_digit() => Some(d as u8 - b'0'),
        _ => None,
    }
}

/// Parses the line-oriented codebook format:
///
/// ```text
/// codebook 1 n=4 k=4
/// 0 ACGT
/// 1 0123
/// ...
/// ```
///
/// Blank lines and `#` comments are ignored.
pub fn parse_codebooks(text: &str, q: usize) -> Result<Vec<Codebook>> {
    struct Pending {
        id: usize,
        n: usize,
        k: usize,
        line: usize,
        words: Vec<Option<Vec<u8>>>,
    }

    fn finish(p: Pending, q: usize) -> Result<Codebook> {
        let mut entries = Vec::with_capacity(p.words.len());
        for (label, w) in p.words.into_iter().enumerate() {
            entries.push(w.ok_or_else(|| Error::CodebookParse {
                line: p.line,
                reason: format!("codebook {} is missing label {label}", p.id),
            })?);
        }
        Codebook::new(p.id, p.n, p.k, entries, q)
    }

    let mut books = Vec::new();
    let mut pending: Option<Pending> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |reason: String| Error::CodebookParse {
            line: line_no,
            reason,
        };
        let mut fields = line.split_whitespace();
        let head = fields.next().unwrap_or_default();
        if head == "codebook" {
            if let Some(p) = pending.take() {
                books.push(finish(p, q)?);
            }
            let id = fields
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err("expected `codebook <id> n=<n> k=<k>`".into()))?;
            let (mut n, mut k) = (None, None);
            for f in fields {
                match f.split_once('=') {
                    Some(("n", v)) => n = v.parse().ok(),
                    Some(("k", v)) => k = v.parse().ok(),
                    _ => return Err(err(format!("unexpected header field `{f}`"))),
                }
            }
            let (n, k) = match (n, k) {
                (Some(n), Some(k)) if k <= 16 => (n, k),
                _ => return Err(err("header needs n=<n> and k=<k> (k <= 16)".into())),
            };
            pending = Some(Pending {
                id,
                n,
                k,
                line: line_no,
                words: vec![None; 1 << k],
            });
            continue;
        }
        let p = pending
            .as_mut()
            .ok_or_else(|| err("entry before any `codebook` header".into()))?;
        let label: usize = head
            .parse()
            .map_err(|_| err(format!("bad label `{head}`")))?;
        let word_text = fields
            .next()
            .ok_or_else(|| err(format!("label {label} has no word")))?;
        if fields.next().is_some() {
            return Err(err("trailing fields".into()));
        }
        let word = word_text
            .chars()
            .map(parse_symbol)
            .collect::<Option<Vec<u8>>>()
            .ok_or_else(|| err(format!("bad word `{word_text}`")))?;
        let slot = p
            .words
            .get_mut(label)
            .ok_or_else(|| err(format!("label {label} out of range")))?;
        if slot.is_some() {
            return Err(err(format!("label {label} given twice")));
        }
        *slot = Some(word);
    }
    if let Some(p) = pending.take() {
        books.push(finish(p, q)?);
    }
    if books.is_empty() {
        return Err(Error::CodebookParse {
            line: 0,
            reason: "no codebooks found".into(),
        });
    }
    Ok(books)
}

/// Writes codebooks in the format read by [`parse_codebooks`].
pub fn format_codebooks(books: &[Codebook]) -> String {
    let mut out = String::new();
    for cb in books {
        let _ = writeln!(out, "codebook {} n={} k={}", cb.id, cb.n, cb.k);
        for (label, word) in cb.entries().iter().enumerate() {
            let text: String = word
                .iter()
                .map(|&s| if s < 4 { ['A', 'C', 'G', 'T'][s as usize] } else { (b'0' + s) as char })
                .collect();
            let _ = writeln!(out, "{label} {text}");
        }
    }
    out
}

/// The four length-4, dimension-4 quaternary codebooks shipped with the crate.
///
/// Within each book every pair of words has insertion/deletion distance at least 4
/// (no common subsequence of length 3).
pub const DEFAULT_CODEBOOKS: &str = include_str!("../../data/tvc_codebooks.cb");

pub fn default_codebooks() -> Vec<Codebook> {
    parse_codebooks(DEFAULT_CODEBOOKS, 4).expect("shipped codebook file is valid")
}

/// Seeded greedy codebook construction.
///
/// Words are visited in a seeded random order and kept when their edit distance
/// to every kept word is at least `min_distance`; distinct seeds per book give
/// distinct books. Fails when a book cannot be filled.
pub fn greedy_codebooks(
    seed: u64,
    count: usize,
    n: usize,
    k: usize,
    q: usize,
    min_distance: usize,
) -> Result<Vec<Codebook>> {
    let total = (q as u64).checked_pow(n as u32).filter(|&t| t <= 1 << 20).ok_or_else(|| {
        Error::Codebook(format!("word space {q}^{n} too large for greedy search"))
    })? as usize;
    let all: Vec<Vec<u8>> = (0..total)
        .map(|mut v| {
            let mut w = vec![0u8; n];
            for slot in w.iter_mut().rev() {
                *slot = (v % q) as u8;
                v /= q;
            }
            w
        })
        .collect();
    let size = 1usize << k;
    let mut books = Vec::with_capacity(count);
    for b in 0..count {
        let mut found = None;
        for attempt in 0..64u64 {
            let mut rng = rng::stream_rng(seed, Stream::Codebook, (b as u64) << 8 | attempt);
            let mut order = all.clone();
            order.shuffle(&mut rng);
            let mut kept: Vec<Vec<u8>> = Vec::with_capacity(size);
            for w in order {
                if kept.iter().all(|u| levenshtein(u, &w) >= min_distance) {
                    kept.push(w);
                    if kept.len() == size {
                        break;
                    }
                }
            }
            if kept.len() == size {
                found = Some(kept);
                break;
            }
        }
        let entries = found.ok_or_else(|| {
            Error::Codebook(format!(
                "greedy search found no {size}-word book with distance {min_distance}"
            ))
        })?;
        books.push(Codebook::new(b + 1, n, k, entries, q)?);
    }
    Ok(books)
}
