//! Inner synchronization codes: convolutional, watermark and time-varying block codes.

mod codebook;
mod conv;

pub use codebook::{
    codebook_min_distance, codebook_min_levenshtein, default_codebooks, distance, format_codebooks,
    greedy_codebooks, indel_distance, levenshtein, parse_codebooks, Codebook, DistanceMetric,
    DEFAULT_CODEBOOKS,
};
pub use conv::ConvCode;

use std::fmt;
use std::str::FromStr;

use rand::Rng as _;

use crate::channel::DnaSequence;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// The inner coding schemes under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    /// `(1,1,2)_4` convolutional code `[5,7]_oct` with offset.
    Cc,
    /// Single-codebook block code with offset.
    Wm,
    /// Four codebooks in a seeded random order without offset.
    Tvc1,
    /// Four codebooks in round-robin order with offset.
    Tvc2,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [SchemeKind::Cc, SchemeKind::Wm, SchemeKind::Tvc1, SchemeKind::Tvc2];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Cc => "cc",
            SchemeKind::Wm => "wm",
            SchemeKind::Tvc1 => "tvc1",
            SchemeKind::Tvc2 => "tvc2",
        }
    }

    /// Whether the scheme adds a pseudo-random offset sequence by default.
    pub fn has_offset(self) -> bool {
        !matches!(self, SchemeKind::Tvc1)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cc" => Ok(SchemeKind::Cc),
            "wm" => Ok(SchemeKind::Wm),
            "tvc1" | "tvc-1" => Ok(SchemeKind::Tvc1),
            "tvc2" | "tvc-2" => Ok(SchemeKind::Tvc2),
            other => Err(Error::param("inner", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Order in which codebooks are used across block positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Always codebook 0.
    Constant,
    /// `0, 1, .., t-1, 0, 1, ..`
    RoundRobin,
    /// Uniform first pick, then uniform over the `t - 1` books other than the previous one.
    Random,
}

/// Whether the offset sequence and random pattern are redrawn for every frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayoutPolicy {
    /// One offset/pattern per experiment, derived from the scheme seed.
    #[default]
    Fixed,
    /// Offset/pattern derived from each frame's seed.
    PerFrame,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InnerCode {
    Conv(ConvCode),
    Block {
        codebooks: Vec<Codebook>,
        pattern: Pattern,
    },
}

/// Configuration consumed by [`make_scheme`].
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    /// Codebooks for block schemes; WM uses the first one. When absent, TVC schemes
    /// load the shipped distance-4 books and WM uses [`Codebook::sparse`].
    pub codebooks: Option<Vec<Codebook>>,
    pub generators: Vec<u32>,
    /// Require insertion/deletion distance >= 4 inside every TVC codebook.
    pub strict: bool,
    /// Overrides the scheme's default use of an offset sequence.
    pub offset: Option<bool>,
    pub layout: LayoutPolicy,
    pub q: usize,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            codebooks: None,
            generators: vec![5, 7],
            strict: false,
            offset: None,
            layout: LayoutPolicy::Fixed,
            q: 4,
        }
    }
}

/// A validated inner code plus its offset/pattern policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerScheme {
    pub kind: SchemeKind,
    pub code: InnerCode,
    pub offset: bool,
    pub layout: LayoutPolicy,
    pub seed: u64,
    pub q: usize,
}

/// Offset sequence and codebook pattern used for one frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameLayout {
    /// Length `N`; all zeros when the scheme has no offset.
    pub offset: Vec<u8>,
    /// Codebook index per trellis step (block schemes only).
    pub pattern: Vec<usize>,
}

/// Builds and validates an inner scheme.
pub fn make_scheme(kind: SchemeKind, config: &SchemeConfig, seed: u64) -> Result<InnerScheme> {
    let q = config.q;
    let code = match kind {
        SchemeKind::Cc => InnerCode::Conv(ConvCode::new(&config.generators, q)?),
        SchemeKind::Wm | SchemeKind::Tvc1 | SchemeKind::Tvc2 => {
            let books = match (&config.codebooks, kind) {
                (Some(b), SchemeKind::Wm) => b.iter().take(1).cloned().collect(),
                (Some(b), _) => b.clone(),
                (None, SchemeKind::Wm) => vec![Codebook::sparse(1, 4, 4, q)?],
                (None, _) if q == 4 => default_codebooks(),
                (None, _) => greedy_codebooks(seed, 4, 4, 4, q, 2)?,
            };
            validate_books(&books, q, config.strict && kind != SchemeKind::Wm)?;
            if kind == SchemeKind::Tvc1 && books.len() < 2 {
                return Err(Error::Codebook(
                    "a random pattern without repeats needs at least two codebooks".into(),
                ));
            }
            let pattern = match kind {
                SchemeKind::Wm => Pattern::Constant,
                SchemeKind::Tvc1 => Pattern::Random,
                _ => Pattern::RoundRobin,
            };
            InnerCode::Block {
                codebooks: books,
                pattern,
            }
        }
    };
    Ok(InnerScheme {
        kind,
        code,
        offset: config.offset.unwrap_or(kind.has_offset()),
        layout: config.layout,
        seed,
        q,
    })
}

fn validate_books(books: &[Codebook], q: usize, strict: bool) -> Result<()> {
    let first = books
        .first()
        .ok_or_else(|| Error::Codebook("no codebooks supplied".into()))?;
    for cb in books {
        if (cb.n, cb.k) != (first.n, first.k) {
            return Err(Error::Codebook(format!(
                "codebook {} has shape n={} k={}, expected n={} k={}",
                cb.id, cb.n, cb.k, first.n, first.k
            )));
        }
        if cb.entries().iter().flatten().any(|&s| s as usize >= q) {
            return Err(Error::Codebook(format!("codebook {} exceeds alphabet {q}", cb.id)));
        }
        if strict {
            let d = codebook_min_distance(cb, DistanceMetric::Indel)?;
            if d < 4 {
                return Err(Error::Codebook(format!(
                    "codebook {} has minimum insertion/deletion distance {d} < 4",
                    cb.id
                )));
            }
        }
    }
    Ok(())
}

impl InnerScheme {
    /// Output symbols per trellis step.
    pub fn n(&self) -> usize {
        match &self.code {
            InnerCode::Conv(cc) => cc.n(),
            InnerCode::Block { codebooks, .. } => codebooks[0].n,
        }
    }

    /// Input bits per trellis step.
    pub fn k(&self) -> usize {
        match &self.code {
            InnerCode::Conv(_) => 1,
            InnerCode::Block { codebooks, .. } => codebooks[0].k,
        }
    }

    /// Size of the outer symbol alphabet, `2^k`.
    pub fn outer_alphabet(&self) -> usize {
        1 << self.k()
    }

    /// Termination steps appended after the outer symbols.
    pub fn memory(&self) -> usize {
        match &self.code {
            InnerCode::Conv(cc) => cc.memory(),
            InnerCode::Block { .. } => 0,
        }
    }

    pub fn num_states(&self) -> usize {
        match &self.code {
            InnerCode::Conv(cc) => cc.num_states(),
            InnerCode::Block { .. } => 1,
        }
    }

    pub fn steps(&self, outer_len: usize) -> usize {
        outer_len + self.memory()
    }

    /// `N = (N_o + m) n`.
    pub fn coded_len(&self, outer_len: usize) -> usize {
        self.steps(outer_len) * self.n()
    }

    /// Outer length giving the largest coded length not above `len`.
    pub fn outer_len_for(&self, len: usize) -> usize {
        (len / self.n()).saturating_sub(self.memory())
    }

    /// Inner rate in bits per symbol, `N_o k / N`.
    pub fn rate(&self, outer_len: usize) -> f64 {
        (outer_len * self.k()) as f64 / self.coded_len(outer_len) as f64
    }

    pub fn codebooks(&self) -> &[Codebook] {
        match &self.code {
            InnerCode::Block { codebooks, .. } => codebooks,
            InnerCode::Conv(_) => &[],
        }
    }

    /// Offset sequence and codebook pattern for a frame with `outer_len` symbols.
    pub fn layout(&self, outer_len: usize, frame_seed: u64) -> FrameLayout {
        let seed = match self.layout {
            LayoutPolicy::Fixed => self.seed,
            LayoutPolicy::PerFrame => frame_seed,
        };
        let len = self.coded_len(outer_len);
        let offset = if self.offset {
            offset_sequence(Some(seed), len, self.q)
        } else {
            vec![0; len]
        };
        let pattern = match &self.code {
            InnerCode::Conv(_) => Vec::new(),
            InnerCode::Block { codebooks, pattern } => {
                codebook_pattern(*pattern, codebooks.len(), self.steps(outer_len), seed)
            }
        };
        FrameLayout { offset, pattern }
    }

    /// Inner codeword `v` before the offset is added.
    pub fn encode_raw(&self, w: &[u16], layout: &FrameLayout) -> Result<Vec<u8>> {
        let q_o = self.outer_alphabet();
        if let Some((position, &s)) = w.iter().enumerate().find(|(_, &s)| s as usize >= q_o) {
            return Err(Error::SymbolOutOfRange {
                symbol: s as u32,
                position,
                alphabet: q_o,
            });
        }
        Ok(match &self.code {
            InnerCode::Conv(cc) => {
                let bits: Vec<u8> = w.iter().map(|&b| b as u8).collect();
                cc.encode_terminated(&bits)
            }
            InnerCode::Block { codebooks, .. } => {
                let mut v = Vec::with_capacity(self.coded_len(w.len()));
                for (i, &label) in w.iter().enumerate() {
                    v.extend_from_slice(codebooks[layout.pattern[i]].word(label as usize));
                }
                v
            }
        })
    }

    /// Encodes the outer symbols `w` into the transmitted sequence `x = v + offset (mod q)`.
    pub fn encode(&self, w: &[u16], frame_seed: u64) -> Result<DnaSequence> {
        if w.is_empty() {
            return Err(Error::param("w", "outer sequence must be non-empty"));
        }
        let layout = self.layout(w.len(), frame_seed);
        let v = self.encode_raw(w, &layout)?;
        Ok(DnaSequence::from_raw(add_offset(&v, &layout.offset, self.q)))
    }
}

/// Component-wise `(v + offset) mod q`.
pub fn add_offset(v: &[u8], offset: &[u8], q: usize) -> Vec<u8> {
    v.iter()
        .zip(offset)
        .map(|(&a, &b)| ((a as usize + b as usize) % q) as u8)
        .collect()
}

/// Component-wise `(x - offset) mod q`.
pub fn remove_offset(x: &[u8], offset: &[u8], q: usize) -> Vec<u8> {
    x.iter()
        .zip(offset)
        .map(|(&a, &b)| ((a as usize + q - b as usize) % q) as u8)
        .collect()
}

/// Uniform i.i.d. sequence over `{0, .., q-1}`; all zeros when `seed` is `None`.
pub fn offset_sequence(seed: Option<u64>, len: usize, q: usize) -> Vec<u8> {
    match seed {
        None => vec![0; len],
        Some(seed) => {
            let mut rng = rng::stream_rng(seed, Stream::Offset, 0);
            (0..len).map(|_| rng.gen_range(0..q) as u8).collect()
        }
    }
}

/// Codebook index for each of `steps` block positions.
pub fn codebook_pattern(pattern: Pattern, books: usize, steps: usize, seed: u64) -> Vec<usize> {
    match pattern {
        Pattern::Constant => vec![0; steps],
        Pattern::RoundRobin => (0..steps).map(|i| i % books).collect(),
        Pattern::Random => {
            let mut rng = rng::stream_rng(seed, Stream::Pattern, 0);
            let mut out = Vec::with_capacity(steps);
            let mut prev: Option<usize> = None;
            for _ in 0..steps {
                let next = match prev {
                    None => rng.gen_range(0..books),
                    Some(p) => {
                        let c = rng.gen_range(0..books - 1);
                        if c >= p {
                            c + 1
                        } else {
                            c
                        }
                    }
                };
                out.push(next);
                prev = Some(next);
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_wm() -> InnerScheme {
        let config = SchemeConfig {
            codebooks: Some(vec![Codebook::identity(1, 4, 4, 4).unwrap()]),
            offset: Some(false),
            ..SchemeConfig::default()
        };
        make_scheme(SchemeKind::Wm, &config, 0).unwrap()
    }

    #[test]
    fn cc_scheme_shape() {
        let s = make_scheme(SchemeKind::Cc, &SchemeConfig::default(), 1).unwrap();
        assert_eq!(s.memory(), 2);
        assert_eq!((s.n(), s.k()), (1, 1));
        assert!(s.offset);
        match &s.code {
            InnerCode::Conv(cc) => assert_eq!(cc.generators_octal(), vec![5, 7]),
            _ => panic!("expected a convolutional code"),
        }
        assert_eq!(s.coded_len(1924), 1926);
        assert!((s.rate(1924) - 1924.0 / 1926.0).abs() < 1e-12);
    }

    #[test]
    fn wm_scheme_has_one_book_and_unit_rate() {
        let s = make_scheme(SchemeKind::Wm, &SchemeConfig::default(), 1).unwrap();
        assert_eq!(s.codebooks().len(), 1);
        assert_eq!(s.rate(240), 1.0);
        assert!(s.offset);
    }

    #[test]
    fn tvc2_pattern_is_round_robin() {
        let s = make_scheme(SchemeKind::Tvc2, &SchemeConfig::default(), 1).unwrap();
        let layout = s.layout(10, 0);
        assert_eq!(layout.pattern, vec![0, 1, 2, 3, 0, 1, 2, 3, 0, 1]);
        assert!(layout.offset.iter().any(|&o| o != 0));
    }

    #[test]
    fn tvc1_pattern_avoids_repeats_and_has_no_offset() {
        let s = make_scheme(SchemeKind::Tvc1, &SchemeConfig::default(), 11).unwrap();
        let layout = s.layout(500, 0);
        assert!(layout.pattern.windows(2).all(|w| w[0] != w[1]));
        assert!(layout.pattern.iter().all(|&p| p < 4));
        assert!(layout.offset.iter().all(|&o| o == 0));
        assert_eq!(layout, s.layout(500, 12345));
    }

    #[test]
    fn per_frame_layout_follows_frame_seed() {
        let config = SchemeConfig {
            layout: LayoutPolicy::PerFrame,
            ..SchemeConfig::default()
        };
        let s = make_scheme(SchemeKind::Tvc2, &config, 1).unwrap();
        assert_ne!(s.layout(50, 1).offset, s.layout(50, 2).offset);
        assert_eq!(s.layout(50, 1), s.layout(50, 1));
    }

    #[test]
    fn wm_identity_book_encodes_base_four_digits() {
        let s = identity_wm();
        let x = s.encode(&[5], 0).unwrap();
        assert_eq!(x.symbols(), &[0, 0, 1, 1]);
    }

    #[test]
    fn encode_rejects_out_of_range_symbols() {
        let s = identity_wm();
        assert!(s.encode(&[16], 0).is_err());
        let cc = make_scheme(SchemeKind::Cc, &SchemeConfig::default(), 1).unwrap();
        assert!(cc.encode(&[2], 0).is_err());
    }

    #[test]
    fn cc_without_offset_matches_hand_convolution() {
        let config = SchemeConfig {
            offset: Some(false),
            ..SchemeConfig::default()
        };
        let s = make_scheme(SchemeKind::Cc, &config, 1).unwrap();
        let x = s.encode(&[1, 0, 0], 0).unwrap();
        assert_eq!(&x.symbols()[..3], &[3, 1, 3]);
        assert_eq!(x.len(), 5);
    }

    #[test]
    fn offset_is_invertible_and_seeded() {
        let s = make_scheme(SchemeKind::Tvc2, &SchemeConfig::default(), 3).unwrap();
        let w: Vec<u16> = (0..20).map(|i| (i * 7 % 16) as u16).collect();
        let layout = s.layout(w.len(), 0);
        let v = s.encode_raw(&w, &layout).unwrap();
        let x = s.encode(&w, 0).unwrap();
        assert_eq!(remove_offset(x.symbols(), &layout.offset, 4), v);
        assert_eq!(offset_sequence(Some(4), 100, 4), offset_sequence(Some(4), 100, 4));
        assert_eq!(offset_sequence(None, 5, 4), vec![0; 5]);
    }

    #[test]
    fn offset_frequencies_are_uniform() {
        let n = 100_000;
        let seq = offset_sequence(Some(2024), n, 4);
        let se = (n as f64 * 0.25 * 0.75).sqrt();
        for s in 0..4u8 {
            let count = seq.iter().filter(|&&v| v == s).count() as f64;
            assert!((count - n as f64 / 4.0).abs() < 3.0 * se, "symbol {s}: {count}");
        }
    }

    #[test]
    fn strict_mode_rejects_close_codewords() {
        let config = SchemeConfig {
            codebooks: Some(vec![Codebook::identity(1, 4, 4, 4).unwrap(); 2]),
            strict: true,
            ..SchemeConfig::default()
        };
        assert!(make_scheme(SchemeKind::Tvc1, &config, 0).is_err());
        assert!(make_scheme(SchemeKind::Wm, &config, 0).is_ok());
        let strict_default = SchemeConfig {
            strict: true,
            ..SchemeConfig::default()
        };
        assert!(make_scheme(SchemeKind::Tvc2, &strict_default, 0).is_ok());
    }

    #[test]
    fn scheme_names_parse() {
        for kind in SchemeKind::ALL {
            assert_eq!(kind.name().parse::<SchemeKind>().unwrap(), kind);
        }
        assert!("foo".parse::<SchemeKind>().is_err());
    }
}
