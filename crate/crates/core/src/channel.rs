//! The i.i.d. insertion/deletion/substitution channel.
//!
//! Each input symbol enters a channel state in which it may be preceded by any
//! number of uniformly random inserted symbols, and then is either deleted or
//! transmitted (possibly substituted by a different uniformly random symbol).

use std::fmt;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Probabilities of one channel use.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelParams {
    pub p_ins: f64,
    pub p_del: f64,
    pub p_sub: f64,
    pub alphabet_size: usize,
}

impl ChannelParams {
    pub fn new(p_ins: f64, p_del: f64, p_sub: f64, alphabet_size: usize) -> Result<Self> {
        let params = ChannelParams {
            p_ins,
            p_del,
            p_sub,
            alphabet_size,
        };
        params.validate()?;
        Ok(params)
    }

    /// DNA channel with `p_ins = p_del = p` and no substitutions.
    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p, 0.0, 4)
    }

    pub fn noiseless(alphabet_size: usize) -> Self {
        ChannelParams {
            p_ins: 0.0,
            p_del: 0.0,
            p_sub: 0.0,
            alphabet_size,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64| v.is_finite();
        if !(finite(self.p_ins) && finite(self.p_del) && finite(self.p_sub)) {
            return Err(Error::param("p", "probabilities must be finite"));
        }
        if self.alphabet_size < 2 || self.alphabet_size > 256 {
            return Err(Error::param("q", format!("alphabet size {} not in [2, 256]", self.alphabet_size)));
        }
        if self.p_ins < 0.0 {
            return Err(Error::param("p_ins", format!("{} < 0", self.p_ins)));
        }
        if self.p_del < 0.0 {
            return Err(Error::param("p_del", format!("{} < 0", self.p_del)));
        }
        if !(0.0..=1.0).contains(&self.p_sub) {
            return Err(Error::param("p_sub", format!("{} not in [0, 1]", self.p_sub)));
        }
        let all_delete = self.p_del == 1.0 && self.p_ins == 0.0;
        if self.p_ins + self.p_del >= 1.0 && !all_delete {
            return Err(Error::param(
                "p_ins + p_del",
                format!("{} must be < 1", self.p_ins + self.p_del),
            ));
        }
        Ok(())
    }

    /// Transmission probability `1 - p_ins - p_del`.
    pub fn p_trans(&self) -> f64 {
        (1.0 - self.p_ins - self.p_del).max(0.0)
    }

    pub fn is_noiseless(&self) -> bool {
        self.p_ins == 0.0 && self.p_del == 0.0 && self.p_sub == 0.0
    }
}

/// A sequence over `{0, .., q-1}`; for `q = 4` it prints as `ACGT`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct DnaSequence {
    symbols: Vec<u8>,
}

const NUCLEOTIDES: [char; 4] = ['A', 'C', 'G', 'T'];

impl DnaSequence {
    pub fn new(symbols: Vec<u8>, alphabet_size: usize) -> Result<Self> {
        if let Some((position, &s)) = symbols
            .iter()
            .enumerate()
            .find(|(_, &s)| s as usize >= alphabet_size)
        {
            return Err(Error::SymbolOutOfRange {
                symbol: s as u32,
                position,
                alphabet: alphabet_size,
            });
        }
        Ok(DnaSequence { symbols })
    }

    pub(crate) fn from_raw(symbols: Vec<u8>) -> Self {
        DnaSequence { symbols }
    }

    /// Parses `ACGT` letters or the digits `0..=9`.
    pub fn parse(text: &str, alphabet_size: usize) -> Result<Self> {
        let mut symbols = Vec::with_capacity(text.len());
        for (position, c) in text.chars().enumerate() {
            let s = match c.to_ascii_uppercase() {
                'A' => 0,
                'C' => 1,
                'G' => 2,
                'T' => 3,
                d if d.is_ascii_digit() => d as u8 - b'0',
                other => {
                    return Err(Error::param(
                        "sequence",
                        format!("unexpected character {other:?} at position {position}"),
                    ))
                }
            };
            symbols.push(s);
        }
        Self::new(symbols, alphabet_size)
    }

    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn into_symbols(self) -> Vec<u8> {
        self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

impl fmt::Display for DnaSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.symbols.iter().all(|&s| s < 4) {
            for &s in &self.symbols {
                write!(f, "{}", NUCLEOTIDES[s as usize])?;
            }
        } else {
            for (i, &s) in self.symbols.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{s}")?;
            }
        }
        Ok(())
    }
}

/// One channel event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Event {
    /// A random symbol was appended; the pending input symbol stays queued.
    Insert(u8),
    /// The pending input symbol was dropped.
    Delete,
    /// The pending input symbol was received unchanged.
    TransmitClean,
    /// The pending input symbol was received as a different symbol.
    TransmitSub(u8),
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Insert(a) => write!(f, "I{a}"),
            Event::Delete => f.write_str("D"),
            Event::TransmitClean => f.write_str("T"),
            Event::TransmitSub(a) => write!(f, "S{a}"),
        }
    }
}

/// Ordered events of one transmission plus the symbol-level drift.
///
/// `symbol_drift[i]` is the number of insertions minus deletions that happened
/// before input symbol `i + 1` was enqueued, so `symbol_drift[0] = 0` and the last
/// entry equals `N' - N`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EventTrace {
    pub events: Vec<Event>,
    pub symbol_drift: Vec<i64>,
}

impl EventTrace {
    /// Rebuilds the trace bookkeeping from a bare event list.
    pub fn from_events(events: Vec<Event>) -> Self {
        let mut symbol_drift = vec![0];
        let mut drift = 0;
        for e in &events {
            match e {
                Event::Insert(_) => drift += 1,
                Event::Delete => {
                    drift -= 1;
                    symbol_drift.push(drift);
                }
                Event::TransmitClean | Event::TransmitSub(_) => symbol_drift.push(drift),
            }
        }
        EventTrace {
            events,
            symbol_drift,
        }
    }

    pub fn final_drift(&self) -> i64 {
        self.symbol_drift.last().copied().unwrap_or(0)
    }

    pub fn insertions(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e, Event::Insert(_)))
            .count()
    }

    pub fn deletions(&self) -> usize {
        self.events.iter().filter(|e| **e == Event::Delete).count()
    }

    /// Applies the events to `x`, reproducing the channel output.
    pub fn replay(&self, x: &DnaSequence) -> Result<DnaSequence> {
        let mut y = Vec::with_capacity(x.len());
        let mut pos = 0usize;
        for e in &self.events {
            match *e {
                Event::Insert(a) => y.push(a),
                Event::Delete => pos += 1,
                Event::TransmitClean => {
                    let s = *x
                        .symbols()
                        .get(pos)
                        .ok_or_else(|| Error::param("trace", "more events than input symbols"))?;
                    y.push(s);
                    pos += 1;
                }
                Event::TransmitSub(a) => {
                    y.push(a);
                    pos += 1;
                }
            }
        }
        if pos != x.len() {
            return Err(Error::param(
                "trace",
                format!("trace consumes {pos} symbols, input has {}", x.len()),
            ));
        }
        Ok(DnaSequence::from_raw(y))
    }
}

/// `M` independent reads of one input sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReadSet {
    pub reads: Vec<DnaSequence>,
    pub traces: Vec<EventTrace>,
}

impl ReadSet {
    /// Receiver-side read set without traces.
    pub fn from_reads(reads: Vec<DnaSequence>) -> Self {
        ReadSet {
            reads,
            traces: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.reads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reads.is_empty()
    }
}

/// Sends `x` through the channel once. Deterministic given `seed`.
pub fn transmit(x: &DnaSequence, params: &ChannelParams, seed: u64) -> Result<(DnaSequence, EventTrace)> {
    params.validate()?;
    let mut rng = rng::rng_from_seed(seed);
    Ok(run_channel(x.symbols(), params, None, &mut rng))
}

/// Like [`transmit`], but at most `cap` insertions are drawn per channel state.
///
/// Once `cap` insertions have happened in a state, the state deletes or
/// transmits with probabilities renormalized by `1 - p_ins`. This is the channel
/// model the decoder's trellis assumes.
pub fn transmit_capped(
    x: &DnaSequence,
    params: &ChannelParams,
    cap: usize,
    seed: u64,
) -> Result<(DnaSequence, EventTrace)> {
    params.validate()?;
    let mut rng = rng::rng_from_seed(seed);
    Ok(run_channel(x.symbols(), params, Some(cap), &mut rng))
}

fn run_channel(
    x: &[u8],
    params: &ChannelParams,
    cap: Option<usize>,
    rng: &mut rng::Rng,
) -> (DnaSequence, EventTrace) {
    let q = params.alphabet_size as u8;
    let mut y = Vec::with_capacity(x.len() + x.len() / 4 + 4);
    let mut events = Vec::with_capacity(x.len() + x.len() / 4 + 4);
    let mut symbol_drift = Vec::with_capacity(x.len() + 1);
    let mut drift = 0i64;
    symbol_drift.push(0);
    for &xi in x {
        let mut inserted = 0usize;
        loop {
            let capped = cap.is_some_and(|c| inserted >= c);
            let u: f64 = rng.gen();
            let (p_ins, p_del) = if capped {
                (0.0, params.p_del / (1.0 - params.p_ins))
            } else {
                (params.p_ins, params.p_del)
            };
            if u < p_ins {
                let a = rng.gen_range(0..q);
                y.push(a);
                events.push(Event::Insert(a));
                drift += 1;
                inserted += 1;
                continue;
            }
            if u < p_ins + p_del {
                events.push(Event::Delete);
                drift -= 1;
            } else if params.p_sub > 0.0 && rng.gen::<f64>() < params.p_sub {
                // uniform over the q - 1 symbols different from xi
                let mut a = rng.gen_range(0..q - 1);
                if a >= xi {
                    a += 1;
                }
                y.push(a);
                events.push(Event::TransmitSub(a));
            } else {
                y.push(xi);
                events.push(Event::TransmitClean);
            }
            break;
        }
        symbol_drift.push(drift);
    }
    (
        DnaSequence::from_raw(y),
        EventTrace {
            events,
            symbol_drift,
        },
    )
}

/// Sub-seed used for read `j` of a multi-read transmission.
pub fn read_seed(seed: u64, read: usize) -> u64 {
    rng::split_seed(seed, Stream::Channel, read as u64)
}

/// Sends `x` through `reads` independent channel uses.
pub fn transmit_multi(x: &DnaSequence, params: &ChannelParams, reads: usize, seed: u64) -> Result<ReadSet> {
    if reads < 1 {
        return Err(Error::param("reads", "at least one read is required"));
    }
    params.validate()?;
    let mut set = ReadSet {
        reads: Vec::with_capacity(reads),
        traces: Vec::with_capacity(reads),
    };
    for j in 0..reads {
        let (y, trace) = transmit(x, params, read_seed(seed, j))?;
        set.reads.push(y);
        set.traces.push(trace);
    }
    Ok(set)
}

/// Drift sampled at every `n`-th input position: `(d_0, d_1, .., d_{N/n})`.
pub fn block_drift(trace: &EventTrace, n: usize) -> Result<Vec<i64>> {
    if n == 0 {
        return Err(Error::param("n", "block length must be positive"));
    }
    let symbols = trace.symbol_drift.len().saturating_sub(1);
    if symbols % n != 0 {
        return Err(Error::param(
            "n",
            format!("block length {n} does not divide sequence length {symbols}"),
        ));
    }
    Ok(trace.symbol_drift.iter().step_by(n).copied().collect())
}

/// Standard deviation of the final drift, `sqrt(N p_del / (1 - p_del))`.
pub fn drift_std(len: usize, p_del: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&p_del) {
        return Err(Error::param("p_del", format!("{p_del} not in [0, 1)")));
    }
    Ok((len as f64 * p_del / (1.0 - p_del)).sqrt())
}
