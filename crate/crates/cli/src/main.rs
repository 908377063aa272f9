//! `dnafb`: channel sampling, DT bounds, FER simulation and normalized rates from the command line.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dnafb::channel::transmit_multi;
use dnafb::infodensity::{normalized_rate, sample_densities, sample_frame, dt_bound, SampleConfig};
use dnafb::inner::{codebook_min_distance, parse_codebooks, DistanceMetric};
use dnafb::pipeline::{fer_crossing, run_curve};
use dnafb::rng::{self, Stream};
use dnafb::trellis::{uniform_priors, FrameDecoder};
use dnafb::DnaSequence;
use rand::Rng as _;
use serde_json::json;
use thiserror::Error;

use config::{invalid, Config, ConfigError};
use output::{emit, Table};

#[derive(Debug, Parser)]
#[command(name = "dnafb", version, about = "Finite-blocklength toolkit for the DNA insertion/deletion/substitution channel")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Send random sequences through the channel and report the event statistics.
    ChannelSample {
        #[command(flatten)]
        common: Common,
        /// Number of input sequences.
        #[arg(long, default_value_t = 10)]
        count: usize,
    },
    /// Monte-Carlo DT achievability bound at every channel point.
    DtBound {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: SamplingArgs,
        /// Write the forward table of the first sample at the first point.
        #[arg(long, value_name = "FILE")]
        dump_alpha: Option<PathBuf>,
    },
    /// Frame error rate of the concatenated code at every channel point.
    SimulateFer {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        fer: FerArgs,
    },
    /// Ratio of the code rate to the DT rate at the point where the code reaches the target FER.
    NormalizedRate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        sampling: SamplingArgs,
        #[command(flatten)]
        fer: FerArgs,
        /// Transmitted lengths to evaluate.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long)]
        target_fer: Option<f64>,
    },
    /// Report sizes and minimum distances of every codebook in a file.
    ValidateCodebook {
        file: PathBuf,
        /// Channel alphabet size.
        #[arg(long, default_value_t = 4)]
        q: usize,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// CSV output path (stdout when absent).
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    /// Also write the rows and configuration as JSON.
    #[arg(long, value_name = "FILE")]
    json: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
    /// Inner scheme: cc, wm, tvc1 or tvc2.
    #[arg(long)]
    scheme: Option<String>,
    /// Transmitted length.
    #[arg(long = "N")]
    len: Option<usize>,
    /// Reads per frame.
    #[arg(long = "M")]
    reads: Option<usize>,
    /// Single channel point `p = p_ins = p_del`.
    #[arg(long, conflicts_with = "p_list")]
    p: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    p_list: Option<Vec<f64>>,
    #[arg(long)]
    p_sub: Option<f64>,
    /// Codebook file for the block schemes.
    #[arg(long, value_name = "FILE")]
    codebook: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    /// Samples per point.
    #[arg(long = "V")]
    samples: Option<usize>,
}

#[derive(Debug, Args)]
struct FerArgs {
    #[arg(long)]
    lift: Option<usize>,
    #[arg(long)]
    turbo_iters: Option<usize>,
    #[arg(long)]
    max_errors: Option<u64>,
    #[arg(long)]
    max_frames: Option<u64>,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
}

impl From<dnafb::Error> for CliError {
    fn from(e: dnafb::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

impl Common {
    /// Loads the configuration file and applies the flag overrides.
    fn resolve(&self) -> CliResult<Config> {
        let mut c = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        if let Some(seed) = self.seed {
            c.seed = seed;
        }
        if let Some(s) = &self.scheme {
            c.inner.scheme = s.clone();
        }
        if let Some(n) = self.len {
            c.inner.len = n;
        }
        if let Some(m) = self.reads {
            c.pipeline.reads = m;
        }
        if let Some(p) = self.p {
            c.channel.p_list = vec![p];
        }
        if let Some(ps) = &self.p_list {
            c.channel.p_list = ps.clone();
        }
        if let Some(p) = self.p_sub {
            c.channel.p_sub = p;
        }
        if let Some(path) = &self.codebook {
            c.inner.codebook = Some(path.clone());
        }
        if c.pipeline.reads == 0 {
            return Err(invalid("pipeline.reads", "at least one read is required").into());
        }
        c.kind()?;
        c.p_list()?;
        Ok(c)
    }

    fn init_workers(&self) -> CliResult<()> {
        if let Some(k) = self.workers {
            if k == 0 {
                return Err(invalid("workers", "must be at least 1").into());
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        }
        Ok(())
    }

    fn emit(&self, table: &Table, config: &Config) -> CliResult<()> {
        emit(table, config, self.out.as_deref(), self.json.as_deref())?;
        Ok(())
    }
}

impl SamplingArgs {
    fn apply(&self, c: &mut Config) -> CliResult<()> {
        if let Some(v) = self.samples {
            c.sampling.samples = v;
        }
        if c.sampling.samples == 0 {
            return Err(invalid("sampling.samples", "at least one sample is required").into());
        }
        c.threshold()?;
        c.invalid_policy()?;
        Ok(())
    }
}

impl FerArgs {
    fn apply(&self, c: &mut Config) {
        if let Some(l) = self.lift {
            c.outer.lift = Some(l);
        }
        if let Some(t) = self.turbo_iters {
            c.pipeline.turbo_iters = t;
        }
        if let Some(e) = self.max_errors {
            c.pipeline.max_errors = e;
        }
        if let Some(f) = self.max_frames {
            c.pipeline.max_frames = f;
        }
    }
}

fn sample_config(c: &Config, outer_len: usize, point: usize) -> SampleConfig {
    SampleConfig {
        outer_len,
        samples: c.sampling.samples,
        reads: c.pipeline.reads,
        seed: rng::split_seed(c.seed, Stream::Sample, point as u64),
        decoder: c.decoder(),
    }
}

fn channel_sample(common: &Common, count: usize) -> CliResult<()> {
    let c = common.resolve()?;
    if count == 0 {
        return Err(invalid("count", "must be positive").into());
    }
    let mut table = Table::new(
        "channel-sample",
        &[
            "p_id", "sample", "read", "N", "N_out", "final_drift", "insertions", "deletions", "substitutions", "x", "y",
        ],
    );
    let q = c.channel.q;
    for (j, &p) in c.p_list()?.iter().enumerate() {
        let params = c.channel(p)?;
        for s in 0..count {
            let seed = rng::split_seed(rng::split_seed(c.seed, Stream::Sample, j as u64), Stream::Sample, s as u64);
            let mut r = rng::stream_rng(seed, Stream::Message, 0);
            let x: Vec<u8> = (0..c.inner.len).map(|_| r.gen_range(0..q as u8)).collect();
            let x = DnaSequence::new(x, q)?;
            let set = transmit_multi(&x, &params, c.pipeline.reads, seed)?;
            for (m, (y, trace)) in set.reads.iter().zip(&set.traces).enumerate() {
                let subs = trace
                    .events
                    .iter()
                    .filter(|e| matches!(e, dnafb::channel::Event::TransmitSub(_)))
                    .count();
                table.push(vec![
                    json!(p),
                    json!(s),
                    json!(m),
                    json!(x.len()),
                    json!(y.len()),
                    json!(trace.final_drift()),
                    json!(trace.insertions()),
                    json!(trace.deletions()),
                    json!(subs),
                    json!(x.to_string()),
                    json!(y.to_string()),
                ]);
            }
        }
    }
    common.emit(&table, &c)
}

fn dt_bound_cmd(common: &Common, sampling: &SamplingArgs, dump_alpha: Option<&PathBuf>) -> CliResult<()> {
    let mut c = common.resolve()?;
    sampling.apply(&mut c)?;
    let scheme = c.scheme()?;
    let outer_len = c.outer_len(&scheme, c.inner.len)?;
    let len = scheme.coded_len(outer_len);
    let threshold = c.threshold()?;
    let policy = c.invalid_policy()?;
    let bits = threshold.bits(len, outer_len, scheme.outer_alphabet());
    let mut table = Table::new(
        "dt-bound",
        &["p_id", "bound", "stderr", "V", "invalid_frac", "threshold_bits", "N", "M", "scheme"],
    );
    for (j, &p) in c.p_list()?.iter().enumerate() {
        let params = c.channel(p)?;
        let cfg = sample_config(&c, outer_len, j);
        if j == 0 {
            if let Some(path) = dump_alpha {
                let frame = sample_frame(&scheme, &params, &cfg, 0)?;
                let dec = FrameDecoder::new(&frame.spec, &frame.reads)?;
                let (alpha, _) = dec.forward(&uniform_priors(outer_len, frame.spec.labels))?;
                let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
                alpha.dump(&mut w)?;
            }
        }
        let samples = sample_densities(&scheme, &params, &cfg)?;
        let est = dt_bound(&samples, bits, policy)?;
        table.push(vec![
            json!(p),
            json!(est.bound),
            json!(est.stderr),
            json!(samples.len()),
            json!(est.invalid_frac),
            json!(est.threshold_bits),
            json!(len),
            json!(c.pipeline.reads),
            json!(scheme.kind.name()),
        ]);
    }
    common.emit(&table, &c)
}

fn simulate_fer(common: &Common, fer: &FerArgs) -> CliResult<()> {
    let mut c = common.resolve()?;
    fer.apply(&mut c);
    let sys = c.system(c.inner.len)?;
    let points = run_curve(&sys, c.p_list()?, c.channel.p_sub, c.channel.q, c.stop_rule(), c.seed)?;
    let mut table = Table::new(
        "simulate-fer",
        &[
            "p_id", "frames", "errors", "fer", "ci_lo", "ci_hi", "overflow_frac", "scheme", "N", "M", "turbo_iters",
        ],
    );
    for pt in points {
        table.push(vec![
            json!(pt.p),
            json!(pt.frames),
            json!(pt.errors),
            json!(pt.fer),
            json!(pt.ci_lo),
            json!(pt.ci_hi),
            json!(pt.overflow_frac()),
            json!(sys.scheme.kind.name()),
            json!(sys.len()),
            json!(sys.reads),
            json!(pt.mean_turbo_iters),
        ]);
    }
    common.emit(&table, &c)
}

fn normalized_rate_cmd(
    common: &Common,
    sampling: &SamplingArgs,
    fer: &FerArgs,
    n_list: Option<&Vec<usize>>,
    target: Option<f64>,
) -> CliResult<()> {
    let mut c = common.resolve()?;
    sampling.apply(&mut c)?;
    fer.apply(&mut c);
    if let Some(ns) = n_list {
        c.sampling.n_list = ns.clone();
    }
    if let Some(t) = target {
        c.sampling.target_fer = t;
    }
    let target = c.sampling.target_fer;
    if !(target > 0.0 && target < 1.0) {
        return Err(invalid("sampling.target_fer", "must lie in (0, 1)").into());
    }
    if c.sampling.n_list.is_empty() {
        return Err(invalid("sampling.n_list", "at least one length is required").into());
    }
    if c.outer.lift.is_some() && c.sampling.n_list.len() > 1 {
        return Err(invalid("outer.lift", "a fixed lift cannot serve several lengths").into());
    }
    let mut ps = c.p_list()?.to_vec();
    ps.sort_by(f64::total_cmp);
    let policy = c.invalid_policy()?;
    let mut table = Table::new(
        "normalized-rate",
        &[
            "N", "K", "R", "p_star", "fer_at_p", "r_max", "normalized", "V", "M", "scheme", "target_fer",
        ],
    );
    let systems = c
        .sampling
        .n_list
        .iter()
        .map(|&n| c.system(n))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, sys) in systems.iter().enumerate() {
        let seed = rng::split_seed(c.seed, Stream::Frame, i as u64);
        let points = run_curve(sys, &ps, c.channel.p_sub, c.channel.q, c.stop_rule(), seed)?;
        let fers: Vec<String> = points.iter().map(|p| format!("{}:{}", p.p, p.fer)).collect();
        let mut row = vec![json!(sys.len()), json!(sys.dimension()), json!(sys.rate())];
        match fer_crossing(&points, target) {
            Some(p_star) => {
                let params = c.channel(p_star)?;
                let cfg = SampleConfig {
                    seed: rng::split_seed(seed, Stream::Sample, 0),
                    ..sample_config(&c, sys.outer_len(), 0)
                };
                let samples = sample_densities(&sys.scheme, &params, &cfg)?;
                let nr = normalized_rate(&samples, target, sys.len(), sys.rate(), policy)?;
                row.extend([
                    json!(p_star),
                    json!(fers.join(" ")),
                    json!(nr.r_max),
                    if nr.degenerate { json!(null) } else { json!(nr.normalized) },
                ]);
            }
            None => {
                eprintln!(
                    "warning: FER at N = {} never crosses {target} on the p list; widen --p-list",
                    sys.len()
                );
                row.extend([json!(null), json!(fers.join(" ")), json!(null), json!(null)]);
            }
        }
        row.extend([
            json!(c.sampling.samples),
            json!(sys.reads),
            json!(sys.scheme.kind.name()),
            json!(target),
        ]);
        table.push(row);
    }
    common.emit(&table, &c)
}

fn validate_codebook(file: &PathBuf, q: usize) -> CliResult<()> {
    let text = std::fs::read_to_string(file).map_err(|source| ConfigError::Read {
        path: file.clone(),
        source,
    })?;
    let books = parse_codebooks(&text, q).map_err(|e| invalid("codebook", e))?;
    println!("codebook,n,k,entries,min_levenshtein,min_indel");
    for b in &books {
        let show = |m| codebook_min_distance(b, m).map_or_else(|_| "-".to_string(), |d| d.to_string());
        println!(
            "{},{},{},{},{},{}",
            b.id,
            b.n,
            b.k,
            b.len(),
            show(DistanceMetric::Edit),
            show(DistanceMetric::Indel)
        );
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::ChannelSample { common, count } => {
            common.init_workers()?;
            channel_sample(common, *count)
        }
        Command::DtBound {
            common,
            sampling,
            dump_alpha,
        } => {
            common.init_workers()?;
            dt_bound_cmd(common, sampling, dump_alpha.as_ref())
        }
        Command::SimulateFer { common, fer } => {
            common.init_workers()?;
            simulate_fer(common, fer)
        }
        Command::NormalizedRate {
            common,
            sampling,
            fer,
            n_list,
            target_fer,
        } => {
            common.init_workers()?;
            normalized_rate_cmd(common, sampling, fer, n_list.as_ref(), *target_fer)
        }
        Command::ValidateCodebook { file, q } => validate_codebook(file, *q),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("dnafb: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Runtime(_) => ExitCode::from(1),
            }
        }
    }
}
