//! Monte-Carlo harness: channel and noise sampling, per-trial decoding with
//! every selected decoder, and seeded BER sweeps.
//!
//! Each trial draws from its own ChaCha20 stream, selected by the SNR point
//! and trial index, so results do not depend on thread count or scheduling.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand::SeedableRng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::codebook::{encode, DispersionCode};
use crate::decoders::{
    decode_f, decode_fprime, decode_lattice, decode_trace, exhaustive_ml, Constellation,
    DecodedMessage, SoftEstimate,
};
use crate::error::{Error, Result};
use crate::lattice::{
    build_check_h, deinterleave_symbols, stack_received, vectorize_received, ChannelRealization,
};
use crate::numfmt::g17;

/// Version of the JSON and CSV layouts written by [`BerResult`].
pub const SCHEMA_VERSION: u32 = 1;

/// Identifier of the random generator and how per-trial streams are derived.
pub const RNG_ALGORITHM: &str =
    "chacha20 (rand_chacha 0.9): seed_from_u64(seed), stream = (snr_index << 40) | trial";

/// How SNR maps to noise power.
pub const SNR_DEFINITION: &str = "Es/N0 per receive antenna, unit average symbol energy, \
     noise variance N0/2 per real dimension, N0 = 10^(-snr_db/10)";

/// Relative tolerance for comparing soft estimates across decoders.
pub const AGREEMENT_TOL: f64 = 1e-9;

/// Largest trial index that fits in the low bits of a stream id.
const MAX_TRIALS: u64 = 1 << 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    Lattice,
    Trace,
    F,
    FPrime,
    Exhaustive,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 5] = [
        DecoderKind::Lattice,
        DecoderKind::Trace,
        DecoderKind::F,
        DecoderKind::FPrime,
        DecoderKind::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Lattice => "lattice",
            DecoderKind::Trace => "trace",
            DecoderKind::F => "f",
            DecoderKind::FPrime => "fprime",
            DecoderKind::Exhaustive => "exhaustive",
        }
    }

    /// Parses a comma-separated list; `all` selects every decoder.
    pub fn parse_list(text: &str) -> Result<Vec<DecoderKind>> {
        let mut out = Vec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part == "all" {
                for d in Self::ALL {
                    if !out.contains(&d) {
                        out.push(d);
                    }
                }
                continue;
            }
            let d: DecoderKind = part.parse()?;
            if !out.contains(&d) {
                out.push(d);
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig("no decoders selected".into()));
        }
        Ok(out)
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown decoder '{s}'")))
    }
}

impl Serialize for DecoderKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Writes non-finite SNR values as the strings `inf` / `-inf`.
fn serialize_snr_list<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&SnrValue(*x))?;
    }
    seq.end()
}

struct SnrValue(f64);

impl Serialize for SnrValue {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&format_snr(self.0))
        }
    }
}

fn serialize_snr<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    SnrValue(*v).serialize(s)
}

fn format_snr(x: f64) -> String {
    if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        g17(x)
    }
}

/// Parses a comma-separated SNR list in dB; `inf` means no noise.
pub fn parse_snr_list(text: &str) -> Result<Vec<f64>> {
    let list = text
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let v: f64 = p
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad SNR value '{p}'")))?;
            if v.is_nan() {
                return Err(Error::InvalidConfig("SNR may not be NaN".into()));
            }
            Ok(v)
        })
        .collect::<Result<Vec<f64>>>()?;
    if list.is_empty() {
        return Err(Error::InvalidConfig("SNR list is empty".into()));
    }
    Ok(list)
}

#[derive(Debug, Clone, Serialize)]
pub struct SimConfig {
    pub code: String,
    pub constellation: String,
    pub rx_antennas: usize,
    #[serde(serialize_with = "serialize_snr_list")]
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub decoders: Vec<DecoderKind>,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.trials > MAX_TRIALS {
            return Err(Error::InvalidConfig(format!("trials must be at most {MAX_TRIALS}")));
        }
        if self.snr_db.is_empty() {
            return Err(Error::InvalidConfig("SNR list is empty".into()));
        }
        if self.snr_db.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidConfig("SNR may not be NaN".into()));
        }
        if self.rx_antennas == 0 {
            return Err(Error::InvalidConfig("M must be at least 1".into()));
        }
        if self.decoders.is_empty() {
            return Err(Error::InvalidConfig("no decoders selected".into()));
        }
        Ok(())
    }
}

/// `N x M` channel with i.i.d. `CN(0, 1)` entries.
pub fn sample_channel<R: Rng + ?Sized>(tx_antennas: usize, rx_antennas: usize, rng: &mut R) -> ChannelRealization {
    ChannelRealization::new(complex_gaussian(tx_antennas, rx_antennas, 1.0, rng))
}

/// Matrix of i.i.d. circular complex Gaussians with total variance `var`.
fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> DMatrix<Complex64> {
    let sd = (var / 2.0).sqrt();
    let mut m = DMatrix::from_element(rows, cols, Complex64::new(0.0, 0.0));
    for v in m.iter_mut() {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *v = Complex64::new(sd * re, sd * im);
    }
    m
}

/// Noise spectral density for an SNR in dB; `+inf` gives 0.
pub fn noise_density(snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        10f64.powf(-snr_db / 10.0)
    }
}

/// Generator for one trial of one SNR point.
pub fn trial_rng(seed: u64, snr_index: usize, trial: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) | trial);
    rng
}

#[derive(Debug, Clone)]
pub struct DecoderOutput {
    pub kind: DecoderKind,
    pub soft: Option<SoftEstimate>,
    pub message: DecodedMessage,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    /// Transmitted component indices, interleaved `Re/Im`.
    pub sent: Vec<usize>,
    pub outputs: Vec<DecoderOutput>,
    /// Every decoder returned the same hard decision.
    pub decisions_agree: bool,
    /// Every soft estimate matches the first within [`AGREEMENT_TOL`].
    pub soft_agree: bool,
    /// Channels discarded because `sigma` was zero.
    pub redraws: u64,
}

impl TrialOutcome {
    pub fn agree(&self) -> bool {
        self.decisions_agree && self.soft_agree
    }
}

fn soft_close(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().chain(b).fold(0.0f64, |m, v| m.max(v.abs()));
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= AGREEMENT_TOL * scale)
}

/// One transmission: uniform symbols, Rayleigh channel, AWGN at `n0`, then
/// every requested decoder.
pub fn run_trial<R: Rng + ?Sized>(
    code: &DispersionCode,
    constellation: &Constellation,
    rx_antennas: usize,
    n0: f64,
    rng: &mut R,
    decoders: &[DecoderKind],
) -> Result<TrialOutcome> {
    let side = constellation.alphabet().len();
    let sent: Vec<usize> = (0..2 * code.num_symbols()).map(|_| rng.random_range(0..side)).collect();
    let components: Vec<f64> = sent.iter().map(|&i| constellation.alphabet()[i]).collect();
    let symbols = deinterleave_symbols(&components);

    let mut redraws = 0;
    let channel = loop {
        let ch = sample_channel(code.tx_antennas(), rx_antennas, rng);
        if ch.frobenius_sq() > 0.0 {
            break ch;
        }
        redraws += 1;
    };
    let noise = if n0 > 0.0 {
        complex_gaussian(code.block_length(), rx_antennas, n0, rng)
    } else {
        DMatrix::from_element(code.block_length(), rx_antennas, Complex64::new(0.0, 0.0))
    };
    let received = encode(code, &symbols)? * channel.matrix() + noise;

    let mut outputs = Vec::with_capacity(decoders.len());
    let mut lattice = None;
    for &kind in decoders {
        let (soft, message) = match kind {
            DecoderKind::Lattice | DecoderKind::Exhaustive => {
                if lattice.is_none() {
                    lattice = Some(build_check_h(code, &channel)?);
                }
                let lat = lattice.as_ref().expect("built above");
                let ycheck = vectorize_received(&received);
                if kind == DecoderKind::Lattice {
                    let (s, m) = decode_lattice(lat, &ycheck, constellation)?;
                    (Some(s), m)
                } else {
                    (None, exhaustive_ml(lat, &ycheck, constellation)?)
                }
            }
            DecoderKind::Trace => {
                let (s, m) = decode_trace(code, &channel, &received, constellation, code.scale())?;
                (Some(s), m)
            }
            DecoderKind::F => {
                let z = stack_received(&received).z;
                let (s, m) = decode_f(code, &channel, &z, constellation, code.scale())?;
                (Some(s), m)
            }
            DecoderKind::FPrime => {
                let zp = stack_received(&received).zprime;
                let (s, m) = decode_fprime(code, &channel, &zp, constellation, code.scale())?;
                (Some(s), m)
            }
        };
        outputs.push(DecoderOutput { kind, soft, message });
    }

    let decisions_agree = outputs
        .windows(2)
        .all(|w| w[0].message.indices == w[1].message.indices);
    let softs: Vec<&SoftEstimate> = outputs.iter().filter_map(|o| o.soft.as_ref()).collect();
    let soft_agree = softs.windows(2).all(|w| soft_close(&w[0].z, &w[1].z));
    Ok(TrialOutcome {
        sent,
        outputs,
        decisions_agree,
        soft_agree,
        redraws,
    })
}

/// `(symbol errors, bit errors)` of a decision against the sent indices,
/// with Gray-labeled components.
pub fn count_errors(sent: &[usize], decided: &[usize]) -> (u64, u64) {
    let mut sym = 0;
    let mut bits = 0;
    for (s, d) in sent.chunks(2).zip(decided.chunks(2)) {
        if s != d {
            sym += 1;
        }
        for (a, b) in s.iter().zip(d) {
            bits += u64::from(Constellation::bit_distance(*a, *b));
        }
    }
    (sym, bits)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BerPoint {
    #[serde(serialize_with = "serialize_snr")]
    pub snr_db: f64,
    pub trials: u64,
    pub sym_errors: u64,
    pub bit_errors: u64,
    pub ser: f64,
    pub ber: f64,
    /// Trials on which some decoder disagreed with the others.
    pub disagreements: u64,
    /// Channels redrawn because `sigma` was zero.
    pub redraws: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BerResult {
    pub schema: u32,
    pub rng: &'static str,
    pub snr_definition: &'static str,
    /// Errors are counted against this decoder's decisions.
    pub reference_decoder: DecoderKind,
    /// Fraction of all trials on which every decoder agreed.
    pub agreement_rate: f64,
    pub config: SimConfig,
    pub points: Vec<BerPoint>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    sym: u64,
    bits: u64,
    disagreements: u64,
    redraws: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            sym: self.sym + o.sym,
            bits: self.bits + o.bits,
            disagreements: self.disagreements + o.disagreements,
            redraws: self.redraws + o.redraws,
        }
    }
}

/// BER sweep over every SNR point, trials in parallel on the current rayon
/// pool.
pub fn run_ber(config: &SimConfig, code: &DispersionCode) -> Result<BerResult> {
    config.validate()?;
    if code.id() != config.code {
        return Err(Error::InvalidConfig(format!(
            "config names code '{}' but '{}' was supplied",
            config.code,
            code.id()
        )));
    }
    let constellation = Constellation::from_name(&config.constellation)?;
    let k = code.num_symbols() as u64;
    let bits_per_symbol = u64::from(constellation.bits_per_symbol());

    let mut points = Vec::with_capacity(config.snr_db.len());
    for (p, &snr) in config.snr_db.iter().enumerate() {
        let n0 = noise_density(snr);
        let tally = (0..config.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = trial_rng(config.seed, p, t);
                let out = run_trial(code, &constellation, config.rx_antennas, n0, &mut rng, &config.decoders)?;
                let (sym, bits) = count_errors(&out.sent, &out.outputs[0].message.indices);
                Ok::<Tally, Error>(Tally {
                    sym,
                    bits,
                    disagreements: u64::from(!out.agree()),
                    redraws: out.redraws,
                })
            })
            .try_reduce(Tally::default, |a, b| Ok(a + b))?;
        let symbols = config.trials * k;
        points.push(BerPoint {
            snr_db: snr,
            trials: config.trials,
            sym_errors: tally.sym,
            bit_errors: tally.bits,
            ser: tally.sym as f64 / symbols as f64,
            ber: tally.bits as f64 / (symbols * bits_per_symbol) as f64,
            disagreements: tally.disagreements,
            redraws: tally.redraws,
        });
    }
    let disagreements: u64 = points.iter().map(|p| p.disagreements).sum();
    let total = config.trials * points.len() as u64;
    Ok(BerResult {
        schema: SCHEMA_VERSION,
        rng: RNG_ALGORITHM,
        snr_definition: SNR_DEFINITION,
        reference_decoder: config.decoders[0],
        agreement_rate: (total - disagreements) as f64 / total as f64,
        config: config.clone(),
        points,
    })
}

/// [`run_ber`] on a dedicated pool; `threads == 0` lets rayon decide.
pub fn run_ber_with_threads(config: &SimConfig, code: &DispersionCode, threads: usize) -> Result<BerResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_ber(config, code))
}

impl BerResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("BerResult serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("# ostbc-lab ber schema={}\n", self.schema);
        s.push_str("snr_db,trials,sym_errors,bit_errors,ser,ber\n");
        for p in &self.points {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                format_snr(p.snr_db),
                p.trials,
                p.sym_errors,
                p.bit_errors,
                g17(p.ser),
                g17(p.ber)
            ));
        }
        s
    }

    pub fn total_disagreements(&self) -> u64 {
        self.points.iter().map(|p| p.disagreements).sum()
    }

    pub fn total_redraws(&self) -> u64 {
        self.points.iter().map(|p| p.redraws).sum()
    }
}
