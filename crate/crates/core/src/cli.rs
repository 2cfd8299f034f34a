//! The `ostbc-lab` command line.
//!
//! Exit codes: 0 on success or PASS, 1 when an invariant check fails or a
//! run errors out, 2 on usage errors (bad flags, unknown code, unsupported
//! constellation, malformed code file).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::codebook::{builtin_codes, encode, format_code_file, get_code, measure_c, parse_code_file, DispersionCode};
use crate::error::{Error, Result};
use crate::lattice::{build_check_h, interleave_symbols, vectorize_received, verify_lattice};
use crate::numfmt::g17;
use crate::schedule::{count_ops, dense_formula, frobenius_formula, generate_schedule, OpCount, OptLevel};
use crate::sim::{parse_snr_list, run_ber_with_threads, sample_channel, trial_rng, DecoderKind, SimConfig};

/// Version stamped on every file and JSON document the CLI writes.
pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable capping simulation threads (0 = automatic).
pub const THREADS_ENV: &str = "OSTBC_LAB_THREADS";

/// Receive-antenna counts used for each built-in code in the reproduction table.
pub const TABLE_RX_ANTENNAS: [(&str, usize); 4] = [("g2", 1), ("g3", 2), ("g4", 1), ("h3", 1)];

/// Relative tolerance of the `Hcheck x = vec(G H)` model check.
const MODEL_TOL: f64 = 1e-12;

#[derive(Debug, Parser)]
#[command(name = "ostbc-lab", version, about = "OSTBC lattice decoding and exact operation counts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct CodeSource {
    /// Built-in code id (g2, g3, g4, h3).
    #[arg(long)]
    pub code: Option<String>,
    /// Code description file.
    #[arg(long)]
    pub code_file: Option<PathBuf>,
}

impl CodeSource {
    pub fn load(&self) -> Result<DispersionCode> {
        match (&self.code, &self.code_file) {
            (Some(id), _) => get_code(id),
            (None, Some(path)) => parse_code_file(&fs::read_to_string(path)?),
            (None, None) => Err(Error::InvalidConfig("one of --code or --code-file is required".into())),
        }
    }

    fn describe(&self) -> String {
        match (&self.code, &self.code_file) {
            (Some(id), _) => format!("code={id}"),
            (None, Some(p)) => format!("code-file={}", p.display()),
            (None, None) => String::new(),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the built-in codes, or print one in the code file format.
    Codes {
        #[arg(long, value_name = "ID")]
        dump: Option<String>,
    },
    /// Check code orthogonality and the lattice invariants on random channels.
    Verify {
        #[command(flatten)]
        source: CodeSource,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Count real operations of the lattice decoder.
    Count {
        #[command(flatten)]
        source: CodeSource,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
        level: u8,
        /// Also write the schedule to this file.
        #[arg(long, value_name = "PATH")]
        dump: Option<PathBuf>,
    },
    /// Operation counts for every built-in code, level and closed form, as CSV.
    Table {
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Print the straight-line schedule of the lattice decoder.
    ScheduleDump {
        #[command(flatten)]
        source: CodeSource,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(0..=2))]
        level: u8,
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Monte-Carlo SER/BER sweep; writes <out>.json and <out>.csv.
    Simulate {
        #[command(flatten)]
        source: CodeSource,
        #[arg(long = "mod", default_value = "4qam")]
        modulation: String,
        /// Comma-separated Es/N0 values in dB; `inf` disables noise.
        #[arg(long, default_value = "0,6,12")]
        snr: String,
        #[arg(long, default_value_t = 10000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        /// Comma-separated subset of lattice, trace, f, fprime, exhaustive, or `all`.
        #[arg(long, default_value = "lattice")]
        decoders: String,
        /// Output path prefix.
        #[arg(long, default_value = "ber")]
        out: PathBuf,
    },
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::UnknownCode(_)
        | Error::UnsupportedConstellation(_)
        | Error::Parse { .. }
        | Error::InvalidConfig(_)
        | Error::DimensionMismatch { .. }
        | Error::SearchSpaceTooLarge { .. } => 2,
        _ => 1,
    }
}

/// Runs one command, writing results to `out` and the config echo and
/// diagnostics to `err`. Returns the process exit status.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Codes { dump } => {
            writeln!(err, "# ostbc-lab codes dump={}", dump.as_deref().unwrap_or("-"))?;
            match dump {
                Some(id) => write!(out, "{}", format_code_file(&get_code(id)?))?,
                None => write!(out, "{}", codes_listing())?,
            }
            Ok(0)
        }
        Command::Verify { source, m, trials, seed } => {
            writeln!(err, "# ostbc-lab verify {} m={m} trials={trials} seed={seed}", source.describe())?;
            let code = source.load()?;
            let report = verify_code(&code, *m, *trials, *seed)?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
            Ok(if report.pass { 0 } else { 1 })
        }
        Command::Count { source, m, level, dump } => {
            let dump_desc = dump.as_ref().map(|p| p.display().to_string());
            writeln!(
                err,
                "# ostbc-lab count {} m={m} level={level} dump={}",
                source.describe(),
                dump_desc.as_deref().unwrap_or("-")
            )?;
            let code = source.load()?;
            check_m(*m)?;
            let sched = generate_schedule(&code, *m, OptLevel::from_index(*level)?);
            if let Some(path) = dump {
                fs::write(path, sched.dump())?;
            }
            writeln!(out, "{}", count_ops(&sched))?;
            Ok(0)
        }
        Command::Table { out: path } => {
            let dest = path.as_ref().map(|p| p.display().to_string());
            writeln!(err, "# ostbc-lab table out={}", dest.as_deref().unwrap_or("-"))?;
            let csv = table_csv()?;
            emit(out, path.as_deref(), &csv)?;
            Ok(0)
        }
        Command::ScheduleDump { source, m, level, out: path } => {
            let dest = path.as_ref().map(|p| p.display().to_string());
            writeln!(
                err,
                "# ostbc-lab schedule-dump {} m={m} level={level} out={}",
                source.describe(),
                dest.as_deref().unwrap_or("-")
            )?;
            let code = source.load()?;
            check_m(*m)?;
            let sched = generate_schedule(&code, *m, OptLevel::from_index(*level)?);
            emit(out, path.as_deref(), &sched.dump())?;
            Ok(0)
        }
        Command::Simulate {
            source,
            modulation,
            snr,
            trials,
            seed,
            m,
            decoders,
            out: prefix,
        } => {
            let threads = threads_from_env()?;
            let code = source.load()?;
            let config = SimConfig {
                code: code.id().to_string(),
                constellation: modulation.clone(),
                rx_antennas: *m,
                snr_db: parse_snr_list(snr)?,
                trials: *trials,
                seed: *seed,
                decoders: DecoderKind::parse_list(decoders)?,
            };
            config.validate()?;
            crate::decoders::Constellation::from_name(modulation)?;
            writeln!(
                err,
                "# ostbc-lab simulate {} mod={modulation} snr={snr} trials={trials} seed={seed} m={m} decoders={} out={} threads={threads}",
                source.describe(),
                config.decoders.iter().map(|d| d.name()).collect::<Vec<_>>().join(","),
                prefix.display()
            )?;
            let result = run_ber_with_threads(&config, &code, threads)?;
            let json_path = with_suffix(prefix, "json");
            let csv_path = with_suffix(prefix, "csv");
            fs::write(&json_path, result.to_json())?;
            fs::write(&csv_path, result.to_csv())?;
            write!(out, "{}", result.to_csv())?;
            writeln!(
                out,
                "# agreement={}% redraws={} seed={seed}",
                g17(100.0 * result.agreement_rate),
                result.total_redraws()
            )?;
            writeln!(out, "# wrote {} {}", json_path.display(), csv_path.display())?;
            Ok(0)
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidConfig("--m must be at least 1".into()));
    }
    Ok(())
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => write!(out, "{text}")?,
    }
    Ok(())
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn threads_from_env() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{THREADS_ENV} must be a non-negative integer, got '{v}'"))),
        _ => Ok(0),
    }
}

/// One line per built-in code: `g2 N=2 T=2 K=2 c=1 rate=1`.
pub fn codes_listing() -> String {
    let mut s = String::new();
    for code in builtin_codes() {
        s.push_str(&format!(
            "{} N={} T={} K={} c={} rate={}\n",
            code.id(),
            code.tx_antennas(),
            code.block_length(),
            code.num_symbols(),
            code.scale(),
            g17(code.rate())
        ));
    }
    s
}

/// Every built-in code at its table `M`: the three schedule levels, then
/// the dense and Frobenius closed forms.
pub fn table_rows() -> Result<Vec<(String, usize, String, OpCount)>> {
    let mut rows = Vec::new();
    for (id, m) in TABLE_RX_ANTENNAS {
        let code = get_code(id)?;
        for level in OptLevel::ALL {
            let count = count_ops(&generate_schedule(&code, m, level));
            rows.push((id.to_string(), m, level.to_string(), count));
        }
        let (k, t, n) = (code.num_symbols(), code.block_length(), code.tx_antennas());
        rows.push((id.to_string(), m, "dense".into(), dense_formula(k, m, t)?));
        rows.push((id.to_string(), m, "frobenius".into(), frobenius_formula(k, m, t, n)?));
    }
    Ok(rows)
}

pub fn table_csv() -> Result<String> {
    let mut s = format!("# ostbc-lab table schema={SCHEMA_VERSION}\n");
    s.push_str("code,M,method,rm,ra\n");
    for (id, m, method, c) in table_rows()? {
        s.push_str(&format!("{id},{m},{method},{},{}\n", c.rm, c.ra));
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub code: String,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CodeSummary {
    pub id: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub c: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub schema: u32,
    pub config: VerifyConfig,
    pub code: CodeSummary,
    /// Scale measured from `G^H G`, if the code is orthogonal at all.
    pub measured_c: Option<u32>,
    /// `max ||G^H G - c (sum |s|^2) I||_max / (c sum |s|^2)` with the declared `c`.
    pub code_max_deviation: f64,
    pub lattice_max_off_diagonal: f64,
    pub lattice_max_diagonal_spread: f64,
    pub lattice_max_sigma_mismatch: f64,
    /// `max |Hcheck x - vec(G H)| / max |vec(G H)|`.
    pub model_max_residual: f64,
    pub degenerate_channels: usize,
    pub failures: Vec<String>,
    pub pass: bool,
}

/// Runs every code and lattice invariant on `trials` seeded random symbol
/// vectors and channels.
pub fn verify_code(code: &DispersionCode, m: usize, trials: usize, seed: u64) -> Result<VerifyReport> {
    check_m(m)?;
    if trials == 0 {
        return Err(Error::InvalidConfig("--trials must be at least 1".into()));
    }
    let mut failures = Vec::new();

    let measured_c = match measure_c(code, trials, seed) {
        Ok(c) => {
            if c != code.scale() {
                failures.push(format!("declared c={} but measured c={c}", code.scale()));
            }
            Some(c)
        }
        Err(e @ Error::NonOrthogonal { .. }) => {
            failures.push(e.to_string());
            None
        }
        Err(e) => return Err(e),
    };

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let c = f64::from(code.scale());
    let mut code_dev = 0.0f64;
    let mut off = 0.0f64;
    let mut spread = 0.0f64;
    let mut mismatch = 0.0f64;
    let mut model = 0.0f64;
    let mut degenerate = 0;
    for t in 0..trials {
        let s: Vec<Complex64> = (0..code.num_symbols())
            .map(|_| Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let energy: f64 = s.iter().map(Complex64::norm_sqr).sum();
        let g = encode(code, &s)?;
        let gram = g.adjoint() * &g;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { c * energy } else { 0.0 };
                code_dev = code_dev.max((gram[(i, j)] - target).norm() / (c * energy));
            }
        }

        let channel = sample_channel(code.tx_antennas(), m, &mut trial_rng(seed, 0, t as u64));
        let lat = build_check_h(code, &channel)?;
        let rep = verify_lattice(&lat);
        if rep.degenerate {
            degenerate += 1;
            continue;
        }
        off = off.max(rep.max_off_diagonal);
        spread = spread.max(rep.max_diagonal_spread);
        mismatch = mismatch.max(rep.sigma_mismatch);

        let x = nalgebra::DVector::from_vec(interleave_symbols(&s));
        let lhs = lat.hcheck() * x;
        let rhs = vectorize_received(&(g * channel.matrix()));
        let scale = rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let diff = lhs.iter().zip(&rhs).fold(0.0f64, |a, (l, r)| a.max((l - r).abs()));
        if scale > 0.0 {
            model = model.max(diff / scale);
        }
    }

    let tol = crate::codebook::ORTHOGONALITY_TOL;
    if code_dev > tol {
        failures.push(format!("G^H G deviates from c (sum |s|^2) I by {code_dev:e}"));
    }
    let ltol = crate::lattice::LATTICE_TOL;
    if off > ltol {
        failures.push(format!("Hcheck^T Hcheck off-diagonal {off:e}"));
    }
    if spread > ltol {
        failures.push(format!("Hcheck^T Hcheck diagonal spread {spread:e}"));
    }
    if mismatch > ltol {
        failures.push(format!("column norm differs from c ||H||^2 by {mismatch:e}"));
    }
    if model > MODEL_TOL {
        failures.push(format!("Hcheck x differs from vec(G H) by {model:e}"));
    }
    if degenerate > 0 {
        failures.push(format!("{degenerate} degenerate channel draws"));
    }

    Ok(VerifyReport {
        schema: SCHEMA_VERSION,
        config: VerifyConfig {
            code: code.id().to_string(),
            m,
            trials,
            seed,
        },
        code: CodeSummary {
            id: code.id().to_string(),
            n: code.tx_antennas(),
            t: code.block_length(),
            k: code.num_symbols(),
            c: code.scale(),
        },
        measured_c,
        code_max_deviation: code_dev,
        lattice_max_off_diagonal: off,
        lattice_max_diagonal_spread: spread,
        lattice_max_sigma_mismatch: mismatch,
        model_max_residual: model,
        degenerate_channels: degenerate,
        pass: failures.is_empty(),
        failures,
    })
}
