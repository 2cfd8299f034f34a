//! Maximum-likelihood decoders for orthogonal codes.
//!
//! Four routes compute the same soft estimate of the interleaved symbol
//! vector `(Re s_1, Im s_1, ..., Re s_K, Im s_K)`:
//!
//! - [`decode_lattice`]: `Hcheck^T ycheck / sigma`;
//! - [`decode_trace`]: per symbol, `Re Tr(H^H A_k^H Y)` and
//!   `Im Tr(H^H B_k^H Y)` over `c ||H||^2`;
//! - [`decode_f`]: `Re(F^H z) / (c ||H||^2)`;
//! - [`decode_fprime`]: `F'^T z' / (c ||H||^2)`.
//!
//! Orthogonality makes the metric separable, so each real coordinate is then
//! quantized on its own ([`quantize`]). [`exhaustive_ml`] searches the full
//! product alphabet and serves as the ground truth.

mod constellation;
mod exhaustive;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use crate::codebook::{DispersionCode, DispersionMatrix};
use crate::error::{Error, Result};
use crate::lattice::{
    build_f, deinterleave_symbols, ChannelRealization, Permutation, RealLattice,
};

pub use constellation::Constellation;
pub use exhaustive::{exhaustive_ml, EXHAUSTIVE_LIMIT};

/// Unquantized estimate, interleaved `Re/Im`, `2K` values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftEstimate {
    pub z: Vec<f64>,
}

/// Hard decision: component indices into the alphabet, their values, and
/// the complex symbols they interleave to.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecodedMessage {
    pub indices: Vec<usize>,
    pub components: Vec<f64>,
    pub symbols: Vec<Complex64>,
}

impl DecodedMessage {
    pub fn from_indices(indices: Vec<usize>, constellation: &Constellation) -> Self {
        let components: Vec<f64> = indices.iter().map(|&i| constellation.alphabet()[i]).collect();
        let symbols = deinterleave_symbols(&components);
        Self { indices, components, symbols }
    }

    /// Quantizes every coordinate of a soft estimate.
    pub fn from_soft(soft: &SoftEstimate, constellation: &Constellation) -> Result<Self> {
        let indices = soft
            .z
            .iter()
            .map(|&z| quantize(z, constellation.alphabet()).map(|(i, _)| i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_indices(indices, constellation))
    }
}

/// Nearest alphabet point to `z`. Exact midpoints go to the lower index.
pub fn quantize(z: f64, alphabet: &[f64]) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    let mut best_dist = f64::INFINITY;
    for (i, &a) in alphabet.iter().enumerate() {
        let d = (z - a).abs();
        if d < best_dist {
            best_dist = d;
            best = Some((i, a));
        }
    }
    best.ok_or(Error::EmptyAlphabet)
}

/// `z = Hcheck^T ycheck / sigma`, then per-coordinate quantization.
pub fn decode_lattice(
    lat: &RealLattice,
    ycheck: &[f64],
    constellation: &Constellation,
) -> Result<(SoftEstimate, DecodedMessage)> {
    if lat.sigma() == 0.0 {
        return Err(Error::DegenerateChannel);
    }
    if ycheck.len() != lat.num_real_observations() {
        return Err(Error::DimensionMismatch {
            what: "real received vector",
            expected: format!("{}", lat.num_real_observations()),
            got: format!("{}", ycheck.len()),
        });
    }
    let ybar = lat.hcheck().tr_mul(&DVector::from_column_slice(ycheck));
    let inv = 1.0 / lat.sigma();
    let soft = SoftEstimate {
        z: ybar.iter().map(|v| v * inv).collect(),
    };
    let msg = DecodedMessage::from_soft(&soft, constellation)?;
    Ok((soft, msg))
}

fn norm_denominator(channel: &ChannelRealization, scale: u32) -> Result<f64> {
    let d = f64::from(scale) * channel.frobenius_sq();
    if d == 0.0 {
        Err(Error::DegenerateChannel)
    } else {
        Ok(d)
    }
}

fn check_channel(code: &DispersionCode, channel: &ChannelRealization) -> Result<()> {
    if code.tx_antennas() != channel.tx_antennas() || channel.rx_antennas() == 0 {
        return Err(Error::DimensionMismatch {
            what: "channel",
            expected: format!("{} x M (M >= 1)", code.tx_antennas()),
            got: format!("{} x {}", channel.tx_antennas(), channel.rx_antennas()),
        });
    }
    Ok(())
}

/// `Tr(H^H D^H Y) = sum_{t,j} conj((D H)_{t,j}) Y_{t,j}`; only the requested
/// part is accumulated and zero dispersion entries are skipped.
fn trace_part(d: &DispersionMatrix, h: &DMatrix<Complex64>, y: &DMatrix<Complex64>, imag: bool) -> f64 {
    let mut acc = 0.0;
    for t in 0..d.rows() {
        for n in 0..d.cols() {
            let coef = d.get(t, n);
            if coef.is_zero() {
                continue;
            }
            let w = coef.value();
            for j in 0..h.ncols() {
                let (hv, yv) = (h[(n, j)], y[(t, j)]);
                // conj(w h) y
                acc += w * if imag {
                    hv.re * yv.im - hv.im * yv.re
                } else {
                    hv.re * yv.re + hv.im * yv.im
                };
            }
        }
    }
    acc
}

/// Trace-form decoder:
/// `s_k = (Re Tr(H^H A_k^H Y) + i Im Tr(H^H B_k^H Y)) / (c ||H||^2)`.
pub fn decode_trace(
    code: &DispersionCode,
    channel: &ChannelRealization,
    received: &DMatrix<Complex64>,
    constellation: &Constellation,
    scale: u32,
) -> Result<(SoftEstimate, DecodedMessage)> {
    check_channel(code, channel)?;
    if received.nrows() != code.block_length() || received.ncols() != channel.rx_antennas() {
        return Err(Error::DimensionMismatch {
            what: "received block",
            expected: format!("{} x {}", code.block_length(), channel.rx_antennas()),
            got: format!("{} x {}", received.nrows(), received.ncols()),
        });
    }
    let inv = 1.0 / norm_denominator(channel, scale)?;
    let h = channel.matrix();
    let mut z = Vec::with_capacity(2 * code.num_symbols());
    for k in 0..code.num_symbols() {
        z.push(trace_part(code.a(k), h, received, false) * inv);
        z.push(trace_part(code.b(k), h, received, true) * inv);
    }
    let soft = SoftEstimate { z };
    let msg = DecodedMessage::from_soft(&soft, constellation)?;
    Ok((soft, msg))
}

/// `s' = Re(F^H z) / (c ||H||^2)` with `z = vec(Y)`, reordered to the
/// interleaved layout.
pub fn decode_f(
    code: &DispersionCode,
    channel: &ChannelRealization,
    z: &[Complex64],
    constellation: &Constellation,
    scale: u32,
) -> Result<(SoftEstimate, DecodedMessage)> {
    let f = build_f(code, channel)?.joined();
    if z.len() != f.nrows() {
        return Err(Error::DimensionMismatch {
            what: "vec(Y)",
            expected: format!("{}", f.nrows()),
            got: format!("{}", z.len()),
        });
    }
    let inv = 1.0 / norm_denominator(channel, scale)?;
    // Re(conj(f) z) only; the imaginary parts are never formed.
    let stacked: Vec<f64> = (0..f.ncols())
        .map(|c| {
            f.column(c)
                .iter()
                .zip(z)
                .map(|(fv, zv)| fv.re * zv.re + fv.im * zv.im)
                .sum::<f64>()
                * inv
        })
        .collect();
    let soft = SoftEstimate {
        z: Permutation::interleave(code.num_symbols()).apply(&stacked),
    };
    let msg = DecodedMessage::from_soft(&soft, constellation)?;
    Ok((soft, msg))
}

/// `s' = F'^T z' / (c ||H||^2)`, reordered to the interleaved layout.
pub fn decode_fprime(
    code: &DispersionCode,
    channel: &ChannelRealization,
    zprime: &[f64],
    constellation: &Constellation,
    scale: u32,
) -> Result<(SoftEstimate, DecodedMessage)> {
    let fp = build_f(code, channel)?.stacked_real();
    if zprime.len() != fp.nrows() {
        return Err(Error::DimensionMismatch {
            what: "stacked real received vector",
            expected: format!("{}", fp.nrows()),
            got: format!("{}", zprime.len()),
        });
    }
    let inv = 1.0 / norm_denominator(channel, scale)?;
    let stacked = fp.tr_mul(&DVector::from_column_slice(zprime));
    let stacked: Vec<f64> = stacked.iter().map(|v| v * inv).collect();
    let soft = SoftEstimate {
        z: Permutation::interleave(code.num_symbols()).apply(&stacked),
    };
    let msg = DecodedMessage::from_soft(&soft, constellation)?;
    Ok((soft, msg))
}
