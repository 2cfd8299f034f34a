//! Real-valued lattice representation of the OSTBC channel.
//!
//! With `z = vec(Y)` (columns of `Y` stacked), the received block is
//! `z = F_a Re(s) + F_b Im(s) + e` where column `k` of `F_a` is `vec(A_k H)`
//! and column `k` of `F_b` is `i vec(B_k H)`. Splitting real and imaginary
//! parts gives the stacked real matrix
//!
//! ```text
//! F' = [ Re F_a  Re F_b ]
//!      [ Im F_a  Im F_b ]
//! ```
//!
//! and interleaving rows (`Re y, Im y, ...`) and columns (`Re s_1, Im s_1,
//! ...`) turns `F'` into the `2MT x 2K` matrix `Hcheck`. For an orthogonal
//! code `Hcheck^T Hcheck = sigma I` with `sigma = c ||H||_F^2`.

mod symbolic;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::codebook::DispersionCode;
use crate::error::{Error, Result};
use crate::numfmt::g17;

pub use symbolic::{symbolic_check_h, SymEntry, SymMatrix};

/// Relative tolerance for orthogonality and `sigma` checks.
pub const LATTICE_TOL: f64 = 1e-9;

/// An `N x M` complex channel, `h[(i, j)]` from transmit `i` to receive `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: DMatrix<Complex64>,
}

/// Zero-based position of `Re(h_{l,j})` (or `Im` when `imag`) in the real
/// coefficient vector of an `N`-transmit-antenna channel.
pub fn real_coeff_index(l: usize, j: usize, tx_antennas: usize, imag: bool) -> usize {
    2 * l + 2 * j * tx_antennas + usize::from(imag)
}

impl ChannelRealization {
    pub fn new(h: DMatrix<Complex64>) -> Self {
        Self { h }
    }

    pub fn zeros(tx_antennas: usize, rx_antennas: usize) -> Self {
        Self::new(DMatrix::zeros(tx_antennas, rx_antennas))
    }

    /// Inverse of [`ChannelRealization::real_coeffs`].
    pub fn from_real_coeffs(coeffs: &[f64], tx_antennas: usize, rx_antennas: usize) -> Result<Self> {
        if coeffs.len() != 2 * tx_antennas * rx_antennas {
            return Err(Error::DimensionMismatch {
                what: "real channel coefficients",
                expected: format!("{}", 2 * tx_antennas * rx_antennas),
                got: format!("{}", coeffs.len()),
            });
        }
        Ok(Self::new(DMatrix::from_fn(tx_antennas, rx_antennas, |l, j| {
            Complex64::new(
                coeffs[real_coeff_index(l, j, tx_antennas, false)],
                coeffs[real_coeff_index(l, j, tx_antennas, true)],
            )
        })))
    }

    pub fn tx_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn rx_antennas(&self) -> usize {
        self.h.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.h
    }

    /// The `2NM` real coefficients `h_1, h_2, ...`: real and imaginary parts
    /// interleaved, walking `H` column by column.
    pub fn real_coeffs(&self) -> Vec<f64> {
        self.h.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    /// `||H||_F^2`.
    pub fn frobenius_sq(&self) -> f64 {
        self.h.iter().map(Complex64::norm_sqr).sum()
    }
}

/// `Hcheck` together with `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealLattice {
    hcheck: DMatrix<f64>,
    sigma: f64,
    sigma_inner: f64,
    scale: u32,
}

impl RealLattice {
    /// Wraps an arbitrary matrix, e.g. a deliberately corrupted one. `sigma`
    /// is taken as given and the column route is recomputed.
    pub fn from_parts(hcheck: DMatrix<f64>, sigma: f64, scale: u32) -> Self {
        let sigma_inner = if hcheck.ncols() > 0 {
            hcheck.column(0).norm_squared()
        } else {
            0.0
        };
        Self { hcheck, sigma, sigma_inner, scale }
    }

    pub fn hcheck(&self) -> &DMatrix<f64> {
        &self.hcheck
    }

    /// `c ||H||^2`, the value every decoder divides by.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `sigma` recomputed as the squared norm of the first column.
    pub fn sigma_inner(&self) -> f64 {
        self.sigma_inner
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// `2K`.
    pub fn num_real_symbols(&self) -> usize {
        self.hcheck.ncols()
    }

    /// `2MT`.
    pub fn num_real_observations(&self) -> usize {
        self.hcheck.nrows()
    }
}

/// A reordering `out[i] = input[map[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    /// Maps a stacked `(re_0..re_{n-1}, im_0..im_{n-1})` vector to the
    /// interleaved `(re_0, im_0, re_1, im_1, ...)` order.
    pub fn interleave(half: usize) -> Self {
        Self {
            map: (0..2 * half)
                .map(|i| if i % 2 == 0 { i / 2 } else { half + i / 2 })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Source index of output position `i`.
    pub fn source(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn apply<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.map.iter().map(|&i| input[i]).collect()
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &src) in self.map.iter().enumerate() {
            inv[src] = i;
        }
        Self { map: inv }
    }
}

/// The complex `MT x K` matrices `F_a`, `F_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct FMatrices {
    pub fa: DMatrix<Complex64>,
    pub fb: DMatrix<Complex64>,
}

impl FMatrices {
    /// `F = [F_a F_b]`, `MT x 2K`.
    pub fn joined(&self) -> DMatrix<Complex64> {
        let (rows, k) = (self.fa.nrows(), self.fa.ncols());
        DMatrix::from_fn(rows, 2 * k, |r, c| {
            if c < k {
                self.fa[(r, c)]
            } else {
                self.fb[(r, c - k)]
            }
        })
    }

    /// The stacked real matrix `F'`, `2MT x 2K`.
    pub fn stacked_real(&self) -> DMatrix<f64> {
        let f = self.joined();
        let rows = f.nrows();
        DMatrix::from_fn(2 * rows, f.ncols(), |r, c| {
            if r < rows {
                f[(r, c)].re
            } else {
                f[(r - rows, c)].im
            }
        })
    }
}

fn check_dims(code: &DispersionCode, channel: &ChannelRealization) -> Result<()> {
    if code.tx_antennas() != channel.tx_antennas() || channel.rx_antennas() == 0 {
        return Err(Error::DimensionMismatch {
            what: "channel",
            expected: format!("{} x M (M >= 1)", code.tx_antennas()),
            got: format!("{} x {}", channel.tx_antennas(), channel.rx_antennas()),
        });
    }
    Ok(())
}

fn dispersion_times_channel(
    m: &crate::codebook::DispersionMatrix,
    h: &DMatrix<Complex64>,
) -> DMatrix<Complex64> {
    let mut out = DMatrix::<Complex64>::zeros(m.rows(), h.ncols());
    for t in 0..m.rows() {
        for n in 0..m.cols() {
            let coef = m.get(t, n);
            if coef.is_zero() {
                continue;
            }
            let w = coef.value();
            for j in 0..h.ncols() {
                out[(t, j)] += h[(n, j)] * w;
            }
        }
    }
    out
}

/// `F_a = [vec(A_1 H) ... vec(A_K H)]`, `F_b = [i vec(B_1 H) ... i vec(B_K H)]`.
pub fn build_f(code: &DispersionCode, channel: &ChannelRealization) -> Result<FMatrices> {
    check_dims(code, channel)?;
    let rows = code.block_length() * channel.rx_antennas();
    let k = code.num_symbols();
    let mut fa = DMatrix::<Complex64>::zeros(rows, k);
    let mut fb = DMatrix::<Complex64>::zeros(rows, k);
    let i = Complex64::new(0.0, 1.0);
    for kk in 0..k {
        let ah = dispersion_times_channel(code.a(kk), channel.matrix());
        let bh = dispersion_times_channel(code.b(kk), channel.matrix());
        // nalgebra storage is column-major, so iteration order is vec().
        for (r, v) in ah.iter().enumerate() {
            fa[(r, kk)] = *v;
        }
        for (r, v) in bh.iter().enumerate() {
            fb[(r, kk)] = i * v;
        }
    }
    Ok(FMatrices { fa, fb })
}

/// Builds `Hcheck = P_y F' P_s^T` and `sigma = c ||H||^2`.
pub fn build_check_h(code: &DispersionCode, channel: &ChannelRealization) -> Result<RealLattice> {
    let f = build_f(code, channel)?;
    let fprime = f.stacked_real();
    let py = Permutation::interleave(f.fa.nrows());
    let ps = Permutation::interleave(code.num_symbols());
    let hcheck = DMatrix::from_fn(fprime.nrows(), fprime.ncols(), |i, j| {
        fprime[(py.source(i), ps.source(j))]
    });
    let sigma = f64::from(code.scale()) * channel.frobenius_sq();
    Ok(RealLattice::from_parts(hcheck, sigma, code.scale()))
}

/// `(Re y_1^1, Im y_1^1, ..., Re y_T^M, Im y_T^M)`, columns of `Y` in order.
pub fn vectorize_received(y: &DMatrix<Complex64>) -> Vec<f64> {
    y.iter().flat_map(|c| [c.re, c.im]).collect()
}

/// Inverse of [`vectorize_received`].
pub fn devectorize_received(ycheck: &[f64], block_length: usize, rx_antennas: usize) -> Result<DMatrix<Complex64>> {
    if ycheck.len() != 2 * block_length * rx_antennas {
        return Err(Error::DimensionMismatch {
            what: "real received vector",
            expected: format!("{}", 2 * block_length * rx_antennas),
            got: format!("{}", ycheck.len()),
        });
    }
    Ok(DMatrix::from_iterator(
        block_length,
        rx_antennas,
        ycheck.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])),
    ))
}

/// `z = vec(Y)` and `z' = (Re z; Im z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStack {
    pub z: Vec<Complex64>,
    pub zprime: Vec<f64>,
}

pub fn stack_received(y: &DMatrix<Complex64>) -> ComplexStack {
    let z: Vec<Complex64> = y.iter().copied().collect();
    let zprime = z.iter().map(|c| c.re).chain(z.iter().map(|c| c.im)).collect();
    ComplexStack { z, zprime }
}

/// `(Re s_1, Im s_1, ..., Re s_K, Im s_K)`.
pub fn interleave_symbols(symbols: &[Complex64]) -> Vec<f64> {
    symbols.iter().flat_map(|c| [c.re, c.im]).collect()
}

pub fn deinterleave_symbols(x: &[f64]) -> Vec<Complex64> {
    x.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Deviations of a lattice from `Hcheck^T Hcheck = sigma I`,
/// `sigma = c ||H||^2`, all relative to `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeReport {
    pub sigma: f64,
    pub sigma_inner: f64,
    /// `max |(Hcheck^T Hcheck)_{ij}|` over `i != j`, divided by `sigma`.
    pub max_off_diagonal: f64,
    /// `max |(Hcheck^T Hcheck)_{ii} - sigma|`, divided by `sigma`.
    pub max_diagonal_spread: f64,
    /// `|sigma_inner - sigma| / sigma`.
    pub sigma_mismatch: f64,
    pub degenerate: bool,
    pub pass: bool,
}

pub fn verify_lattice(lat: &RealLattice) -> LatticeReport {
    let gram = lat.hcheck().transpose() * lat.hcheck();
    let mut off = 0.0f64;
    let mut spread = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            if i == j {
                spread = spread.max((gram[(i, i)] - lat.sigma()).abs());
            } else {
                off = off.max(gram[(i, j)].abs());
            }
        }
    }
    let mismatch = (lat.sigma_inner() - lat.sigma()).abs();
    let degenerate = lat.sigma() == 0.0;
    if degenerate {
        // Nothing to normalise by; report absolute values.
        return LatticeReport {
            sigma: 0.0,
            sigma_inner: lat.sigma_inner(),
            max_off_diagonal: off,
            max_diagonal_spread: spread,
            sigma_mismatch: mismatch,
            degenerate: true,
            pass: false,
        };
    }
    let s = lat.sigma();
    let (off, spread, mismatch) = (off / s, spread / s, mismatch / s);
    LatticeReport {
        sigma: s,
        sigma_inner: lat.sigma_inner(),
        max_off_diagonal: off,
        max_diagonal_spread: spread,
        sigma_mismatch: mismatch,
        degenerate: false,
        pass: off <= LATTICE_TOL && spread <= LATTICE_TOL && mismatch <= LATTICE_TOL,
    }
}

/// Row-major CSV dump of `Hcheck` with `%.17g` entries.
pub fn hcheck_csv(lat: &RealLattice) -> String {
    let h = lat.hcheck();
    let mut out = String::new();
    for r in 0..h.nrows() {
        let row: Vec<String> = (0..h.ncols()).map(|c| g17(h[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
