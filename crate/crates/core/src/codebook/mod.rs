//! Orthogonal space-time block codes described by real dispersion matrices.
//!
//! A code with `N` transmit antennas, block length `T` and `K` complex symbols
//! per block is the pair of `K` real `T x N` matrix families `(A_k, B_k)`:
//!
//! ```text
//! G(s) = sum_k Re(s_k) A_k + i Im(s_k) B_k
//! ```
//!
//! Every entry is one of `{0, +-1, +-1/sqrt(2)}` and is kept symbolic
//! ([`Coef`]) so the scheduler can reason about zeros, repeated coefficients
//! and the `1/sqrt(2)` factor exactly.

mod file;
mod generator;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub use file::{format_code_file, parse_code_file};
pub use generator::code_from_generator;

/// Identifiers of the compiled-in codes, in catalog order.
pub const BUILTIN_CODES: [&str; 4] = ["g2", "g3", "g4", "h3"];

/// Relative tolerance for the `G^H G = c (sum |s_k|^2) I` check.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

/// An exact dispersion-matrix entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Coef {
    Zero,
    One,
    NegOne,
    InvSqrt2,
    NegInvSqrt2,
}

impl Coef {
    pub fn value(self) -> f64 {
        use std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Coef::Zero => 0.0,
            Coef::One => 1.0,
            Coef::NegOne => -1.0,
            Coef::InvSqrt2 => FRAC_1_SQRT_2,
            Coef::NegInvSqrt2 => -FRAC_1_SQRT_2,
        }
    }

    /// Token used by the code file format (`r` stands for `1/sqrt(2)`).
    pub fn token(self) -> &'static str {
        match self {
            Coef::Zero => "0",
            Coef::One => "1",
            Coef::NegOne => "-1",
            Coef::InvSqrt2 => "r",
            Coef::NegInvSqrt2 => "-r",
        }
    }

    pub fn from_token(tok: &str) -> Option<Coef> {
        Some(match tok {
            "0" => Coef::Zero,
            "1" => Coef::One,
            "-1" => Coef::NegOne,
            "r" => Coef::InvSqrt2,
            "-r" => Coef::NegInvSqrt2,
            _ => return None,
        })
    }

    pub fn is_zero(self) -> bool {
        self == Coef::Zero
    }

    /// True for `+-1/sqrt(2)`.
    pub fn is_scaled(self) -> bool {
        matches!(self, Coef::InvSqrt2 | Coef::NegInvSqrt2)
    }

    pub fn is_negative(self) -> bool {
        matches!(self, Coef::NegOne | Coef::NegInvSqrt2)
    }

    /// The same magnitude with a positive sign.
    pub fn abs(self) -> Coef {
        if self.is_negative() {
            -self
        } else {
            self
        }
    }
}

impl std::ops::Neg for Coef {
    type Output = Coef;

    fn neg(self) -> Coef {
        match self {
            Coef::Zero => Coef::Zero,
            Coef::One => Coef::NegOne,
            Coef::NegOne => Coef::One,
            Coef::InvSqrt2 => Coef::NegInvSqrt2,
            Coef::NegInvSqrt2 => Coef::InvSqrt2,
        }
    }
}

/// A real `T x N` matrix of exact entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispersionMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Coef>,
}

impl DispersionMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Coef::Zero; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Coef>>) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                what: "dispersion matrix rows",
                expected: format!("{ncols} entries per row"),
                got: "ragged rows".to_string(),
            });
        }
        Ok(Self {
            rows: nrows,
            cols: ncols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Coef {
        self.entries[row * self.cols + col]
    }

    pub(crate) fn set(&mut self, row: usize, col: usize, value: Coef) {
        self.entries[row * self.cols + col] = value;
    }

    pub fn to_real(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c).value())
    }

    pub fn entries(&self) -> impl Iterator<Item = Coef> + '_ {
        self.entries.iter().copied()
    }
}

/// An orthogonal space-time block code in linear-dispersion form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DispersionCode {
    id: String,
    tx_antennas: usize,
    block_length: usize,
    num_symbols: usize,
    scale: u32,
    a: Vec<DispersionMatrix>,
    b: Vec<DispersionMatrix>,
}

impl DispersionCode {
    /// Builds a code, checking that every `A_k`, `B_k` is `T x N`.
    pub fn new(
        id: impl Into<String>,
        tx_antennas: usize,
        block_length: usize,
        num_symbols: usize,
        scale: u32,
        a: Vec<DispersionMatrix>,
        b: Vec<DispersionMatrix>,
    ) -> Result<Self> {
        if tx_antennas == 0 || block_length == 0 || num_symbols == 0 {
            return Err(Error::InvalidConfig(
                "N, T and K must all be positive".to_string(),
            ));
        }
        if scale == 0 {
            return Err(Error::InvalidConfig("c must be a positive integer".to_string()));
        }
        if a.len() != num_symbols || b.len() != num_symbols {
            return Err(Error::DimensionMismatch {
                what: "dispersion matrix count",
                expected: format!("{num_symbols} A and B matrices"),
                got: format!("{} A, {} B", a.len(), b.len()),
            });
        }
        for m in a.iter().chain(b.iter()) {
            if m.rows() != block_length || m.cols() != tx_antennas {
                return Err(Error::DimensionMismatch {
                    what: "dispersion matrix shape",
                    expected: format!("{block_length}x{tx_antennas}"),
                    got: format!("{}x{}", m.rows(), m.cols()),
                });
            }
        }
        Ok(Self {
            id: id.into(),
            tx_antennas,
            block_length,
            num_symbols,
            scale,
            a,
            b,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// `N`.
    pub fn tx_antennas(&self) -> usize {
        self.tx_antennas
    }

    /// `T`.
    pub fn block_length(&self) -> usize {
        self.block_length
    }

    /// `K`.
    pub fn num_symbols(&self) -> usize {
        self.num_symbols
    }

    /// The orthogonality scale `c` in `G^H G = c (sum |s_k|^2) I`.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Symbol rate `K / T`.
    pub fn rate(&self) -> f64 {
        self.num_symbols as f64 / self.block_length as f64
    }

    /// `A_k` for a zero-based `k`.
    pub fn a(&self, k: usize) -> &DispersionMatrix {
        &self.a[k]
    }

    /// `B_k` for a zero-based `k`.
    pub fn b(&self, k: usize) -> &DispersionMatrix {
        &self.b[k]
    }

    pub fn a_matrices(&self) -> &[DispersionMatrix] {
        &self.a
    }

    pub fn b_matrices(&self) -> &[DispersionMatrix] {
        &self.b
    }

    /// Same matrices with a different declared scale.
    pub fn with_scale(mut self, scale: u32) -> Self {
        self.scale = scale;
        self
    }
}

/// Generators of the built-in codes, one `T`-row per string, cells separated
/// by whitespace. `s3*/√2` is `conj(s_3)/sqrt(2)`; `(...)/2` halves a sum.
const G2_ROWS: [&str; 2] = ["s1 s2", "-s2* s1*"];

const G3_ROWS: [&str; 8] = [
    "s1 s2 s3",
    "-s2 s1 -s4",
    "-s3 s4 s1",
    "-s4 -s3 s2",
    "s1* s2* s3*",
    "-s2* s1* -s4*",
    "-s3* s4* s1*",
    "-s4* -s3* s2*",
];

const G4_ROWS: [&str; 8] = [
    "s1 s2 s3 s4",
    "-s2 s1 -s4 s3",
    "-s3 s4 s1 -s2",
    "-s4 -s3 s2 s1",
    "s1* s2* s3* s4*",
    "-s2* s1* -s4* s3*",
    "-s3* s4* s1* -s2*",
    "-s4* -s3* s2* s1*",
];

const H3_ROWS: [&str; 4] = [
    "s1 s2 s3/√2",
    "-s2* s1* s3/√2",
    "s3*/√2 s3*/√2 (-s1-s1*+s2-s2*)/2",
    "s3*/√2 -s3*/√2 (s2+s2*+s1-s1*)/2",
];

/// Returns one of the compiled-in codes: `g2` (Alamouti), `g3`, `g4` or `h3`.
pub fn get_code(id: &str) -> Result<DispersionCode> {
    let (rows, k, c): (&[&str], usize, u32) = match id {
        "g2" => (&G2_ROWS, 2, 1),
        "g3" => (&G3_ROWS, 4, 2),
        "g4" => (&G4_ROWS, 4, 2),
        "h3" => (&H3_ROWS, 3, 1),
        other => return Err(Error::UnknownCode(other.to_string())),
    };
    code_from_generator(id, rows, k, c)
}

/// All built-in codes in catalog order.
pub fn builtin_codes() -> Vec<DispersionCode> {
    BUILTIN_CODES
        .iter()
        .map(|id| get_code(id).expect("built-in generators are valid"))
        .collect()
}

/// `G = sum_k Re(s_k) A_k + i Im(s_k) B_k`, a `T x N` complex matrix.
///
/// Accepts arbitrary complex symbols; constellation membership is not checked.
pub fn encode(code: &DispersionCode, symbols: &[Complex64]) -> Result<DMatrix<Complex64>> {
    if symbols.len() != code.num_symbols() {
        return Err(Error::DimensionMismatch {
            what: "symbol vector",
            expected: format!("{} symbols", code.num_symbols()),
            got: format!("{}", symbols.len()),
        });
    }
    let (t, n) = (code.block_length(), code.tx_antennas());
    let mut g = DMatrix::<Complex64>::zeros(t, n);
    for (k, s) in symbols.iter().enumerate() {
        let (a, b) = (code.a(k), code.b(k));
        for row in 0..t {
            for col in 0..n {
                let (ca, cb) = (a.get(row, col), b.get(row, col));
                if !ca.is_zero() {
                    g[(row, col)].re += s.re * ca.value();
                }
                if !cb.is_zero() {
                    g[(row, col)].im += s.im * cb.value();
                }
            }
        }
    }
    Ok(g)
}

/// Estimates the integer scale `c` with `G^H G = c (sum |s_k|^2) I` from
/// `trials` random Gaussian symbol vectors.
///
/// Fails with [`Error::NonOrthogonal`] when off-diagonal terms are not
/// negligible, the diagonal is not constant, or the ratio is not one integer
/// across all trials.
pub fn measure_c(code: &DispersionCode, trials: usize, seed: u64) -> Result<u32> {
    if trials == 0 {
        return Err(Error::InvalidConfig("measure_c needs at least one trial".to_string()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut found: Option<u32> = None;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let s: Vec<Complex64> = (0..code.num_symbols())
            .map(|_| {
                Complex64::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                )
            })
            .collect();
        let energy: f64 = s.iter().map(Complex64::norm_sqr).sum();
        let g = encode(code, &s)?;
        let gram = g.adjoint() * &g;
        let ratio = gram[(0, 0)].re / energy;
        let c = ratio.round();
        if c < 1.0 {
            return Err(Error::NonOrthogonal {
                max_deviation: (ratio - c).abs().max(worst),
                detail: format!("G^H G diagonal ratio {ratio} rounds below 1"),
            });
        }
        let mut dev = 0.0f64;
        for i in 0..gram.nrows() {
            for j in 0..gram.ncols() {
                let target = if i == j { c * energy } else { 0.0 };
                dev = dev.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
            }
        }
        let rel = dev / (c * energy);
        worst = worst.max(rel);
        if rel > ORTHOGONALITY_TOL {
            return Err(Error::NonOrthogonal {
                max_deviation: worst,
                detail: format!("||G^H G - {c} (sum |s|^2) I||_max / ({c} sum |s|^2) too large"),
            });
        }
        let c = c as u32;
        match found {
            None => found = Some(c),
            Some(prev) if prev != c => {
                return Err(Error::NonOrthogonal {
                    max_deviation: worst,
                    detail: format!("scale varies between trials ({prev} vs {c})"),
                })
            }
            _ => {}
        }
    }
    Ok(found.expect("at least one trial"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Coef::{InvSqrt2 as R, NegInvSqrt2 as NR, NegOne as M, One as P, Zero as Z};

    fn m(rows: &[&[Coef]]) -> DispersionMatrix {
        DispersionMatrix::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn alamouti_first_pair() {
        let g2 = get_code("g2").unwrap();
        assert_eq!(g2.a(0), &m(&[&[P, Z], &[Z, P]]));
        assert_eq!(g2.b(0), &m(&[&[P, Z], &[Z, M]]));
        assert_eq!(g2.a(1), &m(&[&[Z, P], &[M, Z]]));
        assert_eq!(g2.b(1), &m(&[&[Z, P], &[P, Z]]));
    }

    #[test]
    fn h3_third_pair() {
        let h3 = get_code("h3").unwrap();
        assert_eq!(h3.a(2), &m(&[&[Z, Z, R], &[Z, Z, R], &[R, R, Z], &[R, NR, Z]]));
        assert_eq!(h3.b(2), &m(&[&[Z, Z, R], &[Z, Z, R], &[NR, NR, Z], &[NR, R, Z]]));
    }

    #[test]
    fn h3_first_pairs_derived() {
        // Matches the trace-form row vectors H^H A_k^H, H^H B_k^H.
        let h3 = get_code("h3").unwrap();
        assert_eq!(h3.a(0), &m(&[&[P, Z, Z], &[Z, P, Z], &[Z, Z, M], &[Z, Z, Z]]));
        assert_eq!(h3.b(0), &m(&[&[P, Z, Z], &[Z, M, Z], &[Z, Z, Z], &[Z, Z, P]]));
        assert_eq!(h3.a(1), &m(&[&[Z, P, Z], &[M, Z, Z], &[Z, Z, Z], &[Z, Z, P]]));
        assert_eq!(h3.b(1), &m(&[&[Z, P, Z], &[P, Z, Z], &[Z, Z, P], &[Z, Z, Z]]));
    }

    #[test]
    fn builtin_parameters() {
        let dims: Vec<_> = builtin_codes()
            .iter()
            .map(|c| (c.tx_antennas(), c.block_length(), c.num_symbols(), c.scale()))
            .collect();
        assert_eq!(dims, vec![(2, 2, 2, 1), (3, 8, 4, 2), (4, 8, 4, 2), (3, 4, 3, 1)]);
    }

    #[test]
    fn entries_in_allowed_set() {
        for code in builtin_codes() {
            for mtx in code.a_matrices().iter().chain(code.b_matrices()) {
                for e in mtx.entries() {
                    assert!(Coef::from_token(e.token()) == Some(e));
                }
            }
        }
    }

    #[test]
    fn unknown_code_is_an_error() {
        let err = get_code("g5").unwrap_err();
        assert!(err.to_string().contains("g5"));
    }

    #[test]
    fn encode_rejects_wrong_length() {
        let g2 = get_code("g2").unwrap();
        assert!(matches!(
            encode(&g2, &[Complex64::new(1.0, 0.0)]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn encode_alamouti_unit_symbol() {
        let g2 = get_code("g2").unwrap();
        let g = encode(&g2, &[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]).unwrap();
        let expect = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert_eq!(g, expect);
    }

    #[test]
    fn encode_h3_third_symbol() {
        let h3 = get_code("h3").unwrap();
        let zero = Complex64::new(0.0, 0.0);
        let g = encode(&h3, &[zero, zero, Complex64::new(2f64.sqrt(), 0.0)]).unwrap();
        let col = |j: usize| -> Vec<f64> {
            (0..4)
                .map(|i| {
                    assert!(g[(i, j)].im.abs() < 1e-15);
                    (g[(i, j)].re * 1e12).round() / 1e12
                })
                .collect()
        };
        assert_eq!(col(2), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(col(0), vec![0.0, 0.0, 1.0, 1.0]);
        assert_eq!(col(1), vec![0.0, 0.0, 1.0, -1.0]);
    }

    #[test]
    fn measured_scales() {
        for (id, c) in [("g2", 1), ("g3", 2), ("g4", 2), ("h3", 1)] {
            assert_eq!(measure_c(&get_code(id).unwrap(), 50, 3).unwrap(), c, "{id}");
        }
    }

    #[test]
    fn measure_c_rejects_broken_code() {
        let g2 = get_code("g2").unwrap();
        let mut a = g2.a_matrices().to_vec();
        a[1].set(1, 0, Coef::One);
        let broken =
            DispersionCode::new("bad", 2, 2, 2, 1, a, g2.b_matrices().to_vec()).unwrap();
        match measure_c(&broken, 10, 1) {
            Err(Error::NonOrthogonal { max_deviation, .. }) => assert!(max_deviation > 1e-3),
            other => panic!("expected NonOrthogonal, got {other:?}"),
        }
    }

    #[test]
    fn measure_c_needs_trials() {
        assert!(measure_c(&get_code("g2").unwrap(), 0, 1).is_err());
    }
}
