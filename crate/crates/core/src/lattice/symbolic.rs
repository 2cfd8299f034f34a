//! Exact symbolic form of `Hcheck`.
//!
//! Every entry of `Hcheck` is a signed sum of real channel coefficients
//! `h_i`, each weighted by a dispersion entry in `{+-1, +-1/sqrt(2)}`. The
//! builder follows the same `F -> F' -> permutation` route as the numeric
//! one, only over linear forms.

use std::fmt;

use nalgebra::DMatrix;

use super::{real_coeff_index, Permutation};
use crate::codebook::{Coef, DispersionCode};
use crate::error::{Error, Result};

/// `sum_i w_i h_i` with `w_i` in `{+-1, +-1/sqrt(2)}`, sorted by `i`
/// (zero-based), no zero weights.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, PartialOrd, Ord)]
pub struct SymEntry {
    terms: Vec<(usize, Coef)>,
}

impl SymEntry {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn from_terms(mut terms: Vec<(usize, Coef)>) -> Self {
        terms.retain(|(_, c)| !c.is_zero());
        terms.sort_by_key(|(i, _)| *i);
        Self { terms }
    }

    pub fn terms(&self) -> &[(usize, Coef)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|&(i, c)| (i, -c)).collect(),
        }
    }

    /// True when every term carries the `1/sqrt(2)` factor.
    pub fn all_scaled(&self) -> bool {
        !self.terms.is_empty() && self.terms.iter().all(|(_, c)| c.is_scaled())
    }

    /// Splits off the sign of the first term: returns `(negative, entry)`
    /// with the entry's first term positive, so `x` and `-x` share a key.
    pub fn normalized(&self) -> (bool, SymEntry) {
        match self.terms.first() {
            Some((_, c)) if c.is_negative() => (true, self.neg()),
            _ => (false, self.clone()),
        }
    }

    pub fn eval(&self, h: &[f64]) -> f64 {
        self.terms.iter().map(|&(i, c)| c.value() * h[i]).sum()
    }

    /// Parses the notation produced by `Display`, plus a leading `-` in
    /// front of a parenthesised sum: `0`, `h3`, `-h2/√2`, `(h1+h3)/√2`,
    /// `-(h1+h3)/√2`, `h1-h4`. Names are one-based.
    pub fn parse(text: &str) -> Result<Self> {
        let err = || Error::Parse {
            line: 0,
            msg: format!("bad symbolic entry `{text}`"),
        };
        let s = text.trim();
        if s == "0" {
            return Ok(Self::zero());
        }
        let (outer_neg, s) = match s.strip_prefix("-(") {
            Some(rest) => (true, format!("({rest}")),
            None => (false, s.to_string()),
        };
        let (body, scaled) = if let Some(inner) = s.strip_prefix('(') {
            (inner.strip_suffix(")/√2").ok_or_else(err)?.to_string(), true)
        } else if outer_neg {
            return Err(err());
        } else {
            (s.clone(), false)
        };
        let mut terms = Vec::new();
        let mut rest = body.as_str();
        while !rest.is_empty() {
            let neg = if let Some(r) = rest.strip_prefix('-') {
                rest = r;
                true
            } else if let Some(r) = rest.strip_prefix('+') {
                rest = r;
                false
            } else if terms.is_empty() {
                false
            } else {
                return Err(err());
            };
            rest = rest.strip_prefix('h').ok_or_else(err)?;
            let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
            let idx: usize = rest[..digits].parse().map_err(|_| err())?;
            if idx == 0 {
                return Err(err());
            }
            rest = &rest[digits..];
            let mut term_scaled = scaled;
            if let Some(r) = rest.strip_prefix("/√2") {
                if scaled {
                    return Err(err());
                }
                term_scaled = true;
                rest = r;
            }
            let mut coef = if term_scaled { Coef::InvSqrt2 } else { Coef::One };
            if neg != outer_neg {
                coef = -coef;
            }
            terms.push((idx - 1, coef));
        }
        if terms.is_empty() {
            return Err(err());
        }
        Ok(Self::from_terms(terms))
    }
}

impl fmt::Display for SymEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let factored = self.all_scaled();
        let mut body = String::new();
        for (n, &(i, c)) in self.terms.iter().enumerate() {
            if c.is_negative() {
                body.push('-');
            } else if n > 0 {
                body.push('+');
            }
            body.push_str(&format!("h{}", i + 1));
            if c.is_scaled() && !factored {
                body.push_str("/√2");
            }
        }
        match (factored, self.terms.len()) {
            (false, _) => write!(f, "{body}"),
            (true, 1) => write!(f, "{body}/√2"),
            (true, _) => write!(f, "({body})/√2"),
        }
    }
}

/// Row-major symbolic matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<SymEntry>,
}

impl SymMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> &SymEntry {
        &self.entries[row * self.cols + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &SymEntry> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    pub fn row(&self, row: usize) -> &[SymEntry] {
        &self.entries[row * self.cols..(row + 1) * self.cols]
    }

    /// Substitutes real channel coefficients.
    pub fn eval(&self, h: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |r, c| self.get(r, c).eval(h))
    }
}

impl fmt::Display for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = self.row(r).iter().map(ToString::to_string).collect();
            writeln!(f, "{}", row.join("\t"))?;
        }
        Ok(())
    }
}

/// Symbolic `Hcheck` for `rx_antennas` receive antennas.
pub fn symbolic_check_h(code: &DispersionCode, rx_antennas: usize) -> SymMatrix {
    let (t_len, n_tx, k_len) = (code.block_length(), code.tx_antennas(), code.num_symbols());
    let mt = t_len * rx_antennas;
    // F columns: (re, im) linear forms per row of vec(.), K columns for F_a
    // followed by K for F_b.
    let mut f: Vec<Vec<(SymEntry, SymEntry)>> = vec![Vec::with_capacity(mt); 2 * k_len];
    for k in 0..k_len {
        let (a, b) = (code.a(k), code.b(k));
        for j in 0..rx_antennas {
            for t in 0..t_len {
                let mut a_re = Vec::new();
                let mut a_im = Vec::new();
                let mut b_re = Vec::new();
                let mut b_im = Vec::new();
                for n in 0..n_tx {
                    let re = real_coeff_index(n, j, n_tx, false);
                    let im = real_coeff_index(n, j, n_tx, true);
                    let ca = a.get(t, n);
                    a_re.push((re, ca));
                    a_im.push((im, ca));
                    // i (B h): real part -B Im h, imaginary part B Re h
                    let cb = b.get(t, n);
                    b_re.push((im, -cb));
                    b_im.push((re, cb));
                }
                f[k].push((SymEntry::from_terms(a_re), SymEntry::from_terms(a_im)));
                f[k_len + k].push((SymEntry::from_terms(b_re), SymEntry::from_terms(b_im)));
            }
        }
    }
    let py = Permutation::interleave(mt);
    let ps = Permutation::interleave(k_len);
    let mut entries = Vec::with_capacity(2 * mt * 2 * k_len);
    for i in 0..2 * mt {
        let src_row = py.source(i);
        for jj in 0..2 * k_len {
            let col = &f[ps.source(jj)];
            let entry = if src_row < mt {
                col[src_row].0.clone()
            } else {
                col[src_row - mt].1.clone()
            };
            entries.push(entry);
        }
    }
    SymMatrix {
        rows: 2 * mt,
        cols: 2 * k_len,
        entries,
    }
}
