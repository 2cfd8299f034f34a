//! Converts a generator matrix, written cell by cell, into dispersion matrices.
//!
//! Each cell is `0` or a signed sum of symbol terms. A term is `s<k>` or
//! `s<k>*`, optionally followed by `/√2`; a whole parenthesised sum may be
//! divided by 2, e.g. `(-s1-s1*+s2-s2*)/2`. Since `s = Re s + i Im s` and
//! `s* = Re s - i Im s`, a term `w s_k` adds `w` to both `A_k` and `B_k`,
//! while `w s_k*` adds `w` to `A_k` and `-w` to `B_k`.

use super::{Coef, DispersionCode, DispersionMatrix};
use crate::error::{Error, Result};

/// Weight accumulated for one (matrix, row, col) entry, kept exact as
/// `halves / 2 + root_units / sqrt(2)`.
#[derive(Debug, Clone, Copy, Default)]
struct Weight {
    halves: i32,
    root_units: i32,
}

impl Weight {
    fn add(&mut self, other: Weight, sign: i32) {
        self.halves += sign * other.halves;
        self.root_units += sign * other.root_units;
    }

    fn to_coef(self) -> Option<Coef> {
        match (self.halves, self.root_units) {
            (0, 0) => Some(Coef::Zero),
            (2, 0) => Some(Coef::One),
            (-2, 0) => Some(Coef::NegOne),
            (0, 1) => Some(Coef::InvSqrt2),
            (0, -1) => Some(Coef::NegInvSqrt2),
            _ => None,
        }
    }
}

#[derive(Debug)]
struct Term {
    symbol: usize,
    conjugate: bool,
    weight: Weight,
}

fn parse_cell(cell: &str, num_symbols: usize, line: usize) -> Result<Vec<Term>> {
    let err = |msg: String| Error::Parse { line, msg };
    if cell == "0" {
        return Ok(Vec::new());
    }
    let (body, halved) = if let Some(inner) = cell.strip_prefix('(') {
        let inner = inner
            .strip_suffix(")/2")
            .ok_or_else(|| err(format!("cell `{cell}`: expected `(...)/2`")))?;
        (inner, true)
    } else {
        (cell, false)
    };

    let mut terms = Vec::new();
    let mut rest = body;
    while !rest.is_empty() {
        let sign = match rest.as_bytes()[0] {
            b'-' => {
                rest = &rest[1..];
                -1
            }
            b'+' => {
                rest = &rest[1..];
                1
            }
            _ if terms.is_empty() => 1,
            _ => return Err(err(format!("cell `{cell}`: missing operator"))),
        };
        rest = rest
            .strip_prefix('s')
            .ok_or_else(|| err(format!("cell `{cell}`: expected a symbol `s<k>`")))?;
        let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
        let symbol: usize = rest[..digits]
            .parse()
            .map_err(|_| err(format!("cell `{cell}`: missing symbol index")))?;
        if symbol == 0 || symbol > num_symbols {
            return Err(err(format!("cell `{cell}`: symbol index {symbol} out of range")));
        }
        rest = &rest[digits..];
        let conjugate = if let Some(r) = rest.strip_prefix('*') {
            rest = r;
            true
        } else {
            false
        };
        let scaled = if let Some(r) = rest.strip_prefix("/√2") {
            rest = r;
            true
        } else {
            false
        };
        let weight = match (scaled, halved) {
            (false, false) => Weight { halves: 2 * sign, root_units: 0 },
            (false, true) => Weight { halves: sign, root_units: 0 },
            (true, false) => Weight { halves: 0, root_units: sign },
            (true, true) => {
                return Err(err(format!("cell `{cell}`: `/√2` inside `(...)/2`")))
            }
        };
        terms.push(Term { symbol: symbol - 1, conjugate, weight });
    }
    Ok(terms)
}

/// Builds a code from its generator rows (`T` strings of `N` cells each).
pub fn code_from_generator(
    id: &str,
    rows: &[&str],
    num_symbols: usize,
    scale: u32,
) -> Result<DispersionCode> {
    let block_length = rows.len();
    let tx_antennas = rows.first().map_or(0, |r| r.split_whitespace().count());
    let mut a_acc = vec![vec![Weight::default(); block_length * tx_antennas]; num_symbols];
    let mut b_acc = a_acc.clone();

    for (t, row) in rows.iter().enumerate() {
        let cells: Vec<&str> = row.split_whitespace().collect();
        if cells.len() != tx_antennas {
            return Err(Error::Parse {
                line: t + 1,
                msg: format!("expected {tx_antennas} cells, found {}", cells.len()),
            });
        }
        for (n, cell) in cells.iter().enumerate() {
            for term in parse_cell(cell, num_symbols, t + 1)? {
                let at = t * tx_antennas + n;
                a_acc[term.symbol][at].add(term.weight, 1);
                let b_sign = if term.conjugate { -1 } else { 1 };
                b_acc[term.symbol][at].add(term.weight, b_sign);
            }
        }
    }

    let finish = |acc: Vec<Vec<Weight>>, name: char| -> Result<Vec<DispersionMatrix>> {
        acc.into_iter()
            .enumerate()
            .map(|(k, weights)| {
                let mut m = DispersionMatrix::zeros(block_length, tx_antennas);
                for (at, w) in weights.into_iter().enumerate() {
                    let coef = w.to_coef().ok_or_else(|| Error::Parse {
                        line: at / tx_antennas + 1,
                        msg: format!(
                            "{name}{} entry ({}, {}) is not in {{0, +-1, +-1/sqrt2}}",
                            k + 1,
                            at / tx_antennas + 1,
                            at % tx_antennas + 1
                        ),
                    })?;
                    m.set(at / tx_antennas, at % tx_antennas, coef);
                }
                Ok(m)
            })
            .collect()
    };
    let a = finish(a_acc, 'A')?;
    let b = finish(b_acc, 'B')?;
    DispersionCode::new(id, tx_antennas, block_length, num_symbols, scale, a, b)
}
