//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use ostbc_lab::lattice::{symbolic_check_h, SymEntry};
use ostbc_lab::codebook::get_code;

/// Known rows of `Hcheck` for each built-in code: `(code, M, [(row, entries)])`,
/// rows zero-based, channel coefficients one-based.
pub type ReferenceRows = Vec<(usize, Vec<&'static str>)>;

pub fn reference_rows() -> Vec<(&'static str, usize, ReferenceRows)> {
    vec![
        (
            "g2",
            1,
            vec![
                (0, vec!["h1", "-h2", "h3", "-h4"]),
                (1, vec!["h2", "h1", "h4", "h3"]),
                (2, vec!["h3", "h4", "-h1", "-h2"]),
                (3, vec!["h4", "-h3", "-h2", "h1"]),
            ],
        ),
        (
            "g3",
            2,
            vec![
                (0, vec!["h1", "-h2", "h3", "-h4", "h5", "-h6", "0", "0"]),
                (1, vec!["h2", "h1", "h4", "h3", "h6", "h5", "0", "0"]),
                (16, vec!["h7", "-h8", "h9", "-h10", "h11", "-h12", "0", "0"]),
                (17, vec!["h8", "h7", "h10", "h9", "h12", "h11", "0", "0"]),
                (30, vec!["0", "0", "h11", "h12", "-h9", "-h10", "-h7", "-h8"]),
                (31, vec!["0", "0", "h12", "-h11", "-h10", "h9", "-h8", "h7"]),
            ],
        ),
        (
            "g4",
            1,
            vec![
                // Re(s4 h4) contributes -Im(s4) h8 to the first row.
                (0, vec!["h1", "-h2", "h3", "-h4", "h5", "-h6", "h7", "-h8"]),
                (1, vec!["h2", "h1", "h4", "h3", "h6", "h5", "h8", "h7"]),
                (2, vec!["h3", "-h4", "-h1", "h2", "h7", "-h8", "-h5", "h6"]),
                (3, vec!["h4", "h3", "-h2", "-h1", "h8", "h7", "-h6", "-h5"]),
                // seventh symbol period
                (12, vec!["h5", "h6", "-h7", "-h8", "-h1", "-h2", "h3", "h4"]),
                (13, vec!["h6", "-h5", "-h8", "h7", "-h2", "h1", "h4", "-h3"]),
            ],
        ),
        (
            "h3",
            1,
            vec![
                (0, vec!["h1", "-h2", "h3", "-h4", "h5/√2", "-h6/√2"]),
                (1, vec!["h2", "h1", "h4", "h3", "h6/√2", "h5/√2"]),
                (2, vec!["h3", "h4", "-h1", "-h2", "h5/√2", "-h6/√2"]),
                (3, vec!["h4", "-h3", "-h2", "h1", "h6/√2", "h5/√2"]),
                (4, vec!["-h5", "0", "0", "-h6", "(h1+h3)/√2", "(h2+h4)/√2"]),
                (5, vec!["-h6", "0", "0", "h5", "(h2+h4)/√2", "-(h1+h3)/√2"]),
                // Column 2 of these rows is fixed by orthogonality to column 5.
                (6, vec!["0", "-h6", "h5", "0", "(h1-h3)/√2", "(h2-h4)/√2"]),
                (7, vec!["0", "h5", "h6", "0", "(h2-h4)/√2", "(-h1+h3)/√2"]),
            ],
        ),
    ]
}

/// Compares the symbolic `Hcheck` of `code` against its known rows and
/// returns one message per mismatching entry.
pub fn golden_mismatches(code: &str, m: usize, rows: &[(usize, Vec<&str>)]) -> Vec<String> {
    let sym = symbolic_check_h(&get_code(code).unwrap(), m);
    let mut out = Vec::new();
    for (r, expected) in rows {
        if expected.len() != sym.cols() {
            out.push(format!("{code} row {r}: {} entries, matrix has {}", expected.len(), sym.cols()));
            continue;
        }
        for (c, text) in expected.iter().enumerate() {
            let want = SymEntry::parse(text).unwrap();
            let got = sym.get(*r, c);
            if *got != want {
                out.push(format!("{code} ({r},{c}): expected {want}, built {got}"));
            }
        }
    }
    out
}

pub fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// `max |a - b| / max(|a|, |b|)`, zero when both are zero.
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = max_abs(a.iter().chain(b).copied());
    let diff = max_abs(a.iter().zip(b).map(|(x, y)| x - y));
    if scale == 0.0 { 0.0 } else { diff / scale }
}
