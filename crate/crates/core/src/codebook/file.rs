//! Plain-text code description files.
//!
//! ```text
//! code g2 N=2 T=2 K=2 c=1
//! A1
//! 1 0
//! 0 1
//! B1
//! 1 0
//! 0 -1
//! ...
//! ```
//!
//! Entries are `0`, `1`, `-1`, `r` or `-r`, where `r` is `1/sqrt(2)`. Blank
//! lines and lines starting with `#` are ignored.

use super::{Coef, DispersionCode, DispersionMatrix};
use crate::error::{Error, Result};

/// Writes the canonical text form of a code. LF line endings, single spaces.
pub fn format_code_file(code: &DispersionCode) -> String {
    let mut out = format!(
        "code {} N={} T={} K={} c={}\n",
        code.id(),
        code.tx_antennas(),
        code.block_length(),
        code.num_symbols(),
        code.scale()
    );
    for k in 0..code.num_symbols() {
        for (name, m) in [('A', code.a(k)), ('B', code.b(k))] {
            out.push_str(&format!("{name}{}\n", k + 1));
            for row in 0..m.rows() {
                let cells: Vec<&str> = (0..m.cols()).map(|c| m.get(row, c).token()).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
    }
    out
}

fn header_field(tok: Option<&str>, key: &str, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse {
        line,
        msg: format!("header is missing `{key}=`"),
    })?;
    tok.strip_prefix(key)
        .and_then(|v| v.strip_prefix('='))
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Parse {
            line,
            msg: format!("expected `{key}=<positive integer>`, found `{tok}`"),
        })
}

/// Parses a code description. The declared `c` is taken as given; use
/// [`super::measure_c`] to check it.
pub fn parse_code_file(text: &str) -> Result<DispersionCode> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty code file".to_string(),
    })?;
    let mut toks = header.split_whitespace();
    if toks.next() != Some("code") {
        return Err(Error::Parse {
            line: hline,
            msg: "header must start with `code`".to_string(),
        });
    }
    let id = toks
        .next()
        .ok_or(Error::Parse { line: hline, msg: "missing code id".to_string() })?
        .to_string();
    let n = header_field(toks.next(), "N", hline)?;
    let t = header_field(toks.next(), "T", hline)?;
    let k = header_field(toks.next(), "K", hline)?;
    let c = header_field(toks.next(), "c", hline)?;
    if let Some(extra) = toks.next() {
        return Err(Error::Parse {
            line: hline,
            msg: format!("unexpected header token `{extra}`"),
        });
    }
    let c = u32::try_from(c).map_err(|_| Error::Parse {
        line: hline,
        msg: "c does not fit in 32 bits".to_string(),
    })?;

    let mut a = Vec::with_capacity(k);
    let mut b = Vec::with_capacity(k);
    for idx in 1..=k {
        for (name, dest) in [('A', &mut a), ('B', &mut b)] {
            let expect = format!("{name}{idx}");
            let (line, label) = lines.next().ok_or_else(|| Error::Parse {
                line: usize::MAX,
                msg: format!("unexpected end of file, expected `{expect}`"),
            })?;
            if label != expect {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected `{expect}`, found `{label}`"),
                });
            }
            let mut rows = Vec::with_capacity(t);
            for _ in 0..t {
                let (line, row) = lines.next().ok_or_else(|| Error::Parse {
                    line: usize::MAX,
                    msg: format!("unexpected end of file inside `{expect}`"),
                })?;
                let cells = row
                    .split_whitespace()
                    .map(|tok| {
                        Coef::from_token(tok).ok_or_else(|| Error::Parse {
                            line,
                            msg: format!("entry `{tok}` is not one of 0, 1, -1, r, -r"),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                if cells.len() != n {
                    return Err(Error::Parse {
                        line,
                        msg: format!("expected {n} entries, found {}", cells.len()),
                    });
                }
                rows.push(cells);
            }
            dest.push(DispersionMatrix::from_rows(rows)?);
        }
    }
    if let Some((line, extra)) = lines.next() {
        return Err(Error::Parse {
            line,
            msg: format!("trailing content `{extra}`"),
        });
    }
    DispersionCode::new(id, n, t, k, c, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::builtin_codes;

    #[test]
    fn builtins_round_trip_exactly() {
        for code in builtin_codes() {
            let text = format_code_file(&code);
            let back = parse_code_file(&text).unwrap();
            assert_eq!(back, code);
            assert_eq!(format_code_file(&back), text);
        }
    }

    #[test]
    fn alamouti_text() {
        let text = format_code_file(&crate::codebook::get_code("g2").unwrap());
        assert!(text.starts_with("code g2 N=2 T=2 K=2 c=1\nA1\n1 0\n0 1\nB1\n1 0\n0 -1\n"));
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "# siso\n\ncode one N=1 T=1 K=1 c=1\nA1\n1\n\nB1\n1\n";
        let code = parse_code_file(text).unwrap();
        assert_eq!(code.num_symbols(), 1);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_code_file("").is_err());
        assert!(parse_code_file("cod x N=1 T=1 K=1 c=1\n").is_err());
        assert!(parse_code_file("code x N=1 T=1 K=1\nA1\n1\nB1\n1\n").is_err());
        assert!(parse_code_file("code x N=1 T=1 K=1 c=1\nA1\n2\nB1\n1\n").is_err());
        assert!(parse_code_file("code x N=1 T=1 K=1 c=1\nB1\n1\nA1\n1\n").is_err());
        assert!(parse_code_file("code x N=2 T=1 K=1 c=1\nA1\n1\nB1\n1 0\n").is_err());
        assert!(parse_code_file("code x N=1 T=1 K=1 c=1\nA1\n1\nB1\n1\nA2\n").is_err());
        assert!(parse_code_file("code x N=1 T=1 K=1 c=0\nA1\n1\nB1\n1\n").is_err());
    }
}
