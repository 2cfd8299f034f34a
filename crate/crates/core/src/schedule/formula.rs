//! Closed-form operation counts for the lattice decoder.

use super::OpCount;
use crate::error::{Error, Result};

fn check_positive(args: &[(&str, usize)]) -> Result<()> {
    for (name, v) in args {
        if *v == 0 {
            return Err(Error::InvalidConfig(format!("{name} must be positive")));
        }
    }
    Ok(())
}

/// Dense count with `sigma` taken as the squared norm of one `2MT`-long
/// column: `(4KMT + 2MT + 2K + 4) RM, (4KMT + 2MT - 2K - 1) RA`.
pub fn dense_formula(k: usize, m: usize, t: usize) -> Result<OpCount> {
    check_positive(&[("K", k), ("M", m), ("T", t)])?;
    let (k, m, t) = (k as u64, m as u64, t as u64);
    Ok(OpCount::new(
        4 * k * m * t + 2 * m * t + 2 * k + 4,
        4 * k * m * t + 2 * m * t - 2 * k - 1,
    ))
}

/// Dense count with `sigma = ||H||^2` from the `2MN` channel coefficients:
/// `(4KMT + 2MN + 2K + 4) RM, (4KMT + 2MN - 2K - 1) RA`.
pub fn frobenius_formula(k: usize, m: usize, t: usize, n: usize) -> Result<OpCount> {
    check_positive(&[("K", k), ("M", m), ("T", t), ("N", n)])?;
    let (k, m, t, n) = (k as u64, m as u64, t as u64, n as u64);
    Ok(OpCount::new(
        4 * k * m * t + 2 * m * n + 2 * k + 4,
        4 * k * m * t + 2 * m * n - 2 * k - 1,
    ))
}
