use nalgebra::DVector;

use super::{Constellation, DecodedMessage};
use crate::error::{Error, Result};
use crate::lattice::RealLattice;

/// Largest product alphabet [`exhaustive_ml`] will enumerate.
pub const EXHAUSTIVE_LIMIT: u128 = 1 << 24;

/// Brute-force `argmin_x ||ycheck - Hcheck x||^2` over every `x` in the
/// product of the component alphabet, `2K` times.
///
/// The metric is expanded as `x^T G x - 2 x^T Hcheck^T ycheck` with the full
/// Gram matrix `G = Hcheck^T Hcheck`, so orthogonality is never assumed.
/// Candidates are visited in lexicographic index order and only a strictly
/// smaller metric replaces the incumbent, so ties resolve to the
/// lexicographically first candidate.
pub fn exhaustive_ml(
    lat: &RealLattice,
    ycheck: &[f64],
    constellation: &Constellation,
) -> Result<DecodedMessage> {
    let dims = lat.num_real_symbols();
    let alphabet = constellation.alphabet();
    let candidates = (alphabet.len() as u128)
        .checked_pow(dims as u32)
        .unwrap_or(u128::MAX);
    if candidates > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            candidates,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    if ycheck.len() != lat.num_real_observations() {
        return Err(Error::DimensionMismatch {
            what: "real received vector",
            expected: format!("{}", lat.num_real_observations()),
            got: format!("{}", ycheck.len()),
        });
    }
    let h = lat.hcheck();
    let gram = h.transpose() * h;
    let ybar = h.tr_mul(&DVector::from_column_slice(ycheck));

    let mut search = Search {
        gram: &gram,
        ybar: &ybar,
        alphabet,
        current: vec![0; dims],
        values: vec![0.0; dims],
        best: vec![0; dims],
        best_metric: f64::INFINITY,
    };
    search.descend(0, 0.0);
    Ok(DecodedMessage::from_indices(search.best, constellation))
}

struct Search<'a> {
    gram: &'a nalgebra::DMatrix<f64>,
    ybar: &'a DVector<f64>,
    alphabet: &'a [f64],
    current: Vec<usize>,
    values: Vec<f64>,
    best: Vec<usize>,
    best_metric: f64,
}

impl Search<'_> {
    /// Depth-first over coordinates; `partial` is the metric restricted to
    /// the coordinates fixed so far.
    fn descend(&mut self, depth: usize, partial: f64) {
        if depth == self.current.len() {
            if partial < self.best_metric {
                self.best_metric = partial;
                self.best.copy_from_slice(&self.current);
            }
            return;
        }
        // cross = sum_{j < depth} G[depth, j] x_j
        let cross: f64 = (0..depth).map(|j| self.gram[(depth, j)] * self.values[j]).sum();
        let diag = self.gram[(depth, depth)];
        let yb = self.ybar[depth];
        for (i, &x) in self.alphabet.iter().enumerate() {
            self.current[depth] = i;
            self.values[depth] = x;
            let step = diag * x * x + 2.0 * x * cross - 2.0 * x * yb;
            self.descend(depth + 1, partial + step);
        }
    }
}
