use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// A square QAM alphabet with unit average symbol energy.
///
/// Points are the product `alphabet x alphabet`; each real dimension carries
/// `log2(sqrt(L))` Gray-labelled bits.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constellation {
    name: String,
    alphabet: Vec<f64>,
    bits_per_dim: u32,
}

impl Constellation {
    /// Square QAM of order `order` (4, 16, 64, 256, ...).
    pub fn square_qam(order: usize) -> Result<Self> {
        let side = (order as f64).sqrt().round() as usize;
        if side < 2 || side * side != order || !side.is_power_of_two() {
            return Err(Error::UnsupportedConstellation(format!("{order}qam")));
        }
        // E|p|^2 = 2 * (side^2 - 1) / 3 for the odd-integer grid.
        let inv_norm = (3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
        let alphabet = (0..side)
            .map(|i| (2.0 * i as f64 - (side as f64 - 1.0)) * inv_norm)
            .collect();
        Ok(Self {
            name: format!("{order}qam"),
            alphabet,
            bits_per_dim: side.trailing_zeros(),
        })
    }

    /// Parses names such as `4qam` or `16qam`. Anything that is not a square
    /// QAM (e.g. `8psk`) is rejected: per-coordinate detection needs a
    /// product constellation.
    pub fn from_name(name: &str) -> Result<Self> {
        let lower = name.to_ascii_lowercase();
        let order = lower
            .strip_suffix("qam")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| Error::UnsupportedConstellation(name.to_string()))?;
        Self::square_qam(order).map_err(|_| Error::UnsupportedConstellation(name.to_string()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Per-dimension component alphabet, ascending.
    pub fn alphabet(&self) -> &[f64] {
        &self.alphabet
    }

    /// `L`.
    pub fn order(&self) -> usize {
        self.alphabet.len() * self.alphabet.len()
    }

    pub fn bits_per_dim(&self) -> u32 {
        self.bits_per_dim
    }

    pub fn bits_per_symbol(&self) -> u32 {
        2 * self.bits_per_dim
    }

    /// All `L` points, real index major.
    pub fn points(&self) -> Vec<Complex64> {
        self.alphabet
            .iter()
            .flat_map(|&re| self.alphabet.iter().map(move |&im| Complex64::new(re, im)))
            .collect()
    }

    /// Gray label of a component index.
    pub fn gray_label(index: usize) -> usize {
        index ^ (index >> 1)
    }

    /// Bit errors between two component indices under Gray labelling.
    pub fn bit_distance(a: usize, b: usize) -> u32 {
        (Self::gray_label(a) ^ Self::gray_label(b)).count_ones()
    }
}
