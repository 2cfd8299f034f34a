//! Schedule generation from the symbolic `Hcheck`.
//!
//! Every output is `z_j = sigma^-1 * ybar_j` with `ybar_j` the inner product
//! of column `j` of `Hcheck` with `ycheck`. Coefficient expressions such as
//! `(h1+h3)/sqrt(2)` are formed inside each column's program; nothing is
//! shared between columns.

use std::collections::HashMap;

use super::{Constant, OptLevel, Schedule, ScheduleBuilder, Slot};
use crate::codebook::DispersionCode;
use crate::lattice::{symbolic_check_h, SymEntry};

/// A slot together with a pending sign flip.
#[derive(Debug, Clone, Copy)]
struct Signed {
    slot: Slot,
    neg: bool,
}

impl Signed {
    fn pos(slot: Slot) -> Self {
        Self { slot, neg: false }
    }
}

/// Sums signed terms left to right: one ADD per extra term, a NEG only where
/// a term's sign differs from the running sum's.
fn sum_signed(b: &mut ScheduleBuilder, terms: &[Signed]) -> Option<Signed> {
    let (first, rest) = terms.split_first()?;
    let mut acc = *first;
    for t in rest {
        let rhs = if t.neg == acc.neg { t.slot } else { b.neg(t.slot, None) };
        acc = Signed {
            slot: b.add(acc.slot, rhs, None),
            neg: acc.neg,
        };
    }
    Some(acc)
}

fn mul_signed(b: &mut ScheduleBuilder, x: Signed, y: Signed) -> Signed {
    Signed {
        slot: b.mul(x.slot, y.slot, None),
        neg: x.neg ^ y.neg,
    }
}

/// Emits the value of one `Hcheck` entry. With `factored`, the entry's
/// `1/sqrt(2)` weights are treated as 1 (the caller applies the factor).
fn materialize(b: &mut ScheduleBuilder, entry: &SymEntry, factored: bool) -> Signed {
    if entry.is_zero() {
        return Signed::pos(Slot::Const(Constant::Zero));
    }
    let mut unit = Vec::new();
    let mut scaled = Vec::new();
    for &(i, c) in entry.terms() {
        let term = Signed { slot: Slot::H(i), neg: c.is_negative() };
        if c.is_scaled() && !factored {
            scaled.push(term);
        } else {
            unit.push(term);
        }
    }
    let unit_sum = sum_signed(b, &unit);
    let scaled_sum = sum_signed(b, &scaled)
        .map(|s| mul_signed(b, s, Signed::pos(Slot::Const(Constant::InvSqrt2))));
    match (unit_sum, scaled_sum) {
        (Some(u), Some(s)) => sum_signed(b, &[u, s]).expect("two terms"),
        (Some(v), None) | (None, Some(v)) => v,
        (None, None) => unreachable!("non-zero entry has terms"),
    }
}

fn column_dense(b: &mut ScheduleBuilder, column: &[&SymEntry], skip_zeros: bool) -> Option<Signed> {
    let mut products = Vec::new();
    for (i, entry) in column.iter().enumerate() {
        if skip_zeros && entry.is_zero() {
            continue;
        }
        let coef = materialize(b, entry, false);
        products.push(mul_signed(b, coef, Signed::pos(Slot::Y(i))));
    }
    sum_signed(b, &products)
}

fn column_grouped(b: &mut ScheduleBuilder, column: &[&SymEntry]) -> Option<Signed> {
    let nonzero: Vec<(usize, &SymEntry)> = column
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.is_zero())
        .map(|(i, e)| (i, *e))
        .collect();
    let factored = !nonzero.is_empty() && nonzero.iter().all(|(_, e)| e.all_scaled());

    // Groups keyed by the sign-normalized coefficient, in order of first use.
    let mut order: Vec<SymEntry> = Vec::new();
    let mut members: HashMap<SymEntry, Vec<Signed>> = HashMap::new();
    for (i, entry) in nonzero {
        let (neg, key) = entry.normalized();
        let list = members.entry(key.clone()).or_insert_with(|| {
            order.push(key);
            Vec::new()
        });
        list.push(Signed { slot: Slot::Y(i), neg });
    }

    let mut products = Vec::with_capacity(order.len());
    for key in &order {
        let presum = sum_signed(b, &members[key]).expect("group is non-empty");
        let coef = materialize(b, key, factored);
        products.push(mul_signed(b, coef, presum));
    }
    let acc = sum_signed(b, &products)?;
    Some(if factored {
        mul_signed(b, acc, Signed::pos(Slot::Const(Constant::InvSqrt2)))
    } else {
        acc
    })
}

/// Compiles the lattice decode step for `code` with `rx_antennas` receive
/// antennas at the given optimization level.
pub fn generate_schedule(code: &DispersionCode, rx_antennas: usize, level: OptLevel) -> Schedule {
    let sym = symbolic_check_h(code, rx_antennas);
    let num_h = 2 * code.tx_antennas() * rx_antennas;
    let mut b = ScheduleBuilder::new(
        code.id(),
        rx_antennas,
        level,
        code.scale(),
        num_h,
        sym.rows(),
        sym.cols(),
    );

    let mut ybar = Vec::with_capacity(sym.cols());
    for j in 0..sym.cols() {
        let column: Vec<&SymEntry> = sym.column(j).collect();
        let value = match level {
            OptLevel::L0 => column_dense(&mut b, &column, false),
            OptLevel::L1 => column_dense(&mut b, &column, true),
            OptLevel::L2 => column_grouped(&mut b, &column),
        };
        ybar.push(value.unwrap_or(Signed::pos(Slot::Const(Constant::Zero))));
    }

    let sigma = match level {
        OptLevel::L0 => {
            // squared norm of the first column, zeros included
            let squares: Vec<Signed> = sym
                .column(0)
                .map(|e| {
                    let v = materialize(&mut b, e, false);
                    Signed::pos(b.mul(v.slot, v.slot, None))
                })
                .collect();
            sum_signed(&mut b, &squares)
        }
        OptLevel::L1 | OptLevel::L2 => {
            let squares: Vec<Signed> = (0..num_h)
                .map(|i| Signed::pos(b.mul(Slot::H(i), Slot::H(i), None)))
                .collect();
            let norm = sum_signed(&mut b, &squares);
            match norm {
                Some(n) if code.scale() > 1 => {
                    Some(mul_signed(&mut b, n, Signed::pos(Slot::Const(Constant::Scale))))
                }
                other => other,
            }
        }
    };
    let sigma = sigma.expect("at least one channel coefficient");
    if !b.retarget_last(sigma.slot, Slot::Sigma) {
        // A single squared coefficient with nothing to add: copy it through
        // a free double negation so sigma still has its own slot.
        let n = b.neg(sigma.slot, None);
        b.neg(n, Some(Slot::Sigma));
    }

    let inv = b.div4(Slot::Sigma, None);
    for (j, v) in ybar.into_iter().enumerate() {
        let src = if v.neg { b.neg(v.slot, None) } else { v.slot };
        b.mul(inv, src, Some(Slot::Z(j)));
    }
    b.finish()
}
