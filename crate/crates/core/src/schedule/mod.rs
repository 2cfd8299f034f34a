//! Straight-line programs for the lattice decode step and exact operation
//! counts.
//!
//! A [`Schedule`] computes `z = Hcheck^T ycheck / sigma` from the real
//! channel coefficients `h1..` and received components `y1..` using four
//! primitive operations. Counting conventions: `ADD` (also used for
//! subtraction) is one real addition, `MUL` one real multiplication, `DIV4`
//! (a reciprocal) is charged as four multiplications and `NEG` is free.

mod formula;
mod generate;

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

pub use formula::{dense_formula, frobenius_formula};
pub use generate::generate_schedule;

/// Named constants a schedule may read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Constant {
    Zero,
    /// `1/sqrt(2)`
    InvSqrt2,
    /// The code scale `c`.
    Scale,
}

/// A storage location. The derive order (inputs, constants, `sigma`,
/// temporaries, outputs) is the operand order used in dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slot {
    H(usize),
    Y(usize),
    Const(Constant),
    Sigma,
    Temp(usize),
    Z(usize),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::H(i) => write!(f, "h{}", i + 1),
            Slot::Y(i) => write!(f, "y{}", i + 1),
            Slot::Const(Constant::Zero) => write!(f, "zero"),
            Slot::Const(Constant::InvSqrt2) => write!(f, "r"),
            Slot::Const(Constant::Scale) => write!(f, "c"),
            Slot::Sigma => write!(f, "sigma"),
            Slot::Temp(i) => write!(f, "t{}", i + 1),
            Slot::Z(i) => write!(f, "z{}", i + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add { dst: Slot, lhs: Slot, rhs: Slot },
    Mul { dst: Slot, lhs: Slot, rhs: Slot },
    /// `dst = 1 / src`
    Div4 { dst: Slot, src: Slot },
    /// `dst = -src`
    Neg { dst: Slot, src: Slot },
}

impl Op {
    pub fn dst(&self) -> Slot {
        match *self {
            Op::Add { dst, .. } | Op::Mul { dst, .. } | Op::Div4 { dst, .. } | Op::Neg { dst, .. } => dst,
        }
    }

    fn set_dst(&mut self, slot: Slot) {
        match self {
            Op::Add { dst, .. } | Op::Mul { dst, .. } | Op::Div4 { dst, .. } | Op::Neg { dst, .. } => {
                *dst = slot
            }
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Add { dst, lhs, rhs } => write!(f, "ADD {dst} <- {lhs} {rhs}"),
            Op::Mul { dst, lhs, rhs } => write!(f, "MUL {dst} <- {lhs} {rhs}"),
            Op::Div4 { dst, src } => write!(f, "DIV4 {dst} <- {src}"),
            Op::Neg { dst, src } => write!(f, "NEG {dst} <- {src}"),
        }
    }
}

/// Real multiplications and additions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OpCount {
    pub rm: u64,
    pub ra: u64,
}

impl OpCount {
    pub fn new(rm: u64, ra: u64) -> Self {
        Self { rm, ra }
    }
}

impl fmt::Display for OpCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RM={} RA={}", self.rm, self.ra)
    }
}

/// How much structure of `Hcheck` the generator exploits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum OptLevel {
    /// Dense matrix-vector product, zeros included; `sigma` as the squared
    /// norm of the first column.
    L0,
    /// Structural zeros skipped; `sigma = c ||H||^2`.
    L1,
    /// L1 plus grouping of repeated coefficients within a column and
    /// factoring of a `1/sqrt(2)` common to a whole column.
    L2,
}

impl OptLevel {
    pub const ALL: [OptLevel; 3] = [OptLevel::L0, OptLevel::L1, OptLevel::L2];

    pub fn from_index(level: u8) -> Result<Self> {
        match level {
            0 => Ok(OptLevel::L0),
            1 => Ok(OptLevel::L1),
            2 => Ok(OptLevel::L2),
            other => Err(Error::InvalidConfig(format!("optimization level {other} (expected 0, 1 or 2)"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            OptLevel::L0 => 0,
            OptLevel::L1 => 1,
            OptLevel::L2 => 2,
        }
    }
}

impl fmt::Display for OptLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.index())
    }
}

/// A straight-line program producing `z1..z_{2K}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    code_id: String,
    rx_antennas: usize,
    level: OptLevel,
    scale: u32,
    num_h: usize,
    num_y: usize,
    num_outputs: usize,
    num_temps: usize,
    ops: Vec<Op>,
}

impl Schedule {
    pub fn code_id(&self) -> &str {
        &self.code_id
    }

    pub fn rx_antennas(&self) -> usize {
        self.rx_antennas
    }

    pub fn level(&self) -> OptLevel {
        self.level
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn num_outputs(&self) -> usize {
        self.num_outputs
    }

    /// Text dump: header, one op per line, count trailer.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "schedule {} M={} level={}\n",
            self.code_id,
            self.rx_antennas,
            self.level.index()
        );
        for op in &self.ops {
            out.push_str(&op.to_string());
            out.push('\n');
        }
        out.push_str(&format!("count {}\n", count_ops(self)));
        out
    }

    fn slot_index(&self, slot: Slot) -> Option<usize> {
        let consts = self.num_h + self.num_y;
        let temps = consts + 4;
        let outs = temps + self.num_temps;
        match slot {
            Slot::H(i) if i < self.num_h => Some(i),
            Slot::Y(i) if i < self.num_y => Some(self.num_h + i),
            Slot::Const(Constant::Zero) => Some(consts),
            Slot::Const(Constant::InvSqrt2) => Some(consts + 1),
            Slot::Const(Constant::Scale) => Some(consts + 2),
            Slot::Sigma => Some(consts + 3),
            Slot::Temp(i) if i < self.num_temps => Some(temps + i),
            Slot::Z(i) if i < self.num_outputs => Some(outs + i),
            _ => None,
        }
    }
}

/// Appends operations and hands out fresh temporaries.
#[derive(Debug)]
pub struct ScheduleBuilder {
    code_id: String,
    rx_antennas: usize,
    level: OptLevel,
    scale: u32,
    num_h: usize,
    num_y: usize,
    num_outputs: usize,
    next_temp: usize,
    ops: Vec<Op>,
}

impl ScheduleBuilder {
    pub fn new(
        code_id: &str,
        rx_antennas: usize,
        level: OptLevel,
        scale: u32,
        num_h: usize,
        num_y: usize,
        num_outputs: usize,
    ) -> Self {
        Self {
            code_id: code_id.to_string(),
            rx_antennas,
            level,
            scale,
            num_h,
            num_y,
            num_outputs,
            next_temp: 0,
            ops: Vec::new(),
        }
    }

    fn dst_or_temp(&mut self, dst: Option<Slot>) -> Slot {
        dst.unwrap_or_else(|| {
            self.next_temp += 1;
            Slot::Temp(self.next_temp - 1)
        })
    }

    pub fn add(&mut self, a: Slot, b: Slot, dst: Option<Slot>) -> Slot {
        let dst = self.dst_or_temp(dst);
        let (lhs, rhs) = if a <= b { (a, b) } else { (b, a) };
        self.ops.push(Op::Add { dst, lhs, rhs });
        dst
    }

    pub fn mul(&mut self, a: Slot, b: Slot, dst: Option<Slot>) -> Slot {
        let dst = self.dst_or_temp(dst);
        let (lhs, rhs) = if a <= b { (a, b) } else { (b, a) };
        self.ops.push(Op::Mul { dst, lhs, rhs });
        dst
    }

    pub fn div4(&mut self, src: Slot, dst: Option<Slot>) -> Slot {
        let dst = self.dst_or_temp(dst);
        self.ops.push(Op::Div4 { dst, src });
        dst
    }

    pub fn neg(&mut self, src: Slot, dst: Option<Slot>) -> Slot {
        let dst = self.dst_or_temp(dst);
        self.ops.push(Op::Neg { dst, src });
        dst
    }

    /// Renames the destination of the most recent op from `from` to `to`.
    /// Returns false if the last op did not write `from`.
    pub fn retarget_last(&mut self, from: Slot, to: Slot) -> bool {
        match self.ops.last_mut() {
            Some(op) if op.dst() == from => {
                op.set_dst(to);
                true
            }
            _ => false,
        }
    }

    pub fn finish(self) -> Schedule {
        Schedule {
            code_id: self.code_id,
            rx_antennas: self.rx_antennas,
            level: self.level,
            scale: self.scale,
            num_h: self.num_h,
            num_y: self.num_y,
            num_outputs: self.num_outputs,
            num_temps: self.next_temp,
            ops: self.ops,
        }
    }
}

/// `rm = #MUL + 4 #DIV4`, `ra = #ADD`; `NEG` is free.
pub fn count_ops(sched: &Schedule) -> OpCount {
    sched.ops.iter().fold(OpCount::default(), |mut acc, op| {
        match op {
            Op::Add { .. } => acc.ra += 1,
            Op::Mul { .. } => acc.rm += 1,
            Op::Div4 { .. } => acc.rm += 4,
            Op::Neg { .. } => {}
        }
        acc
    })
}

/// Interprets a schedule on real channel coefficients `h` and the real
/// received vector `ycheck`, returning `z1..z_{2K}`.
pub fn execute_schedule(sched: &Schedule, h: &[f64], ycheck: &[f64]) -> Result<Vec<f64>> {
    if h.len() != sched.num_h || ycheck.len() != sched.num_y {
        return Err(Error::DimensionMismatch {
            what: "schedule inputs",
            expected: format!("{} h and {} y values", sched.num_h, sched.num_y),
            got: format!("{} h and {} y values", h.len(), ycheck.len()),
        });
    }
    let total = sched.slot_index(Slot::Z(0)).unwrap_or(0) + sched.num_outputs;
    let mut mem: Vec<Option<f64>> = vec![None; total.max(sched.num_h + sched.num_y + 4)];
    for (i, v) in h.iter().enumerate() {
        mem[i] = Some(*v);
    }
    for (i, v) in ycheck.iter().enumerate() {
        mem[sched.num_h + i] = Some(*v);
    }
    let base = sched.num_h + sched.num_y;
    mem[base] = Some(0.0);
    mem[base + 1] = Some(std::f64::consts::FRAC_1_SQRT_2);
    mem[base + 2] = Some(f64::from(sched.scale));

    let read = |mem: &[Option<f64>], slot: Slot| -> Result<f64> {
        sched
            .slot_index(slot)
            .and_then(|i| mem[i])
            .ok_or_else(|| Error::UnboundSlot(slot.to_string()))
    };
    for op in &sched.ops {
        let value = match *op {
            Op::Add { lhs, rhs, .. } => read(&mem, lhs)? + read(&mem, rhs)?,
            Op::Mul { lhs, rhs, .. } => read(&mem, lhs)? * read(&mem, rhs)?,
            Op::Div4 { src, .. } => 1.0 / read(&mem, src)?,
            Op::Neg { src, .. } => -read(&mem, src)?,
        };
        let dst = op.dst();
        let idx = sched
            .slot_index(dst)
            .ok_or_else(|| Error::UnboundSlot(dst.to_string()))?;
        if mem[idx].is_some() {
            return Err(Error::Reassigned(dst.to_string()));
        }
        mem[idx] = Some(value);
    }
    (0..sched.num_outputs)
        .map(|i| read(&mem, Slot::Z(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builder() -> ScheduleBuilder {
        ScheduleBuilder::new("t", 1, OptLevel::L1, 1, 2, 2, 1)
    }

    #[test]
    fn empty_schedule_counts_zero() {
        assert_eq!(count_ops(&builder().finish()), OpCount::new(0, 0));
    }

    #[test]
    fn division_costs_four() {
        let mut b = builder();
        b.div4(Slot::H(0), Some(Slot::Z(0)));
        let s = b.finish();
        assert_eq!(count_ops(&s), OpCount::new(4, 0));
        assert_eq!(execute_schedule(&s, &[4.0, 0.0], &[0.0, 0.0]).unwrap(), vec![0.25]);
    }

    #[test]
    fn negation_is_free() {
        let mut b = builder();
        let n = b.neg(Slot::Y(1), None);
        b.add(Slot::Y(0), n, Some(Slot::Z(0)));
        let s = b.finish();
        assert_eq!(count_ops(&s), OpCount::new(0, 1));
        assert_eq!(execute_schedule(&s, &[0.0, 0.0], &[5.0, 3.0]).unwrap(), vec![2.0]);
    }

    #[test]
    fn unbound_and_reassigned_slots() {
        let mut b = builder();
        b.add(Slot::Temp(7), Slot::Y(0), Some(Slot::Z(0)));
        assert!(matches!(
            execute_schedule(&b.finish(), &[0.0; 2], &[0.0; 2]),
            Err(Error::UnboundSlot(_))
        ));

        let mut b = builder();
        b.add(Slot::Y(0), Slot::Y(1), Some(Slot::Sigma));
        b.add(Slot::Y(0), Slot::Y(1), Some(Slot::Sigma));
        assert!(matches!(
            execute_schedule(&b.finish(), &[0.0; 2], &[0.0; 2]),
            Err(Error::Reassigned(_))
        ));

        // z1 never written
        assert!(matches!(
            execute_schedule(&builder().finish(), &[0.0; 2], &[0.0; 2]),
            Err(Error::UnboundSlot(_))
        ));
        assert!(execute_schedule(&builder().finish(), &[0.0; 3], &[0.0; 2]).is_err());
    }

    #[test]
    fn operands_sorted_in_dump() {
        let mut b = builder();
        let t = b.mul(Slot::Y(1), Slot::H(0), None);
        b.add(t, Slot::Y(0), Some(Slot::Z(0)));
        let dump = b.finish().dump();
        assert_eq!(
            dump,
            "schedule t M=1 level=1\nMUL t1 <- h1 y2\nADD z1 <- y1 t1\ncount RM=1 RA=1\n"
        );
    }

    #[test]
    fn level_parsing() {
        assert_eq!(OptLevel::from_index(2).unwrap(), OptLevel::L2);
        assert!(OptLevel::from_index(3).is_err());
        assert_eq!(OptLevel::L1.to_string(), "L1");
    }
}
