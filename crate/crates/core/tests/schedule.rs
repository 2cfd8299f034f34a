mod common;

use ostbc_lab::codebook::{builtin_codes, get_code, Coef, DispersionCode, DispersionMatrix};
use ostbc_lab::decoders::{decode_lattice, Constellation};
use ostbc_lab::lattice::build_check_h;
use ostbc_lab::schedule::{
    count_ops, dense_formula, execute_schedule, frobenius_formula, generate_schedule, Op, OpCount,
    OptLevel, Slot,
};
use ostbc_lab::sim::{sample_channel, trial_rng};
use rand::Rng;
use rand_distr::StandardNormal;

use common::rel_diff;

fn count(code: &str, m: usize, level: OptLevel) -> OpCount {
    count_ops(&generate_schedule(&get_code(code).unwrap(), m, level))
}

#[test]
fn golden_counts() {
    for level in OptLevel::ALL {
        assert_eq!(count("g2", 1, level), OpCount::new(28, 15), "{level}");
    }
    assert_eq!(count("g3", 2, OptLevel::L1), OpCount::new(217, 195));
    assert_eq!(count("g3", 2, OptLevel::L2), OpCount::new(121, 195));
    assert_eq!(count("g4", 1, OptLevel::L1), OpCount::new(149, 127));
    assert_eq!(count("g4", 1, OptLevel::L2), OpCount::new(85, 127));
    assert_eq!(count("h3", 1, OptLevel::L2), OpCount::new(54, 47));
}

#[test]
fn dense_level_matches_dense_formula_for_unit_coefficient_codes() {
    for (id, m) in [("g2", 1), ("g3", 2), ("g4", 1), ("g4", 3)] {
        let code = get_code(id).unwrap();
        let f = dense_formula(code.num_symbols(), m, code.block_length()).unwrap();
        assert_eq!(count(id, m, OptLevel::L0), f, "{id} M={m}");
    }
}

#[test]
fn levels_are_monotone() {
    for code in builtin_codes() {
        for m in 1..=4 {
            let [l0, l1, l2] = OptLevel::ALL.map(|l| count_ops(&generate_schedule(&code, m, l)));
            assert!(l2.rm <= l1.rm && l1.rm <= l0.rm, "{} M={m}: {l0} {l1} {l2}", code.id());
            assert_eq!(l1.ra, l2.ra, "{} M={m}", code.id());
        }
    }
}

/// Single antenna, single symbol: `G = s`. Dense, no repetition, `c = 1`.
fn siso() -> DispersionCode {
    let one = || DispersionMatrix::from_rows(vec![vec![Coef::One]]).unwrap();
    DispersionCode::new("siso", 1, 1, 1, 1, vec![one()], vec![one()]).unwrap()
}

#[test]
fn dense_code_hits_frobenius_formula() {
    let code = siso();
    for m in 1..=4 {
        let got = count_ops(&generate_schedule(&code, m, OptLevel::L1));
        assert_eq!(got, frobenius_formula(1, m, 1, 1).unwrap(), "M={m}");
    }
}

#[test]
fn schedules_match_lattice_decoder() {
    // Any received vector exercises the same arithmetic, so draw it directly.
    let c = Constellation::from_name("16qam").unwrap();
    for code in builtin_codes() {
        for m in 1..=3 {
            for level in OptLevel::ALL {
                let sched = generate_schedule(&code, m, level);
                for t in 0..50 {
                    let mut rng = trial_rng(31, m, t);
                    let ch = sample_channel(code.tx_antennas(), m, &mut rng);
                    let ycheck: Vec<f64> = (0..2 * m * code.block_length())
                        .map(|_| rng.sample::<f64, _>(StandardNormal))
                        .collect();
                    let lat = build_check_h(&code, &ch).unwrap();
                    let (soft, _) = decode_lattice(&lat, &ycheck, &c).unwrap();
                    let z = execute_schedule(&sched, &ch.real_coeffs(), &ycheck).unwrap();
                    assert!(rel_diff(&z, &soft.z) <= 1e-12, "{} M={m} {level}", code.id());
                }
            }
        }
    }
}

#[test]
fn single_assignment_and_operand_order() {
    for code in builtin_codes() {
        for level in OptLevel::ALL {
            let sched = generate_schedule(&code, 2, level);
            let mut written = std::collections::HashSet::new();
            for op in sched.ops() {
                assert!(written.insert(op.dst()), "{op}");
                if let Op::Add { lhs, rhs, .. } | Op::Mul { lhs, rhs, .. } = op {
                    assert!(lhs <= rhs, "{op}");
                }
            }
            for j in 0..sched.num_outputs() {
                assert!(written.contains(&Slot::Z(j)));
            }
        }
    }
}

#[test]
fn dump_format() {
    let sched = generate_schedule(&get_code("g2").unwrap(), 1, OptLevel::L2);
    let text = sched.dump();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "schedule g2 M=1 level=2");
    assert_eq!(*lines.last().unwrap(), "count RM=28 RA=15");
    assert!(lines.contains(&"MUL t1 <- h1 y1"));
    assert!(lines.iter().any(|l| l.starts_with("DIV4 ") && l.ends_with("<- sigma")));
    assert!(text.ends_with('\n'));
    assert_eq!(text, generate_schedule(&get_code("g2").unwrap(), 1, OptLevel::L2).dump());
}

#[test]
fn execution_rejects_bad_inputs() {
    let sched = generate_schedule(&get_code("g2").unwrap(), 1, OptLevel::L1);
    assert!(execute_schedule(&sched, &[1.0; 3], &[0.0; 4]).is_err());
    assert!(execute_schedule(&sched, &[1.0; 4], &[0.0; 5]).is_err());
}

#[test]
fn unit_channel_example() {
    let sched = generate_schedule(&get_code("g2").unwrap(), 1, OptLevel::L2);
    let z = execute_schedule(&sched, &[1.0, 0.0, 0.0, 0.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(z, vec![1.0, 2.0, -3.0, 4.0]);
}

#[test]
fn formula_values() {
    let dense = [((2, 1, 2), (28, 15)), ((4, 2, 8), (300, 279)), ((4, 1, 8), (156, 135)), ((3, 1, 4), (66, 49))];
    for ((k, m, t), (rm, ra)) in dense {
        assert_eq!(dense_formula(k, m, t).unwrap(), OpCount::new(rm, ra));
    }
    let frob = [((2, 1, 2, 2), (28, 15)), ((4, 2, 8, 3), (280, 259)), ((4, 1, 8, 4), (148, 127)), ((3, 1, 4, 3), (64, 47))];
    for ((k, m, t, n), (rm, ra)) in frob {
        assert_eq!(frobenius_formula(k, m, t, n).unwrap(), OpCount::new(rm, ra));
    }
}
