mod common;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use ostbc_lab::codebook::{builtin_codes, encode, get_code};
use ostbc_lab::decoders::{
    decode_f, decode_fprime, decode_lattice, decode_trace, exhaustive_ml, quantize, Constellation,
};
use ostbc_lab::lattice::{build_check_h, stack_received, vectorize_received, ChannelRealization};
use ostbc_lab::sim::{noise_density, run_trial, trial_rng, DecoderKind};
use ostbc_lab::Error;

use common::rel_diff;

#[test]
fn all_decoders_agree_at_10db() {
    for code in builtin_codes() {
        let c4 = Constellation::from_name("4qam").unwrap();
        for t in 0..200 {
            let out = run_trial(&code, &c4, 1, noise_density(10.0), &mut trial_rng(21, 0, t), &DecoderKind::ALL).unwrap();
            assert!(out.agree(), "{} trial {t}", code.id());
        }
    }
}

#[test]
fn soft_estimates_match_across_routes() {
    let c16 = Constellation::from_name("16qam").unwrap();
    for code in builtin_codes() {
        for m in 1..=2 {
            let out = run_trial(&code, &c16, m, noise_density(5.0), &mut trial_rng(4, m, 0), &DecoderKind::ALL).unwrap();
            let reference = out.outputs[0].soft.as_ref().unwrap();
            for o in &out.outputs[1..] {
                if let Some(s) = &o.soft {
                    assert!(rel_diff(&s.z, &reference.z) <= 1e-9, "{} {}", code.id(), o.kind);
                }
                assert_eq!(o.message.indices, out.outputs[0].message.indices);
            }
        }
    }
}

#[test]
fn lattice_matches_exhaustive_search() {
    for name in ["4qam", "16qam"] {
        let c = Constellation::from_name(name).unwrap();
        for code in builtin_codes() {
            for t in 0..30 {
                let out = run_trial(
                    &code,
                    &c,
                    1,
                    noise_density(3.0),
                    &mut trial_rng(8, 0, t),
                    &[DecoderKind::Lattice, DecoderKind::Exhaustive],
                )
                .unwrap();
                assert!(out.decisions_agree, "{} {name} trial {t}", code.id());
            }
        }
    }
}

#[test]
fn noiseless_round_trip() {
    for name in ["4qam", "16qam", "64qam"] {
        let c = Constellation::from_name(name).unwrap();
        for code in builtin_codes() {
            for t in 0..50 {
                let out = run_trial(&code, &c, 2, 0.0, &mut trial_rng(2, 0, t), &DecoderKind::ALL[..4]).unwrap();
                for o in &out.outputs {
                    assert_eq!(o.message.indices, out.sent, "{} {name} {}", code.id(), o.kind);
                }
            }
        }
    }
}

#[test]
fn decoders_reject_zero_channel() {
    let code = get_code("g2").unwrap();
    let c = Constellation::from_name("4qam").unwrap();
    let ch = ChannelRealization::zeros(2, 1);
    let y = DMatrix::from_element(2, 1, Complex64::new(1.0, 0.0));
    let lat = build_check_h(&code, &ch).unwrap();
    let stack = stack_received(&y);
    assert!(matches!(decode_lattice(&lat, &vectorize_received(&y), &c), Err(Error::DegenerateChannel)));
    assert!(matches!(decode_trace(&code, &ch, &y, &c, 1), Err(Error::DegenerateChannel)));
    assert!(matches!(decode_f(&code, &ch, &stack.z, &c, 1), Err(Error::DegenerateChannel)));
    assert!(matches!(decode_fprime(&code, &ch, &stack.zprime, &c, 1), Err(Error::DegenerateChannel)));
}

#[test]
fn exhaustive_guard_and_small_cases() {
    let c = Constellation::from_name("16qam").unwrap();
    let code = get_code("g4").unwrap();
    let ch = ostbc_lab::sim::sample_channel(4, 1, &mut trial_rng(1, 0, 0));
    let lat = build_check_h(&code, &ch).unwrap();
    // 4^8 = 65536 candidates: allowed
    assert!(exhaustive_ml(&lat, &[0.0; 16], &c).is_ok());
    let c256 = Constellation::from_name("256qam").unwrap();
    assert!(matches!(exhaustive_ml(&lat, &[0.0; 16], &c256), Err(Error::SearchSpaceTooLarge { .. })));
}

#[test]
fn non_square_constellations_rejected() {
    for name in ["8psk", "32qam", "36qam", "qam", "bpsk"] {
        assert!(matches!(Constellation::from_name(name), Err(Error::UnsupportedConstellation(_))), "{name}");
    }
}

fn alphabet() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![Just("4qam"), Just("16qam"), Just("64qam")]
        .prop_map(|n| Constellation::from_name(n).unwrap().alphabet().to_vec())
}

proptest! {
    #[test]
    fn quantizer_picks_nearest(z in -3.0f64..3.0, a in alphabet()) {
        let (i, v) = quantize(z, &a).unwrap();
        prop_assert_eq!(a[i], v);
        for p in &a {
            prop_assert!((z - v).abs() <= (z - p).abs());
        }
    }

    #[test]
    fn quantizer_is_symmetric(z in -3.0f64..3.0, a in alphabet()) {
        // the alphabet is symmetric; away from exact midpoints so is the decision
        let (i, _) = quantize(z, &a).unwrap();
        let (j, _) = quantize(-z, &a).unwrap();
        let spacing = a[1] - a[0];
        let near_mid = a.windows(2).any(|w| (z - (w[0] + w[1]) / 2.0).abs() < 1e-12 * spacing);
        prop_assume!(!near_mid);
        prop_assert_eq!(i + j, a.len() - 1);
    }

    #[test]
    fn quantizing_a_point_returns_it(a in alphabet(), pick in 0usize..8) {
        let i = pick % a.len();
        prop_assert_eq!(quantize(a[i], &a).unwrap().0, i);
    }

    #[test]
    fn soft_estimate_is_invariant_to_joint_scaling(
        code_idx in 0usize..4,
        seed in 0u64..1000,
        alpha in 0.05f64..20.0,
    ) {
        // Scaling H and Y by alpha scales Hcheck^T ycheck by alpha^2, as does sigma.
        let code = &builtin_codes()[code_idx];
        let c = Constellation::from_name("16qam").unwrap();
        let mut rng = trial_rng(seed, 0, 0);
        let ch = ostbc_lab::sim::sample_channel(code.tx_antennas(), 1, &mut rng);
        let s: Vec<Complex64> = (0..code.num_symbols()).map(|k| Complex64::new(k as f64 * 0.3 - 0.4, 0.2)).collect();
        let y = encode(code, &s).unwrap() * ch.matrix();
        let a = Complex64::new(alpha, 0.0);
        let scaled = ChannelRealization::new(ch.matrix() * a);
        let (z1, m1) = decode_lattice(&build_check_h(code, &ch).unwrap(), &vectorize_received(&y), &c).unwrap();
        let (z2, m2) = decode_lattice(&build_check_h(code, &scaled).unwrap(), &vectorize_received(&(y * a)), &c).unwrap();
        prop_assert!(rel_diff(&z1.z, &z2.z) <= 1e-12);
        prop_assert_eq!(m1.indices, m2.indices);
    }
}
