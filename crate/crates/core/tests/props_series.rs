use dyadic_forge::divergence::{e_k_sets, l13_divergence_check, L13Level, MeasSet};
use dyadic_forge::num::{int, pow2, rat, Rational};
use dyadic_forge::series::{abel_dini, abel_dini_exact, t4_coefficients, Multiplier};
use dyadic_forge::tree::Partition;
use dyadic_forge::wavelet::{MotherWavelet, TruncationParams, WaveletSystem};
use dyadic_forge::PointSet;
use proptest::prelude::*;

fn nondecreasing() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..4, 1..400).prop_map(|steps| {
        let mut w = 1.0;
        steps
            .into_iter()
            .map(|s| {
                w += f64::from(s) * 0.25;
                w
            })
            .collect()
    })
}

fn multiplier() -> impl Strategy<Value = Multiplier> {
    prop_oneof![
        (1i64..=8).prop_map(|v| Multiplier::Constant { value: int(v) }),
        (0u32..=1, 1i64..=4).prop_map(|(e, s)| Multiplier::Power {
            exponent: e,
            scale: int(s)
        }),
        prop::collection::vec(1i64..=3, 1..5).prop_map(|steps| {
            let mut acc = 0;
            Multiplier::Table {
                values: steps
                    .into_iter()
                    .map(|s| {
                        acc += s;
                        int(acc)
                    })
                    .collect(),
                tail_exponent: 1,
            }
        }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn abel_dini_telescopes(w in nondecreasing()) {
        let r = abel_dini(&w).unwrap();
        prop_assert!(r.q_strictly_increasing());
        let tail = r.second[w.len() - 1] - r.second[0];
        prop_assert!(tail <= 1.0 / r.q[0] + 2f64.powi(-30));
    }

    #[test]
    fn exact_q_matches_float(w in prop::collection::vec(1i64..=9, 1..30)) {
        let mut sorted = w.clone();
        sorted.sort_unstable();
        let exact = abel_dini_exact(&sorted.iter().map(|&v| int(v)).collect::<Vec<_>>()).unwrap();
        let float = abel_dini(&sorted.iter().map(|&v| v as f64).collect::<Vec<_>>()).unwrap();
        for (e, f) in exact.iter().zip(&float.q) {
            prop_assert!((dyadic_forge::num::to_f64(e) - f).abs() < 1e-12);
        }
    }

    #[test]
    fn t4_square_sum_identity_is_exact(w in multiplier(), k in 1u32..=8) {
        let p = TruncationParams::new(rat(1, 4), 5, 1).unwrap();
        prop_assert!(t4_coefficients(&w, k, &p).unwrap().identity_ok);
    }

    #[test]
    fn e_k_interior_cells_agree(k in 1u32..=6, i in 1u64..1000) {
        let sys = WaveletSystem::unit(MotherWavelet::builtin());
        let p = TruncationParams::new(rat(1, 4), 5, 1).unwrap();
        let e = e_k_sets(&sys, k, &p).unwrap();
        let h = pow2(1 - 5 * i64::from(k));
        let cells = 1u64 << (5 * k - 1);
        let c = int((i % cells) as i64);
        let a = &h * &c;
        let b = &a + &h;
        prop_assert_eq!(e.set.measure_in(&a, &b), e.set.measure_in(&Rational::from_integer(0.into()), &h));
    }

    #[test]
    fn periodic_measure_is_additive(a in 0i64..64, b in 0i64..64, c in 0i64..64) {
        let mut v = [a, b, c];
        v.sort_unstable();
        let pat = PointSet::from_intervals(vec![(rat(1, 32), rat(3, 32)), (rat(5, 32), rat(6, 32))]);
        let s = MeasSet::periodic(rat(1, 4), pat, int(0), int(1)).unwrap();
        let x: Vec<Rational> = v.iter().map(|&t| rat(t, 64)).collect();
        prop_assert_eq!(s.measure_in(&x[0], &x[1]) + s.measure_in(&x[1], &x[2]), s.measure_in(&x[0], &x[2]));
    }

    #[test]
    fn l13_growth_is_monotone(cells in prop::collection::vec((0i64..8, 1i64..=4), 1..8), depth in 0u32..=4) {
        // a window of length 5/8 wrapped around [0, 1)
        let levels: Vec<L13Level> = cells
            .iter()
            .map(|&(start, a)| {
                let lo = rat(start, 8);
                let hi = &lo + rat(5, 8);
                let mut parts = vec![(lo, hi.clone().min(int(1)))];
                if hi > int(1) {
                    parts.push((int(0), hi - int(1)));
                }
                L13Level {
                    partition: Partition::explicit(vec![]).unwrap(),
                    set: MeasSet::Explicit { set: PointSet::from_intervals(parts) },
                    a: int(a),
                }
            })
            .collect();
        let r = l13_divergence_check(&levels, &rat(1, 2), depth, &[int(1)]).unwrap();
        prop_assert!(r.monotone);
        prop_assert!(r.rows.windows(2).all(|w| w[0].min <= w[1].min));
    }
}
