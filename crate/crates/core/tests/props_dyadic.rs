use dyadic_forge::dilation::{dilate_translate, t3_evaluate, Combination, DilationIndex, Term};
use dyadic_forge::interval::{dmax, dmin, indicator_sum, Relation};
use dyadic_forge::num::{int, pow2, rat, Quad2, Rational};
use dyadic_forge::sample::{random_collection, random_dilation_family, random_phi, trial_rng};
use dyadic_forge::stopping::{
    haar_bound_report, iterate_decomposition, split_level, weighted_indicator_norm_sq,
};
use dyadic_forge::{DyadicInterval, IntervalCollection};
use num_traits::Zero;
use proptest::prelude::*;

fn interval() -> impl Strategy<Value = DyadicInterval> {
    (-20i32..=20, -64i64..=64).prop_map(|(m, j)| DyadicInterval::new(m, j))
}

fn n_for(u: &IntervalCollection) -> u32 {
    let mut n = 1;
    while (1usize << n) < u.len() {
        n += 1;
    }
    n
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn nested_or_disjoint(a in interval(), b in interval()) {
        let (pa, pb) = (a.as_pointset(), b.as_pointset());
        let meet = !pa.intersection(&pb).is_empty();
        match a.relation(&b) {
            Relation::Equal => prop_assert_eq!(pa, pb),
            Relation::IInsideJ => prop_assert!(pb.contains_set(&pa) && pa != pb),
            Relation::JInsideI => prop_assert!(pa.contains_set(&pb) && pa != pb),
            Relation::Disjoint => prop_assert!(!meet),
        }
    }

    #[test]
    fn dmax_dmin_cover_and_minimality(seed in any::<u64>()) {
        let u = random_collection(&mut trial_rng(seed, 0), 60, false);
        let top = dmax(&u).unwrap();
        prop_assert_eq!(top.union_set(), u.union_set());
        for (i, a) in top.items().iter().enumerate() {
            for b in &top.items()[i + 1..] {
                prop_assert_eq!(a.relation(b), Relation::Disjoint);
            }
        }
        let low = dmin(&u).unwrap();
        for a in low.items() {
            prop_assert!(u.items().iter().all(|b| b == a || !a.contains(b)));
        }
    }

    #[test]
    fn split_is_deterministic_and_verified(seed in any::<u64>()) {
        let u = random_collection(&mut trial_rng(seed, 1), 200, true);
        let n = n_for(&u);
        let a = split_level(&u, n).unwrap();
        let b = split_level(&u, n).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.check(&u, n).unwrap().all_hold());
        let layers = iterate_decomposition(&u, n).unwrap();
        prop_assert!(layers.check(&u, n).unwrap().all_hold());
    }

    #[test]
    fn indicator_sum_counts_members(seed in any::<u64>()) {
        let u = random_collection(&mut trial_rng(seed, 2), 40, false);
        let s = indicator_sum(&u).unwrap();
        let total: Rational = u.items().iter().map(DyadicInterval::length).sum();
        prop_assert_eq!(s.integral(), Quad2::from_rational(total));
    }

    #[test]
    fn weighted_norm_is_quadratic(seed in any::<u64>(), r in 1i64..=9) {
        let u = random_collection(&mut trial_rng(seed, 3), 40, true);
        let c: Vec<Rational> = (0..u.len()).map(|i| rat(i as i64 % 5 + 1, 2)).collect();
        let rc: Vec<Rational> = c.iter().map(|x| x * int(r)).collect();
        let base = weighted_indicator_norm_sq(u.items(), &c).unwrap();
        let scaled = weighted_indicator_norm_sq(u.items(), &rc).unwrap();
        prop_assert_eq!(scaled, base * int(r * r));
    }

    #[test]
    fn haar_bound_holds(seed in any::<u64>()) {
        let u = random_collection(&mut trial_rng(seed, 4), 300, true);
        prop_assume!(u.len() >= 2);
        let c: Vec<Rational> = (0..u.len()).map(|i| rat(i as i64 % 7 + 1, 3)).collect();
        prop_assert!(haar_bound_report(&u, &c).unwrap().bound_ok);
    }

    #[test]
    fn dilation_is_an_l2_isometry(seed in any::<u64>(), m in -8i32..=8, l in -16i64..=16) {
        let phi = random_phi(&mut trial_rng(seed, 5));
        let g = dilate_translate(&phi, DilationIndex::new(m, l)).unwrap();
        prop_assert_eq!(g.l2_norm_sq(), phi.l2_norm_sq());
        prop_assert_eq!(g.l1_norm(), &phi.l1_norm() * &Quad2::pow2_half(-i64::from(m)));
    }

    #[test]
    fn t3_bound_is_homogeneous(seed in any::<u64>(), r in 1i64..=5) {
        let (phi, terms) = random_dilation_family(&mut trial_rng(seed, 6), 24);
        let scaled: Vec<Term> = terms.iter().map(|t| Term::new(t.m, t.l, &t.c * int(r))).collect();
        let a = t3_evaluate(&Combination::new(phi.clone(), terms).unwrap()).unwrap();
        let b = t3_evaluate(&Combination::new(phi, scaled).unwrap()).unwrap();
        prop_assert!(a.bound_ok && b.bound_ok);
        let r2 = int(r * r);
        prop_assert_eq!(b.lhs_sq, a.lhs_sq.scale(&r2));
        prop_assert_eq!(b.rhs_base, a.rhs_base.scale(&r2));
    }
}

#[test]
fn zero_weights_give_zero_norm() {
    let u = random_collection(&mut trial_rng(9, 9), 20, true);
    let c = vec![Rational::zero(); u.len()];
    assert!(weighted_indicator_norm_sq(u.items(), &c).unwrap().is_zero());
    assert_eq!(pow2(0), int(1));
}
