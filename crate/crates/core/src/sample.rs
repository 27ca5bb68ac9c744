//! Seeded random inputs for the property sweeps.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dilation::Term;
use crate::interval::{DyadicInterval, IntervalCollection};
use crate::num::{int, pow2, rat, shl, Quad2, Rational};
use crate::pointset::PointSet;
use crate::step::StepFunction;
use crate::tree::{Partition, TreeFunction, TreeLevel};

/// Generator for trial `trial` of a run seeded with `seed`.
#[must_use]
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(trial);
    r
}

/// Largest `|m|` used by [`random_collection`].
pub const MAX_SCALE: i32 = 20;

/// Up to `max_n` intervals inside one randomly placed dyadic interval, at
/// most 12 scales below it and within `|m| ≤ 20`.
pub fn random_collection<R: Rng>(rng: &mut R, max_n: usize, distinct: bool) -> IntervalCollection {
    let n = rng.random_range(1..=max_n.max(1));
    let base = rng.random_range(-MAX_SCALE..=MAX_SCALE - 1);
    let depth = rng.random_range(1..=12.min(MAX_SCALE - base));
    let base_j: i64 = rng.random_range(-4..=4);
    let mut items = Vec::with_capacity(n);
    for _ in 0..n {
        let d = rng.random_range(0..=depth);
        let m = base + d;
        let j = (base_j - 1) * (1i64 << d) + rng.random_range(1..=1i64 << d);
        items.push(DyadicInterval::new(m, j));
    }
    if distinct {
        items.sort();
        items.dedup();
        items.shuffle(rng);
    }
    IntervalCollection::new(items, distinct).expect("deduplicated")
}

/// Small nonzero rational in `[−2, 2]` with a power-of-two denominator.
fn small_rational<R: Rng>(rng: &mut R) -> Rational {
    loop {
        let v = rat(rng.random_range(-8..=8), 4);
        if v != int(0) {
            return v;
        }
    }
}

/// Positive rational in `(0, 4]`.
pub fn positive_rational<R: Rng>(rng: &mut R) -> Rational {
    rat(rng.random_range(1..=16), 4)
}

/// Nested `E_1 ⊃ E_2 ⊃ …` (each a random half of the previous one) and
/// `f_k` constant on the rings `E_m \ E_{m+1}`, `m ≥ k`, with absolute
/// values nonincreasing in `m`; this gives the halving hypothesis.
pub fn random_l3_family<R: Rng>(rng: &mut R, max_n: usize) -> (Vec<StepFunction>, Vec<PointSet>) {
    let n = rng.random_range(1..=max_n.max(1));
    let mut cells = vec![DyadicInterval::new(0, 1)];
    for _ in 1..=n {
        let last = *cells.last().expect("nonempty");
        let (a, b) = last.children();
        cells.push(if rng.random_bool(0.5) { a } else { b });
    }
    let e: Vec<PointSet> = cells[..n].iter().map(DyadicInterval::as_pointset).collect();
    let mut f = Vec::with_capacity(n);
    for k in 0..n {
        let mut pieces = Vec::new();
        let mut mag = rng.random_range(1..=8i64);
        for m in k..n {
            let ring = PointSet::from_intervals(vec![(cells[m].left(), cells[m].right())])
                .difference(&cells[m + 1].as_pointset());
            let sign = if rng.random_bool(0.5) { 1 } else { -1 };
            for (a, b) in ring.components() {
                pieces.push((a.clone(), b.clone(), Quad2::from_int(sign * mag)));
            }
            mag = rng.random_range(0..=mag);
        }
        let tail = &cells[n];
        pieces.push((tail.left(), tail.right(), Quad2::from_int(mag)));
        f.push(StepFunction::sum_pieces(&pieces).expect("disjoint pieces"));
    }
    (f, e)
}

/// Step function on `[0, 1)` with breakpoints on `𝒟_3`, not identically
/// zero.
pub fn random_phi<R: Rng>(rng: &mut R) -> StepFunction {
    loop {
        let k = rng.random_range(1..=4usize);
        let mut cuts: Vec<i64> = (1..8).collect();
        cuts.shuffle(rng);
        let mut cuts: Vec<i64> = cuts.into_iter().take(k - 1).collect();
        cuts.sort_unstable();
        let mut bps = vec![int(0)];
        bps.extend(cuts.iter().map(|&c| rat(c, 8)));
        bps.push(int(1));
        let vals = (0..k)
            .map(|_| {
                if rng.random_bool(0.2) {
                    Quad2::zero()
                } else {
                    Quad2::from_rational(small_rational(rng))
                }
            })
            .collect();
        let f = StepFunction::new(bps, vals).expect("increasing breakpoints");
        if !f.is_zero() {
            return f;
        }
    }
}

/// `Φ` with `2..=max_n` distinct dilation-translation indices and positive
/// coefficients.
pub fn random_dilation_family<R: Rng>(rng: &mut R, max_n: usize) -> (StepFunction, Vec<Term>) {
    let phi = random_phi(rng);
    let n = rng.random_range(2..=max_n.max(2));
    let mut seen = std::collections::HashSet::new();
    let mut terms = Vec::with_capacity(n);
    while terms.len() < n {
        let m = rng.random_range(-4..=10i32);
        let span = 1i64 << m.max(0);
        let l = rng.random_range(-2..span + 2);
        if seen.insert((m, l)) {
            terms.push(Term::new(m, l, positive_rational(rng)));
        }
    }
    (phi, terms)
}

/// Levels for `build_tree`: `ℱ_n = 𝒟_{a_n}`, `𝒞_n = 𝒟_{b_n}` with
/// `a_n ≤ b_n ≤ a_{n+1}`, functions on distinct `ℱ_n` cells of `[0, 1)`,
/// constant on `𝒞_n` cells.
pub fn random_tree_levels<R: Rng>(
    rng: &mut R,
    max_levels: usize,
    max_per_level: usize,
) -> Vec<TreeLevel> {
    let levels = rng.random_range(1..=max_levels.max(1));
    let mut a = rng.random_range(0..=1i32);
    let mut out = Vec::with_capacity(levels);
    for _ in 0..levels {
        let b = a + rng.random_range(0..=2);
        let cells = 1i64 << a;
        let mut idx: Vec<i64> = (0..cells).collect();
        idx.shuffle(rng);
        let count = rng.random_range(1..=(max_per_level as i64).min(cells)) as usize;
        let mut funcs = Vec::with_capacity(count);
        for &i in &idx[..count] {
            let sub = 1i64 << (b - a);
            let lo = shl(&int(i), -i64::from(a));
            let h = pow2(-i64::from(b));
            let bps: Vec<Rational> = (0..=sub).map(|t| &lo + &h * int(t)).collect();
            let vals = (0..sub)
                .map(|_| match rng.random_range(0..4) {
                    0 => Quad2::zero(),
                    _ => Quad2::from_rational(small_rational(rng)),
                })
                .collect();
            funcs.push(TreeFunction::Step(
                StepFunction::new(bps, vals).expect("grid breakpoints"),
            ));
        }
        out.push(TreeLevel {
            f_partition: Partition::grid(a, int(0)),
            c_partition: Partition::grid(b, int(0)),
            funcs,
        });
        a = b + rng.random_range(0..=1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stopping::almost_orthogonality_check;
    use crate::tree::build_tree;

    #[test]
    fn streams_are_reproducible() {
        let a = random_collection(&mut trial_rng(7, 3), 50, true);
        let b = random_collection(&mut trial_rng(7, 3), 50, true);
        assert_eq!(a, b);
        assert!(a.items().iter().all(|i| i.m.abs() <= MAX_SCALE));
        let c = random_collection(&mut trial_rng(7, 4), 50, true);
        assert_ne!(a, c);
    }

    #[test]
    fn l3_families_are_admissible() {
        for t in 0..40 {
            let (f, e) = random_l3_family(&mut trial_rng(1, t), 8);
            let r = almost_orthogonality_check(&f, &e).unwrap();
            assert!(r.hypotheses_hold(), "{:?}", r.failure);
        }
    }

    #[test]
    fn tree_levels_build() {
        for t in 0..40 {
            let lv = random_tree_levels(&mut trial_rng(2, t), 4, 6);
            build_tree(&lv).unwrap();
        }
    }

    #[test]
    fn dilation_families_are_valid() {
        for t in 0..20 {
            let (phi, terms) = random_dilation_family(&mut trial_rng(3, t), 30);
            crate::dilation::Combination::new(phi, terms).unwrap();
        }
    }
}
