//! Level sets `E_k`, the density-divergence check and the rearranged
//! divergence experiment on the wavelet subsystem.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::Calibration;
use crate::error::{Error, Result};
use crate::num::{floor, int, pow2, shl, Rational};
use crate::pointset::PointSet;
use crate::series::{t4_coefficients, CoefficientField, Multiplier};
use crate::tree::{adversarial_permutation, Partition, PartitionKind};
use crate::wavelet::{
    g_k, level_abs_sums, psi_tree, subsystem_psi, subsystem_scale, TruncationParams, WaveletSystem,
};

/// Subset of `[lo, hi)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeasSet {
    Explicit {
        set: PointSet,
    },
    /// `pattern ⊂ [lo, lo + period)` repeated across `[lo, hi)`.
    Periodic {
        #[serde(with = "crate::json::rational")]
        period: Rational,
        pattern: PointSet,
        #[serde(with = "crate::json::rational")]
        lo: Rational,
        #[serde(with = "crate::json::rational")]
        hi: Rational,
    },
}

impl MeasSet {
    pub fn periodic(
        period: Rational,
        pattern: PointSet,
        lo: Rational,
        hi: Rational,
    ) -> Result<Self> {
        if !period.is_positive() || hi < lo {
            return Err(Error::invalid("periodic set needs period > 0 and lo ≤ hi"));
        }
        let end = &lo + &period;
        if !pattern.is_empty() && !PointSet::interval(lo.clone(), end).contains_set(&pattern) {
            return Err(Error::invalid("pattern must lie in one period"));
        }
        Ok(Self::Periodic {
            period,
            pattern,
            lo,
            hi,
        })
    }

    /// `|self ∩ [lo, x)|` for the periodic form.
    fn periodic_cdf(
        period: &Rational,
        pattern: &PointSet,
        lo: &Rational,
        x: &Rational,
    ) -> Rational {
        if x <= lo {
            return Rational::zero();
        }
        let whole = floor(&((x - lo) / period));
        let start = lo + period * Rational::from_integer(whole.clone());
        Rational::from_integer(whole) * pattern.measure()
            + pattern
                .affine(&Rational::one(), &(&start - lo))
                .measure_in(&start, x)
    }

    #[must_use]
    pub fn measure_in(&self, a: &Rational, b: &Rational) -> Rational {
        if a >= b {
            return Rational::zero();
        }
        match self {
            Self::Explicit { set } => set.measure_in(a, b),
            Self::Periodic {
                period,
                pattern,
                lo,
                hi,
            } => {
                let a = a.max(lo).min(hi);
                let b = b.max(lo).min(hi);
                Self::periodic_cdf(period, pattern, lo, b)
                    - Self::periodic_cdf(period, pattern, lo, a)
            }
        }
    }

    #[must_use]
    pub fn measure(&self) -> Rational {
        match self {
            Self::Explicit { set } => set.measure(),
            Self::Periodic { lo, hi, .. } => self.measure_in(lo, hi),
        }
    }

    #[must_use]
    pub fn contains(&self, x: &Rational) -> bool {
        match self {
            Self::Explicit { set } => set.contains_point(x),
            Self::Periodic {
                period,
                pattern,
                lo,
                hi,
            } => {
                if x < lo || x >= hi {
                    return false;
                }
                let whole = floor(&((x - lo) / period));
                pattern.contains_point(&(x - period * Rational::from_integer(whole)))
            }
        }
    }

    /// Period of the repetition, if any.
    #[must_use]
    pub fn period(&self) -> Option<&Rational> {
        match self {
            Self::Explicit { .. } => None,
            Self::Periodic { period, .. } => Some(period),
        }
    }
}

/// Cells `[τ + i·2^{−m}, τ + (i+1)·2^{−m})` meeting `[0, 1)`, cut at the
/// ends.
fn grid_cells_unit(m: i32, tau: &Rational) -> Result<Vec<(Rational, Rational)>> {
    let h = pow2(-i64::from(m));
    let first = floor(&(-tau / &h));
    let last = floor(&((Rational::one() - tau) / &h));
    let count = (&last - &first + BigInt::one())
        .to_u64()
        .unwrap_or(u64::MAX);
    if count > crate::tree::MAX_GRID_CELLS {
        return Err(Error::Resource(format!("{count} cells in [0, 1)")));
    }
    let mut out = Vec::new();
    let mut i = first;
    while i <= last {
        let a = tau + &h * Rational::from_integer(i.clone());
        let b = &a + &h;
        let (a, b) = (a.max(Rational::zero()), b.min(Rational::one()));
        if a < b {
            out.push((a, b));
        }
        i += 1;
    }
    Ok(out)
}

/// Cells of a partition inside `[0, 1)`.
fn unit_cells(p: &Partition) -> Result<Vec<(Rational, Rational)>> {
    match &p.kind {
        PartitionKind::Grid { m, tau } => grid_cells_unit(*m, tau),
        PartitionKind::Explicit { breakpoints } => {
            let mut pts = vec![Rational::zero()];
            pts.extend(
                breakpoints
                    .iter()
                    .filter(|x| x.is_positive() && **x < Rational::one())
                    .cloned(),
            );
            pts.push(Rational::one());
            Ok(pts
                .windows(2)
                .map(|w| (w[0].clone(), w[1].clone()))
                .collect())
        }
    }
}

/// Largest cell length of a partition restricted to `[0, 1)`.
fn unit_mesh(p: &Partition) -> Result<Rational> {
    match &p.kind {
        PartitionKind::Grid { m, .. } => Ok(pow2(-i64::from(*m)).min(Rational::one())),
        PartitionKind::Explicit { .. } => Ok(unit_cells(p)?
            .into_iter()
            .map(|(a, b)| b - a)
            .max()
            .unwrap_or_default()),
    }
}

/// `E_k` with its cell partition and per-cell densities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EkSet {
    pub k: u32,
    pub set: MeasSet,
    /// Cells `𝒟_{kl−ν₀}` of `[0, 1)`, each holding one support of `Ψ̄_{k,j}`.
    pub cells: Partition,
    #[serde(with = "crate::json::rational")]
    pub min_density: Rational,
    #[serde(with = "crate::json::rational")]
    pub max_density: Rational,
    pub uniform: bool,
}

/// Levels up to this scale are also computed from the full sum.
const EXPLICIT_SCALE: i64 = 16;

/// `E_k = {Σ_j |Ψ̄_{k,j}| > λ2^{kl/2}} ∩ [0, 1)`.
pub fn e_k_sets(sys: &WaveletSystem, k: u32, p: &TruncationParams) -> Result<EkSet> {
    g_k(k, p)?;
    let n = subsystem_scale(k, p);
    let period = pow2(i64::from(p.nu0) - n);
    let (zero, one) = (Rational::zero(), Rational::one());
    let cells = Partition::grid(
        i32::try_from(n - i64::from(p.nu0)).map_err(|_| Error::Range("scale".into()))?,
        zero.clone(),
    )
    .with_window(zero.clone(), one.clone())?;
    let (first, _) = subsystem_psi(sys, k, 1, p)?.split_threshold(&p.lambda);
    let pattern = first.set_above(&p.lambda);
    let fits = first
        .support()
        .hull()
        .map_or(true, |(a, b)| a >= zero && b <= period);
    let set = if fits {
        MeasSet::periodic(period.clone(), pattern, zero.clone(), one.clone())?
    } else if n <= EXPLICIT_SCALE {
        let (up, _) = level_abs_sums(sys, k, p)?;
        MeasSet::Explicit {
            set: up.set_above(&p.lambda).clip(&zero, &one),
        }
    } else {
        return Err(Error::pre(format!(
            "level {k}: supports overlap their cells and the scale is too fine to sum explicitly"
        )));
    };
    let densities = level_densities(&set, &cells)?;
    let min_density = densities.iter().min().cloned().unwrap_or_default();
    let max_density = densities.iter().max().cloned().unwrap_or_default();
    Ok(EkSet {
        k,
        uniform: min_density == max_density,
        set,
        cells,
        min_density,
        max_density,
    })
}

/// `|E ∩ F|/|F|` over the cells `F` of a partition of `[0, 1)`. Periodic
/// sets on grids use one representative per residue class.
fn level_densities(set: &MeasSet, cells: &Partition) -> Result<Vec<Rational>> {
    if let (Some(period), PartitionKind::Grid { m, tau }) = (set.period(), &cells.kind) {
        let h = pow2(-i64::from(*m));
        if tau.is_zero() {
            if let MeasSet::Periodic { lo, hi, .. } = set {
                if lo.is_zero() && hi.is_one() {
                    let ratio = period / &h;
                    if ratio.is_integer() || ratio.recip().is_integer() {
                        // cells repeat with period lcm(h, period)
                        let classes = ratio.numer().to_u64().unwrap_or(1).max(1);
                        let total = h.recip().to_integer().to_u64().unwrap_or(u64::MAX);
                        let reps = classes.min(total);
                        return Ok((0..reps)
                            .map(|i| {
                                let a = &h * int(i as i64);
                                let b = &a + &h;
                                set.measure_in(&a, &b) / &h
                            })
                            .collect());
                    }
                }
            }
        }
    }
    Ok(unit_cells(cells)?
        .into_iter()
        .map(|(a, b)| {
            let len = &b - &a;
            set.measure_in(&a, &b) / len
        })
        .collect())
}

/// One level of the density-divergence check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct L13Level {
    pub partition: Partition,
    pub set: MeasSet,
    #[serde(with = "crate::json::rational")]
    pub a: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct L13Row {
    pub k: u32,
    /// `Σ_{i≤k} a_i`.
    #[serde(with = "crate::json::rational")]
    pub a_sum: Rational,
    /// Cell averages of `Σ_{i≤k} a_i 1_{E_i}` over dyadic cells.
    #[serde(with = "crate::json::rational")]
    pub min: Rational,
    #[serde(with = "crate::json::rational")]
    pub median: Rational,
    #[serde(with = "crate::json::rational")]
    pub max: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdRow {
    #[serde(with = "crate::json::rational")]
    pub threshold: Rational,
    /// First `K` whose smallest cell average exceeds the threshold.
    pub first_k: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct L13Report {
    /// Smallest density over all levels and cells.
    #[serde(with = "crate::json::rational")]
    pub min_density: Rational,
    pub rows: Vec<L13Row>,
    pub thresholds: Vec<ThresholdRow>,
    /// Every cell's average is nondecreasing in `K`.
    pub monotone: bool,
    /// Last mesh is below the first.
    pub mesh_decreases: bool,
}

/// Checks `|E_k ∩ F| > c|F|` on every cell and tabulates the growth of
/// `Σ a_k 1_{E_k}` averaged over the dyadic cells of depth `grid_depth`.
pub fn l13_divergence_check(
    levels: &[L13Level],
    c: &Rational,
    grid_depth: u32,
    thresholds: &[Rational],
) -> Result<L13Report> {
    if levels.is_empty() {
        return Err(Error::pre("no levels"));
    }
    if !c.is_positive() || *c >= Rational::one() {
        return Err(Error::pre("density constant must lie in (0, 1)"));
    }
    if grid_depth > 20 {
        return Err(Error::pre("grid depth above 20"));
    }
    if levels.iter().any(|l| !l.a.is_positive()) {
        return Err(Error::pre("coefficients must be positive"));
    }
    let meshes = levels
        .iter()
        .map(|l| unit_mesh(&l.partition))
        .collect::<Result<Vec<_>>>()?;
    if meshes.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::pre("partition mesh must not grow"));
    }
    let mesh_decreases = meshes.len() > 1 && meshes[meshes.len() - 1] < meshes[0];
    let mut min_density: Option<Rational> = None;
    for (i, l) in levels.iter().enumerate() {
        let dens = level_densities(&l.set, &l.partition)?;
        if let Some(pos) = dens.iter().position(|d| d <= c) {
            let cell = unit_cells(&l.partition)
                .ok()
                .and_then(|cells| cells.get(pos).cloned())
                .map(|(a, b)| format!("[{a}, {b})"))
                .unwrap_or_else(|| format!("#{pos}"));
            return Err(Error::pre(format!(
                "density |E_k ∩ F| > c|F| fails at k = {}, F = {cell}",
                i + 1
            )));
        }
        let m = dens.into_iter().min().unwrap_or_default();
        min_density = Some(min_density.map_or(m.clone(), |d| d.min(m)));
    }
    let cells = 1u64 << grid_depth;
    let h = pow2(-i64::from(grid_depth));
    let per_level: Vec<Vec<Rational>> = levels
        .par_iter()
        .map(|l| {
            (0..cells)
                .map(|i| {
                    let a = &h * int(i as i64);
                    let b = &a + &h;
                    &l.a * l.set.measure_in(&a, &b) / &h
                })
                .collect()
        })
        .collect();
    let mut acc = vec![Rational::zero(); cells as usize];
    let mut a_sum = Rational::zero();
    let mut rows = Vec::new();
    let mut monotone = true;
    for (i, contrib) in per_level.iter().enumerate() {
        a_sum += &levels[i].a;
        for (s, v) in acc.iter_mut().zip(contrib) {
            monotone &= !v.is_negative();
            *s += v;
        }
        let mut sorted = acc.clone();
        sorted.sort();
        rows.push(L13Row {
            k: i as u32 + 1,
            a_sum: a_sum.clone(),
            min: sorted[0].clone(),
            median: sorted[(sorted.len() - 1) / 2].clone(),
            max: sorted[sorted.len() - 1].clone(),
        });
    }
    let thresholds = thresholds
        .iter()
        .map(|t| ThresholdRow {
            threshold: t.clone(),
            first_k: rows.iter().find(|r| r.min > *t).map(|r| r.k),
        })
        .collect();
    Ok(L13Report {
        min_density: min_density.unwrap_or_default(),
        rows,
        thresholds,
        monotone,
        mesh_decreases,
    })
}

/// `E_k` for `k = 1..=K` with `a_k = 1/(w̄(k) q_k)`.
pub fn l13_pipeline_levels(
    sys: &WaveletSystem,
    w: &Multiplier,
    big_k: u32,
    p: &TruncationParams,
) -> Result<Vec<L13Level>> {
    let field = t4_coefficients(w, big_k, p)?;
    field
        .blocks
        .iter()
        .map(|b| {
            let e = e_k_sets(sys, b.k, p)?;
            Ok(L13Level {
                partition: e.cells,
                set: e.set,
                a: b.y_factor(),
            })
        })
        .collect()
}

/// Ordering used for the rearranged partial sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationMode {
    Adversarial,
    /// Level by level, `j` increasing.
    Identity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct T4Row {
    pub block_s: u32,
    #[serde(with = "crate::json::rational")]
    pub threshold: Rational,
    /// `|{x ∈ [0,1): R_s(x) > s/8}|`.
    #[serde(with = "crate::json::rational")]
    pub fraction: Rational,
    #[serde(with = "crate::json::rational")]
    pub min_cell_max: Rational,
    #[serde(with = "crate::json::rational")]
    pub median_cell_max: Rational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct T4Report {
    pub params: TruncationParams,
    pub multiplier: Multiplier,
    pub mode: PermutationMode,
    pub s_max: u32,
    pub grid_depth: u32,
    pub nodes: usize,
    pub rows: Vec<T4Row>,
    /// Same statistics under the identity ordering.
    pub control: Vec<T4Row>,
    #[serde(with = "crate::json::rational")]
    pub c0: Rational,
    #[serde(with = "crate::json::rational")]
    pub slack: Rational,
    /// `fraction ≥ c₀` for every block.
    pub fractions_ok: bool,
    /// `fraction_{s+1} ≤ fraction_s + slack`.
    pub monotone_ok: bool,
    /// Every threshold `s/8` is exceeded somewhere.
    pub thresholds_crossed: bool,
}

impl T4Report {
    /// Assertions hold (always true for the identity control).
    #[must_use]
    pub fn ok(&self) -> bool {
        self.mode == PermutationMode::Identity
            || (self.fractions_ok && self.monotone_ok && self.thresholds_crossed)
    }
}

/// Upper limit on `S_max·l`.
pub const T4_MAX_SCALE: i64 = 20;

struct Entry {
    x0: Rational,
    x1: Rational,
    y0: Rational,
    y1: Rational,
    node: usize,
    level: u32,
}

impl Entry {
    fn at(&self, x: &Rational) -> Rational {
        if self.x1 == self.x0 {
            return self.y0.clone();
        }
        &self.y0 + (&self.y1 - &self.y0) * (x - &self.x0) / (&self.x1 - &self.x0)
    }
}

/// Measure of `{x ∈ [a, b): g(x) > t}` pieces for linear `g`.
fn above(
    a: &Rational,
    b: &Rational,
    g0: &Rational,
    g1: &Rational,
    t: &Rational,
    out: &mut Vec<(Rational, Rational)>,
) {
    match (g0 > t, g1 > t) {
        (true, true) => out.push((a.clone(), b.clone())),
        (false, false) => {}
        (true, false) => out.push((a.clone(), a + (b - a) * (g0 - t) / (g0 - g1))),
        (false, true) => out.push((a + (b - a) * (t - g0) / (g1 - g0), b.clone())),
    }
}

fn union_measure(mut v: Vec<(Rational, Rational)>) -> Rational {
    v.sort();
    let mut total = Rational::zero();
    let mut cur: Option<(Rational, Rational)> = None;
    for (a, b) in v {
        match &mut cur {
            Some((_, e)) if a <= *e => {
                if b > *e {
                    *e = b;
                }
            }
            _ => {
                if let Some((s, e)) = cur.take() {
                    total += e - s;
                }
                cur = Some((a, b));
            }
        }
    }
    if let Some((s, e)) = cur {
        total += e - s;
    }
    total
}

/// Per (order, stage): exceedance measure and per-cell maxima.
struct Tally {
    measure: Vec<Vec<Rational>>,
    cell_max: Vec<Vec<Vec<Rational>>>,
}

fn sweep_chunk(
    entries: &[Entry],
    points: &[Rational],
    ranks: &[Vec<usize>],
    s_max: u32,
    grid_depth: u32,
    cell_offset: usize,
    cells: usize,
) -> Tally {
    let stages = s_max as usize;
    let mut tally = Tally {
        measure: vec![vec![Rational::zero(); stages]; ranks.len()],
        cell_max: vec![vec![vec![Rational::zero(); cells]; stages]; ranks.len()],
    };
    let thresholds: Vec<Rational> = (1..=s_max)
        .map(|s| Rational::new(i64::from(s).into(), 8.into()))
        .collect();
    let scale = pow2(i64::from(grid_depth));
    let mut next = 0usize;
    let mut active: Vec<usize> = Vec::new();
    let mut spans = Vec::new();
    for w in points.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        active.retain(|&e| entries[e].x1 > *a);
        while next < entries.len() && entries[next].x0 <= *a {
            if entries[next].x1 > *a {
                active.push(next);
            }
            next += 1;
        }
        if active.is_empty() {
            continue;
        }
        let vals: Vec<(usize, u32, Rational, Rational)> = active
            .iter()
            .map(|&e| {
                let en = &entries[e];
                (en.node, en.level, en.at(a), en.at(b))
            })
            .collect();
        let cell = floor(&(a * &scale)).to_usize().unwrap_or(0) - cell_offset;
        for (o, rank) in ranks.iter().enumerate() {
            let mut sorted: Vec<&(usize, u32, Rational, Rational)> = vals.iter().collect();
            sorted.sort_by_key(|v| rank[v.0]);
            for (si, t) in thresholds.iter().enumerate() {
                let s = si as u32 + 1;
                spans.clear();
                let (mut p0, mut p1) = (Rational::zero(), Rational::zero());
                let mut best = Rational::zero();
                for v in sorted.iter().filter(|v| v.1 <= s) {
                    p0 += &v.2;
                    p1 += &v.3;
                    above(a, b, &p0, &p1, t, &mut spans);
                    let (n0, n1) = (-&p0, -&p1);
                    above(a, b, &n0, &n1, t, &mut spans);
                    let m = p0.abs().max(p1.abs());
                    if m > best {
                        best = m;
                    }
                }
                if !spans.is_empty() {
                    tally.measure[o][si] += union_measure(std::mem::take(&mut spans));
                }
                let slot = &mut tally.cell_max[o][si][cell];
                if best > *slot {
                    *slot = best;
                }
            }
        }
    }
    tally
}

/// Exceedance fractions and cell maxima of the running maxima of the true
/// partial sums, stage `s` covering levels `1..=s`.
fn t4_rows(
    sys: &WaveletSystem,
    field: &CoefficientField,
    s_max: u32,
    p: &TruncationParams,
    grid_depth: u32,
    orders: &[Vec<usize>],
    labels: &[(usize, usize)],
) -> Result<Vec<Vec<T4Row>>> {
    let n = labels.len();
    let ranks: Vec<Vec<usize>> = orders
        .iter()
        .map(|ord| {
            let mut r = vec![0; n];
            for (pos, &i) in ord.iter().enumerate() {
                r[i - 1] = pos;
            }
            r
        })
        .collect();
    let (zero, one) = (Rational::zero(), Rational::one());
    let mut entries = Vec::new();
    for (node, &(lv, j)) in labels.iter().enumerate() {
        let k = lv as u32 + 1;
        let coef = field.blocks[lv].y_factor();
        let f = subsystem_psi(sys, k, j as i64 + 1, p)?;
        for pc in f.pieces() {
            if pc.is_zero() || pc.x1 <= zero || pc.x0 >= one {
                continue;
            }
            let q = pc.restrict(
                &pc.x0.clone().max(zero.clone()),
                &pc.x1.clone().min(one.clone()),
            );
            entries.push(Entry {
                y0: &q.y0 * &coef,
                y1: &q.y1 * &coef,
                x0: q.x0,
                x1: q.x1,
                node,
                level: k,
            });
        }
    }
    entries.sort_by(|a, b| a.x0.cmp(&b.x0));
    let cells = 1usize << grid_depth;
    let h = pow2(-i64::from(grid_depth));
    let mut pts: Vec<Rational> = (0..=cells).map(|i| &h * int(i as i64)).collect();
    for e in &entries {
        pts.push(e.x0.clone());
        pts.push(e.x1.clone());
    }
    pts.sort();
    pts.dedup();
    // independent chunks of whole grid cells
    let chunks = cells.min(64);
    let per = cells / chunks;
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = &h * int((c * per) as i64);
            let hi = &h * int(((c + 1) * per) as i64);
            let s = pts.partition_point(|x| *x < lo);
            let e = pts.partition_point(|x| *x <= hi);
            let local: Vec<&Entry> = entries
                .iter()
                .filter(|en| en.x0 < hi && en.x1 > lo)
                .collect();
            let owned: Vec<Entry> = local
                .into_iter()
                .map(|en| Entry {
                    x0: en.x0.clone(),
                    x1: en.x1.clone(),
                    y0: en.y0.clone(),
                    y1: en.y1.clone(),
                    node: en.node,
                    level: en.level,
                })
                .collect();
            sweep_chunk(&owned, &pts[s..e], &ranks, s_max, grid_depth, c * per, per)
        })
        .collect();
    let mut out = Vec::new();
    for o in 0..orders.len() {
        let mut rows = Vec::new();
        for si in 0..s_max as usize {
            let fraction = tallies
                .iter()
                .fold(Rational::zero(), |acc, t| acc + &t.measure[o][si]);
            let mut maxima: Vec<Rational> = tallies
                .iter()
                .flat_map(|t| t.cell_max[o][si].iter().cloned())
                .collect();
            maxima.sort();
            rows.push(T4Row {
                block_s: si as u32 + 1,
                threshold: Rational::new((si as i64 + 1).into(), 8.into()),
                fraction,
                min_cell_max: maxima[0].clone(),
                median_cell_max: maxima[(maxima.len() - 1) / 2].clone(),
            });
        }
        out.push(rows);
    }
    Ok(out)
}

/// Raw fraction tables under both orderings, before any calibration.
pub fn t4_measure(
    sys: &WaveletSystem,
    w: &Multiplier,
    s_max: u32,
    p: &TruncationParams,
    grid_depth: u32,
) -> Result<(Vec<T4Row>, Vec<T4Row>, usize)> {
    if s_max == 0 || i64::from(s_max) * i64::from(p.l) > T4_MAX_SCALE {
        return Err(Error::pre(format!(
            "need 1 ≤ S_max and S_max·l ≤ {T4_MAX_SCALE}"
        )));
    }
    if grid_depth > 20 {
        return Err(Error::pre("grid depth above 20"));
    }
    let field = t4_coefficients(w, s_max, p)?;
    let tree = psi_tree(sys, 1..=s_max, p)?;
    let adv = adversarial_permutation(&tree.system)?;
    let id: Vec<usize> = (1..=tree.labels.len()).collect();
    let mut tables = t4_rows(sys, &field, s_max, p, grid_depth, &[adv, id], &tree.labels)?;
    let control = tables.pop().unwrap_or_default();
    let rows = tables.pop().unwrap_or_default();
    Ok((rows, control, tree.labels.len()))
}

/// Rearranged-divergence experiment with the calibrated `c₀` and slack.
pub fn t4_rearranged_divergence_demo(
    sys: &WaveletSystem,
    w: &Multiplier,
    s_max: u32,
    grid_depth: u32,
    cal: Option<&Calibration>,
    mode: PermutationMode,
) -> Result<T4Report> {
    let cal = cal.ok_or_else(|| {
        Error::Calibration("no calibration file; run calibrate-lambda to create one".into())
    })?;
    cal.check_mother(&sys.mother)?;
    w.validate()?;
    if !w.reciprocal_sum_diverges() {
        return Err(Error::pre(
            "Σ 1/w converges: wrong regime for the divergence construction",
        ));
    }
    let p = cal.params()?;
    let (adv, control, nodes) = t4_measure(sys, w, s_max, &p, grid_depth)?;
    let rows = match mode {
        PermutationMode::Adversarial => adv,
        PermutationMode::Identity => control.clone(),
    };
    let fractions_ok = rows.iter().all(|r| r.fraction >= cal.c0);
    let monotone_ok = rows
        .windows(2)
        .all(|w| w[1].fraction <= &w[0].fraction + &cal.t4_slack);
    let thresholds_crossed = rows.iter().all(|r| r.fraction.is_positive());
    Ok(T4Report {
        params: p,
        multiplier: w.clone(),
        mode,
        s_max,
        grid_depth,
        nodes,
        rows,
        control,
        c0: cal.c0.clone(),
        slack: cal.t4_slack.clone(),
        fractions_ok,
        monotone_ok,
        thresholds_crossed,
    })
}

/// `2^{−i}` with `i ≥ 0` maximal such that the value is `≤ x` (`x > 0`).
pub(crate) fn pow2_floor(x: &Rational) -> Rational {
    let mut v = Rational::one();
    while v > *x {
        v = shl(&v, -1);
    }
    v
}

/// Smallest `2^{−i} ≥ x`, at least `2^{−10}`.
pub(crate) fn pow2_ceil_slack(x: &Rational) -> Rational {
    let mut v = pow2(-10);
    while v < *x {
        v = shl(&v, 1);
    }
    v
}
