//! Tree systems, partitions and the rearrangement that turns a tree system
//! into a series whose partial sums dominate `½Σ|f_k|`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::PwLinear;
use crate::num::{ceil, floor, int, shl, Quad2, Rational};
use crate::pointset::PointSet;
use crate::step::StepFunction;

/// Most cells a grid partition may enumerate inside its window.
pub const MAX_GRID_CELLS: u64 = 1 << 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    /// `τ + 𝒟_m`: cells `[τ + i·2^{−m}, τ + (i+1)·2^{−m})`.
    Grid {
        m: i32,
        #[serde(with = "crate::json::rational")]
        tau: Rational,
    },
    /// Cells between consecutive breakpoints, plus the two unbounded ends.
    Explicit {
        #[serde(with = "crate::json::rational_vec")]
        breakpoints: Vec<Rational>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub kind: PartitionKind,
    #[serde(with = "crate::json::rational_pair")]
    pub window: (Rational, Rational),
}

fn default_window() -> (Rational, Rational) {
    (int(-2), int(2))
}

impl Partition {
    #[must_use]
    pub fn grid(m: i32, tau: Rational) -> Self {
        Self {
            kind: PartitionKind::Grid { m, tau },
            window: default_window(),
        }
    }

    pub fn explicit(breakpoints: Vec<Rational>) -> Result<Self> {
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("partition breakpoints must increase"));
        }
        Ok(Self {
            kind: PartitionKind::Explicit { breakpoints },
            window: default_window(),
        })
    }

    pub fn with_window(mut self, lo: Rational, hi: Rational) -> Result<Self> {
        if lo >= hi {
            return Err(Error::invalid("empty window"));
        }
        self.window = (lo, hi);
        Ok(self)
    }

    /// Index of the cell containing `x`.
    #[must_use]
    pub fn cell_index_of(&self, x: &Rational) -> BigInt {
        match &self.kind {
            PartitionKind::Grid { m, tau } => floor(&shl(&(x - tau), i64::from(*m))),
            PartitionKind::Explicit { breakpoints } => {
                BigInt::from(breakpoints.partition_point(|b| b <= x))
            }
        }
    }

    /// Index of the cell containing the points just left of `x`.
    #[must_use]
    pub fn cell_index_left(&self, x: &Rational) -> BigInt {
        match &self.kind {
            PartitionKind::Grid { m, tau } => ceil(&shl(&(x - tau), i64::from(*m))) - 1,
            PartitionKind::Explicit { breakpoints } => {
                BigInt::from(breakpoints.partition_point(|b| b < x))
            }
        }
    }

    /// Cell `i`; unbounded end cells of an explicit partition are cut at
    /// the window.
    #[must_use]
    pub fn cell(&self, i: &BigInt) -> (Rational, Rational) {
        match &self.kind {
            PartitionKind::Grid { m, tau } => {
                let a = shl(&Rational::from(i.clone()), -i64::from(*m)) + tau;
                let b = shl(&Rational::from(i + 1), -i64::from(*m)) + tau;
                (a, b)
            }
            PartitionKind::Explicit { breakpoints } => {
                let k = usize::try_from(i).unwrap_or(0).min(breakpoints.len());
                let a = if k == 0 {
                    self.window.0.clone().min(
                        breakpoints
                            .first()
                            .cloned()
                            .unwrap_or_else(|| self.window.0.clone()),
                    )
                } else {
                    breakpoints[k - 1].clone()
                };
                let b = if k == breakpoints.len() {
                    self.window.1.clone().max(
                        breakpoints
                            .last()
                            .cloned()
                            .unwrap_or_else(|| self.window.1.clone()),
                    )
                } else {
                    breakpoints[k].clone()
                };
                (a, b)
            }
        }
    }

    #[must_use]
    pub fn is_breakpoint(&self, x: &Rational) -> bool {
        match &self.kind {
            PartitionKind::Grid { m, tau } => shl(&(x - tau), i64::from(*m)).is_integer(),
            PartitionKind::Explicit { breakpoints } => breakpoints.binary_search(x).is_ok(),
        }
    }

    /// Breakpoints strictly inside the window.
    pub fn breakpoints_in_window(&self) -> Result<Vec<Rational>> {
        let (lo, hi) = &self.window;
        match &self.kind {
            PartitionKind::Grid { m, .. } => {
                let first = self.cell_index_of(lo) + 1;
                let last = self.cell_index_left(hi);
                let count = if last >= first {
                    &last - &first + 1
                } else {
                    BigInt::zero()
                };
                if count > BigInt::from(MAX_GRID_CELLS) {
                    return Err(Error::Resource(format!(
                        "grid at scale {m} has {count} breakpoints in the window"
                    )));
                }
                let mut v = Vec::new();
                let mut i = first;
                while i <= last {
                    v.push(self.cell(&i).0);
                    i += 1;
                }
                Ok(v)
            }
            PartitionKind::Explicit { breakpoints } => Ok(breakpoints
                .iter()
                .filter(|b| *b > lo && *b < hi)
                .cloned()
                .collect()),
        }
    }
}

/// `ℱ ≺ 𝒞`: every cell of `f` is a union of cells of `c`.
pub fn refines(f: &Partition, c: &Partition) -> Result<bool> {
    if f.window != c.window {
        return Err(Error::pre("partitions live on different windows"));
    }
    if let (PartitionKind::Grid { m: mf, tau: tf }, PartitionKind::Grid { m: mc, tau: tc }) =
        (&f.kind, &c.kind)
    {
        return Ok(mf <= mc && shl(&(tf - tc), i64::from(*mc)).is_integer());
    }
    Ok(f.breakpoints_in_window()?
        .iter()
        .all(|b| c.is_breakpoint(b)))
}

/// A node function: exact step function or piecewise-linear wavelet piece.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeFunction {
    Step(StepFunction),
    Linear(PwLinear),
}

impl From<StepFunction> for TreeFunction {
    fn from(f: StepFunction) -> Self {
        Self::Step(f)
    }
}

impl From<PwLinear> for TreeFunction {
    fn from(f: PwLinear) -> Self {
        Self::Linear(f)
    }
}

impl TreeFunction {
    #[must_use]
    pub fn eval(&self, x: &Rational) -> Quad2 {
        match self {
            Self::Step(f) => f.eval(x),
            Self::Linear(f) => f.eval(x),
        }
    }

    /// Maximal runs of constant nonzero sign.
    #[must_use]
    pub fn sign_runs(&self) -> Vec<(Rational, Rational, Ordering)> {
        match self {
            Self::Linear(f) => f.sign_runs(),
            Self::Step(f) => {
                let mut runs: Vec<(Rational, Rational, Ordering)> = Vec::new();
                for (a, b, v) in f.pieces() {
                    let s = v.sign();
                    if s == Ordering::Equal {
                        continue;
                    }
                    match runs.last_mut() {
                        Some(r) if r.1 == *a && r.2 == s => r.1 = b.clone(),
                        _ => runs.push((a.clone(), b.clone(), s)),
                    }
                }
                runs
            }
        }
    }

    #[must_use]
    pub fn support(&self) -> PointSet {
        match self {
            Self::Step(f) => f.support(),
            Self::Linear(f) => f.support(),
        }
    }

    #[must_use]
    pub fn positive_set(&self) -> PointSet {
        match self {
            Self::Step(f) => f.positive_set(),
            Self::Linear(f) => f.positive_set(),
        }
    }

    #[must_use]
    pub fn negative_set(&self) -> PointSet {
        match self {
            Self::Step(f) => f.negative_set(),
            Self::Linear(f) => f.negative_set(),
        }
    }

    /// Points where the function may change formula.
    #[must_use]
    pub fn breakpoints(&self) -> Vec<Rational> {
        match self {
            Self::Step(f) => f.breakpoints().to_vec(),
            Self::Linear(f) => f.breakpoints(),
        }
    }

    #[must_use]
    pub fn is_linear(&self) -> bool {
        matches!(self, Self::Linear(_))
    }
}

fn runs_sign_preserving(c: &Partition, runs: &[(Rational, Rational, Ordering)]) -> bool {
    runs.windows(2)
        .filter(|w| w[0].2 != w[1].2)
        .all(|w| c.cell_index_left(&w[0].1) < c.cell_index_of(&w[1].0))
}

/// On each cell of `c`, `f ≥ 0` throughout or `f ≤ 0` throughout.
#[must_use]
pub fn sign_preserving(c: &Partition, f: &TreeFunction) -> bool {
    runs_sign_preserving(c, &f.sign_runs())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub f: TreeFunction,
    pub plus: PointSet,
    pub minus: PointSet,
}

impl TreeNode {
    #[must_use]
    pub fn u(&self) -> PointSet {
        self.plus.union(&self.minus)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeSystem {
    pub nodes: Vec<TreeNode>,
}

/// First failed clause; node indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "clause", rename_all = "snake_case")]
pub enum TreeViolation {
    SignSetsOverlap { node: usize },
    PositiveOutsidePlus { node: usize },
    NegativeOutsideMinus { node: usize },
    Trichotomy { k: usize, n: usize },
}

/// Stabbing queries over half-open intervals tagged with an id.
struct StabIndex {
    items: Vec<(Rational, Rational, usize)>,
    max_hi: Vec<Rational>,
}

impl StabIndex {
    fn new(mut items: Vec<(Rational, Rational, usize)>) -> Self {
        items.sort_by(|a, b| a.0.cmp(&b.0).then(a.2.cmp(&b.2)));
        let n = items.len().max(1);
        let mut max_hi = vec![Rational::zero(); 2 * n.next_power_of_two()];
        let size = max_hi.len() / 2;
        for (i, it) in items.iter().enumerate() {
            max_hi[size + i] = it.1.clone();
        }
        for i in (1..size).rev() {
            max_hi[i] = max_hi[2 * i].clone().max(max_hi[2 * i + 1].clone());
        }
        if items.is_empty() {
            max_hi.clear();
        }
        Self { items, max_hi }
    }

    /// Ids of intervals containing `p`.
    fn stab(&self, p: &Rational, out: &mut Vec<usize>) {
        if self.items.is_empty() {
            return;
        }
        let prefix = self.items.partition_point(|it| it.0 <= *p);
        if prefix == 0 {
            return;
        }
        let size = self.max_hi.len() / 2;
        self.descend(1, 0, size, prefix, p, out);
    }

    fn descend(
        &self,
        node: usize,
        lo: usize,
        hi: usize,
        prefix: usize,
        p: &Rational,
        out: &mut Vec<usize>,
    ) {
        if lo >= prefix || self.max_hi[node] <= *p {
            return;
        }
        if hi - lo == 1 {
            out.push(self.items[lo].2);
            return;
        }
        let mid = (lo + hi) / 2;
        self.descend(2 * node, lo, mid, prefix, p, out);
        self.descend(2 * node + 1, mid, hi, prefix, p, out);
    }
}

/// Pairs `(k, n)`, `k < n`, whose sets have intersecting hulls.
fn hull_pairs(sets: &[PointSet]) -> Vec<(usize, usize)> {
    let mut hulls: Vec<(Rational, Rational, usize)> = sets
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.hull().map(|(a, b)| (a, b, i)))
        .collect();
    hulls.sort_by(|a, b| a.0.cmp(&b.0));
    let mut pairs = Vec::new();
    for i in 0..hulls.len() {
        for j in i + 1..hulls.len() {
            if hulls[j].0 >= hulls[i].1 {
                break;
            }
            let (a, b) = (hulls[i].2, hulls[j].2);
            pairs.push((a.min(b), a.max(b)));
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Checks both tree-system axioms in the given order.
#[must_use]
pub fn verify_tree_axioms(sys: &TreeSystem) -> Option<TreeViolation> {
    for (i, node) in sys.nodes.iter().enumerate() {
        if node.plus.intersects(&node.minus) {
            return Some(TreeViolation::SignSetsOverlap { node: i + 1 });
        }
        if !node.plus.contains_set(&node.f.positive_set()) {
            return Some(TreeViolation::PositiveOutsidePlus { node: i + 1 });
        }
        if !node.minus.contains_set(&node.f.negative_set()) {
            return Some(TreeViolation::NegativeOutsideMinus { node: i + 1 });
        }
    }
    let us: Vec<PointSet> = sys.nodes.iter().map(TreeNode::u).collect();
    for (k, n) in hull_pairs(&us) {
        let ok = sys.nodes[k].plus.contains_set(&us[n])
            || sys.nodes[k].minus.contains_set(&us[n])
            || !us[n].intersects(&us[k]);
        if !ok {
            return Some(TreeViolation::Trichotomy { k: k + 1, n: n + 1 });
        }
    }
    None
}

/// One level of input to [`build_tree`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeLevel {
    pub f_partition: Partition,
    pub c_partition: Partition,
    pub funcs: Vec<TreeFunction>,
}

/// Tree system with the `(level, j)` label of every node (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuiltTree {
    pub system: TreeSystem,
    pub labels: Vec<(usize, usize)>,
}

fn run_cells(c: &Partition, a: &Rational, b: &Rational) -> (Rational, Rational) {
    let first = c.cell(&c.cell_index_of(a)).0;
    let last = c.cell(&c.cell_index_left(b)).1;
    (first, last)
}

/// Builds the tree system of nested partitions `ℱ_n ≺ 𝒞_n ≺ ℱ_{n+1}`:
/// `U^±` is the union of `𝒞_n` cells where the function is positive or
/// negative somewhere. Nodes are ordered level by level.
pub fn build_tree(levels: &[TreeLevel]) -> Result<BuiltTree> {
    for (n, lv) in levels.iter().enumerate() {
        if !refines(&lv.f_partition, &lv.c_partition)? {
            return Err(Error::pre(format!("level {n}: ℱ does not refine into 𝒞")));
        }
        if let Some(next) = levels.get(n + 1) {
            if !refines(&lv.c_partition, &next.f_partition)? {
                return Err(Error::pre(format!(
                    "level {n}: 𝒞 does not refine into the next ℱ"
                )));
            }
        }
    }
    let mut system = TreeSystem::default();
    let mut labels = Vec::new();
    for (n, lv) in levels.iter().enumerate() {
        let mut used = std::collections::BTreeSet::new();
        for (j, f) in lv.funcs.iter().enumerate() {
            let runs = f.sign_runs();
            if let (Some(first), Some(last)) = (runs.first(), runs.last()) {
                let cell = lv.f_partition.cell_index_of(&first.0);
                if lv.f_partition.cell_index_left(&last.1) != cell {
                    return Err(Error::pre(format!(
                        "level {n}, function {j}: support is not inside one cell of ℱ"
                    )));
                }
                if !used.insert(cell) {
                    return Err(Error::pre(format!(
                        "level {n}, function {j}: cell of ℱ already used at this level"
                    )));
                }
            }
            if !runs_sign_preserving(&lv.c_partition, &runs) {
                return Err(Error::pre(format!(
                    "level {n}, function {j}: 𝒞 is not sign-preserving"
                )));
            }
            let mut plus = Vec::new();
            let mut minus = Vec::new();
            for (a, b, s) in &runs {
                let cells = run_cells(&lv.c_partition, a, b);
                if *s == Ordering::Greater {
                    plus.push(cells);
                } else {
                    minus.push(cells);
                }
            }
            system.nodes.push(TreeNode {
                f: f.clone(),
                plus: PointSet::from_sorted(plus),
                minus: PointSet::from_sorted(minus),
            });
            labels.push((n, j));
        }
    }
    if let Some(v) = verify_tree_axioms(&system) {
        return Err(Error::Violation(format!(
            "built system breaks the tree axioms: {v:?}"
        )));
    }
    Ok(BuiltTree { system, labels })
}

/// Ordering in which each node follows every earlier node whose `U^−`
/// contains it and precedes every earlier node whose `U^+` contains it.
/// Among legal slots the earliest is taken. Returns 1-based node indices
/// in series order.
pub fn adversarial_permutation(sys: &TreeSystem) -> Result<Vec<usize>> {
    if let Some(v) = verify_tree_axioms(sys) {
        return Err(Error::pre(format!("not a tree system: {v:?}")));
    }
    let n = sys.nodes.len();
    let us: Vec<PointSet> = sys.nodes.iter().map(TreeNode::u).collect();
    let index = StabIndex::new(
        us.iter()
            .enumerate()
            .flat_map(|(i, u)| {
                u.components()
                    .iter()
                    .map(move |(a, b)| (a.clone(), b.clone(), i))
            })
            .collect(),
    );
    const NONE: usize = usize::MAX;
    // anchor[i]: node that i is placed right after (NONE: the front)
    let mut anchor = vec![NONE; n];
    let mut next = vec![NONE; n];
    let mut head = NONE;
    let mut hits = Vec::new();
    for i in 0..n {
        let Some((p, _)) = us[i].components().first() else {
            next[i] = head;
            head = i;
            continue;
        };
        hits.clear();
        index.stab(p, &mut hits);
        let deepest = hits.iter().copied().filter(|&k| k < i).max();
        anchor[i] = match deepest {
            None => NONE,
            Some(k) if sys.nodes[k].minus.contains_set(&us[i]) => k,
            Some(k) => anchor[k],
        };
        if anchor[i] == NONE {
            next[i] = head;
            head = i;
        } else {
            let a = anchor[i];
            next[i] = next[a];
            next[a] = i;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut cur = head;
    while cur != NONE {
        order.push(cur + 1);
        cur = next[cur];
    }
    Ok(order)
}

fn positions(order: &[usize], n: usize) -> Result<Vec<usize>> {
    let mut pos = vec![usize::MAX; n];
    if order.len() != n {
        return Err(Error::pre(
            "permutation length differs from the system size",
        ));
    }
    for (p, &k) in order.iter().enumerate() {
        if k == 0 || k > n || pos[k - 1] != usize::MAX {
            return Err(Error::pre("not a permutation of 1..N"));
        }
        pos[k - 1] = p;
    }
    Ok(pos)
}

/// First pair `(k, n)`, `k < n`, breaking the ordering rule: `U_n ⊂ U_k^+`
/// needs `n` before `k`, `U_n ⊂ U_k^−` needs `n` after `k`.
pub fn check_permutation_order(
    sys: &TreeSystem,
    order: &[usize],
) -> Result<Option<(usize, usize)>> {
    let pos = positions(order, sys.nodes.len())?;
    let us: Vec<PointSet> = sys.nodes.iter().map(TreeNode::u).collect();
    for (k, n) in hull_pairs(&us) {
        if us[n].is_empty() {
            continue;
        }
        let bad = (sys.nodes[k].plus.contains_set(&us[n]) && pos[n] > pos[k])
            || (sys.nodes[k].minus.contains_set(&us[n]) && pos[n] < pos[k]);
        if bad {
            return Ok(Some((k + 1, n + 1)));
        }
    }
    Ok(None)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RearrangementReport {
    /// `max_{p≤q}|Σ_{p..q}| ≥ ½Σ|f|` at every evaluation point.
    pub half_ok: bool,
    /// `max_m|Σ_{1..m}| ≥ ¼Σ|f|` at every evaluation point.
    pub prefix_ok: bool,
    /// Smallest `max_{p≤q}|Σ| / Σ|f|` seen (display only).
    pub worst_ratio: f64,
    pub worst_prefix_ratio: f64,
    /// A point where the segment bound fails, if any.
    #[serde(with = "crate::json::rational_opt")]
    pub failure_at: Option<Rational>,
    pub points_checked: usize,
    /// True when some node is piecewise linear, so points are sampled.
    pub sampled: bool,
}

impl RearrangementReport {
    #[must_use]
    pub fn ok(&self) -> bool {
        self.half_ok && self.prefix_ok
    }
}

/// Evaluates both sides of the rearrangement bound on every piece of the
/// common refinement of all node functions (left endpoints; midpoints too
/// for linear nodes).
pub fn verify_rearrangement_bound(
    sys: &TreeSystem,
    order: &[usize],
) -> Result<RearrangementReport> {
    let n = sys.nodes.len();
    let pos = positions(order, n)?;
    let sampled = sys.nodes.iter().any(|x| x.f.is_linear());
    let mut pts: Vec<Rational> = sys.nodes.iter().flat_map(|x| x.f.breakpoints()).collect();
    pts.sort();
    pts.dedup();
    let index = StabIndex::new(
        sys.nodes
            .iter()
            .enumerate()
            .flat_map(|(i, x)| {
                x.f.support()
                    .components()
                    .iter()
                    .map(move |(a, b)| (a.clone(), b.clone(), i))
                    .collect::<Vec<_>>()
            })
            .collect(),
    );
    let mut report = RearrangementReport {
        half_ok: true,
        prefix_ok: true,
        worst_ratio: f64::INFINITY,
        worst_prefix_ratio: f64::INFINITY,
        failure_at: None,
        points_checked: 0,
        sampled,
    };
    let mut best: Option<(Quad2, Quad2)> = None;
    let mut best_prefix: Option<(Quad2, Quad2)> = None;
    let mut active = Vec::new();
    let two = Rational::from_integer(2.into());
    for w in pts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let mid = (a + b) / &two;
        active.clear();
        index.stab(&mid, &mut active);
        if active.is_empty() {
            continue;
        }
        active.sort_by_key(|&i| pos[i]);
        let samples: Vec<&Rational> = if sampled { vec![a, &mid] } else { vec![a] };
        for x in samples {
            report.points_checked += 1;
            let mut p = Quad2::zero();
            let (mut pmax, mut pmin) = (Quad2::zero(), Quad2::zero());
            let mut total = Quad2::zero();
            for &i in &active {
                let v = sys.nodes[i].f.eval(x);
                total += &v.abs();
                p += &v;
                if p > pmax {
                    pmax = p.clone();
                }
                if p < pmin {
                    pmin = p.clone();
                }
            }
            if total.is_zero() {
                continue;
            }
            let seg = &pmax - &pmin;
            let pre = pmax.clone().max(-pmin.clone());
            if seg.scale(&int(2)) < total {
                report.half_ok = false;
                if report.failure_at.is_none() {
                    report.failure_at = Some(x.clone());
                }
            }
            if pre.scale(&int(4)) < total {
                report.prefix_ok = false;
            }
            let worse = |cur: &Option<(Quad2, Quad2)>, num: &Quad2| match cur {
                None => true,
                Some((bn, bd)) => num * bd < bn * &total,
            };
            if worse(&best, &seg) {
                best = Some((seg.clone(), total.clone()));
            }
            if worse(&best_prefix, &pre) {
                best_prefix = Some((pre.clone(), total.clone()));
            }
        }
    }
    if let Some((a, b)) = best {
        report.worst_ratio = a.to_f64() / b.to_f64();
    }
    if let Some((a, b)) = best_prefix {
        report.worst_prefix_ratio = a.to_f64() / b.to_f64();
    }
    Ok(report)
}

/// Haar function `1_{left half} − 1_{right half}` on `[a, b)`.
pub fn haar_on(a: &Rational, b: &Rational) -> Result<StepFunction> {
    let mid = (a + b) / int(2);
    StepFunction::new(
        vec![a.clone(), mid, b.clone()],
        vec![Quad2::one(), -Quad2::one()],
    )
}

/// Levels `0..=depth` of the Haar system on `[0,1)` with `ℱ_n = 𝒟_n`,
/// `𝒞_n = 𝒟_{n+1}`.
pub fn haar_levels(depth: u32) -> Result<Vec<TreeLevel>> {
    let mut levels = Vec::new();
    for n in 0..=depth {
        let w = crate::num::pow2(-i64::from(n));
        let funcs = (0..1i64 << n)
            .map(|j| {
                let a = &w * int(j);
                let b = &a + &w;
                haar_on(&a, &b).map(TreeFunction::Step)
            })
            .collect::<Result<_>>()?;
        levels.push(TreeLevel {
            f_partition: Partition::grid(n as i32, Rational::zero()),
            c_partition: Partition::grid(n as i32 + 1, Rational::zero()),
            funcs,
        });
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rat;

    fn triple() -> TreeSystem {
        let h = |a, b| TreeFunction::Step(haar_on(&a, &b).unwrap());
        let node = |f: TreeFunction, p: (Rational, Rational), m: (Rational, Rational)| TreeNode {
            f,
            plus: PointSet::interval(p.0, p.1),
            minus: PointSet::interval(m.0, m.1),
        };
        TreeSystem {
            nodes: vec![
                node(h(int(0), int(1)), (int(0), rat(1, 2)), (rat(1, 2), int(1))),
                node(
                    h(int(0), rat(1, 2)),
                    (int(0), rat(1, 4)),
                    (rat(1, 4), rat(1, 2)),
                ),
                node(
                    h(rat(1, 2), int(1)),
                    (rat(1, 2), rat(3, 4)),
                    (rat(3, 4), int(1)),
                ),
            ],
        }
    }

    #[test]
    fn triple_is_a_tree_and_orders_as_expected() {
        let sys = triple();
        assert_eq!(verify_tree_axioms(&sys), None);
        let order = adversarial_permutation(&sys).unwrap();
        assert_eq!(order, vec![2, 1, 3]);
        assert_eq!(check_permutation_order(&sys, &order).unwrap(), None);
        let r = verify_rearrangement_bound(&sys, &order).unwrap();
        assert!(r.ok());
        assert_eq!(r.worst_ratio, 0.5);
    }

    #[test]
    fn straddling_node_breaks_trichotomy() {
        let mut sys = triple();
        sys.nodes[1] = TreeNode {
            f: TreeFunction::Step(haar_on(&rat(1, 4), &rat(3, 4)).unwrap()),
            plus: PointSet::interval(rat(1, 4), rat(1, 2)),
            minus: PointSet::interval(rat(1, 2), rat(3, 4)),
        };
        assert_eq!(
            verify_tree_axioms(&sys),
            Some(TreeViolation::Trichotomy { k: 1, n: 2 })
        );
        assert!(adversarial_permutation(&sys).is_err());
    }

    #[test]
    fn partitions_and_refinement() {
        let f = Partition::grid(1, int(0));
        let c = Partition::grid(3, int(0));
        assert!(refines(&f, &c).unwrap());
        assert!(!refines(&c, &f).unwrap());
        let shifted = Partition::grid(1, rat(1, 3));
        assert!(!refines(&shifted, &c).unwrap());
        let e = Partition::explicit(vec![int(-1), int(0), rat(1, 2), int(1)]).unwrap();
        assert!(refines(&Partition::explicit(vec![int(0), int(1)]).unwrap(), &e).unwrap());
        assert!(refines(&e, &c).unwrap());
        assert!(!refines(&c, &e).unwrap());
        let other = Partition::grid(1, int(0))
            .with_window(int(0), int(1))
            .unwrap();
        assert!(refines(&other, &c).is_err());
        assert_eq!(c.cell_index_of(&rat(1, 8)), BigInt::from(1));
        assert_eq!(c.cell_index_left(&rat(1, 8)), BigInt::from(0));
    }

    #[test]
    fn sign_preservation() {
        let h = TreeFunction::Step(haar_on(&int(0), &int(1)).unwrap());
        assert!(sign_preserving(&Partition::grid(1, int(0)), &h));
        assert!(!sign_preserving(&Partition::grid(0, int(0)), &h));
        assert!(!sign_preserving(&Partition::grid(1, rat(1, 4)), &h));
    }

    #[test]
    fn haar_tree_depth_four() {
        let built = build_tree(&haar_levels(4).unwrap()).unwrap();
        assert_eq!(built.system.nodes.len(), 31);
        let order = adversarial_permutation(&built.system).unwrap();
        assert_eq!(
            check_permutation_order(&built.system, &order).unwrap(),
            None
        );
        let r = verify_rearrangement_bound(&built.system, &order).unwrap();
        assert!(r.ok());
        let identity: Vec<usize> = (1..=31).collect();
        assert!(check_permutation_order(&built.system, &identity)
            .unwrap()
            .is_some());
    }

    #[test]
    fn disjoint_nonnegative_nodes() {
        let nodes = (0..4)
            .map(|j| {
                let f = StepFunction::indicator(int(j), int(j + 1)).unwrap();
                TreeNode {
                    plus: f.support(),
                    minus: PointSet::empty(),
                    f: TreeFunction::Step(f),
                }
            })
            .collect();
        let sys = TreeSystem { nodes };
        let order: Vec<usize> = (1..=4).collect();
        assert!(verify_rearrangement_bound(&sys, &order).unwrap().ok());
        assert_eq!(adversarial_permutation(&sys).unwrap().len(), 4);
    }

    #[test]
    fn single_node() {
        let built = build_tree(&haar_levels(0).unwrap()).unwrap();
        assert_eq!(adversarial_permutation(&built.system).unwrap(), vec![1]);
    }

    #[test]
    fn build_tree_rejects_bad_input() {
        let mut lv = haar_levels(1).unwrap();
        lv[1].c_partition = Partition::grid(1, int(0));
        assert!(matches!(build_tree(&lv), Err(Error::Precondition(_))));
        let mut lv = haar_levels(1).unwrap();
        lv[0].c_partition = Partition::grid(3, int(0));
        assert!(build_tree(&lv).is_err());
        let mut lv = haar_levels(0).unwrap();
        let dup = lv[0].funcs[0].clone();
        lv[0].funcs.push(dup);
        assert!(build_tree(&lv).is_err());
    }
}
