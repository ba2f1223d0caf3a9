use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::inband::{Axis, DyadicShift, InBandShifter};

/// Normalized correlation of one plane pair over the masked locations;
/// `None` when either side has zero energy there.
fn ncc_term(x: &Grid, y: &Grid, mask: Option<&[bool]>) -> Option<f64> {
    let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
    for (idx, (&p, &q)) in x.as_slice().iter().zip(y.as_slice()).enumerate() {
        if mask.is_some_and(|m| !m[idx]) {
            continue;
        }
        xy += p * q;
        xx += p * p;
        yy += q * q;
    }
    if xx == 0.0 || yy == 0.0 {
        return None;
    }
    Some(xy / (xx.sqrt() * yy.sqrt()))
}

fn check_shapes(planes: [&Grid; 4], mask: Option<&[bool]>) -> Result<()> {
    let (r, c) = (planes[0].rows(), planes[0].cols());
    if planes.iter().any(|p| p.rows() != r || p.cols() != c) {
        return Err(Error::Dimension("correlated planes differ in shape".into()));
    }
    if mask.is_some_and(|m| m.len() != r * c) {
        return Err(Error::Dimension("mask length does not match planes".into()));
    }
    Ok(())
}

/// Sum of the horizontal and vertical normalized correlations, in `[-2, 2]`.
pub fn ncc_score(a_ref: &Grid, b_ref: &Grid, a_sen: &Grid, b_sen: &Grid) -> Result<f64> {
    ncc_score_masked(a_ref, b_ref, a_sen, b_sen, None)
}

/// [`ncc_score`] restricted to locations flagged in `mask`.
pub fn ncc_score_masked(
    a_ref: &Grid,
    b_ref: &Grid,
    a_sen: &Grid,
    b_sen: &Grid,
    mask: Option<&[bool]>,
) -> Result<f64> {
    check_shapes([a_ref, b_ref, a_sen, b_sen], mask)?;
    match (ncc_term(a_ref, a_sen, mask), ncc_term(b_ref, b_sen, mask)) {
        (Some(x), Some(y)) => Ok(x + y),
        _ => Err(Error::degenerate(
            "translation",
            "zero-energy plane in correlation",
        )),
    }
}

/// Sensed detail planes at the correlation level, already corrected for
/// scale and rotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SensedPlanes {
    pub level: u32,
    pub a: Grid,
    pub b: Grid,
    /// Locations of `a` that carry valid data; `None` means all of them.
    pub mask_a: Option<Vec<bool>>,
    /// Same for `b`.
    pub mask_b: Option<Vec<bool>>,
}

impl SensedPlanes {
    /// Planes with every location valid.
    pub fn new(level: u32, a: Grid, b: Grid) -> Self {
        Self {
            level,
            a,
            b,
            mask_a: None,
            mask_b: None,
        }
    }

    /// Restricts both planes to `mask`, on top of any existing masks.
    pub fn restrict(&mut self, mask: &[bool]) {
        self.restrict_bands(mask, mask);
    }

    /// Restricts `a` to `mask_a` and `b` to `mask_b`.
    pub fn restrict_bands(&mut self, mask_a: &[bool], mask_b: &[bool]) {
        fn and(current: &mut Option<Vec<bool>>, extra: &[bool]) {
            *current = Some(match current.take() {
                Some(m) => m.iter().zip(extra).map(|(&x, &y)| x && y).collect(),
                None => extra.to_vec(),
            });
        }
        and(&mut self.mask_a, mask_a);
        and(&mut self.mask_b, mask_b);
    }
}

/// Branch-and-bound settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbConfig {
    /// Stop as soon as a candidate scores above this.
    pub tau: f64,
    /// Reduction level below the reference's finest level.
    pub k: u32,
    /// Shifts live on the `1 / 2^h_max` lattice.
    pub h_max: u32,
    /// Oscillation tolerance in pixels; `None` uses `2^-(h_max + 1)`.
    pub epsilon: Option<f64>,
    /// Node expansions plus backtracking steps before giving up.
    pub max_iterations: usize,
}

impl Default for BnbConfig {
    fn default() -> Self {
        Self {
            tau: 1.9,
            k: 2,
            h_max: 6,
            epsilon: None,
            max_iterations: 64,
        }
    }
}

/// Why the search stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// A candidate scored above `tau`.
    Threshold,
    /// The search alternated between two centres; their midpoint is returned.
    Oscillation,
    /// Every branch was explored down to lattice resolution.
    Exhausted,
    IterationCap,
}

/// One step of the search: the rectangle being examined and the best
/// candidate seen so far. Bounds are in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbState {
    pub iteration: usize,
    pub low_x: f64,
    pub high_x: f64,
    pub low_y: f64,
    pub high_y: f64,
    /// Best corner score of this rectangle.
    pub score: f64,
    pub best_score: f64,
    /// True when this rectangle is a child of the previous one.
    pub descended: bool,
}

impl BnbState {
    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.low_x + self.high_x),
            0.5 * (self.low_y + self.high_y),
        )
    }

    pub fn width(&self) -> f64 {
        self.high_x - self.low_x
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationEstimate {
    pub tx: f64,
    pub ty: f64,
    pub score: f64,
    pub converged: bool,
    pub termination: Termination,
    pub iterations: usize,
    /// Distinct candidate shifts scored.
    pub evaluations: usize,
    pub trace: Vec<BnbState>,
}

/// Square of lattice points `[x0, x0 + w] x [y0, y0 + w]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Node {
    x0: i64,
    y0: i64,
    w: i64,
}

impl Node {
    fn corners(&self) -> [(i64, i64); 4] {
        let (x1, y1) = (self.x0 + self.w, self.y0 + self.w);
        [(self.x0, self.y0), (x1, self.y0), (self.x0, y1), (x1, y1)]
    }

    fn center(&self) -> (i64, i64) {
        (self.x0 + self.w / 2, self.y0 + self.w / 2)
    }

    fn children(&self) -> [Node; 4] {
        let h = self.w / 2;
        [(0, 0), (h, 0), (0, h), (h, h)].map(|(dx, dy)| Node {
            x0: self.x0 + dx,
            y0: self.y0 + dy,
            w: h,
        })
    }
}

/// Ranking key: best corner score, then second best.
#[derive(Debug, Clone, Copy)]
struct Key(f64, f64);

impl Key {
    fn cmp(&self, other: &Key) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.total_cmp(&other.1))
    }
}

struct Pending {
    key: Key,
    seq: usize,
    node: Node,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap on the key; then wider, then earlier.
        self.key
            .cmp(&other.key)
            .then(self.node.w.cmp(&other.node.w))
            .then(other.seq.cmp(&self.seq))
    }
}

struct Search<'a> {
    shifter: &'a InBandShifter,
    sensed: &'a SensedPlanes,
    h_max: u32,
    scores: HashMap<(i64, i64), f64>,
    /// Lattice points whose neighbourhood has been examined.
    climbed: HashSet<(i64, i64)>,
    /// Climbed points and their neighbours, with the climb that reached them.
    covered: HashMap<(i64, i64), usize>,
    /// Current climb; a new one starts at every leaf not reached by ascent.
    climb: usize,
    /// Largest score change per lattice step seen so far.
    slope: f64,
    /// Slope the frontier keys were computed with.
    ranked_slope: f64,
    best: (f64, (i64, i64)),
}

impl Search<'_> {
    fn score(&mut self, p: (i64, i64)) -> Result<f64> {
        if let Some(&s) = self.scores.get(&p) {
            return Ok(s);
        }
        let sx = DyadicShift::new(p.0, self.h_max, Axis::Horizontal).reduced();
        let sy = DyadicShift::new(p.1, self.h_max, Axis::Vertical).reduced();
        let (a, b) = self
            .shifter
            .detail_planes_at_level(sx, sy, self.sensed.level)?;
        // A reference plane with no energy at this shift cannot match anything.
        let s = ncc_term(&a, &self.sensed.a, self.sensed.mask_a.as_deref()).unwrap_or(0.0)
            + ncc_term(&b, &self.sensed.b, self.sensed.mask_b.as_deref()).unwrap_or(0.0);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                if let Some(&t) = self.scores.get(&(p.0 + dx, p.1 + dy)) {
                    self.slope = self.slope.max((s - t).abs());
                }
            }
        }
        self.scores.insert(p, s);
        let closer = (p.0.abs() + p.1.abs()) < (self.best.1 .0.abs() + self.best.1 .1.abs());
        if s > self.best.0 || (s == self.best.0 && closer) {
            self.best = (s, p);
        }
        Ok(s)
    }

    /// Unit square next to `leaf` towards a lattice neighbour that beats the
    /// leaf's best corner, if any. The ascent ends at a corner climbed from
    /// before, or when it would step onto ground another climb examined,
    /// since those paths are already known.
    fn ascend(&mut self, leaf: &Node, half: i64, continuing: bool) -> Result<Option<Node>> {
        if !continuing {
            self.climb += 1;
        }
        let mut p = leaf.corners()[0];
        let mut sp = self.score(p)?;
        for c in leaf.corners() {
            let s = self.score(c)?;
            if s > sp {
                (p, sp) = (c, s);
            }
        }
        if !self.climbed.insert(p) {
            return Ok(None);
        }
        self.covered.entry(p).or_insert(self.climb);
        let inside = |q: (i64, i64)| q.0.abs() <= half && q.1.abs() <= half;
        let mut up = None;
        let mut around = [[f64::NEG_INFINITY; 3]; 3];
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                let q = (p.0 + dx, p.1 + dy);
                if (dx, dy) == (0, 0) || !inside(q) {
                    continue;
                }
                let s = self.score(q)?;
                let owner = *self.covered.entry(q).or_insert(self.climb);
                around[(dy + 1) as usize][(dx + 1) as usize] = s;
                if s > up.map_or(sp, |(_, v, _)| v) {
                    up = Some(((dx, dy), s, owner));
                }
            }
        }
        let Some(((dx, dy), _, owner)) = up else {
            return self.jump(p, sp, half);
        };
        if owner != self.climb {
            return Ok(None);
        }
        // Along an axis step, take the side whose flanking pair scores higher.
        let side = |d: i64, flank: [f64; 2]| -> i64 {
            if d != 0 {
                d.min(0)
            } else if flank[1] > flank[0] {
                0
            } else {
                -1
            }
        };
        let col = |j: usize| {
            [
                around[0][j].max(around[0][1]),
                around[2][j].max(around[2][1]),
            ]
        };
        let row = |i: usize| {
            [
                around[i][0].max(around[1][0]),
                around[i][2].max(around[1][2]),
            ]
        };
        let ox = side(dx, row((dy + 1) as usize));
        let oy = side(dy, col((dx + 1) as usize));
        let x0 = (p.0 + ox).clamp(-half, half - 1);
        let y0 = (p.1 + oy).clamp(-half, half - 1);
        Ok(Some(Node { x0, y0, w: 1 }))
    }

    /// From a local maximum `p` of the one-step neighbourhood, the unit square
    /// towards the best point two steps away that beats it, if any.
    fn jump(&mut self, p: (i64, i64), sp: f64, half: i64) -> Result<Option<Node>> {
        let mut up = None;
        for dy in -2..=2i64 {
            for dx in -2..=2i64 {
                let q = (p.0 + dx, p.1 + dy);
                if dx.abs().max(dy.abs()) != 2 || q.0.abs() > half || q.1.abs() > half {
                    continue;
                }
                let s = self.score(q)?;
                self.covered.entry(q).or_insert(self.climb);
                if s > up.map_or(sp, |(_, v)| v) {
                    up = Some((q, s));
                }
            }
        }
        Ok(up.map(|(q, _)| {
            let corner = |v: i64, from: i64| if v > from { v - 1 } else { v };
            Node {
                x0: corner(q.0, p.0).clamp(-half, half - 1),
                y0: corner(q.1, p.1).clamp(-half, half - 1),
                w: 1,
            }
        }))
    }

    /// A unit square whose best corner was climbed from already; visiting it
    /// again cannot reveal anything.
    fn spent(&self, node: &Node) -> bool {
        if node.w != 1 {
            return false;
        }
        let score = |c: &(i64, i64)| self.scores.get(c).copied().unwrap_or(f64::NEG_INFINITY);
        let mut corners = node.corners();
        corners.sort_by(|x, y| score(y).total_cmp(&score(x)));
        self.climbed.contains(&corners[0])
    }

    /// [`Search::key`] over the samples no climb has covered yet; scores
    /// that are all known already give the lowest key.
    fn live_key(&self, node: &Node) -> Key {
        let mut samples = node.corners().to_vec();
        if node.w > 1 {
            samples.push(node.center());
        }
        let mut v: Vec<f64> = samples
            .iter()
            .filter(|p| !self.covered.contains_key(p))
            .filter_map(|p| self.scores.get(p).copied())
            .collect();
        v.sort_by(|x, y| y.total_cmp(x));
        let at = |i: usize| v.get(i).copied().unwrap_or(f64::NEG_INFINITY);
        Key(at(0), at(1))
    }

    /// Backtracking rank: for wide rectangles, the best sample raised by the
    /// current slope estimate over half the width, which bounds the interior
    /// when the estimate holds; unit squares use [`Search::live_key`].
    fn priority(&mut self, node: &Node) -> Result<Key> {
        if node.w == 1 {
            return Ok(self.live_key(node));
        }
        let samples = [node.corners().to_vec(), vec![node.center()]].concat();
        let mut v = Vec::with_capacity(samples.len());
        for (i, &p) in samples.iter().enumerate() {
            let sp = self.score(p)?;
            for &q in &samples[..i] {
                let d = (p.0 - q.0).abs().max((p.1 - q.1).abs());
                self.slope = self.slope.max((sp - self.scores[&q]).abs() / d as f64);
            }
            v.push(sp);
        }
        let top = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Key(top + self.slope * (node.w / 2) as f64, top))
    }

    /// Two best scores among the corners and, for rectangles wider than one
    /// lattice step, the centre.
    fn key(&mut self, node: &Node) -> Result<Key> {
        let mut v = Vec::with_capacity(5);
        for c in node.corners() {
            v.push(self.score(c)?);
        }
        if node.w > 1 {
            v.push(self.score(node.center())?);
        }
        v.sort_by(|x, y| y.total_cmp(x));
        Ok(Key(v[0], v[1]))
    }
}

/// Sub-pixel translation by branch and bound over `[-1, 1] x [-1, 1]`.
///
/// Every rectangle is scored at its corners and centre using reference
/// planes shifted in-band. The search descends into the quarter whose two
/// best scores are best, keeps the other quarters for backtracking, and stops
/// when a candidate scores above `tau`. Once rectangles are one lattice step
/// wide the search climbs to neighbouring squares while a lattice neighbour
/// of the best corner scores higher, looking two steps out before giving up
/// on a flat maximum. Afterwards it resumes from the pending rectangle with
/// the highest optimistic bound: best sampled score plus half the width
/// times the steepest score change seen between nearby samples.
///
/// Unconverged searches return the best candidate seen with
/// `converged = false`.
pub fn estimate_translation_bnb(
    shifter: &InBandShifter,
    sensed: &SensedPlanes,
    cfg: &BnbConfig,
) -> Result<TranslationEstimate> {
    if cfg.h_max < 1 || cfg.h_max > 30 {
        return Err(Error::Range(format!("h_max {} outside 1..=30", cfg.h_max)));
    }
    if cfg.k < 1 || cfg.k > shifter.levels() {
        return Err(Error::Range(format!(
            "reduction level {} outside 1..={}",
            cfg.k,
            shifter.levels()
        )));
    }
    if !(cfg.tau > 0.0 && cfg.tau <= 2.0) {
        return Err(Error::Range(format!("tau {} outside (0, 2]", cfg.tau)));
    }
    let level = shifter.levels() - cfg.k;
    let side = 1usize << level;
    if sensed.level != level || sensed.a.rows() != side || sensed.a.cols() != side {
        return Err(Error::Dimension(format!(
            "sensed planes must be {side}x{side} at level {level}"
        )));
    }
    let (mask_a, mask_b) = (sensed.mask_a.as_deref(), sensed.mask_b.as_deref());
    check_shapes([&sensed.a, &sensed.b, &sensed.a, &sensed.b], mask_a)?;
    check_shapes([&sensed.a, &sensed.b, &sensed.a, &sensed.b], mask_b)?;
    if ncc_term(&sensed.a, &sensed.a, mask_a).is_none()
        || ncc_term(&sensed.b, &sensed.b, mask_b).is_none()
    {
        return Err(Error::degenerate(
            "translation",
            "sensed detail planes carry no energy",
        ));
    }

    let unit = 1.0 / (1u64 << cfg.h_max) as f64;
    let epsilon = cfg.epsilon.unwrap_or(unit / 2.0);
    let half = 1i64 << cfg.h_max;
    let mut search = Search {
        shifter,
        sensed,
        h_max: cfg.h_max,
        scores: HashMap::new(),
        climbed: HashSet::new(),
        covered: HashMap::new(),
        climb: 0,
        slope: 0.0,
        ranked_slope: 0.0,
        best: (f64::NEG_INFINITY, (0, 0)),
    };
    let state = |node: &Node, key: Key, best: f64, iteration: usize, descended: bool| BnbState {
        iteration,
        low_x: node.x0 as f64 * unit,
        high_x: (node.x0 + node.w) as f64 * unit,
        low_y: node.y0 as f64 * unit,
        high_y: (node.y0 + node.w) as f64 * unit,
        score: key.0,
        best_score: best,
        descended,
    };

    let root = Node {
        x0: -half,
        y0: -half,
        w: 2 * half,
    };
    let root_key = search.key(&root)?;
    let mut trace = vec![state(&root, root_key, search.best.0, 0, false)];
    let mut current = Some(root);
    let mut frontier = BinaryHeap::new();
    let mut seq = 0usize;
    let mut iterations = 0usize;
    let mut climbing = false;

    let finish =
        |search: &Search, termination, point: (f64, f64), iterations, trace| TranslationEstimate {
            tx: point.0,
            ty: point.1,
            score: search.best.0,
            converged: matches!(
                termination,
                Termination::Threshold | Termination::Oscillation
            ),
            termination,
            iterations,
            evaluations: search.scores.len(),
            trace,
        };
    let best_point = |search: &Search| {
        let (x, y) = search.best.1;
        (x as f64 * unit, y as f64 * unit)
    };

    loop {
        if search.best.0 > cfg.tau {
            return Ok(finish(
                &search,
                Termination::Threshold,
                best_point(&search),
                iterations,
                trace,
            ));
        }
        if iterations >= cfg.max_iterations {
            return Ok(finish(
                &search,
                Termination::IterationCap,
                best_point(&search),
                iterations,
                trace,
            ));
        }
        let (node, key, descended, ascended) = match current {
            Some(node) if node.w > 1 => {
                let mut ranked = Vec::with_capacity(4);
                for child in node.children() {
                    ranked.push((search.key(&child)?, child));
                }
                // Stable: among equal keys the first child in scan order wins.
                let pick = (1..4).fold(0, |b, i| {
                    if ranked[i].0.cmp(&ranked[b].0) == Ordering::Greater {
                        i
                    } else {
                        b
                    }
                });
                for (i, (_, child)) in ranked.iter().enumerate() {
                    if i != pick {
                        frontier.push(Pending {
                            key: search.priority(child)?,
                            seq,
                            node: *child,
                        });
                        seq += 1;
                    }
                }
                (ranked[pick].1, ranked[pick].0, true, false)
            }
            Some(leaf) => match search.ascend(&leaf, half, climbing)? {
                Some(next) if !search.spent(&next) => (next, search.key(&next)?, false, true),
                _ => match pop_live(&mut frontier, &mut search)? {
                    Some(p) => (p.node, search.key(&p.node)?, false, false),
                    None => {
                        return Ok(finish(
                            &search,
                            Termination::Exhausted,
                            best_point(&search),
                            iterations,
                            trace,
                        ));
                    }
                },
            },
            None => unreachable!("the search always holds a rectangle"),
        };
        iterations += 1;
        climbing = ascended;
        current = Some(node);
        trace.push(state(&node, key, search.best.0, iterations, descended));

        if let Some(mid) = oscillation_midpoint(&trace, epsilon) {
            if search.best.0 <= cfg.tau {
                return Ok(finish(
                    &search,
                    Termination::Oscillation,
                    mid,
                    iterations,
                    trace,
                ));
            }
        }
    }
}

/// Best pending rectangle under [`Search::priority`]. Every key is
/// recomputed after the slope estimate grows; otherwise keys only fall, so
/// stale entries are re-queued lazily.
fn pop_live(frontier: &mut BinaryHeap<Pending>, search: &mut Search) -> Result<Option<Pending>> {
    if search.slope != search.ranked_slope {
        let mut all = std::mem::take(frontier).into_vec();
        for p in &mut all {
            p.key = search.priority(&p.node)?;
        }
        search.ranked_slope = search.slope;
        *frontier = BinaryHeap::from(all);
    }
    while let Some(mut p) = frontier.pop() {
        if search.spent(&p.node) {
            continue;
        }
        p.key = search.priority(&p.node)?;
        if frontier
            .peek()
            .is_some_and(|top| top.key.cmp(&p.key) == Ordering::Greater)
        {
            frontier.push(p);
            continue;
        }
        return Ok(Some(p));
    }
    Ok(None)
}

/// Midpoint of the last two centres when the last four rectangles have one
/// width and alternate between two points.
fn oscillation_midpoint(trace: &[BnbState], epsilon: f64) -> Option<(f64, f64)> {
    if trace.len() < 4 {
        return None;
    }
    let last = &trace[trace.len() - 4..];
    if last
        .iter()
        .any(|s| (s.width() - last[0].width()).abs() > 1e-9)
    {
        return None;
    }
    let c: Vec<(f64, f64)> = last.iter().map(BnbState::center).collect();
    let near =
        |p: (f64, f64), q: (f64, f64)| (p.0 - q.0).abs() <= epsilon && (p.1 - q.1).abs() <= epsilon;
    if near(c[0], c[2]) && near(c[1], c[3]) && !near(c[2], c[3]) {
        return Some((0.5 * (c[2].0 + c[3].0), 0.5 * (c[2].1 + c[3].1)));
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn planes(seed: u64) -> (Grid, Grid) {
        let mut s = seed;
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 33) % 1000) as f64 / 500.0 - 1.0
        };
        (
            Grid::from_fn(4, 4, |_, _| next()),
            Grid::from_fn(4, 4, |_, _| next()),
        )
    }

    #[test]
    fn self_and_negated_scores() {
        let (a, b) = planes(7);
        assert!((ncc_score(&a, &b, &a, &b).unwrap() - 2.0).abs() < 1e-12);
        let (na, nb) = (a.map(|v| -v), b.map(|v| -v));
        assert!((ncc_score(&a, &b, &na, &nb).unwrap() + 2.0).abs() < 1e-12);
        let z = Grid::zeros(4, 4);
        assert!(matches!(
            ncc_score(&a, &b, &z, &b),
            Err(Error::Degenerate { .. })
        ));
    }

    #[test]
    fn masked_score_ignores_dropped_cells() {
        let (a, b) = planes(3);
        let mut a2 = a.clone();
        a2[(0, 0)] += 100.0;
        let mut mask = vec![true; 16];
        mask[0] = false;
        let s = ncc_score_masked(&a, &b, &a2, &b, Some(&mask)).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(ncc_score(&a, &b, &a2, &b).unwrap() < 1.9);
    }

    #[test]
    fn oscillation_detection() {
        let mk = |x: f64| BnbState {
            iteration: 0,
            low_x: x - 0.01,
            high_x: x + 0.01,
            low_y: -0.01,
            high_y: 0.01,
            score: 0.0,
            best_score: 0.0,
            descended: false,
        };
        let trace = [mk(0.0), mk(0.5), mk(0.0), mk(0.5)];
        assert_eq!(oscillation_midpoint(&trace, 1e-3), Some((0.25, 0.0)));
        let trace = [mk(0.0), mk(0.5), mk(0.25), mk(0.5)];
        assert_eq!(oscillation_midpoint(&trace, 1e-3), None);
        let mut wide = mk(0.0);
        wide.low_x = -0.5;
        wide.high_x = 0.5;
        let trace = [wide, mk(0.5), mk(0.0), mk(0.5)];
        assert_eq!(oscillation_midpoint(&trace, 0.3), None);
    }
}
