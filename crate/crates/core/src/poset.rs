//! The chain order on cylinder nodes `(z, v, t)`:
//! `x <= y` iff `t_y - t_x >= delta d(z_x, z_y)` and `(t_y - t_x) tan(alpha) >= |v_x - v_y|`.
//!
//! Chains become fragment candidates, Mirsky levels become strip candidates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::dist2;
use crate::fragment::{Fragment, FragmentError};
use crate::space::{DistSpec, FiniteMetricSpace, Point, SpaceError, DEFAULT_TOL};

/// Full transitivity scan up to this many nodes; sampled above.
pub const FULL_TRANSITIVITY_LIMIT: usize = 300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PosetError {
    #[error("delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("alpha must lie in (0, pi/2), got {0}")]
    BadAlpha(f64),
    #[error("poset has no nodes")]
    Empty,
    #[error("node {node} has transverse dimension {got}, expected {expected}")]
    TransverseDim { node: usize, got: usize, expected: usize },
    #[error("node {0} has a non-finite value")]
    NonFinite(usize),
    #[error("chain is empty")]
    EmptyChain,
    #[error("chain node index {0} out of range")]
    NodeOutOfRange(usize),
    #[error("chain nodes {0} and {1} share the axial value")]
    RepeatedAxial(usize, usize),
    #[error("chain certificate fails on nodes {i} and {j}: {reason}")]
    NotAChain { i: usize, j: usize, reason: String },
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainNode {
    pub base: usize,
    pub transverse: Vec<f64>,
    pub axial: f64,
}

impl ChainNode {
    pub fn new(base: usize, transverse: Vec<f64>, axial: f64) -> Self {
        ChainNode { base, transverse, axial }
    }
}

#[derive(Clone, Debug)]
pub struct ChainPoset {
    nodes: Vec<ChainNode>,
    origin: Vec<usize>,
    delta: f64,
    alpha: f64,
    tol: f64,
    order: Vec<usize>,
    words: usize,
    /// Row `x` has bit `y` set iff `x < y` strictly.
    succ: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LongestChain {
    pub length: usize,
    pub chain: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainCertificate {
    pub pairs_checked: usize,
    /// Range of `max(d, |dv|, dt) / dt` over chain pairs.
    pub cylinder_lower: f64,
    pub cylinder_upper: f64,
    /// `max(1/delta, tan(alpha), 1)`.
    pub upper_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosetDump {
    pub delta: f64,
    pub alpha: f64,
    pub tol: f64,
    pub nodes: Vec<ChainNode>,
    pub levels: Vec<usize>,
    /// Covering pairs `(x, y)`: `x < y` with nothing strictly between.
    pub hasse: Vec<(usize, usize)>,
}

impl ChainPoset {
    /// Builds the order; exact duplicates (zero base distance, equal transverse
    /// and axial values) are merged first. `base_dist` compares base indices.
    pub fn build(
        nodes: &[ChainNode],
        delta: f64,
        alpha: f64,
        base_dist: impl Fn(usize, usize) -> f64,
        tol: f64,
    ) -> Result<Self, PosetError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(PosetError::BadDelta(delta));
        }
        if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
            return Err(PosetError::BadAlpha(alpha));
        }
        if nodes.is_empty() {
            return Err(PosetError::Empty);
        }
        let q = nodes[0].transverse.len();
        for (i, n) in nodes.iter().enumerate() {
            if n.transverse.len() != q {
                return Err(PosetError::TransverseDim { node: i, got: n.transverse.len(), expected: q });
            }
            if !n.axial.is_finite() || n.transverse.iter().any(|v| !v.is_finite()) {
                return Err(PosetError::NonFinite(i));
            }
        }
        let mut kept: Vec<ChainNode> = Vec::new();
        let mut origin = Vec::with_capacity(nodes.len());
        for n in nodes {
            let dup = kept.iter().position(|k| {
                k.axial == n.axial && k.transverse == n.transverse && base_dist(k.base, n.base) <= 0.0
            });
            match dup {
                Some(k) => origin.push(k),
                None => {
                    origin.push(kept.len());
                    kept.push(n.clone());
                }
            }
        }
        let n = kept.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| kept[a].axial.total_cmp(&kept[b].axial).then(a.cmp(&b)));
        let words = n.div_ceil(64);
        let mut succ = vec![0u64; n * words];
        let tan = alpha.tan();
        for (r, &x) in order.iter().enumerate() {
            for &y in &order[r + 1..] {
                let dt = kept[y].axial - kept[x].axial;
                let d = base_dist(kept[x].base, kept[y].base);
                let dv = dist2(&kept[x].transverse, &kept[y].transverse);
                if dt >= delta * d - tol && dt * tan >= dv - tol {
                    succ[x * words + y / 64] |= 1u64 << (y % 64);
                }
            }
        }
        Ok(ChainPoset { nodes: kept, origin, delta, alpha, tol, order, words, succ })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[ChainNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &ChainNode {
        &self.nodes[i]
    }

    /// For each input node, the index of the node it was merged into.
    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Strict order `x < y`.
    #[inline]
    pub fn less(&self, x: usize, y: usize) -> bool {
        self.succ[x * self.words + y / 64] >> (y % 64) & 1 == 1
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        x == y || self.less(x, y)
    }

    pub fn comparable(&self, x: usize, y: usize) -> bool {
        self.less(x, y) || self.less(y, x)
    }

    /// `level(x)` = number of nodes in the longest chain ending at `x`, and the
    /// lowest-index predecessor realizing it.
    fn levels_and_preds(&self) -> (Vec<usize>, Vec<Option<usize>>) {
        let n = self.len();
        let mut level = vec![1usize; n];
        let mut pred: Vec<Option<usize>> = vec![None; n];
        for (r, &y) in self.order.iter().enumerate() {
            for &x in &self.order[..r] {
                if !self.less(x, y) {
                    continue;
                }
                let cand = level[x] + 1;
                let better = cand > level[y] || (cand == level[y] && pred[y].is_some_and(|p| x < p));
                if better {
                    level[y] = cand;
                    pred[y] = Some(x);
                }
            }
        }
        (level, pred)
    }

    pub fn levels(&self) -> Vec<usize> {
        self.levels_and_preds().0
    }

    pub fn longest_chain(&self) -> LongestChain {
        let (level, pred) = self.levels_and_preds();
        let length = level.iter().copied().max().unwrap_or(0);
        let mut chain = Vec::with_capacity(length);
        let mut cur = (0..self.len()).find(|&i| level[i] == length);
        while let Some(c) = cur {
            chain.push(c);
            cur = pred[c];
        }
        chain.reverse();
        LongestChain { length, chain }
    }

    /// Antichains by level; their number equals the longest chain length.
    pub fn mirsky_decompose(&self) -> Vec<Vec<usize>> {
        let level = self.levels();
        let m = level.iter().copied().max().unwrap_or(0);
        let mut out = vec![Vec::new(); m];
        for (i, &l) in level.iter().enumerate() {
            out[l - 1].push(i);
        }
        out
    }

    pub fn is_antichain(&self, set: &[usize]) -> bool {
        set.iter().enumerate().all(|(a, &x)| set[a + 1..].iter().all(|&y| !self.comparable(x, y)))
    }

    /// A violating triple `x < y < z` with `x` not below `z`, if any. Exhaustive up
    /// to [`FULL_TRANSITIVITY_LIMIT`] nodes, otherwise `samples` seeded random triples.
    pub fn transitivity_violation(&self, samples: usize, seed: u64) -> Option<(usize, usize, usize)> {
        let n = self.len();
        if n <= FULL_TRANSITIVITY_LIMIT {
            for x in 0..n {
                for y in 0..n {
                    if !self.less(x, y) {
                        continue;
                    }
                    for z in 0..n {
                        if self.less(y, z) && !self.less(x, z) {
                            return Some((x, y, z));
                        }
                    }
                }
            }
            None
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..samples).find_map(|_| {
                let (x, y, z) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                (self.less(x, y) && self.less(y, z) && !self.less(x, z)).then_some((x, y, z))
            })
        }
    }

    pub fn hasse(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut edges = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if self.less(x, y) && !(0..n).any(|z| self.less(x, z) && self.less(z, y)) {
                    edges.push((x, y));
                }
            }
        }
        edges
    }

    pub fn dump(&self) -> PosetDump {
        PosetDump {
            delta: self.delta,
            alpha: self.alpha,
            tol: self.tol,
            nodes: self.nodes.clone(),
            levels: self.levels(),
            hasse: self.hasse(),
        }
    }

    /// Fragment with domain = axial values and trace = base points of `chain`,
    /// after certifying every pair against the order's inequalities.
    pub fn chain_to_fragment(
        &self,
        chain: &[usize],
        base_dist: impl Fn(usize, usize) -> f64,
    ) -> Result<(Fragment, ChainCertificate), PosetError> {
        if chain.is_empty() {
            return Err(PosetError::EmptyChain);
        }
        if let Some(&bad) = chain.iter().find(|&&c| c >= self.len()) {
            return Err(PosetError::NodeOutOfRange(bad));
        }
        let tan = self.alpha.tan();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let mut pairs = 0;
        for a in 0..chain.len() {
            for b in (a + 1)..chain.len() {
                let (x, y) = (&self.nodes[chain[a]], &self.nodes[chain[b]]);
                let dt = y.axial - x.axial;
                if dt == 0.0 {
                    return Err(PosetError::RepeatedAxial(chain[a], chain[b]));
                }
                if dt < 0.0 {
                    return Err(PosetError::NotAChain { i: chain[a], j: chain[b], reason: "axial values decrease".into() });
                }
                let d = base_dist(x.base, y.base);
                let dv = dist2(&x.transverse, &y.transverse);
                if d > dt / self.delta + self.tol {
                    return Err(PosetError::NotAChain {
                        i: chain[a],
                        j: chain[b],
                        reason: format!("base distance {d} exceeds dt/delta = {}", dt / self.delta),
                    });
                }
                if dv > dt * tan + self.tol {
                    return Err(PosetError::NotAChain {
                        i: chain[a],
                        j: chain[b],
                        reason: format!("transverse distance {dv} exceeds dt tan(alpha) = {}", dt * tan),
                    });
                }
                let q = d.max(dv).max(dt) / dt;
                lo = lo.min(q);
                hi = hi.max(q);
                pairs += 1;
            }
        }
        if pairs == 0 {
            lo = 1.0;
            hi = 1.0;
        }
        let domain = chain.iter().map(|&c| self.nodes[c].axial).collect();
        let trace = chain.iter().map(|&c| self.nodes[c].base).collect();
        let fragment = Fragment::new(domain, trace)?;
        let upper_bound = (1.0 / self.delta).max(tan).max(1.0);
        Ok((fragment, ChainCertificate { pairs_checked: pairs, cylinder_lower: lo, cylinder_upper: hi, upper_bound }))
    }
}

/// A seeded random instance: `n` base points uniform in the unit square and one
/// node per base point with uniform axial value in `[0, 1]` and transverse
/// values uniform in `[0, 1]^transverse_dim`.
pub fn random_instance(n: usize, transverse_dim: usize, seed: u64) -> Result<(FiniteMetricSpace, Vec<ChainNode>), PosetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        points.push(Point::new(format!("p{i}"), vec![rng.gen::<f64>(), rng.gen::<f64>()]));
        let v = (0..transverse_dim).map(|_| rng.gen::<f64>()).collect();
        nodes.push(ChainNode::new(i, v, rng.gen::<f64>()));
    }
    let space = FiniteMetricSpace::build(points, DistSpec::Euclidean, vec![1.0 / n.max(1) as f64; n], DEFAULT_TOL)?;
    Ok((space, nodes))
}
