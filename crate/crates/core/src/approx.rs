//! Strips over a base sample, McShane extension, strip sorting and
//! disjointification, and the integrated approximant `tau_n` of `<w, f>`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{dist2, dot, norm, VectorField};
use crate::poset::{ChainNode, ChainPoset, PosetError};
use crate::space::{greedy_net, FiniteMetricSpace};

/// Number of candidate scales in `(1, 3/2)` tried by [`disjointify`].
pub const SCALE_CANDIDATES: usize = 64;

/// Chain density at or above which a set is flagged as carrying fragments.
pub const NON_NULL_DENSITY: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("invalid parameter {name}: {reason}")]
    BadParam { name: &'static str, reason: String },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("anchors {i} and {j} violate the 1-Lipschitz condition by {excess}")]
    AnchorsNotLipschitz { i: usize, j: usize, excess: f64 },
    #[error("antichain nodes {0} and {1} are comparable")]
    ComparablePair(usize, usize),
    #[error("strips have different widths ({0} vs {1})")]
    WidthMismatch(f64, f64),
    #[error("strips {strip} and {next} overlap at base point {point}")]
    Overlap { strip: usize, next: usize, point: usize },
    #[error("index {index} out of range for {len} base points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error(transparent)]
    Poset(#[from] PosetError),
}

fn param(name: &'static str, reason: impl Into<String>) -> ApproxError {
    ApproxError::BadParam { name, reason: reason.into() }
}

/// `d_{delta,alpha}((z,v),(z',v')) = delta d(z,z') + cot(alpha) |v - v'|` and
/// `D = max(|dt|, d_{delta,alpha})`. With `transverse = false` the cotangent term is dropped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StripMetric {
    pub delta: f64,
    pub alpha: f64,
    pub transverse: bool,
}

impl StripMetric {
    pub fn new(delta: f64, alpha: f64, transverse: bool) -> Result<Self, ApproxError> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(param("delta", format!("must be positive, got {delta}")));
        }
        if !(alpha > 0.0 && alpha < std::f64::consts::FRAC_PI_2) {
            return Err(param("alpha", format!("must lie in (0, pi/2), got {alpha}")));
        }
        Ok(StripMetric { delta, alpha, transverse })
    }

    /// Coefficient of the transverse term (zero in the scalar case).
    pub fn cot(&self) -> f64 {
        if self.transverse {
            1.0 / self.alpha.tan()
        } else {
            0.0
        }
    }

    #[inline]
    pub fn base(&self, d: f64, dv: f64) -> f64 {
        self.delta * d + self.cot() * dv
    }

    #[inline]
    pub fn full(&self, d: f64, dv: f64, dt: f64) -> f64 {
        dt.abs().max(self.base(d, dv))
    }

    /// `delta + cot(alpha) + 1`; strips have width `2 c / n`.
    pub fn cover_constant(&self) -> f64 {
        self.delta + self.cot() + 1.0
    }
}

/// Base positions `(z, v)` on which strip functions are tabulated.
#[derive(Clone, Debug)]
pub struct BaseSample<'a> {
    pub space: &'a FiniteMetricSpace,
    pub base: Vec<usize>,
    pub transverse: Vec<Vec<f64>>,
    pub metric: StripMetric,
}

impl<'a> BaseSample<'a> {
    pub fn len(&self) -> usize {
        self.base.len()
    }

    pub fn is_empty(&self) -> bool {
        self.base.is_empty()
    }

    #[inline]
    pub fn base_dist(&self, a: usize, b: usize) -> f64 {
        self.space.dist(self.base[a], self.base[b])
    }

    #[inline]
    pub fn transverse_dist(&self, a: usize, b: usize) -> f64 {
        dist2(&self.transverse[a], &self.transverse[b])
    }

    /// `d_{delta,alpha}` between base positions.
    #[inline]
    pub fn d(&self, a: usize, b: usize) -> f64 {
        self.metric.base(self.base_dist(a, b), self.transverse_dist(a, b))
    }
}

/// The open strip `{(y, t) : f(y) < t < f(y) + scale * width}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub values: Vec<f64>,
    pub width: f64,
    pub scale: Option<f64>,
}

impl Strip {
    pub fn new(values: Vec<f64>, width: f64) -> Self {
        Strip { values, width, scale: None }
    }

    pub fn thickness(&self) -> f64 {
        self.scale.unwrap_or(1.0) * self.width
    }

    pub fn upper(&self, y: usize) -> f64 {
        self.values[y] + self.thickness()
    }

    pub fn contains(&self, y: usize, t: f64) -> bool {
        self.values[y] < t && t < self.upper(y)
    }

    pub fn shifted(&self, c: f64) -> Strip {
        Strip { values: self.values.iter().map(|v| v + c).collect(), ..self.clone() }
    }

    /// Largest `|f(a) - f(b)| - d(a, b)` over base pairs and the pair attaining it.
    pub fn lipschitz_excess(&self, sample: &BaseSample) -> (f64, usize, usize) {
        let mut worst = (f64::NEG_INFINITY, 0, 0);
        for a in 0..self.values.len() {
            for b in (a + 1)..self.values.len() {
                let e = (self.values[a] - self.values[b]).abs() - sample.d(a, b);
                if e > worst.0 {
                    worst = (e, a, b);
                }
            }
        }
        worst
    }
}

/// `ext(x) = min_p (f(p) + d(x, p))` over anchors `(p, f(p))`, after checking the
/// anchors are 1-Lipschitz among themselves.
pub fn mcshane_extend(
    anchors: &[(usize, f64)],
    n: usize,
    dist: impl Fn(usize, usize) -> f64,
    tol: f64,
) -> Result<Vec<f64>, ApproxError> {
    if anchors.is_empty() {
        return Err(param("anchors", "need at least one anchor"));
    }
    if let Some(&(index, _)) = anchors.iter().find(|a| a.0 >= n) {
        return Err(ApproxError::IndexOutOfRange { index, len: n });
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    for a in 0..anchors.len() {
        for b in (a + 1)..anchors.len() {
            let (pa, va) = anchors[a];
            let (pb, vb) = anchors[b];
            let excess = (va - vb).abs() - dist(pa, pb);
            if excess > tol && worst.is_none_or(|w| excess > w.2) {
                worst = Some((pa, pb, excess));
            }
        }
    }
    if let Some((i, j, excess)) = worst {
        return Err(ApproxError::AnchorsNotLipschitz { i, j, excess });
    }
    Ok((0..n)
        .map(|x| anchors.iter().map(|&(p, v)| v + dist(x, p)).fold(f64::INFINITY, f64::min))
        .collect())
}

/// Graph of an antichain over its base positions, extended to the whole sample.
/// `position[node]` is the sample index of a poset node.
pub fn antichain_to_strip(
    poset: &ChainPoset,
    antichain: &[usize],
    sample: &BaseSample,
    position: &[usize],
    width: f64,
    tol: f64,
) -> Result<Strip, ApproxError> {
    for (a, &x) in antichain.iter().enumerate() {
        for &y in &antichain[a + 1..] {
            if poset.comparable(x, y) {
                return Err(ApproxError::ComparablePair(x, y));
            }
        }
    }
    let anchors: Vec<(usize, f64)> = antichain.iter().map(|&x| (position[x], poset.node(x).axial)).collect();
    let values = mcshane_extend(&anchors, sample.len(), |a, b| sample.d(a, b), tol)?;
    Ok(Strip::new(values, width))
}

/// Pointwise nondecreasing rearrangement by the min/max cascade.
pub fn sort_strips(strips: &[Strip]) -> Result<Vec<Strip>, ApproxError> {
    let Some(first) = strips.first() else { return Ok(Vec::new()) };
    for s in strips {
        if s.width != first.width {
            return Err(ApproxError::WidthMismatch(first.width, s.width));
        }
        if s.values.len() != first.values.len() {
            return Err(ApproxError::DimensionMismatch { expected: first.values.len(), got: s.values.len() });
        }
    }
    let mut sorted: Vec<Vec<f64>> = Vec::with_capacity(strips.len());
    for s in strips {
        // Insert s: F_i = min(f_i, G_{i-1}), G_i = max(f_i, G_{i-1}), G_0 = s.
        let mut carry = s.values.clone();
        for f in sorted.iter_mut() {
            for (fy, gy) in f.iter_mut().zip(carry.iter_mut()) {
                let (lo, hi) = (fy.min(*gy), fy.max(*gy));
                *fy = lo;
                *gy = hi;
            }
        }
        sorted.push(carry);
    }
    Ok(sorted.into_iter().map(|v| Strip::new(v, first.width)).collect())
}

/// A point mass of the sampled set inside the cylinder.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub base: usize,
    pub t: f64,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disjointified {
    pub strips: Vec<Strip>,
    /// Atom mass lying on the upper boundary of some scaled strip.
    pub boundary_mass: f64,
    pub covered_before: f64,
    pub covered_after: f64,
}

fn scale_candidates() -> impl Iterator<Item = f64> {
    (0..SCALE_CANDIDATES).map(|c| 1.0 + 0.5 * (c + 1) as f64 / (SCALE_CANDIDATES + 1) as f64)
}

/// `g_1 = f_1`, `g_j = max(g_{j-1} + lambda_{j-1} h, f_j)`; each `lambda_j` is the
/// candidate in `(1, 3/2)` putting the least atom mass on the upper boundary,
/// smallest on ties.
pub fn disjointify(sorted: &[Strip], atoms: &[Atom], boundary_tol: f64) -> Result<Disjointified, ApproxError> {
    let covered = |strips: &[Strip]| -> f64 {
        atoms.iter().filter(|a| strips.iter().any(|s| s.contains(a.base, a.t))).map(|a| a.mass).sum()
    };
    let covered_before = covered(sorted);
    let mut out: Vec<Strip> = Vec::with_capacity(sorted.len());
    let mut boundary_mass = 0.0;
    for f in sorted {
        let values: Vec<f64> = match out.last() {
            None => f.values.clone(),
            Some(prev) => f.values.iter().enumerate().map(|(y, &fy)| (prev.upper(y)).max(fy)).collect(),
        };
        let mut best: Option<(f64, f64)> = None;
        for lambda in scale_candidates() {
            let top = lambda * f.width;
            let mass: f64 = atoms
                .iter()
                .filter(|a| (a.t - (values[a.base] + top)).abs() <= boundary_tol)
                .map(|a| a.mass)
                .sum();
            if best.is_none_or(|b| mass < b.1) {
                best = Some((lambda, mass));
            }
        }
        let (lambda, mass) = best.expect("candidate list is nonempty");
        boundary_mass += mass;
        out.push(Strip { values, width: f.width, scale: Some(lambda) });
    }
    let covered_after = covered(&out);
    Ok(Disjointified { strips: out, boundary_mass, covered_before, covered_after })
}

/// Checks the scaled strips are pairwise disjoint and ordered at every base point.
pub fn check_disjoint(strips: &[Strip], tol: f64) -> Result<(), ApproxError> {
    for j in 1..strips.len() {
        let (a, b) = (&strips[j - 1], &strips[j]);
        for y in 0..a.values.len() {
            if a.upper(y) > b.values[y] + tol {
                return Err(ApproxError::Overlap { strip: j - 1, next: j, point: y });
            }
        }
    }
    Ok(())
}

/// `t - sum_j |(g_j(y), g_j(y) + lambda_j h) ∩ (-inf, t)|`.
pub fn tau_at(strips: &[Strip], y: usize, t: f64) -> f64 {
    let removed: f64 = strips.iter().map(|s| (t - s.values[y]).clamp(0.0, s.thickness())).sum();
    t - removed
}

/// `tau_n` at every sample `(base[i], t[i])`; errors if strips overlap.
pub fn tau_approximate(axial: &[f64], strips: &[Strip], tol: f64) -> Result<Vec<f64>, ApproxError> {
    check_disjoint(strips, tol)?;
    if let Some(s) = strips.iter().find(|s| s.values.len() != axial.len()) {
        return Err(ApproxError::DimensionMismatch { expected: axial.len(), got: s.values.len() });
    }
    Ok(axial.iter().enumerate().map(|(i, &t)| tau_at(strips, i, t)).collect())
}

/// The sample lifted to the cylinder: base point, transverse part `f - <w,f> w`
/// and axial part `<w, f>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub transverse: Vec<Vec<f64>>,
    pub axial: Vec<f64>,
}

impl Cylinder {
    pub fn embed(f: &VectorField, w: &[f64]) -> Result<Cylinder, ApproxError> {
        if f.dim() != w.len() {
            return Err(ApproxError::DimensionMismatch { expected: w.len(), got: f.dim() });
        }
        let scalar = w.len() == 1;
        let mut transverse = Vec::with_capacity(f.len());
        let mut axial = Vec::with_capacity(f.len());
        for i in 0..f.len() {
            let u = f.row(i);
            let t = dot(u, w);
            axial.push(t);
            transverse.push(if scalar { Vec::new() } else { u.iter().zip(w).map(|(x, y)| x - t * y).collect() });
        }
        Ok(Cylinder { transverse, axial })
    }

    /// `max(d, |dv|, |dt|)`.
    pub fn dist(&self, space: &FiniteMetricSpace, i: usize, j: usize) -> f64 {
        space
            .dist(i, j)
            .max(dist2(&self.transverse[i], &self.transverse[j]))
            .max((self.axial[i] - self.axial[j]).abs())
    }

    pub fn height(&self) -> f64 {
        let lo = self.axial.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.axial.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalLip {
    #[serde(rename = "pointId")]
    pub point_id: String,
    pub point: usize,
    pub strip: usize,
    /// Largest `D`-radius around the point staying inside its strip.
    pub radius: f64,
    /// Largest `|d tau_n| / d_{delta,alpha}` to sample points within that radius.
    pub constant: f64,
    /// Same quotient against the base distance alone.
    pub base_constant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxCertificate {
    #[serde(rename = "M_n")]
    pub m_n: usize,
    pub n: usize,
    pub width: f64,
    pub sup_error: f64,
    pub bound: f64,
    /// `sum_j lambda_j h`, the exact cap on `|tau - tau_n|`.
    pub removed_total: f64,
    #[serde(rename = "global_lip_D")]
    pub global_lip_d: f64,
    pub global_violations: usize,
    pub local_lip_report: Vec<LocalLip>,
    pub net_size: usize,
    pub nodes_near_set: usize,
    pub set_mass: f64,
    pub covered_mass: f64,
    pub boundary_mass: f64,
    /// `M_n / (n * extent of <w,f> over the set)`.
    pub chain_density: f64,
    pub non_null_suspected: bool,
    pub embedding: String,
    pub tol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Approximation {
    pub tau: Vec<f64>,
    pub tau_n: Vec<f64>,
    pub strips: Vec<Strip>,
    pub certificate: ApproxCertificate,
}

/// The full pipeline: cylinder lift, `1/n`-net, chain order on net nodes near `set`,
/// Mirsky levels, strips, sorting, disjointification and `tau_n`, with audits.
#[allow(clippy::too_many_arguments)]
pub fn onedim_approx(
    space: &FiniteMetricSpace,
    set: &[usize],
    f: &VectorField,
    w: &[f64],
    delta: f64,
    alpha: f64,
    n: usize,
    tol: f64,
) -> Result<Approximation, ApproxError> {
    if n == 0 {
        return Err(param("n", "must be at least 1"));
    }
    if f.len() != space.len() {
        return Err(ApproxError::DimensionMismatch { expected: space.len(), got: f.len() });
    }
    if (norm(w) - 1.0).abs() > 1e-9 {
        return Err(param("w", format!("axis must be a unit vector, norm is {}", norm(w))));
    }
    if let Some(&index) = set.iter().find(|&&s| s >= space.len()) {
        return Err(ApproxError::IndexOutOfRange { index, len: space.len() });
    }
    let metric = StripMetric::new(delta, alpha, w.len() > 1)?;
    let cyl = Cylinder::embed(f, w)?;
    let npts = space.len();
    let r = 1.0 / n as f64;
    let net = greedy_net(npts, r, |i, j| cyl.dist(space, i, j));
    let near: Vec<usize> = net.iter().copied().filter(|&p| set.iter().any(|&s| cyl.dist(space, p, s) < r)).collect();
    let sample = BaseSample {
        space,
        base: (0..npts).collect(),
        transverse: cyl.transverse.clone(),
        metric,
    };
    let c = metric.cover_constant();
    let width = 2.0 * c / n as f64;
    let mut strips = Vec::new();
    if !near.is_empty() {
        let nodes: Vec<ChainNode> =
            near.iter().map(|&p| ChainNode::new(p, cyl.transverse[p].clone(), cyl.axial[p])).collect();
        let poset = ChainPoset::build(&nodes, delta, alpha, |a, b| space.dist(a, b), tol.min(1e-12))?;
        let position: Vec<usize> = poset.nodes().iter().map(|nd| nd.base).collect();
        for level in poset.mirsky_decompose() {
            let s = antichain_to_strip(&poset, &level, &sample, &position, width, tol)?;
            strips.push(s.shifted(-c / n as f64));
        }
    }
    let sorted = sort_strips(&strips)?;
    let atoms: Vec<Atom> = set.iter().map(|&s| Atom { base: s, t: cyl.axial[s], mass: space.weight(s) }).collect();
    let dj = disjointify(&sorted, &atoms, 1e-12)?;
    let tau_n = tau_approximate(&cyl.axial, &dj.strips, tol)?;
    let tau = cyl.axial.clone();

    let sup_error = tau.iter().zip(&tau_n).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let m_n = dj.strips.len();
    let bound = 3.0 * (1.0 + delta + 1.0 / alpha.tan()) * m_n as f64 / n as f64;
    let removed_total = dj.strips.iter().map(|s| s.thickness()).sum();

    let big_d = |i: usize, j: usize| metric.full(space.dist(i, j), sample.transverse_dist(i, j), cyl.axial[i] - cyl.axial[j]);
    let mut global_lip = 0.0f64;
    let mut violations = 0;
    for i in 0..npts {
        for j in (i + 1)..npts {
            let dtau = (tau_n[i] - tau_n[j]).abs();
            let dd = big_d(i, j);
            if dtau > dd + tol {
                violations += 1;
            }
            if dd > 0.0 {
                global_lip = global_lip.max(dtau / dd);
            } else if dtau > 0.0 {
                global_lip = f64::INFINITY;
            }
        }
    }

    let mut local = Vec::new();
    for &x in set {
        let Some(j) = dj.strips.iter().position(|s| s.contains(x, cyl.axial[x])) else { continue };
        let strip = &dj.strips[j];
        let radius = (0..npts)
            .filter(|&y| !strip.contains(y, cyl.axial[y]))
            .map(|y| big_d(x, y))
            .fold(f64::INFINITY, f64::min);
        let (mut constant, mut base_constant) = (0.0f64, 0.0f64);
        for y in 0..npts {
            if y == x || !strip.contains(y, cyl.axial[y]) || big_d(x, y) >= radius {
                continue;
            }
            let dtau = (tau_n[x] - tau_n[y]).abs();
            let dd = sample.d(x, y);
            if dd > 0.0 {
                constant = constant.max(dtau / dd);
            }
            let db = space.dist(x, y);
            if db > 0.0 {
                base_constant = base_constant.max(dtau / db);
            }
        }
        local.push(LocalLip { point_id: space.id(x).to_string(), point: x, strip: j, radius, constant, base_constant });
    }

    let extent = {
        let ts: Vec<f64> = set.iter().map(|&s| cyl.axial[s]).collect();
        let lo = ts.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = ts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if ts.is_empty() { 0.0 } else { hi - lo }
    };
    let chain_density = if extent > 0.0 { m_n as f64 / (n as f64 * extent) } else { 0.0 };
    let certificate = ApproxCertificate {
        m_n,
        n,
        width,
        sup_error,
        bound,
        removed_total,
        global_lip_d: global_lip,
        global_violations: violations,
        local_lip_report: local,
        net_size: net.len(),
        nodes_near_set: near.len(),
        set_mass: atoms.iter().map(|a| a.mass).sum(),
        covered_mass: dj.covered_after,
        boundary_mass: dj.boundary_mass,
        chain_density,
        non_null_suspected: chain_density >= NON_NULL_DENSITY,
        embedding: "identity (finite sample lifted directly to the cylinder)".into(),
        tol,
    };
    Ok(Approximation { tau, tau_n, strips: dj.strips, certificate })
}
