//! Finite metric measure spaces, greedy nets, restriction and covering-count
//! dimension estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default tolerance for geometric predicates. Callers pass it explicitly.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Above this many points the triangle inequality is sampled instead of checked in full.
pub const FULL_TRIANGLE_LIMIT: usize = 500;
pub const SAMPLED_TRIPLES: usize = 10_000;
const TRIANGLE_SEED: u64 = 0x7d1a_5eed;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error("space has no points")]
    Empty,
    #[error("distance matrix is not square: {rows} rows but row {row} has {len} entries")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("asymmetric distance between points {i} and {j}: d({i},{j}) = {dij}, d({j},{i}) = {dji}")]
    Asymmetric { i: usize, j: usize, dij: f64, dji: f64 },
    #[error("negative distance {d} between points {i} and {j}")]
    NegativeDistance { i: usize, j: usize, d: f64 },
    #[error("nonzero self-distance {d} at point {i}")]
    NonzeroDiagonal { i: usize, d: f64 },
    #[error("triangle inequality fails on ({i}, {j}, {k}): d({i},{k}) = {dik} > d({i},{j}) + d({j},{k}) = {sum}")]
    Triangle { i: usize, j: usize, k: usize, dik: f64, sum: f64 },
    #[error("negative weight {w} at point {i}")]
    NegativeWeight { i: usize, w: f64 },
    #[error("non-finite {what} at point {i}")]
    NonFinite { what: &'static str, i: usize },
    #[error("point {i} has {got} coordinates, expected {expected}")]
    Dimension { i: usize, got: usize, expected: usize },
    #[error("point {i} has no coordinates but the metric is coordinate-based")]
    MissingCoords { i: usize },
    #[error("{points} points but {weights} weights")]
    WeightCount { points: usize, weights: usize },
    #[error("empty subset")]
    EmptySubset,
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("index {0} repeated in subset")]
    DuplicateIndex(usize),
    #[error("empty scale list")]
    EmptyScales,
    #[error("invalid scale pair ({big}, {small}): need 0 < small < big")]
    BadScalePair { big: f64, small: f64 },
    #[error("net separation must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("bad generator parameters: {0}")]
    Generator(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<f64>>,
}

impl Point {
    pub fn new(id: impl Into<String>, coords: Vec<f64>) -> Self {
        Point { id: id.into(), coords: Some(coords) }
    }

    pub fn bare(id: impl Into<String>) -> Self {
        Point { id: id.into(), coords: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Max,
    Matrix,
}

/// How distances are obtained when building a space.
#[derive(Clone, Debug, PartialEq)]
pub enum DistSpec {
    Euclidean,
    Max,
    Matrix(Vec<Vec<f64>>),
}

/// A finite point set with a metric and a nonnegative measure.
///
/// Immutable after construction; every constructor validates.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    points: Vec<Point>,
    metric: Metric,
    matrix: Option<Vec<f64>>,
    weights: Vec<f64>,
}

impl FiniteMetricSpace {
    pub fn build(
        points: Vec<Point>,
        spec: DistSpec,
        weights: Vec<f64>,
        tol: f64,
    ) -> Result<Self, SpaceError> {
        if points.is_empty() {
            return Err(SpaceError::Empty);
        }
        if weights.len() != points.len() {
            return Err(SpaceError::WeightCount { points: points.len(), weights: weights.len() });
        }
        let n = points.len();
        let (metric, matrix) = match spec {
            DistSpec::Euclidean | DistSpec::Max => {
                let dim = match &points[0].coords {
                    Some(c) => c.len(),
                    None => return Err(SpaceError::MissingCoords { i: 0 }),
                };
                for (i, p) in points.iter().enumerate() {
                    let c = p.coords.as_ref().ok_or(SpaceError::MissingCoords { i })?;
                    if c.len() != dim {
                        return Err(SpaceError::Dimension { i, got: c.len(), expected: dim });
                    }
                    if c.iter().any(|x| !x.is_finite()) {
                        return Err(SpaceError::NonFinite { what: "coordinate", i });
                    }
                }
                let m = if matches!(spec, DistSpec::Euclidean) { Metric::Euclidean } else { Metric::Max };
                (m, None)
            }
            DistSpec::Matrix(rows) => {
                if rows.len() != n {
                    return Err(SpaceError::NotSquare { rows: rows.len(), row: 0, len: n });
                }
                let mut flat = Vec::with_capacity(n * n);
                for (r, row) in rows.iter().enumerate() {
                    if row.len() != n {
                        return Err(SpaceError::NotSquare { rows: n, row: r, len: row.len() });
                    }
                    flat.extend_from_slice(row);
                }
                (Metric::Matrix, Some(flat))
            }
        };
        let space = FiniteMetricSpace { points, metric, matrix, weights };
        space.validate(tol)?;
        Ok(space)
    }

    /// Builds from a flat row-major distance matrix.
    pub fn from_flat_matrix(
        points: Vec<Point>,
        flat: Vec<f64>,
        weights: Vec<f64>,
        tol: f64,
    ) -> Result<Self, SpaceError> {
        let n = points.len();
        if n == 0 {
            return Err(SpaceError::Empty);
        }
        if flat.len() != n * n {
            return Err(SpaceError::NotSquare { rows: n, row: 0, len: flat.len() / n.max(1) });
        }
        if weights.len() != n {
            return Err(SpaceError::WeightCount { points: n, weights: weights.len() });
        }
        let space = FiniteMetricSpace { points, metric: Metric::Matrix, matrix: Some(flat), weights };
        space.validate(tol)?;
        Ok(space)
    }

    pub fn validate(&self, tol: f64) -> Result<(), SpaceError> {
        let n = self.len();
        for (i, &w) in self.weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(SpaceError::NonFinite { what: "weight", i });
            }
            if w < 0.0 {
                return Err(SpaceError::NegativeWeight { i, w });
            }
        }
        // Norm metrics are symmetric and satisfy the triangle inequality by construction.
        if self.metric != Metric::Matrix {
            return Ok(());
        }
        for i in 0..n {
            let d = self.dist(i, i);
            if !d.is_finite() {
                return Err(SpaceError::NonFinite { what: "distance", i });
            }
            if d.abs() > tol {
                return Err(SpaceError::NonzeroDiagonal { i, d });
            }
            for j in (i + 1)..n {
                let (dij, dji) = (self.dist(i, j), self.dist(j, i));
                if !dij.is_finite() || !dji.is_finite() {
                    return Err(SpaceError::NonFinite { what: "distance", i });
                }
                if dij < -tol || dji < -tol {
                    let d = if dij < dji { dij } else { dji };
                    return Err(SpaceError::NegativeDistance { i, j, d });
                }
                if (dij - dji).abs() > tol {
                    return Err(SpaceError::Asymmetric { i, j, dij, dji });
                }
            }
        }
        self.check_triangle(tol)
    }

    fn check_triangle(&self, tol: f64) -> Result<(), SpaceError> {
        let n = self.len();
        let check = |i: usize, j: usize, k: usize| {
            let dik = self.dist(i, k);
            let sum = self.dist(i, j) + self.dist(j, k);
            if dik > sum + tol {
                Err(SpaceError::Triangle { i, j, k, dik, sum })
            } else {
                Ok(())
            }
        };
        if n <= FULL_TRIANGLE_LIMIT {
            for i in 0..n {
                for k in (i + 1)..n {
                    for j in 0..n {
                        check(i, j, k)?;
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(TRIANGLE_SEED);
            for _ in 0..SAMPLED_TRIPLES {
                let (i, j, k) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                check(i, j, k)?;
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn id(&self, i: usize) -> &str {
        &self.points[i].id
    }

    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        self.points[i].coords.as_deref()
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match self.metric {
            Metric::Matrix => self.matrix.as_ref().expect("matrix metric")[i * self.len() + j],
            Metric::Euclidean => {
                let (a, b) = (self.coord_row(i), self.coord_row(j));
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            Metric::Max => {
                let (a, b) = (self.coord_row(i), self.coord_row(j));
                a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
            }
        }
    }

    #[inline]
    fn coord_row(&self, i: usize) -> &[f64] {
        self.points[i].coords.as_deref().expect("coordinate metric")
    }

    /// Full row-major matrix, computed if the metric is coordinate-based.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n).map(|i| (0..n).map(|j| self.dist(i, j)).collect()).collect()
    }

    pub fn diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Distance from point `i` to a set of indices (infinite for an empty set).
    pub fn dist_to_set(&self, i: usize, set: &[usize]) -> f64 {
        set.iter().map(|&s| self.dist(i, s)).fold(f64::INFINITY, f64::min)
    }

    /// Same points and metric, new weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self, SpaceError> {
        if weights.len() != self.len() {
            return Err(SpaceError::WeightCount { points: self.len(), weights: weights.len() });
        }
        let mut out = self.clone();
        out.weights = weights;
        out.validate_weights()?;
        Ok(out)
    }

    fn validate_weights(&self) -> Result<(), SpaceError> {
        for (i, &w) in self.weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(SpaceError::NonFinite { what: "weight", i });
            }
            if w < 0.0 {
                return Err(SpaceError::NegativeWeight { i, w });
            }
        }
        Ok(())
    }

    /// Induced subspace on `subset` (in the given order), weights kept as they are.
    pub fn restrict(&self, subset: &[usize]) -> Result<Self, SpaceError> {
        if subset.is_empty() {
            return Err(SpaceError::EmptySubset);
        }
        let n = self.len();
        let mut seen = vec![false; n];
        for &i in subset {
            if i >= n {
                return Err(SpaceError::IndexOutOfRange { index: i, len: n });
            }
            if seen[i] {
                return Err(SpaceError::DuplicateIndex(i));
            }
            seen[i] = true;
        }
        let points = subset.iter().map(|&i| self.points[i].clone()).collect();
        let weights = subset.iter().map(|&i| self.weights[i]).collect();
        let matrix = self.matrix.as_ref().map(|_| {
            let m = subset.len();
            let mut flat = Vec::with_capacity(m * m);
            for &i in subset {
                for &j in subset {
                    flat.push(self.dist(i, j));
                }
            }
            flat
        });
        Ok(FiniteMetricSpace { points, metric: self.metric, matrix, weights })
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p.id == id)
    }
}

/// `side^dim` points of the uniform grid on `[0,1]^dim`, total mass 1.
pub fn grid(dim: usize, side: usize, metric: Metric) -> Result<FiniteMetricSpace, SpaceError> {
    if dim == 0 || side < 2 {
        return Err(SpaceError::Generator(format!("grid needs dim >= 1 and side >= 2, got dim={dim}, side={side}")));
    }
    if metric == Metric::Matrix {
        return Err(SpaceError::Generator("grid uses a coordinate metric".into()));
    }
    let total = side.checked_pow(dim as u32).ok_or_else(|| SpaceError::Generator("grid too large".into()))?;
    let step = (side - 1) as f64;
    let mut points = Vec::with_capacity(total);
    for flat in 0..total {
        // Row-major: the last coordinate varies fastest.
        let mut rem = flat;
        let mut idx = vec![0usize; dim];
        for k in (0..dim).rev() {
            idx[k] = rem % side;
            rem /= side;
        }
        let coords = idx.iter().map(|&c| c as f64 / step).collect();
        let id = idx.iter().map(|c| c.to_string()).collect::<Vec<_>>().join("_");
        points.push(Point::new(format!("g{id}"), coords));
    }
    let w = 1.0 / total as f64;
    let spec = if metric == Metric::Euclidean { DistSpec::Euclidean } else { DistSpec::Max };
    FiniteMetricSpace::build(points, spec, vec![w; total], DEFAULT_TOL)
}

/// `n` equispaced points on `[0,1]`, total mass 1.
pub fn segment(n: usize) -> Result<FiniteMetricSpace, SpaceError> {
    if n < 2 {
        return Err(SpaceError::Generator(format!("segment needs n >= 2, got {n}")));
    }
    let points = (0..n).map(|i| Point::new(format!("s{i}"), vec![i as f64 / (n - 1) as f64])).collect();
    FiniteMetricSpace::build(points, DistSpec::Euclidean, vec![1.0 / n as f64; n], DEFAULT_TOL)
}

/// Numerators (over `3^level`) of the endpoints of the level-`level` middle-thirds
/// intervals, ascending. There are `2^(level+1)` of them.
pub fn cantor_numerators(level: u32) -> Vec<u64> {
    let mut lefts = vec![0u64];
    for _ in 0..level {
        lefts = lefts.iter().flat_map(|&a| [3 * a, 3 * a + 2]).collect();
    }
    let mut out: Vec<u64> = lefts.iter().flat_map(|&a| [a, a + 1]).collect();
    out.sort_unstable();
    out
}

/// Endpoints of the level-`level` middle-thirds intervals with uniform weights.
pub fn cantor(level: u32) -> Result<FiniteMetricSpace, SpaceError> {
    if level > 20 {
        return Err(SpaceError::Generator(format!("cantor level {level} too deep")));
    }
    let den = 3u64.pow(level) as f64;
    let nums = cantor_numerators(level);
    let n = nums.len();
    let points = nums.iter().map(|&a| Point::new(format!("c{a}"), vec![a as f64 / den])).collect();
    FiniteMetricSpace::build(points, DistSpec::Euclidean, vec![1.0 / n as f64; n], DEFAULT_TOL)
}

/// The triadic grid `{i/3^level}` on `[0,1]` with uniform weights, together with the
/// indices of the level-`level` Cantor endpoints (all of which are grid points).
pub fn triadic_with_cantor(level: u32) -> Result<(FiniteMetricSpace, Vec<usize>), SpaceError> {
    if level > 12 {
        return Err(SpaceError::Generator(format!("triadic level {level} too deep")));
    }
    let side = 3usize.pow(level) + 1;
    let space = segment(side)?;
    let subset = cantor_numerators(level).into_iter().map(|a| a as usize).collect();
    Ok((space, subset))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub eps: f64,
    pub members: Vec<usize>,
}

/// Greedy maximal `eps`-separated subset of `0..n` under `dist`, scanning in
/// ascending index order.
pub fn greedy_net(n: usize, eps: f64, dist: impl Fn(usize, usize) -> f64) -> Vec<usize> {
    let mut members: Vec<usize> = Vec::new();
    for i in 0..n {
        if members.iter().all(|&m| dist(i, m) >= eps) {
            members.push(i);
        }
    }
    members
}

pub fn build_net(space: &FiniteMetricSpace, eps: f64) -> Result<Net, SpaceError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(SpaceError::BadEpsilon(eps));
    }
    Ok(Net { eps, members: greedy_net(space.len(), eps, |i, j| space.dist(i, j)) })
}

impl Net {
    /// Members pairwise at least `eps` apart.
    pub fn is_separated(&self, space: &FiniteMetricSpace) -> bool {
        self.members.iter().enumerate().all(|(a, &i)| {
            self.members[a + 1..].iter().all(|&j| space.dist(i, j) >= self.eps)
        })
    }

    /// Every point within `eps` (strictly) of some member.
    pub fn is_maximal(&self, space: &FiniteMetricSpace) -> bool {
        (0..space.len()).all(|i| self.members.iter().any(|&m| space.dist(i, m) < self.eps))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverCount {
    pub center: usize,
    pub big: f64,
    pub small: f64,
    pub count: usize,
    pub exponent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssouadEstimate {
    pub estimate: f64,
    pub table: Vec<CoverCount>,
}

/// `count` dyadic pairs `(N, N/2)` with `N = top, top/2, ...`.
pub fn dyadic_scale_pairs(top: f64, count: usize) -> Vec<(f64, f64)> {
    (0..count)
        .map(|k| {
            let big = top / 2f64.powi(k as i32);
            (big, big / 2.0)
        })
        .collect()
}

/// Covering-count exponent estimate.
///
/// For each pair `(N, r)` and each center `x`, the sampled set is the closed ball
/// of radius `N/2` (diameter at most `N`); its count at scale `r` is the size of a
/// greedy maximal subset with pairwise distances `> r`. The estimate is the largest
/// `log(count) / log(N/r)` over the table.
pub fn estimate_assouad(
    space: &FiniteMetricSpace,
    pairs: &[(f64, f64)],
) -> Result<AssouadEstimate, SpaceError> {
    if pairs.is_empty() {
        return Err(SpaceError::EmptyScales);
    }
    for &(big, small) in pairs {
        if !(small > 0.0 && small < big && big.is_finite()) {
            return Err(SpaceError::BadScalePair { big, small });
        }
    }
    let n = space.len();
    let mut table = Vec::with_capacity(pairs.len() * n);
    let mut estimate = 0.0f64;
    for &(big, small) in pairs {
        for x in 0..n {
            let mut picked: Vec<usize> = Vec::new();
            for y in 0..n {
                if space.dist(x, y) <= big / 2.0 && picked.iter().all(|&p| space.dist(p, y) > small) {
                    picked.push(y);
                }
            }
            let count = picked.len();
            let exponent = (count as f64).ln() / (big / small).ln();
            estimate = estimate.max(exponent);
            table.push(CoverCount { center: x, big, small, count, exponent });
        }
    }
    Ok(AssouadEstimate { estimate, table })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> FiniteMetricSpace {
        let pts = xs.iter().enumerate().map(|(i, &x)| Point::new(i.to_string(), vec![x])).collect();
        FiniteMetricSpace::build(pts, DistSpec::Euclidean, vec![1.0; xs.len()], DEFAULT_TOL).unwrap()
    }

    #[test]
    fn two_point_space() {
        let s = FiniteMetricSpace::build(
            vec![Point::bare("a"), Point::bare("b")],
            DistSpec::Matrix(vec![vec![0.0, 1.0], vec![1.0, 0.0]]),
            vec![1.0, 1.0],
            DEFAULT_TOL,
        )
        .unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.dist(0, 1), 1.0);
        assert_eq!(s.mass(), 2.0);
    }

    #[test]
    fn asymmetry_names_the_pair() {
        let err = FiniteMetricSpace::build(
            vec![Point::bare("a"), Point::bare("b")],
            DistSpec::Matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]),
            vec![1.0, 1.0],
            DEFAULT_TOL,
        )
        .unwrap_err();
        assert!(matches!(err, SpaceError::Asymmetric { i: 0, j: 1, .. }), "{err}");
    }

    #[test]
    fn matrix_errors() {
        let pts = || vec![Point::bare("a"), Point::bare("b"), Point::bare("c")];
        let neg = FiniteMetricSpace::build(
            pts(),
            DistSpec::Matrix(vec![vec![0.0, -1.0, 1.0], vec![-1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]),
            vec![1.0; 3],
            DEFAULT_TOL,
        );
        assert!(matches!(neg, Err(SpaceError::NegativeDistance { i: 0, j: 1, .. })));
        let tri = FiniteMetricSpace::build(
            pts(),
            DistSpec::Matrix(vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![3.0, 1.0, 0.0]]),
            vec![1.0; 3],
            DEFAULT_TOL,
        );
        assert!(matches!(tri, Err(SpaceError::Triangle { i: 0, j: 1, k: 2, .. })));
        let w = FiniteMetricSpace::build(pts(), DistSpec::Matrix(vec![vec![0.0; 3]; 3]), vec![1.0, -0.5, 1.0], DEFAULT_TOL);
        assert!(matches!(w, Err(SpaceError::NegativeWeight { i: 1, .. })));
    }

    #[test]
    fn grid_generator() {
        let g = grid(2, 4, Metric::Euclidean).unwrap();
        assert_eq!(g.len(), 16);
        assert!((g.mass() - 1.0).abs() < 1e-15);
        assert_eq!(g.coords(5).unwrap(), &[1.0 / 3.0, 1.0 / 3.0]);
    }

    #[test]
    fn cantor_generator() {
        let c = cantor(2).unwrap();
        assert_eq!(c.len(), 8);
        let xs: Vec<f64> = (0..8).map(|i| c.coords(i).unwrap()[0] * 9.0).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0, 3.0, 6.0, 7.0, 8.0, 9.0]);
    }

    #[test]
    fn net_examples() {
        let s = line(&(0..=10).map(|i| i as f64 / 10.0).collect::<Vec<_>>());
        let net = build_net(&s, 0.25).unwrap();
        assert_eq!(net.members, vec![0, 3, 6, 9]);
        assert!(net.is_separated(&s) && net.is_maximal(&s));
        assert_eq!(build_net(&s, 5.0).unwrap().members, vec![0]);
        assert_eq!(build_net(&s, 0.05).unwrap().members.len(), 11);
        assert!(build_net(&s, 0.0).is_err());
    }

    #[test]
    fn assouad_examples() {
        let single = line(&[0.5]);
        assert_eq!(estimate_assouad(&single, &[(1.0, 0.5)]).unwrap().estimate, 0.0);
        assert!(matches!(estimate_assouad(&single, &[]), Err(SpaceError::EmptyScales)));

        let s = segment(101).unwrap();
        let e = estimate_assouad(&s, &dyadic_scale_pairs(1.0, 4)).unwrap().estimate;
        assert!((0.8..=1.2).contains(&e), "{e}");

        let g = grid(2, 32, Metric::Max).unwrap();
        let e = estimate_assouad(&g, &dyadic_scale_pairs(1.0, 4)).unwrap().estimate;
        assert!((1.7..=2.3).contains(&e), "{e}");
    }

    #[test]
    fn restrict_examples() {
        let g = grid(2, 4, Metric::Euclidean).unwrap();
        let all: Vec<usize> = (0..16).collect();
        assert_eq!(g.restrict(&all).unwrap(), g);
        // Column x = 0 is indices 0..4 in row-major order.
        let col = g.restrict(&[0, 1, 2, 3]).unwrap();
        for i in 0..3 {
            assert!((col.dist(i, i + 1) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((col.mass() - 4.0 / 16.0).abs() < 1e-15);
        assert!(matches!(g.restrict(&[]), Err(SpaceError::EmptySubset)));
        assert!(matches!(g.restrict(&[1, 1]), Err(SpaceError::DuplicateIndex(1))));
    }

    #[test]
    fn large_matrix_uses_sampled_triangle_check() {
        let n = FULL_TRIANGLE_LIMIT + 10;
        let pts = (0..n).map(|i| Point::bare(i.to_string())).collect();
        let flat = (0..n * n).map(|k| ((k / n) as f64 - (k % n) as f64).abs()).collect();
        assert!(FiniteMetricSpace::from_flat_matrix(pts, flat, vec![1.0; n], DEFAULT_TOL).is_ok());
    }
}
