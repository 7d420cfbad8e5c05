//! Discrete curve fragments: a strictly increasing parameter list mapped to point
//! indices, with difference-quotient derivatives, cones and speed checks.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{dot, norm, transverse, VectorField};
use crate::space::FiniteMetricSpace;

/// Left and right quotients further apart than this (relative) are flagged.
pub const ASYMMETRY_FLAG: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FragmentError {
    #[error("fragment domain is empty")]
    EmptyDomain,
    #[error("domain has {domain} parameters but trace has {trace} points")]
    LengthMismatch { domain: usize, trace: usize },
    #[error("domain not strictly increasing at position {0}")]
    NotIncreasing(usize),
    #[error("non-finite parameter at position {0}")]
    NonFinite(usize),
    #[error("trace index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("derivative undefined on a single-point domain")]
    SinglePoint,
    #[error("trace points at positions {0} and {1} coincide")]
    CoincidentTrace(usize, usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("values given for {got} points, the space has {expected}")]
    ValueCount { expected: usize, got: usize },
    #[error("invalid cone: {0}")]
    BadCone(String),
    #[error("affine coefficient must be nonzero")]
    ZeroScale,
}

/// Backward and forward quotients at a trace point.
type OneSided = (Option<f64>, Option<f64>);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    domain: Vec<f64>,
    trace: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricDifferential {
    pub values: Vec<f64>,
    /// Positions where the left and right quotients differ by more than 10%.
    pub asymmetric: Vec<usize>,
}

impl Fragment {
    pub fn new(domain: Vec<f64>, trace: Vec<usize>) -> Result<Self, FragmentError> {
        if domain.is_empty() {
            return Err(FragmentError::EmptyDomain);
        }
        if domain.len() != trace.len() {
            return Err(FragmentError::LengthMismatch { domain: domain.len(), trace: trace.len() });
        }
        if let Some(i) = domain.iter().position(|t| !t.is_finite()) {
            return Err(FragmentError::NonFinite(i));
        }
        if let Some(i) = (1..domain.len()).find(|&i| domain[i] <= domain[i - 1]) {
            return Err(FragmentError::NotIncreasing(i));
        }
        Ok(Fragment { domain, trace })
    }

    /// Indices in range and no two trace points coincide, so the lower
    /// biLipschitz constant is positive.
    pub fn check_in(&self, space: &FiniteMetricSpace) -> Result<(), FragmentError> {
        self.check_indices(space)?;
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                if space.dist(self.trace[i], self.trace[j]) <= 0.0 {
                    return Err(FragmentError::CoincidentTrace(i, j));
                }
            }
        }
        Ok(())
    }

    pub fn check_indices(&self, space: &FiniteMetricSpace) -> Result<(), FragmentError> {
        match self.trace.iter().find(|&&p| p >= space.len()) {
            Some(&index) => Err(FragmentError::IndexOutOfRange { index, len: space.len() }),
            None => Ok(()),
        }
    }

    pub fn domain(&self) -> &[f64] {
        &self.domain
    }

    pub fn trace(&self) -> &[usize] {
        &self.trace
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.domain[0]
    }

    pub fn end(&self) -> f64 {
        self.domain[self.domain.len() - 1]
    }

    pub fn extent(&self) -> f64 {
        self.end() - self.start()
    }

    /// Position of point `p` on the trace, if it lies on it.
    pub fn position_of(&self, p: usize) -> Option<usize> {
        self.trace.iter().position(|&q| q == p)
    }

    /// The fragment with domain mapped by `t -> a t + b`; the order of the trace
    /// is reversed when `a < 0` so the domain stays increasing.
    pub fn affine_domain(&self, a: f64, b: f64) -> Result<Fragment, FragmentError> {
        if a == 0.0 || !a.is_finite() {
            return Err(FragmentError::ZeroScale);
        }
        let mut pairs: Vec<(f64, usize)> =
            self.domain.iter().zip(&self.trace).map(|(&t, &p)| (a * t + b, p)).collect();
        if a < 0.0 {
            pairs.reverse();
        }
        let (domain, trace) = pairs.into_iter().unzip();
        Fragment::new(domain, trace)
    }

    /// Shift of the domain so that it starts at `start`.
    pub fn placed_at(&self, start: f64) -> Fragment {
        let shift = start - self.start();
        Fragment { domain: self.domain.iter().map(|t| t + shift).collect(), trace: self.trace.clone() }
    }

    /// Parameter cell lengths: half-gaps to the neighbors.
    pub fn arc_weights(&self) -> Vec<f64> {
        let n = self.len();
        let t = &self.domain;
        (0..n)
            .map(|i| {
                let left = if i > 0 { (t[i] - t[i - 1]) / 2.0 } else { 0.0 };
                let right = if i + 1 < n { (t[i + 1] - t[i]) / 2.0 } else { 0.0 };
                left + right
            })
            .collect()
    }

    fn one_sided<F: Fn(usize, usize) -> f64>(&self, quotient: F) -> Result<Vec<OneSided>, FragmentError> {
        let n = self.len();
        if n < 2 {
            return Err(FragmentError::SinglePoint);
        }
        Ok((0..n)
            .map(|i| {
                let left = (i > 0).then(|| quotient(i - 1, i));
                let right = (i + 1 < n).then(|| quotient(i, i + 1));
                (left, right)
            })
            .collect())
    }

    fn mean(pair: (Option<f64>, Option<f64>)) -> f64 {
        match pair {
            (Some(l), Some(r)) => (l + r) / 2.0,
            (Some(x), None) | (None, Some(x)) => x,
            (None, None) => unreachable!("at least two domain points"),
        }
    }

    pub fn metric_differential_report(&self, space: &FiniteMetricSpace) -> Result<MetricDifferential, FragmentError> {
        self.check_indices(space)?;
        let (t, z) = (&self.domain, &self.trace);
        let sides = self.one_sided(|i, j| space.dist(z[i], z[j]) / (t[j] - t[i]))?;
        let asymmetric = sides
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match *s {
                (Some(l), Some(r)) if (l - r).abs() > ASYMMETRY_FLAG * l.max(r) => Some(i),
                _ => None,
            })
            .collect();
        Ok(MetricDifferential { values: sides.into_iter().map(Fragment::mean).collect(), asymmetric })
    }

    /// Mean of the one-sided distance quotients at each parameter.
    pub fn metric_differential(&self, space: &FiniteMetricSpace) -> Result<Vec<f64>, FragmentError> {
        Ok(self.metric_differential_report(space)?.values)
    }

    /// `(f o gamma)'` at each parameter, componentwise, by the same scheme.
    /// `values` is indexed by point index.
    pub fn derivative(&self, values: &VectorField) -> Result<VectorField, FragmentError> {
        if let Some(&index) = self.trace.iter().find(|&&p| p >= values.len()) {
            return Err(FragmentError::IndexOutOfRange { index, len: values.len() });
        }
        if self.len() < 2 {
            return Err(FragmentError::SinglePoint);
        }
        let q = values.dim();
        let mut out = VectorField::zeros(self.len(), q);
        for k in 0..q {
            let (t, z) = (&self.domain, &self.trace);
            let sides = self.one_sided(|i, j| (values.row(z[j])[k] - values.row(z[i])[k]) / (t[j] - t[i]))?;
            for (i, s) in sides.into_iter().enumerate() {
                out.row_mut(i)[k] = Fragment::mean(s);
            }
        }
        Ok(out)
    }

    pub fn scalar_derivative(&self, values: &[f64]) -> Result<Vec<f64>, FragmentError> {
        if let Some(&index) = self.trace.iter().find(|&&p| p >= values.len()) {
            return Err(FragmentError::IndexOutOfRange { index, len: values.len() });
        }
        let (t, z) = (&self.domain, &self.trace);
        let sides = self.one_sided(|i, j| (values[z[j]] - values[z[i]]) / (t[j] - t[i]))?;
        Ok(sides.into_iter().map(Fragment::mean).collect())
    }

    /// `(l, L)`: min and max of `d(gamma(s), gamma(t)) / |s - t|` over all pairs.
    pub fn bilipschitz_constants(&self, space: &FiniteMetricSpace) -> Result<(f64, f64), FragmentError> {
        self.check_indices(space)?;
        if self.len() < 2 {
            return Err(FragmentError::SinglePoint);
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let q = space.dist(self.trace[i], self.trace[j]) / (self.domain[j] - self.domain[i]);
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        Ok((lo, hi))
    }
}

/// The cone `C(w, alpha)`: directions `u` with `tan(alpha) <w,u> > |u - <w,u> w|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    axis: Vec<f64>,
    angle: f64,
    open: bool,
}

impl ConeSpec {
    pub fn new(axis: Vec<f64>, angle: f64, open: bool, tol: f64) -> Result<Self, FragmentError> {
        if axis.is_empty() {
            return Err(FragmentError::BadCone("empty axis".into()));
        }
        let n = norm(&axis);
        if !n.is_finite() || (n - 1.0).abs() > tol {
            return Err(FragmentError::BadCone(format!("axis norm {n} is not 1")));
        }
        if !(angle > 0.0 && angle < std::f64::consts::FRAC_PI_2) {
            return Err(FragmentError::BadCone(format!("angle {angle} outside (0, pi/2)")));
        }
        Ok(ConeSpec { axis, angle, open })
    }

    /// Like `new`, rescaling the axis to unit length first.
    pub fn normalized(axis: Vec<f64>, angle: f64, open: bool) -> Result<Self, FragmentError> {
        let n = norm(&axis);
        if !(n > 0.0) || !n.is_finite() {
            return Err(FragmentError::BadCone("zero axis".into()));
        }
        ConeSpec::new(axis.iter().map(|x| x / n).collect(), angle, open, 1e-12)
    }

    pub fn axis(&self) -> &[f64] {
        &self.axis
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn is_open(&self) -> bool {
        self.open
    }

    pub fn dim(&self) -> usize {
        self.axis.len()
    }

    pub fn closed(&self) -> ConeSpec {
        ConeSpec { open: false, ..self.clone() }
    }

    pub fn flipped(&self) -> ConeSpec {
        ConeSpec { axis: self.axis.iter().map(|x| -x).collect(), ..self.clone() }
    }

    /// Open cones: strict inequality with a `tol` margin. Closed cones: the
    /// inequality relaxed by `tol`.
    pub fn contains(&self, u: &[f64], tol: f64) -> Result<bool, FragmentError> {
        if u.len() != self.axis.len() {
            return Err(FragmentError::DimensionMismatch { expected: self.axis.len(), got: u.len() });
        }
        let lhs = self.angle.tan() * dot(&self.axis, u);
        let rhs = if u.len() == 1 { 0.0 } else { norm(&transverse(u, &self.axis)) };
        Ok(if self.open { lhs > rhs + tol } else { lhs >= rhs - tol })
    }
}

/// One cone per point; constant by default.
#[derive(Clone, Debug, PartialEq)]
pub enum ConeField {
    Constant(ConeSpec),
    PerPoint(Vec<ConeSpec>),
}

impl ConeField {
    pub fn at(&self, i: usize) -> &ConeSpec {
        match self {
            ConeField::Constant(c) => c,
            ConeField::PerPoint(v) => &v[i],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConeField::Constant(c) => c.dim(),
            ConeField::PerPoint(v) => v.first().map(|c| c.dim()).unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionSpeedReport {
    pub direction: Vec<bool>,
    pub speed: Vec<bool>,
    /// ArcWeights fraction of the domain where the direction test passes.
    pub direction_fraction: f64,
    pub speed_fraction: f64,
    pub joint_fraction: f64,
}

impl DirectionSpeedReport {
    /// Both tests pass on at least a `1 - eta` fraction of the domain mass.
    pub fn certifies(&self, eta: f64) -> bool {
        self.joint_fraction >= 1.0 - eta
    }
}

/// Direction membership of `(f o gamma)'` in the cone at each trace point and the
/// speed test `(g o gamma)' >= delta * md - tol`.
pub fn check_direction_speed(
    fragment: &Fragment,
    space: &FiniteMetricSpace,
    f: &VectorField,
    cones: &ConeField,
    delta: f64,
    g: &[f64],
    tol: f64,
) -> Result<DirectionSpeedReport, FragmentError> {
    let df = fragment.derivative(f)?;
    let dg = fragment.scalar_derivative(g)?;
    let md = fragment.metric_differential(space)?;
    let mut direction = Vec::with_capacity(fragment.len());
    for i in 0..fragment.len() {
        direction.push(cones.at(fragment.trace()[i]).contains(df.row(i), tol)?);
    }
    let speed: Vec<bool> = dg.iter().zip(&md).map(|(d, m)| *d >= delta * m - tol).collect();
    let w = fragment.arc_weights();
    let total: f64 = w.iter().sum();
    let frac = |mask: &dyn Fn(usize) -> bool| {
        if total > 0.0 {
            (0..w.len()).filter(|&i| mask(i)).map(|i| w[i]).sum::<f64>() / total
        } else {
            0.0
        }
    };
    let direction_fraction = frac(&|i| direction[i]);
    let speed_fraction = frac(&|i| speed[i]);
    let joint_fraction = frac(&|i| direction[i] && speed[i]);
    Ok(DirectionSpeedReport { direction, speed, direction_fraction, speed_fraction, joint_fraction })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{grid, DistSpec, Metric, Point, DEFAULT_TOL};
    use std::f64::consts::FRAC_PI_4;

    fn plane(coords: &[(f64, f64)]) -> FiniteMetricSpace {
        let pts = coords.iter().enumerate().map(|(i, &(x, y))| Point::new(i.to_string(), vec![x, y])).collect();
        FiniteMetricSpace::build(pts, DistSpec::Euclidean, vec![1.0; coords.len()], DEFAULT_TOL).unwrap()
    }

    #[test]
    fn structural_errors() {
        assert_eq!(Fragment::new(vec![], vec![]), Err(FragmentError::EmptyDomain));
        assert_eq!(Fragment::new(vec![0.0, 0.0], vec![0, 1]), Err(FragmentError::NotIncreasing(1)));
        assert!(matches!(Fragment::new(vec![0.0], vec![0, 1]), Err(FragmentError::LengthMismatch { .. })));
    }

    #[test]
    fn metric_differential_of_a_line() {
        let s = plane(&(0..5).map(|i| (2.0 * i as f64 / 4.0, 0.0)).collect::<Vec<_>>());
        let frag = Fragment::new((0..5).map(|i| i as f64 / 4.0).collect(), (0..5).collect()).unwrap();
        assert!(frag.metric_differential(&s).unwrap().iter().all(|&m| m == 2.0));
        let single = Fragment::new(vec![0.0], vec![0]).unwrap();
        assert_eq!(single.metric_differential(&s), Err(FragmentError::SinglePoint));
    }

    #[test]
    fn quarter_circle_is_nearly_unit_speed() {
        let h = 0.01;
        let n = (std::f64::consts::FRAC_PI_2 / h) as usize;
        let s = plane(&(0..=n).map(|i| ((i as f64 * h).cos(), (i as f64 * h).sin())).collect::<Vec<_>>());
        let frag = Fragment::new((0..=n).map(|i| i as f64 * h).collect(), (0..=n).collect()).unwrap();
        let md = frag.metric_differential_report(&s).unwrap();
        assert!(md.values.iter().all(|&m| (1.0 - 10.0 * h..=1.0 + 10.0 * h).contains(&m)));
        assert!(md.asymmetric.is_empty());
    }

    #[test]
    fn asymmetric_quotients_are_flagged() {
        let s = plane(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)]);
        let frag = Fragment::new(vec![0.0, 1.0, 2.0], vec![0, 1, 2]).unwrap();
        let md = frag.metric_differential_report(&s).unwrap();
        assert_eq!(md.values, vec![1.0, 1.5, 2.0]);
        assert_eq!(md.asymmetric, vec![1]);
    }

    #[test]
    fn derivative_examples() {
        let h = 0.125;
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * h).collect();
        let frag = Fragment::new(xs.clone(), (0..9).collect()).unwrap();
        let lin = VectorField::scalar(&xs.iter().map(|x| 3.0 * x + 1.0).collect::<Vec<_>>()).unwrap();
        assert!(frag.derivative(&lin).unwrap().data().iter().all(|&d| d == 3.0));
        let c = VectorField::scalar(&[2.0; 9]).unwrap();
        assert!(frag.derivative(&c).unwrap().data().iter().all(|&d| d == 0.0));
        let sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let d = frag.scalar_derivative(&sq).unwrap();
        for i in 1..8 {
            assert_eq!(d[i], 2.0 * xs[i]);
        }
    }

    #[test]
    fn arc_weights_total_extent() {
        let frag = Fragment::new(vec![0.0, 0.5, 2.0, 2.25], vec![0, 1, 2, 3]).unwrap();
        let w = frag.arc_weights();
        assert_eq!(w, vec![0.25, 1.0, 0.875, 0.125]);
        assert_eq!(w.iter().sum::<f64>(), frag.extent());
    }

    #[test]
    fn cone_examples() {
        let c = ConeSpec::new(vec![0.0, 1.0], 0.3, true, 1e-12).unwrap();
        assert!(c.contains(&[0.0, 1.0], 0.0).unwrap());
        assert!(!c.contains(&[1.0, 0.0], 0.0).unwrap());
        assert!(matches!(c.contains(&[1.0], 0.0), Err(FragmentError::DimensionMismatch { .. })));
        let scalar = ConeSpec::new(vec![1.0], 0.2, true, 1e-12).unwrap();
        assert!(scalar.contains(&[0.5], 0.0).unwrap());
        assert!(!scalar.contains(&[-0.5], 0.0).unwrap());
        assert!(!scalar.contains(&[0.0], 0.0).unwrap());
        assert!(ConeSpec::new(vec![1.0, 1.0], 0.3, true, 1e-9).is_err());
        assert!(ConeSpec::new(vec![1.0], 1.6, true, 1e-9).is_err());
    }

    #[test]
    fn cone_directions_stay_near_axis() {
        for &alpha in &[0.1, 0.5, 1.0, 1.4] {
            let c = ConeSpec::new(vec![1.0, 0.0], alpha, true, 1e-12).unwrap();
            for k in 0..720 {
                let th = k as f64 * std::f64::consts::PI / 360.0;
                let u = [th.cos(), th.sin()];
                if c.contains(&u, 0.0).unwrap() {
                    let d = ((u[0] - 1.0).powi(2) + u[1] * u[1]).sqrt();
                    assert!(d <= (1.0 - alpha.cos()) + alpha.sin() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn bilipschitz_examples() {
        let s = plane(&[(0.0, 0.0), (0.5, 0.3), (1.0, 0.0)]);
        let frag = Fragment::new(vec![0.0, 0.5, 1.0], vec![0, 1, 2]).unwrap();
        let (l, big) = frag.bilipschitz_constants(&s).unwrap();
        let q = (0.25f64 + 0.09).sqrt() / 0.5;
        assert!((big - q).abs() < 1e-12 && (big - 1.166).abs() < 1e-3);
        assert_eq!(l, 1.0);
        let twice = frag.affine_domain(2.0, 0.0).unwrap();
        let (l2, big2) = twice.bilipschitz_constants(&s).unwrap();
        assert_eq!((l2, big2), (l / 2.0, big / 2.0));
    }

    #[test]
    fn column_direction_and_speed() {
        let g = grid(2, 5, Metric::Euclidean).unwrap();
        // Column x = 0: indices 0..5, y = i/4.
        let frag = Fragment::new((0..5).map(|i| i as f64 / 4.0).collect(), (0..5).collect()).unwrap();
        let f = VectorField::from_rows(&(0..g.len()).map(|i| g.coords(i).unwrap().to_vec()).collect::<Vec<_>>()).unwrap();
        let y = f.component(1);
        let up = ConeField::Constant(ConeSpec::new(vec![0.0, 1.0], FRAC_PI_4, true, 1e-12).unwrap());
        let r = check_direction_speed(&frag, &g, &f, &up, 0.5, &y, DEFAULT_TOL).unwrap();
        assert_eq!(r.joint_fraction, 1.0);
        let side = ConeField::Constant(ConeSpec::new(vec![1.0, 0.0], FRAC_PI_4, true, 1e-12).unwrap());
        let r = check_direction_speed(&frag, &g, &f, &side, 0.5, &y, DEFAULT_TOL).unwrap();
        assert_eq!(r.direction_fraction, 0.0);
        let flat = vec![1.0; g.len()];
        let r = check_direction_speed(&frag, &g, &f, &up, 0.0, &flat, 0.0).unwrap();
        assert_eq!(r.speed_fraction, 1.0);
        let r = check_direction_speed(&frag, &g, &f, &up, 0.1, &flat, 0.0).unwrap();
        assert_eq!(r.speed_fraction, 0.0);
    }
}
