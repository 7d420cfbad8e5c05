//! Truncation of Lipschitz functions near a set and the construction of
//! independent Lipschitz functions from a family of flat functions, in exact
//! arithmetic on 1-D samples.
//!
//! Points are rationals `num / den` with a shared denominator; values are
//! `BigRational`. Pair audits bring values to a common denominator and compare
//! integers, so every certificate is exact up to the final conversion to `f64`
//! for reporting.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{cantor_numerators, DistSpec, FiniteMetricSpace, Point, SpaceError};

/// Gap generations carrying ramps in one flat function.
pub const RAMP_GENERATIONS: u32 = 4;

/// Probes per level at `rho * 3^-i`, `i = 0..PROBE_DEPTH`.
pub const PROBE_DEPTH: u32 = 5;

/// Largest number of independent functions handled (the sign grid has `5^M` points).
pub const MAX_FUNCTIONS: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ZahorskiError {
    #[error("invalid parameter {name}: {reason}")]
    BadParam { name: &'static str, reason: String },
    #[error("need eps in (0, h/4), got eps = {eps}, h = {h}")]
    EpsRange { eps: f64, h: f64 },
    #[error("delta0 = {delta0} exceeds half the slope budget {budget}")]
    DeltaTooLarge { delta0: f64, budget: f64 },
    #[error("alpha = {alpha} is not below its cap {cap}")]
    AlphaTooLarge { alpha: f64, cap: f64 },
    #[error("resolution exhausted: m = {m} needs generation {needed}, only {available} available")]
    ResolutionExhausted { m: String, needed: u32, available: u32 },
    #[error("schedule infeasible at level {level}: {reason}")]
    Infeasible { level: usize, reason: String },
    #[error("points must have a power-of-three denominator")]
    NotTriadic,
    #[error("positions {0} and {1} coincide")]
    Duplicate(usize, usize),
    #[error("function is not {lip}-Lipschitz between points {i} and {j} (slope {slope})")]
    NotLipschitz { i: usize, j: usize, slope: f64, lip: f64 },
    #[error("truncation property ({property}) fails at points {i}, {j}: {detail}")]
    Violation { property: u8, i: usize, j: usize, detail: String },
    #[error("flat family certificate fails at m = {m}: {reason}")]
    FamilyCertificate { m: String, reason: String },
    #[error("witness for point {point} at level {level} is missing from the sample")]
    MissingWitness { point: usize, level: usize },
    #[error("{got} values for {expected} points")]
    ValueCount { expected: usize, got: usize },
    #[error(transparent)]
    Space(#[from] SpaceError),
}

fn param(name: &'static str, reason: impl Into<String>) -> ZahorskiError {
    ZahorskiError::BadParam { name, reason: reason.into() }
}

pub fn pow3(e: u32) -> BigInt {
    BigInt::from(3u32).pow(e)
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational from `"p/q"` or a plain decimal such as `"0.05"` or `"1e-3"`.
pub fn parse_ratio(s: &str) -> Result<BigRational, ZahorskiError> {
    let bad = || param("number", format!("cannot parse {s:?} as an exact rational"));
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    let (mantissa, exp) = match s.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let digits = format!("{int}{frac}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let num: BigInt = digits.parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        BigRational::from_integer(num * ten.pow(scale as u32))
    } else {
        BigRational::new(num, ten.pow((-scale) as u32))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Distinct rational points `num / den` on the line.
#[derive(Clone, Debug, PartialEq)]
pub struct LinePoints {
    den: BigInt,
    nums: Vec<BigInt>,
    order: Vec<usize>,
}

impl LinePoints {
    pub fn new(den: BigInt, nums: Vec<BigInt>) -> Result<Self, ZahorskiError> {
        if !den.is_positive() {
            return Err(param("den", "denominator must be positive"));
        }
        let mut order: Vec<usize> = (0..nums.len()).collect();
        order.sort_by(|&a, &b| nums[a].cmp(&nums[b]).then(a.cmp(&b)));
        for w in order.windows(2) {
            if nums[w[0]] == nums[w[1]] {
                return Err(ZahorskiError::Duplicate(w[0].min(w[1]), w[0].max(w[1])));
            }
        }
        Ok(LinePoints { den, nums, order })
    }

    /// `0, 1/n, ..., 1`.
    pub fn uniform(n: u64) -> Result<Self, ZahorskiError> {
        LinePoints::new(BigInt::from(n), (0..=n).map(BigInt::from).collect())
    }

    pub fn len(&self) -> usize {
        self.nums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nums.is_empty()
    }

    pub fn den(&self) -> &BigInt {
        &self.den
    }

    pub fn num(&self, i: usize) -> &BigInt {
        &self.nums[i]
    }

    pub fn nums(&self) -> &[BigInt] {
        &self.nums
    }

    /// Indices in increasing position.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn position(&self, i: usize) -> BigRational {
        BigRational::new(self.nums[i].clone(), self.den.clone())
    }

    pub fn coord(&self, i: usize) -> f64 {
        to_f64(&self.position(i))
    }

    /// `|x_i - x_j|` as a numerator over the shared denominator.
    pub fn gap(&self, i: usize, j: usize) -> BigInt {
        (&self.nums[i] - &self.nums[j]).abs()
    }

    pub fn dist(&self, i: usize, j: usize) -> BigRational {
        BigRational::new(self.gap(i, j), self.den.clone())
    }

    /// `N` with `den = 3^N`.
    pub fn triadic_exponent(&self) -> Option<u32> {
        let mut d = self.den.clone();
        let mut n = 0;
        let three = BigInt::from(3u32);
        while d > BigInt::one() {
            let (q, r) = d.div_rem(&three);
            if !r.is_zero() {
                return None;
            }
            d = q;
            n += 1;
        }
        Some(n)
    }

    pub fn index_of(&self, num: &BigInt) -> Option<usize> {
        self.order.binary_search_by(|&i| self.nums[i].cmp(num)).ok().map(|k| self.order[k])
    }

    /// Largest numerator gap inside a closed radius.
    pub fn radius_num(&self, r: &BigRational) -> BigInt {
        (r * BigRational::from_integer(self.den.clone())).floor().to_integer()
    }

    /// Indices within closed numerator radius `rad` of point `i`, in position order.
    pub fn ball(&self, i: usize, rad: &BigInt) -> Vec<usize> {
        let lo = &self.nums[i] - rad;
        let hi = &self.nums[i] + rad;
        let start = self.order.partition_point(|&k| self.nums[k] < lo);
        let end = self.order.partition_point(|&k| self.nums[k] <= hi);
        self.order[start..end].to_vec()
    }

    /// `min_s |x_i - x_s|` numerators.
    pub fn dist_to_set(&self, set: &[usize]) -> Vec<BigInt> {
        let mut sorted: Vec<&BigInt> = set.iter().map(|&s| &self.nums[s]).collect();
        sorted.sort();
        (0..self.len())
            .map(|i| {
                let x = &self.nums[i];
                let k = sorted.partition_point(|s| *s < x);
                let mut best: Option<BigInt> = None;
                for c in [k.checked_sub(1), Some(k)].into_iter().flatten() {
                    if let Some(s) = sorted.get(c) {
                        let d = (x - *s).abs();
                        if best.as_ref().is_none_or(|b| d < *b) {
                            best = Some(d);
                        }
                    }
                }
                best.unwrap_or_else(BigInt::zero)
            })
            .collect()
    }

    /// The same points as a floating-point metric space with the given weights.
    pub fn to_space(&self, ids: Option<Vec<String>>, weights: Vec<f64>) -> Result<FiniteMetricSpace, ZahorskiError> {
        let ids = ids.unwrap_or_else(|| (0..self.len()).map(|i| format!("x{i}")).collect());
        let points = (0..self.len()).map(|i| Point::new(ids[i].clone(), vec![self.coord(i)])).collect();
        Ok(FiniteMetricSpace::build(points, DistSpec::Euclidean, weights, crate::space::DEFAULT_TOL)?)
    }
}

/// Values brought to one denominator: `value_i = nums[i] / den`.
#[derive(Clone, Debug)]
struct Scaled {
    den: BigInt,
    nums: Vec<BigInt>,
}

fn common_den<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values.into_iter().fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

fn scale_to(values: &[BigRational], den: &BigInt) -> Vec<BigInt> {
    values.iter().map(|v| v.numer() * (den / v.denom())).collect()
}

fn scaled(values: &[BigRational]) -> Scaled {
    let den = common_den(values);
    Scaled { nums: scale_to(values, &den), den }
}

fn int_ratio(n: &BigInt, d: &BigInt) -> f64 {
    to_f64(&BigRational::new(n.clone(), d.clone()))
}

/// Largest adjacent slope of `values` over the points; for points on a line this
/// is the Lipschitz constant over all pairs. Returns `(slope, i, j)`.
pub fn line_lipschitz(points: &LinePoints, values: &[BigRational]) -> (BigRational, usize, usize) {
    let mut best = (BigRational::zero(), 0, 0);
    for w in points.order().windows(2) {
        let (a, b) = (w[0], w[1]);
        let slope = (&values[a] - &values[b]).abs() / points.dist(a, b);
        if slope > best.0 {
            best = (slope, a, b);
        }
    }
    best
}

/// The flat family on the middle-thirds Cantor set: `f_m(y) = L |[0, y] ∩ R_m|`
/// where `R_m` is the union of the middle `7/9` of every gap of generations
/// `g + 1 ..= g + 4`, `g` the least integer with `3^g > m`. Constant on balls of
/// radius `3^-(g+6)` around Cantor points; the two ends of a generation-`g`
/// interval differ by `(7/9)(1 - (2/3)^4) L` times their distance.
#[derive(Clone, Debug, PartialEq)]
pub struct CantorFlatFamily {
    l: BigRational,
    delta0: BigRational,
    max_generation: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatCertificate {
    pub m: String,
    pub rho: f64,
    pub rho_below_inverse_m: bool,
    /// Largest slope of `f_m` inside the radius-`rho` balls around the set.
    pub flat_slope: f64,
    pub flat_ok: bool,
    /// Smallest `|f_m(x) - f_m(y)| / d(x, y)` over the witnesses.
    pub witness_ratio: f64,
    pub witness_ok: bool,
}

impl CantorFlatFamily {
    pub fn new(max_generation: u32, delta0: BigRational, l: BigRational) -> Result<Self, ZahorskiError> {
        if !l.is_positive() {
            return Err(param("L", "slope budget must be positive"));
        }
        if !delta0.is_positive() || delta0 > BigRational::one() {
            return Err(param("delta0", format!("must lie in (0, 1], got {}", to_f64(&delta0))));
        }
        if delta0 > &l / BigRational::from_integer(2.into()) {
            return Err(ZahorskiError::DeltaTooLarge { delta0: to_f64(&delta0), budget: to_f64(&l) });
        }
        Ok(CantorFlatFamily { l, delta0, max_generation })
    }

    pub fn lip(&self) -> &BigRational {
        &self.l
    }

    pub fn delta0(&self) -> &BigRational {
        &self.delta0
    }

    pub fn max_generation(&self) -> u32 {
        self.max_generation
    }

    /// Least `g` with `3^g > m`.
    pub fn generation(m: &BigInt) -> u32 {
        let mut g = 0;
        let mut p = BigInt::one();
        while &p <= m {
            p *= 3;
            g += 1;
        }
        g
    }

    /// Deepest generation used by `f_m` (ramps reach `3^-(g+6)` from Cantor points).
    pub fn depth(m: &BigInt) -> u32 {
        Self::generation(m) + RAMP_GENERATIONS + 2
    }

    fn check_resolution(&self, m: &BigInt) -> Result<u32, ZahorskiError> {
        let needed = Self::depth(m);
        if needed > self.max_generation {
            return Err(ZahorskiError::ResolutionExhausted { m: m.to_string(), needed, available: self.max_generation });
        }
        Ok(needed)
    }

    /// `rho_m = 3^-(g+6)`.
    pub fn rho(&self, m: &BigInt) -> Result<BigRational, ZahorskiError> {
        let needed = self.check_resolution(m)?;
        Ok(BigRational::new(BigInt::one(), pow3(needed)))
    }

    /// `(7/9)(1 - (2/3)^4) L`.
    pub fn variation_ratio(&self) -> BigRational {
        let two_thirds_pow = BigRational::new(BigInt::from(2u32).pow(RAMP_GENERATIONS), pow3(RAMP_GENERATIONS));
        ratio(7, 9) * (BigRational::one() - two_thirds_pow) * &self.l
    }

    /// Ramp measure of `[0, y / 3^n]` as a numerator over `3^n`.
    fn ramp_measure(g: u32, n: u32, y: &BigInt) -> BigInt {
        let top = g + RAMP_GENERATIONS;
        let ramped = |e: u32| e > g && e <= top;
        let gap_full = |e: u32| if ramped(e) { BigInt::from(7u32) * pow3(n - e - 2) } else { BigInt::zero() };
        // full[d]: ramp measure inside one generation-d interval.
        let mut full = vec![BigInt::zero(); top as usize + 2];
        for d in (0..=top).rev() {
            full[d as usize] = if d == top { BigInt::zero() } else { BigInt::from(2u32) * &full[d as usize + 1] + gap_full(d + 1) };
        }
        let whole = pow3(n);
        if y >= &whole {
            return full[0].clone();
        }
        if !y.is_positive() {
            return BigInt::zero();
        }
        let mut start = BigInt::zero();
        let mut acc = BigInt::zero();
        for d in 0..top {
            let third = pow3(n - d - 1);
            let u = y - &start;
            if u <= third {
                continue;
            }
            acc += &full[d as usize + 1];
            if u <= BigInt::from(2u32) * &third {
                if ramped(d + 1) {
                    let ninth = &third / 9;
                    let into: BigInt = &u - &third - &ninth;
                    let seven = BigInt::from(7u32) * &ninth;
                    acc += into.clamp(BigInt::zero(), seven);
                }
                return acc;
            }
            acc += gap_full(d + 1);
            start += BigInt::from(2u32) * &third;
        }
        acc
    }

    /// `f_m` at every point; the points need denominator `3^N` with `N` at least the
    /// family depth at `m`.
    pub fn eval(&self, m: &BigInt, points: &LinePoints) -> Result<Vec<BigRational>, ZahorskiError> {
        let needed = self.check_resolution(m)?;
        let n = points.triadic_exponent().ok_or(ZahorskiError::NotTriadic)?;
        if n < needed {
            return Err(ZahorskiError::ResolutionExhausted { m: m.to_string(), needed, available: n });
        }
        let g = Self::generation(m);
        let den = pow3(n);
        Ok(points
            .nums()
            .iter()
            .map(|y| BigRational::new(Self::ramp_measure(g, n, y), den.clone()) * &self.l)
            .collect())
    }

    /// Numerator (over the points' denominator) of the far end of the generation-`g`
    /// Cantor interval having point `i` as an endpoint.
    pub fn witness_num(&self, m: &BigInt, points: &LinePoints, i: usize) -> Option<BigInt> {
        let n = points.triadic_exponent()?;
        let g = Self::generation(m);
        if g > n {
            return None;
        }
        let w = pow3(n - g);
        let x = points.num(i);
        let (q, r) = x.div_rem(&w);
        if !r.is_zero() {
            return None;
        }
        let is_cantor = |start: &BigInt| -> bool {
            if start.is_negative() || start >= &pow3(g) {
                return false;
            }
            let mut s = start.clone();
            for _ in 0..g {
                let (q, r) = s.div_rem(&BigInt::from(3u32));
                if r == BigInt::one() {
                    return false;
                }
                s = q;
            }
            true
        };
        if is_cantor(&q) {
            Some(x + &w)
        } else if is_cantor(&(&q - 1)) {
            Some(x - &w)
        } else {
            None
        }
    }

    /// Flatness on radius-`rho_m` balls around `set` and the witness variation.
    pub fn certify(&self, m: &BigInt, points: &LinePoints, set: &[usize], values: &[BigRational]) -> Result<FlatCertificate, ZahorskiError> {
        let rho = self.rho(m)?;
        let inv_m = BigRational::new(BigInt::one(), m.clone());
        let rad = points.radius_num(&rho);
        let mut flat_slope = BigRational::zero();
        for &x in set {
            let ball = points.ball(x, &rad);
            for w in ball.windows(2) {
                let s = (&values[w[0]] - &values[w[1]]).abs() / points.dist(w[0], w[1]);
                if s > flat_slope {
                    flat_slope = s;
                }
            }
        }
        let mut witness_ratio: Option<BigRational> = None;
        let mut witness_ok = true;
        for &x in set {
            let y = self.witness_num(m, points, x).and_then(|num| points.index_of(&num));
            match y {
                None => witness_ok = false,
                Some(y) => {
                    let d = points.dist(x, y);
                    let q = (&values[x] - &values[y]).abs() / &d;
                    if !(q >= self.delta0 && d.is_positive() && d < inv_m) {
                        witness_ok = false;
                    }
                    if witness_ratio.as_ref().is_none_or(|w| q < *w) {
                        witness_ratio = Some(q);
                    }
                }
            }
        }
        Ok(FlatCertificate {
            m: m.to_string(),
            rho: to_f64(&rho),
            rho_below_inverse_m: rho.is_positive() && rho < inv_m,
            flat_slope: to_f64(&flat_slope),
            flat_ok: flat_slope <= inv_m,
            witness_ratio: witness_ratio.as_ref().map_or(0.0, to_f64),
            witness_ok: witness_ok && !set.is_empty(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationAudit {
    pub lipschitz_f: f64,
    pub lipschitz_g: f64,
    pub range_ok: bool,
    pub support_ok: bool,
    pub pairs_near_set: usize,
    pub pairs_near_good: usize,
    pub level_set_mass: f64,
    pub mass_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Truncation {
    pub g: Vec<BigRational>,
    pub offset: BigRational,
    pub offsets_tried: usize,
    /// Points of the set where the equality property holds at this level.
    pub level_set: Vec<usize>,
    /// `level_set` intersected with the incoming candidates.
    pub good: Vec<usize>,
    pub audit: TruncationAudit,
}

/// Parameters of one truncation: height `h`, margin `eps` and slope `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncParams {
    pub h: BigRational,
    pub eps: BigRational,
    pub l: BigRational,
}

fn saw(f: &BigInt, o: &BigInt, h: &BigInt) -> BigInt {
    let two_h = h * 2;
    let r = (f - o).mod_floor(&two_h);
    h - (r - h).abs()
}

/// `g = min(saw_o(f), clamp(2h - L dist(., S), 0, h))` with `saw_o` the period-`2h`
/// triangle wave of height `h`. The offset `o` runs over multiples of `eps/2` in
/// `[0, 2h)`; among offsets where the equality set carries at least
/// `(1 - 4 eps / h)` of the set's mass, the one keeping the most mass of
/// `candidates` is used (smallest on ties). All four properties and the Lipschitz
/// bound are then audited over the sample; any failure is an error naming the pair.
pub fn truncate(
    points: &LinePoints,
    f: &[BigRational],
    set: &[usize],
    candidates: Option<&[usize]>,
    weights: &[f64],
    params: &TruncParams,
) -> Result<Truncation, ZahorskiError> {
    let n = points.len();
    if f.len() != n || weights.len() != n {
        return Err(ZahorskiError::ValueCount { expected: n, got: f.len().min(weights.len()) });
    }
    if set.is_empty() {
        return Err(param("set", "must be nonempty"));
    }
    let TruncParams { h, eps, l } = params;
    if !l.is_positive() || !h.is_positive() {
        return Err(param("h", "h and L must be positive"));
    }
    let four = BigRational::from_integer(4.into());
    if !eps.is_positive() || eps >= &(h / &four) {
        return Err(ZahorskiError::EpsRange { eps: to_f64(eps), h: to_f64(h) });
    }
    let (slope, i, j) = line_lipschitz(points, f);
    if &slope > l {
        return Err(ZahorskiError::NotLipschitz { i, j, slope: to_f64(&slope), lip: to_f64(l) });
    }

    // Everything over one denominator q: values, h, eps/2 and L * positions.
    let step = eps / BigRational::from_integer(2.into());
    let pos_unit = l / BigRational::from_integer(points.den().clone());
    let q = common_den(f.iter().chain([h, &step, &pos_unit]));
    let fv = scale_to(f, &q);
    let hq = (h * BigRational::from_integer(q.clone())).to_integer();
    let stepq = (&step * BigRational::from_integer(q.clone())).to_integer();
    let unitq = (&pos_unit * BigRational::from_integer(q.clone())).to_integer();
    let dist = points.dist_to_set(set);
    let cutoff: Vec<BigInt> = dist.iter().map(|d| { let c: BigInt = &hq * 2 - d * &unitq; c.clamp(BigInt::zero(), hq.clone()) }).collect();
    let g_at = |i: usize, o: &BigInt| saw(&fv[i], o, &hq).min(cutoff[i].clone());

    let eps_rad = points.radius_num(&(eps / l));
    let neighbours: Vec<Vec<usize>> = set.iter().map(|&x| points.ball(x, &eps_rad)).collect();
    let set_mass: f64 = set.iter().map(|&x| weights[x]).sum();
    let bound = 1.0 - 4.0 * to_f64(eps) / to_f64(h);
    let mut in_candidates = vec![candidates.is_none(); n];
    if let Some(c) = candidates {
        c.iter().for_each(|&x| in_candidates[x] = true);
    }

    let count = (BigRational::from_integer(hq.clone() * 2) / BigRational::from_integer(stepq.clone())).ceil().to_integer();
    let count = count.to_usize().ok_or_else(|| param("eps", "too many offsets"))?;
    let mut best: Option<(f64, usize, Vec<bool>)> = None;
    for k in 0..count {
        let o = &stepq * k;
        let equal: Vec<bool> = set
            .iter()
            .zip(&neighbours)
            .map(|(&x, nb)| {
                let gx = g_at(x, &o);
                nb.iter().all(|&y| (&fv[x] - &fv[y]).abs() == (&gx - g_at(y, &o)).abs())
            })
            .collect();
        let level_mass: f64 = set.iter().zip(&equal).filter(|(_, &e)| e).map(|(&x, _)| weights[x]).sum();
        if level_mass < bound * set_mass - 1e-12 {
            continue;
        }
        let kept: f64 = set.iter().zip(&equal).filter(|(&x, &e)| e && in_candidates[x]).map(|(&x, _)| weights[x]).sum();
        if best.as_ref().is_none_or(|b| kept > b.0) {
            best = Some((kept, k, equal));
        }
    }
    let Some((_, k, equal)) = best else {
        return Err(ZahorskiError::Violation {
            property: 4,
            i: set[0],
            j: set[0],
            detail: format!("no offset reaches the mass bound {bound}"),
        });
    };
    let o = &stepq * k;
    let gq: Vec<BigInt> = (0..n).map(|i| g_at(i, &o)).collect();
    let level_set: Vec<usize> = set.iter().zip(&equal).filter(|(_, &e)| e).map(|(&x, _)| x).collect();
    let good: Vec<usize> = level_set.iter().copied().filter(|&x| in_candidates[x]).collect();

    // (1) range and (2) support.
    for i in 0..n {
        if gq[i].is_negative() || gq[i] > hq {
            return Err(ZahorskiError::Violation { property: 1, i, j: i, detail: "value outside [0, h]".into() });
        }
        if gq[i].is_positive() && &dist[i] * &unitq > &hq * 2 {
            return Err(ZahorskiError::Violation { property: 2, i, j: i, detail: "nonzero outside B(S, 2h/L)".into() });
        }
    }
    // (3) on B(S, h/L), exhaustively.
    let near: Vec<usize> = (0..n).filter(|&i| &dist[i] * &unitq <= hq).collect();
    let mut pairs_near_set = 0;
    for (a, &x) in near.iter().enumerate() {
        for &y in &near[a + 1..] {
            pairs_near_set += 1;
            if (&fv[x] - &fv[y]).abs() < (&gq[x] - &gq[y]).abs() {
                return Err(ZahorskiError::Violation { property: 3, i: x, j: y, detail: "|g(x)-g(y)| > |f(x)-f(y)|".into() });
            }
        }
    }
    // (4) equality near the kept set, re-checked with the final offset.
    let mut pairs_near_good = 0;
    for &x in &level_set {
        for y in points.ball(x, &eps_rad) {
            pairs_near_good += 1;
            if (&fv[x] - &fv[y]).abs() != (&gq[x] - &gq[y]).abs() {
                return Err(ZahorskiError::Violation { property: 4, i: x, j: y, detail: "|g(x)-g(y)| != |f(x)-f(y)|".into() });
            }
        }
    }
    let level_set_mass = if set_mass > 0.0 { level_set.iter().map(|&x| weights[x]).sum::<f64>() / set_mass } else { 1.0 };
    let qr = BigRational::from_integer(q.clone());
    let g: Vec<BigRational> = gq.iter().map(|v| BigRational::new(v.clone(), q.clone())).collect();
    let (lip_g, gi, gj) = line_lipschitz(points, &g);
    if &lip_g > l {
        return Err(ZahorskiError::Violation { property: 0, i: gi, j: gj, detail: format!("slope {} exceeds L", to_f64(&lip_g)) });
    }
    Ok(Truncation {
        g,
        offset: BigRational::from_integer(o) / qr,
        offsets_tried: count,
        level_set,
        good,
        audit: TruncationAudit {
            lipschitz_f: to_f64(&slope),
            lipschitz_g: to_f64(&lip_g),
            range_ok: true,
            support_ok: true,
            pairs_near_set,
            pairs_near_good,
            level_set_mass,
            mass_bound: bound,
        },
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleLevel {
    pub k: usize,
    pub m: BigInt,
    pub generation: u32,
    pub rho: BigRational,
    pub h: BigRational,
    pub eps: BigRational,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub alpha: BigRational,
    pub l: BigRational,
    pub delta0: BigRational,
    pub levels: Vec<ScheduleLevel>,
    /// `2 (alpha^2/4) (1 + 2^-(K+5) q/(1-q)) rho_{m_K}` with `q = alpha^2/L`.
    pub tail: BigRational,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleLevelView {
    pub k: usize,
    pub m: String,
    pub generation: u32,
    pub rho: f64,
    pub h: f64,
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleView {
    pub alpha: f64,
    pub lip: f64,
    pub delta0: f64,
    pub depth: usize,
    pub levels: Vec<ScheduleLevelView>,
    pub tail: f64,
    pub lip_bound: f64,
    pub lower_bound: f64,
    pub window_bound: f64,
}

impl Schedule {
    /// Levels `1..=depth`: `m_k = (3^g + 1)/2` with the least `g` such that
    /// `1/m_k < alpha^2 rho_{m_{k-1}} / (2^(k+4) L)` (`rho_{m_0} = 1`),
    /// `h_1 = alpha^2/4`, `h_{k+1} = (alpha^2/4) rho_{m_k}`, `eps_k = L/m_k`.
    pub fn build(family: &CantorFlatFamily, alpha: &BigRational, depth: usize) -> Result<Schedule, ZahorskiError> {
        if depth == 0 {
            return Err(param("depth", "must be at least 1"));
        }
        let l = family.lip().clone();
        let delta0 = family.delta0().clone();
        if !alpha.is_positive() {
            return Err(param("alpha", "must be positive"));
        }
        let one = BigRational::one();
        let two = BigRational::from_integer(2.into());
        let four = BigRational::from_integer(4.into());
        let a2 = alpha * alpha;
        let cap_sq = &delta0 * &l / (&four * (&one + &delta0));
        if a2 >= cap_sq || alpha >= &(&delta0 / &two) {
            let cap = (to_f64(&cap_sq).sqrt()).min(to_f64(&delta0) / 2.0);
            return Err(ZahorskiError::AlphaTooLarge { alpha: to_f64(alpha), cap });
        }
        let qa = &a2 / &l;
        let mut levels: Vec<ScheduleLevel> = Vec::with_capacity(depth);
        let mut rho_prev = one.clone();
        for k in 1..=depth {
            let target = &a2 * &rho_prev / (BigRational::from_integer(BigInt::from(2u32).pow(k as u32 + 4)) * &l);
            let mut g = 1u32;
            let m = loop {
                let m: BigInt = (pow3(g) + 1u32) / 2u32;
                if BigRational::new(BigInt::one(), m.clone()) < target {
                    break m;
                }
                g += 1;
                if g > family.max_generation() {
                    return Err(ZahorskiError::Infeasible { level: k, reason: "no m fits below the resolution".into() });
                }
            };
            let rho = family.rho(&m).map_err(|e| ZahorskiError::Infeasible { level: k, reason: e.to_string() })?;
            let h = &a2 / &four * &rho_prev;
            let eps = &l / BigRational::from_integer(m.clone());
            if eps >= &h / &four {
                return Err(ZahorskiError::Infeasible { level: k, reason: "eps is not below h/4".into() });
            }
            let inv_m = BigRational::new(BigInt::one(), m.clone());
            let expo = (k * (k + 1) / 2 + 4 * k) as u32;
            let induct = num_traits::pow(qa.clone(), k) / BigRational::from_integer(BigInt::from(2u32).pow(expo));
            if inv_m > induct {
                return Err(ZahorskiError::Infeasible { level: k, reason: "1/m_k exceeds the inductive bound".into() });
            }
            levels.push(ScheduleLevel { k, generation: CantorFlatFamily::generation(&m), m, rho: rho.clone(), h, eps });
            rho_prev = rho;
        }
        let ratio_q = &qa / (&one - &qa);
        let tail = &two * (&a2 / &four)
            * (&one + &ratio_q / BigRational::from_integer(BigInt::from(2u32).pow(depth as u32 + 5)))
            * &levels[depth - 1].rho;
        Ok(Schedule { alpha: alpha.clone(), l, delta0, levels, tail })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn q_ratio(&self) -> f64 {
        let q = to_f64(&(&self.alpha * &self.alpha / &self.l));
        q / (1.0 - q)
    }

    /// `3 (L + alpha + q/(1-q) (1 + 2^-6 alpha))`.
    pub fn lip_bound(&self) -> f64 {
        3.0 * (to_f64(&self.l) + self.window_bound())
    }

    /// `delta0 - q/(1-q) - alpha`.
    pub fn lower_bound(&self) -> f64 {
        to_f64(&self.delta0) - self.q_ratio() - to_f64(&self.alpha)
    }

    /// `alpha + q/(1-q) (1 + 2^-6 alpha)`.
    pub fn window_bound(&self) -> f64 {
        let a = to_f64(&self.alpha);
        a + self.q_ratio() * (1.0 + a / 64.0)
    }

    pub fn view(&self) -> ScheduleView {
        ScheduleView {
            alpha: to_f64(&self.alpha),
            lip: to_f64(&self.l),
            delta0: to_f64(&self.delta0),
            depth: self.depth(),
            levels: self
                .levels
                .iter()
                .map(|lv| ScheduleLevelView {
                    k: lv.k,
                    m: lv.m.to_string(),
                    generation: lv.generation,
                    rho: to_f64(&lv.rho),
                    h: to_f64(&lv.h),
                    eps: to_f64(&lv.eps),
                })
                .collect(),
            tail: to_f64(&self.tail),
            lip_bound: self.lip_bound(),
            lower_bound: self.lower_bound(),
            window_bound: self.window_bound(),
        }
    }
}

/// Sample for the construction: the level-`set_level` Cantor endpoints, a coarse
/// triadic grid, and around each set point per schedule level the witness points
/// at `3^-g_k`, probes at `rho_k 3^-i` and probes at `c h_k / L`,
/// `c in {1/2, 1, 3/2, 2, 5/2}`, on both sides. Returns the points and the set.
pub fn cantor_probe_sample(schedule: &Schedule, set_level: u32, grid_level: u32) -> Result<(LinePoints, Vec<usize>), ZahorskiError> {
    let deepest = schedule.levels.iter().map(|l| CantorFlatFamily::depth(&l.m)).max().unwrap_or(0);
    let n = (deepest + PROBE_DEPTH).max(set_level).max(grid_level);
    let den = pow3(n);
    let set_nums: Vec<BigInt> = cantor_numerators(set_level).into_iter().map(|a| BigInt::from(a) * pow3(n - set_level)).collect();
    let mut all: BTreeSet<BigInt> = set_nums.iter().cloned().collect();
    let coarse = pow3(n - grid_level);
    for i in 0..=3u64.pow(grid_level) {
        all.insert(&coarse * i);
    }
    let den_r = BigRational::from_integer(den.clone());
    let halves = [1, 2, 3, 4, 5];
    for x in &set_nums {
        for lv in &schedule.levels {
            let mut offsets = vec![pow3(n - lv.generation)];
            let rho_depth = CantorFlatFamily::depth(&lv.m);
            offsets.extend((0..PROBE_DEPTH).map(|i| pow3(n - rho_depth - i)));
            for c in halves {
                let r = &lv.h * ratio(c, 2) / &schedule.l * &den_r;
                offsets.push(r.round().to_integer());
            }
            for off in offsets {
                for y in [x + &off, x - &off] {
                    if !y.is_negative() && y <= den {
                        all.insert(y);
                    }
                }
            }
        }
    }
    let nums: Vec<BigInt> = all.into_iter().collect();
    let set = set_nums.iter().map(|s| nums.binary_search(s).expect("set point inserted")).collect();
    Ok((LinePoints::new(den, nums)?, set))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub k: usize,
    pub m: String,
    pub offset: f64,
    pub offsets_tried: usize,
    pub family: FlatCertificate,
    pub truncation: TruncationAudit,
    pub kept: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambdaCheck {
    pub point: usize,
    pub lambda: Vec<f64>,
    pub level: usize,
    pub witness: usize,
    pub variation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceCertificate {
    pub lip_bound: f64,
    pub psi_lipschitz: Vec<f64>,
    pub lip_ok: bool,
    pub lower_bound: f64,
    pub tail: f64,
    pub min_variation: f64,
    pub lower_ok: bool,
    pub checks: Vec<LambdaCheck>,
    /// `mu(S') / mu(S)` and the product of the per-level bounds `1 - 4 eps_k/h_k`.
    pub kept_fraction: f64,
    pub mass_bound_product: f64,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct Independent {
    pub schedule: Schedule,
    pub levels: Vec<LevelReport>,
    pub g: Vec<Vec<BigRational>>,
    pub psi: Vec<Vec<BigRational>>,
    pub kept: Vec<usize>,
    pub certificate: IndependenceCertificate,
}

impl Independent {
    /// `sum_j psi_j`.
    pub fn phi(&self) -> Vec<BigRational> {
        (0..self.psi[0].len()).map(|i| self.psi.iter().map(|p| &p[i]).sum()).collect()
    }
}

/// Grid `{-1, -1/2, 0, 1/2, 1}^M` restricted to `max |lambda_i| = 1`.
pub fn lambda_grid(m: usize) -> Vec<Vec<BigRational>> {
    let steps: Vec<BigRational> = [-2, -1, 0, 1, 2].iter().map(|&s| ratio(s, 2)).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out.into_iter().flat_map(|v| steps.iter().map(move |s| [v.clone(), vec![s.clone()]].concat())).collect();
    }
    out.retain(|v| v.iter().any(|x| x.abs() == BigRational::one()));
    out
}

/// `psi_j = sum_{k = j mod M} g_k` with `g_k` the truncation of `f_{m_k}` at level
/// `k` of the schedule, and the certificate: Lipschitz bound of each `psi_j`
/// and, at each kept point and each sampled `lambda`, the variation of
/// `sum lambda_i psi_i` at the witness of the finest level `n = argmax |lambda| mod M`.
#[allow(clippy::too_many_arguments)]
pub fn build_independent(
    points: &LinePoints,
    set: &[usize],
    weights: &[f64],
    family: &CantorFlatFamily,
    count: usize,
    alpha: &BigRational,
    depth: usize,
    tol: f64,
) -> Result<Independent, ZahorskiError> {
    if count == 0 || count > MAX_FUNCTIONS {
        return Err(param("M", format!("must lie in 1..={MAX_FUNCTIONS}")));
    }
    if depth < count {
        return Err(param("depth", "need at least one level per function"));
    }
    let schedule = Schedule::build(family, alpha, depth)?;
    let mut kept: Vec<usize> = set.to_vec();
    let mut levels = Vec::with_capacity(depth);
    let mut gs = Vec::with_capacity(depth);
    for lv in &schedule.levels {
        let f = family.eval(&lv.m, points)?;
        let cert = family.certify(&lv.m, points, set, &f)?;
        if !(cert.flat_ok && cert.witness_ok && cert.rho_below_inverse_m) {
            return Err(ZahorskiError::FamilyCertificate { m: lv.m.to_string(), reason: format!("{cert:?}") });
        }
        let params = TruncParams { h: lv.h.clone(), eps: lv.eps.clone(), l: schedule.l.clone() };
        let t = truncate(points, &f, set, Some(&kept), weights, &params)?;
        kept = t.good.clone();
        levels.push(LevelReport {
            k: lv.k,
            m: lv.m.to_string(),
            offset: to_f64(&t.offset),
            offsets_tried: t.offsets_tried,
            family: cert,
            truncation: t.audit.clone(),
            kept: kept.len(),
        });
        gs.push(t.g);
    }
    let n = points.len();
    let psi: Vec<Vec<BigRational>> = (0..count)
        .map(|j| {
            (0..n)
                .map(|i| {
                    (0..depth).filter(|k| (k + 1) % count == j).map(|k| &gs[k][i]).fold(BigRational::zero(), |a, b| a + b)
                })
                .collect()
        })
        .collect();

    let lip_bound = schedule.lip_bound();
    let psi_lipschitz: Vec<f64> = psi.iter().map(|p| to_f64(&line_lipschitz(points, p).0)).collect();
    let lip_ok = psi_lipschitz.iter().all(|&v| v <= lip_bound + tol);

    let lower_bound = schedule.lower_bound();
    let tail = to_f64(&schedule.tail);
    let mut checks = Vec::new();
    for &x in &kept {
        for lam in lambda_grid(count) {
            let j = lam.iter().position(|v| v.abs() == BigRational::one()).expect("grid keeps max |lambda| = 1");
            let level = (1..=depth).rev().find(|k| k % count == j).expect("depth >= count");
            let m = &schedule.levels[level - 1].m;
            let y = family
                .witness_num(m, points, x)
                .and_then(|num| points.index_of(&num))
                .ok_or(ZahorskiError::MissingWitness { point: x, level })?;
            let diff: BigRational = lam.iter().zip(&psi).map(|(l, p)| l * (&p[x] - &p[y])).sum();
            let variation = to_f64(&(diff.abs() / points.dist(x, y)));
            checks.push(LambdaCheck { point: x, lambda: lam.iter().map(to_f64).collect(), level, witness: y, variation });
        }
    }
    let min_variation = checks.iter().map(|c| c.variation).fold(f64::INFINITY, f64::min);
    let lower_ok = checks.iter().all(|c| c.variation >= lower_bound - tol - tail);
    let set_mass: f64 = set.iter().map(|&x| weights[x]).sum();
    let kept_fraction = if set_mass > 0.0 { kept.iter().map(|&x| weights[x]).sum::<f64>() / set_mass } else { 0.0 };
    let mass_bound_product = schedule.levels.iter().map(|l| 1.0 - 4.0 * to_f64(&l.eps) / to_f64(&l.h)).product();
    let certificate = IndependenceCertificate {
        lip_bound,
        psi_lipschitz,
        lip_ok,
        lower_bound,
        tail,
        min_variation,
        lower_ok,
        checks,
        kept_fraction,
        mass_bound_product,
        tol,
    };
    Ok(Independent { schedule, levels, g: gs, psi, kept, certificate })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationRow {
    pub point: usize,
    /// Largest `|phi(x) - phi(y)| / d(x, y)` with `d(x,y) <= 3^-g_K`.
    pub finest_biglip: f64,
    /// Largest `sup_{d(x,y) <= r} |phi(x) - phi(y)| / r` over the audited windows.
    pub window_variation: f64,
    pub ratio: f64,
    pub lower_ok: bool,
    pub window_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub lower_bound: f64,
    pub window_bound: f64,
    pub tail: f64,
    pub tol: f64,
    /// Audited windows `rho_s 3^-i` in `(alpha rho_s / 2, rho_s]`, per level.
    pub windows: Vec<Vec<f64>>,
    pub rows: Vec<ViolationRow>,
    pub all_ok: bool,
}

/// Upper variation at the finest witness scale against the variation over
/// windows `r in (alpha rho_s / 2, rho_s]`, at every kept point.
pub fn liplip_violation_report(
    points: &LinePoints,
    kept: &[usize],
    phi: &[BigRational],
    schedule: &Schedule,
    tol: f64,
) -> Result<ViolationReport, ZahorskiError> {
    if phi.len() != points.len() {
        return Err(ZahorskiError::ValueCount { expected: points.len(), got: phi.len() });
    }
    let sc = scaled(phi);
    let half_alpha = &schedule.alpha / BigRational::from_integer(2.into());
    let windows: Vec<Vec<BigRational>> = schedule
        .levels
        .iter()
        .map(|lv| {
            let mut w = Vec::new();
            let mut r = lv.rho.clone();
            while r > &half_alpha * &lv.rho {
                w.push(r.clone());
                r /= BigRational::from_integer(3.into());
            }
            w
        })
        .collect();
    let finest = schedule.levels.last().map(|lv| BigRational::new(BigInt::one(), pow3(lv.generation))).unwrap_or_else(BigRational::one);
    let finest_rad = points.radius_num(&finest);
    let lower = schedule.lower_bound() - to_f64(&schedule.tail);
    let wb = schedule.window_bound();
    let mut rows = Vec::with_capacity(kept.len());
    for &x in kept {
        let mut big = 0.0f64;
        for y in points.ball(x, &finest_rad) {
            if y != x {
                let q = int_ratio(&((&sc.nums[x] - &sc.nums[y]).abs() * points.den()), &(&sc.den * points.gap(x, y)));
                big = big.max(q);
            }
        }
        let mut var = 0.0f64;
        for w in windows.iter().flatten() {
            let rad = points.radius_num(w);
            let m = points.ball(x, &rad).into_iter().map(|y| (&sc.nums[x] - &sc.nums[y]).abs()).max().unwrap_or_default();
            let v = to_f64(&(BigRational::new(m, sc.den.clone()) / w));
            var = var.max(v);
        }
        let ratio = if var > 0.0 { big / var } else { f64::INFINITY };
        rows.push(ViolationRow {
            point: x,
            finest_biglip: big,
            window_variation: var,
            ratio,
            lower_ok: big >= lower - tol,
            window_ok: var <= wb + tol,
        });
    }
    let all_ok = rows.iter().all(|r| r.lower_ok && r.window_ok && r.ratio > 1.0);
    Ok(ViolationReport {
        lower_bound: schedule.lower_bound(),
        window_bound: wb,
        tail: to_f64(&schedule.tail),
        tol,
        windows: windows.iter().map(|w| w.iter().map(to_f64).collect()).collect(),
        rows,
        all_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn family(max_gen: u32) -> CantorFlatFamily {
        CantorFlatFamily::new(max_gen, ratio(1, 2), BigRational::one()).unwrap()
    }

    /// Ramp measure of `[0, y]` by listing every ramped gap.
    fn ramp_oracle(g: u32, y: &BigRational) -> BigRational {
        let mut total = BigRational::zero();
        let mut lefts = vec![BigRational::zero()];
        for e in 1..=g + RAMP_GENERATIONS {
            let len = BigRational::new(BigInt::one(), pow3(e));
            let mut next = Vec::new();
            for a in &lefts {
                let gap_start = a + &len;
                if e > g {
                    let lo = &gap_start + &len / BigRational::from_integer(9.into());
                    let hi = &gap_start + &len * ratio(8, 9);
                    let top = if y < &hi { y.clone() } else { hi.clone() };
                    if top > lo {
                        total += top - lo;
                    }
                }
                next.push(a.clone());
                next.push(a + &len * BigRational::from_integer(2.into()));
            }
            lefts = next;
        }
        total
    }

    #[test]
    fn parse_ratios() {
        assert_eq!(parse_ratio("0.05").unwrap(), ratio(1, 20));
        assert_eq!(parse_ratio("1/20").unwrap(), ratio(1, 20));
        assert_eq!(parse_ratio("-2.5e-1").unwrap(), ratio(-1, 4));
        assert_eq!(parse_ratio("3").unwrap(), ratio(3, 1));
        assert!(parse_ratio("x").is_err() && parse_ratio("1/0").is_err());
    }

    #[test]
    fn ramp_measure_matches_gap_listing() {
        let n = 9;
        let pts = LinePoints::new(pow3(n), (0..=3i64.pow(n)).step_by(7).map(BigInt::from).collect()).unwrap();
        let fam = family(12);
        let m = BigInt::from(2);
        let vals = fam.eval(&m, &pts).unwrap();
        for (i, v) in vals.iter().enumerate() {
            assert_eq!(*v, ramp_oracle(1, &pts.position(i)), "at {}", pts.position(i));
        }
        let whole = LinePoints::new(pow3(n), vec![pow3(n)]).unwrap();
        assert_eq!(fam.eval(&m, &whole).unwrap()[0], ramp_oracle(1, &BigRational::one()));
    }

    #[test]
    fn family_certificates() {
        let fam = family(12);
        let m = BigInt::from(2);
        assert_eq!(CantorFlatFamily::generation(&m), 1);
        assert_eq!(CantorFlatFamily::generation(&BigInt::from(9)), 3);
        assert_eq!(fam.rho(&m).unwrap(), BigRational::new(BigInt::one(), pow3(7)));
        let n = 12;
        let set: Vec<BigInt> = cantor_numerators(1).into_iter().map(|a| BigInt::from(a) * pow3(n - 1)).collect();
        let mut nums: BTreeSet<BigInt> = set.iter().cloned().collect();
        for x in &set {
            for off in [pow3(n - 1), pow3(n - 7), pow3(n - 8), pow3(n - 9)] {
                for y in [x + &off, x - &off] {
                    if !y.is_negative() && y <= pow3(n) {
                        nums.insert(y);
                    }
                }
            }
        }
        let nums: Vec<BigInt> = nums.into_iter().collect();
        let idx: Vec<usize> = set.iter().map(|s| nums.binary_search(s).unwrap()).collect();
        let pts = LinePoints::new(pow3(n), nums).unwrap();
        let vals = fam.eval(&m, &pts).unwrap();
        let cert = fam.certify(&m, &pts, &idx, &vals).unwrap();
        assert!(cert.flat_ok && cert.witness_ok && cert.rho_below_inverse_m, "{cert:?}");
        assert_eq!(cert.flat_slope, 0.0);
        assert!((cert.witness_ratio - 455.0 / 729.0).abs() < 1e-12);
        assert_eq!(fam.variation_ratio(), ratio(455, 729));
        assert_eq!(fam.rho(&BigInt::from(9)).unwrap(), BigRational::new(BigInt::one(), pow3(9)));
        assert!(matches!(family(8).rho(&BigInt::from(9)), Err(ZahorskiError::ResolutionExhausted { .. })));
        assert!(matches!(
            CantorFlatFamily::new(12, ratio(3, 5), BigRational::one()),
            Err(ZahorskiError::DeltaTooLarge { .. })
        ));
    }

    #[test]
    fn truncate_examples() {
        let pts = LinePoints::uniform(64).unwrap();
        let all: Vec<usize> = (0..pts.len()).collect();
        let w = vec![1.0 / 65.0; 65];
        let p = TruncParams { h: ratio(1, 4), eps: ratio(1, 32), l: BigRational::one() };
        let zero = vec![BigRational::zero(); 65];
        let t = truncate(&pts, &zero, &all, None, &w, &p).unwrap();
        assert!(t.g.iter().all(|v| v.is_zero()));
        assert_eq!(t.level_set, all);

        let x: Vec<BigRational> = (0..65).map(|i| pts.position(i)).collect();
        let t = truncate(&pts, &x, &all, None, &w, &p).unwrap();
        assert!(t.audit.level_set_mass >= 1.0 - 4.0 / 8.0);
        assert!(t.audit.lipschitz_g <= 1.0);
        // With S = everything the cutoff is h, so g is the sawtooth itself.
        for i in 0..65 {
            let v = &x[i] - &t.offset;
            let u = &v - ratio(1, 2) * (&v / ratio(1, 2)).floor();
            let expect = ratio(1, 4) - (u - ratio(1, 4)).abs();
            assert_eq!(t.g[i], expect);
        }

        let bad = TruncParams { eps: ratio(1, 16), ..p.clone() };
        assert!(matches!(truncate(&pts, &x, &all, None, &w, &bad), Err(ZahorskiError::EpsRange { .. })));
        let steep: Vec<BigRational> = x.iter().map(|v| v * BigRational::from_integer(2.into())).collect();
        assert!(matches!(truncate(&pts, &steep, &all, None, &w, &p), Err(ZahorskiError::NotLipschitz { .. })));
    }

    #[test]
    fn truncate_with_a_small_set() {
        let pts = LinePoints::uniform(200).unwrap();
        let set: Vec<usize> = vec![50, 100, 150];
        let w: Vec<f64> = (0..201).map(|i| if set.contains(&i) { 1.0 } else { 0.0 }).collect();
        let f: Vec<BigRational> = (0..201).map(|i| pts.position(i) * ratio(1, 2)).collect();
        let p = TruncParams { h: ratio(1, 20), eps: ratio(1, 200), l: ratio(1, 2) };
        let t = truncate(&pts, &f, &set, None, &w, &p).unwrap();
        // Support inside B(S, 2h/L) = B(S, 1/5).
        for i in 0..201 {
            if !t.g[i].is_zero() {
                assert!(pts.dist_to_set(&set)[i] <= BigInt::from(40));
            }
        }
    }

    #[test]
    fn schedule_for_the_reference_parameters() {
        let fam = family(400);
        let s = Schedule::build(&fam, &ratio(1, 20), 6).unwrap();
        assert_eq!(s.levels[0].m, BigInt::from(29525));
        assert_eq!(s.levels[0].h, ratio(1, 1600));
        for w in s.levels.windows(2) {
            assert_eq!(w[1].h, ratio(1, 1600) * &w[0].rho);
            let target = ratio(1, 400) * &w[0].rho / BigRational::from_integer(BigInt::from(2u32).pow(w[1].k as u32 + 4));
            assert!(BigRational::new(BigInt::one(), w[1].m.clone()) < target);
        }
        assert!(s.lip_bound() > 3.0 && s.lip_bound() < 3.2);
        assert!((s.lower_bound() - (0.5 - 0.0025 / 0.9975 - 0.05)).abs() < 1e-15);
        assert!(matches!(Schedule::build(&fam, &ratio(1, 4), 2), Err(ZahorskiError::AlphaTooLarge { .. })));
        assert!(matches!(Schedule::build(&family(30), &ratio(1, 20), 6), Err(ZahorskiError::Infeasible { .. })));
    }

    #[test]
    fn single_level_is_one_truncation() {
        let fam = family(200);
        let alpha = ratio(1, 20);
        let s = Schedule::build(&fam, &alpha, 1).unwrap();
        let (pts, set) = cantor_probe_sample(&s, 2, 3).unwrap();
        let w: Vec<f64> = (0..pts.len()).map(|i| if set.contains(&i) { 1.0 } else { 0.0 }).collect();
        let out = build_independent(&pts, &set, &w, &fam, 1, &alpha, 1, 1e-9).unwrap();
        assert_eq!(out.psi[0], out.g[0]);
        assert!(out.certificate.lip_ok && out.certificate.lower_ok, "{:?}", out.certificate.min_variation);
    }

    #[test]
    fn lambda_grid_size() {
        assert_eq!(lambda_grid(1).len(), 2);
        assert_eq!(lambda_grid(2).len(), 16);
        assert!(lambda_grid(3).iter().all(|l| l.iter().any(|x| x.abs() == BigRational::one())));
    }
}
