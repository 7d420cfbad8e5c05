//! Pointwise upper and lower Lipschitz variations at finite scales, porosity
//! witnesses and saturation, and gap detection against a fragment pool.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alberti::{weaver_norm_estimate, AlbertiError};
use crate::field::VectorField;
use crate::fragment::Fragment;
use crate::space::{greedy_net, FiniteMetricSpace, SpaceError};

/// Distances within this relative gap count as one realized radius.
pub const RADIUS_REL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LipscapeError {
    #[error("scale grid is empty")]
    EmptyGrid,
    #[error("scale {0} must be positive and finite")]
    BadScale(f64),
    #[error("{got} values for {expected} points")]
    ValueCount { expected: usize, got: usize },
    #[error("subset is empty")]
    EmptySubset,
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("need alpha > beta, got alpha = {alpha}, beta = {beta}")]
    GapOrder { alpha: f64, beta: f64 },
    #[error("invalid parameter {name}: {reason}")]
    BadParam { name: &'static str, reason: String },
    #[error("no witness with constant above {c} for point {point} at scale {scale}")]
    NoWitness { point: usize, scale: f64, c: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Alberti(#[from] AlbertiError),
}

/// `biglip_at(x, r) = max_{0 < d(x,y) <= r} |f(x) - f(y)| / d(x,y)` and
/// `smllip_at(x, r) = min_{s <= r} max_{d(x,y) <= s} |f(x) - f(y)| / s` over realized
/// distances `s` from `x`; both are `0` when the ball holds no other point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipProfile {
    pub scales: Vec<f64>,
    /// `[point][scale]`.
    pub biglip: Vec<Vec<f64>>,
    pub smllip: Vec<Vec<f64>>,
}

impl LipProfile {
    /// Values at the largest audited window.
    pub fn summary(&self, i: usize) -> (f64, f64) {
        let k = self.scales.len() - 1;
        (self.biglip[i][k], self.smllip[i][k])
    }
}

/// Distances from `x` and the running maxima of `|df|` in increasing distance order.
struct Shells {
    dist: Vec<f64>,
    quotient_max: Vec<f64>,
    small_min: Vec<f64>,
}

fn shells(space: &FiniteMetricSpace, f: &[f64], x: usize) -> Shells {
    let mut others: Vec<(f64, f64)> = (0..space.len())
        .filter(|&y| y != x)
        .map(|y| (space.dist(x, y), (f[x] - f[y]).abs()))
        .filter(|(d, _)| *d > 0.0)
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut dist = Vec::with_capacity(others.len());
    let mut quotient_max = Vec::with_capacity(others.len());
    let mut small_min = Vec::with_capacity(others.len());
    let (mut q, mut m, mut s) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut i = 0;
    while i < others.len() {
        // Group equal distances so each realized radius is one shell.
        let d = others[i].0;
        while i < others.len() && others[i].0 <= d * (1.0 + RADIUS_REL_TOL) {
            q = q.max(others[i].1 / others[i].0);
            m = m.max(others[i].1);
            i += 1;
        }
        s = s.min(m / d);
        dist.push(d);
        quotient_max.push(q);
        small_min.push(s);
    }
    Shells { dist, quotient_max, small_min }
}

fn check_values(space: &FiniteMetricSpace, f: &[f64]) -> Result<(), LipscapeError> {
    if f.len() != space.len() {
        return Err(LipscapeError::ValueCount { expected: space.len(), got: f.len() });
    }
    Ok(())
}

fn check_scales(scales: &[f64]) -> Result<Vec<f64>, LipscapeError> {
    if scales.is_empty() {
        return Err(LipscapeError::EmptyGrid);
    }
    if let Some(&r) = scales.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
        return Err(LipscapeError::BadScale(r));
    }
    let mut s = scales.to_vec();
    s.sort_by(f64::total_cmp);
    s.dedup();
    Ok(s)
}

pub fn lip_profile(space: &FiniteMetricSpace, f: &[f64], scales: &[f64]) -> Result<LipProfile, LipscapeError> {
    check_values(space, f)?;
    let scales = check_scales(scales)?;
    let mut biglip = Vec::with_capacity(space.len());
    let mut smllip = Vec::with_capacity(space.len());
    for x in 0..space.len() {
        let sh = shells(space, f, x);
        let (mut b, mut s) = (Vec::with_capacity(scales.len()), Vec::with_capacity(scales.len()));
        for &r in &scales {
            let k = sh.dist.partition_point(|&d| d <= r * (1.0 + RADIUS_REL_TOL));
            if k == 0 {
                b.push(0.0);
                s.push(0.0);
            } else {
                b.push(sh.quotient_max[k - 1]);
                s.push(sh.small_min[k - 1]);
            }
        }
        biglip.push(b);
        smllip.push(s);
    }
    Ok(LipProfile { scales, biglip, smllip })
}

/// `biglip_at(x, r)` for a single point.
pub fn biglip_at(space: &FiniteMetricSpace, f: &[f64], x: usize, r: f64) -> f64 {
    (0..space.len())
        .filter(|&y| y != x)
        .filter_map(|y| {
            let d = space.dist(x, y);
            (d > 0.0 && d <= r * (1.0 + RADIUS_REL_TOL)).then(|| (f[x] - f[y]).abs() / d)
        })
        .fold(0.0, f64::max)
}

/// Smallest radius at which every point has another point in its closed ball.
pub fn common_finest_window(space: &FiniteMetricSpace) -> f64 {
    (0..space.len())
        .map(|x| (0..space.len()).filter(|&y| y != x).map(|y| space.dist(x, y)).filter(|d| *d > 0.0).fold(f64::INFINITY, f64::min))
        .filter(|d| d.is_finite())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipLipPoint {
    pub point: usize,
    pub biglip: f64,
    pub smllip: f64,
    pub ratio: f64,
    pub flagged: bool,
    /// `tau * smllip >= biglip - tol`, when `tau` is given.
    pub lip_bound_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipLipReport {
    pub window: f64,
    pub tol: f64,
    pub tau: Option<f64>,
    pub points: Vec<LipLipPoint>,
    pub flagged: Vec<usize>,
    pub lip_bound_failures: Vec<usize>,
}

/// `biglip / smllip` at `window` (default: the common finest window), flagging
/// ratios above `1 + tol`. Points where both vanish have ratio 1.
pub fn liplip_check(
    space: &FiniteMetricSpace,
    f: &[f64],
    window: Option<f64>,
    tau: Option<f64>,
    tol: f64,
) -> Result<LipLipReport, LipscapeError> {
    check_values(space, f)?;
    let window = window.unwrap_or_else(|| common_finest_window(space));
    if !(window > 0.0) {
        return Err(LipscapeError::BadScale(window));
    }
    let prof = lip_profile(space, f, &[window])?;
    let mut points = Vec::with_capacity(space.len());
    for x in 0..space.len() {
        let (b, s) = prof.summary(x);
        let ratio = if b == 0.0 { 1.0 } else if s == 0.0 { f64::INFINITY } else { b / s };
        points.push(LipLipPoint {
            point: x,
            biglip: b,
            smllip: s,
            ratio,
            flagged: ratio > 1.0 + tol,
            lip_bound_ok: tau.map(|t| t * s >= b - tol),
        });
    }
    let flagged = points.iter().filter(|p| p.flagged).map(|p| p.point).collect();
    let lip_bound_failures = points.iter().filter(|p| p.lip_bound_ok == Some(false)).map(|p| p.point).collect();
    Ok(LipLipReport { window, tol, tau, points, flagged, lip_bound_failures })
}

/// A point `witness` with `c d(center, witness) < dist(witness, Y)`; `constant` is
/// the ratio `dist(witness, Y) / d(center, witness)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PorosityWitness {
    pub center: usize,
    pub witness: usize,
    pub constant: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PorosityScan {
    pub c: f64,
    pub scales: Vec<f64>,
    pub subset: Vec<usize>,
    /// `[scale][subset position]`: best witness in the closed ball, if any point
    /// of the ball lies off the subset.
    pub best: Vec<Vec<Option<PorosityWitness>>>,
    /// Smallest best constant over the subset, per scale.
    pub min_constant: Vec<f64>,
    /// Every subset point has a witness with constant above `c`.
    pub certified: Vec<bool>,
}

impl PorosityScan {
    pub fn all_certified(&self) -> bool {
        self.certified.iter().all(|&b| b)
    }
}

fn check_subset(space: &FiniteMetricSpace, subset: &[usize]) -> Result<(), LipscapeError> {
    if subset.is_empty() {
        return Err(LipscapeError::EmptySubset);
    }
    if let Some(&i) = subset.iter().find(|&&i| i >= space.len()) {
        return Err(LipscapeError::IndexOutOfRange(i));
    }
    Ok(())
}

/// Best witness for `y` in `B(y, r)`: largest constant, then largest distance, then lowest index.
fn best_witness(space: &FiniteMetricSpace, to_set: &[f64], y: usize, r: f64) -> Option<PorosityWitness> {
    let mut best: Option<PorosityWitness> = None;
    for (w, &gap) in to_set.iter().enumerate() {
        let d = space.dist(y, w);
        if d <= 0.0 || d > r || gap <= 0.0 {
            continue;
        }
        let c = gap / d;
        let better = match &best {
            None => true,
            Some(b) => c > b.constant || (c == b.constant && d > b.scale),
        };
        if better {
            best = Some(PorosityWitness { center: y, witness: w, constant: c, scale: d });
        }
    }
    best
}

fn distances_to(space: &FiniteMetricSpace, subset: &[usize]) -> Vec<f64> {
    (0..space.len()).map(|i| space.dist_to_set(i, subset)).collect()
}

pub fn porosity_scan(space: &FiniteMetricSpace, subset: &[usize], c: f64, scales: &[f64]) -> Result<PorosityScan, LipscapeError> {
    check_subset(space, subset)?;
    let scales = check_scales(scales)?;
    let to_set = distances_to(space, subset);
    let mut best = Vec::with_capacity(scales.len());
    let mut min_constant = Vec::with_capacity(scales.len());
    let mut certified = Vec::with_capacity(scales.len());
    for &r in &scales {
        let row: Vec<Option<PorosityWitness>> = subset.iter().map(|&y| best_witness(space, &to_set, y, r)).collect();
        let m = row.iter().map(|w| w.as_ref().map_or(0.0, |w| w.constant)).fold(f64::INFINITY, f64::min);
        min_constant.push(m);
        certified.push(row.iter().all(|w| w.as_ref().is_some_and(|w| w.constant > c)));
        best.push(row);
    }
    Ok(PorosityScan { c, scales, subset: subset.to_vec(), best, min_constant, certified })
}

/// `2^-k * top` for `k = 0..count`, descending.
pub fn dyadic_scales(top: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| top * 0.5f64.powi(k as i32)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SaturationScale {
    pub scale: f64,
    pub witness_scale: f64,
    /// Smallest chosen witness distance over the subset.
    pub r_m: f64,
    pub net: Vec<usize>,
    pub witnesses: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Saturation {
    /// The output space: subset and witnesses, in ambient index order.
    pub space: FiniteMetricSpace,
    /// Ambient indices of the output points.
    pub members: Vec<usize>,
    /// Positions of the subset inside the output space.
    pub subset: Vec<usize>,
    pub added: usize,
    pub per_scale: Vec<SaturationScale>,
    /// Scan of the subset inside the output space at `2c/3`.
    pub recertified: PorosityScan,
}

/// Keeps the subset and, per audited scale `r`, witnesses found at scale `r/2`
/// for the points of an `r_m/3`-net of the subset; the subset is then porous in
/// the output with constant `2c/3` at every audited scale.
pub fn porosity_saturate(
    space: &FiniteMetricSpace,
    subset: &[usize],
    c: f64,
    scales: &[f64],
) -> Result<Saturation, LipscapeError> {
    check_subset(space, subset)?;
    if !(c > 0.0) {
        return Err(LipscapeError::BadParam { name: "c", reason: format!("must be positive, got {c}") });
    }
    let scales = check_scales(scales)?;
    let to_set = distances_to(space, subset);
    let mut keep = vec![false; space.len()];
    subset.iter().for_each(|&k| keep[k] = true);
    let mut per_scale = Vec::with_capacity(scales.len());
    for &r in &scales {
        let half = r / 2.0;
        let mut found = Vec::with_capacity(subset.len());
        for &y in subset {
            match best_witness(space, &to_set, y, half) {
                Some(w) if w.constant > c => found.push(w),
                _ => return Err(LipscapeError::NoWitness { point: y, scale: half, c }),
            }
        }
        let r_m = found.iter().map(|w| w.scale).fold(f64::INFINITY, f64::min);
        let net_pos = greedy_net(subset.len(), r_m / 3.0, |a, b| space.dist(subset[a], subset[b]));
        let net: Vec<usize> = net_pos.iter().map(|&p| subset[p]).collect();
        let witnesses: Vec<usize> = net_pos.iter().map(|&p| found[p].witness).collect();
        witnesses.iter().for_each(|&w| keep[w] = true);
        per_scale.push(SaturationScale { scale: r, witness_scale: half, r_m, net, witnesses });
    }
    let members: Vec<usize> = (0..space.len()).filter(|&i| keep[i]).collect();
    let out = space.restrict(&members)?;
    let positions: Vec<usize> = subset.iter().map(|k| members.binary_search(k).expect("subset kept")).collect();
    let recertified = porosity_scan(&out, &positions, 2.0 * c / 3.0, &scales)?;
    let added = members.len() - {
        let mut s = subset.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len()
    };
    Ok(Saturation { space: out, members, subset: positions, added, per_scale, recertified })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapVerdict {
    pub alpha: f64,
    pub beta: f64,
    pub window: f64,
    pub tol: f64,
    pub max_norm_estimate: f64,
    pub min_biglip: f64,
    pub norm_ok: bool,
    pub biglip_ok: bool,
    pub gap_candidate: bool,
    pub verdict: String,
}

/// Gap test on `subset`: the pool's local-norm estimate stays `<= beta` while the
/// upper variation at `window` stays `>= alpha`. Relative to the given measure
/// and pool only.
#[allow(clippy::too_many_arguments)]
pub fn gap_detect(
    space: &FiniteMetricSpace,
    subset: &[usize],
    f: &[f64],
    alpha: f64,
    beta: f64,
    pool: &[Fragment],
    window: f64,
    tol: f64,
) -> Result<GapVerdict, LipscapeError> {
    if !(alpha > beta) {
        return Err(LipscapeError::GapOrder { alpha, beta });
    }
    check_subset(space, subset)?;
    check_values(space, f)?;
    let field = VectorField::scalar(f).map_err(|e| LipscapeError::BadParam { name: "f", reason: e.to_string() })?;
    let est = weaver_norm_estimate(space, &field, None, pool)?;
    let max_norm_estimate = subset.iter().map(|&x| est[x].unwrap_or(0.0)).fold(0.0, f64::max);
    let min_biglip = subset.iter().map(|&x| biglip_at(space, f, x, window)).fold(f64::INFINITY, f64::min);
    let norm_ok = max_norm_estimate <= beta + tol;
    let biglip_ok = min_biglip >= alpha - tol;
    let gap_candidate = norm_ok && biglip_ok;
    let verdict = if gap_candidate {
        "gap candidate (relative to the given measure and fragment pool)"
    } else {
        "not a gap (relative to the given measure and fragment pool)"
    };
    Ok(GapVerdict {
        alpha,
        beta,
        window,
        tol,
        max_norm_estimate,
        min_biglip,
        norm_ok,
        biglip_ok,
        gap_candidate,
        verdict: verdict.into(),
    })
}

/// Two-point fragments joining consecutive (by coordinate) points of `subset`
/// at distance at most `max_step`, parametrized by arc length.
pub fn subset_pool(space: &FiniteMetricSpace, subset: &[usize], max_step: f64) -> Result<Vec<Fragment>, LipscapeError> {
    let mut pool = Vec::new();
    for (a, &x) in subset.iter().enumerate() {
        for &y in &subset[a + 1..] {
            let d = space.dist(x, y);
            if d > 0.0 && d <= max_step {
                pool.push(Fragment::new(vec![0.0, d], vec![x, y]).map_err(AlbertiError::from)?);
            }
        }
    }
    Ok(pool)
}
