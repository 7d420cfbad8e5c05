//! Discrete representations of a measure by weighted fragments: validation, the
//! induced derivation and effective speed, and the representation algebra.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::field::{dot, VectorField};
use crate::fragment::{ConeField, ConeSpec, Fragment, FragmentError};
use crate::poset::{ChainNode, ChainPoset, PosetError};
use crate::space::FiniteMetricSpace;

/// Tolerance on the total of the fragment probabilities.
pub const PROB_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlbertiError {
    #[error("malformed representation: {0}")]
    Malformed(String),
    #[error("probabilities sum to {0}, expected 1")]
    ProbSum(f64),
    #[error("supports overlap at point {point} (representations {a} and {b})")]
    Overlap { point: usize, a: usize, b: usize },
    #[error("scale function value {value} at point {point} outside [0, {bound})")]
    ScaleOutOfRange { point: usize, value: f64, bound: f64 },
    #[error("invalid parameter {name}: {reason}")]
    BadParam { name: &'static str, reason: String },
    #[error("representation does not match the measure: max residual {0}")]
    Residual(f64),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Poset(#[from] PosetError),
}

fn param(name: &'static str, reason: impl Into<String>) -> AlbertiError {
    AlbertiError::BadParam { name, reason: reason.into() }
}

/// Fragments with probabilities `P` and per-trace-point densities `nu`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AlbertiRep {
    pub fragments: Vec<Fragment>,
    pub probs: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual: Vec<f64>,
    pub max: f64,
    pub total: f64,
    pub pass: bool,
    pub tol: f64,
    /// Absolute continuity and measurability hold trivially for finite data.
    pub finite_model_conditions: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivationField {
    pub dim: usize,
    /// `None` where the measure vanishes.
    pub values: Vec<Option<Vec<f64>>>,
    pub excluded: Vec<usize>,
    /// Largest upper biLipschitz constant over the fragments.
    pub norm_bound: f64,
    /// Lipschitz constant of `f` over the sample.
    pub lip_f: f64,
    /// `sum_j P_j sum_k (f o gamma_j)'(t_k) g(gamma_j(t_k)) nu_j(k)`, per component.
    pub pairing: Option<Vec<f64>>,
    /// `norm_bound * lip_f * ||g||_1`.
    pub pairing_bound: Option<f64>,
}

impl DerivationField {
    pub fn scalar(&self, i: usize) -> Option<f64> {
        self.values[i].as_ref().map(|v| v[0])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCheck {
    pub fragments_pass: bool,
    pub failing_points: Vec<usize>,
    /// True when every fragment passes and no point fails.
    pub asserted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyOutcome {
    pub rep: AlbertiRep,
    pub covered: Vec<usize>,
    pub uncovered: Vec<usize>,
    pub coverage: f64,
    /// Measure carried by the representation (the input restricted to `covered`).
    pub measure: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreedyOptions {
    pub coverage_target: f64,
    /// Split chains where consecutive parameters differ by more than this.
    pub max_step: Option<f64>,
    /// Shortest fragment accepted.
    pub min_len: usize,
    pub tol: f64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        GreedyOptions { coverage_target: 1.0, max_step: None, min_len: 2, tol: 1e-12 }
    }
}

impl AlbertiRep {
    pub fn empty() -> Self {
        AlbertiRep::default()
    }

    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// Structural checks: matching lengths, nonnegative finite weights, `sum P = 1`,
    /// fragments with at least two distinct trace points inside the space.
    pub fn check(&self, space: &FiniteMetricSpace) -> Result<(), AlbertiError> {
        if self.probs.len() != self.fragments.len() || self.densities.len() != self.fragments.len() {
            return Err(AlbertiError::Malformed(format!(
                "{} fragments, {} probabilities, {} density lists",
                self.fragments.len(),
                self.probs.len(),
                self.densities.len()
            )));
        }
        for (j, (frag, nu)) in self.fragments.iter().zip(&self.densities).enumerate() {
            if nu.len() != frag.len() {
                return Err(AlbertiError::Malformed(format!(
                    "fragment {j} has {} trace points but {} densities",
                    frag.len(),
                    nu.len()
                )));
            }
            if frag.len() < 2 {
                return Err(AlbertiError::Malformed(format!("fragment {j} has a single point")));
            }
            frag.check_in(space)?;
            if nu.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(AlbertiError::Malformed(format!("fragment {j} has a negative or non-finite density")));
            }
        }
        if self.probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(AlbertiError::Malformed("negative or non-finite probability".into()));
        }
        if !self.is_empty() {
            let s: f64 = self.probs.iter().sum();
            if (s - 1.0).abs() > PROB_TOL {
                return Err(AlbertiError::ProbSum(s));
            }
        }
        Ok(())
    }

    /// `sum_j P_j nu_j(x)` at every point.
    pub fn induced_measure(&self, n: usize) -> Vec<f64> {
        self.accumulate_with(n, 1, |_, _, out| out[0] = 1.0).into_iter().map(|v| v[0]).collect()
    }

    /// `sum_j P_j nu_j(k) value(j, k)` per point, in fragment order.
    fn accumulate_with(&self, n: usize, dim: usize, value: impl Fn(usize, usize, &mut [f64])) -> Vec<Vec<f64>> {
        let mut acc = vec![vec![0.0; dim]; n];
        let mut buf = vec![0.0; dim];
        for (j, frag) in self.fragments.iter().enumerate() {
            for (k, &x) in frag.trace().iter().enumerate() {
                let w = self.probs[j] * self.densities[j][k];
                if w == 0.0 {
                    continue;
                }
                value(j, k, &mut buf);
                for (a, b) in acc[x].iter_mut().zip(&buf) {
                    *a += w * b;
                }
            }
        }
        acc
    }

    /// Points carrying positive induced mass.
    pub fn support(&self, n: usize) -> Vec<usize> {
        self.induced_measure(n).iter().enumerate().filter(|(_, &m)| m > 0.0).map(|(i, _)| i).collect()
    }
}

/// `|mu(x) - sum_j P_j nu_j(x)|` against the space's weights.
pub fn validate_rep(space: &FiniteMetricSpace, rep: &AlbertiRep, tol: f64) -> Result<ResidualReport, AlbertiError> {
    validate_against(space, rep, space.weights(), tol)
}

/// As [`validate_rep`] against an explicit measure.
pub fn validate_against(
    space: &FiniteMetricSpace,
    rep: &AlbertiRep,
    mu: &[f64],
    tol: f64,
) -> Result<ResidualReport, AlbertiError> {
    rep.check(space)?;
    if mu.len() != space.len() {
        return Err(param("mu", format!("{} values for {} points", mu.len(), space.len())));
    }
    let induced = rep.induced_measure(space.len());
    let residual: Vec<f64> = mu.iter().zip(&induced).map(|(m, s)| (m - s).abs()).collect();
    let max = residual.iter().copied().fold(0.0, f64::max);
    let total = residual.iter().sum();
    Ok(ResidualReport {
        residual,
        max,
        total,
        pass: max <= tol,
        tol,
        finite_model_conditions: "satisfied (finite model)".into(),
    })
}

fn lipschitz_on_sample(space: &FiniteMetricSpace, f: &VectorField) -> f64 {
    let mut lip = 0.0f64;
    for i in 0..space.len() {
        for j in (i + 1)..space.len() {
            let d = space.dist(i, j);
            if d > 0.0 {
                let df = crate::field::dist2(f.row(i), f.row(j));
                lip = lip.max(df / d);
            }
        }
    }
    lip
}

fn per_fragment<T>(rep: &AlbertiRep, mut each: impl FnMut(&Fragment) -> Result<T, FragmentError>) -> Result<Vec<T>, AlbertiError> {
    rep.fragments.iter().map(|fr| each(fr).map_err(AlbertiError::from)).collect()
}

fn radon_nikodym(acc: Vec<Vec<f64>>, mu: &[f64]) -> (Vec<Option<Vec<f64>>>, Vec<usize>) {
    let mut excluded = Vec::new();
    let values = acc
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            if mu[i] > 0.0 {
                Some(v.into_iter().map(|s| s / mu[i]).collect())
            } else {
                excluded.push(i);
                None
            }
        })
        .collect();
    (values, excluded)
}

/// `Df(x) = sum_j P_j (f o gamma_j)'(x) nu_j(x) / mu(x)` where `mu(x) > 0`, with the
/// optional pairing against point weights `g`.
pub fn derivation_apply(
    space: &FiniteMetricSpace,
    rep: &AlbertiRep,
    f: &VectorField,
    g: Option<&[f64]>,
) -> Result<DerivationField, AlbertiError> {
    rep.check(space)?;
    if f.len() != space.len() {
        return Err(param("f", format!("{} rows for {} points", f.len(), space.len())));
    }
    let derivs = per_fragment(rep, |fr| fr.derivative(f))?;
    let dim = f.dim();
    let acc = rep.accumulate_with(space.len(), dim, |j, k, out| out.copy_from_slice(derivs[j].row(k)));
    let norm_bound = per_fragment(rep, |fr| fr.bilipschitz_constants(space))?.into_iter().map(|c| c.1).fold(0.0, f64::max);
    let lip_f = lipschitz_on_sample(space, f);
    let (pairing, pairing_bound) = match g {
        None => (None, None),
        Some(g) => {
            if g.len() != space.len() {
                return Err(param("g", format!("{} values for {} points", g.len(), space.len())));
            }
            let mut p = vec![0.0; dim];
            for (j, frag) in rep.fragments.iter().enumerate() {
                for (k, &x) in frag.trace().iter().enumerate() {
                    let w = rep.probs[j] * rep.densities[j][k] * g[x];
                    for (c, pc) in p.iter_mut().enumerate() {
                        *pc += w * derivs[j].row(k)[c];
                    }
                }
            }
            let g1: f64 = g.iter().zip(space.weights()).map(|(a, m)| a.abs() * m).sum();
            (Some(p), Some(norm_bound * lip_f * g1))
        }
    };
    let (values, excluded) = radon_nikodym(acc, space.weights());
    Ok(DerivationField { dim, values, excluded, norm_bound, lip_f, pairing, pairing_bound })
}

/// `sigma(x) = sum_j P_j md_j nu_j(x) / mu(x)` where `mu(x) > 0`.
pub fn effective_speed(space: &FiniteMetricSpace, rep: &AlbertiRep) -> Result<Vec<Option<f64>>, AlbertiError> {
    rep.check(space)?;
    let md = per_fragment(rep, |fr| fr.metric_differential(space))?;
    let acc = rep.accumulate_with(space.len(), 1, |j, k, out| out[0] = md[j][k]);
    let (values, _) = radon_nikodym(acc, space.weights());
    Ok(values.into_iter().map(|v| v.map(|v| v[0])).collect())
}

/// `Df(x)` in the closed cone at `x` (relaxed by `tol`) at every point of positive mass.
pub fn check_directional_cone(
    space: &FiniteMetricSpace,
    rep: &AlbertiRep,
    f: &VectorField,
    cones: &ConeField,
    tol: f64,
) -> Result<PointCheck, AlbertiError> {
    let df = derivation_apply(space, rep, f, None)?;
    let mut fragments_pass = true;
    for frag in &rep.fragments {
        let d = frag.derivative(f)?;
        for (k, &x) in frag.trace().iter().enumerate() {
            if !cones.at(x).closed().contains(d.row(k), tol)? {
                fragments_pass = false;
            }
        }
    }
    let mut failing = Vec::new();
    for (x, v) in df.values.iter().enumerate() {
        if let Some(v) = v {
            if !cones.at(x).closed().contains(v, tol)? {
                failing.push(x);
            }
        }
    }
    let asserted = fragments_pass && failing.is_empty();
    Ok(PointCheck { fragments_pass, failing_points: failing, asserted })
}

/// `Dg(x) >= delta sigma(x) - tol` at every point of positive mass.
pub fn check_speed_bound(
    space: &FiniteMetricSpace,
    rep: &AlbertiRep,
    g: &[f64],
    delta: f64,
    tol: f64,
) -> Result<PointCheck, AlbertiError> {
    let field = VectorField::scalar(g).map_err(|e| param("g", e.to_string()))?;
    let dg = derivation_apply(space, rep, &field, None)?;
    let sigma = effective_speed(space, rep)?;
    let mut fragments_pass = true;
    for frag in &rep.fragments {
        let d = frag.scalar_derivative(g)?;
        let md = frag.metric_differential(space)?;
        if d.iter().zip(&md).any(|(a, m)| *a < delta * m - tol) {
            fragments_pass = false;
        }
    }
    let failing = (0..space.len())
        .filter(|&x| match (dg.scalar(x), sigma[x]) {
            (Some(d), Some(s)) => d < delta * s - tol,
            _ => false,
        })
        .collect::<Vec<_>>();
    let asserted = fragments_pass && failing.is_empty();
    Ok(PointCheck { fragments_pass, failing_points: failing, asserted })
}

/// Push-forward by `t -> a t + b`: each domain is mapped by the inverse map, so
/// the derivation is multiplied by `a`.
pub fn reparametrize(rep: &AlbertiRep, a: f64, b: f64) -> Result<AlbertiRep, AlbertiError> {
    if a == 0.0 || !a.is_finite() || !b.is_finite() {
        return Err(param("a", format!("need a finite nonzero scale, got a={a}, b={b}")));
    }
    let mut out = rep.clone();
    for (frag, nu) in out.fragments.iter_mut().zip(out.densities.iter_mut()) {
        *frag = frag.affine_domain(1.0 / a, -b / a)?;
        if a < 0.0 {
            nu.reverse();
        }
    }
    Ok(out)
}

/// Densities zeroed outside `subset`.
pub fn restrict_rep(rep: &AlbertiRep, subset: &[usize]) -> AlbertiRep {
    let max = rep.fragments.iter().flat_map(|f| f.trace().iter().copied()).max().map_or(0, |m| m + 1);
    let mut keep = vec![false; max.max(subset.iter().copied().max().map_or(0, |m| m + 1))];
    for &s in subset {
        keep[s] = true;
    }
    let mut out = rep.clone();
    for (frag, nu) in out.fragments.iter().zip(out.densities.iter_mut()) {
        for (k, &x) in frag.trace().iter().enumerate() {
            if !keep[x] {
                nu[k] = 0.0;
            }
        }
    }
    out
}

fn concat(blocks: Vec<(f64, AlbertiRep, f64)>) -> AlbertiRep {
    // (probability factor, rep, density factor)
    let mut out = AlbertiRep::empty();
    for (pf, rep, df) in blocks {
        for ((frag, p), nu) in rep.fragments.into_iter().zip(rep.probs).zip(rep.densities) {
            out.fragments.push(frag);
            out.probs.push(pf * p);
            out.densities.push(nu.into_iter().map(|v| v * df).collect());
        }
    }
    out
}

/// Representations of measures with disjoint supports combined with weights `2^-a`,
/// renormalised by `1 / (1 - 2^-K)`; densities compensate so the derivation is
/// unchanged on each support.
pub fn glue_reps(space: &FiniteMetricSpace, reps: &[AlbertiRep]) -> Result<AlbertiRep, AlbertiError> {
    let mut owner: Vec<Option<usize>> = vec![None; space.len()];
    for (a, rep) in reps.iter().enumerate() {
        rep.check(space)?;
        for x in rep.support(space.len()) {
            if let Some(b) = owner[x] {
                return Err(AlbertiError::Overlap { point: x, a: b, b: a });
            }
            owner[x] = Some(a);
        }
    }
    let non_empty: Vec<&AlbertiRep> = reps.iter().filter(|r| !r.is_empty()).collect();
    let k = non_empty.len() as i32;
    let c = 1.0 / (1.0 - 0.5f64.powi(k));
    let blocks = non_empty
        .into_iter()
        .enumerate()
        .map(|(a, rep)| {
            let w = 0.5f64.powi(a as i32 + 1);
            (w * c, rep.clone(), 1.0 / (w * c))
        })
        .collect();
    Ok(concat(blocks))
}

fn window(rep: &AlbertiRep) -> f64 {
    rep.fragments.iter().map(|f| f.extent()).fold(1.0, f64::max)
}

fn placed(rep: &AlbertiRep, start: f64) -> AlbertiRep {
    let mut out = rep.clone();
    for f in out.fragments.iter_mut() {
        *f = f.placed_at(start);
    }
    out
}

/// Three blocks: the restriction off `subset` placed at `0`, the same reversed
/// at `2W`, the restriction to `subset` at `4W`; weights `1/4, 1/4, 1/2` with
/// doubled densities. The derivation becomes `Df` on `subset` and `0` off it.
pub fn indicator_combine(space: &FiniteMetricSpace, rep: &AlbertiRep, subset: &[usize]) -> Result<AlbertiRep, AlbertiError> {
    rep.check(space)?;
    let mut inside = vec![false; space.len()];
    for &s in subset {
        if s >= space.len() {
            return Err(param("subset", format!("index {s} out of range")));
        }
        inside[s] = true;
    }
    let outside: Vec<usize> = (0..space.len()).filter(|&x| !inside[x]).collect();
    let w = window(rep);
    let off = restrict_rep(rep, &outside);
    let first = placed(&off, 0.0);
    let second = placed(&reparametrize(&off, -1.0, 0.0)?, 2.0 * w);
    let third = placed(&restrict_rep(rep, subset), 4.0 * w);
    Ok(concat(vec![(0.25, first, 2.0), (0.25, second, 2.0), (0.5, third, 2.0)]))
}

/// The `n`-th binary digit sets `U_n = {x : floor(2^n lambda(x) / M) odd}`.
pub fn dyadic_digit_sets(lambda: &[f64], bound: f64, depth: u32) -> Result<Vec<Vec<usize>>, AlbertiError> {
    if !(bound > 0.0) {
        return Err(param("bound", format!("must be positive, got {bound}")));
    }
    for (point, &value) in lambda.iter().enumerate() {
        if !(0.0..bound).contains(&value) {
            return Err(AlbertiError::ScaleOutOfRange { point, value, bound });
        }
    }
    Ok((1..=depth)
        .map(|n| {
            let scale = 2f64.powi(n as i32) / bound;
            lambda.iter().enumerate().filter(|(_, &l)| ((l * scale).floor() as u64) % 2 == 1).map(|(i, _)| i).collect()
        })
        .collect())
}

/// Level-`depth` dyadic floor of `lambda` against `bound`.
pub fn dyadic_floor(lambda: f64, bound: f64, depth: u32) -> f64 {
    let s = 2f64.powi(depth as i32);
    (lambda / bound * s).floor() / s * bound
}

/// Representation whose derivation is `lambda_K Df`, `lambda_K` the dyadic floor of
/// `lambda` at depth `K`: level `n` is the indicator combination on the `n`-th digit
/// set pushed forward by `t -> M t`, weighted `2^-n`; a zero-derivation block carries
/// the remaining weight `2^-K`.
pub fn scale_rep(
    space: &FiniteMetricSpace,
    rep: &AlbertiRep,
    lambda: &[f64],
    bound: f64,
    depth: u32,
) -> Result<AlbertiRep, AlbertiError> {
    if lambda.len() != space.len() {
        return Err(param("lambda", format!("{} values for {} points", lambda.len(), space.len())));
    }
    if depth == 0 {
        return Err(param("depth", "must be at least 1"));
    }
    let digits = dyadic_digit_sets(lambda, bound, depth)?;
    let mut blocks = Vec::with_capacity(depth as usize + 1);
    for (n, set) in digits.iter().enumerate() {
        let level = reparametrize(&indicator_combine(space, rep, set)?, bound, 0.0)?;
        blocks.push((0.5f64.powi(n as i32 + 1), level, 1.0));
    }
    blocks.push((0.5f64.powi(depth as i32), indicator_combine(space, rep, &[])?, 1.0));
    Ok(concat(blocks))
}

/// Representations of one measure placed in disjoint windows, probabilities
/// averaged, then pushed forward by `t -> m t`: the derivation is the sum.
pub fn sum_reps(space: &FiniteMetricSpace, reps: &[AlbertiRep]) -> Result<AlbertiRep, AlbertiError> {
    if reps.is_empty() {
        return Err(param("reps", "need at least one representation"));
    }
    for r in reps {
        r.check(space)?;
    }
    let m = reps.len() as f64;
    let w = reps.iter().map(window).fold(1.0, f64::max);
    let blocks = reps.iter().enumerate().map(|(j, r)| (1.0 / m, placed(r, 2.0 * j as f64 * w), 1.0)).collect();
    reparametrize(&concat(blocks), m, 0.0)
}

/// Repeatedly extracts longest chains of the `(delta, alpha)` order over the
/// points still carrying mass, and turns them into fragments whose densities
/// carry that mass. Chains are split where consecutive parameters jump by more
/// than `max_step`; pieces shorter than `min_len` are discarded.
pub fn greedy_build_rep(
    space: &FiniteMetricSpace,
    f: &VectorField,
    cone: &ConeSpec,
    delta: f64,
    opts: &GreedyOptions,
) -> Result<GreedyOutcome, AlbertiError> {
    if f.len() != space.len() || f.dim() != cone.dim() {
        return Err(param("f", "must have one row per point and the cone's dimension"));
    }
    if !(delta > 0.0) {
        return Err(param("delta", format!("must be positive, got {delta}")));
    }
    let w = cone.axis().to_vec();
    let q = w.len();
    let total = space.mass();
    let mut remaining = space.weights().to_vec();
    let mut pieces: Vec<(Fragment, Vec<f64>, f64)> = Vec::new();
    let mut covered_mass = 0.0;
    let min_len = opts.min_len.max(2);
    loop {
        if total <= 0.0 || covered_mass / total >= opts.coverage_target {
            break;
        }
        let alive: Vec<usize> = (0..space.len()).filter(|&i| remaining[i] > 0.0).collect();
        if alive.is_empty() {
            break;
        }
        let nodes: Vec<ChainNode> = alive
            .iter()
            .map(|&i| {
                let u = f.row(i);
                let t = dot(u, &w);
                let v = if q == 1 { Vec::new() } else { u.iter().zip(&w).map(|(a, b)| a - t * b).collect() };
                ChainNode::new(i, v, t)
            })
            .collect();
        let poset = ChainPoset::build(&nodes, delta, cone.angle(), |a, b| space.dist(a, b), opts.tol)?;
        let chain = poset.longest_chain();
        if chain.length <= 1 {
            break;
        }
        let mut runs: Vec<Vec<usize>> = vec![vec![chain.chain[0]]];
        for win in chain.chain.windows(2) {
            let step = poset.node(win[1]).axial - poset.node(win[0]).axial;
            if opts.max_step.is_some_and(|m| step > m) {
                runs.push(Vec::new());
            }
            runs.last_mut().expect("nonempty").push(win[1]);
        }
        let mut accepted = false;
        for run in runs.into_iter().filter(|r| r.len() >= min_len) {
            let (frag, _) = poset.chain_to_fragment(&run, |a, b| space.dist(a, b))?;
            let masses: Vec<f64> = frag.trace().iter().map(|&x| remaining[x]).collect();
            let m: f64 = masses.iter().sum();
            for &x in frag.trace() {
                remaining[x] = 0.0;
            }
            covered_mass += m;
            pieces.push((frag, masses, m));
            accepted = true;
        }
        if !accepted {
            break;
        }
    }
    let measure: Vec<f64> = space.weights().iter().zip(&remaining).map(|(a, r)| a - r).collect();
    let mut rep = AlbertiRep::empty();
    for (frag, masses, m) in pieces {
        if m <= 0.0 {
            continue;
        }
        rep.probs.push(m / covered_mass);
        rep.densities.push(masses.iter().map(|x| x * covered_mass / m).collect());
        rep.fragments.push(frag);
    }
    if !rep.is_empty() {
        // Remove drift in the probability total from the running sum.
        let s: f64 = rep.probs.iter().sum();
        rep.probs.iter_mut().for_each(|p| *p /= s);
    }
    let covered: Vec<usize> = (0..space.len()).filter(|&i| measure[i] > 0.0).collect();
    let uncovered: Vec<usize> = (0..space.len()).filter(|&i| remaining[i] > 0.0).collect();
    let coverage = if total > 0.0 { covered_mass / total } else { 0.0 };
    Ok(GreedyOutcome { rep, covered, uncovered, coverage, measure })
}

/// Per point, the largest `|<w, (f o gamma)'>| / md_gamma` over pool fragments
/// through it (`None` where no fragment passes). `w = None` uses the full norm.
pub fn weaver_norm_estimate(
    space: &FiniteMetricSpace,
    f: &VectorField,
    w: Option<&[f64]>,
    pool: &[Fragment],
) -> Result<Vec<Option<f64>>, AlbertiError> {
    let mut est: Vec<Option<f64>> = vec![None; space.len()];
    for frag in pool {
        if frag.len() < 2 {
            continue;
        }
        let d = frag.derivative(f)?;
        let md = frag.metric_differential(space)?;
        for (k, &x) in frag.trace().iter().enumerate() {
            if md[k] <= 0.0 {
                continue;
            }
            let num = match w {
                Some(w) => dot(w, d.row(k)).abs(),
                None => crate::field::norm(d.row(k)),
            };
            let v = num / md[k];
            est[x] = Some(est[x].map_or(v, |e: f64| e.max(v)));
        }
    }
    Ok(est)
}

/// For a `side x side` grid (row-major, last coordinate fastest): the lines with
/// the coordinate `axis` varying, unit speed, uniform probabilities, densities
/// `side * mu`.
pub fn grid_line_rep(space: &FiniteMetricSpace, side: usize, axis: usize) -> Result<AlbertiRep, AlbertiError> {
    if side < 2 || side * side != space.len() || axis > 1 {
        return Err(param("side", format!("{} points do not form a {side}x{side} grid", space.len())));
    }
    let step = (side - 1) as f64;
    let mut rep = AlbertiRep::empty();
    for line in 0..side {
        let trace: Vec<usize> = (0..side).map(|k| if axis == 1 { line * side + k } else { k * side + line }).collect();
        let domain = (0..side).map(|k| k as f64 / step).collect();
        rep.densities.push(trace.iter().map(|&x| side as f64 * space.weight(x)).collect());
        rep.fragments.push(Fragment::new(domain, trace)?);
        rep.probs.push(1.0 / side as f64);
    }
    Ok(rep)
}
