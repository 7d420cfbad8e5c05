use std::path::Path;

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::{json, Value};

use lipmm::alberti::{
    derivation_apply, effective_speed, greedy_build_rep, grid_line_rep, indicator_combine, reparametrize, scale_rep,
    sum_reps, validate_rep, AlbertiRep, GreedyOptions,
};
use lipmm::approx::{onedim_approx, Cylinder};
use lipmm::field::VectorField;
use lipmm::fragment::{ConeSpec, Fragment};
use lipmm::io::{self, FragmentFile, RepFile};
use lipmm::lipscape::{
    dyadic_scales, gap_detect, lip_profile, liplip_check, porosity_saturate, porosity_scan, subset_pool,
};
use lipmm::poset::{random_instance, ChainNode, ChainPoset};
use lipmm::space::{
    build_net, cantor, dyadic_scale_pairs, estimate_assouad, grid, segment, triadic_with_cantor, FiniteMetricSpace,
    Metric, SpaceError,
};
use lipmm::zahorski::{self, CantorFlatFamily, Schedule};

use crate::report::{header, num, opt, Reporter};
use crate::*;

/// An internal consistency check failed.
#[derive(Debug, thiserror::Error)]
#[error("internal invariant breached: {0}")]
pub struct Invariant(pub String);

fn config(args: &impl Serialize) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

fn metric(m: MetricArg) -> Metric {
    match m {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Max => Metric::Max,
    }
}

fn load_space(s: &SpaceIn, tol: f64) -> Result<FiniteMetricSpace> {
    let space = if s.matrix {
        io::read_matrix_space(&s.input, None, tol)?
    } else {
        io::read_space(&s.input, metric(s.metric), tol)?
    };
    Ok(space)
}

fn load_set(path: Option<&Path>, space: &FiniteMetricSpace) -> Result<Vec<usize>> {
    Ok(match path {
        Some(p) => io::read_ids(p, space)?,
        None => (0..space.len()).collect(),
    })
}

fn first_column(path: &Path, space: &FiniteMetricSpace) -> Result<Vec<f64>> {
    Ok(io::read_function(path, space)?.component(0))
}

fn axis_for(axis: &Option<Vec<f64>>, dim: usize) -> Result<Vec<f64>> {
    let w = match axis {
        Some(w) => w.clone(),
        None => {
            let mut w = vec![0.0; dim];
            w[0] = 1.0;
            w
        }
    };
    if w.len() != dim {
        bail!("cone-axis has {} components but the values have {dim}", w.len());
    }
    let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) || !n.is_finite() {
        bail!("cone-axis must be a nonzero finite vector");
    }
    Ok(w.iter().map(|x| x / n).collect())
}

fn scales_for(s: &ScalesArg, space: &FiniteMetricSpace) -> Vec<f64> {
    match &s.scales {
        Some(v) => v.clone(),
        None => dyadic_scales(s.top.unwrap_or_else(|| space.diameter()), s.count),
    }
}

fn ids(space: &FiniteMetricSpace, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| space.id(i).to_string()).collect()
}

fn done(ok: bool, summary: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { ok, summary: summary.into() })
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let tol = cli.tol;
    if !(tol >= 0.0) || !tol.is_finite() {
        bail!(lipmm::approx::ApproxError::BadParam { name: "tol", reason: format!("must be finite and nonnegative, got {tol}") });
    }
    let rep = |name: &str, args: Value| Reporter::new(&cli.out, name, args, tol);
    match &cli.cmd {
        Command::Space(SpaceCmd::Generate(a)) => space_generate(rep("space generate", config(a))?, a),
        Command::Space(SpaceCmd::Validate(a)) => space_validate(rep("space validate", config(a))?, a, tol),
        Command::Net(NetCmd::Build(a)) => net_build(rep("net build", config(a))?, a, tol),
        Command::Poset(PosetCmd::Chains(a)) => poset(rep("poset chains", config(a))?, a, tol, false),
        Command::Poset(PosetCmd::Antichains(a)) => poset(rep("poset antichains", config(a))?, a, tol, true),
        Command::Approx(ApproxCmd::Run(a)) => approx_run(rep("approx run", config(a))?, a, tol),
        Command::Alberti(AlbertiCmd::Build(a)) => alberti_build(rep("alberti build", config(a))?, a, tol),
        Command::Alberti(AlbertiCmd::Validate(a)) => alberti_validate(rep("alberti validate", config(a))?, a, tol),
        Command::Alberti(AlbertiCmd::Derive(a)) => alberti_derive(rep("alberti derive", config(a))?, a, tol),
        Command::Alberti(AlbertiCmd::Algebra(a)) => alberti_algebra(rep("alberti algebra", config(a))?, a, tol),
        Command::Lip(LipCmd::Profile(a)) => lip_profile_cmd(rep("lip profile", config(a))?, a, tol),
        Command::Lip(LipCmd::Liplip(a)) => liplip_cmd(rep("lip liplip", config(a))?, a, tol),
        Command::Porosity(PorosityCmd::Scan(a)) => porosity(rep("porosity scan", config(a))?, a, tol, false),
        Command::Porosity(PorosityCmd::Saturate(a)) => porosity(rep("porosity saturate", config(a))?, a, tol, true),
        Command::Gap(GapCmd::Detect(a)) => gap_cmd(rep("gap detect", config(a))?, a, tol),
        Command::Zahorski(ZahorskiCmd::Build(a)) => zahorski_cmd(rep("zahorski build", config(a))?, a, tol, false),
        Command::Zahorski(ZahorskiCmd::Report(a)) => zahorski_cmd(rep("zahorski report", config(a))?, a, tol, true),
    }
}

fn points_table(r: &Reporter, name: &str, space: &FiniteMetricSpace) -> Result<()> {
    let dim = space.coords(0).map_or(0, |c| c.len());
    let mut cols = vec!["id".to_string()];
    cols.extend((1..=dim).map(|k| format!("x{k}")));
    cols.push("weight".into());
    let rows = (0..space.len()).map(|i| {
        let mut row = vec![space.id(i).to_string()];
        row.extend(space.coords(i).unwrap_or(&[]).iter().map(|&x| num(x)));
        row.push(num(space.weight(i)));
        row
    });
    r.table(name, &cols, rows)
}

fn space_generate(r: Reporter, a: &GenerateArgs) -> Result<Outcome> {
    let (space, set) = match a.kind {
        Kind::Grid => (grid(a.dim, a.n, metric(a.metric))?, None),
        Kind::Segment => (segment(a.n)?, None),
        Kind::Cantor => (cantor(a.level)?, None),
        Kind::Triadic => {
            let (s, set) = triadic_with_cantor(a.level)?;
            (s, Some(set))
        }
    };
    r.raw_json("space.json", &io::space_json(&space))?;
    if space.coords(0).is_some() {
        points_table(&r, "points.csv", &space)?;
    }
    if let Some(set) = &set {
        r.raw_json("set.json", &ids(&space, set))?;
    }
    r.report(
        "generate.json",
        json!({ "points": space.len(), "mass": space.mass(), "diameter": space.diameter(), "set_size": set.map(|s| s.len()) }),
    )?;
    done(true, format!("generated {} points in {}", space.len(), r.path("space.json").display()))
}

fn space_validate(r: Reporter, a: &ValidateArgs, tol: f64) -> Result<Outcome> {
    match load_space(&a.space, tol) {
        Ok(space) => {
            r.report(
                "validate.json",
                json!({ "valid": true, "points": space.len(), "mass": space.mass(), "diameter": space.diameter(), "metric": space.metric() }),
            )?;
            done(true, format!("valid space with {} points", space.len()))
        }
        Err(e) => match e.downcast_ref::<io::IoError>() {
            Some(io::IoError::Space(se)) if !matches!(se, SpaceError::Empty) => {
                r.report("validate.json", json!({ "valid": false, "error": se.to_string(), "detail": format!("{se:?}") }))?;
                done(false, se.to_string())
            }
            _ => Err(e),
        },
    }
}

fn net_build(r: Reporter, a: &NetArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let net = build_net(&space, a.net_eps)?;
    let separated = net.is_separated(&space);
    let maximal = net.is_maximal(&space);
    let assouad = estimate_assouad(&space, &dyadic_scale_pairs(space.diameter().max(f64::MIN_POSITIVE), a.scales.max(1)))?;
    r.table("net.csv", &header(&["id"]), net.members.iter().map(|&i| vec![space.id(i).to_string()]))?;
    r.table(
        "covering.csv",
        &header(&["center", "big", "small", "count", "exponent"]),
        assouad.table.iter().map(|c| vec![space.id(c.center).to_string(), num(c.big), num(c.small), c.count.to_string(), num(c.exponent)]),
    )?;
    r.report(
        "net.json",
        json!({
            "eps": net.eps, "size": net.members.len(), "members": ids(&space, &net.members),
            "separated": separated, "maximal": maximal, "assouad_estimate": assouad.estimate,
        }),
    )?;
    if !(separated && maximal) {
        return Err(Invariant("greedy net is not a maximal separated set".into()).into());
    }
    done(true, format!("net of {} points at eps {}", net.members.len(), net.eps))
}

fn cylinder_nodes(f: &VectorField, w: &[f64], set: &[usize]) -> Result<Vec<ChainNode>> {
    let cyl = Cylinder::embed(f, w)?;
    Ok(set.iter().map(|&i| ChainNode::new(i, cyl.transverse[i].clone(), cyl.axial[i])).collect())
}

fn poset(r: Reporter, a: &PosetArgs, tol: f64, antichains: bool) -> Result<Outcome> {
    let (space, nodes) = match (a.random, &a.input) {
        (Some(n), None) => {
            let Some(seed) = a.seed else { bail!(lipmm::approx::ApproxError::BadParam { name: "seed", reason: "required for random instances".into() }) };
            random_instance(n, a.transverse, seed)?
        }
        (None, Some(input)) => {
            let sin = SpaceIn { input: input.clone(), metric: a.metric, matrix: false };
            let space = load_space(&sin, tol)?;
            let Some(values) = &a.values else { bail!(lipmm::approx::ApproxError::BadParam { name: "values", reason: "required with --input".into() }) };
            let f = io::read_function(values, &space)?;
            let w = axis_for(&a.cone_axis, f.dim())?;
            let set = load_set(a.set.as_deref(), &space)?;
            let nodes = cylinder_nodes(&f, &w, &set)?;
            (space, nodes)
        }
        _ => bail!(lipmm::approx::ApproxError::BadParam { name: "input", reason: "give exactly one of --input or --random".into() }),
    };
    let p = ChainPoset::build(&nodes, a.delta, a.alpha, |x, y| space.dist(x, y), tol.min(1e-12))?;
    let node_id = |k: usize| space.id(p.node(k).base).to_string();
    if antichains {
        let levels = p.mirsky_decompose();
        let chain = p.longest_chain();
        let all_antichains = levels.iter().all(|l| p.is_antichain(l));
        r.raw_json("poset.json", &p.dump())?;
        let lv = p.levels();
        r.table("levels.csv", &header(&["node", "id", "level"]), (0..p.len()).map(|k| vec![k.to_string(), node_id(k), lv[k].to_string()]))?;
        r.report(
            "antichains.json",
            json!({
                "count": levels.len(), "longest_chain": chain.length, "all_antichains": all_antichains,
                "antichains": levels.iter().map(|l| l.iter().map(|&k| node_id(k)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
        )?;
        if levels.len() != chain.length || !all_antichains {
            return Err(Invariant(format!("{} antichains against a longest chain of {}", levels.len(), chain.length)).into());
        }
        done(true, format!("{} antichains (= longest chain)", levels.len()))
    } else {
        let chain = p.longest_chain();
        let (frag, cert) = p.chain_to_fragment(&chain.chain, |x, y| space.dist(x, y))?;
        r.raw_json("fragment.json", &FragmentFile::from_fragment(&space, &frag))?;
        r.report(
            "chains.json",
            json!({
                "nodes": p.len(), "length": chain.length,
                "chain": chain.chain.iter().map(|&k| node_id(k)).collect::<Vec<_>>(), "certificate": cert,
            }),
        )?;
        done(true, format!("longest chain has {} nodes", chain.length))
    }
}

fn approx_run(r: Reporter, a: &ApproxArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let f = io::read_function(&a.function.values, &space)?;
    let w = axis_for(&a.function.cone_axis, f.dim())?;
    let set = load_set(a.function.set.as_deref(), &space)?;
    let out = onedim_approx(&space, &set, &f, &w, a.delta, a.alpha, a.n, tol)?;
    let c = &out.certificate;
    r.table(
        "tau.csv",
        &header(&["id", "tau", "tau_n"]),
        (0..space.len()).map(|i| vec![space.id(i).to_string(), num(out.tau[i]), num(out.tau_n[i])]),
    )?;
    if a.sweep {
        let mut rows = Vec::new();
        let mut n = 1;
        while n <= a.n {
            let s = if n == a.n { out.certificate.clone() } else { onedim_approx(&space, &set, &f, &w, a.delta, a.alpha, n, tol)?.certificate };
            rows.push(vec![n.to_string(), s.m_n.to_string(), num(s.sup_error), num(s.bound)]);
            n *= 2;
        }
        r.table("error_vs_n.csv", &header(&["n", "M_n", "sup_error", "bound"]), rows)?;
    }
    r.report("certificate.json", c)?;
    let ok = c.global_violations == 0 && c.sup_error <= c.bound + tol;
    done(ok, format!("M_n = {}, sup error {} against bound {}, {} Lipschitz violations", c.m_n, c.sup_error, c.bound, c.global_violations))
}

fn alberti_build(r: Reporter, a: &AlbertiBuildArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    if let Some(side) = a.grid_side {
        let rep = grid_line_rep(&space, side, a.axis)?;
        r.raw_json("rep.json", &RepFile::from_rep(&space, &rep))?;
        r.report("build.json", json!({ "method": "grid lines", "fragments": rep.len(), "coverage": 1.0 }))?;
        return done(true, format!("{} grid-line fragments", rep.len()));
    }
    let Some(values) = &a.values else { bail!(lipmm::approx::ApproxError::BadParam { name: "values", reason: "required without --grid-side".into() }) };
    let f = io::read_function(values, &space)?;
    let w = axis_for(&a.cone_axis, f.dim())?;
    let cone = ConeSpec::normalized(w, a.angle, true)?;
    let opts = GreedyOptions { coverage_target: a.coverage, max_step: a.max_step, min_len: a.min_len, tol: tol.min(1e-12) };
    let out = greedy_build_rep(&space, &f, &cone, a.delta, &opts)?;
    r.raw_json("rep.json", &RepFile::from_rep(&space, &out.rep))?;
    r.report(
        "build.json",
        json!({
            "method": "greedy chains", "fragments": out.rep.len(), "coverage": out.coverage,
            "covered": ids(&space, &out.covered), "uncovered": ids(&space, &out.uncovered),
        }),
    )?;
    done(out.coverage >= a.coverage - tol, format!("{} fragments covering {} of the mass", out.rep.len(), out.coverage))
}

fn alberti_validate(r: Reporter, a: &AlbertiRepArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let rep = io::read_rep(&a.rep, &space)?;
    let res = validate_rep(&space, &rep, tol)?;
    r.table("residual.csv", &header(&["id", "residual"]), (0..space.len()).map(|i| vec![space.id(i).to_string(), num(res.residual[i])]))?;
    r.report("validate.json", &res)?;
    done(res.pass, format!("max residual {}", res.max))
}

fn derivation_rows(space: &FiniteMetricSpace, d: &[Option<Vec<f64>>], sigma: &[Option<f64>], dim: usize) -> (Vec<String>, Vec<Vec<String>>) {
    let mut cols = header(&["id", "mu"]);
    cols.extend((1..=dim).map(|k| format!("Df{k}")));
    cols.push("sigma".into());
    let rows = (0..space.len())
        .map(|i| {
            let mut row = vec![space.id(i).to_string(), num(space.weight(i))];
            match &d[i] {
                Some(v) => row.extend(v.iter().map(|&x| num(x))),
                None => row.extend(std::iter::repeat_n(String::new(), dim)),
            }
            row.push(opt(sigma[i]));
            row
        })
        .collect();
    (cols, rows)
}

fn alberti_derive(r: Reporter, a: &AlbertiDeriveArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let rep = io::read_rep(&a.rep, &space)?;
    let f = io::read_function(&a.values, &space)?;
    let g = a.pair_with.as_deref().map(|p| first_column(p, &space)).transpose()?;
    let d = derivation_apply(&space, &rep, &f, g.as_deref())?;
    let sigma = effective_speed(&space, &rep)?;
    let (cols, rows) = derivation_rows(&space, &d.values, &sigma, d.dim);
    r.table("derivation.csv", &cols, rows)?;
    let pairing_ok = match (&d.pairing, d.pairing_bound) {
        (Some(p), Some(b)) => p.iter().map(|x| x * x).sum::<f64>().sqrt() <= b + tol,
        _ => true,
    };
    r.report("derivation.json", json!({ "derivation": &d, "sigma": sigma, "pairing_ok": pairing_ok }))?;
    if !pairing_ok {
        return Err(Invariant("derivation pairing exceeds its norm bound".into()).into());
    }
    done(true, format!("derivation on {} points ({} excluded)", space.len(), d.excluded.len()))
}

fn alberti_algebra(r: Reporter, a: &AlbertiAlgebraArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let rep = io::read_rep(&a.rep, &space)?;
    let f = io::read_function(&a.values, &space)?;
    let base = derivation_apply(&space, &rep, &f, None)?.values;
    let n = space.len();
    // New representation, expected derivation and allowed deviation per point.
    let (out, expected, allowed): (AlbertiRep, Vec<Option<Vec<f64>>>, Vec<f64>) = match a.op {
        AlgebraOp::Reparametrize => {
            let out = reparametrize(&rep, a.a, a.b)?;
            let exp = base.iter().map(|v| v.as_ref().map(|v| v.iter().map(|x| a.a * x).collect())).collect();
            (out, exp, vec![tol; n])
        }
        AlgebraOp::Indicator => {
            let subset = load_set(a.subset.as_deref(), &space)?;
            let mut inside = vec![false; n];
            subset.iter().for_each(|&i| inside[i] = true);
            let out = indicator_combine(&space, &rep, &subset)?;
            let exp = base
                .iter()
                .enumerate()
                .map(|(i, v)| v.as_ref().map(|v| v.iter().map(|x| if inside[i] { *x } else { 0.0 }).collect()))
                .collect();
            (out, exp, vec![tol; n])
        }
        AlgebraOp::Sum => {
            let mut reps = vec![rep.clone()];
            if a.with.is_empty() {
                reps.push(rep.clone());
            }
            for p in &a.with {
                reps.push(io::read_rep(p, &space)?);
            }
            let mut exp: Vec<Option<Vec<f64>>> = vec![Some(vec![0.0; f.dim()]); n];
            for rp in &reps {
                let d = derivation_apply(&space, rp, &f, None)?.values;
                for (e, v) in exp.iter_mut().zip(d) {
                    *e = match (e.take(), v) {
                        (Some(e), Some(v)) => Some(e.iter().zip(&v).map(|(x, y)| x + y).collect()),
                        _ => None,
                    };
                }
            }
            (sum_reps(&space, &reps)?, exp, vec![tol; n])
        }
        AlgebraOp::Scale => {
            let Some(lp) = &a.lambda else { bail!(lipmm::approx::ApproxError::BadParam { name: "lambda", reason: "required for --op scale".into() }) };
            let lambda = first_column(lp, &space)?;
            let out = scale_rep(&space, &rep, &lambda, a.bound, a.depth)?;
            let exp = base.iter().enumerate().map(|(i, v)| v.as_ref().map(|v| v.iter().map(|x| lambda[i] * x).collect())).collect();
            let step = a.bound * 0.5f64.powi(a.depth as i32);
            let allowed = base
                .iter()
                .map(|v| v.as_ref().map_or(0.0, |v| step * v.iter().map(|x| x * x).sum::<f64>().sqrt()) + tol)
                .collect();
            (out, exp, allowed)
        }
    };
    let got = derivation_apply(&space, &out, &f, None)?.values;
    let mut worst = 0.0f64;
    let mut failing = Vec::new();
    for i in 0..n {
        let dev = match (&got[i], &expected[i]) {
            (Some(g), Some(e)) => g.iter().zip(e).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        worst = worst.max(dev);
        if dev > allowed[i] {
            failing.push(space.id(i).to_string());
        }
    }
    r.raw_json("rep_out.json", &RepFile::from_rep(&space, &out))?;
    r.report("algebra.json", json!({ "op": a.op, "max_deviation": worst, "failing": failing, "pass": failing.is_empty() }))?;
    done(failing.is_empty(), format!("max deviation {worst}"))
}

fn lip_profile_cmd(r: Reporter, a: &LipProfileArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let f = first_column(&a.values, &space)?;
    let scales = scales_for(&a.scales, &space);
    let p = lip_profile(&space, &f, &scales)?;
    let mut rows = Vec::new();
    for i in 0..space.len() {
        for (k, s) in p.scales.iter().enumerate() {
            rows.push(vec![space.id(i).to_string(), num(*s), num(p.biglip[i][k]), num(p.smllip[i][k])]);
        }
    }
    r.table("profile.csv", &header(&["id", "r", "biglip", "smllip"]), rows)?;
    r.report("profile.json", &p)?;
    done(true, format!("profile at {} scales", p.scales.len()))
}

fn liplip_cmd(r: Reporter, a: &LipLipArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let f = first_column(&a.values, &space)?;
    let rep = liplip_check(&space, &f, a.window, a.tau, tol)?;
    r.table(
        "liplip.csv",
        &header(&["id", "biglip", "smllip", "ratio", "flagged"]),
        rep.points.iter().map(|p| vec![space.id(p.point).to_string(), num(p.biglip), num(p.smllip), num(p.ratio), p.flagged.to_string()]),
    )?;
    r.report("liplip.json", &rep)?;
    done(rep.lip_bound_failures.is_empty(), format!("{} points with ratio above 1, {} check failures", rep.flagged.len(), rep.lip_bound_failures.len()))
}

fn porosity(r: Reporter, a: &PorosityArgs, tol: f64, saturate: bool) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let set = io::read_ids(&a.set, &space)?;
    let scales = scales_for(&a.scales, &space);
    if saturate {
        let s = porosity_saturate(&space, &set, a.c, &scales)?;
        r.raw_json("saturated_space.json", &io::space_json(&s.space))?;
        let ok = s.recertified.all_certified();
        r.report(
            "saturate.json",
            json!({
                "added": s.added, "members": ids(&space, &s.members), "per_scale": s.per_scale,
                "recertified_c": s.recertified.c, "min_constant": s.recertified.min_constant, "certified": s.recertified.certified,
            }),
        )?;
        return done(ok, format!("added {} points; re-certified at {}: {ok}", s.added, s.recertified.c));
    }
    let scan = porosity_scan(&space, &set, a.c, &scales)?;
    r.report("porosity.json", &scan)?;
    let ok = scan.all_certified();
    done(ok, format!("minimum constants {:?}", scan.min_constant))
}

fn gap_cmd(r: Reporter, a: &GapArgs, tol: f64) -> Result<Outcome> {
    let space = load_space(&a.space, tol)?;
    let set = io::read_ids(&a.set, &space)?;
    let f = first_column(&a.values, &space)?;
    let pool: Vec<Fragment> = match (&a.pool, a.pool_step) {
        (Some(p), _) => io::read_fragments(p, &space)?,
        (None, Some(h)) => subset_pool(&space, &set, h)?,
        (None, None) => Vec::new(),
    };
    let v = gap_detect(&space, &set, &f, a.alpha, a.beta, &pool, a.window, tol)?;
    r.report("gap.json", json!({ "verdict": &v, "pool_size": pool.len() }))?;
    done(true, v.verdict.clone())
}

fn zahorski_cmd(r: Reporter, a: &ZahorskiArgs, tol: f64, report: bool) -> Result<Outcome> {
    let delta0 = zahorski::parse_ratio(&a.delta0)?;
    let l = zahorski::parse_ratio(&a.lip)?;
    let alpha = zahorski::parse_ratio(&a.alpha)?;
    let family = CantorFlatFamily::new(a.max_generation, delta0, l)?;
    let schedule = Schedule::build(&family, &alpha, a.depth)?;
    let (points, set) = zahorski::cantor_probe_sample(&schedule, a.set_level, a.grid_level)?;
    let mut weights = vec![0.0; points.len()];
    set.iter().for_each(|&s| weights[s] = 1.0 / set.len() as f64);
    let out = zahorski::build_independent(&points, &set, &weights, &family, a.m, &alpha, a.depth, tol)?;
    let pid = |i: usize| format!("x{i}");
    let c = &out.certificate;
    if !report {
        let mut cols = header(&["id", "x", "x_exact"]);
        cols.extend((0..a.m).map(|j| format!("psi_{j}")));
        let rows = points.order().iter().map(|&i| {
            let mut row = vec![pid(i), num(points.coord(i)), points.position(i).to_string()];
            row.extend(out.psi.iter().map(|p| num(zahorski::to_f64(&p[i]))));
            row
        });
        r.table("psi.csv", &cols, rows)?;
        r.report(
            "construction.json",
            json!({
                "schedule": out.schedule.view(), "levels": out.levels, "certificate": c,
                "sample_points": points.len(), "set": set.iter().map(|&i| pid(i)).collect::<Vec<_>>(),
                "kept": out.kept.iter().map(|&i| pid(i)).collect::<Vec<_>>(),
                "mass_note": "the kept set is the finite-depth intersection; its mass is compared with the product of per-level bounds",
            }),
        )?;
        let ok = c.lip_ok && c.lower_ok;
        return done(ok, format!("Lipschitz {:?} (bound {}), min variation {} (bound {})", c.psi_lipschitz, c.lip_bound, c.min_variation, c.lower_bound));
    }
    let v = zahorski::liplip_violation_report(&points, &out.kept, &out.phi(), &out.schedule, tol)?;
    r.table(
        "violation.csv",
        &header(&["id", "x", "finest_biglip", "window_variation", "ratio"]),
        v.rows.iter().map(|row| vec![pid(row.point), num(points.coord(row.point)), num(row.finest_biglip), num(row.window_variation), num(row.ratio)]),
    )?;
    r.report("violation.json", json!({ "schedule": out.schedule.view(), "report": &v }))?;
    let min_ratio = v.rows.iter().map(|x| x.ratio).fold(f64::INFINITY, f64::min);
    done(v.all_ok, format!("minimum ratio {min_ratio} over {} points", v.rows.len()))
}
