//! Acceptance criteria. Runs without the test harness so that each criterion
//! always prints one `PASS`/`FAIL` line; exits non-zero if any criterion fails.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use lipmm::alberti::{
    check_directional_cone, check_speed_bound, derivation_apply, effective_speed, grid_line_rep, indicator_combine,
    reparametrize, scale_rep, sum_reps, validate_rep, weaver_norm_estimate, AlbertiRep,
};
use lipmm::approx::onedim_approx;
use lipmm::field::VectorField;
use lipmm::fragment::{check_direction_speed, ConeField, ConeSpec};
use lipmm::lipscape::{dyadic_scales, gap_detect, porosity_saturate, porosity_scan, subset_pool};
use lipmm::poset::{random_instance, ChainPoset};
use lipmm::space::{cantor_numerators, grid, segment, DistSpec, FiniteMetricSpace, Metric, Point};
use lipmm::zahorski::{self, CantorFlatFamily, Schedule};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn coords(s: &FiniteMetricSpace) -> VectorField {
    VectorField::from_rows(&(0..s.len()).map(|i| s.coords(i).unwrap().to_vec()).collect::<Vec<_>>()).unwrap()
}

fn scalar(v: &[f64]) -> VectorField {
    VectorField::scalar(v).unwrap()
}

fn d_scalar(s: &FiniteMetricSpace, rep: &AlbertiRep, f: &VectorField) -> Result<Vec<f64>, String> {
    let d = derivation_apply(s, rep, f, None).map_err(|e| e.to_string())?;
    Ok((0..s.len()).map(|i| d.scalar(i).unwrap_or(f64::NAN)).collect())
}

fn fubini_reconstruction() -> Outcome {
    let n = 16;
    let g = grid(2, n, Metric::Euclidean).unwrap();
    let rep = grid_line_rep(&g, n, 1).map_err(|e| e.to_string())?;
    let res = validate_rep(&g, &rep, 1e-12).map_err(|e| e.to_string())?;
    ensure(res.pass && res.max <= 1e-12, || format!("max residual {}", res.max))?;
    let y: Vec<f64> = (0..g.len()).map(|i| g.coords(i).unwrap()[1]).collect();
    let dy = d_scalar(&g, &rep, &scalar(&y))?;
    let sigma = effective_speed(&g, &rep).map_err(|e| e.to_string())?;
    let interior = (0..g.len()).filter(|&i| (1..n - 1).contains(&(i / n)) && (1..n - 1).contains(&(i % n)));
    let mut worst = 0.0f64;
    for i in interior {
        let s = sigma[i].unwrap_or(f64::NAN);
        worst = worst.max((dy[i] - 1.0).abs()).max((s - 1.0).abs());
        ensure(dy[i] == 1.0 && s == 1.0, || format!("point {i}: D(y) = {}, sigma = {s}", dy[i]))?;
    }
    Ok(format!("max residual {:e}, max |D(y) - 1|, |sigma - 1| = {worst:e}", res.max))
}

/// Order recomputed from its definition: `(t, index)` increasing, axial gap at
/// least `delta d` and `cot(alpha)` times the transverse gap.
fn oracle_less(s: &FiniteMetricSpace, nodes: &[lipmm::poset::ChainNode], delta: f64, alpha: f64, x: usize, y: usize) -> bool {
    let (a, b) = (&nodes[x], &nodes[y]);
    if (a.axial, x) >= (b.axial, y) {
        return false;
    }
    let dt = b.axial - a.axial;
    let dv = a.transverse.iter().zip(&b.transverse).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
    dt >= delta * s.dist(a.base, b.base) - 1e-12 && dt * alpha.tan() >= dv - 1e-12
}

fn brute_longest(n: usize, less: &dyn Fn(usize, usize) -> bool) -> usize {
    fn go(x: usize, n: usize, less: &dyn Fn(usize, usize) -> bool, memo: &mut HashMap<usize, usize>) -> usize {
        if let Some(&v) = memo.get(&x) {
            return v;
        }
        let v = 1 + (0..n).filter(|&y| less(x, y)).map(|y| go(y, n, less, memo)).max().unwrap_or(0);
        memo.insert(x, v);
        v
    }
    let mut memo = HashMap::new();
    (0..n).map(|x| go(x, n, less, &mut memo)).max().unwrap_or(0)
}

fn mirsky_duality() -> Outcome {
    let mut sizes = 0;
    let mut longest = 0;
    for seed in 0..200u64 {
        let n = 10 + (seed as usize * 37) % 111;
        let (s, nodes) = random_instance(n, (seed % 3) as usize, seed).map_err(|e| e.to_string())?;
        let delta = [0.2, 0.5, 1.0, 2.0][(seed % 4) as usize];
        let alpha = [0.3, 0.7, 1.2][(seed % 3) as usize];
        let p = ChainPoset::build(&nodes, delta, alpha, |a, b| s.dist(a, b), 1e-12).map_err(|e| e.to_string())?;
        ensure(p.len() == n, || format!("seed {seed}: duplicates merged"))?;
        let less = |x: usize, y: usize| oracle_less(&s, &nodes, delta, alpha, x, y);
        let brute = brute_longest(n, &less);
        let anti = p.mirsky_decompose();
        ensure(anti.len() == brute, || format!("seed {seed}: {} antichains, longest chain {brute}", anti.len()))?;
        let mut seen = vec![false; n];
        for a in &anti {
            for (k, &x) in a.iter().enumerate() {
                ensure(!std::mem::replace(&mut seen[x], true), || format!("seed {seed}: node {x} twice"))?;
                for &y in &a[k + 1..] {
                    ensure(!less(x, y) && !less(y, x), || format!("seed {seed}: {x} and {y} comparable"))?;
                }
            }
        }
        ensure(seen.iter().all(|&b| b), || format!("seed {seed}: nodes missing from the decomposition"))?;
        sizes += n;
        longest = longest.max(brute);
    }
    Ok(format!("200 posets, {sizes} nodes, longest chain up to {longest}"))
}

fn approximation_certificates() -> Outcome {
    let mut worst_ratio = 0.0f64;
    let mut max_m = 0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let level = 3 + (seed % 4) as u32;
        let den = 3f64.powi(level as i32);
        let mut pts: Vec<Point> =
            cantor_numerators(level).iter().map(|&a| Point::new(format!("c{a}"), vec![a as f64 / den])).collect();
        let set: Vec<usize> = (0..pts.len()).collect();
        while pts.len() < 1000 {
            let k = pts.len();
            pts.push(Point::new(format!("r{k}"), vec![rng.gen::<f64>()]));
        }
        let space = FiniteMetricSpace::build(pts, DistSpec::Euclidean, vec![1e-3; 1000], 1e-9).map_err(|e| e.to_string())?;
        let q = 1 + (seed % 2) as usize;
        let (f, w) = if q == 1 {
            (coords(&space), vec![1.0])
        } else {
            let rows: Vec<Vec<f64>> = (0..space.len())
                .map(|i| {
                    let x = space.coords(i).unwrap()[0];
                    vec![x, 0.3 * (2.0 * PI * x).sin() / (2.0 * PI)]
                })
                .collect();
            let phi: f64 = rng.gen_range(-0.6..0.6);
            (VectorField::from_rows(&rows).unwrap(), vec![phi.cos(), phi.sin()])
        };
        let delta = [0.1, 0.25, 0.5][(seed % 3) as usize];
        let alpha = [0.5, 0.8, 1.1][(seed / 3 % 3) as usize];
        let n = [6, 10, 16, 24, 40][(seed / 9 % 5) as usize];
        let a = onedim_approx(&space, &set, &f, &w, delta, alpha, n, 1e-9).map_err(|e| format!("seed {seed}: {e}"))?;
        let c = &a.certificate;
        ensure(c.global_violations == 0, || format!("seed {seed}: {} Lipschitz violations", c.global_violations))?;
        let bound = 3.0 * (1.0 + delta + 1.0 / alpha.tan()) * c.m_n as f64 / n as f64;
        let sup = a.tau.iter().zip(&a.tau_n).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        ensure(sup <= bound, || format!("seed {seed}: sup error {sup} > bound {bound}"))?;
        if bound > 0.0 {
            worst_ratio = worst_ratio.max(sup / bound);
        }
        max_m = max_m.max(c.m_n);
    }
    Ok(format!("50 instances, zero violations, max sup/bound {worst_ratio:.3}, M(n) up to {max_m}"))
}

fn representation_algebra() -> Outcome {
    let n = 16;
    let g = grid(2, n, Metric::Euclidean).unwrap();
    let rep = grid_line_rep(&g, n, 1).map_err(|e| e.to_string())?;
    let f: Vec<f64> = (0..g.len()).map(|i| {
        let c = g.coords(i).unwrap();
        2.0 * c[0] - 3.0 * c[1] + 0.5
    }).collect();
    let fv = scalar(&f);
    let base = d_scalar(&g, &rep, &fv)?;
    let mut worst = 0.0f64;
    let mut cmp = |got: &[f64], want: &dyn Fn(usize) -> f64, what: &str| -> Result<(), String> {
        for i in 0..g.len() {
            let e = (got[i] - want(i)).abs();
            worst = worst.max(e);
            ensure(e <= 1e-9, || format!("{what} at {i}: {} vs {}", got[i], want(i)))?;
        }
        Ok(())
    };
    for &(a, b) in &[(2.0, 0.0), (-1.0, 3.0), (0.25, -1.5)] {
        let r = reparametrize(&rep, a, b).map_err(|e| e.to_string())?;
        cmp(&d_scalar(&g, &r, &fv)?, &|i| a * base[i], "reparametrization")?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let u: Vec<usize> = (0..g.len()).filter(|_| rng.gen_bool(0.4)).collect();
    let ind = indicator_combine(&g, &rep, &u).map_err(|e| e.to_string())?;
    cmp(&d_scalar(&g, &ind, &fv)?, &|i| if u.contains(&i) { base[i] } else { 0.0 }, "indicator")?;
    let other = reparametrize(&rep, -0.5, 0.0).map_err(|e| e.to_string())?;
    let sum = sum_reps(&g, &[rep.clone(), other.clone(), ind.clone()]).map_err(|e| e.to_string())?;
    let (d_other, d_ind) = (d_scalar(&g, &other, &fv)?, d_scalar(&g, &ind, &fv)?);
    cmp(&d_scalar(&g, &sum, &fv)?, &|i| base[i] + d_other[i] + d_ind[i], "sum")?;

    let (m, k) = (2.0, 10);
    let lambda: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.0..m)).collect();
    let sc = scale_rep(&g, &rep, &lambda, m, k).map_err(|e| e.to_string())?;
    let ds = d_scalar(&g, &sc, &fv)?;
    let mut scale_worst = 0.0f64;
    for i in 0..g.len() {
        let dev = (ds[i] - lambda[i] * base[i]).abs();
        let cap = m * 2f64.powi(-(k as i32)) * base[i].abs();
        scale_worst = scale_worst.max(dev / cap);
        ensure(dev <= cap + 1e-12, || format!("scale at {i}: deviation {dev} > {cap}"))?;
    }
    Ok(format!("identities within {worst:e}; scale deviation at most {scale_worst:.3} of the cap"))
}

fn cone_and_speed() -> Outcome {
    let (mut clean, mut violating) = (0, 0);
    for inst in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(50 + inst);
        let side = 5 + (inst % 6) as usize;
        let g = grid(2, side, Metric::Euclidean).unwrap();
        let f = coords(&g);
        let y = f.component(1);
        let mut rep = grid_line_rep(&g, side, 1).map_err(|e| e.to_string())?;
        let mut flipped = Vec::new();
        if inst % 2 == 1 {
            while flipped.len() < 1 + (inst % 3) as usize {
                let c = rng.gen_range(0..side);
                if !flipped.contains(&c) {
                    flipped.push(c);
                    rep.fragments[c] = rep.fragments[c].affine_domain(-1.0, 0.0).map_err(|e| e.to_string())?;
                    rep.densities[c].reverse();
                }
            }
        }
        let theta = 0.1 * (inst % 5) as f64;
        let cone = ConeSpec::new(vec![theta.sin(), theta.cos()], FRAC_PI_4, true, 1e-12).map_err(|e| e.to_string())?;
        let cones = ConeField::Constant(cone);
        let delta = 0.5 + 0.1 * (inst % 4) as f64;
        let certify = rep
            .fragments
            .iter()
            .map(|fr| check_direction_speed(fr, &g, &f, &cones, delta, &y, 1e-12).map(|r| r.certifies(0.0)))
            .collect::<Result<Vec<bool>, _>>()
            .map_err(|e| e.to_string())?;
        let cone_check = check_directional_cone(&g, &rep, &f, &cones, 1e-9).map_err(|e| e.to_string())?;
        let speed_check = check_speed_bound(&g, &rep, &y, delta, 1e-9).map_err(|e| e.to_string())?;
        for (c, &ok) in certify.iter().enumerate() {
            ensure(ok != flipped.contains(&c), || format!("instance {inst}: fragment {c} certifies = {ok}"))?;
        }
        if certify.iter().all(|&b| b) {
            ensure(cone_check.asserted && speed_check.asserted, || format!("instance {inst}: clean instance not asserted"))?;
            clean += 1;
        } else {
            for (name, chk) in [("cone", &cone_check), ("speed", &speed_check)] {
                ensure(!chk.asserted && !chk.failing_points.is_empty(), || format!("instance {inst}: {name} missed the violation"))?;
                ensure(chk.failing_points.iter().all(|&p| flipped.contains(&(p / side))), || {
                    format!("instance {inst}: {name} flagged a clean point")
                })?;
            }
            violating += 1;
        }
    }
    Ok(format!("{clean} clean instances asserted, {violating} seeded violations flagged"))
}

/// Segment with `3^ambient + 1` points and the indices of the level-`level` Cantor endpoints.
fn cantor_in_segment(level: u32, ambient: u32) -> (FiniteMetricSpace, Vec<usize>) {
    let s = segment(3usize.pow(ambient) + 1).unwrap();
    let k = 3usize.pow(ambient - level);
    (s, cantor_numerators(level).into_iter().map(|a| a as usize * k).collect())
}

fn gap_mechanism() -> Outcome {
    let (s, set) = cantor_in_segment(6, 7);
    let f: Vec<f64> = (0..s.len()).map(|i| s.dist_to_set(i, &set)).collect();
    let pool = subset_pool(&s, &set, 3f64.powi(-6) * (1.0 + 1e-9)).map_err(|e| e.to_string())?;
    let est = weaver_norm_estimate(&s, &scalar(&f), None, &pool).map_err(|e| e.to_string())?;
    let max_est = set.iter().map(|&x| est[x].unwrap_or(0.0)).fold(0.0, f64::max);
    ensure(max_est == 0.0, || format!("norm estimate {max_est} on the set"))?;
    let v = gap_detect(&s, &set, &f, 0.25, 0.0, &pool, 0.25, 1e-12).map_err(|e| e.to_string())?;
    ensure(v.gap_candidate && v.min_biglip >= 0.25, || format!("{v:?}"))?;
    Ok(format!("{} pool fragments, norm estimate 0, min biglip {}", pool.len(), v.min_biglip))
}

fn zahorski_construction() -> Outcome {
    let (delta0, l, alpha) = (0.5, 1.0, 0.05);
    let family = CantorFlatFamily::new(600, zahorski::ratio(1, 2), zahorski::ratio(1, 1)).map_err(|e| e.to_string())?;
    let a = zahorski::ratio(1, 20);
    let schedule = Schedule::build(&family, &a, 6).map_err(|e| e.to_string())?;
    let (points, set) = zahorski::cantor_probe_sample(&schedule, 3, 4).map_err(|e| e.to_string())?;
    let mut weights = vec![0.0; points.len()];
    set.iter().for_each(|&s| weights[s] = 1.0 / set.len() as f64);
    let out = zahorski::build_independent(&points, &set, &weights, &family, 2, &a, 6, 1e-9).map_err(|e| e.to_string())?;
    let c = &out.certificate;

    let q = alpha * alpha / l;
    let lip_cap = 3.0 * (l + alpha + q / (1.0 - q) * (1.0 + alpha / 64.0)) + 1e-6;
    // Exact slopes between neighbours in coordinate order; in one dimension the
    // largest of these is the Lipschitz constant over all pairs.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points.num(a).cmp(points.num(b)));
    let mut lips = Vec::new();
    for (j, psi) in out.psi.iter().enumerate() {
        let mut lip = BigRational::zero();
        for w in order.windows(2) {
            let run = BigRational::new(points.num(w[1]) - points.num(w[0]), points.den().clone());
            let slope = (&psi[w[1]] - &psi[w[0]]).abs() / run;
            if slope > lip {
                lip = slope;
            }
        }
        let lip = zahorski::to_f64(&lip);
        ensure(lip <= lip_cap, || format!("measured Lipschitz {lip} > {lip_cap}"))?;
        ensure((lip - c.psi_lipschitz[j]).abs() <= 1e-12, || format!("reported Lipschitz {} vs {lip}", c.psi_lipschitz[j]))?;
        lips.push(lip);
    }
    let lower = delta0 - q / (1.0 - q) - alpha - zahorski::to_f64(&schedule.tail);
    ensure(!out.kept.is_empty(), || "empty kept set".into())?;
    ensure(c.lower_ok && c.min_variation >= lower - 1e-9, || format!("min variation {} < {lower}", c.min_variation))?;
    let rep = zahorski::liplip_violation_report(&points, &out.kept, &out.phi(), &out.schedule, 1e-9).map_err(|e| e.to_string())?;
    let min_ratio = rep.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    ensure(rep.rows.len() == out.kept.len() && min_ratio > 1.0, || format!("min ratio {min_ratio}"))?;
    Ok(format!(
        "{} samples, Lipschitz {lips:.4?} <= {lip_cap:.4}, min variation {:.4} >= {lower:.4} on {} kept points, min ratio {min_ratio:.3}",
        points.len(),
        c.min_variation,
        out.kept.len()
    ))
}

fn porosity_saturation() -> Outcome {
    let (s, set) = cantor_in_segment(5, 7);
    let scales = dyadic_scales(0.25, 4);
    let halves: Vec<f64> = scales.iter().map(|r| r / 2.0).collect();
    let scan = porosity_scan(&s, &set, 0.0, &halves).map_err(|e| e.to_string())?;
    let certified = scan.min_constant.iter().copied().fold(f64::INFINITY, f64::min);
    let c = certified * (1.0 - 1e-9);
    let sat = porosity_saturate(&s, &set, c, &scales).map_err(|e| e.to_string())?;
    let target = 2.0 * c / 3.0 - 0.01;
    for (r, m) in sat.recertified.scales.iter().zip(&sat.recertified.min_constant) {
        ensure(*m >= target, || format!("scale {r}: constant {m} < {target}"))?;
    }
    let worst = sat.recertified.min_constant.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("c = {c:.4}, {} witnesses added, re-certified {worst:.4} >= {target:.4}", sat.added))
}

fn run_cli(out: &Path, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_lipmm"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(matches!(status.status.code(), Some(0 | 1)), || {
        format!("{args:?} exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
    })
}

fn cli_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let space_dir = tmp.path().join("space");
    run_cli(&space_dir, &["space", "generate", "--kind", "triadic", "--level", "4"])?;
    let space = space_dir.join("space.json");
    let set = space_dir.join("set.json");
    let values = tmp.path().join("values.csv");
    let rows: String = (0..=81).map(|i| format!("s{i},{}\n", i as f64 / 81.0)).collect();
    std::fs::write(&values, format!("id,f1\n{rows}")).map_err(|e| e.to_string())?;
    let (space, set, values) = (space.to_str().unwrap(), set.to_str().unwrap(), values.to_str().unwrap());
    let runs: Vec<Vec<&str>> = vec![
        vec!["space", "generate", "--kind", "cantor", "--level", "5"],
        vec!["poset", "antichains", "--random", "80", "--transverse", "2", "--seed", "17", "--delta", "0.5", "--alpha", "0.7"],
        vec!["approx", "run", "--input", space, "--values", values, "--set", set, "--delta", "0.25", "--alpha", "0.8", "--n", "12"],
        vec!["porosity", "saturate", "--input", space, "--set", set, "--c", "0.2", "--top", "0.25", "--count", "2"],
        vec!["zahorski", "report", "--depth", "3"],
    ];
    let mut files = 0;
    for (k, args) in runs.iter().enumerate() {
        let (a, b) = (tmp.path().join(format!("a{k}")), tmp.path().join(format!("b{k}")));
        run_cli(&a, args)?;
        run_cli(&b, args)?;
        let mut names: Vec<_> = std::fs::read_dir(&a).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
        names.sort();
        ensure(!names.is_empty(), || format!("{args:?} wrote nothing"))?;
        for name in names {
            let x = std::fs::read(a.join(&name)).map_err(|e| e.to_string())?;
            let y = std::fs::read(b.join(&name)).map_err(|e| format!("{name:?} missing in the second run: {e}"))?;
            ensure(x == y, || format!("{args:?}: {name:?} differs between runs"))?;
            files += 1;
        }
    }
    Ok(format!("{} commands run twice, {files} output files byte-identical", runs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("fubini reconstruction", fubini_reconstruction, 1),
        ("mirsky duality", mirsky_duality, 30),
        ("approximation certificates", approximation_certificates, 120),
        ("representation algebra", representation_algebra, 5),
        ("cone and speed checks", cone_and_speed, 10),
        ("gap mechanism", gap_mechanism, 10),
        ("zahorski construction", zahorski_construction, 60),
        ("porosity saturation", porosity_saturation, 10),
        ("cli determinism", cli_determinism, 120),
    ];
    let mut failed = Vec::new();
    for (k, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|detail| {
            if elapsed <= Duration::from_secs(*budget) {
                Ok(detail)
            } else {
                Err(format!("{detail}; took {elapsed:.2?}, budget {budget} s"))
            }
        });
        match outcome {
            Ok(detail) => println!("PASS {}. {name}: {detail} ({elapsed:.2?})", k + 1),
            Err(why) => {
                println!("FAIL {}. {name}: {why} ({elapsed:.2?})", k + 1);
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
