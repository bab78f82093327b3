//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Runs without the libtest harness so the lines always print.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use carnot_cli::runner::{CheckReport, RunManifest};
use carnot_cli::{run, ExperimentConfig};
use carnot_core::eikonal::{eikonal_distance_field, EikonalOptions};
use carnot_core::family::{FamilyClass, FamilySpec, TestFunctionFamily};
use carnot_core::hopflax::{
    hopf_lax_apply, pde_residual, semigroup_defect, Exponents, HopfLaxOperator, Normalization,
    SemigroupTrace,
};
use carnot_core::mcmc::SampleCloud;
use carnot_core::metric::{cc_distance, cc_distance_origin, distance_origin_raw, GroupMetric};
use carnot_core::potential::{check_growth_conditions, Potential};
use carnot_core::transport::{wasserstein_p, Solver};
use carnot_core::{CarnotGroup, Grid, GridFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    manifest: RunManifest,
    dir: tempfile::TempDir,
    elapsed: Duration,
}

impl Run {
    fn new(name: &str) -> Self {
        let mut cfg = ExperimentConfig::load(&configs().join(name)).expect("shipped config loads");
        let dir = tempfile::tempdir().unwrap();
        cfg.out = dir.path().to_path_buf();
        let start = Instant::now();
        let manifest = run(&cfg).expect("shipped config runs");
        Self {
            manifest,
            dir,
            elapsed: start.elapsed(),
        }
    }

    fn report(&self, check: &str) -> CheckReport {
        let text = std::fs::read_to_string(self.dir.path().join(format!("{check}.json"))).unwrap();
        serde_json::from_str(&text).unwrap()
    }
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit_s,
        format!("runtime {:.1}s exceeds {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn h(c: [f64; 3]) -> carnot_core::StratifiedPoint {
    CarnotGroup::Heisenberg.point(c.to_vec()).unwrap()
}

fn rel_close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter()
        .zip(b)
        .all(|(x, y)| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1.0))
}

fn group_metric_properties() -> Verdict {
    let start = Instant::now();
    let g = CarnotGroup::Heisenberg;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut draw = |r: f64| {
        h([
            rng.random_range(-r..r),
            rng.random_range(-r..r),
            rng.random_range(-r..r),
        ])
    };
    let mut scale = ChaCha8Rng::seed_from_u64(4);
    let e = g.identity();
    for _ in 0..10_000 {
        let (a, b, c) = (draw(3.0), draw(3.0), draw(3.0));
        let l = g.compose(&g.compose(&a, &b).unwrap(), &c).unwrap();
        let r = g.compose(&a, &g.compose(&b, &c).unwrap()).unwrap();
        ensure(
            rel_close(l.coords(), r.coords(), 1e-12),
            format!("associativity at {a:?} {b:?} {c:?}"),
        )?;
        ensure(
            g.compose(&e, &a).unwrap() == a && g.compose(&a, &e).unwrap() == a,
            "identity".into(),
        )?;
        let inv = g.compose(&a, &g.inverse(&a).unwrap()).unwrap();
        ensure(
            rel_close(inv.coords(), e.coords(), 1e-12),
            format!("inverse at {a:?}"),
        )?;
    }
    let mut worst_left = 0.0_f64;
    for _ in 0..1000 {
        let (a, b, c) = (draw(2.0), draw(2.0), draw(2.0));
        let d = cc_distance(&g, &a, &b).unwrap();
        let s = cc_distance(&g, &g.compose(&c, &a).unwrap(), &g.compose(&c, &b).unwrap()).unwrap();
        worst_left = worst_left.max((d - s).abs() / d.max(1e-300));
    }
    ensure(
        worst_left <= 1e-10,
        format!("left-invariance relative error {worst_left:e}"),
    )?;
    let mut worst_hom = 0.0_f64;
    for _ in 0..100 {
        let a = draw(2.0);
        let lambda = scale.random_range(0.1..5.0);
        let d = cc_distance_origin(&g, &a).unwrap();
        let dl = cc_distance_origin(&g, &g.dilate(lambda, &a).unwrap()).unwrap();
        worst_hom = worst_hom.max((dl - lambda * d).abs() / (lambda * d));
    }
    ensure(
        worst_hom <= 1e-3,
        format!("homogeneity relative error {worst_hom:e}"),
    )?;
    let mut worst_tri = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let (a, b, c) = (draw(2.0), draw(2.0), draw(2.0));
        let gap = cc_distance(&g, &a, &c).unwrap()
            - cc_distance(&g, &a, &b).unwrap()
            - cc_distance(&g, &b, &c).unwrap();
        worst_tri = worst_tri.max(gap);
    }
    ensure(
        worst_tri <= 1e-6,
        format!("triangle inequality violated by {worst_tri:e}"),
    )?;
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "left-invariance {worst_left:.1e}, homogeneity {worst_hom:.1e}, triangle excess {worst_tri:.1e}"
    ))
}

/// Max `|eikonal − shooting|` at the test points on `[−2, 2]³` with `n³` nodes.
fn eikonal_discrepancy(n: usize, points: &[Vec<f64>]) -> f64 {
    let g = CarnotGroup::Heisenberg;
    let grid = Grid::cube(&[-2.0; 3], &[2.0; 3], n).unwrap();
    let field = eikonal_distance_field(&g, &grid, &EikonalOptions::default()).unwrap();
    points
        .iter()
        .map(|p| (field.field.interpolate(p).unwrap() - distance_origin_raw(&g, p).unwrap()).abs())
        .fold(0.0, f64::max)
}

fn distance_cross_validation() -> Verdict {
    let start = Instant::now();
    let h_coarse = 4.0 / 48.0;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut points = Vec::new();
    while points.len() < 100 {
        let p: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        if p[0].hypot(p[1]) > 2.0 * h_coarse {
            points.push(p);
        }
    }
    let coarse = eikonal_discrepancy(49, &points);
    let fine = eikonal_discrepancy(97, &points);
    let ratio = fine / coarse;
    ensure(
        coarse <= 2.0 * h_coarse,
        format!("49³ discrepancy {coarse:.4} > 2h = {:.4}", 2.0 * h_coarse),
    )?;
    ensure(ratio <= 0.7, format!("refinement ratio {ratio:.3} > 0.7"))?;
    within(start.elapsed(), 180.0)?;
    Ok(format!(
        "49³ max {coarse:.4} (2h = {:.4}), 97³ max {fine:.4}, ratio {ratio:.3}",
        2.0 * h_coarse
    ))
}

fn legendre(t: f64) -> HopfLaxOperator {
    HopfLaxOperator::new(t, Exponents::from_p(2.0).unwrap(), Normalization::Legendre).unwrap()
}

fn hopf_lax_correctness() -> Verdict {
    let start = Instant::now();
    let g = CarnotGroup::Heisenberg;
    let metric = GroupMetric::new(g.clone());
    let small = Grid::new(
        vec![-1.0, -1.0, -0.25],
        vec![1.0, 1.0, 0.25],
        vec![17, 17, 17],
    )
    .unwrap();
    let c = GridFunction::constant(&small, 0.7).unwrap();
    let qc = hopf_lax_apply(&c, &legendre(0.5), &metric).unwrap();
    ensure(
        qc.values.values().iter().all(|&v| v == 0.7),
        "Q_t of a constant moved".into(),
    )?;

    let spec = FamilySpec::new(
        11,
        2,
        vec![FamilyClass::RandomField, FamilyClass::RadialBump],
    );
    let fam = TestFunctionFamily::generate(&spec, &g).unwrap();
    let f = fam.members[0].on_grid(&g, &small).unwrap();
    let shifted = f.map(|v| v + 3.25).unwrap();
    let (a, b) = (
        hopf_lax_apply(&f, &legendre(0.5), &metric).unwrap(),
        hopf_lax_apply(&shifted, &legendre(0.5), &metric).unwrap(),
    );
    let shift_err = a
        .values
        .values()
        .iter()
        .zip(b.values.values())
        .map(|(x, y)| (y - x - 3.25).abs())
        .fold(0.0, f64::max);
    ensure(
        shift_err <= 1e-12,
        format!("constant shift error {shift_err:e}"),
    )?;
    ensure(
        a.argmin == b.argmin,
        "constant shift changed a minimizer".into(),
    )?;

    // Q_t(x²) = x²/(1 + 2t) on the line.
    let line = Grid::cube(&[-4.0], &[4.0], 401).unwrap();
    let hs = line.spacing()[0];
    let sq = GridFunction::from_fn(&line, |x| x[0] * x[0]).unwrap();
    let t = 0.5;
    let abelian = GroupMetric::new(CarnotGroup::abelian(1).unwrap());
    let q = hopf_lax_apply(&sq, &legendre(t), &abelian).unwrap();
    let mut quad_err = 0.0_f64;
    for i in (0..line.len()).filter(|&i| q.clean(i)) {
        let x = line.coord(0, i);
        quad_err = quad_err.max((q.values.values()[i] - x * x / (1.0 + 2.0 * t)).abs());
    }
    ensure(
        quad_err <= 2.0 * hs * hs,
        format!("quadratic error {quad_err:e} > 2h² = {:e}", 2.0 * hs * hs),
    )?;

    let grid = Grid::new(
        vec![-1.0, -1.0, -0.25],
        vec![1.0, 1.0, 0.25],
        vec![33, 33, 33],
    )
    .unwrap();
    let mut defect = 0.0_f64;
    for m in &fam.members {
        let (d, used) = semigroup_defect(
            &m.on_grid(&g, &grid).unwrap(),
            &legendre(1.0),
            &metric,
            0.5,
            0.5,
        )
        .unwrap();
        ensure(used > 0, "no interior-argmin nodes".into())?;
        defect = defect.max(d);
    }
    ensure(
        defect <= 5e-2,
        format!("semigroup defect {defect:.4} > 0.05"),
    )?;

    // Mean residual of u_t + |∇u|²/2 at t = 0.5, time step tied to the grid.
    let mut ratios = Vec::new();
    for m in &fam.members {
        let mut means = Vec::new();
        for (n, dt) in [(17usize, 0.1), (33, 0.05)] {
            let grid =
                Grid::new(vec![-1.0, -1.0, -0.25], vec![1.0, 1.0, 0.25], vec![n, n, n]).unwrap();
            let trace = SemigroupTrace::compute(
                &m.on_grid(&g, &grid).unwrap(),
                &legendre(1.0),
                &metric,
                &[0.5 - dt, 0.5, 0.5 + dt],
            )
            .unwrap();
            means.push(pde_residual(&trace, &g).unwrap()[0].mean);
        }
        ratios.push(means[1] / means[0]);
    }
    let worst_ratio = ratios.iter().copied().fold(0.0, f64::max);
    ensure(
        worst_ratio <= 0.7,
        format!("PDE residual ratios {ratios:.3?}"),
    )?;
    within(start.elapsed(), 180.0)?;
    Ok(format!(
        "shift {shift_err:.1e}, quadratic {quad_err:.1e} (2h² = {:.1e}), defect {defect:.4}, residual ratio {worst_ratio:.3}",
        2.0 * hs * hs
    ))
}

fn growth_conditions() -> Verdict {
    let start = Instant::now();
    let d_max = 20.0;
    let mut notes = Vec::new();
    for p in [1.5, 2.0, 3.0] {
        let q = p / (p - 1.0);
        let r = check_growth_conditions(&Potential::power(p).unwrap(), q, d_max).unwrap();
        ensure(
            r.beta_hat <= p - 1.0,
            format!("power {p}: sup U''/U' = {}", r.beta_hat),
        )?;
        ensure(
            (r.gamma_hat - p.powf(-q)).abs() <= 1e-12 * p.powf(-q),
            format!("power {p}: sup U/U'^q = {} vs {}", r.gamma_hat, p.powf(-q)),
        )?;
        for qq in [q, q + 0.5] {
            let r = check_growth_conditions(&Potential::powerlog(p).unwrap(), qq, d_max).unwrap();
            ensure(
                r.beta_hat <= p * p - 0.5,
                format!("powerlog {p}: sup U''/U' = {}", r.beta_hat),
            )?;
            ensure(
                r.gamma_hat <= 1.0,
                format!("powerlog {p}, q {qq}: sup U/U'^q = {}", r.gamma_hat),
            )?;
        }
    }
    for q in [1.01, 1.5, 2.0, 4.0] {
        let r = check_growth_conditions(&Potential::sinh(), q, d_max).unwrap();
        ensure(
            r.beta_hat <= 1.0 && r.gamma_hat <= 1.0,
            format!("sinh q {q}: {} {}", r.beta_hat, r.gamma_hat),
        )?;
        notes.push(format!("{:.3}", r.gamma_hat));
    }
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "power, powerlog, sinh bounds hold; sinh sup U/U'^q = {}",
        notes.join("/")
    ))
}

fn gaussian_lsi(run: &Run) -> Verdict {
    let r = run.report("log-sobolev");
    let c_hat = f(&r.result["c_hat"]);
    let ratios: Vec<f64> = r.result["report"]["per_member"]
        .as_array()
        .unwrap()
        .iter()
        .filter_map(|m| m["ratio"].as_f64())
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let family: Value =
        serde_json::from_str(&std::fs::read_to_string(run.dir.path().join("family.json")).unwrap())
            .unwrap();
    let clipped = family["members"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|m| m["class"] == "gaussian-exp")
        .count();
    ensure(clipped > 0, "family has no clipped exponential".into())?;
    ensure((1.8..=2.05).contains(&c_hat), format!("c_hat {c_hat}"))?;
    ensure(max_ratio <= 2.05, format!("largest ratio {max_ratio}"))?;
    within(run.elapsed, 60.0)?;
    Ok(format!(
        "c_hat {c_hat:.7} over {} members ({clipped} clipped exponentials)",
        ratios.len()
    ))
}

fn gaussian_dual(run: &Run) -> Verdict {
    let r = run.report("dual-talagrand");
    let rep = &r.result["report"];
    let k = f(&rep["parameters"]["K"]);
    let members = rep["per_member"].as_array().unwrap().len();
    let worst = f(&rep["summary"]["constant"]);
    ensure(
        k == 1.0 && rep["mode"] == "legendre",
        "expected K = 1 with the Legendre cost".into(),
    )?;
    ensure(members == 50, format!("{members} members instead of 50"))?;
    ensure(worst <= 1e-2, format!("max slack {worst:e}"))?;
    Ok(format!("max slack {worst:.3e} over {members} members"))
}

fn trace_summary(r: &CheckReport) -> (f64, f64, f64, usize) {
    let res = &r.result;
    let pts = res["traces"][0]["trace"]["times"].as_array().unwrap().len();
    (
        f(&res["max_jump"]),
        f(&res["refined"]["max_jump"]),
        f(&res["refined"]["ratio"]),
        pts,
    )
}

fn gaussian_traces(run: &Run) -> Verdict {
    let mut parts = Vec::new();
    for (check, key, expect) in [("phi-trace", "K", 1.0), ("hypercontractivity", "rho", 1.0)] {
        let r = run.report(check);
        ensure(
            f(&r.result["constants"][key]) == expect,
            format!("{check}: {key} is not {expect}"),
        )?;
        let (jump, fine, ratio, pts) = trace_summary(&r);
        let first = &r.result["traces"][0]["trace"]["times"];
        ensure(
            pts == 16 && f(&first[0]) == 0.1 && f(&first[15]) == 2.0,
            format!("{check}: time grid"),
        )?;
        ensure(jump <= 1e-3, format!("{check}: max jump {jump:e}"))?;
        ensure(
            ratio <= 0.8,
            format!("{check}: refinement ratio {ratio:.3}"),
        )?;
        parts.push(format!(
            "{check} jump {jump:.2e} -> {fine:.2e} (ratio {ratio:.2})"
        ));
    }
    within(run.elapsed, 180.0)?;
    Ok(parts.join(", "))
}

fn heisenberg_end_to_end(run: &Run) -> Verdict {
    let ub = run.report("u-bound");
    for fit in ub.result["fits"].as_array().unwrap() {
        let worst = f(&fit["relative_change_C"]).max(f(&fit["relative_change_D"]));
        ensure(
            fit["pass"] == true && worst <= 0.1,
            format!(
                "u-bound {}: C {} -> {}, D {} -> {}",
                fit["mode"], fit["C"], fit["C_doubled"], fit["D"], fit["D_doubled"]
            ),
        )?;
    }
    let pc = run.report("poincare");
    let change = f(&pc.result["relative_change"]);
    ensure(
        pc.pass && change <= 0.1,
        format!("Poincaré change {change:.3}"),
    )?;
    let lsi = run.report("log-sobolev");
    let k = f(&lsi.result["K"]);
    let dual = run.report("dual-talagrand");
    let worst = f(&dual.result["report"]["summary"]["constant"]);
    ensure(
        f(&dual.result["report"]["parameters"]["K"]) == k,
        "dual K is not the derived one".into(),
    )?;
    ensure(worst <= 5e-2, format!("dual slack {worst:.4}"))?;
    let phi = f(&run.report("phi-trace").result["max_jump"]);
    let hyper = f(&run.report("hypercontractivity").result["max_jump"]);
    ensure(
        phi <= 5e-3 && hyper <= 5e-3,
        format!("trace jumps φ {phi:e}, F {hyper:e}"),
    )?;
    within(run.elapsed, 600.0)?;
    Ok(format!(
        "Poincaré {:.4} (change {change:.4}), K {k:.4}, dual {worst:.4}, jumps φ {phi:.2e} F {hyper:.2e}, {:.0}s",
        f(&pc.result["report"]["summary"]["constant"]),
        run.elapsed.as_secs_f64()
    ))
}

fn cloud(rng: &mut ChaCha8Rng, shift: f64) -> SampleCloud {
    SampleCloud::uniform(
        (0..100)
            .map(|_| {
                vec![
                    rng.random_range(-1.0..1.0) + shift,
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-0.5..0.5),
                ]
            })
            .collect(),
    )
    .unwrap()
}

fn transport_oracle() -> Verdict {
    let start = Instant::now();
    let metric = GroupMetric::new(CarnotGroup::Heisenberg);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut marg = 0.0_f64;
    for _ in 0..3 {
        let a = cloud(&mut rng, 0.0);
        let b = cloud(&mut rng, 0.3);
        let e = wasserstein_p(&a, &b, 2.0, &metric, Solver::ExactLp).unwrap();
        let s = wasserstein_p(&a, &b, 2.0, &metric, Solver::sinkhorn()).unwrap();
        worst = worst.max((s.cost / e.cost - 1.0).abs());
        marg = marg.max(e.marginal_error).max(s.marginal_error);
        let same = wasserstein_p(&a, &a, 2.0, &metric, Solver::ExactLp).unwrap();
        ensure(same.value <= 1e-9, format!("W(μ, μ) = {:e}", same.value))?;
    }
    ensure(worst <= 0.01, format!("sinkhorn relative error {worst:e}"))?;
    ensure(marg <= 1e-12, format!("marginal error {marg:e}"))?;
    within(start.elapsed(), 60.0)?;
    Ok(format!(
        "sinkhorn relative error {worst:.2e}, marginal error {marg:.1e}"
    ))
}

fn primal(gauss: &Run, heis: &Run) -> Verdict {
    let r = gauss.report("primal-talagrand");
    let mut parts = Vec::new();
    for rep in r.result["reports"].as_array().unwrap() {
        let a = f(&rep["parameters"]["tilt"][0]);
        let m = &rep["per_member"][0];
        let slack = f(&m["slack"]);
        // Shifting N(0, 1) by a: entropy a²/2 and W₂²/2 = a²/2.
        let ent = f(&m["entropy"]);
        ensure(
            (ent - a * a / 2.0).abs() <= 1e-3 * (1.0 + a * a),
            format!("a {a}: entropy {ent}"),
        )?;
        ensure(slack >= -1e-2, format!("Gaussian a {a}: slack {slack:e}"))?;
        parts.push(format!("a={a}: {slack:.1e}"));
    }
    let r = heis.report("primal-talagrand");
    for rep in r.result["reports"].as_array().unwrap() {
        let slack = f(&rep["summary"]["slack"]);
        ensure(slack >= -5e-2, format!("Heisenberg slack {slack:.4}"))?;
        parts.push(format!("H1 tilt {}: {slack:.4}", rep["parameters"]["tilt"]));
    }
    within(gauss.elapsed, 180.0)?;
    Ok(parts.join(", "))
}

/// Every report file except the manifest, which carries timings.
fn report_files(run: &Run) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = run.manifest.reports.values().flatten().cloned().collect();
    files.sort();
    files
}

fn determinism(first: &[&Run], configs_: &[&str]) -> Verdict {
    let mut compared = 0;
    for (run, name) in first.iter().zip(configs_) {
        let again = Run::new(name);
        ensure(
            again.manifest.config_hash == run.manifest.config_hash,
            format!("{name}: config hash differs"),
        )?;
        let files = report_files(run);
        ensure(
            files == report_files(&again),
            format!("{name}: different report sets"),
        )?;
        for rel in &files {
            let a = std::fs::read(run.dir.path().join(rel)).unwrap();
            let b = std::fs::read(again.dir.path().join(rel)).unwrap();
            ensure(a == b, format!("{name}: {} differs", rel.display()))?;
            compared += 1;
        }
    }
    Ok(format!(
        "{compared} report files byte-identical across reruns"
    ))
}

fn main() {
    let mut out = std::io::stdout();
    let mut failures = 0;
    let mut report = |n: usize, title: &str, verdict: Verdict, start: Instant| {
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failures += 1;
                ("FAIL", d)
            }
        };
        writeln!(out, "{tag} criterion {n:>2} {title}: {detail} [{secs:.1}s]").unwrap();
        out.flush().unwrap();
    };
    let timed = |body: &dyn Fn() -> Verdict| {
        let s = Instant::now();
        (body(), s)
    };

    let (v, s) = timed(&group_metric_properties);
    report(1, "group and metric properties", v, s);
    let (v, s) = timed(&distance_cross_validation);
    report(2, "shooting vs eikonal", v, s);
    let (v, s) = timed(&hopf_lax_correctness);
    report(3, "Hopf-Lax correctness", v, s);
    let (v, s) = timed(&growth_conditions);
    report(4, "growth conditions", v, s);

    let s = Instant::now();
    let gauss = Run::new("gaussian-calibration.json");
    report(
        5,
        "Gaussian log-Sobolev calibration",
        gaussian_lsi(&gauss),
        s,
    );
    let s = Instant::now();
    report(6, "Gaussian dual transport", gaussian_dual(&gauss), s);
    report(7, "Gaussian monotone traces", gaussian_traces(&gauss), s);

    let s = Instant::now();
    let heis = Run::new("heisenberg-end-to-end.json");
    report(8, "Heisenberg end-to-end", heisenberg_end_to_end(&heis), s);
    let (v, s) = timed(&transport_oracle);
    report(9, "transport solver oracle", v, s);
    let s = Instant::now();
    report(10, "primal transport", primal(&gauss, &heis), s);
    let s = Instant::now();
    report(
        11,
        "determinism",
        determinism(
            &[&gauss, &heis],
            &["gaussian-calibration.json", "heisenberg-end-to-end.json"],
        ),
        s,
    );

    writeln!(
        std::io::stdout(),
        "acceptance: {} of 11 criteria failed",
        failures
    )
    .unwrap();
    if failures > 0 {
        std::process::exit(1);
    }
}
