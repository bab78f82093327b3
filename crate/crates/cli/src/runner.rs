//! The `run` pipeline: distance → measure → family → checks.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use carnot_core::eikonal::{eikonal_distance_field, EikonalOptions};
use carnot_core::family::{FamilyClass, TestFunction, TestFunctionFamily};
use carnot_core::functional::{estimate_lsi_constant, poincare_check, ubound_check, LsiEstimate};
use carnot_core::hopflax::HopfLaxOperator;
use carnot_core::measure::{build_measure, MeasureOptions, RadialMeasure};
use carnot_core::metric::{check_metric_assumptions, DistanceField, DistanceMethod, GroupMetric};
use carnot_core::potential::{check_growth_conditions, Potential};
use carnot_core::report::SCHEMA;
use carnot_core::talagrand::{
    dual_talagrand_check, hypercontractivity_trace, phi_trace, primal_talagrand_check,
    quadrature_cloud, MonotonicityTrace,
};
use carnot_core::{CarnotGroup, Grid, GridFunction};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{CheckSpec, ExperimentConfig, Selection};
use crate::error::{CliError, CliResult};
use crate::trace::write_trace_csv;

/// Wall-clock time of one stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// What a run produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: u32,
    /// SHA-256 of the canonical config with the output directory cleared.
    pub config_hash: String,
    pub tool_version: String,
    pub out: PathBuf,
    /// Files written per stage, relative to `out`.
    pub reports: BTreeMap<String, Vec<PathBuf>>,
    pub checks: BTreeMap<String, bool>,
    pub pass: bool,
    pub stages: Vec<StageTiming>,
}

/// Body of one check report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub schema: u32,
    pub check: String,
    pub pass: bool,
    pub result: Value,
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.out = PathBuf::new();
    hex::encode(Sha256::digest(c.canonical_json().as_bytes()))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn write_json(path: &Path, value: &impl Serialize, pretty: bool) -> CliResult<()> {
    let mut text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_err(path, e))
}

/// A function a check runs on, with a file-safe label.
struct Labelled {
    label: String,
    function: TestFunction,
    values: GridFunction,
}

/// Everything built before the checks.
struct Setup {
    group: CarnotGroup,
    metric: GroupMetric,
    grid: Grid,
    potential: Potential,
    measure: RadialMeasure,
    family: TestFunctionFamily,
    values: Vec<GridFunction>,
    probes: Vec<GridFunction>,
}

fn distance_field(
    group: &CarnotGroup,
    grid: &Grid,
    method: DistanceMethod,
) -> CliResult<DistanceField> {
    Ok(match method {
        DistanceMethod::Shooting => DistanceField::shooting(group, grid)?,
        DistanceMethod::Eikonal => eikonal_distance_field(group, grid, &EikonalOptions::default())?,
    })
}

fn measure_on(
    group: &CarnotGroup,
    grid: &Grid,
    method: DistanceMethod,
    potential: &Potential,
    options: &MeasureOptions,
) -> CliResult<RadialMeasure> {
    let d = distance_field(group, grid, method)?;
    Ok(build_measure(group, &d, potential, options)?)
}

fn class_of(f: &TestFunction) -> Option<FamilyClass> {
    match f {
        TestFunction::RadialBump { .. } => Some(FamilyClass::RadialBump),
        TestFunction::HorizontalExp { .. } => Some(FamilyClass::HorizontalExp),
        TestFunction::RandomField { .. } => Some(FamilyClass::RandomField),
        TestFunction::GaussianExp { .. } => Some(FamilyClass::GaussianExp),
        _ => None,
    }
}

impl Setup {
    fn selected(&self, sel: &Selection, config: &ExperimentConfig) -> Vec<Labelled> {
        let keep = |f: &TestFunction| match (&sel.classes, class_of(f)) {
            (None, _) => true,
            (Some(cs), Some(c)) => cs.contains(&c),
            (Some(_), None) => false,
        };
        let mut out: Vec<Labelled> = self
            .family
            .members
            .iter()
            .zip(&self.values)
            .enumerate()
            .filter(|(_, (f, _))| keep(f))
            .map(|(i, (f, v))| Labelled {
                label: format!("member-{i:03}-{}", f.class_name()),
                function: f.clone(),
                values: v.clone(),
            })
            .collect();
        if sel.probes {
            out.extend(
                config
                    .probes
                    .iter()
                    .zip(&self.probes)
                    .enumerate()
                    .map(|(i, (f, v))| Labelled {
                        label: format!("probe-{i:03}-{}", f.class_name()),
                        function: f.clone(),
                        values: v.clone(),
                    }),
            );
        }
        out
    }
}

/// Relative change `|a − b| / max(|a|, |b|)`, zero when both vanish.
fn relative_change(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

struct Outcome {
    pass: bool,
    result: Value,
    /// Extra CSV traces as (relative path, times, values).
    traces: Vec<(PathBuf, Vec<f64>, Vec<f64>)>,
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    setup: Setup,
    lsi: Option<LsiEstimate>,
}

impl Runner<'_> {
    fn lsi(&self) -> &LsiEstimate {
        self.lsi
            .as_ref()
            .expect("validated: log-sobolev runs before its consumers")
    }

    fn operator(&self) -> CliResult<HopfLaxOperator> {
        Ok(HopfLaxOperator::new(
            1.0,
            self.config.exponents,
            self.config.normalization,
        )?)
    }

    fn doubled_values(&self) -> CliResult<Vec<GridFunction>> {
        let s = &self.setup;
        let fam = TestFunctionFamily::generate(&s.family.spec.doubled(), &s.group)?;
        Ok(fam.on_grid(&s.group, &s.grid)?)
    }

    fn check(&mut self, spec: &CheckSpec) -> CliResult<Outcome> {
        let q = self.config.exponents.q;
        let s = &self.setup;
        let plain = |pass: bool, result: Value| Outcome {
            pass,
            result,
            traces: Vec::new(),
        };
        Ok(match spec {
            CheckSpec::GrowthConditions { d_max } => {
                let r = check_growth_conditions(&s.potential, q, *d_max)?;
                plain(r.pass, serde_json::to_value(&r).expect("serializes"))
            }
            CheckSpec::MetricAssumptions { c0, grad_slack } => {
                let field = DistanceField {
                    field: s.measure.distance.clone(),
                    method: self.config.distance,
                };
                let r = check_metric_assumptions(&s.group, &field, &s.potential, *c0, *grad_slack)?;
                plain(
                    r.grad_sup_pass && r.k_geom_finite,
                    serde_json::to_value(&r).expect("serializes"),
                )
            }
            CheckSpec::LogSobolev { lower, upper } => {
                let est = estimate_lsi_constant(&s.measure, &s.values, q, &s.group)?;
                let mut r = est.to_report(*upper).param("lower", lower);
                if let Some(lo) = lower {
                    r.summary.pass &= est.c_hat >= *lo;
                }
                let pass = r.summary.pass;
                let result = json!({"report": r, "c_hat": est.c_hat, "K": est.k});
                self.lsi = Some(est);
                plain(pass, result)
            }
            CheckSpec::Poincare {
                reference,
                stability,
            } => {
                let base = poincare_check(&s.measure, &s.values, q, &s.group, *reference)?;
                let doubled =
                    poincare_check(&s.measure, &self.doubled_values()?, q, &s.group, *reference)?;
                let change = relative_change(base.summary.constant, doubled.summary.constant);
                let pass = base.summary.pass && doubled.summary.pass && change <= *stability;
                plain(
                    pass,
                    json!({"report": base, "doubled": doubled, "relative_change": change, "stability": stability}),
                )
            }
            CheckSpec::UBound { modes, stability } => {
                let doubled_values = self.doubled_values()?;
                let mut fits = Vec::new();
                let mut pass = true;
                for &mode in modes {
                    let a = ubound_check(&s.measure, &s.values, q, mode, &s.group)?;
                    let b = ubound_check(&s.measure, &doubled_values, q, mode, &s.group)?;
                    let (ra, rb) = (a.to_report(), b.to_report());
                    let (dc, dd) = (relative_change(a.c, b.c), relative_change(a.d, b.d));
                    let ok =
                        ra.summary.pass && rb.summary.pass && dc <= *stability && dd <= *stability;
                    pass &= ok;
                    fits.push(json!({
                        "mode": mode,
                        "C": a.c,
                        "D": a.d,
                        "C_doubled": b.c,
                        "D_doubled": b.d,
                        "relative_change_C": dc,
                        "relative_change_D": dd,
                        "pass": ok,
                        "report": ra,
                        "doubled": rb,
                    }));
                }
                plain(pass, json!({"stability": stability, "fits": fits}))
            }
            CheckSpec::DualTalagrand {
                k,
                tolerance,
                select,
            } => {
                let k = k.unwrap_or_else(|| self.lsi().k);
                let chosen = s.selected(select, self.config);
                let values: Vec<GridFunction> = chosen.iter().map(|l| l.values.clone()).collect();
                let labels: Vec<&str> = chosen.iter().map(|l| l.label.as_str()).collect();
                let r = dual_talagrand_check(
                    &s.measure,
                    &values,
                    k,
                    &self.operator()?,
                    &s.metric,
                    *tolerance,
                )?
                .param("functions", &labels);
                plain(r.summary.pass, json!({"report": r}))
            }
            CheckSpec::PhiTrace {
                k,
                times,
                tolerance,
                select,
                refinement_ratio,
            } => {
                let k = k.unwrap_or_else(|| self.lsi().k);
                let op = self.operator()?;
                let times = times.times()?;
                let chosen = s.selected(select, self.config);
                self.traces(
                    spec.name(),
                    &chosen,
                    *tolerance,
                    *refinement_ratio,
                    json!({"K": k}),
                    |m, f| Ok(phi_trace(m, f, k, &op, &s.metric, &times)?),
                )?
            }
            CheckSpec::Hypercontractivity {
                rho,
                a,
                times,
                tolerance,
                select,
                refinement_ratio,
                log_norm_at_zero,
            } => {
                let rho = rho.unwrap_or_else(|| 2.0 / self.lsi().c_hat);
                let op = self.operator()?;
                let times = times.times()?;
                let chosen = s.selected(select, self.config);
                self.traces(
                    spec.name(),
                    &chosen,
                    *tolerance,
                    *refinement_ratio,
                    json!({"rho": rho, "a": a}),
                    |m, f| {
                        Ok(hypercontractivity_trace(
                            m,
                            f,
                            rho,
                            *a,
                            &op,
                            &s.metric,
                            &times,
                            *log_norm_at_zero,
                        )?)
                    },
                )?
            }
            CheckSpec::PrimalTalagrand {
                k,
                tilts,
                grid,
                solver,
                tolerance,
            } => {
                let k = k.unwrap_or_else(|| self.lsi().k);
                let cloud_measure;
                let measure = match grid {
                    Some(g) => {
                        let g = Grid::try_from(g.clone())?;
                        let opts = MeasureOptions {
                            restrict_to_box: true,
                            ..self.config.measure
                        };
                        cloud_measure =
                            measure_on(&s.group, &g, self.config.distance, &s.potential, &opts)?;
                        &cloud_measure
                    }
                    None => &s.measure,
                };
                let cloud = quadrature_cloud(measure)?;
                let op = self.operator()?;
                let mut reports = Vec::new();
                let mut pass = true;
                for beta in tilts {
                    let raw: Vec<f64> = cloud
                        .points
                        .iter()
                        .map(|x| beta.iter().zip(x).map(|(b, v)| b * v).sum::<f64>().exp())
                        .collect();
                    let z: f64 = carnot_core::sum::dot(&cloud.weights, &raw);
                    let h: Vec<f64> = raw.iter().map(|r| r / z).collect();
                    let r =
                        primal_talagrand_check(&cloud, &h, k, &op, &s.metric, *solver, *tolerance)?
                            .param("tilt", beta);
                    pass &= r.summary.pass;
                    reports.push(r);
                }
                plain(
                    pass,
                    json!({"K": k, "atoms": cloud.len(), "reports": reports}),
                )
            }
        })
    }

    /// Runs a monotone trace on every chosen function, optionally again on the
    /// refined grid, and writes one CSV per function.
    fn traces(
        &self,
        name: &str,
        chosen: &[Labelled],
        tolerance: f64,
        refinement_ratio: Option<f64>,
        constants: Value,
        compute: impl Fn(&RadialMeasure, &GridFunction) -> CliResult<MonotonicityTrace>,
    ) -> CliResult<Outcome> {
        let s = &self.setup;
        let coarse: Vec<MonotonicityTrace> = chosen
            .iter()
            .map(|l| compute(&s.measure, &l.values))
            .collect::<CliResult<_>>()?;
        let worst = coarse.iter().map(|t| t.max_jump).fold(0.0, f64::max);
        let mut pass = worst <= tolerance;
        let mut refined = Value::Null;
        if let Some(limit) = refinement_ratio {
            let grid = s.grid.refined();
            let m = measure_on(
                &s.group,
                &grid,
                self.config.distance,
                &s.potential,
                &self.config.measure,
            )?;
            let fine: Vec<MonotonicityTrace> = chosen
                .iter()
                .map(|l| compute(&m, &l.function.on_grid(&s.group, &grid)?))
                .collect::<CliResult<_>>()?;
            let fine_worst = fine.iter().map(|t| t.max_jump).fold(0.0, f64::max);
            let ratio = if worst > 0.0 { fine_worst / worst } else { 0.0 };
            let ok = fine_worst <= worst && ratio <= limit;
            pass &= ok;
            refined = json!({
                "shape": grid.shape(),
                "max_jump": fine_worst,
                "per_function": fine.iter().map(|t| t.max_jump).collect::<Vec<_>>(),
                "ratio": ratio,
                "limit": limit,
                "pass": ok,
            });
        }
        let traces = chosen
            .iter()
            .zip(&coarse)
            .map(|(l, t)| {
                (
                    PathBuf::from(name).join(format!("{}.csv", l.label)),
                    t.times.clone(),
                    t.values.clone(),
                )
            })
            .collect();
        let per_function: Vec<Value> = chosen
            .iter()
            .zip(&coarse)
            .map(|(l, t)| json!({"label": l.label, "function": l.function, "trace": t}))
            .collect();
        Ok(Outcome {
            pass,
            result: json!({
                "constants": constants,
                "tolerance": tolerance,
                "max_jump": worst,
                "traces": per_function,
                "refined": refined,
            }),
            traces,
        })
    }
}

/// Timed stage; errors are tagged with the stage name and reported in
/// `error.json` before they propagate.
fn stage<T>(
    out: &Path,
    timings: &mut Vec<StageTiming>,
    name: &str,
    body: impl FnOnce() -> CliResult<T>,
) -> CliResult<T> {
    let start = Instant::now();
    let r = body();
    timings.push(StageTiming {
        stage: name.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    r.map_err(|e| {
        let body = json!({"schema": SCHEMA, "stage": name, "error": e.to_string()});
        let _ = write_json(&out.join("error.json"), &body, true);
        e.in_stage(name)
    })
}

/// Executes the configured pipeline and writes every report under `config.out`.
pub fn run(config: &ExperimentConfig) -> CliResult<RunManifest> {
    config.validate()?;
    let out = config.out.clone();
    std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let stale = out.join("error.json");
    if stale.exists() {
        std::fs::remove_file(&stale).map_err(|e| io_err(&stale, e))?;
    }
    let mut timings = Vec::new();
    let mut reports: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let group = config.group.clone();

    let grid = config.build_grid()?;
    let field = stage(&out, &mut timings, "distance", || {
        distance_field(&group, &grid, config.distance)
    })?;
    let potential = Potential::new(config.potential.clone())?;
    let measure = stage(&out, &mut timings, "measure", || {
        let m = build_measure(&group, &field, &potential, &config.measure)?;
        let mut body = m.to_json();
        body["schema"] = json!(SCHEMA);
        body["inscribed_radius"] = json!(m.inscribed_radius);
        body["truncation_bound"] = json!(m.truncation_bound);
        write_json(&out.join("measure.json"), &body, false)?;
        Ok(m)
    })?;
    reports.insert("measure".into(), vec![PathBuf::from("measure.json")]);
    let (family, values, probes) = stage(&out, &mut timings, "family", || {
        let family = TestFunctionFamily::generate(&config.family.spec(config.seed), &group)?;
        let values = family.on_grid(&group, &grid)?;
        let probes = config
            .probes
            .iter()
            .map(|p| p.on_grid(&group, &grid))
            .collect::<carnot_core::Result<Vec<_>>>()?;
        write_json(&out.join("family.json"), &family, true)?;
        Ok((family, values, probes))
    })?;
    reports.insert("family".into(), vec![PathBuf::from("family.json")]);

    let mut runner = Runner {
        config,
        setup: Setup {
            metric: GroupMetric::new(group.clone()),
            group,
            grid,
            potential,
            measure,
            family,
            values,
            probes,
        },
        lsi: None,
    };
    let mut checks: Vec<&CheckSpec> = config.checks.iter().collect();
    checks.sort_by_key(|c| c.rank());
    let mut verdicts = BTreeMap::new();
    for spec in checks {
        let name = spec.name();
        let files = stage(&out, &mut timings, &format!("check:{name}"), || {
            let outcome = runner.check(spec)?;
            let mut files = Vec::new();
            for (rel, times, values) in &outcome.traces {
                let path = out.join(rel);
                if let Some(dir) = path.parent() {
                    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
                }
                write_trace_csv(&path, times, values)?;
                files.push(rel.clone());
            }
            let rel = PathBuf::from(format!("{name}.json"));
            let body = CheckReport {
                schema: SCHEMA,
                check: name.to_string(),
                pass: outcome.pass,
                result: outcome.result,
            };
            write_json(&out.join(&rel), &body, true)?;
            files.insert(0, rel);
            verdicts.insert(name.to_string(), outcome.pass);
            Ok(files)
        })?;
        reports.insert(name.to_string(), files);
    }

    let manifest = RunManifest {
        schema: SCHEMA,
        config_hash: config_hash(config),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        out: out.clone(),
        pass: verdicts.values().all(|&p| p),
        reports,
        checks: verdicts,
        stages: timings,
    };
    write_json(&out.join("manifest.json"), &manifest, true)?;
    Ok(manifest)
}
