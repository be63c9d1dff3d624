//! Scenario execution, invariant bookkeeping and artifact writing.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use sflab_core::atlas::{Atlas, ProbeCrossing};
use sflab_core::conjugacy::{analyze_pair, PairConfig, PairReport, Verdict, CROSS_RATIO_TOL};
use sflab_core::fold::{fold_metrics_from, tabulate, FoldMetrics, MetricsTable, RESIDUAL_MAX};
use sflab_core::geometry::wrap_pi;
use sflab_core::model::{make_conjugate_system, validate_params, SystemSpec};
use sflab_core::moduli::{
    estimate_moduli, limit_segment, parallel_family, turn_fraction, xi_family, a0_bound, ModuliConfig,
    ModuliEstimate, SegmentFamily,
};
use sflab_core::{Complex64, LabError};

use crate::config::{with_parameter, ConfigError, PairSpec, Scenario, ScenarioConfig, SYSTEM_KEYS};
use crate::formats;
use crate::parallel::FoldCache;
use crate::svg::Figure;

/// Process exit status of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    InvariantFailure,
    ConfigError,
    NumericalFailure,
}

impl Status {
    pub fn code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::InvariantFailure => 1,
            Status::ConfigError => 2,
            Status::NumericalFailure => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::InvariantFailure => "invariant_failure",
            Status::ConfigError => "config_error",
            Status::NumericalFailure => "numerical_failure",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Numerical(#[from] LabError),
    #[error("cannot write output: {0}")]
    Output(String),
}

impl RunError {
    pub fn status(&self) -> Status {
        match self {
            RunError::Config(_) | RunError::Output(_) => Status::ConfigError,
            RunError::Numerical(_) => Status::NumericalFailure,
        }
    }

    pub fn detail(&self) -> Value {
        match self {
            RunError::Config(e) => json!({
                "kind": "config",
                "line": e.line,
                "message": e.message,
            }),
            RunError::Numerical(e) => json!({
                "kind": "numerical",
                "message": e.to_string(),
            }),
            RunError::Output(m) => json!({
                "kind": "output",
                "message": m,
            }),
        }
    }
}

/// A checked law: passes when `value ≤ bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct Invariant {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
}

impl Invariant {
    pub fn at_most(name: &str, value: f64, bound: f64) -> Invariant {
        Invariant {
            name: name.to_string(),
            passed: value <= bound,
            value,
            bound,
        }
    }

    /// A yes/no condition, recorded as `0 ≤ 0` or `1 ≤ 0`.
    pub fn holds(name: &str, ok: bool) -> Invariant {
        Invariant::at_most(name, if ok { 0.0 } else { 1.0 }, 0.0)
    }

    fn json(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "bound": self.bound,
            "margin": self.bound - self.value,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub status: Status,
    pub invariants: Vec<Invariant>,
    pub report: Value,
    pub artifacts: Vec<Artifact>,
}

impl RunOutput {
    pub fn report_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.report).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn failed(&self) -> impl Iterator<Item = &Invariant> {
        self.invariants.iter().filter(|i| !i.passed)
    }

    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.contents.as_str())
    }

    /// Writes `report.json` and every artifact into `dir`, creating it.
    pub fn write_to(&self, dir: &Path) -> Result<(), RunError> {
        let io = |e: std::io::Error| RunError::Output(format!("{}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(io)?;
        for a in &self.artifacts {
            std::fs::write(dir.join(&a.name), &a.contents).map_err(io)?;
        }
        std::fs::write(dir.join("report.json"), self.report_text()).map_err(io)
    }
}

#[derive(Default)]
struct Body {
    invariants: Vec<Invariant>,
    results: Map<String, Value>,
    artifacts: Vec<Artifact>,
}

impl Body {
    fn put(&mut self, key: &str, v: Value) {
        self.results.insert(key.to_string(), v);
    }

    fn file(&mut self, name: &str, contents: String) {
        self.artifacts.push(Artifact {
            name: name.to_string(),
            contents,
        });
    }
}

pub fn system_json(s: &SystemSpec) -> Value {
    let values = [
        s.local.r,
        s.local.theta,
        s.local.lambda,
        s.local.a,
        s.global.q.re,
        s.global.q.im,
        s.global.t0,
        s.global.c,
        s.global.eps,
        s.global.d,
        s.global.e,
        s.global.patch_radius,
        s.trips.n0 as f64,
        s.trips.u as f64,
        s.trips.j as f64,
        s.trips.m0 as f64,
        s.global.out_angle,
        s.global.t_gain,
    ];
    let map: Map<String, Value> = SYSTEM_KEYS
        .iter()
        .zip(values)
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    Value::Object(map)
}

/// Parses and runs a configuration; parse errors become a config-error run.
pub fn run_text(text: &str) -> RunOutput {
    match ScenarioConfig::parse(text) {
        Ok(cfg) => run(&cfg),
        Err(e) => failure(None, RunError::Config(e)),
    }
}

fn failure(cfg: Option<&ScenarioConfig>, e: RunError) -> RunOutput {
    let status = e.status();
    let report = json!({
        "scenario": cfg.map(|c| c.scenario.name()),
        "status": status.as_str(),
        "exit_code": status.code(),
        "error": e.detail(),
    });
    RunOutput {
        status,
        invariants: Vec::new(),
        report,
        artifacts: Vec::new(),
    }
}

pub fn run(cfg: &ScenarioConfig) -> RunOutput {
    let body = match cfg.scenario {
        Scenario::VerifyAsymptotics => verify_asymptotics(cfg),
        Scenario::EstimateModuli => moduli_scenario(cfg),
        Scenario::ConjugacyPair => pair_scenario(cfg),
        Scenario::Sweep => sweep_scenario(cfg),
    };
    let body = match body {
        Ok(b) => b,
        Err(e) => return failure(Some(cfg), e),
    };
    let status = if body.invariants.iter().all(|i| i.passed) {
        Status::Pass
    } else {
        Status::InvariantFailure
    };
    let names: Vec<&str> = body.artifacts.iter().map(|a| a.name.as_str()).collect();
    let report = json!({
        "scenario": cfg.scenario.name(),
        "status": status.as_str(),
        "exit_code": status.code(),
        "system": system_json(&cfg.system),
        "invariants": body.invariants.iter().map(Invariant::json).collect::<Vec<_>>(),
        "results": Value::Object(body.results),
        "artifacts": names,
        "error": Value::Null,
    });
    RunOutput {
        status,
        invariants: body.invariants,
        report,
        artifacts: body.artifacts,
    }
}

/// Rejects systems that fail parameter validation.
fn admissible(s: &SystemSpec, section: &str) -> Result<(), RunError> {
    let report = validate_params(s);
    let failure = report.failures().next().map(|c| RunError::Config(ConfigError {
        line: 0,
        message: format!("[{section}] is not admissible: {} ({})", c.name, c.detail),
    }));
    failure.map_or(Ok(()), Err)
}

fn moduli_config(cfg: &ScenarioConfig) -> ModuliConfig {
    ModuliConfig {
        ms: (0..=cfg.m_max).collect(),
        ns: (0..=cfg.n_table).collect(),
        w: cfg.w,
        n_max: cfg.n_max,
        ..ModuliConfig::default()
    }
}

/// Relative error, with angles compared on the circle.
fn relative(est: f64, truth: f64) -> f64 {
    ((est - truth) / truth).abs()
}

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Slope samples per axis for `σ(D_m)`.
const SLOPE_SAMPLES: usize = 32;
/// First `m` (above `m_min`) at which the asymptotic laws are checked.
const LAW_FROM: i32 = 12;
const LAW_TOL: f64 = 0.02;
const SLOPE_TOL: f64 = 0.05;
const KAPPA_TOL: f64 = 1e-6;
const ANGLE_TOL: f64 = 1e-9;

fn max_of(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |a: f64, b| if b.is_nan() { f64::NAN } else { a.max(b) })
}

fn verify_asymptotics(cfg: &ScenarioConfig) -> Result<Body, RunError> {
    let s = &cfg.system;
    admissible(s, "system")?;
    let atlas = Atlas::build(s)?;
    let cache = FoldCache::new(&atlas);
    let local = s.local;
    let mut body = Body::default();

    let v = validate_params(s);
    let [phi, phi_t, phi_tt] = v.tangency;
    body.invariants.push(Invariant::at_most(
        "tangency",
        phi.abs().max(phi_t.abs()).max((phi_tt - s.global.phi_tt()).abs()),
        1e-10,
    ));

    let mm = atlas.m_min;
    let slope_ms: Vec<i32> = (mm..=mm + cfg.m_max.min(15)).collect();
    let sigma0 = atlas.sigma0();
    let slopes: Vec<f64> = slope_ms
        .par_iter()
        .map(|&m| atlas.slope(m, SLOPE_SAMPLES))
        .collect::<Result<_, _>>()?;
    let scaled: Vec<f64> = slope_ms
        .iter()
        .zip(&slopes)
        .map(|(&m, &x)| x * (local.r / local.lambda).powi(m) / sigma0)
        .collect();
    body.invariants.push(Invariant::at_most(
        "slope_law",
        max_of(scaled.iter().copied()),
        1.0 + SLOPE_TOL,
    ));
    body.put(
        "slope_law",
        json!({"sigma0": sigma0, "m": slope_ms, "scaled": scaled}),
    );

    let ms: Vec<i32> = (mm..=mm + cfg.m_max).collect();
    let ns: Vec<i32> = (0..=cfg.n_table).collect();
    let folds = cache.get(&ms)?;
    let rows: Vec<Vec<FoldMetrics>> = folds
        .par_iter()
        .map(|b| fold_metrics_from(&atlas, b, &ns))
        .collect::<Result<_, _>>()?;
    let table = tabulate(&atlas, rows.concat());
    law_invariants(&mut body, &atlas, &table, mm + LAW_FROM);
    body.put(
        "distance_constants",
        json!(table.constants.iter().map(|c| json!({"m": c.0, "value": c.1, "change": c.2})).collect::<Vec<_>>()),
    );

    let probes: Vec<ProbeCrossing> = ms
        .par_iter()
        .map(|&m| atlas.probe_intersection(m))
        .collect::<Result<_, _>>()?;
    let probe_dev = max_of(
        probes
            .windows(2)
            .filter(|w| w[0].m >= mm + LAW_FROM)
            .map(|w| (w[1].distance / w[0].distance / local.lambda - 1.0).abs()),
    );
    body.invariants.push(Invariant::at_most("probe_law", probe_dev, LAW_TOL));
    body.put(
        "probe",
        json!({"sup_z": max_of(probes.iter().map(|p| p.crossing.point.z.norm()))}),
    );

    // γ_{m,0} keep their orientation from one m to the next
    let turn = max_of(
        table
            .rows
            .iter()
            .filter(|r| r.n == 0)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| wrap_pi(w[1].theta - w[0].theta).abs()),
    );
    body.invariants.push(Invariant::at_most("orientation_consistent", turn, FRAC_PI_2));

    let est = estimate_moduli(&atlas, &moduli_config(cfg), &|ms: &[i32]| cache.get(ms));
    moduli_invariants(&mut body, &atlas, &est, &|ms: &[i32]| cache.get(ms))?;
    let target = -local.r.ln() / local.lambda.ln();
    body.invariants.push(Invariant::at_most(
        "subsequence_ratio",
        est.ratio_hat.map(|e| relative(e.value, target)).unwrap_or(f64::NAN),
        LAW_TOL,
    ));
    body.invariants.push(Invariant::at_most(
        "rotation_number",
        est.rotation.map(|r| circle_gap(r.value, turn_fraction(local.theta))).unwrap_or(f64::NAN),
        ANGLE_TOL,
    ));
    body.put("moduli", formats::moduli_json(&est));
    body.put("plan", formats::plan_json(&est));

    body.file("fold_metrics.csv", formats::metrics_csv(&table.rows));
    body.file("probe_crossings.csv", formats::crossings_csv(&probes));
    let h0 = atlas.bent_disk(mm)?;
    let grid = h0.sample_grid(40);
    body.file("bent_disk.csv", formats::grid_csv(&grid));
    let front = folds[0].curve.planar()?;
    body.file("front_curve.csv", formats::curve_csv(&front));
    body.file("bent_disk.svg", bent_disk_svg(&atlas, &grid, front.points()));
    if let Some(plan) = &est.plan {
        let fam = parallel_family(&atlas, plan, cfg.k_max, &|ms: &[i32]| cache.get(ms))?;
        body.file("parallel_family.svg", family_svg("parallel family", local.a, &[(&fam, "#1f5fa8", false)]));
    }
    Ok(body)
}

/// Distance, angle, curvature and residual laws on the metrics table.
fn law_invariants(body: &mut Body, atlas: &Atlas, table: &MetricsTable, from: i32) {
    let local = atlas.spec.local;
    let at: BTreeMap<(i32, i32), &FoldMetrics> = table.rows.iter().map(|r| ((r.m, r.n), r)).collect();
    let mut lambda_dev: f64 = 0.0;
    let mut r_dev: f64 = 0.0;
    let mut angle_dev: f64 = 0.0;
    let mut kappa_excess = f64::NEG_INFINITY;
    for (&(m, n), row) in &at {
        if let Some(next) = at.get(&(m + 1, n)) {
            if m >= from {
                lambda_dev = lambda_dev.max((next.d / row.d / local.lambda - 1.0).abs());
            }
        }
        if let Some(next) = at.get(&(m, n + 1)) {
            r_dev = r_dev.max((next.d / row.d / local.r - 1.0).abs());
            angle_dev = angle_dev.max(wrap_pi(next.theta - row.theta - local.theta).abs());
        }
        if let Some(base) = at.get(&(m, 0)) {
            let bound = local.r.powi(-n) * base.kappa * (1.0 + KAPPA_TOL);
            kappa_excess = kappa_excess.max(row.kappa - bound);
        }
    }
    body.invariants.extend([
        Invariant::at_most("distance_ratio_lambda", lambda_dev, LAW_TOL),
        Invariant::at_most("distance_ratio_r", r_dev, 1e-12),
        Invariant::at_most("angle_law", angle_dev, ANGLE_TOL),
        Invariant::at_most("curvature_decay", kappa_excess, 0.0),
        Invariant::at_most(
            "fold_residual",
            max_of(table.rows.iter().map(|r| r.residual_max)),
            RESIDUAL_MAX,
        ),
    ]);
}

/// Plan bracket and straightness of the limit segment.
fn moduli_invariants(
    body: &mut Body,
    atlas: &Atlas,
    est: &ModuliEstimate,
    folds: &sflab_core::moduli::FoldProvider,
) -> Result<(), RunError> {
    let Some(plan) = &est.plan else {
        body.invariants.push(Invariant::holds("subsequence_plan", false));
        return Ok(());
    };
    body.invariants.push(Invariant::holds(
        "window_bracket",
        plan.window_holds(atlas.spec.local.lambda),
    ));
    let (residual, seg) = match limit_segment(atlas, plan, folds) {
        Ok(seg) => (seg.residual, Some(seg)),
        Err(LabError::NotStraight { residual }) => (residual, None),
        Err(e) => return Err(e.into()),
    };
    body.invariants.push(Invariant::at_most(
        "limit_segment_straight",
        residual / plan.w0,
        1e-3,
    ));
    if let Some(seg) = seg {
        body.put(
            "limit_segment",
            json!({
                "m": seg.m,
                "n": seg.n,
                "angle": seg.angle(),
                "distance": seg.distance(),
                "residual": seg.residual,
                "hausdorff_to_previous": seg.hausdorff,
            }),
        );
    }
    Ok(())
}

fn moduli_scenario(cfg: &ScenarioConfig) -> Result<Body, RunError> {
    let s = &cfg.system;
    admissible(s, "system")?;
    let atlas = Atlas::build(s)?;
    let cache = FoldCache::new(&atlas);
    let folds = |ms: &[i32]| cache.get(ms);
    let mut body = Body::default();
    let est = estimate_moduli(&atlas, &moduli_config(cfg), &folds);
    body.invariants.push(Invariant::holds("estimates_complete", est.errors.is_empty()));
    let local = s.local;
    let rel = |e: Option<f64>, truth: f64| e.map(|v| relative(v, truth)).unwrap_or(f64::NAN);
    body.invariants.extend([
        Invariant::at_most("lambda_recovery", rel(est.lambda_hat.map(|e| e.value), local.lambda), 1e-3),
        Invariant::at_most("r_recovery", rel(est.r_hat.map(|e| e.value), local.r), 1e-3),
        Invariant::at_most(
            "theta_recovery",
            est.theta_hat
                .map(|e| wrap_pi(e.value - local.theta).abs() / local.theta.abs())
                .unwrap_or(f64::NAN),
            1e-3,
        ),
    ]);
    moduli_invariants(&mut body, &atlas, &est, &folds)?;
    body.put("moduli", formats::moduli_json(&est));
    body.put("plan", formats::plan_json(&est));
    body.file("moduli.json", {
        let mut t = serde_json::to_string_pretty(&formats::moduli_json(&est)).expect("serializes");
        t.push('\n');
        t
    });
    if let Some(plan) = &est.plan {
        let par = parallel_family(&atlas, plan, cfg.k_max, &folds)?;
        let a0 = a0_bound(&[(local.lambda, local.r)]);
        let xi = xi_family(&atlas, plan, cfg.k_xi, a0, &folds)?;
        body.put(
            "families",
            json!({
                "parallel_angle_spread": par.angle_spread(),
                "parallel_distance_ratios": par.distance_ratios(),
                "a0": a0,
                "xi_angles": xi.segments.iter().map(|s| s.angle()).collect::<Vec<_>>(),
                "xi_distances": xi.segments.iter().map(|s| s.distance()).collect::<Vec<_>>(),
            }),
        );
        body.file("segments.csv", segments_csv(&[("parallel", &par), ("xi", &xi)]));
        body.file(
            "parallel_family.svg",
            family_svg("parallel and xi families", local.a, &[(&par, "#1f5fa8", false), (&xi, "#b03a2e", true)]),
        );
    }
    Ok(body)
}

fn segments_csv(fams: &[(&str, &SegmentFamily)]) -> String {
    let mut out = String::from("family,k,m,n,angle,distance,residual\n");
    for (name, f) in fams {
        for (k, s) in f.segments.iter().enumerate() {
            out.push_str(&format!(
                "{name},{k},{},{},{:?},{:?},{:?}\n",
                s.m,
                s.n,
                s.angle(),
                s.distance(),
                s.residual
            ));
        }
    }
    out
}

fn pair_scenario(cfg: &ScenarioConfig) -> Result<Body, RunError> {
    let f = &cfg.system;
    admissible(f, "system")?;
    let (g, exact) = match cfg.pair.as_ref().expect("pairs are parsed with [conjugacy] or [system2]") {
        PairSpec::Conjugate {
            rho,
            omega,
            mu,
            handedness,
        } => {
            let (g, phi) = make_conjugate_system(f, *rho, *omega, *mu, *handedness).map_err(|e| {
                RunError::Config(ConfigError {
                    line: 0,
                    message: format!("[conjugacy]: {e}"),
                })
            })?;
            (g, Some(phi))
        }
        PairSpec::Independent(g) => (*g, None),
    };
    admissible(&g, if exact.is_some() { "conjugacy" } else { "system2" })?;
    let af = Atlas::build(f)?;
    let ag = Atlas::build(&g)?;
    let cf = FoldCache::new(&af);
    let cg = FoldCache::new(&ag);
    let ff = |ms: &[i32]| cf.get(ms);
    let fg = |ms: &[i32]| cg.get(ms);
    let pc = PairConfig {
        moduli: moduli_config(cfg),
        k_parallel: cfg.k_max,
        k_xi: cfg.k_xi,
        n_equivariance: cfg.n_equivariance,
        epsilon: cfg.epsilon,
        transport_tol: cfg.transport_tol,
        ..PairConfig::default()
    };
    let report = analyze_pair(&af, &ag, exact.as_ref(), &pc, &ff, &fg);
    let mut body = Body::default();
    if report.verdict == Verdict::Consistent {
        pair_invariants(&mut body, &report, cfg, g.local.a, exact.is_some());
    }
    body.put("pair", formats::pair_json(&report));
    body.put("second_system", system_json(&g));
    if let (Some(h), Some(plan)) = (report.candidate, report.moduli.0.plan.as_ref()) {
        if report.verdict == Verdict::Consistent {
            let pf = parallel_family(&af, plan, cfg.k_max, &ff)?;
            let pg = parallel_family(&ag, plan, cfg.k_max, &fg)?;
            body.file("transport.svg", transport_svg(&h, &pf, &pg, g.local.a));
        }
    }
    Ok(body)
}

fn pair_invariants(body: &mut Body, r: &PairReport, cfg: &ScenarioConfig, a2: f64, exact: bool) {
    let res = &r.residuals;
    let tol = cfg.transport_tol * a2;
    let opt = |x: Option<f64>| x.unwrap_or(f64::NAN);
    let transport = |v: &[f64]| if v.is_empty() { f64::NAN } else { max_of(v.iter().copied()) };
    body.invariants.extend([
        Invariant::holds("candidate_recovered", r.candidate.is_some()),
        Invariant::at_most("transport_parallel", transport(&res.transport_parallel), tol),
        Invariant::at_most("transport_xi", transport(&res.transport_xi), tol),
        Invariant::at_most("equivariance", opt(res.equivariance), ANGLE_TOL),
        Invariant::at_most("angle_differences", opt(res.angle_differences), ANGLE_TOL),
        Invariant::at_most("orthogonality", opt(res.orthogonality), ANGLE_TOL),
        Invariant::at_most("cross_ratio", opt(res.cross_ratio), CROSS_RATIO_TOL),
    ]);
    if exact {
        body.invariants.push(Invariant::at_most("candidate_error", opt(res.candidate_error), 1e-8));
        let eps = res.epsilon.as_ref();
        body.invariants.push(Invariant::at_most(
            "epsilon_neighborhood",
            eps.map(|e| e.margin).unwrap_or(f64::NAN),
            cfg.epsilon,
        ));
    }
}

fn sweep_scenario(cfg: &ScenarioConfig) -> Result<Body, RunError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| {
        RunError::Config(ConfigError {
            line: 0,
            message: String::from("missing [sweep] section"),
        })
    })?;
    let mc = moduli_config(cfg);
    let points: Vec<(Option<ModuliEstimate>, String)> = sweep
        .values
        .par_iter()
        .map(|&v| {
            let s = with_parameter(&cfg.system, &sweep.parameter, v);
            if let Err(e) = admissible(&s, "system") {
                return (None, e.to_string());
            }
            match Atlas::build(&s) {
                Ok(atlas) => {
                    let cache = FoldCache::new(&atlas);
                    let est = estimate_moduli(&atlas, &mc, &|ms: &[i32]| cache.get(ms));
                    let msg: Vec<String> = est.errors.iter().map(|(k, m)| format!("{k}: {m}")).collect();
                    (Some(est), msg.join("; "))
                }
                Err(e) => (None, e.to_string()),
            }
        })
        .collect();
    let mut csv = String::from(formats::SWEEP_HEADER);
    csv.push('\n');
    let mut rows = Vec::new();
    for (&v, (est, msg)) in sweep.values.iter().zip(&points) {
        csv.push_str(&formats::sweep_row(&sweep.parameter, v, est.as_ref(), msg));
        csv.push('\n');
        rows.push(json!({
            "value": v,
            "moduli": est.as_ref().map(formats::moduli_json),
            "error": if msg.is_empty() { Value::Null } else { json!(msg) },
        }));
    }
    let mut body = Body::default();
    body.put("parameter", json!(sweep.parameter));
    body.put("points", json!(rows));
    body.put(
        "failed_points",
        json!(points.iter().filter(|p| !p.1.is_empty()).count()),
    );
    body.file("sweep.csv", csv);
    Ok(body)
}

fn bent_disk_svg(atlas: &Atlas, grid: &[[f64; 5]], front: &[Complex64]) -> String {
    let a = atlas.spec.local.a;
    let mut fig = Figure::new("bent disk H~0 and its folding curve", 1.05 * a);
    fig.circle(Complex64::new(0.0, 0.0), a, "#999999");
    for r in grid {
        fig.dot(Complex64::new(r[2], r[3]), "#8fb3d9");
    }
    fig.polyline(front, "#c0392b", 2.0, false)
        .dot(Complex64::new(0.0, 0.0), "black")
        .label(Complex64::new(0.02 * a, 0.02 * a), "p")
        .label(Complex64::new(-0.95 * a, -0.95 * a), "folding curve in red");
    fig.finish()
}

fn segment_points(s: &sflab_core::geometry::OrientedSegment) -> Vec<Complex64> {
    let (p0, p1) = s.endpoints();
    vec![p0, p1]
}

fn family_svg(title: &str, a: f64, fams: &[(&SegmentFamily, &str, bool)]) -> String {
    let mut fig = Figure::new(title, 1.05 * a);
    fig.circle(Complex64::new(0.0, 0.0), a, "#999999");
    for (fam, color, dashed) in fams {
        for (k, s) in fam.segments.iter().enumerate() {
            fig.polyline(&segment_points(&s.segment), color, 1.5, *dashed);
            let (_, end) = s.segment.endpoints();
            fig.label(end * 0.97, &k.to_string());
        }
    }
    fig.finish()
}

fn transport_svg(
    h: &sflab_core::conjugacy::LinearConformalMap,
    pf: &SegmentFamily,
    pg: &SegmentFamily,
    a2: f64,
) -> String {
    let mut fig = Figure::new("h-images (dashed) and primed segments", 1.05 * a2);
    fig.circle(Complex64::new(0.0, 0.0), a2, "#999999");
    for s in &pg.segments {
        fig.polyline(&segment_points(&s.segment), "#1f5fa8", 2.5, false);
    }
    for s in &pf.segments {
        let moved = h.apply_segment(&s.segment);
        if let Ok(c) = moved.clipped(a2) {
            fig.polyline(&segment_points(&c), "#e67e22", 1.2, true);
        }
    }
    fig.label(Complex64::new(-0.95 * a2, -0.95 * a2), "solid: primed family; dashed: h of the family");
    fig.finish()
}
