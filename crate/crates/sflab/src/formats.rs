//! CSV tables and JSON views of the core results.

use serde_json::{json, Map, Value};
use sflab_core::atlas::ProbeCrossing;
use sflab_core::conjugacy::{PairReport, PairResiduals};
use sflab_core::fold::FoldMetrics;
use sflab_core::geometry::PlanarCurve;
use sflab_core::model::Handedness;
use sflab_core::moduli::{Estimate, ModuliEstimate, Signature};

pub const CURVE_HEADER: &str = "s,x,y,tx,ty";
pub const GRID_HEADER: &str = "param_u,param_v,x,y,t";
pub const CROSSING_HEADER: &str = "m,height,dist_to_q,margin";
pub const METRICS_HEADER: &str = "m,n,d_mn,theta_mn,kappa_mn,cx,cy,residual_max";

fn table<I, R>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn curve_csv(c: &PlanarCurve) -> String {
    table(CURVE_HEADER, c.rows().into_iter().map(|r| r.map(num)))
}

pub fn grid_csv(rows: &[[f64; 5]]) -> String {
    table(GRID_HEADER, rows.iter().map(|r| r.map(num)))
}

pub fn crossings_csv(rows: &[ProbeCrossing]) -> String {
    table(
        CROSSING_HEADER,
        rows.iter().map(|w| {
            [
                w.m.to_string(),
                num(w.crossing.height),
                num(w.distance),
                num(w.crossing.margin),
            ]
        }),
    )
}

pub fn metrics_csv(rows: &[FoldMetrics]) -> String {
    table(
        METRICS_HEADER,
        rows.iter().map(|r| {
            let v = r.row();
            let mut cells = vec![r.m.to_string(), r.n.to_string()];
            cells.extend(v[2..].iter().map(|&x| num(x)));
            cells
        }),
    )
}

/// Parses a CSV produced above back into numbers.
pub fn parse_csv(text: &str) -> Option<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines.next()?.split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse::<f64>().ok()).collect::<Option<Vec<_>>>())
        .collect::<Option<Vec<_>>>()?;
    Some((header, rows))
}

pub fn estimate_json(e: &Option<Estimate>) -> Value {
    match e {
        Some(e) => json!({"value": e.value, "half_width": e.half_width}),
        None => Value::Null,
    }
}

pub fn signature_str(s: &Option<Signature>) -> String {
    match s {
        Some(Signature::Rational { u, v }) => format!("({u},{v})"),
        Some(Signature::Irrational) => String::from("irrational"),
        None => String::from("n/a"),
    }
}

pub fn moduli_json(e: &ModuliEstimate) -> Value {
    let errors: Map<String, Value> = e
        .errors
        .iter()
        .map(|(k, v)| (k.clone(), Value::String(v.clone())))
        .collect();
    json!({
        "lambda_hat": estimate_json(&e.lambda_hat),
        "r_hat": estimate_json(&e.r_hat),
        "theta_hat": estimate_json(&e.theta_hat),
        "ratio_hat": estimate_json(&e.ratio_hat),
        "rotation": e.rotation.map(|r| json!({"value": r.value, "half_width": r.half_width})),
        "signature": signature_str(&e.signature),
        "cross_ratio_re": e.cross_ratio.map(|c| c.re),
        "cross_ratio_im": e.cross_ratio.map(|c| c.im),
        "errors": errors,
    })
}

/// Plan summary for reports; the candidate list is omitted.
pub fn plan_json(e: &ModuliEstimate) -> Value {
    match &e.plan {
        Some(p) => json!({
            "w": p.w,
            "w0": p.w0,
            "pairs": p.pairs,
            "residuals": p.residuals,
        }),
        None => Value::Null,
    }
}

fn orientation_str(h: Handedness) -> &'static str {
    match h {
        Handedness::Preserving => "preserving",
        Handedness::Reversing => "reversing",
    }
}

fn residuals_json(r: &PairResiduals) -> Value {
    json!({
        "transport_parallel": r.transport_parallel,
        "transport_xi": r.transport_xi,
        "equivariance": r.equivariance,
        "angle_differences": r.angle_differences,
        "orthogonality": r.orthogonality,
        "cross_ratio": r.cross_ratio,
        "candidate_error": r.candidate_error,
        "epsilon": r.epsilon.as_ref().map(|e| json!({
            "holds": e.holds,
            "margin": e.margin,
            "trend": e.trend,
            "below_noise": e.below_noise,
        })),
    })
}

pub fn pair_json(p: &PairReport) -> Value {
    json!({
        "verdict": p.verdict.as_str(),
        "violated_modulus": p.violated_modulus(),
        "violated": p.violated,
        "residuals": residuals_json(&p.residuals),
        "candidate": p.candidate.map(|h| json!({
            "rho": h.rho,
            "omega": h.omega,
            "orientation": orientation_str(h.handedness),
        })),
        "notes": p.notes,
        "moduli": [moduli_json(&p.moduli.0), moduli_json(&p.moduli.1)],
    })
}

pub const SWEEP_HEADER: &str = "parameter,value,lambda_hat,lambda_err,r_hat,r_err,theta_hat,theta_err,ratio_hat,ratio_err,rotation,signature,cross_ratio_re,cross_ratio_im,error";

/// One sweep row; `error` is empty when every estimate succeeded.
pub fn sweep_row(parameter: &str, value: f64, e: Option<&ModuliEstimate>, error: &str) -> String {
    let est = |x: Option<Estimate>| match x {
        Some(e) => [num(e.value), num(e.half_width)],
        None => [String::new(), String::new()],
    };
    let mut cells = vec![parameter.to_string(), num(value)];
    match e {
        Some(e) => {
            cells.extend(est(e.lambda_hat));
            cells.extend(est(e.r_hat));
            cells.extend(est(e.theta_hat));
            cells.extend(est(e.ratio_hat));
            cells.push(e.rotation.map(|r| num(r.value)).unwrap_or_default());
            cells.push(signature_str(&e.signature));
            cells.push(e.cross_ratio.map(|c| num(c.re)).unwrap_or_default());
            cells.push(e.cross_ratio.map(|c| num(c.im)).unwrap_or_default());
        }
        None => cells.extend(std::iter::repeat_n(String::new(), 12)),
    }
    // Commas would break the row.
    cells.push(error.replace([',', '\n'], ";"));
    cells.join(",")
}
