//! Flat `[section]` / `key = value` configuration files.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::PathBuf;

use sflab_core::model::{Handedness, SystemSpec};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    /// 1-based; 0 when the problem is not tied to a line.
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub line: usize,
    pub entries: Vec<Entry>,
}

/// Parsed file: sections in order. `#` and `;` start comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Document {
    pub sections: Vec<Section>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Document, ConfigError> {
        let mut doc = Document::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let s = raw
                .split(['#', ';'])
                .next()
                .unwrap_or("")
                .trim();
            if s.is_empty() {
                continue;
            }
            if let Some(rest) = s.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(line, "unterminated section header"))?
                    .trim();
                if name.is_empty() {
                    return Err(err(line, "empty section name"));
                }
                if doc.section(name).is_some() {
                    return Err(err(line, format!("duplicate section [{name}]")));
                }
                doc.sections.push(Section {
                    name: name.to_string(),
                    line,
                    entries: Vec::new(),
                });
                continue;
            }
            let (k, v) = s
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, found `{s}`")))?;
            let key = k.trim();
            if key.is_empty() {
                return Err(err(line, "missing key"));
            }
            let sec = doc
                .sections
                .last_mut()
                .ok_or_else(|| err(line, "key outside of any section"))?;
            if sec.entries.iter().any(|e| e.key == key) {
                return Err(err(line, format!("duplicate key `{key}`")));
            }
            sec.entries.push(Entry {
                key: key.to_string(),
                value: v.trim().to_string(),
                line,
            });
        }
        Ok(doc)
    }

    pub fn section(&self, name: &str) -> Option<&Section> {
        self.sections.iter().find(|s| s.name == name)
    }
}

impl Section {
    fn check_keys(&self, allowed: &[&str]) -> Result<(), ConfigError> {
        for e in &self.entries {
            if !allowed.contains(&e.key.as_str()) {
                return Err(err(
                    e.line,
                    format!("unknown key `{}` in [{}]", e.key, self.name),
                ));
            }
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn f64(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => parse_number(&e.value)
                .ok_or_else(|| err(e.line, format!("`{}` is not a finite number: `{}`", key, e.value))),
        }
    }

    fn int<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, ConfigError> {
        match self.get(key) {
            None => Ok(default),
            Some(e) => e
                .value
                .parse::<T>()
                .map_err(|_| err(e.line, format!("`{}` is not a valid integer: `{}`", key, e.value))),
        }
    }

    fn string(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }
}

/// A finite number, optionally written as a multiple of `pi` over an
/// integer: `1.5`, `pi`, `-pi/3`, `2pi/5`.
pub fn parse_number(s: &str) -> Option<f64> {
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim(), Some(b.trim().parse::<f64>().ok()?)),
        None => (s.trim(), None),
    };
    let v = match num.strip_suffix("pi") {
        Some(k) => match k.trim().trim_end_matches('*').trim() {
            "" => PI,
            "-" => -PI,
            k => k.parse::<f64>().ok()? * PI,
        },
        None => num.parse::<f64>().ok()?,
    };
    let v = match den {
        Some(d) => v / d,
        None => v,
    };
    v.is_finite().then_some(v)
}

pub const SYSTEM_KEYS: [&str; 18] = [
    "r", "theta", "lambda", "a", "q_re", "q_im", "t0", "c", "eps", "d", "e", "patch_radius", "n0",
    "u", "j", "m0", "out_angle", "t_gain",
];

pub fn system_from_section(sec: &Section) -> Result<SystemSpec, ConfigError> {
    sec.check_keys(&SYSTEM_KEYS)?;
    let d = SystemSpec::default();
    let mut s = d;
    s.local.r = sec.f64("r", d.local.r)?;
    s.local.theta = sec.f64("theta", d.local.theta)?;
    s.local.lambda = sec.f64("lambda", d.local.lambda)?;
    s.local.a = sec.f64("a", d.local.a)?;
    s.global.q.re = sec.f64("q_re", d.global.q.re)?;
    s.global.q.im = sec.f64("q_im", d.global.q.im)?;
    s.global.t0 = sec.f64("t0", d.global.t0)?;
    s.global.c = sec.f64("c", d.global.c)?;
    s.global.eps = sec.f64("eps", d.global.eps)?;
    s.global.d = sec.f64("d", d.global.d)?;
    s.global.e = sec.f64("e", d.global.e)?;
    s.global.patch_radius = sec.f64("patch_radius", d.global.patch_radius)?;
    s.global.out_angle = sec.f64("out_angle", d.global.out_angle)?;
    s.global.t_gain = sec.f64("t_gain", d.global.t_gain)?;
    s.trips.n0 = sec.int("n0", d.trips.n0)?;
    s.trips.u = sec.int("u", d.trips.u)?;
    s.trips.j = sec.int("j", d.trips.j)?;
    s.trips.m0 = sec.int("m0", d.trips.m0)?;
    Ok(s)
}

/// The `[name]` section for a system; `out_angle` and `t_gain` only when
/// they differ from the defaults.
pub fn system_to_section(name: &str, s: &SystemSpec) -> String {
    let d = SystemSpec::default();
    let mut out = format!("[{name}]\n");
    let mut put = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    put("r", format!("{:?}", s.local.r));
    put("theta", format!("{:?}", s.local.theta));
    put("lambda", format!("{:?}", s.local.lambda));
    put("a", format!("{:?}", s.local.a));
    put("q_re", format!("{:?}", s.global.q.re));
    put("q_im", format!("{:?}", s.global.q.im));
    put("t0", format!("{:?}", s.global.t0));
    put("c", format!("{:?}", s.global.c));
    put("eps", format!("{:?}", s.global.eps));
    put("d", format!("{:?}", s.global.d));
    put("e", format!("{:?}", s.global.e));
    put("patch_radius", format!("{:?}", s.global.patch_radius));
    put("n0", s.trips.n0.to_string());
    put("u", s.trips.u.to_string());
    put("j", s.trips.j.to_string());
    put("m0", s.trips.m0.to_string());
    if s.global.out_angle != d.global.out_angle {
        put("out_angle", format!("{:?}", s.global.out_angle));
    }
    if s.global.t_gain != d.global.t_gain {
        put("t_gain", format!("{:?}", s.global.t_gain));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    VerifyAsymptotics,
    EstimateModuli,
    ConjugacyPair,
    Sweep,
}

impl Scenario {
    pub fn parse(s: &str) -> Option<Scenario> {
        Some(match s {
            "verify-asymptotics" => Scenario::VerifyAsymptotics,
            "estimate-moduli" => Scenario::EstimateModuli,
            "conjugacy-pair" => Scenario::ConjugacyPair,
            "sweep" => Scenario::Sweep,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::VerifyAsymptotics => "verify-asymptotics",
            Scenario::EstimateModuli => "estimate-moduli",
            Scenario::ConjugacyPair => "conjugacy-pair",
            Scenario::Sweep => "sweep",
        }
    }
}

/// Second system of a pair: an exact conjugate of `[system]`, or an
/// independent `[system2]` whose tangency point is matched to `q`.
#[derive(Debug, Clone, PartialEq)]
pub enum PairSpec {
    Conjugate {
        rho: f64,
        omega: f64,
        mu: f64,
        handedness: Handedness,
    },
    Independent(SystemSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub parameter: String,
    pub values: Vec<f64>,
}

pub const SWEEP_PARAMETERS: [&str; 5] = ["lambda", "r", "theta", "c", "eps"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub system: SystemSpec,
    pub pair: Option<PairSpec>,
    pub sweep: Option<SweepSpec>,
    /// Largest `m` above `m_min` in the tables.
    pub m_max: i32,
    /// Largest `n` in the curvature and angle tables.
    pub n_table: i32,
    /// Largest `n` searched by the subsequence plan.
    pub n_max: i32,
    pub w: f64,
    pub k_max: u32,
    pub k_xi: u32,
    pub n_equivariance: u32,
    pub epsilon: f64,
    pub transport_tol: f64,
    pub out: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::VerifyAsymptotics,
            system: SystemSpec::default(),
            pair: None,
            sweep: None,
            m_max: 20,
            n_table: 10,
            n_max: 400,
            w: 0.3,
            k_max: 5,
            k_xi: 4,
            n_equivariance: 50,
            epsilon: 1e-3,
            transport_tol: 1e-6,
            out: None,
        }
    }
}

const SCENARIO_KEYS: [&str; 11] = [
    "name", "m_max", "n_table", "n_max", "w", "k_max", "k_xi", "n_equivariance", "epsilon",
    "transport_tol", "out",
];

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let doc = Document::parse(text)?;
        for s in &doc.sections {
            if !["system", "system2", "scenario", "conjugacy", "sweep"].contains(&s.name.as_str()) {
                return Err(err(s.line, format!("unknown section [{}]", s.name)));
            }
        }
        let mut cfg = ScenarioConfig::default();
        let sys = doc
            .section("system")
            .ok_or_else(|| err(0, "missing [system] section"))?;
        cfg.system = system_from_section(sys)?;
        let sc = doc
            .section("scenario")
            .ok_or_else(|| err(0, "missing [scenario] section"))?;
        sc.check_keys(&SCENARIO_KEYS)?;
        let name = sc
            .get("name")
            .ok_or_else(|| err(sc.line, "[scenario] needs `name`"))?;
        cfg.scenario = Scenario::parse(&name.value)
            .ok_or_else(|| err(name.line, format!("unknown scenario `{}`", name.value)))?;
        cfg.m_max = sc.int("m_max", cfg.m_max)?;
        cfg.n_table = sc.int("n_table", cfg.n_table)?;
        cfg.n_max = sc.int("n_max", cfg.n_max)?;
        cfg.w = sc.f64("w", cfg.w)?;
        cfg.k_max = sc.int("k_max", cfg.k_max)?;
        cfg.k_xi = sc.int("k_xi", cfg.k_xi)?;
        cfg.n_equivariance = sc.int("n_equivariance", cfg.n_equivariance)?;
        cfg.epsilon = sc.f64("epsilon", cfg.epsilon)?;
        cfg.transport_tol = sc.f64("transport_tol", cfg.transport_tol)?;
        cfg.out = sc.string("out").map(PathBuf::from);
        let ranges = [
            ("m_max", (0..=200).contains(&cfg.m_max)),
            ("n_table", (1..=200).contains(&cfg.n_table)),
            ("n_max", (1..=1000).contains(&cfg.n_max)),
            ("w", cfg.w > 0.0 && cfg.w < cfg.system.local.a / 2.0),
            ("k_max", cfg.k_max <= 40),
            ("k_xi", cfg.k_xi <= 40),
            ("epsilon", cfg.epsilon > 0.0),
            ("transport_tol", cfg.transport_tol > 0.0),
        ];
        for (key, ok) in ranges {
            if !ok {
                let line = sc.get(key).map(|e| e.line).unwrap_or(sc.line);
                return Err(err(line, format!("`{key}` out of range")));
            }
        }

        if cfg.scenario == Scenario::ConjugacyPair {
            cfg.pair = Some(match (doc.section("conjugacy"), doc.section("system2")) {
                (Some(c), None) => {
                    c.check_keys(&["rho", "omega", "mu", "orientation"])?;
                    let handedness = match c.string("orientation").unwrap_or("preserving") {
                        "preserving" => Handedness::Preserving,
                        "reversing" => Handedness::Reversing,
                        other => {
                            let line = c.get("orientation").map(|e| e.line).unwrap_or(c.line);
                            return Err(err(line, format!("orientation must be preserving or reversing, found `{other}`")));
                        }
                    };
                    PairSpec::Conjugate {
                        rho: c.f64("rho", 1.0)?,
                        omega: c.f64("omega", 0.0)?,
                        mu: c.f64("mu", 1.0)?,
                        handedness,
                    }
                }
                (None, Some(s2)) => PairSpec::Independent(system_from_section(s2)?),
                (Some(c), Some(_)) => {
                    return Err(err(c.line, "give either [conjugacy] or [system2], not both"))
                }
                (None, None) => {
                    return Err(err(sc.line, "conjugacy-pair needs [conjugacy] or [system2]"))
                }
            });
        }
        if cfg.scenario == Scenario::Sweep && doc.section("sweep").is_none() {
            return Err(err(sc.line, "sweep needs a [sweep] section"));
        }
        if let Some(s) = doc.section("sweep") {
            s.check_keys(&["parameter", "min", "max", "count", "values"])?;
            let p = s
                .get("parameter")
                .ok_or_else(|| err(s.line, "[sweep] needs `parameter`"))?;
            if !SWEEP_PARAMETERS.contains(&p.value.as_str()) {
                return Err(err(p.line, format!("cannot sweep `{}`", p.value)));
            }
            let values = if let Some(v) = s.get("values") {
                if v.value.is_empty() {
                    Vec::new()
                } else {
                    v.value
                        .split(',')
                        .map(parse_number)
                        .collect::<Option<Vec<_>>>()
                        .ok_or_else(|| err(v.line, "`values` must be comma-separated numbers"))?
                }
            } else {
                let count: usize = s.int("count", 0)?;
                let lo = s.f64("min", 0.0)?;
                let hi = s.f64("max", lo)?;
                match count {
                    0 => Vec::new(),
                    1 => vec![lo],
                    n => (0..n)
                        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                        .collect(),
                }
            };
            cfg.sweep = Some(SweepSpec {
                parameter: p.value.clone(),
                values,
            });
        }
        Ok(cfg)
    }
}

/// Sets a swept parameter on a copy of the system.
pub fn with_parameter(s: &SystemSpec, name: &str, value: f64) -> SystemSpec {
    let mut out = *s;
    match name {
        "lambda" => out.local.lambda = value,
        "r" => out.local.r = value,
        "theta" => out.local.theta = value,
        "c" => out.global.c = value,
        "eps" => out.global.eps = value,
        _ => {}
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn system_round_trip() {
        let mut s = SystemSpec::default();
        s.local.theta = 0.3;
        s.global.t_gain = 2.0;
        let text = system_to_section("system", &s);
        assert!(text.contains("t_gain"));
        assert!(!text.contains("out_angle"));
        let doc = Document::parse(&text).unwrap();
        assert_eq!(system_from_section(doc.section("system").unwrap()).unwrap(), s);
    }

    #[test]
    fn parse_errors_carry_lines() {
        let e = ScenarioConfig::parse("[system]\nr = 1.5\nlambda = x\n[scenario]\nname = sweep\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = Document::parse("[system\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = ScenarioConfig::parse("[system]\nbogus = 1\n[scenario]\nname = sweep\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("2pi/5"), Some(std::f64::consts::TAU / 5.0));
        assert_eq!(parse_number("-pi"), Some(-PI));
        assert_eq!(parse_number(" 0.25 "), Some(0.25));
        assert_eq!(parse_number("1/0"), None);
        assert_eq!(parse_number("pie"), None);
    }

    #[test]
    fn sweep_grid() {
        let cfg = ScenarioConfig::parse(
            "[system]\n[scenario]\nname = sweep\n[sweep]\nparameter = lambda\nmin = 0.3\nmax = 0.5\ncount = 3\n",
        )
        .unwrap();
        let s = cfg.sweep.unwrap();
        assert_eq!(s.values.len(), 3);
        assert!((s.values[1] - 0.4).abs() < 1e-15);
    }
}
