//! Run configuration: a flat dotted-key text format.
//!
//! One `key = value` pair per line, `#` comments, vector values
//! space-separated. The format round-trips losslessly: floats print in
//! shortest round-trip form and `to_text` emits keys in canonical order.

use ncmap_core::matrix::Mat;
use ncmap_core::presets::{ObjectiveKind, SimulationPreset};
use ncmap_core::{GeneratingPair, MapParameters, StopCriteria, TargetFamily, TargetSpec};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

/// Everything a run needs, as parsed from a config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub alpha1: f64,
    pub alpha2: f64,
    pub h0: f64,
    pub schedule: String,
    pub target_family: String,
    pub target_a: Option<f64>,
    pub target_b: Option<f64>,
    pub target_c: Option<f64>,
    pub target_q: Option<String>,
    pub target_gammas: Option<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub genfun_family: String,
    pub genfun_a: Option<f64>,
    pub genfun_b: Option<f64>,
    pub genfun_c: Option<f64>,
    pub genfun_phi: Option<f64>,
    pub genfun_r0: Option<f64>,
    pub genfun_mu: Option<f64>,
    pub genfun_sign: Option<f64>,
    pub objective_kind: String,
    pub objective_target: Vec<f64>,
    pub objective_amplitude: Option<f64>,
    pub objective_omega: Option<f64>,
    pub x0: Vec<f64>,
    pub max_iters: usize,
    pub max_evals: Option<u64>,
    pub j_threshold: Option<f64>,
    pub stall_tol: Option<f64>,
    pub stall_patience: usize,
    pub noise_std: Option<f64>,
    pub seed: u64,
    pub output_dir: String,
    pub w_file: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: 2,
            alpha1: 0.5,
            alpha2: 0.5,
            h0: 0.05,
            schedule: "constant".into(),
            target_family: "h1".into(),
            target_a: None,
            target_b: None,
            target_c: None,
            target_q: None,
            target_gammas: None,
            sigma: Vec::new(),
            genfun_family: "h2_sincos".into(),
            genfun_a: None,
            genfun_b: None,
            genfun_c: None,
            genfun_phi: None,
            genfun_r0: None,
            genfun_mu: None,
            genfun_sign: None,
            objective_kind: "quadratic".into(),
            objective_target: vec![1.0, 2.0],
            objective_amplitude: None,
            objective_omega: None,
            x0: vec![0.0, 1.0],
            max_iters: 4000,
            max_evals: None,
            j_threshold: None,
            stall_tol: None,
            stall_patience: 5,
            noise_std: None,
            seed: 0,
            output_dir: "out".into(),
            w_file: None,
        }
    }
}

fn parse_f64(v: &str, key: &str) -> Result<f64, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError::Parse(format!("{key}: cannot parse '{v}' as a number")))
}

fn parse_usize(v: &str, key: &str) -> Result<usize, ConfigError> {
    v.parse()
        .map_err(|_| ConfigError::Parse(format!("{key}: cannot parse '{v}' as an integer")))
}

fn parse_vec(v: &str, key: &str) -> Result<Vec<f64>, ConfigError> {
    v.split([' ', ','])
        .filter(|t| !t.is_empty())
        .map(|t| parse_f64(t, key))
        .collect()
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

impl RunConfig {
    /// Parse the dotted-key text format.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut kv = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::Parse(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            kv.insert(key.trim().to_string(), value.trim().to_string());
        }
        Self::from_pairs(kv)
    }

    fn from_pairs(kv: BTreeMap<String, String>) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (key, value) in kv {
            cfg.apply(&key, &value)?;
        }
        Ok(cfg)
    }

    /// Apply one `key=value` pair (also used for command-line overrides).
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "problem.n" => self.n = parse_usize(value, key)?,
            "map.alpha1" => self.alpha1 = parse_f64(value, key)?,
            "map.alpha2" => self.alpha2 = parse_f64(value, key)?,
            "step.h0" => self.h0 = parse_f64(value, key)?,
            "step.schedule" => self.schedule = value.to_string(),
            "target.family" => self.target_family = value.to_string(),
            "target.a" => self.target_a = Some(parse_f64(value, key)?),
            "target.b" => self.target_b = Some(parse_f64(value, key)?),
            "target.c" => self.target_c = Some(parse_f64(value, key)?),
            "target.q" => self.target_q = Some(value.to_string()),
            "target.gammas" => self.target_gammas = Some(parse_vec(value, key)?),
            "sigma" => self.sigma = parse_vec(value, key)?,
            "genfun.family" => self.genfun_family = value.to_string(),
            "genfun.a" => self.genfun_a = Some(parse_f64(value, key)?),
            "genfun.b" => self.genfun_b = Some(parse_f64(value, key)?),
            "genfun.c" => self.genfun_c = Some(parse_f64(value, key)?),
            "genfun.phi" => self.genfun_phi = Some(parse_f64(value, key)?),
            "genfun.r0" => self.genfun_r0 = Some(parse_f64(value, key)?),
            "genfun.mu" => self.genfun_mu = Some(parse_f64(value, key)?),
            "genfun.sign" => self.genfun_sign = Some(parse_f64(value, key)?),
            "objective.kind" => self.objective_kind = value.to_string(),
            "objective.target" => self.objective_target = parse_vec(value, key)?,
            "objective.amplitude" => self.objective_amplitude = Some(parse_f64(value, key)?),
            "objective.omega" => self.objective_omega = Some(parse_f64(value, key)?),
            "run.x0" => self.x0 = parse_vec(value, key)?,
            "run.seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| ConfigError::Parse(format!("{key}: bad seed '{value}'")))?
            }
            "stop.max_iters" => self.max_iters = parse_usize(value, key)?,
            "stop.max_evals" => {
                self.max_evals = Some(value.parse().map_err(|_| {
                    ConfigError::Parse(format!("{key}: bad value '{value}'"))
                })?)
            }
            "stop.j_threshold" => self.j_threshold = Some(parse_f64(value, key)?),
            "stop.stall_tol" => self.stall_tol = Some(parse_f64(value, key)?),
            "stop.stall_patience" => self.stall_patience = parse_usize(value, key)?,
            "noise.std" => self.noise_std = Some(parse_f64(value, key)?),
            "output.dir" => self.output_dir = value.to_string(),
            "w.file" => self.w_file = Some(value.to_string()),
            _ => return Err(ConfigError::Parse(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Canonical text form; `parse(to_text(c)) == c`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("problem.n", self.n.to_string());
        put("map.alpha1", format!("{}", self.alpha1));
        put("map.alpha2", format!("{}", self.alpha2));
        put("step.h0", format!("{}", self.h0));
        put("step.schedule", self.schedule.clone());
        put("target.family", self.target_family.clone());
        if let Some(v) = self.target_a {
            put("target.a", format!("{v}"));
        }
        if let Some(v) = self.target_b {
            put("target.b", format!("{v}"));
        }
        if let Some(v) = self.target_c {
            put("target.c", format!("{v}"));
        }
        if let Some(v) = &self.target_q {
            put("target.q", v.clone());
        }
        if let Some(v) = &self.target_gammas {
            put("target.gammas", fmt_vec(v));
        }
        if !self.sigma.is_empty() {
            put("sigma", fmt_vec(&self.sigma));
        }
        put("genfun.family", self.genfun_family.clone());
        if let Some(v) = self.genfun_a {
            put("genfun.a", format!("{v}"));
        }
        if let Some(v) = self.genfun_b {
            put("genfun.b", format!("{v}"));
        }
        if let Some(v) = self.genfun_c {
            put("genfun.c", format!("{v}"));
        }
        if let Some(v) = self.genfun_phi {
            put("genfun.phi", format!("{v}"));
        }
        if let Some(v) = self.genfun_r0 {
            put("genfun.r0", format!("{v}"));
        }
        if let Some(v) = self.genfun_mu {
            put("genfun.mu", format!("{v}"));
        }
        if let Some(v) = self.genfun_sign {
            put("genfun.sign", format!("{v}"));
        }
        put("objective.kind", self.objective_kind.clone());
        put("objective.target", fmt_vec(&self.objective_target));
        if let Some(v) = self.objective_amplitude {
            put("objective.amplitude", format!("{v}"));
        }
        if let Some(v) = self.objective_omega {
            put("objective.omega", format!("{v}"));
        }
        put("run.x0", fmt_vec(&self.x0));
        put("run.seed", self.seed.to_string());
        put("stop.max_iters", self.max_iters.to_string());
        if let Some(v) = self.max_evals {
            put("stop.max_evals", v.to_string());
        }
        if let Some(v) = self.j_threshold {
            put("stop.j_threshold", format!("{v}"));
        }
        if let Some(v) = self.stall_tol {
            put("stop.stall_tol", format!("{v}"));
        }
        put("stop.stall_patience", self.stall_patience.to_string());
        if let Some(v) = self.noise_std {
            put("noise.std", format!("{v}"));
        }
        put("output.dir", self.output_dir.clone());
        if let Some(v) = &self.w_file {
            put("w.file", v.clone());
        }
        s
    }

    pub fn map_parameters(&self) -> Result<MapParameters, ConfigError> {
        MapParameters::new(self.alpha1, self.alpha2)
            .map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    fn q_matrix(&self) -> Result<Option<Mat>, ConfigError> {
        match self.target_q.as_deref() {
            None | Some("zero") => Ok(None),
            Some("counter_rotation") => Ok(Some(ncmap_core::counter_rotation(self.n))),
            Some(spec) if spec.starts_with("rows:") => {
                let body = &spec[5..];
                let rows: Vec<Vec<f64>> = body
                    .split(';')
                    .map(|r| parse_vec(r, "target.q"))
                    .collect::<Result<_, _>>()?;
                if rows.len() != self.n || rows.iter().any(|r| r.len() != self.n) {
                    return Err(ConfigError::Invalid(format!(
                        "target.q must be {0}x{0}",
                        self.n
                    )));
                }
                let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
                Ok(Some(Mat::from_rows(&refs)))
            }
            Some(other) => Err(ConfigError::Invalid(format!(
                "target.q: unknown form '{other}' (use zero, counter_rotation or rows:..)"
            ))),
        }
    }

    pub fn target_spec(&self) -> Result<TargetSpec, ConfigError> {
        let family = TargetFamily::from_tag(&self.target_family).ok_or_else(|| {
            ConfigError::Invalid(format!("unknown target family '{}'", self.target_family))
        })?;
        let mut spec = TargetSpec::new(family, self.n);
        if let Some(a) = self.target_a {
            spec = spec.with_a(a);
        }
        if let Some(b) = self.target_b {
            spec = spec.with_b(b);
        }
        if let Some(c) = self.target_c {
            spec = spec.with_c(c);
        }
        if let Some(q) = self.q_matrix()? {
            spec = spec.with_q(q);
        }
        if let Some(g) = &self.target_gammas {
            spec = spec.with_gammas(g.clone());
        }
        Ok(spec)
    }

    pub fn generating_pair(&self) -> Result<GeneratingPair, ConfigError> {
        let a = self.genfun_a.unwrap_or(1.0);
        let b = self.genfun_b.unwrap_or(1.0);
        let c = self.genfun_c.unwrap_or(0.0);
        let phi = self.genfun_phi.unwrap_or(0.0);
        let sign = self.genfun_sign.unwrap_or(1.0);
        let pair = match self.genfun_family.as_str() {
            "h2_sincos" => GeneratingPair::h2_sincos(a, b, phi),
            "h3_coshsinh" => GeneratingPair::h3_coshsinh(a, b, phi, sign),
            "h4_const_lin" => GeneratingPair::h4_const_lin(a, sign),
            "h5_lin_const" => GeneratingPair::h5_lin_const(a, sign),
            "h6_exp" => GeneratingPair::h6_exp(a, sign),
            "h7_shifted" => GeneratingPair::h7_shifted(a, b, c, phi),
            "e1_radial" => GeneratingPair::e1_radial(self.genfun_r0.unwrap_or(1.0), phi),
            "e2_sincos" => GeneratingPair::e2_sincos(b, phi),
            "log_spiral" => GeneratingPair::log_spiral(self.genfun_mu.unwrap_or(1.0)),
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown generating pair family '{other}'"
                )))
            }
        };
        pair.map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn objective(&self) -> Result<ObjectiveKind, ConfigError> {
        Ok(match self.objective_kind.as_str() {
            "quadratic" => ObjectiveKind::Quadratic {
                target: self.objective_target.clone(),
            },
            "ripple" => ObjectiveKind::RippledQuadratic {
                target: self.objective_target.clone(),
                amplitude: self.objective_amplitude.unwrap_or(0.5),
                omega: self
                    .objective_omega
                    .unwrap_or(10.0 * std::f64::consts::PI),
            },
            "norm" => ObjectiveKind::EuclideanNorm,
            other => {
                return Err(ConfigError::Invalid(format!(
                    "unknown objective kind '{other}'"
                )))
            }
        })
    }

    pub fn stop_criteria(&self) -> StopCriteria {
        StopCriteria {
            max_iters: self.max_iters,
            max_evals: self.max_evals,
            j_threshold: self.j_threshold,
            stall_tol: self.stall_tol,
            stall_patience: self.stall_patience,
        }
    }

    /// Structural validation before any construction: dimensions line up
    /// and the target class is admissible for the map parameters.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n == 0 {
            return Err(ConfigError::Invalid("problem.n must be at least 1".into()));
        }
        if self.x0.len() != self.n {
            return Err(ConfigError::Invalid(format!(
                "run.x0 has {} entries, problem.n is {}",
                self.x0.len(),
                self.n
            )));
        }
        if !(self.h0 > 0.0) {
            return Err(ConfigError::Invalid("step.h0 must be positive".into()));
        }
        if self.schedule != "constant" && self.schedule != "harmonic" {
            return Err(ConfigError::Invalid(format!(
                "step.schedule must be constant or harmonic, got '{}'",
                self.schedule
            )));
        }
        let params = self.map_parameters()?;
        let spec = self.target_spec()?;
        if spec.family.is_skew() != params.requires_skew_target() {
            return Err(ConfigError::Invalid(format!(
                "target family {} is incompatible with alpha = [{}, {}] (c1 = {})",
                spec.family.tag(),
                self.alpha1,
                self.alpha2,
                params.c1()
            )));
        }
        self.generating_pair()?;
        self.objective()?;
        Ok(())
    }

    /// Mirror of the built-in presets, for shipping as config files.
    pub fn from_preset(p: &SimulationPreset) -> Self {
        let mut cfg = Self::default();
        cfg.n = p.n;
        cfg.alpha1 = p.params.alpha1();
        cfg.alpha2 = p.params.alpha2();
        cfg.h0 = p.h;
        cfg.sigma = p.sigma.clone();
        cfg.x0 = p.x0.clone();
        cfg.max_iters = p.max_iters;
        cfg.target_family = p.target.family.tag().to_string();
        cfg.target_a = p.target.a;
        cfg.target_b = p.target.b;
        cfg.target_c = p.target.c;
        if p.target.q_matrix.is_some() {
            cfg.target_q = Some("counter_rotation".into());
        }
        cfg.target_gammas = p.target.gammas.clone();
        match &p.pair {
            GeneratingPair::H2SinCos { a, b, phi } => {
                cfg.genfun_family = "h2_sincos".into();
                cfg.genfun_a = Some(*a);
                cfg.genfun_b = Some(*b);
                cfg.genfun_phi = Some(*phi);
            }
            GeneratingPair::E1Radial { r0, phi } => {
                cfg.genfun_family = "e1_radial".into();
                cfg.genfun_r0 = Some(*r0);
                cfg.genfun_phi = Some(*phi);
            }
            other => {
                cfg.genfun_family = other.tag().to_string();
            }
        }
        match &p.objective {
            ObjectiveKind::Quadratic { target } => {
                cfg.objective_kind = "quadratic".into();
                cfg.objective_target = target.clone();
            }
            ObjectiveKind::RippledQuadratic {
                target,
                amplitude,
                omega,
            } => {
                cfg.objective_kind = "ripple".into();
                cfg.objective_target = target.clone();
                cfg.objective_amplitude = Some(*amplitude);
                cfg.objective_omega = Some(*omega);
            }
            ObjectiveKind::EuclideanNorm => {
                cfg.objective_kind = "norm".into();
            }
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_default() {
        let cfg = RunConfig::default();
        let text = cfg.to_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn parse_rejects_unknown_keys() {
        assert!(RunConfig::parse("bogus.key = 1").is_err());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = RunConfig::parse("# comment\n\nproblem.n = 3  # trailing\nrun.x0 = 0 0 0\n").unwrap();
        assert_eq!(cfg.n, 3);
    }

    #[test]
    fn validation_gates_family_alpha() {
        let mut cfg = RunConfig::default();
        cfg.alpha1 = 1.0;
        cfg.alpha2 = 0.0; // c1 != 0 with a skew family
        assert!(cfg.validate().is_err());
        cfg.target_family = "td_e".into();
        cfg.target_gammas = Some(vec![-0.5, -0.5]);
        cfg.genfun_family = "e1_radial".into();
        assert!(cfg.validate().is_ok());
    }
}
