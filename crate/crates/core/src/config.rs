//! Plain key=value experiment configuration.
//!
//! The format is line-oriented: `[section]` headers, `key = value` pairs,
//! `#` comments, blank lines. Sections are `[model] [grid] [run] [weights]
//! [output] [sweep]`; every key has a default, so the empty string is a
//! valid config. Parsing reports all problems at once, syntax first
//! (with line numbers), then semantic validation.
//!
//! `canonical()` renders a config with every key explicit in a fixed
//! order. Canonical text is a fixed point: parsing it and re-rendering
//! reproduces it byte for byte, which is what makes configs diffable and
//! runs reproducible.

use crate::decay::TheoremCase;
use crate::energetics::FamilyKind;
use crate::error::{Error, Result};
use crate::kummer::gamma_pair;
use crate::model::{DampingProfile, Domain, ModelParams, Nonlinearity, Profile};
use crate::solver::RunConfig;
use crate::weights::WeightSettings;
use std::collections::HashSet;
use std::fmt::Write as _;

/// Grid portion of a config.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub r_max: f64,
    pub points: usize,
}

/// Run portion: solver knobs plus data, theorem case, and RNG seed.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub config: RunConfig,
    pub u0: Profile,
    pub u1: Profile,
    pub case: TheoremCase,
    pub seed: u64,
}

/// Sweep axes; each cell reuses the base config with (p, lambda) replaced.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub p: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// Fully resolved experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub grid: GridSpec,
    pub run: RunSpec,
    pub weights: WeightSettings,
    pub family: FamilyKind,
    pub output_dir: String,
    pub sweep: Option<SweepSpec>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: ModelParams {
                n: 1,
                alpha: 0.0,
                a0: 1.0,
                a1: 1.0,
                p: 3.0,
                lambda: 0.0,
                domain: Domain::WholeSpace,
                damping: DampingProfile::PowerLaw,
                nonlinearity: Nonlinearity::Absorbing,
            },
            grid: GridSpec {
                r_max: 20.0,
                points: 512,
            },
            run: RunSpec {
                config: RunConfig {
                    t_final: 10.0,
                    ..RunConfig::default()
                },
                u0: Profile::CompactBump {
                    center: 4.0,
                    width: 2.0,
                    amplitude: 1.0,
                },
                u1: Profile::Zero,
                case: TheoremCase::II,
                seed: 42,
            },
            weights: WeightSettings::default(),
            family: FamilyKind::Theta,
            output_dir: "out".into(),
            sweep: None,
        }
    }
}

impl ExperimentConfig {
    /// Profile index the weight table needs for this config's family.
    pub fn beta(&self) -> f64 {
        match self.family {
            FamilyKind::Psi => self.model.lambda / (1.0 - 2.0 * self.weights.delta),
            FamilyKind::Theta => 0.0,
        }
    }

    /// Weight settings with the family-derived profile index filled in.
    pub fn weight_settings(&self) -> WeightSettings {
        WeightSettings {
            beta: self.beta(),
            ..self.weights
        }
    }

    /// Canonical rendering: every key explicit, fixed order, LF endings.
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[model]");
        let _ = writeln!(s, "n = {}", self.model.n);
        let _ = writeln!(s, "alpha = {}", self.model.alpha);
        let _ = writeln!(s, "a0 = {}", self.model.a0);
        let _ = writeln!(s, "a1 = {}", self.model.a1);
        let _ = writeln!(s, "p = {}", self.model.p);
        let _ = writeln!(s, "lambda = {}", self.model.lambda);
        match self.model.domain {
            Domain::WholeSpace => {
                let _ = writeln!(s, "domain = whole_space");
            }
            Domain::ExteriorBall { r0 } => {
                let _ = writeln!(s, "domain = exterior_ball");
                let _ = writeln!(s, "r0 = {r0}");
            }
        }
        let damping = match self.model.damping {
            DampingProfile::PowerLaw => "power_law",
            DampingProfile::Constant => "constant",
            DampingProfile::Off => "off",
        };
        let _ = writeln!(s, "damping = {damping}");
        let nl = match self.model.nonlinearity {
            Nonlinearity::Absorbing => "absorbing",
            Nonlinearity::Off => "off",
        };
        let _ = writeln!(s, "nonlinearity = {nl}");
        let _ = writeln!(s, "\n[grid]");
        let _ = writeln!(s, "r_max = {}", self.grid.r_max);
        let _ = writeln!(s, "points = {}", self.grid.points);
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(s, "t_final = {}", self.run.config.t_final);
        let _ = writeln!(s, "cfl = {}", self.run.config.cfl);
        let _ = writeln!(s, "record_every = {}", self.run.config.record_every);
        let _ = writeln!(s, "cone_margin = {}", self.run.config.cone_margin);
        let _ = writeln!(s, "require_cone = {}", self.run.config.require_cone);
        let _ = writeln!(s, "u0 = {}", render_profile(&self.run.u0));
        let _ = writeln!(s, "u1 = {}", render_profile(&self.run.u1));
        let case = match self.run.case {
            TheoremCase::I => "i",
            TheoremCase::II => "ii",
        };
        let _ = writeln!(s, "case = {case}");
        let _ = writeln!(s, "seed = {}", self.run.seed);
        let _ = writeln!(s, "\n[weights]");
        let _ = writeln!(s, "epsilon = {}", self.weights.epsilon);
        let _ = writeln!(s, "delta = {}", self.weights.delta);
        let _ = writeln!(s, "t0 = {}", self.weights.t0);
        match self.weights.nu {
            Some(nu) => {
                let _ = writeln!(s, "nu = {nu}");
            }
            None => {
                let _ = writeln!(s, "nu = auto");
            }
        }
        let family = match self.family {
            FamilyKind::Psi => "psi",
            FamilyKind::Theta => "theta",
        };
        let _ = writeln!(s, "family = {family}");
        let _ = writeln!(s, "\n[output]");
        let _ = writeln!(s, "dir = {}", self.output_dir);
        if let Some(sweep) = &self.sweep {
            let _ = writeln!(s, "\n[sweep]");
            let _ = writeln!(s, "p = {}", render_list(&sweep.p));
            let _ = writeln!(s, "lambda = {}", render_list(&sweep.lambda));
        }
        s
    }

    /// Semantic validation across all sections; collects every violation.
    pub fn validate(&self) -> Result<()> {
        let mut faults = Vec::new();
        if let Err(Error::Validation(msg)) = self.model.validate() {
            faults.push(msg);
        }
        if self.grid.points < 16 {
            faults.push(format!("grid points = {} below minimum 16", self.grid.points));
        }
        if !(self.grid.r_max > self.model.r_min()) {
            faults.push(format!(
                "r_max = {} must exceed the inner radius {}",
                self.grid.r_max,
                self.model.r_min()
            ));
        }
        let rc = &self.run.config;
        if !(rc.cfl > 0.0 && rc.cfl <= crate::solver::MAX_CFL) {
            faults.push(format!(
                "cfl = {} not in (0, {}]",
                rc.cfl,
                crate::solver::MAX_CFL
            ));
        }
        if !(rc.t_final >= 0.0 && rc.t_final.is_finite()) {
            faults.push(format!("t_final = {} must be finite and >= 0", rc.t_final));
        }
        if rc.record_every == 0 {
            faults.push("record_every must be at least 1".into());
        }
        if !(rc.cone_margin >= 0.0) {
            faults.push(format!("cone_margin = {} must be >= 0", rc.cone_margin));
        }
        let w = &self.weights;
        if !(w.epsilon > 0.0 && w.epsilon < 0.5) {
            faults.push(format!("epsilon = {} not in (0, 1/2)", w.epsilon));
        }
        if !(w.delta > 0.0 && w.delta < 0.5) {
            faults.push(format!("delta = {} not in (0, 1/2)", w.delta));
        }
        if !(w.t0 >= 1.0) {
            faults.push(format!("t0 = {} must be at least 1", w.t0));
        }
        if let Some(nu) = w.nu {
            if !(nu > 0.0) {
                faults.push(format!("nu = {nu} must be positive"));
            }
        }
        if self.family == FamilyKind::Psi {
            if let Ok((_, gamma)) = gamma_pair(self.model.n, self.model.alpha, w.epsilon) {
                let beta = self.beta();
                if beta >= gamma {
                    faults.push(format!(
                        "psi family needs lambda/(1-2 delta) = {beta} below gamma = {gamma}"
                    ));
                }
            }
        }
        if let Some(sweep) = &self.sweep {
            if sweep.p.is_empty() || sweep.lambda.is_empty() {
                faults.push("sweep axes must be non-empty".into());
            }
            if sweep.p.iter().chain(&sweep.lambda).any(|v| !v.is_finite()) {
                faults.push("sweep axis values must be finite".into());
            }
        }
        if faults.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(faults.join("\n")))
        }
    }
}

fn render_profile(p: &Profile) -> String {
    match p {
        Profile::Zero => "zero".into(),
        Profile::CompactBump {
            center,
            width,
            amplitude,
        } => format!("compact_bump:{center},{width},{amplitude}"),
        Profile::SmoothBump {
            center,
            width,
            amplitude,
        } => format!("smooth_bump:{center},{width},{amplitude}"),
        Profile::PolyDecay { q, amplitude } => format!("poly_decay:{q},{amplitude}"),
    }
}

fn render_list(vals: &[f64]) -> String {
    vals.iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

fn parse_profile(value: &str) -> std::result::Result<Profile, String> {
    let (name, args) = match value.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a)),
        None => (value.trim(), None),
    };
    let nums = |args: Option<&str>, count: usize| -> std::result::Result<Vec<f64>, String> {
        let raw = args.ok_or_else(|| format!("profile '{name}' needs {count} arguments"))?;
        let vals: Vec<f64> = raw
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
            .collect::<std::result::Result<_, _>>()?;
        if vals.len() != count {
            return Err(format!(
                "profile '{name}' needs {count} arguments, got {}",
                vals.len()
            ));
        }
        Ok(vals)
    };
    match name {
        "zero" => Ok(Profile::Zero),
        "compact_bump" => {
            let v = nums(args, 3)?;
            Ok(Profile::CompactBump {
                center: v[0],
                width: v[1],
                amplitude: v[2],
            })
        }
        "smooth_bump" => {
            let v = nums(args, 3)?;
            Ok(Profile::SmoothBump {
                center: v[0],
                width: v[1],
                amplitude: v[2],
            })
        }
        "poly_decay" => {
            let v = nums(args, 2)?;
            Ok(Profile::PolyDecay {
                q: v[0],
                amplitude: v[1],
            })
        }
        other => Err(format!("unknown profile '{other}'")),
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    value
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

const SECTIONS: [&str; 6] = ["model", "grid", "run", "weights", "output", "sweep"];

/// Parse and validate a config. Reports every syntax problem with its
/// line number, or failing that every semantic violation.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    let mut domain_name: Option<String> = None;
    let mut r0: Option<f64> = None;
    let mut sweep_p: Option<Vec<f64>> = None;
    let mut sweep_lambda: Option<Vec<f64>> = None;
    let mut saw_sweep = false;

    let mut errors: Vec<String> = Vec::new();
    let mut seen: HashSet<(String, String)> = HashSet::new();
    let mut section = String::new();

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if SECTIONS.contains(&name) {
                section = name.to_string();
                if name == "sweep" {
                    saw_sweep = true;
                }
            } else {
                errors.push(format!("line {no}: unknown section [{name}]"));
                section.clear();
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            errors.push(format!("line {no}: expected key = value, got '{line}'"));
            continue;
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            errors.push(format!("line {no}: empty key"));
            continue;
        }
        if section.is_empty() {
            errors.push(format!("line {no}: key '{key}' outside any section"));
            continue;
        }
        if !seen.insert((section.clone(), key.clone())) {
            errors.push(format!("line {no}: duplicate key '{key}' in [{section}]"));
            continue;
        }

        let bad = |what: &str| format!("line {no}: invalid {what} '{value}' for key '{key}'");
        macro_rules! set {
            ($target:expr, $ty:ty, $what:literal) => {
                match value.parse::<$ty>() {
                    Ok(v) => $target = v,
                    Err(_) => errors.push(bad($what)),
                }
            };
        }
        match (section.as_str(), key.as_str()) {
            ("model", "n") => set!(cfg.model.n, u32, "integer"),
            ("model", "alpha") => set!(cfg.model.alpha, f64, "number"),
            ("model", "a0") => set!(cfg.model.a0, f64, "number"),
            ("model", "a1") => set!(cfg.model.a1, f64, "number"),
            ("model", "p") => set!(cfg.model.p, f64, "number"),
            ("model", "lambda") => set!(cfg.model.lambda, f64, "number"),
            ("model", "domain") => match value.as_str() {
                "whole_space" | "exterior_ball" => domain_name = Some(value.clone()),
                _ => errors.push(bad("domain")),
            },
            ("model", "r0") => match value.parse::<f64>() {
                Ok(v) => r0 = Some(v),
                Err(_) => errors.push(bad("number")),
            },
            ("model", "damping") => match value.as_str() {
                "power_law" => cfg.model.damping = DampingProfile::PowerLaw,
                "constant" => cfg.model.damping = DampingProfile::Constant,
                "off" => cfg.model.damping = DampingProfile::Off,
                _ => errors.push(bad("damping profile")),
            },
            ("model", "nonlinearity") => match value.as_str() {
                "absorbing" => cfg.model.nonlinearity = Nonlinearity::Absorbing,
                "off" => cfg.model.nonlinearity = Nonlinearity::Off,
                _ => errors.push(bad("nonlinearity")),
            },
            ("grid", "r_max") => set!(cfg.grid.r_max, f64, "number"),
            ("grid", "points") => set!(cfg.grid.points, usize, "integer"),
            ("run", "t_final") => set!(cfg.run.config.t_final, f64, "number"),
            ("run", "cfl") => set!(cfg.run.config.cfl, f64, "number"),
            ("run", "record_every") => set!(cfg.run.config.record_every, usize, "integer"),
            ("run", "cone_margin") => set!(cfg.run.config.cone_margin, f64, "number"),
            ("run", "require_cone") => set!(cfg.run.config.require_cone, bool, "boolean"),
            ("run", "u0") => match parse_profile(&value) {
                Ok(p) => cfg.run.u0 = p,
                Err(e) => errors.push(format!("line {no}: {e}")),
            },
            ("run", "u1") => match parse_profile(&value) {
                Ok(p) => cfg.run.u1 = p,
                Err(e) => errors.push(format!("line {no}: {e}")),
            },
            ("run", "case") => match value.as_str() {
                "i" => cfg.run.case = TheoremCase::I,
                "ii" => cfg.run.case = TheoremCase::II,
                _ => errors.push(bad("theorem case")),
            },
            ("run", "seed") => set!(cfg.run.seed, u64, "integer"),
            ("weights", "epsilon") => set!(cfg.weights.epsilon, f64, "number"),
            ("weights", "delta") => set!(cfg.weights.delta, f64, "number"),
            ("weights", "t0") => set!(cfg.weights.t0, f64, "number"),
            ("weights", "nu") => {
                if value == "auto" {
                    cfg.weights.nu = None;
                } else {
                    match value.parse::<f64>() {
                        Ok(v) => cfg.weights.nu = Some(v),
                        Err(_) => errors.push(bad("number or 'auto'")),
                    }
                }
            }
            ("weights", "family") => match value.as_str() {
                "psi" => cfg.family = FamilyKind::Psi,
                "theta" => cfg.family = FamilyKind::Theta,
                _ => errors.push(bad("family")),
            },
            ("output", "dir") => cfg.output_dir = value.clone(),
            ("sweep", "p") => match parse_list(&value) {
                Ok(v) => sweep_p = Some(v),
                Err(e) => errors.push(format!("line {no}: {e}")),
            },
            ("sweep", "lambda") => match parse_list(&value) {
                Ok(v) => sweep_lambda = Some(v),
                Err(e) => errors.push(format!("line {no}: {e}")),
            },
            (s, k) => errors.push(format!("line {no}: unknown key '{k}' in section [{s}]")),
        }
    }

    if !errors.is_empty() {
        return Err(Error::Parse(errors.join("\n")));
    }

    match (domain_name.as_deref(), r0) {
        (Some("exterior_ball"), radius) => {
            cfg.model.domain = Domain::ExteriorBall {
                r0: radius.unwrap_or(1.0),
            };
        }
        (Some("whole_space") | None, Some(_)) => {
            return Err(Error::Parse(
                "key 'r0' only applies to domain = exterior_ball".into(),
            ));
        }
        _ => {}
    }
    if saw_sweep {
        cfg.sweep = Some(SweepSpec {
            p: sweep_p.unwrap_or_else(|| vec![cfg.model.p]),
            lambda: sweep_lambda.unwrap_or_else(|| vec![cfg.model.lambda]),
        });
    }

    cfg.validate()?;
    Ok(cfg)
}
