//! Run configuration: defaults, key-value parsing and validation.

use std::path::{Path, PathBuf};

use crate::agent::AgentConfig;
use crate::envs::{EnvConfig, Variant};
use crate::error::{Error, Result};
use crate::kv::{format_f64_list, parse_f64, parse_f64_list, parse_u64, parse_usize, KvDoc};
use crate::raeb::{Mode, RaebConfig, ALPHA_SCALE_ELECTRICITY, ALPHA_SCALE_GOODS};
use crate::surprise::SurpriseConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvConfig,
    pub agent: AgentConfig,
    pub raeb: RaebConfig,
    /// Alpha as multiples of each initial resource; `raeb.alpha` is derived from it.
    pub alpha_scale: Vec<f64>,
    pub surprise: SurpriseConfig,
    pub total_steps: u64,
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub out: PathBuf,
    /// Write one row per environment step to `steps.csv`.
    pub log_steps: bool,
}

pub fn default_alpha_scale(variant: Variant) -> Vec<f64> {
    match variant {
        Variant::Electric => vec![ALPHA_SCALE_ELECTRICITY],
        Variant::Delivery => vec![ALPHA_SCALE_GOODS],
        Variant::ElectricDelivery => vec![ALPHA_SCALE_ELECTRICITY, ALPHA_SCALE_GOODS],
        Variant::Gridworld => vec![ALPHA_SCALE_GOODS],
    }
}

/// Parse `A..B` (half-open) or a comma/space separated list.
pub fn parse_seeds(key: &str, value: &str) -> Result<Vec<u64>> {
    let v = value.trim();
    let seeds = if let Some((a, b)) = v.split_once("..") {
        let (a, b) = (parse_u64(key, a)?, parse_u64(key, b)?);
        (a..b).collect::<Vec<_>>()
    } else {
        v.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| parse_u64(key, s))
            .collect::<Result<Vec<_>>>()?
    };
    if seeds.is_empty() {
        return Err(Error::config(key, "seed list is empty"));
    }
    Ok(seeds)
}

fn format_seeds(seeds: &[u64]) -> String {
    seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(Error::config(key, format!("`{other}` is not a boolean"))),
    }
}

pub const KEYS: &[&str] = &[
    "env.variant",
    "env.initial_electricity",
    "env.initial_goods",
    "env.max_steps",
    "env.electricity_cost_scale",
    "env.goal_reward_base",
    "raeb.beta",
    "raeb.alpha_scale",
    "raeb.mode",
    "raeb.c",
    "agent.learning_rate",
    "agent.gamma",
    "agent.epsilon_start",
    "agent.epsilon_end",
    "agent.epsilon_fraction",
    "agent.position_bins",
    "agent.velocity_bins",
    "agent.resource_bins",
    "agent.initial_q",
    "surprise.batch_size",
    "surprise.update_interval",
    "surprise.warmup_steps",
    "surprise.hidden",
    "surprise.learning_rate",
    "surprise.buffer_capacity",
    "run.total_steps",
    "run.eval_interval",
    "run.eval_episodes",
    "run.seeds",
    "run.out",
    "run.log_steps",
];

impl RunConfig {
    pub fn new(variant: Variant) -> Self {
        let env = EnvConfig::new(variant);
        let alpha_scale = default_alpha_scale(variant);
        let raeb = RaebConfig::with_alpha_scale(0.25, &alpha_scale, env.initial_resources().as_slice(), Mode::Full)
            .expect("defaults are valid");
        Self {
            env,
            agent: AgentConfig::default(),
            raeb,
            alpha_scale,
            surprise: SurpriseConfig::default(),
            total_steps: 200_000,
            eval_interval: 10_000,
            eval_episodes: 10,
            seeds: (0..5).collect(),
            out: PathBuf::from("runs/default"),
            log_steps: true,
        }
    }

    /// Build from a key-value document on top of the defaults for its
    /// `env.variant` (Delivery if absent). Every bad key is reported at once.
    pub fn from_kv(doc: &KvDoc) -> Result<Self> {
        let mut bad: Vec<(String, String)> = Vec::new();
        let mut note = |r: Result<()>| {
            if let Err(e) = r {
                match e {
                    Error::Config { keys } => bad.extend(keys),
                    other => bad.push(("?".into(), other.to_string())),
                }
            }
        };
        for k in doc.keys() {
            if !KEYS.contains(&k) {
                note(Err(Error::config(k, "unknown key")));
            }
        }
        let variant = match doc.get("env.variant").map(str::parse::<Variant>) {
            None => Variant::Delivery,
            Some(Ok(v)) => v,
            Some(Err(e)) => {
                note(Err(e));
                Variant::Delivery
            }
        };
        let mut cfg = Self::new(variant);
        let mut alpha_scale = None;
        let mut mode = Mode::Full;
        let mut beta = cfg.raeb.beta;
        let mut c = cfg.raeb.c;
        for (k, v) in doc.entries() {
            let r: Result<()> = (|| {
                match k {
                    "env.variant" => {}
                    "env.initial_electricity" => cfg.env.initial_electricity = parse_f64(k, v)?,
                    "env.initial_goods" => cfg.env.initial_goods = parse_f64(k, v)?,
                    "env.max_steps" => cfg.env.max_steps = parse_usize(k, v)?,
                    "env.electricity_cost_scale" => cfg.env.electricity_cost_scale = parse_f64(k, v)?,
                    "env.goal_reward_base" => cfg.env.goal_reward_base = parse_f64(k, v)?,
                    "raeb.beta" => beta = parse_f64(k, v)?,
                    "raeb.alpha_scale" => alpha_scale = Some(parse_f64_list(k, v)?),
                    "raeb.mode" => mode = v.parse()?,
                    "raeb.c" => c = parse_f64(k, v)?,
                    "agent.learning_rate" => cfg.agent.learning_rate = parse_f64(k, v)?,
                    "agent.gamma" => cfg.agent.gamma = parse_f64(k, v)?,
                    "agent.epsilon_start" => cfg.agent.epsilon_start = parse_f64(k, v)?,
                    "agent.epsilon_end" => cfg.agent.epsilon_end = parse_f64(k, v)?,
                    "agent.epsilon_fraction" => cfg.agent.epsilon_fraction = parse_f64(k, v)?,
                    "agent.position_bins" => cfg.agent.position_bins = parse_usize(k, v)?,
                    "agent.velocity_bins" => cfg.agent.velocity_bins = parse_usize(k, v)?,
                    "agent.resource_bins" => cfg.agent.resource_bins = parse_usize(k, v)?,
                    "agent.initial_q" => cfg.agent.initial_q = parse_f64(k, v)?,
                    "surprise.batch_size" => cfg.surprise.batch_size = parse_usize(k, v)?,
                    "surprise.update_interval" => cfg.surprise.update_interval = parse_usize(k, v)?,
                    "surprise.warmup_steps" => cfg.surprise.warmup_steps = parse_usize(k, v)?,
                    "surprise.hidden" => cfg.surprise.hidden = parse_usize(k, v)?,
                    "surprise.learning_rate" => cfg.surprise.learning_rate = parse_f64(k, v)?,
                    "surprise.buffer_capacity" => cfg.surprise.buffer_capacity = parse_usize(k, v)?,
                    "run.total_steps" => cfg.total_steps = parse_u64(k, v)?,
                    "run.eval_interval" => cfg.eval_interval = parse_u64(k, v)?,
                    "run.eval_episodes" => cfg.eval_episodes = parse_usize(k, v)?,
                    "run.seeds" => cfg.seeds = parse_seeds(k, v)?,
                    "run.out" => cfg.out = PathBuf::from(v),
                    "run.log_steps" => cfg.log_steps = parse_bool(k, v)?,
                    _ => {}
                }
                Ok(())
            })();
            note(r);
        }
        note(cfg.env.validate());
        note(cfg.agent.validate());
        note(cfg.surprise.validate());
        if cfg.env.validate().is_ok() {
            cfg.alpha_scale = alpha_scale.unwrap_or_else(|| default_alpha_scale(variant));
            match RaebConfig::with_alpha_scale(beta, &cfg.alpha_scale, cfg.env.initial_resources().as_slice(), mode) {
                Ok(mut r) => {
                    r.c = c;
                    note(r.validate());
                    cfg.raeb = r;
                }
                Err(e) => note(Err(e)),
            }
        }
        if cfg.total_steps == 0 {
            note(Err(Error::config("run.total_steps", "must be >= 1")));
        }
        if cfg.eval_interval == 0 {
            note(Err(Error::config("run.eval_interval", "must be >= 1")));
        }
        if bad.is_empty() {
            Ok(cfg)
        } else {
            bad.sort();
            bad.dedup();
            Err(Error::Config { keys: bad })
        }
    }

    pub fn parse(text: &str, origin: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc = KvDoc::parse(text, origin)?;
        for (k, v) in overrides {
            doc.set(k, v.clone());
        }
        Self::from_kv(&doc)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), overrides)
    }

    /// Every key with its resolved value; parsing the result reproduces `self`.
    pub fn to_kv(&self) -> KvDoc {
        let mut d = KvDoc::default();
        let f = |x: f64| x.to_string();
        d.set("env.variant", self.env.variant.to_string());
        d.set("env.initial_electricity", f(self.env.initial_electricity));
        d.set("env.initial_goods", f(self.env.initial_goods));
        d.set("env.max_steps", self.env.max_steps.to_string());
        d.set("env.electricity_cost_scale", f(self.env.electricity_cost_scale));
        d.set("env.goal_reward_base", f(self.env.goal_reward_base));
        d.set("raeb.beta", f(self.raeb.beta));
        d.set("raeb.alpha_scale", format_f64_list(&self.alpha_scale));
        d.set("raeb.mode", self.raeb.mode.to_string());
        d.set("raeb.c", f(self.raeb.c));
        let a = &self.agent;
        d.set("agent.learning_rate", f(a.learning_rate));
        d.set("agent.gamma", f(a.gamma));
        d.set("agent.epsilon_start", f(a.epsilon_start));
        d.set("agent.epsilon_end", f(a.epsilon_end));
        d.set("agent.epsilon_fraction", f(a.epsilon_fraction));
        d.set("agent.position_bins", a.position_bins.to_string());
        d.set("agent.velocity_bins", a.velocity_bins.to_string());
        d.set("agent.resource_bins", a.resource_bins.to_string());
        d.set("agent.initial_q", f(a.initial_q));
        let s = &self.surprise;
        d.set("surprise.batch_size", s.batch_size.to_string());
        d.set("surprise.update_interval", s.update_interval.to_string());
        d.set("surprise.warmup_steps", s.warmup_steps.to_string());
        d.set("surprise.hidden", s.hidden.to_string());
        d.set("surprise.learning_rate", f(s.learning_rate));
        d.set("surprise.buffer_capacity", s.buffer_capacity.to_string());
        d.set("run.total_steps", self.total_steps.to_string());
        d.set("run.eval_interval", self.eval_interval.to_string());
        d.set("run.eval_episodes", self.eval_episodes.to_string());
        d.set("run.seeds", format_seeds(&self.seeds));
        d.set("run.out", self.out.display().to_string());
        d.set("run.log_steps", self.log_steps.to_string());
        d
    }

    pub fn validate(&self) -> Result<()> {
        Self::from_kv(&self.to_kv()).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        for v in [Variant::Delivery, Variant::Electric, Variant::ElectricDelivery] {
            let cfg = RunConfig::new(v);
            assert_eq!(RunConfig::from_kv(&cfg.to_kv()).unwrap(), cfg);
        }
    }

    #[test]
    fn electric_delivery_alpha_order() {
        let cfg = RunConfig::parse("env.variant = electric-delivery", "t", &[]).unwrap();
        assert_eq!(cfg.raeb.alpha, vec![30.0, 2.5]);
    }

    #[test]
    fn reports_every_bad_key() {
        let err = RunConfig::parse("raeb.beta = -1\nagent.gamma = 2\nbogus.key = 1\nrun.seeds = 3..3", "t", &[]).unwrap_err();
        let Error::Config { keys } = err else { panic!("wrong error kind") };
        let names: Vec<&str> = keys.iter().map(|(k, _)| k.as_str()).collect();
        for k in ["raeb.beta", "agent.gamma", "bogus.key", "run.seeds"] {
            assert!(names.contains(&k), "{k} missing from {names:?}");
        }
    }

    #[test]
    fn overrides_win() {
        let cfg = RunConfig::parse("raeb.beta = 0.5", "t", &[("raeb.beta".into(), "0.1".into())]).unwrap();
        assert_eq!(cfg.raeb.beta, 0.1);
    }

    #[test]
    fn seed_forms() {
        assert_eq!(parse_seeds("k", "2..5").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("k", "7, 1").unwrap(), vec![7, 1]);
        assert!(parse_seeds("k", "").is_err());
    }
}
