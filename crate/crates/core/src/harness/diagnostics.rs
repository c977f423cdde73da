//! Per-episode metrics and the challenge diagnostics: height reached before
//! and after exhaustion, steps-to-exhaustion and unload-state scatters.

use crate::envs::Variant;
use crate::error::{Error, Result};
use crate::mdp::{EpisodeLog, R3LState};

/// Track height at `position`, as drawn by the classic renderer.
pub fn height(position: f64) -> f64 {
    0.45 * (3.0 * position).sin() + 0.55
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Episode,
    Eval,
}

impl RowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RowKind::Episode => "episode",
            RowKind::Eval => "eval",
        }
    }
}

/// One line of `metrics.csv`. Eval rows fill only `step`, `episode`,
/// `extrinsic_return` (the mean) and `eval_std`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub kind: RowKind,
    /// Environment steps taken when the row was written.
    pub step: u64,
    /// Training episodes finished, including this one.
    pub episode: u64,
    pub extrinsic_return: f64,
    pub shaped_return: Option<f64>,
    /// Bonus-weighted mean coefficient, so that
    /// `(shaped - extrinsic) / length == beta * g_mean * bonus_mean` in Full mode.
    pub g_mean: Option<f64>,
    pub bonus_mean: Option<f64>,
    pub bonus_raw_mean: Option<f64>,
    pub length: Option<usize>,
    pub resource_at_end: Vec<f64>,
    pub steps_to_exhaustion: Option<usize>,
    pub max_height_any: Option<f64>,
    pub max_height_pre_exhaustion: Option<f64>,
    pub eval_std: Option<f64>,
}

pub const METRICS_HEADER: [&str; 14] = [
    "kind",
    "step",
    "episode",
    "extrinsic_return",
    "shaped_return",
    "g_mean",
    "bonus_mean",
    "bonus_raw_mean",
    "length",
    "resource_at_end",
    "steps_to_exhaustion",
    "max_height_any",
    "max_height_pre_exhaustion",
    "eval_std",
];

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(T::to_string).unwrap_or_default()
}

impl MetricsRow {
    pub fn record(&self) -> Vec<String> {
        vec![
            self.kind.as_str().to_string(),
            self.step.to_string(),
            self.episode.to_string(),
            self.extrinsic_return.to_string(),
            opt(&self.shaped_return),
            opt(&self.g_mean),
            opt(&self.bonus_mean),
            opt(&self.bonus_raw_mean),
            opt(&self.length),
            self.resource_at_end.iter().map(f64::to_string).collect::<Vec<_>>().join(" "),
            opt(&self.steps_to_exhaustion),
            opt(&self.max_height_any),
            opt(&self.max_height_pre_exhaustion),
            opt(&self.eval_std),
        ]
    }

    pub fn eval(step: u64, episode: u64, mean: f64, std: f64) -> Self {
        Self {
            kind: RowKind::Eval,
            step,
            episode,
            extrinsic_return: mean,
            shaped_return: None,
            g_mean: None,
            bonus_mean: None,
            bonus_raw_mean: None,
            length: None,
            resource_at_end: Vec::new(),
            steps_to_exhaustion: None,
            max_height_any: None,
            max_height_pre_exhaustion: None,
            eval_std: Some(std),
        }
    }

    /// Summarize a finished training episode. `shaped` holds the per-step
    /// shaped rewards and `raw` the unnormalized bonuses.
    pub fn episode(step: u64, episode: u64, log: &EpisodeLog, shaped: &[f64], raw: &[f64]) -> Self {
        let n = log.len();
        let extrinsic: f64 = log.transitions().iter().map(|t| t.reward).sum();
        let bonus_sum: f64 = log.bonuses().iter().sum();
        let g_mean = if n == 0 {
            1.0
        } else if bonus_sum > 0.0 {
            log.bonuses().iter().zip(log.coefficients()).map(|(b, g)| b * g).sum::<f64>() / bonus_sum
        } else {
            log.coefficients().iter().sum::<f64>() / n as f64
        };
        let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
        let (any, pre) = max_heights(log);
        Self {
            kind: RowKind::Episode,
            step,
            episode,
            extrinsic_return: extrinsic,
            shaped_return: Some(shaped.iter().sum()),
            g_mean: Some(g_mean),
            bonus_mean: Some(mean(log.bonuses())),
            bonus_raw_mean: Some(mean(raw)),
            length: Some(n),
            resource_at_end: log
                .transitions()
                .last()
                .map(|t| t.next_state.resources.as_slice().to_vec())
                .unwrap_or_default(),
            steps_to_exhaustion: Some(log.steps_to_exhaustion()),
            max_height_any: Some(any),
            max_height_pre_exhaustion: Some(pre),
            eval_std: None,
        }
    }
}

fn states(log: &EpisodeLog) -> impl Iterator<Item = &R3LState> {
    log.transitions()
        .first()
        .map(|t| &t.state)
        .into_iter()
        .chain(log.transitions().iter().map(|t| &t.next_state))
}

/// `(max height over the episode, max height over states up to and including
/// the first exhausted one)`. Both are NaN for an empty log.
pub fn max_heights(log: &EpisodeLog) -> (f64, f64) {
    let k = log.steps_to_exhaustion();
    let mut any = f64::NAN;
    let mut pre = f64::NAN;
    for (i, s) in states(log).enumerate() {
        let h = height(s.observation[0]);
        any = any.max(h);
        if i <= k {
            pre = pre.max(h);
        }
    }
    (any, pre)
}

pub fn exhaustion_stats(logs: &[EpisodeLog]) -> Result<f64> {
    if logs.is_empty() {
        return Err(Error::contract("exhaustion_stats needs at least one episode"));
    }
    Ok(logs.iter().map(|l| l.steps_to_exhaustion() as f64).sum::<f64>() / logs.len() as f64)
}

/// `(position, velocity)` of every state at which goods decreased.
pub fn scatter_unloads(logs: &[EpisodeLog], variant: Variant) -> Vec<(f64, f64)> {
    let goods = match variant {
        Variant::Delivery => 0,
        Variant::ElectricDelivery => 1,
        other => {
            log::warn!("unload scatter requested for {other} logs; no goods to track");
            return Vec::new();
        }
    };
    logs.iter()
        .flat_map(|l| l.transitions())
        .filter(|t| t.next_state.resources.get(goods) < t.state.resources.get(goods))
        .map(|t| (t.state.observation[0], t.state.observation[1]))
        .collect()
}
