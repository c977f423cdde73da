//! Finite episodic MDP with a single consumable resource.
//!
//! Arrays are row-major: `transition[h][s][a][s']`, `reward[h][s][a]`,
//! `resource_cost[s][a]`. Steps are 0-based (`h = 0..horizon`).
//!
//! File format (`key = value`, values whitespace separated):
//!
//! ```text
//! states = 10
//! actions = 4
//! horizon = 10
//! start_state = 0
//! initial_resource = 3
//! transition = <H*S*A*S probabilities>
//! reward = <H*S*A values in [0, 1]>
//! resource_cost = <S*A nonnegative values>
//! ```

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kv::{self, KvDoc};
use crate::rng::RandomStream;

#[derive(Debug, Clone, PartialEq)]
pub struct GridworldSpec {
    pub states: usize,
    pub actions: usize,
    pub horizon: usize,
    pub start_state: usize,
    pub initial_resource: f64,
    pub transition: Vec<f64>,
    pub reward: Vec<f64>,
    pub resource_cost: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridStep {
    pub next_state: usize,
    pub reward: f64,
    pub resource_after: f64,
}

pub const CHAIN_LEFT: usize = 0;
pub const CHAIN_RIGHT: usize = 1;
pub const CHAIN_STAY: usize = 2;
pub const CHAIN_CONSUME: usize = 3;

impl GridworldSpec {
    /// Deterministic chain: S = H = 10, actions left / right / stay / consume.
    /// Consuming costs one resource unit and pays 1 only at the far end, so the
    /// single optimal plan is nine steps right followed by one consume.
    pub fn default_chain() -> Self {
        Self::chain(10, 10, 3.0)
    }

    pub fn chain(states: usize, horizon: usize, initial_resource: f64) -> Self {
        let (s_n, a_n) = (states, 4);
        let mut transition = vec![0.0; horizon * s_n * a_n * s_n];
        let mut reward = vec![0.0; horizon * s_n * a_n];
        let mut resource_cost = vec![0.0; s_n * a_n];
        for h in 0..horizon {
            for s in 0..s_n {
                for a in 0..a_n {
                    let next = match a {
                        CHAIN_LEFT => s.saturating_sub(1),
                        CHAIN_RIGHT => (s + 1).min(s_n - 1),
                        _ => s,
                    };
                    transition[((h * s_n + s) * a_n + a) * s_n + next] = 1.0;
                }
                reward[(h * s_n + s) * a_n + CHAIN_CONSUME] = if s == s_n - 1 { 1.0 } else { 0.0 };
            }
        }
        for s in 0..s_n {
            resource_cost[s * a_n + CHAIN_CONSUME] = 1.0;
        }
        Self {
            states,
            actions: a_n,
            horizon,
            start_state: 0,
            initial_resource,
            transition,
            reward,
            resource_cost,
        }
    }

    /// Random MDP with Dirichlet(1)-like kernels and uniform rewards, used to
    /// cross-check learners on arbitrary structure.
    pub fn random(states: usize, actions: usize, horizon: usize, rng: &mut RandomStream) -> Self {
        let mut transition = Vec::with_capacity(horizon * states * actions * states);
        for _ in 0..horizon * states * actions {
            let w: Vec<f64> = (0..states).map(|_| -rng.gen::<f64>().max(1e-300).ln()).collect();
            let total: f64 = w.iter().sum();
            transition.extend(w.iter().map(|x| x / total));
        }
        let reward = (0..horizon * states * actions).map(|_| rng.gen::<f64>()).collect();
        let resource_cost = (0..states * actions).map(|_| f64::from(rng.gen_range(0u8..=1))).collect();
        Self {
            states,
            actions,
            horizon,
            start_state: 0,
            initial_resource: 3.0,
            transition,
            reward,
            resource_cost,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let (s_n, a_n, h_n) = (self.states, self.actions, self.horizon);
        if s_n == 0 || a_n == 0 || h_n == 0 {
            bad.push(("states/actions/horizon".to_string(), "must all be >= 1".to_string()));
            return Err(Error::Config { keys: bad });
        }
        if self.start_state >= s_n {
            bad.push(("start_state".into(), format!("{} >= states", self.start_state)));
        }
        if !(self.initial_resource >= 0.0) {
            bad.push(("initial_resource".into(), "must be >= 0".into()));
        }
        if self.transition.len() != h_n * s_n * a_n * s_n {
            bad.push(("transition".into(), format!("expected {} values, got {}", h_n * s_n * a_n * s_n, self.transition.len())));
        } else {
            for (row, dist) in self.transition.chunks(s_n).enumerate() {
                let total: f64 = dist.iter().sum();
                if dist.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
                    bad.push(("transition".into(), format!("row {row} is not a distribution (sum {total})")));
                    break;
                }
            }
        }
        if self.reward.len() != h_n * s_n * a_n {
            bad.push(("reward".into(), format!("expected {} values, got {}", h_n * s_n * a_n, self.reward.len())));
        } else if self.reward.iter().any(|r| !(0.0..=1.0).contains(r)) {
            bad.push(("reward".into(), "values must lie in [0, 1]".into()));
        }
        if self.resource_cost.len() != s_n * a_n {
            bad.push(("resource_cost".into(), format!("expected {} values, got {}", s_n * a_n, self.resource_cost.len())));
        } else if self.resource_cost.iter().any(|c| !(*c >= 0.0)) {
            bad.push(("resource_cost".into(), "values must be >= 0".into()));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: bad })
        }
    }

    pub fn next_distribution(&self, h: usize, s: usize, a: usize) -> &[f64] {
        let base = ((h * self.states + s) * self.actions + a) * self.states;
        &self.transition[base..base + self.states]
    }

    pub fn reward_at(&self, h: usize, s: usize, a: usize) -> f64 {
        self.reward[(h * self.states + s) * self.actions + a]
    }

    pub fn cost_at(&self, s: usize, a: usize) -> f64 {
        self.resource_cost[s * self.actions + a]
    }

    pub fn to_text(&self) -> String {
        let mut doc = KvDoc::default();
        doc.set("states", self.states.to_string());
        doc.set("actions", self.actions.to_string());
        doc.set("horizon", self.horizon.to_string());
        doc.set("start_state", self.start_state.to_string());
        doc.set("initial_resource", self.initial_resource.to_string());
        doc.set("transition", kv::format_f64_list(&self.transition));
        doc.set("reward", kv::format_f64_list(&self.reward));
        doc.set("resource_cost", kv::format_f64_list(&self.resource_cost));
        format!("# gridworld spec, row-major [h][s][a][s'] / [h][s][a] / [s][a]\n{}", doc.to_text())
    }

    pub fn from_text(text: &str, origin: &str) -> Result<Self> {
        let doc = KvDoc::parse(text, origin)?;
        let need = |key: &str| doc.get(key).ok_or_else(|| Error::config(key, "missing"));
        let spec = Self {
            states: kv::parse_usize("states", need("states")?)?,
            actions: kv::parse_usize("actions", need("actions")?)?,
            horizon: kv::parse_usize("horizon", need("horizon")?)?,
            start_state: doc.get("start_state").map_or(Ok(0), |v| kv::parse_usize("start_state", v))?,
            initial_resource: kv::parse_f64("initial_resource", need("initial_resource")?)?,
            transition: kv::parse_f64_list("transition", need("transition")?)?,
            reward: kv::parse_f64_list("reward", need("reward")?)?,
            resource_cost: kv::parse_f64_list("resource_cost", need("resource_cost")?)?,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Sample `s' ~ P_h(.|s, a)`; the reward is the table entry and the resource
/// is reduced by the pair's cost, floored at zero.
pub fn gridworld_step(
    spec: &GridworldSpec,
    h: usize,
    s: usize,
    a: usize,
    resource: f64,
    rng: &mut RandomStream,
) -> Result<GridStep> {
    if h >= spec.horizon || s >= spec.states || a >= spec.actions {
        return Err(Error::contract(format!(
            "(h, s, a) = ({h}, {s}, {a}) out of range for H={}, S={}, A={}",
            spec.horizon, spec.states, spec.actions
        )));
    }
    let dist = spec.next_distribution(h, s, a);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut next_state = spec.states - 1;
    for (i, p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            next_state = i;
            break;
        }
    }
    // guard against rounding pushing u past the last positive entry
    if dist[next_state] == 0.0 {
        next_state = dist.iter().rposition(|p| *p > 0.0).unwrap_or(next_state);
    }
    Ok(GridStep {
        next_state,
        reward: spec.reward_at(h, s, a),
        resource_after: (resource - spec.cost_at(s, a)).max(0.0),
    })
}
