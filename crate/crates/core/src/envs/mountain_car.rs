//! Mountain Car with electricity and/or goods.
//!
//! Observation is `[position, velocity]`. Resources are ordered
//! `[electricity]`, `[goods]` or `[electricity, goods]`. Actions are
//! `[force]` for the electric variant and `[force, unload]` otherwise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mdp::{R3LState, ResourceVector, Transition};
use crate::rng::RandomStream;

pub const DEFAULT_ELECTRICITY: f64 = 12.0;
pub const DEFAULT_GOODS: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Electric,
    Delivery,
    ElectricDelivery,
    Gridworld,
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "electric" => Ok(Variant::Electric),
            "delivery" => Ok(Variant::Delivery),
            "electricdelivery" => Ok(Variant::ElectricDelivery),
            "gridworld" => Ok(Variant::Gridworld),
            _ => Err(Error::config("env.variant", format!("unknown variant `{s}`"))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Electric => "electric",
            Variant::Delivery => "delivery",
            Variant::ElectricDelivery => "electric_delivery",
            Variant::Gridworld => "gridworld",
        })
    }
}

impl Variant {
    pub fn uses_electricity(self) -> bool {
        matches!(self, Variant::Electric | Variant::ElectricDelivery)
    }

    pub fn uses_goods(self) -> bool {
        matches!(self, Variant::Delivery | Variant::ElectricDelivery)
    }
}

/// Continuous Mountain Car constants.
#[derive(Debug, Clone, PartialEq)]
pub struct MountainCarPhysics {
    pub min_position: f64,
    pub max_position: f64,
    pub max_speed: f64,
    pub power: f64,
    pub gravity: f64,
    pub goal_position: f64,
    pub start_low: f64,
    pub start_high: f64,
}

impl Default for MountainCarPhysics {
    fn default() -> Self {
        Self {
            min_position: -1.2,
            max_position: 0.6,
            max_speed: 0.07,
            power: 0.0015,
            gravity: 0.0025,
            goal_position: 0.45,
            start_low: -0.6,
            start_high: -0.4,
        }
    }
}

impl MountainCarPhysics {
    /// One kinematic update; returns the new `(position, velocity)`.
    pub fn advance(&self, position: f64, velocity: f64, force: f64) -> (f64, f64) {
        let force = force.clamp(-1.0, 1.0);
        let v = (velocity + force * self.power - self.gravity * (3.0 * position).cos())
            .clamp(-self.max_speed, self.max_speed);
        let p = (position + v).clamp(self.min_position, self.max_position);
        // inelastic left wall
        let v = if p <= self.min_position && v < 0.0 { 0.0 } else { v };
        (p, v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig {
    pub variant: Variant,
    pub initial_electricity: f64,
    pub initial_goods: f64,
    pub max_steps: usize,
    pub electricity_cost_scale: f64,
    pub goal_reward_base: f64,
    pub physics: MountainCarPhysics,
}

impl EnvConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            initial_electricity: DEFAULT_ELECTRICITY,
            initial_goods: DEFAULT_GOODS,
            max_steps: 1000,
            electricity_cost_scale: 0.1,
            goal_reward_base: 100.0,
            physics: MountainCarPhysics::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.variant == Variant::Gridworld {
            bad.push(("env.variant".to_string(), "gridworld is driven by a gridworld spec file, not a Mountain Car config".to_string()));
        }
        if self.variant.uses_electricity() && !(self.initial_electricity > 0.0) {
            bad.push(("env.initial_electricity".into(), "must be > 0".into()));
        }
        if self.variant.uses_goods() && !(self.initial_goods > 0.0) {
            bad.push(("env.initial_goods".into(), "must be > 0".into()));
        }
        if self.max_steps == 0 {
            bad.push(("env.max_steps".into(), "must be >= 1".into()));
        }
        if !(self.electricity_cost_scale >= 0.0) {
            bad.push(("env.electricity_cost_scale".into(), "must be >= 0".into()));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: bad })
        }
    }

    /// Initial resources, I_max, in this variant's resource order.
    pub fn initial_resources(&self) -> ResourceVector {
        let v = match self.variant {
            Variant::Electric => vec![self.initial_electricity],
            Variant::Delivery => vec![self.initial_goods],
            Variant::ElectricDelivery => vec![self.initial_electricity, self.initial_goods],
            Variant::Gridworld => vec![1.0],
        };
        ResourceVector::new(v).expect("validated initial resources")
    }

    pub fn electricity_index(&self) -> Option<usize> {
        self.variant.uses_electricity().then_some(0)
    }

    pub fn goods_index(&self) -> Option<usize> {
        match self.variant {
            Variant::Delivery => Some(0),
            Variant::ElectricDelivery => Some(1),
            _ => None,
        }
    }

    pub fn action_dim(&self) -> usize {
        if self.variant.uses_goods() {
            2
        } else {
            1
        }
    }

    pub fn observation_dim(&self) -> usize {
        2
    }

    pub fn resource_dim(&self) -> usize {
        self.initial_resources().dim()
    }
}

/// Electricity drawn by a motor action: `0.1 * ||a||^2` at the default scale.
pub fn electricity_cost(motor_action: &[f64]) -> f64 {
    scaled_electricity_cost(0.1, motor_action)
}

fn scaled_electricity_cost(scale: f64, motor_action: &[f64]) -> f64 {
    scale * motor_action.iter().map(|x| x * x).sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct MountainCar {
    config: EnvConfig,
    state: Option<R3LState>,
    steps: usize,
    done: bool,
}

impl MountainCar {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            state: None,
            steps: 0,
            done: true,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn state(&self) -> Option<&R3LState> {
        self.state.as_ref()
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Position uniform in the start interval, zero velocity, full resources.
    pub fn reset(&mut self, rng: &mut RandomStream) -> R3LState {
        let p = &self.config.physics;
        let position = rng.gen_range(p.start_low..=p.start_high);
        self.reset_to(position, 0.0)
    }

    /// Reset to an explicit physics state (scripted rollouts, tests).
    pub fn reset_to(&mut self, position: f64, velocity: f64) -> R3LState {
        let s = R3LState::new(vec![position, velocity], self.config.initial_resources());
        self.state = Some(s.clone());
        self.steps = 0;
        self.done = false;
        s
    }

    /// Clip the unload component into `[0, goods remaining]`; other components pass through.
    pub fn project_action(&self, state: &R3LState, raw_action: &[f64]) -> Vec<f64> {
        let mut a = raw_action.to_vec();
        if let Some(gi) = self.config.goods_index() {
            a[1] = a[1].clamp(0.0, state.resources.get(gi));
        }
        a
    }

    pub fn step(&mut self, action: &[f64]) -> Result<Transition> {
        if self.done {
            return Err(Error::contract("step called on a finished episode; call reset first"));
        }
        if action.len() != self.config.action_dim() {
            return Err(Error::contract(format!(
                "action has {} components, {} expects {}",
                action.len(),
                self.config.variant,
                self.config.action_dim()
            )));
        }
        let state = self.state.clone().expect("state present while episode is live");
        let cfg = &self.config;
        let (position, velocity) = (state.observation[0], state.observation[1]);
        let force = action[0];
        let at_hilltop = position >= cfg.physics.goal_position;

        let mut resources = state.resources.clone();
        let mut reward = 0.0;
        let mut terminal = false;

        let mut unloaded = 0.0;
        if let Some(gi) = cfg.goods_index() {
            let goods = resources.get(gi);
            unloaded = action[1];
            if !(0.0..=goods).contains(&unloaded) {
                return Err(Error::contract(format!(
                    "unload {unloaded} outside [0, {goods}]; project the action first"
                )));
            }
            resources.set(gi, goods - unloaded);
        }

        let (next_position, next_velocity) = cfg.physics.advance(position, velocity, force);

        let mut electricity_left = None;
        if let Some(ei) = cfg.electricity_index() {
            let e = resources.get(ei) - scaled_electricity_cost(cfg.electricity_cost_scale, &action[..1]);
            resources.set(ei, e);
            electricity_left = Some(e.max(0.0));
            if e <= 0.0 {
                terminal = true;
            }
        }

        match cfg.variant {
            Variant::Electric => {
                if next_position >= cfg.physics.goal_position {
                    let u = electricity_left.unwrap_or(0.0);
                    reward = cfg.goal_reward_base + cfg.goal_reward_base * u / cfg.initial_electricity;
                    terminal = true;
                }
            }
            Variant::Delivery => {
                if at_hilltop && unloaded > 0.0 {
                    reward = cfg.goal_reward_base * unloaded;
                }
                let goods_left = resources.get(0);
                if next_position >= cfg.physics.goal_position && goods_left <= 0.0 {
                    terminal = true;
                }
            }
            Variant::ElectricDelivery => {
                if at_hilltop && unloaded > 0.0 {
                    let u = electricity_left.unwrap_or(0.0);
                    reward = cfg.goal_reward_base + cfg.goal_reward_base * u / cfg.initial_electricity;
                    terminal = true;
                }
                if next_position >= cfg.physics.goal_position && resources.get(1) <= 0.0 {
                    terminal = true;
                }
            }
            Variant::Gridworld => unreachable!("rejected by validate"),
        }

        self.steps += 1;
        let truncated = !terminal && self.steps >= cfg.max_steps;
        let next_state = R3LState::new(vec![next_position, next_velocity], resources);
        self.done = terminal || truncated;
        self.state = Some(next_state.clone());
        Ok(Transition {
            state,
            action: action.to_vec(),
            reward,
            next_state,
            terminal,
            truncated,
        })
    }
}
