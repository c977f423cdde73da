//! Augmented R3L states, transitions and episode bookkeeping.

use crate::error::{Error, Result};

/// Remaining quantity of each resource type. Components are never negative.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceVector(Vec<f64>);

impl ResourceVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::contract("resource vector must have at least one component"));
        }
        if let Some(v) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::contract(format!("resource component {v} is not a finite nonnegative value")));
        }
        Ok(Self(values))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }

    /// Overwrite component `i`, flooring at zero.
    pub(crate) fn set(&mut self, i: usize, value: f64) {
        self.0[i] = value.max(0.0);
    }

    pub fn any_exhausted(&self) -> bool {
        self.0.iter().any(|&v| v <= 0.0)
    }
}

/// State augmented with resources: serialized as `[observation, resources]`.
#[derive(Debug, Clone, PartialEq)]
pub struct R3LState {
    pub observation: Vec<f64>,
    pub resources: ResourceVector,
}

impl R3LState {
    pub fn new(observation: Vec<f64>, resources: ResourceVector) -> Self {
        Self {
            observation,
            resources,
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.observation.clone();
        v.extend_from_slice(self.resources.as_slice());
        v
    }

    /// Inverse of [`R3LState::to_vec`] given the observation width.
    pub fn from_slice(flat: &[f64], observation_dim: usize) -> Result<Self> {
        if observation_dim >= flat.len() {
            return Err(Error::contract(format!(
                "cannot split {} values at {observation_dim}: no resource slots left",
                flat.len()
            )));
        }
        let (obs, res) = flat.split_at(observation_dim);
        Ok(Self::new(obs.to_vec(), ResourceVector::new(res.to_vec())?))
    }
}

/// The resource-aware map I(s): projection onto the resource slots.
pub fn resource_of(state: &R3LState) -> ResourceVector {
    state.resources.clone()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: R3LState,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: R3LState,
    pub terminal: bool,
    pub truncated: bool,
}

impl Transition {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// One episode: transitions plus the per-step intrinsic bonus and coefficient
/// that were used to shape them.
#[derive(Debug, Clone, Default)]
pub struct EpisodeLog {
    pub seed: u64,
    transitions: Vec<Transition>,
    bonuses: Vec<f64>,
    coefficients: Vec<f64>,
}

impl EpisodeLog {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            ..Default::default()
        }
    }

    pub fn push(&mut self, transition: Transition, bonus: f64, coefficient: f64) {
        self.transitions.push(transition);
        self.bonuses.push(bonus);
        self.coefficients.push(coefficient);
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn bonuses(&self) -> &[f64] {
        &self.bonuses
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    /// Resource trace `[I_0(s_0), I_0(s_1), ..., I_0(s_T)]` for component `index`.
    pub fn resource_trace(&self, index: usize) -> Vec<f64> {
        let mut trace = Vec::with_capacity(self.len() + 1);
        if let Some(first) = self.transitions.first() {
            trace.push(first.state.resources.get(index));
        }
        trace.extend(self.transitions.iter().map(|t| t.next_state.resources.get(index)));
        trace
    }

    /// Number of steps until any resource first hits zero, or the episode
    /// length if that never happens.
    pub fn steps_to_exhaustion(&self) -> usize {
        match self.transitions.first() {
            Some(t) if t.state.resources.any_exhausted() => 0,
            _ => self
                .transitions
                .iter()
                .position(|t| t.next_state.resources.any_exhausted())
                .map_or(self.len(), |i| i + 1),
        }
    }
}

/// True iff resource `index` never increases between consecutive states.
pub fn check_non_replenishable(log: &EpisodeLog, index: usize) -> Result<bool> {
    let Some(first) = log.transitions().first() else {
        return Ok(true);
    };
    let dim = first.state.resources.dim();
    if index >= dim {
        return Err(Error::contract(format!("resource index {index} out of range for d = {dim}")));
    }
    let mut prev = first.state.resources.get(index);
    for t in log.transitions() {
        let before = t.state.resources.get(index);
        let after = t.next_state.resources.get(index);
        if before > prev || after > before {
            return Ok(false);
        }
        prev = after;
    }
    Ok(true)
}
