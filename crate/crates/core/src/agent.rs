//! Tabular epsilon-greedy Q-learning over a discretized Mountain Car state.
//!
//! The state grid covers position, velocity and every resource slot; the
//! action grid is the product of a few motor forces and, when the task has
//! goods, an unload choice of 0 or 1 unit.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::envs::{EnvConfig, MountainCar};
use crate::error::{Error, Result};
use crate::mdp::R3LState;
use crate::rng::RandomStream;

pub const FORCES: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];
pub const UNLOADS: [f64; 2] = [0.0, 1.0];

#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of the training budget over which epsilon decays linearly.
    pub epsilon_fraction: f64,
    pub position_bins: usize,
    pub velocity_bins: usize,
    pub resource_bins: usize,
    pub initial_q: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            gamma: 0.99,
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_fraction: 0.2,
            position_bins: 32,
            velocity_bins: 32,
            resource_bins: 8,
            initial_q: 0.0,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad: Vec<(String, String)> = Vec::new();
        let mut check = |ok: bool, key: &str, why: &str| {
            if !ok {
                bad.push((key.to_string(), why.to_string()));
            }
        };
        check(self.learning_rate > 0.0 && self.learning_rate <= 1.0, "agent.learning_rate", "must be in (0, 1]");
        check((0.0..=1.0).contains(&self.gamma), "agent.gamma", "must be in [0, 1]");
        check((0.0..=1.0).contains(&self.epsilon_start), "agent.epsilon_start", "must be in [0, 1]");
        check((0.0..=1.0).contains(&self.epsilon_end), "agent.epsilon_end", "must be in [0, 1]");
        check((0.0..=1.0).contains(&self.epsilon_fraction), "agent.epsilon_fraction", "must be in [0, 1]");
        check(self.position_bins > 0, "agent.position_bins", "must be >= 1");
        check(self.velocity_bins > 0, "agent.velocity_bins", "must be >= 1");
        check(self.resource_bins > 0, "agent.resource_bins", "must be >= 1");
        check(self.initial_q.is_finite(), "agent.initial_q", "must be finite");
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: bad })
        }
    }

    /// Linear decay from `epsilon_start` to `epsilon_end` over the first
    /// `epsilon_fraction * total_steps` steps, constant afterwards.
    pub fn epsilon_at(&self, step: u64, total_steps: u64) -> f64 {
        let horizon = self.epsilon_fraction * total_steps as f64;
        if horizon <= 0.0 {
            return self.epsilon_end;
        }
        let frac = (step as f64 / horizon).min(1.0);
        self.epsilon_start + frac * (self.epsilon_end - self.epsilon_start)
    }
}

/// Uniform grid over a box; values outside the box fall into the edge cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretizer {
    low: Vec<f64>,
    high: Vec<f64>,
    bins: Vec<usize>,
}

impl Discretizer {
    pub fn new(low: Vec<f64>, high: Vec<f64>, bins: Vec<usize>) -> Self {
        assert!(low.len() == high.len() && low.len() == bins.len());
        Self { low, high, bins }
    }

    pub fn for_env(env: &EnvConfig, cfg: &AgentConfig) -> Self {
        let ph = &env.physics;
        let mut low = vec![ph.min_position, -ph.max_speed];
        let mut high = vec![ph.max_position, ph.max_speed];
        let mut bins = vec![cfg.position_bins, cfg.velocity_bins];
        for cap in env.initial_resources().as_slice() {
            low.push(0.0);
            high.push(*cap);
            bins.push(cfg.resource_bins);
        }
        Self::new(low, high, bins)
    }

    pub fn cells(&self) -> usize {
        self.bins.iter().product()
    }

    pub fn bin(&self, dim: usize, x: f64) -> usize {
        let n = self.bins[dim];
        let span = self.high[dim] - self.low[dim];
        if span <= 0.0 {
            return 0;
        }
        let b = ((x - self.low[dim]) / span * n as f64).floor();
        if b.is_nan() || b < 0.0 {
            0
        } else {
            (b as usize).min(n - 1)
        }
    }

    pub fn cell(&self, flat_state: &[f64]) -> usize {
        flat_state
            .iter()
            .enumerate()
            .fold(0, |acc, (d, x)| acc * self.bins[d] + self.bin(d, *x))
    }
}

pub fn action_grid(env: &EnvConfig) -> Vec<Vec<f64>> {
    if env.variant.uses_goods() {
        FORCES
            .iter()
            .flat_map(|f| UNLOADS.iter().map(move |u| vec![*f, *u]))
            .collect()
    } else {
        FORCES.iter().map(|f| vec![*f]).collect()
    }
}

const QTABLE_MAGIC: &[u8; 8] = b"R3LQTAB1";

/// Dense action-value table, `cells x actions`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    cells: usize,
    actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(cells: usize, actions: usize, init: f64) -> Self {
        Self {
            cells,
            actions,
            values: vec![init; cells * actions],
        }
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn actions(&self) -> usize {
        self.actions
    }

    pub fn row(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.actions..(cell + 1) * self.actions]
    }

    pub fn get(&self, cell: usize, action: usize) -> f64 {
        self.values[cell * self.actions + action]
    }

    pub fn set(&mut self, cell: usize, action: usize, value: f64) {
        self.values[cell * self.actions + action] = value;
    }

    /// Greedy action; ties go to the lowest index.
    pub fn greedy(&self, cell: usize) -> usize {
        let row = self.row(cell);
        let mut best = 0;
        for (a, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn max(&self, cell: usize) -> f64 {
        self.row(cell)[self.greedy(cell)]
    }

    /// Binary layout: 8-byte magic, `cells` and `actions` as u64 LE, then
    /// `cells * actions` f64 LE values.
    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(QTABLE_MAGIC)?;
        w.write_all(&(self.cells as u64).to_le_bytes())?;
        w.write_all(&(self.actions as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read, origin: &str) -> Result<Self> {
        let bad = |m: &str| Error::Parse {
            origin: origin.to_string(),
            line: 0,
            message: m.to_string(),
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != QTABLE_MAGIC {
            return Err(bad("not a Q-table checkpoint"));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
        let cells = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).map_err(|_| bad("truncated header"))?;
        let actions = u64::from_le_bytes(word) as usize;
        let n = cells.checked_mul(actions).ok_or_else(|| bad("table too large"))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes).map_err(|_| bad("unreadable body"))?;
        if bytes.len() != n * 8 {
            return Err(bad(&format!("expected {} values, found {} bytes", n, bytes.len())));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        Ok(Self { cells, actions, values })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
        self.write_to(&mut f).and_then(|_| f.flush()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut f, &path.display().to_string())
    }
}

/// Something that picks an action index for a state and learns from
/// shaped transitions.
pub trait Agent {
    fn actions(&self) -> &[Vec<f64>];
    fn act(&self, state: &R3LState, epsilon: f64, rng: &mut RandomStream) -> usize;
    /// Apply one update and return the temporal-difference error.
    fn learn(&mut self, state: &R3LState, action: usize, reward: f64, next: &R3LState, terminal: bool) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
pub struct QAgent {
    pub config: AgentConfig,
    pub discretizer: Discretizer,
    pub actions: Vec<Vec<f64>>,
    pub table: QTable,
}

impl QAgent {
    pub fn new(env: &EnvConfig, config: AgentConfig) -> Self {
        let discretizer = Discretizer::for_env(env, &config);
        let actions = action_grid(env);
        let table = QTable::new(discretizer.cells(), actions.len(), config.initial_q);
        Self {
            config,
            discretizer,
            actions,
            table,
        }
    }

    pub fn with_table(env: &EnvConfig, config: AgentConfig, table: QTable) -> Result<Self> {
        let mut agent = Self::new(env, config);
        if table.cells() != agent.table.cells() || table.actions() != agent.table.actions() {
            return Err(Error::Contract(format!(
                "checkpoint is {}x{}, configuration needs {}x{}",
                table.cells(),
                table.actions(),
                agent.table.cells(),
                agent.table.actions()
            )));
        }
        agent.table = table;
        Ok(agent)
    }

    pub fn cell(&self, state: &R3LState) -> usize {
        self.discretizer.cell(&state.to_vec())
    }

    pub fn greedy(&self, state: &R3LState) -> usize {
        self.table.greedy(self.cell(state))
    }
}

impl Agent for QAgent {
    fn actions(&self) -> &[Vec<f64>] {
        &self.actions
    }

    fn act(&self, state: &R3LState, epsilon: f64, rng: &mut RandomStream) -> usize {
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            rng.gen_range(0..self.actions.len())
        } else {
            self.greedy(state)
        }
    }

    fn learn(&mut self, state: &R3LState, action: usize, reward: f64, next: &R3LState, terminal: bool) -> f64 {
        let c = self.cell(state);
        let bootstrap = if terminal {
            0.0
        } else {
            self.config.gamma * self.table.max(self.cell(next))
        };
        let q = self.table.get(c, action);
        let td = reward + bootstrap - q;
        self.table.set(c, action, q + self.config.learning_rate * td);
        td
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub returns: Vec<f64>,
    pub lengths: Vec<usize>,
}

impl Evaluation {
    pub fn mean(&self) -> f64 {
        if self.returns.is_empty() {
            return 0.0;
        }
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }

    pub fn std(&self) -> f64 {
        let n = self.returns.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.returns.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n as f64).sqrt()
    }
}

/// Greedy rollouts of `agent` on fresh environments. Episode `i` starts
/// from `rng.substream_indexed("episode", i)`.
pub fn evaluate<A: Agent + ?Sized>(agent: &A, env: &EnvConfig, episodes: usize, rng: &RandomStream) -> Result<Evaluation> {
    let mut car = MountainCar::new(env.clone())?;
    let mut out = Evaluation {
        returns: Vec::with_capacity(episodes),
        lengths: Vec::with_capacity(episodes),
    };
    let mut unused = rng.substream("greedy");
    for i in 0..episodes {
        let mut ep_rng = rng.substream_indexed("episode", i as u64);
        let mut state = car.reset(&mut ep_rng);
        let mut total = 0.0;
        let mut len = 0;
        loop {
            let a = agent.act(&state, 0.0, &mut unused);
            let action = car.project_action(&state, &agent.actions()[a]);
            let t = car.step(&action)?;
            total += t.reward;
            len += 1;
            if t.done() {
                break;
            }
            state = t.next_state;
        }
        out.returns.push(total);
        out.lengths.push(len);
    }
    Ok(out)
}
