//! Episodic Q-learning with a weighted UCB-Hoeffding bonus.
//!
//! Update for the pair `(s, a)` visited at step `h`, with `t = N_h(s, a)`
//! after incrementing:
//!
//! ```text
//! Q_h(s,a) <- (1 - lr_t) Q_h(s,a) + lr_t [ r + V_{h+1}(s') + w(s,a) b_t ]
//! lr_t = (H + 1) / (H + t),   b_t = c sqrt(H^3 iota / t),   V_h(s) = min(H, max_a Q_h(s,a))
//! ```
//!
//! The weight `w(s, a)` lies in `[1, d]`. Its resource-aware instance is
//! `clamp(1 + (d - 1) g(I), 1, d)`; `w = 1` is plain UCB-Hoeffding.

use std::io::Write;
use std::path::Path;

use crate::envs::{gridworld_step, GridworldSpec};
use crate::error::{Error, Result};
use crate::raeb::{coefficient, Mode, RaebConfig};
use crate::rng::seeded_rng;

pub fn learning_rate(t: u64, horizon: usize) -> Result<f64> {
    if t < 1 {
        return Err(Error::contract("learning rate needs visit count t >= 1"));
    }
    let h = horizon as f64;
    Ok((h + 1.0) / (h + t as f64))
}

pub fn ucb_bonus(t: u64, horizon: usize, iota: f64, c: f64) -> f64 {
    let h = horizon as f64;
    c * (h * h * h * iota / t as f64).sqrt()
}

/// `iota = ln(S A T / p)` with `T = K H`.
pub fn iota(states: usize, actions: usize, total_steps: u64, p: f64) -> f64 {
    ((states * actions) as f64 * total_steps as f64 / p).ln()
}

/// Bonus weight `clamp(1 + (d - 1) g(I), 1, d)` for one resource.
pub fn resource_weight(resource: f64, i_max: f64, alpha: f64, d: f64) -> f64 {
    let cfg = RaebConfig {
        beta: 1.0,
        alpha: vec![alpha],
        i_max: vec![i_max],
        mode: Mode::Full,
        c: 0.0,
    };
    let g = coefficient(&[resource.max(0.0)], &cfg).unwrap_or(1.0);
    (1.0 + (d - 1.0) * g).clamp(1.0, d.max(1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TabularLearner {
    states: usize,
    actions: usize,
    horizon: usize,
    c: f64,
    iota: f64,
    q: Vec<f64>,
    v: Vec<f64>,
    visits: Vec<u64>,
}

impl TabularLearner {
    /// Q initialized optimistically to `H`, `V_{H+1} = 0`.
    pub fn new(states: usize, actions: usize, horizon: usize, c: f64, iota: f64) -> Self {
        let h = horizon as f64;
        let mut v = vec![h; (horizon + 1) * states];
        v[horizon * states..].iter_mut().for_each(|x| *x = 0.0);
        Self {
            states,
            actions,
            horizon,
            c,
            iota,
            q: vec![h; horizon * states * actions],
            v,
            visits: vec![0; horizon * states * actions],
        }
    }

    fn idx(&self, h: usize, s: usize, a: usize) -> usize {
        (h * self.states + s) * self.actions + a
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[self.idx(h, s, a)]
    }

    /// `V_h(s)`; `h == horizon` is the terminal layer.
    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.states + s]
    }

    pub fn visits(&self, h: usize, s: usize, a: usize) -> u64 {
        self.visits[self.idx(h, s, a)]
    }

    pub fn q_values(&self) -> &[f64] {
        &self.q
    }

    pub fn iota(&self) -> f64 {
        self.iota
    }

    /// Greedy action, lowest index on ties.
    pub fn greedy(&self, h: usize, s: usize) -> usize {
        let row = &self.q[self.idx(h, s, 0)..self.idx(h, s, 0) + self.actions];
        let mut best = 0;
        for (a, q) in row.iter().enumerate().skip(1) {
            if *q > row[best] {
                best = a;
            }
        }
        best
    }

    pub fn update(&mut self, h: usize, s: usize, a: usize, reward: f64, next: usize, weight: f64) -> Result<()> {
        if h >= self.horizon || s >= self.states || a >= self.actions || next >= self.states {
            return Err(Error::contract(format!(
                "update ({h}, {s}, {a}) -> {next} out of range for H={}, S={}, A={}",
                self.horizon, self.states, self.actions
            )));
        }
        let i = self.idx(h, s, a);
        self.visits[i] += 1;
        let t = self.visits[i];
        let lr = learning_rate(t, self.horizon)?;
        let target = reward + self.v(h + 1, next) + weight * ucb_bonus(t, self.horizon, self.iota, self.c);
        self.q[i] = (1.0 - lr) * self.q[i] + lr * target;
        let best = self.q[self.idx(h, s, 0)..self.idx(h, s, 0) + self.actions]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        self.v[h * self.states + s] = best.min(self.horizon as f64);
        Ok(())
    }
}

/// Optimal `Q*` (`[H][S][A]`) and `V*` (`[H+1][S]`) by backward induction.
pub fn value_iteration(spec: &GridworldSpec) -> (Vec<f64>, Vec<f64>) {
    let (s_n, a_n, h_n) = (spec.states, spec.actions, spec.horizon);
    let mut q = vec![0.0; h_n * s_n * a_n];
    let mut v = vec![0.0; (h_n + 1) * s_n];
    for h in (0..h_n).rev() {
        for s in 0..s_n {
            let mut best = f64::NEG_INFINITY;
            for a in 0..a_n {
                let next = &v[(h + 1) * s_n..(h + 2) * s_n];
                let ev: f64 = spec.next_distribution(h, s, a).iter().zip(next).map(|(p, x)| p * x).sum();
                let val = spec.reward_at(h, s, a) + ev;
                q[(h * s_n + s) * a_n + a] = val;
                best = best.max(val);
            }
            v[h * s_n + s] = best;
        }
    }
    (q, v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnerConfig {
    /// Bonus constant `c`.
    pub c: f64,
    /// Failure probability inside `iota`.
    pub p: f64,
    /// Upper bound `d` of the bonus weight; `1` disables weighting.
    pub weight_cap: f64,
    /// Alpha of the resource coefficient as a multiple of the initial resource.
    pub alpha_scale: f64,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            c: 2.0,
            p: 0.05,
            weight_cap: 1.0,
            alpha_scale: 0.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegretRecord {
    /// 1-based episode index.
    pub episode: usize,
    pub v_star: f64,
    pub realized_return: f64,
    pub regret: f64,
    pub cumulative_regret: f64,
}

/// Episode-by-episode driver so callers can inspect the learner in between.
pub struct RegretRun<'a> {
    spec: &'a GridworldSpec,
    config: LearnerConfig,
    learner: TabularLearner,
    v_star_start: f64,
    rng: crate::rng::RandomStream,
    episode: usize,
    cumulative: f64,
}

impl<'a> RegretRun<'a> {
    pub fn new(spec: &'a GridworldSpec, config: LearnerConfig, episodes: usize, seed: u64) -> Result<Self> {
        spec.validate()?;
        if !(config.c > 0.0) || !(config.p > 0.0 && config.p < 1.0) || !(config.weight_cap >= 1.0) {
            return Err(Error::config(
                "regret",
                "need c > 0, p in (0, 1) and weight cap d >= 1",
            ));
        }
        let total_steps = (episodes.max(1) * spec.horizon) as u64;
        let learner = TabularLearner::new(
            spec.states,
            spec.actions,
            spec.horizon,
            config.c,
            iota(spec.states, spec.actions, total_steps, config.p),
        );
        let (_, v_star) = value_iteration(spec);
        Ok(Self {
            spec,
            v_star_start: v_star[spec.start_state],
            config,
            learner,
            rng: seeded_rng(seed).substream("gridworld"),
            episode: 0,
            cumulative: 0.0,
        })
    }

    pub fn learner(&self) -> &TabularLearner {
        &self.learner
    }

    pub fn run_episode(&mut self) -> Result<RegretRecord> {
        let spec = self.spec;
        let i_max = spec.initial_resource;
        let alpha = self.config.alpha_scale * i_max.max(f64::MIN_POSITIVE);
        let mut s = spec.start_state;
        let mut resource = i_max;
        let mut ret = 0.0;
        for h in 0..spec.horizon {
            let a = self.learner.greedy(h, s);
            let weight = if self.config.weight_cap > 1.0 {
                resource_weight(resource, i_max.max(f64::MIN_POSITIVE), alpha, self.config.weight_cap)
            } else {
                1.0
            };
            let step = gridworld_step(spec, h, s, a, resource, &mut self.rng)?;
            self.learner.update(h, s, a, step.reward, step.next_state, weight)?;
            ret += step.reward;
            resource = step.resource_after;
            s = step.next_state;
        }
        self.episode += 1;
        let regret = self.v_star_start - ret;
        self.cumulative += regret;
        Ok(RegretRecord {
            episode: self.episode,
            v_star: self.v_star_start,
            realized_return: ret,
            regret,
            cumulative_regret: self.cumulative,
        })
    }
}

pub fn run_regret_experiment(
    spec: &GridworldSpec,
    config: &LearnerConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<RegretRecord>> {
    if episodes == 0 {
        return Ok(Vec::new());
    }
    let mut run = RegretRun::new(spec, config.clone(), episodes, seed)?;
    (0..episodes).map(|_| run.run_episode()).collect()
}

/// Least-squares slope of `ln(cumulative regret)` against `ln(episode)` over
/// `n_points` log-spaced episodes in `[from, to]`.
pub fn loglog_regret_exponent(records: &[RegretRecord], from: usize, to: usize, n_points: usize) -> Option<f64> {
    if from < 1 || to > records.len() || from >= to || n_points < 2 {
        return None;
    }
    let (lf, lt) = ((from as f64).ln(), (to as f64).ln());
    let mut pts = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let k = (lf + (lt - lf) * i as f64 / (n_points - 1) as f64).exp().round() as usize;
        let k = k.clamp(from, to);
        let r = records[k - 1].cumulative_regret;
        if r > 0.0 {
            pts.push(((k as f64).ln(), r.ln()));
        }
    }
    if pts.len() < 2 {
        return Some(0.0);
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Some(if sxx > 0.0 { sxy / sxx } else { 0.0 })
}

/// CSV with columns `episode, v_star, return, regret, cum_regret`.
pub fn write_regret_csv(path: &Path, records: &[RegretRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "# schema=1").map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["episode", "v_star", "return", "regret", "cum_regret"])?;
    for r in records {
        w.write_record(&[
            r.episode.to_string(),
            r.v_star.to_string(),
            r.realized_return.to_string(),
            r.regret.to_string(),
            r.cumulative_regret.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::GridworldSpec;
    use crate::rng::seeded_rng;

    #[test]
    fn learning_rate_examples() {
        assert_eq!(learning_rate(1, 7).unwrap(), 1.0);
        assert_eq!(learning_rate(5, 5).unwrap(), 0.6);
        assert!(learning_rate(0, 5).is_err());
        let mut prev = 1.0;
        for t in 2..1000 {
            let lr = learning_rate(t, 5).unwrap();
            assert!(lr < prev);
            prev = lr;
        }
        assert!(learning_rate(1_000_000_000, 5).unwrap() < 1e-8);
    }

    #[test]
    fn bonus_examples() {
        assert_eq!(ucb_bonus(1, 1, 1.0, 1.0), 1.0);
        assert!((ucb_bonus(8, 3, 2.0, 1.5) / ucb_bonus(32, 3, 2.0, 1.5) - 2.0).abs() < 1e-12);
        assert!((ucb_bonus(2, 2, 1.0, 0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weight_stays_in_range() {
        for d in [1.0, 2.0, 4.0] {
            for r in [0.0, 0.5, 1.0, 2.0, 3.0] {
                let w = resource_weight(r, 3.0, 0.75, d);
                assert!((1.0..=d).contains(&w));
            }
            assert_eq!(resource_weight(3.0, 3.0, 0.75, d), d);
        }
    }

    #[test]
    fn first_visit_ignores_initialization() {
        let mut l = TabularLearner::new(2, 2, 3, 0.5, 1.0);
        l.update(2, 0, 1, 0.7, 1, 1.0).unwrap();
        let expected = 0.7 + 0.0 + ucb_bonus(1, 3, 1.0, 0.5);
        assert_eq!(l.q(2, 0, 1), expected);
        assert_eq!(l.v(2, 0), expected.min(3.0));
        assert!(l.update(3, 0, 0, 0.0, 0, 1.0).is_err());
    }

    #[test]
    fn greedy_ties_break_low() {
        let l = TabularLearner::new(2, 3, 2, 1.0, 1.0);
        assert_eq!(l.greedy(0, 0), 0);
    }

    #[test]
    fn value_iteration_examples() {
        let mut spec = GridworldSpec::default_chain();
        let (_, v) = value_iteration(&spec);
        assert_eq!(v[0], 1.0);
        assert!(v[spec.horizon * spec.states..].iter().all(|x| *x == 0.0));
        spec.reward.iter_mut().for_each(|r| *r = 0.0);
        let (q, v) = value_iteration(&spec);
        assert!(q.iter().chain(&v).all(|x| *x == 0.0));

        let one = GridworldSpec::random(4, 3, 1, &mut seeded_rng(2));
        let (_, v) = value_iteration(&one);
        for s in 0..4 {
            let best = (0..3).map(|a| one.reward_at(0, s, a)).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(v[s], best);
        }
    }

    #[test]
    fn zero_episodes_give_no_records() {
        let spec = GridworldSpec::default_chain();
        assert!(run_regret_experiment(&spec, &LearnerConfig::default(), 0, 1).unwrap().is_empty());
    }

    #[test]
    fn regret_runs_are_deterministic() {
        let spec = GridworldSpec::random(4, 2, 3, &mut seeded_rng(8));
        let a = run_regret_experiment(&spec, &LearnerConfig::default(), 200, 3).unwrap();
        let b = run_regret_experiment(&spec, &LearnerConfig::default(), 200, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exponent_of_power_law() {
        let records: Vec<RegretRecord> = (1..=1000)
            .map(|k| RegretRecord {
                episode: k,
                v_star: 1.0,
                realized_return: 0.0,
                regret: 0.0,
                cumulative_regret: (k as f64).sqrt(),
            })
            .collect();
        let e = loglog_regret_exponent(&records, 10, 1000, 20).unwrap();
        assert!((e - 0.5).abs() < 1e-3, "{e}");
    }
}
