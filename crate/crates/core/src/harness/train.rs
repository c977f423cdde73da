//! The training loop and its on-disk artifacts.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::agent::{evaluate, Agent, QAgent};
use crate::envs::MountainCar;
use crate::error::{Error, Result};
use crate::mdp::EpisodeLog;
use crate::nn::save_checkpoint;
use crate::raeb::shape;
use crate::rng::seeded_rng;
use crate::surprise::{BonusSample, DynamicsModel, InputScaling, ReplayBuffer, Surprise};

use super::config::RunConfig;
use super::diagnostics::{scatter_unloads, MetricsRow, RowKind, METRICS_HEADER};
use super::plot;

const METRICS_PREAMBLE: &str = "# schema=1\n\
# episode rows: (shaped_return - extrinsic_return) / length == beta * g_mean * bonus_mean in full mode, \
up to float64 rounding (values are written with shortest round-trip formatting)\n\
# eval rows: extrinsic_return is the mean greedy return over the configured eval episodes\n";

/// Everything a finished run reports back to its caller.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub seed: u64,
    pub rows: Vec<MetricsRow>,
    pub unloads: Vec<(f64, f64)>,
    pub agent: QAgent,
}

impl TrainOutcome {
    pub fn episode_rows(&self) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(|r| r.kind == RowKind::Episode)
    }

    pub fn eval_rows(&self) -> impl Iterator<Item = &MetricsRow> {
        self.rows.iter().filter(|r| r.kind == RowKind::Eval)
    }

    pub fn final_eval(&self) -> Option<f64> {
        self.eval_rows().last().map(|r| r.extrinsic_return)
    }

    /// Mean steps-to-exhaustion over all training episodes.
    pub fn mean_steps_to_exhaustion(&self) -> f64 {
        let v: Vec<f64> = self
            .episode_rows()
            .filter_map(|r| r.steps_to_exhaustion)
            .map(|k| k as f64)
            .collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    }
}

fn state_scaling(cfg: &RunConfig) -> InputScaling {
    let ph = &cfg.env.physics;
    let mut low = vec![ph.min_position, -ph.max_speed];
    let mut high = vec![ph.max_position, ph.max_speed];
    for cap in cfg.env.initial_resources().as_slice() {
        low.push(0.0);
        high.push(*cap);
    }
    InputScaling { low, high }
}

fn action_scaling(cfg: &RunConfig) -> InputScaling {
    if cfg.env.variant.uses_goods() {
        InputScaling {
            low: vec![-1.0, 0.0],
            high: vec![1.0, 1.0],
        }
    } else {
        InputScaling::identity(1)
    }
}

struct Sinks {
    dir: PathBuf,
    metrics: csv::Writer<BufWriter<File>>,
    steps: Option<csv::Writer<BufWriter<File>>>,
    unloads: Option<csv::Writer<BufWriter<File>>>,
}

fn csv_file(path: &Path, preamble: &str, header: &[&str]) -> Result<csv::Writer<BufWriter<File>>> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(preamble.as_bytes()).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(f);
    w.write_record(header)?;
    Ok(w)
}

impl Sinks {
    fn open(dir: &Path, cfg: &RunConfig) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg_path = dir.join("config.txt");
        std::fs::write(&cfg_path, cfg.to_kv().to_text()).map_err(|e| Error::io(&cfg_path, e))?;
        let metrics = csv_file(&dir.join("metrics.csv"), METRICS_PREAMBLE, &METRICS_HEADER)?;
        let steps = if cfg.log_steps {
            Some(csv_file(
                &dir.join("steps.csv"),
                "# schema=1\n",
                &["step", "episode", "extrinsic", "bonus_raw", "bonus_emitted", "coefficient", "shaped"],
            )?)
        } else {
            None
        };
        let unloads = if cfg.env.variant.uses_goods() {
            Some(csv_file(&dir.join("unloads.csv"), "# schema=1\n", &["episode", "position", "velocity"])?)
        } else {
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            metrics,
            steps,
            unloads,
        })
    }

    fn flush(&mut self) -> Result<()> {
        let d = self.dir.clone();
        self.metrics.flush().map_err(|e| Error::io(&d, e))?;
        if let Some(w) = &mut self.steps {
            w.flush().map_err(|e| Error::io(&d, e))?;
        }
        if let Some(w) = &mut self.unloads {
            w.flush().map_err(|e| Error::io(&d, e))?;
        }
        Ok(())
    }
}

/// Train one seed. With `out` set, artifacts are written there: `config.txt`,
/// `metrics.csv`, `steps.csv` (if enabled), `unloads.csv` (goods variants),
/// `qtable.bin`, `model.ckpt` (surprise modes) and SVG plots.
pub fn train(cfg: &RunConfig, seed: u64, out: Option<&Path>) -> Result<TrainOutcome> {
    cfg.validate()?;
    let root = seeded_rng(seed);
    let mut env_rng = root.substream("env");
    let mut act_rng = root.substream("agent");
    let mut replay_rng = root.substream("replay");
    let eval_rng = root.substream("eval");

    let mut car = MountainCar::new(cfg.env.clone())?;
    let mut agent = QAgent::new(&cfg.env, cfg.agent.clone());
    let uses_surprise = cfg.raeb.mode.uses_surprise();
    let model = DynamicsModel::new(
        state_scaling(cfg),
        action_scaling(cfg),
        cfg.env.observation_dim(),
        &cfg.surprise,
        &mut root.substream("model-init"),
    );
    let mut surprise = Surprise::new(cfg.surprise.clone(), model);
    let mut buffer = ReplayBuffer::new(
        cfg.surprise.buffer_capacity.min(cfg.total_steps as usize).max(1),
        cfg.env.observation_dim(),
        cfg.env.resource_dim(),
        cfg.env.action_dim(),
    );

    let mut sinks = match out {
        Some(dir) => Some(Sinks::open(dir, cfg)?),
        None => None,
    };
    let mut rows = Vec::new();
    let mut unloads = Vec::new();
    let mut episode: u64 = 0;
    let mut state = car.reset(&mut env_rng);
    let mut log = EpisodeLog::new(seed);
    let mut shaped_trace = Vec::new();
    let mut raw_trace = Vec::new();

    for step in 0..cfg.total_steps {
        let eps = cfg.agent.epsilon_at(step, cfg.total_steps);
        let a = agent.act(&state, eps, &mut act_rng);
        let action = car.project_action(&state, &agent.actions()[a]);
        let t = car.step(&action)?;
        let bonus = if uses_surprise {
            surprise.bonus(&t.state, &t.action, &t.next_state)?
        } else {
            BonusSample { raw: 0.0, emitted: 0.0 }
        };
        let shaped = shape(t.reward, t.state.resources.as_slice(), bonus.emitted, &cfg.raeb)?;
        agent.learn(&t.state, a, shaped.total, &t.next_state, t.terminal);
        if uses_surprise {
            buffer.push(&t);
            surprise.model.observe(&t);
            if (step + 1) % cfg.surprise.update_interval as u64 == 0 {
                surprise.update_model(&buffer, &mut replay_rng)?;
            }
        }
        if let Some(Some(w)) = sinks.as_mut().map(|s| s.steps.as_mut()) {
            w.write_record(&[
                (step + 1).to_string(),
                episode.to_string(),
                t.reward.to_string(),
                bonus.raw.to_string(),
                bonus.emitted.to_string(),
                shaped.coefficient.to_string(),
                shaped.total.to_string(),
            ])?;
        }
        let done = t.done();
        state = t.next_state.clone();
        shaped_trace.push(shaped.total);
        raw_trace.push(bonus.raw);
        log.push(t, shaped.bonus, shaped.coefficient);

        if done {
            episode += 1;
            let row = MetricsRow::episode(step + 1, episode, &log, &shaped_trace, &raw_trace);
            let pts = scatter_unloads(std::slice::from_ref(&log), cfg.env.variant);
            if let Some(s) = sinks.as_mut() {
                s.metrics.write_record(row.record())?;
                if let Some(w) = s.unloads.as_mut() {
                    for (p, v) in &pts {
                        w.write_record(&[episode.to_string(), p.to_string(), v.to_string()])?;
                    }
                }
            }
            unloads.extend(pts);
            rows.push(row);
            state = car.reset(&mut env_rng);
            log = EpisodeLog::new(seed);
            shaped_trace.clear();
            raw_trace.clear();
        }

        if (step + 1) % cfg.eval_interval == 0 {
            let k = (step + 1) / cfg.eval_interval;
            let ev = evaluate(&agent, &cfg.env, cfg.eval_episodes, &eval_rng.substream_indexed("checkpoint", k))?;
            let row = MetricsRow::eval(step + 1, episode, ev.mean(), ev.std());
            log::info!("seed {seed} step {} eval {:.2} ± {:.2}", step + 1, ev.mean(), ev.std());
            if let Some(s) = sinks.as_mut() {
                s.metrics.write_record(row.record())?;
            }
            rows.push(row);
        }
    }

    if let Some(mut s) = sinks {
        s.flush()?;
        let dir = s.dir.clone();
        drop(s);
        agent.table.save(&dir.join("qtable.bin"))?;
        if uses_surprise {
            save_checkpoint(&dir.join("model.ckpt"), &surprise.model.net, &surprise.model.adam)?;
        }
        plot::write_run_plots(&dir, &rows, &unloads, cfg.env.variant.uses_goods())?;
    }
    Ok(TrainOutcome {
        seed,
        rows,
        unloads,
        agent,
    })
}
