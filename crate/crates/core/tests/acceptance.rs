//! Acceptance suite: prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails. Pass criterion numbers as arguments to
//! run a subset, e.g. `cargo test --test acceptance -- 1 2 3`.

mod common;

use std::path::Path;
use std::time::Instant;

use rand::Rng;

use r3l::envs::{electricity_cost, EnvConfig, GridworldSpec, MountainCar, Variant};
use r3l::harness::{train, RunConfig, TrainOutcome};
use r3l::nn::{Batch, Mlp, LOG_STD_MAX, LOG_STD_MIN};
use r3l::raeb::{coefficient, coefficient_is_monotone, is_monotone_in_each_resource, shape, Mode, RaebConfig};
use r3l::tabular::{loglog_regret_exponent, run_regret_experiment, value_iteration, LearnerConfig, RegretRun, TabularLearner};
use r3l::{seeded_rng, R3LState, ResourceVector};

use common::{fd_gradient, reference_physics, PlainUcbH};

struct Outcome {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// 1 ---------------------------------------------------------------------------

fn environment_exactness() -> Outcome {
    let start = Instant::now();
    let mut fails = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            fails.push(what.to_string());
        }
    };
    check(electricity_cost(&[1.0]) == 0.1, "cost(1) == 0.1");
    check(electricity_cost(&[0.5]) == 0.1 * (0.5 * 0.5), "cost(0.5) == 0.1*0.25");
    check(electricity_cost(&[-0.3]) == 0.1 * (0.3 * 0.3), "cost(-0.3)");
    check(electricity_cost(&[0.0]) == 0.0, "cost(0) == 0");

    let ed = EnvConfig::new(Variant::ElectricDelivery).initial_resources();
    check(ed.as_slice() == [12.0, 10.0], "initial resources [12, 10]");

    // Electric: reach the goal with a known remaining charge.
    let mut car = MountainCar::new(EnvConfig::new(Variant::Electric)).unwrap();
    car.reset_to(0.44, 0.02);
    let t = car.step(&[0.0]).unwrap();
    let remaining = t.next_state.resources.get(0);
    check(remaining == 12.0, "zero force costs nothing");
    check(t.terminal && t.reward == 100.0 + 100.0 * 12.0 / 12.0, "electric goal reward 200 at full charge");
    let mut car = MountainCar::new(EnvConfig::new(Variant::Electric)).unwrap();
    car.reset_to(0.44, 0.02);
    let t = car.step(&[1.0]).unwrap();
    let u = 12.0 - 0.1;
    check(t.next_state.resources.get(0) == u, "charge after unit force");
    check(t.reward == 100.0 + 100.0 * u / 12.0, "electric goal reward 100 + 100 u / I_max");

    // Delivery: unloading at the hilltop pays 100 per unit.
    let mut car = MountainCar::new(EnvConfig::new(Variant::Delivery)).unwrap();
    let s = car.reset_to(0.5, 0.0);
    let a = car.project_action(&s, &[0.0, 1.0]);
    let t = car.step(&a).unwrap();
    check(t.reward == 100.0 * 1.0, "delivery reward 100 * u");
    check(t.next_state.resources.get(0) == 9.0, "goods decrease by the unloaded amount");

    // Projection example: I = 0.5, a_u = 1 -> 0.5.
    let mut cfg = EnvConfig::new(Variant::Delivery);
    cfg.initial_goods = 10.0;
    let car = MountainCar::new(cfg).unwrap();
    let s = R3LState::new(vec![-0.5, 0.0], ResourceVector::new(vec![0.5]).unwrap());
    check(car.project_action(&s, &[0.3, 1.0]) == vec![0.3, 0.5], "projection I=0.5, a_u=1 -> 0.5");

    // Dynamics against the reference equations on random states.
    let mut rng = seeded_rng(1);
    let phys = EnvConfig::new(Variant::Electric).physics;
    let mut physics_ok = true;
    for _ in 0..10_000 {
        let (p, v, f) = (rng.gen_range(-1.2..0.6), rng.gen_range(-0.07..0.07), rng.gen_range(-1.5..1.5));
        physics_ok &= phys.advance(p, v, f) == reference_physics(p, v, f);
    }
    check(physics_ok, "dynamics match reference equations bit-exactly");

    let secs = start.elapsed().as_secs_f64();
    check(secs < 1.0, "runtime < 1 s");
    verdict(fails.is_empty(), format!("{} failed checks {:?}; {secs:.3} s", fails.len(), fails))
}

// 2 ---------------------------------------------------------------------------

fn gradient_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(2);
    let mut worst: f64 = 0.0;
    let mut draws = 0;
    while draws < 200 {
        let (n_in, n_h, m) = (rng.gen_range(1..6), rng.gen_range(1..9), rng.gen_range(1..4));
        let mut net = Mlp::init(n_in, n_h, m, &mut rng);
        for p in net.params_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
        let mut batch = Batch::new(n_in, m);
        for _ in 0..rng.gen_range(1..9) {
            let x: Vec<f64> = (0..n_in).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let t: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            batch.push(&x, &t);
        }
        // finite differences are meaningless right at a clamp kink
        let near_kink = (0..batch.len()).any(|i| {
            net.forward(batch.input(i))
                .unwrap()
                .log_std
                .iter()
                .any(|l| (l - LOG_STD_MIN).abs() < 1e-3 || (l - LOG_STD_MAX).abs() < 1e-3)
        });
        if near_kink {
            continue;
        }
        let (_, analytic) = net.backward(&batch).unwrap();
        let numeric = fd_gradient(&net, &batch, 1e-6);
        for (a, n) in analytic.iter().zip(&numeric) {
            let rel = (a - n).abs() / a.abs().max(n.abs()).max(1e-6);
            worst = worst.max(rel);
        }
        draws += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst < 1e-4 && secs < 30.0,
        format!("{draws} draws, max relative error {worst:.2e} (< 1e-4); {secs:.2} s"),
    )
}

// 3 ---------------------------------------------------------------------------

fn coefficient_properties() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(3);
    let samples = 10_000;
    let single = RaebConfig::with_alpha_scale(0.25, &[0.25], &[10.0], Mode::Full).unwrap();
    let product = RaebConfig::with_alpha_scale(0.25, &[2.5, 0.25], &[12.0, 10.0], Mode::Full).unwrap();
    let mono_single = coefficient_is_monotone(&single, samples, &mut rng);
    let mono_product = coefficient_is_monotone(&product, samples, &mut rng);
    let negated = !is_monotone_in_each_resource(
        |i| -coefficient(i, &product).unwrap(),
        &product.i_max,
        samples,
        &mut rng,
    );

    let mut bounded = true;
    for _ in 0..samples {
        let i = [rng.gen_range(0.0..=12.0), rng.gen_range(0.0..=10.0)];
        let g = coefficient(&i, &product).unwrap();
        bounded &= g > 0.0 && g <= 1.0;
        let g1 = coefficient(&i[1..], &single).unwrap();
        bounded &= g1 > 0.0 && g1 <= 1.0;
    }
    let at_max = coefficient(&[12.0, 10.0], &product).unwrap() == 1.0 && coefficient(&[10.0], &single).unwrap() == 1.0;

    let huge = RaebConfig::with_alpha_scale(0.25, &[1e9, 1e9], &[12.0, 10.0], Mode::Full).unwrap();
    let mut surprise_only = huge.clone();
    surprise_only.mode = Mode::SurpriseOnly;
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let i = [rng.gen_range(0.0..=12.0), rng.gen_range(0.0..=10.0)];
        let (r, b) = (rng.gen_range(-100.0..200.0), rng.gen_range(0.0..100.0));
        let full = shape(r, &i, b, &huge).unwrap().total;
        let so = shape(r, &i, b, &surprise_only).unwrap().total;
        worst = worst.max((full - so).abs());
    }
    let recovery = worst <= 1e-6;
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mono_single && mono_product && negated && bounded && at_max && recovery && secs < 10.0,
        format!(
            "monotone(single={mono_single}, product={mono_product}), negated g rejected={negated}, bound (0,1]={bounded}, g(I_max)=1: {at_max}, \
             recovery max diff {worst:.1e}; {samples} samples each; {secs:.2} s"
        ),
    )
}

// 4 ---------------------------------------------------------------------------

fn tabular_reduction_and_optimism() -> Outcome {
    let start = Instant::now();
    let mut rng = seeded_rng(4);
    let mut mismatches = 0;
    for mdp in 0..100 {
        let (s_n, a_n, h_n) = (rng.gen_range(1..=6), rng.gen_range(1..=3), rng.gen_range(1..=4));
        let spec = GridworldSpec::random(s_n, a_n, h_n, &mut rng);
        let episodes = 300;
        let (c, p) = (rng.gen_range(0.01..2.0), 0.05);
        let mut oracle = PlainUcbH::new(s_n, a_n, h_n, c, episodes, p);
        let iota = r3l::tabular::iota(s_n, a_n, (episodes * h_n) as u64, p);
        let mut learner = TabularLearner::new(s_n, a_n, h_n, c, iota);
        let mut env_rng = seeded_rng(1000 + mdp);
        let mut same = oracle.iota == iota;
        'episodes: for _ in 0..episodes {
            let mut s = spec.start_state;
            for h in 0..h_n {
                let a = learner.greedy(h, s);
                if a != oracle.act(h, s) {
                    same = false;
                    break 'episodes;
                }
                let st = r3l::envs::gridworld_step(&spec, h, s, a, 1.0, &mut env_rng).unwrap();
                learner.update(h, s, a, st.reward, st.next_state, 1.0).unwrap();
                oracle.observe(h, s, a, st.reward, st.next_state);
                for hh in 0..h_n {
                    for ss in 0..s_n {
                        for aa in 0..a_n {
                            same &= learner.q(hh, ss, aa) == oracle.q[hh][ss][aa];
                        }
                        same &= learner.v(hh, ss) == oracle.v[hh][ss];
                    }
                }
                s = st.next_state;
            }
        }
        if !same {
            mismatches += 1;
        }
    }

    let spec = GridworldSpec::default_chain();
    let (q_star, _) = value_iteration(&spec);
    let cfg = LearnerConfig::default();
    let episodes = 10_000;
    let mut optimistic_seeds = 0;
    for seed in 0..20 {
        let mut run = RegretRun::new(&spec, cfg.clone(), episodes, seed).unwrap();
        let mut ok = run.learner().q_values().iter().zip(&q_star).all(|(q, qs)| q >= qs);
        for _ in 0..episodes {
            if !ok {
                break;
            }
            run.run_episode().unwrap();
            ok = run.learner().q_values().iter().zip(&q_star).all(|(q, qs)| q >= qs);
        }
        if ok {
            optimistic_seeds += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        mismatches == 0 && optimistic_seeds >= 19 && secs < 300.0,
        format!(
            "weight-1 trace mismatches {mismatches}/100 MDPs; optimism held on {optimistic_seeds}/20 seeds \
             (c={}, p={}, {episodes} episodes); {secs:.1} s",
            cfg.c, cfg.p
        ),
    )
}

// 5 ---------------------------------------------------------------------------

fn sqrt_regret() -> Outcome {
    let start = Instant::now();
    let spec = GridworldSpec::default_chain();
    let episodes = 100_000;
    let mut lines = Vec::new();
    let mut pass = true;
    for d in [1.0, 2.0, 4.0] {
        let cfg = LearnerConfig {
            weight_cap: d,
            ..LearnerConfig::default()
        };
        let mut exps = Vec::new();
        for seed in 0..5 {
            let rec = run_regret_experiment(&spec, &cfg, episodes, seed).unwrap();
            let e = loglog_regret_exponent(&rec, 1_000, episodes, 50).unwrap();
            pass &= e < 0.75;
            exps.push(format!("{e:.3}"));
        }
        lines.push(format!("d={d}: [{}]", exps.join(", ")));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 900.0;
    verdict(
        pass,
        format!(
            "c={} exponents over episodes 1e3..1e5 (< 0.75 required): {}; {secs:.1} s",
            LearnerConfig::default().c,
            lines.join("; ")
        ),
    )
}

// 6-9 -------------------------------------------------------------------------

const SEEDS: u64 = 5;

fn delivery_config(mode: Mode, goods: f64) -> RunConfig {
    let mut doc = RunConfig::new(Variant::Delivery).to_kv();
    doc.set("raeb.mode", mode.to_string());
    doc.set("env.initial_goods", goods.to_string());
    doc.set("run.log_steps", "false");
    RunConfig::from_kv(&doc).unwrap()
}

struct ModeRuns {
    finals: Vec<f64>,
    exhaustion: Vec<f64>,
    any_positive_episode: Vec<bool>,
}

impl ModeRuns {
    fn mean_final(&self) -> f64 {
        self.finals.iter().sum::<f64>() / self.finals.len() as f64
    }

    fn mean_exhaustion(&self) -> f64 {
        self.exhaustion.iter().sum::<f64>() / self.exhaustion.len() as f64
    }

    fn seeds_at_least(&self, level: f64) -> usize {
        self.finals.iter().filter(|f| **f >= level).count()
    }
}

fn run_mode(mode: Mode, goods: f64) -> ModeRuns {
    let cfg = delivery_config(mode, goods);
    let mut out = ModeRuns {
        finals: Vec::new(),
        exhaustion: Vec::new(),
        any_positive_episode: Vec::new(),
    };
    for seed in 0..SEEDS {
        let t = Instant::now();
        let o: TrainOutcome = train(&cfg, seed, None).unwrap();
        let f = o.final_eval().unwrap();
        eprintln!(
            "    [{mode} goods={goods} seed={seed}] final eval {f:.1}, mean steps-to-exhaustion {:.1} ({:.0} s)",
            o.mean_steps_to_exhaustion(),
            t.elapsed().as_secs_f64()
        );
        out.finals.push(f);
        out.exhaustion.push(o.mean_steps_to_exhaustion());
        out.any_positive_episode.push(o.episode_rows().any(|r| r.extrinsic_return > 0.0));
    }
    out
}

fn fmt(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(", ")
}

struct DeliveryResults {
    full: ModeRuns,
    surprise: ModeRuns,
    coefficient: Option<ModeRuns>,
}

fn raeb_beats_surprise(r: &DeliveryResults) -> Outcome {
    let (f, s) = (&r.full, &r.surprise);
    let pass = f.mean_final() > s.mean_final() && f.seeds_at_least(100.0) >= 4 && s.seeds_at_least(100.0) <= 2;
    let positive = f.any_positive_episode.iter().filter(|b| **b).count();
    verdict(
        pass,
        format!(
            "full mean {:.1} [{}] ({} seeds >= 100, need >= 4); surprise_only mean {:.1} [{}] ({} seeds >= 100, need <= 2); \
             full seeds with a positive-return training episode: {positive}/5",
            f.mean_final(),
            fmt(&f.finals),
            f.seeds_at_least(100.0),
            s.mean_final(),
            fmt(&s.finals),
            s.seeds_at_least(100.0)
        ),
    )
}

fn exhaustion_direction(r: &DeliveryResults) -> Outcome {
    let (f, s) = (r.full.mean_exhaustion(), r.surprise.mean_exhaustion());
    verdict(
        f >= 2.0 * s,
        format!("mean steps-to-exhaustion full {f:.1} vs surprise_only {s:.1} (ratio {:.2}, need >= 2)", f / s),
    )
}

fn component_ablation(r: &DeliveryResults) -> Outcome {
    let c = r.coefficient.as_ref().expect("coefficient runs");
    let (f, s, k) = (r.full.mean_final(), r.surprise.mean_final(), c.mean_final());
    verdict(
        f > s && f > k,
        format!("mean final eval full {f:.1} vs surprise_only {s:.1} and coefficient_only {k:.1} [{}]", fmt(&c.finals)),
    )
}

fn initial_resource_monotonicity(ten: &ModeRuns) -> Outcome {
    let two = run_mode(Mode::SurpriseOnly, 2.0);
    let fifty = run_mode(Mode::SurpriseOnly, 50.0);
    let (a, b, c) = (two.mean_final(), ten.mean_final(), fifty.mean_final());
    verdict(
        a <= b && b <= c,
        format!("surprise_only mean final eval by initial goods: 2 -> {a:.1}, 10 -> {b:.1}, 50 -> {c:.1}"),
    )
}

// 10 --------------------------------------------------------------------------

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut doc = RunConfig::new(Variant::Delivery).to_kv();
    doc.set("run.total_steps", "6000");
    doc.set("run.eval_interval", "2000");
    doc.set("run.eval_episodes", "2");
    doc.set("surprise.warmup_steps", "500");
    let cfg = RunConfig::from_kv(&doc).unwrap();
    let mut identical = true;
    let mut compared = Vec::new();
    for variant_mode in [Mode::Full, Mode::SurpriseOnly] {
        let mut c = cfg.clone();
        c.raeb.mode = variant_mode;
        let a = dir.path().join(format!("{variant_mode}-a"));
        let b = dir.path().join(format!("{variant_mode}-b"));
        train(&c, 7, Some(&a)).unwrap();
        train(&c, 7, Some(&b)).unwrap();
        for f in ["metrics.csv", "steps.csv", "unloads.csv", "qtable.bin", "model.ckpt"] {
            identical &= same_bytes(&a.join(f), &b.join(f));
            compared.push(format!("{variant_mode}/{f}"));
        }
    }
    verdict(identical, format!("byte-compared {} files across repeated runs", compared.len()))
}

fn same_bytes(a: &Path, b: &Path) -> bool {
    match (std::fs::read(a), std::fs::read(b)) {
        (Ok(x), Ok(y)) => !x.is_empty() && x == y,
        _ => false,
    }
}

// ----------------------------------------------------------------------------

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let run = |n: u32| wanted.is_empty() || wanted.contains(&n);
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("criterion {n:>2} {}: {name} -- {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    if run(1) {
        report(1, "environment exactness", environment_exactness());
    }
    if run(2) {
        report(2, "gradient oracle", gradient_oracle());
    }
    if run(3) {
        report(3, "coefficient properties", coefficient_properties());
    }
    if run(4) {
        report(4, "tabular reduction and optimism", tabular_reduction_and_optimism());
    }
    if run(5) {
        report(5, "empirical sqrt(T) regret", sqrt_regret());
    }
    if (6..=9).any(run) {
        let start = Instant::now();
        let results = DeliveryResults {
            full: run_mode(Mode::Full, 10.0),
            surprise: run_mode(Mode::SurpriseOnly, 10.0),
            coefficient: run(8).then(|| run_mode(Mode::CoefficientOnly, 10.0)),
        };
        if run(6) {
            report(6, "RAEB beats surprise on Delivery Mountain Car", raeb_beats_surprise(&results));
        }
        if run(7) {
            report(7, "steps-to-exhaustion direction", exhaustion_direction(&results));
        }
        if run(8) {
            report(8, "component ablation", component_ablation(&results));
        }
        if run(9) {
            report(9, "initial-resource monotonicity", initial_resource_monotonicity(&results.surprise));
        }
        let secs = start.elapsed().as_secs_f64();
        println!("criteria 6-9 wall time {secs:.0} s (limit 7200 s){}", if secs > 7200.0 { " -- OVER LIMIT" } else { "" });
    }
    if run(10) {
        report(10, "determinism", determinism());
    }

    let failed: Vec<u32> = results.iter().filter(|(_, _, o)| !o.pass).map(|(n, _, _)| *n).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() { String::new() } else { format!(" ({failed:?})") }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
