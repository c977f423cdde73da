//! Independent reference implementations used as test oracles.

#![allow(dead_code)]

use r3l::nn::{Batch, Mlp};

/// Plain episodic UCB-Hoeffding Q-learning, written from the update rule
/// alone and sharing no code with the library learner.
pub struct PlainUcbH {
    pub s_n: usize,
    pub a_n: usize,
    pub h_n: usize,
    pub c: f64,
    pub iota: f64,
    pub q: Vec<Vec<Vec<f64>>>,
    pub v: Vec<Vec<f64>>,
    pub n: Vec<Vec<Vec<u64>>>,
}

impl PlainUcbH {
    pub fn new(s_n: usize, a_n: usize, h_n: usize, c: f64, episodes: usize, p: f64) -> Self {
        let big_h = h_n as f64;
        let t_total = (episodes * h_n) as f64;
        let mut v = vec![vec![big_h; s_n]; h_n + 1];
        v[h_n] = vec![0.0; s_n];
        Self {
            s_n,
            a_n,
            h_n,
            c,
            iota: (s_n as f64 * a_n as f64 * t_total / p).ln(),
            q: vec![vec![vec![big_h; a_n]; s_n]; h_n],
            v,
            n: vec![vec![vec![0; a_n]; s_n]; h_n],
        }
    }

    pub fn act(&self, h: usize, s: usize) -> usize {
        let row = &self.q[h][s];
        let top = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.iter().position(|x| *x == top).unwrap()
    }

    pub fn observe(&mut self, h: usize, s: usize, a: usize, r: f64, s2: usize) {
        self.n[h][s][a] += 1;
        let t = self.n[h][s][a] as f64;
        let big_h = self.h_n as f64;
        let alpha = (big_h + 1.0) / (big_h + t);
        let bonus = self.c * (big_h.powi(3) * self.iota / t).sqrt();
        self.q[h][s][a] = (1.0 - alpha) * self.q[h][s][a] + alpha * (r + self.v[h + 1][s2] + bonus);
        let best = self.q[h][s].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        self.v[h][s] = if best < big_h { best } else { big_h };
    }
}

/// Central finite-difference gradient of the mean batch NLL.
pub fn fd_gradient(net: &Mlp, batch: &Batch, step: f64) -> Vec<f64> {
    let mut probe = net.clone();
    (0..net.params().len())
        .map(|i| {
            let orig = probe.params()[i];
            probe.params_mut()[i] = orig + step;
            let up = probe.loss(batch).unwrap();
            probe.params_mut()[i] = orig - step;
            let down = probe.loss(batch).unwrap();
            probe.params_mut()[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Reference Mountain Car dynamics written from the published equations.
pub fn reference_physics(p: f64, v: f64, force: f64) -> (f64, f64) {
    let f = force.clamp(-1.0, 1.0);
    let mut v2 = v + f * 0.0015 - 0.0025 * (3.0 * p).cos();
    v2 = v2.clamp(-0.07, 0.07);
    let mut p2 = (p + v2).clamp(-1.2, 0.6);
    if p2 == -1.2 && v2 < 0.0 {
        v2 = 0.0;
    }
    p2 = p2.max(-1.2);
    (p2, v2)
}
