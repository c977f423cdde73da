//! Resource-aware exploration bonus.
//!
//! The intrinsic reward is `g(I(s)) * b(s, a)` where `b` is a novelty bonus
//! and `g` a coefficient increasing in every remaining resource:
//!
//! ```text
//! g(I) = prod_i (I_i + alpha_i) / (I_max,i + alpha_i)
//! ```
//!
//! With one resource this is the single ratio. `alpha` sets how strongly
//! resource use is discouraged; as `alpha -> inf`, `g -> 1` and the bonus
//! degenerates to plain surprise.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// `r + beta * g * b`
    Full,
    /// `r + beta * b`
    SurpriseOnly,
    /// `r + beta * g`
    CoefficientOnly,
    /// `r + beta * b + c * g`
    SurpriseRb,
    /// `r + c * g`
    SacRb,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "full" | "raeb" => Ok(Mode::Full),
            "surpriseonly" | "surprise" => Ok(Mode::SurpriseOnly),
            "coefficientonly" | "coefficient" => Ok(Mode::CoefficientOnly),
            "surpriserb" => Ok(Mode::SurpriseRb),
            "sacrb" => Ok(Mode::SacRb),
            _ => Err(Error::config("raeb.mode", format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::SurpriseOnly => "surprise_only",
            Mode::CoefficientOnly => "coefficient_only",
            Mode::SurpriseRb => "surprise_rb",
            Mode::SacRb => "sac_rb",
        })
    }
}

impl Mode {
    /// Whether this mode consumes the surprise bonus at all.
    pub fn uses_surprise(self) -> bool {
        matches!(self, Mode::Full | Mode::SurpriseOnly | Mode::SurpriseRb)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaebConfig {
    pub beta: f64,
    /// Absolute alpha per resource.
    pub alpha: Vec<f64>,
    pub i_max: Vec<f64>,
    pub mode: Mode,
    /// Scale of the additive resource bonus in the `*Rb` modes.
    pub c: f64,
}

impl RaebConfig {
    /// Build with alpha given as multiples of the initial resources.
    pub fn with_alpha_scale(beta: f64, alpha_scale: &[f64], i_max: &[f64], mode: Mode) -> Result<Self> {
        if alpha_scale.len() != i_max.len() {
            return Err(Error::config(
                "raeb.alpha_scale",
                format!("{} entries for {} resources", alpha_scale.len(), i_max.len()),
            ));
        }
        let cfg = Self {
            beta,
            alpha: alpha_scale.iter().zip(i_max).map(|(s, m)| s * m).collect(),
            i_max: i_max.to_vec(),
            mode,
            c: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.beta > 0.0) {
            bad.push(("raeb.beta".to_string(), "must be > 0".to_string()));
        }
        if self.alpha.len() != self.i_max.len() {
            bad.push(("raeb.alpha_scale".into(), "length must match the number of resources".into()));
        }
        if self.alpha.iter().any(|a| !(*a > 0.0)) {
            bad.push(("raeb.alpha_scale".into(), "every alpha must be > 0".into()));
        }
        if self.i_max.is_empty() || self.i_max.iter().any(|m| !(*m > 0.0)) {
            bad.push(("env.initial_*".into(), "every initial resource must be > 0".into()));
        }
        if !(self.c >= 0.0) {
            bad.push(("raeb.c".into(), "must be >= 0".into()));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config { keys: bad })
        }
    }
}

/// Default alpha multiples: 0.25 for goods, 2.5 for electricity.
pub const ALPHA_SCALE_GOODS: f64 = 0.25;
pub const ALPHA_SCALE_ELECTRICITY: f64 = 2.5;

pub fn coefficient(resources: &[f64], config: &RaebConfig) -> Result<f64> {
    if resources.len() != config.alpha.len() || resources.len() != config.i_max.len() {
        return Err(Error::contract(format!(
            "{} resources but coefficient configured for {}",
            resources.len(),
            config.i_max.len()
        )));
    }
    if let Some(v) = resources.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::contract(format!("negative resource {v}")));
    }
    Ok(resources
        .iter()
        .zip(&config.alpha)
        .zip(&config.i_max)
        .map(|((i, a), m)| (i + a) / (m + a))
        .product())
}

/// Reward decomposition for one step. `coefficient` and `bonus` hold the
/// values actually used (1 where a mode forces them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapedReward {
    pub extrinsic: f64,
    pub coefficient: f64,
    pub bonus: f64,
    pub total: f64,
}

impl ShapedReward {
    pub fn intrinsic(&self) -> f64 {
        self.total - self.extrinsic
    }
}

/// Assemble the learning reward. `resources` are those of the state the
/// action was taken in.
pub fn shape(extrinsic: f64, resources: &[f64], bonus: f64, config: &RaebConfig) -> Result<ShapedReward> {
    if !(bonus >= 0.0) {
        return Err(Error::contract(format!("bonus must be >= 0, got {bonus}")));
    }
    let g = coefficient(resources, config)?;
    let beta = config.beta;
    let (coefficient, bonus, total) = match config.mode {
        Mode::Full => (g, bonus, extrinsic + beta * g * bonus),
        Mode::SurpriseOnly => (1.0, bonus, extrinsic + beta * bonus),
        Mode::CoefficientOnly => (g, 1.0, extrinsic + beta * g),
        Mode::SurpriseRb => (g, bonus, extrinsic + beta * bonus + config.c * g),
        Mode::SacRb => (g, 0.0, extrinsic + config.c * g),
    };
    Ok(ShapedReward {
        extrinsic,
        coefficient,
        bonus,
        total,
    })
}

/// Property driver: draw `samples` pairs of resource vectors in
/// `[0, I_max]^d` that differ in one coordinate and check that `g` respects
/// the order on each.
pub fn is_monotone_in_each_resource<F>(g: F, i_max: &[f64], samples: usize, rng: &mut RandomStream) -> bool
where
    F: Fn(&[f64]) -> f64,
{
    let d = i_max.len();
    (0..samples).all(|_| {
        let lo: Vec<f64> = i_max.iter().map(|m| rng.gen_range(0.0..=*m)).collect();
        let i = rng.gen_range(0..d);
        let mut hi = lo.clone();
        hi[i] = rng.gen_range(lo[i]..=i_max[i]);
        g(&lo) <= g(&hi)
    })
}

pub fn coefficient_is_monotone(config: &RaebConfig, samples: usize, rng: &mut RandomStream) -> bool {
    is_monotone_in_each_resource(
        |r| coefficient(r, config).expect("sampled within bounds"),
        &config.i_max,
        samples,
        rng,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded_rng;

    fn single(i_max: f64, alpha: f64, mode: Mode) -> RaebConfig {
        RaebConfig {
            beta: 0.25,
            alpha: vec![alpha],
            i_max: vec![i_max],
            mode,
            c: 1.0,
        }
    }

    #[test]
    fn coefficient_examples() {
        let cfg = single(10.0, 2.5, Mode::Full);
        assert_eq!(coefficient(&[10.0], &cfg).unwrap(), 1.0);
        assert_eq!(coefficient(&[0.0], &cfg).unwrap(), 0.2);
        let two = RaebConfig {
            beta: 0.25,
            alpha: vec![12.0, 10.0],
            i_max: vec![12.0, 10.0],
            mode: Mode::Full,
            c: 1.0,
        };
        assert_eq!(coefficient(&[0.0, 10.0], &two).unwrap(), 0.5);
        let g = coefficient(&[0.0], &single(10.0, 1e9, Mode::Full)).unwrap();
        assert!((1.0 - g).abs() < 1e-7 && g < 1.0);
    }

    #[test]
    fn coefficient_errors() {
        let cfg = single(10.0, 2.5, Mode::Full);
        assert!(coefficient(&[-1.0], &cfg).is_err());
        assert!(coefficient(&[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn shape_examples() {
        let cfg = single(10.0, 2.5, Mode::Full);
        let s = shape(0.0, &[0.0], 2.0, &cfg).unwrap();
        assert_eq!(s.coefficient, 0.2);
        assert!((s.total - 0.1).abs() < 1e-15);
        for mode in [Mode::Full, Mode::SurpriseOnly] {
            assert_eq!(shape(7.0, &[3.0], 0.0, &single(10.0, 2.5, mode)).unwrap().total, 7.0);
        }
        let full = shape(1.0, &[10.0], 3.0, &cfg).unwrap();
        let surprise = shape(1.0, &[10.0], 3.0, &single(10.0, 2.5, Mode::SurpriseOnly)).unwrap();
        assert_eq!(full.total, surprise.total);
        assert!(shape(0.0, &[1.0], -0.5, &cfg).is_err());
    }

    #[test]
    fn ablation_modes() {
        let mut cfg = single(10.0, 2.5, Mode::CoefficientOnly);
        assert!((shape(0.0, &[0.0], 9.0, &cfg).unwrap().total - 0.05).abs() < 1e-15);
        cfg.mode = Mode::SurpriseRb;
        cfg.c = 2.0;
        assert!((shape(1.0, &[0.0], 4.0, &cfg).unwrap().total - (1.0 + 1.0 + 0.4)).abs() < 1e-15);
        cfg.mode = Mode::SacRb;
        assert!((shape(1.0, &[0.0], 4.0, &cfg).unwrap().total - 1.4).abs() < 1e-15);
    }

    #[test]
    fn modes_parse() {
        assert_eq!("surprise_only".parse::<Mode>().unwrap(), Mode::SurpriseOnly);
        assert_eq!("SacRB".parse::<Mode>().unwrap(), Mode::SacRb);
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn monotonicity_driver() {
        let mut rng = seeded_rng(1);
        assert!(coefficient_is_monotone(&single(10.0, 2.5, Mode::Full), 10_000, &mut rng));
        let two = RaebConfig::with_alpha_scale(0.25, &[2.5, 0.25], &[12.0, 10.0], Mode::Full).unwrap();
        assert!(coefficient_is_monotone(&two, 10_000, &mut rng));
        let cfg = single(10.0, 2.5, Mode::Full);
        let broken = |r: &[f64]| -coefficient(r, &cfg).unwrap();
        assert!(!is_monotone_in_each_resource(broken, &[10.0], 10_000, &mut rng));
    }

    #[test]
    fn config_validation() {
        assert!(RaebConfig::with_alpha_scale(0.0, &[0.25], &[10.0], Mode::Full).is_err());
        assert!(RaebConfig::with_alpha_scale(0.25, &[0.25, 1.0], &[10.0], Mode::Full).is_err());
        assert!(RaebConfig::with_alpha_scale(0.25, &[-1.0], &[10.0], Mode::Full).is_err());
    }
}
