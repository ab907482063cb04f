//! Random clocks producing the holding times between switching events.

use rand::Rng as _;
use rand_distr::{Distribution, Exp, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Rng};

/// Law of the i.i.d. holding times `τₖ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ClockLaw {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    Uniform { upper: f64 },
}

impl ClockLaw {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClockLaw::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            ClockLaw::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
            ClockLaw::Uniform { upper } => upper > 0.0 && upper.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid clock parameters {self:?}")))
        }
    }

    /// Whether the holding-time density is positive on all of `[0, ∞)`.
    ///
    /// Uniform clocks have bounded support and are flagged as non-conforming;
    /// they still run, but the ergodic theorems do not cover them.
    pub fn satisfies_condition_d(&self) -> bool {
        !matches!(self, ClockLaw::Uniform { .. })
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ClockLaw::Exponential { rate } => 1.0 / rate,
            ClockLaw::Gamma { shape, rate } => shape / rate,
            ClockLaw::Uniform { upper } => 0.5 * upper,
        }
    }

    /// Parses `exp:RATE`, `gamma:SHAPE,RATE` or `uniform:B`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (kind, args) = spec
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("clock spec `{spec}` lacks `kind:params`")))?;
        let nums = args
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse(format!("clock spec `{spec}`: {e}")))?;
        let law = match (kind.trim(), nums.as_slice()) {
            ("exp", [rate]) => ClockLaw::Exponential { rate: *rate },
            ("gamma", [shape, rate]) => ClockLaw::Gamma { shape: *shape, rate: *rate },
            ("uniform", [upper]) => ClockLaw::Uniform { upper: *upper },
            _ => return Err(Error::Parse(format!("unrecognised clock spec `{spec}`"))),
        };
        law.validate()?;
        Ok(law)
    }
}

impl Default for ClockLaw {
    fn default() -> Self {
        ClockLaw::Exponential { rate: 1.0 }
    }
}

/// A holding-time law together with the seed that drives it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomClock {
    pub law: ClockLaw,
    pub seed: u64,
}

impl RandomClock {
    pub fn new(law: ClockLaw, seed: u64) -> Result<Self> {
        law.validate()?;
        Ok(RandomClock { law, seed })
    }

    pub fn exponential(rate: f64, seed: u64) -> Result<Self> {
        Self::new(ClockLaw::Exponential { rate }, seed)
    }

    pub fn satisfies_condition_d(&self) -> bool {
        self.law.satisfies_condition_d()
    }

    /// Holding times of replica `stream`.
    pub fn ticks(&self, stream: u64) -> Ticks {
        Ticks { law: self.law, rng: stream_rng(self.seed, stream) }
    }
}

/// Infinite iterator of strictly positive holding times.
pub struct Ticks {
    law: ClockLaw,
    rng: Rng,
}

impl Iterator for Ticks {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        loop {
            let tau = match self.law {
                ClockLaw::Exponential { rate } => Exp::new(rate).expect("validated").sample(&mut self.rng),
                ClockLaw::Gamma { shape, rate } => {
                    Gamma::new(shape, 1.0 / rate).expect("validated").sample(&mut self.rng)
                }
                ClockLaw::Uniform { upper } => upper * self.rng.random::<f64>(),
            };
            if tau > 0.0 {
                return Some(tau);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_clock_specs() {
        assert_eq!(ClockLaw::parse("exp:2").unwrap(), ClockLaw::Exponential { rate: 2.0 });
        assert_eq!(
            ClockLaw::parse("gamma:2,0.5").unwrap(),
            ClockLaw::Gamma { shape: 2.0, rate: 0.5 }
        );
        assert_eq!(ClockLaw::parse("uniform:3").unwrap(), ClockLaw::Uniform { upper: 3.0 });
        assert!(ClockLaw::parse("exp:-1").is_err());
        assert!(ClockLaw::parse("poisson:1").is_err());
        assert!(ClockLaw::parse("exp").is_err());
    }

    #[test]
    fn condition_d_flags() {
        assert!(ClockLaw::Exponential { rate: 1.0 }.satisfies_condition_d());
        assert!(ClockLaw::Gamma { shape: 3.0, rate: 1.0 }.satisfies_condition_d());
        assert!(!ClockLaw::Uniform { upper: 1.0 }.satisfies_condition_d());
    }

    #[test]
    fn ticks_are_positive_with_expected_mean() {
        for law in [
            ClockLaw::Exponential { rate: 2.0 },
            ClockLaw::Gamma { shape: 3.0, rate: 1.5 },
            ClockLaw::Uniform { upper: 4.0 },
        ] {
            let clock = RandomClock::new(law, 11).unwrap();
            let n = 200_000;
            let taus: Vec<f64> = clock.ticks(0).take(n).collect();
            assert!(taus.iter().all(|&t| t > 0.0));
            let mean = taus.iter().sum::<f64>() / n as f64;
            assert!((mean - law.mean()).abs() < 0.01 * law.mean() + 5e-3, "{law:?} {mean}");
        }
    }

    #[test]
    fn ticks_are_deterministic_per_stream() {
        let clock = RandomClock::exponential(1.0, 5).unwrap();
        let a: Vec<f64> = clock.ticks(3).take(10).collect();
        let b: Vec<f64> = clock.ticks(3).take(10).collect();
        let c: Vec<f64> = clock.ticks(4).take(10).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
