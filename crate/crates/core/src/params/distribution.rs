use rand::Rng;
use rand_distr::{Distribution as _, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Renewal-time law for inter-arrival or service draws.
///
/// Only families with closed-form first and second moments are supported.
/// Parameters are in time units (`rate` is per time unit).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "family",
    content = "params",
    rename_all = "kebab-case",
    try_from = "Strict"
)]
pub enum Distribution {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Uniform { low: f64, high: f64 },
    Erlang { shape: u32, rate: f64 },
    /// Mixture: with probability `p` an exponential with `rate1`, else `rate2`.
    #[serde(rename = "hyperexponential-2")]
    Hyperexponential2 { p: f64, rate1: f64, rate2: f64 },
}

// Deserialization goes through this mirror so that unknown parameter
// names are rejected.
#[derive(Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case", deny_unknown_fields)]
enum Strict {
    Exponential(ExponentialParams),
    Deterministic(DeterministicParams),
    Uniform(UniformParams),
    Erlang(ErlangParams),
    #[serde(rename = "hyperexponential-2")]
    Hyperexponential2(HyperParams),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentialParams {
    rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DeterministicParams {
    value: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformParams {
    low: f64,
    high: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ErlangParams {
    shape: u32,
    rate: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct HyperParams {
    p: f64,
    rate1: f64,
    rate2: f64,
}

impl TryFrom<Strict> for Distribution {
    type Error = Error;

    fn try_from(s: Strict) -> Result<Self> {
        let d = match s {
            Strict::Exponential(x) => Distribution::Exponential { rate: x.rate },
            Strict::Deterministic(x) => Distribution::Deterministic { value: x.value },
            Strict::Uniform(x) => Distribution::Uniform {
                low: x.low,
                high: x.high,
            },
            Strict::Erlang(x) => Distribution::Erlang {
                shape: x.shape,
                rate: x.rate,
            },
            Strict::Hyperexponential2(x) => Distribution::Hyperexponential2 {
                p: x.p,
                rate1: x.rate1,
                rate2: x.rate2,
            },
        };
        d.validate()?;
        Ok(d)
    }
}

impl Distribution {
    pub fn exponential_with_mean(mean: f64) -> Self {
        Distribution::Exponential { rate: 1.0 / mean }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |cond: bool, what: &str| {
            if cond {
                Ok(())
            } else {
                Err(Error::UnsupportedDistribution(format!("{what}: {self:?}")))
            }
        };
        let pos = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Distribution::Exponential { rate } => ok(pos(rate), "rate must be positive"),
            Distribution::Deterministic { value } => ok(pos(value), "value must be positive"),
            Distribution::Uniform { low, high } => ok(
                low.is_finite() && high.is_finite() && low >= 0.0 && high > low,
                "need 0 <= low < high",
            ),
            Distribution::Erlang { shape, rate } => {
                ok(shape >= 1 && pos(rate), "need shape >= 1 and positive rate")
            }
            Distribution::Hyperexponential2 { p, rate1, rate2 } => ok(
                (0.0..=1.0).contains(&p) && pos(rate1) && pos(rate2),
                "need p in [0,1] and positive rates",
            ),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Exponential { rate } => 1.0 / rate,
            Distribution::Deterministic { value } => value,
            Distribution::Uniform { low, high } => 0.5 * (low + high),
            Distribution::Erlang { shape, rate } => f64::from(shape) / rate,
            Distribution::Hyperexponential2 { p, rate1, rate2 } => p / rate1 + (1.0 - p) / rate2,
        }
    }

    pub fn second_moment(&self) -> f64 {
        match *self {
            Distribution::Exponential { rate } => 2.0 / (rate * rate),
            Distribution::Deterministic { value } => value * value,
            Distribution::Uniform { low, high } => {
                (low * low + low * high + high * high) / 3.0
            }
            Distribution::Erlang { shape, rate } => {
                let k = f64::from(shape);
                k * (k + 1.0) / (rate * rate)
            }
            Distribution::Hyperexponential2 { p, rate1, rate2 } => {
                2.0 * p / (rate1 * rate1) + 2.0 * (1.0 - p) / (rate2 * rate2)
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Deterministic { .. } => 0.0,
            _ => {
                let m = self.mean();
                (self.second_moment() - m * m).max(0.0)
            }
        }
    }

    /// Squared coefficient of variation.
    pub fn scv(&self) -> f64 {
        let m = self.mean();
        self.variance() / (m * m)
    }

    /// The same family with every duration multiplied by `factor`
    /// (mean scales by `factor`, scv unchanged).
    pub fn scale_time(&self, factor: f64) -> Self {
        match *self {
            Distribution::Exponential { rate } => Distribution::Exponential {
                rate: rate / factor,
            },
            Distribution::Deterministic { value } => Distribution::Deterministic {
                value: value * factor,
            },
            Distribution::Uniform { low, high } => Distribution::Uniform {
                low: low * factor,
                high: high * factor,
            },
            Distribution::Erlang { shape, rate } => Distribution::Erlang {
                shape,
                rate: rate / factor,
            },
            Distribution::Hyperexponential2 { p, rate1, rate2 } => {
                Distribution::Hyperexponential2 {
                    p,
                    rate1: rate1 / factor,
                    rate2: rate2 / factor,
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Exponential { rate } => {
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
            Distribution::Deterministic { value } => value,
            Distribution::Uniform { low, high } => low + (high - low) * rng.random::<f64>(),
            Distribution::Erlang { shape, rate } => {
                let total: f64 = (0..shape).map(|_| -> f64 { Exp1.sample(rng) }).sum();
                total / rate
            }
            Distribution::Hyperexponential2 { p, rate1, rate2 } => {
                let rate = if rng.random::<f64>() < p { rate1 } else { rate2 };
                let e: f64 = Exp1.sample(rng);
                e / rate
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn families() -> Vec<Distribution> {
        vec![
            Distribution::Exponential { rate: 2.0 },
            Distribution::Deterministic { value: 0.7 },
            Distribution::Uniform { low: 0.2, high: 1.4 },
            Distribution::Erlang { shape: 3, rate: 4.0 },
            Distribution::Hyperexponential2 {
                p: 0.3,
                rate1: 0.5,
                rate2: 3.0,
            },
        ]
    }

    #[test]
    fn empirical_moments_match() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in families() {
            d.validate().unwrap();
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
            let se = (d.variance() / n as f64).sqrt();
            assert!(
                // The slack covers rounding in the 2e5-term sum.
                (mean - d.mean()).abs() <= 4.0 * se + 1e-9 * d.mean(),
                "{d:?}: mean {mean} vs {}",
                d.mean()
            );
            assert!(
                (m2 - d.second_moment()).abs() / d.second_moment() < 0.03,
                "{d:?}"
            );
        }
    }

    #[test]
    fn scaling_keeps_scv() {
        for d in families() {
            let s = d.scale_time(1.25);
            assert!((s.mean() - 1.25 * d.mean()).abs() < 1e-12);
            assert!((s.scv() - d.scv()).abs() < 1e-12);
        }
    }

    #[test]
    fn json_shape() {
        let d: Distribution =
            serde_json::from_str(r#"{"family":"erlang","params":{"shape":2,"rate":3.0}}"#)
                .unwrap();
        assert_eq!(d, Distribution::Erlang { shape: 2, rate: 3.0 });
        let h: Distribution = serde_json::from_str(
            r#"{"family":"hyperexponential-2","params":{"p":0.5,"rate1":1.0,"rate2":2.0}}"#,
        )
        .unwrap();
        assert!(matches!(h, Distribution::Hyperexponential2 { .. }));
        let bad = serde_json::from_str::<Distribution>(
            r#"{"family":"exponential","params":{"rate":1.0,"mean":1.0}}"#,
        );
        assert!(bad.is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(Distribution::Exponential { rate: 0.0 }.validate().is_err());
        assert!(Distribution::Uniform { low: 1.0, high: 1.0 }.validate().is_err());
        assert!(Distribution::Erlang { shape: 0, rate: 1.0 }.validate().is_err());
    }
}
