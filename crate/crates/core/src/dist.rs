//! Continuous utility distributions.
//!
//! Five families cover the three tail regimes that matter for games with
//! many actions: thin tails (uniform, Gaussian: the hazard rate diverges),
//! medium tails (exponential: constant hazard) and fat tails (Pareto,
//! Cauchy: the hazard rate vanishes).
//!
//! All sampling is by inversion, `quantile(U)` for one uniform `U`, so a
//! utility always consumes exactly one draw from its stream.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::rng::RandomStream;
use crate::{Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Uniform { lo: f64, hi: f64 },
    Gaussian { mean: f64, stddev: f64 },
    Exponential { rate: f64 },
    Pareto { scale: f64, shape: f64 },
    Cauchy { location: f64, scale: f64 },
}

/// Limit of the hazard rate `h(x)` as `x` grows without bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailClass {
    Diverges,
    Zero,
    Finite { limit: f64 },
}

/// A validated continuous distribution. Immutable; share freely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributionSpec {
    family: Family,
}

impl DistributionSpec {
    pub fn new(family: Family) -> Result<Self> {
        let ok = |cond: bool, msg: &str| {
            if cond {
                Ok(())
            } else {
                Err(Error::InvalidDistribution(msg.to_string()))
            }
        };
        match family {
            Family::Uniform { lo, hi } => {
                ok(lo.is_finite() && hi.is_finite(), "uniform bounds must be finite")?;
                ok(hi > lo, "uniform requires hi > lo")?;
            }
            Family::Gaussian { mean, stddev } => {
                ok(mean.is_finite(), "gaussian mean must be finite")?;
                ok(stddev.is_finite() && stddev > 0.0, "gaussian requires stddev > 0")?;
            }
            Family::Exponential { rate } => {
                ok(rate.is_finite() && rate > 0.0, "exponential requires rate > 0")?;
            }
            Family::Pareto { scale, shape } => {
                ok(scale.is_finite() && scale > 0.0, "pareto requires scale > 0")?;
                ok(shape.is_finite() && shape > 0.0, "pareto requires shape > 0")?;
            }
            Family::Cauchy { location, scale } => {
                ok(location.is_finite(), "cauchy location must be finite")?;
                ok(scale.is_finite() && scale > 0.0, "cauchy requires scale > 0")?;
            }
        }
        Ok(Self { family })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(Family::Uniform { lo, hi })
    }

    pub fn gaussian(mean: f64, stddev: f64) -> Result<Self> {
        Self::new(Family::Gaussian { mean, stddev })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(Family::Exponential { rate })
    }

    pub fn pareto(scale: f64, shape: f64) -> Result<Self> {
        Self::new(Family::Pareto { scale, shape })
    }

    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        Self::new(Family::Cauchy { location, scale })
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Closed interval containing all the mass (endpoints may be infinite).
    pub fn support(&self) -> (f64, f64) {
        match self.family {
            Family::Uniform { lo, hi } => (lo, hi),
            Family::Gaussian { .. } | Family::Cauchy { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Exponential { .. } => (0.0, f64::INFINITY),
            Family::Pareto { scale, .. } => (scale, f64::INFINITY),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            Family::Gaussian { mean, stddev } => std_normal_cdf((x - mean) / stddev),
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            Family::Pareto { scale, shape } => {
                if x <= scale {
                    0.0
                } else {
                    -(shape * (scale / x).ln()).exp_m1()
                }
            }
            Family::Cauchy { location, scale } => {
                let t = (x - location) / scale;
                if t > 1.0 {
                    1.0 - (1.0 / t).atan() / std::f64::consts::PI
                } else {
                    0.5 + t.atan() / std::f64::consts::PI
                }
            }
        }
    }

    /// Survival function `1 - F(x)`, accurate in the upper tail.
    pub fn sf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform { lo, hi } => ((hi - x) / (hi - lo)).clamp(0.0, 1.0),
            Family::Gaussian { mean, stddev } => std_normal_cdf(-(x - mean) / stddev),
            Family::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            Family::Pareto { scale, shape } => {
                if x <= scale {
                    1.0
                } else {
                    (scale / x).powf(shape)
                }
            }
            Family::Cauchy { location, scale } => {
                let t = (x - location) / scale;
                if t > 0.0 {
                    (1.0 / t).atan() / std::f64::consts::PI
                } else {
                    0.5 - t.atan() / std::f64::consts::PI
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.family {
            Family::Uniform { lo, hi } => {
                if (lo..=hi).contains(&x) {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            Family::Gaussian { mean, stddev } => {
                let z = (x - mean) / stddev;
                (-0.5 * z * z).exp() / (SQRT_2PI * stddev)
            }
            Family::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate * (-rate * x).exp()
                }
            }
            Family::Pareto { scale, shape } => {
                if x < scale {
                    0.0
                } else {
                    shape / x * (scale / x).powf(shape)
                }
            }
            Family::Cauchy { location, scale } => {
                let t = (x - location) / scale;
                1.0 / (std::f64::consts::PI * scale * (1.0 + t * t))
            }
        }
    }

    /// Inverse cdf on the open interval (0, 1).
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::ProbabilityOutOfRange(u));
        }
        Ok(self.quantile_unchecked(u))
    }

    #[inline]
    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self.family {
            Family::Uniform { lo, hi } => lo + u * (hi - lo),
            Family::Gaussian { mean, stddev } => mean + stddev * std_normal_quantile(u),
            Family::Exponential { rate } => -(-u).ln_1p() / rate,
            Family::Pareto { scale, shape } => scale * (-(-u).ln_1p() / shape).exp(),
            Family::Cauchy { location, scale } => {
                location + scale * (std::f64::consts::PI * (u - 0.5)).tan()
            }
        }
    }

    /// Upper-tail quantile `F^{-1}(1 - p)`, accurate for small `p`.
    pub fn quantile_upper(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityOutOfRange(p));
        }
        Ok(self.quantile_upper_unchecked(p))
    }

    #[inline]
    pub(crate) fn quantile_upper_unchecked(&self, p: f64) -> f64 {
        match self.family {
            Family::Uniform { lo, hi } => hi - p * (hi - lo),
            Family::Gaussian { mean, stddev } => mean - stddev * std_normal_quantile(p),
            Family::Exponential { rate } => -p.ln() / rate,
            Family::Pareto { scale, shape } => scale * (-p.ln() / shape).exp(),
            Family::Cauchy { location, scale } => {
                if p < 0.5 {
                    location + scale / (std::f64::consts::PI * p).tan()
                } else {
                    location + scale * (std::f64::consts::PI * (0.5 - p)).tan()
                }
            }
        }
    }

    #[inline]
    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        self.quantile_unchecked(stream.next_open01())
    }

    /// Hazard rate `f(x) / (1 - F(x))`; an error wherever `F(x) = 1`.
    pub fn hazard(&self, x: f64) -> Result<f64> {
        let sf = self.sf(x);
        if sf <= 0.0 {
            return Err(Error::HazardUndefined { x });
        }
        Ok(match self.family {
            Family::Uniform { lo, hi } => {
                if x < lo {
                    0.0
                } else {
                    1.0 / (hi - x)
                }
            }
            Family::Exponential { rate } => {
                if x < 0.0 {
                    0.0
                } else {
                    rate
                }
            }
            Family::Pareto { scale, shape } => {
                if x < scale {
                    0.0
                } else {
                    shape / x
                }
            }
            Family::Gaussian { .. } | Family::Cauchy { .. } => self.pdf(x) / sf,
        })
    }

    pub fn tail_class(&self) -> TailClass {
        match self.family {
            Family::Uniform { .. } | Family::Gaussian { .. } => TailClass::Diverges,
            Family::Exponential { rate } => TailClass::Finite { limit: rate },
            Family::Pareto { .. } | Family::Cauchy { .. } => TailClass::Zero,
        }
    }
}

impl fmt::Display for DistributionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Uniform { lo, hi } => write!(f, "uniform({lo},{hi})"),
            Family::Gaussian { mean, stddev } => write!(f, "gaussian({mean},{stddev})"),
            Family::Exponential { rate } => write!(f, "exponential({rate})"),
            Family::Pareto { scale, shape } => write!(f, "pareto({scale},{shape})"),
            Family::Cauchy { location, scale } => write!(f, "cauchy({location},{scale})"),
        }
    }
}

impl FromStr for DistributionSpec {
    type Err = Error;

    /// Parses `name(p1[,p2])`, case-insensitively, e.g. `Pareto(1, 2)`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("unrecognised distribution `{s}`"));
        let s_trim = s.trim();
        let open = s_trim.find('(').ok_or_else(bad)?;
        let inner = s_trim[open + 1..].strip_suffix(')').ok_or_else(bad)?;
        let name = s_trim[..open].trim().to_ascii_lowercase();
        let params = inner
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let family = match (name.as_str(), params.as_slice()) {
            ("uniform", &[lo, hi]) => Family::Uniform { lo, hi },
            ("gaussian" | "normal", &[mean, stddev]) => Family::Gaussian { mean, stddev },
            ("exponential", &[rate]) => Family::Exponential { rate },
            ("pareto", &[scale, shape]) => Family::Pareto { scale, shape },
            ("cauchy", &[location, scale]) => Family::Cauchy { location, scale },
            _ => return Err(bad()),
        };
        Self::new(family)
    }
}

impl Serialize for DistributionSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DistributionSpec {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Standard normal cdf. Written so that `Φ(z) + Φ(-z)` rounds to exactly 1.
pub fn std_normal_cdf(z: f64) -> f64 {
    if z < 0.0 {
        0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
    } else {
        1.0 - 0.5 * libm::erfc(z * FRAC_1_SQRT_2)
    }
}

/// Standard normal quantile: Wichura's AS241 (PPND16) rational
/// approximation followed by one Newton step against the erfc-based cdf.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p > 0.5 {
        return -lower_normal_quantile(1.0 - p);
    }
    lower_normal_quantile(p)
}

fn lower_normal_quantile(p: f64) -> f64 {
    debug_assert!(p <= 0.5);
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let x = ppnd16(p);
    let density = (-0.5 * x * x).exp() / SQRT_2PI;
    if density > 0.0 && x.is_finite() {
        // Lower tail: Φ(x) = erfc(-x/√2)/2 keeps full relative accuracy.
        let residual = 0.5 * libm::erfc(-x * FRAC_1_SQRT_2) - p;
        x - residual / density
    } else {
        x
    }
}

#[allow(clippy::excessive_precision)]
fn ppnd16(p: f64) -> f64 {
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
            + 6.7265770927008700853e4)
            * r
            + 4.5921953931549871457e4)
            * r
            + 1.3731693765509461125e4)
            * r
            + 1.9715909503065514427e3)
            * r
            + 1.3314166789178437745e2)
            * r
            + 3.3871328727963666080e0;
        let den = ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
            + 3.9307895800092710610e4)
            * r
            + 2.1213794301586595867e4)
            * r
            + 5.3941960214247511077e3)
            * r
            + 6.8718700749205790830e2)
            * r
            + 4.2313330701600911252e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let value = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
            + 2.41780725177450611770e-1)
            * r
            + 1.27045825245236838258e0)
            * r
            + 3.64784832476320460504e0)
            * r
            + 5.76949722146069140550e0)
            * r
            + 4.63033784615654529590e0)
            * r
            + 1.42343711074968357734e0;
        let den = ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
            + 1.51986665636164571966e-2)
            * r
            + 1.48103976427480074590e-1)
            * r
            + 6.89767334985100004550e-1)
            * r
            + 1.67638483018380384940e0)
            * r
            + 2.05319162663775882187e0)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
            + 1.24266094738807843860e-3)
            * r
            + 2.65321895265761230930e-2)
            * r
            + 2.96560571828504891230e-1)
            * r
            + 1.78482653991729133580e0)
            * r
            + 5.46378491116411436990e0)
            * r
            + 6.65790464350110377720e0;
        let den = ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
            + 1.84631831751005468180e-5)
            * r
            + 7.86869131145613259100e-4)
            * r
            + 1.48753612908506148525e-2)
            * r
            + 1.36929880922735805310e-1)
            * r
            + 5.99832206555887937690e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -value
    } else {
        value
    }
}
