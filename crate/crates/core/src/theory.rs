//! Analytic side: the `p` and `q` integrals, Poisson parameters, the
//! Chen–Stein error bounds and the predicted limit share.

use serde::Serialize;

use crate::dist::{DistributionSpec, Family, TailClass};
use crate::quad::integrate_with_breaks;
use crate::{Error, Result};

/// Above this many actions the looser tolerance applies.
pub const LARGE_K: usize = 1000;
const TOL_SMALL_K: f64 = 1e-12;
const TOL_LARGE_K: f64 = 1e-9;

/// `q(k, ε) = ∫ F(x+ε)^{k-1} dF(x)`: the probability that a given action
/// is within `ε` of the best among `k` i.i.d. draws.
///
/// Integrated in the tail coordinate `z = k·(1 - F(x))` on `[0, k]`, over
/// doubling panels. The integrand is nonincreasing in `z`, so the tail
/// beyond a panel edge is bounded by the integrand there times the
/// remaining length; panels past the point where that bound is negligible
/// are dropped.
pub fn q_integral(spec: &DistributionSpec, k: usize, epsilon: f64) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidShape(format!("need at least 2 actions, got {k}")));
    }
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon));
    }
    let kf = k as f64;
    if epsilon == 0.0 {
        return Ok(1.0 / kf);
    }
    let tol = if k <= LARGE_K { TOL_SMALL_K } else { TOL_LARGE_K };
    let exponent = (k - 1) as f64;
    let integrand = |z: f64| {
        let x = spec.quantile_upper_unchecked(z / kf);
        let tail = spec.sf(x + epsilon);
        (exponent * (-tail).ln_1p()).exp()
    };

    let mut breaks = vec![0.0];
    let mut edge = 1.0;
    while edge < kf {
        breaks.push(edge);
        edge *= 2.0;
    }
    breaks.push(kf);
    if let Family::Uniform { lo, hi } = spec.family() {
        // F(x+ε) reaches 1 for tail mass below ε/(hi-lo).
        let kink = kf * epsilon / (hi - lo);
        if kink > 0.0 && kink < kf {
            breaks.push(kink);
            breaks.sort_by(f64::total_cmp);
        }
    }
    let cutoff = tol * kf * 1e-3;
    for j in 1..breaks.len() - 1 {
        if integrand(breaks[j]) * (kf - breaks[j]) <= cutoff {
            breaks.truncate(j + 1);
            break;
        }
    }
    let est = integrate_with_breaks(integrand, &breaks, 0.5 * tol * kf)?;
    Ok((est.value / kf).clamp(1.0 / kf, 1.0))
}

/// `p(k, ε) = q(k, ε) - 1/k`: the probability that a given action is within
/// `ε` of the best without being the best.
pub fn p_integral(spec: &DistributionSpec, k: usize, epsilon: f64) -> Result<f64> {
    let q = q_integral(spec, k, epsilon)?;
    Ok((q - 1.0 / k as f64).max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PredictedLimit {
    One,
    OneMinusInvE,
    /// The limit lies strictly between the endpoints.
    Interval { low: f64, high: f64 },
}

impl PredictedLimit {
    pub fn from_tail(class: TailClass) -> Self {
        match class {
            TailClass::Diverges => Self::One,
            TailClass::Zero => Self::OneMinusInvE,
            TailClass::Finite { .. } => Self::Interval {
                low: 1.0 - (-1.0f64).exp(),
                high: 1.0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub epsilon: f64,
    pub actions: Vec<usize>,
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda_s: f64,
    pub lambda_t: f64,
    pub bound_s: f64,
    pub bound_t: f64,
    pub thm1_lower: f64,
    pub predicted_limit: PredictedLimit,
}

impl TheoryReport {
    /// Poisson approximation to `Pr[T_ε ≥ k]`.
    pub fn eps_tail(&self, k: u64) -> f64 {
        poisson_tail(self.lambda_t, k)
    }
}

/// Takes raw action counts: the analytic quantities exist for shapes far
/// beyond what can be enumerated, so no size cap applies here.
pub fn theory_report(counts: &[usize], spec: &DistributionSpec, epsilon: f64) -> Result<TheoryReport> {
    if counts.is_empty() {
        return Err(Error::InvalidShape("a game needs at least one agent".into()));
    }
    let mut cache: Vec<(usize, f64)> = Vec::new();
    let mut q = Vec::with_capacity(counts.len());
    for &k in counts {
        let value = match cache.iter().find(|(kk, _)| *kk == k) {
            Some(&(_, v)) => v,
            None => {
                let v = q_integral(spec, k, epsilon)?;
                cache.push((k, v));
                v
            }
        };
        q.push(value);
    }
    let p: Vec<f64> = counts
        .iter()
        .zip(&q)
        .map(|(&k, &qi)| (qi - 1.0 / k as f64).max(0.0))
        .collect();
    let sum_k: f64 = counts.iter().map(|&k| k as f64).sum();
    let sum_k2: f64 = counts.iter().map(|&k| (k * k) as f64).sum();
    let prod_k: f64 = counts.iter().map(|&k| k as f64).product();
    let lambda_s = 1.0 + counts.iter().zip(&p).map(|(&k, pi)| k as f64 * pi).sum::<f64>();
    let lambda_t = counts.iter().zip(&q).map(|(&k, qi)| k as f64 * qi).product();
    let bound_s = 9.0 * sum_k.powi(4) / prod_k;
    let bound_t = 2.0 * sum_k2 * counts.iter().zip(&q).map(|(&k, qi)| k as f64 * qi * qi).product::<f64>();
    let thm1_lower = (1.0 - (-lambda_s).exp() - bound_s).max(0.0);
    Ok(TheoryReport {
        epsilon,
        actions: counts.to_vec(),
        p,
        q,
        lambda_s,
        lambda_t,
        bound_s,
        bound_t,
        thm1_lower,
        predicted_limit: PredictedLimit::from_tail(spec.tail_class()),
    })
}

fn log_pmf(lambda: f64, j: u64) -> f64 {
    -lambda + j as f64 * lambda.ln() - libm::lgamma(j as f64 + 1.0)
}

pub fn poisson_pmf(lambda: f64, j: u64) -> f64 {
    if lambda == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    log_pmf(lambda, j).exp()
}

/// `Pr[Poisson(λ) ≥ k]`. Sums whichever side of the mode is shorter so the
/// result keeps relative precision in both tails.
pub fn poisson_tail(lambda: f64, k: u64) -> f64 {
    assert!(lambda.is_finite() && lambda >= 0.0, "rate must be finite and nonnegative");
    if k == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    if k as f64 > lambda {
        let mut sum = 0.0;
        let mut j = k;
        loop {
            let term = log_pmf(lambda, j).exp();
            sum += term;
            if term <= sum * 1e-17 || j - k > 100_000 {
                break;
            }
            j += 1;
        }
        sum.min(1.0)
    } else {
        let lower: f64 = (0..k).map(|j| log_pmf(lambda, j).exp()).sum();
        (1.0 - lower).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma3Point {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs` with the hazard taken at the right end `x_k + ε` instead.
    pub rhs_right: f64,
}

impl Lemma3Point {
    pub fn ratio(&self) -> f64 {
        self.lhs / self.rhs
    }
}

/// `k·q(k, ε)` against `exp(ε·h(x_k))` with `x_k = F⁻¹(1 - 1/k)`.
pub fn lemma3_check(spec: &DistributionSpec, epsilon: f64, k: usize) -> Result<Lemma3Point> {
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(Error::NegativeEpsilon(epsilon));
    }
    if k < 2 {
        return Err(Error::InvalidShape(format!("need at least 2 actions, got {k}")));
    }
    if epsilon == 0.0 {
        return Ok(Lemma3Point {
            k,
            lhs: 1.0,
            rhs: 1.0,
            rhs_right: 1.0,
        });
    }
    let x = spec.quantile_upper(1.0 / k as f64)?;
    if spec.sf(x + epsilon) <= 0.0 {
        return Err(Error::HazardUndefined { x: x + epsilon });
    }
    let lhs = k as f64 * q_integral(spec, k, epsilon)?;
    let rhs = (epsilon * spec.hazard(x)?).exp();
    let rhs_right = (epsilon * spec.hazard(x + epsilon)?).exp();
    Ok(Lemma3Point {
        k,
        lhs,
        rhs,
        rhs_right,
    })
}

/// One point per decade `10, 100, ...` up to `kmax`.
pub fn lemma3_table(spec: &DistributionSpec, epsilon: f64, kmax: usize) -> Result<Vec<Lemma3Point>> {
    let mut out = Vec::new();
    let mut k = 10usize;
    while k <= kmax {
        out.push(lemma3_check(spec, epsilon, k)?);
        k = match k.checked_mul(10) {
            Some(next) => next,
            None => break,
        };
    }
    Ok(out)
}
