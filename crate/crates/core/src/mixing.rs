//! Total variation distance and exact mixing times, in discrete time and for
//! the continuization `exp(t(P − I))`.

use serde::Serialize;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Cap on the number of discrete steps before giving up.
pub const MAX_STEPS: u64 = 1_000_000;
/// Slack allowed in the monotonicity assertions.
pub const MONOTONE_TOL: f64 = 1e-12;

/// A probability vector over the states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates `probs`; entries above `-1e-14` are clamped to zero.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !p.is_finite() || p < -1e-14) {
            return Err(Error::NonStochastic("distribution has a negative entry".into()));
        }
        probs.iter_mut().for_each(|p| *p = p.max(0.0));
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::NonStochastic(format!("distribution sums to {total}")));
        }
        Ok(Self(probs))
    }

    /// Point mass `v_x`.
    pub fn point(n: usize, x: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[x] = 1.0;
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }
}

/// `½ Σ |θ₁(i) − θ₂(i)|`.
pub fn tv_distance(theta1: &[f64], theta2: &[f64]) -> Result<f64> {
    if theta1.len() != theta2.len() {
        return Err(Error::DimensionMismatch {
            expected: theta1.len(),
            found: theta2.len(),
        });
    }
    Ok(0.5 * theta1.iter().zip(theta2).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Starting point of a mixing-time computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    State(usize),
    /// Worst case over all starting states.
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum MixingTime {
    Discrete(u64),
    Continuous(f64),
}

impl MixingTime {
    pub fn as_f64(self) -> f64 {
        match self {
            MixingTime::Discrete(t) => t as f64,
            MixingTime::Continuous(t) => t,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixingResult {
    pub from: Start,
    pub epsilon: f64,
    pub time: MixingTime,
    /// Distance to stationarity at the returned time.
    pub achieved_tv: f64,
}

fn check_epsilon(eps: f64) -> Result<()> {
    if (1e-12..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(eps))
    }
}

/// `τ_x(M, ε)`: the first `t > 0` with `‖Pᵗ(x,·) − π‖ ≤ ε`.
///
/// Iterates `v ← vP` and asserts at each step that the distance does not
/// increase.
pub fn discrete_mixing_time(chain: &Chain, x: usize, eps: f64) -> Result<MixingResult> {
    check_epsilon(eps)?;
    chain.check_state(x)?;
    chain.require_ergodic()?;
    let pi = chain.pi();
    let mut v = Distribution::point(chain.n(), x).0;
    let mut previous = tv(&v, pi);
    for t in 1..=MAX_STEPS {
        v = chain.p().left_mul_vec(&v);
        let d = tv(&v, pi);
        if d > previous + MONOTONE_TOL {
            return Err(Error::MonotonicityViolation {
                time: t as f64,
                before: previous,
                after: d,
            });
        }
        if d <= eps {
            return Ok(MixingResult {
                from: Start::State(x),
                epsilon: eps,
                time: MixingTime::Discrete(t),
                achieved_tv: d,
            });
        }
        previous = d;
    }
    Err(Error::NoConvergence { cap: MAX_STEPS })
}

/// `τ(M, ε) = max_x τ_x(M, ε)`.
pub fn discrete_mixing_time_all(chain: &Chain, eps: f64) -> Result<MixingResult> {
    let mut worst: Option<MixingResult> = None;
    for x in 0..chain.n() {
        let r = discrete_mixing_time(chain, x, eps)?;
        if worst.is_none_or(|w| r.time.as_f64() > w.time.as_f64()) {
            worst = Some(r);
        }
    }
    let mut r = worst.expect("chain has states");
    r.from = Start::All;
    Ok(r)
}

pub fn mixing_time(chain: &Chain, from: Start, eps: f64, continuous: bool) -> Result<MixingResult> {
    match (from, continuous) {
        (Start::State(x), false) => discrete_mixing_time(chain, x, eps),
        (Start::All, false) => discrete_mixing_time_all(chain, eps),
        (from, true) => continuous_mixing_time(chain, from, eps),
    }
}

/// `d(t) = max_j ‖Pᵗ(j,·) − π‖` for `t = 1..=t_max`.
pub fn d_profile(chain: &Chain, t_max: usize) -> Result<Vec<f64>> {
    if t_max > 10_000 {
        return Err(Error::BadParams(format!("t_max {t_max} exceeds 10000")));
    }
    chain.require_ergodic()?;
    let pi = chain.pi();
    let mut power = chain.p().clone();
    let mut out = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        if t > 1 {
            power = power.mul(chain.p());
        }
        let d = (0..chain.n()).map(|j| tv(power.row(j), pi)).fold(0.0, f64::max);
        out.push(d);
    }
    Ok(out)
}

/// `exp(Q t)` for a rate matrix `Q`.
pub fn matrix_exponential(q: &Matrix, t: f64) -> Result<Matrix> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::BadParams(format!("time must be finite and non-negative, got {t}")));
    }
    if !q.is_square() {
        return Err(Error::DimensionMismatch {
            expected: q.rows(),
            found: q.cols(),
        });
    }
    Ok(linalg::expm(q, t))
}

/// Transition matrix `P̃ᵗ = exp(t(P − I))` of the continuization.
pub fn continuized_kernel(chain: &Chain, t: f64) -> Result<Matrix> {
    matrix_exponential(&chain.rate_matrix(), t)
}

fn continuous_distance(chain: &Chain, q: &Matrix, from: Start, t: f64) -> f64 {
    let kernel = linalg::expm(q, t);
    let pi = chain.pi();
    match from {
        Start::State(x) => tv(kernel.row(x), pi),
        Start::All => (0..chain.n()).map(|j| tv(kernel.row(j), pi)).fold(0.0, f64::max),
    }
}

/// Continuous mixing time `τ_x(M̃, ε)` (or the worst case over `x` for
/// [`Start::All`]).
///
/// The upper end of the bracket doubles until the distance is at most `ε/2`;
/// bisection then stops once `hi − lo ≤ 1e-6 · max(1, hi)` and returns `hi`.
/// Every probe is checked for monotone decrease in `t`.
pub fn continuous_mixing_time(chain: &Chain, from: Start, eps: f64) -> Result<MixingResult> {
    check_epsilon(eps)?;
    if let Start::State(x) = from {
        chain.check_state(x)?;
    }
    if !chain.classify().irreducible {
        return Err(Error::NotIrreducible);
    }
    let q = chain.rate_matrix();
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let mut probe = |t: f64| {
        let d = continuous_distance(chain, &q, from, t);
        probes.push((t, d));
        d
    };

    let d0 = probe(0.0);
    if d0 <= eps {
        return Ok(MixingResult {
            from,
            epsilon: eps,
            time: MixingTime::Continuous(0.0),
            achieved_tv: d0,
        });
    }

    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut d_hi = probe(hi);
    let mut doublings = 0;
    while d_hi > eps / 2.0 {
        if d_hi > eps {
            lo = hi;
        }
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::NoConvergence { cap: MAX_STEPS });
        }
        d_hi = probe(hi);
    }
    while hi - lo > 1e-6 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        let d = probe(mid);
        if d <= eps {
            hi = mid;
            d_hi = d;
        } else {
            lo = mid;
        }
    }

    probes.sort_by(|a, b| a.0.total_cmp(&b.0));
    for w in probes.windows(2) {
        if w[1].1 > w[0].1 + MONOTONE_TOL {
            return Err(Error::MonotonicityViolation {
                time: w[1].0,
                before: w[0].1,
                after: w[1].1,
            });
        }
    }

    Ok(MixingResult {
        from,
        epsilon: eps,
        time: MixingTime::Continuous(hi),
        achieved_tv: d_hi,
    })
}
