//! Evaluation of the mixing-time, Poincaré and conductance bounds against
//! exactly computed quantities.
//!
//! Each bound becomes a [`BoundEntry`]: a bound value, the exact value it
//! constrains, a direction and a verdict. Bounds whose hypotheses fail are
//! kept in the report as non-applicable entries with the gating reason.
//! Exact mixing times always come from [`crate::mixing`], never from
//! spectral formulas.

use std::f64::consts::E;

use serde::Serialize;

use crate::chain::{Chain, ChainClass};
use crate::error::{Error, Result};
use crate::flows::{self, Flow};
use crate::mixing::{self, Start};
use crate::spectral::{self, PoincareConstants, MAX_CONDUCTANCE_STATES};

/// Slack allowed when checking a bound against an exact value.
pub const BOUND_TOL: f64 = 1e-9;

/// `1/(2e)`, the default accuracy for reference mixing times.
pub fn half_e() -> f64 {
    1.0 / (2.0 * E)
}

/// `½ − 1/(2e)`.
pub fn cheeger_constant() -> f64 {
    0.5 - half_e()
}

/// Accuracy values tried by the δ sweep.
pub fn delta_sweep() -> [f64; 4] {
    [half_e(), 0.1, 0.05, 0.01]
}

/// Identifier of a bound; the order is the report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum TheoremId {
    /// Spectral lower bound on `τ(M, ε)`.
    #[serde(rename = "T5")]
    T5,
    #[serde(rename = "C6")]
    C6,
    /// Spectral upper bound on `τ_x(M, ε)`.
    #[serde(rename = "T7")]
    T7,
    /// Comparison upper bound through an odd flow.
    #[serde(rename = "T8")]
    T8,
    #[serde(rename = "T8(5)")]
    T8HalfE,
    #[serde(rename = "T8-sweep")]
    T8Sweep,
    #[serde(rename = "T10")]
    T10,
    #[serde(rename = "O13")]
    O13,
    #[serde(rename = "O14")]
    O14,
    #[serde(rename = "O16")]
    O16,
    #[serde(rename = "T17")]
    T17,
    #[serde(rename = "T18")]
    T18,
    #[serde(rename = "T19")]
    T19,
    #[serde(rename = "C20a")]
    C20Discrete,
    #[serde(rename = "C20b")]
    C20Continuous,
    #[serde(rename = "T22")]
    T22,
    #[serde(rename = "T23")]
    T23,
    #[serde(rename = "T24a")]
    T24Continuous,
    #[serde(rename = "T24b")]
    T24Discrete,
    #[serde(rename = "T25")]
    T25,
    #[serde(rename = "T26")]
    T26,
    /// Two-state lower bound `τ_a(M, ¼) ≥ ⌊1/(2δ)⌋`.
    #[serde(rename = "E11")]
    E11,
}

impl TheoremId {
    pub fn label(self) -> String {
        serde_json::to_value(self)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// The bound must not exceed the exact value.
    Lower,
    /// The bound must not fall below the exact value.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEntry {
    pub theorem: TheoremId,
    pub direction: Direction,
    /// What the exact value measures, e.g. `tau_x(M, eps)`.
    pub quantity: String,
    pub bound: Option<f64>,
    pub exact: Option<f64>,
    pub holds: bool,
    pub applicable: bool,
    pub reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundEntry {
    pub fn evaluate(
        theorem: TheoremId,
        direction: Direction,
        quantity: impl Into<String>,
        bound: f64,
        exact: f64,
    ) -> Self {
        let quantity = quantity.into();
        if !bound.is_finite() {
            return Self::not_applicable(theorem, direction, quantity, "bound is not finite");
        }
        let holds = match direction {
            Direction::Lower => bound <= exact + BOUND_TOL,
            Direction::Upper => bound >= exact - BOUND_TOL,
        };
        Self {
            theorem,
            direction,
            quantity,
            bound: Some(bound),
            exact: Some(exact),
            holds,
            applicable: true,
            reason: None,
            note: None,
        }
    }

    pub fn not_applicable(
        theorem: TheoremId,
        direction: Direction,
        quantity: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Self {
            theorem,
            direction,
            quantity: quantity.into(),
            bound: None,
            exact: None,
            holds: false,
            applicable: false,
            reason: Some(reason.into()),
            note: None,
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// An applicable entry that fails its inequality.
    pub fn violated(&self) -> bool {
        self.applicable && !self.holds
    }

    /// `bound − exact` for lower bounds flipped so that non-negative means
    /// the inequality holds.
    pub fn margin(&self) -> Option<f64> {
        let (b, e) = (self.bound?, self.exact?);
        Some(match self.direction {
            Direction::Lower => e - b,
            Direction::Upper => b - e,
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if (1e-12..1.0).contains(&eps) {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(eps))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(Error::BadDelta(delta))
    }
}

fn tau_x(chain: &Chain, x: usize, eps: f64) -> Result<u64> {
    Ok(mixing::discrete_mixing_time(chain, x, eps)?.time.as_f64() as u64)
}

fn tau_all(chain: &Chain, eps: f64) -> Result<u64> {
    Ok(mixing::discrete_mixing_time_all(chain, eps)?.time.as_f64() as u64)
}

fn continuous_tau(chain: &Chain, from: Start, eps: f64) -> Result<f64> {
    Ok(mixing::continuous_mixing_time(chain, from, eps)?.time.as_f64())
}

/// `A(f)[τ′/ln(1/(2δ)) + 1]`, the comparison factor shared by several bounds.
pub fn comparison_factor(congestion: f64, tau_target: f64, delta: f64) -> f64 {
    congestion * (tau_target / (1.0 / (2.0 * delta)).ln() + 1.0)
}

/// Spectral lower and upper bounds for an ergodic reversible chain.
pub fn spectral_bounds_reversible(chain: &Chain, x: usize, eps: f64) -> Result<Vec<BoundEntry>> {
    check_eps(eps)?;
    chain.check_state(x)?;
    let summary = spectral::eigendecompose(chain)?;
    let beta = summary.beta_max;
    let ratio = beta / (1.0 - beta);

    let t5 = BoundEntry::evaluate(
        TheoremId::T5,
        Direction::Lower,
        "tau(M, eps)",
        ratio * (1.0 / (2.0 * eps)).ln(),
        tau_all(chain, eps)? as f64,
    );
    let c6 = BoundEntry::evaluate(
        TheoremId::C6,
        Direction::Lower,
        "tau(M, 1/2e)",
        ratio,
        tau_all(chain, half_e())? as f64,
    );
    let t7 = BoundEntry::evaluate(
        TheoremId::T7,
        Direction::Upper,
        "tau_x(M, eps)",
        (1.0 / (1.0 - beta)) * (1.0 / (eps * chain.pi()[x])).ln(),
        tau_x(chain, x, eps)? as f64,
    );
    Ok(vec![t5, c6, t7])
}

fn require_flow_between(flow: &Flow, base: &Chain, target: &Chain) -> Result<()> {
    if flow.base().p().max_abs_diff(base.p()) > 1e-12 || flow.base().n() != base.n() {
        return Err(Error::WrongFlowBase(format!(
            "flow is routed over {} but the bound needs {}",
            flow.base().name(),
            base.name()
        )));
    }
    if flow.target().p().max_abs_diff(target.p()) > 1e-12 {
        return Err(Error::WrongFlowBase(format!(
            "flow serves {} but the bound compares against {}",
            flow.target().name(),
            target.name()
        )));
    }
    Ok(())
}

/// Comparison bounds between two reversible chains with a common stationary
/// distribution.
pub fn comparison_reversible(
    base: &Chain,
    target: &Chain,
    flow: &Flow,
    x: usize,
    eps: f64,
    delta: f64,
) -> Result<Vec<BoundEntry>> {
    comparison_reversible_with_sweep(base, target, flow, x, eps, delta, false)
}

/// As [`comparison_reversible`], optionally adding the minimum of the
/// odd-flow bound over the δ sweep.
pub fn comparison_reversible_with_sweep(
    base: &Chain,
    target: &Chain,
    flow: &Flow,
    x: usize,
    eps: f64,
    delta: f64,
    sweep: bool,
) -> Result<Vec<BoundEntry>> {
    check_eps(eps)?;
    check_delta(delta)?;
    base.check_state(x)?;
    for chain in [base, target] {
        let class = chain.classify();
        if !class.ergodic() {
            return Err(Error::NotErgodic);
        }
        if !class.reversible {
            return Err(Error::NotReversible);
        }
    }
    require_flow_between(flow, base, target)?;
    let validation = flows::validate_flow(flow)?;
    let congestion = flows::edge_congestion(flow)?.max;

    let log_term = (1.0 / (eps * base.pi()[x])).ln();
    let exact = tau_x(base, x, eps)? as f64;
    let tau_target_delta = tau_all(target, delta)? as f64;
    let tau_target_half_e = tau_all(target, half_e())? as f64;
    let summary = spectral::eigendecompose(base)?;
    let min_self_loop = base.classify().min_self_loop;

    let t8_bound = comparison_factor(congestion, tau_target_delta, delta) * log_term;
    let ineq5_bound = congestion * (tau_target_half_e + 1.0) * log_term;
    let mut entries = Vec::new();

    let quantity = "tau_x(M, eps)";
    if validation.odd {
        entries.push(
            BoundEntry::evaluate(TheoremId::T8, Direction::Upper, quantity, t8_bound, exact)
                .with_note(format!("delta = {delta}")),
        );
        entries.push(BoundEntry::evaluate(
            TheoremId::T8HalfE,
            Direction::Upper,
            quantity,
            ineq5_bound,
            exact,
        ));
        if sweep {
            let mut best: Option<(f64, f64)> = None;
            for d in delta_sweep() {
                let tau_d = tau_all(target, d)? as f64;
                let b = comparison_factor(congestion, tau_d, d) * log_term;
                if best.is_none_or(|(_, v)| b < v) {
                    best = Some((d, b));
                }
            }
            let (d, b) = best.expect("non-empty sweep");
            entries.push(
                BoundEntry::evaluate(TheoremId::T8Sweep, Direction::Upper, quantity, b, exact)
                    .with_note(format!("minimum over delta sweep attained at delta = {d}")),
            );
        }
    } else {
        let reason = "flow is not odd";
        entries.push(BoundEntry::not_applicable(TheoremId::T8, Direction::Upper, quantity, reason));
        entries.push(BoundEntry::not_applicable(
            TheoremId::T8HalfE,
            Direction::Upper,
            quantity,
            reason,
        ));
        if sweep {
            entries.push(BoundEntry::not_applicable(
                TheoremId::T8Sweep,
                Direction::Upper,
                quantity,
                reason,
            ));
        }
    }

    if summary.beta1() + 1e-12 >= summary.beta_min().abs() {
        entries.push(
            BoundEntry::evaluate(TheoremId::T10, Direction::Upper, quantity, t8_bound, exact)
                .with_note(format!("delta = {delta}")),
        );
    } else {
        entries.push(BoundEntry::not_applicable(
            TheoremId::T10,
            Direction::Upper,
            quantity,
            format!(
                "beta_max = |beta_min| = {} exceeds beta_1 = {}",
                summary.beta_min().abs(),
                summary.beta1()
            ),
        ));
    }

    if min_self_loop > 0.0 {
        let factor = comparison_factor(congestion, tau_target_delta, delta).max(1.0 / (2.0 * min_self_loop));
        entries.push(
            BoundEntry::evaluate(TheoremId::O13, Direction::Upper, quantity, factor * log_term, exact)
                .with_note(format!("c = {min_self_loop}, delta = {delta}")),
        );
    } else {
        entries.push(BoundEntry::not_applicable(
            TheoremId::O13,
            Direction::Upper,
            quantity,
            "some state has no self-loop (c = 0)",
        ));
    }

    let lazy_exact = tau_x(&base.lazy(), x, eps)? as f64;
    entries.push(BoundEntry::evaluate(
        TheoremId::O14,
        Direction::Upper,
        "tau_x(lazy(M), eps)",
        2.0 * congestion * (tau_target_half_e + 1.0) * log_term,
        lazy_exact,
    ));
    Ok(entries)
}

/// Conductance and Cheeger-type bounds. `discrete_tau` and `continuous_tau`
/// are `τ(M, 1/2e)` and `τ(M̃, 1/2e)`; pass `None` when undefined.
pub fn conductance_bounds(
    chain: &Chain,
    discrete_tau: Option<f64>,
    continuous_tau: Option<f64>,
) -> Result<Vec<BoundEntry>> {
    let lambda = spectral::lambda_constants(chain)?.lambda1;
    let phi = if chain.n() <= MAX_CONDUCTANCE_STATES {
        Some(spectral::conductance(chain)?.phi)
    } else {
        None
    };
    let c = cheeger_constant();
    let too_large = format!("N = {} > {MAX_CONDUCTANCE_STATES}: exact conductance unavailable", chain.n());
    let periodic = "discrete mixing time undefined (chain is periodic)";
    let mut entries = Vec::new();

    entries.push(match (phi, discrete_tau) {
        (Some(phi), Some(tau)) => {
            BoundEntry::evaluate(TheoremId::T17, Direction::Lower, "Phi(M)", c / tau, phi)
        }
        (None, _) => BoundEntry::not_applicable(TheoremId::T17, Direction::Lower, "Phi(M)", &too_large),
        (_, None) => BoundEntry::not_applicable(TheoremId::T17, Direction::Lower, "Phi(M)", periodic),
    });
    entries.push(match (phi, continuous_tau) {
        (Some(phi), Some(tau)) => {
            BoundEntry::evaluate(TheoremId::T18, Direction::Lower, "Phi(M)", c / tau, phi)
        }
        (None, _) => BoundEntry::not_applicable(TheoremId::T18, Direction::Lower, "Phi(M)", &too_large),
        (_, None) => BoundEntry::not_applicable(
            TheoremId::T18,
            Direction::Lower,
            "Phi(M)",
            "continuous mixing time unavailable",
        ),
    });
    match phi {
        Some(phi) => {
            entries.push(BoundEntry::evaluate(
                TheoremId::T19,
                Direction::Lower,
                "lambda_1(M)",
                phi * phi / 8.0,
                lambda,
            ));
            entries.push(BoundEntry::evaluate(
                TheoremId::O16,
                Direction::Upper,
                "lambda_1(M)",
                phi,
                lambda,
            ));
        }
        None => {
            entries.push(BoundEntry::not_applicable(
                TheoremId::T19,
                Direction::Lower,
                "lambda_1(M)",
                &too_large,
            ));
            entries.push(BoundEntry::not_applicable(
                TheoremId::O16,
                Direction::Upper,
                "lambda_1(M)",
                &too_large,
            ));
        }
    }
    entries.push(match discrete_tau {
        Some(tau) => BoundEntry::evaluate(
            TheoremId::C20Discrete,
            Direction::Lower,
            "lambda_1(M)",
            c * c / (8.0 * tau * tau),
            lambda,
        ),
        None => BoundEntry::not_applicable(TheoremId::C20Discrete, Direction::Lower, "lambda_1(M)", periodic),
    });
    entries.push(match continuous_tau {
        Some(tau) => BoundEntry::evaluate(
            TheoremId::C20Continuous,
            Direction::Lower,
            "lambda_1(M)",
            c * c / (8.0 * tau * tau),
            lambda,
        ),
        None => BoundEntry::not_applicable(
            TheoremId::C20Continuous,
            Direction::Lower,
            "lambda_1(M)",
            "continuous mixing time unavailable",
        ),
    });
    Ok(entries)
}

/// `λ₁(R(M)M)`, the Poincaré constant of the reversal-then-forward product.
pub fn product_gap(chain: &Chain) -> Result<f64> {
    let product = chain.time_reversal()?.multiply(chain)?;
    spectral::spectral_gap_reversible(&product)
}

/// Upper bounds that need no reversibility: continuous time through λ₁(M),
/// discrete time through λ₁(R(M)M).
pub fn nonreversible_bounds(chain: &Chain, x: usize, eps: f64) -> Result<Vec<BoundEntry>> {
    check_eps(eps)?;
    chain.check_state(x)?;
    let class = chain.classify();
    if !class.irreducible {
        return Err(Error::NotIrreducible);
    }
    let log_term = (1.0 / (eps * eps * chain.pi()[x])).ln();
    let lambda = spectral::lambda_constants(chain)?.lambda1;
    let t22 = BoundEntry::evaluate(
        TheoremId::T22,
        Direction::Upper,
        "tau_x(M~, eps)",
        log_term / (2.0 * lambda),
        continuous_tau(chain, Start::State(x), eps)?,
    );

    let gap = product_gap(chain)?;
    let quantity = "tau_x(M, eps)";
    let t23 = if gap <= 1e-12 {
        let mut reason = format!("lambda_1(R(M)M) = {gap:.3e}: the product chain is reducible");
        if !class.aperiodic {
            reason.push_str(&format!("; chain has period {}", class.period));
        }
        BoundEntry::not_applicable(TheoremId::T23, Direction::Upper, quantity, reason)
    } else if !class.aperiodic {
        BoundEntry::not_applicable(
            TheoremId::T23,
            Direction::Upper,
            quantity,
            format!("chain has period {}", class.period),
        )
    } else {
        BoundEntry::evaluate(
            TheoremId::T23,
            Direction::Upper,
            quantity,
            log_term / gap,
            tau_x(chain, x, eps)? as f64,
        )
        .with_note(format!("lambda_1(R(M)M) = {gap}"))
    };
    Ok(vec![t22, t23])
}

/// Comparison bounds without reversibility of the base chain.
///
/// `product_flow`, when given, must be an `(R(M)M, M′)`-flow; it feeds the
/// discrete-time bound.
pub fn comparison_general(
    base: &Chain,
    target: &Chain,
    flow: &Flow,
    product_flow: Option<&Flow>,
    x: usize,
    eps: f64,
) -> Result<Vec<BoundEntry>> {
    check_eps(eps)?;
    base.check_state(x)?;
    require_flow_between(flow, base, target)?;
    let base_class = base.classify();
    let target_class = target.classify();
    if !base_class.irreducible || !target_class.irreducible {
        return Err(Error::NotIrreducible);
    }
    let congestion = flows::edge_congestion(flow)?.max;
    let c = cheeger_constant();
    let log_term = (1.0 / (eps * eps * base.pi()[x])).ln();
    let exact_continuous = continuous_tau(base, Start::State(x), eps)?;
    let target_continuous = continuous_tau(target, Start::All, half_e())?;
    let target_discrete = if target_class.ergodic() {
        Some(tau_all(target, half_e())? as f64)
    } else {
        None
    };
    let cont_q = "tau_x(M~, eps)";
    let disc_q = "tau_x(M, eps)";
    let mut entries = vec![BoundEntry::evaluate(
        TheoremId::T24Continuous,
        Direction::Upper,
        cont_q,
        4.0 * congestion * target_continuous.powi(2) / (c * c) * log_term,
        exact_continuous,
    )];
    entries.push(match target_discrete {
        Some(tau) => BoundEntry::evaluate(
            TheoremId::T24Discrete,
            Direction::Upper,
            cont_q,
            4.0 * congestion * tau * tau / (c * c) * log_term,
            exact_continuous,
        ),
        None => BoundEntry::not_applicable(
            TheoremId::T24Discrete,
            Direction::Upper,
            cont_q,
            "target chain is periodic",
        ),
    });

    entries.push(match (product_flow, target_discrete, base_class.aperiodic) {
        (_, _, false) => BoundEntry::not_applicable(
            TheoremId::T25,
            Direction::Upper,
            disc_q,
            format!("chain has period {}", base_class.period),
        ),
        (None, _, _) => BoundEntry::not_applicable(
            TheoremId::T25,
            Direction::Upper,
            disc_q,
            "no (R(M)M, M')-flow available",
        ),
        (_, None, _) => BoundEntry::not_applicable(
            TheoremId::T25,
            Direction::Upper,
            disc_q,
            "target chain is periodic",
        ),
        (Some(pf), Some(tau), true) => {
            let product = base.time_reversal()?.multiply(base)?;
            require_flow_between(pf, &product, target)?;
            let a = flows::edge_congestion(pf)?.max;
            BoundEntry::evaluate(
                TheoremId::T25,
                Direction::Upper,
                disc_q,
                a * 8.0 * tau * tau / (c * c) * log_term,
                tau_x(base, x, eps)? as f64,
            )
            .with_note(format!("A(f) over R(M)M = {a}"))
        }
    });

    entries.push(match (target_class.reversible, target_discrete) {
        (true, Some(tau)) => BoundEntry::evaluate(
            TheoremId::T26,
            Direction::Upper,
            cont_q,
            congestion / 2.0 * (tau + 1.0) * log_term,
            exact_continuous,
        ),
        (false, _) => BoundEntry::not_applicable(
            TheoremId::T26,
            Direction::Upper,
            cont_q,
            "target chain is not reversible",
        ),
        (true, None) => BoundEntry::not_applicable(
            TheoremId::T26,
            Direction::Upper,
            cont_q,
            "target chain is periodic",
        ),
    });
    Ok(entries)
}

/// A comparison partner for [`full_report`].
#[derive(Debug, Clone)]
pub struct Comparison<'a> {
    pub target: &'a Chain,
    pub flow: &'a Flow,
}

#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub from: usize,
    pub eps: f64,
    pub delta: f64,
    pub sweep: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            from: 0,
            eps: 0.25,
            delta: half_e(),
            sweep: false,
        }
    }
}

/// Exact reference values gathered for the report.
#[derive(Debug, Clone, Default, Serialize)]
pub struct ExactValues {
    pub tau_x: Option<u64>,
    pub tau: Option<u64>,
    pub tau_half_e: Option<u64>,
    pub continuous_tau_x: Option<f64>,
    pub continuous_tau_half_e: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda_n1: Option<f64>,
    pub conductance: Option<f64>,
    pub target_tau_half_e: Option<u64>,
    pub congestion: Option<f64>,
    pub flow_odd: Option<bool>,
    /// `τ_x(M, ε) / ([τ(M′, 1/2e) + 1] ln(1/(ε π(x))))`: how far the exact
    /// mixing time sits from the odd-flow comparison bound with `A(f)`
    /// factored out.
    pub comparison_ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub chain: String,
    pub target: Option<String>,
    pub from: String,
    pub epsilon: f64,
    pub delta: f64,
    pub classification: ChainClass,
    pub exact: ExactValues,
    pub entries: Vec<BoundEntry>,
    pub verdict: Verdict,
}

impl BoundReport {
    pub fn entry(&self, id: TheoremId) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.theorem == id)
    }

    pub fn violations(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries.iter().filter(|e| e.violated())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn na_all(ids: &[(TheoremId, Direction, &str)], reason: &str) -> Vec<BoundEntry> {
    ids.iter()
        .map(|&(id, dir, q)| BoundEntry::not_applicable(id, dir, q, reason))
        .collect()
}

/// Symmetric two-state chain `[[δ, 1−δ], [1−δ, δ]]` with `0 < δ < 1`.
fn two_state_delta(chain: &Chain) -> Option<f64> {
    if chain.n() != 2 {
        return None;
    }
    let p = chain.p();
    let d = p[(0, 0)];
    (d > 0.0 && d < 1.0 && p[(1, 1)] == d).then_some(d)
}

/// Runs every applicable bound on `base` (and on the pair `base`/`target`
/// when a comparison is supplied) and collects the verdicts.
pub fn full_report(base: &Chain, comparison: Option<Comparison<'_>>, opts: ReportOptions) -> Result<BoundReport> {
    check_eps(opts.eps)?;
    base.check_state(opts.from)?;
    let class = base.classify();
    if !class.irreducible {
        return Err(Error::NotIrreducible);
    }
    let x = opts.from;
    let ergodic = class.ergodic();
    let mut exact = ExactValues::default();
    let PoincareConstants { lambda1, lambda_n1 } = spectral::lambda_constants(base)?;
    exact.lambda1 = Some(lambda1);
    exact.lambda_n1 = Some(lambda_n1);
    if base.n() <= MAX_CONDUCTANCE_STATES {
        exact.conductance = Some(spectral::conductance(base)?.phi);
    }
    if ergodic {
        exact.tau_x = Some(tau_x(base, x, opts.eps)?);
        exact.tau = Some(tau_all(base, opts.eps)?);
        exact.tau_half_e = Some(tau_all(base, half_e())?);
    }
    exact.continuous_tau_x = Some(continuous_tau(base, Start::State(x), opts.eps)?);
    exact.continuous_tau_half_e = Some(continuous_tau(base, Start::All, half_e())?);

    let mut entries = Vec::new();
    let spectral_ids = [
        (TheoremId::T5, Direction::Lower, "tau(M, eps)"),
        (TheoremId::C6, Direction::Lower, "tau(M, 1/2e)"),
        (TheoremId::T7, Direction::Upper, "tau_x(M, eps)"),
    ];
    if !ergodic {
        entries.extend(na_all(&spectral_ids, "chain is periodic"));
    } else if !class.reversible {
        entries.extend(na_all(&spectral_ids, "chain is not reversible"));
    } else {
        entries.extend(spectral_bounds_reversible(base, x, opts.eps)?);
    }

    entries.extend(conductance_bounds(
        base,
        exact.tau_half_e.map(|t| t as f64),
        exact.continuous_tau_half_e,
    )?);
    entries.extend(nonreversible_bounds(base, x, opts.eps)?);

    if let Some(two_state) = two_state_delta(base) {
        let floor = (1.0 / (2.0 * two_state)).floor();
        let quantity = "tau_a(M, 1/4)";
        entries.push(if ergodic {
            BoundEntry::evaluate(TheoremId::E11, Direction::Lower, quantity, floor, tau_x(base, 0, 0.25)? as f64)
        } else {
            BoundEntry::not_applicable(TheoremId::E11, Direction::Lower, quantity, "chain is periodic")
        });
    }

    let mut target_name = None;
    if let Some(Comparison { target, flow }) = comparison {
        target_name = Some(target.name().to_string());
        require_flow_between(flow, base, target)?;
        let validation = flows::validate_flow(flow)?;
        if let Some(v) = validation.violations.first() {
            return Err(Error::InvalidFlow(v.to_string()));
        }
        let congestion = flows::edge_congestion(flow)?.max;
        exact.congestion = Some(congestion);
        exact.flow_odd = Some(validation.odd);
        let target_class = target.classify();
        if target_class.ergodic() {
            let t = tau_all(target, half_e())?;
            exact.target_tau_half_e = Some(t);
            if let Some(tx) = exact.tau_x {
                let denom = (t as f64 + 1.0) * (1.0 / (opts.eps * base.pi()[x])).ln();
                exact.comparison_ratio = Some(tx as f64 / denom);
            }
        }

        let mut reversible_ids = vec![
            (TheoremId::T8, Direction::Upper, "tau_x(M, eps)"),
            (TheoremId::T8HalfE, Direction::Upper, "tau_x(M, eps)"),
            (TheoremId::T10, Direction::Upper, "tau_x(M, eps)"),
            (TheoremId::O13, Direction::Upper, "tau_x(M, eps)"),
            (TheoremId::O14, Direction::Upper, "tau_x(lazy(M), eps)"),
        ];
        if opts.sweep {
            reversible_ids.push((TheoremId::T8Sweep, Direction::Upper, "tau_x(M, eps)"));
        }
        let both = ergodic && class.reversible && target_class.ergodic() && target_class.reversible;
        if both {
            entries.extend(comparison_reversible_with_sweep(
                base, target, flow, x, opts.eps, opts.delta, opts.sweep,
            )?);
        } else {
            let reason = if !(class.reversible && target_class.reversible) {
                "both chains must be reversible"
            } else {
                "both chains must be ergodic"
            };
            entries.extend(na_all(&reversible_ids, reason));
        }

        let product_flow = if ergodic {
            base.time_reversal()
                .and_then(|r| r.multiply(base))
                .and_then(|product| flows::build_canonical_flow(&product, target, false))
                .ok()
        } else {
            None
        };
        entries.extend(comparison_general(base, target, flow, product_flow.as_ref(), x, opts.eps)?);
    }

    entries.sort_by_key(|e| e.theorem);
    let verdict = if entries.iter().any(BoundEntry::violated) {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    Ok(BoundReport {
        chain: base.name().to_string(),
        target: target_name,
        from: base.labels()[x].clone(),
        epsilon: opts.eps,
        delta: opts.delta,
        classification: class,
        exact,
        entries,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators;

    #[test]
    fn entry_verdicts() {
        let e = BoundEntry::evaluate(TheoremId::T7, Direction::Upper, "q", 3.0, 3.0 + 5e-10);
        assert!(e.holds && e.applicable);
        let e = BoundEntry::evaluate(TheoremId::T7, Direction::Upper, "q", 3.0, 3.1);
        assert!(e.violated());
        let e = BoundEntry::evaluate(TheoremId::T5, Direction::Lower, "q", 2.0, 1.0);
        assert!(e.violated());
        let e = BoundEntry::evaluate(TheoremId::T22, Direction::Upper, "q", f64::INFINITY, 1.0);
        assert!(!e.applicable && !e.holds);
    }

    #[test]
    fn theorem_ids_serialize_and_sort() {
        assert_eq!(TheoremId::T8HalfE.label(), "T8(5)");
        assert_eq!(TheoremId::C20Discrete.label(), "C20a");
        assert!(TheoremId::C6 < TheoremId::T7);
        assert!(TheoremId::T19 < TheoremId::C20Discrete);
    }

    #[test]
    fn reference_time_lower_bound_on_two_state() {
        let c = generators::two_state(0.25).unwrap();
        let entries = spectral_bounds_reversible(&c, 0, half_e()).unwrap();
        let c6 = entries.iter().find(|e| e.theorem == TheoremId::C6).unwrap();
        assert!((c6.bound.unwrap() - 1.0).abs() < 1e-12);
        assert!(c6.holds);
    }

    #[test]
    fn spectral_upper_bound_two_state() {
        let c = generators::two_state(0.25).unwrap();
        let entries = spectral_bounds_reversible(&c, 0, 0.25).unwrap();
        let t7 = entries.iter().find(|e| e.theorem == TheoremId::T7).unwrap();
        assert!((t7.bound.unwrap() - 2.0 * 8.0_f64.ln()).abs() < 1e-12);
        assert!(t7.holds);
    }

    #[test]
    fn uniform_walk_lower_bound_is_zero() {
        let c = generators::uniform_walk(2).unwrap();
        let entries = spectral_bounds_reversible(&c, 0, 0.25).unwrap();
        assert!(entries[0].bound.unwrap().abs() < 1e-12);
        assert!(entries.iter().all(|e| e.holds));
    }

    #[test]
    fn bad_delta_rejected() {
        let c = generators::two_state(0.25).unwrap();
        let f = flows::build_canonical_flow(&c, &c, true).unwrap();
        for delta in [0.0, 0.5, 0.7] {
            assert!(matches!(
                comparison_reversible(&c, &c, &f, 0, 0.25, delta),
                Err(Error::BadDelta(_))
            ));
        }
    }

    #[test]
    fn wrong_flow_base_rejected() {
        let c = generators::two_state(0.25).unwrap();
        let other = generators::two_state(0.4).unwrap();
        let f = flows::build_canonical_flow(&other, &c, false).unwrap();
        assert!(matches!(
            comparison_general(&c, &c, &f, None, 0, 0.25),
            Err(Error::WrongFlowBase(_))
        ));
    }

    #[test]
    fn nonreversible_two_state_values() {
        let c = generators::two_state(0.25).unwrap();
        let entries = nonreversible_bounds(&c, 0, 0.25).unwrap();
        let t22 = &entries[0];
        assert!((t22.bound.unwrap() - 32.0_f64.ln() / 3.0).abs() < 1e-12);
        assert!(t22.holds);
    }

    #[test]
    fn reducible_input_has_no_report() {
        let c = generators::directed_cycle(3).unwrap();
        let product = c.time_reversal().unwrap().multiply(&c).unwrap();
        assert!(matches!(
            full_report(&product, None, ReportOptions::default()),
            Err(Error::NotIrreducible)
        ));
    }
}
