//! Finite Markov chains and the chain-level constructions used by the
//! comparison machinery: stationary distribution, classification, time
//! reversal, products, lazy versions and additive reversibilization.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Tolerance for validating user-supplied transition matrices.
pub const INPUT_TOL: f64 = 1e-9;
/// Tolerance for identity checks (detailed balance, involutions).
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for `pi · P = pi`.
pub const STATIONARY_TOL: f64 = 1e-10;

/// A finite, irreducible-or-better Markov chain with its stationary distribution.
///
/// Chains are immutable once built; every constructor validates stochasticity
/// and stationarity.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    name: String,
    labels: Vec<String>,
    p: Matrix,
    pi: Vec<f64>,
}

/// Structural properties of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainClass {
    pub irreducible: bool,
    /// gcd of closed-walk lengths; 0 when the chain is reducible.
    pub period: u64,
    pub aperiodic: bool,
    pub reversible: bool,
    /// `min_x P(x, x)`.
    pub min_self_loop: f64,
}

impl ChainClass {
    pub fn ergodic(&self) -> bool {
        self.irreducible && self.aperiodic
    }
}

fn validate_matrix(labels: &[String], p: &Matrix) -> Result<()> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            expected: p.rows(),
            found: p.cols(),
        });
    }
    let n = p.rows();
    if n < 2 {
        return Err(Error::TooFewStates(n));
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: labels.len(),
        });
    }
    for i in 0..n {
        let row = p.row(i);
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonStochastic(format!("entry ({i}, {j}) is not finite")));
        }
        if let Some(j) = row.iter().position(|&v| !(0.0..=1.0 + INPUT_TOL).contains(&v)) {
            return Err(Error::NonStochastic(format!(
                "entry ({i}, {j}) = {} is outside [0, 1]",
                row[j]
            )));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > INPUT_TOL {
            return Err(Error::NonStochastic(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

/// Maximum componentwise residual of `pi · P - pi`.
pub fn stationarity_residual(p: &Matrix, pi: &[f64]) -> f64 {
    p.left_mul_vec(pi)
        .iter()
        .zip(pi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

fn reachable(p: &Matrix, start: usize, forward: bool) -> Vec<bool> {
    let n = p.rows();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            let w = if forward { p[(u, v)] } else { p[(v, u)] };
            if w > 0.0 && !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    seen
}

fn strongly_connected(p: &Matrix) -> bool {
    reachable(p, 0, true).into_iter().all(|b| b) && reachable(p, 0, false).into_iter().all(|b| b)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Solves `pi (P - I) = 0`, `sum(pi) = 1` with the last equation replaced by
/// the normalization row.
fn solve_stationary(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut a = Matrix::from_fn(n, n, |i, j| p[(j, i)] - if i == j { 1.0 } else { 0.0 });
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let mut pi = linalg::solve(&a, &b).ok_or(Error::SingularStationary)?;
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(pi)
}

impl Chain {
    /// Validates `p` and computes the stationary distribution by a dense
    /// linear solve.
    pub fn new(name: impl Into<String>, labels: Vec<String>, p: Matrix) -> Result<Self> {
        validate_matrix(&labels, &p)?;
        let pi = solve_stationary(&p)?;
        // A unique stationary distribution with full support exists only for
        // irreducible chains; transient states show up as (near-)zero mass.
        let (state, mass) = pi
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("n >= 2");
        if mass <= 0.0 || !strongly_connected(&p) {
            return Err(Error::NonPositiveStationary { state, mass });
        }
        let residual = stationarity_residual(&p, &pi);
        if residual > STATIONARY_TOL {
            return Err(Error::NonStochastic(format!(
                "stationary solve residual {residual:e} exceeds {STATIONARY_TOL:e}"
            )));
        }
        Ok(Self {
            name: name.into(),
            labels,
            p,
            pi,
        })
    }

    /// Builds a chain whose stationary distribution is already known (for
    /// derived chains such as products, which may be reducible).
    pub fn with_stationary(
        name: impl Into<String>,
        labels: Vec<String>,
        p: Matrix,
        pi: Vec<f64>,
    ) -> Result<Self> {
        validate_matrix(&labels, &p)?;
        if pi.len() != p.rows() {
            return Err(Error::DimensionMismatch {
                expected: p.rows(),
                found: pi.len(),
            });
        }
        if let Some((state, &mass)) = pi.iter().enumerate().find(|(_, &m)| m <= 0.0) {
            return Err(Error::NonPositiveStationary { state, mass });
        }
        let total: f64 = pi.iter().sum();
        if (total - 1.0).abs() > IDENTITY_TOL {
            return Err(Error::NonStochastic(format!("stationary vector sums to {total}")));
        }
        let residual = stationarity_residual(&p, &pi);
        if residual > STATIONARY_TOL {
            return Err(Error::NonStochastic(format!(
                "supplied distribution is not stationary (residual {residual:e})"
            )));
        }
        Ok(Self {
            name: name.into(),
            labels,
            p,
            pi,
        })
    }

    /// Builds a chain labelled `0..n-1`.
    pub fn from_rows(name: impl Into<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = Matrix::from_rows(rows)?;
        let labels = (0..p.rows()).map(|i| i.to_string()).collect();
        Self::new(name, labels, p)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.p.rows()
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    /// Resolves a state given either by label or by numeric index.
    pub fn resolve_state(&self, spec: &str) -> Result<usize> {
        if let Ok(i) = self.index_of(spec) {
            return Ok(i);
        }
        match spec.parse::<usize>() {
            Ok(i) if i < self.n() => Ok(i),
            _ => Err(Error::UnknownState(spec.to_string())),
        }
    }

    pub fn check_state(&self, x: usize) -> Result<()> {
        if x < self.n() {
            Ok(())
        } else {
            Err(Error::StateOutOfRange {
                index: x,
                n: self.n(),
            })
        }
    }

    /// `E*(M)`: all ordered pairs (including loops) with positive probability.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| (0..n).filter(move |&j| self.p[(i, j)] > 0.0).map(move |j| (i, j)))
    }

    /// Rate matrix `Q = P - I` of the continuization.
    pub fn rate_matrix(&self) -> Matrix {
        self.p.sub(&Matrix::identity(self.n()))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn classify(&self) -> ChainClass {
        let n = self.n();
        let irreducible = strongly_connected(&self.p);
        let period = if irreducible { self.period() } else { 0 };
        let reversible = irreducible && self.detailed_balance_residual() <= IDENTITY_TOL;
        let min_self_loop = (0..n).map(|i| self.p[(i, i)]).fold(f64::INFINITY, f64::min);
        ChainClass {
            irreducible,
            period,
            aperiodic: period == 1,
            reversible,
            min_self_loop,
        }
    }

    /// Period of an irreducible chain: gcd of `d(u) + 1 - d(v)` over edges,
    /// with `d` the BFS depth from state 0.
    fn period(&self) -> u64 {
        let n = self.n();
        let mut depth = vec![usize::MAX; n];
        depth[0] = 0;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if self.p[(u, v)] > 0.0 && depth[v] == usize::MAX {
                    depth[v] = depth[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.edges().fold(0, |g, (u, v)| {
            let diff = (depth[u] as i64 + 1 - depth[v] as i64).unsigned_abs();
            gcd(g, diff)
        })
    }

    /// `max |pi(x)P(x,y) - pi(y)P(y,x)|`.
    pub fn detailed_balance_residual(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0_f64;
        for x in 0..n {
            for y in x + 1..n {
                let r = (self.pi[x] * self.p[(x, y)] - self.pi[y] * self.p[(y, x)]).abs();
                worst = worst.max(r);
            }
        }
        worst
    }

    pub fn is_reversible(&self) -> bool {
        self.classify().reversible
    }

    fn require_irreducible(&self) -> Result<()> {
        if strongly_connected(&self.p) {
            Ok(())
        } else {
            Err(Error::NotIrreducible)
        }
    }

    pub fn require_ergodic(&self) -> Result<ChainClass> {
        let class = self.classify();
        if class.ergodic() {
            Ok(class)
        } else {
            Err(Error::NotErgodic)
        }
    }

    /// Time reversal `R(P)(x, y) = pi(y)/pi(x) · P(y, x)`.
    pub fn time_reversal(&self) -> Result<Chain> {
        self.require_irreducible()?;
        let pi = &self.pi;
        let p = Matrix::from_fn(self.n(), self.n(), |x, y| pi[y] / pi[x] * self.p[(y, x)]);
        Chain::with_stationary(format!("R({})", self.name), self.labels.clone(), p, pi.clone())
    }

    /// One step of `self` followed by one step of `other`.
    pub fn multiply(&self, other: &Chain) -> Result<Chain> {
        if self.n() != other.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: other.n(),
            });
        }
        let max_diff = max_abs_diff(&self.pi, &other.pi);
        if max_diff > STATIONARY_TOL {
            return Err(Error::StationaryMismatch { max_diff });
        }
        let p = self.p.mul(&other.p);
        Chain::with_stationary(
            format!("{}·{}", self.name, other.name),
            self.labels.clone(),
            p,
            self.pi.clone(),
        )
    }

    /// `P_ZZ = (I + P) / 2`.
    pub fn lazy(&self) -> Chain {
        let p = Matrix::identity(self.n()).add(&self.p).scale(0.5);
        Chain::with_stationary(format!("lazy({})", self.name), self.labels.clone(), p, self.pi.clone())
            .expect("lazy version of a valid chain is valid")
    }

    /// Additive reversibilization `(P + R(P)) / 2`.
    pub fn reversibilize(&self) -> Result<Chain> {
        let reversal = self.time_reversal()?;
        let p = self.p.add(reversal.p()).scale(0.5);
        Chain::with_stationary(format!("hat({})", self.name), self.labels.clone(), p, self.pi.clone())
    }

    /// Reads a chain from its JSON representation.
    pub fn from_json(text: &str) -> Result<Chain> {
        let file: ChainFile = serde_json::from_str(text)?;
        file.into_chain()
    }

    pub fn to_json(&self, metadata: Option<serde_json::Value>) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ChainFile::from_chain(self, metadata))?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Chain> {
        Chain::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>, metadata: Option<serde_json::Value>) -> Result<()> {
        fs::write(path, self.to_json(metadata)? + "\n")?;
        Ok(())
    }
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// On-disk chain format: `{"name", "states", "P"}` plus optional metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainFile {
    pub name: String,
    pub states: Vec<String>,
    #[serde(rename = "P")]
    pub p: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<serde_json::Value>,
}

impl ChainFile {
    pub fn from_chain(chain: &Chain, metadata: Option<serde_json::Value>) -> Self {
        Self {
            name: chain.name.clone(),
            states: chain.labels.clone(),
            p: chain.p.to_rows(),
            metadata,
        }
    }

    pub fn into_chain(self) -> Result<Chain> {
        let p = Matrix::from_rows(&self.p)?;
        Chain::new(self.name, self.states, p)
    }
}
