//! Dirichlet forms, variational constants, eigenstructure of reversible chains
//! and conductance.

use std::ops::Deref;

use serde::Serialize;

use crate::chain::{Chain, IDENTITY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// A real-valued function on the states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFunction(Vec<f64>);

impl StateFunction {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Indicator function of `set`.
    pub fn indicator(n: usize, set: &[usize]) -> Self {
        let mut values = vec![0.0; n];
        for &i in set {
            values[i] = 1.0;
        }
        Self(values)
    }

    pub fn is_constant(&self) -> bool {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = self.0.iter().copied().fold(f64::INFINITY, f64::min);
        max - min <= 0.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for StateFunction {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for StateFunction {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

fn pair_form(chain: &Chain, phi: &[f64], sign: f64) -> Result<f64> {
    check_len(chain.n(), phi.len())?;
    let (p, pi) = (chain.p(), chain.pi());
    let mut total = 0.0;
    for x in 0..chain.n() {
        for y in 0..chain.n() {
            let w = pi[x] * p[(x, y)];
            if w > 0.0 {
                let d = phi[x] + sign * phi[y];
                total += w * d * d;
            }
        }
    }
    Ok(0.5 * total)
}

/// `E(φ, φ) = ½ Σ π(x)P(x,y)(φ(x) − φ(y))²`.
pub fn dirichlet_form(chain: &Chain, phi: &[f64]) -> Result<f64> {
    pair_form(chain, phi, -1.0)
}

/// `F(φ, φ) = ½ Σ π(x)P(x,y)(φ(x) + φ(y))²`.
pub fn f_form(chain: &Chain, phi: &[f64]) -> Result<f64> {
    pair_form(chain, phi, 1.0)
}

/// Variance of `phi` under `pi`.
pub fn variance(pi: &[f64], phi: &[f64]) -> Result<f64> {
    check_len(pi.len(), phi.len())?;
    let mean: f64 = pi.iter().zip(phi).map(|(p, f)| p * f).sum();
    Ok(pi.iter().zip(phi).map(|(p, f)| p * (f - mean) * (f - mean)).sum())
}

/// Eigenvalues and orthonormal eigenvectors of `A = D P D⁻¹`,
/// `D = diag(π^{1/2})`, for a reversible chain.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    /// Sorted descending; `betas[0] = 1`.
    pub betas: Vec<f64>,
    /// `vectors[i]` is the eigenvector for `betas[i]`; `vectors[0] ≈ √π`.
    pub vectors: Vec<Vec<f64>>,
    pub beta_max: f64,
}

impl SpectralSummary {
    pub fn beta1(&self) -> f64 {
        self.betas[1]
    }

    pub fn beta_min(&self) -> f64 {
        *self.betas.last().expect("at least two eigenvalues")
    }
}

/// Eigendecomposition of any chain satisfying detailed balance, including
/// reducible or periodic ones (used for products such as `R(M)M`).
pub fn symmetric_spectrum(chain: &Chain) -> Result<SpectralSummary> {
    if chain.detailed_balance_residual() > IDENTITY_TOL {
        return Err(Error::NotReversible);
    }
    let n = chain.n();
    let sqrt_pi: Vec<f64> = chain.pi().iter().map(|v| v.sqrt()).collect();
    let a = Matrix::from_fn(n, n, |i, j| sqrt_pi[i] * chain.p()[(i, j)] / sqrt_pi[j]);
    let eig = linalg::jacobi_eigen(&a)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.values[j].total_cmp(&eig.values[i]));
    let betas: Vec<f64> = order.iter().map(|&i| eig.values[i]).collect();
    let vectors: Vec<Vec<f64>> = order
        .iter()
        .enumerate()
        .map(|(rank, &col)| {
            let mut v: Vec<f64> = (0..n).map(|k| eig.vectors[(k, col)]).collect();
            // Fix the sign: the top vector points along √π, the others have a
            // positive largest-magnitude entry.
            let flip = if rank == 0 {
                v.iter().zip(&sqrt_pi).map(|(a, b)| a * b).sum::<f64>() < 0.0
            } else {
                let k = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap();
                v[k] < 0.0
            };
            if flip {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();
    let beta_max = betas[1].max(betas[n - 1].abs());
    Ok(SpectralSummary {
        betas,
        vectors,
        beta_max,
    })
}

/// Eigendecomposition of an ergodic reversible chain.
pub fn eigendecompose(chain: &Chain) -> Result<SpectralSummary> {
    let class = chain.classify();
    if !class.ergodic() {
        return Err(Error::NotErgodic);
    }
    if !class.reversible {
        return Err(Error::NotReversible);
    }
    symmetric_spectrum(chain)
}

/// Optimal Poincaré constant λ₁ and its bottom-of-spectrum companion λ_{N−1}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareConstants {
    pub lambda1: f64,
    pub lambda_n1: f64,
}

/// λ₁ and λ_{N−1} of an irreducible chain.
///
/// Non-reversible chains are handled through their additive
/// reversibilization, which has the same Dirichlet form and the same
/// `F`-form.
pub fn lambda_constants(chain: &Chain) -> Result<PoincareConstants> {
    let class = chain.classify();
    if !class.irreducible {
        return Err(Error::NotErgodic);
    }
    let summary = if class.reversible {
        symmetric_spectrum(chain)?
    } else {
        symmetric_spectrum(&chain.reversibilize()?)?
    };
    Ok(PoincareConstants {
        lambda1: 1.0 - summary.beta1(),
        lambda_n1: 1.0 + summary.beta_min(),
    })
}

/// `1 − β₁` for a chain satisfying detailed balance; zero when the chain
/// is reducible (β₁ = 1).
pub fn spectral_gap_reversible(chain: &Chain) -> Result<f64> {
    let summary = symmetric_spectrum(chain)?;
    Ok((1.0 - summary.beta1()).max(0.0))
}

/// Rebuilds `Pⁿ` from the spectral representation
/// `Pⁿ(j,k) = π(k) + √(π_k/π_j) Σ_{i≥1} β_iⁿ e_j⁽ⁱ⁾ e_k⁽ⁱ⁾`.
pub fn reconstruct_power(summary: &SpectralSummary, pi: &[f64], n: u32) -> Matrix {
    let size = pi.len();
    let powers: Vec<f64> = summary.betas.iter().map(|b| b.powi(n as i32)).collect();
    Matrix::from_fn(size, size, |j, k| {
        let tail: f64 = (1..size)
            .map(|i| powers[i] * summary.vectors[i][j] * summary.vectors[i][k])
            .sum();
        pi[k] + (pi[k] / pi[j]).sqrt() * tail
    })
}

pub const MAX_CONDUCTANCE_STATES: usize = 24;

/// Result of exhaustive conductance minimization.
#[derive(Debug, Clone, Serialize)]
pub struct Conductance {
    /// `Φ(M) = min Φ_S` over `0 < π(S) ≤ ½`.
    pub phi: f64,
    /// Asymmetric variant `Φ'(M) = min Φ_S π(S̄)`.
    pub phi_asym: f64,
    /// Minimizing set for `phi`, taken on the side with `π(S) ≤ ½`.
    pub argmin: Vec<usize>,
}

/// Both forms of `Φ_S`: the single-sum `Σ_{S→S̄} π P / (π(S)π(S̄))` and the
/// symmetric two-sum version. They agree for any stationary `π`.
pub fn set_conductance(chain: &Chain, set: &[usize]) -> (f64, f64) {
    let n = chain.n();
    let mut inside = vec![false; n];
    for &i in set {
        inside[i] = true;
    }
    let (p, pi) = (chain.p(), chain.pi());
    let pi_s: f64 = (0..n).filter(|&i| inside[i]).map(|i| pi[i]).sum();
    let pi_c: f64 = (0..n).filter(|&i| !inside[i]).map(|i| pi[i]).sum();
    let mut out = 0.0;
    let mut back = 0.0;
    for i in 0..n {
        for j in 0..n {
            if inside[i] && !inside[j] {
                out += pi[i] * p[(i, j)];
            } else if !inside[i] && inside[j] {
                back += pi[i] * p[(i, j)];
            }
        }
    }
    (out / (pi_s * pi_c), (out + back) / (2.0 * pi_s * pi_c))
}

/// Exhaustive conductance over all cuts, for chains with at most 24 states.
///
/// Subsets containing state 0 are enumerated in Gray-code order with O(N)
/// incremental updates of the cut weight; each cut is evaluated on its side
/// with `π(S) ≤ ½`. Ties go to the smallest bitmask.
pub fn conductance(chain: &Chain) -> Result<Conductance> {
    let n = chain.n();
    if n > MAX_CONDUCTANCE_STATES {
        return Err(Error::TooLarge {
            n,
            max: MAX_CONDUCTANCE_STATES,
        });
    }
    if !chain.classify().irreducible {
        return Err(Error::NotErgodic);
    }
    let (p, pi) = (chain.p(), chain.pi());
    let flow = |i: usize, j: usize| pi[i] * p[(i, j)];

    let recompute = |inside: &[bool]| -> (f64, f64) {
        let mut pi_s = 0.0;
        let mut cut = 0.0;
        for i in 0..n {
            if inside[i] {
                pi_s += pi[i];
                for j in 0..n {
                    if !inside[j] {
                        cut += flow(i, j);
                    }
                }
            }
        }
        (pi_s, cut)
    };

    let m = n - 1;
    let mut inside = vec![false; n];
    inside[0] = true;
    let (mut pi_s, mut cut) = recompute(&inside);
    let mut mask: u32 = 1;

    let tol = 1e-12;
    let mut best = (f64::INFINITY, u32::MAX);
    let mut best_asym = f64::INFINITY;

    let mut consider = |mask: u32, pi_s: f64, cut: f64| {
        let pi_c = 1.0 - pi_s;
        if pi_c <= 0.0 || mask == (1u32 << n) - 1 {
            return;
        }
        let value = cut / (pi_s * pi_c);
        let small = pi_s.min(pi_c);
        let asym = cut / small;
        let small_mask = if pi_s <= 0.5 { mask } else { !mask & ((1u32 << n) - 1) };
        if value < best.0 - tol * best.0.abs().max(1.0)
            || ((value - best.0).abs() <= tol * best.0.abs().max(1.0) && small_mask < best.1)
        {
            best = (value.min(best.0), small_mask);
        }
        best_asym = best_asym.min(asym);
    };

    consider(mask, pi_s, cut);
    for g in 1u64..(1u64 << m) {
        let k = g.trailing_zeros() as usize + 1;
        if inside[k] {
            // remove k
            for j in 0..n {
                if !inside[j] {
                    cut -= flow(k, j);
                } else if j != k {
                    cut += flow(j, k);
                }
            }
            inside[k] = false;
            pi_s -= pi[k];
        } else {
            for j in 0..n {
                if !inside[j] && j != k {
                    cut += flow(k, j);
                } else if inside[j] {
                    cut -= flow(j, k);
                }
            }
            inside[k] = true;
            pi_s += pi[k];
        }
        mask ^= 1 << k;
        if g % 4096 == 0 {
            (pi_s, cut) = recompute(&inside);
        }
        consider(mask, pi_s, cut);
    }

    let argmin: Vec<usize> = (0..n).filter(|&i| best.1 & (1 << i) != 0).collect();
    let (phi, _) = set_conductance(chain, &argmin);
    Ok(Conductance {
        phi,
        phi_asym: best_asym,
        argmin,
    })
}
