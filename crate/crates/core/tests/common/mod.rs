//! Independent reference computations used by the integration tests.
//!
//! Nothing here calls the eigensolver, the mixing-time routines or the
//! congestion code of the library; each quantity is recomputed from its
//! definition.

#![allow(dead_code)]

use mcompare::generators;
use mcompare::linalg::Matrix;
use mcompare::{Chain, Flow};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A standard-normal test function on `n` states.
pub fn random_phi(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `½ Σ_x Σ_y π(x)π(y)(φ(x) − φ(y))²`.
pub fn pairwise_variance(pi: &[f64], phi: &[f64]) -> f64 {
    let mut s = 0.0;
    for x in 0..pi.len() {
        for y in 0..pi.len() {
            s += pi[x] * pi[y] * (phi[x] - phi[y]).powi(2);
        }
    }
    0.5 * s
}

/// `½ Σ π(x)P(x,y)(φ(x) − φ(y))²`.
pub fn dirichlet(chain: &Chain, phi: &[f64]) -> f64 {
    let (p, pi) = (chain.p(), chain.pi());
    let mut s = 0.0;
    for x in 0..chain.n() {
        for y in 0..chain.n() {
            s += pi[x] * p[(x, y)] * (phi[x] - phi[y]).powi(2);
        }
    }
    0.5 * s
}

/// `½ Σ π(x)P(x,y)(φ(x) + φ(y))²`.
pub fn f_form(chain: &Chain, phi: &[f64]) -> f64 {
    let (p, pi) = (chain.p(), chain.pi());
    let mut s = 0.0;
    for x in 0..chain.n() {
        for y in 0..chain.n() {
            s += pi[x] * p[(x, y)] * (phi[x] + phi[y]).powi(2);
        }
    }
    0.5 * s
}

pub fn naive_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.rows();
    let m = b.cols();
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..a.cols() {
                s += a[(i, k)] * b[(k, j)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// `P⁰, P¹, …, P^t_max` by repeated multiplication.
pub fn powers(p: &Matrix, t_max: usize) -> Vec<Matrix> {
    let mut out = vec![Matrix::identity(p.rows())];
    for t in 0..t_max {
        let next = naive_mul(&out[t], p);
        out.push(next);
    }
    out
}

/// Total variation as `max_A |θ₁(A) − θ₂(A)|` over all subsets.
pub fn tv_by_subsets(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    assert!(n <= 20);
    let mut best: f64 = 0.0;
    for mask in 0u32..(1 << n) {
        let mut d = 0.0;
        for i in 0..n {
            if mask & (1 << i) != 0 {
                d += a[i] - b[i];
            }
        }
        best = best.max(d.abs());
    }
    best
}

/// `½ Σ |θ₁ − θ₂|`.
pub fn tv_half_l1(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// First `t > 0` with `‖P^t(x,·) − π‖ ≤ ε`, from direct matrix powers.
pub fn mixing_time_by_powers(chain: &Chain, x: usize, eps: f64, t_cap: usize) -> Option<u64> {
    let mut row = vec![0.0; chain.n()];
    row[x] = 1.0;
    for t in 1..=t_cap {
        let mut next = vec![0.0; chain.n()];
        for (i, &r) in row.iter().enumerate() {
            for (j, v) in next.iter_mut().enumerate() {
                *v += r * chain.p()[(i, j)];
            }
        }
        row = next;
        if tv_half_l1(&row, chain.pi()) <= eps {
            return Some(t as u64);
        }
    }
    None
}

/// `d(t) = max_x ‖P^t(x,·) − π‖` for `t = 0..=t_max`.
pub fn d_by_powers(chain: &Chain, t_max: usize) -> Vec<f64> {
    powers(chain.p(), t_max)
        .iter()
        .map(|m| {
            (0..chain.n())
                .map(|x| tv_half_l1(m.row(x), chain.pi()))
                .fold(0.0, f64::max)
        })
        .collect()
}

/// `exp(t(P − I)) = Σ_k e^{−t} tᵏ/k! Pᵏ`, truncated once the Poisson tail
/// is below `1e-16`.
pub fn uniformized_exp(p: &Matrix, t: f64) -> Matrix {
    let n = p.rows();
    let mut out = Matrix::zeros(n, n);
    let mut term = Matrix::identity(n);
    let mut weight = (-t).exp();
    let mut mass = 0.0;
    let mut k = 0u32;
    while 1.0 - mass > 1e-16 && k < 10_000 {
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += weight * term[(i, j)];
            }
        }
        mass += weight;
        k += 1;
        weight *= t / k as f64;
        term = naive_mul(&term, p);
        if weight == 0.0 && mass > 0.0 {
            break;
        }
    }
    out
}

/// Conductance by direct enumeration of every cut with `0 < π(S) ≤ ½`.
pub fn conductance_by_cuts(chain: &Chain) -> f64 {
    let n = chain.n();
    let (p, pi) = (chain.p(), chain.pi());
    let mut best = f64::INFINITY;
    for mask in 1u32..((1 << n) - 1) {
        let inside = |i: usize| mask & (1 << i) != 0;
        let pi_s: f64 = (0..n).filter(|&i| inside(i)).map(|i| pi[i]).sum();
        if pi_s > 0.5 + 1e-15 {
            continue;
        }
        let mut cut = 0.0;
        for i in (0..n).filter(|&i| inside(i)) {
            for j in (0..n).filter(|&j| !inside(j)) {
                cut += pi[i] * p[(i, j)];
            }
        }
        best = best.min(cut / (pi_s * (1.0 - pi_s)));
    }
    best
}

/// `A(f) = max_{(z,w)} (1/(π(z)P(z,w))) Σ_γ r_{z,w}(γ) |γ| f(γ)`, summing
/// over paths and edges directly.
pub fn congestion_by_paths(flow: &Flow) -> f64 {
    let base = flow.base();
    let n = base.n();
    let mut load = vec![vec![0.0; n]; n];
    for path in flow.paths() {
        let len = (path.states.len() - 1) as f64;
        for hop in path.states.windows(2) {
            load[hop[0]][hop[1]] += len * path.mass;
        }
    }
    let mut best: f64 = 0.0;
    for z in 0..n {
        for w in 0..n {
            if load[z][w] > 0.0 {
                best = best.max(load[z][w] / (base.pi()[z] * base.p()[(z, w)]));
            }
        }
    }
    best
}

/// Quadratic-form matrices of `ℰ`, `𝓕` and `var_π` so that
/// `ℰ(φ,φ) = φᵀEφ` and so on.
pub fn form_matrices(chain: &Chain) -> (Matrix, Matrix, Matrix) {
    let n = chain.n();
    let (p, pi) = (chain.p(), chain.pi());
    let mut e = Matrix::zeros(n, n);
    let mut f = Matrix::zeros(n, n);
    let mut v = Matrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            let sym = 0.5 * (pi[x] * p[(x, y)] + pi[y] * p[(y, x)]);
            let diag = if x == y { pi[x] } else { 0.0 };
            e[(x, y)] = diag - sym;
            f[(x, y)] = diag + sym;
            v[(x, y)] = diag - pi[x] * pi[y];
        }
    }
    (e, f, v)
}

fn quad(m: &Matrix, a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        for j in 0..b.len() {
            s += a[i] * m[(i, j)] * b[j];
        }
    }
    s
}

/// Minimizes `φᵀNφ / φᵀDφ` by exact line searches along coordinates,
/// restarting from `starts` random points.
pub fn rayleigh_coordinate_descent(num: &Matrix, den: &Matrix, starts: usize, seed: u64) -> f64 {
    let n = num.rows();
    let mut rng = rng(seed);
    let mut best = f64::INFINITY;
    for _ in 0..starts {
        let mut phi = random_phi(&mut rng, n);
        let mut value = quad(num, &phi, &phi) / quad(den, &phi, &phi);
        for _sweep in 0..20_000 {
            let before = value;
            let mut n_phi = num.mul_vec(&phi);
            let mut d_phi = den.mul_vec(&phi);
            let mut a = quad(num, &phi, &phi);
            let mut d0 = quad(den, &phi, &phi);
            for i in 0..n {
                let (b, c) = (n_phi[i], num[(i, i)]);
                let (e, f) = (d_phi[i], den[(i, i)]);
                let ratio = |t: f64| (a + 2.0 * b * t + c * t * t) / (d0 + 2.0 * e * t + f * t * t);
                let qa = c * e - b * f;
                let qb = c * d0 - a * f;
                let qc = b * d0 - a * e;
                let mut candidates = Vec::new();
                if qa.abs() > 1e-300 {
                    let disc = qb * qb - 4.0 * qa * qc;
                    if disc >= 0.0 {
                        let q = -0.5 * (qb + qb.signum() * disc.sqrt());
                        candidates.push(q / qa);
                        if q != 0.0 {
                            candidates.push(qc / q);
                        }
                    }
                } else if qb.abs() > 1e-300 {
                    candidates.push(-qc / qb);
                }
                let mut step = 0.0;
                let mut step_value = ratio(0.0);
                for t in candidates {
                    let denom = d0 + 2.0 * e * t + f * t * t;
                    let r = ratio(t);
                    if t.is_finite() && denom > 1e-14 * d0 && r < step_value {
                        step = t;
                        step_value = r;
                    }
                }
                if step != 0.0 {
                    phi[i] += step;
                    a += 2.0 * b * step + c * step * step;
                    d0 += 2.0 * e * step + f * step * step;
                    for j in 0..n {
                        n_phi[j] += step * num[(j, i)];
                        d_phi[j] += step * den[(j, i)];
                    }
                }
            }
            let scale = d0.sqrt();
            phi.iter_mut().for_each(|v| *v /= scale);
            value = quad(num, &phi, &phi) / quad(den, &phi, &phi);
            if before - value <= 1e-15 * before.abs().max(1e-3) {
                break;
            }
        }
        best = best.min(value);
    }
    best
}

/// `min ℰ/var` and `min 𝓕/var` over non-constant φ by coordinate descent.
pub fn poincare_by_descent(chain: &Chain, starts: usize, seed: u64) -> (f64, f64) {
    let (e, f, v) = form_matrices(chain);
    (
        rayleigh_coordinate_descent(&e, &v, starts, seed),
        rayleigh_coordinate_descent(&f, &v, starts, seed ^ 0x5eed),
    )
}

/// Reversible chain with the same stationary distribution as `chain`,
/// built from uniform proposals.
pub fn metropolis_partner(chain: &Chain) -> Chain {
    let n = chain.n();
    let proposal = Matrix::from_fn(n, n, |_, _| 1.0 / n as f64);
    generators::metropolis(format!("metropolis({})", chain.name()), chain.pi(), &proposal).unwrap()
}

pub fn random_size(seed: u64, lo: usize, hi: usize) -> usize {
    rng(seed ^ 0xa11ce).random_range(lo..=hi)
}
