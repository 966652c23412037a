//! Chain generators for the standard examples and for seeded random chains.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::flows::{Flow, FlowPath};
use crate::linalg::Matrix;

/// What to generate.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `P(a,a) = P(b,b) = δ`, `P(a,b) = P(b,a) = 1 − δ`.
    TwoState { delta: f64 },
    /// The 2n-state lifted walk on `{−(n−1), …, n}`: step `i → i+1` with
    /// probability `1 − 1/n` and flip `i → −i` with probability `1/n`.
    Dhn { n: usize },
    /// Every row uniform over all `n` states.
    UniformWalk { n: usize },
    /// Deterministic directed cycle of length `k`.
    DirectedCycle { k: usize },
    /// Metropolis chain on a random positive weight vector with uniform
    /// proposals.
    RandomReversible { n: usize, seed: u64 },
    LazyOf { of: Box<GeneratorSpec> },
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GeneratorSpec::TwoState { delta } if !(delta > 0.0 && delta < 1.0) => {
                Err(Error::BadParams(format!("two_state needs 0 < delta < 1, got {delta}")))
            }
            GeneratorSpec::Dhn { n } if n < 2 => {
                Err(Error::BadParams(format!("dhn needs n >= 2, got {n}")))
            }
            GeneratorSpec::UniformWalk { n } | GeneratorSpec::RandomReversible { n, .. } if n < 2 => {
                Err(Error::BadParams(format!("need at least 2 states, got {n}")))
            }
            GeneratorSpec::DirectedCycle { k } if k < 2 => {
                Err(Error::BadParams(format!("directed_cycle needs k >= 2, got {k}")))
            }
            GeneratorSpec::LazyOf { of: ref inner } => inner.validate(),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> String {
        match self {
            GeneratorSpec::TwoState { delta } => format!("two_state(delta={delta})"),
            GeneratorSpec::Dhn { n } => format!("dhn(n={n})"),
            GeneratorSpec::UniformWalk { n } => format!("uniform_walk(N={n})"),
            GeneratorSpec::DirectedCycle { k } => format!("directed_cycle(k={k})"),
            GeneratorSpec::RandomReversible { n, seed } => {
                format!("random_reversible(N={n},seed={seed})")
            }
            GeneratorSpec::LazyOf { of: inner } => format!("lazy({})", inner.name()),
        }
    }

    /// Seed used, if the generator is random.
    pub fn seed(&self) -> Option<u64> {
        match self {
            GeneratorSpec::RandomReversible { seed, .. } => Some(*seed),
            GeneratorSpec::LazyOf { of: inner } => inner.seed(),
            _ => None,
        }
    }
}

fn numbered(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

pub fn generate(spec: &GeneratorSpec) -> Result<Chain> {
    spec.validate()?;
    let name = spec.name();
    match *spec {
        GeneratorSpec::TwoState { delta } => two_state(delta),
        GeneratorSpec::Dhn { n } => dhn(n),
        GeneratorSpec::UniformWalk { n } => {
            let p = Matrix::from_fn(n, n, |_, _| 1.0 / n as f64);
            Chain::new(name, numbered(n), p)
        }
        GeneratorSpec::DirectedCycle { k } => {
            let p = Matrix::from_fn(k, k, |i, j| if j == (i + 1) % k { 1.0 } else { 0.0 });
            Chain::new(name, numbered(k), p)
        }
        GeneratorSpec::RandomReversible { n, seed } => random_reversible(n, seed),
        GeneratorSpec::LazyOf { of: ref inner } => Ok(generate(inner)?.lazy().renamed(name)),
    }
}

pub fn two_state(delta: f64) -> Result<Chain> {
    GeneratorSpec::TwoState { delta }.validate()?;
    let p = Matrix::from_rows(&[vec![delta, 1.0 - delta], vec![1.0 - delta, delta]])?;
    Chain::new(
        GeneratorSpec::TwoState { delta }.name(),
        vec!["a".into(), "b".into()],
        p,
    )
}

pub fn uniform_walk(n: usize) -> Result<Chain> {
    generate(&GeneratorSpec::UniformWalk { n })
}

pub fn directed_cycle(k: usize) -> Result<Chain> {
    generate(&GeneratorSpec::DirectedCycle { k })
}

/// Labels `−(n−1) … n` in ascending order; index `i` holds value `i − (n−1)`.
pub fn dhn(n: usize) -> Result<Chain> {
    GeneratorSpec::Dhn { n }.validate()?;
    let size = 2 * n;
    let offset = n as i64 - 1;
    let to_index = |value: i64| -> usize {
        // bring value into the window −(n−1)..=n modulo 2n
        let m = size as i64;
        let r = (value + offset).rem_euclid(m);
        r as usize
    };
    let step = 1.0 - 1.0 / n as f64;
    let flip = 1.0 / n as f64;
    let mut p = Matrix::zeros(size, size);
    for i in 0..size {
        let value = i as i64 - offset;
        p[(i, to_index(value + 1))] += step;
        p[(i, to_index(-value))] += flip;
    }
    let labels = (0..size).map(|i| (i as i64 - offset).to_string()).collect();
    Chain::new(GeneratorSpec::Dhn { n }.name(), labels, p)
}

/// Metropolis chain for target weights `w` under a symmetric proposal
/// matrix `q` (zero diagonal allowed): `P(x,y) = q(x,y) min(1, w_y/w_x)` off
/// the diagonal, rejected mass stays put.
pub fn metropolis(name: impl Into<String>, weights: &[f64], proposal: &Matrix) -> Result<Chain> {
    let n = weights.len();
    if proposal.rows() != n || proposal.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: proposal.rows(),
        });
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(Error::BadParams("Metropolis weights must be positive".into()));
    }
    let mut p = Matrix::zeros(n, n);
    for x in 0..n {
        let mut moved = 0.0;
        for y in 0..n {
            if x != y {
                let v = proposal[(x, y)] * (weights[y] / weights[x]).min(1.0);
                p[(x, y)] = v;
                moved += v;
            }
        }
        p[(x, x)] = (1.0 - moved).max(0.0);
    }
    Chain::new(name, numbered(n), p)
}

fn random_weights(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(0.1..1.0)).collect()
}

/// Metropolis chain on random weights in `[0.1, 1)` with uniform proposals.
pub fn random_reversible(n: usize, seed: u64) -> Result<Chain> {
    let spec = GeneratorSpec::RandomReversible { n, seed };
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = random_weights(&mut rng, n);
    let proposal = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 / (n - 1) as f64 });
    metropolis(spec.name(), &weights, &proposal)
}

/// Two reversible chains with the same stationary distribution: a Metropolis
/// chain with sparse proposals (a ring plus random chords) and one with
/// uniform proposals, both targeting the same random weights.
pub fn random_reversible_pair(n: usize, seed: u64) -> Result<(Chain, Chain)> {
    if n < 3 {
        return Err(Error::BadParams(format!("need at least 3 states, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = random_weights(&mut rng, n);
    let mut adjacency = Matrix::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        adjacency[(i, j)] = 1.0;
        adjacency[(j, i)] = 1.0;
    }
    for _ in 0..n / 2 {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
    }
    let max_degree = (0..n)
        .map(|i| adjacency.row(i).iter().sum::<f64>())
        .fold(0.0, f64::max);
    let sparse = adjacency.scale(1.0 / (max_degree + 1.0));
    let uniform = Matrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 / (n - 1) as f64 });
    Ok((
        metropolis(format!("sparse_metropolis(N={n},seed={seed})"), &weights, &sparse)?,
        metropolis(format!("uniform_metropolis(N={n},seed={seed})"), &weights, &uniform)?,
    ))
}

/// Random ergodic chain that is (almost surely) not reversible: each row has
/// a random support of size at least two containing the successor on a
/// directed ring, with random weights.
pub fn random_nonreversible(n: usize, seed: u64) -> Result<Chain> {
    if n < 3 {
        return Err(Error::BadParams(format!("need at least 3 states, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        p[(i, (i + 1) % n)] = rng.random_range(0.5..1.5);
        for j in 0..n {
            if j != (i + 1) % n && rng.random_bool(0.4) {
                p[(i, j)] = rng.random_range(0.05..1.0);
            }
        }
        if i == 0 && p[(0, 0)] == 0.0 {
            p[(i, i)] = 0.1;
        }
        let total: f64 = p.row(i).iter().sum();
        for j in 0..n {
            p[(i, j)] /= total;
        }
    }
    Chain::new(format!("random_nonreversible(N={n},seed={seed})"), numbered(n), p)
}

/// The explicit four-path flow from the two-state chain with parameter
/// `delta` to the uniform walk on `{a, b}`: the length-1 paths `(a, b)`,
/// `(b, a)` and the length-2 loops `(a, b, a)`, `(b, a, b)`.
pub fn two_state_flow(delta: f64) -> Result<Flow> {
    let base = two_state(delta)?;
    let target = Chain::new(
        "uniform_walk(N=2)",
        vec!["a".into(), "b".into()],
        Matrix::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]])?,
    )?;
    let demand = |x: usize, y: usize| target.pi()[x] * target.p()[(x, y)];
    let paths = vec![
        FlowPath::new(vec![0, 1], demand(0, 1)),
        FlowPath::new(vec![1, 0], demand(1, 0)),
        FlowPath::new(vec![0, 1, 0], demand(0, 0)),
        FlowPath::new(vec![1, 0, 1], demand(1, 1)),
    ];
    Flow::new(base, target, paths)
}
