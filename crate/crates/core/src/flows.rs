//! Multicommodity flows between two chains on a common state space.
//!
//! A flow routes, for every transition `(x, y)` of the target chain `M′`,
//! exactly `π′(x)P′(x, y)` units of mass along paths of the base chain `M`.
//! Flows are stored as explicit weighted path lists.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{max_abs_diff, Chain, STATIONARY_TOL};
use crate::error::{Error, Result};

/// Tolerance on per-demand conservation.
pub const DEMAND_TOL: f64 = 1e-10;
/// Upper limit on the number of paths produced by [`spread_flow`].
pub const MAX_SPREAD_PATHS: usize = 2_000_000;

/// A path `(x₀, …, x_k)` of length `k` carrying `mass` units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowPath {
    #[serde(rename = "path")]
    pub states: Vec<usize>,
    pub mass: f64,
}

impl FlowPath {
    pub fn new(states: Vec<usize>, mass: f64) -> Self {
        Self { states, mass }
    }

    /// Number of hops, `|γ|`.
    pub fn len(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn source(&self) -> usize {
        self.states[0]
    }

    pub fn sink(&self) -> usize {
        *self.states.last().expect("non-empty path")
    }

    pub fn hops(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.states.windows(2).map(|w| (w[0], w[1]))
    }

    /// `r((z, w), γ)`: occurrences of the ordered edge on the path.
    pub fn edge_count(&self, z: usize, w: usize) -> usize {
        self.hops().filter(|&e| e == (z, w)).count()
    }

    pub fn is_simple(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.states.iter().all(|s| seen.insert(*s))
    }
}

/// An `(M, M′)`-flow.
#[derive(Debug, Clone)]
pub struct Flow {
    base: Chain,
    target: Chain,
    paths: Vec<FlowPath>,
}

fn check_compatible(base: &Chain, target: &Chain) -> Result<()> {
    if base.n() != target.n() {
        return Err(Error::DimensionMismatch {
            expected: base.n(),
            found: target.n(),
        });
    }
    let max_diff = max_abs_diff(base.pi(), target.pi());
    if max_diff > STATIONARY_TOL {
        return Err(Error::StationaryMismatch { max_diff });
    }
    Ok(())
}

impl Flow {
    /// Assembles a flow; the chains must share a state space and stationary
    /// distribution. Path validity is checked by [`validate_flow`].
    pub fn new(base: Chain, target: Chain, paths: Vec<FlowPath>) -> Result<Self> {
        check_compatible(&base, &target)?;
        Ok(Self { base, target, paths })
    }

    pub fn base(&self) -> &Chain {
        &self.base
    }

    pub fn target(&self) -> &Chain {
        &self.target
    }

    pub fn paths(&self) -> &[FlowPath] {
        &self.paths
    }

    /// Paths grouped by the demand edge `(source, sink)` they serve.
    pub fn by_demand(&self) -> BTreeMap<(usize, usize), Vec<&FlowPath>> {
        let mut groups: BTreeMap<(usize, usize), Vec<&FlowPath>> = BTreeMap::new();
        for path in self.paths.iter().filter(|p| !p.states.is_empty()) {
            groups.entry((path.source(), path.sink())).or_default().push(path);
        }
        groups
    }

    /// Same flow with every path mapped through `f`.
    pub fn map_paths(&self, f: impl FnMut(&FlowPath) -> FlowPath) -> Flow {
        Flow {
            base: self.base.clone(),
            target: self.target.clone(),
            paths: self.paths.iter().map(f).collect(),
        }
    }

    pub fn to_file(&self) -> FlowFile {
        FlowFile {
            base: self.base.name().to_string(),
            target: self.target.name().to_string(),
            paths: self.paths.clone(),
        }
    }

    pub fn from_file(file: FlowFile, base: Chain, target: Chain) -> Result<Self> {
        Flow::new(base, target, file.paths)
    }

    pub fn read(path: impl AsRef<Path>, base: Chain, target: Chain) -> Result<Self> {
        let file: FlowFile = serde_json::from_str(&fs::read_to_string(path)?)?;
        Flow::from_file(file, base, target)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_file())? + "\n")?;
        Ok(())
    }
}

/// On-disk flow format; path entries index the chain file's state order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowFile {
    pub base: String,
    pub target: String,
    pub paths: Vec<FlowPath>,
}

/// One reason a flow fails validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FlowViolation {
    EmptyPath { path: usize },
    StateOutOfRange { path: usize, state: usize },
    MassOutOfRange { path: usize, mass: f64 },
    NotAnEdge { path: usize, from: usize, to: usize },
    EdgeRepeated { path: usize, from: usize, to: usize, count: usize },
    UnknownDemand { path: usize, from: usize, to: usize },
    DemandMismatch { from: usize, to: usize, expected: f64, routed: f64 },
}

impl fmt::Display for FlowViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyPath { path } => write!(f, "path #{path} has no states"),
            Self::StateOutOfRange { path, state } => {
                write!(f, "path #{path} visits unknown state {state}")
            }
            Self::MassOutOfRange { path, mass } => {
                write!(f, "path #{path} has mass {mass} outside [0, 1]")
            }
            Self::NotAnEdge { path, from, to } => {
                write!(f, "path #{path} uses ({from}, {to}), not a transition of the base chain")
            }
            Self::EdgeRepeated { path, from, to, count } => {
                write!(f, "path #{path} uses edge ({from}, {to}) {count} times (limit 2)")
            }
            Self::UnknownDemand { path, from, to } => {
                write!(f, "path #{path} serves ({from}, {to}), not a transition of the target chain")
            }
            Self::DemandMismatch { from, to, expected, routed } => write!(
                f,
                "edge ({from}, {to}) needs {expected} units but {routed} are routed"
            ),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowValidation {
    pub valid: bool,
    /// Every positive-mass path has odd length.
    pub odd: bool,
    pub violations: Vec<FlowViolation>,
}

/// Checks path validity, mass range and per-demand conservation.
///
/// Length-0 paths are legal (they serve loop demands `(x, x)` without using
/// any edge) but make the flow non-odd when they carry mass.
pub fn validate_flow(flow: &Flow) -> Result<FlowValidation> {
    check_compatible(&flow.base, &flow.target)?;
    let n = flow.base.n();
    let (p, p_target, pi_target) = (flow.base.p(), flow.target.p(), flow.target.pi());
    let mut violations = Vec::new();
    let mut routed: BTreeMap<(usize, usize), f64> = BTreeMap::new();

    for (idx, path) in flow.paths.iter().enumerate() {
        if path.states.is_empty() {
            violations.push(FlowViolation::EmptyPath { path: idx });
            continue;
        }
        if let Some(&state) = path.states.iter().find(|&&s| s >= n) {
            violations.push(FlowViolation::StateOutOfRange { path: idx, state });
            continue;
        }
        if !(0.0..=1.0).contains(&path.mass) {
            violations.push(FlowViolation::MassOutOfRange {
                path: idx,
                mass: path.mass,
            });
        }
        let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
        for (from, to) in path.hops() {
            if p[(from, to)] <= 0.0 {
                violations.push(FlowViolation::NotAnEdge { path: idx, from, to });
            }
            *counts.entry((from, to)).or_default() += 1;
        }
        let mut repeated: Vec<_> = counts.into_iter().filter(|&(_, c)| c > 2).collect();
        repeated.sort();
        for ((from, to), count) in repeated {
            violations.push(FlowViolation::EdgeRepeated {
                path: idx,
                from,
                to,
                count,
            });
        }
        let (from, to) = (path.source(), path.sink());
        if p_target[(from, to)] <= 0.0 {
            violations.push(FlowViolation::UnknownDemand { path: idx, from, to });
            continue;
        }
        *routed.entry((from, to)).or_default() += path.mass;
    }

    for (from, to) in flow.target.edges() {
        let expected = pi_target[from] * p_target[(from, to)];
        let got = routed.get(&(from, to)).copied().unwrap_or(0.0);
        if (got - expected).abs() > DEMAND_TOL {
            violations.push(FlowViolation::DemandMismatch {
                from,
                to,
                expected,
                routed: got,
            });
        }
    }

    let odd = flow
        .paths
        .iter()
        .filter(|p| p.mass > 0.0)
        .all(|p| p.len() % 2 == 1);
    Ok(FlowValidation {
        valid: violations.is_empty(),
        odd,
        violations,
    })
}

fn require_valid(flow: &Flow) -> Result<FlowValidation> {
    let validation = validate_flow(flow)?;
    match validation.violations.first() {
        None => Ok(validation),
        Some(v) => Err(Error::InvalidFlow(v.to_string())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeCongestion {
    /// `A_{z,w}(f)` for every `(z, w) ∈ E*(M)`.
    #[serde(skip)]
    pub per_edge: BTreeMap<(usize, usize), f64>,
    /// `A(f)`, the largest edge congestion.
    pub max: f64,
    pub argmax: Option<(usize, usize)>,
}

/// `A_{z,w}(f) = (1/π(z)P(z,w)) Σ_γ r((z,w),γ)|γ| f(γ)`.
pub fn edge_congestion(flow: &Flow) -> Result<EdgeCongestion> {
    require_valid(flow)?;
    Ok(edge_congestion_unchecked(flow))
}

fn edge_congestion_unchecked(flow: &Flow) -> EdgeCongestion {
    let (p, pi) = (flow.base.p(), flow.base.pi());
    let mut load: BTreeMap<(usize, usize), f64> = flow.base.edges().map(|e| (e, 0.0)).collect();
    for path in &flow.paths {
        let weight = path.len() as f64 * path.mass;
        for hop in path.hops() {
            if let Some(l) = load.get_mut(&hop) {
                *l += weight;
            }
        }
    }
    let per_edge: BTreeMap<_, _> = load
        .into_iter()
        .map(|((z, w), l)| ((z, w), l / (pi[z] * p[(z, w)])))
        .collect();
    let (argmax, max) = per_edge
        .iter()
        .fold((None, 0.0), |(arg, best), (&e, &a)| if a > best { (Some(e), a) } else { (arg, best) });
    EdgeCongestion {
        per_edge,
        max,
        argmax,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateCongestion {
    /// `B_z(f)` per state.
    pub per_state: Vec<f64>,
    /// `B(f) = max_z B_z(f)`.
    pub max: f64,
    /// `κ(f)`; zero when no edge carries congestion.
    pub kappa: f64,
}

/// `p(z, w, x) = min{P(z, x), R(P)(w, x)}`: mass that can detour `z → x → w`.
fn detour_weight(chain: &Chain, z: usize, w: usize, x: usize) -> f64 {
    let (p, pi) = (chain.p(), chain.pi());
    let reversed = pi[x] / pi[w] * p[(x, w)];
    p[(z, x)].min(reversed)
}

fn detour_total(chain: &Chain, z: usize, w: usize) -> f64 {
    (0..chain.n()).map(|x| detour_weight(chain, z, w, x)).sum()
}

/// State congestion `B_z(f) = (1/π(z)) Σ_{γ ∋ z} |γ| f(γ)` and `κ(f)`.
///
/// A path contributes to `B_z` once if it visits `z`, however many times.
pub fn state_congestion(flow: &Flow) -> Result<StateCongestion> {
    require_valid(flow)?;
    let chain = &flow.base;
    let n = chain.n();
    let mut load = vec![0.0; n];
    for path in &flow.paths {
        let mut visited = vec![false; n];
        for &s in &path.states {
            visited[s] = true;
        }
        let weight = path.len() as f64 * path.mass;
        for z in (0..n).filter(|&z| visited[z]) {
            load[z] += weight;
        }
    }
    let per_state: Vec<f64> = load.iter().zip(chain.pi()).map(|(l, p)| l / p).collect();
    let max = per_state.iter().copied().fold(0.0, f64::max);

    let congestion = edge_congestion_unchecked(flow);
    let mut kappa: f64 = 0.0;
    for (&(z, w), &a) in &congestion.per_edge {
        if a > 0.0 {
            let total = detour_total(chain, z, w);
            if total <= 0.0 {
                return Err(Error::KappaInfinite { from: z, to: w });
            }
            kappa = kappa.max(1.0 / total);
        }
    }
    Ok(StateCongestion {
        per_state,
        max,
        kappa,
    })
}

fn erase_loops(states: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(states.len());
    for &s in states {
        if let Some(pos) = out.iter().position(|&v| v == s) {
            out.truncate(pos + 1);
        } else {
            out.push(s);
        }
    }
    out
}

/// Replaces every path by its loop-erased version, keeping endpoints and
/// mass. Congestion never increases; this is checked.
pub fn simplify(flow: &Flow) -> Result<Flow> {
    let before = edge_congestion(flow)?;
    let simple = flow.map_paths(|p| FlowPath::new(erase_loops(&p.states), p.mass));
    let validation = validate_flow(&simple)?;
    if let Some(v) = validation.violations.first() {
        return Err(Error::NotSimplifiable(v.to_string()));
    }
    let after = edge_congestion_unchecked(&simple);
    if after.max > before.max + 1e-12 {
        return Err(Error::NotSimplifiable(format!(
            "congestion rose from {} to {}",
            before.max, after.max
        )));
    }
    Ok(simple)
}

/// Converts low state congestion into low edge congestion.
///
/// The flow is first loop-erased. Each hop `x_i → x_{i+1}` of each path is
/// then replaced by the two-hop detours `x_i → x → x_{i+1}`, with a share
/// `p(x_i, x_{i+1}, x) / Σ_x p(x_i, x_{i+1}, x)` of the mass on each; the
/// choices at different hops are independent, so a path of length `k`
/// becomes a family of paths of length `2k`. The resulting congestion is at
/// most `8 κ(f) B(f)`.
pub fn spread_flow(flow: &Flow) -> Result<Flow> {
    let simple = simplify(flow)?;
    let chain = &simple.base;
    let n = chain.n();
    let mut out_paths: Vec<FlowPath> = Vec::new();

    for path in &simple.paths {
        if path.is_empty() {
            out_paths.push(path.clone());
            continue;
        }
        let mut choices: Vec<Vec<(usize, f64)>> = Vec::with_capacity(path.len());
        let mut count: usize = 1;
        for (a, b) in path.hops() {
            let total = detour_total(chain, a, b);
            if total <= 0.0 {
                return Err(Error::KappaInfinite { from: a, to: b });
            }
            let options: Vec<(usize, f64)> = (0..n)
                .map(|x| (x, detour_weight(chain, a, b, x) / total))
                .filter(|&(_, w)| w > 0.0)
                .collect();
            count = count.saturating_mul(options.len());
            choices.push(options);
        }
        if out_paths.len().saturating_add(count) > MAX_SPREAD_PATHS {
            return Err(Error::FlowTooLarge {
                limit: MAX_SPREAD_PATHS,
            });
        }
        // odometer over the independent per-hop choices
        let mut digits = vec![0usize; choices.len()];
        loop {
            let mut states = Vec::with_capacity(2 * path.len() + 1);
            let mut mass = path.mass;
            for (i, (a, _)) in path.hops().enumerate() {
                let (via, share) = choices[i][digits[i]];
                states.push(a);
                states.push(via);
                mass *= share;
            }
            states.push(path.sink());
            out_paths.push(FlowPath::new(states, mass));

            let mut i = 0;
            while i < digits.len() {
                digits[i] += 1;
                if digits[i] < choices[i].len() {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
            if i == digits.len() {
                break;
            }
        }
    }
    Flow::new(simple.base.clone(), simple.target.clone(), out_paths)
}

/// Lexicographically smallest shortest path from `start` to `goal` in a graph
/// given by sorted successor lists.
fn lexicographic_shortest_path(succ: &[Vec<usize>], start: usize, goal: usize) -> Option<Vec<usize>> {
    let n = succ.len();
    let mut pred: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (u, outs) in succ.iter().enumerate() {
        for &v in outs {
            pred[v].push(u);
        }
    }
    let mut dist = vec![usize::MAX; n];
    dist[goal] = 0;
    let mut queue = VecDeque::from([goal]);
    while let Some(v) = queue.pop_front() {
        for &u in &pred[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    if dist[start] == usize::MAX {
        return None;
    }
    let mut path = vec![start];
    let mut cur = start;
    while cur != goal {
        cur = *succ[cur].iter().find(|&&v| dist[v] + 1 == dist[cur])?;
        path.push(cur);
    }
    Some(path)
}

/// Routes each target transition along one shortest base path.
///
/// With `odd = true` the search runs on the bipartite double cover
/// (state × parity), so every path, including those serving loop demands,
/// has odd length. Otherwise loop demands use length-0 paths. Ties are broken
/// towards the smallest next state.
pub fn build_canonical_flow(base: &Chain, target: &Chain, odd: bool) -> Result<Flow> {
    check_compatible(base, target)?;
    let n = base.n();
    let p = base.p();
    let succ: Vec<Vec<usize>> = (0..n)
        .map(|u| (0..n).filter(|&v| u != v && p[(u, v)] > 0.0).collect())
        .collect();
    let cover_succ: Vec<Vec<usize>> = (0..2 * n)
        .map(|node| {
            let (u, parity) = (node / 2, node % 2);
            (0..n)
                .filter(|&v| p[(u, v)] > 0.0)
                .map(|v| 2 * v + (1 - parity))
                .collect()
        })
        .collect();

    let mut paths = Vec::new();
    for (x, y) in target.edges() {
        let mass = target.pi()[x] * target.p()[(x, y)];
        let states = if odd {
            lexicographic_shortest_path(&cover_succ, 2 * x, 2 * y + 1)
                .ok_or(Error::NoOddPath { from: x, to: y })?
                .into_iter()
                .map(|node| node / 2)
                .collect()
        } else if x == y {
            vec![x]
        } else {
            lexicographic_shortest_path(&succ, x, y).ok_or(Error::Unreachable { from: x, to: y })?
        };
        paths.push(FlowPath::new(states, mass));
    }
    Flow::new(base.clone(), target.clone(), paths)
}
