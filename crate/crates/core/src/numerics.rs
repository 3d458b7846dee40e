//! Concrete admissible systems and steady-state continuation, used to
//! corroborate branch predictions numerically.
//!
//! A [`PolynomialProfile`] realizes a [`DerivativeProfile`] as the cell
//! function
//! `f(y; λ) = Σ f_j y_j + λ Σ f_{jλ} y_j + ½ Σ f_pq y_p y_q + f_000 y_0³ / 6`,
//! so `f(0, λ) = 0` holds structurally. [`continue_equilibria`] samples
//! equilibria on a symmetric λ grid with seeded multi-start Newton, keeps
//! the roots that continue inward to the origin as λ → 0, links them into
//! branches and reports the smallest synchrony subspace of each branch.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bifurcation::{BranchPrediction, Verdict};
use crate::classify::AnnotatedLattice;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::par::{self, Exec};
use crate::reduction::{sample_profile, DerivativeProfile};
use crate::spectrum::Eigenfunction;
use crate::synchrony::SynchronyLattice;

/// Coordinatewise tolerance for deciding that two cells are synchronized.
pub const SYNCHRONY_TOL: f64 = 1e-7;

/// A synthesized one-parameter system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialProfile {
    pub derivatives: DerivativeProfile,
    /// Label of the eigenfunction made to vanish at `λ = 0`.
    pub condition: String,
    pub seed: u64,
}

impl PolynomialProfile {
    /// Cell function at local arguments `y = (y_0, .., y_k)`.
    pub fn cell(&self, y: &[f64], lambda: f64) -> f64 {
        let d = &self.derivatives;
        let mut s = 0.0;
        for (j, &yj) in y.iter().enumerate() {
            s += (d.first[j] + lambda * d.first_lambda[j]) * yj;
            let mut q = 0.5 * d.second[j][j] * yj;
            for (p, &yp) in y.iter().enumerate().skip(j + 1) {
                q += d.second[j][p] * yp;
            }
            s += q * yj;
        }
        s + d.third_000 * y[0] * y[0] * y[0] / 6.0
    }

    /// The network vector field `F(x, λ)`.
    pub fn eval(&self, net: &Network, x: &[f64], lambda: f64) -> Vec<f64> {
        let mut y = vec![0.0; self.derivatives.vars()];
        (0..net.n_cells())
            .map(|i| {
                for (l, yl) in y.iter_mut().enumerate() {
                    *yl = x[net.source(l, i)];
                }
                self.cell(&y, lambda)
            })
            .collect()
    }

    /// Row-major `D_x F(x, λ)`.
    fn jacobian_into(&self, net: &Network, x: &[f64], lambda: f64, out: &mut [f64]) {
        let n = net.n_cells();
        let d = &self.derivatives;
        let vars = d.vars();
        out.iter_mut().for_each(|v| *v = 0.0);
        let mut y = vec![0.0; vars];
        for i in 0..n {
            for (l, yl) in y.iter_mut().enumerate() {
                *yl = x[net.source(l, i)];
            }
            for j in 0..vars {
                let mut g = d.first[j] + lambda * d.first_lambda[j];
                for (q, &yq) in y.iter().enumerate() {
                    g += d.second[j][q] * yq;
                }
                if j == 0 {
                    g += 0.5 * d.third_000 * y[0] * y[0];
                }
                out[i * n + net.source(j, i)] += g;
            }
        }
    }
}

/// Draw a generic profile satisfying the bifurcation condition `mu`.
pub fn synthesize(net: &Network, mu: &Eigenfunction, seed: u64) -> Result<PolynomialProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let derivatives = sample_profile(net, mu, &mut rng)?;
    Ok(PolynomialProfile {
        derivatives,
        condition: mu.label(),
        seed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuationOptions {
    pub lambda_max: f64,
    /// Number of grid points on `[-λ_max, λ_max]`, including `λ = 0`.
    pub grid: usize,
    pub starts: usize,
    pub radius: f64,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub cluster_tol: f64,
    pub link_tol: f64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            lambda_max: 0.05,
            grid: 41,
            starts: 200,
            radius: 0.5,
            newton_tol: 1e-12,
            max_iter: 60,
            cluster_tol: 1e-6,
            link_tol: 1e-3,
            exec: Exec::default(),
        }
    }
}

impl ContinuationOptions {
    pub fn lambda_grid(&self) -> Vec<f64> {
        let m = self.grid.max(2) - 1;
        (0..=m)
            .map(|g| self.lambda_max * (2.0 * g as f64 / m as f64 - 1.0))
            .collect()
    }
}

/// One distinct nontrivial equilibrium at a grid value of λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub grid_index: usize,
    pub lambda: f64,
    pub x: Vec<f64>,
    pub residual: f64,
    /// Synchrony of the innermost point (rescaled to unit size) reached by
    /// continuing toward `λ = 0`, when that continuation reaches the origin.
    pub germ_synchrony: Option<usize>,
    /// Continues to the origin with unchanged synchrony.
    pub bifurcating: bool,
    pub branch: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub id: usize,
    /// Indices into [`BranchObservation::clusters`], ordered by λ.
    pub clusters: Vec<usize>,
    /// Smallest lattice node containing every branch point.
    pub synchrony: usize,
    pub max_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchObservation {
    pub condition: String,
    pub seed: u64,
    pub lambda_grid: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub branches: Vec<Branch>,
    /// Largest `‖F(0, λ)‖` over the grid.
    pub trivial_residual: f64,
    /// Starts that exhausted the Newton budget or diverged.
    pub newton_failures: usize,
    pub options: ContinuationOptions,
}

impl BranchObservation {
    pub fn synchronies(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.branches.iter().map(|b| b.synchrony).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn has_branch_with_synchrony(&self, node: usize) -> bool {
        self.branches.iter().any(|b| b.synchrony == node)
    }
}

fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Solve `a x = b` in place by Gaussian elimination with partial pivoting.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> bool {
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| a[i * n + c].abs().total_cmp(&a[j * n + c].abs()))
            .unwrap();
        if a[p * n + c].abs() < 1e-300 {
            return false;
        }
        if p != c {
            for j in 0..n {
                a.swap(p * n + j, c * n + j);
            }
            b.swap(p, c);
        }
        for r in c + 1..n {
            let m = a[r * n + c] / a[c * n + c];
            if m != 0.0 {
                for j in c..n {
                    a[r * n + j] -= m * a[c * n + j];
                }
                b[r] -= m * b[c];
            }
        }
    }
    for c in (0..n).rev() {
        let mut s = b[c];
        for j in c + 1..n {
            s -= a[c * n + j] * b[j];
        }
        b[c] = s / a[c * n + c];
    }
    b.iter().all(|v| v.is_finite())
}

/// Plain Newton iteration; `None` when the budget is exhausted, the
/// Jacobian is singular or the iterate leaves a large ball.
fn newton(
    profile: &PolynomialProfile,
    net: &Network,
    x0: &[f64],
    lambda: f64,
    tol: f64,
    max_iter: usize,
) -> Option<(Vec<f64>, f64)> {
    let n = net.n_cells();
    let mut x = x0.to_vec();
    let mut jac = vec![0.0; n * n];
    for _ in 0..max_iter {
        let mut f = profile.eval(net, &x, lambda);
        let r = norm_inf(&f);
        if r <= tol {
            return Some((x, r));
        }
        profile.jacobian_into(net, &x, lambda, &mut jac);
        if !solve_dense(&mut jac, &mut f, n) {
            return None;
        }
        for (xi, di) in x.iter_mut().zip(&f) {
            *xi -= di;
        }
        if !(norm_inf(&x) < 1e3) {
            return None;
        }
    }
    let r = norm_inf(&profile.eval(net, &x, lambda));
    (r <= tol).then_some((x, r))
}

/// Deterministic start cloud: uniform directions, log-uniform radii in
/// `[radius/1000, radius]`.
fn start_cloud(n: usize, count: usize, radius: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c10d);
    (0..count)
        .map(|_| {
            let dir = loop {
                let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0f64..1.0)).collect();
                let r2: f64 = v.iter().map(|a| a * a).sum();
                if r2 > 1e-4 && r2 <= 1.0 {
                    let r = r2.sqrt();
                    break v.into_iter().map(|a| a / r).collect::<Vec<_>>();
                }
            };
            let r = radius * 10f64.powf(-3.0 * rng.random::<f64>());
            dir.into_iter().map(|a| a * r).collect()
        })
        .collect()
}

/// Follow an equilibrium toward `λ = 0` along a geometric sequence and
/// return the innermost point when it shrinks steadily to the origin
/// without jumping to another solution.
fn continue_to_origin(
    profile: &PolynomialProfile,
    net: &Network,
    x: &[f64],
    lambda: f64,
    opts: &ContinuationOptions,
) -> Option<Vec<f64>> {
    const RATIO: f64 = 0.7;
    let floor = 1e-6 * opts.lambda_max;
    let start_norm = norm_inf(x);
    let mut x = x.to_vec();
    let mut lam = lambda;
    let mut power = 0.75;
    while (lam * RATIO).abs() >= floor {
        let next = lam * RATIO;
        let scale = RATIO.powf(power);
        let norm = norm_inf(&x);
        let pred: Vec<f64> = x.iter().map(|v| v * scale).collect();
        let (y, _) = newton(profile, net, &pred, next, 1e-13 * norm, opts.max_iter)?;
        let new_norm = norm_inf(&y);
        if new_norm < 1e-3 * norm || new_norm > 1.05 * norm || dist_inf(&y, &pred) > 0.5 * norm {
            return None;
        }
        power = ((new_norm / norm).ln() / RATIO.ln()).clamp(0.25, 1.5);
        x = y;
        lam = next;
    }
    (norm_inf(&x) <= 1e-2 * start_norm).then_some(x)
}

/// Smallest lattice node whose cell equalities hold at every point.
pub fn detect_synchrony(lat: &SynchronyLattice, points: &[Vec<f64>]) -> usize {
    (0..lat.len())
        .filter(|&node| {
            let classes = lat.nodes[node].partition.classes();
            points.iter().all(|x| {
                (0..x.len()).all(|i| {
                    (i + 1..x.len())
                        .all(|j| classes[i] != classes[j] || (x[i] - x[j]).abs() <= SYNCHRONY_TOL)
                })
            })
        })
        .min_by_key(|&node| (lat.nodes[node].dim(), node))
        .unwrap_or(lat.top)
}

fn find_root(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Sample equilibria on the λ grid and assemble bifurcating branches.
pub fn continue_equilibria(
    net: &Network,
    lat: &SynchronyLattice,
    profile: &PolynomialProfile,
    opts: &ContinuationOptions,
) -> Result<BranchObservation> {
    profile.derivatives.check(net)?;
    if !(opts.lambda_max > 0.0) || opts.grid < 2 || opts.starts == 0 {
        return Err(Error::InvalidArgument(
            "continuation needs λ_max > 0, at least 2 grid points and 1 start".into(),
        ));
    }
    let n = net.n_cells();
    let grid = opts.lambda_grid();
    let starts = start_cloud(n, opts.starts, opts.radius, profile.seed);
    let trivial_residual = grid
        .iter()
        .map(|&l| norm_inf(&profile.eval(net, &vec![0.0; n], l)))
        .fold(0.0, f64::max);

    let solves = par::map_range(opts.exec, grid.len() * starts.len(), |t| {
        let (g, s) = (t / starts.len(), t % starts.len());
        if grid[g] == 0.0 {
            return Some(None);
        }
        newton(profile, net, &starts[s], grid[g], opts.newton_tol, opts.max_iter).map(Some)
    });

    let mut newton_failures = 0;
    let mut clusters: Vec<Cluster> = Vec::new();
    for (t, sol) in solves.into_iter().enumerate() {
        let g = t / starts.len();
        let Some(sol) = sol else {
            newton_failures += 1;
            continue;
        };
        let Some((x, residual)) = sol else { continue };
        let norm = norm_inf(&x);
        if norm <= 1e-9 || norm > 4.0 * opts.radius {
            continue;
        }
        let dup = clusters
            .iter()
            .any(|c| c.grid_index == g && dist_inf(&c.x, &x) <= opts.cluster_tol);
        if !dup {
            clusters.push(Cluster {
                grid_index: g,
                lambda: grid[g],
                x,
                residual,
                germ_synchrony: None,
                bifurcating: false,
                branch: None,
            });
        }
    }
    clusters.sort_by(|a, b| {
        a.grid_index.cmp(&b.grid_index).then_with(|| {
            a.x.iter()
                .zip(&b.x)
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });

    // A root counts as bifurcating from the origin only if its synchrony is
    // already that of the germ near the origin; secondary branches that peel
    // off a primary branch fail this and are set aside.
    let germs = par::map(opts.exec, &clusters, |c| {
        continue_to_origin(profile, net, &c.x, c.lambda, opts).map(|inner| {
            let scale = norm_inf(&inner);
            let unit: Vec<f64> = inner.iter().map(|v| v / scale).collect();
            detect_synchrony(lat, &[unit])
        })
    });
    for (c, germ) in clusters.iter_mut().zip(germs) {
        c.germ_synchrony = germ;
        c.bifurcating = germ == Some(detect_synchrony(lat, std::slice::from_ref(&c.x)));
    }

    // Link bifurcating clusters at adjacent grid values on the same side of
    // zero, either by proximity or by one warm-started Newton solve.
    let mut parent: Vec<usize> = (0..clusters.len()).collect();
    for a in 0..clusters.len() {
        if !clusters[a].bifurcating {
            continue;
        }
        let ga = clusters[a].grid_index;
        let tracked = grid
            .get(ga + 1)
            .filter(|&&l| l != 0.0 && l.signum() == clusters[a].lambda.signum())
            .and_then(|&l| newton(profile, net, &clusters[a].x, l, opts.newton_tol, opts.max_iter));
        for b in a + 1..clusters.len() {
            let cb = &clusters[b];
            if !cb.bifurcating || cb.grid_index != ga + 1 || cb.lambda.signum() != clusters[a].lambda.signum() {
                continue;
            }
            let near = dist_inf(&clusters[a].x, &cb.x) <= opts.link_tol;
            let follows = tracked
                .as_ref()
                .is_some_and(|(y, _)| dist_inf(y, &cb.x) <= opts.cluster_tol);
            if near || follows {
                let (ra, rb) = (find_root(&mut parent, a), find_root(&mut parent, b));
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }

    let mut ids: HashMap<usize, usize> = HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for c in 0..clusters.len() {
        if !clusters[c].bifurcating {
            continue;
        }
        let r = find_root(&mut parent, c);
        let id = *ids.entry(r).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[id].push(c);
        clusters[c].branch = Some(id);
    }
    let branches = members
        .into_iter()
        .enumerate()
        .map(|(id, cs)| {
            let points: Vec<Vec<f64>> = cs.iter().map(|&c| clusters[c].x.clone()).collect();
            Branch {
                id,
                synchrony: detect_synchrony(lat, &points),
                max_residual: cs.iter().map(|&c| clusters[c].residual).fold(0.0, f64::max),
                clusters: cs,
            }
        })
        .collect();

    Ok(BranchObservation {
        condition: profile.condition.clone(),
        seed: profile.seed,
        lambda_grid: grid,
        clusters,
        branches,
        trivial_residual,
        newton_failures,
        options: opts.clone(),
    })
}

/// Branch points as CSV: `lambda,x1..xn,branch,synchrony`.
pub fn to_csv(obs: &BranchObservation) -> String {
    let n = obs.clusters.first().map_or(0, |c| c.x.len());
    let mut out = String::from("lambda");
    for i in 1..=n {
        let _ = write!(out, ",x{i}");
    }
    out.push_str(",branch,synchrony\n");
    for b in &obs.branches {
        for &c in &b.clusters {
            let cl = &obs.clusters[c];
            let _ = write!(out, "{:e}", cl.lambda);
            for v in &cl.x {
                let _ = write!(out, ",{v:e}");
            }
            let _ = writeln!(out, ",{},{}", b.id, b.synchrony);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationLine {
    pub subspace: usize,
    pub condition: String,
    pub verdict: Verdict,
    pub status: Status,
    /// Seed that exhibited the branch, or the first offending seed.
    pub seed: Option<u64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub network: String,
    pub lines: Vec<VerificationLine>,
    pub seeds: usize,
    pub base_seed: u64,
    pub continuation: ContinuationOptions,
}

impl VerificationReport {
    pub fn failures(&self) -> usize {
        self.lines.iter().filter(|l| l.status == Status::Fail).count()
    }

    pub fn budget(&self) -> String {
        format!(
            "{} seeds x {} starts, lambda_max {}, grid {}",
            self.seeds, self.continuation.starts, self.continuation.lambda_max, self.continuation.grid
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seeds: usize,
    pub base_seed: u64,
    pub continuation: ContinuationOptions,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seeds: 20,
            base_seed: 0,
            continuation: ContinuationOptions::default(),
        }
    }
}

type Observed = std::result::Result<BranchObservation, Error>;

fn observe(al: &AnnotatedLattice, mu: &Eigenfunction, seed: u64, opts: &ContinuationOptions) -> Observed {
    let net = al.network();
    let profile = synthesize(net, mu, seed)?;
    continue_equilibria(net, &al.lattice, &profile, opts)
}

/// Check every prediction against continuation runs on synthesized systems.
///
/// Support verdicts pass as soon as one seed shows a branch with exactly the
/// predicted synchrony; non-support verdicts pass when no seed does.
pub fn verify_predictions(
    al: &AnnotatedLattice,
    preds: &[BranchPrediction],
    opts: &VerifyOptions,
) -> VerificationReport {
    // Group predictions by condition so each seed is continued once.
    let mut conditions: Vec<&Eigenfunction> = Vec::new();
    for p in preds {
        if p.verdict != Verdict::NoRealCondition && !conditions.iter().any(|c| c.kind == p.condition.kind) {
            conditions.push(&p.condition);
        }
    }
    let seeds: Vec<u64> = (0..opts.seeds as u64).map(|s| opts.base_seed + s).collect();
    let mut cache: Vec<Vec<Observed>> = Vec::new();
    for mu in &conditions {
        let related: Vec<&BranchPrediction> = preds.iter().filter(|p| p.condition.kind == mu.kind).collect();
        let negative = related.iter().any(|p| p.verdict == Verdict::DoesNotSupport);
        let mut got: Vec<Observed> = Vec::new();
        if negative {
            got = par::map(opts.continuation.exec, &seeds, |&s| observe(al, mu, s, &opts.continuation));
        } else {
            for &s in &seeds {
                got.push(observe(al, mu, s, &opts.continuation));
                let done = related.iter().all(|p| {
                    got.iter().any(|o| o.as_ref().is_ok_and(|o| o.has_branch_with_synchrony(p.subspace)))
                });
                if done {
                    break;
                }
            }
        }
        cache.push(got);
    }

    let lines = preds
        .iter()
        .map(|p| {
            let condition = p.condition.label();
            let mut line = VerificationLine {
                subspace: p.subspace,
                condition,
                verdict: p.verdict,
                status: Status::Skip,
                seed: None,
                detail: String::new(),
            };
            if p.verdict == Verdict::NoRealCondition {
                line.detail = "no real bifurcation condition".into();
                return line;
            }
            let ci = conditions.iter().position(|c| c.kind == p.condition.kind).unwrap();
            let runs = &cache[ci];
            let errors: Vec<String> = runs
                .iter()
                .filter_map(|o| o.as_ref().err().map(|e| e.to_string()))
                .collect();
            let hit = runs
                .iter()
                .find_map(|o| o.as_ref().ok().filter(|o| o.has_branch_with_synchrony(p.subspace)));
            let mut seen: Vec<usize> = runs
                .iter()
                .filter_map(|o| o.as_ref().ok())
                .flat_map(|o| o.synchronies())
                .collect();
            seen.sort_unstable();
            seen.dedup();
            match (p.verdict.supports(), hit) {
                (true, Some(o)) => {
                    line.status = Status::Pass;
                    line.seed = Some(o.seed);
                    line.detail = format!("branch found at seed {}", o.seed);
                }
                (true, None) => {
                    line.status = Status::Fail;
                    line.detail = format!(
                        "no branch with this synchrony in {} runs; synchronies seen {seen:?}; errors {errors:?}",
                        runs.len()
                    );
                }
                (false, Some(o)) => {
                    line.status = Status::Fail;
                    line.seed = Some(o.seed);
                    line.detail = format!("unexpected branch at seed {}", o.seed);
                }
                (false, None) if errors.is_empty() => {
                    line.status = Status::Pass;
                    line.detail = format!("no branch in {} runs; synchronies seen {seen:?}", runs.len());
                }
                (false, None) => {
                    line.status = Status::Fail;
                    line.detail = format!("inconclusive: {errors:?}");
                }
            }
            line
        })
        .collect();

    VerificationReport {
        network: al.network().name().to_string(),
        lines,
        seeds: opts.seeds,
        base_seed: opts.base_seed,
        continuation: opts.continuation.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synchrony::enumerate_synchrony;

    fn profile() -> PolynomialProfile {
        let second = vec![vec![0.5, -0.25], vec![-0.25, 0.75]];
        PolynomialProfile {
            derivatives: DerivativeProfile::new(vec![-0.7, 0.7], vec![1.0, 0.0], second, 1.0).unwrap(),
            condition: "f0 + f1".into(),
            seed: 0,
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let net = Network::new("t", 3, vec![vec![2, 3, 1]]).unwrap();
        let p = profile();
        let x = [0.1, -0.2, 0.3];
        let mut jac = vec![0.0; 9];
        p.jacobian_into(&net, &x, 0.02, &mut jac);
        let h = 1e-6;
        for j in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[j] += h;
            xm[j] -= h;
            let (fp, fm) = (p.eval(&net, &xp, 0.02), p.eval(&net, &xm, 0.02));
            for i in 0..3 {
                assert!(((fp[i] - fm[i]) / (2.0 * h) - jac[i * 3 + j]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn origin_is_always_an_equilibrium() {
        let net = Network::new("t", 2, vec![vec![2, 1]]).unwrap();
        let p = profile();
        for l in [-0.05, 0.0, 0.03] {
            assert_eq!(norm_inf(&p.eval(&net, &[0.0, 0.0], l)), 0.0);
        }
    }

    #[test]
    fn synchrony_detection() {
        let net = Network::new("g", 3, vec![vec![1, 1, 1]]).unwrap();
        let lat = enumerate_synchrony(&net).unwrap();
        assert_eq!(detect_synchrony(&lat, &[vec![0.2, 0.2, 0.2]]), lat.bottom);
        let n23 = detect_synchrony(&lat, &[vec![0.1, 0.3, 0.3], vec![0.0, -0.1, -0.1]]);
        assert_eq!(lat.nodes[n23].partition.blocks(), vec![vec![0], vec![1, 2]]);
        assert_eq!(detect_synchrony(&lat, &[vec![0.1, 0.2, 0.3]]), lat.top);
    }

    #[test]
    fn transcritical_branch_in_a_single_cell() {
        // f = λx + x²/2 on one cell: the branch x = −2λ crosses the origin.
        let net = Network::new("one", 1, vec![vec![1]]).unwrap();
        let lat = enumerate_synchrony(&net).unwrap();
        let p = PolynomialProfile {
            derivatives: DerivativeProfile::new(
                vec![0.0, 0.0],
                vec![1.0, 0.0],
                vec![vec![1.0, 0.0], vec![0.0, 0.0]],
                0.0,
            )
            .unwrap(),
            condition: "f0 + f1".into(),
            seed: 3,
        };
        let obs = continue_equilibria(&net, &lat, &p, &ContinuationOptions::default()).unwrap();
        assert!(!obs.branches.is_empty());
        for c in obs.clusters.iter().filter(|c| c.bifurcating) {
            assert!((c.x[0] + 2.0 * c.lambda).abs() < 1e-10);
        }
        assert_eq!(obs.trivial_residual, 0.0);
    }
}
