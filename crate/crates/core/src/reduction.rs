//! Lyapunov–Schmidt reduced coefficients at a sampled derivative profile:
//! kernel/cokernel bases, the λ-coefficient, second-order coefficients of
//! the reduced map, the cubic coefficient in the simple case, the
//! homogeneous quadratic branch system of the semisimple case, and the
//! second-order condition of the defective (1, 2) case.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::q_from_f64;
use crate::error::{Error, Result};
use crate::exact;
use crate::network::Network;
use crate::spectrum::{jacobian_exact, jacobian_numeric, EigenKind, Eigenfunction, RootBranch};

/// Relative threshold for numerically vanishing singular values.
const RANK_TOL: f64 = 1e-8;

/// Threshold for treating a reduced coefficient as zero.
pub const ZERO_TOL: f64 = 1e-10;

/// Taylor data of the cell function `f(y0, .., yk; λ)` at the origin.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivativeProfile {
    /// `f_j`, j = 0..=k.
    pub first: Vec<f64>,
    /// `f_{jλ}`.
    pub first_lambda: Vec<f64>,
    /// Symmetric `f_{pq}`.
    pub second: Vec<Vec<f64>>,
    /// `f_{000}`; the only third derivative carried.
    pub third_000: f64,
}

impl DerivativeProfile {
    pub fn new(
        first: Vec<f64>,
        first_lambda: Vec<f64>,
        second: Vec<Vec<f64>>,
        third_000: f64,
    ) -> Result<Self> {
        let vars = first.len();
        if first_lambda.len() != vars {
            return Err(Error::InputLengthMismatch {
                field: "first_lambda".into(),
                found: first_lambda.len(),
                expected: vars,
            });
        }
        if second.len() != vars || second.iter().any(|r| r.len() != vars) {
            return Err(Error::InvalidArgument(format!(
                "second derivatives must be {vars}x{vars}"
            )));
        }
        for p in 0..vars {
            for q in 0..p {
                if second[p][q] != second[q][p] {
                    return Err(Error::InvalidArgument(
                        "second derivatives must be symmetric".into(),
                    ));
                }
            }
        }
        Ok(DerivativeProfile {
            first,
            first_lambda,
            second,
            third_000,
        })
    }

    /// Number of variables `k + 1`.
    pub fn vars(&self) -> usize {
        self.first.len()
    }

    pub(crate) fn check(&self, net: &Network) -> Result<()> {
        if self.vars() != net.k() + 1 {
            return Err(Error::InputLengthMismatch {
                field: "first".into(),
                found: self.vars(),
                expected: net.k() + 1,
            });
        }
        Ok(())
    }
}

/// Solve `μ(f0, f1..fk) = 0` for `f0` given `f1..fk`.
pub fn solve_bifurcation_condition(mu: &EigenKind, partial: &[f64]) -> Result<f64> {
    let mut f = Vec::with_capacity(partial.len() + 1);
    f.push(0.0);
    f.extend_from_slice(partial);
    match mu {
        EigenKind::Valency(l) | EigenKind::Linear(l) => {
            if l.vars() != f.len() {
                return Err(Error::InputLengthMismatch {
                    field: "partial".into(),
                    found: partial.len(),
                    expected: l.vars() - 1,
                });
            }
            let c0 = crate::algebra::q_to_f64(l.coeff(0));
            if c0 == 0.0 {
                return Err(Error::InvalidArgument(format!("`{l}` does not depend on f0")));
            }
            Ok(-l.eval_f64(&f) / c0)
        }
        EigenKind::QuadraticRoot {
            alpha1, branch, ..
        } => {
            if alpha1.vars() != f.len() {
                return Err(Error::InputLengthMismatch {
                    field: "partial".into(),
                    found: partial.len(),
                    expected: alpha1.vars() - 1,
                });
            }
            let disc = mu.discriminant().expect("quadratic root").eval_f64(&f);
            if disc <= 1e-12 {
                return Err(Error::NotRealAtThisPoint);
            }
            let a = crate::algebra::q_to_f64(alpha1.coeff(0));
            let rest = alpha1.eval_f64(&f);
            let root = disc.sqrt();
            // μ = (α1 ± √D)/2 vanishes where α1 = ∓√D.
            Ok(match branch {
                RootBranch::Plus => (-root - rest) / a,
                RootBranch::Minus => (root - rest) / a,
            })
        }
        EigenKind::Residual { degree } => Err(Error::UnhandledConfiguration(format!(
            "bifurcation condition on an unresolved degree-{degree} factor"
        ))),
    }
}

fn dyadic(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let lo_i = (lo * 1024.0).ceil() as i64;
    let hi_i = (hi * 1024.0).floor() as i64;
    rng.random_range(lo_i..=hi_i) as f64 / 1024.0
}

/// Draw a random generic profile on which `mu` vanishes: `f1..fk` dyadic in
/// `[-1, 1]` away from zero, `f0` solved, `f_{0λ} = 1`, symmetric second
/// derivatives in `[-1, 1]` and `|f_{000}|` in `[0.5, 1.5]`. Draws where a
/// quadratic-root condition is not real are retried up to 100 times.
pub fn sample_profile(net: &Network, mu: &Eigenfunction, rng: &mut ChaCha8Rng) -> Result<DerivativeProfile> {
    if mu.real_class == crate::spectrum::RealClass::Never {
        return Err(Error::NotRealizableReal);
    }
    let vars = net.k() + 1;
    for _ in 0..100 {
        let partial: Vec<f64> = (1..vars)
            .map(|_| loop {
                let x = dyadic(rng, -1.0, 1.0);
                if x.abs() > 0.1 {
                    break x;
                }
            })
            .collect();
        let mut second = vec![vec![0.0; vars]; vars];
        for p in 0..vars {
            for q in p..vars {
                let x = dyadic(rng, -1.0, 1.0);
                second[p][q] = x;
                second[q][p] = x;
            }
        }
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let third = sign * dyadic(rng, 0.5, 1.5);
        let f0 = match solve_bifurcation_condition(&mu.kind, &partial) {
            Ok(f0) => f0,
            Err(Error::NotRealAtThisPoint) => continue,
            Err(e) => return Err(e),
        };
        let mut first = vec![f0];
        first.extend(partial);
        let mut first_lambda = vec![0.0; vars];
        first_lambda[0] = 1.0;
        return DerivativeProfile::new(first, first_lambda, second, third);
    }
    Err(Error::NotRealAtThisPoint)
}

/// `d²F(u, w)_i = Σ_pq f_pq (A_p u)_i (A_q w)_i`.
pub fn second_derivative(net: &Network, profile: &DerivativeProfile, u: &[f64], w: &[f64]) -> Vec<f64> {
    let vars = profile.vars();
    let au: Vec<Vec<f64>> = (0..vars).map(|p| net.apply(p, u)).collect();
    let aw: Vec<Vec<f64>> = (0..vars).map(|q| net.apply(q, w)).collect();
    (0..net.n_cells())
        .map(|i| {
            let mut s = 0.0;
            for p in 0..vars {
                for q in 0..vars {
                    s += profile.second[p][q] * au[p][i] * aw[q][i];
                }
            }
            s
        })
        .collect()
}

/// `d³F(u, u, u)_i = f_000 u_i³`.
pub fn third_derivative(profile: &DerivativeProfile, u: &[f64]) -> Vec<f64> {
    u.iter().map(|x| profile.third_000 * x * x * x).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn col(m: &DMatrix<f64>, j: usize) -> Vec<f64> {
    m.column(j).iter().copied().collect()
}

/// Orthonormal basis of the numerical kernel of `m` (columns), with the
/// singular values in ascending order.
fn svd_kernel(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, f64) {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let sv: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let tol = RANK_TOL * m.norm().max(1.0);
    let dim = sv.iter().take_while(|&&s| s <= tol).count();
    let basis = DMatrix::from_fn(n, dim, |r, c| v_t[(order[c], r)]);
    (basis, sv, tol)
}

/// Kernel of `J` with the requested dimension: exact rational nullspace when
/// the profile makes `J` exactly singular, otherwise the SVD kernel.
fn kernel_of(net: &Network, f: &[f64], transpose: bool, expected: usize) -> Result<DMatrix<f64>> {
    let n = net.n_cells();
    let fq: Vec<_> = f.iter().map(|&x| q_from_f64(x)).collect();
    let mut jq = jacobian_exact(net, &fq);
    if transpose {
        jq = exact::transpose(&jq);
    }
    let ns = exact::nullspace(&jq);
    if ns.len() == expected {
        let mut m = DMatrix::from_fn(n, expected, |r, c| crate::algebra::q_to_f64(&ns[c][r]));
        for mut c in m.column_iter_mut() {
            let norm = c.norm();
            c /= norm;
        }
        return Ok(m);
    }
    let mut j = jacobian_numeric(net, f);
    if transpose {
        j = j.transpose();
    }
    let (basis, _, _) = svd_kernel(&j);
    if basis.ncols() != expected {
        return Err(Error::KernelDimensionMismatch {
            expected,
            found: basis.ncols(),
        });
    }
    Ok(basis)
}

/// Rescale `w` so that `wᵀ v = I`.
fn biorthogonalize(v: &DMatrix<f64>, w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = w.transpose() * v;
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::SingularRangeRestriction)?;
    Ok(w * inv.transpose())
}

fn max_offdiag_residual(w: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    let m = w.transpose() * v;
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).abs());
        }
    }
    worst
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReductionMode {
    Simple,
    Semisimple(usize),
    Defective12,
}

impl ReductionMode {
    pub fn of(mu: &Eigenfunction) -> Result<Self> {
        match (mu.alg_mult, mu.geo_mult) {
            (1, 1) => Ok(ReductionMode::Simple),
            (a, g) if a == g => Ok(ReductionMode::Semisimple(a)),
            (2, 1) => Ok(ReductionMode::Defective12),
            (a, g) => Err(Error::UnhandledConfiguration(format!(
                "eigenfunction with algebraic multiplicity {a} and geometric multiplicity {g}"
            ))),
        }
    }
}

/// Second-order data of the reduced map at one profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub mode: ReductionMode,
    /// The eigenfunction evaluated on `first_lambda`.
    pub mu_lambda: f64,
    /// `⟨v*_i, J_λ v_j⟩` with `J_λ = Σ f_{jλ} A_j`.
    pub lambda_matrix: Vec<Vec<f64>>,
    /// `(h_i)_{ab} = ⟨v*_i, d²F(v_a + W_a, v_b + W_b)⟩`.
    pub quadratic: Vec<Vec<Vec<f64>>>,
    /// Kernel vectors (generalized kernel `v1, v2` in the defective case).
    pub kernel: Vec<Vec<f64>>,
    pub cokernel: Vec<Vec<f64>>,
    /// Range correction `W2` of the defective case.
    pub range_correction: Option<Vec<f64>>,
    /// Worst deviation of `⟨v*_i, v_j⟩` from `δ_ij`.
    pub biorthogonality_residual: f64,
    /// `⟨v*_1, v*_2⟩` in the defective case.
    pub cokernel_overlap: Option<f64>,
    pub determinacy: Option<u32>,
}

impl ReducedSystem {
    /// `g_xx` of the simple case.
    pub fn g_xx(&self) -> f64 {
        self.quadratic[0][0][0]
    }
}

fn lambda_jacobian(net: &Network, profile: &DerivativeProfile) -> DMatrix<f64> {
    jacobian_numeric(net, &profile.first_lambda)
}

/// Generalized kernel data of a defective (1, 2) eigenvalue at zero.
struct DefectiveBasis {
    v: DMatrix<f64>,
    w: DMatrix<f64>,
    w2: Vec<f64>,
    overlap: f64,
}

fn defective_basis(net: &Network, profile: &DerivativeProfile) -> Result<DefectiveBasis> {
    let n = net.n_cells();
    let j = jacobian_numeric(net, &profile.first);
    let (ker, _, _) = svd_kernel(&j);
    if ker.ncols() != 1 {
        return Err(Error::NotDefectiveHere);
    }
    let j2 = &j * &j;
    let (ker2, _, _) = svd_kernel(&j2);
    if ker2.ncols() != 2 {
        return Err(Error::NotDefectiveHere);
    }
    let v1 = ker.column(0).into_owned();
    // Minimum-norm solution of J v2 = v1, orthogonal to v1.
    let pinv = j
        .clone()
        .pseudo_inverse(RANK_TOL * j.norm().max(1.0))
        .map_err(|_| Error::NotDefectiveHere)?;
    let v2 = &pinv * &v1;
    if (&j * &v2 - &v1).norm() > 1e-8 * v1.norm().max(1.0) {
        return Err(Error::NotDefectiveHere);
    }
    let v = DMatrix::from_columns(&[v1.clone(), v2]);
    let (coker2, _, _) = svd_kernel(&j2.transpose());
    let w = biorthogonalize(&v, &coker2)?;
    let overlap = w.column(0).dot(&w.column(1));

    // W2 = −(P J)^{-1} P v1 on range(J²), P the orthogonal projection.
    let svd = j2.clone().svd(true, false);
    let u = svd.u.expect("requested");
    let tol = RANK_TOL * j2.norm().max(1.0);
    let range_cols: Vec<DVector<f64>> = (0..n)
        .filter(|&i| svd.singular_values[i] > tol)
        .map(|i| u.column(i).into_owned())
        .collect();
    let w2 = if range_cols.is_empty() {
        DVector::zeros(n)
    } else {
        let r = DMatrix::from_columns(&range_cols);
        let restricted = r.transpose() * &j * &r;
        let rhs = -(r.transpose() * &v1);
        let c = restricted
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularRangeRestriction)?;
        r * c
    };
    Ok(DefectiveBasis {
        v,
        w,
        w2: w2.iter().copied().collect(),
        overlap,
    })
}

fn eval_mu(mu: &EigenKind, f: &[f64]) -> f64 {
    mu.eval(f).re
}

/// Reduced second-order coefficients of `F` at `profile`, where `mu`
/// vanishes.
pub fn reduced_coefficients(net: &Network, mu: &Eigenfunction, profile: &DerivativeProfile) -> Result<ReducedSystem> {
    profile.check(net)?;
    let mode = ReductionMode::of(mu)?;
    let jl = lambda_jacobian(net, profile);
    let (v, w, w2, overlap) = match mode {
        ReductionMode::Simple | ReductionMode::Semisimple(_) => {
            let m = mu.geo_mult;
            let v = kernel_of(net, &profile.first, false, m)?;
            let c = kernel_of(net, &profile.first, true, m)?;
            let w = biorthogonalize(&v, &c)?;
            (v, w, None, None)
        }
        ReductionMode::Defective12 => {
            let b = defective_basis(net, profile)?;
            (b.v, b.w, Some(b.w2), Some(b.overlap))
        }
    };
    let m = v.ncols();
    let kernel: Vec<Vec<f64>> = (0..m).map(|j| col(&v, j)).collect();
    let cokernel: Vec<Vec<f64>> = (0..m).map(|j| col(&w, j)).collect();
    // Directions v_a + W_a; only v2 carries a range correction.
    let dirs: Vec<Vec<f64>> = kernel
        .iter()
        .enumerate()
        .map(|(a, va)| match (&w2, a) {
            (Some(w2), 1) => va.iter().zip(w2).map(|(x, y)| x + y).collect(),
            _ => va.clone(),
        })
        .collect();
    let mut quadratic = vec![vec![vec![0.0; m]; m]; m];
    for a in 0..m {
        for b in a..m {
            let d2 = second_derivative(net, profile, &dirs[a], &dirs[b]);
            for (i, ci) in cokernel.iter().enumerate() {
                let val = dot(ci, &d2);
                quadratic[i][a][b] = val;
                quadratic[i][b][a] = val;
            }
        }
    }
    let lm = w.transpose() * &jl * &v;
    let lambda_matrix = (0..m).map(|i| (0..m).map(|j| lm[(i, j)]).collect()).collect();
    Ok(ReducedSystem {
        mode,
        mu_lambda: eval_mu(&mu.kind, &profile.first_lambda),
        lambda_matrix,
        quadratic,
        kernel,
        cokernel,
        range_correction: w2,
        biorthogonality_residual: max_offdiag_residual(&w, &v),
        cokernel_overlap: overlap,
        determinacy: None,
    })
}

/// `g_xxx = ⟨v*, d³F(v,v,v)⟩ − 3⟨v*, d²F(v, L⁻¹ E d²F(v,v))⟩` for a simple
/// eigenvalue, with `E` the projection onto `range J` along `v*` and `L⁻¹`
/// the inverse of `J` restricted to the complement of its kernel.
pub fn cubic_coefficient(net: &Network, mu: &Eigenfunction, profile: &DerivativeProfile) -> Result<f64> {
    let rs = reduced_coefficients(net, mu, profile)?;
    if rs.mode != ReductionMode::Simple {
        return Err(Error::InvalidArgument(
            "cubic coefficient needs a simple eigenvalue".into(),
        ));
    }
    let v = &rs.kernel[0];
    let vs = &rs.cokernel[0];
    let j = jacobian_numeric(net, &profile.first);
    let (_, sv, tol) = svd_kernel(&j);
    if sv.len() > 1 && sv[1] <= tol {
        return Err(Error::SingularRangeRestriction);
    }
    let y = second_derivative(net, profile, v, v);
    let ratio = dot(vs, &y) / dot(vs, vs);
    let ey = DVector::from_iterator(y.len(), y.iter().zip(vs).map(|(a, b)| a - ratio * b));
    let pinv = j
        .pseudo_inverse(tol)
        .map_err(|_| Error::SingularRangeRestriction)?;
    let z: Vec<f64> = (pinv * ey).iter().copied().collect();
    let d3 = third_derivative(profile, v);
    let corr = second_derivative(net, profile, v, &z);
    Ok(dot(vs, &d3) - 3.0 * dot(vs, &corr))
}

/// One real solution of `h(y, 1) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSolution {
    pub y: Vec<f64>,
    pub residual: f64,
    /// Rank of `D_(y,λ) h(y, 1)`.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticBranchSystem {
    /// Trivial solution first, then the others in discovery order.
    pub solutions: Vec<BranchSolution>,
    pub starts: usize,
    /// Pairs `(i, j)` whose coefficients satisfy the relations necessary for
    /// a shared linear factor.
    pub common_factor_pairs: Vec<(usize, usize)>,
    /// Every nontrivial solution has full rank `m`.
    pub rank_condition: bool,
}

impl QuadraticBranchSystem {
    pub fn count(&self) -> usize {
        self.solutions.len()
    }

    /// Both nondegeneracy assumptions hold.
    pub fn assumptions_hold(&self) -> bool {
        self.rank_condition && self.common_factor_pairs.is_empty()
    }
}

struct HSystem {
    lin: DMatrix<f64>,
    quad: Vec<DMatrix<f64>>,
}

impl HSystem {
    fn eval(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut h = &self.lin * y;
        for (i, q) in self.quad.iter().enumerate() {
            h[i] += 0.5 * y.dot(&(q * y));
        }
        h
    }

    fn jac(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut j = self.lin.clone();
        for (i, q) in self.quad.iter().enumerate() {
            let g = q * y;
            for a in 0..y.len() {
                j[(i, a)] += g[a];
            }
        }
        j
    }

    fn newton(&self, start: DVector<f64>) -> Option<DVector<f64>> {
        let mut y = start;
        let mut h = self.eval(&y);
        let mut norm = h.norm();
        for _ in 0..100 {
            if norm < 1e-14 {
                break;
            }
            let j = self.jac(&y);
            let step = match j.clone().lu().solve(&(-&h)) {
                Some(s) if s.iter().all(|x| x.is_finite()) => s,
                _ => j.pseudo_inverse(1e-12).ok()? * (-&h),
            };
            let mut t = 1.0;
            let mut improved = false;
            for _ in 0..40 {
                let cand = &y + &step * t;
                let hc = self.eval(&cand);
                if hc.norm() < norm {
                    y = cand;
                    h = hc;
                    norm = h.norm();
                    improved = true;
                    break;
                }
                t *= 0.5;
            }
            if !improved {
                break;
            }
        }
        (norm < 1e-9 && y.iter().all(|x| x.is_finite())).then_some(y)
    }
}

/// Real roots of `c3 t³ + c2 t² + c1 t + c0`.
fn real_cubic_roots(c: [f64; 4]) -> Vec<f64> {
    let scale = c.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if scale == 0.0 {
        return Vec::new();
    }
    let c = c.map(|x| x / scale);
    let degree = (0..4).rev().find(|&d| c[3 - d].abs() > 1e-12).unwrap_or(0);
    if degree == 0 {
        return Vec::new();
    }
    let lead = c[3 - degree];
    let companion = DMatrix::from_fn(degree, degree, |i, j| {
        if i == 0 {
            -c[3 - degree + 1 + j] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect()
}

/// Candidate nontrivial solutions of a two-dimensional system. Every one
/// lies on a ray `y = s u` with `Λ u` parallel to `Q(u, u)`, a homogeneous
/// cubic condition on `u`; both affine charts are searched.
fn ray_solutions(sys: &HSystem) -> Vec<DVector<f64>> {
    let l = &sys.lin;
    // Coefficients of u1^(3-k) u2^k in (Λu)_i and Q_i(u, u).
    let lin = |i: usize| [l[(i, 0)], l[(i, 1)]];
    let quad = |i: usize| {
        let q = &sys.quad[i];
        [q[(0, 0)], 2.0 * q[(0, 1)], q[(1, 1)]]
    };
    let mul = |a: [f64; 2], b: [f64; 3]| {
        let mut out = [0.0; 4];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let (p, q) = (mul(lin(0), quad(1)), mul(lin(1), quad(0)));
    let det: [f64; 4] = std::array::from_fn(|k| p[k] - q[k]);
    let mut dirs: Vec<DVector<f64>> = Vec::new();
    // u = (t, 1): det is Σ det[k] t^(3-k).
    for t in real_cubic_roots(det) {
        dirs.push(DVector::from_vec(vec![t, 1.0]));
    }
    // u = (1, t): det is Σ det[k] t^k.
    for t in real_cubic_roots([det[3], det[2], det[1], det[0]]) {
        dirs.push(DVector::from_vec(vec![1.0, t]));
    }
    dirs.into_iter()
        .filter_map(|u| {
            let lu = &sys.lin * &u;
            let qu = DVector::from_fn(2, |i, _| u.dot(&(&sys.quad[i] * &u)));
            let i = if qu[0].abs() >= qu[1].abs() { 0 } else { 1 };
            (qu[i].abs() > 1e-14).then(|| &u * (-2.0 * lu[i] / qu[i]))
        })
        .collect()
}

/// Real solutions of `μ' y + ½ Σ (h_i)_ab y_a y_b = 0` by deterministic
/// multi-start damped Newton, seeded in two dimensions by the exact rays.
pub fn quadratic_branch_system(rs: &ReducedSystem) -> Result<QuadraticBranchSystem> {
    let m = rs.quadratic.len();
    let lin = DMatrix::from_fn(m, m, |i, j| rs.lambda_matrix[i][j]);
    let quad: Vec<DMatrix<f64>> = rs
        .quadratic
        .iter()
        .map(|qi| DMatrix::from_fn(m, m, |a, b| qi[a][b]))
        .collect();
    let qnorm = quad.iter().map(|q| q.norm()).fold(0.0, f64::max);
    if qnorm < 1e-12 {
        return Err(Error::DegenerateQuadratic);
    }
    let sys = HSystem { lin, quad };
    let scale = sys.lin.norm().max(1e-12) / qnorm;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let directions: Vec<DVector<f64>> = if m == 1 {
        vec![DVector::from_element(1, 1.0), DVector::from_element(1, -1.0)]
    } else if m == 2 {
        (0..16)
            .map(|t| {
                let a = std::f64::consts::TAU * (t as f64 + 0.5) / 16.0;
                DVector::from_vec(vec![a.cos(), a.sin()])
            })
            .collect()
    } else {
        (0..16 * m)
            .map(|_| {
                let d = DVector::from_fn(m, |_, _| rng.random_range(-1.0f64..1.0));
                let n = d.norm().max(1e-12);
                d / n
            })
            .collect()
    };
    let radii: Vec<f64> = (-4..=4).map(|e| scale * 2f64.powi(e)).collect();

    let mut found: Vec<DVector<f64>> = vec![DVector::zeros(m)];
    let mut starts = 0;
    if m == 2 {
        for y in ray_solutions(&sys) {
            starts += 1;
            if let Some(y) = sys.newton(y) {
                if !found.iter().any(|z| (z - &y).norm() < 1e-6 * y.norm().max(1.0)) {
                    found.push(y);
                }
            }
        }
    }
    for r in &radii {
        for d in &directions {
            starts += 1;
            if let Some(y) = sys.newton(d * *r) {
                let dup = found
                    .iter()
                    .any(|z| (z - &y).norm() < 1e-6 * y.norm().max(1.0));
                if !dup {
                    found.push(y);
                }
            }
        }
    }

    let solutions: Vec<BranchSolution> = found
        .into_iter()
        .map(|y| {
            let mut full = DMatrix::zeros(m, m + 1);
            full.view_mut((0, 0), (m, m)).copy_from(&sys.jac(&y));
            full.set_column(m, &(&sys.lin * &y));
            let tol = RANK_TOL * full.norm().max(1.0);
            let rank = full.rank(tol);
            BranchSolution {
                residual: sys.eval(&y).norm(),
                y: y.iter().copied().collect(),
                rank,
            }
        })
        .collect();
    let rank_condition = solutions
        .iter()
        .skip(1)
        .all(|s| s.rank == m);
    Ok(QuadraticBranchSystem {
        solutions,
        starts,
        common_factor_pairs: common_factor_pairs(&rs.quadratic),
        rank_condition,
    })
}

/// Pairs `(i, j)` whose quadratic parts have the shape `y_i ℓ(y)`,
/// `y_j ℓ(y)` for one linear form `ℓ`: `(h_i)_dl = 0` for `d, l ≠ i`,
/// `(h_j)_dl = 0` for `d, l ≠ j`, `(h_i)_ki = (h_j)_kj` for `k ∉ {i, j}`,
/// `(h_i)_ii = 2 (h_j)_ij` and `(h_j)_jj = 2 (h_i)_ij`. These are necessary
/// for `h_i`, `h_j` to share a factor.
pub fn common_factor_pairs(quadratic: &[Vec<Vec<f64>>]) -> Vec<(usize, usize)> {
    let m = quadratic.len();
    let scale = quadratic
        .iter()
        .flatten()
        .flatten()
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(1e-300);
    let zero = |x: f64| x.abs() <= 1e-9 * scale;
    let vanishes_off = |i: usize| {
        (0..m).all(|d| (0..m).all(|l| d == i || l == i || zero(quadratic[i][d][l])))
    };
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let (hi, hj) = (&quadratic[i], &quadratic[j]);
            let shared = (0..m)
                .filter(|&k| k != i && k != j)
                .all(|k| zero(hi[k][i] - hj[k][j]));
            if vanishes_off(i)
                && vanishes_off(j)
                && shared
                && zero(hi[i][i] - 2.0 * hj[i][j])
                && zero(hj[j][j] - 2.0 * hi[i][j])
            {
                out.push((i, j));
            }
        }
    }
    out
}

/// Outcome of the defective second-order condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DefectiveCondition {
    pub holds: bool,
    /// First `(p, q)` in lexicographic order with a nonzero bracket.
    pub witness: Option<(usize, usize)>,
    pub value: f64,
    /// `⟨v*_1, v*_2⟩` after biorthogonalization.
    pub cokernel_overlap: f64,
}

/// `⟨v*_2, (A_p u) ∘ (A_q u)⟩ ≠ 0` for some `(p, q)`, with `u = v2 + W2`.
pub fn defective_condition(net: &Network, profile: &DerivativeProfile) -> Result<DefectiveCondition> {
    profile.check(net)?;
    let b = defective_basis(net, profile)?;
    let v2 = col(&b.v, 1);
    let u: Vec<f64> = v2.iter().zip(&b.w2).map(|(x, y)| x + y).collect();
    let v2s = col(&b.w, 1);
    let vars = net.k() + 1;
    let images: Vec<Vec<f64>> = (0..vars).map(|p| net.apply(p, &u)).collect();
    for p in 0..vars {
        for q in 0..vars {
            let prod: Vec<f64> = images[p].iter().zip(&images[q]).map(|(a, c)| a * c).collect();
            let val = dot(&v2s, &prod);
            if val.abs() > ZERO_TOL {
                return Ok(DefectiveCondition {
                    holds: true,
                    witness: Some((p, q)),
                    value: val,
                    cokernel_overlap: b.overlap,
                });
            }
        }
    }
    Ok(DefectiveCondition {
        holds: false,
        witness: None,
        value: 0.0,
        cokernel_overlap: b.overlap,
    })
}

/// Kernel vectors as exact-then-numeric helper for callers that only need
/// `ker J` at a profile.
pub fn kernel_basis(net: &Network, f: &[f64], dim: usize) -> Result<Vec<Vec<f64>>> {
    let k = kernel_of(net, f, false, dim)?;
    Ok((0..k.ncols()).map(|j| col(&k, j)).collect())
}
