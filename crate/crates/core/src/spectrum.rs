//! Generic Jacobian spectra as functions of the first derivatives `f0..fk`.
//!
//! The Jacobian at a fully synchronous equilibrium is
//! `J = f0 Id + f1 A_1 + ... + fk A_k`. Its eigenvalues, viewed as functions
//! of the `f`s, are the *eigenfunctions*. Everything here is exact: a
//! condition holds generically iff it is a polynomial identity.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{poly_det, q, q_frac, q_sqrt, q_to_f64, LinearForm, Poly, QuadraticForm, Q};
use crate::error::{Error, Result};
use crate::exact::{self, QMatrix};
use crate::network::Network;
use crate::synchrony::SynchronySubspace;

/// Symbolic Jacobian: entry `(i,j)` is a linear form in `f0..fk`.
pub fn jacobian_form(net: &Network) -> Vec<Vec<LinearForm>> {
    let n = net.n_cells();
    let vars = net.k() + 1;
    let mut j = vec![vec![LinearForm::zero(vars); n]; n];
    for i in 0..n {
        for l in 0..=net.k() {
            let s = net.source(l, i);
            j[i][s].0[l] += Q::one();
        }
    }
    j
}

/// Numeric Jacobian at first derivatives `f = (f0..fk)`.
pub fn jacobian_numeric(net: &Network, f: &[f64]) -> DMatrix<f64> {
    let n = net.n_cells();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for (l, fl) in f.iter().enumerate().take(net.k() + 1) {
            m[(i, net.source(l, i))] += fl;
        }
    }
    m
}

/// Exact Jacobian at rational first derivatives.
pub fn jacobian_exact(net: &Network, f: &[Q]) -> QMatrix {
    jacobian_form(net)
        .iter()
        .map(|row| row.iter().map(|e| e.eval(f)).collect())
        .collect()
}

/// `det(J - x Id)` as a polynomial in `f0..fk, x` (`x` is the last variable).
pub fn characteristic_polynomial(net: &Network) -> Poly {
    let vars = net.k() + 2;
    let x = Poly::var(vars, vars - 1);
    let m: Vec<Vec<Poly>> = jacobian_form(net)
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .map(|(j, e)| {
                    let p = e.to_poly().with_vars(vars);
                    if i == j {
                        &p - &x
                    } else {
                        p
                    }
                })
                .collect()
        })
        .collect();
    poly_det(&m, vars)
}

/// Valency `f0 + f1 + ... + fk` and the 3-cell invariants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Invariants {
    pub valency: LinearForm,
    pub alpha1: LinearForm,
    pub alpha0: QuadraticForm,
    pub discriminant: QuadraticForm,
}

fn require_three(net: &Network) -> Result<()> {
    if net.n_cells() != 3 {
        return Err(Error::WrongCellCount {
            expected: 3,
            found: net.n_cells(),
        });
    }
    Ok(())
}

/// Invariants of a 3-cell Jacobian via the reduction to the 2x2 block
/// `S = [[a-e, b-f], [c-e, d-f]]` complementary to the valency eigenvector.
pub fn spectral_invariants(net: &Network) -> Result<Invariants> {
    require_three(net)?;
    let j = jacobian_form(net);
    let (a, b, c, d, e, f) = (&j[0][0], &j[0][1], &j[1][0], &j[1][1], &j[2][0], &j[2][1]);
    let s11 = a - e;
    let s12 = b - f;
    let s21 = c - e;
    let s22 = d - f;
    let alpha1 = &s11 + &s22;
    let alpha0 = &s11.product(&s22) - &s12.product(&s21);
    let discriminant = &alpha1.product(&alpha1) - &alpha0.scale(&q(4));
    assert!(
        discriminant.independent_of(0),
        "discriminant must not involve f0"
    );
    Ok(Invariants {
        valency: LinearForm::valency(net.k() + 1),
        alpha1,
        alpha0,
        discriminant,
    })
}

/// Sign class of a quadratic form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscriminantClass {
    PositiveDefiniteOrPSD,
    NegativeDefiniteOrNSD,
    Indefinite,
    IdenticallyZero,
}

/// Coefficients `c_0..c_n` of `det(x Id - M)` (Faddeev–LeVerrier).
fn char_coefficients(m: &QuadraticForm) -> Vec<Q> {
    let n = m.vars();
    let mat = &m.0;
    let mul = |a: &QMatrix, b: &QMatrix| -> QMatrix {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|k| &a[i][k] * &b[k][j]).sum())
                    .collect()
            })
            .collect()
    };
    let mut c = vec![Q::zero(); n + 1];
    c[n] = Q::one();
    let mut mk: QMatrix = vec![vec![Q::zero(); n]; n];
    for k in 1..=n {
        let mut next = mul(mat, &mk);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += &c[n - k + 1];
        }
        mk = next;
        let am = mul(mat, &mk);
        let tr: Q = (0..n).map(|i| am[i][i].clone()).sum();
        c[n - k] = -tr / q(k as i64);
    }
    c
}

/// Exact definiteness by the sign pattern of the characteristic polynomial
/// (all roots real, so Descartes' rule is exact).
pub fn classify_definiteness(m: &QuadraticForm) -> DiscriminantClass {
    if m.is_zero() {
        return DiscriminantClass::IdenticallyZero;
    }
    let c = char_coefficients(m);
    let n = c.len() - 1;
    let psd = (0..=n).all(|i| {
        let s = if (n - i) % 2 == 0 { c[i].clone() } else { -c[i].clone() };
        !s.is_negative()
    });
    let nsd = c.iter().all(|x| !x.is_negative());
    match (psd, nsd) {
        (true, _) => DiscriminantClass::PositiveDefiniteOrPSD,
        (_, true) => DiscriminantClass::NegativeDefiniteOrNSD,
        _ => DiscriminantClass::Indefinite,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RealClass {
    Always,
    Never,
    OnOpenSet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RootBranch {
    Plus,
    Minus,
}

/// What an eigenfunction is, independent of multiplicities.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EigenKind {
    /// The row-sum eigenvalue `f0 + ... + fk`.
    Valency(LinearForm),
    Linear(LinearForm),
    /// `(alpha1 ± sqrt(alpha1^2 - 4 alpha0)) / 2`.
    QuadraticRoot {
        alpha1: LinearForm,
        alpha0: QuadraticForm,
        branch: RootBranch,
    },
    /// Roots of an unresolved factor of the given degree (networks with more
    /// than three cells only).
    Residual { degree: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Eigenfunction {
    pub kind: EigenKind,
    pub alg_mult: usize,
    pub geo_mult: usize,
    pub real_class: RealClass,
}

impl EigenKind {
    /// The linear form for valency/linear kinds.
    pub fn linear_form(&self) -> Option<&LinearForm> {
        match self {
            EigenKind::Valency(l) | EigenKind::Linear(l) => Some(l),
            _ => None,
        }
    }

    /// Structural identity of eigenfunctions (valency equals its linear form).
    pub fn same_function(&self, other: &EigenKind) -> bool {
        match (self.linear_form(), other.linear_form()) {
            (Some(a), Some(b)) => a == b,
            (None, None) => self == other,
            _ => false,
        }
    }

    pub fn is_valency(&self) -> bool {
        matches!(self, EigenKind::Valency(_))
    }

    pub fn eval(&self, f: &[f64]) -> Complex64 {
        match self {
            EigenKind::Valency(l) | EigenKind::Linear(l) => Complex64::new(l.eval_f64(f), 0.0),
            EigenKind::QuadraticRoot {
                alpha1,
                alpha0,
                branch,
            } => {
                let a1 = alpha1.eval_f64(f);
                let d = a1 * a1 - 4.0 * alpha0.eval_f64(f);
                let root = Complex64::new(d, 0.0).sqrt();
                let s = if *branch == RootBranch::Plus { 1.0 } else { -1.0 };
                (Complex64::new(a1, 0.0) + root * s) / 2.0
            }
            EigenKind::Residual { .. } => Complex64::new(f64::NAN, f64::NAN),
        }
    }

    /// Discriminant `alpha1^2 - 4 alpha0` of a quadratic root.
    pub fn discriminant(&self) -> Option<QuadraticForm> {
        match self {
            EigenKind::QuadraticRoot { alpha1, alpha0, .. } => {
                Some(&alpha1.product(alpha1) - &alpha0.scale(&q(4)))
            }
            _ => None,
        }
    }
}

impl fmt::Display for EigenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenKind::Valency(l) | EigenKind::Linear(l) => write!(f, "{l}"),
            EigenKind::QuadraticRoot {
                alpha1, branch, ..
            } => {
                let d = self.discriminant().expect("quadratic root");
                let s = if *branch == RootBranch::Plus { '+' } else { '-' };
                write!(f, "({alpha1} {s} sqrt({d}))/2")
            }
            EigenKind::Residual { degree } => write!(f, "root of degree-{degree} factor"),
        }
    }
}

impl Eigenfunction {
    pub fn is_simple(&self) -> bool {
        self.alg_mult == 1
    }

    pub fn is_semisimple(&self) -> bool {
        self.alg_mult == self.geo_mult
    }

    pub fn is_defective(&self) -> bool {
        self.geo_mult < self.alg_mult
    }

    /// Display label; defective eigenfunctions carry a trailing `*`.
    pub fn label(&self) -> String {
        if self.is_defective() {
            format!("{}*", self.kind)
        } else {
            self.kind.to_string()
        }
    }
}

/// Symbolic spectral data of a network's generic Jacobian.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub n_cells: usize,
    pub valency: LinearForm,
    /// Sum of the non-valency eigenvalues (3-cell networks).
    pub alpha1: Option<LinearForm>,
    /// Product of the non-valency eigenvalues (3-cell networks).
    pub alpha0: Option<QuadraticForm>,
    pub discriminant: Option<QuadraticForm>,
    pub discriminant_class: Option<DiscriminantClass>,
    pub eigenfunctions: Vec<Eigenfunction>,
    /// Polynomials assumed non-zero, rendered as `p != 0`.
    pub degeneracy_conditions: Vec<String>,
    #[serde(with = "poly_serde")]
    pub char_poly: Poly,
    pub warnings: Vec<String>,
}

mod poly_serde {
    use super::*;

    #[derive(Serialize, Deserialize)]
    struct Repr {
        vars: usize,
        terms: Vec<(Vec<u16>, String)>,
    }

    pub fn serialize<S: serde::Serializer>(p: &Poly, s: S) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            vars: p.vars,
            terms: p.terms.iter().map(|(e, c)| (e.clone(), c.to_string())).collect(),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Poly, D::Error> {
        let r = Repr::deserialize(d)?;
        let mut terms = BTreeMap::new();
        for (e, c) in r.terms {
            let c: Q = c.parse().map_err(serde::de::Error::custom)?;
            terms.insert(e, c);
        }
        Ok(Poly { vars: r.vars, terms })
    }
}

impl SpectralReport {
    pub fn valency_eigenfunction(&self) -> &Eigenfunction {
        self.eigenfunctions
            .iter()
            .find(|e| e.kind.is_valency())
            .expect("valency always present")
    }

    /// Eigenfunction structurally equal to `kind`, if any.
    pub fn find(&self, kind: &EigenKind) -> Option<&Eigenfunction> {
        self.eigenfunctions
            .iter()
            .find(|e| e.kind.same_function(kind))
    }
}

/// Deterministic integer sample points used for generic ranks.
fn generic_points(vars: usize, count: usize) -> Vec<Vec<Q>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0f_ab);
    (0..count)
        .map(|_| {
            (0..vars)
                .map(|_| {
                    let mut v = 0i64;
                    while v == 0 {
                        v = rng.random_range(-97..=97);
                    }
                    q(v)
                })
                .collect()
        })
        .collect()
}

/// Generic geometric multiplicity of a linear eigenfunction.
fn generic_geo_mult(net: &Network, mu: &LinearForm) -> usize {
    let n = net.n_cells();
    let max_rank = generic_points(net.k() + 1, 4)
        .iter()
        .map(|f| {
            let mut j = jacobian_exact(net, f);
            let m = mu.eval(f);
            for (i, row) in j.iter_mut().enumerate() {
                row[i] -= &m;
            }
            exact::rank(&j)
        })
        .max()
        .unwrap_or(n);
    n - max_rank
}

/// Polynomial identity test for `p == 0`, recording the complement otherwise.
fn identity(p: &Poly, conditions: &mut Vec<String>) -> bool {
    if p.is_zero() {
        true
    } else {
        conditions.push(format!("{p} != 0"));
        false
    }
}

fn real_class_of(class: DiscriminantClass) -> RealClass {
    match class {
        DiscriminantClass::PositiveDefiniteOrPSD | DiscriminantClass::IdenticallyZero => {
            RealClass::Always
        }
        DiscriminantClass::NegativeDefiniteOrNSD => RealClass::Never,
        DiscriminantClass::Indefinite => RealClass::OnOpenSet,
    }
}

fn linear(kind: EigenKind, alg: usize, geo: usize) -> Eigenfunction {
    Eigenfunction {
        kind,
        alg_mult: alg,
        geo_mult: geo,
        real_class: RealClass::Always,
    }
}

/// Exact linear square root `m` with `D = m^2`, when it exists.
fn linear_square_root(d: &QuadraticForm) -> Option<LinearForm> {
    let (c, w) = d.rank_one_factor()?;
    let s = q_sqrt(&c)?;
    Some(w.scale(&s))
}

/// Spectral classification of a 3-cell network following the eigenvalue
/// structure of constant row-sum 3x3 matrices.
pub fn classify_spectrum(net: &Network) -> Result<SpectralReport> {
    require_three(net)?;
    let inv = spectral_invariants(net)?;
    let vars = net.k() + 1;
    let v = inv.valency.clone();
    let vp = v.to_poly();
    let a1p = inv.alpha1.to_poly();
    let a0p = inv.alpha0.to_poly();
    let dp = inv.discriminant.to_poly();
    let mut conditions = Vec::new();

    // upsilon is a root of x^2 - alpha1 x + alpha0
    let upsilon_root = &(&(&vp * &vp) - &(&a1p * &vp)) + &a0p;
    let two_v = &a1p - &vp.scale(&q(2));

    let mut eig = Vec::new();
    let class = classify_definiteness(&inv.discriminant);
    if identity(&upsilon_root, &mut conditions) {
        if identity(&two_v, &mut conditions) {
            let geo = generic_geo_mult(net, &v);
            eig.push(linear(EigenKind::Valency(v.clone()), 3, geo));
        } else {
            let geo = generic_geo_mult(net, &v);
            eig.push(linear(EigenKind::Valency(v.clone()), 2, geo));
            let other = &inv.alpha1 - &v;
            eig.push(linear(EigenKind::Linear(other), 1, 1));
        }
    } else if dp.is_zero() {
        // alpha1 != 2 upsilon follows from upsilon not being a root.
        eig.push(linear(EigenKind::Valency(v.clone()), 1, 1));
        let half = inv.alpha1.scale(&q_frac(1, 2));
        let j = jacobian_form(net);
        let (a, b, c, d, e, f) = (&j[0][0], &j[0][1], &j[1][0], &j[1][1], &j[2][0], &j[2][1]);
        let triple = [c - e, b - f, &(&(d - a) + e) - f];
        let geo = if triple.iter().all(LinearForm::is_zero) {
            2
        } else {
            for t in triple.iter().filter(|t| !t.is_zero()) {
                conditions.push(format!("{t} != 0"));
            }
            1
        };
        debug_assert_eq!(geo, generic_geo_mult(net, &half));
        eig.push(linear(EigenKind::Linear(half), 2, geo));
    } else {
        conditions.push(format!("{dp} != 0"));
        eig.push(linear(EigenKind::Valency(v.clone()), 1, 1));
        match linear_square_root(&inv.discriminant) {
            Some(m) if class == DiscriminantClass::PositiveDefiniteOrPSD => {
                let half = q_frac(1, 2);
                let plus = (&inv.alpha1 + &m).scale(&half);
                let minus = (&inv.alpha1 - &m).scale(&half);
                let mut pair = [plus, minus];
                pair.sort();
                for l in pair {
                    eig.push(linear(EigenKind::Linear(l), 1, 1));
                }
            }
            _ => {
                let rc = real_class_of(class);
                for branch in [RootBranch::Plus, RootBranch::Minus] {
                    eig.push(Eigenfunction {
                        kind: EigenKind::QuadraticRoot {
                            alpha1: inv.alpha1.clone(),
                            alpha0: inv.alpha0.clone(),
                            branch,
                        },
                        alg_mult: 1,
                        geo_mult: 1,
                        real_class: rc,
                    });
                }
            }
        }
    }
    sort_eigenfunctions(&mut eig);
    let char_poly = characteristic_polynomial(net);
    let _ = vars;
    Ok(SpectralReport {
        n_cells: 3,
        valency: v,
        alpha1: Some(inv.alpha1),
        alpha0: Some(inv.alpha0),
        discriminant: Some(inv.discriminant),
        discriminant_class: Some(class),
        eigenfunctions: eig,
        degeneracy_conditions: conditions,
        char_poly,
        warnings: Vec::new(),
    })
}

fn kind_rank(k: &EigenKind) -> u8 {
    match k {
        EigenKind::Valency(_) => 0,
        EigenKind::Linear(_) => 1,
        EigenKind::QuadraticRoot { .. } => 2,
        EigenKind::Residual { .. } => 3,
    }
}

fn sort_eigenfunctions(eig: &mut [Eigenfunction]) {
    eig.sort_by(|a, b| {
        kind_rank(&a.kind).cmp(&kind_rank(&b.kind)).then_with(|| {
            match (a.kind.linear_form(), b.kind.linear_form()) {
                (Some(x), Some(y)) => y.cmp(x),
                _ => std::cmp::Ordering::Equal,
            }
        })
    });
}

/// Multiplicity of `x = mu` as a root of the characteristic polynomial
/// (0 when `mu` is not an eigenfunction).
pub fn root_multiplicity(char_poly: &Poly, mu: &LinearForm) -> usize {
    let vars = char_poly.vars;
    let x = vars - 1;
    let shift = &mu.to_poly().with_vars(vars) + &Poly::var(vars, x);
    let shifted = char_poly.substitute(x, &shift);
    shifted
        .terms
        .keys()
        .map(|e| e[x] as usize)
        .min()
        .unwrap_or(usize::MAX)
}

/// Does `mu` annihilate the characteristic polynomial identically?
pub fn is_root(char_poly: &Poly, mu: &LinearForm) -> bool {
    let vars = char_poly.vars;
    char_poly
        .substitute(vars - 1, &mu.to_poly().with_vars(vars))
        .is_zero()
}

fn trace_square(net: &Network) -> QuadraticForm {
    let j = jacobian_form(net);
    let n = net.n_cells();
    let mut acc = QuadraticForm::zero(net.k() + 1);
    for a in 0..n {
        for b in 0..n {
            acc = &acc + &j[a][b].product(&j[b][a]);
        }
    }
    acc
}

/// Spectral report for any cell count: exact for linear eigenfunctions and
/// a single residual quadratic; larger residual factors are reported as
/// [`EigenKind::Residual`] with a numerically sampled real class.
pub fn general_spectrum(net: &Network) -> SpectralReport {
    let n = net.n_cells();
    let k = net.k();
    let vars = k + 1;
    let char_poly = characteristic_polynomial(net);
    let valency = LinearForm::valency(vars);
    let mut eig = Vec::new();
    let mut found = 0;
    let mut coeffs = vec![-1i64; k];
    'outer: loop {
        let mut c = vec![1i64];
        c.extend(&coeffs);
        let mu = LinearForm::from_ints(&c);
        let m = root_multiplicity(&char_poly, &mu);
        if m > 0 && m != usize::MAX {
            let kind = if mu == valency {
                EigenKind::Valency(mu.clone())
            } else {
                EigenKind::Linear(mu.clone())
            };
            let geo = generic_geo_mult(net, &mu);
            eig.push(linear(kind, m, geo));
            found += m;
        }
        for d in coeffs.iter_mut() {
            if *d < 1 {
                *d += 1;
                continue 'outer;
            }
            *d = -1;
        }
        break;
    }
    let residual = n - found;
    let mut warnings = Vec::new();
    let (mut alpha1, mut alpha0, mut disc, mut disc_class) = (None, None, None, None);
    if residual == 2 {
        let tr = jacobian_form(net)
            .iter()
            .enumerate()
            .fold(LinearForm::zero(vars), |acc, (i, row)| &acc + &row[i]);
        let mut a1 = tr;
        let mut sq = trace_square(net);
        for e in &eig {
            let l = e.kind.linear_form().expect("linear");
            let m = q(e.alg_mult as i64);
            a1 = &a1 - &l.scale(&m);
            sq = &sq - &l.product(l).scale(&m);
        }
        let a0 = (&a1.product(&a1) - &sq).scale(&q_frac(1, 2));
        let d = &a1.product(&a1) - &a0.scale(&q(4));
        let class = classify_definiteness(&d);
        let rc = real_class_of(class);
        for branch in [RootBranch::Plus, RootBranch::Minus] {
            eig.push(Eigenfunction {
                kind: EigenKind::QuadraticRoot {
                    alpha1: a1.clone(),
                    alpha0: a0.clone(),
                    branch,
                },
                alg_mult: 1,
                geo_mult: 1,
                real_class: rc,
            });
        }
        alpha1 = Some(a1);
        alpha0 = Some(a0);
        disc = Some(d);
        disc_class = Some(class);
    } else if residual > 2 {
        warnings.push(format!(
            "characteristic polynomial has an unresolved factor of degree {residual}; real class sampled numerically"
        ));
        let rc = sample_residual_real_class(net, &eig, residual);
        eig.push(Eigenfunction {
            kind: EigenKind::Residual { degree: residual },
            alg_mult: residual,
            geo_mult: residual,
            real_class: rc,
        });
    }
    sort_eigenfunctions(&mut eig);
    SpectralReport {
        n_cells: n,
        valency,
        alpha1,
        alpha0,
        discriminant: disc,
        discriminant_class: disc_class,
        eigenfunctions: eig,
        degeneracy_conditions: Vec::new(),
        char_poly,
        warnings,
    }
}

/// Majority vote over random draws on whether the residual roots are real.
fn sample_residual_real_class(net: &Network, known: &[Eigenfunction], degree: usize) -> RealClass {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e51_d0a1);
    let draws = 20;
    let mut real = 0;
    for _ in 0..draws {
        let f: Vec<f64> = (0..=net.k()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut eigs: Vec<Complex64> = jacobian_numeric(net, &f)
            .complex_eigenvalues()
            .iter()
            .copied()
            .collect();
        for e in known {
            let v = e.kind.eval(&f);
            for _ in 0..e.alg_mult {
                if let Some(pos) = eigs
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - v).norm().total_cmp(&(b.1 - v).norm()))
                    .map(|(i, _)| i)
                {
                    eigs.remove(pos);
                }
            }
        }
        if eigs.len() == degree && eigs.iter().all(|z| z.im.abs() < 1e-9) {
            real += 1;
        }
    }
    match real {
        0 => RealClass::Never,
        r if r == draws => RealClass::Always,
        _ => RealClass::OnOpenSet,
    }
}

/// Spectral report dispatching on the cell count.
pub fn spectral_report(net: &Network) -> Result<SpectralReport> {
    if net.n_cells() == 3 {
        classify_spectrum(net)
    } else {
        Ok(general_spectrum(net))
    }
}

/// Eigenfunctions of a quotient network (the restriction of the Jacobian to
/// the synchrony subspace).
pub fn eigenfunctions_of_quotient(sub: &SynchronySubspace) -> Result<SpectralReport> {
    spectral_report(&sub.quotient)
}

/// One cluster of numerically equal eigenvalues.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericEigen {
    pub value: Complex64,
    pub alg_mult: usize,
    pub geo_mult: usize,
    /// Unit-norm basis of `ker(J - value Id)`.
    pub vectors: Vec<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericSpectrum {
    pub eigenvalues: Vec<Complex64>,
    pub clusters: Vec<NumericEigen>,
    /// Relative rank tolerance used (`1e-7 * max(1, ||J||)`).
    pub rank_tolerance: f64,
    /// Set when some eigenvalue is defective or clusters are ambiguous.
    pub ill_conditioned: bool,
}

/// Dense numeric eigen-decomposition of the Jacobian at `f`.
pub fn numeric_spectrum(net: &Network, f: &[f64]) -> NumericSpectrum {
    let j = jacobian_numeric(net, f);
    let n = net.n_cells();
    let scale = j.norm().max(1.0);
    let rank_tol = 1e-7 * scale;
    let cluster_tol = 1e-5 * scale;
    let mut eigenvalues: Vec<Complex64> = j.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut groups: Vec<Vec<Complex64>> = Vec::new();
    for &z in &eigenvalues {
        match groups
            .iter_mut()
            .find(|g| g.iter().any(|w| (w - z).norm() < cluster_tol))
        {
            Some(g) => g.push(z),
            None => groups.push(vec![z]),
        }
    }
    let jc: DMatrix<Complex64> = j.map(|x| Complex64::new(x, 0.0));
    let mut ill = false;
    let clusters = groups
        .into_iter()
        .map(|g| {
            let value = g.iter().sum::<Complex64>() / g.len() as f64;
            let shifted = &jc - DMatrix::<Complex64>::identity(n, n) * value;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.expect("requested right singular vectors");
            let vectors: Vec<Vec<Complex64>> = svd
                .singular_values
                .iter()
                .enumerate()
                .filter(|(_, &s)| s < rank_tol)
                .map(|(i, _)| v_t.row(i).iter().map(|z| z.conj()).collect())
                .collect();
            let geo = vectors.len().max(1);
            if geo < g.len() {
                ill = true;
            }
            NumericEigen {
                value,
                alg_mult: g.len(),
                geo_mult: geo,
                vectors,
            }
        })
        .collect();
    NumericSpectrum {
        eigenvalues,
        clusters,
        rank_tolerance: rank_tol,
        ill_conditioned: ill,
    }
}

/// Exact evaluation helper: `q_to_f64` over a vector.
pub fn to_f64_vec(v: &[Q]) -> Vec<f64> {
    v.iter().map(q_to_f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(inputs: &[&[i64]]) -> Network {
        Network::new("t", 3, inputs.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    fn rows(j: &[Vec<LinearForm>]) -> Vec<Vec<String>> {
        j.iter()
            .map(|r| r.iter().map(|e| e.to_string()).collect())
            .collect()
    }

    #[test]
    fn jacobian_examples() {
        let e6b1 = net(&[&[1, 1, 3], &[1, 3, 2]]);
        assert_eq!(
            rows(&jacobian_form(&e6b1)),
            vec![
                vec!["f0 + f1 + f2", "0", "0"],
                vec!["f1", "f0", "f2"],
                vec!["0", "f2", "f0 + f1"]
            ]
        );
        let loop1 = Network::new("l", 1, vec![vec![1]]).unwrap();
        assert_eq!(rows(&jacobian_form(&loop1)), vec![vec!["f0 + f1"]]);
    }

    #[test]
    fn discriminant_examples() {
        let e6b1 = net(&[&[1, 1, 3], &[1, 3, 2]]);
        let inv = spectral_invariants(&e6b1).unwrap();
        assert_eq!(inv.discriminant.to_string(), "f1^2 + 4*f2^2");
        assert_eq!(
            classify_definiteness(&inv.discriminant),
            DiscriminantClass::PositiveDefiniteOrPSD
        );
        assert!(matches!(
            spectral_invariants(&Network::new("x", 2, vec![vec![1, 1]]).unwrap()),
            Err(Error::WrongCellCount { .. })
        ));
    }

    #[test]
    fn definiteness_classes() {
        let diag = |a: i64, b: i64| {
            QuadraticForm(vec![
                vec![q(0), q(0), q(0)],
                vec![q(0), q(a), q(0)],
                vec![q(0), q(0), q(b)],
            ])
        };
        assert_eq!(classify_definiteness(&diag(1, 0)), DiscriminantClass::PositiveDefiniteOrPSD);
        assert_eq!(classify_definiteness(&diag(-1, -3)), DiscriminantClass::NegativeDefiniteOrNSD);
        assert_eq!(classify_definiteness(&diag(1, -1)), DiscriminantClass::Indefinite);
        assert_eq!(classify_definiteness(&diag(0, 0)), DiscriminantClass::IdenticallyZero);
    }

    #[test]
    fn numeric_three_cycle() {
        let a = Network::new("A", 3, vec![vec![3, 1, 2]]).unwrap();
        let s = numeric_spectrum(&a, &[0.0, 1.0]);
        let psi = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
        for target in [Complex64::new(1.0, 0.0), psi, psi * psi] {
            assert!(s.eigenvalues.iter().any(|z| (z - target).norm() < 1e-12));
        }
        let c = numeric_spectrum(&a, &[0.7, 0.0]);
        assert!(c.eigenvalues.iter().all(|z| (z - 0.7).norm() < 1e-12));
    }

    #[test]
    fn numeric_geometric_multiplicity() {
        let e6e4 = net(&[&[1, 1, 3], &[1, 3, 3]]);
        let s = numeric_spectrum(&e6e4, &[0.3, -0.1, 0.4]);
        let c = s
            .clusters
            .iter()
            .find(|c| (c.value - 0.6).norm() < 1e-9)
            .unwrap();
        assert_eq!((c.alg_mult, c.geo_mult), (2, 2));
    }
}
