//! Exact rational forms and polynomials in the first derivatives `f0..fk`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Exact conversion of a finite double.
pub fn q_from_f64(x: f64) -> Q {
    Q::from_float(x).expect("finite value")
}

pub fn q_to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Rational square root when it exists.
pub fn q_sqrt(x: &Q) -> Option<Q> {
    if x.is_negative() {
        return None;
    }
    let n = x.numer();
    let d = x.denom();
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Q::new(rn, rd))
    } else {
        None
    }
}

fn fmt_coeff_term(out: &mut String, c: &Q, monomial: &str) {
    let first = out.is_empty();
    let neg = c.is_negative();
    let a = c.abs();
    if first {
        if neg {
            out.push('-');
        }
    } else {
        out.push_str(if neg { " - " } else { " + " });
    }
    if monomial.is_empty() {
        out.push_str(&a.to_string());
    } else if a.is_one() {
        out.push_str(monomial);
    } else {
        out.push_str(&a.to_string());
        out.push('*');
        out.push_str(monomial);
    }
}

/// `c0 f0 + c1 f1 + ... + ck fk`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LinearForm(pub Vec<Q>);

impl LinearForm {
    pub fn zero(vars: usize) -> Self {
        LinearForm(vec![Q::zero(); vars])
    }

    pub fn var(vars: usize, i: usize) -> Self {
        let mut v = Self::zero(vars);
        v.0[i] = Q::one();
        v
    }

    pub fn from_ints(c: &[i64]) -> Self {
        LinearForm(c.iter().map(|&x| q(x)).collect())
    }

    /// `f0 + f1 + ... + fk`.
    pub fn valency(vars: usize) -> Self {
        LinearForm(vec![Q::one(); vars])
    }

    pub fn vars(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn coeff(&self, i: usize) -> &Q {
        &self.0[i]
    }

    pub fn scale(&self, s: &Q) -> Self {
        LinearForm(self.0.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, f: &[Q]) -> Q {
        self.0.iter().zip(f).map(|(c, x)| c * x).sum()
    }

    pub fn eval_f64(&self, f: &[f64]) -> f64 {
        self.0.iter().zip(f).map(|(c, x)| q_to_f64(c) * x).sum()
    }

    /// Outer product `self * other` as a symmetric quadratic form.
    pub fn product(&self, other: &LinearForm) -> QuadraticForm {
        let n = self.vars();
        let mut m = vec![vec![Q::zero(); n]; n];
        let half = q_frac(1, 2);
        for i in 0..n {
            for j in 0..n {
                m[i][j] = (&self.0[i] * &other.0[j] + &self.0[j] * &other.0[i]) * &half;
            }
        }
        QuadraticForm(m)
    }

    pub fn to_poly(&self) -> Poly {
        let mut p = Poly::zero(self.vars());
        for (i, c) in self.0.iter().enumerate() {
            if !c.is_zero() {
                let mut e = vec![0u16; self.vars()];
                e[i] = 1;
                p.terms.insert(e, c.clone());
            }
        }
        p
    }
}

impl Add for &LinearForm {
    type Output = LinearForm;
    fn add(self, o: &LinearForm) -> LinearForm {
        LinearForm(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &LinearForm {
    type Output = LinearForm;
    fn sub(self, o: &LinearForm) -> LinearForm {
        LinearForm(self.0.iter().zip(&o.0).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &LinearForm {
    type Output = LinearForm;
    fn neg(self) -> LinearForm {
        LinearForm(self.0.iter().map(|a| -a).collect())
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (i, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            fmt_coeff_term(&mut out, c, &format!("f{i}"));
        }
        if out.is_empty() {
            out.push('0');
        }
        f.write_str(&out)
    }
}

impl Serialize for LinearForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LinearForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<String> = Vec::deserialize(d)?;
        v.iter()
            .map(|s| s.parse::<Q>().map_err(serde::de::Error::custom))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(LinearForm)
    }
}

/// Symmetric form `sum_ij m[i][j] fi fj`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticForm(pub Vec<Vec<Q>>);

impl QuadraticForm {
    pub fn zero(vars: usize) -> Self {
        QuadraticForm(vec![vec![Q::zero(); vars]; vars])
    }

    pub fn vars(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().flatten().all(Zero::is_zero)
    }

    pub fn scale(&self, s: &Q) -> Self {
        QuadraticForm(
            self.0
                .iter()
                .map(|r| r.iter().map(|c| c * s).collect())
                .collect(),
        )
    }

    pub fn eval(&self, f: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (i, row) in self.0.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                acc += c * &f[i] * &f[j];
            }
        }
        acc
    }

    pub fn eval_f64(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (i, row) in self.0.iter().enumerate() {
            for (j, c) in row.iter().enumerate() {
                acc += q_to_f64(c) * f[i] * f[j];
            }
        }
        acc
    }

    /// Coefficients involving variable `i` are all zero.
    pub fn independent_of(&self, i: usize) -> bool {
        self.0[i].iter().all(Zero::is_zero)
    }

    pub fn to_poly(&self) -> Poly {
        let n = self.vars();
        let mut p = Poly::zero(n);
        for i in 0..n {
            for j in 0..n {
                let c = &self.0[i][j];
                if c.is_zero() {
                    continue;
                }
                let mut e = vec![0u16; n];
                e[i] += 1;
                e[j] += 1;
                p.add_term(e, c.clone());
            }
        }
        p
    }

    /// Inverse of [`QuadraticForm::to_poly`]; `None` if `p` is not homogeneous of degree two.
    pub fn from_poly(p: &Poly) -> Option<Self> {
        let n = p.vars;
        let mut m = Self::zero(n);
        let half = q_frac(1, 2);
        for (e, c) in &p.terms {
            let idx: Vec<usize> = e
                .iter()
                .enumerate()
                .flat_map(|(i, &d)| std::iter::repeat_n(i, d as usize))
                .collect();
            if idx.len() != 2 {
                return None;
            }
            let (i, j) = (idx[0], idx[1]);
            if i == j {
                m.0[i][i] = c.clone();
            } else {
                m.0[i][j] = c * &half;
                m.0[j][i] = c * &half;
            }
        }
        Some(m)
    }

    /// Rank-one factorisation `d * w w^T` with `w` normalised at its first
    /// nonzero entry; `None` when the rank is not one.
    pub fn rank_one_factor(&self) -> Option<(Q, LinearForm)> {
        let n = self.vars();
        let p = (0..n).find(|&i| !self.0[i][i].is_zero())?;
        let d = self.0[p][p].clone();
        let w: Vec<Q> = (0..n).map(|j| &self.0[p][j] / &d).collect();
        for i in 0..n {
            for j in 0..n {
                if self.0[i][j] != &d * &w[i] * &w[j] {
                    return None;
                }
            }
        }
        Some((d, LinearForm(w)))
    }
}

impl Add for &QuadraticForm {
    type Output = QuadraticForm;
    fn add(self, o: &QuadraticForm) -> QuadraticForm {
        QuadraticForm(
            self.0
                .iter()
                .zip(&o.0)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        )
    }
}

impl Sub for &QuadraticForm {
    type Output = QuadraticForm;
    fn sub(self, o: &QuadraticForm) -> QuadraticForm {
        QuadraticForm(
            self.0
                .iter()
                .zip(&o.0)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        )
    }
}

impl fmt::Display for QuadraticForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_poly().fmt(f)
    }
}

impl Serialize for QuadraticForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<Vec<String>> = self
            .0
            .iter()
            .map(|r| r.iter().map(|c| c.to_string()).collect())
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuadraticForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<Vec<String>> = Vec::deserialize(d)?;
        v.iter()
            .map(|r| {
                r.iter()
                    .map(|s| s.parse::<Q>().map_err(serde::de::Error::custom))
                    .collect::<std::result::Result<Vec<_>, _>>()
            })
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(QuadraticForm)
    }
}

/// Sparse multivariate polynomial with rational coefficients.
///
/// Variables are indexed `0..vars`; exponent vectors have length `vars`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    pub vars: usize,
    pub terms: BTreeMap<Vec<u16>, Q>,
}

impl Poly {
    pub fn zero(vars: usize) -> Self {
        Poly {
            vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(vars: usize, c: Q) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars], c);
        p
    }

    pub fn var(vars: usize, i: usize) -> Self {
        let mut e = vec![0; vars];
        e[i] = 1;
        let mut p = Self::zero(vars);
        p.add_term(e, Q::one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Vec<u16>, c: Q) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(e);
        match entry {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn scale(&self, s: &Q) -> Self {
        let mut p = Self::zero(self.vars);
        if s.is_zero() {
            return p;
        }
        for (e, c) in &self.terms {
            p.terms.insert(e.clone(), c * s);
        }
        p
    }

    pub fn total_degree(&self) -> usize {
        self.terms
            .keys()
            .map(|e| e.iter().map(|&d| d as usize).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> usize {
        self.terms
            .keys()
            .map(|e| e[var] as usize)
            .max()
            .unwrap_or(0)
    }

    /// Coefficient of `x_var^d` as a polynomial in the remaining variables.
    pub fn coefficient_of(&self, var: usize, d: u16) -> Poly {
        let mut p = Self::zero(self.vars);
        for (e, c) in &self.terms {
            if e[var] == d {
                let mut e2 = e.clone();
                e2[var] = 0;
                p.add_term(e2, c.clone());
            }
        }
        p
    }

    pub fn eval(&self, x: &[Q]) -> Q {
        let mut acc = Q::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &d) in x.iter().zip(e) {
                for _ in 0..d {
                    t *= xi;
                }
            }
            acc += t;
        }
        acc
    }

    /// Replace variable `var` by the polynomial `with`.
    pub fn substitute(&self, var: usize, with: &Poly) -> Poly {
        let maxd = self.degree_in(var);
        let mut powers = vec![Poly::constant(self.vars, Q::one())];
        for d in 1..=maxd {
            let next = &powers[d - 1] * with;
            powers.push(next);
        }
        let mut out = Poly::zero(self.vars);
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let d = e2[var] as usize;
            e2[var] = 0;
            let mut mono = Poly::zero(self.vars);
            mono.add_term(e2, c.clone());
            out = &out + &(&mono * &powers[d]);
        }
        out
    }

    /// Copy into a ring with `vars` variables (which must not drop used ones).
    pub fn with_vars(&self, vars: usize) -> Poly {
        let mut p = Poly::zero(vars);
        for (e, c) in &self.terms {
            let mut e2 = vec![0u16; vars];
            for (i, &d) in e.iter().enumerate() {
                if d > 0 {
                    e2[i] = d;
                }
            }
            p.add_term(e2, c.clone());
        }
        p
    }

    /// Linear part when the polynomial is homogeneous linear.
    pub fn as_linear(&self) -> Option<LinearForm> {
        let mut l = LinearForm::zero(self.vars);
        for (e, c) in &self.terms {
            let deg: u16 = e.iter().sum();
            if deg != 1 {
                return None;
            }
            let i = e.iter().position(|&d| d == 1)?;
            l.0[i] = c.clone();
        }
        Some(l)
    }
}

impl Add for &Poly {
    type Output = Poly;
    fn add(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), c.clone());
        }
        p
    }
}

impl Sub for &Poly {
    type Output = Poly;
    fn sub(self, o: &Poly) -> Poly {
        let mut p = self.clone();
        for (e, c) in &o.terms {
            p.add_term(e.clone(), -c);
        }
        p
    }
}

impl Mul for &Poly {
    type Output = Poly;
    fn mul(self, o: &Poly) -> Poly {
        let mut p = Poly::zero(self.vars.max(o.vars));
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let e: Vec<u16> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                p.add_term(e, c1 * c2);
            }
        }
        p
    }
}

impl fmt::Display for Poly {
    /// Terms ordered by variable index: `f0^2`, `f0*f1`, ..., constants last.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut keys: Vec<&Vec<u16>> = self.terms.keys().collect();
        keys.sort_by(|a, b| {
            let da: u16 = a.iter().sum();
            let db: u16 = b.iter().sum();
            db.cmp(&da).then_with(|| b.cmp(a))
        });
        let mut out = String::new();
        for e in keys {
            let c = &self.terms[e];
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &d)| d > 0)
                .map(|(i, &d)| {
                    if d == 1 {
                        format!("f{i}")
                    } else {
                        format!("f{i}^{d}")
                    }
                })
                .collect();
            fmt_coeff_term(&mut out, c, &mono.join("*"));
        }
        if out.is_empty() {
            out.push('0');
        }
        f.write_str(&out)
    }
}

/// Determinant of a square matrix of polynomials by expansion over column subsets.
pub fn poly_det(m: &[Vec<Poly>], vars: usize) -> Poly {
    let n = m.len();
    if n == 0 {
        return Poly::constant(vars, Q::one());
    }
    let mut dp: Vec<Option<Poly>> = vec![None; 1 << n];
    dp[0] = Some(Poly::constant(vars, Q::one()));
    for mask in 0usize..(1 << n) {
        let Some(cur) = dp[mask].take() else { continue };
        let row = mask.count_ones() as usize;
        if row == n {
            dp[mask] = Some(cur);
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) != 0 || m[row][j].is_zero() {
                continue;
            }
            let above = (mask >> (j + 1)).count_ones();
            let mut t = &cur * &m[row][j];
            if above % 2 == 1 {
                t = t.scale(&q(-1));
            }
            let slot = &mut dp[mask | (1 << j)];
            *slot = Some(match slot.take() {
                Some(p) => &p + &t,
                None => t,
            });
        }
    }
    dp[(1 << n) - 1]
        .take()
        .unwrap_or_else(|| Poly::zero(vars))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_form_renders_by_index() {
        let l = LinearForm::from_ints(&[1, 1, -1]);
        assert_eq!(l.to_string(), "f0 + f1 - f2");
        assert_eq!(LinearForm::zero(3).to_string(), "0");
        assert_eq!(LinearForm::from_ints(&[2, 0, -3]).to_string(), "2*f0 - 3*f2");
    }

    #[test]
    fn quadratic_round_trips_through_poly() {
        let a = LinearForm::from_ints(&[0, 1, 2]);
        let b = LinearForm::from_ints(&[1, -1, 0]);
        let qf = a.product(&b);
        let back = QuadraticForm::from_poly(&qf.to_poly()).unwrap();
        assert_eq!(back, qf);
        let f = [q(3), q(-2), q(5)];
        assert_eq!(qf.eval(&f), a.eval(&f) * b.eval(&f));
    }

    #[test]
    fn rank_one_factor_detects_squares() {
        let m = LinearForm::from_ints(&[0, 1, -1]);
        let d = m.product(&m);
        let (c, w) = d.rank_one_factor().unwrap();
        assert_eq!(c, q(1));
        assert_eq!(w, m);
        let e6b1 = QuadraticForm(vec![
            vec![q(0), q(0), q(0)],
            vec![q(0), q(1), q(0)],
            vec![q(0), q(0), q(4)],
        ]);
        assert!(e6b1.rank_one_factor().is_none());
    }

    #[test]
    fn sqrt_exact_only_for_squares() {
        assert_eq!(q_sqrt(&q_frac(9, 4)), Some(q_frac(3, 2)));
        assert_eq!(q_sqrt(&q(3)), None);
        assert_eq!(q_sqrt(&q(-4)), None);
    }

    #[test]
    fn det_matches_known_values() {
        let c = |x: i64| Poly::constant(1, q(x));
        let m = vec![
            vec![c(2), c(0), c(1)],
            vec![c(1), c(3), c(2)],
            vec![c(1), c(1), c(1)],
        ];
        // 2*(3-2) - 0 + 1*(1-3) = 0
        assert!(poly_det(&m, 1).is_zero());
        let x = Poly::var(1, 0);
        let m2 = vec![vec![x.clone(), c(1)], vec![c(1), x.clone()]];
        let d = poly_det(&m2, 1);
        assert_eq!(d.to_string(), "f0^2 - 1");
    }

    #[test]
    fn substitution_composes() {
        let x = Poly::var(2, 0);
        let y = Poly::var(2, 1);
        let p = &(&x * &x) - &y;
        let s = p.substitute(0, &(&y + &Poly::constant(2, q(1))));
        assert_eq!(s.to_string(), "f1^2 + f1 + 1");
    }
}
