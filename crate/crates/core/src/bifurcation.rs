//! Branch-support decisions: for every synchrony subspace and every
//! eigenfunction of its quotient, decide whether generic one-parameter
//! problems with that bifurcation condition have a branch whose synchrony is
//! exactly that subspace.

use std::fmt;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classify::{subspace_role, AnnotatedLattice, Role};
use crate::error::{Error, Result};
use crate::network::Network;
use crate::par::{self, Exec};
use crate::reduction::{
    cubic_coefficient, defective_condition, quadratic_branch_system, reduced_coefficients,
    sample_profile, ReductionMode, ZERO_TOL,
};
use crate::spectrum::{Eigenfunction, RealClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Supports,
    DoesNotSupport,
    NoRealCondition,
    SupportsOnOpenSet,
}

impl Verdict {
    pub fn supports(self) -> bool {
        matches!(self, Verdict::Supports | Verdict::SupportsOnOpenSet)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::Supports => "supports",
            Verdict::DoesNotSupport => "does-not-support",
            Verdict::NoRealCondition => "no-real-condition",
            Verdict::SupportsOnOpenSet => "supports-on-open-set",
        };
        f.write_str(s)
    }
}

/// Which argument produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    /// Simple and maximal: a branch exists.
    SimpleMaximal,
    /// Simple and submaximal: implicit function argument excludes branches.
    SimpleSubmaximal,
    /// Valency condition at a valency synchrony-breaking subspace.
    ValencySynchronyBreaking,
    /// Semisimple of multiplicity m, submaximal of order 2^m − 1.
    SemisimpleSaturated,
    /// Defective (1, 2), submaximal of order 1, second-order condition holds.
    DefectiveSubmaximal,
    /// Defective (1, 2) and maximal.
    DefectiveMaximal,
    /// The condition has no real solutions.
    NeverReal,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Rule::SimpleMaximal => "simple-maximal",
            Rule::SimpleSubmaximal => "simple-submaximal",
            Rule::ValencySynchronyBreaking => "valency-synchrony-breaking",
            Rule::SemisimpleSaturated => "semisimple-saturated",
            Rule::DefectiveSubmaximal => "defective-submaximal",
            Rule::DefectiveMaximal => "defective-maximal",
            Rule::NeverReal => "never-real",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchPrediction {
    pub subspace: usize,
    pub condition: Eigenfunction,
    pub verdict: Verdict,
    pub rule: Rule,
    pub caveats: Vec<String>,
}

/// Sampling budget for the numerical certificates used by some rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictOptions {
    /// Profiles for nondegeneracy certificates.
    pub certificate_samples: usize,
    /// Profiles for "identically zero" decisions.
    pub determinacy_samples: usize,
    pub seed: u64,
    pub exec: Exec,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            certificate_samples: 20,
            determinacy_samples: 50,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

/// Order of the first nonvanishing pure-x derivative of the reduced
/// equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Determinacy {
    Determined(u32),
    Unknown,
}

fn rng_for(seed: u64, node: usize, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (node as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ salt)
}

/// Determinacy of a simple condition on a network, decided over `samples`
/// random profiles: 2 if `g_xx` is not identically zero, else 3 if `g_xxx`
/// is not, else unknown.
pub fn determinacy_of(net: &Network, mu: &Eigenfunction, samples: usize, seed: u64) -> Result<Determinacy> {
    if !mu.is_simple() {
        return Err(Error::InvalidArgument(
            "determinacy needs a simple eigenfunction".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let profiles = (0..samples)
        .map(|_| sample_profile(net, mu, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let mut quadratic = false;
    for p in &profiles {
        if reduced_coefficients(net, mu, p)?.g_xx().abs() > ZERO_TOL {
            quadratic = true;
            break;
        }
    }
    if quadratic {
        return Ok(Determinacy::Determined(2));
    }
    for p in &profiles {
        if cubic_coefficient(net, mu, p)?.abs() > ZERO_TOL {
            return Ok(Determinacy::Determined(3));
        }
    }
    Ok(Determinacy::Unknown)
}

/// Determinacy of `mu` on the quotient of lattice node `subspace`.
pub fn determinacy(al: &AnnotatedLattice, mu: &Eigenfunction, subspace: usize) -> Result<Determinacy> {
    let entry = al.annotations[subspace]
        .find(&mu.kind)
        .ok_or_else(|| Error::InvalidArgument(format!("`{}` is not an eigenfunction here", mu.kind)))?;
    determinacy_of(
        &al.lattice.nodes[subspace].quotient,
        entry,
        PredictOptions::default().determinacy_samples,
        0,
    )
}

fn prediction(subspace: usize, condition: &Eigenfunction, verdict: Verdict, rule: Rule) -> BranchPrediction {
    BranchPrediction {
        subspace,
        condition: condition.clone(),
        verdict,
        rule,
        caveats: Vec::new(),
    }
}

fn predict_one(
    al: &AnnotatedLattice,
    node: usize,
    mu: &Eigenfunction,
    opts: &PredictOptions,
) -> Result<BranchPrediction> {
    let label = al.lattice.nodes[node].label();
    if mu.real_class == RealClass::Never {
        return Ok(prediction(node, mu, Verdict::NoRealCondition, Rule::NeverReal));
    }
    let role = subspace_role(al, node, mu);
    let quotient = &al.lattice.nodes[node].quotient;
    let unhandled = |what: &str| {
        Error::UnhandledConfiguration(format!("`{}` at {label}: {what}", mu.label()))
    };
    if mu.is_simple() {
        return match role.role {
            Role::Maximal => {
                let verdict = if mu.real_class == RealClass::OnOpenSet {
                    Verdict::SupportsOnOpenSet
                } else {
                    Verdict::Supports
                };
                Ok(prediction(node, mu, verdict, Rule::SimpleMaximal))
            }
            Role::Submaximal { .. } => Ok(prediction(node, mu, Verdict::DoesNotSupport, Rule::SimpleSubmaximal)),
            Role::NotAnEigenfunctionHere => Err(unhandled("not an eigenfunction of this quotient")),
        };
    }
    if mu.kind.is_valency() {
        if al.valency_breaking.contains(&node) {
            return Ok(prediction(node, mu, Verdict::Supports, Rule::ValencySynchronyBreaking));
        }
        return Err(unhandled("multiple valency away from a valency synchrony-breaking subspace"));
    }
    match ReductionMode::of(mu)? {
        ReductionMode::Simple => unreachable!("handled above"),
        ReductionMode::Semisimple(m) => {
            let Role::Submaximal { order } = role.role else {
                return Err(unhandled("semisimple and maximal"));
            };
            if order != (1usize << m) - 1 {
                return Err(unhandled(&format!("semisimple of multiplicity {m} with submaximal order {order}")));
            }
            let mut caveats = Vec::new();
            for &below in &role.simple_maximal_below {
                let entry = al.annotations[below].find(&mu.kind).expect("member below");
                let det = determinacy_of(
                    &al.lattice.nodes[below].quotient,
                    entry,
                    opts.determinacy_samples,
                    opts.seed ^ below as u64,
                )?;
                if det != Determinacy::Determined(2) {
                    return Err(unhandled(&format!(
                        "maximal subspace {} is not 2-determined",
                        al.lattice.nodes[below].label()
                    )));
                }
            }
            let mut rng = rng_for(opts.seed, node, 0xd);
            for _ in 0..opts.certificate_samples {
                let profile = sample_profile(quotient, mu, &mut rng)?;
                let rs = reduced_coefficients(quotient, mu, &profile)?;
                let sys = quadratic_branch_system(&rs)?;
                if !sys.assumptions_hold() {
                    return Err(unhandled("nondegeneracy assumptions fail at a sampled profile"));
                }
            }
            caveats.push(format!(
                "maximal subspaces 2-determined over {} profiles; rank and common-factor assumptions certified at {} profiles",
                opts.determinacy_samples, opts.certificate_samples
            ));
            Ok(BranchPrediction {
                caveats,
                ..prediction(node, mu, Verdict::DoesNotSupport, Rule::SemisimpleSaturated)
            })
        }
        ReductionMode::Defective12 => match role.role {
            Role::Maximal => Ok(prediction(node, mu, Verdict::Supports, Rule::DefectiveMaximal)),
            Role::Submaximal { order: 1 } => {
                let mut rng = rng_for(opts.seed, node, 0xe);
                let mut witnesses = Vec::new();
                for _ in 0..opts.certificate_samples {
                    let profile = sample_profile(quotient, mu, &mut rng)?;
                    let cond = defective_condition(quotient, &profile)?;
                    match cond.witness {
                        Some(w) if cond.holds => witnesses.push(w),
                        _ => return Err(unhandled("second-order defective condition fails")),
                    }
                }
                witnesses.sort();
                witnesses.dedup();
                let below = role.simple_maximal_below[0];
                let caveats = vec![
                    format!(
                        "two branches: one with synchrony {} and one with synchrony {label}",
                        al.lattice.nodes[below].label()
                    ),
                    format!(
                        "second-order condition holds at {} profiles, witnesses {:?}",
                        opts.certificate_samples, witnesses
                    ),
                ];
                Ok(BranchPrediction {
                    caveats,
                    ..prediction(node, mu, Verdict::Supports, Rule::DefectiveSubmaximal)
                })
            }
            _ => Err(unhandled("defective with submaximal order other than 1")),
        },
    }
}

/// Predictions for every (node, eigenfunction) pair in node order.
pub fn predict(al: &AnnotatedLattice) -> Result<Vec<BranchPrediction>> {
    predict_with(al, &PredictOptions::default())
}

pub fn predict_with(al: &AnnotatedLattice, opts: &PredictOptions) -> Result<Vec<BranchPrediction>> {
    let pairs: Vec<(usize, &Eigenfunction)> = al
        .annotations
        .iter()
        .enumerate()
        .flat_map(|(node, r)| r.eigenfunctions.iter().map(move |e| (node, e)))
        .collect();
    par::map(opts.exec, &pairs, |(node, mu)| predict_one(al, *node, mu, opts))
        .into_iter()
        .collect()
}

/// Strongest verdict at a node: a subspace supports a branch iff some
/// condition supports one.
pub fn node_verdict(preds: &[BranchPrediction], node: usize) -> Option<Verdict> {
    let at: Vec<Verdict> = preds
        .iter()
        .filter(|p| p.subspace == node)
        .map(|p| p.verdict)
        .collect();
    [
        Verdict::Supports,
        Verdict::SupportsOnOpenSet,
        Verdict::DoesNotSupport,
        Verdict::NoRealCondition,
    ]
    .into_iter()
    .find(|v| at.contains(v))
}

/// Aligned text table: subspace, condition, verdict, rule, caveats.
pub fn render_table(al: &AnnotatedLattice, preds: &[BranchPrediction]) -> String {
    let rows: Vec<[String; 5]> = preds
        .iter()
        .map(|p| {
            [
                al.lattice.nodes[p.subspace].label(),
                p.condition.label(),
                p.verdict.to_string(),
                p.rule.to_string(),
                p.caveats.join("; "),
            ]
        })
        .collect();
    let header = ["subspace", "condition", "verdict", "rule", "caveats"];
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut emit = |cells: [&str; 5]| {
        let mut line = String::new();
        for (i, c) in cells.iter().enumerate() {
            if i + 1 == cells.len() {
                line.push_str(c);
            } else {
                let _ = write!(line, "{c:<w$}  ", w = widths[i]);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    emit(header);
    for r in &rows {
        emit([&r[0], &r[1], &r[2], &r[3], &r[4]]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::annotate;

    fn net(inputs: &[&[i64]]) -> Network {
        Network::new("t", 3, inputs.iter().map(|m| m.to_vec()).collect()).unwrap()
    }

    #[test]
    fn valency_breaking_top() {
        let al = annotate(&net(&[&[1, 1, 3], &[1, 3, 3]])).unwrap();
        let preds = predict(&al).unwrap();
        let top = al.lattice.top;
        let v = preds
            .iter()
            .find(|p| p.subspace == top && p.condition.kind.is_valency())
            .unwrap();
        assert_eq!(v.verdict, Verdict::Supports);
        assert_eq!(v.rule, Rule::ValencySynchronyBreaking);
    }

    #[test]
    fn never_real_pair() {
        let al = annotate(&net(&[&[3, 1, 2]])).unwrap();
        let preds = predict(&al).unwrap();
        assert_eq!(node_verdict(&preds, al.lattice.top), Some(Verdict::DoesNotSupport));
        assert!(preds
            .iter()
            .filter(|p| p.verdict == Verdict::NoRealCondition)
            .all(|p| p.condition.real_class == RealClass::Never));
    }

    #[test]
    fn deterministic_predictions() {
        let al = annotate(&net(&[&[1, 1, 1], &[2, 2, 2]])).unwrap();
        let a = predict_with(&al, &PredictOptions { exec: Exec::Sequential, ..Default::default() }).unwrap();
        let b = predict(&al).unwrap();
        assert_eq!(a, b);
        let table = render_table(&al, &a);
        assert!(table.starts_with("subspace"));
        assert!(table.contains("semisimple-saturated"));
    }
}
