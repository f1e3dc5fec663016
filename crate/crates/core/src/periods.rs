//! Assembly of unipotent period series along paths of moves on a trivalent
//! genus-one graph, their structural check and numeric evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rug::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::{Branch, CurveError, MultiSeries, ResidueAssignment, StableGraph};
use crate::elliptic::{elliptic_associator, EllipticTable, QResolver};
use crate::kz::{associator_for_residues, local_solution_at_one, rotation_monodromy, KzError};
use crate::ncalg::{Coefficient, NCSeries, NcError, Word};
use crate::numeric::BigComplex;
use crate::periodring::{EllipticSymbol, EvalContext, LogSymbol, PeriodElem, PeriodError};

/// Noncommutative series over the residue letters with coefficients that are
/// truncated series in the fusing parameters over the period ring.
pub type PeriodSeries = NCSeries<MultiSeries<PeriodElem>>;

/// Largest magnitude admitted for deformation and fusing parameters.
pub const MAX_PARAMETER: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PeriodsError {
    #[error(transparent)]
    Series(#[from] NcError),
    #[error(transparent)]
    Kz(#[from] KzError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("weight {requested} exceeds the residue truncation {available}")]
    WeightBudget { requested: u32, available: u32 },
    #[error("parameter {name} = {value} is outside |.| <= 1/4")]
    OutOfRegime { name: String, value: f64 },
    #[error("missing value for {0}")]
    Unassigned(String),
}

/// One atomic move of a path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Move {
    /// `exp(k·iπ·X_h)`.
    Rotation { branch: String, k: i32 },
    /// Transport from the tangential point at 0 to `1 - s` for residues
    /// `[T_l, A_l]` at 0 and `X_{e'}` at 1.
    VertexFusing { edge: String, param: String },
    /// The elliptic associator (`direction = 1`) or its inverse.
    LoopTraversal { direction: i32 },
    /// The associator for residues `X_{h1}` at 0 and `X_{h2}` at 1.
    VertexAssociator { vertex: String, first: String, second: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct PathSpec {
    pub moves: Vec<Move>,
}

impl PathSpec {
    pub fn new(moves: Vec<Move>) -> Self {
        PathSpec { moves }
    }

    pub fn then(&self, other: &PathSpec) -> PathSpec {
        PathSpec { moves: self.moves.iter().chain(&other.moves).cloned().collect() }
    }

    /// Fusing parameters in order of first appearance.
    pub fn parameters(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for m in &self.moves {
            if let Move::VertexFusing { param, .. } = m {
                if !seen.contains(param) {
                    seen.push(param.clone());
                }
            }
        }
        seen
    }
}

fn lift_rational(s: &NCSeries<Rational>) -> NCSeries<PeriodElem> {
    s.map_coeffs(|c| PeriodElem::rational(c.clone()))
}

fn lift_scalar(s: &NCSeries<PeriodElem>) -> PeriodSeries {
    s.map_coeffs(|c| MultiSeries::scalar(c.clone()))
}

/// `Φ(r0, r1)·exp(log s·r1)·Σ_{m ≤ order} h_m s^m`: the transport from the
/// tangential point at 0 to `1 - s` for `Ω = r0 dz/z + r1 dz/(z-1)`.
/// With `order = 0` this is the transport to the tangential point `-s` at 1.
pub fn fusing_factor(
    r0: &NCSeries<Rational>,
    r1: &NCSeries<Rational>,
    param: &str,
    weight: u32,
    order: u32,
) -> Result<PeriodSeries, PeriodsError> {
    let (r0, r1) = (r0.truncated(weight), r1.truncated(weight));
    let phi = associator_for_residues(&lift_rational(&r0), &lift_rational(&r1), weight)?;
    let log_s = PeriodElem::log_symbol(LogSymbol::Log(param.to_string()));
    let scale = lift_rational(&r1).times_scalar(&log_s).exp()?;
    let head = phi.mul(&scale)?;
    let vars = crate::curves::variables(&[param]);
    let order = order as i32;
    let h = local_solution_at_one(&r0, &r1, order as usize)?;
    let mut tail = NCSeries::zero(r0.alphabet().clone(), weight);
    for (m, hm) in h.iter().enumerate() {
        let mut e = vec![0; 1];
        e[0] = m as i32;
        for (w, c) in hm.terms() {
            let coeff = MultiSeries::monomial(vars.clone(), e.clone(), PeriodElem::rational(c.clone()), order);
            tail.add_term(w.clone(), coeff);
        }
    }
    Ok(normalize(lift_scalar(&head).mul(&tail)?, &vars, order))
}

fn normalize(p: PeriodSeries, vars: &Arc<Vec<String>>, order: i32) -> PeriodSeries {
    p.map_coeffs(|c| c.over(vars).truncated(order))
}

/// The product, in path order, of the factors of each move.
pub fn assemble_period(
    g: &StableGraph,
    residues: &ResidueAssignment,
    path: &PathSpec,
    weight: u32,
    order: u32,
) -> Result<PeriodSeries, PeriodsError> {
    if weight > residues.truncation {
        return Err(PeriodsError::WeightBudget { requested: weight, available: residues.truncation });
    }
    let report = g.validate()?;
    if !report.trivalent {
        return Err(PeriodsError::InvalidPath("graph is not trivalent".into()));
    }
    let alphabet = residues.alphabet.clone();
    let loop_name = g.loop_edge().ok_or_else(|| PeriodsError::InvalidPath("graph has no loop".into()))?;
    let t_l = NCSeries::<Rational>::letter(alphabet.clone(), &format!("T_{loop_name}"), weight)?;
    let a_l = NCSeries::<Rational>::letter(alphabet.clone(), &format!("A_{loop_name}"), weight)?;
    let loop_bracket = t_l.bracket(&a_l)?;
    let vars = crate::curves::variables(&path.parameters());
    let order = order as i32;
    let residue = |name: &str| -> Result<NCSeries<Rational>, PeriodsError> {
        let h = g.branch(name)?;
        if h.edge_name() == Some(loop_name) {
            return Err(PeriodsError::InvalidPath(format!("the loop is entered only by loop traversal, not {name}")));
        }
        Ok(residues.get(&h)?.truncated(weight))
    };
    let mut acc: PeriodSeries = NCSeries::one(alphabet.clone(), weight);
    for mv in &path.moves {
        let factor = match mv {
            Move::Rotation { branch, k } => {
                lift_scalar(&rotation_monodromy(&lift_rational(&residue(branch)?), *k, weight)?)
            }
            Move::VertexFusing { edge, param } => {
                if !matches!(g.branch(edge)?, Branch::Edge { .. }) {
                    return Err(PeriodsError::InvalidPath(format!("{edge} is not an edge")));
                }
                fusing_factor(&loop_bracket, &residue(edge)?, param, weight, order as u32)?
            }
            Move::LoopTraversal { direction } => {
                let map = [("T", format!("T_{loop_name}")), ("A", format!("A_{loop_name}"))];
                let map: Vec<(&str, &str)> = map.iter().map(|(a, b)| (*a, b.as_str())).collect();
                let assoc = elliptic_associator(weight).rename_into(alphabet.clone(), &map)?;
                let assoc = match direction {
                    1 => assoc,
                    -1 => assoc.inverse()?,
                    d => return Err(PeriodsError::InvalidPath(format!("loop direction {d}"))),
                };
                lift_scalar(&assoc)
            }
            Move::VertexAssociator { vertex, first, second } => {
                let at = g.branches_at(vertex);
                for h in [first, second] {
                    if !at.contains(&g.branch(h)?) {
                        return Err(PeriodsError::InvalidPath(format!("{h} is not at {vertex}")));
                    }
                }
                if first == second {
                    return Err(PeriodsError::InvalidPath("associator needs two branches".into()));
                }
                let phi = associator_for_residues(
                    &lift_rational(&residue(first)?),
                    &lift_rational(&residue(second)?),
                    weight,
                )?;
                lift_scalar(&phi)
            }
        };
        acc = normalize(acc.mul(&factor)?, &vars, order);
    }
    Ok(normalize(acc, &vars, order))
}

/// A coefficient monomial outside the admissible ring.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub word: String,
    pub exponent: Vec<i32>,
    pub monomial: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct MembershipReport {
    pub checked_terms: usize,
    pub violations: Vec<Violation>,
}

impl MembershipReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that every coefficient is a power series in the parameters whose
/// coefficients are built from non-negative powers of iπ, admissible zeta
/// values, elliptic symbols and logarithms of the declared parameters.
pub fn ring_membership_check(p: &PeriodSeries, declared: &[String]) -> MembershipReport {
    let declared: BTreeSet<&str> = declared.iter().map(|s| s.as_str()).collect();
    let mut report = MembershipReport::default();
    for (w, c) in p.terms() {
        let word = p.alphabet().render_word(w);
        for (e, elem) in c.terms() {
            let mut push = |monomial: String, reason: String| {
                report.violations.push(Violation { word: word.clone(), exponent: e.clone(), monomial, reason })
            };
            if e.iter().any(|&k| k < 0) {
                push(String::new(), "negative power of a parameter".into());
            }
            for (m, _) in elem.terms() {
                report.checked_terms += 1;
                if m.ipi < 0 {
                    push(m.to_string(), format!("iπ power {}", m.ipi));
                }
                for (k, _) in &m.zetas {
                    if !k.is_admissible() {
                        push(m.to_string(), format!("non-admissible zeta({k})"));
                    }
                }
                for (s, _) in &m.logs {
                    let ok = matches!(s, LogSymbol::Log(name) if declared.contains(name.as_str()));
                    if !ok {
                        push(m.to_string(), format!("undeclared logarithm {s}"));
                    }
                }
                for (s, _) in &m.elliptic {
                    if let EllipticSymbol::IteratedEisenstein(k) = s {
                        if k.is_empty() {
                            push(m.to_string(), "empty Eisenstein symbol".into());
                        }
                    }
                }
            }
        }
    }
    report
}

/// Values for numeric evaluation.
#[derive(Clone, Default)]
pub struct PeriodAssignment {
    pub params: BTreeMap<String, BigComplex>,
    pub q0: Option<BigComplex>,
    pub table: EllipticTable,
}

/// Substitutes parameter values (`log s` bound to the principal logarithm)
/// and evaluates every coefficient.
pub fn numeric_evaluate_period(
    p: &PeriodSeries,
    assign: &PeriodAssignment,
    digits: u32,
) -> Result<NCSeries<BigComplex>, PeriodsError> {
    let mut ctx = EvalContext::new(digits);
    for (name, v) in &assign.params {
        let m = v.abs_f64();
        if m > MAX_PARAMETER || m == 0.0 {
            return Err(PeriodsError::OutOfRegime { name: name.clone(), value: m });
        }
        ctx = ctx.bind_log(LogSymbol::Log(name.clone()), v.with_prec(crate::numeric::working_bits(digits)).ln());
    }
    if let Some(q0) = &assign.q0 {
        ctx.resolver = Some(QResolver::new(q0.clone(), assign.table.clone()));
    }
    let mut out = NCSeries::zero(p.alphabet().clone(), p.truncation());
    for (w, c) in p.terms() {
        let v = c.evaluate(
            &assign.params,
            |e| e.numeric_eval(&ctx).map_err(PeriodsError::from),
            |name| PeriodsError::Unassigned(name.to_string()),
        )?;
        out.add_term(w.clone(), v);
    }
    Ok(out)
}

/// Coefficient of `word` as a parameter series, for reports.
pub fn coefficient(p: &PeriodSeries, word: &Word) -> MultiSeries<PeriodElem> {
    p.coeff(word)
}

/// Whether a period series is exactly the unit.
pub fn is_unit(p: &PeriodSeries) -> bool {
    p.terms().all(|(w, c)| if w.is_empty() { *c == MultiSeries::one() } else { c.is_zero() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalg::Alphabet;

    fn delta0(n: u32, weight: u32) -> (StableGraph, ResidueAssignment) {
        ResidueAssignment::delta0(n, weight).unwrap()
    }

    #[test]
    fn empty_path_is_unit() {
        let (g, res) = delta0(2, 3);
        let p = assemble_period(&g, &res, &PathSpec::default(), 3, 2).unwrap();
        assert!(is_unit(&p));
        assert!(ring_membership_check(&p, &[]).passed());
    }

    #[test]
    fn single_rotation() {
        let (g, res) = delta0(2, 2);
        let p = assemble_period(&g, &res, &PathSpec::new(vec![Move::Rotation { branch: "e".into(), k: 1 }]), 2, 0)
            .unwrap();
        // X_e = -[T,A] has weight 2, so only 1 + iπ X_e survives at N = 2.
        let ta = res.alphabet.word(&["T_l", "A_l"]).unwrap();
        let at = res.alphabet.word(&["A_l", "T_l"]).unwrap();
        assert_eq!(p.coeff(&ta), MultiSeries::scalar(PeriodElem::ipi(1).negated()));
        assert_eq!(p.coeff(&at), MultiSeries::scalar(PeriodElem::ipi(1)));
        assert_eq!(p.num_terms(), 3);
    }

    #[test]
    fn rotation_inverse_and_functoriality() {
        let (g, res) = delta0(2, 4);
        let r = |k| PathSpec::new(vec![Move::Rotation { branch: "t1".into(), k }]);
        let both = assemble_period(&g, &res, &r(2).then(&r(-2)), 4, 1).unwrap();
        assert!(is_unit(&both));
        let fuse = PathSpec::new(vec![Move::VertexFusing { edge: "-e".into(), param: "s".into() }]);
        let a = assemble_period(&g, &res, &r(1), 4, 2).unwrap();
        let b = assemble_period(&g, &res, &fuse, 4, 2).unwrap();
        let ab = assemble_period(&g, &res, &r(1).then(&fuse), 4, 2).unwrap();
        let vars = crate::curves::variables(&["s"]);
        assert_eq!(ab, normalize(a.mul(&b).unwrap(), &vars, 2));
        assert!(ring_membership_check(&ab, &["s".into()]).passed());
        assert!(!ring_membership_check(&ab, &[]).passed());
    }

    #[test]
    fn negative_ipi_is_reported() {
        let ab = Alphabet::from_names(&["a"]).unwrap();
        let mut p: PeriodSeries = NCSeries::one(ab.clone(), 2);
        p.add_term(ab.word(&["a"]).unwrap(), MultiSeries::scalar(PeriodElem::ipi(-1)));
        let r = ring_membership_check(&p, &[]);
        assert_eq!(r.violations.len(), 1);
        assert_eq!(r.violations[0].word, "a");
    }

    #[test]
    fn loop_traversal_round_trip() {
        let (g, res) = delta0(2, 3);
        let l = |d| PathSpec::new(vec![Move::LoopTraversal { direction: d }]);
        let p = assemble_period(&g, &res, &l(1).then(&l(-1)), 3, 0).unwrap();
        assert!(is_unit(&p));
        let bad = PathSpec::new(vec![Move::Rotation { branch: "l".into(), k: 1 }]);
        assert!(matches!(assemble_period(&g, &res, &bad, 3, 0), Err(PeriodsError::InvalidPath(_))));
    }
}
