//! Symbolic KZ transport: the Drinfeld associator, fusing matrices,
//! rotations and the local solution at 1.
//!
//! Horizontal sections satisfy `df = f·Ω` with right multiplication, so a
//! word's first letter is its innermost integration and transports compose
//! in path order: `T(a→c) = T(a→b)·T(b→c)`. Over `{x0, x1}` the forms are
//! `x0 ↦ dz/z` and `x1 ↦ dz/(1-z)`; in residue language the connection
//! `Ω = R0 dz/z + R1 dz/(z-1)` has `R0 = x0` and `R1 = -x1`.

mod oracle;

pub use oracle::{numeric_rotation_oracle, numeric_transport_oracle};

use std::sync::Arc;

use rug::Rational;
use thiserror::Error;

use crate::mzv::{kz_alphabet, shuffle_regularize};
use crate::ncalg::{Alphabet, Coefficient, NCSeries, NcError};
use crate::periodring::PeriodElem;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KzError {
    #[error(transparent)]
    Series(#[from] NcError),
    #[error("invalid connection: {0}")]
    InvalidConnection(String),
    #[error("path passes through the singular point {0}")]
    PathThroughSingularity(String),
    #[error("invalid endpoint: {0}")]
    InvalidEndpoint(String),
    #[error("numeric budget exceeded: {0}")]
    Budget(String),
}

/// `Φ = Σ_w reg(w)·w` over `{x0, x1}`, truncated at weight `n`.
pub fn drinfeld_associator(n: u32) -> NCSeries<PeriodElem> {
    let alphabet = kz_alphabet();
    let words = alphabet.words_up_to(n);
    NCSeries::from_terms(
        alphabet,
        n,
        words.into_iter().map(|w| {
            let c = shuffle_regularize(&w);
            (w, c)
        }),
    )
}

/// `Φ(x0 ↦ x, x1 ↦ y)`, truncated at weight `n`.
pub fn fusing_connection_matrix<C: Coefficient + From<PeriodElem>>(
    x: &NCSeries<C>,
    y: &NCSeries<C>,
    n: u32,
) -> Result<NCSeries<C>, KzError> {
    if x.alphabet() != y.alphabet() {
        return Err(NcError::AlphabetMismatch.into());
    }
    let phi = drinfeld_associator(n).map_coeffs(|c| C::from(c.clone()));
    Ok(phi.substitute(&[x.clone(), y.clone()], x.alphabet().clone(), n)?)
}

/// The transport from `v0` at 0 to `-v1` at 1 for `Ω = r0 dz/z + r1 dz/(z-1)`.
///
/// Since `x1` carries `dz/(1-z)`, this is `Φ(r0, -r1)`.
pub fn associator_for_residues<C: Coefficient + From<PeriodElem>>(
    r0: &NCSeries<C>,
    r1: &NCSeries<C>,
    n: u32,
) -> Result<NCSeries<C>, KzError> {
    fusing_connection_matrix(r0, &r1.negated(), n)
}

/// `exp(k·iπ·x)`.
pub fn rotation_monodromy(
    x: &NCSeries<PeriodElem>,
    k: i32,
    n: u32,
) -> Result<NCSeries<PeriodElem>, KzError> {
    let x = x.truncated(n);
    if k == 0 {
        return Ok(NCSeries::one(x.alphabet().clone(), n));
    }
    let scalar = PeriodElem::ipi(1).scaled(&Rational::from(k));
    Ok(x.times_scalar(&scalar).exp()?)
}

/// Taylor coefficients `h_0, ..., h_order` of the normalized local solution
/// at 1 for `Ω = r0 dz/z + r1 dz/(z-1)`.
///
/// With `u = 1 - z` the section normalized at `-v1` is
/// `exp(r1·log u)·h(u)`, where `h_0 = 1` and
/// `(m - ad'_{r1}) h_m = -(h_0 + ... + h_{m-1})·r0`, `ad'_{r1}(a) = a r1 - r1 a`.
pub fn local_solution_at_one<C: Coefficient>(
    r0: &NCSeries<C>,
    r1: &NCSeries<C>,
    order: usize,
) -> Result<Vec<NCSeries<C>>, KzError> {
    let alphabet = r0.alphabet().clone();
    let n = r0.truncation().min(r1.truncation());
    let mut h = vec![NCSeries::one(alphabet.clone(), n)];
    let mut prefix = NCSeries::zero(alphabet, n);
    for m in 1..=order {
        prefix = prefix.plus(&h[m - 1])?;
        let rhs = prefix.mul(r0)?.negated();
        h.push(solve_shifted(&rhs, r1, m)?);
    }
    Ok(h)
}

/// Solves `m·x - (x r - r x) = rhs` by the terminating Neumann series.
fn solve_shifted<C: Coefficient>(
    rhs: &NCSeries<C>,
    r: &NCSeries<C>,
    m: usize,
) -> Result<NCSeries<C>, KzError> {
    let inv_m = Rational::from((1, m as i64));
    let mut term = rhs.scaled(&inv_m);
    let mut sum = term.clone();
    for _ in 0..rhs.truncation() {
        term = term.mul(r)?.minus(&r.mul(&term)?)?.scaled(&inv_m);
        if term.is_zero() {
            break;
        }
        sum = sum.plus(&term)?;
    }
    Ok(sum)
}

/// A KZ connection `Ω = Σ_i R_i dz/(z - p_i)` on the projective line.
///
/// The residue at infinity is `-Σ R_i`.
#[derive(Debug, Clone)]
pub struct KzConnection {
    alphabet: Arc<Alphabet>,
    truncation: u32,
    poles: Vec<(Rational, NCSeries<Rational>)>,
}

impl KzConnection {
    /// Builds a connection from finite poles. When `infinity` is given the
    /// residues must sum to zero with it.
    pub fn new(
        poles: Vec<(Rational, NCSeries<Rational>)>,
        infinity: Option<NCSeries<Rational>>,
    ) -> Result<Self, KzError> {
        let first = poles
            .first()
            .ok_or_else(|| KzError::InvalidConnection("no singular points".into()))?;
        let alphabet = first.1.alphabet().clone();
        let truncation = poles.iter().map(|(_, r)| r.truncation()).min().unwrap_or(0);
        for (i, (p, r)) in poles.iter().enumerate() {
            if *r.alphabet() != alphabet {
                return Err(NcError::AlphabetMismatch.into());
            }
            if !r.constant_term().is_zero() {
                return Err(KzError::InvalidConnection(format!("residue at {p} has a constant term")));
            }
            if poles[..i].iter().any(|(q, _)| q == p) {
                return Err(KzError::InvalidConnection(format!("repeated singular point {p}")));
            }
        }
        let conn = KzConnection { alphabet, truncation, poles };
        if let Some(inf) = infinity {
            if !conn.residue_at_infinity().minus(&inf.truncated(truncation))?.is_zero() {
                return Err(KzError::InvalidConnection("residues do not sum to zero".into()));
            }
        }
        Ok(conn)
    }

    /// The connection `x0 dz/z + x1 dz/(1-z)` over `{x0, x1}`.
    pub fn standard(n: u32) -> Self {
        let al = kz_alphabet();
        let x0 = NCSeries::letter(al.clone(), "x0", n).expect("x0");
        let x1 = NCSeries::<Rational>::letter(al, "x1", n).expect("x1");
        KzConnection::new(
            vec![(Rational::new(), x0), (Rational::from(1), x1.negated())],
            None,
        )
        .expect("standard connection")
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn poles(&self) -> &[(Rational, NCSeries<Rational>)] {
        &self.poles
    }

    pub fn residue_at_infinity(&self) -> NCSeries<Rational> {
        let zero = NCSeries::zero(self.alphabet.clone(), self.truncation);
        self.poles
            .iter()
            .fold(zero, |acc, (_, r)| acc.minus(r).expect("common alphabet"))
    }
}

/// A tangent vector `direction·d/dz` at `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TangentialPoint {
    pub base: Rational,
    pub direction: Rational,
    /// Name of a formal scale parameter, for display only.
    pub scale_symbol: Option<String>,
}

impl TangentialPoint {
    pub fn new(base: impl Into<Rational>, direction: impl Into<Rational>) -> Result<Self, KzError> {
        let direction = direction.into();
        if direction == 0 {
            return Err(KzError::InvalidEndpoint("tangent direction must be nonzero".into()));
        }
        Ok(TangentialPoint { base: base.into(), direction, scale_symbol: None })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tangential(TangentialPoint),
    Point(Rational),
}

impl Endpoint {
    pub fn base(&self) -> &Rational {
        match self {
            Endpoint::Tangential(t) => &t.base,
            Endpoint::Point(p) => p,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodring::Composition;

    fn z2() -> PeriodElem {
        PeriodElem::zeta(&Composition(vec![2])).unwrap()
    }

    #[test]
    fn associator_low_weight() {
        let phi = drinfeld_associator(3);
        assert_eq!(phi.constant_term(), PeriodElem::one());
        assert!(phi.coeff_of(&["x0"]).unwrap().is_zero());
        assert!(phi.coeff_of(&["x1"]).unwrap().is_zero());
        assert_eq!(phi.coeff_of(&["x1", "x0"]).unwrap(), z2());
        assert_eq!(phi.coeff_of(&["x0", "x1"]).unwrap(), z2().negated());
        assert!(phi.coeff_of(&["x0", "x0"]).unwrap().is_zero());
    }

    #[test]
    fn fusing_specializations() {
        let al = kz_alphabet();
        let x0 = NCSeries::<PeriodElem>::letter(al.clone(), "x0", 4).unwrap();
        let x1 = NCSeries::<PeriodElem>::letter(al.clone(), "x1", 4).unwrap();
        assert_eq!(fusing_connection_matrix(&x0, &x1, 4).unwrap(), drinfeld_associator(4));
        let zero = NCSeries::zero(al.clone(), 4);
        assert_eq!(fusing_connection_matrix(&x0, &zero, 4).unwrap(), NCSeries::one(al.clone(), 4));
        let one = NCSeries::one(al, 4);
        assert!(fusing_connection_matrix(&one, &x1, 4).is_err());
    }

    #[test]
    fn rotations() {
        let al = kz_alphabet();
        let x = NCSeries::<PeriodElem>::letter(al.clone(), "x0", 3).unwrap();
        assert_eq!(rotation_monodromy(&x, 0, 3).unwrap(), NCSeries::one(al.clone(), 3));
        let r1 = rotation_monodromy(&x, 1, 2).unwrap();
        assert_eq!(r1.coeff_of(&["x0"]).unwrap(), PeriodElem::ipi(1));
        assert_eq!(
            r1.coeff_of(&["x0", "x0"]).unwrap(),
            PeriodElem::ipi(2).scaled(&Rational::from((1, 2)))
        );
        let r = rotation_monodromy(&x, 1, 3).unwrap();
        assert_eq!(rotation_monodromy(&x, 2, 3).unwrap(), r.mul(&r).unwrap());
        let back = rotation_monodromy(&x, -1, 3).unwrap();
        assert_eq!(r.mul(&back).unwrap(), NCSeries::one(al, 3));
    }

    #[test]
    fn local_solution_satisfies_recursion() {
        let al = Alphabet::from_names(&["a", "b"]).unwrap();
        let a = NCSeries::<Rational>::letter(al.clone(), "a", 3).unwrap();
        let b = NCSeries::<Rational>::letter(al.clone(), "b", 3).unwrap();
        let h = local_solution_at_one(&a, &b, 4).unwrap();
        // h_1 solves h_1 - [h_1, b] = -a, so h_1 = -a - [a, b] - [[a, b], b].
        let ab = a.mul(&b).unwrap().minus(&b.mul(&a).unwrap()).unwrap();
        let abb = ab.mul(&b).unwrap().minus(&b.mul(&ab).unwrap()).unwrap();
        let expected = a.plus(&ab).unwrap().plus(&abb).unwrap().negated();
        assert_eq!(h[1], expected);
        for (m, hm) in h.iter().enumerate().skip(1) {
            let lhs = hm.scaled(&Rational::from(m as i64))
                .minus(&hm.mul(&b).unwrap().minus(&b.mul(hm).unwrap()).unwrap())
                .unwrap();
            let prefix = h[..m].iter().fold(NCSeries::zero(al.clone(), 3), |s, x| s.plus(x).unwrap());
            assert_eq!(lhs, prefix.mul(&a).unwrap().negated());
        }
    }

    #[test]
    fn connection_validation() {
        let conn = KzConnection::standard(3);
        let inf = conn.residue_at_infinity();
        let al = kz_alphabet();
        let x0 = NCSeries::<Rational>::letter(al.clone(), "x0", 3).unwrap();
        let x1 = NCSeries::<Rational>::letter(al, "x1", 3).unwrap();
        assert_eq!(inf, x1.minus(&x0).unwrap());
        let bad = KzConnection::new(
            vec![(Rational::new(), x0.clone()), (Rational::from(1), x1.negated())],
            Some(x0),
        );
        assert!(matches!(bad, Err(KzError::InvalidConnection(_))));
    }
}
