//! Truncated multivariate Laurent series in deformation parameters.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rug::Rational;
use serde_json::{json, Value};

use crate::ncalg::{CoeffJson, Coefficient};
use crate::numeric::BigComplex;

/// Order marker for series known exactly in every degree.
pub const EXACT: i32 = i32::MAX;

/// `Σ c_e y^e` over sorted variable names, known exactly through total
/// degree `order`. Exponents may be negative; a series without variables
/// acts as a scalar and broadcasts against any variable set.
#[derive(Clone)]
pub struct MultiSeries<C> {
    vars: Arc<Vec<String>>,
    order: i32,
    terms: BTreeMap<Vec<i32>, C>,
}

pub fn variables<S: AsRef<str>>(names: &[S]) -> Arc<Vec<String>> {
    let mut v: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
    v.sort();
    v.dedup();
    Arc::new(v)
}

fn degree(e: &[i32]) -> i64 {
    e.iter().map(|&x| x as i64).sum()
}

fn clamp(order: i64) -> i32 {
    order.min(EXACT as i64) as i32
}

impl<C: Coefficient> MultiSeries<C> {
    pub fn zero(vars: Arc<Vec<String>>, order: i32) -> Self {
        MultiSeries { vars, order, terms: BTreeMap::new() }
    }

    pub fn constant(vars: Arc<Vec<String>>, order: i32, c: C) -> Self {
        let n = vars.len();
        let mut s = Self::zero(vars, order);
        s.add_term(vec![0; n], c);
        s
    }

    /// A scalar without variables, exact in all degrees.
    pub fn scalar(c: C) -> Self {
        Self::constant(Arc::new(Vec::new()), EXACT, c)
    }

    pub fn var(vars: Arc<Vec<String>>, name: &str, order: i32) -> Option<Self> {
        let idx = vars.iter().position(|v| v == name)?;
        let mut e = vec![0; vars.len()];
        e[idx] = 1;
        let mut s = Self::zero(vars, order);
        s.add_term(e, C::one());
        Some(s)
    }

    pub fn monomial(vars: Arc<Vec<String>>, exps: Vec<i32>, c: C, order: i32) -> Self {
        let mut s = Self::zero(vars, order);
        s.add_term(exps, c);
        s
    }

    pub fn vars(&self) -> &Arc<Vec<String>> {
        &self.vars
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &C)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, exps: &[i32]) -> C {
        self.terms.get(exps).cloned().unwrap_or_else(C::zero)
    }

    pub fn constant_term(&self) -> C {
        self.coeff(&vec![0; self.vars.len()])
    }

    /// Lowest total degree among stored terms.
    pub fn valuation(&self) -> Option<i32> {
        self.terms.keys().map(|e| degree(e) as i32).min()
    }

    pub fn add_term(&mut self, exps: Vec<i32>, c: C) {
        debug_assert_eq!(exps.len(), self.vars.len());
        if c.is_zero() || degree(&exps) > self.order as i64 {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(e) => {
                let s = e.plus(&c);
                if s.is_zero() {
                    self.terms.remove(&exps);
                } else {
                    *e = s;
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn truncated(&self, order: i32) -> Self {
        let order = order.min(self.order);
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| degree(e) <= order as i64)
            .map(|(e, c)| (e.clone(), c.clone()))
            .collect();
        MultiSeries { vars: self.vars.clone(), order, terms }
    }

    /// Re-expresses the series over a superset of its variables.
    pub fn over(&self, vars: &Arc<Vec<String>>) -> Self {
        if Arc::ptr_eq(&self.vars, vars) || self.vars == *vars {
            return MultiSeries { vars: vars.clone(), ..self.clone() };
        }
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).expect("variable superset"))
            .collect();
        let mut out = Self::zero(vars.clone(), self.order);
        for (e, c) in &self.terms {
            let mut f = vec![0; vars.len()];
            for (i, &x) in e.iter().enumerate() {
                f[map[i]] = x;
            }
            out.add_term(f, c.clone());
        }
        out
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        if self.vars == other.vars {
            return (self.clone(), other.over(&self.vars));
        }
        let mut all: Vec<String> = self.vars.iter().chain(other.vars.iter()).cloned().collect();
        all.sort();
        all.dedup();
        let vars = Arc::new(all);
        (self.over(&vars), other.over(&vars))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let mut out = a.truncated(a.order.min(b.order));
        for (e, c) in b.terms {
            out.add_term(e, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }

    pub fn scale(&self, q: &Rational) -> Self {
        self.map_coeffs(|c| c.scaled(q))
    }

    pub fn map_coeffs<D: Coefficient>(&self, f: impl Fn(&C) -> D) -> MultiSeries<D> {
        let mut out = MultiSeries::zero(self.vars.clone(), self.order);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let va = a.valuation().map(|v| v as i64).unwrap_or(a.order as i64);
        let vb = b.valuation().map(|v| v as i64).unwrap_or(b.order as i64);
        let order = clamp((a.order as i64 + vb).min(b.order as i64 + va));
        let mut out = Self::zero(a.vars.clone(), order);
        for (ea, ca) in &a.terms {
            for (eb, cb) in &b.terms {
                let e: Vec<i32> = ea.iter().zip(eb).map(|(x, y)| x + y).collect();
                if degree(&e) <= order as i64 {
                    out.add_term(e, ca.times(cb));
                }
            }
        }
        out
    }

    /// Multiplies by the monomial `y^exps`, shifting the order.
    pub fn mul_monomial(&self, exps: &[i32]) -> Self {
        let shift = degree(exps);
        let order = if self.order == EXACT { EXACT } else { clamp(self.order as i64 + shift) };
        let mut out = Self::zero(self.vars.clone(), order);
        for (e, c) in &self.terms {
            out.add_term(e.iter().zip(exps).map(|(x, y)| x + y).collect(), c.clone());
        }
        out
    }

    pub fn div_monomial(&self, exps: &[i32]) -> Self {
        let neg: Vec<i32> = exps.iter().map(|x| -x).collect();
        self.mul_monomial(&neg)
    }

    /// Inverse of a series with an invertible constant term and no terms of
    /// negative degree.
    pub fn inverse_unit(&self) -> Option<Self> {
        if self.valuation() != Some(0) {
            return None;
        }
        let c0_inv = self.constant_term().try_inverse()?;
        let one = Self::constant(self.vars.clone(), self.order, C::one());
        let normalized = self.map_coeffs(|c| c.times(&c0_inv));
        let r = one.sub(&normalized);
        if r.terms.is_empty() {
            return Some(Self::constant(self.vars.clone(), self.order, c0_inv));
        }
        if self.order == EXACT {
            return None;
        }
        let mut sum = one.clone();
        let mut power = one;
        for _ in 0..=self.order.max(0) {
            power = power.mul(&r).truncated(self.order);
            if power.terms.is_empty() {
                break;
            }
            sum = sum.add(&power);
        }
        Some(sum.truncated(self.order).map_coeffs(|c| c.times(&c0_inv)))
    }

    /// Inverse of `monomial · unit`.
    pub fn inverse(&self) -> Option<Self> {
        let v = self.valuation()?;
        let lowest: Vec<&Vec<i32>> = self.terms.keys().filter(|e| degree(e) == v as i64).collect();
        if lowest.len() != 1 {
            return None;
        }
        let m = lowest[0].clone();
        let unit = self.div_monomial(&m);
        Some(unit.inverse_unit()?.div_monomial(&m))
    }

    /// Sets `var` to zero; fails if the variable occurs with a negative exponent.
    pub fn at_zero(&self, var: &str) -> Option<Self> {
        let idx = self.vars.iter().position(|v| v == var)?;
        let mut out = Self::zero(self.vars.clone(), self.order);
        for (e, c) in &self.terms {
            match e[idx].cmp(&0) {
                std::cmp::Ordering::Less => return None,
                std::cmp::Ordering::Equal => out.add_term(e.clone(), c.clone()),
                std::cmp::Ordering::Greater => {}
            }
        }
        Some(out)
    }

    /// Numeric value at the given variable values.
    pub fn evaluate<E>(
        &self,
        values: &BTreeMap<String, BigComplex>,
        coeff: impl Fn(&C) -> Result<BigComplex, E>,
        missing: impl Fn(&str) -> E,
    ) -> Result<BigComplex, E> {
        let mut vals = Vec::with_capacity(self.vars.len());
        for v in self.vars.iter() {
            vals.push(values.get(v).ok_or_else(|| missing(v))?.clone());
        }
        let mut acc = BigComplex::from_i64(0);
        for (e, c) in &self.terms {
            let mut t = coeff(c)?;
            for (x, &k) in vals.iter().zip(e) {
                if k != 0 {
                    t = t.mul(&x.powi(k));
                }
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }
}

impl<C: Coefficient> PartialEq for MultiSeries<C> {
    /// Equality of all coefficients through the smaller order.
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.aligned(other);
        let order = a.order.min(b.order);
        a.truncated(order).terms == b.truncated(order).terms
    }
}

impl<C: Coefficient> fmt::Debug for MultiSeries<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mono: Vec<String> = self
                    .vars
                    .iter()
                    .zip(e)
                    .filter(|(_, &k)| k != 0)
                    .map(|(v, &k)| if k == 1 { v.clone() } else { format!("{v}^{k}") })
                    .collect();
                if mono.is_empty() {
                    format!("{c:?}")
                } else {
                    format!("({c:?})*{}", mono.join("*"))
                }
            })
            .collect();
        let order = if self.order == EXACT { "exact".to_string() } else { format!("O({})", self.order + 1) };
        write!(f, "[{} ; {order}]", parts.join(" + "))
    }
}

impl<C: Coefficient> Coefficient for MultiSeries<C> {
    fn zero() -> Self {
        MultiSeries::zero(Arc::new(Vec::new()), EXACT)
    }
    fn one() -> Self {
        MultiSeries::scalar(C::one())
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, other: &Self) -> Self {
        self.add(other)
    }
    fn negated(&self) -> Self {
        self.neg()
    }
    fn times(&self, other: &Self) -> Self {
        self.mul(other)
    }
    fn scaled(&self, q: &Rational) -> Self {
        self.scale(q)
    }
    fn minus(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn try_inverse(&self) -> Option<Self> {
        self.inverse()
    }
}

impl<C: Coefficient> From<crate::periodring::PeriodElem> for MultiSeries<C>
where
    C: From<crate::periodring::PeriodElem>,
{
    fn from(p: crate::periodring::PeriodElem) -> Self {
        MultiSeries::scalar(C::from(p))
    }
}

impl<C: Coefficient + CoeffJson> CoeffJson for MultiSeries<C> {
    fn to_json(&self) -> Value {
        json!({
            "vars": self.vars.as_slice(),
            "order": if self.order == EXACT { Value::Null } else { json!(self.order) },
            "terms": self.terms.iter().map(|(e, c)| json!({"exp": e, "coeff": c.to_json()})).collect::<Vec<_>>(),
        })
    }

    fn from_json(v: &Value) -> Result<Self, String> {
        let vars: Vec<String> = serde_json::from_value(v["vars"].clone()).map_err(|e| e.to_string())?;
        let mut sorted = vars.clone();
        sorted.sort();
        sorted.dedup();
        if sorted != vars {
            return Err("series variables must be sorted and distinct".into());
        }
        let order = match &v["order"] {
            Value::Null => EXACT,
            o => o.as_i64().ok_or("order must be an integer or null")? as i32,
        };
        let mut s = MultiSeries::zero(Arc::new(vars), order);
        for t in v["terms"].as_array().ok_or("terms must be an array")? {
            let e: Vec<i32> = serde_json::from_value(t["exp"].clone()).map_err(|e| e.to_string())?;
            if e.len() != s.vars.len() {
                return Err("exponent length does not match variables".into());
            }
            s.add_term(e, C::from_json(&t["coeff"])?);
        }
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    #[test]
    fn unit_inverse_and_orders() {
        let vars = variables(&["y1", "y2"]);
        let y1 = MultiSeries::<Rational>::var(vars.clone(), "y1", 5).unwrap();
        let y2 = MultiSeries::<Rational>::var(vars.clone(), "y2", 5).unwrap();
        let one = MultiSeries::constant(vars.clone(), 5, Rational::from(1));
        let u = one.add(&y1.scale(&q(3, 2))).add(&y1.mul(&y2));
        let inv = u.inverse_unit().unwrap();
        assert_eq!(u.mul(&inv), one);
        // y1·(1 + y1) has inverse y1^-1·(1 - y1 + ...) known to order 3.
        let m = y1.mul(&one.add(&y1));
        let minv = m.inverse().unwrap();
        assert_eq!(minv.order(), 3);
        assert_eq!(m.mul(&minv).truncated(3), one.truncated(3));
        assert!(y1.add(&y2).inverse().is_none());
    }

    #[test]
    fn scalars_broadcast() {
        let vars = variables(&["y"]);
        let y = MultiSeries::<Rational>::var(vars, "y", 4).unwrap();
        let two = MultiSeries::scalar(Rational::from(2));
        let s = y.plus(&two);
        assert_eq!(s.constant_term(), 2);
        assert_eq!(s.order(), 4);
        assert_eq!(two.times(&y), y.scale(&q(2, 1)));
    }

    #[test]
    fn json_round_trip() {
        let vars = variables(&["s", "y"]);
        let y = MultiSeries::<Rational>::var(vars.clone(), "y", 3).unwrap();
        let s = MultiSeries::<Rational>::var(vars, "s", 3).unwrap();
        let x = y.mul(&s).scale(&q(-5, 7)).add(&MultiSeries::scalar(q(1, 3)));
        let back = MultiSeries::<Rational>::from_json(&x.to_json()).unwrap();
        assert_eq!(back, x);
        assert_eq!(back.order(), x.order());
    }

    fn arb_series() -> impl Strategy<Value = MultiSeries<Rational>> {
        proptest::collection::vec(((0i32..3, 0i32..3), -3i64..=3), 0..6).prop_map(|ts| {
            let vars = variables(&["a", "b"]);
            let mut s = MultiSeries::zero(vars, 4);
            for ((i, j), c) in ts {
                s.add_term(vec![i, j], Rational::from(c));
            }
            s
        })
    }

    proptest! {
        #[test]
        fn ring_laws(a in arb_series(), b in arb_series(), c in arb_series()) {
            prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
            prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
            prop_assert_eq!(a.mul(&b), b.mul(&a));
        }
    }
}
