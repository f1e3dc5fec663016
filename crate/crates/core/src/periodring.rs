//! Exact ℚ-linear combinations of period monomials.
//!
//! A monomial is a product of an integer power of `iπ`, multiple zeta
//! symbols, elliptic symbols and log symbols. No relations among zeta values
//! are imposed: the ring is the free polynomial ring on the symbols, with
//! `iπ` allowed to carry negative exponents. Identities are checked
//! numerically through [`PeriodElem::numeric_eval`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rug::{Float, Rational};
use serde_json::Value;
use thiserror::Error;

use crate::mzv;
use crate::ncalg::{CoeffJson, Coefficient};
use crate::numeric::{working_bits, BigComplex};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PeriodError {
    #[error("unbound symbol `{0}`")]
    UnboundSymbol(String),
    #[error("composition {0} is not admissible (last part must be >= 2)")]
    NonAdmissible(String),
    #[error("cannot parse period element: {0}")]
    Parse(String),
    #[error("numeric evaluation failed: {0}")]
    Numeric(String),
}

/// A composition `(k1, ..., kl)` of positive integers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Composition(pub Vec<u32>);

impl Composition {
    pub fn new(parts: Vec<u32>) -> Option<Self> {
        if parts.is_empty() || parts.contains(&0) {
            None
        } else {
            Some(Composition(parts))
        }
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn depth(&self) -> usize {
        self.0.len()
    }

    pub fn is_admissible(&self) -> bool {
        self.0.last().is_some_and(|&k| k >= 2)
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", join_u32(&self.0))
    }
}

impl FromStr for Composition {
    type Err = PeriodError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts = parse_u32_list(s)?;
        Composition::new(parts).ok_or_else(|| PeriodError::Parse(format!("bad composition `{s}`")))
    }
}

fn join_u32(v: &[u32]) -> String {
    v.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_u32_list(s: &str) -> Result<Vec<u32>, PeriodError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<u32>()
                .map_err(|_| PeriodError::Parse(format!("bad integer list `{s}`")))
        })
        .collect()
}

/// A formal logarithm: `log(name)` of a fusing parameter, or the τ symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogSymbol {
    Log(String),
    Tau,
}

impl fmt::Display for LogSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LogSymbol::Log(p) => write!(f, "log({p})"),
            LogSymbol::Tau => write!(f, "tau"),
        }
    }
}

/// Symbols standing for elliptic periods.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EllipticSymbol {
    /// Iterated Eisenstein integral with the given indices.
    IteratedEisenstein(Vec<u32>),
    /// Opaque elliptic multiple zeta value, named by its word.
    Emzv { name: String, weight: u32 },
}

impl fmt::Display for EllipticSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EllipticSymbol::IteratedEisenstein(k) => write!(f, "E({})", join_u32(k)),
            EllipticSymbol::Emzv { name, weight } => write!(f, "emzv({name},{weight})"),
        }
    }
}

/// A product of symbol powers; factor lists are kept sorted with positive
/// exponents.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PeriodMonomial {
    pub ipi: i32,
    pub zetas: Vec<(Composition, u32)>,
    pub elliptic: Vec<(EllipticSymbol, u32)>,
    pub logs: Vec<(LogSymbol, u32)>,
}

fn merge<K: Ord + Clone>(a: &[(K, u32)], b: &[(K, u32)]) -> Vec<(K, u32)> {
    let mut m: BTreeMap<K, u32> = a.iter().cloned().collect();
    for (k, e) in b {
        *m.entry(k.clone()).or_insert(0) += e;
    }
    m.into_iter().collect()
}

impl PeriodMonomial {
    pub fn is_unit(&self) -> bool {
        *self == PeriodMonomial::default()
    }

    pub fn mul(&self, other: &Self) -> Self {
        PeriodMonomial {
            ipi: self.ipi + other.ipi,
            zetas: merge(&self.zetas, &other.zetas),
            elliptic: merge(&self.elliptic, &other.elliptic),
            logs: merge(&self.logs, &other.logs),
        }
    }

    fn factor_strings(&self) -> Vec<String> {
        fn pow(base: String, e: u32) -> String {
            if e == 1 {
                base
            } else {
                format!("{base}^{e}")
            }
        }
        let mut out = Vec::new();
        if self.ipi != 0 {
            out.push(if self.ipi == 1 { "(i*pi)".to_string() } else { format!("(i*pi)^{}", self.ipi) });
        }
        for (k, e) in &self.zetas {
            out.push(pow(format!("zeta({k})"), *e));
        }
        for (s, e) in &self.elliptic {
            out.push(pow(s.to_string(), *e));
        }
        for (s, e) in &self.logs {
            out.push(pow(s.to_string(), *e));
        }
        out
    }
}

impl fmt::Display for PeriodMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fs = self.factor_strings();
        if fs.is_empty() {
            write!(f, "1")
        } else {
            write!(f, "{}", fs.join(" * "))
        }
    }
}

/// An element of the period ring.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PeriodElem {
    terms: BTreeMap<PeriodMonomial, Rational>,
}

impl PeriodElem {
    pub fn from_monomial(m: PeriodMonomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if c != 0 {
            terms.insert(m, c);
        }
        PeriodElem { terms }
    }

    pub fn rational(c: impl Into<Rational>) -> Self {
        Self::from_monomial(PeriodMonomial::default(), c.into())
    }

    /// `(iπ)^k`.
    pub fn ipi(k: i32) -> Self {
        Self::from_monomial(PeriodMonomial { ipi: k, ..Default::default() }, Rational::from(1))
    }

    pub fn zeta(k: &Composition) -> Result<Self, PeriodError> {
        if !k.is_admissible() {
            return Err(PeriodError::NonAdmissible(k.to_string()));
        }
        Ok(Self::from_monomial(
            PeriodMonomial { zetas: vec![(k.clone(), 1)], ..Default::default() },
            Rational::from(1),
        ))
    }

    pub fn elliptic(s: EllipticSymbol) -> Self {
        Self::from_monomial(
            PeriodMonomial { elliptic: vec![(s, 1)], ..Default::default() },
            Rational::from(1),
        )
    }

    pub fn log_symbol(s: LogSymbol) -> Self {
        Self::from_monomial(
            PeriodMonomial { logs: vec![(s, 1)], ..Default::default() },
            Rational::from(1),
        )
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PeriodMonomial, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// The value as a rational, if the element has no symbolic factors.
    pub fn as_rational(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::new()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_unit().then(|| c.clone())
            }
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: PeriodMonomial, c: Rational) {
        if c == 0 {
            return;
        }
        let entry = self.terms.entry(m.clone()).or_default();
        *entry += c;
        if *entry == 0 {
            self.terms.remove(&m);
        }
    }

    /// Evaluates to a complex number accurate to about `10^(-ctx.digits)`.
    pub fn numeric_eval(&self, ctx: &EvalContext) -> Result<BigComplex, PeriodError> {
        let bits = working_bits(ctx.digits);
        let mut acc = BigComplex::from_parts(Float::new(bits), Float::new(bits));
        let mut cache = FactorCache::default();
        for (m, c) in &self.terms {
            let v = eval_monomial(m, ctx, bits, &mut cache)?;
            acc = acc.add(&v.scale_rational(c));
        }
        Ok(acc)
    }
}

#[derive(Default)]
struct FactorCache {
    ipi: Option<BigComplex>,
    values: HashMap<String, BigComplex>,
}

fn eval_monomial(
    m: &PeriodMonomial,
    ctx: &EvalContext,
    bits: u32,
    cache: &mut FactorCache,
) -> Result<BigComplex, PeriodError> {
    let mut v = BigComplex::from_rational(&Rational::from(1), bits);
    if m.ipi != 0 {
        let ipi = cache.ipi.get_or_insert_with(|| BigComplex::i_pi(bits)).clone();
        v = v.mul(&ipi.powi(m.ipi));
    }
    for (k, e) in &m.zetas {
        let key = format!("zeta({k})");
        let z = match cache.values.get(&key) {
            Some(z) => z.clone(),
            None => {
                let z = BigComplex::from_float(mzv::mzv_float(k, bits)?);
                cache.values.insert(key, z.clone());
                z
            }
        };
        v = v.mul(&z.powi(*e as i32));
    }
    for (s, e) in &m.elliptic {
        let key = s.to_string();
        let z = match cache.values.get(&key) {
            Some(z) => z.clone(),
            None => {
                let z = ctx.elliptic_value(s)?;
                cache.values.insert(key, z.clone());
                z
            }
        };
        v = v.mul(&z.powi(*e as i32));
    }
    for (s, e) in &m.logs {
        let z = ctx
            .logs
            .get(s)
            .ok_or_else(|| PeriodError::UnboundSymbol(s.to_string()))?;
        v = v.mul(&z.powi(*e as i32));
    }
    Ok(v)
}

/// Supplies numeric values of elliptic symbols that are not bound directly.
pub trait EllipticResolver: Send + Sync {
    fn resolve(&self, symbol: &EllipticSymbol, digits: u32) -> Option<Result<BigComplex, PeriodError>>;
}

/// Bindings and precision for [`PeriodElem::numeric_eval`].
#[derive(Clone, Default)]
pub struct EvalContext {
    pub digits: u32,
    pub logs: HashMap<LogSymbol, BigComplex>,
    pub elliptic: HashMap<EllipticSymbol, BigComplex>,
    pub resolver: Option<Arc<dyn EllipticResolver>>,
}

impl EvalContext {
    pub fn new(digits: u32) -> Self {
        EvalContext { digits, ..Default::default() }
    }

    pub fn bind_log(mut self, s: LogSymbol, v: BigComplex) -> Self {
        self.logs.insert(s, v);
        self
    }

    fn elliptic_value(&self, s: &EllipticSymbol) -> Result<BigComplex, PeriodError> {
        if let Some(v) = self.elliptic.get(s) {
            return Ok(v.clone());
        }
        if let Some(r) = &self.resolver {
            if let Some(v) = r.resolve(s, self.digits) {
                return v;
            }
        }
        Err(PeriodError::UnboundSymbol(s.to_string()))
    }
}

impl Coefficient for PeriodElem {
    fn zero() -> Self {
        PeriodElem::default()
    }
    fn one() -> Self {
        PeriodElem::rational(1)
    }
    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }
    fn plus(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
    fn negated(&self) -> Self {
        PeriodElem {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), Rational::from(-c))).collect(),
        }
    }
    fn times(&self, other: &Self) -> Self {
        let mut out = PeriodElem::default();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), Rational::from(ca * cb));
            }
        }
        out
    }
    fn scaled(&self, q: &Rational) -> Self {
        if *q == 0 {
            return PeriodElem::default();
        }
        PeriodElem {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), Rational::from(c * q))).collect(),
        }
    }
    fn try_inverse(&self) -> Option<Self> {
        // Units are nonzero rational multiples of a pure power of iπ.
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next()?;
        if !(m.zetas.is_empty() && m.elliptic.is_empty() && m.logs.is_empty()) {
            return None;
        }
        Some(PeriodElem::from_monomial(
            PeriodMonomial { ipi: -m.ipi, ..Default::default() },
            Rational::from(c.recip_ref()),
        ))
    }
}

impl fmt::Display for PeriodElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(m, c)| {
                if m.is_unit() {
                    c.to_string()
                } else if *c == 1 {
                    m.to_string()
                } else {
                    format!("{c} * {m}")
                }
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

impl fmt::Debug for PeriodElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn split_power(s: &str) -> Result<(&str, i64), PeriodError> {
    // Exponents follow the last `^` outside parentheses.
    let bytes = s.as_bytes();
    if let Some(pos) = s.rfind('^') {
        if bytes[..pos].last() == Some(&b')') || s[..pos].chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            let e = s[pos + 1..]
                .parse::<i64>()
                .map_err(|_| PeriodError::Parse(format!("bad exponent in `{s}`")))?;
            return Ok((&s[..pos], e));
        }
    }
    Ok((s, 1))
}

fn parse_factor(tok: &str, m: &mut PeriodMonomial) -> Result<(), PeriodError> {
    let bad = || PeriodError::Parse(format!("unrecognized factor `{tok}`"));
    let (base, e) = split_power(tok)?;
    if base == "(i*pi)" {
        m.ipi += e as i32;
        return Ok(());
    }
    if e < 1 {
        return Err(bad());
    }
    let e = e as u32;
    let inner = |prefix: &str| base.strip_prefix(prefix).and_then(|r| r.strip_suffix(')'));
    if let Some(args) = inner("zeta(") {
        let k: Composition = args.parse()?;
        if !k.is_admissible() {
            return Err(PeriodError::NonAdmissible(k.to_string()));
        }
        m.zetas = merge(&m.zetas, &[(k, e)]);
    } else if let Some(args) = inner("E(") {
        let k = parse_u32_list(args)?;
        m.elliptic = merge(&m.elliptic, &[(EllipticSymbol::IteratedEisenstein(k), e)]);
    } else if let Some(args) = inner("emzv(") {
        let (name, w) = args.rsplit_once(',').ok_or_else(bad)?;
        let weight = w.parse::<u32>().map_err(|_| bad())?;
        let s = EllipticSymbol::Emzv { name: name.to_string(), weight };
        m.elliptic = merge(&m.elliptic, &[(s, e)]);
    } else if let Some(p) = inner("log(") {
        if p.is_empty() {
            return Err(bad());
        }
        m.logs = merge(&m.logs, &[(LogSymbol::Log(p.to_string()), e)]);
    } else if base == "tau" {
        m.logs = merge(&m.logs, &[(LogSymbol::Tau, e)]);
    } else {
        return Err(bad());
    }
    Ok(())
}

impl FromStr for PeriodElem {
    type Err = PeriodError;

    /// Parses the rendering produced by `Display`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let mut out = PeriodElem::default();
        if s == "0" {
            return Ok(out);
        }
        for term in s.split(" + ") {
            let mut factors = term.split(" * ").peekable();
            let first = factors.peek().copied().ok_or_else(|| PeriodError::Parse(s.into()))?;
            let coeff = match first.parse::<Rational>() {
                Ok(c) => {
                    factors.next();
                    c
                }
                Err(_) => Rational::from(1),
            };
            let mut m = PeriodMonomial::default();
            for f in factors {
                parse_factor(f.trim(), &mut m)?;
            }
            out.add_term(m, coeff);
        }
        Ok(out)
    }
}

impl CoeffJson for PeriodElem {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self, String> {
        v.as_str()
            .ok_or_else(|| "period coefficient must be a string".to_string())?
            .parse()
            .map_err(|e: PeriodError| e.to_string())
    }
}
