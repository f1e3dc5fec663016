//! The elliptic side: the Hain map into `ℚ⟨⟨T,A⟩⟩`, Eisenstein q-series,
//! iterated Eisenstein integrals and symbolic elliptic associators.
//!
//! Eisenstein series are normalized as
//! `G_w = -B_w/(2w) + Σ_{n≥1} σ_{w-1}(n) qⁿ`, so all q-coefficients are
//! rational. With `q = e^{2πiτ}`, integration from the cusp sends `qⁿ τʲ`
//! (`n ≥ 1`) to the unique antiderivative of the same shape and the constant
//! `τʲ` to `τ^{j+1}/(j+1)`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rug::ops::Pow;
use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ncalg::{ad_action, bernoulli_numbers, bernoulli_series, Alphabet, CoeffJson, Coefficient, NCSeries, NcError, Word};
use crate::numeric::{working_bits, BigComplex};
pub use crate::periodring::EllipticSymbol;
use crate::periodring::{EllipticResolver, EvalContext, LogSymbol, PeriodElem, PeriodError};

/// Largest |q0| accepted by [`qseries_eval`].
pub const MAX_Q0: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("Eisenstein index {0} is not supported (use 0 or an even weight >= 4)")]
    InvalidIndex(u32),
    #[error("|q0| = {0} exceeds the supported bound 1/2")]
    QTooLarge(f64),
    #[error("order {order} is too small for {digits} digits at |q0| = {q0}; tail estimate {tail:e}")]
    OrderTooSmall { order: u32, digits: u32, q0: f64, tail: f64 },
    #[error("the series involves tau, which is undefined at q0 = 0")]
    TauAtCusp,
    #[error(transparent)]
    Period(#[from] PeriodError),
    #[error(transparent)]
    Series(#[from] NcError),
    #[error("malformed q-series document: {0}")]
    Document(String),
}

/// A truncated q-expansion `Σ c_{n,j} qⁿ τʲ` with period-ring coefficients.
///
/// `growth` is an exponent `g` with `|c_n| = O(n^g)`; it drives the tail
/// estimate in [`qseries_eval`].
#[derive(Debug, Clone, PartialEq)]
pub struct QSeriesPoly {
    order: u32,
    growth: i32,
    terms: BTreeMap<(u32, u32), PeriodElem>,
}

impl QSeriesPoly {
    pub fn zero(order: u32) -> Self {
        QSeriesPoly { order, growth: 0, terms: BTreeMap::new() }
    }

    pub fn constant(order: u32, c: PeriodElem) -> Self {
        let mut s = Self::zero(order);
        s.add_term(0, 0, c);
        s
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn growth(&self) -> i32 {
        self.growth
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &PeriodElem)> {
        self.terms.iter()
    }

    /// Coefficient of `qⁿ τʲ`.
    pub fn coeff(&self, n: u32, j: u32) -> PeriodElem {
        self.terms.get(&(n, j)).cloned().unwrap_or_default()
    }

    pub fn tau_degree(&self) -> u32 {
        self.terms.keys().map(|&(_, j)| j).max().unwrap_or(0)
    }

    pub fn add_term(&mut self, n: u32, j: u32, c: PeriodElem) {
        if n > self.order || c.is_zero() {
            return;
        }
        let e = self.terms.entry((n, j)).or_default();
        *e = e.plus(&c);
        if e.is_zero() {
            self.terms.remove(&(n, j));
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = QSeriesPoly {
            order: self.order.min(other.order),
            growth: self.growth.max(other.growth),
            terms: BTreeMap::new(),
        };
        for ((n, j), c) in self.terms.iter().chain(other.terms.iter()) {
            out.add_term(*n, *j, c.clone());
        }
        out
    }

    pub fn scaled(&self, q: &Rational) -> Self {
        let mut out = QSeriesPoly { terms: BTreeMap::new(), ..self.clone() };
        for ((n, j), c) in &self.terms {
            out.add_term(*n, *j, c.scaled(q));
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let order = self.order.min(other.order);
        let growth = (self.growth + other.growth + 1).max(self.growth).max(other.growth);
        let mut out = QSeriesPoly { order, growth, terms: BTreeMap::new() };
        for ((na, ja), ca) in &self.terms {
            for ((nb, jb), cb) in &other.terms {
                if na + nb <= order {
                    out.add_term(na + nb, ja + jb, ca.times(cb));
                }
            }
        }
        out
    }

    /// `d/dτ`, with `d qⁿ/dτ = 2πi·n·qⁿ`.
    pub fn d_tau(&self) -> Self {
        let mut out = QSeriesPoly { growth: self.growth + 1, terms: BTreeMap::new(), ..self.clone() };
        let two_pi_i = PeriodElem::ipi(1).scaled(&Rational::from(2));
        for ((n, j), c) in &self.terms {
            if *n > 0 {
                out.add_term(*n, *j, c.times(&two_pi_i).scaled(&Rational::from(*n)));
            }
            if *j > 0 {
                out.add_term(*n, j - 1, c.scaled(&Rational::from(*j)));
            }
        }
        out
    }

    /// Antiderivative in τ regularized at the cusp.
    pub fn integrate(&self) -> Self {
        let mut out = QSeriesPoly { growth: self.growth - 1, terms: BTreeMap::new(), ..self.clone() };
        for ((n, j), c) in &self.terms {
            if *n == 0 {
                out.add_term(0, j + 1, c.scaled(&Rational::from((1, j + 1))));
                continue;
            }
            // qⁿτʲ ↦ qⁿ Σ_i (-1)^i j!/(j-i)! τ^{j-i} / (2πi n)^{i+1}
            let mut falling = Integer::from(1);
            for i in 0..=*j {
                if i > 0 {
                    falling *= j - i + 1;
                }
                let denom = Integer::from(2 * n).pow(i + 1);
                let mut r = Rational::from((falling.clone(), denom));
                if i % 2 == 1 {
                    r = -r;
                }
                let factor = PeriodElem::ipi(-(i as i32 + 1)).scaled(&r);
                out.add_term(*n, j - i, c.times(&factor));
            }
        }
        out
    }
}

/// `G_w` truncated at `q^order`; weight 0 gives the constant 1.
pub fn eisenstein_series(weight: u32, order: u32) -> Result<QSeriesPoly, EllipticError> {
    if weight == 0 {
        return Ok(QSeriesPoly::constant(order, PeriodElem::one()));
    }
    if weight < 4 || weight % 2 == 1 {
        return Err(EllipticError::InvalidIndex(weight));
    }
    let b = bernoulli_numbers(weight as usize);
    let mut s = QSeriesPoly::zero(order);
    s.growth = weight as i32 - 1;
    let c0 = -Rational::from(&b[weight as usize] / (2 * weight));
    s.add_term(0, 0, PeriodElem::rational(c0));
    for n in 1..=order {
        let mut sigma = Integer::new();
        for d in 1..=n {
            if n % d == 0 {
                sigma += Integer::from(d).pow(weight - 1);
            }
        }
        s.add_term(n, 0, PeriodElem::rational(sigma));
    }
    Ok(s)
}

/// `I(k1, ..., kn) = ∫ G_{k1}·I(k2, ..., kn)`, with `I() = 1`.
pub fn iterated_eisenstein(indices: &[u32], order: u32) -> Result<QSeriesPoly, EllipticError> {
    let mut acc = QSeriesPoly::constant(order, PeriodElem::one());
    for &k in indices.iter().rev() {
        acc = eisenstein_series(k, order)?.mul(&acc).integrate();
    }
    Ok(acc)
}

fn checked_q0(q0: &BigComplex) -> Result<f64, EllipticError> {
    let a = q0.abs_f64();
    if a > MAX_Q0 {
        return Err(EllipticError::QTooLarge(a));
    }
    Ok(a)
}

/// Evaluates `s` at `q = q0` with `τ = log(q0)/(2πi)`.
///
/// Fails with [`EllipticError::OrderTooSmall`] when the estimated tail
/// `C·Σ_{n>Q} n^g |q0|ⁿ` exceeds `10^-digits`, where `C` is the largest
/// observed `|c_n|/n^g`.
pub fn qseries_eval(s: &QSeriesPoly, q0: &BigComplex, digits: u32) -> Result<BigComplex, EllipticError> {
    let aq = checked_q0(q0)?;
    let bits = working_bits(digits);
    let mut ctx = EvalContext::new(digits);
    if aq == 0.0 {
        if s.terms.keys().any(|&(_, j)| j > 0) {
            return Err(EllipticError::TauAtCusp);
        }
        return Ok(s.coeff(0, 0).numeric_eval(&ctx)?);
    }
    let two_pi_i = BigComplex::i_pi(bits).scale_rational(&Rational::from(2));
    let tau = q0.with_prec(bits).ln().div(&two_pi_i);
    ctx.logs.insert(LogSymbol::Tau, tau.clone());
    let abs_tau = tau.abs_f64();

    let mut total = BigComplex::from_rational(&Rational::new(), bits);
    let mut per_n: BTreeMap<u32, f64> = BTreeMap::new();
    let mut q_pow = BigComplex::from_rational(&Rational::from(1), bits);
    let mut tau_pows = vec![BigComplex::from_rational(&Rational::from(1), bits)];
    for _ in 0..s.tau_degree() {
        let last = tau_pows.last().expect("nonempty").mul(&tau);
        tau_pows.push(last);
    }
    let mut current_n = 0;
    for ((n, j), c) in &s.terms {
        while current_n < *n {
            q_pow = q_pow.mul(q0);
            current_n += 1;
        }
        let v = c.numeric_eval(&ctx)?;
        *per_n.entry(*n).or_insert(0.0) += v.abs_f64() * abs_tau.powi(*j as i32);
        total = total.add(&v.mul(&tau_pows[*j as usize]).mul(&q_pow));
    }
    let tail = tail_estimate(&per_n, s.growth, s.order, aq);
    if tail > 10f64.powi(-(digits as i32)) {
        return Err(EllipticError::OrderTooSmall { order: s.order, digits, q0: aq, tail });
    }
    Ok(total)
}

fn tail_estimate(per_n: &BTreeMap<u32, f64>, growth: i32, order: u32, aq: f64) -> f64 {
    let g = growth as f64;
    let scale = per_n
        .iter()
        .filter(|(n, _)| **n > 0)
        .map(|(n, v)| v / (*n as f64).powf(g))
        .fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let mut tail = 0.0;
    for n in (order + 1)..(order + 4000) {
        let term = (scale.ln() + g * (n as f64).ln() + n as f64 * aq.ln()).exp();
        tail += term;
        if term < tail * 1e-18 {
            break;
        }
    }
    tail
}

/// Images of `X0`, `X1`, `X∞` in `ℚ⟨⟨T,A⟩⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct HainImages {
    pub x0: NCSeries<Rational>,
    pub x1: NCSeries<Rational>,
    pub xinf: NCSeries<Rational>,
}

pub fn ta_alphabet() -> Arc<Alphabet> {
    Alphabet::from_names(&["T", "A"]).expect("valid alphabet")
}

/// `X0 ↦ f(T)·A`, `X1 ↦ [T,A]`, `X∞ ↦ (T/(e^{-T}-1))·A` with
/// `f(T) = T/(e^T - 1)` acting through `ad_T`.
pub fn hain_hom(n: u32) -> Result<HainImages, NcError> {
    let ta = ta_alphabet();
    let t = NCSeries::<Rational>::letter(ta.clone(), "T", n)?;
    let a = NCSeries::<Rational>::letter(ta, "A", n)?;
    let f = bernoulli_series(n);
    // T/(e^{-T}-1) = -f(-T): coefficient of Tᵏ is -(-1)ᵏ Bₖ/k!.
    let g = NCSeries::from_terms(
        f.alphabet().clone(),
        n,
        f.terms().map(|(w, c)| {
            let sign = if w.len() % 2 == 0 { -1 } else { 1 };
            (w.clone(), c.scaled(&Rational::from(sign)))
        }),
    );
    Ok(HainImages {
        x0: ad_action(&f, &a, n)?,
        x1: t.bracket(&a)?,
        xinf: ad_action(&g, &a, n)?,
    })
}

/// A table binding associator words over `{T, A}` to q-expansions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EllipticTable {
    entries: BTreeMap<String, QSeriesPoly>,
}

impl EllipticTable {
    pub fn insert(&mut self, word: &[&str], series: QSeriesPoly) {
        self.entries.insert(word.concat(), series);
    }

    pub fn get(&self, name: &str) -> Option<&QSeriesPoly> {
        self.entries.get(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_doc(&self) -> TableDoc {
        TableDoc {
            entries: self
                .entries
                .iter()
                .map(|(name, s)| TableEntry {
                    word: name.chars().map(|c| c.to_string()).collect(),
                    series: s.to_doc(),
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &TableDoc) -> Result<Self, EllipticError> {
        let mut t = EllipticTable::default();
        for e in &doc.entries {
            if let Some(bad) = e.word.iter().find(|l| *l != "T" && *l != "A") {
                return Err(EllipticError::Document(format!("unknown letter `{bad}` in table word")));
            }
            t.entries.insert(e.word.concat(), QSeriesPoly::from_doc(&e.series)?);
        }
        Ok(t)
    }
}

/// `1 + Σ_{w ≠ ∅} emzv(w)·w` over `{T, A}`.
pub fn elliptic_associator(n: u32) -> NCSeries<PeriodElem> {
    let ta = ta_alphabet();
    let words: Vec<Word> = ta.words_up_to(n);
    let terms: Vec<(Word, PeriodElem)> = words
        .into_iter()
        .map(|w| {
            let c = if w.is_empty() {
                PeriodElem::one()
            } else {
                PeriodElem::elliptic(EllipticSymbol::Emzv {
                    name: ta.render_word(&w),
                    weight: w.len() as u32,
                })
            };
            (w, c)
        })
        .collect();
    NCSeries::from_terms(ta, n, terms)
}

/// Resolves elliptic symbols numerically at a fixed `q0`: table-bound
/// associator coefficients and iterated Eisenstein integrals.
pub struct QResolver {
    pub q0: BigComplex,
    pub table: EllipticTable,
}

impl QResolver {
    pub fn new(q0: BigComplex, table: EllipticTable) -> Arc<Self> {
        Arc::new(QResolver { q0, table })
    }

    /// Smallest order whose geometric tail fits the precision, capped at 200.
    fn order_for(&self, digits: u32, growth: u32) -> u32 {
        let aq = self.q0.abs_f64().max(1e-300);
        let target = (digits as f64 + 5.0) * std::f64::consts::LN_10;
        let mut q = 8u32;
        while q < 200 && (q as f64) * -aq.ln() - (growth as f64) * (q as f64).ln() < target {
            q += 4;
        }
        q.min(200)
    }
}

impl EllipticResolver for QResolver {
    fn resolve(&self, symbol: &EllipticSymbol, digits: u32) -> Option<Result<BigComplex, PeriodError>> {
        let result = match symbol {
            EllipticSymbol::Emzv { name, .. } => {
                let series = self.table.get(name)?;
                qseries_eval(series, &self.q0, digits)
            }
            EllipticSymbol::IteratedEisenstein(k) => {
                let growth = k.iter().max().copied().unwrap_or(0) * k.len() as u32;
                iterated_eisenstein(k, self.order_for(digits, growth))
                    .and_then(|s| qseries_eval(&s, &self.q0, digits))
            }
        };
        Some(result.map_err(|e| match e {
            EllipticError::Period(p) => p,
            other => PeriodError::Numeric(other.to_string()),
        }))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSeriesDoc {
    pub order: u32,
    pub growth: i32,
    pub terms: Vec<QTermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTermDoc {
    pub q: u32,
    pub tau: u32,
    pub coeff: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableDoc {
    pub entries: Vec<TableEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub word: Vec<String>,
    pub series: QSeriesDoc,
}

impl QSeriesPoly {
    pub fn to_doc(&self) -> QSeriesDoc {
        QSeriesDoc {
            order: self.order,
            growth: self.growth,
            terms: self
                .terms
                .iter()
                .map(|((q, tau), c)| QTermDoc { q: *q, tau: *tau, coeff: c.to_json() })
                .collect(),
        }
    }

    pub fn from_doc(doc: &QSeriesDoc) -> Result<Self, EllipticError> {
        let mut s = QSeriesPoly::zero(doc.order);
        s.growth = doc.growth;
        for t in &doc.terms {
            if t.q > doc.order {
                return Err(EllipticError::Document(format!("q-power {} exceeds order {}", t.q, doc.order)));
            }
            let c = PeriodElem::from_json(&t.coeff).map_err(EllipticError::Document)?;
            s.add_term(t.q, t.tau, c);
        }
        Ok(s)
    }
}
