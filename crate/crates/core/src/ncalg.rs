//! Truncated noncommutative formal power series.
//!
//! A series is a sparse map from words over an [`Alphabet`] to coefficients
//! in a commutative ring implementing [`Coefficient`]. Every stored word has
//! weight at most the series truncation and no stored coefficient is zero.
//! Products, exponentials and substitutions drop everything above the
//! truncation weight.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

use rug::{Integer, Rational};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::numeric::BigComplex;

/// The operations a coefficient ring must provide.
///
/// Scalars from ℚ act through [`Coefficient::scaled`]. Implementations exist
/// for exact rationals, [`crate::periodring::PeriodElem`],
/// [`crate::curves::MultiSeries`] and [`BigComplex`].
pub trait Coefficient: Clone + PartialEq + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn plus(&self, other: &Self) -> Self;
    fn negated(&self) -> Self;
    fn times(&self, other: &Self) -> Self;
    fn scaled(&self, q: &Rational) -> Self;

    fn minus(&self, other: &Self) -> Self {
        self.plus(&other.negated())
    }

    /// Multiplicative inverse when the element is a unit the ring can invert.
    fn try_inverse(&self) -> Option<Self> {
        None
    }
}

impl Coefficient for Rational {
    fn zero() -> Self {
        Rational::new()
    }
    fn one() -> Self {
        Rational::from(1)
    }
    fn is_zero(&self) -> bool {
        *self.numer() == 0
    }
    fn plus(&self, other: &Self) -> Self {
        Rational::from(self + other)
    }
    fn negated(&self) -> Self {
        Rational::from(-self)
    }
    fn times(&self, other: &Self) -> Self {
        Rational::from(self * other)
    }
    fn scaled(&self, q: &Rational) -> Self {
        Rational::from(self * q)
    }
    fn minus(&self, other: &Self) -> Self {
        Rational::from(self - other)
    }
    fn try_inverse(&self) -> Option<Self> {
        if Coefficient::is_zero(self) {
            None
        } else {
            Some(Rational::from(self.recip_ref()))
        }
    }
}

impl Coefficient for BigComplex {
    fn zero() -> Self {
        BigComplex::from_i64(0)
    }
    fn one() -> Self {
        BigComplex::from_i64(1)
    }
    fn is_zero(&self) -> bool {
        BigComplex::is_zero(self)
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
        self.scale_rational(q)
    }
    fn minus(&self, other: &Self) -> Self {
        self.sub(other)
    }
    fn try_inverse(&self) -> Option<Self> {
        if BigComplex::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NcError {
    #[error("alphabet mismatch between operands")]
    AlphabetMismatch,
    #[error("unknown letter `{0}`")]
    UnknownLetter(String),
    #[error("duplicate letter `{0}` in alphabet")]
    DuplicateLetter(String),
    #[error("letter `{0}` must have weight >= 1")]
    ZeroWeight(String),
    #[error("{op} requires constant term {expected}")]
    ConstantTerm { op: &'static str, expected: &'static str },
    #[error("substituted image for `{0}` has a nonzero constant term; substitution would exceed the truncation")]
    SubstitutionExceedsTruncation(String),
    #[error("requested truncation {requested} exceeds operand truncation {available}")]
    TruncationTooLarge { requested: u32, available: u32 },
    #[error("malformed series document: {0}")]
    Document(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Letter {
    pub name: String,
    #[serde(default = "default_weight")]
    pub weight: u32,
}

fn default_weight() -> u32 {
    1
}

impl Letter {
    pub fn new(name: impl Into<String>) -> Self {
        Letter { name: name.into(), weight: 1 }
    }
}

/// An ordered set of letters with unique names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    letters: Vec<Letter>,
}

impl Alphabet {
    pub fn new(letters: Vec<Letter>) -> Result<Self, NcError> {
        for (i, l) in letters.iter().enumerate() {
            if l.weight == 0 {
                return Err(NcError::ZeroWeight(l.name.clone()));
            }
            if letters[..i].iter().any(|m| m.name == l.name) {
                return Err(NcError::DuplicateLetter(l.name.clone()));
            }
        }
        Ok(Alphabet { letters })
    }

    /// Alphabet of weight-one letters.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Arc<Self>, NcError> {
        Ok(Arc::new(Self::new(
            names.iter().map(|n| Letter::new(n.as_ref())).collect(),
        )?))
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.letters.iter().position(|l| l.name == name)
    }

    pub fn weight_of(&self, word: &Word) -> u32 {
        word.0.iter().map(|&i| self.letters[i as usize].weight).sum()
    }

    /// Parses a word given as letter names.
    pub fn word<S: AsRef<str>>(&self, names: &[S]) -> Result<Word, NcError> {
        names
            .iter()
            .map(|n| {
                self.index_of(n.as_ref())
                    .map(|i| i as u16)
                    .ok_or_else(|| NcError::UnknownLetter(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Word)
    }

    pub fn names_of(&self, word: &Word) -> Vec<String> {
        word.0.iter().map(|&i| self.letters[i as usize].name.clone()).collect()
    }

    /// Compact rendering such as `x1x0x0` (letters concatenated).
    pub fn render_word(&self, word: &Word) -> String {
        if word.is_empty() {
            return "1".to_string();
        }
        self.names_of(word).concat()
    }

    /// All words of weight at most `max_weight`, in canonical order.
    pub fn words_up_to(&self, max_weight: u32) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        let mut frontier = vec![(Word::empty(), 0u32)];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for (w, wt) in &frontier {
                for (i, l) in self.letters.iter().enumerate() {
                    if wt + l.weight <= max_weight {
                        let mut v = w.0.clone();
                        v.push(i as u16);
                        next.push((Word(v), wt + l.weight));
                    }
                }
            }
            out.extend(next.iter().map(|(w, _)| w.clone()));
            frontier = next;
        }
        out.sort();
        out
    }
}

/// A word, stored as letter indices into its alphabet.
///
/// Words order length-lexicographically, so equal series have equal maps.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(pub Vec<u16>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Shuffle product of two words as a formal ℤ-combination.
pub fn shuffle_product(w1: &Word, w2: &Word) -> BTreeMap<Word, i64> {
    let mut memo = HashMap::new();
    shuffle_rec(&w1.0, &w2.0, &mut memo)
}

type ShuffleMemo = HashMap<(Vec<u16>, Vec<u16>), BTreeMap<Word, i64>>;

fn shuffle_rec(a: &[u16], b: &[u16], memo: &mut ShuffleMemo) -> BTreeMap<Word, i64> {
    if a.is_empty() || b.is_empty() {
        let mut m = BTreeMap::new();
        m.insert(Word(if a.is_empty() { b.to_vec() } else { a.to_vec() }), 1);
        return m;
    }
    let key = (a.to_vec(), b.to_vec());
    if let Some(hit) = memo.get(&key) {
        return hit.clone();
    }
    let mut out: BTreeMap<Word, i64> = BTreeMap::new();
    // (ua) ш (vb) = (u ш vb)a + (ua ш v)b, peeling the last letters.
    let (la, ra) = a.split_at(a.len() - 1);
    for (w, c) in shuffle_rec(la, b, memo) {
        let mut v = w.0;
        v.push(ra[0]);
        *out.entry(Word(v)).or_insert(0) += c;
    }
    let (lb, rb) = b.split_at(b.len() - 1);
    for (w, c) in shuffle_rec(a, lb, memo) {
        let mut v = w.0;
        v.push(rb[0]);
        *out.entry(Word(v)).or_insert(0) += c;
    }
    memo.insert(key, out.clone());
    out
}

/// A truncated noncommutative power series with coefficients in `R`.
#[derive(Clone, PartialEq)]
pub struct NCSeries<R> {
    alphabet: Arc<Alphabet>,
    truncation: u32,
    terms: BTreeMap<Word, R>,
}

impl<R: Coefficient> fmt::Debug for NCSeries<R> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut m = f.debug_map();
        for (w, c) in &self.terms {
            m.entry(&self.alphabet.render_word(w), c);
        }
        m.finish()
    }
}

impl<R: Coefficient> NCSeries<R> {
    pub fn zero(alphabet: Arc<Alphabet>, truncation: u32) -> Self {
        NCSeries { alphabet, truncation, terms: BTreeMap::new() }
    }

    pub fn one(alphabet: Arc<Alphabet>, truncation: u32) -> Self {
        Self::constant(alphabet, truncation, R::one())
    }

    pub fn constant(alphabet: Arc<Alphabet>, truncation: u32, c: R) -> Self {
        let mut s = Self::zero(alphabet, truncation);
        s.add_term(Word::empty(), c);
        s
    }

    /// The series consisting of a single letter.
    pub fn letter(alphabet: Arc<Alphabet>, name: &str, truncation: u32) -> Result<Self, NcError> {
        let idx = alphabet
            .index_of(name)
            .ok_or_else(|| NcError::UnknownLetter(name.to_string()))?;
        let mut s = Self::zero(alphabet, truncation);
        s.add_term(Word(vec![idx as u16]), R::one());
        Ok(s)
    }

    pub fn from_terms<I>(alphabet: Arc<Alphabet>, truncation: u32, terms: I) -> Self
    where
        I: IntoIterator<Item = (Word, R)>,
    {
        let mut s = Self::zero(alphabet, truncation);
        for (w, c) in terms {
            s.add_term(w, c);
        }
        s
    }

    pub fn alphabet(&self) -> &Arc<Alphabet> {
        &self.alphabet
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &R)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Adds `c` to the coefficient of `w`, dropping words above the truncation.
    pub fn add_term(&mut self, w: Word, c: R) {
        if c.is_zero() || self.alphabet.weight_of(&w) > self.truncation {
            return;
        }
        match self.terms.get_mut(&w) {
            Some(existing) => {
                let sum = existing.plus(&c);
                if sum.is_zero() {
                    self.terms.remove(&w);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(w, c);
            }
        }
    }

    pub fn coeff(&self, w: &Word) -> R {
        self.terms.get(w).cloned().unwrap_or_else(R::zero)
    }

    pub fn coeff_of<S: AsRef<str>>(&self, names: &[S]) -> Result<R, NcError> {
        Ok(self.coeff(&self.alphabet.word(names)?))
    }

    pub fn constant_term(&self) -> R {
        self.coeff(&Word::empty())
    }

    fn check_alphabet(&self, other: &Self) -> Result<(), NcError> {
        if Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet {
            Ok(())
        } else {
            Err(NcError::AlphabetMismatch)
        }
    }

    /// Re-truncates at a lower weight.
    pub fn truncated(&self, truncation: u32) -> Self {
        let t = truncation.min(self.truncation);
        let terms = self
            .terms
            .iter()
            .filter(|(w, _)| self.alphabet.weight_of(w) <= t)
            .map(|(w, c)| (w.clone(), c.clone()))
            .collect();
        NCSeries { alphabet: self.alphabet.clone(), truncation: t, terms }
    }

    pub fn plus(&self, other: &Self) -> Result<Self, NcError> {
        self.check_alphabet(other)?;
        let mut out = self.truncated(self.truncation.min(other.truncation));
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn minus(&self, other: &Self) -> Result<Self, NcError> {
        self.plus(&other.negated())
    }

    pub fn negated(&self) -> Self {
        self.map_coeffs(|c| c.negated())
    }

    pub fn scaled(&self, q: &Rational) -> Self {
        self.map_coeffs(|c| c.scaled(q))
    }

    pub fn times_scalar(&self, s: &R) -> Self {
        self.map_coeffs(|c| c.times(s))
    }

    /// Applies `f` to every coefficient, pruning zeros.
    pub fn map_coeffs<S: Coefficient>(&self, f: impl Fn(&R) -> S) -> NCSeries<S> {
        let mut out = NCSeries::zero(self.alphabet.clone(), self.truncation);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), f(c));
        }
        out
    }

    pub fn try_map_coeffs<S: Coefficient, E>(
        &self,
        f: impl Fn(&R) -> Result<S, E>,
    ) -> Result<NCSeries<S>, E> {
        let mut out = NCSeries::zero(self.alphabet.clone(), self.truncation);
        for (w, c) in &self.terms {
            out.add_term(w.clone(), f(c)?);
        }
        Ok(out)
    }

    /// Concatenation product truncated at the smaller truncation.
    pub fn mul(&self, other: &Self) -> Result<Self, NcError> {
        self.mul_truncated(other, self.truncation.min(other.truncation))
    }

    pub fn mul_truncated(&self, other: &Self, truncation: u32) -> Result<Self, NcError> {
        self.check_alphabet(other)?;
        let available = self.truncation.min(other.truncation);
        if truncation > available {
            return Err(NcError::TruncationTooLarge { requested: truncation, available });
        }
        let mut acc: BTreeMap<Word, R> = BTreeMap::new();
        let weights_b: Vec<(u32, &Word, &R)> = other
            .terms
            .iter()
            .map(|(w, c)| (self.alphabet.weight_of(w), w, c))
            .collect();
        for (wa, ca) in &self.terms {
            let wta = self.alphabet.weight_of(wa);
            if wta > truncation {
                continue;
            }
            for (wtb, wb, cb) in &weights_b {
                if wta + wtb > truncation {
                    continue;
                }
                let prod = ca.times(cb);
                let key = wa.concat(wb);
                match acc.get_mut(&key) {
                    Some(e) => *e = e.plus(&prod),
                    None => {
                        acc.insert(key, prod);
                    }
                }
            }
        }
        acc.retain(|_, c| !c.is_zero());
        Ok(NCSeries { alphabet: self.alphabet.clone(), truncation, terms: acc })
    }

    /// Lie bracket `[a, b] = ab - ba`.
    pub fn bracket(&self, other: &Self) -> Result<Self, NcError> {
        self.mul(other)?.minus(&other.mul(self)?)
    }

    /// Integer power; negative powers require constant term 1.
    pub fn pow(&self, k: i32) -> Result<Self, NcError> {
        let base = if k < 0 { self.inverse()? } else { self.clone() };
        let mut out = Self::one(self.alphabet.clone(), self.truncation);
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base)?;
        }
        Ok(out)
    }

    /// Truncated exponential of a series with zero constant term.
    pub fn exp(&self) -> Result<Self, NcError> {
        if !self.constant_term().is_zero() {
            return Err(NcError::ConstantTerm { op: "exp", expected: "0" });
        }
        let one = Self::one(self.alphabet.clone(), self.truncation);
        let mut sum = one.clone();
        let mut power = one;
        for k in 1..=self.truncation {
            power = power.mul(self)?.scaled(&Rational::from((1, k)));
            if power.is_zero() {
                break;
            }
            sum = sum.plus(&power)?;
        }
        Ok(sum)
    }

    /// Truncated logarithm of a series with constant term 1.
    pub fn log(&self) -> Result<Self, NcError> {
        if self.constant_term() != R::one() {
            return Err(NcError::ConstantTerm { op: "log", expected: "1" });
        }
        let one = Self::one(self.alphabet.clone(), self.truncation);
        let r = self.minus(&one)?;
        let mut sum = Self::zero(self.alphabet.clone(), self.truncation);
        let mut power = one;
        for k in 1..=self.truncation {
            power = power.mul(&r)?;
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            sum = sum.plus(&power.scaled(&Rational::from((sign, k))))?;
        }
        Ok(sum)
    }

    /// Inverse of a series with constant term 1.
    pub fn inverse(&self) -> Result<Self, NcError> {
        if self.constant_term() != R::one() {
            return Err(NcError::ConstantTerm { op: "inverse", expected: "1" });
        }
        let one = Self::one(self.alphabet.clone(), self.truncation);
        let r = self.minus(&one)?.negated();
        let mut sum = one.clone();
        let mut power = one;
        for _ in 1..=self.truncation {
            power = power.mul(&r)?;
            if power.is_zero() {
                break;
            }
            sum = sum.plus(&power)?;
        }
        Ok(sum)
    }

    /// Replaces each letter of `self` by a series over `target`.
    ///
    /// `images` is indexed like `self.alphabet()`; images must have zero
    /// constant term. The result is truncated at `truncation`.
    pub fn substitute(
        &self,
        images: &[NCSeries<R>],
        target: Arc<Alphabet>,
        truncation: u32,
    ) -> Result<NCSeries<R>, NcError> {
        if images.len() != self.alphabet.len() {
            return Err(NcError::AlphabetMismatch);
        }
        for (img, l) in images.iter().zip(self.alphabet.letters()) {
            if !(Arc::ptr_eq(img.alphabet(), &target) || **img.alphabet() == *target) {
                return Err(NcError::AlphabetMismatch);
            }
            if !img.constant_term().is_zero() {
                return Err(NcError::SubstitutionExceedsTruncation(l.name.clone()));
            }
        }
        let images: Vec<NCSeries<R>> =
            images.iter().map(|s| s.truncated(truncation)).collect();
        let mut prefix: HashMap<Word, NCSeries<R>> = HashMap::new();
        prefix.insert(Word::empty(), NCSeries::one(target.clone(), truncation));
        let mut out = NCSeries::zero(target.clone(), truncation);
        // Canonical order visits every prefix before its extensions.
        for (w, c) in &self.terms {
            let img = image_of_word(w, &images, &mut prefix, truncation)?;
            for (v, d) in img.terms() {
                out.add_term(v.clone(), c.times(d));
            }
        }
        Ok(out)
    }

    /// Relabels onto another alphabet by letter name.
    pub fn rename_into(&self, target: Arc<Alphabet>, map: &[(&str, &str)]) -> Result<Self, NcError> {
        let mut index = Vec::with_capacity(self.alphabet.len());
        for l in self.alphabet.letters() {
            let name = map
                .iter()
                .find(|(from, _)| *from == l.name)
                .map(|(_, to)| *to)
                .unwrap_or(l.name.as_str());
            let j = target
                .index_of(name)
                .ok_or_else(|| NcError::UnknownLetter(name.to_string()))?;
            index.push(j as u16);
        }
        let mut out = NCSeries::zero(target, self.truncation);
        for (w, c) in &self.terms {
            out.add_term(Word(w.0.iter().map(|&i| index[i as usize]).collect()), c.clone());
        }
        Ok(out)
    }

    /// Total pairing `Σ_w n_w · coeff(w)` against an integer combination of words.
    pub fn pair(&self, combination: &BTreeMap<Word, i64>) -> R {
        let mut acc = R::zero();
        for (w, n) in combination {
            if let Some(c) = self.terms.get(w) {
                acc = acc.plus(&c.scaled(&Rational::from(*n)));
            }
        }
        acc
    }
}

fn image_of_word<R: Coefficient>(
    w: &Word,
    images: &[NCSeries<R>],
    prefix: &mut HashMap<Word, NCSeries<R>>,
    truncation: u32,
) -> Result<NCSeries<R>, NcError> {
    if let Some(hit) = prefix.get(w) {
        return Ok(hit.clone());
    }
    let head = Word(w.0[..w.len() - 1].to_vec());
    let last = w.0[w.len() - 1] as usize;
    let head_img = image_of_word(&head, images, prefix, truncation)?;
    let img = head_img.mul_truncated(&images[last], truncation)?;
    prefix.insert(w.clone(), img.clone());
    Ok(img)
}

/// `f(ad_T, ad_A)(x)`: each word `l1 l2 ... lk` of `f` acts as
/// `ad_{l1}(ad_{l2}(... ad_{lk}(x)))`, letters matched by name in `x`'s
/// alphabet. The result is truncated at `truncation`.
pub fn ad_action<R: Coefficient>(
    f: &NCSeries<R>,
    x: &NCSeries<R>,
    truncation: u32,
) -> Result<NCSeries<R>, NcError> {
    let target = x.alphabet().clone();
    let ops: Vec<NCSeries<R>> = f
        .alphabet()
        .letters()
        .iter()
        .map(|l| NCSeries::letter(target.clone(), &l.name, truncation))
        .collect::<Result<_, _>>()?;
    let x = x.truncated(truncation);
    let mut cache: HashMap<Word, NCSeries<R>> = HashMap::new();
    cache.insert(Word::empty(), x.clone());
    let mut out = NCSeries::zero(target, truncation);
    for (w, c) in f.terms() {
        let v = ad_word(w, &ops, &mut cache)?;
        out = out.plus(&v.times_scalar(c))?;
    }
    Ok(out)
}

fn ad_word<R: Coefficient>(
    w: &Word,
    ops: &[NCSeries<R>],
    cache: &mut HashMap<Word, NCSeries<R>>,
) -> Result<NCSeries<R>, NcError> {
    if let Some(hit) = cache.get(w) {
        return Ok(hit.clone());
    }
    // ad_{l1} applied to the action of the remaining suffix.
    let first = w.0[0] as usize;
    let rest = Word(w.0[1..].to_vec());
    let inner = ad_word(&rest, ops, cache)?;
    let v = ops[first].bracket(&inner)?;
    cache.insert(w.clone(), v.clone());
    Ok(v)
}

/// `coeff(w1 ш w2) - coeff(w1)·coeff(w2)`; zero for group-like series.
pub fn shuffle_defect<R: Coefficient>(g: &NCSeries<R>, w1: &Word, w2: &Word) -> R {
    let lhs = g.pair(&shuffle_product(w1, w2));
    lhs.minus(&g.coeff(w1).times(&g.coeff(w2)))
}

/// Exact group-like test over all word pairs with total weight ≤ `max_weight`.
pub fn is_group_like<R: Coefficient>(g: &NCSeries<R>, max_weight: u32) -> bool {
    if g.constant_term() != R::one() {
        return false;
    }
    let words = g.alphabet().words_up_to(max_weight);
    for w1 in &words {
        for w2 in &words {
            if g.alphabet().weight_of(w1) + g.alphabet().weight_of(w2) > max_weight {
                continue;
            }
            if !shuffle_defect(g, w1, w2).is_zero() {
                return false;
            }
        }
    }
    true
}

/// Exact primitivity (Lie series) test: zero constant term and
/// `coeff(u ш v) = 0` for all nonempty `u`, `v` up to `max_weight`.
pub fn is_primitive<R: Coefficient>(p: &NCSeries<R>, max_weight: u32) -> bool {
    if !p.constant_term().is_zero() {
        return false;
    }
    let words: Vec<Word> = p
        .alphabet()
        .words_up_to(max_weight)
        .into_iter()
        .filter(|w| !w.is_empty())
        .collect();
    for u in &words {
        for v in &words {
            if p.alphabet().weight_of(u) + p.alphabet().weight_of(v) > max_weight {
                continue;
            }
            if !p.pair(&shuffle_product(u, v)).is_zero() {
                return false;
            }
        }
    }
    true
}

/// Bernoulli numbers `B_0, ..., B_n` (with `B_1 = -1/2`) from
/// `Σ_{k=0}^{m} C(m+1, k) B_k = 0`.
pub fn bernoulli_numbers(n: usize) -> Vec<Rational> {
    let mut b: Vec<Rational> = Vec::with_capacity(n + 1);
    b.push(Rational::from(1));
    for m in 1..=n {
        let mut acc = Rational::new();
        for (k, bk) in b.iter().enumerate() {
            let binom = Integer::from(Integer::binomial_u(m as u32 + 1, k as u32));
            acc += Rational::from(bk * binom);
        }
        b.push(-acc / Rational::from(m + 1));
    }
    b
}

/// The series `T/(e^T - 1) = Σ B_n T^n / n!` in a single letter `T`.
pub fn bernoulli_series(truncation: u32) -> NCSeries<Rational> {
    let alphabet = Alphabet::from_names(&["T"]).expect("single letter");
    let b = bernoulli_numbers(truncation as usize);
    let mut fact = Integer::from(1);
    let mut s = NCSeries::zero(alphabet, truncation);
    for (n, bn) in b.into_iter().enumerate() {
        if n > 0 {
            fact *= n as u32;
        }
        s.add_term(Word(vec![0; n]), bn / Rational::from(fact.clone()));
    }
    s
}

/// JSON rendering of coefficients for series documents.
pub trait CoeffJson: Sized {
    fn to_json(&self) -> Value;
    fn from_json(v: &Value) -> Result<Self, String>;
}

impl CoeffJson for Rational {
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self, String> {
        let s = v.as_str().ok_or("rational coefficient must be a string")?;
        s.parse::<Rational>().map_err(|e| format!("bad rational `{s}`: {e}"))
    }
}

impl CoeffJson for BigComplex {
    fn to_json(&self) -> Value {
        let digits = ((self.prec() as f64) / std::f64::consts::LOG2_10).floor() as usize;
        let (re, im) = self.to_decimal_parts(digits.max(1));
        Value::Array(vec![Value::String(re), Value::String(im)])
    }
    fn from_json(v: &Value) -> Result<Self, String> {
        let arr = v.as_array().ok_or("complex coefficient must be [re, im]")?;
        if arr.len() != 2 {
            return Err("complex coefficient must be [re, im]".into());
        }
        let re = arr[0].as_str().ok_or("real part must be a string")?;
        let im = arr[1].as_str().ok_or("imaginary part must be a string")?;
        BigComplex::parse_parts(re, im).ok_or_else(|| format!("bad complex [{re}, {im}]"))
    }
}

/// Serialized form of a series: alphabet, truncation and one entry per word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesDoc {
    pub alphabet: Vec<Letter>,
    pub truncation: u32,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub word: Vec<String>,
    pub coeff: Value,
}

impl<R: Coefficient + CoeffJson> NCSeries<R> {
    pub fn to_doc(&self) -> SeriesDoc {
        SeriesDoc {
            alphabet: self.alphabet.letters().to_vec(),
            truncation: self.truncation,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| TermDoc { word: self.alphabet.names_of(w), coeff: c.to_json() })
                .collect(),
        }
    }

    pub fn from_doc(doc: &SeriesDoc) -> Result<Self, NcError> {
        let alphabet = Arc::new(Alphabet::new(doc.alphabet.clone())?);
        let mut s = NCSeries::zero(alphabet.clone(), doc.truncation);
        for t in &doc.terms {
            let w = alphabet.word(&t.word)?;
            let c = R::from_json(&t.coeff).map_err(NcError::Document)?;
            s.add_term(w, c);
        }
        Ok(s)
    }
}
