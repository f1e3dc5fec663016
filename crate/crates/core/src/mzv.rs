//! Multiple polylogarithms, multiple zeta values and shuffle regularization.
//!
//! Words live over the alphabet `{x0, x1}` with `x0 ↔ dz/z` and
//! `x1 ↔ dz/(1-z)`. The first letter of a word is the innermost integration,
//! nearest the base point, so the composition `(k1, ..., kl)` corresponds to
//! `x1 x0^(k1-1) ... x1 x0^(kl-1)` and
//! `Li_{k1..kl}(z) = Σ_{0<n1<...<nl} z^nl / (n1^k1 ... nl^kl)`.
//!
//! Numeric values are computed by splitting the integration path at `1/2`:
//! with `σ` exchanging `x0` and `x1`,
//!
//! ```text
//! ζ(w) = Σ_{w = uv} Li_u(1/2) · Li_{σ(reverse v)}(1/2)
//! ```
//!
//! and every `Li(1/2)` is a nested sum converging like `2^-n`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rug::ops::Pow;
use rug::{Float, Rational};

use crate::ncalg::{Alphabet, Coefficient, Word};
use crate::numeric::{bits_for_digits, working_bits};
use crate::periodring::{Composition, PeriodElem, PeriodError};

/// Largest weight accepted by [`mzv_numeric`].
pub const MAX_WEIGHT: u32 = 12;

pub const X0: u16 = 0;
pub const X1: u16 = 1;

/// The alphabet `{x0, x1}` shared by all KZ words.
pub fn kz_alphabet() -> Arc<Alphabet> {
    static ALPHABET: OnceLock<Arc<Alphabet>> = OnceLock::new();
    ALPHABET
        .get_or_init(|| Alphabet::from_names(&["x0", "x1"]).expect("valid alphabet"))
        .clone()
}

pub fn word_of_composition(k: &Composition) -> Word {
    let mut v = Vec::with_capacity(k.weight() as usize);
    for &part in &k.0 {
        v.push(X1);
        v.resize(v.len() + part as usize - 1, X0);
    }
    Word(v)
}

/// Inverse of [`word_of_composition`]; `None` unless the word starts with `x1`.
pub fn composition_of_word(w: &Word) -> Option<Composition> {
    if w.0.first() != Some(&X1) {
        return None;
    }
    let mut parts = Vec::new();
    for &l in &w.0 {
        if l == X1 {
            parts.push(1);
        } else {
            *parts.last_mut()? += 1;
        }
    }
    Some(Composition(parts))
}

/// Coefficients `c_0, ..., c_M` of `Li_k(z) = Σ c_n z^n`, truncated at `z^M`.
pub fn polylog_series(k: &Composition, order: usize) -> Vec<Rational> {
    let mut current: Vec<Rational> = vec![Rational::from(1); order + 1];
    current[0] = Rational::new();
    // current[n] holds the depth-j nested sum with top index exactly n.
    for (j, &kj) in k.0.iter().enumerate() {
        let mut next = vec![Rational::new(); order + 1];
        let mut prefix = Rational::new();
        for n in 1..=order {
            let inner = if j == 0 { Rational::from(1) } else { prefix.clone() };
            let denom = rug::Integer::from(n).pow(kj);
            next[n] = inner / Rational::from(denom);
            if j > 0 {
                prefix += &current[n];
            }
        }
        current = next;
    }
    current
}

/// `Li_k(1/2)` for any composition, computed with `bits` of precision.
fn polylog_half(k: &[u32], bits: u32) -> Float {
    if k.is_empty() {
        return Float::with_val(bits, 1);
    }
    let w: u32 = k.iter().sum();
    let terms = bits as usize + 4 * (w as usize + k.len()) + 16;
    let mut current: Vec<Float> = Vec::new();
    for (j, &kj) in k.iter().enumerate() {
        let mut next = Vec::with_capacity(terms + 1);
        next.push(Float::new(bits));
        let mut prefix = Float::new(bits);
        let mut half_pow = Float::with_val(bits, 1);
        for n in 1..=terms {
            let mut t = if j == 0 {
                Float::with_val(bits, 1)
            } else {
                let t = prefix.clone();
                prefix += &current[n];
                t
            };
            t /= Float::with_val(bits, n).pow(kj);
            if j + 1 == k.len() {
                half_pow /= 2;
                t *= &half_pow;
            }
            next.push(t);
        }
        current = next;
    }
    current.iter().fold(Float::new(bits), |acc, x| acc + x)
}

fn mzv_cache() -> &'static Mutex<HashMap<(Vec<u32>, u32), Float>> {
    static CACHE: OnceLock<Mutex<HashMap<(Vec<u32>, u32), Float>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// `ζ(k)` with absolute error below `2^-(bits-8)`, memoized.
pub fn mzv_float(k: &Composition, bits: u32) -> Result<Float, PeriodError> {
    if !k.is_admissible() {
        return Err(PeriodError::NonAdmissible(k.to_string()));
    }
    if k.weight() > MAX_WEIGHT {
        return Err(PeriodError::Numeric(format!(
            "weight {} exceeds the supported maximum {MAX_WEIGHT}",
            k.weight()
        )));
    }
    let key = (k.0.clone(), bits);
    if let Some(v) = mzv_cache().lock().expect("mzv cache").get(&key) {
        return Ok(v.clone());
    }
    let inner = bits + 32;
    let w = word_of_composition(k);
    let mut acc = Float::new(inner);
    for cut in 0..=w.len() {
        let u = Word(w.0[..cut].to_vec());
        let v = Word(w.0[cut..].iter().rev().map(|&l| 1 - l).collect());
        let lu = polylog_half(&composition_of_word(&u).map(|c| c.0).unwrap_or_default(), inner);
        let lv = polylog_half(&composition_of_word(&v).map(|c| c.0).unwrap_or_default(), inner);
        acc += lu * lv;
    }
    let value = Float::with_val(bits, &acc);
    mzv_cache().lock().expect("mzv cache").insert(key, value.clone());
    Ok(value)
}

/// `ζ(k)` accurate to `10^-digits`.
pub fn mzv_numeric(k: &Composition, digits: u32) -> Result<Float, PeriodError> {
    let v = mzv_float(k, working_bits(digits))?;
    Ok(Float::with_val(bits_for_digits(digits).max(64), &v))
}

fn reg_cache() -> &'static Mutex<HashMap<Vec<u16>, PeriodElem>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<u16>, PeriodElem>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shuffle-regularized value of a word with `reg(x0) = reg(x1) = 0`.
pub fn shuffle_regularize(w: &Word) -> PeriodElem {
    if let Some(v) = reg_cache().lock().expect("reg cache").get(&w.0) {
        return v.clone();
    }
    let v = regularize_uncached(&w.0);
    reg_cache().lock().expect("reg cache").insert(w.0.clone(), v.clone());
    v
}

fn regularize_uncached(w: &[u16]) -> PeriodElem {
    if w.is_empty() {
        return PeriodElem::one();
    }
    if w.iter().all(|&l| l == w[0]) {
        return PeriodElem::zero();
    }
    let leading = w.iter().take_while(|&&l| l == X0).count();
    if leading > 0 {
        // x0 ш x0^(r-1)u = r x0^r u + Σ_j x0^(r-1) u_{≤j} x0 u_{>j}.
        let r = leading;
        let u = &w[r..];
        let mut acc = PeriodElem::zero();
        for j in 1..=u.len() {
            let mut v = vec![X0; r - 1];
            v.extend_from_slice(&u[..j]);
            v.push(X0);
            v.extend_from_slice(&u[j..]);
            acc = acc.plus(&shuffle_regularize(&Word(v)));
        }
        return acc.scaled(&Rational::from((-1, r as i64)));
    }
    let trailing = w.iter().rev().take_while(|&&l| l == X1).count();
    if trailing > 0 {
        // x1 ш v x1^(b-1) = b v x1^b + Σ_j v_{<j} x1 v_{≥j} x1^(b-1).
        let b = trailing;
        let v = &w[..w.len() - b];
        let mut acc = PeriodElem::zero();
        for j in 0..v.len() {
            let mut z = v[..j].to_vec();
            z.push(X1);
            z.extend_from_slice(&v[j..]);
            z.resize(z.len() + b - 1, X1);
            acc = acc.plus(&shuffle_regularize(&Word(z)));
        }
        return acc.scaled(&Rational::from((-1, b as i64)));
    }
    let k = composition_of_word(&Word(w.to_vec())).expect("starts with x1");
    PeriodElem::zeta(&k).expect("ends with x0")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ncalg::shuffle_product;
    use crate::numeric::{pi, tolerance};
    use crate::periodring::EvalContext;
    use proptest::prelude::*;

    fn c(parts: &[u32]) -> Composition {
        Composition(parts.to_vec())
    }

    #[test]
    fn polylog_examples() {
        let li1 = polylog_series(&c(&[1]), 4);
        let expected: Vec<Rational> =
            vec![0.into(), 1.into(), (1, 2).into(), (1, 3).into(), (1, 4).into()];
        assert_eq!(li1, expected);
        assert_eq!(polylog_series(&c(&[2]), 5)[3], Rational::from((1, 9)));
        let li12 = polylog_series(&c(&[1, 2]), 4);
        assert_eq!(li12[1], 0);
        assert_eq!(li12[2], Rational::from((1, 4)));
        // n1 in {1,2}, n2 = 3: (1 + 1/2) / 9.
        assert_eq!(li12[3], Rational::from((1, 6)));
    }

    #[test]
    fn dictionary_round_trip() {
        let k = c(&[1, 3, 2]);
        let w = word_of_composition(&k);
        assert_eq!(w.0, vec![X1, X1, X0, X0, X1, X0]);
        assert_eq!(composition_of_word(&w).unwrap(), k);
        assert!(composition_of_word(&Word(vec![X0, X1])).is_none());
    }

    #[test]
    fn known_values() {
        let bits = working_bits(40);
        let z2 = mzv_numeric(&c(&[2]), 40).unwrap();
        let pi2 = Float::with_val(bits, pi(bits).square_ref()) / 6;
        assert!(Float::with_val(bits, &z2 - &pi2).abs() < tolerance(40, bits));

        let z12 = mzv_float(&c(&[1, 2]), bits).unwrap();
        let z3 = mzv_float(&c(&[3]), bits).unwrap();
        assert!(Float::with_val(bits, &z12 - &z3).abs() < tolerance(45, bits));

        let z22 = mzv_float(&c(&[2, 2]), bits).unwrap();
        let pi4 = Float::with_val(bits, pi(bits).pow(4u32)) / 120;
        assert!(Float::with_val(bits, &z22 - &pi4).abs() < tolerance(45, bits));

        let z4 = mzv_float(&c(&[4]), bits).unwrap();
        let z2 = mzv_float(&c(&[2]), bits).unwrap();
        let stuffle: Float = Float::with_val(bits, z2.square_ref()) - z22 * 2u32 - z4;
        assert!(stuffle.abs() < tolerance(30, bits));

        assert!(matches!(mzv_numeric(&c(&[2, 1]), 20), Err(PeriodError::NonAdmissible(_))));
    }

    #[test]
    fn regularization_examples() {
        let w = word_of_composition(&c(&[2]));
        assert_eq!(shuffle_regularize(&w), PeriodElem::zeta(&c(&[2])).unwrap());
        assert_eq!(shuffle_regularize(&Word(vec![X1])), PeriodElem::zero());
        assert_eq!(shuffle_regularize(&Word(vec![X1, X1])), PeriodElem::zero());
        assert_eq!(shuffle_regularize(&Word(vec![X0])), PeriodElem::zero());
        // x0 ш x1x0 = 2 x0x1x0... gives reg(x0x1) = -ζ(2).
        assert_eq!(
            shuffle_regularize(&Word(vec![X0, X1])),
            PeriodElem::zeta(&c(&[2])).unwrap().negated()
        );
    }

    #[test]
    fn series_limit_at_one() {
        // Li_k(1-δ) increases to ζ(k); the gap is bounded by the missing
        // mass Σ_{n≤M} c_n (1 - z^n) plus the series tail at 1.
        let bits = 128;
        let m = 2000usize;
        for k in [c(&[2]), c(&[3]), c(&[1, 2])] {
            let coeffs = polylog_series(&k, m);
            let z = Float::with_val(bits, 1) - Float::with_val(bits, 1e-3);
            let mut zn = Float::with_val(bits, 1);
            let mut partial = Float::new(bits);
            let mut missing = Float::new(bits);
            for cn in coeffs.iter().skip(1) {
                zn *= &z;
                let cf = Float::with_val(bits, cn);
                partial += Float::with_val(bits, &cf * &zn);
                missing += cf * (Float::with_val(bits, 1) - &zn);
            }
            let kl = *k.0.last().unwrap() as f64;
            let harmonic = (m as f64).ln() + 2.0;
            let tail = harmonic.powi(k.depth() as i32 - 1) / ((kl - 1.0) * (m as f64).powf(kl - 1.0));
            let zeta = mzv_float(&k, bits).unwrap();
            let gap = Float::with_val(bits, &zeta - &partial);
            assert!(gap > 0);
            assert!(gap.to_f64() <= missing.to_f64() + tail, "{k}");
            assert!(gap.to_f64() >= missing.to_f64() - 1e-12, "{k}");
        }
    }

    fn arb_word(max: usize) -> impl Strategy<Value = Word> {
        proptest::collection::vec(0u16..2, 0..=max).prop_map(Word)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn regularization_is_a_shuffle_homomorphism(w1 in arb_word(3), w2 in arb_word(3)) {
            prop_assume!(w1.len() + w2.len() <= 5);
            let ctx = EvalContext::new(30);
            let bits = working_bits(30);
            let lhs = shuffle_regularize(&w1).numeric_eval(&ctx).unwrap()
                .mul(&shuffle_regularize(&w2).numeric_eval(&ctx).unwrap());
            let mut sum = PeriodElem::zero();
            for (w, n) in shuffle_product(&w1, &w2) {
                sum = sum.plus(&shuffle_regularize(&w).scaled(&Rational::from(n)));
            }
            let rhs = sum.numeric_eval(&ctx).unwrap();
            prop_assert!(lhs.sub(&rhs).abs() < tolerance(25, bits));
        }
    }
}
