//! Numerical transport for KZ connections.
//!
//! Sections are propagated along straight segments by Taylor expansion at
//! regular points, each step at most half the distance to the nearest pole.
//! Near a pole `p` with residue `R` the section normalized at the tangent
//! vector `v` is `exp(R·log((z-p)/v))·h_p(z)`, with `h_p` the Frobenius
//! series; this handles tangential endpoints without any ε-cutoff.

use rug::{Float, Rational};

use super::{Endpoint, KzConnection, KzError, TangentialPoint};
use crate::ncalg::NCSeries;
use crate::numeric::{pi, working_bits, BigComplex};

type Series = NCSeries<BigComplex>;

const MAX_TERMS: usize = 20_000;
const MAX_STEPS: usize = 10_000;

struct Ctx<'a> {
    conn: &'a KzConnection,
    bits: u32,
    eps: f64,
    poles: Vec<BigComplex>,
    residues: Vec<Series>,
}

impl<'a> Ctx<'a> {
    fn new(conn: &'a KzConnection, digits: u32) -> Self {
        let bits = working_bits(digits);
        let poles = conn
            .poles()
            .iter()
            .map(|(p, _)| BigComplex::from_rational(p, bits))
            .collect();
        let residues = conn
            .poles()
            .iter()
            .map(|(_, r)| r.map_coeffs(|c| BigComplex::from_rational(c, bits)))
            .collect();
        let eps = 10f64.powi(-(digits as i32 + 10));
        Ctx { conn, bits, eps, poles, residues }
    }

    fn n(&self) -> u32 {
        self.conn.truncation()
    }

    fn one(&self) -> Series {
        NCSeries::one(self.conn.alphabet().clone(), self.n())
    }

    fn zero(&self) -> Series {
        NCSeries::zero(self.conn.alphabet().clone(), self.n())
    }

    fn c(&self, x: f64) -> BigComplex {
        BigComplex::from_float(Float::with_val(self.bits, x))
    }

    /// Distance from `z` to the nearest pole, skipping `skip`.
    fn radius(&self, z: &BigComplex, skip: Option<usize>) -> f64 {
        self.poles
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(_, p)| z.sub(p).abs_f64())
            .fold(f64::INFINITY, f64::min)
    }

    fn pole_index(&self, p: &Rational) -> Option<usize> {
        self.conn.poles().iter().position(|(q, _)| q == p)
    }

    /// `Y(z0 + t)` where `Y(z0) = start` and `dY = Y·Ω`.
    fn taylor_step(&self, start: &Series, z0: &BigComplex, t: &BigComplex) -> Result<Series, KzError> {
        // Ω(z0 + tθ)·t = Σ_i R_i Σ_k -(ρ_i)^(k+1) θ^k with ρ_i = -t/(z0 - p_i).
        let rho: Vec<BigComplex> = self
            .poles
            .iter()
            .map(|p| t.neg().div(&z0.sub(p)))
            .collect();
        let mut conv: Vec<Series> = vec![self.zero(); rho.len()];
        let mut term = start.clone();
        let mut sum = start.clone();
        let mut small = 0;
        for m in 1..MAX_TERMS {
            // conv_i(m) = Σ_{j<m} -ρ_i^(m-j) V_j
            for (ci, r) in conv.iter_mut().zip(&rho) {
                *ci = ci.plus(&term)?.times_scalar(r);
            }
            let mut next = self.zero();
            for (ci, res) in conv.iter().zip(&self.residues) {
                next = next.minus(&ci.mul(res)?)?;
            }
            term = next.scaled(&Rational::from((1, m as i64)));
            sum = sum.plus(&term)?;
            if norm(&term) < self.eps {
                small += 1;
                if small >= 3 && m as u32 > self.n() {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(KzError::Budget("Taylor series did not converge".into()))
    }

    /// `h_p(z)` for the pole with index `i`, evaluated at offset `u = z - p`.
    fn frobenius(&self, i: usize, u: &BigComplex) -> Result<Series, KzError> {
        let r = &self.residues[i];
        // ω(z) = Σ_k ω_k u^k with ω_k = -Σ_{j≠i} R_j μ_j^(k+1), μ_j = 1/(p_j - p).
        let mu_u: Vec<(usize, BigComplex)> = self
            .poles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(j, pj)| (j, u.div(&pj.sub(&self.poles[i]))))
            .collect();
        let mut conv: Vec<Series> = vec![self.zero(); mu_u.len()];
        let mut term = self.one();
        let mut sum = self.one();
        let mut small = 0;
        for m in 1..MAX_TERMS {
            let mut rhs = self.zero();
            for (ci, (j, mu)) in conv.iter_mut().zip(&mu_u) {
                *ci = ci.plus(&term)?.times_scalar(mu);
                rhs = rhs.minus(&ci.mul(&self.residues[*j])?)?;
            }
            term = solve_shifted_numeric(&rhs, r, m)?;
            sum = sum.plus(&term)?;
            if norm(&term) < self.eps {
                small += 1;
                if small >= 3 && m as u32 > self.n() {
                    return Ok(sum);
                }
            } else {
                small = 0;
            }
        }
        Err(KzError::Budget("Frobenius series did not converge".into()))
    }

    /// The local section normalized at the tangent vector `v` of pole `i`,
    /// at the point `p + u`, with `log(u/v)` supplied by the caller.
    fn local_section(&self, i: usize, u: &BigComplex, log_uv: &BigComplex) -> Result<Series, KzError> {
        let e = self.residues[i].times_scalar(log_uv).exp()?;
        Ok(e.mul(&self.frobenius(i, u)?)?)
    }

    /// Propagates `value` (the section at `from`) along the segment to `to`.
    fn walk(&self, mut value: Series, from: &BigComplex, to: &BigComplex) -> Result<Series, KzError> {
        let mut z = from.clone();
        for _ in 0..MAX_STEPS {
            let remaining = to.sub(&z);
            let dist = remaining.abs_f64();
            if dist == 0.0 {
                return Ok(value);
            }
            let max_step = self.radius(&z, None) / 2.0;
            let t = if dist <= max_step {
                remaining
            } else {
                remaining.mul(&self.c(max_step / dist))
            };
            value = self.taylor_step(&value, &z, &t)?;
            z = if dist <= max_step { to.clone() } else { z.add(&t) };
        }
        Err(KzError::Budget("too many integration steps".into()))
    }

    /// Start point and section for a transport leaving `ep` towards `target`.
    fn depart(&self, ep: &Endpoint, target: &BigComplex) -> Result<(BigComplex, Series), KzError> {
        match ep {
            Endpoint::Point(p) => Ok((BigComplex::from_rational(p, self.bits), self.one())),
            Endpoint::Tangential(tp) => {
                let (i, u, log_uv) = self.tangent_offset(tp, target)?;
                let z = self.poles[i].add(&u);
                Ok((z, self.local_section(i, &u, &log_uv)?))
            }
        }
    }

    /// Offset of the point at half the local radius on the segment towards
    /// `target`, with `log(u/v)` on the principal branch.
    fn tangent_offset(
        &self,
        tp: &TangentialPoint,
        target: &BigComplex,
    ) -> Result<(usize, BigComplex, BigComplex), KzError> {
        let i = self
            .pole_index(&tp.base)
            .ok_or_else(|| KzError::InvalidEndpoint(format!("{} is not a singular point", tp.base)))?;
        let p = &self.poles[i];
        let d = target.sub(p);
        let r = self.radius(p, Some(i)).min(d.abs_f64());
        let u = d.mul(&self.c(r / 2.0 / d.abs_f64()));
        let v = BigComplex::from_rational(&tp.direction, self.bits);
        Ok((i, u.clone(), u.div(&v).ln()))
    }
}

fn norm(s: &Series) -> f64 {
    s.terms().map(|(_, c)| c.abs_f64()).fold(0.0, f64::max)
}

fn solve_shifted_numeric(rhs: &Series, r: &Series, m: usize) -> Result<Series, KzError> {
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

fn check_segment(conn: &KzConnection, a: &Rational, b: &Rational) -> Result<(), KzError> {
    if a == b {
        return Ok(());
    }
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    for (p, _) in conn.poles() {
        if p > lo && p < hi {
            return Err(KzError::PathThroughSingularity(p.to_string()));
        }
    }
    Ok(())
}

/// Numerical transport `T(from → to)` along the real segment joining the
/// base points, as a series over complex numbers accurate to `10^-digits`.
///
/// `T` is the constant with `f_from = T·f_to`, where `f_e` is the section
/// normalized at `e`; transports compose as `T(a→c) = T(a→b)·T(b→c)`.
pub fn numeric_transport_oracle(
    conn: &KzConnection,
    from: &Endpoint,
    to: &Endpoint,
    digits: u32,
) -> Result<NCSeries<BigComplex>, KzError> {
    let ctx = Ctx::new(conn, digits);
    for ep in [from, to] {
        if let Endpoint::Point(p) = ep {
            if ctx.pole_index(p).is_some() {
                return Err(KzError::PathThroughSingularity(p.to_string()));
            }
        }
    }
    check_segment(conn, from.base(), to.base())?;
    if from.base() == to.base() {
        return match (from, to) {
            (Endpoint::Point(_), Endpoint::Point(_)) => Ok(ctx.one()),
            _ => Err(KzError::InvalidEndpoint(
                "tangential endpoints at one point are related by rotations".into(),
            )),
        };
    }
    let a = BigComplex::from_rational(from.base(), ctx.bits);
    let b = BigComplex::from_rational(to.base(), ctx.bits);
    let (start, section) = ctx.depart(from, &b)?;
    match to {
        Endpoint::Point(_) => ctx.walk(section, &start, &b),
        Endpoint::Tangential(tp) => {
            let (i, u, log_uv) = ctx.tangent_offset(tp, &a)?;
            let end = ctx.poles[i].add(&u);
            let value = ctx.walk(section, &start, &end)?;
            let local = ctx.local_section(i, &u, &log_uv)?;
            Ok(value.mul(&local.inverse()?)?)
        }
    }
}

/// Numerical transport from the tangent vector `at` to `at` rotated by
/// `k·π` (counterclockwise for `k > 0`) along a small circular arc.
pub fn numeric_rotation_oracle(
    conn: &KzConnection,
    at: &TangentialPoint,
    k: i32,
    digits: u32,
) -> Result<NCSeries<BigComplex>, KzError> {
    let ctx = Ctx::new(conn, digits);
    if k == 0 {
        return Ok(ctx.one());
    }
    let i = ctx
        .pole_index(&at.base)
        .ok_or_else(|| KzError::InvalidEndpoint(format!("{} is not a singular point", at.base)))?;
    let p = ctx.poles[i].clone();
    let rho = ctx.radius(&p, Some(i)) / 2.0;
    let v = BigComplex::from_rational(&at.direction, ctx.bits);
    let unit = v.div(&BigComplex::from_float(v.abs()));
    let radius = ctx.c(rho);
    // Points on the arc p + ρ·(v/|v|)·e^(iφ); log(u/v) = log(ρ/|v|) + iφ.
    let arc = |phi: &Float| -> (BigComplex, BigComplex) {
        let rot = BigComplex::from_parts(Float::with_val(ctx.bits, 0), phi.clone()).exp();
        let u = unit.mul(&rot).mul(&radius);
        let log_uv = BigComplex::from_parts(
            Float::with_val(ctx.bits, rho / v.abs_f64()).ln(),
            phi.clone(),
        );
        (u, log_uv)
    };
    let zero_phi = Float::with_val(ctx.bits, 0);
    let (u0, l0) = arc(&zero_phi);
    let mut value = ctx.local_section(i, &u0, &l0)?;
    let total = Float::with_val(ctx.bits, pi(ctx.bits) * k);
    let steps = 8 * k.unsigned_abs() as usize;
    let mut prev = p.add(&u0);
    for s in 1..=steps {
        let phi = Float::with_val(ctx.bits, &total * s as u32) / steps as u32;
        let (u, _) = arc(&phi);
        let next = p.add(&u);
        value = ctx.walk(value, &prev, &next)?;
        prev = next;
    }
    // The rotated tangent vector is v·e^(ikπ) = ±v; normalize there.
    let end_dir = if k % 2 == 0 { at.direction.clone() } else { Rational::from(-&at.direction) };
    let end_v = BigComplex::from_rational(&end_dir, ctx.bits);
    let u_end = prev.sub(&p);
    let log_end = u_end.div(&end_v).ln();
    let local = ctx.local_section(i, &u_end, &log_end)?;
    Ok(value.mul(&local.inverse()?)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::tolerance;

    #[test]
    fn log_two_at_one_half() {
        let conn = KzConnection::standard(1);
        let from = Endpoint::Tangential(TangentialPoint::new(0, 1).unwrap());
        let to = Endpoint::Point(Rational::from((1, 2)));
        let t = numeric_transport_oracle(&conn, &from, &to, 30).unwrap();
        let c = t.coeff_of(&["x1"]).unwrap();
        let bits = working_bits(30);
        let ln2 = Float::with_val(bits, rug::float::Constant::Log2);
        assert!(Float::with_val(bits, c.real() - &ln2).abs() < tolerance(28, bits));
        assert!(c.imag().clone().abs() < tolerance(28, bits));
        // The x0 coefficient is log(1/2).
        let c0 = t.coeff_of(&["x0"]).unwrap();
        assert!(Float::with_val(bits, c0.real() + &ln2).abs() < tolerance(28, bits));
    }

    #[test]
    fn reversal_is_identity() {
        let conn = KzConnection::standard(3);
        let a = Endpoint::Point(Rational::from((1, 3)));
        let b = Endpoint::Point(Rational::from((3, 4)));
        let ab = numeric_transport_oracle(&conn, &a, &b, 20).unwrap();
        let ba = numeric_transport_oracle(&conn, &b, &a, 20).unwrap();
        let prod = ab.mul(&ba).unwrap();
        let one = NCSeries::one(conn.alphabet().clone(), 3);
        let diff = prod.minus(&one).unwrap();
        assert!(norm(&diff) < 1e-20);
    }

    #[test]
    fn associator_matches_transport() {
        let n = 4;
        let conn = KzConnection::standard(n);
        let from = Endpoint::Tangential(TangentialPoint::new(0, 1).unwrap());
        let to = Endpoint::Tangential(TangentialPoint::new(1, -1).unwrap());
        let t = numeric_transport_oracle(&conn, &from, &to, 30).unwrap();
        let phi = crate::kz::drinfeld_associator(n);
        let ctx = crate::periodring::EvalContext::new(30);
        for w in conn.alphabet().words_up_to(n) {
            let sym = phi.coeff(&w).numeric_eval(&ctx).unwrap();
            let num = t.coeff(&w);
            assert!(sym.sub(&num).abs_f64() < 1e-20, "{:?}: {sym} vs {num}", w);
        }
    }

    #[test]
    fn rotation_matches_exponential() {
        let conn = KzConnection::standard(3);
        let at = TangentialPoint::new(0, 1).unwrap();
        let x0 = NCSeries::<crate::periodring::PeriodElem>::letter(conn.alphabet().clone(), "x0", 3).unwrap();
        let ctx = crate::periodring::EvalContext::new(25);
        for k in [-1, 1, 2] {
            let t = numeric_rotation_oracle(&conn, &at, k, 25).unwrap();
            let sym = crate::kz::rotation_monodromy(&x0, k, 3).unwrap();
            for w in conn.alphabet().words_up_to(3) {
                let a = sym.coeff(&w).numeric_eval(&ctx).unwrap();
                assert!(a.sub(&t.coeff(&w)).abs_f64() < 1e-20, "k={k} {:?}", w);
            }
        }
    }

    #[test]
    fn rejects_paths_through_poles() {
        let conn = KzConnection::standard(2);
        let a = Endpoint::Point(Rational::from((1, 2)));
        let b = Endpoint::Point(Rational::from(2));
        assert!(matches!(
            numeric_transport_oracle(&conn, &a, &b, 10),
            Err(KzError::PathThroughSingularity(_))
        ));
    }
}
