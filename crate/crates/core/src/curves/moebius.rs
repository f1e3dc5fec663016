//! Gluing maps of the Schottky-type uniformization over a specialized graph.

use std::sync::Arc;

use rug::Rational;

use super::graph::{Branch, Modulus, StableGraph};
use super::multiseries::MultiSeries;
use super::CurveError;

pub type Series = MultiSeries<Rational>;

/// `z ↦ (a z + b)/(c z + d)` with entries in truncated series.
#[derive(Clone, Debug, PartialEq)]
pub struct MoebiusMap {
    pub a: Series,
    pub b: Series,
    pub c: Series,
    pub d: Series,
}

impl MoebiusMap {
    pub fn identity(vars: Arc<Vec<String>>, order: i32) -> Self {
        let one = Series::constant(vars.clone(), order, Rational::from(1));
        let zero = Series::zero(vars, order);
        MoebiusMap { a: one.clone(), b: zero.clone(), c: zero, d: one }
    }

    /// Matrix product `self · other`, i.e. `self ∘ other` as maps.
    pub fn compose(&self, other: &Self) -> Self {
        MoebiusMap {
            a: self.a.mul(&other.a).add(&self.b.mul(&other.c)),
            b: self.a.mul(&other.b).add(&self.b.mul(&other.d)),
            c: self.c.mul(&other.a).add(&self.d.mul(&other.c)),
            d: self.c.mul(&other.b).add(&self.d.mul(&other.d)),
        }
    }

    pub fn det(&self) -> Series {
        self.a.mul(&self.d).sub(&self.b.mul(&self.c))
    }

    /// `m(z)`; the denominator must be invertible.
    pub fn apply(&self, z: &Series) -> Result<Series, CurveError> {
        let num = self.a.mul(z).add(&self.b);
        let den = self.c.mul(z).add(&self.d);
        let inv = den.inverse().ok_or_else(|| CurveError::Degenerate("denominator is not invertible".into()))?;
        Ok(num.mul(&inv))
    }

    pub fn truncated(&self, order: i32) -> Self {
        MoebiusMap {
            a: self.a.truncated(order),
            b: self.b.truncated(order),
            c: self.c.truncated(order),
            d: self.d.truncated(order),
        }
    }
}

/// Variables `y_e` for every edge, sorted.
pub fn deformation_variables(g: &StableGraph) -> Arc<Vec<String>> {
    super::multiseries::variables(&g.edges().map(|(e, _)| format!("y_{e}")).collect::<Vec<_>>())
}

fn column(x: &Modulus) -> (Rational, Rational) {
    match x {
        Modulus::Finite(q) => (q.clone(), Rational::from(1)),
        Modulus::Infinity => (Rational::from(1), Rational::from(0)),
    }
}

/// `φ_h = F·diag(1, y_h)·F⁻¹` with frame columns `x_h`, `x_{-h}`; so `x_h`
/// is attracting with multiplier `y_h` and `φ_h` is the constant `x_h` at
/// `y_h = 0`.
pub fn phi_matrix(g: &StableGraph, h: &Branch, order: i32) -> Result<MoebiusMap, CurveError> {
    let name = h.edge_name().ok_or_else(|| CurveError::InvalidMove(format!("{h} is a tail")))?;
    let (p, r) = column(g.modulus(h)?);
    let (q, s) = column(g.modulus(&h.opposite().unwrap())?);
    let det = Rational::from(&p * &s) - Rational::from(&q * &r);
    if det == 0 {
        return Err(CurveError::Degenerate(format!("x_{h} = x_{}", h.opposite().unwrap())));
    }
    let vars = deformation_variables(g);
    let y = Series::var(vars.clone(), &format!("y_{name}"), order).unwrap();
    let k = |c: Rational| Series::constant(vars.clone(), order, c / &det);
    // F = [[p, q], [r, s]], adj F = [[s, -q], [-r, p]].
    let entry = |u1: &Rational, u2: &Rational, v1: &Rational, v2: &Rational| {
        // u1·v1 + y·u2·v2 for the rows/columns picked below.
        k(Rational::from(u1 * v1)).add(&y.mul(&k(Rational::from(u2 * v2))))
    };
    let (mq, mr) = (Rational::from(-&q), Rational::from(-&r));
    Ok(MoebiusMap {
        a: entry(&p, &q, &s, &mr),
        b: entry(&p, &q, &mq, &p),
        c: entry(&r, &s, &s, &mr),
        d: entry(&r, &s, &mq, &p),
    })
}

/// `φ_{h(l)} ⋯ φ_{h(1)}` for a reduced path.
pub fn compose_path(g: &StableGraph, path: &[Branch], order: i32) -> Result<MoebiusMap, CurveError> {
    if path.is_empty() {
        return Err(CurveError::InvalidMove("empty path".into()));
    }
    for (i, w) in path.windows(2).enumerate() {
        if w[0].opposite().as_ref() == Some(&w[1]) {
            return Err(CurveError::NotReduced(i + 1));
        }
        if g.terminal(&w[0])? != g.terminal(&w[1].opposite().ok_or_else(|| CurveError::InvalidMove(format!("{} is a tail", w[1])))?)? {
            return Err(CurveError::Discontinuous(i + 1));
        }
    }
    let mut m = MoebiusMap::identity(deformation_variables(g), order);
    for h in path {
        m = phi_matrix(g, h, order)?.compose(&m);
    }
    Ok(m)
}

/// Attracting and repelling fixed points and the multiplier of a gluing map.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedPoints {
    pub attracting: Series,
    pub repelling: Series,
    pub multiplier: Series,
}

fn newton_root(m: &MoebiusMap, start: Rational, order: i32) -> Result<Series, CurveError> {
    // c z² + (d - a) z - b = 0.
    let vars = m.a.vars().clone();
    let lin = m.d.sub(&m.a);
    let mut z = Series::constant(vars, order, start);
    // Quadratic convergence: 64 steps is far beyond any usable order.
    for _ in 0..64 {
        let p = m.c.mul(&z).mul(&z).add(&lin.mul(&z)).sub(&m.b).truncated(order);
        if p.num_terms() == 0 {
            return Ok(z);
        }
        let dp = m.c.mul(&z).scale(&Rational::from(2)).add(&lin);
        let inv = dp
            .inverse_unit()
            .ok_or_else(|| CurveError::LiftingFailed("derivative of the fixed-point equation vanishes".into()))?;
        z = z.sub(&p.mul(&inv)).truncated(order);
    }
    Err(CurveError::LiftingFailed("Newton iteration did not converge".into()))
}

/// Fixed points of `m = compose_path(...)`, lifted from the `y = 0` roots
/// `x_{h(l)}` and `x_{-h(1)}`, and the multiplier
/// `β = (c α' + d)/(c α + d)`.
pub fn fixed_points_multiplier(
    g: &StableGraph,
    path: &[Branch],
    order: i32,
) -> Result<FixedPoints, CurveError> {
    let m = compose_path(g, path, order)?;
    let finite = |h: &Branch| match g.modulus(h)? {
        Modulus::Finite(q) => Ok(q.clone()),
        Modulus::Infinity => Err(CurveError::Degenerate(format!("x_{h} is infinite"))),
    };
    let x_att = finite(path.last().unwrap())?;
    let x_rep = finite(&path[0].opposite().unwrap())?;
    if x_att == x_rep {
        return Err(CurveError::Degenerate("fixed points coincide at y = 0".into()));
    }
    let attracting = newton_root(&m, x_att, order)?;
    let repelling = newton_root(&m, x_rep, order)?;
    let lam_att = m.c.mul(&attracting).add(&m.d);
    let lam_rep = m.c.mul(&repelling).add(&m.d);
    let inv = lam_att
        .inverse_unit()
        .ok_or_else(|| CurveError::Degenerate("eigenvalue at the attracting point vanishes".into()))?;
    Ok(FixedPoints { attracting, repelling, multiplier: lam_rep.mul(&inv) })
}

/// Exponent vector of `Π y_{h(i)}` over the deformation variables.
pub fn path_monomial(g: &StableGraph, path: &[Branch]) -> Vec<i32> {
    let vars = deformation_variables(g);
    let mut e = vec![0; vars.len()];
    for h in path {
        let v = format!("y_{}", h.edge_name().unwrap_or_default());
        if let Some(i) = vars.iter().position(|x| *x == v) {
            e[i] += 1;
        }
    }
    e
}

/// Checks the fixed-point identity
/// `(m(z) - α)/(z - α) = β (m(z) - α')/(z - α')` at a rational `z`, and
/// that `β / Π y_{h(i)}` is a unit.
pub fn verify_fixed_points(
    g: &StableGraph,
    path: &[Branch],
    fp: &FixedPoints,
    z: &Rational,
    order: i32,
) -> Result<(), CurveError> {
    let m = compose_path(g, path, order)?;
    let vars = m.a.vars().clone();
    let zs = Series::constant(vars, order, z.clone());
    let mz = m.apply(&zs)?;
    let div = |num: Series, den: Series| -> Result<Series, CurveError> {
        Ok(num.mul(&den.inverse().ok_or_else(|| CurveError::Degenerate("z is a fixed point at y = 0".into()))?))
    };
    let lhs = div(mz.sub(&fp.attracting), zs.sub(&fp.attracting))?;
    let rhs = div(mz.sub(&fp.repelling), zs.sub(&fp.repelling))?.mul(&fp.multiplier);
    if lhs != rhs {
        return Err(CurveError::Verification("fixed-point identity fails".into()));
    }
    let unit = fp.multiplier.div_monomial(&path_monomial(g, path));
    if unit.valuation() != Some(0) || unit.constant_term() == 0 {
        return Err(CurveError::Verification("multiplier is not y-monomial times a unit".into()));
    }
    Ok(())
}

/// The node data at `y = 0`: each `φ_{±e}` collapses to the constant `x_{±e}`.
pub fn closed_fiber_nodes(g: &StableGraph) -> Result<Vec<(String, Modulus, Modulus)>, CurveError> {
    let mut out = Vec::new();
    for (e, _) in g.edges() {
        let mut pts = Vec::new();
        for h in [Branch::edge(e), Branch::reversed_edge(e)] {
            let phi = phi_matrix(g, &h, 1)?;
            let var = format!("y_{e}");
            let at = |s: &Series| s.at_zero(&var).unwrap().constant_term();
            let (a, b, c, d) = (at(&phi.a), at(&phi.b), at(&phi.c), at(&phi.d));
            if Rational::from(&a * &d) != Rational::from(&b * &c) {
                return Err(CurveError::Verification(format!("φ_{h} is not constant at y = 0")));
            }
            // Image of the constant map: column (a, c) or (b, d).
            let (u1, u2) = if a != 0 || c != 0 { (a, c) } else { (b, d) };
            let x = if u2 == 0 { Modulus::Infinity } else { Modulus::Finite(u1 / u2) };
            if &x != g.modulus(&h)? {
                return Err(CurveError::Verification(format!("φ_{h} does not collapse to x_{h}")));
            }
            pts.push(x);
        }
        let second = pts.pop().unwrap();
        out.push((e.clone(), pts.pop().unwrap(), second));
    }
    Ok(out)
}

/// Report of the contraction-parameter check after an expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionReport {
    pub unit_constant: Rational,
    pub expected_constant: Rational,
    pub vanishes_at_zero: bool,
}

impl ContractionReport {
    pub fn passed(&self) -> bool {
        self.vanishes_at_zero && self.unit_constant == self.expected_constant
    }
}

/// For the new edge `h0` of an expansion with kept branches `h1`, `h2`:
/// `φ_{-h0}(x_{h1}) - φ_{-h0}(x_{h2})` divided by `y_{h0}` is a unit with
/// constant term `(x_{-h0} - x_{h0})² (t1 - t2) / ((t1 - x_{h0})(t2 - x_{h0}))`.
pub fn contraction_parameter_check(
    g: &StableGraph,
    h0: &Branch,
    h1: &Branch,
    h2: &Branch,
    order: i32,
) -> Result<ContractionReport, CurveError> {
    let finite = |h: &Branch| match g.modulus(h)? {
        Modulus::Finite(q) => Ok(q.clone()),
        Modulus::Infinity => Err(CurveError::Degenerate(format!("x_{h} is infinite"))),
    };
    let name = h0.edge_name().ok_or_else(|| CurveError::InvalidMove(format!("{h0} is a tail")))?;
    let minus = h0.opposite().unwrap();
    let (t1, t2, a, b) = (finite(h1)?, finite(h2)?, finite(&minus)?, finite(h0)?);
    if t1 == t2 || t1 == b || t2 == b {
        return Err(CurveError::Degenerate("coinciding points on the contracted component".into()));
    }
    let phi = phi_matrix(g, &minus, order)?;
    let vars = phi.a.vars().clone();
    let at = |t: &Rational| phi.apply(&Series::constant(vars.clone(), order, t.clone()));
    let diff = at(&t1)?.sub(&at(&t2)?);
    let var = format!("y_{name}");
    let vanishes_at_zero = diff.at_zero(&var).map(|s| s.num_terms() == 0).unwrap_or(false);
    let mut mono = vec![0; vars.len()];
    mono[vars.iter().position(|v| *v == var).unwrap()] = 1;
    let unit = diff.div_monomial(&mono);
    let unit_constant = unit.constant_term();
    let ab = Rational::from(&a - &b);
    let expected_constant =
        Rational::from(&ab * &ab) * Rational::from(&t1 - &t2) / (Rational::from(&t1 - &b) * Rational::from(&t2 - &b));
    Ok(ContractionReport { unit_constant, expected_constant, vanishes_at_zero })
}
