//! One function per subcommand; each returns the output document.

use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::{Float, Rational};
use serde_json::{json, Value};

use tateperiods::curves::random::{random_expansions, random_moduli};
use tateperiods::curves::{
    apply_move, contraction_parameter_check, fixed_points_multiplier, verify_fixed_points, GraphMove,
};
use tateperiods::elliptic::{eisenstein_series, hain_hom, iterated_eisenstein, qseries_eval, TableDoc};
use tateperiods::kz::{drinfeld_associator, numeric_transport_oracle};
use tateperiods::mzv::{mzv_numeric, polylog_series};
use tateperiods::ncalg::shuffle_product;
use tateperiods::numeric::{bits_for_digits, pi, working_bits};
use tateperiods::periodring::EvalContext;
use tateperiods::periods::{assemble_period, fusing_factor, numeric_evaluate_period, ring_membership_check};
use tateperiods::{
    Alphabet, BigComplex, CoeffJson, Composition, EllipticTable, Endpoint, KzConnection, NCSeries, PathSpec,
    PeriodAssignment, PeriodElem, PeriodSeries, QSeriesPoly, ResidueAssignment, SeriesDoc, StableGraph,
    TangentialPoint,
};

use crate::doc::*;

fn decimal(x: &Float, digits: u32) -> String {
    x.to_string_radix(10, Some(digits as usize))
}

fn composition(s: &str) -> JobResult<Composition> {
    s.parse().map_err(fail)
}

fn index_list(s: &str) -> JobResult<Vec<u32>> {
    s.split(',')
        .map(|p| p.trim().parse::<u32>().map_err(|_| parse_failure(format!("bad index list `{s}`"))))
        .collect()
}

pub fn mzv(k: &str, precision: u32) -> JobResult<Output> {
    check_precision(precision)?;
    let k = composition(k)?;
    let symbol = PeriodElem::zeta(&k).map_err(fail)?;
    let value = mzv_numeric(&k, precision).map_err(fail)?;
    Ok(Output::new(
        "mzv",
        inputs(&[("composition", json!(k.0)), ("precision", json!(precision))]),
        None,
        json!({ "symbol": symbol.to_string(), "weight": k.weight(), "value": decimal(&value, precision) }),
    ))
}

pub fn polylog(k: &str, order: u32, at: Option<&str>, precision: u32) -> JobResult<Output> {
    check_order(order)?;
    check_precision(precision)?;
    if order == 0 {
        return Err(precondition("order must be at least 1"));
    }
    let k = composition(k)?;
    let coeffs = polylog_series(&k, order as usize);
    let terms: Vec<Value> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0)
        .map(|(n, c)| json!({ "n": n, "coeff": c.to_string() }))
        .collect();
    let mut results = json!({ "symbol": format!("Li({k})"), "order": order, "terms": terms });
    if let Some(z) = at {
        let z = rational_arg(z)?;
        let mut sum = Rational::new();
        let mut zn = Rational::from(1);
        for c in &coeffs {
            sum += Rational::from(c * &zn);
            zn *= &z;
        }
        results["at"] = json!(z.to_string());
        results["partial_sum"] = json!(sum.to_string());
        results["partial_sum_decimal"] = json!(decimal(&Float::with_val(bits_for_digits(precision), &sum), precision));
    }
    Ok(Output::new(
        "polylog",
        inputs(&[("composition", json!(k.0)), ("order", json!(order)), ("at", json!(at)), ("precision", json!(precision))]),
        None,
        results,
    ))
}

pub fn associator(weight: u32) -> JobResult<Output> {
    check_weight(weight)?;
    let phi = drinfeld_associator(weight);
    Ok(Output::new(
        "associator",
        inputs(&[("weight", json!(weight))]),
        None,
        json!({ "series": series_json(&phi.to_doc()) }),
    ))
}

pub fn transport(to: &str, tangent: Option<&str>, weight: u32, precision: u32) -> JobResult<Output> {
    check_weight(weight)?;
    check_precision(precision)?;
    let base = rational_arg(to)?;
    let end = match tangent {
        Some(d) => Endpoint::Tangential(TangentialPoint::new(base.clone(), rational_arg(d)?).map_err(fail)?),
        None => Endpoint::Point(base.clone()),
    };
    let conn = KzConnection::standard(weight);
    let from = Endpoint::Tangential(TangentialPoint::new(0, 1).map_err(fail)?);
    let t = numeric_transport_oracle(&conn, &from, &end, precision).map_err(fail)?;
    let t = t.map_coeffs(|c| c.with_prec(bits_for_digits(precision)));
    Ok(Output::new(
        "transport",
        inputs(&[
            ("to", json!(base.to_string())),
            ("tangent", json!(tangent)),
            ("weight", json!(weight)),
            ("precision", json!(precision)),
        ]),
        None,
        json!({ "series": series_json(&t.to_doc()) }),
    ))
}

pub fn eisenstein(weight: u32, order: u32) -> JobResult<Output> {
    check_order(order)?;
    let s = eisenstein_series(weight, order).map_err(fail)?;
    Ok(Output::new(
        "eisenstein",
        inputs(&[("weight", json!(weight)), ("order", json!(order))]),
        None,
        json!({ "series": series_json(&s.to_doc()) }),
    ))
}

pub fn eis_int(indices: &str, order: u32) -> JobResult<Output> {
    check_order(order)?;
    let idx = index_list(indices)?;
    let s = iterated_eisenstein(&idx, order).map_err(fail)?;
    Ok(Output::new(
        "eis-int",
        inputs(&[("indices", json!(idx)), ("order", json!(order))]),
        None,
        json!({ "series": series_json(&s.to_doc()) }),
    ))
}

pub fn eval_q(q0: &str, precision: u32, indices: Option<&str>, series: Option<&Path>, order: u32) -> JobResult<Output> {
    check_precision(precision)?;
    check_order(order)?;
    let bits = working_bits(precision);
    let q: Value = serde_json::from_str(q0).unwrap_or_else(|_| json!(q0));
    let q = parse_complex(&q, bits)?;
    let (s, source) = match (indices, series) {
        (Some(i), None) => {
            let idx = index_list(i)?;
            (iterated_eisenstein(&idx, order).map_err(fail)?, json!({ "indices": idx, "order": order }))
        }
        (None, Some(p)) => {
            let doc = load(p, "series")?;
            (QSeriesPoly::from_doc(&doc).map_err(fail)?, json!({ "series": path_str(p) }))
        }
        _ => return Err(precondition("give exactly one of --indices and --series")),
    };
    let v = qseries_eval(&s, &q, precision).map_err(fail)?;
    let (re, im) = v.with_prec(bits_for_digits(precision)).to_decimal_parts(precision as usize);
    Ok(Output::new(
        "eval-q",
        inputs(&[("q0", json!(q0)), ("precision", json!(precision)), ("source", source)]),
        None,
        json!({ "value": [re, im] }),
    ))
}

fn report_json(g: &StableGraph) -> JobResult<Value> {
    let r = g.validate().map_err(fail)?;
    Ok(series_json(&r))
}

pub fn graph_validate(file: &Path) -> JobResult<Output> {
    let lg = load_graph(file)?;
    let report = report_json(&lg.graph)?;
    let moduli = if lg.graph.moduli().is_empty() {
        Value::Null
    } else {
        json!(lg.graph.check_moduli().map(|_| "distinct".to_string()).unwrap_or_else(|e| e.to_string()))
    };
    let construction = match &lg.construction {
        Some(_) => json!(lg.residues(2).map(|_| "reproduces the graph".to_string()).map_err(|e| e.message).unwrap_or_else(|e| e)),
        None => Value::Null,
    };
    Ok(Output::new(
        "graph validate",
        inputs(&[("graph", path_str(file))]),
        None,
        json!({ "report": report, "moduli": moduli, "construction": construction }),
    ))
}

fn residues_json(res: &ResidueAssignment) -> Value {
    let m: BTreeMap<String, SeriesDoc> = res.residues.iter().map(|(h, s)| (h.to_string(), s.to_doc())).collect();
    series_json(&m)
}

pub fn graph_basic(tails: u32, weight: u32) -> JobResult<Output> {
    check_weight(weight)?;
    if tails < 2 {
        return Err(precondition("the basic graph needs at least two tails"));
    }
    let (g, res) = ResidueAssignment::delta0(tails, weight).map_err(fail)?;
    let file = GraphFile { graph: g.to_doc(), construction: Some(Construction { tails, moves: Vec::new() }) };
    Ok(Output::new(
        "graph basic",
        inputs(&[("tails", json!(tails)), ("weight", json!(weight))]),
        None,
        json!({ "graph": series_json(&file), "report": report_json(&g)?, "residues": residues_json(&res) }),
    ))
}

pub fn graph_random(tails: u32, seed: u64) -> JobResult<Output> {
    if tails < 2 {
        return Err(precondition("the basic graph needs at least two tails"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut g, moves) = random_expansions(&mut rng, tails);
    random_moduli(&mut rng, &mut g);
    let docs = moves
        .iter()
        .map(|m| match m {
            GraphMove::Expand { vertex, first, second } => {
                MoveDoc::Expand { vertex: vertex.clone(), first: first.to_string(), second: second.to_string() }
            }
            GraphMove::Contract { edge } => MoveDoc::Contract(edge.to_string()),
        })
        .collect();
    let file = GraphFile { graph: g.to_doc(), construction: Some(Construction { tails, moves: docs }) };
    Ok(Output::new(
        "graph random",
        inputs(&[("tails", json!(tails))]),
        Some(seed),
        json!({ "graph": series_json(&file), "report": report_json(&g)? }),
    ))
}

pub fn graph_expand(file: &Path, vertex: &str, branches: &str, weight: u32) -> JobResult<Output> {
    check_weight(weight)?;
    let lg = load_graph(file)?;
    let pair = branch_list(&lg.graph, branches)?;
    if pair.len() != 2 {
        return Err(parse_failure("--branches takes exactly two branches"));
    }
    let mv = GraphMove::Expand { vertex: vertex.into(), first: pair[0].clone(), second: pair[1].clone() };
    let (g2, h0) = lg.graph.expand_vertex(vertex, &pair[0], &pair[1], None).map_err(fail)?;
    let construction = lg.history().ok().map(|mut c| {
        c.moves.push(MoveDoc::Expand {
            vertex: vertex.into(),
            first: pair[0].to_string(),
            second: pair[1].to_string(),
        });
        c
    });
    let residues = match lg.residues(weight) {
        Ok(res) => {
            let (_, res2) = apply_move(&without_moduli(&lg.graph), &res, &mv).map_err(fail)?;
            residues_json(&res2)
        }
        Err(_) => Value::Null,
    };
    let out = LoadedGraph { graph: g2, construction };
    Ok(Output::new(
        "graph expand",
        inputs(&[
            ("graph", path_str(file)),
            ("vertex", json!(vertex)),
            ("branches", json!(branches)),
            ("weight", json!(weight)),
        ]),
        None,
        json!({
            "graph": series_json(&out.to_file()),
            "new_edge": h0.to_string(),
            "report": report_json(&out.graph)?,
            "residues": residues,
        }),
    ))
}

pub fn moebius_fix(file: &Path, path: &str, order: u32, z: &str) -> JobResult<Output> {
    check_order(order)?;
    let lg = load_graph(file)?;
    let p = branch_list(&lg.graph, path)?;
    let z = rational_arg(z)?;
    let fp = fixed_points_multiplier(&lg.graph, &p, order as i32).map_err(fail)?;
    let verified = verify_fixed_points(&lg.graph, &p, &fp, &z, order as i32).map_err(fail).map(|_| true)?;
    Ok(Output::new(
        "moebius fix",
        inputs(&[
            ("graph", path_str(file)),
            ("path", json!(path)),
            ("order", json!(order)),
            ("z", json!(z.to_string())),
        ]),
        None,
        json!({
            "attracting": fp.attracting.to_json(),
            "repelling": fp.repelling.to_json(),
            "multiplier": fp.multiplier.to_json(),
            "verified": verified,
        }),
    ))
}

pub fn check_contraction(file: &Path, edge: &str, branches: &str, order: u32) -> JobResult<Output> {
    check_order(order)?;
    let lg = load_graph(file)?;
    let h0 = lg.graph.branch(edge).map_err(fail)?;
    let pair = branch_list(&lg.graph, branches)?;
    if pair.len() != 2 {
        return Err(parse_failure("--branches takes exactly two branches"));
    }
    let r = contraction_parameter_check(&lg.graph, &h0, &pair[0], &pair[1], order as i32).map_err(fail)?;
    Ok(Output::new(
        "check contraction",
        inputs(&[
            ("graph", path_str(file)),
            ("edge", json!(edge)),
            ("branches", json!(branches)),
            ("order", json!(order)),
        ]),
        None,
        json!({
            "unit_constant": r.unit_constant.to_string(),
            "expected_constant": r.expected_constant.to_string(),
            "vanishes_at_zero": r.vanishes_at_zero,
            "passed": r.passed(),
        }),
    ))
}

pub fn period_assemble(graph: &Path, path: &Path, weight: u32, order: u32) -> JobResult<Output> {
    check_weight(weight)?;
    check_order(order)?;
    let lg = load_graph(graph)?;
    let spec: PathSpec = load(path, "path")?;
    let res = lg.residues(weight)?;
    let p = assemble_period(&lg.graph, &res, &spec, weight, order).map_err(fail)?;
    let report = ring_membership_check(&p, &spec.parameters());
    Ok(Output::new(
        "period assemble",
        inputs(&[
            ("graph", path_str(graph)),
            ("path", series_json(&spec)),
            ("weight", json!(weight)),
            ("order", json!(order)),
        ]),
        None,
        json!({
            "series": series_json(&p.to_doc()),
            "parameters": spec.parameters(),
            "membership": series_json(&report),
            "in_ring": report.passed(),
        }),
    ))
}

#[derive(serde::Deserialize)]
struct AssignFile {
    #[serde(default)]
    params: BTreeMap<String, Value>,
    #[serde(default)]
    q0: Option<Value>,
    #[serde(default)]
    table: Option<TableDoc>,
}

pub fn period_eval(series: &Path, assign: &Path, precision: u32) -> JobResult<Output> {
    check_precision(precision)?;
    let doc: SeriesDoc = load(series, "series")?;
    let p = PeriodSeries::from_doc(&doc).map_err(|e| parse_failure(format!("{}: {e}", series.display())))?;
    let a: AssignFile = load(assign, "assign")?;
    let bits = working_bits(precision);
    let mut values = PeriodAssignment::default();
    for (k, v) in &a.params {
        values.params.insert(k.clone(), parse_complex(v, bits)?);
    }
    if let Some(q) = &a.q0 {
        values.q0 = Some(parse_complex(q, bits)?);
    }
    if let Some(t) = &a.table {
        values.table = EllipticTable::from_doc(t).map_err(fail)?;
    }
    let v = numeric_evaluate_period(&p, &values, precision).map_err(fail)?;
    let v = v.map_coeffs(|c| c.with_prec(bits_for_digits(precision)));
    Ok(Output::new(
        "period eval",
        inputs(&[("series", path_str(series)), ("assign", path_str(assign)), ("precision", json!(precision))]),
        None,
        json!({ "values": series_json(&v.to_doc()) }),
    ))
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn max_dev(a: &NCSeries<BigComplex>, b: &NCSeries<BigComplex>) -> f64 {
    a.alphabet()
        .words_up_to(a.truncation().min(b.truncation()))
        .iter()
        .map(|w| a.coeff(w).sub(&b.coeff(w)).abs_f64())
        .fold(0.0, f64::max)
}

fn selftest_checks(seed: u64, precision: u32) -> JobResult<Vec<Check>> {
    let tol = 10f64.powi(-(precision as i32).min(300));
    let bits = working_bits(precision);
    let mut out = Vec::new();

    let z2 = mzv_numeric(&Composition(vec![2]), precision).map_err(fail)?;
    let p = pi(bits);
    let dev = Float::with_val(bits, &z2 - Float::with_val(bits, &p * &p) / 6u32).abs().to_f64();
    out.push(Check { name: "zeta(2) = pi^2/6", passed: dev < tol, detail: format!("{dev:.2e}") });

    let z12 = mzv_numeric(&Composition(vec![1, 2]), precision).map_err(fail)?;
    let z3 = mzv_numeric(&Composition(vec![3]), precision).map_err(fail)?;
    let dev = Float::with_val(bits, &z12 - &z3).abs().to_f64();
    out.push(Check { name: "zeta(1,2) = zeta(3)", passed: dev < tol, detail: format!("{dev:.2e}") });

    let h = hain_hom(8).map_err(fail)?;
    let sum = h.x0.plus(&h.x1).and_then(|s| s.plus(&h.xinf)).map_err(fail)?;
    out.push(Check { name: "Hain relation at N = 8", passed: sum.is_zero(), detail: format!("{} terms", sum.num_terms()) });

    let digits = precision.min(30);
    let ctx = EvalContext::new(digits);
    let phi = drinfeld_associator(4)
        .try_map_coeffs(|c| c.numeric_eval(&ctx))
        .map_err(fail)?;
    let conn = KzConnection::standard(4);
    let from = Endpoint::Tangential(TangentialPoint::new(0, 1).map_err(fail)?);
    let to = Endpoint::Tangential(TangentialPoint::new(1, -1).map_err(fail)?);
    let oracle = numeric_transport_oracle(&conn, &from, &to, digits).map_err(fail)?;
    let dev = max_dev(&phi, &oracle);
    let tol_assoc = 10f64.powi(-(digits as i32) + 5);
    out.push(Check { name: "associator vs transport, weight 4", passed: dev < tol_assoc, detail: format!("{dev:.2e}") });

    let words = phi.alphabet().words_up_to(4);
    let mut defect = 0.0f64;
    for w1 in &words {
        for w2 in &words {
            if w1.len() + w2.len() > 4 || w1.is_empty() || w2.is_empty() {
                continue;
            }
            let mut lhs = BigComplex::from_i64(0).with_prec(bits);
            for (w, c) in shuffle_product(w1, w2) {
                lhs = lhs.add(&phi.coeff(&w).scale_rational(&Rational::from(c)));
            }
            defect = defect.max(lhs.sub(&phi.coeff(w1).mul(&phi.coeff(w2))).abs_f64());
        }
    }
    out.push(Check { name: "associator is group-like", passed: defect < tol_assoc, detail: format!("{defect:.2e}") });

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, moves) = random_expansions(&mut rng, 4);
    let (g, res) = tateperiods::curves::residue_assignment(4, &moves, 4).map_err(fail)?;
    let bad = res.unbalanced_vertices(&g).map_err(fail)?;
    out.push(Check {
        name: "random residue assignment balances",
        passed: bad.is_empty(),
        detail: format!("{} moves", moves.len()),
    });

    let al = Alphabet::from_names(&["a", "b"]).map_err(fail)?;
    let a = NCSeries::letter(al.clone(), "a", 3).map_err(fail)?;
    let b = NCSeries::letter(al, "b", 3).map_err(fail)?;
    let s = Rational::from((1, 10));
    let factor = fusing_factor(&a, &b, "s", 3, 24).map_err(fail)?;
    let mut assign = PeriodAssignment::default();
    assign.params.insert("s".into(), BigComplex::from_rational(&s, bits));
    let value = numeric_evaluate_period(&factor, &assign, digits).map_err(fail)?;
    let conn = KzConnection::new(vec![(Rational::new(), a), (Rational::from(1), b)], None).map_err(fail)?;
    let oracle = numeric_transport_oracle(&conn, &from, &Endpoint::Point(Rational::from(1) - &s), digits).map_err(fail)?;
    let dev = max_dev(&value, &oracle);
    out.push(Check { name: "fusing factor vs transport", passed: dev < 1e-15, detail: format!("{dev:.2e}") });
    Ok(out)
}

pub fn selftest(seed: u64, precision: u32) -> JobResult<(Output, bool)> {
    check_precision(precision)?;
    let checks = selftest_checks(seed, precision)?;
    let ok = checks.iter().all(|c| c.passed);
    let list: Vec<Value> =
        checks.iter().map(|c| json!({ "name": c.name, "passed": c.passed, "detail": c.detail })).collect();
    Ok((
        Output::new("selftest", inputs(&[("precision", json!(precision))]), Some(seed), json!({ "checks": list, "passed": ok })),
        ok,
    ))
}
