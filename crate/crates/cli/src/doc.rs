//! Output documents, input files and exit statuses.

use std::fmt;
use std::path::Path;

use rug::Rational;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tateperiods::curves::{apply_move, GraphDoc, GraphMove};
use tateperiods::numeric::{parse_rational, BigComplex};
use tateperiods::{
    Branch, CurveError, EllipticError, KzError, NcError, PeriodError, PeriodsError, ResidueAssignment, StableGraph,
};

pub const MAX_WEIGHT: u32 = 6;
pub const MAX_ORDER: u32 = 200;
pub const MAX_PRECISION: u32 = 100;

/// A failed job with its exit status.
#[derive(Debug)]
pub struct Failure {
    pub status: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub type JobResult<T> = Result<T, Failure>;

pub fn parse_failure(msg: impl Into<String>) -> Failure {
    Failure { status: 2, message: msg.into() }
}

pub fn precondition(msg: impl Into<String>) -> Failure {
    Failure { status: 3, message: msg.into() }
}

pub fn budget(msg: impl Into<String>) -> Failure {
    Failure { status: 4, message: msg.into() }
}

/// Library errors mapped onto exit statuses.
pub trait Classify {
    fn status(&self) -> u8;
}

impl Classify for NcError {
    fn status(&self) -> u8 {
        match self {
            NcError::Document(_) | NcError::UnknownLetter(_) => 2,
            _ => 3,
        }
    }
}

impl Classify for PeriodError {
    fn status(&self) -> u8 {
        match self {
            PeriodError::Parse(_) => 2,
            PeriodError::Numeric(_) => 4,
            _ => 3,
        }
    }
}

impl Classify for KzError {
    fn status(&self) -> u8 {
        match self {
            KzError::Series(e) => e.status(),
            KzError::Budget(_) => 4,
            _ => 3,
        }
    }
}

impl Classify for EllipticError {
    fn status(&self) -> u8 {
        match self {
            EllipticError::Document(_) => 2,
            EllipticError::OrderTooSmall { .. } => 4,
            EllipticError::Period(e) => e.status(),
            EllipticError::Series(e) => e.status(),
            _ => 3,
        }
    }
}

impl Classify for CurveError {
    fn status(&self) -> u8 {
        match self {
            CurveError::Document(_) | CurveError::UnknownBranch(_) | CurveError::UnknownVertex(_) => 2,
            CurveError::LiftingFailed(_) => 4,
            CurveError::Series(e) => e.status(),
            _ => 3,
        }
    }
}

impl Classify for PeriodsError {
    fn status(&self) -> u8 {
        match self {
            PeriodsError::Series(e) => e.status(),
            PeriodsError::Kz(e) => e.status(),
            PeriodsError::Curve(e) => e.status(),
            PeriodsError::Period(e) => e.status(),
            PeriodsError::WeightBudget { .. } => 4,
            _ => 3,
        }
    }
}

pub fn fail<E: Classify + fmt::Display>(e: E) -> Failure {
    Failure { status: e.status(), message: e.to_string() }
}

pub fn check_weight(n: u32) -> JobResult<()> {
    if n > MAX_WEIGHT {
        return Err(budget(format!("weight {n} exceeds the cap {MAX_WEIGHT}")));
    }
    Ok(())
}

pub fn check_order(q: u32) -> JobResult<()> {
    if q > MAX_ORDER {
        return Err(budget(format!("order {q} exceeds the cap {MAX_ORDER}")));
    }
    Ok(())
}

pub fn check_precision(d: u32) -> JobResult<()> {
    if d == 0 || d > MAX_PRECISION {
        return Err(budget(format!("precision {d} must lie in 1..={MAX_PRECISION}")));
    }
    Ok(())
}

/// The document written by every subcommand.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct Output {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Value,
    pub seed: Option<u64>,
    pub results: Value,
}

impl Output {
    pub fn new(command: &str, inputs: Value, seed: Option<u64>, results: Value) -> Self {
        Output {
            tool: "tateperiods".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            inputs,
            seed,
            results,
        }
    }

    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }
}

fn read(path: &Path) -> JobResult<String> {
    std::fs::read_to_string(path).map_err(|e| precondition(format!("{}: {e}", path.display())))
}

fn located(path: &Path, e: &serde_json::Error) -> Failure {
    if e.line() == 0 {
        parse_failure(format!("{}: {e}", path.display()))
    } else {
        parse_failure(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
    }
}

/// Reads `path` as `T`, either bare or as `results.<key>` of an output document.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path, key: &str) -> JobResult<T> {
    let text = read(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| located(path, &e))?;
    if let Some(inner) = value.get("results").and_then(|r| r.get(key)) {
        return serde_json::from_value(inner.clone())
            .map_err(|e| parse_failure(format!("{}: results.{key}: {e}", path.display())));
    }
    serde_json::from_str(&text).map_err(|e| located(path, &e))
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MoveDoc {
    Expand { vertex: String, first: String, second: String },
    Contract(String),
}

/// Moves taking the basic graph with `tails` tails to the described graph.
#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Eq)]
pub struct Construction {
    pub tails: u32,
    #[serde(default)]
    pub moves: Vec<MoveDoc>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct GraphFile {
    #[serde(flatten)]
    pub graph: GraphDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub construction: Option<Construction>,
}

impl MoveDoc {
    pub fn to_move(&self, g: &StableGraph) -> JobResult<GraphMove> {
        let branch = |s: &str| g.branch(s).map_err(fail);
        Ok(match self {
            MoveDoc::Expand { vertex, first, second } => {
                GraphMove::Expand { vertex: vertex.clone(), first: branch(first)?, second: branch(second)? }
            }
            MoveDoc::Contract(e) => GraphMove::Contract { edge: branch(e)? },
        })
    }
}

pub struct LoadedGraph {
    pub graph: StableGraph,
    pub construction: Option<Construction>,
}

pub fn load_graph(path: &Path) -> JobResult<LoadedGraph> {
    let file: GraphFile = load(path, "graph")?;
    let graph = StableGraph::from_doc(&file.graph).map_err(|e| parse_failure(format!("{}: {e}", path.display())))?;
    Ok(LoadedGraph { graph, construction: file.construction })
}

impl LoadedGraph {
    pub fn to_file(&self) -> GraphFile {
        GraphFile { graph: self.graph.to_doc(), construction: self.construction.clone() }
    }

    /// The construction, or the empty one when the graph is the basic graph.
    pub fn history(&self) -> JobResult<Construction> {
        if let Some(c) = &self.construction {
            return Ok(c.clone());
        }
        let n = self.graph.tails().count() as u32;
        if without_moduli(&self.graph).same_up_to_vertex_names(&StableGraph::delta0(n)) {
            Ok(Construction { tails: n, moves: Vec::new() })
        } else {
            Err(precondition("graph has no construction history and is not the basic graph"))
        }
    }

    /// Replays the construction and checks it reproduces the graph.
    pub fn residues(&self, truncation: u32) -> JobResult<ResidueAssignment> {
        let history = self.history()?;
        let (mut g, mut res) = ResidueAssignment::delta0(history.tails, truncation).map_err(fail)?;
        for m in &history.moves {
            let mv = m.to_move(&g)?;
            (g, res) = apply_move(&g, &res, &mv).map_err(fail)?;
        }
        if !g.same_up_to_vertex_names(&without_moduli(&self.graph)) {
            return Err(precondition("construction history does not reproduce the graph"));
        }
        Ok(res)
    }
}

pub fn without_moduli(g: &StableGraph) -> StableGraph {
    let mut doc = g.to_doc();
    doc.moduli.clear();
    StableGraph::from_doc(&doc).expect("a valid graph stays valid")
}

/// `p/q`, a decimal, or `[re, im]` with decimal parts.
pub fn parse_complex(v: &Value, bits: u32) -> JobResult<BigComplex> {
    match v {
        Value::String(s) => parse_real(s, bits),
        Value::Number(n) => parse_real(&n.to_string(), bits),
        Value::Array(a) if a.len() == 2 => {
            let part = |x: &Value| match x {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => Err(parse_failure(format!("bad complex part {x}"))),
            };
            let (re, im) = (part(&a[0])?, part(&a[1])?);
            let re = parse_real(&re, bits)?;
            let im = parse_real(&im, bits)?;
            Ok(re.add(&im.mul(&BigComplex::from_parts(
                rug::Float::with_val(bits, 0),
                rug::Float::with_val(bits, 1),
            ))))
        }
        _ => Err(parse_failure(format!("bad complex value {v}"))),
    }
}

fn parse_real(s: &str, bits: u32) -> JobResult<BigComplex> {
    if let Some(q) = parse_rational(s) {
        return Ok(BigComplex::from_rational(&q, bits));
    }
    BigComplex::parse_parts(s, "0").map(|z| z.with_prec(bits)).ok_or_else(|| parse_failure(format!("bad number `{s}`")))
}

pub fn rational_arg(s: &str) -> JobResult<Rational> {
    parse_rational(s).ok_or_else(|| parse_failure(format!("bad rational `{s}`")))
}

pub fn branch_list(g: &StableGraph, s: &str) -> JobResult<Vec<Branch>> {
    s.split(',').map(|h| g.branch(h.trim()).map_err(fail)).collect()
}

pub fn series_json<T: Serialize>(doc: &T) -> Value {
    serde_json::to_value(doc).expect("documents serialize")
}

pub fn inputs(pairs: &[(&str, Value)]) -> Value {
    let mut m = serde_json::Map::new();
    for (k, v) in pairs {
        m.insert((*k).to_string(), v.clone());
    }
    Value::Object(m)
}

pub fn path_str(p: &Path) -> Value {
    json!(p.display().to_string())
}
