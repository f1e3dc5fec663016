//! Stable graphs with oriented edges, numbered tails and branch moduli.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rug::Rational;
use serde::{Deserialize, Serialize};

use super::CurveError;
use crate::numeric::parse_rational;

/// A branch: an oriented edge `±e` or a tail.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Branch {
    Edge { name: String, reversed: bool },
    Tail(String),
}

impl Branch {
    pub fn edge(name: &str) -> Self {
        Branch::Edge { name: name.to_string(), reversed: false }
    }

    pub fn reversed_edge(name: &str) -> Self {
        Branch::Edge { name: name.to_string(), reversed: true }
    }

    pub fn tail(name: &str) -> Self {
        Branch::Tail(name.to_string())
    }

    /// `-h` for an oriented edge; tails have no opposite.
    pub fn opposite(&self) -> Option<Branch> {
        match self {
            Branch::Edge { name, reversed } => Some(Branch::Edge { name: name.clone(), reversed: !reversed }),
            Branch::Tail(_) => None,
        }
    }

    pub fn edge_name(&self) -> Option<&str> {
        match self {
            Branch::Edge { name, .. } => Some(name),
            Branch::Tail(_) => None,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Branch::Edge { name, reversed: false } => write!(f, "{name}"),
            Branch::Edge { name, reversed: true } => write!(f, "-{name}"),
            Branch::Tail(name) => write!(f, "{name}"),
        }
    }
}

/// Position of a branch point on its component.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Modulus {
    Finite(Rational),
    Infinity,
}

impl fmt::Display for Modulus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modulus::Finite(q) => write!(f, "{q}"),
            Modulus::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct EdgeData {
    /// `v_e`.
    pub head: String,
    /// `v_{-e}`.
    pub tail: String,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TailData {
    pub vertex: String,
    pub number: u32,
}

/// A connected graph with oriented edges and numbered tails. One loop edge
/// may be designated as the distinguished loop carrying `(T, A)`.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct StableGraph {
    vertices: BTreeSet<String>,
    edges: BTreeMap<String, EdgeData>,
    tails: BTreeMap<String, TailData>,
    loop_edge: Option<String>,
    moduli: BTreeMap<Branch, Modulus>,
}

#[derive(Clone, PartialEq, Eq, Debug, Serialize)]
pub struct GraphReport {
    pub genus: usize,
    pub tails: usize,
    pub vertices: usize,
    pub edges: usize,
    pub trivalent: bool,
}

impl StableGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, v: &str) -> Result<(), CurveError> {
        if !self.vertices.insert(v.to_string()) {
            return Err(CurveError::Invalid(format!("duplicate vertex {v}")));
        }
        Ok(())
    }

    fn check_fresh_name(&self, name: &str) -> Result<(), CurveError> {
        if name.is_empty() || name.starts_with('-') || name.contains(char::is_whitespace) {
            return Err(CurveError::Invalid(format!("bad branch name {name:?}")));
        }
        if self.edges.contains_key(name) || self.tails.contains_key(name) {
            return Err(CurveError::Invalid(format!("duplicate branch name {name}")));
        }
        Ok(())
    }

    /// Adds edge `e` with `v_e = head` and `v_{-e} = tail`.
    pub fn add_edge(&mut self, name: &str, head: &str, tail: &str) -> Result<(), CurveError> {
        self.check_fresh_name(name)?;
        for v in [head, tail] {
            if !self.vertices.contains(v) {
                return Err(CurveError::UnknownVertex(v.to_string()));
            }
        }
        self.edges.insert(name.to_string(), EdgeData { head: head.into(), tail: tail.into() });
        Ok(())
    }

    pub fn add_tail(&mut self, name: &str, vertex: &str, number: u32) -> Result<(), CurveError> {
        self.check_fresh_name(name)?;
        if !self.vertices.contains(vertex) {
            return Err(CurveError::UnknownVertex(vertex.to_string()));
        }
        if self.tails.values().any(|t| t.number == number) {
            return Err(CurveError::Invalid(format!("duplicate tail number {number}")));
        }
        self.tails.insert(name.to_string(), TailData { vertex: vertex.into(), number });
        Ok(())
    }

    pub fn set_loop_edge(&mut self, name: &str) -> Result<(), CurveError> {
        match self.edges.get(name) {
            Some(d) if d.head == d.tail => {
                self.loop_edge = Some(name.to_string());
                Ok(())
            }
            Some(_) => Err(CurveError::Invalid(format!("{name} is not a loop"))),
            None => Err(CurveError::UnknownBranch(name.to_string())),
        }
    }

    pub fn set_modulus(&mut self, h: &Branch, x: Modulus) -> Result<(), CurveError> {
        self.terminal(h)?;
        self.moduli.insert(h.clone(), x);
        Ok(())
    }

    /// The basic genus-one graph: `v0` carries `e` and the tails `t1..tn`,
    /// `v1` carries `-e` and both ends of the loop `l`.
    pub fn delta0(n: u32) -> Self {
        let mut g = StableGraph::new();
        g.add_vertex("v0").unwrap();
        g.add_vertex("v1").unwrap();
        g.add_edge("e", "v0", "v1").unwrap();
        g.add_edge("l", "v1", "v1").unwrap();
        g.set_loop_edge("l").unwrap();
        for i in 1..=n {
            g.add_tail(&format!("t{i}"), "v0", i).unwrap();
        }
        g
    }

    pub fn vertices(&self) -> impl Iterator<Item = &String> {
        self.vertices.iter()
    }

    pub fn edges(&self) -> impl Iterator<Item = (&String, &EdgeData)> {
        self.edges.iter()
    }

    pub fn tails(&self) -> impl Iterator<Item = (&String, &TailData)> {
        self.tails.iter()
    }

    pub fn loop_edge(&self) -> Option<&str> {
        self.loop_edge.as_deref()
    }

    pub fn moduli(&self) -> &BTreeMap<Branch, Modulus> {
        &self.moduli
    }

    pub fn modulus(&self, h: &Branch) -> Result<&Modulus, CurveError> {
        self.moduli.get(h).ok_or_else(|| CurveError::MissingModulus(h.to_string()))
    }

    /// Tails ordered by number.
    pub fn tails_by_number(&self) -> Vec<String> {
        let mut t: Vec<(&u32, &String)> = self.tails.iter().map(|(n, d)| (&d.number, n)).collect();
        t.sort();
        t.into_iter().map(|(_, n)| n.clone()).collect()
    }

    /// Every branch `±e` and every tail.
    pub fn branches(&self) -> Vec<Branch> {
        let mut out = Vec::new();
        for e in self.edges.keys() {
            out.push(Branch::edge(e));
            out.push(Branch::reversed_edge(e));
        }
        out.extend(self.tails.keys().map(|t| Branch::tail(t)));
        out
    }

    /// Parses `e`, `-e` or a tail name.
    pub fn branch(&self, s: &str) -> Result<Branch, CurveError> {
        if let Some(rest) = s.strip_prefix('-') {
            if self.edges.contains_key(rest) {
                return Ok(Branch::reversed_edge(rest));
            }
        } else if self.edges.contains_key(s) {
            return Ok(Branch::edge(s));
        } else if self.tails.contains_key(s) {
            return Ok(Branch::tail(s));
        }
        Err(CurveError::UnknownBranch(s.to_string()))
    }

    /// The terminal vertex `v_h`.
    pub fn terminal(&self, h: &Branch) -> Result<&str, CurveError> {
        match h {
            Branch::Edge { name, reversed } => {
                let d = self.edges.get(name).ok_or_else(|| CurveError::UnknownBranch(h.to_string()))?;
                Ok(if *reversed { &d.tail } else { &d.head })
            }
            Branch::Tail(name) => self
                .tails
                .get(name)
                .map(|t| t.vertex.as_str())
                .ok_or_else(|| CurveError::UnknownBranch(h.to_string())),
        }
    }

    /// Branches `h` with `v_h = v`.
    pub fn branches_at(&self, v: &str) -> Vec<Branch> {
        self.branches().into_iter().filter(|h| self.terminal(h).ok() == Some(v)).collect()
    }

    /// Oriented edges leaving `v`, i.e. with `v_{-h} = v`.
    pub fn outgoing(&self, v: &str) -> Vec<Branch> {
        self.branches()
            .into_iter()
            .filter(|h| h.opposite().is_some_and(|o| self.terminal(&o).ok() == Some(v)))
            .collect()
    }

    pub fn genus(&self) -> usize {
        (self.edges.len() + 1).saturating_sub(self.vertices.len())
    }

    fn is_connected(&self) -> bool {
        let Some(start) = self.vertices.iter().next() else {
            return false;
        };
        let mut seen = BTreeSet::from([start.clone()]);
        let mut stack = vec![start.clone()];
        while let Some(v) = stack.pop() {
            for d in self.edges.values() {
                for (a, b) in [(&d.head, &d.tail), (&d.tail, &d.head)] {
                    if *a == v && seen.insert(b.clone()) {
                        stack.push(b.clone());
                    }
                }
            }
        }
        seen.len() == self.vertices.len()
    }

    /// Connectivity and stability (every vertex carries at least three branches).
    pub fn validate(&self) -> Result<GraphReport, CurveError> {
        if !self.is_connected() {
            return Err(CurveError::Disconnected);
        }
        let unstable: Vec<String> =
            self.vertices.iter().filter(|v| self.branches_at(v).len() < 3).cloned().collect();
        if !unstable.is_empty() {
            return Err(CurveError::Unstable(unstable));
        }
        Ok(GraphReport {
            genus: self.genus(),
            tails: self.tails.len(),
            vertices: self.vertices.len(),
            edges: self.edges.len(),
            trivalent: self.vertices.iter().all(|v| self.branches_at(v).len() == 3),
        })
    }

    /// Distinctness of moduli: `x_e ≠ x_{-e}` and distinct points on each
    /// component. Every branch must carry a modulus.
    pub fn check_moduli(&self) -> Result<(), CurveError> {
        for h in self.branches() {
            self.modulus(&h)?;
        }
        for e in self.edges.keys() {
            if self.moduli[&Branch::edge(e)] == self.moduli[&Branch::reversed_edge(e)] {
                return Err(CurveError::Degenerate(format!("x_{e} = x_-{e}")));
            }
        }
        for v in &self.vertices {
            let at = self.branches_at(v);
            for (i, a) in at.iter().enumerate() {
                for b in &at[i + 1..] {
                    if self.moduli[a] == self.moduli[b] {
                        return Err(CurveError::Degenerate(format!("x_{a} = x_{b} on {v}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Splits `v0` by a new edge `h0` with `v_{h0} = v0` keeping `h1`, `h2`;
    /// the new vertex `v_{-h0}` takes the remaining branches. Default names
    /// depend only on `{h1, h2}`.
    pub fn expand_vertex(
        &self,
        v0: &str,
        h1: &Branch,
        h2: &Branch,
        names: Option<(&str, &str)>,
    ) -> Result<(StableGraph, Branch), CurveError> {
        if !self.vertices.contains(v0) {
            return Err(CurveError::UnknownVertex(v0.to_string()));
        }
        if h1 == h2 {
            return Err(CurveError::InvalidMove("expansion needs two distinct branches".into()));
        }
        for h in [h1, h2] {
            if self.terminal(h)? != v0 {
                return Err(CurveError::InvalidMove(format!("{h} is not at {v0}")));
            }
        }
        let at = self.branches_at(v0);
        if at.len() < 4 {
            return Err(CurveError::InvalidMove(format!("{v0} has fewer than four branches")));
        }
        let (a, b) = if h1.to_string() <= h2.to_string() { (h1, h2) } else { (h2, h1) };
        let default_edge = format!("[{a}|{b}]");
        let default_vertex = format!("w[{a}|{b}]");
        let (edge, vertex) = names.unwrap_or((&default_edge, &default_vertex));
        let mut g = self.clone();
        g.check_fresh_name(edge)?;
        g.add_vertex(vertex)?;
        for h in at.iter().filter(|h| *h != h1 && *h != h2) {
            g.move_branch(h, vertex);
        }
        g.add_edge(edge, v0, vertex)?;
        Ok((g, Branch::edge(edge)))
    }

    fn move_branch(&mut self, h: &Branch, to: &str) {
        match h {
            Branch::Edge { name, reversed } => {
                let d = self.edges.get_mut(name).expect("known edge");
                if *reversed {
                    d.tail = to.to_string();
                } else {
                    d.head = to.to_string();
                }
            }
            Branch::Tail(name) => self.tails.get_mut(name).expect("known tail").vertex = to.to_string(),
        }
    }

    /// Contracts the non-loop edge of `h0`, merging `v_{-h0}` into `v_{h0}`.
    pub fn contract_edge(&self, h0: &Branch) -> Result<StableGraph, CurveError> {
        let name = h0.edge_name().ok_or_else(|| CurveError::InvalidMove(format!("{h0} is a tail")))?;
        let keep = self.terminal(h0)?.to_string();
        let gone = self.terminal(&h0.opposite().unwrap())?.to_string();
        if keep == gone {
            return Err(CurveError::ShrinksLoop(name.to_string()));
        }
        let mut g = self.clone();
        g.edges.remove(name);
        g.moduli.remove(&Branch::edge(name));
        g.moduli.remove(&Branch::reversed_edge(name));
        for h in g.branches_at(&gone) {
            g.move_branch(&h, &keep);
        }
        g.vertices.remove(&gone);
        Ok(g)
    }

    /// Equality up to renaming vertices: same edges, tails and moduli, and
    /// the same grouping of branches into vertices.
    pub fn same_up_to_vertex_names(&self, other: &StableGraph) -> bool {
        let groups = |g: &StableGraph| -> BTreeSet<Vec<Branch>> {
            g.vertices.iter().map(|v| g.branches_at(v)).collect()
        };
        let numbers = |g: &StableGraph| -> BTreeMap<String, u32> {
            g.tails.iter().map(|(n, d)| (n.clone(), d.number)).collect()
        };
        let mut a = self.branches();
        let mut b = other.branches();
        a.sort();
        b.sort();
        a == b
            && numbers(self) == numbers(other)
            && self.loop_edge == other.loop_edge
            && self.moduli == other.moduli
            && groups(self) == groups(other)
    }
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct GraphDoc {
    pub vertices: Vec<String>,
    pub edges: Vec<EdgeDoc>,
    #[serde(default)]
    pub tails: Vec<TailDoc>,
    #[serde(default, rename = "loop", skip_serializing_if = "Option::is_none")]
    pub loop_edge: Option<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub moduli: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct EdgeDoc {
    pub name: String,
    pub head: String,
    pub tail: String,
}

#[derive(Serialize, Deserialize, Debug, Clone)]
pub struct TailDoc {
    pub name: String,
    pub vertex: String,
    pub number: u32,
}

impl StableGraph {
    pub fn to_doc(&self) -> GraphDoc {
        GraphDoc {
            vertices: self.vertices.iter().cloned().collect(),
            edges: self
                .edges
                .iter()
                .map(|(n, d)| EdgeDoc { name: n.clone(), head: d.head.clone(), tail: d.tail.clone() })
                .collect(),
            tails: self
                .tails
                .iter()
                .map(|(n, d)| TailDoc { name: n.clone(), vertex: d.vertex.clone(), number: d.number })
                .collect(),
            loop_edge: self.loop_edge.clone(),
            moduli: self.moduli.iter().map(|(h, x)| (h.to_string(), x.to_string())).collect(),
        }
    }

    pub fn from_doc(doc: &GraphDoc) -> Result<Self, CurveError> {
        let mut g = StableGraph::new();
        for v in &doc.vertices {
            g.add_vertex(v)?;
        }
        for e in &doc.edges {
            g.add_edge(&e.name, &e.head, &e.tail)?;
        }
        for t in &doc.tails {
            g.add_tail(&t.name, &t.vertex, t.number)?;
        }
        if let Some(l) = &doc.loop_edge {
            g.set_loop_edge(l)?;
        }
        for (h, x) in &doc.moduli {
            let branch = g.branch(h)?;
            let m = if x == "inf" {
                Modulus::Infinity
            } else {
                Modulus::Finite(parse_rational(x).ok_or_else(|| CurveError::Document(format!("bad modulus for {h}: {x}")))?)
            };
            g.set_modulus(&branch, m)?;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta0_shape() {
        let g = StableGraph::delta0(3);
        let r = g.validate().unwrap();
        assert_eq!((r.genus, r.tails, r.vertices, r.edges, r.trivalent), (1, 3, 2, 2, false));
        assert_eq!(g.branches_at("v1"), vec![Branch::reversed_edge("e"), Branch::edge("l"), Branch::reversed_edge("l")]);
        assert!(StableGraph::delta0(2).validate().unwrap().trivalent);
    }

    #[test]
    fn validation_errors() {
        let mut g = StableGraph::new();
        g.add_vertex("a").unwrap();
        g.add_vertex("b").unwrap();
        g.add_edge("l", "a", "a").unwrap();
        g.add_tail("t1", "a", 1).unwrap();
        assert_eq!(g.validate(), Err(CurveError::Disconnected));
        g.add_edge("e", "a", "b").unwrap();
        assert_eq!(g.validate(), Err(CurveError::Unstable(vec!["b".into()])));
    }

    #[test]
    fn expand_then_contract_round_trips() {
        let g = StableGraph::delta0(3);
        let (h1, h2) = (Branch::tail("t1"), Branch::tail("t2"));
        let (g2, h0) = g.expand_vertex("v0", &h1, &h2, None).unwrap();
        assert_eq!(h0.to_string(), "[t1|t2]");
        assert_eq!(g2.branches_at("v0"), vec![h0.clone(), h1, h2]);
        assert!(g2.validate().unwrap().trivalent);
        let back = g2.contract_edge(&h0).unwrap();
        assert!(back.same_up_to_vertex_names(&g));
        assert_eq!(g2.contract_edge(&Branch::edge("l")), Err(CurveError::ShrinksLoop("l".into())));
        assert!(g.expand_vertex("v1", &Branch::edge("l"), &Branch::reversed_edge("l"), None).is_err());
    }

    #[test]
    fn doc_round_trip() {
        let mut g = StableGraph::delta0(1);
        g.set_modulus(&Branch::edge("e"), Modulus::Infinity).unwrap();
        g.set_modulus(&Branch::tail("t1"), Modulus::Finite(Rational::from((1, 3)))).unwrap();
        let doc = g.to_doc();
        let text = serde_json::to_string(&doc).unwrap();
        let back = StableGraph::from_doc(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, g);
    }
}
