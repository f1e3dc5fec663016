//! Residues of the universal connection on the branches of a stable graph.

use std::collections::BTreeMap;
use std::sync::Arc;

use rug::Rational;

use super::graph::{Branch, StableGraph};
use super::CurveError;
use crate::elliptic::hain_hom;
use crate::ncalg::{Alphabet, NCSeries};

/// Lie series attached to every branch, over the letters `X_t` (all tails
/// but the highest-numbered one), `T_l` and `A_l` for the loop `l`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueAssignment {
    pub alphabet: Arc<Alphabet>,
    pub truncation: u32,
    pub residues: BTreeMap<Branch, NCSeries<Rational>>,
}

/// A move between stable graphs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GraphMove {
    Expand { vertex: String, first: Branch, second: Branch },
    Contract { edge: Branch },
}

pub fn residue_alphabet(g: &StableGraph) -> Result<Arc<Alphabet>, CurveError> {
    let l = g.loop_edge().ok_or_else(|| CurveError::Invalid("no loop edge".into()))?;
    let tails = g.tails_by_number();
    let mut names: Vec<String> = tails.iter().take(tails.len().saturating_sub(1)).map(|t| format!("X_{t}")).collect();
    names.push(format!("T_{l}"));
    names.push(format!("A_{l}"));
    Ok(Alphabet::from_names(&names)?)
}

impl ResidueAssignment {
    /// The assignment on the basic graph of [`StableGraph::delta0`]:
    /// `X_e = -[T,A]`, `X_{-e} = [T,A]`, `X_l = f(T)·A`, `X_{-l} = -f(-T)·A`
    /// and the last tail balancing `v0`.
    pub fn delta0(n_tails: u32, truncation: u32) -> Result<(StableGraph, Self), CurveError> {
        let g = StableGraph::delta0(n_tails);
        let alphabet = residue_alphabet(&g)?;
        let hain = hain_hom(truncation)?;
        let map = [("T", "T_l"), ("A", "A_l")];
        let lift = |s: &NCSeries<Rational>| s.rename_into(alphabet.clone(), &map);
        let bracket = lift(&hain.x1)?;
        let mut residues = BTreeMap::new();
        residues.insert(Branch::edge("e"), bracket.negated());
        residues.insert(Branch::reversed_edge("e"), bracket.clone());
        residues.insert(Branch::edge("l"), lift(&hain.x0)?);
        residues.insert(Branch::reversed_edge("l"), lift(&hain.xinf)?);
        let tails = g.tails_by_number();
        let mut last = bracket;
        for t in &tails[..tails.len().saturating_sub(1)] {
            let x = NCSeries::letter(alphabet.clone(), &format!("X_{t}"), truncation)?;
            last = last.minus(&x)?;
            residues.insert(Branch::tail(t), x);
        }
        if let Some(t) = tails.last() {
            residues.insert(Branch::tail(t), last);
        }
        Ok((g, ResidueAssignment { alphabet, truncation, residues }))
    }

    pub fn get(&self, h: &Branch) -> Result<&NCSeries<Rational>, CurveError> {
        self.residues.get(h).ok_or_else(|| CurveError::UnknownBranch(h.to_string()))
    }

    pub fn vertex_sum(&self, g: &StableGraph, v: &str) -> Result<NCSeries<Rational>, CurveError> {
        let mut sum = NCSeries::zero(self.alphabet.clone(), self.truncation);
        for h in g.branches_at(v) {
            sum = sum.plus(self.get(&h)?)?;
        }
        Ok(sum)
    }

    /// Vertices whose residues do not sum to zero.
    pub fn unbalanced_vertices(&self, g: &StableGraph) -> Result<Vec<String>, CurveError> {
        let mut bad = Vec::new();
        for v in g.vertices() {
            if !self.vertex_sum(g, v)?.is_zero() {
                bad.push(v.clone());
            }
        }
        Ok(bad)
    }
}

/// Applies one move to a graph and its residues.
///
/// Expanding `v0` along `{h1, h2}` creates `h0` with `X_{h0} = X_{h1} + X_{h2}`
/// and replaces `X_{hi}` by `X_{hi} - X_{h0}`; `X_{-h0}` balances the new
/// vertex. When `h2 = -h1` the loop residues are kept and `X_{h0}` balances
/// `v0`. Contraction takes an edge in its own orientation as `h0`, applies
/// the inverse rule and checks that the merged vertex balances.
pub fn apply_move(
    g: &StableGraph,
    res: &ResidueAssignment,
    mv: &GraphMove,
) -> Result<(StableGraph, ResidueAssignment), CurveError> {
    match mv {
        GraphMove::Expand { vertex, first, second } => {
            let (g2, h0) = g.expand_vertex(vertex, first, second, None)?;
            let mut out = res.clone();
            let x1 = res.get(first)?;
            let x2 = res.get(second)?;
            let minus_h0 = h0.opposite().unwrap();
            if first.opposite().as_ref() == Some(second) {
                out.residues.insert(h0.clone(), x1.plus(x2)?.negated());
            } else {
                let x0 = x1.plus(x2)?;
                out.residues.insert(first.clone(), x1.minus(&x0)?);
                out.residues.insert(second.clone(), x2.minus(&x0)?);
                out.residues.insert(h0.clone(), x0);
            }
            let far = g2.terminal(&minus_h0)?.to_string();
            let mut rest = NCSeries::zero(res.alphabet.clone(), res.truncation);
            for h in g2.branches_at(&far).iter().filter(|h| **h != minus_h0) {
                rest = rest.plus(out.get(h)?)?;
            }
            out.residues.insert(minus_h0, rest.negated());
            Ok((g2, out))
        }
        GraphMove::Contract { edge } => {
            if matches!(edge, Branch::Edge { reversed: true, .. }) {
                return Err(CurveError::InvalidMove(format!("{edge}: contraction follows the edge orientation")));
            }
            if edge.edge_name().is_some_and(|n| Some(n) == g.loop_edge()) {
                return Err(CurveError::ShrinksLoop(edge.edge_name().unwrap().to_string()));
            }
            let head = g.terminal(edge)?.to_string();
            let others: Vec<Branch> = g.branches_at(&head).into_iter().filter(|h| h != edge).collect();
            let g1 = g.contract_edge(edge)?;
            if others.len() != 2 {
                return Err(CurveError::InvalidMove(format!("{head} is not trivalent")));
            }
            let mut out = res.clone();
            let x0 = res.get(edge)?.clone();
            out.residues.remove(edge);
            out.residues.remove(&edge.opposite().unwrap());
            if others[0].opposite().as_ref() != Some(&others[1]) {
                for h in &others {
                    out.residues.insert(h.clone(), res.get(h)?.plus(&x0)?);
                }
            }
            if !out.vertex_sum(&g1, &head)?.is_zero() {
                return Err(CurveError::InvalidMove(format!("residues at merged vertex {head} do not balance")));
            }
            Ok((g1, out))
        }
    }
}

/// Follows `moves` from the basic graph with `n_tails` tails.
pub fn residue_assignment(
    n_tails: u32,
    moves: &[GraphMove],
    truncation: u32,
) -> Result<(StableGraph, ResidueAssignment), CurveError> {
    let (mut g, mut res) = ResidueAssignment::delta0(n_tails, truncation)?;
    for mv in moves {
        (g, res) = apply_move(&g, &res, mv)?;
    }
    Ok((g, res))
}

/// Every move available at `g`: all expansions and the contractions of all
/// non-loop edges.
pub fn available_moves(g: &StableGraph) -> Vec<GraphMove> {
    let mut out = Vec::new();
    for v in g.vertices() {
        let at = g.branches_at(v);
        if at.len() < 4 {
            continue;
        }
        for (i, a) in at.iter().enumerate() {
            for b in &at[i + 1..] {
                out.push(GraphMove::Expand { vertex: v.clone(), first: a.clone(), second: b.clone() });
            }
        }
    }
    for (name, d) in g.edges() {
        if d.head != d.tail {
            out.push(GraphMove::Contract { edge: Branch::edge(name) });
        }
    }
    out
}
