//! Seeded random trivalent graphs, moduli and reduced paths.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rug::Rational;

use super::graph::{Branch, Modulus, StableGraph};
use super::residues::GraphMove;

/// Random expansions taking the basic graph with `n_tails ≥ 2` tails to a
/// trivalent graph.
pub fn random_expansions<R: Rng>(rng: &mut R, n_tails: u32) -> (StableGraph, Vec<GraphMove>) {
    let mut g = StableGraph::delta0(n_tails);
    let mut moves = Vec::new();
    loop {
        let Some(v) = g.vertices().find(|v| g.branches_at(v).len() >= 4).cloned() else {
            return (g, moves);
        };
        let at = g.branches_at(&v);
        let pair: Vec<&Branch> = at.choose_multiple(rng, 2).collect();
        g = g.expand_vertex(&v, pair[0], pair[1], None).expect("valid expansion").0;
        moves.push(GraphMove::Expand { vertex: v, first: pair[0].clone(), second: pair[1].clone() });
    }
}

pub fn random_trivalent_graph<R: Rng>(rng: &mut R, n_tails: u32) -> StableGraph {
    random_expansions(rng, n_tails).0
}

/// Assigns pairwise distinct small rationals to every branch.
pub fn random_moduli<R: Rng>(rng: &mut R, g: &mut StableGraph) {
    let mut used = BTreeSet::new();
    for h in g.branches() {
        let x = loop {
            let q = Rational::from((rng.gen_range(-30i64..=30), rng.gen_range(1i64..=7)));
            if used.insert(q.clone()) {
                break q;
            }
        };
        g.set_modulus(&h, Modulus::Finite(x)).expect("known branch");
    }
}

/// A reduced path of length `1..=max_len` with `h(l) ≠ -h(1)`, so the two
/// fixed points stay apart at `y = 0` when moduli are distinct.
pub fn random_reduced_path<R: Rng>(rng: &mut R, g: &StableGraph, max_len: usize) -> Vec<Branch> {
    let oriented: Vec<Branch> = g.branches().into_iter().filter(|h| h.edge_name().is_some()).collect();
    loop {
        let len = rng.gen_range(1..=max_len);
        let mut path = vec![oriented.choose(rng).unwrap().clone()];
        while path.len() < len {
            let last = path.last().unwrap();
            let v = g.terminal(last).unwrap();
            let back = last.opposite();
            let next: Vec<Branch> = g.outgoing(v).into_iter().filter(|h| Some(h) != back.as_ref()).collect();
            match next.choose(rng) {
                Some(h) => path.push(h.clone()),
                None => break,
            }
        }
        if path.len() == 1 || path.last().unwrap().opposite().as_ref() != Some(&path[0]) {
            return path;
        }
    }
}
