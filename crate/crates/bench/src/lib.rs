//! Fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tateperiods::curves::random::{random_expansions, random_moduli};
use tateperiods::curves::residue_assignment;
use tateperiods::{ResidueAssignment, StableGraph};

/// A seeded trivalent graph with moduli and its residues at `truncation`.
pub fn sample_graph(seed: u64, tails: u32, truncation: u32) -> (StableGraph, ResidueAssignment) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (_, moves) = random_expansions(&mut rng, tails);
    let (mut g, res) = residue_assignment(tails, &moves, truncation).expect("random moves are valid");
    random_moduli(&mut rng, &mut g);
    (g, res)
}
