//! Permutation operators: partially mapped crossover (PMX) and scramble
//! sub-list mutation (SSM).

use rand::seq::SliceRandom;
use rand::Rng;

/// PMX with random cut points.
pub fn pmx_crossover<R: Rng + ?Sized>(p1: &[u32], p2: &[u32], rng: &mut R) -> (Vec<u32>, Vec<u32>) {
    assert_eq!(p1.len(), p2.len(), "parents must have equal length");
    if p1.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let a = rng.gen_range(0..p1.len());
    let b = rng.gen_range(0..p1.len());
    pmx_with_cuts(p1, p2, a.min(b), a.max(b))
}

/// PMX with the segment `[k1, k2]` (0-based, inclusive). The first child takes
/// the second parent's segment and the first parent's remaining genes, each
/// conflict resolved through the segment mapping; the second child mirrors it.
pub fn pmx_with_cuts(p1: &[u32], p2: &[u32], k1: usize, k2: usize) -> (Vec<u32>, Vec<u32>) {
    assert_eq!(p1.len(), p2.len(), "parents must have equal length");
    assert!(k1 <= k2 && k2 < p1.len(), "cut points out of range");
    (pmx_child(p1, p2, k1, k2), pmx_child(p2, p1, k1, k2))
}

/// Child with `donor`'s segment and `base`'s genes elsewhere.
fn pmx_child(base: &[u32], donor: &[u32], k1: usize, k2: usize) -> Vec<u32> {
    let max = base.iter().copied().max().unwrap_or(0) as usize;
    // Position of each gene value in `donor`, or usize::MAX.
    let mut donor_pos = vec![usize::MAX; max + 1];
    for (i, &g) in donor.iter().enumerate() {
        if (g as usize) <= max {
            donor_pos[g as usize] = i;
        }
    }
    let in_segment = |g: u32| {
        let p = donor_pos.get(g as usize).copied().unwrap_or(usize::MAX);
        (k1..=k2).contains(&p)
    };
    let mut child = base.to_vec();
    child[k1..=k2].copy_from_slice(&donor[k1..=k2]);
    for i in (0..k1).chain(k2 + 1..base.len()) {
        let mut g = base[i];
        while in_segment(g) {
            g = base[donor_pos[g as usize]];
        }
        child[i] = g;
    }
    child
}

/// Shuffles the window `[a, b]` (0-based, inclusive) in place.
pub fn scramble_window<R: Rng + ?Sized>(p: &mut [u32], a: usize, b: usize, rng: &mut R) {
    assert!(a <= b && b < p.len(), "window out of range");
    p[a..=b].shuffle(rng);
}

/// Picks two positions less than `max_len` apart and shuffles the genes
/// between them.
pub fn scramble_mutation<R: Rng + ?Sized>(p: &[u32], max_len: usize, rng: &mut R) -> Vec<u32> {
    let mut out = p.to_vec();
    if p.len() < 2 || max_len < 2 {
        return out;
    }
    let a = rng.gen_range(0..p.len());
    let span = rng.gen_range(1..max_len);
    let b = (a + span).min(p.len() - 1);
    scramble_window(&mut out, a, b, rng);
    out
}
