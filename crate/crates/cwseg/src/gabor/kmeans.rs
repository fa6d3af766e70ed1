//! Seeded 2-means (Lloyd's algorithm) over per-pixel feature vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centers: [Vec<f64>; 2],
    /// Within-cluster sum of squares after each iteration; non-increasing.
    pub objective_history: Vec<f64>,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs 2-means until assignments stop changing or `max_iter` passes.
/// Returns None when no two distinct points exist to seed the centers.
pub fn kmeans2(points: &[Vec<f64>], seed: u64, max_iter: usize) -> Option<KMeansResult> {
    if points.len() < 2 {
        return None;
    }
    let dim = points[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let first = rng.random_range(0..points.len());
    let mut second = None;
    for _ in 0..64 {
        let cand = rng.random_range(0..points.len());
        if points[cand] != points[first] {
            second = Some(cand);
            break;
        }
    }
    // random probing failed; fall back to a deterministic scan
    let second = second.or_else(|| (0..points.len()).find(|&i| points[i] != points[first]))?;

    let mut centers = [points[first].clone(), points[second].clone()];
    let mut assignments = vec![0usize; points.len()];
    let mut objective_history = Vec::new();

    for _ in 0..max_iter {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let a = if dist2(p, &centers[0]) <= dist2(p, &centers[1]) {
                0
            } else {
                1
            };
            if assignments[i] != a {
                assignments[i] = a;
                changed = true;
            }
        }

        let mut sums = [vec![0.0; dim], vec![0.0; dim]];
        let mut counts = [0usize; 2];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..2 {
            if counts[c] > 0 {
                for (slot, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *slot = s / counts[c] as f64;
                }
            }
            // an empty cluster keeps its previous center
        }

        let objective: f64 = points
            .iter()
            .zip(&assignments)
            .map(|(p, &a)| dist2(p, &centers[a]))
            .sum();
        objective_history.push(objective);

        if !changed && objective_history.len() > 1 {
            break;
        }
    }

    Some(KMeansResult {
        assignments,
        centers,
        objective_history,
    })
}
