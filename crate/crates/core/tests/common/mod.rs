#![allow(dead_code)]

//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the library's projection or gradient code.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

pub fn uniform_vec(r: &mut ChaCha20Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| lo + (hi - lo) * r.random::<f64>()).collect()
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Nearest point of a planar set (given by its membership test) to `z`,
/// by exhaustive search over a grid of `[lo, hi]²` with spacing `h`, then
/// local searches on ten-times finer grids around the incumbent.
pub fn grid_nearest(contains: impl Fn(f64, f64) -> bool, z: [f64; 2], lo: f64, hi: f64, h: f64, levels: usize) -> Option<[f64; 2]> {
    let steps = ((hi - lo) / h).round() as usize;
    let mut best: Option<([f64; 2], f64)> = None;
    let consider = |x: f64, y: f64, best: &mut Option<([f64; 2], f64)>| {
        if contains(x, y) {
            let d = (x - z[0]).powi(2) + (y - z[1]).powi(2);
            if best.is_none_or(|(_, bd)| d < bd) {
                *best = Some(([x, y], d));
            }
        }
    };
    for i in 0..=steps {
        let x = lo + i as f64 * h;
        for j in 0..=steps {
            consider(x, lo + j as f64 * h, &mut best);
        }
    }
    // keep re-centering the local window until the incumbent stops moving,
    // since the distance is flat along the boundary near the answer
    let mut h = h;
    for _ in 0..=levels {
        for _ in 0..10_000 {
            let (c, _) = best?;
            for i in -20..=20 {
                for j in -20..=20 {
                    consider(c[0] + i as f64 * h, c[1] + j as f64 * h, &mut best);
                }
            }
            if best?.0 == c {
                break;
            }
        }
        h /= 10.0;
    }
    best.map(|(p, _)| p)
}

/// Exact nearest point of the polygon `{x : ⟨a_i, x⟩ ≤ p_i}` to `z`, by
/// enumerating every candidate an optimum can be: `z` itself, the foot of
/// the perpendicular on each edge line, and each pairwise vertex. The
/// nearest feasible candidate wins.
pub fn polygon_nearest(cons: &[([f64; 2], f64)], z: [f64; 2]) -> Option<[f64; 2]> {
    let feasible = |p: [f64; 2]| cons.iter().all(|(a, b)| a[0] * p[0] + a[1] * p[1] <= b + 1e-12);
    let mut cands = vec![z];
    for (a, b) in cons {
        let nn = a[0] * a[0] + a[1] * a[1];
        let t = (a[0] * z[0] + a[1] * z[1] - b) / nn;
        cands.push([z[0] - t * a[0], z[1] - t * a[1]]);
    }
    for (i, (a1, b1)) in cons.iter().enumerate() {
        for (a2, b2) in &cons[i + 1..] {
            let det = a1[0] * a2[1] - a1[1] * a2[0];
            if det.abs() < 1e-14 {
                continue;
            }
            cands.push([(b1 * a2[1] - b2 * a1[1]) / det, (a1[0] * b2 - a2[0] * b1) / det]);
        }
    }
    cands
        .into_iter()
        .filter(|&p| feasible(p))
        .min_by(|p, q| dist(p, &z).total_cmp(&dist(q, &z)))
}

/// Draws up to `want` points of `{y : f(y) < level}` by rejection from the
/// box `[lo, hi]^n`, giving up after `max_tries` proposals.
pub fn strict_level_samples(
    f: impl Fn(&[f64]) -> f64,
    level: f64,
    lo: &[f64],
    hi: &[f64],
    r: &mut ChaCha20Rng,
    want: usize,
    max_tries: usize,
) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for _ in 0..max_tries {
        if out.len() >= want {
            break;
        }
        let y: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| a + (b - a) * r.random::<f64>()).collect();
        if f(&y) < level {
            out.push(y);
        }
    }
    out
}

/// Central differences with step `h`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|j| {
            y[j] = x[j] + h;
            let fp = f(&y);
            y[j] = x[j] - h;
            let fm = f(&y);
            y[j] = x[j];
            (fp - fm) / (2.0 * h)
        })
        .collect()
}

pub fn cosine(x: &[f64], y: &[f64]) -> f64 {
    dot(x, y) / (norm(x) * norm(y))
}
