//! Deterministic RNG streams. Every randomized task derives its own seed
//! from a master seed plus a path of integer ids, so results never depend on
//! thread scheduling or evaluation order.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::Point;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Collision-resistant enough seed for a task identified by `path` under
/// `master` (e.g. [motif_index, cell_id, t_index]).
pub fn stream_seed(master: u64, path: &[u64]) -> u64 {
    let mut s = splitmix(master ^ 0x6a09e667f3bcc908);
    for &p in path {
        s = splitmix(s ^ splitmix(p.wrapping_add(0x243f6a8885a308d3)));
    }
    s
}

pub fn stream_rng(master: u64, path: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, path))
}

/// Uniform sample from the closed d-ball of radius `r` (rejection from the
/// bounding cube; unused axes stay zero).
pub fn sample_in_ball(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Point {
    loop {
        let mut p = [0.0; 3];
        let mut n2 = 0.0;
        for q in p.iter_mut().take(dim) {
            let x: f64 = rng.random::<f64>() * 2.0 - 1.0;
            *q = x;
            n2 += x * x;
        }
        if n2 <= 1.0 {
            return [p[0] * r, p[1] * r, p[2] * r];
        }
    }
}
