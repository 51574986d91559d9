//! Shared generators for integration tests.

use crystalfp::geometry::{Lattice, PeriodicSet};
use crystalfp::linalg::Point;
use crystalfp::rng::stream_rng;
use rand::Rng;

/// Random full-rank set: near-identity basis, uniform motif, retried until
/// the packing radius is comfortably positive.
pub fn random_set(dim: usize, motif_len: usize, seed: u64) -> PeriodicSet {
    let mut rng = stream_rng(seed, &[dim as u64, motif_len as u64]);
    loop {
        let mut cols = [[0.0; 3]; 3];
        for (c, col) in cols.iter_mut().enumerate().take(dim) {
            for (ax, v) in col.iter_mut().enumerate().take(dim) {
                let base = if ax == c { 1.0 } else { 0.0 };
                *v = base + 0.25 * (rng.random::<f64>() - 0.5);
            }
        }
        let Ok(lat) = Lattice::new(dim, &cols[..dim]) else {
            continue;
        };
        let mut motif: Vec<Point> = Vec::with_capacity(motif_len);
        for _ in 0..motif_len {
            let mut p = [0.0; 3];
            for v in p.iter_mut().take(dim) {
                *v = rng.random::<f64>();
            }
            motif.push(p);
        }
        let Ok(set) = PeriodicSet::new(lat, motif, None) else {
            continue;
        };
        let scale = set.unit_cell_volume().powf(1.0 / dim as f64);
        if set.packing_radius() > 0.08 * scale / motif_len as f64 {
            return set;
        }
    }
}

/// The integer lattice in `dim` dimensions with a single-point motif.
pub fn integer_lattice(dim: usize) -> PeriodicSet {
    let cols: Vec<Point> = (0..dim)
        .map(|c| {
            let mut v = [0.0; 3];
            v[c] = 1.0;
            v
        })
        .collect();
    let lat = Lattice::new(dim, &cols).unwrap();
    PeriodicSet::new(lat, vec![[0.0; 3]], None).unwrap()
}

/// 1D set scale*Z + offsets.
#[allow(dead_code)]
pub fn line_set(scale: f64, offsets: &[f64]) -> PeriodicSet {
    let lat = Lattice::new(1, &[[scale, 0.0, 0.0]]).unwrap();
    let motif: Vec<Point> = offsets.iter().map(|&x| [x / scale, 0.0, 0.0]).collect();
    PeriodicSet::new(lat, motif, None).unwrap()
}
