//! Higher-order Voronoi zone complexes.
//!
//! For a motif point `a` of a periodic set, the k-th zone is the region
//! where `a` is exactly the k-th closest point of the set. Zones are unions
//! of convex cells of the bisector arrangement: a cell separated from `a` by
//! exactly `j` bisectors lies in zone `j+1` (we call `j` the cell's depth).
//! Cells are discovered by a breadth-first walk that flips one facet
//! bisector at a time, starting from the Voronoi cell of `a`; a straight
//! segment from `a` into any target cell crosses bisectors one by one with
//! depth increasing monotonically, so expanding cells of depth `<= kmax - 2`
//! discovers every cell of depth `<= kmax - 1`.
//!
//! Neighbor enumeration is truncated at the cutoff radius `s`: any point
//! within distance `R ((j+1)^(1/d) + 1)` of `a` has its `j+1` nearest
//! neighbors within `s` of `a`, and every genuine cell of depth `j` lies
//! inside that ball, so truncation never misclassifies a kept cell.

mod clip;

pub use clip::{ClipOutcome, Halfspace, PlaneId};

use std::collections::HashMap;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::geometry::PeriodicSet;
use crate::linalg::{self, Point};
use crate::rng;

use clip::CellGeom;

/// One convex cell of a zone complex. `vertices` are CCW-ordered in 2D and
/// lexicographically sorted in 1D/3D; `halfspaces` are the facet planes
/// (unit normal, offset) whose intersection is the cell.
#[derive(Clone, Debug)]
pub struct ConvexCell {
    pub depth: usize,
    pub volume: f64,
    pub vertices: Vec<Point>,
    pub halfspaces: Vec<Halfspace>,
    pub bbox_lo: Point,
    pub bbox_hi: Point,
    /// Sorted neighbor indices whose bisector this cell violates; its length
    /// equals `depth`.
    pub flipped: Vec<u32>,
}

impl ConvexCell {
    /// Whether `p` satisfies every facet halfspace within `slack`.
    pub fn contains(&self, p: Point, slack: f64) -> bool {
        self.halfspaces.iter().all(|h| h.signed(p) <= slack)
    }

    /// Centroid of the vertex set; interior by convexity.
    pub fn vertex_centroid(&self) -> Point {
        let mut c = [0.0; 3];
        for v in &self.vertices {
            c = linalg::add(c, *v);
        }
        linalg::scale(c, 1.0 / self.vertices.len() as f64)
    }
}

/// All zone cells of one motif point up to belt `kmax`, sorted by
/// (depth, flipped) so cell indices are stable across runs.
#[derive(Clone, Debug)]
pub struct ZoneComplex {
    pub motif_index: usize,
    pub center: Point,
    pub kmax: usize,
    pub cells: Vec<ConvexCell>,
    pub cutoff: f64,
    pub clip_halfwidth: f64,
    /// Geometric thickness below which vertices merge and cells collapse.
    pub eps_geom: f64,
}

impl ZoneComplex {
    pub fn belt(&self, k: usize) -> impl Iterator<Item = &ConvexCell> {
        assert!(k >= 1 && k <= self.kmax, "belt index out of range");
        self.cells.iter().filter(move |c| c.depth == k - 1)
    }
}

/// Neighbor enumeration cutoff `s = 4 R (kmax+1)^(1/d)`: twice the radius
/// bound `2 R (kmax+1)^(1/d)` on the first kmax+1 zones, so every bisector
/// that can bound a kept cell is enumerated.
pub fn cutoff_radius(set: &PeriodicSet, kmax: usize, covering: f64) -> f64 {
    4.0 * covering * ((kmax + 1) as f64).powf(1.0 / set.dim() as f64)
}

/// Multiplicity data for one motif point: the number `m` of lattice Voronoi
/// domains whose closure contains it, and the positions of its translate
/// class inside the domain of the origin (lex-smallest first).
#[derive(Clone, Debug)]
pub struct MultiplicityEntry {
    pub m: usize,
    pub is_boundary: bool,
    /// Lex-smallest member of the translate class in the origin domain.
    pub representative: Point,
    pub class_members: Vec<Point>,
}

#[derive(Clone, Debug)]
pub struct MultiplicityTable {
    pub tol: f64,
    pub entries: Vec<MultiplicityEntry>,
}

/// Default boundary tolerance for multiplicity decisions.
pub fn default_multiplicity_tol(set: &PeriodicSet) -> f64 {
    1e-7 * set.covering_radius_safe()
}

/// Computes m(p) for every motif point: the count of lattice points q with
/// |p - q| <= min_q' |p - q'| + tol.
pub fn multiplicity(set: &PeriodicSet, tol: Option<f64>) -> MultiplicityTable {
    let tol = tol.unwrap_or_else(|| default_multiplicity_tol(set));
    let red = set.reduced_lattice();
    let red_inv = red.inverse();
    let dim = set.dim();
    let mut heights = [1.0; 3];
    for ax in 0..dim {
        heights[ax] = 1.0 / linalg::norm(red_inv.row(ax));
    }
    let mut entries = Vec::with_capacity(set.motif_len());
    for i in 0..set.motif_len() {
        let p = set.position(i);
        // Nearest lattice point distance, then count all within tol of it.
        let dmin = set.torus_distance_cart(p, [0.0; 3]);
        let reach = dmin + tol;
        let f = red_inv.mul_vec(p);
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for ax in 0..dim {
            let w = reach / heights[ax] + 1.0;
            lo[ax] = (f[ax] - w).floor() as i64;
            hi[ax] = (f[ax] + w).ceil() as i64;
        }
        let mut members: Vec<Point> = Vec::new();
        for n0 in lo[0]..=hi[0] {
            for n1 in lo[1]..=hi[1] {
                for n2 in lo[2]..=hi[2] {
                    let q = red.cartesian([n0 as f64, n1 as f64, n2 as f64]);
                    if linalg::dist(p, q) <= reach {
                        members.push(linalg::sub(p, q));
                    }
                }
            }
        }
        members.sort_by(|a, b| {
            a[0].total_cmp(&b[0])
                .then(a[1].total_cmp(&b[1]))
                .then(a[2].total_cmp(&b[2]))
        });
        let m = members.len();
        debug_assert!(m >= 1);
        entries.push(MultiplicityEntry {
            m,
            is_boundary: m >= 2,
            representative: members[0],
            class_members: members,
        });
    }
    MultiplicityTable { tol, entries }
}

/// Builds the zone complex of motif point `motif_index` with belts 1..=kmax,
/// estimating the covering radius internally.
pub fn build_zones(set: &PeriodicSet, motif_index: usize, kmax: usize) -> Result<ZoneComplex> {
    build_zones_with_covering(set, motif_index, kmax, set.covering_radius_safe())
}

/// As `build_zones` but with a caller-supplied covering radius upper bound
/// (callers computing many complexes estimate it once).
pub fn build_zones_with_covering(
    set: &PeriodicSet,
    motif_index: usize,
    kmax: usize,
    covering_upper: f64,
) -> Result<ZoneComplex> {
    if kmax < 1 {
        return Err(Error::InvalidConfig("kmax must be at least 1".into()));
    }
    if motif_index >= set.motif_len() {
        return Err(Error::InvalidConfig(format!(
            "motif index {motif_index} out of range"
        )));
    }
    let dim = set.dim();
    let a = set.position(motif_index);
    let s = cutoff_radius(set, kmax, covering_upper);
    let eps = 1e-9 * s;

    // Neighbors sorted by distance; the zero-distance entry is `a` itself.
    let nbrs_all = set.points_within(a, s);
    let mut nbrs = Vec::with_capacity(nbrs_all.len().saturating_sub(1));
    for cp in nbrs_all {
        if cp.distance > eps {
            nbrs.push(cp);
        }
    }
    if nbrs.is_empty() {
        return Err(Error::DegenerateArrangement(
            "no neighbors within the cutoff radius".into(),
        ));
    }
    let bisectors: Vec<Halfspace> = nbrs
        .iter()
        .map(|cp| Halfspace::bisector(a, cp.position))
        .collect();

    // Clips the box by the oriented bisector set of `flips`. Bisectors are
    // processed nearest first; once the next plane sits farther than the
    // cell's vertex radius it cannot cut, and all later ones are satisfied.
    let build_cell = |flips: &[u32]| -> Option<CellGeom> {
        let mut cell = CellGeom::clip_box(dim, a, s);
        for &fi in flips {
            match cell.clip(
                bisectors[fi as usize].flipped(),
                PlaneId::Bisector(fi),
                eps,
            ) {
                ClipOutcome::Empty => return None,
                _ => {}
            }
        }
        let mut rho = cell.max_dist(a);
        let (mut blo, mut bhi) = cell.bbox();
        for (i, hs) in bisectors.iter().enumerate() {
            if nbrs[i].distance * 0.5 > rho + eps {
                break;
            }
            if flips.binary_search(&(i as u32)).is_ok() {
                continue;
            }
            // Interval bound of n.x over the bbox; skip planes that cannot
            // reach the cell.
            let mut smax = -hs.offset;
            for ax in 0..3 {
                smax += if hs.normal[ax] >= 0.0 {
                    hs.normal[ax] * bhi[ax]
                } else {
                    hs.normal[ax] * blo[ax]
                };
            }
            if smax <= eps {
                continue;
            }
            match cell.clip(*hs, PlaneId::Bisector(i as u32), eps) {
                ClipOutcome::Empty => return None,
                ClipOutcome::Cut => {
                    rho = cell.max_dist(a);
                    let bb = cell.bbox();
                    blo = bb.0;
                    bhi = bb.1;
                }
                ClipOutcome::Unchanged => {}
            }
        }
        Some(cell)
    };

    let start = build_cell(&[]).ok_or_else(|| {
        Error::DegenerateArrangement("Voronoi cell of the center collapsed".into())
    })?;

    let mut visited: HashMap<Vec<u32>, CellGeom> = HashMap::new();
    let mut queue: VecDeque<Vec<u32>> = VecDeque::new();
    visited.insert(Vec::new(), start);
    queue.push_back(Vec::new());
    while let Some(key) = queue.pop_front() {
        if key.len() + 2 > kmax {
            continue; // cells of depth kmax-1 need no expansion
        }
        let facets = visited[&key].facets();
        for (id, _) in facets {
            let bi = match id {
                PlaneId::Bisector(i) => i,
                PlaneId::Wall(_) => continue,
            };
            if key.binary_search(&bi).is_ok() {
                continue; // only ascend in depth
            }
            let mut nkey = key.clone();
            let pos = nkey.binary_search(&bi).unwrap_err();
            nkey.insert(pos, bi);
            if visited.contains_key(&nkey) {
                continue;
            }
            if let Some(geom) = build_cell(&nkey) {
                visited.insert(nkey.clone(), geom);
                queue.push_back(nkey);
            }
        }
    }

    let mut keyed: Vec<(Vec<u32>, CellGeom)> = visited.into_iter().collect();
    keyed.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then(a.0.cmp(&b.0)));
    let mut cells = Vec::with_capacity(keyed.len());
    for (flips, geom) in keyed {
        let volume = geom.volume();
        let extent = geom.max_dist(a);
        // Slivers at the merge tolerance carry no measurable volume.
        if volume <= 2.0 * eps * extent.powi(dim as i32 - 1) {
            continue;
        }
        let (bbox_lo, bbox_hi) = geom.bbox();
        cells.push(ConvexCell {
            depth: flips.len(),
            volume,
            vertices: geom.vertex_list(eps),
            halfspaces: geom.facets().into_iter().map(|(_, h)| h).collect(),
            bbox_lo,
            bbox_hi,
            flipped: flips,
        });
    }
    let zc = ZoneComplex {
        motif_index,
        center: a,
        kmax,
        cells,
        cutoff: s,
        clip_halfwidth: s,
        eps_geom: eps,
    };
    for k in 1..=kmax {
        if zc.belt(k).next().is_none() {
            return Err(Error::DegenerateArrangement(format!(
                "belt {k} came out empty"
            )));
        }
    }
    Ok(zc)
}

/// `build_zones` with an explicit recovery path: on a degenerate
/// arrangement the motif is jittered by 1e-7 x packing radius with a fixed
/// seed and the build is retried once. The flag reports whether the
/// fallback fired; it is never silent.
pub fn build_zones_with_fallback(
    set: &PeriodicSet,
    motif_index: usize,
    kmax: usize,
    jitter_seed: u64,
) -> Result<(ZoneComplex, bool)> {
    build_zones_with_fallback_covering(
        set,
        motif_index,
        kmax,
        set.covering_radius_safe(),
        jitter_seed,
    )
}

/// As `build_zones_with_fallback` but with a caller-cached covering radius
/// upper bound.
pub fn build_zones_with_fallback_covering(
    set: &PeriodicSet,
    motif_index: usize,
    kmax: usize,
    covering_upper: f64,
    jitter_seed: u64,
) -> Result<(ZoneComplex, bool)> {
    match build_zones_with_covering(set, motif_index, kmax, covering_upper) {
        Ok(zc) => Ok((zc, false)),
        Err(Error::DegenerateArrangement(_)) => {
            let amp = 1e-7 * set.packing_radius();
            let dim = set.dim();
            let mut rng = rng::stream_rng(jitter_seed, &[set.motif_len() as u64]);
            let mut positions = Vec::with_capacity(set.motif_len());
            for i in 0..set.motif_len() {
                positions.push(linalg::add(
                    set.position(i),
                    rng::sample_in_ball(&mut rng, dim, amp),
                ));
            }
            let jittered = PeriodicSet::from_cartesian(
                set.lattice().clone(),
                &positions,
                set.labels().map(|l| l.to_vec()),
            )?;
            // The jitter moves the covering radius by at most its own
            // amplitude; widen the cached bound accordingly.
            let zc = build_zones_with_covering(
                &jittered,
                motif_index,
                kmax,
                covering_upper + amp,
            )?;
            Ok((zc, true))
        }
        Err(e) => Err(e),
    }
}

/// Total volume of zone `k` (cells of depth k-1), exact from the cell
/// geometry.
pub fn zone_volume(zc: &ZoneComplex, k: usize) -> f64 {
    zc.belt(k).map(|c| c.volume).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Lattice;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn set_2d(cols: [[f64; 2]; 2], motif: &[[f64; 2]]) -> PeriodicSet {
        let lat = Lattice::new(
            2,
            &[[cols[0][0], cols[0][1], 0.0], [cols[1][0], cols[1][1], 0.0]],
        )
        .unwrap();
        let pts: Vec<Point> = motif.iter().map(|p| [p[0], p[1], 0.0]).collect();
        PeriodicSet::new(lat, pts, None).unwrap()
    }

    fn integer_line(motif: &[f64]) -> PeriodicSet {
        let lat = Lattice::new(1, &[[1.0, 0.0, 0.0]]).unwrap();
        let pts: Vec<Point> = motif.iter().map(|&x| [x, 0.0, 0.0]).collect();
        PeriodicSet::new(lat, pts, None).unwrap()
    }

    /// A random well-separated 2D set used by the oracle and tiling tests.
    fn random_2d(seed: u64, motif_len: usize) -> PeriodicSet {
        let mut rng = stream_rng(seed, &[motif_len as u64]);
        loop {
            let cols = [
                [1.0 + 0.4 * rng.random::<f64>(), 0.4 * (rng.random::<f64>() - 0.5)],
                [0.4 * (rng.random::<f64>() - 0.5), 1.0 + 0.4 * rng.random::<f64>()],
            ];
            let mut motif: Vec<[f64; 2]> = vec![[0.0, 0.0]; 1];
            while motif.len() < motif_len {
                motif.push([rng.random::<f64>(), rng.random::<f64>()]);
            }
            let set = set_2d(cols, &motif);
            if set.packing_radius() > 0.1 {
                return set;
            }
        }
    }

    #[test]
    fn cutoff_radius_examples() {
        let z3 = PeriodicSet::new(
            Lattice::new(3, &[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap(),
            vec![[0.0; 3]],
            None,
        )
        .unwrap();
        let r3 = 3f64.sqrt() / 2.0;
        assert!((cutoff_radius(&z3, 5, r3) - 6.294690380529889).abs() < 1e-12);

        let z1 = integer_line(&[0.0]);
        assert!((cutoff_radius(&z1, 3, 0.5) - 8.0).abs() < 1e-12);

        let z2 = set_2d([[1.0, 0.0], [0.0, 1.0]], &[[0.0, 0.0]]);
        let r2 = 2f64.sqrt() / 2.0;
        assert!((cutoff_radius(&z2, 1, r2) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn square_lattice_first_belt_is_the_unit_square() {
        let set = set_2d([[1.0, 0.0], [0.0, 1.0]], &[[0.0, 0.0]]);
        let zc = build_zones(&set, 0, 1).unwrap();
        assert_eq!(zc.cells.len(), 1);
        let cell = &zc.cells[0];
        assert_eq!(cell.depth, 0);
        assert!((cell.volume - 1.0).abs() < 1e-12);
        assert_eq!(cell.vertices.len(), 4);
        for v in &cell.vertices {
            assert!((v[0].abs() - 0.5).abs() < 1e-12);
            assert!((v[1].abs() - 0.5).abs() < 1e-12);
        }
        assert_eq!(cell.halfspaces.len(), 4);
        assert!(cell.contains([0.0; 3], 0.0));
        assert!(!cell.contains([0.7, 0.0, 0.0], 1e-9));
    }

    #[test]
    fn square_lattice_belts_each_cover_one_cell_volume() {
        let set = set_2d([[1.0, 0.0], [0.0, 1.0]], &[[0.0, 0.0]]);
        let zc = build_zones(&set, 0, 6).unwrap();
        for k in 1..=6 {
            assert!(
                (zone_volume(&zc, k) - 1.0).abs() < 1e-6,
                "belt {k} volume {}",
                zone_volume(&zc, k)
            );
        }
    }

    #[test]
    fn integer_line_zone_intervals_are_exact() {
        let set = integer_line(&[0.0]);
        let zc = build_zones(&set, 0, 3).unwrap();
        // Belt k occupies [-k/2, -(k-1)/2] and [(k-1)/2, k/2].
        for k in 1..=3usize {
            let mut ivs: Vec<(f64, f64)> =
                zc.belt(k).map(|c| (c.vertices[0][0], c.vertices[1][0])).collect();
            ivs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let h = 0.5 * (k as f64);
            let l = 0.5 * (k as f64 - 1.0);
            if k == 1 {
                assert_eq!(ivs.len(), 1);
                assert!((ivs[0].0 + 0.5).abs() < 1e-12 && (ivs[0].1 - 0.5).abs() < 1e-12);
            } else {
                assert_eq!(ivs.len(), 2);
                assert!((ivs[0].0 + h).abs() < 1e-12 && (ivs[0].1 + l).abs() < 1e-12);
                assert!((ivs[1].0 - l).abs() < 1e-12 && (ivs[1].1 - h).abs() < 1e-12);
            }
            assert!((zone_volume(&zc, k) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cell_depth_matches_neighbor_rank_at_centroid() {
        for seed in 0..3u64 {
            let set = random_2d(40 + seed, 3);
            for mi in 0..set.motif_len() {
                let zc = build_zones(&set, mi, 4).unwrap();
                for cell in &zc.cells {
                    let c = cell.vertex_centroid();
                    let nn = set.nearest_neighbors(c, cell.depth + 1);
                    let last = &nn[cell.depth];
                    // The center must be the (depth+1)-th nearest point.
                    assert!(
                        linalg::dist(last.position, zc.center) < 1e-7,
                        "seed {seed} motif {mi} depth {} centroid {c:?}",
                        cell.depth
                    );
                }
            }
        }
    }

    #[test]
    fn zones_tile_the_unit_cell() {
        // Hexagonal lattice: heavily tied arrangement, exact volume 3^0.5/2.
        let hex = set_2d([[1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]], &[[0.0, 0.0]]);
        let volu = hex.unit_cell_volume();
        let zc = build_zones(&hex, 0, 4).unwrap();
        for k in 1..=4 {
            assert!((zone_volume(&zc, k) - volu).abs() < 1e-6 * volu);
        }

        for seed in 0..5u64 {
            let set = random_2d(seed, 1 + (seed as usize % 3));
            let volu = set.unit_cell_volume();
            let complexes: Vec<ZoneComplex> = (0..set.motif_len())
                .map(|mi| build_zones(&set, mi, 3).unwrap())
                .collect();
            for k in 1..=3 {
                let total: f64 = complexes.iter().map(|zc| zone_volume(zc, k)).sum();
                assert!(
                    (total - volu).abs() < 1e-6 * volu,
                    "seed {seed} belt {k}: {total} vs {volu}"
                );
            }
        }
    }

    #[test]
    fn interleaved_square_lattices_split_every_zone_evenly() {
        let set = set_2d([[1.0, 0.0], [0.0, 1.0]], &[[0.0, 0.0], [0.5, 0.5]]);
        for mi in 0..2 {
            let zc = build_zones(&set, mi, 3).unwrap();
            for k in 1..=3 {
                assert!((zone_volume(&zc, k) - 0.5).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn multiplicity_counts_equidistant_lattice_points() {
        let set = set_2d(
            [[1.0, 0.0], [0.0, 1.0]],
            &[[0.0, 0.0], [0.5, 0.5], [0.25, 0.25], [0.5, 0.25]],
        );
        let table = multiplicity(&set, None);
        let ms: Vec<usize> = table.entries.iter().map(|e| e.m).collect();
        assert_eq!(ms, vec![1, 4, 1, 2]);
        for e in &table.entries {
            assert_eq!(e.class_members.len(), e.m);
            assert_eq!(e.is_boundary, e.m >= 2);
            assert_eq!(e.representative, e.class_members[0]);
        }
        // The center point sits at distance 2^0.5/2 from all four cell
        // corners; its class is the four diagonal translates.
        let center = &table.entries[1];
        for p in &center.class_members {
            assert!((linalg::norm(*p) - 2f64.sqrt() / 2.0).abs() < 1e-12);
        }
        // The edge point's lex-smallest translate is (-0.5, 0.25).
        let edge = &table.entries[3];
        assert!((edge.representative[0] + 0.5).abs() < 1e-12);
        assert!((edge.representative[1] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn fallback_is_not_triggered_on_generic_sets() {
        let set = random_2d(99, 2);
        let (zc, jittered) = build_zones_with_fallback(&set, 0, 3, 7).unwrap();
        assert!(!jittered);
        assert!(zc.cells.iter().all(|c| c.depth < 3));
        assert!(zc.cells.iter().all(|c| c.flipped.len() == c.depth));
    }
}
