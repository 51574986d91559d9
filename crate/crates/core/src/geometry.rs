//! Lattices and periodic point sets.
//!
//! A periodic set is a lattice (d independent basis vectors, d in 1..=3)
//! together with a motif of fractional points in the half-open unit cell.
//! Construction canonicalizes the motif: coordinates are wrapped into
//! [0, 1) and points that coincide modulo the lattice are rejected, so every
//! orbit of the lattice action is represented exactly once.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Point};

/// Relative determinant threshold below which a basis counts as singular.
pub const SINGULARITY_REL: f64 = 1e-12;

/// Totally ordered f64 key for heaps. Never holds NaN here.
struct TotalF64(f64);

impl PartialEq for TotalF64 {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for TotalF64 {}
impl PartialOrd for TotalF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for TotalF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// A full-rank lattice in dimension 1..=3. Basis vectors are the leading
/// columns of a padded 3x3 matrix; the inverse and cell volume are cached.
#[derive(Clone, Debug)]
pub struct Lattice {
    dim: usize,
    basis: Mat3,
    inv: Mat3,
    volume: f64,
}

impl Lattice {
    pub fn new(dim: usize, columns: &[Point]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if columns.len() != dim {
            return Err(Error::InvalidConfig(format!(
                "expected {dim} basis columns, got {}",
                columns.len()
            )));
        }
        let basis = Mat3::pad(dim, columns);
        let det = basis.det();
        let mut norm_prod = 1.0;
        for c in columns {
            norm_prod *= linalg::norm(*c);
        }
        if !det.is_finite() || det.abs() <= SINGULARITY_REL * norm_prod {
            return Err(Error::SingularBasis { det });
        }
        let inv = basis.inverse().ok_or(Error::SingularBasis { det })?;
        Ok(Lattice {
            dim,
            basis,
            inv,
            volume: det.abs(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &Mat3 {
        &self.basis
    }

    pub fn inverse(&self) -> &Mat3 {
        &self.inv
    }

    pub fn column(&self, i: usize) -> Point {
        self.basis.col[i]
    }

    /// Unit cell volume |det B| (length in 1D, area in 2D).
    pub fn unit_cell_volume(&self) -> f64 {
        self.volume
    }

    pub fn cartesian(&self, frac: Point) -> Point {
        self.basis.mul_vec(frac)
    }

    pub fn fractional(&self, cart: Point) -> Point {
        self.inv.mul_vec(cart)
    }

    pub fn min_column_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| linalg::norm(self.basis.col[i]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_column_norm(&self) -> f64 {
        (0..self.dim)
            .map(|i| linalg::norm(self.basis.col[i]))
            .fold(0.0, f64::max)
    }

    /// Shortest-vector style basis reduction. Dimension 2 runs Lagrange
    /// reduction to the exact minimum; dimension 3 runs greedy pairwise
    /// size reduction until stable. Returns the reduced lattice plus the
    /// unimodular column transform U with B_red = B * U.
    pub fn reduced(&self) -> (Lattice, [[i64; 3]; 3]) {
        let mut cols = self.basis.col;
        // U starts as identity; column operations mirror the basis ops.
        let mut u = [[0i64; 3]; 3];
        for (i, r) in u.iter_mut().enumerate() {
            r[i] = 1;
        }
        let d = self.dim;
        if d >= 2 {
            loop {
                let mut changed = false;
                // Order columns by norm, shortest first.
                let mut order: Vec<usize> = (0..d).collect();
                order.sort_by(|&a, &b| {
                    linalg::norm_sq(cols[a]).total_cmp(&linalg::norm_sq(cols[b]))
                });
                for oi in 0..d {
                    for oj in 0..d {
                        if oi == oj {
                            continue;
                        }
                        let (i, j) = (order[oi], order[oj]);
                        let denom = linalg::norm_sq(cols[i]);
                        if denom == 0.0 {
                            continue;
                        }
                        let mu = (linalg::dot(cols[j], cols[i]) / denom).round();
                        if mu == 0.0 {
                            continue;
                        }
                        let cand = linalg::sub(cols[j], linalg::scale(cols[i], mu));
                        // Strict decrease only, so exact ties (hexagonal
                        // lattices) terminate.
                        if linalg::norm_sq(cand) < linalg::norm_sq(cols[j]) * (1.0 - 1e-14) {
                            cols[j] = cand;
                            let m = mu as i64;
                            for r in 0..3 {
                                u[j][r] -= m * u[i][r];
                            }
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        let reduced = Lattice::new(d, &cols[..d]).expect("unimodular ops preserve rank");
        (reduced, u)
    }
}

/// One concrete point of the infinite periodic set: motif point
/// `motif_index` translated by the lattice vector with integer coefficients
/// `cell_coeffs`. `distance` is measured from the query center of the call
/// that produced the point.
#[derive(Clone, Debug, PartialEq)]
pub struct CloudPoint {
    pub motif_index: usize,
    pub cell_coeffs: [i64; 3],
    pub position: Point,
    pub distance: f64,
}

/// Packing radius r (half the minimum inter-point distance) and covering
/// radius R (largest distance from any location to the set), with the grid
/// tolerance used for R.
#[derive(Clone, Debug)]
pub struct RadiiReport {
    pub packing: f64,
    pub covering: f64,
    pub covering_tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct PeriodicSet {
    lattice: Lattice,
    motif: Vec<Point>,
    labels: Option<Vec<String>>,
    motif_cart: Vec<Point>,
    red: Lattice,
    red_inv: Mat3,
    /// B_red = B * u; cell coefficients are reported in the original basis.
    u: [[i64; 3]; 3],
    /// Orthogonal height of each reduced basis vector over the span of the
    /// others; bounds the coefficient search box per axis.
    red_heights: [f64; 3],
}

impl PeriodicSet {
    /// Canonicalizing constructor: wraps fractional coordinates into [0, 1)
    /// and rejects duplicate motif points under the torus metric with
    /// tolerance 1e-9 x (shortest basis vector norm).
    pub fn new(lattice: Lattice, motif: Vec<Point>, labels: Option<Vec<String>>) -> Result<Self> {
        if motif.is_empty() {
            return Err(Error::EmptyMotif);
        }
        if let Some(l) = &labels {
            if l.len() != motif.len() {
                return Err(Error::InvalidConfig(format!(
                    "{} labels for {} motif points",
                    l.len(),
                    motif.len()
                )));
            }
        }
        let dim = lattice.dim();
        let mut canon = Vec::with_capacity(motif.len());
        for p in &motif {
            let mut f = [0.0; 3];
            for ax in 0..dim {
                if !p[ax].is_finite() {
                    return Err(Error::InvalidConfig("non-finite motif coordinate".into()));
                }
                let mut w = p[ax] - p[ax].floor();
                if w >= 1.0 {
                    w -= 1.0;
                }
                if w == 0.0 {
                    w = 0.0;
                }
                f[ax] = w;
            }
            canon.push(f);
        }
        let (red, u) = lattice.reduced();
        let red_inv = *red.inverse();
        let mut red_heights = [1.0; 3];
        for ax in 0..dim {
            red_heights[ax] = 1.0 / linalg::norm(red_inv.row(ax));
        }
        let motif_cart: Vec<Point> = canon.iter().map(|f| lattice.cartesian(*f)).collect();
        let set = PeriodicSet {
            lattice,
            motif: canon,
            labels,
            motif_cart,
            red,
            red_inv,
            u,
            red_heights,
        };
        let tau = 1e-9 * set.lattice.min_column_norm();
        for i in 0..set.motif.len() {
            for j in (i + 1)..set.motif.len() {
                let d = set.torus_distance_cart(set.motif_cart[i], set.motif_cart[j]);
                if d <= tau {
                    return Err(Error::DuplicateMotifPoint { i, j });
                }
            }
        }
        Ok(set)
    }

    /// Builds a set from Cartesian motif positions.
    pub fn from_cartesian(
        lattice: Lattice,
        positions: &[Point],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let motif = positions.iter().map(|p| lattice.fractional(*p)).collect();
        PeriodicSet::new(lattice, motif, labels)
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn reduced_lattice(&self) -> &Lattice {
        &self.red
    }

    pub fn motif(&self) -> &[Point] {
        &self.motif
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn motif_len(&self) -> usize {
        self.motif.len()
    }

    /// Cartesian position of motif point `i` inside the unit cell.
    pub fn position(&self, i: usize) -> Point {
        self.motif_cart[i]
    }

    pub fn unit_cell_volume(&self) -> f64 {
        self.lattice.unit_cell_volume()
    }

    /// Hash of the geometric content (dimension, basis, motif), used to tag
    /// derived tables. Labels do not participate.
    pub fn content_hash(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.dim().hash(&mut h);
        for c in 0..self.dim() {
            for ax in 0..3 {
                self.lattice.basis().col[c][ax].to_bits().hash(&mut h);
            }
        }
        for p in &self.motif {
            for ax in 0..3 {
                p[ax].to_bits().hash(&mut h);
            }
        }
        h.finish()
    }

    fn coeffs_to_original(&self, n: [i64; 3]) -> [i64; 3] {
        let mut out = [0i64; 3];
        for r in 0..3 {
            out[r] = self.u[0][r] * n[0] + self.u[1][r] * n[1] + self.u[2][r] * n[2];
        }
        out
    }

    /// Visits every point of the set within the closed ball of `radius`
    /// around `center` (no ordering guarantee).
    pub fn visit_points_within<F: FnMut(CloudPoint)>(
        &self,
        center: Point,
        radius: f64,
        mut visit: F,
    ) {
        if radius < 0.0 {
            return;
        }
        let dim = self.dim();
        let r2 = radius * radius;
        for (mi, &p) in self.motif_cart.iter().enumerate() {
            let t = self.red_inv.mul_vec(linalg::sub(center, p));
            let mut lo = [0i64; 3];
            let mut hi = [0i64; 3];
            for ax in 0..dim {
                let w = radius / self.red_heights[ax] + 1.0;
                lo[ax] = (t[ax] - w).floor() as i64;
                hi[ax] = (t[ax] + w).ceil() as i64;
            }
            for n0 in lo[0]..=hi[0] {
                for n1 in lo[1]..=hi[1] {
                    for n2 in lo[2]..=hi[2] {
                        let pos = linalg::add(
                            p,
                            self.red.cartesian([n0 as f64, n1 as f64, n2 as f64]),
                        );
                        let d2 = linalg::dist_sq(pos, center);
                        if d2 <= r2 {
                            visit(CloudPoint {
                                motif_index: mi,
                                cell_coeffs: self.coeffs_to_original([n0, n1, n2]),
                                position: pos,
                                distance: d2.sqrt(),
                            });
                        }
                    }
                }
            }
        }
    }

    /// All points of the set within the closed ball, sorted by distance and
    /// then by (motif_index, cell_coeffs) so exact ties are deterministic.
    pub fn points_within(&self, center: Point, radius: f64) -> Vec<CloudPoint> {
        let mut out = Vec::new();
        self.visit_points_within(center, radius, |cp| out.push(cp));
        out.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then(a.motif_index.cmp(&b.motif_index))
                .then(a.cell_coeffs.cmp(&b.cell_coeffs))
        });
        out
    }

    /// The `j` closest points of the set to `x` (ties broken as in
    /// `points_within`). Grows the search radius until `j` points are found.
    pub fn nearest_neighbors(&self, x: Point, j: usize) -> Vec<CloudPoint> {
        assert!(j >= 1);
        let per_point = self.unit_cell_volume() / self.motif_len() as f64;
        let mut radius = 1.5 * per_point.powf(1.0 / self.dim() as f64) * (j as f64).powf(1.0 / self.dim() as f64);
        loop {
            let mut pts = self.points_within(x, radius);
            if pts.len() >= j {
                pts.truncate(j);
                return pts;
            }
            radius *= 1.7;
        }
    }

    /// Distance from `x` to the nearest point of the set.
    pub fn nearest_distance(&self, x: Point) -> f64 {
        let per_point = self.unit_cell_volume() / self.motif_len() as f64;
        let mut radius = 1.5 * per_point.powf(1.0 / self.dim() as f64);
        loop {
            let mut best = f64::INFINITY;
            self.visit_points_within(x, radius, |cp| {
                if cp.distance < best {
                    best = cp.distance;
                }
            });
            if best.is_finite() {
                return best;
            }
            radius *= 1.7;
        }
    }

    /// Exact torus distance between two Cartesian positions: the minimum of
    /// |a - b + lattice vector| over the whole lattice.
    pub fn torus_distance_cart(&self, a: Point, b: Point) -> f64 {
        let diff = linalg::sub(a, b);
        let f = self.red_inv.mul_vec(diff);
        let dim = self.dim();
        let mut wrapped = [0.0; 3];
        for ax in 0..dim {
            wrapped[ax] = f[ax] - f[ax].round();
        }
        let mut best = linalg::norm(self.red.cartesian(wrapped));
        // The nearest-image guess bounds the exact search box.
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for ax in 0..dim {
            let w = best / self.red_heights[ax] + 1.0;
            lo[ax] = (-f[ax] - w).floor() as i64;
            hi[ax] = (-f[ax] + w).ceil() as i64;
        }
        for n0 in lo[0]..=hi[0] {
            for n1 in lo[1]..=hi[1] {
                for n2 in lo[2]..=hi[2] {
                    let cand = linalg::add(
                        diff,
                        self.red.cartesian([n0 as f64, n1 as f64, n2 as f64]),
                    );
                    let d = linalg::norm(cand);
                    if d < best {
                        best = d;
                    }
                }
            }
        }
        best
    }

    /// Shortest nonzero lattice vector length (exact, via reduced-basis
    /// search).
    pub fn shortest_lattice_vector(&self) -> f64 {
        let bound = self.red.min_column_norm();
        let mut best = bound;
        let dim = self.dim();
        let mut lo = [0i64; 3];
        let mut hi = [0i64; 3];
        for ax in 0..dim {
            let w = bound / self.red_heights[ax] + 1.0;
            lo[ax] = (-w).floor() as i64;
            hi[ax] = w.ceil() as i64;
        }
        for n0 in lo[0]..=hi[0] {
            for n1 in lo[1]..=hi[1] {
                for n2 in lo[2]..=hi[2] {
                    if n0 == 0 && n1 == 0 && n2 == 0 {
                        continue;
                    }
                    let d = linalg::norm(self.red.cartesian([n0 as f64, n1 as f64, n2 as f64]));
                    if d < best {
                        best = d;
                    }
                }
            }
        }
        best
    }

    /// Packing radius: half the minimum distance between distinct points.
    pub fn packing_radius(&self) -> f64 {
        let mut min_d = self.shortest_lattice_vector();
        for i in 0..self.motif.len() {
            for j in (i + 1)..self.motif.len() {
                let d = self.torus_distance_cart(self.motif_cart[i], self.motif_cart[j]);
                if d < min_d {
                    min_d = d;
                }
            }
        }
        0.5 * min_d
    }

    /// Covering radius within +-tol, by branch and bound over the reduced
    /// unit cell. Distance-to-set is 1-Lipschitz, so the value at a box
    /// center plus the center-to-corner reach bounds the box maximum; boxes
    /// whose bound cannot beat the best value seen are pruned, the rest are
    /// bisected until the global gap closes below `tol`.
    pub fn covering_radius(&self, tol: f64) -> f64 {
        assert!(tol > 0.0 && tol.is_finite());
        let dim = self.dim();
        let corner_reach = |hw: [f64; 3]| -> f64 {
            let mut worst = 0.0f64;
            for s in 0..(1usize << dim) {
                let mut v = [0.0; 3];
                for ax in 0..dim {
                    v[ax] = if s >> ax & 1 == 1 { hw[ax] } else { -hw[ax] };
                }
                worst = worst.max(linalg::norm(self.red.cartesian(v)));
            }
            worst
        };
        let eval = |c: [f64; 3]| -> f64 { self.nearest_distance(self.red.cartesian(c)) };

        struct Box3 {
            upper: f64,
            center: [f64; 3],
            hw: [f64; 3],
        }
        // Max-heap on the upper bound.
        let mut heap: std::collections::BinaryHeap<(TotalF64, usize)> =
            std::collections::BinaryHeap::new();
        let mut boxes: Vec<Box3> = Vec::new();
        let mut lower = 0.0f64;
        let push = |b: Box3,
                        lower: f64,
                        heap: &mut std::collections::BinaryHeap<(TotalF64, usize)>,
                        boxes: &mut Vec<Box3>| {
            if b.upper > lower {
                heap.push((TotalF64(b.upper), boxes.len()));
                boxes.push(b);
            }
        };

        // Initial split: roughly four boxes along the longest reduced axis,
        // proportionally fewer along shorter ones, so boxes start near-cubical.
        let mut norms = [1.0; 3];
        let mut counts = [1usize; 3];
        let longest = (0..dim)
            .map(|ax| linalg::norm(self.red.column(ax)))
            .fold(0.0, f64::max);
        for ax in 0..dim {
            norms[ax] = linalg::norm(self.red.column(ax));
            counts[ax] = ((4.0 * norms[ax] / longest).round() as usize).max(1);
        }
        for i0 in 0..counts[0] {
            for i1 in 0..counts[1] {
                for i2 in 0..counts[2] {
                    let idx = [i0, i1, i2];
                    let mut center = [0.0; 3];
                    let mut hw = [0.0; 3];
                    for ax in 0..dim {
                        hw[ax] = 0.5 / counts[ax] as f64;
                        center[ax] = (idx[ax] as f64 + 0.5) / counts[ax] as f64;
                    }
                    let f = eval(center);
                    lower = lower.max(f);
                    push(
                        Box3 { upper: f + corner_reach(hw), center, hw },
                        lower,
                        &mut heap,
                        &mut boxes,
                    );
                }
            }
        }

        let mut upper = lower;
        while let Some((TotalF64(u), idx)) = heap.pop() {
            if u <= lower + tol {
                upper = u;
                break;
            }
            if u <= lower {
                continue;
            }
            let parent_center = boxes[idx].center;
            let parent_hw = boxes[idx].hw;
            let mut hw = [0.0; 3];
            for ax in 0..dim {
                hw[ax] = 0.5 * parent_hw[ax];
            }
            let reach = corner_reach(hw);
            for s in 0..(1usize << dim) {
                let mut center = parent_center;
                for ax in 0..dim {
                    center[ax] += if s >> ax & 1 == 1 { hw[ax] } else { -hw[ax] };
                }
                let f = eval(center);
                lower = lower.max(f);
                push(Box3 { upper: f + reach, center, hw }, lower, &mut heap, &mut boxes);
            }
        }
        // The true value lies in [lower, max(lower, upper)], a gap of at
        // most tol.
        0.5 * (lower + upper.max(lower))
    }

    /// Packing and covering radii in one report.
    pub fn radii(&self, covering_tol: f64) -> RadiiReport {
        let packing = self.packing_radius();
        // Covering >= packing holds for the true values; the grid estimate
        // may only dip below through discretization, so clamp.
        let covering = self.covering_radius(covering_tol).max(packing);
        RadiiReport {
            packing,
            covering,
            covering_tolerance: covering_tol,
        }
    }

    /// Default tolerance for covering-radius estimation: 0.1% of the unit
    /// cell's linear scale.
    pub fn default_covering_tol(&self) -> f64 {
        1e-3 * self.unit_cell_volume().powf(1.0 / self.dim() as f64)
    }

    /// Upper bound on the covering radius: estimate plus its tolerance.
    /// Safe wherever an overestimate only costs work (cutoffs, vanishing
    /// thresholds) while an underestimate would cost correctness.
    pub fn covering_radius_safe(&self) -> f64 {
        let tol = self.default_covering_tol();
        self.covering_radius(tol) + tol
    }

    /// Applies an isometry x -> Q x + t (Q orthogonal on the leading d
    /// coordinates) and re-canonicalizes.
    pub fn apply_isometry(&self, q: &Mat3, t: Point) -> Result<PeriodicSet> {
        let dim = self.dim();
        let mut cols = Vec::with_capacity(dim);
        for i in 0..dim {
            cols.push(q.mul_vec(self.lattice.column(i)));
        }
        let lattice = Lattice::new(dim, &cols)?;
        let positions: Vec<Point> = self
            .motif_cart
            .iter()
            .map(|p| linalg::add(q.mul_vec(*p), t))
            .collect();
        PeriodicSet::from_cartesian(lattice, &positions, self.labels.clone())
    }

    /// Builds the supercell set with the same underlying point set: basis
    /// column i is scaled by factors[i] and the motif is replicated into
    /// every sub-cell.
    pub fn supercell(&self, factors: [usize; 3]) -> Result<PeriodicSet> {
        let dim = self.dim();
        let mut cols = Vec::with_capacity(dim);
        for i in 0..dim {
            assert!(factors[i] >= 1);
            cols.push(linalg::scale(self.lattice.column(i), factors[i] as f64));
        }
        let lattice = Lattice::new(dim, &cols)?;
        let mut motif = Vec::new();
        let mut labels = self.labels.as_ref().map(|_| Vec::new());
        let reps = |ax: usize| if ax < dim { factors[ax] } else { 1 };
        for n0 in 0..reps(0) {
            for n1 in 0..reps(1) {
                for n2 in 0..reps(2) {
                    for (i, f) in self.motif.iter().enumerate() {
                        let mut g = [0.0; 3];
                        let n = [n0, n1, n2];
                        for ax in 0..dim {
                            g[ax] = (f[ax] + n[ax] as f64) / factors[ax] as f64;
                        }
                        motif.push(g);
                        if let (Some(ls), Some(src)) = (labels.as_mut(), self.labels.as_ref()) {
                            ls.push(src[i].clone());
                        }
                    }
                }
            }
        }
        PeriodicSet::new(lattice, motif, labels)
    }
}
