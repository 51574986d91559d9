//! Incremental clipping of convex cells by halfspaces, for dimensions 1..=3.
//!
//! A cell starts as an axis-aligned box and is cut down one halfspace at a
//! time. 1D cells are intervals, 2D cells are CCW polygons with per-edge
//! plane provenance, 3D cells are "face soups": each face owns its vertex
//! loop (CCW viewed from outside) plus the plane it lies on. Consistent
//! outward orientation makes exact volumes a signed-tetrahedron sum.

use crate::linalg::{self, Point};

/// Closed halfspace `normal . x <= offset` with unit normal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Halfspace {
    pub normal: Point,
    pub offset: f64,
}

impl Halfspace {
    /// Bisector halfspace of the segment from `a` to `b`: points at least as
    /// close to `a` as to `b`.
    pub fn bisector(a: Point, b: Point) -> Halfspace {
        let d = linalg::sub(b, a);
        let n = linalg::scale(d, 1.0 / linalg::norm(d));
        let mid = linalg::scale(linalg::add(a, b), 0.5);
        Halfspace {
            normal: n,
            offset: linalg::dot(n, mid),
        }
    }

    #[inline]
    pub fn signed(&self, p: Point) -> f64 {
        linalg::dot(self.normal, p) - self.offset
    }

    /// Halfspace with the opposite side (points at least as far).
    pub fn flipped(&self) -> Halfspace {
        Halfspace {
            normal: linalg::scale(self.normal, -1.0),
            offset: -self.offset,
        }
    }
}

/// Provenance of a bounding plane: a clip-box wall or the bisector of the
/// i-th neighbor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PlaneId {
    Wall(u32),
    Bisector(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClipOutcome {
    Unchanged,
    Cut,
    Empty,
}

#[derive(Clone, Debug)]
pub struct Face3 {
    pub id: PlaneId,
    pub plane: Halfspace,
    /// CCW as seen from outside (right-hand loop normal equals plane normal).
    pub verts: Vec<Point>,
}

#[derive(Clone, Debug)]
pub enum CellGeom {
    /// Interval on the x axis.
    Seg {
        lo: f64,
        hi: f64,
        lo_id: PlaneId,
        hi_id: PlaneId,
    },
    /// CCW polygon in the xy plane; `edges[i]` bounds the segment from
    /// `verts[i]` to `verts[i+1]`.
    Poly {
        verts: Vec<Point>,
        edges: Vec<(PlaneId, Halfspace)>,
    },
    Solid {
        faces: Vec<Face3>,
    },
}

impl CellGeom {
    /// Axis-aligned box of half-width `s` centered at `c`, as the starting
    /// cell for the given dimension.
    pub fn clip_box(dim: usize, c: Point, s: f64) -> CellGeom {
        match dim {
            1 => CellGeom::Seg {
                lo: c[0] - s,
                hi: c[0] + s,
                lo_id: PlaneId::Wall(0),
                hi_id: PlaneId::Wall(1),
            },
            2 => {
                let (x0, x1) = (c[0] - s, c[0] + s);
                let (y0, y1) = (c[1] - s, c[1] + s);
                let verts = vec![
                    [x0, y0, 0.0],
                    [x1, y0, 0.0],
                    [x1, y1, 0.0],
                    [x0, y1, 0.0],
                ];
                let hs = |n: Point, off: f64| Halfspace { normal: n, offset: off };
                let edges = vec![
                    (PlaneId::Wall(2), hs([0.0, -1.0, 0.0], -y0)),
                    (PlaneId::Wall(0), hs([1.0, 0.0, 0.0], x1)),
                    (PlaneId::Wall(3), hs([0.0, 1.0, 0.0], y1)),
                    (PlaneId::Wall(1), hs([-1.0, 0.0, 0.0], -x0)),
                ];
                CellGeom::Poly { verts, edges }
            }
            3 => {
                let mut faces = Vec::with_capacity(6);
                for axis in 0..3usize {
                    for (si, sign) in [1.0f64, -1.0].iter().enumerate() {
                        // Tangent axes (u, w) chosen so (e_u, e_w, sign*e_axis)
                        // is right-handed.
                        let (u, w) = if *sign > 0.0 {
                            ((axis + 1) % 3, (axis + 2) % 3)
                        } else {
                            ((axis + 2) % 3, (axis + 1) % 3)
                        };
                        let mut normal = [0.0; 3];
                        normal[axis] = *sign;
                        let offset = sign * c[axis] + s;
                        let mut verts = Vec::with_capacity(4);
                        for (du, dw) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
                            let mut v = c;
                            v[axis] += sign * s;
                            v[u] += du * s;
                            v[w] += dw * s;
                            verts.push(v);
                        }
                        faces.push(Face3 {
                            id: PlaneId::Wall((2 * axis + si) as u32),
                            plane: Halfspace { normal, offset },
                            verts,
                        });
                    }
                }
                CellGeom::Solid { faces }
            }
            _ => unreachable!("dimension checked upstream"),
        }
    }

    /// Clips the cell by `hs`. `eps` is the on-plane thickness: vertices
    /// within `eps` of the plane count as inside, and cells entirely within
    /// the band collapse to Empty.
    pub fn clip(&mut self, hs: Halfspace, id: PlaneId, eps: f64) -> ClipOutcome {
        match self {
            CellGeom::Seg { lo, hi, lo_id, hi_id } => {
                let s_lo = hs.signed([*lo, 0.0, 0.0]);
                let s_hi = hs.signed([*hi, 0.0, 0.0]);
                let max_s = s_lo.max(s_hi);
                let min_s = s_lo.min(s_hi);
                if max_s <= eps {
                    return ClipOutcome::Unchanged;
                }
                if min_s >= -eps {
                    return ClipOutcome::Empty;
                }
                // The plane normal is +-x; exactly one endpoint moves.
                let cut_x = if hs.normal[0] > 0.0 { hs.offset } else { -hs.offset };
                if hs.normal[0] > 0.0 {
                    *hi = cut_x;
                    *hi_id = id;
                } else {
                    *lo = cut_x;
                    *lo_id = id;
                }
                if *hi - *lo <= eps {
                    return ClipOutcome::Empty;
                }
                ClipOutcome::Cut
            }
            CellGeom::Poly { verts, edges } => {
                let n = verts.len();
                let s: Vec<f64> = verts.iter().map(|v| hs.signed(*v)).collect();
                let max_s = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let min_s = s.iter().cloned().fold(f64::INFINITY, f64::min);
                if max_s <= eps {
                    return ClipOutcome::Unchanged;
                }
                if min_s >= -eps {
                    return ClipOutcome::Empty;
                }
                let mut nv: Vec<Point> = Vec::with_capacity(n + 2);
                let mut ne: Vec<(PlaneId, Halfspace)> = Vec::with_capacity(n + 2);
                for i in 0..n {
                    let j = (i + 1) % n;
                    let (a, sa) = (verts[i], s[i]);
                    let (b, sb) = (verts[j], s[j]);
                    let a_in = sa <= eps;
                    let b_in = sb <= eps;
                    if a_in {
                        nv.push(a);
                        ne.push(edges[i]);
                        if !b_in {
                            let t = sa / (sa - sb);
                            nv.push(lerp(a, b, t));
                            ne.push((id, hs));
                        }
                    } else if b_in {
                        let t = sa / (sa - sb);
                        nv.push(lerp(a, b, t));
                        ne.push(edges[i]);
                    }
                }
                merge_loop(&mut nv, &mut ne, eps);
                if nv.len() < 3 {
                    return ClipOutcome::Empty;
                }
                *verts = nv;
                *edges = ne;
                ClipOutcome::Cut
            }
            CellGeom::Solid { faces } => {
                let mut max_s = f64::NEG_INFINITY;
                let mut min_s = f64::INFINITY;
                for f in faces.iter() {
                    for v in &f.verts {
                        let sv = hs.signed(*v);
                        max_s = max_s.max(sv);
                        min_s = min_s.min(sv);
                    }
                }
                if max_s <= eps {
                    return ClipOutcome::Unchanged;
                }
                if min_s >= -eps {
                    return ClipOutcome::Empty;
                }
                let mut kept: Vec<Face3> = Vec::with_capacity(faces.len() + 1);
                let mut cap: Vec<Point> = Vec::new();
                for f in faces.iter() {
                    let m = f.verts.len();
                    let s: Vec<f64> = f.verts.iter().map(|v| hs.signed(*v)).collect();
                    let fmax = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let fmin = s.iter().cloned().fold(f64::INFINITY, f64::min);
                    if fmax <= eps {
                        // Face survives whole; verts on the cut plane still
                        // belong to the cap rim.
                        for (v, sv) in f.verts.iter().zip(&s) {
                            if sv.abs() <= eps {
                                push_merged(&mut cap, *v, eps);
                            }
                        }
                        kept.push(f.clone());
                        continue;
                    }
                    if fmin >= -eps {
                        continue; // face fully cut away
                    }
                    let mut nv: Vec<Point> = Vec::with_capacity(m + 2);
                    for i in 0..m {
                        let j = (i + 1) % m;
                        let (a, sa) = (f.verts[i], s[i]);
                        let (b, sb) = (f.verts[j], s[j]);
                        let a_in = sa <= eps;
                        let b_in = sb <= eps;
                        if a_in {
                            nv.push(a);
                            if !b_in {
                                nv.push(lerp(a, b, sa / (sa - sb)));
                            }
                        } else if b_in {
                            nv.push(lerp(a, b, sa / (sa - sb)));
                        }
                    }
                    dedup_ring(&mut nv, eps);
                    for v in &nv {
                        if hs.signed(*v).abs() <= 2.0 * eps {
                            push_merged(&mut cap, *v, eps);
                        }
                    }
                    if nv.len() >= 3 {
                        kept.push(Face3 {
                            id: f.id,
                            plane: f.plane,
                            verts: nv,
                        });
                    }
                }
                if kept.is_empty() {
                    return ClipOutcome::Empty;
                }
                if cap.len() >= 3 {
                    kept.push(Face3 {
                        id,
                        plane: hs,
                        verts: orient_on_plane(cap, hs.normal),
                    });
                }
                // A cap of fewer than 3 distinct points means only a sliver
                // of measure ~eps^2 was shaved; the open rim is negligible.
                *faces = kept;
                ClipOutcome::Cut
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            CellGeom::Seg { lo, hi, .. } => (hi - lo).max(0.0),
            CellGeom::Poly { verts, .. } => polygon_area_xy(verts),
            CellGeom::Solid { faces } => {
                let mut six_v = 0.0;
                for f in faces {
                    for i in 1..f.verts.len().saturating_sub(1) {
                        six_v += linalg::dot(
                            f.verts[0],
                            linalg::cross(f.verts[i], f.verts[i + 1]),
                        );
                    }
                }
                (six_v / 6.0).max(0.0)
            }
        }
    }

    /// Largest distance from `c` to any vertex.
    pub fn max_dist(&self, c: Point) -> f64 {
        let mut best: f64 = 0.0;
        self.for_each_vertex(|v| best = best.max(linalg::dist(v, c)));
        best
    }

    pub fn bbox(&self) -> (Point, Point) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        self.for_each_vertex(|v| {
            for ax in 0..3 {
                lo[ax] = lo[ax].min(v[ax]);
                hi[ax] = hi[ax].max(v[ax]);
            }
        });
        for ax in 0..3 {
            if lo[ax] > hi[ax] {
                lo[ax] = 0.0;
                hi[ax] = 0.0;
            }
        }
        (lo, hi)
    }

    pub fn for_each_vertex<F: FnMut(Point)>(&self, mut f: F) {
        match self {
            CellGeom::Seg { lo, hi, .. } => {
                f([*lo, 0.0, 0.0]);
                f([*hi, 0.0, 0.0]);
            }
            CellGeom::Poly { verts, .. } => {
                for v in verts {
                    f(*v);
                }
            }
            CellGeom::Solid { faces } => {
                for fa in faces {
                    for v in &fa.verts {
                        f(*v);
                    }
                }
            }
        }
    }

    /// Bounding planes that actually carry a facet, deduplicated by id.
    pub fn facets(&self) -> Vec<(PlaneId, Halfspace)> {
        let mut out: Vec<(PlaneId, Halfspace)> = Vec::new();
        let mut push = |id: PlaneId, hs: Halfspace| {
            if !out.iter().any(|(i, _)| *i == id) {
                out.push((id, hs));
            }
        };
        match self {
            CellGeom::Seg { lo, hi, lo_id, hi_id } => {
                push(
                    *lo_id,
                    Halfspace {
                        normal: [-1.0, 0.0, 0.0],
                        offset: -lo,
                    },
                );
                push(
                    *hi_id,
                    Halfspace {
                        normal: [1.0, 0.0, 0.0],
                        offset: *hi,
                    },
                );
            }
            CellGeom::Poly { edges, .. } => {
                for (id, hs) in edges {
                    push(*id, *hs);
                }
            }
            CellGeom::Solid { faces } => {
                for f in faces {
                    push(f.id, f.plane);
                }
            }
        }
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Deduplicated vertex list. 2D keeps the CCW boundary order; other
    /// dimensions sort lexicographically.
    pub fn vertex_list(&self, eps: f64) -> Vec<Point> {
        match self {
            CellGeom::Seg { lo, hi, .. } => vec![[*lo, 0.0, 0.0], [*hi, 0.0, 0.0]],
            CellGeom::Poly { verts, .. } => verts.clone(),
            CellGeom::Solid { faces } => {
                let mut out: Vec<Point> = Vec::new();
                for f in faces {
                    for v in &f.verts {
                        push_merged(&mut out, *v, eps);
                    }
                }
                out.sort_by(|a, b| {
                    a[0].total_cmp(&b[0])
                        .then(a[1].total_cmp(&b[1]))
                        .then(a[2].total_cmp(&b[2]))
                });
                out
            }
        }
    }
}

#[inline]
fn lerp(a: Point, b: Point, t: f64) -> Point {
    [
        a[0] + (b[0] - a[0]) * t,
        a[1] + (b[1] - a[1]) * t,
        a[2] + (b[2] - a[2]) * t,
    ]
}

pub fn polygon_area_xy(verts: &[Point]) -> f64 {
    let n = verts.len();
    let mut two_a = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        two_a += verts[i][0] * verts[j][1] - verts[j][0] * verts[i][1];
    }
    (two_a / 2.0).abs()
}

/// Removes consecutive near-duplicate vertices from a closed loop, keeping
/// the earlier position and the later outgoing edge.
fn merge_loop(verts: &mut Vec<Point>, edges: &mut Vec<(PlaneId, Halfspace)>, eps: f64) {
    let mut i = 0;
    while verts.len() >= 2 && i < verts.len() {
        let j = (i + 1) % verts.len();
        if linalg::dist(verts[i], verts[j]) <= eps {
            edges[i] = edges[j];
            verts.remove(j);
            edges.remove(j);
        } else {
            i += 1;
        }
    }
}

fn dedup_ring(verts: &mut Vec<Point>, eps: f64) {
    let mut i = 0;
    while verts.len() >= 2 && i < verts.len() {
        let j = (i + 1) % verts.len();
        if linalg::dist(verts[i], verts[j]) <= eps {
            verts.remove(j);
        } else {
            i += 1;
        }
    }
}

fn push_merged(list: &mut Vec<Point>, v: Point, eps: f64) {
    if !list.iter().any(|w| linalg::dist(*w, v) <= eps) {
        list.push(v);
    }
}

/// Orders coplanar points CCW around their centroid as seen from the +normal
/// side, which is the outward convention for cap faces.
fn orient_on_plane(mut pts: Vec<Point>, normal: Point) -> Vec<Point> {
    let m = pts.len() as f64;
    let mut c = [0.0; 3];
    for p in &pts {
        c = linalg::add(c, *p);
    }
    c = linalg::scale(c, 1.0 / m);
    // In-plane orthonormal basis (e1, e2) with e1 x e2 = normal.
    let seed = if normal[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = {
        let raw = linalg::sub(seed, linalg::scale(normal, linalg::dot(seed, normal)));
        linalg::scale(raw, 1.0 / linalg::norm(raw))
    };
    let e2 = linalg::cross(normal, e1);
    pts.sort_by(|a, b| {
        let da = linalg::sub(*a, c);
        let db = linalg::sub(*b, c);
        let ta = f64::atan2(linalg::dot(da, e2), linalg::dot(da, e1));
        let tb = f64::atan2(linalg::dot(db, e2), linalg::dot(db, e1));
        ta.total_cmp(&tb)
    });
    pts
}
