//! Fixed-size linear algebra for dimensions 1 through 3.
//!
//! Points are `[f64; 3]` with unused trailing components held at zero, so one
//! representation serves every dimension. Matrices are column-major 3x3 with
//! the unused block padded like the identity; determinants, inverses and
//! linear solves of the embedded d x d matrix then come out right without
//! dimension-specific code paths.

pub type Point = [f64; 3];

pub const ORIGIN: Point = [0.0, 0.0, 0.0];

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn norm_sq(a: Point) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: Point) -> f64 {
    norm_sq(a).sqrt()
}

#[inline]
pub fn dist_sq(a: Point, b: Point) -> f64 {
    norm_sq(sub(a, b))
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    dist_sq(a, b).sqrt()
}

/// Column-major 3x3 matrix. For dimension d < 3 the trailing columns are the
/// corresponding identity columns, which `pad` enforces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat3 {
    pub col: [Point; 3],
}

impl Mat3 {
    pub fn identity() -> Self {
        Mat3 {
            col: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Builds a matrix from the first `dim` columns, identity-padding the rest.
    pub fn pad(dim: usize, cols: &[Point]) -> Self {
        assert!((1..=3).contains(&dim) && cols.len() == dim);
        let mut m = Mat3::identity();
        for (i, c) in cols.iter().enumerate() {
            m.col[i] = *c;
            for ax in dim..3 {
                m.col[i][ax] = 0.0;
            }
        }
        m
    }

    #[inline]
    pub fn mul_vec(&self, v: Point) -> Point {
        [
            self.col[0][0] * v[0] + self.col[1][0] * v[1] + self.col[2][0] * v[2],
            self.col[0][1] * v[0] + self.col[1][1] * v[1] + self.col[2][1] * v[2],
            self.col[0][2] * v[0] + self.col[1][2] * v[1] + self.col[2][2] * v[2],
        ]
    }

    pub fn mul_mat(&self, other: &Mat3) -> Mat3 {
        Mat3 {
            col: [
                self.mul_vec(other.col[0]),
                self.mul_vec(other.col[1]),
                self.mul_vec(other.col[2]),
            ],
        }
    }

    pub fn transpose(&self) -> Mat3 {
        let mut t = Mat3::identity();
        for i in 0..3 {
            for j in 0..3 {
                t.col[i][j] = self.col[j][i];
            }
        }
        t
    }

    #[inline]
    pub fn row(&self, i: usize) -> Point {
        [self.col[0][i], self.col[1][i], self.col[2][i]]
    }

    pub fn det(&self) -> f64 {
        dot(self.col[0], cross(self.col[1], self.col[2]))
    }

    /// Inverse via the adjugate; returns `None` when the determinant is zero.
    /// Callers decide what "too singular" means for their own scale.
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if d == 0.0 {
            return None;
        }
        let inv_d = 1.0 / d;
        let c0 = cross(self.col[1], self.col[2]);
        let c1 = cross(self.col[2], self.col[0]);
        let c2 = cross(self.col[0], self.col[1]);
        // Rows of the inverse are the cofactor cross products over det.
        let mut inv = Mat3::identity();
        for j in 0..3 {
            inv.col[j] = [c0[j] * inv_d, c1[j] * inv_d, c2[j] * inv_d];
        }
        Some(inv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat3 {
            col: [[2.0, 1.0, 0.0], [0.5, 3.0, 0.0], [0.0, 0.0, 1.0]],
        };
        let inv = m.inverse().unwrap();
        let id = m.mul_mat(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id.col[i][j] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pad_keeps_lower_dims_identity() {
        let m = Mat3::pad(2, &[[3.0, 1.0, 0.0], [1.0, 2.0, 0.0]]);
        assert_eq!(m.col[2], [0.0, 0.0, 1.0]);
        assert!((m.det() - 5.0).abs() < 1e-12);
        let inv = m.inverse().unwrap();
        let v = inv.mul_vec([3.0, 1.0, 0.0]);
        assert!(dist(v, [1.0, 0.0, 0.0]) < 1e-12);
    }
}
