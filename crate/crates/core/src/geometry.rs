//! Planar primitives: points, segments, polylines and polygons.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[T; 2]", into = "[T; 2]", bound = "T: Scalar")]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T> From<[T; 2]> for Point2<T> {
    fn from([x, y]: [T; 2]) -> Self {
        Point2 { x, y }
    }
}

impl<T> From<Point2<T>> for [T; 2] {
    fn from(p: Point2<T>) -> Self {
        [p.x, p.y]
    }
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Self) -> T {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> T {
        self.dot(self)
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Rotate counter-clockwise by `angle`.
    pub fn rotate(self, angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn cast<U: Scalar>(self) -> Point2<U> {
        Point2::new(U::of(self.x.f64()), U::of(self.y.f64()))
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        Point2::new(self.x * k, self.y * k)
    }
}

impl<T: Scalar> Neg for Point2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Segment<T> {
    pub a: Point2<T>,
    pub b: Point2<T>,
}

impl<T: Scalar> Segment<T> {
    pub fn new(a: Point2<T>, b: Point2<T>) -> Self {
        Segment { a, b }
    }

    pub fn length(&self) -> T {
        self.a.distance(self.b)
    }

    /// Parameter in [0, 1] of the closest point to `p`.
    pub fn closest_param(&self, p: Point2<T>) -> T {
        let d = self.b - self.a;
        let len_sq = d.norm_sq();
        if len_sq <= T::zero() {
            return T::zero();
        }
        ((p - self.a).dot(d) / len_sq).max(T::zero()).min(T::one())
    }

    pub fn point_at(&self, t: T) -> Point2<T> {
        self.a + (self.b - self.a) * t
    }

    pub fn distance_to(&self, p: Point2<T>) -> T {
        self.point_at(self.closest_param(p)).distance(p)
    }

    /// Intersection parameters `(t, u)` along `self` and `other`, both in [0, 1],
    /// or `None` when the segments do not touch. Collinear overlaps report the
    /// first overlapping point of `self`.
    pub fn intersect(&self, other: &Segment<T>) -> Option<(T, T)> {
        let r = self.b - self.a;
        let s = other.b - other.a;
        let denom = r.cross(s);
        let qp = other.a - self.a;
        let eps = T::epsilon() * T::of(64.0);
        let scale = (r.norm() * s.norm()).max(T::min_positive_value());
        if denom.abs() <= eps * scale {
            if qp.cross(r).abs() > eps * (qp.norm() * r.norm()).max(T::min_positive_value()) {
                return None;
            }
            // collinear: project other's endpoints onto self
            let rr = r.norm_sq();
            if rr <= T::zero() {
                return None;
            }
            let t0 = qp.dot(r) / rr;
            let t1 = (other.b - self.a).dot(r) / rr;
            let (lo, hi) = if t0 < t1 { (t0, t1) } else { (t1, t0) };
            if hi < T::zero() || lo > T::one() {
                return None;
            }
            let t = lo.max(T::zero());
            let p = self.point_at(t);
            return Some((t, other.closest_param(p)));
        }
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        let tol = T::of(1e-12);
        if t >= -tol && t <= T::one() + tol && u >= -tol && u <= T::one() + tol {
            Some((t.max(T::zero()).min(T::one()), u.max(T::zero()).min(T::one())))
        } else {
            None
        }
    }
}

/// Distance from `p` to the nearest point of an open polyline.
pub fn polyline_distance<T: Scalar>(polyline: &[Point2<T>], p: Point2<T>) -> T {
    match polyline {
        [] => T::infinity(),
        [only] => only.distance(p),
        _ => polyline
            .windows(2)
            .map(|w| Segment::new(w[0], w[1]).distance_to(p))
            .fold(T::infinity(), T::min),
    }
}

/// Distance along a ray from `origin` in direction `heading` to the first hit on
/// the polyline, or infinity if it is never hit.
pub fn ray_cast<T: Scalar>(polyline: &[Point2<T>], origin: Point2<T>, heading: T) -> T {
    let dir = Point2::new(heading.cos(), heading.sin());
    let mut best = T::infinity();
    for w in polyline.windows(2) {
        let s = w[1] - w[0];
        let denom = dir.cross(s);
        if denom.abs() <= T::epsilon() {
            continue;
        }
        let qp = w[0] - origin;
        let dist = qp.cross(s) / denom;
        let u = qp.cross(dir) / denom;
        if dist >= T::zero() && u >= T::zero() && u <= T::one() && dist < best {
            best = dist;
        }
    }
    best
}

/// Closed polygon given by its vertices (the closing edge is implicit).
pub fn polygon_edges<T: Scalar>(vertices: &[Point2<T>]) -> impl Iterator<Item = Segment<T>> + '_ {
    let n = vertices.len();
    (0..n).map(move |i| Segment::new(vertices[i], vertices[(i + 1) % n]))
}

/// Point-in-polygon test where points on the boundary count as inside.
pub fn polygon_contains<T: Scalar>(vertices: &[Point2<T>], p: Point2<T>) -> bool {
    if vertices.len() < 3 {
        return false;
    }
    let on_edge_tol = T::of(1e-12);
    let mut inside = false;
    for e in polygon_edges(vertices) {
        if e.distance_to(p) <= on_edge_tol {
            return true;
        }
        let (a, b) = (e.a, e.b);
        if (a.y > p.y) != (b.y > p.y) {
            let x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x_cross {
                inside = !inside;
            }
        }
    }
    inside
}

/// True when the polygon has at least 3 vertices and no two non-adjacent edges touch.
pub fn polygon_is_simple<T: Scalar>(vertices: &[Point2<T>]) -> bool {
    let n = vertices.len();
    if n < 3 {
        return false;
    }
    let edges: Vec<_> = polygon_edges(vertices).collect();
    if edges.iter().any(|e| e.length() <= T::zero()) {
        return false;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // adjacent edges may only share their common vertex
                if n == 3 {
                    continue;
                }
                let (e, f) = (edges[i], edges[j]);
                let d = (e.b - e.a).cross(f.b - f.a);
                let folded = d.abs() <= T::epsilon() && (e.b - e.a).dot(f.b - f.a) < T::zero();
                if folded {
                    return false;
                }
                continue;
            }
            if edges[i].intersect(&edges[j]).is_some() {
                return false;
            }
        }
    }
    true
}
