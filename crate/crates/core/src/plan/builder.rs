use crate::geometry::Point2;
use crate::scalar::Scalar;

/// Turtle-style path construction from straights and circular arcs.
#[derive(Debug, Clone)]
pub struct PathBuilder<T> {
    points: Vec<Point2<T>>,
    heading: T,
    resolution: T,
}

impl<T: Scalar> PathBuilder<T> {
    pub fn new(start: Point2<T>, heading: T) -> Self {
        PathBuilder {
            points: vec![start],
            heading,
            resolution: T::of(0.05),
        }
    }

    fn cursor(&self) -> Point2<T> {
        *self.points.last().unwrap()
    }

    pub fn heading(&self) -> T {
        self.heading
    }

    pub fn straight(mut self, length: T) -> Self {
        let dir = Point2::new(self.heading.cos(), self.heading.sin());
        let p = self.cursor() + dir * length;
        self.points.push(p);
        self
    }

    /// Arc of `radius`, turning by `angle` (positive = left).
    pub fn arc(mut self, radius: T, angle: T) -> Self {
        let n = (radius * angle.abs() / self.resolution).ceil().to_usize().unwrap_or(1).max(1);
        let sign = angle.signum();
        let start = self.cursor();
        let left = Point2::new(-self.heading.sin(), self.heading.cos());
        let center = start + left * (radius * sign);
        let start_angle = (start - center).y.atan2((start - center).x);
        for k in 1..=n {
            let phi = start_angle + angle * T::of(k as f64) / T::of(n as f64);
            self.points.push(center + Point2::new(phi.cos(), phi.sin()) * radius);
        }
        self.heading = self.heading + angle;
        self
    }

    pub fn current(&self) -> Point2<T> {
        self.cursor()
    }

    /// Points so far; drop the final point if it closes the loop onto the start.
    pub fn finish(mut self, closed: bool) -> Vec<Point2<T>> {
        if closed && self.points.len() > 2 {
            let last = self.cursor();
            if last.distance(self.points[0]) < T::of(1e-6) {
                self.points.pop();
            }
        }
        self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn quarter_arcs_close_a_rounded_square() {
        let mut b = PathBuilder::new(Point2::new(0.0, 0.0), 0.0);
        for _ in 0..4 {
            b = b.straight(2.0).arc(1.0, FRAC_PI_2);
        }
        assert!(b.current().distance(Point2::new(0.0, 0.0)) < 1e-9);
        let pts = b.finish(true);
        assert!(pts.last().unwrap().distance(pts[0]) > 1e-3);
    }
}
