use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Segment};
use crate::scalar::{wrap_angle, Scalar};
use crate::sim::{Displacement, VehicleState};

/// Maximum segment length after densification, meters.
pub const MAX_SEGMENT: f64 = 0.05;
/// Default forward search window for projection, meters of arclength.
pub const PROJECTION_WINDOW: f64 = 5.0;
/// Default carrot lookahead, meters.
pub const LOOKAHEAD: f64 = 1.0;

const TIE_EPS: f64 = 1e-12;

/// Piecewise-linear global plan with arclength parameterization.
///
/// Closed plans store the start point again at the end so every segment is a
/// consecutive pair; progress `s = 1` then coincides with `s = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
#[serde(try_from = "PlanSpec<T>", into = "PlanSpec<T>")]
pub struct GlobalPlan<T: Scalar> {
    waypoints: Vec<Point2<T>>,
    cumulative: Vec<T>,
    closed: bool,
    /// Waypoints as given, before densification.
    source: Vec<Point2<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PlanSpec<T> {
    #[serde(default)]
    pub closed: bool,
    pub waypoints: Vec<Point2<T>>,
}

impl<T: Scalar> TryFrom<PlanSpec<T>> for GlobalPlan<T> {
    type Error = Error;
    fn try_from(spec: PlanSpec<T>) -> Result<Self> {
        GlobalPlan::new(spec.waypoints, spec.closed)
    }
}

impl<T: Scalar> From<GlobalPlan<T>> for PlanSpec<T> {
    fn from(plan: GlobalPlan<T>) -> Self {
        PlanSpec {
            closed: plan.closed,
            waypoints: plan.source,
        }
    }
}

/// Result of a nearest-point query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection<T> {
    /// Arclength of the nearest plan point, in [0, total).
    pub arclength: T,
    pub point: Point2<T>,
    pub distance: T,
}

impl<T: Scalar> GlobalPlan<T> {
    pub fn new(waypoints: Vec<Point2<T>>, closed: bool) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::Validation("plan needs at least 2 waypoints".into()));
        }
        if let Some(i) = waypoints.iter().position(|p| !p.is_finite()) {
            return Err(Error::Validation(format!("plan waypoint {i} is not finite")));
        }
        if let Some(i) = (1..waypoints.len()).find(|&i| waypoints[i] == waypoints[i - 1]) {
            return Err(Error::Validation(format!("plan waypoints {} and {i} coincide", i - 1)));
        }
        let source = waypoints.clone();
        let mut pts = waypoints;
        if closed {
            let (first, last) = (pts[0], *pts.last().unwrap());
            if first != last {
                pts.push(first);
            }
            if pts.len() < 4 {
                return Err(Error::Validation("closed plan needs at least 3 distinct waypoints".into()));
            }
        }
        let max_seg = T::of(MAX_SEGMENT);
        let mut dense = vec![pts[0]];
        for w in pts.windows(2) {
            let len = w[0].distance(w[1]);
            let pieces = (len / max_seg).ceil().to_usize().unwrap_or(1).max(1);
            for k in 1..=pieces {
                let t = T::of(k as f64) / T::of(pieces as f64);
                dense.push(if k == pieces { w[1] } else { Segment::new(w[0], w[1]).point_at(t) });
            }
        }
        let mut cumulative = Vec::with_capacity(dense.len());
        let mut acc = T::zero();
        cumulative.push(acc);
        for w in dense.windows(2) {
            acc = acc + w[0].distance(w[1]);
            cumulative.push(acc);
        }
        if cumulative.windows(2).any(|c| !(c[1] > c[0])) {
            return Err(Error::Validation("plan arclength is not strictly increasing".into()));
        }
        Ok(GlobalPlan {
            waypoints: dense,
            cumulative,
            closed,
            source,
        })
    }

    pub fn waypoints(&self) -> &[Point2<T>] {
        &self.waypoints
    }

    pub fn source_waypoints(&self) -> &[Point2<T>] {
        &self.source
    }

    pub fn cumulative_arclength(&self) -> &[T] {
        &self.cumulative
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn total_length(&self) -> T {
        *self.cumulative.last().unwrap()
    }

    pub fn segments(&self) -> impl Iterator<Item = Segment<T>> + '_ {
        self.waypoints.windows(2).map(|w| Segment::new(w[0], w[1]))
    }

    /// Wrap (closed) or clamp (open) an arclength into the plan's domain.
    pub fn normalize_arclength(&self, a: T) -> T {
        let total = self.total_length();
        if self.closed {
            let r = a % total;
            let r = if r < T::zero() { r + total } else { r };
            if r >= total { T::zero() } else { r }
        } else {
            a.max(T::zero()).min(total)
        }
    }

    pub fn progress_of(&self, arclength: T) -> T {
        self.normalize_arclength(arclength) / self.total_length()
    }

    fn segment_index(&self, a: T) -> usize {
        let n = self.cumulative.len();
        match self.cumulative.binary_search_by(|c| c.partial_cmp(&a).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i.saturating_sub(1).min(n - 2),
        }
    }

    /// Plan point and tangent heading at arclength `a` (wrapped or clamped).
    pub fn pose_at(&self, a: T) -> (Point2<T>, T) {
        let a = self.normalize_arclength(a);
        let i = self.segment_index(a);
        let (c0, c1) = (self.cumulative[i], self.cumulative[i + 1]);
        let t = ((a - c0) / (c1 - c0)).max(T::zero()).min(T::one());
        let seg = Segment::new(self.waypoints[i], self.waypoints[i + 1]);
        let d = seg.b - seg.a;
        (seg.point_at(t), d.y.atan2(d.x))
    }

    pub fn point_at(&self, a: T) -> Point2<T> {
        self.pose_at(a).0
    }

    /// Nearest plan point over the whole plan; ties go to the larger arclength.
    pub fn nearest(&self, p: Point2<T>) -> Projection<T> {
        self.nearest_in(p, T::neg_infinity(), T::infinity())
    }

    /// Nearest plan point with arclength in the unwrapped interval `[lo, hi]`.
    /// On closed plans the interval may extend past the end and wraps.
    pub fn nearest_in(&self, p: Point2<T>, lo: T, hi: T) -> Projection<T> {
        let total = self.total_length();
        let shifts: &[T] = if self.closed && hi.is_finite() { &[T::zero(), total] } else { &[T::zero()] };
        let mut best: Option<(T, T, Point2<T>)> = None; // (distance, unwrapped arclength, point)
        let eps = T::of(TIE_EPS);
        for &shift in shifts {
            for (i, seg) in self.segments().enumerate() {
                let c0 = self.cumulative[i] + shift;
                let c1 = self.cumulative[i + 1] + shift;
                let a0 = c0.max(lo);
                let a1 = c1.min(hi);
                if a0 > a1 {
                    continue;
                }
                let len = c1 - c0;
                let t_lo = (a0 - c0) / len;
                let t_hi = (a1 - c0) / len;
                let t = seg.closest_param(p).max(t_lo).min(t_hi);
                let q = seg.point_at(t);
                let d = q.distance(p);
                let a = c0 + t * len;
                let better = match best {
                    None => true,
                    Some((bd, ba, _)) => d < bd - eps || ((d - bd).abs() <= eps && a > ba),
                };
                if better {
                    best = Some((d, a, q));
                }
            }
        }
        let (distance, a, point) = best.unwrap_or_else(|| {
            let a = self.normalize_arclength(lo);
            (self.point_at(a).distance(p), a, self.point_at(a))
        });
        Projection {
            arclength: self.normalize_arclength(a),
            point,
            distance,
        }
    }

    /// Projection operator: progress `s` of the plan point nearest to the robot.
    ///
    /// With `previous_s`, the search is limited to `[previous_s, previous_s + window]`
    /// in arclength so the projection cannot jump backwards or onto a nearby leg.
    pub fn project(&self, x: &VehicleState<T>, previous_s: Option<T>) -> T {
        self.project_windowed(x.position, previous_s, T::of(PROJECTION_WINDOW))
    }

    pub fn project_windowed(&self, p: Point2<T>, previous_s: Option<T>, window: T) -> T {
        let proj = match previous_s {
            None => self.nearest(p),
            Some(s) => {
                let lo = s * self.total_length();
                self.nearest_in(p, lo, lo + window)
            }
        };
        proj.arclength / self.total_length()
    }

    /// Receding-horizon target `lookahead` meters of arclength past progress `s`.
    pub fn carrot(&self, s: T, x: &VehicleState<T>, lookahead: T) -> CarrotTarget<T> {
        let a = self.normalize_arclength(s * self.total_length() + lookahead);
        let (target_point, target_heading) = self.pose_at(a);
        let offset = (target_point - x.position).rotate(-x.heading);
        CarrotTarget {
            target_point,
            delta_x: Displacement {
                dx: offset.x,
                dy: offset.y,
                dheading: wrap_angle(target_heading - x.heading),
            },
            progress_s: a / self.total_length(),
        }
    }
}

/// Plan state a fixed lookahead ahead of the robot's projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CarrotTarget<T> {
    pub target_point: Point2<T>,
    /// Target minus robot pose, in the robot frame.
    pub delta_x: Displacement<T>,
    pub progress_s: T,
}
