use serde::{Deserialize, Serialize};

use super::path::GlobalPlan;
use crate::error::{Error, Result};
use crate::geometry::{polyline_distance, ray_cast, Point2, Segment};
use crate::scalar::Scalar;

/// Entry and exit gate segments bracketing one turn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TurnGate<T> {
    pub label: String,
    pub entry: Segment<T>,
    pub exit: Segment<T>,
}

/// Turn region in plan arclength.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpan<T> {
    pub label: String,
    pub entry: T,
    pub exit: T,
}

impl<T: Scalar> GateSpan<T> {
    /// Arclength covered between entry and exit (wrapping on closed plans).
    pub fn length(&self, total: T) -> T {
        let d = self.exit - self.entry;
        if d < T::zero() { d + total } else { d }
    }

    /// True when arclength `a` (normalized) lies within the turn region.
    pub fn contains(&self, a: T) -> bool {
        if self.entry <= self.exit {
            a >= self.entry && a <= self.exit
        } else {
            a >= self.entry || a <= self.exit
        }
    }
}

/// Evaluation track: plan, boundary polylines and labelled turn gates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TrackSpec<T>", into = "TrackSpec<T>", bound = "T: Scalar")]
pub struct Track<T: Scalar> {
    pub plan: GlobalPlan<T>,
    pub boundaries: Vec<Vec<Point2<T>>>,
    pub turn_gates: Vec<TurnGate<T>>,
    spans: Vec<GateSpan<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TrackSpec<T: Scalar> {
    pub plan: GlobalPlan<T>,
    #[serde(default, rename = "boundary")]
    pub boundaries: Vec<BoundarySpec<T>>,
    #[serde(default, rename = "gate")]
    pub turn_gates: Vec<TurnGate<T>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct BoundarySpec<T> {
    pub points: Vec<Point2<T>>,
}

impl<T: Scalar> TryFrom<TrackSpec<T>> for Track<T> {
    type Error = Error;
    fn try_from(spec: TrackSpec<T>) -> Result<Self> {
        Track::new(spec.plan, spec.boundaries.into_iter().map(|b| b.points).collect(), spec.turn_gates)
    }
}

impl<T: Scalar> From<Track<T>> for TrackSpec<T> {
    fn from(track: Track<T>) -> Self {
        TrackSpec {
            plan: track.plan,
            boundaries: track.boundaries.into_iter().map(|points| BoundarySpec { points }).collect(),
            turn_gates: track.turn_gates,
        }
    }
}

/// Arclengths where `gate` crosses the plan, with crossings at shared vertices merged.
pub fn gate_crossings<T: Scalar>(plan: &GlobalPlan<T>, gate: &Segment<T>) -> Vec<T> {
    let cum = plan.cumulative_arclength();
    let mut hits: Vec<T> = Vec::new();
    for (i, seg) in plan.segments().enumerate() {
        if let Some((t, _)) = seg.intersect(gate) {
            let a = plan.normalize_arclength(cum[i] + t * (cum[i + 1] - cum[i]));
            let total = plan.total_length();
            let dup = hits.iter().any(|&h| {
                let d = (h - a).abs();
                d < T::of(1e-9) || (plan.is_closed() && (total - d) < T::of(1e-9))
            });
            if !dup {
                hits.push(a);
            }
        }
    }
    hits
}

impl<T: Scalar> TurnGate<T> {
    /// Gate whose entry and exit segments cross the plan perpendicularly at
    /// arclengths `entry` and `exit`, reaching `half_width` to each side.
    pub fn across(plan: &GlobalPlan<T>, label: impl Into<String>, entry: T, exit: T, half_width: T) -> Self {
        let cut = |a: T| {
            let (p, h) = plan.pose_at(a);
            let n = Point2::new(-h.sin(), h.cos()) * half_width;
            Segment::new(p - n, p + n)
        };
        TurnGate {
            label: label.into(),
            entry: cut(entry),
            exit: cut(exit),
        }
    }
}

impl<T: Scalar> Track<T> {
    pub fn new(plan: GlobalPlan<T>, boundaries: Vec<Vec<Point2<T>>>, turn_gates: Vec<TurnGate<T>>) -> Result<Self> {
        for (i, b) in boundaries.iter().enumerate() {
            if b.len() < 2 {
                return Err(Error::Validation(format!("boundary #{i} needs at least 2 points")));
            }
            if b.iter().any(|p| !p.is_finite()) {
                return Err(Error::Validation(format!("boundary #{i} has non-finite points")));
            }
        }
        let mut spans = Vec::with_capacity(turn_gates.len());
        for gate in &turn_gates {
            let crossing = |which: &str, seg: &Segment<T>| -> Result<T> {
                let hits = gate_crossings(&plan, seg);
                match hits.as_slice() {
                    [a] => Ok(*a),
                    [] => Err(Error::Validation(format!("gate {} {which} segment does not cross the plan", gate.label))),
                    _ => Err(Error::Validation(format!(
                        "gate {} {which} segment crosses the plan {} times",
                        gate.label,
                        hits.len()
                    ))),
                }
            };
            spans.push(GateSpan {
                label: gate.label.clone(),
                entry: crossing("entry", &gate.entry)?,
                exit: crossing("exit", &gate.exit)?,
            });
        }
        Ok(Track {
            plan,
            boundaries,
            turn_gates,
            spans,
        })
    }

    pub fn gate_spans(&self) -> &[GateSpan<T>] {
        &self.spans
    }

    /// Distance from `p` to the nearest boundary polyline.
    pub fn boundary_distance(&self, p: Point2<T>) -> T {
        self.boundaries
            .iter()
            .map(|b| polyline_distance(b, p))
            .fold(T::infinity(), T::min)
    }

    /// Free distance along the heading ray before hitting a boundary.
    pub fn distance_ahead(&self, p: Point2<T>, heading: T) -> T {
        self.boundaries
            .iter()
            .map(|b| ray_cast(b, p, heading))
            .fold(T::infinity(), T::min)
    }
}

/// Polyline offset laterally from the plan by `offset` (positive = left).
pub fn offset_polyline<T: Scalar>(plan: &GlobalPlan<T>, offset: T) -> Vec<Point2<T>> {
    let pts = plan.source_waypoints();
    let n = pts.len();
    let closed = plan.is_closed();
    let normal = |a: Point2<T>, b: Point2<T>| {
        let d = b - a;
        let len = d.norm();
        Point2::new(-d.y / len, d.x / len)
    };
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let prev = if i > 0 { Some(pts[i - 1]) } else if closed { Some(pts[n - 1]) } else { None };
        let next = if i + 1 < n { Some(pts[i + 1]) } else if closed { Some(pts[0]) } else { None };
        let nrm = match (prev, next) {
            (Some(p), Some(q)) => {
                let a = normal(p, pts[i]);
                let b = normal(pts[i], q);
                let m = a + b;
                let scale = T::one() + a.dot(b);
                // miter join
                if scale > T::of(1e-6) { m * (T::one() / scale) } else { a }
            }
            (None, Some(q)) => normal(pts[i], q),
            (Some(p), None) => normal(p, pts[i]),
            (None, None) => Point2::new(T::zero(), T::zero()),
        };
        out.push(pts[i] + nrm * offset);
    }
    if closed {
        out.push(out[0]);
    }
    out
}
