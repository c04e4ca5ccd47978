//! Scenario files (terrain, track, exploration arena) and content hashing.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::Bounce;
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::plan::{offset_polyline, BoundarySpec, GlobalPlan, PathBuilder, Track, TurnGate};
use crate::scalar::Scalar;
use crate::sim::TerrainField;

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// One piece of a turtle-style track layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Piece {
    Straight(f64),
    /// Circular arc; `angle` in degrees, positive turns left.
    Arc {
        radius: f64,
        angle: f64,
        #[serde(default)]
        label: Option<String>,
    },
}

/// Compact track description: a corridor of `half_width` around a plan built
/// from straights and arcs. Every arc becomes a turn gate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    #[serde(default)]
    pub start: [f64; 2],
    /// Initial heading, degrees.
    #[serde(default)]
    pub heading: f64,
    #[serde(default = "default_closed")]
    pub closed: bool,
    pub half_width: f64,
    /// Gates reach this far to each side of the plan; defaults to `half_width + 0.3`.
    #[serde(default)]
    pub gate_half_width: Option<f64>,
    /// Gates start this far before an arc and end this far after it, m.
    #[serde(default = "default_gate_margin")]
    pub gate_margin: f64,
    pub pieces: Vec<Piece>,
}

fn default_closed() -> bool {
    true
}

fn default_gate_margin() -> f64 {
    0.3
}

impl Layout {
    pub fn build<T: Scalar>(&self) -> Result<Track<T>> {
        if !(self.half_width > 0.0) {
            return Err(Error::Validation("layout half_width must be > 0".into()));
        }
        let start = Point2::new(T::of(self.start[0]), T::of(self.start[1]));
        let mut builder = PathBuilder::new(start, T::of(self.heading.to_radians()));
        let mut arcs = Vec::new();
        let mut length = 0.0;
        for (i, piece) in self.pieces.iter().enumerate() {
            match piece {
                Piece::Straight(l) => {
                    if !(*l > 0.0) {
                        return Err(Error::Validation(format!("layout piece {i}: straight length must be > 0")));
                    }
                    builder = builder.straight(T::of(*l));
                    length += l;
                }
                Piece::Arc { radius, angle, label } => {
                    if !(*radius > 0.0 && *angle != 0.0 && angle.is_finite()) {
                        return Err(Error::Validation(format!("layout piece {i}: arc needs radius > 0 and angle != 0")));
                    }
                    let sweep = radius * angle.to_radians().abs();
                    let label = label.clone().unwrap_or_else(|| format!("T{}", arcs.len() + 1));
                    arcs.push((label, length, length + sweep));
                    builder = builder.arc(T::of(*radius), T::of(angle.to_radians()));
                    length += sweep;
                }
            }
        }
        if self.closed {
            let gap = builder.current().distance(start).f64();
            let turn = (builder.heading().f64() - self.heading.to_radians()) / std::f64::consts::TAU;
            if gap > 1e-3 || (turn - turn.round()).abs() > 1e-6 {
                return Err(Error::Validation(format!(
                    "layout does not close: ends {gap:.4} m from the start"
                )));
            }
        }
        let plan = GlobalPlan::new(builder.finish(self.closed), self.closed)?;
        // arc lengths above are exact; the plan is a chord approximation
        let scale = plan.total_length().f64() / length;
        let gate_w = T::of(self.gate_half_width.unwrap_or(self.half_width + 0.3));
        let margin = self.gate_margin;
        let gates = arcs
            .into_iter()
            .map(|(label, a, b)| {
                let entry = T::of((a - margin) * scale);
                let exit = T::of((b + margin) * scale);
                TurnGate::across(&plan, label, plan.normalize_arclength(entry), plan.normalize_arclength(exit), gate_w)
            })
            .collect();
        let hw = T::of(self.half_width);
        let bounds = vec![offset_polyline(&plan, hw), offset_polyline(&plan, -hw)];
        Track::new(plan, bounds, gates)
    }
}

/// The `[track]` table: either a `layout` or an explicit plan with boundaries and gates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackSection {
    #[serde(default)]
    layout: Option<Layout>,
    #[serde(default)]
    plan: Option<GlobalPlan<f64>>,
    #[serde(default)]
    boundary: Vec<BoundarySpec<f64>>,
    #[serde(default)]
    gate: Vec<TurnGate<f64>>,
}

impl TrackSection {
    fn build<T: Scalar>(self) -> Result<Track<T>> {
        match (self.layout, self.plan) {
            (Some(layout), None) if self.boundary.is_empty() && self.gate.is_empty() => layout.build(),
            (None, Some(plan)) => {
                let cast = |pts: &[Point2<f64>]| pts.iter().map(|p| p.cast::<T>()).collect::<Vec<_>>();
                let plan = GlobalPlan::new(cast(plan.source_waypoints()), plan.is_closed())?;
                let bounds = self.boundary.iter().map(|b| cast(&b.points)).collect();
                let gates = self
                    .gate
                    .iter()
                    .map(|g| TurnGate {
                        label: g.label.clone(),
                        entry: crate::geometry::Segment::new(g.entry.a.cast(), g.entry.b.cast()),
                        exit: crate::geometry::Segment::new(g.exit.a.cast(), g.exit.b.cast()),
                    })
                    .collect();
                Track::new(plan, bounds, gates)
            }
            _ => Err(Error::Validation(
                "track needs either a layout or an explicit plan (with optional boundary and gate tables), not both".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    name: String,
    #[serde(default)]
    terrain: TerrainField<f64>,
    #[serde(default)]
    track: Option<TrackSection>,
    #[serde(default)]
    arena: Option<Bounce>,
}

/// A terrain field with an optional evaluation track and exploration arena.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario<T: Scalar> {
    pub name: String,
    pub terrain: TerrainField<T>,
    pub track: Option<Track<T>>,
    pub arena: Option<Bounce>,
    /// SHA-256 of the source text.
    pub hash: String,
}

impl<T: Scalar> Scenario<T> {
    /// Parse and validate: patch polygons must be simple, parameters in range,
    /// every gate must cross the plan exactly once.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text)?;
        let terrain_f64 = file.terrain;
        terrain_f64.validate()?;
        let terrain: TerrainField<T> = serde_json::from_value(serde_json::to_value(&terrain_f64)?)?;
        let track = file.track.map(TrackSection::build).transpose()?;
        if let Some(b) = &file.arena {
            if !(b.radius > 0.0) {
                return Err(Error::Validation("arena radius must be > 0".into()));
            }
        }
        Ok(Scenario {
            name: file.name,
            terrain,
            track,
            arena: file.arena,
            hash: sha256_hex(text.as_bytes()),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Io { .. } => e,
            other => Error::Validation(format!("{}: {other}", path.display())),
        })
    }

    pub fn require_track(&self) -> Result<&Track<T>> {
        self.track
            .as_ref()
            .ok_or_else(|| Error::Config(format!("scenario '{}' has no [track]", self.name)))
    }
}

/// Scenario files shipped with the crate.
pub const BUNDLED: [(&str, &str); 3] = [
    ("demo", include_str!("../../../configs/scenarios/demo.toml")),
    ("unseen", include_str!("../../../configs/scenarios/unseen.toml")),
    ("arena", include_str!("../../../configs/scenarios/arena.toml")),
];

pub fn bundled<T: Scalar>(name: &str) -> Result<Scenario<T>> {
    let text = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| *t)
        .ok_or_else(|| Error::Config(format!("no bundled scenario '{name}' (have: demo, unseen, arena)")))?;
    Scenario::from_toml(text)
}
