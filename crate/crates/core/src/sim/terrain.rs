use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{polygon_contains, polygon_is_simple, Point2};
use crate::scalar::Scalar;

/// Hidden surface parameters. `grip = 1, roughness = 0, drag = 0` is ideal ground.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TerrainParams<T> {
    pub grip: T,
    #[serde(default = "zero")]
    pub roughness: T,
    /// 1/s
    #[serde(default = "zero")]
    pub drag: T,
}

fn zero<T: Scalar>() -> T {
    T::zero()
}

impl<T: Scalar> TerrainParams<T> {
    pub fn new(grip: T, roughness: T, drag: T) -> Self {
        TerrainParams { grip, roughness, drag }
    }

    pub fn ideal() -> Self {
        TerrainParams::new(T::one(), T::zero(), T::zero())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grip > T::zero() && self.grip <= T::one()) {
            return Err(Error::Validation(format!("grip {} outside (0, 1]", self.grip)));
        }
        if !(self.roughness >= T::zero() && self.roughness.is_finite()) {
            return Err(Error::Validation(format!("roughness {} must be >= 0", self.roughness)));
        }
        if !(self.drag >= T::zero() && self.drag.is_finite()) {
            return Err(Error::Validation(format!("drag {} must be >= 0", self.drag)));
        }
        Ok(())
    }
}

impl<T: Scalar> Default for TerrainParams<T> {
    fn default() -> Self {
        Self::ideal()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TerrainPatch<T> {
    #[serde(default)]
    pub name: String,
    pub boundary: Vec<Point2<T>>,
    #[serde(flatten)]
    pub params: TerrainParams<T>,
}

impl<T: Scalar> TerrainPatch<T> {
    pub fn new(name: impl Into<String>, boundary: Vec<Point2<T>>, params: TerrainParams<T>) -> Self {
        TerrainPatch {
            name: name.into(),
            boundary,
            params,
        }
    }

    pub fn rectangle(name: impl Into<String>, min: Point2<T>, max: Point2<T>, params: TerrainParams<T>) -> Self {
        let boundary = vec![min, Point2::new(max.x, min.y), max, Point2::new(min.x, max.y)];
        Self::new(name, boundary, params)
    }

    pub fn contains(&self, p: Point2<T>) -> bool {
        polygon_contains(&self.boundary, p)
    }
}

/// Spatial map of terrain parameters. Later patches override earlier ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct TerrainField<T> {
    #[serde(default)]
    pub nominal: TerrainParams<T>,
    #[serde(default, rename = "patch")]
    pub patches: Vec<TerrainPatch<T>>,
}

impl<T: Scalar> Default for TerrainField<T> {
    fn default() -> Self {
        Self::uniform(TerrainParams::ideal())
    }
}

impl<T: Scalar> TerrainField<T> {
    pub fn uniform(nominal: TerrainParams<T>) -> Self {
        TerrainField {
            nominal,
            patches: Vec::new(),
        }
    }

    pub fn with_patch(mut self, patch: TerrainPatch<T>) -> Self {
        self.patches.push(patch);
        self
    }

    /// Parameters at `point`; total over the plane.
    pub fn terrain_at(&self, point: Point2<T>) -> TerrainParams<T> {
        self.patches
            .iter()
            .rev()
            .find(|patch| patch.contains(point))
            .map(|patch| patch.params)
            .unwrap_or(self.nominal)
    }

    /// Check every patch polygon and parameter set.
    pub fn validate(&self) -> Result<()> {
        self.nominal.validate()?;
        for (i, patch) in self.patches.iter().enumerate() {
            let label = if patch.name.is_empty() {
                format!("patch #{i}")
            } else {
                format!("patch #{i} ({})", patch.name)
            };
            if patch.boundary.len() < 3 {
                return Err(Error::Validation(format!("{label}: polygon needs at least 3 vertices")));
            }
            if !polygon_is_simple(&patch.boundary) {
                return Err(Error::Validation(format!("{label}: polygon is self-intersecting")));
            }
            patch
                .params
                .validate()
                .map_err(|e| Error::Validation(format!("{label}: {e}")))?;
        }
        Ok(())
    }
}
