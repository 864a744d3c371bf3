//! Multi-person scenes, their file format, synthetic generation and
//! coordinate normalisation.

mod io;
mod synth;

pub use io::{load_scenes, parse_scenes, save_scenes, write_scenes, LoadReport};
pub use synth::{generate_synthetic, GenConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Observation and prediction window lengths, in steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WindowConfig {
    pub t_obs: usize,
    /// Total window length: observed plus predicted steps.
    pub t_pred: usize,
    pub frame_rate: f64,
}

impl Default for WindowConfig {
    fn default() -> Self {
        Self {
            t_obs: 9,
            t_pred: 21,
            frame_rate: 2.5,
        }
    }
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_obs == 0 || self.t_obs >= self.t_pred {
            return Err(Error::Config(format!(
                "need 0 < t_obs < t_pred, got t_obs={} t_pred={}",
                self.t_obs, self.t_pred
            )));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::Config(format!(
                "frame_rate must be positive, got {}",
                self.frame_rate
            )));
        }
        Ok(())
    }

    pub fn horizon(&self) -> usize {
        self.t_pred - self.t_obs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersonTrack {
    pub person_id: i64,
    pub positions: Vec<Point>,
}

impl PersonTrack {
    pub fn observed(&self, t_obs: usize) -> &[Point] {
        &self.positions[..t_obs]
    }

    pub fn future(&self, t_obs: usize) -> &[Point] {
        &self.positions[t_obs..]
    }
}

/// One window of `N` people. The primary person is always `tracks[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub tracks: Vec<PersonTrack>,
    pub frame_rate: f64,
}

impl Scene {
    pub const PRIMARY_INDEX: usize = 0;

    pub fn new(scene_id: impl Into<String>, tracks: Vec<PersonTrack>, frame_rate: f64) -> Result<Self> {
        let s = Self {
            scene_id: scene_id.into(),
            tracks,
            frame_rate,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(first) = self.tracks.first() else {
            return Err(Error::Contract(format!("scene {} has no tracks", self.scene_id)));
        };
        let len = first.positions.len();
        if self.tracks.iter().any(|t| t.positions.len() != len) {
            return Err(Error::Contract(format!(
                "scene {} mixes window lengths",
                self.scene_id
            )));
        }
        if !(self.frame_rate > 0.0) {
            return Err(Error::Contract(format!(
                "scene {} has frame rate {}",
                self.scene_id, self.frame_rate
            )));
        }
        if self
            .tracks
            .iter()
            .flat_map(|t| t.positions.iter())
            .any(|p| !p[0].is_finite() || !p[1].is_finite())
        {
            return Err(Error::Contract(format!(
                "scene {} has non-finite coordinates",
                self.scene_id
            )));
        }
        Ok(())
    }

    pub fn num_people(&self) -> usize {
        self.tracks.len()
    }

    pub fn primary(&self) -> &PersonTrack {
        &self.tracks[Self::PRIMARY_INDEX]
    }

    pub fn window_len(&self) -> usize {
        self.tracks[0].positions.len()
    }

    /// Copy keeping only the listed people, in the given order.
    pub fn subset(&self, keep: &[usize]) -> Scene {
        Scene {
            scene_id: self.scene_id.clone(),
            tracks: keep.iter().map(|&i| self.tracks[i].clone()).collect(),
            frame_rate: self.frame_rate,
        }
    }
}

/// Rigid transform taking original coordinates to the normalised frame:
/// `p' = R(angle) (p - origin)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub origin: Point,
    pub angle: f64,
}

impl Transform {
    pub fn apply(&self, p: Point) -> Point {
        let (s, c) = self.angle.sin_cos();
        let x = p[0] - self.origin[0];
        let y = p[1] - self.origin[1];
        if self.angle == 0.0 {
            return [x, y];
        }
        [c * x - s * y, s * x + c * y]
    }

    pub fn invert(&self, p: Point) -> Point {
        let (x, y) = if self.angle == 0.0 {
            (p[0], p[1])
        } else {
            let (s, c) = self.angle.sin_cos();
            (c * p[0] + s * p[1], -s * p[0] + c * p[1])
        };
        [x + self.origin[0], y + self.origin[1]]
    }
}

fn map_scene(scene: &Scene, f: impl Fn(Point) -> Point) -> Scene {
    Scene {
        scene_id: scene.scene_id.clone(),
        tracks: scene
            .tracks
            .iter()
            .map(|t| PersonTrack {
                person_id: t.person_id,
                positions: t.positions.iter().map(|&p| f(p)).collect(),
            })
            .collect(),
        frame_rate: scene.frame_rate,
    }
}

/// Translates the scene so the primary's last observed position is the
/// origin.
pub fn normalize_scene(scene: &Scene, t_obs: usize) -> (Scene, Transform) {
    normalize_scene_rotated(scene, t_obs, 0.0)
}

/// As [`normalize_scene`], followed by a rotation by `angle` radians
/// applied identically to every person.
pub fn normalize_scene_rotated(scene: &Scene, t_obs: usize, angle: f64) -> (Scene, Transform) {
    let origin = scene.primary().positions[t_obs - 1];
    let tf = Transform { origin, angle };
    (map_scene(scene, |p| tf.apply(p)), tf)
}

pub fn denormalize_scene(scene: &Scene, tf: &Transform) -> Scene {
    map_scene(scene, |p| tf.invert(p))
}
