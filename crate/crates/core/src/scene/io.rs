//! Line-delimited scene files.
//!
//! One JSON object per line:
//!
//! ```text
//! {"scene_id":"s1","frame_rate":2.500000,"person_ids":[1,2],"tracks":[[[x,y],..],[[x,y],..]]}
//! ```
//!
//! The first track is the primary person. `person_ids` is optional and
//! defaults to `1..=N`. A `null` in place of an `[x, y]` pair marks a
//! missing step. Coordinates are written with six fractional digits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::Deserialize;

use super::{PersonTrack, Point, Scene, WindowConfig};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScene {
    scene_id: String,
    frame_rate: f64,
    #[serde(default)]
    person_ids: Option<Vec<i64>>,
    tracks: Vec<Vec<Option<Point>>>,
}

/// Scenes read from a file plus counts of what was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub scenes: Vec<Scene>,
    /// Tracks skipped for wrong length or missing steps.
    pub dropped_tracks: usize,
    /// Scenes skipped because their primary track was unusable.
    pub dropped_scenes: usize,
}

pub fn parse_scenes<R: BufRead>(reader: R, config: &WindowConfig) -> Result<LoadReport> {
    config.validate()?;
    let mut scenes = Vec::new();
    let mut dropped_tracks = 0;
    let mut dropped_scenes = 0;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawScene = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            detail: e.to_string(),
        })?;
        if !(raw.frame_rate > 0.0) {
            return Err(Error::Parse {
                line: line_no,
                detail: format!("frame_rate must be positive, got {}", raw.frame_rate),
            });
        }
        let ids = match raw.person_ids {
            Some(ids) if ids.len() != raw.tracks.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    detail: format!("{} person_ids for {} tracks", ids.len(), raw.tracks.len()),
                })
            }
            Some(ids) => ids,
            None => (1..=raw.tracks.len() as i64).collect(),
        };
        let mut tracks = Vec::with_capacity(raw.tracks.len());
        let mut primary_ok = false;
        for (k, (steps, id)) in raw.tracks.into_iter().zip(ids).enumerate() {
            let complete = steps.len() == config.t_pred && steps.iter().all(Option::is_some);
            if !complete {
                dropped_tracks += 1;
                continue;
            }
            if k == 0 {
                primary_ok = true;
            }
            tracks.push(PersonTrack {
                person_id: id,
                positions: steps.into_iter().flatten().collect(),
            });
        }
        if !primary_ok {
            dropped_scenes += 1;
            continue;
        }
        let scene = Scene::new(raw.scene_id, tracks, raw.frame_rate).map_err(|e| Error::Parse {
            line: line_no,
            detail: e.to_string(),
        })?;
        scenes.push(scene);
    }
    if dropped_tracks + dropped_scenes > 0 {
        log::warn!("dropped {dropped_tracks} incomplete tracks and {dropped_scenes} scenes");
    }
    if scenes.is_empty() {
        return Err(Error::EmptyInput("no valid scenes in input".into()));
    }
    scenes.sort_by(|a, b| a.scene_id.cmp(&b.scene_id));
    Ok(LoadReport {
        scenes,
        dropped_tracks,
        dropped_scenes,
    })
}

pub fn load_scenes(path: &Path, config: &WindowConfig) -> Result<LoadReport> {
    let f = std::fs::File::open(path)?;
    parse_scenes(std::io::BufReader::new(f), config)
}

fn scene_line(scene: &Scene) -> String {
    let mut s = String::new();
    let id = serde_json::to_string(&scene.scene_id).expect("string serialises");
    write!(
        s,
        "{{\"scene_id\":{id},\"frame_rate\":{:.6},\"person_ids\":[",
        scene.frame_rate
    )
    .unwrap();
    for (k, t) in scene.tracks.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        write!(s, "{}", t.person_id).unwrap();
    }
    s.push_str("],\"tracks\":[");
    for (k, t) in scene.tracks.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push('[');
        for (j, p) in t.positions.iter().enumerate() {
            if j > 0 {
                s.push(',');
            }
            write!(s, "[{:.6},{:.6}]", p[0], p[1]).unwrap();
        }
        s.push(']');
    }
    s.push_str("]}");
    s
}

pub fn write_scenes<W: Write>(mut w: W, scenes: &[Scene]) -> Result<()> {
    for scene in scenes {
        writeln!(w, "{}", scene_line(scene))?;
    }
    Ok(())
}

pub fn save_scenes(path: &Path, scenes: &[Scene]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_scenes(&mut w, scenes)?;
    w.flush()?;
    Ok(())
}
