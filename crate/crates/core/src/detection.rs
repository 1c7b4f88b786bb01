//! Detector-agnostic result types.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ef::FitError;
use crate::imaging::{GrayImage, ImagingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CHT")]
    Cht,
    #[serde(rename = "EF")]
    Ef,
    #[serde(rename = "IDO")]
    Ido,
    #[serde(rename = "RST")]
    Rst,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Cht, Method::Ef, Method::Ido, Method::Rst];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cht => "CHT",
            Method::Ef => "EF",
            Method::Ido => "IDO",
            Method::Rst => "RST",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cht" => Ok(Method::Cht),
            "ef" => Ok(Method::Ef),
            "ido" => Ok(Method::Ido),
            "rst" => Ok(Method::Rst),
            other => Err(format!(
                "unknown method '{other}' (expected cht, ef, ido or rst)"
            )),
        }
    }
}

/// Circle in full-resolution pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

/// Ellipse with semi-axes `a >= b > 0` and orientation `theta` of the
/// major axis in `[-π/2, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Shape {
    Circle(Circle),
    Ellipse(Ellipse),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub method: Method,
    pub cx: f64,
    pub cy: f64,
    pub shape: Option<Shape>,
    pub score: f64,
    /// Wall-clock seconds spent in the detector.
    pub elapsed: f64,
}

#[derive(Debug, Error)]
pub enum DetectError {
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("edge map is empty")]
    NoEdges,
    #[error("no circle found (best cell has {votes} votes)")]
    NoCircleFound { votes: u32 },
    #[error("no pupil contour found")]
    NoContour,
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("no candidate pixels survived pruning")]
    NoCandidates,
    #[error("operator is zero everywhere")]
    NoMaximum,
    #[error("image gradient is zero everywhere")]
    FlatImage,
}

/// Runs a detector on an image, measuring its wall-clock time.
pub trait Detector {
    fn method(&self) -> Method;

    fn detect(&self, img: &GrayImage) -> Result<Detection, DetectError>;
}

pub(crate) fn timed<F>(f: F) -> Result<Detection, DetectError>
where
    F: FnOnce() -> Result<Detection, DetectError>,
{
    let start = Instant::now();
    let mut det = f()?;
    det.elapsed = start.elapsed().as_secs_f64();
    Ok(det)
}

/// Maps a downsampled pixel index back to full resolution: the center of
/// its 4×4 source block.
pub(crate) fn upscale_coord(v: f64) -> f64 {
    v * 4.0 + 1.5
}
