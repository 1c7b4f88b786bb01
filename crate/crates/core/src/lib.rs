//! Classical pupil-center detectors and the harness used to compare them.
//!
//! Four detectors share one set of preprocessing primitives in [`imaging`]:
//!
//! * [`cht`]: circular Hough transform over an edge map,
//! * [`ef`]: direct least-squares ellipse fit to the pupil contour,
//! * [`ido`]: Daugman's integro-differential operator on dark candidates,
//! * [`rst`]: radial symmetry transform restricted to dark symmetry.
//!
//! [`eval`] holds ground truth, the hit criterion, the synthetic eye
//! generator and the benchmark/report machinery.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cht;
pub mod detection;
pub mod ef;
pub mod eval;
pub mod ido;
pub mod imaging;
pub mod rst;

pub use detection::{Circle, DetectError, Detection, Detector, Ellipse, Method, Shape};
pub use imaging::{BinaryImage, GrayImage, PixelCoord};
