//! Integro-differential operator detector.
//!
//! For each surviving dark candidate pixel the mean intensity along
//! circles of increasing radius is computed; the radial derivative of that
//! profile, smoothed with a small Gaussian and taken in absolute value,
//! peaks where the circle crosses the pupil boundary.

use thiserror::Error;

use crate::detection::{
    timed, upscale_coord, Circle, DetectError, Detection, Detector, Method, Shape,
};
use crate::imaging::{downsample4, gaussian_kernel, remove_light_spots, GrayImage, PixelCoord};

/// Radial smoothing of the derivative profile.
pub const RADIAL_SIGMA: f64 = 1.0;
pub const RADIAL_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum IdoError {
    #[error("need at least 3 consecutive valid radii, got {0}")]
    TooFewRadii(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdoConfig {
    pub r_min: usize,
    pub r_max: usize,
    /// Candidate pixels must be at most this bright.
    pub threshold: u8,
    /// Pixels brighter than this are treated as specular spots.
    pub bright_threshold: u8,
}

impl Default for IdoConfig {
    fn default() -> Self {
        IdoConfig {
            r_min: 5,
            r_max: 25,
            threshold: 25,
            bright_threshold: 200,
        }
    }
}

/// Mean intensity on the circle of radius `r` around `center`, sampled at
/// `max(8, round(2πr))` equiangular points with bilinear interpolation.
/// `None` when more than half of the samples fall outside the image.
pub fn contour_mean(img: &GrayImage, center: PixelCoord, r: f64) -> Option<f64> {
    assert!(r >= 1.0, "radius must be at least 1");
    let n = ((2.0 * std::f64::consts::PI * r).round() as usize).max(8);
    let mut sum = 0.0;
    let mut inside = 0usize;
    for k in 0..n {
        let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        let x = center.x as f64 + r * t.cos();
        let y = center.y as f64 + r * t.sin();
        if let Some(v) = img.sample_bilinear(x, y) {
            sum += v;
            inside += 1;
        }
    }
    if 2 * inside < n {
        None
    } else {
        Some(sum / inside as f64)
    }
}

/// |G_σ ∗ ∂m/∂r| for a profile of contour means at consecutive radii.
pub fn ido_score(means: &[f64]) -> Result<Vec<f64>, IdoError> {
    let n = means.len();
    if n < 3 {
        return Err(IdoError::TooFewRadii(n));
    }
    let deriv: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                means[1] - means[0]
            } else if i == n - 1 {
                means[n - 1] - means[n - 2]
            } else {
                (means[i + 1] - means[i - 1]) / 2.0
            }
        })
        .collect();
    let kernel = gaussian_kernel(RADIAL_SIGMA, RADIAL_WINDOW);
    let half = (kernel.len() / 2) as i64;
    Ok((0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(k, &tap)| {
                    let j = (i as i64 + k as i64 - half).clamp(0, n as i64 - 1) as usize;
                    tap * deriv[j]
                })
                .sum::<f64>()
                .abs()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdoCandidateSet {
    pub pixels: Vec<PixelCoord>,
    pub width: usize,
    pub height: usize,
}

/// Keeps dark pixels (`<= threshold`) that are minima of their 3×3
/// neighborhood. Within a tie group the row-major first pixel is kept and
/// its neighbors are discarded, so flat dark areas thin out to a sparse
/// lattice in which every eligible pixel has a survivor within one pixel.
pub fn prune_candidates(img: &GrayImage, threshold: u8) -> IdoCandidateSet {
    let (w, h) = (img.width(), img.height());
    let mut kept = vec![false; w * h];
    let mut pixels = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let v = img.get(x, y);
            if v > threshold {
                continue;
            }
            let mut is_min = true;
            let mut blocked = false;
            for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                for nx in x.saturating_sub(1)..=(x + 1).min(w - 1) {
                    if (nx, ny) == (x, y) {
                        continue;
                    }
                    if img.get(nx, ny) < v {
                        is_min = false;
                    }
                    if kept[ny * w + nx] {
                        blocked = true;
                    }
                }
            }
            if is_min && !blocked {
                kept[y * w + x] = true;
                pixels.push(PixelCoord::new(x as i64, y as i64));
            }
        }
    }
    IdoCandidateSet {
        pixels,
        width: w,
        height: h,
    }
}

/// Contour means and operator values per candidate over a radius range.
/// Entries past the first invalid radius are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct IdoScoreTable {
    pub r_min: usize,
    pub r_max: usize,
    pub candidates: Vec<PixelCoord>,
    pub means: Vec<Vec<Option<f64>>>,
    pub scores: Vec<Vec<Option<f64>>>,
}

impl IdoScoreTable {
    pub fn build(img: &GrayImage, candidates: &[PixelCoord], r_min: usize, r_max: usize) -> Self {
        assert!(
            1 <= r_min && r_min <= r_max,
            "radius range must satisfy 1 <= r_min <= r_max"
        );
        let radii = r_max - r_min + 1;
        let mut means = Vec::with_capacity(candidates.len());
        let mut scores = Vec::with_capacity(candidates.len());
        for &c in candidates {
            let mut row: Vec<Option<f64>> = Vec::with_capacity(radii);
            for r in r_min..=r_max {
                match contour_mean(img, c, r as f64) {
                    Some(m) => row.push(Some(m)),
                    None => break,
                }
            }
            let valid: Vec<f64> = row.iter().map(|m| m.expect("prefix is valid")).collect();
            let mut score_row = vec![None; radii];
            if let Ok(s) = ido_score(&valid) {
                for (i, v) in s.into_iter().enumerate() {
                    score_row[i] = Some(v);
                }
            }
            row.resize(radii, None);
            means.push(row);
            scores.push(score_row);
        }
        IdoScoreTable {
            r_min,
            r_max,
            candidates: candidates.to_vec(),
            means,
            scores,
        }
    }

    /// Best (candidate, radius, score); ties go to the smallest (r, y, x).
    pub fn argmax(&self) -> Option<(PixelCoord, usize, f64)> {
        let mut best: Option<(PixelCoord, usize, f64)> = None;
        for (c, row) in self.candidates.iter().zip(&self.scores) {
            for (i, s) in row.iter().enumerate() {
                let Some(s) = *s else { continue };
                let r = self.r_min + i;
                let better = match best {
                    None => true,
                    Some((bc, br, bs)) => s > bs || (s == bs && (r, c.y, c.x) < (br, bc.y, bc.x)),
                };
                if better {
                    best = Some((*c, r, s));
                }
            }
        }
        best
    }
}

pub fn ido_detect(img: &GrayImage, cfg: &IdoConfig) -> Result<Detection, DetectError> {
    timed(|| {
        let small = downsample4(img)?;
        let cleaned = remove_light_spots(&small, cfg.bright_threshold);
        let candidates = prune_candidates(&cleaned, cfg.threshold);
        if candidates.pixels.is_empty() {
            return Err(DetectError::NoCandidates);
        }
        let table = IdoScoreTable::build(&cleaned, &candidates.pixels, cfg.r_min, cfg.r_max);
        let (center, r, score) = table.argmax().ok_or(DetectError::NoMaximum)?;
        if !(score > 0.0) {
            return Err(DetectError::NoMaximum);
        }
        let circle = Circle {
            cx: upscale_coord(center.x as f64),
            cy: upscale_coord(center.y as f64),
            r: 4.0 * r as f64,
        };
        Ok(Detection {
            method: Method::Ido,
            cx: circle.cx,
            cy: circle.cy,
            shape: Some(Shape::Circle(circle)),
            score,
            elapsed: 0.0,
        })
    })
}

impl Detector for IdoConfig {
    fn method(&self) -> Method {
        Method::Ido
    }

    fn detect(&self, img: &GrayImage) -> Result<Detection, DetectError> {
        ido_detect(img, self)
    }
}
