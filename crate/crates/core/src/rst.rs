//! Radial symmetry transform detector, dark-symmetry mode.
//!
//! Each pixel with a significant gradient casts a vote at the pixel `n`
//! steps against its gradient direction. For a dark disk all boundary
//! gradients point outward, so these votes pile up at the disk center.

use thiserror::Error;

use crate::detection::{
    timed, upscale_coord, Circle, DetectError, Detection, Detector, Method, Shape,
};
use crate::imaging::filter::convolve_separable;
use crate::imaging::{
    downsample4, gaussian_kernel, gradient, Field, GradientField, GrayImage, PixelCoord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum RstError {
    #[error("gradient is zero")]
    ZeroGradient,
}

/// Target of a negatively-affected vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Affected {
    Inside(PixelCoord),
    OutOfBounds(PixelCoord),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RstConfig {
    pub radii: Vec<usize>,
    /// Radial strictness exponent.
    pub alpha: f64,
    /// Pixels whose gradient magnitude is below this fraction of the image
    /// maximum cast no votes.
    pub grad_floor: f64,
}

impl Default for RstConfig {
    fn default() -> Self {
        RstConfig {
            radii: (5..=25).collect(),
            alpha: 2.0,
            grad_floor: 0.05,
        }
    }
}

impl RstConfig {
    pub fn with_range(r_min: usize, r_max: usize, alpha: f64) -> Self {
        RstConfig {
            radii: (r_min..=r_max).collect(),
            alpha,
            ..RstConfig::default()
        }
    }

    /// Gaussian σ for radius `n`.
    pub fn sigma(n: usize) -> f64 {
        0.1 * n as f64
    }

    /// Gaussian window side for radius `n`: `ceil(n/2)`, widened to odd.
    pub fn window(n: usize) -> usize {
        let w = n.div_ceil(2);
        if w.is_multiple_of(2) {
            w + 1
        } else {
            w
        }
    }
}

/// `p − round(n · g/‖g‖)`, rounding half away from zero.
pub fn negatively_affected(
    p: PixelCoord,
    g: (f64, f64),
    n: usize,
    width: usize,
    height: usize,
) -> Result<Affected, RstError> {
    let norm = g.0.hypot(g.1);
    if norm == 0.0 {
        return Err(RstError::ZeroGradient);
    }
    let dx = (n as f64 * g.0 / norm).round() as i64;
    let dy = (n as f64 * g.1 / norm).round() as i64;
    let q = PixelCoord::new(p.x - dx, p.y - dy);
    if q.x < 0 || q.y < 0 || q.x >= width as i64 || q.y >= height as i64 {
        Ok(Affected::OutOfBounds(q))
    } else {
        Ok(Affected::Inside(q))
    }
}

/// Orientation and magnitude projection images for one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct RstProjection {
    pub radius: usize,
    pub width: usize,
    pub height: usize,
    pub orientation: Vec<i64>,
    pub magnitude: Vec<f64>,
}

/// Accumulates only negatively-affected votes, so both projections are
/// non-positive everywhere.
pub fn accumulate_projections(grad: &GradientField, n: usize, grad_floor: f64) -> RstProjection {
    assert!(n >= 1, "radius must be at least 1");
    let (w, h) = (grad.width, grad.height);
    let mut proj = RstProjection {
        radius: n,
        width: w,
        height: h,
        orientation: vec![0; w * h],
        magnitude: vec![0.0; w * h],
    };
    let floor = grad_floor * grad.max_magnitude();
    for y in 0..h {
        for x in 0..w {
            let (gx, gy, m) = grad.at(x, y);
            if m == 0.0 || m <= floor {
                continue;
            }
            let p = PixelCoord::new(x as i64, y as i64);
            if let Ok(Affected::Inside(q)) = negatively_affected(p, (gx, gy), n, w, h) {
                let i = q.y as usize * w + q.x as usize;
                proj.orientation[i] -= 1;
                proj.magnitude[i] -= m;
            }
        }
    }
    proj
}

/// `F_n = (M_n/k_M)·(|O_n|/k_O)^α`; both projections are normalized by
/// their largest absolute value.
pub fn radial_strength(proj: &RstProjection, alpha: f64) -> Field {
    let k_o = proj
        .orientation
        .iter()
        .map(|v| v.unsigned_abs())
        .max()
        .unwrap_or(0) as f64;
    let k_m = proj.magnitude.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut f = Field::zeros(proj.width, proj.height);
    if k_o == 0.0 || k_m == 0.0 {
        return f;
    }
    for (i, out) in f.data.iter_mut().enumerate() {
        let o = proj.orientation[i].unsigned_abs() as f64 / k_o;
        *out = proj.magnitude[i] / k_m * o.powf(alpha);
    }
    f
}

/// `S_n`: the strength map smoothed with the radius-dependent Gaussian.
pub fn symmetry_contribution(proj: &RstProjection, alpha: f64) -> Field {
    let f = radial_strength(proj, alpha);
    let n = proj.radius;
    convolve_separable(
        &f,
        &gaussian_kernel(RstConfig::sigma(n), RstConfig::window(n)),
    )
}

/// Averaged symmetry map and the per-radius contributions it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryMap {
    pub width: usize,
    pub height: usize,
    pub radii: Vec<usize>,
    pub per_radius: Vec<Field>,
    pub combined: Field,
}

impl SymmetryMap {
    pub fn compute(grad: &GradientField, cfg: &RstConfig) -> Self {
        assert!(!cfg.radii.is_empty(), "at least one radius required");
        assert!(cfg.alpha > 0.0, "alpha must be positive");
        let per_radius: Vec<Field> = cfg
            .radii
            .iter()
            .map(|&n| {
                symmetry_contribution(&accumulate_projections(grad, n, cfg.grad_floor), cfg.alpha)
            })
            .collect();
        let mut combined = Field::zeros(grad.width, grad.height);
        for s in &per_radius {
            for (acc, v) in combined.data.iter_mut().zip(&s.data) {
                *acc += v;
            }
        }
        let count = per_radius.len() as f64;
        combined.data.iter_mut().for_each(|v| *v /= count);
        SymmetryMap {
            width: grad.width,
            height: grad.height,
            radii: cfg.radii.clone(),
            per_radius,
            combined,
        }
    }

    /// Pixel of largest |S|; ties go to the smallest (y, x).
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = (0, 0, f64::NEG_INFINITY);
        for y in 0..self.height {
            for x in 0..self.width {
                let v = self.combined.get(x, y).abs();
                if v > best.2 {
                    best = (x, y, v);
                }
            }
        }
        best
    }

    /// Radius whose contribution at `(x, y)` has the largest magnitude.
    pub fn best_radius(&self, x: usize, y: usize) -> usize {
        let mut best = (self.radii[0], f64::NEG_INFINITY);
        for (n, s) in self.radii.iter().zip(&self.per_radius) {
            let v = s.get(x, y).abs();
            if v > best.1 {
                best = (*n, v);
            }
        }
        best.0
    }
}

pub fn rst_detect(img: &GrayImage, cfg: &RstConfig) -> Result<Detection, DetectError> {
    timed(|| {
        let small = downsample4(img)?;
        let grad = gradient(&small)?;
        if grad.is_flat() {
            return Err(DetectError::FlatImage);
        }
        let map = SymmetryMap::compute(&grad, cfg);
        let (x, y, value) = map.argmax();
        if !(value > 0.0) {
            return Err(DetectError::NoMaximum);
        }
        let r = map.best_radius(x, y);
        let circle = Circle {
            cx: upscale_coord(x as f64),
            cy: upscale_coord(y as f64),
            r: 4.0 * r as f64,
        };
        Ok(Detection {
            method: Method::Rst,
            cx: circle.cx,
            cy: circle.cy,
            shape: Some(Shape::Circle(circle)),
            score: value,
            elapsed: 0.0,
        })
    })
}

impl Detector for RstConfig {
    fn method(&self) -> Method {
        Method::Rst
    }

    fn detect(&self, img: &GrayImage) -> Result<Detection, DetectError> {
        rst_detect(img, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affected_pixel_examples() {
        let p = PixelCoord::new(10, 10);
        assert_eq!(
            negatively_affected(p, (1.0, 0.0), 2, 20, 20),
            Ok(Affected::Inside(PixelCoord::new(8, 10)))
        );
        // 5 * (0.6, 0.8) = (3, 4)
        assert_eq!(
            negatively_affected(p, (3.0, 4.0), 5, 20, 20),
            Ok(Affected::Inside(PixelCoord::new(7, 6)))
        );
        assert_eq!(
            negatively_affected(p, (0.0, 0.0), 3, 20, 20),
            Err(RstError::ZeroGradient)
        );
        assert!(matches!(
            negatively_affected(PixelCoord::new(1, 1), (1.0, 0.0), 3, 20, 20),
            Ok(Affected::OutOfBounds(_))
        ));
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        // 5 * (0.5, 0.866) = (2.5, 4.33) -> (3, 4)
        let g = (1.0, 3f64.sqrt());
        match negatively_affected(PixelCoord::new(10, 10), g, 5, 20, 20).unwrap() {
            Affected::Inside(q) => assert_eq!(q, PixelCoord::new(10 - 3, 10 - 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn zero_gradient_gives_zero_projection() {
        let grad = gradient(&GrayImage::filled(12, 12, 40)).unwrap();
        let proj = accumulate_projections(&grad, 3, 0.05);
        assert!(proj.orientation.iter().all(|&v| v == 0));
        assert!(proj.magnitude.iter().all(|&v| v == 0.0));
        assert!(symmetry_contribution(&proj, 2.0)
            .data
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn edge_votes_land_on_dark_side() {
        // bright on the left, dark on the right: gradient points left
        let img = GrayImage::from_fn(30, 20, |x, _| if x < 15 { 200 } else { 20 });
        let grad = gradient(&img).unwrap();
        let n = 4;
        let proj = accumulate_projections(&grad, n, 0.05);
        let voters: Vec<usize> = (0..30).filter(|&x| grad.at(x, 10).2 > 0.0).collect();
        assert_eq!(voters, vec![14, 15]);
        for y in 0..20 {
            for x in 0..30 {
                let v = proj.orientation[y * 30 + x];
                if v != 0 {
                    assert!(x == 14 + n || x == 15 + n, "vote at column {x}");
                    assert!((1..19).contains(&y));
                }
            }
        }
    }

    #[test]
    fn dark_disk_votes_at_center() {
        let (cx, cy, r) = (25.0, 22.0, 8.0);
        let img = GrayImage::from_fn(50, 45, |x, y| {
            if (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2) <= r * r {
                10
            } else {
                200
            }
        });
        let grad = gradient(&img).unwrap();
        let proj = accumulate_projections(&grad, 8, 0.05);
        let (i, _) = proj
            .orientation
            .iter()
            .enumerate()
            .min_by_key(|(_, &v)| v)
            .unwrap();
        let (x, y) = ((i % 50) as f64, (i / 50) as f64);
        assert!(
            (x - cx).abs() <= 1.0 && (y - cy).abs() <= 1.0,
            "peak at ({x},{y})"
        );

        let s = symmetry_contribution(&proj, 2.0);
        let (j, _) = s
            .data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        let (x, y) = ((j % 50) as f64, (j / 50) as f64);
        assert!((x - cx).abs() <= 1.0 && (y - cy).abs() <= 1.0);
    }

    #[test]
    fn higher_alpha_sharpens() {
        let img = GrayImage::from_fn(40, 40, |x, y| {
            if (x as f64 - 20.0).powi(2) + (y as f64 - 18.0).powi(2) <= 36.0 {
                10
            } else {
                180
            }
        });
        let grad = gradient(&img).unwrap();
        let proj = accumulate_projections(&grad, 6, 0.05);
        let (f2, f4) = (radial_strength(&proj, 2.0), radial_strength(&proj, 4.0));
        for (a, b) in f2.data.iter().zip(&f4.data) {
            assert!(b.abs() <= a.abs() + 1e-15);
        }
    }

    #[test]
    fn window_is_odd() {
        assert_eq!(RstConfig::window(5), 3);
        assert_eq!(RstConfig::window(7), 5);
        assert_eq!(RstConfig::window(8), 5);
        assert_eq!(RstConfig::window(25), 13);
        assert_eq!(RstConfig::window(1), 1);
    }

    #[test]
    fn constant_image_is_flat() {
        let img = GrayImage::filled(64, 48, 90);
        assert!(matches!(
            rst_detect(&img, &RstConfig::default()),
            Err(DetectError::FlatImage)
        ));
    }
}
