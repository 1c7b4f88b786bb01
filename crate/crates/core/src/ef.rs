//! Ellipse-fitting detector.
//!
//! Contour extraction (threshold, closing, Canny, longest 8-connected
//! chain) followed by the direct least-squares ellipse fit: minimize the
//! algebraic distance `Σ (a·x_i)²` subject to `4ac − b² = 1`, i.e. solve
//! `DᵀD a = λ C a`. The 6×6 pencil is singular, so it is reduced to a 3×3
//! ordinary eigenproblem on the quadratic block.

use nalgebra::{DMatrix, Matrix3, Matrix6, Vector3};
use thiserror::Error;

use crate::detection::{timed, DetectError, Detection, Detector, Ellipse, Method, Shape};
use crate::imaging::{
    canny, close, connected_components, threshold_binarize, BinaryImage, CannyThresholds,
    GrayImage, PixelCoord, StructuringElement,
};

pub const MIN_POINTS: usize = 6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("need at least {MIN_POINTS} points, got {0}")]
    InsufficientPoints(usize),
    #[error("points do not determine an ellipse")]
    DegenerateConfiguration,
    #[error("conic is not an ellipse (4ac - b^2 = {0})")]
    NotAnEllipse(f64),
}

/// Coefficients of `a x² + b xy + c y² + d x + e y + f = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
}

impl ConicCoefficients {
    pub fn from_array(v: [f64; 6]) -> Self {
        ConicCoefficients {
            a: v[0],
            b: v[1],
            c: v[2],
            d: v[3],
            e: v[4],
            f: v[5],
        }
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.a, self.b, self.c, self.d, self.e, self.f]
    }

    /// `4ac − b²`; positive for ellipses.
    pub fn discriminant(&self) -> f64 {
        4.0 * self.a * self.c - self.b * self.b
    }

    /// Algebraic distance of a point to the conic.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        self.a * x * x + self.b * x * y + self.c * y * y + self.d * x + self.e * y + self.f
    }

    /// Rescales so that `4ac − b² = 1` with `a > 0`.
    pub fn normalized(self) -> Result<Self, FitError> {
        let disc = self.discriminant();
        if !(disc > 0.0) {
            return Err(FitError::NotAnEllipse(disc));
        }
        let mut k = 1.0 / disc.sqrt();
        if self.a < 0.0 {
            k = -k;
        }
        Ok(ConicCoefficients::from_array(
            self.to_array().map(|v| v * k),
        ))
    }
}

/// Constraint matrix with `aᵀ C a = 4ac − b²`.
pub fn constraint_matrix() -> Matrix6<f64> {
    let mut c = Matrix6::zeros();
    c[(0, 2)] = 2.0;
    c[(2, 0)] = 2.0;
    c[(1, 1)] = -1.0;
    c
}

/// Design, scatter and constraint matrices for a point set, built in
/// normalized coordinates (centroid at the origin, unit mean absolute
/// deviation).
#[derive(Debug, Clone)]
pub struct FitSystem {
    pub design: DMatrix<f64>,
    pub scatter: Matrix6<f64>,
    pub constraint: Matrix6<f64>,
    center: (f64, f64),
    scale: f64,
}

/// One solution of the reduced eigenproblem, in normalized coordinates.
#[derive(Debug, Clone, Copy)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub coefficients: [f64; 6],
    /// `aᵀ C a` for the unit-norm quadratic block.
    pub constraint_value: f64,
}

impl FitSystem {
    pub fn new(points: &[(f64, f64)]) -> Result<Self, FitError> {
        if points.len() < MIN_POINTS {
            return Err(FitError::InsufficientPoints(points.len()));
        }
        let n = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
        let my = points.iter().map(|p| p.1).sum::<f64>() / n;
        let scale = points
            .iter()
            .map(|p| ((p.0 - mx).abs() + (p.1 - my).abs()) / 2.0)
            .sum::<f64>()
            / n;
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(FitError::DegenerateConfiguration);
        }
        let design = DMatrix::from_fn(points.len(), 6, |i, j| {
            let x = (points[i].0 - mx) / scale;
            let y = (points[i].1 - my) / scale;
            match j {
                0 => x * x,
                1 => x * y,
                2 => y * y,
                3 => x,
                4 => y,
                _ => 1.0,
            }
        });
        let product = design.transpose() * &design;
        let scatter = Matrix6::from_fn(|i, j| product[(i, j)]);
        Ok(FitSystem {
            design,
            scatter,
            constraint: constraint_matrix(),
            center: (mx, my),
            scale,
        })
    }

    /// Real eigenpairs of the reduced system. The linear part of each
    /// solution is eliminated through the lower-right scatter block.
    pub fn eigenpairs(&self) -> Result<Vec<EigenPair>, FitError> {
        let s1: Matrix3<f64> = self.scatter.fixed_view::<3, 3>(0, 0).into();
        let s2: Matrix3<f64> = self.scatter.fixed_view::<3, 3>(0, 3).into();
        let s3: Matrix3<f64> = self.scatter.fixed_view::<3, 3>(3, 3).into();

        // Collinear points make the linear block singular.
        let s3_eigs = s3.symmetric_eigenvalues();
        let (lo, hi) = (s3_eigs.min(), s3_eigs.max());
        if !(hi > 0.0) || lo <= hi * 1e-12 {
            return Err(FitError::DegenerateConfiguration);
        }
        let s3_inv = s3.try_inverse().ok_or(FitError::DegenerateConfiguration)?;
        let t = -s3_inv * s2.transpose();
        let reduced = s1 + s2 * t;
        let c1_inv = Matrix3::new(0.0, 0.0, 0.5, 0.0, -1.0, 0.0, 0.5, 0.0, 0.0);
        let m = c1_inv * reduced;

        let norm = m.norm().max(f64::MIN_POSITIVE);
        let mut pairs: Vec<EigenPair> = Vec::new();
        for ev in m.complex_eigenvalues().iter() {
            if ev.im.abs() > 1e-9 * norm {
                continue;
            }
            let lambda = ev.re;
            let shifted = m - Matrix3::identity() * lambda;
            let svd = shifted.svd(false, true);
            let v_t = svd.v_t.ok_or(FitError::DegenerateConfiguration)?;
            let (k, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("three singular values");
            let quad: Vector3<f64> = v_t.row(k).transpose();
            let lin = t * quad;
            let constraint_value = 4.0 * quad[0] * quad[2] - quad[1] * quad[1];
            // repeated eigenvalues yield the same null vector twice
            if pairs.iter().any(|p| {
                let q = Vector3::new(p.coefficients[0], p.coefficients[1], p.coefficients[2]);
                q.dot(&quad).abs() > 1.0 - 1e-12
            }) {
                continue;
            }
            pairs.push(EigenPair {
                eigenvalue: lambda,
                coefficients: [quad[0], quad[1], quad[2], lin[0], lin[1], lin[2]],
                constraint_value,
            });
        }
        Ok(pairs)
    }

    /// Maps coefficients from normalized back to image coordinates.
    fn denormalize(&self, v: [f64; 6]) -> ConicCoefficients {
        let (mx, my) = self.center;
        let s = self.scale;
        let s2 = s * s;
        let [a, b, c, d, e, f] = v;
        ConicCoefficients {
            a: a / s2,
            b: b / s2,
            c: c / s2,
            d: (-2.0 * a * mx - b * my) / s2 + d / s,
            e: (-2.0 * c * my - b * mx) / s2 + e / s,
            f: (a * mx * mx + b * mx * my + c * my * my) / s2 - (d * mx + e * my) / s + f,
        }
    }
}

/// Direct least-squares ellipse fit, scaled so `4ac − b² = 1`.
pub fn fit_ellipse_direct(points: &[(f64, f64)]) -> Result<ConicCoefficients, FitError> {
    let system = FitSystem::new(points)?;
    let best = system
        .eigenpairs()?
        .into_iter()
        .filter(|p| p.constraint_value > 0.0)
        .min_by(|a, b| a.eigenvalue.abs().total_cmp(&b.eigenvalue.abs()))
        .ok_or(FitError::DegenerateConfiguration)?;
    system
        .denormalize(best.coefficients)
        .normalized()
        .map_err(|_| FitError::DegenerateConfiguration)
}

pub fn fit_ellipse_pixels(points: &[PixelCoord]) -> Result<ConicCoefficients, FitError> {
    let pts: Vec<(f64, f64)> = points.iter().map(|p| (p.x as f64, p.y as f64)).collect();
    fit_ellipse_direct(&pts)
}

fn wrap_half_pi(theta: f64) -> f64 {
    use std::f64::consts::{FRAC_PI_2, PI};
    let t = (theta + FRAC_PI_2).rem_euclid(PI) - FRAC_PI_2;
    if t >= FRAC_PI_2 {
        -FRAC_PI_2
    } else {
        t
    }
}

/// Center, semi-axes and orientation of an elliptic conic.
pub fn conic_to_ellipse(conic: &ConicCoefficients) -> Result<Ellipse, FitError> {
    let ConicCoefficients { a, b, c, d, e, f } = *conic;
    let disc = conic.discriminant();
    if !(disc > 0.0) {
        return Err(FitError::NotAnEllipse(disc));
    }
    let cx = (b * e - 2.0 * c * d) / disc;
    let cy = (b * d - 2.0 * a * e) / disc;
    let f0 = f + (d * cx + e * cy) / 2.0;

    let mean = (a + c) / 2.0;
    let spread = (((a - c) / 2.0).powi(2) + (b / 2.0).powi(2)).sqrt();
    let (l_hi, l_lo) = (mean + spread, mean - spread);
    // both eigenvalues share a sign; the level set must be on the other side
    if f0 == 0.0 || f0.signum() == l_hi.signum() {
        return Err(FitError::NotAnEllipse(disc));
    }
    let axis_hi = (-f0 / l_hi).sqrt();
    let axis_lo = (-f0 / l_lo).sqrt();
    // direction of the eigenvector belonging to l_hi
    let phi = 0.5 * b.atan2(a - c);
    let (major, minor, theta) = if axis_lo >= axis_hi {
        (axis_lo, axis_hi, phi + std::f64::consts::FRAC_PI_2)
    } else {
        (axis_hi, axis_lo, phi)
    };
    let theta = if spread <= 1e-12 * mean.abs() {
        0.0
    } else {
        wrap_half_pi(theta)
    };
    Ok(Ellipse {
        cx,
        cy,
        a: major,
        b: minor,
        theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EfConfig {
    pub threshold: u8,
    pub se_radius: usize,
    pub canny: CannyThresholds,
}

impl Default for EfConfig {
    fn default() -> Self {
        EfConfig {
            threshold: 25,
            se_radius: 5,
            canny: CannyThresholds::default(),
        }
    }
}

/// Pixels of the largest 8-connected edge chain of the binarized, closed
/// image.
pub fn extract_pupil_contour(
    img: &GrayImage,
    threshold: u8,
    se_radius: usize,
    thresholds: CannyThresholds,
) -> Result<Vec<PixelCoord>, DetectError> {
    let binary = threshold_binarize(img, threshold);
    let (w, h) = (binary.width(), binary.height());
    let (mut x0, mut y0, mut x1, mut y1) = (w, h, 0, 0);
    for y in 0..h {
        for x in 0..w {
            if !binary.get(x, y) {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x0 > x1 {
        return Err(DetectError::NoContour);
    }
    // Closing only adds set pixels, so everything farther than the element
    // radius from a dark pixel stays set and the Canny stencil sees a flat
    // field there; cropping with this margin is exact.
    let margin = se_radius + 8;
    let (x0, y0) = (x0.saturating_sub(margin), y0.saturating_sub(margin));
    let (x1, y1) = ((x1 + margin).min(w - 1), (y1 + margin).min(h - 1));
    let crop = BinaryImage::from_fn(x1 - x0 + 1, y1 - y0 + 1, |x, y| binary.get(x + x0, y + y0));
    let closed = close(&crop, StructuringElement::disk(se_radius));
    let edges = canny(&closed.to_gray(), thresholds);
    connected_components(&edges)
        .into_iter()
        .next()
        .map(|c| {
            c.pixels
                .into_iter()
                .map(|p| PixelCoord::new(p.x + x0 as i64, p.y + y0 as i64))
                .collect()
        })
        .ok_or(DetectError::NoContour)
}

pub fn ef_detect(img: &GrayImage, cfg: &EfConfig) -> Result<Detection, DetectError> {
    timed(|| {
        let contour = extract_pupil_contour(img, cfg.threshold, cfg.se_radius, cfg.canny)?;
        let conic = fit_ellipse_pixels(&contour)?;
        let ellipse = conic_to_ellipse(&conic)?;
        Ok(Detection {
            method: Method::Ef,
            cx: ellipse.cx,
            cy: ellipse.cy,
            shape: Some(Shape::Ellipse(ellipse)),
            score: contour.len() as f64,
            elapsed: 0.0,
        })
    })
}

impl Detector for EfConfig {
    fn method(&self) -> Method {
        Method::Ef
    }

    fn detect(&self, img: &GrayImage) -> Result<Detection, DetectError> {
        ef_detect(img, self)
    }
}

/// Points on an ellipse at equally spaced parameter values.
pub fn sample_ellipse(e: &Ellipse, count: usize, phase: f64) -> Vec<(f64, f64)> {
    (0..count)
        .map(|i| {
            let t = phase + 2.0 * std::f64::consts::PI * i as f64 / count as f64;
            let (ct, st) = (t.cos(), t.sin());
            let (cth, sth) = (e.theta.cos(), e.theta.sin());
            (
                e.cx + e.a * ct * cth - e.b * st * sth,
                e.cy + e.a * ct * sth + e.b * st * cth,
            )
        })
        .collect()
}
