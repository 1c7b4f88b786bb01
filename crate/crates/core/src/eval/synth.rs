//! Synthetic infrared-style eye images with exact ground truth.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use std::fs;
use std::path::Path;

use super::{Annotation, Category, DatasetEntry, DatasetManifest, EvalError, MANIFEST_VERSION};
use crate::imaging::{gaussian_smooth, Field, GrayImage};

/// File name of the manifest written next to a generated corpus.
pub const MANIFEST_FILE: &str = "manifest.json";

pub const SYNTH_WIDTH: usize = 640;
pub const SYNTH_HEIGHT: usize = 480;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PupilShape {
    Circle {
        r: f64,
    },
    /// Semi-axes `a`, `b` and rotation of the `a` axis.
    Ellipse {
        a: f64,
        b: f64,
        theta: f64,
    },
}

impl PupilShape {
    fn extent(&self) -> f64 {
        match *self {
            PupilShape::Circle { r } => r,
            PupilShape::Ellipse { a, b, .. } => a.max(b),
        }
    }

    /// Radius reported in the annotation.
    fn mean_radius(&self) -> f64 {
        match *self {
            PupilShape::Circle { r } => r,
            PupilShape::Ellipse { a, b, .. } => (a * b).sqrt(),
        }
    }

    fn contains(&self, dx: f64, dy: f64) -> bool {
        match *self {
            PupilShape::Circle { r } => dx * dx + dy * dy <= r * r,
            PupilShape::Ellipse { a, b, theta } => {
                let (c, s) = (theta.cos(), theta.sin());
                let u = (dx * c + dy * s) / a;
                let v = (-dx * s + dy * c) / b;
                u * u + v * v <= 1.0
            }
        }
    }

    /// Half height of the shape's bounding box.
    fn vertical_extent(&self) -> f64 {
        match *self {
            PupilShape::Circle { r } => r,
            PupilShape::Ellipse { a, b, theta } => {
                (a * a * theta.sin().powi(2) + b * b * theta.cos().powi(2)).sqrt()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Occlusion {
    None,
    /// Covers this fraction of the pupil area from the top.
    Eyelid(f64),
    /// Dark hair/eyelash polylines.
    Strokes(u32),
    /// Saturated specular spots.
    Glints(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub width: usize,
    pub height: usize,
    pub cx: f64,
    pub cy: f64,
    pub pupil: PupilShape,
    pub iris_radius: f64,
    pub pupil_intensity: u8,
    pub iris_intensity: u8,
    pub sclera_intensity: u8,
    pub occlusion: Occlusion,
    /// Glasses-lens reflection, added before occlusions are drawn.
    pub reflection: Option<LensReflection>,
    /// Gaussian defocus of the eye before occlusions are drawn, full-res
    /// pixels; 0 keeps the edges merely anti-aliased.
    pub defocus_sigma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

/// Soft additive veil: full `strength` out to half of `radius`, then a
/// cosine fall-off to zero at `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensReflection {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub strength: f64,
}

impl LensReflection {
    fn weight(&self, x: f64, y: f64) -> f64 {
        let t = ((x - self.cx).hypot(y - self.cy) / self.radius - 0.5) * 2.0;
        if t <= 0.0 {
            1.0
        } else if t >= 1.0 {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * t).cos())
        }
    }
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            width: SYNTH_WIDTH,
            height: SYNTH_HEIGHT,
            cx: 320.0,
            cy: 240.0,
            pupil: PupilShape::Circle { r: 40.0 },
            iris_radius: 110.0,
            pupil_intensity: 10,
            iris_intensity: 100,
            sclera_intensity: 220,
            occlusion: Occlusion::None,
            reflection: None,
            defocus_sigma: 2.0,
            noise_sigma: 2.0,
            seed: 0,
        }
    }
}

const SUPERSAMPLE: usize = 4;

/// Fraction of the pixel centered at `(x, y)` covered by `inside`.
fn coverage(x: f64, y: f64, inside: impl Fn(f64, f64) -> bool) -> f64 {
    let mut hits = 0;
    for j in 0..SUPERSAMPLE {
        for i in 0..SUPERSAMPLE {
            let sx = x + (i as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
            let sy = y + (j as f64 + 0.5) / SUPERSAMPLE as f64 - 0.5;
            if inside(sx, sy) {
                hits += 1;
            }
        }
    }
    hits as f64 / (SUPERSAMPLE * SUPERSAMPLE) as f64
}

/// Coverage with a fast path away from the boundary. `dist` is an estimate
/// of the signed distance of the pixel center to the boundary, negative
/// inside.
fn edge_coverage(x: f64, y: f64, dist: f64, inside: impl Fn(f64, f64) -> bool) -> f64 {
    if dist < -1.5 {
        1.0
    } else if dist > 1.5 {
        0.0
    } else {
        coverage(x, y, inside)
    }
}

fn dist_to_segment(px: f64, py: f64, a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((px - a.0) * vx + (py - a.1) * vy) / len2).clamp(0.0, 1.0)
    };
    (px - a.0 - t * vx).hypot(py - a.1 - t * vy)
}

/// Row coordinate above which `fraction` of the pupil area lies.
pub fn eyelid_cut(params: &SynthParams, fraction: f64) -> f64 {
    let ext = params.pupil.vertical_extent();
    // any ellipse's horizontal chord is proportional to sqrt(ext^2 - y^2),
    // so the covered fraction depends only on t = y / ext
    let covered = |t: f64| 0.5 + (t * (1.0 - t * t).sqrt() + t.asin()) / std::f64::consts::PI;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if covered(mid) < fraction {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    params.cy + ext * 0.5 * (lo + hi)
}

/// Renders an eye and returns it with its exact annotation.
pub fn synth_eye(params: &SynthParams) -> Result<(GrayImage, Annotation), EvalError> {
    let p = params;
    let ext = p.pupil.extent();
    if !(ext > 0.0) || !(p.iris_radius > 0.0) {
        return Err(EvalError::InvalidGeometry("radii must be positive".into()));
    }
    if ext >= p.iris_radius {
        return Err(EvalError::InvalidGeometry(format!(
            "pupil extent {ext} must be smaller than iris radius {}",
            p.iris_radius
        )));
    }
    if p.cx - p.iris_radius < 0.0
        || p.cy - p.iris_radius < 0.0
        || p.cx + p.iris_radius > (p.width - 1) as f64
        || p.cy + p.iris_radius > (p.height - 1) as f64
    {
        return Err(EvalError::InvalidGeometry(
            "iris must lie inside the image".into(),
        ));
    }
    if let Occlusion::Eyelid(f) = p.occlusion {
        if !(0.0..0.9).contains(&f) {
            return Err(EvalError::InvalidGeometry(format!(
                "eyelid fraction {f} outside [0, 0.9)"
            )));
        }
    }
    if !(p.noise_sigma >= 0.0) || !(p.defocus_sigma >= 0.0) {
        return Err(EvalError::InvalidGeometry(
            "noise and defocus sigmas must be non-negative".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let (sclera, iris, pupil) = (
        p.sclera_intensity as f64,
        p.iris_intensity as f64,
        p.pupil_intensity as f64,
    );
    let mut canvas: Vec<f64> = Vec::with_capacity(p.width * p.height);
    for y in 0..p.height {
        for x in 0..p.width {
            let (fx, fy) = (x as f64, y as f64);
            let (dx, dy) = (fx - p.cx, fy - p.cy);
            let d = dx.hypot(dy);
            let c_iris = edge_coverage(fx, fy, d - p.iris_radius, |sx, sy| {
                (sx - p.cx).powi(2) + (sy - p.cy).powi(2) <= p.iris_radius * p.iris_radius
            });
            let pupil_dist = match p.pupil {
                PupilShape::Circle { r } => d - r,
                PupilShape::Ellipse { a, b, .. } => {
                    if d < b.min(a) - 1.5 {
                        -2.0
                    } else if d > a.max(b) + 1.5 {
                        2.0
                    } else {
                        0.0
                    }
                }
            };
            let c_pupil = edge_coverage(fx, fy, pupil_dist, |sx, sy| {
                p.pupil.contains(sx - p.cx, sy - p.cy)
            });
            let mut v = sclera + c_iris * (iris - sclera);
            v += c_pupil * (pupil - v);
            canvas.push(v);
        }
    }

    if let Some(refl) = p.reflection {
        if !(refl.radius > 0.0) || !(refl.strength >= 0.0) {
            return Err(EvalError::InvalidGeometry(
                "reflection needs a positive radius".into(),
            ));
        }
        let x0 = (refl.cx - refl.radius).floor().max(0.0) as usize;
        let x1 = ((refl.cx + refl.radius).ceil().max(0.0) as usize).min(p.width - 1);
        let y0 = (refl.cy - refl.radius).floor().max(0.0) as usize;
        let y1 = ((refl.cy + refl.radius).ceil().max(0.0) as usize).min(p.height - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                canvas[y * p.width + x] += refl.strength * refl.weight(x as f64, y as f64);
            }
        }
    }

    if p.defocus_sigma > 0.0 {
        let window = 2 * (3.0 * p.defocus_sigma).ceil() as usize + 1;
        let field = Field {
            width: p.width,
            height: p.height,
            data: canvas,
        };
        canvas = gaussian_smooth(&field, p.defocus_sigma, window).data;
    }

    match p.occlusion {
        Occlusion::None => {}
        Occlusion::Eyelid(f) => {
            if f > 0.0 {
                let cut = eyelid_cut(p, f);
                for y in 0..p.height {
                    if (y as f64) < cut {
                        canvas[y * p.width..(y + 1) * p.width].fill(sclera);
                    }
                }
            }
        }
        Occlusion::Strokes(count) => {
            for _ in 0..count {
                let intensity = rng.random_range(15.0..45.0);
                let half_width = rng.random_range(1.0..2.2);
                let ang0: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let start_r = rng.random_range(0.8..1.6) * ext;
                let mut pt = (p.cx + start_r * ang0.cos(), p.cy + start_r * ang0.sin());
                let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                for _ in 0..3 {
                    let len = rng.random_range(20.0..60.0);
                    heading += rng.random_range(-0.5..0.5);
                    let next = (pt.0 + len * heading.cos(), pt.1 + len * heading.sin());
                    let x0 = (pt.0.min(next.0) - half_width - 1.0).floor().max(0.0) as usize;
                    let x1 = (pt.0.max(next.0) + half_width + 1.0)
                        .ceil()
                        .min((p.width - 1) as f64) as usize;
                    let y0 = (pt.1.min(next.1) - half_width - 1.0).floor().max(0.0) as usize;
                    let y1 = (pt.1.max(next.1) + half_width + 1.0)
                        .ceil()
                        .min((p.height - 1) as f64) as usize;
                    for y in y0..=y1 {
                        for x in x0..=x1 {
                            if dist_to_segment(x as f64, y as f64, pt, next) <= half_width {
                                let v = &mut canvas[y * p.width + x];
                                *v = v.min(intensity);
                            }
                        }
                    }
                    pt = next;
                }
            }
        }
        Occlusion::Glints(count) => {
            for k in 0..count {
                let radius = rng.random_range(3.0..7.0);
                let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                // the first spot sits on the pupil, the rest anywhere on the iris
                let reach = if k == 0 {
                    0.6 * ext
                } else {
                    0.8 * p.iris_radius
                };
                let dist = rng.random_range(0.0..1.0f64).sqrt() * reach;
                let (gx, gy) = (p.cx + dist * ang.cos(), p.cy + dist * ang.sin());
                let x0 = (gx - radius - 2.0).floor().max(0.0) as usize;
                let x1 = (gx + radius + 2.0).ceil().min((p.width - 1) as f64) as usize;
                let y0 = (gy - radius - 2.0).floor().max(0.0) as usize;
                let y1 = (gy + radius + 2.0).ceil().min((p.height - 1) as f64) as usize;
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        let c = coverage(x as f64, y as f64, |sx, sy| {
                            (sx - gx).powi(2) + (sy - gy).powi(2) <= radius * radius
                        });
                        let v = &mut canvas[y * p.width + x];
                        *v += c * (255.0 - *v);
                    }
                }
            }
        }
    }

    let noise = if p.noise_sigma > 0.0 {
        Some(Normal::new(0.0, p.noise_sigma).expect("sigma checked"))
    } else {
        None
    };
    let data: Vec<u8> = canvas
        .into_iter()
        .map(|v| {
            let n = noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
            (v + n).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    let img = GrayImage::new(p.width, p.height, data).expect("canvas matches dimensions");
    let ann = Annotation {
        cx: p.cx,
        cy: p.cy,
        r: p.pupil.mean_radius(),
        annotator: "synth".into(),
        timestamp: 0,
    };
    Ok((img, ann))
}

/// Category mix of the reference dataset: clear, hair/eyelashes, eyelid,
/// glasses/reflections.
pub const DEFAULT_PROPORTIONS: [u32; 4] = [473, 136, 91, 100];

/// Largest-remainder apportionment of `count` images over the categories.
/// Remainder ties go to the earlier category.
pub fn apportion(count: usize, weights: &[u32; 4]) -> [usize; 4] {
    let total: u64 = weights.iter().map(|&w| w as u64).sum();
    assert!(total > 0, "proportions must not all be zero");
    let mut out = [0usize; 4];
    let mut rems = [(0u64, 0usize); 4];
    for (i, &w) in weights.iter().enumerate() {
        let num = count as u64 * w as u64;
        out[i] = (num / total) as usize;
        rems[i] = (num % total, i);
    }
    let assigned: usize = out.iter().sum();
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in rems.iter().take(count - assigned) {
        out[i] += 1;
    }
    out
}

/// One planned corpus image.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusItem {
    pub name: String,
    pub category: Category,
    pub params: SynthParams,
}

/// Deterministic per-image parameters for a corpus of `count` images.
pub fn plan_corpus(count: usize, seed: u64, proportions: &[u32; 4]) -> Vec<CorpusItem> {
    let counts = apportion(count, proportions);
    let mut items = Vec::with_capacity(count);
    let mut index = 0usize;
    for (cat, &n) in Category::ALL.iter().zip(&counts) {
        for _ in 0..n {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let r = rng.random_range(28.0..56.0);
            let ratio = rng.random_range(0.85..1.0);
            let theta = rng.random_range(-1.5..1.5);
            let pupil = if rng.random_bool(0.5) {
                PupilShape::Circle { r }
            } else {
                PupilShape::Ellipse {
                    a: r,
                    b: r * ratio,
                    theta,
                }
            };
            let iris_radius = rng.random_range(100.0..125.0f64).max(r * 1.9);
            let cx = 320.0 + rng.random_range(-60.0..60.0);
            let cy = 240.0 + rng.random_range(-30.0..30.0);
            let occlusion = match cat {
                Category::Clear => Occlusion::None,
                Category::HairEyelashes => Occlusion::Strokes(rng.random_range(4..10)),
                Category::Eyelid => Occlusion::Eyelid(rng.random_range(0.1..0.35)),
                Category::GlassesReflections => Occlusion::Glints(rng.random_range(1..4)),
            };
            let (cx, cy) = ((cx * 4.0f64).round() / 4.0, (cy * 4.0f64).round() / 4.0);
            let reflection = (*cat == Category::GlassesReflections).then(|| {
                let ext = pupil.extent();
                let ang: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let dist = rng.random_range(0.3..0.9) * ext;
                LensReflection {
                    cx: cx + dist * ang.cos(),
                    cy: cy + dist * ang.sin(),
                    radius: rng.random_range(0.7..1.4) * ext,
                    strength: rng.random_range(60.0..120.0),
                }
            });
            let params = SynthParams {
                cx,
                cy,
                reflection,
                pupil,
                iris_radius,
                occlusion,
                iris_intensity: rng.random_range(85..=100),
                noise_sigma: 2.0,
                seed: rng.random(),
                ..SynthParams::default()
            };
            items.push(CorpusItem {
                name: format!("eye_{index:04}.png"),
                category: *cat,
                params,
            });
            index += 1;
        }
    }
    items
}

/// Renders a planned corpus into `dir` as PNG files plus a manifest whose
/// entry paths are relative to `dir`.
pub fn write_corpus(
    dir: &Path,
    count: usize,
    seed: u64,
    proportions: &[u32; 4],
) -> Result<DatasetManifest, EvalError> {
    fs::create_dir_all(dir)?;
    let mut images = Vec::with_capacity(count);
    for item in plan_corpus(count, seed, proportions) {
        let (img, annotation) = synth_eye(&item.params)?;
        fs::write(dir.join(&item.name), img.to_png())?;
        images.push(DatasetEntry {
            path: item.name,
            category: item.category,
            annotation: Some(annotation),
        });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        images,
    };
    manifest.save_atomic(&dir.join(MANIFEST_FILE))?;
    Ok(manifest)
}
