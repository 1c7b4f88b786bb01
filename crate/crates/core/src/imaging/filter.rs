use super::{Field, GrayImage, ImagingError};

/// Per-pixel image gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

impl GradientField {
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64, f64) {
        let i = y * self.width + x;
        (self.gx[i], self.gy[i], self.magnitude[i])
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_flat(&self) -> bool {
        self.magnitude.iter().all(|&m| m == 0.0)
    }
}

/// 3×3 Sobel applied to a real field; border pixels get zero gradient.
pub(crate) fn sobel_field(field: &Field) -> GradientField {
    let (w, h) = (field.width, field.height);
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut magnitude = vec![0.0; w * h];
    if w >= 3 && h >= 3 {
        let d = &field.data;
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let at = |dx: isize, dy: isize| {
                    d[(y as isize + dy) as usize * w + (x as isize + dx) as usize]
                };
                let sx = (at(1, -1) + 2.0 * at(1, 0) + at(1, 1))
                    - (at(-1, -1) + 2.0 * at(-1, 0) + at(-1, 1));
                let sy = (at(-1, 1) + 2.0 * at(0, 1) + at(1, 1))
                    - (at(-1, -1) + 2.0 * at(0, -1) + at(1, -1));
                let i = y * w + x;
                gx[i] = sx;
                gy[i] = sy;
                magnitude[i] = sx.hypot(sy);
            }
        }
    }
    GradientField {
        width: w,
        height: h,
        gx,
        gy,
        magnitude,
    }
}

/// Sobel gradient of an 8-bit image.
pub fn gradient(img: &GrayImage) -> Result<GradientField, ImagingError> {
    if img.width() < 3 || img.height() < 3 {
        return Err(ImagingError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: 3,
            min_height: 3,
        });
    }
    Ok(sobel_field(&img.to_field()))
}

/// Normalized 1-D Gaussian taps. Even windows are widened to the next odd
/// size so the kernel has a center tap.
pub fn gaussian_kernel(sigma: f64, window: usize) -> Vec<f64> {
    assert!(sigma > 0.0, "sigma must be positive");
    assert!(window >= 1, "window must be at least 1");
    let size = if window.is_multiple_of(2) {
        window + 1
    } else {
        window
    };
    let half = (size / 2) as i64;
    let mut taps: Vec<f64> = (-half..=half)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Separable convolution with replicate borders.
pub(crate) fn convolve_separable(field: &Field, kernel: &[f64]) -> Field {
    let (w, h) = (field.width, field.height);
    let half = (kernel.len() / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;

    let mut tmp = Field::zeros(w, h);
    for y in 0..h {
        let row = &field.data[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &tap) in kernel.iter().enumerate() {
                acc += tap * row[clamp(x as i64 + k as i64 - half, w)];
            }
            tmp.data[y * w + x] = acc;
        }
    }
    let mut out = Field::zeros(w, h);
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (k, &tap) in kernel.iter().enumerate() {
                acc += tap * tmp.data[clamp(y as i64 + k as i64 - half, h) * w + x];
            }
            out.data[y * w + x] = acc;
        }
    }
    out
}

/// Separable Gaussian smoothing with replicate borders.
pub fn gaussian_smooth(field: &Field, sigma: f64, window: usize) -> Field {
    convolve_separable(field, &gaussian_kernel(sigma, window))
}

/// Shrinks by 4 in each dimension, each output pixel being the rounded
/// mean of its 4×4 source block.
pub fn downsample4(img: &GrayImage) -> Result<GrayImage, ImagingError> {
    if img.width() < 4 || img.height() < 4 {
        return Err(ImagingError::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: 4,
            min_height: 4,
        });
    }
    let (ow, oh) = (img.width() / 4, img.height() / 4);
    Ok(GrayImage::from_fn(ow, oh, |x, y| {
        let mut sum = 0u32;
        for dy in 0..4 {
            for dx in 0..4 {
                sum += img.get(4 * x + dx, 4 * y + dy) as u32;
            }
        }
        ((sum + 8) / 16) as u8
    }))
}
