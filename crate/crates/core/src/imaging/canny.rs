use super::filter::{convolve_separable, gaussian_kernel, sobel_field};
use super::{BinaryImage, GrayImage};

/// Hysteresis thresholds on the Sobel gradient magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyThresholds {
    pub low: f64,
    pub high: f64,
}

impl Default for CannyThresholds {
    fn default() -> Self {
        CannyThresholds {
            low: 40.0,
            high: 100.0,
        }
    }
}

const BLUR_SIGMA: f64 = 1.4;
const BLUR_WINDOW: usize = 5;

/// Canny edge map: 5×5 Gaussian blur (σ = 1.4), Sobel gradients,
/// non-maximum suppression and 8-connected double-threshold hysteresis.
pub fn canny(img: &GrayImage, thresholds: CannyThresholds) -> BinaryImage {
    assert!(
        0.0 <= thresholds.low && thresholds.low <= thresholds.high,
        "canny thresholds must satisfy 0 <= low <= high"
    );
    let (w, h) = (img.width(), img.height());
    let blurred = convolve_separable(&img.to_field(), &gaussian_kernel(BLUR_SIGMA, BLUR_WINDOW));
    let grad = sobel_field(&blurred);

    // Non-maximum suppression. A pixel survives when it is >= its neighbor
    // against the gradient and > its neighbor along it, so plateaus two
    // pixels wide yield a single edge pixel.
    let mut thin = vec![0.0f64; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let (gx, gy, m) = grad.at(x, y);
            // too weak to ever join an edge
            if m == 0.0 || m < thresholds.low {
                continue;
            }
            let mut angle = gy.atan2(gx).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let ahead = grad.magnitude[(y as isize + dy) as usize * w + (x as isize + dx) as usize];
            let behind =
                grad.magnitude[(y as isize - dy) as usize * w + (x as isize - dx) as usize];
            if m >= behind && m > ahead {
                thin[y * w + x] = m;
            }
        }
    }

    let mut edges = BinaryImage::new(w, h);
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if thin[y * w + x] >= thresholds.high && !edges.get(x, y) {
                edges.set(x, y, true);
                stack.push((x, y));
                while let Some((cx, cy)) = stack.pop() {
                    for ny in cy.saturating_sub(1)..=(cy + 1).min(h - 1) {
                        for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                            if !edges.get(nx, ny)
                                && thin[ny * w + nx] >= thresholds.low
                                && thin[ny * w + nx] > 0.0
                            {
                                edges.set(nx, ny, true);
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
            }
        }
    }
    edges
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_has_no_edges() {
        let img = GrayImage::filled(32, 24, 140);
        assert!(canny(&img, CannyThresholds::default()).is_empty());
    }

    #[test]
    fn vertical_step_gives_single_line() {
        let img = GrayImage::from_fn(40, 30, |x, _| if x < 20 { 0 } else { 255 });
        let edges = canny(&img, CannyThresholds::default());
        let mut column = None;
        for y in 1..29 {
            let xs: Vec<usize> = (0..40).filter(|&x| edges.get(x, y)).collect();
            assert_eq!(xs.len(), 1, "row {y} has edge columns {xs:?}");
            // the step lies between columns 19 and 20
            assert!(xs[0] == 19 || xs[0] == 20);
            match column {
                None => column = Some(xs[0]),
                Some(c) => assert_eq!(c, xs[0]),
            }
        }
    }

    #[test]
    fn circle_outline_is_closed_ring_near_ideal() {
        let (cx, cy, r) = (40.0, 35.0, 15.0);
        let img = GrayImage::from_fn(80, 70, |x, y| {
            let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
            if d <= r {
                20
            } else {
                200
            }
        });
        let edges = canny(&img, CannyThresholds::default());
        let mut count = 0;
        for y in 0..70 {
            for x in 0..80 {
                if edges.get(x, y) {
                    count += 1;
                    let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt();
                    assert!(
                        (d - r).abs() <= 1.0 + 1e-9,
                        "edge at ({x},{y}) is {d} from center"
                    );
                }
            }
        }
        assert!(count as f64 > 2.0 * std::f64::consts::PI * r * 0.9);
        let comps = crate::imaging::connected_components(&edges);
        assert_eq!(comps.len(), 1, "ring should be a single closed chain");
    }
}
