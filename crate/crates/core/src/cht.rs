//! Circular Hough transform detector.
//!
//! The image is reduced by 4, edges are found with Canny, and every edge
//! pixel votes along a rasterized circle of each integer radius in the
//! configured range. The best cell of the 3-D accumulator is the pupil.

use crate::detection::{
    timed, upscale_coord, Circle, DetectError, Detection, Detector, Method, Shape,
};
use crate::imaging::{canny, downsample4, BinaryImage, CannyThresholds, GrayImage, PixelCoord};

/// Accumulators whose best cell has fewer votes than this are rejected.
pub const MIN_VOTES: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChtConfig {
    pub r_min: usize,
    pub r_max: usize,
    pub canny: CannyThresholds,
}

impl Default for ChtConfig {
    fn default() -> Self {
        ChtConfig {
            r_min: 5,
            r_max: 25,
            canny: CannyThresholds::default(),
        }
    }
}

/// Distinct offsets of the midpoint-rasterized circle of radius `r`,
/// sorted by (dy, dx).
pub fn midpoint_circle(r: usize) -> Vec<(i64, i64)> {
    let mut pts = Vec::with_capacity(8 * r.max(1));
    let r = r as i64;
    if r == 0 {
        return vec![(0, 0)];
    }
    let (mut x, mut y, mut err) = (r, 0i64, 1 - r);
    while x >= y {
        for (dx, dy) in [
            (x, y),
            (y, x),
            (-y, x),
            (-x, y),
            (-x, -y),
            (-y, -x),
            (y, -x),
            (x, -y),
        ] {
            pts.push((dx, dy));
        }
        y += 1;
        if err < 0 {
            err += 2 * y + 1;
        } else {
            x -= 1;
            err += 2 * (y - x) + 1;
        }
    }
    pts.sort_by_key(|&(dx, dy)| (dy, dx));
    pts.dedup();
    pts
}

/// Vote counts over (center x, center y, radius), radius in
/// `r_min..=r_max`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HoughAccumulator {
    width: usize,
    height: usize,
    r_min: usize,
    r_max: usize,
    votes: Vec<u32>,
    offsets: Vec<Vec<(i64, i64)>>,
}

impl HoughAccumulator {
    pub fn new(width: usize, height: usize, r_min: usize, r_max: usize) -> Self {
        assert!(
            1 <= r_min && r_min <= r_max,
            "radius range must satisfy 1 <= r_min <= r_max"
        );
        HoughAccumulator {
            width,
            height,
            r_min,
            r_max,
            votes: vec![0; width * height * (r_max - r_min + 1)],
            offsets: (r_min..=r_max).map(midpoint_circle).collect(),
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.r_max - self.r_min + 1)
    }

    pub fn radius_range(&self) -> (usize, usize) {
        (self.r_min, self.r_max)
    }

    pub fn get(&self, x: usize, y: usize, r: usize) -> u32 {
        self.votes[self.index(x, y, r)]
    }

    pub fn total_votes(&self) -> u64 {
        self.votes.iter().map(|&v| v as u64).sum()
    }

    #[inline]
    fn index(&self, x: usize, y: usize, r: usize) -> usize {
        ((r - self.r_min) * self.height + y) * self.width + x
    }

    /// Adds one vote to every in-bounds cell on the circle of radius `r`
    /// around `edge`.
    pub fn vote_circle(&mut self, edge: PixelCoord, r: usize) {
        assert!(
            (self.r_min..=self.r_max).contains(&r),
            "radius {r} outside accumulator range {}..={}",
            self.r_min,
            self.r_max
        );
        let plane = (r - self.r_min) * self.height * self.width;
        let (w, h) = (self.width as i64, self.height as i64);
        for &(dx, dy) in &self.offsets[r - self.r_min] {
            let (x, y) = (edge.x + dx, edge.y + dy);
            if x >= 0 && y >= 0 && x < w && y < h {
                self.votes[plane + y as usize * self.width + x as usize] += 1;
            }
        }
    }

    pub fn vote_edges(&mut self, edges: &BinaryImage) {
        for y in 0..edges.height() {
            for x in 0..edges.width() {
                if edges.get(x, y) {
                    for r in self.r_min..=self.r_max {
                        self.vote_circle(PixelCoord::new(x as i64, y as i64), r);
                    }
                }
            }
        }
    }

    /// Cell with the most votes; ties go to the smallest (r, y, x).
    pub fn argmax(&self) -> (usize, usize, usize, u32) {
        let mut best = (0, 0, self.r_min, 0u32);
        let mut found = false;
        for r in self.r_min..=self.r_max {
            for y in 0..self.height {
                for x in 0..self.width {
                    let v = self.get(x, y, r);
                    if !found || v > best.3 {
                        best = (x, y, r, v);
                        found = true;
                    }
                }
            }
        }
        best
    }
}

pub fn cht_detect(img: &GrayImage, cfg: &ChtConfig) -> Result<Detection, DetectError> {
    timed(|| {
        let small = downsample4(img)?;
        let edges = canny(&small, cfg.canny);
        if edges.is_empty() {
            return Err(DetectError::NoEdges);
        }
        let mut acc = HoughAccumulator::new(small.width(), small.height(), cfg.r_min, cfg.r_max);
        acc.vote_edges(&edges);
        let (x, y, r, votes) = acc.argmax();
        if votes < MIN_VOTES {
            return Err(DetectError::NoCircleFound { votes });
        }
        let circle = Circle {
            cx: upscale_coord(x as f64),
            cy: upscale_coord(y as f64),
            r: 4.0 * r as f64,
        };
        Ok(Detection {
            method: Method::Cht,
            cx: circle.cx,
            cy: circle.cy,
            shape: Some(Shape::Circle(circle)),
            score: votes as f64,
            elapsed: 0.0,
        })
    })
}

impl Detector for ChtConfig {
    fn method(&self) -> Method {
        Method::Cht
    }

    fn detect(&self, img: &GrayImage) -> Result<Detection, DetectError> {
        cht_detect(img, self)
    }
}
