use super::BinaryImage;

/// Disk-shaped structuring element `{(dx, dy) : dx² + dy² ≤ radius²}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StructuringElement {
    radius: usize,
}

impl StructuringElement {
    pub fn disk(radius: usize) -> Self {
        assert!(radius >= 1, "structuring element radius must be at least 1");
        StructuringElement { radius }
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Half-width of the disk on each row offset `dy ∈ [-r, r]`.
    fn row_half_widths(&self) -> Vec<(i64, i64)> {
        let r = self.radius as i64;
        (-r..=r)
            .map(|dy| {
                let mut w = 0;
                while (w + 1) * (w + 1) + dy * dy <= r * r {
                    w += 1;
                }
                (dy, w)
            })
            .collect()
    }

    pub fn contains(&self, dx: i64, dy: i64) -> bool {
        let r = self.radius as i64;
        dx * dx + dy * dy <= r * r
    }
}

/// Per-row prefix sums of set pixels, one extra column per row.
fn row_prefix(img: &BinaryImage) -> Vec<u32> {
    let w = img.width();
    let mut prefix = vec![0u32; (w + 1) * img.height()];
    for y in 0..img.height() {
        let row = &img.data()[y * w..(y + 1) * w];
        let base = y * (w + 1);
        for x in 0..w {
            prefix[base + x + 1] = prefix[base + x] + row[x] as u32;
        }
    }
    prefix
}

/// Dilation; pixels outside the image count as 0.
pub fn dilate(img: &BinaryImage, se: StructuringElement) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let prefix = row_prefix(img);
    let rows = se.row_half_widths();
    let mut out = BinaryImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let hit = rows.iter().any(|&(dy, half)| {
                let yy = y as i64 + dy;
                if yy < 0 || yy >= h as i64 {
                    return false;
                }
                let lo = (x as i64 - half).max(0) as usize;
                let hi = ((x as i64 + half).min(w as i64 - 1)) as usize;
                let base = yy as usize * (w + 1);
                prefix[base + hi + 1] - prefix[base + lo] > 0
            });
            out.set(x, y, hit);
        }
    }
    out
}

/// Erosion; pixels outside the image count as 1.
pub fn erode(img: &BinaryImage, se: StructuringElement) -> BinaryImage {
    let (w, h) = (img.width(), img.height());
    let prefix = row_prefix(img);
    let rows = se.row_half_widths();
    let mut out = BinaryImage::new(w, h);
    for y in 0..h {
        for x in 0..w {
            let keep = rows.iter().all(|&(dy, half)| {
                let yy = y as i64 + dy;
                if yy < 0 || yy >= h as i64 {
                    return true;
                }
                let lo = (x as i64 - half).max(0) as usize;
                let hi = ((x as i64 + half).min(w as i64 - 1)) as usize;
                let base = yy as usize * (w + 1);
                (prefix[base + hi + 1] - prefix[base + lo]) as usize == hi - lo + 1
            });
            out.set(x, y, keep);
        }
    }
    out
}

/// Morphological closing: dilation followed by erosion.
pub fn close(img: &BinaryImage, se: StructuringElement) -> BinaryImage {
    erode(&dilate(img, se), se)
}
