use super::{connected_components, BinaryImage, GrayImage};

/// Replaces every 8-connected region brighter than `bright_threshold` with
/// the rounded mean of the one-pixel ring just outside it. Regions with no
/// ring (the whole image is bright) are left alone.
pub fn remove_light_spots(img: &GrayImage, bright_threshold: u8) -> GrayImage {
    let (w, h) = (img.width(), img.height());
    let mask = BinaryImage::from_fn(w, h, |x, y| img.get(x, y) > bright_threshold);
    let mut out = img.clone();
    let mut ring_mark = vec![usize::MAX; w * h];
    for comp in connected_components(&mask) {
        let mut sum = 0u64;
        let mut count = 0u64;
        for p in &comp.pixels {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (p.x + dx, p.y + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let j = ny * w + nx;
                    if mask.get(nx, ny) || ring_mark[j] == comp.label {
                        continue;
                    }
                    ring_mark[j] = comp.label;
                    sum += img.get(nx, ny) as u64;
                    count += 1;
                }
            }
        }
        if count == 0 {
            continue;
        }
        let fill = ((sum as f64) / (count as f64)).round() as u8;
        for p in &comp.pixels {
            out.set(p.x as usize, p.y as usize, fill);
        }
    }
    out
}
