use super::{BinaryImage, PixelCoord};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: usize,
    /// Pixels in discovery order; the first entry is the component's
    /// top-most, left-most pixel.
    pub pixels: Vec<PixelCoord>,
}

impl Component {
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
}

const NEIGHBORS_8: [(i64, i64); 8] = [
    (-1, -1),
    (0, -1),
    (1, -1),
    (-1, 0),
    (1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// 8-connected components, largest first; equal sizes keep row-major order
/// of their first pixel. Labels are 1-based and follow the returned order.
pub fn connected_components(img: &BinaryImage) -> Vec<Component> {
    let (w, h) = (img.width(), img.height());
    let mut seen = vec![false; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            if seen[i] || !img.get(x, y) {
                continue;
            }
            seen[i] = true;
            let mut pixels = Vec::new();
            stack.push((x as i64, y as i64));
            while let Some((cx, cy)) = stack.pop() {
                pixels.push(PixelCoord::new(cx, cy));
                for (dx, dy) in NEIGHBORS_8 {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if !seen[j] && img.get(nx as usize, ny as usize) {
                        seen[j] = true;
                        stack.push((nx, ny));
                    }
                }
            }
            components.push(Component { label: 0, pixels });
        }
    }
    // stable: ties keep scan order
    components.sort_by_key(|c| std::cmp::Reverse(c.len()));
    for (k, c) in components.iter_mut().enumerate() {
        c.label = k + 1;
    }
    components
}
