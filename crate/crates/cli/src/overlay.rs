use image::{ImageFormat, Rgb, RgbImage};

use pupilbench::{Detection, GrayImage, Method, Shape};

fn color(m: Method) -> Rgb<u8> {
    match m {
        Method::Cht => Rgb([255, 64, 64]),
        Method::Ef => Rgb([64, 220, 64]),
        Method::Ido => Rgb([64, 128, 255]),
        Method::Rst => Rgb([255, 200, 0]),
    }
}

fn plot(canvas: &mut RgbImage, x: f64, y: f64, c: Rgb<u8>) {
    let (x, y) = (x.round(), y.round());
    if x >= 0.0 && y >= 0.0 && (x as u32) < canvas.width() && (y as u32) < canvas.height() {
        canvas.put_pixel(x as u32, y as u32, c);
    }
}

fn outline(canvas: &mut RgbImage, shape: &Shape, c: Rgb<u8>) {
    let (cx, cy, a, b, theta) = match *shape {
        Shape::Circle(ref s) => (s.cx, s.cy, s.r, s.r, 0.0),
        Shape::Ellipse(ref e) => (e.cx, e.cy, e.a, e.b, e.theta),
    };
    let steps = ((2.0 * std::f64::consts::PI * a.max(b)).ceil() as usize * 2).max(16);
    let (st, ct) = theta.sin_cos();
    for i in 0..steps {
        let t = 2.0 * std::f64::consts::PI * i as f64 / steps as f64;
        let (u, v) = (a * t.cos(), b * t.sin());
        plot(canvas, cx + u * ct - v * st, cy + u * st + v * ct, c);
    }
}

/// The image as RGB PNG with each detection's shape and a center crosshair.
pub fn draw_overlay(img: &GrayImage, detections: &[&Detection]) -> Vec<u8> {
    let mut canvas = RgbImage::from_fn(img.width() as u32, img.height() as u32, |x, y| {
        let v = img.get(x as usize, y as usize);
        Rgb([v, v, v])
    });
    for d in detections {
        let c = color(d.method);
        if let Some(shape) = &d.shape {
            outline(&mut canvas, shape, c);
        }
        for k in -6..=6 {
            plot(&mut canvas, d.cx + k as f64, d.cy, c);
            plot(&mut canvas, d.cx, d.cy + k as f64, c);
        }
    }
    let mut out = std::io::Cursor::new(Vec::new());
    canvas
        .write_to(&mut out, ImageFormat::Png)
        .expect("encoding to memory cannot fail");
    out.into_inner()
}
