use pupilbench::cht::{cht_detect, ChtConfig};
use pupilbench::ef::{ef_detect, EfConfig};
use pupilbench::eval::{synth_eye, Occlusion, PupilShape, SynthParams};
use pupilbench::ido::{ido_detect, IdoConfig};
use pupilbench::rst::{rst_detect, RstConfig};
use pupilbench::{GrayImage, Shape};

fn radius_of(shape: &Option<Shape>) -> f64 {
    match shape {
        Some(Shape::Circle(c)) => c.r,
        other => panic!("expected a circle, got {other:?}"),
    }
}

fn black_disk_on_white() -> GrayImage {
    GrayImage::from_fn(640, 480, |x, y| {
        if (x as f64 - 320.0).powi(2) + (y as f64 - 240.0).powi(2) <= 1600.0 {
            0
        } else {
            255
        }
    })
}

fn plain_eye() -> GrayImage {
    synth_eye(&SynthParams::default()).unwrap().0
}

#[test]
fn cht_finds_black_disk() {
    let d = cht_detect(&black_disk_on_white(), &ChtConfig::default()).unwrap();
    assert!((d.cx - 320.0).hypot(d.cy - 240.0) <= 4.0, "{d:?}");
    assert!((radius_of(&d.shape) - 40.0).abs() <= 8.0);
}

#[test]
fn ido_finds_synthetic_pupil() {
    let d = ido_detect(&plain_eye(), &IdoConfig::default()).unwrap();
    assert!((d.cx - 320.0).hypot(d.cy - 240.0) <= 4.0, "{d:?}");
    assert!((radius_of(&d.shape) - 40.0).abs() <= 8.0);
}

#[test]
fn rst_finds_synthetic_pupil() {
    let d = rst_detect(&plain_eye(), &RstConfig::default()).unwrap();
    assert!((d.cx - 320.0).hypot(d.cy - 240.0) <= 4.0, "{d:?}");
}

#[test]
fn ef_fits_elliptical_pupil() {
    let params = SynthParams {
        pupil: PupilShape::Ellipse {
            a: 46.0,
            b: 34.0,
            theta: 0.5,
        },
        ..SynthParams::default()
    };
    let (img, _) = synth_eye(&params).unwrap();
    let d = ef_detect(&img, &EfConfig::default()).unwrap();
    assert!((d.cx - 320.0).hypot(d.cy - 240.0) <= 2.0, "{d:?}");
    match d.shape {
        Some(Shape::Ellipse(e)) => {
            // defocus moves the dark-threshold contour up to ~3 px inward
            assert!(
                e.a > 43.0 && e.a < 46.5 && e.b > 31.0 && e.b < 34.5,
                "{e:?}"
            );
            assert!((e.theta - 0.5).abs() < 0.05);
        }
        other => panic!("expected an ellipse, got {other:?}"),
    }
}

#[test]
fn ef_survives_partial_eyelid() {
    let params = SynthParams {
        occlusion: Occlusion::Eyelid(0.4),
        ..SynthParams::default()
    };
    let (img, ann) = synth_eye(&params).unwrap();
    // robustness measurement only: a fit must come back, its error is not bounded
    let d = ef_detect(&img, &EfConfig::default()).unwrap();
    assert!((d.cx - ann.cx).is_finite() && (d.cy - ann.cy).is_finite());
}

#[test]
fn detectors_fail_cleanly_on_blank_input() {
    let blank = GrayImage::filled(640, 480, 128);
    assert!(cht_detect(&blank, &ChtConfig::default()).is_err());
    assert!(ef_detect(&blank, &EfConfig::default()).is_err());
    assert!(ido_detect(&blank, &IdoConfig::default()).is_err());
    assert!(rst_detect(&blank, &RstConfig::default()).is_err());
}
