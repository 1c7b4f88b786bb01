use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use crate::cht::{cht_detect, ChtConfig};
use crate::detection::{DetectError, Detection, Method};
use crate::ef::{ef_detect, EfConfig};
use crate::ido::{ido_detect, IdoConfig};
use crate::imaging::{decode, GrayImage};
use crate::rst::{rst_detect, RstConfig};

use super::metrics::{average_robustness, is_hit, rate_percent, relative_error};
use super::report::{BenchReport, CellReport, GlobalReport, TimingReport, REPORT_VERSION};
use super::synth::{synth_eye, CorpusItem};
use super::{Annotation, Category, DatasetManifest, EvalError};

/// Per-method detector settings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MethodConfigs {
    pub cht: ChtConfig,
    pub ef: EfConfig,
    pub ido: IdoConfig,
    pub rst: RstConfig,
}

impl MethodConfigs {
    pub fn run(&self, method: Method, img: &GrayImage) -> Result<Detection, DetectError> {
        match method {
            Method::Cht => cht_detect(img, &self.cht),
            Method::Ef => ef_detect(img, &self.ef),
            Method::Ido => ido_detect(img, &self.ido),
            Method::Rst => rst_detect(img, &self.rst),
        }
    }
}

/// Outcome of one detector on one image.
#[derive(Debug, Clone)]
pub struct ImageRecord {
    pub path: String,
    pub category: Category,
    pub method: Method,
    pub detection: Option<Detection>,
    pub error: Option<String>,
    pub relative_error: f64,
    pub hit: bool,
    /// Fastest of the repeated runs, seconds.
    pub elapsed: f64,
}

#[derive(Debug, Clone)]
pub struct BenchRun {
    pub report: BenchReport,
    pub records: Vec<ImageRecord>,
}

/// A decoded benchmark image with its ground truth.
pub struct LoadedImage {
    pub path: String,
    pub category: Category,
    pub image: GrayImage,
    pub annotation: Annotation,
}

/// Reads and validates every manifest entry.
pub fn load_images(manifest: &DatasetManifest, base: &Path) -> Result<Vec<LoadedImage>, EvalError> {
    if manifest.images.is_empty() {
        return Err(EvalError::Manifest("manifest contains no images".into()));
    }
    manifest
        .images
        .iter()
        .map(|entry| {
            let path = manifest.resolve(base, entry);
            let bytes = std::fs::read(&path)
                .map_err(|e| EvalError::Manifest(format!("cannot read {}: {e}", path.display())))?;
            let image = decode(&bytes)
                .map_err(|e| EvalError::Manifest(format!("{}: {e}", path.display())))?;
            let annotation = entry
                .annotation
                .clone()
                .ok_or_else(|| EvalError::Manifest(format!("{} has no annotation", entry.path)))?;
            annotation
                .validate(image.width(), image.height())
                .map_err(|e| EvalError::Manifest(format!("{}: {e}", entry.path)))?;
            Ok(LoadedImage {
                path: entry.path.clone(),
                category: entry.category,
                image,
                annotation,
            })
        })
        .collect()
}

/// Renders planned synthetic images in memory.
pub fn render_corpus(items: &[CorpusItem]) -> Result<Vec<LoadedImage>, EvalError> {
    items
        .iter()
        .map(|item| {
            let (image, annotation) = synth_eye(&item.params)?;
            Ok(LoadedImage {
                path: item.name.clone(),
                category: item.category,
                image,
                annotation,
            })
        })
        .collect()
}

/// Runs every selected method on every image `repeat` times, keeping the
/// fastest run's time; decoding is not timed.
pub fn run_benchmark(
    manifest: &DatasetManifest,
    base: &Path,
    methods: &[Method],
    configs: &MethodConfigs,
    repeat: usize,
) -> Result<BenchRun, EvalError> {
    let images = load_images(manifest, base)?;
    Ok(benchmark_images(&images, methods, configs, repeat))
}

pub fn benchmark_images(
    images: &[LoadedImage],
    methods: &[Method],
    configs: &MethodConfigs,
    repeat: usize,
) -> BenchRun {
    assert!(repeat >= 1, "repeat must be at least 1");
    let mut methods: Vec<Method> = methods.to_vec();
    methods.sort();
    methods.dedup();

    let mut records = Vec::with_capacity(images.len() * methods.len());
    for img in images {
        for &method in &methods {
            let mut best_time = f64::INFINITY;
            let mut outcome = None;
            for _ in 0..repeat {
                let start = Instant::now();
                let result = configs.run(method, &img.image);
                best_time = best_time.min(start.elapsed().as_secs_f64());
                if outcome.is_none() {
                    outcome = Some(result);
                }
            }
            let (detection, error) = match outcome.expect("repeat >= 1") {
                Ok(d) => (Some(d), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let err = relative_error(detection.as_ref(), &img.annotation);
            records.push(ImageRecord {
                path: img.path.clone(),
                category: img.category,
                method,
                detection,
                error,
                relative_error: err,
                hit: is_hit(err),
                elapsed: best_time,
            });
        }
    }
    let report = aggregate(&records, &methods);
    BenchRun { report, records }
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Ordered reduction of per-image records into report tables.
pub fn aggregate(records: &[ImageRecord], methods: &[Method]) -> BenchReport {
    let mut counts: BTreeMap<(Method, Category), (usize, usize)> = BTreeMap::new();
    let mut times: BTreeMap<Method, Vec<f64>> = BTreeMap::new();
    for r in records {
        let c = counts.entry((r.method, r.category)).or_default();
        c.0 += r.hit as usize;
        c.1 += 1;
        times.entry(r.method).or_default().push(r.elapsed);
    }
    let categories: Vec<Category> = Category::ALL
        .into_iter()
        .filter(|c| counts.keys().any(|(_, k)| k == c))
        .collect();

    let mut cells = Vec::new();
    let mut global = Vec::new();
    let mut timing = Vec::new();
    for &m in methods {
        let mut rates = Vec::new();
        let (mut hits, mut total) = (0, 0);
        for &cat in &categories {
            let (h, t) = counts.get(&(m, cat)).copied().unwrap_or((0, 0));
            if t == 0 {
                continue;
            }
            hits += h;
            total += t;
            rates.push(100.0 * h as f64 / t as f64);
            cells.push(CellReport {
                method: m,
                category: cat,
                hits: h,
                total: t,
                rate: rate_percent(h, t),
            });
        }
        if total > 0 {
            global.push(GlobalReport {
                method: m,
                rate: rate_percent(hits, total),
                avg_robustness: average_robustness(&rates).expect("non-empty"),
            });
        }
        if let Some(ts) = times.get_mut(&m) {
            ts.sort_by(f64::total_cmp);
            timing.push(TimingReport {
                method: m,
                mean_s: ts.iter().sum::<f64>() / ts.len() as f64,
                median_s: median(ts),
                min_s: ts[0],
                max_s: ts[ts.len() - 1],
            });
        }
    }
    BenchReport {
        version: REPORT_VERSION,
        methods: methods.to_vec(),
        categories,
        cells,
        global,
        timing,
    }
}
