use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use pupilbench::eval::{run_benchmark, write_corpus, DatasetManifest, ReportFormat};
use pupilbench::imaging::decode;
use pupilbench::{Detection, Method};

use crate::args::{expand_methods, proportions, DetectorArgs, MethodArg};
use crate::overlay::draw_overlay;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ALL_FAILED: i32 = 2;

/// A failure that ends the command with exit code 1.
#[derive(Debug)]
pub struct CommandError(pub String);

impl<E: std::fmt::Display> From<E> for CommandError {
    fn from(e: E) -> Self {
        CommandError(e.to_string())
    }
}

pub fn detection_json(method: Method, result: &Result<Detection, String>) -> serde_json::Value {
    match result {
        Ok(d) => json!({
            "method": method,
            "cx": d.cx,
            "cy": d.cy,
            "shape": d.shape,
            "score": d.score,
            "elapsed_s": d.elapsed,
        }),
        Err(e) => json!({ "method": method, "error": e }),
    }
}

pub fn detect(
    image: &Path,
    method: MethodArg,
    overlay: Option<&Path>,
    params: &DetectorArgs,
    out: &mut impl Write,
) -> Result<i32, CommandError> {
    let bytes = fs::read(image)
        .map_err(|e| CommandError(format!("cannot read {}: {e}", image.display())))?;
    let img = decode(&bytes)
        .map_err(|e| CommandError(format!("cannot decode {}: {e}", image.display())))?;
    let configs = params.configs();
    let results: Vec<(Method, Result<Detection, String>)> = expand_methods(&[method])
        .into_iter()
        .map(|m| (m, configs.run(m, &img).map_err(|e| e.to_string())))
        .collect();
    for (m, r) in &results {
        if let Err(e) = r {
            log::info!("{m} failed: {e}");
        }
        writeln!(out, "{}", detection_json(*m, r))?;
    }
    if let Some(path) = overlay {
        let found: Vec<&Detection> = results
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok())
            .collect();
        fs::write(path, draw_overlay(&img, &found))
            .map_err(|e| CommandError(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(if results.iter().any(|(_, r)| r.is_ok()) {
        EXIT_OK
    } else {
        EXIT_ALL_FAILED
    })
}

pub fn bench(
    manifest_path: &Path,
    out_dir: &Path,
    methods: &[MethodArg],
    repeat: usize,
    params: &DetectorArgs,
    out: &mut impl Write,
) -> Result<i32, CommandError> {
    if repeat == 0 {
        return Err(CommandError("--repeat must be at least 1".into()));
    }
    let manifest = DatasetManifest::load(manifest_path)?;
    let base = manifest_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let run = run_benchmark(
        &manifest,
        base,
        &expand_methods(methods),
        &params.configs(),
        repeat,
    )?;
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("report.json"),
        run.report.render(ReportFormat::Json),
    )?;
    fs::write(
        out_dir.join("report.md"),
        run.report.render(ReportFormat::Markdown),
    )?;
    write!(out, "{}", run.report.global_table())?;
    Ok(EXIT_OK)
}

pub fn synth(
    count: usize,
    seed: u64,
    out_dir: &Path,
    weights: &Option<Vec<u32>>,
    out: &mut impl Write,
) -> Result<i32, CommandError> {
    if count == 0 {
        return Err(CommandError("--count must be at least 1".into()));
    }
    let weights = proportions(weights).map_err(CommandError)?;
    let manifest = write_corpus(out_dir, count, seed, &weights)?;
    writeln!(
        out,
        "{}",
        json!({ "images": manifest.images.len(), "out": out_dir.display().to_string() })
    )?;
    Ok(EXIT_OK)
}
