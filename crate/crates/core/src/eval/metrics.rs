use crate::detection::Detection;

use super::{Annotation, EvalError};

/// A detection is a hit when its center lies within this fraction of the
/// annotated pupil radius from the annotated center.
pub const HIT_THRESHOLD: f64 = 0.25;

/// `d / R`; `None` (a failed detection) maps to `+∞`.
pub fn relative_error(det: Option<&Detection>, ann: &Annotation) -> f64 {
    assert!(ann.r > 0.0, "annotation radius must be positive");
    match det {
        Some(d) => (d.cx - ann.cx).hypot(d.cy - ann.cy) / ann.r,
        None => f64::INFINITY,
    }
}

/// Boundary inclusive: `err <= 0.25`.
pub fn is_hit(err: f64) -> bool {
    err <= HIT_THRESHOLD
}

/// `100 · hits / total` rounded to two decimals, ties to even, computed in
/// integer arithmetic so that e.g. 757/800 gives exactly 94.62.
pub fn rate_percent(hits: usize, total: usize) -> f64 {
    assert!(total > 0, "total must be positive");
    assert!(hits <= total, "hits cannot exceed total");
    let num = hits as u128 * 10_000;
    let den = total as u128;
    let (q, rem) = (num / den, num % den);
    let rounded = match (2 * rem).cmp(&den) {
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal if q % 2 == 1 => q + 1,
        _ => q,
    };
    rounded as f64 / 100.0
}

pub fn hit_rate<'a, I>(results: I) -> Result<f64, EvalError>
where
    I: IntoIterator<Item = (Option<&'a Detection>, &'a Annotation)>,
{
    let (mut hits, mut total) = (0usize, 0usize);
    for (det, ann) in results {
        total += 1;
        if is_hit(relative_error(det, ann)) {
            hits += 1;
        }
    }
    if total == 0 {
        return Err(EvalError::EmptySet);
    }
    Ok(rate_percent(hits, total))
}

/// Rounds to two decimals, half away from zero.
pub fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Unweighted mean of per-category rates, rounded to two decimals.
pub fn average_robustness(category_rates: &[f64]) -> Result<f64, EvalError> {
    if category_rates.is_empty() {
        return Err(EvalError::EmptySet);
    }
    Ok(round2(
        category_rates.iter().sum::<f64>() / category_rates.len() as f64,
    ))
}

/// Pooled rate over several (hits, total) subsets.
pub fn pooled_rate(counts: &[(usize, usize)]) -> Result<f64, EvalError> {
    let hits: usize = counts.iter().map(|c| c.0).sum();
    let total: usize = counts.iter().map(|c| c.1).sum();
    if total == 0 {
        return Err(EvalError::EmptySet);
    }
    Ok(rate_percent(hits, total))
}
