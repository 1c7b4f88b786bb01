use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EvalError;

pub const MANIFEST_VERSION: u32 = 1;

/// Disturbance class of a benchmark image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Clear,
    HairEyelashes,
    Eyelid,
    GlassesReflections,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::Clear,
        Category::HairEyelashes,
        Category::Eyelid,
        Category::GlassesReflections,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Clear => "clear",
            Category::HairEyelashes => "hair_eyelashes",
            Category::Eyelid => "eyelid",
            Category::GlassesReflections => "glasses_reflections",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Category::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown category '{s}'"))
    }
}

/// Ground-truth pupil center and radius in full-resolution pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
    pub annotator: String,
    /// UTC seconds.
    pub timestamp: i64,
}

impl Annotation {
    /// Checks `r > 0` and that the center lies inside a `width × height`
    /// image.
    pub fn validate(&self, width: usize, height: usize) -> Result<(), String> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(format!("radius must be positive, got {}", self.r));
        }
        let inside = |v: f64, n: usize| v.is_finite() && v >= 0.0 && v <= (n as f64 - 1.0);
        if !inside(self.cx, width) || !inside(self.cy, height) {
            return Err(format!(
                "center ({}, {}) outside {}x{} image",
                self.cx, self.cy, width, height
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub path: String,
    pub category: Category,
    /// Missing while an image is still waiting for annotation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotation: Option<Annotation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub images: Vec<DatasetEntry>,
}

impl Default for DatasetManifest {
    fn default() -> Self {
        DatasetManifest {
            version: MANIFEST_VERSION,
            images: Vec::new(),
        }
    }
}

impl DatasetManifest {
    pub fn from_json(bytes: &[u8]) -> Result<Self, EvalError> {
        let manifest: DatasetManifest =
            serde_json::from_slice(bytes).map_err(|e| EvalError::Manifest(e.to_string()))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(EvalError::Manifest(format!(
                "unsupported manifest version {}",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self, EvalError> {
        let bytes = fs::read(path)
            .map_err(|e| EvalError::Manifest(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("manifest serializes");
        out.push(b'\n');
        out
    }

    /// Writes to a temporary sibling file, syncs, then renames over `path`.
    pub fn save_atomic(&self, path: &Path) -> Result<(), EvalError> {
        let dir = path
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .unwrap_or(Path::new("."));
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or("manifest.json");
        let tmp = dir.join(format!(".{name}.tmp"));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_json())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn resolve(&self, base: &Path, entry: &DatasetEntry) -> PathBuf {
        base.join(&entry.path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{ "version": 1, "images": [
        { "path": "a.png", "category": "hair_eyelashes",
          "annotation": { "cx": 10.5, "cy": 20.0, "r": 4.0, "annotator": "x", "timestamp": 1700000000 } },
        { "path": "b.png", "category": "clear" } ] }"#;

    #[test]
    fn parses_schema() {
        let m = DatasetManifest::from_json(SAMPLE.as_bytes()).unwrap();
        assert_eq!(m.images.len(), 2);
        assert_eq!(m.images[0].category, Category::HairEyelashes);
        assert_eq!(
            m.images[0].annotation.as_ref().unwrap().timestamp,
            1_700_000_000
        );
        assert!(m.images[1].annotation.is_none());
        let again = DatasetManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(again, m);
    }

    #[test]
    fn rejects_bad_category_and_version() {
        let bad = SAMPLE.replace("hair_eyelashes", "hair");
        assert!(matches!(
            DatasetManifest::from_json(bad.as_bytes()),
            Err(EvalError::Manifest(_))
        ));
        let v2 = SAMPLE.replace("\"version\": 1", "\"version\": 2");
        assert!(matches!(
            DatasetManifest::from_json(v2.as_bytes()),
            Err(EvalError::Manifest(_))
        ));
    }

    #[test]
    fn annotation_validation() {
        let mut a = Annotation {
            cx: 10.0,
            cy: 10.0,
            r: 3.0,
            annotator: String::new(),
            timestamp: 0,
        };
        assert!(a.validate(20, 20).is_ok());
        a.r = -3.0;
        assert!(a.validate(20, 20).is_err());
        a.r = 3.0;
        a.cx = 20.0;
        assert!(a.validate(20, 20).is_err());
    }

    #[test]
    fn atomic_save_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let m = DatasetManifest::from_json(SAMPLE.as_bytes()).unwrap();
        m.save_atomic(&path).unwrap();
        assert_eq!(DatasetManifest::load(&path).unwrap(), m);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
