use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::detection::Method;

use super::Category;

pub const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub method: Method,
    pub category: Category,
    pub hits: usize,
    pub total: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalReport {
    pub method: Method,
    pub rate: f64,
    pub avg_robustness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub method: Method,
    pub mean_s: f64,
    pub median_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

/// Accuracy, robustness and timing tables of one benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: u32,
    pub methods: Vec<Method>,
    pub categories: Vec<Category>,
    pub cells: Vec<CellReport>,
    pub global: Vec<GlobalReport>,
    pub timing: Vec<TimingReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Markdown,
}

impl BenchReport {
    pub fn cell(&self, method: Method, category: Category) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.category == category)
    }

    pub fn global_for(&self, method: Method) -> Option<&GlobalReport> {
        self.global.iter().find(|g| g.method == method)
    }

    pub fn timing_for(&self, method: Method) -> Option<&TimingReport> {
        self.timing.iter().find(|t| t.method == method)
    }

    /// Copy with every timing figure zeroed, for comparing runs.
    pub fn without_timing(&self) -> BenchReport {
        let mut r = self.clone();
        for t in &mut r.timing {
            t.mean_s = 0.0;
            t.median_s = 0.0;
            t.min_s = 0.0;
            t.max_s = 0.0;
        }
        r
    }

    pub fn from_json(bytes: &[u8]) -> serde_json::Result<BenchReport> {
        serde_json::from_slice(bytes)
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("report serializes");
        out.push(b'\n');
        out
    }

    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Markdown => self.to_markdown().into_bytes(),
        }
    }

    fn header(&self, first: &str) -> String {
        let mut s = format!("| {first} |");
        for m in &self.methods {
            let _ = write!(s, " {m} |");
        }
        s.push_str("\n|---|");
        for _ in &self.methods {
            s.push_str("---:|");
        }
        s.push('\n');
        s
    }

    /// Global hit rate and average robustness per method.
    pub fn global_table(&self) -> String {
        let mut s = self.header("Summary");
        s.push_str("| Global hit rate (%) |");
        for m in &self.methods {
            match self.global_for(*m) {
                Some(g) => {
                    let _ = write!(s, " {:.2} |", g.rate);
                }
                None => s.push_str(" - |"),
            }
        }
        s.push_str("\n| Average robustness (%) |");
        for m in &self.methods {
            match self.global_for(*m) {
                Some(g) => {
                    let _ = write!(s, " {:.2} |", g.avg_robustness);
                }
                None => s.push_str(" - |"),
            }
        }
        s.push('\n');
        s
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::from("# Pupil detection benchmark\n\n## Accuracy\n\n");
        s.push_str(&self.header("Category"));
        for cat in &self.categories {
            let _ = write!(s, "| {cat} |");
            for m in &self.methods {
                match self.cell(*m, *cat) {
                    Some(c) => {
                        let _ = write!(s, " {}/{} ({:.2}%) |", c.hits, c.total, c.rate);
                    }
                    None => s.push_str(" - |"),
                }
            }
            s.push('\n');
        }
        s.push_str("| Global hit rate (%) |");
        for m in &self.methods {
            match self.global_for(*m) {
                Some(g) => {
                    let _ = write!(s, " {:.2} |", g.rate);
                }
                None => s.push_str(" - |"),
            }
        }
        s.push_str("\n\n## Robustness\n\n");
        s.push_str(&self.header("Category"));
        for cat in &self.categories {
            let _ = write!(s, "| {cat} |");
            for m in &self.methods {
                match self.cell(*m, *cat) {
                    Some(c) => {
                        let _ = write!(s, " {:.2} |", c.rate);
                    }
                    None => s.push_str(" - |"),
                }
            }
            s.push('\n');
        }
        s.push_str("| Average robustness (%) |");
        for m in &self.methods {
            match self.global_for(*m) {
                Some(g) => {
                    let _ = write!(s, " {:.2} |", g.avg_robustness);
                }
                None => s.push_str(" - |"),
            }
        }
        s.push_str("\n\n## Execution time (s)\n\n| Method | mean | median | min | max |\n|---|---:|---:|---:|---:|\n");
        for t in &self.timing {
            let _ = writeln!(
                s,
                "| {} | {:.6} | {:.6} | {:.6} | {:.6} |",
                t.method, t.mean_s, t.median_s, t.min_s, t.max_s
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_cell() -> BenchReport {
        BenchReport {
            version: REPORT_VERSION,
            methods: vec![Method::Rst],
            categories: vec![Category::Clear],
            cells: vec![CellReport {
                method: Method::Rst,
                category: Category::Clear,
                hits: 394,
                total: 400,
                rate: 98.5,
            }],
            global: vec![GlobalReport {
                method: Method::Rst,
                rate: 98.5,
                avg_robustness: 98.5,
            }],
            timing: vec![TimingReport {
                method: Method::Rst,
                mean_s: 0.01,
                median_s: 0.01,
                min_s: 0.005,
                max_s: 0.02,
            }],
        }
    }

    #[test]
    fn single_cell_markdown() {
        let md = one_cell().to_markdown();
        assert!(md.contains("| clear | 394/400 (98.50%) |"));
        assert!(md.contains("| Global hit rate (%) | 98.50 |"));
        assert!(md.contains("| Average robustness (%) | 98.50 |"));
        assert!(md.contains("| RST | 0.010000 | 0.010000 | 0.005000 | 0.020000 |"));
    }

    #[test]
    fn json_and_markdown_agree() {
        let rep = one_cell();
        let back = BenchReport::from_json(&rep.render(ReportFormat::Json)).unwrap();
        assert_eq!(back, rep);
        let md = String::from_utf8(back.render(ReportFormat::Markdown)).unwrap();
        assert!(md.contains(&format!("{:.2}", rep.cells[0].rate)));
    }

    #[test]
    fn json_field_names() {
        let v: serde_json::Value = serde_json::from_slice(&one_cell().to_json()).unwrap();
        assert_eq!(v["version"], 1);
        assert_eq!(v["methods"][0], "RST");
        assert_eq!(v["categories"][0], "clear");
        let cell = &v["cells"][0];
        for key in ["method", "category", "hits", "total", "rate"] {
            assert!(cell.get(key).is_some(), "missing {key}");
        }
        for key in ["method", "rate", "avg_robustness"] {
            assert!(v["global"][0].get(key).is_some());
        }
        for key in ["method", "mean_s", "median_s", "min_s", "max_s"] {
            assert!(v["timing"][0].get(key).is_some());
        }
    }
}
