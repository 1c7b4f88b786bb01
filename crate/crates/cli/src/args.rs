use std::net::IpAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use pupilbench::cht::ChtConfig;
use pupilbench::ef::EfConfig;
use pupilbench::eval::{MethodConfigs, DEFAULT_PROPORTIONS};
use pupilbench::ido::IdoConfig;
use pupilbench::rst::RstConfig;
use pupilbench::Method;

#[derive(Debug, Parser)]
#[command(name = "pupilbench", version, about = "Pupil-center detection toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect the pupil center in one image; prints one JSON line per method.
    Detect {
        image: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        method: MethodArg,
        /// Write the input with detections drawn on it.
        #[arg(long)]
        overlay: Option<PathBuf>,
        #[command(flatten)]
        params: DetectorArgs,
    },
    /// Benchmark methods against an annotated manifest.
    Bench {
        manifest: PathBuf,
        /// Directory for report.json and report.md.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
        methods: Vec<MethodArg>,
        /// Runs per image; the fastest one is timed.
        #[arg(long, default_value_t = 3)]
        repeat: usize,
        #[command(flatten)]
        params: DetectorArgs,
    },
    /// Render a synthetic annotated corpus.
    Synth {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Category weights: clear, hair_eyelashes, eyelid, glasses_reflections.
        #[arg(long, value_delimiter = ',')]
        proportions: Option<Vec<u32>>,
    },
    /// Serve the annotation API and UI bundle for an image directory.
    AnnotateServe {
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Manifest to read and update; defaults to manifest.json in `dir`.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Directory holding the built annotator UI.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        bind: IpAddr,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cht,
    Ef,
    Ido,
    Rst,
    All,
}

/// Expands `all` and removes duplicates, keeping the canonical order.
pub fn expand_methods(args: &[MethodArg]) -> Vec<Method> {
    let mut out: Vec<Method> = args
        .iter()
        .flat_map(|m| match m {
            MethodArg::Cht => vec![Method::Cht],
            MethodArg::Ef => vec![Method::Ef],
            MethodArg::Ido => vec![Method::Ido],
            MethodArg::Rst => vec![Method::Rst],
            MethodArg::All => Method::ALL.to_vec(),
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

#[derive(Debug, Clone, Args)]
pub struct DetectorArgs {
    /// Radius range at downsampled scale, `MIN..MAX`.
    #[arg(long, default_value = "5..25", value_parser = parse_radii)]
    pub radii: (usize, usize),
    /// Dark threshold for EF binarization and IDO candidates.
    #[arg(long, default_value_t = 25)]
    pub threshold: u8,
    /// RST radial strictness.
    #[arg(long, default_value_t = 2.0, value_parser = parse_alpha)]
    pub alpha: f64,
}

impl DetectorArgs {
    pub fn configs(&self) -> MethodConfigs {
        let (r_min, r_max) = self.radii;
        MethodConfigs {
            cht: ChtConfig {
                r_min,
                r_max,
                ..ChtConfig::default()
            },
            ef: EfConfig {
                threshold: self.threshold,
                ..EfConfig::default()
            },
            ido: IdoConfig {
                r_min,
                r_max,
                threshold: self.threshold,
                ..IdoConfig::default()
            },
            rst: RstConfig::with_range(r_min, r_max, self.alpha),
        }
    }
}

pub fn parse_radii(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("expected MIN..MAX, got {s:?}"))?;
    let lo: usize = lo.trim().parse().map_err(|e| format!("bad minimum: {e}"))?;
    let hi: usize = hi.trim().parse().map_err(|e| format!("bad maximum: {e}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("need 1 <= MIN <= MAX, got {lo}..{hi}"));
    }
    Ok((lo, hi))
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("alpha must be positive, got {v}"))
    }
}

pub fn proportions(arg: &Option<Vec<u32>>) -> Result<[u32; 4], String> {
    match arg {
        None => Ok(DEFAULT_PROPORTIONS),
        Some(v) => {
            let p: [u32; 4] = v
                .as_slice()
                .try_into()
                .map_err(|_| "proportions need four weights".to_string())?;
            if p.iter().all(|&w| w == 0) {
                return Err("proportions must not all be zero".into());
            }
            Ok(p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radii_parsing() {
        assert_eq!(parse_radii("5..25"), Ok((5, 25)));
        assert_eq!(parse_radii("7..7"), Ok((7, 7)));
        assert!(parse_radii("25..5").is_err());
        assert!(parse_radii("0..5").is_err());
        assert!(parse_radii("5-25").is_err());
    }

    #[test]
    fn method_expansion_is_canonical() {
        assert_eq!(
            expand_methods(&[MethodArg::Rst, MethodArg::Ef, MethodArg::Rst]),
            vec![Method::Ef, Method::Rst]
        );
        assert_eq!(expand_methods(&[MethodArg::All]), Method::ALL.to_vec());
    }

    #[test]
    fn overrides_reach_every_detector() {
        let args = DetectorArgs {
            radii: (6, 20),
            threshold: 30,
            alpha: 3.0,
        };
        let c = args.configs();
        assert_eq!((c.cht.r_min, c.cht.r_max), (6, 20));
        assert_eq!((c.ido.r_min, c.ido.r_max, c.ido.threshold), (6, 20, 30));
        assert_eq!(c.ef.threshold, 30);
        assert_eq!(c.rst.radii, (6..=20).collect::<Vec<_>>());
        assert_eq!(c.rst.alpha, 3.0);
    }
}
