//! Aggregation of learning curves and evaluation reports across seeds.
//!
//! Curve files are tab-separated with two `#` header lines, the column names
//! and one line per evaluation:
//!
//! ```text
//! # config_hash: 5c1f0e9a2b7d4c33
//! # seed: 0
//! step<TAB>mean_reward<TAB>std_reward
//! 20480<TAB>-0.369<TAB>0.445
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::eval::{EvalMode, EvalReport};
use crate::error::{Error, Result};
use crate::ppo::CurvePoint;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveFile {
    pub config_hash: String,
    pub seed: u64,
    pub points: Vec<CurvePoint>,
}

const CURVE_COLUMNS: &str = "step\tmean_reward\tstd_reward";

impl CurveFile {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# config_hash: {}\n# seed: {}\n{CURVE_COLUMNS}\n",
            self.config_hash, self.seed
        );
        for p in &self.points {
            out.push_str(&format!("{}\t{}\t{}\n", p.step, p.mean_reward, p.std_reward));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            lines
                .next()
                .and_then(|l| l.strip_prefix(&format!("# {key}: ")))
                .map(|v| v.trim().to_string())
                .ok_or_else(|| Error::Report(format!("curve file is missing its '# {key}:' header line")))
        };
        let config_hash = header("config_hash")?;
        let seed = header("seed")?
            .parse()
            .map_err(|_| Error::Report("curve seed is not an integer".into()))?;
        if lines.next() != Some(CURVE_COLUMNS) {
            return Err(Error::Report(format!("curve column header must be {CURVE_COLUMNS:?}")));
        }
        let points = lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(k, line)| {
                let bad = || Error::Report(format!("curve data line {}: {line:?}", k + 1));
                let f: Vec<&str> = line.split('\t').collect();
                if f.len() != 3 {
                    return Err(bad());
                }
                Ok(CurvePoint {
                    step: f[0].parse().map_err(|_| bad())?,
                    mean_reward: f[1].parse().map_err(|_| bad())?,
                    std_reward: f[2].parse().map_err(|_| bad())?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config_hash,
            seed,
            points,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| Error::Report(format!("{}: {e}", path.display())))
    }
}

/// Across-seed statistics for one step bucket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketRow {
    pub step: u64,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Mean and standard deviation (across reports) of one evaluation column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

/// Aggregated terminal statistics for one (mode, greedy) group.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRow {
    pub mode: EvalMode,
    pub greedy: bool,
    pub runs: usize,
    pub flag_capture: Stat,
    pub defeated: Stat,
    pub lost_flag: Stat,
    pub time_up: Stat,
    pub mean_reward: Stat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportOutput {
    pub config_hash: String,
    pub curve: Vec<BucketRow>,
    pub evals: Vec<EvalRow>,
}

fn stat(xs: &[f64]) -> Stat {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Stat {
        mean,
        std: (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt(),
    }
}

/// Mean ± std of greedy return across seeds per step bucket. A bucket of
/// width `w` collects steps in `(k·w − w, k·w]` and is labelled `k·w`;
/// without a width every distinct step is its own bucket. A seed with several
/// points in one bucket contributes their average.
pub fn aggregate_curves(curves: &[CurveFile], bucket: Option<u64>) -> Vec<BucketRow> {
    let mut by_bucket: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for curve in curves {
        let mut own: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
        for p in &curve.points {
            let key = match bucket {
                Some(w) if w > 0 => p.step.div_ceil(w) * w,
                _ => p.step,
            };
            own.entry(key).or_default().push(p.mean_reward);
        }
        for (key, xs) in own {
            by_bucket.entry(key).or_default().push(stat(&xs).mean);
        }
    }
    by_bucket
        .into_iter()
        .map(|(step, xs)| {
            let s = stat(&xs);
            BucketRow {
                step,
                mean: s.mean,
                std: s.std,
                seeds: xs.len(),
            }
        })
        .collect()
}

pub fn aggregate_evals(reports: &[EvalReport]) -> Vec<EvalRow> {
    let mut groups: BTreeMap<(u8, bool), Vec<&EvalReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.mode as u8, r.greedy)).or_default().push(r);
    }
    groups
        .into_values()
        .map(|rs| {
            let col = |f: fn(&EvalReport) -> f64| stat(&rs.iter().map(|r| f(r)).collect::<Vec<_>>());
            EvalRow {
                mode: rs[0].mode,
                greedy: rs[0].greedy,
                runs: rs.len(),
                flag_capture: col(|r| r.flag_capture),
                defeated: col(|r| r.defeated),
                lost_flag: col(|r| r.lost_flag),
                time_up: col(|r| r.time_up),
                mean_reward: col(|r| r.mean_reward),
            }
        })
        .collect()
}

impl ReportOutput {
    /// Plot-ready series: one line per bucket.
    pub fn series_tsv(&self) -> String {
        let mut out = format!(
            "# config_hash: {}\nstep\tmean_reward\tstd_reward\tseeds\n",
            self.config_hash
        );
        for r in &self.curve {
            out.push_str(&format!("{}\t{}\t{}\t{}\n", r.step, r.mean, r.std, r.seeds));
        }
        out
    }

    /// Aligned text tables for a terminal.
    pub fn table(&self) -> String {
        let mut out = format!("environment {}\n", self.config_hash);
        if !self.curve.is_empty() {
            out.push_str(&format!("\n{:>10} {:>18} {:>6}\n", "step", "greedy return", "seeds"));
            for r in &self.curve {
                out.push_str(&format!(
                    "{:>10} {:>18} {:>6}\n",
                    r.step,
                    format!("{:.3} ± {:.3}", r.mean, r.std),
                    r.seeds
                ));
            }
        }
        if !self.evals.is_empty() {
            out.push_str(&format!(
                "\n{:<15} {:>4} {:>15} {:>15} {:>15} {:>15} {:>17}\n",
                "policy", "runs", "Flag Capture %", "Defeated %", "Lost Flag %", "Time-up %", "mean reward"
            ));
            let pm = |s: Stat| format!("{:.1} ± {:.1}", s.mean, s.std);
            for r in &self.evals {
                let label = format!(
                    "{} {}",
                    match r.mode {
                        EvalMode::Rate => "rate",
                        EvalMode::Spike => "spike",
                    },
                    if r.greedy { "greedy" } else { "sampled" }
                );
                out.push_str(&format!(
                    "{:<15} {:>4} {:>15} {:>15} {:>15} {:>15} {:>17}\n",
                    label,
                    r.runs,
                    pm(r.flag_capture),
                    pm(r.defeated),
                    pm(r.lost_flag),
                    pm(r.time_up),
                    format!("{:.3} ± {:.3}", r.mean_reward.mean, r.mean_reward.std)
                ));
            }
        }
        out
    }
}

/// Aggregate curve files (`.tsv`) and evaluation reports (`.toml`). Every
/// input must come from the same environment definition.
pub fn cmd_report(paths: &[PathBuf], bucket: Option<u64>) -> Result<ReportOutput> {
    if paths.is_empty() {
        return Err(Error::Report("no input files to aggregate".into()));
    }
    let mut curves = Vec::new();
    let mut evals = Vec::new();
    let mut hashes: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for path in paths {
        let (hash, name) = if path.extension().is_some_and(|e| e == "tsv") {
            let c = CurveFile::load(path)?;
            let h = c.config_hash.clone();
            curves.push(c);
            (h, path.display().to_string())
        } else {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let r = EvalReport::from_toml(&text).map_err(|e| Error::Report(format!("{}: {e}", path.display())))?;
            let h = r.config_hash.clone();
            evals.push(r);
            (h, path.display().to_string())
        };
        hashes.entry(hash).or_default().push(name);
    }
    if hashes.len() > 1 {
        let detail: Vec<String> = hashes
            .iter()
            .map(|(h, files)| format!("{h}: {}", files.join(", ")))
            .collect();
        return Err(Error::Report(format!(
            "inputs come from different environment configs:\n  {}",
            detail.join("\n  ")
        )));
    }
    Ok(ReportOutput {
        config_hash: hashes.into_keys().next().expect("at least one input"),
        curve: aggregate_curves(&curves, bucket),
        evals: aggregate_evals(&evals),
    })
}
