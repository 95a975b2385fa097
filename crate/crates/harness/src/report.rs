//! Curve smoothing, the episode CSV format, plot-data emission, and the
//! two-run comparison report.

use std::fmt::Write as _;
use std::path::Path;

use crate::{EpisodeLog, HarnessError, Result};

pub const CSV_HEADER: &str = "episode,reward,steps,reached_goal,alpha,smoothed_reward";

/// Trailing moving average; indices before the window fills average what is
/// available so far.
pub fn smooth_curve(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 1 {
        return Err(HarnessError::Contract(
            "smoothing window must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(series.len());
    let mut sum = 0.0;
    for i in 0..series.len() {
        sum += series[i];
        if i >= window {
            sum -= series[i - window];
        }
        let denom = (i + 1).min(window) as f64;
        out.push(sum / denom);
    }
    Ok(out)
}

/// Formats one CSV row. `reached_goal` is written as 0/1; floats use the
/// shortest round-trip representation with a '.' decimal point.
pub fn csv_row(log: &EpisodeLog, smoothed: f64) -> String {
    format!(
        "{},{},{},{},{},{}",
        log.episode,
        log.reward,
        log.steps,
        if log.reached_goal { 1 } else { 0 },
        log.alpha,
        smoothed
    )
}

/// Writes a complete episode CSV: header plus one row per log, LF endings.
pub fn emit_csv(logs: &[EpisodeLog], window: usize, path: &Path) -> Result<()> {
    if logs.is_empty() {
        return Err(HarnessError::Contract(
            "emit_csv needs at least one log".into(),
        ));
    }
    let rewards: Vec<f64> = logs.iter().map(|l| l.reward).collect();
    let smoothed = smooth_curve(&rewards, window)?;
    let mut text = String::new();
    writeln!(text, "{CSV_HEADER}").expect("string write");
    for (log, s) in logs.iter().zip(&smoothed) {
        writeln!(text, "{}", csv_row(log, *s)).expect("string write");
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// One parsed CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeRow {
    pub episode: u32,
    pub reward: f64,
    pub steps: u32,
    pub reached_goal: bool,
    pub alpha: f64,
    pub smoothed_reward: f64,
}

pub fn parse_csv(path: &Path) -> Result<Vec<EpisodeRow>> {
    let text =
        std::fs::read_to_string(path).map_err(|_| HarnessError::MissingFile(path.to_path_buf()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == CSV_HEADER => {}
        other => {
            return Err(HarnessError::Contract(format!(
                "unexpected CSV header {other:?} in {}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(HarnessError::Contract(format!(
                "line {} of {} has {} fields",
                i + 2,
                path.display(),
                fields.len()
            )));
        }
        let parse_err = |what: &str| HarnessError::Contract(format!("line {}: bad {what}", i + 2));
        rows.push(EpisodeRow {
            episode: fields[0].parse().map_err(|_| parse_err("episode"))?,
            reward: fields[1].parse().map_err(|_| parse_err("reward"))?,
            steps: fields[2].parse().map_err(|_| parse_err("steps"))?,
            reached_goal: fields[3] == "1",
            alpha: fields[4].parse().map_err(|_| parse_err("alpha"))?,
            smoothed_reward: fields[5]
                .parse()
                .map_err(|_| parse_err("smoothed_reward"))?,
        });
    }
    Ok(rows)
}

/// Aligned multi-run table for external plotting: one `episode` column and
/// one column per named series. Shorter runs pad with empty cells.
pub fn emit_plotdata(runs: &[(String, Vec<f64>)], path: &Path) -> Result<()> {
    if runs.is_empty() {
        return Err(HarnessError::Contract(
            "emit_plotdata needs at least one run".into(),
        ));
    }
    let longest = runs.iter().map(|(_, s)| s.len()).max().unwrap_or(0);
    let mut text = String::from("episode");
    for (name, _) in runs {
        text.push(',');
        text.push_str(name);
    }
    text.push('\n');
    for i in 0..longest {
        write!(text, "{i}").expect("string write");
        for (_, series) in runs {
            text.push(',');
            if let Some(v) = series.get(i) {
                write!(text, "{v}").expect("string write");
            }
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// All seeds of one run directory.
#[derive(Debug, Clone)]
pub struct RunData {
    pub name: String,
    pub seeds: Vec<(u64, Vec<EpisodeRow>)>,
}

/// Loads `seed-*/episodes.csv` under a run directory, sorted by seed.
pub fn load_run_dir(dir: &Path) -> Result<RunData> {
    let mut seeds = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|_| HarnessError::MissingFile(dir.into()))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(seed) = name
            .strip_prefix("seed-")
            .and_then(|s| s.parse::<u64>().ok())
        {
            let csv = entry.path().join("episodes.csv");
            if csv.exists() {
                seeds.push((seed, parse_csv(&csv)?));
            }
        }
    }
    if seeds.is_empty() {
        return Err(HarnessError::Contract(format!(
            "no seed-*/episodes.csv found under {}",
            dir.display()
        )));
    }
    seeds.sort_by_key(|(s, _)| *s);
    Ok(RunData {
        name: dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string()),
        seeds,
    })
}

/// Per-seed comparison numbers.
#[derive(Debug, Clone, Copy)]
pub struct SeedVerdict {
    pub seed: u64,
    pub first_goal_a: Option<u32>,
    pub first_goal_b: Option<u32>,
    pub early_mean_a: f64,
    pub early_mean_b: f64,
    pub final_mean_a: f64,
    pub final_mean_b: f64,
    pub final_goal_rate_a: f64,
    pub final_goal_rate_b: f64,
    /// A reached its first goal strictly earlier (an unreached goal loses).
    pub first_goal_win: bool,
    /// A's smoothed reward over the first third beats B's.
    pub early_mean_win: bool,
}

/// Comparison of run A (typically the shaped agent) against run B (the
/// baseline) seed by seed.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub name_a: String,
    pub name_b: String,
    pub episodes: u32,
    pub seeds: Vec<SeedVerdict>,
    pub first_goal_wins: usize,
    pub early_mean_wins: usize,
}

fn first_goal(rows: &[EpisodeRow]) -> Option<u32> {
    rows.iter().find(|r| r.reached_goal).map(|r| r.episode)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for v in values {
        sum += v;
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Mean smoothed reward and goal rate over the final `span` episodes.
pub fn final_window(rows: &[EpisodeRow], span: usize) -> (f64, f64) {
    let start = rows.len().saturating_sub(span);
    let tail = &rows[start..];
    let mean_reward = mean(tail.iter().map(|r| r.smoothed_reward));
    let goal_rate = mean(tail.iter().map(|r| if r.reached_goal { 1.0 } else { 0.0 }));
    (mean_reward, goal_rate)
}

pub fn compare_runs(a: &RunData, b: &RunData) -> Result<CompareReport> {
    if a.seeds.len() != b.seeds.len() {
        return Err(HarnessError::Contract(format!(
            "seed counts differ: {} vs {}",
            a.seeds.len(),
            b.seeds.len()
        )));
    }
    let mut seeds = Vec::new();
    let mut episodes = 0;
    for ((seed_a, rows_a), (seed_b, rows_b)) in a.seeds.iter().zip(&b.seeds) {
        if seed_a != seed_b {
            return Err(HarnessError::Contract(format!(
                "seed sets differ: {seed_a} vs {seed_b}"
            )));
        }
        if rows_a.len() != rows_b.len() {
            return Err(HarnessError::Contract(format!(
                "seed {seed_a}: episode counts differ ({} vs {})",
                rows_a.len(),
                rows_b.len()
            )));
        }
        episodes = rows_a.len() as u32;
        let third = (rows_a.len() / 3).max(1);
        let (final_mean_a, final_goal_rate_a) = final_window(rows_a, 500);
        let (final_mean_b, final_goal_rate_b) = final_window(rows_b, 500);
        let first_goal_a = first_goal(rows_a);
        let first_goal_b = first_goal(rows_b);
        let early_mean_a = mean(rows_a[..third].iter().map(|r| r.smoothed_reward));
        let early_mean_b = mean(rows_b[..third].iter().map(|r| r.smoothed_reward));
        let first_goal_win = match (first_goal_a, first_goal_b) {
            (Some(x), Some(y)) => x < y,
            (Some(_), None) => true,
            _ => false,
        };
        seeds.push(SeedVerdict {
            seed: *seed_a,
            first_goal_a,
            first_goal_b,
            early_mean_a,
            early_mean_b,
            final_mean_a,
            final_mean_b,
            final_goal_rate_a,
            final_goal_rate_b,
            first_goal_win,
            early_mean_win: early_mean_a > early_mean_b,
        });
    }
    Ok(CompareReport {
        name_a: a.name.clone(),
        name_b: b.name.clone(),
        episodes,
        first_goal_wins: seeds.iter().filter(|s| s.first_goal_win).count(),
        early_mean_wins: seeds.iter().filter(|s| s.early_mean_win).count(),
        seeds,
    })
}

impl std::fmt::Display for CompareReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(
            f,
            "comparison: A = {} vs B = {} ({} episodes per seed)",
            self.name_a, self.name_b, self.episodes
        )?;
        for s in &self.seeds {
            let fmt_goal = |g: Option<u32>| match g {
                Some(e) => e.to_string(),
                None => "never".to_string(),
            };
            writeln!(
                f,
                "seed {}: first goal A {} vs B {} | early smoothed mean A {:.2} vs B {:.2} | final-500 mean A {:.2} vs B {:.2} | final-500 goal rate A {:.1}% vs B {:.1}%",
                s.seed,
                fmt_goal(s.first_goal_a),
                fmt_goal(s.first_goal_b),
                s.early_mean_a,
                s.early_mean_b,
                s.final_mean_a,
                s.final_mean_b,
                s.final_goal_rate_a * 100.0,
                s.final_goal_rate_b * 100.0,
            )?;
        }
        let n = self.seeds.len();
        let majority = n.div_ceil(2).max(2.min(n));
        writeln!(
            f,
            "first-goal wins for A: {}/{n} | early-mean wins for A: {}/{n}",
            self.first_goal_wins, self.early_mean_wins
        )?;
        let verdict = if self.first_goal_wins >= majority && self.early_mean_wins >= majority {
            "A wins the early-learning comparison"
        } else {
            "A does not win the early-learning comparison"
        };
        writeln!(f, "verdict: {verdict}")
    }
}
