//! CSV and Markdown rendering. Every file starts with `#` metadata that
//! reproduces the run: the instance hash, the resolved configuration and
//! the instance itself.

use std::fmt::Write as _;
use std::path::Path;

use csb_core::bounds::{BoundReport, Column};

use crate::config::Experiment;
use crate::error::{LabError, Result};
use crate::experiment::AggregateResult;
use crate::instance::InstanceSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    #[value(alias = "md")]
    Markdown,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
        }
    }

    /// Markdown for `.md` paths, CSV otherwise.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("md") => Format::Markdown,
            _ => Format::Csv,
        }
    }
}

fn metadata(
    out: &mut String,
    prefix: &str,
    title: &str,
    spec: &InstanceSpec,
    pairs: &[(&str, String)],
) {
    let _ = writeln!(out, "{prefix}{title}");
    let _ = writeln!(out, "{prefix}instance_sha256 = {}", spec.hash());
    for (k, v) in pairs {
        let _ = writeln!(out, "{prefix}{k} = {v}");
    }
    for line in spec.render().lines() {
        let _ = writeln!(out, "{prefix}instance.{line}");
    }
}

fn lock_summary(result: &AggregateResult) -> Vec<(&'static str, String)> {
    let locked: Vec<u64> = result.rounds_to_lock.iter().flatten().copied().collect();
    let mut out = vec![(
        "locked_runs",
        format!("{}/{}", locked.len(), result.rounds_to_lock.len()),
    )];
    if !locked.is_empty() {
        let mean = locked.iter().sum::<u64>() as f64 / locked.len() as f64;
        out.push(("mean_rounds_to_lock", mean.to_string()));
    }
    let finals = &result.per_run_final;
    out.push((
        "mean_final_regret",
        (finals.iter().sum::<f64>() / finals.len().max(1) as f64).to_string(),
    ));
    out
}

pub fn render_run(exp: &Experiment, result: &AggregateResult, format: Format) -> String {
    let mut pairs = exp.describe();
    pairs.extend(lock_summary(result));
    let mut out = String::new();
    let rows = result
        .rounds
        .iter()
        .zip(&result.mean_regret)
        .zip(&result.ci_halfwidth);
    match format {
        Format::Csv => {
            metadata(&mut out, "# ", "csb experiment", &exp.spec, &pairs);
            out.push_str("round,mean_regret,ci_halfwidth\n");
            for ((t, m), h) in rows {
                let _ = writeln!(out, "{t},{m},{h}");
            }
        }
        Format::Markdown => {
            out.push_str("<!--\n");
            metadata(&mut out, "", "csb experiment", &exp.spec, &pairs);
            out.push_str("-->\n\n| round | mean regret | 95% CI half-width |\n|---:|---:|---:|\n");
            for ((t, m), h) in rows {
                let _ = writeln!(out, "| {t} | {m:.4} | {h:.4} |");
            }
        }
    }
    out
}

fn column_name(c: Column) -> &'static str {
    match c {
        Column::KnownParameters => "known_horizon",
        Column::UnknownParameters => "anytime",
    }
}

fn inputs(report: &BoundReport) -> String {
    report
        .inputs
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn render_bounds(
    spec: &InstanceSpec,
    pairs: &[(&str, String)],
    reports: &[BoundReport],
    format: Format,
) -> String {
    let mut out = String::new();
    match format {
        Format::Csv => {
            metadata(
                &mut out,
                "# ",
                "csb threshold-estimation rounds",
                spec,
                pairs,
            );
            out.push_str("row,column,name,value,inputs\n");
            for r in reports {
                let value = r.value.map_or_else(|| "NA".to_owned(), |v| v.to_string());
                let _ = writeln!(
                    out,
                    "{},{},{},{value},{}",
                    r.row,
                    column_name(r.column),
                    r.name,
                    inputs(r)
                );
            }
        }
        Format::Markdown => {
            out.push_str("<!--\n");
            metadata(&mut out, "", "csb threshold-estimation rounds", spec, pairs);
            out.push_str("-->\n\n");
            out.push_str("| Threshold | Known T, epsilon | Anytime |\n|---|---:|---:|\n");
            let mut rows: Vec<&str> = Vec::new();
            for r in reports {
                if !rows.contains(&r.row) {
                    rows.push(r.row);
                }
            }
            for row in rows {
                let cell = |c: Column| {
                    reports
                        .iter()
                        .find(|r| r.row == row && r.column == c)
                        .and_then(|r| r.value)
                        .map_or_else(|| "n/a".to_owned(), |v| format!("{v:.2}"))
                };
                let _ = writeln!(
                    out,
                    "| {row} | {} | {} |",
                    cell(Column::KnownParameters),
                    cell(Column::UnknownParameters)
                );
            }
        }
    }
    out
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| LabError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentConfig;
    use crate::experiment::run_resolved;
    use crate::policy::PolicyKind;

    #[test]
    fn csv_layout() {
        let exp = ExperimentConfig::new("I", PolicyKind::CsbSu, 250, 2, 1)
            .resolve()
            .unwrap();
        let res = run_resolved(&exp, 1).unwrap();
        let csv = render_run(&exp, &res, Format::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines
            .iter()
            .take_while(|l| l.starts_with('#'))
            .any(|l| l.starts_with("# instance_sha256 = ")));
        let body: Vec<&str> = lines
            .into_iter()
            .skip_while(|l| l.starts_with('#'))
            .collect();
        assert_eq!(body[0], "round,mean_regret,ci_halfwidth");
        assert_eq!(body.len(), 4);
        assert!(body[3].starts_with("250,"));
        assert!(csv.contains("# policy = csb-su\n"));
        assert!(csv.contains("# instance.theta_s = 0.5\n"));
    }

    #[test]
    fn bounds_markdown_has_table() {
        let spec = crate::instance::Preset::III.spec();
        let reports = csb_core::bounds::rounds_report(&spec.instance, 1e-5, 0.1, 0.01, 9).unwrap();
        let md = render_bounds(&spec, &[], &reports, Format::Markdown);
        assert!(md.contains("| Same Threshold |"));
        assert!(md.contains("| 1 < n < K |"));
        assert!(md.contains("n/a"));
        let csv = render_bounds(&spec, &[], &reports, Format::Csv);
        assert!(csv.contains(",NA,"));
    }
}
