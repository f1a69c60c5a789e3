use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DiagnosticsError, DiagnosticsRow, SearchResult};

const ROW_HEADER: [&str; 6] = ["K", "heldout_llpw", "residual_dispersion", "mean_coherence", "mean_exclusivity", "wall_time_ms"];
const TOPIC_HEADER: [&str; 4] = ["K", "topic", "coherence", "exclusivity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Tsv,
    Csv,
}

impl ReportFormat {
    pub fn delimiter(self) -> char {
        match self {
            ReportFormat::Tsv => '\t',
            ReportFormat::Csv => ',',
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Tsv => "tsv",
            ReportFormat::Csv => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScoreRow {
    pub k: usize,
    pub topic: usize,
    pub coherence: f64,
    pub exclusivity: f64,
}

fn join(fields: &[String], delim: char) -> String {
    fields.join(&delim.to_string())
}

pub fn write_diagnostics_table<W: Write>(rows: &[DiagnosticsRow], format: ReportFormat, mut w: W) -> std::io::Result<()> {
    let d = format.delimiter();
    writeln!(w, "{}", ROW_HEADER.join(&d.to_string()))?;
    for r in rows {
        let fields = [
            r.k.to_string(),
            r.heldout_llpw.to_string(),
            r.residual_dispersion.to_string(),
            r.mean_coherence.to_string(),
            r.mean_exclusivity.to_string(),
            r.wall_time_ms.to_string(),
        ];
        writeln!(w, "{}", join(&fields, d))?;
    }
    w.flush()
}

pub fn write_topic_table<W: Write>(rows: &[TopicScoreRow], format: ReportFormat, mut w: W) -> std::io::Result<()> {
    let d = format.delimiter();
    writeln!(w, "{}", TOPIC_HEADER.join(&d.to_string()))?;
    for r in rows {
        let fields = [r.k.to_string(), r.topic.to_string(), r.coherence.to_string(), r.exclusivity.to_string()];
        writeln!(w, "{}", join(&fields, d))?;
    }
    w.flush()
}

fn parse_table<R: BufRead>(r: R, format: ReportFormat, header: &[&str]) -> Result<Vec<Vec<String>>, DiagnosticsError> {
    let d = format.delimiter();
    let mut lines = r.lines();
    let head = lines.next().transpose()?.ok_or_else(|| DiagnosticsError::Parse("missing header".into()))?;
    if head.split(d).collect::<Vec<_>>() != header {
        return Err(DiagnosticsError::Parse(format!("unexpected header `{head}`")));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<String> = line.split(d).map(str::to_owned).collect();
        if fields.len() != header.len() {
            return Err(DiagnosticsError::Parse(format!("line {}: expected {} fields", i + 2, header.len())));
        }
        out.push(fields);
    }
    Ok(out)
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T, DiagnosticsError> {
    s.parse().map_err(|_| DiagnosticsError::Parse(format!("bad number `{s}`")))
}

pub fn read_diagnostics_table<R: BufRead>(r: R, format: ReportFormat) -> Result<Vec<DiagnosticsRow>, DiagnosticsError> {
    parse_table(r, format, &ROW_HEADER)?
        .iter()
        .map(|f| {
            Ok(DiagnosticsRow {
                k: num(&f[0])?,
                heldout_llpw: num(&f[1])?,
                residual_dispersion: num(&f[2])?,
                mean_coherence: num(&f[3])?,
                mean_exclusivity: num(&f[4])?,
                wall_time_ms: num(&f[5])?,
            })
        })
        .collect()
}

pub fn read_topic_table<R: BufRead>(r: R, format: ReportFormat) -> Result<Vec<TopicScoreRow>, DiagnosticsError> {
    parse_table(r, format, &TOPIC_HEADER)?
        .iter()
        .map(|f| Ok(TopicScoreRow { k: num(&f[0])?, topic: num(&f[1])?, coherence: num(&f[2])?, exclusivity: num(&f[3])? }))
        .collect()
}

/// Writes `diagnostics.<ext>` (one row per K) and `topic_scores.<ext>` (one
/// row per topic per K) into `dir`, returning both paths.
pub fn emit_report(results: &[SearchResult], dir: &Path, format: ReportFormat) -> Result<(PathBuf, PathBuf), DiagnosticsError> {
    if results.is_empty() {
        return Err(DiagnosticsError::EmptyReport);
    }
    std::fs::create_dir_all(dir)?;
    let rows: Vec<DiagnosticsRow> = results.iter().map(|r| r.row.clone()).collect();
    let topics: Vec<TopicScoreRow> = results
        .iter()
        .flat_map(|r| {
            r.topics.coherence.iter().zip(&r.topics.exclusivity).enumerate().map(move |(t, (&c, &e))| TopicScoreRow {
                k: r.row.k,
                topic: t,
                coherence: c,
                exclusivity: e,
            })
        })
        .collect();
    let rows_path = dir.join(format!("diagnostics.{}", format.extension()));
    let topics_path = dir.join(format!("topic_scores.{}", format.extension()));
    write_diagnostics_table(&rows, format, BufWriter::new(File::create(&rows_path)?))?;
    write_topic_table(&topics, format, BufWriter::new(File::create(&topics_path)?))?;
    Ok((rows_path, topics_path))
}
