use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::analyze::analyze_with;
use super::{enrich, Alignment, EngineConfig, Enricher, FactorSet, PortfolioSlice, SliceReport};
use crate::error::{Error, Result};
use crate::portfolio::RawSlice;

/// Streaming engine: push slices in order, get one report per slice.
#[derive(Debug, Clone)]
pub struct Engine {
    config: EngineConfig,
    enricher: Enricher,
    set: FactorSet,
    last_slice: Option<u32>,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        if config.alignment != Alignment::Online {
            return Err(Error::Config("the streaming engine needs online alignment".into()));
        }
        Ok(Engine {
            enricher: Enricher::new(&config)?,
            config,
            set: FactorSet::new(),
            last_slice: None,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn push(&mut self, raw: &RawSlice) -> Result<SliceReport> {
        if self.last_slice.is_some_and(|s| raw.slice <= s) {
            return Err(Error::Domain(format!(
                "slice {} pushed after slice {}",
                raw.slice,
                self.last_slice.unwrap_or_default()
            )));
        }
        self.last_slice = Some(raw.slice);
        let enriched = self.enricher.push(raw)?;
        analyze_with(&enriched, &self.config, &self.set)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunSummary {
    pub slices: usize,
    pub analyzed: usize,
    pub skipped: usize,
    pub out_dir: PathBuf,
}

fn fmt_threshold(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else if v > 0.0 {
        "+inf".into()
    } else {
        "-inf".into()
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn write_factors(slices: &[PortfolioSlice], path: &Path) -> Result<()> {
    let set = FactorSet::new();
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["slice".to_string(), "order".into(), "scored".into()];
    header.extend(set.factors().iter().map(|f| f.name()));
    header.push("pe".into());
    w.write_record(&header).map_err(csv_err)?;
    for s in slices {
        for (row, values) in s.factors.iter().enumerate() {
            let mut rec = vec![
                s.slice.to_string(),
                s.orders[row].to_string(),
                s.scored[row].to_string(),
            ];
            rec.extend(values.iter().map(|v| v.to_string()));
            rec.push(s.pe[row].to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_heatmap(reports: &[SliceReport], set: &FactorSet, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    let mut header = vec!["group".to_string()];
    header.extend(reports.iter().map(|r| r.slice.to_string()));
    w.write_record(&header).map_err(csv_err)?;
    let columns: Vec<Option<Vec<f64>>> = reports.iter().map(SliceReport::influences).collect();
    for g in 0..set.group_count() {
        let mut rec = vec![set.group_label(g).expect("group in range")];
        rec.extend(columns.iter().map(|c| match c {
            Some(values) => values[g].to_string(),
            None => String::new(),
        }));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_alarm_zones(reports: &[SliceReport], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["slice", "factor", "theta_minus", "theta_plus", "triggered_orders"])
        .map_err(csv_err)?;
    for z in reports.iter().flat_map(|r| &r.alarm_zones) {
        let triggered: Vec<String> = z.triggered.iter().map(|o| o.to_string()).collect();
        w.write_record([
            z.slice.to_string(),
            z.factor.clone(),
            fmt_threshold(z.theta_minus),
            fmt_threshold(z.theta_plus),
            triggered.join(";"),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn write_report(report: &SliceReport, dir: &Path) -> Result<()> {
    let file = File::create(dir.join(format!("report_{}.json", report.slice)))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Full run over a portfolio: per-slice reports, the influence heatmap and
/// the alarm-zone table, plus the enriched factors when asked.
pub fn run_analysis(
    slices: &[RawSlice],
    config: &EngineConfig,
    out_dir: &Path,
    dump_factors: bool,
) -> Result<(Vec<SliceReport>, RunSummary)> {
    config.validate()?;
    fs::create_dir_all(out_dir)?;
    let set = FactorSet::new();
    let enriched = enrich(slices, config)?;
    let mut reports = Vec::with_capacity(enriched.len());
    for s in &enriched {
        let report = analyze_with(s, config, &set)?;
        write_report(&report, out_dir)?;
        reports.push(report);
    }
    write_heatmap(&reports, &set, &out_dir.join("influence_heatmap.csv"))?;
    write_alarm_zones(&reports, &out_dir.join("alarm_zones.csv"))?;
    if dump_factors {
        write_factors(&enriched, &out_dir.join("factors.csv"))?;
    }
    let skipped = reports.iter().filter(|r| r.is_skipped()).count();
    let summary = RunSummary {
        slices: reports.len(),
        analyzed: reports.len() - skipped,
        skipped,
        out_dir: out_dir.to_path_buf(),
    };
    Ok((reports, summary))
}

/// Reads every `report_<t>.json` in `dir`, ordered by slice.
pub fn read_reports(dir: &Path) -> Result<Vec<SliceReport>> {
    let mut reports = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if name.starts_with("report_") && name.ends_with(".json") {
            let report: SliceReport = serde_json::from_reader(std::io::BufReader::new(File::open(&path)?))?;
            reports.push(report);
        }
    }
    reports.sort_by_key(|r| r.slice);
    Ok(reports)
}
