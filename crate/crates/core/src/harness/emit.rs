use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{RunRecord, RunTiming};
use crate::error::{Error, Result};
use crate::scenario::write_json;

pub const RESULTS_FORMAT: &str = "secbeam-results";
pub const RESULTS_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
struct ResultsFile {
    format: String,
    version: u64,
    units: serde_json::Value,
    records: Vec<RunRecord>,
}

fn units() -> serde_json::Value {
    serde_json::json!({
        "g1": "bps (negated secrecy capacity)",
        "g2": "linear amplitude ratio",
        "g3": "J",
        "f1_bps": "bps",
        "f2_db": "dB",
        "f3_j": "J",
        "hypervolume": "bps x ratio x J",
    })
}

pub fn write_results_json(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    write_json(
        path.as_ref(),
        &ResultsFile {
            format: RESULTS_FORMAT.into(),
            version: RESULTS_VERSION,
            units: units(),
            records: records.to_vec(),
        },
    )
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<RunRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ResultsFile =
        serde_json::from_str(&text).map_err(|e| Error::MalformedFile(e.to_string()))?;
    if file.format != RESULTS_FORMAT {
        return Err(Error::MalformedFile(format!(
            "not a results file: format '{}'",
            file.format
        )));
    }
    if file.version != RESULTS_VERSION {
        return Err(Error::SchemaVersion {
            format: RESULTS_FORMAT,
            found: file.version,
            expected: RESULTS_VERSION,
        });
    }
    Ok(file.records)
}

/// Wall times and other run metadata, kept apart from the results.
pub fn write_meta(timings: &[RunTiming], path: impl AsRef<Path>) -> Result<()> {
    write_json(path.as_ref(), &serde_json::json!({ "timings": timings }))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::MalformedFile(format!("{}: {other:?}", path.display())),
    }
}

fn finish(path: &Path, mut w: csv::Writer<fs::File>) -> Result<()> {
    w.flush().map_err(|e| Error::io(path, e))
}

/// One row per archive entry of every record.
pub fn write_archive_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let header = [
        "run",
        "algorithm",
        "scenario_seed",
        "entry",
        "selected",
        "g1",
        "g2",
        "g3",
        "f1 [bps]",
        "f2 [dB]",
        "f3 [J]",
    ];
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in records {
        for (k, p) in r.archive.iter().enumerate() {
            let o = p.objectives;
            w.write_record([
                r.index.to_string(),
                r.algorithm.to_string(),
                r.scenario_seed.to_string(),
                k.to_string(),
                u8::from(k == r.selected_index).to_string(),
                o.neg_secrecy.to_string(),
                o.sidelobe.to_string(),
                o.energy.to_string(),
                p.f1_bps.to_string(),
                p.f2_db.to_string(),
                p.f3_j.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(path, w)
}

/// One row per record: the selected solution and the hypervolume.
pub fn write_summary_csv(records: &[RunRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv_writer(path)?;
    let header = [
        "run",
        "algorithm",
        "scenario_seed",
        "iterations",
        "archive_size",
        "f1 [bps]",
        "f2 [dB]",
        "f3 [J]",
        "C_E [bps]",
        "hypervolume",
    ];
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in records {
        w.write_record([
            r.index.to_string(),
            r.algorithm.to_string(),
            r.scenario_seed.to_string(),
            r.trace.len().to_string(),
            r.archive.len().to_string(),
            r.selected.f1_bps.to_string(),
            r.selected.f2_db.to_string(),
            r.selected.f3_j.to_string(),
            r.secrecy.c_e.to_string(),
            r.hypervolume.to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// One convergence file per record with a trace, named
/// `trace-<run>-<algorithm>-<seed>.csv`. Returns the written paths.
pub fn write_trace_csvs(records: &[RunRecord], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut written = Vec::new();
    for r in records.iter().filter(|r| !r.trace.is_empty()) {
        let path = dir.join(format!(
            "trace-{:03}-{}-{}.csv",
            r.index, r.algorithm, r.scenario_seed
        ));
        let mut w = csv_writer(&path)?;
        w.write_record([
            "t",
            "archive_size",
            "best f1 [bps]",
            "best f2 [dB]",
            "best f3 [J]",
        ])
        .map_err(|e| csv_err(&path, e))?;
        for row in &r.trace {
            w.write_record([
                row.t.to_string(),
                row.archive_size.to_string(),
                (-row.best_g1).to_string(),
                crate::beamforming::ratio_to_db(row.best_g2).to_string(),
                row.best_g3.to_string(),
            ])
            .map_err(|e| csv_err(&path, e))?;
        }
        finish(&path, w)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::super::{run_campaign, CampaignConfig};
    use super::*;
    use crate::optimizer::EvolutionConfig;
    use crate::scenario::ScenarioSpec;

    fn records() -> Vec<RunRecord> {
        let cfg = CampaignConfig {
            scenario: ScenarioSpec {
                n_uav: 4,
                ..ScenarioSpec::desk()
            },
            scenario_seeds: vec![8],
            evolution: EvolutionConfig {
                population: 6,
                max_iterations: 3,
                grid: crate::beamforming::AngularGrid::uniform(10.0).refined(2.0, 0.2),
                ..EvolutionConfig::desk()
            },
            ..CampaignConfig::default()
        };
        run_campaign(&cfg, None).unwrap().records
    }

    #[test]
    fn json_round_trip_and_csv_shapes() {
        let recs = records();
        let dir = tempfile::tempdir().unwrap();
        let json = dir.path().join("results.json");
        write_results_json(&recs, &json).unwrap();
        assert_eq!(load_results(&json).unwrap(), recs);

        let csv_path = dir.path().join("archive.csv");
        write_archive_csv(&recs, &csv_path).unwrap();
        let text = fs::read_to_string(&csv_path).unwrap();
        let total: usize = recs.iter().map(|r| r.archive.len()).sum();
        assert_eq!(text.lines().count(), total + 1);
        let header = text.lines().next().unwrap();
        assert!(
            header.contains("f1 [bps]") && header.contains("f2 [dB]") && header.contains("f3 [J]")
        );

        let traces = write_trace_csvs(&recs, dir.path()).unwrap();
        assert_eq!(traces.len(), 2);
        let t = fs::read_to_string(&traces[0]).unwrap();
        assert_eq!(t.lines().count(), recs[0].trace.len() + 1);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.json");
        fs::write(
            &p,
            r#"{"format":"secbeam-results","version":9,"units":{},"records":[]}"#,
        )
        .unwrap();
        assert!(matches!(
            load_results(&p),
            Err(Error::SchemaVersion { found: 9, .. })
        ));
    }
}
