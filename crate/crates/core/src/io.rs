//! File formats: point CSV, grid JSON, trace JSONL, census CSV and summary
//! JSON, quality CSV and summary JSON.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::combinatorics::{CensusMethod, CensusResult};
use crate::error::{GridError, Result};
use crate::grid::{Grid, GridIndex, Point, PointSet};
use crate::iterate::{placement_digest, EnergyValue, SortTrace, StepKind, Strategy};
use crate::quality::{Builder, Metric, QualityReport};

fn io_err(e: impl std::fmt::Display) -> GridError {
    GridError::Io(e.to_string())
}

fn csv_err(e: csv::Error) -> GridError {
    match e.position() {
        Some(pos) => GridError::Parse {
            line: pos.line(),
            message: e.to_string(),
        },
        None => io_err(e),
    }
}

/// Reads comma-separated points with a header row. A column named `id`
/// (any case) supplies ids; otherwise ids follow row order. Every other
/// column is a coordinate axis.
pub fn read_points_csv<R: Read>(reader: R) -> Result<PointSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    if headers.is_empty() || headers.iter().all(str::is_empty) {
        return Err(GridError::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    let id_col = headers.iter().position(|h| h.eq_ignore_ascii_case("id"));
    let d = headers.len() - usize::from(id_col.is_some());
    let mut points = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(row as u64 + 2, |p| p.line());
        let parse_err = |message: String| GridError::Parse { line, message };
        let mut id = row + 1;
        let mut coords = Vec::with_capacity(d);
        for (col, field) in record.iter().enumerate() {
            if Some(col) == id_col {
                id = field
                    .parse()
                    .map_err(|_| parse_err(format!("bad id {field:?}")))?;
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(format!("bad number {field:?} in column {}", col + 1)))?;
                if !v.is_finite() {
                    return Err(parse_err(format!("non-finite value {field:?}")));
                }
                coords.push(v);
            }
        }
        points.push(Point::new(id, coords));
    }
    PointSet::new(d, points)
}

fn axis_names(d: usize) -> Vec<String> {
    match d {
        2 => vec!["x".into(), "y".into()],
        3 => vec!["x".into(), "y".into(), "z".into()],
        _ => (1..=d).map(|k| format!("x{k}")).collect(),
    }
}

pub fn write_points_csv<W: Write>(ps: &PointSet, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["id".to_string()];
    header.extend(axis_names(ps.dim()));
    wtr.write_record(&header).map_err(csv_err)?;
    for p in ps.points() {
        let mut row = vec![p.id.to_string()];
        row.extend(p.coords.iter().map(|v| v.to_string()));
        wtr.write_record(&row).map_err(csv_err)?;
    }
    wtr.flush().map_err(io_err)
}

pub const GRID_CONVENTION: &str =
    "cell = [c1, ..., cd], 1-based; c1 is the column, c2 the row counted from the bottom; cells listed with c1 varying fastest";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub cell: Vec<usize>,
    pub id: usize,
    pub coords: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDoc {
    pub convention: String,
    pub n: usize,
    pub d: usize,
    pub cells: Vec<CellEntry>,
    pub padding_ids: Vec<usize>,
}

impl GridDoc {
    pub fn from_grid(g: &Grid) -> Self {
        let cells = (0..g.cell_count())
            .map(|lin| {
                let p = g.point_at_linear(lin);
                CellEntry {
                    cell: g.index_of(lin).0,
                    id: p.id,
                    coords: p.coords.clone(),
                }
            })
            .collect();
        Self {
            convention: GRID_CONVENTION.into(),
            n: g.n(),
            d: g.dim(),
            cells,
            padding_ids: g.padding_ids(),
        }
    }

    /// Rebuilds the grid, checking that cells and ids each appear once.
    pub fn to_grid(&self) -> Result<Grid> {
        let total = self
            .n
            .checked_pow(self.d as u32)
            .ok_or_else(|| GridError::InvalidArgument("grid too large".into()))?;
        if self.cells.len() != total {
            return Err(GridError::NotBijective(format!(
                "{} cell entries for {total} cells",
                self.cells.len()
            )));
        }
        let mut points = Vec::with_capacity(total);
        let mut placed: Vec<Option<usize>> = vec![None; total];
        for entry in &self.cells {
            if entry.cell.len() != self.d || entry.cell.iter().any(|&c| c == 0 || c > self.n) {
                return Err(GridError::CellOutOfRange(entry.cell.clone()));
            }
            let lin = entry
                .cell
                .iter()
                .rev()
                .fold(0, |acc, &c| acc * self.n + (c - 1));
            if placed[lin].replace(entry.id).is_some() {
                return Err(GridError::NotBijective(format!(
                    "cell {} listed twice",
                    GridIndex(entry.cell.clone())
                )));
            }
            points.push(Point::new(entry.id, entry.coords.clone()));
        }
        let ps = PointSet::new(self.d, points)?;
        let cell_ids = placed.into_iter().map(|id| id.expect("all cells filled")).collect();
        Grid::from_cell_ids(ps, self.n, cell_ids, &self.padding_ids)
    }
}

pub fn write_grid_json<W: Write>(g: &Grid, writer: W) -> Result<()> {
    serde_json::to_writer_pretty(writer, &GridDoc::from_grid(g)).map_err(io_err)
}

pub fn read_grid_json<R: Read>(reader: R) -> Result<Grid> {
    let doc: GridDoc = serde_json::from_reader(reader).map_err(|e| GridError::Parse {
        line: e.line() as u64,
        message: e.to_string(),
    })?;
    doc.to_grid()
}

/// One line of a trace file.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum TraceLine {
    Start {
        strategy: Strategy,
        n: usize,
        energy: EnergyValue,
        digest: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        snapshot: Option<Vec<usize>>,
    },
    Step {
        step: usize,
        kind: StepKind,
        energy: EnergyValue,
        changed: bool,
        digest: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        snapshot: Option<Vec<usize>>,
    },
    End {
        converged: bool,
        step_count: usize,
        final_energy: EnergyValue,
    },
}

/// Start line, one line per phase, end line. Snapshots are cell-to-id
/// vectors in the grid JSON cell order.
pub fn write_trace_jsonl<W: Write>(start: &Grid, trace: &SortTrace, mut writer: W) -> Result<()> {
    let snapshots = trace.steps.first().is_some_and(|s| s.snapshot.is_some());
    let mut lines = vec![TraceLine::Start {
        strategy: trace.strategy,
        n: start.n(),
        energy: trace.initial_energy,
        digest: placement_digest(start),
        snapshot: snapshots.then(|| start.placement().cell_ids().to_vec()),
    }];
    lines.extend(trace.steps.iter().map(|s| TraceLine::Step {
        step: s.step,
        kind: s.kind,
        energy: s.energy,
        changed: s.changed,
        digest: s.digest.clone(),
        snapshot: s.snapshot.clone(),
    }));
    lines.push(TraceLine::End {
        converged: trace.converged,
        step_count: trace.step_count,
        final_energy: trace.energies().last().unwrap_or(trace.initial_energy),
    });
    for line in &lines {
        serde_json::to_writer(&mut writer, line).map_err(io_err)?;
        writeln!(writer).map_err(io_err)?;
    }
    writer.flush().map_err(io_err)
}

/// Parses trace lines back as untyped JSON values, one per line.
pub fn read_trace_jsonl<R: BufRead>(reader: R) -> Result<Vec<serde_json::Value>> {
    reader
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()))
        .map(|(i, line)| {
            let line = line.map_err(io_err)?;
            serde_json::from_str(&line).map_err(|e| GridError::Parse {
                line: i as u64 + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

#[derive(Serialize)]
struct CensusRow {
    config_perm: String,
    stable_count: usize,
    unique: bool,
    x_bin: bool,
    y_bin: bool,
    submatrix_ok: bool,
}

pub fn write_census_csv<W: Write>(result: &CensusResult, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in &result.records {
        wtr.serialize(CensusRow {
            config_perm: r.config.to_string(),
            stable_count: r.stable_count,
            unique: r.unique,
            x_bin: r.x_bin,
            y_bin: r.y_bin,
            submatrix_ok: r.submatrix_ok,
        })
        .map_err(csv_err)?;
    }
    if result.records.is_empty() {
        wtr.write_record(["config_perm", "stable_count", "unique", "x_bin", "y_bin", "submatrix_ok"])
            .map_err(csv_err)?;
    }
    wtr.flush().map_err(io_err)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusSummary {
    pub n: usize,
    pub method: CensusMethod,
    pub configs_examined: u64,
    pub unique_count: u64,
    pub max_stable_states: usize,
    pub argmax_perm: Vec<usize>,
    pub min_stable_states: usize,
    pub argmin_perm: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub published_candidates: Option<u64>,
    pub runtime_seconds: f64,
}

impl From<&CensusResult> for CensusSummary {
    fn from(r: &CensusResult) -> Self {
        Self {
            n: r.n,
            method: r.method,
            configs_examined: r.configs_examined,
            unique_count: r.unique_count,
            max_stable_states: r.max_stable_states,
            argmax_perm: r.argmax.perm().to_vec(),
            min_stable_states: r.min_stable_states,
            argmin_perm: r.argmin.perm().to_vec(),
            published_candidates: r.published_candidates,
            runtime_seconds: r.runtime_seconds,
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(value: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value).map_err(io_err)?;
    writeln!(writer).map_err(io_err)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QualitySummary {
    pub n: usize,
    pub d: usize,
    pub point_count: usize,
    pub ring_radius: usize,
    pub metric: Metric,
    pub builder: Option<Builder>,
    pub hit_rate: f64,
    pub one_ring_hit_rate: f64,
    pub mean_ring_distance: f64,
    pub max_ring_distance: usize,
}

impl From<&QualityReport> for QualitySummary {
    fn from(r: &QualityReport) -> Self {
        Self {
            n: r.n,
            d: r.d,
            point_count: r.point_count,
            ring_radius: r.ring_radius,
            metric: r.metric,
            builder: r.builder,
            hit_rate: r.hit_rate,
            one_ring_hit_rate: r.one_ring_hit_rate,
            mean_ring_distance: r.mean_ring_distance,
            max_ring_distance: r.max_ring_distance,
        }
    }
}

/// `id,estimated_id,true_id,est_dist,true_dist,ring_distance`; missing
/// estimates are left empty.
pub fn write_quality_csv<W: Write>(report: &QualityReport, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["id", "estimated_id", "true_id", "est_dist", "true_dist", "ring_distance"])
        .map_err(csv_err)?;
    for r in &report.records {
        wtr.write_record([
            r.query_id.to_string(),
            r.estimated_id.map(|v| v.to_string()).unwrap_or_default(),
            r.true_id.to_string(),
            r.estimated_distance.map(|v| v.to_string()).unwrap_or_default(),
            r.true_distance.to_string(),
            r.ring_distance_to_true.to_string(),
        ])
        .map_err(csv_err)?;
    }
    wtr.flush().map_err(io_err)
}
