//! Pairwise parameter sweeps over the behavioral value space.
//!
//! Each grid cell perturbs two model parameters, runs the configured
//! response analysis, and records the utility apex and curve shape. Apex
//! values are normalized map-wide to [0, 1] with negative apexes clamped to
//! zero first: a behavior whose best case is harmful has no redeeming
//! intensity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::analysis::{
    bcra, bfra, summarize, AnalysisKind, BcraSettings, BfraSettings, CurveShape, ResponseCurve,
};
use crate::error::{Error, Result};
use crate::params::{ModelParams, ParamField, SimConfig};

/// One swept axis: `cells` evenly spaced values on `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub field: ParamField,
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.cells;
        (0..n)
            .map(|i| {
                if n == 1 {
                    self.min
                } else {
                    self.min + (self.max - self.min) * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }
}

/// Which analysis runs in every cell, with its grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AnalysisSettings {
    Bfra(BfraSettings),
    Bcra(BcraSettings),
}

impl AnalysisSettings {
    pub fn kind(&self) -> AnalysisKind {
        match self {
            AnalysisSettings::Bfra(_) => AnalysisKind::Bfra,
            AnalysisSettings::Bcra(_) => AnalysisKind::Bcra,
        }
    }

    pub fn run(&self, params: &ModelParams, config: &SimConfig) -> Result<ResponseCurve> {
        match self {
            AnalysisSettings::Bfra(s) => bfra(params, s, config),
            AnalysisSettings::Bcra(s) => bcra(params, s, config),
        }
    }
}

/// A pairwise sweep specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub base: ModelParams,
    pub analysis: AnalysisSettings,
    pub config: SimConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.x.field == self.y.field {
            return Err(Error::invalid(format!(
                "sweep axes must differ, both are {}",
                self.x.field
            )));
        }
        for axis in [&self.x, &self.y] {
            if axis.cells < 2 {
                return Err(Error::invalid(format!(
                    "{} axis needs at least 2 cells, got {}",
                    axis.field, axis.cells
                )));
            }
            if !axis.min.is_finite() || !axis.max.is_finite() || axis.min > axis.max {
                return Err(Error::invalid(format!(
                    "{} axis range [{}, {}] is invalid",
                    axis.field, axis.min, axis.max
                )));
            }
            for v in axis.values() {
                self.base.with(axis.field, v).validate().map_err(|e| {
                    Error::invalid(format!(
                        "{} = {v} violates parameter invariants: {e}",
                        axis.field
                    ))
                })?;
            }
        }
        self.config.validate()
    }
}

/// Analysis outcome of one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAnalysis {
    pub tu_apex: f64,
    pub shape: CurveShape,
    pub noael_x: Option<f64>,
    /// Zero crossing of the analytic steady-state column, when that column
    /// exists and crosses.
    pub analytic_noael_x: Option<f64>,
}

/// One cell of the value-space map. Per-cell failures are recorded here
/// rather than aborting the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub x_value: f64,
    pub y_value: f64,
    pub analysis: std::result::Result<CellAnalysis, String>,
}

/// The completed map: cells in row-major order (y outer, x inner) plus the
/// map-wide normalized apex per cell.
#[derive(Debug, Clone)]
pub struct ValueSpaceMap {
    pub spec: SweepSpec,
    pub cells: Vec<CellRecord>,
    pub normalized: Vec<Option<f64>>,
}

impl ValueSpaceMap {
    pub fn x_values(&self) -> Vec<f64> {
        self.spec.x.values()
    }

    pub fn y_values(&self) -> Vec<f64> {
        self.spec.y.values()
    }

    pub fn cell(&self, ix: usize, iy: usize) -> &CellRecord {
        &self.cells[iy * self.spec.x.cells + ix]
    }

    pub fn normalized_at(&self, ix: usize, iy: usize) -> Option<f64> {
        self.normalized[iy * self.spec.x.cells + ix]
    }

    /// Writes the map as CSV: one row per cell.
    pub fn write_csv<W: Write>(&self, mut w: W, mark_unsafe: bool) -> std::io::Result<()> {
        write!(
            w,
            "{},{},tu_apex_raw,tu_apex_norm,shape,noael",
            self.spec.x.field, self.spec.y.field
        )?;
        if mark_unsafe {
            writeln!(w, ",unsafe")?;
        } else {
            writeln!(w)?;
        }
        for (cell, norm) in self.cells.iter().zip(&self.normalized) {
            write!(w, "{},{}", cell.x_value, cell.y_value)?;
            match &cell.analysis {
                Ok(a) => {
                    write!(w, ",{}", a.tu_apex)?;
                    match norm {
                        Some(n) => write!(w, ",{n}")?,
                        None => write!(w, ",")?,
                    }
                    write!(w, ",{}", a.shape)?;
                    match a.noael_x {
                        Some(n) => write!(w, ",{n}")?,
                        None => write!(w, ",")?,
                    }
                    if mark_unsafe {
                        write!(w, ",{}", if a.shape.is_safe() { "no" } else { "yes" })?;
                    }
                }
                Err(e) => {
                    write!(w, ",,,error: {},", e.replace(',', ";"))?;
                    if mark_unsafe {
                        write!(w, ",yes")?;
                    }
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Runs the configured analysis in every grid cell. Cells are independent
/// and evaluated in parallel; assembly order is fixed by the grid, so the
/// result is a pure function of the spec.
pub fn sweep(spec: &SweepSpec) -> Result<ValueSpaceMap> {
    spec.validate()?;
    let xs = spec.x.values();
    let ys = spec.y.values();

    let mut coords = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            coords.push((x, y));
        }
    }

    let cells: Vec<CellRecord> = coords
        .par_iter()
        .map(|&(x, y)| {
            let params = spec.base.with(spec.x.field, x).with(spec.y.field, y);
            let analysis = run_cell(&params, spec).map_err(|e| e.to_string());
            CellRecord {
                x_value: x,
                y_value: y,
                analysis,
            }
        })
        .collect();

    let normalized = normalize_apexes(&cells);
    Ok(ValueSpaceMap {
        spec: spec.clone(),
        cells,
        normalized,
    })
}

fn run_cell(params: &ModelParams, spec: &SweepSpec) -> Result<CellAnalysis> {
    let curve = spec.analysis.run(params, &spec.config)?;
    let summary = summarize(&curve)?;
    Ok(CellAnalysis {
        tu_apex: summary.apex_tu,
        shape: summary.shape,
        noael_x: summary.noael_x,
        analytic_noael_x: analytic_crossing(&curve),
    })
}

/// First positive-to-negative zero crossing of the analytic steady-state
/// column, interpolated linearly on the curve's own grid.
pub fn analytic_crossing(curve: &ResponseCurve) -> Option<f64> {
    let ana = curve.h_steady_state.as_ref()?;
    let xs = &curve.x_values;
    for j in 0..ana.len().saturating_sub(1) {
        let (a, b) = (ana[j], ana[j + 1]);
        if a > 0.0 && b <= 0.0 {
            return Some(xs[j] + (xs[j + 1] - xs[j]) * a / (a - b));
        }
    }
    None
}

/// Negative apexes clamp to zero, then the map rescales to [0, 1]; a
/// constant map normalizes to all zeros. Failed cells carry no value.
fn normalize_apexes(cells: &[CellRecord]) -> Vec<Option<f64>> {
    let clamped: Vec<Option<f64>> = cells
        .iter()
        .map(|c| c.analysis.as_ref().ok().map(|a| a.tu_apex.max(0.0)))
        .collect();
    let present: Vec<f64> = clamped.iter().filter_map(|v| *v).collect();
    if present.is_empty() {
        return clamped;
    }
    let min = present.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = present.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    clamped
        .into_iter()
        .map(|v| v.map(|v| if span > 0.0 { (v - min) / span } else { 0.0 }))
        .collect()
}

/// Every cell whose curve shape carries no usable hormetic ceiling: these
/// regions of value space must be excluded from action selection.
pub fn flag_unsafe(map: &ValueSpaceMap) -> Vec<&CellRecord> {
    map.cells
        .iter()
        .filter(|c| match &c.analysis {
            Ok(a) => !a.shape.is_safe(),
            Err(_) => false,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_spec() -> SweepSpec {
        SweepSpec {
            x: AxisSpec {
                field: ParamField::KH,
                min: 0.5,
                max: 1.5,
                cells: 2,
            },
            y: AxisSpec {
                field: ParamField::Ec50B,
                min: 9.0,
                max: 13.0,
                cells: 2,
            },
            base: ModelParams::default(),
            analysis: AnalysisSettings::Bfra(BfraSettings {
                freq_step: 0.002,
                freq_max: 0.03,
                ..Default::default()
            }),
            config: SimConfig {
                t_sim: 2000.0,
                ..Default::default()
            },
        }
    }

    #[test]
    fn rejects_identical_axes_and_degenerate_cells() {
        let mut spec = quick_spec();
        spec.y.field = ParamField::KH;
        assert!(spec.validate().is_err());
        let mut spec = quick_spec();
        spec.x.cells = 1;
        assert!(spec.validate().is_err());
        let mut spec = quick_spec();
        spec.x.min = -1.0; // k_h must stay positive
        assert!(spec.validate().is_err());
    }

    #[test]
    fn larger_ec50_b_never_lowers_the_apex() {
        let map = sweep(&quick_spec()).unwrap();
        for ix in 0..2 {
            let weak_b = map.cell(ix, 1).analysis.as_ref().unwrap();
            let strong_b = map.cell(ix, 0).analysis.as_ref().unwrap();
            assert!(
                weak_b.tu_apex >= strong_b.tu_apex,
                "ec50_b=13 apex {} < ec50_b=9 apex {}",
                weak_b.tu_apex,
                strong_b.tu_apex
            );
        }
    }

    #[test]
    fn constant_map_normalizes_to_zero() {
        let mut spec = quick_spec();
        spec.x.max = spec.x.min;
        spec.y.max = spec.y.min;
        let map = sweep(&spec).unwrap();
        assert!(map.normalized.iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn no_positive_utility_cell_is_flagged_and_normalized_to_zero() {
        let mut spec = quick_spec();
        spec.x = AxisSpec {
            field: ParamField::EmaxA,
            min: 0.0,
            max: 1.0,
            cells: 2,
        };
        let map = sweep(&spec).unwrap();
        for iy in 0..2 {
            let cell = map.cell(0, iy).analysis.as_ref().unwrap();
            assert_eq!(cell.shape, CurveShape::MonotonicallyNegative);
            assert_eq!(map.normalized_at(0, iy), Some(0.0));
        }
        let unsafe_cells = flag_unsafe(&map);
        assert!(unsafe_cells.len() >= 2);
    }

    #[test]
    fn all_hormetic_map_flags_nothing() {
        let mut spec = quick_spec();
        // A frequency window where both cells stay hormetic.
        spec.x = AxisSpec {
            field: ParamField::KH,
            min: 0.8,
            max: 1.2,
            cells: 2,
        };
        spec.y = AxisSpec {
            field: ParamField::Ec50B,
            min: 9.0,
            max: 10.0,
            cells: 2,
        };
        spec.analysis = AnalysisSettings::Bfra(BfraSettings {
            freq_step: 0.002,
            freq_max: 0.04,
            ..Default::default()
        });
        let map = sweep(&spec).unwrap();
        for cell in &map.cells {
            assert_eq!(cell.analysis.as_ref().unwrap().shape, CurveShape::Hormetic);
        }
        assert!(flag_unsafe(&map).is_empty());
    }

    #[test]
    fn sweep_is_deterministic() {
        let spec = quick_spec();
        let a = sweep(&spec).unwrap();
        let b = sweep(&spec).unwrap();
        for (ca, cb) in a.cells.iter().zip(&b.cells) {
            assert_eq!(ca, cb);
        }
    }

    #[test]
    fn scaling_k_h_rescales_steady_state_and_keeps_crossing() {
        // The analytic column scales by 1/k_h pointwise, so its zero
        // crossing cannot move.
        let p = ModelParams::default().with(ParamField::Ec50B, 12.4);
        let settings = BfraSettings {
            freq_step: 0.001,
            freq_max: 0.04,
            ..Default::default()
        };
        let cfg = SimConfig {
            t_sim: 1000.0,
            ..Default::default()
        };
        let base = bfra(&p, &settings, &cfg).unwrap();
        let scaled = bfra(&p.with(ParamField::KH, 2.0), &settings, &cfg).unwrap();
        let ha = base.h_steady_state.as_ref().unwrap();
        let hb = scaled.h_steady_state.as_ref().unwrap();
        for (a, b) in ha.iter().zip(hb) {
            assert!((a - 2.0 * b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let ca = analytic_crossing(&base).unwrap();
        let cb = analytic_crossing(&scaled).unwrap();
        assert!((ca - cb).abs() < 1e-9 * ca, "crossings {ca} vs {cb}");
    }

    #[test]
    fn csv_has_one_row_per_cell() {
        let map = sweep(&quick_spec()).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf, true).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("k_h,ec50_b,"));
        assert!(lines[0].ends_with(",unsafe"));
    }
}
