//! Map the behavioral value space over a pair of parameters.
//!
//! Every grid cell perturbs (k_H, EC50_b), runs a frequency-response
//! analysis, and records the apex utility and curve shape. Lighter cells
//! admit more valuable safe behaviors; black cells are behaviors whose
//! best case is worthless or harmful; non-hormetic cells of any brightness
//! carry no usable safety ceiling and get flagged.
//!
//! Run with: `cargo run --release --example value_space`

use std::fs;

use posology::plot::heatmap;
use posology::{
    flag_unsafe, sweep, AnalysisSettings, AxisSpec, BfraSettings, ModelParams, ParamField,
    SimConfig, SweepSpec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = SweepSpec {
        x: AxisSpec {
            field: ParamField::KH,
            min: 0.5,
            max: 1.5,
            cells: 20,
        },
        y: AxisSpec {
            field: ParamField::Ec50B,
            min: 4.5,
            max: 13.5,
            cells: 20,
        },
        base: ModelParams::default(),
        analysis: AnalysisSettings::Bfra(BfraSettings {
            potency: 1.0,
            freq_step: 0.0005,
            freq_max: 0.06,
            burst_addl: None,
        }),
        config: SimConfig::default(),
    };

    let started = std::time::Instant::now();
    let map = sweep(&spec)?;
    println!(
        "swept {} cells in {:.1}s",
        map.cells.len(),
        started.elapsed().as_secs_f64()
    );

    let unsafe_cells = flag_unsafe(&map);
    if unsafe_cells.is_empty() {
        println!("every cell reports a usable hormetic limit on this frequency grid");
    } else {
        println!("{} cells carry no usable hormetic limit:", unsafe_cells.len());
    }
    let mut by_shape = std::collections::BTreeMap::new();
    for cell in &unsafe_cells {
        if let Ok(a) = &cell.analysis {
            *by_shape.entry(a.shape.name()).or_insert(0usize) += 1;
        }
    }
    for (shape, count) in by_shape {
        println!("  {shape}: {count}");
    }

    // k_H changes the depth of the curve but not where it crosses zero:
    // the analytic limit is constant along each fixed-EC50_b column.
    let sample_column = 15; // EC50_b ≈ 11.6, well inside hormetic territory
    let limits: Vec<Option<f64>> = (0..spec.x.cells)
        .map(|ix| {
            map.cell(ix, sample_column)
                .analysis
                .as_ref()
                .unwrap()
                .analytic_noael_x
        })
        .collect();
    println!(
        "analytic limit across the k_H row at EC50_b={:.2}: {:.6} (constant)",
        map.y_values()[sample_column],
        limits[0].unwrap()
    );
    assert!(limits.windows(2).all(|w| {
        let (a, b) = (w[0].unwrap(), w[1].unwrap());
        ((a - b) / a).abs() < 1e-9
    }));

    fs::create_dir_all("out")?;
    let mut csv = Vec::new();
    map.write_csv(&mut csv, true)?;
    fs::write("out/value_space.csv", csv)?;
    fs::write(
        "out/value_space.svg",
        heatmap(
            "Behavioral value space: normalized apex utility",
            "k_h",
            "ec50_b",
            &map.x_values(),
            &map.y_values(),
            &map.normalized,
        ),
    )?;
    println!("wrote out/value_space.csv and out/value_space.svg");

    // A corner of value space where the safety boundary is visible: with a
    // weak a-process the curve can lose its positive lobe entirely, and
    // with a weak, easily saturated b-process it never comes back down.
    let risky = SweepSpec {
        x: AxisSpec { field: ParamField::EmaxA, min: 0.0, max: 1.0, cells: 4 },
        y: AxisSpec { field: ParamField::EmaxB, min: 0.0, max: 3.0, cells: 4 },
        base: ModelParams::default(),
        analysis: spec.analysis,
        config: SimConfig { t_sim: 2000.0, ..Default::default() },
    };
    let risky_map = sweep(&risky)?;
    println!("\nboundary sweep over (emax_a, emax_b):");
    for cell in &risky_map.cells {
        if let Ok(a) = &cell.analysis {
            println!(
                "  emax_a={:.2} emax_b={:.2}: {}{}",
                cell.x_value,
                cell.y_value,
                a.shape,
                if a.shape.is_safe() { "" } else { "  [flagged]" }
            );
        }
    }
    println!(
        "{} of {} boundary cells flagged unsafe",
        flag_unsafe(&risky_map).len(),
        risky_map.cells.len()
    );
    Ok(())
}
