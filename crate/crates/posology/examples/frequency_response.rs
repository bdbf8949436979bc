//! Frequency-response analysis of a behavior: how often is too often?
//!
//! Sweeps the repetition frequency of a unit-potency behavior (EC50_b =
//! 12.4, everything else at defaults) and integrates total utility per
//! frequency. The curve is hormetic: utility peaks near f ≈ 0.015 min⁻¹
//! (about once per hour) and crosses zero near f ≈ 0.027 min⁻¹ — the
//! repetition rate beyond which the behavior does net harm.
//!
//! Run with: `cargo run --release --example frequency_response`

use std::fs;

use posology::plot::{line_chart, Series};
use posology::{bfra, summarize, BfraSettings, ModelParams, ParamField, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::default().with(ParamField::Ec50B, 12.4);
    let settings = BfraSettings {
        potency: 1.0,
        freq_step: 0.0002,
        freq_max: 0.06,
        burst_addl: None,
    };
    let config = SimConfig::default();

    let curve = bfra(&params, &settings, &config)?;
    let summary = summarize(&curve)?;

    println!("shape:        {}", summary.shape);
    println!(
        "apex:         f = {:.5} min⁻¹, TU = {:.1} hedons",
        summary.apex_x, summary.apex_tu
    );
    if let Some(noael) = summary.noael_x {
        println!("limit:        f = {noael:.5} min⁻¹ (zero crossing)");
    }
    println!(
        "one dose:     MU_initial = {:.2} hedons",
        summary.mu_initial
    );

    // The analytic steady-state column (valid because k_apd = k_bpd = 1),
    // scaled by the horizon for comparison against the integrals. The
    // simulated curve sits slightly above it: the bounded horizon cuts off
    // more of the slow b-process than the fast a-process.
    let analytic = curve.h_steady_state.as_ref().expect("unit PD clearances");
    let scaled: Vec<f64> = analytic.iter().map(|h| h * config.t_sim).collect();

    fs::create_dir_all("out")?;
    let mut csv = String::from("frequency,tu_simulated,h_steady_state,tu_steady_state\n");
    for (((x, tu), h), s) in curve
        .x_values
        .iter()
        .zip(&curve.tu_simulated)
        .zip(analytic)
        .zip(&scaled)
    {
        csv.push_str(&format!("{x},{tu},{h},{s}\n"));
    }
    fs::write("out/frequency_response.csv", csv)?;

    let svg = line_chart(
        "Total utility vs behavioral frequency",
        "frequency [1/min]",
        "total utility [hedons]",
        &[
            Series {
                label: "simulated TU",
                x: &curve.x_values,
                y: &curve.tu_simulated,
            },
            Series {
                label: "steady state × t_sim",
                x: &curve.x_values,
                y: &scaled,
            },
        ],
    );
    fs::write("out/frequency_response.svg", svg)?;
    println!("wrote out/frequency_response.csv and out/frequency_response.svg");
    Ok(())
}
