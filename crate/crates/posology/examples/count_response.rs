//! Count-response analysis of a behavioral burst: how many is too many?
//!
//! Fixes the repetition interval at 50 minutes and sweeps the number of
//! doses in a single burst (EC50_b = 9.2, everything else at defaults).
//! Utility peaks near n = 5 and crosses zero near n = 12: a batch of a
//! dozen repetitions already does net harm, however they are justified
//! individually.
//!
//! Run with: `cargo run --release --example count_response`

use std::fs;

use posology::plot::{line_chart, Series};
use posology::{bcra, mu_initial, summarize, BcraSettings, ModelParams, ParamField, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::default().with(ParamField::Ec50B, 9.2);
    let settings = BcraSettings {
        potency: 1.0,
        interdose_interval: 50.0,
        count_max: 30,
    };
    let config = SimConfig::default();

    let curve = bcra(&params, &settings, &config)?;
    let summary = summarize(&curve)?;

    println!("shape: {}", summary.shape);
    println!(
        "apex:  n = {:.2}, TU = {:.1} hedons",
        summary.apex_x, summary.apex_tu
    );
    if let Some(noael) = summary.noael_x {
        println!("limit: n = {noael:.2} (zero crossing)");
    }

    // The n = 1 point is, by construction, the utility of a single
    // isolated dose — the behavior's initial marginal utility.
    let mu = mu_initial(&params, settings.potency, &config)?;
    assert_eq!(curve.tu_simulated[1], mu);
    println!("marginal utility of the first dose: {mu:.2} hedons");
    println!(
        "marginal utility of dose 6:         {:.2} hedons",
        curve.tu_simulated[6] - curve.tu_simulated[5]
    );
    println!(
        "marginal utility of dose 13:        {:.2} hedons",
        curve.tu_simulated[13] - curve.tu_simulated[12]
    );

    fs::create_dir_all("out")?;
    let mut csv = String::from("count,tu_simulated\n");
    for (x, tu) in curve.x_values.iter().zip(&curve.tu_simulated) {
        csv.push_str(&format!("{x},{tu}\n"));
    }
    fs::write("out/count_response.csv", csv)?;

    let svg = line_chart(
        "Total utility vs dose count (interval 50 min)",
        "dose count",
        "total utility [hedons]",
        &[Series {
            label: "simulated TU",
            x: &curve.x_values,
            y: &curve.tu_simulated,
        }],
    );
    fs::write("out/count_response.svg", svg)?;
    println!("wrote out/count_response.csv and out/count_response.svg");
    Ok(())
}
