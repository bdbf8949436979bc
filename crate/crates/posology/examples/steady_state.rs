//! The closed-form steady state, checked against the integrator.
//!
//! For sustained dosing at frequency f the hedonic compartment settles at
//! a level given in closed form by the equilibrium balance of the
//! compartments (valid for unit pharmacodynamic clearances). Driving the
//! simulator with the same average inflow — one constant-rate infusion —
//! reproduces that level to integrator precision.
//!
//! Discrete dosing at the same average rate settles *higher* than the
//! closed form at low frequencies: concentrations arrive as a sawtooth,
//! and the convex low-concentration side of the a-process Hill curve
//! gains more from the peaks than it loses in the troughs.
//!
//! Run with: `cargo run --release --example steady_state`

use posology::{simulate, steady_state_h, DoseSchedule, ModelParams, SimConfig};

fn tail_average(h: &[f64], from: usize) -> f64 {
    let tail = &h[from..];
    tail.iter().sum::<f64>() / tail.len() as f64
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = ModelParams::default();
    let frequency = 0.01;
    let t_sim = 20000.0;
    let config = SimConfig {
        t_sim,
        dt_out: 1.0,
        ..Default::default()
    };

    let closed_form = steady_state_h(&params, frequency, 1.0)?;
    println!("closed form at f = {frequency}:        {closed_form:+.6} hedons");

    // Constant-rate administration: the regime the closed form describes.
    let continuous = ModelParams {
        infusion_duration: t_sim,
        ..params
    };
    let schedule = DoseSchedule {
        potency: frequency * t_sim,
        first_dose_time: 0.0,
        interdose_interval: t_sim,
        additional_doses: 0,
    };
    let traj = simulate(&continuous, &schedule, &config)?;
    let avg = tail_average(traj.hedonic(), 19500);
    println!(
        "simulated, constant-rate inflow:    {avg:+.6} hedons  (rel err {:.2e})",
        ((avg - closed_form) / closed_form).abs()
    );

    // Discrete doses at the same average rate.
    let discrete = DoseSchedule::at_frequency(1.0, frequency, t_sim);
    let traj = simulate(&params, &discrete, &config)?;
    let avg = tail_average(traj.hedonic(), 19500);
    println!(
        "simulated, one dose every {:.0} min:  {avg:+.6} hedons  (sawtooth bias {:+.1}%)",
        1.0 / frequency,
        100.0 * (avg - closed_form) / closed_form.abs()
    );

    // Saturation: at extreme frequency both Hill terms max out.
    let limit = steady_state_h(&params, 1e12, 1.0)?;
    println!(
        "saturation limit (Emax_a−Emax_b)/k_H: {:+.3} (computed {limit:+.6})",
        (params.emax_a - params.emax_b) / params.k_h
    );
    Ok(())
}
