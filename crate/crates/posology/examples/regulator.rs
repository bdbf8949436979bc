//! The regulation loop, end to end, on the classic paperclip scenario.
//!
//! An agent that simply maximizes paperclip production never stops. Here
//! the behavior is given an opponent-process signature instead, and the
//! regulator works out how much is good: it analyzes each candidate's
//! hormetic curve, stores the parameters in a persistent database, refuses
//! candidates with no usable limit, proposes parameters for novel-but-
//! similar behaviors, escalates true unknowns to a human, and executes the
//! winner at its apex rate — with the hormetic limit enforced as a hard
//! ceiling on the dose ledger.
//!
//! Run with: `cargo run --release --example regulator`

use posology::regulator::{
    run_cycle, save_db, CandidateAction, EscalationAnswer, PolicyEscalation, RegulatorConfig,
    RegulatorState,
};
use posology::{AnalysisKind, ModelParams, ParamField, SimConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = RegulatorConfig {
        sim: SimConfig {
            t_sim: 4000.0,
            dt_out: 1.0,
            ..Default::default()
        },
        freq_step: 0.0005,
        freq_max: 0.05,
        interdose_interval: 50.0,
        count_max: 30,
        ood_threshold: 0.5,
        uncertainty_factor: 1.0,
    };
    let mut state = RegulatorState::default();

    // Cycle 1: a human seeds the database. Paperclip production gets the
    // signature tuned for roughly one clip per hour; doomscrolling has no
    // positive phase at all and must be rejected.
    let seed = vec![
        CandidateAction::with_params(
            "paperclip_production",
            ModelParams::default().with(ParamField::Ec50B, 12.4),
        ),
        CandidateAction::with_params(
            "doomscrolling",
            ModelParams::default().with(ParamField::EmaxA, 0.0),
        ),
    ];
    let mut policy = PolicyEscalation::default();
    print!("{}", run_cycle(&mut state, &seed, &mut policy, &config));

    // Cycle 2: the same action arrives by name only — resolved from the
    // database, cached analysis reused, executed again under the ledger.
    let routine = vec![CandidateAction::named("paperclip_production")];
    print!("{}", run_cycle(&mut state, &routine, &mut policy, &config));

    // Cycle 3: a novel behavior close to a known one. Its tentative
    // parameters are only a similarity probe; the adopted parameters come
    // from the nearest database records.
    let mut stapling = CandidateAction::with_params(
        "staple_production",
        ModelParams::default().with(ParamField::Ec50B, 12.1),
    );
    stapling.tentative = true;

    // And a genuinely out-of-distribution behavior: nothing similar is
    // stored, so the loop escalates. The policy stands in for the human.
    let mut geoengineering = CandidateAction::named("stratospheric_aerosol_injection");
    geoengineering.kind = AnalysisKind::Bcra;
    policy.answers.insert(
        "stratospheric_aerosol_injection".into(),
        EscalationAnswer {
            params: ModelParams::default()
                .with(ParamField::Ec50B, 9.2)
                .with(ParamField::EmaxB, 3.5),
            potency: 1.0,
        },
    );
    print!(
        "{}",
        run_cycle(
            &mut state,
            &[stapling, geoengineering],
            &mut policy,
            &config
        )
    );

    // The ledger holds every executed dose; no behavior's trailing window
    // ever implies a rate above its hormetic limit.
    println!("\nexecution ledger:");
    for (name, doses) in state.ledger.behaviors() {
        let record = state.db.get(name).unwrap();
        println!(
            "  {name}: {} doses recorded, limit {:.4} per window",
            doses.len(),
            record.summary.noael_x.unwrap_or(f64::NAN)
        );
    }

    std::fs::create_dir_all("out")?;
    let db_path = std::path::Path::new("out/behaviors.db");
    save_db(&state.db, db_path)?;
    println!(
        "\ndatabase ({} records) written to {}",
        state.db.len(),
        db_path.display()
    );
    Ok(())
}
