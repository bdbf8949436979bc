//! Property tests for the model invariants that hold across the whole
//! input space, not just the worked examples.

use proptest::prelude::*;

use posology::analysis::{
    bcra, bfra, biophase, steady_state_h, summarize, AnalysisKind, BcraSettings, BfraSettings,
    CurveShape, ProcessKind, ResponseCurve,
};
use posology::params::{DoseSchedule, ModelParams, ParamField, SimConfig};
use posology::regulator::{features, load_db, save_db, BehaviorRecord, Database, Provenance};
use posology::sim::{simulate, Compartment};

fn short_config() -> SimConfig {
    SimConfig {
        t_sim: 400.0,
        dt_out: 1.0,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, ..ProptestConfig::default() })]

    /// The PK chain never goes negative and never creates or destroys
    /// mass, whatever the (nonnegative) schedule.
    #[test]
    fn pk_chain_nonnegative_and_mass_balanced(
        potency in 0.0f64..3.0,
        first in 0.0f64..100.0,
        interval in 5.0f64..500.0,
        addl in 0u64..30,
    ) {
        let params = ModelParams::default();
        let config = short_config();
        let schedule = DoseSchedule {
            potency,
            first_dose_time: first,
            interdose_interval: interval,
            additional_doses: addl,
        };
        let traj = simulate(&params, &schedule, &config).unwrap();
        for comp in [Compartment::Dose, Compartment::APk, Compartment::BPk] {
            prop_assert!(traj.series(comp).iter().all(|&v| v >= 0.0), "{comp:?} negative");
        }
        let dose = traj.series(Compartment::Dose);
        let apk = traj.series(Compartment::APk);
        let bpk = traj.series(Compartment::BPk);
        let elim = traj.eliminated();
        for (k, &t) in traj.time().iter().enumerate() {
            let mut administered = 0.0;
            for i in 0..=addl {
                let start = first + i as f64 * interval;
                if start > t { break; }
                administered += potency * ((t - start) / params.infusion_duration).min(1.0);
            }
            let held = dose[k] + apk[k] + bpk[k] + elim[k];
            prop_assert!(
                (held - administered).abs() <= 10.0 * config.rel_tol * administered.max(1.0),
                "t={t}: held {held} vs administered {administered}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, ..ProptestConfig::default() })]

    /// Strengthening the opposing process can only lower the steady state.
    #[test]
    fn steady_state_monotone_in_emax_b(
        f in 1e-4f64..0.5,
        emax_lo in 0.0f64..5.0,
        bump in 0.0f64..5.0,
        potency in 0.1f64..3.0,
    ) {
        let lo = ModelParams::default().with(ParamField::EmaxB, emax_lo);
        let hi = ModelParams::default().with(ParamField::EmaxB, emax_lo + bump);
        let h_lo = steady_state_h(&lo, f, potency).unwrap();
        let h_hi = steady_state_h(&hi, f, potency).unwrap();
        prop_assert!(h_hi <= h_lo + 1e-12);
    }

    /// The hedonic clearance only rescales the steady state; it cannot
    /// move its zero crossing.
    #[test]
    fn steady_state_scales_reciprocally_with_k_h(
        f in 1e-4f64..0.5,
        k_h in 0.1f64..5.0,
    ) {
        let base = ModelParams::default();
        let scaled = base.with(ParamField::KH, k_h);
        let a = steady_state_h(&base, f, 1.0).unwrap();
        let b = steady_state_h(&scaled, f, 1.0).unwrap();
        prop_assert!((a - b * k_h).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {}", b * k_h);
    }

    /// The biophase curve stays inside its asymptotes and never decreases.
    #[test]
    fn biophase_bounded_and_monotone(
        emax in 0.0f64..5.0,
        ec50 in 0.1f64..20.0,
        gamma in 0.5f64..4.0,
        e0 in -1.0f64..1.0,
    ) {
        let params = ModelParams {
            e0_b: e0,
            emax_b: emax,
            ec50_b: ec50,
            gamma_b: gamma,
            ..Default::default()
        };
        let grid: Vec<f64> = (0..100).map(|k| k as f64 * 0.5).collect();
        let curve = biophase(&params, ProcessKind::B, &grid);
        for pair in curve.windows(2) {
            prop_assert!(pair[1] >= pair[0] - 1e-12, "biophase decreased");
        }
        for &v in &curve {
            prop_assert!(v >= e0 - 1e-12 && v <= e0 + emax + 1e-12);
        }
        prop_assert!((curve[0] - e0).abs() <= 1e-12, "c=0 must give the baseline");
    }

    /// Quadratic-apex refinement and crossing interpolation recover the
    /// closed-form landmarks of a sampled parabola.
    #[test]
    fn summarize_recovers_parabola_landmarks(
        scale in 0.1f64..10.0,
        root in 0.8f64..2.2,
    ) {
        let xs: Vec<f64> = (0..=30).map(|k| k as f64 * 0.1).collect();
        let tu: Vec<f64> = xs.iter().map(|&x| scale * x * (root - x)).collect();
        let curve = ResponseCurve {
            kind: AnalysisKind::Bfra,
            x_values: xs,
            tu_simulated: tu,
            h_steady_state: None,
            params: ModelParams::default(),
            potency: 1.0,
            config: SimConfig { t_sim: 100.0, ..Default::default() },
        };
        let s = summarize(&curve).unwrap();
        prop_assert_eq!(s.shape, CurveShape::Hormetic);
        prop_assert!((s.apex_x - root / 2.0).abs() < 0.05, "apex {} vs {}", s.apex_x, root / 2.0);
        prop_assert!((s.noael_x.unwrap() - root).abs() < 0.05);
    }

    /// Curves that never dip below zero must not be given a limit, and
    /// curves that never rise above zero must not be given an apex.
    #[test]
    fn summarize_never_invents_landmarks(values in prop::collection::vec(0.0f64..100.0, 8..40)) {
        let n = values.len();
        let xs: Vec<f64> = (0..=n).map(|k| k as f64).collect();
        let mut tu = vec![0.0];
        tu.extend(&values);
        let positive = ResponseCurve {
            kind: AnalysisKind::Bcra,
            x_values: xs.clone(),
            tu_simulated: tu.clone(),
            h_steady_state: None,
            params: ModelParams::default(),
            potency: 1.0,
            config: SimConfig { t_sim: 100.0, ..Default::default() },
        };
        let s = summarize(&positive).unwrap();
        prop_assert_eq!(s.shape, CurveShape::NonNegative);
        prop_assert!(s.noael_x.is_none());

        let negated = ResponseCurve {
            tu_simulated: tu.iter().map(|v| -v).collect(),
            x_values: xs,
            ..positive
        };
        let s = summarize(&negated).unwrap();
        prop_assert_eq!(s.shape, CurveShape::MonotonicallyNegative);
        prop_assert!(s.noael_x.is_none());
        prop_assert!(s.apex_tu <= 1e-9);
    }
}

fn record_strategy() -> impl Strategy<Value = BehaviorRecord> {
    (
        "[a-z][a-z0-9_]{0,15}",
        0.001f64..100.0,
        0.01f64..10.0,
        prop::bool::ANY,
        prop::option::of(1e-6f64..1.0),
        -1e3f64..1e3,
    )
        .prop_map(|(name, ec50_b, potency, is_bfra, noael, apex_tu)| {
            let params = ModelParams::default().with(ParamField::Ec50B, ec50_b);
            BehaviorRecord {
                name,
                params,
                potency,
                analysis_kind: if is_bfra {
                    AnalysisKind::Bfra
                } else {
                    AnalysisKind::Bcra
                },
                summary: posology::analysis::HormeticSummary {
                    shape: if noael.is_some() {
                        CurveShape::Hormetic
                    } else {
                        CurveShape::NonNegative
                    },
                    apex_x: 0.123456789e-2,
                    apex_tu,
                    noael_x: noael,
                    mu_initial: apex_tu / 3.0,
                },
                t_sim: 4000.0,
                provenance: Provenance::Similarity,
                feature_vector: features(&params),
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    /// Databases round-trip field-for-field through the on-disk format.
    #[test]
    fn database_round_trips(records in prop::collection::vec(record_strategy(), 0..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.txt");
        let mut db = Database::new();
        for r in records {
            db.upsert(r);
        }
        save_db(&db, &path).unwrap();
        let loaded = load_db(&path).unwrap();
        prop_assert_eq!(loaded, db);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, ..ProptestConfig::default() })]

    /// Both response analyses pin the no-behavior point at exactly zero
    /// utility.
    #[test]
    fn response_curves_pin_zero_at_zero(
        ec50_b in 4.0f64..20.0,
        e0_a in -0.5f64..0.5,
    ) {
        let params = ModelParams::default()
            .with(ParamField::Ec50B, ec50_b)
            .with(ParamField::E0A, e0_a);
        let config = SimConfig { t_sim: 200.0, ..Default::default() };
        let f = bfra(
            &params,
            &BfraSettings { freq_step: 0.01, freq_max: 0.03, ..Default::default() },
            &config,
        )
        .unwrap();
        prop_assert_eq!(f.x_values[0], 0.0);
        prop_assert_eq!(f.tu_simulated[0], 0.0);
        let c = bcra(
            &params,
            &BcraSettings { count_max: 2, ..Default::default() },
            &config,
        )
        .unwrap();
        prop_assert_eq!(c.x_values[0], 0.0);
        prop_assert_eq!(c.tu_simulated[0], 0.0);
    }
}
