//! Frequency- and count-response analysis of repeated behaviors.
//!
//! A BFRA fixes potency and sweeps behavioral frequency; a BCRA fixes
//! frequency and sweeps the dose count. Both record the simulated total
//! utility (integral of the hedonic compartment) per grid point; the BFRA
//! additionally carries the closed-form steady-state hedonic level when it
//! applies. [`summarize`] then locates the hormetic apex, the zero crossing
//! that bounds safe repetition, and classifies the curve shape.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{DoseSchedule, ModelParams, SimConfig};
use crate::sim::{simulate, total_utility};

/// Which response analysis produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnalysisKind {
    Bfra,
    Bcra,
}

impl AnalysisKind {
    pub fn name(self) -> &'static str {
        match self {
            AnalysisKind::Bfra => "bfra",
            AnalysisKind::Bcra => "bcra",
        }
    }
}

impl std::str::FromStr for AnalysisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bfra" => Ok(AnalysisKind::Bfra),
            "bcra" => Ok(AnalysisKind::Bcra),
            other => Err(Error::invalid(format!("unknown analysis kind: {other:?}"))),
        }
    }
}

/// The a- or b-process side of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    A,
    B,
}

/// Samples of total utility against behavioral frequency (BFRA) or dose
/// count (BCRA).
///
/// `x_values` starts at 0 with `tu_simulated[0] = 0`: no behavior, no
/// utility. For a BFRA with unit pharmacodynamic clearances,
/// `h_steady_state` holds the raw analytic steady-state hedonic level per
/// frequency (multiply by `t_sim` for comparison against the integrals).
#[derive(Debug, Clone)]
pub struct ResponseCurve {
    pub kind: AnalysisKind,
    pub x_values: Vec<f64>,
    pub tu_simulated: Vec<f64>,
    pub h_steady_state: Option<Vec<f64>>,
    pub params: ModelParams,
    pub potency: f64,
    pub config: SimConfig,
}

impl ResponseCurve {
    pub fn len(&self) -> usize {
        self.x_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_values.is_empty()
    }
}

/// Shape classification of a response curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveShape {
    /// Beneficial at low intensity, harmful past a zero crossing.
    Hormetic,
    /// Never goes negative on the sampled range (no limit found).
    NonNegative,
    /// Never goes positive at any sampled intensity.
    MonotonicallyNegative,
    /// More than one sign change: a false limit followed by another
    /// reversal at extreme intensity.
    Triphasic,
}

impl CurveShape {
    pub fn name(self) -> &'static str {
        match self {
            CurveShape::Hormetic => "hormetic",
            CurveShape::NonNegative => "non_negative",
            CurveShape::MonotonicallyNegative => "monotonically_negative",
            CurveShape::Triphasic => "triphasic",
        }
    }

    /// Only hormetic curves carry a usable safety ceiling.
    pub fn is_safe(self) -> bool {
        matches!(self, CurveShape::Hormetic)
    }
}

impl std::fmt::Display for CurveShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Hormetic landmarks of one response curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HormeticSummary {
    pub shape: CurveShape,
    /// Intensity (frequency or count) maximizing total utility.
    pub apex_x: f64,
    /// Total utility at the apex sample.
    pub apex_tu: f64,
    /// Zero crossing bounding safe repetition; present only for hormetic
    /// curves.
    pub noael_x: Option<f64>,
    /// Total utility of a single isolated dose over the same horizon.
    pub mu_initial: f64,
}

/// Samples below this magnitude count as zero when classifying sign
/// changes, so integrator jitter cannot masquerade as a third phase.
pub const SIGN_NOISE_FLOOR: f64 = 1e-9;

/// Closed-form steady-state hedonic level for sustained dosing of strength
/// `potency` at `frequency`.
///
/// The derivation eliminates the pharmacodynamic clearances from the final
/// expression, which is only valid when both equal one; other values are
/// rejected rather than silently misreported.
pub fn steady_state_h(params: &ModelParams, frequency: f64, potency: f64) -> Result<f64> {
    params.validate()?;
    if params.k_apd != 1.0 || params.k_bpd != 1.0 {
        return Err(Error::UnsupportedParams(format!(
            "steady_state_h requires k_apd = k_bpd = 1 (got k_apd={}, k_bpd={})",
            params.k_apd, params.k_bpd
        )));
    }
    if !frequency.is_finite() || frequency < 0.0 {
        return Err(Error::invalid(format!(
            "frequency must be >= 0, got {frequency}"
        )));
    }
    let u = potency * frequency / params.k_apk;
    let v = potency * frequency / params.k_bpk;
    let hill = |e0: f64, emax: f64, ec50: f64, gamma: f64, c: f64| {
        let cp = c.powf(gamma);
        e0 + emax * cp / (ec50.powf(gamma) + cp)
    };
    let a = hill(params.e0_a, params.emax_a, params.ec50_a, params.gamma_a, u);
    let b = hill(params.e0_b, params.emax_b, params.ec50_b, params.gamma_b, v);
    Ok((a - b) / params.k_h)
}

/// The Hill-equation mapping from pharmacokinetic concentration to
/// pharmacodynamic effect for the chosen process, evaluated per grid point.
pub fn biophase(params: &ModelParams, which: ProcessKind, concentrations: &[f64]) -> Vec<f64> {
    let (e0, emax, ec50, gamma) = match which {
        ProcessKind::A => (params.e0_a, params.emax_a, params.ec50_a, params.gamma_a),
        ProcessKind::B => (params.e0_b, params.emax_b, params.ec50_b, params.gamma_b),
    };
    let ec50_pow = ec50.powf(gamma);
    concentrations
        .iter()
        .map(|&c| {
            let cp = c.max(0.0).powf(gamma);
            e0 + emax * cp / (ec50_pow + cp)
        })
        .collect()
}

/// Total utility of one isolated dose over the configured horizon: the
/// initial marginal utility of the behavior.
pub fn mu_initial(params: &ModelParams, potency: f64, config: &SimConfig) -> Result<f64> {
    let schedule = DoseSchedule {
        potency,
        first_dose_time: 0.0,
        interdose_interval: config.t_sim,
        additional_doses: 0,
    };
    Ok(total_utility(&simulate(params, &schedule, config)?))
}

/// BFRA controls: frequency grid `{0, freq_step, …, freq_max}` and dose
/// strength. `burst_addl` limits each grid point to a finite burst of
/// `burst_addl + 1` doses; `None` repeats until the horizon is filled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BfraSettings {
    pub potency: f64,
    pub freq_step: f64,
    pub freq_max: f64,
    pub burst_addl: Option<u64>,
}

impl Default for BfraSettings {
    fn default() -> Self {
        BfraSettings {
            potency: 1.0,
            freq_step: 0.0002,
            freq_max: 0.01,
            burst_addl: None,
        }
    }
}

/// BCRA controls: counts `{0, 1, …, count_max}` at a fixed interdose
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcraSettings {
    pub potency: f64,
    pub interdose_interval: f64,
    pub count_max: u64,
}

impl Default for BcraSettings {
    fn default() -> Self {
        BcraSettings {
            potency: 1.0,
            interdose_interval: 50.0,
            count_max: 30,
        }
    }
}

/// Behavioral Frequency Response Analysis: total utility as a function of
/// dose frequency at fixed potency.
pub fn bfra(
    params: &ModelParams,
    settings: &BfraSettings,
    config: &SimConfig,
) -> Result<ResponseCurve> {
    params.validate()?;
    config.validate()?;
    if settings.freq_step <= 0.0 || !settings.freq_step.is_finite() {
        return Err(Error::invalid(format!(
            "freq_step must be > 0, got {}",
            settings.freq_step
        )));
    }
    if settings.freq_max < settings.freq_step {
        return Err(Error::invalid(format!(
            "freq_max ({}) must be >= freq_step ({})",
            settings.freq_max, settings.freq_step
        )));
    }
    if settings.potency.is_nan() || settings.potency < 0.0 {
        return Err(Error::invalid(format!(
            "potency must be >= 0, got {}",
            settings.potency
        )));
    }

    let n = (settings.freq_max / settings.freq_step + 1e-9).floor() as usize;
    let mut x_values = Vec::with_capacity(n + 1);
    x_values.push(0.0);
    for k in 1..=n {
        x_values.push(k as f64 * settings.freq_step);
    }

    // No behavior, no utility: the zero-frequency entry is pinned rather
    // than simulated (with nonzero baselines an empty schedule still
    // produces drift, which is not a property of this behavior).
    let mut tu_simulated = vec![0.0];
    let computed: Result<Vec<f64>> = x_values[1..]
        .par_iter()
        .map(|&f| {
            let interval = 1.0 / f;
            let addl = match settings.burst_addl {
                Some(a) => a,
                None => (config.t_sim / interval).floor() as u64,
            };
            let schedule = DoseSchedule {
                potency: settings.potency,
                first_dose_time: 0.0,
                interdose_interval: interval,
                additional_doses: addl,
            };
            simulate(params, &schedule, config)
                .map(|t| total_utility(&t))
                .map_err(|e| Error::Analysis {
                    x: f,
                    source: Box::new(e),
                })
        })
        .collect();
    tu_simulated.extend(computed?);

    let h_steady_state = if params.k_apd == 1.0 && params.k_bpd == 1.0 {
        Some(
            x_values
                .iter()
                .map(|&f| steady_state_h(params, f, settings.potency))
                .collect::<Result<Vec<f64>>>()?,
        )
    } else {
        None
    };

    Ok(ResponseCurve {
        kind: AnalysisKind::Bfra,
        x_values,
        tu_simulated,
        h_steady_state,
        params: *params,
        potency: settings.potency,
        config: *config,
    })
}

/// Behavioral Count Response Analysis: total utility as a function of dose
/// count at fixed frequency. Finite counts never reach steady state, so
/// there is no analytic column.
pub fn bcra(
    params: &ModelParams,
    settings: &BcraSettings,
    config: &SimConfig,
) -> Result<ResponseCurve> {
    params.validate()?;
    config.validate()?;
    if settings.interdose_interval <= 0.0 || !settings.interdose_interval.is_finite() {
        return Err(Error::invalid(format!(
            "interdose_interval must be > 0, got {}",
            settings.interdose_interval
        )));
    }
    if settings.count_max < 1 {
        return Err(Error::invalid("count_max must be >= 1".to_string()));
    }
    if settings.potency.is_nan() || settings.potency < 0.0 {
        return Err(Error::invalid(format!(
            "potency must be >= 0, got {}",
            settings.potency
        )));
    }

    let x_values: Vec<f64> = (0..=settings.count_max).map(|n| n as f64).collect();
    let mut tu_simulated = vec![0.0];
    let computed: Result<Vec<f64>> = (1..=settings.count_max)
        .into_par_iter()
        .map(|n| {
            let schedule = DoseSchedule {
                potency: settings.potency,
                first_dose_time: 0.0,
                interdose_interval: settings.interdose_interval,
                additional_doses: n - 1,
            };
            simulate(params, &schedule, config)
                .map(|t| total_utility(&t))
                .map_err(|e| Error::Analysis {
                    x: n as f64,
                    source: Box::new(e),
                })
        })
        .collect();
    tu_simulated.extend(computed?);

    Ok(ResponseCurve {
        kind: AnalysisKind::Bcra,
        x_values,
        tu_simulated,
        h_steady_state: None,
        params: *params,
        potency: settings.potency,
        config: *config,
    })
}

/// Locates the hormetic apex and limit of a response curve and classifies
/// its shape.
///
/// The apex is the sampled argmax over x > 0 refined by one quadratic fit
/// through its neighbors; the limit is the linearly interpolated zero
/// crossing in the first positive-to-negative interval after the apex.
///
/// # Errors
///
/// Fewer than three samples.
pub fn summarize(curve: &ResponseCurve) -> Result<HormeticSummary> {
    if curve.len() < 3 {
        return Err(Error::invalid(format!(
            "summarize requires at least 3 samples, got {}",
            curve.len()
        )));
    }
    let xs = &curve.x_values;
    let tu = &curve.tu_simulated;

    // Apex over x > 0 (the pinned zero point is not a behavior intensity).
    let mut apex_idx = 1;
    for i in 2..tu.len() {
        if tu[i] > tu[apex_idx] {
            apex_idx = i;
        }
    }
    let apex_tu = tu[apex_idx];
    let apex_x = refine_apex(xs, tu, apex_idx);

    let signs: Vec<i8> = tu[1..]
        .iter()
        .map(|&v| {
            if v > SIGN_NOISE_FLOOR {
                1
            } else if v < -SIGN_NOISE_FLOOR {
                -1
            } else {
                0
            }
        })
        .collect();
    let nonzero: Vec<i8> = signs.iter().copied().filter(|&s| s != 0).collect();
    let changes = nonzero.windows(2).filter(|w| w[0] != w[1]).count();
    let any_pos = nonzero.contains(&1);
    let any_neg = nonzero.contains(&-1);

    let crossing = first_crossing_after(xs, tu, apex_idx);

    let shape = if !any_neg {
        CurveShape::NonNegative
    } else if !any_pos {
        CurveShape::MonotonicallyNegative
    } else if changes >= 2 {
        CurveShape::Triphasic
    } else if crossing.is_some() && apex_tu > SIGN_NOISE_FLOOR {
        CurveShape::Hormetic
    } else {
        // Negative early, positive at the high end: the false limit sits
        // below the grid's resolution. Treated as triphasic so it is never
        // mistaken for a usable hormetic ceiling.
        CurveShape::Triphasic
    };

    let noael_x = if shape == CurveShape::Hormetic {
        crossing
    } else {
        None
    };

    let mu = mu_initial(&curve.params, curve.potency, &curve.config)?;

    Ok(HormeticSummary {
        shape,
        apex_x,
        apex_tu,
        noael_x,
        mu_initial: mu,
    })
}

/// One quadratic fit through the argmax sample and its neighbors (uniform
/// grid); falls back to the raw sample at the boundary or on a flat fit.
fn refine_apex(xs: &[f64], tu: &[f64], i: usize) -> f64 {
    if i == 0 || i + 1 >= xs.len() {
        return xs[i];
    }
    let (y0, y1, y2) = (tu[i - 1], tu[i], tu[i + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom >= 0.0 {
        return xs[i];
    }
    let step = xs[i] - xs[i - 1];
    let offset = 0.5 * step * (y0 - y2) / denom;
    (xs[i] + offset).clamp(xs[i - 1], xs[i + 1])
}

fn first_crossing_after(xs: &[f64], tu: &[f64], apex_idx: usize) -> Option<f64> {
    for j in apex_idx..tu.len() - 1 {
        let (a, b) = (tu[j], tu[j + 1]);
        if a > 0.0 && b <= 0.0 && a.abs().max(b.abs()) > SIGN_NOISE_FLOOR {
            return Some(xs[j] + (xs[j + 1] - xs[j]) * a / (a - b));
        }
    }
    None
}
