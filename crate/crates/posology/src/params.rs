//! Model parameters, dose schedules, and simulation configuration.
//!
//! [`ModelParams`] holds the fourteen PK/PD constants of the opponent-process
//! model plus the infusion duration. The defaults produce a short,
//! high-potency a-process followed by a longer, low-potency b-process.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// PK/PD constants describing one behavior's opponent-process signature.
///
/// Rate constants are in 1/min, baseline and maximal effects in hedons/min,
/// half-maximal concentrations in arbitrary concentration units, and the
/// sigmoidicity coefficients are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Clearance rate of the dose compartment.
    pub k_dose: f64,
    /// Clearance rate of the a-process pharmacokinetic compartment.
    pub k_apk: f64,
    /// Clearance rate of the b-process pharmacokinetic compartment.
    pub k_bpk: f64,
    /// Clearance rate of the a-process pharmacodynamic compartment.
    pub k_apd: f64,
    /// Clearance rate of the b-process pharmacodynamic compartment.
    pub k_bpd: f64,
    /// Clearance rate of the hedonic compartment.
    pub k_h: f64,
    /// Baseline effect of the a-process Hill equation.
    pub e0_a: f64,
    /// Maximal effect of the a-process Hill equation.
    pub emax_a: f64,
    /// Half-maximal concentration of the a-process Hill equation.
    pub ec50_a: f64,
    /// Sigmoidicity of the a-process Hill equation.
    pub gamma_a: f64,
    /// Baseline effect of the b-process Hill equation.
    pub e0_b: f64,
    /// Maximal effect of the b-process Hill equation.
    pub emax_b: f64,
    /// Half-maximal concentration of the b-process Hill equation.
    pub ec50_b: f64,
    /// Sigmoidicity of the b-process Hill equation.
    pub gamma_b: f64,
    /// Duration of each dose infusion, in minutes.
    pub infusion_duration: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            k_dose: 1.0,
            k_apk: 0.02,
            k_bpk: 0.004,
            k_apd: 1.0,
            k_bpd: 1.0,
            k_h: 1.0,
            e0_a: 0.0,
            emax_a: 1.0,
            ec50_a: 1.0,
            gamma_a: 2.0,
            e0_b: 0.0,
            emax_b: 3.0,
            ec50_b: 9.0,
            gamma_b: 2.0,
            infusion_duration: 1.0,
        }
    }
}

impl ModelParams {
    /// Checks the structural invariants: positive rate constants, positive
    /// EC50 and gamma values, positive infusion duration, everything finite.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in self.fields() {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        let positive = [
            ("k_dose", self.k_dose),
            ("k_apk", self.k_apk),
            ("k_bpk", self.k_bpk),
            ("k_apd", self.k_apd),
            ("k_bpd", self.k_bpd),
            ("k_h", self.k_h),
            ("ec50_a", self.ec50_a),
            ("gamma_a", self.gamma_a),
            ("ec50_b", self.ec50_b),
            ("gamma_b", self.gamma_b),
            ("infusion_duration", self.infusion_duration),
        ];
        for (name, v) in positive {
            if v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// All fields as `(name, value)` pairs, in declaration order.
    pub fn fields(&self) -> [(&'static str, f64); 15] {
        [
            ("k_dose", self.k_dose),
            ("k_apk", self.k_apk),
            ("k_bpk", self.k_bpk),
            ("k_apd", self.k_apd),
            ("k_bpd", self.k_bpd),
            ("k_h", self.k_h),
            ("e0_a", self.e0_a),
            ("emax_a", self.emax_a),
            ("ec50_a", self.ec50_a),
            ("gamma_a", self.gamma_a),
            ("e0_b", self.e0_b),
            ("emax_b", self.emax_b),
            ("ec50_b", self.ec50_b),
            ("gamma_b", self.gamma_b),
            ("infusion_duration", self.infusion_duration),
        ]
    }

    pub fn get(&self, field: ParamField) -> f64 {
        match field {
            ParamField::KDose => self.k_dose,
            ParamField::KApk => self.k_apk,
            ParamField::KBpk => self.k_bpk,
            ParamField::KApd => self.k_apd,
            ParamField::KBpd => self.k_bpd,
            ParamField::KH => self.k_h,
            ParamField::E0A => self.e0_a,
            ParamField::EmaxA => self.emax_a,
            ParamField::Ec50A => self.ec50_a,
            ParamField::GammaA => self.gamma_a,
            ParamField::E0B => self.e0_b,
            ParamField::EmaxB => self.emax_b,
            ParamField::Ec50B => self.ec50_b,
            ParamField::GammaB => self.gamma_b,
            ParamField::InfusionDuration => self.infusion_duration,
        }
    }

    pub fn set(&mut self, field: ParamField, value: f64) {
        match field {
            ParamField::KDose => self.k_dose = value,
            ParamField::KApk => self.k_apk = value,
            ParamField::KBpk => self.k_bpk = value,
            ParamField::KApd => self.k_apd = value,
            ParamField::KBpd => self.k_bpd = value,
            ParamField::KH => self.k_h = value,
            ParamField::E0A => self.e0_a = value,
            ParamField::EmaxA => self.emax_a = value,
            ParamField::Ec50A => self.ec50_a = value,
            ParamField::GammaA => self.gamma_a = value,
            ParamField::E0B => self.e0_b = value,
            ParamField::EmaxB => self.emax_b = value,
            ParamField::Ec50B => self.ec50_b = value,
            ParamField::GammaB => self.gamma_b = value,
            ParamField::InfusionDuration => self.infusion_duration = value,
        }
    }

    /// Returns a copy with `field` set to `value`.
    pub fn with(&self, field: ParamField, value: f64) -> Self {
        let mut p = *self;
        p.set(field, value);
        p
    }
}

/// Names of the [`ModelParams`] fields, used for parameter sweeps, CLI
/// overrides, and similarity feature vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamField {
    KDose,
    KApk,
    KBpk,
    KApd,
    KBpd,
    KH,
    E0A,
    EmaxA,
    Ec50A,
    GammaA,
    E0B,
    EmaxB,
    Ec50B,
    GammaB,
    InfusionDuration,
}

impl ParamField {
    pub const ALL: [ParamField; 15] = [
        ParamField::KDose,
        ParamField::KApk,
        ParamField::KBpk,
        ParamField::KApd,
        ParamField::KBpd,
        ParamField::KH,
        ParamField::E0A,
        ParamField::EmaxA,
        ParamField::Ec50A,
        ParamField::GammaA,
        ParamField::E0B,
        ParamField::EmaxB,
        ParamField::Ec50B,
        ParamField::GammaB,
        ParamField::InfusionDuration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamField::KDose => "k_dose",
            ParamField::KApk => "k_apk",
            ParamField::KBpk => "k_bpk",
            ParamField::KApd => "k_apd",
            ParamField::KBpd => "k_bpd",
            ParamField::KH => "k_h",
            ParamField::E0A => "e0_a",
            ParamField::EmaxA => "emax_a",
            ParamField::Ec50A => "ec50_a",
            ParamField::GammaA => "gamma_a",
            ParamField::E0B => "e0_b",
            ParamField::EmaxB => "emax_b",
            ParamField::Ec50B => "ec50_b",
            ParamField::GammaB => "gamma_b",
            ParamField::InfusionDuration => "infusion_duration",
        }
    }

    /// True for the six first-order rate constants (compared on a log scale
    /// when building similarity features).
    pub fn is_rate_constant(self) -> bool {
        matches!(
            self,
            ParamField::KDose
                | ParamField::KApk
                | ParamField::KBpk
                | ParamField::KApd
                | ParamField::KBpd
                | ParamField::KH
        )
    }
}

impl std::str::FromStr for ParamField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParamField::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown parameter field: {s:?}")))
    }
}

impl std::fmt::Display for ParamField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A repeating dose schedule: `additional_doses + 1` doses of strength
/// `potency`, the first at `first_dose_time`, the rest spaced
/// `interdose_interval` minutes apart.
///
/// The behavioral frequency is `1 / interdose_interval`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoseSchedule {
    /// Dose amount delivered per behavior instance (arbitrary units).
    pub potency: f64,
    /// Time of the first dose, in minutes.
    pub first_dose_time: f64,
    /// Spacing between successive doses, in minutes.
    pub interdose_interval: f64,
    /// Number of doses after the first.
    pub additional_doses: u64,
}

impl DoseSchedule {
    /// A schedule with no effective input (zero potency).
    pub fn none() -> Self {
        DoseSchedule {
            potency: 0.0,
            first_dose_time: 0.0,
            interdose_interval: 1.0,
            additional_doses: 0,
        }
    }

    /// A single dose of strength `potency` at t = 0.
    pub fn single(potency: f64) -> Self {
        DoseSchedule {
            potency,
            first_dose_time: 0.0,
            interdose_interval: 1.0,
            additional_doses: 0,
        }
    }

    /// Doses at frequency `frequency` (first at t = 0), repeating until the
    /// horizon `t_sim` is filled.
    pub fn at_frequency(potency: f64, frequency: f64, t_sim: f64) -> Self {
        let interval = 1.0 / frequency;
        DoseSchedule {
            potency,
            first_dose_time: 0.0,
            interdose_interval: interval,
            additional_doses: (t_sim / interval).floor() as u64,
        }
    }

    pub fn frequency(&self) -> f64 {
        1.0 / self.interdose_interval
    }

    pub fn validate(&self) -> Result<()> {
        if !self.potency.is_finite() || self.potency < 0.0 {
            return Err(Error::invalid(format!(
                "potency must be >= 0, got {}",
                self.potency
            )));
        }
        if !self.first_dose_time.is_finite() || self.first_dose_time < 0.0 {
            return Err(Error::invalid(format!(
                "first_dose_time must be >= 0, got {}",
                self.first_dose_time
            )));
        }
        if !self.interdose_interval.is_finite() || self.interdose_interval <= 0.0 {
            return Err(Error::invalid(format!(
                "interdose_interval must be > 0, got {}",
                self.interdose_interval
            )));
        }
        Ok(())
    }
}

/// Simulation horizon, output sampling interval, and integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Simulation end time, in minutes.
    pub t_sim: f64,
    /// Output sampling interval, in minutes. Must divide `t_sim`.
    pub dt_out: f64,
    /// Absolute integrator tolerance.
    pub abs_tol: f64,
    /// Relative integrator tolerance.
    pub rel_tol: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            t_sim: 4000.0,
            dt_out: 1.0,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
        }
    }
}

impl SimConfig {
    pub fn with_t_sim(t_sim: f64) -> Self {
        SimConfig {
            t_sim,
            ..Default::default()
        }
    }

    /// Number of output intervals (`t_sim / dt_out`, rounded).
    pub fn steps(&self) -> usize {
        (self.t_sim / self.dt_out).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !self.t_sim.is_finite() || self.t_sim <= 0.0 {
            return Err(Error::invalid(format!(
                "t_sim must be > 0, got {}",
                self.t_sim
            )));
        }
        if !self.dt_out.is_finite() || self.dt_out <= 0.0 {
            return Err(Error::invalid(format!(
                "dt_out must be > 0, got {}",
                self.dt_out
            )));
        }
        let n = self.t_sim / self.dt_out;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::invalid(format!(
                "t_sim ({}) must be an integer multiple of dt_out ({})",
                self.t_sim, self.dt_out
            )));
        }
        for (name, v) in [("abs_tol", self.abs_tol), ("rel_tol", self.rel_tol)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }
}
