//! Behavior regulation over a persistent database of opponent-process
//! parameters.
//!
//! Each cycle evaluates a set of candidate actions: parameters come from
//! the database (by name), from the caller (explicit), by similarity to
//! known behaviors, or from human escalation. Every resolved candidate gets
//! a hormetic analysis; the best hormetic candidate is executed at its apex
//! rate for one simulation window, and a hard ledger ceiling guarantees the
//! observed dose rate never exceeds the behavior's hormetic limit.

mod db;

pub use db::{load_db, save_db, Database};

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    bcra, bfra, summarize, AnalysisKind, BcraSettings, BfraSettings, HormeticSummary,
};
use crate::error::{Error, Result};
use crate::params::{ModelParams, ParamField, SimConfig};

/// How a record's parameters were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Supplied by a human (explicitly or through escalation).
    Human,
    /// Proposed from nearby database records.
    Similarity,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Human => "human",
            Provenance::Similarity => "similarity",
        }
    }
}

/// A named behavior with its opponent-process signature and cached
/// hormetic analysis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorRecord {
    pub name: String,
    pub params: ModelParams,
    pub potency: f64,
    pub analysis_kind: AnalysisKind,
    pub summary: HormeticSummary,
    pub t_sim: f64,
    pub provenance: Provenance,
    /// Parameter vector used for similarity: rate constants on a log
    /// scale, everything else raw. One entry per parameter field.
    pub feature_vector: Vec<f64>,
}

/// Similarity features of a parameter set: log-scaled rate constants keep
/// multiplicative differences comparable across orders of magnitude.
pub fn features(params: &ModelParams) -> Vec<f64> {
    ParamField::ALL
        .iter()
        .map(|&f| {
            let v = params.get(f);
            if f.is_rate_constant() {
                v.ln()
            } else {
                v
            }
        })
        .collect()
}

/// A database record paired with its distance to a query.
#[derive(Debug, Clone, Copy)]
pub struct SimilarityMatch<'a> {
    pub record: &'a BehaviorRecord,
    pub distance: f64,
}

/// Ranks database records by normalized Euclidean distance to
/// `candidate_features`.
///
/// Each feature dimension is rescaled by the range observed across the
/// database; a dimension on which the database is constant falls back to
/// the raw difference so genuinely different candidates still register.
/// Ties break by name, so the ranking is deterministic.
pub fn query_similar<'a>(db: &'a Database, candidate_features: &[f64]) -> Vec<SimilarityMatch<'a>> {
    let records = db.records();
    if records.is_empty() {
        return Vec::new();
    }
    let dims = candidate_features.len();
    let mut scale = vec![1.0f64; dims];
    for (d, s) in scale.iter_mut().enumerate() {
        let lo = records
            .iter()
            .map(|r| r.feature_vector[d])
            .fold(f64::INFINITY, f64::min);
        let hi = records
            .iter()
            .map(|r| r.feature_vector[d])
            .fold(f64::NEG_INFINITY, f64::max);
        if hi - lo > 0.0 {
            *s = hi - lo;
        }
    }
    let mut matches: Vec<SimilarityMatch<'a>> = records
        .iter()
        .map(|record| {
            let mut sum = 0.0;
            for d in 0..dims {
                let diff = (candidate_features[d] - record.feature_vector[d]) / scale[d];
                sum += diff * diff;
            }
            SimilarityMatch {
                record,
                distance: sum.sqrt(),
            }
        })
        .collect();
    matches.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then_with(|| a.record.name.cmp(&b.record.name))
    });
    matches
}

/// Outcome of a parameter proposal.
#[derive(Debug, Clone, PartialEq)]
pub enum Proposal {
    /// Parameters adopted from the database.
    Adopt {
        params: ModelParams,
        potency: f64,
        nearest_distance: f64,
    },
    /// The candidate is out of distribution; explicit parameters are
    /// required before it may proceed.
    Escalate { nearest_distance: Option<f64> },
}

/// Proposes parameters for a candidate from its ranked matches: the
/// inverse-distance-weighted average of the three nearest records when the
/// nearest lies within `ood_threshold`, the nearest record itself on an
/// exact match, and an escalation request otherwise.
pub fn propose_params(matches: &[SimilarityMatch<'_>], ood_threshold: f64) -> Proposal {
    let Some(nearest) = matches.first() else {
        return Proposal::Escalate {
            nearest_distance: None,
        };
    };
    if nearest.distance > ood_threshold {
        return Proposal::Escalate {
            nearest_distance: Some(nearest.distance),
        };
    }
    if nearest.distance == 0.0 {
        return Proposal::Adopt {
            params: nearest.record.params,
            potency: nearest.record.potency,
            nearest_distance: 0.0,
        };
    }
    let k = matches.len().min(3);
    let weights: Vec<f64> = matches[..k].iter().map(|m| 1.0 / m.distance).collect();
    let total: f64 = weights.iter().sum();
    let mut params = ModelParams::default();
    for field in ParamField::ALL {
        let v = matches[..k]
            .iter()
            .zip(&weights)
            .map(|(m, w)| w / total * m.record.params.get(field))
            .sum();
        params.set(field, v);
    }
    let potency = matches[..k]
        .iter()
        .zip(&weights)
        .map(|(m, w)| w / total * m.record.potency)
        .sum();
    Proposal::Adopt {
        params,
        potency,
        nearest_distance: nearest.distance,
    }
}

/// Per-behavior execution history: dose timestamps in simulated minutes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExecutionLedger {
    doses: BTreeMap<String, Vec<f64>>,
}

impl ExecutionLedger {
    pub fn doses(&self, name: &str) -> &[f64] {
        self.doses.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn behaviors(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.doses.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    fn count_in_window(&self, name: &str, t_end: f64, window: f64) -> usize {
        let Some(times) = self.doses.get(name) else {
            return 0;
        };
        let lo = times.partition_point(|&t| t <= t_end - window);
        let hi = times.partition_point(|&t| t <= t_end);
        hi - lo
    }

    /// Records a dose at `t` unless doing so would put more than
    /// `max_in_window` doses into the trailing window ending at `t`.
    /// Returns whether the dose was recorded.
    fn try_record(&mut self, name: &str, t: f64, window: f64, max_in_window: usize) -> bool {
        if self.count_in_window(name, t, window) + 1 > max_in_window {
            return false;
        }
        let times = self.doses.entry(name.to_string()).or_default();
        debug_assert!(times.last().is_none_or(|&last| last <= t));
        times.push(t);
        true
    }
}

/// Grid settings shared by every analysis the regulator runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegulatorConfig {
    pub sim: SimConfig,
    pub freq_step: f64,
    pub freq_max: f64,
    pub interdose_interval: f64,
    pub count_max: u64,
    /// Similarity distance beyond which a candidate escalates to a human.
    pub ood_threshold: f64,
    /// Multiplier in (0, 1] applied to the hormetic limit when enforcing
    /// the execution ceiling.
    pub uncertainty_factor: f64,
}

impl Default for RegulatorConfig {
    fn default() -> Self {
        RegulatorConfig {
            sim: SimConfig::default(),
            freq_step: 0.0005,
            freq_max: 0.05,
            interdose_interval: 50.0,
            count_max: 30,
            ood_threshold: 0.5,
            uncertainty_factor: 1.0,
        }
    }
}

impl RegulatorConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if !(self.uncertainty_factor > 0.0 && self.uncertainty_factor <= 1.0) {
            return Err(Error::invalid(format!(
                "uncertainty_factor must be in (0, 1], got {}",
                self.uncertainty_factor
            )));
        }
        if self.ood_threshold.is_nan() || self.ood_threshold < 0.0 {
            return Err(Error::invalid(format!(
                "ood_threshold must be >= 0, got {}",
                self.ood_threshold
            )));
        }
        Ok(())
    }
}

/// Mutable state threaded through regulation cycles.
#[derive(Debug, Clone, Default)]
pub struct RegulatorState {
    pub db: Database,
    pub ledger: ExecutionLedger,
    /// Simulated clock, in minutes; each cycle advances it by one window.
    pub clock: f64,
    pub cycles_run: u64,
}

impl RegulatorState {
    pub fn new(db: Database) -> Self {
        RegulatorState {
            db,
            ..Default::default()
        }
    }
}

/// A candidate action presented to one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateAction {
    pub name: String,
    /// Explicit opponent-process parameters, or — when `tentative` — a
    /// similarity probe to be replaced by a database proposal.
    pub params: Option<ModelParams>,
    pub potency: f64,
    pub kind: AnalysisKind,
    pub tentative: bool,
}

impl CandidateAction {
    pub fn named(name: impl Into<String>) -> Self {
        CandidateAction {
            name: name.into(),
            params: None,
            potency: 1.0,
            kind: AnalysisKind::Bfra,
            tentative: false,
        }
    }

    pub fn with_params(name: impl Into<String>, params: ModelParams) -> Self {
        CandidateAction {
            params: Some(params),
            ..CandidateAction::named(name)
        }
    }
}

/// Answer to an escalation request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EscalationAnswer {
    pub params: ModelParams,
    pub potency: f64,
}

/// Synchronous human-escalation contract: asked once per out-of-distribution
/// candidate; `None` skips that candidate for the cycle.
pub trait EscalationHandler {
    fn provide(&mut self, candidate: &CandidateAction) -> Option<EscalationAnswer>;
}

/// Handler that never answers: every escalation skips its candidate.
pub struct NoEscalation;

impl EscalationHandler for NoEscalation {
    fn provide(&mut self, _candidate: &CandidateAction) -> Option<EscalationAnswer> {
        None
    }
}

/// Handler answering from a fixed name → parameters table.
#[derive(Debug, Clone, Default)]
pub struct PolicyEscalation {
    pub answers: BTreeMap<String, EscalationAnswer>,
}

impl EscalationHandler for PolicyEscalation {
    fn provide(&mut self, candidate: &CandidateAction) -> Option<EscalationAnswer> {
        self.answers.get(&candidate.name).copied()
    }
}

/// Where a candidate's parameters came from this cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamSource {
    Database,
    Explicit,
    Similarity,
    Escalation,
}

impl ParamSource {
    fn name(self) -> &'static str {
        match self {
            ParamSource::Database => "database",
            ParamSource::Explicit => "explicit",
            ParamSource::Similarity => "similarity",
            ParamSource::Escalation => "escalation",
        }
    }
}

/// What happened to one candidate during a cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateReport {
    pub name: String,
    pub source: Option<ParamSource>,
    pub nearest_distance: Option<f64>,
    pub summary: Option<HormeticSummary>,
    /// Reason the candidate dropped out, when it did.
    pub skipped: Option<String>,
}

/// The executed action of a cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub name: String,
    pub window_start: f64,
    pub window_end: f64,
    pub doses_recorded: usize,
    pub doses_blocked: usize,
}

/// Structured decision record of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleLog {
    pub cycle: u64,
    pub clock: f64,
    pub candidates: Vec<CandidateReport>,
    pub chosen: Option<Execution>,
    pub reason: String,
}

impl fmt::Display for CycleLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "cycle {} at t={}", self.cycle, self.clock)?;
        for c in &self.candidates {
            write!(f, "  candidate {}:", c.name)?;
            if let Some(src) = c.source {
                write!(f, " source={}", src.name())?;
            }
            if let Some(d) = c.nearest_distance {
                write!(f, " distance={d:.6}")?;
            }
            if let Some(s) = &c.summary {
                write!(
                    f,
                    " shape={} apex_x={:.6} apex_tu={:.4}",
                    s.shape, s.apex_x, s.apex_tu
                )?;
                if let Some(n) = s.noael_x {
                    write!(f, " noael_x={n:.6}")?;
                }
            }
            if let Some(reason) = &c.skipped {
                write!(f, " skipped ({reason})")?;
            }
            writeln!(f)?;
        }
        match &self.chosen {
            Some(e) => writeln!(
                f,
                "  chosen {}: {} doses in [{}, {}) ({} blocked by ceiling) — {}",
                e.name,
                e.doses_recorded,
                e.window_start,
                e.window_end,
                e.doses_blocked,
                self.reason
            ),
            None => writeln!(f, "  chosen none — {}", self.reason),
        }
    }
}

/// A candidate that survived analysis, ready for selection.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyzedCandidate {
    pub name: String,
    pub summary: HormeticSummary,
}

/// Picks the action with the best hormetic profile: non-hormetic shapes are
/// discarded outright, then the highest apex utility wins, with ties broken
/// by the larger hormetic limit and finally by name.
pub fn select_action(candidates: &[AnalyzedCandidate]) -> Option<&AnalyzedCandidate> {
    candidates
        .iter()
        .filter(|c| c.summary.shape.is_safe() && c.summary.noael_x.is_some())
        .min_by(|a, b| {
            b.summary
                .apex_tu
                .total_cmp(&a.summary.apex_tu)
                .then_with(|| {
                    b.summary
                        .noael_x
                        .unwrap_or(0.0)
                        .total_cmp(&a.summary.noael_x.unwrap_or(0.0))
                })
                .then_with(|| a.name.cmp(&b.name))
        })
}

struct ResolvedCandidate {
    name: String,
    params: ModelParams,
    potency: f64,
    kind: AnalysisKind,
    source: ParamSource,
    nearest_distance: Option<f64>,
}

/// Runs one regulation cycle: resolve parameters for every candidate,
/// analyze what is not already cached, store new records, select the best
/// hormetic action, and execute it at apex rate under the ledger ceiling.
///
/// Per-candidate failures are reported in the log, never propagated. The
/// clock advances by one simulation window regardless of whether anything
/// executed.
pub fn run_cycle(
    state: &mut RegulatorState,
    candidates: &[CandidateAction],
    escalation: &mut dyn EscalationHandler,
    config: &RegulatorConfig,
) -> CycleLog {
    let cycle = state.cycles_run;
    let clock = state.clock;
    let mut reports: Vec<CandidateReport> = Vec::with_capacity(candidates.len());
    let mut resolved: Vec<Option<ResolvedCandidate>> = Vec::with_capacity(candidates.len());

    for cand in candidates {
        match resolve_candidate(state, cand, escalation, config) {
            Ok(r) => {
                reports.push(CandidateReport {
                    name: cand.name.clone(),
                    source: Some(r.source),
                    nearest_distance: r.nearest_distance,
                    summary: None,
                    skipped: None,
                });
                resolved.push(Some(r));
            }
            Err(reason) => {
                reports.push(CandidateReport {
                    name: cand.name.clone(),
                    source: None,
                    nearest_distance: None,
                    summary: None,
                    skipped: Some(reason),
                });
                resolved.push(None);
            }
        }
    }

    // Analyses are pure and independent; reuse the cache where the stored
    // record matches exactly, run the rest in parallel, then apply database
    // writes in candidate order.
    let analyses: Vec<Option<Result<HormeticSummary>>> = resolved
        .par_iter()
        .map(|r| {
            let r = r.as_ref()?;
            if let Some(existing) = state.db.get(&r.name) {
                if record_matches(existing, r, config) {
                    return Some(Ok(existing.summary));
                }
            }
            Some(analyze(r, config))
        })
        .collect();

    let mut analyzed: Vec<AnalyzedCandidate> = Vec::new();
    for ((report, r), analysis) in reports.iter_mut().zip(&resolved).zip(analyses) {
        let (Some(r), Some(outcome)) = (r.as_ref(), analysis) else {
            continue;
        };
        match outcome {
            Ok(summary) => {
                report.summary = Some(summary);
                let provenance = match r.source {
                    ParamSource::Similarity => Provenance::Similarity,
                    _ => Provenance::Human,
                };
                let record = BehaviorRecord {
                    name: r.name.clone(),
                    params: r.params,
                    potency: r.potency,
                    analysis_kind: r.kind,
                    summary,
                    t_sim: config.sim.t_sim,
                    provenance,
                    feature_vector: features(&r.params),
                };
                state.db.upsert(record);
                if !analyzed.iter().any(|a| a.name == r.name) {
                    analyzed.push(AnalyzedCandidate {
                        name: r.name.clone(),
                        summary,
                    });
                }
            }
            Err(e) => {
                report.skipped = Some(format!("analysis failed: {e}"));
            }
        }
    }

    let selection = select_action(&analyzed).cloned();
    let (chosen, reason) = match selection {
        Some(best) => {
            let record = state
                .db
                .get(&best.name)
                .expect("selected candidate must be stored")
                .clone();
            let exec = execute(state, &record, config);
            let reason = format!(
                "max apex_tu {:.4} among {} hormetic candidate(s)",
                best.summary.apex_tu,
                analyzed
                    .iter()
                    .filter(|c| c.summary.shape.is_safe())
                    .count()
            );
            (Some(exec), reason)
        }
        None => {
            let reason = if analyzed.is_empty() {
                "no analyzable candidates".to_string()
            } else {
                "no hormetic candidate".to_string()
            };
            (None, reason)
        }
    };

    state.clock += config.sim.t_sim;
    state.cycles_run += 1;

    CycleLog {
        cycle,
        clock,
        candidates: reports,
        chosen,
        reason,
    }
}

fn resolve_candidate(
    state: &RegulatorState,
    cand: &CandidateAction,
    escalation: &mut dyn EscalationHandler,
    config: &RegulatorConfig,
) -> std::result::Result<ResolvedCandidate, String> {
    if let Some(params) = &cand.params {
        if !cand.tentative {
            params
                .validate()
                .map_err(|e| format!("invalid parameters: {e}"))?;
            return Ok(ResolvedCandidate {
                name: cand.name.clone(),
                params: *params,
                potency: cand.potency,
                kind: cand.kind,
                source: ParamSource::Explicit,
                nearest_distance: None,
            });
        }
        // Tentative parameters are a similarity probe only.
        params
            .validate()
            .map_err(|e| format!("invalid tentative parameters: {e}"))?;
        let matches = query_similar(&state.db, &features(params));
        return match propose_params(&matches, config.ood_threshold) {
            Proposal::Adopt {
                params,
                potency,
                nearest_distance,
            } => Ok(ResolvedCandidate {
                name: cand.name.clone(),
                params,
                potency,
                kind: cand.kind,
                source: ParamSource::Similarity,
                nearest_distance: Some(nearest_distance),
            }),
            Proposal::Escalate { nearest_distance } => match escalation.provide(cand) {
                Some(answer) => {
                    answer
                        .params
                        .validate()
                        .map_err(|e| format!("invalid escalation answer: {e}"))?;
                    Ok(ResolvedCandidate {
                        name: cand.name.clone(),
                        params: answer.params,
                        potency: answer.potency,
                        kind: cand.kind,
                        source: ParamSource::Escalation,
                        nearest_distance,
                    })
                }
                None => Err("escalation unanswered".to_string()),
            },
        };
    }

    if let Some(record) = state.db.get(&cand.name) {
        return Ok(ResolvedCandidate {
            name: cand.name.clone(),
            params: record.params,
            potency: record.potency,
            kind: record.analysis_kind,
            source: ParamSource::Database,
            nearest_distance: Some(0.0),
        });
    }

    // Nothing known about this candidate at all.
    match escalation.provide(cand) {
        Some(answer) => {
            answer
                .params
                .validate()
                .map_err(|e| format!("invalid escalation answer: {e}"))?;
            Ok(ResolvedCandidate {
                name: cand.name.clone(),
                params: answer.params,
                potency: answer.potency,
                kind: cand.kind,
                source: ParamSource::Escalation,
                nearest_distance: None,
            })
        }
        None => Err("escalation unanswered".to_string()),
    }
}

fn record_matches(
    existing: &BehaviorRecord,
    r: &ResolvedCandidate,
    config: &RegulatorConfig,
) -> bool {
    existing.params == r.params
        && existing.potency == r.potency
        && existing.analysis_kind == r.kind
        && existing.t_sim == config.sim.t_sim
}

fn analyze(r: &ResolvedCandidate, config: &RegulatorConfig) -> Result<HormeticSummary> {
    let curve = match r.kind {
        AnalysisKind::Bfra => bfra(
            &r.params,
            &BfraSettings {
                potency: r.potency,
                freq_step: config.freq_step,
                freq_max: config.freq_max,
                burst_addl: None,
            },
            &config.sim,
        )?,
        AnalysisKind::Bcra => bcra(
            &r.params,
            &BcraSettings {
                potency: r.potency,
                interdose_interval: config.interdose_interval,
                count_max: config.count_max,
            },
            &config.sim,
        )?,
    };
    summarize(&curve)
}

/// Records doses for the chosen behavior at its apex rate across one
/// window. Every dose passes the sliding-window ceiling check; the apex is
/// the target, the (uncertainty-scaled) hormetic limit the hard stop.
fn execute(
    state: &mut RegulatorState,
    record: &BehaviorRecord,
    config: &RegulatorConfig,
) -> Execution {
    let window = config.sim.t_sim;
    let start = state.clock;
    let end = start + window;
    let noael = record
        .summary
        .noael_x
        .expect("only hormetic behaviors execute");
    let ceiling = noael * config.uncertainty_factor;

    let (dose_times, max_in_window) = match record.analysis_kind {
        AnalysisKind::Bfra => {
            let apex_f = record.summary.apex_x;
            let max = (ceiling * window + 1e-9).floor() as usize;
            let mut times = Vec::new();
            if apex_f > 0.0 {
                let mut k = 0u64;
                loop {
                    let t = start + k as f64 / apex_f;
                    if t >= end {
                        break;
                    }
                    times.push(t);
                    k += 1;
                }
            }
            (times, max)
        }
        AnalysisKind::Bcra => {
            let apex_n = record.summary.apex_x.round().max(0.0) as u64;
            let max = (ceiling + 1e-9).floor() as usize;
            let times = (0..apex_n)
                .map(|k| start + k as f64 * config.interdose_interval)
                .filter(|&t| t < end)
                .collect();
            (times, max)
        }
    };

    let mut recorded = 0;
    let mut blocked = 0;
    for t in dose_times {
        if state
            .ledger
            .try_record(&record.name, t, window, max_in_window)
        {
            recorded += 1;
        } else {
            blocked += 1;
        }
    }

    Execution {
        name: record.name.clone(),
        window_start: start,
        window_end: end,
        doses_recorded: recorded,
        doses_blocked: blocked,
    }
}
