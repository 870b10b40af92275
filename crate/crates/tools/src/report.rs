//! Serializable report mirrors of the core result types, plus CSV twins
//! for the run-summary tables. All maps are BTree-backed so serialization
//! is deterministic.

use gatemon_core::assertion::Verdict;
use gatemon_core::attack::DetectionReport;
use gatemon_core::coverage::{CoverageMap, SecurityReport};
use gatemon_core::eco::{EcoResult, EcoRound};
use gatemon_core::sta::TimingReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CoverageJson {
    pub mode: String,
    pub universe: usize,
    pub covered: usize,
    pub vulnerable: usize,
    pub sc_numerator: usize,
    pub sc_denominator: usize,
    pub per_assertion: BTreeMap<String, Vec<String>>,
}

pub fn coverage_json(map: &CoverageMap, report: &SecurityReport) -> CoverageJson {
    CoverageJson {
        mode: map.mode.tag().to_string(),
        universe: map.universe.len(),
        covered: report.covered,
        vulnerable: report.vulnerable,
        sc_numerator: report.sc_numerator,
        sc_denominator: report.sc_denominator,
        per_assertion: map
            .per_assertion
            .iter()
            .map(|(net, set)| {
                (net.to_string(), set.iter().map(|i| i.to_string()).collect())
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TimingJson {
    pub clock_period: f64,
    pub worst_setup_slack: f64,
    pub total_positive_slack: f64,
    pub worst_hold_slack: f64,
    pub critical_path: Vec<String>,
    pub endpoints: BTreeMap<String, f64>,
}

pub fn timing_json(report: &TimingReport) -> TimingJson {
    TimingJson {
        clock_period: report.clock_period,
        worst_setup_slack: report.worst_setup_slack,
        total_positive_slack: report.total_positive_slack,
        worst_hold_slack: report.worst_hold_slack,
        critical_path: report.critical_path.iter().map(|i| i.to_string()).collect(),
        endpoints: report
            .endpoints
            .iter()
            .map(|(ep, t)| (ep.to_string(), t.slack))
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct VerdictJson {
    pub name: String,
    pub status: String,
    pub area_frac: f64,
    pub power_frac: f64,
    pub setup_slack_delta: f64,
    pub sc_gain: f64,
}

pub fn verdict_json(v: &Verdict) -> VerdictJson {
    VerdictJson {
        name: v.name.clone(),
        status: v.status.tag().to_string(),
        area_frac: v.report.area_frac,
        power_frac: v.report.power_frac,
        setup_slack_delta: v.report.setup_slack_delta,
        sc_gain: v.report.sc_gain,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EcoRoundJson {
    pub index: usize,
    pub root: String,
    pub verdict: String,
    pub tps_before: f64,
    pub tps_after: f64,
    pub wns_before: f64,
    pub wns_after: f64,
    pub sc_numerator: usize,
    pub sc_denominator: usize,
    pub density_after: f64,
    pub snapshot: String,
}

pub fn eco_round_json(round: &EcoRound, snapshot: &str) -> EcoRoundJson {
    EcoRoundJson {
        index: round.index,
        root: round.root.to_string(),
        verdict: round.verdict.tag().to_string(),
        tps_before: round.tps_before,
        tps_after: round.tps_after,
        wns_before: round.wns_before,
        wns_after: round.wns_after,
        sc_numerator: round.sc_after.0,
        sc_denominator: round.sc_after.1,
        density_after: round.density_after,
        snapshot: snapshot.to_string(),
    }
}

/// Run-summary analog of the per-design hardening table: coverage before
/// and after, monitor counts, and what stopped the loop.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct HardenSummary {
    pub sc_before_numerator: usize,
    pub sc_before_denominator: usize,
    pub sc_total_numerator: usize,
    pub sc_total_denominator: usize,
    pub sc_added: f64,
    pub monitor_nodes: usize,
    pub monitors_applied: usize,
    pub monitors_ignored: usize,
    pub monitors_total: usize,
    pub preventing_factor: String,
}

pub fn harden_summary(result: &EcoResult, sc_before: (usize, usize)) -> HardenSummary {
    let sc_total = result
        .rounds
        .iter()
        .rev()
        .find(|r| r.verdict == gatemon_core::eco::RoundVerdict::Accepted)
        .map(|r| r.sc_after)
        .unwrap_or(sc_before);
    let before = sc_before.0 as f64 / sc_before.1.max(1) as f64;
    let total = sc_total.0 as f64 / sc_total.1.max(1) as f64;
    HardenSummary {
        sc_before_numerator: sc_before.0,
        sc_before_denominator: sc_before.1,
        sc_total_numerator: sc_total.0,
        sc_total_denominator: sc_total.1,
        sc_added: total - before,
        monitor_nodes: result.monitor_instances(),
        monitors_applied: result.applied(),
        monitors_ignored: result.ignored(),
        monitors_total: result.rounds.len(),
        preventing_factor: result.preventing.tag().to_string(),
    }
}

pub fn harden_summary_csv(s: &HardenSummary) -> String {
    format!(
        "sc_before,sc_total,sc_added,monitor_nodes,applied,ignored,total,preventing_factor\n\
         {}/{},{}/{},{:.6},{},{},{},{},{}\n",
        s.sc_before_numerator,
        s.sc_before_denominator,
        s.sc_total_numerator,
        s.sc_total_denominator,
        s.sc_added,
        s.monitor_nodes,
        s.monitors_applied,
        s.monitors_ignored,
        s.monitors_total,
        s.preventing_factor
    )
}

/// Physical-overhead analog of the area/power/wirelength delta table.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct OverheadSummary {
    pub area_before: f64,
    pub area_after: f64,
    pub area_delta_pct: f64,
    pub power_before: f64,
    pub power_after: f64,
    pub power_delta_pct: f64,
    pub density_before: f64,
    pub density_after: f64,
    pub hpwl_before: f64,
    pub hpwl_after: f64,
    pub hpwl_delta_pct: f64,
    pub wns_after: f64,
    pub tps_after: f64,
}

pub fn overhead_summary_csv(s: &OverheadSummary) -> String {
    format!(
        "metric,before,after,delta_pct\n\
         area,{:.6},{:.6},{:.4}\n\
         power,{:.6},{:.6},{:.4}\n\
         density,{:.6},{:.6},\n\
         hpwl,{:.6},{:.6},{:.4}\n",
        s.area_before,
        s.area_after,
        s.area_delta_pct,
        s.power_before,
        s.power_after,
        s.power_delta_pct,
        s.density_before,
        s.density_after,
        s.hpwl_before,
        s.hpwl_after,
        s.hpwl_delta_pct
    )
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DetectionJson {
    pub target: String,
    pub cycles: usize,
    pub activations: usize,
    pub detections: usize,
    pub false_positives: usize,
    pub detection_rate: f64,
    pub latency_histogram: BTreeMap<usize, usize>,
}

pub fn detection_json(target: &str, r: &DetectionReport) -> DetectionJson {
    DetectionJson {
        target: target.to_string(),
        cycles: r.cycles,
        activations: r.activations,
        detections: r.detections,
        false_positives: r.false_positives,
        detection_rate: r.detection_rate(),
        latency_histogram: r.latency_histogram.clone(),
    }
}

/// Stable pretty-printed JSON with a trailing newline, so repeated runs
/// produce byte-identical files.
pub fn to_json_string<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}
