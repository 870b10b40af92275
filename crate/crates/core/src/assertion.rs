//! Assertion binding and the sequential selection loop: each checker is
//! merged under a name prefix, measured for area/power/timing overhead and
//! coverage gain against the currently accepted set, and kept or rejected.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::coverage::{security_coverage, CoverageError, CoverageMap, CoverageMode};
use crate::library::{CellLibrary, LibraryError};
use crate::netlist::{Diagnostic, InstId, NetId, Netlist, NetlistError};
use crate::sta::{compute_timing, StaError};

#[derive(Debug, Error, PartialEq)]
pub enum AssertionError {
    #[error("checker input {0} has no port-map entry")]
    UnmappedPort(String),
    #[error("port map targets unknown design net {0}")]
    UnresolvedPort(String),
    #[error("port map names {0}, which is not a checker input")]
    NotACheckerInput(String),
    #[error("checker must expose exactly one fire output, found {0}")]
    BadFireCount(usize),
    #[error("checker is clocked but neither the port map nor the design provides a clock")]
    NoClock,
    #[error("binding {0} introduces a combinational loop")]
    CombinationalLoop(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Sta(#[from] StaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AssertionStatus {
    Candidate,
    Accepted,
    RejectedOverhead,
    RejectedSc,
}

impl AssertionStatus {
    pub fn tag(&self) -> &'static str {
        match self {
            AssertionStatus::Candidate => "candidate",
            AssertionStatus::Accepted => "accepted",
            AssertionStatus::RejectedOverhead => "rejected-overhead",
            AssertionStatus::RejectedSc => "rejected-sc",
        }
    }
}

/// A pre-synthesized checker plus the wiring that attaches it to the
/// design. `port_map` sends each checker primary input to a design net.
#[derive(Debug, Clone, PartialEq)]
pub struct AssertionCandidate {
    pub name: String,
    pub checker: Netlist,
    pub port_map: BTreeMap<String, NetId>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecisionBasis {
    PerAssertion,
    DesignTotal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionConfig {
    pub max_area_frac: f64,
    pub max_power_frac: f64,
    /// Per-assertion minimum SC gain; 0 disables the check.
    pub min_sc_gain: f64,
    /// Design-level SC target; required for the design-total basis.
    pub sc_target: Option<f64>,
    pub basis: DecisionBasis,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            max_area_frac: 0.20,
            max_power_frac: 0.20,
            min_sc_gain: 0.0,
            sc_target: None,
            basis: DecisionBasis::PerAssertion,
        }
    }
}

/// Overheads and coverage gain of one candidate against a baseline that
/// already holds the previously accepted checkers.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateReport {
    pub area_frac: f64,
    pub power_frac: f64,
    pub setup_slack_delta: f64,
    /// Worst setup slack of the design with the candidate bound.
    pub wns_after: f64,
    pub sc_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub status: AssertionStatus,
    pub report: CandidateReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionOutcome {
    pub netlist: Netlist,
    pub verdicts: Vec<Verdict>,
}

/// True when every prefixed checker instance already exists in the design,
/// which is how a re-run recognizes its own output.
pub fn already_bound(design: &Netlist, candidate: &AssertionCandidate) -> bool {
    !candidate.checker.instances.is_empty()
        && candidate.checker.instances.keys().all(|id| {
            design.instances.contains_key(&InstId(format!("{}.{id}", candidate.name)))
        })
}

/// Merge the checker into the design. Checker instances and internal nets
/// take a `<name>.` prefix; checker inputs resolve through the port map;
/// the checker's single primary output becomes an `assert_out` net.
pub fn bind_assertion(
    design: &Netlist,
    candidate: &AssertionCandidate,
    library: &CellLibrary,
) -> Result<Netlist, AssertionError> {
    let checker = &candidate.checker;
    if checker.primary_outputs.len() != 1 {
        return Err(AssertionError::BadFireCount(checker.primary_outputs.len()));
    }
    for pin in candidate.port_map.keys() {
        let known = checker.primary_inputs.iter().any(|n| n.as_str() == pin)
            || checker.clock.as_ref().is_some_and(|c| c.as_str() == pin);
        if !known {
            return Err(AssertionError::NotACheckerInput(pin.clone()));
        }
    }

    let mut net_map: BTreeMap<&NetId, NetId> = BTreeMap::new();
    for pi in &checker.primary_inputs {
        let target = candidate
            .port_map
            .get(pi.as_str())
            .ok_or_else(|| AssertionError::UnmappedPort(pi.0.clone()))?;
        if !design.nets.contains_key(target) {
            return Err(AssertionError::UnresolvedPort(target.0.clone()));
        }
        net_map.insert(pi, target.clone());
    }
    if let Some(ck) = &checker.clock {
        let target = match candidate.port_map.get(ck.as_str()) {
            Some(t) => t.clone(),
            None => design.clock.clone().ok_or(AssertionError::NoClock)?,
        };
        if !design.nets.contains_key(&target) {
            return Err(AssertionError::UnresolvedPort(target.0.clone()));
        }
        net_map.insert(ck, target);
    }

    let rename = |net: &NetId, map: &BTreeMap<&NetId, NetId>| -> NetId {
        map.get(net).cloned().unwrap_or_else(|| NetId(format!("{}.{net}", candidate.name)))
    };

    let mut out = design.clone();
    for (id, inst) in &checker.instances {
        let inputs: Vec<(String, NetId)> =
            inst.inputs.iter().map(|(p, n)| (p.clone(), rename(n, &net_map))).collect();
        out.add_instance(
            InstId(format!("{}.{id}", candidate.name)),
            &inst.cell_type,
            inputs,
            rename(&inst.output, &net_map),
        )?;
    }
    let fire = rename(&checker.primary_outputs[0], &net_map);
    out.flag_assert_out(fire);

    if out
        .validate(library)
        .iter()
        .any(|d| matches!(d, Diagnostic::CombinationalCycle { .. }))
    {
        return Err(AssertionError::CombinationalLoop(candidate.name.clone()));
    }
    Ok(out)
}

/// Covered-union size and universe size under structural coverage; an
/// assertion-free design scores (0, n).
fn sc_counts(netlist: &Netlist, library: &CellLibrary) -> Result<(usize, usize), AssertionError> {
    if netlist.instances.is_empty() {
        return Ok((0, 0));
    }
    let map = CoverageMap::analyze(netlist, library, CoverageMode::Structural, 0)?;
    let report = security_coverage(&map)?;
    Ok((report.covered, report.sc_denominator))
}

fn frac(before: f64, after: f64) -> f64 {
    let delta = after - before;
    if delta == 0.0 {
        0.0
    } else if before > 0.0 {
        delta / before
    } else {
        f64::INFINITY
    }
}

fn measure(
    baseline: &Netlist,
    bound: &Netlist,
    library: &CellLibrary,
    clock_period: f64,
) -> Result<CandidateReport, AssertionError> {
    let r0 = baseline.area_power_summary(library)?;
    let r1 = bound.area_power_summary(library)?;
    let t0 = compute_timing(baseline, library, None, clock_period)?;
    let t1 = compute_timing(bound, library, None, clock_period)?;
    let (c0, _) = sc_counts(baseline, library)?;
    // Gain counts newly covered *baseline* nodes over the with-candidate
    // universe; a checker protecting only its own cells gains nothing.
    let u1 = bound.instances.len();
    let sc_gain = if u1 == 0 {
        0.0
    } else {
        let map = CoverageMap::analyze(bound, library, CoverageMode::Structural, 0)?;
        let c1 = map
            .covered_union()
            .iter()
            .filter(|i| baseline.instances.contains_key(*i))
            .count();
        (c1 as f64 - c0 as f64) / u1 as f64
    };
    Ok(CandidateReport {
        area_frac: frac(r0.area, r1.area),
        power_frac: frac(r0.power, r1.power),
        setup_slack_delta: t1.worst_setup_slack - t0.worst_setup_slack,
        wns_after: t1.worst_setup_slack,
        sc_gain,
    })
}

/// Overhead and SC-gain report for one candidate against the design as
/// given (previously accepted checkers stay bound in `design`).
pub fn evaluate_candidate(
    design: &Netlist,
    candidate: &AssertionCandidate,
    library: &CellLibrary,
    clock_period: f64,
) -> Result<CandidateReport, AssertionError> {
    let bound = bind_assertion(design, candidate, library)?;
    measure(design, &bound, library, clock_period)
}

/// One pass over the candidates in input order. A candidate is kept iff
/// its overhead fractions stay within the config bounds, the bound design
/// still meets timing, and the SC criterion of the active basis holds.
pub fn select_assertions(
    design: &Netlist,
    candidates: &[AssertionCandidate],
    config: &SelectionConfig,
    library: &CellLibrary,
    clock_period: f64,
) -> Result<SelectionOutcome, AssertionError> {
    let mut current = design.clone();
    let mut verdicts = Vec::with_capacity(candidates.len());
    for cand in candidates {
        if already_bound(&current, cand) {
            verdicts.push(Verdict {
                name: cand.name.clone(),
                status: AssertionStatus::Accepted,
                report: CandidateReport {
                    area_frac: 0.0,
                    power_frac: 0.0,
                    setup_slack_delta: 0.0,
                    wns_after: compute_timing(&current, library, None, clock_period)?
                        .worst_setup_slack,
                    sc_gain: 0.0,
                },
            });
            continue;
        }
        let bound = bind_assertion(&current, cand, library)?;
        let report = measure(&current, &bound, library, clock_period)?;

        let status = if report.area_frac > config.max_area_frac
            || report.power_frac > config.max_power_frac
            || report.wns_after < 0.0
        {
            AssertionStatus::RejectedOverhead
        } else {
            match config.basis {
                DecisionBasis::PerAssertion => {
                    if config.min_sc_gain > 0.0 && report.sc_gain < config.min_sc_gain {
                        AssertionStatus::RejectedSc
                    } else {
                        AssertionStatus::Accepted
                    }
                }
                DecisionBasis::DesignTotal => {
                    let target = config.sc_target.unwrap_or(1.0);
                    let (c, u) = sc_counts(&current, library)?;
                    let satisfied = u > 0 && c as f64 / u as f64 >= target;
                    if satisfied {
                        AssertionStatus::RejectedSc
                    } else {
                        AssertionStatus::Accepted
                    }
                }
            }
        };
        if status == AssertionStatus::Accepted {
            current = bound;
        }
        verdicts.push(Verdict { name: cand.name.clone(), status, report });
    }
    Ok(SelectionOutcome { netlist: current, verdicts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{Cell, LogicFn, Pin, PinDir};
    use alloc::vec;

    fn lib() -> CellLibrary {
        let mut lib = CellLibrary::default();
        let pin = |n: &str, d| Pin { name: n.into(), dir: d };
        for (name, f, arity) in
            [("INV", LogicFn::Inv, 1), ("AND2", LogicFn::And, 2), ("XOR2", LogicFn::Xor, 2)]
        {
            let mut pins: Vec<Pin> =
                ["A", "B"][..arity].iter().map(|n| pin(n, PinDir::Input)).collect();
            pins.push(pin("Y", PinDir::Output));
            lib.add_cell(Cell {
                name: name.into(),
                function: f,
                area: 2.0,
                width: 2,
                power: 0.05,
                delay: 0.1,
                load: 0.01,
                pins,
            })
            .unwrap();
        }
        lib
    }

    /// in -> g1(INV) -> y
    fn one_gate_design() -> Netlist {
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "y".into())
            .unwrap();
        nl.declare_output("y".into());
        nl
    }

    /// One-gate checker watching net `w`: fire = INV(w).
    fn inv_checker(watch: &str) -> AssertionCandidate {
        let mut ck = Netlist::new();
        ck.declare_input("w".into()).unwrap();
        ck.add_instance("c1".into(), "INV", vec![("A".into(), "w".into())], "fire".into())
            .unwrap();
        ck.declare_output("fire".into());
        AssertionCandidate {
            name: "a0".into(),
            checker: ck,
            port_map: [("w".into(), NetId::from(watch))].into(),
        }
    }

    #[test]
    fn bind_one_gate_checker() {
        let lib = lib();
        let design = one_gate_design();
        let bound = bind_assertion(&design, &inv_checker("y"), &lib).unwrap();
        assert_eq!(bound.instances.len(), 2);
        assert_eq!(bound.assert_outs.len(), 1);
        assert!(bound.assert_outs.contains(&NetId::from("a0.fire")));
        assert!(bound.instances.contains_key(&InstId::from("a0.c1")));
    }

    #[test]
    fn missing_design_net_is_an_error() {
        let lib = lib();
        let design = one_gate_design();
        let mut cand = inv_checker("y");
        cand.port_map.insert("w".into(), "q".into());
        assert_eq!(
            bind_assertion(&design, &cand, &lib),
            Err(AssertionError::UnresolvedPort("q".into()))
        );
        let mut unmapped = inv_checker("y");
        unmapped.port_map.clear();
        assert_eq!(
            bind_assertion(&design, &unmapped, &lib),
            Err(AssertionError::UnmappedPort("w".into()))
        );
    }

    #[test]
    fn empty_checker_has_zero_deltas() {
        let lib = lib();
        let design = one_gate_design();
        // Fire is a passthrough of the watched net: no instances added.
        let mut ck = Netlist::new();
        ck.declare_input("w".into()).unwrap();
        ck.declare_output("w".into());
        let cand = AssertionCandidate {
            name: "nop".into(),
            checker: ck,
            port_map: [("w".into(), NetId::from("y"))].into(),
        };
        let report = evaluate_candidate(&design, &cand, &lib, 10.0).unwrap();
        assert_eq!(report.area_frac, 0.0);
        assert_eq!(report.power_frac, 0.0);
        assert_eq!(report.setup_slack_delta, 0.0);
    }

    #[test]
    fn checker_area_fraction_is_relative_to_baseline() {
        let lib = lib();
        let mut design = Netlist::new();
        design.declare_input("p".into()).unwrap();
        let mut prev = NetId::from("p");
        for i in 0..10 {
            let out = NetId(format!("n{i}"));
            design
                .add_instance(
                    InstId(format!("g{i}")),
                    "INV",
                    vec![("A".into(), prev.clone())],
                    out.clone(),
                )
                .unwrap();
            prev = out;
        }
        design.declare_output(prev.clone());
        let report = evaluate_candidate(&design, &inv_checker("n0"), &lib, 100.0).unwrap();
        assert!((report.area_frac - 0.1).abs() < 1e-12);
        assert!((report.power_frac - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_area_budget_rejects_everything() {
        let lib = lib();
        let design = one_gate_design();
        let config =
            SelectionConfig { max_area_frac: 0.0, ..SelectionConfig::default() };
        let out =
            select_assertions(&design, &[inv_checker("y")], &config, &lib, 10.0).unwrap();
        assert_eq!(out.verdicts[0].status, AssertionStatus::RejectedOverhead);
        assert_eq!(out.netlist, design);
    }

    #[test]
    fn redundant_candidate_rejected_on_sc_gain() {
        let lib = lib();
        let design = one_gate_design();
        let first = inv_checker("y");
        let mut second = inv_checker("y");
        second.name = "a1".into();
        let config = SelectionConfig {
            min_sc_gain: 0.05,
            max_area_frac: 1.0,
            max_power_frac: 1.0,
            ..SelectionConfig::default()
        };
        let out =
            select_assertions(&design, &[first, second], &config, &lib, 10.0).unwrap();
        assert_eq!(out.verdicts[0].status, AssertionStatus::Accepted);
        // The second checker watches a net the first already covers, so it
        // adds no newly covered baseline node.
        assert_eq!(out.verdicts[1].status, AssertionStatus::RejectedSc);
    }

    #[test]
    fn selection_is_idempotent() {
        let lib = lib();
        let design = one_gate_design();
        let cands = vec![inv_checker("y")];
        let config = SelectionConfig {
            max_area_frac: 1.0,
            max_power_frac: 1.0,
            ..SelectionConfig::default()
        };
        let once = select_assertions(&design, &cands, &config, &lib, 10.0).unwrap();
        assert_eq!(once.verdicts[0].status, AssertionStatus::Accepted);
        let twice = select_assertions(&once.netlist, &cands, &config, &lib, 10.0).unwrap();
        assert_eq!(twice.netlist, once.netlist);
        assert_eq!(twice.verdicts[0].status, AssertionStatus::Accepted);
    }
}
