//! Incremental hardening loop: ranked monitor candidates are applied one
//! at a time, each into a fresh copy of the accepted state, and kept only
//! while timing holds up under the degrading-factor budget.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::coverage::{security_coverage, CoverageError, CoverageMap, CoverageMode};
use crate::layout::{insert_cells, InsertOutcome, Layout, LayoutError};
use crate::library::{CellLibrary, LibraryError, LogicFn};
use crate::monitor::{synthesize_monitor, Monitor, MonitorCandidate, MonitorError};
use crate::netlist::{InstId, NetId, Netlist, NetlistError};
use crate::sta::{compute_timing, StaError, TimingReport};

#[derive(Debug, Error, PartialEq)]
pub enum EcoError {
    #[error(transparent)]
    Monitor(#[from] MonitorError),
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Sta(#[from] StaError),
    #[error("library has no {0} cell for the alert tree")]
    MissingAlertCell(&'static str),
    #[error("degrading factor fraction must be in (0, 1], got {0}")]
    BadDfFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcoConfig {
    /// Fraction of the baseline total positive slack a single accepted
    /// round may consume.
    pub df_fraction: f64,
    pub max_rounds: Option<usize>,
    pub window_w: usize,
    pub window_h: usize,
}

impl Default for EcoConfig {
    fn default() -> Self {
        EcoConfig { df_fraction: 0.25, max_rounds: None, window_w: 20, window_h: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundVerdict {
    Accepted,
    DiscardedTiming,
    DiscardedDensity,
}

impl RoundVerdict {
    pub fn tag(&self) -> &'static str {
        match self {
            RoundVerdict::Accepted => "accepted",
            RoundVerdict::DiscardedTiming => "discarded-timing",
            RoundVerdict::DiscardedDensity => "discarded-density",
        }
    }
}

/// What finally stopped the loop, in the sense of the run-summary table:
/// `Timing` when at least one candidate was refused for slack, otherwise
/// `Density` (the gap supply, not the timing budget, was the binding
/// constraint — vacuously so when no candidates existed).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreventingFactor {
    Timing,
    Density,
}

impl PreventingFactor {
    pub fn tag(&self) -> &'static str {
        match self {
            PreventingFactor::Timing => "Timing",
            PreventingFactor::Density => "Density",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcoRound {
    pub index: usize,
    pub root: InstId,
    pub verdict: RoundVerdict,
    pub tps_before: f64,
    pub tps_after: f64,
    pub wns_before: f64,
    pub wns_after: f64,
    /// SC of the state after this round's verdict, as an exact rational.
    pub sc_after: (usize, usize),
    pub density_after: f64,
    /// Cumulative-accepted layout after this round; for a discarded round
    /// this is bit-identical to the previous round's.
    pub layout: Layout,
    /// Present only for accepted rounds.
    pub monitor: Option<Monitor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EcoResult {
    pub rounds: Vec<EcoRound>,
    pub netlist: Netlist,
    pub layout: Layout,
    pub baseline_tps: f64,
    pub baseline_wns: f64,
    pub df_absolute: f64,
    pub preventing: PreventingFactor,
}

impl EcoResult {
    pub fn applied(&self) -> usize {
        self.rounds.iter().filter(|r| r.verdict == RoundVerdict::Accepted).count()
    }

    pub fn ignored(&self) -> usize {
        self.rounds.len() - self.applied()
    }

    /// Instances added by accepted monitors (duplicates plus voters),
    /// which is also the count of newly monitor-covered non-original
    /// nodes.
    pub fn monitor_instances(&self) -> usize {
        self.rounds
            .iter()
            .filter_map(|r| r.monitor.as_ref())
            .map(|m| m.duplicates.len() + 1)
            .sum()
    }
}

fn sc_of(netlist: &Netlist, library: &CellLibrary) -> Result<(usize, usize), EcoError> {
    let map = CoverageMap::analyze(netlist, library, CoverageMode::Structural, 0)?;
    let report = security_coverage(&map)?;
    Ok((report.sc_numerator, report.sc_denominator))
}

fn monitor_cells(
    netlist: &Netlist,
    monitor: &Monitor,
    library: &CellLibrary,
) -> Result<Vec<(InstId, usize, f64)>, EcoError> {
    let mut cells = Vec::with_capacity(monitor.duplicates.len() + 1);
    for id in monitor.duplicates.iter().chain(core::iter::once(&monitor.voter)) {
        let cell = library.get(&netlist.instances[id].cell_type)?;
        cells.push((id.clone(), cell.width as usize, cell.area));
    }
    Ok(cells)
}

/// Apply ranked candidates one at a time. A round is accepted iff the new
/// layout still meets setup timing (WNS ≥ 0) and the total-positive-slack
/// drop against the previous accepted round stays within the degrading
/// factor, which is frozen at `df_fraction` of the baseline TPS.
pub fn run_eco(
    netlist: &Netlist,
    layout: &Layout,
    candidates: &[MonitorCandidate],
    config: &EcoConfig,
    library: &CellLibrary,
    clock_period: f64,
) -> Result<EcoResult, EcoError> {
    if !(config.df_fraction > 0.0 && config.df_fraction <= 1.0) {
        return Err(EcoError::BadDfFraction(config.df_fraction));
    }
    let baseline = compute_timing(netlist, library, Some(layout), clock_period)?;
    let df_absolute = config.df_fraction * baseline.total_positive_slack;

    let mut result = EcoResult {
        rounds: Vec::new(),
        netlist: netlist.clone(),
        layout: layout.clone(),
        baseline_tps: baseline.total_positive_slack,
        baseline_wns: baseline.worst_setup_slack,
        df_absolute,
        preventing: PreventingFactor::Density,
    };
    if baseline.total_positive_slack <= 0.0 {
        result.preventing = PreventingFactor::Timing;
        return Ok(result);
    }

    let mut duplicated: BTreeSet<InstId> = BTreeSet::new();
    let mut prev_timing: TimingReport = baseline;
    let mut any_timing_discard = false;

    for (index, cand) in candidates.iter().enumerate() {
        if let Some(max) = config.max_rounds {
            if result.rounds.len() >= max {
                break;
            }
        }
        // Cones are disjoint by construction; this guards against stale
        // candidate lists that overlap an already-applied monitor.
        if cand.cone.iter().any(|i| duplicated.contains(i)) {
            continue;
        }

        let (trial_netlist, monitor) = synthesize_monitor(&result.netlist, cand, library)?;
        let cells = monitor_cells(&trial_netlist, &monitor, library)?;
        let trial_layout = match insert_cells(
            &result.layout,
            &cells,
            &cand.root,
            config.window_w,
            config.window_h,
        )? {
            InsertOutcome::Placed(l) => l,
            InsertOutcome::Infeasible(_) => {
                result.rounds.push(EcoRound {
                    index,
                    root: cand.root.clone(),
                    verdict: RoundVerdict::DiscardedDensity,
                    tps_before: prev_timing.total_positive_slack,
                    tps_after: prev_timing.total_positive_slack,
                    wns_before: prev_timing.worst_setup_slack,
                    wns_after: prev_timing.worst_setup_slack,
                    sc_after: sc_of(&result.netlist, library)?,
                    density_after: result.layout.density(),
                    layout: result.layout.clone(),
                    monitor: None,
                });
                continue;
            }
        };

        let timing = compute_timing(&trial_netlist, library, Some(&trial_layout), clock_period)?;
        let tps_drop = prev_timing.total_positive_slack - timing.total_positive_slack;
        let accept = timing.worst_setup_slack >= 0.0 && tps_drop <= df_absolute;

        if accept {
            duplicated.extend(cand.cone.iter().cloned());
            result.netlist = trial_netlist;
            result.layout = trial_layout;
            result.rounds.push(EcoRound {
                index,
                root: cand.root.clone(),
                verdict: RoundVerdict::Accepted,
                tps_before: prev_timing.total_positive_slack,
                tps_after: timing.total_positive_slack,
                wns_before: prev_timing.worst_setup_slack,
                wns_after: timing.worst_setup_slack,
                sc_after: sc_of(&result.netlist, library)?,
                density_after: result.layout.density(),
                layout: result.layout.clone(),
                monitor: Some(monitor),
            });
            prev_timing = timing;
        } else {
            any_timing_discard = true;
            result.rounds.push(EcoRound {
                index,
                root: cand.root.clone(),
                verdict: RoundVerdict::DiscardedTiming,
                tps_before: prev_timing.total_positive_slack,
                tps_after: timing.total_positive_slack,
                wns_before: prev_timing.worst_setup_slack,
                wns_after: timing.worst_setup_slack,
                sc_after: sc_of(&result.netlist, library)?,
                density_after: result.layout.density(),
                layout: result.layout.clone(),
                monitor: None,
            });
        }
    }

    if any_timing_discard {
        result.preventing = PreventingFactor::Timing;
    }
    Ok(result)
}

/// OR all monitor fire nets into a single `trojan_alert` primary output.
/// Returns the netlist with the tree, the added instances with (width,
/// area) for placement, and the alert net; a design with no monitors is
/// returned unchanged.
pub fn attach_alert_tree(
    netlist: &Netlist,
    library: &CellLibrary,
) -> Result<(Netlist, Vec<(InstId, usize, f64)>, Option<NetId>), EcoError> {
    let fires: Vec<NetId> = netlist.monitor_fires.iter().cloned().collect();
    if fires.is_empty() {
        return Ok((netlist.clone(), Vec::new(), None));
    }
    let alert = NetId::from("trojan_alert");
    let mut out = netlist.clone();
    let mut added = Vec::new();
    let push = |out: &mut Netlist,
                    added: &mut Vec<(InstId, usize, f64)>,
                    idx: usize,
                    func: LogicFn,
                    inputs: Vec<(String, NetId)>,
                    dest: NetId|
     -> Result<(), EcoError> {
        let cell = library
            .cell_with_fn(func)
            .ok_or(EcoError::MissingAlertCell(func.tag()))?;
        let id = InstId(alloc::format!("ALERT{idx}"));
        out.add_instance(id.clone(), &cell.name, inputs, dest)?;
        out.guard_insts.insert(id.clone());
        added.push((id, cell.width as usize, cell.area));
        Ok(())
    };

    if fires.len() == 1 {
        push(
            &mut out,
            &mut added,
            0,
            LogicFn::Buf,
            alloc::vec![("A".into(), fires[0].clone())],
            alert.clone(),
        )?;
    } else {
        let mut acc = fires[0].clone();
        for (k, fire) in fires[1..].iter().enumerate() {
            let dest = if k == fires.len() - 2 {
                alert.clone()
            } else {
                NetId(alloc::format!("alert_t{k}"))
            };
            push(
                &mut out,
                &mut added,
                k,
                LogicFn::Or,
                alloc::vec![("A".into(), acc.clone()), ("B".into(), fire.clone())],
                dest.clone(),
            )?;
            acc = dest;
        }
    }
    out.declare_output(alert.clone());
    out.flag_monitor_fire(alert.clone());
    Ok((out, added, Some(alert)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::{build_floorplan, place};
    use crate::library::{Cell, Pin, PinDir};
    use crate::monitor::find_candidate_cones;
    use alloc::vec;

    fn lib(delay: f64) -> CellLibrary {
        let mut lib = CellLibrary::default();
        let pin = |n: &str, d| Pin { name: n.into(), dir: d };
        for (name, f, arity) in [
            ("INV", LogicFn::Inv, 1),
            ("BUF", LogicFn::Buf, 1),
            ("AND2", LogicFn::And, 2),
            ("OR2", LogicFn::Or, 2),
            ("XOR2", LogicFn::Xor, 2),
        ] {
            let mut pins: Vec<Pin> =
                ["A", "B"][..arity].iter().map(|n| pin(n, PinDir::Input)).collect();
            pins.push(pin("Y", PinDir::Output));
            lib.add_cell(Cell {
                name: name.into(),
                function: f,
                area: 0.56,
                width: 2,
                power: 0.02,
                delay,
                load: 0.0,
                pins,
            })
            .unwrap();
        }
        lib
    }

    /// Covered block: a,b -> c1(AND) -> c2(INV) -> asserted net.
    /// Uncovered chain: e,f -> g1(AND) -> g2(INV) -> out.
    fn fixture() -> Netlist {
        let mut nl = Netlist::new();
        for p in ["a", "b", "e", "f"] {
            nl.declare_input(p.into()).unwrap();
        }
        nl.add_instance(
            "c1".into(),
            "AND2",
            vec![("A".into(), "a".into()), ("B".into(), "b".into())],
            "m1".into(),
        )
        .unwrap();
        nl.add_instance("c2".into(), "INV", vec![("A".into(), "m1".into())], "chk".into())
            .unwrap();
        nl.flag_assert_out("chk".into());
        nl.add_instance(
            "g1".into(),
            "AND2",
            vec![("A".into(), "e".into()), ("B".into(), "f".into())],
            "n1".into(),
        )
        .unwrap();
        nl.add_instance("g2".into(), "INV", vec![("A".into(), "n1".into())], "out".into())
            .unwrap();
        nl.declare_output("out".into());
        nl
    }

    fn candidates(nl: &Netlist, layout: &Layout) -> Vec<MonitorCandidate> {
        let unc: BTreeSet<InstId> = ["g1", "g2"].iter().map(|s| (*s).into()).collect();
        find_candidate_cones(nl, &unc, layout, 30, 2).unwrap()
    }

    #[test]
    fn zero_candidates_end_with_density() {
        let lib = lib(0.1);
        let nl = fixture();
        let layout = place(&nl, &lib, &build_floorplan(&nl, &lib, 0.5).unwrap()).unwrap();
        let r = run_eco(&nl, &layout, &[], &EcoConfig::default(), &lib, 10.0).unwrap();
        assert!(r.rounds.is_empty());
        assert_eq!(r.preventing, PreventingFactor::Density);
        assert_eq!(r.netlist, nl);
        assert_eq!(r.layout, layout);
    }

    #[test]
    fn generous_clock_accepts_the_monitor() {
        let lib = lib(0.1);
        let nl = fixture();
        let layout = place(&nl, &lib, &build_floorplan(&nl, &lib, 0.5).unwrap()).unwrap();
        let cands = candidates(&nl, &layout);
        assert_eq!(cands.len(), 1);
        let r = run_eco(&nl, &layout, &cands, &EcoConfig::default(), &lib, 100.0).unwrap();
        assert_eq!(r.rounds.len(), 1);
        assert_eq!(r.rounds[0].verdict, RoundVerdict::Accepted);
        assert_eq!(r.netlist.instances.len(), nl.instances.len() + 3);
        // Baseline placements survive untouched.
        for (id, p) in &layout.placements {
            assert_eq!(r.layout.placements[id], *p);
        }
        // SC strictly improved: 2/4 -> 7/7.
        assert_eq!(r.rounds[0].sc_after, (7, 7));
    }

    #[test]
    fn tight_clock_discards_on_timing() {
        let lib = lib(0.1);
        let nl = fixture();
        let layout = place(&nl, &lib, &build_floorplan(&nl, &lib, 0.5).unwrap()).unwrap();
        let cands = candidates(&nl, &layout);
        // Baseline critical path is two gates (0.2); voter path adds a
        // third level, so 0.25 passes baseline but fails with the monitor.
        let r = run_eco(&nl, &layout, &cands, &EcoConfig::default(), &lib, 0.25).unwrap();
        assert_eq!(r.rounds.len(), 1);
        assert_eq!(r.rounds[0].verdict, RoundVerdict::DiscardedTiming);
        assert_eq!(r.preventing, PreventingFactor::Timing);
        assert_eq!(r.netlist, nl);
        assert_eq!(r.layout, layout);
        assert!(r.rounds[0].wns_after < 0.0);
    }

    #[test]
    fn packed_window_discards_on_density() {
        let lib = lib(0.1);
        let nl = fixture();
        let layout = place(&nl, &lib, &build_floorplan(&nl, &lib, 0.99).unwrap()).unwrap();
        let cands = candidates(&nl, &layout);
        // A 1-site window over nearly packed rows cannot host three
        // width-2 cells.
        let config = EcoConfig { window_w: 1, window_h: 1, ..EcoConfig::default() };
        let r = run_eco(&nl, &layout, &cands, &config, &lib, 100.0).unwrap();
        assert_eq!(r.rounds.len(), 1);
        assert_eq!(r.rounds[0].verdict, RoundVerdict::DiscardedDensity);
        assert_eq!(r.layout, layout);
    }

    #[test]
    fn alert_tree_aggregates_fires() {
        let lib = lib(0.1);
        let nl = fixture();
        let layout = place(&nl, &lib, &build_floorplan(&nl, &lib, 0.5).unwrap()).unwrap();
        let cands = candidates(&nl, &layout);
        let r = run_eco(&nl, &layout, &cands, &EcoConfig::default(), &lib, 100.0).unwrap();
        let (with_alert, added, alert) = attach_alert_tree(&r.netlist, &lib).unwrap();
        let alert = alert.unwrap();
        assert_eq!(alert, NetId::from("trojan_alert"));
        assert_eq!(added.len(), 1); // single fire -> one buffer
        assert!(with_alert.primary_outputs.contains(&alert));
        assert!(with_alert.monitor_fires.contains(&alert));

        // No monitors -> unchanged.
        let (same, none_added, none) = attach_alert_tree(&nl, &lib).unwrap();
        assert_eq!(same, nl);
        assert!(none_added.is_empty());
        assert!(none.is_none());
    }
}
