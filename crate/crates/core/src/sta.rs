//! Static timing analysis over the placed netlist: longest/shortest path
//! arrivals between sequential boundaries, per-endpoint setup slack, total
//! positive slack, and a simplified hold check.
//!
//! Delay model: gate delay = intrinsic + load * fanout; wire delay =
//! kappa * Manhattan distance between driver and sink placements (kappa
//! from the library header). Without a layout, wire delay is zero, which
//! is the pre-placement mode the assertion selection loop runs in.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::layout::{port_positions, Layout};
use crate::library::{CellLibrary, LogicFn};
use crate::netlist::{Driver, InstId, NetId, Netlist};

#[derive(Debug, Error, PartialEq)]
pub enum StaError {
    #[error("netlist contains a combinational cycle")]
    CombinationalCycle,
    #[error("instance {0} is not placed")]
    Unplaced(String),
    #[error("unknown cell type {0}")]
    UnknownCell(String),
    #[error("clock period must be positive")]
    BadClock,
    #[error("timing reports have different clock periods")]
    ClockMismatch,
    #[error("endpoint {0} missing from the after-report")]
    MissingEndpoint(String),
}

/// A timing endpoint: a DFF data pin or an observable output net
/// (primary output or flagged assertion/fire net).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Endpoint {
    FlopData(InstId),
    OutputNet(NetId),
}

impl core::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Endpoint::FlopData(i) => write!(f, "ff:{i}"),
            Endpoint::OutputNet(n) => write!(f, "out:{n}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointTiming {
    pub arrival: f64,
    pub slack: f64,
    pub min_arrival: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub clock_period: f64,
    pub endpoints: BTreeMap<Endpoint, EndpointTiming>,
    pub worst_setup_slack: f64,
    pub total_positive_slack: f64,
    pub worst_hold_slack: f64,
    pub critical_path: Vec<InstId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingDelta {
    pub total_positive_slack: f64,
    pub worst_setup_slack: f64,
    pub worst_hold_slack: f64,
}

struct Arrivals {
    /// (max arrival, min arrival) at each instance output, and the argmax
    /// predecessor for critical-path backtracking.
    max: BTreeMap<InstId, f64>,
    min: BTreeMap<InstId, f64>,
    pred: BTreeMap<InstId, Option<InstId>>,
}

pub fn compute_timing(
    netlist: &Netlist,
    library: &CellLibrary,
    layout: Option<&Layout>,
    clock_period: f64,
) -> Result<TimingReport, StaError> {
    if clock_period <= 0.0 {
        return Err(StaError::BadClock);
    }
    let ports = layout.map(|l| port_positions(netlist, l));
    let pos = |inst: &InstId| -> Result<Option<(f64, f64)>, StaError> {
        match layout {
            None => Ok(None),
            Some(l) => {
                l.position(inst).map(Some).ok_or_else(|| StaError::Unplaced(inst.0.clone()))
            }
        }
    };
    let wire = |from: Option<(f64, f64)>, to: Option<(f64, f64)>| -> f64 {
        match (from, to) {
            (Some((x0, y0)), Some((x1, y1))) => {
                library.wire_delay * (libm::fabs(x1 - x0) + libm::fabs(y1 - y0))
            }
            _ => 0.0,
        }
    };
    let fanout = |net: &NetId| -> f64 {
        let sinks = netlist.nets.get(net).map(|n| n.sinks.len()).unwrap_or(0);
        let po = usize::from(netlist.primary_outputs.contains(net));
        (sinks + po).max(1) as f64
    };
    let cell_of = |inst: &InstId| -> Result<&crate::library::Cell, StaError> {
        let ty = &netlist.instances[inst].cell_type;
        library.cells.get(ty).ok_or_else(|| StaError::UnknownCell(ty.clone()))
    };

    // Arrival of a net seen at a sink position: driver arrival + wire.
    // Sources: primary inputs arrive at 0 at their port; flop outputs at
    // clk-to-q (the DFF's gate delay).
    let mut arr = Arrivals { max: BTreeMap::new(), min: BTreeMap::new(), pred: BTreeMap::new() };
    let mut remaining: Vec<&InstId> = Vec::new();
    for (id, _) in &netlist.instances {
        let cell = cell_of(id)?;
        if cell.function == LogicFn::Dff {
            let d = cell.delay + cell.load * fanout(&netlist.instances[id].output);
            arr.max.insert(id.clone(), d);
            arr.min.insert(id.clone(), d);
            arr.pred.insert(id.clone(), None);
        } else {
            remaining.push(id);
        }
    }

    // Arrival contribution of one input net at a given sink.
    let input_arrival = |arr: &Arrivals,
                         net: &NetId,
                         sink_pos: Option<(f64, f64)>|
     -> Result<Option<(f64, f64, Option<InstId>)>, StaError> {
        match netlist.nets.get(net).and_then(|n| n.driver.as_ref()) {
            Some(Driver::PrimaryInput) => {
                let ppos = ports.as_ref().and_then(|p| p.get(net).copied());
                let w = wire(ppos, sink_pos);
                Ok(Some((w, w, None)))
            }
            Some(Driver::Inst(drv)) => match arr.max.get(drv) {
                None => Ok(None), // not yet computed
                Some(&mx) => {
                    let w = wire(pos(drv)?, sink_pos);
                    Ok(Some((mx + w, arr.min[drv] + w, Some(drv.clone()))))
                }
            },
            None => Ok(Some((0.0, 0.0, None))),
        }
    };

    // Relaxation over the combinational DAG; ready gates are peeled off in
    // rounds, which doubles as cycle detection.
    while !remaining.is_empty() {
        let mut progressed = false;
        let mut next = Vec::with_capacity(remaining.len());
        'gates: for id in remaining {
            let inst = &netlist.instances[id];
            let sink_pos = pos(id)?;
            let mut mx = 0.0f64;
            let mut mn = f64::MAX;
            let mut best_pred = None;
            for (pin, net) in &inst.inputs {
                let _ = pin;
                match input_arrival(&arr, net, sink_pos)? {
                    None => {
                        next.push(id);
                        continue 'gates;
                    }
                    Some((a_max, a_min, pred)) => {
                        if a_max >= mx {
                            mx = a_max;
                            best_pred = pred;
                        }
                        mn = mn.min(a_min);
                    }
                }
            }
            if inst.inputs.is_empty() {
                mn = 0.0;
            }
            let cell = cell_of(id)?;
            let d = cell.delay + cell.load * fanout(&inst.output);
            arr.max.insert(id.clone(), mx + d);
            arr.min.insert(id.clone(), mn + d);
            arr.pred.insert(id.clone(), best_pred);
            progressed = true;
        }
        if !progressed && !next.is_empty() {
            return Err(StaError::CombinationalCycle);
        }
        remaining = next;
    }

    // Endpoints: DFF D pins, primary outputs, and flagged output nets.
    let mut endpoints = BTreeMap::new();
    let mut worst_ep: Option<(Endpoint, Option<InstId>)> = None;
    let mut record =
        |ep: Endpoint, amax: f64, amin: f64, from: Option<InstId>, worst: &mut Option<_>| {
            let slack = clock_period - amax;
            let cur = endpoints.get(&ep).map(|t: &EndpointTiming| t.slack);
            if cur.map(|s| slack < s).unwrap_or(true) {
                endpoints.insert(
                    ep.clone(),
                    EndpointTiming { arrival: amax, slack, min_arrival: amin },
                );
            }
            let is_worse = match worst {
                None => true,
                Some((prev, _)) => endpoints[&ep].slack < endpoints[&*prev].slack,
            };
            if is_worse {
                *worst = Some((ep, from));
            }
        };

    for (id, inst) in &netlist.instances {
        if cell_of(id)?.function != LogicFn::Dff {
            continue;
        }
        let d_net = inst.input_net("D").expect("DFF has a D pin");
        let sink_pos = pos(id)?;
        if let Some((amax, amin, pred)) = input_arrival(&arr, d_net, sink_pos)? {
            record(Endpoint::FlopData(id.clone()), amax, amin, pred, &mut worst_ep);
        }
    }
    let mut observed: Vec<NetId> = netlist.primary_outputs.clone();
    for a in &netlist.assert_outs {
        if !observed.contains(a) {
            observed.push(a.clone());
        }
    }
    for net in observed {
        let ppos = ports.as_ref().and_then(|p| p.get(&net).copied());
        if let Some((amax, amin, pred)) = input_arrival(&arr, &net, ppos)? {
            record(Endpoint::OutputNet(net.clone()), amax, amin, pred, &mut worst_ep);
        }
    }

    let mut critical_path = Vec::new();
    if let Some((_, mut cur)) = worst_ep {
        while let Some(inst) = cur {
            critical_path.push(inst.clone());
            cur = arr.pred.get(&inst).cloned().flatten();
        }
        critical_path.reverse();
    }

    let worst_setup_slack =
        endpoints.values().map(|t| t.slack).fold(f64::MAX, f64::min).min(clock_period);
    let total_positive_slack = endpoints.values().map(|t| t.slack.max(0.0)).sum();
    let worst_hold_slack = endpoints
        .values()
        .map(|t| t.min_arrival - library.hold)
        .fold(f64::MAX, f64::min)
        .min(clock_period);

    Ok(TimingReport {
        clock_period,
        endpoints,
        worst_setup_slack,
        total_positive_slack,
        worst_hold_slack,
        critical_path,
    })
}

/// Differences after minus before; negative means degradation. The
/// before-report's endpoints must all survive into the after-report.
pub fn timing_delta(before: &TimingReport, after: &TimingReport) -> Result<TimingDelta, StaError> {
    if before.clock_period != after.clock_period {
        return Err(StaError::ClockMismatch);
    }
    for ep in before.endpoints.keys() {
        if !after.endpoints.contains_key(ep) {
            return Err(StaError::MissingEndpoint(format!("{ep}")));
        }
    }
    Ok(TimingDelta {
        total_positive_slack: after.total_positive_slack - before.total_positive_slack,
        worst_setup_slack: after.worst_setup_slack - before.worst_setup_slack,
        worst_hold_slack: after.worst_hold_slack - before.worst_hold_slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{Cell, Pin, PinDir};
    use alloc::vec;

    fn lib(kappa: f64) -> CellLibrary {
        let mut lib = CellLibrary::default();
        lib.wire_delay = kappa;
        let pin = |n: &str, d| Pin { name: n.into(), dir: d };
        lib.add_cell(Cell {
            name: "INV".into(),
            function: LogicFn::Inv,
            area: 0.56,
            width: 2,
            power: 0.02,
            delay: 0.1,
            load: 0.0,
            pins: vec![pin("A", PinDir::Input), pin("Y", PinDir::Output)],
        })
        .unwrap();
        lib.add_cell(Cell {
            name: "DFF".into(),
            function: LogicFn::Dff,
            area: 1.68,
            width: 6,
            power: 0.08,
            delay: 0.15,
            load: 0.0,
            pins: vec![
                pin("D", PinDir::Input),
                pin("CK", PinDir::Input),
                pin("Q", PinDir::Output),
            ],
        })
        .unwrap();
        lib
    }

    #[test]
    fn single_inverter_slack() {
        let lib = lib(0.0);
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "out".into())
            .unwrap();
        nl.declare_output("out".into());
        let rep = compute_timing(&nl, &lib, None, 1.0).unwrap();
        assert!((rep.worst_setup_slack - 0.9).abs() < 1e-12);
        assert!((rep.total_positive_slack - 0.9).abs() < 1e-12);
        assert_eq!(rep.critical_path, vec![InstId::from("g1")]);
    }

    #[test]
    fn flop_with_no_fanout_keeps_full_period() {
        let lib = lib(0.0);
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.set_clock("clk".into()).unwrap();
        nl.add_instance(
            "ff".into(),
            "DFF",
            vec![("D".into(), "in".into()), ("CK".into(), "clk".into())],
            "q".into(),
        )
        .unwrap();
        let rep = compute_timing(&nl, &lib, None, 2.0).unwrap();
        // The only endpoint is ff's D pin, fed straight from the port.
        let t = rep.endpoints[&Endpoint::FlopData("ff".into())];
        assert!((t.slack - 2.0).abs() < 1e-12);
    }

    #[test]
    fn identical_reports_have_zero_delta() {
        let lib = lib(0.0);
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "out".into())
            .unwrap();
        nl.declare_output("out".into());
        let a = compute_timing(&nl, &lib, None, 1.0).unwrap();
        let d = timing_delta(&a, &a).unwrap();
        assert_eq!(d.total_positive_slack, 0.0);
    }

    #[test]
    fn missing_endpoint_is_an_error() {
        let lib = lib(0.0);
        let mut big = Netlist::new();
        big.declare_input("in".into()).unwrap();
        big.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "out".into())
            .unwrap();
        big.declare_output("out".into());
        let mut small = Netlist::new();
        small.declare_input("in".into()).unwrap();
        small.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "zz".into())
            .unwrap();
        small.declare_output("zz".into());
        let before = compute_timing(&big, &lib, None, 1.0).unwrap();
        let after = compute_timing(&small, &lib, None, 1.0).unwrap();
        assert!(matches!(timing_delta(&before, &after), Err(StaError::MissingEndpoint(_))));
    }

    #[test]
    fn longer_gate_delay_never_improves_slack() {
        let mut lib = lib(0.0);
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "n1".into())
            .unwrap();
        nl.add_instance("g2".into(), "INV", vec![("A".into(), "n1".into())], "out".into())
            .unwrap();
        nl.declare_output("out".into());
        let a = compute_timing(&nl, &lib, None, 1.0).unwrap();
        lib.cells.get_mut("INV").unwrap().delay = 0.2;
        let b = compute_timing(&nl, &lib, None, 1.0).unwrap();
        for (ep, t) in &b.endpoints {
            assert!(t.slack <= a.endpoints[ep].slack + 1e-12);
        }
    }
}
