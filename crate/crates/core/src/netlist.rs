//! Directed-graph IR for gate-level designs. A "node" throughout the crate
//! is a cell instance; nets connect one driver (primary input or instance
//! output) to any number of sink pins.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use thiserror::Error;

use crate::library::{CellLibrary, LogicFn};

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub String);

        impl $name {
            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.into())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                $name(s)
            }
        }
    };
}

id_type!(InstId);
id_type!(NetId);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Driver {
    PrimaryInput,
    Inst(InstId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub driver: Option<Driver>,
    /// Sink pins as (instance, pin name), in insertion order.
    pub sinks: Vec<(InstId, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub cell_type: String,
    /// Input connections as (pin name, net), in declared pin order.
    pub inputs: Vec<(String, NetId)>,
    pub output: NetId,
}

impl Instance {
    pub fn input_net(&self, pin: &str) -> Option<&NetId> {
        self.inputs.iter().find(|(p, _)| p == pin).map(|(_, n)| n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResourceSummary {
    pub area: f64,
    pub power: f64,
    pub instances: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum NetlistError {
    #[error("net {0} has two drivers")]
    DuplicateDriver(String),
    #[error("duplicate instance id {0}")]
    DuplicateInstance(String),
    #[error("net {0} is never driven")]
    UndrivenNet(String),
    #[error("unknown instance {0}")]
    UnknownInstance(String),
    #[error("unknown net {0}")]
    UnknownNet(String),
    #[error("net {0} is not flagged assert_out")]
    NotAssertOut(String),
}

/// Validation diagnostics, ordered deterministically by instance id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    UnresolvedCell { inst: InstId, cell_type: String },
    CombinationalCycle { insts: Vec<InstId> },
    PinMismatch { inst: InstId, detail: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UnresolvedCell { inst, cell_type } => {
                write!(f, "{inst}: unresolved cell type {cell_type}")
            }
            Diagnostic::CombinationalCycle { insts } => {
                write!(f, "combinational cycle through")?;
                for i in insts {
                    write!(f, " {i}")?;
                }
                Ok(())
            }
            Diagnostic::PinMismatch { inst, detail } => write!(f, "{inst}: {detail}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Netlist {
    pub instances: BTreeMap<InstId, Instance>,
    pub nets: BTreeMap<NetId, Net>,
    pub primary_inputs: Vec<NetId>,
    pub primary_outputs: Vec<NetId>,
    pub clock: Option<NetId>,
    pub assert_outs: BTreeSet<NetId>,
    /// Subset of `assert_outs` driven by DMR voters (and the alert tree).
    /// Fault-free silent, unlike bound checkers whose fire semantics are
    /// property-specific.
    pub monitor_fires: BTreeSet<NetId>,
    /// Instances belonging to checkers/monitors; refused as trojan targets.
    pub guard_insts: BTreeSet<InstId>,
}

impl Netlist {
    pub fn new() -> Self {
        Netlist::default()
    }

    fn net_entry(&mut self, id: &NetId) -> &mut Net {
        self.nets.entry(id.clone()).or_insert(Net { driver: None, sinks: Vec::new() })
    }

    pub fn declare_input(&mut self, net: NetId) -> Result<(), NetlistError> {
        let entry = self.net_entry(&net);
        if entry.driver.is_some() {
            return Err(NetlistError::DuplicateDriver(net.0));
        }
        entry.driver = Some(Driver::PrimaryInput);
        self.primary_inputs.push(net);
        Ok(())
    }

    pub fn declare_output(&mut self, net: NetId) {
        self.net_entry(&net);
        if !self.primary_outputs.contains(&net) {
            self.primary_outputs.push(net);
        }
    }

    pub fn set_clock(&mut self, net: NetId) -> Result<(), NetlistError> {
        let entry = self.net_entry(&net);
        if entry.driver.is_some() {
            return Err(NetlistError::DuplicateDriver(net.0));
        }
        entry.driver = Some(Driver::PrimaryInput);
        self.clock = Some(net);
        Ok(())
    }

    pub fn flag_assert_out(&mut self, net: NetId) {
        self.net_entry(&net);
        self.assert_outs.insert(net);
    }

    pub fn flag_monitor_fire(&mut self, net: NetId) {
        self.net_entry(&net);
        self.assert_outs.insert(net.clone());
        self.monitor_fires.insert(net);
    }

    pub fn add_instance(
        &mut self,
        id: InstId,
        cell_type: &str,
        inputs: Vec<(String, NetId)>,
        output: NetId,
    ) -> Result<(), NetlistError> {
        if self.instances.contains_key(&id) {
            return Err(NetlistError::DuplicateInstance(id.0));
        }
        let out_entry = self.net_entry(&output);
        if out_entry.driver.is_some() {
            return Err(NetlistError::DuplicateDriver(output.0));
        }
        out_entry.driver = Some(Driver::Inst(id.clone()));
        for (pin, net) in &inputs {
            self.net_entry(net).sinks.push((id.clone(), pin.clone()));
        }
        self.instances.insert(id, Instance { cell_type: cell_type.into(), inputs, output });
        Ok(())
    }

    /// Reroute an instance output to a fresh net, leaving all former sinks
    /// on the old net. Used by the trojan injector to splice a payload gate.
    pub fn rewire_output(&mut self, id: &InstId, new_net: NetId) -> Result<(), NetlistError> {
        let inst = self.instances.get_mut(id).ok_or_else(|| NetlistError::UnknownInstance(id.0.clone()))?;
        let old = core::mem::replace(&mut inst.output, new_net.clone());
        let id = id.clone();
        self.nets.get_mut(&old).expect("driven net exists").driver = None;
        let entry = self.net_entry(&new_net);
        if entry.driver.is_some() {
            return Err(NetlistError::DuplicateDriver(new_net.0));
        }
        entry.driver = Some(Driver::Inst(id));
        Ok(())
    }

    /// Structural well-formedness independent of any library: every net
    /// must have a driver.
    pub fn check_drivers(&self) -> Result<(), NetlistError> {
        for (id, net) in &self.nets {
            if net.driver.is_none() {
                return Err(NetlistError::UndrivenNet(id.0.clone()));
            }
        }
        Ok(())
    }

    pub fn driver_inst(&self, net: &NetId) -> Option<&InstId> {
        match self.nets.get(net).and_then(|n| n.driver.as_ref()) {
            Some(Driver::Inst(i)) => Some(i),
            _ => None,
        }
    }

    fn is_dff(&self, inst: &InstId, library: &CellLibrary) -> bool {
        self.instances
            .get(inst)
            .and_then(|i| library.cells.get(&i.cell_type))
            .map(|c| c.function == LogicFn::Dff)
            .unwrap_or(false)
    }

    fn is_clock_pin(&self, inst: &InstId, pin: &str, library: &CellLibrary) -> bool {
        self.is_dff(inst, library) && pin == "CK"
    }

    /// Library-aware validation. Returns an empty list iff all invariants
    /// hold; diagnostics are ordered by instance id.
    pub fn validate(&self, library: &CellLibrary) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        for (id, inst) in &self.instances {
            match library.cells.get(&inst.cell_type) {
                None => diags.push(Diagnostic::UnresolvedCell {
                    inst: id.clone(),
                    cell_type: inst.cell_type.clone(),
                }),
                Some(cell) => {
                    let want: Vec<&str> =
                        cell.input_pins().map(|p| p.name.as_str()).collect();
                    let got: Vec<&str> = inst.inputs.iter().map(|(p, _)| p.as_str()).collect();
                    let mut w = want.clone();
                    let mut g = got.clone();
                    w.sort_unstable();
                    g.sort_unstable();
                    if w != g {
                        diags.push(Diagnostic::PinMismatch {
                            inst: id.clone(),
                            detail: format!("pins {:?} do not match cell {}", got, cell.name),
                        });
                    }
                }
            }
        }
        if let Some(cycle) = self.find_combinational_cycle(library) {
            diags.push(Diagnostic::CombinationalCycle { insts: cycle });
        }
        diags
    }

    /// DFS over combinational edges only; DFF outputs break paths.
    fn find_combinational_cycle(&self, library: &CellLibrary) -> Option<Vec<InstId>> {
        // 0 = white, 1 = on stack, 2 = done
        let mut color: BTreeMap<&InstId, u8> = BTreeMap::new();
        let mut stack: Vec<(&InstId, usize)> = Vec::new();
        let mut path: Vec<&InstId> = Vec::new();

        for start in self.instances.keys() {
            if color.get(start).copied().unwrap_or(0) != 0 || self.is_dff(start, library) {
                continue;
            }
            stack.push((start, 0));
            while let Some((inst, next)) = stack.pop() {
                if next == 0 {
                    color.insert(inst, 1);
                    path.push(inst);
                }
                let ins = &self.instances[inst].inputs;
                if next < ins.len() {
                    stack.push((inst, next + 1));
                    let (_, net) = &ins[next];
                    if let Some(pred) = self.driver_inst(net) {
                        if self.is_dff(pred, library) {
                            continue;
                        }
                        match color.get(pred).copied().unwrap_or(0) {
                            0 => stack.push((pred, 0)),
                            1 => {
                                let pos = path.iter().position(|p| *p == pred).unwrap_or(0);
                                let mut cycle: Vec<InstId> =
                                    path[pos..].iter().map(|p| (*p).clone()).collect();
                                cycle.sort();
                                return Some(cycle);
                            }
                            _ => {}
                        }
                    }
                } else {
                    color.insert(inst, 2);
                    path.pop();
                }
            }
        }
        None
    }

    /// Transitive fanin of `node`, inclusive. Clock pins are never
    /// traversed; with `stop_at_flops`, DFFs are included but their data
    /// inputs are not expanded.
    pub fn fanin_cone(
        &self,
        node: &InstId,
        stop_at_flops: bool,
        library: &CellLibrary,
    ) -> Result<BTreeSet<InstId>, NetlistError> {
        if !self.instances.contains_key(node) {
            return Err(NetlistError::UnknownInstance(node.0.clone()));
        }
        let mut cone = BTreeSet::new();
        let mut work = Vec::new();
        cone.insert(node.clone());
        work.push(node.clone());
        while let Some(cur) = work.pop() {
            if stop_at_flops && self.is_dff(&cur, library) && cur != *node {
                continue;
            }
            for (pin, net) in &self.instances[&cur].inputs {
                if self.is_clock_pin(&cur, pin, library) {
                    continue;
                }
                if let Some(pred) = self.driver_inst(net) {
                    if cone.insert(pred.clone()) {
                        work.push(pred.clone());
                    }
                }
            }
        }
        Ok(cone)
    }

    /// Exact accounting over the library: total cell area, total power
    /// weight, and instance count.
    pub fn area_power_summary(
        &self,
        library: &CellLibrary,
    ) -> Result<ResourceSummary, crate::library::LibraryError> {
        let mut area = 0.0;
        let mut power = 0.0;
        for inst in self.instances.values() {
            let cell = library.get(&inst.cell_type)?;
            area += cell.area;
            power += cell.power;
        }
        Ok(ResourceSummary { area, power, instances: self.instances.len() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{Cell, Pin, PinDir};
    use alloc::vec;

    pub(crate) fn tiny_lib() -> CellLibrary {
        let mut lib = CellLibrary::default();
        let pin = |n: &str, d| Pin { name: n.into(), dir: d };
        lib.add_cell(Cell {
            name: "INV".into(),
            function: LogicFn::Inv,
            area: 1.0,
            width: 2,
            power: 0.02,
            delay: 0.05,
            load: 0.01,
            pins: vec![pin("A", PinDir::Input), pin("Y", PinDir::Output)],
        })
        .unwrap();
        lib.add_cell(Cell {
            name: "AND2".into(),
            function: LogicFn::And,
            area: 2.0,
            width: 3,
            power: 0.03,
            delay: 0.09,
            load: 0.012,
            pins: vec![pin("A", PinDir::Input), pin("B", PinDir::Input), pin("Y", PinDir::Output)],
        })
        .unwrap();
        lib.add_cell(Cell {
            name: "DFF".into(),
            function: LogicFn::Dff,
            area: 4.0,
            width: 6,
            power: 0.08,
            delay: 0.15,
            load: 0.012,
            pins: vec![
                pin("D", PinDir::Input),
                pin("CK", PinDir::Input),
                pin("Q", PinDir::Output),
            ],
        })
        .unwrap();
        lib
    }

    fn inv(nl: &mut Netlist, id: &str, a: &str, y: &str) {
        nl.add_instance(id.into(), "INV", vec![("A".into(), a.into())], y.into()).unwrap();
    }

    #[test]
    fn duplicate_driver_is_rejected() {
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        inv(&mut nl, "g1", "in", "x");
        let err = nl.add_instance(
            "g2".into(),
            "INV",
            vec![("A".into(), "in".into())],
            "x".into(),
        );
        assert_eq!(err, Err(NetlistError::DuplicateDriver("x".into())));
    }

    #[test]
    fn combinational_loop_is_diagnosed() {
        let lib = tiny_lib();
        let mut nl = Netlist::new();
        inv(&mut nl, "a", "y2", "y1");
        inv(&mut nl, "b", "y1", "y2");
        let diags = nl.validate(&lib);
        assert_eq!(
            diags,
            vec![Diagnostic::CombinationalCycle { insts: vec!["a".into(), "b".into()] }]
        );
    }

    #[test]
    fn loop_through_dff_is_fine() {
        let lib = tiny_lib();
        let mut nl = Netlist::new();
        nl.set_clock("clk".into()).unwrap();
        inv(&mut nl, "g1", "q", "d");
        nl.add_instance(
            "ff".into(),
            "DFF",
            vec![("D".into(), "d".into()), ("CK".into(), "clk".into())],
            "q".into(),
        )
        .unwrap();
        assert!(nl.validate(&lib).is_empty());
    }

    #[test]
    fn unknown_cell_type_is_diagnosed() {
        let lib = tiny_lib();
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "FOO", vec![("A".into(), "in".into())], "y".into())
            .unwrap();
        let diags = nl.validate(&lib);
        assert_eq!(diags.len(), 1);
        assert!(matches!(&diags[0], Diagnostic::UnresolvedCell { cell_type, .. } if cell_type == "FOO"));
    }

    #[test]
    fn fanin_cone_chain() {
        let lib = tiny_lib();
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        inv(&mut nl, "g1", "in", "n1");
        inv(&mut nl, "g2", "n1", "n2");
        inv(&mut nl, "g3", "n2", "n3");
        let cone = nl.fanin_cone(&"g3".into(), false, &lib).unwrap();
        let want: BTreeSet<InstId> = ["g1", "g2", "g3"].iter().map(|s| (*s).into()).collect();
        assert_eq!(cone, want);
        let single = nl.fanin_cone(&"g1".into(), false, &lib).unwrap();
        assert_eq!(single.len(), 1);
    }

    #[test]
    fn fanin_cone_stops_at_flops() {
        let lib = tiny_lib();
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.set_clock("clk".into()).unwrap();
        inv(&mut nl, "g1", "in", "d");
        nl.add_instance(
            "ff".into(),
            "DFF",
            vec![("D".into(), "d".into()), ("CK".into(), "clk".into())],
            "q".into(),
        )
        .unwrap();
        inv(&mut nl, "g2", "q", "y");
        let stopped = nl.fanin_cone(&"g2".into(), true, &lib).unwrap();
        let want: BTreeSet<InstId> = ["ff", "g2"].iter().map(|s| (*s).into()).collect();
        assert_eq!(stopped, want);
        let full = nl.fanin_cone(&"g2".into(), false, &lib).unwrap();
        assert_eq!(full.len(), 3);
    }

    #[test]
    fn summary_is_exact() {
        let lib = tiny_lib();
        let mut nl = Netlist::new();
        assert_eq!(
            nl.area_power_summary(&lib).unwrap(),
            ResourceSummary { area: 0.0, power: 0.0, instances: 0 }
        );
        nl.declare_input("in".into()).unwrap();
        inv(&mut nl, "g1", "in", "n1");
        inv(&mut nl, "g2", "n1", "n2");
        inv(&mut nl, "g3", "n2", "n3");
        let s = nl.area_power_summary(&lib).unwrap();
        assert_eq!(s.area, 3.0);
        assert_eq!(s.instances, 3);
    }
}
