//! Two-valued cycle-accurate logic simulator. Netlists are compiled once
//! into an index-based form: nets get dense indices, combinational
//! instances a topological evaluation order, and flops update on cycle
//! boundaries. Single stuck-at-complement faults can be forced on any
//! instance output, which is the fault model the coverage and attack
//! modules share.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

use crate::library::{CellLibrary, LogicFn};
use crate::netlist::{InstId, NetId, Netlist};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("netlist contains a combinational cycle")]
    CombinationalCycle,
    #[error("unknown cell type {0}")]
    UnknownCell(String),
    #[error("stimulus vector arity {got} does not match {want} primary inputs")]
    ArityMismatch { got: usize, want: usize },
    #[error("unknown instance {0}")]
    UnknownInstance(String),
    #[error("unknown net {0}")]
    UnknownNet(String),
}

struct Gate {
    func: LogicFn,
    inputs: Vec<usize>,
    output: usize,
    inst: usize,
}

struct Flop {
    data: usize,
    output: usize,
    inst: usize,
}

/// A netlist compiled for repeated simulation runs.
pub struct CompiledSim {
    net_ids: Vec<NetId>,
    net_index: BTreeMap<NetId, usize>,
    inst_ids: Vec<InstId>,
    pi_nets: Vec<usize>,
    gates: Vec<Gate>,
    flops: Vec<Flop>,
}

/// Per-cycle settled values of every net.
pub struct Trace {
    pub cycles: Vec<Vec<bool>>,
    net_index: BTreeMap<NetId, usize>,
}

impl Trace {
    pub fn value(&self, cycle: usize, net: &NetId) -> Option<bool> {
        let idx = *self.net_index.get(net)?;
        self.cycles.get(cycle).map(|v| v[idx])
    }

    pub fn net_values<'a>(&'a self, net: &NetId) -> Option<impl Iterator<Item = bool> + 'a> {
        let idx = *self.net_index.get(net)?;
        Some(self.cycles.iter().map(move |v| v[idx]))
    }
}

impl CompiledSim {
    pub fn new(netlist: &Netlist, library: &CellLibrary) -> Result<Self, SimError> {
        let net_ids: Vec<NetId> = netlist.nets.keys().cloned().collect();
        let net_index: BTreeMap<NetId, usize> =
            net_ids.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
        let inst_ids: Vec<InstId> = netlist.instances.keys().cloned().collect();
        let inst_index: BTreeMap<&InstId, usize> =
            inst_ids.iter().enumerate().map(|(i, n)| (n, i)).collect();

        let mut pi_nets: Vec<usize> =
            netlist.primary_inputs.iter().map(|n| net_index[n]).collect();
        if let Some(clk) = &netlist.clock {
            // The clock is not part of the logical stimulus.
            pi_nets.retain(|i| net_ids[*i] != *clk);
        }

        let mut flops = Vec::new();
        let mut comb: Vec<(usize, Gate)> = Vec::new();
        for (id, inst) in &netlist.instances {
            let cell = library
                .cells
                .get(&inst.cell_type)
                .ok_or_else(|| SimError::UnknownCell(inst.cell_type.clone()))?;
            let out = net_index[&inst.output];
            if cell.function == LogicFn::Dff {
                let d = inst
                    .input_net("D")
                    .ok_or_else(|| SimError::UnknownNet("D".into()))?;
                flops.push(Flop { data: net_index[d], output: out, inst: inst_index[id] });
            } else {
                // Inputs in the cell's declared pin order, so eval() sees a
                // stable argument layout.
                let mut ins = Vec::new();
                for pin in cell.input_pins() {
                    let net = inst
                        .input_net(&pin.name)
                        .ok_or_else(|| SimError::UnknownNet(pin.name.clone().into()))?;
                    ins.push(net_index[net]);
                }
                comb.push((
                    out,
                    Gate { func: cell.function, inputs: ins, output: out, inst: inst_index[id] },
                ));
            }
        }

        // Topological order over combinational gates (Kahn).
        let mut gate_of_net: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, (out, _)) in comb.iter().enumerate() {
            gate_of_net.insert(*out, i);
        }
        let mut indeg = vec![0usize; comb.len()];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); comb.len()];
        for (i, (_, g)) in comb.iter().enumerate() {
            for inp in &g.inputs {
                if let Some(&src) = gate_of_net.get(inp) {
                    indeg[i] += 1;
                    users[src].push(i);
                }
            }
        }
        let mut queue: Vec<usize> = (0..comb.len()).filter(|i| indeg[*i] == 0).collect();
        let mut order = Vec::with_capacity(comb.len());
        let mut head = 0;
        while head < queue.len() {
            let i = queue[head];
            head += 1;
            order.push(i);
            for &u in &users[i] {
                indeg[u] -= 1;
                if indeg[u] == 0 {
                    queue.push(u);
                }
            }
        }
        if order.len() != comb.len() {
            return Err(SimError::CombinationalCycle);
        }
        let mut gates = Vec::with_capacity(comb.len());
        let mut taken: Vec<Option<Gate>> = comb.into_iter().map(|(_, g)| Some(g)).collect();
        for i in order {
            gates.push(taken[i].take().expect("each gate ordered once"));
        }

        Ok(CompiledSim { net_ids, net_index, inst_ids, pi_nets, gates, flops })
    }

    pub fn num_primary_inputs(&self) -> usize {
        self.pi_nets.len()
    }

    pub fn num_nets(&self) -> usize {
        self.net_ids.len()
    }

    pub fn net_slot(&self, net: &NetId) -> Option<usize> {
        self.net_index.get(net).copied()
    }

    pub fn inst_slot(&self, inst: &InstId) -> Option<usize> {
        self.inst_ids.iter().position(|i| i == inst)
    }

    /// Run the stimulus with an optional forced fault: the instance at
    /// `fault` has its settled output complemented every cycle.
    pub fn run_with_fault(
        &self,
        stimulus: &[Vec<bool>],
        initial_flops: bool,
        fault: Option<usize>,
    ) -> Result<Trace, SimError> {
        for v in stimulus {
            if v.len() != self.pi_nets.len() {
                return Err(SimError::ArityMismatch { got: v.len(), want: self.pi_nets.len() });
            }
        }
        let mut state = vec![initial_flops; self.flops.len()];
        let mut values = vec![false; self.net_ids.len()];
        let mut cycles = Vec::with_capacity(stimulus.len());
        for vector in stimulus {
            for (slot, v) in self.pi_nets.iter().zip(vector) {
                values[*slot] = *v;
            }
            for (f, s) in self.flops.iter().zip(&state) {
                values[f.output] = *s;
                // A faulted flop exposes its complemented output to the
                // whole fanout for the cycle.
                if fault == Some(f.inst) {
                    values[f.output] = !values[f.output];
                }
            }
            let mut scratch = [false; 3];
            for g in &self.gates {
                for (k, inp) in g.inputs.iter().enumerate() {
                    scratch[k] = values[*inp];
                }
                let mut out = g.func.eval(&scratch[..g.inputs.len()]);
                if fault == Some(g.inst) {
                    out = !out;
                }
                values[g.output] = out;
            }
            for (f, s) in self.flops.iter().zip(state.iter_mut()) {
                *s = values[f.data];
            }
            cycles.push(values.clone());
        }
        Ok(Trace { cycles, net_index: self.net_index.clone() })
    }

    pub fn run(&self, stimulus: &[Vec<bool>], initial_flops: bool) -> Result<Trace, SimError> {
        self.run_with_fault(stimulus, initial_flops, None)
    }
}

/// Convenience wrapper: compile and run a single stimulus.
pub fn simulate(
    netlist: &Netlist,
    library: &CellLibrary,
    stimulus: &[Vec<bool>],
    initial_flops: bool,
) -> Result<Trace, SimError> {
    CompiledSim::new(netlist, library)?.run(stimulus, initial_flops)
}

/// Enumerate all input vectors of the given arity, LSB-first. Used by the
/// exhaustive paths of coverage and detection analysis.
pub fn all_vectors(arity: usize) -> impl Iterator<Item = Vec<bool>> {
    (0u64..(1u64 << arity)).map(move |bits| (0..arity).map(|i| bits >> i & 1 == 1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{Cell, Pin, PinDir};

    fn lib() -> CellLibrary {
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

    #[test]
    fn inverter_inverts() {
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "out".into())
            .unwrap();
        let t = simulate(&nl, &lib(), &[vec![false], vec![true]], false).unwrap();
        assert_eq!(t.value(0, &"out".into()), Some(true));
        assert_eq!(t.value(1, &"out".into()), Some(false));
    }

    #[test]
    fn dff_chain_delays_by_two_cycles() {
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.set_clock("clk".into()).unwrap();
        nl.add_instance(
            "ff1".into(),
            "DFF",
            vec![("D".into(), "in".into()), ("CK".into(), "clk".into())],
            "q1".into(),
        )
        .unwrap();
        nl.add_instance(
            "ff2".into(),
            "DFF",
            vec![("D".into(), "q1".into()), ("CK".into(), "clk".into())],
            "q2".into(),
        )
        .unwrap();
        let stim: Vec<Vec<bool>> =
            [true, false, false, false].iter().map(|b| vec![*b]).collect();
        let t = simulate(&nl, &lib(), &stim, false).unwrap();
        let q2: Vec<bool> = t.net_values(&"q2".into()).unwrap().collect();
        assert_eq!(q2, vec![false, false, true, false]);
    }

    #[test]
    fn fault_complements_output() {
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "out".into())
            .unwrap();
        let sim = CompiledSim::new(&nl, &lib()).unwrap();
        let slot = sim.inst_slot(&"g1".into()).unwrap();
        let t = sim.run_with_fault(&[vec![false]], false, Some(slot)).unwrap();
        assert_eq!(t.value(0, &"out".into()), Some(false));
    }
}
