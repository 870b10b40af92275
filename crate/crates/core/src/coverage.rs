//! Security coverage: which nodes have a path to a checker output.
//!
//! Two engines are provided. `structural_coverage` is the sound
//! over-approximation (transitive fanin of the checker output, crossing
//! flops). `exact_coverage` operationalizes a functional path as single
//! stuck-at-complement fault propagation: a node is covered iff some input
//! sequence makes the complemented node output visible at the checker net.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::library::CellLibrary;
use crate::netlist::{InstId, NetId, Netlist, NetlistError};
use crate::sim::{CompiledSim, SimError};

/// Hard cap on exhaustive enumeration: beyond this many input sequences
/// the engine switches to randomized stimuli plus corner vectors.
pub const EXHAUSTIVE_CAP: u64 = 1 << 20;

#[derive(Debug, Error, PartialEq)]
pub enum CoverageError {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("unroll depth must be at least 1")]
    ZeroDepth,
    #[error("input budget must be nonzero")]
    ZeroBudget,
    #[error("coverage universe is empty")]
    EmptyUniverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    Structural,
    /// `budgeted` is set when the input space exceeded the budget and the
    /// result rests on randomized stimuli.
    Exact { unroll_depth: u32, budget: u64, budgeted: bool },
}

impl CoverageMode {
    pub fn tag(&self) -> &'static str {
        match self {
            CoverageMode::Structural => "structural",
            CoverageMode::Exact { budgeted: false, .. } => "exact",
            CoverageMode::Exact { budgeted: true, .. } => "exact-budgeted",
        }
    }
}

/// Per-assertion covered sets over a fixed universe of instances. The
/// vulnerable set is always derived as universe minus the union, never
/// stored.
#[derive(Debug, Clone)]
pub struct CoverageMap {
    pub per_assertion: BTreeMap<NetId, BTreeSet<InstId>>,
    pub universe: BTreeSet<InstId>,
    pub mode: CoverageMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecurityReport {
    pub covered: usize,
    pub vulnerable: usize,
    /// SC as an exact rational: covered / (covered + vulnerable).
    pub sc_numerator: usize,
    pub sc_denominator: usize,
    /// Per-assertion covered count over the same denominator.
    pub per_assertion: BTreeMap<NetId, usize>,
}

impl SecurityReport {
    pub fn sc(&self) -> f64 {
        self.sc_numerator as f64 / self.sc_denominator as f64
    }
}

fn checker_driver<'a>(
    netlist: &'a Netlist,
    assertion_net: &NetId,
) -> Result<&'a InstId, CoverageError> {
    if !netlist.assert_outs.contains(assertion_net) {
        return Err(NetlistError::NotAssertOut(assertion_net.0.clone()).into());
    }
    netlist
        .driver_inst(assertion_net)
        .ok_or_else(|| NetlistError::UnknownNet(assertion_net.0.clone()).into())
}

/// All instances with a directed structural path (crossing DFFs) into the
/// assertion output, i.e. the transitive fanin of its driver, inclusive.
pub fn structural_coverage(
    netlist: &Netlist,
    assertion_net: &NetId,
    library: &CellLibrary,
) -> Result<BTreeSet<InstId>, CoverageError> {
    let driver = checker_driver(netlist, assertion_net)?;
    Ok(netlist.fanin_cone(driver, false, library)?)
}

/// The stimulus set used by exact coverage: exhaustive when the sequence
/// space fits the budget (and the hard cap), otherwise `budget` seeded
/// random sequences plus the all-zeros and all-ones corners.
pub struct StimulusSet {
    pub sequences: Vec<Vec<Vec<bool>>>,
    pub budgeted: bool,
}

pub fn stimulus_set(
    arity: usize,
    unroll_depth: u32,
    budget: u64,
    seed: u64,
) -> Result<StimulusSet, CoverageError> {
    if unroll_depth == 0 {
        return Err(CoverageError::ZeroDepth);
    }
    if budget == 0 {
        return Err(CoverageError::ZeroBudget);
    }
    let bits = arity as u64 * unroll_depth as u64;
    let exhaustive = bits < 63 && {
        let total = 1u64 << bits;
        total <= budget.min(EXHAUSTIVE_CAP)
    };
    if exhaustive {
        let total = 1u64 << bits;
        let mut sequences = Vec::with_capacity(total as usize);
        for n in 0..total {
            let mut seq = Vec::with_capacity(unroll_depth as usize);
            for c in 0..unroll_depth as u64 {
                seq.push(
                    (0..arity).map(|i| n >> (c * arity as u64 + i as u64) & 1 == 1).collect(),
                );
            }
            sequences.push(seq);
        }
        Ok(StimulusSet { sequences, budgeted: false })
    } else {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut sequences = Vec::with_capacity(budget as usize + 2);
        sequences.push(vec![vec![false; arity]; unroll_depth as usize]);
        sequences.push(vec![vec![true; arity]; unroll_depth as usize]);
        for _ in 0..budget {
            let seq = (0..unroll_depth)
                .map(|_| (0..arity).map(|_| rng.next_u32() & 1 == 1).collect())
                .collect();
            sequences.push(seq);
        }
        Ok(StimulusSet { sequences, budgeted: true })
    }
}

/// Nodes whose forced complement is observable at the assertion net within
/// `unroll_depth` cycles under some sequence from the stimulus set.
pub fn exact_coverage(
    netlist: &Netlist,
    assertion_net: &NetId,
    library: &CellLibrary,
    unroll_depth: u32,
    budget: u64,
    seed: u64,
) -> Result<(BTreeSet<InstId>, bool), CoverageError> {
    checker_driver(netlist, assertion_net)?;
    let sim = CompiledSim::new(netlist, library)?;
    let stim = stimulus_set(sim.num_primary_inputs(), unroll_depth, budget, seed)?;

    let clean: Vec<Vec<bool>> = stim
        .sequences
        .iter()
        .map(|seq| {
            let t = sim.run(seq, false)?;
            Ok(t.net_values(assertion_net).expect("assert net simulated").collect())
        })
        .collect::<Result<_, SimError>>()?;

    let mut covered = BTreeSet::new();
    for inst in netlist.instances.keys() {
        let slot = sim.inst_slot(inst).expect("instance compiled");
        'seqs: for (seq, clean_vals) in stim.sequences.iter().zip(&clean) {
            let t = sim.run_with_fault(seq, false, Some(slot))?;
            for (got, want) in t.net_values(assertion_net).expect("assert net").zip(clean_vals) {
                if got != *want {
                    covered.insert(inst.clone());
                    break 'seqs;
                }
            }
        }
    }
    Ok((covered, stim.budgeted))
}

impl CoverageMap {
    /// Run the chosen engine over every flagged assertion output.
    pub fn analyze(
        netlist: &Netlist,
        library: &CellLibrary,
        mode: CoverageMode,
        seed: u64,
    ) -> Result<CoverageMap, CoverageError> {
        let universe: BTreeSet<InstId> = netlist.instances.keys().cloned().collect();
        let mut per_assertion = BTreeMap::new();
        let mut any_budgeted = false;
        for net in &netlist.assert_outs {
            let set = match mode {
                CoverageMode::Structural => structural_coverage(netlist, net, library)?,
                CoverageMode::Exact { unroll_depth, budget, .. } => {
                    let (set, budgeted) =
                        exact_coverage(netlist, net, library, unroll_depth, budget, seed)?;
                    any_budgeted |= budgeted;
                    set
                }
            };
            per_assertion.insert(net.clone(), set);
        }
        let mode = match mode {
            CoverageMode::Structural => CoverageMode::Structural,
            CoverageMode::Exact { unroll_depth, budget, .. } => {
                CoverageMode::Exact { unroll_depth, budget, budgeted: any_budgeted }
            }
        };
        Ok(CoverageMap { per_assertion, universe, mode })
    }

    pub fn covered_union(&self) -> BTreeSet<InstId> {
        let mut union = BTreeSet::new();
        for set in self.per_assertion.values() {
            union.extend(set.iter().cloned());
        }
        union.intersection(&self.universe).cloned().collect()
    }

    /// universe \ union of covered sets, ordered by instance id.
    pub fn uncovered_nodes(&self) -> Vec<InstId> {
        let covered = self.covered_union();
        self.universe.iter().filter(|i| !covered.contains(*i)).cloned().collect()
    }
}

/// Coverage ratio bookkeeping as exact integer arithmetic.
pub fn security_coverage(map: &CoverageMap) -> Result<SecurityReport, CoverageError> {
    if map.universe.is_empty() {
        return Err(CoverageError::EmptyUniverse);
    }
    let covered = map.covered_union().len();
    let universe = map.universe.len();
    let per_assertion = map
        .per_assertion
        .iter()
        .map(|(net, set)| (net.clone(), set.intersection(&map.universe).count()))
        .collect();
    Ok(SecurityReport {
        covered,
        vulnerable: universe - covered,
        sc_numerator: covered,
        sc_denominator: universe,
        per_assertion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{Cell, LogicFn, Pin, PinDir};

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
        lib
    }

    /// in -> g1 -> g2 -> assert: every chain node is exactly covered.
    #[test]
    fn inv_chain_exact_equals_structural() {
        let lib = lib();
        let mut nl = Netlist::new();
        nl.declare_input("in".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "in".into())], "n1".into())
            .unwrap();
        nl.add_instance("g2".into(), "INV", vec![("A".into(), "n1".into())], "fire".into())
            .unwrap();
        nl.flag_assert_out("fire".into());
        let s = structural_coverage(&nl, &"fire".into(), &lib).unwrap();
        let (e, budgeted) =
            exact_coverage(&nl, &"fire".into(), &lib, 1, 1 << 20, 7).unwrap();
        assert!(!budgeted);
        assert_eq!(s, e);
        assert_eq!(s.len(), 2);
    }

    /// AND with one input tied to a constant-0 net: the other input's
    /// driver is structurally covered but never sensitizable.
    #[test]
    fn constant_blocked_input_not_exactly_covered() {
        let lib = lib();
        let mut nl = Netlist::new();
        nl.declare_input("a".into()).unwrap();
        // zero = a AND (NOT a)
        nl.add_instance("n".into(), "INV", vec![("A".into(), "a".into())], "na".into())
            .unwrap();
        nl.add_instance(
            "z".into(),
            "AND2",
            vec![("A".into(), "a".into()), ("B".into(), "na".into())],
            "zero".into(),
        )
        .unwrap();
        nl.declare_input("b".into()).unwrap();
        nl.add_instance("g".into(), "INV", vec![("A".into(), "b".into())], "gb".into())
            .unwrap();
        nl.add_instance(
            "blocked".into(),
            "AND2",
            vec![("A".into(), "gb".into()), ("B".into(), "zero".into())],
            "fire".into(),
        )
        .unwrap();
        nl.flag_assert_out("fire".into());
        let s = structural_coverage(&nl, &"fire".into(), &lib).unwrap();
        assert!(s.contains(&"g".into()));
        let (e, _) = exact_coverage(&nl, &"fire".into(), &lib, 1, 1 << 20, 7).unwrap();
        assert!(!e.contains(&"g".into()));
        // The exact engine remains a subset of the structural one.
        assert!(e.is_subset(&s));
    }

    #[test]
    fn sc_trivial_cases() {
        let lib = lib();
        let mut nl = Netlist::new();
        nl.declare_input("a".into()).unwrap();
        nl.add_instance("g1".into(), "INV", vec![("A".into(), "a".into())], "y".into())
            .unwrap();
        // No assertions: SC = 0.
        let map = CoverageMap::analyze(&nl, &lib, CoverageMode::Structural, 0).unwrap();
        let rep = security_coverage(&map).unwrap();
        assert_eq!(rep.sc_numerator, 0);
        assert_eq!(map.uncovered_nodes().len(), 1);
        // One assertion covering everything: SC = 1.
        nl.flag_assert_out("y".into());
        let map = CoverageMap::analyze(&nl, &lib, CoverageMode::Structural, 0).unwrap();
        let rep = security_coverage(&map).unwrap();
        assert_eq!((rep.sc_numerator, rep.sc_denominator), (1, 1));
        assert!(map.uncovered_nodes().is_empty());
    }

    #[test]
    fn empty_universe_is_an_error() {
        let map = CoverageMap {
            per_assertion: BTreeMap::new(),
            universe: BTreeSet::new(),
            mode: CoverageMode::Structural,
        };
        assert_eq!(security_coverage(&map), Err(CoverageError::EmptyUniverse));
    }
}
