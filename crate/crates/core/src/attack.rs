//! Additive-trojan injection and detection evaluation. The payload model
//! is flip-when-triggered on a single instance output, matching the fault
//! model the coverage engine reasons about, so detection claims and
//! coverage claims can be checked against each other.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::library::{CellLibrary, LogicFn};
use crate::netlist::{InstId, NetId, Netlist, NetlistError};
use crate::sim::{CompiledSim, SimError};

#[derive(Debug, Error, PartialEq)]
pub enum AttackError {
    #[error("payload target {0} does not exist")]
    UnknownTarget(String),
    #[error("payload target {0} is monitor or checker logic (refused)")]
    GuardedTarget(String),
    #[error("trigger literal references unknown net {0}")]
    UnknownTriggerNet(String),
    #[error("arm delay requires a clocked design")]
    NoClockForArm,
    #[error("library lacks a {0} cell needed for trigger logic")]
    MissingCell(&'static str),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// An additive trojan: an AND-tree trigger over net literals (optionally
/// delayed by `arm` register stages) driving an XOR payload spliced into
/// the target's output net.
#[derive(Debug, Clone, PartialEq)]
pub struct TrojanSpec {
    pub target: InstId,
    pub trigger: Vec<(NetId, bool)>,
    pub arm: usize,
}

impl TrojanSpec {
    /// Per-vector activation probability under uniform random stimulus,
    /// assuming independent literals.
    pub fn activation_probability(&self) -> f64 {
        libm::pow(0.5, self.trigger.len() as f64)
    }
}

/// Bookkeeping the evaluator needs about an injected trojan.
#[derive(Debug, Clone, PartialEq)]
pub struct InjectedTrojan {
    /// Net carrying the armed trigger value; `None` means always-on.
    pub trigger_net: Option<NetId>,
    pub payload: InstId,
    pub added: Vec<InstId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionReport {
    pub cycles: usize,
    pub activations: usize,
    pub detections: usize,
    pub false_positives: usize,
    /// Cycles from each detected activation to the first alert at or
    /// after it.
    pub latency_histogram: BTreeMap<usize, usize>,
}

impl DetectionReport {
    pub fn detection_rate(&self) -> f64 {
        if self.activations == 0 {
            0.0
        } else {
            self.detections as f64 / self.activations as f64
        }
    }
}

fn fresh_net(netlist: &Netlist, base: &str) -> NetId {
    let mut name = String::from(base);
    let mut k = 0;
    while netlist.nets.contains_key(&NetId(name.clone())) {
        k += 1;
        name = format!("{base}_{k}");
    }
    NetId(name)
}

fn cell_name(library: &CellLibrary, f: LogicFn, what: &'static str) -> Result<String, AttackError> {
    library.cell_with_fn(f).map(|c| c.name.clone()).ok_or(AttackError::MissingCell(what))
}

/// Splice the trojan into a copy of the netlist. The target's output net
/// keeps its name (its sinks are untouched); the target itself is rewired
/// to a fresh net feeding the payload gate.
pub fn inject_trojan(
    netlist: &Netlist,
    spec: &TrojanSpec,
    library: &CellLibrary,
) -> Result<(Netlist, InjectedTrojan), AttackError> {
    if !netlist.instances.contains_key(&spec.target) {
        return Err(AttackError::UnknownTarget(spec.target.0.clone()));
    }
    if netlist.guard_insts.contains(&spec.target) {
        return Err(AttackError::GuardedTarget(spec.target.0.clone()));
    }
    for (net, _) in &spec.trigger {
        if !netlist.nets.contains_key(net) {
            return Err(AttackError::UnknownTriggerNet(net.0.clone()));
        }
    }
    if spec.arm > 0 && netlist.clock.is_none() {
        return Err(AttackError::NoClockForArm);
    }

    let mut out = netlist.clone();
    let mut added = Vec::new();
    let fresh = |out: &Netlist, base: &str| fresh_net(out, base);

    // Trigger literals, inverting where the literal wants a 0.
    let mut terms: Vec<NetId> = Vec::with_capacity(spec.trigger.len());
    for (k, (net, val)) in spec.trigger.iter().enumerate() {
        if *val {
            terms.push(net.clone());
        } else {
            let inv = cell_name(library, LogicFn::Inv, "INV")?;
            let t = fresh(&out, &format!("ht_n{k}"));
            let id = InstId(format!("HT_inv{k}"));
            out.add_instance(id.clone(), &inv, alloc::vec![("A".into(), net.clone())], t.clone())?;
            added.push(id);
            terms.push(t);
        }
    }
    // AND-tree reduction to a single trigger net.
    let and2 = if terms.len() >= 2 { Some(cell_name(library, LogicFn::And, "AND2")?) } else { None };
    let mut k = 0;
    while terms.len() >= 2 {
        let b = terms.pop().unwrap();
        let a = terms.pop().unwrap();
        let t = fresh(&out, &format!("ht_and{k}"));
        let id = InstId(format!("HT_and{k}"));
        out.add_instance(
            id.clone(),
            and2.as_ref().unwrap(),
            alloc::vec![("A".into(), a), ("B".into(), b)],
            t.clone(),
        )?;
        added.push(id);
        terms.push(t);
        k += 1;
    }
    let mut trigger_net = terms.pop();

    // Arm delay: a register chain between trigger and payload.
    if let Some(sig) = trigger_net.clone() {
        if spec.arm > 0 {
            let dff = cell_name(library, LogicFn::Dff, "DFF")?;
            let ck = netlist.clock.clone().unwrap();
            let mut prev = sig;
            for stage in 0..spec.arm {
                let q = fresh(&out, &format!("ht_arm{stage}"));
                let id = InstId(format!("HT_arm{stage}"));
                out.add_instance(
                    id.clone(),
                    &dff,
                    alloc::vec![("D".into(), prev.clone()), ("CK".into(), ck.clone())],
                    q.clone(),
                )?;
                added.push(id);
                prev = q;
            }
            trigger_net = Some(prev);
        }
    }

    // Payload splice: victim output renamed, original net re-driven by
    // the payload gate.
    let victim_out = out.instances[&spec.target].output.clone();
    let spliced = fresh(&out, &format!("ht_tap_{}", spec.target));
    out.rewire_output(&spec.target, spliced.clone())?;
    let payload = InstId(format!("HT_payload_{}", spec.target));
    match &trigger_net {
        Some(trig) => {
            let xor = cell_name(library, LogicFn::Xor, "XOR2")?;
            out.add_instance(
                payload.clone(),
                &xor,
                alloc::vec![("A".into(), spliced), ("B".into(), trig.clone())],
                victim_out,
            )?;
        }
        None => {
            let inv = cell_name(library, LogicFn::Inv, "INV")?;
            out.add_instance(payload.clone(), &inv, alloc::vec![("A".into(), spliced)], victim_out)?;
        }
    }
    added.push(payload.clone());
    Ok((out, InjectedTrojan { trigger_net, payload, added }))
}

/// Uniform random primary-input stimulus, reproducible from the seed.
pub fn random_stimulus(arity: usize, cycles: usize, seed: u64) -> Vec<Vec<bool>> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..cycles)
        .map(|_| (0..arity).map(|_| rng.next_u32() & 1 == 1).collect())
        .collect()
}

/// Paired clean/attacked runs over an explicit stimulus. An alert is a
/// monitor fire net at 1, or any other assertion net whose value differs
/// from the clean run's. A cycle is an activation when the armed trigger
/// is high (every cycle, for an always-on trojan).
pub fn evaluate_detection_on(
    protected: &Netlist,
    spec: &TrojanSpec,
    library: &CellLibrary,
    stimulus: &[Vec<bool>],
) -> Result<DetectionReport, AttackError> {
    let (attacked, info) = inject_trojan(protected, spec, library)?;
    let clean_trace = CompiledSim::new(protected, library)?.run(stimulus, false)?;
    let dirty_trace = CompiledSim::new(&attacked, library)?.run(stimulus, false)?;

    let checkers: Vec<&NetId> =
        protected.assert_outs.iter().filter(|n| !protected.monitor_fires.contains(n)).collect();
    let mut alert_cycles: Vec<usize> = Vec::new();
    for c in 0..stimulus.len() {
        let fired = protected
            .monitor_fires
            .iter()
            .any(|n| dirty_trace.value(c, n).unwrap_or(false))
            || checkers
                .iter()
                .any(|n| dirty_trace.value(c, n) != clean_trace.value(c, n));
        if fired {
            alert_cycles.push(c);
        }
    }
    let activations: Vec<usize> = (0..stimulus.len())
        .filter(|c| match &info.trigger_net {
            Some(net) => dirty_trace.value(*c, net).unwrap_or(false),
            None => true,
        })
        .collect();

    let mut detections = 0;
    let mut latency_histogram = BTreeMap::new();
    for a in &activations {
        if let Some(alert) = alert_cycles.iter().find(|c| *c >= a) {
            detections += 1;
            *latency_histogram.entry(alert - a).or_insert(0) += 1;
        }
    }
    let false_positives = alert_cycles
        .iter()
        .filter(|c| !activations.iter().any(|a| a <= c))
        .count();

    Ok(DetectionReport {
        cycles: stimulus.len(),
        activations: activations.len(),
        detections,
        false_positives,
        latency_histogram,
    })
}

/// Seeded-random variant of [`evaluate_detection_on`].
pub fn evaluate_detection(
    protected: &Netlist,
    spec: &TrojanSpec,
    library: &CellLibrary,
    cycle_budget: usize,
    seed: u64,
) -> Result<DetectionReport, AttackError> {
    let stimulus = random_stimulus(protected.primary_inputs.len(), cycle_budget, seed);
    evaluate_detection_on(protected, spec, library, &stimulus)
}
