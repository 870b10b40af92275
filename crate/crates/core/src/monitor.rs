//! DMR online monitors: find connected uncovered cones worth protecting,
//! rank them, and synthesize the duplicate cone plus XOR voter.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

use crate::layout::{density_window_analysis, Layout, LayoutError};
use crate::library::{CellLibrary, LogicFn};
use crate::netlist::{InstId, NetId, Netlist, NetlistError};

#[derive(Debug, Error, PartialEq)]
pub enum MonitorError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("library lacks cell type {0} required for duplication")]
    MissingCell(String),
    #[error("library has no XOR2 cell for the voter")]
    MissingVoter,
    #[error("cone root {0} drives a DFF clock pin")]
    RootDrivesClock(String),
}

/// A connected uncovered subgraph with a single root whose output leaves
/// the cone. Cones of size 1 are never produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitorCandidate {
    pub root: InstId,
    pub cone: BTreeSet<InstId>,
    pub free_sites: usize,
    pub largest_gap: usize,
    pub feasible: bool,
}

impl MonitorCandidate {
    pub fn size(&self) -> usize {
        self.cone.len()
    }
}

/// The synthesized monitor: duplicates mirror the cone's internal wiring
/// and share its external input nets; the voter XORs original and
/// duplicate root outputs into a fault-free-silent fire net.
#[derive(Debug, Clone, PartialEq)]
pub struct Monitor {
    pub root: InstId,
    pub cone: BTreeSet<InstId>,
    pub duplicates: Vec<InstId>,
    pub voter: InstId,
    pub fire_net: NetId,
}

/// Reason a candidate was dropped during ranking.
#[derive(Debug, Clone, PartialEq)]
pub struct DroppedCandidate {
    pub root: InstId,
    pub reason: &'static str,
}

/// Uncovered fanin of `root` restricted to the uncovered set: traversal
/// stops at covered nodes and primary inputs, and does not cross into
/// covered logic through DFF data pins.
fn uncovered_fanin(
    netlist: &Netlist,
    root: &InstId,
    uncovered: &BTreeSet<InstId>,
) -> BTreeSet<InstId> {
    let mut cone = BTreeSet::new();
    let mut work = alloc::vec![root.clone()];
    cone.insert(root.clone());
    while let Some(cur) = work.pop() {
        for (_, net) in &netlist.instances[&cur].inputs {
            if let Some(pred) = netlist.driver_inst(net) {
                if uncovered.contains(pred) && cone.insert(pred.clone()) {
                    work.push(pred.clone());
                }
            }
        }
    }
    cone
}

/// Split the uncovered set into single-rooted cones. Roots are uncovered
/// instances none of whose sinks are uncovered; each root claims its
/// uncovered fanin, and overlapping claims go to the larger cone (ties to
/// the lower root id). Size-1 cones are discarded. Window feasibility is
/// evaluated at each root's placement.
pub fn find_candidate_cones(
    netlist: &Netlist,
    uncovered: &BTreeSet<InstId>,
    layout: &Layout,
    w: usize,
    h: usize,
) -> Result<Vec<MonitorCandidate>, MonitorError> {
    let mut roots: Vec<&InstId> = Vec::new();
    for inst in uncovered {
        let out = &netlist.instances[inst].output;
        let internal_sink = netlist.nets[out]
            .sinks
            .iter()
            .any(|(sink, _)| uncovered.contains(sink));
        if !internal_sink {
            roots.push(inst);
        }
    }

    // Claims in (size desc, root id asc) priority; each node goes to the
    // first cone that claims it.
    let mut claims: Vec<(InstId, BTreeSet<InstId>)> = roots
        .iter()
        .map(|r| ((*r).clone(), uncovered_fanin(netlist, r, uncovered)))
        .collect();
    claims.sort_by(|(ra, ca), (rb, cb)| cb.len().cmp(&ca.len()).then(ra.cmp(rb)));
    let mut taken: BTreeSet<InstId> = BTreeSet::new();
    let mut cones: Vec<(InstId, BTreeSet<InstId>)> = Vec::new();
    for (root, claim) in claims {
        let cone: BTreeSet<InstId> =
            claim.into_iter().filter(|i| !taken.contains(i)).collect();
        if !cone.contains(&root) {
            continue; // root itself already claimed by a larger cone
        }
        taken.extend(cone.iter().cloned());
        if cone.len() >= 2 {
            cones.push((root, cone));
        }
    }

    let anchors: Vec<InstId> = cones.iter().map(|(r, _)| r.clone()).collect();
    let windows = density_window_analysis(layout, &anchors, w, h)?;
    Ok(cones
        .into_iter()
        .zip(windows)
        .map(|((root, cone), win)| MonitorCandidate {
            root,
            cone,
            free_sites: win.free_sites,
            largest_gap: win.largest_gap,
            feasible: win.feasible,
        })
        .collect())
}

/// Descending cone size, ties by more free window sites then lower root
/// id. Infeasible-window candidates are dropped with reason "Density".
pub fn rank_candidates(
    candidates: Vec<MonitorCandidate>,
) -> (Vec<MonitorCandidate>, Vec<DroppedCandidate>) {
    let mut dropped = Vec::new();
    let mut kept: Vec<MonitorCandidate> = Vec::new();
    for c in candidates {
        if c.feasible {
            kept.push(c);
        } else {
            dropped.push(DroppedCandidate { root: c.root, reason: "Density" });
        }
    }
    kept.sort_by(|a, b| {
        b.size()
            .cmp(&a.size())
            .then(b.free_sites.cmp(&a.free_sites))
            .then(a.root.cmp(&b.root))
    });
    (kept, dropped)
}

fn fresh_net(netlist: &Netlist, base: String) -> NetId {
    let mut name = base.clone();
    let mut k = 0;
    while netlist.nets.contains_key(&NetId(name.clone())) {
        k += 1;
        name = format!("{base}_{k}");
    }
    NetId(name)
}

/// Duplicate the cone with identical cell types, wire the duplicates in the
/// cone's internal topology (external inputs shared with the originals),
/// and add an XOR2 voter comparing the two root outputs. The fire net is
/// flagged as a monitor output; original instances are untouched.
pub fn synthesize_monitor(
    netlist: &Netlist,
    candidate: &MonitorCandidate,
    library: &CellLibrary,
) -> Result<(Netlist, Monitor), MonitorError> {
    let root_out = &netlist.instances[&candidate.root].output;
    for (sink, pin) in &netlist.nets[root_out].sinks {
        let cell = library
            .cells
            .get(&netlist.instances[sink].cell_type)
            .ok_or_else(|| MonitorError::MissingCell(netlist.instances[sink].cell_type.clone()))?;
        if cell.function == LogicFn::Dff && pin == "CK" {
            return Err(MonitorError::RootDrivesClock(candidate.root.0.clone()));
        }
    }
    let voter_cell =
        library.cell_with_fn(LogicFn::Xor).ok_or(MonitorError::MissingVoter)?.name.clone();

    let mut out = netlist.clone();
    // Duplicate output nets, keyed by cone member.
    let mut dup_net: BTreeMap<&InstId, NetId> = BTreeMap::new();
    for member in &candidate.cone {
        library
            .cells
            .get(&netlist.instances[member].cell_type)
            .ok_or_else(|| MonitorError::MissingCell(netlist.instances[member].cell_type.clone()))?;
        dup_net.insert(member, fresh_net(netlist, format!("D{member}_y")));
    }

    let mut duplicates = Vec::new();
    for member in &candidate.cone {
        let orig = &netlist.instances[member];
        let inputs: Vec<(String, NetId)> = orig
            .inputs
            .iter()
            .map(|(pin, net)| {
                let src = netlist
                    .driver_inst(net)
                    .filter(|d| candidate.cone.contains(*d) && pin != "CK")
                    .map(|d| dup_net[d].clone())
                    .unwrap_or_else(|| net.clone());
                (pin.clone(), src)
            })
            .collect();
        let dup_id = InstId(format!("D{member}"));
        out.add_instance(dup_id.clone(), &orig.cell_type, inputs, dup_net[member].clone())?;
        out.guard_insts.insert(dup_id.clone());
        duplicates.push(dup_id);
    }

    let voter = InstId(format!("V{}", candidate.root));
    let fire_net = fresh_net(netlist, format!("V{}_fire", candidate.root));
    out.add_instance(
        voter.clone(),
        &voter_cell,
        alloc::vec![
            ("A".into(), root_out.clone()),
            ("B".into(), dup_net[&candidate.root].clone()),
        ],
        fire_net.clone(),
    )?;
    out.guard_insts.insert(voter.clone());
    out.flag_monitor_fire(fire_net.clone());

    Ok((
        out,
        Monitor {
            root: candidate.root.clone(),
            cone: candidate.cone.clone(),
            duplicates,
            voter,
            fire_net,
        },
    ))
}
