//! Subcommand implementations. Each command reads its inputs from the
//! config, writes deterministic artifacts into the output directory, and
//! returns the paths it wrote so tests can assert on them.

use crate::config::PipelineConfig;
use crate::formats::layout_snap::print_layout;
use crate::formats::library::load_cell_library;
use crate::formats::manifest::load_manifest;
use crate::formats::netlist_text::{parse_netlist, print_netlist};
use crate::formats::trojan::load_trojan_specs;
use crate::report;
use anyhow::{bail, Context, Result};
use gatemon_core::assertion::select_assertions;
use gatemon_core::attack::{evaluate_detection, random_stimulus};
use gatemon_core::coverage::{security_coverage, CoverageMap, CoverageMode};
use gatemon_core::eco::{attach_alert_tree, run_eco, EcoResult};
use gatemon_core::layout::{build_floorplan, hpwl, insert_cells, place, InsertOutcome, Layout};
use gatemon_core::monitor::{find_candidate_cones, rank_candidates};
use gatemon_core::sim::CompiledSim;
use gatemon_core::sta::compute_timing;
use gatemon_core::{CellLibrary, Netlist};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub struct LoadedDesign {
    pub netlist: Netlist,
    pub library: CellLibrary,
}

pub fn load_design(config: &PipelineConfig) -> Result<LoadedDesign> {
    let lib_text = fs::read_to_string(&config.library)
        .with_context(|| format!("reading library {}", config.library.display()))?;
    let library = load_cell_library(&lib_text)?;
    let net_text = fs::read_to_string(&config.netlist)
        .with_context(|| format!("reading netlist {}", config.netlist.display()))?;
    let netlist = parse_netlist(&net_text)?;
    let diags = netlist.validate(&library);
    if !diags.is_empty() {
        let mut msg = String::from("netlist validation failed:\n");
        for d in &diags {
            let _ = writeln!(msg, "  {d}");
        }
        bail!(msg);
    }
    Ok(LoadedDesign { netlist, library })
}

fn write_out(out_dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Parse + validate, then re-emit the canonical form and a resource
/// summary.
pub fn cmd_parse(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let design = load_design(config)?;
    let summary = design.netlist.area_power_summary(&design.library)?;
    let mut files = Vec::new();
    files.push(write_out(out_dir, "canonical.net", &print_netlist(&design.netlist, &design.library))?);
    let json = serde_json::json!({
        "instances": summary.instances,
        "nets": design.netlist.nets.len(),
        "primary_inputs": design.netlist.primary_inputs.len(),
        "primary_outputs": design.netlist.primary_outputs.len(),
        "assert_outs": design.netlist.assert_outs.len(),
        "area": summary.area,
        "power": summary.power,
    });
    files.push(write_out(out_dir, "design.json", &report::to_json_string(&json)?)?);
    Ok(files)
}

fn coverage_files(
    netlist: &Netlist,
    library: &CellLibrary,
    mode: CoverageMode,
    seed: u64,
    out_dir: &Path,
    stem: &str,
) -> Result<(CoverageMap, PathBuf)> {
    let map = CoverageMap::analyze(netlist, library, mode, seed)?;
    let sc = security_coverage(&map)?;
    let path = write_out(
        out_dir,
        &format!("{stem}.json"),
        &report::to_json_string(&report::coverage_json(&map, &sc))?,
    )?;
    Ok((map, path))
}

/// Structural coverage always; in exact mode additionally the exact report
/// and a diff of the per-assertion sets.
pub fn cmd_coverage(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let design = load_design(config)?;
    let mut files = Vec::new();
    let (structural, p) = coverage_files(
        &design.netlist,
        &design.library,
        CoverageMode::Structural,
        config.seed,
        out_dir,
        "coverage_structural",
    )?;
    files.push(p);
    if let CoverageMode::Exact { .. } = config.coverage_mode {
        let (exact, p) = coverage_files(
            &design.netlist,
            &design.library,
            config.coverage_mode,
            config.seed,
            out_dir,
            "coverage_exact",
        )?;
        files.push(p);
        let mut diff = String::new();
        for (net, s_set) in &structural.per_assertion {
            let e_set = &exact.per_assertion[net];
            for inst in s_set.difference(e_set) {
                let _ = writeln!(diff, "{net}: {inst} structural-only");
            }
        }
        files.push(write_out(out_dir, "coverage_diff.txt", &diff)?);
    }
    Ok(files)
}

/// The assertion selection loop over the candidate manifest.
pub fn cmd_select(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let design = load_design(config)?;
    let manifest_path = config
        .manifest
        .as_ref()
        .context("select requires manifest= in the config")?;
    let text = fs::read_to_string(manifest_path)
        .with_context(|| format!("reading manifest {}", manifest_path.display()))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let candidates = load_manifest(&text, base)?;
    let outcome = select_assertions(
        &design.netlist,
        &candidates,
        &config.selection,
        &design.library,
        config.clock_period,
    )?;
    let verdicts: Vec<_> = outcome.verdicts.iter().map(report::verdict_json).collect();
    let mut files = Vec::new();
    files.push(write_out(out_dir, "verdicts.json", &report::to_json_string(&verdicts)?)?);
    files.push(write_out(
        out_dir,
        "selected.net",
        &print_netlist(&outcome.netlist, &design.library),
    )?);
    Ok(files)
}

/// Floorplan + initial placement + timing/wirelength report.
pub fn cmd_place(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let design = load_design(config)?;
    let floorplan = build_floorplan(&design.netlist, &design.library, config.target_density)?;
    let layout = place(&design.netlist, &design.library, &floorplan)?;
    let timing =
        compute_timing(&design.netlist, &design.library, Some(&layout), config.clock_period)?;
    let wirelength = hpwl(&design.netlist, &layout)?;
    let mut files = Vec::new();
    files.push(write_out(out_dir, "placement.lay", &print_layout(&layout))?);
    files.push(write_out(
        out_dir,
        "timing.json",
        &report::to_json_string(&report::timing_json(&timing))?,
    )?);
    let json = serde_json::json!({
        "density": layout.density(),
        "hpwl": wirelength,
        "rows": layout.rows,
        "sites_per_row": layout.sites_per_row,
    });
    files.push(write_out(out_dir, "placement.json", &report::to_json_string(&json)?)?);
    Ok(files)
}

pub struct HardenArtifacts {
    pub netlist: Netlist,
    pub layout: Layout,
    pub eco: EcoResult,
    pub files: Vec<PathBuf>,
}

/// The end-to-end back-end flow: coverage → placement → candidate cones →
/// incremental monitor insertion → alert aggregation → reports.
pub fn run_harden(config: &PipelineConfig, out_dir: &Path) -> Result<HardenArtifacts> {
    let design = load_design(config)?;
    let library = &design.library;

    // Selection first when a manifest is configured, so the hardening run
    // starts from the accepted assertion set.
    let netlist = match &config.manifest {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading manifest {}", path.display()))?;
            let base = path.parent().unwrap_or(Path::new("."));
            let candidates = load_manifest(&text, base)?;
            select_assertions(
                &design.netlist,
                &candidates,
                &config.selection,
                library,
                config.clock_period,
            )?
            .netlist
        }
        None => design.netlist,
    };

    let map = CoverageMap::analyze(&netlist, library, config.coverage_mode, config.seed)?;
    let sc_before = {
        let r = security_coverage(&map)?;
        (r.sc_numerator, r.sc_denominator)
    };
    let uncovered = map.uncovered_nodes().into_iter().collect();

    let floorplan = build_floorplan(&netlist, library, config.target_density)?;
    let baseline_layout = place(&netlist, library, &floorplan)?;
    let baseline_timing =
        compute_timing(&netlist, library, Some(&baseline_layout), config.clock_period)?;
    let baseline_hpwl = hpwl(&netlist, &baseline_layout)?;
    let baseline_res = netlist.area_power_summary(library)?;

    let cones = find_candidate_cones(
        &netlist,
        &uncovered,
        &baseline_layout,
        config.eco.window_w,
        config.eco.window_h,
    )?;
    let (ranked, dropped) = rank_candidates(cones);

    let eco = run_eco(
        &netlist,
        &baseline_layout,
        &ranked,
        &config.eco,
        library,
        config.clock_period,
    )?;

    // Aggregate the accepted voters into one alert pin and place the tree
    // anywhere in the remaining gaps.
    let (mut hardened, alert_cells, _) = attach_alert_tree(&eco.netlist, library)?;
    let mut final_layout = eco.layout.clone();
    if !alert_cells.is_empty() {
        let anchor = final_layout
            .placements
            .keys()
            .next()
            .cloned()
            .context("empty layout")?;
        match insert_cells(
            &final_layout,
            &alert_cells,
            &anchor,
            final_layout.sites_per_row * 2,
            final_layout.rows,
        )? {
            InsertOutcome::Placed(l) => final_layout = l,
            InsertOutcome::Infeasible(cell) => {
                // No room even core-wide: ship without the aggregate pin
                // rather than fail the whole run; the voters remain
                // individually observable.
                hardened = eco.netlist.clone();
                let _ = cell;
            }
        }
    }

    let mut files = Vec::new();
    let mut progress = String::new();
    for (i, round) in eco.rounds.iter().enumerate() {
        let snap_name = format!("Layout{}.lay", i + 1);
        files.push(write_out(out_dir, &snap_name, &print_layout(&round.layout))?);
        files.push(write_out(
            out_dir,
            &format!("Layout{}.json", i + 1),
            &report::to_json_string(&report::eco_round_json(round, &snap_name))?,
        )?);
        let _ = writeln!(
            progress,
            "round {} root {} {} wns {:.6} tps {:.6} sc {}/{}",
            i + 1,
            round.root,
            round.verdict.tag(),
            round.wns_after,
            round.tps_after,
            round.sc_after.0,
            round.sc_after.1
        );
    }
    for d in &dropped {
        let _ = writeln!(progress, "dropped {} reason {}", d.root, d.reason);
    }
    files.push(write_out(out_dir, "progress.log", &progress)?);

    let final_timing = compute_timing(&hardened, library, Some(&final_layout), config.clock_period)?;
    let final_hpwl = hpwl(&hardened, &final_layout)?;
    let final_res = hardened.area_power_summary(library)?;

    let summary = report::harden_summary(&eco, sc_before);
    files.push(write_out(out_dir, "harden_summary.json", &report::to_json_string(&summary)?)?);
    files.push(write_out(out_dir, "harden_summary.csv", &report::harden_summary_csv(&summary))?);

    let pct = |before: f64, after: f64| {
        if before > 0.0 {
            (after - before) / before * 100.0
        } else {
            0.0
        }
    };
    let overhead = report::OverheadSummary {
        area_before: baseline_res.area,
        area_after: final_res.area,
        area_delta_pct: pct(baseline_res.area, final_res.area),
        power_before: baseline_res.power,
        power_after: final_res.power,
        power_delta_pct: pct(baseline_res.power, final_res.power),
        density_before: baseline_layout.density(),
        density_after: final_layout.density(),
        hpwl_before: baseline_hpwl,
        hpwl_after: final_hpwl,
        hpwl_delta_pct: pct(baseline_hpwl, final_hpwl),
        wns_after: final_timing.worst_setup_slack,
        tps_after: final_timing.total_positive_slack,
    };
    files.push(write_out(out_dir, "overhead_summary.json", &report::to_json_string(&overhead)?)?);
    files.push(write_out(out_dir, "overhead_summary.csv", &report::overhead_summary_csv(&overhead))?);
    files.push(write_out(
        out_dir,
        "timing_baseline.json",
        &report::to_json_string(&report::timing_json(&baseline_timing))?,
    )?);
    files.push(write_out(
        out_dir,
        "timing_final.json",
        &report::to_json_string(&report::timing_json(&final_timing))?,
    )?);
    files.push(write_out(out_dir, "hardened.net", &print_netlist(&hardened, library))?);
    files.push(write_out(out_dir, "final.lay", &print_layout(&final_layout))?);

    Ok(HardenArtifacts { netlist: hardened, layout: final_layout, eco, files })
}

pub fn cmd_harden(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    Ok(run_harden(config, out_dir)?.files)
}

/// Trojan campaign + clean-run false-positive check against the (already
/// protected) netlist the config points at.
pub fn cmd_attack(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let design = load_design(config)?;
    let netlist = &design.netlist;
    if netlist.assert_outs.is_empty() {
        bail!("attack evaluation needs at least one assert_out or monitor_out");
    }

    // Clean run: no trojan, count cycles where any monitor fire is high.
    let stim = random_stimulus(netlist.primary_inputs.len(), config.sim_cycles, config.seed);
    let sim = CompiledSim::new(netlist, &design.library)?;
    let trace = sim.run(&stim, false)?;
    let clean_fp = (0..stim.len())
        .filter(|c| {
            netlist.monitor_fires.iter().any(|n| trace.value(*c, n).unwrap_or(false))
        })
        .count();

    let mut reports = Vec::new();
    if let Some(path) = &config.trojans {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading trojans {}", path.display()))?;
        for spec in load_trojan_specs(&text)? {
            let r = evaluate_detection(
                netlist,
                &spec,
                &design.library,
                config.sim_cycles,
                config.seed,
            )?;
            reports.push(report::detection_json(spec.target.as_str(), &r));
        }
    }

    let json = serde_json::json!({
        "clean_cycles": stim.len(),
        "clean_false_positives": clean_fp,
        "campaign": reports,
    });
    Ok(vec![write_out(out_dir, "attack_report.json", &report::to_json_string(&json)?)?])
}

/// One-page text digest of a design: size, coverage, timing.
pub fn cmd_report(config: &PipelineConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let design = load_design(config)?;
    let res = design.netlist.area_power_summary(&design.library)?;
    let map = CoverageMap::analyze(
        &design.netlist,
        &design.library,
        CoverageMode::Structural,
        config.seed,
    )?;
    let sc = security_coverage(&map)?;
    let timing = compute_timing(&design.netlist, &design.library, None, config.clock_period)?;
    let mut s = String::new();
    let _ = writeln!(s, "instances {}", res.instances);
    let _ = writeln!(s, "area {:.6}", res.area);
    let _ = writeln!(s, "power {:.6}", res.power);
    let _ = writeln!(s, "sc {}/{}", sc.sc_numerator, sc.sc_denominator);
    let _ = writeln!(s, "wns {:.6}", timing.worst_setup_slack);
    let _ = writeln!(s, "tps {:.6}", timing.total_positive_slack);
    Ok(vec![write_out(out_dir, "report.txt", &s)?])
}
