//! Line-oriented structural netlist format.
//!
//! ```text
//! # comment
//! input a;
//! clock clk;
//! output y;
//! assert_out chk;          # checker fire net
//! monitor_out v18_fire;    # voter fire net (implies assert_out)
//! guard D18;               # instance owned by the defense, off-limits to attacks
//! AND2 g1 (.A(a), .B(b), .Y(n1));
//! DFF  r1 (.D(n1), .CK(clk), .Q(q1));
//! ```
//!
//! The output pin of an instance is the one named `Y` or `Q`; all other
//! pins are inputs. Ids match `[A-Za-z_][A-Za-z0-9_.]*`.

use gatemon_core::{CellLibrary, InstId, NetId, Netlist};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NetlistParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: duplicate driver for net {net}")]
    DuplicateDriver { line: usize, net: String },
    #[error("line {line}: instance {inst} has no Y or Q output pin")]
    NoOutputPin { line: usize, inst: String },
}

fn is_id(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn syntax(line: usize, msg: impl Into<String>) -> NetlistParseError {
    NetlistParseError::Syntax { line: line, msg: msg.into() }
}

/// Split `.A(a), .B(b), .Y(n1)` into (pin, net) pairs.
fn parse_ports(body: &str, line: usize) -> Result<Vec<(String, String)>, NetlistParseError> {
    let mut out = Vec::new();
    for part in body.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let rest = part
            .strip_prefix('.')
            .ok_or_else(|| syntax(line, format!("expected .pin(net), got `{part}`")))?;
        let open = rest
            .find('(')
            .ok_or_else(|| syntax(line, format!("missing `(` in port `{part}`")))?;
        let close = rest
            .strip_suffix(')')
            .ok_or_else(|| syntax(line, format!("missing `)` in port `{part}`")))?;
        let pin = rest[..open].trim();
        let net = close[open + 1..].trim();
        if !is_id(pin) || !is_id(net) {
            return Err(syntax(line, format!("bad identifier in port `{part}`")));
        }
        out.push((pin.to_string(), net.to_string()));
    }
    Ok(out)
}

pub fn parse_netlist(text: &str) -> Result<Netlist, NetlistParseError> {
    let mut nl = Netlist::new();
    // Guard/monitor directives may precede the instances they refer to, so
    // tag them after the full pass.
    let mut guards: Vec<(usize, String)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stmt = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if stmt.is_empty() {
            continue;
        }
        let stmt = stmt
            .strip_suffix(';')
            .ok_or_else(|| syntax(line, "statement must end with `;`"))?
            .trim();

        let (head, rest) = stmt.split_once(char::is_whitespace).unwrap_or((stmt, ""));
        let rest = rest.trim();
        match head {
            "input" | "output" | "clock" | "assert_out" | "monitor_out" => {
                if !is_id(rest) {
                    return Err(syntax(line, format!("bad net id `{rest}`")));
                }
                let net = NetId::from(rest);
                match head {
                    "input" => nl.declare_input(net).map_err(|_| {
                        NetlistParseError::DuplicateDriver { line, net: rest.to_string() }
                    })?,
                    "output" => nl.declare_output(net),
                    "clock" => nl.set_clock(net).map_err(|_| {
                        NetlistParseError::DuplicateDriver { line, net: rest.to_string() }
                    })?,
                    "assert_out" => nl.flag_assert_out(net),
                    _ => nl.flag_monitor_fire(net),
                }
            }
            "guard" => {
                if !is_id(rest) {
                    return Err(syntax(line, format!("bad instance id `{rest}`")));
                }
                guards.push((line, rest.to_string()));
            }
            cell_type => {
                if !is_id(cell_type) {
                    return Err(syntax(line, format!("bad cell type `{cell_type}`")));
                }
                let open = rest
                    .find('(')
                    .ok_or_else(|| syntax(line, "instance line missing port list"))?;
                let inst = rest[..open].trim();
                if !is_id(inst) {
                    return Err(syntax(line, format!("bad instance id `{inst}`")));
                }
                let body = rest[open + 1..]
                    .trim()
                    .strip_suffix(')')
                    .ok_or_else(|| syntax(line, "unterminated port list"))?;
                let ports = parse_ports(body, line)?;
                let mut output = None;
                let mut inputs = Vec::new();
                for (pin, net) in ports {
                    if pin == "Y" || pin == "Q" {
                        if output.is_some() {
                            return Err(syntax(line, "multiple output pins"));
                        }
                        output = Some(NetId::from(net));
                    } else {
                        inputs.push((pin, NetId::from(net)));
                    }
                }
                let output = output.ok_or_else(|| NetlistParseError::NoOutputPin {
                    line,
                    inst: inst.to_string(),
                })?;
                nl.add_instance(InstId::from(inst), cell_type, inputs, output.clone())
                    .map_err(|e| match e {
                        gatemon_core::NetlistError::DuplicateDriver(net) => {
                            NetlistParseError::DuplicateDriver { line, net }
                        }
                        other => syntax(line, other.to_string()),
                    })?;
            }
        }
    }

    for (line, inst) in guards {
        let id = InstId(inst.clone());
        if !nl.instances.contains_key(&id) {
            return Err(syntax(line, format!("guard names unknown instance `{inst}`")));
        }
        nl.guard_insts.insert(id);
    }
    Ok(nl)
}

/// Deterministic printer: directives first, then instances in id order.
/// The library supplies output pin names.
pub fn print_netlist(netlist: &Netlist, library: &CellLibrary) -> String {
    let mut s = String::new();
    for net in &netlist.primary_inputs {
        let _ = writeln!(s, "input {net};");
    }
    if let Some(ck) = &netlist.clock {
        let _ = writeln!(s, "clock {ck};");
    }
    for net in &netlist.primary_outputs {
        let _ = writeln!(s, "output {net};");
    }
    for net in &netlist.assert_outs {
        if !netlist.monitor_fires.contains(net) {
            let _ = writeln!(s, "assert_out {net};");
        }
    }
    for net in &netlist.monitor_fires {
        let _ = writeln!(s, "monitor_out {net};");
    }
    for inst in &netlist.guard_insts {
        let _ = writeln!(s, "guard {inst};");
    }
    for (id, inst) in &netlist.instances {
        let out_pin = library
            .cells
            .get(&inst.cell_type)
            .and_then(|c| c.output_pin().map(|p| p.name.clone()))
            .unwrap_or_else(|| "Y".to_string());
        let mut ports: Vec<String> =
            inst.inputs.iter().map(|(p, n)| format!(".{p}({n})")).collect();
        ports.push(format!(".{out_pin}({})", inst.output));
        let _ = writeln!(s, "{} {} ({});", inst.cell_type, id, ports.join(", "));
    }
    s
}
