//! Assertion candidate manifest: one line per candidate,
//! `assertion <name> file=<path> map=<pin:net,...>`. Checker paths are
//! resolved relative to the manifest file.

use super::netlist_text::parse_netlist;
use gatemon_core::assertion::AssertionCandidate;
use gatemon_core::NetId;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("candidate {name}: cannot read checker {path}: {source}")]
    Io {
        name: String,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("candidate {name}: {source}")]
    Checker {
        name: String,
        #[source]
        source: super::netlist_text::NetlistParseError,
    },
}

fn syntax(line: usize, msg: impl Into<String>) -> ManifestError {
    ManifestError::Syntax { line, msg: msg.into() }
}

pub fn load_manifest(text: &str, base_dir: &Path) -> Result<Vec<AssertionCandidate>, ManifestError> {
    let mut out = Vec::new();
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
        let mut tokens = stmt.split_whitespace();
        if tokens.next() != Some("assertion") {
            return Err(syntax(line, "expected `assertion <name> file=... map=...`"));
        }
        let name = tokens
            .next()
            .ok_or_else(|| syntax(line, "assertion needs a name"))?
            .to_string();
        let mut file = None;
        let mut map: BTreeMap<String, NetId> = BTreeMap::new();
        for tok in tokens {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("expected key=value, got `{tok}`")))?;
            match key {
                "file" => file = Some(base_dir.join(val)),
                "map" => {
                    for pair in val.split(',') {
                        let (pin, net) = pair.split_once(':').ok_or_else(|| {
                            syntax(line, format!("map entry `{pair}` must be pin:net"))
                        })?;
                        map.insert(pin.to_string(), NetId::from(net));
                    }
                }
                other => return Err(syntax(line, format!("unknown field `{other}`"))),
            }
        }
        let path = file.ok_or_else(|| syntax(line, "assertion needs file="))?;
        let src = std::fs::read_to_string(&path).map_err(|source| ManifestError::Io {
            name: name.clone(),
            path: path.clone(),
            source,
        })?;
        let checker = parse_netlist(&src)
            .map_err(|source| ManifestError::Checker { name: name.clone(), source })?;
        out.push(AssertionCandidate { name, checker, port_map: map });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn loads_candidates_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("chk.net")).unwrap();
        writeln!(f, "input w;\noutput fire;\nINV c1 (.A(w), .Y(fire));").unwrap();
        let manifest = "assertion a0 file=chk.net map=w:n1\n\
                        assertion a1 file=chk.net map=w:n2\n";
        let cands = load_manifest(manifest, dir.path()).unwrap();
        assert_eq!(cands.len(), 2);
        assert_eq!(cands[0].name, "a0");
        assert_eq!(cands[1].port_map["w"], NetId::from("n2"));
        assert_eq!(cands[0].checker.instances.len(), 1);
    }

    #[test]
    fn missing_file_is_reported_with_candidate_name() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_manifest("assertion a0 file=nope.net map=w:n1\n", dir.path()).unwrap_err();
        assert!(matches!(err, ManifestError::Io { ref name, .. } if name == "a0"));
    }
}
