//! Trojan campaign file: one spec per line,
//! `trojan target=<inst> trigger=<net:val,...> arm=<cycles>`.
//! `trigger=` may be omitted or empty for an always-on payload.

use gatemon_core::attack::TrojanSpec;
use gatemon_core::{InstId, NetId};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrojanParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

fn syntax(line: usize, msg: impl Into<String>) -> TrojanParseError {
    TrojanParseError::Syntax { line, msg: msg.into() }
}

pub fn load_trojan_specs(text: &str) -> Result<Vec<TrojanSpec>, TrojanParseError> {
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
        if tokens.next() != Some("trojan") {
            return Err(syntax(line, "expected `trojan target=... trigger=... arm=...`"));
        }
        let mut target = None;
        let mut trigger = Vec::new();
        let mut arm = 0usize;
        for tok in tokens {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| syntax(line, format!("expected key=value, got `{tok}`")))?;
            match key {
                "target" => target = Some(InstId::from(val)),
                "trigger" => {
                    for pair in val.split(',').filter(|p| !p.is_empty()) {
                        let (net, v) = pair.split_once(':').ok_or_else(|| {
                            syntax(line, format!("trigger literal `{pair}` must be net:0|1"))
                        })?;
                        let v = match v {
                            "0" => false,
                            "1" => true,
                            other => {
                                return Err(syntax(line, format!("literal value `{other}`")))
                            }
                        };
                        trigger.push((NetId::from(net), v));
                    }
                }
                "arm" => {
                    arm = val
                        .parse()
                        .map_err(|_| syntax(line, format!("arm `{val}` must be an integer")))?
                }
                other => return Err(syntax(line, format!("unknown field `{other}`"))),
            }
        }
        let target = target.ok_or_else(|| syntax(line, "trojan needs target="))?;
        out.push(TrojanSpec { target, trigger, arm });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_campaign() {
        let specs = load_trojan_specs(
            "# campaign\ntrojan target=g1 trigger=a:1,b:0 arm=2\ntrojan target=u2\n",
        )
        .unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].target, InstId::from("g1"));
        assert_eq!(specs[0].trigger, vec![(NetId::from("a"), true), (NetId::from("b"), false)]);
        assert_eq!(specs[0].arm, 2);
        assert!(specs[1].trigger.is_empty());
        assert_eq!(specs[1].arm, 0);
    }

    #[test]
    fn rejects_bad_literal() {
        assert!(load_trojan_specs("trojan target=g1 trigger=a:x\n").is_err());
    }
}
