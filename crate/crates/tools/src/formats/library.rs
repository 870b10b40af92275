//! Cell library text format.
//!
//! ```text
//! # header parameters (all optional, defaults in parentheses)
//! site_width 0.2      # µm per placement site
//! row_height 1.4      # µm per row
//! wire_delay 0.001    # ns per µm of Manhattan wire
//! hold 0.0            # hold-time constant, ns
//! cell INV fn=INV area=0.56 width=2 power=0.02 delay=0.05 load=0.01 pins=in:A,out:Y
//! ```

use gatemon_core::{Cell, CellLibrary, LogicFn, Pin, PinDir};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LibraryParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: cell {cell}: missing field {field}")]
    MissingField { line: usize, cell: String, field: &'static str },
    #[error("line {line}: unknown logic function tag {tag}")]
    UnknownFn { line: usize, tag: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: gatemon_core::LibraryError,
    },
}

fn syntax(line: usize, msg: impl Into<String>) -> LibraryParseError {
    LibraryParseError::Syntax { line, msg: msg.into() }
}

fn parse_pins(spec: &str, line: usize) -> Result<Vec<Pin>, LibraryParseError> {
    let mut pins = Vec::new();
    for part in spec.split(',') {
        let (dir, name) = part
            .split_once(':')
            .ok_or_else(|| syntax(line, format!("pin `{part}` must be dir:name")))?;
        let dir = match dir {
            "in" => PinDir::Input,
            "out" => PinDir::Output,
            other => return Err(syntax(line, format!("pin direction `{other}`"))),
        };
        pins.push(Pin { name: name.to_string(), dir });
    }
    Ok(pins)
}

pub fn load_cell_library(text: &str) -> Result<CellLibrary, LibraryParseError> {
    let mut lib = CellLibrary::default();
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
        let head = tokens.next().unwrap();
        match head {
            "site_width" | "row_height" | "wire_delay" | "hold" => {
                let val: f64 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| syntax(line, format!("{head} needs a number")))?;
                match head {
                    "site_width" => lib.site_width = val,
                    "row_height" => lib.row_height = val,
                    "wire_delay" => lib.wire_delay = val,
                    _ => lib.hold = val,
                }
            }
            "cell" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| syntax(line, "cell needs a name"))?
                    .to_string();
                let mut function = None;
                let mut area = None;
                let mut width = None;
                let mut power = None;
                let mut delay = None;
                let mut load = None;
                let mut pins = None;
                for tok in tokens {
                    let (key, val) = tok
                        .split_once('=')
                        .ok_or_else(|| syntax(line, format!("expected key=value, got `{tok}`")))?;
                    match key {
                        "fn" => {
                            function = Some(LogicFn::from_tag(val).ok_or_else(|| {
                                LibraryParseError::UnknownFn { line, tag: val.to_string() }
                            })?)
                        }
                        "area" => area = val.parse().ok(),
                        "width" => width = val.parse().ok(),
                        "power" => power = val.parse().ok(),
                        "delay" => delay = val.parse().ok(),
                        "load" => load = val.parse().ok(),
                        "pins" => pins = Some(parse_pins(val, line)?),
                        other => return Err(syntax(line, format!("unknown field `{other}`"))),
                    }
                }
                let missing = |field| LibraryParseError::MissingField {
                    line,
                    cell: name.clone(),
                    field,
                };
                let cell = Cell {
                    function: function.ok_or_else(|| missing("fn"))?,
                    area: area.ok_or_else(|| missing("area"))?,
                    width: width.ok_or_else(|| missing("width"))?,
                    power: power.ok_or_else(|| missing("power"))?,
                    delay: delay.ok_or_else(|| missing("delay"))?,
                    load: load.ok_or_else(|| missing("load"))?,
                    pins: pins.ok_or_else(|| missing("pins"))?,
                    name,
                };
                lib.add_cell(cell).map_err(|source| LibraryParseError::Invalid { line, source })?;
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    Ok(lib)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_header_and_cell() {
        let lib = load_cell_library(
            "site_width 0.2\nrow_height 1.4\nwire_delay 0.002\nhold 0.01\n\
             cell INV fn=INV area=0.56 width=2 power=0.02 delay=0.05 load=0.01 pins=in:A,out:Y\n",
        )
        .unwrap();
        assert_eq!(lib.wire_delay, 0.002);
        let inv = lib.get("INV").unwrap();
        assert_eq!(inv.width, 2);
        assert_eq!(inv.function, LogicFn::Inv);
    }

    #[test]
    fn zero_area_is_rejected() {
        let err = load_cell_library(
            "cell INV fn=INV area=0 width=2 power=0.02 delay=0.05 load=0.01 pins=in:A,out:Y\n",
        )
        .unwrap_err();
        assert!(matches!(err, LibraryParseError::Invalid { line: 1, .. }));
    }

    #[test]
    fn unknown_fn_tag_is_an_error() {
        let err = load_cell_library(
            "cell FOO fn=FOO area=1 width=2 power=0.02 delay=0.05 load=0.01 pins=in:A,out:Y\n",
        )
        .unwrap_err();
        assert_eq!(err, LibraryParseError::UnknownFn { line: 1, tag: "FOO".into() });
    }

    #[test]
    fn missing_field_names_the_field() {
        let err = load_cell_library("cell INV fn=INV area=1\n").unwrap_err();
        assert!(matches!(err, LibraryParseError::MissingField { field: "width", .. }));
    }
}
