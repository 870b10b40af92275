//! Layout snapshot text format: a fixed header followed by one `place`
//! line per instance, sorted by instance id. Floats print with six
//! decimals so identical layouts serialize byte-identically.
//!
//! ```text
//! rows 12
//! sites_per_row 64
//! site_width 0.200000
//! row_height 1.400000
//! target_density 0.620000
//! place g1 0 0 2 0.560000
//! ```

use gatemon_core::layout::{Layout, Placement};
use gatemon_core::InstId;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LayoutSnapError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("missing header field {0}")]
    MissingHeader(&'static str),
}

fn syntax(line: usize, msg: impl Into<String>) -> LayoutSnapError {
    LayoutSnapError::Syntax { line, msg: msg.into() }
}

pub fn print_layout(layout: &Layout) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "rows {}", layout.rows);
    let _ = writeln!(s, "sites_per_row {}", layout.sites_per_row);
    let _ = writeln!(s, "site_width {:.6}", layout.site_width);
    let _ = writeln!(s, "row_height {:.6}", layout.row_height);
    let _ = writeln!(s, "target_density {:.6}", layout.target_density);
    for (id, p) in &layout.placements {
        let _ = writeln!(s, "place {} {} {} {} {:.6}", id, p.row, p.site, p.width, p.area);
    }
    s
}

pub fn parse_layout(text: &str) -> Result<Layout, LayoutSnapError> {
    let mut rows = None;
    let mut sites_per_row = None;
    let mut site_width = None;
    let mut row_height = None;
    let mut target_density = None;
    let mut placements: BTreeMap<InstId, Placement> = BTreeMap::new();

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
        let mut tok = stmt.split_whitespace();
        let head = tok.next().unwrap();
        let mut next = |what: &str| {
            tok.next()
                .map(|t| t.to_string())
                .ok_or_else(|| syntax(line, format!("{head} needs {what}")))
        };
        match head {
            "rows" => rows = Some(next("a count")?.parse().map_err(|_| syntax(line, "rows"))?),
            "sites_per_row" => {
                sites_per_row =
                    Some(next("a count")?.parse().map_err(|_| syntax(line, "sites_per_row"))?)
            }
            "site_width" => {
                site_width =
                    Some(next("a number")?.parse().map_err(|_| syntax(line, "site_width"))?)
            }
            "row_height" => {
                row_height =
                    Some(next("a number")?.parse().map_err(|_| syntax(line, "row_height"))?)
            }
            "target_density" => {
                target_density =
                    Some(next("a number")?.parse().map_err(|_| syntax(line, "target_density"))?)
            }
            "place" => {
                let id = next("an instance id")?;
                let row = next("a row")?.parse().map_err(|_| syntax(line, "row"))?;
                let site = next("a site")?.parse().map_err(|_| syntax(line, "site"))?;
                let width = next("a width")?.parse().map_err(|_| syntax(line, "width"))?;
                let area = next("an area")?.parse().map_err(|_| syntax(line, "area"))?;
                placements.insert(InstId(id), Placement { row, site, width, area });
            }
            other => return Err(syntax(line, format!("unknown directive `{other}`"))),
        }
    }
    Ok(Layout {
        rows: rows.ok_or(LayoutSnapError::MissingHeader("rows"))?,
        sites_per_row: sites_per_row.ok_or(LayoutSnapError::MissingHeader("sites_per_row"))?,
        site_width: site_width.ok_or(LayoutSnapError::MissingHeader("site_width"))?,
        row_height: row_height.ok_or(LayoutSnapError::MissingHeader("row_height"))?,
        target_density: target_density.ok_or(LayoutSnapError::MissingHeader("target_density"))?,
        placements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let mut placements = BTreeMap::new();
        placements.insert(
            InstId::from("g1"),
            Placement { row: 0, site: 3, width: 2, area: 0.56 },
        );
        placements.insert(
            InstId::from("g2"),
            Placement { row: 1, site: 0, width: 4, area: 1.12 },
        );
        let layout = Layout {
            rows: 2,
            sites_per_row: 10,
            site_width: 0.2,
            row_height: 1.4,
            target_density: 0.62,
            placements,
        };
        let text = print_layout(&layout);
        let back = parse_layout(&text).unwrap();
        assert_eq!(back, layout);
        assert_eq!(print_layout(&back), text);
    }

    #[test]
    fn missing_header_is_reported() {
        assert_eq!(
            parse_layout("rows 2\n").unwrap_err(),
            LayoutSnapError::MissingHeader("sites_per_row")
        );
    }
}
