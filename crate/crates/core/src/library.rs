//! Cell library: per-type logic function, area/power weights, footprint
//! width in sites, and the linear delay model parameters.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use thiserror::Error;

/// Logic primitives with closed-form semantics. Complex cells must be
/// decomposed upstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LogicFn {
    Inv,
    Buf,
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Mux2,
    Dff,
}

impl LogicFn {
    pub fn from_tag(tag: &str) -> Option<Self> {
        Some(match tag {
            "INV" => LogicFn::Inv,
            "BUF" => LogicFn::Buf,
            "AND" => LogicFn::And,
            "NAND" => LogicFn::Nand,
            "OR" => LogicFn::Or,
            "NOR" => LogicFn::Nor,
            "XOR" => LogicFn::Xor,
            "XNOR" => LogicFn::Xnor,
            "MUX2" => LogicFn::Mux2,
            "DFF" => LogicFn::Dff,
        _ => return None,
        })
    }

    pub fn tag(&self) -> &'static str {
        match self {
            LogicFn::Inv => "INV",
            LogicFn::Buf => "BUF",
            LogicFn::And => "AND",
            LogicFn::Nand => "NAND",
            LogicFn::Or => "OR",
            LogicFn::Nor => "NOR",
            LogicFn::Xor => "XOR",
            LogicFn::Xnor => "XNOR",
            LogicFn::Mux2 => "MUX2",
            LogicFn::Dff => "DFF",
        }
    }

    pub fn is_sequential(&self) -> bool {
        matches!(self, LogicFn::Dff)
    }

    /// Number of logic (non-clock) input pins.
    pub fn data_arity(&self) -> usize {
        match self {
            LogicFn::Inv | LogicFn::Buf | LogicFn::Dff => 1,
            LogicFn::Mux2 => 3,
            _ => 2,
        }
    }

    /// Combinational evaluation. Inputs are in declared pin order
    /// (for MUX2: a, b, select). Panics on DFF; flops are evaluated by the
    /// simulator at cycle boundaries.
    pub fn eval(&self, inputs: &[bool]) -> bool {
        match self {
            LogicFn::Inv => !inputs[0],
            LogicFn::Buf => inputs[0],
            LogicFn::And => inputs[0] & inputs[1],
            LogicFn::Nand => !(inputs[0] & inputs[1]),
            LogicFn::Or => inputs[0] | inputs[1],
            LogicFn::Nor => !(inputs[0] | inputs[1]),
            LogicFn::Xor => inputs[0] ^ inputs[1],
            LogicFn::Xnor => !(inputs[0] ^ inputs[1]),
            LogicFn::Mux2 => {
                if inputs[2] {
                    inputs[1]
                } else {
                    inputs[0]
                }
            }
            LogicFn::Dff => panic!("DFF has no combinational evaluation"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinDir {
    Input,
    Output,
}

#[derive(Debug, Clone)]
pub struct Pin {
    pub name: String,
    pub dir: PinDir,
}

/// One library cell. `delay` is the intrinsic delay in ns, `load` the
/// per-fanout delay coefficient in ns, `width` the footprint in sites.
#[derive(Debug, Clone)]
pub struct Cell {
    pub name: String,
    pub function: LogicFn,
    pub area: f64,
    pub width: u32,
    pub power: f64,
    pub delay: f64,
    pub load: f64,
    pub pins: Vec<Pin>,
}

impl Cell {
    pub fn input_pins(&self) -> impl Iterator<Item = &Pin> {
        self.pins.iter().filter(|p| p.dir == PinDir::Input)
    }

    pub fn output_pin(&self) -> Option<&Pin> {
        self.pins.iter().find(|p| p.dir == PinDir::Output)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LibraryError {
    #[error("cell {0}: area must be positive")]
    NonPositiveArea(String),
    #[error("cell {0}: width must be at least one site")]
    ZeroWidth(String),
    #[error("cell {0}: intrinsic delay must be non-negative")]
    NegativeDelay(String),
    #[error("cell {0}: expected exactly one output pin")]
    BadOutputPin(String),
    #[error("cell {0}: pin count does not match logic function")]
    BadPinCount(String),
    #[error("library has no cell of type {0}")]
    UnknownCell(String),
}

/// A cell library plus the physical/timing header parameters shared by the
/// layout and timing models: site width and row height in um, the lumped
/// wire delay coefficient in ns per um, and the hold constant in ns.
#[derive(Debug, Clone)]
pub struct CellLibrary {
    pub cells: BTreeMap<String, Cell>,
    pub site_width: f64,
    pub row_height: f64,
    pub wire_delay: f64,
    pub hold: f64,
}

impl Default for CellLibrary {
    fn default() -> Self {
        CellLibrary {
            cells: BTreeMap::new(),
            site_width: 0.2,
            row_height: 1.4,
            wire_delay: 0.0,
            hold: 0.0,
        }
    }
}

impl CellLibrary {
    pub fn get(&self, cell_type: &str) -> Result<&Cell, LibraryError> {
        self.cells
            .get(cell_type)
            .ok_or_else(|| LibraryError::UnknownCell(cell_type.into()))
    }

    /// Insert a cell after checking its invariants.
    pub fn add_cell(&mut self, cell: Cell) -> Result<(), LibraryError> {
        if cell.area <= 0.0 {
            return Err(LibraryError::NonPositiveArea(cell.name));
        }
        if cell.width == 0 {
            return Err(LibraryError::ZeroWidth(cell.name));
        }
        if cell.delay < 0.0 {
            return Err(LibraryError::NegativeDelay(cell.name));
        }
        if cell.pins.iter().filter(|p| p.dir == PinDir::Output).count() != 1 {
            return Err(LibraryError::BadOutputPin(cell.name));
        }
        // DFF carries an extra clock pin on top of its data pin.
        let expect = cell.function.data_arity() + usize::from(cell.function.is_sequential());
        if cell.input_pins().count() != expect {
            return Err(LibraryError::BadPinCount(cell.name));
        }
        self.cells.insert(cell.name.clone(), cell);
        Ok(())
    }

    /// First cell of the given function, by name order. Monitor synthesis
    /// uses this to pick the XOR2 voter and alert-tree gates.
    pub fn cell_with_fn(&self, f: LogicFn) -> Option<&Cell> {
        self.cells.values().find(|c| c.function == f)
    }
}
