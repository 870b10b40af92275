pub mod layout_snap;
pub mod library;
pub mod manifest;
pub mod netlist_text;
pub mod trojan;
