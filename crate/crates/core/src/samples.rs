//! Bundled example models.

pub const DHKE: &str = include_str!("../../../samples/dhke.psv");
pub const NS: &str = include_str!("../../../samples/ns.psv");
pub const NSL: &str = include_str!("../../../samples/nsl.psv");

/// `(name, document)` pairs.
pub const ALL: &[(&str, &str)] = &[("dhke", DHKE), ("needham-schroeder", NS), ("needham-schroeder-lowe", NSL)];

pub fn by_name(name: &str) -> Option<&'static str> {
    ALL.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}
