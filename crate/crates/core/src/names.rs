//! Identifier renaming for target languages.

/// Appends `_v` to names that collide with a reserved word of the target.
pub(crate) fn sanitize(id: &str, reserved: &[&str]) -> String {
    if reserved.contains(&id) {
        format!("{id}_v")
    } else {
        id.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_names_get_suffix() {
        assert_eq!(sanitize("in", &["in", "out"]), "in_v");
        assert_eq!(sanitize("gx", &["in", "out"]), "gx");
    }
}
