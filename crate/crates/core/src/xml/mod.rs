//! PSV documents: structural validation, parsing and canonical serialization.

pub mod grammar;
mod read;
mod write;

use crate::diag::Diagnostic;
use crate::model::Model;
use crate::validator;

/// Why a document could not be turned into a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Not well-formed XML.
    Malformed,
    /// Well-formed, but violates the element grammar.
    Structure,
    /// Structurally valid, but references something undeclared.
    Reference,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseFailure {
    pub kind: FailureKind,
    pub diagnostics: Vec<Diagnostic>,
}

/// Structural check only: element nesting, required attributes and
/// enumerated attribute values. Cross references are never inspected.
pub fn validate_structure(doc: &str) -> Vec<Diagnostic> {
    match read::load(doc) {
        Err(d) => vec![d],
        Ok(parsed) => read::check_structure(&parsed),
    }
}

/// Parses a document into a model, with structural and reference checks.
pub fn parse(doc: &str) -> Result<Model, Vec<Diagnostic>> {
    parse_detailed(doc).map_err(|f| f.diagnostics)
}

/// Like [`parse`], also reporting which stage rejected the document.
pub fn parse_detailed(doc: &str) -> Result<Model, ParseFailure> {
    let model = read_model(doc)?;
    let refs = validator::check_references(&model);
    if refs.is_empty() {
        Ok(model)
    } else {
        Err(ParseFailure { kind: FailureKind::Reference, diagnostics: refs })
    }
}

/// Parses without resolving identifiers.
pub fn read_model(doc: &str) -> Result<Model, ParseFailure> {
    let parsed = read::load(doc).map_err(|d| ParseFailure { kind: FailureKind::Malformed, diagnostics: vec![d] })?;
    let structure = read::check_structure(&parsed);
    if !structure.is_empty() {
        return Err(ParseFailure { kind: FailureKind::Structure, diagnostics: structure });
    }
    read::build(&parsed).map_err(|diagnostics| ParseFailure { kind: FailureKind::Structure, diagnostics })
}

/// Canonical, deterministic serialization.
pub fn serialize(m: &Model) -> String {
    write::serialize(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples;

    const MINIMAL_HEAD: &str = r#"<model>
  <set id="S"/>
  <declaration variable="a" set="S"/>
  <protocol>
    <entity id="Alice"/>
    <entity id="Bob"/>
"#;

    fn doc(messages: &str) -> String {
        format!("{MINIMAL_HEAD}{messages}  </protocol>\n</model>\n")
    }

    #[test]
    fn missing_protocol() {
        let diags = validate_structure("<model/>");
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "missing-protocol");
        assert_eq!(diags[0].path.to_string(), "/model");
        assert_eq!(parse("<model/>").unwrap_err()[0].code, "missing-protocol");
    }

    #[test]
    fn malformed_xml_is_one_error() {
        let err = parse_detailed("<model><protocol></model>").unwrap_err();
        assert_eq!(err.kind, FailureKind::Malformed);
        assert_eq!(err.diagnostics.len(), 1);
        assert_eq!(err.diagnostics[0].code, "malformed-xml");
        assert_eq!(err.diagnostics[0].path.to_string(), "/");
    }

    #[test]
    fn missing_to_attribute() {
        let d = doc(r#"    <message from="Alice">
      <event type="send"><variable id="a"/></event>
      <event type="receive"><variable id="a"/></event>
    </message>
"#);
        let diags = validate_structure(&d);
        assert_eq!(diags.len(), 1, "{diags:?}");
        assert_eq!(diags[0].code, "missing-attribute");
        assert_eq!(diags[0].path.to_string(), "/model/protocol/message[1]");
    }

    #[test]
    fn undeclared_set_is_structurally_fine() {
        let d = r#"<model>
  <declaration variable="a" set="Nowhere"/>
  <protocol>
    <entity id="Alice"/>
    <message from="Alice" to="Bob">
      <event type="send"><variable id="a"/></event>
      <event type="receive"><variable id="a"/></event>
    </message>
  </protocol>
</model>"#;
        assert!(validate_structure(d).is_empty());
        let err = parse_detailed(d).unwrap_err();
        assert_eq!(err.kind, FailureKind::Reference);
        let codes: Vec<_> = err.diagnostics.iter().map(|d| d.code.as_ref()).collect();
        assert!(codes.contains(&"undeclared-set"), "{codes:?}");
        assert!(codes.contains(&"undeclared-entity"), "{codes:?}");
    }

    #[test]
    fn self_message_rejected() {
        let d = doc(r#"    <message from="Alice" to="Alice">
      <event type="send"><variable id="a"/></event>
      <event type="receive"><variable id="a"/></event>
    </message>
"#);
        let diags = parse(&d).unwrap_err();
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, "self-message");
        assert_eq!(diags[0].path.to_string(), "/model/protocol/message[1]");
    }

    #[test]
    fn unknown_elements_and_attributes() {
        let d = doc(r#"    <message from="Alice" to="Bob" colour="red">
      <event type="send"><variable id="a"/></event>
      <bogus/>
      <event type="receive"><variable id="a"/></event>
    </message>
"#);
        let codes: Vec<_> = validate_structure(&d).into_iter().map(|d| d.code.into_owned()).collect();
        assert_eq!(codes, ["unknown-attribute", "unexpected-element", "unknown-element"]);
    }

    #[test]
    fn events_must_be_send_then_receive() {
        let d = doc(r#"    <message from="Alice" to="Bob">
      <event type="receive"><variable id="a"/></event>
      <event type="send"><variable id="a"/></event>
    </message>
"#);
        let diags = parse(&d).unwrap_err();
        assert!(diags.iter().all(|d| d.code == "event-order"));
        assert_eq!(diags.len(), 2);
    }

    #[test]
    fn arity_attribute_must_match_signature() {
        let d = r#"<model>
  <set id="S"/>
  <function id="f" set="S" arity="3"><set id="S"/></function>
  <protocol><entity id="A"/><message from="A" to="B"><event type="send"/><event type="receive"/></message></protocol>
</model>"#;
        let err = read_model(d).unwrap_err();
        assert_eq!(err.diagnostics[0].code, "arity-mismatch");
    }

    #[test]
    fn empty_optional_elements_are_normalized() {
        let with = doc(r#"    <message from="Alice" to="Bob">
      <pre/>
      <event type="send"><variable id="a"/></event>
      <channel/>
      <event type="receive"><variable id="a"/></event>
      <post></post>
    </message>
    <finalise entity="Alice"/>
"#);
        let without = doc(r#"    <message from="Alice" to="Bob">
      <event type="send"><variable id="a"/></event>
      <event type="receive"><variable id="a"/></event>
    </message>
"#);
        let a = parse(&with).unwrap();
        let b = parse(&without).unwrap();
        assert_eq!(a, b);
        assert!(a.protocol.finalise.is_empty());
        assert!(!serialize(&a).contains("finalise"));
    }

    #[test]
    fn message_element_order() {
        let m = parse(samples::DHKE).unwrap();
        let text = serialize(&m);
        let msg_start = text.find("<message").unwrap();
        let msg = &text[msg_start..text[msg_start..].find("</message>").unwrap() + msg_start];
        let pos = |needle: &str| msg.find(needle).unwrap_or_else(|| panic!("{needle} in {msg}"));
        assert!(pos("<knowledge") < pos("<pre"));
        assert!(pos("<pre") < pos("<event type=\"send\""));
        assert!(pos("<event type=\"send\"") < pos("<channel"));
        assert!(pos("<channel") < pos("<event type=\"receive\""));
        assert!(pos("<event type=\"receive\"") < pos("<post"));
    }

    #[test]
    fn samples_are_canonical_and_round_trip() {
        for (name, text) in samples::ALL {
            assert!(validate_structure(text).is_empty(), "{name}");
            let m = parse(text).unwrap_or_else(|d| panic!("{name}: {d:?}"));
            let out = serialize(&m);
            assert_eq!(out, *text, "{name} is stored in canonical form");
            assert_eq!(parse(&out).unwrap(), m);
        }
    }

    #[test]
    fn attribute_values_are_escaped() {
        let mut m = parse(samples::DHKE).unwrap();
        m.sets[0].hint = Some(crate::model::Hint::new("a < b & \"c\""));
        let text = serialize(&m);
        assert!(text.contains("hint=\"a &lt; b &amp; &quot;c&quot;\""));
        assert_eq!(parse(&text).unwrap(), m);
    }
}
