//! Protocol specification models in PSV form, their validation, and export
//! to ProVerif, Tamarin and C++.
//!
//! A typical pipeline:
//!
//! ```
//! use metacp::{proverif, validator, xml};
//!
//! let model = xml::parse(metacp::samples::DHKE).unwrap();
//! assert!(validator::check_semantics(&model).is_empty());
//! let pv = proverif::export(&model).unwrap();
//! assert!(pv.text.contains("process (!proc_Alice) | (!proc_Bob) | agreement"));
//! ```

pub mod batch;
pub mod cpp;
pub mod diag;
pub mod hints;
pub mod model;
pub mod pipeline;
pub mod proverif;
pub mod samples;
pub mod tamarin;
pub mod testgen;
pub mod validator;
pub mod xml;

mod names;

/// The PSV element grammar, as a DTD.
pub const PSV_DTD: &str = include_str!("../../../formats/psv.dtd");
