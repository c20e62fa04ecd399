//! Problem representation: instances, normalization checks, entry-oracle
//! access and dual certificates.

mod dual;
mod instance;
mod json;
mod oracle;

pub use dual::{min_slack, slack_matrix, verify_dual, DualCertificate, DualVector};
pub use instance::{SdpInstance, ValidationReport, Violation};
pub use json::{InstanceFile, MatrixFile};
pub use oracle::EntryOracle;
