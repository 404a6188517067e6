//! Keystream extraction, Vernam XOR and the session protocol.

mod keystream;
mod protocol;
mod study;

pub use keystream::{
    extract_keystream, parse_keystream_file, vernam, Keystream, KeystreamBuilder,
    DEFAULT_DECIMATION,
};
pub use protocol::{
    run_protocol, FailureReason, ProtocolLimits, ProtocolSession, Stage, Transcript,
};
pub use study::{throughput_study, throughput_study_with, ThroughputSummary};
