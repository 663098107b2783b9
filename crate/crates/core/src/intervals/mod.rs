//! Interval-type sets of means: Mikusiński windows, their hull through
//! exponential brackets, and the envelopes every mean squeezed between two
//! comparable means has to respect.

mod envelope;
mod smoothness;
mod window;

pub use envelope::{
    normalized, sandwich_envelope, verify_sandwich, Envelope, EnvelopeRow, EnvelopeSegment, PinCheck,
    SandwichReport,
};
pub use smoothness::{smoothness_probe, Prediction, SideReading, SmoothnessReport};
pub use window::{
    exponential_family, hull_membership_exponential, window_membership, HullMembership, MikusinskiWindow,
    WindowMembership,
};
