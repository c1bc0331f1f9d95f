pub mod estimate;
pub mod field;
pub mod fit_trace;
pub mod kerr;
pub mod synth;
