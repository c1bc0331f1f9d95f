//! Trace ingestion, the field-sweep tracking protocol and report assembly.

mod config;
mod io;
mod report;
mod run;
mod source;

pub use config::{
    CampaignConfig, PowerScanSettings, QcSettings, ResonatorSpec, ScanSettings, SimTruth,
    SimulationSettings, SweepSpec, SCHEMA_VERSION,
};
pub use io::{ingest_trace, parse_trace, read_trace, save_trace, trace_to_string, write_trace};
pub use report::{
    build_report, report_table, validate_report_json, CampaignReport, CampaignResults, ReportCell,
    ResonatorReport, REPORT_COLUMNS,
};
pub use run::{
    ramp_duration_ms, run_field_campaign, track_resonance, AuditEvent, AuditLog, CampaignRun,
    KerrOutcome, PowerScanRun, ResonatorRun, ScanTarget, SweepRun, TrackedResonance,
};
pub use source::{
    RecordingSource, ReplaySource, ScanKind, ScanRequest, SyntheticSource, TraceSource,
};
