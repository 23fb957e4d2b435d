//! Configuration, cached eigensolves, per-point indicator runs, sweeps and
//! run reports.

mod baseline;
mod cache;
mod config;
mod report;
mod run;

pub use baseline::{baseline, TABLE_BINS, TABLE_S_MAX};
pub use cache::{cache_key, EigenCache, Operator};
pub use config::{
    BackendChoice, BaselineSection, DsffSection, DspfSection, Indicator, IndicatorSection, ModelSection, OneOrMany,
    Point, RunConfig, RunSection, SelectionSection, TimeSection, UnfoldingSection, Z0,
};
pub use report::report;
pub use run::{
    closed_spectrum, effective_workers, execute, open_spectrum, run, sweep, FileEntry, PointResult, PointSummary,
    RunManifest, MAX_WORKERS_ENV,
};
