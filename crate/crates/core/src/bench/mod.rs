//! Error metrics, benchmark campaigns, windowed runs and report output.

pub mod campaign;
pub mod metrics;
pub mod report;
pub mod validate;
pub mod windowed;

pub use campaign::{
    build_offline, build_store, fom_references, median_time, run_campaign, solve_online, training_coordinates, CampaignConfig, FieldTolerances,
    OfflineProducts, OnlineOutcome, References, WindowSettings,
};
pub use metrics::{error_metrics, field_errors, relative_error, st_norm_sq, FieldErrors};
pub use report::{emit_report, format_metrics_csv, format_summary, parse_metrics_csv, Method, MetricsRecord};
pub use validate::{kinematic_defect, validate_invariants, Check};
pub use windowed::{join_windows, periodic_params, run_windowed, solve_windows, split_windows, WindowedReport, WindowedRun};
