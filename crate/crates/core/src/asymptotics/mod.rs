//! Schedules, diagnostic curves and the tail classifier.

pub mod classify;
pub mod curves;
pub mod schedule;

pub use classify::{classify_tail, TailFit, TailVerdict};
pub use curves::{
    SAMPLE_STREAM,
    first_order_curve, hd_decay_curve, hd_ratio_curve, y_curve, Aggregation, CurveMeta,
    CurvePoint, CurveRequest, CurveSource, DepthMethod, DiagnosticCurve,
};
pub use schedule::{
    make_alpha_schedule, make_t_schedule, AlphaKind, AlphaSchedule, NPolicy, TKind, TSchedule,
};
