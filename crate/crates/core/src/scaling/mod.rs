//! Dimension estimates, habit-plane blow-up profiles, the rescaling audit and the
//! differential-inequality checker.

mod audit;
mod blowup;
mod ode;
mod trace;

pub use audit::{rescaling_audit, AuditRow, AUDIT_CSV_HEADER};
pub use blowup::{blowup_direction, blowup_profile, resolvable_h, BlowupProfile, BLOWUP_EXPONENT};
pub use ode::{ode_bound_check, OdeReport, OdeStatus, ODE_SLACK};
pub use trace::{box_counting_dimension, dyadic_scales, BoxCounting, TraceSet};
