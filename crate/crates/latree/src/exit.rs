//! Process exit codes.

use latree_core::Error;

pub const OK: i32 = 0;
pub const CONFIG: i32 = 2;
pub const DATA: i32 = 3;
pub const NUMERICAL: i32 = 4;
pub const ALIGNMENT: i32 = 5;

/// Exit code for an error chain: the first core error found decides,
/// anything else (I/O included) counts as a data error.
pub fn code_for(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Config(_) => CONFIG,
                Error::Numerical(_) => NUMERICAL,
                Error::Alignment(_) => ALIGNMENT,
                _ => DATA,
            };
        }
    }
    DATA
}
