//! Central finite-difference gradient checking.
//!
//! The numeric side only ever evaluates the forward pass, so it is independent
//! of [`Graph::backward`].

use alloc::vec::Vec;

use super::graph::{Graph, Var};
use super::param::{ParamId, ParamStore};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckOptions {
    pub step: f64,
    /// At most this many coordinates per parameter, evenly spaced.
    pub max_coords_per_param: usize,
    /// Denominator floor for the relative error.
    pub floor: f64,
    /// A coordinate whose one-sided slopes disagree by more than this is
    /// treated as sitting next to a kink (ReLU, hardtanh) and skipped.
    pub kink_tolerance: f64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions {
            step: 1e-5,
            max_coords_per_param: usize::MAX,
            floor: 1e-4,
            kink_tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    pub skipped_kinks: usize,
}

impl GradCheckReport {
    pub fn merge(&mut self, other: &GradCheckReport) {
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self.checked += other.checked;
        self.skipped_kinks += other.skipped_kinks;
    }
}

/// Compares analytic gradients of the scalar built by `f` against central
/// differences, for `params` (all parameters when empty).
pub fn check_gradients<F>(
    store: &mut ParamStore,
    params: &[ParamId],
    options: &GradCheckOptions,
    f: F,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph) -> Result<Var>,
{
    let eval = |store: &ParamStore| -> Result<f64> {
        let mut g = Graph::new(store);
        let loss = f(&mut g)?;
        Ok(g.scalar_value(loss))
    };
    let analytic = {
        let mut g = Graph::new(store);
        let loss = f(&mut g)?;
        g.backward(loss)?
    };
    let ids: Vec<ParamId> = if params.is_empty() {
        store.iter().map(|(id, _)| id).collect()
    } else {
        params.to_vec()
    };
    let base = eval(store)?;
    let h = options.step;
    let mut report = GradCheckReport::default();
    for id in ids {
        let n = store.value(id).len();
        let stride = if n > options.max_coords_per_param {
            n.div_ceil(options.max_coords_per_param)
        } else {
            1
        };
        for k in (0..n).step_by(stride.max(1)) {
            let original = store.value(id).data()[k];
            store.get_mut(id).value.data_mut()[k] = original + h;
            let plus = eval(store)?;
            store.get_mut(id).value.data_mut()[k] = original - h;
            let minus = eval(store)?;
            store.get_mut(id).value.data_mut()[k] = original;
            let forward = (plus - base) / h;
            let backward = (base - minus) / h;
            if (forward - backward).abs() > options.kink_tolerance {
                report.skipped_kinks += 1;
                continue;
            }
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic.get(id).map_or(0.0, |g| g[k]);
            let denom = a.abs().max(numeric.abs()).max(options.floor);
            let rel = (a - numeric).abs() / denom;
            report.max_rel_err = report.max_rel_err.max(rel);
            report.checked += 1;
        }
    }
    Ok(report)
}
