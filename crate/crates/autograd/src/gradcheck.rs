//! Central finite-difference check of tape gradients.

use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, floor)`.
    pub max_rel_error: f64,
    /// Name and index of the worst element.
    pub worst: (String, usize),
    pub checked: usize,
}

/// Compares `build`'s backward pass against central differences for every
/// element of `params`.
///
/// `build` must be a pure function of the store. Magnitudes below `floor`
/// are compared absolutely, which keeps round-off on near-zero gradients
/// from dominating the ratio.
pub fn check_gradients<F>(
    store: &mut ParamStore<f64>,
    params: &[ParamId],
    build: F,
    step: f64,
    floor: f64,
) -> GradCheckReport
where
    F: Fn(&ParamStore<f64>) -> (Tape<f64>, Var),
{
    let (tape, loss) = build(store);
    let grads = tape.backward(loss);
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: (String::new(), 0),
        checked: 0,
    };
    for &id in params {
        let n = store.get(id).len();
        for i in 0..n {
            let analytic = grads.get(id).map_or(0.0, |g| g.data()[i]);
            let orig = store.get(id).data()[i];
            store.get_mut(id).data_mut()[i] = orig + step;
            let (t, l) = build(store);
            let up = t.item(l);
            store.get_mut(id).data_mut()[i] = orig - step;
            let (t, l) = build(store);
            let down = t.item(l);
            store.get_mut(id).data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let denom = analytic.abs().max(numeric.abs()).max(floor);
            let rel = (analytic - numeric).abs() / denom;
            if rel > report.max_rel_error || report.checked == 0 {
                report.max_rel_error = report.max_rel_error.max(rel);
                if rel >= report.max_rel_error {
                    report.worst = (store.name(id).to_string(), i);
                }
            }
            report.checked += 1;
        }
    }
    report
}
