//! Central finite-difference verification of analytic gradients.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::index;

use super::params::{GradMap, ParamSet};
use crate::rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub eps: f64,
    /// Check at most this many coordinates, chosen with `seed`.
    pub max_coords: Option<usize>,
    pub seed: u64,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self {
            eps: 1e-5,
            max_coords: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    /// max |analytic − numeric| / max(1, |numeric|) over checked coordinates.
    pub max_rel_error: f64,
    /// Parameter and flat coordinate where the maximum occurred.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Compares `analytic` against `(f(w+eps) − f(w−eps)) / 2eps` for each
/// checked coordinate of `params`.
pub fn finite_diff_check<F>(
    loss_fn: F,
    params: &ParamSet,
    analytic: &GradMap,
    opts: CheckOptions,
) -> Result<GradCheck>
where
    F: FnMut(&ParamSet) -> f64,
{
    finite_diff_check_where(loss_fn, params, analytic, opts, |_| true)
}

/// [`finite_diff_check`] restricted to parameters whose name passes `include`.
pub fn finite_diff_check_where<F, P>(
    mut loss_fn: F,
    params: &ParamSet,
    analytic: &GradMap,
    opts: CheckOptions,
    include: P,
) -> Result<GradCheck>
where
    F: FnMut(&ParamSet) -> f64,
    P: Fn(&str) -> bool,
{
    if !(opts.eps > 0.0) {
        return Err(Error::InvalidConfig("eps must be positive".into()));
    }
    let mut coords: Vec<(usize, usize)> = Vec::with_capacity(params.total_len());
    for (id, (name, t)) in params.iter().enumerate() {
        if !include(name) {
            continue;
        }
        coords.extend((0..t.len()).map(|i| (id, i)));
    }
    if let Some(cap) = opts.max_coords {
        if coords.len() > cap {
            let mut r = rng::seeded(opts.seed);
            let mut picked = index::sample(&mut r, coords.len(), cap).into_vec();
            picked.sort_unstable();
            coords = picked.into_iter().map(|i| coords[i]).collect();
        }
    }

    let mut work = params.clone();
    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (id, i) in coords {
        let orig = work.by_id(id).data()[i];
        work.values_mut(id)[i] = orig + opts.eps;
        let plus = loss_fn(&work);
        work.values_mut(id)[i] = orig - opts.eps;
        let minus = loss_fn(&work);
        work.values_mut(id)[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFiniteCheck);
        }
        let numeric = (plus - minus) / (2.0 * opts.eps);
        let a = analytic
            .get(params.name(id))
            .map_or(0.0, |g| g.data()[i]);
        let rel = (a - numeric).abs() / numeric.abs().max(1.0);
        report.checked += 1;
        if report.worst.is_none() || rel > report.max_rel_error {
            report.max_rel_error = rel;
            report.worst = Some((params.name(id).to_string(), i));
        }
    }
    Ok(report)
}
