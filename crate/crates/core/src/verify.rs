//! Gradient verification suite: every differentiable primitive and every
//! parameter group of a small network against central finite differences,
//! plus the engine's clustering gradients against their closed form.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::engine::{
    affine_backward, affine_forward, embedding_backward, embedding_lookup, finite_diff_check,
    finite_diff_check_where, relu, relu_backward, sigmoid, sigmoid_backward, CheckOptions,
    GradMap, ParamSet,
};
use crate::model::{
    backward, clustering_backward, clustering_loss, closed_form_cluster_gradients, evaluate_loss,
    forward, soft_assign, target_distribution, target_representations, BreakerParams, Inputs,
    ModelDims, TargetParams, Weighting, CENTROIDS_NAME,
};
use crate::rng::{self, Rng};
use crate::{Error, Result, Tensor};

/// Random points per check.
pub const POINTS: usize = 10;
pub const FD_TOLERANCE: f64 = 1e-4;
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-8;
/// Network instances whose ReLU inputs sit closer than this to zero are
/// redrawn, so that a finite-difference step cannot cross a kink.
const RELU_MARGIN: f64 = 1e-3;

/// Deliberate defects used to show the suite catches them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Negate the centroid gradient produced by the clustering backward.
    FlipCentroidSign,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupResult {
    pub group: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub checked: usize,
}

impl GroupResult {
    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteReport {
    pub groups: Vec<GroupResult>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.groups.iter().all(GroupResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GroupResult> {
        self.groups.iter().filter(|g| !g.passed())
    }

    fn record(&mut self, group: &str, error: f64, tolerance: f64, checked: usize) {
        if let Some(g) = self.groups.iter_mut().find(|g| g.group == group) {
            g.max_error = g.max_error.max(error);
            g.checked += checked;
        } else {
            self.groups.push(GroupResult {
                group: String::from(group),
                max_error: error,
                tolerance,
                checked,
            });
        }
    }
}

fn random_tensor(r: &mut Rng, shape: &[usize], std: f64) -> Tensor {
    crate::engine::init::normal(r, shape, std)
}

fn weighted_sum(c: &Tensor, y: &Tensor) -> f64 {
    c.data().iter().zip(y.data()).map(|(a, b)| a * b).sum()
}

fn single(name: &str, t: Tensor) -> ParamSet {
    let mut ps = ParamSet::new();
    ps.insert(name, t).expect("fresh set");
    ps
}

fn check_embedding(r: &mut Rng, report: &mut SuiteReport, opts: CheckOptions) -> Result<()> {
    let table = random_tensor(r, &[5, 3], 1.0);
    let idx: Vec<usize> = (0..6).map(|_| r.random_range(0..5)).collect();
    let c = random_tensor(r, &[6, 3], 1.0);
    let mut g = Tensor::zeros(&[5, 3]);
    embedding_backward(&idx, c.data(), &mut g)?;
    let mut grads = GradMap::new();
    grads.insert("table", g);
    let ps = single("table", table);
    let res = finite_diff_check(
        |p| weighted_sum(&c, &embedding_lookup(p.get("table").unwrap(), &idx).unwrap()),
        &ps,
        &grads,
        opts,
    )?;
    report.record("embedding", res.max_rel_error, FD_TOLERANCE, res.checked);
    Ok(())
}

fn check_affine(r: &mut Rng, report: &mut SuiteReport, opts: CheckOptions) -> Result<()> {
    let mut ps = ParamSet::new();
    ps.insert("x", random_tensor(r, &[4, 3], 1.0))?;
    ps.insert("w", random_tensor(r, &[2, 3], 1.0))?;
    ps.insert("b", random_tensor(r, &[2], 1.0))?;
    let c = random_tensor(r, &[4, 2], 1.0);
    let f = |p: &ParamSet| -> Result<Tensor> {
        affine_forward(p.get("x").unwrap(), p.get("w").unwrap(), p.get("b").unwrap())
    };
    let ag = affine_backward(ps.get("x").unwrap(), ps.get("w").unwrap(), &c)?;
    let mut grads = GradMap::new();
    grads.insert("x", ag.dx);
    grads.insert("w", ag.dw);
    grads.insert("b", ag.db);
    let res = finite_diff_check(|p| weighted_sum(&c, &f(p).unwrap()), &ps, &grads, opts)?;
    report.record("affine", res.max_rel_error, FD_TOLERANCE, res.checked);
    Ok(())
}

fn check_activation(
    r: &mut Rng,
    report: &mut SuiteReport,
    opts: CheckOptions,
    group: &str,
    fwd: fn(&Tensor) -> Tensor,
    bwd: fn(&Tensor, &Tensor) -> Tensor,
) -> Result<()> {
    let x = random_tensor(r, &[12], 2.0);
    let c = random_tensor(r, &[12], 1.0);
    let mut grads = GradMap::new();
    grads.insert("x", bwd(&x, &c));
    let ps = single("x", x);
    let res = finite_diff_check(|p| weighted_sum(&c, &fwd(p.get("x").unwrap())), &ps, &grads, opts)?;
    report.record(group, res.max_rel_error, FD_TOLERANCE, res.checked);
    Ok(())
}

fn check_clustering(
    r: &mut Rng,
    report: &mut SuiteReport,
    opts: CheckOptions,
    fault: Option<Fault>,
) -> Result<()> {
    let (n, k, d) = (6, 3, 4);
    let alpha = 0.5 + r.random::<f64>() * 2.0;
    let reps = random_tensor(r, &[n, d], 1.0);
    let mu = random_tensor(r, &[k, d], 1.0);
    let stale = random_tensor(r, &[n, d], 1.0);
    let p = target_distribution(&soft_assign(&stale, &mu, alpha)?);
    let q = soft_assign(&reps, &mu, alpha)?;
    let (d_reps, mut d_mu) = clustering_backward(&reps, &mu, &p, &q, alpha)?;
    if fault == Some(Fault::FlipCentroidSign) {
        d_mu.scale(-1.0);
    }
    let (cf_reps, cf_mu) = closed_form_cluster_gradients(&reps, &mu, &p, &q, alpha)?;
    report.record("clustering.reps.closed_form", d_reps.max_abs_diff(&cf_reps), CLOSED_FORM_TOLERANCE, n * d);
    report.record("clustering.centroids.closed_form", d_mu.max_abs_diff(&cf_mu), CLOSED_FORM_TOLERANCE, k * d);

    let mut ps = ParamSet::new();
    ps.insert("reps", reps)?;
    ps.insert("centroids", mu)?;
    let mut grads = GradMap::new();
    grads.insert("reps", d_reps);
    grads.insert("centroids", d_mu);
    let loss = |ps: &ParamSet| {
        let q = soft_assign(ps.get("reps").unwrap(), ps.get("centroids").unwrap(), alpha).unwrap();
        clustering_loss(&p, &q).unwrap().0
    };
    for (group, name) in [("clustering.reps", "reps"), ("clustering.centroids", "centroids")] {
        let res = finite_diff_check_where(loss, &ps, &grads, opts, |n| n == name)?;
        report.record(group, res.max_rel_error, FD_TOLERANCE, res.checked);
    }
    Ok(())
}

/// Tiny network used for the end-to-end checks.
pub fn check_dims() -> ModelDims {
    ModelDims {
        user_cardinalities: vec![3, 4],
        n_items: 3,
        embedding_dim: 2,
        rem_widths: vec![5, 3],
        tower_widths: vec![4],
        clusters: 2,
        alpha: 1.0,
    }
}

fn jitter(ps: &mut ParamSet, r: &mut Rng, std: f64) {
    for id in 0..ps.len() {
        for v in ps.values_mut(id) {
            *v += rng::normal(r, 0.0, std);
        }
    }
}

/// Parameter-name prefix to report group.
fn network_group(name: &str) -> &'static str {
    if name == CENTROIDS_NAME {
        "network.centroids"
    } else if name.starts_with("user.emb") {
        "network.user_embeddings"
    } else if name.starts_with("user.") {
        "network.user_rem"
    } else if name.starts_with("item.emb") {
        "network.item_embeddings"
    } else if name.starts_with("item.") {
        "network.item_rem"
    } else {
        "network.towers"
    }
}

const NETWORK_GROUPS: [&str; 6] = [
    "network.user_embeddings",
    "network.user_rem",
    "network.item_embeddings",
    "network.item_rem",
    "network.towers",
    "network.centroids",
];

fn check_network(
    r: &mut Rng,
    report: &mut SuiteReport,
    opts: CheckOptions,
    fault: Option<Fault>,
) -> Result<()> {
    let dims = check_dims();
    let n = 7;
    let lambda = 0.7;
    for _attempt in 0..100 {
        let mut params = BreakerParams::init_with(dims.clone(), r)?;
        jitter(&mut params.params, r, 0.5);
        let mut target = TargetParams::snapshot(&params);
        jitter(&mut target.params, r, 0.2);

        let feats: Vec<usize> = (0..n)
            .flat_map(|_| [r.random_range(0..3), r.random_range(0..4)])
            .collect();
        let items: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
        let labels: Vec<u8> = (0..n).map(|_| r.random_range(0..2u8)).collect();
        let inputs = Inputs::new(&feats, &items);

        let stale = target_representations(&target, &params, &feats)?;
        let p = target_distribution(&soft_assign(&stale, params.centroids(), dims.alpha)?);
        let fwd = forward(&params, &inputs, Weighting::Soft)?;
        if fwd.relu_margin(&params.layout) < RELU_MARGIN {
            continue;
        }
        let (_, mut grads) = backward(&params, &inputs, &fwd, &labels, Some(&p), lambda)?;
        if fault == Some(Fault::FlipCentroidSign) {
            if let Some(mut g) = grads.remove(CENTROIDS_NAME) {
                g.scale(-1.0);
                grads.insert(CENTROIDS_NAME, g);
            }
        }
        let layout = params.layout.clone();
        let loss = |ps: &ParamSet| {
            let candidate = BreakerParams {
                dims: dims.clone(),
                params: ps.clone(),
                layout: layout.clone(),
            };
            evaluate_loss(&candidate, &inputs, &labels, Weighting::Soft, Some(&p), lambda)
                .map_or(f64::NAN, |t| t.total)
        };
        for group in NETWORK_GROUPS {
            let res = finite_diff_check_where(loss, &params.params, &grads, opts, |name| {
                network_group(name) == group
            })?;
            report.record(group, res.max_rel_error, FD_TOLERANCE, res.checked);
        }
        return Ok(());
    }
    Err(Error::InvalidConfig(format!(
        "no network instance with ReLU margin {RELU_MARGIN} found"
    )))
}

/// Runs every check at [`POINTS`] random points drawn from `seed`.
pub fn run_gradient_suite(seed: u64, fault: Option<Fault>) -> Result<SuiteReport> {
    let mut r = rng::seeded(seed);
    let opts = CheckOptions {
        seed,
        ..CheckOptions::default()
    };
    let mut report = SuiteReport::default();
    for _ in 0..POINTS {
        check_embedding(&mut r, &mut report, opts)?;
        check_affine(&mut r, &mut report, opts)?;
        check_activation(&mut r, &mut report, opts, "relu", relu, relu_backward)?;
        check_activation(&mut r, &mut report, opts, "sigmoid", sigmoid, sigmoid_backward)?;
        check_clustering(&mut r, &mut report, opts, fault)?;
        check_network(&mut r, &mut report, opts, fault)?;
    }
    Ok(report)
}
