//! Student-t soft assignment, square-normalised pseudo-labels and the KL
//! clustering loss.

use alloc::vec;

use crate::math;
use crate::{Error, Result, Tensor};

fn check(reps: &Tensor, centroids: &Tensor) -> Result<(usize, usize, usize)> {
    let d = centroids.cols();
    let k = centroids.rows();
    if reps.cols() != d || centroids.shape().len() != 2 || k == 0 {
        return Err(Error::ShapeMismatch {
            context: "soft assignment",
            expected: vec![k, reps.cols()],
            found: centroids.shape().to_vec(),
        });
    }
    let n = if d == 0 { 0 } else { reps.len() / d };
    Ok((n, k, d))
}

/// q′ᵢⱼ ∝ (1 + ‖eᵢ − μⱼ‖²/α)^(−(α+1)/2), normalised per row.
///
/// Evaluated in log space so rows stay well defined for far-away points;
/// entries are floored at the smallest positive normal to keep them
/// strictly positive.
pub fn soft_assign(reps: &Tensor, centroids: &Tensor, alpha: f64) -> Result<Tensor> {
    let (n, k, _) = check(reps, centroids)?;
    let power = -(alpha + 1.0) / 2.0;
    let mut q = Tensor::zeros(&[n, k]);
    let mut logs = vec![0.0; k];
    for i in 0..n {
        let e = &reps.data()[i * centroids.cols()..(i + 1) * centroids.cols()];
        let mut max = f64::NEG_INFINITY;
        for (j, l) in logs.iter_mut().enumerate() {
            let d2 = math::sq_dist(e, centroids.row(j));
            *l = power * libm::log1p(d2 / alpha);
            max = max.max(*l);
        }
        let row = q.row_mut(i);
        let mut sum = 0.0;
        for (qj, &l) in row.iter_mut().zip(&logs) {
            *qj = math::exp(l - max);
            sum += *qj;
        }
        for qj in row.iter_mut() {
            *qj = (*qj / sum).max(f64::MIN_POSITIVE);
        }
    }
    Ok(q)
}

/// Backpropagates `g_q = ∂L/∂Q′` through [`soft_assign`], returning
/// `(∂L/∂E, ∂L/∂μ)`.
pub fn soft_assign_backward(
    reps: &Tensor,
    centroids: &Tensor,
    q: &Tensor,
    g_q: &Tensor,
    alpha: f64,
) -> Result<(Tensor, Tensor)> {
    let (n, k, d) = check(reps, centroids)?;
    q.expect_shape("soft assignment backward", &[n, k])?;
    g_q.expect_shape("soft assignment backward", &[n, k])?;
    let scale = -(alpha + 1.0) / alpha;
    let mut d_reps = Tensor::zeros(&[n, d]);
    let mut d_mu = Tensor::zeros(&[k, d]);
    let mut diff = vec![0.0; d];
    for i in 0..n {
        let e = &reps.data()[i * d..(i + 1) * d];
        let qi = q.row(i);
        let gi = g_q.row(i);
        let mean: f64 = qi.iter().zip(gi).map(|(a, b)| a * b).sum();
        for j in 0..k {
            let mu = centroids.row(j);
            for ((t, a), b) in diff.iter_mut().zip(e).zip(mu) {
                *t = a - b;
            }
            let d2: f64 = diff.iter().map(|v| v * v).sum();
            // ∂L/∂log sᵢⱼ · ∂log sᵢⱼ/∂(d²) · 2, folded into one coefficient.
            let h = qi[j] * (gi[j] - mean);
            let c = scale * h / (1.0 + d2 / alpha);
            math::axpy(c, &diff, d_reps.row_mut(i));
            math::axpy(-c, &diff, d_mu.row_mut(j));
        }
    }
    Ok((d_reps, d_mu))
}

/// pᵢⱼ = (qᵢⱼ²/fⱼ) / Σⱼ′ (qᵢⱼ′²/fⱼ′) with soft frequencies fⱼ = Σᵢ qᵢⱼ.
///
/// Each row is rescaled to the mass of the corresponding `Q` row, which is
/// one up to rounding; with a single sample every fⱼ equals qⱼ and the
/// result reproduces `Q` bit for bit.
pub fn target_distribution(q: &Tensor) -> Tensor {
    let (n, k) = (q.rows(), q.cols());
    let f = cluster_frequencies(q);
    let mut p = Tensor::zeros(&[n, k]);
    for i in 0..n {
        let qi = q.row(i);
        let row = p.row_mut(i);
        let mut mass = 0.0;
        let mut weighted = 0.0;
        for j in 0..k {
            row[j] = qi[j] / f[j];
            mass += qi[j];
            weighted += qi[j] * row[j];
        }
        let norm = mass / weighted;
        for j in 0..k {
            row[j] = qi[j] * row[j] * norm;
        }
    }
    p
}

/// Soft cluster frequencies fⱼ = Σᵢ qᵢⱼ.
pub fn cluster_frequencies(q: &Tensor) -> alloc::vec::Vec<f64> {
    let mut f = vec![0.0; q.cols()];
    for i in 0..q.rows() {
        for (fj, qj) in f.iter_mut().zip(q.row(i)) {
            *fj += qj;
        }
    }
    f
}

/// L_c = Σᵢ Σⱼ pᵢⱼ log(pᵢⱼ / q′ᵢⱼ) with 0·log 0 = 0, and ∂L_c/∂Q′ = −P/Q′.
/// `P` is treated as a constant.
pub fn clustering_loss(p: &Tensor, q: &Tensor) -> Result<(f64, Tensor)> {
    q.expect_shape("clustering loss", p.shape())?;
    let mut loss = 0.0;
    let mut grad = Tensor::zeros(q.shape());
    for ((&pv, &qv), g) in p.data().iter().zip(q.data()).zip(grad.data_mut()) {
        if pv > 0.0 {
            loss += pv * (math::ln(pv) - math::ln(qv));
        }
        *g = -pv / qv;
    }
    Ok((loss, grad))
}

/// Gradients of L_c with respect to the representations and the centroids,
/// obtained by composing [`clustering_loss`] with [`soft_assign_backward`].
pub fn clustering_backward(
    reps: &Tensor,
    centroids: &Tensor,
    p: &Tensor,
    q: &Tensor,
    alpha: f64,
) -> Result<(Tensor, Tensor)> {
    let (_, g_q) = clustering_loss(p, q)?;
    soft_assign_backward(reps, centroids, q, &g_q, alpha)
}

/// Closed-form gradients of L_c:
///
/// ∂L_c/∂eᵢ = (α+1)/α · Σⱼ (pᵢⱼ − q′ᵢⱼ)/(1 + ‖eᵢ − μⱼ‖²/α) · (eᵢ − μⱼ)
///
/// ∂L_c/∂μⱼ = −(α+1)/α · Σᵢ (pᵢⱼ − q′ᵢⱼ)/(1 + ‖eᵢ − μⱼ‖²/α) · (eᵢ − μⱼ)
pub fn closed_form_cluster_gradients(
    reps: &Tensor,
    centroids: &Tensor,
    p: &Tensor,
    q: &Tensor,
    alpha: f64,
) -> Result<(Tensor, Tensor)> {
    let (n, k, d) = check(reps, centroids)?;
    p.expect_shape("closed-form gradients", &[n, k])?;
    q.expect_shape("closed-form gradients", &[n, k])?;
    let scale = (alpha + 1.0) / alpha;
    let mut d_reps = Tensor::zeros(&[n, d]);
    let mut d_mu = Tensor::zeros(&[k, d]);
    for i in 0..n {
        let e = &reps.data()[i * d..(i + 1) * d];
        for j in 0..k {
            let mu = centroids.row(j);
            let d2 = math::sq_dist(e, mu);
            let w = scale * (p.row(i)[j] - q.row(i)[j]) / (1.0 + d2 / alpha);
            for t in 0..d {
                let delta = e[t] - mu[t];
                d_reps.row_mut(i)[t] += w * delta;
                d_mu.row_mut(j)[t] -= w * delta;
            }
        }
    }
    Ok((d_reps, d_mu))
}

/// Index of the largest entry of each row; ties go to the lower index.
pub fn hard_assignments(q: &Tensor) -> alloc::vec::Vec<usize> {
    (0..q.rows())
        .map(|i| {
            let row = q.row(i);
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}
