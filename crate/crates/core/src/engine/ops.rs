use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::{Error, Result, Tensor};

/// Concatenates the rows of `table` selected by `indices`.
pub fn embedding_lookup(table: &Tensor, indices: &[usize]) -> Result<Tensor> {
    let (rows, d) = table_dims(table)?;
    let mut out = Vec::with_capacity(indices.len() * d);
    for (position, &index) in indices.iter().enumerate() {
        if index >= rows {
            return Err(Error::IndexOutOfRange {
                position,
                index,
                cardinality: rows,
            });
        }
        out.extend_from_slice(table.row(index));
    }
    Ok(Tensor::vector(out))
}

/// Scatters `grad_out` back into the selected rows, accumulating repeats.
pub fn embedding_backward(
    indices: &[usize],
    grad_out: &[f64],
    grad_table: &mut Tensor,
) -> Result<()> {
    let (rows, d) = table_dims(grad_table)?;
    if grad_out.len() != indices.len() * d {
        return Err(Error::LengthMismatch {
            left: grad_out.len(),
            right: indices.len() * d,
        });
    }
    for (position, (&index, g)) in indices.iter().zip(grad_out.chunks_exact(d)).enumerate() {
        if index >= rows {
            return Err(Error::IndexOutOfRange {
                position,
                index,
                cardinality: rows,
            });
        }
        for (t, v) in grad_table.row_mut(index).iter_mut().zip(g) {
            *t += v;
        }
    }
    Ok(())
}

fn table_dims(table: &Tensor) -> Result<(usize, usize)> {
    match table.shape() {
        [rows, d] if *d >= 1 => Ok((*rows, *d)),
        other => Err(Error::ShapeMismatch {
            context: "embedding table",
            expected: vec![0, 1],
            found: other.to_vec(),
        }),
    }
}

/// `y = W x + b` for a vector `x` of shape `[n]`, or row-wise for a batch of
/// shape `[B, n]`. `W` is `[m, n]` and `b` is `[m]`.
pub fn affine_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (m, n) = check_affine(x, w, b)?;
    let batch = x.len() / n.max(1);
    let mut out = Vec::with_capacity(batch * m);
    for r in 0..batch {
        let xr = &x.data()[r * n..(r + 1) * n];
        for j in 0..m {
            out.push(math::dot(w.row(j), xr) + b.data()[j]);
        }
    }
    let shape = if x.shape().len() == 1 {
        vec![m]
    } else {
        vec![batch, m]
    };
    Tensor::new(shape, out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AffineGrad {
    pub dx: Tensor,
    pub dw: Tensor,
    pub db: Tensor,
}

/// Gradients of `y = W x + b` given upstream `g` with the shape of `y`:
/// `dx = Wᵀ g`, `dW = g xᵀ` (summed over the batch), `db = g`.
pub fn affine_backward(x: &Tensor, w: &Tensor, g: &Tensor) -> Result<AffineGrad> {
    let (m, n) = match w.shape() {
        [m, n] => (*m, *n),
        other => {
            return Err(Error::ShapeMismatch {
                context: "affine weight",
                expected: vec![0, 0],
                found: other.to_vec(),
            })
        }
    };
    let batch = if n == 0 { 0 } else { x.len() / n };
    if x.cols() != n || g.cols() != m || g.len() != batch * m {
        return Err(Error::ShapeMismatch {
            context: "affine backward",
            expected: vec![batch, m],
            found: g.shape().to_vec(),
        });
    }
    let mut dx = Tensor::zeros(x.shape());
    let mut dw = Tensor::zeros(&[m, n]);
    let mut db = Tensor::zeros(&[m]);
    for r in 0..batch {
        let xr = &x.data()[r * n..(r + 1) * n];
        let gr = &g.data()[r * m..(r + 1) * m];
        let dxr = &mut dx.data_mut()[r * n..(r + 1) * n];
        for (j, &gj) in gr.iter().enumerate() {
            if gj == 0.0 {
                continue;
            }
            math::axpy(gj, w.row(j), dxr);
        }
        for (j, &gj) in gr.iter().enumerate() {
            if gj == 0.0 {
                continue;
            }
            math::axpy(gj, xr, dw.row_mut(j));
            db.data_mut()[j] += gj;
        }
    }
    Ok(AffineGrad { dx, dw, db })
}

fn check_affine(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize)> {
    let (m, n) = match w.shape() {
        [m, n] => (*m, *n),
        other => {
            return Err(Error::ShapeMismatch {
                context: "affine weight",
                expected: vec![b.len(), x.cols()],
                found: other.to_vec(),
            })
        }
    };
    if x.cols() != n || x.shape().len() > 2 || x.shape().is_empty() {
        return Err(Error::ShapeMismatch {
            context: "affine input",
            expected: vec![m, n],
            found: x.shape().to_vec(),
        });
    }
    if b.shape() != [m] {
        return Err(Error::ShapeMismatch {
            context: "affine bias",
            expected: vec![m],
            found: b.shape().to_vec(),
        });
    }
    Ok((m, n))
}

pub fn relu(x: &Tensor) -> Tensor {
    map(x, |v| if v > 0.0 { v } else { 0.0 })
}

/// Passes `g` where the forward input was positive.
pub fn relu_backward(x: &Tensor, g: &Tensor) -> Tensor {
    zip_map(x, g, |xv, gv| if xv > 0.0 { gv } else { 0.0 })
}

pub fn sigmoid(x: &Tensor) -> Tensor {
    map(x, math::sigmoid)
}

/// `g · σ(x)(1 − σ(x))`, taking the forward input `x`.
pub fn sigmoid_backward(x: &Tensor, g: &Tensor) -> Tensor {
    zip_map(x, g, |xv, gv| {
        let s = math::sigmoid(xv);
        gv * s * (1.0 - s)
    })
}

fn map(x: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    let data = x.data().iter().map(|&v| f(v)).collect();
    Tensor::new(x.shape().to_vec(), data).expect("shape preserved")
}

fn zip_map(x: &Tensor, g: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
    debug_assert_eq!(x.shape(), g.shape());
    let data = x
        .data()
        .iter()
        .zip(g.data())
        .map(|(&a, &b)| f(a, b))
        .collect();
    Tensor::new(x.shape().to_vec(), data).expect("shape preserved")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[f64]]) -> Tensor {
        Tensor::from_rows(rows).unwrap()
    }

    #[test]
    fn embedding_identity_rows() {
        let table = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let out = embedding_lookup(&table, &[0, 1]).unwrap();
        assert_eq!(out.data(), &[1.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn embedding_repeated_index_accumulates() {
        let table = m(&[&[0.1, 0.2], &[0.3, 0.4]]);
        let out = embedding_lookup(&table, &[1, 1]).unwrap();
        assert_eq!(out.data(), &[0.3, 0.4, 0.3, 0.4]);
        let mut grad = Tensor::zeros(&[2, 2]);
        embedding_backward(&[1, 1], &[1.0; 4], &mut grad).unwrap();
        assert_eq!(grad.row(0), &[0.0, 0.0]);
        assert_eq!(grad.row(1), &[2.0, 2.0]);
    }

    #[test]
    fn embedding_empty_and_out_of_range() {
        let table = m(&[&[1.0, 2.0]]);
        assert!(embedding_lookup(&table, &[]).unwrap().is_empty());
        let err = embedding_lookup(&table, &[0, 3]).unwrap_err();
        assert_eq!(
            err,
            Error::IndexOutOfRange {
                position: 1,
                index: 3,
                cardinality: 1
            }
        );
    }

    #[test]
    fn affine_identity_and_hand_values() {
        let eye = m(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let zero = Tensor::zeros(&[2]);
        let y = affine_forward(&Tensor::vector(vec![3.0, -1.0]), &eye, &zero).unwrap();
        assert_eq!(y.data(), &[3.0, -1.0]);

        let w = m(&[&[1.0, 2.0], &[0.0, 1.0]]);
        let b = Tensor::vector(vec![1.0, 0.0]);
        let x = Tensor::vector(vec![1.0, 1.0]);
        assert_eq!(affine_forward(&x, &w, &b).unwrap().data(), &[4.0, 1.0]);

        let g = affine_backward(&x, &w, &Tensor::vector(vec![1.0, 0.0])).unwrap();
        assert_eq!(g.dx.data(), &[1.0, 2.0]);
        assert_eq!(g.dw.data(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(g.db.data(), &[1.0, 0.0]);
    }

    #[test]
    fn affine_shape_errors_name_both_shapes() {
        let w = Tensor::zeros(&[2, 3]);
        let b = Tensor::zeros(&[2]);
        let err = affine_forward(&Tensor::zeros(&[2]), &w, &b).unwrap_err();
        match err {
            Error::ShapeMismatch {
                expected, found, ..
            } => {
                assert_eq!(expected, vec![2, 3]);
                assert_eq!(found, vec![2]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn activations() {
        assert_eq!(sigmoid(&Tensor::vector(vec![0.0])).data(), &[0.5]);
        assert_eq!(relu(&Tensor::vector(vec![-2.0, 3.0])).data(), &[0.0, 3.0]);
        let g = sigmoid_backward(&Tensor::vector(vec![0.0]), &Tensor::vector(vec![1.0]));
        assert_eq!(g.data(), &[0.25]);
        let g = relu_backward(
            &Tensor::vector(vec![-1.0, 2.0]),
            &Tensor::vector(vec![5.0, 5.0]),
        );
        assert_eq!(g.data(), &[0.0, 5.0]);
    }
}
