use alloc::vec::Vec;

use crate::math;
use crate::rng::{self, Rng};
use crate::Tensor;

/// `[fan_out, fan_in]` weights drawn from N(0, 2/fan_in).
pub fn he_normal(r: &mut Rng, fan_out: usize, fan_in: usize) -> Tensor {
    let std = math::sqrt(2.0 / fan_in as f64);
    normal(r, &[fan_out, fan_in], std)
}

/// Entries drawn from N(0, std²).
pub fn normal(r: &mut Rng, shape: &[usize], std: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng::normal(r, 0.0, std)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape matches draw count")
}
