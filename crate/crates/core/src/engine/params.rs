use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::{Error, Result, Tensor};

/// Named tensors in insertion order. Shapes are fixed once inserted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: BTreeMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<usize> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(Error::InvalidConfig(alloc::format!(
                "duplicate parameter `{name}`"
            )));
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(tensor);
        Ok(id)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn by_id(&self, id: usize) -> &Tensor {
        &self.tensors[id]
    }

    /// Mutable access to the values; the shape cannot be changed through it.
    pub fn values_mut(&mut self, id: usize) -> &mut [f64] {
        self.tensors[id].data_mut()
    }

    /// Replaces the values of `name`; the new tensor must have the same shape.
    pub fn set(&mut self, name: &str, tensor: Tensor) -> Result<()> {
        let id = self
            .index_of(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))?;
        self.tensors[id].expect_shape("parameter update", tensor.shape())?;
        self.tensors[id] = tensor;
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.names.iter().map(String::as_str)
    }

    pub fn total_len(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }
}

/// Gradients by parameter name. A missing entry is a zero gradient.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradMap {
    grads: BTreeMap<String, Tensor>,
}

impl GradMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, grad: Tensor) {
        self.grads.insert(name.into(), grad);
    }

    /// Adds `grad` into the entry for `name`, creating it if absent.
    pub fn accumulate(&mut self, name: &str, grad: &Tensor) {
        match self.grads.get_mut(name) {
            Some(g) => g.add_assign(grad),
            None => {
                self.grads.insert(name.to_string(), grad.clone());
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.grads.get(name)
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor> {
        self.grads.remove(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.grads.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    /// Checks every key against `params` and that shapes agree.
    pub fn validate(&self, params: &ParamSet) -> Result<()> {
        for (name, g) in &self.grads {
            let p = params
                .get(name)
                .ok_or_else(|| Error::UnknownParameter(name.clone()))?;
            p.expect_shape("gradient", g.shape())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn insertion_order_is_preserved() {
        let mut ps = ParamSet::new();
        ps.insert("z", Tensor::zeros(&[1])).unwrap();
        ps.insert("a", Tensor::zeros(&[2])).unwrap();
        let names: Vec<_> = ps.names().collect();
        assert_eq!(names, vec!["z", "a"]);
        assert!(ps.insert("a", Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn set_rejects_new_shape() {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::zeros(&[2])).unwrap();
        assert!(ps.set("w", Tensor::zeros(&[3])).is_err());
        assert!(ps.set("w", Tensor::vector(vec![1.0, 2.0])).is_ok());
    }

    #[test]
    fn grad_validation() {
        let mut ps = ParamSet::new();
        ps.insert("w", Tensor::zeros(&[2])).unwrap();
        let mut g = GradMap::new();
        g.insert("v", Tensor::zeros(&[2]));
        assert_eq!(g.validate(&ps), Err(Error::UnknownParameter("v".into())));
    }
}
