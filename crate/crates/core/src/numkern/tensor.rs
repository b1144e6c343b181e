use indexmap::IndexMap;

use crate::error::{bail, Result};

/// Row-major dense array of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            bail!(Shape, "shape {:?} needs {} values, got {}", shape, expected, data.len());
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            bail!(Numeric, "non-finite tensor entry at flat index {pos}");
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }

    pub fn scalar(value: f64) -> Self {
        Self { shape: vec![1], data: vec![value] }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.shape.clone())
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Named tensors in insertion order.
///
/// Iteration order is the order tensors were inserted, which makes every
/// traversal (optimizer updates, serialization, gradient checks) deterministic.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    tensors: IndexMap<String, Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            bail!(Domain, "duplicate parameter name {name:?}");
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.tensors.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.tensors.get_mut(name)
    }

    /// Tensor by insertion index.
    pub fn at(&self, index: usize) -> &Tensor {
        &self.tensors[index]
    }

    pub fn at_mut(&mut self, index: usize) -> &mut Tensor {
        &mut self.tensors[index]
    }

    pub fn name_at(&self, index: usize) -> &str {
        self.tensors.get_index(index).map(|(k, _)| k.as_str()).unwrap_or("")
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn num_values(&self) -> usize {
        self.tensors.values().map(Tensor::len).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|(k, v)| (k.clone(), v.zeros_like()))
                .collect(),
        }
    }

    /// Fails unless `other` has the same names, order, and shapes.
    pub fn check_layout(&self, other: &ParamStore) -> Result<()> {
        if self.len() != other.len() {
            bail!(Shape, "parameter count {} vs {}", self.len(), other.len());
        }
        for ((na, ta), (nb, tb)) in self.tensors.iter().zip(other.tensors.iter()) {
            if na != nb || ta.shape() != tb.shape() {
                bail!(Shape, "{na}{:?} does not match {nb}{:?}", ta.shape(), tb.shape());
            }
        }
        Ok(())
    }

    /// `self += scale * other`, layouts must agree.
    pub fn add_scaled(&mut self, other: &ParamStore, scale: f64) -> Result<()> {
        self.check_layout(other)?;
        for (a, b) in self.tensors.values_mut().zip(other.tensors.values()) {
            for (x, y) in a.data.iter_mut().zip(&b.data) {
                *x += scale * y;
            }
        }
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        for t in self.tensors.values_mut() {
            t.data.iter_mut().for_each(|x| *x *= factor);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.values().all(Tensor::all_finite)
    }
}
