use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Named trainable tensors with one gradient slot each.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    names: Vec<String>,
    values: Vec<Tensor<T>>,
    grads: Vec<Vec<T>>,
}

impl<T: Scalar> Default for ParamSet<T> {
    fn default() -> Self {
        ParamSet {
            names: Vec::new(),
            values: Vec::new(),
            grads: Vec::new(),
        }
    }
}

impl<T: Scalar> ParamSet<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<T>) -> ParamId {
        let name = name.into();
        debug_assert!(!self.names.contains(&name), "duplicate parameter {name}");
        self.grads.push(vec![T::zero(); value.len()]);
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.values[id.0]
    }

    pub fn grad(&self, id: ParamId) -> &[T] {
        &self.grads[id.0]
    }

    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(Tensor::is_finite)
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    /// Adds `scale * grads` into the gradient slots.
    pub fn accumulate(&mut self, grads: &Gradients<T>, scale: T) {
        for (slot, g) in self.grads.iter_mut().zip(&grads.0) {
            if g.is_empty() {
                continue;
            }
            for (s, &x) in slot.iter_mut().zip(g) {
                *s += scale * x;
            }
        }
    }

    pub(crate) fn split_mut(&mut self) -> (&mut [Tensor<T>], &mut [Vec<T>]) {
        (&mut self.values, &mut self.grads)
    }

    pub fn named(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    /// Overwrites values from `(name, tensor)` pairs; every parameter must be
    /// present with a matching shape.
    pub fn load_named<'a, U: Scalar>(
        &mut self,
        tensors: impl IntoIterator<Item = (&'a str, &'a Tensor<U>)>,
    ) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for (name, t) in tensors {
            let Some(id) = self.find(name) else { continue };
            if self.values[id.0].shape() != t.shape() {
                return Err(Error::Checkpoint(format!(
                    "{name}: shape {:?} does not match model shape {:?}",
                    t.shape(),
                    self.values[id.0].shape()
                )));
            }
            self.values[id.0] = t.cast();
            seen[id.0] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Checkpoint(format!(
                "missing tensor {}",
                self.names[i]
            )));
        }
        Ok(())
    }
}

/// Per-parameter gradients produced by one backward pass. A parameter that
/// did not take part in the graph has an empty slot.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<T>(pub(crate) Vec<Vec<T>>);

impl<T: Scalar> Gradients<T> {
    pub fn empty(n_params: usize) -> Self {
        Gradients(vec![Vec::new(); n_params])
    }

    pub fn get(&self, id: ParamId) -> Option<&[T]> {
        let g = &self.0[id.0];
        (!g.is_empty()).then_some(g.as_slice())
    }

    pub(crate) fn add_into(&mut self, id: ParamId, g: &[T]) {
        let slot = &mut self.0[id.0];
        if slot.is_empty() {
            slot.extend_from_slice(g);
        } else {
            for (s, &x) in slot.iter_mut().zip(g) {
                *s += x;
            }
        }
    }

    /// Elementwise sum in a fixed order.
    pub fn merge(&mut self, other: &Gradients<T>) {
        for (i, g) in other.0.iter().enumerate() {
            if !g.is_empty() {
                self.add_into(ParamId(i), g);
            }
        }
    }
}
