use serde::{Deserialize, Serialize};

/// Index of a tensor inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ParamId(pub usize);

/// A named flat parameter vector with a logical shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Trainable parameters plus gradient buffers of identical shape.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    tensors: Vec<Tensor>,
    grads: Vec<Vec<f64>>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_tensors(tensors: Vec<Tensor>) -> Self {
        let grads = tensors.iter().map(|t| vec![0.0; t.values.len()]).collect();
        ParamStore { tensors, grads }
    }

    /// # Panics
    /// If `values.len()` differs from the product of `shape`.
    pub fn add(&mut self, name: impl Into<String>, shape: Vec<usize>, values: Vec<f64>) -> ParamId {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "tensor shape does not match value count"
        );
        self.grads.push(vec![0.0; values.len()]);
        self.tensors.push(Tensor {
            name: name.into(),
            shape,
            values,
        });
        ParamId(self.tensors.len() - 1)
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn into_tensors(self) -> Vec<Tensor> {
        self.tensors
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn values(&self, id: ParamId) -> &[f64] {
        &self.tensors[id.0].values
    }

    pub fn values_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.tensors[id.0].values
    }

    pub fn grads(&self) -> &[Vec<f64>] {
        &self.grads
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.tensors.iter().position(|t| t.name == name).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(|t| t.values.len()).sum()
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.fill(0.0);
        }
    }

    /// Replaces the gradient buffers.
    ///
    /// # Panics
    /// If the shapes do not match the parameters.
    pub fn set_grads(&mut self, grads: Vec<Vec<f64>>) {
        assert_eq!(grads.len(), self.tensors.len(), "gradient tensor count mismatch");
        for (g, t) in grads.iter().zip(&self.tensors) {
            assert_eq!(g.len(), t.values.len(), "gradient shape mismatch for {}", t.name);
        }
        self.grads = grads;
    }

    /// Simultaneous mutable access to values and gradients.
    pub fn split_mut(&mut self) -> (&mut [Tensor], &[Vec<f64>]) {
        (&mut self.tensors, &self.grads)
    }

    pub fn get_flat(&self, mut index: usize) -> f64 {
        for t in &self.tensors {
            if index < t.values.len() {
                return t.values[index];
            }
            index -= t.values.len();
        }
        panic!("flat parameter index out of range");
    }

    pub fn set_flat(&mut self, mut index: usize, value: f64) {
        for t in &mut self.tensors {
            if index < t.values.len() {
                t.values[index] = value;
                return;
            }
            index -= t.values.len();
        }
        panic!("flat parameter index out of range");
    }

    /// `(tensor name, offset within tensor)` of a flat index.
    pub fn locate_flat(&self, mut index: usize) -> Option<(&str, usize)> {
        for t in &self.tensors {
            if index < t.values.len() {
                return Some((&t.name, index));
            }
            index -= t.values.len();
        }
        None
    }
}

/// Parameters mapped into an arithmetic back end, one entry per tensor.
#[derive(Debug, Clone)]
pub struct Bound<V> {
    tensors: Vec<Vec<V>>,
}

impl<V> Bound<V> {
    pub fn new(tensors: Vec<Vec<V>>) -> Self {
        Bound { tensors }
    }

    pub fn get(&self, id: ParamId) -> &[V] {
        &self.tensors[id.0]
    }

    pub fn tensors(&self) -> &[Vec<V>] {
        &self.tensors
    }
}
