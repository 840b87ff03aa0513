//! Dense feed-forward networks with hand-written backpropagation and Adam.
//!
//! Parameters live in one flat buffer, layer by layer: the weight matrix of
//! layer `l` (shape `out × in`, row-major) followed by its bias vector. The
//! same layout is used for gradients, optimizer moments and checkpoints, so
//! optimizers and target-network averaging operate on plain slices.
//!
//! Hidden layers use ReLU (subgradient 0 at the kink); the output layer is
//! the identity.

use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "matrix {rows}x{cols} needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Concatenates `self` and `other` column-wise.
    pub fn hstack(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows {
            return Err(Error::Shape(format!(
                "hstack row mismatch: {} vs {}",
                self.rows, other.rows
            )));
        }
        let cols = self.cols + other.cols;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.extend_from_slice(other.row(r));
        }
        Ok(Matrix {
            rows: self.rows,
            cols,
            data,
        })
    }

    /// Copies columns `start..end` into a new matrix.
    pub fn columns(&self, start: usize, end: usize) -> Matrix {
        assert!(start <= end && end <= self.cols);
        let cols = end - start;
        let mut data = Vec::with_capacity(self.rows * cols);
        for r in 0..self.rows {
            data.extend_from_slice(&self.row(r)[start..end]);
        }
        Matrix {
            rows: self.rows,
            cols,
            data,
        }
    }
}

/// `c = alpha * a * b + beta * c` with explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    a_strides: (usize, usize),
    b: &[f64],
    b_strides: (usize, usize),
    beta: f64,
    c: &mut [f64],
    c_strides: (usize, usize),
) {
    if m == 0 || n == 0 {
        return;
    }
    debug_assert!(k == 0 || a.len() > (m - 1) * a_strides.0 + (k - 1) * a_strides.1);
    debug_assert!(k == 0 || b.len() > (k - 1) * b_strides.0 + (n - 1) * b_strides.1);
    debug_assert!(c.len() > (m - 1) * c_strides.0 + (n - 1) * c_strides.1);
    // SAFETY: the debug assertions above spell out the bounds every caller in
    // this module satisfies by construction (operands are whole row-major
    // buffers of the stated shapes).
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            a_strides.0 as isize,
            a_strides.1 as isize,
            b.as_ptr(),
            b_strides.0 as isize,
            b_strides.1 as isize,
            beta,
            c.as_mut_ptr(),
            c_strides.0 as isize,
            c_strides.1 as isize,
        );
    }
}

/// Per-layer activations recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_sizes: Vec<usize>,
    generation: u64,
    /// `activations[0]` is the input; `activations[l + 1]` is the output of layer `l`.
    activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.activations[0].rows()
    }

    pub fn input(&self) -> &Matrix {
        &self.activations[0]
    }

    pub fn output(&self) -> &Matrix {
        self.activations.last().expect("cache holds at least the input")
    }
}

/// Fully connected ReLU network with an identity output layer.
#[derive(Debug, Clone)]
pub struct DenseNet {
    layer_sizes: Vec<usize>,
    params: Vec<f64>,
    /// Start of layer `l`'s weights in `params`.
    offsets: Vec<usize>,
    generation: u64,
}

/// Equal architecture and bitwise-equal parameters; cache bookkeeping is ignored.
impl PartialEq for DenseNet {
    fn eq(&self, other: &Self) -> bool {
        self.layer_sizes == other.layer_sizes && self.params == other.params
    }
}

fn layout(layer_sizes: &[usize]) -> Result<(Vec<usize>, usize)> {
    if layer_sizes.len() < 2 {
        return Err(Error::Shape(
            "a network needs at least an input and an output layer".into(),
        ));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Shape("layer sizes must be positive".into()));
    }
    let mut offsets = Vec::with_capacity(layer_sizes.len() - 1);
    let mut total = 0;
    for w in layer_sizes.windows(2) {
        offsets.push(total);
        total += w[0] * w[1] + w[1];
    }
    Ok((offsets, total))
}

impl DenseNet {
    /// Network with every parameter set to zero.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        let (offsets, total) = layout(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params: vec![0.0; total],
            offsets,
            generation: 0,
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes)?;
        for l in 0..net.num_layers() {
            let (fan_in, fan_out) = (net.layer_sizes[l], net.layer_sizes[l + 1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = net.offsets[l];
            for w in &mut net.params[start..start + fan_in * fan_out] {
                *w = rng.random_range(-limit..limit);
            }
        }
        Ok(net)
    }

    /// Network with explicit parameters in checkpoint layout.
    pub fn from_params(layer_sizes: &[usize], params: Vec<f64>) -> Result<Self> {
        let (offsets, total) = layout(layer_sizes)?;
        if params.len() != total {
            return Err(Error::Shape(format!(
                "expected {total} parameters for layers {layer_sizes:?}, got {}",
                params.len()
            )));
        }
        if let Some(i) = params.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFiniteGradient {
                index: i,
                value: params[i],
            });
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            params,
            offsets,
            generation: 0,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn input_size(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_size(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable parameter access. Invalidates forward caches taken earlier.
    pub fn params_mut(&mut self) -> &mut [f64] {
        self.generation += 1;
        &mut self.params
    }

    fn layer(&self, l: usize) -> (&[f64], &[f64]) {
        let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
        let start = self.offsets[l];
        let w_end = start + fan_in * fan_out;
        (
            &self.params[start..w_end],
            &self.params[w_end..w_end + fan_out],
        )
    }

    /// Weight matrix of layer `l`, shape `out × in`.
    pub fn weight_matrix(&self, l: usize) -> Matrix {
        let (w, _) = self.layer(l);
        Matrix::from_vec(self.layer_sizes[l + 1], self.layer_sizes[l], w.to_vec())
            .expect("layout is consistent")
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        self.layer(l).1
    }

    /// Single-input forward pass.
    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let x = Matrix::from_vec(1, input.len(), input.to_vec())?;
        let (out, cache) = self.forward_batch(&x)?;
        Ok((out.into_vec(), cache))
    }

    /// Forward pass over a batch laid out one sample per row.
    pub fn forward_batch(&self, input: &Matrix) -> Result<(Matrix, ForwardCache)> {
        if input.cols() != self.input_size() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                input.cols(),
                self.input_size()
            )));
        }
        let batch = input.rows();
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(input.clone());
        for l in 0..self.num_layers() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let (w, b) = self.layer(l);
            let x = activations.last().unwrap();
            let mut y = Matrix::zeros(batch, fan_out);
            gemm(
                batch,
                fan_in,
                fan_out,
                1.0,
                x.data(),
                (fan_in, 1),
                w,
                (1, fan_in),
                0.0,
                y.data_mut(),
                (fan_out, 1),
            );
            let hidden = l + 1 < self.num_layers();
            for r in 0..batch {
                for (v, bias) in y.row_mut(r).iter_mut().zip(b) {
                    *v += bias;
                    if hidden && *v < 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(y);
        }
        let out = activations.last().unwrap().clone();
        Ok((
            out,
            ForwardCache {
                layer_sizes: self.layer_sizes.clone(),
                generation: self.generation,
                activations,
            },
        ))
    }

    fn check_cache(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<()> {
        if cache.layer_sizes != self.layer_sizes {
            return Err(Error::Contract(format!(
                "cache was produced by a network with layers {:?}, not {:?}",
                cache.layer_sizes, self.layer_sizes
            )));
        }
        if cache.generation != self.generation {
            return Err(Error::Contract(
                "stale cache: parameters changed since the forward pass".into(),
            ));
        }
        if output_grad.rows() != cache.batch_size() || output_grad.cols() != self.output_size() {
            return Err(Error::Shape(format!(
                "output gradient is {}x{}, expected {}x{}",
                output_grad.rows(),
                output_grad.cols(),
                cache.batch_size(),
                self.output_size()
            )));
        }
        Ok(())
    }

    /// Backpropagates `output_grad` (one row per sample), adding parameter
    /// gradients into `param_grads` and returning the gradient with respect
    /// to the input batch.
    pub fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        output_grad: &Matrix,
        param_grads: &mut [f64],
    ) -> Result<Matrix> {
        self.check_cache(cache, output_grad)?;
        if param_grads.len() != self.params.len() {
            return Err(Error::Shape(format!(
                "gradient buffer has {} entries, network has {} parameters",
                param_grads.len(),
                self.params.len()
            )));
        }
        let batch = cache.batch_size();
        let mut grad = output_grad.clone();
        for l in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            if l + 1 < self.num_layers() {
                // ReLU mask from the post-activation output.
                let post = &cache.activations[l + 1];
                for (g, &a) in grad.data_mut().iter_mut().zip(post.data()) {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                }
            }
            let x = &cache.activations[l];
            let start = self.offsets[l];
            let w_end = start + fan_in * fan_out;
            let (dw, db) = param_grads[start..w_end + fan_out].split_at_mut(fan_in * fan_out);
            gemm(
                fan_out,
                batch,
                fan_in,
                1.0,
                grad.data(),
                (1, fan_out),
                x.data(),
                (fan_in, 1),
                1.0,
                dw,
                (fan_in, 1),
            );
            for r in 0..batch {
                for (d, g) in db.iter_mut().zip(grad.row(r)) {
                    *d += g;
                }
            }
            let (w, _) = self.layer(l);
            let mut dx = Matrix::zeros(batch, fan_in);
            gemm(
                batch,
                fan_out,
                fan_in,
                1.0,
                grad.data(),
                (fan_out, 1),
                w,
                (fan_in, 1),
                0.0,
                dx.data_mut(),
                (fan_in, 1),
            );
            grad = dx;
        }
        Ok(grad)
    }

    /// Parameter gradients (checkpoint layout) and input gradient.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Matrix) -> Result<(Vec<f64>, Matrix)> {
        let mut grads = vec![0.0; self.params.len()];
        let dx = self.backward_accumulate(cache, output_grad, &mut grads)?;
        Ok((grads, dx))
    }

    /// Writes the textual checkpoint record.
    ///
    /// ```text
    /// dense-net v1
    /// layer_sizes <n0> <n1> ... <nL>
    /// params <count>
    /// <one parameter per line, layer order, weights row-major then bias>
    /// ```
    /// Values use Rust's shortest round-trip formatting, so reading a
    /// checkpoint back yields bitwise-identical parameters.
    pub fn write_checkpoint<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "dense-net v1")?;
        let sizes: Vec<String> = self.layer_sizes.iter().map(|s| s.to_string()).collect();
        writeln!(out, "layer_sizes {}", sizes.join(" "))?;
        writeln!(out, "params {}", self.params.len())?;
        for p in &self.params {
            writeln!(out, "{p:?}")?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: BufRead>(input: &mut R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Checkpoint(format!("unexpected end of file, expected {what}")))
        };
        let header = next("header")?;
        if header.trim() != "dense-net v1" {
            return Err(Error::Checkpoint(format!("bad header `{header}`")));
        }
        let sizes_line = next("layer_sizes")?;
        let sizes = sizes_line
            .strip_prefix("layer_sizes ")
            .ok_or_else(|| Error::Checkpoint(format!("expected layer_sizes, got `{sizes_line}`")))?
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Checkpoint(format!("layer size: {e}")))?;
        let count_line = next("params")?;
        let count: usize = count_line
            .strip_prefix("params ")
            .ok_or_else(|| Error::Checkpoint(format!("expected params, got `{count_line}`")))?
            .trim()
            .parse()
            .map_err(|e| Error::Checkpoint(format!("param count: {e}")))?;
        let mut params = Vec::with_capacity(count);
        for i in 0..count {
            let line = next("parameter")?;
            params.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Checkpoint(format!("parameter {i}: {e}")))?,
            );
        }
        Self::from_params(&sizes, params)
    }
}

/// Bias-corrected Adam moments for one flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon_hat: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self {
            first_moment: vec![0.0; num_params],
            second_moment: vec![0.0; num_params],
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon_hat: 1e-8,
        }
    }

    /// Applies one Adam update in place. Nothing is modified when a gradient
    /// entry is non-finite.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], learning_rate: f64) -> Result<()> {
        if params.len() != grads.len() || params.len() != self.first_moment.len() {
            return Err(Error::Shape(format!(
                "adam: {} params, {} grads, {} moments",
                params.len(),
                grads.len(),
                self.first_moment.len()
            )));
        }
        if !(learning_rate >= 0.0 && learning_rate.is_finite()) {
            return Err(Error::Domain(format!(
                "learning rate must be non-negative, got {learning_rate}"
            )));
        }
        if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFiniteGradient {
                index,
                value: grads[index],
            });
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= learning_rate * m_hat / (v_hat.sqrt() + self.epsilon_hat);
        }
        Ok(())
    }
}

/// Adam step applied to a network's parameters.
pub fn adam_step(
    net: &mut DenseNet,
    grads: &[f64],
    state: &mut AdamState,
    learning_rate: f64,
) -> Result<()> {
    // Validate before bumping the generation so a rejected step leaves caches valid.
    if grads.len() != net.num_params() {
        return Err(Error::Shape(format!(
            "adam: {} grads for {} parameters",
            grads.len(),
            net.num_params()
        )));
    }
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient {
            index,
            value: grads[index],
        });
    }
    state.step(net.params_mut(), grads, learning_rate)
}
