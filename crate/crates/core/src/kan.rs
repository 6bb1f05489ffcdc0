//! KAN layers and networks.
//!
//! Every edge `(p, q)` of a layer carries the learnable activation
//!
//! ```text
//! phi(x) = gate * (w_base * silu(x) + w_spline * spline(x))
//! ```
//!
//! and node `q` sums its incoming edges plus a bias. An edge owns `G + K`
//! spline coefficients and three scalars, so a layer stores exactly
//! `(d_in * d_out) * (G + K + 3) + d_out` trainable values.
//!
//! Parameters live in one flat vector per layer, edges in input-major order
//! (`p * d_out + q`), each edge laid out as `[coeffs.., w_base, w_spline,
//! gate]`, followed by the `d_out` biases. Gradients use the same layout.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::spline::{SplineGrid, DEFAULT_GRID_SIZE, DEFAULT_ORDER, DEFAULT_RANGE};

/// `x / (1 + e^-x)`.
pub fn silu(x: f64) -> f64 {
    x / (1.0 + libm::exp(-x))
}

/// `d/dx silu(x) = s(x) * (1 + x * (1 - s(x)))` with `s` the logistic sigmoid.
pub fn silu_derivative(x: f64) -> f64 {
    let s = 1.0 / (1.0 + libm::exp(-x));
    s * (1.0 + x * (1.0 - s))
}

/// The learnable parameters of a single edge activation.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeParameters {
    pub spline_coeffs: Vec<f64>,
    pub w_base: f64,
    pub w_spline: f64,
    pub gate: f64,
}

impl EdgeParameters {
    /// Edge with all spline coefficients zero and unit scalars.
    pub fn identity_weights(grid: &SplineGrid) -> Self {
        Self {
            spline_coeffs: vec![0.0; grid.num_basis()],
            w_base: 1.0,
            w_spline: 1.0,
            gate: 1.0,
        }
    }

    pub fn activation(&self, grid: &SplineGrid, x: f64) -> Result<f64> {
        let spline = grid.spline_eval(&self.spline_coeffs, x)?;
        Ok(self.gate * (self.w_base * silu(x) + self.w_spline * spline))
    }
}

/// Free-function form of [`EdgeParameters::activation`].
pub fn edge_activation(edge: &EdgeParameters, grid: &SplineGrid, x: f64) -> Result<f64> {
    edge.activation(grid, x)
}

/// Shape and grid of a network.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    /// Layer widths, input first: `[36, 64, 6]` is a two-layer network.
    pub dims: Vec<usize>,
    pub grid_size: usize,
    pub order: usize,
    pub range: (f64, f64),
}

impl NetworkConfig {
    pub fn with_dims(dims: &[usize]) -> Self {
        Self {
            dims: dims.to_vec(),
            grid_size: DEFAULT_GRID_SIZE,
            order: DEFAULT_ORDER,
            range: DEFAULT_RANGE,
        }
    }

    pub fn grid(&self) -> Result<SplineGrid> {
        SplineGrid::new(self.grid_size, self.order, self.range.0, self.range.1)
    }

    fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            bail!(
                Config,
                "a network needs at least an input and an output width, got {:?}",
                self.dims
            );
        }
        if self.dims.contains(&0) {
            bail!(Config, "layer widths must be positive, got {:?}", self.dims);
        }
        Ok(())
    }
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self::with_dims(&[36, 64, 6])
    }
}

/// `(d_in * d_out) * (G + K + 3) + d_out`.
pub fn layer_parameter_count(d_in: usize, d_out: usize, grid_size: usize, order: usize) -> usize {
    d_in * d_out * (grid_size + order + 3) + d_out
}

#[derive(Debug, Clone, PartialEq)]
pub struct KanLayer {
    d_in: usize,
    d_out: usize,
    grid: SplineGrid,
    params: Vec<f64>,
}

/// Per-layer intermediates recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    input: Vec<f64>,
    /// `d_in x (G + K)` basis values, row per input.
    basis: Vec<f64>,
    /// `d_in x (G + K)` basis derivatives, zeroed where the input was clamped.
    basis_deriv: Vec<f64>,
    silu: Vec<f64>,
    silu_deriv: Vec<f64>,
}

impl KanLayer {
    /// Layer with every parameter zero.
    pub fn zeroed(d_in: usize, d_out: usize, grid: SplineGrid) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            bail!(Config, "layer dimensions must be positive, got {d_in}x{d_out}");
        }
        let n = layer_parameter_count(d_in, d_out, grid.grid_size(), grid.order());
        Ok(Self {
            d_in,
            d_out,
            grid,
            params: vec![0.0; n],
        })
    }

    /// Standard initialization: spline coefficients uniform in
    /// `±0.1 / (G + K)`, `w_base = w_spline = gate = 1`, zero bias.
    pub fn init<R: Rng + ?Sized>(d_in: usize, d_out: usize, grid: SplineGrid, rng: &mut R) -> Result<Self> {
        let mut layer = Self::zeroed(d_in, d_out, grid)?;
        let nb = layer.grid.num_basis();
        let bound = 0.1 / nb as f64;
        let stride = layer.edge_stride();
        for e in 0..d_in * d_out {
            let edge = &mut layer.params[e * stride..(e + 1) * stride];
            for c in &mut edge[..nb] {
                *c = rng.gen_range(-bound..=bound);
            }
            edge[nb] = 1.0;
            edge[nb + 1] = 1.0;
            edge[nb + 2] = 1.0;
        }
        Ok(layer)
    }

    pub fn from_params(d_in: usize, d_out: usize, grid: SplineGrid, params: Vec<f64>) -> Result<Self> {
        let layer = Self::zeroed(d_in, d_out, grid)?;
        if params.len() != layer.params.len() {
            bail!(
                Contract,
                "a {d_in}x{d_out} layer needs {} parameters, got {}",
                layer.params.len(),
                params.len()
            );
        }
        Ok(Self { params, ..layer })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn grid(&self) -> &SplineGrid {
        &self.grid
    }

    /// Number of stored scalars per edge, `G + K + 3`.
    pub fn edge_stride(&self) -> usize {
        self.grid.num_basis() + 3
    }

    pub fn parameter_count(&self) -> usize {
        layer_parameter_count(self.d_in, self.d_out, self.grid.grid_size(), self.grid.order())
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn edge_offset(&self, p: usize, q: usize) -> usize {
        assert!(p < self.d_in && q < self.d_out, "edge ({p}, {q}) out of range");
        (p * self.d_out + q) * self.edge_stride()
    }

    pub fn edge(&self, p: usize, q: usize) -> EdgeParameters {
        let nb = self.grid.num_basis();
        let e = &self.params[self.edge_offset(p, q)..][..nb + 3];
        EdgeParameters {
            spline_coeffs: e[..nb].to_vec(),
            w_base: e[nb],
            w_spline: e[nb + 1],
            gate: e[nb + 2],
        }
    }

    pub fn set_edge(&mut self, p: usize, q: usize, edge: &EdgeParameters) -> Result<()> {
        let nb = self.grid.num_basis();
        if edge.spline_coeffs.len() != nb {
            bail!(
                Contract,
                "edge needs {nb} spline coefficients, got {}",
                edge.spline_coeffs.len()
            );
        }
        let off = self.edge_offset(p, q);
        let e = &mut self.params[off..off + nb + 3];
        e[..nb].copy_from_slice(&edge.spline_coeffs);
        e[nb] = edge.w_base;
        e[nb + 1] = edge.w_spline;
        e[nb + 2] = edge.gate;
        Ok(())
    }

    pub fn bias(&self) -> &[f64] {
        &self.params[self.d_in * self.d_out * self.edge_stride()..]
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        let off = self.d_in * self.d_out * self.edge_stride();
        &mut self.params[off..]
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.d_in {
            bail!(Contract, "layer expects {} inputs, got {}", self.d_in, x.len());
        }
        Ok(())
    }

    fn trace_input(&self, x: &[f64], with_derivs: bool) -> LayerTrace {
        let nb = self.grid.num_basis();
        let mut basis = vec![0.0; self.d_in * nb];
        let mut basis_deriv = vec![0.0; if with_derivs { self.d_in * nb } else { 0 }];
        for (p, &xp) in x.iter().enumerate() {
            let row = &mut basis[p * nb..(p + 1) * nb];
            if with_derivs {
                let drow = &mut basis_deriv[p * nb..(p + 1) * nb];
                self.grid.basis_and_derivatives_into(xp, row, drow);
                if self.grid.is_clamped(xp) {
                    drow.fill(0.0);
                }
            } else {
                self.grid.basis_values_into(xp, row);
            }
        }
        LayerTrace {
            input: x.to_vec(),
            basis,
            basis_deriv,
            silu: x.iter().map(|&v| silu(v)).collect(),
            silu_deriv: if with_derivs {
                x.iter().map(|&v| silu_derivative(v)).collect()
            } else {
                Vec::new()
            },
        }
    }

    fn output_from_trace(&self, trace: &LayerTrace) -> Vec<f64> {
        let nb = self.grid.num_basis();
        let stride = self.edge_stride();
        let mut out = self.bias().to_vec();
        for p in 0..self.d_in {
            let b = &trace.basis[p * nb..(p + 1) * nb];
            let s = trace.silu[p];
            for (q, o) in out.iter_mut().enumerate() {
                let e = &self.params[(p * self.d_out + q) * stride..][..stride];
                let spline: f64 = e[..nb].iter().zip(b).map(|(c, bi)| c * bi).sum();
                *o += e[nb + 2] * (e[nb] * s + e[nb + 1] * spline);
            }
        }
        out
    }

    /// `out_q = bias_q + Σ_p phi_{p,q}(x_p)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.output_from_trace(&self.trace_input(x, false)))
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<(Vec<f64>, LayerTrace)> {
        self.check_input(x)?;
        let trace = self.trace_input(x, true);
        Ok((self.output_from_trace(&trace), trace))
    }

    /// Accumulates parameter gradients of `<upstream, forward(x)>` into
    /// `grads` and returns the gradient with respect to the layer input.
    pub fn backward(&self, trace: &LayerTrace, upstream: &[f64], grads: &mut [f64]) -> Result<Vec<f64>> {
        let nb = self.grid.num_basis();
        if trace.input.len() != self.d_in
            || trace.basis.len() != self.d_in * nb
            || trace.basis_deriv.len() != self.d_in * nb
        {
            bail!(
                State,
                "trace does not belong to a {}x{} layer with {nb} basis functions",
                self.d_in,
                self.d_out
            );
        }
        if upstream.len() != self.d_out {
            bail!(
                Contract,
                "upstream gradient has length {}, expected {}",
                upstream.len(),
                self.d_out
            );
        }
        if grads.len() != self.params.len() {
            bail!(
                Contract,
                "gradient buffer has length {}, expected {}",
                grads.len(),
                self.params.len()
            );
        }
        let stride = self.edge_stride();
        let mut dx = vec![0.0; self.d_in];
        for p in 0..self.d_in {
            let b = &trace.basis[p * nb..(p + 1) * nb];
            let db = &trace.basis_deriv[p * nb..(p + 1) * nb];
            let s = trace.silu[p];
            let ds = trace.silu_deriv[p];
            let mut dxp = 0.0;
            for (q, &g) in upstream.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let off = (p * self.d_out + q) * stride;
                let e = &self.params[off..off + stride];
                let (w_base, w_spline, gate) = (e[nb], e[nb + 1], e[nb + 2]);
                let mut spline = 0.0;
                let mut dspline = 0.0;
                for i in 0..nb {
                    spline += e[i] * b[i];
                    dspline += e[i] * db[i];
                }
                let ge = &mut grads[off..off + stride];
                let scale = g * gate * w_spline;
                for i in 0..nb {
                    ge[i] += scale * b[i];
                }
                ge[nb] += g * gate * s;
                ge[nb + 1] += g * gate * spline;
                ge[nb + 2] += g * (w_base * s + w_spline * spline);
                dxp += g * gate * (w_base * ds + w_spline * dspline);
            }
            dx[p] = dxp;
        }
        let bias_off = self.d_in * self.d_out * stride;
        for (gb, &g) in grads[bias_off..].iter_mut().zip(upstream) {
            *gb += g;
        }
        Ok(dx)
    }
}

/// Intermediates of a full network forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    layers: Vec<LayerTrace>,
    output: Vec<f64>,
}

impl ForwardTrace {
    /// Class scores produced by the traced pass.
    pub fn output(&self) -> &[f64] {
        &self.output
    }
}

/// Parameter gradients (one flat vector per layer) plus the input gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Vec<f64>>,
    pub input: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &KanNetwork) -> Self {
        Self {
            layers: net.layers.iter().map(|l| vec![0.0; l.params.len()]).collect(),
            input: vec![0.0; net.input_dim()],
        }
    }

    pub fn fill_zero(&mut self) {
        self.layers.iter_mut().for_each(|l| l.fill(0.0));
        self.input.fill(0.0);
    }

    pub fn scale(&mut self, factor: f64) {
        for v in self.layers.iter_mut().flatten().chain(self.input.iter_mut()) {
            *v *= factor;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KanNetwork {
    layers: Vec<KanLayer>,
}

impl KanNetwork {
    /// Randomly initialized network; the same seed gives the same parameters.
    pub fn new(config: &NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = config
            .dims
            .windows(2)
            .map(|w| KanLayer::init(w[0], w[1], grid.clone(), &mut rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn zeroed(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let grid = config.grid()?;
        let layers = config
            .dims
            .windows(2)
            .map(|w| KanLayer::zeroed(w[0], w[1], grid.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<KanLayer>) -> Result<Self> {
        if layers.is_empty() {
            bail!(Config, "a network needs at least one layer");
        }
        for (l, w) in layers.windows(2).enumerate() {
            if w[0].d_out != w[1].d_in {
                bail!(
                    Config,
                    "layer {l} outputs {} values but layer {} expects {}",
                    w[0].d_out,
                    l + 1,
                    w[1].d_in
                );
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[KanLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [KanLayer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].d_in
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].d_out
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.input_dim()];
        dims.extend(self.layers.iter().map(|l| l.d_out));
        dims
    }

    /// Total trainable scalars across all layers.
    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(KanLayer::parameter_count).sum()
    }

    /// Raw class scores; no softmax is applied.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.forward(&h)?;
        }
        Ok(h)
    }

    pub fn forward_trace(&self, x: &[f64]) -> Result<ForwardTrace> {
        let mut h = x.to_vec();
        let mut layers = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (out, trace) = layer.forward_trace(&h)?;
            layers.push(trace);
            h = out;
        }
        Ok(ForwardTrace { layers, output: h })
    }

    /// Gradients of `<upstream, forward(x)>` for the input recorded in `trace`.
    pub fn backward(&self, trace: &ForwardTrace, upstream: &[f64]) -> Result<Gradients> {
        let mut grads = Gradients::zeros_like(self);
        self.backward_accumulate(trace, upstream, &mut grads)?;
        Ok(grads)
    }

    /// Like [`backward`](Self::backward) but adds parameter gradients into
    /// `grads`. The input gradient is overwritten.
    pub fn backward_accumulate(&self, trace: &ForwardTrace, upstream: &[f64], grads: &mut Gradients) -> Result<()> {
        if trace.layers.len() != self.layers.len() {
            bail!(
                State,
                "trace has {} layers but the network has {}",
                trace.layers.len(),
                self.layers.len()
            );
        }
        if grads.layers.len() != self.layers.len() {
            bail!(
                Contract,
                "gradient set has {} layers, expected {}",
                grads.layers.len(),
                self.layers.len()
            );
        }
        if upstream.len() != self.output_dim() {
            bail!(
                Contract,
                "upstream gradient has length {}, expected {}",
                upstream.len(),
                self.output_dim()
            );
        }
        let mut g = upstream.to_vec();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            g = layer
                .backward(&trace.layers[l], &g, &mut grads.layers[l])
                .map_err(|e| match e {
                    crate::Error::State(m) => crate::Error::State(format!("layer {l}: {m}")),
                    other => other,
                })?;
        }
        grads.input = g;
        Ok(())
    }
}
