//! Feed-forward regressor: ReLU hidden layers, affine output, trained with
//! L-BFGS on mean squared error plus an L2 weight penalty.
//!
//! Objective for `n` samples and `q` outputs:
//!
//! ```text
//! L = (1 / (n q)) Σ (ŷ − y)²  +  (α / 2n) Σ ‖W_l‖²
//! ```
//!
//! Biases are not penalized.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::lbfgs::{self, LbfgsOptions, Termination};
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    pub hidden_layers: Vec<usize>,
    pub l2_alpha: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
    pub history_size: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden_layers: vec![64],
            l2_alpha: 1e-4,
            max_iter: 500,
            grad_tol: 1e-6,
            history_size: 10,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_layers.is_empty() || self.hidden_layers.contains(&0) {
            return Err(Error::BadSpec(
                "hidden_layers must be a non-empty list of positive widths".into(),
            ));
        }
        if !(self.l2_alpha >= 0.0 && self.l2_alpha.is_finite()) {
            return Err(Error::BadSpec(format!("l2_alpha {} must be ≥ 0", self.l2_alpha)));
        }
        if self.max_iter == 0 || self.history_size == 0 {
            return Err(Error::BadSpec("max_iter and history_size must be positive".into()));
        }
        if self.grad_tol.is_nan() || self.grad_tol <= 0.0 {
            return Err(Error::BadSpec("grad_tol must be positive".into()));
        }
        Ok(())
    }

    /// `64x32` style tag.
    pub fn hidden_tag(&self) -> String {
        hidden_tag(&self.hidden_layers)
    }
}

pub fn hidden_tag(layers: &[usize]) -> String {
    layers
        .iter()
        .map(|w| w.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_in × fan_out`.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub config: MlpConfig,
    pub initial_loss: f64,
    pub train_loss: f64,
    pub n_iters: usize,
    pub converged: bool,
    /// Target columns with zero variance in the training data.
    pub degenerate_targets: Vec<usize>,
}

fn shape_err(msg: String) -> Error {
    Error::Shape(msg)
}

/// Glorot-style uniform weights in `±√(6 / (fan_in + fan_out))`, zero biases.
pub fn init(cfg: &MlpConfig, in_dim: usize, out_dim: usize) -> Result<MlpModel> {
    cfg.validate()?;
    if in_dim == 0 || out_dim == 0 {
        return Err(Error::BadSpec("input and output dims must be ≥ 1".into()));
    }
    let mut rng = seed::rng(cfg.seed, 0x4d4c_5049);
    let mut dims = vec![in_dim];
    dims.extend(&cfg.hidden_layers);
    dims.push(out_dim);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let weights = DMatrix::from_fn(fan_in, fan_out, |_, _| rng.random_range(-bound..bound));
            Layer {
                weights,
                bias: DVector::zeros(fan_out),
            }
        })
        .collect();
    Ok(MlpModel {
        layers,
        config: cfg.clone(),
        initial_loss: f64::NAN,
        train_loss: f64::NAN,
        n_iters: 0,
        converged: false,
        degenerate_targets: Vec::new(),
    })
}

fn add_bias(z: &mut DMatrix<f64>, b: &DVector<f64>) {
    for (j, mut col) in z.column_iter_mut().enumerate() {
        let bj = b[j];
        col.apply(|v| *v += bj);
    }
}

impl MlpModel {
    pub fn in_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map(|l| l.weights.ncols()).unwrap_or(0)
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Parameters flattened layer by layer: weights (column-major), then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.n_params(), "parameter vector length");
        let mut off = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.as_mut_slice().copy_from_slice(&p[off..off + nw]);
            off += nw;
            let nb = l.bias.len();
            l.bias.as_mut_slice().copy_from_slice(&p[off..off + nb]);
            off += nb;
        }
    }

    fn check_input(&self, x: &DMatrix<f64>) -> Result<()> {
        if x.ncols() != self.in_dim() {
            return Err(shape_err(format!(
                "network expects {} input columns, got {}",
                self.in_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Hidden activations (post-ReLU) for every layer plus the output.
    fn activations(&self, x: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len());
        let last = self.layers.len() - 1;
        for (i, l) in self.layers.iter().enumerate() {
            let input = if i == 0 { x } else { &acts[i - 1] };
            let mut z = input * &l.weights;
            add_bias(&mut z, &l.bias);
            if i < last {
                z.apply(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_input(x)?;
        Ok(self.activations(x).pop().expect("at least one layer"))
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.forward(x)
    }

    /// Objective and its gradient in [`params`](Self::params) order.
    pub fn loss_and_grad(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
        self.check_input(x)?;
        if y.nrows() != x.nrows() || y.ncols() != self.out_dim() {
            return Err(shape_err(format!(
                "targets are {}x{}, expected {}x{}",
                y.nrows(),
                y.ncols(),
                x.nrows(),
                self.out_dim()
            )));
        }
        if x.nrows() == 0 {
            return Err(Error::TooFewRows(0));
        }
        let mut grad = vec![0.0; self.n_params()];
        let loss = self.loss_grad_into(x, y, &mut grad);
        Ok((loss, grad))
    }

    fn loss_grad_into(&self, x: &DMatrix<f64>, y: &DMatrix<f64>, grad: &mut [f64]) -> f64 {
        let n = x.nrows() as f64;
        let q = y.ncols() as f64;
        let alpha = self.config.l2_alpha;
        let acts = self.activations(x);
        let out = acts.last().expect("output layer");

        let mut delta = out - y;
        let sse = delta.norm_squared();
        let penalty: f64 = self.layers.iter().map(|l| l.weights.norm_squared()).sum();
        let loss = sse / (n * q) + alpha * 0.5 * penalty / n;

        delta *= 2.0 / (n * q);
        // parameter offsets per layer
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for l in &self.layers {
            offsets.push(off);
            off += l.weights.len() + l.bias.len();
        }
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = if i == 0 { x } else { &acts[i - 1] };
            let mut gw = input.tr_mul(&delta);
            if alpha != 0.0 {
                gw += &layer.weights * (alpha / n);
            }
            let nw = gw.len();
            let o = offsets[i];
            grad[o..o + nw].copy_from_slice(gw.as_slice());
            for (j, col) in delta.column_iter().enumerate() {
                grad[o + nw + j] = col.sum();
            }
            if i > 0 {
                let mut prev = &delta * layer.weights.transpose();
                let h = &acts[i - 1];
                prev.zip_apply(h, |d, a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = prev;
            }
        }
        loss
    }

    /// Text dump for audits: config lines, then per layer a `layer` header,
    /// weight rows and a bias row.
    pub fn to_dump(&self) -> String {
        let mut out = String::from("format,1\n");
        let c = &self.config;
        let _ = writeln!(out, "hidden,{}", c.hidden_tag());
        let _ = writeln!(out, "l2_alpha,{:?}", c.l2_alpha);
        let _ = writeln!(out, "max_iter,{}", c.max_iter);
        let _ = writeln!(out, "grad_tol,{:?}", c.grad_tol);
        let _ = writeln!(out, "history_size,{}", c.history_size);
        let _ = writeln!(out, "seed,{}", c.seed);
        let _ = writeln!(out, "initial_loss,{:?}", self.initial_loss);
        let _ = writeln!(out, "train_loss,{:?}", self.train_loss);
        let _ = writeln!(out, "n_iters,{}", self.n_iters);
        let _ = writeln!(out, "converged,{}", self.converged);
        out.push_str("degenerate");
        for j in &self.degenerate_targets {
            let _ = write!(out, ",{j}");
        }
        out.push('\n');
        for (i, l) in self.layers.iter().enumerate() {
            let _ = writeln!(out, "layer,{i},{},{}", l.weights.nrows(), l.weights.ncols());
            for r in 0..l.weights.nrows() {
                out.push('w');
                for v in l.weights.row(r).iter() {
                    let _ = write!(out, ",{v:?}");
                }
                out.push('\n');
            }
            out.push('b');
            for v in l.bias.iter() {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Parse {
            file: "mlp dump".into(),
            row: line,
            col: 0,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let mut config = MlpConfig::default();
        let mut initial_loss = f64::NAN;
        let mut train_loss = f64::NAN;
        let mut degenerate_targets = Vec::new();
        let mut n_iters = 0;
        let mut converged = false;
        let mut layers: Vec<Layer> = Vec::new();
        let mut header_seen = false;

        fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
            s.trim().parse().map_err(|_| Error::Parse {
                file: "mlp dump".into(),
                row: line,
                col: 0,
                msg: format!("bad value '{s}'"),
            })
        }

        while let Some((ln, line)) = lines.next() {
            let (tag, rest) = line.split_once(',').unwrap_or((line, ""));
            match tag {
                "format" => {
                    if rest != "1" {
                        return Err(bad(ln, format!("unsupported format '{rest}'")));
                    }
                    header_seen = true;
                }
                "hidden" => {
                    config.hidden_layers = rest
                        .split('x')
                        .map(|w| num::<usize>(ln, w))
                        .collect::<Result<_>>()?;
                }
                "l2_alpha" => config.l2_alpha = num(ln, rest)?,
                "max_iter" => config.max_iter = num(ln, rest)?,
                "grad_tol" => config.grad_tol = num(ln, rest)?,
                "history_size" => config.history_size = num(ln, rest)?,
                "seed" => config.seed = num(ln, rest)?,
                "initial_loss" => initial_loss = num(ln, rest)?,
                "train_loss" => train_loss = num(ln, rest)?,
                "degenerate" => {
                    degenerate_targets = rest
                        .split(',')
                        .filter(|c| !c.is_empty())
                        .map(|c| num::<usize>(ln, c))
                        .collect::<Result<_>>()?;
                }
                "n_iters" => n_iters = num(ln, rest)?,
                "converged" => converged = num(ln, rest)?,
                "layer" => {
                    let parts: Vec<&str> = rest.split(',').collect();
                    if parts.len() != 3 {
                        return Err(bad(ln, "layer header needs index,rows,cols".into()));
                    }
                    let idx: usize = num(ln, parts[0])?;
                    let rows: usize = num(ln, parts[1])?;
                    let cols: usize = num(ln, parts[2])?;
                    if idx != layers.len() {
                        return Err(bad(ln, "layers out of order".into()));
                    }
                    if rows == 0 || cols == 0 || rows.saturating_mul(cols) > 1 << 26 {
                        return Err(bad(ln, "implausible layer shape".into()));
                    }
                    let mut data = Vec::with_capacity(rows * cols);
                    for _ in 0..rows {
                        let (wl, wline) =
                            lines.next().ok_or_else(|| bad(ln, "truncated layer".into()))?;
                        let cells = wline
                            .strip_prefix("w,")
                            .ok_or_else(|| bad(wl, "expected weight row".into()))?;
                        let row: Vec<f64> =
                            cells.split(',').map(|c| num(wl, c)).collect::<Result<_>>()?;
                        if row.len() != cols {
                            return Err(bad(wl, "weight row width".into()));
                        }
                        data.extend(row);
                    }
                    let (bl, bline) =
                        lines.next().ok_or_else(|| bad(ln, "missing bias row".into()))?;
                    let cells = bline
                        .strip_prefix("b,")
                        .ok_or_else(|| bad(bl, "expected bias row".into()))?;
                    let bias: Vec<f64> =
                        cells.split(',').map(|c| num(bl, c)).collect::<Result<_>>()?;
                    if bias.len() != cols {
                        return Err(bad(bl, "bias width".into()));
                    }
                    layers.push(Layer {
                        weights: DMatrix::from_row_slice(rows, cols, &data),
                        bias: DVector::from_vec(bias),
                    });
                }
                _ => return Err(bad(ln, format!("unknown tag '{tag}'"))),
            }
        }
        if !header_seen {
            return Err(bad(1, "missing format line".into()));
        }
        if layers.len() != config.hidden_layers.len() + 1 {
            return Err(Error::Shape(format!(
                "{} layers for {} hidden widths",
                layers.len(),
                config.hidden_layers.len()
            )));
        }
        for (i, w) in layers.windows(2).enumerate() {
            if w[0].weights.ncols() != w[1].weights.nrows()
                || w[0].weights.ncols() != config.hidden_layers[i]
            {
                return Err(Error::Shape(format!("layer {} does not chain", i + 1)));
            }
        }
        Ok(MlpModel {
            layers,
            config,
            initial_loss,
            train_loss,
            n_iters,
            converged,
            degenerate_targets,
        })
    }
}

pub fn forward(m: &MlpModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.forward(x)
}

pub fn predict(m: &MlpModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.predict(x)
}

pub fn loss_and_grad(m: &MlpModel, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<(f64, Vec<f64>)> {
    m.loss_and_grad(x, y)
}

/// Trains a fresh network. Deterministic given `(cfg.seed, x, y)`.
pub fn train(cfg: &MlpConfig, x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<MlpModel> {
    train_with(cfg, x, y, &LbfgsOptions::default())
}

/// [`train`] with explicit optimizer settings; `max_iter`, `grad_tol` and
/// `history_size` are always taken from `cfg`.
pub fn train_with(
    cfg: &MlpConfig,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    opts: &LbfgsOptions,
) -> Result<MlpModel> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    if y.nrows() != n {
        return Err(shape_err(format!("{} input rows but {} target rows", n, y.nrows())));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateData("non-finite training data".into()));
    }
    let mut model = init(cfg, x.ncols(), y.ncols())?;
    model.degenerate_targets = y
        .column_iter()
        .enumerate()
        .filter(|(_, c)| c.iter().all(|v| *v == c[0]))
        .map(|(j, _)| j)
        .collect();

    let opts = LbfgsOptions {
        max_iter: cfg.max_iter,
        grad_tol: cfg.grad_tol,
        history_size: cfg.history_size,
        ..opts.clone()
    };
    let mut work = model.clone();
    let objective = |p: &[f64], g: &mut [f64]| {
        work.set_params(p);
        work.loss_grad_into(x, y, g)
    };
    let result = lbfgs::minimize(objective, &model.params(), &opts)?;
    model.set_params(&result.x);
    model.initial_loss = result.initial_f;
    model.train_loss = result.f;
    model.n_iters = result.n_iters;
    model.converged = result.termination == Termination::GradientTolerance
        || result.termination == Termination::FunctionTolerance;
    Ok(model)
}

/// Mean squared error over all entries.
pub fn mse(pred: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (pred - y).norm_squared() / pred.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(n: usize, d: usize, q: usize, seed: u64) -> (DMatrix<f64>, DMatrix<f64>) {
        let mut rng = seed::rng(seed, 1);
        let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
        let y = DMatrix::from_fn(n, q, |_, _| rng.random_range(-1.0..1.0));
        (x, y)
    }

    #[test]
    fn init_shapes_and_determinism() {
        let cfg = MlpConfig {
            hidden_layers: vec![4],
            seed: 3,
            ..Default::default()
        };
        let a = init(&cfg, 3, 2).unwrap();
        let b = init(&cfg, 3, 2).unwrap();
        assert_eq!(a.params(), b.params());
        assert_eq!(a.layers[0].weights.shape(), (3, 4));
        assert_eq!(a.layers[1].weights.shape(), (4, 2));
        assert_eq!((a.layers[0].bias.len(), a.layers[1].bias.len()), (4, 2));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|b| *b == 0.0)));
        let bound = (6.0f64 / 7.0).sqrt();
        assert!(a.layers[0].weights.iter().all(|w| w.abs() <= bound));
        let c = init(&MlpConfig { seed: 4, ..cfg }, 3, 2).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn config_rejects_bad_values() {
        for cfg in [
            MlpConfig { hidden_layers: vec![], ..Default::default() },
            MlpConfig { hidden_layers: vec![3, 0], ..Default::default() },
            MlpConfig { l2_alpha: -1.0, ..Default::default() },
            MlpConfig { max_iter: 0, ..Default::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn zero_network_outputs_bias() {
        let mut m = init(&MlpConfig::default(), 3, 2).unwrap();
        let mut p = vec![0.0; m.n_params()];
        let n = p.len();
        p[n - 2] = 1.5;
        p[n - 1] = -2.0;
        m.set_params(&p);
        let out = m.forward(&DMatrix::from_element(4, 3, 7.0)).unwrap();
        for r in 0..4 {
            assert_eq!((out[(r, 0)], out[(r, 1)]), (1.5, -2.0));
        }
    }

    #[test]
    fn hand_forward_pass() {
        let mut m = init(&MlpConfig { hidden_layers: vec![1], ..Default::default() }, 1, 1).unwrap();
        m.set_params(&[0.5, -2.0, 3.0, 1.0]);
        let out = m.forward(&DMatrix::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(out[(0, 0)], 1.0);
        // positive branch: ReLU(0.5*6 - 2) = 1 → 3*1 + 1
        let out = m.forward(&DMatrix::from_element(1, 1, 6.0)).unwrap();
        assert_eq!(out[(0, 0)], 4.0);
    }

    #[test]
    fn relu_gates_negative_preactivations() {
        let mut m = init(&MlpConfig { hidden_layers: vec![2], ..Default::default() }, 1, 1).unwrap();
        // both hidden units have negative pre-activation for x = 1
        m.set_params(&[-1.0, -2.0, 0.0, 0.0, 5.0, 7.0, 0.25]);
        let acts = m.activations(&DMatrix::from_element(1, 1, 1.0));
        assert_eq!(acts[0].as_slice(), &[0.0, 0.0]);
        assert_eq!(acts[1][(0, 0)], 0.25);
    }

    #[test]
    fn perfect_fit_has_zero_loss() {
        let (x, _) = toy(5, 3, 2, 9);
        let m = init(&MlpConfig { l2_alpha: 0.0, ..Default::default() }, 3, 2).unwrap();
        let y = m.forward(&x).unwrap();
        let (loss, g) = m.loss_and_grad(&x, &y).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn penalty_linear_in_alpha() {
        let (x, y) = toy(6, 3, 2, 5);
        let base = init(&MlpConfig { l2_alpha: 0.0, ..Default::default() }, 3, 2).unwrap();
        let mut a1 = base.clone();
        a1.config.l2_alpha = 0.3;
        let mut a2 = base.clone();
        a2.config.l2_alpha = 0.6;
        let l0 = base.loss_and_grad(&x, &y).unwrap().0;
        let p1 = a1.loss_and_grad(&x, &y).unwrap().0 - l0;
        let p2 = a2.loss_and_grad(&x, &y).unwrap().0 - l0;
        assert!((p2 - 2.0 * p1).abs() < 1e-12 * p2.abs().max(1.0));
    }

    #[test]
    fn shape_errors() {
        let m = init(&MlpConfig::default(), 3, 2).unwrap();
        assert!(matches!(m.forward(&DMatrix::zeros(2, 4)), Err(Error::Shape(_))));
        assert!(m.loss_and_grad(&DMatrix::zeros(2, 3), &DMatrix::zeros(2, 3)).is_err());
        assert!(train(&MlpConfig::default(), &DMatrix::zeros(1, 3), &DMatrix::zeros(1, 2)).is_err());
    }

    #[test]
    fn predict_row_independence() {
        let (x, _) = toy(7, 4, 3, 11);
        let m = init(&MlpConfig { hidden_layers: vec![8, 5], ..Default::default() }, 4, 3).unwrap();
        let full = m.predict(&x).unwrap();
        assert_eq!(full, m.forward(&x).unwrap());
        for r in 0..7 {
            let one = m.predict(&x.rows(r, 1).into_owned()).unwrap();
            assert_eq!(one.row(0), full.row(r));
        }
        let perm = [3usize, 0, 6, 1, 5, 2, 4];
        let xp = DMatrix::from_fn(7, 4, |r, c| x[(perm[r], c)]);
        let pp = m.predict(&xp).unwrap();
        for (r, &src) in perm.iter().enumerate() {
            assert_eq!(pp.row(r), full.row(src));
        }
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let (x, y) = toy(20, 3, 2, 21);
        let cfg = MlpConfig {
            hidden_layers: vec![8],
            max_iter: 100,
            seed: 2,
            ..Default::default()
        };
        let a = train(&cfg, &x, &y).unwrap();
        let b = train(&cfg, &x, &y).unwrap();
        assert_eq!(a.params(), b.params());
        assert!(a.train_loss <= a.initial_loss);
        assert!(a.n_iters > 0);
    }

    #[test]
    fn constant_target_is_flagged() {
        let (x, mut y) = toy(10, 2, 3, 4);
        y.column_mut(1).fill(42.0);
        let m = train(&MlpConfig { max_iter: 20, ..Default::default() }, &x, &y).unwrap();
        assert_eq!(m.degenerate_targets, vec![1]);
    }

    #[test]
    fn dump_roundtrip() {
        let cfg = MlpConfig {
            hidden_layers: vec![3, 2],
            l2_alpha: 0.01,
            seed: 8,
            ..Default::default()
        };
        let mut m = init(&cfg, 4, 2).unwrap();
        m.train_loss = 0.5;
        m.n_iters = 12;
        m.converged = true;
        let back = MlpModel::from_dump(&m.to_dump()).unwrap();
        assert_eq!(back.params(), m.params());
        assert_eq!(back.config, m.config);
        assert_eq!((back.n_iters, back.converged), (12, true));
        assert!(MlpModel::from_dump("format,1\nlayer,0,1,1\nw,1\n").is_err());
        assert!(MlpModel::from_dump("hello").is_err());
    }
}
