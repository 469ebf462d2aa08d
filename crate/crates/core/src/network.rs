//! Fully connected feedforward networks with a linear output layer, plus the
//! exact constructions the analysis relies on: block-diagonal linear
//! combination, ReLU identity deepening, and hard-constraint wrappers.
//!
//! Parameters are stored flat in layer-major order, weights before biases
//! (`W_1` row-major, `b_1`, `W_2`, `b_2`, ...), which is also the order used
//! by checkpoints and by the optimizer.

use crate::activation::Activation;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    widths: Vec<usize>,
    activation: Activation,
    params: Vec<f64>,
    seed: Option<u64>,
}

/// Total parameter count M = Σ d_{i+1}·(d_i + 1).
pub fn param_count(widths: &[usize]) -> usize {
    widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
}

impl Network {
    /// Wrap an explicit parameter vector. Checks shape consistency.
    pub fn from_params(widths: Vec<usize>, activation: Activation, params: Vec<f64>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArchitecture("need at least one layer".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArchitecture("zero width".into()));
        }
        let m = param_count(&widths);
        if params.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "expected {m} parameters, got {}",
                params.len()
            )));
        }
        Ok(Network {
            widths,
            activation,
            params,
            seed: None,
        })
    }

    /// Build a network from per-layer weight matrices (row-major) and biases.
    pub fn from_layers(
        widths: Vec<usize>,
        activation: Activation,
        layers: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Result<Self> {
        let mut params = Vec::with_capacity(param_count(&widths));
        if layers.len() + 1 != widths.len() {
            return Err(Error::InvalidArchitecture("layer count mismatch".into()));
        }
        for (i, (w, b)) in layers.iter().enumerate() {
            if w.len() != widths[i + 1] * widths[i] || b.len() != widths[i + 1] {
                return Err(Error::InvalidArchitecture(format!(
                    "layer {i} has wrong shape"
                )));
            }
            params.extend_from_slice(w);
            params.extend_from_slice(b);
        }
        Network::from_params(widths, activation, params)
    }

    /// Glorot-uniform weights (bound √(6/(d_in+d_out))), zero biases.
    /// Identical seed ⇒ identical network.
    pub fn init(widths: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        use rand::{Rng, SeedableRng};
        if widths.len() < 2 {
            return Err(Error::InvalidArchitecture("need at least one layer".into()));
        }
        if widths.iter().any(|&w| w == 0) {
            return Err(Error::InvalidArchitecture("zero width".into()));
        }
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut params = Vec::with_capacity(param_count(widths));
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for _ in 0..fan_in * fan_out {
                params.push(rng.random_range(-bound..=bound));
            }
            params.extend(std::iter::repeat(0.0).take(fan_out));
        }
        let mut net = Network::from_params(widths.to_vec(), activation, params)?;
        net.seed = Some(seed);
        Ok(net)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    /// Depth L: the number of affine maps.
    pub fn depth(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.params.len());
        self.params.copy_from_slice(params);
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// Offset of layer `i` (0-based) in the flat parameter vector.
    pub fn layer_offset(&self, i: usize) -> usize {
        let mut off = 0;
        for j in 0..i {
            off += self.widths[j + 1] * (self.widths[j] + 1);
        }
        off
    }

    /// Weight matrix (row-major d_out×d_in) and bias of layer `i` (0-based).
    pub fn layer(&self, i: usize) -> (&[f64], &[f64]) {
        let off = self.layer_offset(i);
        let (din, dout) = (self.widths[i], self.widths[i + 1]);
        (
            &self.params[off..off + dout * din],
            &self.params[off + dout * din..off + dout * (din + 1)],
        )
    }

    /// Forward pass.
    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        assert_eq!(z.len(), self.input_dim(), "input dimension");
        let depth = self.depth();
        let mut cur = z.to_vec();
        for i in 0..depth {
            let (w, b) = self.layer(i);
            let (din, dout) = (self.widths[i], self.widths[i + 1]);
            let mut next = vec![0.0; dout];
            for r in 0..dout {
                let row = &w[r * din..(r + 1) * din];
                let mut acc = 0.0;
                for c in 0..din {
                    acc += row[c] * cur[c];
                }
                next[r] = acc + b[r];
            }
            if i + 1 < depth {
                for v in next.iter_mut() {
                    *v = self.activation.value(*v);
                }
            }
            cur = next;
        }
        cur
    }

    /// Forward pass in single precision, for reproducing the float32 loss
    /// magnitudes reported by training setups that run in 32-bit.
    pub fn eval_f32(&self, z: &[f64]) -> Vec<f32> {
        let depth = self.depth();
        let mut cur: Vec<f32> = z.iter().map(|&v| v as f32).collect();
        for i in 0..depth {
            let (w, b) = self.layer(i);
            let (din, dout) = (self.widths[i], self.widths[i + 1]);
            let mut next = vec![0.0f32; dout];
            for r in 0..dout {
                let mut acc = 0.0f32;
                for c in 0..din {
                    acc += (w[r * din + c] as f32) * cur[c];
                }
                next[r] = acc + b[r] as f32;
            }
            if i + 1 < depth {
                for v in next.iter_mut() {
                    *v = match self.activation {
                        Activation::ReLU => v.max(0.0),
                        Activation::Tanh => v.tanh(),
                        Activation::Sech => 1.0 / v.cosh(),
                    };
                }
            }
            cur = next;
        }
        cur
    }
}

/// Exact linear combination c1·f + c2·g by running f and g in parallel
/// (block-diagonal hidden layers, scaled output layer).
pub fn linear_combine(f: &Network, g: &Network, c1: f64, c2: f64) -> Result<Network> {
    if f.activation != g.activation {
        return Err(Error::IncompatibleNetworks("activation differs".into()));
    }
    if f.depth() != g.depth() {
        return Err(Error::IncompatibleNetworks("depth differs".into()));
    }
    if f.input_dim() != g.input_dim() || f.output_dim() != g.output_dim() {
        return Err(Error::IncompatibleNetworks("in/out dims differ".into()));
    }
    let depth = f.depth();
    let mut widths = vec![f.input_dim()];
    for i in 1..depth {
        widths.push(f.widths[i] + g.widths[i]);
    }
    widths.push(f.output_dim());

    let mut layers = Vec::with_capacity(depth);
    for i in 0..depth {
        let (wf, bf) = f.layer(i);
        let (wg, bg) = g.layer(i);
        let (din, dout) = (widths[i], widths[i + 1]);
        let (din_f, dout_f) = (f.widths[i], f.widths[i + 1]);
        let (din_g, dout_g) = (g.widths[i], g.widths[i + 1]);
        let mut w = vec![0.0; dout * din];
        let mut b = vec![0.0; dout];

        if i == 0 && depth > 1 {
            // shared input block: stack rows
            for r in 0..dout_f {
                w[r * din..r * din + din_f].copy_from_slice(&wf[r * din_f..(r + 1) * din_f]);
            }
            for r in 0..dout_g {
                w[(dout_f + r) * din..(dout_f + r) * din + din_g]
                    .copy_from_slice(&wg[r * din_g..(r + 1) * din_g]);
            }
            b[..dout_f].copy_from_slice(bf);
            b[dout_f..].copy_from_slice(bg);
        } else if i + 1 == depth {
            // output layer: concatenate scaled rows over the stacked hidden
            // blocks; for depth 1 (single affine map) blocks degenerate to
            // the shared input.
            if depth == 1 {
                for r in 0..dout {
                    for c in 0..din {
                        w[r * din + c] = c1 * wf[r * din_f + c] + c2 * wg[r * din_g + c];
                    }
                }
            } else {
                for r in 0..dout {
                    for c in 0..din_f {
                        w[r * din + c] = c1 * wf[r * din_f + c];
                    }
                    for c in 0..din_g {
                        w[r * din + din_f + c] = c2 * wg[r * din_g + c];
                    }
                }
            }
            for r in 0..dout {
                b[r] = c1 * bf[r] + c2 * bg[r];
            }
        } else {
            // interior block-diagonal layer
            for r in 0..dout_f {
                w[r * din..r * din + din_f].copy_from_slice(&wf[r * din_f..(r + 1) * din_f]);
            }
            for r in 0..dout_g {
                w[(dout_f + r) * din + din_f..(dout_f + r) * din + din_f + din_g]
                    .copy_from_slice(&wg[r * din_g..(r + 1) * din_g]);
            }
            b[..dout_f].copy_from_slice(bf);
            b[dout_f..].copy_from_slice(bg);
        }
        layers.push((w, b));
    }
    Network::from_layers(widths, f.activation, layers)
}

/// Deepen a ReLU network to `target_depth` without changing the realized
/// function, by splitting the last hidden layer through the identity
/// x = max(0,x) - max(0,-x) applied to its pre-activation.
///
/// Kinks of the deepened network coincide with kinks of the original, so
/// second-order jets are preserved wherever they existed before.
pub fn deepen_relu_identity(net: &Network, target_depth: usize) -> Result<Network> {
    if net.activation != Activation::ReLU {
        return Err(Error::WrongActivation);
    }
    if target_depth < net.depth() {
        return Err(Error::InvalidArchitecture(format!(
            "target depth {target_depth} below current {}",
            net.depth()
        )));
    }
    let mut cur = net.clone();
    while cur.depth() < target_depth {
        cur = split_last_hidden(&cur)?;
    }
    Ok(cur)
}

/// Replace the last hidden layer h = ReLU(a) by the two-layer computation
/// u = ReLU([a; -a]), h = ReLU([I, -I] u). The new pre-activations are ±a
/// and a, so no new kink locations appear.
fn split_last_hidden(net: &Network) -> Result<Network> {
    let depth = net.depth();
    if depth < 2 {
        // Depth-1 networks are a bare affine map; give them a genuine hidden
        // identity layer instead.
        let (w, b) = net.layer(0);
        let (din, dout) = (net.widths[0], net.widths[1]);
        let mut w1 = vec![0.0; 2 * dout * din];
        let mut b1 = vec![0.0; 2 * dout];
        for r in 0..dout {
            for c in 0..din {
                w1[r * din + c] = w[r * din + c];
                w1[(dout + r) * din + c] = -w[r * din + c];
            }
            b1[r] = b[r];
            b1[dout + r] = -b[r];
        }
        let mut w2 = vec![0.0; dout * 2 * dout];
        for r in 0..dout {
            w2[r * 2 * dout + r] = 1.0;
            w2[r * 2 * dout + dout + r] = -1.0;
        }
        let widths = vec![din, 2 * dout, dout];
        return Network::from_layers(widths, Activation::ReLU, vec![(w1, b1), (w2, vec![0.0; dout])]);
    }

    let last_hidden = depth - 1; // 0-based layer index of the last hidden affine map
    let (wh, bh) = net.layer(last_hidden - 1);
    let (din_h, w_h) = (net.widths[last_hidden - 1], net.widths[last_hidden]);

    let mut widths = net.widths.clone();
    widths.splice(last_hidden..last_hidden, [2 * w_h]);

    let mut layers: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(depth + 1);
    for i in 0..last_hidden - 1 {
        let (w, b) = net.layer(i);
        layers.push((w.to_vec(), b.to_vec()));
    }
    // layer A: [a; -a]
    let mut wa = vec![0.0; 2 * w_h * din_h];
    let mut ba = vec![0.0; 2 * w_h];
    for r in 0..w_h {
        for c in 0..din_h {
            wa[r * din_h + c] = wh[r * din_h + c];
            wa[(w_h + r) * din_h + c] = -wh[r * din_h + c];
        }
        ba[r] = bh[r];
        ba[w_h + r] = -bh[r];
    }
    layers.push((wa, ba));
    // layer B: ReLU([I, -I] u) reconstructs ReLU(a)
    let mut wb = vec![0.0; w_h * 2 * w_h];
    for r in 0..w_h {
        wb[r * 2 * w_h + r] = 1.0;
        wb[r * 2 * w_h + w_h + r] = -1.0;
    }
    layers.push((wb, vec![0.0; w_h]));
    // output layer unchanged
    let (wo, bo) = net.layer(depth - 1);
    layers.push((wo.to_vec(), bo.to_vec()));

    Network::from_layers(widths, Activation::ReLU, layers)
}

// ---------------------------------------------------------------------------
// Hard constraints
// ---------------------------------------------------------------------------

/// A scalar function of the input with an exact second-order jet, used by the
/// hard-constraint wrappers so constrained networks stay jet-evaluable.
pub trait ScalarField: Send + Sync {
    /// Returns (value, gradient d, hessian d×d row-major).
    fn jet(&self, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>);
    fn value(&self, z: &[f64]) -> f64 {
        self.jet(z).0
    }
}

/// A vector-valued counterpart (one jet per output component).
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;
    /// Returns per component (value, gradient, hessian row-major).
    fn jet(&self, z: &[f64]) -> Vec<(f64, Vec<f64>, Vec<f64>)>;
    fn value(&self, z: &[f64]) -> Vec<f64> {
        self.jet(z).into_iter().map(|(v, _, _)| v).collect()
    }
}

#[derive(Clone)]
pub enum Constraint {
    /// u(z) = m(z) · net(z)
    MultiplicativeMask(Arc<dyn ScalarField>),
    /// u(z) = g0(z) + scale(z) · net(z)
    AdditiveAnchor {
        offset: Arc<dyn VectorField>,
        scale: Arc<dyn ScalarField>,
    },
}

/// A base network composed with a hard boundary/initial-condition embedding.
#[derive(Clone)]
pub struct ConstrainedNetwork {
    pub base: Network,
    pub constraint: Constraint,
}

pub fn wrap_hard_constraint(net: Network, constraint: Constraint) -> ConstrainedNetwork {
    ConstrainedNetwork {
        base: net,
        constraint,
    }
}

impl ConstrainedNetwork {
    pub fn eval(&self, z: &[f64]) -> Vec<f64> {
        let base = self.base.eval(z);
        apply_constraint_values(&self.constraint, z, &base)
    }
}

pub(crate) fn apply_constraint_values(constraint: &Constraint, z: &[f64], base: &[f64]) -> Vec<f64> {
    match constraint {
        Constraint::MultiplicativeMask(m) => {
            let mv = m.value(z);
            base.iter().map(|&v| mv * v).collect()
        }
        Constraint::AdditiveAnchor { offset, scale } => {
            let g0 = offset.value(z);
            let s = scale.value(z);
            base.iter()
                .zip(g0.iter())
                .map(|(&v, &g)| g + s * v)
                .collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    widths: Vec<usize>,
    activation: String,
    seed: Option<u64>,
    params: Vec<f64>,
}

/// Serialize a network to the JSON checkpoint format. The shortest-roundtrip
/// float encoding makes save/load bit-exact in 64-bit mode.
pub fn checkpoint_to_string(net: &Network) -> String {
    let file = CheckpointFile {
        format: "pinnlab-net-v1".into(),
        widths: net.widths.clone(),
        activation: net.activation.tag().into(),
        seed: net.seed,
        params: net.params.clone(),
    };
    serde_json::to_string(&file).expect("checkpoint serialization")
}

pub fn checkpoint_from_str(text: &str) -> Result<Network> {
    let file: CheckpointFile =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("checkpoint: {e}")))?;
    if file.format != "pinnlab-net-v1" {
        return Err(Error::Config(format!(
            "unknown checkpoint format {}",
            file.format
        )));
    }
    let activation = Activation::from_tag(&file.activation)
        .ok_or_else(|| Error::Config(format!("unknown activation {}", file.activation)))?;
    let mut net = Network::from_params(file.widths, activation, file.params)?;
    net.seed = file.seed;
    Ok(net)
}

pub fn save_checkpoint(net: &Network, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, checkpoint_to_string(net))?;
    Ok(())
}

pub fn load_checkpoint(path: &std::path::Path) -> Result<Network> {
    let text = std::fs::read_to_string(path)?;
    checkpoint_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_points(d: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect()
    }

    #[test]
    fn param_count_matches_enumeration() {
        // widths (2, 32×7 hidden, 1)
        let mut widths = vec![2];
        widths.extend(std::iter::repeat(32).take(7));
        widths.push(1);
        let net = Network::init(&widths, Activation::Tanh, 1).unwrap();
        let by_formula = param_count(&widths);
        let by_hand: usize = (0..net.depth())
            .map(|i| {
                let (w, b) = net.layer(i);
                w.len() + b.len()
            })
            .sum();
        assert_eq!(by_formula, by_hand);
        assert_eq!(net.param_count(), by_formula);

        // widths (1,1): a single affine map, M = 2
        assert_eq!(param_count(&[1, 1]), 2);
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = Network::init(&[2, 8, 1], Activation::ReLU, 42).unwrap();
        let b = Network::init(&[2, 8, 1], Activation::ReLU, 42).unwrap();
        assert_eq!(a.params(), b.params());
        let c = Network::init(&[2, 8, 1], Activation::ReLU, 43).unwrap();
        assert_ne!(a.params(), c.params());
    }

    #[test]
    fn zero_width_rejected() {
        assert!(matches!(
            Network::init(&[2, 0, 1], Activation::Tanh, 0),
            Err(Error::InvalidArchitecture(_))
        ));
    }

    #[test]
    fn constant_network_returns_bias() {
        // zero weights, output bias v
        let w1 = vec![0.0; 3 * 2];
        let b1 = vec![0.0; 3];
        let w2 = vec![0.0; 3];
        let b2 = vec![0.75];
        let net =
            Network::from_layers(vec![2, 3, 1], Activation::Tanh, vec![(w1, b1), (w2, b2)]).unwrap();
        for z in random_points(2, 20, 7) {
            assert_eq!(net.eval(&z), vec![0.75]);
        }
    }

    #[test]
    fn relu_identity_map() {
        // f(x) = ReLU(x) - ReLU(-x) = x
        let net = Network::from_layers(
            vec![1, 2, 1],
            Activation::ReLU,
            vec![
                (vec![1.0, -1.0], vec![0.0, 0.0]),
                (vec![1.0, -1.0], vec![0.0]),
            ],
        )
        .unwrap();
        assert_eq!(net.eval(&[1.0]), vec![1.0]);
        assert_eq!(net.eval(&[-2.5]), vec![-2.5]);
    }

    #[test]
    fn tanh_saturates() {
        let net = Network::from_layers(
            vec![1, 1, 1],
            Activation::Tanh,
            vec![(vec![1.0], vec![0.0]), (vec![1.0], vec![0.0])],
        )
        .unwrap();
        let v = net.eval(&[50.0])[0];
        assert!(v > 0.99 && v <= 1.0);
        let v = net.eval(&[-50.0])[0];
        assert!(v < -0.99 && v >= -1.0);
    }

    #[test]
    fn linear_combine_matches_pointwise() {
        let f = Network::init(&[2, 6, 5, 1], Activation::Tanh, 10).unwrap();
        let g = Network::init(&[2, 4, 7, 1], Activation::Tanh, 11).unwrap();
        let h = linear_combine(&f, &g, 2.0, -3.0).unwrap();
        assert_eq!(h.widths(), &[2, 10, 12, 1]);
        for z in random_points(2, 1000, 3) {
            let expect = 2.0 * f.eval(&z)[0] - 3.0 * g.eval(&z)[0];
            let got = h.eval(&z)[0];
            assert!((expect - got).abs() <= 1e-14 * (1.0 + expect.abs()), "{expect} vs {got}");
        }
        // c2 = 0 keeps f
        let id = linear_combine(&f, &g, 1.0, 0.0).unwrap();
        for z in random_points(2, 50, 4) {
            assert!((id.eval(&z)[0] - f.eval(&z)[0]).abs() <= 1e-14);
        }
    }

    #[test]
    fn linear_combine_associates_at_value_level() {
        let f = Network::init(&[1, 5, 1], Activation::Tanh, 1).unwrap();
        let g = Network::init(&[1, 4, 1], Activation::Tanh, 2).unwrap();
        let h = Network::init(&[1, 3, 1], Activation::Tanh, 3).unwrap();
        let fg = linear_combine(&f, &g, 1.0, 1.0).unwrap();
        let fgh = linear_combine(&fg, &h, 1.0, 1.0).unwrap();
        for z in random_points(1, 200, 5) {
            let expect = f.eval(&z)[0] + g.eval(&z)[0] + h.eval(&z)[0];
            assert!((fgh.eval(&z)[0] - expect).abs() <= 1e-13 * (1.0 + expect.abs()));
        }
    }

    #[test]
    fn incompatible_networks_rejected() {
        let f = Network::init(&[2, 4, 1], Activation::Tanh, 0).unwrap();
        let g = Network::init(&[2, 4, 1], Activation::ReLU, 0).unwrap();
        assert!(matches!(
            linear_combine(&f, &g, 1.0, 1.0),
            Err(Error::IncompatibleNetworks(_))
        ));
        let h = Network::init(&[2, 4, 4, 1], Activation::Tanh, 0).unwrap();
        assert!(linear_combine(&f, &h, 1.0, 1.0).is_err());
    }

    #[test]
    fn deepen_preserves_function() {
        let net = Network::init(&[2, 6, 1], Activation::ReLU, 9).unwrap();
        assert_eq!(net.depth(), 2);
        let same = deepen_relu_identity(&net, 2).unwrap();
        assert_eq!(same.params(), net.params());
        let deep = deepen_relu_identity(&net, 5).unwrap();
        assert_eq!(deep.depth(), 5);
        for z in random_points(2, 1000, 12) {
            let a = net.eval(&z)[0];
            let b = deep.eval(&z)[0];
            assert!((a - b).abs() <= 1e-15 * (1.0 + a.abs()), "{a} vs {b}");
        }
        // negative inputs exercise both ReLU branches
        assert_eq!(net.eval(&[-1.0, -2.0]), deep.eval(&[-1.0, -2.0]));
    }

    #[test]
    fn deepen_requires_relu() {
        let net = Network::init(&[2, 4, 1], Activation::Tanh, 0).unwrap();
        assert!(matches!(
            deepen_relu_identity(&net, 4),
            Err(Error::WrongActivation)
        ));
    }

    #[test]
    fn checkpoint_roundtrip_is_bit_exact() {
        let net = Network::init(&[3, 9, 4, 2], Activation::Sech, 77).unwrap();
        let text = checkpoint_to_string(&net);
        let back = checkpoint_from_str(&text).unwrap();
        assert_eq!(net.params(), back.params());
        assert_eq!(net.widths(), back.widths());
        assert_eq!(net.activation(), back.activation());
        assert_eq!(back.seed(), Some(77));
    }

    struct ZeroMask;
    impl ScalarField for ZeroMask {
        fn jet(&self, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
            (0.0, vec![0.0; z.len()], vec![0.0; z.len() * z.len()])
        }
    }

    #[test]
    fn zero_mask_kills_output() {
        let net = Network::init(&[2, 5, 1], Activation::Tanh, 3).unwrap();
        let wrapped = wrap_hard_constraint(net, Constraint::MultiplicativeMask(Arc::new(ZeroMask)));
        for z in random_points(2, 10, 1) {
            assert_eq!(wrapped.eval(&z), vec![0.0]);
        }
    }
}
