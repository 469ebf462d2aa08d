//! Derivatives of network outputs: second-order forward jets with respect to
//! inputs, and exact reverse-mode gradients with respect to parameters of any
//! objective built from (jet-)evaluations at finitely many points.

pub mod batch;

use crate::error::{Error, Result};
use crate::network::{Constraint, Network};
pub use batch::{eval_field, packed_index, packed_len, FieldEval};

/// Value, input gradient and input Hessian of a network output at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    /// Output components (length c).
    pub value: Vec<f64>,
    /// c × d, row-major.
    pub grad: Vec<f64>,
    /// c × d × d, row-major; symmetric in the last two indices.
    pub hess: Vec<f64>,
    pub c: usize,
    pub d: usize,
}

impl Jet2 {
    pub fn grad_at(&self, k: usize, i: usize) -> f64 {
        self.grad[k * self.d + i]
    }
    pub fn hess_at(&self, k: usize, i: usize, j: usize) -> f64 {
        self.hess[(k * self.d + i) * self.d + j]
    }
}

/// Borrowed view of one point's jet in a [`FieldEval`] block.
#[derive(Clone, Copy)]
pub struct JetView<'a> {
    data: &'a [f64],
    pub d: usize,
    pub c: usize,
    pub jet: bool,
}

impl<'a> JetView<'a> {
    pub fn new(field: &'a FieldEval, p: usize) -> Self {
        JetView {
            data: field.block(p),
            d: field.d,
            c: field.c,
            jet: field.jet,
        }
    }

    /// Wrap plain values (length c) as an order-0 view; derivative accessors
    /// must not be called on it.
    pub fn value_only(data: &'a [f64], c: usize) -> Self {
        JetView {
            data,
            d: 0,
            c,
            jet: false,
        }
    }
    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        self.data[k]
    }
    #[inline]
    pub fn grad(&self, k: usize, i: usize) -> f64 {
        debug_assert!(self.jet);
        self.data[(1 + i) * self.c + k]
    }
    /// Hessian entry (i, j) in either index order.
    #[inline]
    pub fn hess(&self, k: usize, i: usize, j: usize) -> f64 {
        debug_assert!(self.jet);
        self.data[(1 + self.d + packed_index(self.d, i, j)) * self.c + k]
    }
}

/// Mutable view used by residual adjoints. `add_hess` accumulates into packed
/// symmetric storage: add once per Hessian read made by the forward residual,
/// in whichever index order it was read.
pub struct JetAdjoint<'a> {
    data: &'a mut [f64],
    pub d: usize,
    pub c: usize,
    pub jet: bool,
}

impl<'a> JetAdjoint<'a> {
    pub fn new(field: &FieldEval, adjoint: &'a mut [f64], p: usize) -> Self {
        let s = p * field.cpp * field.c;
        JetAdjoint {
            data: &mut adjoint[s..s + field.cpp * field.c],
            d: field.d,
            c: field.c,
            jet: field.jet,
        }
    }
    #[inline]
    pub fn add_value(&mut self, k: usize, v: f64) {
        self.data[k] += v;
    }
    #[inline]
    pub fn add_grad(&mut self, k: usize, i: usize, v: f64) {
        self.data[(1 + i) * self.c + k] += v;
    }
    #[inline]
    pub fn add_hess(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(1 + self.d + packed_index(self.d, i, j)) * self.c + k] += v;
    }
}

/// Exact value/gradient/Hessian of the network function at `z` by
/// second-order forward jet propagation through every layer.
///
/// Errors with `KinkAtPoint` if a ReLU pre-activation is exactly zero at `z`.
pub fn eval_jet2(net: &Network, z: &[f64]) -> Result<Jet2> {
    jet2_of(net, None, z)
}

/// Jet of a constrained network (product/sum rule against the wrapper jets).
pub fn eval_jet2_constrained(net: &crate::network::ConstrainedNetwork, z: &[f64]) -> Result<Jet2> {
    jet2_of(&net.base, Some(&net.constraint), z)
}

fn jet2_of(net: &Network, constraint: Option<&Constraint>, z: &[f64]) -> Result<Jet2> {
    let field = eval_field(net, constraint, z, 1, true)?;
    let view = JetView::new(&field, 0);
    let (c, d) = (field.c, field.d);
    let mut jet = Jet2 {
        value: vec![0.0; c],
        grad: vec![0.0; c * d],
        hess: vec![0.0; c * d * d],
        c,
        d,
    };
    for k in 0..c {
        jet.value[k] = view.value(k);
        for i in 0..d {
            jet.grad[k * d + i] = view.grad(k, i);
            for j in 0..d {
                jet.hess[(k * d + i) * d + j] = view.hess(k, i, j);
            }
        }
    }
    Ok(jet)
}

/// Convenience: plain values of a (possibly constrained) network at a point
/// list, point-major.
pub fn eval_values(
    net: &Network,
    constraint: Option<&Constraint>,
    points: &[f64],
    n_points: usize,
) -> Result<Vec<f64>> {
    let field = eval_field(net, constraint, points, n_points, false)?;
    let c = field.c;
    let mut out = vec![0.0; n_points * c];
    for p in 0..n_points {
        for k in 0..c {
            out[p * c + k] = field.value(p, k);
        }
    }
    Ok(out)
}

/// Objective value and exact gradient via reverse accumulation.
#[derive(Debug, Clone)]
pub struct ParameterGradient {
    pub objective_value: f64,
    /// Length M (+ extra trainable scalars, when the objective has them),
    /// flattened θ in layer-major order, weights before biases.
    pub grad: Vec<f64>,
}

/// A scalar function of the network (and optional extra trainable scalars)
/// built from evaluations at finitely many points.
pub trait Objective: Sync {
    fn n_extra(&self) -> usize {
        0
    }
    /// Loss without gradients.
    fn loss(&self, net: &Network, extra: &[f64]) -> Result<crate::losses::LossBreakdown>;
    /// Loss plus gradient over [net params | extra scalars].
    fn loss_and_gradient(
        &self,
        net: &Network,
        extra: &[f64],
    ) -> Result<(crate::losses::LossBreakdown, Vec<f64>)>;
}

/// Returns objective value and exact parameter gradient; deterministic given
/// identical inputs (fixed chunking and summation order throughout).
pub fn parameter_gradient(net: &Network, objective: &dyn Objective) -> Result<ParameterGradient> {
    let extra = vec![0.0; objective.n_extra()];
    let (loss, grad) = objective.loss_and_gradient(net, &extra)?;
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    Ok(ParameterGradient {
        objective_value: loss.total,
        grad,
    })
}

/// Central-difference gradient oracle: one objective evaluation pair per
/// parameter. Independent of the reverse-accumulation path it checks.
pub fn fd_gradient_oracle(net: &Network, objective: &dyn Objective, step: f64) -> Result<Vec<f64>> {
    assert!(step > 0.0, "step must be positive");
    let extra = vec![0.0; objective.n_extra()];
    let full = fd_gradient_full(net, &extra, objective, step)?;
    Ok(full[..net.param_count()].to_vec())
}

/// Central-difference gradient over [net params | extra scalars].
pub fn fd_gradient_full(
    net: &Network,
    extra: &[f64],
    objective: &dyn Objective,
    step: f64,
) -> Result<Vec<f64>> {
    assert!(step > 0.0, "step must be positive");
    let mut work = net.clone();
    let mut ex = extra.to_vec();
    let m = net.param_count();
    let mut grad = vec![0.0; m + ex.len()];
    for i in 0..m {
        let orig = net.params()[i];
        work.params_mut()[i] = orig + step;
        let up = objective.loss(&work, &ex)?.total;
        work.params_mut()[i] = orig - step;
        let down = objective.loss(&work, &ex)?.total;
        work.params_mut()[i] = orig;
        grad[i] = (up - down) / (2.0 * step);
    }
    for k in 0..extra.len() {
        let orig = extra[k];
        ex[k] = orig + step;
        let up = objective.loss(&work, &ex)?.total;
        ex[k] = orig - step;
        let down = objective.loss(&work, &ex)?.total;
        ex[k] = orig;
        grad[m + k] = (up - down) / (2.0 * step);
    }
    Ok(grad)
}
