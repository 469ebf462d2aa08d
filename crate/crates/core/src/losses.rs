//! The discrete loss functionals, decomposed into PDE/boundary/data terms:
//! the AD-PINN loss (residual forms applied to exact network jets), the
//! FD-PINN loss (discrete residual forms applied to network values on the
//! grid), the plain finite-difference loss on raw grid vectors, and the ridge
//! penalty.
//!
//! Summation order is fixed (point-index ascending) so identical inputs give
//! bit-identical sums.

use crate::autodiff::{eval_field, eval_values, FieldEval, JetView};
use crate::collocation::CollocationSet;
use crate::error::{Error, Result};
use crate::network::{ConstrainedNetwork, Network};
use serde::{Deserialize, Serialize};

/// Term weights of the loss functionals: α_F, α_B, α_D, the norm exponent ν,
/// and the ridge pair (α_θ, q).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha_f: f64,
    pub alpha_b: f64,
    pub alpha_d: f64,
    pub nu: u8,
    pub alpha_theta: f64,
    pub q: u8,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            alpha_f: 1.0,
            alpha_b: 1.0,
            alpha_d: 1.0,
            nu: 2,
            alpha_theta: 0.0,
            q: 2,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.alpha_f < 0.0 || self.alpha_b < 0.0 || self.alpha_d < 0.0 || self.alpha_theta < 0.0
        {
            return Err(Error::Config("loss weights must be nonnegative".into()));
        }
        if self.nu != 1 && self.nu != 2 {
            return Err(Error::Config("norm exponent nu must be 1 or 2".into()));
        }
        Ok(())
    }

    /// |r|_ν^ν over the components of one residual vector.
    #[inline]
    pub fn pow_nu(&self, r: &[f64]) -> f64 {
        match self.nu {
            1 => r.iter().map(|v| v.abs()).sum(),
            _ => r.iter().map(|v| v * v).sum(),
        }
    }
}

/// A loss value with its separable terms. `total` is always the sum of the
/// four term fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub total: f64,
    pub pde_term: f64,
    pub boundary_term: f64,
    pub data_term: f64,
    pub ridge_term: f64,
}

impl LossBreakdown {
    pub fn new(pde: f64, boundary: f64, data: f64, ridge: f64) -> Self {
        LossBreakdown {
            total: pde + boundary + data + ridge,
            pde_term: pde,
            boundary_term: boundary,
            data_term: data,
            ridge_term: ridge,
        }
    }

    pub fn pde_only(pde: f64) -> Self {
        LossBreakdown::new(pde, 0.0, 0.0, 0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// Evaluation interface shared by plain and hard-constrained networks.
pub trait PinnFunction: Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Values at `n` points (point-major buffer), point-major output.
    fn eval_many(&self, points: &[f64], n: usize) -> Result<Vec<f64>>;
    /// Second-order jets at `n` points.
    fn jet_field(&self, points: &[f64], n: usize) -> Result<FieldEval>;
}

impl PinnFunction for Network {
    fn input_dim(&self) -> usize {
        Network::input_dim(self)
    }
    fn output_dim(&self) -> usize {
        Network::output_dim(self)
    }
    fn eval_many(&self, points: &[f64], n: usize) -> Result<Vec<f64>> {
        eval_values(self, None, points, n)
    }
    fn jet_field(&self, points: &[f64], n: usize) -> Result<FieldEval> {
        eval_field(self, None, points, n, true)
    }
}

impl PinnFunction for ConstrainedNetwork {
    fn input_dim(&self) -> usize {
        self.base.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.base.output_dim()
    }
    fn eval_many(&self, points: &[f64], n: usize) -> Result<Vec<f64>> {
        eval_values(&self.base, Some(&self.constraint), points, n)
    }
    fn jet_field(&self, points: &[f64], n: usize) -> Result<FieldEval> {
        eval_field(&self.base, Some(&self.constraint), points, n, true)
    }
}

/// A pointwise residual form F̂(z, {D^β u(z)}) of derivative order ≤ 2.
pub trait AdResidual: Send + Sync {
    /// Highest input-derivative order the form reads (0, 1 or 2). Order-0
    /// forms are evaluated from plain values, so ReLU kinks cannot trip them.
    fn order(&self) -> usize;
    /// Number of residual components c_F.
    fn n_res(&self) -> usize;
    fn eval(&self, z: &[f64], jet: &JetView, out: &mut [f64]);
    /// Accumulate ∂(Σ scale_r · residual_r)/∂(jet) into `jet_bar`.
    /// Default for forms that are never trained through.
    fn adjoint(&self, z: &[f64], jet: &JetView, scale: &[f64], jet_bar: &mut crate::autodiff::JetAdjoint) {
        let _ = (z, jet, scale, jet_bar);
        unimplemented!("adjoint not implemented for this residual form")
    }
}

fn value_only_field(f: &dyn PinnFunction, points: &[f64], n: usize) -> Result<Vec<f64>> {
    f.eval_many(points, n)
}

fn flatten(points: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::with_capacity(points.len() * points.first().map_or(0, |p| p.len()));
    for p in points {
        out.extend_from_slice(p);
    }
    out
}

/// AD-PINN loss: quadrature-weighted residual norms over the collocation
/// sets, with data misfit. Jets are requested only to the order each form
/// needs (order-0 boundary operators never touch derivatives).
pub fn adpinn_loss(
    f: &dyn PinnFunction,
    colloc: &CollocationSet,
    f_res: &dyn AdResidual,
    b_res: &dyn AdResidual,
    w: &LossWeights,
) -> Result<LossBreakdown> {
    w.validate()?;
    let c = f.output_dim();

    let pde_term = residual_term(
        f,
        &colloc.interior,
        &colloc.w_interior,
        f_res,
        w,
        w.alpha_f,
    )?;
    let boundary_term = residual_term(
        f,
        &colloc.boundary,
        &colloc.w_boundary,
        b_res,
        w,
        w.alpha_b,
    )?;

    let mut data_term = 0.0;
    if w.alpha_d > 0.0 && !colloc.data.is_empty() {
        let pts: Vec<Vec<f64>> = colloc.data.iter().map(|(p, _)| p.clone()).collect();
        let flat = flatten(&pts);
        let vals = value_only_field(f, &flat, pts.len())?;
        let mut diff = vec![0.0; c];
        for (idx, (_, target)) in colloc.data.iter().enumerate() {
            for k in 0..c {
                diff[k] = vals[idx * c + k] - target[k];
            }
            data_term += w.alpha_d * colloc.w_data[idx] * w.pow_nu(&diff);
        }
    }

    let out = LossBreakdown::new(pde_term, boundary_term, data_term, 0.0);
    if !out.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

fn residual_term(
    f: &dyn PinnFunction,
    points: &[Vec<f64>],
    weights: &[f64],
    form: &dyn AdResidual,
    w: &LossWeights,
    alpha: f64,
) -> Result<f64> {
    if alpha == 0.0 || points.is_empty() {
        return Ok(0.0);
    }
    let flat = flatten(points);
    let mut term = 0.0;
    let mut res = vec![0.0; form.n_res()];
    if form.order() == 0 {
        let c = f.output_dim();
        let vals = value_only_field(f, &flat, points.len())?;
        for (idx, z) in points.iter().enumerate() {
            let view = ValueView {
                data: &vals[idx * c..(idx + 1) * c],
                c,
            };
            form.eval(z, &view.as_jet_view(), &mut res);
            term += alpha * weights[idx] * w.pow_nu(&res);
        }
    } else {
        let field = f.jet_field(&flat, points.len())?;
        for (idx, z) in points.iter().enumerate() {
            let view = JetView::new(&field, idx);
            form.eval(z, &view, &mut res);
            term += alpha * weights[idx] * w.pow_nu(&res);
        }
    }
    Ok(term)
}

/// Adapter presenting plain values as a value-only JetView.
struct ValueView<'a> {
    data: &'a [f64],
    c: usize,
}

impl<'a> ValueView<'a> {
    fn as_jet_view(&self) -> JetView<'a> {
        JetView::value_only(self.data, self.c)
    }
}

/// One row of a discrete residual group: quadrature weight and residual
/// components.
pub type DiscreteRow = (f64, Vec<f64>);

/// The three term groups a discrete form produces from sampled values.
#[derive(Debug, Clone, Default)]
pub struct DiscreteTerms {
    pub pde: Vec<DiscreteRow>,
    pub boundary: Vec<DiscreteRow>,
    /// Data rows hold the already-differenced u(z) − u*(z).
    pub data: Vec<DiscreteRow>,
}

/// A finite-difference residual form: stencils applied to values sampled on
/// a fixed point list. No input derivatives of the network are involved.
pub trait DiscreteForm: Sync {
    /// Points the function must be sampled at, in the fixed order the
    /// residual rows reference.
    fn sample_points(&self) -> &[Vec<f64>];
    fn n_components(&self) -> usize;
    /// Residual rows from the sampled values (point-major, c per point).
    fn residuals(&self, values: &[f64]) -> Result<DiscreteTerms>;
}

/// FD-PINN loss: the discrete functional evaluated on network samples at the
/// grid points. Works for any activation (values only).
pub fn fdpinn_loss(
    f: &dyn PinnFunction,
    form: &dyn DiscreteForm,
    w: &LossWeights,
) -> Result<LossBreakdown> {
    let points = form.sample_points();
    if f.output_dim() != form.n_components() {
        return Err(Error::DimensionMismatch(format!(
            "form expects {} components, network has {}",
            form.n_components(),
            f.output_dim()
        )));
    }
    let flat = flatten(points);
    let values = f.eval_many(&flat, points.len())?;
    fd_loss(&values, form, w)
}

/// Finite-difference loss on a raw grid value vector (point-major, matching
/// `form.sample_points()` with `n_components` values per point).
pub fn fd_loss(values: &[f64], form: &dyn DiscreteForm, w: &LossWeights) -> Result<LossBreakdown> {
    w.validate()?;
    let expected = form.sample_points().len() * form.n_components();
    if values.len() != expected {
        return Err(Error::DimensionMismatch(format!(
            "expected {} values, got {}",
            expected,
            values.len()
        )));
    }
    let terms = form.residuals(values)?;
    sum_terms(&terms, w)
}

/// Borrowed (network, optional constraint) pair as a PinnFunction.
pub struct NetView<'a> {
    pub net: &'a Network,
    pub constraint: Option<&'a crate::network::Constraint>,
}

impl PinnFunction for NetView<'_> {
    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }
    fn output_dim(&self) -> usize {
        self.net.output_dim()
    }
    fn eval_many(&self, points: &[f64], n: usize) -> Result<Vec<f64>> {
        eval_values(self.net, self.constraint, points, n)
    }
    fn jet_field(&self, points: &[f64], n: usize) -> Result<FieldEval> {
        eval_field(self.net, self.constraint, points, n, true)
    }
}

/// Sum the three discrete term groups into a breakdown.
pub fn sum_terms(terms: &DiscreteTerms, w: &LossWeights) -> Result<LossBreakdown> {
    let mut pde = 0.0;
    for (wt, r) in &terms.pde {
        pde += w.alpha_f * wt * w.pow_nu(r);
    }
    let mut boundary = 0.0;
    for (wt, r) in &terms.boundary {
        boundary += w.alpha_b * wt * w.pow_nu(r);
    }
    let mut data = 0.0;
    for (wt, r) in &terms.data {
        data += w.alpha_d * wt * w.pow_nu(r);
    }
    let out = LossBreakdown::new(pde, boundary, data, 0.0);
    if !out.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(out)
}

/// Full-batch AD-PINN training objective: exact parameter gradients of the
/// collocation loss via reverse accumulation over the jet-valued forward
/// pass.
pub struct AdPinnObjective {
    pub colloc: CollocationSet,
    pub constraint: Option<crate::network::Constraint>,
    pub f_res: std::sync::Arc<dyn AdResidual>,
    pub b_res: std::sync::Arc<dyn AdResidual>,
    pub weights: LossWeights,
}

impl crate::autodiff::Objective for AdPinnObjective {
    fn loss(&self, net: &Network, _extra: &[f64]) -> Result<LossBreakdown> {
        let view = NetView {
            net,
            constraint: self.constraint.as_ref(),
        };
        adpinn_loss(
            &view,
            &self.colloc,
            self.f_res.as_ref(),
            self.b_res.as_ref(),
            &self.weights,
        )
    }

    fn loss_and_gradient(&self, net: &Network, _extra: &[f64]) -> Result<(LossBreakdown, Vec<f64>)> {
        let w = &self.weights;
        w.validate()?;
        let mut grad = vec![0.0; net.param_count()];
        let pde_term = self.term_gradient(
            net,
            &self.colloc.interior,
            &self.colloc.w_interior,
            self.f_res.as_ref(),
            w.alpha_f,
            &mut grad,
        )?;
        let boundary_term = self.term_gradient(
            net,
            &self.colloc.boundary,
            &self.colloc.w_boundary,
            self.b_res.as_ref(),
            w.alpha_b,
            &mut grad,
        )?;

        let mut data_term = 0.0;
        if w.alpha_d > 0.0 && !self.colloc.data.is_empty() {
            let c = net.output_dim();
            let flat: Vec<f64> = self
                .colloc
                .data
                .iter()
                .flat_map(|(p, _)| p.iter().cloned())
                .collect();
            let n = self.colloc.data.len();
            let field = eval_field(net, self.constraint.as_ref(), &flat, n, false)?;
            let mut adjoint = vec![0.0; field.out.len()];
            for (idx, (_, target)) in self.colloc.data.iter().enumerate() {
                let scale = w.alpha_d * self.colloc.w_data[idx];
                let mut ja = crate::autodiff::JetAdjoint::new(&field, &mut adjoint, idx);
                for k in 0..c {
                    let diff = field.value(idx, k) - target[k];
                    data_term += scale
                        * match w.nu {
                            1 => diff.abs(),
                            _ => diff * diff,
                        };
                    ja.add_value(
                        k,
                        scale
                            * match w.nu {
                                1 => diff.signum(),
                                _ => 2.0 * diff,
                            },
                    );
                }
            }
            crate::autodiff::batch::backprop_field(
                net,
                self.constraint.as_ref(),
                &flat,
                &field,
                &adjoint,
                &mut grad,
            );
        }

        let out = LossBreakdown::new(pde_term, boundary_term, data_term, 0.0);
        if !out.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok((out, grad))
    }
}

impl AdPinnObjective {
    fn term_gradient(
        &self,
        net: &Network,
        points: &[Vec<f64>],
        weights: &[f64],
        form: &dyn AdResidual,
        alpha: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        let w = &self.weights;
        if alpha == 0.0 || points.is_empty() {
            return Ok(0.0);
        }
        let flat: Vec<f64> = points.iter().flat_map(|p| p.iter().cloned()).collect();
        let n = points.len();
        let jet = form.order() >= 1;
        let field = eval_field(net, self.constraint.as_ref(), &flat, n, jet)?;
        let mut adjoint = vec![0.0; field.out.len()];
        let mut term = 0.0;
        let mut res = vec![0.0; form.n_res()];
        let mut scales = vec![0.0; form.n_res()];
        for (idx, z) in points.iter().enumerate() {
            let view = JetView::new(&field, idx);
            form.eval(z, &view, &mut res);
            let a = alpha * weights[idx];
            term += a * w.pow_nu(&res);
            for (s, r) in scales.iter_mut().zip(&res) {
                *s = a * match w.nu {
                    1 => r.signum(),
                    _ => 2.0 * r,
                };
            }
            let mut ja = crate::autodiff::JetAdjoint::new(&field, &mut adjoint, idx);
            form.adjoint(z, &view, &scales, &mut ja);
        }
        crate::autodiff::batch::backprop_field(
            net,
            self.constraint.as_ref(),
            &flat,
            &field,
            &adjoint,
            grad,
        );
        Ok(term)
    }
}

/// Ridge penalty α_θ · |θ|_q for q ∈ {1, 2}.
pub fn ridge_penalty(theta: &[f64], w: &LossWeights) -> Result<f64> {
    match w.q {
        1 => Ok(w.alpha_theta * theta.iter().map(|t| t.abs()).sum::<f64>()),
        2 => Ok(w.alpha_theta * theta.iter().map(|t| t * t).sum::<f64>().sqrt()),
        q => Err(Error::UnsupportedExponent(q)),
    }
}

/// Gradient of the ridge penalty (subgradient 0 at θ = 0 for q = 2 and at
/// components exactly 0 for q = 1).
pub fn ridge_gradient(theta: &[f64], w: &LossWeights) -> Result<Vec<f64>> {
    match w.q {
        1 => Ok(theta
            .iter()
            .map(|t| w.alpha_theta * t.signum() * (*t != 0.0) as u8 as f64)
            .collect()),
        2 => {
            let norm = theta.iter().map(|t| t * t).sum::<f64>().sqrt();
            if norm == 0.0 {
                Ok(vec![0.0; theta.len()])
            } else {
                Ok(theta.iter().map(|t| w.alpha_theta * t / norm).collect())
            }
        }
        q => Err(Error::UnsupportedExponent(q)),
    }
}
