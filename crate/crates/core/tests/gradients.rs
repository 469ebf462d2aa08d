//! Reverse-mode parameter gradients of every training objective checked
//! against the central-difference oracle on small instances.

use std::sync::Arc;

use pinnlab::autodiff::{fd_gradient_full, Objective};
use pinnlab::collocation::{build_slit_domain, CollocationSet};
use pinnlab::losses::{AdPinnObjective, LossWeights};
use pinnlab::models::navier_stokes::{ns_generate_data, NsInverseForm, NsInverseObjective};
use pinnlab::models::poisson::{
    assemble_poisson_slit, DirichletZeroResidual, PoissonAdResidual, PoissonDiscreteForm,
    PoissonFdObjective, RowWeighting, SlitMask,
};
use pinnlab::models::schrodinger::{SchrodingerFdObjective, SchrodingerForm, SechAnchor, TimeScale};
use pinnlab::network::{Constraint, Network};
use pinnlab::Activation;

/// Glorot init sets biases exactly to zero; grids containing the origin then
/// put ReLU pre-activations exactly on the kink, where the loss is genuinely
/// nondifferentiable in θ. A small deterministic jitter moves to generic θ.
fn jitter(net: &mut Network, seed: u64) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    for p in net.params_mut() {
        *p += rng.random_range(-0.01..0.01);
    }
}

fn check_gradient(net: &Network, extra: &[f64], obj: &dyn Objective, step: f64, tol: f64) {
    let (_, grad) = obj.loss_and_gradient(net, extra).unwrap();
    let fd = fd_gradient_full(net, extra, obj, step).unwrap();
    assert_eq!(grad.len(), fd.len());
    let mut worst = 0.0f64;
    for (i, (a, b)) in grad.iter().zip(&fd).enumerate() {
        if a.abs() > 1e-8 {
            let rel = ((a - b) / a).abs();
            assert!(rel <= tol, "component {i}: reverse {a} vs fd {b} (rel {rel})");
            worst = worst.max(rel);
        } else {
            assert!(b.abs() <= 1e-6, "component {i}: reverse ~0 but fd {b}");
        }
    }
    // determinism: second call is bit-identical
    let (_, grad2) = obj.loss_and_gradient(net, extra).unwrap();
    assert_eq!(grad, grad2);
}

#[test]
fn adpinn_poisson_gradient_tanh() {
    let (_, _, colloc) = build_slit_domain(0.5).unwrap();
    let obj = AdPinnObjective {
        colloc,
        constraint: None,
        f_res: Arc::new(PoissonAdResidual),
        b_res: Arc::new(DirichletZeroResidual { c: 1 }),
        weights: LossWeights {
            alpha_b: 37.0,
            ..Default::default()
        },
    };
    let net = Network::init(&[2, 8, 6, 1], Activation::Tanh, 3).unwrap();
    check_gradient(&net, &[], &obj, 1e-5, 2e-5);
}

#[test]
fn adpinn_poisson_gradient_hard_mask() {
    let (_, _, colloc) = build_slit_domain(0.5).unwrap();
    let obj = AdPinnObjective {
        colloc,
        constraint: Some(Constraint::MultiplicativeMask(Arc::new(SlitMask))),
        f_res: Arc::new(PoissonAdResidual),
        b_res: Arc::new(DirichletZeroResidual { c: 1 }),
        weights: LossWeights::default(),
    };
    let net = Network::init(&[2, 7, 1], Activation::Tanh, 8).unwrap();
    check_gradient(&net, &[], &obj, 1e-5, 2e-5);
}

#[test]
fn adpinn_gradient_relu_first_order() {
    // first-order residual on a ReLU net (Example 3.2 style), data term on
    let colloc = CollocationSet::new(
        vec![vec![0.31], vec![0.57], vec![0.83]],
        vec![vec![0.0]],
        vec![(vec![0.4], vec![0.9])],
    );
    let obj = AdPinnObjective {
        colloc,
        constraint: None,
        f_res: Arc::new(pinnlab::witness::Example32Residual { a: 1.0 }),
        b_res: Arc::new(pinnlab::witness::Example32Boundary { u0: 0.5 }),
        weights: LossWeights::default(),
    };
    let net = Network::init(&[1, 9, 5, 1], Activation::ReLU, 5).unwrap();
    check_gradient(&net, &[], &obj, 1e-6, 5e-5);
}

#[test]
fn poisson_fd_gradient_with_mask() {
    let (grid, classes, _) = build_slit_domain(0.25).unwrap();
    let sys = assemble_poisson_slit(&grid, &classes);
    let form = PoissonDiscreteForm::new(&grid, &classes, sys, RowWeighting::Uniform);
    let obj = PoissonFdObjective::new(
        form,
        Some(Constraint::MultiplicativeMask(Arc::new(SlitMask))),
        LossWeights::default(),
    );
    let net = Network::init(&[2, 8, 8, 1], Activation::ReLU, 11).unwrap();
    check_gradient(&net, &[], &obj, 1e-6, 5e-5);
}

#[test]
fn schrodinger_fd_gradient_with_anchor() {
    let form = SchrodingerForm::new(6, 4);
    let obj = SchrodingerFdObjective::new(
        form,
        Some(Constraint::AdditiveAnchor {
            offset: Arc::new(SechAnchor),
            scale: Arc::new(TimeScale),
        }),
        LossWeights::default(),
    );
    let net = Network::init(&[2, 10, 6, 2], Activation::ReLU, 4).unwrap();
    check_gradient(&net, &[], &obj, 1e-6, 8e-5);
}

#[test]
fn ns_inverse_gradient_including_lambdas() {
    let traj = ns_generate_data(1.0, 0.1, 0.1, 3, 8, 8).unwrap();
    let form = NsInverseForm::new(traj.observations(), 0.0, 0.0, 1e-3).unwrap();
    let obj = NsInverseObjective::new(form, LossWeights::default());
    let net = Network::init(&[3, 9, 7, 2], Activation::ReLU, 17).unwrap();
    check_gradient(&net, &[0.5, 0.5], &obj, 1e-6, 1e-4);
}

#[test]
fn ns_inverse_gradient_tanh_smooth() {
    // tanh makes the finite-difference comparison cleaner (no kink risk)
    let traj = ns_generate_data(1.0, 0.1, 0.1, 2, 8, 8).unwrap();
    let form = NsInverseForm::new(traj.observations(), 0.0, 0.0, 1e-3).unwrap();
    let obj = NsInverseObjective::new(form, LossWeights::default());
    let net = Network::init(&[3, 8, 2], Activation::Tanh, 23).unwrap();
    check_gradient(&net, &[0.7, 0.2], &obj, 1e-5, 2e-5);
}
