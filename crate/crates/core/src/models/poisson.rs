//! Slit-domain Poisson problem −Δu = 1, u = 0 on Γ: sparse 5-point system
//! with Dirichlet elimination, conjugate-gradient reference solver, residual
//! forms for both loss flavors, and the hard boundary mask.

use crate::autodiff::{JetAdjoint, JetView};
use crate::collocation::{SlitClass, StructuredGrid};
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, LinearOperator};
use crate::losses::{AdResidual, DiscreteForm, DiscreteRow, DiscreteTerms};
use crate::network::ScalarField;

/// One interior equation: sparse couplings to interior unknowns plus the
/// right-hand side with eliminated Dirichlet data folded in.
#[derive(Debug, Clone)]
pub struct SparseRow {
    pub entries: Vec<(usize, f64)>,
    pub rhs: f64,
}

/// The eliminated system A u^h = b over interior nodes.
#[derive(Debug, Clone)]
pub struct DiscreteSystem {
    pub rows: Vec<SparseRow>,
    /// grid linear node index (x-fastest) → equation index
    pub node_to_eq: Vec<Option<usize>>,
    /// equation index → grid linear node index
    pub eq_to_node: Vec<usize>,
}

impl DiscreteSystem {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// Residual A u − b for an interior value vector.
    pub fn residual(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| {
                let mut acc = 0.0;
                for &(j, a) in &row.entries {
                    acc += a * u[j];
                }
                acc - row.rhs
            })
            .collect()
    }
}

impl LinearOperator for DiscreteSystem {
    fn dim(&self) -> usize {
        self.rows.len()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc = 0.0;
            for &(j, a) in &row.entries {
                acc += a * x[j];
            }
            out[i] = acc;
        }
    }
}

/// 5-point Laplacian rows over interior nodes; Dirichlet neighbors (outer
/// ring and slit, value 0) are eliminated into the right-hand side; rhs = 1.
pub fn assemble_poisson_slit(grid: &StructuredGrid, classes: &[SlitClass]) -> DiscreteSystem {
    let nx = grid.shape[0];
    let ny = grid.shape[1];
    let h = grid.spacing[0];
    let inv_h2 = 1.0 / (h * h);

    let mut node_to_eq = vec![None; nx * ny];
    let mut eq_to_node = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let node = j * nx + i;
            if classes[node] == SlitClass::Interior {
                node_to_eq[node] = Some(eq_to_node.len());
                eq_to_node.push(node);
            }
        }
    }

    let mut rows = Vec::with_capacity(eq_to_node.len());
    for &node in &eq_to_node {
        let (i, j) = (node % nx, node / nx);
        let mut entries = vec![(node_to_eq[node].unwrap(), 4.0 * inv_h2)];
        let rhs = 1.0; // Dirichlet value 0 contributes nothing
        for (ni, nj) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
            let nnode = nj * nx + ni;
            if let Some(eq) = node_to_eq[nnode] {
                entries.push((eq, -inv_h2));
            }
        }
        rows.push(SparseRow { entries, rhs });
    }
    DiscreteSystem {
        rows,
        node_to_eq,
        eq_to_node,
    }
}

pub struct PoissonSolution {
    /// Values at interior nodes, equation order.
    pub u_interior: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Conjugate-gradient solve of the eliminated SPD system to relative
/// residual ≤ `tol`.
pub fn solve_poisson_fdm(system: &DiscreteSystem, tol: f64) -> Result<PoissonSolution> {
    let rhs: Vec<f64> = system.rows.iter().map(|r| r.rhs).collect();
    let (u, iterations, relative_residual) =
        conjugate_gradient(system, &rhs, tol, 20 * system.n().max(50), None)?;
    Ok(PoissonSolution {
        u_interior: u,
        iterations,
        relative_residual,
    })
}

/// Scatter interior values to the full grid (boundary nodes 0).
pub fn scatter_to_grid(system: &DiscreteSystem, u_interior: &[f64], n_nodes: usize) -> Vec<f64> {
    let mut full = vec![0.0; n_nodes];
    for (eq, &node) in system.eq_to_node.iter().enumerate() {
        full[node] = u_interior[eq];
    }
    full
}

/// AD interior residual −Δu − 1 = −(u_xx + u_yy) − 1.
pub struct PoissonAdResidual;

impl AdResidual for PoissonAdResidual {
    fn order(&self) -> usize {
        2
    }
    fn n_res(&self) -> usize {
        1
    }
    fn eval(&self, _z: &[f64], jet: &JetView, out: &mut [f64]) {
        out[0] = -(jet.hess(0, 0, 0) + jet.hess(0, 1, 1)) - 1.0;
    }
    fn adjoint(&self, _z: &[f64], _jet: &JetView, scale: &[f64], jet_bar: &mut JetAdjoint) {
        jet_bar.add_hess(0, 0, 0, -scale[0]);
        jet_bar.add_hess(0, 1, 1, -scale[0]);
    }
}

/// Order-0 boundary residual u(z) − 0, one component per output.
pub struct DirichletZeroResidual {
    pub c: usize,
}

impl AdResidual for DirichletZeroResidual {
    fn order(&self) -> usize {
        0
    }
    fn n_res(&self) -> usize {
        self.c
    }
    fn eval(&self, _z: &[f64], jet: &JetView, out: &mut [f64]) {
        for k in 0..self.c {
            out[k] = jet.value(k);
        }
    }
    fn adjoint(&self, _z: &[f64], _jet: &JetView, scale: &[f64], jet_bar: &mut JetAdjoint) {
        for k in 0..self.c {
            jet_bar.add_value(k, scale[k]);
        }
    }
}

/// Pointwise AD residual of the Poisson interior operator.
pub fn poisson_residual_ad(jet: &crate::autodiff::Jet2) -> f64 {
    -(jet.hess_at(0, 0, 0) + jet.hess_at(0, 1, 1)) - 1.0
}

/// Row weighting of the FD-PINN Poisson term: uniform 1/N rows, or the h²
/// scaling used in the reference training setup.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowWeighting {
    Uniform,
    MeshSquared(f64),
}

/// Discrete residual form |A u_θ − b| over interior rows plus Dirichlet value
/// rows on the boundary nodes.
pub struct PoissonDiscreteForm {
    system: DiscreteSystem,
    points: Vec<Vec<f64>>,
    /// sample index of each interior equation (prefix of `points`)
    n_interior: usize,
    pde_weights: Vec<f64>,
    boundary_weight: f64,
}

impl PoissonDiscreteForm {
    pub fn new(
        grid: &StructuredGrid,
        classes: &[SlitClass],
        system: DiscreteSystem,
        weighting: RowWeighting,
    ) -> Self {
        let nx = grid.shape[0];
        let mut points = Vec::new();
        for &node in &system.eq_to_node {
            let (i, j) = (node % nx, node / nx);
            points.push(grid.point(&[i, j]));
        }
        let n_interior = points.len();
        for (node, class) in classes.iter().enumerate() {
            if *class != SlitClass::Interior {
                let (i, j) = (node % nx, node / nx);
                points.push(grid.point(&[i, j]));
            }
        }
        let n_boundary = points.len() - n_interior;
        let w = match weighting {
            RowWeighting::Uniform => 1.0 / n_interior as f64,
            RowWeighting::MeshSquared(h) => h * h,
        };
        PoissonDiscreteForm {
            system,
            points,
            n_interior,
            pde_weights: vec![w; n_interior],
            boundary_weight: if n_boundary == 0 {
                0.0
            } else {
                1.0 / n_boundary as f64
            },
        }
    }

    pub fn system(&self) -> &DiscreteSystem {
        &self.system
    }

    pub fn n_interior(&self) -> usize {
        self.n_interior
    }

    /// Adjoint of the loss with respect to sampled values: the PDE rows route
    /// back through Aᵀ, plus the boundary value rows.
    pub fn value_adjoint(&self, values: &[f64], w: &crate::losses::LossWeights, vbar: &mut [f64]) {
        let u = &values[..self.n_interior];
        for (i, row) in self.system.rows.iter().enumerate() {
            let mut r = -row.rhs;
            for &(j, a) in &row.entries {
                r += a * u[j];
            }
            let s = w.alpha_f
                * self.pde_weights[i]
                * match w.nu {
                    1 => r.signum(),
                    _ => 2.0 * r,
                };
            for &(j, a) in &row.entries {
                vbar[j] += s * a;
            }
        }
        for b in self.n_interior..self.points.len() {
            let v = values[b];
            vbar[b] += w.alpha_b
                * self.boundary_weight
                * match w.nu {
                    1 => v.signum(),
                    _ => 2.0 * v,
                };
        }
    }
}

impl DiscreteForm for PoissonDiscreteForm {
    fn sample_points(&self) -> &[Vec<f64>] {
        &self.points
    }
    fn n_components(&self) -> usize {
        1
    }
    fn residuals(&self, values: &[f64]) -> Result<DiscreteTerms> {
        let u = &values[..self.n_interior];
        let mut pde: Vec<DiscreteRow> = Vec::with_capacity(self.system.n());
        for (i, row) in self.system.rows.iter().enumerate() {
            let mut r = -row.rhs;
            for &(j, a) in &row.entries {
                if j >= self.n_interior {
                    return Err(Error::StencilOutOfRange);
                }
                r += a * u[j];
            }
            pde.push((self.pde_weights[i], vec![r]));
        }
        let boundary: Vec<DiscreteRow> = (self.n_interior..self.points.len())
            .map(|b| (self.boundary_weight, vec![values[b]]))
            .collect();
        Ok(DiscreteTerms {
            pde,
            boundary,
            data: Vec::new(),
        })
    }
}

/// FD-PINN training objective for the Poisson system: loss and exact
/// gradient of the discrete functional on network grid samples.
pub struct PoissonFdObjective {
    pub form: PoissonDiscreteForm,
    pub constraint: Option<crate::network::Constraint>,
    pub weights: crate::losses::LossWeights,
    flat_points: Vec<f64>,
}

impl PoissonFdObjective {
    pub fn new(
        form: PoissonDiscreteForm,
        constraint: Option<crate::network::Constraint>,
        weights: crate::losses::LossWeights,
    ) -> Self {
        let flat_points = form
            .sample_points()
            .iter()
            .flat_map(|p| p.iter().cloned())
            .collect();
        PoissonFdObjective {
            form,
            constraint,
            weights,
        flat_points,
        }
    }
}

impl crate::autodiff::Objective for PoissonFdObjective {
    fn loss(
        &self,
        net: &crate::network::Network,
        _extra: &[f64],
    ) -> Result<crate::losses::LossBreakdown> {
        let n = self.form.sample_points().len();
        let values =
            crate::autodiff::eval_values(net, self.constraint.as_ref(), &self.flat_points, n)?;
        crate::losses::fd_loss(&values, &self.form, &self.weights)
    }

    fn loss_and_gradient(
        &self,
        net: &crate::network::Network,
        _extra: &[f64],
    ) -> Result<(crate::losses::LossBreakdown, Vec<f64>)> {
        let n = self.form.sample_points().len();
        let field = crate::autodiff::eval_field(
            net,
            self.constraint.as_ref(),
            &self.flat_points,
            n,
            false,
        )?;
        let values: Vec<f64> = (0..n).map(|p| field.value(p, 0)).collect();
        let loss = crate::losses::fd_loss(&values, &self.form, &self.weights)?;
        let mut vbar = vec![0.0; n];
        self.form.value_adjoint(&values, &self.weights, &mut vbar);
        let mut grad = vec![0.0; net.param_count()];
        crate::autodiff::batch::backprop_field(
            net,
            self.constraint.as_ref(),
            &self.flat_points,
            &field,
            &vbar,
            &mut grad,
        );
        Ok((loss, grad))
    }
}

/// Hard boundary mask for the slit domain:
/// m(x, y) = (1 − x²)(1 − y²) · ρ(x, y), with ρ the Euclidean distance to the
/// segment [0,1] × {0}. Vanishes exactly on the outer boundary and the slit.
/// ρ is C¹ but not C² across the vertical lines through the slit endpoints;
/// jets there take the segment-side branch.
pub struct SlitMask;

impl ScalarField for SlitMask {
    fn jet(&self, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let (x, y) = (z[0], z[1]);
        let p = (1.0 - x * x) * (1.0 - y * y);
        let pg = [-2.0 * x * (1.0 - y * y), -2.0 * y * (1.0 - x * x)];
        let ph = [
            -2.0 * (1.0 - y * y),
            4.0 * x * y,
            4.0 * x * y,
            -2.0 * (1.0 - x * x),
        ];
        let (r, rg, rh) = segment_distance_jet(x, y);
        let value = p * r;
        let grad = vec![p * rg[0] + r * pg[0], p * rg[1] + r * pg[1]];
        let mut hess = vec![0.0; 4];
        for i in 0..2 {
            for j in 0..2 {
                hess[i * 2 + j] =
                    p * rh[i * 2 + j] + pg[i] * rg[j] + pg[j] * rg[i] + r * ph[i * 2 + j];
            }
        }
        (value, grad, hess)
    }
}

/// Jet of the distance to the segment [0,1]×{0}.
fn segment_distance_jet(x: f64, y: f64) -> (f64, [f64; 2], [f64; 4]) {
    if (0.0..=1.0).contains(&x) {
        // nearest point is (x, 0): distance |y|
        let s = if y >= 0.0 { 1.0 } else { -1.0 };
        (y.abs(), [0.0, s], [0.0; 4])
    } else {
        let cx = if x < 0.0 { 0.0 } else { 1.0 };
        let dx = x - cx;
        let r = (dx * dx + y * y).sqrt();
        if r == 0.0 {
            return (0.0, [0.0, 0.0], [0.0; 4]);
        }
        let g = [dx / r, y / r];
        let r3 = r * r * r;
        let h = [y * y / r3, -dx * y / r3, -dx * y / r3, dx * dx / r3];
        (r, g, h)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::build_slit_domain;
    use crate::losses::{fd_loss, fdpinn_loss, LossWeights};
    use crate::network::Network;
    use crate::Activation;

    #[test]
    fn interior_stencil_coefficients() {
        let (grid, classes, _) = build_slit_domain(0.5).unwrap();
        let sys = assemble_poisson_slit(&grid, &classes);
        let inv_h2 = 1.0 / 0.25;
        for row in &sys.rows {
            assert!(row.entries.len() <= 5);
            assert_eq!(row.entries[0].1, 4.0 * inv_h2);
            for &(_, a) in &row.entries[1..] {
                assert_eq!(a, -inv_h2);
            }
            assert_eq!(row.rhs, 1.0);
        }
        // symmetry of interior-interior couplings
        let n = sys.n();
        let mut dense = vec![0.0; n * n];
        for (i, row) in sys.rows.iter().enumerate() {
            for &(j, a) in &row.entries {
                dense[i * n + j] += a;
            }
        }
        for i in 0..n {
            for j in 0..n {
                assert_eq!(dense[i * n + j], dense[j * n + i]);
            }
        }
    }

    #[test]
    fn sparse_solve_matches_dense_oracle() {
        let (grid, classes, _) = build_slit_domain(0.5).unwrap();
        let sys = assemble_poisson_slit(&grid, &classes);
        let sol = solve_poisson_fdm(&sys, 1e-13).unwrap();
        let n = sys.n();
        let mut dense = vec![0.0; n * n];
        let mut rhs = vec![0.0; n];
        for (i, row) in sys.rows.iter().enumerate() {
            rhs[i] = row.rhs;
            for &(j, a) in &row.entries {
                dense[i * n + j] += a;
            }
        }
        let oracle = crate::linalg::solve_dense_refined(&dense, n, &[rhs]);
        for (a, b) in sol.u_interior.iter().zip(&oracle.solutions[0]) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_rhs_gives_zero_solution() {
        let (grid, classes, _) = build_slit_domain(0.25).unwrap();
        let mut sys = assemble_poisson_slit(&grid, &classes);
        for row in &mut sys.rows {
            row.rhs = 0.0;
        }
        let sol = solve_poisson_fdm(&sys, 1e-12).unwrap();
        assert!(sol.u_interior.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn one_dimensional_analogue_is_exact() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0, 5 nodes: interior x = 1/4, 1/2, 3/4.
        // Quadratics have zero truncation error, so the discrete solution
        // equals x(1-x)/2 at the nodes.
        let h = 0.25;
        let inv_h2 = 1.0 / (h * h);
        let rows = vec![
            SparseRow {
                entries: vec![(0, 2.0 * inv_h2), (1, -inv_h2)],
                rhs: 1.0,
            },
            SparseRow {
                entries: vec![(1, 2.0 * inv_h2), (0, -inv_h2), (2, -inv_h2)],
                rhs: 1.0,
            },
            SparseRow {
                entries: vec![(2, 2.0 * inv_h2), (1, -inv_h2)],
                rhs: 1.0,
            },
        ];
        let sys = DiscreteSystem {
            rows,
            node_to_eq: vec![None, Some(0), Some(1), Some(2), None],
            eq_to_node: vec![1, 2, 3],
        };
        let sol = solve_poisson_fdm(&sys, 1e-14).unwrap();
        for (k, &x) in [0.25, 0.5, 0.75].iter().enumerate() {
            let exact = x * (1.0 - x) / 2.0;
            assert!((sol.u_interior[k] - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn slit_solution_symmetric_under_y_reflection() {
        let (grid, classes, _) = build_slit_domain(0.1).unwrap();
        let sys = assemble_poisson_slit(&grid, &classes);
        let sol = solve_poisson_fdm(&sys, 1e-12).unwrap();
        let nx = grid.shape[0];
        let n = grid.shape[0] * grid.shape[1];
        let full = scatter_to_grid(&sys, &sol.u_interior, n);
        let max = full.iter().cloned().fold(0.0f64, f64::max);
        assert!(max > 0.0);
        // y ↦ −y maps the slit domain to itself, so u(x,y) = u(x,−y)
        let ny = grid.shape[1];
        for j in 0..ny {
            for i in 0..nx {
                let jr = ny - 1 - j;
                let a = full[j * nx + i];
                let b = full[jr * nx + i];
                assert!((a - b).abs() <= 1e-9 * (1.0 + max), "asymmetry at ({i},{j})");
            }
        }
    }

    #[test]
    fn fdpinn_loss_of_zero_network_is_one() {
        let (grid, classes, _) = build_slit_domain(0.2).unwrap();
        let sys = assemble_poisson_slit(&grid, &classes);
        let form = PoissonDiscreteForm::new(&grid, &classes, sys, RowWeighting::Uniform);
        // zero network: u ≡ 0 ⇒ every interior row residual is −1
        let net = Network::from_layers(
            vec![2, 1, 1],
            Activation::ReLU,
            vec![(vec![0.0, 0.0], vec![0.0]), (vec![0.0], vec![0.0])],
        )
        .unwrap();
        let out = fdpinn_loss(&net, &form, &LossWeights::default()).unwrap();
        assert!((out.pde_term - 1.0).abs() < 1e-14);
        assert_eq!(out.boundary_term, 0.0);
    }

    #[test]
    fn fd_loss_at_exact_solution_is_tiny() {
        let (grid, classes, _) = build_slit_domain(0.25).unwrap();
        let sys = assemble_poisson_slit(&grid, &classes);
        let sol = solve_poisson_fdm(&sys, 1e-13).unwrap();
        let form = PoissonDiscreteForm::new(&grid, &classes, sys, RowWeighting::Uniform);
        let mut values = sol.u_interior.clone();
        values.extend(std::iter::repeat(0.0).take(form.sample_points().len() - values.len()));
        let out = fd_loss(&values, &form, &LossWeights::default()).unwrap();
        assert!(out.pde_term <= 1e-20, "pde term {}", out.pde_term);
        assert_eq!(out.boundary_term, 0.0);
    }

    #[test]
    fn relu_network_accepted_by_fd_loss() {
        let (grid, classes, _) = build_slit_domain(0.5).unwrap();
        let sys = assemble_poisson_slit(&grid, &classes);
        let form = PoissonDiscreteForm::new(&grid, &classes, sys, RowWeighting::Uniform);
        let net = Network::init(&[2, 8, 8, 1], Activation::ReLU, 3).unwrap();
        assert!(fdpinn_loss(&net, &form, &LossWeights::default()).is_ok());
    }

    #[test]
    fn mask_vanishes_on_boundary_and_slit() {
        let (_, _, colloc) = build_slit_domain(0.1).unwrap();
        for p in &colloc.boundary {
            assert_eq!(SlitMask.value(p), 0.0, "mask nonzero at {p:?}");
        }
        for p in colloc.interior.iter().take(50) {
            assert!(SlitMask.value(p).abs() > 0.0);
        }
    }

    #[test]
    fn mask_jet_matches_finite_differences() {
        let pts = [
            [-0.45, 0.3],
            [0.3, 0.25],
            [0.5, -0.6],
            [1.2, 0.4], // beyond the right endpoint, exercises the far branch
            [-0.2, -0.07],
        ];
        for z in pts {
            let (v, g, h) = SlitMask.jet(&z);
            let f = |x: f64, y: f64| SlitMask.value(&[x, y]);
            let e = 1e-6;
            let gx = (f(z[0] + e, z[1]) - f(z[0] - e, z[1])) / (2.0 * e);
            let gy = (f(z[0], z[1] + e) - f(z[0], z[1] - e)) / (2.0 * e);
            assert!((g[0] - gx).abs() < 1e-7 * (1.0 + gx.abs()));
            assert!((g[1] - gy).abs() < 1e-7 * (1.0 + gy.abs()));
            let hxx = (f(z[0] + e, z[1]) - 2.0 * v + f(z[0] - e, z[1])) / (e * e);
            let hyy = (f(z[0], z[1] + e) - 2.0 * v + f(z[0], z[1] - e)) / (e * e);
            assert!(
                (h[0] - hxx).abs() < 1e-3 * (1.0 + hxx.abs()),
                "{} vs {hxx}",
                h[0]
            );
            assert!((h[3] - hyy).abs() < 1e-3 * (1.0 + hyy.abs()));
        }
    }
}
