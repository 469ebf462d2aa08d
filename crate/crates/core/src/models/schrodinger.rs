//! Nonlinear Schrödinger equation i·ψ_t + 0.5·ψ_xx + |ψ|²ψ = 0 on the
//! periodic space-time lattice: discrete residual (implicit Euler in time,
//! central in space, cubic nonlinearity at the new level), a stepwise
//! reference solver, the hard initial-condition anchor, and the FD-PINN loss
//! form.

use crate::collocation::{build_interval_grid, StructuredGrid};
use crate::error::{Error, Result};
use crate::losses::{DiscreteForm, DiscreteRow, DiscreteTerms};
use crate::network::{ScalarField, VectorField};

/// Real and imaginary parts of ψ at the N spatial unknowns x_0..x_{N-1}
/// (x_N is identified with x_0 by periodicity).
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ComplexField {
    pub fn len(&self) -> usize {
        self.re.len()
    }
    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }
    pub fn abs2(&self, j: usize) -> f64 {
        self.re[j] * self.re[j] + self.im[j] * self.im[j]
    }
}

/// Lattice parameters: h_t = 2π/T, h_x = 10/N.
#[derive(Debug, Clone, Copy)]
pub struct Lattice {
    pub n_space: usize,
    pub n_time: usize,
    pub h_t: f64,
    pub h_x: f64,
}

impl Lattice {
    pub fn new(n_space: usize, n_time: usize) -> Self {
        Lattice {
            n_space,
            n_time,
            h_t: 2.0 * std::f64::consts::PI / n_time as f64,
            h_x: 10.0 / n_space as f64,
        }
    }
    pub fn x(&self, j: usize) -> f64 {
        -5.0 + j as f64 * self.h_x
    }
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.h_t
    }
}

pub fn initial_condition(lat: &Lattice) -> ComplexField {
    let re = (0..lat.n_space).map(|j| 2.0 * sech(lat.x(j))).collect();
    ComplexField {
        re,
        im: vec![0.0; lat.n_space],
    }
}

pub fn sech(x: f64) -> f64 {
    1.0 / x.cosh()
}

/// Discrete residual f(t_k, x_j) split into real/imaginary parts:
/// i(ψ' − ψ)/h_t + 0.5(ψ'_{j+1} − 2ψ'_j + ψ'_{j−1})/h_x² + |ψ'_j|²ψ'_j,
/// where ψ = level k, ψ' = level k+1 and x_{−1} := x_{N−1}.
pub fn schrodinger_residual_fd(
    lat: &Lattice,
    level_k: &ComplexField,
    level_k1: &ComplexField,
    j: usize,
) -> (f64, f64) {
    let n = lat.n_space;
    let jm = if j == 0 { n - 1 } else { j - 1 };
    let jp = if j + 1 == n { 0 } else { j + 1 };
    let inv_ht = 1.0 / lat.h_t;
    let inv_hx2 = 1.0 / (lat.h_x * lat.h_x);

    let dre = (level_k1.re[j] - level_k.re[j]) * inv_ht;
    let dim = (level_k1.im[j] - level_k.im[j]) * inv_ht;
    // i·w has real part −Im(w) and imaginary part Re(w)
    let mut f_re = -dim;
    let mut f_im = dre;

    f_re += 0.5 * (level_k1.re[jp] - 2.0 * level_k1.re[j] + level_k1.re[jm]) * inv_hx2;
    f_im += 0.5 * (level_k1.im[jp] - 2.0 * level_k1.im[j] + level_k1.im[jm]) * inv_hx2;

    let a2 = level_k1.abs2(j);
    f_re += a2 * level_k1.re[j];
    f_im += a2 * level_k1.im[j];
    (f_re, f_im)
}

pub fn max_step_residual(lat: &Lattice, level_k: &ComplexField, level_k1: &ComplexField) -> f64 {
    let mut worst = 0.0f64;
    for j in 0..lat.n_space {
        let (fr, fi) = schrodinger_residual_fd(lat, level_k, level_k1, j);
        worst = worst.max(fr.abs()).max(fi.abs());
    }
    worst
}

pub struct SchrodingerSolution {
    pub lattice: Lattice,
    /// Levels 0..=T.
    pub levels: Vec<ComplexField>,
    /// max |f| of each accepted step.
    pub step_residuals: Vec<f64>,
}

/// Stepwise reference solver: each time step solves f(t_k, ·) = 0 for level
/// k+1 by a relaxed fixed-point iteration whose linear stage lags the cubic
/// factor |ψ|² (the implicit solve is linear in the new iterate). The
/// relaxation factor backs off when the residual grows, which keeps the
/// iteration contractive on coarse time grids where the bare update is not.
pub fn solve_schrodinger_fdm(n_space: usize, n_time: usize) -> Result<SchrodingerSolution> {
    let lat = Lattice::new(n_space, n_time);
    let tol = 1e-10;
    let mut levels = vec![initial_condition(&lat)];
    let mut step_residuals = Vec::with_capacity(n_time);

    for step in 0..n_time {
        let prev = levels.last().unwrap().clone();
        let mut phi = prev.clone();
        let mut res = max_step_residual(&lat, &prev, &phi);
        let mut omega = 1.0f64;
        let mut iterations = 0usize;
        while res > tol {
            iterations += 1;
            if iterations > 20_000 {
                return Err(Error::FixedPointDiverged { step });
            }
            let xi = implicit_linear_stage(&lat, &prev, &phi)?;
            // back off the relaxation until the true residual decreases;
            // rejected trials reuse the same solve
            let mut accepted = false;
            let mut w = omega;
            for _ in 0..60 {
                let mut cand = phi.clone();
                for j in 0..lat.n_space {
                    cand.re[j] += w * (xi.re[j] - phi.re[j]);
                    cand.im[j] += w * (xi.im[j] - phi.im[j]);
                }
                let cand_res = max_step_residual(&lat, &prev, &cand);
                if cand_res < res {
                    phi = cand;
                    res = cand_res;
                    omega = (w * 1.2).min(1.0);
                    accepted = true;
                    break;
                }
                w *= 0.5;
            }
            if !accepted {
                return Err(Error::FixedPointDiverged { step });
            }
        }
        step_residuals.push(res);
        levels.push(phi);
    }
    Ok(SchrodingerSolution {
        lattice: lat,
        levels,
        step_residuals,
    })
}

/// One lagged-linear solve: (i/h_t + 0.5·Δ_per/h_x² + |φ|²) ξ = i·ψ_k/h_t,
/// assembled as a real 2N×2N system.
fn implicit_linear_stage(
    lat: &Lattice,
    prev: &ComplexField,
    phi: &ComplexField,
) -> Result<ComplexField> {
    let n = lat.n_space;
    let m = 2 * n;
    let inv_ht = 1.0 / lat.h_t;
    let inv_hx2 = 1.0 / (lat.h_x * lat.h_x);
    let mut a = vec![0.0f64; m * m];
    let mut b = vec![0.0f64; m];

    // unknown ordering [re_0..re_{n-1}, im_0..im_{n-1}];
    // complex coefficient (cr + i·ci) on ξ_l in equation j contributes
    //   Re row j:  cr·re_l − ci·im_l
    //   Im row j:  ci·re_l + cr·im_l
    let add = |a: &mut Vec<f64>, j: usize, l: usize, cr: f64, ci: f64| {
        a[j * m + l] += cr;
        a[j * m + n + l] += -ci;
        a[(n + j) * m + l] += ci;
        a[(n + j) * m + n + l] += cr;
    };

    for j in 0..n {
        let jm = if j == 0 { n - 1 } else { j - 1 };
        let jp = if j + 1 == n { 0 } else { j + 1 };
        add(&mut a, j, j, -inv_hx2 + phi.abs2(j), inv_ht);
        add(&mut a, j, jm, 0.5 * inv_hx2, 0.0);
        add(&mut a, j, jp, 0.5 * inv_hx2, 0.0);
        // rhs = i ψ_k / h_t
        b[j] = -prev.im[j] * inv_ht;
        b[n + j] = prev.re[j] * inv_ht;
    }

    let solve = crate::linalg::solve_dense_refined(&a, m, &[b]);
    let x = &solve.solutions[0];
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(ComplexField {
        re: x[..n].to_vec(),
        im: x[n..].to_vec(),
    })
}

// ---------------------------------------------------------------------------
// FD-PINN loss form
// ---------------------------------------------------------------------------

/// FD-PINN residual form on the space-time lattice. The network is sampled at
/// all (t_k, x_j) with k = 0..=T and j = 0..=N (node N duplicates x = 5); the
/// PDE rows run over k = 0..T−1, j = 0..N−1 with the ghost identification
/// x_{−1} := x_{N−1}, and the data rows impose the initial condition
/// ψ(0, x_j) = 2 sech(x_j) over j = 0..=N.
pub struct SchrodingerForm {
    pub lattice: Lattice,
    points: Vec<Vec<f64>>,
    pde_weight: f64,
    data_weight: f64,
}

impl SchrodingerForm {
    pub fn new(n_space: usize, n_time: usize) -> Self {
        let lat = Lattice::new(n_space, n_time);
        let grid: StructuredGrid = build_interval_grid(n_space, n_time);
        let mut points = Vec::with_capacity((n_time + 1) * (n_space + 1));
        for k in 0..=n_time {
            for j in 0..=n_space {
                points.push(vec![grid.coord(0, k), grid.coord(1, j)]);
            }
        }
        SchrodingerForm {
            lattice: lat,
            points,
            pde_weight: 1.0 / (n_space as f64 * n_time as f64),
            data_weight: 1.0 / (n_space as f64 + 1.0),
        }
    }

    #[inline]
    pub fn sample_index(&self, k: usize, j: usize) -> usize {
        k * (self.lattice.n_space + 1) + j
    }

    /// Stencil sample indices of the PDE row (k, j):
    /// [(k,j), (k+1,j), (k+1,j+1), (k+1,j−1 ghost)].
    fn stencil(&self, k: usize, j: usize) -> [usize; 4] {
        let n = self.lattice.n_space;
        let jm = if j == 0 { n - 1 } else { j - 1 };
        [
            self.sample_index(k, j),
            self.sample_index(k + 1, j),
            self.sample_index(k + 1, j + 1),
            self.sample_index(k + 1, jm),
        ]
    }

    fn row_residual(&self, values: &[f64], k: usize, j: usize) -> (f64, f64) {
        let [i0, i1, i2, i3] = self.stencil(k, j);
        let (re_k, im_k) = (values[2 * i0], values[2 * i0 + 1]);
        let (re, im) = (values[2 * i1], values[2 * i1 + 1]);
        let (re_p, im_p) = (values[2 * i2], values[2 * i2 + 1]);
        let (re_m, im_m) = (values[2 * i3], values[2 * i3 + 1]);
        let inv_ht = 1.0 / self.lattice.h_t;
        let inv_hx2 = 1.0 / (self.lattice.h_x * self.lattice.h_x);
        let a2 = re * re + im * im;
        let f_re = -(im - im_k) * inv_ht + 0.5 * (re_p - 2.0 * re + re_m) * inv_hx2 + a2 * re;
        let f_im = (re - re_k) * inv_ht + 0.5 * (im_p - 2.0 * im + im_m) * inv_hx2 + a2 * im;
        (f_re, f_im)
    }

    /// Adjoint of the loss with respect to the sampled values (ν = 2 or 1).
    pub fn value_adjoint(&self, values: &[f64], w: &crate::losses::LossWeights, vbar: &mut [f64]) {
        let lat = &self.lattice;
        let inv_ht = 1.0 / lat.h_t;
        let inv_hx2 = 1.0 / (lat.h_x * lat.h_x);
        let scale = |r: f64| match w.nu {
            1 => r.signum(),
            _ => 2.0 * r,
        };
        for k in 0..lat.n_time {
            for j in 0..lat.n_space {
                let (f_re, f_im) = self.row_residual(values, k, j);
                let s_re = w.alpha_f * self.pde_weight * scale(f_re);
                let s_im = w.alpha_f * self.pde_weight * scale(f_im);
                let [i0, i1, i2, i3] = self.stencil(k, j);
                let (re, im) = (values[2 * i1], values[2 * i1 + 1]);
                // time difference
                vbar[2 * i0 + 1] += s_re * inv_ht; //  ∂f_re/∂im_k = +1/h_t
                vbar[2 * i1 + 1] += -s_re * inv_ht;
                vbar[2 * i0] += -s_im * inv_ht;
                vbar[2 * i1] += s_im * inv_ht;
                // diffusion
                vbar[2 * i2] += s_re * 0.5 * inv_hx2;
                vbar[2 * i3] += s_re * 0.5 * inv_hx2;
                vbar[2 * i1] += -s_re * inv_hx2;
                vbar[2 * i2 + 1] += s_im * 0.5 * inv_hx2;
                vbar[2 * i3 + 1] += s_im * 0.5 * inv_hx2;
                vbar[2 * i1 + 1] += -s_im * inv_hx2;
                // cubic term (3re² + im²)·re etc.
                vbar[2 * i1] += s_re * (3.0 * re * re + im * im);
                vbar[2 * i1 + 1] += s_re * 2.0 * re * im;
                vbar[2 * i1] += s_im * 2.0 * re * im;
                vbar[2 * i1 + 1] += s_im * (re * re + 3.0 * im * im);
            }
        }
        // initial-condition data rows
        for j in 0..=lat.n_space {
            let idx = self.sample_index(0, j);
            let target = 2.0 * sech(lat.x(j));
            let dre = values[2 * idx] - target;
            let dim = values[2 * idx + 1];
            vbar[2 * idx] += w.alpha_d * self.data_weight * scale(dre);
            vbar[2 * idx + 1] += w.alpha_d * self.data_weight * scale(dim);
        }
    }

    /// Sampled values of a solver trajectory (levels 0..=T), for the
    /// grid-equivalence checks: node N takes the level value at j = 0.
    pub fn trajectory_values(&self, levels: &[ComplexField]) -> Vec<f64> {
        let lat = &self.lattice;
        let mut values = Vec::with_capacity(self.points.len() * 2);
        for level in levels.iter().take(lat.n_time + 1) {
            for j in 0..=lat.n_space {
                let jj = if j == lat.n_space { 0 } else { j };
                values.push(level.re[jj]);
                values.push(level.im[jj]);
            }
        }
        values
    }
}

impl DiscreteForm for SchrodingerForm {
    fn sample_points(&self) -> &[Vec<f64>] {
        &self.points
    }
    fn n_components(&self) -> usize {
        2
    }
    fn residuals(&self, values: &[f64]) -> Result<DiscreteTerms> {
        let lat = &self.lattice;
        let mut pde: Vec<DiscreteRow> = Vec::with_capacity(lat.n_space * lat.n_time);
        for k in 0..lat.n_time {
            for j in 0..lat.n_space {
                let (f_re, f_im) = self.row_residual(values, k, j);
                pde.push((self.pde_weight, vec![f_re, f_im]));
            }
        }
        let mut data: Vec<DiscreteRow> = Vec::with_capacity(lat.n_space + 1);
        for j in 0..=lat.n_space {
            let idx = self.sample_index(0, j);
            let target = 2.0 * sech(lat.x(j));
            data.push((
                self.data_weight,
                vec![values[2 * idx] - target, values[2 * idx + 1]],
            ));
        }
        Ok(DiscreteTerms {
            pde,
            boundary: Vec::new(),
            data,
        })
    }
}

/// FD-PINN training objective on the space-time lattice.
pub struct SchrodingerFdObjective {
    pub form: SchrodingerForm,
    pub constraint: Option<crate::network::Constraint>,
    pub weights: crate::losses::LossWeights,
    flat_points: Vec<f64>,
}

impl SchrodingerFdObjective {
    pub fn new(
        form: SchrodingerForm,
        constraint: Option<crate::network::Constraint>,
        weights: crate::losses::LossWeights,
    ) -> Self {
        let flat_points = form
            .sample_points()
            .iter()
            .flat_map(|p| p.iter().cloned())
            .collect();
        SchrodingerFdObjective {
            form,
            constraint,
            weights,
            flat_points,
        }
    }
}

impl crate::autodiff::Objective for SchrodingerFdObjective {
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
        let mut values = vec![0.0; 2 * n];
        for p in 0..n {
            values[2 * p] = field.value(p, 0);
            values[2 * p + 1] = field.value(p, 1);
        }
        let loss = crate::losses::fd_loss(&values, &self.form, &self.weights)?;
        let mut vbar = vec![0.0; 2 * n];
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

// ---------------------------------------------------------------------------
// Hard initial condition
// ---------------------------------------------------------------------------

/// Anchor ψ_θ(t, x) = (2 sech x, 0) + t · net(t, x): the initial condition
/// holds exactly at t = 0.
pub struct SechAnchor;

impl VectorField for SechAnchor {
    fn dim(&self) -> usize {
        2
    }
    fn jet(&self, z: &[f64]) -> Vec<(f64, Vec<f64>, Vec<f64>)> {
        let x = z[1];
        let s = sech(x);
        let t = x.tanh();
        let v = 2.0 * s;
        let dx = -2.0 * s * t;
        let dxx = 2.0 * (s * t * t - s * s * s);
        vec![
            (
                v,
                vec![0.0, dx],
                vec![0.0, 0.0, 0.0, dxx],
            ),
            (0.0, vec![0.0, 0.0], vec![0.0; 4]),
        ]
    }
}

/// Scale field t (first input coordinate).
pub struct TimeScale;

impl ScalarField for TimeScale {
    fn jet(&self, z: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let d = z.len();
        let mut g = vec![0.0; d];
        g[0] = 1.0;
        (z[0], g, vec![0.0; d * d])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_field_zero_residual() {
        let lat = Lattice::new(8, 4);
        let zero = ComplexField {
            re: vec![0.0; 8],
            im: vec![0.0; 8],
        };
        for j in 0..8 {
            assert_eq!(schrodinger_residual_fd(&lat, &zero, &zero, j), (0.0, 0.0));
        }
    }

    #[test]
    fn constant_two_field_residual_is_cubic_only() {
        let lat = Lattice::new(8, 4);
        let two = ComplexField {
            re: vec![2.0; 8],
            im: vec![0.0; 8],
        };
        for j in 0..8 {
            let (fr, fi) = schrodinger_residual_fd(&lat, &two, &two, j);
            assert_eq!(fr, 8.0); // |2|²·2
            assert_eq!(fi, 0.0);
        }
    }

    #[test]
    fn residual_matches_complex_oracle() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(1);
        let lat = Lattice::new(16, 10);
        let rand_field = |rng: &mut rand_chacha::ChaCha12Rng| ComplexField {
            re: (0..16).map(|_| rng.random_range(-1.5..1.5)).collect(),
            im: (0..16).map(|_| rng.random_range(-1.5..1.5)).collect(),
        };
        let a = rand_field(&mut rng);
        let b = rand_field(&mut rng);
        let i = Complex64::new(0.0, 1.0);
        for j in 0..16 {
            let jm = if j == 0 { 15 } else { j - 1 };
            let jp = (j + 1) % 16;
            let pk = Complex64::new(a.re[j], a.im[j]);
            let p = Complex64::new(b.re[j], b.im[j]);
            let pp = Complex64::new(b.re[jp], b.im[jp]);
            let pm = Complex64::new(b.re[jm], b.im[jm]);
            let oracle = i * (p - pk) / lat.h_t
                + 0.5 * (pp - 2.0 * p + pm) / (lat.h_x * lat.h_x)
                + p.norm_sqr() * p;
            let (fr, fi) = schrodinger_residual_fd(&lat, &a, &b, j);
            assert!((fr - oracle.re).abs() <= 1e-13 * (1.0 + oracle.re.abs()));
            assert!((fi - oracle.im).abs() <= 1e-13 * (1.0 + oracle.im.abs()));
        }
    }

    #[test]
    fn initial_condition_peak() {
        let lat = Lattice::new(100, 10);
        let ic = initial_condition(&lat);
        // x_50 = 0, sech(0) = 1
        assert_eq!(ic.re[50], 2.0);
        assert_eq!(ic.im[50], 0.0);
    }

    #[test]
    fn solver_converges_each_step_small() {
        let sol = solve_schrodinger_fdm(16, 20).unwrap();
        assert_eq!(sol.levels.len(), 21);
        for r in &sol.step_residuals {
            assert!(*r <= 1e-10, "step residual {r}");
        }
    }

    #[test]
    fn ghost_identification_matches_wraparound() {
        // residual at j=0 uses x_{N-1}; compare against am explicit wrap
        let lat = Lattice::new(8, 4);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let a = ComplexField {
            re: (0..8).map(|_| rng.random_range(-1.0..1.0)).collect(),
            im: (0..8).map(|_| rng.random_range(-1.0..1.0)).collect(),
        };
        let (fr, fi) = schrodinger_residual_fd(&lat, &a, &a, 0);
        // manual: jm = 7
        let inv_ht = 1.0 / lat.h_t;
        let inv_hx2 = 1.0 / (lat.h_x * lat.h_x);
        let _ = inv_ht;
        let a2 = a.abs2(0);
        let man_re = 0.5 * (a.re[1] - 2.0 * a.re[0] + a.re[7]) * inv_hx2 + a2 * a.re[0];
        let man_im = 0.5 * (a.im[1] - 2.0 * a.im[0] + a.im[7]) * inv_hx2 + a2 * a.im[0];
        assert_eq!(fr, man_re);
        assert_eq!(fi, man_im);
    }

    #[test]
    fn interpolated_trajectory_has_tiny_fd_loss() {
        use crate::losses::{fd_loss, LossWeights};
        let sol = solve_schrodinger_fdm(12, 24).unwrap();
        let form = SchrodingerForm::new(12, 24);
        let values = form.trajectory_values(&sol.levels);
        let out = fd_loss(&values, &form, &LossWeights::default()).unwrap();
        assert!(out.pde_term <= 1e-16, "pde {}", out.pde_term);
        assert!(out.data_term <= 1e-28, "data {}", out.data_term);
    }
}
