//! Incompressible Navier-Stokes on the periodic square [0,2π)²: reference
//! data generator (implicit diffusion, convection lagged through a
//! fixed-point iteration, pressure projection), the streamfunction-based
//! inverse-problem loss with trainable (λ1, λ2), and the observation noise
//! model.

use crate::collocation::core_subgrids;
use crate::error::{Error, Result};
use crate::linalg::{conjugate_gradient, LinearOperator};
use crate::losses::{DiscreteForm, DiscreteRow, DiscreteTerms};
use rand::SeedableRng;
use rand_distr::Distribution;

/// Scalar field on the periodic nx×ny grid, row-major with x fastest in `i`:
/// index = i·ny + j.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub data: Vec<f64>,
}

impl Grid2 {
    pub fn zeros(nx: usize, ny: usize, h: f64) -> Self {
        Grid2 {
            nx,
            ny,
            h,
            data: vec![0.0; nx * ny],
        }
    }
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }
    #[inline]
    fn ip(&self, i: usize) -> usize {
        if i + 1 == self.nx {
            0
        } else {
            i + 1
        }
    }
    #[inline]
    fn im(&self, i: usize) -> usize {
        if i == 0 {
            self.nx - 1
        } else {
            i - 1
        }
    }
    #[inline]
    fn jp(&self, j: usize) -> usize {
        if j + 1 == self.ny {
            0
        } else {
            j + 1
        }
    }
    #[inline]
    fn jm(&self, j: usize) -> usize {
        if j == 0 {
            self.ny - 1
        } else {
            j - 1
        }
    }

    /// Central x-derivative (periodic).
    pub fn dx(&self) -> Grid2 {
        let mut out = Grid2::zeros(self.nx, self.ny, self.h);
        let s = 1.0 / (2.0 * self.h);
        for i in 0..self.nx {
            for j in 0..self.ny {
                out.data[self.idx(i, j)] =
                    (self.at(self.ip(i), j) - self.at(self.im(i), j)) * s;
            }
        }
        out
    }

    /// Central y-derivative (periodic).
    pub fn dy(&self) -> Grid2 {
        let mut out = Grid2::zeros(self.nx, self.ny, self.h);
        let s = 1.0 / (2.0 * self.h);
        for i in 0..self.nx {
            for j in 0..self.ny {
                out.data[self.idx(i, j)] =
                    (self.at(i, self.jp(j)) - self.at(i, self.jm(j))) * s;
            }
        }
        out
    }

    /// Compact 5-point Laplacian (periodic).
    pub fn laplacian(&self) -> Grid2 {
        let mut out = Grid2::zeros(self.nx, self.ny, self.h);
        let s = 1.0 / (self.h * self.h);
        for i in 0..self.nx {
            for j in 0..self.ny {
                out.data[self.idx(i, j)] = (self.at(self.ip(i), j)
                    + self.at(self.im(i), j)
                    + self.at(i, self.jp(j))
                    + self.at(i, self.jm(j))
                    - 4.0 * self.at(i, j))
                    * s;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// One saved time level of the generator.
#[derive(Debug, Clone)]
pub struct FlowSnapshot {
    pub u: Grid2,
    pub v: Grid2,
    pub p: Grid2,
    pub time_index: usize,
}

#[derive(Debug, Clone)]
pub struct NsTrajectory {
    pub snapshots: Vec<FlowSnapshot>,
    pub lambda1: f64,
    pub lambda2: f64,
    pub h_t: f64,
}

/// The multi-mode divergence-free streamfunction of the initial condition.
pub fn initial_streamfunction(x: f64, y: f64) -> f64 {
    1.00 * x.sin() * y.cos()
        + 0.30 * (2.0 * x).sin() * y.cos()
        + 0.20 * x.sin() * (2.0 * y).cos()
        + 0.15 * (2.0 * x).sin() * (2.0 * y).cos()
}

pub fn stream_grid(nx: usize, ny: usize) -> Grid2 {
    let h = 2.0 * std::f64::consts::PI / nx as f64;
    let mut psi = Grid2::zeros(nx, ny, h);
    for i in 0..nx {
        for j in 0..ny {
            let idx = i * ny + j;
            psi.data[idx] = initial_streamfunction(i as f64 * h, j as f64 * h);
        }
    }
    psi
}

/// Velocities from a streamfunction: u = D_y ψ, v = −D_x ψ (central), so
/// the central divergence vanishes identically.
pub fn velocity_from_stream(psi: &Grid2) -> (Grid2, Grid2) {
    let u = psi.dy();
    let mut v = psi.dx();
    for x in v.data.iter_mut() {
        *x = -*x;
    }
    (u, v)
}

/// Initial snapshot: u = D_y ψ, v = −D_x ψ, p = 0.
pub fn ns_initial_field(nx: usize, ny: usize) -> FlowSnapshot {
    let psi = stream_grid(nx, ny);
    let (u, v) = velocity_from_stream(&psi);
    let p = Grid2::zeros(nx, ny, psi.h);
    FlowSnapshot {
        u,
        v,
        p,
        time_index: 0,
    }
}

pub fn divergence(u: &Grid2, v: &Grid2) -> Grid2 {
    let du = u.dx();
    let dv = v.dy();
    let mut out = du;
    for (a, b) in out.data.iter_mut().zip(&dv.data) {
        *a += *b;
    }
    out
}

pub fn kinetic_energy(u: &Grid2, v: &Grid2) -> f64 {
    let h2 = u.h * u.h;
    0.5 * h2
        * (u.data.iter().map(|x| x * x).sum::<f64>() + v.data.iter().map(|x| x * x).sum::<f64>())
}

struct HelmholtzOp<'a> {
    template: &'a Grid2,
    coeff: f64, // h_t · λ2
}

impl LinearOperator for HelmholtzOp<'_> {
    fn dim(&self) -> usize {
        self.template.data.len()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let g = self.template;
        let s = self.coeff / (g.h * g.h);
        for i in 0..g.nx {
            for j in 0..g.ny {
                let idx = g.idx(i, j);
                let lap = x[g.idx(g.ip(i), j)]
                    + x[g.idx(g.im(i), j)]
                    + x[g.idx(i, g.jp(j))]
                    + x[g.idx(i, g.jm(j))]
                    - 4.0 * x[idx];
                out[idx] = x[idx] - s * lap;
            }
        }
    }
}

/// Negated wide Laplacian −(D_x²(2h) + D_y²(2h)), the composition of central
/// first derivatives: the operator the projection must invert for the
/// corrected velocity to be exactly divergence-free in the central sense.
/// Negated so CG sees a positive semidefinite operator.
struct NegWideLaplacianOp<'a> {
    template: &'a Grid2,
}

impl LinearOperator for NegWideLaplacianOp<'_> {
    fn dim(&self) -> usize {
        self.template.data.len()
    }
    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let g = self.template;
        let s = 1.0 / (4.0 * g.h * g.h);
        for i in 0..g.nx {
            for j in 0..g.ny {
                let i2p = g.ip(g.ip(i));
                let i2m = g.im(g.im(i));
                let j2p = g.jp(g.jp(j));
                let j2m = g.jm(g.jm(j));
                out[g.idx(i, j)] = -(x[g.idx(i2p, j)] + x[g.idx(i2m, j)] + x[g.idx(i, j2p)]
                    + x[g.idx(i, j2m)]
                    - 4.0 * x[g.idx(i, j)])
                    * s;
            }
        }
    }
}

/// Remove the null space of the wide Laplacian: per-sublattice means
/// ((i mod 2, j mod 2) classes on even extents, the global mean otherwise).
fn project_sublattice_means(g_nx: usize, g_ny: usize, x: &mut [f64]) {
    let sx = if g_nx % 2 == 0 { 2 } else { 1 };
    let sy = if g_ny % 2 == 0 { 2 } else { 1 };
    for ci in 0..sx {
        for cj in 0..sy {
            let mut sum = 0.0;
            let mut count = 0usize;
            for i in (ci..g_nx).step_by(sx) {
                for j in (cj..g_ny).step_by(sy) {
                    sum += x[i * g_ny + j];
                    count += 1;
                }
            }
            let mean = sum / count as f64;
            for i in (ci..g_nx).step_by(sx) {
                for j in (cj..g_ny).step_by(sy) {
                    x[i * g_ny + j] -= mean;
                }
            }
        }
    }
}

fn convection(u: &Grid2, v: &Grid2, field: &Grid2) -> Grid2 {
    let fx = field.dx();
    let fy = field.dy();
    let mut out = Grid2::zeros(field.nx, field.ny, field.h);
    for k in 0..out.data.len() {
        out.data[k] = u.data[k] * fx.data[k] + v.data[k] * fy.data[k];
    }
    out
}

/// Generate a trajectory: each step runs a fixed-point iteration, each
/// iterate solving a Helmholtz problem for the intermediate velocity (with
/// convection and pressure gradient taken from the current iterate) and a
/// periodic Poisson problem for the correction potential φ, then projecting
///   u ← ũ − h_t ∂φ/∂x,  v ← ṽ − h_t ∂φ/∂y,  p ← p + φ,
/// until successive velocity iterates differ by at most 1e-9 in max norm.
pub fn ns_generate_data(
    lambda1: f64,
    lambda2: f64,
    h_t: f64,
    steps: usize,
    nx: usize,
    ny: usize,
) -> Result<NsTrajectory> {
    ns_generate_data_from(ns_initial_field(nx, ny), lambda1, lambda2, h_t, steps)
}

/// Same generator from an explicit initial snapshot.
pub fn ns_generate_data_from(
    initial: FlowSnapshot,
    lambda1: f64,
    lambda2: f64,
    h_t: f64,
    steps: usize,
) -> Result<NsTrajectory> {
    assert!(lambda2 > 0.0, "viscosity must be positive");
    assert!(steps >= 1);
    let (nx, ny) = (initial.u.nx, initial.u.ny);
    let fp_tol = 1e-9;
    let cg_tol = 1e-12;
    let mut snapshots = vec![initial];

    for step in 0..steps {
        let prev = snapshots.last().unwrap();
        let (uk, vk, pk) = (&prev.u, &prev.v, &prev.p);
        let mut u = uk.clone();
        let mut v = vk.clone();
        let mut p = pk.clone();
        let mut converged = false;

        for _m in 0..200 {
            let conv_u = convection(&u, &v, &u);
            let conv_v = convection(&u, &v, &v);
            let px = p.dx();
            let py = p.dy();
            let mut rhs_u = uk.clone();
            let mut rhs_v = vk.clone();
            for k in 0..rhs_u.data.len() {
                rhs_u.data[k] -= h_t * (lambda1 * conv_u.data[k] + px.data[k]);
                rhs_v.data[k] -= h_t * (lambda1 * conv_v.data[k] + py.data[k]);
            }

            let op = HelmholtzOp {
                template: uk,
                coeff: h_t * lambda2,
            };
            let (ut, _, _) = conjugate_gradient(&op, &rhs_u.data, cg_tol, 10_000, None)?;
            let (vt, _, _) = conjugate_gradient(&op, &rhs_v.data, cg_tol, 10_000, None)?;
            let u_tilde = Grid2 {
                nx,
                ny,
                h: uk.h,
                data: ut,
            };
            let v_tilde = Grid2 {
                nx,
                ny,
                h: uk.h,
                data: vt,
            };

            let div = divergence(&u_tilde, &v_tilde);
            // solve −Δ_wide φ = −div/h_t
            let mut rhs_phi: Vec<f64> = div.data.iter().map(|d| -d / h_t).collect();
            project_sublattice_means(nx, ny, &mut rhs_phi);
            let wide = NegWideLaplacianOp { template: uk };
            let projector = |x: &mut [f64]| project_sublattice_means(nx, ny, x);
            let (phi_data, _, _) =
                conjugate_gradient(&wide, &rhs_phi, cg_tol, 20_000, Some(&projector))?;
            let phi = Grid2 {
                nx,
                ny,
                h: uk.h,
                data: phi_data,
            };

            let phix = phi.dx();
            let phiy = phi.dy();
            let mut u_new = u_tilde;
            let mut v_new = v_tilde;
            for k in 0..u_new.data.len() {
                u_new.data[k] -= h_t * phix.data[k];
                v_new.data[k] -= h_t * phiy.data[k];
            }
            let mut p_new = p.clone();
            for k in 0..p_new.data.len() {
                p_new.data[k] += phi.data[k];
            }

            let mut delta = 0.0f64;
            for k in 0..u_new.data.len() {
                delta = delta
                    .max((u_new.data[k] - u.data[k]).abs())
                    .max((v_new.data[k] - v.data[k]).abs());
            }
            u = u_new;
            v = v_new;
            p = p_new;
            if delta <= fp_tol {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::FixedPointDiverged { step });
        }
        snapshots.push(FlowSnapshot {
            u,
            v,
            p,
            time_index: step + 1,
        });
    }
    Ok(NsTrajectory {
        snapshots,
        lambda1,
        lambda2,
        h_t,
    })
}

/// Momentum residuals between consecutive levels, evaluated with the same
/// stencils as the generator: forward difference in time, all other terms at
/// the forward level (the converged scheme the generator satisfies).
pub fn momentum_residuals(
    uk: &Grid2,
    vk: &Grid2,
    u: &Grid2,
    v: &Grid2,
    p: &Grid2,
    lambda1: f64,
    lambda2: f64,
    h_t: f64,
) -> (Grid2, Grid2) {
    let conv_u = convection(u, v, u);
    let conv_v = convection(u, v, v);
    let px = p.dx();
    let py = p.dy();
    let lap_u = u.laplacian();
    let lap_v = v.laplacian();
    let mut f = Grid2::zeros(u.nx, u.ny, u.h);
    let mut g = Grid2::zeros(u.nx, u.ny, u.h);
    for k in 0..f.data.len() {
        f.data[k] = (u.data[k] - uk.data[k]) / h_t + lambda1 * conv_u.data[k] + px.data[k]
            - lambda2 * lap_u.data[k];
        g.data[k] = (v.data[k] - vk.data[k]) / h_t + lambda1 * conv_v.data[k] + py.data[k]
            - lambda2 * lap_v.data[k];
    }
    (f, g)
}

/// Residual grids (f, g) of a streamfunction/pressure trajectory on the
/// two-cell core Ω^h_2 × T^h_core; entries off the core are zero.
pub fn ns_residuals_fd(
    psi: &[Grid2],
    p: &[Grid2],
    lambda1: f64,
    lambda2: f64,
    h_t: f64,
) -> Result<(Vec<Grid2>, Vec<Grid2>)> {
    if psi.len() != p.len() || psi.len() < 2 {
        return Err(Error::DimensionMismatch("need at least two levels".into()));
    }
    let (nx, ny) = (psi[0].nx, psi[0].ny);
    let (_omega1, omega2, _t_core) = core_subgrids(nx, ny, psi.len())?;
    let velocities: Vec<(Grid2, Grid2)> = psi.iter().map(velocity_from_stream).collect();
    let mut fs = Vec::new();
    let mut gs = Vec::new();
    for k in 0..psi.len() - 1 {
        let (uk, vk) = &velocities[k];
        let (u, v) = &velocities[k + 1];
        let (f_full, g_full) = momentum_residuals(uk, vk, u, v, &p[k + 1], lambda1, lambda2, h_t);
        let mut f = Grid2::zeros(nx, ny, psi[0].h);
        let mut g = Grid2::zeros(nx, ny, psi[0].h);
        for &(i, j) in &omega2 {
            let idx = i * ny + j;
            f.data[idx] = f_full.at(i, j);
            g.data[idx] = g_full.at(i, j);
        }
        fs.push(f);
        gs.push(g);
    }
    Ok((fs, gs))
}

// ---------------------------------------------------------------------------
// Observations and noise
// ---------------------------------------------------------------------------

/// Velocity observations on the full grid at all saved snapshots.
#[derive(Debug, Clone)]
pub struct NsObservations {
    pub u: Vec<Grid2>,
    pub v: Vec<Grid2>,
    pub h_t: f64,
}

impl NsTrajectory {
    pub fn observations(&self) -> NsObservations {
        NsObservations {
            u: self.snapshots.iter().map(|s| s.u.clone()).collect(),
            v: self.snapshots.iter().map(|s| s.v.clone()).collect(),
            h_t: self.h_t,
        }
    }
}

fn global_std(grids: &[Grid2]) -> f64 {
    let n: usize = grids.iter().map(|g| g.data.len()).sum();
    let mean: f64 = grids.iter().flat_map(|g| &g.data).sum::<f64>() / n as f64;
    let var: f64 = grids
        .iter()
        .flat_map(|g| &g.data)
        .map(|v| (v - mean) * (v - mean))
        .sum::<f64>()
        / n as f64;
    var.sqrt()
}

/// Adds independent zero-mean Gaussian noise per component with standard
/// deviation `fraction` times that component's own global standard deviation
/// (computed on the clean arrays). u and v use independent streams.
pub fn inject_noise(obs: &NsObservations, fraction: f64, seed: u64) -> NsObservations {
    assert!(fraction >= 0.0);
    if fraction == 0.0 {
        return obs.clone();
    }
    let sigma_u = fraction * global_std(&obs.u);
    let sigma_v = fraction * global_std(&obs.v);
    let normal = rand_distr::Normal::new(0.0, 1.0).unwrap();
    let mut rng_u = rand_chacha::ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut rng_v =
        rand_chacha::ChaCha12Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0x5DEE_CE66);
    let mut out = obs.clone();
    for g in &mut out.u {
        for v in &mut g.data {
            *v += sigma_u * normal.sample(&mut rng_u);
        }
    }
    for g in &mut out.v {
        for v in &mut g.data {
            *v += sigma_v * normal.sample(&mut rng_v);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Inverse-problem loss form
// ---------------------------------------------------------------------------

/// The inverse-problem training functional: the network outputs (ψ, p) on the
/// space-time grid, velocities derive from ψ by the central stencils, and the
/// loss combines data misfit on Ω^h_1 × T^h, momentum residuals on
/// Ω^h_2 × T^h_core, and the (redundant, stabilizing) divergence penalty on
/// Ω^h_2 × T^h, reported in the boundary slot of the breakdown.
pub struct NsInverseForm {
    pub obs: NsObservations,
    pub lambda1: f64,
    pub lambda2: f64,
    pub w_div: f64,
    pub nx: usize,
    pub ny: usize,
    points: Vec<Vec<f64>>,
    omega1: Vec<(usize, usize)>,
    omega2: Vec<(usize, usize)>,
    data_weight: f64,
    pde_weight: f64,
    div_weight: f64,
}

/// Default weight of the divergence penalty.
pub const DEFAULT_W_DIV: f64 = 1e-3;

impl NsInverseForm {
    pub fn new(obs: NsObservations, lambda1: f64, lambda2: f64, w_div: f64) -> Result<Self> {
        let s = obs.u.len();
        if s < 2 {
            return Err(Error::GridTooSmall);
        }
        let (nx, ny, h) = (obs.u[0].nx, obs.u[0].ny, obs.u[0].h);
        let (omega1, omega2, t_core) = core_subgrids(nx, ny, s)?;
        let mut points = Vec::with_capacity(s * nx * ny);
        for t in 0..s {
            let tv = t as f64 * obs.h_t;
            for i in 0..nx {
                for j in 0..ny {
                    points.push(vec![tv, i as f64 * h, j as f64 * h]);
                }
            }
        }
        let data_weight = 1.0 / (s * omega1.len()) as f64;
        let pde_weight = 1.0 / (t_core.len() * omega2.len()) as f64;
        let div_weight = w_div / (s * omega2.len()) as f64;
        Ok(NsInverseForm {
            obs,
            lambda1,
            lambda2,
            w_div,
            nx,
            ny,
            points,
            omega1,
            omega2,
            data_weight,
            pde_weight,
            div_weight,
        })
    }

    pub fn n_snapshots(&self) -> usize {
        self.obs.u.len()
    }

    #[inline]
    pub fn sample_index(&self, t: usize, i: usize, j: usize) -> usize {
        (t * self.nx + i) * self.ny + j
    }

    /// Split sampled values into per-level (ψ, p) grids.
    pub fn fields_from_values(&self, values: &[f64]) -> (Vec<Grid2>, Vec<Grid2>) {
        let s = self.n_snapshots();
        let h = self.obs.u[0].h;
        let mut psi = Vec::with_capacity(s);
        let mut p = Vec::with_capacity(s);
        for t in 0..s {
            let mut gp = Grid2::zeros(self.nx, self.ny, h);
            let mut gq = Grid2::zeros(self.nx, self.ny, h);
            for i in 0..self.nx {
                for j in 0..self.ny {
                    let idx = self.sample_index(t, i, j);
                    let gidx = i * self.ny + j;
                    gp.data[gidx] = values[2 * idx];
                    gq.data[gidx] = values[2 * idx + 1];
                }
            }
            psi.push(gp);
            p.push(gq);
        }
        (psi, p)
    }

    /// Loss adjoint with respect to sampled (ψ, p) values plus the gradient
    /// in (λ1, λ2). ν = 2 throughout (the norm the problem is trained with).
    pub fn value_adjoint(
        &self,
        values: &[f64],
        w: &crate::losses::LossWeights,
        vbar: &mut [f64],
    ) -> (f64, f64) {
        self.value_adjoint_with(values, self.lambda1, self.lambda2, w, vbar)
    }

    pub fn value_adjoint_with(
        &self,
        values: &[f64],
        lambda1: f64,
        lambda2: f64,
        w: &crate::losses::LossWeights,
        vbar: &mut [f64],
    ) -> (f64, f64) {
        let s = self.n_snapshots();
        let h = self.obs.u[0].h;
        let h_t = self.obs.h_t;
        let inv2h = 1.0 / (2.0 * h);
        let inv_h2 = 1.0 / (h * h);
        let (psi, p) = self.fields_from_values(values);
        let vel: Vec<(Grid2, Grid2)> = psi.iter().map(velocity_from_stream).collect();

        let mut ubar: Vec<Grid2> = (0..s).map(|_| Grid2::zeros(self.nx, self.ny, h)).collect();
        let mut vbar_g: Vec<Grid2> = (0..s).map(|_| Grid2::zeros(self.nx, self.ny, h)).collect();
        let mut pbar: Vec<Grid2> = (0..s).map(|_| Grid2::zeros(self.nx, self.ny, h)).collect();
        let mut l1bar = 0.0;
        let mut l2bar = 0.0;

        // data term
        for t in 0..s {
            let (u, v) = &vel[t];
            for &(i, j) in &self.omega1 {
                let idx = u.idx(i, j);
                let du = u.data[idx] - self.obs.u[t].data[idx];
                let dv = v.data[idx] - self.obs.v[t].data[idx];
                ubar[t].data[idx] += w.alpha_d * self.data_weight * 2.0 * du;
                vbar_g[t].data[idx] += w.alpha_d * self.data_weight * 2.0 * dv;
            }
        }

        // momentum residuals
        for t in 0..s - 1 {
            let (uk, _vk) = &vel[t];
            let (u, v) = &vel[t + 1];
            let pg = &p[t + 1];
            let ux = u.dx();
            let uy = u.dy();
            let vx = v.dx();
            let vy = v.dy();
            let lap_u = u.laplacian();
            let lap_v = v.laplacian();
            let px = pg.dx();
            let py = pg.dy();
            for &(i, j) in &self.omega2 {
                let idx = u.idx(i, j);
                let conv_f = u.data[idx] * ux.data[idx] + v.data[idx] * uy.data[idx];
                let conv_g = u.data[idx] * vx.data[idx] + v.data[idx] * vy.data[idx];
                let f = (u.data[idx] - uk.data[idx]) / h_t + lambda1 * conv_f + px.data[idx]
                    - lambda2 * lap_u.data[idx];
                let g = (v.data[idx] - vel[t].1.data[idx]) / h_t + lambda1 * conv_g
                    + py.data[idx]
                    - lambda2 * lap_v.data[idx];
                let fb = w.alpha_f * self.pde_weight * 2.0 * f;
                let gb = w.alpha_f * self.pde_weight * 2.0 * g;

                l1bar += fb * conv_f + gb * conv_g;
                l2bar -= fb * lap_u.data[idx] + gb * lap_v.data[idx];

                let (ipx, imx) = (u.ip(i), u.im(i));
                let (jpy, jmy) = (u.jp(j), u.jm(j));

                // time differences
                ubar[t].data[idx] -= fb / h_t;
                ubar[t + 1].data[idx] += fb / h_t;
                vbar_g[t].data[idx] -= gb / h_t;
                vbar_g[t + 1].data[idx] += gb / h_t;

                // convection, f-row: λ1(u u_x + v u_y)
                ubar[t + 1].data[idx] += fb * lambda1 * ux.data[idx];
                vbar_g[t + 1].data[idx] += fb * lambda1 * uy.data[idx];
                ubar[t + 1].data[u.idx(ipx, j)] += fb * lambda1 * u.data[idx] * inv2h;
                ubar[t + 1].data[u.idx(imx, j)] -= fb * lambda1 * u.data[idx] * inv2h;
                ubar[t + 1].data[u.idx(i, jpy)] += fb * lambda1 * v.data[idx] * inv2h;
                ubar[t + 1].data[u.idx(i, jmy)] -= fb * lambda1 * v.data[idx] * inv2h;

                // convection, g-row: λ1(u v_x + v v_y)
                ubar[t + 1].data[idx] += gb * lambda1 * vx.data[idx];
                vbar_g[t + 1].data[idx] += gb * lambda1 * vy.data[idx];
                vbar_g[t + 1].data[u.idx(ipx, j)] += gb * lambda1 * u.data[idx] * inv2h;
                vbar_g[t + 1].data[u.idx(imx, j)] -= gb * lambda1 * u.data[idx] * inv2h;
                vbar_g[t + 1].data[u.idx(i, jpy)] += gb * lambda1 * v.data[idx] * inv2h;
                vbar_g[t + 1].data[u.idx(i, jmy)] -= gb * lambda1 * v.data[idx] * inv2h;

                // pressure gradients
                pbar[t + 1].data[u.idx(ipx, j)] += fb * inv2h;
                pbar[t + 1].data[u.idx(imx, j)] -= fb * inv2h;
                pbar[t + 1].data[u.idx(i, jpy)] += gb * inv2h;
                pbar[t + 1].data[u.idx(i, jmy)] -= gb * inv2h;

                // diffusion −λ2 Δ
                let lam2 = lambda2;
                ubar[t + 1].data[idx] += fb * lam2 * 4.0 * inv_h2;
                ubar[t + 1].data[u.idx(ipx, j)] -= fb * lam2 * inv_h2;
                ubar[t + 1].data[u.idx(imx, j)] -= fb * lam2 * inv_h2;
                ubar[t + 1].data[u.idx(i, jpy)] -= fb * lam2 * inv_h2;
                ubar[t + 1].data[u.idx(i, jmy)] -= fb * lam2 * inv_h2;
                vbar_g[t + 1].data[idx] += gb * lam2 * 4.0 * inv_h2;
                vbar_g[t + 1].data[u.idx(ipx, j)] -= gb * lam2 * inv_h2;
                vbar_g[t + 1].data[u.idx(imx, j)] -= gb * lam2 * inv_h2;
                vbar_g[t + 1].data[u.idx(i, jpy)] -= gb * lam2 * inv_h2;
                vbar_g[t + 1].data[u.idx(i, jmy)] -= gb * lam2 * inv_h2;
            }
        }

        // divergence penalty
        for t in 0..s {
            let (u, v) = &vel[t];
            for &(i, j) in &self.omega2 {
                let (ipx, imx) = (u.ip(i), u.im(i));
                let (jpy, jmy) = (u.jp(j), u.jm(j));
                let div = (u.data[u.idx(ipx, j)] - u.data[u.idx(imx, j)]) * inv2h
                    + (v.data[u.idx(i, jpy)] - v.data[u.idx(i, jmy)]) * inv2h;
                let db = w.alpha_b * self.div_weight * 2.0 * div;
                ubar[t].data[u.idx(ipx, j)] += db * inv2h;
                ubar[t].data[u.idx(imx, j)] -= db * inv2h;
                vbar_g[t].data[u.idx(i, jpy)] += db * inv2h;
                vbar_g[t].data[u.idx(i, jmy)] -= db * inv2h;
            }
        }

        // route (ū, v̄) into ψ̄: u = D_y ψ, v = −D_x ψ
        for t in 0..s {
            let u = &ubar[t];
            let vg = &vbar_g[t];
            for i in 0..self.nx {
                for j in 0..self.ny {
                    let idx = u.idx(i, j);
                    let ub = u.data[idx];
                    let vb = vg.data[idx];
                    if ub != 0.0 {
                        let jpy = u.jp(j);
                        let jmy = u.jm(j);
                        vbar[2 * self.sample_index(t, i, jpy)] += ub * inv2h;
                        vbar[2 * self.sample_index(t, i, jmy)] -= ub * inv2h;
                    }
                    if vb != 0.0 {
                        let ipx = u.ip(i);
                        let imx = u.im(i);
                        vbar[2 * self.sample_index(t, ipx, j)] -= vb * inv2h;
                        vbar[2 * self.sample_index(t, imx, j)] += vb * inv2h;
                    }
                    let pb = pbar[t].data[idx];
                    if pb != 0.0 {
                        vbar[2 * self.sample_index(t, i, j) + 1] += pb;
                    }
                }
            }
        }
        (l1bar, l2bar)
    }
}

impl DiscreteForm for NsInverseForm {
    fn sample_points(&self) -> &[Vec<f64>] {
        &self.points
    }
    fn n_components(&self) -> usize {
        2
    }
    fn residuals(&self, values: &[f64]) -> Result<DiscreteTerms> {
        self.residuals_with(values, self.lambda1, self.lambda2)
    }
}

impl NsInverseForm {
    /// Residual rows at explicit coefficient values.
    pub fn residuals_with(&self, values: &[f64], lambda1: f64, lambda2: f64) -> Result<DiscreteTerms> {
        let s = self.n_snapshots();
        let h_t = self.obs.h_t;
        let (psi, p) = self.fields_from_values(values);
        let vel: Vec<(Grid2, Grid2)> = psi.iter().map(velocity_from_stream).collect();

        let mut data: Vec<DiscreteRow> = Vec::with_capacity(s * self.omega1.len());
        for t in 0..s {
            let (u, v) = &vel[t];
            for &(i, j) in &self.omega1 {
                let idx = u.idx(i, j);
                data.push((
                    self.data_weight,
                    vec![
                        u.data[idx] - self.obs.u[t].data[idx],
                        v.data[idx] - self.obs.v[t].data[idx],
                    ],
                ));
            }
        }

        let mut pde: Vec<DiscreteRow> = Vec::with_capacity((s - 1) * self.omega2.len());
        for t in 0..s - 1 {
            let (uk, vk) = &vel[t];
            let (u, v) = &vel[t + 1];
            let (f, g) = momentum_residuals(uk, vk, u, v, &p[t + 1], lambda1, lambda2, h_t);
            for &(i, j) in &self.omega2 {
                pde.push((self.pde_weight, vec![f.at(i, j), g.at(i, j)]));
            }
        }

        let mut boundary: Vec<DiscreteRow> = Vec::with_capacity(s * self.omega2.len());
        for (u, v) in &vel {
            let div = divergence(u, v);
            for &(i, j) in &self.omega2 {
                boundary.push((self.div_weight, vec![div.at(i, j)]));
            }
        }

        Ok(DiscreteTerms {
            pde,
            boundary,
            data,
        })
    }
}

/// Training objective: the network maps (t, x, y) to (ψ, p); λ1 and λ2 ride
/// along as two extra trainable scalars (initialized by the caller).
pub struct NsInverseObjective {
    pub form: NsInverseForm,
    pub weights: crate::losses::LossWeights,
    flat_points: Vec<f64>,
}

impl NsInverseObjective {
    pub fn new(form: NsInverseForm, weights: crate::losses::LossWeights) -> Self {
        let flat_points = form
            .sample_points()
            .iter()
            .flat_map(|p| p.iter().cloned())
            .collect();
        NsInverseObjective {
            form,
            weights,
            flat_points,
        }
    }
}

impl crate::autodiff::Objective for NsInverseObjective {
    fn n_extra(&self) -> usize {
        2
    }

    fn loss(
        &self,
        net: &crate::network::Network,
        extra: &[f64],
    ) -> Result<crate::losses::LossBreakdown> {
        let n = self.form.sample_points().len();
        let values = crate::autodiff::eval_values(net, None, &self.flat_points, n)?;
        let terms = self.form.residuals_with(&values, extra[0], extra[1])?;
        crate::losses::sum_terms(&terms, &self.weights)
    }

    fn loss_and_gradient(
        &self,
        net: &crate::network::Network,
        extra: &[f64],
    ) -> Result<(crate::losses::LossBreakdown, Vec<f64>)> {
        let n = self.form.sample_points().len();
        let field = crate::autodiff::eval_field(net, None, &self.flat_points, n, false)?;
        let mut values = vec![0.0; 2 * n];
        for p in 0..n {
            values[2 * p] = field.value(p, 0);
            values[2 * p + 1] = field.value(p, 1);
        }
        let terms = self.form.residuals_with(&values, extra[0], extra[1])?;
        let loss = crate::losses::sum_terms(&terms, &self.weights)?;
        let mut vbar = vec![0.0; 2 * n];
        let (l1bar, l2bar) =
            self.form
                .value_adjoint_with(&values, extra[0], extra[1], &self.weights, &mut vbar);
        let mut grad = vec![0.0; net.param_count() + 2];
        let m = net.param_count();
        crate::autodiff::batch::backprop_field(
            net,
            None,
            &self.flat_points,
            &field,
            &vbar,
            &mut grad[..m],
        );
        grad[m] = l1bar;
        grad[m + 1] = l2bar;
        Ok((loss, grad))
    }
}

/// Inverse loss at explicit fields, the convenience entry for grid vectors.
pub fn ns_inverse_loss(
    values: &[f64],
    form: &NsInverseForm,
    w: &crate::losses::LossWeights,
) -> Result<crate::losses::LossBreakdown> {
    crate::losses::fd_loss(values, form, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_field_divergence_free_and_mean_zero() {
        let snap = ns_initial_field(32, 32);
        let div = divergence(&snap.u, &snap.v);
        assert!(div.max_abs() <= 1e-13, "div {}", div.max_abs());
        assert!(snap.u.mean().abs() <= 1e-14);
        assert!(snap.v.mean().abs() <= 1e-14);
    }

    #[test]
    fn initial_velocity_matches_analytic_derivative() {
        let snap = ns_initial_field(64, 64);
        let h = snap.u.h;
        // analytic ψ_y at a few nodes, compared to the central difference
        let psi_y = |x: f64, y: f64| {
            -1.00 * x.sin() * y.sin() - 0.30 * (2.0 * x).sin() * y.sin()
                - 0.40 * x.sin() * (2.0 * y).sin()
                - 0.30 * (2.0 * x).sin() * (2.0 * y).sin()
        };
        for (i, j) in [(3, 5), (10, 20), (40, 7)] {
            let exact = psi_y(i as f64 * h, j as f64 * h);
            let got = snap.u.at(i, j);
            assert!((got - exact).abs() <= h * h * 3.0, "{got} vs {exact}");
        }
    }

    #[test]
    fn zero_initial_field_stays_zero() {
        let nx = 8;
        let h = 2.0 * std::f64::consts::PI / nx as f64;
        let zero = FlowSnapshot {
            u: Grid2::zeros(nx, nx, h),
            v: Grid2::zeros(nx, nx, h),
            p: Grid2::zeros(nx, nx, h),
            time_index: 0,
        };
        let traj = ns_generate_data_from(zero, 1.0, 0.1, 0.1, 3).unwrap();
        for snap in &traj.snapshots {
            assert_eq!(snap.u.max_abs(), 0.0);
            assert_eq!(snap.v.max_abs(), 0.0);
        }
    }

    #[test]
    fn generator_divergence_and_energy() {
        let traj = ns_generate_data(1.0, 0.1, 0.1, 6, 16, 16).unwrap();
        assert_eq!(traj.snapshots.len(), 7);
        let mut prev_energy = f64::INFINITY;
        for snap in &traj.snapshots {
            let div = divergence(&snap.u, &snap.v);
            assert!(div.max_abs() <= 1e-8, "divergence {}", div.max_abs());
            let e = kinetic_energy(&snap.u, &snap.v);
            assert!(e <= prev_energy * (1.0 + 1e-12), "energy rose: {e} > {prev_energy}");
            prev_energy = e;
        }
    }

    #[test]
    fn generator_trajectory_satisfies_momentum_residual() {
        // the converged scheme should leave only fixed-point/CG tolerance
        let traj = ns_generate_data(1.0, 0.1, 0.1, 3, 16, 16).unwrap();
        for k in 0..3 {
            let a = &traj.snapshots[k];
            let b = &traj.snapshots[k + 1];
            let (f, g) = momentum_residuals(&a.u, &a.v, &b.u, &b.v, &b.p, 1.0, 0.1, 0.1);
            assert!(f.max_abs() <= 1e-6, "f residual {}", f.max_abs());
            assert!(g.max_abs() <= 1e-6, "g residual {}", g.max_abs());
        }
    }

    #[test]
    fn noise_statistics() {
        let traj = ns_generate_data(1.0, 0.1, 0.1, 6, 32, 32).unwrap();
        let obs = traj.observations();
        let noisy = inject_noise(&obs, 0.01, 7);
        let sigma_u = global_std(&obs.u);
        // empirical noise std within 10% of 0.01 σ_u
        let mut diffs = Vec::new();
        for (a, b) in noisy.u.iter().zip(&obs.u) {
            for (x, y) in a.data.iter().zip(&b.data) {
                diffs.push(x - y);
            }
        }
        let n = diffs.len() as f64;
        let mean = diffs.iter().sum::<f64>() / n;
        let std = (diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n).sqrt();
        assert!(
            (std - 0.01 * sigma_u).abs() <= 0.1 * 0.01 * sigma_u,
            "std {std} vs {}",
            0.01 * sigma_u
        );
        // u-noise and v-noise uncorrelated
        let mut diffs_v = Vec::new();
        for (a, b) in noisy.v.iter().zip(&obs.v) {
            for (x, y) in a.data.iter().zip(&b.data) {
                diffs_v.push(x - y);
            }
        }
        let mean_v = diffs_v.iter().sum::<f64>() / n;
        let std_v = (diffs_v.iter().map(|d| (d - mean_v) * (d - mean_v)).sum::<f64>() / n).sqrt();
        let mut cov = 0.0;
        for (a, b) in diffs.iter().zip(&diffs_v) {
            cov += (a - mean) * (b - mean_v);
        }
        cov /= n;
        let corr = cov / (std * std_v);
        assert!(corr.abs() <= 0.05, "corr {corr}");
        // fraction 0 → unchanged
        let same = inject_noise(&obs, 0.0, 7);
        assert_eq!(same.u[0].data, obs.u[0].data);
    }

    #[test]
    fn divergence_term_vanishes_for_stream_derived_velocities() {
        // velocities from any streamfunction make the divergence rows zero
        let traj = ns_generate_data(1.0, 0.1, 0.1, 2, 16, 16).unwrap();
        let form = NsInverseForm::new(traj.observations(), 1.0, 0.1, DEFAULT_W_DIV).unwrap();
        let n_pts = form.sample_points().len();
        // arbitrary smooth ψ, zero p
        let mut values = vec![0.0; 2 * n_pts];
        for t in 0..form.n_snapshots() {
            for i in 0..form.nx {
                for j in 0..form.ny {
                    let h = traj.snapshots[0].u.h;
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    values[2 * form.sample_index(t, i, j)] = (x + 0.3 * t as f64).sin() * y.cos();
                }
            }
        }
        let terms = form.residuals(&values).unwrap();
        for (_, r) in &terms.boundary {
            assert!(r[0].abs() <= 1e-12, "divergence row {}", r[0]);
        }
    }

    #[test]
    fn exact_observations_zero_data_term() {
        // build a ψ whose derived velocities equal the observations is hard in
        // general; instead check the data rows at the observation-generating
        // trajectory expressed through its own ψ is small — here we take the
        // simpler exact check: observations equal to derived velocities.
        let traj = ns_generate_data(1.0, 0.1, 0.1, 2, 16, 16).unwrap();
        let mut form = NsInverseForm::new(traj.observations(), 1.0, 0.1, 0.0).unwrap();
        // synthesize values, then overwrite observations with the derived
        // velocities so the data rows vanish identically
        let n_pts = form.sample_points().len();
        let mut values = vec![0.0; 2 * n_pts];
        for t in 0..form.n_snapshots() {
            for i in 0..form.nx {
                for j in 0..form.ny {
                    let h = traj.snapshots[0].u.h;
                    let (x, y) = (i as f64 * h, j as f64 * h);
                    values[2 * form.sample_index(t, i, j)] = (x * 0.7).cos() * (y + 0.1).sin();
                }
            }
        }
        let (psi, _) = form.fields_from_values(&values);
        for t in 0..form.n_snapshots() {
            let (u, v) = velocity_from_stream(&psi[t]);
            form.obs.u[t] = u;
            form.obs.v[t] = v;
        }
        let terms = form.residuals(&values).unwrap();
        for (_, r) in &terms.data {
            assert_eq!(r[0], 0.0);
            assert_eq!(r[1], 0.0);
        }
    }

    #[test]
    fn residuals_match_independent_summation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(3);
        let nx = 8;
        let h = 2.0 * std::f64::consts::PI / nx as f64;
        let rand_grid = |rng: &mut rand_chacha::ChaCha12Rng| {
            let mut g = Grid2::zeros(nx, nx, h);
            for v in &mut g.data {
                *v = rng.random_range(-1.0..1.0);
            }
            g
        };
        let psi: Vec<Grid2> = (0..3).map(|_| rand_grid(&mut rng)).collect();
        let p: Vec<Grid2> = (0..3).map(|_| rand_grid(&mut rng)).collect();
        let (l1, l2, ht) = (0.8, 0.3, 0.05);
        let (fs, gs) = ns_residuals_fd(&psi, &p, l1, l2, ht).unwrap();

        // independent oracle: index arithmetic written out longhand
        let wrap = |k: isize| -> usize { (((k % nx as isize) + nx as isize) % nx as isize) as usize };
        let at = |g: &Grid2, i: isize, j: isize| g.at(wrap(i), wrap(j));
        for k in 0..2 {
            let (uk, vk) = velocity_from_stream(&psi[k]);
            let (u, v) = velocity_from_stream(&psi[k + 1]);
            for i in 2..nx as isize - 2 {
                for j in 2..nx as isize - 2 {
                    let ux = (at(&u, i + 1, j) - at(&u, i - 1, j)) / (2.0 * h);
                    let uy = (at(&u, i, j + 1) - at(&u, i, j - 1)) / (2.0 * h);
                    let lap = (at(&u, i + 1, j)
                        + at(&u, i - 1, j)
                        + at(&u, i, j + 1)
                        + at(&u, i, j - 1)
                        - 4.0 * at(&u, i, j))
                        / (h * h);
                    let px = (at(&p[k + 1], i + 1, j) - at(&p[k + 1], i - 1, j)) / (2.0 * h);
                    let f_oracle = (at(&u, i, j) - at(&uk, i, j)) / ht
                        + l1 * (at(&u, i, j) * ux + at(&v, i, j) * uy)
                        + px
                        - l2 * lap;
                    let got = fs[k].at(i as usize, j as usize);
                    assert!(
                        (got - f_oracle).abs() <= 1e-13 * (1.0 + f_oracle.abs()),
                        "{got} vs {f_oracle}"
                    );
                    let _ = (&vk, &gs);
                }
            }
        }
    }
}
