//! Discrete point sets: the slit-domain classification, periodic grids, the
//! space-time lattice for the Schrödinger problem, and quadrature weights.

use crate::error::{Error, Result};

/// Interior points Ω^h, boundary points Γ^h, data points 𝒟^h with targets,
/// and per-point quadrature weights (defaults 1/|Ω^h|, 1/|Γ^h|, 1/|𝒟^h|).
#[derive(Debug, Clone)]
pub struct CollocationSet {
    pub interior: Vec<Vec<f64>>,
    pub boundary: Vec<Vec<f64>>,
    pub data: Vec<(Vec<f64>, Vec<f64>)>,
    pub w_interior: Vec<f64>,
    pub w_boundary: Vec<f64>,
    pub w_data: Vec<f64>,
}

impl CollocationSet {
    pub fn new(
        interior: Vec<Vec<f64>>,
        boundary: Vec<Vec<f64>>,
        data: Vec<(Vec<f64>, Vec<f64>)>,
    ) -> Self {
        let w_interior = uniform_weights(interior.len());
        let w_boundary = uniform_weights(boundary.len());
        let w_data = uniform_weights(data.len());
        CollocationSet {
            interior,
            boundary,
            data,
            w_interior,
            w_boundary,
            w_data,
        }
    }

    pub fn dim(&self) -> usize {
        self.interior
            .first()
            .or(self.boundary.first())
            .map(|p| p.len())
            .unwrap_or(0)
    }

    /// Checks Ω^h ∩ Γ^h = ∅, pairwise distinctness within each list, and
    /// positive weights. Exact coordinate comparison (points come from grid
    /// construction, not arithmetic).
    pub fn validate(&self) -> Result<()> {
        let key = |p: &[f64]| -> Vec<u64> { p.iter().map(|v| v.to_bits()).collect() };
        let mut interior: std::collections::HashSet<Vec<u64>> = Default::default();
        for p in &self.interior {
            if !interior.insert(key(p)) {
                return Err(Error::DimensionMismatch("duplicate interior point".into()));
            }
        }
        let mut boundary: std::collections::HashSet<Vec<u64>> = Default::default();
        for p in &self.boundary {
            if !boundary.insert(key(p)) {
                return Err(Error::DimensionMismatch("duplicate boundary point".into()));
            }
            if interior.contains(&key(p)) {
                return Err(Error::DimensionMismatch(
                    "interior and boundary sets overlap".into(),
                ));
            }
        }
        if self
            .w_interior
            .iter()
            .chain(&self.w_boundary)
            .chain(&self.w_data)
            .any(|w| *w <= 0.0)
        {
            return Err(Error::DimensionMismatch("non-positive weight".into()));
        }
        Ok(())
    }

    /// All points, interior first. Fixed order used by loss summation.
    pub fn all_points(&self) -> Vec<Vec<f64>> {
        let mut pts = self.interior.clone();
        pts.extend(self.boundary.iter().cloned());
        pts
    }

    pub fn export_csv(&self, mut w: impl std::io::Write) -> std::io::Result<()> {
        let d = self.dim();
        let cols: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
        writeln!(w, "{},class", cols.join(","))?;
        for p in &self.interior {
            let coords: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{},interior", coords.join(","))?;
        }
        for p in &self.boundary {
            let coords: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
            writeln!(w, "{},boundary", coords.join(","))?;
        }
        Ok(())
    }
}

fn uniform_weights(n: usize) -> Vec<f64> {
    if n == 0 {
        Vec::new()
    } else {
        vec![1.0 / n as f64; n]
    }
}

/// Uniform tensor grid; coordinates are always `origin + index·spacing` in a
/// single multiply-add so classification by exact comparison is reproducible.
#[derive(Debug, Clone)]
pub struct StructuredGrid {
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    /// Nodes per axis.
    pub shape: Vec<usize>,
    pub periodic: Vec<bool>,
    /// Ghost convention recorded for the Schrödinger lattice:
    /// x_{-1} := x_{shape-2} (wraps one node short of the duplicated end).
    pub ghost_wrap: bool,
}

impl StructuredGrid {
    pub fn coord(&self, axis: usize, index: usize) -> f64 {
        self.origin[axis] + (index as f64) * self.spacing[axis]
    }

    pub fn point(&self, index: &[usize]) -> Vec<f64> {
        index
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(a, i))
            .collect()
    }

    /// Wrap-around index arithmetic on a periodic axis.
    pub fn wrap(&self, axis: usize, index: isize) -> usize {
        let n = self.shape[axis] as isize;
        debug_assert!(self.periodic[axis]);
        (((index % n) + n) % n) as usize
    }

    pub fn node_count(&self) -> usize {
        self.shape.iter().product()
    }
}

/// Node classes of the slit domain Ω = (−1,1)² ∖ ([0,1)×{0}).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlitClass {
    Interior,
    Outer,
    Slit,
}

/// Slit-domain discretization with mesh size h; returns the grid, the
/// per-node classification (row-major, x fastest), and the collocation set.
///
/// Slit membership uses exact comparison y = 0 and 0 ≤ x < 1 on constructed
/// grid coordinates; the point (1,0) is outer boundary.
pub fn build_slit_domain(h: f64) -> Result<(StructuredGrid, Vec<SlitClass>, CollocationSet)> {
    if !(h > 0.0) {
        return Err(Error::NonIntegralMesh(h));
    }
    let n_exact = 2.0 / h;
    let n = n_exact.round();
    if (n_exact - n).abs() > 1e-9 * (1.0 + n_exact.abs()) || n < 1.0 {
        return Err(Error::NonIntegralMesh(h));
    }
    let n = n as usize;
    let grid = StructuredGrid {
        origin: vec![-1.0, -1.0],
        spacing: vec![h, h],
        shape: vec![n + 1, n + 1],
        periodic: vec![false, false],
        ghost_wrap: false,
    };

    let mut classes = Vec::with_capacity((n + 1) * (n + 1));
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for j in 0..=n {
        let y = grid.coord(1, j);
        for i in 0..=n {
            let x = grid.coord(0, i);
            let class = if i == 0 || i == n || j == 0 || j == n {
                SlitClass::Outer
            } else if y == 0.0 && x >= 0.0 && x < 1.0 {
                SlitClass::Slit
            } else {
                SlitClass::Interior
            };
            classes.push(class);
            match class {
                SlitClass::Interior => interior.push(vec![x, y]),
                _ => boundary.push(vec![x, y]),
            }
        }
    }
    if interior.is_empty() {
        return Err(Error::MeshTooCoarse);
    }
    let colloc = CollocationSet::new(interior, boundary, Vec::new());
    Ok((grid, classes, colloc))
}

/// Periodic square/rectangular grid with nodes i·(length/n).
pub fn build_periodic_grid(n: &[usize], length: &[f64]) -> StructuredGrid {
    assert!(n.iter().all(|&k| k >= 3), "periodic grid needs n >= 3");
    StructuredGrid {
        origin: vec![0.0; n.len()],
        spacing: n
            .iter()
            .zip(length)
            .map(|(&k, &l)| l / k as f64)
            .collect(),
        shape: n.to_vec(),
        periodic: vec![true; n.len()],
        ghost_wrap: false,
    }
}

/// Space-time lattice for the Schrödinger problem: t_k = k·2π/T (k = 0..T),
/// x_j = −5 + j·10/N (j = 0..N), with the ghost identification
/// x_{−1} := x_{N−1} recorded on the grid.
pub fn build_interval_grid(n_space: usize, n_time: usize) -> StructuredGrid {
    assert!(n_space >= 1 && n_time >= 1);
    StructuredGrid {
        origin: vec![0.0, -5.0],
        spacing: vec![
            2.0 * std::f64::consts::PI / n_time as f64,
            10.0 / n_space as f64,
        ],
        shape: vec![n_time + 1, n_space + 1],
        periodic: vec![false, false],
        ghost_wrap: true,
    }
}

/// Core subgrids for residuals on a periodic spatial grid with `snapshots`
/// saved time levels: Ω^h_1 trims one cell at each spatial boundary, Ω^h_2
/// trims two, and T^h_core keeps the time indices admitting a forward
/// difference (final snapshot excluded).
pub fn core_subgrids(
    nx: usize,
    ny: usize,
    snapshots: usize,
) -> Result<(Vec<(usize, usize)>, Vec<(usize, usize)>, Vec<usize>)> {
    if nx < 5 || ny < 5 || snapshots < 2 {
        return Err(Error::GridTooSmall);
    }
    let mut omega1 = Vec::new();
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            omega1.push((i, j));
        }
    }
    let mut omega2 = Vec::new();
    for i in 2..nx - 2 {
        for j in 2..ny - 2 {
            omega2.push((i, j));
        }
    }
    let t_core: Vec<usize> = (0..snapshots - 1).collect();
    Ok((omega1, omega2, t_core))
}
