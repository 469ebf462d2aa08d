//! Batched forward/backward engine.
//!
//! Points are evaluated in fixed-size chunks. Within a chunk, every layer is
//! one GEMM over a matrix whose columns are per-point channel groups: a value
//! column, `d` gradient columns, and `d(d+1)/2` packed Hessian columns when
//! second-order jets are propagated. The affine map applies to all channels
//! (bias only to the value column); activations mix channels per neuron via
//! the chain rule. Reverse accumulation walks the same structure backwards,
//! so parameter gradients of jet-based objectives are exact.
//!
//! Chunk size is a fixed constant and chunk results are combined in index
//! order, which makes every reduction independent of thread scheduling.

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::network::{Constraint, Network};
use rayon::prelude::*;

/// Points per chunk for value-only batches.
pub const VALUE_CHUNK: usize = 256;
/// Points per chunk for jet batches.
pub const JET_CHUNK: usize = 128;

pub fn packed_len(d: usize) -> usize {
    d * (d + 1) / 2
}

/// Index of the (i, j) Hessian entry (any order) in packed storage.
#[inline]
pub fn packed_index(d: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    (i * (2 * d - i + 1)) / 2 + (j - i)
}

/// Columns per point: 1 for values, 1 + d + d(d+1)/2 with jets.
pub fn cols_per_point(d: usize, jet: bool) -> usize {
    if jet {
        1 + d + packed_len(d)
    } else {
        1
    }
}

// Row-major GEMM wrappers over matrixmultiply.
fn gemm_nn(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// c (m×n) = alpha · a (m×k) · bᵀ where b is n×k row-major.
fn gemm_nt(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha,
            a.as_ptr(), k as isize, 1,
            b.as_ptr(), 1, k as isize,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// c (m×n) = alpha · aᵀ · b where a is k×m row-major.
fn gemm_tn(m: usize, k: usize, n: usize, alpha: f64, a: &[f64], b: &[f64], beta: f64, c: &mut [f64]) {
    unsafe {
        matrixmultiply::dgemm(
            m, k, n, alpha,
            a.as_ptr(), 1, m as isize,
            b.as_ptr(), n as isize, 1,
            beta,
            c.as_mut_ptr(), n as isize, 1,
        );
    }
}

/// Stored forward state of one chunk: pre-activations and layer inputs.
struct Trace {
    /// post[0] is the input matrix; post[i] the activation output of hidden
    /// layer i (1-based); all widths[i] × cols row-major.
    post: Vec<Vec<f64>>,
    /// pre[i] is the pre-activation of hidden layer i+1.
    pre: Vec<Vec<f64>>,
    /// Raw network output, c × cols.
    out: Vec<f64>,
    cols: usize,
}

struct Chunk {
    start: usize,
    len: usize,
    trace: Trace,
}

/// Batched evaluation of a (possibly constrained) network over a point set.
///
/// `out` holds the wrapped outputs point-major: for point `p`, a block of
/// `cpp·c` floats laid out column-group-major (`(col·c + component)`), where
/// column 0 is the value, columns 1..=d the gradient, and the rest the packed
/// Hessian.
pub struct FieldEval {
    pub d: usize,
    pub c: usize,
    pub cpp: usize,
    pub n_points: usize,
    pub jet: bool,
    pub out: Vec<f64>,
    chunks: Vec<Chunk>,
}

impl FieldEval {
    #[inline]
    pub fn block(&self, p: usize) -> &[f64] {
        let s = p * self.cpp * self.c;
        &self.out[s..s + self.cpp * self.c]
    }

    #[inline]
    pub fn value(&self, p: usize, comp: usize) -> f64 {
        self.out[p * self.cpp * self.c + comp]
    }
}

fn forward_chunk(
    net: &Network,
    points: &[f64],
    d: usize,
    start: usize,
    len: usize,
    jet: bool,
) -> Result<Trace> {
    let cpp = cols_per_point(d, jet);
    let cols = len * cpp;
    let widths = net.widths();
    let depth = net.depth();
    let act = net.activation();
    let nh = packed_len(d);

    // Input matrix: values, identity gradient, zero Hessian.
    let mut x0 = vec![0.0; d * cols];
    for p in 0..len {
        let z = &points[(start + p) * d..(start + p + 1) * d];
        let base = p * cpp;
        for r in 0..d {
            x0[r * cols + base] = z[r];
            if jet {
                x0[r * cols + base + 1 + r] = 1.0;
            }
        }
    }

    let mut post = vec![x0];
    let mut pre: Vec<Vec<f64>> = Vec::with_capacity(depth.saturating_sub(1));

    for layer in 0..depth {
        let (w, b) = net.layer(layer);
        let (din, dout) = (widths[layer], widths[layer + 1]);
        let mut a = vec![0.0; dout * cols];
        gemm_nn(dout, din, cols, 1.0, w, &post[layer], 0.0, &mut a);
        // bias on value columns only
        for r in 0..dout {
            let row = &mut a[r * cols..(r + 1) * cols];
            for p in 0..len {
                row[p * cpp] += b[r];
            }
        }

        if layer + 1 == depth {
            return Ok(Trace {
                post,
                pre,
                out: a,
                cols,
            });
        }

        // activation
        let mut y = vec![0.0; dout * cols];
        for r in 0..dout {
            let arow = &a[r * cols..(r + 1) * cols];
            let yrow = &mut y[r * cols..(r + 1) * cols];
            for p in 0..len {
                let base = p * cpp;
                let v = arow[base];
                if jet {
                    if act == Activation::ReLU && v == 0.0 {
                        return Err(Error::KinkAtPoint {
                            layer: layer + 1,
                            unit: r,
                        });
                    }
                    let (s0, s1, s2) = act.d012(v);
                    yrow[base] = s0;
                    for i in 0..d {
                        yrow[base + 1 + i] = s1 * arow[base + 1 + i];
                    }
                    let mut idx = 0;
                    for i in 0..d {
                        for j in i..d {
                            let gij = arow[base + 1 + i] * arow[base + 1 + j];
                            yrow[base + 1 + d + idx] = s1 * arow[base + 1 + d + idx] + s2 * gij;
                            idx += 1;
                        }
                    }
                    debug_assert_eq!(idx, nh);
                } else {
                    yrow[base] = act.value(v);
                }
            }
        }
        pre.push(a);
        post.push(y);
    }
    unreachable!("depth >= 1");
}

/// Adjoint of the activation step followed by the affine map, accumulating
/// parameter gradients. `dy` enters as the adjoint of this chunk's raw
/// output and leaves as the adjoint of the chunk input.
fn backward_chunk(
    net: &Network,
    trace: &Trace,
    d: usize,
    jet: bool,
    dy: Vec<f64>,
    grad: &mut [f64],
) {
    let widths = net.widths();
    let depth = net.depth();
    let act = net.activation();
    let cols = trace.cols;
    let cpp = cols_per_point(d, jet);
    let len = cols / cpp;

    let mut dcur = dy; // adjoint of current layer output (starts at raw out)
    for layer in (0..depth).rev() {
        let (w, _b) = net.layer(layer);
        let (din, dout) = (widths[layer], widths[layer + 1]);
        let off = net.layer_offset(layer);

        // If this is a hidden layer output, convert post-activation adjoint
        // to pre-activation adjoint first.
        let dpre = if layer + 1 == depth {
            dcur
        } else {
            let a = &trace.pre[layer];
            let mut dp = dcur;
            for r in 0..dout {
                let arow = &a[r * cols..(r + 1) * cols];
                let drow = &mut dp[r * cols..(r + 1) * cols];
                for p in 0..len {
                    let base = p * cpp;
                    let v = arow[base];
                    if jet {
                        let s1 = act.derivative(v, 1);
                        let s2 = act.derivative(v, 2);
                        let s3 = act.derivative(v, 3);
                        let mut vbar = drow[base] * s1;
                        // gradient channels
                        for i in 0..d {
                            let g = arow[base + 1 + i];
                            vbar += drow[base + 1 + i] * s2 * g;
                        }
                        // packed Hessian channels
                        let mut idx = 0;
                        for i in 0..d {
                            for j in i..d {
                                let hbar = drow[base + 1 + d + idx];
                                let gi = arow[base + 1 + i];
                                let gj = arow[base + 1 + j];
                                let h = arow[base + 1 + d + idx];
                                vbar += hbar * (s2 * h + s3 * gi * gj);
                                idx += 1;
                            }
                        }
                        // gradient adjoints: s1 pass-through plus s2 g-coupling
                        let mut gbar = [0.0f64; 8];
                        debug_assert!(d <= 8);
                        for i in 0..d {
                            gbar[i] = s1 * drow[base + 1 + i];
                        }
                        idx = 0;
                        for i in 0..d {
                            for j in i..d {
                                let hbar = drow[base + 1 + d + idx];
                                if i == j {
                                    gbar[i] += 2.0 * s2 * hbar * arow[base + 1 + i];
                                } else {
                                    gbar[i] += s2 * hbar * arow[base + 1 + j];
                                    gbar[j] += s2 * hbar * arow[base + 1 + i];
                                }
                                idx += 1;
                            }
                        }
                        // Hessian adjoints: s1 pass-through
                        idx = 0;
                        for i in 0..d {
                            for j in i..d {
                                drow[base + 1 + d + idx] *= s1;
                                let _ = j;
                                idx += 1;
                            }
                        }
                        drow[base] = vbar;
                        for i in 0..d {
                            drow[base + 1 + i] = gbar[i];
                        }
                    } else {
                        let s1 = act.derivative(v, 1);
                        drow[base] *= s1;
                    }
                }
            }
            dp
        };

        // Parameter gradients: dW += dPre · Xᵀ, db += Σ value columns.
        let x = &trace.post[layer];
        gemm_nt(
            dout,
            cols,
            din,
            1.0,
            &dpre,
            x,
            1.0,
            &mut grad[off..off + dout * din],
        );
        let boff = off + dout * din;
        for r in 0..dout {
            let row = &dpre[r * cols..(r + 1) * cols];
            let mut acc = 0.0;
            for p in 0..len {
                acc += row[p * cpp];
            }
            grad[boff + r] += acc;
        }

        if layer == 0 {
            break;
        }
        // Input adjoint: dX = Wᵀ · dPre
        let mut dx = vec![0.0; din * cols];
        gemm_tn(din, dout, cols, 1.0, w, &dpre, 0.0, &mut dx);
        dcur = dx;
    }
}

/// Evaluate `net` (optionally behind a hard constraint) at `n_points` points
/// stored point-major in `points`.
pub fn eval_field(
    net: &Network,
    constraint: Option<&Constraint>,
    points: &[f64],
    n_points: usize,
    jet: bool,
) -> Result<FieldEval> {
    let d = net.input_dim();
    let c = net.output_dim();
    assert_eq!(points.len(), n_points * d, "points buffer shape");
    let cpp = cols_per_point(d, jet);
    let chunk_pts = if jet { JET_CHUNK } else { VALUE_CHUNK };

    let ranges: Vec<(usize, usize)> = (0..n_points)
        .step_by(chunk_pts.max(1))
        .map(|s| (s, chunk_pts.min(n_points - s)))
        .collect();

    let traces: Result<Vec<Trace>> = ranges
        .par_iter()
        .map(|&(start, len)| forward_chunk(net, points, d, start, len, jet))
        .collect();
    let traces = traces?;

    let mut out = vec![0.0; n_points * cpp * c];
    for (t, &(start, len)) in traces.iter().zip(&ranges) {
        let cols = t.cols;
        for p in 0..len {
            let dst = &mut out[(start + p) * cpp * c..(start + p + 1) * cpp * c];
            for col in 0..cpp {
                for k in 0..c {
                    dst[col * c + k] = t.out[k * cols + p * cpp + col];
                }
            }
        }
    }

    let mut field = FieldEval {
        d,
        c,
        cpp,
        n_points,
        jet,
        out,
        chunks: ranges
            .into_iter()
            .zip(traces)
            .map(|((start, len), trace)| Chunk { start, len, trace })
            .collect(),
    };

    if let Some(cons) = constraint {
        apply_constraint_forward(cons, points, &mut field);
    }

    for v in &field.out {
        if !v.is_finite() {
            return Err(Error::NonFinite);
        }
    }
    Ok(field)
}

/// Reverse pass: `adjoint` has the same layout as `field.out` (adjoint of the
/// wrapped outputs); parameter gradients are accumulated into `grad`.
pub fn backprop_field(
    net: &Network,
    constraint: Option<&Constraint>,
    points: &[f64],
    field: &FieldEval,
    adjoint: &[f64],
    grad: &mut [f64],
) {
    assert_eq!(adjoint.len(), field.out.len());
    assert_eq!(grad.len(), net.param_count());
    let (d, c, cpp) = (field.d, field.c, field.cpp);

    let mut adj = adjoint.to_vec();
    if let Some(cons) = constraint {
        apply_constraint_adjoint(cons, points, field, &mut adj);
    }

    let partials: Vec<Vec<f64>> = field
        .chunks
        .par_iter()
        .map(|chunk| {
            let cols = chunk.trace.cols;
            let mut dy = vec![0.0; c * cols];
            for p in 0..chunk.len {
                let src = &adj[(chunk.start + p) * cpp * c..(chunk.start + p + 1) * cpp * c];
                for col in 0..cpp {
                    for k in 0..c {
                        dy[k * cols + p * cpp + col] = src[col * c + k];
                    }
                }
            }
            let mut g = vec![0.0; net.param_count()];
            backward_chunk(net, &chunk.trace, d, field.jet, dy, &mut g);
            g
        })
        .collect();

    for part in partials {
        for (dst, src) in grad.iter_mut().zip(part) {
            *dst += src;
        }
    }
}

/// Jet transform of the wrapped output in terms of the base jet and the
/// constraint-field jets (product/sum rule; linear in the base jet).
fn apply_constraint_forward(cons: &Constraint, points: &[f64], field: &mut FieldEval) {
    let (d, c, cpp) = (field.d, field.c, field.cpp);
    let jet = field.jet;
    for p in 0..field.n_points {
        let z = &points[p * d..(p + 1) * d];
        let block = &mut field.out[p * cpp * c..(p + 1) * cpp * c];
        match cons {
            Constraint::MultiplicativeMask(m) => {
                let (mv, mg, mh) = m.jet(z);
                transform_block(block, d, c, jet, mv, &mg, &mh, None);
            }
            Constraint::AdditiveAnchor { offset, scale } => {
                let (sv, sg, sh) = scale.jet(z);
                let g0 = offset.jet(z);
                transform_block(block, d, c, jet, sv, &sg, &sh, Some(&g0));
            }
        }
    }
}

/// wrapped = s·base (+ g0), with s and g0 functions of z:
///   v' = s v (+ g0)
///   g'_i = s g_i + v s_i (+ g0_i)
///   h'_ij = s h_ij + s_i g_j + s_j g_i + v s_ij (+ g0_ij)
fn transform_block(
    block: &mut [f64],
    d: usize,
    c: usize,
    jet: bool,
    sv: f64,
    sg: &[f64],
    sh: &[f64],
    g0: Option<&[(f64, Vec<f64>, Vec<f64>)]>,
) {
    let base: Vec<f64> = block.to_vec();
    let val = |col: usize, k: usize| base[col * c + k];
    for k in 0..c {
        let v = val(0, k);
        block[k] = sv * v + g0.map_or(0.0, |g| g[k].0);
        if jet {
            for i in 0..d {
                block[(1 + i) * c + k] =
                    sv * val(1 + i, k) + v * sg[i] + g0.map_or(0.0, |g| g[k].1[i]);
            }
            let mut idx = 0;
            for i in 0..d {
                for j in i..d {
                    block[(1 + d + idx) * c + k] = sv * val(1 + d + idx, k)
                        + sg[i] * val(1 + j, k)
                        + sg[j] * val(1 + i, k)
                        + v * sh[i * d + j]
                        + g0.map_or(0.0, |g| g[k].2[i * d + j]);
                    idx += 1;
                }
            }
        }
    }
}

/// Adjoint of `transform_block`: linear in the base jet, so only the
/// constraint-field jets are needed.
fn apply_constraint_adjoint(cons: &Constraint, points: &[f64], field: &FieldEval, adj: &mut [f64]) {
    let (d, c, cpp) = (field.d, field.c, field.cpp);
    let jet = field.jet;
    for p in 0..field.n_points {
        let z = &points[p * d..(p + 1) * d];
        let block = &mut adj[p * cpp * c..(p + 1) * cpp * c];
        let (sv, sg, sh) = match cons {
            Constraint::MultiplicativeMask(m) => m.jet(z),
            Constraint::AdditiveAnchor { scale, .. } => scale.jet(z),
        };
        let bar: Vec<f64> = block.to_vec();
        let wbar = |col: usize, k: usize| bar[col * c + k];
        for k in 0..c {
            let mut vbar = sv * wbar(0, k);
            if jet {
                for i in 0..d {
                    vbar += wbar(1 + i, k) * sg[i];
                }
                let mut idx = 0;
                for i in 0..d {
                    for j in i..d {
                        vbar += wbar(1 + d + idx, k) * sh[i * d + j];
                        idx += 1;
                    }
                }
                let mut gbar = vec![0.0; d];
                for i in 0..d {
                    gbar[i] = sv * wbar(1 + i, k);
                }
                idx = 0;
                for i in 0..d {
                    for j in i..d {
                        let hb = wbar(1 + d + idx, k);
                        if i == j {
                            gbar[i] += 2.0 * sg[i] * hb;
                        } else {
                            gbar[i] += sg[j] * hb;
                            gbar[j] += sg[i] * hb;
                        }
                        idx += 1;
                    }
                }
                for i in 0..d {
                    block[(1 + i) * c + k] = gbar[i];
                }
                idx = 0;
                for i in 0..d {
                    for j in i..d {
                        let _ = j;
                        block[(1 + d + idx) * c + k] = sv * wbar(1 + d + idx, k);
                        idx += 1;
                    }
                }
            }
            block[k] = vbar;
        }
    }
}
