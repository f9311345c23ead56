//! The element-wise ADER-DG tasks: predict, extrapolate, solveRiemann,
//! integrateVolume, integrateFace, update and calcTimeStep.
//!
//! Data layouts (`N = (p+1)^d` spatial nodes, axis 0 fastest):
//! - spatial block: `[node][component]`
//! - space-time block: `[time node][node][component]`
//! - space-time flux: `[axis][time node][node][component]`
//! - face block: `[time node][transverse node][component]`, transverse
//!   nodes ordered by the remaining axes in increasing order.

use thiserror::Error;

use crate::basis::{Basis1D, BasisError};
use crate::mesh::{FaceHull, HullSide};
use crate::pde::PdeSystem;

/// Relative Picard tolerance, scaled by `1 + |Q_h|_inf`.
pub const PICARD_TOLERANCE: f64 = 1e-10;

/// Default Courant number of the admissible step formula.
pub const DEFAULT_CFL: f64 = 0.9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("space-time predictor produced non-finite values in cell {cell}")]
    PredictorFailure { cell: usize },
    #[error("scheduling-order violation: {0}")]
    SchedulingOrder(String),
    #[error("inadmissible trace on face: {0}")]
    Inadmissible(String),
}

/// Transient predictor output of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimePolynomial {
    pub q: Vec<f64>,
    pub flux: Vec<f64>,
    pub dt: f64,
    /// Picard iterations used; 0 for the degenerate zero-length interval.
    pub iterations: usize,
}

impl SpaceTimePolynomial {
    pub fn len(&self) -> usize {
        self.q.len() + self.flux.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Precomputed 1-D operators for one `(d, p, m, h)` configuration.
#[derive(Debug, Clone)]
pub struct Operators {
    basis: Basis1D,
    dim: usize,
    order: usize,
    components: usize,
    h: f64,
    n1: usize,
    nodes: usize,
    transverse: usize,
    /// `w_j D[j][k] / w_k`, row `k`
    volume: Vec<f64>,
    time_inverse: Vec<f64>,
    time_init: Vec<f64>,
    /// Per axis and spatial node: (index along axis, transverse node).
    face_map: Vec<Vec<(usize, usize)>>,
}

impl Operators {
    pub fn new(dim: usize, order: usize, components: usize, h: f64) -> Result<Self, BasisError> {
        let basis = Basis1D::new(order)?;
        let n1 = order + 1;
        let nodes = n1.pow(dim as u32);
        let w = basis.weights();
        let dm = basis.derivative_matrix();
        let mut volume = vec![0.0; n1 * n1];
        for k in 0..n1 {
            for j in 0..n1 {
                volume[k * n1 + j] = w[j] * dm[j * n1 + k] / w[k];
            }
        }
        let (time_inverse, time_init) = basis.time_iteration_operator();
        let face_map = (0..dim)
            .map(|a| {
                (0..nodes)
                    .map(|node| {
                        let mut tn = 0;
                        let mut stride = 1;
                        let mut along = 0;
                        for b in 0..dim {
                            let ib = (node / n1.pow(b as u32)) % n1;
                            if b == a {
                                along = ib;
                            } else {
                                tn += ib * stride;
                                stride *= n1;
                            }
                        }
                        (along, tn)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            basis,
            dim,
            order,
            components,
            h,
            n1,
            nodes,
            transverse: n1.pow(dim as u32 - 1),
            volume,
            time_inverse,
            time_init,
            face_map,
        })
    }

    pub fn basis(&self) -> &Basis1D {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn cell_width(&self) -> f64 {
        self.h
    }

    pub fn spatial_nodes(&self) -> usize {
        self.nodes
    }

    /// `m (p+1)^d`
    pub fn block(&self) -> usize {
        self.nodes * self.components
    }

    /// `m (p+1)^(d+1)`
    pub fn space_time_block(&self) -> usize {
        self.block() * self.n1
    }

    /// Face block size, `m (p+1)^(d-1) (p+1)`.
    pub fn face_block(&self) -> usize {
        self.transverse * self.n1 * self.components
    }

    /// Multi-index of a spatial node.
    pub fn node_index(&self, node: usize) -> Vec<usize> {
        (0..self.dim).map(|a| (node / self.n1.pow(a as u32)) % self.n1).collect()
    }

    /// Reference coordinates in `(0,1)^d` of a spatial node.
    pub fn node_position(&self, node: usize) -> Vec<f64> {
        self.node_index(node).into_iter().map(|i| self.basis.nodes()[i]).collect()
    }

    /// `out[node] = sum_j mat[i_a(node)][j] src[node with i_a = j]`
    fn apply_along_axis(&self, mat: &[f64], src: &[f64], dst: &mut [f64], axis: usize) {
        let m = self.components;
        let n1 = self.n1;
        let stride = n1.pow(axis as u32);
        for node in 0..self.nodes {
            let ia = (node / stride) % n1;
            let base = node - ia * stride;
            let row = &mat[ia * n1..(ia + 1) * n1];
            for c in 0..m {
                let mut acc = 0.0;
                for (j, r) in row.iter().enumerate() {
                    acc += r * src[(base + j * stride) * m + c];
                }
                dst[node * m + c] = acc;
            }
        }
    }

    fn fill_flux<S: PdeSystem + ?Sized>(&self, sys: &S, q: &[f64], flux: &mut [f64]) {
        let m = self.components;
        let st = self.space_time_block();
        for a in 0..self.dim {
            let fa = &mut flux[a * st..(a + 1) * st];
            for (qn, fn_) in q.chunks_exact(m).zip(fa.chunks_exact_mut(m)) {
                sys.flux_into(qn, a, fn_);
            }
        }
    }
}

/// Space-time predictor by Picard iteration on the collocated weak form.
///
/// A zero time step returns `Q_h` replicated at every time node.
pub fn predict<S: PdeSystem + ?Sized>(
    ops: &Operators,
    sys: &S,
    q_h: &[f64],
    dt: f64,
    cell: usize,
) -> Result<SpaceTimePolynomial, KernelError> {
    let n1 = ops.n1;
    let block = ops.block();
    let st = ops.space_time_block();
    let mut q = vec![0.0; st];
    for t in 0..n1 {
        q[t * block..(t + 1) * block].copy_from_slice(q_h);
    }
    let mut flux = vec![0.0; ops.dim * st];
    let mut iterations = 0;

    if dt != 0.0 {
        let scale = 1.0 + q_h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let tol = PICARD_TOLERANCE * scale;
        let cap = 2 * (ops.order + 1);
        let w = ops.basis.weights();
        let inv_h = 1.0 / ops.h;
        let mut div = vec![0.0; st];
        let mut deriv = vec![0.0; block];
        let mut next = vec![0.0; st];
        while iterations < cap {
            ops.fill_flux(sys, &q, &mut flux);
            div.iter_mut().for_each(|v| *v = 0.0);
            for t in 0..n1 {
                for a in 0..ops.dim {
                    let fa = &flux[a * st + t * block..a * st + (t + 1) * block];
                    ops.apply_along_axis(ops.basis.derivative_matrix(), fa, &mut deriv, a);
                    for (dv, v) in div[t * block..(t + 1) * block].iter_mut().zip(&deriv) {
                        *dv += inv_h * v;
                    }
                }
            }
            let mut change = 0.0f64;
            for t in 0..n1 {
                for i in 0..block {
                    let mut acc = 0.0;
                    for l in 0..n1 {
                        acc += ops.time_inverse[t * n1 + l] * w[l] * div[l * block + i];
                    }
                    let v = ops.time_init[t] * q_h[i] - dt * acc;
                    change = change.max((v - q[t * block + i]).abs());
                    next[t * block + i] = v;
                }
            }
            std::mem::swap(&mut q, &mut next);
            iterations += 1;
            if !change.is_finite() {
                return Err(KernelError::PredictorFailure { cell });
            }
            if change <= tol {
                break;
            }
        }
    }
    ops.fill_flux(sys, &q, &mut flux);
    if !q.iter().chain(&flux).all(|v| v.is_finite()) {
        return Err(KernelError::PredictorFailure { cell });
    }
    Ok(SpaceTimePolynomial { q, flux, dt, iterations })
}

/// Time-constant predictor of a spatially constant state.
pub fn constant_prediction<S: PdeSystem + ?Sized>(
    ops: &Operators,
    sys: &S,
    state: &[f64],
    dt: f64,
) -> SpaceTimePolynomial {
    let q: Vec<f64> = state.iter().copied().cycle().take(ops.space_time_block()).collect();
    let mut flux = vec![0.0; ops.dim * q.len()];
    ops.fill_flux(sys, &q, &mut flux);
    SpaceTimePolynomial { q, flux, dt, iterations: 0 }
}

/// Predicted solution and outward normal flux on one face of a cell.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceTrace {
    pub axis: usize,
    /// 0 = lower face, 1 = upper face.
    pub end: usize,
    pub q: Vec<f64>,
    pub flux: Vec<f64>,
}

/// Traces on all `2d` faces, in `(axis, end)` order.
pub fn extrapolate(ops: &Operators, stp: &SpaceTimePolynomial) -> Vec<FaceTrace> {
    let m = ops.components;
    let block = ops.block();
    let st = ops.space_time_block();
    let nt = ops.transverse;
    let (left, right) = ops.basis.extrapolation_vectors();
    let mut out = Vec::with_capacity(2 * ops.dim);
    for a in 0..ops.dim {
        for end in 0..2 {
            let vec = if end == 0 { left } else { right };
            let sign = if end == 0 { -1.0 } else { 1.0 };
            let mut q = vec![0.0; ops.face_block()];
            let mut flux = vec![0.0; ops.face_block()];
            for t in 0..ops.n1 {
                for (node, &(along, tn)) in ops.face_map[a].iter().enumerate() {
                    let wv = vec[along];
                    let dst = (t * nt + tn) * m;
                    let src = t * block + node * m;
                    for c in 0..m {
                        q[dst + c] += wv * stp.q[src + c];
                        flux[dst + c] += wv * stp.flux[a * st + src + c];
                    }
                }
            }
            flux.iter_mut().for_each(|v| *v *= sign);
            out.push(FaceTrace { axis: a, end, q, flux });
        }
    }
    out
}

/// Writes a trace into the face side owned by the cell and stamps the step.
pub fn store_trace(side: &mut HullSide, trace: &FaceTrace, step: u64) {
    side.q.copy_from_slice(&trace.q);
    side.flux.copy_from_slice(&trace.flux);
    side.stp_step = step;
}

/// Zero-gradient ghost: same solution, flux pointing the other way.
pub fn store_ghost(side: &mut HullSide, trace: &FaceTrace, step: u64) {
    side.q.copy_from_slice(&trace.q);
    for (g, f) in side.flux.iter_mut().zip(&trace.flux) {
        *g = -f;
    }
    side.stp_step = step;
}

/// Rusanov flux at every space-time node of a face.
///
/// Writes the outward normal numerical flux into both sides' `riemann`
/// blocks. `alpha` is a single scalar per face: the largest signal speed of
/// either trace over all face nodes.
pub fn solve_riemann<S: PdeSystem + ?Sized>(
    ops: &Operators,
    sys: &S,
    axis: usize,
    hull: &mut FaceHull,
    step: u64,
) -> Result<(), KernelError> {
    let [minus, plus] = &mut hull.sides;
    if minus.stp_step != step || plus.stp_step != step {
        return Err(KernelError::SchedulingOrder(format!(
            "Riemann solve of step {step} sees traces from steps {} and {}",
            minus.stp_step, plus.stp_step
        )));
    }
    let m = ops.components;
    let mut alpha = 0.0f64;
    for side in [&*minus, &*plus] {
        for qn in side.q.chunks_exact(m) {
            let s = sys
                .max_signal_speed(qn, axis)
                .map_err(|e| KernelError::Inadmissible(e.to_string()))?;
            alpha = alpha.max(s);
        }
    }
    for i in 0..minus.q.len() {
        let f = 0.5 * (minus.flux[i] - plus.flux[i]) - 0.5 * alpha * (plus.q[i] - minus.q[i]);
        minus.riemann[i] = f;
        plus.riemann[i] = -f;
    }
    hull.riemann_step = step;
    Ok(())
}

/// Overwrites `update` with the space-time volume integral of the
/// predicted flux against the test-function gradients.
pub fn integrate_volume(ops: &Operators, stp: &SpaceTimePolynomial, update: &mut [f64]) {
    let block = ops.block();
    let st = ops.space_time_block();
    let wt = ops.basis.time_collapse_weights();
    let mut tmp = vec![0.0; block];
    let mut acc = vec![0.0; block];
    for t in 0..ops.n1 {
        for a in 0..ops.dim {
            let fa = &stp.flux[a * st + t * block..a * st + (t + 1) * block];
            ops.apply_along_axis(&ops.volume, fa, &mut tmp, a);
            for (s, v) in acc.iter_mut().zip(&tmp) {
                *s += wt[t] * v;
            }
        }
    }
    let scale = stp.dt / ops.h;
    for (u, s) in update.iter_mut().zip(&acc) {
        *u = scale * s;
    }
}

/// Accumulates the face contribution of one face into `update`.
///
/// `riemann` is the outward normal numerical flux seen by this cell.
pub fn integrate_face(ops: &Operators, riemann: &[f64], axis: usize, end: usize, dt: f64, update: &mut [f64]) {
    let m = ops.components;
    let nt = ops.transverse;
    let wt = ops.basis.time_collapse_weights();
    let w = ops.basis.weights();
    let (left, right) = ops.basis.extrapolation_vectors();
    let vec = if end == 0 { left } else { right };
    let scale = dt / ops.h;
    let mut collapsed = vec![0.0; nt * m];
    for t in 0..ops.n1 {
        for (c, r) in collapsed.iter_mut().zip(&riemann[t * nt * m..(t + 1) * nt * m]) {
            *c += wt[t] * r;
        }
    }
    for (node, &(along, tn)) in ops.face_map[axis].iter().enumerate() {
        let coef = scale * vec[along] / w[along];
        for c in 0..m {
            update[node * m + c] -= coef * collapsed[tn * m + c];
        }
    }
}

/// Checked variant used by the schedulers: the face must carry the Riemann
/// result of `step`.
pub fn integrate_hull_face(
    ops: &Operators,
    hull: &FaceHull,
    side: usize,
    axis: usize,
    end: usize,
    step: u64,
    dt: f64,
    update: &mut [f64],
) -> Result<(), KernelError> {
    if hull.riemann_step != step {
        return Err(KernelError::SchedulingOrder(format!(
            "face integration of step {step} found Riemann data of step {}",
            hull.riemann_step
        )));
    }
    integrate_face(ops, &hull.sides[side].riemann, axis, end, dt, update);
    Ok(())
}

/// `Q_h += D_h`, saving the old solution into `previous` when given.
pub fn update(q: &mut [f64], delta: &[f64], previous: Option<&mut [f64]>) {
    if let Some(prev) = previous {
        prev.copy_from_slice(q);
    }
    for (qi, di) in q.iter_mut().zip(delta) {
        *qi += di;
    }
}

/// `cfl h / (d (2p+1) lambda)`.
pub fn admissible_step(cfl: f64, h: f64, dim: usize, order: usize, lambda: f64) -> f64 {
    cfl * h / (dim as f64 * (2 * order + 1) as f64 * lambda)
}

/// Largest signal speed over all nodes and axes, `None` if any node is
/// inadmissible.
pub fn max_speed<S: PdeSystem + ?Sized>(sys: &S, dim: usize, states: &[f64]) -> Option<f64> {
    let m = sys.components();
    let mut lambda = 0.0f64;
    for qn in states.chunks_exact(m) {
        for a in 0..dim {
            lambda = lambda.max(sys.max_signal_speed(qn, a).ok()?);
        }
    }
    Some(lambda)
}

/// Admissible step of a cell, `None` signals a troubled cell.
pub fn calc_time_step<S: PdeSystem + ?Sized>(ops: &Operators, sys: &S, q_h: &[f64], cfl: f64) -> Option<f64> {
    let lambda = max_speed(sys, ops.dim, q_h)?;
    Some(admissible_step(cfl, ops.h, ops.dim, ops.order, lambda))
}
