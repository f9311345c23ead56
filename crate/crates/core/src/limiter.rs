//! A-posteriori subcell limiter: troubled-cell detection, projection onto a
//! `(2p+1)^d` finite-volume patch, first-order Rusanov updates on the patch,
//! and a mean-preserving lift back to the nodal polynomial.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::basis::Basis1D;
use crate::kernels::max_speed;
use crate::mesh::{BoundaryKind, Grid};
use crate::pde::PdeSystem;

/// Absolute part of the relaxed maximum-principle tolerance.
pub const DMP_ABSOLUTE: f64 = 1e-3;
/// Relative part, scaled by the local range.
pub const DMP_RELATIVE: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimiterError {
    #[error("finite-volume step {dt} exceeds the admissible {limit}")]
    CflViolation { dt: f64, limit: f64 },
    #[error("finite-volume patch of cell {cell} became inadmissible")]
    Inadmissible { cell: usize },
    #[error("limiter needs the rollback copy of the solution")]
    NoRollback,
}

/// Subcell states of one cell, `[subcell][component]` with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FvPatch {
    pub resolution: usize,
    pub states: Vec<f64>,
}

impl FvPatch {
    pub fn mean(&self, m: usize) -> Vec<f64> {
        let cells = self.states.len() / m;
        let mut mean = vec![0.0; m];
        for s in self.states.chunks_exact(m) {
            for (a, v) in mean.iter_mut().zip(s) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|v| *v /= cells as f64);
        mean
    }
}

/// Applies a 1-D `rows x cols` operator along every axis of a tensor block
/// of `cols^dim` points with `m` components, giving `rows^dim` points.
fn tensor_apply(mat: &[f64], rows: usize, cols: usize, dim: usize, m: usize, input: &[f64]) -> Vec<f64> {
    let mut cur = input.to_vec();
    let mut extents = vec![cols; dim];
    for a in 0..dim {
        let before: usize = extents[..a].iter().product();
        let after: usize = extents[a + 1..].iter().product();
        let mut next = vec![0.0; before * rows * after * m];
        for o in 0..after {
            for r in 0..rows {
                for i in 0..before {
                    let dst = ((o * rows + r) * before + i) * m;
                    for j in 0..cols {
                        let w = mat[r * cols + j];
                        if w == 0.0 {
                            continue;
                        }
                        let src = ((o * cols + j) * before + i) * m;
                        for c in 0..m {
                            next[dst + c] += w * cur[src + c];
                        }
                    }
                }
            }
        }
        extents[a] = rows;
        cur = next;
    }
    cur
}

/// Projection and lift matrices for one `(d, p, m)`.
#[derive(Debug, Clone)]
pub struct SubcellOperators {
    dim: usize,
    order: usize,
    components: usize,
    n: usize,
    /// Subcell means of the basis functions, `n x (p+1)`.
    projection: Vec<f64>,
    /// Mean-preserving least-squares lift, `(p+1) x n`.
    lift: Vec<f64>,
}

impl SubcellOperators {
    pub fn new(basis: &Basis1D, dim: usize, components: usize) -> Self {
        let p = basis.order();
        let n1 = p + 1;
        let n = 2 * p + 1;
        let mut projection = vec![0.0; n * n1];
        for s in 0..n {
            let (a, b) = (s as f64 / n as f64, (s + 1) as f64 / n as f64);
            for (x, w) in basis.nodes().iter().zip(basis.weights()) {
                let phi = basis.evaluate_all(a + (b - a) * x);
                for j in 0..n1 {
                    projection[s * n1 + j] += w * phi[j];
                }
            }
        }
        // minimise |P c - u|^2 subject to w.c = mean(u)
        let pm = DMatrix::from_row_slice(n, n1, &projection);
        let mut kkt = DMatrix::zeros(n1 + 1, n1 + 1);
        kkt.view_mut((0, 0), (n1, n1)).copy_from(&(pm.transpose() * &pm * 2.0));
        for j in 0..n1 {
            kkt[(j, n1)] = basis.weights()[j];
            kkt[(n1, j)] = basis.weights()[j];
        }
        let mut rhs = DMatrix::zeros(n1 + 1, n);
        rhs.view_mut((0, 0), (n1, n)).copy_from(&(pm.transpose() * 2.0));
        for s in 0..n {
            rhs[(n1, s)] = 1.0 / n as f64;
        }
        let sol = kkt.try_inverse().expect("constrained lift is regular") * rhs;
        let mut lift = vec![0.0; n1 * n];
        for j in 0..n1 {
            for s in 0..n {
                lift[j * n + s] = sol[(j, s)];
            }
        }
        Self { dim, order: p, components, n, projection, lift }
    }

    /// Subcells per axis, `2p + 1`.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn patch_len(&self) -> usize {
        self.n.pow(self.dim as u32) * self.components
    }

    /// Exact subcell averages of the nodal polynomial.
    pub fn project(&self, q_h: &[f64]) -> FvPatch {
        FvPatch {
            resolution: self.n,
            states: tensor_apply(&self.projection, self.n, self.order + 1, self.dim, self.components, q_h),
        }
    }

    /// Nodal polynomial whose subcell averages best fit the patch, with the
    /// cell mean preserved.
    pub fn reconstruct(&self, patch: &FvPatch) -> Vec<f64> {
        tensor_apply(&self.lift, self.order + 1, self.n, self.dim, self.components, &patch.states)
    }

    /// Layer of subcells adjacent to face `(axis, end)`, transverse subcells
    /// ordered by the remaining axes (lowest fastest).
    pub fn layer(&self, states: &[f64], axis: usize, end: usize) -> Vec<f64> {
        patch_layer(states, self.n, self.dim, self.components, axis, end)
    }
}

/// Per-component bounds of the relaxed discrete maximum principle.
#[derive(Debug, Clone, PartialEq)]
pub struct DmpBounds {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl DmpBounds {
    pub fn from_states<'a>(m: usize, sets: impl IntoIterator<Item = &'a [f64]>) -> Self {
        let mut min = vec![f64::INFINITY; m];
        let mut max = vec![f64::NEG_INFINITY; m];
        for set in sets {
            for s in set.chunks_exact(m) {
                for c in 0..m {
                    min[c] = min[c].min(s[c]);
                    max[c] = max[c].max(s[c]);
                }
            }
        }
        Self { min, max }
    }

    pub fn violated_by(&self, states: &[f64]) -> bool {
        let m = self.min.len();
        states.chunks_exact(m).any(|s| {
            (0..m).any(|c| {
                let delta = DMP_ABSOLUTE + DMP_RELATIVE * (self.max[c] - self.min[c]);
                !(s[c] >= self.min[c] - delta && s[c] <= self.max[c] + delta)
            })
        })
    }
}

fn all_admissible<S: PdeSystem + ?Sized>(sys: &S, states: &[f64]) -> bool {
    states.chunks_exact(sys.components()).all(|s| sys.is_admissible(s))
}

/// A candidate solution is troubled when a node or a subcell average is
/// inadmissible, or the subcell averages leave the relaxed bounds.
pub fn detect_troubled<S: PdeSystem + ?Sized>(
    sys: &S,
    sub: &SubcellOperators,
    candidate: &[f64],
    bounds: Option<&DmpBounds>,
) -> bool {
    if !all_admissible(sys, candidate) {
        return true;
    }
    let patch = sub.project(candidate);
    if !all_admissible(sys, &patch.states) {
        return true;
    }
    bounds.is_some_and(|b| b.violated_by(&patch.states))
}

/// One first-order Godunov step with Rusanov fluxes on an `n^d` patch.
///
/// `ghosts` holds the `2d` outside layers in `(axis, end)` order, laid out
/// like [`SubcellOperators::layer`]. Fluxes are accumulated face by face in
/// the same order as the DG face integration so that a `p = 0` grid and a
/// patch produce the same arithmetic.
pub fn rusanov_fv_step<S: PdeSystem + ?Sized>(
    sys: &S,
    n: usize,
    states: &[f64],
    ghosts: &[Vec<f64>],
    dt: f64,
    h: f64,
    cfl: f64,
) -> Result<Vec<f64>, LimiterError> {
    let d = sys.dim();
    let m = sys.components();
    let total = n.pow(d as u32);
    let mut lambda = 0.0f64;
    for set in std::iter::once(states).chain(ghosts.iter().map(Vec::as_slice)) {
        lambda = lambda.max(max_speed(sys, d, set).ok_or(LimiterError::Inadmissible { cell: usize::MAX })?);
    }
    let limit = cfl * h / (d as f64 * lambda);
    if dt > limit * (1.0 + 1e-12) {
        return Err(LimiterError::CflViolation { dt, limit });
    }

    let transverse = |s: usize, axis: usize| {
        let mut tn = 0;
        let mut stride = 1;
        for b in 0..d {
            if b != axis {
                tn += ((s / n.pow(b as u32)) % n) * stride;
                stride *= n;
            }
        }
        tn
    };
    let neighbour = |s: usize, axis: usize, end: usize| -> &[f64] {
        let stride = n.pow(axis as u32);
        let i = (s / stride) % n;
        if end == 1 && i + 1 < n {
            &states[(s + stride) * m..(s + stride + 1) * m]
        } else if end == 0 && i > 0 {
            &states[(s - stride) * m..(s - stride + 1) * m]
        } else {
            let g = &ghosts[2 * axis + end];
            let t = transverse(s, axis);
            &g[t * m..(t + 1) * m]
        }
    };

    let scale = dt / h;
    let mut fl = vec![0.0; m];
    let mut fr = vec![0.0; m];
    let mut out = states.to_vec();
    let mut delta = vec![0.0; m];
    for s in 0..total {
        let own = &states[s * m..(s + 1) * m];
        delta.iter_mut().for_each(|v| *v = 0.0);
        for a in 0..d {
            for end in 0..2 {
                let other = neighbour(s, a, end);
                let (ql, qr) = if end == 1 { (own, other) } else { (other, own) };
                let alpha = sys
                    .max_signal_speed(ql, a)
                    .and_then(|x| sys.max_signal_speed(qr, a).map(|y| x.max(y)))
                    .map_err(|_| LimiterError::Inadmissible { cell: usize::MAX })?;
                sys.flux_into(ql, a, &mut fl);
                sys.flux_into(qr, a, &mut fr);
                for c in 0..m {
                    let f = 0.5 * (fl[c] + fr[c]) - 0.5 * alpha * (qr[c] - ql[c]);
                    // outward flux of this subcell
                    let outward = if end == 1 { f } else { -f };
                    delta[c] -= scale * outward;
                }
            }
        }
        for c in 0..m {
            out[s * m + c] += delta[c];
        }
    }
    Ok(out)
}

/// Ghost layers of a patch from its grid neighbours' patches.
fn ghost_layers(grid: &Grid, sub: &SubcellOperators, patches: &[Vec<f64>], cell: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * grid.dim());
    for a in 0..grid.dim() {
        for end in 0..2 {
            out.push(match grid.neighbour(cell, a, end) {
                Some(nb) => sub.layer(&patches[nb], a, 1 - end),
                None => sub.layer(&patches[cell], a, end),
            });
        }
    }
    out
}

/// What the limiter changed in one step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LimiterReport {
    /// Cells that switched from DG to FV in this step.
    pub newly_troubled: Vec<usize>,
    /// Every cell evolved by FV in this step; its solution changed.
    pub limited: Vec<usize>,
    /// Cells that remain troubled after reconstruction.
    pub troubled: Vec<usize>,
    pub substeps: usize,
}

/// Detects troubled cells among the freshly updated solutions, rolls them
/// back, advances them with FV on their patches, and lifts the result.
///
/// Expects every cell's `previous` block to hold the solution at the start
/// of the step. `forced` cells are treated as troubled regardless of
/// detection.
pub fn limit_step<S: PdeSystem + ?Sized>(
    grid: &Grid,
    sys: &S,
    sub: &SubcellOperators,
    dt: f64,
    cfl: f64,
    forced: &[usize],
) -> Result<LimiterReport, LimiterError> {
    let ncells = grid.cell_count();
    let m = grid.components();
    let mut was_troubled = vec![false; ncells];
    let mut start: Vec<Vec<f64>> = Vec::with_capacity(ncells);
    for (c, cell) in grid.cells.iter().enumerate() {
        let cell = cell.lock();
        if cell.previous.len() != cell.q.len() {
            return Err(LimiterError::NoRollback);
        }
        was_troubled[c] = cell.troubled;
        start.push(match (&cell.patch, cell.troubled) {
            (Some(p), true) => p.states.clone(),
            _ => sub.project(&cell.previous).states,
        });
    }
    let bounds: Vec<DmpBounds> = (0..ncells)
        .map(|c| {
            let nbs = (0..grid.dim())
                .flat_map(|a| (0..2).map(move |e| (a, e)))
                .filter_map(|(a, e)| grid.neighbour(c, a, e));
            DmpBounds::from_states(m, std::iter::once(c).chain(nbs).map(|i| start[i].as_slice()))
        })
        .collect();

    let mut report = LimiterReport::default();
    for c in 0..ncells {
        if was_troubled[c] {
            report.limited.push(c);
            continue;
        }
        let cell = grid.cells[c].lock();
        if forced.contains(&c) || detect_troubled(sys, sub, &cell.q, Some(&bounds[c])) {
            report.newly_troubled.push(c);
            report.limited.push(c);
        }
    }

    let n = sub.resolution();
    let h = grid.mesh_width() / n as f64;
    let mut evolved = Vec::with_capacity(report.limited.len());
    for &c in &report.limited {
        let ghosts = ghost_layers(grid, sub, &start, c);
        let mut lambda = max_speed(sys, grid.dim(), &start[c]).ok_or(LimiterError::Inadmissible { cell: c })?;
        for g in &ghosts {
            lambda = lambda.max(max_speed(sys, grid.dim(), g).ok_or(LimiterError::Inadmissible { cell: c })?);
        }
        let limit = cfl * h / (grid.dim() as f64 * lambda);
        let k = (dt / limit).ceil().max(1.0) as usize;
        let mut states = start[c].clone();
        for _ in 0..k {
            states = rusanov_fv_step(sys, n, &states, &ghosts, dt / k as f64, h, cfl)
                .map_err(|e| match e {
                    LimiterError::Inadmissible { .. } => LimiterError::Inadmissible { cell: c },
                    other => other,
                })?;
        }
        if !all_admissible(sys, &states) {
            return Err(LimiterError::Inadmissible { cell: c });
        }
        report.substeps = report.substeps.max(k);
        evolved.push((c, states));
    }

    for (c, states) in evolved {
        let patch = FvPatch { resolution: n, states };
        let lifted = sub.reconstruct(&patch);
        let own = DmpBounds::from_states(m, [patch.states.as_slice()]);
        let smooth = !detect_troubled(sys, sub, &lifted, Some(&own));
        let mut cell = grid.cells[c].lock();
        if smooth {
            cell.q = lifted;
            cell.troubled = false;
            cell.patch = None;
        } else {
            cell.q = if all_admissible(sys, &lifted) {
                lifted
            } else {
                let mean = patch.mean(m);
                mean.iter().copied().cycle().take(cell.q.len()).collect()
            };
            cell.troubled = true;
            cell.patch = Some(patch);
            report.troubled.push(c);
        }
    }

    // coupling halo: neighbours of troubled cells keep their projected patch
    let mut halo = vec![false; ncells];
    for &c in &report.troubled {
        for a in 0..grid.dim() {
            for e in 0..2 {
                if let Some(nb) = grid.neighbour(c, a, e) {
                    halo[nb] = true;
                }
            }
        }
    }
    for (c, cell) in grid.cells.iter().enumerate() {
        let mut cell = cell.lock();
        if cell.troubled {
            continue;
        }
        cell.patch = halo[c].then(|| sub.project(&cell.q));
    }
    Ok(report)
}

/// Initial troubled cells: the nodal interpolant's subcell averages are
/// inadmissible or stray from point samples of the initial data taken at
/// subcell centres of the cell and its neighbours. Troubled cells start
/// from those samples.
pub fn initial_troubled<S: PdeSystem + ?Sized>(
    grid: &Grid,
    sys: &S,
    sub: &SubcellOperators,
    samples: &[Vec<f64>],
) -> Vec<usize> {
    let m = grid.components();
    let mut out = Vec::new();
    for c in 0..grid.cell_count() {
        let nbs = (0..grid.dim())
            .flat_map(|a| (0..2).map(move |e| (a, e)))
            .filter_map(|(a, e)| grid.neighbour(c, a, e));
        let bounds = DmpBounds::from_states(m, std::iter::once(c).chain(nbs).map(|i| samples[i].as_slice()));
        let q = grid.cells[c].lock().q.clone();
        if detect_troubled(sys, sub, &q, Some(&bounds)) {
            out.push(c);
        }
    }
    for &c in &out {
        let patch = FvPatch { resolution: sub.resolution(), states: samples[c].clone() };
        let lifted = sub.reconstruct(&patch);
        let mut cell = grid.cells[c].lock();
        cell.q = if all_admissible(sys, &lifted) {
            lifted
        } else {
            patch.mean(m).iter().copied().cycle().take(cell.q.len()).collect()
        };
        cell.troubled = true;
        cell.patch = Some(patch);
    }
    out
}

/// Outflow/periodic ghost layers for a standalone patch covering a whole
/// domain.
pub fn domain_ghosts(sub_layer: impl Fn(usize, usize) -> Vec<f64>, dim: usize, boundary: BoundaryKind) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * dim);
    for a in 0..dim {
        for end in 0..2 {
            out.push(match boundary {
                BoundaryKind::Periodic => sub_layer(a, 1 - end),
                BoundaryKind::Outflow => sub_layer(a, end),
            });
        }
    }
    out
}

/// Layer of an arbitrary `n^d` patch next to face `(axis, end)`.
pub fn patch_layer(states: &[f64], n: usize, dim: usize, m: usize, axis: usize, end: usize) -> Vec<f64> {
    let fixed = if end == 0 { 0 } else { n - 1 };
    let stride = n.pow(axis as u32);
    (0..n.pow(dim as u32))
        .filter(|s| (s / stride) % n == fixed)
        .flat_map(|s| states[s * m..(s + 1) * m].iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pde::{Advection, Euler};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ops(p: usize, d: usize, m: usize) -> (Basis1D, SubcellOperators) {
        let b = Basis1D::new(p).unwrap();
        let s = SubcellOperators::new(&b, d, m);
        (b, s)
    }

    fn weights_nd(b: &Basis1D, d: usize) -> Vec<f64> {
        let n1 = b.len();
        (0..n1.pow(d as u32))
            .map(|node| (0..d).map(|a| b.weights()[(node / n1.pow(a as u32)) % n1]).product())
            .collect()
    }

    #[test]
    fn constant_projects_to_constant() {
        let (_, s) = ops(3, 2, 1);
        let patch = s.project(&vec![2.5; 16]);
        assert_eq!(patch.states.len(), 49);
        for v in &patch.states {
            assert_abs_diff_eq!(*v, 2.5, epsilon = 1e-14);
        }
        let back = s.reconstruct(&patch);
        for v in back {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_profile_subcell_means() {
        let (b, s) = ops(1, 2, 1);
        // f(x, y) = x at the nodes
        let q: Vec<f64> = (0..4).map(|node| b.nodes()[node % 2]).collect();
        let patch = s.project(&q);
        for sx in 0..3 {
            for sy in 0..3 {
                assert_abs_diff_eq!(patch.states[sy * 3 + sx], (sx as f64 + 0.5) / 3.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn projection_and_lift_preserve_mean_and_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for (p, d) in [(1, 2), (2, 2), (3, 2), (2, 3), (3, 3)] {
            let (b, s) = ops(p, d, 1);
            let w = weights_nd(&b, d);
            let q: Vec<f64> = (0..w.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let mean: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
            let patch = s.project(&q);
            let pm = patch.mean(1)[0];
            assert!((pm - mean).abs() <= 1e-13 * (1.0 + mean.abs()));
            let back = s.reconstruct(&patch);
            for (x, y) in back.iter().zip(&q) {
                assert_abs_diff_eq!(*x, *y, epsilon = 1e-11);
            }
            // arbitrary patch: lift keeps the mean
            let rough = FvPatch {
                resolution: s.resolution(),
                states: (0..patch.states.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            };
            let lifted = s.reconstruct(&rough);
            let lm: f64 = lifted.iter().zip(&w).map(|(a, b)| a * b).sum();
            assert_abs_diff_eq!(lm, rough.mean(1)[0], epsilon = 1e-13);
        }
    }

    #[test]
    fn detection_cases() {
        let sys = Euler::new(2);
        let (_, s) = ops(2, 2, 4);
        let state = sys.conserved(1.0, &[0.0, 0.0], 1.0);
        let q: Vec<f64> = state.iter().copied().cycle().take(36).collect();
        let bounds = DmpBounds::from_states(4, [q.as_slice()]);
        assert!(!detect_troubled(&sys, &s, &q, Some(&bounds)));
        let mut bad = q.clone();
        bad[0] = -0.1;
        assert!(detect_troubled(&sys, &s, &bad, None));
        let mut jump = q.clone();
        jump[4 * 4] = 1.5;
        assert!(detect_troubled(&sys, &s, &jump, Some(&bounds)));
    }

    fn periodic_ghosts(states: &[f64], n: usize, d: usize, m: usize) -> Vec<Vec<f64>> {
        domain_ghosts(|a, e| patch_layer(states, n, d, m, a, e), d, BoundaryKind::Periodic)
    }

    #[test]
    fn uniform_patch_unchanged_and_cfl_enforced() {
        let sys = Euler::new(2);
        let state = sys.conserved(1.0, &[0.3, 0.1], 1.0);
        let states: Vec<f64> = state.iter().copied().cycle().take(25 * 4).collect();
        let g = periodic_ghosts(&states, 5, 2, 4);
        let out = rusanov_fv_step(&sys, 5, &states, &g, 0.01, 0.2, 0.9).unwrap();
        for (a, b) in out.iter().zip(&states) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
        assert!(matches!(
            rusanov_fv_step(&sys, 5, &states, &g, 1.0, 0.2, 0.9),
            Err(LimiterError::CflViolation { .. })
        ));
    }

    #[test]
    fn periodic_patch_conserves_mean_through_cycle() {
        let sys = Advection::new(vec![1.0, -0.5]);
        let (_, s) = ops(3, 2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q: Vec<f64> = (0..16).map(|_| rng.gen_range(0.0..1.0)).collect();
        let patch = s.project(&q);
        let n = s.resolution();
        let h = 1.0 / 7.0;
        let dt = 0.9 * h / (2.0 * 1.0);
        let g = periodic_ghosts(&patch.states, n, 2, 1);
        let stepped = rusanov_fv_step(&sys, n, &patch.states, &g, dt, h, 0.9).unwrap();
        let after = FvPatch { resolution: n, states: stepped };
        let lifted = s.reconstruct(&after);
        let b = Basis1D::new(3).unwrap();
        let w = weights_nd(&b, 2);
        let m0: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
        let m1: f64 = lifted.iter().zip(&w).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(m0, m1, epsilon = 1e-11);
    }

    #[test]
    fn sod_tube_stays_admissible() {
        let sys = Euler::new(2);
        let n = 40;
        let left = sys.conserved(1.0, &[0.0, 0.0], 1.0);
        let right = sys.conserved(0.125, &[0.0, 0.0], 0.1);
        let mut states = Vec::new();
        for _y in 0..n {
            for x in 0..n {
                states.extend_from_slice(if x < n / 2 { &left } else { &right });
            }
        }
        let h = 1.0 / n as f64;
        for _ in 0..100 {
            let lambda = max_speed(&sys, 2, &states).unwrap();
            let dt = 0.9 * h / (2.0 * lambda);
            let g = domain_ghosts(|a, e| patch_layer(&states, n, 2, 4, a, e), 2, BoundaryKind::Outflow);
            states = rusanov_fv_step(&sys, n, &states, &g, dt, h, 0.9).unwrap();
            assert!(all_admissible(&sys, &states));
        }
    }
}
