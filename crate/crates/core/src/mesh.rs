//! Regular spacetree grid over the unit cube built by recursive
//! tripartition, with persistent per-cell and per-face storage.

use std::sync::atomic::{AtomicBool, AtomicU8, Ordering};

use parking_lot::Mutex;
use thiserror::Error;

use crate::kernels::SpaceTimePolynomial;
use crate::limiter::FvPatch;

/// Default refusal threshold for the persistent storage estimate.
pub const DEFAULT_BUDGET_BYTES: u64 = 4 << 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("dimension {0} not supported (expected 2 or 3)")]
    Dimension(usize),
    #[error("depth {0} outside 1..=4")]
    Depth(usize),
    #[error("polynomial order {0} outside 0..=9")]
    Order(usize),
    #[error("grid needs {bytes} bytes of persistent storage, budget is {budget}")]
    Budget { bytes: u64, budget: u64 },
    #[error("face {0} claimed outside an active sweep")]
    NoActiveSweep(usize),
    #[error("traversal order is not a permutation of the {0} cells")]
    BadTraversal(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    Periodic,
    /// Zero-gradient outflow.
    Outflow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraversalKind {
    Lexicographic,
    Peano,
    Custom(Vec<usize>),
}

/// Which persistent blocks each cell carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StorageLayout {
    /// Full space-time predictor output kept between sweeps.
    pub space_time_polynomial: bool,
    /// Separate update accumulator `D_h`.
    pub update_buffer: bool,
    /// Copy of the previous solution for limiter rollback.
    pub rollback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Face {
    pub axis: usize,
    /// Cell on the lower-coordinate side; `None` on the domain boundary.
    pub minus: Option<usize>,
    /// Cell on the upper-coordinate side; `None` on the domain boundary.
    pub plus: Option<usize>,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.minus.is_none() || self.plus.is_none()
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> {
        self.minus.into_iter().chain(self.plus)
    }
}

/// One side of a face: space-time trace of the predicted solution, its
/// outward normal flux, and the numerical flux handed back by the Riemann
/// solve (also outward normal).
#[derive(Debug, Clone)]
pub struct HullSide {
    pub q: Vec<f64>,
    pub flux: Vec<f64>,
    pub riemann: Vec<f64>,
    /// Realisation step whose predictor wrote `q`/`flux`; 0 = never.
    pub stp_step: u64,
}

#[derive(Debug, Clone)]
pub struct FaceHull {
    /// Index 0 is the minus side, index 1 the plus side.
    pub sides: [HullSide; 2],
    /// Realisation step of the last Riemann solve; 0 = never.
    pub riemann_step: u64,
}

impl FaceHull {
    fn new(block: usize) -> Self {
        let side = || HullSide {
            q: vec![0.0; block],
            flux: vec![0.0; block],
            riemann: vec![0.0; block],
            stp_step: 0,
        };
        Self { sides: [side(), side()], riemann_step: 0 }
    }

    pub fn persistent_doubles(&self) -> usize {
        self.sides.iter().map(|s| s.q.len() + s.flux.len() + s.riemann.len()).sum()
    }
}

#[derive(Debug, Clone)]
pub struct CellData {
    pub q: Vec<f64>,
    /// Update accumulator; empty when the layout has none.
    pub update: Vec<f64>,
    pub poly: Option<SpaceTimePolynomial>,
    /// Solution before the latest update; empty unless rollback is enabled.
    pub previous: Vec<f64>,
    pub troubled: bool,
    pub patch: Option<FvPatch>,
    /// Step whose predictor fell back to the time-constant cell mean.
    pub fallback_step: Option<u64>,
}

impl CellData {
    pub fn persistent_doubles(&self) -> usize {
        self.q.len()
            + self.update.len()
            + self.poly.as_ref().map_or(0, |p| p.q.len() + p.flux.len())
            + self.previous.len()
            + self.patch.as_ref().map_or(0, |p| p.states.len())
    }
}

const UNTOUCHED: u8 = 0;
const CLAIMED: u8 = 1;
const SOLVED: u8 = 2;

pub struct FaceSlot {
    pub face: Face,
    state: AtomicU8,
    pub hull: Mutex<FaceHull>,
}

/// Parameters of [`Grid::build`].
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub dim: usize,
    pub depth: usize,
    pub order: usize,
    pub components: usize,
    pub boundary: BoundaryKind,
    pub layout: StorageLayout,
    pub budget_bytes: u64,
}

impl GridSpec {
    pub fn new(dim: usize, depth: usize, order: usize, components: usize, boundary: BoundaryKind) -> Self {
        Self {
            dim,
            depth,
            order,
            components,
            boundary,
            layout: StorageLayout { update_buffer: true, ..Default::default() },
            budget_bytes: DEFAULT_BUDGET_BYTES,
        }
    }

    pub fn with_layout(mut self, layout: StorageLayout) -> Self {
        self.layout = layout;
        self
    }

    pub fn with_budget(mut self, bytes: u64) -> Self {
        self.budget_bytes = bytes;
        self
    }

    pub fn cells_per_axis(&self) -> usize {
        3usize.pow(self.depth as u32)
    }

    pub fn cell_count(&self) -> usize {
        self.cells_per_axis().pow(self.dim as u32)
    }

    pub fn face_count(&self) -> usize {
        let n = self.cells_per_axis();
        match self.boundary {
            BoundaryKind::Periodic => self.dim * self.cell_count(),
            BoundaryKind::Outflow => self.dim * (n + 1) * n.pow(self.dim as u32 - 1),
        }
    }

    /// `m (p+1)^d`, the size of one spatial block.
    pub fn block(&self) -> usize {
        self.components * (self.order + 1).pow(self.dim as u32)
    }

    pub fn estimated_bytes(&self) -> u64 {
        let b = self.block() as u64;
        let mut per_cell = b;
        if self.layout.update_buffer {
            per_cell += b;
        }
        if self.layout.rollback {
            per_cell += b;
        }
        if self.layout.space_time_polynomial {
            per_cell += (self.dim as u64 + 1) * (self.order as u64 + 1) * b;
        }
        8 * (self.cell_count() as u64 * per_cell + self.face_count() as u64 * 6 * b)
    }
}

pub struct Grid {
    dim: usize,
    depth: usize,
    order: usize,
    components: usize,
    boundary: BoundaryKind,
    layout: StorageLayout,
    per_axis: usize,
    cell_faces: Vec<usize>,
    pub cells: Vec<Mutex<CellData>>,
    pub faces: Vec<FaceSlot>,
    sweep_active: AtomicBool,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("dim", &self.dim)
            .field("depth", &self.depth)
            .field("order", &self.order)
            .field("cells", &self.cells.len())
            .field("faces", &self.faces.len())
            .finish()
    }
}

impl Grid {
    pub fn build(spec: &GridSpec) -> Result<Self, MeshError> {
        if !(2..=3).contains(&spec.dim) {
            return Err(MeshError::Dimension(spec.dim));
        }
        if !(1..=4).contains(&spec.depth) {
            return Err(MeshError::Depth(spec.depth));
        }
        if spec.order > crate::basis::MAX_ORDER {
            return Err(MeshError::Order(spec.order));
        }
        let bytes = spec.estimated_bytes();
        if bytes > spec.budget_bytes {
            return Err(MeshError::Budget { bytes, budget: spec.budget_bytes });
        }
        let d = spec.dim;
        let n = spec.cells_per_axis();
        let ncells = spec.cell_count();
        let block = spec.block();
        let strides: Vec<usize> = (0..d).map(|a| n.pow(a as u32)).collect();

        let mut faces = Vec::with_capacity(spec.face_count());
        let mut cell_faces = vec![usize::MAX; ncells * 2 * d];
        for c in 0..ncells {
            for a in 0..d {
                let ia = (c / strides[a]) % n;
                if ia + 1 < n || spec.boundary == BoundaryKind::Periodic {
                    let nb = if ia + 1 < n { c + strides[a] } else { c - ia * strides[a] };
                    cell_faces[c * 2 * d + 2 * a + 1] = faces.len();
                    cell_faces[nb * 2 * d + 2 * a] = faces.len();
                    faces.push(Face { axis: a, minus: Some(c), plus: Some(nb) });
                } else {
                    cell_faces[c * 2 * d + 2 * a + 1] = faces.len();
                    faces.push(Face { axis: a, minus: Some(c), plus: None });
                }
                if ia == 0 && spec.boundary == BoundaryKind::Outflow {
                    cell_faces[c * 2 * d + 2 * a] = faces.len();
                    faces.push(Face { axis: a, minus: None, plus: Some(c) });
                }
            }
        }
        debug_assert_eq!(faces.len(), spec.face_count());

        let space_time = (spec.order + 1) * block;
        let cells = (0..ncells)
            .map(|_| {
                Mutex::new(CellData {
                    q: vec![0.0; block],
                    update: if spec.layout.update_buffer { vec![0.0; block] } else { Vec::new() },
                    poly: spec.layout.space_time_polynomial.then(|| SpaceTimePolynomial {
                        q: vec![0.0; space_time],
                        flux: vec![0.0; d * space_time],
                        dt: 0.0,
                        iterations: 0,
                    }),
                    previous: if spec.layout.rollback { vec![0.0; block] } else { Vec::new() },
                    troubled: false,
                    patch: None,
                    fallback_step: None,
                })
            })
            .collect();
        let faces = faces
            .into_iter()
            .map(|face| FaceSlot {
                face,
                state: AtomicU8::new(UNTOUCHED),
                hull: Mutex::new(FaceHull::new(block)),
            })
            .collect();

        Ok(Self {
            dim: d,
            depth: spec.depth,
            order: spec.order,
            components: spec.components,
            boundary: spec.boundary,
            layout: spec.layout,
            per_axis: n,
            cell_faces,
            cells,
            faces,
            sweep_active: AtomicBool::new(false),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn layout(&self) -> StorageLayout {
        self.layout
    }

    pub fn cells_per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// `3^-L`
    pub fn mesh_width(&self) -> f64 {
        1.0 / self.per_axis as f64
    }

    pub fn multi_index(&self, cell: usize) -> Vec<usize> {
        (0..self.dim).map(|a| (cell / self.per_axis.pow(a as u32)) % self.per_axis).collect()
    }

    pub fn cell_index(&self, index: &[usize]) -> usize {
        index.iter().enumerate().map(|(a, i)| i * self.per_axis.pow(a as u32)).sum()
    }

    pub fn cell_origin(&self, cell: usize) -> Vec<f64> {
        let h = self.mesh_width();
        self.multi_index(cell).into_iter().map(|i| i as f64 * h).collect()
    }

    /// Face of `cell` on side `2 * axis + end` (`end` 0 = lower, 1 = upper).
    pub fn cell_face(&self, cell: usize, axis: usize, end: usize) -> usize {
        self.cell_faces[cell * 2 * self.dim + 2 * axis + end]
    }

    /// All `2d` faces of `cell` in `(axis, end)` order.
    pub fn cell_faces(&self, cell: usize) -> &[usize] {
        &self.cell_faces[cell * 2 * self.dim..(cell + 1) * 2 * self.dim]
    }

    /// Cell across the face on the given side, if any.
    pub fn neighbour(&self, cell: usize, axis: usize, end: usize) -> Option<usize> {
        let f = &self.faces[self.cell_face(cell, axis, end)].face;
        if end == 1 {
            f.plus
        } else {
            f.minus
        }
    }

    pub fn traversal_order(&self, kind: &TraversalKind) -> Result<Vec<usize>, MeshError> {
        let n = self.cell_count();
        match kind {
            TraversalKind::Lexicographic => Ok((0..n).collect()),
            TraversalKind::Peano => Ok((0..n)
                .map(|t| self.cell_index(&peano_coordinates(t, self.dim, self.depth)))
                .collect()),
            TraversalKind::Custom(order) => {
                let mut seen = vec![false; n];
                if order.len() != n {
                    return Err(MeshError::BadTraversal(n));
                }
                for &c in order {
                    if c >= n || std::mem::replace(&mut seen[c], true) {
                        return Err(MeshError::BadTraversal(n));
                    }
                }
                Ok(order.clone())
            }
        }
    }

    /// Opens a sweep: every face becomes claimable exactly once.
    pub fn begin_sweep(&self) {
        for f in &self.faces {
            f.state.store(UNTOUCHED, Ordering::Relaxed);
        }
        self.sweep_active.store(true, Ordering::Release);
    }

    /// Closes the sweep and returns how many faces were claimed in it.
    pub fn end_sweep(&self) -> usize {
        self.sweep_active.store(false, Ordering::Release);
        self.faces.iter().filter(|f| f.state.load(Ordering::Acquire) != UNTOUCHED).count()
    }

    pub fn sweep_active(&self) -> bool {
        self.sweep_active.load(Ordering::Acquire)
    }

    /// Touch-first test-and-set. True exactly once per face per sweep.
    pub fn claim_first_touch(&self, face: usize) -> Result<bool, MeshError> {
        if !self.sweep_active() {
            return Err(MeshError::NoActiveSweep(face));
        }
        Ok(self.faces[face]
            .state
            .compare_exchange(UNTOUCHED, CLAIMED, Ordering::AcqRel, Ordering::Acquire)
            .is_ok())
    }

    pub fn mark_solved(&self, face: usize) {
        self.faces[face].state.store(SOLVED, Ordering::Release);
    }

    pub fn is_solved(&self, face: usize) -> bool {
        self.faces[face].state.load(Ordering::Acquire) == SOLVED
    }

    /// Persistent doubles actually allocated across cells and faces.
    pub fn allocated_doubles(&self) -> usize {
        self.cells.iter().map(|c| c.lock().persistent_doubles()).sum::<usize>()
            + self.faces.iter().map(|f| f.hull.lock().persistent_doubles()).sum::<usize>()
    }

    /// Copies of every cell's current solution, lexicographic order.
    pub fn solution_snapshot(&self) -> Vec<Vec<f64>> {
        self.cells.iter().map(|c| c.lock().q.clone()).collect()
    }
}

/// Coordinates of the `t`-th cell along the Peano curve on a `3^depth` grid.
///
/// Base-3 digits of `t` are dealt round-robin to the axes, most significant
/// level first. A digit is reflected (`k -> 2 - k`) when the digits of the
/// other axes that precede it sum to an odd number.
pub fn peano_coordinates(t: usize, dim: usize, depth: usize) -> Vec<usize> {
    let ndigits = dim * depth;
    let mut digits = vec![0usize; ndigits];
    let mut rest = t;
    for k in (0..ndigits).rev() {
        digits[k] = rest % 3;
        rest /= 3;
    }
    let mut coords = vec![0usize; dim];
    let mut axis_sums = vec![0usize; dim];
    let mut total = 0usize;
    for (k, &digit) in digits.iter().enumerate() {
        let axis = k % dim;
        let others = total - axis_sums[axis];
        let c = if others % 2 == 1 { 2 - digit } else { digit };
        coords[axis] = coords[axis] * 3 + c;
        axis_sums[axis] += digit;
        total += digit;
    }
    coords
}
