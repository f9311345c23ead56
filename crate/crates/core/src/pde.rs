//! Hyperbolic systems in conservation form: compressible Euler and scalar
//! linear advection.

use thiserror::Error;

/// Ratio of specific heats; the pressure law uses `GAMMA - 1 = 0.4`.
pub const GAMMA: f64 = 1.4;

/// Lower bound on density and pressure for a state to count as physical.
pub const ADMISSIBILITY_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PdeError {
    #[error("non-positive density {0}")]
    NonPositiveDensity(f64),
    #[error("inadmissible state (rho = {rho}, p = {pressure})")]
    Inadmissible { rho: f64, pressure: f64 },
    #[error("state has {got} components, system expects {expected}")]
    Length { expected: usize, got: usize },
}

/// Flux tensor of one state: `dim` rows of `m` entries, row `i` is the flux
/// in coordinate direction `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTensor {
    pub dim: usize,
    pub m: usize,
    pub entries: Vec<f64>,
}

impl FluxTensor {
    pub fn row(&self, axis: usize) -> &[f64] {
        &self.entries[axis * self.m..(axis + 1) * self.m]
    }
}

/// A system `dQ/dt + div F(Q) = 0`.
///
/// `flux_into` is the unchecked hot-path evaluator used by the kernels; the
/// kernels detect non-finite output themselves.
pub trait PdeSystem: Send + Sync {
    fn dim(&self) -> usize;
    fn components(&self) -> usize;

    /// Writes the flux in direction `axis` into `out` (length `m`).
    fn flux_into(&self, q: &[f64], axis: usize, out: &mut [f64]);

    /// Largest characteristic speed along the coordinate direction `axis`.
    fn max_signal_speed(&self, q: &[f64], axis: usize) -> Result<f64, PdeError>;

    fn is_admissible(&self, q: &[f64]) -> bool;

    /// Full flux tensor with admissibility checking.
    fn flux(&self, q: &[f64]) -> Result<FluxTensor, PdeError> {
        let m = self.components();
        if q.len() != m {
            return Err(PdeError::Length { expected: m, got: q.len() });
        }
        if !self.is_admissible(q) {
            return Err(self.inadmissible_error(q));
        }
        let d = self.dim();
        let mut entries = vec![0.0; d * m];
        for axis in 0..d {
            self.flux_into(q, axis, &mut entries[axis * m..(axis + 1) * m]);
        }
        Ok(FluxTensor { dim: d, m, entries })
    }

    #[doc(hidden)]
    fn inadmissible_error(&self, q: &[f64]) -> PdeError {
        PdeError::Inadmissible { rho: q[0], pressure: f64::NAN }
    }
}

/// Compressible Euler equations, state ordering `(rho, j_1..j_d, E)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Euler {
    dim: usize,
}

impl Euler {
    pub fn new(dim: usize) -> Self {
        assert!((1..=3).contains(&dim), "Euler system supports 1 to 3 dimensions");
        Self { dim }
    }

    /// `p = 0.4 (E - j.j / (2 rho))`.
    pub fn pressure(&self, q: &[f64]) -> Result<f64, PdeError> {
        let rho = q[0];
        if !(rho > 0.0) {
            return Err(PdeError::NonPositiveDensity(rho));
        }
        Ok(self.pressure_unchecked(q))
    }

    #[inline]
    fn pressure_unchecked(&self, q: &[f64]) -> f64 {
        let rho = q[0];
        let jj: f64 = q[1..=self.dim].iter().map(|j| j * j).sum();
        (GAMMA - 1.0) * (q[self.dim + 1] - 0.5 * jj / rho)
    }

    /// Conserved state from primitive density, velocity and pressure.
    pub fn conserved(&self, rho: f64, velocity: &[f64], pressure: f64) -> Vec<f64> {
        assert_eq!(velocity.len(), self.dim);
        let mut q = Vec::with_capacity(self.dim + 2);
        q.push(rho);
        let mut kinetic = 0.0;
        for &u in velocity {
            q.push(rho * u);
            kinetic += 0.5 * rho * u * u;
        }
        q.push(pressure / (GAMMA - 1.0) + kinetic);
        q
    }

    pub fn sound_speed(&self, q: &[f64]) -> Result<f64, PdeError> {
        let p = self.pressure(q)?;
        if !(p > 0.0) {
            return Err(PdeError::Inadmissible { rho: q[0], pressure: p });
        }
        Ok((GAMMA * p / q[0]).sqrt())
    }
}

impl PdeSystem for Euler {
    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self) -> usize {
        self.dim + 2
    }

    #[inline]
    fn flux_into(&self, q: &[f64], axis: usize, out: &mut [f64]) {
        let d = self.dim;
        let rho = q[0];
        let ja = q[1 + axis];
        let p = self.pressure_unchecked(q);
        let ua = ja / rho;
        out[0] = ja;
        for i in 0..d {
            out[1 + i] = ua * q[1 + i];
        }
        out[1 + axis] += p;
        out[d + 1] = ua * (q[d + 1] + p);
    }

    fn max_signal_speed(&self, q: &[f64], axis: usize) -> Result<f64, PdeError> {
        if !self.is_admissible(q) {
            return Err(self.inadmissible_error(q));
        }
        let c = (GAMMA * self.pressure_unchecked(q) / q[0]).sqrt();
        Ok((q[1 + axis] / q[0]).abs() + c)
    }

    fn is_admissible(&self, q: &[f64]) -> bool {
        let rho = q[0];
        if !(rho > ADMISSIBILITY_EPS) || !q.iter().all(|v| v.is_finite()) {
            return false;
        }
        self.pressure_unchecked(q) > ADMISSIBILITY_EPS
    }

    fn inadmissible_error(&self, q: &[f64]) -> PdeError {
        if !(q[0] > 0.0) {
            PdeError::NonPositiveDensity(q[0])
        } else {
            PdeError::Inadmissible { rho: q[0], pressure: self.pressure_unchecked(q) }
        }
    }
}

/// Scalar linear advection `dq/dt + a . grad q = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Advection {
    velocity: Vec<f64>,
}

impl Advection {
    pub fn new(velocity: Vec<f64>) -> Self {
        assert!((1..=3).contains(&velocity.len()));
        Self { velocity }
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    /// Exact solution on the periodic unit cube for initial data `initial`.
    pub fn exact<F: Fn(&[f64]) -> f64>(&self, initial: F, x: &[f64], t: f64) -> f64 {
        let shifted: Vec<f64> = x
            .iter()
            .zip(&self.velocity)
            .map(|(xi, ai)| (xi - ai * t).rem_euclid(1.0))
            .collect();
        initial(&shifted)
    }
}

impl PdeSystem for Advection {
    fn dim(&self) -> usize {
        self.velocity.len()
    }

    fn components(&self) -> usize {
        1
    }

    #[inline]
    fn flux_into(&self, q: &[f64], axis: usize, out: &mut [f64]) {
        out[0] = self.velocity[axis] * q[0];
    }

    fn max_signal_speed(&self, _q: &[f64], axis: usize) -> Result<f64, PdeError> {
        Ok(self.velocity[axis].abs())
    }

    fn is_admissible(&self, q: &[f64]) -> bool {
        q[0].is_finite()
    }
}

/// Closed set of systems the solver can be configured with.
#[derive(Debug, Clone, PartialEq)]
pub enum System {
    Euler(Euler),
    Advection(Advection),
}

impl PdeSystem for System {
    fn dim(&self) -> usize {
        match self {
            System::Euler(s) => s.dim(),
            System::Advection(s) => s.dim(),
        }
    }

    fn components(&self) -> usize {
        match self {
            System::Euler(s) => s.components(),
            System::Advection(s) => s.components(),
        }
    }

    #[inline]
    fn flux_into(&self, q: &[f64], axis: usize, out: &mut [f64]) {
        match self {
            System::Euler(s) => s.flux_into(q, axis, out),
            System::Advection(s) => s.flux_into(q, axis, out),
        }
    }

    fn max_signal_speed(&self, q: &[f64], axis: usize) -> Result<f64, PdeError> {
        match self {
            System::Euler(s) => s.max_signal_speed(q, axis),
            System::Advection(s) => s.max_signal_speed(q, axis),
        }
    }

    fn is_admissible(&self, q: &[f64]) -> bool {
        match self {
            System::Euler(s) => s.is_admissible(q),
            System::Advection(s) => s.is_admissible(q),
        }
    }

    fn inadmissible_error(&self, q: &[f64]) -> PdeError {
        match self {
            System::Euler(s) => s.inadmissible_error(q),
            System::Advection(s) => s.inadmissible_error(q),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use proptest::prelude::*;

    /// Spectral radius of dF_axis/dQ by central differences, eigenvalues
    /// taken from nalgebra.
    fn jacobian_spectral_radius(sys: &dyn PdeSystem, q: &[f64], axis: usize) -> f64 {
        let m = sys.components();
        let mut jac = DMatrix::<f64>::zeros(m, m);
        let mut fp = vec![0.0; m];
        let mut fm = vec![0.0; m];
        for k in 0..m {
            let eps = 1e-6 * q[k].abs().max(1.0);
            let mut qp = q.to_vec();
            let mut qm = q.to_vec();
            qp[k] += eps;
            qm[k] -= eps;
            sys.flux_into(&qp, axis, &mut fp);
            sys.flux_into(&qm, axis, &mut fm);
            for i in 0..m {
                jac[(i, k)] = (fp[i] - fm[i]) / (2.0 * eps);
            }
        }
        jac.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn pressure_examples() {
        let e = Euler::new(3);
        assert_relative_eq!(e.pressure(&[1.0, 0.0, 0.0, 0.0, 2.5]).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(e.pressure(&[2.0, 2.0, 0.0, 0.0, 1.0]).unwrap(), 0.0);
        assert_relative_eq!(e.pressure(&[1.0, 1.0, 0.0, 0.0, 1.0]).unwrap(), 0.2, epsilon = 1e-15);
        assert!(matches!(
            e.pressure(&[0.0, 0.0, 0.0, 0.0, 1.0]),
            Err(PdeError::NonPositiveDensity(_))
        ));
    }

    #[test]
    fn flux_examples() {
        let e = Euler::new(3);
        let f = e.flux(&[1.0, 0.0, 0.0, 0.0, 2.5]).unwrap();
        for (a, b) in f.row(0).iter().zip([0.0, 1.0, 0.0, 0.0, 0.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
        let f = e.flux(&[1.0, 1.0, 0.0, 0.0, 2.5]).unwrap();
        let expected = [1.0, 1.8, 0.0, 0.0, 3.3];
        for (a, b) in f.row(0).iter().zip(expected) {
            assert_relative_eq!(*a, b, epsilon = 1e-14);
        }
        assert!(e.flux(&[-0.1, 0.0, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn signal_speed_examples() {
        let e = Euler::new(3);
        let rest = [1.0, 0.0, 0.0, 0.0, 2.5];
        assert_relative_eq!(e.max_signal_speed(&rest, 0).unwrap(), 1.4f64.sqrt(), epsilon = 1e-15);
        assert_relative_eq!(jacobian_spectral_radius(&e, &rest, 0), 1.183_215_956_619_923, epsilon = 1e-6);

        // u = 0.5, c = 1: rho = 1, p = 1/1.4
        let q = e.conserved(1.0, &[0.5, 0.0, 0.0], 1.0 / GAMMA);
        assert_relative_eq!(e.max_signal_speed(&q, 0).unwrap(), 1.5, epsilon = 1e-14);
        assert_relative_eq!(jacobian_spectral_radius(&e, &q, 0), 1.5, max_relative = 1e-6);

        let a = Advection::new(vec![1.0, 0.0, 0.0]);
        assert_eq!(a.max_signal_speed(&[3.0], 0).unwrap(), 1.0);
        assert_eq!(a.max_signal_speed(&[3.0], 1).unwrap(), 0.0);
    }

    #[test]
    fn admissibility_examples() {
        let e = Euler::new(3);
        assert!(e.is_admissible(&[1.0, 0.0, 0.0, 0.0, 2.5]));
        assert!(!e.is_admissible(&[-0.1, 0.0, 0.0, 0.0, 2.5]));
        assert!(!e.is_admissible(&[1.0, 3.0, 0.0, 0.0, 1.0]));
        assert!(Advection::new(vec![1.0, 1.0]).is_admissible(&[-4.0]));
    }

    #[test]
    fn advection_exact_wraps_periodically() {
        let a = Advection::new(vec![1.0, 0.5]);
        let init = |x: &[f64]| x[0] + 10.0 * x[1];
        assert_relative_eq!(a.exact(init, &[0.25, 0.5], 0.5), 0.75 + 2.5, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn signal_speed_matches_jacobian(
            rho in 0.2f64..3.0,
            u in proptest::collection::vec(-2.0f64..2.0, 2),
            p in 0.1f64..5.0,
            axis in 0usize..2,
        ) {
            let e = Euler::new(2);
            let q = e.conserved(rho, &u, p);
            let s = e.max_signal_speed(&q, axis).unwrap();
            prop_assert!(s >= 0.0);
            let oracle = jacobian_spectral_radius(&e, &q, axis);
            prop_assert!((s - oracle).abs() <= 1e-6 * oracle.max(1.0));
        }
    }
}
