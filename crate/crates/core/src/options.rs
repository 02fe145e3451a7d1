use crate::scalar::Scalar;

/// Numerical settings of the robust best-response solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    /// Absolute tolerance of the bisection on the utility threshold.
    pub bisection_tol: T,
    /// Stopping rule of the alternating optimization: `|dU| + |dalpha|`.
    pub ao_tol: T,
    pub ao_max_iterations: usize,
    /// Grid step of the strategy scan over `[tau0, 1]`.
    pub scan_step: T,
    /// Final bracket width of the golden-section refinement.
    pub refine_tol: T,
    /// Factor applied to the barrier weight `1/t` after each centering.
    pub barrier_reduction: T,
    /// Newton decrement (`lambda^2 / 2`) accepted as centered.
    pub newton_tol: T,
    pub max_barrier_steps: usize,
}

impl<T: Scalar> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            bisection_tol: T::of(1e-6),
            ao_tol: T::of(1e-6),
            ao_max_iterations: 200,
            scan_step: T::of(1e-3),
            refine_tol: T::of(1e-6),
            barrier_reduction: T::of(0.2),
            newton_tol: T::of(1e-9),
            max_barrier_steps: 50,
        }
    }
}
