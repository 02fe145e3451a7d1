//! Tiny dense helpers: 2x2 symmetric matrices and a 4x4 SPD solve.

use crate::scalar::Scalar;

/// Symmetric 2x2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sym2<T> {
    pub a: T,
    pub b: T,
    pub d: T,
}

impl<T: Scalar> Sym2<T> {
    pub fn new(a: T, b: T, d: T) -> Self {
        Self { a, b, d }
    }

    pub fn identity() -> Self {
        Self::new(T::one(), T::zero(), T::one())
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.b
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    /// `Tr(self * other)`.
    pub fn frobenius_dot(&self, other: &Self) -> T {
        self.a * other.a + T::of(2.0) * self.b * other.b + self.d * other.d
    }

    pub fn min_eigenvalue(&self) -> T {
        let half = T::of(0.5);
        let mid = half * (self.a + self.d);
        let rad = (half * (self.a - self.d)).hypot(self.b);
        mid - rad
    }

    pub fn max_eigenvalue(&self) -> T {
        let half = T::of(0.5);
        let mid = half * (self.a + self.d);
        let rad = (half * (self.a - self.d)).hypot(self.b);
        mid + rad
    }

    /// Strict positive definiteness via leading minors.
    pub fn is_positive_definite(&self) -> bool {
        self.a > T::zero() && self.d > T::zero() && self.det() > T::zero()
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.a - other.a, self.b - other.b, self.d - other.d)
    }

    pub fn add_diag(&self, s: T) -> Self {
        Self::new(self.a + s, self.b, self.d + s)
    }

    /// `A^T S A` with `A = [[scale, shift], [0, 1]]`, i.e. the quadratic form
    /// rewritten under `x = scale e + shift`.
    pub fn affine_congruence(&self, scale: T, shift: T) -> Self {
        let two = T::one() + T::one();
        Self::new(
            self.a * scale * scale,
            scale * (self.a * shift + self.b),
            (self.a * shift + two * self.b) * shift + self.d,
        )
    }

    pub fn max_abs(&self) -> T {
        self.a.abs().max(self.b.abs()).max(self.d.abs())
    }
}

/// Solves `h x = g` for a symmetric positive definite 4x4 `h` by Cholesky.
/// Returns `None` if `h` is not numerically positive definite.
pub(crate) fn solve_spd4<T: Scalar>(h: &[[T; 4]; 4], g: &[T; 4]) -> Option<[T; 4]> {
    let mut l = [[T::zero(); 4]; 4];
    for i in 0..4 {
        for j in 0..=i {
            let mut sum = h[i][j];
            for k in 0..j {
                sum = sum - l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > T::zero()) {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    let mut y = [T::zero(); 4];
    for i in 0..4 {
        let mut sum = g[i];
        for k in 0..i {
            sum = sum - l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = [T::zero(); 4];
    for i in (0..4).rev() {
        let mut sum = y[i];
        for k in (i + 1)..4 {
            sum = sum - l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    Some(x)
}
