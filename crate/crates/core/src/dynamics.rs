use crate::linalg::{Matrix, Vector};
use crate::torus::ToralAutomorphism;

/// A torus diffeomorphism presented through a lift to `ℝ^D` that commutes
/// with integer translations.
pub trait Dynamics<const D: usize> {
    /// The linear automorphism in the isotopy class of the map.
    fn base(&self) -> &ToralAutomorphism<D>;
    fn forward(&self, x: &Vector<D>) -> Vector<D>;
    fn backward(&self, x: &Vector<D>) -> Vector<D>;
    fn jacobian(&self, x: &Vector<D>) -> Matrix<D>;
}

impl<const D: usize> Dynamics<D> for ToralAutomorphism<D> {
    fn base(&self) -> &ToralAutomorphism<D> {
        self
    }
    fn forward(&self, x: &Vector<D>) -> Vector<D> {
        self.apply(x)
    }
    fn backward(&self, x: &Vector<D>) -> Vector<D> {
        self.apply_inverse(x)
    }
    fn jacobian(&self, _x: &Vector<D>) -> Matrix<D> {
        *self.float_matrix()
    }
}
