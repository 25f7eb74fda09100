//! Functions on the unit cube that quadrature and error measurement work
//! against.

use crate::network::MultiIndex;

/// A real function on `(0,1)^d`. Callers guarantee `x.len() == dim()`.
pub trait ScalarField: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
}

/// A function that also exposes exact partial derivatives.
pub trait SmoothField: ScalarField {
    /// Highest supported derivative order, `None` if unbounded.
    fn max_order(&self) -> Option<u32>;

    /// `d^alpha f(x)`; callers guarantee the order is supported.
    fn derivative(&self, alpha: &MultiIndex, x: &[f64]) -> f64;
}

impl<T: ScalarField + ?Sized> ScalarField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (**self).value(x)
    }
}

impl<T: SmoothField + ?Sized> SmoothField for &T {
    fn max_order(&self) -> Option<u32> {
        (**self).max_order()
    }

    fn derivative(&self, alpha: &MultiIndex, x: &[f64]) -> f64 {
        (**self).derivative(alpha, x)
    }
}

/// Adapts a closure into a [`ScalarField`].
pub struct FnField<F> {
    d: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(d: usize, f: F) -> Self {
        Self { d, f }
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

/// The constant function, with all derivatives vanishing.
pub struct Constant {
    pub d: usize,
    pub value: f64,
}

impl ScalarField for Constant {
    fn dim(&self) -> usize {
        self.d
    }

    fn value(&self, _x: &[f64]) -> f64 {
        self.value
    }
}

impl SmoothField for Constant {
    fn max_order(&self) -> Option<u32> {
        None
    }

    fn derivative(&self, alpha: &MultiIndex, _x: &[f64]) -> f64 {
        if alpha.is_zero() {
            self.value
        } else {
            0.0
        }
    }
}
