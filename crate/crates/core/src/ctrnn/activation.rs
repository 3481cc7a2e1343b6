use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Sigmoid,
}

impl Activation {
    pub fn apply<T: Scalar>(self, x: T) -> T {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => T::one() / (T::one() + (-x).exp()),
        }
    }

    pub fn derivative<T: Scalar>(self, x: T) -> T {
        self.derivative_from_output(self.apply(x))
    }

    /// Derivative expressed through the activation value `fx = f(x)`.
    pub fn derivative_from_output<T: Scalar>(self, fx: T) -> T {
        match self {
            Activation::Tanh => T::one() - fx * fx,
            Activation::Sigmoid => fx * (T::one() - fx),
        }
    }
}
