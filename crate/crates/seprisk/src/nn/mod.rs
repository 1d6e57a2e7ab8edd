//! Hand-rolled neural network kernels: tensors, layers with explicit
//! reverse-mode gradients, the class-weighted BCE loss and RMSProp.
//!
//! Everything runs in 64-bit reals so backward passes can be validated
//! against central finite differences at tight tolerances.

pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod loss;
pub mod lstm;
pub mod norm;
pub mod pool;
pub mod rmsprop;
pub mod tensor;

pub use conv::{Conv2d, Conv2dGrads};
pub use dense::{Activation, Dense, DenseCache, DenseGrads};
pub use gradcheck::grad_check;
pub use loss::{weighted_bce, weighted_bce_grad, ClassWeights};
pub use lstm::{Lstm, LstmCache, LstmGrads};
pub use norm::{BatchNorm, BatchNormCache, BatchNormGrads};
pub use pool::{pooled_extent, MaxPool, MaxPoolCache};
pub use rmsprop::RmsProp;
pub use tensor::{logit, relu, relu_backward, sigmoid, Tensor};
