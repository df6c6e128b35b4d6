//! Exact parameter gradients for losses that contain the field's input
//! gradient.

pub mod grad;
pub mod objective;
pub mod tape;

pub use grad::{grad_params_of_input_gradient, grad_params_of_value, ParamGrad};
pub use objective::{
    grad_params_of_loss, sample_field, Cotangents, FieldState, LossEvaluator, LossGradient, SampleCotangents,
    Samples, GRAD_FLOOR,
};
pub use tape::Tape;
