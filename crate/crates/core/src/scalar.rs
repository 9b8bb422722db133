use std::fmt::Debug;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar accepted by the numeric kernels.
///
/// Dominance and sorting only need `PartialOrd` and accept any ordered type
/// (including exact rationals); crowding distance and BLEU need logarithms
/// and an infinity sentinel, hence this bound.
pub trait Scalar: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Default + Send + Sync + 'static {}
