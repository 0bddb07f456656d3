//! Scalar abstraction for embedding and similarity arithmetic.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point element type for embeddings and similarity scores: `f32` or `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    fn from_f64_lossy(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("finite f64 always casts to a float type")
    }

    fn to_f64_lossy(self) -> f64 {
        <f64 as NumCast>::from(self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Dot product of two equally long slices.
pub fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter()
        .zip(b.iter())
        .fold(S::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Euclidean norm.
pub fn l2_norm<S: Scalar>(v: &[S]) -> S {
    dot(v, v).sqrt()
}

/// Scales `v` to unit length in place. Returns `false` when `v` is the zero vector.
pub fn normalize_in_place<S: Scalar>(v: &mut [S]) -> bool {
    let norm = l2_norm(v);
    if norm <= S::zero() || !norm.is_finite() {
        return false;
    }
    for x in v.iter_mut() {
        *x = *x / norm;
    }
    true
}
