//! Scalar abstraction for the numeric kernels.
//!
//! The pheromone arithmetic and the k-means placement are written against
//! [`Real`] so they instantiate at `f32` or `f64`; the simulation stack pins
//! `f64` through the aliases at the crate root.

use num_traits::Float;

pub trait Real: Float + Copy + PartialOrd + std::fmt::Debug + 'static {}

impl<T> Real for T where T: Float + Copy + PartialOrd + std::fmt::Debug + 'static {}
