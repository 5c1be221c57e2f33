//! Discretization of sums of independent categorical vectors and the
//! approximate-equilibrium algorithms built on it.
//!
//! The crate is organised bottom-up:
//!
//! * [`game_model`] holds anonymous games, the partition lattice, mixed
//!   profiles and their JSON file formats.
//! * [`multinomial_dist`] computes the exact law of a sum of independent
//!   unit vectors, total variation distances, expected utilities and regret.
//! * [`tdp`] builds trickle-down decision trees and their cell signatures.
//! * [`discretizer`] rounds a whole profile cell by cell.
//! * [`tv_lab`] measures discretization error and checks the Poisson-type
//!   approximation lemmas numerically.
//! * [`anon_solver`] is the approximation scheme for anonymous games.
//! * [`general_games`] is the grid search for small normal-form games.
//! * [`minimax_opt`] optimizes max-of-expectations objectives over
//!   Bernoulli sums.

pub mod anon_solver;
pub mod discretizer;
mod error;
pub mod game_model;
pub mod general_games;
pub mod guard;
pub mod minimax_opt;
pub mod multinomial_dist;
pub mod numeric;
pub mod tdp;
pub mod tv_lab;

pub use error::{Error, Result};
pub use game_model::{AnonymousGame, MixedProfile, Partition};
pub use multinomial_dist::{Scalar, SumDistribution};
pub use numeric::Rational;
pub use tdp::{CellSignature, LeafType, TdpTree};
