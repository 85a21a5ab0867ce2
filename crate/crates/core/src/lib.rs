//! Closed-form Gaussian optimal-transport feature transforms.
//!
//! Feature maps are treated as samples of a multivariate Gaussian. The crate
//! fits mean and covariance, builds affine maps between two such Gaussians
//! (the optimal-transport map plus the AdaIN, WCT, rotated-WCT and whitening
//! baselines), applies them with a blend weight, and scores the result with
//! Gatys content and style losses.
//!
//! Pixel-space color transfer in [`imageio`] runs the same transforms on the
//! three color channels of an image; [`tensorio`] exchanges feature maps with
//! other tools as NPY files.

pub mod error;
pub mod imageio;
pub mod linalg;
pub mod rng;
pub mod stats;
pub mod tensorio;
pub mod transforms;

pub use error::{Error, Result};
pub use linalg::{OrthogonalMatrix, SymMatrix, DEFAULT_RIDGE};
pub use stats::{FeatureMap, GaussianStats, LossReport};
pub use transforms::{AffineTransform, RegionMask, TransformKind, WhiteningMethod};
