//! Task-collection families.

mod adversarial;
pub mod container;
mod random;
pub mod recursion;

pub use adversarial::{
    gen_adversarial_3d, gen_adversarial_highdim, Adversarial3d, Adversarial3dSpec,
    AdversarialHighDim, AdversarialHighDimSpec,
};
pub use random::{
    anisotropic_covariance, anisotropic_spectrum, gen_anisotropic, gen_isotropic, gen_rank_dminus1,
    rank_dminus1_from_directions, Generated, RankDeficient, ANISO_LAMBDA_MAX, ANISO_LAMBDA_MIN,
};
pub use recursion::{xk_tilde, Recursion};
