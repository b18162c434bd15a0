//! Space-time reduced operators: index map, temporal factors, spatial
//! projections, the hyper-reduced convective term, lifting of initial
//! conditions and the assembled model.

pub mod convective;
pub mod index;
pub mod kron;
pub mod lifting;
pub mod model;
pub mod space;
pub mod temporal;

pub use convective::ConvectiveAffineSet;
pub use index::IndexMap;
pub use kron::KronOp;
pub use lifting::{history_response, Lifting};
pub use model::{HyperSettings, LinearBlocks, ReducedModel, SpaceModel};
pub use space::SpatialOperators;
pub use temporal::{primitive, shifted_gram, triple_product, TemporalFactors, Tensor3};
