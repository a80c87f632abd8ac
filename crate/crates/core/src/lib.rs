//! Directed 2-(v,5,1) designs: orbit development from base blocks, exact
//! verification, directed trades, intersection-spectrum realization,
//! recursive GDD/PBD constructions and small brute-force oracles.

pub mod catalog;
pub mod develop;
pub mod model;
pub mod oracle;
pub mod recursive;
pub mod trades;
pub mod verify;

pub use catalog::{Catalog, CatalogError, ErrataMode};
pub use develop::{
    apply_permutation, develop, BaseBlockSet, DevelopmentRule, InfinityPolicy, Permutation,
};
pub use model::{Block, Design, OrderedPair, Params, Point, Universe};
pub use trades::{jd, realize_spectrum, validate_trade, SpectrumResult, Trade};
pub use verify::{intersection, verify_dd, verify_dgdd, GroupPartition, VerificationReport};
