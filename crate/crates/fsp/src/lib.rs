//! Exact optimization toolkit for the telecommunications feature-subscription
//! problem: consistency checking, symmetry-aware enumeration of compatible
//! total-order pairs, optimal weighted relaxation via branch and bound, and
//! emission of equivalent MaxSAT / pseudo-Boolean / WCSP / MIP model files.

pub mod encode;
pub mod enumerate;
pub mod instance;
pub mod model;
pub mod oracle;
pub mod softprec;
pub mod solver;

pub use model::{
    AntiSubscription, BiRegionCatalogue, BiRegionSubscription, Catalogue, FeatureId, PrecSet,
    Relaxation, Subscription, TotalOrder,
};
