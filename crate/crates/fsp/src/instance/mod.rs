//! Deterministic random instance generation and the textual `.fsp`
//! instance format with its generator manifest.

mod format;
mod gen;
mod rng;

pub use format::{
    parse_fsp, parse_manifest, write_fsp, write_manifest, FormatError, Instance,
};
pub use gen::{
    gen_catalogue, gen_subscription, index_from_pair, pair_from_index, CatalogueSpec, GenError,
    PairType, SubscriptionSpec,
};
pub use rng::Rng;
