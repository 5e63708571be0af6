//! Test-only companions to the main crate: independent oracles that
//! recompute results by other means, and randomized scene generators used
//! by property and acceptance tests. Nothing here is part of the product.

pub mod oracles;
pub mod scenes;
