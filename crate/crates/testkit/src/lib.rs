//! Oracles and fixtures shared by the scalpemd test suites.
//!
//! Nothing here depends on the library under test: oracles are written from
//! first principles and fixtures are plain numbers.

pub mod lp_oracle;
pub mod published;
pub mod synthetic;
