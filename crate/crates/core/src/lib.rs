pub mod bits;
pub mod constructions;
pub mod error;
pub mod gf;
pub mod rules;
pub mod search;
pub mod sidon;
pub mod space;
