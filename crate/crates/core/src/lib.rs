pub mod backends;
pub mod baseline;
pub mod embed;
pub mod eval;
pub mod extract;
pub mod kg;
pub mod pathfind;
pub mod text;
