pub mod eval;
pub mod extract;
pub mod fuse;
pub mod score;
pub mod simulate;
pub mod train;
