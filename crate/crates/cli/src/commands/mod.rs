pub mod dag;
pub mod estimate;
pub mod simulate;
