pub mod bench;
pub mod compare;
pub mod gen;
pub mod recover;
