pub mod badlists;
pub mod code;
pub mod decodability;
pub mod gf;
pub mod linalg;
pub mod mc;
pub mod potential;
pub mod typedist;
