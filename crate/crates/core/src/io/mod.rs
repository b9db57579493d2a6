//! Text and binary formats: OBJ meshes, ASCII PLY clouds, PGM/PPM maps.

mod obj;
mod pgm;
mod ply;

pub use obj::{parse_obj, write_obj};
pub use pgm::{parse_pgm, write_pgm, write_ppm, GrayImage};
pub use ply::{parse_ply, write_ply, CloudPoint};
