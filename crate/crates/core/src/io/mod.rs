//! File formats: PGM images, float planes, PLY meshes, image stacks and
//! project configuration.

pub mod config;
pub mod pgm;
pub mod planes;
pub mod ply;
pub mod stack;

pub use config::{load_config, parse_config, save_config, ProjectConfig};
pub use pgm::{load_pgm, save_pgm};
pub use planes::{load_planes, save_planes, Planes};
pub use ply::save_ply;
pub use stack::{load_stack, save_stack};
