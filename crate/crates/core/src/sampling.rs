//! Seeded sampling helpers shared by the property batteries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Vector;

pub type SampleRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SampleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point of the unit cell [0,1)^dim.
pub fn cell_point(rng: &mut SampleRng, dim: usize) -> Vector {
    let x = rng.gen::<f64>();
    let y = if dim == 2 { rng.gen::<f64>() } else { 0.0 };
    Vector::new(x, y)
}

/// Dyadic point k / 2^20 of the unit cell; translating it by a lattice
/// vector is exact in floating point.
pub fn dyadic_cell_point(rng: &mut SampleRng, dim: usize) -> Vector {
    let scale = (1u64 << 20) as f64;
    let mut draw = || rng.gen_range(0..(1u64 << 20)) as f64 / scale;
    let x = draw();
    let y = if dim == 2 { draw() } else { 0.0 };
    Vector::new(x, y)
}

pub fn unit_direction(rng: &mut SampleRng, dim: usize) -> Vector {
    if dim == 1 {
        Vector::new(if rng.gen::<bool>() { 1.0 } else { -1.0 }, 0.0)
    } else {
        let t = rng.gen::<f64>() * std::f64::consts::TAU;
        Vector::new(t.cos(), t.sin())
    }
}

/// Random vector with log-uniform magnitude in [10^lo, 10^hi].
pub fn vector_in_shell(rng: &mut SampleRng, dim: usize, lo: f64, hi: f64) -> Vector {
    let r = 10f64.powf(rng.gen_range(lo..hi));
    unit_direction(rng, dim) * r
}
