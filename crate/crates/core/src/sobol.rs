//! Sobol low-discrepancy sequence (Joe–Kuo direction numbers, Gray-code
//! order) with optional linear-matrix scrambling plus a digital shift.

use rand::Rng;

use crate::bounds::Bounds;
use crate::error::{Error, Result};
use crate::seeding;
use crate::sobol_table::{MAX_DIMS, POLY, VINIT};

const BITS: usize = 32;

#[derive(Clone, Debug)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

fn direction_numbers(dim: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if dim == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let poly = POLY[dim];
    let degree = (32 - poly.leading_zeros() - 1) as usize;
    let mut m = [0u32; BITS];
    m[..degree].copy_from_slice(&VINIT[dim][..degree]);
    for k in degree..BITS {
        let mut next = m[k - degree] ^ (m[k - degree] << degree);
        for j in 1..degree {
            if (poly >> (degree - j)) & 1 == 1 {
                next ^= m[k - j] << j;
            }
        }
        m[k] = next;
    }
    for k in 0..BITS {
        v[k] = m[k] << (BITS - 1 - k);
    }
    v
}

impl Sobol {
    /// Unscrambled sequence; the first point is the origin.
    pub fn new(dims: usize) -> Result<Self> {
        if dims == 0 || dims > MAX_DIMS {
            return Err(Error::InvalidInput(format!("Sobol dimension must be in 1..={MAX_DIMS}, got {dims}")));
        }
        let directions = (0..dims).map(direction_numbers).collect();
        Ok(Self { directions, state: vec![0; dims], index: 0 })
    }

    /// Scrambled sequence, deterministic in `seed`.
    pub fn scrambled(dims: usize, seed: u64) -> Result<Self> {
        let mut s = Self::new(dims)?;
        let mut rng = seeding::rng(seeding::derive(seed, "sobol-scramble", dims as u64));
        for d in 0..dims {
            // Lower-triangular binary matrix with unit diagonal; digit i is the
            // (i+1)-th binary digit, stored at bit 31 - i.
            let rows: Vec<u32> = (0..BITS)
                .map(|i| {
                    let bit = 1u32 << (BITS - 1 - i);
                    let above = if i == 0 { 0 } else { !((bit << 1).wrapping_sub(1)) };
                    bit | (rng.random::<u32>() & above)
                })
                .collect();
            for v in s.directions[d].iter_mut() {
                let src = *v;
                *v = rows
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, row)| acc | (((src & row).count_ones() & 1) << (BITS - 1 - i)));
            }
            s.state[d] = rng.random::<u32>();
        }
        Ok(s)
    }

    pub fn dims(&self) -> usize {
        self.directions.len()
    }

    /// Next point in `[0, 1)^d`.
    pub fn next_point(&mut self) -> Vec<f64> {
        if self.index > 0 {
            let c = self.index.trailing_zeros() as usize;
            for (s, dir) in self.state.iter_mut().zip(&self.directions) {
                *s ^= dir[c.min(BITS - 1)];
            }
        }
        self.index += 1;
        self.state.iter().map(|s| *s as f64 / 4_294_967_296.0).collect()
    }

    pub fn take_points(&mut self, n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|_| self.next_point()).collect()
    }
}

/// `n` scrambled Sobol points mapped into `bounds`.
pub fn sobol_points(bounds: &Bounds, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut s = Sobol::scrambled(bounds.dim(), seed)?;
    Ok(s.take_points(n).into_iter().map(|u| bounds.from_unit(&u)).collect())
}
