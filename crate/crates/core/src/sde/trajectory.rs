use std::io::{self, Read, Write};

use num_complex::Complex64;

use crate::params::TimeGrid;

/// One path sampled at every node of its grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<const D: usize> {
    grid: TimeGrid,
    states: Vec<[Complex64; D]>,
    seed: u64,
    path: u64,
}

impl<const D: usize> Trajectory<D> {
    pub fn new(grid: TimeGrid, states: Vec<[Complex64; D]>, seed: u64, path: u64) -> Self {
        Trajectory {
            grid,
            states,
            seed,
            path,
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn states(&self) -> &[[Complex64; D]] {
        &self.states
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> u64 {
        self.path
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[Complex64; D])> + '_ {
        self.states.iter().enumerate().map(|(k, x)| (self.grid.time(k), x))
    }
}

/// Path-major dump: for every path, every node, every component, the real
/// and imaginary parts as little-endian f64. No header.
pub fn write_trajectory_dump<W: Write, const D: usize>(
    mut w: W,
    trajectories: &[Trajectory<D>],
) -> io::Result<()> {
    for traj in trajectories {
        for x in traj.states() {
            for z in x {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
    }
    w.flush()
}

/// Inverse of [`write_trajectory_dump`] given the node count per path.
pub fn read_trajectory_dump<R: Read, const D: usize>(
    mut r: R,
    n_nodes: usize,
) -> io::Result<Vec<Vec<[Complex64; D]>>> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let per_path = n_nodes * D * 16;
    if per_path == 0 || bytes.len() % per_path != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("dump of {} bytes is not a whole number of {per_path}-byte paths", bytes.len()),
        ));
    }
    let f = |chunk: &[u8]| f64::from_le_bytes(chunk.try_into().unwrap());
    let paths = bytes
        .chunks_exact(per_path)
        .map(|path| {
            path.chunks_exact(D * 16)
                .map(|node| {
                    let mut x = [Complex64::new(0.0, 0.0); D];
                    for (i, z) in node.chunks_exact(16).enumerate() {
                        x[i] = Complex64::new(f(&z[..8]), f(&z[8..]));
                    }
                    x
                })
                .collect()
        })
        .collect();
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_layout_is_little_endian_pairs() {
        let grid = TimeGrid::new(0.0, 1.0, 1.0).unwrap();
        let states = vec![[Complex64::new(1.0, -2.0)], [Complex64::new(0.5, 0.25)]];
        let traj = Trajectory::new(grid, states.clone(), 0, 0);
        let mut buf = Vec::new();
        write_trajectory_dump(&mut buf, &[traj.clone(), traj]).unwrap();
        assert_eq!(buf.len(), 2 * 2 * 16);
        assert_eq!(&buf[..8], &1.0f64.to_le_bytes());
        assert_eq!(&buf[8..16], &(-2.0f64).to_le_bytes());
        let back: Vec<Vec<[Complex64; 1]>> = read_trajectory_dump(&buf[..], 2).unwrap();
        assert_eq!(back, vec![states.clone(), states]);
        assert!(read_trajectory_dump::<_, 1>(&buf[..40], 2).is_err());
    }
}
