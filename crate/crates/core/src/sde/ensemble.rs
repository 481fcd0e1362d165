use std::io::{self, Read, Write};

use crate::model::TimeGrid;
use crate::scalar::Real;

/// A seeded batch of simulated trajectories on a uniform grid.
///
/// Storage is flat and row-major in `(path, player, step)`; states have
/// `steps + 1` entries per (path, player), Brownian increments and controls
/// have `steps`. `log_weights` holds the per-path Girsanov log-weight
/// accumulated under reference-measure simulation (zero when the drift is
/// simulated directly).
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble<T> {
    pub(crate) grid: TimeGrid<T>,
    pub(crate) num_paths: usize,
    pub(crate) num_players: usize,
    pub(crate) states: Vec<T>,
    pub(crate) increments: Vec<T>,
    pub(crate) controls: Vec<T>,
    pub(crate) log_weights: Vec<T>,
    pub(crate) seed: u64,
}

impl<T: Real> PathEnsemble<T> {
    pub fn grid(&self) -> &TimeGrid<T> {
        &self.grid
    }

    pub fn num_paths(&self) -> usize {
        self.num_paths
    }

    pub fn num_players(&self) -> usize {
        self.num_players
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    fn state_base(&self, path: usize, player: usize) -> usize {
        (path * self.num_players + player) * (self.grid.steps() + 1)
    }

    #[inline]
    fn step_base(&self, path: usize, player: usize) -> usize {
        (path * self.num_players + player) * self.grid.steps()
    }

    /// State of `player` on `path` at grid node `step` (0..=n).
    #[inline]
    pub fn state(&self, path: usize, player: usize, step: usize) -> T {
        self.states[self.state_base(path, player) + step]
    }

    /// Brownian increment over `[t_step, t_{step+1})`.
    #[inline]
    pub fn increment(&self, path: usize, player: usize, step: usize) -> T {
        self.increments[self.step_base(path, player) + step]
    }

    /// Control applied on `[t_step, t_{step+1})`.
    #[inline]
    pub fn control(&self, path: usize, player: usize, step: usize) -> T {
        self.controls[self.step_base(path, player) + step]
    }

    #[inline]
    pub fn log_weight(&self, path: usize) -> T {
        self.log_weights[path]
    }

    /// States of all players of one path at a node, gathered into `out`.
    pub fn gather_states(&self, path: usize, step: usize, out: &mut Vec<T>) {
        out.clear();
        for i in 0..self.num_players {
            out.push(self.state(path, i, step));
        }
    }

    /// Binary dump, documented for reproducibility.
    ///
    /// Layout: magic `TIGE1`; six little-endian u64 fields (state dimension,
    /// noise dimension, paths, players, steps, seed); then little-endian f64
    /// payload: horizon, states row-major in (path, player, step), Brownian
    /// increments, controls, per-path log-weights.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(b"TIGE1")?;
        for field in [
            1u64,
            1u64,
            self.num_paths as u64,
            self.num_players as u64,
            self.grid.steps() as u64,
            self.seed,
        ] {
            w.write_all(&field.to_le_bytes())?;
        }
        let mut write_f64 = |x: f64| w.write_all(&x.to_le_bytes());
        write_f64(self.grid.horizon().to_f64().expect("finite horizon"))?;
        for buf in [&self.states, &self.increments, &self.controls, &self.log_weights] {
            for &v in buf.iter() {
                write_f64(v.to_f64().expect("finite sample"))?;
            }
        }
        Ok(())
    }
}

impl PathEnsemble<f64> {
    /// Reads a dump produced by [`PathEnsemble::write_binary`].
    pub fn read_binary<R: Read>(mut r: R) -> io::Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != b"TIGE1" {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
        }
        let mut u64_field = || -> io::Result<u64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(u64::from_le_bytes(b))
        };
        let _m_dim = u64_field()?;
        let _d_dim = u64_field()?;
        let num_paths = u64_field()? as usize;
        let num_players = u64_field()? as usize;
        let steps = u64_field()? as usize;
        let seed = u64_field()?;
        let mut f64_field = || -> io::Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        let horizon = f64_field()?;
        let grid = TimeGrid::new(horizon, steps)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
        let mut read_block = |len: usize| -> io::Result<Vec<f64>> {
            (0..len).map(|_| f64_field()).collect()
        };
        let per_pair = num_paths * num_players;
        Ok(Self {
            grid,
            num_paths,
            num_players,
            states: read_block(per_pair * (steps + 1))?,
            increments: read_block(per_pair * steps)?,
            controls: read_block(per_pair * steps)?,
            log_weights: read_block(num_paths)?,
            seed,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip_is_exact() {
        let grid = TimeGrid::new(1.0f64, 2).unwrap();
        let ens = PathEnsemble {
            grid,
            num_paths: 2,
            num_players: 1,
            states: vec![0.0, 0.5, 1.0, 0.0, -0.5, -1.0],
            increments: vec![0.5, 0.5, -0.5, -0.5],
            controls: vec![0.1, 0.2, 0.3, 0.4],
            log_weights: vec![0.0, -0.125],
            seed: 7,
        };
        let mut buf = Vec::new();
        ens.write_binary(&mut buf).unwrap();
        let back = PathEnsemble::read_binary(buf.as_slice()).unwrap();
        assert_eq!(ens, back);
        assert_eq!(&buf[..5], b"TIGE1");
    }
}
