use crate::error::{Error, Result};

/// Uniform grid on `[0, 1]^dim` with `m` subdivisions per axis.
///
/// States are the `(m - 1)^dim` interior points in row-major order: the first
/// coordinate runs fastest. Grid indices run over `0..=m`, with `0` and `m` on
/// the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    dim: usize,
    m: usize,
}

impl GridSpec {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::Config(format!("grid dimension must be 1, 2 or 3, got {dim}")));
        }
        if m < 2 {
            return Err(Error::Config(format!("grid needs m >= 2 subdivisions, got {m}")));
        }
        Ok(GridSpec { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Interior points per axis.
    pub fn side(&self) -> usize {
        self.m - 1
    }

    pub fn n_states(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    /// Grid coordinates (each in `1..m`) of a state.
    pub fn coords(&self, state: usize) -> [usize; 3] {
        let s = self.side();
        let mut c = [0; 3];
        let mut r = state;
        for ci in c.iter_mut().take(self.dim) {
            *ci = r % s + 1;
            r /= s;
        }
        c
    }

    /// State index of interior grid coordinates, `None` on or outside the boundary.
    pub fn index(&self, coords: &[usize]) -> Option<usize> {
        let s = self.side();
        let mut idx = 0;
        for k in (0..self.dim).rev() {
            let c = coords[k];
            if c == 0 || c >= self.m {
                return None;
            }
            idx = idx * s + (c - 1);
        }
        Some(idx)
    }

    /// Physical coordinates of grid indices.
    pub fn point(&self, coords: &[usize]) -> [f64; 3] {
        let mut p = [0.0; 3];
        for k in 0..self.dim {
            p[k] = coords[k] as f64 / self.m as f64;
        }
        p
    }

    pub fn state_point(&self, state: usize) -> [f64; 3] {
        self.point(&self.coords(state))
    }

    /// The grid with half as many subdivisions (`m` must be even).
    pub fn coarsen(&self) -> Result<GridSpec> {
        if !self.m.is_multiple_of(2) || self.m < 4 {
            return Err(Error::Config(format!("grid with m = {} cannot be coarsened", self.m)));
        }
        GridSpec::new(self.dim, self.m / 2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_maps_are_inverse() {
        for dim in 1..=2 {
            let g = GridSpec::new(dim, 7).unwrap();
            for s in 0..g.n_states() {
                assert_eq!(g.index(&g.coords(s)[..dim]), Some(s));
            }
        }
    }

    #[test]
    fn row_major_with_first_axis_fastest() {
        let g = GridSpec::new(2, 4).unwrap();
        assert_eq!(g.index(&[1, 1]), Some(0));
        assert_eq!(g.index(&[2, 1]), Some(1));
        assert_eq!(g.index(&[1, 2]), Some(3));
        assert_eq!(g.index(&[0, 2]), None);
        assert_eq!(g.index(&[2, 4]), None);
    }

    #[test]
    fn sizes() {
        let g = GridSpec::new(2, 64).unwrap();
        assert_eq!(g.n_states(), 63 * 63);
        assert_eq!(g.h(), 1.0 / 64.0);
        assert!(GridSpec::new(2, 1).is_err());
        assert_eq!(g.coarsen().unwrap().m(), 32);
        assert!(GridSpec::new(1, 6).unwrap().coarsen().is_ok());
        assert!(GridSpec::new(1, 5).unwrap().coarsen().is_err());
    }
}
