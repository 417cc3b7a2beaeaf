use std::sync::Arc;

use crate::error::{Error, Result};

/// A Fourier mode `n = (k, l, m)` together with its Laplacian and `A = 1 - Δ`
/// eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub k: i32,
    pub l: i32,
    pub m: i32,
    pub lap_eig: u32,
    pub a_eig: u32,
}

impl ModeIndex {
    pub fn new(k: i32, l: i32, m: i32) -> Self {
        let lap_eig = (k * k + l * l + m * m) as u32;
        Self {
            k,
            l,
            m,
            lap_eig,
            a_eig: 1 + lap_eig,
        }
    }

    /// Largest absolute wavenumber component.
    pub fn sup_norm(&self) -> i32 {
        self.k.abs().max(self.l.abs()).max(self.m.abs())
    }
}

/// Eigenvalue window used to select modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenRange {
    /// `a_eig <= n`, the range of `P_N`.
    AtMost(u32),
    /// `a_eig > n`, the range of `Q_N` (always truncated by the cube).
    Above(u32),
    /// `n - k < a_eig < n + k`, the intermediate annulus.
    Annulus {
        n: u32,
        k: u32,
    },
    All,
}

impl EigenRange {
    pub fn contains(&self, a_eig: u32) -> bool {
        match *self {
            EigenRange::AtMost(n) => a_eig <= n,
            EigenRange::Above(n) => a_eig > n,
            EigenRange::Annulus { n, k } => {
                let a = a_eig as i64;
                a > n as i64 - k as i64 && a < n as i64 + k as i64
            }
            EigenRange::All => true,
        }
    }

    /// Largest eigenvalue that must be resolved for the window to be complete,
    /// `None` when the window is unbounded.
    pub fn max_required(&self) -> Option<u32> {
        match *self {
            EigenRange::AtMost(n) => Some(n),
            EigenRange::Annulus { n, k } => Some(n + k - 1),
            EigenRange::Above(n) => Some(n),
            EigenRange::All => None,
        }
    }

    fn min_admitted(&self) -> u32 {
        match *self {
            EigenRange::AtMost(_) | EigenRange::All => 1,
            EigenRange::Above(n) => n + 1,
            EigenRange::Annulus { n, k } => (n as i64 - k as i64 + 1).max(1) as u32,
        }
    }
}

/// Largest `a_eig` such that every mode with that eigenvalue or less lies in the
/// cube `|k|,|l|,|m| <= radius`.
pub fn complete_eigen_bound(radius: usize) -> u32 {
    let r = radius as u32 + 1;
    r * r
}

/// Dense cubic mode lattice `|k|,|l|,|m| <= G` in lexicographic `(k, l, m)`
/// order with precomputed eigenvalue tables.
#[derive(Debug)]
pub struct Lattice {
    radius: usize,
    side: usize,
    modes: Vec<ModeIndex>,
}

impl PartialEq for Lattice {
    fn eq(&self, other: &Self) -> bool {
        self.radius == other.radius
    }
}

impl Lattice {
    pub fn new(radius: usize) -> Arc<Self> {
        let g = radius as i32;
        let side = 2 * radius + 1;
        let mut modes = Vec::with_capacity(side * side * side);
        for k in -g..=g {
            for l in -g..=g {
                for m in -g..=g {
                    modes.push(ModeIndex::new(k, l, m));
                }
            }
        }
        Arc::new(Self {
            radius,
            side,
            modes,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn mode(&self, idx: usize) -> ModeIndex {
        self.modes[idx]
    }

    #[inline]
    pub fn a_eig(&self, idx: usize) -> u32 {
        self.modes[idx].a_eig
    }

    pub fn index(&self, k: i32, l: i32, m: i32) -> Option<usize> {
        let g = self.radius as i32;
        if k.abs() > g || l.abs() > g || m.abs() > g {
            return None;
        }
        let s = self.side as i32;
        Some((((k + g) * s + (l + g)) * s + (m + g)) as usize)
    }

    /// Index of `-n`; the lexicographic layout makes this a reflection.
    #[inline]
    pub fn neg_index(&self, idx: usize) -> usize {
        self.modes.len() - 1 - idx
    }

    /// Checks that every mode of the window lies inside the cube.
    pub fn require_complete(&self, range: EigenRange) -> Result<()> {
        if let Some(max) = range.max_required() {
            let bound = complete_eigen_bound(self.radius);
            if max > bound {
                return Err(Error::GridTooSmall(format!(
                    "{range:?} needs eigenvalues up to {max}, grid radius {} resolves only a_eig <= {bound}",
                    self.radius
                )));
            }
        }
        Ok(())
    }

    /// Indices (in storage order) of the modes in the window.
    pub fn indices_in(&self, range: EigenRange) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| range.contains(self.a_eig(i)))
            .collect()
    }

    pub fn max_a_eig(&self) -> u32 {
        1 + 3 * (self.radius * self.radius) as u32
    }
}

/// All lattice modes of the cube `|k|,|l|,|m| <= grid_radius` in the eigenvalue
/// window, sorted by `(a_eig, k, l, m)`.
///
/// Errors when no mode of the cube can satisfy the window because its lower
/// edge lies beyond the cube's largest eigenvalue.
pub fn enumerate_modes(grid_radius: usize, range: EigenRange) -> Result<Vec<ModeIndex>> {
    if grid_radius == 0 {
        return Err(Error::invalid("grid_radius", "must be >= 1"));
    }
    let g = grid_radius as i32;
    let max_a = 1 + 3 * (g * g) as u32;
    if range.min_admitted() > max_a {
        return Err(Error::GridTooSmall(format!(
            "{range:?} starts above the largest eigenvalue {max_a} of radius {grid_radius}"
        )));
    }
    let mut out = Vec::new();
    for k in -g..=g {
        for l in -g..=g {
            for m in -g..=g {
                let mode = ModeIndex::new(k, l, m);
                if range.contains(mode.a_eig) {
                    out.push(mode);
                }
            }
        }
    }
    out.sort_by_key(|m| (m.a_eig, m.k, m.l, m.m));
    Ok(out)
}
