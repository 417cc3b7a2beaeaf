use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::field::SpectralField;
use super::lattice::Lattice;
use crate::error::{Error, Result};

/// Smallest `2^a 3^b 5^c` that is at least `n`.
pub fn fft_friendly(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r.is_multiple_of(p) {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Uniform physical grid `x_j = 2π j / M` on the torus, paired with the FFTs that
/// move a [`SpectralField`] to point values and back.
///
/// `to_grid` evaluates `Σ u_n e^{i n·x}` exactly; `from_grid` keeps the modes of
/// the cube and discards everything the grid resolves beyond it.
pub struct GridTransform {
    lattice: Arc<Lattice>,
    points: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridTransform")
            .field("radius", &self.lattice.radius())
            .field("points", &self.points)
            .finish()
    }
}

impl GridTransform {
    pub fn new(lattice: &Arc<Lattice>, points: usize) -> Result<Self> {
        if points < lattice.side() {
            return Err(Error::Resolution(format!(
                "{points} grid points per axis cannot hold radius {} (need >= {})",
                lattice.radius(),
                lattice.side()
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            lattice: Arc::clone(lattice),
            points,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    /// Grid resolving cubic products of cube-limited fields without aliasing.
    pub fn padded(lattice: &Arc<Lattice>) -> Self {
        let m = fft_friendly(4 * lattice.radius() + 1);
        Self::new(lattice, m).expect("padded grid always resolves the cube")
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points * self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    fn wrap(&self, k: i32) -> usize {
        k.rem_euclid(self.points as i32) as usize
    }

    fn grid_index(&self, k: i32, l: i32, m: i32) -> usize {
        let p = self.points;
        (self.wrap(k) * p + self.wrap(l)) * p + self.wrap(m)
    }

    pub fn to_grid(&self, u: &SpectralField) -> Result<Vec<Complex64>> {
        if u.radius() != self.lattice.radius() {
            return Err(Error::Resolution(format!(
                "field radius {} vs transform radius {}",
                u.radius(),
                self.lattice.radius()
            )));
        }
        Ok(self.to_grid_unchecked(u))
    }

    pub(crate) fn to_grid_unchecked(&self, u: &SpectralField) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.len()];
        for (m, c) in self.lattice.modes().iter().zip(u.coeffs()) {
            buf[self.grid_index(m.k, m.l, m.m)] = *c;
        }
        self.fft3(&mut buf, &self.inverse);
        buf
    }

    pub fn from_grid(&self, grid: &[Complex64]) -> Result<SpectralField> {
        if grid.len() != self.len() {
            return Err(Error::Resolution(format!(
                "grid of {} values, transform expects {}",
                grid.len(),
                self.len()
            )));
        }
        Ok(self.from_grid_owned(grid.to_vec()))
    }

    pub(crate) fn from_grid_owned(&self, mut buf: Vec<Complex64>) -> SpectralField {
        self.fft3(&mut buf, &self.forward);
        let scale = 1.0 / self.len() as f64;
        let coeffs = self
            .lattice
            .modes()
            .iter()
            .map(|m| buf[self.grid_index(m.k, m.l, m.m)] * scale)
            .collect();
        SpectralField::from_coeffs(&self.lattice, coeffs).expect("lattice sized")
    }

    /// Zeroes the modes with `max(|k|,|l|,|m|) > 2G/3` (the 2/3 rule).
    pub fn dealias(&self, u: &mut SpectralField) {
        let cut = (2 * self.lattice.radius() / 3) as i32;
        let lat = Arc::clone(&self.lattice);
        for (i, c) in u.coeffs_mut().iter_mut().enumerate() {
            if lat.mode(i).sup_norm() > cut {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Mean value `⟨w⟩` of grid data (the zero mode).
    pub fn mean(grid: &[Complex64]) -> Complex64 {
        grid.iter().sum::<Complex64>() / grid.len() as f64
    }

    /// Three batched 1D passes over the contiguous axis, rotating axes between
    /// passes so every axis is transformed once.
    fn fft3(&self, buf: &mut Vec<Complex64>, fft: &Arc<dyn Fft<f64>>) {
        let p = self.points;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        let mut tmp = vec![Complex64::new(0.0, 0.0); buf.len()];
        for _ in 0..3 {
            fft.process_with_scratch(buf, &mut scratch);
            // (i, j, k) -> (k, i, j)
            for i in 0..p {
                for j in 0..p {
                    let row = (i * p + j) * p;
                    for k in 0..p {
                        tmp[(k * p + i) * p + j] = buf[row + k];
                    }
                }
            }
            std::mem::swap(buf, &mut tmp);
        }
    }
}
