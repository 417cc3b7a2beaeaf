use std::ops::RangeInclusive;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dynamics::large_low_modes;
use crate::error::{Error, Result};
use crate::parallel::{map_range, Execution};
use crate::spectral::{
    project_unchecked, EigenRange, GridTransform, Lattice, ModeIndex, Projector, SpectralField,
};
use crate::truncation::Model;

/// Admissibility threshold for `‖I l₁(u) I‖`.
pub const DEFAULT_EPSILON: f64 = 1.0 / 16.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Fourier data of one sample that the annulus block depends on: the
/// coefficients of `f_u(W(u))` and `f_ū(W(u))` and the mode-wise `W'(u)`.
#[derive(Debug, Clone)]
pub struct SampleSpectrum {
    band: std::sync::Arc<Lattice>,
    fu: Vec<Complex64>,
    fub: Vec<Complex64>,
    /// Band indices `q != 0` with a non-negligible coefficient.
    support: Vec<usize>,
    model_lattice: std::sync::Arc<Lattice>,
    /// `W'(u)v = α v + β conj(v)` per model mode.
    jac: Vec<(Complex64, Complex64)>,
}

impl SampleSpectrum {
    pub fn new(model: &Model, u: &SpectralField) -> Result<Self> {
        u.ensure_finite("spatial-averaging sample")?;
        let grid = model.grid();
        let values = grid.to_grid(&model.truncate_w(u))?;
        let nl = model.nonlinearity();
        let (fu_g, fub_g): (Vec<Complex64>, Vec<Complex64>) = values
            .iter()
            .map(|&x| {
                let d = nl.first(x);
                (d.fu, d.fub)
            })
            .unzip();
        let points = grid.points();
        let band = Lattice::new((points - 1) / 2);
        let full = GridTransform::new(&band, points)?;
        let fu = full.from_grid(&fu_g)?.into_coeffs();
        let fub = full.from_grid(&fub_g)?.into_coeffs();
        let scale = fu.iter().chain(&fub).map(|c| c.norm()).fold(0.0, f64::max);
        let origin = band.index(0, 0, 0).expect("origin");
        let support = (0..band.len())
            .filter(|&i| {
                i != origin && (fu[i].norm() > 1e-14 * scale || fub[i].norm() > 1e-14 * scale)
            })
            .collect();
        let lat = model.lattice();
        let ones = SpectralField::from_coeffs(lat, vec![Complex64::new(1.0, 0.0); lat.len()])?;
        let d1 = model.w_prime_apply(u, &ones);
        let di = model.w_prime_apply(u, &ones.scale(Complex64::new(0.0, 1.0)));
        let i = Complex64::new(0.0, 1.0);
        let jac = d1
            .coeffs()
            .iter()
            .zip(di.coeffs())
            .map(|(a, b)| ((a - i * b) * 0.5, (a + i * b) * 0.5))
            .collect();
        Ok(Self {
            band,
            fu,
            fub,
            support,
            model_lattice: lat.clone(),
            jac,
        })
    }

    fn jac_at(&self, m: &ModeIndex) -> (Complex64, Complex64) {
        self.model_lattice
            .index(m.k, m.l, m.m)
            .map_or((Complex64::new(1.0, 0.0), ZERO), |i| self.jac[i])
    }

    /// `Σ_{q≠0} (|f̂_u(q)| + |f̂_ū(q)|)`.
    pub fn fluctuation_l1(&self) -> f64 {
        self.support
            .iter()
            .map(|&i| self.fu[i].norm() + self.fub[i].norm())
            .sum()
    }
}

/// `I_{N,K} l₁(u) I_{N,K}` on doubled real coordinates `(Re v_n, Im v_n)` of the
/// annulus modes, stored row-compressed.
#[derive(Debug, Clone)]
pub struct AnnulusOperator {
    pub n: u32,
    pub k: u32,
    modes: Vec<ModeIndex>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    bound: f64,
}

/// Modes with `N-K < a < N+K`, sorted by `(a, k, l, m)`.
pub fn annulus_modes(n: u32, k: u32) -> Vec<ModeIndex> {
    let top = (n + k) as i64 - 2;
    let r = (0..).take_while(|r: &i64| r * r <= top).last().unwrap_or(0) as usize;
    let lat = Lattice::new(r);
    let range = EigenRange::Annulus { n, k };
    let mut modes: Vec<ModeIndex> = lat
        .modes()
        .iter()
        .copied()
        .filter(|m| range.contains(m.a_eig))
        .collect();
    modes.sort_by_key(|m| (m.a_eig, m.k, m.l, m.m));
    modes
}

impl AnnulusOperator {
    pub fn new(spec: &SampleSpectrum, n: u32, k: u32) -> Result<Self> {
        let modes = annulus_modes(n, k);
        if modes.is_empty() {
            return Err(Error::EmptyAnnulus { n, k });
        }
        let r = modes.iter().map(|m| m.sup_norm()).max().unwrap_or(0) as usize;
        let cube = Lattice::new(r);
        let mut pos = vec![usize::MAX; cube.len()];
        for (j, m) in modes.iter().enumerate() {
            pos[cube.index(m.k, m.l, m.m).expect("inside cube")] = j;
        }
        let find = |k: i32, l: i32, m: i32| {
            cube.index(k, l, m)
                .map(|i| pos[i])
                .filter(|&j| j != usize::MAX)
        };
        let jac: Vec<(Complex64, Complex64)> = modes.iter().map(|m| spec.jac_at(m)).collect();
        let jac_max = jac
            .iter()
            .map(|(a, b)| a.norm() + b.norm())
            .fold(0.0, f64::max);
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut acc: Vec<(Complex64, Complex64)> = vec![(ZERO, ZERO); modes.len()];
        let mut touched: Vec<usize> = Vec::new();
        for nm in &modes {
            for &qi in &spec.support {
                let q = spec.band.mode(qi);
                if let Some(j) = find(nm.k - q.k, nm.l - q.l, nm.m - q.m) {
                    let c = spec.fu[qi];
                    let (al, be) = jac[j];
                    if acc[j] == (ZERO, ZERO) {
                        touched.push(j);
                    }
                    acc[j].0 += c * al;
                    acc[j].1 += c * be;
                }
                if let Some(j) = find(q.k - nm.k, q.l - nm.l, q.m - nm.m) {
                    let c = spec.fub[qi];
                    let (al, be) = jac[j];
                    if acc[j] == (ZERO, ZERO) {
                        touched.push(j);
                    }
                    acc[j].0 += c * be.conj();
                    acc[j].1 += c * al.conj();
                }
            }
            touched.sort_unstable();
            touched.dedup();
            let mut re_row = Vec::with_capacity(2 * touched.len());
            let mut im_row = Vec::with_capacity(2 * touched.len());
            for &j in &touched {
                let (a, b) = acc[j];
                re_row.push((2 * j, a.re + b.re));
                re_row.push((2 * j + 1, -a.im + b.im));
                im_row.push((2 * j, a.im + b.im));
                im_row.push((2 * j + 1, a.re - b.re));
                acc[j] = (ZERO, ZERO);
            }
            touched.clear();
            for row in [re_row, im_row] {
                for (c, v) in row {
                    cols.push(c);
                    vals.push(v);
                }
                row_ptr.push(cols.len());
            }
        }
        Ok(Self {
            n,
            k,
            modes,
            row_ptr,
            cols,
            vals,
            bound: spec.fluctuation_l1() * jac_max,
        })
    }

    /// Number of annulus modes (complex dimension).
    pub fn dim(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    /// Young-inequality bound on the operator norm.
    pub fn l1_bound(&self) -> f64 {
        self.bound
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (r, out) in y.iter_mut().enumerate() {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *out = self.cols[s..e]
                .iter()
                .zip(&self.vals[s..e])
                .map(|(&c, v)| v * x[c])
                .sum();
        }
    }

    pub fn apply_transpose(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for (r, &xr) in x.iter().enumerate() {
            let (s, e) = (self.row_ptr[r], self.row_ptr[r + 1]);
            for (&c, v) in self.cols[s..e].iter().zip(&self.vals[s..e]) {
                y[c] += v * xr;
            }
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let d = 2 * self.dim();
        let mut m = DMatrix::zeros(d, d);
        for r in 0..d {
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[p])] = self.vals[p];
            }
        }
        m
    }

    /// Largest singular value of the assembled real matrix.
    pub fn spectral_norm(&self) -> f64 {
        if self.vals.is_empty() {
            return 0.0;
        }
        self.dense().singular_values().max()
    }

    /// Power iteration on `LᵀL`; returns the last Rayleigh estimate.
    pub fn power_norm(&self, seed: u64, rel_tol: f64, max_iter: usize) -> f64 {
        if self.vals.iter().all(|v| *v == 0.0) {
            return 0.0;
        }
        let d = 2 * self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut y = vec![0.0; d];
        let mut est = 0.0;
        for _ in 0..max_iter {
            let nx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            x.iter_mut().for_each(|v| *v /= nx);
            self.apply(&x, &mut y);
            let next = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            self.apply_transpose(&y, &mut x);
            if (next - est).abs() <= rel_tol * next {
                return next;
            }
            est = next;
        }
        est
    }
}

/// How `n_search` evaluates the norm of each annulus block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMethod {
    /// Dense singular values.
    Dense,
    /// Young bound first, power iteration when the bound is inconclusive.
    #[default]
    Iterative,
}

#[derive(Debug, Clone, Serialize)]
pub struct SAOperatorReport {
    pub n: u32,
    pub k: u32,
    /// Max over the evaluated samples.
    pub norm: f64,
    pub annulus_dim: usize,
    pub samples: usize,
    pub epsilon: f64,
    pub admissible: bool,
    /// `exact`, `bound` or `power` for the sample that attained the max.
    pub method: &'static str,
}

/// Record of a passed admissibility check, required by cone certificates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Admissibility {
    pub n: u32,
    pub k: u32,
    pub epsilon: f64,
    pub norm: f64,
    pub samples: usize,
}

impl Admissibility {
    pub fn admissible(&self) -> bool {
        self.norm <= self.epsilon
    }
}

impl SAOperatorReport {
    pub fn admissibility(&self) -> Admissibility {
        Admissibility {
            n: self.n,
            k: self.k,
            epsilon: self.epsilon,
            norm: self.norm,
            samples: self.samples,
        }
    }
}

/// Spectral norm of the assembled annulus block, maximized over samples.
pub fn sa_operator_norm(
    model: &Model,
    samples: &[SpectralField],
    n: u32,
    k: u32,
    epsilon: f64,
) -> Result<SAOperatorReport> {
    let mut norm: f64 = 0.0;
    let mut dim = 0;
    for u in samples {
        let op = AnnulusOperator::new(&SampleSpectrum::new(model, u)?, n, k)?;
        dim = op.dim();
        norm = norm.max(op.spectral_norm());
    }
    if samples.is_empty() {
        dim = annulus_modes(n, k).len();
        if dim == 0 {
            return Err(Error::EmptyAnnulus { n, k });
        }
    }
    Ok(SAOperatorReport {
        n,
        k,
        norm,
        annulus_dim: dim,
        samples: samples.len(),
        epsilon,
        admissible: norm <= epsilon,
        method: "exact",
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NSearchOptions {
    pub method: NormMethod,
    /// Stop scanning at the first admissible `N`.
    pub stop_at_first: bool,
    pub power_tol: f64,
    pub power_iter: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for NSearchOptions {
    fn default() -> Self {
        Self {
            method: NormMethod::Iterative,
            stop_at_first: false,
            power_tol: 1e-9,
            power_iter: 2000,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NSearchResult {
    pub k: u32,
    pub epsilon: f64,
    pub rows: Vec<SAOperatorReport>,
    pub admissible: Vec<u32>,
}

impl NSearchResult {
    pub fn record(&self, n: u32) -> Option<Admissibility> {
        self.rows
            .iter()
            .find(|r| r.n == n)
            .map(|r| r.admissibility())
    }
}

fn scan_one(
    spectra: &[SampleSpectrum],
    n: u32,
    k: u32,
    epsilon: f64,
    opts: &NSearchOptions,
) -> Result<SAOperatorReport> {
    let dim = annulus_modes(n, k).len();
    let mut report = SAOperatorReport {
        n,
        k,
        norm: 0.0,
        annulus_dim: dim,
        samples: 0,
        epsilon,
        admissible: false,
        method: "empty",
    };
    if dim == 0 {
        return Ok(report);
    }
    report.method = "bound";
    for spec in spectra {
        let (value, method) = if spec.support.is_empty() {
            (0.0, "bound")
        } else {
            let op = AnnulusOperator::new(spec, n, k)?;
            match opts.method {
                NormMethod::Dense => (op.spectral_norm(), "exact"),
                NormMethod::Iterative if op.l1_bound() <= epsilon => (op.l1_bound(), "bound"),
                NormMethod::Iterative => (
                    op.power_norm(opts.seed ^ n as u64, opts.power_tol, opts.power_iter),
                    "power",
                ),
            }
        };
        report.samples += 1;
        if value >= report.norm {
            report.norm = value;
            report.method = method;
        }
        if report.norm > epsilon {
            break;
        }
    }
    report.admissible = report.norm <= epsilon;
    Ok(report)
}

/// Scans `N` over `n_range` and keeps those whose annulus block has norm at
/// most `epsilon` on every sample. Samples are skipped once one exceeds
/// `epsilon`.
pub fn n_search(
    model: &Model,
    samples: &[SpectralField],
    k: u32,
    epsilon: f64,
    n_range: RangeInclusive<u32>,
    opts: &NSearchOptions,
) -> Result<NSearchResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientData(
            "n_search needs at least one sample".into(),
        ));
    }
    let spectra: Vec<SampleSpectrum> = samples
        .iter()
        .map(|u| SampleSpectrum::new(model, u))
        .collect::<Result<_>>()?;
    let ns: Vec<u32> = n_range.filter(|&n| n > k).collect();
    let mut rows = Vec::new();
    if opts.stop_at_first {
        for &n in &ns {
            let row = scan_one(&spectra, n, k, epsilon, opts)?;
            let done = row.admissible;
            rows.push(row);
            if done {
                break;
            }
        }
    } else {
        rows = map_range(ns.len(), opts.exec, |i| {
            scan_one(&spectra, ns[i], k, epsilon, opts)
        })
        .into_iter()
        .collect::<Result<_>>()?;
    }
    let admissible = rows.iter().filter(|r| r.admissible).map(|r| r.n).collect();
    Ok(NSearchResult {
        k,
        epsilon,
        rows,
        admissible,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct L34Report {
    pub n: u32,
    pub k: u32,
    pub v_norm: f64,
    /// `‖I l₃(u)v‖_H`.
    pub l3: f64,
    /// `‖I l₄(u)v‖_H`.
    pub l4: f64,
    /// `(N-K)^{-s0/2}`.
    pub l3_envelope: f64,
    /// `(N-K)^{-1/2} + χ`.
    pub l4_envelope: f64,
    pub indicator: bool,
    /// `l3 / (envelope·‖v‖)`.
    pub c_l3: f64,
    pub c_l4: f64,
}

/// Intermediate-mode sizes of `l₃(u)v` and `l₄(u)v` against their envelopes.
pub fn bound_l3_l4(model: &Model, u: &SpectralField, v: &SpectralField) -> L34Report {
    let (n, k) = (model.n(), model.k());
    let band = Projector::Intermediate { n, k };
    let parts = model.f_prime_parts(u, v);
    let l3 = project_unchecked(&parts.l3, band).norm();
    let l4 = project_unchecked(&parts.l4, band).norm();
    let gap = (n - k) as f64;
    let indicator = large_low_modes(model, u);
    let l3_envelope = gap.powf(-0.5 * model.params().s0);
    let l4_envelope = gap.powf(-0.5) + if indicator { 1.0 } else { 0.0 };
    let v_norm = v.norm();
    let ratio = |x: f64, e: f64| if v_norm > 0.0 { x / (e * v_norm) } else { 0.0 };
    L34Report {
        n,
        k,
        v_norm,
        l3,
        l4,
        l3_envelope,
        l4_envelope,
        indicator,
        c_l3: ratio(l3, l3_envelope),
        c_l4: ratio(l4, l4_envelope),
    }
}
