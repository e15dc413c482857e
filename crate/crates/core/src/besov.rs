//! Discrete Littlewood-Paley decomposition, Besov norms and the dyadic
//! initial datum used in the norm-inflation experiment.
//!
//! Frequencies are angular wavenumbers `k = 2 pi m / L`. The low-pass
//! multiplier `psi` equals one on `|k| <= inner` and vanishes for
//! `|k| >= outer`; block `j >= 0` uses `psi(k / 2^{j+1}) - psi(k / 2^j)`, so
//! the partition telescopes and reconstruction is exact up to round-off.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Field, PeriodicGrid};
use crate::norms::lp_of_samples;
use crate::serde_ext::ext_real;
use crate::spectral::Spectral;
use num_complex::Complex64;

/// Besov index `(s, p, r)`; `p` and `r` may be `+inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BesovIndex {
    pub s: f64,
    #[serde(with = "ext_real")]
    pub p: f64,
    #[serde(with = "ext_real")]
    pub r: f64,
}

impl BesovIndex {
    pub fn new(s: f64, p: f64, r: f64) -> Result<Self> {
        if !s.is_finite() || !(p >= 1.0) || !(r >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Besov index needs finite s, p >= 1, r >= 1; got ({s}, {p}, {r})"
            )));
        }
        Ok(Self { s, p, r })
    }

    /// Critical regularity `s = 1 + 1/p`.
    pub fn critical(p: f64, r: f64) -> Result<Self> {
        Self::new(1.0 + 1.0 / p, p, r)
    }
}

/// Smooth `C^inf` transition from 0 (t <= 0) to 1 (t >= 1).
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyadicPartition {
    pub inner: f64,
    pub outer: f64,
}

impl Default for DyadicPartition {
    fn default() -> Self {
        Self {
            inner: 1.0,
            outer: 1.2,
        }
    }
}

impl DyadicPartition {
    pub fn low_pass(&self, k: f64) -> f64 {
        let a = k.abs();
        smooth_step((self.outer - a) / (self.outer - self.inner))
    }

    /// Multiplier of block `j >= 0`.
    pub fn block(&self, j: u32, k: f64) -> f64 {
        let s = (1u64 << j) as f64;
        self.low_pass(k / (2.0 * s)) - self.low_pass(k / s)
    }

    /// Annulus `[a 2^j, b 2^j]` outside which block `j` vanishes.
    pub fn support(&self, j: u32) -> (f64, f64) {
        let s = (1u64 << j) as f64;
        (self.inner * s, 2.0 * self.outer * s)
    }

    /// Annulus on which block `j` is identically one.
    pub fn plateau(&self, j: u32) -> (f64, f64) {
        let s = (1u64 << j) as f64;
        (self.outer * s, 2.0 * self.inner * s)
    }

    /// Index of the last block needed to cover every wavenumber of `grid`.
    pub fn j_max(&self, grid: &PeriodicGrid) -> u32 {
        let nyq = grid.nyquist();
        let mut j = 0;
        while self.inner * 2f64.powi(j as i32 + 1) < nyq {
            j += 1;
        }
        j
    }

    /// Upper bound of `sum_j |phi_j(k)|` over all `k` (overlap constant).
    pub fn max_overlap(&self) -> f64 {
        2.0
    }
}

/// Precomputed Littlewood-Paley filters for one grid.
pub struct LittlewoodPaley {
    spectral: Spectral,
    partition: DyadicPartition,
    /// Nonzero `(index, weight)` pairs of each multiplier: level `-1`
    /// (low-pass) first, then blocks `0..=j_max`.
    multipliers: Vec<Vec<(usize, f64)>>,
}

impl LittlewoodPaley {
    pub fn new(grid: &PeriodicGrid, partition: DyadicPartition) -> Self {
        let spectral = Spectral::new(grid);
        let jm = partition.j_max(grid);
        let k = spectral.wavenumbers().to_vec();
        let sparse = |f: &dyn Fn(f64) -> f64| -> Vec<(usize, f64)> {
            k.iter()
                .enumerate()
                .map(|(m, &k)| (m, f(k)))
                .filter(|&(_, w)| w != 0.0)
                .collect()
        };
        let mut multipliers = vec![sparse(&|k| partition.low_pass(k))];
        for j in 0..=jm {
            multipliers.push(sparse(&|k| partition.block(j, k)));
        }
        Self {
            spectral,
            partition,
            multipliers,
        }
    }

    pub fn partition(&self) -> &DyadicPartition {
        &self.partition
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    pub fn j_max(&self) -> u32 {
        (self.multipliers.len() - 2) as u32
    }

    /// Level `-1` first, then blocks `0..=j_max`.
    pub fn levels(&self, u: &[f64]) -> Vec<Vec<f64>> {
        let uh = self.spectral.forward(u);
        self.levels_from_coeffs(&uh)
    }

    pub fn levels_from_coeffs(&self, uh: &[Complex64]) -> Vec<Vec<f64>> {
        (0..self.multipliers.len()).map(|idx| self.level(uh, idx)).collect()
    }

    fn level(&self, uh: &[Complex64], idx: usize) -> Vec<f64> {
        let mut piece = vec![Complex64::new(0.0, 0.0); uh.len()];
        for &(m, w) in &self.multipliers[idx] {
            piece[m] = uh[m] * w;
        }
        self.spectral.inverse(piece)
    }

    /// Weighted block norms `2^{js} ||Delta_j u||_{L^p}` for `j = -1..=j_max`,
    /// one block in memory at a time.
    pub fn weighted_block_norms(&self, u: &[f64], s: f64, p: f64) -> Vec<f64> {
        let h = self.spectral.grid().spacing();
        let uh = self.spectral.forward(u);
        (0..self.multipliers.len())
            .map(|idx| 2f64.powf(s * (idx as f64 - 1.0)) * lp_of_samples(&self.level(&uh, idx), h, p))
            .collect()
    }

    pub fn besov_norm(&self, u: &[f64], idx: &BesovIndex) -> f64 {
        lr_norm(&self.weighted_block_norms(u, idx.s, idx.p), idx.r)
    }

    /// `sup_j ||Delta_j u||_{L^inf}` including the low-pass piece.
    pub fn b0_inf_from_coeffs(&self, uh: &[Complex64]) -> f64 {
        (0..self.multipliers.len())
            .map(|idx| lp_of_samples(&self.level(uh, idx), 1.0, f64::INFINITY))
            .fold(0.0, f64::max)
    }

    pub fn b0_inf(&self, u: &[f64]) -> f64 {
        self.weighted_block_norms(u, 0.0, f64::INFINITY).into_iter().fold(0.0, f64::max)
    }
}

fn lr_norm(terms: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        terms.iter().copied().fold(0.0, f64::max)
    } else if r == 1.0 {
        terms.iter().sum()
    } else {
        terms.iter().map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

/// Low-pass piece plus dyadic blocks of a field.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub low_pass: Field,
    pub blocks: Vec<Field>,
    pub partition: DyadicPartition,
}

impl BlockDecomposition {
    pub fn reconstruct(&self) -> Field {
        let mut out = self.low_pass.clone();
        for b in &self.blocks {
            for (o, v) in out.values.iter_mut().zip(&b.values) {
                *o += v;
            }
        }
        out
    }
}

pub fn decompose(u: &Field) -> BlockDecomposition {
    let lp = LittlewoodPaley::new(&u.grid, DyadicPartition::default());
    let mut levels = lp.levels(&u.values).into_iter().map(|values| Field {
        grid: u.grid,
        values,
        time: u.time,
    });
    let low_pass = levels.next().expect("low-pass level");
    BlockDecomposition {
        low_pass,
        blocks: levels.collect(),
        partition: *lp.partition(),
    }
}

/// `l^r` norm over `j` of `2^{js} ||Delta_j u||_{L^p}`.
pub fn besov_norm(u: &Field, idx: &BesovIndex) -> f64 {
    LittlewoodPaley::new(&u.grid, DyadicPartition::default()).besov_norm(&u.values, idx)
}

/// `||u||_{B^0_{inf,inf}} = sup_j ||Delta_j u||_{L^inf}`.
pub fn b0_inf_seminorm(u: &Field) -> f64 {
    LittlewoodPaley::new(&u.grid, DyadicPartition::default()).b0_inf(&u.values)
}

/// Real even `C^inf` bump on the annulus `center - half_width <= |k| <= center + half_width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnularBump {
    pub center: f64,
    pub half_width: f64,
}

impl Default for AnnularBump {
    fn default() -> Self {
        // sits inside the plateau [1.2, 2.0] of the default partition
        Self {
            center: 1.6,
            half_width: 0.35,
        }
    }
}

impl AnnularBump {
    pub fn eval(&self, k: f64) -> f64 {
        let t = (k.abs() - self.center) / self.half_width;
        if t.abs() >= 1.0 {
            0.0
        } else {
            (1.0 - 1.0 / (1.0 - t * t)).exp()
        }
    }

    pub fn lower(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn upper(&self) -> f64 {
        self.center + self.half_width
    }
}

fn default_p() -> f64 {
    2.0
}

/// Parameters of the dyadic datum `u_0 = eps S_K(g) / ||S_K(g)||`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IllposedDatumSpec {
    #[serde(with = "ext_real")]
    pub r_index: f64,
    /// Truncation level `K`.
    pub levels: u32,
    pub target_eps: f64,
    /// Integrability index of the target norm `B^{1+1/p}_{p,r}`.
    #[serde(default = "default_p", with = "ext_real")]
    pub p: f64,
    #[serde(default)]
    pub mollifier: AnnularBump,
}

impl IllposedDatumSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_index > 1.0) {
            return Err(Error::InvalidArgument(format!("r_index must be in (1, inf], got {}", self.r_index)));
        }
        if self.levels < 1 {
            return Err(Error::InvalidArgument("levels K must be >= 1".into()));
        }
        if !(self.target_eps > 0.0 && self.target_eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("target_eps must be > 0, got {}", self.target_eps)));
        }
        if !(self.p >= 1.0) {
            return Err(Error::InvalidArgument(format!("p must be >= 1, got {}", self.p)));
        }
        let plateau = DyadicPartition::default().plateau(0);
        let b = self.mollifier;
        if !(b.half_width > 0.0 && b.lower() >= plateau.0 && b.upper() <= plateau.1) {
            return Err(Error::InvalidArgument(format!(
                "mollifier annulus [{}, {}] must lie inside [{}, {}]",
                b.lower(),
                b.upper(),
                plateau.0,
                plateau.1
            )));
        }
        Ok(())
    }

    pub fn index(&self) -> BesovIndex {
        BesovIndex {
            s: 1.0 + 1.0 / self.p,
            p: self.p,
            r: self.r_index,
        }
    }

    /// Coefficient `1 / (2^j j^{2/(1+r)})` of level `j`.
    pub fn weight(&self, j: u32) -> f64 {
        let expo = if self.r_index.is_infinite() { 0.0 } else { 2.0 / (1.0 + self.r_index) };
        1.0 / (2f64.powi(j as i32) * (j as f64).powf(expo))
    }

    /// Check that every level up to `K` is representable on `grid` and
    /// inside the dealiased band, and that level 1 is sampled by at least 8
    /// lattice wavenumbers.
    pub fn check_resolution(&self, grid: &PeriodicGrid) -> Result<()> {
        let dk = 2.0 * std::f64::consts::PI / grid.length();
        let retained = dk * (grid.n_points() as f64 / 3.0).floor();
        let top = self.mollifier.upper() * 2f64.powi(self.levels as i32);
        if top >= retained {
            return Err(Error::InsufficientResolution(format!(
                "level K = {} reaches |k| = {top:.3} but the dealiased band ends at {retained:.3}",
                self.levels
            )));
        }
        let (lo, hi) = (2.0 * self.mollifier.lower(), 2.0 * self.mollifier.upper());
        let count = (1..grid.n_points() / 2)
            .filter(|&m| {
                let k = m as f64 * dk;
                k > lo && k < hi
            })
            .count();
        if count < 8 {
            return Err(Error::InsufficientResolution(format!(
                "level-1 annulus holds {count} lattice wavenumbers (need >= 8); enlarge L"
            )));
        }
        Ok(())
    }
}

/// `g_j` with `hat g_j(k) = i 2^{-j} k chi(2^{-j} k)`, sampled on the grid.
pub fn dyadic_piece(grid: &PeriodicGrid, j: u32, bump: &AnnularBump) -> Vec<f64> {
    let sp = Spectral::new(grid);
    let scale = 2f64.powi(-(j as i32));
    let n = grid.n_points();
    let coeffs: Vec<Complex64> = sp
        .wavenumbers()
        .iter()
        .enumerate()
        .map(|(m, &k)| {
            if m == n / 2 {
                return Complex64::new(0.0, 0.0);
            }
            // node x_0 = -L/2 contributes the phase (-1)^m
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            Complex64::new(0.0, sign * scale * k * bump.eval(scale * k))
        })
        .collect();
    let norm = n as f64 / grid.length();
    sp.inverse(coeffs).into_iter().map(|v| v * norm).collect()
}

/// Unnormalized partial sum `S_K(g) = sum_{j=1}^K g_j / (2^j j^{2/(1+r)})`.
pub fn illposed_partial_sum(spec: &IllposedDatumSpec, grid: &PeriodicGrid) -> Result<Field> {
    spec.validate()?;
    spec.check_resolution(grid)?;
    let mut acc = vec![0.0; grid.n_points()];
    for j in 1..=spec.levels {
        let w = spec.weight(j);
        for (a, v) in acc.iter_mut().zip(dyadic_piece(grid, j, &spec.mollifier)) {
            *a += w * v;
        }
    }
    Field::new(*grid, acc)
}

/// `u_0 = eps S_K(g) / ||S_K(g)||_{B^{1+1/p}_{p,r}}`.
pub fn make_illposed_datum(spec: &IllposedDatumSpec, grid: &PeriodicGrid) -> Result<Field> {
    let g = illposed_partial_sum(spec, grid)?;
    let norm = besov_norm(&g, &spec.index());
    if norm <= 0.0 {
        return Err(Error::Degenerate("partial sum has zero Besov norm".into()));
    }
    Ok(g.scaled(spec.target_eps / norm))
}
