//! Compactly supported orthonormal wavelets and the wavelet square function.
//!
//! Coefficients of a piecewise-constant `f` against `ψ_{j,k}` reduce, per
//! axis, to integrals of `φ` or `ψ` over dyadic intervals `[a/D, (a+1)/D)`.
//! Those integrals come from the antiderivative `Φ(x) = ∫_0^x φ`, which
//! satisfies `Φ(x) = Σ_k (h_k/√2) Φ(2x − k)`: its values at the integers
//! solve a small linear system and the refinement relation then gives every
//! dyadic level exactly.

use crate::error::{Error, Result};
use crate::grid::{strides, GridFunction};
use crate::morrey::{bm_norm, SpaceParams};
use crate::sum::Pairwise;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

const DB2: [f64; 4] = [
    0.48296291314453414337,
    0.83651630373780790558,
    0.22414386804201338103,
    -0.12940952255126038117,
];
const DB3: [f64; 6] = [
    0.332670552950082616,
    0.80689150931109257649,
    0.4598775021184915701,
    -0.1350110200102545887,
    -0.085441273882026661693,
    0.035226291885709536603,
];
const DB4: [f64; 8] = [
    0.23037781330889650086,
    0.71484657055291564709,
    0.63088076792985890788,
    -0.027983769416859854211,
    -0.18703481171909308408,
    0.030841381835560763627,
    0.032883011666885199735,
    -0.010597401785069032105,
];
const DB5: [f64; 10] = [
    0.16010239797419291448,
    0.60382926979718967054,
    0.72430852843777292773,
    0.13842814590132073151,
    -0.24229488706638203186,
    -0.032244869584638374648,
    0.077571493840045713523,
    -0.0062414902127982742742,
    -0.012580751999081999469,
    0.003335725285473771278,
];
const DB6: [f64; 12] = [
    0.11154074335010946362,
    0.49462389039845308568,
    0.75113390802109535068,
    0.31525035170919762909,
    -0.22626469396543982008,
    -0.12976686756726193556,
    0.097501605587323049102,
    0.027522865530305728626,
    -0.031582039317486029565,
    0.00055384220116149613925,
    0.0047772575109455106396,
    -0.0010773010853084795649,
];

/// Deepest dyadic level of the integral tables, i.e. `J − j_lo ≤ MAX_LEVEL`.
pub const MAX_LEVEL: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    Haar,
    /// `N` vanishing moments, support `[0, 2N−1]`, `N ∈ 2..=6`.
    Daubechies(u8),
}

impl Family {
    pub fn filter(&self) -> &'static [f64] {
        const HAAR: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
        match self {
            Family::Haar => &HAAR,
            Family::Daubechies(2) => &DB2,
            Family::Daubechies(3) => &DB3,
            Family::Daubechies(4) => &DB4,
            Family::Daubechies(5) => &DB5,
            Family::Daubechies(6) => &DB6,
            Family::Daubechies(_) => unreachable!("validated on construction"),
        }
    }

    pub fn vanishing_moments(&self) -> usize {
        match self {
            Family::Haar => 1,
            Family::Daubechies(n) => *n as usize,
        }
    }

    /// Hölder exponent of `φ` and `ψ` (published estimates; Haar is not
    /// continuous).
    pub fn holder_exponent(&self) -> f64 {
        match self {
            Family::Haar => 0.0,
            Family::Daubechies(2) => 0.550,
            Family::Daubechies(3) => 1.088,
            Family::Daubechies(4) => 1.618,
            Family::Daubechies(5) => 1.969,
            Family::Daubechies(_) => 2.189,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Family::Haar => write!(f, "haar"),
            Family::Daubechies(n) => write!(f, "db{n}"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Precondition(format!("unknown wavelet family `{s}` (haar, db2..db6)"));
        if s == "haar" || s == "db1" {
            return Ok(Family::Haar);
        }
        let n: u8 = s.strip_prefix("db").and_then(|d| d.parse().ok()).ok_or_else(bad)?;
        if (2..=6).contains(&n) { Ok(Family::Daubechies(n)) } else { Err(bad()) }
    }
}

impl TryFrom<String> for Family {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Family> for String {
    fn from(f: Family) -> String {
        f.to_string()
    }
}

/// Scaling function (`Phi`) or mother wavelet (`Psi`) along one axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Phi,
    Psi,
}

#[derive(Clone, Debug)]
pub struct WaveletSystem {
    pub family: Family,
    pub dim: usize,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
    /// `phi_cells[d][a] = ∫_{a/2^d}^{(a+1)/2^d} φ`.
    phi_cells: Vec<Vec<f64>>,
    psi_cells: Vec<Vec<f64>>,
}

impl WaveletSystem {
    pub fn new(family: Family, dim: usize) -> Result<Self> {
        if let Family::Daubechies(n) = family {
            if !(2..=6).contains(&n) {
                return Err(Error::Precondition(format!("db{n} not available (db2..db6)")));
            }
        }
        if dim == 0 || dim > 3 {
            return Err(Error::Dimension(format!("wavelet dimension {dim} not in 1..=3")));
        }
        let low = family.filter().to_vec();
        let l = low.len();
        let high: Vec<f64> = (0..l).map(|k| if k % 2 == 0 { low[l - 1 - k] } else { -low[l - 1 - k] }).collect();
        let antider = antiderivative_tables(&low);
        let phi_cells = antider.iter().map(|t| t.windows(2).map(|w| w[1] - w[0]).collect()).collect();
        let psi_anti = wavelet_antiderivative(&high, &antider, l);
        let psi_cells = psi_anti.iter().map(|t| t.windows(2).map(|w| w[1] - w[0]).collect()).collect();
        Ok(WaveletSystem { family, dim, low, high, phi_cells, psi_cells })
    }

    /// `2N − 1`, the side of `supp ψ`.
    pub fn support(&self) -> i64 {
        self.low.len() as i64 - 1
    }

    fn cells(&self, kind: Kind, level: u32) -> &[f64] {
        match kind {
            Kind::Phi => &self.phi_cells[level as usize],
            Kind::Psi => &self.psi_cells[level as usize],
        }
    }

    /// `max_d |Σ_m g_m m^d| / Σ_m |g_m| m^d` over the advertised moments.
    pub fn moment_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for d in 0..self.family.vanishing_moments() {
            let (mut s, mut a) = (0.0, 0.0);
            for (m, g) in self.high.iter().enumerate() {
                let w = (m as f64).powi(d as i32);
                s += g * w;
                a += g.abs() * w;
            }
            worst = worst.max(s.abs() / a.max(f64::MIN_POSITIVE));
        }
        worst
    }

    /// Samples of `φ` or `ψ` on `2^{-levels}Z` by the cascade algorithm:
    /// unit-norm vectors whose entries times `2^{levels/2}` approach the
    /// function values.
    pub fn cascade(&self, wavelet: bool, levels: u32) -> Vec<f64> {
        let first = if wavelet { &self.high } else { &self.low };
        let mut v = first.clone();
        for _ in 1..levels {
            v = synthesize(&v, &self.low);
        }
        v
    }

    /// Discrete Gram matrix of the 1-D wavelet vectors at levels
    /// `1..=levels` and shifts `0..shifts`, all on the finest grid;
    /// returns `max |G − I|`. The tensor system in `n` dimensions is
    /// orthonormal exactly when this one is.
    pub fn gram_deviation(&self, levels: u32, shifts: usize) -> f64 {
        let mut vecs: Vec<(usize, Vec<f64>)> = Vec::new();
        for s in 1..=levels {
            let base = self.cascade(true, s);
            for k in 0..shifts {
                vecs.push((k << s, base.clone()));
            }
        }
        let mut worst = 0.0f64;
        for (a, (oa, va)) in vecs.iter().enumerate() {
            for (b, (ob, vb)) in vecs.iter().enumerate().skip(a) {
                let g = dot_shifted(va, *oa, vb, *ob);
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((g - target).abs());
            }
        }
        worst
    }
}

/// One synthesis step with filter `f`: upsample by two and convolve.
fn synthesize(v: &[f64], f: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * (v.len() - 1) + f.len()];
    for (i, x) in v.iter().enumerate() {
        for (k, c) in f.iter().enumerate() {
            out[2 * i + k] += x * c;
        }
    }
    out
}

fn dot_shifted(a: &[f64], oa: usize, b: &[f64], ob: usize) -> f64 {
    let lo = oa.max(ob);
    let hi = (oa + a.len()).min(ob + b.len());
    let mut acc = Pairwise::new();
    for i in lo..hi.max(lo) {
        acc.push(a[i - oa] * b[i - ob]);
    }
    acc.total()
}

/// `Φ` sampled on `2^{-d}Z ∩ [0, L−1]` for `d = 0..=MAX_LEVEL`.
fn antiderivative_tables(low: &[f64]) -> Vec<Vec<f64>> {
    let l = low.len();
    let top = (l - 1) as i64;
    let c: Vec<f64> = low.iter().map(|h| h / std::f64::consts::SQRT_2).collect();
    // Φ(i) for interior integers 1..top-1: Φ(i) − Σ_k c_k Φ(2i−k) = Σ_{2i−k ≥ top} c_k.
    let m = (top - 1).max(0) as usize;
    let mut level0 = vec![0.0; l];
    level0[l - 1] = 1.0;
    if m > 0 {
        let mut a = DMatrix::<f64>::identity(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for i in 1..top {
            for (k, ck) in c.iter().enumerate() {
                let x = 2 * i - k as i64;
                if x >= top {
                    b[(i - 1) as usize] += ck;
                } else if x >= 1 {
                    a[((i - 1) as usize, (x - 1) as usize)] -= ck;
                }
            }
        }
        let sol = a.lu().solve(&b).expect("refinement system is nonsingular");
        for i in 0..m {
            level0[i + 1] = sol[i];
        }
    }
    let mut tables = vec![level0];
    for d in 1..=MAX_LEVEL {
        let prev = &tables[d as usize - 1];
        let half = 1i64 << (d - 1);
        let n = (top << d) as usize + 1;
        let mut t = vec![0.0; n];
        for (a, slot) in t.iter_mut().enumerate() {
            let mut s = 0.0;
            for (k, ck) in c.iter().enumerate() {
                s += ck * lookup(prev, a as i64 - k as i64 * half, top * half);
            }
            *slot = s;
        }
        tables.push(t);
    }
    tables
}

fn lookup(t: &[f64], a: i64, end: i64) -> f64 {
    if a <= 0 {
        0.0
    } else if a >= end {
        t[t.len() - 1]
    } else {
        t[a as usize]
    }
}

/// `Ψ(x) = ∫_0^x ψ = Σ_k (g_k/√2) Φ(2x − k)` on the same dyadic levels.
fn wavelet_antiderivative(high: &[f64], phi: &[Vec<f64>], l: usize) -> Vec<Vec<f64>> {
    let top = (l - 1) as i64;
    let c: Vec<f64> = high.iter().map(|g| g / std::f64::consts::SQRT_2).collect();
    phi.iter()
        .enumerate()
        .map(|(d, t)| {
            let unit = 1i64 << d;
            (0..t.len())
                .map(|a| {
                    c.iter()
                        .enumerate()
                        .map(|(k, ck)| ck * lookup(t, 2 * a as i64 - k as i64 * unit, top * unit))
                        .sum()
                })
                .collect()
        })
        .collect()
}

/// Scales `j_lo..=j_hi` of the truncated expansion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScaleWindow {
    pub j_lo: i32,
    pub j_hi: i32,
}

impl ScaleWindow {
    /// `[J−6, J]`.
    pub fn for_grid(f: &GridFunction) -> Self {
        ScaleWindow { j_lo: f.resolution - 6, j_hi: f.resolution }
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if self.j_lo > self.j_hi {
            return Err(Error::Precondition("empty wavelet scale window".into()));
        }
        if self.j_hi > f.resolution {
            return Err(Error::NotResolvable { scale: self.j_hi, resolution: f.resolution });
        }
        if (f.resolution - self.j_lo) as u32 > MAX_LEVEL - 1 {
            return Err(Error::Precondition(format!("wavelet window deeper than {} levels", MAX_LEVEL - 1)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    /// Bit `i` set when axis `i` carries `ψ` rather than `φ`.
    pub ell: u8,
    pub j: i32,
    pub k: Vec<i64>,
    pub value: Complex64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoefficients {
    pub family: Family,
    pub dim: usize,
    pub resolution: i32,
    pub window: ScaleWindow,
    /// Ordered by `(j, ell, k)`.
    pub entries: Vec<Coefficient>,
    /// `‖f‖²_{L²} − Σ|c|²`, the energy outside the window.
    pub missing_energy: f64,
    /// Geometric extrapolation of the coarse-scale energies below `j_lo`.
    pub coarse_tail_estimate: f64,
}

impl WaveletCoefficients {
    pub fn energy(&self) -> f64 {
        Pairwise::from_iter(self.entries.iter().map(|c| c.value.norm_sqr())).total()
    }

    pub fn scale_energy(&self, j: i32) -> f64 {
        Pairwise::from_iter(self.entries.iter().filter(|c| c.j == j).map(|c| c.value.norm_sqr())).total()
    }
}

/// Positions `k` along one axis with `supp ψ_{j,k}` meeting cells
/// `o..o+s` of side `2^{-J}`; `d = 2^{J−j}`.
fn k_range(o: i64, s: usize, d: i64, support: i64) -> (i64, i64) {
    let lo = o.div_euclid(d) - support + 1;
    let hi = (o + s as i64 - 1).div_euclid(d);
    (lo, hi)
}

/// Contracts axis `axis` of `data` (shape `shape`) with the `rows × shape[axis]` matrix `m`.
fn contract(data: &[Complex64], shape: &[usize], axis: usize, m: &[Vec<f64>]) -> (Vec<Complex64>, Vec<usize>) {
    let rows = m.len();
    let mut out_shape = shape.to_vec();
    out_shape[axis] = rows;
    let st_in = strides(shape);
    let st_out = strides(&out_shape);
    let outer: usize = shape[..axis].iter().product();
    let inner: usize = shape[axis + 1..].iter().product();
    let mut out = vec![Complex64::new(0.0, 0.0); out_shape.iter().product()];
    for a in 0..outer {
        for r in 0..rows {
            for (c, w) in m[r].iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let bi = a * shape[axis] * inner + c * st_in[axis];
                let bo = a * rows * inner + r * st_out[axis];
                for b in 0..inner {
                    out[bo + b] += data[bi + b] * w;
                }
            }
        }
    }
    (out, out_shape)
}

/// `⟨f, ψ^ℓ_{j,k}⟩` for all `ℓ ≠ 0`, `j` in the window and `k` with
/// `supp ψ^ℓ_{j,k}` meeting the box of `f`.
pub fn wavelet_coefficients(f: &GridFunction, sys: &WaveletSystem, window: &ScaleWindow) -> Result<WaveletCoefficients> {
    if f.dim != sys.dim {
        return Err(Error::Dimension(format!("wavelet system has n={}, function has n={}", sys.dim, f.dim)));
    }
    window.check(f)?;
    let n = f.dim;
    let support = sys.support();
    let jobs: Vec<(i32, u8)> =
        (window.j_lo..=window.j_hi).flat_map(|j| (1u8..(1 << n)).map(move |ell| (j, ell))).collect();
    let blocks: Vec<Vec<Coefficient>> = jobs
        .par_iter()
        .map(|&(j, ell)| {
            let level = (f.resolution - j) as u32;
            let d = 1i64 << level;
            let norm = (-(j as f64) / 2.0).exp2();
            let mut data = f.values.clone();
            let mut shape = f.shape.clone();
            let mut ranges = Vec::with_capacity(n);
            for ax in 0..n {
                let kind = if ell >> ax & 1 == 1 { Kind::Psi } else { Kind::Phi };
                let table = sys.cells(kind, level);
                let (klo, khi) = k_range(f.origin[ax], f.shape[ax], d, support);
                let m: Vec<Vec<f64>> = (klo..=khi)
                    .map(|k| {
                        (0..f.shape[ax])
                            .map(|c| {
                                let a = f.origin[ax] + c as i64 - k * d;
                                if a >= 0 && (a as usize) < table.len() { norm * table[a as usize] } else { 0.0 }
                            })
                            .collect()
                    })
                    .collect();
                let (out, sh) = contract(&data, &shape, ax, &m);
                data = out;
                shape = sh;
                ranges.push(klo);
            }
            let st = strides(&shape);
            (0..data.len())
                .map(|idx| {
                    let k: Vec<i64> = (0..n).map(|ax| ranges[ax] + ((idx / st[ax]) % shape[ax]) as i64).collect();
                    Coefficient { ell, j, k, value: data[idx] }
                })
                .collect()
        })
        .collect();
    let entries: Vec<Coefficient> = blocks.into_iter().flatten().collect();
    let total = Pairwise::from_iter(f.values.iter().map(|z| z.norm_sqr() * f.cell_volume())).total();
    let mut out = WaveletCoefficients {
        family: sys.family,
        dim: n,
        resolution: f.resolution,
        window: *window,
        entries,
        missing_energy: 0.0,
        coarse_tail_estimate: 0.0,
    };
    out.missing_energy = (total - out.energy()).max(0.0);
    let e0 = out.scale_energy(window.j_lo);
    let e1 = out.scale_energy(window.j_lo + 1);
    out.coarse_tail_estimate = if window.j_lo < window.j_hi && e1 > 0.0 && e0 < e1 {
        let q = e0 / e1;
        e0 * q / (1.0 - q)
    } else if e0 > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(out)
}

/// `Sf = (Σ |⟨f,ψ^ℓ_{j,k}⟩|² 2^{jn} χ_{Q_{j,k}})^{1/2}` over the window, on
/// the box covered by the cubes `Q_{j,k}` that occur.
pub fn square_function_of(coeffs: &WaveletCoefficients) -> GridFunction {
    let n = coeffs.dim;
    let res = coeffs.resolution;
    let mut lo = vec![i64::MAX; n];
    let mut hi = vec![i64::MIN; n];
    for c in &coeffs.entries {
        let d = 1i64 << (res - c.j);
        for ax in 0..n {
            lo[ax] = lo[ax].min(c.k[ax] * d);
            hi[ax] = hi[ax].max((c.k[ax] + 1) * d);
        }
    }
    if coeffs.entries.is_empty() {
        return GridFunction::zeros(n, res, vec![0; n], vec![1; n]);
    }
    let shape: Vec<usize> = lo.iter().zip(&hi).map(|(a, b)| (b - a) as usize).collect();
    let mut acc = vec![0.0f64; shape.iter().product()];
    let st = strides(&shape);
    for c in &coeffs.entries {
        let d = 1i64 << (res - c.j);
        let w = c.value.norm_sqr() * (c.j as f64 * n as f64).exp2();
        if w == 0.0 {
            continue;
        }
        let start: Vec<i64> = (0..n).map(|ax| c.k[ax] * d - lo[ax]).collect();
        let count = (d as usize).pow(n as u32);
        for t in 0..count {
            let mut idx = 0;
            let mut rem = t;
            for ax in (0..n).rev() {
                let off = rem % d as usize;
                rem /= d as usize;
                idx += (start[ax] as usize + off) * st[ax];
            }
            acc[idx] += w;
        }
    }
    let values = acc.into_iter().map(|x| Complex64::new(x.sqrt(), 0.0)).collect();
    GridFunction::new(n, res, lo, shape, values).expect("square function box")
}

pub fn wavelet_square_function(f: &GridFunction, sys: &WaveletSystem, window: &ScaleWindow) -> Result<GridFunction> {
    Ok(square_function_of(&wavelet_coefficients(f, sys, window)?))
}

/// `‖Sf‖²_{L²}` and `Σ|c|²`, computed separately.
pub fn plancherel_pair(coeffs: &WaveletCoefficients) -> (f64, f64) {
    let s = square_function_of(coeffs);
    let lhs = Pairwise::from_iter(s.values.iter().map(|z| z.norm_sqr() * s.cell_volume())).total();
    (lhs, coeffs.energy())
}

/// Gram matrix deviation of Haar wavelets `ψ_{j,k}` for `j` in the window
/// and `k` in `0..shifts` (1-D), computed in exact arithmetic: entries are
/// integer sign sums times `2^{(j+j')/2}` times a cell length.
pub fn haar_gram_exact(window: &ScaleWindow, shifts: i64) -> f64 {
    let fine = window.j_hi + 1;
    let sign = |j: i32, k: i64, cell: i64| -> i64 {
        let d = 1i64 << (fine - j);
        let a = cell - k * d;
        if a < 0 || a >= d {
            0
        } else if a < d / 2 {
            1
        } else {
            -1
        }
    };
    let items: Vec<(i32, i64)> = (window.j_lo..=window.j_hi).flat_map(|j| (0..shifts).map(move |k| (j, k))).collect();
    let span = shifts << (fine - window.j_lo);
    let cell = (-fine as f64).exp2();
    let mut worst = 0.0f64;
    for (a, &(j, k)) in items.iter().enumerate() {
        for &(j2, k2) in &items[a..] {
            let s: i64 = (0..span).map(|c| sign(j, k, c) * sign(j2, k2, c)).sum();
            let g = s as f64 * ((j + j2) as f64 / 2.0).exp2() * cell;
            let target = if (j, k) == (j2, k2) { 1.0 } else { 0.0 };
            worst = worst.max((g - target).abs());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub family: Family,
    pub params: SpaceParams,
    /// `‖Sf‖/‖f‖` per member at its own resolution.
    pub ratios: Vec<f64>,
    /// The same ratio after refining each member by one level.
    pub refined_ratios: Vec<f64>,
    pub band: (f64, f64),
    /// `max_i max(ρ_i/ρ'_i, ρ'_i/ρ_i)`.
    pub refinement_spread: f64,
    /// Smoothness `C^{n+1}` and `n+1` vanishing moments.
    pub within_hypotheses: bool,
    pub pass: bool,
}

/// Ratios `‖Sf‖_{M^{t,r}_{p⃗}} / ‖f‖_{M^{t,r}_{p⃗}}` over a corpus. Passes
/// when every ratio is finite and positive and refining the grid moves no
/// ratio by more than a factor 2.
pub fn wavelet_equivalence_check(fs: &[GridFunction], sys: &WaveletSystem, sp: &SpaceParams) -> Result<EquivalenceReport> {
    if !sp.nontrivial() {
        return Err(Error::Inadmissible("wavelet check needs nontrivial parameters".into()));
    }
    let ratio = |f: &GridFunction| -> Result<f64> {
        let w = ScaleWindow::for_grid(f);
        let s = wavelet_square_function(f, sys, &w)?;
        let num = bm_norm(&s, sp)?.total;
        let den = bm_norm(f, sp)?.total;
        Ok(if den == 0.0 { 0.0 } else { num / den })
    };
    let ratios: Vec<f64> = fs.iter().map(|f| ratio(f)).collect::<Result<_>>()?;
    let refined_ratios: Vec<f64> =
        fs.iter().map(|f| ratio(&f.refine(f.resolution + 1)?)).collect::<Result<_>>()?;
    let band = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let refinement_spread = ratios
        .iter()
        .zip(&refined_ratios)
        .map(|(a, b)| if *a > 0.0 && *b > 0.0 { (a / b).max(b / a) } else { f64::INFINITY })
        .fold(1.0, f64::max);
    let n = sys.dim;
    let within_hypotheses =
        sys.family.vanishing_moments() >= n + 1 && sys.family.holder_exponent() > (n + 1) as f64;
    let pass = !ratios.is_empty()
        && ratios.iter().all(|r| r.is_finite() && *r > 0.0)
        && refinement_spread <= 2.0;
    Ok(EquivalenceReport {
        family: sys.family,
        params: sp.clone(),
        ratios,
        refined_ratios,
        band,
        refinement_spread,
        within_hypotheses,
        pass,
    })
}
