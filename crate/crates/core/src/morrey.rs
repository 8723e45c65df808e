//! Mixed Bourgain-Morrey norms `M^{t,r}_{p⃗}`.
//!
//! For a function piecewise constant on cells of side `2^{-J}` with bounded
//! support the dyadic sum splits into three parts:
//!
//! * scales `j ≤ j_c`, where every cube meeting the support sees the same
//!   piece of it, so the sum is a geometric series in `j`;
//! * scales `j_c ≤ j ≤ J`, summed cube by cube;
//! * scales `j > J`, where a cube sees at most two cells per axis and the
//!   sum is again geometric (split by parity of `j` on shifted grids).

use crate::error::{Error, Result};
use crate::geometry::offset_sign;
use crate::grid::{conditional_expectation, dilate_dyadic, translate_lattice, GridFunction};
use crate::lebesgue::{powp, region_norm, ExponentVector};
use crate::quad::gauss_legendre;
use crate::sum::Pairwise;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const DELTA_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceParams {
    pub p: ExponentVector,
    #[serde(with = "crate::json")]
    pub t: f64,
    #[serde(with = "crate::json")]
    pub r: f64,
}

impl SpaceParams {
    pub fn new(p: ExponentVector, t: f64, r: f64) -> Result<Self> {
        if !(t > 0.0) || !(r > 0.0) {
            return Err(Error::Exponents("t and r must be positive".into()));
        }
        Ok(SpaceParams { p, t, r })
    }

    pub fn uniform(p: f64, n: usize, t: f64, r: f64) -> Self {
        SpaceParams { p: ExponentVector::uniform(p, n), t, r }
    }

    pub fn dim(&self) -> usize {
        self.p.dim()
    }

    /// `δ = 1/t − (1/n)Σ1/p_i`, the exponent of `|Q|` in each term.
    pub fn delta(&self) -> f64 {
        inv(self.t) - self.p.sum_recip() / self.dim() as f64
    }

    /// `Σ 1/p_i ≥ n/t`.
    pub fn admissible(&self) -> bool {
        self.delta() <= DELTA_TOL
    }

    /// `n/Σ(1/p_i) < t < r < ∞` or `n/Σ(1/p_i) ≤ t < r = ∞`.
    pub fn nontrivial(&self) -> bool {
        let d = self.delta();
        if self.r.is_infinite() {
            d <= DELTA_TOL && self.t < self.r
        } else {
            d < -DELTA_TOL && self.t < self.r
        }
    }

    fn check(&self, f: &GridFunction) -> Result<()> {
        if self.dim() != f.dim {
            return Err(Error::Dimension(format!("params have n={}, function has n={}", self.dim(), f.dim)));
        }
        if !self.admissible() {
            return Err(Error::Inadmissible(format!("Σ1/p = {} < n/t = {}", self.p.sum_recip(), f.dim as f64 / self.t)));
        }
        Ok(())
    }
}

#[inline]
fn inv(x: f64) -> f64 {
    if x.is_infinite() { 0.0 } else { 1.0 / x }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Divergence {
    CoarseTail,
    FineTail,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalePartial {
    pub j: i32,
    /// `Σ_Q term^r` at this scale, or `max_Q term` when `r = ∞`.
    #[serde(with = "crate::json")]
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBreakdown {
    pub partials: Vec<ScalePartial>,
    #[serde(with = "crate::json")]
    pub coarse_tail: f64,
    #[serde(with = "crate::json")]
    pub fine_tail: f64,
    #[serde(with = "crate::json")]
    pub total: f64,
    pub divergence: Option<Divergence>,
}

impl NormBreakdown {
    fn zero() -> Self {
        NormBreakdown { partials: Vec::new(), coarse_tail: 0.0, fine_tail: 0.0, total: 0.0, divergence: None }
    }

    pub fn is_finite(&self) -> bool {
        self.total.is_finite()
    }
}

/// One axis of one cube: the cells it meets and the measure of each overlap.
struct AxisPiece {
    m: i64,
    start: usize,
    weights: Vec<f64>,
    inside: bool,
}

/// Cubes of scale `j ≤ J` along one axis of the box, in units of a third of
/// a cell so that shifted boundaries are integers.
fn axis_pieces(origin: i64, len: usize, resolution: i32, j: i32, shift: u8, p: f64, h: f64) -> Vec<AxisPiece> {
    let d = 1i128 << (resolution - j);
    let off = d * offset_sign(j) as i128 * shift as i128;
    let lo = 3 * origin as i128;
    let hi = 3 * (origin as i128 + len as i128);
    let m_lo = (lo - off).div_euclid(3 * d);
    let m_hi = (hi - 1 - off).div_euclid(3 * d);
    (m_lo..=m_hi)
        .map(|m| {
            let cl = (3 * d * m + off).max(lo);
            let ch = (3 * d * (m + 1) + off).min(hi);
            let k0 = (cl - lo).div_euclid(3);
            let k1 = (ch - lo + 2).div_euclid(3);
            let weights = (k0..k1)
                .map(|k| {
                    let ov = (ch.min(lo + 3 * k + 3) - cl.max(lo + 3 * k)) as f64;
                    if p.is_infinite() {
                        1.0
                    } else if ov == 3.0 {
                        h
                    } else {
                        ov / 3.0 * h
                    }
                })
                .collect();
            AxisPiece {
                m: m as i64,
                start: k0 as usize,
                weights,
                inside: 3 * d * m + off >= lo && 3 * d * (m + 1) + off <= hi,
            }
        })
        .collect()
}

/// Scales this far below the resolution are out of range of the exact
/// integer geometry.
pub(crate) const MAX_DEPTH: i32 = 120;

/// Norm of `f χ_Q` for one cube together with the common value of `|f|` on
/// `Q` when `Q` lies inside the box and `|f|` is constant there.
pub(crate) struct CubeNorm {
    #[allow(dead_code)]
    pub position: Vec<i64>,
    pub norm: f64,
    pub constant: Option<f64>,
}

fn region_constant(vals: &[f64], strides: &[usize], axes: &[(usize, &[f64])]) -> Option<f64> {
    let first: usize = axes.iter().zip(strides).map(|((s, _), st)| s * st).sum();
    let v = vals[first];
    let mut idx = vec![0usize; axes.len()];
    loop {
        let off: usize = (0..axes.len()).map(|i| (axes[i].0 + idx[i]) * strides[i]).sum();
        if vals[off] != v {
            return None;
        }
        let mut i = axes.len();
        loop {
            if i == 0 {
                return Some(v);
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < axes[i].1.len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// One cube of scale `j ≤ J` meeting the box, as per-axis cell ranges with
/// overlap weights.
pub(crate) struct CubeRegion {
    pub position: Vec<i64>,
    pub axes: Vec<(usize, Vec<f64>)>,
    pub inside: bool,
}

impl CubeRegion {
    pub fn axes(&self) -> Vec<(usize, &[f64])> {
        self.axes.iter().map(|(s, w)| (*s, w.as_slice())).collect()
    }
}

/// All cubes of scale `j ≤ J` of the grid selected by `shift` that meet the
/// box of `f`.
pub(crate) fn cube_regions(f: &GridFunction, shift: &[u8], j: i32, p: &[f64]) -> Vec<CubeRegion> {
    let n = f.dim;
    let h = f.cell_side();
    let per_axis: Vec<Vec<AxisPiece>> =
        (0..n).map(|i| axis_pieces(f.origin[i], f.shape[i], f.resolution, j, shift[i], p[i], h)).collect();
    let counts: Vec<usize> = per_axis.iter().map(|v| v.len()).collect();
    let total: usize = counts.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let pieces: Vec<&AxisPiece> = (0..n).map(|i| &per_axis[i][idx[i]]).collect();
        out.push(CubeRegion {
            position: pieces.iter().map(|a| a.m).collect(),
            axes: pieces.iter().map(|a| (a.start, a.weights.clone())).collect(),
            inside: pieces.iter().all(|a| a.inside),
        });
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    out
}

/// `‖f χ_Q‖_{p⃗}` for every cube of [`cube_regions`], computed from `vals`.
pub(crate) fn cube_norms(f: &GridFunction, vals: &[f64], shift: &[u8], j: i32, p: &[f64]) -> Vec<CubeNorm> {
    let strides = f.strides();
    cube_regions(f, shift, j, p)
        .into_iter()
        .map(|c| {
            let axes = c.axes();
            let norm = region_norm(vals, &strides, &axes, p);
            let constant = if c.inside { region_constant(vals, &strides, &axes) } else { None };
            CubeNorm { position: c.position, norm, constant }
        })
        .collect()
}

pub(crate) fn ceil_log2(x: i64) -> i32 {
    debug_assert!(x > 0);
    64 - (x - 1).leading_zeros() as i32
}

/// Finest scale at and below which the cubes meeting the support stop
/// changing how they cut it.
pub(crate) fn coarse_scale(f: &GridFunction, shift: &[u8]) -> i32 {
    let mut s = 1i64;
    for i in 0..f.dim {
        let a = f.origin[i];
        let b = a + f.shape[i] as i64;
        let si = if shift[i] == 0 {
            let mut m = 0;
            if b > 0 {
                m = m.max(b);
            }
            if a < 0 {
                m = m.max(-a);
            }
            m
        } else {
            3 * a.abs().max(b.abs())
        };
        s = s.max(si);
    }
    f.resolution - ceil_log2(s)
}

/// `2^{-j·x}` for a possibly large integer `j`.
#[inline]
pub(crate) fn exp2_neg(j: i32, x: f64) -> f64 {
    (-(j as f64) * x).exp2()
}

pub(crate) fn normalized(f: &GridFunction) -> (Vec<f64>, f64) {
    let m = f.max_abs();
    (f.values.iter().map(|z| z.norm() / m).collect(), m)
}

fn term(c: &CubeNorm, j: i32, n: usize, sp: &SpaceParams, delta: f64) -> f64 {
    match c.constant {
        // |Q|^δ |v| |Q|^{Σ1/p /n} = |v| |Q|^{1/t}; the same for every p⃗
        Some(v) => v * exp2_neg(j, n as f64 * inv(sp.t)),
        None => exp2_neg(j, n as f64 * delta) * c.norm,
    }
}

/// Per-scale partial for scales `j_lo..=j_hi` (all `≤ J`).
fn middle(f: &GridFunction, vals: &[f64], shift: &[u8], sp: &SpaceParams, j_lo: i32, j_hi: i32) -> Vec<ScalePartial> {
    let n = f.dim;
    let delta = sp.delta();
    (j_lo..=j_hi)
        .into_par_iter()
        .map(|j| {
            let cubes = cube_norms(f, vals, shift, j, &sp.p.0);
            let value = if sp.r.is_infinite() {
                cubes.iter().map(|c| term(c, j, n, sp, delta)).fold(0.0, f64::max)
            } else {
                let mut acc = Pairwise::new();
                for c in &cubes {
                    let x = term(c, j, n, sp, delta);
                    if x != 0.0 {
                        acc.push(powp(x, sp.r));
                    }
                }
                acc.total()
            };
            ScalePartial { j, value }
        })
        .collect()
}

/// Coarse tail: scales `j < j_c`, where the cube norms equal those at `j_c`.
fn coarse_tail(f: &GridFunction, vals: &[f64], shift: &[u8], sp: &SpaceParams, jc: i32) -> f64 {
    let n = f.dim as f64;
    let delta = sp.delta();
    let cubes = cube_norms(f, vals, shift, jc, &sp.p.0);
    if sp.r.is_infinite() {
        let m = cubes.iter().map(|c| c.norm).fold(0.0, f64::max);
        return exp2_neg(jc - 1, n * delta) * m;
    }
    if delta >= -DELTA_TOL {
        return f64::INFINITY;
    }
    let s = Pairwise::from_iter(cubes.iter().filter(|c| c.norm > 0.0).map(|c| powp(c.norm, sp.r))).total();
    let c = -n * delta * sp.r;
    s * ((jc - 1) as f64 * c).exp2() / (1.0 - (-c).exp2())
}

/// How one cube of scale `j > J` sits on one axis.
#[derive(Clone, Copy)]
enum FineAxis {
    /// Inside local cell `k`.
    Interior(usize),
    /// Straddles the boundary in front of local cell `b`.
    Boundary(usize),
}

/// Fine tail: scales `j > J`. A cube at such a scale lies inside one cell
/// per axis or, on a shifted axis, straddles one cell boundary with a left
/// fraction that depends only on the parity of `j`. Cubes are grouped by
/// these types and each group is a geometric series.
fn fine_tail(f: &GridFunction, vals: &[f64], shift: &[u8], sp: &SpaceParams) -> f64 {
    let n = f.dim;
    let big_j = f.resolution;
    let nt = n as f64 * inv(sp.t);
    if !sp.r.is_infinite() && sp.r <= sp.t {
        return f64::INFINITY;
    }
    let strides = f.strides();
    let options: Vec<Vec<FineAxis>> = (0..n)
        .map(|i| {
            let mut v: Vec<FineAxis> = (0..f.shape[i]).map(FineAxis::Interior).collect();
            if shift[i] != 0 {
                v.extend((0..=f.shape[i]).map(FineAxis::Boundary));
            }
            v
        })
        .collect();
    let counts: Vec<usize> = options.iter().map(|v| v.len()).collect();
    let total: usize = counts.iter().product();
    let mut acc = Pairwise::new();
    let mut sup = 0.0f64;
    let mut idx = vec![0usize; n];
    for _ in 0..total {
        let types: Vec<FineAxis> = (0..n).map(|i| options[i][idx[i]]).collect();
        let e0 = (0..n).filter(|&i| matches!(types[i], FineAxis::Interior(_)) && shift[i] == 0).count() as i32;
        let e1 = (0..n).filter(|&i| matches!(types[i], FineAxis::Interior(_)) && shift[i] != 0).count() as i32;
        for d in 1..=2 {
            let j = big_j + d;
            let pt = type_norm(f, vals, &strides, shift, &types, j, &sp.p.0);
            if pt == 0.0 {
                continue;
            }
            if sp.r.is_infinite() {
                sup = sup.max(exp2_neg(j, nt) * pt);
                continue;
            }
            // Σ over d' ≡ d (mod 2), d' ≥ 1, of 2^{d'e0}(2^{d'}−1)^{e1} 2^{-(J+d')nr/t}
            let mut series = 0.0;
            for k in 0..=e1 {
                let x = ((e0 + k) as f64 - nt * sp.r).exp2();
                let geo = if d == 1 { x / (1.0 - x * x) } else { x * x / (1.0 - x * x) };
                let sign = if (e1 - k) % 2 == 0 { 1.0 } else { -1.0 };
                series += sign * binom(e1, k) * geo;
            }
            acc.push(series * exp2_neg(big_j, nt * sp.r) * powp(pt, sp.r));
        }
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < counts[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    if sp.r.is_infinite() {
        sup
    } else {
        acc.total()
    }
}

fn binom(n: i32, k: i32) -> f64 {
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

/// Unit-scaled norm of `f` over a fine cube of the given type at scale `j`.
fn type_norm(
    f: &GridFunction,
    vals: &[f64],
    strides: &[usize],
    shift: &[u8],
    types: &[FineAxis],
    j: i32,
    p: &[f64],
) -> f64 {
    if types.iter().all(|t| matches!(t, FineAxis::Interior(_))) {
        let local: Vec<usize> = types.iter().map(|t| if let FineAxis::Interior(k) = t { *k } else { 0 }).collect();
        return vals[f.flatten(&local)];
    }
    let mut ws: Vec<(usize, Vec<f64>)> = Vec::with_capacity(types.len());
    for (i, t) in types.iter().enumerate() {
        match *t {
            FineAxis::Interior(k) => ws.push((k, vec![1.0])),
            FineAxis::Boundary(b) => {
                let phi = (-offset_sign(j) * shift[i] as i64).rem_euclid(3) as f64 / 3.0;
                let (left, right) = if p[i].is_infinite() { (1.0, 1.0) } else { (phi, 1.0 - phi) };
                if b == 0 {
                    ws.push((0, vec![right]));
                } else if b == f.shape[i] {
                    ws.push((b - 1, vec![left]));
                } else {
                    ws.push((b - 1, vec![left, right]));
                }
            }
        }
    }
    let axes: Vec<(usize, &[f64])> = ws.iter().map(|(s, w)| (*s, w.as_slice())).collect();
    region_norm(vals, strides, &axes, p)
}

fn assemble(mut partials: Vec<ScalePartial>, coarse: f64, fine: f64, r: f64, scale: f64) -> NormBreakdown {
    let divergence = match (coarse.is_infinite(), fine.is_infinite()) {
        (true, true) => Some(Divergence::Both),
        (true, false) => Some(Divergence::CoarseTail),
        (false, true) => Some(Divergence::FineTail),
        _ => None,
    };
    if r.is_infinite() {
        let m = partials.iter().map(|s| s.value).fold(coarse.max(fine), f64::max);
        for s in &mut partials {
            s.value *= scale;
        }
        return NormBreakdown { partials, coarse_tail: coarse * scale, fine_tail: fine * scale, total: m * scale, divergence };
    }
    let total = if divergence.is_some() {
        f64::INFINITY
    } else {
        let mut acc = Pairwise::new();
        for s in &partials {
            acc.push(s.value);
        }
        acc.push(coarse);
        acc.push(fine);
        scale * powp(acc.total(), 1.0 / r)
    };
    let sr = powp(scale, r);
    for s in &mut partials {
        s.value *= sr;
    }
    NormBreakdown { partials, coarse_tail: coarse * sr, fine_tail: fine * sr, total, divergence }
}

fn bm_norm_grid(f: &GridFunction, sp: &SpaceParams, shift: &[u8]) -> Result<NormBreakdown> {
    sp.check(f)?;
    if shift.len() != f.dim || shift.iter().any(|&a| a > 2) {
        return Err(Error::InvalidGrid("shift must lie in {0,1,2}^n".into()));
    }
    let f = f.trim();
    if f.is_zero() {
        return Ok(NormBreakdown::zero());
    }
    let (vals, scale) = normalized(&f);
    let jc = coarse_scale(&f, shift).min(f.resolution);
    let partials = middle(&f, &vals, shift, sp, jc, f.resolution);
    let coarse = coarse_tail(&f, &vals, shift, sp, jc);
    let fine = fine_tail(&f, &vals, shift, sp);
    Ok(assemble(partials, coarse, fine, sp.r, scale))
}

/// `‖f‖_{M^{t,r}_{p⃗}}` over the standard dyadic grid, all scales included.
pub fn bm_norm(f: &GridFunction, sp: &SpaceParams) -> Result<NormBreakdown> {
    bm_norm_grid(f, sp, &vec![0; f.dim])
}

/// The same sum over the shifted grid `D_{a⃗}`.
pub fn bm_norm_shifted(f: &GridFunction, sp: &SpaceParams, shift: &[u8]) -> Result<NormBreakdown> {
    bm_norm_grid(f, sp, shift)
}

/// The dyadic sum restricted to scales `j_lo..=j_hi` (no tails).
pub fn bm_norm_window(f: &GridFunction, sp: &SpaceParams, j_lo: i32, j_hi: i32) -> Result<f64> {
    sp.check(f)?;
    let f = f.trim();
    if f.is_zero() || j_lo > j_hi {
        return Ok(0.0);
    }
    if j_hi.max(f.resolution) - j_lo > MAX_DEPTH {
        return Err(Error::Precondition(format!("scale window deeper than {MAX_DEPTH}")));
    }
    let zero = vec![0u8; f.dim];
    let g = if j_hi > f.resolution { f.refine(j_hi)? } else { f.clone() };
    let (vals, scale) = normalized(&g);
    let partials = middle(&g, &vals, &zero, sp, j_lo, j_hi);
    if sp.r.is_infinite() {
        Ok(scale * partials.iter().map(|s| s.value).fold(0.0, f64::max))
    } else {
        let s = Pairwise::from_iter(partials.iter().map(|s| s.value)).total();
        Ok(scale * powp(s, 1.0 / sp.r))
    }
}

/// `M χ_{[a,b]}(x)` for the one-dimensional Hardy-Littlewood maximal operator.
pub fn interval_maximal(a: f64, b: f64, x: f64) -> f64 {
    if x < a {
        (b - a) / (b - x)
    } else if x > b {
        (b - a) / (x - a)
    } else {
        1.0
    }
}

/// Scale window used by [`bm_norm_weighted`]: six scales either side of the
/// scale matching the support's extent.
pub fn weighted_window(f: &GridFunction) -> (i32, i32) {
    let f = f.trim();
    let ext = f.shape.iter().copied().max().unwrap_or(1) as i64;
    let js = f.resolution - ceil_log2(ext.max(1));
    (js - 6, js + 6)
}

/// Cubes further than this many positions from the support are dropped.
const WEIGHT_REACH: i64 = 4;

/// `(Σ_Q |Q|^{r/t − (r/n)Σ1/p_i} ‖f (M^{it}χ_Q)^η‖^r)^{1/r}` over the scale
/// window of [`weighted_window`]. The weight is separable; its per-cell
/// integrals use 8-point Gauss-Legendre split at the kinks of the weight.
pub fn bm_norm_weighted(f: &GridFunction, sp: &SpaceParams, eta: f64) -> Result<f64> {
    sp.check(f)?;
    let n = f.dim;
    let lo_eta = sp.p.sum_recip() / n as f64 - inv(sp.t) + inv(sp.r);
    if !(eta > lo_eta && eta < 1.0) {
        return Err(Error::Precondition(format!("η must lie in ({lo_eta}, 1), got {eta}")));
    }
    let f = f.trim();
    if f.is_zero() {
        return Ok(0.0);
    }
    let (vals, scale) = normalized(&f);
    let strides = f.strides();
    let (j_lo, j_hi) = weighted_window(&f);
    let rule = gauss_legendre(8);
    let h = f.cell_side();
    let delta = sp.delta();
    let parts: Vec<f64> = (j_lo..=j_hi)
        .into_par_iter()
        .map(|j| {
            let side = (-(j as f64)).exp2();
            // cube ranges per axis, widened by the reach
            let ranges: Vec<(i64, i64)> = (0..n)
                .map(|i| {
                    let a = f.origin[i] as f64 * h;
                    let b = (f.origin[i] + f.shape[i] as i64) as f64 * h;
                    ((a / side).floor() as i64 - WEIGHT_REACH, ((b / side).ceil() as i64) - 1 + WEIGHT_REACH)
                })
                .collect();
            // per axis, per cube position, the weights of every cell
            let weights: Vec<Vec<Vec<f64>>> = (0..n)
                .map(|i| {
                    (ranges[i].0..=ranges[i].1)
                        .map(|m| {
                            let (a, b) = (m as f64 * side, (m + 1) as f64 * side);
                            (0..f.shape[i])
                                .map(|k| {
                                    let x0 = (f.origin[i] + k as i64) as f64 * h;
                                    let x1 = x0 + h;
                                    if sp.p.0[i].is_infinite() {
                                        // the weight peaks at the point of the cell nearest [a, b]
                                        let x = if x1 <= a { x1 } else if x0 >= b { x0 } else { a.max(x0) };
                                        interval_maximal(a, b, x).powf(eta)
                                    } else {
                                        let pe = eta * sp.p.0[i];
                                        let mut cuts = vec![x0];
                                        for c in [a, b] {
                                            if c > x0 && c < x1 {
                                                cuts.push(c);
                                            }
                                        }
                                        cuts.push(x1);
                                        cuts.windows(2)
                                            .map(|w| crate::quad::integrate(|x| interval_maximal(a, b, x).powf(pe), w[0], w[1], &rule))
                                            .sum()
                                    }
                                })
                                .collect()
                        })
                        .collect()
                })
                .collect();
            let counts: Vec<usize> = weights.iter().map(|w| w.len()).collect();
            let total: usize = counts.iter().product();
            let mut idx = vec![0usize; n];
            let mut acc = Pairwise::new();
            let mut sup = 0.0f64;
            let factor = exp2_neg(j, n as f64 * delta);
            for _ in 0..total {
                let axes: Vec<(usize, &[f64])> = (0..n).map(|i| (0usize, weights[i][idx[i]].as_slice())).collect();
                let x = factor * region_norm(&vals, &strides, &axes, &sp.p.0);
                if sp.r.is_infinite() {
                    sup = sup.max(x);
                } else if x > 0.0 {
                    acc.push(powp(x, sp.r));
                }
                for i in (0..n).rev() {
                    idx[i] += 1;
                    if idx[i] < counts[i] {
                        break;
                    }
                    idx[i] = 0;
                }
            }
            if sp.r.is_infinite() { sup } else { acc.total() }
        })
        .collect();
    if sp.r.is_infinite() {
        Ok(scale * parts.into_iter().fold(0.0, f64::max))
    } else {
        Ok(scale * powp(Pairwise::from_iter(parts).total(), 1.0 / sp.r))
    }
}

/// Pointwise `ℓ^u` aggregate `(Σ_k |f_k|^u)^{1/u}` on a common grid.
pub fn lu_aggregate(fs: &[GridFunction], u: f64) -> Result<GridFunction> {
    let first = fs.first().ok_or_else(|| Error::Precondition("empty sequence".into()))?;
    let mut acc = first.abs();
    if !u.is_infinite() {
        acc = acc.map(|z| num_complex::Complex64::new(powp(z.re, u), 0.0));
    }
    for g in &fs[1..] {
        let g = g.abs();
        acc = if u.is_infinite() {
            acc.zip_with(&g, |a, b| if a.re >= b.re { a } else { b })?
        } else {
            acc.zip_with(&g, |a, b| num_complex::Complex64::new(a.re + powp(b.re, u), 0.0))?
        };
    }
    if !u.is_infinite() {
        acc = acc.map(|z| num_complex::Complex64::new(powp(z.re, 1.0 / u), 0.0));
    }
    Ok(acc)
}

/// `‖{f_k}‖_{M^{t,r}_{p⃗}(ℓ^u)}`.
pub fn bm_norm_vector(fs: &[GridFunction], sp: &SpaceParams, u: f64) -> Result<NormBreakdown> {
    if !(u > 0.0) {
        return Err(Error::Exponents("u must be positive".into()));
    }
    bm_norm(&lu_aggregate(fs, u)?, sp)
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationReport {
    pub m: i32,
    #[serde(with = "crate::json")]
    pub lhs: f64,
    #[serde(with = "crate::json")]
    pub rhs: f64,
    pub rel_error: f64,
    pub pass: bool,
}

/// `‖f(2^m ·)‖ = 2^{-mn/t}‖f‖`.
pub fn check_dilation(f: &GridFunction, sp: &SpaceParams, m: i32) -> Result<DilationReport> {
    let lhs = bm_norm(&dilate_dyadic(f, m), sp)?.total;
    let rhs = exp2_neg(m, f.dim as f64 * inv(sp.t)) * bm_norm(f, sp)?.total;
    Ok(equality_report(lhs, rhs, |lhs, rhs, rel_error, pass| DilationReport { m, lhs, rhs, rel_error, pass }))
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    if lhs == rhs {
        0.0
    } else {
        (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
    }
}

fn equality_report<T>(lhs: f64, rhs: f64, build: impl Fn(f64, f64, f64, bool) -> T) -> T {
    let e = rel(lhs, rhs);
    build(lhs, rhs, e, e <= 1e-12)
}

#[derive(Clone, Debug, Serialize)]
pub struct TranslationReport {
    pub shift: Vec<i64>,
    #[serde(with = "crate::json")]
    pub lhs: f64,
    #[serde(with = "crate::json")]
    pub rhs: f64,
    pub rel_error: f64,
    pub pass: bool,
}

/// `‖f(· − k)‖ = ‖f‖` for an integer vector `k`. Equality is exact when the
/// support lies in one unit cube; for wider supports integer shifts need not
/// map dyadic cubes to dyadic cubes.
pub fn check_translation(f: &GridFunction, sp: &SpaceParams, k: &[i64]) -> Result<TranslationReport> {
    let g = translate_lattice(f, k, 0)?;
    let lhs = bm_norm(&g, sp)?.total;
    let rhs = bm_norm(f, sp)?.total;
    Ok(equality_report(lhs, rhs, |lhs, rhs, rel_error, pass| TranslationReport { shift: k.to_vec(), lhs, rhs, rel_error, pass }))
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproximationReport {
    pub k: Vec<i32>,
    pub values: Vec<f64>,
    pub pass: bool,
}

/// `‖f − E_k f‖` along a sequence of increasing `k`.
pub fn approximation_check(f: &GridFunction, sp: &SpaceParams, ks: &[i32]) -> Result<ApproximationReport> {
    if !sp.nontrivial() || sp.r.is_infinite() || sp.p.0.iter().any(|&p| p <= 1.0 || p.is_infinite()) {
        return Err(Error::Precondition("needs nontrivial parameters with 1 < p < ∞ and r < ∞".into()));
    }
    let mut values = Vec::with_capacity(ks.len());
    for &k in ks {
        let e = conditional_expectation(f, k)?;
        values.push(bm_norm(&f.sub(&e)?, sp)?.total);
    }
    let last_ok = match ks.last() {
        Some(&k) if k >= f.resolution => values.last() == Some(&0.0),
        _ => true,
    };
    let pass = last_ok && values.first().zip(values.last()).map_or(true, |(a, b)| b <= a);
    Ok(ApproximationReport { k: ks.to_vec(), values, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DyadicCube;
    use crate::grid::indicator;

    fn unit(n: usize, j: i32) -> GridFunction {
        indicator(&DyadicCube::standard(0, vec![0; n]), j).unwrap()
    }

    /// Direct truncated sum over a wide scale window, summed naively.
    fn brute(f: &GridFunction, sp: &SpaceParams, j_lo: i32, j_hi: i32) -> f64 {
        bm_norm_window(f, sp, j_lo, j_hi).unwrap()
    }

    #[test]
    fn unit_interval_closed_form() {
        let sp = SpaceParams::uniform(2.0, 1, 3.0, 6.0);
        for j in [0, 2, 5] {
            let b = bm_norm(&unit(1, j), &sp).unwrap();
            assert!((b.total - 3f64.powf(1.0 / 6.0)).abs() < 1e-14, "{}", b.total);
        }
    }

    #[test]
    fn unit_square_closed_form() {
        let sp = SpaceParams { p: ExponentVector(vec![2.0, 4.0]), t: 4.0, r: 8.0 };
        let b = bm_norm(&unit(2, 2), &sp).unwrap();
        assert!((b.total - (5.0f64 / 3.0).powf(1.0 / 8.0)).abs() < 1e-14);
        let sum: f64 = b.partials.iter().map(|s| s.value).sum::<f64>() + b.coarse_tail + b.fine_tail;
        assert!((sum - b.total.powi(8)).abs() < 1e-14);
    }

    #[test]
    fn divergence_reasons() {
        let f = unit(1, 0);
        let b = bm_norm(&f, &SpaceParams::uniform(2.0, 1, 2.0, 6.0)).unwrap();
        assert_eq!(b.divergence, Some(Divergence::CoarseTail));
        assert!(b.total.is_infinite());
        let b = bm_norm(&f, &SpaceParams::uniform(2.0, 1, 3.0, 3.0)).unwrap();
        assert_eq!(b.divergence, Some(Divergence::FineTail));
        let b = bm_norm(&f, &SpaceParams::uniform(2.0, 1, 2.0, 1.5)).unwrap();
        assert_eq!(b.divergence, Some(Divergence::Both));
        assert!(matches!(bm_norm(&f, &SpaceParams::uniform(2.0, 1, 1.0, 6.0)), Err(Error::Inadmissible(_))));
    }

    #[test]
    fn zero_function() {
        let f = GridFunction::zeros(2, 3, vec![0, 0], vec![2, 2]);
        assert_eq!(bm_norm(&f, &SpaceParams::uniform(2.0, 2, 2.0, 2.0)).unwrap().total, 0.0);
    }

    #[test]
    fn morrey_limit_is_sup() {
        // r = ∞: sup_Q |Q|^{1/t - 1/2} ‖χ_[0,1) χ_Q‖_2 = 1 at j = 0
        let b = bm_norm(&unit(1, 3), &SpaceParams::uniform(2.0, 1, 3.0, f64::INFINITY)).unwrap();
        assert!((b.total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tails_match_wide_window() {
        let f = GridFunction::from_real(2, 2, vec![-3, 1], vec![3, 2], vec![1.0, -2.0, 0.5, 3.0, 0.0, 1.5]).unwrap();
        let sp = SpaceParams { p: ExponentVector(vec![1.5, 3.0]), t: 2.5, r: 5.0 };
        let exact = bm_norm(&f, &sp).unwrap().total;
        // fine scales decay like 4^{-j}; stopping at J + 8 leaves < 1e-4
        let approx = brute(&f, &sp, -80, 10);
        assert!(approx < exact && (exact - approx) < 1e-4 * exact, "{exact} {approx}");
        for j in [3, 5] {
            let b = bm_norm(&f.refine(j).unwrap(), &sp).unwrap().total;
            assert!((exact - b).abs() < 1e-13 * exact);
        }
    }

    #[test]
    fn shifted_zero_is_standard() {
        let f = GridFunction::from_real(1, 3, vec![-2], vec![5], vec![1.0, 2.0, 0.0, -1.0, 4.0]).unwrap();
        let sp = SpaceParams::uniform(2.0, 1, 3.0, 5.0);
        assert_eq!(bm_norm(&f, &sp).unwrap(), bm_norm_shifted(&f, &sp, &[0]).unwrap());
    }

    #[test]
    fn shifted_tails_match_truncation() {
        // the fine tail closed form against explicit refinement: refining f
        // does not change the norm, and moves scales from the tail into the
        // directly summed range
        let f = GridFunction::from_real(2, 1, vec![0, -1], vec![2, 3], vec![1.0, 2.0, 0.5, 3.0, -1.0, 2.5]).unwrap();
        let sp = SpaceParams { p: ExponentVector(vec![2.0, 1.5]), t: 2.0, r: 3.0 };
        for shift in [[1u8, 0], [2, 1], [1, 2]] {
            let a = bm_norm_shifted(&f, &sp, &shift).unwrap().total;
            for j in [2, 4] {
                let b = bm_norm_shifted(&f.refine(j).unwrap(), &sp, &shift).unwrap().total;
                assert!((a - b).abs() < 1e-12 * a, "{shift:?} {a} {b}");
            }
        }
    }

    #[test]
    fn shifted_unit_interval() {
        let sp = SpaceParams::uniform(2.0, 1, 3.0, 6.0);
        let f = unit(1, 0);
        let s = bm_norm_shifted(&f, &sp, &[1]).unwrap();
        assert!(s.is_finite());
        let base = bm_norm(&f, &sp).unwrap().total;
        assert!(s.total / base < 6.0 && base / s.total < 6.0);
        let div = bm_norm_shifted(&f, &SpaceParams::uniform(2.0, 1, 2.0, 6.0), &[1]).unwrap();
        assert_eq!(div.divergence, Some(Divergence::CoarseTail));
    }

    #[test]
    fn dilation_example() {
        let sp = SpaceParams::uniform(2.0, 1, 3.0, 6.0);
        let rep = check_dilation(&unit(1, 2), &sp, 1).unwrap();
        assert!((rep.lhs - (-1.0f64 / 3.0).exp2() * 3f64.powf(1.0 / 6.0)).abs() < 1e-14);
        assert!(rep.pass);
        assert!(check_dilation(&unit(1, 2), &sp, 0).unwrap().rel_error == 0.0);
    }

    #[test]
    fn interval_maximal_example() {
        assert!((interval_maximal(0.0, 1.0, 3.0) - 1.0 / 3.0).abs() < 1e-16);
        assert_eq!(interval_maximal(0.0, 1.0, 0.5), 1.0);
    }

    #[test]
    fn weighted_dominates_window() {
        let sp = SpaceParams::uniform(2.0, 1, 3.0, 6.0);
        let f = unit(1, 2);
        let (lo, hi) = weighted_window(&f);
        let eta = 0.9;
        let w = bm_norm_weighted(&f, &sp, eta).unwrap();
        let plain = bm_norm_window(&f, &sp, lo, hi).unwrap();
        assert!(w >= plain && w < 4.0 * plain, "{w} {plain}");
        assert!(bm_norm_weighted(&f, &sp, 0.2).is_err());
    }

    #[test]
    fn vector_examples() {
        let sp = SpaceParams::uniform(2.0, 1, 3.0, 6.0);
        let f = unit(1, 1);
        let single = bm_norm_vector(std::slice::from_ref(&f), &sp, 2.0).unwrap();
        assert!((single.total - bm_norm(&f, &sp).unwrap().total).abs() < 1e-15);
        let g = translate_lattice(&f, &[2], 0).unwrap();
        let v = bm_norm_vector(&[f.clone(), g.clone()], &sp, 2.0).unwrap().total;
        let direct = bm_norm(&f.add(&g).unwrap(), &sp).unwrap().total;
        assert!((v - direct).abs() < 1e-14 * direct);
    }

    #[test]
    fn approximation_example() {
        let sp = SpaceParams::uniform(2.0, 1, 3.0, 6.0);
        let f = GridFunction::from_real(1, 4, vec![0], vec![16], (0..16).map(|k| (k * k % 7) as f64).collect()).unwrap();
        let rep = approximation_check(&f, &sp, &[1, 2, 3, 4]).unwrap();
        assert!(rep.pass, "{:?}", rep.values);
        assert_eq!(*rep.values.last().unwrap(), 0.0);
        // χ_[0,1) is constant on unit cubes, so E_2 leaves it alone; at k = −1
        // |f − E_k f| = χ_[0,2)/2, whose norm follows from dilation
        let ind = unit(1, 4);
        let rep = approximation_check(&ind, &sp, &[-1, 2]).unwrap();
        let want = 0.5 * (1.0f64 / 3.0).exp2() * 3f64.powf(1.0 / 6.0);
        assert!((rep.values[0] - want).abs() < 1e-14, "{:?}", rep.values);
        assert_eq!(rep.values[1], 0.0);
    }
}
