//! Mixed Lebesgue norms `L^{p⃗}` of piecewise-constant functions.
//!
//! The norm is iterated with `x_1` innermost and `x_n` outermost; an infinite
//! exponent replaces that coordinate's integral by a supremum.

use crate::error::{Error, Result};
use crate::geometry::{DyadicCube, Rational};
use crate::grid::{strides, GridFunction};
use crate::sum::Pairwise;
use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentVector(pub Vec<f64>);

impl Serialize for ExponentVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::json::vec::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for ExponentVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = crate::json::vec::deserialize(d)?;
        if v.is_empty() || v.iter().any(|&p| !(p > 0.0)) {
            return Err(serde::de::Error::custom("exponents must be positive"));
        }
        Ok(ExponentVector(v))
    }
}

impl ExponentVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() || p.len() > 3 {
            return Err(Error::Dimension("exponent vector length must be 1..=3".into()));
        }
        if p.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::Exponents("entries must lie in (0, ∞]".into()));
        }
        Ok(ExponentVector(p))
    }

    pub fn uniform(p: f64, n: usize) -> Self {
        ExponentVector(vec![p; n])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `Σ 1/p_i` with `1/∞ = 0`.
    pub fn sum_recip(&self) -> f64 {
        self.0.iter().map(|&p| if p.is_infinite() { 0.0 } else { 1.0 / p }).sum()
    }

    pub fn conjugate(&self) -> Result<ExponentVector> {
        if self.0.iter().any(|&p| p < 1.0) {
            return Err(Error::Exponents("conjugate needs all entries ≥ 1".into()));
        }
        Ok(ExponentVector(self.0.iter().map(|&p| conjugate(p)).collect()))
    }

    /// Componentwise `self ≤ other`.
    pub fn le(&self, other: &ExponentVector) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(0.0, f64::max)
    }
}

pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

#[inline]
pub(crate) fn powp(x: f64, p: f64) -> f64 {
    if p == 1.0 {
        x
    } else if p == 2.0 {
        x * x
    } else {
        x.powf(p)
    }
}

/// Iterated norm of the nonnegative array `vals` (row-major with `strides`)
/// over the sub-box described by `axes[i] = (first index, weights)`.
///
/// For a finite exponent the weights are the lengths of the cell pieces; for
/// an infinite exponent they multiply the values inside the supremum.
pub(crate) fn region_norm(vals: &[f64], strides: &[usize], axes: &[(usize, &[f64])], p: &[f64]) -> f64 {
    level(vals, strides, axes, p, axes.len() - 1, 0)
}

fn level(vals: &[f64], strides: &[usize], axes: &[(usize, &[f64])], p: &[f64], axis: usize, base: usize) -> f64 {
    let (start, w) = axes[axis];
    let pa = p[axis];
    let stride = strides[axis];
    if pa.is_infinite() {
        let mut m = 0.0f64;
        for (k, &wk) in w.iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            let off = base + (start + k) * stride;
            let x = if axis == 0 { vals[off] } else { level(vals, strides, axes, p, axis - 1, off) };
            m = m.max(wk * x);
        }
        return m;
    }
    let mut acc = Pairwise::new();
    for (k, &wk) in w.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        let off = base + (start + k) * stride;
        let x = if axis == 0 { vals[off] } else { level(vals, strides, axes, p, axis - 1, off) };
        if x != 0.0 {
            acc.push(wk * powp(x, pa));
        }
    }
    let s = acc.total();
    if s == 0.0 {
        0.0
    } else {
        powp(s, 1.0 / pa)
    }
}

/// Adds `factor · ∂N/∂vals[c]` to `grad[c]` for every cell of the region,
/// `N` being [`region_norm`] with finite exponents. Returns `N`.
pub(crate) fn region_norm_grad(
    vals: &[f64],
    strides: &[usize],
    axes: &[(usize, &[f64])],
    p: &[f64],
    factor: f64,
    grad: &mut [f64],
) -> f64 {
    let top = axes.len() - 1;
    let nrm = level(vals, strides, axes, p, top, 0);
    if nrm > 0.0 && factor != 0.0 {
        grad_level(vals, strides, axes, p, top, 0, nrm, factor, grad);
    }
    nrm
}

#[allow(clippy::too_many_arguments)]
fn grad_level(
    vals: &[f64],
    strides: &[usize],
    axes: &[(usize, &[f64])],
    p: &[f64],
    axis: usize,
    base: usize,
    g: f64,
    mult: f64,
    grad: &mut [f64],
) {
    let (start, w) = axes[axis];
    let pa = p[axis];
    for (k, &wk) in w.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        let off = base + (start + k) * strides[axis];
        let child = if axis == 0 { vals[off] } else { level(vals, strides, axes, p, axis - 1, off) };
        if child == 0.0 {
            continue;
        }
        // ∂G/∂child = w (child/G)^{p−1}
        let m = mult * wk * powp(child / g, pa - 1.0);
        if axis == 0 {
            grad[off] += m;
        } else {
            grad_level(vals, strides, axes, p, axis - 1, off, child, m, grad);
        }
    }
}

/// Hölder extremal for the region: writes `h` with `∫ h|g| = ‖h‖_{p⃗}‖g‖_{q⃗}`
/// into `out`, where `q⃗` is finite and `p⃗ = q⃗′`.
///
/// `h = |g|^{q_1−1} Π_{i≥2} G_i^{q_i − q_{i−1}}` with `G_i` the partial norm
/// of `g` over the first `i − 1` coordinates.
pub(crate) fn dual_field(vals: &[f64], strides: &[usize], axes: &[(usize, &[f64])], q: &[f64], out: &mut [f64]) {
    dual_level(vals, strides, axes, q, axes.len() - 1, 0, 1.0, out);
}

#[allow(clippy::too_many_arguments)]
fn dual_level(
    vals: &[f64],
    strides: &[usize],
    axes: &[(usize, &[f64])],
    q: &[f64],
    axis: usize,
    base: usize,
    mult: f64,
    out: &mut [f64],
) {
    let (start, w) = axes[axis];
    for (k, &wk) in w.iter().enumerate() {
        if wk == 0.0 {
            continue;
        }
        let off = base + (start + k) * strides[axis];
        if axis == 0 {
            let v = vals[off];
            out[off] = if v == 0.0 { 0.0 } else { mult * powp(v, q[0] - 1.0) };
        } else {
            let g = level(vals, strides, axes, q, axis - 1, off);
            if g == 0.0 {
                continue;
            }
            dual_level(vals, strides, axes, q, axis - 1, off, mult * g.powf(q[axis] - q[axis - 1]), out);
        }
    }
}

fn full_weights(f: &GridFunction, p: &ExponentVector) -> Vec<Vec<f64>> {
    let h = f.cell_side();
    (0..f.dim)
        .map(|i| vec![if p.0[i].is_infinite() { 1.0 } else { h }; f.shape[i]])
        .collect()
}

pub fn mixed_norm(f: &GridFunction, p: &ExponentVector) -> f64 {
    assert_eq!(f.dim, p.dim(), "exponent dimension");
    let scale = f.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let vals: Vec<f64> = f.values.iter().map(|z| z.norm() / scale).collect();
    let w = full_weights(f, p);
    let axes: Vec<(usize, &[f64])> = w.iter().map(|v| (0usize, v.as_slice())).collect();
    scale * region_norm(&vals, &f.strides(), &axes, &p.0)
}

/// Overlap lengths (in units of the cell side) of `[a, b)` with the cells of
/// one axis of the box; `None` if disjoint.
fn axis_overlap(a: Rational, b: Rational, origin: i64, count: usize) -> Option<(usize, Vec<f64>)> {
    let lo = Rational::from_integer(origin as i128);
    let hi = Rational::from_integer(origin as i128 + count as i128);
    let a = a.max(lo);
    let b = b.min(hi);
    if a >= b {
        return None;
    }
    let first = a.floor().to_integer();
    let last = (b.ceil().to_integer() - 1).max(first);
    let mut w = Vec::with_capacity((last - first + 1) as usize);
    for k in first..=last {
        let kl = Rational::from_integer(k);
        let kh = kl + Rational::from_integer(1);
        let len = b.min(kh) - a.max(kl);
        let len = if len < Rational::zero() { Rational::zero() } else { len };
        w.push(*len.numer() as f64 / *len.denom() as f64);
    }
    Some(((first - origin as i128) as usize, w))
}

/// `‖f χ_c‖_{L^{p⃗}}` for any cube, standard or shifted, coarse or sub-cell.
pub fn mixed_norm_on_cube(f: &GridFunction, p: &ExponentVector, c: &DyadicCube) -> f64 {
    assert_eq!(f.dim, c.dim());
    let to_cells = crate::geometry::pow2(f.resolution);
    let lo = c.lower();
    let hi = c.upper();
    let mut axes_w = Vec::with_capacity(f.dim);
    for i in 0..f.dim {
        match axis_overlap(lo[i] * to_cells, hi[i] * to_cells, f.origin[i], f.shape[i]) {
            Some(x) => axes_w.push(x),
            None => return 0.0,
        }
    }
    // a cube inside a single cell sees a constant value
    if c.scale >= f.resolution && axes_w.iter().all(|(_, w)| w.len() == 1) {
        let local: Vec<usize> = axes_w.iter().map(|(s, _)| *s).collect();
        let v = f.values[f.flatten(&local)].norm();
        return v * c.volume().powf(p.sum_recip() / f.dim as f64);
    }
    let h = f.cell_side();
    let scale = f.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let vals: Vec<f64> = f.values.iter().map(|z| z.norm() / scale).collect();
    let weights: Vec<Vec<f64>> = axes_w
        .iter()
        .enumerate()
        .map(|(i, (_, w))| {
            w.iter()
                .map(|&x| if p.0[i].is_infinite() { if x > 0.0 { 1.0 } else { 0.0 } } else { x * h })
                .collect()
        })
        .collect();
    let axes: Vec<(usize, &[f64])> =
        axes_w.iter().zip(&weights).map(|((s, _), w)| (*s, w.as_slice())).collect();
    scale * region_norm(&vals, &f.strides(), &axes, &p.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub r: ExponentVector,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub pass: bool,
}

/// `‖fg‖_{r⃗} ≤ ‖f‖_{p⃗}‖g‖_{q⃗}` with `1/r⃗ = 1/p⃗ + 1/q⃗`.
pub fn holder_check(f: &GridFunction, g: &GridFunction, p: &ExponentVector, q: &ExponentVector) -> Result<HolderReport> {
    if p.dim() != q.dim() || p.dim() != f.dim || g.dim != f.dim {
        return Err(Error::Exponents("dimensions of f, g, p, q differ".into()));
    }
    let r = ExponentVector(
        p.0.iter()
            .zip(&q.0)
            .map(|(&a, &b)| {
                let s = (if a.is_infinite() { 0.0 } else { 1.0 / a }) + (if b.is_infinite() { 0.0 } else { 1.0 / b });
                if s == 0.0 { f64::INFINITY } else { 1.0 / s }
            })
            .collect(),
    );
    let prod = f.mul(g)?;
    let lhs = mixed_norm(&prod, &r);
    let rhs = mixed_norm(f, p) * mixed_norm(g, q);
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(HolderReport { r, lhs, rhs, ratio, pass: ratio <= 1.0 + 1e-12 })
}

/// `E_{J+κ}(f * g)` computed exactly, `J` the common resolution.
///
/// The convolution of two cell indicators of side `h` is a product of tent
/// functions, linear on every half of its support, so the fine-cell
/// averages have the closed form used below.
pub fn convolve_projected(f: &GridFunction, g: &GridFunction, kappa: u32) -> Result<GridFunction> {
    if f.dim != g.dim {
        return Err(Error::Dimension("convolution operands".into()));
    }
    let j = f.resolution.max(g.resolution);
    let f = f.refine(j)?;
    let g = g.refine(j)?;
    let n = f.dim;
    // discrete convolution of the cell values
    let cshape: Vec<usize> = (0..n).map(|i| f.shape[i] + g.shape[i] - 1).collect();
    let corigin: Vec<i64> = (0..n).map(|i| f.origin[i] + g.origin[i]).collect();
    let cstr = strides(&cshape);
    let mut c = vec![Complex64::zero(); cshape.iter().product()];
    for a in 0..f.len() {
        let fa = f.values[a];
        if fa.is_zero() {
            continue;
        }
        let la = f.unflatten(a);
        for b in 0..g.len() {
            let gb = g.values[b];
            if gb.is_zero() {
                continue;
            }
            let lb = g.unflatten(b);
            let idx: usize = (0..n).map(|i| (la[i] + lb[i]) * cstr[i]).sum();
            c[idx] += fa * gb;
        }
    }
    let r = 1usize << kappa;
    let h = f.cell_side();
    let hf = h / r as f64;
    // average of the tent over fine cell `d` of its support, d ∈ [0, 2r)
    let tent: Vec<f64> = (0..2 * r)
        .map(|d| if d < r { (d as f64 + 0.5) * hf } else { 2.0 * h - (d as f64 + 0.5) * hf })
        .collect();
    let oshape: Vec<usize> = cshape.iter().map(|&s| (s - 1) * r + 2 * r).collect();
    let origin: Vec<i64> = corigin.iter().map(|&o| o * r as i64).collect();
    let mut out = GridFunction::zeros(n, j + kappa as i32, origin, oshape);
    for q in 0..out.len() {
        let lq = out.unflatten(q);
        let mut acc = Complex64::zero();
        // each fine cell meets the tents of two coarse offsets per axis
        for bits in 0..(1usize << n) {
            let mut idx = 0usize;
            let mut wgt = 1.0;
            let mut ok = true;
            for i in 0..n {
                let m0 = (lq[i] / r) as i64 - ((bits >> i) & 1) as i64;
                if m0 < 0 || m0 >= cshape[i] as i64 {
                    ok = false;
                    break;
                }
                let d = lq[i] - m0 as usize * r;
                wgt *= tent[d];
                idx += m0 as usize * cstr[i];
            }
            if ok {
                acc += c[idx] * wgt;
            }
        }
        out.values[q] = acc;
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct YoungReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    /// Sup-norm bound on how far the convolution moves within one fine cell.
    pub oscillation_bound: f64,
    pub kappa: u32,
    pub pass: bool,
}

/// `‖f*g‖_{s⃗} ≤ ‖f‖_{p⃗}‖g‖_{q⃗}` with `1/p⃗ + 1/q⃗ = 1 + 1/s⃗`, evaluated on
/// the projection `E_{J+κ}(f*g)`. Conditional expectation does not increase
/// the norm, so the projected ratio is itself bounded by one.
pub fn young_check(
    f: &GridFunction,
    g: &GridFunction,
    p: &ExponentVector,
    q: &ExponentVector,
    s: &ExponentVector,
    kappa: u32,
) -> Result<YoungReport> {
    let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
    if p.dim() != f.dim || q.dim() != f.dim || s.dim() != f.dim {
        return Err(Error::Exponents("dimension mismatch".into()));
    }
    for i in 0..f.dim {
        if p.0[i] < 1.0 || q.0[i] < 1.0 || s.0[i] < 1.0 {
            return Err(Error::Exponents("Young needs exponents ≥ 1".into()));
        }
        if (inv(p.0[i]) + inv(q.0[i]) - 1.0 - inv(s.0[i])).abs() > 1e-12 {
            return Err(Error::Exponents("1/p + 1/q must equal 1 + 1/s".into()));
        }
    }
    let conv = convolve_projected(f, g, kappa)?;
    let lhs = mixed_norm(&conv, s);
    let rhs = mixed_norm(f, p) * mixed_norm(g, q);
    let ratio = if rhs == 0.0 { 0.0 } else { lhs / rhs };
    let oscillation_bound = f.max_abs() * total_variation(g) * conv.cell_side() * (f.dim as f64).sqrt();
    Ok(YoungReport { lhs, rhs, ratio, oscillation_bound, kappa, pass: ratio <= 1.0 + 1e-12 })
}

/// Sum over cell faces of jump size times face area.
fn total_variation(g: &GridFunction) -> f64 {
    let area = g.cell_side().powi(g.dim as i32 - 1);
    let mut acc = Pairwise::new();
    let mut cell = vec![0i64; g.dim];
    for idx in 0..g.len() {
        let local = g.unflatten(idx);
        for i in 0..g.dim {
            cell[i] = g.origin[i] + local[i] as i64;
        }
        let v = g.values[idx];
        for i in 0..g.dim {
            cell[i] -= 1;
            acc.push((v - g.at(&cell)).norm() * area);
            cell[i] += 2;
            if local[i] + 1 == g.shape[i] {
                acc.push(v.norm() * area);
            }
            cell[i] -= 1;
        }
    }
    acc.total()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::indicator;

    fn ev(p: &[f64]) -> ExponentVector {
        ExponentVector(p.to_vec())
    }

    #[test]
    fn indicator_closed_form() {
        let q = DyadicCube::standard(-1, vec![0, 0]);
        let f = indicator(&q, 2).unwrap();
        let v = mixed_norm(&f, &ev(&[2.0, 4.0]));
        assert!((v - 2f64.powf(0.75)).abs() < 1e-14);
        for p in [[1.0, 3.0], [2.5, f64::INFINITY], [f64::INFINITY, 0.5]] {
            let p = ev(&p);
            let want = q.volume().powf(p.sum_recip() / 2.0);
            assert!((mixed_norm(&f, &p) - want).abs() < 1e-13 * want);
        }
    }

    #[test]
    fn order_matters() {
        let f = GridFunction::from_real(2, 0, vec![0, 0], vec![2, 1], vec![1.0, 1.0]).unwrap();
        assert!((mixed_norm(&f, &ev(&[1.0, f64::INFINITY])) - 2.0).abs() < 1e-15);
        assert!((mixed_norm(&f, &ev(&[f64::INFINITY, 1.0])) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sub_cell_cube() {
        let f = GridFunction::from_real(1, 0, vec![0], vec![1], vec![3.0]).unwrap();
        let c = DyadicCube::standard(3, vec![2]);
        let v = mixed_norm_on_cube(&f, &ev(&[2.0]), &c);
        assert!((v - 3.0 * (0.125f64).sqrt()).abs() < 1e-15);
        assert_eq!(mixed_norm_on_cube(&f, &ev(&[2.0]), &DyadicCube::standard(0, vec![4])), 0.0);
        let whole = DyadicCube::standard(-2, vec![0]);
        assert_eq!(mixed_norm_on_cube(&f, &ev(&[2.0]), &whole), mixed_norm(&f, &ev(&[2.0])));
    }

    #[test]
    fn shifted_cube_partial_cells() {
        // [1/3, 4/3) against cells of side 1/2 carrying 1,2,3
        let f = GridFunction::from_real(1, 1, vec![0], vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let c = DyadicCube::shifted(0, vec![0], vec![1]).unwrap();
        let want = (1.0 / 6.0 * 1.0 + 0.5 * 4.0 + 1.0 / 3.0 * 9.0f64).sqrt();
        assert!((mixed_norm_on_cube(&f, &ev(&[2.0]), &c) - want).abs() < 1e-14);
    }

    #[test]
    fn holder_examples() {
        let f = indicator(&DyadicCube::standard(0, vec![0]), 2).unwrap();
        let rep = holder_check(&f, &f, &ev(&[2.0]), &ev(&[2.0])).unwrap();
        assert_eq!(rep.r, ev(&[1.0]));
        assert!((rep.lhs - 1.0).abs() < 1e-15 && (rep.rhs - 1.0).abs() < 1e-15);
    }

    #[test]
    fn young_l1_mass() {
        let f = indicator(&DyadicCube::standard(0, vec![0]), 0).unwrap();
        let rep = young_check(&f, &f, &ev(&[1.0]), &ev(&[1.0]), &ev(&[1.0]), 3).unwrap();
        assert!((rep.lhs - 1.0).abs() < 1e-14);
        assert!((rep.ratio - 1.0).abs() < 1e-14);
    }

    #[test]
    fn young_dirac_limit() {
        let f = GridFunction::from_real(1, 2, vec![0], vec![4], vec![1.0, 3.0, 2.0, 0.5]).unwrap();
        let p = ev(&[2.0]);
        let mut ratios = Vec::new();
        for w in [3, 5, 7] {
            let g = GridFunction::from_real(1, w, vec![0], vec![1], vec![(w as f64).exp2()]).unwrap();
            let rep = young_check(&f, &g, &p, &ev(&[1.0]), &p, 3).unwrap();
            assert!(rep.pass);
            ratios.push(rep.ratio);
        }
        assert!(ratios[0] < ratios[1] && ratios[1] < ratios[2]);
        assert!((ratios[2] - 1.0).abs() < 1e-2);
    }

    #[test]
    fn gradient_matches_differences() {
        let vals = [0.3, 1.2, 0.7, 2.0, 0.1, 0.9];
        let strides = [3, 1];
        let w0 = [0.5, 0.25];
        let w1 = [1.0, 0.5, 2.0];
        let axes: [(usize, &[f64]); 2] = [(0, &w0), (0, &w1)];
        let p = [1.7, 3.2];
        let mut grad = [0.0; 6];
        let n0 = region_norm_grad(&vals, &strides, &axes, &p, 1.0, &mut grad);
        for c in 0..6 {
            let mut v = vals;
            let eps = 1e-6;
            v[c] += eps;
            let fd = (region_norm(&v, &strides, &axes, &p) - n0) / eps;
            assert!((fd - grad[c]).abs() < 1e-5, "{c}: {fd} {}", grad[c]);
        }
    }

    #[test]
    fn dual_field_attains_holder() {
        let vals = [0.3, 1.2, 0.7, 2.0, 0.1, 0.9];
        let strides = [3, 1];
        let w0 = [0.5, 0.25];
        let w1 = [1.0, 0.5, 2.0];
        let axes: [(usize, &[f64]); 2] = [(0, &w0), (0, &w1)];
        let q = [1.7, 3.2];
        let p = [conjugate(1.7), conjugate(3.2)];
        let mut h = [0.0; 6];
        dual_field(&vals, &strides, &axes, &q, &mut h);
        let pairing: f64 = (0..6).map(|c| h[c] * vals[c] * w0[c / 3] * w1[c % 3]).sum();
        let prod = region_norm(&h, &strides, &axes, &p) * region_norm(&vals, &strides, &axes, &q);
        assert!((pairing - prod).abs() < 1e-12 * prod, "{pairing} {prod}");
    }

    #[test]
    fn exponent_json() {
        let p = ev(&[2.0, f64::INFINITY]);
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"[2.0,"inf"]"#);
        assert_eq!(serde_json::from_str::<ExponentVector>(&s).unwrap(), p);
    }
}
