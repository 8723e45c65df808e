//! Piecewise-constant complex fields on a uniform dyadic lattice.

use crate::error::{Error, Result};
use crate::geometry::DyadicCube;
use crate::sum::Pairwise;
use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A function constant on the cells `2^{-J}(k + [0,1)^n)` of a box and zero
/// outside it. Values are stored row-major (last axis fastest); axis 0 is
/// the coordinate `x_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub dim: usize,
    pub resolution: i32,
    pub origin: Vec<i64>,
    pub shape: Vec<usize>,
    pub values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    dim: usize,
    #[serde(rename = "J")]
    resolution: i32,
    origin: Vec<i64>,
    shape: Vec<usize>,
    values: Vec<[f64; 2]>,
}

impl Serialize for GridFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GridJson {
            dim: self.dim,
            resolution: self.resolution,
            origin: self.origin.clone(),
            shape: self.shape.clone(),
            values: self.values.iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for GridFunction {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = GridJson::deserialize(d)?;
        let values = raw.values.iter().map(|v| Complex64::new(v[0], v[1])).collect();
        GridFunction::new(raw.dim, raw.resolution, raw.origin, raw.shape, values)
            .map_err(serde::de::Error::custom)
    }
}

impl GridFunction {
    pub fn new(
        dim: usize,
        resolution: i32,
        origin: Vec<i64>,
        shape: Vec<usize>,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if dim == 0 || dim > 3 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if origin.len() != dim || shape.len() != dim {
            return Err(Error::InvalidGrid("origin/shape length differs from dim".into()));
        }
        if resolution < 0 {
            return Err(Error::InvalidGrid("resolution must be ≥ 0".into()));
        }
        if shape.iter().any(|&s| s == 0) {
            return Err(Error::InvalidGrid("shape entries must be ≥ 1".into()));
        }
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::InvalidGrid(format!(
                "{} values for shape {:?} ({} cells)",
                values.len(),
                shape,
                len
            )));
        }
        Ok(GridFunction { dim, resolution, origin, shape, values })
    }

    pub fn zeros(dim: usize, resolution: i32, origin: Vec<i64>, shape: Vec<usize>) -> Self {
        let len = shape.iter().product();
        GridFunction::new(dim, resolution, origin, shape, vec![Complex64::new(0.0, 0.0); len])
            .expect("valid zero grid")
    }

    pub fn from_real(dim: usize, resolution: i32, origin: Vec<i64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let values = values.into_iter().map(|x| Complex64::new(x, 0.0)).collect();
        GridFunction::new(dim, resolution, origin, shape, values)
    }

    /// Samples `f` at cell centers.
    pub fn sample(
        dim: usize,
        resolution: i32,
        origin: Vec<i64>,
        shape: Vec<usize>,
        f: impl Fn(&[f64]) -> Complex64,
    ) -> Self {
        let mut g = GridFunction::zeros(dim, resolution, origin, shape);
        let h = g.cell_side();
        let mut x = vec![0.0; dim];
        for idx in 0..g.len() {
            let local = g.unflatten(idx);
            for i in 0..dim {
                x[i] = (g.origin[i] as f64 + local[i] as f64 + 0.5) * h;
            }
            g.values[idx] = f(&x);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn cell_side(&self) -> f64 {
        (-self.resolution as f64).exp2()
    }

    pub fn cell_volume(&self) -> f64 {
        (-(self.resolution as f64) * self.dim as f64).exp2()
    }

    pub fn strides(&self) -> Vec<usize> {
        strides(&self.shape)
    }

    pub fn flatten(&self, local: &[usize]) -> usize {
        let mut idx = 0;
        for i in 0..self.dim {
            idx = idx * self.shape[i] + local[i];
        }
        idx
    }

    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for i in (0..self.dim).rev() {
            out[i] = idx % self.shape[i];
            idx /= self.shape[i];
        }
        out
    }

    /// Value on the cell with global lattice index `cell` (zero outside the box).
    pub fn at(&self, cell: &[i64]) -> Complex64 {
        let mut idx = 0;
        for i in 0..self.dim {
            let k = cell[i] - self.origin[i];
            if k < 0 || k >= self.shape[i] as i64 {
                return Complex64::new(0.0, 0.0);
            }
            idx = idx * self.shape[i] + k as usize;
        }
        self.values[idx]
    }

    pub fn abs_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    pub fn integral(&self) -> Complex64 {
        let mut re = Pairwise::new();
        let mut im = Pairwise::new();
        for z in &self.values {
            re.push(z.re);
            im.push(z.im);
        }
        Complex64::new(re.total(), im.total()) * self.cell_volume()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        let mut g = self.clone();
        for z in &mut g.values {
            *z = f(*z);
        }
        g
    }

    pub fn abs(&self) -> GridFunction {
        self.map(|z| Complex64::new(z.norm(), 0.0))
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        self.map(|z| z * c)
    }

    /// Same function at a finer resolution.
    pub fn refine(&self, resolution: i32) -> Result<GridFunction> {
        if resolution < self.resolution {
            return Err(Error::Precondition(format!(
                "refine to {resolution} below current resolution {}",
                self.resolution
            )));
        }
        if resolution == self.resolution {
            return Ok(self.clone());
        }
        let f = 1usize << (resolution - self.resolution);
        let origin: Vec<i64> = self.origin.iter().map(|&o| o * f as i64).collect();
        let shape: Vec<usize> = self.shape.iter().map(|&s| s * f).collect();
        let mut g = GridFunction::zeros(self.dim, resolution, origin, shape);
        for idx in 0..g.len() {
            let local = g.unflatten(idx);
            let coarse: Vec<usize> = local.iter().map(|&k| k / f).collect();
            g.values[idx] = self.values[self.flatten(&coarse)];
        }
        Ok(g)
    }

    /// Same function on a larger box at the same resolution.
    pub fn embed(&self, origin: &[i64], shape: &[usize]) -> Result<GridFunction> {
        for i in 0..self.dim {
            if origin[i] > self.origin[i]
                || origin[i] + (shape[i] as i64) < self.origin[i] + self.shape[i] as i64
            {
                return Err(Error::Precondition("embedding box does not contain the support box".into()));
            }
        }
        let mut g = GridFunction::zeros(self.dim, self.resolution, origin.to_vec(), shape.to_vec());
        for idx in 0..self.len() {
            let local = self.unflatten(idx);
            let target: Vec<usize> =
                (0..self.dim).map(|i| (self.origin[i] - origin[i]) as usize + local[i]).collect();
            let t = g.flatten(&target);
            g.values[t] = self.values[idx];
        }
        Ok(g)
    }

    /// Restriction (or zero extension) to an arbitrary box at the same resolution.
    pub fn reframe(&self, origin: &[i64], shape: &[usize]) -> GridFunction {
        let mut g = GridFunction::zeros(self.dim, self.resolution, origin.to_vec(), shape.to_vec());
        let mut cell = vec![0i64; self.dim];
        for idx in 0..g.len() {
            let local = g.unflatten(idx);
            for i in 0..self.dim {
                cell[i] = origin[i] + local[i] as i64;
            }
            g.values[idx] = self.at(&cell);
        }
        g
    }

    /// Smallest box containing every nonzero cell (one cell if the function vanishes).
    pub fn trim(&self) -> GridFunction {
        let mut lo = vec![i64::MAX; self.dim];
        let mut hi = vec![i64::MIN; self.dim];
        for idx in 0..self.len() {
            let z = self.values[idx];
            if z.re != 0.0 || z.im != 0.0 {
                let local = self.unflatten(idx);
                for i in 0..self.dim {
                    let c = self.origin[i] + local[i] as i64;
                    lo[i] = lo[i].min(c);
                    hi[i] = hi[i].max(c);
                }
            }
        }
        if lo[0] == i64::MAX {
            return GridFunction::zeros(self.dim, self.resolution, self.origin.clone(), vec![1; self.dim]);
        }
        let shape: Vec<usize> = (0..self.dim).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
        self.reframe(&lo, &shape)
    }

    /// Brings two functions onto a common resolution and box.
    pub fn align(&self, other: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        if self.dim != other.dim {
            return Err(Error::Dimension(format!("{} vs {}", self.dim, other.dim)));
        }
        let j = self.resolution.max(other.resolution);
        let a = self.refine(j)?;
        let b = other.refine(j)?;
        let origin: Vec<i64> = (0..self.dim).map(|i| a.origin[i].min(b.origin[i])).collect();
        let shape: Vec<usize> = (0..self.dim)
            .map(|i| {
                let hi = (a.origin[i] + a.shape[i] as i64).max(b.origin[i] + b.shape[i] as i64);
                (hi - origin[i]) as usize
            })
            .collect();
        Ok((a.embed(&origin, &shape)?, b.embed(&origin, &shape)?))
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GridFunction> {
        let (mut a, b) = self.align(other)?;
        for (x, y) in a.values.iter_mut().zip(&b.values) {
            *x = f(*x, *y);
        }
        Ok(a)
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |x, y| x + y)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |x, y| x - y)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |x, y| x * y)
    }

    /// Maximum cellwise difference as functions on R^n.
    pub fn max_diff(&self, other: &GridFunction) -> Result<f64> {
        let d = self.sub(other)?;
        Ok(d.max_abs())
    }

    /// Physical lower corner of the box.
    pub fn box_lower(&self) -> Vec<f64> {
        self.origin.iter().map(|&o| o as f64 * self.cell_side()).collect()
    }
}

pub fn strides(shape: &[usize]) -> Vec<usize> {
    let n = shape.len();
    let mut s = vec![1; n];
    for i in (0..n.saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// `χ_c` at resolution `J` on the box of `c`.
pub fn indicator(c: &DyadicCube, resolution: i32) -> Result<GridFunction> {
    if !c.is_standard() {
        return Err(Error::Precondition("indicator needs a standard-grid cube".into()));
    }
    if resolution < c.scale || resolution < 0 {
        return Err(Error::NotResolvable { scale: c.scale, resolution });
    }
    let f = 1i64 << (resolution - c.scale);
    let origin = c.position.iter().map(|&m| m * f).collect();
    let shape = vec![f as usize; c.dim()];
    let len = (f as usize).pow(c.dim() as u32);
    GridFunction::new(c.dim(), resolution, origin, shape, vec![Complex64::new(1.0, 0.0); len])
}

/// `f·χ_c` for a standard cube no finer than the resolution; the box is kept.
pub fn restrict(f: &GridFunction, c: &DyadicCube) -> Result<GridFunction> {
    if !c.is_standard() {
        return Err(Error::Precondition("restrict needs a standard-grid cube".into()));
    }
    if c.dim() != f.dim {
        return Err(Error::Dimension("cube and function dimensions differ".into()));
    }
    if c.scale > f.resolution {
        return Err(Error::NotResolvable { scale: c.scale, resolution: f.resolution });
    }
    let side = 1i64 << (f.resolution - c.scale);
    let mut g = f.clone();
    for idx in 0..g.len() {
        let local = g.unflatten(idx);
        let inside = (0..f.dim).all(|i| (f.origin[i] + local[i] as i64).div_euclid(side) == c.position[i]);
        if !inside {
            g.values[idx] = Complex64::new(0.0, 0.0);
        }
    }
    Ok(g)
}

/// `x ↦ f(2^m x)`.
pub fn dilate_dyadic(f: &GridFunction, m: i32) -> GridFunction {
    let target = f.resolution + m;
    if target >= 0 {
        let mut g = f.clone();
        g.resolution = target;
        return g;
    }
    // keep J ≥ 0 by splitting each cell into 2^{-target} cells per axis
    let mut g = f.refine(f.resolution - target).expect("refinement");
    g.resolution = 0;
    g
}

/// `x ↦ f(x − 2^{-scale} k)`.
pub fn translate_lattice(f: &GridFunction, k: &[i64], scale: i32) -> Result<GridFunction> {
    if scale > f.resolution {
        return Err(Error::Misaligned { scale, resolution: f.resolution });
    }
    if k.len() != f.dim {
        return Err(Error::Dimension("shift vector length".into()));
    }
    let step = 1i64 << (f.resolution - scale);
    let mut g = f.clone();
    for i in 0..f.dim {
        g.origin[i] += k[i] * step;
    }
    Ok(g)
}

/// `E_k f`: averages over the cubes of `D_k` meeting the box, stored at
/// resolution `max(k, 0)`.
pub fn conditional_expectation(f: &GridFunction, k: i32) -> Result<GridFunction> {
    if k > f.resolution {
        return Err(Error::ExpectationTooFine { k, resolution: f.resolution });
    }
    if k == f.resolution {
        return Ok(f.clone());
    }
    let n = f.dim;
    let side = 1i64 << (f.resolution - k);
    let lo: Vec<i64> = f.origin.iter().map(|&o| o.div_euclid(side)).collect();
    let hi: Vec<i64> =
        (0..n).map(|i| (f.origin[i] + f.shape[i] as i64 - 1).div_euclid(side)).collect();
    let cube_shape: Vec<usize> = (0..n).map(|i| (hi[i] - lo[i] + 1) as usize).collect();
    let count: usize = cube_shape.iter().product();
    let mut sums = vec![Complex64::new(0.0, 0.0); count];
    let cstrides = strides(&cube_shape);
    for idx in 0..f.len() {
        let local = f.unflatten(idx);
        let mut c = 0;
        for i in 0..n {
            c += ((f.origin[i] + local[i] as i64).div_euclid(side) - lo[i]) as usize * cstrides[i];
        }
        sums[c] += f.values[idx];
    }
    let vol = (side as f64).powi(n as i32);
    let avg: Vec<Complex64> = sums.iter().map(|s| s / vol).collect();
    if k >= 0 {
        return GridFunction::new(n, k, lo, cube_shape, avg);
    }
    let rep = 1usize << (-k);
    let coarse = GridFunction::new(n, 0, lo, cube_shape, avg)?;
    let mut g = coarse.refine(-k)?;
    g.resolution = 0;
    debug_assert_eq!(g.shape[0], coarse.shape[0] * rep);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn indicator_examples() {
        let g = indicator(&DyadicCube::standard(0, vec![0]), 2).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.values.iter().all(|&z| z == c(1.0)));
        let g = indicator(&DyadicCube::standard(1, vec![1]), 3).unwrap();
        assert_eq!(g.origin, vec![4]);
        assert_eq!(g.shape, vec![4]);
        let q = DyadicCube::standard(-1, vec![1, 0]);
        let g = indicator(&q, 1).unwrap();
        assert_eq!(g.integral(), c(q.volume()));
        assert_eq!(
            indicator(&DyadicCube::standard(3, vec![0]), 2),
            Err(Error::NotResolvable { scale: 3, resolution: 2 })
        );
    }

    #[test]
    fn restrict_examples() {
        let f = GridFunction::from_real(1, 2, vec![0], vec![8], (1..=8).map(|x| x as f64).collect()).unwrap();
        let g = restrict(&f, &DyadicCube::standard(0, vec![5])).unwrap();
        assert!(g.is_zero());
        let g = restrict(&f, &DyadicCube::standard(-1, vec![0])).unwrap();
        assert_eq!(g, f);
        let g = restrict(&f, &DyadicCube::standard(1, vec![1])).unwrap();
        assert_eq!(g.integral(), c((3.0 + 4.0) / 4.0));
        assert!(restrict(&f, &DyadicCube::standard(3, vec![0])).is_err());
    }

    #[test]
    fn dilation_examples() {
        let f = indicator(&DyadicCube::standard(0, vec![0]), 0).unwrap();
        assert_eq!(dilate_dyadic(&f, 0), f);
        let g = dilate_dyadic(&f, 1);
        let half = indicator(&DyadicCube::standard(1, vec![0]), 1).unwrap();
        assert_eq!(g, half);
        let back = dilate_dyadic(&dilate_dyadic(&f, -2), 2);
        assert_eq!(back.max_diff(&f).unwrap(), 0.0);
        assert_eq!(dilate_dyadic(&f, -2).integral(), c(4.0));
    }

    #[test]
    fn translation_examples() {
        let f = indicator(&DyadicCube::standard(0, vec![0]), 2).unwrap();
        assert_eq!(translate_lattice(&f, &[0], 0).unwrap(), f);
        let g = translate_lattice(&f, &[1], 0).unwrap();
        assert_eq!(g, indicator(&DyadicCube::standard(0, vec![1]), 2).unwrap());
        assert!(translate_lattice(&f, &[1], 3).is_err());
    }

    #[test]
    fn expectation_examples() {
        let f = indicator(&DyadicCube::standard(0, vec![0]), 0).unwrap();
        assert_eq!(conditional_expectation(&f, 0).unwrap(), f);
        let e = conditional_expectation(&f, -1).unwrap();
        assert_eq!(e.shape, vec![2]);
        assert!(e.values.iter().all(|&z| z == c(0.5)));
        let f = GridFunction::from_real(1, 3, vec![-3], vec![7], vec![1.0, -2.0, 0.5, 3.0, 4.0, 0.0, 1.5]).unwrap();
        let e = conditional_expectation(&f, 1).unwrap();
        assert!((e.integral() - f.integral()).norm() < 1e-15);
        assert!(conditional_expectation(&f, 4).is_err());
    }

    #[test]
    fn tower_property() {
        let f = GridFunction::from_real(2, 3, vec![-2, 1], vec![5, 6], (0..30).map(|i| (i * 7 % 11) as f64).collect()).unwrap();
        for j in -2..=3 {
            for k in -2..=3 {
                let a = conditional_expectation(&conditional_expectation(&f, k).unwrap(), j.min(k)).unwrap();
                let b = conditional_expectation(&f, j.min(k)).unwrap();
                assert!(a.max_diff(&b).unwrap() < 1e-14);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let f = GridFunction::new(1, 2, vec![-1], vec![2], vec![Complex64::new(1.0, 2.0), c(0.5)]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"dim":1,"J":2,"origin":[-1],"shape":[2],"values":[[1.0,2.0],[0.5,0.0]]}"#);
        let back: GridFunction = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        assert!(serde_json::from_str::<GridFunction>(r#"{"dim":1,"J":2,"origin":[0],"shape":[3],"values":[[1,0]]}"#).is_err());
    }

    #[test]
    fn align_and_arithmetic() {
        let a = indicator(&DyadicCube::standard(0, vec![0]), 0).unwrap();
        let b = indicator(&DyadicCube::standard(1, vec![3]), 1).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.resolution, 1);
        assert_eq!(s.origin, vec![0]);
        assert_eq!(s.shape, vec![4]);
        assert_eq!(s.integral(), c(1.5));
    }
}
