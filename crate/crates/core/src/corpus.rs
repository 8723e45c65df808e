//! Seeded families of test functions.
//!
//! Every member draws from its own ChaCha8 stream (`set_stream(index)`), so
//! a member depends only on `(seed, family, index)` and the corpus can be
//! generated in parallel or truncated without changing earlier members.

use crate::block::Block;
use crate::error::{Error, Result};
use crate::geometry::DyadicCube;
use crate::grid::GridFunction;
use crate::morrey::SpaceParams;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Family {
    /// Independent uniform values on the cells of `[0, 2^box_log2)^n` at the
    /// base resolution, about a third of them zero.
    RandomCells,
    /// One normalized `(p⃗′, t′)`-block on a random dyadic cube of the box.
    Blocks,
    /// `Σ λ_i b_i` of two to four blocks with `λ_i ∈ [0, 1)`.
    BlockSums,
    /// `cos(2πξ₀·(x−c)) e^{-π|x−c|²/9}` on `[-16, 16)^n`, `|ξ₀| ∈ [2, 2.5]`,
    /// with spectrum inside `1/2 ≤ |ξ| ≤ 4` up to `e^{-60}`.
    Cosines,
    /// `e^{-π|x−c|²/σ²}` on `[-8, 8)^n`, `σ ∈ [1/2, 2]`, `c ∈ [-1, 1]^n`.
    Gaussians,
}

impl Family {
    pub const ALL: [Family; 5] = [Family::RandomCells, Family::Blocks, Family::BlockSums, Family::Cosines, Family::Gaussians];

    pub fn name(&self) -> &'static str {
        match self {
            Family::RandomCells => "random-cells",
            Family::Blocks => "blocks",
            Family::BlockSums => "block-sums",
            Family::Cosines => "cosines",
            Family::Gaussians => "gaussians",
        }
    }

    /// Sampled-smooth families, as opposed to piecewise-constant ones.
    pub fn is_sampled(&self) -> bool {
        matches!(self, Family::Cosines | Family::Gaussians)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Family::ALL.iter().copied().find(|f| f.name() == s).ok_or_else(|| Error::UnknownFamily(s.to_string()))
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
        f.name().to_string()
    }
}

fn default_base() -> i32 {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionCorpus {
    pub seed: u64,
    pub count: usize,
    pub family: Family,
    pub dim: usize,
    /// Resolution of the emitted members.
    pub resolution: i32,
    /// Resolution at which piecewise-constant members are drawn before
    /// refinement to `resolution`; the same seed gives the same function at
    /// every `resolution ≥ base_resolution`.
    #[serde(default = "default_base")]
    pub base_resolution: i32,
    /// Side `2^box_log2` of the support box of piecewise-constant families.
    #[serde(default)]
    pub box_log2: i32,
    /// Block normalization for the block families.
    #[serde(default)]
    pub params: Option<SpaceParams>,
    #[serde(default)]
    pub complex: bool,
}

impl FunctionCorpus {
    pub fn new(family: Family, seed: u64, count: usize, dim: usize, resolution: i32) -> Self {
        FunctionCorpus {
            seed,
            count,
            family,
            dim,
            resolution,
            base_resolution: default_base().min(resolution),
            box_log2: 0,
            params: None,
            complex: false,
        }
    }

    fn block_params(&self) -> SpaceParams {
        self.params.clone().unwrap_or_else(|| SpaceParams::uniform(2.0, self.dim, 3.0, 6.0))
    }

    fn check(&self) -> Result<()> {
        if self.dim == 0 || self.dim > 3 {
            return Err(Error::Dimension(format!("corpus dimension {} not in 1..=3", self.dim)));
        }
        if self.resolution < 0 {
            return Err(Error::InvalidGrid("resolution must be ≥ 0".into()));
        }
        if !self.family.is_sampled() && self.base_resolution > self.resolution {
            return Err(Error::Precondition(format!(
                "base resolution {} exceeds resolution {}",
                self.base_resolution, self.resolution
            )));
        }
        if !self.family.is_sampled() && self.base_resolution + self.box_log2 < 0 {
            return Err(Error::Precondition("support box is smaller than one base cell".into()));
        }
        if let Some(sp) = &self.params {
            if sp.dim() != self.dim {
                return Err(Error::Dimension("corpus params have a different dimension".into()));
            }
        }
        Ok(())
    }

    pub fn member(&self, index: usize) -> Result<GridFunction> {
        self.check()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        let f = match self.family {
            Family::RandomCells => self.random_cells(&mut rng)?,
            Family::Blocks => self.block(&mut rng)?.function,
            Family::BlockSums => {
                let k = rng.gen_range(2..=4);
                let mut acc = GridFunction::zeros(self.dim, self.base_resolution, vec![0; self.dim], vec![self.cells(); self.dim]);
                for _ in 0..k {
                    let lambda: f64 = rng.gen();
                    let b = self.block(&mut rng)?.function.embed(&acc.origin, &acc.shape)?;
                    acc = acc.add(&b.scale(Complex64::new(lambda, 0.0)))?;
                }
                acc
            }
            Family::Cosines => return Ok(self.cosine(&mut rng)),
            Family::Gaussians => return Ok(self.gaussian(&mut rng)),
        };
        f.refine(self.resolution)
    }

    fn cells(&self) -> usize {
        1usize << (self.base_resolution + self.box_log2)
    }

    fn value(&self, rng: &mut ChaCha8Rng) -> Complex64 {
        let re = rng.gen_range(-1.0..1.0);
        let im = if self.complex { rng.gen_range(-1.0..1.0) } else { 0.0 };
        Complex64::new(re, im)
    }

    fn random_cells(&self, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
        let n = self.dim;
        let len = self.cells().pow(n as u32);
        let values: Vec<Complex64> = (0..len)
            .map(|_| {
                let v = self.value(rng);
                if rng.gen_bool(1.0 / 3.0) { Complex64::new(0.0, 0.0) } else { v }
            })
            .collect();
        let mut f = GridFunction::new(n, self.base_resolution, vec![0; n], vec![self.cells(); n], values)?;
        if f.is_zero() {
            f.values[0] = Complex64::new(1.0, 0.0);
        }
        Ok(f)
    }

    /// A block on a random cube of side between one base cell and the box.
    pub fn block(&self, rng: &mut ChaCha8Rng) -> Result<Block> {
        let n = self.dim;
        let scale = rng.gen_range(-self.box_log2..=self.base_resolution);
        let per_axis = 1i64 << (scale + self.box_log2);
        let position: Vec<i64> = (0..n).map(|_| rng.gen_range(0..per_axis)).collect();
        let cube = DyadicCube::standard(scale, position);
        let side = 1usize << (self.base_resolution - scale);
        let origin: Vec<i64> = cube.position.iter().map(|&m| m * side as i64).collect();
        let values: Vec<Complex64> = (0..side.pow(n as u32)).map(|_| self.value(rng)).collect();
        let mut g = GridFunction::new(n, self.base_resolution, origin, vec![side; n], values)?;
        if g.is_zero() {
            g.values[0] = Complex64::new(1.0, 0.0);
        }
        let mut b = Block { support: cube, function: g, params: self.block_params() };
        let s = b.normalization();
        b.function = b.function.scale(Complex64::new(1.0 / s, 0.0));
        Ok(b)
    }

    fn center(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..self.dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    fn cosine(&self, rng: &mut ChaCha8Rng) -> GridFunction {
        let n = self.dim;
        let c = self.center(rng);
        let radius = rng.gen_range(2.0..=2.5);
        let mut dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-3);
        dir.iter_mut().for_each(|x| *x *= radius / len);
        let phase: f64 = rng.gen_range(0.0..2.0 * PI);
        let complex = self.complex;
        let half = 16i64 << self.resolution;
        GridFunction::sample(n, self.resolution, vec![-half; n], vec![2 * half as usize; n], |x| {
            let mut dot = 0.0;
            let mut r2 = 0.0;
            for i in 0..n {
                dot += dir[i] * (x[i] - c[i]);
                r2 += (x[i] - c[i]).powi(2);
            }
            let env = (-PI * r2 / 9.0).exp();
            let arg = 2.0 * PI * dot + phase;
            if complex { Complex64::from_polar(env, arg) } else { Complex64::new(env * arg.cos(), 0.0) }
        })
    }

    fn gaussian(&self, rng: &mut ChaCha8Rng) -> GridFunction {
        let n = self.dim;
        let c = self.center(rng);
        let sigma: f64 = rng.gen_range(0.5..=2.0);
        let half = 8i64 << self.resolution;
        GridFunction::sample(n, self.resolution, vec![-half; n], vec![2 * half as usize; n], |x| {
            let r2: f64 = x.iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum();
            Complex64::new((-PI * r2 / (sigma * sigma)).exp(), 0.0)
        })
    }
}

pub fn generate_corpus(spec: &FunctionCorpus) -> Result<Vec<GridFunction>> {
    spec.check()?;
    (0..spec.count).into_par_iter().map(|i| spec.member(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_prefix_stable() {
        let spec = FunctionCorpus::new(Family::RandomCells, 0, 5, 2, 5);
        let a = generate_corpus(&spec).unwrap();
        let b = generate_corpus(&spec).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
        let one = generate_corpus(&FunctionCorpus { count: 1, ..spec.clone() }).unwrap();
        assert_eq!(one[0], a[0]);
        assert_ne!(a[0], a[1]);
        let other = generate_corpus(&FunctionCorpus { seed: 1, ..spec }).unwrap();
        assert_ne!(other[0], a[0]);
    }

    #[test]
    fn refinement_keeps_the_function() {
        let lo = FunctionCorpus::new(Family::RandomCells, 3, 2, 1, 4);
        let hi = FunctionCorpus { resolution: 7, ..lo.clone() };
        let a = lo.member(1).unwrap();
        let b = hi.member(1).unwrap();
        assert_eq!(a.refine(7).unwrap(), b);
    }

    #[test]
    fn blocks_are_normalized() {
        for fam in [Family::Blocks, Family::BlockSums] {
            let spec = FunctionCorpus::new(fam, 11, 20, 2, 4);
            for f in generate_corpus(&spec).unwrap() {
                assert!(!f.is_zero());
            }
        }
        let spec = FunctionCorpus::new(Family::Blocks, 5, 1, 1, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let b = spec.block(&mut rng).unwrap();
            assert!((b.normalization() - 1.0).abs() < 1e-12);
            assert!(b.is_valid());
        }
    }

    #[test]
    fn sampled_families_decay_at_the_box_edge() {
        for fam in [Family::Cosines, Family::Gaussians] {
            let f = FunctionCorpus::new(fam, 2, 1, 1, 4).member(0).unwrap();
            assert!(f.values[0].norm() < 1e-20 && f.values[f.len() - 1].norm() < 1e-20);
        }
        assert!("bogus".parse::<Family>().is_err());
        let json = r#"{"seed":1,"count":1,"family":"wavy","dim":1,"resolution":4}"#;
        assert!(serde_json::from_str::<FunctionCorpus>(json).is_err());
    }
}
