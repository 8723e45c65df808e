//! Dyadic cubes on the standard grid and on the three-shift grids.
//!
//! A cube at scale `j` on the grid with shift vector `a ∈ {0,1,2}^n` has
//! lower corner `2^{-j}(m_i + σ_j a_i / 3)` where `σ_j = (-1)^j`. The sign
//! alternation makes every shifted grid nested across scales, so parents and
//! children are well defined; at each single scale the grid is the standard
//! one translated by `a/3` of the side length.

use crate::error::{Error, Result};
use num_rational::Ratio;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

pub type Rational = Ratio<i128>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    #[serde(rename = "j")]
    pub scale: i32,
    #[serde(rename = "m")]
    pub position: Vec<i64>,
    pub shift: Vec<u8>,
}

/// `(-1)^j` as used by the shifted-grid offsets.
pub fn offset_sign(scale: i32) -> i64 {
    if scale.rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

pub fn pow2(e: i32) -> Rational {
    if e >= 0 {
        Rational::from_integer(1i128 << e)
    } else {
        Rational::new(1, 1i128 << (-e))
    }
}

impl DyadicCube {
    pub fn standard(scale: i32, position: Vec<i64>) -> Self {
        let n = position.len();
        DyadicCube { scale, position, shift: vec![0; n] }
    }

    pub fn shifted(scale: i32, position: Vec<i64>, shift: Vec<u8>) -> Result<Self> {
        if shift.len() != position.len() {
            return Err(Error::Dimension("shift and position lengths differ".into()));
        }
        if shift.iter().any(|&a| a > 2) {
            return Err(Error::Precondition("shift entries must lie in {0,1,2}".into()));
        }
        if position.is_empty() || position.len() > 3 {
            return Err(Error::Dimension("dimension must be 1, 2 or 3".into()));
        }
        Ok(DyadicCube { scale, position, shift })
    }

    pub fn dim(&self) -> usize {
        self.position.len()
    }

    pub fn is_standard(&self) -> bool {
        self.shift.iter().all(|&a| a == 0)
    }

    pub fn side(&self) -> f64 {
        (-self.scale as f64).exp2()
    }

    pub fn volume(&self) -> f64 {
        (-(self.scale as f64) * self.dim() as f64).exp2()
    }

    pub fn side_exact(&self) -> Rational {
        pow2(-self.scale)
    }

    pub fn volume_exact(&self) -> Rational {
        pow2(-self.scale * self.dim() as i32)
    }

    /// Exact lower corner.
    pub fn lower(&self) -> Vec<Rational> {
        let s = offset_sign(self.scale) as i128;
        self.position
            .iter()
            .zip(&self.shift)
            .map(|(&m, &a)| Rational::new(3 * m as i128 + s * a as i128, 3) * pow2(-self.scale))
            .collect()
    }

    pub fn upper(&self) -> Vec<Rational> {
        let side = self.side_exact();
        self.lower().into_iter().map(|x| x + side).collect()
    }

    pub fn contains_point(&self, x: &[Rational]) -> bool {
        let lo = self.lower();
        let side = self.side_exact();
        lo.iter().zip(x).all(|(l, x)| l <= x && *x < *l + side)
    }

    /// Whether `other` is a subset of `self`.
    pub fn contains(&self, other: &DyadicCube) -> bool {
        let (lo, hi) = (self.lower(), self.upper());
        let (olo, ohi) = (other.lower(), other.upper());
        (0..self.dim()).all(|i| lo[i] <= olo[i] && ohi[i] <= hi[i])
    }

    /// The unique cube of the same grid at scale `j - k` containing this one.
    pub fn parent(&self, k: u32) -> DyadicCube {
        let mut c = self.clone();
        for _ in 0..k {
            let s = offset_sign(c.scale);
            for (m, &a) in c.position.iter_mut().zip(&c.shift) {
                *m = (*m + s * a as i64).div_euclid(2);
            }
            c.scale -= 1;
        }
        c
    }

    /// The `2^n` cubes at scale `j + 1` partitioning this one, in lexicographic order.
    pub fn children(&self) -> Vec<DyadicCube> {
        let n = self.dim();
        let s_child = offset_sign(self.scale + 1);
        let mut out = Vec::with_capacity(1 << n);
        for bits in 0..(1usize << n) {
            let position = (0..n)
                .map(|i| {
                    let e = ((bits >> (n - 1 - i)) & 1) as i64;
                    2 * self.position[i] - s_child * self.shift[i] as i64 + e
                })
                .collect();
            out.push(DyadicCube { scale: self.scale + 1, position, shift: self.shift.clone() });
        }
        out
    }
}

/// Returns a cube from one of the `3^n` shifted grids containing the cube
/// with lower corner `corner` and side `side`, with `|R| ≤ 6^n |q|`.
///
/// Scales are tried from the finest candidate upward, so an already dyadic
/// cube is returned unchanged.
pub fn cover_by_shifted(corner: &[Rational], side: Rational) -> Result<DyadicCube> {
    if side <= Rational::zero() {
        return Err(Error::Precondition("side length must be positive".into()));
    }
    let n = corner.len();
    if n == 0 || n > 3 {
        return Err(Error::Dimension("dimension must be 1, 2 or 3".into()));
    }
    // finest scale whose side is at least `side`
    let mut j_start = 0i32;
    while pow2(-j_start) < side {
        j_start -= 1;
    }
    while pow2(-(j_start + 1)) >= side {
        j_start += 1;
    }
    for j in (j_start - 3..=j_start).rev() {
        let scale_up = pow2(j);
        let sgn = offset_sign(j) as i128;
        let mut position = Vec::with_capacity(n);
        let mut shift = Vec::with_capacity(n);
        for x in corner {
            let u = *x * scale_up;
            let w = side * scale_up;
            let found = (0u8..3).find_map(|a| {
                let off = Rational::new(sgn * a as i128, 3);
                let m = (u - off).floor().to_integer();
                let start = Rational::from_integer(m) + off;
                (u + w <= start + Rational::one()).then_some((m, a))
            });
            match found {
                Some((m, a)) => {
                    position.push(m as i64);
                    shift.push(a);
                }
                None => break,
            }
        }
        if position.len() == n {
            return Ok(DyadicCube { scale: j, position, shift });
        }
    }
    unreachable!("three offsets always cover at side ≥ 3ℓ")
}

/// Scale window and half-open bounding box for enumeration.
#[derive(Clone, Debug)]
pub struct CubeRange {
    pub j_min: i32,
    pub j_max: i32,
    pub lower: Vec<Rational>,
    pub upper: Vec<Rational>,
}

/// All integer points of the inclusive box `[lo, hi]`, lexicographic.
pub fn lattice_points(lo: &[i64], hi: &[i64]) -> Vec<Vec<i64>> {
    let n = lo.len();
    if (0..n).any(|i| hi[i] < lo[i]) {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut m = lo.to_vec();
    'outer: loop {
        out.push(m.clone());
        for axis in (0..n).rev() {
            if m[axis] < hi[axis] {
                m[axis] += 1;
                m[axis + 1..].copy_from_slice(&lo[axis + 1..]);
                continue 'outer;
            }
        }
        break;
    }
    out
}

/// Standard-grid cubes in the window meeting the box, scale-major then lexicographic.
pub fn enumerate(range: &CubeRange) -> Vec<DyadicCube> {
    let mut out = Vec::new();
    let n = range.lower.len();
    for j in range.j_min..=range.j_max {
        let f = pow2(j);
        let lo: Vec<i64> = range.lower.iter().map(|x| (*x * f).floor().to_integer() as i64).collect();
        let hi: Vec<i64> =
            range.upper.iter().map(|x| (*x * f).ceil().to_integer() as i64 - 1).collect();
        if (0..n).any(|i| hi[i] < lo[i]) {
            continue;
        }
        for m in lattice_points(&lo, &hi) {
            out.push(DyadicCube::standard(j, m));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn parent_examples() {
        assert_eq!(DyadicCube::standard(3, vec![5]).parent(1), DyadicCube::standard(2, vec![2]));
        assert_eq!(
            DyadicCube::standard(0, vec![0, 0]).parent(2),
            DyadicCube::standard(-2, vec![0, 0])
        );
        assert_eq!(DyadicCube::standard(1, vec![-1]).parent(1), DyadicCube::standard(0, vec![-1]));
    }

    #[test]
    fn parent_minus_one_by_containment() {
        let c = DyadicCube::standard(1, vec![-1]);
        let candidates: Vec<_> = (-4..4).map(|m| DyadicCube::standard(0, vec![m])).collect();
        let hits: Vec<_> = candidates.iter().filter(|p| p.contains(&c)).collect();
        assert_eq!(hits.len(), 1);
        assert_eq!(*hits[0], c.parent(1));
    }

    #[test]
    fn children_partition_and_round_trip() {
        for shift in [vec![0u8, 0], vec![1, 2], vec![2, 1]] {
            for scale in -3..4 {
                let c = DyadicCube::shifted(scale, vec![3, -2], shift.clone()).unwrap();
                let kids = c.children();
                assert_eq!(kids.len(), 4);
                let vol: Rational = kids.iter().map(|k| k.volume_exact()).sum();
                assert_eq!(vol, c.volume_exact());
                for k in &kids {
                    assert_eq!(k.parent(1), c);
                    assert!(c.contains(k));
                }
                assert_eq!(c.parent(1).parent(1), c.parent(2));
            }
        }
        assert_eq!(DyadicCube::standard(0, vec![0]).children().len(), 2);
    }

    #[test]
    fn shifted_parent_contains_child() {
        for a in 0..3u8 {
            for j in -4..5 {
                for m in -5..5 {
                    let c = DyadicCube::shifted(j, vec![m], vec![a]).unwrap();
                    assert!(c.parent(1).contains(&c), "a={a} j={j} m={m}");
                }
            }
        }
    }

    #[test]
    fn cover_examples() {
        let r = cover_by_shifted(&[q(0, 1)], q(1, 1)).unwrap();
        assert_eq!(r, DyadicCube::standard(0, vec![0]));
        let r = cover_by_shifted(&[q(2, 5)], q(1, 1)).unwrap();
        assert!(r.side_exact() <= q(6, 1));
        assert!(r.contains_point(&[q(2, 5)]));
        assert!(r.upper()[0] >= q(7, 5));
    }

    #[test]
    fn enumerate_examples() {
        let r = CubeRange { j_min: 0, j_max: 0, lower: vec![q(0, 1)], upper: vec![q(2, 1)] };
        assert_eq!(
            enumerate(&r),
            vec![DyadicCube::standard(0, vec![0]), DyadicCube::standard(0, vec![1])]
        );
        let r = CubeRange { j_min: 0, j_max: 1, lower: vec![q(0, 1)], upper: vec![q(1, 1)] };
        assert_eq!(enumerate(&r).len(), 3);
        let r = CubeRange { j_min: 0, j_max: 3, lower: vec![q(0, 1); 2], upper: vec![q(1, 1); 2] };
        assert_eq!(enumerate(&r).len(), 1 + 4 + 16 + 64);
        let r = CubeRange { j_min: 2, j_max: 1, lower: vec![q(0, 1)], upper: vec![q(1, 1)] };
        assert!(enumerate(&r).is_empty());
    }

    #[test]
    fn enumerate_is_sorted() {
        let r = CubeRange { j_min: -1, j_max: 2, lower: vec![q(-1, 2), q(0, 1)], upper: vec![q(1, 1), q(3, 2)] };
        let a = enumerate(&r);
        let mut b = a.clone();
        b.sort();
        assert_eq!(a, b);
        assert_eq!(a, enumerate(&r));
    }

    #[test]
    fn cube_json() {
        let c = DyadicCube::shifted(2, vec![1, -3], vec![0, 2]).unwrap();
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"j":2,"m":[1,-3],"shift":[0,2]}"#);
        let back: DyadicCube = serde_json::from_str(&s).unwrap();
        assert_eq!(back, c);
    }
}
