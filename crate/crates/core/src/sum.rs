//! Deterministic pairwise summation.

/// Streaming pairwise sum. Partial sums are merged like a binary counter, so
/// the result is the balanced-tree sum of the pushed values in push order.
#[derive(Clone, Debug, Default)]
pub struct Pairwise {
    stack: Vec<(f64, u32)>,
}

impl Pairwise {
    pub fn new() -> Self {
        Pairwise { stack: Vec::with_capacity(32) }
    }

    pub fn push(&mut self, x: f64) {
        let mut s = x;
        let mut level = 0;
        while let Some(&(top, l)) = self.stack.last() {
            if l != level {
                break;
            }
            self.stack.pop();
            s += top;
            level += 1;
        }
        self.stack.push((s, level));
    }

    pub fn total(&self) -> f64 {
        let mut acc = 0.0;
        for &(s, _) in self.stack.iter().rev() {
            acc += s;
        }
        acc
    }
}

impl FromIterator<f64> for Pairwise {
    fn from_iter<I: IntoIterator<Item = f64>>(it: I) -> Self {
        let mut p = Pairwise::new();
        for x in it {
            p.push(x);
        }
        p
    }
}

pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
