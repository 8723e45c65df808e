//! Verification suites and operator-norm estimates.
//!
//! A suite runs a fixed list of checks over seeded corpora and returns a
//! [`VerificationReport`]. Every record names the inequality it tests as a
//! formula (`anchor`), the parameters, the measured values and the bound.
//! Reports carry no timings, so equal seeds give byte-identical JSON for
//! any thread count.

use crate::block::{block_norm_infimum, block_norm_lower, block_norm_upper, pairing, slice_norm, SearchConfig, SolverConfig};
use crate::corpus::{Family, FunctionCorpus};
use crate::error::{Error, Result};
use crate::geometry::DyadicCube;
use crate::grid::{indicator, GridFunction};
use crate::lebesgue::{holder_check, mixed_norm, young_check, ExponentVector};
use crate::morrey::{approximation_check, bm_norm, bm_norm_vector, check_dilation, check_translation, Divergence, SpaceParams};
use crate::operators::{fractional_integral, hl_maximal_proxy, vector_maximal, OperatorSpec};
use crate::spectral::{
    bands_of, chain_rule_check, cz_model, heat, heat_characterization_check, lp_square_function, peetre_maximal,
    ChainSplit, CzModel, Partition, SpectralField,
};
use crate::wavelet::{haar_gram_exact, plancherel_pair, wavelet_coefficients, wavelet_equivalence_check, Family as Wavelet, ScaleWindow, WaveletSystem};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::PI;

pub const SCHEMA_VERSION: u32 = 1;

pub const SUITES: [&str; 11] = [
    "norms-exact",
    "embeddings",
    "dilation-translation",
    "holder-young",
    "duality-sandwich",
    "maximal",
    "fractional",
    "littlewood-paley",
    "heat",
    "wavelet",
    "chain-rule",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Resolution of the piecewise-constant corpora (at least 4).
    pub resolution: i32,
    /// Overrides every corpus size; `Some(0)` gives a vacuous report.
    pub count: Option<usize>,
    /// Evaluations per operator-norm ascent.
    pub budget: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { seed: 0, resolution: 4, count: None, budget: 48 }
    }
}

impl SuiteConfig {
    fn count(&self, default: usize) -> usize {
        self.count.unwrap_or(default)
    }

    fn salted(&self, salt: u64) -> u64 {
        self.seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub theorem: String,
    pub anchor: String,
    pub parameters: Value,
    #[serde(with = "crate::json::vec")]
    pub measured: Vec<f64>,
    #[serde(with = "crate::json")]
    pub bound: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub seed: u64,
    pub resolution: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub suite: String,
    pub environment: Environment,
    pub checks: Vec<CheckRecord>,
    pub vacuous: bool,
    pub pass: bool,
}

impl VerificationReport {
    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

fn record(id: &str, theorem: &str, anchor: &str, parameters: Value, measured: Vec<f64>, bound: f64, pass: bool) -> CheckRecord {
    CheckRecord { id: id.into(), theorem: theorem.into(), anchor: anchor.into(), parameters, measured, bound, pass }
}

/// Runs `f` on a pool of `threads` workers (the global pool when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new().num_threads(n).build().expect("thread pool").install(f),
        _ => f(),
    }
}

/// `BMKIT_THREADS`, if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var("BMKIT_THREADS").ok()?.parse().ok().filter(|&n| n > 0)
}

pub fn run_suite(name: &str, cfg: &SuiteConfig) -> Result<VerificationReport> {
    if !SUITES.contains(&name) {
        return Err(Error::UnknownSuite(name.to_string()));
    }
    if cfg.resolution < 4 {
        return Err(Error::Precondition("suites need resolution ≥ 4".into()));
    }
    let checks = if cfg.count == Some(0) {
        Vec::new()
    } else {
        match name {
            "norms-exact" => norms_exact(cfg)?,
            "embeddings" => embeddings(cfg)?,
            "dilation-translation" => dilation_translation(cfg)?,
            "holder-young" => holder_young(cfg)?,
            "duality-sandwich" => duality_sandwich(cfg)?,
            "maximal" => maximal(cfg)?,
            "fractional" => fractional(cfg)?,
            "littlewood-paley" => littlewood_paley(cfg)?,
            "heat" => heat_suite(cfg)?,
            "wavelet" => wavelet_suite(cfg)?,
            "chain-rule" => chain_rule(cfg)?,
            _ => unreachable!(),
        }
    };
    let mut checks = checks;
    checks.sort_by(|a, b| a.id.cmp(&b.id));
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerificationReport {
        schema_version: SCHEMA_VERSION,
        suite: name.to_string(),
        environment: Environment { version: env!("CARGO_PKG_VERSION").to_string(), seed: cfg.seed, resolution: cfg.resolution },
        vacuous: checks.is_empty(),
        checks,
        pass,
    })
}

fn sp(n: usize) -> SpaceParams {
    SpaceParams::uniform(2.0, n, 3.0, 6.0)
}

fn pj(sp: &SpaceParams) -> Value {
    serde_json::to_value(sp).expect("params serialize")
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) }
}

fn spread(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(0.0f64, f64::max);
    if lo > 0.0 && hi.is_finite() { hi / lo } else { f64::INFINITY }
}

fn members(family: Family, seed: u64, count: usize, dim: usize, resolution: i32, base: i32) -> Result<Vec<GridFunction>> {
    let spec = FunctionCorpus { base_resolution: base.min(resolution), ..FunctionCorpus::new(family, seed, count, dim, resolution) };
    crate::corpus::generate_corpus(&spec)
}

/// Random cells in one and two dimensions, half each.
fn mixed_corpus(cfg: &SuiteConfig, salt: u64, count: usize) -> Result<Vec<GridFunction>> {
    let mut fs = members(Family::RandomCells, cfg.salted(salt), count.div_ceil(2), 1, cfg.resolution, 4)?;
    fs.extend(members(Family::RandomCells, cfg.salted(salt + 1), count / 2, 2, cfg.resolution.min(5), 2)?);
    Ok(fs)
}

fn norms_exact(_cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let anchor = "‖χ_{[0,1)^n}‖ = (Σ_j 2^{jnδr} · #cubes)^{1/r}, a geometric series";
    let sp1 = sp(1);
    let f1 = indicator(&DyadicCube::standard(0, vec![0]), 3)?;
    let v = bm_norm(&f1, &sp1)?.total;
    let want = 3f64.powf(1.0 / 6.0);
    out.push(record("closed-form-n1", "unit-cube norm", anchor, json!({"params": pj(&sp1), "oracle": want}), vec![v, rel(v, want)], 1e-9, rel(v, want) <= 1e-9));
    let sp2 = SpaceParams::new(ExponentVector(vec![2.0, 4.0]), 4.0, 8.0)?;
    let f2 = indicator(&DyadicCube::standard(0, vec![0, 0]), 3)?;
    let v = bm_norm(&f2, &sp2)?.total;
    let want = (5.0f64 / 3.0).powf(1.0 / 8.0);
    out.push(record("closed-form-n2", "unit-cube norm", anchor, json!({"params": pj(&sp2), "oracle": want}), vec![v, rel(v, want)], 1e-9, rel(v, want) <= 1e-9));

    let nt = "χ_Q ∈ M^{t,r}_{p⃗} iff n/Σ(1/p_i) < t < r < ∞ or n/Σ(1/p_i) ≤ t < r = ∞";
    let cases = [
        ("boundary-coarse-n1", SpaceParams::uniform(2.0, 1, 2.0, 4.0), Divergence::CoarseTail, &f1),
        ("boundary-coarse-n2", SpaceParams::uniform(2.0, 2, 2.0, 4.0), Divergence::CoarseTail, &f2),
        ("boundary-fine-n1", SpaceParams::uniform(2.0, 1, 3.0, 3.0), Divergence::FineTail, &f1),
        ("boundary-fine-n2", SpaceParams::new(ExponentVector(vec![2.0, 4.0]), 4.0, 4.0)?, Divergence::FineTail, &f2),
    ];
    for (id, s, want, f) in cases {
        let b = bm_norm(f, &s)?;
        let ok = b.total == f64::INFINITY && b.divergence == Some(want);
        out.push(record(id, "nontriviality", nt, json!({"params": pj(&s), "expected": want, "reported": b.divergence}), vec![b.total], f64::INFINITY, ok));
    }

    let v = slice_norm(&f1, &sp1, 1)?;
    let want = (1.0f64 / 6.0).exp2();
    out.push(record("slice-closed-form", "slice norm", "‖f‖_{slice j} = (Σ_{Q∈D_j} (|Q|^{δ}‖fχ_Q‖_{p⃗′})^{r′})^{1/r′}",
        json!({"params": pj(&sp1), "j": 1, "oracle": want}), vec![v, rel(v, want)], 1e-12, rel(v, want) <= 1e-12));

    let f = indicator(&DyadicCube::standard(0, vec![0]), 4)?;
    let rep = approximation_check(&f, &sp1, &[-1, 2])?;
    let want = 0.5 * (1.0f64 / 3.0).exp2() * 3f64.powf(1.0 / 6.0);
    let ok = rel(rep.values[0], want) <= 1e-12 && rep.values[1] == 0.0;
    out.push(record("approximation", "martingale approximation", "‖f − E_k f‖_{M^{t,r}_{p⃗}} → 0 as k → ∞",
        json!({"params": pj(&sp1), "k": [-1, 2], "oracle": want}), rep.values, 1e-12, ok));
    Ok(out)
}

fn embeddings(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let fs = mixed_corpus(cfg, 1, cfg.count(200))?;
    let rs = [3.5, 4.0, 6.0, 12.0, f64::INFINITY];
    let p_chain = |n: usize| -> Vec<ExponentVector> {
        if n == 1 {
            [1.25, 1.5, 2.0, 2.5].iter().map(|&p| ExponentVector(vec![p])).collect()
        } else {
            vec![ExponentVector(vec![1.5, 2.0]), ExponentVector(vec![2.0, 2.0]), ExponentVector(vec![2.0, 2.5]), ExponentVector(vec![2.5, 2.5])]
        }
    };
    let rows: Vec<(usize, usize, f64, f64)> = fs
        .par_iter()
        .map(|f| -> Result<(usize, usize, f64, f64)> {
            let n = f.dim;
            let r_vals: Vec<f64> = rs.iter().map(|&r| Ok(bm_norm(f, &SpaceParams::uniform(2.0, n, 3.0, r))?.total)).collect::<Result<_>>()?;
            let r_bad = r_vals.windows(2).filter(|w| w[1] > w[0]).count();
            let r_gap = r_vals.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
            let p_vals: Vec<f64> = p_chain(n).into_iter().map(|p| Ok(bm_norm(f, &SpaceParams::new(p, 3.0, 6.0)?)?.total)).collect::<Result<_>>()?;
            let p_bad = p_vals.windows(2).filter(|w| w[0] > w[1]).count();
            let p_gap = p_vals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            Ok((r_bad, p_bad, r_gap, p_gap))
        })
        .collect::<Result<_>>()?;
    let r_bad: usize = rows.iter().map(|r| r.0).sum();
    let p_bad: usize = rows.iter().map(|r| r.1).sum();
    let r_gap = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
    let p_gap = rows.iter().map(|r| r.3).fold(f64::INFINITY, f64::min);
    Ok(vec![
        record("embed-r", "ℓ^r embedding", "‖f‖_{M^{t,r₂}_{p⃗}} ≤ ‖f‖_{M^{t,r₁}_{p⃗}} for r₁ ≤ r₂",
            json!({"t": 3.0, "r": ["3.5", "4", "6", "12", "inf"], "p": 2.0, "members": fs.len()}), vec![r_bad as f64, r_gap], 0.0, r_bad == 0),
        record("embed-p", "exponent embedding", "‖f‖_{M^{t,r}_{p⃗}} ≤ ‖f‖_{M^{t,r}_{s⃗}} for p⃗ ≤ s⃗, n/t ≤ Σ1/s_i",
            json!({"t": 3.0, "r": 6.0, "members": fs.len()}), vec![p_bad as f64, p_gap], 0.0, p_bad == 0),
    ])
}

fn dilation_translation(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let fs = mixed_corpus(cfg, 2, cfg.count(200))?;
    let rows: Vec<(f64, f64)> = fs
        .par_iter()
        .enumerate()
        .map(|(i, f)| -> Result<(f64, f64)> {
            let s = sp(f.dim);
            let mut d = 0.0f64;
            for m in -2..=2 {
                d = d.max(check_dilation(f, &s, m)?.rel_error);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.salted(3));
            rng.set_stream(i as u64);
            let k: Vec<i64> = (0..f.dim).map(|_| rng.gen_range(-3..=3)).collect();
            let t = check_translation(f, &s, &k)?.rel_error;
            Ok((d, t))
        })
        .collect::<Result<_>>()?;
    let d = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let t = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(vec![
        record("dilation", "dilation", "‖f(2^m ·)‖_{M^{t,r}_{p⃗}} = 2^{−mn/t}‖f‖_{M^{t,r}_{p⃗}}",
            json!({"m": [-2, -1, 0, 1, 2], "members": fs.len(), "t": 3.0, "r": 6.0}), vec![d], 1e-12, d <= 1e-12),
        record("translation", "translation", "‖f(· − k)‖_{M^{t,r}_{p⃗}} = ‖f‖_{M^{t,r}_{p⃗}}, k ∈ Z^n",
            json!({"members": fs.len(), "t": 3.0, "r": 6.0}), vec![t], 1e-12, t <= 1e-12),
    ])
}

fn holder_young(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let count = cfg.count(500);
    let fs = mixed_corpus(cfg, 4, count)?;
    let gs = mixed_corpus(cfg, 5, count)?;
    let choices = [1.5, 2.0, 3.0, 4.0, 6.0];
    let holder: Vec<f64> = fs
        .par_iter()
        .zip(&gs)
        .enumerate()
        .map(|(i, (f, g))| -> Result<f64> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.salted(6));
            rng.set_stream(i as u64);
            let p = ExponentVector((0..f.dim).map(|_| choices[rng.gen_range(0..choices.len())]).collect());
            let q = ExponentVector((0..f.dim).map(|_| choices[rng.gen_range(0..choices.len())]).collect());
            Ok(holder_check(f, g, &p, &q)?.ratio)
        })
        .collect::<Result<_>>()?;
    let h = holder.iter().copied().fold(0.0, f64::max);
    let triples = [(1.5, 1.5, 3.0), (2.0, 1.0, 2.0), (1.25, 2.0, 10.0 / 3.0), (1.0, 1.0, 1.0)];
    let ny = (count / 10).max(1);
    let young: Vec<(f64, bool)> = (0..ny)
        .into_par_iter()
        .map(|i| -> Result<(f64, bool)> {
            let f = &fs[2 * i % fs.len()];
            let g = fs.iter().chain(&gs).filter(|g| g.dim == f.dim).nth(i + 1).unwrap_or(f);
            let (a, b, c) = triples[i % triples.len()];
            let e = |x: f64| ExponentVector::uniform(x, f.dim);
            let r = young_check(f, g, &e(a), &e(b), &e(c), 2)?;
            Ok((r.ratio, r.pass))
        })
        .collect::<Result<_>>()?;
    let y = young.iter().map(|r| r.0).fold(0.0, f64::max);
    Ok(vec![
        record("holder", "Hölder", "‖fg‖_{r⃗} ≤ ‖f‖_{p⃗}‖g‖_{q⃗}, 1/r⃗ = 1/p⃗ + 1/q⃗",
            json!({"pairs": holder.len(), "exponents": choices}), vec![h], 1.0 + 1e-12, h <= 1.0 + 1e-12),
        record("young", "Young", "‖E_{J+κ}(f*g)‖_{s⃗} ≤ ‖f‖_{p⃗}‖g‖_{q⃗}, 1/p⃗ + 1/q⃗ = 1 + 1/s⃗",
            json!({"pairs": young.len(), "kappa": 2}), vec![y], 1.0 + 1e-12, young.iter().all(|r| r.1)),
    ])
}

fn duality_sandwich(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let s = sp(1);
    let np = cfg.count(500);
    let fs = members(Family::RandomCells, cfg.salted(7), np, 1, cfg.resolution, 4)?;
    let gs = members(Family::BlockSums, cfg.salted(8), np, 1, cfg.resolution, 4)?;
    let pair: Vec<f64> = fs
        .par_iter()
        .zip(&gs)
        .map(|(f, g)| -> Result<f64> {
            let lhs = pairing(f, g)?.norm();
            let rhs = bm_norm(f, &s)?.total * block_norm_upper(g, &s)?.value;
            Ok(if rhs == 0.0 { 0.0 } else { lhs / rhs })
        })
        .collect::<Result<_>>()?;
    let worst_pair = pair.iter().copied().fold(0.0, f64::max);

    let ns = cfg.count(100);
    let mut sw = members(Family::BlockSums, cfg.salted(9), ns / 2, 1, cfg.resolution, 4)?;
    sw.extend(members(Family::RandomCells, cfg.salted(10), ns - ns / 2, 1, cfg.resolution, 4)?);
    let rows: Vec<(f64, f64, f64)> = sw
        .par_iter()
        .enumerate()
        .map(|(i, g)| -> Result<(f64, f64, f64)> {
            let up = block_norm_upper(g, &s)?.value;
            let inf = block_norm_infimum(g, &s, &SolverConfig::default())?.value;
            let lo = block_norm_lower(g, &s, &SearchConfig { seed: cfg.salted(11) ^ i as u64, ..SearchConfig::default() })?.value;
            Ok((lo, inf, up))
        })
        .collect::<Result<_>>()?;
    let tol = 1e-12;
    let violations = rows.iter().filter(|(l, i, u)| *l > *i * (1.0 + tol) || *i > *u * (1.0 + tol)).count();
    let widths: Vec<f64> = rows.iter().map(|(l, _, u)| if *u > 0.0 { (u - l) / u } else { 0.0 }).collect();
    let ratios: Vec<f64> = rows.iter().map(|(l, _, u)| if *l > 0.0 { u / l } else { f64::INFINITY }).collect();

    let spec = FunctionCorpus::new(Family::Blocks, cfg.salted(12), 1, 1, cfg.resolution);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.salted(13));
    let nb = cfg.count(100);
    let blocks: Vec<GridFunction> = (0..nb).map(|_| Ok(spec.block(&mut rng)?.function.refine(cfg.resolution)?)).collect::<Result<_>>()?;
    let block_up: Vec<f64> = blocks.par_iter().map(|b| Ok(block_norm_upper(b, &s)?.value)).collect::<Result<_>>()?;
    let worst_block = block_up.iter().copied().fold(0.0, f64::max);
    Ok(vec![
        record("pairing", "predual pairing", "|∫ f g| ≤ ‖f‖_{M^{t,r}_{p⃗}} ‖g‖_{H^{t′,r′}_{p⃗′}}",
            json!({"params": pj(&s), "pairs": pair.len()}), vec![worst_pair], 1.0 + tol, worst_pair <= 1.0 + tol),
        record("sandwich", "block-norm bracket", "lower ≤ inf_θ ‖f‖_θ ≤ upper",
            json!({"params": pj(&s), "members": rows.len()}),
            vec![violations as f64, median(widths), median(ratios)], 0.0, violations == 0),
        record("normalized-blocks", "block norm of a block", "‖b‖_{H^{t′,r′}_{p⃗′}} ≤ 1 for a (p⃗′,t′)-block b",
            json!({"params": pj(&s), "blocks": nb}), vec![worst_block], 1.0 + tol, worst_block <= 1.0 + tol),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum NormSpec {
    Lebesgue { p: ExponentVector },
    Morrey { params: SpaceParams },
    /// The upper bound of the block norm (best single-scale slice).
    BlockUpper { params: SpaceParams },
}

impl NormSpec {
    pub fn eval(&self, f: &GridFunction) -> Result<f64> {
        match self {
            NormSpec::Lebesgue { p } => Ok(mixed_norm(f, p)),
            NormSpec::Morrey { params } => Ok(bm_norm(f, params)?.total),
            NormSpec::BlockUpper { params } => Ok(block_norm_upper(f, params)?.value),
        }
    }
}

/// Operators accepted by [`estimate_operator_norm`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestOperator {
    Identity,
    DyadicMaximal { shift: Vec<u8> },
    ShiftedMaximalSum,
    IteratedMaximal,
    MartingaleMaximal,
    FractionalIntegral { alpha: f64 },
    Riesz { axis: usize },
    BandSign { j_lo: i32, signs: Vec<i8> },
}

impl TestOperator {
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            TestOperator::Identity => Ok(f.clone()),
            TestOperator::DyadicMaximal { shift } => OperatorSpec::DyadicMaximal { shift: shift.clone() }.apply(f),
            TestOperator::ShiftedMaximalSum => OperatorSpec::ShiftedMaximalSum.apply(f),
            TestOperator::IteratedMaximal => OperatorSpec::IteratedMaximal.apply(f),
            TestOperator::MartingaleMaximal => OperatorSpec::MartingaleMaximal.apply(f),
            TestOperator::FractionalIntegral { alpha } => OperatorSpec::FractionalIntegral { alpha: *alpha }.apply(f),
            TestOperator::Riesz { axis } => cz_model(f, &CzModel::Riesz { axis: *axis }),
            TestOperator::BandSign { j_lo, signs } => cz_model(f, &CzModel::BandSign { j_lo: *j_lo, signs: signs.clone() }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub operator: TestOperator,
    pub norm_in: NormSpec,
    pub norm_out: NormSpec,
    #[serde(with = "crate::json")]
    pub ratio: f64,
    /// Scaled to input norm 1.
    pub witness: GridFunction,
    pub evaluations: usize,
    /// Best ratio after each accepted step.
    #[serde(with = "crate::json::vec")]
    pub trace: Vec<f64>,
}

impl NormEstimate {
    /// Recomputes `‖T w‖_out / ‖w‖_in` for the stored witness.
    pub fn recompute(&self) -> Result<f64> {
        ratio(&self.operator, &self.norm_in, &self.norm_out, &self.witness)
    }
}

fn ratio(op: &TestOperator, a: &NormSpec, b: &NormSpec, f: &GridFunction) -> Result<f64> {
    let den = a.eval(f)?;
    if den == 0.0 || !den.is_finite() {
        return Ok(0.0);
    }
    Ok(b.eval(&op.apply(f)?)? / den)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub budget: usize,
    pub seed: u64,
    /// Perturb whole cells of this resolution (the grid's own when `None`).
    pub perturb_resolution: Option<i32>,
}

impl Default for AscentConfig {
    fn default() -> Self {
        AscentConfig { budget: 5000, seed: 0, perturb_resolution: None }
    }
}

/// Lower bound on `‖T‖_{in→out}`: the best ratio over the starting
/// functions, improved by greedy single-cell perturbations that are kept
/// only when the ratio grows.
pub fn estimate_operator_norm(
    op: &TestOperator,
    norm_in: &NormSpec,
    norm_out: &NormSpec,
    start: &[GridFunction],
    cfg: &AscentConfig,
) -> Result<NormEstimate> {
    if start.is_empty() {
        return Err(Error::Precondition("norm estimate needs at least one starting function".into()));
    }
    let first: Vec<f64> = start.par_iter().map(|f| ratio(op, norm_in, norm_out, f)).collect::<Result<_>>()?;
    let mut evaluations = start.len();
    let (k, &r0) = first.iter().enumerate().fold((0, &first[0]), |b, x| if x.1 > b.1 { x } else { b });
    let mut best = start[k].clone();
    let mut best_ratio = r0;
    let mut trace = vec![r0];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let coarse = cfg.perturb_resolution.unwrap_or(best.resolution).min(best.resolution);
    let block = 1usize << (best.resolution - coarse);
    while evaluations < cfg.budget {
        let mut cand = best.clone();
        let amp = cand.max_abs().max(1e-300);
        let idx = rng.gen_range(0..cand.len());
        let delta = Complex64::new(rng.gen_range(-1.0..1.0) * amp, 0.0);
        let local = cand.unflatten(idx);
        let corner: Vec<usize> = local
            .iter()
            .zip(&cand.origin)
            .zip(&cand.shape)
            .map(|((&l, &o), &s)| {
                let g = o + l as i64;
                let c = g - g.rem_euclid(block as i64) - o;
                c.clamp(0, s as i64 - 1) as usize
            })
            .collect();
        let mut cell = vec![0usize; cand.dim];
        for t in 0..block.pow(cand.dim as u32) {
            let mut rem = t;
            let mut inside = true;
            for ax in (0..cand.dim).rev() {
                cell[ax] = corner[ax] + rem % block;
                rem /= block;
                inside &= cell[ax] < cand.shape[ax];
            }
            if inside {
                let i = cand.flatten(&cell);
                cand.values[i] += delta;
            }
        }
        evaluations += 1;
        if cand.is_zero() {
            continue;
        }
        let r = ratio(op, norm_in, norm_out, &cand)?;
        if r > best_ratio {
            best_ratio = r;
            best = cand;
            trace.push(r);
        }
    }
    let scale = norm_in.eval(&best)?;
    let witness = if scale > 0.0 && scale.is_finite() { best.scale(Complex64::new(1.0 / scale, 0.0)) } else { best };
    let ratio = ratio(op, norm_in, norm_out, &witness)?;
    Ok(NormEstimate {
        operator: op.clone(),
        norm_in: norm_in.clone(),
        norm_out: norm_out.clone(),
        ratio,
        witness,
        evaluations,
        trace,
    })
}

const RESOLUTIONS: [i32; 4] = [4, 5, 6, 7];

fn maximal(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let s = sp(1);
    let ns = cfg.count(4).min(8);
    let ops = [
        ("dyadic-maximal", TestOperator::DyadicMaximal { shift: vec![0] }),
        ("iterated-maximal", TestOperator::IteratedMaximal),
        ("band-sign", TestOperator::BandSign { j_lo: -2, signs: vec![1, -1, 1, -1] }),
        ("riesz", TestOperator::Riesz { axis: 0 }),
    ];
    let norms = [("morrey", NormSpec::Morrey { params: s.clone() }), ("block", NormSpec::BlockUpper { params: s.clone() })];
    let mut jobs = Vec::new();
    for (oi, _) in ops.iter().enumerate() {
        for (ni, _) in norms.iter().enumerate() {
            for &j in &RESOLUTIONS {
                jobs.push((oi, ni, j));
            }
        }
    }
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|&(oi, ni, j)| -> Result<f64> {
            let start = members(Family::RandomCells, cfg.salted(20), ns, 1, j, 4)?;
            let est = estimate_operator_norm(
                &ops[oi].1,
                &norms[ni].1,
                &norms[ni].1,
                &start,
                &AscentConfig { budget: cfg.budget, seed: cfg.salted(21 + (oi * 2 + ni) as u64), perturb_resolution: Some(4) },
            )?;
            Ok(est.ratio)
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (oi, (oname, _)) in ops.iter().enumerate() {
        for (ni, (nname, _)) in norms.iter().enumerate() {
            let v: Vec<f64> = jobs.iter().zip(&results).filter(|(jb, _)| jb.0 == oi && jb.1 == ni).map(|(_, r)| *r).collect();
            let sp_ = spread(&v);
            let anchor = if *nname == "morrey" {
                "‖T f‖_{M^{t,r}_{p⃗}} ≤ C ‖f‖_{M^{t,r}_{p⃗}}"
            } else {
                "‖T g‖_{H^{t′,r′}_{p⃗′}} ≤ C ‖g‖_{H^{t′,r′}_{p⃗′}}"
            };
            out.push(record(&format!("bounded-{oname}-{nname}"), "boundedness (empirical)", anchor,
                json!({"params": pj(&s), "resolutions": RESOLUTIONS, "budget": cfg.budget, "starts": ns}),
                v.clone(), 2.0, v.iter().all(|r| r.is_finite() && *r > 0.0) && sp_ < 2.0));
        }
    }
    // vector-valued maximal inequality, groups of three members, u = 2
    let groups = cfg.count(4).min(8);
    let fs_ratios: Vec<f64> = RESOLUTIONS
        .par_iter()
        .map(|&j| -> Result<f64> {
            let fs = members(Family::RandomCells, cfg.salted(30), 3 * groups, 1, j, 4)?;
            let mut best = 0.0f64;
            for g in fs.chunks(3) {
                let num = bm_norm(&vector_maximal(g, 2.0)?, &s)?.total;
                let den = bm_norm_vector(g, &s, 2.0)?.total;
                best = best.max(num / den);
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    out.push(record("bounded-vector-maximal", "vector-valued maximal (empirical)",
        "‖(Σ_k (M f_k)^u)^{1/u}‖_{M^{t,r}_{p⃗}} ≤ C ‖(Σ_k |f_k|^u)^{1/u}‖_{M^{t,r}_{p⃗}}",
        json!({"params": pj(&s), "u": 2.0, "groups": groups, "resolutions": RESOLUTIONS}),
        fs_ratios.clone(), 2.0, fs_ratios.iter().all(|r| r.is_finite() && *r >= 1.0 - 1e-12) && spread(&fs_ratios) < 2.0));
    // M f ≥ |f|, so on nonnegative inputs the ratio is at least one
    let pos: Vec<GridFunction> = members(Family::RandomCells, cfg.salted(31), cfg.count(8).min(16), 1, cfg.resolution, 4)?.iter().map(|f| f.abs()).collect();
    let dm = TestOperator::DyadicMaximal { shift: vec![0] };
    let low: Vec<f64> = pos.par_iter().map(|f| ratio(&dm, &norms[0].1, &norms[0].1, f)).collect::<Result<_>>()?;
    let worst = low.iter().copied().fold(f64::INFINITY, f64::min);
    out.push(record("maximal-dominates", "pointwise domination", "M f ≥ |f| ⇒ ‖M f‖ / ‖f‖ ≥ 1",
        json!({"params": pj(&s), "members": pos.len()}), vec![worst], 1.0, worst >= 1.0));
    Ok(out)
}

fn fractional(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let alpha = 0.5;
    let f = indicator(&DyadicCube::standard(0, vec![0]), 4)?;
    let res = fractional_integral(&f, alpha)?;
    let oracle = |x: f64| -> f64 {
        let g = |u: f64| u.signum() * u.abs().powf(alpha) / alpha;
        g(x) - g(x - 1.0)
    };
    let h = res.value.cell_side();
    let mut err = 0.0f64;
    let step = (res.value.len() / 16).max(1);
    for t in 0..16 {
        let idx = (t * step).min(res.value.len() - 1);
        let x = (res.value.origin[0] + idx as i64) as f64 * h + 0.5 * h;
        err = err.max((res.value.values[idx].re - oracle(x)).abs());
    }
    out.push(record("closed-form", "fractional integral of χ_{[0,1)}", "I_α χ_{[0,1)}(x) = (sgn(x)|x|^α − sgn(x−1)|x−1|^α)/α",
        json!({"alpha": alpha, "points": 16}), vec![err], 1e-3, err <= 1e-3));

    let a = 0.25;
    let s = SpaceParams::uniform(2.0, 1, 2.5, f64::INFINITY);
    let e = s.t * a;
    let groups = cfg.count(8).min(16);
    let consts: Vec<f64> = RESOLUTIONS
        .par_iter()
        .map(|&j| -> Result<f64> {
            let fs = members(Family::RandomCells, cfg.salted(40), groups, 1, j, 4)?;
            let mut c = 0.0f64;
            for f in &fs {
                let g = f.abs();
                let norm = bm_norm(&g, &s)?.total;
                let i = fractional_integral(&g, a)?.value;
                let m = hl_maximal_proxy(&g)?;
                for (k, v) in i.values.iter().enumerate() {
                    let cell: Vec<i64> = i.unflatten(k).iter().zip(&i.origin).map(|(&l, &o)| o + l as i64).collect();
                    let mx = m.at(&cell).re;
                    if mx > 0.0 {
                        c = c.max(v.re / (norm.powf(e) * mx.powf(1.0 - e)));
                    }
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    out.push(record("pointwise-estimate", "fractional pointwise estimate",
        "I_α|f|(x) ≤ C ‖f‖_{M^{t,∞}_{p⃗}}^{tα/n} (M f(x))^{1−tα/n}",
        json!({"alpha": a, "params": pj(&s), "members": groups, "resolutions": RESOLUTIONS}),
        consts.clone(), 2.0, consts.iter().all(|c| c.is_finite() && *c > 0.0) && spread(&consts) < 2.0));
    Ok(out)
}

fn cosines(cfg: &SuiteConfig, salt: u64, count: usize, j: i32) -> Result<Vec<GridFunction>> {
    members(Family::Cosines, cfg.salted(salt), count, 1, j, 4)
}

fn littlewood_paley(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let part = Partition::new(-2, 1)?;
    let s = sp(1);
    let fs = cosines(cfg, 50, cfg.count(12), 4)?;
    let sf = SpectralField::forward(&fs[0], 2)?;
    let (a, b) = part.covered();
    let mut xi = [0.0];
    let mut pu = 0.0f64;
    for idx in 0..sf.data.len() {
        sf.frequency(idx, &mut xi);
        let rho = xi[0].abs();
        if rho >= a && rho <= b {
            pu = pu.max((part.window_sum(rho) - 1.0).abs());
        }
    }
    out.push(record("partition-of-unity", "partition of unity", "Σ_{j=j_lo}^{j_hi} φ_j(ξ) = 1 on 2^{j_lo+1} ≤ |ξ| ≤ 2^{j_hi+1}",
        json!({"window": part}), vec![pu], 1e-12, pu <= 1e-12));

    let rows: Vec<(f64, f64, bool)> = fs
        .par_iter()
        .map(|f| -> Result<(f64, f64, bool)> {
            let sf = SpectralField::forward(f, 2)?;
            let bands = bands_of(&sf, &part)?;
            let mut sum = GridFunction::zeros(f.dim, f.resolution, f.origin.clone(), f.shape.clone());
            for b in &bands {
                sum = sum.add(b)?;
            }
            let resid = sum.max_diff(f)?;
            let ratio = bm_norm(&lp_square_function(f, &part)?, &s)?.total / bm_norm(f, &s)?.total;
            Ok((resid, ratio, sf.leakage_ok()))
        })
        .collect::<Result<_>>()?;
    let resid = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    out.push(record("reconstruction", "Littlewood-Paley reconstruction", "Σ_j F^{-1}(φ_j F f) = f for band-limited f",
        json!({"window": part, "members": rows.len()}), vec![resid], 1e-9, resid <= 1e-9 && rows.iter().all(|r| r.2)));
    let ratios: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let band = (ratios.iter().copied().fold(f64::INFINITY, f64::min), ratios.iter().copied().fold(0.0, f64::max));
    // the same band on an independent seed
    let other: Vec<f64> = cosines(cfg, 52, cfg.count(12), 4)?
        .par_iter()
        .map(|f| Ok(bm_norm(&lp_square_function(f, &part)?, &s)?.total / bm_norm(f, &s)?.total))
        .collect::<Result<_>>()?;
    let band2 = (other.iter().copied().fold(f64::INFINITY, f64::min), other.iter().copied().fold(0.0, f64::max));
    let stable = spread(&[band.0, band2.0]) < 2.0 && spread(&[band.1, band2.1]) < 2.0;
    out.push(record("square-function-band", "square-function equivalence",
        "‖(Σ_j |F^{-1}(φ_j F f)|²)^{1/2}‖_{M^{t,r}_{p⃗}} ≈ ‖f‖_{M^{t,r}_{p⃗}}",
        json!({"params": pj(&s), "window": part, "members": rows.len(), "seeds": 2}), vec![band.0, band.1, band2.0, band2.1], 2.0,
        band.0 > 0.0 && band.1.is_finite() && stable));

    // T_ε over random sign patterns
    let f = &fs[0];
    let base = bm_norm(f, &s)?.total;
    let e2 = |g: &GridFunction| g.values.iter().map(|z| z.norm_sqr()).sum::<f64>();
    let patterns = cfg.count(64).min(64);
    let te: Vec<(f64, f64, f64)> = (0..patterns)
        .into_par_iter()
        .map(|i| -> Result<(f64, f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.salted(51));
            rng.set_stream(i as u64);
            let signs: Vec<i8> = (0..4).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
            let model = CzModel::BandSign { j_lo: part.j_lo, signs };
            let g = cz_model(f, &model)?;
            let sup = model.multiplier_sup(&SpectralField::forward(f, 2)?);
            Ok((bm_norm(&g, &s)?.total / base, e2(&g) / e2(f), sup))
        })
        .collect::<Result<_>>()?;
    let m_ratios: Vec<f64> = te.iter().map(|r| r.0).collect();
    let l2 = te.iter().map(|r| r.1).fold(0.0, f64::max);
    let sup = te.iter().map(|r| r.2).fold(0.0, f64::max);
    out.push(record("multiplier-l2", "L² contraction", "|Σ ε_j φ_j| ≤ 1 ⇒ ‖T_ε f‖_{L²} ≤ ‖f‖_{L²}",
        json!({"patterns": patterns}), vec![l2.sqrt(), sup], 1.0 + 1e-10, sup <= 1.0 + 1e-12 && l2.sqrt() <= 1.0 + 1e-10));
    out.push(record("multiplier-uniform", "multiplier bound (empirical)", "sup_ε ‖T_ε f‖_{M^{t,r}_{p⃗}} / ‖f‖_{M^{t,r}_{p⃗}} < ∞",
        json!({"params": pj(&s), "patterns": patterns}),
        vec![m_ratios.iter().copied().fold(f64::INFINITY, f64::min), m_ratios.iter().copied().fold(0.0, f64::max)],
        f64::INFINITY, m_ratios.iter().all(|r| r.is_finite())));

    // Peetre maximal against (M|b|^{n/a})^{a/n}
    let a = 2.0;
    let pc: Vec<f64> = fs
        .iter()
        .take(4)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|f| -> Result<f64> {
            let pm = peetre_maximal(f, 0, a)?;
            let b = crate::spectral::band_project(f, 0)?;
            let pw = b.map(|z| Complex64::new(z.norm().powf(1.0 / a), 0.0));
            let m = hl_maximal_proxy(&pw)?;
            let mut c = 0.0f64;
            for (k, v) in pm.values.iter().enumerate() {
                let cell: Vec<i64> = pm.unflatten(k).iter().zip(&pm.origin).map(|(&l, &o)| o + l as i64).collect();
                let rhs = m.at(&cell).re.powf(a);
                if rhs > 1e-12 * b.max_abs() {
                    c = c.max(v.re / rhs);
                }
            }
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let c = pc.iter().copied().fold(0.0, f64::max);
    out.push(record("peetre", "Peetre maximal bound", "(F^{-1}φ_j F f)*_a(x) ≤ C M_{n/a}(F^{-1}φ_j F f)(x)",
        json!({"a": a, "j": 0, "members": pc.len()}), pc.clone(), f64::INFINITY, c.is_finite() && c > 0.0));
    Ok(out)
}

fn heat_suite(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let mut err = 0.0f64;
    let mut mass = 0.0f64;
    for (n, j) in [(1usize, 4), (2, 3)] {
        let half = 8i64 << j;
        let f = GridFunction::sample(n, j, vec![-half; n], vec![2 * half as usize; n], |x| {
            Complex64::new((-PI * x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0)
        });
        for alpha in [0.01, 0.1, 0.5] {
            let g = heat(&f, alpha)?;
            let w = 1.0 + 4.0 * PI * alpha;
            let exact = GridFunction::sample(n, j, f.origin.clone(), f.shape.clone(), |x| {
                Complex64::new(w.powf(-(n as f64) / 2.0) * (-PI * x.iter().map(|v| v * v).sum::<f64>() / w).exp(), 0.0)
            });
            err = err.max(g.max_diff(&exact)?);
            mass = mass.max(rel(g.integral().re, f.integral().re));
        }
    }
    out.push(record("gaussian-closed-form", "heat kernel", "e^{αΔ} e^{−π|x|²} = (1+4πα)^{−n/2} e^{−π|x|²/(1+4πα)}",
        json!({"alpha": [0.01, 0.1, 0.5], "dims": [1, 2]}), vec![err], 1e-6, err <= 1e-6));
    out.push(record("mass", "heat kernel", "∫ e^{αΔ} f = ∫ f", json!({}), vec![mass], 1e-10, mass <= 1e-10));

    let s = sp(1);
    let alphas = [0.5, 0.125, 0.03125];
    let fs = cosines(cfg, 60, cfg.count(12), 4)?;
    let reps: Vec<(bool, Vec<f64>)> = fs
        .par_iter()
        .map(|f| -> Result<(bool, Vec<f64>)> {
            let r = heat_characterization_check(f, &s, &alphas, 1.0)?;
            Ok((r.pass, r.residuals.iter().map(|x| x / r.norm).collect()))
        })
        .collect::<Result<_>>()?;
    let first = reps.iter().map(|r| r.1[0]).fold(0.0, f64::max);
    let last = reps.iter().map(|r| r.1[2]).fold(0.0, f64::max);
    out.push(record("residual-decay", "heat characterization",
        "‖e^{αΔ}f − e^{α^{−1}Δ}f − f‖_{M^{t,r}_{p⃗}} decreases as α → 0",
        json!({"params": pj(&s), "alpha": alphas, "members": reps.len()}), vec![first, last], 1.0, reps.iter().all(|r| r.0)));
    Ok(out)
}

fn wavelet_suite(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let mut out = Vec::new();
    let haar = haar_gram_exact(&ScaleWindow { j_lo: -2, j_hi: 3 }, 4);
    out.push(record("haar-gram", "orthonormality", "⟨ψ_{j,k}, ψ_{j′,k′}⟩ = δ_{jj′}δ_{kk′}",
        json!({"family": "haar", "window": [-2, 3], "shifts": 4}), vec![haar], 0.0, haar == 0.0));
    let mut gram = Vec::new();
    let mut moments = Vec::new();
    for n in 2..=6u8 {
        let sys = WaveletSystem::new(Wavelet::Daubechies(n), 1)?;
        gram.push(sys.gram_deviation(5, 8));
        moments.push(sys.moment_residual());
    }
    out.push(record("db4-gram", "orthonormality", "⟨ψ_{j,k}, ψ_{j′,k′}⟩ = δ_{jj′}δ_{kk′}",
        json!({"family": "db4", "levels": 5, "shifts": 8}), vec![gram[2]], 1e-10, gram[2] <= 1e-10));
    out.push(record("daubechies-gram", "orthonormality", "⟨ψ_{j,k}, ψ_{j′,k′}⟩ = δ_{jj′}δ_{kk′}",
        json!({"family": ["db2", "db3", "db4", "db5", "db6"]}), gram.clone(), 1e-10, gram.iter().all(|g| *g <= 1e-10)));
    out.push(record("vanishing-moments", "vanishing moments", "Σ_m g_m m^d = 0, d < N",
        json!({"family": ["db2", "db3", "db4", "db5", "db6"]}), moments.clone(), 1e-12, moments.iter().all(|m| *m <= 1e-12)));

    let s = sp(1);
    let fs = members(Family::RandomCells, cfg.salted(70), cfg.count(12), 1, cfg.resolution, 4)?;
    let systems = [WaveletSystem::new(Wavelet::Haar, 1)?, WaveletSystem::new(Wavelet::Daubechies(4), 1)?];
    let mut pl = 0.0f64;
    for sys in &systems {
        for f in &fs {
            let c = wavelet_coefficients(f, sys, &ScaleWindow::for_grid(f))?;
            let (a, b) = plancherel_pair(&c);
            pl = pl.max(rel(a, b));
        }
    }
    out.push(record("plancherel", "square function energy", "‖Sf‖²_{L²} = Σ |⟨f, ψ^ℓ_{j,k}⟩|²",
        json!({"family": ["haar", "db4"], "members": fs.len()}), vec![pl], 1e-10, pl <= 1e-10));
    for sys in &systems {
        let rep = wavelet_equivalence_check(&fs, sys, &s)?;
        let asserted = sys.family != Wavelet::Haar;
        out.push(record(&format!("equivalence-{}", sys.family), "wavelet square function equivalence",
            "‖Sf‖_{M^{t,r}_{p⃗}} ≈ ‖f‖_{M^{t,r}_{p⃗}}",
            json!({"family": sys.family, "params": pj(&s), "members": fs.len(), "asserted": asserted, "within_hypotheses": rep.within_hypotheses}),
            vec![rep.band.0, rep.band.1, rep.refinement_spread], 2.0, !asserted || rep.pass));
    }
    Ok(out)
}

fn chain_split() -> ChainSplit {
    ChainSplit {
        target: SpaceParams::uniform(12.0 / 11.0, 1, 1.6, 3.2),
        first: SpaceParams::uniform(1.5, 1, 2.0, 4.0),
        second: SpaceParams::uniform(4.0, 1, 8.0, 16.0),
    }
}

fn chain_rule(cfg: &SuiteConfig) -> Result<Vec<CheckRecord>> {
    let split = chain_split();
    let part = Partition::new(-4, 1)?;
    let (s, q) = (0.6, 2.0);
    let count = cfg.count(4).min(8);
    let js = [4, 5, 6];
    let rows: Vec<Vec<f64>> = js
        .par_iter()
        .map(|&j| -> Result<Vec<f64>> {
            cosines(cfg, 80, count, j)?.iter().map(|u| Ok(chain_rule_check(u, s, q, &split, &part)?.ratio)).collect()
        })
        .collect::<Result<_>>()?;
    let finite = rows.iter().flatten().all(|r| r.is_finite() && *r > 0.0);
    let worst = (0..count).map(|i| spread(&rows.iter().map(|r| r[i]).collect::<Vec<_>>())).fold(1.0, f64::max);
    let u = &cosines(cfg, 80, 1, 4)?[0];
    let a = chain_rule_check(u, s, q, &split, &part)?.ratio;
    let b = chain_rule_check(&u.scale(Complex64::new(3.7, 0.0)), s, q, &split, &part)?.ratio;
    let params = json!({"s": s, "q": q, "split": split, "window": part, "members": count});
    let anchor = "‖F(u)‖_{F^{s,q}(p⃗,t,r)} ≤ C ‖G(u)‖_{M^{t₁,r₁}_{p⃗₁}} ‖u‖_{F^{s,q}(p⃗₂,t₂,r₂)}, F(x) = x², G(x) = 2|x|";
    let mut flat: Vec<f64> = rows.iter().flatten().copied().collect();
    flat.push(worst);
    Ok(vec![
        record("ratio-finite", "fractional chain rule", anchor, params.clone(), flat, 2.0, finite && worst <= 2.0),
        record("homogeneity", "fractional chain rule", anchor, json!({"c": 3.7}), vec![a, b, rel(a, b)], 1e-10, rel(a, b) <= 1e-10),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite_and_vacuous() {
        assert!(matches!(run_suite("nope", &SuiteConfig::default()), Err(Error::UnknownSuite(_))));
        let r = run_suite("norms-exact", &SuiteConfig { count: Some(0), ..SuiteConfig::default() }).unwrap();
        assert!(r.vacuous && r.pass && r.checks.is_empty());
    }

    #[test]
    fn norms_exact_suite_passes() {
        let r = run_suite("norms-exact", &SuiteConfig::default()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn identity_ratio_is_one() {
        let fs = members(Family::RandomCells, 1, 2, 1, 4, 4).unwrap();
        let n = NormSpec::Morrey { params: sp(1) };
        let est = estimate_operator_norm(&TestOperator::Identity, &n, &n, &fs, &AscentConfig { budget: 10, ..AscentConfig::default() }).unwrap();
        assert!((est.ratio - 1.0).abs() < 1e-12);
        assert!((est.recompute().unwrap() - est.ratio).abs() <= 1e-10 * est.ratio);
    }

    #[test]
    fn riesz_on_l2_is_a_contraction() {
        let fs = members(Family::RandomCells, 2, 3, 1, 5, 4).unwrap();
        let n = NormSpec::Lebesgue { p: ExponentVector::uniform(2.0, 1) };
        let est = estimate_operator_norm(&TestOperator::Riesz { axis: 0 }, &n, &n, &fs, &AscentConfig { budget: 30, ..AscentConfig::default() }).unwrap();
        assert!(est.ratio <= 1.0 + 1e-10, "{}", est.ratio);
        assert!((est.recompute().unwrap() - est.ratio).abs() <= 1e-10 * est.ratio);
    }

    #[test]
    fn ascent_is_monotone_and_self_verifying() {
        let fs = members(Family::RandomCells, 3, 2, 1, 4, 4).unwrap();
        let n = NormSpec::Morrey { params: sp(1) };
        let est = estimate_operator_norm(&TestOperator::DyadicMaximal { shift: vec![0] }, &n, &n, &fs,
            &AscentConfig { budget: 25, seed: 4, perturb_resolution: Some(3) }).unwrap();
        assert!(est.trace.windows(2).all(|w| w[1] > w[0]));
        assert!((est.recompute().unwrap() - est.ratio).abs() <= 1e-10 * est.ratio);
        assert!((n.eval(&est.witness).unwrap() - 1.0).abs() < 1e-12);
    }
}
