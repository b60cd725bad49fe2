//! Monte Carlo validation with constant-composition codebooks and the
//! stochastic decoder, plus an exact ensemble oracle for tiny instances.
//!
//! Every trial draws a fresh codebook, sends message 0 and decodes by
//! sampling `m` with probability proportional to `exp{n g(P̂_{x_m y})}`.
//! Trial `t` uses its own ChaCha stream `(seed, t)`, so results do not
//! depend on how trials are split across threads.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _};

use crate::error::{Error, Result};
use crate::math::{exp, ln, ln_factorial, round, sqrt};
use crate::metrics::DecoderMetric;
use crate::par;
use crate::probkit::{Channel, Distribution};

const TRIAL_CHUNK: usize = 4096;
const MAX_CODEBOOK: f64 = 4.0e18;
/// Largest `M·n` the explicit engine will materialize per trial.
pub const MAX_EXPLICIT_SYMBOLS: usize = 100_000_000;
/// Largest number of (codebook, output) tuples the exact oracle visits.
pub const MAX_ORACLE_TUPLES: u64 = 50_000_000;

/// `M` codewords of length `n`, all of the same type.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    n: usize,
    composition: Distribution,
    symbols: Vec<usize>,
}

impl Codebook {
    /// Codebook with the given words; each must have type `composition`.
    pub fn from_words(composition: Distribution, words: Vec<Vec<usize>>) -> Result<Self> {
        let n = words.first().map_or(0, Vec::len);
        if words.is_empty() {
            return Err(Error::InvalidParameter("codebook must have at least one codeword".into()));
        }
        let counts = type_counts(&composition, n)?;
        let mut symbols = Vec::with_capacity(n * words.len());
        for (m, word) in words.iter().enumerate() {
            let mut c = vec![0; counts.len()];
            for &x in word {
                if x >= counts.len() {
                    return Err(Error::InvalidParameter(format!("codeword {m} has symbol {x} outside the alphabet")));
                }
                c[x] += 1;
            }
            if word.len() != n || c != counts {
                return Err(Error::InvalidParameter(format!("codeword {m} does not have the codebook composition")));
            }
            symbols.extend_from_slice(word);
        }
        Ok(Codebook {
            n,
            composition,
            symbols,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.symbols.len() / self.n.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn composition(&self) -> &Distribution {
        &self.composition
    }

    pub fn codeword(&self, m: usize) -> &[usize] {
        &self.symbols[m * self.n..(m + 1) * self.n]
    }
}

/// `n q(x)` as integers; fails unless every entry is integral.
pub fn type_counts(q: &Distribution, n: usize) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::InvalidParameter("block length must be positive".into()));
    }
    q.probs()
        .iter()
        .enumerate()
        .map(|(symbol, &p)| {
            let v = p * n as f64;
            let c = round(v);
            if (v - c).abs() > 1e-9 {
                Err(Error::NonIntegralType { symbol, value: v })
            } else {
                Ok(c as usize)
            }
        })
        .collect()
}

/// `M = round(e^{nR})`, at least 1. Sizes beyond `4·10^18` are rejected.
pub fn codebook_size(n: usize, rate: f64) -> Result<usize> {
    if !rate.is_finite() || rate < 0.0 {
        return Err(Error::InvalidParameter(format!("rate must be finite and non-negative, got {rate}")));
    }
    let m = round(exp(n as f64 * rate));
    if m > MAX_CODEBOOK {
        return Err(Error::InstanceTooLarge(format!("codebook size e^(nR) = {m:.3e}")));
    }
    Ok((m as usize).max(1))
}

fn base_word(counts: &[usize]) -> Vec<usize> {
    counts
        .iter()
        .enumerate()
        .flat_map(|(x, &c)| core::iter::repeat_n(x, c))
        .collect()
}

fn draw_codebook<R: Rng + ?Sized>(base: &[usize], m: usize, rng: &mut R) -> Vec<usize> {
    let mut symbols = Vec::with_capacity(base.len() * m);
    let mut word = base.to_vec();
    for _ in 0..m {
        word.shuffle(rng);
        symbols.extend_from_slice(&word);
    }
    symbols
}

/// `M` independent uniform draws from the type class of `q` at length `n`.
pub fn sample_codebook(q: &Distribution, n: usize, m: usize, seed: u64) -> Result<Codebook> {
    if m == 0 {
        return Err(Error::InvalidParameter("codebook must have at least one codeword".into()));
    }
    let counts = type_counts(q, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(Codebook {
        n,
        composition: q.clone(),
        symbols: draw_codebook(&base_word(&counts), m, &mut rng),
    })
}

/// `n g(P̂_{xy})` for the joint type with the given counts.
fn type_score(counts: &[usize], n: usize, nx: usize, ny: usize, metric: &DecoderMetric) -> f64 {
    let t: Vec<f64> = counts.iter().map(|&c| c as f64 / n as f64).collect();
    n as f64 * metric.eval_table(&t, nx, ny)
}

fn joint_counts(x: &[usize], y: &[usize], ny: usize, out: &mut [usize]) {
    out.iter_mut().for_each(|c| *c = 0);
    for (&a, &b) in x.iter().zip(y) {
        out[a * ny + b] += 1;
    }
}

/// Sampling distribution of the decoder for one received word.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    pub probs: Vec<f64>,
    /// Every score was `−∞`; the distribution is uniform.
    pub fallback: bool,
}

/// Normalized `exp(score)` with max subtraction.
fn normalize(scores: &[f64]) -> Posterior {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let m = scores.len();
        return Posterior {
            probs: vec![1.0 / m as f64; m],
            fallback: true,
        };
    }
    let mut probs: Vec<f64> = scores.iter().map(|&s| exp(s - max)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    Posterior {
        probs,
        fallback: false,
    }
}

fn check_word(cb: &Codebook, y: &[usize], nx: usize, ny: usize) -> Result<()> {
    if y.len() != cb.n {
        return Err(Error::DimensionMismatch {
            expected: cb.n,
            found: y.len(),
            context: "output sequence length vs block length",
        });
    }
    if cb.composition.len() != nx {
        return Err(Error::DimensionMismatch {
            expected: nx,
            found: cb.composition.len(),
            context: "codebook alphabet vs metric inputs",
        });
    }
    if let Some(&b) = y.iter().find(|&&b| b >= ny) {
        return Err(Error::InvalidParameter(format!("output symbol {b} outside alphabet of size {ny}")));
    }
    Ok(())
}

/// Decoder probabilities for every message given `y` over an output
/// alphabet of size `ny`.
pub fn gld_posterior(cb: &Codebook, y: &[usize], ny: usize, metric: &DecoderMetric) -> Result<Posterior> {
    let nx = cb.composition.len();
    metric.check_dims(nx, ny)?;
    check_word(cb, y, nx, ny)?;
    let mut counts = vec![0; nx * ny];
    let scores: Vec<f64> = (0..cb.len())
        .map(|m| {
            joint_counts(cb.codeword(m), y, ny, &mut counts);
            type_score(&counts, cb.n, nx, ny, metric)
        })
        .collect();
    Ok(normalize(&scores))
}

/// Decoded message index and whether the uniform fallback was used.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub index: usize,
    pub fallback: bool,
}

fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Samples a message from [`gld_posterior`].
pub fn gld_decode<R: Rng + ?Sized>(
    cb: &Codebook,
    y: &[usize],
    ny: usize,
    metric: &DecoderMetric,
    rng: &mut R,
) -> Result<Decision> {
    let post = gld_posterior(cb, y, ny, metric)?;
    Ok(Decision {
        index: sample_index(&post.probs, rng),
        fallback: post.fallback,
    })
}

/// How a trial is simulated. Both give the same error distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    /// Works on joint types: the received type is drawn row by row, and the
    /// competitors are counted per joint type with `y`.
    #[default]
    TypeDomain,
    /// Draws every codeword and output symbol.
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub rate: f64,
    pub channel: Channel,
    pub composition: Distribution,
    pub metric: DecoderMetric,
    pub trials: u64,
    pub seed: u64,
    pub engine: Engine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub n: usize,
    pub rate: f64,
    pub codebook_size: usize,
    /// `ln(M)/n`, the rate actually simulated.
    pub effective_rate: f64,
    pub trials: u64,
    pub errors: u64,
    pub error_estimate: f64,
    pub stderr: f64,
    /// `−(1/n) ln p̂`; `+∞` when no error was seen.
    pub empirical_exponent: f64,
    /// Trials in which every score was `−∞`.
    pub fallbacks: u64,
}

/// Joint types of a random word of composition `rows` with a fixed output
/// type `cols`, as `(ln probability, counts)`.
fn conditional_types(rows: &[usize], cols: &[usize]) -> Vec<(f64, Vec<usize>)> {
    let (nx, ny) = (rows.len(), cols.len());
    let n: usize = rows.iter().sum();
    let base = rows.iter().map(|&r| ln_factorial(r)).sum::<f64>() - ln_factorial(n)
        + cols.iter().map(|&c| ln_factorial(c)).sum::<f64>();
    let mut out = Vec::new();
    let mut table = vec![0usize; nx * ny];
    let mut col_left = cols.to_vec();
    fn rec(
        cell: usize,
        row_left: usize,
        rows: &[usize],
        col_left: &mut [usize],
        table: &mut [usize],
        base: f64,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let ny = col_left.len();
        let nx = rows.len();
        if cell == nx * ny {
            let lp = base - table.iter().map(|&c| ln_factorial(c)).sum::<f64>();
            out.push((lp, table.to_vec()));
            return;
        }
        let (x, y) = (cell / ny, cell % ny);
        let row_left = if y == 0 { rows[x] } else { row_left };
        let (lo, hi) = if y + 1 == ny {
            (row_left, row_left)
        } else {
            // Remaining columns of this row must absorb the rest.
            let rest: usize = col_left[y + 1..].iter().sum();
            (row_left.saturating_sub(rest), row_left.min(col_left[y]))
        };
        if lo > hi || hi > col_left[y] {
            return;
        }
        for v in lo..=hi {
            table[cell] = v;
            col_left[y] -= v;
            rec(cell + 1, row_left - v, rows, col_left, table, base, out);
            col_left[y] += v;
        }
        table[cell] = 0;
    }
    rec(0, 0, rows, &mut col_left, &mut table, base, &mut out);
    out
}

struct TrialSetup<'a> {
    cfg: &'a SimConfig,
    counts: Vec<usize>,
    base: Vec<usize>,
    m: usize,
    nx: usize,
    ny: usize,
}

/// Per-output-type competitor classes: `(probability, score)`.
type ClassCache = BTreeMap<Vec<usize>, Vec<(f64, f64)>>;

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

/// Error indicator and fallback flag of one trial.
fn trial_type_domain(setup: &TrialSetup, rng: &mut ChaCha8Rng, cache: &mut ClassCache) -> (bool, bool) {
    let (nx, ny, n) = (setup.nx, setup.ny, setup.cfg.n);
    let w = &setup.cfg.channel;
    let metric = &setup.cfg.metric;
    // Joint type of the sent codeword with the output.
    let mut t0 = vec![0usize; nx * ny];
    for x in 0..nx {
        let mut left = setup.counts[x] as u64;
        let mut mass = 1.0;
        for y in 0..ny {
            let p = w.prob(x, y);
            let c = if y + 1 == ny { left } else { binomial(left, p / mass, rng) };
            t0[x * ny + y] = c as usize;
            left -= c;
            mass -= p;
        }
    }
    let s0 = type_score(&t0, n, nx, ny, metric);
    let cols: Vec<usize> = (0..ny).map(|y| (0..nx).map(|x| t0[x * ny + y]).sum()).collect();
    let classes = cache.entry(cols.clone()).or_insert_with(|| {
        conditional_types(&setup.counts, &cols)
            .into_iter()
            .map(|(lp, t)| (exp(lp), type_score(&t, n, nx, ny, metric)))
            .collect()
    });
    // Competitor counts per class: multinomial(M − 1, p) by sequential binomials.
    let mut left = (setup.m - 1) as u64;
    let mut mass = 1.0f64;
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(classes.len());
    for (i, &(p, s)) in classes.iter().enumerate() {
        if left == 0 {
            break;
        }
        let c = if i + 1 == classes.len() { left } else { binomial(left, (p / mass).min(1.0), rng) };
        if c > 0 {
            terms.push((c as f64, s));
        }
        left -= c;
        mass -= p;
    }
    let max = terms.iter().map(|t| t.1).fold(s0, f64::max);
    let u: f64 = rng.random();
    if max == f64::NEG_INFINITY {
        let m = setup.m as f64;
        return (u < (m - 1.0) / m, true);
    }
    let others: f64 = terms.iter().map(|&(c, s)| c * exp(s - max)).sum();
    let own = exp(s0 - max);
    (u < others / (own + others), false)
}

fn trial_explicit(setup: &TrialSetup, rng: &mut ChaCha8Rng) -> (bool, bool) {
    let cfg = setup.cfg;
    let symbols = draw_codebook(&setup.base, setup.m, rng);
    let cb = Codebook {
        n: cfg.n,
        composition: cfg.composition.clone(),
        symbols,
    };
    let y: Vec<usize> = cb
        .codeword(0)
        .iter()
        .map(|&x| sample_index(cfg.channel.row(x), rng))
        .collect();
    let d = gld_decode(&cb, &y, setup.ny, &cfg.metric, rng).expect("validated configuration");
    (d.index != 0, d.fallback)
}

/// Average error probability over `cfg.trials` independent trials.
pub fn run_monte_carlo(cfg: &SimConfig) -> Result<SimResult> {
    if cfg.trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let (nx, ny) = (cfg.channel.inputs(), cfg.channel.outputs());
    if cfg.composition.len() != nx {
        return Err(Error::DimensionMismatch {
            expected: nx,
            found: cfg.composition.len(),
            context: "composition vs channel inputs",
        });
    }
    cfg.metric.check_dims(nx, ny)?;
    let counts = type_counts(&cfg.composition, cfg.n)?;
    let m = codebook_size(cfg.n, cfg.rate)?;
    if cfg.engine == Engine::Explicit && m.saturating_mul(cfg.n) > MAX_EXPLICIT_SYMBOLS {
        return Err(Error::InstanceTooLarge(format!("explicit codebook of {m} words of length {}", cfg.n)));
    }
    let setup = TrialSetup {
        cfg,
        base: base_word(&counts),
        counts,
        m,
        nx,
        ny,
    };
    let trials = cfg.trials as usize;
    let parts = par::map_chunks(trials, TRIAL_CHUNK, |range| {
        let mut cache = ClassCache::new();
        let (mut errors, mut fallbacks) = (0u64, 0u64);
        for t in range {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let (e, f) = match cfg.engine {
                Engine::TypeDomain => trial_type_domain(&setup, &mut rng, &mut cache),
                Engine::Explicit => trial_explicit(&setup, &mut rng),
            };
            errors += e as u64;
            fallbacks += f as u64;
        }
        vec![(errors, fallbacks)]
    });
    let (errors, fallbacks) = parts
        .into_iter()
        .fold((0, 0), |(a, b), (e, f)| (a + e, b + f));
    let p = errors as f64 / cfg.trials as f64;
    Ok(SimResult {
        n: cfg.n,
        rate: cfg.rate,
        codebook_size: m,
        effective_rate: ln(m as f64) / cfg.n as f64,
        trials: cfg.trials,
        errors,
        error_estimate: p,
        stderr: sqrt(p * (1.0 - p) / cfg.trials as f64),
        empirical_exponent: if errors == 0 { f64::INFINITY } else { -ln(p) / cfg.n as f64 },
        fallbacks,
    })
}

/// All sequences of the type class, in lexicographic order.
fn type_class(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut word = base_word(counts);
    let mut out = vec![word.clone()];
    // Next lexicographic permutation of a multiset.
    loop {
        let Some(i) = (1..word.len()).rev().find(|&i| word[i - 1] < word[i]) else {
            return out;
        };
        let j = (i..word.len()).rev().find(|&j| word[j] > word[i - 1]).unwrap();
        word.swap(i - 1, j);
        word[i..].reverse();
        out.push(word.clone());
    }
}

/// Exact ensemble-average error probability by summing over every codebook
/// and every output sequence. Binary alphabets, `n ≤ 6`, `M ≤ 4`.
pub fn exact_ensemble_error(
    q: &Distribution,
    n: usize,
    m: usize,
    channel: &Channel,
    metric: &DecoderMetric,
) -> Result<f64> {
    let (nx, ny) = (channel.inputs(), channel.outputs());
    if q.len() != nx {
        return Err(Error::DimensionMismatch {
            expected: nx,
            found: q.len(),
            context: "composition vs channel inputs",
        });
    }
    metric.check_dims(nx, ny)?;
    if m == 0 {
        return Err(Error::InvalidParameter("codebook must have at least one codeword".into()));
    }
    if n > 6 || m > 4 || nx > 2 || ny > 2 {
        return Err(Error::InstanceTooLarge(format!(
            "exact enumeration needs n <= 6, M <= 4 and binary alphabets (n = {n}, M = {m}, {nx}x{ny})"
        )));
    }
    let counts = type_counts(q, n)?;
    let class = type_class(&counts);
    let outputs = ny.pow(n as u32);
    let tuples = (class.len() as u64).pow(m as u32) * outputs as u64;
    if tuples > MAX_ORACLE_TUPLES {
        return Err(Error::InstanceTooLarge(format!("{tuples} codebook/output tuples")));
    }
    let ys: Vec<Vec<usize>> = (0..outputs)
        .map(|mut v| {
            let mut y = vec![0; n];
            for s in y.iter_mut().rev() {
                *s = v % ny;
                v /= ny;
            }
            y
        })
        .collect();
    let mut jc = vec![0; nx * ny];
    // score[c][y] and W^n(y | class[c]).
    let score: Vec<Vec<f64>> = class
        .iter()
        .map(|x| {
            ys.iter()
                .map(|y| {
                    joint_counts(x, y, ny, &mut jc);
                    type_score(&jc, n, nx, ny, metric)
                })
                .collect()
        })
        .collect();
    let lik: Vec<Vec<f64>> = class
        .iter()
        .map(|x| ys.iter().map(|y| x.iter().zip(y).map(|(&a, &b)| channel.prob(a, b)).product()).collect())
        .collect();
    let c = class.len();
    let mut total = 0.0;
    let mut idx = vec![0usize; m];
    let mut scores = vec![0.0; m];
    loop {
        for (yi, _) in ys.iter().enumerate() {
            let l = lik[idx[0]][yi];
            if l == 0.0 {
                continue;
            }
            for (s, &ci) in scores.iter_mut().zip(&idx) {
                *s = score[ci][yi];
            }
            total += l * (1.0 - normalize(&scores).probs[0]);
        }
        // Odometer over codebooks.
        let mut d = 0;
        loop {
            if d == m {
                return Ok(total / c.pow(m as u32) as f64);
            }
            idx[d] += 1;
            if idx[d] < c {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}
