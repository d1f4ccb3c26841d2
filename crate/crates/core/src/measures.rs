//! Markov measures on digit systems, push-forward sampling with Cesaro
//! averaging under T_a, and cylinder-entropy dimension estimates. The
//! dimension-gain experiment here is a sampled desk-scale proxy, not a
//! proof-grade computation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::smooth::SmoothMap;
use crate::symbolic::DigitSystem;

/// Samples per independently-seeded block; fixed so that results do not
/// depend on the worker count.
const BLOCK: usize = 8192;

/// Text attached to every dimension-gain report.
pub const PROXY_DISCLAIMER: &str = "directional sampled proxy: the dimension gain \
epsilon(mu) of the underlying theorem is non-explicit, so only the sign of the \
margin is meaningful, not its size; the Cesaro average is sampled with a \
uniformly random iteration index and dimension is estimated by cylinder entropy";

/// How to weight the automaton edges of a Markov measure.
#[derive(Debug, Clone)]
pub enum MarkovWeights {
    /// Equal probability on the out-edges of each state.
    Uniform,
    /// The measure of maximal entropy; edge probabilities from the right
    /// Perron eigenvector.
    Parry,
    /// Nonnegative per-edge weights, parallel to `DigitSystem::edges`,
    /// normalized per row.
    Explicit(Vec<Vec<f64>>),
}

/// A shift-invariant Markov measure supported on a transitive digit
/// system, with exact entropy and dimension.
#[derive(Debug, Clone, Serialize)]
pub struct MarkovMeasure {
    #[serde(skip)]
    pub system: DigitSystem,
    /// Per-edge probabilities, parallel to the automaton edge lists.
    pub transition: Vec<Vec<f64>>,
    /// Stationary state distribution.
    pub stationary: Vec<f64>,
    /// In nats.
    pub entropy: f64,
    /// entropy / ln(base).
    pub dimension: f64,
}

fn right_perron(adj: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = adj.len();
    let mut v = vec![1.0 / n as f64; n];
    for _ in 0..200_000 {
        // power iteration on A + I keeps convergence for periodic graphs
        let mut w: Vec<f64> = (0..n)
            .map(|i| v[i] + adj[i].iter().zip(&v).map(|(a, x)| a * x).sum::<f64>())
            .collect();
        let norm: f64 = w.iter().sum();
        for x in &mut w {
            *x /= norm;
        }
        // Collatz-Wielandt bracket for the eigenvalue of A + I
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let num = w[i] + adj[i].iter().zip(&w).map(|(a, x)| a * x).sum::<f64>();
            let r = num / w[i];
            lo = lo.min(r);
            hi = hi.max(r);
        }
        v = w;
        if hi - lo <= 1e-13 * hi {
            return Ok((0.5 * (lo + hi) - 1.0, v));
        }
    }
    Err(Error::NonConvergence {
        iterations: 200_000,
        estimate: f64::NAN,
    })
}

pub fn markov_from_system(sys: &DigitSystem, weights: MarkovWeights) -> Result<MarkovMeasure> {
    if !sys.classify().transitive {
        return Err(Error::NotTransitive);
    }
    let edges = sys.edges();
    let n = edges.len();
    let mut transition: Vec<Vec<f64>> = match weights {
        MarkovWeights::Uniform => edges
            .iter()
            .map(|row| vec![1.0 / row.len() as f64; row.len()])
            .collect(),
        MarkovWeights::Parry => {
            let mut adj = vec![vec![0.0; n]; n];
            for (i, row) in edges.iter().enumerate() {
                for &(_, j) in row {
                    adj[i][j] += 1.0;
                }
            }
            let (lambda, r) = right_perron(&adj)?;
            edges
                .iter()
                .enumerate()
                .map(|(i, row)| row.iter().map(|&(_, j)| r[j] / (lambda * r[i])).collect())
                .collect()
        }
        MarkovWeights::Explicit(w) => {
            if w.len() != n || w.iter().zip(edges).any(|(wr, er)| wr.len() != er.len()) {
                return Err(Error::InvalidArgument(
                    "explicit weights must parallel the automaton edge lists".into(),
                ));
            }
            if w.iter().flatten().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(Error::InvalidArgument(
                    "edge weights must be finite and nonnegative".into(),
                ));
            }
            w
        }
    };
    for row in &mut transition {
        let s: f64 = row.iter().sum();
        if s <= 0.0 {
            return Err(Error::InvalidArgument(
                "every state needs positive outgoing weight".into(),
            ));
        }
        for p in row {
            *p /= s;
        }
    }
    // state-level stochastic matrix (parallel edges folded together)
    let mut p = vec![vec![0.0; n]; n];
    for (i, row) in edges.iter().enumerate() {
        for (e, &(_, j)) in row.iter().enumerate() {
            p[i][j] += transition[i][e];
        }
    }
    // damped left power iteration; fixed point is the stationary vector
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..200_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * p[i][j];
            }
        }
        let mut delta = 0.0f64;
        for j in 0..n {
            next[j] = 0.5 * (next[j] + pi[j]);
            delta = delta.max((next[j] - pi[j]).abs());
        }
        pi = next;
        if delta <= 1e-15 {
            break;
        }
    }
    let entropy = -pi
        .iter()
        .zip(&transition)
        .map(|(&pi_i, row)| {
            pi_i * row
                .iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| q * q.ln())
                .sum::<f64>()
        })
        .sum::<f64>();
    let dimension = entropy / (sys.base as f64).ln();
    let mu = MarkovMeasure {
        system: sys.clone(),
        transition,
        stationary: pi,
        entropy,
        dimension,
    };
    mu.validate()?;
    Ok(mu)
}

impl MarkovMeasure {
    pub fn validate(&self) -> Result<()> {
        for row in &self.transition {
            if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(
                    "transition rows must sum to 1".into(),
                ));
            }
        }
        let edges = self.system.edges();
        let n = edges.len();
        let mut p = vec![vec![0.0; n]; n];
        for (i, row) in edges.iter().enumerate() {
            for (e, &(_, j)) in row.iter().enumerate() {
                p[i][j] += self.transition[i][e];
            }
        }
        for j in 0..n {
            let pushed: f64 = (0..n).map(|i| self.stationary[i] * p[i][j]).sum();
            if (pushed - self.stationary[j]).abs() > 1e-10 {
                return Err(Error::InvalidArgument(
                    "stationary vector is not invariant under the transition matrix".into(),
                ));
            }
        }
        Ok(())
    }

    /// Draws one point of the measure as `depth` digits, Horner-summed.
    fn sample_point(&self, depth: u32, rng: &mut impl Rng) -> f64 {
        let edges = self.system.edges();
        // initial state from the stationary distribution
        let mut u: f64 = rng.gen();
        let mut state = self.stationary.len() - 1;
        for (i, &pi) in self.stationary.iter().enumerate() {
            if u < pi {
                state = i;
                break;
            }
            u -= pi;
        }
        let mut digits = Vec::with_capacity(depth as usize);
        for _ in 0..depth {
            let row = &self.transition[state];
            let mut u: f64 = rng.gen();
            let mut pick = row.len() - 1;
            for (e, &q) in row.iter().enumerate() {
                if u < q {
                    pick = e;
                    break;
                }
                u -= q;
            }
            let (digit, next) = edges[state][pick];
            digits.push(digit);
            state = next;
        }
        let a = self.system.base as f64;
        let mut x = 0.0;
        for &d in digits.iter().rev() {
            x = (x + d as f64) / a;
        }
        x
    }
}

/// A sampled point cloud on the circle, reproducible from its seed.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalCloud {
    pub points: Vec<f64>,
    pub seed: u64,
    /// Samples whose image left [0, 1) and were clamped back.
    pub clamped: u64,
    pub provenance: String,
}

impl EmpiricalCloud {
    pub fn write_csv(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 20);
        out.push_str("point\n");
        for p in &self.points {
            out.push_str(&format!("{p:.17}\n"));
        }
        out
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(block as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Evaluates f, tolerating breakpoints (nearest piece wins) and clamping
/// the result into [0, 1). Returns (value, clamped?).
fn eval_clamped(f: &SmoothMap, x: f64) -> (f64, bool) {
    let pieces = f.pieces();
    let piece = pieces
        .iter()
        .find(|p| x >= p.domain.lo && x <= p.domain.hi)
        .unwrap_or_else(|| {
            pieces
                .iter()
                .min_by(|p, q| {
                    let dp = (x - p.domain.lo).abs().min((x - p.domain.hi).abs());
                    let dq = (x - q.domain.lo).abs().min((x - q.domain.hi).abs());
                    dp.partial_cmp(&dq).unwrap()
                })
                .unwrap()
        });
    let xc = x.clamp(piece.domain.lo, piece.domain.hi);
    let (y, _, _) = piece.kind.eval(xc);
    if y < 0.0 {
        (0.0, true)
    } else if y >= 1.0 {
        (1.0 - 1e-12, true)
    } else {
        (y, x != xc)
    }
}

/// Unbiased sample of the Cesaro average (1/N) sum_{n<N} T_a^n (f mu):
/// each draw takes a mu-distributed point, maps it through f, and applies
/// a uniformly random number of digit shifts below N.
pub fn cesaro_pushforward_samples(
    mu: &MarkovMeasure,
    f: &SmoothMap,
    iterations: u32,
    samples: usize,
    seed: u64,
) -> Result<EmpiricalCloud> {
    if iterations < 1 || samples < 1 {
        return Err(Error::InvalidArgument(
            "need iterations >= 1 and samples >= 1".into(),
        ));
    }
    let depth = iterations + 40; // spare digits keep shift error below 2^-40
    let a = mu.system.base as f64;
    let blocks = samples.div_ceil(BLOCK);
    let results: Vec<(Vec<f64>, u64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let count = BLOCK.min(samples - b * BLOCK);
            let mut pts = Vec::with_capacity(count);
            let mut clamped = 0u64;
            for _ in 0..count {
                let x = mu.sample_point(depth, &mut rng);
                let (y, cl) = eval_clamped(f, x);
                if cl {
                    clamped += 1;
                }
                let n = rng.gen_range(0..iterations);
                pts.push((y * a.powi(n as i32)).fract());
            }
            (pts, clamped)
        })
        .collect();
    let mut points = Vec::with_capacity(samples);
    let mut clamped = 0;
    for (pts, cl) in results {
        points.extend(pts);
        clamped += cl;
    }
    Ok(EmpiricalCloud {
        points,
        seed,
        clamped,
        provenance: format!(
            "markov sample depth {depth}, map {}, uniform Cesaro index < {iterations}, \
             {samples} samples in {BLOCK}-sample blocks, {clamped} clamped",
            f.name.as_deref().unwrap_or("anonymous")
        ),
    })
}

/// Direct mu-distributed samples (no map, no averaging).
pub fn direct_samples(mu: &MarkovMeasure, samples: usize, seed: u64) -> Result<EmpiricalCloud> {
    cesaro_pushforward_samples(mu, &SmoothMap::identity(), 1, samples, seed).map(|mut c| {
        c.provenance = format!("direct markov sample, {samples} samples");
        c
    })
}

/// Normalized cylinder-entropy dimension of a cloud at one scale.
#[derive(Debug, Clone, Serialize)]
pub struct EntropyEstimate {
    pub depth: u32,
    pub base: u32,
    /// Miller-Madow-corrected Shannon entropy of the depth-n histogram,
    /// in nats.
    pub entropy: f64,
    /// entropy / (n ln a).
    pub dimension: f64,
    /// 10-fold split standard error of the dimension.
    pub stderr: f64,
    /// Set when samples < 100 * a^n.
    pub low_sample_flag: bool,
}

fn histogram_entropy(counts: &[u64], total: u64) -> f64 {
    let t = total as f64;
    let mut h = 0.0;
    let mut occupied = 0u64;
    for &c in counts {
        if c > 0 {
            occupied += 1;
            let q = c as f64 / t;
            h -= q * q.ln();
        }
    }
    h + (occupied.saturating_sub(1)) as f64 / (2.0 * t)
}

pub fn entropy_at_scale(cloud: &EmpiricalCloud, depth: u32, base: u32) -> Result<EntropyEstimate> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    let bins = (base as u64).checked_pow(depth).ok_or(Error::DepthTooLarge {
        what: "cylinder histogram".into(),
        count: u128::MAX,
        cap: u64::MAX as u128,
    })? as usize;
    let s = cloud.points.len();
    if (s as u64) < bins as u64 {
        return Err(Error::Undersampled {
            samples: s,
            bins,
        });
    }
    let mut counts = vec![0u64; bins];
    let mut fold_counts = vec![vec![0u64; bins]; 10];
    let mut fold_totals = [0u64; 10];
    for (i, &p) in cloud.points.iter().enumerate() {
        let cell = ((p.rem_euclid(1.0)) * bins as f64) as usize % bins;
        counts[cell] += 1;
        let f = i % 10;
        fold_counts[f][cell] += 1;
        fold_totals[f] += 1;
    }
    let norm = depth as f64 * (base as f64).ln();
    let entropy = histogram_entropy(&counts, s as u64);
    let dimension = entropy / norm;
    let folds: Vec<f64> = (0..10)
        .filter(|&f| fold_totals[f] > 0)
        .map(|f| histogram_entropy(&fold_counts[f], fold_totals[f]) / norm)
        .collect();
    let mean = folds.iter().sum::<f64>() / folds.len() as f64;
    let var = folds.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>()
        / (folds.len().saturating_sub(1).max(1)) as f64;
    Ok(EntropyEstimate {
        depth,
        base,
        entropy,
        dimension,
        stderr: (var / folds.len() as f64).sqrt(),
        low_sample_flag: (s as u128) < 100 * bins as u128,
    })
}

/// Dimension-gain experiment: does the Cesaro average of the push-forward
/// under a piecewise curved map look higher-dimensional than mu?
#[derive(Debug, Clone, Serialize)]
pub struct DimensionGainReport {
    pub s: f64,
    pub s_estimate_of_average: f64,
    pub stderr: f64,
    pub margin: f64,
    pub depth: u32,
    pub iterations: u32,
    pub samples: usize,
    pub seed: u64,
    pub clamped: u64,
    pub disclaimer: &'static str,
}

pub fn dimension_gain_experiment(
    mu: &MarkovMeasure,
    f: &SmoothMap,
    iterations: u32,
    samples: usize,
    depth: u32,
    seed: u64,
) -> Result<DimensionGainReport> {
    if !f.is_piecewise_curved() {
        return Err(Error::InvalidArgument(
            "dimension-gain experiment needs a piecewise curved map (nonzero \
             curvature flag on every piece); affine pieces have no gain mechanism"
                .into(),
        ));
    }
    let cloud = cesaro_pushforward_samples(mu, f, iterations, samples, seed)?;
    let est = entropy_at_scale(&cloud, depth, mu.system.base)?;
    Ok(DimensionGainReport {
        s: mu.dimension,
        s_estimate_of_average: est.dimension,
        stderr: est.stderr,
        margin: est.dimension - mu.dimension,
        depth,
        iterations,
        samples,
        seed,
        clamped: cloud.clamped,
        disclaimer: PROXY_DISCLAIMER,
    })
}
