//! Number-theoretic primitives: a-adic fractional parts, commensurability
//! of integer bases, and density statistics of rotation orbits.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use num_integer::Integer;
use serde::Serialize;

/// Circular distance on R/Z: min(|u-v|, 1-|u-v|). The one distance used
/// everywhere in this crate.
pub fn circle_dist(u: f64, v: f64) -> f64 {
    let d = (u - v).rem_euclid(1.0);
    d.min(1.0 - d)
}

/// The a-adic fractional part of a nonzero real: (-log_a|s|) mod 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdicFrac {
    /// Value in [0, 1).
    pub value: f64,
    pub base: u32,
}

/// Computes (-log_a|s|) mod 1 for s != 0, a >= 2.
///
/// The integer part of log_a|s| is peeled off exactly before taking the
/// logarithm, so the mod-1 reduction never amplifies the rounding error
/// of a large logarithm: the residual log is of a number in [1, a).
pub fn adic_frac(s: f64, base: u32) -> Result<AdicFrac> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    if s == 0.0 || !s.is_finite() {
        return Err(Error::Domain(format!(
            "adic_frac undefined for s = {s}: need a nonzero finite real"
        )));
    }
    let a = base as f64;
    let ln_a = a.ln();
    let u = s.abs();
    // u = a^(k + theta) with theta in [0, 1)
    let mut k = (u.ln() / ln_a).floor() as i32;
    let mut m = u / a.powi(k);
    if m < 1.0 {
        m *= a;
        k -= 1;
    }
    if m >= a {
        m /= a;
        k += 1;
    }
    let _ = k; // only theta survives the mod-1 reduction
    let theta = (m.ln() / ln_a).clamp(0.0, 1.0);
    let mut value = (-theta).rem_euclid(1.0);
    if value >= 1.0 {
        value = 0.0;
    }
    Ok(AdicFrac { value, base })
}

/// Fast path for bulk use: same quantity as [`adic_frac`] without the
/// argument checks or exact exponent peeling. Accurate to ~|log_a s| ulps,
/// which is ample at bit-array resolution.
#[inline]
pub fn adic_frac_fast(s: f64, inv_ln_base: f64) -> f64 {
    let t = (-s.abs().ln() * inv_ln_base).rem_euclid(1.0);
    if t >= 1.0 {
        0.0
    } else {
        t
    }
}

/// Outcome of the exact commensurability test for integer bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CommensurabilityVerdict {
    pub related: bool,
    /// When related, (p, q) in lowest terms with log a / log b = p/q,
    /// equivalently a^q = b^p.
    pub ratio: Option<(u64, u64)>,
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

/// Decides whether log a / log b is rational, exactly.
///
/// For integers this holds iff the prime exponent vectors of a and b are
/// proportional; the claimed ratio is then re-verified by exact
/// big-integer exponentiation.
pub fn commensurability(a: u32, b: u32) -> Result<CommensurabilityVerdict> {
    if a < 2 {
        return Err(Error::InvalidBase(a));
    }
    if b < 2 {
        return Err(Error::InvalidBase(b));
    }
    let fa = factorize(a as u64);
    let fb = factorize(b as u64);
    let unrelated = Ok(CommensurabilityVerdict {
        related: false,
        ratio: None,
    });
    if fa.len() != fb.len() || fa.iter().zip(&fb).any(|(x, y)| x.0 != y.0) {
        return unrelated;
    }
    // proportionality of exponent vectors: alpha_i * q = beta_i * p for all i
    let (alpha0, beta0) = (fa[0].1 as u64, fb[0].1 as u64);
    let g = alpha0.gcd(&beta0);
    let (p, q) = (alpha0 / g, beta0 / g);
    for (x, y) in fa.iter().zip(&fb) {
        if x.1 as u64 * q != y.1 as u64 * p {
            return unrelated;
        }
    }
    // exact confirmation: a^q == b^p
    let lhs = BigUint::from(a).pow(q as u32);
    let rhs = BigUint::from(b).pow(p as u32);
    debug_assert_eq!(lhs, rhs);
    if lhs != rhs {
        return unrelated;
    }
    Ok(CommensurabilityVerdict {
        related: true,
        ratio: Some((p, q)),
    })
}

/// Largest empty circular arc of the orbit {n*alpha mod 1 : 0 <= n < count}.
pub fn rotation_orbit_gap(alpha: f64, count: usize) -> Result<f64> {
    if count == 0 {
        return Err(Error::InvalidArgument(
            "rotation_orbit_gap needs at least one orbit point".into(),
        ));
    }
    let mut pts: Vec<f64> = (0..count)
        .map(|n| (n as f64 * alpha).rem_euclid(1.0))
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut max_gap: f64 = 1.0 - pts[pts.len() - 1] + pts[0];
    for w in pts.windows(2) {
        max_gap = max_gap.max(w[1] - w[0]);
    }
    Ok(max_gap.min(1.0))
}

/// Sorted list of distinct consecutive gap lengths of the orbit, merged at
/// tolerance `tol`. By the three-distance theorem this has length <= 3.
pub fn rotation_gap_spectrum(alpha: f64, count: usize, tol: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidArgument("empty orbit".into()));
    }
    let mut pts: Vec<f64> = (0..count)
        .map(|n| (n as f64 * alpha).rem_euclid(1.0))
        .collect();
    pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut gaps: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.push(1.0 - pts[pts.len() - 1] + pts[0]);
    gaps.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut distinct: Vec<f64> = Vec::new();
    for g in gaps {
        match distinct.last() {
            Some(&last) if (g - last).abs() <= tol => {}
            _ => distinct.push(g),
        }
    }
    Ok(distinct)
}
