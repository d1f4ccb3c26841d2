//! Finite-resolution subsets of R/Z and the difference-set machinery:
//! X - X mod 1, the a-adic local difference set at a point, and
//! density/distance statistics.
//!
//! A `CircleSet` is a bit array of M equal arcs, cell i covering
//! [i/M, (i+1)/M). All constructions here are outer approximations:
//! an empty cell is a certificate, a full circle proves nothing.

use crate::adic::adic_frac_fast;
use crate::error::{Error, Result};
use crate::symbolic::{Cover, DigitSystem, PointSpec};

/// Default cap on quadratic pair enumeration; override with the
/// ADICLAB_MAX_PAIRS environment variable.
pub const DEFAULT_MAX_PAIRS: u128 = 1_000_000_000;

pub fn max_pairs() -> u128 {
    std::env::var("ADICLAB_MAX_PAIRS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_MAX_PAIRS)
}

/// Resolution-M subset of the circle as a bit array.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircleSet {
    m: usize,
    words: Vec<u64>,
}

impl CircleSet {
    pub fn empty(m: usize) -> Result<CircleSet> {
        if m < 2 {
            return Err(Error::InvalidArgument(format!(
                "resolution must be >= 2, got {m}"
            )));
        }
        Ok(CircleSet {
            m,
            words: vec![0; m.div_ceil(64)],
        })
    }

    pub fn full(m: usize) -> Result<CircleSet> {
        let mut s = CircleSet::empty(m)?;
        for w in &mut s.words {
            *w = !0;
        }
        s.mask_tail();
        Ok(s)
    }

    fn mask_tail(&mut self) {
        let extra = self.words.len() * 64 - self.m;
        if extra > 0 {
            let last = self.words.len() - 1;
            self.words[last] &= !0 >> extra;
        }
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn insert(&mut self, cell: usize) {
        let c = cell % self.m;
        self.words[c / 64] |= 1u64 << (c % 64);
    }

    pub fn contains(&self, cell: usize) -> bool {
        let c = cell % self.m;
        self.words[c / 64] & (1u64 << (c % 64)) != 0
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_full(&self) -> bool {
        self.count() == self.m
    }

    /// Marked cell indices in increasing order.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(i * 64 + b)
                }
            })
        })
    }

    fn check_same(&self, other: &CircleSet) -> Result<()> {
        if self.m != other.m {
            return Err(Error::InvalidArgument(format!(
                "resolution mismatch: {} vs {}",
                self.m, other.m
            )));
        }
        Ok(())
    }

    pub fn union(&self, other: &CircleSet) -> Result<CircleSet> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (w, o) in out.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
        Ok(out)
    }

    pub fn intersect(&self, other: &CircleSet) -> Result<CircleSet> {
        self.check_same(other)?;
        let mut out = self.clone();
        for (w, o) in out.words.iter_mut().zip(&other.words) {
            *w &= o;
        }
        Ok(out)
    }

    pub fn complement(&self) -> CircleSet {
        let mut out = self.clone();
        for w in &mut out.words {
            *w = !*w;
        }
        out.mask_tail();
        out
    }

    /// Circular shift by `cells` (positive = towards larger coordinates).
    pub fn rotate_cells(&self, cells: i64) -> CircleSet {
        let m = self.m as i64;
        let shift = cells.rem_euclid(m) as usize;
        let mut out = CircleSet::empty(self.m).unwrap();
        for c in self.cells() {
            out.insert((c + shift) % self.m);
        }
        out
    }

    /// Rotation by the real t: circular shift by round(t * M) cells.
    pub fn rotate(&self, t: f64) -> CircleSet {
        self.rotate_cells((t * self.m as f64).round() as i64)
    }

    /// Dilation by `cells` cells on each side.
    pub fn dilate(&self, cells: usize) -> CircleSet {
        if cells == 0 || self.is_empty() {
            return self.clone();
        }
        let mut out = self.clone();
        let mut up = self.clone();
        let mut down = self.clone();
        for _ in 0..cells {
            up = up.rotate_cells(1);
            down = down.rotate_cells(-1);
            out = out.union(&up).unwrap().union(&down).unwrap();
        }
        out
    }

    /// Marks every cell intersecting the arc from lo to hi (mod 1; lo > hi
    /// wraps through 0). Outward rounding.
    pub fn mark_arc(&mut self, lo: f64, hi: f64) {
        if hi - lo >= 1.0 {
            for w in &mut self.words {
                *w = !0;
            }
            self.mask_tail();
            return;
        }
        let m = self.m as f64;
        let lo = lo.rem_euclid(1.0);
        let hi = hi.rem_euclid(1.0);
        let first = (lo * m).floor() as usize % self.m;
        let last = (hi * m).floor() as usize % self.m;
        let mut c = first;
        loop {
            self.insert(c);
            if c == last {
                break;
            }
            c = (c + 1) % self.m;
        }
    }

    pub fn from_points(points: &[f64], m: usize) -> Result<CircleSet> {
        let mut s = CircleSet::empty(m)?;
        for &p in points {
            s.insert((p.rem_euclid(1.0) * m as f64).floor() as usize % m);
        }
        Ok(s)
    }

    /// Arcs given as (lo, hi) pairs mod 1; lo > hi wraps.
    pub fn from_arcs(arcs: &[(f64, f64)], m: usize) -> Result<CircleSet> {
        let mut s = CircleSet::empty(m)?;
        for &(lo, hi) in arcs {
            let (lo, hi) = if hi < lo { (lo, hi + 1.0) } else { (lo, hi) };
            s.mark_arc(lo, hi);
        }
        Ok(s)
    }

    /// Length of the longest run of empty cells, as a fraction of the
    /// circle. Empty set -> 1, full set -> 0.
    pub fn max_gap(&self) -> f64 {
        if self.is_empty() {
            return 1.0;
        }
        let marked: Vec<usize> = self.cells().collect();
        let mut max_run = 0usize;
        for w in marked.windows(2) {
            max_run = max_run.max(w[1] - w[0] - 1);
        }
        let wrap = self.m - marked[marked.len() - 1] - 1 + marked[0];
        max_run = max_run.max(wrap);
        max_run as f64 / self.m as f64
    }

    /// Circular distance (in cells) from every cell to the nearest marked
    /// cell. Two-pass sweep over the doubled circle.
    fn distance_transform(&self) -> Vec<u32> {
        let m = self.m;
        let inf = m as u32 + 1;
        let mut dist = vec![inf; m];
        for c in self.cells() {
            dist[c] = 0;
        }
        // two sweeps in each direction to resolve the circular wrap
        let mut d = inf;
        for _ in 0..2 {
            for i in 0..m {
                d = (d + 1).min(dist[i]);
                dist[i] = d;
            }
        }
        let mut d = inf;
        for _ in 0..2 {
            for i in (0..m).rev() {
                d = (d + 1).min(dist[i]);
                dist[i] = d;
            }
        }
        dist
    }

    /// Standard circular Hausdorff distance, exact at cell granularity.
    pub fn hausdorff_distance(&self, other: &CircleSet) -> Result<f64> {
        self.check_same(other)?;
        if self.is_empty() || other.is_empty() {
            return Err(Error::Domain(
                "hausdorff_distance requires nonempty operands".into(),
            ));
        }
        let da = self.distance_transform();
        let db = other.distance_transform();
        let mut h = 0u32;
        for c in self.cells() {
            h = h.max(db[c]);
        }
        for c in other.cells() {
            h = h.max(da[c]);
        }
        Ok(h as f64 / self.m as f64)
    }

    /// Plain-text dump: header line with M and count, then the bit array
    /// hex-encoded byte-wise (cell i lives in byte i/8, bit i%8).
    pub fn write_dump(&self) -> String {
        let mut bytes = vec![0u8; self.m.div_ceil(8)];
        for c in self.cells() {
            bytes[c / 8] |= 1 << (c % 8);
        }
        let hex: String = bytes.iter().map(|b| format!("{b:02x}")).collect();
        format!("ADICLAB-CIRCLESET M={} COUNT={}\n{}\n", self.m, self.count(), hex)
    }

    pub fn from_dump(text: &str) -> Result<CircleSet> {
        let err = |m: &str| Error::Parse {
            context: "circle-set dump".into(),
            message: m.into(),
        };
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| err("missing header"))?;
        let mut m = None;
        for field in header.split_whitespace().skip(1) {
            if let Some(v) = field.strip_prefix("M=") {
                m = v.parse::<usize>().ok();
            }
        }
        let m = m.ok_or_else(|| err("missing M= field"))?;
        let hex = lines.next().ok_or_else(|| err("missing bit array"))?.trim();
        let mut s = CircleSet::empty(m)?;
        for (i, chunk) in hex.as_bytes().chunks(2).enumerate() {
            let byte = u8::from_str_radix(
                std::str::from_utf8(chunk).map_err(|_| err("bad hex"))?,
                16,
            )
            .map_err(|_| err("bad hex"))?;
            for b in 0..8 {
                let cell = i * 8 + b;
                if cell < m && byte & (1 << b) != 0 {
                    s.insert(cell);
                }
            }
        }
        Ok(s)
    }

    /// CSV of marked-cell midpoints, for external plotting.
    pub fn write_csv(&self) -> String {
        let mut out = String::from("cell,midpoint\n");
        for c in self.cells() {
            out.push_str(&format!("{},{:.12}\n", c, (c as f64 + 0.5) / self.m as f64));
        }
        out
    }
}

/// Finite-scale truncation parameters for the local difference set.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LocalDiffParams {
    /// Cylinder depth n.
    pub depth: u32,
    /// Outermost ball scale k0 (ball radius a^-k0).
    pub inner_scale: u32,
    /// Guard g: pairs closer than a^(g-n) are discarded, and scales stop
    /// at n - 2g so that every scale retains pairs with controlled
    /// representative distortion.
    pub guard: u32,
    /// Dilation applied to each per-scale layer before intersecting.
    pub epsilon: f64,
    pub resolution: usize,
}

impl LocalDiffParams {
    pub fn new(depth: u32, inner_scale: u32, guard: u32, epsilon: f64, resolution: usize) -> Result<Self> {
        let p = LocalDiffParams {
            depth,
            inner_scale,
            guard,
            epsilon,
            resolution,
        };
        p.validate()?;
        Ok(p)
    }

    /// Defaults: depth 14 for base 2, 12 otherwise; M = 2^16; g = 3;
    /// eps = 4/M; k0 = 2.
    pub fn defaults(base: u32) -> Self {
        let m = 1usize << 16;
        LocalDiffParams {
            depth: if base == 2 { 14 } else { 12 },
            inner_scale: 2,
            guard: 3,
            epsilon: 4.0 / m as f64,
            resolution: m,
        }
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth;
        self
    }

    pub fn max_scale(&self) -> u32 {
        self.depth.saturating_sub(2 * self.guard)
    }

    pub fn validate(&self) -> Result<()> {
        if self.guard < 1 {
            return Err(Error::InvalidArgument("guard must be >= 1".into()));
        }
        if self.inner_scale + 2 * self.guard > self.depth {
            return Err(Error::InvalidArgument(format!(
                "need inner_scale + 2*guard <= depth, got {} + 2*{} > {}",
                self.inner_scale, self.guard, self.depth
            )));
        }
        if self.resolution < 2 {
            return Err(Error::InvalidArgument("resolution must be >= 2".into()));
        }
        if self.epsilon < 2.0 / self.resolution as f64 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be >= 2/M = {}",
                2.0 / self.resolution as f64
            )));
        }
        Ok(())
    }

    pub fn epsilon_cells(&self) -> usize {
        (self.epsilon * self.resolution as f64).ceil() as usize
    }
}

/// Outer approximation of X - X mod 1 from a cover: every interval-pair
/// difference arc is rasterized and the result dilated by one cell, so
/// the true difference set is contained in the output. Contains 0.
pub fn difference_set(cover: &Cover, m: usize) -> Result<CircleSet> {
    let n = cover.intervals.len() as u128;
    if n * n > max_pairs() {
        return Err(Error::DepthTooLarge {
            what: "difference-set pair enumeration".into(),
            count: n * n,
            cap: max_pairs(),
        });
    }
    let mut s = CircleSet::empty(m)?;
    for a in &cover.intervals {
        for b in &cover.intervals {
            let lo = a.lo - b.hi;
            let hi = a.hi - b.lo;
            s.mark_arc(lo.rem_euclid(1.0), lo.rem_euclid(1.0) + (hi - lo));
        }
    }
    Ok(s.dilate(1))
}

/// Self-restrictedness at finite resolution: a one-sided certificate.
/// Since the difference set is an outer approximation, an empty cell
/// proves X - X != [0,1] mod 1; a full circle proves nothing.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct SelfRestricted {
    pub restricted: bool,
    pub gap: f64,
}

pub fn self_restricted_test(sys: &DigitSystem, depth: u32, m: usize) -> Result<SelfRestricted> {
    let cover = sys.cover_at_depth(depth)?;
    let ds = difference_set(&cover, m)?;
    let gap = ds.max_gap();
    Ok(SelfRestricted {
        restricted: !ds.is_full(),
        gap,
    })
}

/// Per-scale pair collection for adic cylinder covers, working on integer
/// cell offsets. Differences are deduplicated in a scratch bit array
/// before any logarithm is taken.
fn local_diff_cells(
    cells: &[u64],
    depth: u32,
    base_a: u32,
    base_b: u32,
    x: f64,
    p: &LocalDiffParams,
) -> Result<CircleSet> {
    let a = base_a as f64;
    let an = a.powi(depth as i32);
    let modulus = (base_a as u64).pow(depth);
    let inv_ln_b = 1.0 / (base_b as f64).ln();
    // frac(n * log_b a): the contribution of the a^-n scaling
    let scale_shift = (depth as f64 * a.ln() * inv_ln_b).rem_euclid(1.0);
    let guard_m = (base_a as u64).pow(p.guard);
    let m_res = p.resolution;
    let eps_cells = p.epsilon_cells();
    let mut result: Option<CircleSet> = None;
    let mut pair_budget = max_pairs();
    let center = x.rem_euclid(1.0) * an;
    for k in p.inner_scale..=p.max_scale() {
        // cylinders whose interval meets B(x, a^-k), as unwrapped offsets
        let radius = an * a.powi(-(k as i32)) + 1.0; // in cells of width a^-n
        let lo = center - radius;
        let hi = center + radius;
        let mut window: Vec<i64> = Vec::new();
        let push_range = |from: f64, to: f64, shift: i64, window: &mut Vec<i64>| {
            let start = cells.partition_point(|&j| (j as f64) < from.floor());
            for &j in &cells[start..] {
                if (j as f64) > to {
                    break;
                }
                window.push(j as i64 + shift);
            }
        };
        if lo < 0.0 {
            push_range(lo + an, an, -(modulus as i64), &mut window);
        }
        push_range(lo.max(0.0), hi.min(an - 1.0), 0, &mut window);
        if hi >= an {
            push_range(0.0, hi - an, modulus as i64, &mut window);
        }
        window.sort_unstable();
        window.dedup();
        let w = window.len() as u128;
        let pairs = w * w / 2;
        if pairs > pair_budget {
            return Err(Error::DepthTooLarge {
                what: format!("local-difference pair enumeration at scale {k}"),
                count: pairs,
                cap: max_pairs(),
            });
        }
        pair_budget -= pairs;
        // distinct offset differences >= a^g, deduplicated in a bit array
        let span = window.last().map(|&b| b - window[0]).unwrap_or(0) as usize;
        let mut seen = vec![0u64; span / 64 + 1];
        for i in 0..window.len() {
            for j in (i + 1)..window.len() {
                let d = (window[j] - window[i]) as usize;
                seen[d / 64] |= 1u64 << (d % 64);
            }
        }
        let mut layer = CircleSet::empty(m_res)?;
        for (wi, &word) in seen.iter().enumerate() {
            let mut word = word;
            while word != 0 {
                let b = word.trailing_zeros() as usize;
                word &= word - 1;
                let d = (wi * 64 + b) as u64;
                if d >= guard_m {
                    let t = (scale_shift - (d as f64).ln() * inv_ln_b).rem_euclid(1.0);
                    let cell = (t * m_res as f64).floor() as usize % m_res;
                    layer.insert(cell);
                }
            }
        }
        let layer = layer.dilate(eps_cells);
        result = Some(match result {
            None => layer,
            Some(acc) => acc.intersect(&layer)?,
        });
        if result.as_ref().unwrap().is_empty() {
            break;
        }
    }
    Ok(result.unwrap_or(CircleSet::empty(m_res)?))
}

/// Generic per-scale pair collection over arbitrary cover items given as
/// (midpoint, halfwidth) pairs sorted by midpoint; used for images of
/// covers under smooth maps.
pub fn local_diff_items(
    items: &[(f64, f64)],
    x: f64,
    base_a: u32,
    base_b: u32,
    p: &LocalDiffParams,
) -> Result<CircleSet> {
    let a = base_a as f64;
    let inv_ln_b = 1.0 / (base_b as f64).ln();
    let guard_len = a.powi(p.guard as i32 - p.depth as i32);
    let m_res = p.resolution;
    let eps_cells = p.epsilon_cells();
    let x = x.rem_euclid(1.0);
    let mut result: Option<CircleSet> = None;
    let mut pair_budget = max_pairs();
    for k in p.inner_scale..=p.max_scale() {
        let radius = a.powi(-(k as i32));
        let mut window: Vec<f64> = Vec::new();
        for &(mid, hw) in items {
            let mut rel = (mid - x).rem_euclid(1.0);
            if rel > 0.5 {
                rel -= 1.0;
            }
            if rel.abs() <= radius + hw {
                window.push(rel);
            }
        }
        window.sort_by(|u, v| u.partial_cmp(v).unwrap());
        let w = window.len() as u128;
        let pairs = w * w / 2;
        if pairs > pair_budget {
            return Err(Error::DepthTooLarge {
                what: format!("local-difference pair enumeration at scale {k}"),
                count: pairs,
                cap: max_pairs(),
            });
        }
        pair_budget -= pairs;
        let mut layer = CircleSet::empty(m_res)?;
        for i in 0..window.len() {
            for j in (i + 1)..window.len() {
                let d = window[j] - window[i];
                if d >= guard_len {
                    let t = adic_frac_fast(d, inv_ln_b);
                    layer.insert((t * m_res as f64).floor() as usize % m_res);
                }
            }
        }
        let layer = layer.dilate(eps_cells);
        result = Some(match result {
            None => layer,
            Some(acc) => acc.intersect(&layer)?,
        });
        if result.as_ref().unwrap().is_empty() {
            break;
        }
    }
    Ok(result.unwrap_or(CircleSet::empty(m_res)?))
}

/// Finite-scale outer approximation of F_{b,X}(x) for a point of a digit
/// system, with an explicit comparison base b.
pub fn local_difference_set_base(
    sys: &DigitSystem,
    x: &PointSpec,
    p: &LocalDiffParams,
    base_b: u32,
) -> Result<CircleSet> {
    p.validate()?;
    if base_b < 2 {
        return Err(Error::InvalidBase(base_b));
    }
    if !sys.is_admissible(x) {
        return Err(Error::Domain(format!(
            "point {:?}:{:?} is not admissible in the system",
            x.preperiod, x.period
        )));
    }
    let cover = sys.cover_at_depth(p.depth)?;
    let cells = cover.cells.as_ref().expect("adic cover");
    local_diff_cells(cells, p.depth, sys.base, base_b, x.value(sys.base), p)
}

/// F_{a,X}(x) in the system's own base.
pub fn local_difference_set(sys: &DigitSystem, x: &PointSpec, p: &LocalDiffParams) -> Result<CircleSet> {
    local_difference_set_base(sys, x, p, sys.base)
}

/// Aggregate F(X): union of the local sets over one canonical point per
/// depth-m cylinder.
pub fn aggregate_local_diff(
    sys: &DigitSystem,
    net_depth: u32,
    p: &LocalDiffParams,
    base_b: u32,
) -> Result<CircleSet> {
    use rayon::prelude::*;
    let net = sys.net_points(net_depth)?;
    let cover = sys.cover_at_depth(p.depth)?;
    let cells = cover.cells.as_ref().expect("adic cover");
    let layers: Vec<CircleSet> = net
        .par_iter()
        .map(|pt| local_diff_cells(cells, p.depth, sys.base, base_b, pt.value(sys.base), p))
        .collect::<Result<_>>()?;
    let mut acc = CircleSet::empty(p.resolution)?;
    for l in layers {
        acc = acc.union(&l)?;
    }
    Ok(acc)
}

/// Checks the inclusion {b^-t : t in F} subset of Y - Y mod 1 at cell
/// granularity: returns the number of marked cells t whose image b^-t is
/// farther than `slack_cells` from the difference set.
pub fn inclusion_violations(
    fhat: &CircleSet,
    diff: &CircleSet,
    base_b: u32,
    slack_cells: u32,
) -> Result<usize> {
    if fhat.resolution() != diff.resolution() {
        return Err(Error::InvalidArgument("resolution mismatch".into()));
    }
    let m = diff.resolution() as f64;
    let dist = diff.distance_transform();
    let b = base_b as f64;
    let mut violations = 0;
    for c in fhat.cells() {
        let t = (c as f64 + 0.5) / m;
        let y = b.powf(-t).rem_euclid(1.0);
        let cell = (y * m).floor() as usize % diff.resolution();
        if dist[cell] > slack_cells {
            violations += 1;
        }
    }
    Ok(violations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::parse_system;

    fn cantor3() -> DigitSystem {
        parse_system("base = 3\nmode = \"forbidden_words\"\nwords = [\"1\"]").unwrap()
    }

    fn zero_plus_powers() -> DigitSystem {
        parse_system(
            "base = 3\nmode = \"automaton\"\nstates = [\"s\",\"z\"]\nedges = [[\"s\",\"0\",\"s\"],[\"s\",\"1\",\"z\"],[\"z\",\"0\",\"z\"]]\norigin = [\"s\"]",
        )
        .unwrap()
    }

    fn fixed_point() -> DigitSystem {
        parse_system(
            "base = 2\nmode = \"automaton\"\nstates = [\"s\"]\nedges = [[\"s\",\"0\",\"s\"]]\norigin = [\"s\"]",
        )
        .unwrap()
    }

    #[test]
    fn rasterize_examples() {
        let s = CircleSet::from_points(&[0.5], 4).unwrap();
        assert_eq!(s.cells().collect::<Vec<_>>(), vec![2]);
        let w = CircleSet::from_arcs(&[(0.9, 0.1)], 10).unwrap();
        assert_eq!(w.cells().collect::<Vec<_>>(), vec![0, 1, 9]);
        let e = CircleSet::from_points(&[], 8).unwrap();
        assert!(e.is_empty());
        assert!(CircleSet::empty(1).is_err());
    }

    #[test]
    fn rotate_examples() {
        let s = CircleSet::from_points(&[0.1], 4).unwrap();
        assert_eq!(s.rotate(0.5).cells().collect::<Vec<_>>(), vec![2]);
        let f = CircleSet::full(64).unwrap();
        assert!(f.rotate(0.33).is_full());
        let mut t = CircleSet::empty(4).unwrap();
        t.insert(1);
        t.insert(2);
        assert_eq!(t.rotate(-0.25).cells().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(t.rotate(0.25).count(), 2);
    }

    #[test]
    fn max_gap_examples() {
        assert_eq!(CircleSet::full(128).unwrap().max_gap(), 0.0);
        let mut s = CircleSet::empty(100).unwrap();
        s.insert(0);
        assert!((s.max_gap() - 0.99).abs() < 1e-12);
        let mut alt = CircleSet::empty(64).unwrap();
        for c in (0..64).step_by(2) {
            alt.insert(c);
        }
        assert!((alt.max_gap() - 1.0 / 64.0).abs() < 1e-12);
        assert_eq!(CircleSet::empty(16).unwrap().max_gap(), 1.0);
    }

    #[test]
    fn hausdorff_examples() {
        let m = 256;
        let s = CircleSet::from_points(&[0.1, 0.4, 0.7], m).unwrap();
        assert_eq!(s.hausdorff_distance(&s).unwrap(), 0.0);
        let a = CircleSet::from_points(&[0.0], m).unwrap();
        let b = CircleSet::from_points(&[0.5], m).unwrap();
        let d = a.hausdorff_distance(&b).unwrap();
        assert!((d - 0.5).abs() <= 1.0 / m as f64);
        let r = s.rotate_cells(1);
        assert!(s.hausdorff_distance(&r).unwrap() <= 2.0 / m as f64);
        assert!(a.hausdorff_distance(&CircleSet::empty(m).unwrap()).is_err());
    }

    #[test]
    fn dump_roundtrip() {
        let s = CircleSet::from_points(&[0.0, 0.123, 0.777], 1 << 10).unwrap();
        let text = s.write_dump();
        let back = CircleSet::from_dump(&text).unwrap();
        assert_eq!(s, back);
        let csv = s.write_csv();
        assert_eq!(csv.lines().count(), 1 + s.count());
    }

    #[test]
    fn difference_set_examples() {
        // Cantor: C - C = [-1, 1], so the outer approximation is full
        let c = cantor3().cover_at_depth(8).unwrap();
        let ds = difference_set(&c, 3usize.pow(6)).unwrap();
        assert!(ds.is_full());
        // single fixed point: only the zero cell (plus one-cell dilation)
        let f = fixed_point().cover_at_depth(8).unwrap();
        let ds = difference_set(&f, 256).unwrap();
        assert!(ds.contains(0));
        assert!(ds.count() <= 5);
        assert!(ds.max_gap() > 0.9);
    }

    #[test]
    fn self_restricted_examples() {
        let r = self_restricted_test(&fixed_point(), 8, 256).unwrap();
        assert!(r.restricted && r.gap > 0.9);
        let r = self_restricted_test(&cantor3(), 8, 729).unwrap();
        assert!(!r.restricted);
        let r = self_restricted_test(&zero_plus_powers(), 12, 3usize.pow(8)).unwrap();
        assert!(r.restricted && r.gap > 0.0);
    }

    #[test]
    fn local_diff_finite_system_is_empty() {
        let sys = fixed_point();
        let p = LocalDiffParams::new(12, 2, 3, 4.0 / 4096.0, 4096).unwrap();
        let f = local_difference_set(&sys, &PointSpec::parse(":0").unwrap(), &p).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn local_diff_zero_plus_powers_matches_closed_form() {
        let sys = zero_plus_powers();
        let m = 1 << 14;
        let p = LocalDiffParams::new(12, 2, 3, 4.0 / m as f64, m).unwrap();
        let f = local_difference_set(&sys, &PointSpec::parse(":0").unwrap(), &p).unwrap();
        assert!(!f.is_empty());
        // closed-form oracle: t_d = -log_3(1 - 3^-d) mod 1
        let oracle: Vec<f64> = (1..=12)
            .map(|d: i32| (-(1.0 - 3f64.powi(-d)).ln() / 3f64.ln()).rem_euclid(1.0))
            .collect();
        for c in f.cells() {
            let t = (c as f64 + 0.5) / m as f64;
            let near = crate::adic::circle_dist(t, 0.0) < 0.01
                || oracle.iter().any(|&o| crate::adic::circle_dist(t, o) < 0.01);
            assert!(near, "cell midpoint {t} far from the analytic set");
        }
        // the first analytic values are covered
        for &o in &oracle[..4] {
            let cell = (o * m as f64).floor() as usize % m;
            assert!(f.dilate(2).contains(cell), "analytic value {o} not covered");
        }
    }

    #[test]
    fn local_diff_rejects_inadmissible_point() {
        let sys = cantor3();
        let p = LocalDiffParams::defaults(3);
        assert!(local_difference_set(&sys, &PointSpec::parse(":1").unwrap(), &p).is_err());
    }

    #[test]
    fn local_diff_monotone_in_depth() {
        let sys = cantor3();
        let m = 1 << 12;
        let x = PointSpec::parse(":0").unwrap();
        let mut prev: Option<CircleSet> = None;
        for depth in [10u32, 12, 14] {
            let p = LocalDiffParams::new(depth, 2, 3, 4.0 / m as f64, m).unwrap();
            let f = local_difference_set(&sys, &x, &p).unwrap();
            if let Some(prev) = &prev {
                // deeper truncation intersects more scales: containment up
                // to the layer dilation
                let outside = f.intersect(&prev.dilate(2).complement()).unwrap();
                assert!(
                    outside.count() <= f.count() / 50,
                    "depth {depth}: {} of {} cells escape",
                    outside.count(),
                    f.count()
                );
            }
            prev = Some(f);
        }
    }

    #[test]
    fn local_diff_locality() {
        // layers only ever use cylinders within the outermost ball, so
        // restricting the cover to that ball changes nothing
        let sys = cantor3();
        let m = 1 << 12;
        let p = LocalDiffParams::new(10, 2, 3, 4.0 / m as f64, m).unwrap();
        let x = PointSpec::parse(":0").unwrap();
        let full = local_difference_set(&sys, &x, &p).unwrap();
        let cover = sys.cover_at_depth(10).unwrap();
        let cells = cover.cells.as_ref().unwrap();
        let an = 3f64.powi(10);
        let r = an / 9.0 + 1.0; // ball a^-k0 in cell units
        let restricted: Vec<u64> = cells
            .iter()
            .copied()
            .filter(|&j| (j as f64) < r || (j as f64) > an - r)
            .collect();
        let f2 = super::local_diff_cells(&restricted, 10, 3, 3, 0.0, &p).unwrap();
        assert_eq!(full, f2);
    }

    #[test]
    fn local_diff_monotone_in_system() {
        // Cantor subset of full shift: F_cantor within dilated F_full
        let cantor = cantor3();
        let full = parse_system("base = 3\nmode = \"forbidden_words\"\nwords = []").unwrap();
        let m = 1 << 12;
        let p = LocalDiffParams::new(10, 2, 3, 4.0 / m as f64, m).unwrap();
        let x = PointSpec::parse(":0").unwrap();
        let fc = local_difference_set(&cantor, &x, &p).unwrap();
        let ff = local_difference_set(&full, &x, &p).unwrap();
        let escape = fc.intersect(&ff.dilate(1).complement()).unwrap();
        assert!(escape.is_empty());
    }

    #[test]
    fn local_diff_union_property() {
        // disjoint union: {0} u {3^-m} in [0, 1/3] and the 22-free
        // {1,2}-shift in [1/2, 7/8]; the components stay farther apart
        // than the outermost ball radius, so aggregation splits exactly
        let union = parse_system(
            "base = 3\nmode = \"automaton\"\nstates = [\"s\",\"z\",\"r\",\"w\"]\nedges = [[\"s\",\"0\",\"s\"],[\"s\",\"1\",\"z\"],[\"z\",\"0\",\"z\"],[\"r\",\"1\",\"r\"],[\"r\",\"2\",\"w\"],[\"w\",\"1\",\"r\"]]\norigin = [\"s\",\"r\"]",
        )
        .unwrap();
        let left = zero_plus_powers();
        let right = parse_system(
            "base = 3\nmode = \"automaton\"\nstates = [\"r\",\"w\"]\nedges = [[\"r\",\"1\",\"r\"],[\"r\",\"2\",\"w\"],[\"w\",\"1\",\"r\"]]\norigin = [\"r\"]",
        )
        .unwrap();
        let m = 1 << 12;
        let p = LocalDiffParams::new(10, 2, 3, 4.0 / m as f64, m).unwrap();
        let agg_union = aggregate_local_diff(&union, 2, &p, 3).unwrap();
        let agg_left = aggregate_local_diff(&left, 2, &p, 3).unwrap();
        let agg_right = aggregate_local_diff(&right, 2, &p, 3).unwrap();
        assert_eq!(agg_union, agg_left.union(&agg_right).unwrap());
    }

    #[test]
    fn shift_covariance_on_cantor() {
        // F at T_a x contains rotate(F at x, -1 mod 1) = F at x (b = a)
        let sys = cantor3();
        let m = 1 << 12;
        let p = LocalDiffParams::new(12, 2, 3, 4.0 / m as f64, m).unwrap();
        for spec in [":0", "2:0"] {
            let x = PointSpec::parse(spec).unwrap();
            let fx = local_difference_set(&sys, &x, &p).unwrap();
            let fs = local_difference_set(&sys, &x.shifted(), &p).unwrap();
            let rotated = fx.rotate(-(1f64)).dilate(2);
            let escape = rotated.complement().intersect(&fx).unwrap();
            // rotate by an integer is the identity on the circle
            assert!(escape.is_empty());
            let missing = fx.intersect(&fs.dilate(2).complement()).unwrap();
            assert!(
                missing.count() <= fx.count() / 50,
                "{spec}: {} of {} cells missing",
                missing.count(),
                fx.count()
            );
        }
    }
}
