//! Piecewise elementary maps with exact derivatives, interval transport
//! of covers, and the transformation-law / dimension / rigidity
//! experiments built on them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adic::adic_frac;
use crate::circle::{
    aggregate_local_diff, local_diff_items, local_difference_set_base, CircleSet, LocalDiffParams,
};
use crate::error::{Error, Result};
use crate::symbolic::{box_count_estimate, Cover, DigitSystem, Interval, PointSpec};

const GRID: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub enum PieceKind {
    /// r x + t
    Affine { r: f64, t: f64 },
    /// c0 + c1 x + ... + c4 x^4
    Poly { coeffs: Vec<f64> },
    /// (a x + b) / (c x + d)
    Moebius { a: f64, b: f64, c: f64, d: f64 },
}

impl PieceKind {
    pub(crate) fn eval(&self, x: f64) -> (f64, f64, f64) {
        match self {
            PieceKind::Affine { r, t } => (r * x + t, *r, 0.0),
            PieceKind::Poly { coeffs } => {
                let mut v = 0.0;
                let mut d1 = 0.0;
                let mut d2 = 0.0;
                for &c in coeffs.iter().rev() {
                    d2 = d2 * x + 2.0 * d1;
                    d1 = d1 * x + v;
                    v = v * x + c;
                }
                (v, d1, d2)
            }
            PieceKind::Moebius { a, b, c, d } => {
                let den = c * x + d;
                let det = a * d - b * c;
                (
                    (a * x + b) / den,
                    det / (den * den),
                    -2.0 * c * det / (den * den * den),
                )
            }
        }
    }

    /// Upper bound for |f''| over [lo, hi].
    fn second_derivative_bound(&self, lo: f64, hi: f64) -> f64 {
        let r = lo.abs().max(hi.abs());
        match self {
            PieceKind::Affine { .. } => 0.0,
            PieceKind::Poly { coeffs } => {
                // |f''| = |2 c2 + 6 c3 x + 12 c4 x^2| bounded by coefficients
                let c2 = coeffs.get(2).copied().unwrap_or(0.0);
                let c3 = coeffs.get(3).copied().unwrap_or(0.0);
                let c4 = coeffs.get(4).copied().unwrap_or(0.0);
                2.0 * c2.abs() + 6.0 * c3.abs() * r + 12.0 * c4.abs() * r * r
            }
            PieceKind::Moebius { a, b, c, d } => {
                let det = a * d - b * c;
                let den_min = (c * lo + d).abs().min((c * hi + d).abs());
                2.0 * c.abs() * det.abs() / (den_min * den_min * den_min)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub domain: Interval,
    pub kind: PieceKind,
    /// Sign of f'' on the piece: +1, -1, or 0 (flat).
    pub curvature: i8,
}

/// A piecewise elementary map. Breakpoints interior to the domain hull
/// form the exceptional set E; evaluation there is a domain error.
#[derive(Debug, Clone)]
pub struct SmoothMap {
    pub name: Option<String>,
    pieces: Vec<Piece>,
}

impl SmoothMap {
    pub fn new(name: Option<String>, raw: Vec<(Interval, PieceKind)>) -> Result<SmoothMap> {
        if raw.is_empty() {
            return Err(Error::InvalidArgument("map needs at least one piece".into()));
        }
        let mut pieces = Vec::with_capacity(raw.len());
        for (domain, kind) in raw {
            if !(domain.lo < domain.hi) {
                return Err(Error::InvalidArgument(format!(
                    "piece domain [{}, {}] is empty",
                    domain.lo, domain.hi
                )));
            }
            if let PieceKind::Moebius { c, d, .. } = &kind {
                if *c != 0.0 {
                    let pole = -d / c;
                    if pole >= domain.lo - 1e-12 && pole <= domain.hi + 1e-12 {
                        return Err(Error::Domain(format!(
                            "Moebius pole {pole} inside piece domain"
                        )));
                    }
                }
            }
            // f' must not vanish; f'' must have constant sign on the piece
            let mut sign_d1 = 0i8;
            let mut sign_d2 = 0i8;
            // sample strictly interior midpoints: a C1 endpoint critical
            // point (e.g. the logistic vertex at the boundary) is fine
            for i in 0..GRID {
                let x = domain.lo + (domain.hi - domain.lo) * (i as f64 + 0.5) / GRID as f64;
                let (_, d1, d2) = kind.eval(x);
                if d1 == 0.0 {
                    return Err(Error::Domain(format!(
                        "derivative vanishes at x = {x}: piece is not a local diffeomorphism"
                    )));
                }
                let s1 = if d1 > 0.0 { 1 } else { -1 };
                if sign_d1 == 0 {
                    sign_d1 = s1;
                } else if sign_d1 != s1 {
                    return Err(Error::Domain(
                        "derivative changes sign inside a piece; split the piece".into(),
                    ));
                }
                let s2 = if d2.abs() < 1e-12 {
                    0
                } else if d2 > 0.0 {
                    1
                } else {
                    -1
                };
                if s2 != 0 {
                    if sign_d2 == 0 {
                        sign_d2 = s2;
                    } else if sign_d2 != s2 {
                        return Err(Error::Domain(
                            "second derivative changes sign inside a piece; split the piece".into(),
                        ));
                    }
                }
            }
            pieces.push(Piece {
                domain,
                kind,
                curvature: sign_d2,
            });
        }
        pieces.sort_by(|a, b| a.domain.lo.partial_cmp(&b.domain.lo).unwrap());
        for w in pieces.windows(2) {
            if w[1].domain.lo < w[0].domain.hi - 1e-12 {
                return Err(Error::InvalidArgument(
                    "piece domains have overlapping interiors".into(),
                ));
            }
        }
        Ok(SmoothMap { name, pieces })
    }

    pub fn affine(r: f64, t: f64, lo: f64, hi: f64) -> Result<SmoothMap> {
        SmoothMap::new(None, vec![(Interval { lo, hi }, PieceKind::Affine { r, t })])
    }

    pub fn identity() -> SmoothMap {
        SmoothMap::affine(1.0, 0.0, 0.0, 1.0).unwrap()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Interior breakpoints (the exceptional set E).
    pub fn breakpoints(&self) -> Vec<f64> {
        let hull_lo = self.pieces[0].domain.lo;
        let hull_hi = self.pieces[self.pieces.len() - 1].domain.hi;
        let mut e: Vec<f64> = self
            .pieces
            .iter()
            .flat_map(|p| [p.domain.lo, p.domain.hi])
            .filter(|&x| x > hull_lo && x < hull_hi)
            .collect();
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        e.dedup();
        e
    }

    pub fn is_piecewise_curved(&self) -> bool {
        self.pieces.iter().all(|p| p.curvature != 0)
    }

    fn piece_for(&self, x: f64) -> Option<&Piece> {
        self.pieces
            .iter()
            .find(|p| x >= p.domain.lo && x <= p.domain.hi)
    }

    /// Exact elementary evaluation of (f(x), f'(x)); errors at breakpoints
    /// and outside the pieces.
    pub fn eval(&self, x: f64) -> Result<(f64, f64)> {
        if self.breakpoints().iter().any(|&e| x == e) {
            return Err(Error::Domain(format!("x = {x} is a map breakpoint")));
        }
        let piece = self
            .piece_for(x)
            .ok_or_else(|| Error::Domain(format!("x = {x} outside the map domain")))?;
        let (v, d1, _) = piece.kind.eval(x);
        Ok((v, d1))
    }
}

/// Interval-arithmetic transport of a cover: each interval must sit
/// inside a single piece (split first if not); the image interval from
/// the endpoint values is widened by the rigorous |f''| len^2 remainder,
/// so f(X intersect c) is contained in the output.
pub fn image_cover(cover: &Cover, f: &SmoothMap) -> Result<Cover> {
    let mut out = Vec::with_capacity(cover.intervals.len());
    for iv in &cover.intervals {
        let piece = f
            .pieces()
            .iter()
            .find(|p| iv.lo >= p.domain.lo - 1e-12 && iv.hi <= p.domain.hi + 1e-12)
            .ok_or(Error::SplitRequired { lo: iv.lo, hi: iv.hi })?;
        let (va, _, _) = piece.kind.eval(iv.lo);
        let (vb, _, _) = piece.kind.eval(iv.hi);
        let (lo, hi) = if va <= vb { (va, vb) } else { (vb, va) };
        let pad = piece.kind.second_derivative_bound(iv.lo, iv.hi) * iv.len() * iv.len();
        out.push(Interval {
            lo: lo - pad,
            hi: hi + pad,
        });
    }
    out.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    Ok(Cover {
        depth: cover.depth,
        base: cover.base,
        adic: false,
        intervals: out,
        cells: None,
    })
}

/// Splits cover intervals at the map's breakpoints so that image_cover
/// applies. Pieces of an interval falling outside the map domain are an
/// error.
pub fn split_cover_at_breakpoints(cover: &Cover, f: &SmoothMap) -> Cover {
    let e = f.breakpoints();
    let mut out = Vec::with_capacity(cover.intervals.len());
    for iv in &cover.intervals {
        let mut cuts: Vec<f64> = vec![iv.lo];
        for &x in &e {
            if x > iv.lo && x < iv.hi {
                cuts.push(x);
            }
        }
        cuts.push(iv.hi);
        for w in cuts.windows(2) {
            out.push(Interval { lo: w[0], hi: w[1] });
        }
    }
    Cover {
        depth: cover.depth,
        base: cover.base,
        adic: false,
        intervals: out,
        cells: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Result of checking the C1 transformation law at a point.
#[derive(Debug, Clone, Serialize)]
pub struct TransformReport {
    /// log_a |f'(x)| mod 1.
    pub shift_predicted: f64,
    pub distance: f64,
    pub depth: u32,
    pub resolution: usize,
    pub tolerance: f64,
    pub verdict: Verdict,
}

/// Compares the local difference set of the image point set at f(x)
/// against the rotation of the local set at x by {|f'(x)|}_a, which is
/// how multiplying distances by f'(x) acts on a-adic fractional parts.
pub fn verify_transform_law(
    sys: &DigitSystem,
    f: &SmoothMap,
    x: &PointSpec,
    p: &LocalDiffParams,
    tol: f64,
) -> Result<TransformReport> {
    let a = sys.base;
    let xv = x.value(a);
    let (y, deriv) = f.eval(xv)?;
    let f1 = local_difference_set_base(sys, x, p, a)?;
    let cover = sys.cover_at_depth(p.depth)?;
    let img = image_cover(&cover, f)?;
    let mut items: Vec<(f64, f64)> = img
        .intervals
        .iter()
        .map(|iv| (iv.mid().rem_euclid(1.0), 0.5 * iv.len()))
        .collect();
    items.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let f2 = local_diff_items(&items, y, a, a, p)?;
    let shift_predicted = (deriv.abs().ln() / (a as f64).ln()).rem_euclid(1.0);
    if f1.is_empty() || f2.is_empty() {
        return Ok(TransformReport {
            shift_predicted,
            distance: f64::NAN,
            depth: p.depth,
            resolution: p.resolution,
            tolerance: tol,
            verdict: Verdict::Inconclusive,
        });
    }
    let rotation = adic_frac(deriv.abs(), a)?.value; // = -log_a|f'| mod 1
    let expected = f1.rotate(rotation);
    let distance = f2.hausdorff_distance(&expected)?;
    Ok(TransformReport {
        shift_predicted,
        distance,
        depth: p.depth,
        resolution: p.resolution,
        tolerance: tol,
        verdict: if distance <= tol { Verdict::Pass } else { Verdict::Fail },
    })
}

/// Gap-trend experiment for the density of F_{b,X}(X) when a and b are
/// non-commensurable.
#[derive(Debug, Clone, Serialize)]
pub struct FullCircleReport {
    pub base_a: u32,
    pub base_b: u32,
    /// (depth, max gap of the aggregate set) per requested depth.
    pub gaps: Vec<(u32, f64)>,
    pub monotone: bool,
    /// The proof engine: the local set at T_a x0 contains the local set
    /// at x0 rotated by -log_b a, up to 2 cells.
    pub mechanism_ok: bool,
    pub mechanism_escape_cells: usize,
}

pub fn claim_full_circle(
    sys: &DigitSystem,
    base_b: u32,
    depths: &[u32],
    net_depth: u32,
    template: &LocalDiffParams,
) -> Result<FullCircleReport> {
    let a = sys.base;
    if crate::adic::commensurability(a, base_b)?.related {
        return Err(Error::InvalidArgument(format!(
            "bases {a} and {base_b} are commensurable; the claim needs a !~ b"
        )));
    }
    let mut gaps = Vec::with_capacity(depths.len());
    for &d in depths {
        let p = template.with_depth(d);
        p.validate()?;
        let agg = aggregate_local_diff(sys, net_depth.min(d), &p, base_b)?;
        gaps.push((d, agg.max_gap()));
    }
    let monotone = gaps.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12);
    // mechanism check at the deepest truncation
    let p = template.with_depth(*depths.iter().max().unwrap());
    let net = sys.net_points(net_depth)?;
    let mut mechanism_ok = false;
    let mut mechanism_escape_cells = 0;
    for x0 in &net {
        let f0 = local_difference_set_base(sys, x0, &p, base_b)?;
        if f0.is_empty() {
            continue;
        }
        // T_a drops one digit, so the shifted point sees the same pair
        // structure one cylinder level shallower
        let f1 = local_difference_set_base(sys, &x0.shifted(), &p.with_depth(p.depth - 1), base_b)?;
        let shift = -((a as f64).ln() / (base_b as f64).ln());
        let expected = f0.rotate(shift);
        let escape = expected.intersect(&f1.dilate(2).complement())?;
        mechanism_escape_cells = escape.count();
        mechanism_ok = mechanism_escape_cells == 0;
        break;
    }
    Ok(FullCircleReport {
        base_a: a,
        base_b,
        gaps,
        monotone,
        mechanism_ok,
        mechanism_escape_cells,
    })
}

/// Box-count slopes of the rasterized local-difference sets on both
/// sides of a piecewise C2 diffeomorphism, against the exact bdim X.
#[derive(Debug, Clone, Serialize)]
pub struct DimInequalityReport {
    pub dim_f_image: f64,
    pub dim_f_source: f64,
    pub bdim_x: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Occupied-cell counts of a circle set at coarse resolutions b^j.
fn circle_box_counts(s: &CircleSet, base_b: u32) -> Result<std::collections::BTreeMap<u32, u128>> {
    let m = s.resolution();
    let mut counts = std::collections::BTreeMap::new();
    let mut j = 2u32;
    while (base_b as u64).pow(j) <= m as u64 {
        let coarse = (base_b as u64).pow(j) as usize;
        let mut seen = vec![false; coarse];
        for c in s.cells() {
            seen[(c as u128 * coarse as u128 / m as u128) as usize] = true;
        }
        counts.insert(j, seen.iter().filter(|&&b| b).count() as u128);
        j += 1;
    }
    Ok(counts)
}

/// Regression dimension of a rasterized set, or None if degenerate.
pub fn circle_box_dimension(s: &CircleSet, base_b: u32) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    let counts = circle_box_counts(s, base_b)?;
    if counts.len() < 3 {
        return Ok(None);
    }
    Ok(Some(box_count_estimate(&counts, base_b)?.slope))
}

pub fn check_map_dim_inequality(
    sys: &DigitSystem,
    f: &SmoothMap,
    base_b: u32,
    depth: u32,
    net_depth: u32,
    template: &LocalDiffParams,
) -> Result<DimInequalityReport> {
    let a = sys.base;
    let p = template.with_depth(depth);
    p.validate()?;
    let fx = aggregate_local_diff(sys, net_depth, &p, base_b)?;
    // image side: transport the cover, aggregate over the mapped net
    let cover = sys.cover_at_depth(depth)?;
    let img = image_cover(&split_cover_at_breakpoints(&cover, f), f)?;
    let mut items: Vec<(f64, f64)> = img
        .intervals
        .iter()
        .map(|iv| (iv.mid().rem_euclid(1.0), 0.5 * iv.len()))
        .collect();
    items.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let net = sys.net_points(net_depth)?;
    let layers: Vec<CircleSet> = net
        .par_iter()
        .map(|pt| {
            let (y, _) = f.eval(pt.value(a))?;
            local_diff_items(&items, y.rem_euclid(1.0), a, base_b, &p)
        })
        .collect::<Result<_>>()?;
    let mut fy = CircleSet::empty(p.resolution)?;
    for l in layers {
        fy = fy.union(&l)?;
    }
    let dim_f_source = circle_box_dimension(&fx, base_b)?.ok_or_else(|| {
        Error::InvalidArgument("degenerate source regression: fewer than 3 usable depths".into())
    })?;
    let dim_f_image = circle_box_dimension(&fy, base_b)?.ok_or_else(|| {
        Error::InvalidArgument("degenerate image regression: fewer than 3 usable depths".into())
    })?;
    let (_, bdim_x) = sys.entropy_exact()?;
    let slack = 0.05;
    Ok(DimInequalityReport {
        dim_f_image,
        dim_f_source,
        bdim_x,
        slack,
        holds: dim_f_image >= dim_f_source - bdim_x - slack,
    })
}

/// One grid point of the affine rigidity search. Passing means "not
/// refuted": the image of the depth-n cover fits inside the one-cell
/// dilation of the cover, a necessary condition for f(X) in X.
#[derive(Debug, Clone, Serialize)]
pub struct AffineCandidate {
    pub r_num: i64,
    pub r_den: u64,
    pub t: f64,
    /// Whether log_a |r| is rational, decided exactly from prime
    /// exponent vectors.
    pub log_commensurable: bool,
    /// Distance of {r}_a to the rational grid {p/q : q <= 16}.
    pub qgrid_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AffineSearchReport {
    pub depth: u32,
    pub survivors: Vec<AffineCandidate>,
    pub refuted: usize,
}

/// Merged, one-cell-dilated target arcs of a cover, for containment
/// tests on the circle.
struct ArcTarget {
    arcs: Vec<(f64, f64)>, // sorted by lo, non-wrapping in [0, 1 + len)
}

impl ArcTarget {
    fn from_cover(cover: &Cover) -> ArcTarget {
        let pad = (cover.base as f64).powi(-(cover.depth as i32));
        let mut arcs: Vec<(f64, f64)> = cover
            .intervals
            .iter()
            .map(|iv| (iv.lo - pad, iv.hi + pad))
            .collect();
        arcs.sort_by(|u, v| u.partial_cmp(v).unwrap());
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (lo, hi) in arcs {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + 1e-15 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        // circular merge across 0/1
        if merged.len() > 1 {
            let first = merged[0];
            let last = *merged.last().unwrap();
            if last.1 >= first.0 + 1.0 - 1e-15 {
                merged[0].0 = last.0 - 1.0;
                merged.pop();
            }
        }
        ArcTarget { arcs: merged }
    }

    /// Whether [lo, hi] (non-wrapping, arbitrary reals) reduced mod 1 is
    /// contained in the target.
    fn contains(&self, lo: f64, hi: f64) -> bool {
        let shift = lo.floor();
        let (lo, hi) = (lo - shift, hi - shift);
        if hi > 1.0 {
            return self.contains_reduced(lo, 1.0) && self.contains_reduced(0.0, hi - 1.0);
        }
        self.contains_reduced(lo, hi)
    }

    fn contains_reduced(&self, lo: f64, hi: f64) -> bool {
        for &(alo, ahi) in &self.arcs {
            // arcs may start below 0 after the circular merge
            for off in [0.0, 1.0] {
                if lo >= alo + off - 1e-15 && hi <= ahi + off + 1e-15 {
                    return true;
                }
            }
        }
        false
    }
}

fn signed_exponent_vector(mut n: u64) -> Vec<(u64, i32)> {
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

/// Exact test for log_a(p/q) rational: the signed exponent vector of
/// p/q must be proportional to the exponent vector of a.
pub fn log_base_rational(p: u64, q: u64, base: u32) -> bool {
    use std::collections::BTreeMap;
    let mut e: BTreeMap<u64, i64> = BTreeMap::new();
    for (pr, ex) in signed_exponent_vector(p) {
        *e.entry(pr).or_insert(0) += ex as i64;
    }
    for (pr, ex) in signed_exponent_vector(q) {
        *e.entry(pr).or_insert(0) -= ex as i64;
    }
    e.retain(|_, v| *v != 0);
    if e.is_empty() {
        return true; // |r| = 1, log is 0
    }
    let alpha: BTreeMap<u64, i64> = signed_exponent_vector(base as u64)
        .into_iter()
        .map(|(p, x)| (p, x as i64))
        .collect();
    if e.len() != alpha.len() || e.keys().ne(alpha.keys()) {
        return false;
    }
    let (&_, &e0) = e.iter().next().unwrap();
    let (&_, &a0) = alpha.iter().next().unwrap();
    // e = (e0/a0) * alpha componentwise, cross-multiplied
    e.iter()
        .zip(alpha.iter())
        .all(|((_, &ei), (_, &ai))| ei * a0 == e0 * ai)
}

fn qgrid_distance(r_abs: f64, base: u32, q_max: u64) -> f64 {
    let t = (r_abs.ln() / (base as f64).ln()).rem_euclid(1.0);
    let mut best = f64::INFINITY;
    for q in 1..=q_max {
        for p in 0..=q {
            best = best.min((t - p as f64 / q as f64).abs());
        }
    }
    best
}

/// Whether the affine map r x + t is refuted at the given depth: some
/// cover-interval image escapes the one-cell dilation of the cover.
pub fn affine_refuted_at(sys: &DigitSystem, r: f64, t: f64, depth: u32) -> Result<bool> {
    let cover = sys.cover_at_depth(depth)?;
    let target = ArcTarget::from_cover(&cover);
    for iv in &cover.intervals {
        let (va, vb) = (r * iv.lo + t, r * iv.hi + t);
        let (lo, hi) = if va <= vb { (va, vb) } else { (vb, va) };
        if !target.contains(lo, hi) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Grid search for affine self-embeddings. Passing is one-sided: it
/// does not certify f(X) in X, while failing refutes it; the theorem
/// predicts every survivor has log_a |r| rational.
pub fn affine_embedding_search(
    sys: &DigitSystem,
    r_grid: &[(i64, u64)],
    t_grid: &[f64],
    depth: u32,
) -> Result<AffineSearchReport> {
    let cover = sys.cover_at_depth(depth)?;
    let target = ArcTarget::from_cover(&cover);
    let results: Vec<Option<AffineCandidate>> = r_grid
        .par_iter()
        .flat_map(|&(num, den)| {
            t_grid.par_iter().map(move |&t| (num, den, t))
        })
        .map(|(num, den, t)| {
            let r = num as f64 / den as f64;
            for iv in &cover.intervals {
                let (va, vb) = (r * iv.lo + t, r * iv.hi + t);
                let (lo, hi) = if va <= vb { (va, vb) } else { (vb, va) };
                if !target.contains(lo, hi) {
                    return None;
                }
            }
            Some(AffineCandidate {
                r_num: num,
                r_den: den,
                t,
                log_commensurable: log_base_rational(num.unsigned_abs(), den, sys.base),
                qgrid_distance: qgrid_distance((num as f64 / den as f64).abs(), sys.base, 16),
            })
        })
        .collect();
    let total = results.len();
    let survivors: Vec<AffineCandidate> = results.into_iter().flatten().collect();
    let refuted = total - survivors.len();
    Ok(AffineSearchReport {
        depth,
        survivors,
        refuted,
    })
}

/// Reduced fractions +-p/q with q <= q_max and |r| <= r_max, in a
/// deterministic order.
pub fn rational_grid(q_max: u64, r_max: f64) -> Vec<(i64, u64)> {
    use num_integer::Integer;
    let mut out = Vec::new();
    for q in 1..=q_max {
        for p in 1..=(r_max * q as f64).floor() as u64 {
            if p.gcd(&q) == 1 {
                out.push((p as i64, q));
                out.push((-(p as i64), q));
            }
        }
    }
    out
}

#[derive(Deserialize)]
struct MapDoc {
    name: Option<String>,
    pieces: Vec<PieceDoc>,
}

#[derive(Deserialize)]
struct PieceDoc {
    domain: [f64; 2],
    kind: String,
    coeffs: Vec<f64>,
}

/// Parses a map-definition document (TOML). See docs/FORMATS.md.
pub fn parse_map(doc: &str) -> Result<SmoothMap> {
    let err = |m: String| Error::Parse {
        context: "map definition".into(),
        message: m,
    };
    let doc: MapDoc = toml::from_str(doc).map_err(|e| err(e.to_string()))?;
    let mut raw = Vec::with_capacity(doc.pieces.len());
    for p in &doc.pieces {
        let domain = Interval {
            lo: p.domain[0],
            hi: p.domain[1],
        };
        let kind = match p.kind.as_str() {
            "affine" => {
                if p.coeffs.len() != 2 {
                    return Err(err("affine pieces need coeffs = [r, t]".into()));
                }
                PieceKind::Affine {
                    r: p.coeffs[0],
                    t: p.coeffs[1],
                }
            }
            "poly" => {
                if p.coeffs.is_empty() || p.coeffs.len() > 5 {
                    return Err(err("poly pieces need 1..=5 ascending coefficients".into()));
                }
                PieceKind::Poly {
                    coeffs: p.coeffs.clone(),
                }
            }
            "moebius" => {
                if p.coeffs.len() != 4 {
                    return Err(err("moebius pieces need coeffs = [a, b, c, d]".into()));
                }
                PieceKind::Moebius {
                    a: p.coeffs[0],
                    b: p.coeffs[1],
                    c: p.coeffs[2],
                    d: p.coeffs[3],
                }
            }
            other => return Err(err(format!("unknown piece kind {other:?}"))),
        };
        raw.push((domain, kind));
    }
    SmoothMap::new(doc.name, raw)
}
