//! Closed T_a-invariant sets represented as shift spaces over base-a
//! digits: automaton parsing, cylinder covers, exact entropy/dimension,
//! and dynamical classification.

use std::collections::BTreeMap;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Cap on cylinder enumeration; [`crate::circle::MAX_PAIRS`] guards the
/// quadratic pair stage separately.
pub const MAX_COVER_CELLS: u128 = 100_000_000;

/// A closed T_a-invariant set given as the allowed-sequence language of a
/// finite automaton over digits {0..a-1}. Pruned so that every state has
/// at least one outgoing edge and is reachable from an origin state.
#[derive(Debug, Clone)]
pub struct DigitSystem {
    pub name: Option<String>,
    pub base: u32,
    state_names: Vec<String>,
    /// Per state: outgoing (digit, target), sorted.
    edges: Vec<Vec<(u8, usize)>>,
    origin: Vec<usize>,
}

/// Finite specification of a point of a digit system: the eventually
/// periodic digit sequence preperiod . period^infinity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointSpec {
    pub preperiod: Vec<u8>,
    pub period: Vec<u8>,
}

impl PointSpec {
    pub fn new(preperiod: Vec<u8>, period: Vec<u8>) -> Result<Self> {
        if period.is_empty() {
            return Err(Error::InvalidArgument("period must be nonempty".into()));
        }
        Ok(PointSpec { preperiod, period })
    }

    /// Parses "digits:digits", e.g. "02:0" for 0.02 000... base a.
    /// An empty preperiod is written ":0".
    pub fn parse(s: &str) -> Result<Self> {
        let (pre, per) = s.split_once(':').ok_or_else(|| Error::Parse {
            context: "point spec".into(),
            message: format!("expected 'preperiod:period', got {s:?}"),
        })?;
        let digits = |w: &str| -> Result<Vec<u8>> {
            w.chars()
                .map(|c| {
                    c.to_digit(36).map(|d| d as u8).ok_or_else(|| Error::Parse {
                        context: "point spec".into(),
                        message: format!("bad digit {c:?}"),
                    })
                })
                .collect()
        };
        PointSpec::new(digits(pre)?, digits(per)?)
    }

    /// Value of the digit sequence in [0, 1).
    pub fn value(&self, base: u32) -> f64 {
        let a = base as f64;
        // tail value v of period^inf scaled into place, then Horner
        let mut pv = 0.0;
        for &d in self.period.iter().rev() {
            pv = (pv + d as f64) / a;
        }
        let v = pv / (1.0 - a.powi(-(self.period.len() as i32)));
        let mut x = v;
        for &d in self.preperiod.iter().rev() {
            x = (x + d as f64) / a;
        }
        x.rem_euclid(1.0)
    }

    /// The image under T_a: drop the leading digit.
    pub fn shifted(&self) -> PointSpec {
        if self.preperiod.is_empty() {
            let mut period = self.period.clone();
            period.rotate_left(1);
            PointSpec {
                preperiod: Vec::new(),
                period,
            }
        } else {
            PointSpec {
                preperiod: self.preperiod[1..].to_vec(),
                period: self.period.clone(),
            }
        }
    }
}

/// A finite union of closed intervals over-approximating a set. For adic
/// covers the intervals are exactly the depth-n cylinders and `cells`
/// holds their integer offsets j (interval [j a^-n, (j+1) a^-n]).
#[derive(Debug, Clone)]
pub struct Cover {
    pub depth: u32,
    pub base: u32,
    pub adic: bool,
    pub intervals: Vec<Interval>,
    pub cells: Option<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }
    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl Cover {
    pub fn total_length(&self) -> f64 {
        self.intervals.iter().map(|i| i.len()).sum()
    }
}

/// Exact entropy/dimension plus box-count regression data.
#[derive(Debug, Clone)]
pub struct DimensionEstimate {
    pub counts: BTreeMap<u32, u128>,
    pub slope: f64,
    pub exact: Option<f64>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ClassifyFlags {
    pub finite: bool,
    pub perfect: bool,
    pub transitive: bool,
}

#[derive(Deserialize)]
struct SetDoc {
    name: Option<String>,
    base: u32,
    mode: String,
    words: Option<Vec<String>>,
    states: Option<Vec<String>>,
    edges: Option<Vec<[String; 3]>>,
    origin: Option<Vec<String>>,
}

fn parse_err(message: impl Into<String>) -> Error {
    Error::Parse {
        context: "set definition".into(),
        message: message.into(),
    }
}

/// Parses a set-definition document (TOML). See docs/FORMATS.md.
pub fn parse_system(doc: &str) -> Result<DigitSystem> {
    let doc: SetDoc = toml::from_str(doc).map_err(|e| parse_err(e.to_string()))?;
    if doc.base < 2 {
        return Err(Error::InvalidBase(doc.base));
    }
    match doc.mode.as_str() {
        "forbidden_words" => {
            let words = doc
                .words
                .ok_or_else(|| parse_err("mode forbidden_words requires a `words` list"))?;
            let words: Vec<Vec<u8>> = words
                .iter()
                .map(|w| parse_word(w, doc.base))
                .collect::<Result<_>>()?;
            from_forbidden_words(doc.base, &words, doc.name)
        }
        "automaton" => {
            let states = doc
                .states
                .ok_or_else(|| parse_err("mode automaton requires a `states` list"))?;
            let raw_edges = doc
                .edges
                .ok_or_else(|| parse_err("mode automaton requires an `edges` list"))?;
            let index = |name: &str| -> Result<usize> {
                states
                    .iter()
                    .position(|s| s == name)
                    .ok_or_else(|| parse_err(format!("unknown state {name:?}")))
            };
            let mut edges = vec![Vec::new(); states.len()];
            for [from, digit, to] in &raw_edges {
                let d = parse_word(digit, doc.base)?;
                if d.len() != 1 {
                    return Err(parse_err(format!("edge label {digit:?} must be one digit")));
                }
                edges[index(from)?].push((d[0], index(to)?));
            }
            let origin = match &doc.origin {
                Some(names) => names.iter().map(|s| index(s)).collect::<Result<_>>()?,
                None => (0..states.len()).collect(),
            };
            DigitSystem::build(doc.base, states, edges, origin, doc.name)
        }
        other => Err(parse_err(format!(
            "mode must be \"forbidden_words\" or \"automaton\", got {other:?}"
        ))),
    }
}

fn parse_word(w: &str, base: u32) -> Result<Vec<u8>> {
    w.chars()
        .map(|c| {
            let d = c
                .to_digit(36)
                .ok_or_else(|| parse_err(format!("bad digit {c:?} in word {w:?}")))?;
            if d >= base {
                return Err(parse_err(format!(
                    "digit {d} out of range for base {base} in word {w:?}"
                )));
            }
            Ok(d as u8)
        })
        .collect()
}

/// Word-tracking construction: states are the proper prefixes of the
/// forbidden words, transitions follow the longest suffix that is again a
/// tracked prefix, and any transition completing a forbidden word is
/// removed.
fn from_forbidden_words(base: u32, words: &[Vec<u8>], name: Option<String>) -> Result<DigitSystem> {
    if words.iter().any(|w| w.is_empty()) {
        return Err(Error::EmptySet);
    }
    // proper prefixes, deduplicated; state 0 is the empty prefix
    let mut prefixes: Vec<Vec<u8>> = vec![Vec::new()];
    for w in words {
        for l in 1..w.len() {
            let p = w[..l].to_vec();
            if !prefixes.contains(&p) {
                prefixes.push(p);
            }
        }
    }
    let longest_tracked = |w: &[u8]| -> usize {
        for start in 0..=w.len() {
            if let Some(i) = prefixes.iter().position(|p| p[..] == w[start..]) {
                return i;
            }
        }
        0
    };
    let mut edges: Vec<Vec<(u8, usize)>> = vec![Vec::new(); prefixes.len()];
    for (si, prefix) in prefixes.iter().enumerate() {
        'digit: for d in 0..base as u8 {
            let mut w = prefix.clone();
            w.push(d);
            for f in words {
                if w.len() >= f.len() && w[w.len() - f.len()..] == f[..] {
                    continue 'digit;
                }
            }
            edges[si].push((d, longest_tracked(&w)));
        }
    }
    let names = prefixes
        .iter()
        .map(|p| {
            if p.is_empty() {
                "e".to_string()
            } else {
                p.iter().map(|d| char::from_digit(*d as u32, 36).unwrap()).collect()
            }
        })
        .collect();
    DigitSystem::build(base, names, edges, vec![0], name)
}

impl DigitSystem {
    /// Prunes to the essential subgraph (iteratively drop states without
    /// outgoing edges, restrict to states reachable from the origin set)
    /// and validates non-emptiness.
    pub fn build(
        base: u32,
        state_names: Vec<String>,
        mut edges: Vec<Vec<(u8, usize)>>,
        origin: Vec<usize>,
        name: Option<String>,
    ) -> Result<DigitSystem> {
        if base < 2 {
            return Err(Error::InvalidBase(base));
        }
        let n = state_names.len();
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for s in 0..n {
                if alive[s] {
                    let has_out = edges[s].iter().any(|&(_, t)| alive[t]);
                    if !has_out {
                        alive[s] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        // reachability from surviving origin states
        let mut reach = vec![false; n];
        let mut stack: Vec<usize> = origin.iter().copied().filter(|&s| alive[s]).collect();
        for &s in &stack {
            reach[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &(_, t) in &edges[s] {
                if alive[t] && !reach[t] {
                    reach[t] = true;
                    stack.push(t);
                }
            }
        }
        let keep: Vec<usize> = (0..n).filter(|&s| alive[s] && reach[s]).collect();
        if keep.is_empty() {
            return Err(Error::EmptySet);
        }
        let mut remap = vec![usize::MAX; n];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let new_names = keep.iter().map(|&s| state_names[s].clone()).collect();
        let mut new_edges: Vec<Vec<(u8, usize)>> = keep
            .iter()
            .map(|&s| {
                edges[s]
                    .drain(..)
                    .filter(|&(_, t)| alive[t] && reach[t])
                    .map(|(d, t)| (d, remap[t]))
                    .collect()
            })
            .collect();
        for e in &mut new_edges {
            e.sort_unstable();
            e.dedup();
        }
        let mut new_origin: Vec<usize> = origin
            .iter()
            .filter(|&&s| remap[s] != usize::MAX)
            .map(|&s| remap[s])
            .collect();
        new_origin.sort_unstable();
        new_origin.dedup();
        Ok(DigitSystem {
            name,
            base,
            state_names: new_names,
            edges: new_edges,
            origin: new_origin,
        })
    }

    pub fn state_count(&self) -> usize {
        self.state_names.len()
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn edges(&self) -> &[Vec<(u8, usize)>] {
        &self.edges
    }

    pub fn origin(&self) -> &[usize] {
        &self.origin
    }

    /// Number of length-n paths from the origin states. For deterministic
    /// automata (all shipped examples) this equals the number of
    /// admissible words of length n.
    pub fn word_count(&self, n: u32) -> u128 {
        let mut counts = vec![0u128; self.state_count()];
        for &s in &self.origin {
            counts[s] = 1;
        }
        for _ in 0..n {
            let mut next = vec![0u128; self.state_count()];
            for (s, out) in self.edges.iter().enumerate() {
                if counts[s] > 0 {
                    for &(_, t) in out {
                        next[t] = next[t].saturating_add(counts[s]);
                    }
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |acc, &c| acc.saturating_add(c))
    }

    /// The depth-n a-adic cylinder cover of the system.
    pub fn cover_at_depth(&self, n: u32) -> Result<Cover> {
        let count = self.word_count(n);
        if count > MAX_COVER_CELLS {
            return Err(Error::DepthTooLarge {
                what: format!("depth-{n} cover"),
                count,
                cap: MAX_COVER_CELLS,
            });
        }
        // level-by-level enumeration of distinct words with their state sets
        let mut level: Vec<(u64, Vec<usize>)> = vec![(0, self.origin.clone())];
        for _ in 0..n {
            let mut next: Vec<(u64, Vec<usize>)> = Vec::new();
            for (j, states) in &level {
                for d in 0..self.base as u8 {
                    let mut targets: Vec<usize> = states
                        .iter()
                        .flat_map(|&s| {
                            self.edges[s]
                                .iter()
                                .filter(move |&&(dd, _)| dd == d)
                                .map(|&(_, t)| t)
                        })
                        .collect();
                    if targets.is_empty() {
                        continue;
                    }
                    targets.sort_unstable();
                    targets.dedup();
                    next.push((j * self.base as u64 + d as u64, targets));
                }
            }
            level = next;
        }
        let cells: Vec<u64> = level.iter().map(|(j, _)| *j).collect();
        // cells are produced in increasing order by construction
        debug_assert!(cells.windows(2).all(|w| w[0] < w[1]));
        let scale = (self.base as f64).powi(-(n as i32));
        let intervals = cells
            .iter()
            .map(|&j| Interval {
                lo: j as f64 * scale,
                hi: (j + 1) as f64 * scale,
            })
            .collect();
        Ok(Cover {
            depth: n,
            base: self.base,
            adic: true,
            intervals,
            cells: Some(cells),
        })
    }

    /// Checks that preperiod.period^inf has an admissible run. Uses the
    /// subset construction: the period is iterated until the reachable
    /// state set repeats.
    pub fn is_admissible(&self, p: &PointSpec) -> bool {
        let step = |states: &[usize], d: u8| -> Vec<usize> {
            let mut out: Vec<usize> = states
                .iter()
                .flat_map(|&s| {
                    self.edges[s]
                        .iter()
                        .filter(move |&&(dd, _)| dd == d)
                        .map(|&(_, t)| t)
                })
                .collect();
            out.sort_unstable();
            out.dedup();
            out
        };
        let mut states = self.origin.clone();
        for &d in &p.preperiod {
            states = step(&states, d);
            if states.is_empty() {
                return false;
            }
        }
        let mut seen: Vec<Vec<usize>> = vec![states.clone()];
        loop {
            for &d in &p.period {
                states = step(&states, d);
                if states.is_empty() {
                    return false;
                }
            }
            if seen.contains(&states) {
                return true;
            }
            seen.push(states.clone());
        }
    }

    /// Topological entropy h and dimension h/log a.
    ///
    /// h is the log of the Perron eigenvalue of the adjacency matrix,
    /// computed per strongly connected component with shifted power
    /// iteration and Collatz-Wielandt bounds to relative tolerance 1e-13.
    pub fn entropy_exact(&self) -> Result<(f64, f64)> {
        let sccs = self.sccs();
        let mut lambda_max: f64 = 0.0;
        for scc in &sccs {
            lambda_max = lambda_max.max(self.scc_perron(scc)?);
        }
        // pruned graphs always contain a cycle, so lambda_max >= 1
        let h = lambda_max.max(1.0).ln();
        Ok((h, h / (self.base as f64).ln()))
    }

    fn scc_perron(&self, scc: &[usize]) -> Result<f64> {
        let k = scc.len();
        let mut index = BTreeMap::new();
        for (i, &s) in scc.iter().enumerate() {
            index.insert(s, i);
        }
        // adjacency with multiplicity, restricted to the component
        let mut a = vec![vec![0.0f64; k]; k];
        let mut any_edge = false;
        for (i, &s) in scc.iter().enumerate() {
            for &(_, t) in &self.edges[s] {
                if let Some(&j) = index.get(&t) {
                    a[i][j] += 1.0;
                    any_edge = true;
                }
            }
        }
        if !any_edge {
            return Ok(0.0); // trivial component, no cycle through it
        }
        // power iteration on A + I (primitive for irreducible A)
        let mut v = vec![1.0f64; k];
        let cap = 100_000;
        for it in 0..cap {
            let mut w = vec![0.0f64; k];
            for i in 0..k {
                let mut acc = v[i]; // the +I term
                for j in 0..k {
                    acc += a[i][j] * v[j];
                }
                w[i] = acc;
            }
            let mut lo = f64::INFINITY;
            let mut hi = 0.0f64;
            for i in 0..k {
                let r = w[i] / v[i];
                lo = lo.min(r);
                hi = hi.max(r);
            }
            let norm = w.iter().cloned().fold(0.0f64, f64::max);
            for x in &mut w {
                *x /= norm;
            }
            v = w;
            if hi - lo <= 1e-13 * hi {
                return Ok(0.5 * (hi + lo) - 1.0);
            }
            if it == cap - 1 {
                return Err(Error::NonConvergence {
                    iterations: cap,
                    estimate: hi - 1.0,
                });
            }
        }
        unreachable!()
    }

    /// Strongly connected components (iterative Tarjan), in discovery order.
    fn sccs(&self) -> Vec<Vec<usize>> {
        let n = self.state_count();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0usize; n];
        let mut on_stack = vec![false; n];
        let mut stack: Vec<usize> = Vec::new();
        let mut next_index = 0usize;
        let mut out: Vec<Vec<usize>> = Vec::new();
        // explicit DFS stack: (node, edge cursor)
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut dfs: Vec<(usize, usize)> = vec![(root, 0)];
            loop {
                let Some(&(v, cursor)) = dfs.last() else { break };
                if index[v] == usize::MAX {
                    index[v] = next_index;
                    low[v] = next_index;
                    next_index += 1;
                    stack.push(v);
                    on_stack[v] = true;
                }
                if cursor < self.edges[v].len() {
                    dfs.last_mut().unwrap().1 += 1;
                    let (_, w) = self.edges[v][cursor];
                    if index[w] == usize::MAX {
                        dfs.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                } else {
                    dfs.pop();
                    if let Some(&(parent, _)) = dfs.last() {
                        low[parent] = low[parent].min(low[v]);
                    }
                    if low[v] == index[v] {
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().unwrap();
                            on_stack[w] = false;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        out.push(comp);
                    }
                }
            }
        }
        out
    }

    /// Graph-level stand-ins for the dynamical notions: finite (every
    /// cycle state is deterministic), transitive (strongly connected),
    /// perfect (every length-h path bundle branches, h = state count).
    pub fn classify(&self) -> ClassifyFlags {
        let sccs = self.sccs();
        let mut on_cycle = vec![false; self.state_count()];
        for scc in &sccs {
            if scc.len() > 1 {
                for &s in scc {
                    on_cycle[s] = true;
                }
            } else {
                let s = scc[0];
                if self.edges[s].iter().any(|&(_, t)| t == s) {
                    on_cycle[s] = true;
                }
            }
        }
        let finite = (0..self.state_count()).all(|s| !on_cycle[s] || self.edges[s].len() == 1);
        let transitive = sccs.len() == 1;
        // path counts of length h from every state
        let h = self.state_count() as u32;
        let mut counts = vec![1u128; self.state_count()];
        for _ in 0..h.min(64) {
            let mut next = vec![0u128; self.state_count()];
            for (s, out) in self.edges.iter().enumerate() {
                for &(_, t) in out {
                    next[s] = next[s].saturating_add(counts[t]);
                }
            }
            counts = next;
        }
        let perfect = counts.iter().all(|&c| c >= 2);
        ClassifyFlags {
            finite,
            perfect,
            transitive,
        }
    }
}

/// Least-squares slope of log(count) against n log a over the supplied
/// depths; the independent box-counting route to dimension.
pub fn box_count_estimate(counts: &BTreeMap<u32, u128>, base: u32) -> Result<DimensionEstimate> {
    if base < 2 {
        return Err(Error::InvalidBase(base));
    }
    if counts.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "box_count_estimate needs at least 3 depths, got {}",
            counts.len()
        )));
    }
    let ln_a = (base as f64).ln();
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|(&n, &c)| (n as f64 * ln_a, (c as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let intercept = (sy - slope * sx) / n;
    let residual = (pts
        .iter()
        .map(|p| {
            let r = p.1 - (slope * p.0 + intercept);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DimensionEstimate {
        counts: counts.clone(),
        slope: slope.clamp(0.0, 1.0 + 1e-9),
        exact: None,
        residual,
    })
}

impl DigitSystem {
    /// One admissible eventually-periodic point per depth-m cylinder: the
    /// word extended greedily by the smallest digit until a state repeats.
    pub fn net_points(&self, m: u32) -> Result<Vec<PointSpec>> {
        let cover = self.cover_at_depth(m)?;
        let cells = cover.cells.as_ref().unwrap();
        let mut out = Vec::with_capacity(cells.len());
        for &j in cells {
            let mut digits = Vec::with_capacity(m as usize);
            let mut jj = j;
            for i in (0..m).rev() {
                digits.push(((jj / (self.base as u64).pow(i)) % self.base as u64) as u8);
                jj %= (self.base as u64).pow(i);
            }
            // find one run for the word
            let mut state = None;
            'runs: for &s0 in &self.origin {
                let mut s = s0;
                for &d in &digits {
                    match self.edges[s].iter().find(|&&(dd, _)| dd == d) {
                        Some(&(_, t)) => s = t,
                        None => continue 'runs,
                    }
                }
                state = Some(s);
                break;
            }
            let mut s = state.ok_or_else(|| {
                Error::Domain("cylinder word has no deterministic-first run".into())
            })?;
            // greedy smallest-digit extension until a state repeats
            let mut trail: Vec<usize> = vec![s];
            let mut ext: Vec<u8> = Vec::new();
            let (pre_extra, period) = loop {
                let &(d, t) = &self.edges[s][0];
                ext.push(d);
                s = t;
                if let Some(pos) = trail.iter().position(|&q| q == s) {
                    let pre_extra = ext[..pos].to_vec();
                    let period = ext[pos..].to_vec();
                    break (pre_extra, period);
                }
                trail.push(s);
            };
            let mut preperiod = digits;
            preperiod.extend(pre_extra);
            out.push(PointSpec { preperiod, period });
        }
        Ok(out)
    }
}
