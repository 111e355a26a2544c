//! Discontinuity orbits, the Markov test, and growth rates of the weight along
//! non-trivial orbits.
//!
//! Every one-sided breakpoint `c^±` is iterated forward. An orbit ends when it
//! lands on a breakpoint or repeats a point; what survives `depth` steps is
//! "open at depth K". Open orbits that meet an earlier-indexed point of another
//! orbit are folded into the finite part, so every kept orbit reaches each of
//! its points by the shortest path from a breakpoint.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_core::{PiecewiseMap, Side};
use crate::scalar::{Scalar, Q};
use crate::weight::Weight;

pub const DEFAULT_DEPTH: usize = 64;

/// Qualifier attached to every non-periodicity claim.
pub const OPEN_QUALIFIER: &str = "non-periodic at depth K (not a proof of an infinite orbit)";

#[derive(Clone, Debug, PartialEq)]
pub struct Orbit {
    pub gamma_index: usize,
    pub side: Side,
    /// `a_0 ..= a_K`; `a_0` is the breakpoint approached from `side`.
    pub points: Vec<Scalar>,
    /// Branch index of each `a_k` (one-sided at `k = 0`).
    pub branches: Vec<usize>,
    /// `γ_k`
    pub signs: Vec<i8>,
    /// `None` when the preimage condition still fails at depth K.
    pub k0: Option<usize>,
}

impl Orbit {
    pub fn depth(&self) -> usize {
        self.points.len() - 1
    }

    pub fn label(&self) -> String {
        format!("{}{}", self.points[0], self.side)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Tag {
    Orbit { j: usize, k: usize },
    Finite { index: usize },
    Gamma { index: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrbitTable {
    pub gamma: Vec<Scalar>,
    /// Points of `Δ` off the breakpoints and off the kept orbits.
    pub finite_part: Vec<Scalar>,
    pub orbits: Vec<Orbit>,
    pub depth: usize,
    pub markov: bool,
}

/// Exact points hash; balls are compared one by one and any overlap is undecidable.
#[derive(Clone, Debug, Default)]
struct PointIndex<V> {
    exact: HashMap<Q, V>,
    balls: Vec<(Scalar, V)>,
}

fn undecidable(x: &Scalar) -> Error {
    Error::UndecidableAtDepth(x.describe())
}

impl<V: Clone> PointIndex<V> {
    fn new() -> Self {
        PointIndex { exact: HashMap::new(), balls: Vec::new() }
    }

    fn get(&self, x: &Scalar) -> Result<Option<V>> {
        for (b, v) in &self.balls {
            if b == x {
                return Ok(Some(v.clone()));
            }
            if x.partial_cmp_decided(b).is_none() {
                return Err(undecidable(x));
            }
        }
        match x {
            Scalar::Exact(v) => Ok(self.exact.get(v).cloned()),
            ball => {
                for e in self.exact.keys() {
                    if ball.contains(e) {
                        return Err(undecidable(ball));
                    }
                }
                Ok(None)
            }
        }
    }

    fn insert(&mut self, x: &Scalar, v: V) {
        match x {
            Scalar::Exact(q) => {
                self.exact.insert(q.clone(), v);
            }
            ball => self.balls.push((ball.clone(), v)),
        }
    }
}

struct RawOrbit {
    gamma_index: usize,
    side: Side,
    /// `x_1, x_2, …`
    points: Vec<Scalar>,
    open: bool,
}

fn map_undecidable(e: Error, x: &Scalar) -> Error {
    match e {
        Error::Undecidable(_) => undecidable(x),
        other => other,
    }
}

fn raw_orbit(map: &PiecewiseMap, gamma_index: usize, side: Side, depth: usize) -> Result<RawOrbit> {
    let c = &map.breakpoints()[gamma_index];
    let mut x = map.evaluate_one_sided(c, side)?;
    let mut points = Vec::new();
    let mut seen = PointIndex::new();
    loop {
        if map.is_breakpoint(&x).map_err(|e| map_undecidable(e, &x))? || seen.get(&x)?.is_some() {
            return Ok(RawOrbit { gamma_index, side, points, open: false });
        }
        seen.insert(&x, ());
        points.push(x.clone());
        if points.len() == depth {
            return Ok(RawOrbit { gamma_index, side, points, open: true });
        }
        x = map.evaluate(&x).map_err(|e| map_undecidable(e, &x))?;
    }
}

/// One-sided breakpoints that have an adjacent branch.
pub fn one_sided_breakpoints(map: &PiecewiseMap) -> Vec<(usize, Side)> {
    let n = map.breakpoints().len();
    let mut out = Vec::with_capacity(2 * (n - 1));
    for i in 0..n {
        if i > 0 {
            out.push((i, Side::Left));
        }
        if i + 1 < n {
            out.push((i, Side::Right));
        }
    }
    out
}

pub fn discontinuity_orbits(map: &PiecewiseMap, depth: usize) -> Result<OrbitTable> {
    if depth == 0 {
        return Err(Error::Precondition("orbit depth K >= 1".into()));
    }
    let raws: Vec<RawOrbit> = one_sided_breakpoints(map)
        .into_iter()
        .map(|(i, s)| raw_orbit(map, i, s, depth))
        .collect::<Result<_>>()?;

    // owner of a point: the (index, orbit) pair reaching it first
    let mut owner: PointIndex<(usize, usize)> = PointIndex::new();
    for (r, raw) in raws.iter().enumerate() {
        for (i, x) in raw.points.iter().enumerate() {
            let key = (i + 1, r);
            match owner.get(x)? {
                Some(prev) if prev <= key => {}
                _ => {
                    owner.insert(x, key);
                }
            }
        }
    }
    let kept: Vec<usize> = raws
        .iter()
        .enumerate()
        .filter(|(r, raw)| {
            raw.open
                && raw.points.iter().enumerate().all(|(i, x)| owner.get(x).ok().flatten() == Some((i + 1, *r)))
        })
        .map(|(r, _)| r)
        .collect();

    let mut finite_part = Vec::new();
    let mut finite_seen = PointIndex::new();
    for raw in &raws {
        for x in &raw.points {
            let (_, r) = owner.get(x)?.expect("every point has an owner");
            if kept.contains(&r) || finite_seen.get(x)?.is_some() {
                continue;
            }
            finite_seen.insert(x, ());
            finite_part.push(x.clone());
        }
    }

    let mut orbits = Vec::with_capacity(kept.len());
    for &r in &kept {
        let raw = &raws[r];
        let c = map.breakpoints()[raw.gamma_index].clone();
        let mut points = vec![c.clone()];
        points.extend(raw.points.iter().cloned());
        let mut branches = vec![map.branch_at(&c, raw.side)?];
        for x in &raw.points {
            branches.push(map.branch_containing(x).map_err(|e| map_undecidable(e, x))?);
        }
        let signs = branches.iter().map(|&b| map.branches()[b].orientation).collect();
        orbits.push(Orbit { gamma_index: raw.gamma_index, side: raw.side, points, branches, signs, k0: None });
    }

    let mut table = OrbitTable { gamma: map.breakpoints().to_vec(), finite_part, orbits, depth, markov: kept.is_empty() };
    let delta = table.delta_index()?;
    for j in 0..table.orbits.len() {
        table.orbits[j].k0 = orbit_k0(map, &table, &delta, j)?;
    }
    Ok(table)
}

/// Smallest `k0` such that for all `k0 ≤ k ≤ K` the only point of `Δ_K` among
/// the one-sided preimages of `a_k` is `a_{k-1}` (one-sided when `k = 1`).
fn orbit_k0(map: &PiecewiseMap, table: &OrbitTable, delta: &PointIndex<Tag>, j: usize) -> Result<Option<usize>> {
    let orbit = &table.orbits[j];
    let mut k0 = 1;
    for k in 1..=orbit.depth() {
        let ak = &orbit.points[k];
        let own = orbit.branches[k - 1];
        let mut clean = true;
        for p in map.preimages(ak).map_err(|e| map_undecidable(e, ak))? {
            if p.branch == own {
                continue;
            }
            let in_delta = p.side.is_some()
                || map.is_breakpoint(&p.x).map_err(|e| map_undecidable(e, &p.x))?
                || delta.get(&p.x)?.is_some();
            if in_delta {
                clean = false;
            }
        }
        if !clean {
            k0 = k + 1;
        }
    }
    Ok((k0 <= orbit.depth()).then_some(k0))
}

impl OrbitTable {
    fn delta_index(&self) -> Result<PointIndex<Tag>> {
        let mut idx = PointIndex::new();
        for (j, o) in self.orbits.iter().enumerate() {
            for (k, x) in o.points.iter().enumerate().skip(1) {
                idx.insert(x, Tag::Orbit { j, k });
            }
        }
        for (i, x) in self.finite_part.iter().enumerate() {
            if idx.get(x)?.is_none() {
                idx.insert(x, Tag::Finite { index: i });
            }
        }
        Ok(idx)
    }

    /// Tag of a point of `Δ_K` or `Γ`, or `None` if it is not in the table.
    pub fn tag_of(&self, x: &Scalar) -> Result<Option<Tag>> {
        self.tagger()?.get(x)
    }

    /// Lookup structure for repeated tagging.
    pub fn tagger(&self) -> Result<Tagger> {
        let mut index = self.delta_index()?;
        for (i, c) in self.gamma.iter().enumerate() {
            if index.get(c)?.is_none() {
                let tag = match self.orbits.iter().position(|o| o.gamma_index == i) {
                    Some(j) => Tag::Orbit { j, k: 0 },
                    None => Tag::Gamma { index: i },
                };
                index.insert(c, tag);
            }
        }
        Ok(Tagger { index })
    }

    pub fn point(&self, tag: Tag) -> &Scalar {
        match tag {
            Tag::Orbit { j, k } => &self.orbits[j].points[k],
            Tag::Finite { index } => &self.finite_part[index],
            Tag::Gamma { index } => &self.gamma[index],
        }
    }

    /// Tag of `T(x)` for a tagged `x`, when it stays in the truncated table.
    pub fn shift(&self, tag: Tag) -> Option<Tag> {
        match tag {
            Tag::Orbit { j, k } if k < self.depth => Some(Tag::Orbit { j, k: k + 1 }),
            _ => None,
        }
    }

    pub fn k0(&self) -> Option<usize> {
        self.orbits.iter().map(|o| o.k0).collect::<Option<Vec<_>>>()?.into_iter().max()
    }
}

/// Tags points of a fixed table without rebuilding the index each time.
pub struct Tagger {
    index: PointIndex<Tag>,
}

impl Tagger {
    pub fn get(&self, x: &Scalar) -> Result<Option<Tag>> {
        self.index.get(x)
    }
}

/// `max_j k0(j)` over the kept orbits.
pub fn find_k0(table: &OrbitTable) -> Result<usize> {
    if table.markov {
        return Err(Error::Precondition("a non-trivial discontinuity orbit".into()));
    }
    table.k0().ok_or(Error::TruncationTooShallow { depth: table.depth })
}

/// `γ_k` for every kept orbit, re-checking that no orbit point is a breakpoint.
pub fn branch_signs(table: &OrbitTable, map: &PiecewiseMap) -> Result<Vec<Vec<i8>>> {
    let mut out = Vec::with_capacity(table.orbits.len());
    for o in &table.orbits {
        let mut signs = vec![map.branches()[map.branch_at(&o.points[0], o.side)?].orientation];
        for x in &o.points[1..] {
            let b = map.branch_containing(x)?;
            signs.push(map.branches()[b].orientation);
        }
        out.push(signs);
    }
    Ok(out)
}

/// `φ(a_k)` along orbit `j`, `k = 0..=K`.
pub fn weight_along(table: &OrbitTable, weight: &Weight, j: usize) -> Result<Vec<Scalar>> {
    let o = &table.orbits[j];
    o.points.iter().zip(&o.branches).map(|(x, &b)| weight.eval_on_branch(b, x)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LambdaEstimate {
    pub orbit: usize,
    pub point: String,
    /// `(n, |∏_{k=1}^n φ(a_k)|^{1/n})`
    pub partial_products: Vec<(usize, Scalar)>,
    pub lambda_inf_est: Scalar,
    pub lambda_sup_est: Scalar,
    /// Spread of the partial products over the tail window.
    pub cauchy_diagnostic: Scalar,
    pub window: (usize, usize),
    pub zero_weight: bool,
}

/// Tail window: the last quarter of the range, at least one entry.
pub fn tail_window(range: &RangeInclusive<usize>) -> RangeInclusive<usize> {
    let len = range.end() + 1 - range.start();
    let w = len.div_ceil(4).max(1);
    (range.end() + 1 - w)..=*range.end()
}

pub fn lambda_bounds(table: &OrbitTable, weight: &Weight, j: usize, n_range: RangeInclusive<usize>) -> Result<LambdaEstimate> {
    let orbit = table.orbits.get(j).ok_or_else(|| Error::Precondition(format!("orbit {j} exists")))?;
    if n_range.is_empty() || *n_range.start() == 0 || *n_range.end() > orbit.depth() {
        return Err(Error::Precondition(format!("n_range within 1..={}", orbit.depth())));
    }
    let phi = weight_along(table, weight, j)?;
    let mut product = Scalar::one();
    let mut partial = Vec::new();
    let mut zero_weight = false;
    for n in 1..=*n_range.end() {
        product = &product * &phi[n].abs();
        if phi[n].is_zero() {
            zero_weight = true;
        }
        if n_range.contains(&n) {
            let root = if product.is_zero() { Scalar::zero() } else { product.nth_root(n as u32)? };
            partial.push((n, root));
        }
    }
    let window = tail_window(&n_range);
    let tail: Vec<&Scalar> = partial.iter().filter(|(n, _)| window.contains(n)).map(|(_, v)| v).collect();
    let mut lo = tail[0].clone();
    let mut hi = tail[0].clone();
    for v in &tail[1..] {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let cauchy = &hi - &lo;
    let (lambda_inf_est, lambda_sup_est) = if zero_weight { (Scalar::zero(), Scalar::zero()) } else { (lo, hi) };
    Ok(LambdaEstimate {
        orbit: j,
        point: orbit.label(),
        partial_products: partial,
        lambda_inf_est,
        lambda_sup_est,
        cauchy_diagnostic: cauchy,
        window: (*window.start(), *window.end()),
        zero_weight,
    })
}

/// `(Λ^inf, Λ^sup)` estimates maximized over the kept orbits; zero for Markov maps.
pub fn lambda_overall(table: &OrbitTable, weight: &Weight, n_range: RangeInclusive<usize>) -> Result<(Scalar, Scalar)> {
    let mut inf = Scalar::zero();
    let mut sup = Scalar::zero();
    for j in 0..table.orbits.len() {
        let e = lambda_bounds(table, weight, j, n_range.clone())?;
        inf = inf.max(&e.lambda_inf_est);
        sup = sup.max(&e.lambda_sup_est);
    }
    Ok((inf, sup))
}

/// CSV with columns `j,k,point,branch_index,gamma,phi_value`.
pub fn orbit_csv(table: &OrbitTable, weight: &Weight) -> Result<String> {
    let mut out = String::from("j,k,point,branch_index,gamma,phi_value\n");
    for (j, o) in table.orbits.iter().enumerate() {
        let phi = weight_along(table, weight, j)?;
        for k in 0..o.points.len() {
            let point = if k == 0 { o.label() } else { o.points[k].to_string() };
            writeln!(out, "{j},{k},{point},{},{},{}", o.branches[k], o.signs[k], phi[k]).unwrap();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map_core::builtins;
    use crate::poly::Poly;
    use crate::scalar::q;

    /// Two open orbits, from `3/5^-` and `1^-`, meeting at index 5.
    pub(crate) fn merging_map() -> PiecewiseMap {
        let s = |n, d| Scalar::ratio(n, d);
        PiecewiseMap::new(
            vec![Scalar::zero(), s(3, 10), s(3, 5), Scalar::one()],
            vec![
                Poly::affine(s(10, 3), Scalar::zero()),
                Poly::affine(s(3, 1), s(-9, 10)),
                Poly::affine(s(7, 4), s(-21, 20)),
            ],
        )
        .unwrap()
    }

    /// β-type maps on each half with their own constant weight.
    fn split_map() -> (PiecewiseMap, Weight) {
        let s = |n, d| Scalar::ratio(n, d);
        let map = PiecewiseMap::new(
            vec![Scalar::zero(), s(1, 3), s(1, 2), s(9, 10), Scalar::one()],
            vec![
                Poly::affine(s(3, 2), Scalar::zero()),
                Poly::affine(s(3, 2), s(-1, 2)),
                Poly::affine(s(5, 4), s(-1, 8)),
                Poly::affine(s(5, 4), s(-5, 8)),
            ],
        )
        .unwrap();
        let c = |v: Scalar| Poly::constant(v);
        let w = Weight::custom(&map, vec![c(s(1, 3)), c(s(1, 3)), c(s(1, 5)), c(s(1, 5))]).unwrap();
        (map, w)
    }

    /// Plain iteration with explicit breakpoint tests, independent of the table logic.
    fn iterate_plain(x: Q, lo_hi_slope_off: &[(Q, Q, Q, Q)], n: usize) -> Vec<Q> {
        let mut out = vec![x];
        for _ in 0..n {
            let y = out.last().unwrap().clone();
            let (_, _, a, b) = lo_hi_slope_off.iter().find(|(lo, hi, _, _)| lo < &y && &y < hi).unwrap();
            out.push(a * &y + b);
        }
        out
    }

    #[test]
    fn doubling_is_markov() {
        let t = discontinuity_orbits(&builtins::doubling(), DEFAULT_DEPTH).unwrap();
        assert!(t.markov);
        assert!(t.orbits.is_empty());
        let w = Weight::constant(&builtins::doubling(), Scalar::ratio(1, 2));
        assert_eq!(lambda_overall(&t, &w, 1..=64).unwrap(), (Scalar::zero(), Scalar::zero()));
        assert!(find_k0(&t).is_err());
    }

    #[test]
    fn beta_three_halves() {
        let map = builtins::beta(q(3, 2)).unwrap();
        let t = discontinuity_orbits(&map, DEFAULT_DEPTH).unwrap();
        assert!(!t.markov);
        assert_eq!(t.orbits.len(), 1);
        let o = &t.orbits[0];
        assert_eq!(o.label(), "1-");
        let want: Vec<Scalar> = [(1, 1), (1, 2), (3, 4), (1, 8), (3, 16)].iter().map(|&(n, d)| Scalar::ratio(n, d)).collect();
        assert_eq!(&o.points[..5], &want[..]);
        assert_eq!(find_k0(&t).unwrap(), 1);
        assert!(branch_signs(&t, &map).unwrap()[0].iter().all(|&g| g == 1));
        let w = Weight::constant(&map, Scalar::ratio(2, 3));
        let e = lambda_bounds(&t, &w, 0, 1..=64).unwrap();
        assert!(e.partial_products.iter().all(|(_, v)| *v == Scalar::ratio(2, 3)));
        assert_eq!(lambda_overall(&t, &w, 1..=64).unwrap(), (Scalar::ratio(2, 3), Scalar::ratio(2, 3)));
    }

    #[test]
    fn orbit_points_follow_the_map() {
        let map = builtins::beta(q(3, 2)).unwrap();
        let t = discontinuity_orbits(&map, 40).unwrap();
        let o = &t.orbits[0];
        assert_eq!(map.evaluate_one_sided(&o.points[0], o.side).unwrap(), o.points[1]);
        for k in 1..o.depth() {
            assert_eq!(map.evaluate(&o.points[k]).unwrap(), o.points[k + 1]);
        }
    }

    #[test]
    fn tent_signs() {
        let map = builtins::tent();
        let t = discontinuity_orbits(&map, 16).unwrap();
        // every tent breakpoint orbit lands on 0 or 1
        assert!(t.markov);
        let signs: Vec<i8> = map.branches().iter().map(|b| b.orientation).collect();
        assert_eq!(signs, vec![1, -1]);
    }

    #[test]
    fn merge_at_step_five_gives_k0_six() {
        let map = merging_map();
        let table = discontinuity_orbits(&map, DEFAULT_DEPTH).unwrap();
        // plain oracle: iterate both starting points and locate the first common point
        let pieces: Vec<(Q, Q, Q, Q)> = map
            .branches()
            .iter()
            .map(|b| {
                let (s, o) = b.poly.as_affine().unwrap();
                (b.lo.exact().unwrap().clone(), b.hi.exact().unwrap().clone(), s.exact().unwrap().clone(), o.exact().unwrap().clone())
            })
            .collect();
        let a = iterate_plain(q(9, 10), &pieces, 10);
        let b = iterate_plain(q(7, 10), &pieces, 10);
        let merge = (0..10).find(|&i| a[i] == b[i]).unwrap() + 1;
        assert_eq!(merge, 5);
        assert_eq!(table.orbits.len(), 1);
        assert_eq!(table.orbits[0].label(), "3/5-");
        assert_eq!(find_k0(&table).unwrap(), merge + 1);
        // the folded prefix of 1^- is in the finite part
        for x in &b[..merge - 1] {
            assert!(table.finite_part.contains(&Scalar::Exact(x.clone())));
        }
    }

    #[test]
    fn two_orbits_take_the_max() {
        let (map, w) = split_map();
        let t = discontinuity_orbits(&map, DEFAULT_DEPTH).unwrap();
        assert_eq!(t.orbits.len(), 2);
        let per: Vec<Scalar> = (0..2).map(|j| lambda_bounds(&t, &w, j, 1..=64).unwrap().lambda_sup_est).collect();
        let mut sorted = per.clone();
        sorted.sort_by(|a, b| a.lo().cmp(b.lo()));
        assert_eq!(sorted, vec![Scalar::ratio(1, 5), Scalar::ratio(1, 3)]);
        assert_eq!(lambda_overall(&t, &w, 1..=64).unwrap(), (Scalar::ratio(1, 3), Scalar::ratio(1, 3)));
    }

    #[test]
    fn markov_map_is_zero() {
        let map = builtins::markov_golden_like();
        let t = discontinuity_orbits(&map, DEFAULT_DEPTH).unwrap();
        assert!(t.markov);
        let w = Weight::inverse_derivative(&map);
        assert_eq!(lambda_overall(&t, &w, 1..=64).unwrap(), (Scalar::zero(), Scalar::zero()));
    }

    #[test]
    fn csv_export_shape() {
        let map = builtins::beta(q(3, 2)).unwrap();
        let t = discontinuity_orbits(&map, 4).unwrap();
        let csv = orbit_csv(&t, &Weight::constant(&map, Scalar::ratio(2, 3))).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "j,k,point,branch_index,gamma,phi_value");
        assert_eq!(lines[1], "0,0,1-,1,1,2/3");
        assert_eq!(lines[2], "0,1,1/2,0,1,2/3");
        assert_eq!(lines.len(), 6);
    }

    #[test]
    fn window_is_last_quarter() {
        assert_eq!(tail_window(&(1..=64)), 49..=64);
        assert_eq!(tail_window(&(1..=3)), 3..=3);
    }
}
