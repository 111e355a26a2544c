//! Essential-radius estimates, the family `T_{m,ρ}` with a prescribed
//! discontinuity orbit, `ζ`-weights and measured Lasota–Yorke contraction.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::map_core::{builtins, PiecewiseMap, DEFAULT_CELL_BUDGET};
use crate::observables::{PiecewiseSmooth, WeightScheme};
use crate::orbits::{discontinuity_orbits, lambda_overall, tail_window, OrbitTable};
use crate::poly::RationalFn;
use crate::scalar::{qi, Scalar, Q};
use crate::transfer::{apply_transfer_n, cell_weight, distortion_coefficients};
use crate::weight::Weight;

/// `‖φ_n‖_∞^{1/n}` and `‖1/(T^n)'‖_∞^{1/n}` for each `n` in a range.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionEstimate {
    pub ns: Vec<usize>,
    /// `sup |φ_n|`
    pub weight_sup: Vec<Scalar>,
    pub eta_est: Vec<Scalar>,
    pub lambda_est: Vec<Scalar>,
    /// Range of `eta_est` over the last quarter of `ns`.
    pub eta_window: (Scalar, Scalar),
    pub lambda_window: (Scalar, Scalar),
}

impl ExpansionEstimate {
    /// Estimate at the largest `n`.
    pub fn eta(&self) -> &Scalar {
        self.eta_est.last().expect("nonempty range")
    }

    pub fn lambda(&self) -> &Scalar {
        self.lambda_est.last().expect("nonempty range")
    }
}

fn window_range(values: &[Scalar], ns: &[usize]) -> (Scalar, Scalar) {
    let w = tail_window(&(ns[0]..=*ns.last().expect("nonempty")));
    let picked: Vec<&Scalar> = ns.iter().zip(values).filter(|(n, _)| w.contains(n)).map(|(_, v)| v).collect();
    let lo = picked.iter().fold(picked[0].clone(), |m, v| m.min(v));
    let hi = picked.iter().fold(picked[0].clone(), |m, v| m.max(v));
    (lo, hi)
}

pub fn bv_essential_radius(map: &PiecewiseMap, weight: &Weight, n_range: RangeInclusive<usize>) -> Result<ExpansionEstimate> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(Error::Precondition("n range must be nonempty and start at 1 or later".into()));
    }
    let inv = map.inverse_derivative_factors();
    let mut est = ExpansionEstimate {
        ns: Vec::new(),
        weight_sup: Vec::new(),
        eta_est: Vec::new(),
        lambda_est: Vec::new(),
        eta_window: (Scalar::zero(), Scalar::zero()),
        lambda_window: (Scalar::zero(), Scalar::zero()),
    };
    for n in n_range {
        let s = map.sup_orbit_product(&weight.per_branch, n, DEFAULT_CELL_BUDGET)?;
        let d = map.sup_orbit_product(&inv, n, DEFAULT_CELL_BUDGET)?;
        est.eta_est.push(s.nth_root(n as u32)?);
        est.lambda_est.push(d.nth_root(n as u32)?);
        est.weight_sup.push(s);
        est.ns.push(n);
    }
    est.eta_window = window_range(&est.eta_est, &est.ns);
    est.lambda_window = window_range(&est.lambda_est, &est.ns);
    Ok(est)
}

/// Infinite words over `{0, 1}` selecting `ω_2` or `ω_3`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Itinerary {
    ThueMorse,
    Fibonacci,
    /// Repeats the given block forever; always rejected.
    Periodic(Vec<u8>),
}

impl Itinerary {
    pub fn parse(s: &str) -> Result<Itinerary> {
        match s {
            "thue-morse" | "thue_morse" | "tm" => Ok(Itinerary::ThueMorse),
            "fibonacci" | "sturmian" | "fib" => Ok(Itinerary::Fibonacci),
            _ => match s.strip_prefix("periodic:") {
                Some(block) if !block.is_empty() && block.chars().all(|c| c == '0' || c == '1') => {
                    Ok(Itinerary::Periodic(block.bytes().map(|b| b - b'0').collect()))
                }
                _ => Err(Error::Parse(format!("unknown itinerary {s:?}"))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            Itinerary::ThueMorse => "thue-morse".into(),
            Itinerary::Fibonacci => "fibonacci".into(),
            Itinerary::Periodic(b) => format!("periodic:{}", b.iter().map(|d| d.to_string()).collect::<String>()),
        }
    }

    /// First `len` letters.
    pub fn prefix(&self, len: usize) -> Result<Vec<u8>> {
        match self {
            Itinerary::ThueMorse => Ok((0..len).map(|i| (i.count_ones() % 2) as u8).collect()),
            Itinerary::Fibonacci => {
                let (mut a, mut b) = (vec![0u8], vec![0u8, 1]);
                while b.len() < len {
                    let next = [b.clone(), a].concat();
                    a = b;
                    b = next;
                }
                b.truncate(len);
                Ok(b)
            }
            Itinerary::Periodic(_) => Err(Error::PeriodicItinerary),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleMode {
    /// `ρ` is an enclosure of `m·b`.
    Interval,
    /// `ρ` is `m` times the midpoint of the cylinder.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExampleMap {
    pub map: PiecewiseMap,
    pub m: i64,
    pub b: Scalar,
    pub rho: Scalar,
    /// Cylinder depth used for `b`.
    pub depth: usize,
    pub itinerary: Itinerary,
}

/// Default working precision for the example family.
pub const EXAMPLE_BITS: u32 = 1024;

/// `T_{m,ρ}` with `ρ = m b`, where `b` has the given itinerary under `ω_2, ω_3`.
pub fn make_example_map(m: i64, itinerary: &Itinerary, bits: u32, mode: ExampleMode) -> Result<ExampleMap> {
    if m < 4 {
        return Err(Error::InvalidMap("m must be at least 4".into()));
    }
    let depth = (bits as f64 / (m as f64).log2()).ceil() as usize;
    let word = itinerary.prefix(depth)?;
    // nested cylinders: x = (y + m - 3 + letter) / m, innermost letter first
    let (mut lo, mut hi) = (qi(0), qi(1));
    for &letter in word.iter().rev() {
        let shift = qi(m - 3 + letter as i64);
        lo = (&lo + &shift) / qi(m);
        hi = (&hi + &shift) / qi(m);
    }
    let b = match mode {
        ExampleMode::Interval => Scalar::ball(lo, hi, bits),
        ExampleMode::Exact => Scalar::Exact((lo + hi) / qi(2)),
    };
    let rho = &Scalar::int(m) * &b;
    let map = builtins::example(m, rho.clone())?;
    Ok(ExampleMap { map, m, b, rho, depth, itinerary: itinerary.clone() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub m: i64,
    pub itinerary: String,
    pub n: usize,
    pub orbit_depth: usize,
    pub bits: u32,
    pub bv_est: Scalar,
    pub lambda_inf: Scalar,
    pub lambda_sup: Scalar,
    /// `bv_est − Λ^sup`
    pub gap: Scalar,
    /// `(m − 4)/m`
    pub predicted_gap: Scalar,
    pub rho: String,
}

/// Compares the BV essential radius at `n` with `Λ` along the orbits at depth `orbit_depth`.
pub fn example_gap(m: i64, itinerary: &Itinerary, n: usize, orbit_depth: usize, bits: u32) -> Result<GapReport> {
    let ex = make_example_map(m, itinerary, bits, ExampleMode::Interval)?;
    if ex.depth < 2 * orbit_depth + 16 {
        return Err(Error::PrecisionInsufficient(format!(
            "cylinder depth {} too small for orbit depth {orbit_depth}",
            ex.depth
        )));
    }
    let w = Weight::inverse_derivative(&ex.map);
    let table = discontinuity_orbits(&ex.map, orbit_depth).map_err(|e| match e {
        Error::UndecidableAtDepth(s) => Error::PrecisionInsufficient(s),
        e => e,
    })?;
    let (lambda_inf, lambda_sup) = lambda_overall(&table, &w, 1..=orbit_depth)?;
    let bv = bv_essential_radius(&ex.map, &w, n..=n)?;
    let bv_est = bv.eta().clone();
    let gap = &bv_est - &lambda_sup;
    Ok(GapReport {
        m,
        itinerary: itinerary.name(),
        n,
        orbit_depth,
        bits,
        bv_est,
        lambda_inf,
        lambda_sup,
        gap,
        predicted_gap: Scalar::ratio(m - 4, m),
        rho: ex.rho.describe(),
    })
}

/// Smallest `m` with `(m − 4)/m > c`, for `0 ≤ c < 1`.
pub fn smallest_m_for_gap(c: &Q) -> Result<i64> {
    if c < &qi(0) || c >= &qi(1) {
        return Err(Error::Precondition("0 ≤ c < 1".into()));
    }
    let mut m = 4;
    while Q::new((m - 4).into(), m.into()) <= *c {
        m += 1;
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZetaChoice {
    pub scheme: WeightScheme,
    pub r: usize,
    pub lambda_sup: Scalar,
}

/// Largest `r` tried when solving `η λ^{r−1} < Λ̃`.
const MAX_R: usize = 64;

/// `ζ(j,k) = Λ̃^k / |φ_k(a_{j,0})|` with the minimal `r` such that `η λ^{r−1} < Λ̃`.
pub fn zeta_weights(
    table: &OrbitTable,
    weight: &Weight,
    lambda_tilde: Scalar,
    expansion: &ExpansionEstimate,
) -> Result<ZetaChoice> {
    let n_range = 1..=table.depth.max(1);
    let (_, lambda_sup) = if table.orbits.is_empty() {
        (Scalar::zero(), Scalar::zero())
    } else {
        lambda_overall(table, weight, n_range)?
    };
    if lambda_tilde.partial_cmp_decided(&lambda_sup) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::LambdaTildeTooSmall { tilde: lambda_tilde.to_string(), sup: lambda_sup.to_string() });
    }
    let eta = expansion.eta();
    let lam = expansion.lambda();
    let mut r = 1;
    let mut term = eta.clone();
    while term.partial_cmp_decided(&lambda_tilde) != Some(std::cmp::Ordering::Less) {
        r += 1;
        if r > MAX_R {
            return Err(Error::Precondition(format!("no r ≤ {MAX_R} with ηλ^(r−1) < Λ̃")));
        }
        term = &term * lam;
    }
    let scheme = WeightScheme::new(table, weight, lambda_tilde, r)?;
    Ok(ZetaChoice { scheme, r, lambda_sup })
}

/// Jump parts of `L^n h` split at depth `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct LYReport {
    pub n: usize,
    pub index: usize,
    /// `Σ_{t<r} ‖D_a^t h‖_{J_ζ}`
    pub input_jump_norm: Scalar,
    /// Weighted jumps of `D_a^t L^n h` at `a_{j,k}` with `k − n ≥ k0(j)`; these
    /// are carried from `a_{j,k−n}` by the jump-shift identity alone.
    pub deep_part: Scalar,
    /// All other weighted jumps: shallow orbit points, breakpoints and the finite part.
    pub functional_part: Scalar,
    /// `Σ_{t ≤ r} ‖D_a^t L^n h‖_{L¹}`
    pub continuous_part: Scalar,
    /// `deep_part / input_jump_norm`
    pub contraction_ratio: Option<Scalar>,
    /// `Λ̃^n`
    pub predicted: Scalar,
}

impl LYReport {
    pub fn full_norm(&self) -> Scalar {
        &(&self.deep_part + &self.functional_part) + &self.continuous_part
    }
}

fn weighted_jumps(g: &PiecewiseSmooth, table: &OrbitTable, scheme: &WeightScheme, n: usize) -> Result<(Scalar, Scalar)> {
    let mut deep = Scalar::zero();
    let mut shallow = Scalar::zero();
    for (j, o) in table.orbits.iter().enumerate() {
        let k0 = o.k0.unwrap_or(o.depth() + 1).max(1);
        for k in 1..=o.depth() {
            let v = &scheme.zeta[j][k] * &g.jump_extended(&o.points[k])?.abs();
            if k >= n + k0 {
                deep = &deep + &v;
            } else {
                shallow = &shallow + &v;
            }
        }
    }
    for x in table.gamma.iter().chain(&table.finite_part) {
        if !x.is_zero() && *x != Scalar::one() {
            shallow = &shallow + &g.jump_at(x)?.abs();
        }
    }
    Ok((deep, shallow))
}

/// Measures the jump contraction of `L^n` on each member of `suite`.
pub fn lasota_yorke_ratio(
    map: &PiecewiseMap,
    weight: &Weight,
    table: &OrbitTable,
    scheme: &WeightScheme,
    suite: &[PiecewiseSmooth],
    n_range: RangeInclusive<usize>,
) -> Result<Vec<LYReport>> {
    let mut out = Vec::new();
    for (index, h) in suite.iter().enumerate() {
        let mut input = Scalar::zero();
        let mut d = h.clone();
        for _ in 0..scheme.r {
            input = &input + &crate::observables::zeta_jump_norm(&d, scheme, table)?;
            d = d.derivative();
        }
        let mut lh = apply_transfer_n(map, weight, h, *n_range.start())?;
        for n in n_range.clone() {
            if n > *n_range.start() {
                lh = apply_transfer_n(map, weight, &lh, 1)?;
            }
            let mut deep = Scalar::zero();
            let mut functional = Scalar::zero();
            let mut continuous = Scalar::zero();
            let mut g = lh.clone();
            for t in 0..=scheme.r {
                continuous = &continuous + &g.l1_norm();
                if t < scheme.r {
                    let (dp, sp) = weighted_jumps(&g, table, scheme, n)?;
                    deep = &deep + &dp;
                    functional = &functional + &sp;
                }
                g = g.derivative();
            }
            let contraction_ratio = if input.is_zero() { None } else { Some(deep.checked_div(&input)?) };
            out.push(LYReport {
                n,
                index,
                input_jump_norm: input.clone(),
                deep_part: deep,
                functional_part: functional,
                continuous_part: continuous,
                contraction_ratio,
                predicted: scheme.lambda_tilde.pow(n as u32),
            });
        }
    }
    Ok(out)
}

/// Smallest `C` with `deep_part ≤ C Λ̃^n input_jump_norm` over the given reports.
pub fn fit_ly_constant(reports: &[LYReport]) -> Result<Scalar> {
    let mut c = Scalar::zero();
    for r in reports {
        if let Some(ratio) = &r.contraction_ratio {
            c = c.max(&ratio.checked_div(&r.predicted)?);
        }
    }
    Ok(c)
}

/// Reports violating `deep_part ≤ C Λ̃^n input_jump_norm`.
pub fn ly_violations<'a>(reports: &'a [LYReport], c: &Scalar) -> Vec<&'a LYReport> {
    reports
        .iter()
        .filter(|r| {
            let bound = &(c * &r.predicted) * &r.input_jump_norm;
            r.deep_part.partial_cmp_decided(&bound) == Some(std::cmp::Ordering::Greater)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContinuousPart {
    pub n: usize,
    /// `‖φ_n ((T^n)')^{−(r−1)}‖_∞`
    pub top_term: Scalar,
    /// `top_term^{1/n}`, to compare with `η λ^{r−1}`
    pub top_root: Scalar,
    /// `max_{l ≤ q ≤ r} ‖φ_n (T^n)' A_{l,q,n}‖_∞`, when `Ω_n` fits in the budget.
    pub c_n: Option<Scalar>,
}

pub fn continuous_part_constants(
    map: &PiecewiseMap,
    weight: &Weight,
    r: usize,
    n_range: RangeInclusive<usize>,
    cell_budget: usize,
) -> Result<Vec<ContinuousPart>> {
    let inv = map.inverse_derivative_factors();
    let factors: Vec<RationalFn> = weight
        .per_branch
        .iter()
        .zip(&inv)
        .map(|(f, d)| (0..r.saturating_sub(1)).fold(f.clone(), |acc, _| &acc * d))
        .collect();
    let mut out = Vec::new();
    for n in n_range {
        let top = map.sup_orbit_product(&factors, n, DEFAULT_CELL_BUDGET)?;
        let c_n = match map.refine_partition_with_budget(n, cell_budget) {
            Ok(_) => {
                let table = distortion_coefficients(map, weight, n, r)?;
                let mut best = Scalar::zero();
                for (cell, a) in table.cells.iter().zip(&table.coeffs) {
                    let pre = &cell_weight(map, weight, cell) * &RationalFn::poly(cell.iterate.derivative());
                    for (q, row) in a.iter().enumerate().skip(1) {
                        for coeff in row.iter().take(q + 1) {
                            best = best.max(&(&pre * coeff).sup_abs(cell.lo.exact()?, cell.hi.exact()?)?);
                        }
                    }
                }
                Some(best)
            }
            Err(Error::DepthTooLarge { .. }) => None,
            Err(e) => return Err(e),
        };
        out.push(ContinuousPart { n, top_root: top.nth_root(n as u32)?, top_term: top, c_n });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultRow {
    pub experiment: String,
    pub m: Option<i64>,
    pub n: usize,
    pub bv_est: String,
    pub lambda_est: String,
    pub gap: String,
    pub ly_ratio: String,
    pub r: Option<usize>,
    pub lambda_tilde: String,
}

pub fn results_csv(rows: &[ResultRow]) -> String {
    let mut s = String::from("experiment,m,n,bv_est,lambda_est,gap,ly_ratio,r,Lambda_tilde\n");
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.experiment,
            opt(r.m.map(|m| m.to_string())),
            r.n,
            r.bv_est,
            r.lambda_est,
            r.gap,
            r.ly_ratio,
            opt(r.r.map(|r| r.to_string())),
            r.lambda_tilde
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Poly;
    use crate::scalar::q;

    #[test]
    fn bv_radius_examples() {
        let beta = builtins::beta(q(3, 2)).unwrap();
        let e = bv_essential_radius(&beta, &Weight::inverse_derivative(&beta), 1..=6).unwrap();
        assert!(e.eta_est.iter().all(|v| *v == Scalar::ratio(2, 3)));
        let d = builtins::doubling();
        let e = bv_essential_radius(&d, &Weight::inverse_derivative(&d), 1..=4).unwrap();
        assert_eq!(e.eta(), &Scalar::ratio(1, 2));
        assert_eq!(e.lambda(), &Scalar::ratio(1, 2));
        let t = builtins::example(10, Scalar::int(8)).unwrap();
        let e = bv_essential_radius(&t, &Weight::inverse_derivative(&t), 1..=8).unwrap();
        assert!(e.eta_est.iter().all(|v| *v == Scalar::ratio(7, 10)));
    }

    #[test]
    fn itinerary_words() {
        assert_eq!(Itinerary::ThueMorse.prefix(8).unwrap(), vec![0, 1, 1, 0, 1, 0, 0, 1]);
        assert_eq!(Itinerary::Fibonacci.prefix(8).unwrap(), vec![0, 1, 0, 0, 1, 0, 1, 0]);
        assert_eq!(Itinerary::parse("periodic:01").unwrap().prefix(4), Err(Error::PeriodicItinerary));
        assert!(Itinerary::parse("nope").is_err());
    }

    #[test]
    fn example_map_construction() {
        let ex = make_example_map(10, &Itinerary::ThueMorse, 128, ExampleMode::Interval).unwrap();
        assert!(ex.b.lo() >= &q(7, 10) && ex.b.hi() < &q(9, 10));
        assert!(ex.b.width() <= Q::new(1.into(), num_bigint::BigInt::from(10).pow(ex.depth as u32)));
        // T(1) = b
        let t1 = ex.map.evaluate_one_sided(&Scalar::one(), crate::map_core::Side::Left).unwrap();
        assert!(t1.contains(&ex.b.mid()));
        let ex4 = make_example_map(4, &Itinerary::Fibonacci, 64, ExampleMode::Exact).unwrap();
        let slopes: Vec<Scalar> = ex4.map.branches().iter().map(|b| b.poly.coeff(1)).collect();
        assert_eq!(&slopes[..3], &[Scalar::int(4), Scalar::int(4), Scalar::int(4)]);
        assert_eq!(slopes[3], ex4.rho);
        assert!(make_example_map(10, &Itinerary::Periodic(vec![0, 1]), 64, ExampleMode::Exact).is_err());
    }

    #[test]
    fn gap_for_m_ten() {
        let g = example_gap(10, &Itinerary::ThueMorse, 20, 48, EXAMPLE_BITS).unwrap();
        assert_eq!(g.lambda_inf, Scalar::ratio(1, 10));
        assert_eq!(g.lambda_sup, Scalar::ratio(1, 10));
        assert_eq!(g.bv_est, Scalar::ratio(7, 10));
        assert_eq!(g.gap, Scalar::ratio(3, 5));
        assert!(matches!(example_gap(10, &Itinerary::ThueMorse, 4, 200, 256), Err(Error::PrecisionInsufficient(_))));
    }

    #[test]
    fn gap_formula_helpers() {
        assert_eq!(smallest_m_for_gap(&q(1, 2)).unwrap(), 9);
        assert_eq!(smallest_m_for_gap(&q(0, 1)).unwrap(), 5);
    }

    #[test]
    fn zeta_for_constant_weight() {
        let map = builtins::beta(q(3, 2)).unwrap();
        let w = Weight::inverse_derivative(&map);
        let table = discontinuity_orbits(&map, 10).unwrap();
        let exp = bv_essential_radius(&map, &w, 1..=4).unwrap();
        let z = zeta_weights(&table, &w, Scalar::ratio(4, 5), &exp).unwrap();
        // η = λ = 2/3 < 4/5 so r = 1
        assert_eq!(z.r, 1);
        for k in 0..=10 {
            assert_eq!(z.scheme.zeta[0][k], Scalar::ratio(6, 5).pow(k as u32));
        }
        assert!(matches!(
            zeta_weights(&table, &w, Scalar::ratio(1, 2), &exp),
            Err(Error::LambdaTildeTooSmall { .. })
        ));
        // heavier weight forces larger r
        let heavy = Weight::constant(&map, Scalar::ratio(9, 10));
        let exp = bv_essential_radius(&map, &heavy, 1..=4).unwrap();
        let z = zeta_weights(&table, &heavy, Scalar::ratio(19, 20), &exp).unwrap();
        assert_eq!(z.r, 1);
        let z = zeta_weights(&table, &heavy, Scalar::ratio(91, 100), &exp).unwrap();
        assert_eq!(z.r, 1);
        let exp_big = ExpansionEstimate { eta_est: vec![Scalar::int(2)], ..exp };
        let z = zeta_weights(&table, &heavy, Scalar::ratio(91, 100), &exp_big).unwrap();
        // 2 (2/3)^(r−1) < 91/100 first holds at r = 3
        assert_eq!(z.r, 3);
    }

    #[test]
    fn single_deep_jump_contracts_exactly() {
        let map = builtins::beta(q(3, 2)).unwrap();
        let w = Weight::inverse_derivative(&map);
        let table = discontinuity_orbits(&map, 20).unwrap();
        let lt = Scalar::ratio(3, 4);
        let scheme = WeightScheme::new(&table, &w, lt.clone(), 1).unwrap();
        let a8 = table.orbits[0].points[8].clone();
        let step = PiecewiseSmooth::indicator(&a8, &Scalar::one()).unwrap();
        let cont = PiecewiseSmooth::from_poly(Poly::x());
        let reports = lasota_yorke_ratio(&map, &w, &table, &scheme, &[step, cont], 1..=6).unwrap();
        for r in reports.iter().filter(|r| r.index == 0) {
            assert_eq!(r.contraction_ratio.as_ref().unwrap(), &lt.pow(r.n as u32), "n = {}", r.n);
        }
        for r in reports.iter().filter(|r| r.index == 1) {
            assert!(r.deep_part.is_zero(), "continuous input has no deep jumps");
        }
        let c = fit_ly_constant(&reports).unwrap();
        assert_eq!(c, Scalar::one());
        assert!(ly_violations(&reports, &c).is_empty());
    }

    #[test]
    fn doubling_top_term() {
        let d = builtins::doubling();
        let w = Weight::inverse_derivative(&d);
        let parts = continuous_part_constants(&d, &w, 2, 1..=4, 1 << 10).unwrap();
        for p in &parts {
            assert_eq!(p.top_term, Scalar::ratio(1, 4).pow(p.n as u32));
            assert!(p.c_n.is_some());
        }
    }

    #[test]
    fn csv_header() {
        let row = ResultRow {
            experiment: "gap".into(),
            m: Some(10),
            n: 20,
            bv_est: "7/10".into(),
            lambda_est: "1/10".into(),
            gap: "3/5".into(),
            ly_ratio: String::new(),
            r: None,
            lambda_tilde: String::new(),
        };
        let s = results_csv(&[row]);
        assert_eq!(s.lines().nth(1).unwrap(), "gap,10,20,7/10,1/10,3/5,,,");
    }
}
