use std::ops::RangeInclusive;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};
use transfer_spectra::bounds::{
    bv_essential_radius, fit_ly_constant, lasota_yorke_ratio, ly_violations, results_csv, smallest_m_for_gap, example_gap as compute_gap, Itinerary, ResultRow,
};
use transfer_spectra::dual::certify_grid;
use transfer_spectra::map_core::PiecewiseMap;
use transfer_spectra::observables::{PiecewiseSmooth, WeightScheme};
use transfer_spectra::orbits::{discontinuity_orbits, lambda_bounds, lambda_overall, orbit_csv, OrbitTable, OPEN_QUALIFIER};
use transfer_spectra::scalar::{fmt_q, parse_rational, q_to_f64, qi};
use transfer_spectra::suite::{random_suite, seeded_rng, SuiteOptions};
use transfer_spectra::transfer::{verify_derivative_identity, verify_jump_shift, verify_super_da_upto};
use transfer_spectra::ulam::{eigen_csv, spectral_report, BinPolicy, SpectralReport};
use transfer_spectra::weight::Weight;
use transfer_spectra::Scalar;

use crate::config::{load_map, load_weight, parse_list, parse_range};
use crate::output::{self, wrote, Output};
use crate::plot::{render, PlotInput};
use crate::{Cli, Command, Global, VerifySuite};

/// Runs one command; `Ok(false)` means a verification or threshold failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let g = &cli.global;
    match &cli.command {
        Command::Orbits { depth } => orbits(g, *depth),
        Command::Lambda { depth, n_range } => lambda(g, *depth, n_range.as_deref()),
        Command::BvRadius { n_range } => bv_radius(g, &parse_range(n_range)?),
        Command::ExampleGap { m, c, itinerary, n, depth } => example_gap(g, *m, c.as_deref(), itinerary, *n, *depth),
        Command::Verify { suite } => match suite {
            VerifySuite::JumpShift { k, suite_size } => jump_shift(g, &parse_range(k)?, *suite_size),
            VerifySuite::DerivIdentity { suite_size } => deriv_identity(g, *suite_size),
            VerifySuite::SuperDa { n, p, suite_size } => super_da(g, &parse_range(n)?, *p, *suite_size),
            VerifySuite::DualEigen { depth, suite_size } => dual_eigen(g, *depth, *suite_size),
            VerifySuite::Ly { n, lambda_tilde, r, suite_size } => ly(g, &parse_range(n)?, lambda_tilde, *r, *suite_size),
        },
        Command::Ulam { m_list, policy, n_range } => {
            let policy = BinPolicy::parse(policy)?;
            ulam(g, "ulam", &parse_list(m_list)?, policy, &parse_range(n_range)?)
        }
        Command::Report { m_list, n_range } => report(g, &parse_list(m_list)?, &parse_range(n_range)?),
    }
}

fn setup(g: &Global) -> Result<(PiecewiseMap, Weight)> {
    let map = load_map(&g.map, g.bits).with_context(|| format!("loading --map {}", g.map))?;
    let weight = load_weight(&g.weight, &map).with_context(|| format!("loading --weight {}", g.weight))?;
    Ok((map, weight))
}

/// Short human form: small exact rationals verbatim, everything else as a decimal.
fn show(s: &Scalar) -> String {
    match s {
        Scalar::Exact(v) if fmt_q(v).len() <= 24 => fmt_q(v),
        _ => format!("{:.12}", s.to_f64()),
    }
}

/// JSON form carrying the exactness tag.
fn num(s: &Scalar) -> Value {
    match s {
        Scalar::Exact(v) => json!({ "value": fmt_q(v), "approx": q_to_f64(v), "tag": "exact" }),
        _ => json!({ "lo": q_to_f64(s.lo()), "hi": q_to_f64(s.hi()), "approx": s.to_f64(), "tag": s.width_tag() }),
    }
}

/// Exactly zero, or an enclosure that still contains zero.
fn vanishes(s: &Scalar) -> bool {
    s.is_zero() || (!matches!(s, Scalar::Exact(_)) && s.lo() <= &qi(0))
}

fn suite(table: &OrbitTable, g: &Global, size: usize, jump_depth: usize) -> Result<Vec<PiecewiseSmooth>> {
    let opts = SuiteOptions { size, jump_depth, ..SuiteOptions::default() };
    Ok(random_suite(table, &mut seeded_rng(g.seed), &opts)?)
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn markov_note(table: &OrbitTable) -> Option<String> {
    table
        .orbits
        .is_empty()
        .then(|| format!("Markov at depth {}: every discontinuity orbit is finite, so Λ = 0", table.depth))
}

fn orbits(g: &Global, depth: usize) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let table = discontinuity_orbits(&map, depth)?;
    let out = Output::new(g, "orbits")?;
    let mut rows = Vec::new();
    let mut orbits_json = Vec::new();
    for (j, o) in table.orbits.iter().enumerate() {
        let k0 = o.k0.map_or("none".to_string(), |k| k.to_string());
        let head: Vec<String> = o.points.iter().skip(1).take(4).map(show).collect();
        rows.push(vec![j.to_string(), o.label(), k0, o.depth().to_string(), head.join(", ")]);
        orbits_json.push(json!({
            "j": j,
            "start": o.label(),
            "k0": o.k0,
            "depth": o.depth(),
            "status": OPEN_QUALIFIER,
            "points": o.points.iter().map(num).collect::<Vec<_>>(),
            "branches": o.branches,
            "signs": o.signs,
        }));
    }
    println!("map {}, breakpoints {}, depth {depth}", map.name(), table.gamma.len());
    print!("{}", output::table(&["j", "a_0", "k0", "depth", "a_1.."], &rows));
    if let Some(note) = markov_note(&table) {
        println!("{note}");
    } else {
        println!("each listed orbit: {OPEN_QUALIFIER}");
    }
    if !table.finite_part.is_empty() {
        println!("finite orbit points: {}", table.finite_part.iter().map(show).collect::<Vec<_>>().join(", "));
    }
    let result = json!({
        "map": map.name(),
        "depth": depth,
        "markov": table.markov,
        "gamma": table.gamma.iter().map(num).collect::<Vec<_>>(),
        "finite_part": table.finite_part.iter().map(num).collect::<Vec<_>>(),
        "orbits": orbits_json,
    });
    wrote(&[out.csv("orbits.csv", &orbit_csv(&table, &weight)?)?, out.json("orbits.json", &result)?]);
    Ok(true)
}

fn lambda(g: &Global, depth: usize, n_range: Option<&str>) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let range = match n_range {
        Some(s) => parse_range(s)?,
        None => 1..=depth,
    };
    if *range.end() > depth {
        bail!("--n-range ends at {} beyond --depth {depth}; raise --depth", range.end());
    }
    let table = discontinuity_orbits(&map, depth)?;
    let out = Output::new(g, "lambda")?;
    let mut rows = Vec::new();
    let mut per_orbit = Vec::new();
    for j in 0..table.orbits.len() {
        let e = lambda_bounds(&table, &weight, j, range.clone())?;
        rows.push(vec![
            j.to_string(),
            e.point.clone(),
            show(&e.lambda_inf_est),
            show(&e.lambda_sup_est),
            format!("{:.3e}", e.cauchy_diagnostic.to_f64()),
            e.lambda_sup_est.width_tag(),
        ]);
        per_orbit.push(json!({
            "orbit": j,
            "start": e.point,
            "lambda_inf": num(&e.lambda_inf_est),
            "lambda_sup": num(&e.lambda_sup_est),
            "cauchy_diagnostic": num(&e.cauchy_diagnostic),
            "window": [e.window.0, e.window.1],
            "zero_weight": e.zero_weight,
            "partial_products": e.partial_products.iter().map(|(n, v)| json!([n, v.to_f64()])).collect::<Vec<_>>(),
        }));
    }
    let (inf, sup) = lambda_overall(&table, &weight, range.clone())?;
    println!("map {}, weight {}, n in {}..={}", map.name(), g.weight, range.start(), range.end());
    if !rows.is_empty() {
        print!("{}", output::table(&["j", "a_0", "Λ^inf est", "Λ^sup est", "tail spread", "width"], &rows));
    }
    let note = markov_note(&table);
    if let Some(note) = &note {
        println!("{note}");
    }
    let qualifier = if note.is_some() { String::new() } else { format!(", orbits {OPEN_QUALIFIER}") };
    println!("Λ^inf = {} ({}), Λ^sup = {} ({}){qualifier}", show(&inf), inf.width_tag(), show(&sup), sup.width_tag());
    let result = json!({
        "map": map.name(),
        "depth": depth,
        "n_range": [range.start(), range.end()],
        "markov": note.is_some(),
        "lambda_inf": num(&inf),
        "lambda_sup": num(&sup),
        "orbits": per_orbit,
    });
    wrote(&[out.json("lambda.json", &result)?]);
    Ok(true)
}

fn bv_radius(g: &Global, range: &RangeInclusive<usize>) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let est = bv_essential_radius(&map, &weight, range.clone())?;
    let out = Output::new(g, "bv-radius")?;
    let rows: Vec<Vec<String>> = est
        .ns
        .iter()
        .enumerate()
        .map(|(i, n)| vec![n.to_string(), show(&est.eta_est[i]), show(&est.lambda_est[i]), est.eta_est[i].width_tag()])
        .collect();
    println!("map {}, weight {}", map.name(), g.weight);
    print!("{}", output::table(&["n", "sup|φ_n|^(1/n)", "‖1/(T^n)'‖^(1/n)", "width"], &rows));
    println!("BV radius estimate {} at n = {}", show(est.eta()), est.ns.last().unwrap());
    let result = json!({
        "map": map.name(),
        "rows": est.ns.iter().enumerate().map(|(i, n)| json!({
            "n": n,
            "weight_sup": num(&est.weight_sup[i]),
            "eta": num(&est.eta_est[i]),
            "lambda": num(&est.lambda_est[i]),
        })).collect::<Vec<_>>(),
        "eta_window": [num(&est.eta_window.0), num(&est.eta_window.1)],
        "lambda_window": [num(&est.lambda_window.0), num(&est.lambda_window.1)],
    });
    wrote(&[out.json("bv_radius.json", &result)?]);
    Ok(true)
}

fn example_gap(g: &Global, m: i64, c: Option<&str>, itinerary: &str, n: usize, depth: usize) -> Result<bool> {
    let itin = Itinerary::parse(itinerary).context("--itinerary accepts thue-morse, fibonacci or periodic:<bits>")?;
    let r = compute_gap(m, &itin, n, depth, g.bits).with_context(|| format!("example m = {m}; try larger --bits or smaller --depth"))?;
    let g = &Global { map: format!("builtin:example:{m}:{}", itin.name()), ..g.clone() };
    let out = Output::new(g, "example-gap")?;
    let rows = vec![
        vec!["BV radius est".into(), show(&r.bv_est), r.bv_est.width_tag()],
        vec!["Λ^inf".into(), show(&r.lambda_inf), r.lambda_inf.width_tag()],
        vec!["Λ^sup".into(), show(&r.lambda_sup), r.lambda_sup.width_tag()],
        vec!["gap".into(), show(&r.gap), r.gap.width_tag()],
        vec!["(m-4)/m".into(), show(&r.predicted_gap), r.predicted_gap.width_tag()],
    ];
    println!("example m = {m}, itinerary {}, n = {n}, orbit depth {depth}, bits {}", r.itinerary, r.bits);
    print!("{}", output::table(&["quantity", "value", "width"], &rows));
    let mut ok = true;
    let mut threshold = Value::Null;
    if let Some(c) = c {
        let cq = parse_rational(c).with_context(|| format!("--c {c:?}"))?;
        let above = r.gap.lo() > &cq;
        ok = above;
        let smallest = smallest_m_for_gap(&cq)?;
        println!("gap {} {} {c}", format_gap(&r.gap), if above { ">" } else { "<=" });
        println!("smallest m with (m-4)/m > {c}: {smallest}");
        threshold = json!({ "c": fmt_q(&cq), "gap_exceeds_c": above, "smallest_m": smallest });
    }
    let result = json!({
        "m": r.m,
        "itinerary": r.itinerary,
        "n": r.n,
        "orbit_depth": r.orbit_depth,
        "rho": r.rho,
        "bv_est": num(&r.bv_est),
        "lambda_inf": num(&r.lambda_inf),
        "lambda_sup": num(&r.lambda_sup),
        "gap": num(&r.gap),
        "predicted_gap": num(&r.predicted_gap),
        "threshold": threshold,
    });
    let row = ResultRow {
        experiment: "example-gap".into(),
        m: Some(m),
        n,
        bv_est: format!("{:.12}", r.bv_est.to_f64()),
        lambda_est: format!("{:.12}", r.lambda_sup.to_f64()),
        gap: format!("{:.12}", r.gap.to_f64()),
        ly_ratio: String::new(),
        r: None,
        lambda_tilde: String::new(),
    };
    wrote(&[out.json("gap.json", &result)?, out.csv("results.csv", &results_csv(&[row]))?]);
    Ok(ok)
}

fn format_gap(s: &Scalar) -> String {
    let v = s.to_f64();
    let short = format!("{v:.6}");
    short.trim_end_matches('0').trim_end_matches('.').to_string()
}

fn jump_shift(g: &Global, ks: &RangeInclusive<usize>, size: usize) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let table = discontinuity_orbits(&map, ks.end() + 8)?;
    let out = Output::new(g, "verify jump-shift")?;
    if let Some(note) = markov_note(&table) {
        println!("{note}; no jumps to transport");
        wrote(&[out.json("jump_shift.json", &json!({ "markov": true, "rows": [] }))?]);
        return Ok(true);
    }
    let hs = suite(&table, g, size, ks.end() + 1)?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut ok = true;
    for (j, o) in table.orbits.iter().enumerate() {
        let Some(k0) = o.k0 else {
            println!("orbit {j} ({}): k0 not reached at depth {}, skipped", o.label(), table.depth);
            continue;
        };
        let start = (*ks.start()).max(k0);
        if start > *ks.start() {
            println!("orbit {j} ({}): k starts at k0 = {k0} instead of {}", o.label(), ks.start());
        }
        if start > *ks.end() {
            continue;
        }
        let mut per_k: Vec<(Scalar, bool, String)> = vec![(Scalar::zero(), true, "exact".into()); ks.end() + 1 - start];
        for h in &hs {
            for row in verify_jump_shift(&map, &weight, &table, h, j, start..=*ks.end())? {
                let slot = &mut per_k[row.k - start];
                slot.0 = slot.0.max(&row.residual);
                slot.1 &= vanishes(&row.residual);
                if !matches!(row.residual, Scalar::Exact(_)) {
                    slot.2 = row.residual.width_tag();
                }
            }
        }
        for (i, (res, zero, tag)) in per_k.into_iter().enumerate() {
            let k = start + i;
            ok &= zero;
            rows.push(vec![j.to_string(), k.to_string(), show(&res), tag.clone(), verdict(zero).into()]);
            json_rows.push(json!({ "j": j, "k": k, "max_residual": num(&res), "zero": zero }));
        }
    }
    println!("map {}, weight {}, suite of {} observables (seed {})", map.name(), g.weight, hs.len(), g.seed);
    print!("{}", output::table(&["j", "k", "max residual", "width", "verdict"], &rows));
    println!("jump-shift {}", verdict(ok));
    wrote(&[out.json("jump_shift.json", &json!({ "markov": false, "suite_size": hs.len(), "rows": json_rows, "verdict": ok }))?]);
    Ok(ok)
}

fn deriv_identity(g: &Global, size: usize) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let table = discontinuity_orbits(&map, 16)?;
    let hs = suite(&table, g, size, 8)?;
    let out = Output::new(g, "verify deriv-identity")?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut ok = true;
    for (i, h) in hs.iter().enumerate() {
        let c = verify_derivative_identity(&map, &weight, h)?;
        let zero = vanishes(&c.residual);
        ok &= zero;
        rows.push(vec![i.to_string(), show(&c.residual), c.residual.width_tag(), verdict(zero).into()]);
        json_rows.push(json!({ "member": i, "residual": num(&c.residual), "zero": zero }));
    }
    println!("map {}, weight {}: (Lh)' = L(φ'/T' h) + L(φ/T' h')", map.name(), g.weight);
    print!("{}", output::table(&["member", "sup residual", "width", "verdict"], &rows));
    println!("deriv-identity {}", verdict(ok));
    wrote(&[out.json("deriv_identity.json", &json!({ "rows": json_rows, "verdict": ok }))?]);
    Ok(ok)
}

fn super_da(g: &Global, ns: &RangeInclusive<usize>, p: usize, size: usize) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let table = discontinuity_orbits(&map, 16)?;
    let hs = suite(&table, g, size, 8)?;
    let out = Output::new(g, "verify super-da")?;
    let mut rows = Vec::new();
    let mut json_rows = Vec::new();
    let mut ok = true;
    for n in ns.clone() {
        let mut worst = vec![Scalar::zero(); p + 1];
        let mut zero = vec![true; p + 1];
        for h in &hs {
            // Errors unless A_{p,p,n} = ((T^n)')^{-p} on every cell.
            let checks = verify_super_da_upto(&map, &weight, h, n, p).with_context(|| format!("n = {n}"))?;
            for (q, c) in checks.iter().enumerate() {
                worst[q] = worst[q].max(&c.residual);
                zero[q] &= vanishes(&c.residual);
            }
        }
        for q in 0..=p {
            ok &= zero[q];
            rows.push(vec![n.to_string(), q.to_string(), show(&worst[q]), worst[q].width_tag(), verdict(zero[q]).into()]);
            json_rows.push(json!({ "n": n, "p": q, "max_residual": num(&worst[q]), "zero": zero[q] }));
        }
    }
    println!("map {}, weight {}, closed form A_(p,p,n) = ((T^n)')^(-p) holds on every cell", map.name(), g.weight);
    print!("{}", output::table(&["n", "p", "max residual", "width", "verdict"], &rows));
    println!("super-da {}", verdict(ok));
    wrote(&[out.json("super_da.json", &json!({ "rows": json_rows, "verdict": ok }))?]);
    Ok(ok)
}

fn dual_eigen(g: &Global, depth: usize, size: usize) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let table = discontinuity_orbits(&map, depth)?;
    let out = Output::new(g, "verify dual-eigen")?;
    if let Some(note) = markov_note(&table) {
        println!("{note}; no eigen-functionals to certify");
        wrote(&[out.json("dual_eigen.json", &json!({ "markov": true }))?]);
        return Ok(true);
    }
    let (inf, _) = lambda_overall(&table, &weight, 1..=depth)?;
    let hs = suite(&table, g, size, depth + 2)?;
    let rep = certify_grid(&map, &weight, &table, 0, &inf, &hs)?;
    let rows: Vec<Vec<String>> = rep
        .entries
        .iter()
        .map(|e| {
            vec![
                e.lambda.clone(),
                format!("{:.4}", e.modulus),
                format!("{:.3e}", e.max_residual),
                format!("{:.3e}", e.max_tail_bound),
                e.exact_zero.to_string(),
                e.within_tail.to_string(),
                verdict(e.verdict).into(),
            ]
        })
        .collect();
    println!("map {}, orbit 0, k0 = {}, depth {}, Λ^inf est {}", map.name(), rep.k0, rep.depth, show(&inf));
    print!("{}", output::table(&["λ", "|λ|", "max residual", "tail bound", "exact zeros", "within tail", "verdict"], &rows));
    println!("ℓ_λ(h_k0) nonzero: {}, tail rigorous: {}", rep.ell_of_h_k_nonzero, rep.tail_rigorous);
    println!("dual-eigen {}", verdict(rep.verdict));
    wrote(&[out.json("dual_eigen.json", &json!({ "markov": false, "report": rep }))?]);
    Ok(rep.verdict)
}

fn ly(g: &Global, ns: &RangeInclusive<usize>, lambda_tilde: &str, r: usize, size: usize) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let lt = Scalar::from(parse_rational(lambda_tilde).with_context(|| format!("--lambda-tilde {lambda_tilde:?}"))?);
    let depth = 2 * ns.end() + 16;
    let table = discontinuity_orbits(&map, depth)?;
    let out = Output::new(g, "verify ly")?;
    if let Some(note) = markov_note(&table) {
        println!("{note}; the jump part is empty");
        wrote(&[out.json("ly.json", &json!({ "markov": true }))?]);
        return Ok(true);
    }
    let (_, sup) = lambda_overall(&table, &weight, 1..=depth)?;
    if lt.lo() <= sup.hi() {
        bail!("--lambda-tilde {lambda_tilde} must exceed the Λ^sup estimate {}", show(&sup));
    }
    let scheme = WeightScheme::new(&table, &weight, lt.clone(), r)?;
    let o = &table.orbits[0];
    let k0 = o.k0.context("orbit 0 has no k0 at this depth; raise the n range")?;
    // Calibration: indicators deep enough that only the jump-shift acts on them.
    let calib: Vec<PiecewiseSmooth> = [1, 4, 7, 12]
        .iter()
        .map(|&d| PiecewiseSmooth::indicator(&o.points[ns.end() + d + k0 - 1], &Scalar::one()))
        .collect::<transfer_spectra::Result<_>>()?;
    let calib_reports = lasota_yorke_ratio(&map, &weight, &table, &scheme, &calib, ns.clone())?;
    let c = fit_ly_constant(&calib_reports)?;
    let hs = suite(&table, g, size, depth - 8)?;
    let reports = lasota_yorke_ratio(&map, &weight, &table, &scheme, &hs, ns.clone())?;
    let bad = ly_violations(&reports, &c);
    let mut rows = Vec::new();
    for n in ns.clone() {
        let ratios: Vec<Scalar> = calib_reports.iter().filter(|x| x.n == n).filter_map(|x| x.contraction_ratio.clone()).collect();
        let worst = ratios.iter().fold(Scalar::zero(), |m, v| m.max(v));
        let viol = bad.iter().filter(|x| x.n == n).count();
        rows.push(vec![n.to_string(), show(&worst), show(&lt.pow(n as u32)), viol.to_string()]);
    }
    println!("map {}, Λ̃ = {lambda_tilde}, r = {r}, Λ^sup est {}", map.name(), show(&sup));
    print!("{}", output::table(&["n", "calibration ratio", "Λ̃^n", "suite violations"], &rows));
    println!("fitted C = {} on {} calibration observables, validated on {} suite rows", show(&c), calib.len(), reports.len());
    let ok = bad.is_empty();
    println!("ly {}", verdict(ok));
    let row = |x: &transfer_spectra::bounds::LYReport| {
        json!({
            "n": x.n,
            "member": x.index,
            "input_jump_norm": num(&x.input_jump_norm),
            "deep_part": num(&x.deep_part),
            "functional_part": num(&x.functional_part),
            "continuous_part": num(&x.continuous_part),
            "ratio": x.contraction_ratio.as_ref().map(num),
            "predicted": num(&x.predicted),
        })
    };
    let result = json!({
        "lambda_tilde": lambda_tilde,
        "r": r,
        "fitted_c": num(&c),
        "calibration": calib_reports.iter().map(row).collect::<Vec<_>>(),
        "suite": reports.iter().map(row).collect::<Vec<_>>(),
        "violations": bad.len(),
        "verdict": ok,
    });
    let csv_rows: Vec<ResultRow> = calib_reports
        .iter()
        .map(|x| ResultRow {
            experiment: "ly-calibration".into(),
            m: None,
            n: x.n,
            bv_est: String::new(),
            lambda_est: format!("{:.12}", sup.to_f64()),
            gap: String::new(),
            ly_ratio: x.contraction_ratio.as_ref().map(show).unwrap_or_default(),
            r: Some(r),
            lambda_tilde: lambda_tilde.to_string(),
        })
        .collect();
    wrote(&[out.json("ly.json", &result)?, out.csv("results.csv", &results_csv(&csv_rows))?]);
    Ok(ok)
}

fn plot_input<'a>(title: &'a str, rep: &SpectralReport) -> PlotInput<'a> {
    PlotInput {
        title,
        lambda_inf: rep.lambda_inf.to_f64(),
        bv_radius: rep.bv_radius.to_f64(),
        lambda_label: format!("Λ^inf ≈ {:.4} (orbit depth {}, {OPEN_QUALIFIER})", rep.lambda_inf.to_f64(), rep.orbit_depth),
        bv_label: format!("BV radius ≈ {:.4} (n = {})", rep.bv_radius.to_f64(), rep.n_max),
        spectra: rep.spectra.iter().map(|s| (s.m, s.values.clone())).collect(),
    }
}

fn ulam(g: &Global, command: &str, ms: &[usize], policy: BinPolicy, ns: &RangeInclusive<usize>) -> Result<bool> {
    let (map, weight) = setup(g)?;
    let rep = spectral_report(&map, &weight, ms, ns.clone(), policy)?;
    let out = Output::new(g, command)?;
    let rows: Vec<Vec<String>> = rep
        .spectra
        .iter()
        .map(|s| {
            let lead = s.leading().map_or("-".into(), |z| format!("{:.6}{:+.6}i", z.re, z.im));
            let second = s.moduli().nth(1).map_or("-".into(), |v| format!("{v:.6}"));
            vec![s.m.to_string(), lead, second, format!("{:.2e}", s.backward_error)]
        })
        .collect();
    println!("map {}, weight {}, bins {policy:?}", map.name(), g.weight);
    println!("Λ^inf ≈ {} (orbit depth {}), BV radius ≈ {} (n = {})", show(&rep.lambda_inf), rep.orbit_depth, show(&rep.bv_radius), rep.n_max);
    print!("{}", output::table(&["M", "leading", "|second|", "backward error"], &rows));
    let title = format!("{}: discretization spectrum", map.name());
    let svg = render(&plot_input(&title, &rep));
    let result = json!({
        "map": rep.map,
        "policy": format!("{policy:?}"),
        "lambda_inf": num(&rep.lambda_inf),
        "lambda_sup": num(&rep.lambda_sup),
        "bv_radius": num(&rep.bv_radius),
        "n_max": rep.n_max,
        "orbit_depth": rep.orbit_depth,
        "spectra": rep.spectra,
    });
    let json_name = if command == "report" { "report.json" } else { "ulam.json" };
    wrote(&[
        out.csv("eigenvalues.csv", &eigen_csv(&rep.spectra))?,
        out.raw("spectrum.svg", &svg)?,
        out.json(json_name, &result)?,
    ]);
    Ok(true)
}

fn report(g: &Global, ms: &[usize], ns: &RangeInclusive<usize>) -> Result<bool> {
    let depth = 2 * ns.end() + 2;
    orbits(g, depth)?;
    lambda(g, depth, Some(&format!("{}..{}", ns.start(), ns.end())))?;
    bv_radius(g, ns)?;
    ulam(g, "report", ms, BinPolicy::GammaAligned, ns)
}
