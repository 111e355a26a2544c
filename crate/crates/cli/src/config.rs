use std::ops::RangeInclusive;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use transfer_spectra::bounds::{make_example_map, ExampleMode, Itinerary, EXAMPLE_BITS};
use transfer_spectra::map_core::{builtins, MapSpec, PiecewiseMap};
use transfer_spectra::scalar::parse_rational;
use transfer_spectra::weight::Weight;
use transfer_spectra::{Poly, Scalar};

pub const MAP_HELP: &str = "builtin:doubling | builtin:tent | builtin:markov | builtin:beta:<p/q> | \
builtin:t10 | builtin:example:<m>:<itinerary> | path to a JSON map file";

/// Resolves a map source string.
pub fn load_map(source: &str, bits: u32) -> Result<PiecewiseMap> {
    let Some(rest) = source.strip_prefix("builtin:") else {
        let text = std::fs::read_to_string(Path::new(source)).with_context(|| format!("reading map file {source}"))?;
        let spec: MapSpec = serde_json::from_str(&text).with_context(|| format!("parsing map file {source}"))?;
        let name = Path::new(source).file_stem().and_then(|s| s.to_str()).unwrap_or("file").to_string();
        return Ok(spec.build()?.named(name));
    };
    let parts: Vec<&str> = rest.split(':').collect();
    let map = match parts.as_slice() {
        ["doubling"] => builtins::doubling(),
        ["tent"] => builtins::tent(),
        ["markov"] => builtins::markov_golden_like(),
        ["t10"] => builtins::example(10, Scalar::int(8))?.named("t10"),
        ["beta", b] => builtins::beta(parse_rational(b)?)?,
        ["example", m, it] => {
            let m: i64 = m.parse().map_err(|_| anyhow!("example map needs an integer m, got {m:?}"))?;
            make_example_map(m, &Itinerary::parse(it)?, bits, ExampleMode::Interval)?.map
        }
        ["example", m] => {
            let m: i64 = m.parse().map_err(|_| anyhow!("example map needs an integer m, got {m:?}"))?;
            make_example_map(m, &Itinerary::ThueMorse, bits, ExampleMode::Interval)?.map
        }
        _ => bail!("unknown map source {source:?}; expected {MAP_HELP}"),
    };
    Ok(map)
}

pub fn default_bits() -> u32 {
    EXAMPLE_BITS
}

/// `inverse-derivative`, `constant:<q>` or `poly:<c0>,<c1>,...` (same polynomial on every branch).
pub fn load_weight(spec: &str, map: &PiecewiseMap) -> Result<Weight> {
    if spec == "inverse-derivative" || spec == "srb" {
        return Ok(Weight::inverse_derivative(map));
    }
    if let Some(c) = spec.strip_prefix("constant:") {
        return Ok(Weight::constant(map, Scalar::from(parse_rational(c)?)));
    }
    if let Some(cs) = spec.strip_prefix("poly:") {
        let coeffs = cs.split(',').map(|c| parse_rational(c).map(Scalar::from)).collect::<transfer_spectra::Result<Vec<_>>>()?;
        let p = Poly::new(coeffs);
        let w = Weight::custom(map, vec![p; map.branches().len()])?;
        w.check_nonvanishing(map)?;
        return Ok(w);
    }
    bail!("unknown weight {spec:?}; use inverse-derivative, constant:<q> or poly:<c0>,<c1>,...")
}

/// `a..b`, `a..=b` (both inclusive) or a single `n`.
pub fn parse_range(s: &str) -> Result<RangeInclusive<usize>> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|_| anyhow!("bad range bound {t:?} in {s:?}"));
    let r = if let Some((a, b)) = s.split_once("..=") {
        num(a)?..=num(b)?
    } else if let Some((a, b)) = s.split_once("..") {
        num(a)?..=num(b)?
    } else {
        let n = num(s)?;
        n..=n
    };
    if r.is_empty() || *r.start() == 0 {
        bail!("range {s:?} must be nonempty and start at 1 or later");
    }
    Ok(r)
}

pub fn parse_list(s: &str) -> Result<Vec<usize>> {
    let v = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| anyhow!("bad list entry {t:?}")))
        .collect::<Result<Vec<_>>>()?;
    if v.is_empty() || v.contains(&0) {
        bail!("list {s:?} must contain positive entries");
    }
    Ok(v)
}
