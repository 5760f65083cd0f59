use std::collections::BTreeMap;
use std::path::Path;

use flatsaddle::potentials::{load_potential_file, PotentialModel, PotentialSpec};

use crate::error::{usage, CliResult};

/// `k=v` pairs into a map.
pub fn params(raw: &[String]) -> CliResult<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for item in raw {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| usage(format!("parameter '{item}' is not of the form k=v")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| usage(format!("parameter '{k}' has non-numeric value '{v}'")))?;
        out.insert(k.trim().to_string(), v);
    }
    Ok(out)
}

/// Points separated by ';', coordinates by ','.
pub fn points(raw: &str) -> CliResult<Vec<Vec<f64>>> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|p| {
            p.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|_| usage(format!("bad coordinate '{c}' in point '{p}'"))))
                .collect()
        })
        .collect()
}

/// Either `start:stop:count` (inclusive, evenly spaced) or a comma list.
pub fn grid(raw: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| usage(format!("bad grid start in '{raw}'")))?;
        let b: f64 = parts[1].trim().parse().map_err(|_| usage(format!("bad grid stop in '{raw}'")))?;
        let n: usize = parts[2].trim().parse().map_err(|_| usage(format!("bad grid count in '{raw}'")))?;
        return match n {
            0 => Err(usage("grid count must be positive")),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    let out: CliResult<Vec<f64>> = raw
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| usage(format!("bad grid value '{v}'"))))
        .collect();
    let out = out?;
    if out.is_empty() {
        return Err(usage("empty grid"));
    }
    Ok(out)
}

/// A file path (if it exists) or a built-in family name.
pub fn potential(name: Option<&str>, params: &BTreeMap<String, f64>) -> CliResult<PotentialModel> {
    let name = name.ok_or_else(|| usage("this command needs --potential <file|name>"))?;
    let spec = if Path::new(name).is_file() {
        load_potential_file(Path::new(name))?
    } else {
        PotentialSpec::from_name(name, params)?
    };
    Ok(spec.build()?)
}
