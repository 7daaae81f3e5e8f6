//! Parsers for the textual flag values.

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use pulse_spectra::{Branch, CgleParams, InitialCondition, Path};

/// `1.5`, `-2i`, `i`, `0.3-0.1i`, `1e-3+2e-2i`.
pub fn complex(s: &str) -> Result<Complex64> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || anyhow!("cannot parse complex number '{s}'");
    let Some(body) = t.strip_suffix('i') else {
        return Ok(Complex64::new(t.parse().map_err(|_| bad())?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        v => v.parse().map_err(|_| bad())?,
    };
    Ok(Complex64::new(re.parse().map_err(|_| bad())?, im))
}

fn pair(s: &str) -> Result<(Complex64, Complex64)> {
    let (a, b) = s.split_once(',').ok_or_else(|| anyhow!("expected two comma-separated values in '{s}'"))?;
    Ok((complex(a)?, complex(b)?))
}

/// `segment:z0,z1` or `ray-to-edge:z0,plus|minus`.
pub fn path(s: &str) -> Result<Path> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| anyhow!("path '{s}' has no kind prefix"))?;
    match kind {
        "segment" => {
            let (from, to) = pair(rest)?;
            Ok(Path::Segment { from, to })
        }
        "ray-to-edge" => {
            let (from, branch) = rest.split_once(',').ok_or_else(|| anyhow!("expected z0,branch in '{s}'"))?;
            let branch = match branch.trim() {
                "plus" | "+" => Branch::Plus,
                "minus" | "-" => Branch::Minus,
                b => bail!("unknown branch '{b}', use plus or minus"),
            };
            Ok(Path::RayToEdge { from: complex(from)?, branch })
        }
        k => bail!("unknown path kind '{k}', use segment or ray-to-edge"),
    }
}

/// `rect:z0,z1` with opposite corners.
pub fn region(s: &str) -> Result<(Complex64, Complex64)> {
    let rest = s.strip_prefix("rect:").ok_or_else(|| anyhow!("region '{s}' must look like rect:z0,z1"))?;
    pair(rest)
}

/// `gaussian:A,w` or `sech:A`.
pub fn init(s: &str) -> Result<InitialCondition> {
    let (kind, rest) = s.split_once(':').ok_or_else(|| anyhow!("initial condition '{s}' has no kind prefix"))?;
    let nums = rest
        .split(',')
        .map(|v| v.trim().parse::<f64>().with_context(|| format!("bad number '{v}' in '{s}'")))
        .collect::<Result<Vec<_>>>()?;
    match (kind, nums.as_slice()) {
        ("gaussian", &[amplitude, width]) => Ok(InitialCondition::Gaussian { amplitude, width }),
        ("sech", &[amplitude]) => Ok(InitialCondition::Sech { amplitude }),
        _ => bail!("initial condition must be gaussian:A,w or sech:A, got '{s}'"),
    }
}

fn preset(name: &str) -> Option<CgleParams> {
    match name {
        "nlse" => Some(CgleParams::nlse()),
        "fiber-laser" => Some(CgleParams::fiber_laser()),
        _ => None,
    }
}

/// A JSON file, or a comma list of an optional leading preset and `key=value` overrides.
/// Without a preset unspecified coefficients are zero.
pub fn params(s: &str) -> Result<CgleParams> {
    let p = if std::path::Path::new(s).is_file() {
        let text = std::fs::read_to_string(s).with_context(|| format!("reading {s}"))?;
        serde_json::from_str(&text).with_context(|| format!("malformed parameter file {s}"))?
    } else {
        let mut tokens = s.split(',').map(str::trim).filter(|t| !t.is_empty()).peekable();
        let mut p = match tokens.peek().and_then(|t| preset(t)) {
            Some(p) => {
                tokens.next();
                p
            }
            None => CgleParams { d: 0.0, beta: 0.0, gamma: 0.0, nu: 0.0, delta: 0.0, epsilon: 0.0, mu: 0.0, alpha: 0.0 },
        };
        for tok in tokens {
            let (k, v) = tok.split_once('=').ok_or_else(|| anyhow!("'{tok}' is neither a preset, a file nor key=value"))?;
            let v: f64 = v.parse().with_context(|| format!("bad value in '{tok}'"))?;
            let slot = match k {
                "D" | "d" => &mut p.d,
                "beta" => &mut p.beta,
                "gamma" => &mut p.gamma,
                "nu" => &mut p.nu,
                "delta" => &mut p.delta,
                "epsilon" => &mut p.epsilon,
                "mu" => &mut p.mu,
                "alpha" => &mut p.alpha,
                _ => bail!("unknown parameter '{k}'"),
            };
            *slot = v;
        }
        p
    };
    p.validate()?;
    Ok(p)
}
