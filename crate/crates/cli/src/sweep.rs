//! Sweep argument parsing: `name=v1,v2,...`, `name=start:stop:count`
//! (linear), or `name=log:start:stop:count` (log-spaced), where `name` is
//! one of the sweepable scenario parameters.

use aoikit_core::config::SWEEPABLE;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub values: Vec<f64>,
}

fn usage_err(msg: &str) -> String {
    format!("{msg}\nsweepable parameters: {}", SWEEPABLE.join(", "))
}

fn parse_num(tok: &str, what: &str) -> Result<f64, String> {
    tok.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| usage_err(&format!("{what} '{tok}' is not a finite number")))
}

fn parse_count(tok: &str) -> Result<usize, String> {
    tok.trim()
        .parse::<usize>()
        .ok()
        .filter(|&n| n >= 2)
        .ok_or_else(|| usage_err(&format!("range count '{tok}' must be an integer >= 2")))
}

pub fn parse_sweep(spec: &str) -> Result<SweepSpec, String> {
    let (name, rest) = spec
        .split_once('=')
        .ok_or_else(|| usage_err("expected '<name>=<values>'"))?;
    let name = name.trim();
    if !SWEEPABLE.contains(&name) {
        return Err(usage_err(&format!("unknown sweep parameter '{name}'")));
    }
    let rest = rest.trim();
    if rest.is_empty() {
        return Err(usage_err("empty value list"));
    }
    let values = if let Some(range) = rest.strip_prefix("log:") {
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(usage_err("log range must be 'log:start:stop:count'"));
        }
        let (start, stop) = (parse_num(parts[0], "start")?, parse_num(parts[1], "stop")?);
        if start <= 0.0 || stop <= 0.0 {
            return Err(usage_err("log range endpoints must be > 0"));
        }
        let count = parse_count(parts[2])?;
        let (a, b) = (start.ln(), stop.ln());
        (0..count)
            .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
            .collect()
    } else if rest.contains(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(usage_err("range must be 'start:stop:count'"));
        }
        let (start, stop) = (parse_num(parts[0], "start")?, parse_num(parts[1], "stop")?);
        let count = parse_count(parts[2])?;
        (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect()
    } else {
        rest.split(',')
            .map(|tok| parse_num(tok, "value"))
            .collect::<Result<Vec<f64>, String>>()?
    };
    Ok(SweepSpec { name: name.to_string(), values })
}
