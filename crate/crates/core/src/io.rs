//! CSV profiles and flat key-value config files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::radial::{RadialFunction, RadialGrid};

pub fn short_hash(s: &str) -> String {
    Sha256::digest(s.as_bytes()).iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// CSV text with header `r,u` followed by any extra named columns.
pub fn profile_csv(u: &RadialFunction, extra: &[(&str, &[f64])]) -> String {
    let mut s = String::from("r,u");
    for (name, _) in extra {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    for (i, (r, v)) in u.grid().nodes().iter().zip(u.values()).enumerate() {
        let _ = write!(s, "{r:.17e},{v:.17e}");
        for (_, col) in extra {
            let _ = write!(s, ",{:.17e}", col[i]);
        }
        s.push('\n');
    }
    s
}

pub fn write_profile(path: &Path, u: &RadialFunction, extra: &[(&str, &[f64])]) -> Result<()> {
    fs::write(path, profile_csv(u, extra))?;
    Ok(())
}

/// Reads `r,u` columns. End laws follow the slopes of the outermost nodes.
pub fn read_profile(path: &Path) -> Result<RadialFunction> {
    let text = fs::read_to_string(path)?;
    parse_profile(&text)
}

pub fn parse_profile(text: &str) -> Result<RadialFunction> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty profile".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let ri = cols.iter().position(|c| *c == "r").ok_or_else(|| Error::Parse("no r column".into()))?;
    let ui = cols.iter().position(|c| *c == "u").ok_or_else(|| Error::Parse("no u column".into()))?;
    let mut r = Vec::new();
    let mut u = Vec::new();
    for (k, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |i: usize| -> Result<f64> {
            f.get(i)
                .ok_or_else(|| Error::Parse(format!("row {} too short", k + 2)))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", k + 2)))
        };
        r.push(get(ri)?);
        u.push(get(ui)?);
    }
    let grid = RadialGrid::from_nodes(r)?;
    RadialFunction::with_end_slopes(grid, u, (0.0, 0.0))
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, val) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", k + 1)))?;
        out.insert(key.trim().to_string(), val.trim().to_string());
    }
    Ok(out)
}
