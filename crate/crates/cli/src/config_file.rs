//! Flat `key = value` config files mirroring the flag names. `#` starts a
//! comment; keys may appear once.

use std::collections::BTreeMap;
use std::path::Path;

use crate::Failure;

pub type ConfigMap = BTreeMap<String, String>;

pub fn load(path: &Path) -> Result<ConfigMap, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse(&text).map_err(|msg| Failure::Usage(format!("{}: {msg}", path.display())))
}

pub fn parse(text: &str) -> Result<ConfigMap, String> {
    let mut map = ConfigMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(idx) => &raw[..idx],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected `key = value`, got {raw:?}", lineno + 1));
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(format!("line {}: empty key or value", lineno + 1));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(format!("line {}: duplicate key {key:?}", lineno + 1));
        }
    }
    Ok(map)
}

/// Rejects keys outside the command's vocabulary so typos fail loudly.
pub fn check_keys(map: &ConfigMap, allowed: &[&str]) -> Result<(), Failure> {
    for key in map.keys() {
        if !allowed.contains(&key.as_str()) {
            return Err(Failure::Usage(format!(
                "unknown config key {key:?}; allowed: {}",
                allowed.join(", ")
            )));
        }
    }
    Ok(())
}

/// Typed lookup helpers; a flag value always wins over the file.
pub fn resolve<T: std::str::FromStr>(
    flag: Option<T>,
    map: &ConfigMap,
    key: &str,
) -> Result<Option<T>, Failure> {
    if let Some(v) = flag {
        return Ok(Some(v));
    }
    match map.get(key) {
        Some(raw) => raw
            .parse::<T>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("config key {key} has unparseable value {raw:?}"))),
        None => Ok(None),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_blanks() {
        let map = parse("# header\n g = 0.1 \n\ndt = 0.05 # inline\n").unwrap();
        assert_eq!(map.get("g").unwrap(), "0.1");
        assert_eq!(map.get("dt").unwrap(), "0.05");
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse("just words\n").is_err());
        assert!(parse("g = \n").is_err());
        assert!(parse("g = 1\ng = 2\n").is_err());
    }
}
