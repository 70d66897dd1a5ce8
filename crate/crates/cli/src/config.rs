//! Flat `key = value` configuration files.
//!
//! Keys mirror the long flag names (`space`, `seed`, `max-iters`, ...). Keys
//! before the first `[section]` apply to every command; keys under
//! `[iterate]`, `[check-axioms]`, ... apply only to that command. Flags
//! always win over file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

/// A configuration or usage problem; maps to exit status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<gfix_core::Error> for ConfigError {
    fn from(e: gfix_core::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub type ConfigResult<T> = Result<T, ConfigError>;

#[derive(Debug, Default, Clone)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn parse(text: &str, command: &str) -> ConfigResult<Self> {
        let mut values = BTreeMap::new();
        let mut section: Option<String> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = Some(name.trim().to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("config line {}: expected key = value", lineno + 1)))?;
            if section.as_deref().is_none_or(|s| s == command) {
                values.insert(key.trim().to_string(), value.trim().to_string());
            }
        }
        Ok(FileConfig { values })
    }

    pub fn load(path: Option<&Path>, command: &str) -> ConfigResult<Self> {
        match path {
            None => Ok(FileConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
                FileConfig::parse(&text, command)
            }
        }
    }

    /// Flag value if given, otherwise the parsed file value.
    pub fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> ConfigResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        self.values
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| ConfigError(format!("config key `{key}` = `{v}`: {e}")))
            })
            .transpose()
    }
}

/// Comma-separated reals.
pub fn parse_reals(s: &str) -> ConfigResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("`{t}` is not a real number")))
        })
        .collect()
}

/// `a=0.5,b=0.1` pairs.
pub fn parse_coeffs(s: &str) -> ConfigResult<Vec<(String, f64)>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|pair| {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| ConfigError(format!("coefficient `{pair}` must look like name=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| ConfigError(format!("coefficient `{pair}` has a non-numeric value")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

/// A point given as one value (broadcast) or exactly `dim` values.
pub fn parse_point(s: &str, dim: usize) -> ConfigResult<gfix_core::Point> {
    let v = parse_reals(s)?;
    let coords = match v.len() {
        1 => vec![v[0]; dim],
        n if n == dim => v,
        n => return Err(ConfigError(format!("point `{s}` has {n} coordinates, expected 1 or {dim}"))),
    };
    Ok(gfix_core::Point::new(coords)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let text = "space = max-2  # shared\nseed=3\n[iterate]\nalpha = 0.25\n[check-axioms]\nseed = 9\n";
        let it = FileConfig::parse(text, "iterate").unwrap();
        assert_eq!(it.pick::<String>(None, "space").unwrap().as_deref(), Some("max-2"));
        assert_eq!(it.pick::<u64>(None, "seed").unwrap(), Some(3));
        assert_eq!(it.pick::<f64>(None, "alpha").unwrap(), Some(0.25));
        let ax = FileConfig::parse(text, "check-axioms").unwrap();
        assert_eq!(ax.pick::<u64>(None, "seed").unwrap(), Some(9));
        assert_eq!(ax.pick::<f64>(None, "alpha").unwrap(), None);
        assert_eq!(ax.pick(Some(4u64), "seed").unwrap(), Some(4));
        assert!(ax.pick::<u64>(None, "space").is_err());
        assert!(FileConfig::parse("oops", "x").is_err());
    }

    #[test]
    fn value_parsers() {
        assert_eq!(parse_reals("1, -2.5").unwrap(), vec![1.0, -2.5]);
        assert!(parse_reals("1,x").is_err());
        assert_eq!(parse_coeffs("a=0.5,b=0.1").unwrap(), vec![("a".into(), 0.5), ("b".into(), 0.1)]);
        assert!(parse_coeffs("a0.5").is_err());
        assert_eq!(parse_point("2", 3).unwrap().coords(), &[2.0, 2.0, 2.0]);
        assert!(parse_point("1,2", 3).is_err());
    }
}
