//! Flat `key = value` configuration files.
//!
//! Keys are the long flag names of the chosen subcommand. Blank lines and
//! lines starting with `#` are ignored. Flags given on the command line win.

use std::collections::BTreeMap;

use crate::error::{invalid, CliResult};

pub fn parse(text: &str) -> CliResult<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid(format!("config line {}: expected key = value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(invalid(format!("config line {}: empty key", n + 1)));
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(invalid(format!("config line {}: duplicate key {k:?}", n + 1)));
        }
    }
    Ok(out)
}

/// Turns config entries into flags for `known` keys (`name -> takes_value`)
/// and rejects the rest. Boolean flags accept `true`/`false`.
pub fn to_args(entries: &BTreeMap<String, String>, known: &BTreeMap<String, bool>) -> CliResult<Vec<String>> {
    let mut args = Vec::new();
    for (k, v) in entries {
        let takes_value = *known
            .get(k)
            .ok_or_else(|| invalid(format!("unknown config key {k:?}")))?;
        if takes_value {
            args.push(format!("--{k}"));
            args.push(v.clone());
        } else {
            match v.as_str() {
                "true" => args.push(format!("--{k}")),
                "false" => {}
                _ => return Err(invalid(format!("config key {k:?} expects true or false"))),
            }
        }
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn known() -> BTreeMap<String, bool> {
        [("beta".to_string(), true), ("json".to_string(), false)].into_iter().collect()
    }

    #[test]
    fn parses_and_converts() {
        let e = parse("# comment\n beta = 0.6\n\njson=true\n").unwrap();
        assert_eq!(to_args(&e, &known()).unwrap(), vec!["--beta", "0.6", "--json"]);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let e = parse("gamma = 1").unwrap();
        assert!(to_args(&e, &known()).is_err());
        assert!(parse("beta 0.6").is_err());
        assert!(parse("beta = 1\nbeta = 2").is_err());
        let e = parse("json = maybe").unwrap();
        assert!(to_args(&e, &known()).is_err());
    }
}
