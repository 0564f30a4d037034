//! TOML configuration files, turned into command-line flags.
//!
//! Top-level keys apply to every subcommand that has a flag of that name; a
//! table named after a subcommand applies to that subcommand only. Keys are
//! flag names with `_` or `-`. The generated flags are placed before the
//! user's own, and since later flags override earlier ones, the command line
//! always wins.

use std::path::Path;

use clap::CommandFactory;
use toml::Value;

use crate::args::Cli;

/// Path given with `--config`, if any.
pub fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

fn scalar(key: &str, v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(i) => Ok(i.to_string()),
        Value::Float(f) => Ok(f.to_string()),
        other => Err(format!("config key '{key}' has unsupported value {other}")),
    }
}

fn to_flags(key: &str, v: &Value) -> Result<Vec<String>, String> {
    let flag = format!("--{}", key.replace('_', "-"));
    Ok(match v {
        Value::Boolean(true) => vec![flag],
        Value::Boolean(false) => vec![],
        Value::Array(items) => {
            let parts = items.iter().map(|i| scalar(key, i)).collect::<Result<Vec<_>, _>>()?;
            vec![flag, parts.join(",")]
        }
        other => vec![flag, scalar(key, other)?],
    })
}

/// Flags for `subcommand` read from the config file at `path`.
pub fn flags_for(path: &Path, subcommand: &str) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    flags_from_str(&text, subcommand).map_err(|e| format!("{}: {e}", path.display()))
}

pub fn flags_from_str(text: &str, subcommand: &str) -> Result<Vec<String>, String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    let cmd = Cli::command();
    let sub_names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    let sub = cmd
        .find_subcommand(subcommand)
        .ok_or_else(|| format!("unknown subcommand '{subcommand}'"))?;
    let accepts = |c: &clap::Command, key: &str| {
        let long = key.replace('_', "-");
        c.get_arguments().any(|a| a.get_long() == Some(long.as_str()))
    };
    let global = |key: &str| key == "config" || key == "jobs" || key == "verbose";

    // Section flags go last so they override top-level ones.
    let mut out = Vec::new();
    let mut section_flags = Vec::new();
    for (key, value) in &table {
        if sub_names.contains(key) {
            let Value::Table(section) = value else {
                return Err(format!("'{key}' must be a table"));
            };
            if key != subcommand {
                continue;
            }
            for (k, v) in section {
                if !accepts(sub, k) {
                    return Err(format!("'{subcommand}' has no option '{k}'"));
                }
                section_flags.extend(to_flags(k, v)?);
            }
        } else if global(key) {
            return Err(format!("'{key}' can only be given on the command line"));
        } else if accepts(sub, key) {
            out.extend(to_flags(key, value)?);
        } else if !cmd.get_subcommands().any(|s| accepts(s, key)) {
            return Err(format!("unknown option '{key}'"));
        }
    }
    out.extend(section_flags);
    Ok(out)
}

/// `argv` with the config flags inserted right after the subcommand name.
pub fn expand(argv: Vec<String>) -> Result<Vec<String>, String> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let names: Vec<String> = Cli::command().get_subcommands().map(|s| s.get_name().to_string()).collect();
    let Some(pos) = argv.iter().skip(1).position(|a| names.contains(a)).map(|p| p + 1) else {
        return Ok(argv);
    };
    let flags = flags_for(Path::new(&path), &argv[pos])?;
    let mut out = argv[..=pos].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn finds_config_path() {
        assert_eq!(config_path(&args("p --config a.toml train")), Some("a.toml".into()));
        assert_eq!(config_path(&args("p train --config=b.toml")), Some("b.toml".into()));
        assert_eq!(config_path(&args("p train -- --config x")), None);
    }

    #[test]
    fn sections_and_top_level_keys() {
        let text = r#"
            seed = 7
            [train]
            model = "mlp"
            epochs = 3
            [drawbar]
            tolerances = [5, 2, 1]
            min_abs_fx = 1.5
        "#;
        assert_eq!(flags_from_str(text, "train").unwrap(), args("--seed 7 --epochs 3 --model mlp"));
        assert_eq!(
            flags_from_str(text, "drawbar").unwrap(),
            args("--min-abs-fx 1.5 --tolerances 5,2,1")
        );
    }

    #[test]
    fn section_beats_top_level() {
        let flags = flags_from_str("tolerances = [1]\n[drawbar]\ntolerances = [5]\n", "drawbar").unwrap();
        assert_eq!(flags, args("--tolerances 1 --tolerances 5"));
    }

    #[test]
    fn booleans_become_switches() {
        assert_eq!(flags_from_str("[extract]\nno_ratio = true", "extract").unwrap(), args("--no-ratio"));
        assert!(flags_from_str("[extract]\nno_ratio = false", "extract").unwrap().is_empty());
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(flags_from_str("[train]\nbogus = 1", "train").is_err());
        assert!(flags_from_str("bogus = 1", "train").is_err());
        assert!(flags_from_str("jobs = 2", "train").is_err());
        assert!(flags_from_str("train = 1", "train").is_err());
        assert!(flags_from_str("not toml", "train").is_err());
    }
}
