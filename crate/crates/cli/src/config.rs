//! TOML scenario loading with `key=value` overrides.

use std::path::{Path, PathBuf};

use eip_core::scene::PressScenario;
use toml::{Table, Value};

use crate::error::CliError;

/// Reads `path`, applies overrides in order and resolves the mesh path
/// against the config file's directory.
pub fn load_scenario(path: &Path, overrides: &[String]) -> Result<PressScenario, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    let mut table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| CliError::config(format!("{}: {}", path.display(), one_line(&e.to_string()))))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let base = path.parent().unwrap_or(Path::new("."));
    resolve_mesh(&mut table, base);
    let scenario: PressScenario = Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(one_line(&e.to_string())))?;
    scenario.validate()?;
    Ok(scenario)
}

fn resolve_mesh(table: &mut Table, base: &Path) {
    if let Some(Value::String(mesh)) = table
        .get_mut("object")
        .and_then(Value::as_table_mut)
        .and_then(|o| o.get_mut("mesh"))
    {
        let p = PathBuf::from(&*mesh);
        if p.is_relative() {
            let joined = base.join(p);
            let resolved = std::fs::canonicalize(&joined).unwrap_or(joined);
            *mesh = resolved.to_string_lossy().into_owned();
        }
    }
}

/// `a.b.c=value` sets a dotted path; a bare `name=value` sets the unique
/// leaf with that name anywhere in the tree.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let value = parse_value(raw.trim());
    let path: Vec<String> = if key.contains('.') {
        key.split('.').map(str::to_owned).collect()
    } else {
        let mut hits = Vec::new();
        find_leaf(table, key, &mut Vec::new(), &mut hits);
        match hits.len() {
            0 => return Err(CliError::usage(format!("unknown config key '{key}'"))),
            1 => hits.pop().unwrap(),
            _ => {
                let names: Vec<String> = hits.iter().map(|h| h.join(".")).collect();
                return Err(CliError::usage(format!(
                    "config key '{key}' is ambiguous: {}",
                    names.join(", ")
                )));
            }
        }
    };
    set_path(table, &path, value).map_err(|_| CliError::usage(format!("unknown config key '{key}'")))
}

fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_owned()))
}

fn find_leaf(table: &Table, key: &str, prefix: &mut Vec<String>, hits: &mut Vec<Vec<String>>) {
    for (k, v) in table {
        prefix.push(k.clone());
        if k == key {
            hits.push(prefix.clone());
        } else if let Value::Table(t) = v {
            find_leaf(t, key, prefix, hits);
        }
        prefix.pop();
    }
}

/// Missing intermediate tables are created; misspelt keys are caught later
/// by the strict scenario schema.
fn set_path(table: &mut Table, path: &[String], value: Value) -> Result<(), ()> {
    match path {
        [] => Err(()),
        [leaf] => {
            table.insert(leaf.clone(), value);
            Ok(())
        }
        [head, rest @ ..] => match table
            .entry(head.clone())
            .or_insert_with(|| Value::Table(Table::new()))
        {
            Value::Table(t) => set_path(t, rest, value),
            _ => Err(()),
        },
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        r#"
        [material]
        young = 3.0
        [press]
        dt = 0.001
        direction = [0.0, 0.0, -1.0]
        [sensor.pose]
        translation = [0.0, 0.0, 0.0]
        [object]
        spacing = 0.1
        [sensor]
        spacing = 0.2
        "#
        .parse()
        .unwrap()
    }

    #[test]
    fn bare_leaf_override() {
        let mut t = table();
        apply_override(&mut t, "dt=1e-2").unwrap();
        assert_eq!(t["press"]["dt"].as_float(), Some(0.01));
        apply_override(&mut t, "translation=[1.0, 2.0, 3.0]").unwrap();
        assert_eq!(t["sensor"]["pose"]["translation"][2].as_float(), Some(3.0));
    }

    #[test]
    fn dotted_override() {
        let mut t = table();
        apply_override(&mut t, "material.young=7.5").unwrap();
        assert_eq!(t["material"]["young"].as_float(), Some(7.5));
        apply_override(&mut t, "material.poisson=0.3").unwrap();
        assert_eq!(t["material"]["poisson"].as_float(), Some(0.3));
    }

    #[test]
    fn ambiguous_and_unknown_keys() {
        let mut t = table();
        let e = apply_override(&mut t, "spacing=0.5").unwrap_err();
        assert!(e.message.contains("ambiguous"));
        assert!(apply_override(&mut t, "nope=1").is_err());
        assert!(apply_override(&mut t, "material.young.x=1").is_err());
        apply_override(&mut t, "grid.dx=1").unwrap();
        assert_eq!(t["grid"]["dx"].as_integer(), Some(1));
        assert!(apply_override(&mut t, "dt").is_err());
    }

    #[test]
    fn strings_fall_back_to_raw_text() {
        assert_eq!(parse_value("atomic"), Value::String("atomic".into()));
        assert_eq!(parse_value("\"atomic\""), Value::String("atomic".into()));
        assert_eq!(parse_value("4"), Value::Integer(4));
    }
}
