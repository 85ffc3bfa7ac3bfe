//! `--config FILE`: `key = value` lines turned into `--key value` flags,
//! placed right after the subcommand so explicit flags still win.

use std::ffi::OsString;

const SUBCOMMANDS: [&str; 7] = ["generate", "train", "eval", "augment", "saliency", "serve", "inspect"];

fn parse_config(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() || line.starts_with('[') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| format!("config line {}: expected key = value", n + 1))?;
        let key = key.trim().replace('_', "-");
        let value = value.trim().trim_matches('"');
        if key.is_empty() {
            return Err(format!("config line {}: empty key", n + 1));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(value.into());
            }
        }
    }
    Ok(out)
}

pub fn expand_args(mut argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut config = None;
    let mut i = 1;
    while i < argv.len() {
        let arg = argv[i].to_string_lossy().into_owned();
        if arg == "--config" {
            if i + 1 >= argv.len() {
                return Err("--config needs a file".into());
            }
            config = Some(argv.remove(i + 1));
            argv.remove(i);
        } else if let Some(path) = arg.strip_prefix("--config=") {
            config = Some(path.into());
            argv.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = config else { return Ok(argv) };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {}: {e}", path.to_string_lossy()))?;
    let extra = parse_config(&text)?;
    let at = argv
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
        .ok_or("--config needs a subcommand")?;
    argv.splice(at + 1..at + 1, extra);
    Ok(argv)
}
