//! Flat key=value config files. Command-line flags always win; the file only
//! fills in flags the user did not pass.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};

#[derive(Debug, Default)]
pub struct ConfigFile {
    values: HashMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> Result<ConfigFile> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let body = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut values = HashMap::new();
        for (lineno, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                bail!(
                    "{}: line {}: expected key=value, got '{line}'",
                    path.display(),
                    lineno + 1
                );
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    /// flag > config[key] > default.
    pub fn resolve<T: FromStr + Clone>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map_err(|e| anyhow::anyhow!("config key '{key}': cannot parse '{raw}': {e}")),
            None => Ok(default),
        }
    }

    /// Like `resolve` but the setting may stay unset.
    pub fn resolve_opt<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.values.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| anyhow::anyhow!("config key '{key}': cannot parse '{raw}': {e}")),
            None => Ok(None),
        }
    }

    /// Boolean switches: a passed flag turns the setting on; the config file
    /// can set it either way.
    pub fn resolve_switch(&self, flag: bool, key: &str) -> Result<bool> {
        if flag {
            return Ok(true);
        }
        match self.values.get(key) {
            Some(raw) => match raw.as_str() {
                "true" | "1" | "yes" | "on" => Ok(true),
                "false" | "0" | "no" | "off" => Ok(false),
                other => bail!("config key '{key}': expected a boolean, got '{other}'"),
            },
            None => Ok(false),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn precedence_flag_over_config_over_default() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# comment\nepochs = 123\nlr=0.5").unwrap();
        let cfg = ConfigFile::load(Some(&path)).unwrap();
        assert_eq!(cfg.resolve(Some(7usize), "epochs", 1).unwrap(), 7);
        assert_eq!(cfg.resolve(None::<usize>, "epochs", 1).unwrap(), 123);
        assert_eq!(cfg.resolve(None::<usize>, "runs", 5).unwrap(), 5);
        assert_eq!(cfg.resolve(None::<f64>, "lr", 1e-3).unwrap(), 0.5);
    }

    #[test]
    fn bad_line_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "epochs").unwrap();
        assert!(ConfigFile::load(Some(&path)).is_err());
    }

    #[test]
    fn switch_semantics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "log-scaling=true").unwrap();
        let cfg = ConfigFile::load(Some(&path)).unwrap();
        assert!(cfg.resolve_switch(false, "log-scaling").unwrap());
        assert!(!cfg.resolve_switch(false, "penalty-per-sample").unwrap());
        assert!(cfg.resolve_switch(true, "penalty-per-sample").unwrap());
    }
}
