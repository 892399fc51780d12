//! Config-file support for the CLI: a `key=value` file may supply any flag;
//! values given on the command line win over the file.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::learn::parse_kv;

#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn empty() -> Config {
        Config::default()
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Config {
            values: parse_kv(&text)?,
        })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Command line first, then the config file, then the built-in default.
    pub fn resolve<T: Clone>(
        &self,
        cli: Option<T>,
        key: &str,
        parse: impl Fn(&str) -> Result<T>,
        default: T,
    ) -> Result<T> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => parse(raw),
            None => Ok(default),
        }
    }

    /// Same, but with no default: missing everywhere is an error.
    pub fn resolve_required<T>(
        &self,
        cli: Option<T>,
        key: &str,
        parse: impl Fn(&str) -> Result<T>,
    ) -> Result<T> {
        if let Some(v) = cli {
            return Ok(v);
        }
        match self.get(key) {
            Some(raw) => parse(raw),
            None => Err(Error::InvalidParam(format!(
                "missing required option --{key} (not on command line or in config file)"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_u32(s: &str) -> Result<u32> {
        s.parse()
            .map_err(|_| Error::InvalidParam(format!("bad u32 {s:?}")))
    }

    #[test]
    fn cli_wins_over_config_wins_over_default() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "# comment\nwindow = 5\n").unwrap();
        let cfg = Config::load(&p).unwrap();
        assert_eq!(cfg.resolve(Some(3), "window", parse_u32, 8).unwrap(), 3);
        assert_eq!(cfg.resolve(None, "window", parse_u32, 8).unwrap(), 5);
        assert_eq!(cfg.resolve(None, "other", parse_u32, 8).unwrap(), 8);
    }

    #[test]
    fn required_missing_everywhere_errors() {
        let cfg = Config::empty();
        assert!(cfg
            .resolve_required(None::<String>, "index", |s| Ok(s.to_string()))
            .is_err());
        assert_eq!(
            cfg.resolve_required(Some("i.idx".to_string()), "index", |s| Ok(s.to_string()))
                .unwrap(),
            "i.idx"
        );
    }

    #[test]
    fn config_file_parse_errors_surface() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.conf");
        std::fs::write(&p, "windoweight\n").unwrap();
        assert!(Config::load(&p).is_err());
        assert!(Config::load(&dir.path().join("missing.conf")).is_err());
    }
}
