//! Flat `key = value` experiment configuration.
//!
//! Each subcommand has a fixed list of keys with defaults. A config file and
//! command-line overrides may set any of them; unknown keys are rejected.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    SimulateSpde,
    Couple,
    SignedExcursions,
    SdeSticky,
    GirsanovSurvival,
    LemmaCheck,
}

impl Command {
    pub const ALL: [Command; 6] = [
        Command::SimulateSpde,
        Command::Couple,
        Command::SignedExcursions,
        Command::SdeSticky,
        Command::GirsanovSurvival,
        Command::LemmaCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::SimulateSpde => "simulate-spde",
            Command::Couple => "couple",
            Command::SignedExcursions => "signed-excursions",
            Command::SdeSticky => "sde-sticky",
            Command::GirsanovSurvival => "girsanov-survival",
            Command::LemmaCheck => "lemma-check",
        }
    }

    /// Keys and default values, in manifest order.
    pub fn defaults(self) -> &'static [(&'static str, &'static str)] {
        match self {
            Command::SimulateSpde => &[
                ("seed", "1"),
                ("replicates", "100"),
                ("half_width", "10"),
                ("n_cells", "512"),
                ("ratio", "0.25"),
                ("p", "0.25"),
                ("b", "1"),
                ("src_scale", "1"),
                ("t_end", "1"),
                ("record_every", "0"),
                ("k", "8"),
                ("k_list", "8,16,32"),
            ],
            Command::Couple => &[
                ("seed", "1"),
                ("replicates", "100"),
                ("half_width", "4"),
                ("n_cells", "256"),
                ("ratio", "0.25"),
                ("zero_mass_factor", "10"),
                ("p", "0.25"),
                ("b", "1"),
                ("eps", "0.05"),
                ("x0", "0.5"),
                ("k", "8"),
                ("k_list", "8,16,32"),
                ("holder_every", "8"),
                ("max_excursions", "0"),
            ],
            Command::SignedExcursions => &[
                ("seed", "1"),
                ("replicates", "40"),
                ("half_width", "4"),
                ("n_cells", "128"),
                ("ratio", "0.25"),
                ("zero_mass_factor", "10"),
                ("p", "0.25"),
                ("b", "1"),
                ("eps", "0.25"),
                ("t_list", "4,16,64"),
                ("mass_every", "0"),
                ("k", "8"),
            ],
            Command::SdeSticky => &[
                ("seed", "1"),
                ("replicates", "1000"),
                ("b", "1"),
                ("p", "0.25"),
                ("scheme", "exact"),
                ("mode", "hitting"),
                ("x_start", "0.1"),
                ("level", "1"),
                ("t_end", "10"),
                ("dt", "0.0001"),
                ("table_nodes", "2048"),
                ("k", "8"),
            ],
            Command::GirsanovSurvival => &[
                ("seed", "1"),
                ("replicates", "10000"),
                ("q", "0.25"),
                ("y0", "1"),
                ("t_list", "4,16,64,256"),
                ("eta", "0.01"),
                ("y_floor", "1e-8"),
                ("scale_eps", "0.1"),
                ("ks_replicates", "10000"),
                ("p", "0.25"),
                ("k", "8"),
            ],
            Command::LemmaCheck => &[
                ("seed", "1"),
                ("replicates", "1000"),
                ("beta", "0.25"),
                ("alphas", "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"),
                ("c_min", "0.1"),
                ("c_max", "100"),
                ("w_min", "0.1"),
                ("w_max", "10"),
                ("p", "0.25"),
                ("k", "8"),
            ],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown subcommand '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    entries: Vec<(&'static str, String)>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            entries: command.defaults().iter().map(|&(k, v)| (k, v.to_string())).collect(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim();
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(e) => {
                e.1 = value.trim().to_string();
                Ok(())
            }
            None => Err(CliError::Config(format!(
                "unknown key '{key}' for {}; known keys: {}",
                self.command,
                self.entries.iter().map(|e| e.0).collect::<Vec<_>>().join(", ")
            ))),
        }
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got '{line}'", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    /// Every key with its current value.
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str)> {
        self.entries.iter().map(|(k, v)| (*k, v.as_str()))
    }

    pub fn has(&self, key: &str) -> bool {
        self.entries.iter().any(|e| e.0 == key)
    }

    pub fn str(&self, key: &str) -> &str {
        self.entries
            .iter()
            .find(|e| e.0 == key)
            .map(|e| e.1.as_str())
            .unwrap_or_else(|| panic!("{key} is not a key of {}", self.command))
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, CliError> {
        let v = self.str(key);
        v.parse()
            .map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v: f64 = self.get(key)?;
        if !v.is_finite() {
            return Err(CliError::Config(format!("{key}: {v} is not finite")));
        }
        Ok(v)
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self.str(key);
        let out = v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| CliError::Config(format!("{key}: cannot parse '{s}' in '{v}'")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        if out.is_empty() {
            return Err(CliError::Config(format!("{key} is empty")));
        }
        Ok(out)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.get("seed")
    }

    pub fn replicates(&self) -> Result<u64, CliError> {
        let n: u64 = self.get("replicates")?;
        if n == 0 {
            return Err(CliError::Config("replicates must be at least 1".into()));
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_file_text() {
        let mut c = ExperimentConfig::new(Command::Couple);
        c.apply_text("# comment\n eps = 0.1 \n\nx0=0.6 # inline\n").unwrap();
        assert_eq!(c.f64("eps").unwrap(), 0.1);
        assert_eq!(c.f64("x0").unwrap(), 0.6);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut c = ExperimentConfig::new(Command::LemmaCheck);
        assert!(c.set("eps", "0.1").is_err());
        assert!(c.apply_text("beta 0.2").is_err());
        c.set("beta", "abc").unwrap();
        assert!(c.f64("beta").is_err());
        c.set("alphas", "0.1,,0.2").unwrap();
        assert!(c.list("alphas").is_err());
    }

    #[test]
    fn command_names_round_trip() {
        for c in Command::ALL {
            assert_eq!(c.name().parse::<Command>().unwrap(), c);
        }
    }
}
