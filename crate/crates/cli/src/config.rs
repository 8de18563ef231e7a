use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use hpricing::hiddenlp::{GridProfile, GridSpec};
use hpricing::mechanisms::SimConfig;
use hpricing::{ReductionConfig, Tolerances};

use crate::args::Format;
use crate::Failure;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tolerances: Tolerances,
    pub reduction: ReductionConfig,
    /// Overrides the profile grid when present.
    pub grid: Option<GridSpec>,
    pub simulation: SimConfig,
    pub format: Option<Format>,
    pub profile: Option<GridProfile>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        parse_by_extension(path, &text)
    }

    pub fn grid(&self) -> GridSpec {
        self.grid.unwrap_or_else(|| GridSpec::profile(self.profile.unwrap_or_default()))
    }
}

/// JSON for `.json` files, TOML otherwise.
pub fn parse_by_extension<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> anyhow::Result<T> {
    let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let parsed = if json {
        serde_json::from_str(text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(text).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
    };
    Ok(parsed?)
}

/// Inline JSON, or the contents of the file after `@`.
pub fn parse_json_arg<T: for<'de> Deserialize<'de>>(arg: &str) -> anyhow::Result<T> {
    let text = match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?,
        None => arg.to_string(),
    };
    serde_json::from_str(&text).map_err(|e| Failure::Parse(format!("{e}")).into())
}
