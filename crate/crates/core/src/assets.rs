//! Bundled L0 programs. Each is validated when loaded.

use std::path::Path;

use thiserror::Error;

use crate::lcore::{load_program, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AssetError {
    #[error("asset `{name}` not found at {path}")]
    AssetMissing { name: String, path: String },
    #[error("asset `{name}` is invalid: {detail}")]
    AssetInvalid { name: String, detail: String },
}

/// A bundled program and the entry shape it must have.
#[derive(Debug, Clone, Copy)]
pub struct Asset {
    pub file: &'static str,
    pub source: &'static str,
    pub entry: &'static str,
    pub arity: usize,
}

pub const MIX: Asset = Asset { file: "mix.l0", source: include_str!("../../../assets/mix.l0"), entry: "mix", arity: 3 };

pub const INTERP: Asset =
    Asset { file: "interp.l0", source: include_str!("../../../assets/interp.l0"), entry: "interp", arity: 2 };

pub const INTERP_STEP: Asset = Asset {
    file: "interp_step.l0",
    source: include_str!("../../../assets/interp_step.l0"),
    entry: "interp-step",
    arity: 2,
};

pub const ALL: [Asset; 3] = [MIX, INTERP, INTERP_STEP];

fn validate(asset: &Asset, source: &str) -> Result<Program, AssetError> {
    let invalid = |detail: String| AssetError::AssetInvalid { name: asset.file.into(), detail };
    let p = load_program(source).map_err(|e| invalid(e.to_string()))?;
    let entry = p.entry();
    if &*entry.name != asset.entry || entry.params.len() != asset.arity {
        return Err(invalid(format!(
            "entry must be `{}` with {} parameter(s), found `{}` with {}",
            asset.entry,
            asset.arity,
            entry.name,
            entry.params.len()
        )));
    }
    Ok(p)
}

pub fn load_bundled(asset: Asset) -> Result<Program, AssetError> {
    validate(&asset, asset.source)
}

/// Loads `asset` from `dir` instead of the bundled copy.
pub fn load_from_dir(asset: Asset, dir: &Path) -> Result<Program, AssetError> {
    let path = dir.join(asset.file);
    let source = std::fs::read_to_string(&path)
        .map_err(|_| AssetError::AssetMissing { name: asset.file.into(), path: path.display().to_string() })?;
    validate(&asset, &source)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_assets_validate() {
        for a in ALL {
            load_bundled(a).unwrap_or_else(|e| panic!("{e}"));
        }
    }

    #[test]
    fn missing_asset_dir() {
        let err = load_from_dir(MIX, Path::new("/nonexistent")).unwrap_err();
        assert!(matches!(err, AssetError::AssetMissing { .. }));
    }

    #[test]
    fn wrong_entry_is_invalid() {
        let bad = Asset { source: "(program (def main (x) x))", ..MIX };
        assert!(matches!(load_bundled(bad).unwrap_err(), AssetError::AssetInvalid { .. }));
    }
}
