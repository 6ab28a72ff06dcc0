use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use dunkl_hermite::hermite::{Arithmetic, HermiteBasis};
use dunkl_hermite::reflection::RootSystem;
use serde_json::json;
use sha2::{Digest, Sha256};

/// Cache file name for a basis: the SHA-256 of the group, multiplicities,
/// degree and arithmetic.
pub fn key(rs: &RootSystem, degree: u32, mode: Arithmetic) -> Result<String> {
    let id = json!({ "root_system": rs.config(), "degree": degree, "arithmetic": mode });
    let digest = Sha256::digest(serde_json::to_vec(&id)?);
    Ok(hex::encode(digest))
}

pub fn read_basis(path: &Path) -> Result<HermiteBasis> {
    let text = fs::read_to_string(path).with_context(|| format!("reading basis {}", path.display()))?;
    HermiteBasis::from_json(&text).with_context(|| format!("loading basis {}", path.display()))
}

pub fn write_basis(basis: &HermiteBasis, path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    fs::write(path, basis.to_json()?).with_context(|| format!("writing {}", path.display()))
}

/// Loads the basis from the cache, building and storing it on a miss.
/// A cache file that fails its checksum is an error, not a miss.
pub fn load_or_build(rs: &RootSystem, degree: u32, mode: Arithmetic, dir: &Path) -> Result<(HermiteBasis, PathBuf, bool)> {
    let path = dir.join(format!("{}.json", key(rs, degree, mode)?));
    if path.exists() {
        return Ok((read_basis(&path)?, path, true));
    }
    let basis = HermiteBasis::build_with(rs, degree, mode)?;
    write_basis(&basis, &path)?;
    Ok((basis, path, false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_separates_inputs() {
        let a = RootSystem::z2_power(1, &[0.5]).unwrap();
        let b = RootSystem::z2_power(1, &[1.0]).unwrap();
        let k = key(&a, 4, Arithmetic::Exact).unwrap();
        assert_eq!(k.len(), 64);
        assert_eq!(k, key(&a, 4, Arithmetic::Exact).unwrap());
        assert_ne!(k, key(&b, 4, Arithmetic::Exact).unwrap());
        assert_ne!(k, key(&a, 5, Arithmetic::Exact).unwrap());
        assert_ne!(k, key(&a, 4, Arithmetic::Float).unwrap());
    }
}
