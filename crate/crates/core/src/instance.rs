//! Self-describing instance files (TOML).
//!
//! ```toml
//! kind = "potential"      # or "ising"
//! dim = 64                # potential: number of sites D
//! seed = 1                # random V_i ~ U[0,1), E_i = -V_i
//! # energies = [-0.2, -0.9, -0.4]   # explicit alternative to dim + seed
//! ```
//!
//! ```toml
//! kind = "ising"
//! num_spins = 3
//! seed = 5                # random J_ij, h_i ~ U[-1,1)
//! # couplings = [[0, 1, 1.0], [1, 2, -0.5]]   # explicit alternative to seed
//! # fields = [0.1, 0.0, -0.2]
//! ```
//!
//! Inside an experiment config the same table may instead read
//! `kind = "file"` with `path = "instance.toml"` (relative to the config).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    build_random_potential, ising_to_diagonal, CostDiagonal, IsingInstance, PotentialDistribution,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub distribution: PotentialDistribution,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energies: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSpec {
    pub num_spins: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<(usize, usize, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileSpec {
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InstanceSpec {
    Potential(PotentialSpec),
    Ising(IsingSpec),
    File(FileSpec),
}

impl InstanceSpec {
    pub fn random_potential(dim: usize, seed: u64) -> Self {
        InstanceSpec::Potential(PotentialSpec {
            dim: Some(dim),
            seed: Some(seed),
            distribution: PotentialDistribution::Uniform01,
            energies: None,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("instance: {e}")))
    }

    /// Expands the spec into a cost diagonal; `base` resolves relative file paths.
    pub fn build(&self, base: &Path) -> Result<CostDiagonal<f64>> {
        match self {
            InstanceSpec::Potential(p) => match (&p.energies, p.dim, p.seed) {
                (Some(energies), dim, None) => {
                    if dim.is_some_and(|d| d != energies.len()) {
                        return Err(Error::Config(format!(
                            "dim = {} but {} energies given",
                            dim.unwrap_or(0),
                            energies.len()
                        )));
                    }
                    CostDiagonal::new(energies.clone(), format!("potential(D={})", energies.len()))
                }
                (None, Some(dim), Some(seed)) => build_random_potential(dim, seed, p.distribution),
                _ => Err(Error::Config(
                    "potential instance needs either `energies` or both `dim` and `seed`".into(),
                )),
            },
            InstanceSpec::Ising(s) => {
                let inst = match (&s.couplings, &s.fields, s.seed) {
                    (None, None, Some(seed)) => IsingInstance::random(s.num_spins, seed)?,
                    (couplings, fields, None) if couplings.is_some() || fields.is_some() => {
                        IsingInstance::new(
                            s.num_spins,
                            couplings.clone().unwrap_or_default(),
                            fields.clone().unwrap_or_else(|| vec![0.0; s.num_spins]),
                        )?
                    }
                    _ => {
                        return Err(Error::Config(
                            "ising instance needs either `seed` or explicit `couplings`/`fields`"
                                .into(),
                        ))
                    }
                };
                ising_to_diagonal(&inst)
            }
            InstanceSpec::File(f) => {
                let path = base.join(&f.path);
                let text = std::fs::read_to_string(&path).map_err(|source| Error::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                let inner = Self::parse(&text)?;
                if let InstanceSpec::File(_) = inner {
                    return Err(Error::Config("instance files cannot point to other files".into()));
                }
                inner.build(path.parent().unwrap_or(base))
            }
        }
    }
}

pub fn load_instance_file(path: &Path) -> Result<CostDiagonal<f64>> {
    InstanceSpec::File(FileSpec {
        path: path.to_path_buf(),
    })
    .build(Path::new("."))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_random_potential() {
        let spec = InstanceSpec::parse("kind = \"potential\"\ndim = 8\nseed = 3\n").unwrap();
        let cost = spec.build(Path::new(".")).unwrap();
        assert_eq!(cost.dim(), 8);
        assert_eq!(
            cost,
            build_random_potential(8, 3, PotentialDistribution::Uniform01).unwrap()
        );
    }

    #[test]
    fn parses_explicit_ising() {
        let text = "kind = \"ising\"\nnum_spins = 2\ncouplings = [[0, 1, 1.0]]\nfields = [0.0, 0.0]\n";
        let cost = InstanceSpec::parse(text).unwrap().build(Path::new(".")).unwrap();
        assert_eq!(cost.energies(), &[-1.0, 1.0, 1.0, -1.0]);
    }

    #[test]
    fn rejects_unknown_keys_and_ambiguous_specs() {
        assert!(InstanceSpec::parse("kind = \"potential\"\ndim = 8\nsede = 3\n").is_err());
        assert!(InstanceSpec::parse("kind = \"magnet\"\n").is_err());
        let both = InstanceSpec::parse("kind = \"potential\"\ndim = 2\nseed = 1\nenergies = [0.0, 1.0]\n").unwrap();
        assert!(both.build(Path::new(".")).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let spec = InstanceSpec::random_potential(16, 9);
        let text = toml::to_string(&spec).unwrap();
        assert_eq!(InstanceSpec::parse(&text).unwrap(), spec);
    }

    #[test]
    fn loads_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("inst.toml");
        std::fs::write(&path, "kind = \"potential\"\nenergies = [0.0, -1.0, -0.5]\n").unwrap();
        let cost = load_instance_file(&path).unwrap();
        assert_eq!(cost.energies(), &[0.0, -1.0, -0.5]);
    }
}
