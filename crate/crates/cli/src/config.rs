//! Experiment configuration: a TOML file with one section per experiment,
//! environment overrides `HYPERDYN_<SECTION>_<KEY>=<value>` and command-line
//! overrides, resolved in that order.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const ENV_PREFIX: &str = "HYPERDYN_";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub matrix: MatrixConfig,
    pub da: DaConfig,
    pub shadow: ShadowConfig,
    pub chains: ChainsConfig,
    pub gamma: GammaConfig,
    pub closure: ClosureConfig,
    pub semiconjugacy: SemiconjugacyConfig,
    pub leaves: LeavesConfig,
    pub tube: TubeConfig,
    pub symbolic: SymbolicConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Not part of the config hash.
    pub out: PathBuf,
    /// Write PGM slices of grid sets.
    pub images: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatrixConfig {
    pub rows: [[i64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DaConfig {
    /// Base automorphism of the DA map and of the experiments built on it.
    pub rows: [[i64; 3]; 3],
    pub x1: [f64; 3],
    pub rho: f64,
    pub mu: f64,
    pub cstar: f64,
    pub theta: f64,
    pub cone_samples: usize,
    pub support_samples: usize,
    /// `mu` of the cone check expected to fail on `matrix.rows`.
    pub control_mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShadowConfig {
    pub orbits: usize,
    pub length: usize,
    pub alpha: f64,
    /// Closed pseudo-orbits for the uniqueness test live on `2^-bits ℤ³`.
    pub periodic_bits: u32,
    pub periodic_orbits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainsConfig {
    pub count: usize,
    pub max_len: usize,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaConfig {
    pub resolution: usize,
    /// δ in cell widths.
    pub delta_cells: f64,
    pub max_loops: usize,
    pub budget: usize,
    pub window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClosureConfig {
    pub resolution: usize,
    /// Lattice `1/q` carrying the curve; 0 means twice the resolution.
    pub lattice: i64,
    pub max_iters: usize,
    /// δ_p in cell widths.
    pub delta_cells: f64,
    pub rounds: usize,
    /// Optional HGS1 file used by `saturate` instead of the orbit closure.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiconjugacyConfig {
    pub resolution: usize,
    pub sweep: Vec<usize>,
    pub test_resolution: usize,
    pub tol: f64,
    pub refine_target: f64,
    pub affine_shift: [f64; 3],
    pub modulus_radii: Vec<f64>,
    pub modulus_pairs: usize,
    pub leaf_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LeavesConfig {
    pub resolution: usize,
    pub length: f64,
    pub seed_point: [f64; 3],
    pub polyline_length: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TubeConfig {
    pub x0: [f64; 3],
    pub delta_p: f64,
    pub beta: f64,
    pub eta: f64,
    pub pairs: usize,
    pub bullet_samples: usize,
    /// Homology class of the loop the projected chain follows.
    pub loop_class: [i64; 3],
    /// Chain step as a fraction of ε0.
    pub step_fraction: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolicConfig {
    pub hull_lengths: Vec<usize>,
    pub max_period: usize,
    pub max_alphabet: usize,
    pub closure_lengths: Vec<usize>,
    /// `heteroclinic`, `periodic-001` or `empty`.
    pub lambda0: String,
    /// `empty` or `fixed-cell`.
    pub lambda1: String,
    pub lambda1_resolution: usize,
    pub coding_radius: usize,
    pub enclose_n: usize,
    pub overlap_n: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            run: RunConfig::default(),
            matrix: MatrixConfig::default(),
            da: DaConfig::default(),
            shadow: ShadowConfig::default(),
            chains: ChainsConfig::default(),
            gamma: GammaConfig::default(),
            closure: ClosureConfig::default(),
            semiconjugacy: SemiconjugacyConfig::default(),
            leaves: LeavesConfig::default(),
            tube: TubeConfig::default(),
            symbolic: SymbolicConfig::default(),
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig { seed: 20_240_501, out: PathBuf::from("out"), images: true }
    }
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig { rows: [[0, 0, 1], [1, 0, -5], [0, 1, 6]] }
    }
}

impl Default for DaConfig {
    fn default() -> Self {
        DaConfig {
            rows: [[0, 0, 1], [1, 0, -38], [0, 1, 40]],
            x1: [0.5; 3],
            rho: 0.2,
            mu: 1.2,
            cstar: 0.03,
            theta: 0.1,
            cone_samples: 100_000,
            support_samples: 100_000,
            control_mu: 4.9,
        }
    }
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig { orbits: 1000, length: 10_000, alpha: 1e-3, periodic_bits: 6, periodic_orbits: 100 }
    }
}

impl Default for ChainsConfig {
    fn default() -> Self {
        ChainsConfig { count: 1000, max_len: 20, step: 0.01 }
    }
}

impl Default for GammaConfig {
    fn default() -> Self {
        GammaConfig { resolution: 32, delta_cells: 3.0, max_loops: 64, budget: 10_000, window: 1.0 }
    }
}

impl Default for ClosureConfig {
    fn default() -> Self {
        ClosureConfig { resolution: 64, lattice: 0, max_iters: 1024, delta_cells: 3.0, rounds: 64, input: None }
    }
}

impl Default for SemiconjugacyConfig {
    fn default() -> Self {
        SemiconjugacyConfig {
            resolution: 64,
            sweep: vec![32, 64, 128],
            test_resolution: 128,
            tol: 1e-8,
            refine_target: 1e-7,
            affine_shift: [0.1, 0.2, 0.3],
            modulus_radii: vec![0.001, 0.003, 0.01, 0.03, 0.1],
            modulus_pairs: 200,
            leaf_samples: 1000,
        }
    }
}

impl Default for LeavesConfig {
    fn default() -> Self {
        LeavesConfig { resolution: 32, length: 2000.0, seed_point: [0.5, 0.47, 0.5], polyline_length: 2.0, step: 0.005 }
    }
}

impl Default for TubeConfig {
    fn default() -> Self {
        TubeConfig {
            x0: [0.0; 3],
            delta_p: 0.05,
            beta: 0.05,
            eta: 0.01,
            pairs: 1000,
            bullet_samples: 1000,
            loop_class: [0, 1, 0],
            step_fraction: 0.1,
            step: 0.005,
        }
    }
}

impl Default for SymbolicConfig {
    fn default() -> Self {
        SymbolicConfig {
            hull_lengths: vec![2, 3, 4, 5, 6, 8],
            max_period: 6,
            max_alphabet: 3,
            closure_lengths: vec![2, 3, 4],
            lambda0: "heteroclinic".into(),
            lambda1: "empty".into(),
            lambda1_resolution: 64,
            coding_radius: 4,
            enclose_n: 4,
            overlap_n: 2,
        }
    }
}

/// Command-line overrides, applied after the file and the environment.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution: Option<usize>,
    pub smoke: bool,
}

impl ExperimentConfig {
    /// Parses TOML text. Errors carry the line and column.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> Result<Self, CliError> {
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    /// File (if any), then `HYPERDYN_*` variables from `env`, then `ov`.
    pub fn resolve<I>(path: Option<&Path>, env: I, ov: &Overrides) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        let mut vars: Vec<(String, String)> = env.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (k, v) in vars {
            apply_env(&mut table, &k[ENV_PREFIX.len()..], &v)?;
        }
        let mut cfg = Self::from_table(table)?;
        if ov.smoke {
            cfg.make_smoke();
        }
        if let Some(n) = ov.resolution {
            cfg.set_resolution(n);
        }
        if let Some(s) = ov.seed {
            cfg.run.seed = s;
        }
        if let Some(o) = &ov.out {
            cfg.run.out = o.clone();
        }
        Ok(cfg)
    }

    /// Sets every grid resolution to `n`.
    pub fn set_resolution(&mut self, n: usize) {
        self.gamma.resolution = n;
        self.closure.resolution = n;
        self.closure.lattice = 0;
        self.semiconjugacy.resolution = n;
        self.semiconjugacy.sweep = vec![n];
        self.semiconjugacy.test_resolution = n;
        self.leaves.resolution = n;
        self.symbolic.lambda1_resolution = n.max(2);
    }

    /// Tiny sizes everywhere; criteria are not expected to pass.
    pub fn make_smoke(&mut self) {
        self.set_resolution(4);
        self.da.cone_samples = 1000;
        self.da.support_samples = 1000;
        self.shadow.orbits = 10;
        self.shadow.length = 100;
        self.shadow.periodic_orbits = 5;
        self.chains.count = 50;
        self.gamma.budget = 500;
        self.closure.rounds = 8;
        self.semiconjugacy.modulus_pairs = 20;
        self.semiconjugacy.leaf_samples = 20;
        self.leaves.length = 20.0;
        self.tube.pairs = 20;
        self.tube.bullet_samples = 20;
        self.symbolic.hull_lengths = vec![2, 3, 4];
        self.symbolic.max_period = 4;
        self.symbolic.max_alphabet = 2;
        self.symbolic.closure_lengths = vec![2, 3];
    }

    /// SHA-256 of the canonical JSON form, output directory excluded.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run.out = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

const SECTIONS: [&str; 11] =
    ["run", "matrix", "da", "shadow", "chains", "gamma", "closure", "semiconjugacy", "leaves", "tube", "symbolic"];

fn apply_env(table: &mut toml::Table, name: &str, value: &str) -> Result<(), CliError> {
    let lower = name.to_ascii_lowercase();
    let (section, key) = lower
        .split_once('_')
        .filter(|(s, k)| SECTIONS.contains(s) && !k.is_empty())
        .ok_or_else(|| CliError::Config(format!("{ENV_PREFIX}{name}: expected {ENV_PREFIX}<SECTION>_<KEY>")))?;
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let sec = entry
        .as_table_mut()
        .ok_or_else(|| CliError::Config(format!("[{section}] is not a table")))?;
    sec.insert(key.to_string(), parsed);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn parse_error_has_line() {
        let e = ExperimentConfig::from_toml("[da]\nmu = 1.2\nrho = = 3\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(ExperimentConfig::from_toml("[da]\nmuu = 1.2\n").is_err());
    }

    #[test]
    fn env_then_flags() {
        let env = vec![
            ("HYPERDYN_DA_MU".to_string(), "4.9".to_string()),
            ("HYPERDYN_RUN_SEED".to_string(), "5".to_string()),
            ("HYPERDYN_SYMBOLIC_LAMBDA1".to_string(), "fixed-cell".to_string()),
            ("OTHER".to_string(), "x".to_string()),
        ];
        let c = ExperimentConfig::resolve(None, env, &Overrides { seed: Some(9), ..Default::default() }).unwrap();
        assert_eq!(c.da.mu, 4.9);
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.symbolic.lambda1, "fixed-cell");
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.run.out = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.da.mu = 1.3;
        assert_ne!(a.hash(), b.hash());
    }
}
