//! Instance files.

use std::path::Path;

use bnf_core::engine::{make_instance, random_instance, FactoryInstance, Mode, NormalFormProfile, Profile};
use bnf_core::random::SeriesShape;
use bnf_core::{Error, QuadraticForm, Result, TFSeries, Term};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    #[default]
    FreeRunning,
    Compliant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProfileSpec {
    #[default]
    Discover,
    Prescribed,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_divisibility")]
    pub divisibility: f64,
    #[serde(default = "default_a3")]
    pub a3: f64,
}

fn default_divisibility() -> f64 {
    bnf_core::homology::DEFAULT_DIVISIBILITY_TOL
}

fn default_a3() -> f64 {
    1e-8
}

fn default_rho0() -> f64 {
    1.0
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            divisibility: default_divisibility(),
            a3: default_a3(),
        }
    }
}

/// Generator given as explicit terms or drawn from a seeded shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeneratorSpec {
    Terms(Vec<Term>),
    Random { random: SeriesShape },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub dim: usize,
    pub omega: Vec<Vec<f64>>,
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub hamiltonian: Option<Vec<Term>>,
    pub degree_cap: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub steps: Option<usize>,
    #[serde(default)]
    pub mode: ModeSpec,
    #[serde(default)]
    pub scale_exponent: Option<u32>,
    #[serde(default)]
    pub profile: ProfileSpec,
    #[serde(default = "default_rho0")]
    pub rho0: f64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// A validated instance ready for the engine.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: InstanceSpec,
    pub omega: QuadraticForm,
    pub nf_profile: NormalFormProfile,
    pub hamiltonian: TFSeries,
    /// Present when the Hamiltonian was built from a generator.
    pub factory: Option<FactoryInstance>,
}

impl Instance {
    pub fn profile(&self) -> Profile {
        match self.spec.profile {
            ProfileSpec::Discover => Profile::Discover,
            ProfileSpec::Prescribed => Profile::Prescribed(self.nf_profile.clone()),
        }
    }

    pub fn mode(&self) -> Mode {
        match self.spec.mode {
            ModeSpec::FreeRunning => Mode::FreeRunning,
            ModeSpec::Compliant => Mode::Compliant {
                scale_exponent: self.spec.scale_exponent,
            },
        }
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> Error {
    Error::Malformed(format!("{name}: {msg}"))
}

pub fn parse_spec(text: &str) -> Result<InstanceSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Malformed(format!("{path}: {}", e.into_inner()))
    })
}

pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    let mut spec = parse_spec(&text)?;
    if seed_override.is_some() {
        spec.seed = seed_override;
    }
    build(spec)
}

pub fn build(spec: InstanceSpec) -> Result<Instance> {
    if !(1..=bnf_core::series::MAX_DIM).contains(&spec.dim) {
        return Err(field("dim", format!("must lie in 1..={}", bnf_core::series::MAX_DIM)));
    }
    if spec.omega.len() != spec.dim {
        return Err(field("omega", format!("expected {} rows, found {}", spec.dim, spec.omega.len())));
    }
    let omega = QuadraticForm::new(&spec.omega).map_err(|e| field("omega", e))?;
    if spec.degree_cap < 3 || spec.degree_cap > 64 {
        return Err(field("degree_cap", "must lie in 3..=64"));
    }
    if !(spec.rho0 > 0.0 && spec.rho0 <= 1.0) {
        return Err(field("rho0", "must lie in (0, 1]"));
    }
    if !(spec.tolerances.divisibility > 0.0 && spec.tolerances.a3 > 0.0) {
        return Err(field("tolerances", "must be positive"));
    }
    if spec.b.iter().any(|x| !x.is_finite()) {
        return Err(field("b", "non-finite coefficient"));
    }
    let nf_profile = NormalFormProfile::new(omega.clone(), spec.b.clone());
    let cap = spec.degree_cap;
    let (hamiltonian, factory) = match (&spec.generator, &spec.hamiltonian) {
        (Some(_), Some(_)) | (None, None) => {
            return Err(field("generator", "exactly one of generator and hamiltonian must be given"));
        }
        (Some(GeneratorSpec::Terms(terms)), None) => {
            let g = TFSeries::from_term_list(spec.dim, cap, terms).map_err(|e| field("generator", e))?;
            let inst = make_instance(&nf_profile, &g, cap).map_err(|e| field("generator", e))?;
            (inst.hamiltonian.clone(), Some(inst))
        }
        (Some(GeneratorSpec::Random { random }), None) => {
            let seed = spec.seed.ok_or_else(|| field("seed", "required for a random generator"))?;
            if random.max_degree > cap || random.min_degree > random.max_degree || random.max_mode == 0 {
                return Err(field("generator.random", "inconsistent shape"));
            }
            let inst = random_instance(&nf_profile, random, cap, seed).map_err(|e| field("generator", e))?;
            (inst.hamiltonian.clone(), Some(inst))
        }
        (None, Some(terms)) => {
            let h = TFSeries::from_term_list(spec.dim, cap, terms).map_err(|e| field("hamiltonian", e))?;
            (h, None)
        }
    };
    Ok(Instance {
        spec,
        omega,
        nf_profile,
        hamiltonian,
        factory,
    })
}
