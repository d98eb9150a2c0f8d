use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::NormalFormProfile;
use crate::error::{Error, Result};
use crate::lie::lie_pullback;
use crate::random::{random_series, SeriesShape};
use crate::series::{ActionPolynomial, TFSeries};

/// A Hamiltonian built to have a known normal form: `H = N ∘ X_{−G}^1`, so
/// that `H ∘ X_G^1 = N` through the cap.
#[derive(Clone, Debug)]
pub struct FactoryInstance {
    pub profile: NormalFormProfile,
    pub generator: TFSeries,
    pub cap: usize,
    pub hamiltonian: TFSeries,
    pub normal_form: ActionPolynomial,
}

pub fn make_instance(profile: &NormalFormProfile, g: &TFSeries, cap: usize) -> Result<FactoryInstance> {
    let d = profile.omega.dim();
    if g.dim() != d {
        return Err(Error::DimensionMismatch(g.dim(), d));
    }
    if g.iter().any(|(k, _)| k.k().is_zero()) {
        return Err(Error::InvalidGenerator("generator has θ-independent terms".into()));
    }
    let normal_form = profile.normal_form(cap)?;
    let hamiltonian = lie_pullback(&normal_form, &g.neg(), cap)?;
    Ok(FactoryInstance {
        profile: profile.clone(),
        generator: g.with_cap(cap),
        cap,
        hamiltonian,
        normal_form,
    })
}

/// [`make_instance`] with a seeded random real-symmetric generator.
pub fn random_instance(profile: &NormalFormProfile, shape: &SeriesShape, cap: usize, seed: u64) -> Result<FactoryInstance> {
    if !shape.zero_average || shape.min_degree < 2 {
        return Err(Error::InvalidGenerator(
            "random generators must be zero-average with lowest degree at least 2".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = random_series(profile.omega.dim(), cap, shape, &mut rng);
    make_instance(profile, &g, cap)
}
