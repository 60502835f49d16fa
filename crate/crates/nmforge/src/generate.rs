//! Seeded random instances for the verification suites.
//!
//! Everything is drawn from a `ChaCha8Rng` seeded explicitly, so a seed
//! range identifies a reproducible family of instances. Spaces are built
//! upstairs-first: the source carries freely drawn weights and the target
//! point masses are the fiber sums, which makes every generated map
//! measure-preserving by construction. Carriers stay small (at most ten
//! points) and all data is rational with small numerators and denominators.

use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{Exponent, Section, SectionModule, SigmaIdeal, StrongBundle};
use crate::error::Result;
use crate::fiber::{FiberSpace, LpExp};
use crate::lifting::{make_lifting, Lifting};
use crate::measure::{FiniteMeasureSpace, MeasurableMap, PartitionChain};
use crate::scalar::{rat, Rational};

/// Bounds for generated instances.
#[derive(Debug, Clone)]
pub struct SizeProfile {
    /// Largest number of positive-mass points in a generated space.
    pub max_points: usize,
    /// Largest number of appended null points.
    pub max_extra_nulls: usize,
    /// Largest fiber dimension.
    pub max_dim: usize,
    /// Weight numerators are drawn from `1..=weight_bound`.
    pub weight_bound: i64,
    /// Section and functional coordinates are drawn from
    /// `-coord_bound..=coord_bound`.
    pub coord_bound: i64,
}

impl Default for SizeProfile {
    fn default() -> Self {
        SizeProfile {
            max_points: 6,
            max_extra_nulls: 2,
            max_dim: 3,
            weight_bound: 8,
            coord_bound: 8,
        }
    }
}

pub fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn small_rational(rng: &mut ChaCha8Rng, bound: i64) -> Rational {
    let numer = rng.gen_range(-bound..=bound);
    let denom = *[1i64, 2, 3, 4]
        .get(rng.gen_range(0..4))
        .expect("fixed table");
    rat(numer, denom)
}

/// A space with `prefix`-labeled points: positive weights `k/d` with a
/// shared denominator, plus a few null points at the end.
pub fn random_space(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
    prefix: &str,
) -> FiniteMeasureSpace {
    let n = rng.gen_range(2..=profile.max_points);
    let nulls = rng.gen_range(0..=profile.max_extra_nulls);
    let denom = rng.gen_range(1..=4i64) * 4;
    let mut labels = Vec::with_capacity(n + nulls);
    let mut weights = Vec::with_capacity(n + nulls);
    for i in 0..n + nulls {
        labels.push(format!("{prefix}{i}"));
        if i < n {
            weights.push(rat(rng.gen_range(1..=profile.weight_bound), denom));
        } else {
            weights.push(Rational::from_integer(0.into()));
        }
    }
    FiniteMeasureSpace::new(labels, weights).expect("positive weights with trailing nulls")
}

/// A measure-preserving map onto a fresh target: the target masses are the
/// fiber sums of the source masses. The identity prefix of the assignment
/// keeps the map surjective on positive-mass points.
pub fn random_pair(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
) -> (FiniteMeasureSpace, MeasurableMap) {
    let source = random_space(rng, profile, "y");
    let n_up = source.support().len();
    let n_down = rng.gen_range(1..=n_up);
    let assign: Vec<usize> = (0..source.len())
        .map(|i| {
            if i < n_down {
                i
            } else {
                rng.gen_range(0..n_down)
            }
        })
        .collect();
    let mut weights = vec![Rational::from_integer(0.into()); n_down];
    for (y, &x) in assign.iter().enumerate() {
        weights[x] += source.mass(y);
    }
    let labels: Vec<String> = (0..n_down).map(|i| format!("x{i}")).collect();
    let target = FiniteMeasureSpace::new(labels, weights).expect("fiber sums are positive");
    let map = MeasurableMap::from_indices(source, target.clone(), assign);
    (target, map)
}

/// A map whose pushforward is absolutely continuous but not the target
/// measure: one target point is made heavier than its fiber.
pub fn random_pair_ac(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
) -> (FiniteMeasureSpace, MeasurableMap) {
    let (target, map) = random_pair(rng, profile);
    let bump = target.support()[rng.gen_range(0..target.support().len())];
    let mut weights = target.weights().to_vec();
    weights[bump] += rat(1, 2);
    let heavier = FiniteMeasureSpace::new(target.labels().to_vec(), weights)
        .expect("bumping a weight keeps the space valid");
    let map = MeasurableMap::from_indices(map.source().clone(), heavier.clone(), {
        (0..map.source().len()).map(|y| map.apply(y)).collect()
    });
    (heavier, map)
}

/// A fully refining chain: a couple of random coarse generators followed by
/// the singletons of every positive-mass point.
pub fn refining_chain(rng: &mut ChaCha8Rng, space: &FiniteMeasureSpace) -> PartitionChain {
    let mut generators: Vec<Vec<usize>> = Vec::new();
    for _ in 0..rng.gen_range(0..=2) {
        let cut: Vec<usize> = (0..space.len()).filter(|_| rng.gen_bool(0.5)).collect();
        if !cut.is_empty() && cut.len() < space.len() {
            generators.push(cut);
        }
    }
    for i in space.support() {
        generators.push(vec![i]);
    }
    let chain = PartitionChain::from_indices(space.clone(), generators);
    assert!(
        chain.is_fully_refining(),
        "singleton generators refine fully"
    );
    chain
}

/// One fiber. `rational_only` excludes the `l^2` family so that every norm
/// and dual norm stays rational.
pub fn random_fiber(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
    rational_only: bool,
) -> FiberSpace {
    let dim = rng.gen_range(1..=profile.max_dim);
    let family = rng.gen_range(0..if rational_only { 4 } else { 5 });
    match family {
        0 => FiberSpace::lp(LpExp::One, dim),
        1 => FiberSpace::lp(LpExp::Inf, dim),
        2 => {
            let p = if rng.gen_bool(0.5) {
                LpExp::One
            } else {
                LpExp::Inf
            };
            let weights = (0..dim)
                .map(|_| rat(rng.gen_range(1..=4), rng.gen_range(1..=2)))
                .collect();
            FiberSpace::weighted(p, weights).expect("drawn weights are positive")
        }
        3 => {
            let dim = dim.min(3);
            let mut functionals: Vec<Vec<Rational>> = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| if i == j { rat(1, 1) } else { rat(0, 1) })
                        .collect()
                })
                .collect();
            for _ in 0..rng.gen_range(0..=2usize) {
                functionals.push((0..dim).map(|_| rat(rng.gen_range(-2..=2), 1)).collect());
            }
            FiberSpace::polyhedral(functionals).expect("identity rows span")
        }
        _ => FiberSpace::lp(LpExp::Two, dim),
    }
}

/// A section with small rational coordinates.
pub fn random_section(rng: &mut ChaCha8Rng, profile: &SizeProfile, dims: &[usize]) -> Section {
    Section::new(
        dims.iter()
            .map(|&d| {
                (0..d)
                    .map(|_| small_rational(rng, profile.coord_bound))
                    .collect()
            })
            .collect(),
    )
}

/// A bundle over `space` with per-point random fibers and `tests` test
/// sections.
pub fn random_bundle(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
    space: &FiniteMeasureSpace,
    rational_only: bool,
    tests: usize,
) -> Arc<StrongBundle> {
    let fibers: Vec<FiberSpace> = (0..space.len())
        .map(|_| random_fiber(rng, profile, rational_only))
        .collect();
    let dims: Vec<usize> = fibers.iter().map(FiberSpace::dim).collect();
    let test_sections = (0..tests)
        .map(|_| random_section(rng, profile, &dims))
        .collect();
    Arc::new(
        StrongBundle::new(space.clone(), fibers, test_sections)
            .expect("generated sections match generated fibers"),
    )
}

pub fn random_module(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
    space: &FiniteMeasureSpace,
    rational_only: bool,
    exponent: Exponent,
) -> Result<Arc<SectionModule>> {
    let bundle = random_bundle(rng, profile, space, rational_only, 3);
    SectionModule::new(bundle, exponent, SigmaIdeal::Null)
}

/// A pool of sections of the bundle, for searches and probes.
pub fn section_pool(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
    bundle: &Arc<StrongBundle>,
    count: usize,
) -> Vec<Section> {
    let dims = bundle.dims();
    (0..count)
        .map(|_| random_section(rng, profile, &dims))
        .collect()
}

/// A function with small rational values.
pub fn random_function(
    rng: &mut ChaCha8Rng,
    profile: &SizeProfile,
    space: &FiniteMeasureSpace,
) -> Vec<Rational> {
    (0..space.len())
        .map(|_| small_rational(rng, profile.coord_bound))
        .collect()
}

/// A nonempty subset of the carrier.
pub fn random_subset(rng: &mut ChaCha8Rng, space: &FiniteMeasureSpace) -> Vec<usize> {
    loop {
        let set: Vec<usize> = (0..space.len()).filter(|_| rng.gen_bool(0.5)).collect();
        if !set.is_empty() {
            return set;
        }
    }
}

/// A lifting with randomly retracted null points.
pub fn random_lifting(rng: &mut ChaCha8Rng, space: &FiniteMeasureSpace) -> Lifting {
    let support = space.support();
    let retraction = (0..space.len())
        .map(|i| {
            if space.is_null(i) {
                support[rng.gen_range(0..support.len())]
            } else {
                i
            }
        })
        .collect();
    make_lifting(space.clone(), retraction).expect("retraction built over the support")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_deterministic_per_seed() {
        let profile = SizeProfile::default();
        let (x1, m1) = random_pair(&mut rng_for(7), &profile);
        let (x2, m2) = random_pair(&mut rng_for(7), &profile);
        assert_eq!(x1, x2);
        assert_eq!(m1, m2);
    }

    #[test]
    fn generated_maps_preserve_the_measure() {
        let profile = SizeProfile::default();
        for seed in 0..50 {
            let (_, map) = random_pair(&mut rng_for(seed), &profile);
            assert!(map.is_measure_preserving(), "seed {seed}");
            assert!(map.source().len() <= profile.max_points + profile.max_extra_nulls);
        }
    }

    #[test]
    fn weaker_pairs_are_absolutely_continuous_but_not_preserving() {
        let profile = SizeProfile::default();
        for seed in 0..20 {
            let (_, map) = random_pair_ac(&mut rng_for(seed), &profile);
            assert!(!map.is_measure_preserving(), "seed {seed}");
            assert!(map.is_absolutely_continuous(), "seed {seed}");
        }
    }

    #[test]
    fn generated_chains_refine_fully() {
        let profile = SizeProfile::default();
        for seed in 0..20 {
            let mut rng = rng_for(seed);
            let space = random_space(&mut rng, &profile, "p");
            let chain = refining_chain(&mut rng, &space);
            assert!(chain.is_fully_refining());
            assert!(chain.num_levels() >= space.support().len());
        }
    }

    #[test]
    fn rational_only_bundles_have_exact_norms() {
        let profile = SizeProfile::default();
        for seed in 0..20 {
            let mut rng = rng_for(seed);
            let space = random_space(&mut rng, &profile, "p");
            let bundle = random_bundle(&mut rng, &profile, &space, true, 2);
            let section = random_section(&mut rng, &profile, &bundle.dims());
            for x in 0..space.len() {
                let norm = bundle.fiber(x).norm(section.value(x)).unwrap();
                assert!(norm.is_exact(), "seed {seed} point {x}");
                let dual = bundle.fiber(x).dual_norm(section.value(x)).unwrap();
                assert!(dual.is_exact(), "seed {seed} point {x}");
            }
        }
    }
}
