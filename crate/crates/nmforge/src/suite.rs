//! Verification suites: each suite bundles the laws of one layer into named
//! checks and runs them over seeded random instances or over the objects of
//! a scenario file.
//!
//! A suite produces a `Report` of `Check`s. Seeded runs aggregate each law
//! across the whole seed range into a single check whose detail names the
//! first failing seed, so a red line always carries a reproducer.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num::traits::{One, Signed, Zero};
use serde::Serialize;

use crate::bundle::{
    fiberize, glue, Exponent, ModuleElement, Section, SectionModule, SigmaIdeal, StrongBundle,
};
use crate::doob::{cond_exp, rep, rep_p};
use crate::duality::{
    dual_module, dual_pullback_routes, functional_from_action, functional_norm_search,
    pairing_action,
};
use crate::error::{Error, Result};
use crate::fiber::{pair, FiberSpace, LpExp};
use crate::generate::{
    random_function, random_lifting, random_module, random_pair, random_pair_ac, random_section,
    random_space, random_subset, refining_chain, rng_for, SizeProfile,
};
use crate::lifting::{
    compatible_lifting, lift_module, morphism, verify_compatibility, EXHAUSTIVE_POINT_LIMIT,
};
use crate::measure::{FiniteMeasureSpace, MeasurableMap, PartitionChain};
use crate::pullback::{extend_local_operator, pullback_module, pullback_module_ac, PullbackModule};
use crate::scalar::{exact_vec, rat, rat_int, Rational, Scalar};
use crate::scenario::Scenario;
use crate::weakstar::{approximate, jensen_gap, pr_operator};

/// The verification suites exposed by the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteKind {
    Doob,
    ModuleAxioms,
    Pullback,
    Dual,
    DualOfPullback,
    Lifting,
    Diagram,
    HomLoc,
    WeakStar,
    All,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Doob => "doob",
            SuiteKind::ModuleAxioms => "module-axioms",
            SuiteKind::Pullback => "pullback",
            SuiteKind::Dual => "dual",
            SuiteKind::DualOfPullback => "dual-of-pullback",
            SuiteKind::Lifting => "lifting",
            SuiteKind::Diagram => "diagram",
            SuiteKind::HomLoc => "homloc",
            SuiteKind::WeakStar => "weakstar",
            SuiteKind::All => "all",
        }
    }

    /// All concrete suites, in reporting order.
    pub fn concrete() -> [SuiteKind; 9] {
        [
            SuiteKind::Doob,
            SuiteKind::ModuleAxioms,
            SuiteKind::Pullback,
            SuiteKind::Dual,
            SuiteKind::DualOfPullback,
            SuiteKind::Lifting,
            SuiteKind::Diagram,
            SuiteKind::HomLoc,
            SuiteKind::WeakStar,
        ]
    }
}

impl FromStr for SuiteKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "doob" => Ok(SuiteKind::Doob),
            "module-axioms" => Ok(SuiteKind::ModuleAxioms),
            "pullback" => Ok(SuiteKind::Pullback),
            "dual" => Ok(SuiteKind::Dual),
            "dual-of-pullback" => Ok(SuiteKind::DualOfPullback),
            "lifting" => Ok(SuiteKind::Lifting),
            "diagram" => Ok(SuiteKind::Diagram),
            "homloc" => Ok(SuiteKind::HomLoc),
            "weakstar" => Ok(SuiteKind::WeakStar),
            "all" => Ok(SuiteKind::All),
            other => Err(Error::UnknownSuite(other.to_string())),
        }
    }
}

impl fmt::Display for SuiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One verified law.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// The outcome of one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub suite: String,
    pub checks: Vec<Check>,
}

impl Report {
    fn new(kind: SuiteKind) -> Self {
        Report {
            suite: kind.name().to_string(),
            checks: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Shared run parameters.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    /// The integrability exponent `p` (finite, above one).
    pub p: Rational,
    /// The weak-star approximation exponent; `None` selects the conjugate
    /// of `p`.
    pub exponent: Option<Rational>,
    /// Tolerance for comparisons that pass through irrational roots.
    pub tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            p: rat_int(2),
            exponent: None,
            tol: 1e-9,
        }
    }
}

impl SuiteConfig {
    fn q(&self) -> Rational {
        &self.p / (&self.p - Rational::one())
    }

    fn weakstar_exponents(&self) -> Vec<Rational> {
        match &self.exponent {
            Some(e) => vec![e.clone()],
            None => {
                let q = self.q();
                if q == self.p {
                    vec![q]
                } else {
                    vec![self.p.clone(), q]
                }
            }
        }
    }
}

/// Accumulates one law across many instances.
struct Tally {
    name: &'static str,
    total: u64,
    failures: u64,
    first_failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            total: 0,
            failures: 0,
            first_failure: None,
        }
    }

    fn check(&mut self, ok: bool, context: impl FnOnce() -> String) {
        self.total += 1;
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(context());
            }
        }
    }

    fn into_check(self) -> Check {
        let passed = self.failures == 0 && self.total > 0;
        let detail = if self.total == 0 {
            "no instances".to_string()
        } else if passed {
            format!("{} instances", self.total)
        } else {
            format!(
                "{}/{} failed; first at {}",
                self.failures,
                self.total,
                self.first_failure.as_deref().unwrap_or("?")
            )
        };
        Check {
            name: self.name.to_string(),
            passed,
            detail,
        }
    }
}

fn scalar_l1(space: &FiniteMeasureSpace, f: &[Scalar]) -> Scalar {
    space
        .support()
        .into_iter()
        .map(|i| f[i].abs() * Scalar::Exact(space.mass(i).clone()))
        .sum()
}

/// Run a suite over a seed range.
pub fn run_seeded(kind: SuiteKind, seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Vec<Report> {
    match kind {
        SuiteKind::All => SuiteKind::concrete()
            .into_iter()
            .map(|k| run_one_seeded(k, seeds.clone(), cfg))
            .collect(),
        k => vec![run_one_seeded(k, seeds, cfg)],
    }
}

fn run_one_seeded(kind: SuiteKind, seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    match kind {
        SuiteKind::Doob => doob_seeded(seeds, cfg),
        SuiteKind::ModuleAxioms => module_axioms_seeded(seeds, cfg),
        SuiteKind::Pullback => pullback_seeded(seeds, cfg),
        SuiteKind::Dual => dual_seeded(seeds, cfg),
        SuiteKind::DualOfPullback => dual_of_pullback_seeded(seeds, cfg),
        SuiteKind::Lifting => lifting_seeded(seeds, cfg),
        SuiteKind::Diagram => diagram_seeded(seeds, cfg),
        SuiteKind::HomLoc => homloc_seeded(seeds, cfg),
        SuiteKind::WeakStar => weakstar_seeded(seeds, cfg),
        SuiteKind::All => unreachable!("expanded by run_seeded"),
    }
}

// ---------------------------------------------------------------------------
// Doob

fn doob_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut contraction = Tally::new("conditional-expectation-contraction");
    let mut tower = Tally::new("tower-law");
    let mut roundtrip = Tally::new("representative-roundtrip");
    let mut linearity = Tally::new("representative-linearity");
    let mut monotone = Tally::new("representative-monotonicity");
    let mut convergence = Tally::new("l1-convergence");
    let mut subadd = Tally::new("power-representative-subadditivity");
    let mut hoelder = Tally::new("power-representative-hoelder");
    let q = cfg.q();

    for seed in seeds {
        let mut rng = rng_for(seed);
        let space = random_space(&mut rng, &profile, "p");
        let chain = refining_chain(&mut rng, &space);
        let f = random_function(&mut rng, &profile, &space);
        let g = random_function(&mut rng, &profile, &space);
        let fs = exact_vec(&f);
        let gs = exact_vec(&g);
        let ctx = || format!("seed {seed}");

        let norm_f = scalar_l1(&space, &fs);
        for k in 0..chain.num_levels() {
            let pk = cond_exp(&chain, k, &fs).expect("level in range");
            contraction.check(scalar_l1(&space, &pk).le_tol(&norm_f, 0.0), ctx);
        }

        // The tower law is an identity of classes: at a zero-mass cell the
        // outer average is zero while the inner one need not be, so compare
        // on the support only.
        for j in 0..chain.num_levels() {
            for k in 0..chain.num_levels() {
                let inner = cond_exp(&chain, k, &fs).expect("level in range");
                let iterated = cond_exp(&chain, j, &inner).expect("level in range");
                let direct = cond_exp(&chain, j.min(k), &fs).expect("level in range");
                tower.check(
                    space
                        .support()
                        .into_iter()
                        .all(|i| iterated[i] == direct[i]),
                    ctx,
                );
            }
        }

        let r = rep(&chain, &fs).expect("chain refines fully");
        let complement_mass: Rational = (0..space.len())
            .filter(|i| !r.leb_set.contains(i))
            .map(|i| space.mass(i).clone())
            .sum();
        roundtrip.check(
            complement_mass.is_zero() && space.support().into_iter().all(|i| r.rep[i] == fs[i]),
            ctx,
        );

        let alpha = rat(3, 2);
        let beta = rat(-1, 3);
        let combo: Vec<Rational> = f
            .iter()
            .zip(&g)
            .map(|(a, b)| &alpha * a + &beta * b)
            .collect();
        let r_combo = rep(&chain, &exact_vec(&combo)).expect("chain refines fully");
        let r_g = rep(&chain, &gs).expect("chain refines fully");
        linearity.check(
            (0..space.len()).all(|i| {
                r_combo.rep[i]
                    == Scalar::Exact(alpha.clone()) * r.rep[i].clone()
                        + Scalar::Exact(beta.clone()) * r_g.rep[i].clone()
            }),
            ctx,
        );

        let bigger: Vec<Rational> = f.iter().zip(&g).map(|(a, b)| a + b.abs()).collect();
        let r_big = rep(&chain, &exact_vec(&bigger)).expect("chain refines fully");
        monotone.check(
            (0..space.len()).all(|i| r.rep[i].le_tol(&r_big.rep[i], 0.0)),
            ctx,
        );

        for k in r.stabilization_level..chain.num_levels() {
            let pk = cond_exp(&chain, k, &fs).expect("level in range");
            let diff: Vec<Scalar> = pk
                .iter()
                .zip(&r.rep)
                .map(|(a, b)| a.clone() - b.clone())
                .collect();
            convergence.check(scalar_l1(&space, &diff).is_zero(), ctx);
        }

        let fa: Vec<Rational> = f.iter().map(Signed::abs).collect();
        let ga: Vec<Rational> = g.iter().map(Signed::abs).collect();
        let combo_abs: Vec<Rational> = combo.iter().map(Signed::abs).collect();
        let lhs = rep_p(&chain, &cfg.p, &exact_vec(&combo_abs)).expect("nonnegative input");
        let rf = rep_p(&chain, &cfg.p, &exact_vec(&fa)).expect("nonnegative input");
        let rg = rep_p(&chain, &cfg.p, &exact_vec(&ga)).expect("nonnegative input");
        subadd.check(
            space.support().into_iter().all(|i| {
                let bound = Scalar::Exact(alpha.abs()) * rf.rep[i].clone()
                    + Scalar::Exact(beta.abs()) * rg.rep[i].clone();
                lhs.rep[i].le_tol(&bound, cfg.tol)
            }),
            ctx,
        );

        let prod: Vec<Rational> = fa.iter().zip(&ga).map(|(a, b)| a * b).collect();
        let r_prod = rep(&chain, &exact_vec(&prod)).expect("chain refines fully");
        let rq = rep_p(&chain, &q, &exact_vec(&ga)).expect("nonnegative input");
        hoelder.check(
            space
                .support()
                .into_iter()
                .all(|i| r_prod.rep[i].le_tol(&(rf.rep[i].clone() * rq.rep[i].clone()), cfg.tol)),
            ctx,
        );
    }

    let mut report = Report::new(SuiteKind::Doob);
    report.checks = vec![
        contraction.into_check(),
        tower.into_check(),
        roundtrip.into_check(),
        linearity.into_check(),
        monotone.into_check(),
        convergence.into_check(),
        subadd.into_check(),
        hoelder.into_check(),
    ];
    report
}

// ---------------------------------------------------------------------------
// Module axioms and fiberization

fn module_axioms_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut triangle = Tally::new("pointwise-triangle");
    let mut homogeneity = Tally::new("pointwise-homogeneity");
    let mut glueing = Tally::new("glueing-norm-additivity");
    let mut ideal = Tally::new("class-invariance");
    let mut realization = Tally::new("realization-bijection");
    let mut seminorm_identity = Tally::new("realization-norm-identity");
    let mut decomposition = Tally::new("decomposition-infimum");

    for seed in seeds {
        let mut rng = rng_for(seed);
        let space = random_space(&mut rng, &profile, "p");
        let rational_only = seed % 2 == 0;
        let module = random_module(
            &mut rng,
            &profile,
            &space,
            rational_only,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let dims = module.bundle().dims();
        let v = module
            .element(random_section(&mut rng, &profile, &dims))
            .expect("generated sections fit");
        let w = module
            .element(random_section(&mut rng, &profile, &dims))
            .expect("generated sections fit");
        let f = random_function(&mut rng, &profile, &space);
        let ctx = || format!("seed {seed}");

        let nv = v.pointwise_norm();
        let nw = w.pointwise_norm();
        let nsum = v.add(&w).pointwise_norm();
        triangle.check(
            (0..space.len()).all(|i| nsum[i].le_tol(&(nv[i].clone() + nw[i].clone()), cfg.tol)),
            ctx,
        );

        let nfv = v.mul_fn(&f).expect("function on the base").pointwise_norm();
        homogeneity.check(
            (0..space.len())
                .all(|i| nfv[i].eq_tol(&(Scalar::Exact(f[i].abs()) * nv[i].clone()), cfg.tol)),
            ctx,
        );

        let cut = random_subset(&mut rng, &space);
        let rest: Vec<usize> = (0..space.len()).filter(|i| !cut.contains(i)).collect();
        let glued = glue(&[cut.clone(), rest.clone()], &[v.clone(), w.clone()])
            .expect("two cells partition the carrier");
        let pw = glued.pointwise_norm_pow(&cfg.p);
        let vw = v.pointwise_norm_pow(&cfg.p);
        let ww = w.pointwise_norm_pow(&cfg.p);
        let lhs: Scalar = space
            .support()
            .into_iter()
            .map(|i| pw[i].clone() * Scalar::Exact(space.mass(i).clone()))
            .sum();
        let rhs: Scalar = cut
            .iter()
            .filter(|&&i| !space.is_null(i))
            .map(|&i| vw[i].clone() * Scalar::Exact(space.mass(i).clone()))
            .chain(
                rest.iter()
                    .filter(|&&i| !space.is_null(i))
                    .map(|&i| ww[i].clone() * Scalar::Exact(space.mass(i).clone())),
            )
            .sum();
        glueing.check(lhs.eq_tol(&rhs, cfg.tol), ctx);

        let mut junk = Section::zero(&dims);
        for i in 0..space.len() {
            if space.is_null(i) && !junk.values[i].is_empty() {
                junk.values[i][0] = rat_int(9);
            }
        }
        let shifted = module
            .element(v.section().add(&junk))
            .expect("junk fits the fibers");
        ideal.check(
            shifted.eq_mod(&v) && v.add(&module.zero_element()).eq_mod(&v),
            ctx,
        );

        let chain = refining_chain(&mut rng, &space);
        let fib = fiberize(&module, &chain).expect("finite exponent above one");
        let realized = fib.realize(&v);
        let seminorms = fib.seminorm_fn(&v).expect("chain refines fully");
        realization.check(
            realized.eq_mod(&v)
                && fib
                    .realize(&v.sub(&w))
                    .eq_mod(&realized.sub(&fib.realize(&w))),
            ctx,
        );
        seminorm_identity.check(
            space
                .support()
                .into_iter()
                .all(|i| seminorms[i].eq_tol(&nv[i], cfg.tol)),
            ctx,
        );

        let pool: Vec<ModuleElement> = (0..32)
            .map(|_| {
                module
                    .element(random_section(&mut rng, &profile, &dims))
                    .expect("generated sections fit")
            })
            .collect();
        let point = space.support()[0];
        let inf = fib
            .decomposition_infimum(&v, point, &pool)
            .expect("pool sections fit");
        let closed = fib.seminorm_at(&v, point).expect("support point");
        decomposition.check(inf.eq_tol(&closed, cfg.tol), ctx);
    }

    let mut report = Report::new(SuiteKind::ModuleAxioms);
    report.checks = vec![
        triangle.into_check(),
        homogeneity.into_check(),
        glueing.into_check(),
        ideal.into_check(),
        realization.into_check(),
        seminorm_identity.into_check(),
        decomposition.into_check(),
    ];
    report
}

// ---------------------------------------------------------------------------
// Pullback

fn pullback_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut identity = Tally::new("pointwise-norm-identity");
    let mut structure = Tally::new("module-structure-compatibility");
    let mut uniqueness = Tally::new("realization-uniqueness");
    let mut bochner = Tally::new("one-point-base-classical-norm");

    for seed in seeds {
        let mut rng = rng_for(seed);
        let (target, map) = random_pair(&mut rng, &profile);
        let module = random_module(
            &mut rng,
            &profile,
            &target,
            seed % 2 == 0,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let pb = pullback_module(&module, &map).expect("generated maps preserve the measure");
        let dims = module.bundle().dims();
        let v = module
            .element(random_section(&mut rng, &profile, &dims))
            .expect("generated sections fit");
        let w = module
            .element(random_section(&mut rng, &profile, &dims))
            .expect("generated sections fit");
        let ctx = || format!("seed {seed}");

        let pulled = pb.pull(&v).expect("source-module element");
        let upstairs = pulled.pointwise_norm();
        let downstairs = v.pointwise_norm();
        identity.check(
            map.source()
                .support()
                .into_iter()
                .all(|y| upstairs[y] == downstairs[map.apply(y)]),
            ctx,
        );

        let h = random_function(&mut rng, &profile, &target);
        let lhs = pb
            .pull(&v.mul_fn(&h).expect("function on the base"))
            .expect("pull");
        let rhs = pulled
            .mul_fn(&map.pull_function(&h))
            .expect("pulled function");
        let sum_pull = pb.pull(&v.add(&w)).expect("pull");
        structure.check(
            lhs.eq_mod(&rhs) && sum_pull.eq_mod(&pulled.add(&pb.pull(&w).expect("pull"))),
            ctx,
        );

        // An independent realization over a permuted carrier, with the
        // reindexing as the connecting isomorphism.
        let n = map.source().len();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rand::Rng::gen_range(&mut rng, 0..=i);
            perm.swap(i, j);
        }
        let perm_space = FiniteMeasureSpace::new(
            perm.iter()
                .map(|&y| format!("z_{}", map.source().label(y)))
                .collect::<Vec<_>>(),
            perm.iter().map(|&y| map.source().mass(y).clone()).collect(),
        )
        .expect("permuted weights stay valid");
        let perm_map = MeasurableMap::from_indices(
            perm_space,
            target.clone(),
            perm.iter().map(|&y| map.apply(y)).collect(),
        );
        let pb2 = pullback_module(&module, &perm_map).expect("permutation preserves fibers");
        let pulled2 = pb2.pull(&v).expect("pull");
        let norms2 = pulled2.pointwise_norm();
        uniqueness.check(
            (0..n).all(|k| {
                pulled2.value(k) == pulled.value(perm[k]) && norms2[k] == upstairs[perm[k]]
            }),
            ctx,
        );

        // One-point base: the pullback is the classical vector-valued space.
        let y_small = random_space(&mut rng, &profile, "s");
        let point = FiniteMeasureSpace::new(vec!["o"], vec![y_small.total_mass()])
            .expect("positive total mass");
        let to_point =
            MeasurableMap::from_indices(y_small.clone(), point.clone(), vec![0; y_small.len()]);
        let d = rand::Rng::gen_range(&mut rng, 1..=profile.max_dim);
        let fiber = if seed % 2 == 0 {
            FiberSpace::lp(LpExp::One, d)
        } else {
            FiberSpace::lp(LpExp::Inf, d)
        };
        let b: Vec<Rational> = (0..d)
            .map(|_| rat(rand::Rng::gen_range(&mut rng, -4..=4i64), 2))
            .collect();
        let one_pt = SectionModule::new(
            Arc::new(
                StrongBundle::uniform(point, fiber.clone(), vec![Section::new(vec![b.clone()])])
                    .expect("section fits the fiber"),
            ),
            Exponent::Finite(cfg.p.clone()),
            SigmaIdeal::Null,
        )
        .expect("exponent above one");
        let pb_pt = pullback_module(&one_pt, &to_point).expect("everything maps to the point");
        let g = random_function(&mut rng, &profile, &y_small);
        let vb = one_pt
            .element(Section::new(vec![b.clone()]))
            .expect("section fits");
        let section = pb_pt
            .pull(&vb)
            .expect("pull")
            .mul_fn(&g)
            .expect("function upstairs");
        let integral: Scalar = section
            .pointwise_norm_pow(&cfg.p)
            .into_iter()
            .zip(y_small.weights())
            .map(|(s, m)| s * Scalar::Exact(m.clone()))
            .sum();
        let norm_b = fiber.norm(&b).expect("vector fits").pow(&cfg.p);
        let classical: Scalar = y_small
            .support()
            .into_iter()
            .map(|y| {
                Scalar::Exact(g[y].abs()).pow(&cfg.p)
                    * norm_b.clone()
                    * Scalar::Exact(y_small.mass(y).clone())
            })
            .sum();
        bochner.check(integral.eq_tol(&classical, 0.0) && integral.is_exact(), ctx);
    }

    let mut report = Report::new(SuiteKind::Pullback);
    report.checks = vec![
        identity.into_check(),
        structure.into_check(),
        uniqueness.into_check(),
        bochner.into_check(),
    ];
    report
}

// ---------------------------------------------------------------------------
// Duality

fn dual_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut routes = Tally::new("functional-norm-two-routes");
    let mut bijection = Tally::new("action-tabulation-bijection");
    let mut attainment = Tally::new("pointwise-dual-attainment");
    let mut bound = Tally::new("pairing-bound");

    for seed in seeds {
        let mut rng = rng_for(seed);
        let space = random_space(&mut rng, &profile, "p");
        let rational_only = seed % 2 == 0;
        let module = random_module(
            &mut rng,
            &profile,
            &space,
            rational_only,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let dual = dual_module(&module).expect("conjugate exponent exists");
        let dims = module.bundle().dims();
        let omega = dual
            .element(random_section(&mut rng, &profile, &dims))
            .expect("dual sections fit");
        let v = module
            .element(random_section(&mut rng, &profile, &dims))
            .expect("generated sections fit");
        let ctx = || format!("seed {seed}");

        let extra: Vec<ModuleElement> = (0..8)
            .map(|_| {
                module
                    .element(random_section(&mut rng, &profile, &dims))
                    .expect("generated sections fit")
            })
            .collect();
        let closed = omega.module_norm();
        let searched =
            functional_norm_search(&module, &omega, &extra).expect("search pool is well formed");
        routes.check(searched.eq_tol(&closed, cfg.tol), ctx);

        let action = |u: &ModuleElement| pairing_action(&omega, u).expect("same base");
        let recovered = functional_from_action(&module, &action).expect("pairing is local");
        bijection.check(
            recovered.eq_mod(&omega)
                && recovered
                    .pointwise_norm()
                    .iter()
                    .zip(omega.pointwise_norm().iter())
                    .all(|(a, b)| a == b),
            ctx,
        );

        attainment.check(
            space.support().into_iter().all(|x| {
                let fiberx = module.bundle().fiber(x);
                let a = fiberx.attainment(omega.value(x)).expect("fits the fiber");
                let lhs = Scalar::Exact(pair(omega.value(x), &a).expect("dims match").abs());
                let rhs = fiberx.dual_norm(omega.value(x)).expect("fits")
                    * fiberx.norm(&a).expect("fits");
                lhs.eq_tol(&rhs, cfg.tol)
            }),
            ctx,
        );

        let pairs = pairing_action(&omega, &v).expect("same base");
        let no = omega.pointwise_norm();
        let nv = v.pointwise_norm();
        bound.check(
            (0..space.len()).all(|x| {
                Scalar::Exact(pairs[x].abs()).le_tol(&(no[x].clone() * nv[x].clone()), cfg.tol)
            }),
            ctx,
        );
    }

    let mut report = Report::new(SuiteKind::Dual);
    report.checks = vec![
        routes.into_check(),
        bijection.into_check(),
        attainment.into_check(),
        bound.into_check(),
    ];
    report
}

fn dual_of_pullback_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut fibers_agree = Tally::new("route-fibers-identical");
    let mut norms_agree = Tally::new("route-norms-agree");
    let mut pairing_compat = Tally::new("pairing-compatibility");
    let mut canonical = Tally::new("canonical-representatives-identical");

    for seed in seeds {
        let mut rng = rng_for(seed);
        let (target, map) = random_pair(&mut rng, &profile);
        let module = random_module(
            &mut rng,
            &profile,
            &target,
            seed % 2 == 0,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let (dual_then_pull, pull_then_dual) =
            dual_pullback_routes(&module, &map).expect("generated maps preserve the measure");
        let ctx = || format!("seed {seed}");

        fibers_agree.check(
            dual_then_pull.module().bundle().fibers() == pull_then_dual.bundle().fibers()
                && dual_then_pull.module().exponent() == pull_then_dual.exponent(),
            ctx,
        );

        let dualm = dual_module(&module).expect("conjugate exponent exists");
        let dims = module.bundle().dims();
        let omega = dualm
            .element(random_section(&mut rng, &profile, &dims))
            .expect("dual sections fit");
        let pulled_omega = dual_then_pull.pull(&omega).expect("pull");
        let relabeled = pull_then_dual
            .element(pulled_omega.section().clone())
            .expect("identical fibers");
        norms_agree.check(
            pulled_omega
                .pointwise_norm()
                .iter()
                .zip(relabeled.pointwise_norm().iter())
                .all(|(a, b)| a == b)
                && pulled_omega
                    .module_norm()
                    .eq_tol(&relabeled.module_norm(), 0.0),
            ctx,
        );

        let v = module
            .element(random_section(&mut rng, &profile, &dims))
            .expect("generated sections fit");
        let pb = pullback_module(&module, &map).expect("measure-preserving");
        let pulled_v = pb.pull(&v).expect("pull");
        let upstairs = pairing_action(&relabeled, &pulled_v).expect("same base");
        let downstairs = pairing_action(&omega, &v).expect("same base");
        pairing_compat.check(
            map.source()
                .support()
                .into_iter()
                .all(|y| upstairs[y] == downstairs[map.apply(y)]),
            ctx,
        );

        let w = pull_then_dual
            .element(random_section(
                &mut rng,
                &profile,
                &pull_then_dual.bundle().dims(),
            ))
            .expect("dual sections fit");
        let base_lifting = random_lifting(&mut rng, &target);
        let up_lifting = compatible_lifting(&map, &base_lifting).expect("measure-preserving");
        let lifted = lift_module(&pull_then_dual, &up_lifting).expect("lifting on the base");
        let through_lifting = lifted
            .quotient(&lifted.lift(&w).expect("lift"))
            .expect("descend");
        canonical.check(through_lifting.section() == w.section(), ctx);
    }

    let mut report = Report::new(SuiteKind::DualOfPullback);
    report.checks = vec![
        fibers_agree.into_check(),
        norms_agree.into_check(),
        pairing_compat.into_check(),
        canonical.into_check(),
    ];
    report
}

// ---------------------------------------------------------------------------
// Liftings

fn lifting_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut algebra = Tally::new("boolean-algebra-axioms");
    let mut norm_identity = Tally::new("lifted-norm-identity");
    let mut product = Tally::new("product-rule");
    let mut quotient = Tally::new("quotient-round-trip");
    let mut atoms_check = Tally::new("atom-dichotomy");
    let mut hom = Tally::new("lifted-morphism-norm");
    let mut diagram = Tally::new("pullback-lifting-diagram");

    for seed in seeds {
        let mut rng = rng_for(seed);
        let space = random_space(&mut rng, &profile, "p");
        let lifting = random_lifting(&mut rng, &space);
        let ctx = || format!("seed {seed}");

        let n = space.len();
        assert!(n <= EXHAUSTIVE_POINT_LIMIT, "generated carriers stay small");
        let full: u32 = (1 << n) - 1;
        let supp_mask: u32 = space.support().into_iter().fold(0, |m, i| m | (1 << i));
        let mut ok = lifting.lift_mask(0) == 0 && lifting.lift_mask(full) == full;
        'outer: for e in 0..=full {
            let le = lifting.lift_mask(e);
            if lifting.lift_mask(!e & full) != (!le & full)
                || (le & supp_mask) != (e & supp_mask)
                || lifting.lift_mask(e & supp_mask) != le
            {
                ok = false;
                break;
            }
            for f in 0..=full {
                let lf = lifting.lift_mask(f);
                if lifting.lift_mask(e & f) != (le & lf) || lifting.lift_mask(e | f) != (le | lf) {
                    ok = false;
                    break 'outer;
                }
            }
        }
        algebra.check(ok, ctx);

        let module = random_module(
            &mut rng,
            &profile,
            &space,
            true,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let dims = module.bundle().dims();
        let lifted = lift_module(&module, &lifting).expect("lifting on the base");
        let v = module
            .element(random_section(&mut rng, &profile, &dims))
            .expect("generated sections fit");
        let lv = lifted.lift(&v).expect("lift");
        let nv = v.pointwise_norm();
        let nlv = lv.pointwise_norm();
        norm_identity.check(
            (0..n).all(|x| nlv[x] == nv[lifting.apply(x)])
                && lv.eq_mod(
                    &lifted
                        .quotient(&lv)
                        .map(|q| lifted.lift(&q).expect("lift"))
                        .expect("descend"),
                ),
            ctx,
        );

        let f = random_function(&mut rng, &profile, &space);
        let lhs = lifted
            .lift(&v.mul_fn(&f).expect("function on base"))
            .expect("lift");
        let rhs = lv.mul_fn(&lifting.lift_fn(&f)).expect("lifted function");
        product.check(lhs.section() == rhs.section(), ctx);

        let back = lifted.quotient(&lv).expect("descend");
        quotient.check(back.eq_mod(&v) && lifted.is_lifted(&lv), ctx);

        let atoms = lifting.atoms();
        let mut dichotomy = true;
        for e in 0..=full {
            let le = lifting.lift_mask(e);
            for atom in &atoms {
                let inside = atom.iter().filter(|&&i| le & (1 << i) != 0).count();
                if inside != 0 && inside != atom.len() {
                    dichotomy = false;
                }
            }
        }
        for atom in &atoms {
            let first = lv.value(atom[0]);
            if !atom.iter().all(|&i| lv.value(i) == first) {
                dichotomy = false;
            }
        }
        atoms_check.check(dichotomy, ctx);

        let other = random_module(
            &mut rng,
            &profile,
            &space,
            true,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let matrices: Vec<Vec<Vec<Rational>>> = (0..n)
            .map(|x| {
                let rows = other.bundle().fiber(x).dim();
                let cols = module.bundle().fiber(x).dim();
                (0..rows)
                    .map(|_| {
                        (0..cols)
                            .map(|_| rat(rand::Rng::gen_range(&mut rng, -2..=2i64), 1))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let t = morphism(&module, &other, matrices).expect("dims match");
        let lifted_other = lift_module(&other, &lifting).expect("lifting on the base");
        let lt = t.lift(&lifted, &lifted_other).expect("shared lifting");
        let tn = t
            .pointwise_norm()
            .expect("rational fibers support operator norms");
        let ltn = lt
            .pointwise_norm()
            .expect("rational fibers support operator norms");
        let applied = lifted_other
            .lift(&t.apply(&v).expect("apply"))
            .expect("lift");
        let applied2 = lt.apply(&lv).expect("apply");
        hom.check(
            (0..n).all(|x| ltn[x] == tn[lifting.apply(x)])
                && applied.section() == applied2.section(),
            ctx,
        );

        let (target, map) = random_pair(&mut rng, &profile);
        let base_module = random_module(
            &mut rng,
            &profile,
            &target,
            true,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        diagram.check(
            diagram_commutes(&mut rng, &profile, &map, &base_module),
            ctx,
        );
    }

    let mut report = Report::new(SuiteKind::Lifting);
    report.checks = vec![
        algebra.into_check(),
        norm_identity.into_check(),
        product.into_check(),
        quotient.into_check(),
        atoms_check.into_check(),
        hom.into_check(),
        diagram.into_check(),
    ];
    report
}

fn diagram_commutes(
    rng: &mut rand_chacha::ChaCha8Rng,
    profile: &SizeProfile,
    map: &MeasurableMap,
    module: &Arc<SectionModule>,
) -> bool {
    let base_lifting = random_lifting(rng, map.target());
    let Ok(up_lifting) = compatible_lifting(map, &base_lifting) else {
        return false;
    };
    if verify_compatibility(map, &up_lifting, &base_lifting).is_err() {
        return false;
    }
    let v = module
        .element(random_section(rng, profile, &module.bundle().dims()))
        .expect("generated sections fit");

    // Lift downstairs, then pull back.
    let lifted_down = lift_module(module, &base_lifting).expect("lifting on the base");
    let lv = lifted_down.lift(&v).expect("lift");
    let pb_of_lifted = pullback_module(lifted_down.module(), map).expect("measure-preserving");
    let route_a = pb_of_lifted.pull(&lv).expect("pull");

    // Pull back, then lift upstairs.
    let pb = pullback_module(module, map).expect("measure-preserving");
    let pulled = pb.pull(&v).expect("pull");
    let lifted_up = lift_module(pb.module(), &up_lifting).expect("lifting upstairs");
    let route_b = lifted_up.lift(&pulled).expect("lift");

    route_a.section() == route_b.section()
        && pb_of_lifted.module().bundle().fibers() == lifted_up.module().bundle().fibers()
}

fn diagram_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut compat = Tally::new("compatible-lifting-construction");
    let mut commutes = Tally::new("pullback-lifting-diagram");

    for seed in seeds {
        let mut rng = rng_for(seed);
        let (target, map) = random_pair(&mut rng, &profile);
        let base = random_lifting(&mut rng, &target);
        let ctx = || format!("seed {seed}");
        match compatible_lifting(&map, &base) {
            Ok(up) => {
                compat.check(verify_compatibility(&map, &up, &base).is_ok(), ctx);
            }
            Err(_) => compat.check(false, ctx),
        }
        let module = random_module(
            &mut rng,
            &profile,
            &target,
            true,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        commutes.check(diagram_commutes(&mut rng, &profile, &map, &module), ctx);
    }

    let mut report = Report::new(SuiteKind::Diagram);
    report.checks = vec![compat.into_check(), commutes.into_check()];
    report
}

// ---------------------------------------------------------------------------
// Local operators

fn homloc_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut roundtrip = Tally::new("section-operator-round-trip");
    let mut norm_preserving = Tally::new("operator-norm-identity");
    let mut agreement = Tally::new("extension-agrees-on-pullbacks");
    let mut rejection = Tally::new("undominated-operators-rejected");

    for seed in seeds {
        let mut rng = rng_for(seed);
        let (target, map) = if seed % 3 == 2 {
            random_pair_ac(&mut rng, &profile)
        } else {
            random_pair(&mut rng, &profile)
        };
        let module = random_module(
            &mut rng,
            &profile,
            &target,
            true,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let pb = if map.is_measure_preserving() {
            pullback_module(&module, &map)
        } else {
            pullback_module_ac(&module, &map)
        }
        .expect("generated maps push into the base");
        let dual_pb = dual_module(pb.module()).expect("conjugate exponent exists");
        let w = dual_pb
            .element(random_section(&mut rng, &profile, &dual_pb.bundle().dims()))
            .expect("dual sections fit");
        let ctx = || format!("seed {seed}");

        let norms = w.pointwise_norm();
        let g: Vec<Rational> = norms
            .iter()
            .map(|s| s.as_exact().expect("rational fibers").clone())
            .collect();
        let action = |v: &ModuleElement| -> Vec<Rational> {
            (0..map.source().len())
                .map(|y| pair(w.value(y), v.value(map.apply(y))).expect("dims match"))
                .collect()
        };
        let ext = extend_local_operator(&pb, &action, &g);
        let Ok(ext) = ext else {
            roundtrip.check(false, ctx);
            continue;
        };
        let recovered = dual_pb
            .element(ext.coeffs().clone())
            .expect("coefficients fit the dual fibers");
        roundtrip.check(recovered.eq_mod(&w), ctx);

        norm_preserving.check(
            ext.pointwise_norm()
                .iter()
                .zip(norms.iter())
                .enumerate()
                .all(|(y, (a, b))| map.source().is_null(y) || a == b),
            ctx,
        );

        let dims = module.bundle().dims();
        let mut agrees = true;
        for _ in 0..4 {
            let v = module
                .element(random_section(&mut rng, &profile, &dims))
                .expect("generated sections fit");
            let pulled = pb.pull(&v).expect("pull");
            let direct = action(&v);
            let extended = ext.apply(&pulled).expect("pullback element");
            for y in map.source().support() {
                if direct[y] != extended[y] {
                    agrees = false;
                }
            }
        }
        agreement.check(agrees, ctx);

        let has_mass = map
            .source()
            .support()
            .into_iter()
            .any(|y| !norms[y].is_zero());
        if has_mass {
            let doubled = |v: &ModuleElement| -> Vec<Rational> {
                action(v).into_iter().map(|r| r * rat_int(2)).collect()
            };
            let err = extend_local_operator(&pb, &doubled, &g);
            rejection.check(matches!(err, Err(Error::DominationFails { .. })), ctx);
        }
    }

    let mut report = Report::new(SuiteKind::HomLoc);
    report.checks = vec![
        roundtrip.into_check(),
        norm_preserving.into_check(),
        agreement.into_check(),
        rejection.into_check(),
    ];
    report
}

// ---------------------------------------------------------------------------
// Weak-star approximation

/// The worked instance every run must reproduce: two-point base, three-point
/// carrier, `l^1` plane fibers.
pub fn canonical_weakstar() -> (
    Arc<SectionModule>,
    MeasurableMap,
    PullbackModule,
    ModuleElement,
    ModuleElement,
    PartitionChain,
) {
    let x = FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(1, 2)])
        .expect("positive weights");
    let y = FiniteMeasureSpace::new(
        vec!["y1", "y2", "y3"],
        vec![rat(1, 4), rat(1, 4), rat(1, 2)],
    )
    .expect("positive weights");
    let map = MeasurableMap::from_indices(y.clone(), x.clone(), vec![0, 0, 1]);
    let sec = |rows: &[&[i64]]| {
        Section::new(
            rows.iter()
                .map(|r| r.iter().map(|&c| rat_int(c)).collect())
                .collect(),
        )
    };
    let bundle = StrongBundle::uniform(
        x,
        FiberSpace::lp(LpExp::One, 2),
        vec![sec(&[&[1, 0], &[2, 2]]), sec(&[&[0, 1], &[1, 0]])],
    )
    .expect("sections fit");
    let module = SectionModule::new(
        Arc::new(bundle),
        Exponent::Finite(rat_int(2)),
        SigmaIdeal::Null,
    )
    .expect("exponent above one");
    let pb = pullback_module(&module, &map).expect("measure-preserving");
    let dual_pb = dual_module(pb.module()).expect("conjugate exponent");
    let l = dual_pb
        .element(sec(&[&[1, 0], &[0, 1], &[1, 1]]))
        .expect("dual section fits");
    let v = module
        .element(sec(&[&[1, 0], &[2, 2]]))
        .expect("section fits");
    let probe = pb.pull(&v).expect("pull");
    let chain = crate::measure::build_chain(&y, &[vec!["y1".to_string()], vec!["y2".to_string()]])
        .expect("labels resolve");
    (module, map, pb, l, probe, chain)
}

fn weakstar_seeded(seeds: std::ops::Range<u64>, cfg: &SuiteConfig) -> Report {
    let profile = SizeProfile::default();
    let mut modulation = Tally::new("redistribution-modulation");
    let mut integral = Tally::new("redistribution-integral-identity");
    let mut contraction = Tally::new("redistribution-contraction");
    let mut unit = Tally::new("redistribution-of-the-unit");
    let mut jensen = Tally::new("conditional-jensen");
    let mut bound = Tally::new("uniform-norm-bound");
    let mut reaches = Tally::new("refining-chain-reaches-the-section");
    let mut canonical = Tally::new("canonical-gap-sequence");

    // The canonical instance is a fixed oracle, not a seeded family.
    {
        let (_, _, pb, l, probe, chain) = canonical_weakstar();
        let report = approximate(&pb, &l, &chain, &[probe], &rat_int(2))
            .expect("canonical data is well formed");
        let first = &report.levels[0];
        let last = report.levels.last().expect("chain has levels");
        canonical.check(
            first.probe_gaps == vec![rat(1, 4)]
                && last.probe_gaps == vec![rat_int(0)]
                && last.approx.eq_mod(&l),
            || "canonical instance".to_string(),
        );
    }

    for seed in seeds {
        let mut rng = rng_for(seed);
        let (target, map) = random_pair(&mut rng, &profile);
        let pr = pr_operator(&map).expect("measure-preserving maps redistribute");
        let g = random_function(&mut rng, &profile, map.source());
        let h = random_function(&mut rng, &profile, &target);
        let ctx = || format!("seed {seed}");

        let pulled_h = map.pull_function(&h);
        let prod: Vec<Rational> = pulled_h.iter().zip(&g).map(|(a, b)| a * b).collect();
        let lhs = pr.apply(&prod);
        let rhs: Vec<Rational> = h
            .iter()
            .zip(pr.apply(&g))
            .enumerate()
            .map(|(x, (a, b))| {
                if target.is_null(x) {
                    Rational::zero()
                } else {
                    a * b
                }
            })
            .collect();
        modulation.check(lhs == rhs, ctx);

        integral.check(
            target.integrate(&pr.apply(&g)) == map.source().integrate(&g),
            ctx,
        );
        contraction.check(
            target.l1_norm(&pr.apply(&g)) <= map.source().l1_norm(&g),
            ctx,
        );
        let ones = vec![Rational::one(); map.source().len()];
        unit.check(
            target
                .support()
                .into_iter()
                .all(|x| pr.apply(&ones)[x] == Rational::one()),
            ctx,
        );

        let mut jensen_ok = true;
        for p in [1u32, 2, 3] {
            for _ in 0..2 {
                let set = random_subset(&mut rng, map.source());
                let f = random_function(&mut rng, &profile, map.source());
                let pairs = jensen_gap(&pr, &set, &f, p).expect("exponent above zero");
                if !pairs.iter().all(|(lhs, rhs)| lhs <= rhs) {
                    jensen_ok = false;
                }
            }
        }
        jensen.check(jensen_ok, ctx);

        let module = random_module(
            &mut rng,
            &profile,
            &target,
            true,
            Exponent::Finite(cfg.p.clone()),
        )
        .expect("exponent above one");
        let pb = pullback_module(&module, &map).expect("measure-preserving");
        let dual_pb = dual_module(pb.module()).expect("conjugate exponent exists");
        let w = dual_pb
            .element(random_section(&mut rng, &profile, &dual_pb.bundle().dims()))
            .expect("dual sections fit");
        let chain = refining_chain(&mut rng, map.source());
        let dims = module.bundle().dims();
        let probes: Vec<ModuleElement> = (0..3)
            .map(|_| {
                let v = module
                    .element(random_section(&mut rng, &profile, &dims))
                    .expect("generated sections fit");
                pb.pull(&v).expect("pull")
            })
            .collect();
        for e in cfg.weakstar_exponents() {
            let report =
                approximate(&pb, &w, &chain, &probes, &e).expect("well-formed approximation");
            bound.check(
                report.levels.iter().all(|lvl| {
                    lvl.norm_integral
                        .le_tol(&report.target_norm_integral, cfg.tol)
                }),
                ctx,
            );
            let last = report.levels.last().expect("chain has levels");
            reaches.check(
                last.approx.eq_mod(&w) && last.probe_gaps.iter().all(Rational::is_zero),
                ctx,
            );
        }
    }

    let mut report = Report::new(SuiteKind::WeakStar);
    report.checks = vec![
        canonical.into_check(),
        modulation.into_check(),
        integral.into_check(),
        contraction.into_check(),
        unit.into_check(),
        jensen.into_check(),
        bound.into_check(),
        reaches.into_check(),
    ];
    report
}

// ---------------------------------------------------------------------------
// Scenario-driven runs

/// Run a suite against the named objects of a scenario.
pub fn run_on_scenario(kind: SuiteKind, sc: &Scenario, cfg: &SuiteConfig) -> Result<Vec<Report>> {
    match kind {
        SuiteKind::All => SuiteKind::concrete()
            .into_iter()
            .filter(|k| scenario_supports(*k, sc))
            .map(|k| run_one_on_scenario(k, sc, cfg))
            .collect(),
        k => Ok(vec![run_one_on_scenario(k, sc, cfg)?]),
    }
}

fn scenario_supports(kind: SuiteKind, sc: &Scenario) -> bool {
    match kind {
        SuiteKind::Doob => !sc.chains.is_empty() && !sc.functions.is_empty(),
        SuiteKind::ModuleAxioms => !sc.modules.is_empty(),
        SuiteKind::Pullback => !sc.maps.is_empty() && !sc.modules.is_empty(),
        SuiteKind::Dual => sc.duals.values().any(|(_, map, _)| map.is_none()),
        SuiteKind::DualOfPullback | SuiteKind::HomLoc | SuiteKind::WeakStar => {
            sc.duals.values().any(|(_, map, _)| map.is_some())
        }
        SuiteKind::Lifting | SuiteKind::Diagram => !sc.liftings.is_empty(),
        SuiteKind::All => true,
    }
}

fn chain_on<'a>(sc: &'a Scenario, space: &FiniteMeasureSpace) -> Result<&'a PartitionChain> {
    sc.chains
        .values()
        .find(|c| c.space() == space)
        .ok_or_else(|| Error::BadScenario("no chain on the required space".into()))
}

fn module_sections(sc: &Scenario, module: &Arc<SectionModule>) -> Vec<ModuleElement> {
    sc.sections
        .values()
        .filter_map(|(bundle_name, data)| {
            let bundle = sc.bundles.get(bundle_name)?;
            if Arc::ptr_eq(module.bundle(), bundle) {
                module.element(data.clone()).ok()
            } else {
                None
            }
        })
        .collect()
}

fn run_one_on_scenario(kind: SuiteKind, sc: &Scenario, cfg: &SuiteConfig) -> Result<Report> {
    let mut report = Report::new(kind);
    match kind {
        SuiteKind::Doob => {
            let mut any = false;
            for (cname, chain) in &sc.chains {
                if !chain.is_fully_refining() {
                    continue;
                }
                for (fname, (space_name, values)) in &sc.functions {
                    if sc.spaces[space_name] != *chain.space() {
                        continue;
                    }
                    any = true;
                    let fs = exact_vec(values);
                    let space = chain.space();
                    let norm_f = scalar_l1(space, &fs);
                    let mut ok = true;
                    for k in 0..chain.num_levels() {
                        let pk = cond_exp(chain, k, &fs)?;
                        ok &= scalar_l1(space, &pk).le_tol(&norm_f, 0.0);
                        for j in 0..chain.num_levels() {
                            let iterated = cond_exp(chain, j, &pk)?;
                            let direct = cond_exp(chain, j.min(k), &fs)?;
                            ok &= space
                                .support()
                                .into_iter()
                                .all(|i| iterated[i] == direct[i]);
                        }
                    }
                    let r = rep(chain, &fs)?;
                    ok &= space.support().into_iter().all(|i| r.rep[i] == fs[i]);
                    report.checks.push(Check {
                        name: format!("doob-laws[{cname},{fname}]"),
                        passed: ok,
                        detail: format!("stabilized at level {}", r.stabilization_level),
                    });
                }
            }
            if !any {
                return Err(Error::BadScenario(
                    "doob suite needs a fully refining chain and a function on its space".into(),
                ));
            }
        }
        SuiteKind::ModuleAxioms => {
            for (mname, module) in &sc.modules {
                let sections = module_sections(sc, module);
                if sections.is_empty() {
                    continue;
                }
                let mut ok = true;
                for v in &sections {
                    for w in &sections {
                        let nv = v.pointwise_norm();
                        let nw = w.pointwise_norm();
                        let ns = v.add(w).pointwise_norm();
                        ok &= (0..module.base().len())
                            .all(|i| ns[i].le_tol(&(nv[i].clone() + nw[i].clone()), cfg.tol));
                    }
                }
                if let (Exponent::Finite(p), Ok(chain)) =
                    (module.exponent(), chain_on(sc, module.base()))
                {
                    if *p > Rational::one() && chain.is_fully_refining() {
                        let fib = fiberize(module, chain)?;
                        for v in &sections {
                            let sem = fib.seminorm_fn(v)?;
                            let nv = v.pointwise_norm();
                            ok &= module
                                .base()
                                .support()
                                .into_iter()
                                .all(|i| sem[i].eq_tol(&nv[i], cfg.tol));
                            ok &= fib.realize(v).eq_mod(v);
                        }
                    }
                }
                report.checks.push(Check {
                    name: format!("module-axioms[{mname}]"),
                    passed: ok,
                    detail: format!("{} sections", sections.len()),
                });
            }
            if report.checks.is_empty() {
                return Err(Error::BadScenario(
                    "module-axioms suite needs a module with named sections".into(),
                ));
            }
        }
        SuiteKind::Pullback => {
            let mut any = false;
            for (map_name, map) in &sc.maps {
                for (mname, module) in &sc.modules {
                    if module.base() != map.target() {
                        continue;
                    }
                    let sections = module_sections(sc, module);
                    if sections.is_empty() {
                        continue;
                    }
                    any = true;
                    let pb = pullback_module(module, map)?;
                    let mut ok = true;
                    for v in &sections {
                        let pulled = pb.pull(v)?;
                        let up = pulled.pointwise_norm();
                        let down = v.pointwise_norm();
                        ok &= map
                            .source()
                            .support()
                            .into_iter()
                            .all(|y| up[y] == down[map.apply(y)]);
                    }
                    report.checks.push(Check {
                        name: format!("pullback-norm-identity[{map_name},{mname}]"),
                        passed: ok,
                        detail: format!("{} sections", sections.len()),
                    });
                }
            }
            if !any {
                return Err(Error::BadScenario(
                    "pullback suite needs a map and a module over its target".into(),
                ));
            }
        }
        SuiteKind::Dual => {
            let mut any = false;
            for (dname, (mname, map, omega)) in &sc.duals {
                if map.is_some() {
                    continue;
                }
                any = true;
                let module = &sc.modules[mname];
                let closed = omega.module_norm();
                let searched = functional_norm_search(module, omega, &module_sections(sc, module))?;
                let action = |u: &ModuleElement| pairing_action(omega, u).expect("same base");
                let recovered = functional_from_action(module, &action)?;
                report.checks.push(Check {
                    name: format!("dual-realization[{dname}]"),
                    passed: searched.eq_tol(&closed, cfg.tol) && recovered.eq_mod(omega),
                    detail: format!("norm {}", closed),
                });
            }
            if !any {
                return Err(Error::BadScenario(
                    "dual suite needs a dual section without a map".into(),
                ));
            }
        }
        SuiteKind::DualOfPullback => {
            let mut any = false;
            for (dname, (mname, map_name, w)) in &sc.duals {
                let Some(map_name) = map_name else { continue };
                any = true;
                let module = &sc.modules[mname];
                let map = &sc.maps[map_name];
                let (dual_then_pull, pull_then_dual) = dual_pullback_routes(module, map)?;
                let mut ok =
                    dual_then_pull.module().bundle().fibers() == pull_then_dual.bundle().fibers();
                let relabeled = pull_then_dual.element(w.section().clone())?;
                ok &= relabeled
                    .pointwise_norm()
                    .iter()
                    .zip(w.pointwise_norm().iter())
                    .all(|(a, b)| a == b);
                report.checks.push(Check {
                    name: format!("dual-of-pullback-routes[{dname}]"),
                    passed: ok,
                    detail: "fiber and norm agreement".into(),
                });
            }
            if !any {
                return Err(Error::BadScenario(
                    "dual-of-pullback suite needs a dual section tagged with a map".into(),
                ));
            }
        }
        SuiteKind::Lifting => {
            for (lname, lifting) in &sc.liftings {
                let n = lifting.space().len();
                let mut ok = n <= EXHAUSTIVE_POINT_LIMIT;
                if ok {
                    let full: u32 = (1 << n) - 1;
                    for e in 0..=full {
                        let le = lifting.lift_mask(e);
                        ok &= lifting.lift_mask(!e & full) == (!le & full);
                        for f in 0..=full {
                            ok &= lifting.lift_mask(e & f) == (le & lifting.lift_mask(f));
                        }
                    }
                }
                for module in sc.modules.values() {
                    if module.base() != lifting.space() {
                        continue;
                    }
                    let lifted = lift_module(module, lifting)?;
                    for v in module_sections(sc, module) {
                        let lv = lifted.lift(&v)?;
                        let nv = v.pointwise_norm();
                        let nlv = lv.pointwise_norm();
                        ok &= (0..n).all(|x| nlv[x] == nv[lifting.apply(x)]);
                        ok &= lifted.quotient(&lv)?.eq_mod(&v);
                    }
                }
                report.checks.push(Check {
                    name: format!("lifting-axioms[{lname}]"),
                    passed: ok,
                    detail: format!("{n}-point lattice, exhaustive"),
                });
            }
            if report.checks.is_empty() {
                return Err(Error::BadScenario("lifting suite needs a lifting".into()));
            }
        }
        SuiteKind::Diagram => {
            let mut any = false;
            for (map_name, map) in &sc.maps {
                for (lname, base) in &sc.liftings {
                    if base.space() != map.target() {
                        continue;
                    }
                    any = true;
                    let up = compatible_lifting(map, base)?;
                    let mut ok = verify_compatibility(map, &up, base).is_ok();
                    for module in sc.modules.values() {
                        if module.base() != map.target() {
                            continue;
                        }
                        for v in module_sections(sc, module) {
                            let lifted_down = lift_module(module, base)?;
                            let lv = lifted_down.lift(&v)?;
                            let pb_lifted = pullback_module(lifted_down.module(), map)?;
                            let route_a = pb_lifted.pull(&lv)?;
                            let pb = pullback_module(module, map)?;
                            let lifted_up = lift_module(pb.module(), &up)?;
                            let route_b = lifted_up.lift(&pb.pull(&v)?)?;
                            ok &= route_a.section() == route_b.section();
                        }
                    }
                    report.checks.push(Check {
                        name: format!("lifting-diagram[{map_name},{lname}]"),
                        passed: ok,
                        detail: "pullback and lifting commute".into(),
                    });
                }
            }
            if !any {
                return Err(Error::BadScenario(
                    "diagram suite needs a map and a lifting on its target".into(),
                ));
            }
        }
        SuiteKind::HomLoc => {
            let mut any = false;
            for (dname, (mname, map_name, w)) in &sc.duals {
                let Some(map_name) = map_name else { continue };
                any = true;
                let module = &sc.modules[mname];
                let map = &sc.maps[map_name];
                let pb = pullback_module(module, map)?;
                let g: Vec<Rational> = w
                    .pointwise_norm()
                    .iter()
                    .map(|s| {
                        s.as_exact().cloned().unwrap_or_else(|| {
                            Rational::from_float(s.to_f64()).expect("finite norm")
                        })
                    })
                    .collect();
                let action = |v: &ModuleElement| -> Vec<Rational> {
                    (0..map.source().len())
                        .map(|y| pair(w.value(y), v.value(map.apply(y))).expect("dims match"))
                        .collect()
                };
                let ext = extend_local_operator(&pb, &action, &g)?;
                let dual_pb = dual_module(pb.module())?;
                let recovered = dual_pb.element(ext.coeffs().clone())?;
                report.checks.push(Check {
                    name: format!("local-operator-round-trip[{dname}]"),
                    passed: recovered.eq_mod(w),
                    detail: "tabulation inverts realization".into(),
                });
            }
            if !any {
                return Err(Error::BadScenario(
                    "homloc suite needs a dual section tagged with a map".into(),
                ));
            }
        }
        SuiteKind::WeakStar => {
            let mut any = false;
            for (dname, (mname, map_name, l)) in &sc.duals {
                let Some(map_name) = map_name else { continue };
                let module = &sc.modules[mname];
                let map = &sc.maps[map_name];
                let Ok(chain) = chain_on(sc, map.source()) else {
                    continue;
                };
                any = true;
                let pb = pullback_module(module, map)?;
                let probes: Vec<ModuleElement> = module_sections(sc, module)
                    .iter()
                    .map(|v| pb.pull(v))
                    .collect::<Result<_>>()?;
                for e in cfg.weakstar_exponents() {
                    let rep = approximate(&pb, l, chain, &probes, &e)?;
                    let ok =
                        rep.levels.iter().all(|lvl| {
                            lvl.norm_integral.le_tol(&rep.target_norm_integral, cfg.tol)
                        }) && rep
                            .levels
                            .last()
                            .map(|lvl| {
                                !chain.is_fully_refining()
                                    || lvl.probe_gaps.iter().all(Rational::is_zero)
                            })
                            .unwrap_or(false);
                    report.checks.push(Check {
                        name: format!("weakstar-approximation[{dname},e={e}]"),
                        passed: ok,
                        detail: format!("{} levels", rep.levels.len()),
                    });
                }
            }
            if !any {
                return Err(Error::BadScenario(
                    "weakstar suite needs a mapped dual section and a chain upstairs".into(),
                ));
            }
        }
        SuiteKind::All => unreachable!("expanded by run_on_scenario"),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for kind in SuiteKind::concrete() {
            assert_eq!(kind.name().parse::<SuiteKind>().unwrap(), kind);
        }
        assert!(matches!(
            "bogus".parse::<SuiteKind>(),
            Err(Error::UnknownSuite(_))
        ));
    }

    #[test]
    fn every_seeded_suite_passes_on_a_short_range() {
        let cfg = SuiteConfig::default();
        for kind in SuiteKind::concrete() {
            let reports = run_seeded(kind, 0..5, &cfg);
            for report in reports {
                for check in &report.checks {
                    assert!(
                        check.passed,
                        "{}::{} failed: {}",
                        report.suite, check.name, check.detail
                    );
                }
            }
        }
    }

    #[test]
    fn canonical_weakstar_matches_the_oracle() {
        let (_, _, pb, l, probe, chain) = canonical_weakstar();
        let report = approximate(&pb, &l, &chain, &[probe], &rat_int(2)).unwrap();
        assert_eq!(report.levels[0].probe_gaps, vec![rat(1, 4)]);
        assert_eq!(report.levels[2].probe_gaps, vec![rat_int(0)]);
    }
}
