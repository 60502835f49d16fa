//! Strong Banach bundles, their section modules, and fiberization.
//!
//! A strong bundle assigns a normed fiber to every carrier point and carries a
//! finite family of test sections that generates the module. A section module
//! is the space of sections with a pointwise norm `|v|(x) = |v(x)|_{V_x}`,
//! considered either up to the null ideal (classes, with canonical
//! representatives vanishing on null points) or pointwise everywhere (the
//! trivial ideal, used by the lifted layer). The module norm integrates the
//! `p`-th power of the pointwise norm, or takes its essential supremum.
//!
//! Fiberization goes the other way: from the module and a fully refining
//! partition chain it recovers, at every positive-mass point, a normed fiber
//! and an embedding. The fiber seminorm of `v` at `x` is the stabilized
//! average of `|v|^p` over the chain, rooted; a bounded decomposition search
//! probes that no splitting `v = v_1 + ... + v_n` can beat it.

use std::sync::Arc;

use crate::doob;
use crate::error::{Error, Result};
use crate::fiber::FiberSpace;
use crate::measure::{FiniteMeasureSpace, PartitionChain};
use crate::scalar::{Rational, Scalar};
use num::traits::{One, Zero};

/// The integrability exponent of a section module.
#[derive(Debug, Clone, PartialEq)]
pub enum Exponent {
    Finite(Rational),
    Infinity,
}

impl Exponent {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }

    /// The conjugate exponent: `1/p + 1/q = 1`, with `1` and `infinity`
    /// exchanged.
    pub fn conjugate(&self) -> Result<Exponent> {
        match self {
            Exponent::Infinity => Ok(Exponent::Finite(Rational::one())),
            Exponent::Finite(p) => {
                if *p < Rational::one() {
                    Err(Error::BadExponents(format!("exponent {p} below 1")))
                } else if *p == Rational::one() {
                    Ok(Exponent::Infinity)
                } else {
                    Ok(Exponent::Finite(p / (p - Rational::one())))
                }
            }
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

/// Which sections are identified: classes modulo null sets, or nothing.
/// The trivial ideal is the lifted regime, where null points carry data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaIdeal {
    Null,
    Trivial,
}

/// A section assigns to each carrier point a vector in that point's fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub values: Vec<Vec<Rational>>,
}

impl Section {
    pub fn new(values: Vec<Vec<Rational>>) -> Self {
        Section { values }
    }

    pub fn zero(dims: &[usize]) -> Self {
        Section {
            values: dims.iter().map(|&d| vec![Rational::zero(); d]).collect(),
        }
    }

    pub fn value(&self, i: usize) -> &[Rational] {
        &self.values[i]
    }

    pub fn add(&self, other: &Section) -> Section {
        Section {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &Section) -> Section {
        Section {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, c: &Rational) -> Section {
        Section {
            values: self
                .values
                .iter()
                .map(|a| a.iter().map(|x| x * c).collect())
                .collect(),
        }
    }

    /// Multiply by a scalar function, pointwise.
    pub fn mul_fn(&self, f: &[Rational]) -> Section {
        Section {
            values: self
                .values
                .iter()
                .zip(f)
                .map(|(a, c)| a.iter().map(|x| x * c).collect())
                .collect(),
        }
    }
}

/// A bundle of normed fibers over a finite measure space, together with a
/// generating family of test sections.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongBundle {
    base: FiniteMeasureSpace,
    fibers: Vec<FiberSpace>,
    test_sections: Vec<Section>,
}

impl StrongBundle {
    pub fn new(
        base: FiniteMeasureSpace,
        fibers: Vec<FiberSpace>,
        test_sections: Vec<Section>,
    ) -> Result<Self> {
        if fibers.len() != base.len() {
            return Err(Error::DimensionMismatch {
                expected: base.len(),
                got: fibers.len(),
            });
        }
        let bundle = StrongBundle {
            base,
            fibers,
            test_sections: Vec::new(),
        };
        for s in &test_sections {
            bundle.check_section(s)?;
        }
        Ok(StrongBundle {
            test_sections,
            ..bundle
        })
    }

    pub fn uniform(
        base: FiniteMeasureSpace,
        fiber: FiberSpace,
        test_sections: Vec<Section>,
    ) -> Result<Self> {
        let fibers = vec![fiber; base.len()];
        Self::new(base, fibers, test_sections)
    }

    pub fn base(&self) -> &FiniteMeasureSpace {
        &self.base
    }

    pub fn fiber(&self, i: usize) -> &FiberSpace {
        &self.fibers[i]
    }

    pub fn fibers(&self) -> &[FiberSpace] {
        &self.fibers
    }

    pub fn test_sections(&self) -> &[Section] {
        &self.test_sections
    }

    pub fn dims(&self) -> Vec<usize> {
        self.fibers.iter().map(FiberSpace::dim).collect()
    }

    pub fn check_section(&self, s: &Section) -> Result<()> {
        if s.values.len() != self.base.len() {
            return Err(Error::DimensionMismatch {
                expected: self.base.len(),
                got: s.values.len(),
            });
        }
        for (i, v) in s.values.iter().enumerate() {
            if v.len() != self.fibers[i].dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.fibers[i].dim(),
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// The basis section `e_j 1_{x}`: a single-point indicator localization
    /// of a fiber basis vector. These witness generation.
    pub fn localized_basis(&self, point: usize, j: usize) -> Section {
        let mut s = Section::zero(&self.dims());
        s.values[point][j] = Rational::one();
        s
    }
}

/// A module of sections of a strong bundle with an integrability exponent,
/// considered modulo the chosen ideal.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionModule {
    bundle: Arc<StrongBundle>,
    exponent: Exponent,
    ideal: SigmaIdeal,
}

impl SectionModule {
    pub fn new(
        bundle: Arc<StrongBundle>,
        exponent: Exponent,
        ideal: SigmaIdeal,
    ) -> Result<Arc<Self>> {
        if let Exponent::Finite(p) = &exponent {
            if *p < Rational::one() {
                return Err(Error::BadExponents(format!("module exponent {p} below 1")));
            }
        }
        Ok(Arc::new(SectionModule {
            bundle,
            exponent,
            ideal,
        }))
    }

    pub fn bundle(&self) -> &Arc<StrongBundle> {
        &self.bundle
    }

    pub fn base(&self) -> &FiniteMeasureSpace {
        self.bundle.base()
    }

    pub fn exponent(&self) -> &Exponent {
        &self.exponent
    }

    pub fn ideal(&self) -> SigmaIdeal {
        self.ideal
    }

    /// Wrap a section as a module element, reducing it to the canonical
    /// class representative under the null ideal.
    pub fn element(self: &Arc<Self>, section: Section) -> Result<ModuleElement> {
        self.bundle.check_section(&section)?;
        let section = match self.ideal {
            SigmaIdeal::Null => self.canonical(section),
            SigmaIdeal::Trivial => section,
        };
        Ok(ModuleElement {
            module: Arc::clone(self),
            section,
        })
    }

    pub fn zero_element(self: &Arc<Self>) -> ModuleElement {
        ModuleElement {
            module: Arc::clone(self),
            section: Section::zero(&self.bundle.dims()),
        }
    }

    fn canonical(&self, mut section: Section) -> Section {
        for i in 0..self.base().len() {
            if self.base().is_null(i) {
                for x in &mut section.values[i] {
                    *x = Rational::zero();
                }
            }
        }
        section
    }

    /// Test sections of the bundle, as elements.
    pub fn test_elements(self: &Arc<Self>) -> Vec<ModuleElement> {
        self.bundle
            .test_sections()
            .iter()
            .map(|s| {
                self.element(s.clone())
                    .expect("test sections fit the bundle")
            })
            .collect()
    }
}

/// A section considered as an element of a module.
#[derive(Debug, Clone)]
pub struct ModuleElement {
    module: Arc<SectionModule>,
    section: Section,
}

impl ModuleElement {
    pub fn module(&self) -> &Arc<SectionModule> {
        &self.module
    }

    pub fn section(&self) -> &Section {
        &self.section
    }

    pub fn value(&self, i: usize) -> &[Rational] {
        self.section.value(i)
    }

    pub fn add(&self, other: &ModuleElement) -> ModuleElement {
        assert_eq!(self.module, other.module, "elements of different modules");
        ModuleElement {
            module: Arc::clone(&self.module),
            section: self.section.add(&other.section),
        }
    }

    pub fn sub(&self, other: &ModuleElement) -> ModuleElement {
        assert_eq!(self.module, other.module, "elements of different modules");
        ModuleElement {
            module: Arc::clone(&self.module),
            section: self.section.sub(&other.section),
        }
    }

    pub fn scale(&self, c: &Rational) -> ModuleElement {
        ModuleElement {
            module: Arc::clone(&self.module),
            section: self.section.scale(c),
        }
    }

    /// Module multiplication by a scalar function.
    pub fn mul_fn(&self, f: &[Rational]) -> Result<ModuleElement> {
        if f.len() != self.module.base().len() {
            return Err(Error::DimensionMismatch {
                expected: self.module.base().len(),
                got: f.len(),
            });
        }
        self.module.element(self.section.mul_fn(f))
    }

    /// The pointwise norm `x -> |v(x)|` in the fiber at `x`.
    pub fn pointwise_norm(&self) -> Vec<Scalar> {
        (0..self.module.base().len())
            .map(|i| {
                self.module
                    .bundle()
                    .fiber(i)
                    .norm(self.section.value(i))
                    .expect("element sections fit their fibers")
            })
            .collect()
    }

    /// `x -> |v(x)|^e`, avoiding intermediate roots where the family allows.
    pub fn pointwise_norm_pow(&self, e: &Rational) -> Vec<Scalar> {
        (0..self.module.base().len())
            .map(|i| {
                self.module
                    .bundle()
                    .fiber(i)
                    .norm_pow(self.section.value(i), e)
                    .expect("element sections fit their fibers")
            })
            .collect()
    }

    /// The module norm: `(integral of |v|^p)^{1/p}`, or the essential
    /// supremum of the pointwise norm.
    pub fn module_norm(&self) -> Scalar {
        let base = self.module.base();
        match self.module.exponent() {
            Exponent::Infinity => {
                let norms = self.pointwise_norm();
                let mut best = Scalar::zero();
                for i in base.support() {
                    best = best.max(norms[i].clone());
                }
                best
            }
            Exponent::Finite(p) => {
                let powers = self.pointwise_norm_pow(p);
                let total: Scalar = powers
                    .into_iter()
                    .zip(base.weights())
                    .map(|(n, w)| n * Scalar::Exact(w.clone()))
                    .sum();
                total.pow(&(Rational::one() / p))
            }
        }
    }

    /// Equality in the module: everywhere under the trivial ideal, off a
    /// null set otherwise.
    pub fn eq_mod(&self, other: &ModuleElement) -> bool {
        if self.module != other.module {
            return false;
        }
        match self.module.ideal() {
            SigmaIdeal::Trivial => self.section == other.section,
            SigmaIdeal::Null => self
                .module
                .base()
                .support()
                .into_iter()
                .all(|i| self.section.value(i) == other.section.value(i)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.eq_mod(&self.module.zero_element())
    }
}

/// Glue elements along a partition of the carrier: the result agrees with
/// `parts[n]` on `cells[n]`.
pub fn glue(cells: &[Vec<usize>], parts: &[ModuleElement]) -> Result<ModuleElement> {
    if cells.len() != parts.len() {
        return Err(Error::NotAPartition {
            reason: format!("{} cells for {} elements", cells.len(), parts.len()),
        });
    }
    let first = parts.first().ok_or_else(|| Error::NotAPartition {
        reason: "no cells".into(),
    })?;
    let module = first.module();
    let n = module.base().len();
    let mut owner = vec![usize::MAX; n];
    for (k, cell) in cells.iter().enumerate() {
        for &i in cell {
            if i >= n {
                return Err(Error::NotAPartition {
                    reason: format!("point index {i} out of range"),
                });
            }
            if owner[i] != usize::MAX {
                return Err(Error::NotAPartition {
                    reason: format!("point '{}' covered twice", module.base().label(i)),
                });
            }
            owner[i] = k;
        }
    }
    if let Some(i) = owner.iter().position(|&k| k == usize::MAX) {
        return Err(Error::NotAPartition {
            reason: format!("point '{}' not covered", module.base().label(i)),
        });
    }
    let mut values = Vec::with_capacity(n);
    for i in 0..n {
        let part = &parts[owner[i]];
        assert_eq!(part.module(), module, "glued parts of different modules");
        values.push(part.section().value(i).to_vec());
    }
    module.element(Section::new(values))
}

/// The fiberwise view of a finite-exponent section module along a fully
/// refining chain.
pub struct Fiberization {
    module: Arc<SectionModule>,
    chain: PartitionChain,
    p: Rational,
}

/// What fiberization recovers at each positive-mass point.
#[derive(Debug, Clone)]
pub struct FiberizationPoint {
    pub point: usize,
    /// The recovered fiber, identified with the bundle fiber by the
    /// embedding `v -> v(x)`.
    pub fiber: FiberSpace,
}

pub fn fiberize(module: &Arc<SectionModule>, chain: &PartitionChain) -> Result<Fiberization> {
    chain.require_fully_refining()?;
    if chain.space() != module.base() {
        return Err(Error::FiberMismatch {
            left: "chain space".into(),
            right: "module base".into(),
            reason: "fiberization needs a chain on the module's base".into(),
        });
    }
    let p = match module.exponent() {
        Exponent::Finite(p) if *p > Rational::one() => p.clone(),
        other => {
            return Err(Error::BadExponents(format!(
                "fiberization needs a finite exponent above 1, got {other}"
            )))
        }
    };
    Ok(Fiberization {
        module: Arc::clone(module),
        chain: chain.clone(),
        p,
    })
}

impl Fiberization {
    pub fn module(&self) -> &Arc<SectionModule> {
        &self.module
    }

    pub fn points(&self) -> Vec<FiberizationPoint> {
        self.module
            .base()
            .support()
            .into_iter()
            .map(|point| FiberizationPoint {
                point,
                fiber: self.module.bundle().fiber(point).clone(),
            })
            .collect()
    }

    /// The fiber seminorm of `v` at every point: the `p`-th root of the
    /// stabilized chain average of `|v|^p`.
    pub fn seminorm_fn(&self, v: &ModuleElement) -> Result<Vec<Scalar>> {
        let powered = v.pointwise_norm_pow(&self.p);
        let base = doob::rep(&self.chain, &powered)?;
        let inv_p = Rational::one() / &self.p;
        Ok(base.rep.iter().map(|s| s.pow(&inv_p)).collect())
    }

    /// The seminorm at a single point, through the final cell only. The
    /// stabilized average at `x` is the average over the final cell of `x`.
    pub fn seminorm_at(&self, v: &ModuleElement, point: usize) -> Result<Scalar> {
        let cell = self.chain.cell_of(self.chain.num_levels() - 1, point)?;
        let space = self.module.base();
        let mass = space.set_mass(cell);
        if mass.is_zero() {
            return Ok(Scalar::zero());
        }
        let total: Scalar = cell
            .iter()
            .map(|&i| {
                self.module
                    .bundle()
                    .fiber(i)
                    .norm_pow(v.value(i), &self.p)
                    .expect("element sections fit their fibers")
                    * Scalar::Exact(space.mass(i).clone())
            })
            .sum();
        Ok((total / Scalar::Exact(mass)).pow(&(Rational::one() / &self.p)))
    }

    /// The embedding of `v` into the fiber at a positive-mass point.
    pub fn embed(&self, v: &ModuleElement, point: usize) -> Vec<Rational> {
        assert!(!self.module.base().is_null(point));
        v.value(point).to_vec()
    }

    /// The assembled everywhere-defined representative of `v`: its values on
    /// the support, zero elsewhere. Realization is the canonical section.
    pub fn realize(&self, v: &ModuleElement) -> ModuleElement {
        self.module
            .element(v.section().clone())
            .expect("the section already lives in the module")
    }

    /// Infimum of `sum_i |v_i|_x` over sampled decompositions `v = sum v_i`
    /// with at most three parts drawn from `pool`, plus the trivial
    /// decomposition. A falsification probe for the closed-form seminorm:
    /// the trivial decomposition always attains it, so the search can only
    /// confirm that no sampled splitting goes lower.
    pub fn decomposition_infimum(
        &self,
        v: &ModuleElement,
        point: usize,
        pool: &[ModuleElement],
    ) -> Result<Scalar> {
        let mut best = self.seminorm_at(v, point)?;
        for w in pool {
            let rest = v.sub(w);
            let cand = self.seminorm_at(w, point)? + self.seminorm_at(&rest, point)?;
            best = best.min(cand);
        }
        for (i, w1) in pool.iter().enumerate() {
            let partial = v.sub(w1);
            let n1 = self.seminorm_at(w1, point)?;
            for w2 in pool.iter().skip(i + 1) {
                let rest = partial.sub(w2);
                let cand =
                    n1.clone() + self.seminorm_at(w2, point)? + self.seminorm_at(&rest, point)?;
                best = best.min(cand);
            }
        }
        Ok(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiber::LpExp;
    use crate::measure::build_chain;
    use crate::scalar::{rat, rat_int};

    fn space_x() -> FiniteMeasureSpace {
        FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(1, 2)]).unwrap()
    }

    fn sec(values: &[&[i64]]) -> Section {
        Section::new(
            values
                .iter()
                .map(|row| row.iter().map(|&c| rat_int(c)).collect())
                .collect(),
        )
    }

    fn module_l1(p: Exponent) -> Arc<SectionModule> {
        let bundle = StrongBundle::uniform(
            space_x(),
            FiberSpace::lp(LpExp::One, 2),
            vec![sec(&[&[1, 0], &[2, 2]]), sec(&[&[0, 1], &[1, 0]])],
        )
        .unwrap();
        SectionModule::new(Arc::new(bundle), p, SigmaIdeal::Null).unwrap()
    }

    #[test]
    fn pointwise_norm_reads_fiber_by_fiber() {
        let m = module_l1(Exponent::Finite(rat_int(2)));
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        assert_eq!(
            v.pointwise_norm(),
            vec![Scalar::from_int(1), Scalar::from_int(4)]
        );
    }

    #[test]
    fn module_norms_integrate_or_take_the_sup() {
        let m2 = module_l1(Exponent::Finite(rat_int(2)));
        let v = m2.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        // (1^2 * 1/2 + 4^2 * 1/2)^{1/2} = sqrt(17/2)
        let norm = v.module_norm();
        assert!(!norm.is_exact());
        assert!((norm.to_f64() - (17.0f64 / 2.0).sqrt()).abs() < 1e-12);

        let minf = module_l1(Exponent::Infinity);
        let v = minf.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        assert_eq!(v.module_norm(), Scalar::from_int(4));
    }

    #[test]
    fn null_points_are_canonically_zeroed() {
        let s =
            FiniteMeasureSpace::new(vec!["a", "b", "c"], vec![rat(1, 2), rat(1, 2), rat_int(0)])
                .unwrap();
        let bundle = StrongBundle::uniform(s, FiberSpace::lp(LpExp::One, 1), vec![]).unwrap();
        let m = SectionModule::new(
            Arc::new(bundle),
            Exponent::Finite(rat_int(2)),
            SigmaIdeal::Null,
        )
        .unwrap();
        let v = m.element(sec(&[&[1], &[2], &[7]])).unwrap();
        assert_eq!(v.value(2), &[rat_int(0)]);
        let w = m.element(sec(&[&[1], &[2], &[-3]])).unwrap();
        assert!(v.eq_mod(&w));
    }

    #[test]
    fn glueing_assembles_piecewise_and_rejects_non_partitions() {
        let m = module_l1(Exponent::Finite(rat_int(2)));
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let w = m.element(sec(&[&[5, 5], &[0, 1]])).unwrap();
        let glued = glue(&[vec![0], vec![1]], &[v.clone(), w.clone()]).unwrap();
        assert_eq!(glued.value(0), v.value(0));
        assert_eq!(glued.value(1), w.value(1));

        let overlap = glue(&[vec![0, 1], vec![1]], &[v.clone(), w.clone()]).unwrap_err();
        assert!(matches!(overlap, Error::NotAPartition { .. }));
        let gap = glue(&[vec![0]], &[v]).unwrap_err();
        assert!(matches!(gap, Error::NotAPartition { .. }));
    }

    #[test]
    fn fiber_seminorm_recovers_the_pointwise_norm() {
        let m = module_l1(Exponent::Finite(rat_int(2)));
        let chain = build_chain(m.base(), &[vec!["a".into()]]).unwrap();
        let fz = fiberize(&m, &chain).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let norms = fz.seminorm_fn(&v).unwrap();
        assert_eq!(norms[0], Scalar::from_int(1));
        assert_eq!(norms[1], Scalar::from_int(4));
        assert_eq!(fz.seminorm_at(&v, 0).unwrap(), Scalar::from_int(1));
        assert_eq!(fz.embed(&v, 0), vec![rat_int(1), rat_int(0)]);
    }

    #[test]
    fn decomposition_search_cannot_beat_the_closed_form() {
        let m = module_l1(Exponent::Finite(rat_int(2)));
        let chain = build_chain(m.base(), &[vec!["a".into()]]).unwrap();
        let fz = fiberize(&m, &chain).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let pool = vec![
            m.element(sec(&[&[1, 1], &[0, 3]])).unwrap(),
            m.element(sec(&[&[-2, 0], &[1, 1]])).unwrap(),
            m.element(sec(&[&[0, 0], &[2, -1]])).unwrap(),
        ];
        let inf = fz.decomposition_infimum(&v, 1, &pool).unwrap();
        assert_eq!(inf, fz.seminorm_at(&v, 1).unwrap());
    }

    #[test]
    fn fiberization_requires_refinement_and_a_finite_exponent() {
        let m = module_l1(Exponent::Finite(rat_int(2)));
        let trivial = PartitionChain::from_indices(m.base().clone(), vec![]);
        assert!(matches!(
            fiberize(&m, &trivial),
            Err(Error::ChainNotRefining { .. })
        ));
        let minf = module_l1(Exponent::Infinity);
        let chain = build_chain(minf.base(), &[vec!["a".into()]]).unwrap();
        assert!(matches!(
            fiberize(&minf, &chain),
            Err(Error::BadExponents(_))
        ));
    }
}
