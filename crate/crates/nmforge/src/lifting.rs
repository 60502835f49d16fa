//! Liftings of measure algebras and of section modules.
//!
//! A lifting selects an honest set (or section) out of every almost-
//! everywhere class, compatibly with the Boolean operations. On a finite
//! carrier every lifting is induced by a retraction `t` onto the support:
//! `t` fixes every positive-mass point and sends each null point to some
//! positive-mass point. Sets lift by `lift(E) = t^{-1}(E meet supp)`,
//! functions and sections by precomposition with `t`. The atoms of the
//! lifted algebra are the retraction preimages `t^{-1}(x)`.
//!
//! Two liftings along a measure-preserving map are compatible when lifting
//! commutes with preimages. The canonical construction routes each null
//! point downstairs through the base lifting and picks the smallest-index
//! positive-mass preimage upstairs; it commutes with the maps pointwise, so
//! compatibility holds by construction, and `verify_compatibility` checks
//! the set form independently.

use std::sync::Arc;

use num::traits::Zero;

use crate::bundle::{ModuleElement, Section, SectionModule, SigmaIdeal, StrongBundle};
use crate::error::{Error, Result};
use crate::fiber::operator_norm;
use crate::measure::{FiniteMeasureSpace, MeasurableMap};
use crate::scalar::{Rational, Scalar};

/// A lifting of the measure algebra of a finite space, stored as the
/// retraction that induces it.
#[derive(Debug, Clone, PartialEq)]
pub struct Lifting {
    space: FiniteMeasureSpace,
    retraction: Vec<usize>,
}

/// Build the lifting induced by a retraction onto the support.
pub fn make_lifting(space: FiniteMeasureSpace, retraction: Vec<usize>) -> Result<Lifting> {
    if retraction.len() != space.len() {
        return Err(Error::DimensionMismatch {
            expected: space.len(),
            got: retraction.len(),
        });
    }
    for (i, &t) in retraction.iter().enumerate() {
        if t >= space.len() {
            return Err(Error::BadRetraction(format!(
                "'{}' is sent outside the carrier",
                space.label(i)
            )));
        }
        if !space.is_null(i) && t != i {
            return Err(Error::BadRetraction(format!(
                "positive-mass point '{}' must be fixed, not sent to '{}'",
                space.label(i),
                space.label(t)
            )));
        }
        if space.is_null(t) {
            return Err(Error::BadRetraction(format!(
                "'{}' is sent to the null point '{}'",
                space.label(i),
                space.label(t)
            )));
        }
    }
    Ok(Lifting { space, retraction })
}

/// The lifting retracting every null point to the smallest-index
/// positive-mass point.
pub fn default_lifting(space: FiniteMeasureSpace) -> Lifting {
    let anchor = space.support()[0];
    let retraction = (0..space.len())
        .map(|i| if space.is_null(i) { anchor } else { i })
        .collect();
    Lifting { space, retraction }
}

impl Lifting {
    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn retraction(&self) -> &[usize] {
        &self.retraction
    }

    pub fn apply(&self, i: usize) -> usize {
        self.retraction[i]
    }

    /// `lift(E) = t^{-1}(E meet supp)` on subsets encoded as bitmasks.
    pub fn lift_mask(&self, mask: u32) -> u32 {
        let mut out = 0u32;
        for i in 0..self.space.len() {
            if mask & (1 << self.retraction[i]) != 0 {
                out |= 1 << i;
            }
        }
        out
    }

    pub fn lift_set(&self, set: &[usize]) -> Vec<usize> {
        let mut mask = 0u32;
        for &i in set {
            mask |= 1 << i;
        }
        let lifted = self.lift_mask(mask);
        (0..self.space.len())
            .filter(|&i| lifted & (1 << i) != 0)
            .collect()
    }

    /// `lift(f) = f o t`: the everywhere-defined representative of the class
    /// of `f` selected by the lifting.
    pub fn lift_fn(&self, f: &[Rational]) -> Vec<Rational> {
        assert_eq!(f.len(), self.space.len());
        self.retraction.iter().map(|&t| f[t].clone()).collect()
    }

    pub fn lift_section(&self, s: &Section) -> Section {
        Section::new(
            self.retraction
                .iter()
                .map(|&t| s.value(t).to_vec())
                .collect(),
        )
    }

    /// The atoms `t^{-1}(x)`, one per positive-mass point, in carrier order.
    pub fn atoms(&self) -> Vec<Vec<usize>> {
        self.space
            .support()
            .into_iter()
            .map(|x| {
                (0..self.space.len())
                    .filter(|&i| self.retraction[i] == x)
                    .collect()
            })
            .collect()
    }
}

/// The lifting upstairs compatible with `base` along `map`: positive-mass
/// points stay fixed, and each null point goes to the smallest-index
/// positive-mass preimage of where the base lifting sends its image.
pub fn compatible_lifting(map: &MeasurableMap, base: &Lifting) -> Result<Lifting> {
    map.require_measure_preserving()?;
    if base.space() != map.target() {
        return Err(Error::FiberMismatch {
            left: "base lifting space".into(),
            right: "map target".into(),
            reason: "the base lifting must live on the map's target".into(),
        });
    }
    let up = map.source();
    let mut retraction = Vec::with_capacity(up.len());
    for y in 0..up.len() {
        if !up.is_null(y) {
            retraction.push(y);
            continue;
        }
        let x = base.apply(map.apply(y));
        // A measure-preserving map gives every positive-mass target point a
        // positive-mass preimage.
        let candidate = (0..up.len())
            .find(|&z| !up.is_null(z) && map.apply(z) == x)
            .expect("positive-mass points of the target have positive-mass preimages");
        retraction.push(candidate);
    }
    Ok(Lifting {
        space: up.clone(),
        retraction,
    })
}

/// Check `lift_up(preimage(E)) = preimage(lift_base(E))` for subsets of the
/// target: exhaustively when the target is small, on sampled subsets
/// otherwise.
pub fn verify_compatibility(map: &MeasurableMap, up: &Lifting, base: &Lifting) -> Result<()> {
    if up.space() != map.source() || base.space() != map.target() {
        return Err(Error::FiberMismatch {
            left: "lifting spaces".into(),
            right: "map spaces".into(),
            reason: "compatibility pairs a lifting upstairs with one downstairs".into(),
        });
    }
    let n = map.target().len();
    let masks: Vec<u32> = if n <= EXHAUSTIVE_POINT_LIMIT {
        (0..(1u32 << n)).collect()
    } else {
        // Deterministic stride sample across the lattice.
        let total = 1u64 << n;
        (0..4096u64)
            .map(|k| ((k * 2654435761) % total) as u32)
            .collect()
    };
    for mask in masks {
        let pre: u32 = (0..map.source().len())
            .filter(|&y| mask & (1 << map.apply(y)) != 0)
            .fold(0, |acc, y| acc | (1 << y));
        let lhs = up.lift_mask(pre);
        let lifted: u32 = base.lift_mask(mask);
        let rhs: u32 = (0..map.source().len())
            .filter(|&y| lifted & (1 << map.apply(y)) != 0)
            .fold(0, |acc, y| acc | (1 << y));
        if lhs != rhs {
            let witness = (0..n)
                .filter(|&x| mask & (1 << x) != 0)
                .map(|x| map.target().label(x).to_string())
                .collect();
            return Err(Error::LiftingsNotCompatible { witness });
        }
    }
    Ok(())
}

pub const EXHAUSTIVE_POINT_LIMIT: usize = 12;

/// A section module together with a lifting of it: the lifted module has the
/// fiber of the retraction image at every point and the trivial ideal, so
/// its elements are honest everywhere-defined sections.
#[derive(Debug, Clone)]
pub struct LiftedModule {
    source: Arc<SectionModule>,
    lifting: Lifting,
    module: Arc<SectionModule>,
}

pub fn lift_module(source: &Arc<SectionModule>, lifting: &Lifting) -> Result<LiftedModule> {
    if lifting.space() != source.base() {
        return Err(Error::FiberMismatch {
            left: "lifting space".into(),
            right: "module base".into(),
            reason: "a module lifts along a lifting of its own base".into(),
        });
    }
    let fibers = lifting
        .retraction()
        .iter()
        .map(|&t| source.bundle().fiber(t).clone())
        .collect();
    let test_sections = source
        .bundle()
        .test_sections()
        .iter()
        .map(|s| lifting.lift_section(s))
        .collect();
    let bundle = StrongBundle::new(lifting.space().clone(), fibers, test_sections)?;
    let module = SectionModule::new(
        Arc::new(bundle),
        source.exponent().clone(),
        SigmaIdeal::Trivial,
    )?;
    Ok(LiftedModule {
        source: Arc::clone(source),
        lifting: lifting.clone(),
        module,
    })
}

impl LiftedModule {
    pub fn source(&self) -> &Arc<SectionModule> {
        &self.source
    }

    pub fn lifting(&self) -> &Lifting {
        &self.lifting
    }

    pub fn module(&self) -> &Arc<SectionModule> {
        &self.module
    }

    /// The lifted representative of the class of `v`.
    pub fn lift(&self, v: &ModuleElement) -> Result<ModuleElement> {
        if v.module() != &self.source {
            return Err(Error::FiberMismatch {
                left: "element module".into(),
                right: "lifted source".into(),
                reason: "only source-module elements lift".into(),
            });
        }
        self.module.element(self.lifting.lift_section(v.section()))
    }

    /// The class of a lifted section back in the source module.
    pub fn quotient(&self, w: &ModuleElement) -> Result<ModuleElement> {
        if w.module() != &self.module {
            return Err(Error::FiberMismatch {
                left: "element module".into(),
                right: "lifted module".into(),
                reason: "only lifted-module elements descend".into(),
            });
        }
        let base = self.source.base();
        let dims = self.source.bundle().dims();
        let values = (0..base.len())
            .map(|x| {
                if base.is_null(x) {
                    vec![Rational::zero(); dims[x]]
                } else {
                    w.value(x).to_vec()
                }
            })
            .collect();
        self.source.element(Section::new(values))
    }

    /// Whether `w` is in the image of the lifting: constant on every atom.
    pub fn is_lifted(&self, w: &ModuleElement) -> bool {
        w.module() == &self.module
            && (0..self.module.base().len()).all(|x| w.value(x) == w.value(self.lifting.apply(x)))
    }
}

/// A module morphism over a fixed base, stored as one matrix per point
/// (rows indexed by the target fiber, columns by the source fiber).
#[derive(Debug, Clone)]
pub struct Morphism {
    source: Arc<SectionModule>,
    target: Arc<SectionModule>,
    matrices: Vec<Vec<Vec<Rational>>>,
}

pub fn morphism(
    source: &Arc<SectionModule>,
    target: &Arc<SectionModule>,
    matrices: Vec<Vec<Vec<Rational>>>,
) -> Result<Morphism> {
    if source.base() != target.base() {
        return Err(Error::FiberMismatch {
            left: "morphism source base".into(),
            right: "morphism target base".into(),
            reason: "module morphisms act over a fixed base".into(),
        });
    }
    if matrices.len() != source.base().len() {
        return Err(Error::DimensionMismatch {
            expected: source.base().len(),
            got: matrices.len(),
        });
    }
    for (x, m) in matrices.iter().enumerate() {
        let rows = m.len();
        if rows != target.bundle().fiber(x).dim() {
            return Err(Error::DimensionMismatch {
                expected: target.bundle().fiber(x).dim(),
                got: rows,
            });
        }
        for row in m {
            if row.len() != source.bundle().fiber(x).dim() {
                return Err(Error::DimensionMismatch {
                    expected: source.bundle().fiber(x).dim(),
                    got: row.len(),
                });
            }
        }
    }
    Ok(Morphism {
        source: Arc::clone(source),
        target: Arc::clone(target),
        matrices,
    })
}

/// Multiplication by a function, as a morphism of the module into itself.
pub fn multiplication_morphism(m: &Arc<SectionModule>, f: &[Rational]) -> Result<Morphism> {
    let base = m.base();
    if f.len() != base.len() {
        return Err(Error::DimensionMismatch {
            expected: base.len(),
            got: f.len(),
        });
    }
    let matrices = (0..base.len())
        .map(|x| {
            let d = m.bundle().fiber(x).dim();
            (0..d)
                .map(|i| {
                    (0..d)
                        .map(|j| {
                            if i == j {
                                f[x].clone()
                            } else {
                                Rational::zero()
                            }
                        })
                        .collect()
                })
                .collect()
        })
        .collect();
    morphism(m, m, matrices)
}

impl Morphism {
    pub fn source(&self) -> &Arc<SectionModule> {
        &self.source
    }

    pub fn target(&self) -> &Arc<SectionModule> {
        &self.target
    }

    pub fn matrix(&self, x: usize) -> &[Vec<Rational>] {
        &self.matrices[x]
    }

    pub fn apply(&self, v: &ModuleElement) -> Result<ModuleElement> {
        if v.module() != &self.source {
            return Err(Error::FiberMismatch {
                left: "element module".into(),
                right: "morphism source".into(),
                reason: "a morphism acts on its source module".into(),
            });
        }
        let values = (0..self.matrices.len())
            .map(|x| {
                self.matrices[x]
                    .iter()
                    .map(|row| row.iter().zip(v.value(x)).map(|(a, b)| a * b).sum())
                    .collect()
            })
            .collect();
        self.target.element(Section::new(values))
    }

    /// The pointwise operator norm `x -> |T_x|`, zero on null points.
    pub fn pointwise_norm(&self) -> Result<Vec<Scalar>> {
        (0..self.matrices.len())
            .map(|x| {
                if self.source.base().is_null(x) && self.source.ideal() == SigmaIdeal::Null {
                    return Ok(Scalar::zero());
                }
                operator_norm(
                    &self.matrices[x],
                    self.source.bundle().fiber(x),
                    self.target.bundle().fiber(x),
                )
            })
            .collect()
    }

    /// The lifted morphism between the lifted modules: the matrix at `x` is
    /// the matrix at the retraction image of `x`.
    pub fn lift(&self, src: &LiftedModule, tgt: &LiftedModule) -> Result<Morphism> {
        if src.source() != &self.source || tgt.source() != &self.target {
            return Err(Error::FiberMismatch {
                left: "lifted modules".into(),
                right: "morphism endpoints".into(),
                reason: "a morphism lifts along liftings of its own endpoints".into(),
            });
        }
        if src.lifting() != tgt.lifting() {
            return Err(Error::FiberMismatch {
                left: "source lifting".into(),
                right: "target lifting".into(),
                reason: "a morphism lifts along one shared retraction".into(),
            });
        }
        let matrices = src
            .lifting()
            .retraction()
            .iter()
            .map(|&t| self.matrices[t].clone())
            .collect();
        morphism(src.module(), tgt.module(), matrices)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::Exponent;
    use crate::fiber::{FiberSpace, LpExp};
    use crate::scalar::{rat, rat_int};

    fn space_with_null() -> FiniteMeasureSpace {
        FiniteMeasureSpace::new(vec!["a", "b", "c"], vec![rat(1, 2), rat(1, 2), rat_int(0)])
            .unwrap()
    }

    fn sec(values: &[&[i64]]) -> Section {
        Section::new(
            values
                .iter()
                .map(|row| row.iter().map(|&c| rat_int(c)).collect())
                .collect(),
        )
    }

    #[test]
    fn retraction_validation_names_the_offender() {
        let s = space_with_null();
        let err = make_lifting(s.clone(), vec![1, 1, 0]).unwrap_err();
        assert!(matches!(err, Error::BadRetraction(msg) if msg.contains("'a'")));
        let err = make_lifting(s.clone(), vec![0, 1, 2]).unwrap_err();
        assert!(matches!(err, Error::BadRetraction(msg) if msg.contains("null")));
        assert!(make_lifting(s, vec![0, 1, 0]).is_ok());
    }

    #[test]
    fn sets_lift_through_the_retraction() {
        let l = make_lifting(space_with_null(), vec![0, 1, 0]).unwrap();
        assert_eq!(l.lift_set(&[0]), vec![0, 2]);
        assert_eq!(l.lift_set(&[2]), Vec::<usize>::new());
        assert_eq!(l.lift_set(&[0, 1]), vec![0, 1, 2]);
        assert_eq!(l.atoms(), vec![vec![0, 2], vec![1]]);
    }

    #[test]
    fn lifted_sets_satisfy_the_boolean_axioms() {
        let l = make_lifting(space_with_null(), vec![0, 1, 0]).unwrap();
        let n = l.space().len();
        let full = (1u32 << n) - 1;
        assert_eq!(l.lift_mask(0), 0);
        assert_eq!(l.lift_mask(full), full);
        for e in 0..=full {
            let le = l.lift_mask(e);
            assert_eq!(l.lift_mask(!e & full), !le & full);
            // The lift agrees with the set on the support.
            for i in l.space().support() {
                assert_eq!(le & (1 << i), e & (1 << i));
            }
            for f in 0..=full {
                let lf = l.lift_mask(f);
                assert_eq!(l.lift_mask(e & f), le & lf);
                assert_eq!(l.lift_mask(e | f), le | lf);
            }
        }
        // Classes determine the lift: adding a null point changes nothing.
        assert_eq!(l.lift_mask(0b001), l.lift_mask(0b101));
    }

    fn four_point_map() -> MeasurableMap {
        let x = FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(1, 2)]).unwrap();
        let y = FiniteMeasureSpace::new(
            vec!["y1", "y2", "y3", "y4"],
            vec![rat(1, 4), rat(1, 4), rat(1, 2), rat_int(0)],
        )
        .unwrap();
        MeasurableMap::from_indices(y, x, vec![0, 0, 1, 0])
    }

    #[test]
    fn compatible_lifting_routes_nulls_through_the_base() {
        let phi = four_point_map();
        let base = default_lifting(phi.target().clone());
        let up = compatible_lifting(&phi, &base).unwrap();
        assert_eq!(up.retraction(), &[0, 1, 2, 0]);
        verify_compatibility(&phi, &up, &base).unwrap();
    }

    #[test]
    fn incompatible_liftings_are_caught_with_a_witness() {
        let phi = four_point_map();
        let base = default_lifting(phi.target().clone());
        // Sends the null point over 'a' to a point over 'b'.
        let up = make_lifting(phi.source().clone(), vec![0, 1, 2, 2]).unwrap();
        let err = verify_compatibility(&phi, &up, &base).unwrap_err();
        let Error::LiftingsNotCompatible { witness } = err else {
            panic!("expected incompatibility");
        };
        assert!(
            witness.contains(&"a".to_string()) || witness.contains(&"b".to_string()),
            "witness was {witness:?}"
        );
    }

    fn module_with_null() -> Arc<SectionModule> {
        let bundle = StrongBundle::uniform(
            space_with_null(),
            FiberSpace::lp(LpExp::One, 2),
            vec![sec(&[&[1, 0], &[2, 2], &[0, 0]])],
        )
        .unwrap();
        SectionModule::new(
            Arc::new(bundle),
            Exponent::Finite(rat_int(2)),
            SigmaIdeal::Null,
        )
        .unwrap()
    }

    #[test]
    fn lifted_sections_take_their_values_through_the_retraction() {
        let m = module_with_null();
        let l = make_lifting(m.base().clone(), vec![0, 1, 0]).unwrap();
        let lifted = lift_module(&m, &l).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2], &[7, 7]])).unwrap();
        let w = lifted.lift(&v).unwrap();
        assert_eq!(w.value(2), v.value(0));
        assert_eq!(
            w.pointwise_norm(),
            vec![
                Scalar::from_int(1),
                Scalar::from_int(4),
                Scalar::from_int(1)
            ]
        );
        assert!(lifted.is_lifted(&w));
        // The lifted section is a representative of the same class.
        assert!(lifted.quotient(&w).unwrap().eq_mod(&v));

        // Module multiplication lifts through the function lift.
        let f = vec![rat_int(2), rat_int(3), rat_int(5)];
        let lhs = lifted.lift(&v.mul_fn(&f).unwrap()).unwrap();
        let rhs = w.mul_fn(&l.lift_fn(&f)).unwrap();
        assert!(lhs.eq_mod(&rhs));
    }

    #[test]
    fn quotient_then_lift_is_the_identity_on_lifted_sections() {
        let m = module_with_null();
        let l = make_lifting(m.base().clone(), vec![0, 1, 0]).unwrap();
        let lifted = lift_module(&m, &l).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2], &[0, 0]])).unwrap();
        let w = lifted.lift(&v).unwrap();
        let back = lifted.lift(&lifted.quotient(&w).unwrap()).unwrap();
        assert!(back.eq_mod(&w));
        // A section that differs on a null point is not lifted.
        let crooked = lifted
            .module()
            .element(sec(&[&[1, 0], &[2, 2], &[5, 5]]))
            .unwrap();
        assert!(!lifted.is_lifted(&crooked));
    }

    #[test]
    fn morphism_norms_lift_through_the_retraction() {
        let m = module_with_null();
        let f = vec![rat_int(2), rat_int(-3), rat_int(9)];
        let t = multiplication_morphism(&m, &f).unwrap();
        assert_eq!(
            t.pointwise_norm().unwrap(),
            vec![Scalar::from_int(2), Scalar::from_int(3), Scalar::zero()]
        );
        let l = make_lifting(m.base().clone(), vec![0, 1, 0]).unwrap();
        let lifted = lift_module(&m, &l).unwrap();
        let lt = t.lift(&lifted, &lifted).unwrap();
        assert_eq!(
            lt.pointwise_norm().unwrap(),
            vec![
                Scalar::from_int(2),
                Scalar::from_int(3),
                Scalar::from_int(2)
            ]
        );
        // Lifting commutes with application.
        let v = m.element(sec(&[&[1, 0], &[2, 2], &[0, 0]])).unwrap();
        let lhs = lifted.lift(&t.apply(&v).unwrap()).unwrap();
        let rhs = lt.apply(&lifted.lift(&v).unwrap()).unwrap();
        assert!(lhs.eq_mod(&rhs));
    }
}
