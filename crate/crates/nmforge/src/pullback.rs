//! Pullbacks of section modules along measure-compatible maps.
//!
//! For `phi: Y -> X` and a module `M` of sections over `X`, the pullback
//! module is realized concretely: the fiber over `y` is the fiber of `M` over
//! `phi(y)`, the pullback of a section is its precomposition with `phi`, and
//! the defining norm identity `|phi^* v| = |v| o phi` holds by construction
//! (it is still verified on probes by the suites). Construction demands a
//! measure-preserving map; the weaker constructor only demands that the
//! pushforward be absolutely continuous, which is all the operator-extension
//! and mass-redistribution machinery needs.
//!
//! `extend_local_operator` realizes the universal property: a linear operator
//! `T: M -> L^1(Y)` dominated by `|T(v)| <= g |v| o phi` is tabulated on
//! localized basis sections, checked against its domination bound fiber by
//! fiber (with an explicit witness section on failure), and extended to the
//! whole pullback module.

use std::sync::Arc;

use crate::bundle::{ModuleElement, Section, SectionModule, StrongBundle};
use crate::error::{Error, Result};
use crate::fiber::pair;
use crate::measure::MeasurableMap;
use crate::scalar::{Rational, Scalar};
use num::traits::{Signed, Zero};

/// A concretely realized pullback module.
#[derive(Debug, Clone)]
pub struct PullbackModule {
    map: MeasurableMap,
    source: Arc<SectionModule>,
    module: Arc<SectionModule>,
}

/// Pull `source` back along `map`; the map must push the source-of-the-map
/// measure exactly onto the base measure of `source`.
pub fn pullback_module(source: &Arc<SectionModule>, map: &MeasurableMap) -> Result<PullbackModule> {
    map.require_measure_preserving()?;
    build_pullback(source, map)
}

/// The absolutely-continuous variant: enough for dominated operators and
/// mass redistribution, where no norm identity on `X` is claimed.
pub fn pullback_module_ac(
    source: &Arc<SectionModule>,
    map: &MeasurableMap,
) -> Result<PullbackModule> {
    if !map.is_absolutely_continuous() {
        let pushed = map.pushforward(&vec![Rational::from_integer(1.into()); map.source().len()]);
        let bad = (0..map.target().len())
            .find(|&x| map.target().is_null(x) && !pushed[x].is_zero())
            .expect("a non-absolutely-continuous map charges a null point");
        return Err(Error::NotAbsolutelyContinuous {
            point: map.target().label(bad).to_string(),
            mass: crate::scalar::fmt_rational(&pushed[bad]),
        });
    }
    build_pullback(source, map)
}

fn build_pullback(source: &Arc<SectionModule>, map: &MeasurableMap) -> Result<PullbackModule> {
    if map.target() != source.base() {
        return Err(Error::FiberMismatch {
            left: "map target".into(),
            right: "module base".into(),
            reason: "the pullback needs a map into the module's base".into(),
        });
    }
    let fibers = (0..map.source().len())
        .map(|y| source.bundle().fiber(map.apply(y)).clone())
        .collect();
    let test_sections = source
        .bundle()
        .test_sections()
        .iter()
        .map(|s| pull_section(map, s))
        .collect();
    let bundle = StrongBundle::new(map.source().clone(), fibers, test_sections)?;
    let module = SectionModule::new(Arc::new(bundle), source.exponent().clone(), source.ideal())?;
    Ok(PullbackModule {
        map: map.clone(),
        source: Arc::clone(source),
        module,
    })
}

fn pull_section(map: &MeasurableMap, s: &Section) -> Section {
    Section::new(
        (0..map.source().len())
            .map(|y| s.value(map.apply(y)).to_vec())
            .collect(),
    )
}

impl PullbackModule {
    pub fn map(&self) -> &MeasurableMap {
        &self.map
    }

    pub fn source(&self) -> &Arc<SectionModule> {
        &self.source
    }

    /// The realized module of sections over the map's source.
    pub fn module(&self) -> &Arc<SectionModule> {
        &self.module
    }

    /// `phi^* v`: precomposition with the map.
    pub fn pull(&self, v: &ModuleElement) -> Result<ModuleElement> {
        if v.module() != &self.source {
            return Err(Error::FiberMismatch {
                left: "element module".into(),
                right: "pullback source".into(),
                reason: "only source-module elements can be pulled back".into(),
            });
        }
        self.module.element(pull_section(&self.map, v.section()))
    }
}

/// A localized operator on the pullback module, stored fiberwise: the
/// functional `tau(y)` acts on the fiber over `y`.
#[derive(Debug, Clone)]
pub struct ExtendedOperator {
    module: Arc<SectionModule>,
    coeffs: Section,
}

impl ExtendedOperator {
    pub fn module(&self) -> &Arc<SectionModule> {
        &self.module
    }

    pub fn coeffs(&self) -> &Section {
        &self.coeffs
    }

    /// Apply to an element of the pullback module.
    pub fn apply(&self, v: &ModuleElement) -> Result<Vec<Rational>> {
        if v.module() != &self.module {
            return Err(Error::FiberMismatch {
                left: "element module".into(),
                right: "operator module".into(),
                reason: "the extension acts on the pullback module".into(),
            });
        }
        (0..self.module.base().len())
            .map(|y| pair(self.coeffs.value(y), v.value(y)))
            .collect()
    }

    /// The pointwise norm `|T|(y)`: the dual norm of `tau(y)`.
    pub fn pointwise_norm(&self) -> Vec<Scalar> {
        (0..self.module.base().len())
            .map(|y| {
                self.module
                    .bundle()
                    .fiber(y)
                    .dual_norm(self.coeffs.value(y))
                    .expect("coefficients fit their fibers")
            })
            .collect()
    }
}

fn describe_section(s: &Section) -> String {
    let rows: Vec<String> = s
        .values
        .iter()
        .map(|v| {
            let coords: Vec<String> = v.iter().map(crate::scalar::fmt_rational).collect();
            format!("({})", coords.join(","))
        })
        .collect();
    format!("[{}]", rows.join(" "))
}

/// Extend a dominated operator `T: M -> L^1` on the map's source to the
/// pullback module.
///
/// `action` is the operator, given by its action on module elements; `g` is
/// the dominating function on the map's source: `|T(v)| <= g * (|v| o phi)`.
/// The extension satisfies `hat T(phi^* v) = T(v)` and `|hat T(V)| <= g |V|`
/// pointwise, and is unique with these properties because pulled-back
/// sections generate. Fails with a witness section when domination is
/// violated, and rejects operators that are not localized-linear.
pub fn extend_local_operator(
    pb: &PullbackModule,
    action: &dyn Fn(&ModuleElement) -> Vec<Rational>,
    g: &[Rational],
) -> Result<ExtendedOperator> {
    let x_space = pb.source.base();
    let y_space = pb.map.source();
    if g.len() != y_space.len() {
        return Err(Error::DimensionMismatch {
            expected: y_space.len(),
            got: g.len(),
        });
    }

    // Tabulate on localized basis sections. Domination forces T(v)(y) to
    // vanish wherever v vanishes at phi(y), so these values determine T.
    let dims = pb.module.bundle().dims();
    let mut coeffs = Section::zero(&dims);
    for x in x_space.support() {
        for j in 0..pb.source.bundle().fiber(x).dim() {
            let basis = pb
                .source
                .element(pb.source.bundle().localized_basis(x, j))
                .expect("basis sections fit the bundle");
            let image = action(&basis);
            assert_eq!(
                image.len(),
                y_space.len(),
                "operator output lives on the map source"
            );
            for y in y_space.support() {
                if pb.map.apply(y) == x {
                    coeffs.values[y][j] = image[y].clone();
                } else if !image[y].is_zero() {
                    return Err(Error::DominationFails {
                        point: y_space.label(y).to_string(),
                        lhs: crate::scalar::fmt_rational(&image[y].abs()),
                        rhs: format!("{} * 0", crate::scalar::fmt_rational(&g[y])),
                        witness: describe_section(basis.section()),
                    });
                }
            }
        }
    }

    // Fiberwise domination: the dual norm of tau(y) must stay below g(y).
    // On failure the attainment vector yields an explicit violating section.
    for y in y_space.support() {
        let fiber = pb.module.bundle().fiber(y);
        let tau = coeffs.value(y);
        let dual = fiber.dual_norm(tau)?;
        let bound = Scalar::Exact(g[y].clone());
        if !dual.le_tol(&bound, 1e-9) {
            let att = fiber.attainment(tau)?;
            let x = pb.map.apply(y);
            let mut witness = Section::zero(&pb.source.bundle().dims());
            witness.values[x] = att.clone();
            let lhs = pair(tau, &att)?.abs();
            let rhs = bound * fiber.norm(&att)?;
            return Err(Error::DominationFails {
                point: y_space.label(y).to_string(),
                lhs: crate::scalar::fmt_rational(&lhs),
                rhs: rhs.to_string(),
                witness: describe_section(&witness),
            });
        }
    }

    // Localized-linearity probes: the tabulation must reproduce the operator
    // on the generating sections and a combination of them.
    let mut probes: Vec<ModuleElement> = pb.source.test_elements();
    if probes.len() >= 2 {
        probes.push(probes[0].add(&probes[1]));
    }
    if let Some(first) = probes.first() {
        let pattern: Vec<Rational> = (0..x_space.len())
            .map(|i| {
                if i % 2 == 0 {
                    Rational::new(1.into(), 2.into())
                } else {
                    -Rational::from_integer(3.into())
                }
            })
            .collect();
        probes.push(first.mul_fn(&pattern)?);
    }
    for probe in &probes {
        let via_action = action(probe);
        for y in y_space.support() {
            let via_table = pair(coeffs.value(y), probe.value(pb.map.apply(y)))?;
            if via_action[y] != via_table {
                return Err(Error::NotLinear {
                    point: y_space.label(y).to_string(),
                    witness: describe_section(probe.section()),
                });
            }
        }
    }

    Ok(ExtendedOperator {
        module: Arc::clone(&pb.module),
        coeffs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{Exponent, SigmaIdeal};
    use crate::fiber::{FiberSpace, LpExp};
    use crate::measure::FiniteMeasureSpace;
    use crate::scalar::{rat, rat_int};
    use std::collections::BTreeMap;

    fn sec(values: &[&[i64]]) -> Section {
        Section::new(
            values
                .iter()
                .map(|row| row.iter().map(|&c| rat_int(c)).collect())
                .collect(),
        )
    }

    fn canonical() -> (Arc<SectionModule>, MeasurableMap) {
        let x = FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(1, 2)]).unwrap();
        let y = FiniteMeasureSpace::new(
            vec!["y1", "y2", "y3"],
            vec![rat(1, 4), rat(1, 4), rat(1, 2)],
        )
        .unwrap();
        let assign: BTreeMap<String, String> = [("y1", "a"), ("y2", "a"), ("y3", "b")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        let phi = MeasurableMap::new(y, x.clone(), &assign).unwrap();
        let bundle = StrongBundle::uniform(
            x,
            FiberSpace::lp(LpExp::One, 2),
            vec![sec(&[&[1, 0], &[2, 2]]), sec(&[&[0, 1], &[1, 0]])],
        )
        .unwrap();
        let m = SectionModule::new(
            Arc::new(bundle),
            Exponent::Finite(rat_int(2)),
            SigmaIdeal::Null,
        )
        .unwrap();
        (m, phi)
    }

    #[test]
    fn pulled_sections_compose_with_the_map() {
        let (m, phi) = canonical();
        let pb = pullback_module(&m, &phi).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let pulled = pb.pull(&v).unwrap();
        let norms = pulled.pointwise_norm();
        assert_eq!(
            norms,
            vec![
                Scalar::from_int(1),
                Scalar::from_int(1),
                Scalar::from_int(4)
            ]
        );
        // |phi^* v| = |v| o phi on the support.
        let vn = v.pointwise_norm();
        for y in 0..3 {
            assert_eq!(norms[y], vn[pb.map().apply(y)]);
        }
    }

    #[test]
    fn module_multiplication_pulls_back_through_the_map() {
        let (m, phi) = canonical();
        let pb = pullback_module(&m, &phi).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let f = vec![rat_int(3), rat(-1, 2)];
        let lhs = pb.pull(&v.mul_fn(&f).unwrap()).unwrap();
        let rhs = pb.pull(&v).unwrap().mul_fn(&phi.pull_function(&f)).unwrap();
        assert!(lhs.eq_mod(&rhs));
    }

    #[test]
    fn non_preserving_maps_are_rejected_with_a_witness() {
        let (m, _) = canonical();
        let y_bad = FiniteMeasureSpace::new(
            vec!["y1", "y2", "y3"],
            vec![rat(1, 2), rat(1, 4), rat(1, 4)],
        )
        .unwrap();
        let phi_bad = MeasurableMap::from_indices(y_bad, m.base().clone(), vec![0, 0, 1]);
        let err = pullback_module(&m, &phi_bad).unwrap_err();
        assert_eq!(
            err,
            Error::MapNotMeasurePreserving {
                point: "a".into(),
                pushed: "3/4".into(),
                expected: "1/2".into(),
            }
        );
    }

    fn omega_action<'a>(
        pb: &'a PullbackModule,
        omega: &[Vec<Rational>],
        scale: i64,
    ) -> impl Fn(&ModuleElement) -> Vec<Rational> + 'a {
        let omega = omega.to_vec();
        let scale = rat_int(scale);
        move |v: &ModuleElement| {
            (0..pb.map().source().len())
                .map(|y| &scale * pair(&omega[y], v.value(pb.map().apply(y))).unwrap())
                .collect()
        }
    }

    #[test]
    fn dominated_operators_extend_to_the_pullback() {
        let (m, phi) = canonical();
        let pb = pullback_module(&m, &phi).unwrap();
        let omega = vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
            vec![rat_int(1), rat_int(1)],
        ];
        let g = vec![rat_int(1), rat_int(1), rat_int(1)];
        let action = omega_action(&pb, &omega, 1);
        let ext = extend_local_operator(&pb, &action, &g).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let pulled = pb.pull(&v).unwrap();
        assert_eq!(
            ext.apply(&pulled).unwrap(),
            vec![rat_int(1), rat_int(0), rat_int(4)]
        );
        // The extension agrees with the operator on pulled sections.
        assert_eq!(ext.apply(&pulled).unwrap(), action(&v));
    }

    #[test]
    fn violated_domination_reports_a_witness_section() {
        let (m, phi) = canonical();
        let pb = pullback_module(&m, &phi).unwrap();
        let omega = vec![
            vec![rat_int(1), rat_int(0)],
            vec![rat_int(0), rat_int(1)],
            vec![rat_int(1), rat_int(1)],
        ];
        let g = vec![rat_int(1), rat_int(1), rat_int(1)];
        let action = omega_action(&pb, &omega, 2);
        let err = extend_local_operator(&pb, &action, &g).unwrap_err();
        let Error::DominationFails { point, witness, .. } = &err else {
            panic!("expected domination failure, got {err:?}");
        };
        assert_eq!(point, "y1");
        assert!(witness.contains("(1,0)"), "witness was {witness}");
    }

    #[test]
    fn non_localized_operators_are_rejected() {
        let (m, phi) = canonical();
        let pb = pullback_module(&m, &phi).unwrap();
        // Pointwise norm composed with the map: dominated but not linear.
        let action = |v: &ModuleElement| -> Vec<Rational> {
            let norms = v.pointwise_norm();
            (0..pb.map().source().len())
                .map(|y| {
                    norms[pb.map().apply(y)]
                        .as_exact()
                        .expect("l1 norms are exact")
                        .clone()
                })
                .collect()
        };
        let g = vec![rat_int(1), rat_int(1), rat_int(1)];
        let err = extend_local_operator(&pb, &action, &g).unwrap_err();
        assert!(matches!(err, Error::NotLinear { .. }), "got {err:?}");
    }
}
