//! Dual modules and the fiberwise realization of module functionals.
//!
//! The dual of a section module is again a section module: fibers are
//! replaced by their dual spaces, the integrability exponent by its
//! conjugate. A dual section `omega` acts on a primal section `v` through
//! the pointwise pairing `x -> <omega(x), v(x)>`, and its norm as a
//! functional can be computed two ways: in closed form as the module norm of
//! `omega` in the dual module, or as a supremum of integrated pairing ratios
//! over a pool of candidate sections. The pool always contains a
//! Hoelder-equality candidate built from fiberwise attainment vectors, so
//! the search attains the closed form instead of merely approaching it.
//!
//! `functional_from_action` inverts the realization: a pointwise-local
//! functional given only by its action is tabulated on localized basis
//! sections back into a dual section, with explicit rejection of actions
//! that are not local and linear.

use std::sync::Arc;

use num::traits::{One, Signed, Zero};

use crate::bundle::{Exponent, ModuleElement, Section, SectionModule, StrongBundle};
use crate::error::{Error, Result};
use crate::fiber::pair;
use crate::measure::{FiniteMeasureSpace, MeasurableMap};
use crate::pullback::{pullback_module, PullbackModule};
use crate::scalar::{Rational, Scalar};

/// The dual module: dual fibers, conjugate exponent, same base and ideal.
pub fn dual_module(m: &Arc<SectionModule>) -> Result<Arc<SectionModule>> {
    let fibers = m.bundle().fibers().iter().map(|f| f.dual()).collect();
    // Fiber duals preserve dimension, so the primal test sections remain
    // valid section data for the dual bundle.
    let test_sections = m.bundle().test_sections().to_vec();
    let bundle = StrongBundle::new(m.base().clone(), fibers, test_sections)?;
    SectionModule::new(Arc::new(bundle), m.exponent().conjugate()?, m.ideal())
}

fn check_paired(omega: &ModuleElement, v: &ModuleElement) -> Result<()> {
    if omega.module().base() != v.module().base() {
        return Err(Error::FiberMismatch {
            left: "dual section base".into(),
            right: "primal section base".into(),
            reason: "pairing needs sections over the same measure space".into(),
        });
    }
    let ld = omega.module().bundle().dims();
    let rd = v.module().bundle().dims();
    if ld != rd {
        return Err(Error::FiberMismatch {
            left: format!("fiber dims {ld:?}"),
            right: format!("fiber dims {rd:?}"),
            reason: "pairing needs pointwise matching fiber dimensions".into(),
        });
    }
    Ok(())
}

/// The pointwise pairing `x -> <omega(x), v(x)>`.
pub fn pairing_action(omega: &ModuleElement, v: &ModuleElement) -> Result<Vec<Rational>> {
    check_paired(omega, v)?;
    (0..omega.module().base().len())
        .map(|x| pair(omega.value(x), v.value(x)))
        .collect()
}

/// The integrated pairing `int <omega, v> dmu`.
pub fn integrate_pairing(omega: &ModuleElement, v: &ModuleElement) -> Result<Rational> {
    let pointwise = pairing_action(omega, v)?;
    Ok(omega.module().base().integrate(&pointwise))
}

fn rational_of(s: &Scalar) -> Rational {
    match s.as_exact() {
        Some(r) => r.clone(),
        None => Rational::from_float(s.to_f64()).expect("finite scalar"),
    }
}

/// A primal section along which the functional norm of `omega` is attained:
/// pointwise attainment vectors, rescaled for Hoelder equality against the
/// module exponent. Exact whenever the fiber norms involved are rational.
pub fn holder_section(primal: &Arc<SectionModule>, omega: &ModuleElement) -> Result<ModuleElement> {
    let base = primal.base().clone();
    let zero = primal.zero_element();
    check_paired(omega, &zero)?;
    let mut values = vec![Vec::new(); base.len()];
    for x in 0..base.len() {
        values[x] = vec![Rational::zero(); primal.bundle().fiber(x).dim()];
    }
    match primal.exponent() {
        Exponent::Finite(p) if p.is_one() => {
            // Dual exponent is infinite: localize at a point realizing the
            // essential supremum of the dual norms.
            let best = base
                .support()
                .into_iter()
                .max_by(|&i, &j| {
                    let ni = primal.bundle().fiber(i).dual_norm(omega.value(i)).unwrap();
                    let nj = primal.bundle().fiber(j).dual_norm(omega.value(j)).unwrap();
                    ni.partial_cmp(&nj).unwrap()
                })
                .expect("a measure space has support");
            let fiber = primal.bundle().fiber(best);
            let w = omega.value(best);
            if !w.iter().all(Rational::is_zero) {
                let a = fiber.attainment(w)?;
                let scale = Scalar::Exact((base.mass(best)).recip()) / fiber.norm(&a)?;
                let scale = rational_of(&scale);
                values[best] = a.into_iter().map(|c| &c * &scale).collect();
            }
        }
        Exponent::Finite(p) => {
            let q_minus_one = (p - Rational::one()).recip();
            for x in base.support() {
                let fiber = primal.bundle().fiber(x);
                let w = omega.value(x);
                if w.iter().all(Rational::is_zero) {
                    continue;
                }
                let a = fiber.attainment(w)?;
                let scale = fiber.dual_norm(w)?.pow(&q_minus_one) / fiber.norm(&a)?;
                let scale = rational_of(&scale);
                values[x] = a.into_iter().map(|c| &c * &scale).collect();
            }
        }
        Exponent::Infinity => {
            for x in base.support() {
                let fiber = primal.bundle().fiber(x);
                let w = omega.value(x);
                if w.iter().all(Rational::is_zero) {
                    continue;
                }
                let a = fiber.attainment(w)?;
                let scale = rational_of(&(Scalar::from_int(1) / fiber.norm(&a)?));
                values[x] = a.into_iter().map(|c| &c * &scale).collect();
            }
        }
    }
    primal.element(Section::new(values))
}

/// The search route for the functional norm: the largest ratio
/// `|int <omega, v>| / ||v||` over test elements, localized basis elements,
/// the Hoelder-equality candidate, and any extra pool.
pub fn functional_norm_search(
    primal: &Arc<SectionModule>,
    omega: &ModuleElement,
    extra: &[ModuleElement],
) -> Result<Scalar> {
    let mut pool: Vec<ModuleElement> = primal.test_elements();
    for x in primal.base().support() {
        for j in 0..primal.bundle().fiber(x).dim() {
            pool.push(primal.element(primal.bundle().localized_basis(x, j))?);
        }
    }
    pool.push(holder_section(primal, omega)?);
    pool.extend_from_slice(extra);

    let mut best = Scalar::zero();
    for v in &pool {
        let denom = v.module_norm();
        if denom.is_zero() {
            continue;
        }
        let numer = integrate_pairing(omega, v)?;
        let ratio = Scalar::Exact(numer.abs()) / denom;
        best = best.max(ratio);
    }
    Ok(best)
}

/// Tabulate a pointwise-local linear functional, given by its action on
/// module elements, into a section of the dual module. Rejects actions that
/// leak mass across points or fail the linearity probes.
pub fn functional_from_action(
    primal: &Arc<SectionModule>,
    action: &dyn Fn(&ModuleElement) -> Vec<Rational>,
) -> Result<ModuleElement> {
    let base = primal.base();
    let dual = dual_module(primal)?;
    let mut coeffs = Section::zero(&primal.bundle().dims());
    for x in base.support() {
        for j in 0..primal.bundle().fiber(x).dim() {
            let basis = primal.element(primal.bundle().localized_basis(x, j))?;
            let image = action(&basis);
            assert_eq!(
                image.len(),
                base.len(),
                "functional output lives on the base"
            );
            for y in base.support() {
                if y == x {
                    coeffs.values[x][j] = image[x].clone();
                } else if !image[y].is_zero() {
                    return Err(Error::NotLinear {
                        point: base.label(y).to_string(),
                        witness: format!(
                            "localized section at '{}' produced output elsewhere",
                            base.label(x)
                        ),
                    });
                }
            }
        }
    }

    let mut probes: Vec<ModuleElement> = primal.test_elements();
    if probes.len() >= 2 {
        probes.push(probes[0].add(&probes[1]));
    }
    if let Some(first) = probes.first() {
        let pattern: Vec<Rational> = (0..base.len())
            .map(|i| {
                if i % 2 == 0 {
                    Rational::new(2.into(), 3.into())
                } else {
                    -Rational::from_integer(1.into())
                }
            })
            .collect();
        probes.push(first.mul_fn(&pattern)?);
    }
    for probe in &probes {
        let image = action(probe);
        for x in base.support() {
            let expected = pair(coeffs.value(x), probe.value(x))?;
            if image[x] != expected {
                return Err(Error::NotLinear {
                    point: base.label(x).to_string(),
                    witness: "probe section disagrees with the tabulated pairing".into(),
                });
            }
        }
    }
    dual.element(coeffs)
}

/// Both constructions of the dual over the map's source: pulling back the
/// dual module, and dualizing the pullback module. Fibers agree point by
/// point; the suites verify that norms and pairings agree as well.
pub fn dual_pullback_routes(
    source: &Arc<SectionModule>,
    map: &MeasurableMap,
) -> Result<(PullbackModule, Arc<SectionModule>)> {
    let dual_then_pull = pullback_module(&dual_module(source)?, map)?;
    let pull_then_dual = dual_module(pullback_module(source, map)?.module())?;
    Ok((dual_then_pull, pull_then_dual))
}

/// The indicator function of a point set.
pub fn indicator(space: &FiniteMeasureSpace, set: &[usize]) -> Vec<Rational> {
    let mut f = vec![Rational::zero(); space.len()];
    for &i in set {
        f[i] = Rational::one();
    }
    f
}

/// `1_E v`: the restriction of a section to a point set.
pub fn restrict(v: &ModuleElement, set: &[usize]) -> Result<ModuleElement> {
    v.mul_fn(&indicator(v.module().base(), set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::SigmaIdeal;
    use crate::fiber::{FiberSpace, LpExp};
    use crate::scalar::{rat, rat_int};

    fn sec(values: &[&[i64]]) -> Section {
        Section::new(
            values
                .iter()
                .map(|row| row.iter().map(|&c| rat_int(c)).collect())
                .collect(),
        )
    }

    fn primal(exponent: Exponent) -> Arc<SectionModule> {
        let x = FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(1, 2)]).unwrap();
        let bundle = StrongBundle::uniform(
            x,
            FiberSpace::lp(LpExp::One, 2),
            vec![sec(&[&[1, 0], &[2, 2]]), sec(&[&[0, 1], &[1, 0]])],
        )
        .unwrap();
        SectionModule::new(Arc::new(bundle), exponent, SigmaIdeal::Null).unwrap()
    }

    #[test]
    fn dual_sections_pair_pointwise() {
        let m = primal(Exponent::Finite(rat_int(2)));
        let dual = dual_module(&m).unwrap();
        assert_eq!(dual.exponent(), &Exponent::Finite(rat_int(2)));
        let omega = dual.element(sec(&[&[1, 0], &[1, 1]])).unwrap();
        assert_eq!(
            omega.pointwise_norm(),
            vec![Scalar::from_int(1), Scalar::from_int(1)]
        );
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        assert_eq!(
            pairing_action(&omega, &v).unwrap(),
            vec![rat_int(1), rat_int(4)]
        );
        assert_eq!(integrate_pairing(&omega, &v).unwrap(), rat(5, 2));
    }

    #[test]
    fn search_route_attains_the_closed_form() {
        let m = primal(Exponent::Finite(rat_int(2)));
        let dual = dual_module(&m).unwrap();
        let omega = dual.element(sec(&[&[1, 0], &[1, 1]])).unwrap();
        let closed = omega.module_norm();
        assert_eq!(closed, Scalar::from_int(1));
        let searched = functional_norm_search(&m, &omega, &[]).unwrap();
        assert_eq!(searched, closed);
    }

    #[test]
    fn search_route_attains_for_the_sup_module() {
        let m = primal(Exponent::Infinity);
        let dual = dual_module(&m).unwrap();
        assert_eq!(dual.exponent(), &Exponent::Finite(rat_int(1)));
        let omega = dual.element(sec(&[&[3, 0], &[1, 1]])).unwrap();
        // ||omega||_1 = 3 * 1/2 + 1 * 1/2 = 2.
        assert_eq!(omega.module_norm(), Scalar::from_int(2));
        let searched = functional_norm_search(&m, &omega, &[]).unwrap();
        assert_eq!(searched, Scalar::from_int(2));
    }

    #[test]
    fn search_route_attains_for_the_l1_module() {
        let m = primal(Exponent::Finite(rat_int(1)));
        let dual = dual_module(&m).unwrap();
        assert_eq!(dual.exponent(), &Exponent::Infinity);
        let omega = dual.element(sec(&[&[3, 0], &[1, 1]])).unwrap();
        assert_eq!(omega.module_norm(), Scalar::from_int(3));
        let searched = functional_norm_search(&m, &omega, &[]).unwrap();
        assert_eq!(searched, Scalar::from_int(3));
    }

    #[test]
    fn tabulation_inverts_the_pairing_realization() {
        let m = primal(Exponent::Finite(rat_int(2)));
        let dual = dual_module(&m).unwrap();
        let omega = dual.element(sec(&[&[1, 0], &[1, 1]])).unwrap();
        let action = |v: &ModuleElement| pairing_action(&omega, v).unwrap();
        let recovered = functional_from_action(&m, &action).unwrap();
        assert!(recovered.eq_mod(&omega));
    }

    #[test]
    fn nonlocal_actions_are_rejected() {
        let m = primal(Exponent::Finite(rat_int(2)));
        // Reads the section at the opposite point: linear but not local.
        let action = |v: &ModuleElement| -> Vec<Rational> {
            vec![v.value(1)[0].clone(), v.value(0)[0].clone()]
        };
        let err = functional_from_action(&m, &action).unwrap_err();
        assert!(matches!(err, Error::NotLinear { .. }), "got {err:?}");
    }

    #[test]
    fn both_dual_pullback_routes_build_the_same_fibers() {
        let m = primal(Exponent::Finite(rat_int(2)));
        let y = FiniteMeasureSpace::new(
            vec!["y1", "y2", "y3"],
            vec![rat(1, 4), rat(1, 4), rat(1, 2)],
        )
        .unwrap();
        let phi = MeasurableMap::from_indices(y, m.base().clone(), vec![0, 0, 1]);
        let (dual_then_pull, pull_then_dual) = dual_pullback_routes(&m, &phi).unwrap();
        assert_eq!(
            dual_then_pull.module().bundle().fibers(),
            pull_then_dual.bundle().fibers()
        );
        assert_eq!(
            dual_then_pull.module().exponent(),
            pull_then_dual.exponent()
        );

        // The same section data has the same norm along both routes, and the
        // pulled-back pairing matches the pairing of pullbacks.
        let dualm = dual_module(&m).unwrap();
        let omega = dualm.element(sec(&[&[1, 0], &[1, 1]])).unwrap();
        let pulled_omega = dual_then_pull.pull(&omega).unwrap();
        let relabeled = pull_then_dual
            .element(pulled_omega.section().clone())
            .unwrap();
        assert_eq!(pulled_omega.module_norm(), relabeled.module_norm());

        let pb = pullback_module(&m, &phi).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let pulled_v = pb.pull(&v).unwrap();
        let pointwise = pairing_action(&relabeled, &pulled_v).unwrap();
        assert_eq!(pointwise, vec![rat_int(1), rat_int(1), rat_int(4)]);
        let upstairs = pairing_action(&omega, &v).unwrap();
        for yy in 0..3 {
            assert_eq!(pointwise[yy], upstairs[phi.apply(yy)]);
        }
    }

    #[test]
    fn restriction_commutes_with_the_pairing() {
        let m = primal(Exponent::Finite(rat_int(2)));
        let dual = dual_module(&m).unwrap();
        let omega = dual.element(sec(&[&[1, 0], &[1, 1]])).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let set = [1usize];
        let left = pairing_action(&restrict(&omega, &set).unwrap(), &v).unwrap();
        let mut right = pairing_action(&omega, &v).unwrap();
        right[0] = Rational::zero();
        assert_eq!(left, right);
        // Restricting either side gives the same localized action.
        let also = pairing_action(&omega, &restrict(&v, &set).unwrap()).unwrap();
        assert_eq!(left, also);
    }

    #[test]
    fn pairing_rejects_mismatched_bases() {
        let m = primal(Exponent::Finite(rat_int(2)));
        let other = {
            let x = FiniteMeasureSpace::new(vec!["u"], vec![rat_int(1)]).unwrap();
            let bundle =
                StrongBundle::uniform(x, FiberSpace::lp(LpExp::One, 2), vec![sec(&[&[1, 0]])])
                    .unwrap();
            SectionModule::new(
                Arc::new(bundle),
                Exponent::Finite(rat_int(2)),
                SigmaIdeal::Null,
            )
            .unwrap()
        };
        let omega = other.element(sec(&[&[1, 0]])).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let err = pairing_action(&omega, &v).unwrap_err();
        assert!(matches!(err, Error::FiberMismatch { .. }));
    }
}
