//! Mass redistribution along a map and weak-star approximation of dual
//! sections of a pullback.
//!
//! `Pr` pushes a function on the map's source down to a density on the
//! target: the pushforward of `f d(mu_Y)` differentiated against `mu_X`.
//! It averages each fiber with its conditional weights, so it is positive,
//! integral-preserving, an `L^1` contraction, and commutes with
//! multiplication by functions pulled off the target.
//!
//! A dual section `L` of a pullback module is approximated from localized
//! averages: for a partition cell `E` upstairs, the localized functional
//! `lambda_E(x) = sum_{y in E, phi(y) = x} mu_Y(y) L(y) / mu_X(x)` lives
//! downstairs, and the level-`k` approximation reassembles these averages
//! cell by cell, normalized by `Pr(1_E)`. On a fully refining chain the
//! sequence reaches `L` itself; the integrated pairing gaps against probe
//! sections decrease to zero, and every approximant obeys the uniform bound
//! `int |L_k|^e <= int |L|^e` for any exponent `e >= 1`.

use std::sync::Arc;

use num::traits::{One, Signed, Zero};

use crate::bundle::{ModuleElement, Section, SectionModule};
use crate::duality::pairing_action;
use crate::error::{Error, Result};
use crate::measure::{radon_nikodym, MeasurableMap, PartitionChain};
use crate::pullback::PullbackModule;
use crate::scalar::{Rational, Scalar};

/// Mass redistribution along a map whose pushforward charges no null point.
#[derive(Debug, Clone)]
pub struct PrOperator {
    map: MeasurableMap,
}

pub fn pr_operator(map: &MeasurableMap) -> Result<PrOperator> {
    let pushed = map.pushforward(&vec![Rational::one(); map.source().len()]);
    radon_nikodym(map.target(), &pushed)?;
    Ok(PrOperator { map: map.clone() })
}

impl PrOperator {
    pub fn map(&self) -> &MeasurableMap {
        &self.map
    }

    /// The density of the pushforward of `f d(mu_source)`, zero on null
    /// points of the target.
    pub fn apply(&self, f: &[Rational]) -> Vec<Rational> {
        let pushed = self.map.pushforward(f);
        radon_nikodym(self.map.target(), &pushed).expect("construction checked absolute continuity")
    }

    pub fn apply_indicator(&self, set: &[usize]) -> Vec<Rational> {
        self.apply(&crate::duality::indicator(self.map.source(), set))
    }
}

/// The localized functional of a dual section over a subset upstairs:
/// the fiberwise average `lambda_E(x)`, as a section of `dual_m`.
pub fn localized_functional(
    map: &MeasurableMap,
    dual_m: &Arc<SectionModule>,
    omega: &ModuleElement,
    set: &[usize],
) -> Result<ModuleElement> {
    if dual_m.base() != map.target() {
        return Err(Error::FiberMismatch {
            left: "dual module base".into(),
            right: "map target".into(),
            reason: "localized functionals live on the map's target".into(),
        });
    }
    if omega.module().base() != map.source() {
        return Err(Error::FiberMismatch {
            left: "dual section base".into(),
            right: "map source".into(),
            reason: "the section being localized lives on the map's source".into(),
        });
    }
    let target = map.target();
    let dims = dual_m.bundle().dims();
    let mut values: Vec<Vec<Rational>> = dims.iter().map(|&d| vec![Rational::zero(); d]).collect();
    for &y in set {
        let x = map.apply(y);
        let w = map.source().mass(y);
        if w.is_zero() || target.is_null(x) {
            continue;
        }
        for (acc, c) in values[x].iter_mut().zip(omega.value(y)) {
            *acc += w * c;
        }
    }
    for x in target.support() {
        let m = target.mass(x);
        for c in values[x].iter_mut() {
            *c /= m;
        }
    }
    dual_m.element(Section::new(values))
}

/// One level of the approximation of a dual section.
#[derive(Debug, Clone)]
pub struct ApproxLevel {
    pub level: usize,
    /// The approximant `L_k`, a section of the same dual module as `L`.
    pub approx: ModuleElement,
    /// `int |<L_k - L, V>| d(mu)` for each probe `V`.
    pub probe_gaps: Vec<Rational>,
    /// `int |L_k|^e d(mu)`.
    pub norm_integral: Scalar,
}

/// The approximation of `l` along `chain`, with its diagnostics.
#[derive(Debug, Clone)]
pub struct ApproximationReport {
    pub exponent: Rational,
    pub levels: Vec<ApproxLevel>,
    /// `int |L|^e d(mu)`: the uniform bound every level must respect.
    pub target_norm_integral: Scalar,
}

fn norm_integral(v: &ModuleElement, e: &Rational) -> Scalar {
    let base = v.module().base();
    let powers = v.pointwise_norm_pow(e);
    base.support()
        .into_iter()
        .map(|i| powers[i].clone() * Scalar::Exact(base.mass(i).clone()))
        .sum()
}

/// Approximate the dual section `l` of the pullback along a partition chain
/// upstairs. Every probe must be a section of the pullback module.
pub fn approximate(
    pb: &PullbackModule,
    l: &ModuleElement,
    chain: &PartitionChain,
    probes: &[ModuleElement],
    e: &Rational,
) -> Result<ApproximationReport> {
    if chain.space() != pb.map().source() {
        return Err(Error::FiberMismatch {
            left: "chain space".into(),
            right: "pullback carrier".into(),
            reason: "the approximating chain partitions the pullback carrier".into(),
        });
    }
    if l.module().base() != pb.map().source() {
        return Err(Error::FiberMismatch {
            left: "dual section base".into(),
            right: "pullback carrier".into(),
            reason: "the section being approximated lives on the pullback carrier".into(),
        });
    }
    if *e < Rational::one() {
        return Err(Error::BadExponents(format!(
            "approximation exponent {e} below 1"
        )));
    }
    let y_space = pb.map().source();
    let pr = pr_operator(pb.map())?;
    let module = l.module();
    let dual_base = crate::duality::dual_module(&pb.source().clone())?;
    let reference = pairing_table(l, probes)?;

    let mut levels = Vec::with_capacity(chain.num_levels());
    for level in 0..chain.num_levels() {
        let mut values: Vec<Vec<Rational>> = module
            .bundle()
            .dims()
            .iter()
            .map(|&d| vec![Rational::zero(); d])
            .collect();
        for cell in chain.cells(level)? {
            let lambda = localized_functional(pb.map(), &dual_base, l, cell)?;
            let weight = pr.apply_indicator(cell);
            for &y in cell {
                if y_space.is_null(y) {
                    continue;
                }
                let x = pb.map().apply(y);
                // A positive-mass point forces mass into its own cell.
                assert!(
                    !weight[x].is_zero(),
                    "cell of a positive-mass point has positive conditional mass"
                );
                values[y] = lambda.value(x).iter().map(|c| c / &weight[x]).collect();
            }
        }
        let approx = module.element(Section::new(values))?;
        let table = pairing_table(&approx, probes)?;
        let probe_gaps = table
            .iter()
            .zip(&reference)
            .map(|(got, want)| {
                let diff: Vec<Rational> = got.iter().zip(want).map(|(a, b)| a - b).collect();
                y_space.l1_norm(&diff)
            })
            .collect();
        levels.push(ApproxLevel {
            level,
            norm_integral: norm_integral(&approx, e),
            approx,
            probe_gaps,
        });
    }
    Ok(ApproximationReport {
        exponent: e.clone(),
        levels,
        target_norm_integral: norm_integral(l, e),
    })
}

fn pairing_table(l: &ModuleElement, probes: &[ModuleElement]) -> Result<Vec<Vec<Rational>>> {
    probes.iter().map(|v| pairing_action(l, v)).collect()
}

/// Pointwise Jensen comparison for conditional averages: at each
/// positive-mass target point, `|Pr(1_E f)|^p` against
/// `Pr(1_E |f|^p) Pr(1_E)^{p-1}`. Integer exponents keep both sides exact.
pub fn jensen_gap(
    pr: &PrOperator,
    set: &[usize],
    f: &[Rational],
    p: u32,
) -> Result<Vec<(Rational, Rational)>> {
    if p == 0 {
        return Err(Error::BadExponents("Jensen comparison needs p >= 1".into()));
    }
    let source = pr.map().source();
    if f.len() != source.len() {
        return Err(Error::DimensionMismatch {
            expected: source.len(),
            got: f.len(),
        });
    }
    let ind = crate::duality::indicator(source, set);
    let masked: Vec<Rational> = ind.iter().zip(f).map(|(e, v)| e * v).collect();
    let masked_pow: Vec<Rational> = ind
        .iter()
        .zip(f)
        .map(|(e, v)| e * pow_rat(&v.abs(), p))
        .collect();
    let avg = pr.apply(&masked);
    let avg_pow = pr.apply(&masked_pow);
    let avg_ind = pr.apply(&ind);
    Ok(pr
        .map()
        .target()
        .support()
        .into_iter()
        .map(|x| {
            let lhs = pow_rat(&avg[x].abs(), p);
            let rhs = &avg_pow[x] * pow_rat(&avg_ind[x], p - 1);
            (lhs, rhs)
        })
        .collect())
}

fn pow_rat(r: &Rational, p: u32) -> Rational {
    let mut out = Rational::one();
    for _ in 0..p {
        out *= r;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{Exponent, SigmaIdeal, StrongBundle};
    use crate::fiber::{FiberSpace, LpExp};
    use crate::measure::{build_chain, FiniteMeasureSpace};
    use crate::pullback::pullback_module;
    use crate::scalar::{rat, rat_int};

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
        let phi = MeasurableMap::from_indices(y, x.clone(), vec![0, 0, 1]);
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
    fn redistribution_averages_each_fiber() {
        let (_, phi) = canonical();
        let pr = pr_operator(&phi).unwrap();
        let f = vec![rat_int(1), rat_int(3), rat_int(2)];
        assert_eq!(pr.apply(&f), vec![rat_int(2), rat_int(2)]);
        // Unit mass redistributes to the constant one on a preserving map.
        assert_eq!(
            pr.apply(&vec![Rational::one(); 3]),
            vec![rat_int(1), rat_int(1)]
        );
    }

    #[test]
    fn redistribution_laws_hold() {
        let (_, phi) = canonical();
        let pr = pr_operator(&phi).unwrap();
        let g = vec![rat(1, 3), rat_int(5), rat(-7, 2)];
        let h = vec![rat_int(2), rat(-1, 4)];
        // Multiplication by a pulled-off function commutes out.
        let pulled = phi.pull_function(&h);
        let prod: Vec<Rational> = pulled.iter().zip(&g).map(|(a, b)| a * b).collect();
        let lhs = pr.apply(&prod);
        let rhs: Vec<Rational> = h.iter().zip(pr.apply(&g)).map(|(a, b)| a * b).collect();
        assert_eq!(lhs, rhs);
        // The integral is preserved and the L1 norm contracts.
        assert_eq!(
            phi.target().integrate(&pr.apply(&g)),
            phi.source().integrate(&g)
        );
        assert!(phi.target().l1_norm(&pr.apply(&g)) <= phi.source().l1_norm(&g));
    }

    #[test]
    fn redistribution_rejects_maps_charging_null_points() {
        let x = FiniteMeasureSpace::new(vec!["a", "b"], vec![rat_int(1), rat_int(0)]).unwrap();
        let y = FiniteMeasureSpace::new(vec!["u", "v"], vec![rat(1, 2), rat(1, 2)]).unwrap();
        let phi = MeasurableMap::from_indices(y, x, vec![0, 1]);
        let err = pr_operator(&phi).unwrap_err();
        assert!(matches!(err, Error::NotAbsolutelyContinuous { .. }));
    }

    fn dual_data() -> (
        Arc<SectionModule>,
        MeasurableMap,
        crate::pullback::PullbackModule,
        ModuleElement,
        ModuleElement,
    ) {
        let (m, phi) = canonical();
        let pb = pullback_module(&m, &phi).unwrap();
        let dual_pb = crate::duality::dual_module(pb.module()).unwrap();
        let l = dual_pb.element(sec(&[&[1, 0], &[0, 1], &[1, 1]])).unwrap();
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        let pulled = pb.pull(&v).unwrap();
        (m, phi, pb, l, pulled)
    }

    #[test]
    fn localized_functionals_average_with_conditional_weights() {
        let (m, phi, _, l, _) = dual_data();
        let dual_m = crate::duality::dual_module(&m).unwrap();
        let whole = localized_functional(&phi, &dual_m, &l, &[0, 1, 2]).unwrap();
        assert_eq!(whole.value(0), &[rat(1, 2), rat(1, 2)]);
        assert_eq!(whole.value(1), &[rat_int(1), rat_int(1)]);
        let v = m.element(sec(&[&[1, 0], &[2, 2]])).unwrap();
        assert_eq!(
            pairing_action(&whole, &v).unwrap(),
            vec![rat(1, 2), rat_int(4)]
        );
        let tail = localized_functional(&phi, &dual_m, &l, &[2]).unwrap();
        assert_eq!(
            pairing_action(&tail, &v).unwrap(),
            vec![rat_int(0), rat_int(4)]
        );
    }

    #[test]
    fn approximants_close_the_gap_along_a_refining_chain() {
        let (_, phi, pb, l, pulled) = dual_data();
        let chain = build_chain(
            phi.source(),
            &[vec!["y1".to_string()], vec!["y2".to_string()]],
        )
        .unwrap();
        let report = approximate(&pb, &l, &chain, &[pulled.clone()], &rat_int(2)).unwrap();
        assert_eq!(report.levels.len(), 3);

        // Level zero averages the whole carrier.
        let l0 = &report.levels[0];
        assert_eq!(
            pairing_action(&l0.approx, &pulled).unwrap(),
            vec![rat(1, 2), rat(1, 2), rat_int(4)]
        );
        assert_eq!(l0.probe_gaps, vec![rat(1, 4)]);

        // One generator already separates the fibers here.
        assert_eq!(report.levels[1].probe_gaps, vec![rat_int(0)]);
        let last = report.levels.last().unwrap();
        assert_eq!(last.probe_gaps, vec![rat_int(0)]);
        assert!(last.approx.eq_mod(&l));

        // Uniform bound at every level, exact scalars throughout.
        for lvl in &report.levels {
            assert!(lvl.norm_integral.le_tol(&report.target_norm_integral, 0.0));
            assert!(lvl.norm_integral.is_exact());
        }
    }

    #[test]
    fn uniform_bound_holds_for_both_conjugate_exponents() {
        let (_, phi, pb, l, pulled) = dual_data();
        let chain = build_chain(phi.source(), &[vec!["y3".to_string()]]).unwrap();
        for e in [rat_int(2), rat(3, 2), rat_int(1)] {
            let report = approximate(&pb, &l, &chain, &[pulled.clone()], &e).unwrap();
            for lvl in &report.levels {
                assert!(
                    lvl.norm_integral
                        .le_tol(&report.target_norm_integral, 1e-12),
                    "exponent {e} level {} broke the bound",
                    lvl.level
                );
            }
        }
    }

    #[test]
    fn jensen_comparison_is_exact_and_one_sided() {
        let x = FiniteMeasureSpace::new(vec!["a"], vec![rat_int(1)]).unwrap();
        let y = FiniteMeasureSpace::new(vec!["y1", "y2"], vec![rat(1, 2), rat(1, 2)]).unwrap();
        let phi = MeasurableMap::from_indices(y, x, vec![0, 0]);
        let pr = pr_operator(&phi).unwrap();
        let f = vec![rat_int(0), rat_int(2)];
        let pairs = jensen_gap(&pr, &[0, 1], &f, 2).unwrap();
        assert_eq!(pairs, vec![(rat_int(1), rat_int(2))]);
        for (lhs, rhs) in pairs {
            assert!(lhs <= rhs);
        }
    }

    #[test]
    fn exponents_below_one_are_rejected() {
        let (_, phi, pb, l, pulled) = dual_data();
        let chain = build_chain(phi.source(), &[]).unwrap();
        let err = approximate(&pb, &l, &chain, &[pulled], &rat(1, 2)).unwrap_err();
        assert!(matches!(err, Error::BadExponents(_)));
    }
}
