//! Doob conditional-expectation operators along a partition chain, and the
//! pointwise representatives they select.
//!
//! For a chain level with cells `E^n`, the operator replaces a function by its
//! cell averages: `P(f) = sum_n  (avg of f over E^n) 1_{E^n}`, where the sum
//! runs over cells of positive mass and points in zero-mass cells are sent to
//! zero. On a finite chain the martingale `P_0(f), P_1(f), ...` stabilizes, so
//! every carrier point is a Lebesgue point and the representative of an `L^1`
//! class is the stabilized value. The `p`-power variant applies the same
//! machinery to `f^p` and takes `p`-th roots, staying exact whenever the root
//! is rational.

use crate::error::{Error, Result};
use crate::measure::PartitionChain;
use crate::scalar::{Rational, Scalar};
use num::traits::One;

/// Conditional expectation of `f` with respect to the cells at `level`.
pub fn cond_exp(chain: &PartitionChain, level: usize, f: &[Scalar]) -> Result<Vec<Scalar>> {
    let space = chain.space();
    assert_eq!(f.len(), space.len());
    let cells = chain.cells(level)?;
    let mut out = vec![Scalar::zero(); space.len()];
    for cell in cells {
        let mass = space.set_mass(cell);
        if mass == num::zero() {
            continue;
        }
        let total: Scalar = cell
            .iter()
            .map(|&i| f[i].clone() * Scalar::Exact(space.mass(i).clone()))
            .sum();
        let avg = total / Scalar::Exact(mass);
        for &i in cell {
            out[i] = avg.clone();
        }
    }
    Ok(out)
}

/// The stabilized martingale of a function along a refining chain.
#[derive(Debug, Clone, PartialEq)]
pub struct RepResult {
    /// Points whose martingale stabilizes. Finite chains stabilize at the
    /// final level, so this is the whole carrier; its complement is null by
    /// construction.
    pub leb_set: Vec<usize>,
    /// The stabilized value at each point: the chosen everywhere-defined
    /// representative of the class of `f`.
    pub rep: Vec<Scalar>,
    /// Smallest level from which the martingale is constant as a function.
    pub stabilization_level: usize,
}

/// Representative of `f` selected by a fully refining chain.
///
/// On positive-mass points the representative equals `f`; on a null point it
/// is the stabilized cell average, which may well be nonzero.
pub fn rep(chain: &PartitionChain, f: &[Scalar]) -> Result<RepResult> {
    chain.require_fully_refining()?;
    let stages: Vec<Vec<Scalar>> = (0..chain.num_levels())
        .map(|k| cond_exp(chain, k, f))
        .collect::<Result<_>>()?;
    let last = stages.last().expect("chain has a base level").clone();
    let mut stabilization_level = stages.len() - 1;
    while stabilization_level > 0 && stages[stabilization_level - 1] == last {
        stabilization_level -= 1;
    }
    // Every point is a Lebesgue point: a finite martingale is eventually
    // constant, and the stabilized value is its limit.
    let leb_set = (0..chain.space().len()).collect();
    Ok(RepResult {
        leb_set,
        rep: last,
        stabilization_level,
    })
}

/// `p`-power representative: the `p`-th root of the representative of `f^p`.
///
/// Requires `f >= 0` pointwise and `p > 1`. Values stay exact whenever the
/// final root is rational, which on a fully refining chain is the case for
/// every integer `p` and rational `f`.
pub fn rep_p(chain: &PartitionChain, p: &Rational, f: &[Scalar]) -> Result<RepResult> {
    if *p <= Rational::one() {
        return Err(Error::BadExponents(format!(
            "p-power representatives need p > 1, got {p}"
        )));
    }
    let space = chain.space();
    assert_eq!(f.len(), space.len());
    for (i, v) in f.iter().enumerate() {
        if *v < Scalar::zero() {
            return Err(Error::NegativeInput {
                point: space.label(i).to_string(),
                value: v.to_string(),
            });
        }
    }
    let powered: Vec<Scalar> = f.iter().map(|v| v.pow(p)).collect();
    let base = rep(chain, &powered)?;
    let inv_p = Rational::one() / p;
    Ok(RepResult {
        leb_set: base.leb_set,
        rep: base.rep.iter().map(|v| v.pow(&inv_p)).collect(),
        stabilization_level: base.stabilization_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_chain, FiniteMeasureSpace};
    use crate::scalar::{exact_vec, rat, rat_int};

    fn space_x() -> FiniteMeasureSpace {
        FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(1, 2)]).unwrap()
    }

    fn chain_x() -> PartitionChain {
        build_chain(&space_x(), &[vec!["a".into()]]).unwrap()
    }

    #[test]
    fn level_zero_averages_everything() {
        let f = exact_vec(&[rat_int(1), rat_int(3)]);
        let p0 = cond_exp(&chain_x(), 0, &f).unwrap();
        assert_eq!(p0, exact_vec(&[rat_int(2), rat_int(2)]));
        let p1 = cond_exp(&chain_x(), 1, &f).unwrap();
        assert_eq!(p1, f);
    }

    #[test]
    fn levels_out_of_range_are_rejected() {
        let f = exact_vec(&[rat_int(1), rat_int(3)]);
        let err = cond_exp(&chain_x(), 2, &f).unwrap_err();
        assert_eq!(err, Error::LevelOutOfRange { level: 2, len: 2 });
    }

    #[test]
    fn representative_recovers_the_function_on_the_support() {
        let f = exact_vec(&[rat_int(1), rat_int(3)]);
        let r = rep(&chain_x(), &f).unwrap();
        assert_eq!(r.rep, f);
        assert_eq!(r.leb_set, vec![0, 1]);
        assert_eq!(r.stabilization_level, 1);
    }

    #[test]
    fn non_refining_chains_are_rejected() {
        let y = FiniteMeasureSpace::new(
            vec!["y1", "y2", "y3"],
            vec![rat(1, 4), rat(1, 4), rat(1, 2)],
        )
        .unwrap();
        let chain = build_chain(&y, &[vec!["y1".into()]]).unwrap();
        let f = exact_vec(&[rat_int(1), rat_int(3), rat_int(2)]);
        assert!(matches!(
            rep(&chain, &f),
            Err(Error::ChainNotRefining { .. })
        ));
    }

    #[test]
    fn null_points_inherit_the_stabilized_cell_average() {
        let s =
            FiniteMeasureSpace::new(vec!["a", "b", "c"], vec![rat(1, 2), rat(1, 2), rat_int(0)])
                .unwrap();
        // The final cells are {a, c} and {b}; c rides with a.
        let chain = build_chain(&s, &[vec!["b".into()]]).unwrap();
        let f = exact_vec(&[rat_int(1), rat_int(3), rat_int(99)]);
        let r = rep(&chain, &f).unwrap();
        assert_eq!(r.rep, exact_vec(&[rat_int(1), rat_int(3), rat_int(1)]));
        assert!(s.eq_ae(
            &[rat_int(1), rat_int(3), rat_int(1)],
            &[rat_int(1), rat_int(3), rat_int(99)]
        ));
    }

    #[test]
    fn zero_mass_cells_map_to_zero() {
        let s = FiniteMeasureSpace::new(
            vec!["a", "c", "d"],
            vec![rat_int(1), rat_int(0), rat_int(0)],
        )
        .unwrap();
        let chain = build_chain(&s, &[vec!["c".into(), "d".into()]]).unwrap();
        let f = exact_vec(&[rat_int(5), rat_int(7), rat_int(9)]);
        let r = rep(&chain, &f).unwrap();
        assert_eq!(r.rep, exact_vec(&[rat_int(5), rat_int(0), rat_int(0)]));
    }

    #[test]
    fn p_power_representative_is_exact_at_full_refinement() {
        let f = exact_vec(&[rat_int(1), rat_int(3)]);
        let r = rep_p(&chain_x(), &rat_int(2), &f).unwrap();
        assert_eq!(r.rep, f);
        assert!(r.rep.iter().all(Scalar::is_exact));
    }

    #[test]
    fn intermediate_p_power_averages_leave_the_rational_field() {
        // The level-0 proxy of the 2-power representative of (1,3) is
        // sqrt((1 + 9)/2) = sqrt(5).
        let f = exact_vec(&[rat_int(1), rat_int(3)]);
        let squared: Vec<Scalar> = f.iter().map(|v| v.pow(&rat_int(2))).collect();
        let proxy = cond_exp(&chain_x(), 0, &squared).unwrap()[0].nth_root(2);
        assert!(!proxy.is_exact());
        assert!((proxy.to_f64() - 2.236_067_977_499_79).abs() < 1e-9);
    }

    #[test]
    fn negative_inputs_are_rejected_with_a_witness() {
        let f = exact_vec(&[rat_int(1), rat_int(-3)]);
        let err = rep_p(&chain_x(), &rat_int(2), &f).unwrap_err();
        assert_eq!(
            err,
            Error::NegativeInput {
                point: "b".into(),
                value: "-3".into()
            }
        );
    }

    #[test]
    fn averaging_agrees_with_a_direct_tabulation() {
        // Independent oracle: averages written out by hand for a four-point
        // space with masses 1/6, 1/3, 1/4, 1/4 and one generator {p0, p2}.
        let s = FiniteMeasureSpace::new(
            vec!["p0", "p1", "p2", "p3"],
            vec![rat(1, 6), rat(1, 3), rat(1, 4), rat(1, 4)],
        )
        .unwrap();
        let chain = build_chain(&s, &[vec!["p0".into(), "p2".into()]]).unwrap();
        let f = exact_vec(&[rat_int(6), rat_int(-3), rat_int(2), rat_int(10)]);
        // Cell {p0, p2}: (6/6 + 2/4) / (1/6 + 1/4) = (3/2)/(5/12) = 18/5.
        // Cell {p1, p3}: (-1 + 10/4) / (1/3 + 1/4) = (3/2)/(7/12) = 18/7.
        let expected = exact_vec(&[rat(18, 5), rat(18, 7), rat(18, 5), rat(18, 7)]);
        assert_eq!(cond_exp(&chain, 1, &f).unwrap(), expected);
    }
}
