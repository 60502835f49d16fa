//! Finite measure spaces, measurable maps, and refining partition chains.
//!
//! A space is a list of labelled points with nonnegative rational masses.
//! Null points (mass zero) are first-class carrier members: functions and
//! sections are considered up to the null ideal, and canonical class
//! representatives vanish on null points. A partition chain is the filtration
//! generated by a list of subsets, with cells at every level ordered by their
//! smallest member index so that chain data is reproducible.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::error::{Error, Result};
use crate::scalar::{fmt_rational, Rational};
use num::traits::{Signed, Zero};

/// A finite measure space: labelled points with nonnegative rational masses.
#[derive(Debug, Clone)]
pub struct FiniteMeasureSpace {
    labels: Vec<String>,
    weights: Vec<Rational>,
    index: HashMap<String, usize>,
}

impl PartialEq for FiniteMeasureSpace {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && self.weights == other.weights
    }
}

impl FiniteMeasureSpace {
    pub fn new<L: Into<String>>(labels: Vec<L>, weights: Vec<Rational>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: labels.len(),
                got: weights.len(),
            });
        }
        let mut index = HashMap::new();
        for (i, label) in labels.iter().enumerate() {
            if index.insert(label.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(label.clone()));
            }
        }
        for (label, w) in labels.iter().zip(&weights) {
            if w.is_negative() {
                return Err(Error::NegativeWeight {
                    point: label.clone(),
                    weight: fmt_rational(w),
                });
            }
        }
        if weights.iter().all(Rational::is_zero) {
            return Err(Error::AllNull);
        }
        Ok(Self {
            labels,
            weights,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.index
            .get(label)
            .copied()
            .ok_or_else(|| Error::UnknownPoint(label.to_string()))
    }

    pub fn mass(&self, i: usize) -> &Rational {
        &self.weights[i]
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn is_null(&self, i: usize) -> bool {
        self.weights[i].is_zero()
    }

    /// Indices of the positive-mass points, in carrier order.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.is_null(i)).collect()
    }

    pub fn total_mass(&self) -> Rational {
        self.weights.iter().sum()
    }

    /// Mass of a set of point indices.
    pub fn set_mass(&self, set: &[usize]) -> Rational {
        set.iter().map(|&i| self.weights[i].clone()).sum()
    }

    pub fn integrate(&self, f: &[Rational]) -> Rational {
        assert_eq!(f.len(), self.len());
        f.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn l1_norm(&self, f: &[Rational]) -> Rational {
        f.iter().zip(&self.weights).map(|(v, w)| v.abs() * w).sum()
    }

    /// Essential supremum of `|f|`: the maximum over positive-mass points.
    pub fn esssup(&self, f: &[Rational]) -> Rational {
        assert_eq!(f.len(), self.len());
        self.support()
            .into_iter()
            .map(|i| f[i].abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    /// The canonical class representative: values kept on the support,
    /// zeroed on null points.
    pub fn canonicalize(&self, f: &[Rational]) -> Vec<Rational> {
        assert_eq!(f.len(), self.len());
        f.iter()
            .enumerate()
            .map(|(i, v)| {
                if self.is_null(i) {
                    Rational::zero()
                } else {
                    v.clone()
                }
            })
            .collect()
    }

    /// Equality off a null set.
    pub fn eq_ae(&self, f: &[Rational], g: &[Rational]) -> bool {
        assert_eq!(f.len(), self.len());
        assert_eq!(g.len(), self.len());
        self.support().into_iter().all(|i| f[i] == g[i])
    }
}

/// A map between finite measure spaces, stored as an index assignment.
///
/// The measure-preservation flag is computed once at construction: the map
/// pushes the source measure exactly onto the target measure iff every target
/// point's preimage carries exactly the target mass.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurableMap {
    source: FiniteMeasureSpace,
    target: FiniteMeasureSpace,
    assign: Vec<usize>,
    measure_preserving: bool,
}

impl MeasurableMap {
    pub fn new(
        source: FiniteMeasureSpace,
        target: FiniteMeasureSpace,
        assign_by_label: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut assign = vec![usize::MAX; source.len()];
        for (from, to) in assign_by_label {
            let i = source.index_of(from)?;
            assign[i] = target.index_of(to)?;
        }
        if let Some(i) = assign.iter().position(|&j| j == usize::MAX) {
            return Err(Error::UnknownPoint(format!(
                "no assignment for source point '{}'",
                source.label(i)
            )));
        }
        Ok(Self::from_indices(source, target, assign))
    }

    pub fn from_indices(
        source: FiniteMeasureSpace,
        target: FiniteMeasureSpace,
        assign: Vec<usize>,
    ) -> Self {
        assert_eq!(assign.len(), source.len());
        assert!(assign.iter().all(|&j| j < target.len()));
        let ones = vec![Rational::from_integer(1.into()); source.len()];
        let pushed = pushforward_masses(&source, &target, &assign, &ones);
        let measure_preserving = pushed == target.weights();
        Self {
            source,
            target,
            assign,
            measure_preserving,
        }
    }

    pub fn source(&self) -> &FiniteMeasureSpace {
        &self.source
    }

    pub fn target(&self) -> &FiniteMeasureSpace {
        &self.target
    }

    pub fn apply(&self, i: usize) -> usize {
        self.assign[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assign
    }

    pub fn preimage(&self, target_point: usize) -> Vec<usize> {
        (0..self.source.len())
            .filter(|&i| self.assign[i] == target_point)
            .collect()
    }

    pub fn is_measure_preserving(&self) -> bool {
        self.measure_preserving
    }

    pub fn require_measure_preserving(&self) -> Result<()> {
        if self.measure_preserving {
            return Ok(());
        }
        let pushed = self.pushforward(&vec![Rational::from_integer(1.into()); self.source.len()]);
        let bad = (0..self.target.len())
            .find(|&x| pushed[x] != *self.target.mass(x))
            .expect("non-preserving map has a witness point");
        Err(Error::MapNotMeasurePreserving {
            point: self.target.label(bad).to_string(),
            pushed: fmt_rational(&pushed[bad]),
            expected: fmt_rational(self.target.mass(bad)),
        })
    }

    /// Pushforward of the source measure weighted by `f`: the mass that
    /// `f d(source)` deposits on each target point.
    pub fn pushforward(&self, f: &[Rational]) -> Vec<Rational> {
        pushforward_masses(&self.source, &self.target, &self.assign, f)
    }

    /// Whether the pushforward of the source measure is absolutely continuous
    /// with respect to the target measure: no null target point receives mass.
    pub fn is_absolutely_continuous(&self) -> bool {
        let pushed = self.pushforward(&vec![Rational::from_integer(1.into()); self.source.len()]);
        (0..self.target.len()).all(|x| !self.target.is_null(x) || pushed[x].is_zero())
    }

    /// Pull a function on the target back to the source.
    pub fn pull_function(&self, g: &[Rational]) -> Vec<Rational> {
        assert_eq!(g.len(), self.target.len());
        self.assign.iter().map(|&x| g[x].clone()).collect()
    }
}

fn pushforward_masses(
    source: &FiniteMeasureSpace,
    target: &FiniteMeasureSpace,
    assign: &[usize],
    f: &[Rational],
) -> Vec<Rational> {
    assert_eq!(f.len(), source.len());
    let mut out = vec![Rational::zero(); target.len()];
    for (i, &x) in assign.iter().enumerate() {
        out[x] += &f[i] * source.mass(i);
    }
    out
}

/// Radon–Nikodym density of the measure with masses `nu` with respect to the
/// space's measure, zeroed on null points. Fails with a witness when `nu`
/// charges a null point.
pub fn radon_nikodym(space: &FiniteMeasureSpace, nu: &[Rational]) -> Result<Vec<Rational>> {
    assert_eq!(nu.len(), space.len());
    let mut density = Vec::with_capacity(space.len());
    for i in 0..space.len() {
        if space.is_null(i) {
            if !nu[i].is_zero() {
                return Err(Error::NotAbsolutelyContinuous {
                    point: space.label(i).to_string(),
                    mass: fmt_rational(&nu[i]),
                });
            }
            density.push(Rational::zero());
        } else {
            density.push(&nu[i] / space.mass(i));
        }
    }
    Ok(density)
}

/// A refining chain of partitions of a space's carrier.
///
/// Level 0 is the trivial partition; level `k+1` refines level `k` by the
/// `k`-th generator set. Cells are kept sorted and listed in increasing order
/// of their smallest member index.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionChain {
    space: FiniteMeasureSpace,
    generators: Vec<Vec<usize>>,
    levels: Vec<Vec<Vec<usize>>>,
    fully_refining: bool,
}

/// Build the chain generated by subsets given as label lists.
pub fn build_chain(
    space: &FiniteMeasureSpace,
    generators: &[Vec<String>],
) -> Result<PartitionChain> {
    let mut resolved = Vec::with_capacity(generators.len());
    for gen in generators {
        let mut set = Vec::new();
        let mut seen = HashSet::new();
        for label in gen {
            let i = space.index_of(label)?;
            if seen.insert(i) {
                set.push(i);
            }
        }
        set.sort_unstable();
        resolved.push(set);
    }
    Ok(PartitionChain::from_indices(space.clone(), resolved))
}

impl PartitionChain {
    pub fn from_indices(space: FiniteMeasureSpace, generators: Vec<Vec<usize>>) -> Self {
        let mut levels = Vec::with_capacity(generators.len() + 1);
        levels.push(vec![(0..space.len()).collect::<Vec<usize>>()]);
        for gen in &generators {
            let gen_set: HashSet<usize> = gen.iter().copied().collect();
            let prev = levels.last().expect("chain has a base level");
            let mut next = Vec::new();
            for cell in prev {
                let (inside, outside): (Vec<usize>, Vec<usize>) =
                    cell.iter().partition(|i| gen_set.contains(i));
                if !inside.is_empty() {
                    next.push(inside);
                }
                if !outside.is_empty() {
                    next.push(outside);
                }
            }
            next.sort_by_key(|cell| cell[0]);
            levels.push(next);
        }
        let fully_refining = levels
            .last()
            .expect("chain has a final level")
            .iter()
            .all(|cell| cell.iter().filter(|&&i| !space.is_null(i)).count() <= 1);
        Self {
            space,
            generators,
            levels,
            fully_refining,
        }
    }

    pub fn space(&self) -> &FiniteMeasureSpace {
        &self.space
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn cells(&self, level: usize) -> Result<&[Vec<usize>]> {
        self.levels
            .get(level)
            .map(Vec::as_slice)
            .ok_or(Error::LevelOutOfRange {
                level,
                len: self.levels.len(),
            })
    }

    pub fn final_cells(&self) -> &[Vec<usize>] {
        self.levels.last().expect("chain has a final level")
    }

    /// The cell of `point` at `level`.
    pub fn cell_of(&self, level: usize, point: usize) -> Result<&[usize]> {
        Ok(self
            .cells(level)?
            .iter()
            .find(|cell| cell.contains(&point))
            .expect("levels partition the carrier")
            .as_slice())
    }

    /// Whether the final level separates all positive-mass points.
    pub fn is_fully_refining(&self) -> bool {
        self.fully_refining
    }

    pub fn require_fully_refining(&self) -> Result<()> {
        if self.fully_refining {
            return Ok(());
        }
        let cell = self
            .final_cells()
            .iter()
            .find(|cell| cell.iter().filter(|&&i| !self.space.is_null(i)).count() > 1)
            .expect("non-refining chain has a crowded cell");
        Err(Error::ChainNotRefining {
            cell: cell
                .iter()
                .map(|&i| self.space.label(i).to_string())
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    pub(crate) fn space_x() -> FiniteMeasureSpace {
        FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(1, 2)]).unwrap()
    }

    pub(crate) fn space_y() -> FiniteMeasureSpace {
        FiniteMeasureSpace::new(
            vec!["y1", "y2", "y3"],
            vec![rat(1, 4), rat(1, 4), rat(1, 2)],
        )
        .unwrap()
    }

    pub(crate) fn map_phi() -> MeasurableMap {
        let assign: BTreeMap<String, String> = [("y1", "a"), ("y2", "a"), ("y3", "b")]
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        MeasurableMap::new(space_y(), space_x(), &assign).unwrap()
    }

    #[test]
    fn construction_rejects_bad_weight_data() {
        let neg = FiniteMeasureSpace::new(vec!["a", "b"], vec![rat(1, 2), rat(-1, 2)]);
        assert!(matches!(neg, Err(Error::NegativeWeight { .. })));

        let dup = FiniteMeasureSpace::new(vec!["a", "a"], vec![rat(1, 2), rat(1, 2)]);
        assert!(matches!(dup, Err(Error::DuplicateLabel(_))));

        let null = FiniteMeasureSpace::new(vec!["a", "b"], vec![rat_int(0), rat_int(0)]);
        assert!(matches!(null, Err(Error::AllNull)));
    }

    #[test]
    fn null_points_are_carried_but_do_not_weigh() {
        let s =
            FiniteMeasureSpace::new(vec!["a", "b", "c"], vec![rat(1, 2), rat(1, 2), rat_int(0)])
                .unwrap();
        assert_eq!(s.support(), vec![0, 1]);
        assert!(s.is_null(2));
        let f = vec![rat_int(1), rat_int(2), rat_int(77)];
        assert_eq!(s.integrate(&f), rat(3, 2));
        assert_eq!(s.canonicalize(&f)[2], rat_int(0));
        let g = vec![rat_int(1), rat_int(2), rat_int(-3)];
        assert!(s.eq_ae(&f, &g));
    }

    #[test]
    fn pushforward_deposits_fiber_masses() {
        let phi = map_phi();
        assert!(phi.is_measure_preserving());
        let f = vec![rat_int(1), rat_int(3), rat_int(2)];
        let pushed = phi.pushforward(&f);
        assert_eq!(pushed, vec![rat_int(1), rat_int(1)]);
    }

    #[test]
    fn radon_nikodym_divides_masses_componentwise() {
        let x = space_x();
        let nu = vec![rat(1, 2), rat(3, 2)];
        assert_eq!(
            radon_nikodym(&x, &nu).unwrap(),
            vec![rat_int(1), rat_int(3)]
        );
    }

    #[test]
    fn radon_nikodym_rejects_mass_on_null_points() {
        let s =
            FiniteMeasureSpace::new(vec!["a", "b", "c"], vec![rat(1, 2), rat(1, 2), rat_int(0)])
                .unwrap();
        let nu = vec![rat(1, 4), rat(1, 4), rat(1, 8)];
        let err = radon_nikodym(&s, &nu).unwrap_err();
        assert!(matches!(err, Error::NotAbsolutelyContinuous { .. }));
    }

    #[test]
    fn chain_on_two_points_reaches_full_refinement() {
        let chain = build_chain(&space_x(), &[vec!["a".into()]]).unwrap();
        assert_eq!(chain.num_levels(), 2);
        assert_eq!(chain.cells(0).unwrap(), &[vec![0, 1]]);
        assert_eq!(chain.cells(1).unwrap(), &[vec![0], vec![1]]);
        assert!(chain.is_fully_refining());
    }

    #[test]
    fn unseparated_positive_mass_points_block_refinement() {
        let chain = build_chain(&space_y(), &[vec!["y1".into()]]).unwrap();
        assert!(!chain.is_fully_refining());
        let err = chain.require_fully_refining().unwrap_err();
        assert_eq!(
            err,
            Error::ChainNotRefining {
                cell: vec!["y2".into(), "y3".into()]
            }
        );
    }

    #[test]
    fn cells_are_ordered_by_smallest_member() {
        let s = FiniteMeasureSpace::new(
            vec!["p0", "p1", "p2", "p3"],
            vec![rat(1, 4), rat(1, 4), rat(1, 4), rat(1, 4)],
        )
        .unwrap();
        let chain = build_chain(&s, &[vec!["p1".into(), "p3".into()]]).unwrap();
        assert_eq!(chain.cells(1).unwrap(), &[vec![0, 2], vec![1, 3]]);
    }

    #[test]
    fn null_points_ride_along_in_cells() {
        let s =
            FiniteMeasureSpace::new(vec!["a", "b", "c"], vec![rat(1, 2), rat(1, 2), rat_int(0)])
                .unwrap();
        let chain = build_chain(&s, &[vec!["b".into()]]).unwrap();
        assert_eq!(chain.final_cells(), &[vec![0, 2], vec![1]]);
        assert!(chain.is_fully_refining());
    }

    #[test]
    fn unknown_labels_are_reported() {
        let err = build_chain(&space_x(), &[vec!["zz".into()]]).unwrap_err();
        assert_eq!(err, Error::UnknownPoint("zz".into()));
    }
}
