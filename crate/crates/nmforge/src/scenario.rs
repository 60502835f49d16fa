//! Scenario files: named spaces, maps, chains, bundles, modules, functions,
//! liftings, and dual sections, loaded from JSON into resolved objects.
//!
//! The grammar is strict: unknown fields are rejected, every cross-reference
//! must name an object defined in the same file, and all numbers are
//! rationals written as strings (`"3"`, `"-1/2"`). The full grammar is
//! documented in the repository README.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Deserialize;

use crate::bundle::{Exponent, ModuleElement, Section, SectionModule, SigmaIdeal, StrongBundle};
use crate::duality::dual_module;
use crate::error::{Error, Result};
use crate::fiber::{FiberSpace, LpExp};
use crate::lifting::{make_lifting, Lifting};
use crate::measure::{build_chain, FiniteMeasureSpace, MeasurableMap, PartitionChain};
use crate::pullback::pullback_module;
use crate::scalar::{parse_rational, Rational};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    space: BTreeMap<String, SpaceSpec>,
    #[serde(default)]
    map: BTreeMap<String, MapSpec>,
    #[serde(default)]
    chain: BTreeMap<String, ChainSpec>,
    #[serde(default)]
    bundle: BTreeMap<String, BundleSpec>,
    #[serde(default)]
    module: BTreeMap<String, ModuleSpec>,
    #[serde(default)]
    function: BTreeMap<String, FunctionSpec>,
    #[serde(default)]
    lifting: BTreeMap<String, LiftingSpec>,
    #[serde(default)]
    dual: BTreeMap<String, DualSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceSpec {
    points: Vec<String>,
    weights: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapSpec {
    source: String,
    target: String,
    assign: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChainSpec {
    space: String,
    generators: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum FiberSpec {
    #[serde(rename = "lp")]
    Lp { p: String, dim: usize },
    #[serde(rename = "wlp")]
    WeightedLp { p: String, weights: Vec<String> },
    #[serde(rename = "poly")]
    Poly { functionals: Vec<Vec<String>> },
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum FibersField {
    Shared(FiberSpec),
    PerPoint(Vec<FiberSpec>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleSpec {
    space: String,
    fibers: FibersField,
    #[serde(default)]
    sections: BTreeMap<String, Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModuleSpec {
    bundle: String,
    exponent: String,
    #[serde(default = "default_ideal")]
    ideal: String,
}

fn default_ideal() -> String {
    "null".to_string()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctionSpec {
    space: String,
    values: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiftingSpec {
    space: String,
    #[serde(default)]
    retraction: BTreeMap<String, String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualSpec {
    module: String,
    /// When set, the section is a dual section of the pullback of `module`
    /// along this map rather than of `module` itself.
    #[serde(default)]
    map: Option<String>,
    values: Vec<Vec<String>>,
}

/// A fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub spaces: BTreeMap<String, FiniteMeasureSpace>,
    pub maps: BTreeMap<String, MeasurableMap>,
    pub chains: BTreeMap<String, PartitionChain>,
    pub bundles: BTreeMap<String, Arc<StrongBundle>>,
    /// Named sections, tagged with the bundle they belong to.
    pub sections: BTreeMap<String, (String, Section)>,
    pub modules: BTreeMap<String, Arc<SectionModule>>,
    /// Named functions, tagged with the space they live on.
    pub functions: BTreeMap<String, (String, Vec<Rational>)>,
    pub liftings: BTreeMap<String, Lifting>,
    /// Named dual sections, tagged with (module name, optional map name).
    pub duals: BTreeMap<String, (String, Option<String>, ModuleElement)>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadScenario(msg.into())
}

fn rational(s: &str) -> Result<Rational> {
    parse_rational(s).map_err(bad)
}

fn rational_vec(strings: &[String]) -> Result<Vec<Rational>> {
    strings.iter().map(|s| rational(s)).collect()
}

fn rational_rows(rows: &[Vec<String>]) -> Result<Vec<Vec<Rational>>> {
    rows.iter().map(|row| rational_vec(row)).collect()
}

fn lp_exp(s: &str) -> Result<LpExp> {
    match s {
        "1" => Ok(LpExp::One),
        "2" => Ok(LpExp::Two),
        "inf" => Ok(LpExp::Inf),
        other => Err(bad(format!(
            "fiber exponent '{other}' is not one of 1, 2, inf"
        ))),
    }
}

fn resolve_fiber(spec: &FiberSpec) -> Result<FiberSpace> {
    match spec {
        FiberSpec::Lp { p, dim } => Ok(FiberSpace::lp(lp_exp(p)?, *dim)),
        FiberSpec::WeightedLp { p, weights } => {
            FiberSpace::weighted(lp_exp(p)?, rational_vec(weights)?)
        }
        FiberSpec::Poly { functionals } => FiberSpace::polyhedral(rational_rows(functionals)?),
    }
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, name: &str, kind: &str) -> Result<&'a T> {
    map.get(name)
        .ok_or_else(|| bad(format!("{kind} '{name}' is not defined in the scenario")))
}

/// Parse a scenario document from JSON text.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| bad(format!("scenario JSON: {e}")))?;

    let mut spaces = BTreeMap::new();
    for (name, spec) in &file.space {
        if spec.points.len() != spec.weights.len() {
            return Err(bad(format!(
                "space '{name}' has {} points but {} weights",
                spec.points.len(),
                spec.weights.len()
            )));
        }
        let space = FiniteMeasureSpace::new(spec.points.clone(), rational_vec(&spec.weights)?)?;
        spaces.insert(name.clone(), space);
    }

    let mut maps = BTreeMap::new();
    for (name, spec) in &file.map {
        let source = lookup(&spaces, &spec.source, "space")?.clone();
        let target = lookup(&spaces, &spec.target, "space")?.clone();
        maps.insert(
            name.clone(),
            MeasurableMap::new(source, target, &spec.assign)?,
        );
    }

    let mut chains = BTreeMap::new();
    for (name, spec) in &file.chain {
        let space = lookup(&spaces, &spec.space, "space")?;
        chains.insert(name.clone(), build_chain(space, &spec.generators)?);
    }

    let mut bundles = BTreeMap::new();
    let mut sections = BTreeMap::new();
    for (name, spec) in &file.bundle {
        let space = lookup(&spaces, &spec.space, "space")?.clone();
        let fibers: Vec<FiberSpace> = match &spec.fibers {
            FibersField::Shared(f) => {
                let fiber = resolve_fiber(f)?;
                vec![fiber; space.len()]
            }
            FibersField::PerPoint(list) => {
                if list.len() != space.len() {
                    return Err(bad(format!(
                        "bundle '{name}' lists {} fibers for {} points",
                        list.len(),
                        space.len()
                    )));
                }
                list.iter().map(resolve_fiber).collect::<Result<_>>()?
            }
        };
        let mut test_sections = Vec::new();
        for (sname, rows) in &spec.sections {
            let section = Section::new(rational_rows(rows)?);
            test_sections.push(section.clone());
            if sections
                .insert(sname.clone(), (name.clone(), section))
                .is_some()
            {
                return Err(bad(format!("section '{sname}' is defined twice")));
            }
        }
        let bundle = Arc::new(StrongBundle::new(space, fibers, test_sections)?);
        bundles.insert(name.clone(), bundle);
    }

    let mut modules = BTreeMap::new();
    for (name, spec) in &file.module {
        let bundle = lookup(&bundles, &spec.bundle, "bundle")?;
        let exponent = match spec.exponent.as_str() {
            "inf" => Exponent::Infinity,
            other => Exponent::Finite(rational(other)?),
        };
        let ideal = match spec.ideal.as_str() {
            "null" => SigmaIdeal::Null,
            "trivial" => SigmaIdeal::Trivial,
            other => return Err(bad(format!("ideal '{other}' is not 'null' or 'trivial'"))),
        };
        modules.insert(
            name.clone(),
            SectionModule::new(Arc::clone(bundle), exponent, ideal)?,
        );
    }

    let mut functions = BTreeMap::new();
    for (name, spec) in &file.function {
        let space = lookup(&spaces, &spec.space, "space")?;
        let values = rational_vec(&spec.values)?;
        if values.len() != space.len() {
            return Err(bad(format!(
                "function '{name}' has {} values on a {}-point space",
                values.len(),
                space.len()
            )));
        }
        functions.insert(name.clone(), (spec.space.clone(), values));
    }

    let mut liftings = BTreeMap::new();
    for (name, spec) in &file.lifting {
        let space = lookup(&spaces, &spec.space, "space")?.clone();
        let anchor = space.support()[0];
        let mut retraction: Vec<usize> = (0..space.len())
            .map(|i| if space.is_null(i) { anchor } else { i })
            .collect();
        for (from, to) in &spec.retraction {
            let i = space.index_of(from)?;
            retraction[i] = space.index_of(to)?;
        }
        liftings.insert(name.clone(), make_lifting(space, retraction)?);
    }

    let mut duals = BTreeMap::new();
    for (name, spec) in &file.dual {
        let module = lookup(&modules, &spec.module, "module")?;
        let host = match &spec.map {
            None => dual_module(module)?,
            Some(map_name) => {
                let map = lookup(&maps, map_name, "map")?;
                dual_module(pullback_module(module, map)?.module())?
            }
        };
        let element = host.element(Section::new(rational_rows(&spec.values)?))?;
        duals.insert(
            name.clone(),
            (spec.module.clone(), spec.map.clone(), element),
        );
    }

    Ok(Scenario {
        spaces,
        maps,
        chains,
        bundles,
        sections,
        modules,
        functions,
        liftings,
        duals,
    })
}

/// Load a scenario from a file path.
pub fn load_scenario(path: &std::path::Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text)
}

impl Scenario {
    /// Resolve an optional name against a one-entry collection: an explicit
    /// name must exist, and a missing name is allowed only when the choice
    /// is unambiguous.
    pub fn pick<'a, T>(
        collection: &'a BTreeMap<String, T>,
        name: Option<&'a str>,
        kind: &str,
    ) -> Result<(&'a str, &'a T)> {
        match name {
            Some(n) => {
                let v = lookup(collection, n, kind)?;
                Ok((n, v))
            }
            None => {
                if collection.len() == 1 {
                    let (k, v) = collection.iter().next().expect("checked length");
                    Ok((k.as_str(), v))
                } else {
                    Err(bad(format!(
                        "scenario defines {} {kind}s; pass the name explicitly",
                        collection.len()
                    )))
                }
            }
        }
    }

    /// The named section as an element of the named module. The module must
    /// be built on the bundle the section belongs to.
    pub fn section_element(&self, module: &str, section: &str) -> Result<ModuleElement> {
        let m = lookup(&self.modules, module, "module")?;
        let (bundle_name, data) = lookup(&self.sections, section, "section")?;
        let bundle = lookup(&self.bundles, bundle_name, "bundle")?;
        if !Arc::ptr_eq(m.bundle(), bundle) {
            return Err(bad(format!(
                "section '{section}' belongs to bundle '{bundle_name}', not to module '{module}'"
            )));
        }
        m.element(data.clone())
    }

    /// The named function, checked to live on the given space.
    pub fn function_on(&self, space: &FiniteMeasureSpace, name: &str) -> Result<Vec<Rational>> {
        let (space_name, values) = lookup(&self.functions, name, "function")?;
        let host = lookup(&self.spaces, space_name, "space")?;
        if host != space {
            return Err(bad(format!("function '{name}' lives on '{space_name}'")));
        }
        Ok(values.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    const CANONICAL: &str = r#"{
        "space": {
            "X": {"points": ["a", "b"], "weights": ["1/2", "1/2"]},
            "Y": {"points": ["y1", "y2", "y3"], "weights": ["1/4", "1/4", "1/2"]}
        },
        "map": {
            "phi": {"source": "Y", "target": "X",
                    "assign": {"y1": "a", "y2": "a", "y3": "b"}}
        },
        "chain": {
            "CX": {"space": "X", "generators": [["a"]]},
            "CY": {"space": "Y", "generators": [["y1"], ["y2"]]}
        },
        "bundle": {
            "BX": {"space": "X", "fibers": {"kind": "lp", "p": "1", "dim": 2},
                   "sections": {"v": [["1", "0"], ["2", "2"]],
                                "w": [["0", "1"], ["1", "0"]]}}
        },
        "module": {
            "M": {"bundle": "BX", "exponent": "2", "ideal": "null"}
        },
        "function": {
            "f": {"space": "X", "values": ["1", "3"]}
        },
        "dual": {
            "omega": {"module": "M", "values": [["1", "0"], ["1", "1"]]},
            "L": {"module": "M", "map": "phi",
                  "values": [["1", "0"], ["0", "1"], ["1", "1"]]}
        }
    }"#;

    #[test]
    fn canonical_scenario_resolves() {
        let sc = parse_scenario(CANONICAL).unwrap();
        assert_eq!(sc.spaces["X"].mass(0), &rat(1, 2));
        assert!(sc.maps["phi"].is_measure_preserving());
        assert!(sc.chains["CX"].is_fully_refining());
        assert!(sc.chains["CY"].is_fully_refining());
        let v = sc.section_element("M", "v").unwrap();
        assert_eq!(v.value(1), &[rat_int(2), rat_int(2)]);
        let (_, f) = &sc.functions["f"];
        assert_eq!(f, &vec![rat_int(1), rat_int(3)]);
        let (_, map, l) = &sc.duals["L"];
        assert_eq!(map.as_deref(), Some("phi"));
        assert_eq!(l.module().base().len(), 3);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse_scenario(r#"{"space": {"X": {"points": [], "weights": [], "extra": 1}}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::BadScenario(msg) if msg.contains("extra")));
    }

    #[test]
    fn dangling_references_are_named() {
        let err = parse_scenario(r#"{"chain": {"C": {"space": "nowhere", "generators": []}}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::BadScenario(msg) if msg.contains("nowhere")));
    }

    #[test]
    fn malformed_rationals_are_rejected() {
        let err = parse_scenario(r#"{"space": {"X": {"points": ["a"], "weights": ["one half"]}}}"#)
            .unwrap_err();
        assert!(matches!(err, Error::BadScenario(msg) if msg.contains("one half")));
    }

    #[test]
    fn picking_is_unambiguous_or_named() {
        let sc = parse_scenario(CANONICAL).unwrap();
        let (name, _) = Scenario::pick(&sc.maps, None, "map").unwrap();
        assert_eq!(name, "phi");
        assert!(Scenario::pick(&sc.chains, None, "chain").is_err());
        let (name, _) = Scenario::pick(&sc.chains, Some("CY"), "chain").unwrap();
        assert_eq!(name, "CY");
    }

    #[test]
    fn lifting_defaults_send_nulls_to_the_anchor() {
        let sc = parse_scenario(
            r#"{
            "space": {"X": {"points": ["a", "b", "c"], "weights": ["1/2", "1/2", "0"]}},
            "lifting": {"t": {"space": "X"}, "u": {"space": "X", "retraction": {"c": "b"}}}
        }"#,
        )
        .unwrap();
        assert_eq!(sc.liftings["t"].retraction(), &[0, 1, 0]);
        assert_eq!(sc.liftings["u"].retraction(), &[0, 1, 1]);
    }
}
