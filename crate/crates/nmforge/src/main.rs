//! Command-line front end: inspect scenario files and run verification
//! suites over them or over seeded random instances.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use nmforge::bundle::{Exponent, ModuleElement, SectionModule};
use nmforge::doob::{rep, rep_p};
use nmforge::duality::{dual_module, dual_pullback_routes, functional_norm_search};
use nmforge::fiber::{FiberSpace, LpExp};
use nmforge::lifting::{
    compatible_lifting, default_lifting, lift_module, multiplication_morphism,
    verify_compatibility, Lifting,
};
use nmforge::measure::{FiniteMeasureSpace, MeasurableMap, PartitionChain};
use nmforge::pullback::pullback_module;
use nmforge::scalar::{exact_vec, fmt_rational, parse_rational, Rational, Scalar};
use nmforge::scenario::{load_scenario, Scenario};
use nmforge::suite::{run_on_scenario, run_seeded, Report, SuiteConfig, SuiteKind};
use nmforge::weakstar::approximate;
use nmforge::{Error, Result};

#[derive(Parser)]
#[command(name = "nmforge", version, about = "normed module forge", long_about = None)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Tabulate the martingale representative of a function along a chain.
    Rep {
        #[arg(long)]
        scenario: PathBuf,
        /// Name of the function in the scenario.
        #[arg(long)]
        function: String,
        /// Power-mean exponent; plain averages when omitted.
        #[arg(long, value_parser = parse_rational_arg)]
        p: Option<Rational>,
        /// Chain to use when the scenario has several on the same space.
        #[arg(long)]
        chain: Option<String>,
    },
    /// Tabulate the fibers of a pullback module and verify the norm identity.
    Pullback {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        map: Option<String>,
    },
    /// Realize the dual module fiberwise and compare both norm routes.
    Dual {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        module: Option<String>,
        /// Integrability exponent override for the norm comparison.
        #[arg(long, value_parser = parse_rational_arg)]
        p: Option<Rational>,
    },
    /// Compare the two realizations of the dual of a pullback module.
    DualOfPullback {
        #[arg(long)]
        scenario: PathBuf,
        /// Dual section to report; defaults to the unique mapped one.
        #[arg(long)]
        dual: Option<String>,
    },
    /// Inspect a lifting: its atoms, a lifted module, a lifted morphism, or
    /// the pullback compatibility diagram.
    Lift {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum)]
        what: LiftWhat,
        #[arg(long)]
        lifting: Option<String>,
        #[arg(long)]
        module: Option<String>,
        #[arg(long)]
        map: Option<String>,
        /// Multiplier function for `--what morphism`.
        #[arg(long)]
        function: Option<String>,
    },
    /// Approximate a dual section along a chain and report per-level gaps.
    Weakstar {
        #[arg(long)]
        scenario: PathBuf,
        /// Highest chain level to run; the whole chain when omitted.
        #[arg(long)]
        levels: Option<usize>,
        /// Comma-separated section names used as probes; all sections of the
        /// module when omitted.
        #[arg(long)]
        probes: Option<String>,
        /// Norm-integral exponent; conjugate of the module exponent when
        /// omitted.
        #[arg(long, value_parser = parse_rational_arg)]
        exponent: Option<Rational>,
        /// Dual section to approximate; defaults to the unique mapped one.
        #[arg(long)]
        dual: Option<String>,
    },
    /// Run a verification suite; exits zero exactly when every check passes.
    Verify {
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        source: VerifySource,
        #[arg(long, value_parser = parse_rational_arg)]
        p: Option<Rational>,
        #[arg(long, value_parser = parse_rational_arg)]
        exponent: Option<Rational>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct VerifySource {
    /// Run the suite against the objects of a scenario file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Run the suite over a seed range, e.g. 0..100.
    #[arg(long, value_parser = parse_seed_range)]
    seeds: Option<SeedRange>,
}

#[derive(Clone, Copy, ValueEnum)]
enum LiftWhat {
    Atoms,
    Module,
    Morphism,
    Diagram,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy)]
struct SeedRange(u64, u64);

fn parse_seed_range(s: &str) -> std::result::Result<SeedRange, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: u64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
    if a >= b {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok(SeedRange(a, b))
}

fn parse_rational_arg(s: &str) -> std::result::Result<Rational, String> {
    parse_rational(s)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Cmd) -> Result<ExitCode> {
    match cmd {
        Cmd::Rep {
            scenario,
            function,
            p,
            chain,
        } => cmd_rep(
            &load_scenario(&scenario)?,
            &function,
            p.as_ref(),
            chain.as_deref(),
        ),
        Cmd::Pullback {
            scenario,
            module,
            map,
        } => cmd_pullback(
            &load_scenario(&scenario)?,
            module.as_deref(),
            map.as_deref(),
        ),
        Cmd::Dual {
            scenario,
            module,
            p,
        } => cmd_dual(&load_scenario(&scenario)?, module.as_deref(), p),
        Cmd::DualOfPullback { scenario, dual } => {
            cmd_dual_of_pullback(&load_scenario(&scenario)?, dual.as_deref())
        }
        Cmd::Lift {
            scenario,
            what,
            lifting,
            module,
            map,
            function,
        } => cmd_lift(
            &load_scenario(&scenario)?,
            what,
            lifting.as_deref(),
            module.as_deref(),
            map.as_deref(),
            function.as_deref(),
        ),
        Cmd::Weakstar {
            scenario,
            levels,
            probes,
            exponent,
            dual,
        } => cmd_weakstar(
            &load_scenario(&scenario)?,
            levels,
            probes.as_deref(),
            exponent,
            dual.as_deref(),
        ),
        Cmd::Verify {
            suite,
            source,
            p,
            exponent,
            format,
        } => cmd_verify(&suite, source, p, exponent, format),
    }
}

fn describe_fiber(f: &FiberSpace) -> String {
    let lp = |p: &LpExp| match p {
        LpExp::One => "l1",
        LpExp::Two => "l2",
        LpExp::Inf => "linf",
    };
    match f {
        FiberSpace::Lp { p, dim } => format!("{}[{}]", lp(p), dim),
        FiberSpace::WeightedLp { p, weights } => format!(
            "w{}({})",
            lp(p),
            weights
                .iter()
                .map(fmt_rational)
                .collect::<Vec<_>>()
                .join(",")
        ),
        FiberSpace::Polyhedral { functionals, .. } => format!(
            "poly[dim={}, rows={}]",
            functionals.first().map_or(0, Vec::len),
            functionals.len()
        ),
    }
}

fn fmt_vector(v: &[Rational]) -> String {
    format!(
        "({})",
        v.iter().map(fmt_rational).collect::<Vec<_>>().join(", ")
    )
}

fn fmt_scalar(s: &Scalar) -> String {
    s.to_string()
}

fn mapped_dual<'a>(
    sc: &'a Scenario,
    name: Option<&str>,
) -> Result<(&'a str, &'a str, &'a str, &'a ModuleElement)> {
    let mut hits: Vec<(&str, &str, &str, &ModuleElement)> = sc
        .duals
        .iter()
        .filter_map(|(dname, (mname, map, w))| {
            map.as_deref()
                .map(|m| (dname.as_str(), mname.as_str(), m, w))
        })
        .collect();
    if let Some(n) = name {
        hits.retain(|(dname, ..)| *dname == n);
    }
    match hits.len() {
        0 => Err(Error::BadScenario(
            "no dual section is tagged with a map".into(),
        )),
        1 => Ok(hits.remove(0)),
        _ => Err(Error::BadScenario(
            "several mapped dual sections; pick one with --dual".into(),
        )),
    }
}

fn chain_for<'a>(
    sc: &'a Scenario,
    space: &FiniteMeasureSpace,
    name: Option<&'a str>,
) -> Result<&'a PartitionChain> {
    if let Some(n) = name {
        let (_, chain) = Scenario::pick(&sc.chains, Some(n), "chain")?;
        if chain.space() != space {
            return Err(Error::BadScenario(format!(
                "chain {n} lives on a different space"
            )));
        }
        return Ok(chain);
    }
    let mut hits: Vec<&PartitionChain> =
        sc.chains.values().filter(|c| c.space() == space).collect();
    match hits.len() {
        0 => Err(Error::BadScenario("no chain on the required space".into())),
        1 => Ok(hits.remove(0)),
        _ => Err(Error::BadScenario(
            "several chains on that space; pick one with --chain".into(),
        )),
    }
}

fn named_sections<'a>(
    sc: &'a Scenario,
    module: &Arc<SectionModule>,
) -> Vec<(&'a str, ModuleElement)> {
    sc.sections
        .iter()
        .filter_map(|(name, (bundle_name, data))| {
            let bundle = sc.bundles.get(bundle_name)?;
            if Arc::ptr_eq(module.bundle(), bundle) {
                Some((name.as_str(), module.element(data.clone()).ok()?))
            } else {
                None
            }
        })
        .collect()
}

fn cmd_rep(
    sc: &Scenario,
    function: &str,
    p: Option<&Rational>,
    chain_name: Option<&str>,
) -> Result<ExitCode> {
    let (space_name, values) = sc
        .functions
        .get(function)
        .ok_or_else(|| Error::UnknownPoint(format!("function {function}")))?;
    let space = &sc.spaces[space_name];
    let chain = chain_for(sc, space, chain_name)?;
    let fs = exact_vec(values);
    let result = match p {
        Some(p) => rep_p(chain, p, &fs)?,
        None => rep(chain, &fs)?,
    };

    println!(
        "representative of {function} on {space_name} ({} levels)",
        chain.num_levels()
    );
    println!(
        "{:<10} {:>8} {:>12} {:>14}  leb",
        "point", "mass", "f", "rep"
    );
    for i in 0..space.len() {
        println!(
            "{:<10} {:>8} {:>12} {:>14}  {}",
            space.label(i),
            fmt_rational(space.mass(i)),
            fmt_rational(&values[i]),
            fmt_scalar(&result.rep[i]),
            if result.leb_set.contains(&i) { "*" } else { "" }
        );
    }
    println!("stabilization level: {}", result.stabilization_level);
    Ok(ExitCode::SUCCESS)
}

fn cmd_pullback(sc: &Scenario, module: Option<&str>, map: Option<&str>) -> Result<ExitCode> {
    let (mname, module) = Scenario::pick(&sc.modules, module, "module")?;
    let (map_name, map) = match map {
        Some(n) => Scenario::pick(&sc.maps, Some(n), "map")?,
        None => {
            let mut hits: Vec<(&str, &MeasurableMap)> = sc
                .maps
                .iter()
                .filter(|(_, m)| m.target() == module.base())
                .map(|(n, m)| (n.as_str(), m))
                .collect();
            match hits.len() {
                0 => return Err(Error::BadScenario("no map into the module's base".into())),
                1 => hits.remove(0),
                _ => {
                    return Err(Error::BadScenario(
                        "several maps into that base; pick one with --map".into(),
                    ))
                }
            }
        }
    };
    let pb = pullback_module(module, map)?;

    println!(
        "pullback of {mname} along {map_name}: {} points upstairs",
        map.source().len()
    );
    println!("{:<10} {:>8} {:<16} maps-to", "point", "mass", "fiber");
    for y in 0..map.source().len() {
        println!(
            "{:<10} {:>8} {:<16} {}",
            map.source().label(y),
            fmt_rational(map.source().mass(y)),
            describe_fiber(pb.module().bundle().fiber(y)),
            map.target().label(map.apply(y))
        );
    }

    let mut all_ok = true;
    for (name, v) in named_sections(sc, module) {
        let pulled = pb.pull(&v)?;
        let up = pulled.pointwise_norm();
        let down = v.pointwise_norm();
        let ok = map
            .source()
            .support()
            .into_iter()
            .all(|y| up[y] == down[map.apply(y)]);
        all_ok &= ok;
        println!(
            "norm identity for {name}: {}",
            if ok { "exact" } else { "VIOLATED" }
        );
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_dual(sc: &Scenario, module: Option<&str>, p: Option<Rational>) -> Result<ExitCode> {
    let (mname, module) = Scenario::pick(&sc.modules, module, "module")?;
    let module = match p {
        Some(p) => &SectionModule::new(
            Arc::clone(module.bundle()),
            Exponent::Finite(p),
            module.ideal(),
        )?,
        None => module,
    };
    let dual = dual_module(module)?;

    println!(
        "dual module of {mname}: exponent {}",
        match dual.exponent() {
            Exponent::Finite(q) => fmt_rational(q),
            Exponent::Infinity => "inf".to_string(),
        }
    );
    println!("{:<10} {:<16}", "point", "dual fiber");
    for x in 0..module.base().len() {
        println!(
            "{:<10} {:<16}",
            module.base().label(x),
            describe_fiber(dual.bundle().fiber(x))
        );
    }

    let mut all_ok = true;
    let mut reported = false;
    for (dname, (target_mod, map, w)) in &sc.duals {
        if map.is_some() || target_mod != mname {
            continue;
        }
        reported = true;
        let omega = dual.element(w.section().clone())?;
        println!("functional {dname}:");
        println!("{:<10} {:<18} {:>14}", "point", "coefficients", "|w|");
        let norms = omega.pointwise_norm();
        for x in 0..module.base().len() {
            println!(
                "{:<10} {:<18} {:>14}",
                module.base().label(x),
                fmt_vector(omega.value(x)),
                fmt_scalar(&norms[x])
            );
        }
        let closed = omega.module_norm();
        let extra: Vec<ModuleElement> = named_sections(sc, module)
            .into_iter()
            .map(|(_, v)| v)
            .collect();
        let searched = functional_norm_search(module, &omega, &extra)?;
        let ok = searched.eq_tol(&closed, 1e-9);
        all_ok &= ok;
        println!("functional norm, closed form: {}", fmt_scalar(&closed));
        println!("functional norm, search:      {}", fmt_scalar(&searched));
        println!("agreement: {}", if ok { "within 1e-9" } else { "VIOLATED" });
    }
    if !reported {
        println!("no plain dual sections on {mname} in the scenario");
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_dual_of_pullback(sc: &Scenario, dual: Option<&str>) -> Result<ExitCode> {
    let (dname, mname, map_name, w) = mapped_dual(sc, dual)?;
    let module = &sc.modules[mname];
    let map = &sc.maps[map_name];
    let (dual_then_pull, pull_then_dual) = dual_pullback_routes(module, map)?;

    println!("dual of the pullback of {mname} along {map_name}, functional {dname}");
    let fibers_ok = dual_then_pull.module().bundle().fibers() == pull_then_dual.bundle().fibers();
    println!(
        "route fibers identical: {}",
        if fibers_ok { "yes" } else { "NO" }
    );

    let relabeled = pull_then_dual.element(w.section().clone())?;
    let norms = relabeled.pointwise_norm();
    println!("{:<10} {:<18} {:>14}", "point", "functional", "|w|");
    for y in 0..map.source().len() {
        println!(
            "{:<10} {:<18} {:>14}",
            map.source().label(y),
            fmt_vector(relabeled.value(y)),
            fmt_scalar(&norms[y])
        );
    }

    // Canonical representatives via the lifting route: lift, then descend.
    let base_lifting = sc
        .liftings
        .values()
        .find(|l| l.space() == map.target())
        .cloned()
        .unwrap_or_else(|| default_lifting(map.target().clone()));
    let up = compatible_lifting(map, &base_lifting)?;
    let lifted = lift_module(&pull_then_dual, &up)?;
    let through = lifted.quotient(&lifted.lift(&relabeled)?)?;
    let canon_ok = through.section() == relabeled.section();
    println!(
        "canonical representatives identical: {}",
        if canon_ok { "yes" } else { "NO" }
    );
    let ok = fibers_ok && canon_ok;
    println!("isomorphism verdict: {}", if ok { "PASS" } else { "FAIL" });
    Ok(if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn lifting_for<'a>(sc: &'a Scenario, name: Option<&'a str>) -> Result<(&'a str, &'a Lifting)> {
    Scenario::pick(&sc.liftings, name, "lifting")
}

fn module_on<'a>(
    sc: &'a Scenario,
    space: &FiniteMeasureSpace,
    name: Option<&'a str>,
) -> Result<(&'a str, &'a Arc<SectionModule>)> {
    if let Some(n) = name {
        return Scenario::pick(&sc.modules, Some(n), "module");
    }
    let mut hits: Vec<(&str, &Arc<SectionModule>)> = sc
        .modules
        .iter()
        .filter(|(_, m)| m.base() == space)
        .map(|(n, m)| (n.as_str(), m))
        .collect();
    match hits.len() {
        0 => Err(Error::BadScenario("no module over that space".into())),
        1 => Ok(hits.remove(0)),
        _ => Err(Error::BadScenario(
            "several modules over that space; pick one with --module".into(),
        )),
    }
}

fn cmd_lift(
    sc: &Scenario,
    what: LiftWhat,
    lifting: Option<&str>,
    module: Option<&str>,
    map: Option<&str>,
    function: Option<&str>,
) -> Result<ExitCode> {
    match what {
        LiftWhat::Atoms => {
            let (lname, lifting) = lifting_for(sc, lifting)?;
            let space = lifting.space();
            println!("lifting {lname} on a {}-point carrier", space.len());
            println!("{:<10} {:>8} t(point)", "point", "mass");
            for i in 0..space.len() {
                println!(
                    "{:<10} {:>8} {}",
                    space.label(i),
                    fmt_rational(space.mass(i)),
                    space.label(lifting.apply(i))
                );
            }
            println!("atoms:");
            for atom in lifting.atoms() {
                let labels: Vec<&str> = atom.iter().map(|&i| space.label(i)).collect();
                println!("  {{{}}}", labels.join(", "));
            }
            Ok(ExitCode::SUCCESS)
        }
        LiftWhat::Module => {
            let (lname, lifting) = lifting_for(sc, lifting)?;
            let (mname, module) = module_on(sc, lifting.space(), module)?;
            let lifted = lift_module(module, lifting)?;
            println!("module {mname} lifted along {lname}");
            let mut all_ok = true;
            for (sname, v) in named_sections(sc, module) {
                let lv = lifted.lift(&v)?;
                let nv = v.pointwise_norm();
                let nlv = lv.pointwise_norm();
                let norm_ok = (0..module.base().len()).all(|x| nlv[x] == nv[lifting.apply(x)]);
                let round_ok = lifted.quotient(&lv)?.eq_mod(&v);
                all_ok &= norm_ok && round_ok;
                println!("section {sname}:");
                println!("{:<10} {:>14} {:>14}", "point", "|v|", "|lift v|");
                for x in 0..module.base().len() {
                    println!(
                        "{:<10} {:>14} {:>14}",
                        module.base().label(x),
                        fmt_scalar(&nv[x]),
                        fmt_scalar(&nlv[x])
                    );
                }
                println!(
                    "norm identity |lift v| = |v| after retraction: {}",
                    if norm_ok { "exact" } else { "VIOLATED" }
                );
                println!(
                    "quotient round trip: {}",
                    if round_ok { "pass" } else { "FAIL" }
                );
            }
            Ok(if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        LiftWhat::Morphism => {
            let (lname, lifting) = lifting_for(sc, lifting)?;
            let (mname, module) = module_on(sc, lifting.space(), module)?;
            let fname = match function {
                Some(n) => n,
                None => {
                    let mut hits: Vec<&str> = sc
                        .functions
                        .iter()
                        .filter(|(_, (space_name, _))| sc.spaces[space_name] == *lifting.space())
                        .map(|(n, _)| n.as_str())
                        .collect();
                    match hits.len() {
                        0 => {
                            return Err(Error::BadScenario(
                                "no function on the lifting's space".into(),
                            ))
                        }
                        1 => hits.remove(0),
                        _ => {
                            return Err(Error::BadScenario(
                                "several functions; pick one with --function".into(),
                            ))
                        }
                    }
                }
            };
            let g = sc.function_on(lifting.space(), fname)?;
            let t = multiplication_morphism(module, &g)?;
            let lifted = lift_module(module, lifting)?;
            let lt = t.lift(&lifted, &lifted)?;
            let tn = t.pointwise_norm()?;
            let ltn = lt.pointwise_norm()?;
            println!("multiplication morphism by {fname} on {mname}, lifted along {lname}");
            println!("{:<10} {:>14} {:>14}", "point", "|T|", "|lift T|");
            for x in 0..module.base().len() {
                println!(
                    "{:<10} {:>14} {:>14}",
                    module.base().label(x),
                    fmt_scalar(&tn[x]),
                    fmt_scalar(&ltn[x])
                );
            }
            let ok = (0..module.base().len()).all(|x| ltn[x] == tn[lifting.apply(x)]);
            println!(
                "operator norm identity |lift T| = |T| after retraction: {}",
                if ok { "exact" } else { "VIOLATED" }
            );
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        LiftWhat::Diagram => {
            let (map_name, map) = Scenario::pick(&sc.maps, map, "map")?;
            let base = sc
                .liftings
                .values()
                .find(|l| l.space() == map.target())
                .ok_or_else(|| Error::BadScenario("no lifting on the map's target".into()))?;
            let up = compatible_lifting(map, base)?;
            println!("compatible lifting upstairs of {map_name}:");
            println!("{:<10} t(point)", "point");
            for y in 0..map.source().len() {
                println!(
                    "{:<10} {}",
                    map.source().label(y),
                    map.source().label(up.apply(y))
                );
            }
            verify_compatibility(map, &up, base)?;
            println!("set compatibility: verified");

            let mut all_ok = true;
            for (mname, module) in &sc.modules {
                if module.base() != map.target() {
                    continue;
                }
                for (sname, v) in named_sections(sc, module) {
                    let lifted_down = lift_module(module, base)?;
                    let lv = lifted_down.lift(&v)?;
                    let pb_lifted = pullback_module(lifted_down.module(), map)?;
                    let route_a = pb_lifted.pull(&lv)?;
                    let pb = pullback_module(module, map)?;
                    let lifted_up = lift_module(pb.module(), &up)?;
                    let route_b = lifted_up.lift(&pb.pull(&v)?)?;
                    let ok = route_a.section() == route_b.section();
                    all_ok &= ok;
                    println!(
                        "pull-then-lift equals lift-then-pull for {mname}/{sname}: {}",
                        if ok { "yes" } else { "NO" }
                    );
                }
            }
            Ok(if all_ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn cmd_weakstar(
    sc: &Scenario,
    levels: Option<usize>,
    probes: Option<&str>,
    exponent: Option<Rational>,
    dual: Option<&str>,
) -> Result<ExitCode> {
    let (dname, mname, map_name, w) = mapped_dual(sc, dual)?;
    let module = &sc.modules[mname];
    let map = &sc.maps[map_name];
    let pb = pullback_module(module, map)?;
    let full_chain = chain_for(sc, map.source(), None)?;

    let chain_storage;
    let chain = match levels {
        Some(k) if k + 1 < full_chain.num_levels() => {
            chain_storage = PartitionChain::from_indices(
                map.source().clone(),
                full_chain.generators()[..k].to_vec(),
            );
            &chain_storage
        }
        Some(k) if k >= full_chain.num_levels() => {
            return Err(Error::LevelOutOfRange {
                level: k,
                len: full_chain.num_levels(),
            });
        }
        _ => full_chain,
    };

    let sections = named_sections(sc, module);
    let chosen: Vec<(&str, ModuleElement)> = match probes {
        Some(list) => {
            let mut out = Vec::new();
            for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let v = sections
                    .iter()
                    .find(|(n, _)| *n == name)
                    .ok_or_else(|| Error::UnknownPoint(format!("section {name}")))?;
                out.push((v.0, pb.pull(&v.1)?));
            }
            out
        }
        None => sections
            .iter()
            .map(|(n, v)| Ok((*n, pb.pull(v)?)))
            .collect::<Result<_>>()?,
    };
    let probe_elements: Vec<ModuleElement> = chosen.iter().map(|(_, v)| v.clone()).collect();

    let q = match module.exponent() {
        Exponent::Finite(p) => p / (p - Rational::from_integer(1.into())),
        Exponent::Infinity => Rational::from_integer(1.into()),
    };
    let e = exponent.unwrap_or(q);
    let report = approximate(&pb, w, chain, &probe_elements, &e)?;

    println!(
        "approximation of {dname} along the chain on the {}-point carrier, exponent {}",
        map.source().len(),
        fmt_rational(&e)
    );
    print!("{:<6} {:>18} {:>8}", "level", "norm-integral", "bound");
    for (name, _) in &chosen {
        print!(" {:>12}", format!("gap[{name}]"));
    }
    println!();
    let mut bound_ok = true;
    for level in &report.levels {
        let within = level
            .norm_integral
            .le_tol(&report.target_norm_integral, 1e-9);
        bound_ok &= within;
        print!(
            "{:<6} {:>18} {:>8}",
            level.level,
            fmt_scalar(&level.norm_integral),
            if within { "ok" } else { "OVER" }
        );
        for gap in &level.probe_gaps {
            print!(" {:>12}", fmt_rational(gap));
        }
        println!();
    }
    println!(
        "target norm-integral: {}",
        fmt_scalar(&report.target_norm_integral)
    );
    let last = report.levels.last().expect("chains have a base level");
    let reached = last.approx.eq_mod(w);
    println!(
        "final approximant equals the section: {}",
        if reached { "yes" } else { "no" }
    );
    Ok(if bound_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn cmd_verify(
    suite: &str,
    source: VerifySource,
    p: Option<Rational>,
    exponent: Option<Rational>,
    format: Format,
) -> Result<ExitCode> {
    let kind: SuiteKind = suite.parse()?;
    let mut cfg = SuiteConfig::default();
    if let Some(p) = p {
        cfg.p = p;
    }
    cfg.exponent = exponent;

    let reports: Vec<Report> = match (&source.scenario, source.seeds) {
        (Some(path), None) => run_on_scenario(kind, &load_scenario(path)?, &cfg)?,
        (None, Some(SeedRange(a, b))) => run_seeded(kind, a..b, &cfg),
        _ => unreachable!("clap enforces exactly one source"),
    };

    let all_ok = reports.iter().all(Report::passed);
    match format {
        Format::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&reports).expect("reports serialize")
            );
        }
        Format::Text => {
            for report in &reports {
                for check in &report.checks {
                    println!(
                        "[{}] {}::{}  {}",
                        if check.passed { "PASS" } else { "FAIL" },
                        report.suite,
                        check.name,
                        check.detail
                    );
                }
            }
            let total: usize = reports.iter().map(|r| r.checks.len()).sum();
            let passed: usize = reports
                .iter()
                .map(|r| r.checks.iter().filter(|c| c.passed).count())
                .sum();
            println!("summary: {passed}/{total} checks passed");
        }
    }
    Ok(if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
