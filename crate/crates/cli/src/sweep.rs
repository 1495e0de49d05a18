use std::cell::RefCell;

use anyhow::{bail, Result};
use serde_json::{json, Value};
use tropical_series::hyperarray::{
    for_each_permutation_array, par_map_permutation_arrays, Budget, DotArray, PermutationArray,
};
use tropical_series::properties::{
    billey_vakil_counterexample, check_p1, check_p2, check_p2_prime, check_p3, replay_failure, P4Checker, Property,
    PropertyReport,
};

use crate::{Global, Outcome};

const ALL: [Property; 5] = [Property::P1, Property::P2, Property::P2Prime, Property::P3, Property::P4];

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, short)]
    pub rank: u8,
    #[arg(long, short)]
    pub dim: usize,
    /// Comma-separated subset of P1,P2,P2',P3,P4.
    #[arg(long, value_delimiter = ',', value_parser = parse_property)]
    pub properties: Vec<Property>,
    /// Check the packaged counterexample family of this shape instead of
    /// enumerating.
    #[arg(long)]
    pub fixtures: bool,
    /// Failures listed in the report; all are counted.
    #[arg(long, default_value_t = 20)]
    pub max_failures: usize,
}

fn parse_property(s: &str) -> Result<Property, String> {
    match s.trim().to_ascii_uppercase().as_str() {
        "P1" => Ok(Property::P1),
        "P2" => Ok(Property::P2),
        "P2'" | "P2PRIME" => Ok(Property::P2Prime),
        "P3" => Ok(Property::P3),
        "P4" => Ok(Property::P4),
        _ => Err(format!("unknown property `{s}`; expected P1, P2, P2', P3 or P4")),
    }
}

fn check(m: &DotArray, r: u8, props: &[Property], p4: &mut P4Checker) -> Vec<PropertyReport> {
    props
        .iter()
        .map(|p| match p {
            Property::P1 => check_p1(m),
            Property::P2 => check_p2(m, r),
            Property::P2Prime => check_p2_prime(m, r),
            Property::P3 => check_p3(m, r),
            Property::P4 => p4.check(m, r),
        })
        .collect()
}

fn fixture_family() -> Vec<PermutationArray> {
    let base = billey_vakil_counterexample();
    let dim = base.extend_dimension().expect("the counterexample is an antichain");
    let rank = base.extend_rank().expect("the apex extends");
    vec![base, dim, rank]
}

thread_local! {
    static CHECKER: RefCell<P4Checker> = RefCell::new(P4Checker::new());
}

pub fn run(args: Args, g: &Global) -> Result<Outcome> {
    let props = if args.properties.is_empty() { ALL.to_vec() } else { args.properties.clone() };
    let (r, d) = (args.rank, args.dim);
    let budget = g.budget.map_or(Budget::Default, Budget::MaxPositions);
    let results: Vec<(DotArray, Vec<PropertyReport>)> = if args.fixtures {
        let mut p4 = P4Checker::new();
        fixture_family()
            .into_iter()
            .filter(|p| (p.rank(), p.dim()) == (r, d))
            .map(|p| {
                let m = p.redundant_closure();
                let reports = check(&m, r, &props, &mut p4);
                (p.into_array(), reports)
            })
            .collect()
    } else if g.jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(g.jobs).build()?;
        pool.install(|| {
            par_map_permutation_arrays(r, d, budget, |a| {
                let reports = CHECKER.with(|c| check(&a.meet_closure(), r, &props, &mut c.borrow_mut()));
                (a, reports)
            })
        })?
    } else {
        let mut p4 = P4Checker::new();
        let mut out = Vec::new();
        for_each_permutation_array(r, d, budget, |a| {
            let reports = check(&a.meet_closure(), r, &props, &mut p4);
            out.push((a, reports));
        })?;
        out
    };
    if args.fixtures && results.is_empty() {
        bail!("no packaged fixture has rank {r} and dimension {d}; shapes are (3,4), (3,5), (4,4)");
    }
    summarize(r, d, args.fixtures, &props, results, args.max_failures)
}

fn summarize(
    r: u8,
    d: usize,
    fixtures: bool,
    props: &[Property],
    results: Vec<(DotArray, Vec<PropertyReport>)>,
    max_failures: usize,
) -> Result<Outcome> {
    let mut passed = vec![0usize; props.len()];
    let mut failing = Vec::new();
    let mut failed_arrays = 0usize;
    for (a, reports) in &results {
        for (k, rep) in reports.iter().enumerate() {
            passed[k] += rep.verdict as usize;
        }
        if reports.iter().any(|rep| !rep.verdict) {
            failed_arrays += 1;
            if failing.len() < max_failures {
                failing.push((a, reports));
            }
        }
    }
    let n = results.len();
    let mut counts = serde_json::Map::new();
    let mut text = format!(
        "rank {r}, dimension {d}, {}: {n} arrays\n",
        if fixtures { "packaged fixtures" } else { "enumeration" }
    );
    for (p, &ok) in props.iter().zip(&passed) {
        counts.insert(p.to_string(), json!({ "passed": ok, "failed": n - ok }));
        text += &format!("{p}: {ok} passed, {} failed\n", n - ok);
    }
    let mut listed = Vec::new();
    for (a, reports) in failing {
        let closure = a.meet_closure();
        let bad: Vec<&PropertyReport> = reports.iter().filter(|rep| !rep.verdict).collect();
        let replayed = bad.iter().all(|rep| replay_failure(&closure, r, rep).unwrap_or(false));
        text += &format!("failing array (witness replayed: {}):\n{a}", crate::yes_no(replayed));
        for rep in &bad {
            if let Some(w) = &rep.witness {
                let elems: Vec<String> = w.elements.iter().map(|x| crate::fmt_pos(x)).collect();
                text += &format!("  {}: {} [{}]\n", rep.property, w.note, elems.join(" "));
            }
        }
        listed.push(json!({
            "array": a.to_json(),
            "reports": bad.iter().map(|rep| serde_json::to_value(rep).expect("plain data")).collect::<Vec<Value>>(),
            "replayed": replayed,
        }));
    }
    let json = json!({
        "rank": r,
        "dim": d,
        "source": if fixtures { "fixtures" } else { "enumeration" },
        "arrays": n,
        "properties": counts,
        "failed_arrays": failed_arrays,
        "failures": listed,
    });
    Ok(Outcome { json, text, ok: failed_arrays == 0 })
}
