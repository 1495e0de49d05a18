use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use tropical_series::graph::{parse_q, q, Divisor, Q};
use tropical_series::hyperarray::{DotArray, PermutationArray};
use tropical_series::realization::{bnrp_rank2_witness, realize_on_star, StarRealization};

use crate::{read_json, yes_no, Global, Outcome};

#[derive(clap::Args)]
pub struct Args {
    /// Permutation array JSON: {"bounds":[..],"dots":[[..],..]}.
    pub array: PathBuf,
    /// Length of every edge of the star, as an integer or fraction.
    #[arg(long, default_value = "1")]
    pub length: String,
    /// Random divisors `v1 + v2` checked for BNRP when the rank is 2.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

pub fn run(args: Args, g: &Global) -> Result<Outcome> {
    let a = DotArray::from_json(&read_json(&args.array)?)?;
    let p = PermutationArray::new(a).with_context(|| format!("{} is not a permutation array", args.array.display()))?;
    let length = parse_q(&args.length)?;
    let real = realize_on_star(&p, length.clone())?;
    let center = real.module().local_array_at(&real.center())?;
    let closure = p.redundant_closure();
    let matches = center == closure;
    let dependence = real.check_generator_dependence();
    let mut ok = dependence.verdict && (matches || !p.is_sparse());
    let mut text = format!(
        "star with {} edges of length {length}, s = {}\ncenter local array:\n{center}equals the closure: {}\ngenerator subsets of size {} dependent: {}\n",
        p.dim(),
        real.s(),
        yes_no(matches),
        p.rank() + 2,
        yes_no(dependence.verdict)
    );
    let mut bnrp = serde_json::Value::Null;
    if p.rank() == 2 {
        let (summary, passed) = sample_bnrp(&real, &length, args.samples, g.seed)?;
        ok &= passed;
        text += &format!(
            "BNRP for rank 2: {} of {} divisors\n",
            summary["passed"], args.samples
        );
        bnrp = summary;
    }
    let json = json!({
        "bundle": real.to_json(),
        "center_local_array": center.to_json(),
        "center_equals_closure": matches,
        "sparse": p.is_sparse(),
        "generator_dependence": serde_json::to_value(&dependence).expect("plain data"),
        "bnrp_rank2": bnrp,
        "verified": ok,
    });
    Ok(Outcome { json, text, ok })
}

/// Divisors `v1 + v2` at points whose distance from the center is a
/// multiple of `length / 4`.
fn sample_bnrp(real: &StarRealization, length: &Q, samples: usize, seed: u64) -> Result<(serde_json::Value, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = real.array().dim();
    let step = length / q(4);
    let mut cases: BTreeMap<String, usize> = BTreeMap::new();
    let mut failures = Vec::new();
    for _ in 0..samples {
        let mut pick = || -> Result<_> {
            let e = rng.gen_range(0..d);
            let t = &step * q(rng.gen_range(0..=4));
            Ok(real.point(e, t)?)
        };
        let (v1, v2) = (pick()?, pick()?);
        let w = bnrp_rank2_witness(real, &v1, &v2)?;
        let e = Divisor::from_points([(v1.clone(), 1), (v2.clone(), 1)]);
        *cases.entry(w.case.to_string()).or_default() += 1;
        if !real.module().check_bnrp(&w.function, &e) {
            let graph = real.graph();
            failures.push(json!({
                "v1": graph.describe_point(&v1),
                "v2": graph.describe_point(&v2),
                "case": w.case.to_string(),
            }));
        }
    }
    let passed = failures.is_empty();
    let summary = json!({
        "samples": samples,
        "passed": samples - failures.len(),
        "cases": cases,
        "failures": failures,
    });
    Ok((summary, passed))
}
