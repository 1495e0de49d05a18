use anyhow::{bail, Result};
use serde_json::json;
use tropical_series::hyperarray::PermutationArray;
use tropical_series::properties::{
    billey_vakil_counterexample, billey_vakil_witness, check_p4_for_subset, replay_failure, P4Checker,
};

use crate::{fmt_pos, yes_no, Global, Outcome};

const MAX_STEPS: u8 = 2;

#[derive(clap::Args)]
pub struct Args {
    /// Times to duplicate the last coordinate.
    #[arg(long, default_value_t = 0)]
    pub extend_dim: u8,
    /// Times to add an apex, applied after the dimension extensions.
    #[arg(long, default_value_t = 0)]
    pub extend_rank: u8,
}

pub fn run(args: Args, _: &Global) -> Result<Outcome> {
    if args.extend_dim > MAX_STEPS || args.extend_rank > MAX_STEPS {
        bail!("at most {MAX_STEPS} extensions of each kind");
    }
    let mut stages = vec![("base".to_string(), billey_vakil_counterexample())];
    for k in 1..=args.extend_dim {
        let next = stages.last().expect("base").1.extend_dimension()?;
        stages.push((format!("dimension +{k}"), next));
    }
    for k in 1..=args.extend_rank {
        let next = stages.last().expect("base").1.extend_rank()?;
        stages.push((format!("rank +{k}"), next));
    }
    let mut all_ok = true;
    let mut entries = Vec::new();
    let mut text = String::new();
    for (name, p) in &stages {
        let (entry, stage_text, ok) = transcript(name, p);
        all_ok &= ok;
        entries.push(entry);
        text += &stage_text;
    }
    let a = billey_vakil_witness();
    let base_closure = stages[0].1.redundant_closure();
    let a_extends = check_p4_for_subset(&base_closure, &a);
    all_ok &= !a_extends;
    let shown: Vec<String> = a.iter().map(|x| fmt_pos(x)).collect();
    text += &format!("A = {} extends to a valid [2]^4 subarray: {}\n", shown.join(" "), yes_no(a_extends));
    let json = json!({
        "stages": entries,
        "witness_a": a,
        "witness_a_extends": a_extends,
        "verified": all_ok,
    });
    Ok(Outcome { json, text, ok: all_ok })
}

fn transcript(name: &str, p: &PermutationArray) -> (serde_json::Value, String, bool) {
    let closure = p.redundant_closure();
    let permutation = p.array().is_permutation_array();
    let report = P4Checker::new().check(&closure, p.rank());
    let replayed = replay_failure(&closure, p.rank(), &report).unwrap_or(false);
    let ok = permutation && !report.verdict && replayed;
    let mut text = format!(
        "{name}: rank {}, dimension {}, {} dots\n  permutation array: {}\n  closure satisfies P4: {}\n",
        p.rank(),
        p.dim(),
        p.array().len(),
        yes_no(permutation),
        yes_no(report.verdict)
    );
    if let Some(w) = &report.witness {
        let elems: Vec<String> = w.elements.iter().map(|x| fmt_pos(x)).collect();
        text += &format!("  witness: {} (replayed: {})\n", elems.join(" "), yes_no(replayed));
    }
    let json = json!({
        "stage": name,
        "rank": p.rank(),
        "dim": p.dim(),
        "array": p.array().to_json(),
        "permutation_array": permutation,
        "p4": serde_json::to_value(&report).expect("plain data"),
        "replayed": replayed,
        "verified": ok,
    });
    (json, text, ok)
}
