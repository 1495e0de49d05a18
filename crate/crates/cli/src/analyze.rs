use std::path::PathBuf;

use anyhow::{bail, Result};
use serde_json::json;
use tropical_series::hyperarray::DotArray;

use crate::{fmt_pos, read_json, yes_no, Global, Outcome};

#[derive(clap::Args)]
pub struct Args {
    /// Dot array JSON: {"bounds":[..],"dots":[[..],..]}.
    pub array: PathBuf,
}

pub fn run(args: Args, _: &Global) -> Result<Outcome> {
    let a = DotArray::from_json(&read_json(&args.array)?)?;
    if a.is_empty() {
        bail!("{} has no dots", args.array.display());
    }
    Ok(report(&a))
}

pub fn report(a: &DotArray) -> Outcome {
    let axis_ranks = a.axis_ranks().expect("nonempty");
    let rankable = a.rankable().expect("nonempty");
    let ranks = a.rank_array().ok();
    let redundant = a.redundant_positions();
    let closure = a.meet_closure();
    let permutation = a.is_permutation_array();
    let json = json!({
        "array": a.to_json(),
        "axis_ranks": axis_ranks,
        "rankable": rankable.is_some(),
        "rank": rankable,
        "totally_rankable": ranks.is_some(),
        "rank_array": ranks.as_ref().map(|r| r.to_json()),
        "redundant_positions": redundant,
        "permutation_array": permutation,
        "closure": closure.to_json(),
    });
    let mut text = format!("dots:\n{a}");
    let shown: Vec<String> = axis_ranks.iter().map(i32::to_string).collect();
    text += &format!("axis ranks: {}\n", shown.join(" "));
    text += &match rankable {
        Some(r) => format!("rankable: yes (rank {r})\n"),
        None => "rankable: no\n".into(),
    };
    text += &format!("totally rankable: {}\n", yes_no(ranks.is_some()));
    if let Some(r) = &ranks {
        text += &format!("rank array:\n{}", r.render());
    }
    let shown: Vec<String> = redundant.iter().map(|x| fmt_pos(x)).collect();
    text += &format!("redundant positions: {}\n", if shown.is_empty() { "none".into() } else { shown.join(" ") });
    text += &format!("permutation array: {}\n", yes_no(permutation));
    text += &format!("closure:\n{closure}");
    Outcome { json, text, ok: true }
}
