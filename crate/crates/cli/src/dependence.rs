use std::path::PathBuf;

use anyhow::{bail, Result};
use serde_json::json;
use tropical_series::graph::{parse_q, PLFunction, Q};
use tropical_series::module::{
    find_dependence, find_dependence_by_ties, functions_from_json, verify_dependence, SearchRegime,
    DEFAULT_SEARCH_LIMIT,
};

use crate::{read_json, yes_no, Global, Outcome};

#[derive(clap::Args)]
pub struct Args {
    /// Bundle JSON with "graph" and "generators".
    pub bundle: PathBuf,
    /// Comma-separated generator indices; all generators by default.
    #[arg(long, value_delimiter = ',')]
    pub subset: Vec<usize>,
    /// Comma-separated shifts to verify instead of searching.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub shifts: Vec<String>,
    /// Candidate shift vectors tried by the tie search.
    #[arg(long)]
    pub limit: Option<usize>,
}

pub fn run(args: Args, _: &Global) -> Result<Outcome> {
    let (graph, all) = functions_from_json(&read_json(&args.bundle)?)?;
    let subset: Vec<usize> = if args.subset.is_empty() { (0..all.len()).collect() } else { args.subset.clone() };
    if let Some(&i) = subset.iter().find(|&&i| i >= all.len()) {
        bail!("generator {i} out of range; the bundle has {}", all.len());
    }
    if subset.len() < 2 {
        bail!("dependence needs at least two functions");
    }
    let fns: Vec<PLFunction> = subset.iter().map(|&i| all[i].clone()).collect();
    if !args.shifts.is_empty() {
        let shifts = args.shifts.iter().map(|s| parse_q(s)).collect::<Result<Vec<Q>, _>>()?;
        let check = verify_dependence(&fns, &shifts)?;
        let failure = check.failure.as_ref().map(|p| graph.describe_point(p));
        let mut text = format!("shifts verified: {}\n", yes_no(check.holds()));
        if let Some(f) = &failure {
            text += &format!("single minimal branch at {f}\n");
        }
        let json = json!({
            "mode": "verify",
            "subset": subset,
            "shifts": shifts.iter().map(Q::to_string).collect::<Vec<_>>(),
            "holds": check.holds(),
            "failure": failure,
            "cells": check.cells.len(),
        });
        return Ok(Outcome { json, text, ok: check.holds() });
    }
    let search = match args.limit {
        Some(limit) => find_dependence_by_ties(&fns, limit)?,
        None => find_dependence(&fns)?,
    };
    let regime = match search.regime {
        SearchRegime::Pair => "pair",
        SearchRegime::ConstantSlopeStar => "constant-slope star",
        SearchRegime::TieLattice => "tie lattice",
    };
    let found = search.certificate.is_some();
    let mut text = format!("search: {regime}\ndependent: {}\n", yes_no(found));
    match &search.certificate {
        Some(c) => {
            let shown: Vec<String> = c.shifts.iter().map(Q::to_string).collect();
            text += &format!("shifts: {}\n", shown.join(" "));
        }
        None if search.conclusive => text += "independent\n",
        None => text += "no certificate found; independence not proven\n",
    }
    let json = json!({
        "mode": "search",
        "subset": subset,
        "regime": regime,
        "limit": args.limit.unwrap_or(DEFAULT_SEARCH_LIMIT),
        "dependent": found,
        "conclusive": search.conclusive,
        "certificate": search.certificate.as_ref().map(|c| c.to_json()),
    });
    Ok(Outcome { json, text, ok: found })
}
