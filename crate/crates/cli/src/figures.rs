use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use serde_json::json;
use tropical_series::fixtures::*;
use tropical_series::graph::{GraphPoint, TangentDirection};
use tropical_series::hyperarray::DotArray;
use tropical_series::module::TropicalModule;
use tropical_series::properties::{check_p1, check_p2, check_p3, check_p4};

use crate::{fmt_pos, yes_no, Global, Outcome};

const GOLDENS: [(&str, &str); 7] = [
    ("fig1.txt", include_str!("../goldens/fig1.txt")),
    ("fig2.txt", include_str!("../goldens/fig2.txt")),
    ("fig3.txt", include_str!("../goldens/fig3.txt")),
    ("fig4.txt", include_str!("../goldens/fig4.txt")),
    ("fig5.txt", include_str!("../goldens/fig5.txt")),
    ("fig6.txt", include_str!("../goldens/fig6.txt")),
    ("fig7.txt", include_str!("../goldens/fig7.txt")),
];

#[derive(clap::Args)]
pub struct Args {
    /// Also write the regenerated files into this directory.
    #[arg(long)]
    pub write: Option<PathBuf>,
}

pub fn run(args: Args, _: &Global) -> Result<Outcome> {
    let generated = generate()?;
    if let Some(dir) = &args.write {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (name, body) in &generated {
            let path = dir.join(name);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    let mut text = String::new();
    let mut entries = Vec::new();
    let mut ok = true;
    for ((name, body), (_, golden)) in generated.iter().zip(GOLDENS) {
        let same = body == golden;
        ok &= same;
        text += &format!("{name}: {}\n", if same { "matches" } else { "differs" });
        if !same {
            text += &format!("--- golden\n{golden}--- generated\n{body}");
        }
        entries.push(json!({ "file": name, "matches": same, "generated": body }));
    }
    Ok(Outcome { json: json!({ "figures": entries, "all_match": ok }), text, ok })
}

fn generate() -> Result<Vec<(String, String)>> {
    let figs = [fig1()?, fig2_text(), fig3_text()?, fig4_text()?, fig5_text(), fig6_text(), fig7()?];
    Ok(GOLDENS.iter().map(|(name, _)| name.to_string()).zip(figs).collect())
}

fn positions<'a>(xs: impl IntoIterator<Item = &'a Vec<u8>>) -> String {
    xs.into_iter().map(|x| fmt_pos(x)).collect::<Vec<_>>().join(" ")
}

fn fig1() -> Result<String> {
    let m = interval_module();
    let graph = m.graph().clone();
    let mut s = String::from("interval v -> u of length 2, D = 2v\n");
    for (i, f) in m.generators().iter().enumerate() {
        let piece = &f.pieces()[0];
        let cuts: Vec<String> = piece.cuts.iter().map(ToString::to_string).collect();
        s += &format!("f{}: slopes {:?} with breaks at {}\n", i + 1, piece.slopes, cuts.join(" "));
    }
    let x = interval_x();
    for (name, p) in [("v", GraphPoint::Vertex(0)), ("x", x), ("u", GraphPoint::Vertex(1))] {
        s += &local_block(&m, &format!("local array at {name} ({})", graph.describe_point(&p)), &p)?;
    }
    Ok(s)
}

fn local_block(m: &TropicalModule, title: &str, p: &GraphPoint) -> Result<String> {
    let local = m.local_array_at(p)?;
    let dirs: Vec<String> = m
        .graph()
        .tangent_directions(p)
        .iter()
        .map(|t: &TangentDirection| format!("{} {:?}", m.graph().describe_direction(t), m.slopes_at(t)))
        .collect();
    Ok(format!("{title}\nslopes: {}\n{local}", dirs.join("; ")))
}

fn fig2_text() -> String {
    let a = fig2();
    let ranks = a.axis_ranks().expect("nonempty");
    format!(
        "{a}axis ranks {ranks:?}\nrankable: {}\n",
        yes_no(a.rankable().expect("nonempty").is_some())
    )
}

fn fig3_text() -> Result<String> {
    let a = fig3();
    Ok(format!("{a}rank array\n{}", a.rank_array()?.render()))
}

fn fig4_text() -> Result<String> {
    let a = fig4();
    let redundant = fig3().redundant_positions();
    Ok(format!(
        "{a}redundant positions {}\nrank array\n{}",
        positions(&redundant),
        a.rank_array()?.render()
    ))
}

fn fig5_text() -> String {
    [("line", fig5_line()), ("left", fig5_left()), ("right", fig5_right())]
        .into_iter()
        .map(|(name, a)| format!("{name}\n{a}"))
        .collect()
}

fn verdicts(a: &DotArray, r: u8) -> String {
    let reports = [check_p1(a), check_p2(a, r), check_p3(a, r), check_p4(a, r)];
    let parts: Vec<String> = reports
        .iter()
        .map(|rep| format!("{} {}", rep.property, yes_no(rep.verdict)))
        .collect();
    parts.join(", ")
}

fn fig6_text() -> String {
    [("left", fig6_left()), ("middle", fig6_middle()), ("right", fig6_right())]
        .into_iter()
        .map(|(name, a)| format!("{name}\n{a}{}\n", verdicts(&a, 2)))
        .collect()
}

fn fig7() -> Result<String> {
    let m = loop_module();
    let u = loop_u();
    let mut s = String::from("two edges of length 1 between u and v, D = 3u\n");
    s += &local_block(&m, "local array at u", &u)?;
    s += &format!("rank array at u\n{}", m.local_core(&u)?.rank_array().render());
    Ok(s)
}
