use std::path::{Path, PathBuf};

use serde::Serialize;

use rivw_core::simulate::{winners_curse_profile, ProfileGrid, ProfilePoint, FULL_REPS};

use crate::manifest::{CommandName, Run};
use crate::overlay::Overlay;
use crate::tsv::{num, Tsv};

#[derive(clap::Args)]
pub struct Args {
    /// Grid settings (TOML)
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    full: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "rivw_out")]
    out: PathBuf,
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let mut o = Overlay::load(Some(&args.config))?;
    if args.full {
        o.set_u64("n_reps", Some(FULL_REPS as u64))?;
    }
    o.set_u64("n_reps", args.reps.map(|r| r as u64))?
        .set_u64("seed", args.seed)?;
    let grid: ProfileGrid = o.resolve()?;
    execute(&grid, &args.out)
}

#[derive(Serialize)]
struct ProfileJson<'a> {
    points: &'a [ProfilePoint],
}

pub fn execute(grid: &ProfileGrid, out: &Path) -> anyhow::Result<()> {
    let points = winners_curse_profile(grid)?;
    let mut run = Run::start(CommandName::Profile, grid, Some(grid.seed), &[], out)?;
    let mut t = Tsv::create(
        &run.output("profile.tsv"),
        &run.preamble(),
        &[
            "eps_x2",
            "pi",
            "h2_x",
            "h2_y",
            "iv_proportion",
            "mean_f_three_sample",
            "ivw_bias",
            "three_sample_bias",
            "rivw_bias",
            "skipped",
        ],
    )?;
    for p in &points {
        t.row(&[
            num(p.eps_x2),
            num(p.pi),
            num(p.h2_x),
            num(p.h2_y),
            num(p.iv_proportion),
            num(p.mean_f_three_sample),
            num(p.ivw_bias_proportion),
            num(p.three_sample_bias_proportion),
            num(p.rivw_bias_proportion),
            p.skipped.clone().unwrap_or_default(),
        ])?;
    }
    t.finish()?;
    run.write_json("profile.json", &ProfileJson { points: &points })?;
    run.finish()?;

    println!(
        "{:>9} {:>7} {:>10} {:>9} {:>9} {:>9}",
        "eps2", "pi", "iv_prop", "ivw", "3s-ivw", "rivw"
    );
    for p in &points {
        match &p.skipped {
            Some(why) => println!("{:>9} {:>7} skipped: {why}", p.eps_x2, p.pi),
            None => println!(
                "{:>9} {:>7} {:>10.4} {:>9.4} {:>9.4} {:>9.4}",
                p.eps_x2,
                p.pi,
                p.iv_proportion,
                p.ivw_bias_proportion,
                p.three_sample_bias_proportion,
                p.rivw_bias_proportion
            ),
        }
    }
    Ok(())
}
