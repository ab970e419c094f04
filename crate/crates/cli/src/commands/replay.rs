use std::path::PathBuf;

use anyhow::Context;
use serde::de::DeserializeOwned;

use rivw_core::Error;

use crate::manifest::{file_digest, read_record, CommandName, RunManifest};

#[derive(clap::Args)]
pub struct Args {
    /// manifest.json written by an earlier run
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for the new outputs
    #[arg(long)]
    out: PathBuf,
}

fn config<T: DeserializeOwned>(v: serde_json::Value) -> anyhow::Result<T> {
    serde_json::from_value(v).map_err(|e| Error::Config(format!("manifest configuration: {e}")).into())
}

pub fn run(args: Args) -> anyhow::Result<()> {
    let record = read_record(&args.manifest)?;
    for input in &record.inputs {
        let now = file_digest(&input.path).with_context(|| "input listed in the manifest")?;
        if now != input.sha256 {
            return Err(Error::Pipeline(format!("{} changed since the recorded run", input.path.display())).into());
        }
    }
    let v = record.config.clone();
    match record.manifest.command {
        CommandName::Analyze => {
            let cfg: super::analyze::AnalyzeConfig = config(v)?;
            check_digest(&record.manifest, &cfg)?;
            super::analyze::execute(&cfg, &args.out)
        }
        CommandName::Simulate => {
            let cfg: super::simulate::SimulateConfig = config(v)?;
            check_digest(&record.manifest, &cfg)?;
            super::simulate::execute(&cfg, &args.out)
        }
        CommandName::Profile => {
            let cfg: rivw_core::simulate::ProfileGrid = config(v)?;
            check_digest(&record.manifest, &cfg)?;
            super::profile::execute(&cfg, &args.out)
        }
        CommandName::RbCheck => {
            let cfg: super::rb_check::RbCheckConfig = config(v)?;
            check_digest(&record.manifest, &cfg)?;
            super::rb_check::execute(&cfg, &args.out)
        }
        CommandName::Oracle => {
            let cfg: super::oracle::OracleConfig = config(v)?;
            check_digest(&record.manifest, &cfg)?;
            super::oracle::execute(&cfg, Some(&args.out))
        }
    }
}

/// The stored configuration must reproduce the recorded digest.
fn check_digest<C: serde::Serialize>(recorded: &RunManifest, cfg: &C) -> anyhow::Result<()> {
    let again = RunManifest::new(recorded.command, cfg, recorded.seed)?;
    if again.config_digest != recorded.config_digest {
        return Err(Error::Config("manifest configuration does not match its digest".into()).into());
    }
    Ok(())
}
