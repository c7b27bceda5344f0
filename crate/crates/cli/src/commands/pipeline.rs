use foresight_engine::{run_pipeline, write_pipeline};
use foresight_gateway::Gateway;

use crate::config::CliConfig;
use crate::manifest::{prepare_out_dir, RunManifest};
use crate::PipelineArgs;

/// 0 when every run succeeded, 2 when some failed, 1 when none produced risks.
pub async fn run(args: PipelineArgs, seed: u64) -> Result<u8, String> {
    let cfg = CliConfig::load(&args.config)?.with_backend_kind(args.backend.map(Into::into));
    let templates = cfg.templates()?;
    let pcfg = cfg.pipeline(args.use_case.as_deref(), args.runs, args.parallel)?;
    let gw = Gateway::from_config(cfg.backend.clone()).map_err(|e| e.to_string())?;
    prepare_out_dir(&args.out, args.force)?;

    let mut manifest = RunManifest::new("pipeline", &args.out, seed);
    manifest.config_path = Some(args.config.clone());
    manifest.template_hash = Some(templates.content_hash());

    let result = run_pipeline(&gw, &templates, &pcfg).await.map_err(|e| e.to_string())?;
    let written = write_pipeline(&result, &args.out).map_err(|e| e.to_string())?;
    manifest.add_files(&written)?;

    let succeeded = result.runs.iter().filter(|r| r.succeeded()).count();
    let code = if succeeded == 0 {
        1
    } else if result.is_partial() {
        2
    } else {
        0
    };
    let plateau = result
        .saturation
        .as_ref()
        .and_then(|c| c.plateau_run)
        .map_or_else(|| "none".to_string(), |k| k.to_string());
    println!(
        "{}: {succeeded}/{} runs, {} unique risks, plateau run {plateau}, {} failures",
        pcfg.use_case.id,
        pcfg.runs,
        result.unique.len(),
        result.failures.len()
    );
    for f in &result.failures {
        let run = f.run.map_or_else(|| "-".into(), |r| r.to_string());
        let persona = f.persona.map_or("-", |p| p.slug());
        eprintln!("failure: run {run} persona {persona} step {}: {}", f.step, f.error);
    }
    manifest.write(i32::from(code))?;
    Ok(code)
}
