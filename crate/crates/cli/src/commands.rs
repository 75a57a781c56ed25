use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use factcheck_core::curation::{load_source_texts, Curator, ExemplarPool};
use factcheck_core::datasets::{self, balance_sample, standardize_records, summarize, write_jsonl};
use factcheck_core::evaluation::{baselines, evaluate_llm_factuality, load_responses, run_benchmark, sweep_threshold};
use factcheck_core::pipeline::Mode;
use tracing::info;

use crate::config::{Backend, RunConfig};
use crate::services::{hash_input, sibling_manifest, write_file, Manifest, Services, MOCK_INPUT_FILE};
use crate::{BenchmarkArgs, CheckArgs, CurateArgs, DataCommand, EvalQaArgs, ModeArg, SweepArgs};

fn resolve(args: &crate::config::RunArgs) -> Result<RunConfig> {
    RunConfig::resolve(args, &|k| std::env::var(k).ok())
}

fn out_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

pub fn check(args: CheckArgs) -> Result<()> {
    let cfg = resolve(&args.run)?;
    let mut input_file = args.file.clone();
    if args.text.is_none() && input_file.is_none() {
        match &cfg.backend {
            Backend::Mock(dir) => input_file = Some(dir.join(MOCK_INPUT_FILE)),
            Backend::Live => bail!("no input: pass TEXT or --file"),
        }
    }
    let text = match (&args.text, &input_file) {
        (Some(t), _) => t.clone(),
        (None, Some(p)) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        (None, None) => unreachable!(),
    };
    let mode = match args.mode {
        ModeArg::Free => Mode::Free,
        ModeArg::Benchmark => Mode::Benchmark,
    };

    let services = Services::build(&cfg, true)?;
    let pipeline = services.pipeline(&cfg);
    let report = pipeline.run(&text, mode)?;
    services.finish()?;

    let report_path = out_path(&args.out_dir, "report.json");
    write_file(&report_path, &report.to_json())?;
    let mut manifest = Manifest::new("check", Some(&cfg));
    manifest.backends = services.identities();
    if let Some(p) = &input_file {
        manifest.inputs.push(hash_input(p)?);
    }
    manifest.outputs.push(report_path.display().to_string());
    manifest.write(&out_path(&args.out_dir, "manifest.json"))?;
    println!("{report}");
    info!(path = %report_path.display(), "report written");
    Ok(())
}

pub fn benchmark(args: BenchmarkArgs) -> Result<()> {
    let cfg = resolve(&args.run)?;
    let records = datasets::load_claims(&args.dataset)?;
    let services = Services::build(&cfg, true)?;
    let pipeline = services.pipeline(&cfg);
    let (mut metrics, entries) = run_benchmark(&pipeline, &records)?;
    services.finish()?;
    if args.baselines {
        let gold: Vec<_> = records.iter().map(|r| r.label).collect();
        metrics.baselines = baselines(&gold, cfg.seed_or_default());
    }

    let metrics_path = out_path(&args.out_dir, "metrics.json");
    let claims_path = out_path(&args.out_dir, "claims.jsonl");
    write_file(&metrics_path, &metrics.to_json())?;
    std::fs::create_dir_all(&args.out_dir)?;
    write_jsonl(&claims_path, &entries)?;
    let mut manifest = Manifest::new("benchmark", Some(&cfg));
    manifest.backends = services.identities();
    manifest.inputs.push(hash_input(&args.dataset)?);
    manifest.outputs = vec![metrics_path.display().to_string(), claims_path.display().to_string()];
    manifest.write(&out_path(&args.out_dir, "manifest.json"))?;
    println!("{metrics}");
    Ok(())
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    let cfg = resolve(&args.run)?;
    let records = datasets::load_claims(&args.dataset)?;
    let services = Services::build(&cfg, true)?;
    let pipeline = services.pipeline(&cfg);
    let report = sweep_threshold(&pipeline, &records, &args.taus)?;
    services.finish()?;
    report.write_artifacts(&args.out_dir)?;
    let mut manifest = Manifest::new("sweep", Some(&cfg));
    manifest.backends = services.identities();
    manifest.inputs.push(hash_input(&args.dataset)?);
    manifest.outputs = ["sweep.json", "sweep.csv", "sweep.svg"]
        .iter()
        .map(|n| out_path(&args.out_dir, n).display().to_string())
        .collect();
    manifest.write(&out_path(&args.out_dir, "manifest.json"))?;
    print!("{report}");
    Ok(())
}

pub fn eval_qa(args: EvalQaArgs) -> Result<()> {
    let cfg = resolve(&args.run)?;
    let qa = datasets::load_qa(&args.qa)?;
    let responses = load_responses(&args.responses)?;
    let services = Services::build(&cfg, true)?;
    let pipeline = services.pipeline(&cfg);
    let report = evaluate_llm_factuality(&pipeline, &qa, &responses, &args.model_id)?;
    services.finish()?;
    let path = out_path(&args.out_dir, "factuality.json");
    write_file(&path, &report.to_json())?;
    let mut manifest = Manifest::new("eval-qa", Some(&cfg));
    manifest.backends = services.identities();
    manifest.inputs = vec![hash_input(&args.qa)?, hash_input(&args.responses)?];
    manifest.outputs.push(path.display().to_string());
    manifest.write(&out_path(&args.out_dir, "manifest.json"))?;
    println!("{report}");
    Ok(())
}

fn data_manifest(command: &str, inputs: &[&Path], out: &Path, seed: Option<u64>) -> Result<()> {
    let mut manifest = Manifest::new(command, None);
    manifest.seed = seed;
    for p in inputs {
        manifest.inputs.push(hash_input(p)?);
    }
    manifest.outputs.push(out.display().to_string());
    manifest.write(&sibling_manifest(out))
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    Ok(())
}

pub fn data(cmd: DataCommand) -> Result<()> {
    match cmd {
        DataCommand::Summarize { files, out } => {
            let summary = summarize(&files)?;
            println!("{summary}");
            if let Some(out) = out {
                write_file(&out, &format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
                let inputs: Vec<&Path> = files.iter().map(PathBuf::as_path).collect();
                data_manifest("data summarize", &inputs, &out, None)?;
            }
        }
        DataCommand::Standardize { input, out } => {
            let source = datasets::load_source_claims(&input)?;
            let (records, dropped) = standardize_records(&source);
            ensure_parent(&out)?;
            write_jsonl(&out, &records)?;
            data_manifest("data standardize", &[&input], &out, None)?;
            println!("{} records written, {} dropped", records.len(), dropped);
        }
        DataCommand::Balance {
            input,
            out,
            cap,
            seed,
            majority,
        } => {
            let records = datasets::load_claims(&input)?;
            let kept = balance_sample(&records, majority, cap, seed);
            ensure_parent(&out)?;
            write_jsonl(&out, &kept)?;
            data_manifest("data balance", &[&input], &out, Some(seed))?;
            println!("{} of {} records kept", kept.len(), records.len());
        }
        DataCommand::Curate(args) => curate(*args)?,
    }
    Ok(())
}

fn curate(args: CurateArgs) -> Result<()> {
    let cfg = resolve(&args.run)?;
    let pool = ExemplarPool::load(&args.pool)?;
    let records = load_source_texts(&args.input)?;
    let services = Services::build(&cfg, false)?;
    let curator = Curator::new(services.llm.clone(), cfg.model_id.clone())
        .with_temperature(cfg.temperature)
        .with_selection(args.k, args.lambda);
    let mut drafts = Vec::with_capacity(records.len());
    for record in &records {
        let draft = curator
            .draft(&pool, record)
            .with_context(|| format!("drafting {}", record.id))?;
        drafts.push(draft);
    }
    ensure_parent(&args.out)?;
    write_jsonl(&args.out, &drafts)?;
    let mut manifest = Manifest::new("data curate", Some(&cfg));
    manifest.backends = services.identities();
    manifest.inputs = vec![hash_input(&args.input)?, hash_input(&args.pool)?];
    manifest.outputs.push(args.out.display().to_string());
    manifest.write(&sibling_manifest(&args.out))?;
    println!(
        "{} drafts written for review, cost {}",
        drafts.len(),
        services.llm.ledger().snapshot().total_cost
    );
    Ok(())
}
