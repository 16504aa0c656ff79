use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use aseshm::bench::{
    classify, confusion, embed, f1, grid_search, simulate_pair, Dataset, Embedding, ExperimentRegistry, GridReport,
};
use aseshm::config::PipelineConfig;
use aseshm::detect::{train_ocsvm_with, OcsvmModel};
use aseshm::model::{assemble, export_matrices, to_state_space};
use aseshm::sigproc::{featurize as build_features, FeatureTensor};
use aseshm::simulator::{inject_damage, read_recordings, write_recordings};
use aseshm::store::Artifact;
use aseshm::tensor::CpFactors;
use aseshm::{Error, Result};
use serde::Serialize;

use crate::Common;

/// Resolved configuration plus where to read and write.
struct Context {
    cfg: PipelineConfig,
    seed: u64,
    out: PathBuf,
}

fn context(common: &Common) -> Result<Context> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let out = common
        .out
        .clone()
        .or_else(|| cfg.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    cfg.output_dir = None;
    fs::create_dir_all(&out)?;
    Ok(Context {
        seed: cfg.seed,
        cfg,
        out,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

/// Files written by a command, echoed for the user.
fn report_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

pub fn simulate(common: &Common, schedule: Option<&str>) -> Result<()> {
    let ctx = context(common)?;
    let mut spec = ctx.cfg.schedule.clone();
    if let Some(kind) = schedule {
        spec.kind = kind.into();
    }
    let pair = simulate_pair(&ctx.cfg, &spec, ctx.seed)?;
    let hash = ctx.cfg.hash();
    let healthy = ctx.out.join("healthy.csv");
    let damaged = ctx.out.join("damaged.csv");
    write_recordings(&healthy, &pair.healthy, &pair.healthy_schedule, ctx.seed, &hash)?;
    write_recordings(&damaged, &pair.damaged, &pair.damaged_schedule, ctx.seed, &hash)?;

    let model_dir = ctx.out.join("model");
    for (name, act) in [
        ("healthy", ctx.cfg.actuator.clone()),
        ("damaged", inject_damage(&ctx.cfg.actuator, ctx.cfg.damage.severity)?),
    ] {
        let sys = assemble(&ctx.cfg.wing, &act)?;
        export_matrices(&model_dir.join(name), &sys, &to_state_space(&sys)?)?;
    }
    let config = ctx.out.join("config.json");
    write_json(&config, &ctx.cfg)?;
    report_written(&[healthy, damaged, model_dir, config]);
    Ok(())
}

pub fn featurize(common: &Common, input: Option<PathBuf>) -> Result<()> {
    let ctx = context(common)?;
    let dir = input.unwrap_or_else(|| ctx.out.clone());
    let mut parts = Vec::new();
    for name in ["healthy.csv", "damaged.csv"] {
        let (rec, sidecar) = read_recordings(&dir.join(name))?;
        parts.push(build_features(&rec, &ctx.cfg.features, &sidecar.config_hash)?);
    }
    let tensor = FeatureTensor::concat(&[&parts[0], &parts[1]])?;
    let path = ctx.out.join("features.ashm");
    tensor.to_artifact()?.write(&path)?;
    report_written(&[path]);
    Ok(())
}

pub fn decompose(common: &Common, input: Option<PathBuf>, rank: Option<usize>) -> Result<()> {
    let ctx = context(common)?;
    let dir = input.unwrap_or_else(|| ctx.out.clone());
    let tensor = FeatureTensor::from_artifact(&Artifact::read(&dir.join("features.ashm"))?)?;
    let data = Dataset::from_combined(&tensor);
    let rank = rank.unwrap_or(ctx.cfg.experiment.rank);
    let emb = embed(
        &data,
        rank,
        &ctx.cfg.cp,
        ctx.cfg.svm.standardize,
        ctx.cfg.experiment.train_fraction,
        ctx.seed,
    )?;
    let cp = ctx.out.join("cp.ashm");
    let embedding = ctx.out.join("embedding.ashm");
    emb.factors.to_artifact()?.write(&cp)?;
    emb.to_artifact()?.write(&embedding)?;
    report_written(&[cp, embedding]);
    Ok(())
}

fn load_embedding(dir: &Path) -> Result<Embedding> {
    let factors = CpFactors::from_artifact(&Artifact::read(&dir.join("cp.ashm"))?)?;
    Embedding::from_artifact(&Artifact::read(&dir.join("embedding.ashm"))?, factors)
}

pub fn train(common: &Common, input: Option<PathBuf>, nu: Option<f64>, gamma: Option<f64>) -> Result<()> {
    let ctx = context(common)?;
    let dir = input.unwrap_or_else(|| ctx.out.clone());
    let emb = load_embedding(&dir)?;
    let svm = &ctx.cfg.svm;
    let nu_grid = nu.map_or_else(|| svm.nu_grid.clone(), |v| vec![v]);
    let gamma_grid = gamma.map_or_else(|| svm.gamma_grid.clone(), |v| vec![v]);
    let grid: GridReport = grid_search(&emb.train, &emb.eval, &emb.eval_labels, &nu_grid, &gamma_grid, &svm.smo)?;
    let best = grid
        .best_cell()
        .ok_or_else(|| Error::Undefined("no grid cell produced a defined F1".into()))?;
    let model = train_ocsvm_with(&emb.train, best.nu, best.gamma, &svm.smo)?;
    let model_path = ctx.out.join("model.ashm");
    let grid_path = ctx.out.join("grid.json");
    model.to_artifact()?.write(&model_path)?;
    write_json(&grid_path, &grid)?;
    report_written(&[model_path, grid_path]);
    Ok(())
}

#[derive(Serialize)]
struct Evaluation {
    config_hash: String,
    seed: u64,
    nu: f64,
    gamma: f64,
    confusion: aseshm::bench::ConfusionMatrix,
    f1: Option<f64>,
}

pub fn evaluate(common: &Common, input: Option<PathBuf>) -> Result<()> {
    let ctx = context(common)?;
    let dir = input.unwrap_or_else(|| ctx.out.clone());
    let emb = load_embedding(&dir)?;
    let model = OcsvmModel::from_artifact(&Artifact::read(&dir.join("model.ashm"))?)?;
    let scores: Vec<f64> = emb
        .eval
        .iter()
        .map(|p| aseshm::detect::score(&model, p))
        .collect::<Result<_>>()?;
    let preds: Vec<_> = scores.iter().map(|&s| classify(s)).collect();
    let cm = confusion(&emb.eval_labels, &preds)?;

    let scores_path = ctx.out.join("scores.csv");
    let mut w = create(&scores_path)?;
    writeln!(w, "point_id,score,label,cluster_id")?;
    for (i, (s, l)) in scores.iter().zip(&emb.eval_labels).enumerate() {
        writeln!(w, "{},{s},{},0", emb.train.len() + i, l.as_str())?;
    }
    w.flush()?;
    let cm_path = ctx.out.join("confusion.csv");
    cm.write_csv(create(&cm_path)?)?;
    let eval_path = ctx.out.join("evaluation.json");
    write_json(
        &eval_path,
        &Evaluation {
            config_hash: ctx.cfg.hash(),
            seed: ctx.seed,
            nu: model.nu,
            gamma: model.gamma,
            confusion: cm,
            f1: f1(&cm).ok(),
        },
    )?;
    println!("F1 {}", f1(&cm).map_or("undefined".into(), |v| format!("{v:.4}")));
    report_written(&[scores_path, cm_path, eval_path]);
    Ok(())
}

#[derive(Serialize)]
struct Manifest {
    experiment: String,
    config_hash: String,
    seed: u64,
    report: String,
    confusions: Vec<String>,
    scatters: Vec<String>,
    scores: Vec<String>,
    boundaries: Vec<String>,
    files: Vec<String>,
}

pub fn pipeline(common: &Common, experiment: &str) -> Result<()> {
    let ctx = context(common)?;
    let out = ExperimentRegistry::default().run(experiment, &ctx.cfg, ctx.seed)?;
    let dir = ctx.out.join(experiment);
    fs::create_dir_all(&dir)?;
    let name_of = |p: &Path| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();

    let report = dir.join("report.json");
    write_json(&report, &out.report)?;
    let mut manifest = Manifest {
        experiment: experiment.into(),
        config_hash: out.report.config_hash.clone(),
        seed: ctx.seed,
        report: name_of(&report),
        confusions: Vec::new(),
        scatters: Vec::new(),
        scores: Vec::new(),
        boundaries: Vec::new(),
        files: Vec::new(),
    };
    for (name, cm) in &out.confusions {
        let p = dir.join(format!("confusion_{name}.csv"));
        cm.write_csv(create(&p)?)?;
        manifest.confusions.push(name_of(&p));
    }
    for s in &out.scatters {
        let p = dir.join(format!("scatter_{}.csv", s.name));
        let mut w = create(&p)?;
        s.write_csv(&mut w)?;
        w.flush()?;
        manifest.scatters.push(name_of(&p));
        let p = dir.join(format!("scores_{}.csv", s.name));
        let mut w = create(&p)?;
        s.write_scores_csv(&mut w)?;
        w.flush()?;
        manifest.scores.push(name_of(&p));
    }
    for b in &out.boundaries {
        let p = dir.join(format!("boundary_{}.csv", b.name));
        let mut w = create(&p)?;
        b.write_csv(&mut w)?;
        w.flush()?;
        manifest.boundaries.push(name_of(&p));
    }
    write_json(&dir.join("config.json"), &ctx.cfg)?;
    manifest.files = [&manifest.confusions, &manifest.scatters, &manifest.scores, &manifest.boundaries]
        .into_iter()
        .flatten()
        .cloned()
        .chain(["config.json".to_string(), manifest.report.clone()])
        .collect();
    manifest.files.sort();
    write_json(&dir.join("manifest.json"), &manifest)?;

    for v in &out.report.variants {
        let fmt = |f: Option<f64>| f.map_or("undefined".to_string(), |v| format!("{v:.3}"));
        println!("{experiment} {:<12} rank {} F1 {}", v.name, v.rank, fmt(v.best_f1()));
        for c in &v.clusters {
            println!(
                "  cluster {} ({}) F1 {} [{} eval, {} damaged]",
                c.cluster,
                c.sensor,
                fmt(c.grid.best_f1()),
                c.n_eval,
                c.n_eval_damaged
            );
        }
    }
    log::info!("{experiment} finished in {:.2} s", out.report.runtime_secs);
    println!("wrote {}", dir.display());
    Ok(())
}
