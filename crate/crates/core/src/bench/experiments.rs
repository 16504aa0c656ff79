use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::grid::{classify, grid_search, GridReport};
use super::metrics::{confusion, f1, ConfusionMatrix};
use super::pipeline::{embed, Dataset, Embedding};
use crate::config::PipelineConfig;
use crate::detect::{cluster_split, train_ocsvm_with, ClusterSet, OcsvmModel, RouterRegistry};
use crate::error::{Error, Result};
use crate::seeds;
use crate::simulator::{HealthLabel, ScheduleSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpSummary {
    pub relative_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub restart: usize,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub cluster: usize,
    pub sensor: String,
    pub correlation: f64,
    pub n_train: usize,
    pub n_eval: usize,
    pub n_eval_damaged: usize,
    pub grid: GridReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedSummary {
    pub router: String,
    pub nu: f64,
    pub gamma: f64,
    pub confusion: ConfusionMatrix,
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    pub name: String,
    pub schedule: String,
    pub rank: usize,
    pub n_healthy_events: usize,
    pub n_damaged_events: usize,
    pub noise_sigma: f64,
    pub train_events: Vec<usize>,
    pub eval_healthy_events: Vec<usize>,
    pub cp: CpSummary,
    pub grid: GridReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clusters: Vec<ClusterReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub routed: Option<RoutedSummary>,
}

impl VariantReport {
    pub fn best_f1(&self) -> Option<f64> {
        self.grid.best_f1()
    }

    /// Highest best-pair F1 over the per-cluster searches.
    pub fn best_cluster_f1(&self) -> Option<f64> {
        self.clusters
            .iter()
            .filter_map(|c| c.grid.best_f1())
            .max_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub variants: Vec<VariantReport>,
    /// Wall-clock seconds; kept out of the serialised report so replays
    /// compare byte for byte.
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn variant(&self, name: &str) -> Option<&VariantReport> {
        self.variants.iter().find(|v| v.name == name)
    }
}

/// One C-space point with its decision value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPoint {
    pub point_id: usize,
    pub split: &'static str,
    pub coords: Vec<f64>,
    pub score: f64,
    pub label: HealthLabel,
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scatter {
    pub name: String,
    pub points: Vec<ScatterPoint>,
}

impl Scatter {
    /// `point_id,split,c_1..c_R,score,label,cluster_id`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let r = self.points.first().map_or(0, |p| p.coords.len());
        write!(out, "point_id,split")?;
        for j in 1..=r {
            write!(out, ",c_{j}")?;
        }
        writeln!(out, ",score,label,cluster_id")?;
        for p in &self.points {
            write!(out, "{},{}", p.point_id, p.split)?;
            for c in &p.coords {
                write!(out, ",{c}")?;
            }
            writeln!(out, ",{},{},{}", p.score, p.label.as_str(), p.cluster)?;
        }
        Ok(())
    }

    /// Evaluation points only: `point_id,score,label,cluster_id`.
    pub fn write_scores_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "point_id,score,label,cluster_id")?;
        for p in self.points.iter().filter(|p| p.split == "eval") {
            writeln!(out, "{},{},{},{}", p.point_id, p.score, p.label.as_str(), p.cluster)?;
        }
        Ok(())
    }
}

/// Decision values of one cluster model over a plane through its centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGrid {
    pub name: String,
    pub cluster: usize,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// `scores[iy * xs.len() + ix]`.
    pub scores: Vec<f64>,
}

impl BoundaryGrid {
    /// `c_1,c_2,score`, one row per grid node.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "c_1,c_2,score")?;
        for (iy, y) in self.ys.iter().enumerate() {
            for (ix, x) in self.xs.iter().enumerate() {
                writeln!(out, "{x},{y},{}", self.scores[iy * self.xs.len() + ix])?;
            }
        }
        Ok(())
    }
}

/// A finished run: the report plus the plot data behind it.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ExperimentReport,
    pub scatters: Vec<Scatter>,
    pub boundaries: Vec<BoundaryGrid>,
    pub confusions: Vec<(String, ConfusionMatrix)>,
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, cfg: &PipelineConfig, seed: u64) -> Result<ExperimentOutput>;
}

#[derive(Clone)]
pub struct ExperimentRegistry {
    experiments: BTreeMap<&'static str, Arc<dyn Experiment>>,
}

impl Default for ExperimentRegistry {
    fn default() -> Self {
        let mut r = Self {
            experiments: BTreeMap::new(),
        };
        r.register(Arc::new(DimCompare));
        r.register(Arc::new(AngleCompare));
        r.register(Arc::new(PerCluster));
        r
    }
}

impl ExperimentRegistry {
    pub fn register(&mut self, e: Arc<dyn Experiment>) {
        self.experiments.insert(e.name(), e);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Experiment>> {
        self.experiments.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "experiment",
            name: name.into(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.experiments.keys().copied().collect()
    }

    pub fn run(&self, name: &str, cfg: &PipelineConfig, seed: u64) -> Result<ExperimentOutput> {
        cfg.validate()?;
        let start = Instant::now();
        let mut out = self.get(name)?.run(cfg, seed)?;
        out.report.runtime_secs = start.elapsed().as_secs_f64();
        Ok(out)
    }
}

/// Runs a registered experiment and returns its report.
pub fn run_experiment(name: &str, cfg: &PipelineConfig, seed: u64) -> Result<ExperimentReport> {
    ExperimentRegistry::default().run(name, cfg, seed).map(|o| o.report)
}

struct Variant {
    report: VariantReport,
    embedding: Embedding,
    best_model: Option<OcsvmModel>,
}

fn dataset(cfg: &PipelineConfig, kind: &str, seed: u64) -> Result<Dataset> {
    let stream = seeds::derive(seed, seeds::tag(kind));
    let mut data = Dataset::generate(cfg, &schedule_variant(cfg, kind), stream)?;
    data.thin_damaged(cfg.experiment.damaged_fraction, seeds::derive(stream, seeds::tag("thin")));
    Ok(data)
}

fn schedule_variant(cfg: &PipelineConfig, kind: &str) -> ScheduleSpec {
    let mut spec = cfg.schedule.clone();
    spec.kind = kind.into();
    if kind != "grid" {
        spec.n_events = cfg.experiment.lhs_events;
    }
    spec
}

fn run_variant(name: &str, cfg: &PipelineConfig, data: &Dataset, schedule: &str, rank: usize, seed: u64) -> Result<Variant> {
    let emb = embed(
        data,
        rank,
        &cfg.cp,
        cfg.svm.standardize,
        cfg.experiment.train_fraction,
        // shared by every rank on the same data, so variants see one split
        seeds::derive(seed, seeds::tag(schedule)),
    )?;
    let grid = grid_search(&emb.train, &emb.eval, &emb.eval_labels, &cfg.svm.nu_grid, &cfg.svm.gamma_grid, &cfg.svm.smo)
        .map_err(Error::at_stage("grid-search"))?;
    let best_model = match grid.best_cell() {
        Some(c) => Some(train_ocsvm_with(&emb.train, c.nu, c.gamma, &cfg.svm.smo).map_err(Error::at_stage("train"))?),
        None => None,
    };
    let f = &emb.factors;
    let report = VariantReport {
        name: name.into(),
        schedule: schedule.into(),
        rank,
        n_healthy_events: data.healthy.n_events(),
        n_damaged_events: data.damaged.n_events(),
        noise_sigma: data.noise_sigma,
        train_events: emb.split.train.clone(),
        eval_healthy_events: emb.split.eval_healthy.clone(),
        cp: CpSummary {
            relative_error: f.relative_error(),
            iterations: f.iterations(),
            converged: f.converged,
            restart: f.restart,
            weights: f.weights.iter().copied().collect(),
        },
        grid,
        clusters: Vec::new(),
        routed: None,
    };
    Ok(Variant {
        report,
        embedding: emb,
        best_model,
    })
}

fn scatter(name: &str, emb: &Embedding, score: impl Fn(&[f64]) -> (f64, usize)) -> Scatter {
    let mut points = Vec::with_capacity(emb.train.len() + emb.eval.len());
    for (i, p) in emb.train.iter().enumerate() {
        let (s, c) = score(p);
        points.push(ScatterPoint {
            point_id: i,
            split: "train",
            coords: p.clone(),
            score: s,
            label: HealthLabel::Healthy,
            cluster: c,
        });
    }
    for (i, (p, l)) in emb.eval.iter().zip(&emb.eval_labels).enumerate() {
        let (s, c) = score(p);
        points.push(ScatterPoint {
            point_id: emb.train.len() + i,
            split: "eval",
            coords: p.clone(),
            score: s,
            label: *l,
            cluster: c,
        });
    }
    Scatter {
        name: name.into(),
        points,
    }
}

fn global_outputs(v: &Variant, out: &mut ExperimentOutput) {
    let name = format!("{}-r{}", v.report.name, v.report.rank);
    if let Some(m) = &v.best_model {
        out.scatters.push(scatter(&name, &v.embedding, |p| (m.decision(p), 0)));
    }
    if let Some(cm) = v.report.grid.best_cell().and_then(|c| c.confusion()) {
        out.confusions.push((name, cm));
    }
}

fn new_output(cfg: &PipelineConfig, name: &str, seed: u64) -> ExperimentOutput {
    ExperimentOutput {
        report: ExperimentReport {
            experiment: name.into(),
            config_hash: cfg.hash(),
            seed,
            variants: Vec::new(),
            runtime_secs: 0.0,
        },
        scatters: Vec::new(),
        boundaries: Vec::new(),
        confusions: Vec::new(),
    }
}

/// Rank-2 against rank-3 C-space on grid-commanded data.
pub struct DimCompare;

impl Experiment for DimCompare {
    fn name(&self) -> &'static str {
        "dim-compare"
    }

    fn run(&self, cfg: &PipelineConfig, seed: u64) -> Result<ExperimentOutput> {
        let mut out = new_output(cfg, self.name(), seed);
        let data = dataset(cfg, "grid", seed)?;
        for &rank in &cfg.experiment.ranks {
            let v = run_variant(&format!("rank-{rank}"), cfg, &data, "grid", rank, seed)?;
            global_outputs(&v, &mut out);
            out.report.variants.push(v.report);
        }
        Ok(out)
    }
}

/// Grid, full-range LHS and large-angle LHS commands at one rank.
pub struct AngleCompare;

impl Experiment for AngleCompare {
    fn name(&self) -> &'static str {
        "angle-compare"
    }

    fn run(&self, cfg: &PipelineConfig, seed: u64) -> Result<ExperimentOutput> {
        let mut out = new_output(cfg, self.name(), seed);
        for (name, kind) in [("grid", "grid"), ("full-range", "lhs"), ("large-angle", "lhs-large")] {
            let data = dataset(cfg, kind, seed)?;
            let v = run_variant(name, cfg, &data, kind, cfg.experiment.rank, seed)?;
            global_outputs(&v, &mut out);
            out.report.variants.push(v.report);
        }
        Ok(out)
    }
}

/// A global model against one model per C-space cluster on large-angle
/// LHS data.
pub struct PerCluster;

impl Experiment for PerCluster {
    fn name(&self) -> &'static str {
        "per-cluster"
    }

    fn run(&self, cfg: &PipelineConfig, seed: u64) -> Result<ExperimentOutput> {
        let mut out = new_output(cfg, self.name(), seed);
        let kind = "lhs-large";
        let data = dataset(cfg, kind, seed)?;
        let mut v = run_variant("large-angle", cfg, &data, kind, cfg.experiment.rank, seed)?;
        global_outputs(&v, &mut out);

        let (nu, gamma) = v
            .report
            .grid
            .best_cell()
            .map(|c| (c.nu, c.gamma))
            .unwrap_or((cfg.svm.nu_grid[0], cfg.svm.gamma_grid[0]));
        let emb = &v.embedding;
        let energy = data.healthy.select_events(&emb.split.train).sensor_energy();
        let set = cluster_split(
            &emb.train,
            &energy,
            cfg.cluster_count(),
            nu,
            gamma,
            seeds::derive(seed, seeds::tag("cluster")),
            &cfg.cluster.kmeans,
        )
        .map_err(Error::at_stage("cluster"))?;
        let router = RouterRegistry::default().get(&cfg.cluster.router)?;
        let routed: Vec<_> = emb.eval.iter().map(|p| router.route(&set, p)).collect();

        let preds: Vec<HealthLabel> = routed.iter().map(|r| classify(r.score)).collect();
        let cm = confusion(&emb.eval_labels, &preds)?;
        v.report.routed = Some(RoutedSummary {
            router: router.name().into(),
            nu,
            gamma,
            confusion: cm,
            f1: f1(&cm).ok(),
        });
        out.confusions.push(("per-cluster-routed".into(), cm));

        for c in 0..set.k() {
            let train: Vec<Vec<f64>> = set.members(c).iter().map(|&i| emb.train[i].clone()).collect();
            let idx: Vec<usize> = (0..emb.eval.len()).filter(|&i| routed[i].cluster == c).collect();
            let eval: Vec<Vec<f64>> = idx.iter().map(|&i| emb.eval[i].clone()).collect();
            let labels: Vec<HealthLabel> = idx.iter().map(|&i| emb.eval_labels[i]).collect();
            // small clusters cannot support the smallest ν values
            let floor = 1.0 / train.len() as f64;
            let mut nu_grid: Vec<f64> = cfg.svm.nu_grid.iter().map(|&nu| nu.max(floor)).collect();
            nu_grid.dedup();
            let grid = grid_search(&train, &eval, &labels, &nu_grid, &cfg.svm.gamma_grid, &cfg.svm.smo)
                .map_err(Error::at_stage("cluster-grid-search"))?;
            let model = match grid.best_cell() {
                Some(b) => train_ocsvm_with(&train, b.nu, b.gamma, &cfg.svm.smo).map_err(Error::at_stage("train"))?,
                None => set.models[c].clone(),
            };
            if let Some(cm) = grid.best_cell().and_then(|b| b.confusion()) {
                out.confusions.push((format!("cluster-{c}"), cm));
            }
            out.boundaries.push(boundary(&format!("cluster-{c}"), c, &set, &model, emb, cfg.experiment.boundary_resolution));
            let a = &set.attribution[c];
            v.report.clusters.push(ClusterReport {
                cluster: c,
                sensor: data.healthy.sensor_labels[a.sensor].clone(),
                correlation: a.correlation,
                n_train: train.len(),
                n_eval: eval.len(),
                n_eval_damaged: labels.iter().filter(|l| l.is_damaged()).count(),
                grid,
            });
        }
        out.scatters.push(scatter("per-cluster", emb, |p| {
            let r = router.route(&set, p);
            (r.score, r.cluster)
        }));
        out.report.variants.push(v.report);
        Ok(out)
    }
}

/// Scores `model` over the first two C-space axes, padded 10% beyond the
/// data, with the remaining axes held at the cluster centroid.
fn boundary(name: &str, cluster: usize, set: &ClusterSet, model: &OcsvmModel, emb: &Embedding, res: usize) -> BoundaryGrid {
    let all = || emb.train.iter().chain(&emb.eval);
    let span = |j: usize| {
        let (lo, hi) = all().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p[j]), hi.max(p[j])));
        let pad = 0.1 * (hi - lo).max(1e-9);
        (0..res)
            .map(|i| lo - pad + (hi - lo + 2.0 * pad) * i as f64 / (res - 1) as f64)
            .collect::<Vec<f64>>()
    };
    let xs = span(0);
    let ys = if emb.rank() > 1 { span(1) } else { vec![0.0] };
    let mut probe = set.centroids[cluster].clone();
    let mut scores = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            probe[0] = x;
            if probe.len() > 1 {
                probe[1] = y;
            }
            scores.push(model.decision(&probe));
        }
    }
    BoundaryGrid {
        name: name.into(),
        cluster,
        xs,
        ys,
        scores,
    }
}
