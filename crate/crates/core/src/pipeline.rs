//! Manifest-level workflow: fit class models on labelled images, score
//! unlabelled ones, and join scores with IoUs for analysis.
//!
//! Every random choice draws from a stream derived from the run seed, the
//! image id and the class, so results do not depend on image order or thread
//! count. Per-image work runs in parallel and is merged in manifest order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::aggregate::{image_class_sa, AggregateError, ScoreRow, ScoreTable};
use crate::analysis::{self, AnalysisError, CorrelationRow, SaLevel, SavingsPoint, SubsetSize};
use crate::heatmap::{self, HeatmapError, SaGrid};
use crate::io::atb::{parse_atb, AtTensorFile, AtbError};
use crate::io::manifest::{load_manifest, resolve, Manifest, ManifestEntry, ManifestError};
use crate::io::pgm::{parse_pgm_mask, write_pgm_mask, PgmError};
use crate::io::rng::{derive_seed, fnv1a, SplitMix64};
use crate::io::sampler::sample_pixels;
use crate::metrics::{load_model, save_model, Method, MetricError, ModelFileError, SaModel, DEFAULT_VAR_THRESHOLD};
use crate::par::*;
use crate::types::{ClassGroup, ClassId, ClassMask, PixelSample, ScoreRecord, TraceMatrix};

pub const DEFAULT_PIXELS_PER_CLASS_IMAGE: usize = 100;
pub const DEFAULT_ATS_PER_CLASS: usize = 10_000;
pub const DEFAULT_PIXELS_PER_CLASS_SCORING: usize = 1_000;

const STREAM_FIT: u64 = 1;
const STREAM_ATS: u64 = 2;
const STREAM_SCORE: u64 = 3;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Manifest { path: PathBuf, source: ManifestError },
    #[error("{path}: {source}")]
    Atb { path: PathBuf, source: AtbError },
    #[error("{path}: {source}")]
    Pgm { path: PathBuf, source: PgmError },
    #[error("{path}: {source}")]
    ModelFile { path: PathBuf, source: ModelFileError },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Aggregate(#[from] AggregateError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Heatmap(#[from] HeatmapError),
    #[error("{0}")]
    Data(String),
}

fn read(path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

/// A manifest together with the directory its relative paths resolve against.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: Manifest,
    pub base_dir: PathBuf,
}

impl Dataset {
    /// Loads and validates a manifest; `strict` also requires every referenced
    /// file to exist.
    pub fn load(path: &Path, strict: bool) -> Result<Self, PipelineError> {
        let text = String::from_utf8(read(path)?).map_err(|_| PipelineError::Data(format!("{}: manifest is not UTF-8", path.display())))?;
        let manifest = load_manifest(&text).map_err(|source| PipelineError::Manifest { path: path.to_path_buf(), source })?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if strict {
            manifest.check_files(&base_dir).map_err(|source| PipelineError::Manifest { path: path.to_path_buf(), source })?;
        }
        Ok(Dataset { manifest, base_dir })
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        resolve(&self.base_dir, rel)
    }

    pub fn load_atb(&self, e: &ManifestEntry) -> Result<AtTensorFile, PipelineError> {
        let path = self.path(&e.at_path);
        let t = parse_atb(&read(&path)?).map_err(|source| PipelineError::Atb { path: path.clone(), source })?;
        if (t.width(), t.height()) != (e.width, e.height) {
            return Err(PipelineError::Data(format!(
                "{}: tensor is {}x{}, manifest says {}x{}",
                path.display(),
                t.width(),
                t.height(),
                e.width,
                e.height
            )));
        }
        Ok(t)
    }

    fn load_mask(&self, rel: &str, e: &ManifestEntry) -> Result<ClassMask, PipelineError> {
        let path = self.path(rel);
        let classes = self.manifest.class_set();
        let m = parse_pgm_mask(&read(&path)?, Some(&classes)).map_err(|source| PipelineError::Pgm { path: path.clone(), source })?;
        if (m.width(), m.height()) != (e.width, e.height) {
            return Err(PipelineError::Data(format!(
                "{}: mask is {}x{}, manifest says {}x{}",
                path.display(),
                m.width(),
                m.height(),
                e.width,
                e.height
            )));
        }
        Ok(m)
    }

    pub fn load_pred(&self, e: &ManifestEntry) -> Result<ClassMask, PipelineError> {
        self.load_mask(&e.pred_path, e)
    }

    pub fn load_label(&self, e: &ManifestEntry) -> Result<Option<ClassMask>, PipelineError> {
        e.label_path.as_deref().map(|p| self.load_mask(p, e)).transpose()
    }

    /// Selected classes in manifest declaration order; all when `selection` is `None`.
    pub fn classes(&self, selection: Option<&[ClassId]>) -> Result<Vec<ClassId>, PipelineError> {
        if let Some(sel) = selection {
            if let Some(c) = sel.iter().find(|c| !self.manifest.class_set().contains(**c)) {
                return Err(PipelineError::Data(format!("class {c} is not declared in the manifest")));
            }
        }
        Ok(self.manifest.classes.iter().map(|c| c.id).filter(|c| selection.is_none_or(|s| s.contains(c))).collect())
    }

    pub fn class_name(&self, c: ClassId) -> String {
        self.manifest.class_name(c).map(str::to_string).unwrap_or_else(|| c.to_string())
    }
}

fn image_seed(base: u64, stream: u64, image_id: &str, class: ClassId) -> u64 {
    derive_seed(base, &[stream, fnv1a(image_id.as_bytes()), class.get() as u64])
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub method: Method,
    pub seed: u64,
    pub pixels_per_class_image: usize,
    pub ats_per_class: usize,
    pub classes: Option<Vec<ClassId>>,
    pub var_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            method: Method::Mdsa,
            seed: 0,
            pixels_per_class_image: DEFAULT_PIXELS_PER_CLASS_IMAGE,
            ats_per_class: DEFAULT_ATS_PER_CLASS,
            classes: None,
            var_threshold: DEFAULT_VAR_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitStatus {
    Fitted,
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct ClassFit {
    pub class: ClassId,
    pub ats_collected: usize,
    pub ats_used: usize,
    pub status: FitStatus,
    pub model: Option<SaModel>,
}

/// Fits one model per selected class from label-mask pixel samples.
///
/// Each labelled image contributes up to `pixels_per_class_image` traces per
/// class; the pooled traces are then subsampled to `ats_per_class`. Classes
/// that end up with too few traces, or whose fit fails, are reported as
/// skipped rather than failing the run.
pub fn fit(data: &Dataset, cfg: &FitConfig) -> Result<Vec<ClassFit>, PipelineError> {
    let classes = data.classes(cfg.classes.as_deref())?;
    let per_image: Vec<(usize, BTreeMap<ClassId, Vec<f64>>)> = data
        .manifest
        .entries
        .par_iter()
        .map(|e| -> Result<_, PipelineError> {
            let label = data
                .load_label(e)?
                .ok_or_else(|| PipelineError::Data(format!("entry `{}` has no label_path; fitting needs labels", e.image_id)))?;
            let atb = data.load_atb(e)?;
            let mut rows = BTreeMap::new();
            for &c in &classes {
                let samples = sample_pixels(&label, c, cfg.pixels_per_class_image, image_seed(cfg.seed, STREAM_FIT, &e.image_id, c));
                if let Some(m) = atb.gather(&samples).map_err(|source| PipelineError::Atb { path: data.path(&e.at_path), source })? {
                    rows.insert(c, m.into_vec());
                }
            }
            Ok((atb.d() as usize, rows))
        })
        .collect::<Result<_, _>>()?;

    let d = per_image.first().map(|(d, _)| *d).unwrap_or(0);
    if let Some((i, (other, _))) = per_image.iter().enumerate().find(|(_, (x, _))| *x != d) {
        return Err(PipelineError::Data(format!("entry `{}` has trace length {other}, expected {d}", data.manifest.entries[i].image_id)));
    }

    let pooled: Vec<(ClassId, Vec<f64>)> = classes
        .iter()
        .map(|&c| {
            let mut all = Vec::new();
            for (_, rows) in &per_image {
                if let Some(r) = rows.get(&c) {
                    all.extend_from_slice(r);
                }
            }
            (c, all)
        })
        .collect();

    let fits = pooled
        .par_iter()
        .map(|(c, all)| {
            let collected = all.len().checked_div(d).unwrap_or(0);
            let mut fit = ClassFit { class: *c, ats_collected: collected, ats_used: 0, status: FitStatus::Fitted, model: None };
            if collected < 2 {
                fit.status = FitStatus::Skipped(format!("only {collected} trace(s) collected, need at least 2"));
                return fit;
            }
            let traces = subsample_rows(all, d, cfg.ats_per_class, derive_seed(cfg.seed, &[STREAM_ATS, c.get() as u64]));
            fit.ats_used = traces.n();
            match SaModel::fit(cfg.method, &traces, *c, cfg.var_threshold) {
                Ok(m) => fit.model = Some(m),
                Err(e) => fit.status = FitStatus::Skipped(e.to_string()),
            }
            fit
        })
        .collect();
    Ok(fits)
}

/// Keeps `budget` of the rows, chosen uniformly without replacement and
/// kept in their original order.
fn subsample_rows(flat: &[f64], d: usize, budget: usize, seed: u64) -> TraceMatrix {
    let n = flat.len() / d;
    if n <= budget {
        return TraceMatrix::from_flat(n, d, flat.to_vec()).expect("traces from a validated tensor");
    }
    let mut idx: Vec<usize> = (0..n).collect();
    SplitMix64::new(seed).partial_shuffle(&mut idx, budget);
    let mut keep = idx[..budget].to_vec();
    keep.sort_unstable();
    let mut out = Vec::with_capacity(budget * d);
    for i in keep {
        out.extend_from_slice(&flat[i * d..(i + 1) * d]);
    }
    TraceMatrix::from_flat(budget, d, out).expect("subset of valid traces")
}

pub fn model_file_name(method: Method, class: ClassId) -> String {
    format!("class_{}.{}.sam", class.get(), method)
}

pub fn save_models(dir: &Path, fits: &[ClassFit]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut written = Vec::new();
    for f in fits {
        if let Some(m) = &f.model {
            let path = dir.join(model_file_name(m.method(), m.class()));
            write_file(&path, &save_model(m))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// `class,name,ats_collected,ats_used,status`
pub fn fit_report_csv(data: &Dataset, fits: &[ClassFit]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["class", "name", "ats_collected", "ats_used", "status"]).expect("in-memory");
    for f in fits {
        let status = match &f.status {
            FitStatus::Fitted => "fitted".to_string(),
            FitStatus::Skipped(why) => format!("skipped: {why}"),
        };
        w.write_record([f.class.to_string(), data.class_name(f.class), f.ats_collected.to_string(), f.ats_used.to_string(), status])
            .expect("in-memory");
    }
    w.into_inner().expect("in-memory")
}

/// Loads every `class_<id>.<method>.sam` present in `dir` for the declared classes.
pub fn load_models(dir: &Path, data: &Dataset, method: Method) -> Result<BTreeMap<ClassId, SaModel>, PipelineError> {
    let mut models = BTreeMap::new();
    for c in data.manifest.class_set().iter() {
        let path = dir.join(model_file_name(method, c));
        if !path.is_file() {
            continue;
        }
        let m = load_model(&read(&path)?).map_err(|source| PipelineError::ModelFile { path: path.clone(), source })?;
        if m.class() != c || m.method() != method {
            return Err(PipelineError::Data(format!("{}: file holds a {} model for class {}", path.display(), m.method(), m.class())));
        }
        models.insert(c, m);
    }
    Ok(models)
}

#[derive(Debug, Clone)]
pub struct ScoreConfig {
    pub seed: u64,
    pub pixels_per_class_scoring: usize,
    pub classes: Option<Vec<ClassId>>,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig { seed: 0, pixels_per_class_scoring: DEFAULT_PIXELS_PER_CLASS_SCORING, classes: None }
    }
}

/// Per-pixel SA of one class in one image.
#[derive(Debug, Clone)]
pub struct PixelScores {
    pub class: ClassId,
    pub samples: Vec<PixelSample>,
    pub sa: Vec<f64>,
}

/// Scores the predicted classes of one image. Reads only the prediction mask
/// and the trace tensor. Classes without a model are returned in `missing`.
pub fn score_image(
    data: &Dataset,
    e: &ManifestEntry,
    models: &BTreeMap<ClassId, SaModel>,
    cfg: &ScoreConfig,
) -> Result<(Vec<PixelScores>, Vec<ClassId>), PipelineError> {
    let pred = data.load_pred(e)?;
    let atb = data.load_atb(e)?;
    let mut present = [false; 256];
    pred.pixels().iter().for_each(|&p| present[p as usize] = true);
    let mut scores = Vec::new();
    let mut missing = Vec::new();
    for c in (0..=255u8).filter(|&c| present[c as usize]).map(ClassId) {
        if cfg.classes.as_ref().is_some_and(|s| !s.contains(&c)) {
            continue;
        }
        let Some(model) = models.get(&c) else {
            missing.push(c);
            continue;
        };
        if model.d() != atb.d() as usize {
            return Err(PipelineError::Data(format!(
                "entry `{}`: trace length {} does not match the class {c} model ({})",
                e.image_id,
                atb.d(),
                model.d()
            )));
        }
        let samples = sample_pixels(&pred, c, cfg.pixels_per_class_scoring, image_seed(cfg.seed, STREAM_SCORE, &e.image_id, c));
        let Some(traces) = atb.gather(&samples).map_err(|source| PipelineError::Atb { path: data.path(&e.at_path), source })? else {
            continue;
        };
        let sa = model.score_batch(&traces)?;
        scores.push(PixelScores { class: c, samples, sa });
    }
    Ok((scores, missing))
}

#[derive(Debug)]
pub struct ScoreOutput {
    pub table: ScoreTable,
    pub warnings: Vec<String>,
}

pub fn score(data: &Dataset, models: &BTreeMap<ClassId, SaModel>, cfg: &ScoreConfig) -> Result<ScoreOutput, PipelineError> {
    let per_image: Vec<(Vec<PixelScores>, Vec<ClassId>)> =
        data.manifest.entries.par_iter().map(|e| score_image(data, e, models, cfg)).collect::<Result<_, _>>()?;
    let mut table = ScoreTable::new();
    let mut missing: BTreeMap<ClassId, usize> = BTreeMap::new();
    for (e, (scores, miss)) in data.manifest.entries.iter().zip(per_image) {
        for s in scores {
            let sa = image_class_sa(&s.sa)?;
            table.push(ScoreRecord::new(e.image_id.clone(), s.class, sa, s.sa.len()).map_err(AggregateError::from)?)?;
        }
        for c in miss {
            *missing.entry(c).or_default() += 1;
        }
    }
    table.compute_all_stats();
    let warnings =
        missing.into_iter().map(|(c, n)| format!("no model for class {c} ({}); skipped it in {n} image(s)", data.class_name(c))).collect();
    Ok(ScoreOutput { table, warnings })
}

/// What a score row's `class_or_group` names.
#[derive(Debug, Clone)]
pub enum Target {
    Class(ClassId),
    Group(ClassGroup),
}

impl Target {
    fn matches(&self, mask_value: u8) -> bool {
        match self {
            Target::Class(c) => c.get() == mask_value,
            Target::Group(g) => g.contains(ClassId(mask_value)),
        }
    }
}

/// Image SA values of one class or group.
#[derive(Debug, Clone)]
pub struct TargetScores {
    pub name: String,
    pub target: Target,
    pub scores: ById,
}

/// (image id, value) pairs.
pub type ById = Vec<(String, f64)>;

/// IoU keyed by (target name, image id).
pub type IouMap = HashMap<(String, String), f64>;

/// A named savings curve.
pub type Curve = (String, Vec<SavingsPoint>);

/// Score rows grouped by target, in manifest order: classes first, then groups.
pub fn targets(data: &Dataset, rows: &[ScoreRow]) -> Result<Vec<TargetScores>, PipelineError> {
    let mut by_name: HashMap<&str, Vec<(String, f64)>> = HashMap::new();
    for r in rows {
        let known = match r {
            ScoreRow::Class { class, .. } => data.manifest.class_by_name(class).is_some(),
            ScoreRow::Group { group, .. } => data.manifest.group(group).is_some(),
        };
        if !known {
            return Err(PipelineError::Data(format!("score row names `{}`, which the manifest does not declare", r.target())));
        }
        by_name.entry(r.target()).or_default().push((r.image_id().to_string(), r.sa()));
    }
    let mut out = Vec::new();
    for c in &data.manifest.classes {
        if let Some(v) = by_name.remove(c.name.as_str()) {
            out.push(TargetScores { name: c.name.clone(), target: Target::Class(c.id), scores: v });
        }
    }
    for g in &data.manifest.groups {
        if let Some(v) = by_name.remove(g.name()) {
            out.push(TargetScores { name: g.name().to_string(), target: Target::Group(g.clone()), scores: v });
        }
    }
    Ok(out)
}

/// Class or group IoU for every scored (target, image) pair whose image has a
/// label mask. Images without labels are reported in the second element.
pub fn compute_ious(data: &Dataset, targets: &[TargetScores]) -> Result<(IouMap, Vec<String>), PipelineError> {
    let wanted: HashSet<&str> = targets.iter().flat_map(|t| t.scores.iter().map(|(id, _)| id.as_str())).collect();
    let entries: Vec<&ManifestEntry> = data.manifest.entries.iter().filter(|e| wanted.contains(e.image_id.as_str())).collect();
    let per_image: Vec<Option<IouMap>> = entries
        .par_iter()
        .map(|e| -> Result<_, PipelineError> {
            let Some(label) = data.load_label(e)? else {
                return Ok(None);
            };
            let pred = data.load_pred(e)?;
            let mut out = IouMap::new();
            for t in targets {
                if t.scores.iter().any(|(id, _)| id == &e.image_id) {
                    let iou = match &t.target {
                        Target::Class(c) => analysis::class_iou(&pred, &label, *c)?,
                        Target::Group(g) => analysis::group_iou(&pred, &label, g)?,
                    };
                    out.insert((t.name.clone(), e.image_id.clone()), iou);
                }
            }
            Ok(Some(out))
        })
        .collect::<Result<_, _>>()?;
    let mut ious = HashMap::new();
    let mut unlabelled = Vec::new();
    for (e, r) in entries.iter().zip(per_image) {
        match r {
            Some(v) => ious.extend(v),
            None => unlabelled.push(e.image_id.clone()),
        }
    }
    Ok((ious, unlabelled))
}

/// Scores and IoUs of one target restricted to images that have both.
fn paired(t: &TargetScores, ious: &IouMap) -> (ById, ById) {
    let mut scores = Vec::new();
    let mut matched = Vec::new();
    for (id, sa) in &t.scores {
        if let Some(iou) = ious.get(&(t.name.clone(), id.clone())) {
            scores.push((id.clone(), *sa));
            matched.push((id.clone(), *iou));
        }
    }
    (scores, matched)
}

#[derive(Debug, Clone, Copy)]
pub enum PValueMode {
    TApprox,
    Permutation { permutations: usize, seed: u64 },
}

pub fn correlate(data: &Dataset, rows: &[ScoreRow], mode: PValueMode) -> Result<(Vec<CorrelationRow>, Vec<String>), PipelineError> {
    let targets = targets(data, rows)?;
    let (ious, unlabelled) = compute_ious(data, &targets)?;
    let mut warnings = Vec::new();
    if !unlabelled.is_empty() {
        warnings.push(format!("{} scored image(s) have no label mask and were left out", unlabelled.len()));
    }
    let mut out = Vec::new();
    for t in &targets {
        let (s, i) = paired(t, &ious);
        if s.len() < 3 {
            warnings.push(format!("`{}`: only {} labelled image(s), need 3 for a correlation", t.name, s.len()));
            continue;
        }
        let x: Vec<f64> = s.iter().map(|v| v.1).collect();
        let y: Vec<f64> = i.iter().map(|v| v.1).collect();
        let c = match mode {
            PValueMode::TApprox => analysis::spearman(&x, &y)?,
            PValueMode::Permutation { permutations, seed } => analysis::spearman_permutation(&x, &y, permutations, seed)?,
        };
        out.push(CorrelationRow { target: t.name.clone(), n_images: s.len(), rho: c.rho, p: c.p });
    }
    Ok((out, warnings))
}

pub fn simulate(
    data: &Dataset,
    rows: &[ScoreRow],
    fractions: &[f64],
    thresholds: &[f64],
) -> Result<(Vec<Curve>, Vec<String>), PipelineError> {
    let targets = targets(data, rows)?;
    let (ious, unlabelled) = compute_ious(data, &targets)?;
    let mut warnings = Vec::new();
    if !unlabelled.is_empty() {
        warnings.push(format!("{} scored image(s) have no label mask and were left out", unlabelled.len()));
    }
    let curves = targets
        .par_iter()
        .map(|t| {
            let (s, i) = paired(t, &ious);
            analysis::simulate_savings(&s, &i, fractions, thresholds).map(|p| (t.name.clone(), p))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((curves, warnings))
}

#[derive(Debug, Clone)]
pub struct SelectConfig {
    pub target: String,
    pub level: SaLevel,
    pub size: SubsetSize,
    /// Base count the named sizes are fractions of; defaults to the number of
    /// candidate images.
    pub base: Option<usize>,
    pub seed: u64,
    /// Keep only images whose label mask has more than this many target pixels.
    pub min_label_pixels: Option<usize>,
}

pub fn select(data: &Dataset, rows: &[ScoreRow], cfg: &SelectConfig) -> Result<analysis::RetrainSelection, PipelineError> {
    let targets = targets(data, rows)?;
    let TargetScores { target, scores, .. } = targets
        .into_iter()
        .find(|t| t.name == cfg.target)
        .ok_or_else(|| PipelineError::Data(format!("no score rows for `{}`", cfg.target)))?;
    let scores = match cfg.min_label_pixels {
        None => scores,
        Some(min) => {
            let entries: HashMap<&str, &ManifestEntry> = data.manifest.entries.iter().map(|e| (e.image_id.as_str(), e)).collect();
            let keep: Vec<bool> = scores
                .par_iter()
                .map(|(id, _)| -> Result<bool, PipelineError> {
                    let e = entries.get(id.as_str()).ok_or_else(|| PipelineError::Data(format!("image `{id}` is not in the manifest")))?;
                    let label =
                        data.load_label(e)?.ok_or_else(|| PipelineError::Data(format!("pixel filter needs a label mask for `{id}`")))?;
                    Ok(label.pixels().iter().filter(|&&p| target.matches(p)).count() > min)
                })
                .collect::<Result<_, _>>()?;
            scores.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect()
        }
    };
    let base = cfg.base.unwrap_or(scores.len());
    Ok(analysis::select_retrain(&scores, cfg.level, cfg.size, base, cfg.seed)?)
}

#[derive(Debug, Clone)]
pub struct HeatmapConfig {
    pub score: ScoreConfig,
    pub range: Option<(f64, f64)>,
    pub threshold: Option<f64>,
}

/// One rendered heatmap (and optional threshold mask) per (image, class).
#[derive(Debug)]
pub struct HeatmapFile {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

pub fn heatmaps(data: &Dataset, models: &BTreeMap<ClassId, SaModel>, cfg: &HeatmapConfig) -> Result<Vec<HeatmapFile>, PipelineError> {
    let per_image: Vec<Vec<PixelScores>> =
        data.manifest.entries.par_iter().map(|e| score_image(data, e, models, &cfg.score).map(|(s, _)| s)).collect::<Result<_, _>>()?;
    let mut ranges: BTreeMap<ClassId, (f64, f64)> = BTreeMap::new();
    if let Some(r) = cfg.range {
        for c in models.keys() {
            ranges.insert(*c, r);
        }
    } else {
        let mut by_class: BTreeMap<ClassId, Vec<f64>> = BTreeMap::new();
        for s in per_image.iter().flatten() {
            by_class.entry(s.class).or_default().extend_from_slice(&s.sa);
        }
        for (c, v) in by_class {
            ranges.insert(c, heatmap::default_range(&v).expect("non-empty"));
        }
    }
    let mut files = Vec::new();
    for (e, scores) in data.manifest.entries.iter().zip(&per_image) {
        for s in scores {
            let grid = SaGrid::from_samples(e.width, e.height, &s.samples, &s.sa)?;
            let (lo, hi) = ranges[&s.class];
            files.push(HeatmapFile {
                file_name: format!("{}.{}.sa.pgm", e.image_id, s.class),
                bytes: heatmap::render_heatmap(&grid, lo, hi)?,
            });
            if let Some(t) = cfg.threshold {
                files.push(HeatmapFile {
                    file_name: format!("{}.{}.mask.pgm", e.image_id, s.class),
                    bytes: write_pgm_mask(&heatmap::threshold_mask(&grid, t)),
                });
            }
        }
    }
    Ok(files)
}
