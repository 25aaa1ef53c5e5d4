//! Pixel SA to image-level class SA, and z-scored class-group SA.
//!
//! Standardisation uses the scored batch as its population with the
//! population (n-divisor) standard deviation; a class whose images all share
//! one SA value standardises to zeros.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use thiserror::Error;

use crate::types::{ClassGroup, ClassId, ScoreRecord, TypeError};

#[derive(Debug, Error)]
pub enum AggregateError {
    #[error("no pixel SA values to aggregate")]
    EmptyPixelSet,
    #[error("non-finite pixel SA value")]
    NonFinite,
    #[error("no score records for class {0}")]
    NoRecordsForClass(ClassId),
    #[error("group `{0}` has no member present in the image")]
    NoMemberPresent(String),
    #[error("duplicate score record for image `{image_id}`, class {class}")]
    DuplicateRecord { image_id: String, class: ClassId },
    #[error(transparent)]
    Record(#[from] TypeError),
    #[error("score CSV: {0}")]
    Csv(String),
}

impl From<csv::Error> for AggregateError {
    fn from(e: csv::Error) -> Self {
        AggregateError::Csv(e.to_string())
    }
}

/// Mean SA over the sampled pixels of one class in one image.
pub fn image_class_sa(pixel_sa: &[f64]) -> Result<f64, AggregateError> {
    if pixel_sa.is_empty() {
        return Err(AggregateError::EmptyPixelSet);
    }
    if pixel_sa.iter().any(|v| !v.is_finite()) {
        return Err(AggregateError::NonFinite);
    }
    Ok(pixel_sa.iter().sum::<f64>() / pixel_sa.len() as f64)
}

/// Mean z-score of the group members present in an image.
pub fn image_group_sa(z_by_class: &HashMap<ClassId, f64>, group: &ClassGroup) -> Result<f64, AggregateError> {
    let present: Vec<f64> = group.members().iter().filter_map(|c| z_by_class.get(c).copied()).collect();
    if present.is_empty() {
        return Err(AggregateError::NoMemberPresent(group.name().to_string()));
    }
    Ok(present.iter().sum::<f64>() / present.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassStats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
}

impl ClassStats {
    pub fn z(&self, sa: f64) -> f64 {
        if self.std > 0.0 {
            (sa - self.mean) / self.std
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupScoreRecord {
    pub image_id: String,
    pub group: String,
    pub sa_z: f64,
    pub pixel_count: usize,
}

/// Image class scores of one batch, at most one per `(image_id, class)`.
#[derive(Debug, Clone, Default)]
pub struct ScoreTable {
    records: Vec<ScoreRecord>,
    index: HashSet<(String, ClassId)>,
    stats: BTreeMap<ClassId, ClassStats>,
}

impl ScoreTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_records(records: impl IntoIterator<Item = ScoreRecord>) -> Result<Self, AggregateError> {
        let mut t = Self::new();
        for r in records {
            t.push(r)?;
        }
        Ok(t)
    }

    pub fn push(&mut self, record: ScoreRecord) -> Result<(), AggregateError> {
        if !self.index.insert((record.image_id.clone(), record.class)) {
            return Err(AggregateError::DuplicateRecord { image_id: record.image_id, class: record.class });
        }
        let class = record.class;
        self.records.push(record);
        self.stats.remove(&class);
        Ok(())
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn classes(&self) -> Vec<ClassId> {
        let set: std::collections::BTreeSet<ClassId> = self.records.iter().map(|r| r.class).collect();
        set.into_iter().collect()
    }

    pub fn get(&self, image_id: &str, class: ClassId) -> Option<&ScoreRecord> {
        self.records.iter().find(|r| r.class == class && r.image_id == image_id)
    }

    /// Population mean and standard deviation of a class's image SA values.
    pub fn class_stats(&self, class: ClassId) -> Result<ClassStats, AggregateError> {
        if let Some(s) = self.stats.get(&class) {
            return Ok(*s);
        }
        compute_stats(self.records.iter().filter(|r| r.class == class).map(|r| r.sa)).ok_or(AggregateError::NoRecordsForClass(class))
    }

    /// Caches stats for every class present; later lookups reuse them.
    pub fn compute_all_stats(&mut self) {
        for c in self.classes() {
            if let Ok(s) = self.class_stats(c) {
                self.stats.insert(c, s);
            }
        }
    }

    /// `(image_id, z)` for every image containing `class`, in record order.
    pub fn standardize(&self, class: ClassId) -> Result<Vec<(String, f64)>, AggregateError> {
        let stats = self.class_stats(class)?;
        Ok(self.records.iter().filter(|r| r.class == class).map(|r| (r.image_id.clone(), stats.z(r.sa))).collect())
    }

    /// Group SA for every image with at least one member class scored, in
    /// order of first appearance.
    pub fn group_scores(&self, group: &ClassGroup) -> Vec<GroupScoreRecord> {
        let stats: HashMap<ClassId, ClassStats> =
            group.members().iter().filter_map(|&c| self.class_stats(c).ok().map(|s| (c, s))).collect();
        let mut order: Vec<&str> = Vec::new();
        let mut per_image: HashMap<&str, (HashMap<ClassId, f64>, usize)> = HashMap::new();
        for r in self.records.iter().filter(|r| group.contains(r.class)) {
            let entry = per_image.entry(r.image_id.as_str()).or_insert_with(|| {
                order.push(r.image_id.as_str());
                (HashMap::new(), 0)
            });
            entry.0.insert(r.class, stats[&r.class].z(r.sa));
            entry.1 += r.pixel_count;
        }
        order
            .into_iter()
            .map(|id| {
                let (z, pixels) = &per_image[id];
                GroupScoreRecord {
                    image_id: id.to_string(),
                    group: group.name().to_string(),
                    sa_z: image_group_sa(z, group).expect("image has a member by construction"),
                    pixel_count: *pixels,
                }
            })
            .collect()
    }
}

fn compute_stats(values: impl Iterator<Item = f64>) -> Option<ClassStats> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Some(ClassStats { n: v.len(), mean, std: var.sqrt() })
}

/// One row of the score CSV.
#[derive(Debug, Clone, PartialEq)]
pub enum ScoreRow {
    Class { image_id: String, class: String, sa: f64, z: f64, pixel_count: usize },
    Group { image_id: String, group: String, sa_z: f64, pixel_count: usize },
}

impl ScoreRow {
    pub fn image_id(&self) -> &str {
        match self {
            ScoreRow::Class { image_id, .. } | ScoreRow::Group { image_id, .. } => image_id,
        }
    }

    pub fn target(&self) -> &str {
        match self {
            ScoreRow::Class { class, .. } => class,
            ScoreRow::Group { group, .. } => group,
        }
    }

    /// The value rankings use: raw SA for classes, mean z for groups.
    pub fn sa(&self) -> f64 {
        match self {
            ScoreRow::Class { sa, .. } => *sa,
            ScoreRow::Group { sa_z, .. } => *sa_z,
        }
    }
}

pub const SCORE_HEADER: [&str; 6] = ["image_id", "class_or_group", "kind", "sa", "z", "pixel_count"];

/// Score CSV rows: class rows in table order followed by each group's rows.
/// Group rows carry the mean z-score in `sa` and leave `z` empty.
pub fn score_rows(table: &ScoreTable, groups: &[ClassGroup], class_name: impl Fn(ClassId) -> String) -> Vec<ScoreRow> {
    let mut rows = Vec::new();
    for r in table.records() {
        let z = table.class_stats(r.class).map(|s| s.z(r.sa)).unwrap_or(0.0);
        rows.push(ScoreRow::Class { image_id: r.image_id.clone(), class: class_name(r.class), sa: r.sa, z, pixel_count: r.pixel_count });
    }
    for g in groups {
        rows.extend(table.group_scores(g).into_iter().map(|gr| ScoreRow::Group {
            image_id: gr.image_id,
            group: gr.group,
            sa_z: gr.sa_z,
            pixel_count: gr.pixel_count,
        }));
    }
    rows
}

pub fn write_score_csv<W: Write>(out: W, rows: &[ScoreRow]) -> Result<(), AggregateError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCORE_HEADER)?;
    for row in rows {
        match row {
            ScoreRow::Class { image_id, class, sa, z, pixel_count } => {
                w.write_record([image_id.as_str(), class, "class", &crate::fmt_num(*sa), &crate::fmt_num(*z), &pixel_count.to_string()])?
            }
            ScoreRow::Group { image_id, group, sa_z, pixel_count } => {
                w.write_record([image_id.as_str(), group, "group", &crate::fmt_num(*sa_z), "", &pixel_count.to_string()])?
            }
        }
    }
    w.flush().map_err(|e| AggregateError::Csv(e.to_string()))?;
    Ok(())
}

pub fn read_score_csv<R: Read>(input: R) -> Result<Vec<ScoreRow>, AggregateError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SCORE_HEADER) {
        return Err(AggregateError::Csv(format!("unexpected header {:?}", header)));
    }
    let parse_f = |s: &str, what: &str| s.parse::<f64>().map_err(|_| AggregateError::Csv(format!("bad {what} `{s}`")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let pixel_count = rec[5].parse().map_err(|_| AggregateError::Csv(format!("bad pixel_count `{}`", &rec[5])))?;
        rows.push(match &rec[2] {
            "class" => ScoreRow::Class {
                image_id: rec[0].to_string(),
                class: rec[1].to_string(),
                sa: parse_f(&rec[3], "sa")?,
                z: parse_f(&rec[4], "z")?,
                pixel_count,
            },
            "group" => {
                ScoreRow::Group { image_id: rec[0].to_string(), group: rec[1].to_string(), sa_z: parse_f(&rec[3], "sa")?, pixel_count }
            }
            k => return Err(AggregateError::Csv(format!("unknown kind `{k}`"))),
        });
    }
    Ok(rows)
}

/// Persisted standardisation statistics: `class,n_images,mean,std`.
pub fn write_stats_csv<W: Write>(out: W, table: &ScoreTable, class_name: impl Fn(ClassId) -> String) -> Result<(), AggregateError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["class", "n_images", "mean", "std"])?;
    for c in table.classes() {
        let s = table.class_stats(c)?;
        w.write_record([class_name(c), s.n.to_string(), crate::fmt_num(s.mean), crate::fmt_num(s.std)])?;
    }
    w.flush().map_err(|e| AggregateError::Csv(e.to_string()))?;
    Ok(())
}
