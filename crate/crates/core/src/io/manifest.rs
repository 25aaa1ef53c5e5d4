//! JSON dataset manifest.
//!
//! ```json
//! {
//!   "version": 1,
//!   "classes": [{"id": 0, "name": "void"}, {"id": 11, "name": "road"}],
//!   "groups":  [{"name": "lanes", "members": [1, 2, 3]}],
//!   "entries": [{"image_id": "f0001", "at_path": "at/f0001.atb",
//!                "pred_path": "pred/f0001.pgm", "label_path": "label/f0001.pgm",
//!                "width": 512, "height": 336}]
//! }
//! ```
//!
//! Paths are relative to the manifest's directory unless absolute.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{ClassGroup, ClassId, ClassSet};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ManifestError {
    #[error("manifest schema error: {0}")]
    SchemaError(String),
    #[error("duplicate image_id `{0}`")]
    DuplicateImageId(String),
    #[error("entry `{image_id}` references missing file {path}")]
    MissingFile { image_id: String, path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDecl {
    pub id: ClassId,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupDecl {
    name: String,
    members: Vec<ClassId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub image_id: String,
    pub at_path: String,
    pub pred_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_path: Option<String>,
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    version: u32,
    classes: Vec<ClassDecl>,
    #[serde(default)]
    groups: Vec<GroupDecl>,
    entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Manifest {
    pub version: u32,
    pub classes: Vec<ClassDecl>,
    pub groups: Vec<ClassGroup>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new(classes: Vec<ClassDecl>, groups: Vec<ClassGroup>, entries: Vec<ManifestEntry>) -> Result<Self, ManifestError> {
        let m = Manifest { version: MANIFEST_VERSION, classes, groups, entries };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), ManifestError> {
        let schema = |msg: String| Err(ManifestError::SchemaError(msg));
        if self.version != MANIFEST_VERSION {
            return schema(format!("unsupported version {}", self.version));
        }
        if self.classes.is_empty() {
            return schema("no classes declared".into());
        }
        let mut ids = HashSet::new();
        let mut names = HashSet::new();
        for c in &self.classes {
            if !ids.insert(c.id) {
                return schema(format!("class id {} declared twice", c.id));
            }
            if c.name.is_empty() || !names.insert(c.name.as_str()) {
                return schema(format!("class name `{}` is empty or duplicated", c.name));
            }
        }
        for g in &self.groups {
            if !names.insert(g.name()) {
                return schema(format!("group name `{}` collides with another class or group", g.name()));
            }
            if let Some(m) = g.members().iter().find(|m| !ids.contains(m)) {
                return schema(format!("group `{}` references undeclared class {m}", g.name()));
            }
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.image_id.as_str()) {
                return Err(ManifestError::DuplicateImageId(e.image_id.clone()));
            }
            if e.image_id.is_empty() || e.at_path.is_empty() || e.pred_path.is_empty() {
                return schema(format!("entry `{}` has an empty id or path", e.image_id));
            }
            if e.label_path.as_deref() == Some("") {
                return schema(format!("entry `{}` has an empty label_path", e.image_id));
            }
            if e.width == 0 || e.height == 0 {
                return schema(format!("entry `{}` has zero width or height", e.image_id));
            }
        }
        Ok(())
    }

    pub fn class_set(&self) -> ClassSet {
        ClassSet::new(self.classes.iter().map(|c| c.id))
    }

    pub fn class_name(&self, id: ClassId) -> Option<&str> {
        self.classes.iter().find(|c| c.id == id).map(|c| c.name.as_str())
    }

    pub fn class_by_name(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn group(&self, name: &str) -> Option<&ClassGroup> {
        self.groups.iter().find(|g| g.name() == name)
    }

    /// Fails with `MissingFile` if any referenced file does not exist under `base`.
    pub fn check_files(&self, base: &Path) -> Result<(), ManifestError> {
        for e in &self.entries {
            let paths = [Some(&e.at_path), Some(&e.pred_path), e.label_path.as_ref()];
            for p in paths.into_iter().flatten() {
                let full = resolve(base, p);
                if !full.is_file() {
                    return Err(ManifestError::MissingFile { image_id: e.image_id.clone(), path: full });
                }
            }
        }
        Ok(())
    }
}

pub fn resolve(base: &Path, rel: &str) -> PathBuf {
    let p = Path::new(rel);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn load_manifest(text: &str) -> Result<Manifest, ManifestError> {
    let raw: RawManifest = serde_json::from_str(text).map_err(|e| ManifestError::SchemaError(e.to_string()))?;
    let groups = raw
        .groups
        .into_iter()
        .map(|g| ClassGroup::new(g.name, g.members).map_err(|e| ManifestError::SchemaError(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let m = Manifest { version: raw.version, classes: raw.classes, groups, entries: raw.entries };
    m.validate()?;
    Ok(m)
}

pub fn write_manifest(m: &Manifest) -> String {
    let raw = RawManifest {
        version: m.version,
        classes: m.classes.clone(),
        groups: m.groups.iter().map(|g| GroupDecl { name: g.name().to_string(), members: g.members().to_vec() }).collect(),
        entries: m.entries.clone(),
    };
    let mut s = serde_json::to_string_pretty(&raw).expect("manifest serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const MINIMAL: &str = r#"{
        "version": 1,
        "classes": [{"id": 0, "name": "void"}, {"id": 11, "name": "road"}],
        "groups": [],
        "entries": [{"image_id": "a", "at_path": "a.atb", "pred_path": "a.pgm", "width": 4, "height": 2}]
    }"#;

    #[test]
    fn minimal_manifest() {
        let m = load_manifest(MINIMAL).unwrap();
        assert_eq!(m.entries.len(), 1);
        assert_eq!(m.entries[0].label_path, None);
        assert_eq!(m.class_by_name("road"), Some(ClassId(11)));
    }

    #[test]
    fn duplicate_image_id() {
        let text = MINIMAL.replace(
            r#""entries": ["#,
            r#""entries": [{"image_id": "a", "at_path": "b.atb", "pred_path": "b.pgm", "width": 4, "height": 2},"#,
        );
        assert_eq!(load_manifest(&text), Err(ManifestError::DuplicateImageId("a".into())));
    }

    #[test]
    fn group_with_undeclared_class() {
        let text = MINIMAL.replace(r#""groups": []"#, r#""groups": [{"name": "lanes", "members": [1, 2]}]"#);
        assert!(matches!(load_manifest(&text), Err(ManifestError::SchemaError(_))));
    }

    #[test]
    fn schema_violations() {
        for bad in [
            MINIMAL.replace(r#""version": 1"#, r#""version": 2"#),
            MINIMAL.replace(r#""width": 4"#, r#""width": 0"#),
            MINIMAL.replace(r#""id": 11"#, r#""id": 300"#),
            MINIMAL.replace(r#""name": "road""#, r#""name": "void""#),
            MINIMAL.replace(r#""groups": []"#, r#""groups": [{"name": "road", "members": [0]}]"#),
            MINIMAL.replace(r#""groups": []"#, r#""groups": [{"name": "g", "members": []}]"#),
            MINIMAL.replace(r#""pred_path": "a.pgm""#, r#""pred_path": """#),
            "not json".to_string(),
        ] {
            assert!(matches!(load_manifest(&bad), Err(ManifestError::SchemaError(_))), "{bad}");
        }
    }

    #[test]
    fn strict_file_check() {
        let m = load_manifest(MINIMAL).unwrap();
        let dir = std::env::temp_dir().join(format!("segsa-manifest-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        assert!(matches!(m.check_files(&dir), Err(ManifestError::MissingFile { .. })));
        std::fs::write(dir.join("a.atb"), b"").unwrap();
        std::fs::write(dir.join("a.pgm"), b"").unwrap();
        assert!(m.check_files(&dir).is_ok());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn round_trip(
            n_classes in 1u8..10,
            entries in proptest::collection::vec((1u32..600, 1u32..400, any::<bool>()), 0..6),
        ) {
            let classes: Vec<ClassDecl> = (0..n_classes).map(|i| ClassDecl { id: ClassId(i * 3), name: format!("c{i}") }).collect();
            let groups = vec![ClassGroup::new("all", classes.iter().map(|c| c.id).collect()).unwrap()];
            let entries = entries.into_iter().enumerate().map(|(i, (w, h, lab))| ManifestEntry {
                image_id: format!("img-{i}"),
                at_path: format!("at/{i}.atb"),
                pred_path: format!("pred/{i}.pgm"),
                label_path: lab.then(|| format!("label/{i}.pgm")),
                width: w,
                height: h,
            }).collect();
            let m = Manifest::new(classes, groups, entries).unwrap();
            let text = write_manifest(&m);
            prop_assert_eq!(load_manifest(&text).unwrap(), m);
        }
    }
}
