//! Dataset schema, loading with validation, annotation checks and the
//! synthetic fixture generator.
//!
//! A dataset is a JSONL file: a header line carrying the format version and
//! the layout, then one MDP record per line.

mod generate;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{
    fixture_file_name, generate_fixtures, random_scatter_scene, random_tower_scene, write_fixtures, FixtureOptions,
};

use crate::dsl::Program;
use crate::env::{Condition, Context, EnvConfig};
use crate::scene::{Layout, Scene, SceneJson, Variant};

pub const FORMAT_NAME: &str = "lilgym-mdp";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Name of a CMDP, e.g. `tower-scratch`.
pub fn cmdp_name(variant: Variant, condition: Condition) -> String {
    format!("{variant}-{condition}")
}

/// One MDP: a context plus the initial-state distribution.
#[derive(Clone, Debug)]
pub struct MdpSpec {
    pub id: String,
    pub variant: Variant,
    pub condition: Condition,
    pub split: Split,
    pub layout: Layout,
    pub context: Context,
    /// Empty for scratch MDPs.
    pub initial_scenes: Vec<Scene>,
    /// Scenes the statement was written for; used by the image-equality reward.
    pub goal_scenes: Vec<Scene>,
}

impl MdpSpec {
    pub fn cmdp(&self) -> String {
        cmdp_name(self.variant, self.condition)
    }

    pub fn env_config(&self) -> EnvConfig {
        EnvConfig {
            layout: self.layout,
            ..EnvConfig::new(self.variant, self.condition)
        }
    }

    /// Initial states as a list: the empty scene for scratch.
    pub fn start_scenes(&self) -> Vec<Scene> {
        match self.condition {
            Condition::Scratch => vec![Scene::empty(self.variant, self.layout)],
            Condition::FlipIt => self.initial_scenes.clone(),
        }
    }

    pub fn goal_fingerprints(&self) -> HashSet<crate::scene::Fingerprint> {
        self.goal_scenes.iter().map(Scene::fingerprint).collect()
    }

    pub fn to_record(&self) -> MdpRecord {
        MdpRecord {
            id: self.id.clone(),
            variant: self.variant,
            condition: self.condition,
            split: self.split,
            statement: self.context.statement.clone(),
            program: self.context.program.source().to_string(),
            target: self.context.target,
            initial_scenes: self.initial_scenes.iter().map(Scene::to_json).collect(),
            goal_scenes: self.goal_scenes.iter().map(Scene::to_json).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub format: String,
    pub version: u32,
    pub layout: Layout,
}

impl Default for DatasetHeader {
    fn default() -> Self {
        DatasetHeader {
            format: FORMAT_NAME.to_string(),
            version: FORMAT_VERSION,
            layout: Layout::default(),
        }
    }
}

/// Wire form of one MDP.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MdpRecord {
    pub id: String,
    pub variant: Variant,
    pub condition: Condition,
    pub split: Split,
    pub statement: String,
    pub program: String,
    pub target: bool,
    #[serde(default)]
    pub initial_scenes: Vec<SceneJson>,
    #[serde(default)]
    pub goal_scenes: Vec<SceneJson>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Error)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecordError {
    #[error("malformed JSON: {message}")]
    Parse { message: String },
    #[error("bad header: {message}")]
    Header { message: String },
    #[error("program error{}: {message}", position.map(|p| format!(" at {p}")).unwrap_or_default())]
    Program { position: Option<usize>, message: String },
    #[error("{field}[{index}]: {message}")]
    Scene {
        field: &'static str,
        index: usize,
        message: String,
    },
    #[error("{message}")]
    TargetConsistency { message: String },
    #[error("duplicate id {id}")]
    DuplicateId { id: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub id: Option<String>,
    pub error: RecordError,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}", self.line)?;
        if let Some(id) = &self.id {
            write!(f, " ({id})")?;
        }
        write!(f, ": {}", self.error)
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{} invalid record(s); first: {}", .0.len(), .0[0])]
    Invalid(Vec<LineError>),
}

impl LoadError {
    pub fn line_errors(&self) -> &[LineError] {
        match self {
            LoadError::Invalid(v) => v,
            LoadError::Io { .. } => &[],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub header: DatasetHeader,
    pub mdps: Vec<MdpSpec>,
}

/// Per-CMDP counts in each split: MDPs and initial states.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub rows: BTreeMap<String, BTreeMap<Split, SplitCounts>>,
    pub total_mdps: usize,
    pub total_initial_states: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub mdps: usize,
    pub initial_states: usize,
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<16}", "cmdp")?;
        for s in Split::ALL {
            write!(f, " {:>10} {:>10}", format!("{s}.mdps"), format!("{s}.init"))?;
        }
        writeln!(f)?;
        for (cmdp, splits) in &self.rows {
            write!(f, "{cmdp:<16}")?;
            for s in Split::ALL {
                let c = splits.get(&s).copied().unwrap_or_default();
                write!(f, " {:>10} {:>10}", c.mdps, c.initial_states)?;
            }
            writeln!(f)?;
        }
        write!(f, "total: {} mdps, {} initial states", self.total_mdps, self.total_initial_states)
    }
}

impl Dataset {
    pub fn get(&self, id: &str) -> Option<&MdpSpec> {
        self.mdps.iter().find(|m| m.id == id)
    }

    pub fn summary(&self) -> DatasetSummary {
        let mut s = DatasetSummary::default();
        for m in &self.mdps {
            let c = s.rows.entry(m.cmdp()).or_default().entry(m.split).or_default();
            let init = m.start_scenes().len();
            c.mdps += 1;
            c.initial_states += init;
            s.total_mdps += 1;
            s.total_initial_states += init;
        }
        s
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for m in &self.mdps {
            out.push_str(&serde_json::to_string(&m.to_record()).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        f.write_all(self.to_jsonl().as_bytes())?;
        f.flush()
    }
}

fn scene_from(json: &SceneJson, layout: Layout, variant: Variant, field: &'static str, index: usize) -> Result<Scene, RecordError> {
    let err = |message: String| RecordError::Scene { field, index, message };
    if json.variant != variant {
        return Err(err(format!("scene variant {} differs from the MDP variant {variant}", json.variant)));
    }
    let scene = Scene::from_json(json, layout);
    scene.validate().map_err(|e| err(e.to_string()))?;
    Ok(scene)
}

/// Checks one record against every MDP invariant.
pub fn validate_record(record: &MdpRecord, layout: Layout) -> Result<MdpSpec, RecordError> {
    let program = Program::compile(&record.program).map_err(|e| RecordError::Program {
        position: e.position(),
        message: e.to_string(),
    })?;
    let initial_scenes = record
        .initial_scenes
        .iter()
        .enumerate()
        .map(|(i, s)| scene_from(s, layout, record.variant, "initial_scenes", i))
        .collect::<Result<Vec<_>, _>>()?;
    let goal_scenes = record
        .goal_scenes
        .iter()
        .enumerate()
        .map(|(i, s)| scene_from(s, layout, record.variant, "goal_scenes", i))
        .collect::<Result<Vec<_>, _>>()?;
    let inconsistent = |message: String| Err(RecordError::TargetConsistency { message });
    match record.condition {
        Condition::Scratch => {
            if !record.target {
                return inconsistent("scratch MDPs must have target true".into());
            }
            if !initial_scenes.is_empty() {
                return inconsistent("scratch MDPs start from the empty scene and list no initial scenes".into());
            }
        }
        Condition::FlipIt => {
            if initial_scenes.is_empty() {
                return inconsistent("flipit MDPs need at least one initial scene".into());
            }
            if let Some(i) = initial_scenes.iter().position(|s| program.evaluate(s) == record.target) {
                return inconsistent(format!("initial scene {i} already evaluates to the target {}", record.target));
            }
        }
    }
    if let Some(i) = goal_scenes.iter().position(|s| program.evaluate(s) != record.target) {
        return inconsistent(format!("goal scene {i} does not evaluate to the target {}", record.target));
    }
    Ok(MdpSpec {
        id: record.id.clone(),
        variant: record.variant,
        condition: record.condition,
        split: record.split,
        layout,
        context: Context::new(record.statement.clone(), program, record.target),
        initial_scenes,
        goal_scenes,
    })
}

fn parse_header(line: &str) -> Result<DatasetHeader, RecordError> {
    let header: DatasetHeader = serde_json::from_str(line).map_err(|e| RecordError::Header { message: e.to_string() })?;
    if header.format != FORMAT_NAME {
        return Err(RecordError::Header {
            message: format!("format is {:?}, expected {FORMAT_NAME:?}", header.format),
        });
    }
    if header.version != FORMAT_VERSION {
        return Err(RecordError::Header {
            message: format!("unsupported version {}", header.version),
        });
    }
    header.layout.validate().map_err(|e| RecordError::Header { message: e.to_string() })?;
    Ok(header)
}

/// Parses and validates a whole dataset. Blank lines are skipped. Every
/// invalid line is reported; nothing is returned unless all lines are valid.
pub fn parse_dataset(text: &str) -> Result<Dataset, LoadError> {
    parse_dataset_with(text, None)
}

/// Like [`parse_dataset`], optionally replacing the header's object sizes.
pub fn parse_dataset_with(text: &str, sizes: Option<crate::scene::SizeTable>) -> Result<Dataset, LoadError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut errors = Vec::new();
    let header = match lines.next() {
        None => {
            return Err(LoadError::Invalid(vec![LineError {
                line: 1,
                id: None,
                error: RecordError::Header {
                    message: "empty file".into(),
                },
            }]))
        }
        Some((i, l)) => match parse_header(l) {
            Ok(mut h) => {
                if let Some(sizes) = sizes {
                    h.layout.sizes = sizes;
                }
                h
            }
            Err(error) => return Err(LoadError::Invalid(vec![LineError { line: i + 1, id: None, error }])),
        },
    };
    let mut mdps = Vec::new();
    let mut seen = HashSet::new();
    for (i, l) in lines {
        let line = i + 1;
        let record: MdpRecord = match serde_json::from_str(l) {
            Ok(r) => r,
            Err(e) => {
                errors.push(LineError {
                    line,
                    id: None,
                    error: RecordError::Parse { message: e.to_string() },
                });
                continue;
            }
        };
        let id = Some(record.id.clone());
        if !seen.insert(record.id.clone()) {
            errors.push(LineError {
                line,
                id: id.clone(),
                error: RecordError::DuplicateId { id: record.id.clone() },
            });
            continue;
        }
        match validate_record(&record, header.layout) {
            Ok(m) => mdps.push(m),
            Err(error) => errors.push(LineError { line, id, error }),
        }
    }
    if errors.is_empty() {
        Ok(Dataset { header, mdps })
    } else {
        Err(LoadError::Invalid(errors))
    }
}

pub fn load_dataset(path: &Path) -> Result<Dataset, LoadError> {
    load_dataset_with(path, None)
}

pub fn load_dataset_with(path: &Path, sizes: Option<crate::scene::SizeTable>) -> Result<Dataset, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset_with(&text, sizes)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnnotationFailure {
    /// The program's value differs from the label.
    Mismatch { index: usize, expected: bool, got: bool },
    /// The program could not be evaluated on this scene.
    Error { index: usize, message: String },
}

/// Result of checking a program against labeled scenes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AnnotationReport {
    pub checked: usize,
    pub failures: Vec<AnnotationFailure>,
}

impl AnnotationReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates `source` on every labeled scene and reports every disagreement.
/// A program that does not compile fails on every scene.
pub fn validate_annotation(source: &str, labeled: &[(Scene, bool)]) -> AnnotationReport {
    let program = Program::compile(source);
    let failures = labeled
        .iter()
        .enumerate()
        .filter_map(|(index, (scene, expected))| {
            let got = match &program {
                Ok(p) => p.try_evaluate_with(scene, Default::default()),
                Err(e) => Err(e.clone()),
            };
            match got {
                Ok(got) if got == *expected => None,
                Ok(got) => Some(AnnotationFailure::Mismatch {
                    index,
                    expected: *expected,
                    got,
                }),
                Err(e) => Some(AnnotationFailure::Error {
                    index,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    AnnotationReport {
        checked: labeled.len(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{Color, ObjectSpec, Shape, Size};

    fn tower_scene(colors: &[Color]) -> Scene {
        let l = Layout::default();
        Scene::from_objects(
            Variant::Tower,
            l,
            colors.iter().enumerate().map(|(i, &color)| {
                (
                    ObjectSpec {
                        shape: Shape::Square,
                        color,
                        size: Size::Medium,
                    },
                    l.tower_x(0),
                    l.tower_y(i),
                )
            }),
        )
    }

    fn record(condition: Condition, target: bool, initial: Vec<SceneJson>) -> MdpRecord {
        MdpRecord {
            id: "t-0".into(),
            variant: Variant::Tower,
            condition,
            split: Split::Train,
            statement: "There is a black block.".into(),
            program: "exist(filter_obj(all_items, is_black))".into(),
            target,
            initial_scenes: initial,
            goal_scenes: vec![],
        }
    }

    fn file(records: &[MdpRecord]) -> String {
        let mut s = serde_json::to_string(&DatasetHeader::default()).unwrap();
        for r in records {
            s.push('\n');
            s.push_str(&serde_json::to_string(r).unwrap());
        }
        s
    }

    #[test]
    fn loads_valid_records() {
        let mut a = record(Condition::Scratch, true, vec![]);
        a.goal_scenes = vec![tower_scene(&[Color::Black]).to_json()];
        let mut b = record(Condition::FlipIt, true, vec![tower_scene(&[Color::Blue]).to_json()]);
        b.id = "t-1".into();
        b.split = Split::Dev;
        let ds = parse_dataset(&file(&[a, b])).unwrap();
        assert_eq!(ds.mdps.len(), 2);
        let s = ds.summary();
        assert_eq!(s.total_mdps, 2);
        assert_eq!(s.rows["tower-flipit"][&Split::Dev], SplitCounts { mdps: 1, initial_states: 1 });
        assert!(s.to_string().contains("tower-scratch"));
        let again = parse_dataset(&ds.to_jsonl()).unwrap();
        assert_eq!(again.to_jsonl(), ds.to_jsonl());
    }

    #[test]
    fn flipit_scene_already_satisfying_is_rejected() {
        let bad = record(Condition::FlipIt, true, vec![tower_scene(&[Color::Black]).to_json()]);
        let err = parse_dataset(&file(&[bad])).unwrap_err();
        let e = &err.line_errors()[0];
        assert_eq!(e.line, 2);
        assert!(matches!(e.error, RecordError::TargetConsistency { .. }));
    }

    #[test]
    fn malformed_program_reports_position() {
        let mut bad = record(Condition::Scratch, true, vec![]);
        bad.program = "exist(filter_obj(all_items, lambda x:))".into();
        let err = parse_dataset(&file(&[bad])).unwrap_err();
        match &err.line_errors()[0].error {
            RecordError::Program { position, .. } => assert_eq!(*position, Some(37)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn all_errors_are_reported() {
        let mut a = record(Condition::Scratch, false, vec![]);
        a.id = "a".into();
        let b = record(Condition::Scratch, true, vec![]);
        let mut c = b.clone();
        c.goal_scenes = vec![SceneJson {
            variant: Variant::Scatter,
            objects: vec![],
        }];
        let text = format!("{}\nnot json", file(&[a, b, c]));
        let err = parse_dataset(&text).unwrap_err();
        let kinds: Vec<_> = err.line_errors().iter().map(|e| (e.line, std::mem::discriminant(&e.error))).collect();
        assert_eq!(kinds.len(), 3);
        assert_eq!(kinds[0].0, 2);
        assert!(matches!(err.line_errors()[1].error, RecordError::DuplicateId { .. }));
        assert!(matches!(err.line_errors()[2].error, RecordError::Parse { .. }));
    }

    #[test]
    fn header_is_checked() {
        let err = parse_dataset(r#"{"format":"other","version":1,"layout":{"canvas_width":380,"canvas_height":100,"separator_width":10,"sizes":{"small":10,"medium":20,"large":30}}}"#)
            .unwrap_err();
        assert!(matches!(err.line_errors()[0].error, RecordError::Header { .. }));
        assert!(parse_dataset("").is_err());
    }

    #[test]
    fn annotation_validation() {
        let src = "exist(filter_obj(all_items, is_black))";
        let yes = tower_scene(&[Color::Black]);
        let no = tower_scene(&[Color::Blue]);
        let r = validate_annotation(src, &[(yes.clone(), true), (no.clone(), false), (tower_scene(&[]), false)]);
        assert!(r.passed());
        let r = validate_annotation(src, &[(yes.clone(), true), (no.clone(), true)]);
        assert_eq!(
            r.failures,
            vec![AnnotationFailure::Mismatch {
                index: 1,
                expected: true,
                got: false
            }]
        );
        let r = validate_annotation("count(all_items)", &[(yes, true), (no, false)]);
        assert_eq!(r.failures.len(), 2);
        assert!(r.failures.iter().all(|f| matches!(f, AnnotationFailure::Error { .. })));
    }
}
