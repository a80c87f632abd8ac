//! The design catalog: a line-oriented text format for base blocks, trade
//! families and intersection claims, an errata overlay with re-checked
//! justifications, and builders that turn entries into designs and trades.
//!
//! ```text
//! [entry v21]
//! kind = directed-design
//! v = 21
//! universe = residues 21
//! design = D
//! develop = add 1 mod 21 orbit 21
//! base = (0,1,6,8,18) (1,0,16,14,4)
//! trade-family = T volume 2 develop add 1 mod 21 range 0..20
//! trade = (0,1,6,8,18) (1,0,16,14,4) -> (1,0,6,8,18) (0,1,16,14,4)
//! claim = full
//! ```

mod build;
mod errata;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use itertools::Itertools;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::develop::{DevelopError, DevelopmentRule, InfinityPolicy, Permutation};
use crate::model::{Block, ModelError, Point, Universe};
use crate::trades::{Schedule, TradeError};
use crate::verify::{GroupPartition, VerifyError};

pub use build::{
    Audit, DesignOutcome, EntrySummary, EntryVerification, FamilySummary, ReadingOutcome, Status,
};
pub use errata::{ErratumEvaluation, ErratumRecord, FieldPath, Justification};

const BUILTIN_DESIGNS: &str = include_str!("../../../../catalog/designs.cat");
const BUILTIN_ERRATA: &str = include_str!("../../../../catalog/errata.cat");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{source_name}: line {line}, column {column}: {message}")]
pub struct ParseError {
    pub source_name: String,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CatalogError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("no catalog entry {0}")]
    UnknownEntry(String),
    #[error("entry {entry} has no design {design}")]
    UnknownDesign { entry: String, design: String },
    #[error("entry {entry} has no reading {reading}")]
    UnknownReading { entry: String, reading: String },
    #[error("entry {entry} has no permutation {name}")]
    UnknownPermutation { entry: String, name: String },
    #[error("entry {entry} has no field `{field}`")]
    FieldNotFound { entry: String, field: String },
    #[error("entry {entry}: stored digest {stored} but contents hash to {computed}")]
    ChecksumMismatch {
        entry: String,
        stored: String,
        computed: String,
    },
    #[error("erratum {id}: field `{field}` reads `{found}`, not the recorded `{recorded}`")]
    ErratumMismatch {
        id: String,
        field: String,
        recorded: String,
        found: String,
    },
    #[error("erratum {id} is not justified: {reason}")]
    ErratumUnjustified { id: String, reason: String },
    #[error("design references nest deeper than {0} levels")]
    ReferenceDepth(usize),
    #[error("entry {entry} is a {kind}, which has no {what}")]
    WrongKind {
        entry: String,
        kind: EntryKind,
        what: &'static str,
    },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Develop(#[from] DevelopError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Trade(#[from] TradeError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EntryKind {
    DirectedDesign,
    Dgdd,
    Gdd,
    Pbd,
}

impl EntryKind {
    pub fn keyword(self) -> &'static str {
        match self {
            EntryKind::DirectedDesign => "directed-design",
            EntryKind::Dgdd => "dgdd",
            EntryKind::Gdd => "gdd",
            EntryKind::Pbd => "pbd",
        }
    }

    fn from_keyword(s: &str) -> Option<Self> {
        [
            EntryKind::DirectedDesign,
            EntryKind::Dgdd,
            EntryKind::Gdd,
            EntryKind::Pbd,
        ]
        .into_iter()
        .find(|k| k.keyword() == s)
    }
}

impl fmt::Display for EntryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// A development rule, possibly different per reading of an entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RuleChoice {
    Single(DevelopmentRule),
    ByReading(Vec<(String, DevelopmentRule)>),
}

impl RuleChoice {
    pub fn for_reading(&self, reading: Option<&str>) -> Option<&DevelopmentRule> {
        match self {
            RuleChoice::Single(rule) => Some(rule),
            RuleChoice::ByReading(alts) => {
                let r = reading?;
                alts.iter()
                    .find(|(name, _)| name == r)
                    .map(|(_, rule)| rule)
            }
        }
    }
}

impl fmt::Display for RuleChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleChoice::Single(rule) => write!(f, "{rule}"),
            RuleChoice::ByReading(alts) => write!(
                f,
                "{}",
                alts.iter()
                    .map(|(r, rule)| format!("{r} => {rule}"))
                    .join(" | ")
            ),
        }
    }
}

/// Another entry's design, optionally permuted and moved onto infinite
/// points (residue r becomes inf r).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignRef {
    pub entry: String,
    pub design: String,
    pub permutation: Option<String>,
    pub as_infinity: bool,
}

impl fmt::Display for DesignRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@{}.{}", self.entry, self.design)?;
        if let Some(p) = &self.permutation {
            write!(f, "*{p}")?;
        }
        if self.as_infinity {
            write!(f, " as-infinity")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DesignItem {
    Develop(RuleChoice),
    Base(Vec<Block>),
    Append(DesignRef),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignSpec {
    pub name: String,
    pub policy: InfinityPolicy,
    pub items: Vec<DesignItem>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexRange {
    pub start: u32,
    pub end: u32,
    pub step: u32,
}

impl IndexRange {
    pub fn indices(&self) -> impl Iterator<Item = u32> {
        (self.start..=self.end).step_by(self.step.max(1) as usize)
    }
}

impl fmt::Display for IndexRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "range {}..{}", self.start, self.end)?;
        if self.step != 1 {
            write!(f, " step {}", self.step)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TradeSpec {
    Blocks {
        removed: Vec<Block>,
        added: Vec<Block>,
    },
    Designs {
        from: DesignRef,
        to: DesignRef,
    },
}

impl fmt::Display for TradeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TradeSpec::Blocks { removed, added } => {
                write!(
                    f,
                    "{} -> {}",
                    removed.iter().join(" "),
                    added.iter().join(" ")
                )
            }
            TradeSpec::Designs { from, to } => write!(f, "{from} -> {to}"),
        }
    }
}

/// A trade family: the i = 0 template developed to each index of the range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySpec {
    pub name: String,
    pub volume: usize,
    /// Not part of the original listings; checked like every other family.
    pub derived: bool,
    pub generator: Option<(DevelopmentRule, IndexRange)>,
    pub trade: Option<TradeSpec>,
}

impl FamilySpec {
    fn header(&self) -> String {
        let mut s = format!("{} volume {}", self.name, self.volume);
        if self.derived {
            s.push_str(" derived");
        }
        if let Some((rule, range)) = &self.generator {
            s.push_str(&format!(" develop {rule} {range}"));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompareClaim {
    pub m: usize,
    pub left: Schedule,
    pub right: Schedule,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Claim {
    /// Every a-priori possible intersection size.
    Full,
    /// At least these values.
    Subset(BTreeSet<usize>),
    /// Exactly these values; everything else is impossible.
    Exact(BTreeSet<usize>),
}

fn render_block_list(blocks: &[Block]) -> String {
    blocks.iter().join(" ")
}

fn render_set(values: &BTreeSet<usize>) -> String {
    format!("{{{}}}", values.iter().join(","))
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Claim::Full => write!(f, "full"),
            Claim::Subset(s) => write!(f, "subset {}", render_set(s)),
            Claim::Exact(s) => write!(f, "exact {}", render_set(s)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogEntry {
    pub id: String,
    pub kind: EntryKind,
    pub v: Option<usize>,
    pub universe: Universe,
    pub readings: Vec<String>,
    pub groups: Option<GroupPartition>,
    pub block_sizes: Option<BTreeSet<usize>>,
    /// Unordered blocks of a GDD or PBD, one `blocks =` line per element.
    pub block_lines: Vec<Vec<Vec<Point>>>,
    pub designs: Vec<DesignSpec>,
    pub families: Vec<FamilySpec>,
    pub permutations: Vec<(String, Permutation)>,
    pub compares: Vec<CompareClaim>,
    pub claim: Option<Claim>,
    pub digest: Option<String>,
}

impl CatalogEntry {
    /// The first design is the host the entry's trades act on.
    pub fn host(&self) -> Option<&DesignSpec> {
        self.designs.first()
    }

    pub fn design(&self, name: &str) -> Option<&DesignSpec> {
        self.designs.iter().find(|d| d.name == name)
    }

    pub fn permutation(&self, name: &str) -> Option<&Permutation> {
        self.permutations
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, p)| p)
    }

    /// Readings to try, or a single `None` for entries without readings.
    pub fn reading_options(&self) -> Vec<Option<&str>> {
        if self.readings.is_empty() {
            vec![None]
        } else {
            self.readings.iter().map(|r| Some(r.as_str())).collect()
        }
    }

    /// Base blocks of a design in listed order.
    pub fn listed_base_blocks(&self, design: &str) -> Vec<Block> {
        self.design(design)
            .into_iter()
            .flat_map(|d| &d.items)
            .filter_map(|item| match item {
                DesignItem::Base(blocks) => Some(blocks.iter().cloned()),
                _ => None,
            })
            .flatten()
            .collect()
    }

    pub fn unordered_blocks(&self) -> Vec<Vec<Point>> {
        self.block_lines.iter().flatten().cloned().collect()
    }

    /// Canonical text, without the digest line.
    pub fn canonical_body(&self) -> String {
        let mut out = Vec::new();
        let mut kv = |k: &str, v: String| out.push(format!("{k} = {v}"));
        kv("kind", self.kind.to_string());
        if let Some(v) = self.v {
            kv("v", v.to_string());
        }
        kv("universe", self.universe.to_string());
        if !self.readings.is_empty() {
            kv("readings", self.readings.join(" "));
        }
        if let Some(g) = &self.groups {
            kv("groups", g.to_string());
        }
        if let Some(sizes) = &self.block_sizes {
            kv("block-sizes", sizes.iter().join(" "));
        }
        for line in &self.block_lines {
            kv(
                "blocks",
                line.iter()
                    .map(|b| format!("{{{}}}", b.iter().join(",")))
                    .join(" "),
            );
        }
        for d in &self.designs {
            kv("design", d.name.clone());
            for c in &d.policy.cycles {
                kv("infinity-policy", c.to_string());
            }
            for item in &d.items {
                match item {
                    DesignItem::Develop(rule) => kv("develop", rule.to_string()),
                    DesignItem::Base(blocks) => kv("base", render_block_list(blocks)),
                    DesignItem::Append(r) => kv("append", r.to_string()),
                }
            }
        }
        for fam in &self.families {
            kv("trade-family", fam.header());
            if let Some(t) = &fam.trade {
                kv("trade", t.to_string());
            }
        }
        for (name, p) in &self.permutations {
            kv("permutation", format!("{name} {p}"));
        }
        for c in &self.compares {
            kv("compare", format!("{} {} {}", c.m, c.left, c.right));
        }
        if let Some(c) = &self.claim {
            kv("claim", c.to_string());
        }
        let mut text = format!("[entry {}]\n", self.id);
        for line in out {
            text.push_str(&line);
            text.push('\n');
        }
        text
    }

    pub fn compute_digest(&self) -> String {
        let hash = Sha256::digest(self.canonical_body().as_bytes());
        format!("sha256:{hash:x}")
    }
}

impl fmt::Display for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_body())?;
        if let Some(d) = &self.digest {
            writeln!(f, "digest = {d}")?;
        }
        Ok(())
    }
}

/// Parses catalog text into entries, in file order.
pub fn parse_entries(source_name: &str, text: &str) -> Result<Vec<CatalogEntry>, ParseError> {
    parse::parse_document(source_name, text).map(|doc| doc.entries)
}

/// Canonical text for a list of entries, separated by blank lines.
pub fn print_entries(entries: &[CatalogEntry]) -> String {
    entries.iter().map(|e| e.to_string()).join("\n")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrataMode {
    Apply,
    Ignore,
}

/// Loaded entries with the errata overlay applied (or not).
#[derive(Clone, Debug)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
    transcribed: Vec<CatalogEntry>,
    errata: Vec<ErratumRecord>,
    evaluations: Vec<ErratumEvaluation>,
    mode: ErrataMode,
}

impl Catalog {
    /// The catalog shipped with the library.
    pub fn builtin(mode: ErrataMode) -> Result<Self, CatalogError> {
        Self::from_sources(
            &[("designs.cat", BUILTIN_DESIGNS)],
            Some(("errata.cat", BUILTIN_ERRATA)),
            mode,
        )
    }

    /// Reads every `*.cat` file in `dir`; `errata.cat` is the overlay.
    pub fn load_dir(dir: &Path, mode: ErrataMode) -> Result<Self, CatalogError> {
        let io = |p: &Path, e: std::io::Error| CatalogError::Io {
            path: p.display().to_string(),
            message: e.to_string(),
        };
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| io(dir, e))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "cat"))
            .collect();
        files.sort();
        let mut sources = Vec::new();
        let mut errata = None;
        for path in files {
            let text = std::fs::read_to_string(&path).map_err(|e| io(&path, e))?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            if name == "errata.cat" {
                errata = Some((name, text));
            } else {
                sources.push((name, text));
            }
        }
        let refs: Vec<(&str, &str)> = sources
            .iter()
            .map(|(n, t)| (n.as_str(), t.as_str()))
            .collect();
        Self::from_sources(
            &refs,
            errata.as_ref().map(|(n, t)| (n.as_str(), t.as_str())),
            mode,
        )
    }

    pub fn from_sources(
        sources: &[(&str, &str)],
        errata: Option<(&str, &str)>,
        mode: ErrataMode,
    ) -> Result<Self, CatalogError> {
        let mut transcribed = Vec::new();
        let mut records = Vec::new();
        for (name, text) in sources {
            let doc = parse::parse_document(name, text)?;
            transcribed.extend(doc.entries);
            records.extend(doc.errata);
        }
        if let Some((name, text)) = errata {
            let doc = parse::parse_document(name, text)?;
            transcribed.extend(doc.entries);
            records.extend(doc.errata);
        }
        for e in &transcribed {
            if let Some(stored) = &e.digest {
                let computed = e.compute_digest();
                if *stored != computed {
                    return Err(CatalogError::ChecksumMismatch {
                        entry: e.id.clone(),
                        stored: stored.clone(),
                        computed,
                    });
                }
            }
        }
        let mut catalog = Catalog {
            entries: transcribed.clone(),
            transcribed,
            errata: records,
            evaluations: Vec::new(),
            mode,
        };
        if mode == ErrataMode::Apply {
            catalog.apply_errata()?;
        }
        Ok(catalog)
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn transcribed(&self) -> &[CatalogEntry] {
        &self.transcribed
    }

    pub fn errata(&self) -> &[ErratumRecord] {
        &self.errata
    }

    /// Justification checks run at load, one per applied erratum.
    pub fn erratum_evaluations(&self) -> &[ErratumEvaluation] {
        &self.evaluations
    }

    pub fn mode(&self) -> ErrataMode {
        self.mode
    }

    pub fn entry(&self, id: &str) -> Result<&CatalogEntry, CatalogError> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| CatalogError::UnknownEntry(id.to_string()))
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }
}
