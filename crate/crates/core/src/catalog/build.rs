//! Turning catalog entries into designs, trade families and spectrum
//! material, and checking them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use itertools::Itertools;

use crate::develop::{apply_permutation, develop, BaseBlockSet, DevelopmentRule, OrbitGroup};
use crate::model::{Block, Design, Params, Point};
use crate::trades::{
    jd, realize_spectrum, validate_trade, DesignCheck, Material, SpectrumResult, Trade,
    TradeFamily, Witness,
};
use crate::verify::{verify_gdd, verify_pbd, VerificationReport};

use super::{
    Catalog, CatalogEntry, CatalogError, Claim, DesignItem, DesignRef, EntryKind, FamilySpec,
    RuleChoice, TradeSpec,
};

const MAX_REFERENCE_DEPTH: usize = 4;
/// Defects shown per report in text output.
const SHOWN_DEFECTS: usize = 5;

/// Block count predicted from orbit lengths, before developing anything.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Audit {
    /// (base blocks, orbit length), in listed order, equal lengths merged
    /// when adjacent.
    pub terms: Vec<(usize, usize)>,
    pub appended: usize,
    pub total: usize,
    pub expected: Option<usize>,
}

impl Audit {
    pub fn passed(&self) -> bool {
        self.expected == Some(self.total)
    }
}

impl fmt::Display for Audit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .terms
            .iter()
            .map(|(n, len)| format!("{n}×{len}"))
            .collect();
        if self.appended > 0 {
            parts.push(self.appended.to_string());
        }
        write!(f, "{} = {}", parts.join(" + "), self.total)?;
        match self.expected {
            Some(e) => write!(f, " (expected {e})"),
            None => write!(f, " (no integral block count)"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    /// No reading of an ambiguous entry passes.
    Unresolved,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Unresolved => "UNRESOLVED",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignOutcome {
    pub design: String,
    pub audit: Result<Audit, String>,
    pub report: Result<VerificationReport, String>,
}

impl DesignOutcome {
    pub fn passed(&self) -> bool {
        matches!(&self.audit, Ok(a) if a.passed()) && matches!(&self.report, Ok(r) if r.passed())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReadingOutcome {
    pub reading: Option<String>,
    pub designs: Vec<DesignOutcome>,
}

impl ReadingOutcome {
    pub fn passed(&self) -> bool {
        self.designs.iter().all(DesignOutcome::passed)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntryVerification {
    pub id: String,
    pub kind: EntryKind,
    pub status: Status,
    pub readings: Vec<ReadingOutcome>,
    /// Trade-family checks; these never change the status.
    pub families: Vec<(String, Result<String, String>)>,
    pub errata: Vec<String>,
}

impl EntryVerification {
    pub fn passing_reading(&self) -> Option<&ReadingOutcome> {
        self.readings.iter().find(|r| r.passed())
    }
}

impl fmt::Display for EntryVerification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[{}] {} {}", self.id, self.kind, self.status)?;
        for r in &self.readings {
            let prefix = match &r.reading {
                Some(name) => format!("reading {name} "),
                None => String::new(),
            };
            for d in &r.designs {
                let audit = match &d.audit {
                    Ok(a) => format!("count {a}"),
                    Err(e) => format!("count unavailable: {e}"),
                };
                writeln!(f, "  {prefix}design {}: {audit}", d.design)?;
                match &d.report {
                    Ok(rep) => {
                        writeln!(f, "    {}: {}", rep.kind, rep.summary())?;
                        for defect in rep.defects.iter().take(SHOWN_DEFECTS) {
                            writeln!(f, "      {defect}")?;
                        }
                        if rep.defects.len() > SHOWN_DEFECTS {
                            writeln!(f, "      ... {} more", rep.defects.len() - SHOWN_DEFECTS)?;
                        }
                    }
                    Err(e) => writeln!(f, "    not built: {e}")?,
                }
            }
        }
        for (name, outcome) in &self.families {
            match outcome {
                Ok(s) => writeln!(f, "  family {name}: {s}")?,
                Err(e) => writeln!(f, "  family {name}: PROBLEM {e}")?,
            }
        }
        for note in &self.errata {
            writeln!(f, "  {note}")?;
        }
        Ok(())
    }
}

/// Residue r becomes inf r; other points are kept.
fn onto_infinities(b: &Block) -> Block {
    b.map_points(|p| match p {
        Point::Residue(r) => Point::Infinity(r),
        other => other,
    })
    .expect("relabelling keeps points distinct")
}

impl Catalog {
    fn rule_for<'a>(
        &self,
        entry: &CatalogEntry,
        choice: &'a RuleChoice,
        reading: Option<&str>,
    ) -> Result<&'a DevelopmentRule, CatalogError> {
        choice
            .for_reading(reading)
            .ok_or_else(|| CatalogError::UnknownReading {
                entry: entry.id.clone(),
                reading: reading.unwrap_or("(none)").to_string(),
            })
    }

    fn design_kind_check(&self, entry: &CatalogEntry) -> Result<(), CatalogError> {
        match entry.kind {
            EntryKind::DirectedDesign | EntryKind::Dgdd => Ok(()),
            kind => Err(CatalogError::WrongKind {
                entry: entry.id.clone(),
                kind,
                what: "ordered designs",
            }),
        }
    }

    fn resolve_ref(&self, r: &DesignRef, depth: usize) -> Result<Vec<Block>, CatalogError> {
        if depth >= MAX_REFERENCE_DEPTH {
            return Err(CatalogError::ReferenceDepth(MAX_REFERENCE_DEPTH));
        }
        let entry = self.entry(&r.entry)?;
        let reading = entry.readings.first().map(String::as_str);
        let base = self.base_block_set_at(entry, &r.design, reading, depth + 1)?;
        let mut design = develop(&base)?;
        if let Some(name) = &r.permutation {
            let perm = entry
                .permutation(name)
                .ok_or_else(|| CatalogError::UnknownPermutation {
                    entry: entry.id.clone(),
                    name: name.clone(),
                })?;
            design = apply_permutation(&design, perm)?;
        }
        Ok(design
            .blocks()
            .map(|b| {
                if r.as_infinity {
                    onto_infinities(b)
                } else {
                    b.clone()
                }
            })
            .collect())
    }

    fn base_block_set_at(
        &self,
        entry: &CatalogEntry,
        design: &str,
        reading: Option<&str>,
        depth: usize,
    ) -> Result<BaseBlockSet, CatalogError> {
        self.design_kind_check(entry)?;
        let spec = entry
            .design(design)
            .ok_or_else(|| CatalogError::UnknownDesign {
                entry: entry.id.clone(),
                design: design.to_string(),
            })?;
        let mut groups: Vec<OrbitGroup> = Vec::new();
        let mut appended = Vec::new();
        for item in &spec.items {
            match item {
                DesignItem::Develop(choice) => groups.push(OrbitGroup {
                    rule: self.rule_for(entry, choice, reading)?.clone(),
                    blocks: Vec::new(),
                }),
                DesignItem::Base(blocks) => groups
                    .last_mut()
                    .expect("parser requires develop before base")
                    .blocks
                    .extend(blocks.iter().cloned()),
                DesignItem::Append(r) => appended.extend(self.resolve_ref(r, depth)?),
            }
        }
        Ok(BaseBlockSet {
            universe: entry.universe,
            params: Params::DIRECTED_FIVE,
            policy: spec.policy.clone(),
            groups,
            appended,
        })
    }

    /// Base blocks, rules and appended blocks of one design under a reading.
    pub fn base_block_set(
        &self,
        entry: &CatalogEntry,
        design: &str,
        reading: Option<&str>,
    ) -> Result<BaseBlockSet, CatalogError> {
        self.base_block_set_at(entry, design, reading, 0)
    }

    pub fn build_design(
        &self,
        entry: &CatalogEntry,
        design: &str,
        reading: Option<&str>,
    ) -> Result<Design, CatalogError> {
        Ok(develop(&self.base_block_set(entry, design, reading)?)?)
    }

    /// Blocks a design of this entry must have.
    pub fn expected_blocks(&self, entry: &CatalogEntry) -> Option<usize> {
        let v = entry.universe.size();
        let ordered = match (&entry.kind, &entry.groups) {
            (EntryKind::Dgdd, Some(g)) => {
                v * v - g.groups().iter().map(|x| x.len() * x.len()).sum::<usize>()
            }
            _ => v * v.saturating_sub(1),
        };
        // Each block of size 5 carries 10 ordered pairs.
        (ordered % 10 == 0).then_some(ordered / 10)
    }

    pub fn audit(
        &self,
        entry: &CatalogEntry,
        design: &str,
        reading: Option<&str>,
    ) -> Result<Audit, CatalogError> {
        let base = self.base_block_set(entry, design, reading)?;
        let mut terms: Vec<(usize, usize)> = Vec::new();
        for len in base.orbit_lengths()?.into_iter().flatten() {
            match terms.last_mut() {
                Some((n, l)) if *l == len => *n += 1,
                _ => terms.push((1, len)),
            }
        }
        let appended = base.appended.len();
        let total = terms.iter().map(|(n, l)| n * l).sum::<usize>() + appended;
        Ok(Audit {
            terms,
            appended,
            total,
            expected: self.expected_blocks(entry),
        })
    }

    fn check_for(&self, entry: &CatalogEntry) -> DesignCheck {
        match (&entry.kind, &entry.groups) {
            (EntryKind::Dgdd, Some(g)) => DesignCheck::Grouped(g.clone()),
            _ => DesignCheck::Directed,
        }
    }

    /// Develops a family's template over its index range, moving infinite
    /// points with the host's policy.
    pub fn family_trades(
        &self,
        entry: &CatalogEntry,
        family: &FamilySpec,
    ) -> Result<TradeFamily, CatalogError> {
        let policy = entry.host().map(|d| d.policy.clone()).unwrap_or_default();
        let mut trades = BTreeMap::new();
        match family.trade.as_ref().expect("parser requires a trade") {
            TradeSpec::Blocks { removed, added } => match &family.generator {
                None => {
                    trades.insert(0, Trade::new(removed.clone(), added.clone())?);
                }
                Some((rule, range)) => {
                    rule.check(&entry.universe)?;
                    for i in range.indices() {
                        let shift = |bs: &[Block]| {
                            bs.iter()
                                .map(|b| rule.shift(b, u64::from(i), &policy))
                                .collect::<Result<Vec<_>, _>>()
                        };
                        trades.insert(i, Trade::new(shift(removed)?, shift(added)?)?);
                    }
                }
            },
            TradeSpec::Designs { from, to } => {
                let from: BTreeSet<Block> = self.resolve_ref(from, 0)?.into_iter().collect();
                let to: BTreeSet<Block> = self.resolve_ref(to, 0)?.into_iter().collect();
                trades.insert(
                    0,
                    Trade::new(
                        from.difference(&to).cloned().collect(),
                        to.difference(&from).cloned().collect(),
                    )?,
                );
            }
        }
        Ok(TradeFamily {
            name: family.name.clone(),
            volume: family.volume,
            derived: family.derived,
            trades,
        })
    }

    /// Checks every instance of a family against the host: a valid trade
    /// of the declared volume whose removed blocks are all present.
    fn family_report(
        &self,
        entry: &CatalogEntry,
        host: &Design,
        spec: &FamilySpec,
    ) -> Result<String, String> {
        let fam = self.family_trades(entry, spec).map_err(|e| e.to_string())?;
        for (i, t) in &fam.trades {
            let label = || match spec.generator {
                Some(_) => format!("{}[{i}]", spec.name),
                None => spec.name.clone(),
            };
            validate_trade(t).map_err(|d| format!("{} is not a trade: {d}", label()))?;
            if t.volume() != spec.volume {
                return Err(format!(
                    "{} has volume {}, not {}",
                    label(),
                    t.volume(),
                    spec.volume
                ));
            }
            if let Some(b) = t.removed().iter().find(|b| !host.contains(b)) {
                return Err(format!("{} removes {b}, which the design lacks", label()));
            }
        }
        let n = fam.trades.len();
        Ok(format!(
            "{n} trade{} of volume {}, valid and contained{}",
            if n == 1 { "" } else { "s" },
            spec.volume,
            if spec.derived { " (derived)" } else { "" }
        ))
    }

    pub(super) fn family_check(
        &self,
        entry: &CatalogEntry,
        reading: Option<&str>,
        family: &str,
    ) -> (bool, String) {
        let Some(spec) = entry.families.iter().find(|f| f.name == family) else {
            return (false, format!("no trade family {family}"));
        };
        let Some(host) = entry.host() else {
            return (false, "entry has no design".into());
        };
        match self.build_design(entry, &host.name, reading) {
            Err(e) => (false, e.to_string()),
            Ok(d) => match self.family_report(entry, &d, spec) {
                Ok(s) => (true, s),
                Err(s) => (false, s),
            },
        }
    }

    fn design_outcome(
        &self,
        entry: &CatalogEntry,
        design: &str,
        reading: Option<&str>,
    ) -> DesignOutcome {
        let audit = self
            .audit(entry, design, reading)
            .map_err(|e| e.to_string());
        let check = self.check_for(entry);
        let report = self
            .build_design(entry, design, reading)
            .map(|d| check.run(&d))
            .map_err(|e| e.to_string());
        DesignOutcome {
            design: design.to_string(),
            audit,
            report,
        }
    }

    /// Whether some reading makes `design` pass; with `count_only` just the
    /// block-count audit is asked for.
    pub(super) fn design_check(
        &self,
        entry: &CatalogEntry,
        design: &str,
        count_only: bool,
    ) -> (bool, String) {
        let mut ok = false;
        let mut details = Vec::new();
        for reading in entry.reading_options() {
            let prefix = reading
                .map(|r| format!("reading {r}: "))
                .unwrap_or_default();
            if count_only {
                match self.audit(entry, design, reading) {
                    Ok(a) => {
                        ok |= a.passed();
                        details.push(format!("{prefix}{a}"));
                    }
                    Err(e) => details.push(format!("{prefix}{e}")),
                }
            } else {
                let out = self.design_outcome(entry, design, reading);
                ok |= out.passed();
                let detail = match (&out.audit, &out.report) {
                    (_, Err(e)) => e.clone(),
                    (Ok(a), Ok(r)) if !a.passed() => format!("count {a}; {}", r.summary()),
                    (_, Ok(r)) => r.summary(),
                };
                details.push(format!("{prefix}{detail}"));
            }
        }
        (ok, details.join("; "))
    }

    /// The first reading under which every design verifies.
    pub fn passing_reading(&self, entry: &CatalogEntry) -> Option<String> {
        entry
            .reading_options()
            .into_iter()
            .find(|r| {
                entry
                    .designs
                    .iter()
                    .all(|d| self.design_outcome(entry, &d.name, *r).passed())
            })
            .flatten()
            .map(str::to_string)
    }

    /// Designs, usable families and permutations of an entry under a
    /// reading.  Families that fail to build are left out.
    pub fn material(
        &self,
        entry: &CatalogEntry,
        reading: Option<&str>,
    ) -> Result<Material, CatalogError> {
        let host = entry.host().ok_or_else(|| CatalogError::WrongKind {
            entry: entry.id.clone(),
            kind: entry.kind,
            what: "designs",
        })?;
        let mut designs = BTreeMap::new();
        for d in &entry.designs {
            designs.insert(d.name.clone(), self.build_design(entry, &d.name, reading)?);
        }
        let families = entry
            .families
            .iter()
            .filter_map(|f| self.family_trades(entry, f).ok())
            .collect();
        Ok(Material {
            host: host.name.clone(),
            designs,
            families,
            permutations: entry.permutations.iter().cloned().collect(),
            check: self.check_for(entry),
        })
    }

    pub fn claimed_witnesses(entry: &CatalogEntry) -> Vec<Witness> {
        entry
            .compares
            .iter()
            .map(|c| Witness {
                m: c.m,
                left: c.left.clone(),
                right: c.right.clone(),
                pattern: "claimed pair".into(),
            })
            .collect()
    }

    /// Intersection sizes the entry claims: all a-priori sizes for `full`.
    pub fn target(&self, entry: &CatalogEntry) -> Result<BTreeSet<usize>, CatalogError> {
        match &entry.claim {
            None => Ok(BTreeSet::new()),
            Some(Claim::Subset(s)) | Some(Claim::Exact(s)) => Ok(s.clone()),
            Some(Claim::Full) => self.full_target(entry),
        }
    }

    /// Every a-priori intersection size: 0..=b−2 and b.
    pub fn full_target(&self, entry: &CatalogEntry) -> Result<BTreeSet<usize>, CatalogError> {
        if entry.kind == EntryKind::DirectedDesign {
            return Ok(jd(entry.universe.size())?);
        }
        let b = self.expected_blocks(entry).unwrap_or(0);
        Ok((0..b.saturating_sub(1)).chain([b]).collect())
    }

    /// Realizes the entry's claimed spectrum, under `reading` or else the
    /// first reading that verifies.
    pub fn spectrum(
        &self,
        id: &str,
        reading: Option<&str>,
    ) -> Result<SpectrumResult, CatalogError> {
        let entry = self.entry(id)?;
        let chosen = match reading {
            Some(r) => Some(r.to_string()),
            None => self.passing_reading(entry),
        };
        let material = self.material(entry, chosen.as_deref())?;
        let target = self.target(entry)?;
        Ok(realize_spectrum(
            &material,
            &target,
            &Self::claimed_witnesses(entry),
        )?)
    }

    fn verify_unordered(&self, entry: &CatalogEntry) -> ReadingOutcome {
        let blocks = entry.unordered_blocks();
        let sizes = entry.block_sizes.clone().unwrap_or_default();
        let report = match (&entry.kind, &entry.groups) {
            (EntryKind::Gdd, Some(g)) => verify_gdd(&entry.universe, &blocks, g, &sizes),
            _ => verify_pbd(&entry.universe, &blocks, &sizes),
        };
        let total = blocks.len();
        ReadingOutcome {
            reading: None,
            designs: vec![DesignOutcome {
                design: "blocks".into(),
                audit: Ok(Audit {
                    terms: Vec::new(),
                    appended: total,
                    total,
                    expected: Some(total),
                }),
                report: Ok(report),
            }],
        }
    }

    /// Verifies every design of an entry under every reading, checks its
    /// trade families and lists the errata applied to it.
    pub fn verify_entry(&self, id: &str) -> Result<EntryVerification, CatalogError> {
        let entry = self.entry(id)?;
        let readings: Vec<ReadingOutcome> = match entry.kind {
            EntryKind::Gdd | EntryKind::Pbd => vec![self.verify_unordered(entry)],
            _ => entry
                .reading_options()
                .into_iter()
                .map(|r| ReadingOutcome {
                    reading: r.map(str::to_string),
                    designs: entry
                        .designs
                        .iter()
                        .map(|d| self.design_outcome(entry, &d.name, r))
                        .collect(),
                })
                .collect(),
        };
        let pass = readings.iter().find(|r| r.passed());
        let status = match (pass, entry.readings.len() > 1) {
            (Some(_), _) => Status::Pass,
            (None, true) => Status::Unresolved,
            (None, false) => Status::Fail,
        };
        let reading = pass
            .and_then(|r| r.reading.clone())
            .or_else(|| entry.readings.first().cloned());
        let host = entry
            .host()
            .and_then(|h| self.build_design(entry, &h.name, reading.as_deref()).ok());
        let families = entry
            .families
            .iter()
            .map(|f| {
                let outcome = match &host {
                    Some(h) => self.family_report(entry, h, f),
                    None => Err("host design does not build".into()),
                };
                (f.name.clone(), outcome)
            })
            .collect();
        let errata = self
            .erratum_evaluations()
            .iter()
            .filter(|e| e.entry == entry.id)
            .map(|e| e.to_string())
            .collect_vec();
        Ok(EntryVerification {
            id: entry.id.clone(),
            kind: entry.kind,
            status,
            readings,
            families,
            errata,
        })
    }
}

/// Size of one trade family, without building it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilySummary {
    pub name: String,
    pub volume: usize,
    pub trades: usize,
    pub derived: bool,
}

/// Deterministic one-line description of an entry.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntrySummary {
    pub id: String,
    pub kind: EntryKind,
    pub points: usize,
    pub groups: Option<usize>,
    pub blocks: Option<usize>,
    pub families: Vec<FamilySummary>,
    pub claim: Option<Claim>,
}

impl fmt::Display for EntrySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} v={}", self.id, self.kind, self.points)?;
        if let Some(g) = self.groups {
            write!(f, " groups={g}")?;
        }
        if let Some(b) = self.blocks {
            write!(f, " b={b}")?;
        }
        if !self.families.is_empty() {
            let fams = self
                .families
                .iter()
                .map(|fam| {
                    format!(
                        "{} {}×vol{}{}",
                        fam.name,
                        fam.trades,
                        fam.volume,
                        if fam.derived { " derived" } else { "" }
                    )
                })
                .join(", ");
            write!(f, "; trades {fams}")?;
        }
        match &self.claim {
            Some(c) => write!(f, "; claim {c}"),
            None => Ok(()),
        }
    }
}

impl Catalog {
    pub fn entry_summary(&self, id: &str) -> Result<EntrySummary, CatalogError> {
        let entry = self.entry(id)?;
        let blocks = match entry.kind {
            EntryKind::Gdd | EntryKind::Pbd => Some(entry.unordered_blocks().len()),
            _ => self.expected_blocks(entry),
        };
        Ok(EntrySummary {
            id: entry.id.clone(),
            kind: entry.kind,
            points: entry.universe.size(),
            groups: entry.groups.as_ref().map(|g| g.len()),
            blocks,
            families: entry
                .families
                .iter()
                .map(|f| FamilySummary {
                    name: f.name.clone(),
                    volume: f.volume,
                    trades: f.generator.as_ref().map_or(1, |(_, r)| r.indices().count()),
                    derived: f.derived,
                })
                .collect(),
            claim: entry.claim.clone(),
        })
    }
}
