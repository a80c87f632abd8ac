use std::collections::BTreeSet;

use crate::develop::{DevelopmentRule, InfinityPolicy, Permutation};
use crate::model::{parse_blocks, Block, Universe};
use crate::trades::Schedule;
use crate::verify::{parse_point_sets, GroupPartition};

use super::errata::{ErratumRecord, FieldPath, Justification};
use super::{
    CatalogEntry, Claim, CompareClaim, DesignItem, DesignRef, DesignSpec, EntryKind, FamilySpec,
    IndexRange, ParseError, RuleChoice, TradeSpec,
};

pub(super) struct Document {
    pub entries: Vec<CatalogEntry>,
    pub errata: Vec<ErratumRecord>,
}

/// Value parsers report a message; the caller adds the position.
type ValueResult<T> = Result<T, String>;

pub(super) fn rule_choice(s: &str) -> ValueResult<RuleChoice> {
    if !s.contains("=>") {
        return s.parse().map(RuleChoice::Single).map_err(|e| e.to_string());
    }
    let mut alts = Vec::new();
    for alt in s.split('|') {
        let (reading, rule) = alt
            .split_once("=>")
            .ok_or_else(|| format!("expected `READING => RULE`, got {:?}", alt.trim()))?;
        let rule: DevelopmentRule = rule
            .parse()
            .map_err(|e: crate::develop::DevelopError| e.to_string())?;
        alts.push((reading.trim().to_string(), rule));
    }
    Ok(RuleChoice::ByReading(alts))
}

pub(super) fn base_blocks(s: &str) -> ValueResult<Vec<Block>> {
    let blocks = parse_blocks(s).map_err(|e| e.to_string())?;
    if blocks.is_empty() {
        return Err("expected at least one block".into());
    }
    Ok(blocks)
}

fn design_ref(s: &str) -> ValueResult<DesignRef> {
    let t = s.trim();
    let (body, as_infinity) = match t.strip_suffix("as-infinity") {
        Some(b) => (b.trim_end(), true),
        None => (t, false),
    };
    let body = body
        .strip_prefix('@')
        .ok_or_else(|| format!("expected `@ENTRY.DESIGN`, got {t:?}"))?;
    let (entry, rest) = body
        .split_once('.')
        .ok_or_else(|| format!("expected `@ENTRY.DESIGN`, got {t:?}"))?;
    let (design, permutation) = match rest.split_once('*') {
        Some((d, p)) => (d, Some(p.to_string())),
        None => (rest, None),
    };
    if entry.is_empty() || design.is_empty() || design.contains(char::is_whitespace) {
        return Err(format!("expected `@ENTRY.DESIGN`, got {t:?}"));
    }
    Ok(DesignRef {
        entry: entry.to_string(),
        design: design.to_string(),
        permutation,
        as_infinity,
    })
}

pub(super) fn trade_spec(s: &str) -> ValueResult<TradeSpec> {
    let (left, right) = s
        .split_once("->")
        .ok_or_else(|| "expected `REMOVED -> ADDED`".to_string())?;
    if left.trim_start().starts_with('@') {
        return Ok(TradeSpec::Designs {
            from: design_ref(left)?,
            to: design_ref(right)?,
        });
    }
    Ok(TradeSpec::Blocks {
        removed: base_blocks(left)?,
        added: base_blocks(right)?,
    })
}

fn number<T: std::str::FromStr>(s: &str, what: &str) -> ValueResult<T> {
    s.trim()
        .parse()
        .map_err(|_| format!("expected {what}, got {:?}", s.trim()))
}

fn index_range(s: &str) -> ValueResult<IndexRange> {
    let w: Vec<&str> = s.split_whitespace().collect();
    let (bounds, step) = match w.as_slice() {
        ["range", b] => (*b, 1),
        ["range", b, "step", st] => (*b, number(st, "a step")?),
        _ => return Err(format!("expected `range A..B [step S]`, got {s:?}")),
    };
    let (a, b) = bounds
        .split_once("..")
        .ok_or_else(|| format!("expected `A..B`, got {bounds:?}"))?;
    let range = IndexRange {
        start: number(a, "an index")?,
        end: number(b, "an index")?,
        step,
    };
    if range.end < range.start || range.step == 0 {
        return Err(format!("empty index range {bounds:?}"));
    }
    Ok(range)
}

fn family_header(s: &str) -> ValueResult<FamilySpec> {
    let mut rest = s.trim();
    let mut take_word = || -> Option<&str> {
        let t = rest.trim_start();
        let end = t.find(char::is_whitespace).unwrap_or(t.len());
        let (w, r) = t.split_at(end);
        rest = r;
        (!w.is_empty()).then_some(w)
    };
    let name = take_word().ok_or("expected a family name")?.to_string();
    if take_word() != Some("volume") {
        return Err("expected `NAME volume V`".into());
    }
    let volume = number(take_word().unwrap_or(""), "a volume")?;
    let mut derived = false;
    let mut tail = rest.trim();
    if let Some(t) = tail.strip_prefix("derived") {
        derived = true;
        tail = t.trim();
    }
    let generator = if tail.is_empty() {
        None
    } else {
        let body = tail
            .strip_prefix("develop ")
            .ok_or_else(|| format!("unexpected {tail:?} after the volume"))?;
        let cut = body
            .rfind(" range ")
            .ok_or("a developed family needs `range A..B`")?;
        let rule: DevelopmentRule = body[..cut]
            .parse()
            .map_err(|e: crate::develop::DevelopError| e.to_string())?;
        Some((rule, index_range(&body[cut + 1..])?))
    };
    Ok(FamilySpec {
        name,
        volume,
        derived,
        generator,
        trade: None,
    })
}

fn claim(s: &str) -> ValueResult<Claim> {
    let t = s.trim();
    if t == "full" {
        return Ok(Claim::Full);
    }
    let (kind, set) = t
        .split_once(char::is_whitespace)
        .ok_or_else(|| format!("expected `full`, `subset {{..}}` or `exact {{..}}`, got {t:?}"))?;
    let inner = set
        .trim()
        .strip_prefix('{')
        .and_then(|r| r.strip_suffix('}'))
        .ok_or_else(|| format!("expected `{{a,b,..}}`, got {set:?}"))?;
    let values = inner
        .split(',')
        .filter(|x| !x.trim().is_empty())
        .map(|x| number(x, "an intersection size"))
        .collect::<ValueResult<BTreeSet<usize>>>()?;
    match kind {
        "subset" => Ok(Claim::Subset(values)),
        "exact" => Ok(Claim::Exact(values)),
        _ => Err(format!("unknown claim kind {kind:?}")),
    }
}

fn compare(s: &str) -> ValueResult<CompareClaim> {
    let w: Vec<&str> = s.split_whitespace().collect();
    let [m, left, right] = w.as_slice() else {
        return Err("expected `M LEFT RIGHT`".into());
    };
    let sched = |t: &str| t.parse::<Schedule>().map_err(|e| e.to_string());
    Ok(CompareClaim {
        m: number(m, "an intersection size")?,
        left: sched(left)?,
        right: sched(right)?,
    })
}

#[derive(PartialEq)]
enum Context {
    Entry,
    Design,
    Family,
}

struct EntryDraft {
    line: usize,
    entry: CatalogEntry,
    kind: Option<EntryKind>,
    universe: Option<Universe>,
    context: Context,
}

#[derive(Default)]
struct ErratumDraft {
    line: usize,
    id: String,
    entry: Option<String>,
    field: Option<FieldPath>,
    printed: Option<String>,
    adopted: Option<String>,
    justify: Option<Justification>,
}

enum Section {
    Nothing,
    Entry(Box<EntryDraft>),
    Erratum(ErratumDraft),
}

struct Parser<'a> {
    source: &'a str,
    doc: Document,
}

impl Parser<'_> {
    fn error(&self, line: usize, column: usize, message: impl Into<String>) -> ParseError {
        ParseError {
            source_name: self.source.to_string(),
            line,
            column,
            message: message.into(),
        }
    }

    fn finish(&mut self, section: Section) -> Result<(), ParseError> {
        match section {
            Section::Nothing => Ok(()),
            Section::Entry(draft) => {
                let draft = *draft;
                let at = |m: String| self.error(draft.line, 1, m);
                let mut entry = draft.entry;
                entry.kind = draft
                    .kind
                    .ok_or_else(|| at(format!("entry {} has no kind", entry.id)))?;
                entry.universe = draft
                    .universe
                    .ok_or_else(|| at(format!("entry {} has no universe", entry.id)))?;
                if let Some(v) = entry.v {
                    if v != entry.universe.size() {
                        return Err(at(format!(
                            "entry {} declares v = {v} on a universe of {} points",
                            entry.id,
                            entry.universe.size()
                        )));
                    }
                }
                match entry.kind {
                    EntryKind::DirectedDesign | EntryKind::Dgdd if entry.designs.is_empty() => {
                        return Err(at(format!("entry {} has no design", entry.id)));
                    }
                    EntryKind::Dgdd | EntryKind::Gdd if entry.groups.is_none() => {
                        return Err(at(format!("entry {} has no groups", entry.id)));
                    }
                    EntryKind::Gdd | EntryKind::Pbd if entry.block_sizes.is_none() => {
                        return Err(at(format!("entry {} has no block-sizes", entry.id)));
                    }
                    _ => {}
                }
                for d in &entry.designs {
                    for item in &d.items {
                        if let DesignItem::Develop(RuleChoice::ByReading(alts)) = item {
                            let named: BTreeSet<&str> =
                                alts.iter().map(|(r, _)| r.as_str()).collect();
                            let declared: BTreeSet<&str> =
                                entry.readings.iter().map(String::as_str).collect();
                            if named != declared {
                                return Err(at(format!(
                                    "design {} names readings {named:?} but the entry declares {declared:?}",
                                    d.name
                                )));
                            }
                        }
                    }
                }
                for f in &entry.families {
                    if f.trade.is_none() {
                        return Err(at(format!("trade family {} has no trade", f.name)));
                    }
                }
                self.doc.entries.push(entry);
                Ok(())
            }
            Section::Erratum(e) => {
                let at =
                    |what: &str| self.error(e.line, 1, format!("erratum {} has no {what}", e.id));
                let record = ErratumRecord {
                    entry: e.entry.clone().ok_or_else(|| at("entry"))?,
                    field: e.field.clone().ok_or_else(|| at("field"))?,
                    printed: e.printed.clone().ok_or_else(|| at("printed value"))?,
                    adopted: e.adopted.clone().ok_or_else(|| at("adopted value"))?,
                    justify: e.justify.ok_or_else(|| at("justification"))?,
                    id: e.id,
                };
                self.doc.errata.push(record);
                Ok(())
            }
        }
    }
}

fn empty_entry(id: &str) -> CatalogEntry {
    CatalogEntry {
        id: id.to_string(),
        kind: EntryKind::DirectedDesign,
        v: None,
        universe: Universe::residues(0),
        readings: Vec::new(),
        groups: None,
        block_sizes: None,
        block_lines: Vec::new(),
        designs: Vec::new(),
        families: Vec::new(),
        permutations: Vec::new(),
        compares: Vec::new(),
        claim: None,
        digest: None,
    }
}

pub(super) fn parse_document(source: &str, text: &str) -> Result<Document, ParseError> {
    let mut p = Parser {
        source,
        doc: Document {
            entries: Vec::new(),
            errata: Vec::new(),
        },
    };
    let mut section = Section::Nothing;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(header) = trimmed.strip_prefix('[') {
            let header = header
                .strip_suffix(']')
                .ok_or_else(|| p.error(line_no, indent + 1, "unterminated section header"))?;
            let (kind, id) = header.split_once(' ').ok_or_else(|| {
                p.error(
                    line_no,
                    indent + 2,
                    "expected `[entry ID]` or `[erratum ID]`",
                )
            })?;
            let id = id.trim();
            let prev = std::mem::replace(&mut section, Section::Nothing);
            p.finish(prev)?;
            section = match kind {
                "entry" => {
                    if p.doc.entries.iter().any(|e| e.id == id) {
                        return Err(p.error(
                            line_no,
                            indent + 8,
                            format!("entry {id} is defined twice"),
                        ));
                    }
                    Section::Entry(Box::new(EntryDraft {
                        line: line_no,
                        entry: empty_entry(id),
                        kind: None,
                        universe: None,
                        context: Context::Entry,
                    }))
                }
                "erratum" => Section::Erratum(ErratumDraft {
                    line: line_no,
                    id: id.to_string(),
                    ..Default::default()
                }),
                other => {
                    return Err(p.error(
                        line_no,
                        indent + 2,
                        format!("unknown section kind {other:?}"),
                    ))
                }
            };
            continue;
        }
        let eq = content
            .find('=')
            .ok_or_else(|| p.error(line_no, indent + 1, "expected `key = value`"))?;
        let key = content[..eq].trim();
        let after = &content[eq + 1..];
        let value = after.trim();
        let value_col = eq + 2 + (after.len() - after.trim_start().len());
        let bad = |msg: String| ParseError {
            source_name: source.to_string(),
            line: line_no,
            column: value_col,
            message: msg,
        };
        let key_error = |msg: String| ParseError {
            source_name: source.to_string(),
            line: line_no,
            column: indent + 1,
            message: msg,
        };
        match &mut section {
            Section::Nothing => return Err(key_error(format!("`{key}` outside any section"))),
            Section::Erratum(e) => match key {
                "entry" => e.entry = Some(value.to_string()),
                "field" => e.field = Some(value.parse().map_err(bad)?),
                "printed" => e.printed = Some(value.to_string()),
                "adopted" => e.adopted = Some(value.to_string()),
                "justify" => e.justify = Some(value.parse().map_err(bad)?),
                _ => return Err(key_error(format!("unknown erratum key `{key}`"))),
            },
            Section::Entry(draft) => {
                let entry = &mut draft.entry;
                let in_design = draft.context == Context::Design;
                match key {
                    "kind" => {
                        draft.kind = Some(
                            EntryKind::from_keyword(value)
                                .ok_or_else(|| bad(format!("unknown entry kind {value:?}")))?,
                        )
                    }
                    "v" => entry.v = Some(number(value, "a point count").map_err(bad)?),
                    "universe" => {
                        draft.universe = Some(
                            value
                                .parse()
                                .map_err(|e: crate::model::ModelError| bad(e.to_string()))?,
                        )
                    }
                    "readings" => {
                        entry.readings = value.split_whitespace().map(str::to_string).collect()
                    }
                    "groups" => {
                        entry.groups = Some(
                            value
                                .parse::<GroupPartition>()
                                .map_err(|e| bad(e.to_string()))?,
                        )
                    }
                    "block-sizes" => {
                        entry.block_sizes = Some(
                            value
                                .split_whitespace()
                                .map(|x| number(x, "a block size"))
                                .collect::<ValueResult<_>>()
                                .map_err(bad)?,
                        )
                    }
                    "blocks" => entry
                        .block_lines
                        .push(parse_point_sets(value).map_err(|e| bad(e.to_string()))?),
                    "design" => {
                        if value.is_empty() || value.contains(char::is_whitespace) {
                            return Err(bad(format!("bad design name {value:?}")));
                        }
                        if entry.design(value).is_some() {
                            return Err(bad(format!("design {value} is defined twice")));
                        }
                        entry.designs.push(DesignSpec {
                            name: value.to_string(),
                            policy: InfinityPolicy::fixed(),
                            items: Vec::new(),
                        });
                        draft.context = Context::Design;
                    }
                    "infinity-policy" | "develop" | "base" | "append" if !in_design => {
                        return Err(key_error(format!("`{key}` must follow a `design` line")));
                    }
                    "infinity-policy" => {
                        let d = entry.designs.last_mut().expect("design context");
                        d.policy.cycles.push(
                            value
                                .parse()
                                .map_err(|e: crate::develop::DevelopError| bad(e.to_string()))?,
                        );
                    }
                    "develop" => {
                        let d = entry.designs.last_mut().expect("design context");
                        d.items
                            .push(DesignItem::Develop(rule_choice(value).map_err(bad)?));
                    }
                    "base" => {
                        let d = entry.designs.last_mut().expect("design context");
                        if !d.items.iter().any(|i| matches!(i, DesignItem::Develop(_))) {
                            return Err(key_error(
                                "`base` needs a preceding `develop` rule".into(),
                            ));
                        }
                        d.items
                            .push(DesignItem::Base(base_blocks(value).map_err(bad)?));
                    }
                    "append" => {
                        let d = entry.designs.last_mut().expect("design context");
                        d.items
                            .push(DesignItem::Append(design_ref(value).map_err(bad)?));
                    }
                    "trade-family" => {
                        let fam = family_header(value).map_err(bad)?;
                        if entry.families.iter().any(|f| f.name == fam.name) {
                            return Err(bad(format!("trade family {} is defined twice", fam.name)));
                        }
                        entry.families.push(fam);
                        draft.context = Context::Family;
                    }
                    "trade" => {
                        if draft.context != Context::Family {
                            return Err(key_error(
                                "`trade` must follow a `trade-family` line".into(),
                            ));
                        }
                        let fam = entry.families.last_mut().expect("family context");
                        if fam.trade.is_some() {
                            return Err(key_error(format!(
                                "trade family {} already has a trade",
                                fam.name
                            )));
                        }
                        fam.trade = Some(trade_spec(value).map_err(bad)?);
                    }
                    "permutation" => {
                        let (name, cycles) = value
                            .split_once(char::is_whitespace)
                            .ok_or_else(|| bad("expected `NAME CYCLES`".into()))?;
                        let perm: Permutation = cycles
                            .parse()
                            .map_err(|e: crate::develop::DevelopError| bad(e.to_string()))?;
                        entry.permutations.push((name.to_string(), perm));
                        draft.context = Context::Entry;
                    }
                    "compare" => {
                        entry.compares.push(compare(value).map_err(bad)?);
                        draft.context = Context::Entry;
                    }
                    "claim" => {
                        entry.claim = Some(claim(value).map_err(bad)?);
                        draft.context = Context::Entry;
                    }
                    "digest" => entry.digest = Some(value.to_string()),
                    _ => return Err(key_error(format!("unknown key `{key}`"))),
                }
            }
        }
    }
    p.finish(section)?;
    Ok(p.doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse_err(text: &str) -> ParseError {
        match parse_document("t.cat", text) {
            Err(e) => e,
            Ok(_) => panic!("expected a parse error"),
        }
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = parse_err("[entry x]\nkind = directed-design\nuniverse = residues 5\ndesign = D\ndevelop = add 1 mod 5 orbit 5\nbase = (0,1,2,3,4 (1,2)\n");
        assert_eq!((e.line, e.column), (6, 8));
        let e = parse_err("[entry x]\nkind = design\n");
        assert_eq!((e.line, e.column), (2, 8));
        let e = parse_err("kind = dgdd\n");
        assert_eq!((e.line, e.column), (1, 1));
        let e = parse_err(
            "[entry x]\nkind = directed-design\nuniverse = residues 5\n  base = (0,1,2,3,4)\n",
        );
        assert_eq!((e.line, e.column), (4, 3));
    }

    #[test]
    fn family_headers_parse() {
        let f = family_header("T4 volume 2 develop perm (0)(1..17)(18..34) range 2..16 step 2")
            .unwrap();
        assert_eq!(
            f.header(),
            "T4 volume 2 develop perm (0)(1..17)(18..34) range 2..16 step 2"
        );
        assert_eq!(f.generator.as_ref().unwrap().1.indices().count(), 8);
        let f = family_header("SUB volume 11 derived").unwrap();
        assert!(f.derived && f.generator.is_none());
        assert!(family_header("R volume x").is_err());
        assert!(family_header("R volume 3 develop add 1 mod 5 orbit 5").is_err());
    }

    #[test]
    fn design_references_parse() {
        let r = design_ref("@v11.D2*a1 as-infinity").unwrap();
        assert_eq!(r.to_string(), "@v11.D2*a1 as-infinity");
        assert_eq!(r.permutation.as_deref(), Some("a1"));
        assert!(design_ref("v11.D2").is_err());
    }

    #[test]
    fn readings_must_match_declaration() {
        let e = parse_err("[entry x]\nkind = directed-design\nuniverse = residues 5\nreadings = A\ndesign = D\ndevelop = A => explicit | B => explicit\nbase = (0,1,2,3,4)\n");
        assert!(e.message.contains("readings"));
    }
}
