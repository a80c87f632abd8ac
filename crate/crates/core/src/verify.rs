//! Pair-coverage checks for directed designs, directed GDDs, GDDs and PBDs,
//! and intersection counting.
//!
//! Every check counts pairs in a dense table indexed by the universe, so a
//! report lists every offending pair rather than stopping at the first.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use thiserror::Error;

use crate::model::{Block, Design, ModelError, Params, Point, Universe};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum VerifyError {
    #[error("designs live on different universes: `{0}` and `{1}`")]
    UniverseMismatch(Universe, Universe),
    #[error("point {0} is listed in more than one group")]
    OverlappingGroups(Point),
    #[error("cannot read {what} from {text:?}")]
    Syntax { what: &'static str, text: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A partition of points into groups, kept in listed order (both the order
/// of the groups and the order of points inside each group matter when a
/// group is relabelled onto a product set).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupPartition {
    groups: Vec<Vec<Point>>,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<Point>>) -> Result<Self, VerifyError> {
        let mut seen = BTreeSet::new();
        for &p in groups.iter().flatten() {
            if !seen.insert(p) {
                return Err(VerifyError::OverlappingGroups(p));
            }
        }
        Ok(Self { groups })
    }

    pub fn groups(&self) -> &[Vec<Point>] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn group_of(&self, p: Point) -> Option<usize> {
        self.groups.iter().position(|g| g.contains(&p))
    }

    /// Group sizes with multiplicity, e.g. {2: 5} for type 2^5.
    pub fn type_signature(&self) -> BTreeMap<usize, usize> {
        self.groups
            .iter()
            .map(Vec::len)
            .counts()
            .into_iter()
            .collect()
    }
}

impl fmt::Display for GroupPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let text = self
            .groups
            .iter()
            .map(|g| format!("{{{}}}", g.iter().join(",")))
            .join(" ");
        f.write_str(&text)
    }
}

/// Parses `{a,b,...}` sets separated by whitespace, keeping listed order.
pub fn parse_point_sets(s: &str) -> Result<Vec<Vec<Point>>, VerifyError> {
    let err = || VerifyError::Syntax {
        what: "point sets",
        text: s.to_string(),
    };
    let mut sets = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('{').ok_or_else(err)?;
        let end = body.find('}').ok_or_else(err)?;
        let inner = &body[..end];
        // Points may be coordinates, so split on commas outside parentheses.
        let mut points = Vec::new();
        let mut depth = 0;
        let mut start = 0;
        for (i, ch) in inner.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    points.push(inner[start..i].parse()?);
                    start = i + 1;
                }
                _ => {}
            }
        }
        if !inner.trim().is_empty() {
            points.push(inner[start..].parse()?);
        }
        sets.push(points);
        rest = body[end + 1..].trim_start();
    }
    Ok(sets)
}

impl FromStr for GroupPartition {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupPartition::new(parse_point_sets(s)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Defect {
    /// A pair covered the wrong number of times.  Unordered checks report
    /// the pair with its smaller point first.
    Pair {
        first: Point,
        second: Point,
        ordered: bool,
        expected: u32,
        observed: u32,
    },
    BlockCount {
        expected: usize,
        observed: usize,
    },
    BlockSize {
        block: String,
        size: usize,
    },
    PointOutside(Point),
    UngroupedPoint(Point),
    UnsupportedParams(Params),
    InadmissibleOrder(usize),
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::Pair {
                first,
                second,
                ordered,
                expected,
                observed,
            } => {
                let (l, r) = if *ordered { ("(", ")") } else { ("{", "}") };
                write!(
                    f,
                    "pair {l}{first},{second}{r} expected {expected} observed {observed}"
                )
            }
            Defect::BlockCount { expected, observed } => {
                write!(f, "block count expected {expected} observed {observed}")
            }
            Defect::BlockSize { block, size } => write!(f, "block {block} has size {size}"),
            Defect::PointOutside(p) => write!(f, "point {p} outside the universe"),
            Defect::UngroupedPoint(p) => write!(f, "point {p} is in no group"),
            Defect::UnsupportedParams(p) => write!(
                f,
                "unsupported parameters t={} k={} lambda={}",
                p.t, p.k, p.lambda
            ),
            Defect::InadmissibleOrder(v) => write!(f, "no design of order {v} can exist"),
        }
    }
}

impl Defect {
    fn csv_row(&self) -> String {
        match self {
            Defect::Pair {
                first,
                second,
                ordered,
                expected,
                observed,
            } => format!(
                "{},\"{first}\",\"{second}\",{expected},{observed}",
                if *ordered { "ordered-pair" } else { "pair" }
            ),
            Defect::BlockCount { expected, observed } => {
                format!("block-count,,,{expected},{observed}")
            }
            other => format!("other,\"{other}\",,,"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub kind: &'static str,
    pub points: usize,
    pub blocks: usize,
    /// Pair incidences over all blocks, Σ C(|B|, 2).
    pub pair_slots: usize,
    pub defects: Vec<Defect>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.defects.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "{} points={} blocks={} pair-slots={} defects={}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.points,
            self.blocks,
            self.pair_slots,
            self.defects.len()
        )
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,first,second,expected,observed\n");
        for d in &self.defects {
            out.push_str(&d.csv_row());
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}: {}", self.kind, self.summary())?;
        for d in &self.defects {
            writeln!(f, "  {d}")?;
        }
        Ok(())
    }
}

/// Dense pair counter over a universe.
struct PairTable {
    universe: Universe,
    n: usize,
    counts: Vec<u32>,
}

impl PairTable {
    fn new(universe: Universe) -> Self {
        let n = universe.size();
        Self {
            universe,
            n,
            counts: vec![0; n * n],
        }
    }

    /// Counts the pairs of `points`; returns points outside the universe.
    fn add(&mut self, points: &[Point], ordered: bool) -> Vec<Point> {
        let idx: Vec<Option<usize>> = points.iter().map(|&p| self.universe.index(p)).collect();
        let outside = points
            .iter()
            .zip(&idx)
            .filter(|(_, i)| i.is_none())
            .map(|(&p, _)| p)
            .collect();
        for (a, ia) in idx.iter().enumerate() {
            for ib in &idx[a + 1..] {
                if let (Some(x), Some(y)) = (*ia, *ib) {
                    let (x, y) = if ordered {
                        (x, y)
                    } else {
                        (x.min(y), x.max(y))
                    };
                    self.counts[x * self.n + y] += 1;
                }
            }
        }
        outside
    }

    /// Compares every pair against `expected(x, y)`.
    fn defects<F>(&self, ordered: bool, expected: F) -> Vec<Defect>
    where
        F: Fn(Point, Point) -> u32,
    {
        let mut out = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if x == y || (!ordered && y < x) {
                    continue;
                }
                let (px, py) = (
                    self.universe.point(x).expect("dense index"),
                    self.universe.point(y).expect("dense index"),
                );
                let want = expected(px, py);
                let got = self.counts[x * self.n + y];
                if got != want {
                    out.push(Defect::Pair {
                        first: px,
                        second: py,
                        ordered,
                        expected: want,
                        observed: got,
                    });
                }
            }
        }
        out
    }
}

fn pair_slots<'a, I: IntoIterator<Item = &'a [Point]>>(blocks: I) -> usize {
    blocks
        .into_iter()
        .map(|b| b.len() * b.len().saturating_sub(1) / 2)
        .sum()
}

fn count_blocks<'a, I>(universe: Universe, blocks: I, ordered: bool) -> (PairTable, Vec<Defect>)
where
    I: IntoIterator<Item = &'a [Point]>,
{
    let mut table = PairTable::new(universe);
    let mut defects = Vec::new();
    for b in blocks {
        for p in table.add(b, ordered) {
            defects.push(Defect::PointOutside(p));
        }
    }
    (table, defects)
}

/// Checks that every ordered pair of distinct points lies in exactly λ
/// blocks and that the block count is λ·v(v−1)/(k(k−1)).  Only t = 2, λ = 1
/// is supported.
pub fn verify_dd(design: &Design) -> VerificationReport {
    let params = design.params();
    let universe = *design.universe();
    let v = universe.size();
    let mut report = VerificationReport {
        kind: "directed design",
        points: v,
        blocks: design.len(),
        pair_slots: pair_slots(design.blocks().map(Block::points)),
        defects: Vec::new(),
    };
    if params.t != 2 || params.lambda != 1 {
        report.defects.push(Defect::UnsupportedParams(params));
        return report;
    }
    match design.expected_block_count() {
        Some(expected) if expected != design.len() => report.defects.push(Defect::BlockCount {
            expected,
            observed: design.len(),
        }),
        Some(_) => {}
        None => report.defects.push(Defect::InadmissibleOrder(v)),
    }
    let (table, outside) = count_blocks(universe, design.blocks().map(Block::points), true);
    report.defects.extend(outside);
    report.defects.extend(table.defects(true, |_, _| 1));
    report
}

/// Checks a directed GDD: ordered cross-group pairs exactly once, pairs
/// inside a group never.
pub fn verify_dgdd(design: &Design, groups: &GroupPartition) -> VerificationReport {
    let universe = *design.universe();
    let mut report = VerificationReport {
        kind: "directed GDD",
        points: universe.size(),
        blocks: design.len(),
        pair_slots: pair_slots(design.blocks().map(Block::points)),
        defects: Vec::new(),
    };
    let group_of = group_lookup(&universe, groups, &mut report.defects);
    let cross_pairs: usize = universe.size() * universe.size()
        - groups
            .groups()
            .iter()
            .map(|g| g.len() * g.len())
            .sum::<usize>();
    let k = design.params().k;
    let per_block = k * (k - 1) / 2;
    if !cross_pairs.is_multiple_of(per_block) || cross_pairs / per_block != design.len() {
        report.defects.push(Defect::BlockCount {
            expected: cross_pairs / per_block,
            observed: design.len(),
        });
    }
    let (table, outside) = count_blocks(universe, design.blocks().map(Block::points), true);
    report.defects.extend(outside);
    report
        .defects
        .extend(table.defects(true, |x, y| u32::from(group_of(x) != group_of(y))));
    report
}

fn group_lookup(
    universe: &Universe,
    groups: &GroupPartition,
    defects: &mut Vec<Defect>,
) -> impl Fn(Point) -> Option<usize> {
    let mut lookup = BTreeMap::new();
    for (i, g) in groups.groups().iter().enumerate() {
        for &p in g {
            if !universe.contains(p) {
                defects.push(Defect::PointOutside(p));
            }
            lookup.insert(p, i);
        }
    }
    for p in universe.points() {
        if !lookup.contains_key(&p) {
            defects.push(Defect::UngroupedPoint(p));
        }
    }
    move |p| lookup.get(&p).copied()
}

/// Checks an unordered GDD on the union of its groups: every cross-group
/// pair exactly once, no pair inside a group, block sizes in `sizes`.
pub fn verify_gdd(
    universe: &Universe,
    blocks: &[Vec<Point>],
    groups: &GroupPartition,
    sizes: &BTreeSet<usize>,
) -> VerificationReport {
    let mut report = VerificationReport {
        kind: "GDD",
        points: universe.size(),
        blocks: blocks.len(),
        pair_slots: pair_slots(blocks.iter().map(Vec::as_slice)),
        defects: Vec::new(),
    };
    let group_of = group_lookup(universe, groups, &mut report.defects);
    check_block_sizes(blocks, sizes, &mut report.defects);
    let (table, outside) = count_blocks(*universe, blocks.iter().map(Vec::as_slice), false);
    report.defects.extend(outside);
    report
        .defects
        .extend(table.defects(false, |x, y| u32::from(group_of(x) != group_of(y))));
    report
}

/// Checks a PBD: every pair of points exactly once, block sizes in `sizes`.
pub fn verify_pbd(
    universe: &Universe,
    blocks: &[Vec<Point>],
    sizes: &BTreeSet<usize>,
) -> VerificationReport {
    let mut report = VerificationReport {
        kind: "PBD",
        points: universe.size(),
        blocks: blocks.len(),
        pair_slots: pair_slots(blocks.iter().map(Vec::as_slice)),
        defects: Vec::new(),
    };
    check_block_sizes(blocks, sizes, &mut report.defects);
    let (table, outside) = count_blocks(*universe, blocks.iter().map(Vec::as_slice), false);
    report.defects.extend(outside);
    report.defects.extend(table.defects(false, |_, _| 1));
    report
}

fn check_block_sizes(blocks: &[Vec<Point>], sizes: &BTreeSet<usize>, defects: &mut Vec<Defect>) {
    for b in blocks {
        let distinct: BTreeSet<_> = b.iter().collect();
        if !sizes.contains(&b.len()) || distinct.len() != b.len() {
            defects.push(Defect::BlockSize {
                block: format!("{{{}}}", b.iter().join(",")),
                size: b.len(),
            });
        }
    }
}

/// Blocks common to both designs, in canonical order.
pub fn common_blocks(d1: &Design, d2: &Design) -> Result<Vec<Block>, VerifyError> {
    if d1.universe() != d2.universe() {
        return Err(VerifyError::UniverseMismatch(
            *d1.universe(),
            *d2.universe(),
        ));
    }
    Ok(d1
        .block_set()
        .intersection(d2.block_set())
        .cloned()
        .collect())
}

/// Number of blocks the two designs share.
pub fn intersection(d1: &Design, d2: &Design) -> Result<usize, VerifyError> {
    if d1.universe() != d2.universe() {
        return Err(VerifyError::UniverseMismatch(
            *d1.universe(),
            *d2.universe(),
        ));
    }
    Ok(d1.block_set().intersection(d2.block_set()).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_blocks;

    fn design(universe: Universe, blocks: &str) -> Design {
        Design::new(
            universe,
            Params::DIRECTED_FIVE,
            parse_blocks(blocks).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn smallest_directed_design_passes() {
        let d = design(Universe::residues(5), "(0,1,2,3,4) (4,3,2,1,0)");
        let r = verify_dd(&d);
        assert!(r.passed(), "{r}");
        assert_eq!(r.pair_slots, 20);
        assert_eq!(
            r.summary(),
            "PASS points=5 blocks=2 pair-slots=20 defects=0"
        );
    }

    #[test]
    fn every_bad_pair_is_reported() {
        let d = design(Universe::residues(5), "(0,1,2,3,4) (4,3,2,0,1)");
        let r = verify_dd(&d);
        assert!(!r.passed());
        // (0,1) is doubled and (1,0) is missing.
        assert_eq!(r.defects.len(), 2);
        assert_eq!(r.defects[0].to_string(), "pair (0,1) expected 1 observed 2");
        assert_eq!(r.defects[1].to_string(), "pair (1,0) expected 1 observed 0");
        assert!(r.to_csv().contains("ordered-pair,\"1\",\"0\",1,0"));
    }

    #[test]
    fn wrong_block_count_is_a_defect() {
        let d = design(Universe::residues(5), "(0,1,2,3,4)");
        let r = verify_dd(&d);
        assert!(r.defects.contains(&Defect::BlockCount {
            expected: 2,
            observed: 1
        }));
    }

    #[test]
    fn group_partition_keeps_listed_order() {
        let g: GroupPartition = "{1,2} {3,4} {0,9}".parse().unwrap();
        assert_eq!(g.to_string(), "{1,2} {3,4} {0,9}");
        assert_eq!(g.group_of(Point::Residue(9)), Some(2));
        assert_eq!(g.type_signature(), BTreeMap::from([(2, 3)]));
        assert!("{1,2} {2,3}".parse::<GroupPartition>().is_err());
    }

    #[test]
    fn pbd_of_a_fano_plane_like_structure() {
        // The projective plane of order 2 as a PBD(7, {3}).
        let lines: Vec<Vec<Point>> = [
            [0, 1, 3],
            [1, 2, 4],
            [2, 3, 5],
            [3, 4, 6],
            [4, 5, 0],
            [5, 6, 1],
            [6, 0, 2],
        ]
        .iter()
        .map(|l| l.iter().map(|&x| Point::Residue(x)).collect())
        .collect();
        let r = verify_pbd(&Universe::residues(7), &lines, &BTreeSet::from([3]));
        assert!(r.passed(), "{r}");
        let r = verify_pbd(&Universe::residues(7), &lines[1..], &BTreeSet::from([3]));
        assert_eq!(r.defects.len(), 3);
    }

    #[test]
    fn intersection_requires_same_universe() {
        let a = design(Universe::residues(5), "(0,1,2,3,4) (4,3,2,1,0)");
        let b = design(Universe::residues(5), "(1,0,2,3,4) (4,3,2,0,1)");
        assert_eq!(intersection(&a, &a).unwrap(), 2);
        assert_eq!(intersection(&a, &b).unwrap(), 0);
        let c = design(Universe::residues(6), "(0,1,2,3,4)");
        assert!(matches!(
            intersection(&a, &c),
            Err(VerifyError::UniverseMismatch(..))
        ));
    }
}
