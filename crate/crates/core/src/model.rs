//! Points, ordered blocks, point universes and directed designs.
//!
//! Points carry no moduli of their own; the [`Universe`] a design lives on
//! decides which points exist and how they are densely indexed.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("point {0} is repeated in block")]
    RepeatedPoint(Point),
    #[error("point {point} is not in universe `{universe}`")]
    PointOutsideUniverse { point: Point, universe: Universe },
    #[error("duplicate block {0}")]
    DuplicateBlock(Block),
    #[error("block {block} has {len} points, expected {expected}")]
    BlockSize {
        block: Block,
        len: usize,
        expected: usize,
    },
    #[error("an ordered pair needs two distinct points, got {0} twice")]
    DegeneratePair(Point),
    #[error("cannot read {what} from {text:?}")]
    Syntax { what: &'static str, text: String },
}

/// A point of a design.  Variant order gives the canonical point order:
/// residues, then grid coordinates, then infinite points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Point {
    Residue(u32),
    Coord(u32, u32),
    Infinity(u32),
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Residue(r) => write!(f, "{r}"),
            Point::Coord(a, b) => write!(f, "({a},{b})"),
            Point::Infinity(i) => write!(f, "inf{i}"),
        }
    }
}

fn syntax(what: &'static str, text: &str) -> ModelError {
    ModelError::Syntax {
        what,
        text: text.to_string(),
    }
}

impl FromStr for Point {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(idx) = t.strip_prefix("inf") {
            return idx
                .parse()
                .map(Point::Infinity)
                .map_err(|_| syntax("point", s));
        }
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let (a, b) = inner.split_once(',').ok_or_else(|| syntax("point", s))?;
            let a = a.trim().parse().map_err(|_| syntax("point", s))?;
            let b = b.trim().parse().map_err(|_| syntax("point", s))?;
            return Ok(Point::Coord(a, b));
        }
        t.parse()
            .map(Point::Residue)
            .map_err(|_| syntax("point", s))
    }
}

/// An ordered pair of distinct points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OrderedPair {
    pub first: Point,
    pub second: Point,
}

impl OrderedPair {
    pub fn new(first: Point, second: Point) -> Result<Self, ModelError> {
        if first == second {
            return Err(ModelError::DegeneratePair(first));
        }
        Ok(Self { first, second })
    }

    pub fn reversed(self) -> Self {
        Self {
            first: self.second,
            second: self.first,
        }
    }
}

impl fmt::Display for OrderedPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first, self.second)
    }
}

/// An ordered tuple of distinct points.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Block(Vec<Point>);

impl Block {
    pub fn new(points: Vec<Point>) -> Result<Self, ModelError> {
        let mut seen = BTreeSet::new();
        for &p in &points {
            if !seen.insert(p) {
                return Err(ModelError::RepeatedPoint(p));
            }
        }
        Ok(Self(points))
    }

    pub fn residues(values: &[u32]) -> Result<Self, ModelError> {
        Self::new(values.iter().map(|&r| Point::Residue(r)).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Every (x, y) with x listed before y, in lexicographic position order.
    pub fn ordered_pairs(&self) -> impl Iterator<Item = OrderedPair> + '_ {
        self.0.iter().enumerate().flat_map(move |(i, &x)| {
            self.0[i + 1..].iter().map(move |&y| OrderedPair {
                first: x,
                second: y,
            })
        })
    }

    pub fn reversed(&self) -> Block {
        Block(self.0.iter().rev().copied().collect())
    }

    /// Relabels every point; the map must be injective on this block.
    pub fn map_points<F>(&self, mut f: F) -> Result<Block, ModelError>
    where
        F: FnMut(Point) -> Point,
    {
        Block::new(self.0.iter().map(|&p| f(p)).collect())
    }

    pub fn try_map_points<F, E>(&self, mut f: F) -> Result<Result<Block, ModelError>, E>
    where
        F: FnMut(Point) -> Result<Point, E>,
    {
        let pts = self
            .0
            .iter()
            .map(|&p| f(p))
            .collect::<Result<Vec<_>, E>>()?;
        Ok(Block::new(pts))
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().join(","))
    }
}

/// Splits `s` at commas that are not nested inside parentheses.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

impl FromStr for Block {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| syntax("block", s))?;
        let points = split_top_level(inner)
            .into_iter()
            .map(str::parse)
            .collect::<Result<Vec<Point>, _>>()?;
        Block::new(points)
    }
}

/// Parses a whitespace-separated run of parenthesised blocks.
pub fn parse_blocks(s: &str) -> Result<Vec<Block>, ModelError> {
    let mut blocks = Vec::new();
    let mut depth = 0i32;
    let mut start = None;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => {
                if depth == 0 {
                    start = Some(i);
                }
                depth += 1;
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(syntax("block list", s));
                }
                if depth == 0 {
                    let from = start.take().ok_or_else(|| syntax("block list", s))?;
                    blocks.push(s[from..=i].parse()?);
                }
            }
            c if depth == 0 && !c.is_whitespace() => return Err(syntax("block list", s)),
            _ => {}
        }
    }
    if depth != 0 {
        return Err(syntax("block list", s));
    }
    Ok(blocks)
}

pub fn render_blocks<'a, I: IntoIterator<Item = &'a Block>>(blocks: I) -> String {
    blocks.into_iter().join(" ")
}

/// The unique block whose ordered pairs are exactly `pairs`, if one exists.
///
/// A block corresponds to a transitive tournament on its points, so the
/// point with i successors sits i places from the end.
pub fn block_from_pairs(pairs: &BTreeSet<OrderedPair>) -> Option<Block> {
    let mut out_degree: BTreeMap<Point, usize> = BTreeMap::new();
    for pair in pairs {
        *out_degree.entry(pair.first).or_default() += 1;
        out_degree.entry(pair.second).or_default();
    }
    let k = out_degree.len();
    if k < 2 || pairs.len() != k * (k - 1) / 2 {
        return None;
    }
    let mut slots: Vec<Option<Point>> = vec![None; k];
    for (&p, &d) in &out_degree {
        let pos = k.checked_sub(1 + d)?;
        if slots[pos].replace(p).is_some() {
            return None;
        }
    }
    let block = Block::new(slots.into_iter().collect::<Option<Vec<_>>>()?).ok()?;
    let rebuilt: BTreeSet<OrderedPair> = block.ordered_pairs().collect();
    (rebuilt == *pairs).then_some(block)
}

pub type PairMultiset = BTreeMap<OrderedPair, u32>;

pub fn pair_multiset<'a, I: IntoIterator<Item = &'a Block>>(blocks: I) -> PairMultiset {
    let mut counts = PairMultiset::new();
    for block in blocks {
        for pair in block.ordered_pairs() {
            *counts.entry(pair).or_default() += 1;
        }
    }
    counts
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Base {
    Residues(u32),
    Grid(u32, u32),
}

/// The point set of a design: residues mod m or an m×n grid, plus a number
/// of infinite points.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Universe {
    base: Base,
    infinities: u32,
}

impl Universe {
    pub fn residues(m: u32) -> Self {
        Self {
            base: Base::Residues(m),
            infinities: 0,
        }
    }

    pub fn grid(m: u32, n: u32) -> Self {
        Self {
            base: Base::Grid(m, n),
            infinities: 0,
        }
    }

    pub fn with_infinities(self, count: u32) -> Self {
        Self {
            infinities: count,
            ..self
        }
    }

    pub fn base(&self) -> Base {
        self.base
    }

    pub fn infinities(&self) -> u32 {
        self.infinities
    }

    pub fn residue_modulus(&self) -> Option<u32> {
        match self.base {
            Base::Residues(m) => Some(m),
            Base::Grid(..) => None,
        }
    }

    pub fn grid_moduli(&self) -> Option<(u32, u32)> {
        match self.base {
            Base::Grid(m, n) => Some((m, n)),
            Base::Residues(_) => None,
        }
    }

    fn base_size(&self) -> usize {
        match self.base {
            Base::Residues(m) => m as usize,
            Base::Grid(m, n) => m as usize * n as usize,
        }
    }

    pub fn size(&self) -> usize {
        self.base_size() + self.infinities as usize
    }

    /// Dense index in canonical point order.
    pub fn index(&self, p: Point) -> Option<usize> {
        match (p, self.base) {
            (Point::Residue(r), Base::Residues(m)) if r < m => Some(r as usize),
            (Point::Coord(a, b), Base::Grid(m, n)) if a < m && b < n => {
                Some(a as usize * n as usize + b as usize)
            }
            (Point::Infinity(i), _) if i < self.infinities => Some(self.base_size() + i as usize),
            _ => None,
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.index(p).is_some()
    }

    pub fn point(&self, index: usize) -> Option<Point> {
        let base = self.base_size();
        if index >= self.size() {
            return None;
        }
        if index >= base {
            return Some(Point::Infinity((index - base) as u32));
        }
        Some(match self.base {
            Base::Residues(_) => Point::Residue(index as u32),
            Base::Grid(_, n) => {
                Point::Coord((index / n as usize) as u32, (index % n as usize) as u32)
            }
        })
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.size()).filter_map(move |i| self.point(i))
    }
}

impl fmt::Display for Universe {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.base {
            Base::Residues(m) => write!(f, "residues {m}")?,
            Base::Grid(m, n) => write!(f, "grid {m} {n}")?,
        }
        if self.infinities > 0 {
            write!(f, " + inf {}", self.infinities)?;
        }
        Ok(())
    }
}

impl FromStr for Universe {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || syntax("universe", s);
        let num = |t: Option<&str>| -> Result<u32, ModelError> {
            t.and_then(|t| t.parse().ok()).ok_or_else(err)
        };
        let (base, rest) = match s.split_once('+') {
            Some((b, r)) => (b, Some(r)),
            None => (s, None),
        };
        let mut words = base.split_whitespace();
        let universe = match words.next() {
            Some("residues") => Universe::residues(num(words.next())?),
            Some("grid") => {
                let m = num(words.next())?;
                Universe::grid(m, num(words.next())?)
            }
            _ => return Err(err()),
        };
        if words.next().is_some() {
            return Err(err());
        }
        let infinities = match rest {
            None => 0,
            Some(r) => {
                let mut w = r.split_whitespace();
                if w.next() != Some("inf") {
                    return Err(err());
                }
                let k = num(w.next())?;
                if w.next().is_some() {
                    return Err(err());
                }
                k
            }
        };
        Ok(universe.with_infinities(infinities))
    }
}

/// Design parameters t-(v,k,λ); v is the universe size.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Params {
    pub t: u32,
    pub k: usize,
    pub lambda: u32,
}

impl Params {
    pub const DIRECTED_FIVE: Params = Params {
        t: 2,
        k: 5,
        lambda: 1,
    };
}

/// A set of ordered blocks on a universe.  Blocks are kept in canonical
/// order, so iteration and rendering are deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Design {
    universe: Universe,
    params: Params,
    blocks: BTreeSet<Block>,
}

impl Design {
    pub fn new<I>(universe: Universe, params: Params, blocks: I) -> Result<Self, ModelError>
    where
        I: IntoIterator<Item = Block>,
    {
        let mut set = BTreeSet::new();
        for block in blocks {
            if block.len() != params.k {
                return Err(ModelError::BlockSize {
                    len: block.len(),
                    expected: params.k,
                    block,
                });
            }
            if let Some(&point) = block.points().iter().find(|&&p| !universe.contains(p)) {
                return Err(ModelError::PointOutsideUniverse { point, universe });
            }
            if set.contains(&block) {
                return Err(ModelError::DuplicateBlock(block));
            }
            set.insert(block);
        }
        Ok(Self {
            universe,
            params,
            blocks: set,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn blocks(&self) -> impl ExactSizeIterator<Item = &Block> {
        self.blocks.iter()
    }

    pub fn block_set(&self) -> &BTreeSet<Block> {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn contains(&self, block: &Block) -> bool {
        self.blocks.contains(block)
    }

    /// Blocks a directed 2-(v,k,λ) design on this universe must have, when
    /// integral: each block covers k(k−1)/2 of the v(v−1) ordered pairs.
    pub fn expected_block_count(&self) -> Option<usize> {
        let v = self.universe.size();
        let k = self.params.k;
        let num = 2 * self.params.lambda as usize * v * v.saturating_sub(1);
        let den = k * (k - 1);
        num.is_multiple_of(den).then_some(num / den)
    }

    pub fn pair_multiset(&self) -> PairMultiset {
        pair_multiset(&self.blocks)
    }

    /// Same universe and parameters, different blocks; the caller has
    /// already checked the blocks against this design's universe.
    pub(crate) fn with_blocks(&self, blocks: BTreeSet<Block>) -> Design {
        Design {
            universe: self.universe,
            params: self.params,
            blocks,
        }
    }
}

impl fmt::Display for Design {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for block in &self.blocks {
            writeln!(f, "{block}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_rendering_round_trips() {
        for text in ["0", "17", "(0,4)", "(12,3)", "inf0", "inf10"] {
            let p: Point = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!("x1".parse::<Point>().is_err());
        assert!("(1;2)".parse::<Point>().is_err());
    }

    #[test]
    fn canonical_point_order_is_residue_coord_infinity() {
        let mut pts = vec![Point::Infinity(0), Point::Coord(0, 0), Point::Residue(9)];
        pts.sort();
        assert_eq!(
            pts,
            vec![Point::Residue(9), Point::Coord(0, 0), Point::Infinity(0)]
        );
    }

    #[test]
    fn block_has_ten_ordered_pairs() {
        let b = Block::residues(&[3, 5, 1, 4, 9]).unwrap();
        let pairs: Vec<String> = b.ordered_pairs().map(|p| p.to_string()).collect();
        assert_eq!(pairs.len(), 10);
        assert_eq!(pairs[0], "(3,5)");
        assert_eq!(pairs[9], "(4,9)");
    }

    #[test]
    fn repeated_point_is_rejected() {
        assert_eq!(
            Block::residues(&[1, 2, 1]),
            Err(ModelError::RepeatedPoint(Point::Residue(1)))
        );
    }

    #[test]
    fn blocks_parse_with_nested_coordinates() {
        let blocks = parse_blocks("((0,0),(1,1),inf0) (3,4)").unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0].to_string(), "((0,0),(1,1),inf0)");
        assert!(parse_blocks("(1,2) x (3,4)").is_err());
        assert!(parse_blocks("(1,2").is_err());
    }

    #[test]
    fn block_from_pairs_inverts_ordered_pairs() {
        let b = Block::residues(&[2, 4, 7, 0, 5]).unwrap();
        let pairs: BTreeSet<OrderedPair> = b.ordered_pairs().collect();
        assert_eq!(block_from_pairs(&pairs), Some(b));
        let flip = |x: u32, y: u32| {
            let mut set: BTreeSet<OrderedPair> = pairs.clone();
            let pair = OrderedPair::new(Point::Residue(x), Point::Residue(y)).unwrap();
            assert!(set.remove(&pair));
            set.insert(pair.reversed());
            set
        };
        // Flipping adjacent points gives another block; anything else breaks
        // transitivity.
        assert_eq!(
            block_from_pairs(&flip(0, 5)),
            Some(Block::residues(&[2, 4, 7, 5, 0]).unwrap())
        );
        assert_eq!(block_from_pairs(&flip(2, 0)), None);
    }

    #[test]
    fn universe_indexing_is_dense() {
        let u: Universe = "grid 2 22 + inf 1".parse().unwrap();
        assert_eq!(u.size(), 45);
        assert_eq!(u.to_string(), "grid 2 22 + inf 1");
        for (i, p) in u.points().enumerate() {
            assert_eq!(u.index(p), Some(i));
        }
        assert_eq!(u.index(Point::Coord(2, 0)), None);
        assert_eq!(u.index(Point::Residue(0)), None);
        let r: Universe = "residues 54 + inf 11".parse().unwrap();
        assert_eq!(r.index(Point::Infinity(10)), Some(64));
        assert!("residues".parse::<Universe>().is_err());
        assert!("residues 5 + 3".parse::<Universe>().is_err());
    }

    #[test]
    fn design_rejects_duplicates_and_foreign_points() {
        let u = Universe::residues(5);
        let b = Block::residues(&[0, 1, 2, 3, 4]).unwrap();
        assert!(matches!(
            Design::new(u, Params::DIRECTED_FIVE, [b.clone(), b.clone()]),
            Err(ModelError::DuplicateBlock(_))
        ));
        let far = Block::residues(&[0, 1, 2, 3, 5]).unwrap();
        assert!(matches!(
            Design::new(u, Params::DIRECTED_FIVE, [far]),
            Err(ModelError::PointOutsideUniverse { .. })
        ));
        let d = Design::new(u, Params::DIRECTED_FIVE, [b.clone(), b.reversed()]).unwrap();
        assert_eq!(d.expected_block_count(), Some(2));
    }
}
