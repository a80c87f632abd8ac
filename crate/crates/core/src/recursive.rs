//! Recursive constructions: inflating a {5,6}-GDD on V to a directed design
//! on (V × Z2) ∪ {∞}, pairs of such inflations with a prescribed
//! intersection, and block replacement in a PBD.
//!
//! Every point x of V becomes (x, 0) and (x, 1).  A 5-block (6-block) of the
//! GDD receives a directed GDD of type 2^5 (2^6) whose j-th group lands on
//! the j-th point of the block, first group member on (x, 0), second on
//! (x, 1).  A group g receives a directed design on 2|g| + 1 points, the
//! i-th point of which goes to (g[i / 2], i mod 2) and the last one to ∞.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use thiserror::Error;

use crate::catalog::{Catalog, CatalogEntry, CatalogError, EntryKind};
use crate::model::{Block, Design, ModelError, Params, Point, Universe};
use crate::trades::{run_schedule, TradeError};
use crate::verify::{verify_gdd, verify_pbd, GroupPartition, VerificationReport, VerifyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RecursiveError {
    #[error("group of size {0} is not 0 or 2 mod 5")]
    BadGroupSize(usize),
    #[error("block of size {0} has no ingredient (only 5 and 6 do)")]
    BadBlockSize(usize),
    #[error("no directed design ingredient on {0} points")]
    MissingIngredient(usize),
    #[error("no design for PBD blocks of size {0}")]
    MissingSizeDesign(usize),
    #[error("{what} {index}: no ingredient pair intersecting in {value}")]
    UnrealizableChoice {
        what: &'static str,
        index: usize,
        value: usize,
    },
    #[error("choice vector has {found} {what} entries, the GDD needs {expected}")]
    ChoiceLength {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("relabelling produced block {0} twice")]
    RelabelCollision(Block),
    #[error("input does not verify: {0}")]
    InvalidInput(String),
    #[error("{0} needs a prime order")]
    NotPrime(u32),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Trade(#[from] TradeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
}

/// A group divisible design with unordered blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gdd {
    pub universe: Universe,
    pub groups: GroupPartition,
    pub blocks: Vec<Vec<Point>>,
}

impl Gdd {
    /// A `gdd` catalog entry: its groups and unordered blocks.
    pub fn from_entry(entry: &CatalogEntry) -> Result<Self, RecursiveError> {
        match (&entry.kind, &entry.groups) {
            (EntryKind::Gdd, Some(groups)) => Ok(Self {
                universe: entry.universe,
                groups: groups.clone(),
                blocks: entry.unordered_blocks(),
            }),
            _ => Err(RecursiveError::InvalidInput(format!(
                "{} is not a GDD entry",
                entry.id
            ))),
        }
    }

    pub fn verify(&self, sizes: &BTreeSet<usize>) -> VerificationReport {
        verify_gdd(&self.universe, &self.blocks, &self.groups, sizes)
    }

    fn count_blocks(&self, size: usize) -> usize {
        self.blocks.iter().filter(|b| b.len() == size).count()
    }
}

/// A pairwise balanced design with unordered blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pbd {
    pub universe: Universe,
    pub blocks: Vec<Vec<Point>>,
}

impl Pbd {
    pub fn from_entry(entry: &CatalogEntry) -> Result<Self, RecursiveError> {
        match entry.kind {
            EntryKind::Pbd => Ok(Self {
                universe: entry.universe,
                blocks: entry.unordered_blocks(),
            }),
            _ => Err(RecursiveError::InvalidInput(format!(
                "{} is not a PBD entry",
                entry.id
            ))),
        }
    }

    pub fn block_sizes(&self) -> BTreeSet<usize> {
        self.blocks.iter().map(Vec::len).collect()
    }

    pub fn verify(&self) -> VerificationReport {
        verify_pbd(&self.universe, &self.blocks, &self.block_sizes())
    }
}

fn is_prime(n: u32) -> bool {
    n >= 2
        && (2..n)
            .take_while(|d| d * d <= n)
            .all(|d| !n.is_multiple_of(d))
}

/// TD(k, n) over Z_n for prime n ≥ k − 1: group i is {i·n .. i·n + n − 1}
/// and block (a, b) is {i·n + (a + b·i mod n)}; when k = n + 1 the last
/// group holds the slope b instead.
pub fn transversal_design(k: u32, n: u32) -> Result<Gdd, RecursiveError> {
    if !is_prime(n) {
        return Err(RecursiveError::NotPrime(n));
    }
    if k > n + 1 {
        return Err(RecursiveError::InvalidInput(format!(
            "TD({k}, {n}) needs k ≤ n + 1"
        )));
    }
    let point = |i: u32, x: u32| Point::Residue(i * n + x);
    let groups = (0..k)
        .map(|i| (0..n).map(|x| point(i, x)).collect())
        .collect();
    let blocks = (0..n)
        .cartesian_product(0..n)
        .map(|(a, b)| {
            (0..k)
                .map(|i| point(i, if i == n { b } else { (a + b * i) % n }))
                .collect()
        })
        .collect();
    Ok(Gdd {
        universe: Universe::residues(k * n),
        groups: GroupPartition::new(groups)?,
        blocks,
    })
}

/// The lines of AG(2, q) for prime q on the grid q × q: y = m·x + c and
/// x = c.
pub fn affine_plane(q: u32) -> Result<Pbd, RecursiveError> {
    if !is_prime(q) {
        return Err(RecursiveError::NotPrime(q));
    }
    let mut blocks: Vec<Vec<Point>> = (0..q)
        .cartesian_product(0..q)
        .map(|(m, c)| (0..q).map(|x| Point::Coord(x, (m * x + c) % q)).collect())
        .collect();
    blocks.extend((0..q).map(|c| (0..q).map(|y| Point::Coord(c, y)).collect()));
    Ok(Pbd {
        universe: Universe::grid(q, q),
        blocks,
    })
}

/// Design pairs indexed by their intersection size, all on one universe.
#[derive(Clone, Debug)]
pub struct PairFamily {
    pub universe: Universe,
    /// Present only for directed GDD ingredients.
    pub groups: Option<GroupPartition>,
    pub pairs: BTreeMap<usize, (Design, Design)>,
}

impl PairFamily {
    /// One executed witness per realized intersection size of a catalog
    /// entry, under its first verifying reading.
    pub fn from_catalog(catalog: &Catalog, id: &str) -> Result<Self, RecursiveError> {
        let entry = catalog.entry(id)?;
        let reading = catalog.passing_reading(entry);
        let material = catalog.material(entry, reading.as_deref())?;
        let spectrum = catalog.spectrum(id, reading.as_deref())?;
        let mut pairs = BTreeMap::new();
        for (m, w) in &spectrum.witnesses {
            let left = run_schedule(&material, &w.left)?;
            let right = run_schedule(&material, &w.right)?;
            pairs.insert(*m, (left, right));
        }
        Ok(Self {
            universe: entry.universe,
            groups: entry.groups.clone(),
            pairs,
        })
    }

    pub fn values(&self) -> BTreeSet<usize> {
        self.pairs.keys().copied().collect()
    }

    /// The design used when no intersection is asked for: the left side of
    /// the largest value, which every witness family has as the identity.
    pub fn default_design(&self) -> Option<&Design> {
        self.pairs.values().next_back().map(|(l, _)| l)
    }
}

/// Ingredients for inflation: type 2^5 and 2^6 directed GDDs and directed
/// designs keyed by their number of points.
#[derive(Clone, Debug)]
pub struct Ingredients {
    pub five: PairFamily,
    pub six: PairFamily,
    pub designs: BTreeMap<usize, PairFamily>,
}

impl Ingredients {
    /// Built from the catalog's `dgdd-2^5`, `dgdd-2^6` and the directed
    /// designs named in `designs` (e.g. `["v5", "v11"]`).
    pub fn from_catalog(catalog: &Catalog, designs: &[&str]) -> Result<Self, RecursiveError> {
        let mut by_size = BTreeMap::new();
        for id in designs {
            let fam = PairFamily::from_catalog(catalog, id)?;
            by_size.insert(fam.universe.size(), fam);
        }
        Ok(Self {
            five: PairFamily::from_catalog(catalog, "dgdd-2^5")?,
            six: PairFamily::from_catalog(catalog, "dgdd-2^6")?,
            designs: by_size,
        })
    }

    /// Ingredients for every group size of `gdd`, taken from the catalog's
    /// directed designs.
    pub fn for_gdd(catalog: &Catalog, gdd: &Gdd) -> Result<Self, RecursiveError> {
        let by_points = design_entries(catalog);
        let mut ids = BTreeSet::new();
        for g in gdd.groups.groups() {
            if g.len() % 5 != 0 && g.len() % 5 != 2 {
                return Err(RecursiveError::BadGroupSize(g.len()));
            }
            let v = 2 * g.len() + 1;
            ids.insert(
                by_points
                    .get(&v)
                    .ok_or(RecursiveError::MissingIngredient(v))?
                    .as_str(),
            );
        }
        Self::from_catalog(catalog, &ids.into_iter().collect_vec())
    }

    fn for_group(&self, size: usize) -> Result<&PairFamily, RecursiveError> {
        if !size.is_multiple_of(5) && size % 5 != 2 {
            return Err(RecursiveError::BadGroupSize(size));
        }
        self.designs
            .get(&(2 * size + 1))
            .ok_or(RecursiveError::MissingIngredient(2 * size + 1))
    }
}

/// Intersection wanted from each piece of an inflated pair: one value per
/// 5-block, per 6-block and per group, in the GDD's listed order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IngredientChoice {
    pub five: Vec<usize>,
    pub six: Vec<usize>,
    pub groups: Vec<usize>,
}

impl IngredientChoice {
    pub fn total(&self) -> usize {
        self.five.iter().chain(&self.six).chain(&self.groups).sum()
    }

    /// Every piece identical, so both designs coincide.
    pub fn maximal(gdd: &Gdd, ing: &Ingredients) -> Result<Self, RecursiveError> {
        Self::uniform(gdd, ing, |fam| fam.values().last().copied().unwrap_or(0))
    }

    /// Every piece disjoint.
    pub fn zeros(gdd: &Gdd, ing: &Ingredients) -> Result<Self, RecursiveError> {
        Self::uniform(gdd, ing, |_| 0)
    }

    fn uniform(
        gdd: &Gdd,
        ing: &Ingredients,
        pick: impl Fn(&PairFamily) -> usize,
    ) -> Result<Self, RecursiveError> {
        Ok(Self {
            five: vec![pick(&ing.five); gdd.count_blocks(5)],
            six: vec![pick(&ing.six); gdd.count_blocks(6)],
            groups: gdd
                .groups
                .groups()
                .iter()
                .map(|g| ing.for_group(g.len()).map(&pick))
                .collect::<Result<_, _>>()?,
        })
    }

    /// Chooses each value with `pick(index, available values)`; used for
    /// random choices by callers that own an RNG.
    pub fn select(
        gdd: &Gdd,
        ing: &Ingredients,
        mut pick: impl FnMut(&[usize]) -> usize,
    ) -> Result<Self, RecursiveError> {
        let mut choose = |fam: &PairFamily| {
            let vals = fam.values().into_iter().collect_vec();
            vals[pick(&vals) % vals.len()]
        };
        let five = (0..gdd.count_blocks(5))
            .map(|_| choose(&ing.five))
            .collect();
        let six = (0..gdd.count_blocks(6)).map(|_| choose(&ing.six)).collect();
        let mut groups = Vec::new();
        for g in gdd.groups.groups() {
            groups.push(choose(ing.for_group(g.len())?));
        }
        Ok(Self { five, six, groups })
    }
}

/// The inflated universe: (x, z) for the x-th point of V, plus inf0.
fn inflated_universe(v: &Universe) -> Universe {
    Universe::grid(v.size() as u32, 2).with_infinities(1)
}

fn doubled(v: &Universe, x: Point, z: u32) -> Result<Point, RecursiveError> {
    let i = v
        .index(x)
        .ok_or_else(|| RecursiveError::InvalidInput(format!("point {x} is outside {v}")))?;
    Ok(Point::Coord(i as u32, z))
}

/// Relabels a directed GDD of type 2^n onto a block of the GDD.
fn place_dgdd(
    ingredient: &Design,
    groups: &GroupPartition,
    block: &[Point],
    v: &Universe,
) -> Result<Vec<Block>, RecursiveError> {
    let mut map = BTreeMap::new();
    for (g, &x) in groups.groups().iter().zip(block) {
        for (z, &p) in g.iter().enumerate() {
            map.insert(p, doubled(v, x, z as u32)?);
        }
    }
    relabel(ingredient, &map)
}

/// Relabels a directed design on 2|g| + 1 points onto a group.
fn place_group(
    ingredient: &Design,
    group: &[Point],
    v: &Universe,
) -> Result<Vec<Block>, RecursiveError> {
    let u = ingredient.universe();
    let mut map = BTreeMap::new();
    for i in 0..u.size() {
        let p = u.point(i).expect("index inside universe");
        let image = if i == 2 * group.len() {
            Point::Infinity(0)
        } else {
            doubled(v, group[i / 2], (i % 2) as u32)?
        };
        map.insert(p, image);
    }
    relabel(ingredient, &map)
}

fn relabel(design: &Design, map: &BTreeMap<Point, Point>) -> Result<Vec<Block>, RecursiveError> {
    design
        .blocks()
        .map(|b| Ok(b.map_points(|p| map.get(&p).copied().unwrap_or(p))?))
        .collect()
}

fn assemble(universe: Universe, pieces: Vec<Vec<Block>>) -> Result<Design, RecursiveError> {
    let mut seen = BTreeSet::new();
    for b in pieces.into_iter().flatten() {
        if let Some(b) = seen.replace(b) {
            return Err(RecursiveError::RelabelCollision(b));
        }
    }
    Ok(Design::new(universe, Params::DIRECTED_FIVE, seen)?)
}

fn check_gdd(gdd: &Gdd, ing: &Ingredients) -> Result<(), RecursiveError> {
    let report = gdd.verify(&BTreeSet::from([5, 6]));
    if !report.passed() {
        return Err(RecursiveError::InvalidInput(report.summary()));
    }
    for g in gdd.groups.groups() {
        ing.for_group(g.len())?;
    }
    Ok(())
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<(), RecursiveError> {
    if expected == found {
        Ok(())
    } else {
        Err(RecursiveError::ChoiceLength {
            what,
            expected,
            found,
        })
    }
}

/// Picks the design on one side of each piece.  `side` 0 is the left
/// member of a pair, 1 the right one.
fn inflate_side(
    gdd: &Gdd,
    ing: &Ingredients,
    choice: Option<&IngredientChoice>,
    side: usize,
) -> Result<Design, RecursiveError> {
    let pick = |fam: &PairFamily, what: &'static str, index: usize, value: Option<usize>| {
        let design = match value {
            None => fam.default_design(),
            Some(value) => fam
                .pairs
                .get(&value)
                .map(|(l, r)| if side == 0 { l } else { r }),
        };
        design.cloned().ok_or(RecursiveError::UnrealizableChoice {
            what,
            index,
            value: value.unwrap_or(0),
        })
    };
    let (mut five_i, mut six_i) = (0, 0);
    let mut pieces = Vec::new();
    for block in &gdd.blocks {
        let (fam, what, counter, values) = match block.len() {
            5 => (&ing.five, "5-block", &mut five_i, choice.map(|c| &c.five)),
            6 => (&ing.six, "6-block", &mut six_i, choice.map(|c| &c.six)),
            n => return Err(RecursiveError::BadBlockSize(n)),
        };
        let value = values.map(|v| v[*counter]);
        let design = pick(fam, what, *counter, value)?;
        *counter += 1;
        let groups = fam.groups.as_ref().expect("GDD ingredients carry groups");
        pieces.push(place_dgdd(&design, groups, block, &gdd.universe)?);
    }
    for (i, g) in gdd.groups.groups().iter().enumerate() {
        let fam = ing.for_group(g.len())?;
        let design = pick(fam, "group", i, choice.map(|c| c.groups[i]))?;
        pieces.push(place_group(&design, g, &gdd.universe)?);
    }
    assemble(inflated_universe(&gdd.universe), pieces)
}

fn check_choice(gdd: &Gdd, choice: &IngredientChoice) -> Result<(), RecursiveError> {
    check_len("5-block", gdd.count_blocks(5), choice.five.len())?;
    check_len("6-block", gdd.count_blocks(6), choice.six.len())?;
    check_len("group", gdd.groups.len(), choice.groups.len())
}

/// Inflates `gdd` to a directed design on 2|V| + 1 points, using the
/// chosen pieces' left designs or each family's default design.
pub fn inflate_gdd(
    gdd: &Gdd,
    ing: &Ingredients,
    choice: Option<&IngredientChoice>,
) -> Result<Design, RecursiveError> {
    check_gdd(gdd, ing)?;
    if let Some(c) = choice {
        check_choice(gdd, c)?;
    }
    inflate_side(gdd, ing, choice, 0)
}

/// Two inflations of `gdd` whose pieces pairwise share the chosen number of
/// blocks, and the total they should share.
pub fn inflate_gdd_pair(
    gdd: &Gdd,
    ing: &Ingredients,
    choice: &IngredientChoice,
) -> Result<(Design, Design, usize), RecursiveError> {
    check_gdd(gdd, ing)?;
    check_choice(gdd, choice)?;
    let left = inflate_side(gdd, ing, Some(choice), 0)?;
    let right = inflate_side(gdd, ing, Some(choice), 1)?;
    Ok((left, right, choice.total()))
}

/// The first directed-design entry for each number of points.
fn design_entries(catalog: &Catalog) -> BTreeMap<usize, String> {
    let mut out = BTreeMap::new();
    for e in catalog.entries() {
        if e.kind == EntryKind::DirectedDesign {
            out.entry(e.universe.size()).or_insert_with(|| e.id.clone());
        }
    }
    out
}

/// The host design of a catalog directed design on each requested number
/// of points, under its first verifying reading.
pub fn catalog_designs_by_size(
    catalog: &Catalog,
    sizes: &BTreeSet<usize>,
) -> Result<BTreeMap<usize, Design>, RecursiveError> {
    let by_points = design_entries(catalog);
    let mut out = BTreeMap::new();
    for &size in sizes {
        let id = by_points
            .get(&size)
            .ok_or(RecursiveError::MissingSizeDesign(size))?;
        let entry = catalog.entry(id)?;
        let reading = catalog.passing_reading(entry);
        let host = entry
            .host()
            .ok_or(RecursiveError::MissingSizeDesign(size))?;
        out.insert(
            size,
            catalog.build_design(entry, &host.name, reading.as_deref())?,
        );
    }
    Ok(out)
}

/// Replaces every PBD block by a copy of the directed design for its size;
/// the design's i-th point goes to the block's i-th point.
pub fn pbd_inflate(
    pbd: &Pbd,
    designs_by_size: &BTreeMap<usize, Design>,
) -> Result<Design, RecursiveError> {
    let report = pbd.verify();
    if !report.passed() {
        return Err(RecursiveError::InvalidInput(report.summary()));
    }
    let mut pieces = Vec::new();
    for block in &pbd.blocks {
        let design = designs_by_size
            .get(&block.len())
            .ok_or(RecursiveError::MissingSizeDesign(block.len()))?;
        let u = design.universe();
        if u.size() != block.len() {
            return Err(RecursiveError::MissingSizeDesign(block.len()));
        }
        let map = (0..u.size())
            .map(|i| (u.point(i).expect("index inside universe"), block[i]))
            .collect();
        pieces.push(relabel(design, &map)?);
    }
    assemble(pbd.universe, pieces)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transversal_design_verifies() {
        let td = transversal_design(5, 5).unwrap();
        assert_eq!(td.blocks.len(), 25);
        assert!(td.verify(&BTreeSet::from([5])).passed());
        assert!(transversal_design(5, 6).is_err());
        let td65 = transversal_design(6, 5).unwrap();
        assert!(td65.verify(&BTreeSet::from([6])).passed());
        assert!(transversal_design(7, 5).is_err());
    }

    #[test]
    fn affine_plane_verifies() {
        let ag = affine_plane(5).unwrap();
        assert_eq!(ag.blocks.len(), 30);
        assert!(ag.verify().passed());
    }
}
