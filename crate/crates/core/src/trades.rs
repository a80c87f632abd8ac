//! Directed trades, trade schedules and intersection-spectrum realization.
//!
//! A trade swaps one block collection for another with the same ordered
//! pairs, so a design stays a design.  Disjoint trades change a design by
//! the sum of their volumes; the planner picks trade sets whose volumes add
//! up to each wanted deficit and then executes every witness.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use thiserror::Error;

use crate::develop::{apply_permutation, DevelopError, Permutation};
use crate::model::{pair_multiset, Block, Design, ModelError, OrderedPair};
use crate::verify::{
    intersection, verify_dd, verify_dgdd, GroupPartition, VerificationReport, VerifyError,
};

/// Components with more trades than this are not enumerated.
const MAX_COMPONENT: usize = 22;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TradeError {
    #[error("block {0} appears twice on one side of a trade")]
    RepeatedBlock(Block),
    #[error("invalid trade: {0}")]
    Invalid(TradeDefect),
    #[error("trade removes {0}, which is not in the design")]
    NotContained(Block),
    #[error("trade adds {0}, which the design already has")]
    DuplicateBlock(Block),
    #[error("trade adds {0}, which leaves the design's universe")]
    OutsideUniverse(Block),
    #[error("no design named {0}")]
    UnknownDesign(String),
    #[error("no trade {0}")]
    UnknownTrade(String),
    #[error("no permutation named {0}")]
    UnknownPermutation(String),
    #[error("`{expr}` does not verify: {summary}")]
    InvalidDesign { expr: String, summary: String },
    #[error("witness for {claimed} measured {measured}")]
    WitnessMismatch { claimed: usize, measured: usize },
    #[error("no 2-(v,5,1) directed design has v = {0}")]
    NonAdmissible(usize),
    #[error("{0} mutually conflicting trades are too many to enumerate")]
    ComponentTooLarge(usize),
    #[error("intersection sizes not realized: {0:?}")]
    Unrealized(Vec<usize>),
    #[error("cannot read schedule from {0:?}")]
    Syntax(String),
    #[error(transparent)]
    Develop(#[from] DevelopError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TradeDefect {
    Empty,
    UnequalVolume {
        removed: usize,
        added: usize,
    },
    SharedBlock(Block),
    PairImbalance {
        pair: OrderedPair,
        removed: u32,
        added: u32,
    },
}

impl fmt::Display for TradeDefect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TradeDefect::Empty => write!(f, "empty trade"),
            TradeDefect::UnequalVolume { removed, added } => {
                write!(f, "removes {removed} blocks but adds {added}")
            }
            TradeDefect::SharedBlock(b) => write!(f, "block {b} is on both sides"),
            TradeDefect::PairImbalance {
                pair,
                removed,
                added,
            } => write!(
                f,
                "pair {pair} covered {removed} times removed, {added} added"
            ),
        }
    }
}

/// A directed trade: `removed` is swapped out for `added`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trade {
    removed: BTreeSet<Block>,
    added: BTreeSet<Block>,
}

fn into_set(blocks: Vec<Block>) -> Result<BTreeSet<Block>, TradeError> {
    let mut set = BTreeSet::new();
    for b in blocks {
        if set.contains(&b) {
            return Err(TradeError::RepeatedBlock(b));
        }
        set.insert(b);
    }
    Ok(set)
}

impl Trade {
    pub fn new(removed: Vec<Block>, added: Vec<Block>) -> Result<Self, TradeError> {
        Ok(Self {
            removed: into_set(removed)?,
            added: into_set(added)?,
        })
    }

    /// The trade taking design `from` to design `to`: the blocks only in
    /// `from` against the blocks only in `to`.
    pub fn between(from: &Design, to: &Design) -> Self {
        Self {
            removed: from
                .block_set()
                .difference(to.block_set())
                .cloned()
                .collect(),
            added: to
                .block_set()
                .difference(from.block_set())
                .cloned()
                .collect(),
        }
    }

    pub fn removed(&self) -> &BTreeSet<Block> {
        &self.removed
    }

    pub fn added(&self) -> &BTreeSet<Block> {
        &self.added
    }

    pub fn volume(&self) -> usize {
        self.removed.len()
    }

    pub fn reversed(&self) -> Self {
        Self {
            removed: self.added.clone(),
            added: self.removed.clone(),
        }
    }
}

impl fmt::Display for Trade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} -> {}",
            self.removed.iter().join(" "),
            self.added.iter().join(" ")
        )
    }
}

/// Checks the trade conditions: equal volumes, disjoint sides and equal
/// ordered-pair multisets.
pub fn validate_trade(t: &Trade) -> Result<(), TradeDefect> {
    if t.removed.is_empty() {
        return Err(TradeDefect::Empty);
    }
    if t.removed.len() != t.added.len() {
        return Err(TradeDefect::UnequalVolume {
            removed: t.removed.len(),
            added: t.added.len(),
        });
    }
    if let Some(b) = t.removed.intersection(&t.added).next() {
        return Err(TradeDefect::SharedBlock(b.clone()));
    }
    let out = pair_multiset(&t.removed);
    let inn = pair_multiset(&t.added);
    for pair in out.keys().chain(inn.keys()).collect::<BTreeSet<_>>() {
        let (r, a) = (
            out.get(pair).copied().unwrap_or(0),
            inn.get(pair).copied().unwrap_or(0),
        );
        if r != a {
            return Err(TradeDefect::PairImbalance {
                pair: *pair,
                removed: r,
                added: a,
            });
        }
    }
    Ok(())
}

fn trade_in_place(
    blocks: &mut BTreeSet<Block>,
    design: &Design,
    t: &Trade,
) -> Result<(), TradeError> {
    if let Some(b) = t.removed.iter().find(|b| !blocks.contains(*b)) {
        return Err(TradeError::NotContained(b.clone()));
    }
    for b in &t.removed {
        blocks.remove(b);
    }
    for b in &t.added {
        if b.len() != design.params().k
            || !b.points().iter().all(|&p| design.universe().contains(p))
        {
            return Err(TradeError::OutsideUniverse(b.clone()));
        }
        if !blocks.insert(b.clone()) {
            return Err(TradeError::DuplicateBlock(b.clone()));
        }
    }
    Ok(())
}

/// `(D ∖ removed) ∪ added`.
pub fn apply_trade(design: &Design, t: &Trade) -> Result<Design, TradeError> {
    let mut blocks = design.block_set().clone();
    trade_in_place(&mut blocks, design, t)?;
    Ok(design.with_blocks(blocks))
}

/// Intersection sizes a pair of 2-(v,5,1) directed designs can a priori
/// share: 0..=b−2 and b, where b = v(v−1)/10.
pub fn jd(v: usize) -> Result<BTreeSet<usize>, TradeError> {
    if v < 5 || !(v * (v - 1)).is_multiple_of(10) {
        return Err(TradeError::NonAdmissible(v));
    }
    let b = v * (v - 1) / 10;
    Ok((0..=b - 2).chain([b]).collect())
}

/// Indexed trades sharing a name.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TradeFamily {
    pub name: String,
    pub volume: usize,
    pub derived: bool,
    pub trades: BTreeMap<u32, Trade>,
}

/// Which checks a design built from a schedule must pass.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DesignCheck {
    Directed,
    Grouped(GroupPartition),
}

impl DesignCheck {
    pub fn run(&self, d: &Design) -> VerificationReport {
        match self {
            DesignCheck::Directed => verify_dd(d),
            DesignCheck::Grouped(g) => verify_dgdd(d, g),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Step {
    /// A trade by family and index; no index means the family's only trade.
    Trade {
        family: String,
        index: Option<u32>,
    },
    Permute(String),
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Step::Trade {
                family,
                index: None,
            } => write!(f, "+{family}"),
            Step::Trade {
                family,
                index: Some(i),
            } => write!(f, "+{family}[{i}]"),
            Step::Permute(name) => write!(f, "*{name}"),
        }
    }
}

/// A named design followed by trades and permutations, applied in order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Schedule {
    pub base: String,
    pub steps: Vec<Step>,
}

impl Schedule {
    pub fn of(base: &str) -> Self {
        Self {
            base: base.to_string(),
            steps: Vec::new(),
        }
    }

    pub fn trade_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Trade { .. }))
            .count()
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for s in &self.steps {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

fn is_name(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '^')
}

impl FromStr for Schedule {
    type Err = TradeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TradeError::Syntax(s.to_string());
        let t = s.trim();
        let cut = t.find(['+', '*']).unwrap_or(t.len());
        let base = &t[..cut];
        if !is_name(base) {
            return Err(err());
        }
        let mut steps = Vec::new();
        let mut rest = &t[cut..];
        while let Some(op) = rest.chars().next() {
            let body = &rest[1..];
            let end = body.find(['+', '*']).unwrap_or(body.len());
            let token = &body[..end];
            rest = &body[end..];
            let step = match op {
                '*' if is_name(token) => Step::Permute(token.to_string()),
                '+' => match token.split_once('[') {
                    Some((fam, idx)) => Step::Trade {
                        family: fam.to_string(),
                        index: Some(
                            idx.strip_suffix(']')
                                .and_then(|i| i.parse().ok())
                                .ok_or_else(err)?,
                        ),
                    },
                    None if is_name(token) => Step::Trade {
                        family: token.to_string(),
                        index: None,
                    },
                    None => return Err(err()),
                },
                _ => return Err(err()),
            };
            steps.push(step);
        }
        Ok(Schedule {
            base: base.to_string(),
            steps,
        })
    }
}

/// Two schedules whose designs are claimed to share `m` blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub m: usize,
    pub left: Schedule,
    pub right: Schedule,
    pub pattern: String,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{} ∩ {}| = {}", self.left, self.right, self.m)
    }
}

/// Designs, trades and permutations that schedules refer to by name.
#[derive(Clone, Debug)]
pub struct Material {
    pub host: String,
    pub designs: BTreeMap<String, Design>,
    pub families: Vec<TradeFamily>,
    pub permutations: BTreeMap<String, Permutation>,
    pub check: DesignCheck,
}

impl Material {
    pub fn design(&self, name: &str) -> Result<&Design, TradeError> {
        self.designs
            .get(name)
            .ok_or_else(|| TradeError::UnknownDesign(name.to_string()))
    }

    pub fn host_design(&self) -> Result<&Design, TradeError> {
        self.design(&self.host)
    }

    pub fn family(&self, name: &str) -> Option<&TradeFamily> {
        self.families.iter().find(|f| f.name == name)
    }

    pub fn trade(&self, family: &str, index: Option<u32>) -> Result<&Trade, TradeError> {
        let unknown = || {
            TradeError::UnknownTrade(match index {
                Some(i) => format!("{family}[{i}]"),
                None => family.to_string(),
            })
        };
        let fam = self.family(family).ok_or_else(unknown)?;
        match index {
            Some(i) => fam.trades.get(&i).ok_or_else(unknown),
            None if fam.trades.len() == 1 => Ok(fam.trades.values().next().expect("one trade")),
            None => Err(unknown()),
        }
    }
}

/// Builds the design a schedule describes.
pub fn run_schedule(material: &Material, schedule: &Schedule) -> Result<Design, TradeError> {
    let mut design = material.design(&schedule.base)?.clone();
    let mut blocks = design.block_set().clone();
    for step in &schedule.steps {
        match step {
            Step::Trade { family, index } => {
                let t = material.trade(family, *index)?;
                trade_in_place(&mut blocks, &design, t)?;
            }
            Step::Permute(name) => {
                let perm = material
                    .permutations
                    .get(name)
                    .ok_or_else(|| TradeError::UnknownPermutation(name.clone()))?;
                design = apply_permutation(&design.with_blocks(blocks), perm)?;
                blocks = design.block_set().clone();
            }
        }
    }
    Ok(design.with_blocks(blocks))
}

/// Builds, verifies and intersects both sides of a witness.
pub fn measure(material: &Material, witness: &Witness) -> Result<usize, TradeError> {
    let build = |s: &Schedule| -> Result<Design, TradeError> {
        let d = run_schedule(material, s)?;
        let report = material.check.run(&d);
        if !report.passed() {
            return Err(TradeError::InvalidDesign {
                expr: s.to_string(),
                summary: report.summary(),
            });
        }
        Ok(d)
    };
    let left = build(&witness.left)?;
    let right = build(&witness.right)?;
    Ok(intersection(&left, &right)?)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TradeRef {
    pub family: String,
    pub index: u32,
    pub volume: usize,
}

impl fmt::Display for TradeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.family, self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumResult {
    /// Blocks in the host design.
    pub blocks: usize,
    pub target: BTreeSet<usize>,
    /// One executed witness per realized value.
    pub witnesses: BTreeMap<usize, Witness>,
    pub unrealized: Vec<usize>,
    /// Trades the planner could not use, with the reason.
    pub rejected: Vec<(TradeRef, String)>,
    /// Claimed witnesses whose measured intersection differs from the claim.
    pub mismatches: Vec<(Witness, usize)>,
}

impl SpectrumResult {
    pub fn realized(&self) -> BTreeSet<usize> {
        self.witnesses.keys().copied().collect()
    }

    pub fn is_complete(&self) -> bool {
        self.unrealized.is_empty()
    }

    pub fn require_complete(&self) -> Result<(), TradeError> {
        if self.is_complete() {
            Ok(())
        } else {
            Err(TradeError::Unrealized(self.unrealized.clone()))
        }
    }
}

/// Usable trades and rejected ones with the reason.
type Sorted = (Vec<(TradeRef, Trade)>, Vec<(TradeRef, String)>);

/// Trades usable against the host, in listed order, plus the rejects.
fn usable_trades(material: &Material, host: &Design) -> Sorted {
    let mut usable = Vec::new();
    let mut rejected = Vec::new();
    for fam in &material.families {
        for (&index, t) in &fam.trades {
            let r = TradeRef {
                family: fam.name.clone(),
                index,
                volume: t.volume(),
            };
            let reason = if let Err(defect) = validate_trade(t) {
                Some(defect.to_string())
            } else if let Some(b) = t.removed.iter().find(|b| !host.contains(b)) {
                Some(format!("removes {b}, which is not in {}", material.host))
            } else if let Some(b) = t.added.iter().find(|b| host.contains(b)) {
                Some(format!("adds {b}, which is already in {}", material.host))
            } else {
                t.added
                    .iter()
                    .find(|b| {
                        b.len() != host.params().k
                            || !b.points().iter().all(|&p| host.universe().contains(p))
                    })
                    .map(|b| format!("adds {b}, which leaves the universe"))
            };
            match reason {
                Some(reason) => rejected.push((r, reason)),
                None => usable.push((r, t.clone())),
            }
        }
    }
    (usable, rejected)
}

fn conflicts(a: &Trade, b: &Trade) -> bool {
    a.removed.intersection(&b.removed).next().is_some()
        || a.added.intersection(&b.added).next().is_some()
}

/// One way to use a component: a set of pairwise compatible trades.
#[derive(Clone, Debug)]
struct Choice {
    volume: usize,
    trades: Vec<usize>,
}

/// Groups trades that share removed or added blocks.
fn components(trades: &[(TradeRef, Trade)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..trades.len()).collect();
    fn find(parent: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while parent[r] != r {
            r = parent[r];
        }
        let mut y = x;
        while parent[y] != r {
            let next = parent[y];
            parent[y] = r;
            y = next;
        }
        r
    }
    let mut owner_removed: BTreeMap<&Block, usize> = BTreeMap::new();
    let mut owner_added: BTreeMap<&Block, usize> = BTreeMap::new();
    for (i, (_, t)) in trades.iter().enumerate() {
        for (blocks, owner) in [
            (&t.removed, &mut owner_removed),
            (&t.added, &mut owner_added),
        ] {
            for b in blocks {
                match owner.get(b) {
                    Some(&j) => {
                        let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                        parent[ri.max(rj)] = ri.min(rj);
                    }
                    None => {
                        owner.insert(b, i);
                    }
                }
            }
        }
    }
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..trades.len() {
        let r = find(&mut parent, i);
        comps.entry(r).or_default().push(i);
    }
    // Roots are component minima, so this is ordered by earliest trade.
    comps.into_values().collect()
}

/// The cheapest independent subset of `comp` for each reachable volume;
/// ties go to the lexicographically smallest trade list.
fn component_options(
    comp: &[usize],
    trades: &[(TradeRef, Trade)],
) -> Result<Vec<Choice>, TradeError> {
    if comp.len() > MAX_COMPONENT {
        return Err(TradeError::ComponentTooLarge(comp.len()));
    }
    let n = comp.len();
    let mut clash = vec![0u32; n];
    for a in 0..n {
        for b in 0..n {
            if a != b && conflicts(&trades[comp[a]].1, &trades[comp[b]].1) {
                clash[a] |= 1 << b;
            }
        }
    }
    let mut best: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut stack = vec![(0usize, 0u32, 0usize)];
    while let Some((next, chosen, volume)) = stack.pop() {
        if next == n {
            let picked: Vec<usize> = (0..n)
                .filter(|&i| chosen & (1 << i) != 0)
                .map(|i| comp[i])
                .collect();
            let better = match best.get(&volume) {
                None => true,
                Some(cur) => (picked.len(), &picked) < (cur.len(), cur),
            };
            if better {
                best.insert(volume, picked);
            }
            continue;
        }
        stack.push((next + 1, chosen, volume));
        if clash[next] & chosen == 0 {
            stack.push((
                next + 1,
                chosen | (1 << next),
                volume + trades[comp[next]].1.volume(),
            ));
        }
    }
    Ok(best
        .into_iter()
        .map(|(volume, trades)| Choice { volume, trades })
        .collect())
}

fn pattern_of(refs: &[&TradeRef]) -> String {
    let by_volume = refs.iter().map(|r| r.volume).counts();
    let mut parts: Vec<(usize, usize)> = by_volume.into_iter().collect();
    parts.sort();
    let text = parts.iter().map(|(v, c)| format!("{c}x{v}")).join("+");
    format!("trades {text}")
}

/// Finds and executes a witness for every value of `target`.
///
/// Claimed witnesses (pairs of schedules with a stated intersection) are
/// measured first and used for their value when the measurement agrees.
/// Remaining values m are planned as deficits b − m from the host's usable
/// trades: trades that share blocks form components, each component offers
/// its independent subsets, and a knapsack over components picks the fewest
/// trades.  Ties prefer earlier components using their lowest-indexed trades.
pub fn realize_spectrum(
    material: &Material,
    target: &BTreeSet<usize>,
    claimed: &[Witness],
) -> Result<SpectrumResult, TradeError> {
    let host = material.host_design()?;
    let b = host.len();
    let mut witnesses = BTreeMap::new();
    let mut mismatches = Vec::new();
    for w in claimed {
        let measured = measure(material, w)?;
        if measured != w.m {
            mismatches.push((w.clone(), measured));
        } else if target.contains(&w.m) {
            witnesses.entry(w.m).or_insert_with(|| w.clone());
        }
    }

    let (usable, rejected) = usable_trades(material, host);
    let comps = components(&usable);
    let options = comps
        .iter()
        .map(|c| component_options(c, &usable))
        .collect::<Result<Vec<_>, _>>()?;

    // best[c][d]: fewest trades reaching deficit d with components c.. .
    const NONE: u32 = u32::MAX;
    let mut best = vec![vec![NONE; b + 1]; options.len() + 1];
    best[options.len()][0] = 0;
    for c in (0..options.len()).rev() {
        for d in 0..=b {
            let mut cost = NONE;
            for o in &options[c] {
                if o.volume <= d && best[c + 1][d - o.volume] != NONE {
                    cost = cost.min(best[c + 1][d - o.volume] + o.trades.len() as u32);
                }
            }
            best[c][d] = cost;
        }
    }

    let mut unrealized = Vec::new();
    for &m in target {
        if witnesses.contains_key(&m) {
            continue;
        }
        if m > b {
            unrealized.push(m);
            continue;
        }
        let mut d = b - m;
        if best[0][d] == NONE {
            unrealized.push(m);
            continue;
        }
        let mut picked: Vec<usize> = Vec::new();
        for c in 0..options.len() {
            let choice = options[c]
                .iter()
                .filter(|o| {
                    o.volume <= d
                        && best[c + 1][d - o.volume] != NONE
                        && best[c + 1][d - o.volume] + o.trades.len() as u32 == best[c][d]
                })
                .min_by(|x, y| {
                    // Empty options sort last so early trades are preferred.
                    (x.trades.is_empty(), &x.trades).cmp(&(y.trades.is_empty(), &y.trades))
                })
                .expect("table entry has a witness");
            picked.extend(&choice.trades);
            d -= choice.volume;
        }
        let refs: Vec<&TradeRef> = picked.iter().map(|&i| &usable[i].0).collect();
        let witness = Witness {
            m,
            left: Schedule::of(&material.host),
            right: Schedule {
                base: material.host.clone(),
                steps: refs
                    .iter()
                    .map(|r| Step::Trade {
                        family: r.family.clone(),
                        index: Some(r.index),
                    })
                    .collect(),
            },
            pattern: if refs.is_empty() {
                "identity".to_string()
            } else {
                pattern_of(&refs)
            },
        };
        witnesses.insert(m, witness);
    }

    for w in witnesses.values() {
        let measured = measure(material, w)?;
        if measured != w.m {
            return Err(TradeError::WitnessMismatch {
                claimed: w.m,
                measured,
            });
        }
    }

    Ok(SpectrumResult {
        blocks: b,
        target: target.clone(),
        witnesses,
        unrealized,
        rejected,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_blocks, Params, Universe};

    fn trade(text: &str) -> Trade {
        let (a, b) = text.split_once("->").unwrap();
        Trade::new(parse_blocks(a).unwrap(), parse_blocks(b).unwrap()).unwrap()
    }

    #[test]
    fn swap_of_adjacent_points_is_a_trade() {
        let t = trade("(0,1,6,8,18) (1,0,16,14,4) -> (1,0,6,8,18) (0,1,16,14,4)");
        assert_eq!(validate_trade(&t), Ok(()));
        assert_eq!(t.volume(), 2);
        assert_eq!(validate_trade(&t.reversed()), Ok(()));
    }

    #[test]
    fn unbalanced_trades_are_rejected() {
        let t = trade("(0,1,2,3,4) (4,3,2,1,0) -> (1,0,2,3,4) (4,3,2,1,0)");
        assert!(matches!(
            validate_trade(&t),
            Err(TradeDefect::SharedBlock(_))
        ));
        let t = trade("(0,1,2,3,4) -> (1,0,2,3,4)");
        assert!(matches!(
            validate_trade(&t),
            Err(TradeDefect::PairImbalance { .. })
        ));
        let t = trade("(0,1,2,3,4) (4,3,2,1,0) -> (1,0,2,3,4)");
        assert!(matches!(
            validate_trade(&t),
            Err(TradeDefect::UnequalVolume { .. })
        ));
        assert!(matches!(
            Trade::new(parse_blocks("(0,1) (0,1)").unwrap(), vec![]),
            Err(TradeError::RepeatedBlock(_))
        ));
    }

    #[test]
    fn jd_excludes_one_below_the_block_count() {
        assert_eq!(jd(5).unwrap(), BTreeSet::from([0, 2]));
        let j = jd(11).unwrap();
        assert_eq!(j.len(), 11);
        assert!(!j.contains(&10) && j.contains(&11) && j.contains(&9));
        assert!(matches!(jd(7), Err(TradeError::NonAdmissible(7))));
    }

    #[test]
    fn schedules_round_trip() {
        for text in ["D", "D+R[1]", "D1*a1", "G+T5+T1[0]", "D+R"] {
            let s: Schedule = text.parse().unwrap();
            assert_eq!(s.to_string(), text);
        }
        assert!("D+R[x]".parse::<Schedule>().is_err());
        assert!("+R".parse::<Schedule>().is_err());
        assert!("D**a".parse::<Schedule>().is_err());
    }

    fn tiny_material() -> Material {
        let u = Universe::residues(5);
        let d1 = Design::new(
            u,
            Params::DIRECTED_FIVE,
            parse_blocks("(0,1,2,3,4) (4,3,2,1,0)").unwrap(),
        )
        .unwrap();
        let d2 = Design::new(
            u,
            Params::DIRECTED_FIVE,
            parse_blocks("(1,0,2,3,4) (4,3,2,0,1)").unwrap(),
        )
        .unwrap();
        let swap = trade("(0,1,2,3,4) (4,3,2,1,0) -> (1,0,2,3,4) (4,3,2,0,1)");
        Material {
            host: "D1".into(),
            designs: BTreeMap::from([("D1".into(), d1), ("D2".into(), d2)]),
            families: vec![TradeFamily {
                name: "S".into(),
                volume: 2,
                derived: false,
                trades: BTreeMap::from([(0, swap)]),
            }],
            permutations: BTreeMap::new(),
            check: DesignCheck::Directed,
        }
    }

    #[test]
    fn planner_realizes_the_order_five_spectrum() {
        let m = tiny_material();
        let r = realize_spectrum(&m, &jd(5).unwrap(), &[]).unwrap();
        assert!(r.is_complete());
        assert_eq!(r.realized(), BTreeSet::from([0, 2]));
        assert_eq!(r.witnesses[&0].right.to_string(), "D1+S[0]");
        assert_eq!(r.witnesses[&2].pattern, "identity");
    }

    #[test]
    fn claimed_witness_is_measured() {
        let m = tiny_material();
        let good = Witness {
            m: 0,
            left: Schedule::of("D1"),
            right: Schedule::of("D2"),
            pattern: "claimed pair".into(),
        };
        let bad = Witness {
            m: 2,
            ..good.clone()
        };
        let r = realize_spectrum(&m, &BTreeSet::from([0]), &[good.clone(), bad]).unwrap();
        assert_eq!(r.witnesses[&0], good);
        assert_eq!(r.mismatches.len(), 1);
        assert_eq!(r.mismatches[0].1, 0);
    }

    #[test]
    fn trade_outside_the_host_is_rejected() {
        let mut m = tiny_material();
        m.families[0].trades.insert(
            1,
            trade("(1,0,2,3,4) (4,3,2,0,1) -> (0,1,2,3,4) (4,3,2,1,0)"),
        );
        let r = realize_spectrum(&m, &jd(5).unwrap(), &[]).unwrap();
        assert_eq!(r.rejected.len(), 1);
        assert_eq!(r.rejected[0].0.to_string(), "S[1]");
    }

    #[test]
    fn applying_a_missing_trade_fails() {
        let m = tiny_material();
        let t = trade("(1,0,2,3,4) (4,3,2,0,1) -> (0,1,2,3,4) (4,3,2,1,0)");
        assert!(matches!(
            apply_trade(m.host_design().unwrap(), &t),
            Err(TradeError::NotContained(_))
        ));
    }
}
