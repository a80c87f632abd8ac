//! Brute-force cross-checks at tiny scale.  Nothing here calls the
//! verifier or the trade machinery; pair coverage is counted directly.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use thiserror::Error;

use crate::model::{Block, Design, ModelError, Params, Point, Universe};
use crate::verify::GroupPartition;

/// Largest block size checked exhaustively for volume-1 trades.
pub const MAX_EXHAUSTIVE_K: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("exhaustive check supports k ≤ {MAX_EXHAUSTIVE_K}, not {0}")]
    TooLarge(usize),
    #[error("groups must partition residues 0..n; found point {0}")]
    GroupPoint(Point),
    #[error("{0} cross-group ordered pairs exceed the 128-bit search mask")]
    TooManyPairs(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// All 2-(5,5,1) directed designs on {0..4} and every intersection size
/// two of them can have.
#[derive(Clone, Debug)]
pub struct Dd5Enumeration {
    pub designs: Vec<Design>,
    pub spectrum: BTreeSet<usize>,
}

/// Bit (a·k + b) for every a before b in `order`.
fn pair_mask(order: &[usize], k: usize) -> u64 {
    let mut mask = 0;
    for (i, &a) in order.iter().enumerate() {
        for &b in &order[i + 1..] {
            mask |= 1 << (a * k + b);
        }
    }
    mask
}

/// Pairs of orderings of {0..4} whose pair masks tile all 20 ordered pairs.
pub fn enumerate_dd5() -> Result<Dd5Enumeration, OracleError> {
    let all: u64 = (0..5)
        .cartesian_product(0..5)
        .filter(|(a, b)| a != b)
        .map(|(a, b)| 1u64 << (a * 5 + b))
        .sum();
    let orders: Vec<Vec<usize>> = (0..5).permutations(5).collect();
    let masks: Vec<u64> = orders.iter().map(|o| pair_mask(o, 5)).collect();
    let mut designs = Vec::new();
    for i in 0..orders.len() {
        for j in i + 1..orders.len() {
            if masks[i] & masks[j] == 0 && masks[i] | masks[j] == all {
                let blocks = [&orders[i], &orders[j]]
                    .into_iter()
                    .map(|o| Block::new(o.iter().map(|&x| Point::Residue(x as u32)).collect()))
                    .collect::<Result<Vec<_>, _>>()?;
                designs.push(Design::new(
                    Universe::residues(5),
                    Params::DIRECTED_FIVE,
                    blocks,
                )?);
            }
        }
    }
    let mut spectrum = BTreeSet::new();
    for d1 in &designs {
        for d2 in &designs {
            spectrum.insert(d1.block_set().intersection(d2.block_set()).count());
        }
    }
    Ok(Dd5Enumeration { designs, spectrum })
}

/// How many orderings of a k-set there are and how many distinct ordered
/// pair sets they produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairSetCensus {
    pub k: usize,
    pub orderings: usize,
    pub distinct_pair_sets: usize,
}

impl PairSetCensus {
    pub fn injective(&self) -> bool {
        self.orderings == self.distinct_pair_sets
    }
}

pub fn pair_set_census(k: usize) -> Result<PairSetCensus, OracleError> {
    if k > MAX_EXHAUSTIVE_K {
        return Err(OracleError::TooLarge(k));
    }
    let masks: Vec<u64> = (0..k).permutations(k).map(|o| pair_mask(&o, k)).collect();
    let distinct: BTreeSet<u64> = masks.iter().copied().collect();
    Ok(PairSetCensus {
        k,
        orderings: masks.len(),
        distinct_pair_sets: distinct.len(),
    })
}

/// True iff no two orderings of a k-set cover the same ordered pairs, so
/// no trade can swap one block for another.
pub fn confirm_no_volume1_trade(k: usize) -> Result<bool, OracleError> {
    Ok(pair_set_census(k)?.injective())
}

/// Why two designs with b blocks each never share exactly b − 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapCertificate {
    pub blocks: usize,
    pub excluded: usize,
    pub census: PairSetCensus,
}

impl GapCertificate {
    /// If |D1 ∩ D2| = b − 1 the two leftover blocks carry the same ordered
    /// pairs (both designs cover every pair the same number of times), which
    /// the census rules out.
    pub fn new(blocks: usize, k: usize) -> Result<Option<Self>, OracleError> {
        let census = pair_set_census(k)?;
        Ok((census.injective() && blocks >= 1).then(|| Self {
            blocks,
            excluded: blocks - 1,
            census,
        }))
    }
}

/// Replaces each block of `design` by every other ordering of its points
/// and counts how many of the results still cover each pair the same
/// number of times; the gap certificate predicts zero.
pub fn single_block_swaps(design: &Design) -> usize {
    let before = design.pair_multiset();
    let mut survivors = 0;
    for b in design.blocks() {
        for order in b.points().iter().copied().permutations(b.len()) {
            let Ok(other) = Block::new(order) else {
                continue;
            };
            if other == *b {
                continue;
            }
            let mut after = before.clone();
            for p in b.ordered_pairs() {
                *after.get_mut(&p).expect("pair of the removed block") -= 1;
            }
            for p in other.ordered_pairs() {
                *after.entry(p).or_insert(0) += 1;
            }
            after.retain(|_, n| *n > 0);
            if after == before {
                survivors += 1;
            }
        }
    }
    survivors
}

struct Search {
    points: usize,
    /// Candidate blocks and their pair masks.
    candidates: Vec<(Vec<usize>, u128)>,
    /// For each cross pair, the candidates covering it.
    by_pair: Vec<Vec<usize>>,
    full: u128,
    limit: usize,
    found: Vec<Vec<usize>>,
}

impl Search {
    fn run(&mut self, covered: u128, chosen: &mut Vec<usize>) {
        if self.found.len() >= self.limit {
            return;
        }
        if covered == self.full {
            self.found.push(chosen.clone());
            return;
        }
        // The uncovered pair with the fewest fitting candidates.
        let mut best: Option<(usize, Vec<usize>)> = None;
        for pair in 0..self.by_pair.len() {
            if covered >> pair & 1 == 1 {
                continue;
            }
            let fits: Vec<usize> = self.by_pair[pair]
                .iter()
                .copied()
                .filter(|&c| self.candidates[c].1 & covered == 0)
                .collect();
            if best.as_ref().is_none_or(|(_, f)| fits.len() < f.len()) {
                let empty = fits.is_empty();
                best = Some((pair, fits));
                if empty {
                    break;
                }
            }
        }
        let Some((_, fits)) = best else { return };
        for c in fits {
            chosen.push(c);
            self.run(covered | self.candidates[c].1, chosen);
            chosen.pop();
            if self.found.len() >= self.limit {
                return;
            }
        }
    }
}

/// Backtracking exact cover: up to `limit` directed GDDs on `groups` with
/// blocks of size 5 that contain every block of `seed`.  A seed block
/// that repeats a cross pair or uses a pair inside a group gives no
/// solutions.
pub fn complete_dgdd(
    groups: &GroupPartition,
    seed: &[Block],
    limit: usize,
) -> Result<Vec<Design>, OracleError> {
    let n = groups.point_count();
    let mut group_of = vec![usize::MAX; n];
    for (gi, g) in groups.groups().iter().enumerate() {
        for &p in g {
            match p {
                Point::Residue(r) if (r as usize) < n => group_of[r as usize] = gi,
                other => return Err(OracleError::GroupPoint(other)),
            }
        }
    }
    let mut pair_index = BTreeMap::new();
    for a in 0..n {
        for b in 0..n {
            if group_of[a] != group_of[b] {
                let next = pair_index.len();
                pair_index.insert((a, b), next);
            }
        }
    }
    if pair_index.len() > 128 {
        return Err(OracleError::TooManyPairs(pair_index.len()));
    }
    let mask_of = |order: &[usize]| -> Option<u128> {
        let mut mask = 0u128;
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                mask |= 1u128 << pair_index.get(&(a, b))?;
            }
        }
        Some(mask)
    };
    let full = if pair_index.len() == 128 {
        u128::MAX
    } else {
        (1u128 << pair_index.len()) - 1
    };

    let mut covered = 0u128;
    for b in seed {
        let order: Option<Vec<usize>> = b
            .points()
            .iter()
            .map(|p| match p {
                Point::Residue(r) if (*r as usize) < n => Some(*r as usize),
                _ => None,
            })
            .collect();
        let Some(mask) = order.and_then(|o| mask_of(&o)) else {
            return Ok(Vec::new());
        };
        if mask & covered != 0 {
            return Ok(Vec::new());
        }
        covered |= mask;
    }

    // Candidates: one point from each of five groups, in every order,
    // skipping any that clash with the seed.
    let mut candidates = Vec::new();
    for five in groups.groups().iter().combinations(5) {
        for pick in five.iter().map(|g| g.iter()).multi_cartesian_product() {
            let pts: Vec<usize> = pick
                .iter()
                .map(|p| match p {
                    Point::Residue(r) => *r as usize,
                    _ => unreachable!("checked above"),
                })
                .collect();
            for order in pts.iter().copied().permutations(5) {
                let mask = mask_of(&order).expect("cross-group block");
                if mask & covered == 0 {
                    candidates.push((order, mask));
                }
            }
        }
    }
    let mut by_pair = vec![Vec::new(); pair_index.len()];
    for (ci, (_, mask)) in candidates.iter().enumerate() {
        for (pair, list) in by_pair.iter_mut().enumerate() {
            if mask >> pair & 1 == 1 {
                list.push(ci);
            }
        }
    }
    let mut search = Search {
        points: n,
        candidates,
        by_pair,
        full,
        limit,
        found: Vec::new(),
    };
    search.run(covered, &mut Vec::new());

    let universe = Universe::residues(search.points as u32);
    search
        .found
        .iter()
        .map(|sol| {
            let blocks = seed
                .iter()
                .cloned()
                .map(Ok)
                .chain(sol.iter().map(|&c| {
                    Block::new(
                        search.candidates[c]
                            .0
                            .iter()
                            .map(|&x| Point::Residue(x as u32))
                            .collect(),
                    )
                }))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Design::new(universe, Params::DIRECTED_FIVE, blocks)?)
        })
        .collect()
}

/// Up to `limit` directed GDDs with 5-blocks on `groups`.
pub fn search_dgdd(groups: &GroupPartition, limit: usize) -> Result<Vec<Design>, OracleError> {
    complete_dgdd(groups, &[], limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dd5_enumeration() {
        let e = enumerate_dd5().unwrap();
        assert_eq!(e.designs.len(), 60);
        assert_eq!(e.spectrum, BTreeSet::from([0, 2]));
        for d in &e.designs {
            let bs: Vec<&Block> = d.blocks().collect();
            assert_eq!(bs[0].reversed(), *bs[1]);
        }
    }

    #[test]
    fn pair_sets_are_injective_for_small_k() {
        for k in 0..=MAX_EXHAUSTIVE_K {
            assert!(confirm_no_volume1_trade(k).unwrap(), "k = {k}");
        }
        assert_eq!(pair_set_census(5).unwrap().orderings, 120);
        assert!(confirm_no_volume1_trade(7).is_err());
    }

    #[test]
    fn dgdd_search_finds_type_two_to_the_five() {
        let groups: GroupPartition = "{1,2} {3,4} {5,6} {7,8} {0,9}".parse().unwrap();
        let found = search_dgdd(&groups, 1).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].len(), 8);
        let bad = Block::residues(&[1, 2, 3, 5, 7]).unwrap();
        assert!(complete_dgdd(&groups, &[bad], 1).unwrap().is_empty());
    }
}
