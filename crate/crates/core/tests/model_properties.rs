use std::collections::BTreeSet;

use dirdesign::develop::{
    apply_permutation, develop, BaseBlockSet, DevelopmentRule, InfinityPolicy, OrbitGroup,
    Permutation,
};
use dirdesign::model::{
    block_from_pairs, pair_multiset, parse_blocks, render_blocks, Block, Design, Params, Point,
    Universe,
};
use dirdesign::verify::{intersection, verify_dd};
use proptest::prelude::*;

/// k distinct residues below n, in random order.
fn block_on(n: u32, k: usize) -> impl Strategy<Value = Block> {
    Just((0..n).collect::<Vec<u32>>())
        .prop_shuffle()
        .prop_map(move |v| Block::residues(&v[..k]).unwrap())
}

fn translation(n: u32, c: u32) -> Permutation {
    let mut seen = BTreeSet::new();
    let mut cycles = Vec::new();
    for start in 0..n {
        if !seen.insert(start) {
            continue;
        }
        let mut cycle = vec![Point::Residue(start)];
        let mut x = (start + c) % n;
        while x != start {
            seen.insert(x);
            cycle.push(Point::Residue(x));
            x = (x + c) % n;
        }
        if cycle.len() > 1 {
            cycles.push(cycle);
        }
    }
    Permutation::from_cycles(cycles).unwrap()
}

fn cyclic(n: u32, blocks: Vec<Block>) -> BaseBlockSet {
    BaseBlockSet {
        universe: Universe::residues(n),
        params: Params::DIRECTED_FIVE,
        policy: InfinityPolicy::fixed(),
        groups: vec![OrbitGroup {
            rule: DevelopmentRule::CyclicAdd {
                step: 1,
                modulus: n,
                orbit: n,
                partial: false,
            },
            blocks,
        }],
        appended: Vec::new(),
    }
}

/// The cyclic 2-(21,5,1)DD.
fn d21() -> Design {
    let base = parse_blocks("(0,1,6,8,18) (1,0,16,14,4)").unwrap();
    develop(&cyclic(21, base)).unwrap()
}

proptest! {
    #[test]
    fn block_has_k_choose_2_distinct_pairs(b in (2usize..=7).prop_flat_map(|k| block_on(12, k))) {
        let k = b.len();
        let pairs: Vec<_> = b.ordered_pairs().collect();
        prop_assert_eq!(pairs.len(), k * (k - 1) / 2);
        let set: BTreeSet<_> = pairs.iter().copied().collect();
        prop_assert_eq!(set.len(), pairs.len());
        prop_assert_eq!(block_from_pairs(&set), Some(b.clone()));
    }

    #[test]
    fn reversal_is_an_involution_that_reverses_pairs(b in block_on(30, 5)) {
        let r = b.reversed();
        prop_assert_eq!(r.reversed(), b.clone());
        let reversed: BTreeSet<_> = b.ordered_pairs().map(|p| p.reversed()).collect();
        prop_assert_eq!(r.ordered_pairs().collect::<BTreeSet<_>>(), reversed);
        // Together a block and its reverse cover every ordered pair once.
        let all = pair_multiset([&b, &r]);
        prop_assert_eq!(all.len(), 20);
        prop_assert!(all.values().all(|&n| n == 1));
    }

    #[test]
    fn blocks_render_and_parse_back(blocks in prop::collection::vec(block_on(40, 5), 0..6)) {
        let text = render_blocks(&blocks);
        prop_assert_eq!(parse_blocks(&text).unwrap(), blocks);
    }

    #[test]
    fn pair_multiset_is_additive(a in prop::collection::vec(block_on(15, 5), 0..5),
                                 b in prop::collection::vec(block_on(15, 5), 0..5)) {
        let mut joint = pair_multiset(&a);
        for (p, n) in pair_multiset(&b) {
            *joint.entry(p).or_insert(0) += n;
        }
        prop_assert_eq!(pair_multiset(a.iter().chain(&b)), joint);
    }

    #[test]
    fn relabelling_preserves_validity(c in 0u32..21, swap in (0u32..21, 0u32..21)) {
        let d = d21();
        let mut perms = vec![translation(21, c)];
        if swap.0 != swap.1 {
            perms.push(Permutation::from_cycles(vec![vec![Point::Residue(swap.0), Point::Residue(swap.1)]]).unwrap());
        }
        for p in perms {
            let image = apply_permutation(&d, &p).unwrap();
            let report = verify_dd(&image);
            prop_assert!(report.passed());
            prop_assert_eq!(report.pair_slots, 420);
            prop_assert_eq!(image.len(), d.len());
        }
    }

    #[test]
    fn development_commutes_with_translation(
        n in prop::sample::select(vec![11u32, 13, 21, 31]),
        seed in prop::collection::vec(0u32..1000, 5),
        c in 0u32..40,
    ) {
        // Distinct residues from the seed values.
        let mut pts = Vec::new();
        for s in seed {
            let mut x = s % n;
            while pts.contains(&x) {
                x = (x + 1) % n;
            }
            pts.push(x);
        }
        let base = Block::residues(&pts).unwrap();
        let t = translation(n, c % n);
        let developed = develop(&cyclic(n, vec![base.clone()]));
        prop_assume!(developed.is_ok());
        let moved = apply_permutation(&developed.unwrap(), &t).unwrap();
        let table = t.table();
        let shifted_base = base.map_points(|p| table.get(&p).copied().unwrap_or(p)).unwrap();
        prop_assert_eq!(moved, develop(&cyclic(n, vec![shifted_base])).unwrap());
    }

    #[test]
    fn intersection_is_symmetric(c in 0u32..21, d in 1u32..21) {
        let base = d21();
        let a = apply_permutation(&base, &translation(21, c)).unwrap();
        let swap = Permutation::from_cycles(vec![vec![Point::Residue(0), Point::Residue(d)]]).unwrap();
        let b = apply_permutation(&base, &swap).unwrap();
        prop_assert_eq!(intersection(&a, &b).unwrap(), intersection(&b, &a).unwrap());
        prop_assert_eq!(intersection(&a, &a).unwrap(), a.len());
    }
}

#[test]
fn pair_slots_are_ten_per_block() {
    let d = d21();
    let report = verify_dd(&d);
    assert_eq!(report.pair_slots, 10 * d.len());
    assert_eq!(10 * d.len(), 21 * 20);
}
