use std::collections::BTreeSet;
use std::sync::OnceLock;

use dirdesign::catalog::Catalog;
use dirdesign::recursive::{
    affine_plane, catalog_designs_by_size, inflate_gdd, inflate_gdd_pair, pbd_inflate,
    transversal_design, Gdd, IngredientChoice, Ingredients, RecursiveError,
};
use dirdesign::{intersection, verify_dd, ErrataMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Setup {
    td55: Gdd,
    td65: Gdd,
    ing: Ingredients,
}

fn setup() -> &'static Setup {
    static SETUP: OnceLock<Setup> = OnceLock::new();
    SETUP.get_or_init(|| {
        let catalog = Catalog::builtin(ErrataMode::Apply).unwrap();
        let td55 = transversal_design(5, 5).unwrap();
        Setup {
            ing: Ingredients::for_gdd(&catalog, &td55).unwrap(),
            td65: transversal_design(6, 5).unwrap(),
            td55,
        }
    })
}

/// 8 per 5-block, 12 per 6-block, plus each group's design.
fn predicted_blocks(gdd: &Gdd) -> usize {
    let fives = gdd.blocks.iter().filter(|b| b.len() == 5).count();
    let sixes = gdd.blocks.iter().filter(|b| b.len() == 6).count();
    let groups: usize = gdd
        .groups
        .groups()
        .iter()
        .map(|g| (2 * g.len() + 1) * (2 * g.len()) / 10)
        .sum();
    8 * fives + 12 * sixes + groups
}

#[test]
fn ingredient_values() {
    let ing = &setup().ing;
    assert_eq!(ing.five.values(), (0..=6).chain([8]).collect());
    assert_eq!(ing.six.values(), (0..=10).chain([12]).collect());
    assert_eq!(ing.designs[&11].values(), BTreeSet::from([0, 1, 2, 3, 11]));
}

#[test]
fn inflations_are_directed_designs() {
    let s = setup();
    for (gdd, v, b) in [(&s.td55, 51, 255), (&s.td65, 61, 366)] {
        let d = inflate_gdd(gdd, &s.ing, None).unwrap();
        assert_eq!(d.universe().size(), v);
        assert_eq!(d.len(), b);
        assert_eq!(d.len(), predicted_blocks(gdd));
        assert!(verify_dd(&d).passed());
    }
}

#[test]
fn extreme_choices() {
    let s = setup();
    let zeros = IngredientChoice::zeros(&s.td55, &s.ing).unwrap();
    let (l, r, m) = inflate_gdd_pair(&s.td55, &s.ing, &zeros).unwrap();
    assert_eq!((m, intersection(&l, &r).unwrap()), (0, 0));
    let max = IngredientChoice::maximal(&s.td55, &s.ing).unwrap();
    let (l, r, m) = inflate_gdd_pair(&s.td55, &s.ing, &max).unwrap();
    assert_eq!(l, r);
    assert_eq!(m, 255);
}

#[test]
fn unavailable_values_are_rejected() {
    let s = setup();
    let mut c = IngredientChoice::zeros(&s.td55, &s.ing).unwrap();
    c.five[3] = 7;
    assert!(matches!(
        inflate_gdd_pair(&s.td55, &s.ing, &c),
        Err(RecursiveError::UnrealizableChoice { value: 7, .. })
    ));
    c.five.pop();
    assert!(matches!(
        inflate_gdd_pair(&s.td55, &s.ing, &c),
        Err(RecursiveError::ChoiceLength { .. })
    ));
}

#[test]
fn affine_plane_inflation() {
    let catalog = Catalog::builtin(ErrataMode::Apply).unwrap();
    let ag = affine_plane(5).unwrap();
    let designs = catalog_designs_by_size(&catalog, &ag.block_sizes()).unwrap();
    let d = pbd_inflate(&ag, &designs).unwrap();
    assert_eq!(d.len(), 60);
    assert!(verify_dd(&d).passed());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pair_intersection_is_the_sum_of_choices(seed in any::<u64>(), six in any::<bool>()) {
        let s = setup();
        let gdd = if six { &s.td65 } else { &s.td55 };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let choice = IngredientChoice::select(gdd, &s.ing, |vals| rng.gen_range(0..vals.len())).unwrap();
        let (left, right, predicted) = inflate_gdd_pair(gdd, &s.ing, &choice).unwrap();
        prop_assert_eq!(predicted, choice.total());
        prop_assert_eq!(intersection(&left, &right).unwrap(), predicted);
        prop_assert_eq!(left.len(), predicted_blocks(gdd));
        prop_assert!(verify_dd(&left).passed());
        prop_assert!(verify_dd(&right).passed());
    }
}
