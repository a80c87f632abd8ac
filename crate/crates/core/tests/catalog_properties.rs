use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use dirdesign::catalog::{parse_entries, print_entries, Catalog, CatalogError, EntryKind, Status};
use dirdesign::trades::{apply_trade, measure, Material, SpectrumResult};
use dirdesign::{intersection, jd, validate_trade, verify_dd, ErrataMode};
use proptest::prelude::*;

const DESIGNS: &str = include_str!("../../../catalog/designs.cat");
const ERRATA: &str = include_str!("../../../catalog/errata.cat");

fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| Catalog::builtin(ErrataMode::Apply).unwrap())
}

fn material(id: &str) -> Material {
    let c = catalog();
    let entry = c.entry(id).unwrap();
    c.material(entry, c.passing_reading(entry).as_deref())
        .unwrap()
}

/// Spectra of the smaller entries, computed once.
fn spectra() -> &'static BTreeMap<&'static str, (Material, SpectrumResult)> {
    static SPECTRA: OnceLock<BTreeMap<&'static str, (Material, SpectrumResult)>> = OnceLock::new();
    SPECTRA.get_or_init(|| {
        ["v5", "v11", "v21", "v25", "v31", "dgdd-2^5", "dgdd-2^6"]
            .into_iter()
            .map(|id| (id, (material(id), catalog().spectrum(id, None).unwrap())))
            .collect()
    })
}

#[test]
fn every_entry_verifies_with_errata() {
    for id in catalog().ids() {
        let v = catalog().verify_entry(id).unwrap();
        assert_eq!(v.status, Status::Pass, "{v}");
    }
}

#[test]
fn directed_designs_have_ten_pair_slots_per_block() {
    let c = catalog();
    for entry in c
        .entries()
        .iter()
        .filter(|e| e.kind == EntryKind::DirectedDesign)
    {
        let v = entry.universe.size();
        let reading = c.passing_reading(entry);
        let host = entry.host().unwrap();
        let d = c
            .build_design(entry, &host.name, reading.as_deref())
            .unwrap();
        let report = verify_dd(&d);
        assert_eq!(report.pair_slots, 10 * d.len(), "{}", entry.id);
        assert_eq!(report.pair_slots, v * (v - 1), "{}", entry.id);
    }
}

#[test]
fn count_audit_matches_block_count() {
    let c = catalog();
    for entry in c.entries().iter().filter(|e| e.host().is_some()) {
        let reading = c.passing_reading(entry);
        for d in &entry.designs {
            let audit = c.audit(entry, &d.name, reading.as_deref()).unwrap();
            assert!(audit.passed(), "{} {}: {audit}", entry.id, d.name);
            let built = c.build_design(entry, &d.name, reading.as_deref()).unwrap();
            assert_eq!(audit.total, built.len());
        }
    }
}

#[test]
fn printed_v95_step_fails_the_audit() {
    let raw = Catalog::builtin(ErrataMode::Ignore).unwrap();
    let entry = raw.entry("v95").unwrap();
    let audit = raw.audit(entry, "D", None).unwrap();
    assert_eq!((audit.total, audit.expected), (1786, Some(893)));
    assert_eq!(audit.to_string(), "19×94 = 1786 (expected 893)");
    assert_ne!(raw.verify_entry("v95").unwrap().status, Status::Pass);
}

#[test]
fn v115_readings_disagree() {
    let v = catalog().verify_entry("v115").unwrap();
    let by_reading: BTreeMap<_, _> = v
        .readings
        .iter()
        .map(|r| (r.reading.clone().unwrap(), r.passed()))
        .collect();
    assert_eq!(
        by_reading,
        BTreeMap::from([("A".to_string(), true), ("B".to_string(), false)])
    );
}

#[test]
fn every_erratum_is_justified() {
    let evals = catalog().erratum_evaluations();
    assert_eq!(evals.len(), catalog().errata().len());
    for e in evals {
        assert!(e.holds(), "{e}");
    }
}

#[test]
fn canonical_text_round_trips() {
    for entries in [catalog().transcribed(), catalog().entries()] {
        let text = print_entries(entries);
        let parsed = parse_entries("printed", &text).unwrap();
        assert_eq!(parsed, entries);
        assert_eq!(print_entries(&parsed), text);
    }
}

#[test]
fn stored_digests_match() {
    for e in catalog().transcribed() {
        assert_eq!(
            e.digest.as_deref(),
            Some(e.compute_digest().as_str()),
            "{}",
            e.id
        );
    }
}

#[test]
fn tampering_is_detected() {
    let tampered = DESIGNS.replacen(
        "base = (0,1,6,8,18) (1,0,16,14,4)",
        "base = (0,1,6,8,18) (1,0,16,4,14)",
        1,
    );
    assert_ne!(tampered, DESIGNS);
    let err = Catalog::from_sources(
        &[("designs.cat", &tampered)],
        Some(("errata.cat", ERRATA)),
        ErrataMode::Apply,
    )
    .unwrap_err();
    assert!(
        matches!(err, CatalogError::ChecksumMismatch { ref entry, .. } if entry == "v21"),
        "{err}"
    );
}

#[test]
fn erratum_must_match_the_printed_value() {
    let wrong = ERRATA.replacen("add 1 mod 94 orbit 94", "add 3 mod 94 orbit 94", 1);
    assert_ne!(wrong, ERRATA);
    let err = Catalog::from_sources(
        &[("designs.cat", DESIGNS)],
        Some(("errata.cat", &wrong)),
        ErrataMode::Apply,
    )
    .unwrap_err();
    assert!(matches!(err, CatalogError::ErratumMismatch { .. }), "{err}");
}

#[test]
fn spectra_cover_their_claims() {
    for (id, (_, s)) in spectra() {
        assert!(s.is_complete(), "{id}: {:?}", s.unrealized);
        assert!(s.mismatches.is_empty(), "{id}");
        assert!(s
            .realized()
            .is_subset(&catalog().full_target(catalog().entry(id).unwrap()).unwrap()));
    }
    assert_eq!(spectra()["v5"].1.realized(), jd(5).unwrap());
    assert_eq!(
        spectra()["v11"].1.realized(),
        BTreeSet::from([0, 1, 2, 3, 11])
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Trades of v21's family T touch disjoint blocks, so any subset of
    /// them applies and each costs exactly its volume.
    #[test]
    fn deficit_is_the_sum_of_volumes(indices in prop::collection::btree_set(0u32..21, 0..21)) {
        let m = material("v21");
        let host = m.host_design().unwrap();
        let mut d = host.clone();
        let mut volume = 0;
        for &i in &indices {
            let t = m.trade("T", Some(i)).unwrap();
            prop_assert_eq!(validate_trade(t), Ok(()));
            d = apply_trade(&d, t).unwrap();
            volume += t.volume();
        }
        prop_assert!(verify_dd(&d).passed());
        prop_assert_eq!(intersection(host, &d).unwrap(), host.len() - volume);
        prop_assert_eq!(volume, 2 * indices.len());
    }

    #[test]
    fn reversed_trade_undoes_the_trade(
        id in prop::sample::select(vec!["v21", "v25", "v31", "v41", "dgdd-2^5"]),
        pick in any::<prop::sample::Index>(),
    ) {
        let m = material(id);
        let host = m.host_design().unwrap();
        let all: Vec<_> = m.families.iter().flat_map(|f| f.trades.values()).collect();
        let t = all[pick.index(all.len())];
        prop_assert_eq!(t.reversed().reversed(), t.clone());
        let traded = apply_trade(host, t).unwrap();
        prop_assert_eq!(traded.pair_multiset(), host.pair_multiset());
        prop_assert_eq!(&apply_trade(&traded, &t.reversed()).unwrap(), host);
    }

    #[test]
    fn witnesses_measure_what_they_claim(
        id in prop::sample::select(vec!["v5", "v11", "v21", "v25", "v31", "dgdd-2^5", "dgdd-2^6"]),
        pick in any::<prop::sample::Index>(),
    ) {
        let (m, s) = &spectra()[id];
        let ws: Vec<_> = s.witnesses.values().collect();
        let w = ws[pick.index(ws.len())];
        prop_assert_eq!(measure(m, w).unwrap(), w.m);
    }
}
