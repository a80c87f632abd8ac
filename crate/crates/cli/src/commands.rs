use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;

use dirdesign::catalog::{
    parse_entries, print_entries, CatalogEntry, Claim, EntryKind, EntryVerification, Status,
};
use dirdesign::oracle::{
    complete_dgdd, confirm_no_volume1_trade, enumerate_dd5, pair_set_census, single_block_swaps,
    GapCertificate,
};
use dirdesign::recursive::{
    affine_plane, catalog_designs_by_size, inflate_gdd, inflate_gdd_pair, pbd_inflate,
    transversal_design, Gdd, IngredientChoice, Ingredients, Pbd,
};
use dirdesign::trades::{Material, Witness};
use dirdesign::{
    intersection, jd, realize_spectrum, verify_dd, verify_dgdd, Catalog, Design, ErrataMode,
    GroupPartition,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{
    CatalogCommand, Cli, Command, ConstructArgs, Format, OracleCommand, SpectrumArgs, Target,
    VerifyArgs,
};

/// Appends a line to the output buffer.
macro_rules! say {
    ($out:expr) => {
        $out.push('\n')
    };
    ($out:expr, $($arg:tt)*) => {{
        $out.push_str(&format!($($arg)*));
        $out.push('\n');
    }};
}

macro_rules! put {
    ($out:expr, $($arg:tt)*) => {
        $out.push_str(&format!($($arg)*))
    };
}

/// Anything that stops a command before a check can run; exit status 2.
#[derive(Debug)]
pub struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

fn input_error(msg: impl Into<String>) -> InputError {
    InputError(msg.into())
}

type Outcome = Result<bool, InputError>;

/// Runs the parsed command; `Ok(false)` means a check failed.
pub fn run(cli: &Cli, out: &mut String) -> Outcome {
    let load = || -> Result<Catalog, InputError> {
        let mode = if cli.no_errata {
            ErrataMode::Ignore
        } else {
            ErrataMode::Apply
        };
        Ok(match &cli.catalog {
            Some(dir) => Catalog::load_dir(dir, mode)?,
            None => Catalog::builtin(mode)?,
        })
    };
    match &cli.command {
        Command::Verify(args) => verify(&load()?, args, out),
        Command::Spectrum(args) => spectrum(&load()?, args, out),
        Command::Construct(args) => construct(&load, args, out),
        Command::Oracle(cmd) => oracle(&load, cmd, out),
        Command::Catalog(cmd) => catalog(&load()?, cmd, out),
    }
}

// ---------------------------------------------------------------- verify

fn verify(catalog: &Catalog, args: &VerifyArgs, out: &mut String) -> Outcome {
    let ids: Vec<String> = if args.all {
        catalog.ids().into_iter().map(str::to_string).collect()
    } else {
        args.ids.iter().chain(&args.entries).cloned().collect()
    };
    if ids.is_empty() {
        return Err(input_error("name entries to verify or pass --all"));
    }
    for id in &ids {
        let entry = catalog.entry(id)?;
        if let Some(r) = &args.reading {
            if !entry.readings.contains(r) {
                return Err(input_error(format!("entry {id} has no reading {r}")));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs.max(1))
        .build()
        .map_err(|e| input_error(e.to_string()))?;
    let results = pool.install(|| {
        ids.par_iter()
            .map(|id| catalog.verify_entry(id))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let results: Vec<EntryVerification> = results
        .into_iter()
        .map(|v| match &args.reading {
            Some(r) => only_reading(v, r),
            None => v,
        })
        .collect();

    match args.format {
        Format::Text => {
            for v in &results {
                put!(out, "{v}");
            }
            say!(out);
            print_verify_table(&results, false, out);
        }
        Format::Md => print_verify_table(&results, true, out),
        Format::Csv => {
            say!(
                out,
                "entry,reading,design,status,count,expected,blocks,pair_slots,defects"
            );
            for v in &results {
                for r in &v.readings {
                    for d in &r.designs {
                        let (count, expected) = match &d.audit {
                            Ok(a) => (
                                a.total.to_string(),
                                a.expected.map_or(String::new(), |e| e.to_string()),
                            ),
                            Err(_) => (String::new(), String::new()),
                        };
                        let (blocks, slots, defects) = match &d.report {
                            Ok(rep) => (
                                rep.blocks.to_string(),
                                rep.pair_slots.to_string(),
                                rep.defects.len().to_string(),
                            ),
                            Err(_) => (String::new(), String::new(), String::new()),
                        };
                        say!(
                            out,
                            "{},{},{},{},{count},{expected},{blocks},{slots},{defects}",
                            v.id,
                            r.reading.as_deref().unwrap_or(""),
                            d.design,
                            if d.passed() { "PASS" } else { "FAIL" },
                        );
                    }
                }
            }
        }
    }
    Ok(results.iter().all(|v| v.status == Status::Pass))
}

/// Keeps one reading; the status is that reading's own.
fn only_reading(mut v: EntryVerification, reading: &str) -> EntryVerification {
    v.readings.retain(|r| r.reading.as_deref() == Some(reading));
    v.status = if v.readings.iter().any(|r| r.passed()) {
        Status::Pass
    } else {
        Status::Fail
    };
    v
}

/// Host blocks, host pair slots and total defects of the reading that
/// decided the status.
fn headline(v: &EntryVerification) -> (String, usize, usize, usize) {
    let reading = v.passing_reading().or(v.readings.first());
    let Some(r) = reading else {
        return (String::new(), 0, 0, 0);
    };
    let (mut blocks, mut slots, mut defects) = (0, 0, 0);
    for (i, d) in r.designs.iter().enumerate() {
        match &d.report {
            Ok(rep) => {
                // Sizes are the host's; defects count over every design.
                if i == 0 {
                    (blocks, slots) = (rep.blocks, rep.pair_slots);
                }
                defects += rep.defects.len();
            }
            Err(_) => defects += 1,
        }
        if matches!(&d.audit, Ok(a) if !a.passed()) || d.audit.is_err() {
            defects += 1;
        }
    }
    (
        r.reading.clone().unwrap_or_else(|| "-".into()),
        blocks,
        slots,
        defects,
    )
}

fn print_verify_table(results: &[EntryVerification], markdown: bool, out: &mut String) {
    let header = [
        "entry",
        "kind",
        "status",
        "reading",
        "blocks",
        "pair slots",
        "defects",
    ];
    let rows: Vec<[String; 7]> = results
        .iter()
        .map(|v| {
            let (reading, blocks, slots, defects) = headline(v);
            [
                v.id.clone(),
                v.kind.to_string(),
                v.status.to_string(),
                reading,
                blocks.to_string(),
                slots.to_string(),
                defects.to_string(),
            ]
        })
        .collect();
    if markdown {
        say!(out, "| {} |", header.join(" | "));
        say!(out, "|{}", "---|".repeat(header.len()));
        for r in &rows {
            say!(out, "| {} |", r.join(" | "));
        }
        return;
    }
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut line = |cells: Vec<&str>| {
        let text: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        say!(out, "{}", text.join("  ").trim_end());
    };
    line(header.to_vec());
    for r in &rows {
        line(r.iter().map(String::as_str).collect());
    }
    let passed = results.iter().filter(|v| v.status == Status::Pass).count();
    say!(out, "{passed}/{} entries pass", results.len());
}

// -------------------------------------------------------------- spectrum

fn spectrum(catalog: &Catalog, args: &SpectrumArgs, out: &mut String) -> Outcome {
    let id = args
        .entry
        .as_ref()
        .or(args.id.as_ref())
        .ok_or_else(|| input_error("name an entry with --entry"))?;
    let entry = catalog.entry(id)?;
    if let Some(r) = &args.reading {
        if !entry.readings.contains(r) {
            return Err(input_error(format!("entry {id} has no reading {r}")));
        }
    }
    let reading = args
        .reading
        .clone()
        .or_else(|| catalog.passing_reading(entry));
    let material = catalog.material(entry, reading.as_deref())?;
    let target = match args.target {
        Target::Full => catalog.full_target(entry)?,
        Target::Subset => catalog.target(entry)?,
    };
    let result = realize_spectrum(&material, &target, &Catalog::claimed_witnesses(entry))?;
    let v = entry.universe.size();
    let length = |w: &Witness| w.left.trade_count() + w.right.trade_count();

    match args.emit {
        Format::Csv => {
            say!(out, "v,m,witness-length,pattern");
            for &m in &target {
                match result.witnesses.get(&m) {
                    Some(w) => say!(out, "{v},{m},{},{}", length(w), w.pattern),
                    None => say!(out, "{v},{m},,unrealized"),
                }
            }
        }
        Format::Md => {
            say!(out, "| v | m | witness-length | pattern |");
            say!(out, "|---|---|---|---|");
            for &m in &target {
                match result.witnesses.get(&m) {
                    Some(w) => say!(out, "| {v} | {m} | {} | {} |", length(w), w.pattern),
                    None => say!(out, "| {v} | {m} | | unrealized |"),
                }
            }
        }
        Format::Text => {
            if let Some(r) = &reading {
                say!(out, "{id} (reading {r}): host has {} blocks", result.blocks);
            } else {
                say!(out, "{id}: host has {} blocks", result.blocks);
            }
            for &m in &target {
                match result.witnesses.get(&m) {
                    Some(w) => say!(out, "  m={m:<4} {:<24} {w}", w.pattern),
                    None => say!(out, "  m={m:<4} UNREALIZED"),
                }
            }
            for (r, reason) in &result.rejected {
                say!(out, "  unused trade {r}: {reason}");
            }
            print_exclusions(catalog, entry, &material, &target, out)?;
            say!(
                out,
                "{}/{} values realized",
                result.witnesses.len(),
                target.len()
            );
        }
    }
    for (w, measured) in &result.mismatches {
        eprintln!("claimed {w} but measured {measured}");
    }
    if !result.unrealized.is_empty() {
        eprintln!(
            "unrealized: {}",
            result
                .unrealized
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        );
    }
    Ok(result.is_complete() && result.mismatches.is_empty())
}

/// For exact claims, why the values outside the claim cannot occur.
fn print_exclusions(
    catalog: &Catalog,
    entry: &CatalogEntry,
    material: &Material,
    target: &BTreeSet<usize>,
    out: &mut String,
) -> Result<(), InputError> {
    if !matches!(entry.claim, Some(Claim::Exact(_))) {
        return Ok(());
    }
    let host = material.host_design()?;
    let b = host.len();
    let candidates: BTreeSet<usize> = (0..=b).filter(|m| !target.contains(m)).collect();
    let full = catalog.full_target(entry)?;
    for m in candidates {
        if m + 1 == b {
            match GapCertificate::new(b, host.params().k)? {
                Some(cert) => say!(
                out,
                    "  m={m:<4} excluded: the two unshared blocks would cover the same ordered pairs, \
                     but the {} orderings of a {}-set give {} distinct pair sets",
                    cert.census.orderings, cert.census.k, cert.census.distinct_pair_sets
                ),
                None => say!(out, "  m={m:<4} not excluded by the gap argument"),
            }
        } else if full.contains(&m) {
            say!(
                out,
                "  m={m:<4} outside the claim, no impossibility argument"
            );
        }
    }
    Ok(())
}

// ------------------------------------------------------------- construct

/// Canonical design file: a one-entry catalog with an explicit design.
fn design_text(id: &str, design: &Design) -> String {
    let mut out = format!(
        "[entry {id}]\nkind = directed-design\nv = {}\nuniverse = {}\ndesign = D\ndevelop = explicit\n",
        design.universe().size(),
        design.universe()
    );
    let blocks: Vec<String> = design.blocks().map(|b| b.to_string()).collect();
    for chunk in blocks.chunks(6) {
        out.push_str("base = ");
        out.push_str(&chunk.join(" "));
        out.push('\n');
    }
    out
}

fn write_design(path: &Path, id: &str, design: &Design) -> Result<(), InputError> {
    let text = design_text(id, design);
    // The file has to read back as a catalog entry.
    parse_entries(&path.display().to_string(), &text)?;
    fs::write(path, text).map_err(|e| input_error(format!("cannot write {}: {e}", path.display())))
}

fn read_entry(path: &str, kind: EntryKind) -> Result<CatalogEntry, InputError> {
    let text =
        fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {path}: {e}")))?;
    parse_entries(path, &text)?
        .into_iter()
        .find(|e| e.kind == kind)
        .ok_or_else(|| input_error(format!("{path} has no {kind} entry")))
}

fn parse_values(text: &str) -> Result<Vec<usize>, InputError> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse()
                .map_err(|_| input_error(format!("not a count: {t:?}")))
        })
        .collect()
}

/// `five = …`, `six = …` and `groups = …` lines; `#` starts a comment.
fn read_choices(path: &str) -> Result<IngredientChoice, InputError> {
    let text =
        fs::read_to_string(path).map_err(|e| input_error(format!("cannot read {path}: {e}")))?;
    let mut choice = IngredientChoice::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| input_error(format!("{path}:{}: expected `key = values`", n + 1)))?;
        let values = parse_values(value)?;
        match key.trim() {
            "five" => choice.five = values,
            "six" => choice.six = values,
            "groups" => choice.groups = values,
            other => {
                return Err(input_error(format!(
                    "{path}:{}: unknown key {other:?}",
                    n + 1
                )))
            }
        }
    }
    Ok(choice)
}

fn construct(
    load: &dyn Fn() -> Result<Catalog, InputError>,
    args: &ConstructArgs,
    out: &mut String,
) -> Outcome {
    if let Some(pbd) = &args.pbd {
        return construct_pbd(&load()?, pbd, args, out);
    }
    let spec = args.gdd.as_deref().expect("clap requires --gdd or --pbd");
    let (name, gdd, sizes) = if spec == "td55" {
        (
            "td55".to_string(),
            transversal_design(5, 5)?,
            BTreeSet::from([5]),
        )
    } else {
        let entry = read_entry(spec, EntryKind::Gdd)?;
        let sizes = entry
            .block_sizes
            .clone()
            .unwrap_or_else(|| BTreeSet::from([5, 6]));
        (entry.id.clone(), Gdd::from_entry(&entry)?, sizes)
    };
    let report = gdd.verify(&sizes);
    say!(out, "input {name}: {}", report.summary());
    if !report.passed() {
        put!(out, "{report}");
        return Ok(false);
    }
    let catalog = load()?;
    let ing = Ingredients::for_gdd(&catalog, &gdd)?;
    let out_id = format!("{name}-inflated");

    let Some(spec) = &args.choices else {
        let design = inflate_gdd(&gdd, &ing, None)?;
        let report = verify_dd(&design);
        say!(out, "output: {}", report.summary());
        if let Some(path) = &args.out {
            write_design(path, &out_id, &design)?;
            say!(out, "wrote {}", path.display());
        }
        return Ok(report.passed());
    };

    let choice = match spec.as_str() {
        "zeros" => IngredientChoice::zeros(&gdd, &ing)?,
        "max" => IngredientChoice::maximal(&gdd, &ing)?,
        "random" => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            IngredientChoice::select(&gdd, &ing, |vals| rng.gen_range(0..vals.len()))?
        }
        file => read_choices(file)?,
    };
    let (left, right, predicted) = inflate_gdd_pair(&gdd, &ing, &choice)?;
    let (rl, rr) = (verify_dd(&left), verify_dd(&right));
    let measured = intersection(&left, &right)?;
    say!(out, "left:  {}", rl.summary());
    say!(out, "right: {}", rr.summary());
    say!(
                out,
        "intersection: measured {measured}, predicted {predicted} (five {:?}, six {:?}, groups {:?}) {}",
        choice.five,
        choice.six,
        choice.groups,
        if measured == predicted { "PASS" } else { "FAIL" }
    );
    if let Some(path) = &args.out {
        write_design(path, &out_id, &left)?;
        say!(out, "wrote {}", path.display());
    }
    if let Some(path) = &args.out_right {
        write_design(path, &format!("{out_id}-right"), &right)?;
        say!(out, "wrote {}", path.display());
    }
    Ok(rl.passed() && rr.passed() && measured == predicted)
}

fn construct_pbd(catalog: &Catalog, spec: &str, args: &ConstructArgs, out: &mut String) -> Outcome {
    let (name, pbd) = if spec == "ag25" {
        ("ag25".to_string(), affine_plane(5)?)
    } else {
        let entry = read_entry(spec, EntryKind::Pbd)?;
        (entry.id.clone(), Pbd::from_entry(&entry)?)
    };
    let report = pbd.verify();
    say!(out, "input {name}: {}", report.summary());
    if !report.passed() {
        put!(out, "{report}");
        return Ok(false);
    }
    let designs = catalog_designs_by_size(catalog, &pbd.block_sizes())?;
    let design = pbd_inflate(&pbd, &designs)?;
    let report = verify_dd(&design);
    say!(out, "output: {}", report.summary());
    if let Some(path) = &args.out {
        write_design(path, &format!("{name}-inflated"), &design)?;
        say!(out, "wrote {}", path.display());
    }
    Ok(report.passed())
}

// ---------------------------------------------------------------- oracle

fn oracle(
    load: &dyn Fn() -> Result<Catalog, InputError>,
    cmd: &OracleCommand,
    out: &mut String,
) -> Outcome {
    match cmd {
        OracleCommand::Dd5 { show } => {
            let e = enumerate_dd5()?;
            let expected = jd(5)?;
            say!(out, "2-(5,5,1) directed designs: {}", e.designs.len());
            if *show {
                for d in &e.designs {
                    say!(
                        out,
                        "  {}",
                        d.blocks()
                            .map(|b| b.to_string())
                            .collect::<Vec<_>>()
                            .join(" ")
                    );
                }
            }
            say!(out, "spectrum: {:?} (expected {:?})", e.spectrum, expected);
            Ok(e.spectrum == expected)
        }
        OracleCommand::Volume1 { k } => {
            let c = pair_set_census(*k)?;
            let ok = confirm_no_volume1_trade(*k)?;
            say!(
                out,
                "k={}: {} orderings, {} distinct ordered-pair sets; volume-1 trade {}",
                c.k,
                c.orderings,
                c.distinct_pair_sets,
                if ok { "impossible" } else { "possible" }
            );
            Ok(ok)
        }
        OracleCommand::Dgdd {
            groups,
            entry,
            seed_blocks,
            limit,
        } => {
            let (groups, seed) = match entry {
                Some(id) => {
                    let catalog = load()?;
                    let e = catalog.entry(id)?;
                    let g = e
                        .groups
                        .clone()
                        .ok_or_else(|| input_error(format!("entry {id} has no groups")))?;
                    let host = e
                        .host()
                        .ok_or_else(|| input_error(format!("entry {id} has no design")))?;
                    let listed = e.listed_base_blocks(&host.name);
                    if *seed_blocks > listed.len() {
                        return Err(input_error(format!(
                            "entry {id} lists only {} blocks",
                            listed.len()
                        )));
                    }
                    (g, listed[..*seed_blocks].to_vec())
                }
                None => {
                    let text = groups
                        .as_deref()
                        .expect("clap requires --groups or --entry");
                    (text.parse::<GroupPartition>()?, Vec::new())
                }
            };
            let found = complete_dgdd(&groups, &seed, *limit)?;
            let mut ok = !found.is_empty();
            for (i, d) in found.iter().enumerate() {
                let report = verify_dgdd(d, &groups);
                ok &= report.passed();
                let added: Vec<String> = d
                    .blocks()
                    .filter(|b| !seed.contains(b))
                    .map(|b| b.to_string())
                    .collect();
                say!(
                    out,
                    "solution {}: {} ; added {}",
                    i + 1,
                    report.summary(),
                    added.join(" ")
                );
            }
            say!(
                out,
                "{} solution(s) on {groups} with {} seed block(s), limit {limit}",
                found.len(),
                seed.len()
            );
            Ok(ok)
        }
        OracleCommand::Gap { entry } => {
            let catalog = load()?;
            let e = catalog.entry(entry)?;
            let reading = catalog.passing_reading(e);
            let material = catalog.material(e, reading.as_deref())?;
            let host = material.host_design()?;
            let b = host.len();
            let cert = GapCertificate::new(b, host.params().k)?;
            let survivors = single_block_swaps(host);
            match &cert {
                Some(c) => say!(
                out,
                    "{entry}: b={b}; m={} excluded ({} orderings of a {}-set, {} distinct pair sets)",
                    c.excluded, c.census.orderings, c.census.k, c.census.distinct_pair_sets
                ),
                None => say!(out, "{entry}: b={b}; no gap certificate"),
            }
            say!(
                out,
                "single-block reorderings that keep pair coverage: {survivors}"
            );
            Ok(cert.is_some() && survivors == 0)
        }
    }
}

// --------------------------------------------------------------- catalog

fn catalog(catalog: &Catalog, cmd: &CatalogCommand, out: &mut String) -> Outcome {
    match cmd {
        CatalogCommand::Print { id, transcribed } => {
            let source = if *transcribed {
                catalog.transcribed()
            } else {
                catalog.entries()
            };
            let chosen: Vec<CatalogEntry> = match id {
                Some(id) => {
                    catalog.entry(id)?;
                    source.iter().filter(|e| &e.id == id).cloned().collect()
                }
                None => source.to_vec(),
            };
            put!(out, "{}", print_entries(&chosen));
            Ok(true)
        }
        CatalogCommand::Digest => {
            for e in catalog.transcribed() {
                let state = match &e.digest {
                    Some(_) => "stored",
                    None => "unstored",
                };
                say!(out, "{} {} {state}", e.id, e.compute_digest());
            }
            Ok(true)
        }
        CatalogCommand::Summary { id } => {
            let ids: Vec<&str> = match id {
                Some(id) => vec![id.as_str()],
                None => catalog.ids(),
            };
            for id in ids {
                say!(out, "{}", catalog.entry_summary(id)?);
            }
            Ok(true)
        }
        CatalogCommand::Errata => {
            let evals: BTreeMap<&str, _> = catalog
                .erratum_evaluations()
                .iter()
                .map(|e| (e.id.as_str(), e))
                .collect();
            let mut ok = true;
            for r in catalog.errata() {
                say!(
                    out,
                    "[{}] {} {}: `{}` -> `{}`",
                    r.id,
                    r.entry,
                    r.field,
                    r.printed,
                    r.adopted
                );
                match evals.get(r.id.as_str()) {
                    Some(e) => {
                        ok &= e.holds();
                        say!(out, "  {} {e}", if e.holds() { "HOLDS" } else { "FAILS" });
                    }
                    None => say!(out, "  not applied"),
                }
            }
            Ok(ok)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_text_reads_back() {
        let catalog = Catalog::builtin(ErrataMode::Apply).unwrap();
        let entry = catalog.entry("v11").unwrap();
        let d = catalog.build_design(entry, "D1", None).unwrap();
        let text = design_text("copy", &d);
        let parsed = parse_entries("copy", &text).unwrap();
        let copy = Catalog::from_sources(&[("copy", &text)], None, ErrataMode::Ignore).unwrap();
        assert_eq!(parsed.len(), 1);
        assert_eq!(copy.build_design(&parsed[0], "D", None).unwrap(), d);
    }

    #[test]
    fn choice_values_accept_commas_and_spaces() {
        assert_eq!(parse_values("0, 2 8,1").unwrap(), vec![0, 2, 8, 1]);
        assert!(parse_values("1 x").is_err());
    }
}
