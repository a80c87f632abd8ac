//! Orbit development of base blocks under cyclic shifts, coordinate shifts
//! and permutation groups, with optional relabelling of infinite points.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use thiserror::Error;

use crate::model::{Block, Design, ModelError, Params, Point, Universe};

/// Permutation orbits larger than this are treated as a malformed rule.
const MAX_PERMUTATION_ORBIT: usize = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DevelopError {
    #[error("development produced block {0} twice")]
    DuplicateBlock(Block),
    #[error("infinity policy has no shift for {point} at offset {delta}")]
    PolicyGap { point: Point, delta: u64 },
    #[error("`{0}` does not close its orbit; mark it `partial` if that is intended")]
    OpenOrbit(DevelopmentRule),
    #[error("rule `{rule}` does not fit universe `{universe}`")]
    UniverseMismatch {
        rule: DevelopmentRule,
        universe: Universe,
    },
    #[error("`{0}` cannot be applied an indexed number of times")]
    NotIndexable(DevelopmentRule),
    #[error("permutation is not a bijection of the universe: {0}")]
    NotBijective(String),
    #[error("permutation orbit of {0} exceeds {MAX_PERMUTATION_ORBIT} blocks")]
    OrbitTooLarge(Block),
    #[error("cannot read {what} from {text:?}")]
    Syntax { what: &'static str, text: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn syntax(what: &'static str, text: &str) -> DevelopError {
    DevelopError::Syntax {
        what,
        text: text.to_string(),
    }
}

/// A permutation written in cycle notation.  One-cycles are kept, because a
/// generator's declared fixed points are part of how it was written down.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Permutation {
    cycles: Vec<Vec<Point>>,
}

impl Permutation {
    pub fn from_cycles(cycles: Vec<Vec<Point>>) -> Result<Self, DevelopError> {
        let mut seen = BTreeSet::new();
        for cycle in &cycles {
            if cycle.is_empty() {
                return Err(DevelopError::NotBijective("empty cycle".into()));
            }
            for &p in cycle {
                if !seen.insert(p) {
                    return Err(DevelopError::NotBijective(format!("{p} appears twice")));
                }
            }
        }
        Ok(Self { cycles })
    }

    pub fn identity() -> Self {
        Self { cycles: Vec::new() }
    }

    pub fn cycles(&self) -> &[Vec<Point>] {
        &self.cycles
    }

    pub fn apply(&self, p: Point) -> Point {
        for cycle in &self.cycles {
            if let Some(pos) = cycle.iter().position(|&q| q == p) {
                return cycle[(pos + 1) % cycle.len()];
            }
        }
        p
    }

    /// Point map as a lookup table, for applying to many blocks.
    pub fn table(&self) -> BTreeMap<Point, Point> {
        let mut map = BTreeMap::new();
        for cycle in &self.cycles {
            for (i, &p) in cycle.iter().enumerate() {
                map.insert(p, cycle[(i + 1) % cycle.len()]);
            }
        }
        map
    }

    pub fn inverse(&self) -> Self {
        Self {
            cycles: self
                .cycles
                .iter()
                .map(|c| c.iter().rev().copied().collect())
                .collect(),
        }
    }

    pub fn check_universe(&self, universe: &Universe) -> Result<(), DevelopError> {
        match self
            .cycles
            .iter()
            .flatten()
            .find(|&&p| !universe.contains(p))
        {
            Some(p) => Err(DevelopError::NotBijective(format!(
                "{p} is not in universe `{universe}`"
            ))),
            None => Ok(()),
        }
    }
}

fn render_cycle(cycle: &[Point]) -> String {
    // Runs of three or more consecutive residues print as `a..b`.
    let mut parts = Vec::new();
    let mut i = 0;
    while i < cycle.len() {
        let mut j = i;
        while let (Point::Residue(a), Some(Point::Residue(b))) = (cycle[j], cycle.get(j + 1)) {
            if *b != a + 1 {
                break;
            }
            j += 1;
        }
        if j - i >= 2 {
            parts.push(format!("{}..{}", cycle[i], cycle[j]));
        } else {
            parts.extend(cycle[i..=j].iter().map(|p| p.to_string()));
        }
        i = j + 1;
    }
    format!("({})", parts.join(" "))
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cycles.is_empty() {
            return write!(f, "()");
        }
        for cycle in &self.cycles {
            write!(f, "{}", render_cycle(cycle))?;
        }
        Ok(())
    }
}

/// Splits `(a b)(c d)` into the cycle bodies, respecting nested `(x,y)`.
fn cycle_bodies(s: &str) -> Result<Vec<&str>, DevelopError> {
    let mut bodies = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, ch) in s.char_indices() {
        match ch {
            '(' => {
                if depth == 0 {
                    start = i + 1;
                }
                depth += 1;
            }
            ')' => {
                if depth == 0 {
                    return Err(syntax("permutation", s));
                }
                depth -= 1;
                if depth == 0 {
                    bodies.push(&s[start..i]);
                }
            }
            c if depth == 0 && !c.is_whitespace() => return Err(syntax("permutation", s)),
            _ => {}
        }
    }
    if depth != 0 {
        return Err(syntax("permutation", s));
    }
    Ok(bodies)
}

impl FromStr for Permutation {
    type Err = DevelopError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bodies = cycle_bodies(s.trim())?;
        if bodies.len() == 1 && bodies[0].trim().is_empty() {
            return Ok(Self::identity());
        }
        let mut cycles = Vec::new();
        for body in bodies {
            let mut cycle = Vec::new();
            for token in body.split_whitespace() {
                if let Some((a, b)) = token.split_once("..") {
                    let a: u32 = a.parse().map_err(|_| syntax("cycle range", token))?;
                    let b: u32 = b.parse().map_err(|_| syntax("cycle range", token))?;
                    if b < a {
                        return Err(syntax("cycle range", token));
                    }
                    cycle.extend((a..=b).map(Point::Residue));
                } else {
                    cycle.push(token.parse()?);
                }
            }
            cycles.push(cycle);
        }
        Self::from_cycles(cycles)
    }
}

/// Relabels a contiguous run of infinite points by a rotation chosen from
/// the development offset: offset `delta` rotates `inf(base..base+size)` by
/// `shifts[delta mod period]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct InfinityCycle {
    pub base: u32,
    pub size: u32,
    pub period: u32,
    pub shifts: BTreeMap<u32, u32>,
}

impl fmt::Display for InfinityCycle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cycle {} size {} period {} map {}",
            self.base,
            self.size,
            self.period,
            self.shifts
                .iter()
                .map(|(d, s)| format!("{d}:{s}"))
                .join(" ")
        )
    }
}

impl FromStr for InfinityCycle {
    type Err = DevelopError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let w: Vec<&str> = s.split_whitespace().collect();
        let num = |t: &str| t.parse::<u32>().map_err(|_| syntax("infinity policy", s));
        if w.len() < 8 || w[0] != "cycle" || w[2] != "size" || w[4] != "period" || w[6] != "map" {
            return Err(syntax("infinity policy", s));
        }
        let (base, size, period) = (num(w[1])?, num(w[3])?, num(w[5])?);
        if size == 0 || period == 0 {
            return Err(syntax("infinity policy", s));
        }
        let mut shifts = BTreeMap::new();
        for entry in &w[7..] {
            let (d, sh) = entry
                .split_once(':')
                .ok_or_else(|| syntax("infinity policy", s))?;
            shifts.insert(num(d)?, num(sh)?);
        }
        Ok(Self {
            base,
            size,
            period,
            shifts,
        })
    }
}

/// How infinite points move under development.  Points not covered by any
/// cycle stay fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct InfinityPolicy {
    pub cycles: Vec<InfinityCycle>,
}

impl InfinityPolicy {
    pub fn fixed() -> Self {
        Self::default()
    }

    pub fn is_fixed(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn relabel(&self, p: Point, delta: u64) -> Result<Point, DevelopError> {
        let Point::Infinity(i) = p else {
            return Ok(p);
        };
        for c in &self.cycles {
            if (c.base..c.base + c.size).contains(&i) {
                let key = (delta % u64::from(c.period)) as u32;
                let shift = c
                    .shifts
                    .get(&key)
                    .ok_or(DevelopError::PolicyGap { point: p, delta })?;
                return Ok(Point::Infinity(c.base + (i - c.base + shift) % c.size));
            }
        }
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Coordinate {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum DevelopmentRule {
    /// Adds `step·i` to every residue for i in 0..orbit.  A `partial` orbit
    /// stops before the shift returns to the identity.
    CyclicAdd {
        step: u32,
        modulus: u32,
        orbit: u32,
        partial: bool,
    },
    /// Adds i to one coordinate of every grid point for i in 0..modulus.
    CoordAdd {
        coordinate: Coordinate,
        modulus: u32,
    },
    /// Closure under the group generated by the given permutations.
    PermutationOrbit {
        generators: Vec<Permutation>,
    },
    Explicit,
}

impl fmt::Display for DevelopmentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DevelopmentRule::CyclicAdd {
                step,
                modulus,
                orbit,
                partial,
            } => {
                write!(f, "add {step} mod {modulus} orbit {orbit}")?;
                if *partial {
                    write!(f, " partial")?;
                }
                Ok(())
            }
            DevelopmentRule::CoordAdd {
                coordinate,
                modulus,
            } => {
                let which = match coordinate {
                    Coordinate::First => "first",
                    Coordinate::Second => "second",
                };
                write!(f, "coord {which} mod {modulus}")
            }
            DevelopmentRule::PermutationOrbit { generators } => {
                write!(f, "perm {}", generators.iter().join(" ; "))
            }
            DevelopmentRule::Explicit => write!(f, "explicit"),
        }
    }
}

impl FromStr for DevelopmentRule {
    type Err = DevelopError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t == "explicit" {
            return Ok(DevelopmentRule::Explicit);
        }
        if let Some(rest) = t.strip_prefix("perm ") {
            let generators = rest
                .split(';')
                .map(str::parse)
                .collect::<Result<Vec<Permutation>, _>>()?;
            return Ok(DevelopmentRule::PermutationOrbit { generators });
        }
        let w: Vec<&str> = t.split_whitespace().collect();
        let num = |x: &str| x.parse::<u32>().map_err(|_| syntax("development rule", s));
        match w.as_slice() {
            // Without an orbit length the full cycle of the step is meant.
            ["add", step, "mod", m] => {
                let (step, modulus) = (num(step)?, num(m)?);
                if modulus == 0 {
                    return Err(syntax("development rule", s));
                }
                let g = gcd(step % modulus, modulus);
                Ok(DevelopmentRule::CyclicAdd {
                    step,
                    modulus,
                    orbit: modulus / g,
                    partial: false,
                })
            }
            ["add", step, "mod", m, "orbit", len, rest @ ..] => {
                let partial = match rest {
                    [] => false,
                    ["partial"] => true,
                    _ => return Err(syntax("development rule", s)),
                };
                let modulus = num(m)?;
                if modulus == 0 {
                    return Err(syntax("development rule", s));
                }
                Ok(DevelopmentRule::CyclicAdd {
                    step: num(step)?,
                    modulus,
                    orbit: num(len)?,
                    partial,
                })
            }
            ["coord", which, "mod", m] => {
                let coordinate = match *which {
                    "first" => Coordinate::First,
                    "second" => Coordinate::Second,
                    _ => return Err(syntax("development rule", s)),
                };
                let modulus = num(m)?;
                if modulus == 0 {
                    return Err(syntax("development rule", s));
                }
                Ok(DevelopmentRule::CoordAdd {
                    coordinate,
                    modulus,
                })
            }
            _ => Err(syntax("development rule", s)),
        }
    }
}

impl DevelopmentRule {
    fn mismatch(&self, universe: &Universe) -> DevelopError {
        DevelopError::UniverseMismatch {
            rule: self.clone(),
            universe: *universe,
        }
    }

    /// Checks that the rule acts on `universe` and closes its orbit.
    pub fn check(&self, universe: &Universe) -> Result<(), DevelopError> {
        match self {
            DevelopmentRule::CyclicAdd {
                step,
                modulus,
                orbit,
                partial,
            } => {
                if universe.residue_modulus() != Some(*modulus) {
                    return Err(self.mismatch(universe));
                }
                let turn = u64::from(*step) * u64::from(*orbit) % u64::from(*modulus);
                if turn != 0 && !partial {
                    return Err(DevelopError::OpenOrbit(self.clone()));
                }
                Ok(())
            }
            DevelopmentRule::CoordAdd {
                coordinate,
                modulus,
            } => {
                let (m, n) = universe
                    .grid_moduli()
                    .ok_or_else(|| self.mismatch(universe))?;
                let want = match coordinate {
                    Coordinate::First => m,
                    Coordinate::Second => n,
                };
                if want != *modulus {
                    return Err(self.mismatch(universe));
                }
                Ok(())
            }
            DevelopmentRule::PermutationOrbit { generators } => generators
                .iter()
                .try_for_each(|g| g.check_universe(universe)),
            DevelopmentRule::Explicit => Ok(()),
        }
    }

    /// The generator applied `i` times to `block`.
    pub fn shift(
        &self,
        block: &Block,
        i: u64,
        policy: &InfinityPolicy,
    ) -> Result<Block, DevelopError> {
        match self {
            DevelopmentRule::CyclicAdd { step, modulus, .. } => {
                let m = u64::from(*modulus);
                let delta = u64::from(*step) * i % m;
                let shifted = block.try_map_points(|p| match p {
                    Point::Residue(r) => Ok(Point::Residue(((u64::from(r) + delta) % m) as u32)),
                    Point::Infinity(_) => policy.relabel(p, delta),
                    Point::Coord(..) => Err(DevelopError::NotIndexable(self.clone())),
                })??;
                Ok(shifted)
            }
            DevelopmentRule::CoordAdd {
                coordinate,
                modulus,
            } => {
                let m = u64::from(*modulus);
                let delta = i % m;
                let add = |x: u32| ((u64::from(x) + delta) % m) as u32;
                let shifted = block.try_map_points(|p| match (p, coordinate) {
                    (Point::Coord(a, b), Coordinate::First) => Ok(Point::Coord(add(a), b)),
                    (Point::Coord(a, b), Coordinate::Second) => Ok(Point::Coord(a, add(b))),
                    (Point::Infinity(_), _) => policy.relabel(p, delta),
                    (Point::Residue(_), _) => Err(DevelopError::NotIndexable(self.clone())),
                })??;
                Ok(shifted)
            }
            DevelopmentRule::PermutationOrbit { generators } if generators.len() == 1 => {
                let table = generators[0].table();
                let mut out = block.clone();
                for _ in 0..i {
                    out = out.map_points(|p| table.get(&p).copied().unwrap_or(p))?;
                }
                Ok(out)
            }
            DevelopmentRule::Explicit if i == 0 => Ok(block.clone()),
            _ => Err(DevelopError::NotIndexable(self.clone())),
        }
    }

    /// The orbit of `block`, starting with the block itself.
    pub fn orbit(
        &self,
        block: &Block,
        policy: &InfinityPolicy,
    ) -> Result<Vec<Block>, DevelopError> {
        match self {
            DevelopmentRule::CyclicAdd { orbit, .. } => (0..u64::from(*orbit))
                .map(|i| self.shift(block, i, policy))
                .collect(),
            DevelopmentRule::CoordAdd { modulus, .. } => (0..u64::from(*modulus))
                .map(|i| self.shift(block, i, policy))
                .collect(),
            DevelopmentRule::PermutationOrbit { generators } => {
                let tables: Vec<_> = generators.iter().map(Permutation::table).collect();
                let mut seen = BTreeSet::from([block.clone()]);
                let mut order = vec![block.clone()];
                let mut queue = VecDeque::from([block.clone()]);
                while let Some(b) = queue.pop_front() {
                    for t in &tables {
                        let next = b.map_points(|p| t.get(&p).copied().unwrap_or(p))?;
                        if seen.insert(next.clone()) {
                            if order.len() >= MAX_PERMUTATION_ORBIT {
                                return Err(DevelopError::OrbitTooLarge(block.clone()));
                            }
                            order.push(next.clone());
                            queue.push_back(next);
                        }
                    }
                }
                Ok(order)
            }
            DevelopmentRule::Explicit => Ok(vec![block.clone()]),
        }
    }
}

/// Base blocks sharing one development rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OrbitGroup {
    pub rule: DevelopmentRule,
    pub blocks: Vec<Block>,
}

/// Everything needed to develop a design.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseBlockSet {
    pub universe: Universe,
    pub params: Params,
    pub policy: InfinityPolicy,
    pub groups: Vec<OrbitGroup>,
    /// Blocks added verbatim after development.
    pub appended: Vec<Block>,
}

impl BaseBlockSet {
    /// Orbit lengths per group, in base-block order, without building the
    /// design.
    pub fn orbit_lengths(&self) -> Result<Vec<Vec<usize>>, DevelopError> {
        self.groups
            .iter()
            .map(|g| {
                g.blocks
                    .iter()
                    .map(|b| match &g.rule {
                        DevelopmentRule::CyclicAdd { orbit, .. } => Ok(*orbit as usize),
                        DevelopmentRule::CoordAdd { modulus, .. } => Ok(*modulus as usize),
                        DevelopmentRule::Explicit => Ok(1),
                        rule @ DevelopmentRule::PermutationOrbit { .. } => {
                            Ok(rule.orbit(b, &self.policy)?.len())
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

pub fn develop(base: &BaseBlockSet) -> Result<Design, DevelopError> {
    let mut blocks = BTreeSet::new();
    let mut push = |b: Block| {
        if blocks.contains(&b) {
            Err(DevelopError::DuplicateBlock(b))
        } else {
            blocks.insert(b);
            Ok(())
        }
    };
    for group in &base.groups {
        group.rule.check(&base.universe)?;
        for b in &group.blocks {
            for image in group.rule.orbit(b, &base.policy)? {
                push(image)?;
            }
        }
    }
    for b in &base.appended {
        push(b.clone())?;
    }
    Ok(Design::new(base.universe, base.params, blocks)?)
}

/// The image of `design` under `perm`.
pub fn apply_permutation(design: &Design, perm: &Permutation) -> Result<Design, DevelopError> {
    perm.check_universe(design.universe())?;
    let table = perm.table();
    let blocks = design
        .blocks()
        .map(|b| b.map_points(|p| table.get(&p).copied().unwrap_or(p)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Design::new(*design.universe(), design.params(), blocks)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blk(s: &str) -> Block {
        s.parse().unwrap()
    }

    #[test]
    fn rules_round_trip_through_text() {
        for text in [
            "add 1 mod 21 orbit 21",
            "add 2 mod 104 orbit 2 partial",
            "coord second mod 22",
            "perm (0)(1..17)(18..34)",
            "perm (3 9)(5 4) ; (0 7 8)",
            "explicit",
        ] {
            let rule: DevelopmentRule = text.parse().unwrap();
            assert_eq!(rule.to_string(), text);
        }
        assert!("add 1 mod 0 orbit 1".parse::<DevelopmentRule>().is_err());
        assert!("coord third mod 5".parse::<DevelopmentRule>().is_err());
    }

    #[test]
    fn permutation_cycles_compress_runs() {
        let p: Permutation = "(1 2 3 4)(7 9)".parse().unwrap();
        assert_eq!(p.to_string(), "(1..4)(7 9)");
        assert_eq!(p.apply(Point::Residue(4)), Point::Residue(1));
        assert_eq!(p.apply(Point::Residue(5)), Point::Residue(5));
        assert_eq!(p.inverse().apply(Point::Residue(1)), Point::Residue(4));
        assert!("(1 2)(2 3)".parse::<Permutation>().is_err());
    }

    #[test]
    fn cyclic_orbit_of_length_eleven() {
        let rule: DevelopmentRule = "add 1 mod 11 orbit 11".parse().unwrap();
        let orbit = rule
            .orbit(&blk("(3,5,1,4,9)"), &InfinityPolicy::fixed())
            .unwrap();
        assert_eq!(orbit.len(), 11);
        assert_eq!(orbit[1], blk("(4,6,2,5,10)"));
        assert_eq!(orbit[10], blk("(2,4,0,3,8)"));
    }

    #[test]
    fn open_orbit_needs_partial_flag() {
        let u = Universe::residues(104).with_infinities(2);
        let open: DevelopmentRule = "add 2 mod 104 orbit 2".parse().unwrap();
        assert!(matches!(open.check(&u), Err(DevelopError::OpenOrbit(_))));
        let partial: DevelopmentRule = "add 2 mod 104 orbit 2 partial".parse().unwrap();
        assert!(partial.check(&u).is_ok());
        let wrong: DevelopmentRule = "add 1 mod 11 orbit 11".parse().unwrap();
        assert!(matches!(
            wrong.check(&u),
            Err(DevelopError::UniverseMismatch { .. })
        ));
    }

    #[test]
    fn infinity_policy_rotates_and_reports_gaps() {
        let policy = InfinityPolicy {
            cycles: vec!["cycle 0 size 3 period 6 map 0:0 2:1 4:2".parse().unwrap()],
        };
        assert_eq!(
            policy.cycles[0].to_string(),
            "cycle 0 size 3 period 6 map 0:0 2:1 4:2"
        );
        let rule: DevelopmentRule = "add 2 mod 54 orbit 27".parse().unwrap();
        let b = blk("(inf0,29,1,28,30)");
        assert_eq!(
            rule.shift(&b, 1, &policy).unwrap(),
            blk("(inf1,31,3,30,32)")
        );
        assert_eq!(
            rule.shift(&b, 2, &policy).unwrap(),
            blk("(inf2,33,5,32,34)")
        );
        assert_eq!(
            rule.shift(&b, 3, &policy).unwrap(),
            blk("(inf0,35,7,34,36)")
        );
        // inf3 lies outside the cycle and stays put.
        let c = blk("(inf3,0,1,2,3)");
        assert_eq!(rule.shift(&c, 1, &policy).unwrap(), blk("(inf3,2,3,4,5)"));
        let odd: DevelopmentRule = "add 1 mod 54 orbit 54".parse().unwrap();
        assert!(matches!(
            odd.shift(&b, 1, &policy),
            Err(DevelopError::PolicyGap { delta: 1, .. })
        ));
    }

    #[test]
    fn permutation_orbit_closes() {
        let rule: DevelopmentRule = "perm (0)(1..17)(18..34)".parse().unwrap();
        let orbit = rule
            .orbit(&blk("(20,2,0,1,18)"), &InfinityPolicy::fixed())
            .unwrap();
        assert_eq!(orbit.len(), 17);
        assert_eq!(
            rule.shift(&blk("(20,2,0,1,18)"), 1, &InfinityPolicy::fixed())
                .unwrap(),
            blk("(21,3,0,2,19)")
        );
    }

    #[test]
    fn develop_detects_duplicate_blocks() {
        let base = BaseBlockSet {
            universe: Universe::residues(10),
            params: Params::DIRECTED_FIVE,
            policy: InfinityPolicy::fixed(),
            groups: vec![OrbitGroup {
                rule: "add 5 mod 10 orbit 4".parse().unwrap(),
                blocks: vec![blk("(0,1,2,3,4)")],
            }],
            appended: vec![],
        };
        assert!(matches!(
            develop(&base),
            Err(DevelopError::DuplicateBlock(_))
        ));
    }

    #[test]
    fn apply_permutation_checks_universe() {
        let d = Design::new(
            Universe::residues(5),
            Params::DIRECTED_FIVE,
            [blk("(0,1,2,3,4)"), blk("(4,3,2,1,0)")],
        )
        .unwrap();
        let swap: Permutation = "(0 1)".parse().unwrap();
        let image = apply_permutation(&d, &swap).unwrap();
        assert!(image.contains(&blk("(1,0,2,3,4)")));
        let outside: Permutation = "(0 7)".parse().unwrap();
        assert!(matches!(
            apply_permutation(&d, &outside),
            Err(DevelopError::NotBijective(_))
        ));
    }
}
