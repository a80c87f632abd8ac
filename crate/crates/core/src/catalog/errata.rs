//! The errata overlay.  A record names one field of one entry, the value as
//! transcribed and the value adopted instead.  Loading checks that the
//! transcribed value is really there, swaps in the adopted one and then
//! re-checks the stated justification in both directions.

use std::fmt;
use std::str::FromStr;

use super::parse::{base_blocks, rule_choice, trade_spec};
use super::{Catalog, CatalogEntry, CatalogError, DesignItem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FieldPath {
    /// The `index`-th `develop` line of a design.
    DesignDevelop {
        design: String,
        index: usize,
    },
    /// The `index`-th `base` line of a design.
    DesignBase {
        design: String,
        index: usize,
    },
    FamilyTrade {
        family: String,
    },
}

impl FieldPath {
    pub fn design(&self) -> Option<&str> {
        match self {
            FieldPath::DesignDevelop { design, .. } | FieldPath::DesignBase { design, .. } => {
                Some(design)
            }
            FieldPath::FamilyTrade { .. } => None,
        }
    }

    fn item_mut<'a>(&self, entry: &'a mut CatalogEntry) -> Option<&'a mut DesignItem> {
        let (design, index, want_develop) = match self {
            FieldPath::DesignDevelop { design, index } => (design, *index, true),
            FieldPath::DesignBase { design, index } => (design, *index, false),
            FieldPath::FamilyTrade { .. } => return None,
        };
        entry
            .designs
            .iter_mut()
            .find(|d| &d.name == design)?
            .items
            .iter_mut()
            .filter(|i| match i {
                DesignItem::Develop(_) => want_develop,
                DesignItem::Base(_) => !want_develop,
                DesignItem::Append(_) => false,
            })
            .nth(index)
    }

    /// Canonical text of the field.
    pub fn get(&self, entry: &CatalogEntry) -> Option<String> {
        let mut copy = entry.clone();
        if let FieldPath::FamilyTrade { family } = self {
            return entry
                .families
                .iter()
                .find(|f| &f.name == family)?
                .trade
                .as_ref()
                .map(|t| t.to_string());
        }
        match self.item_mut(&mut copy)? {
            DesignItem::Develop(rule) => Some(rule.to_string()),
            DesignItem::Base(blocks) => Some(super::render_block_list(blocks)),
            DesignItem::Append(_) => None,
        }
    }

    /// Parses `value` as this field and renders it canonically.
    pub fn normalize(&self, value: &str) -> Result<String, String> {
        match self {
            FieldPath::DesignDevelop { .. } => rule_choice(value).map(|r| r.to_string()),
            FieldPath::DesignBase { .. } => {
                base_blocks(value).map(|b| super::render_block_list(&b))
            }
            FieldPath::FamilyTrade { .. } => trade_spec(value).map(|t| t.to_string()),
        }
    }

    /// Replaces the field with `value`.
    pub fn set(&self, entry: &mut CatalogEntry, value: &str) -> Result<(), String> {
        if let FieldPath::FamilyTrade { family } = self {
            let spec = trade_spec(value)?;
            let fam = entry
                .families
                .iter_mut()
                .find(|f| &f.name == family)
                .ok_or_else(|| format!("no trade family {family}"))?;
            fam.trade = Some(spec);
            return Ok(());
        }
        let item = self
            .item_mut(entry)
            .ok_or_else(|| format!("no field `{self}`"))?;
        *item = match self {
            FieldPath::DesignDevelop { .. } => DesignItem::Develop(rule_choice(value)?),
            _ => DesignItem::Base(base_blocks(value)?),
        };
        Ok(())
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldPath::DesignDevelop { design, index } => {
                write!(f, "design {design} develop {index}")
            }
            FieldPath::DesignBase { design, index } => write!(f, "design {design} base {index}"),
            FieldPath::FamilyTrade { family } => write!(f, "trade-family {family} trade"),
        }
    }
}

impl FromStr for FieldPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let w: Vec<&str> = s.split_whitespace().collect();
        let index = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| format!("bad field index {t:?}"))
        };
        match w.as_slice() {
            ["design", d, "develop", i] => Ok(FieldPath::DesignDevelop {
                design: d.to_string(),
                index: index(i)?,
            }),
            ["design", d, "base", i] => Ok(FieldPath::DesignBase {
                design: d.to_string(),
                index: index(i)?,
            }),
            ["trade-family", fam, "trade"] => Ok(FieldPath::FamilyTrade {
                family: fam.to_string(),
            }),
            _ => Err(format!("unknown field path {s:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Justification {
    /// Only the adopted value passes the block-count audit.
    BlockCount,
    /// Only the adopted value yields a design that verifies.
    DesignValid,
    /// Only the adopted value yields a valid trade family inside its host.
    TradeValid,
}

impl fmt::Display for Justification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Justification::BlockCount => "block-count",
            Justification::DesignValid => "design-valid",
            Justification::TradeValid => "trade-valid",
        })
    }
}

impl FromStr for Justification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "block-count" => Ok(Justification::BlockCount),
            "design-valid" => Ok(Justification::DesignValid),
            "trade-valid" => Ok(Justification::TradeValid),
            other => Err(format!("unknown justification {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErratumRecord {
    pub id: String,
    pub entry: String,
    pub field: FieldPath,
    pub printed: String,
    pub adopted: String,
    pub justify: Justification,
}

/// Outcome of one justification check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErratumEvaluation {
    pub id: String,
    pub entry: String,
    pub field: FieldPath,
    pub justify: Justification,
    pub printed_ok: bool,
    pub printed_detail: String,
    pub adopted_ok: bool,
    pub adopted_detail: String,
}

impl ErratumEvaluation {
    pub fn holds(&self) -> bool {
        self.adopted_ok && !self.printed_ok
    }
}

impl fmt::Display for ErratumEvaluation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |ok: bool| if ok { "passes" } else { "fails" };
        write!(
            f,
            "erratum {} ({}, {}): printed {}: {}; adopted {}: {}",
            self.id,
            self.field,
            self.justify,
            verdict(self.printed_ok),
            self.printed_detail,
            verdict(self.adopted_ok),
            self.adopted_detail
        )
    }
}

impl Catalog {
    pub(super) fn apply_errata(&mut self) -> Result<(), CatalogError> {
        for rec in &self.errata {
            let entry = self
                .entries
                .iter_mut()
                .find(|e| e.id == rec.entry)
                .ok_or_else(|| CatalogError::UnknownEntry(rec.entry.clone()))?;
            let found = rec
                .field
                .get(entry)
                .ok_or_else(|| CatalogError::FieldNotFound {
                    entry: rec.entry.clone(),
                    field: rec.field.to_string(),
                })?;
            let unjustified = |reason: String| CatalogError::ErratumUnjustified {
                id: rec.id.clone(),
                reason,
            };
            let recorded = rec.field.normalize(&rec.printed).map_err(unjustified)?;
            if recorded != found {
                return Err(CatalogError::ErratumMismatch {
                    id: rec.id.clone(),
                    field: rec.field.to_string(),
                    recorded,
                    found,
                });
            }
            rec.field.set(entry, &rec.adopted).map_err(unjustified)?;
        }
        let mut evaluations = Vec::new();
        for rec in &self.errata {
            let eval = self.evaluate(rec)?;
            if !eval.holds() {
                return Err(CatalogError::ErratumUnjustified {
                    id: rec.id.clone(),
                    reason: eval.to_string(),
                });
            }
            evaluations.push(eval);
        }
        self.evaluations = evaluations;
        Ok(())
    }

    /// Checks a record against the current catalog and against the same
    /// catalog with only that record's field put back as printed.
    fn evaluate(&self, rec: &ErratumRecord) -> Result<ErratumEvaluation, CatalogError> {
        let mut reverted = self.clone();
        let entry = reverted
            .entries
            .iter_mut()
            .find(|e| e.id == rec.entry)
            .ok_or_else(|| CatalogError::UnknownEntry(rec.entry.clone()))?;
        rec.field
            .set(entry, &rec.printed)
            .map_err(|reason| CatalogError::ErratumUnjustified {
                id: rec.id.clone(),
                reason,
            })?;
        let adopted_entry = self.entry(&rec.entry)?;
        let printed_entry = reverted.entry(&rec.entry)?;
        let (adopted_ok, adopted_detail, printed_ok, printed_detail) = match rec.justify {
            Justification::BlockCount | Justification::DesignValid => {
                let design = rec
                    .field
                    .design()
                    .map(str::to_string)
                    .or_else(|| adopted_entry.host().map(|d| d.name.clone()))
                    .unwrap_or_default();
                let check = |cat: &Catalog, entry: &CatalogEntry| {
                    cat.design_check(entry, &design, rec.justify == Justification::BlockCount)
                };
                let (a_ok, a_detail) = check(self, adopted_entry);
                let (p_ok, p_detail) = check(&reverted, printed_entry);
                (a_ok, a_detail, p_ok, p_detail)
            }
            Justification::TradeValid => {
                let FieldPath::FamilyTrade { family } = &rec.field else {
                    return Err(CatalogError::ErratumUnjustified {
                        id: rec.id.clone(),
                        reason: format!("`{}` is not a trade field", rec.field),
                    });
                };
                let reading = self.passing_reading(adopted_entry);
                let (a_ok, a_detail) = self.family_check(adopted_entry, reading.as_deref(), family);
                let (p_ok, p_detail) =
                    reverted.family_check(printed_entry, reading.as_deref(), family);
                (a_ok, a_detail, p_ok, p_detail)
            }
        };
        Ok(ErratumEvaluation {
            id: rec.id.clone(),
            entry: rec.entry.clone(),
            field: rec.field.clone(),
            justify: rec.justify,
            printed_ok,
            printed_detail,
            adopted_ok,
            adopted_detail,
        })
    }
}
