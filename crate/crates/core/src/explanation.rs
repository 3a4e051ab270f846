//! Explanations: conjunctions of equality predicates over explain-by attributes.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::relation::{AttributeKind, Relation};

/// Default maximum explanation order.
pub const DEFAULT_MAX_ORDER: usize = 3;

/// `attr = value`, both as dense codes into an [`ExplainBy`] dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Predicate {
    pub attr: u16,
    pub value: u32,
}

/// A conjunction of predicates over pairwise distinct attributes, kept sorted by attribute.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Explanation {
    predicates: SmallVec<[Predicate; 3]>,
}

impl Explanation {
    pub fn new(mut predicates: Vec<Predicate>) -> Result<Self> {
        predicates.sort_unstable();
        if predicates.windows(2).any(|w| w[0].attr == w[1].attr) {
            return Err(Error::InvalidParameter(
                "explanation constrains the same attribute twice".into(),
            ));
        }
        Ok(Explanation {
            predicates: predicates.into(),
        })
    }

    /// Shorthand for tests and fixtures: `Explanation::of(&[(attr, value), ...])`.
    pub fn of(pairs: &[(u16, u32)]) -> Self {
        Self::new(
            pairs
                .iter()
                .map(|&(attr, value)| Predicate { attr, value })
                .collect(),
        )
        .expect("distinct attributes")
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn order(&self) -> usize {
        self.predicates.len()
    }

    pub fn value_of(&self, attr: u16) -> Option<u32> {
        self.predicates
            .iter()
            .find(|p| p.attr == attr)
            .map(|p| p.value)
    }

    /// This explanation with one predicate removed.
    pub fn without(&self, attr: u16) -> Explanation {
        Explanation {
            predicates: self
                .predicates
                .iter()
                .copied()
                .filter(|p| p.attr != attr)
                .collect(),
        }
    }

    pub fn display<'a>(&'a self, dict: &'a ExplainBy) -> impl fmt::Display + 'a {
        DisplayExplanation { e: self, dict }
    }
}

struct DisplayExplanation<'a> {
    e: &'a Explanation,
    dict: &'a ExplainBy,
}

impl fmt::Display for DisplayExplanation<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.e.predicates.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(
                f,
                "{}={}",
                self.dict.attribute(p.attr),
                self.dict.value(p.attr, p.value)
            )?;
        }
        Ok(())
    }
}

/// True iff `a ∧ b` is satisfiable, i.e. some relation has a row matching both.
pub fn overlaps(a: &Explanation, b: &Explanation) -> bool {
    let (mut i, mut j) = (0, 0);
    let (pa, pb) = (&a.predicates, &b.predicates);
    while i < pa.len() && j < pb.len() {
        match pa[i].attr.cmp(&pb[j].attr) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                if pa[i].value != pb[j].value {
                    return false;
                }
                i += 1;
                j += 1;
            }
        }
    }
    true
}

/// Dictionary of explain-by attributes and their observed values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainBy {
    attributes: Vec<String>,
    values: Vec<Vec<String>>,
}

impl ExplainBy {
    pub fn new(attributes: Vec<String>, values: Vec<Vec<String>>) -> Self {
        assert_eq!(attributes.len(), values.len());
        ExplainBy { attributes, values }
    }

    pub fn attributes(&self) -> &[String] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attribute(&self, attr: u16) -> &str {
        &self.attributes[attr as usize]
    }

    pub fn values(&self, attr: u16) -> &[String] {
        &self.values[attr as usize]
    }

    pub fn value(&self, attr: u16, code: u32) -> &str {
        &self.values[attr as usize][code as usize]
    }

    /// Resolve textual `attr=value` pairs to an [`Explanation`].
    pub fn resolve(&self, pairs: &[(&str, &str)]) -> Result<Explanation> {
        let mut preds = Vec::with_capacity(pairs.len());
        for (name, value) in pairs {
            let attr = self
                .attributes
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| Error::UnknownAttribute((*name).to_string()))?;
            let code = self.values[attr]
                .iter()
                .position(|v| v == value)
                .ok_or_else(|| {
                    Error::InvalidParameter(format!("value {value:?} not observed for {name:?}"))
                })?;
            preds.push(Predicate {
                attr: attr as u16,
                value: code as u32,
            });
        }
        Explanation::new(preds)
    }
}

/// A block of explanations sharing one attribute subset, laid out in mixed radix
/// (first attribute most significant) starting at `offset`.
#[derive(Debug, Clone)]
pub(crate) struct Block {
    pub attrs: Vec<u16>,
    pub radices: Vec<usize>,
    pub offset: usize,
}

/// Every candidate explanation for a set of explain-by attributes.
#[derive(Debug, Clone)]
pub struct ExplanationCatalog {
    pub(crate) explain_by: ExplainBy,
    /// Per explain-by attribute, the value code of every relation row.
    pub(crate) row_codes: Vec<Vec<u32>>,
    pub(crate) blocks: Vec<Block>,
    explanations: Vec<Explanation>,
}

impl ExplanationCatalog {
    pub fn explain_by(&self) -> &ExplainBy {
        &self.explain_by
    }

    pub fn explanations(&self) -> &[Explanation] {
        &self.explanations
    }

    pub fn len(&self) -> usize {
        self.explanations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.explanations.is_empty()
    }
}

/// Enumerate all conjunctions of order `1..=beta_max` over distinct explain-by
/// attributes, using every observed value of each attribute.
///
/// Output order is by order, then attribute subset (in `explain_by` order),
/// then values (lexicographic, numeric columns numerically).
pub fn enumerate_explanations(
    relation: &Relation,
    explain_by: &[String],
    beta_max: usize,
) -> Result<ExplanationCatalog> {
    if beta_max == 0 {
        return Err(Error::InvalidParameter("max order must be at least 1".into()));
    }
    if explain_by.is_empty() {
        return Err(Error::InvalidParameter(
            "at least one explain-by attribute is required".into(),
        ));
    }
    if explain_by.len() > u16::MAX as usize {
        return Err(Error::InvalidParameter("too many explain-by attributes".into()));
    }
    let mut columns = Vec::with_capacity(explain_by.len());
    for (i, name) in explain_by.iter().enumerate() {
        let (idx, attr) = relation.attribute(name)?;
        if attr.kind == AttributeKind::Time {
            return Err(Error::InvalidParameter(format!(
                "time attribute {name:?} cannot be an explain-by attribute"
            )));
        }
        if explain_by[..i].contains(name) {
            return Err(Error::InvalidParameter(format!(
                "explain-by attribute {name:?} listed twice"
            )));
        }
        columns.push(idx);
    }

    let mut values = Vec::with_capacity(columns.len());
    let mut row_codes = Vec::with_capacity(columns.len());
    for &col in &columns {
        let column = relation.column_at(col);
        let cells = column.cells();
        let mut distinct: Vec<usize> = Vec::new();
        {
            let mut seen = std::collections::HashMap::new();
            for (r, c) in cells.iter().enumerate() {
                seen.entry(c.as_str()).or_insert(r);
            }
            distinct.extend(seen.into_values());
        }
        match column.numeric() {
            Some(num) => distinct.sort_by(|&a, &b| {
                num[a]
                    .total_cmp(&num[b])
                    .then_with(|| cells[a].cmp(&cells[b]))
            }),
            None => distinct.sort_by(|&a, &b| cells[a].cmp(&cells[b])),
        }
        let sorted: Vec<String> = distinct.iter().map(|&r| cells[r].clone()).collect();
        let index: std::collections::HashMap<&str, u32> = sorted
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_str(), i as u32))
            .collect();
        row_codes.push(cells.iter().map(|c| index[c.as_str()]).collect());
        values.push(sorted);
    }

    let n_attrs = columns.len();
    let mut blocks = Vec::new();
    let mut explanations = Vec::new();
    for order in 1..=beta_max.min(n_attrs) {
        for subset in combinations(n_attrs, order) {
            let radices: Vec<usize> = subset.iter().map(|&a| values[a].len()).collect();
            let size: usize = radices.iter().product();
            blocks.push(Block {
                attrs: subset.iter().map(|&a| a as u16).collect(),
                radices: radices.clone(),
                offset: explanations.len(),
            });
            let mut digits = vec![0usize; order];
            for _ in 0..size {
                explanations.push(Explanation {
                    predicates: subset
                        .iter()
                        .zip(&digits)
                        .map(|(&a, &v)| Predicate {
                            attr: a as u16,
                            value: v as u32,
                        })
                        .collect(),
                });
                // increment mixed radix, last digit fastest
                for pos in (0..order).rev() {
                    digits[pos] += 1;
                    if digits[pos] < radices[pos] {
                        break;
                    }
                    digits[pos] = 0;
                }
            }
        }
    }

    Ok(ExplanationCatalog {
        explain_by: ExplainBy::new(explain_by.to_vec(), values),
        row_codes,
        blocks,
        explanations,
    })
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let mut i = k;
        while i > 0 && cur[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        cur[i - 1] += 1;
        for j in i..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}
