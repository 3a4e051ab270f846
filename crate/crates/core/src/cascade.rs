//! Top-m non-overlapping explanations.
//!
//! The search runs over the drill-down hierarchy of the candidates: the root is
//! the empty conjunction and a node's children along attribute `a` refine it
//! with one more predicate on `a`. At each node either the node itself is taken
//! (one explanation, covering its whole subtree) or the quota is split among the
//! children along one attribute not yet constrained on the path. Children along
//! one attribute are pairwise disjoint, so every assembled set is non-overlapping.
//!
//! Equal totals are broken by colex order on χ ranks (the position of each
//! explanation in the γ-descending candidate order): the set whose largest
//! differing rank is smaller wins. That order is total and compatible with
//! disjoint union, which is what lets a prefix of χ reproduce the full answer.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::diff::{Effect, ScoredExplanation};
use crate::error::{Error, Result};
use crate::explanation::{overlaps, ExplainBy, Explanation};

pub const DEFAULT_M: usize = 3;

/// Initial prefix size for guess-and-verify is this many times `m`.
pub const GUESS_FACTOR: usize = 10;

/// Largest candidate list the exhaustive oracle accepts by default.
pub const BRUTE_FORCE_LIMIT: usize = 32;

type Ranks = SmallVec<[u32; 4]>;

/// A partial solution: χ ranks sorted descending and their canonical total.
#[derive(Debug, Clone)]
struct Sol {
    score: f64,
    ranks: Ranks,
}

impl Sol {
    fn empty() -> Sol {
        Sol {
            score: 0.0,
            ranks: Ranks::new(),
        }
    }

    fn single(rank: u32, gamma: &[f64]) -> Sol {
        let mut ranks = Ranks::new();
        ranks.push(rank);
        Sol {
            score: gamma[rank as usize],
            ranks,
        }
    }

    fn union(&self, other: &Sol, gamma: &[f64]) -> Sol {
        let mut ranks = Ranks::with_capacity(self.ranks.len() + other.ranks.len());
        let (mut i, mut j) = (0, 0);
        while i < self.ranks.len() || j < other.ranks.len() {
            if j == other.ranks.len() || (i < self.ranks.len() && self.ranks[i] > other.ranks[j]) {
                ranks.push(self.ranks[i]);
                i += 1;
            } else {
                ranks.push(other.ranks[j]);
                j += 1;
            }
        }
        Sol {
            score: canonical_sum(&ranks, gamma),
            ranks,
        }
    }
}

/// Sum in ascending rank order so a set's total never depends on how it was assembled.
fn canonical_sum(ranks_desc: &[u32], gamma: &[f64]) -> f64 {
    ranks_desc.iter().rev().map(|&r| gamma[r as usize]).sum()
}

/// Colex on descending rank lists: the first differing rank decides; a proper prefix wins.
fn colex_less(a: &[u32], b: &[u32]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x != y {
            return x < y;
        }
    }
    a.len() < b.len()
}

fn better(a: &Sol, b: &Sol) -> bool {
    a.score > b.score || (a.score == b.score && colex_less(&a.ranks, &b.ranks))
}

fn offer(slot: &mut Option<Sol>, cand: Sol) {
    match slot {
        Some(cur) if !better(&cand, cur) => {}
        _ => *slot = Some(cand),
    }
}

#[derive(Debug, Clone)]
struct Node {
    /// `(attr, parent)`: the parent obtained by dropping the predicate on `attr`.
    parents: SmallVec<[(u16, u32); 3]>,
    /// Attributes constrained by this node, ascending.
    used: SmallVec<[u16; 3]>,
}

/// The drill-down hierarchy over a fixed candidate list, shared across segments.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    /// Sorted by (order, predicates); children always have larger ids than parents.
    nodes: Vec<Node>,
    candidate_node: Vec<u32>,
}

impl Hierarchy {
    pub fn new(candidates: &[Explanation], n_attrs: usize) -> Result<Hierarchy> {
        let mut all: Vec<Explanation> = Vec::with_capacity(candidates.len() * 4 + 1);
        for e in candidates {
            if e.order() == 0 {
                return Err(Error::InvalidParameter("empty explanation".into()));
            }
            if e.predicates().iter().any(|p| p.attr as usize >= n_attrs) {
                return Err(Error::InvalidParameter(
                    "explanation uses an attribute outside explain-by".into(),
                ));
            }
            let preds = e.predicates();
            for mask in 0u32..(1 << preds.len()) {
                let sub: Vec<_> = preds
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, p)| *p)
                    .collect();
                all.push(Explanation::new(sub)?);
            }
        }
        all.push(Explanation::default());
        all.sort_unstable_by(|a, b| a.order().cmp(&b.order()).then_with(|| a.cmp(b)));
        all.dedup();
        let id: HashMap<&Explanation, u32> =
            all.iter().enumerate().map(|(i, e)| (e, i as u32)).collect();
        let nodes = all
            .iter()
            .map(|e| Node {
                parents: e
                    .predicates()
                    .iter()
                    .map(|p| (p.attr, id[&e.without(p.attr)]))
                    .collect(),
                used: e.predicates().iter().map(|p| p.attr).collect(),
            })
            .collect();
        let mut seen = vec![false; all.len()];
        let mut candidate_node = Vec::with_capacity(candidates.len());
        for e in candidates {
            let node = id[e];
            if std::mem::replace(&mut seen[node as usize], true) {
                return Err(Error::InvalidParameter(
                    "duplicate explanation in candidate list".into(),
                ));
            }
            candidate_node.push(node);
        }
        Ok(Hierarchy {
            nodes,
            candidate_node,
        })
    }

    pub fn candidate_count(&self) -> usize {
        self.candidate_node.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Run the DP over the candidates `chi` (candidate indices in χ order).
    /// `gamma[r]` is the score of `chi[r]`.
    fn solve(&self, chi: &[u32], gamma: &[f64], m: usize) -> Vec<Option<Sol>> {
        // active nodes: the selectable ones and all their ancestors
        let mut active: Vec<u32> = Vec::with_capacity(chi.len() * 4 + 1);
        let mut stack: Vec<u32> = chi.iter().map(|&c| self.candidate_node[c as usize]).collect();
        active.push(0);
        while let Some(v) = stack.pop() {
            active.push(v);
            stack.extend(self.nodes[v as usize].parents.iter().map(|&(_, p)| p));
        }
        active.sort_unstable();
        active.dedup();
        let local = |node: u32| active.binary_search(&node).expect("active ancestor");

        let mut rank_at = vec![u32::MAX; active.len()];
        for (r, &c) in chi.iter().enumerate() {
            rank_at[local(self.candidate_node[c as usize])] = r as u32;
        }

        // (parent, attr, child) edges among active nodes, grouped by parent then attr
        let mut edges: Vec<(u32, u16, u32)> = Vec::new();
        for (lv, &v) in active.iter().enumerate().skip(1) {
            for &(attr, p) in &self.nodes[v as usize].parents {
                edges.push((local(p) as u32, attr, lv as u32));
            }
        }
        edges.sort_unstable();

        let mut f: Vec<Vec<Option<Sol>>> = vec![Vec::new(); active.len()];
        let mut edge_end = edges.len();
        for lv in (0..active.len()).rev() {
            let mut best: Vec<Option<Sol>> = vec![None; m + 1];
            best[0] = Some(Sol::empty());
            if rank_at[lv] != u32::MAX {
                offer(&mut best[1], Sol::single(rank_at[lv], gamma));
            }
            let edge_start = edges[..edge_end].partition_point(|e| (e.0 as usize) < lv);
            let mut g = edge_start;
            while g < edge_end {
                let attr = edges[g].1;
                let mut h = g;
                let mut acc: Vec<Option<Sol>> = vec![None; m + 1];
                acc[0] = Some(Sol::empty());
                while h < edge_end && edges[h].1 == attr {
                    let child = &f[edges[h].2 as usize];
                    let mut next: Vec<Option<Sol>> = vec![None; m + 1];
                    for (q1, a) in acc.iter().enumerate() {
                        let Some(a) = a else { continue };
                        for (q2, b) in child.iter().enumerate().take(m + 1 - q1) {
                            let Some(b) = b else { continue };
                            let s = if q2 == 0 { a.clone() } else { a.union(b, gamma) };
                            offer(&mut next[q1 + q2], s);
                        }
                    }
                    acc = next;
                    h += 1;
                }
                debug_assert!(!self.nodes[active[lv] as usize].used.contains(&attr));
                for (q, s) in acc.into_iter().enumerate().skip(1) {
                    if let Some(s) = s {
                        offer(&mut best[q], s);
                    }
                }
                g = h;
            }
            edge_end = edge_start;
            // drop everything above q = 0 that never became feasible to keep the vectors short
            while best.len() > 1 && best.last().is_some_and(Option::is_none) {
                best.pop();
            }
            f[lv] = best;
        }
        let mut root = std::mem::take(&mut f[0]);
        root.resize(m + 1, None);
        root
    }
}

/// Result of one top-m search, before mapping back to explanations.
#[derive(Debug, Clone)]
struct Outcome {
    /// Best at-most-`q` set for `q = 0..=m`.
    at_most: Vec<Sol>,
    /// Best exactly-`q` set, `None` if no non-overlapping set of that size exists.
    exact: Vec<Option<Sol>>,
}

impl Outcome {
    fn from_exact(exact: Vec<Option<Sol>>) -> Outcome {
        let mut at_most: Vec<Sol> = Vec::with_capacity(exact.len());
        for (q, s) in exact.iter().enumerate() {
            let mut cur = if q == 0 {
                Sol::empty()
            } else {
                at_most[q - 1].clone()
            };
            if let Some(s) = s {
                if better(s, &cur) {
                    cur = s.clone();
                }
            }
            at_most.push(cur);
        }
        Outcome { at_most, exact }
    }

    fn best(&self) -> Vec<f64> {
        self.at_most.iter().map(|s| s.score).collect()
    }
}

/// Candidates in χ order: γ descending, then candidate index.
fn chi_order(gamma: &[f64]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..gamma.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| chi_cmp(gamma, a, b));
    order
}

#[inline]
fn chi_cmp(gamma: &[f64], a: u32, b: u32) -> std::cmp::Ordering {
    gamma[b as usize]
        .total_cmp(&gamma[a as usize])
        .then(a.cmp(&b))
}

/// Observable state of a guess-and-verify run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessTrace {
    pub rounds: usize,
    pub final_m_bar: usize,
}

/// The verification condition: no set using candidates past the prefix can beat `best[m]`.
fn verified(best: &[f64], tail: &[f64], m: usize) -> bool {
    (0..m).all(|mp| {
        let bound: f64 = tail.iter().take(m - mp).sum();
        best[m] >= best[mp] + bound
    })
}

/// Per-segment top-m search over a fixed candidate list.
#[derive(Debug, Clone)]
pub struct Cascade {
    hierarchy: Hierarchy,
    m: usize,
    m_bar0: Option<usize>,
}

/// Selected explanations of one segment: `(candidate index, signed score)` in rank order.
pub type SegmentTop = SmallVec<[(u32, f64); 4]>;

impl Cascade {
    /// `m_bar0 = None` disables guess-and-verify.
    pub fn new(
        candidates: &[Explanation],
        n_attrs: usize,
        m: usize,
        m_bar0: Option<usize>,
    ) -> Result<Cascade> {
        check_m(m)?;
        if let Some(mb) = m_bar0 {
            if mb < m {
                return Err(Error::InvalidParameter(format!(
                    "initial guess size {mb} is smaller than m = {m}"
                )));
            }
        }
        Ok(Cascade {
            hierarchy: Hierarchy::new(candidates, n_attrs)?,
            m,
            m_bar0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    /// Top-m for one segment given every candidate's signed score.
    pub fn top(&self, signed: &[f64]) -> SegmentTop {
        self.top_traced(signed).0
    }

    pub fn top_traced(&self, signed: &[f64]) -> (SegmentTop, GuessTrace) {
        assert_eq!(signed.len(), self.hierarchy.candidate_count());
        let gamma_all: Vec<f64> = signed.iter().map(|s| s.abs()).collect();
        let (chi, outcome, trace) = match self.m_bar0 {
            None => {
                let chi = chi_order(&gamma_all);
                let out = self.run_prefix(&chi, &gamma_all);
                (
                    chi,
                    out,
                    GuessTrace {
                        rounds: 1,
                        final_m_bar: gamma_all.len(),
                    },
                )
            }
            Some(m_bar0) => self.guess(&gamma_all, m_bar0),
        };
        let sel = &outcome.at_most[self.m];
        let top = sel
            .ranks
            .iter()
            .rev()
            .map(|&r| {
                let c = chi[r as usize];
                (c, signed[c as usize])
            })
            .collect();
        (top, trace)
    }

    fn run_prefix(&self, chi: &[u32], gamma_all: &[f64]) -> Outcome {
        let gamma: Vec<f64> = chi.iter().map(|&c| gamma_all[c as usize]).collect();
        Outcome::from_exact(self.hierarchy.solve(chi, &gamma, self.m))
    }

    fn guess(&self, gamma_all: &[f64], m_bar0: usize) -> (Vec<u32>, Outcome, GuessTrace) {
        let total = gamma_all.len();
        let mut m_bar = m_bar0.max(1);
        let mut rounds = 0;
        loop {
            rounds += 1;
            if m_bar >= total {
                let chi = chi_order(gamma_all);
                let out = self.run_prefix(&chi, gamma_all);
                return (
                    chi,
                    out,
                    GuessTrace {
                        rounds,
                        final_m_bar: m_bar,
                    },
                );
            }
            // the prefix plus the m entries that bound the tail
            let need = (m_bar + self.m).min(total);
            let mut order: Vec<u32> = (0..total as u32).collect();
            if need < total {
                order.select_nth_unstable_by(need, |&a, &b| chi_cmp(gamma_all, a, b));
                order.truncate(need);
            }
            order.sort_unstable_by(|&a, &b| chi_cmp(gamma_all, a, b));
            let out = self.run_prefix(&order[..m_bar], gamma_all);
            let tail: Vec<f64> = order[m_bar..].iter().map(|&c| gamma_all[c as usize]).collect();
            if verified(&out.best(), &tail, self.m) {
                return (
                    order,
                    out,
                    GuessTrace {
                        rounds,
                        final_m_bar: m_bar,
                    },
                );
            }
            m_bar *= 2;
        }
    }
}

fn check_m(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidParameter("m must be at least 1".into()));
    }
    Ok(())
}

/// Ranked top explanations of one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopExplanations {
    pub ranked: Vec<ScoredExplanation>,
    pub total_score: f64,
    /// `Best[q]` for `q = 0..=m`: the best at-most-`q` total.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub best: Vec<f64>,
}

/// Both readings of the top-m objective.
#[derive(Debug, Clone, PartialEq)]
pub struct TopMResult {
    /// Best set of size at most `m`; the default for reporting.
    pub at_most: TopExplanations,
    /// Best set of size exactly `m`, if `m` pairwise non-overlapping candidates exist.
    pub exact: Option<TopExplanations>,
}

fn gammas_of(scores: &[ScoredExplanation]) -> Vec<f64> {
    scores.iter().map(|s| s.gamma).collect()
}

fn validate_scores(scores: &[ScoredExplanation]) -> Result<()> {
    if scores.iter().any(|s| !s.gamma.is_finite() || s.gamma < 0.0) {
        return Err(Error::InvalidParameter(
            "diff scores must be finite and non-negative".into(),
        ));
    }
    Ok(())
}

fn materialize(
    sol: &Sol,
    chi: &[u32],
    scores: &[ScoredExplanation],
    best: Vec<f64>,
) -> TopExplanations {
    TopExplanations {
        ranked: sol
            .ranks
            .iter()
            .rev()
            .map(|&r| scores[chi[r as usize] as usize].clone())
            .collect(),
        total_score: sol.score,
        best,
    }
}

fn report(outcome: &Outcome, chi: &[u32], scores: &[ScoredExplanation], m: usize) -> TopMResult {
    let best = outcome.best();
    TopMResult {
        at_most: materialize(&outcome.at_most[m], chi, scores, best.clone()),
        exact: outcome.exact[m]
            .as_ref()
            .map(|s| materialize(s, chi, scores, best)),
    }
}

/// Exact top-m non-overlapping explanations (at most `m`) with `Best[0..=m]`.
pub fn ca_top_m(
    scores: &[ScoredExplanation],
    explain_by: &ExplainBy,
    m: usize,
) -> Result<TopExplanations> {
    Ok(ca_top_m_full(scores, explain_by, m)?.at_most)
}

/// [`ca_top_m`] reporting the exact-size optimum as well.
pub fn ca_top_m_full(
    scores: &[ScoredExplanation],
    explain_by: &ExplainBy,
    m: usize,
) -> Result<TopMResult> {
    check_m(m)?;
    validate_scores(scores)?;
    let explanations: Vec<Explanation> = scores.iter().map(|s| s.explanation.clone()).collect();
    let h = Hierarchy::new(&explanations, explain_by.len())?;
    let gamma_all = gammas_of(scores);
    let chi = chi_order(&gamma_all);
    let gamma: Vec<f64> = chi.iter().map(|&c| gamma_all[c as usize]).collect();
    let outcome = Outcome::from_exact(h.solve(&chi, &gamma, m));
    Ok(report(&outcome, &chi, scores, m))
}

/// Top-m over a γ-sorted candidate list, solving only a prefix of size `m_bar0`
/// and doubling it until the verification condition certifies the answer.
pub fn guess_and_verify(
    chi: &[ScoredExplanation],
    explain_by: &ExplainBy,
    m: usize,
    m_bar0: usize,
) -> Result<TopExplanations> {
    Ok(guess_and_verify_traced(chi, explain_by, m, m_bar0)?.0)
}

pub fn guess_and_verify_traced(
    chi: &[ScoredExplanation],
    explain_by: &ExplainBy,
    m: usize,
    m_bar0: usize,
) -> Result<(TopExplanations, GuessTrace)> {
    validate_scores(chi)?;
    if chi.windows(2).any(|w| w[0].gamma < w[1].gamma) {
        return Err(Error::InvalidParameter(
            "candidates must be sorted by descending diff score".into(),
        ));
    }
    let explanations: Vec<Explanation> = chi.iter().map(|s| s.explanation.clone()).collect();
    let cascade = Cascade::new(&explanations, explain_by.len(), m, Some(m_bar0))?;
    let gamma_all = gammas_of(chi);
    let (order, outcome, trace) = cascade.guess(&gamma_all, m_bar0);
    let best = outcome.best();
    Ok((materialize(&outcome.at_most[m], &order, chi, best), trace))
}

/// Exhaustive oracle over every pairwise non-overlapping subset of size at most `m`.
pub fn brute_force_top_m(scores: &[ScoredExplanation], m: usize) -> Result<TopMResult> {
    brute_force_top_m_bounded(scores, m, BRUTE_FORCE_LIMIT)
}

pub fn brute_force_top_m_bounded(
    scores: &[ScoredExplanation],
    m: usize,
    limit: usize,
) -> Result<TopMResult> {
    check_m(m)?;
    validate_scores(scores)?;
    if scores.len() > limit {
        return Err(Error::InvalidParameter(format!(
            "{} candidates exceed the exhaustive search bound of {limit}",
            scores.len()
        )));
    }
    let gamma_all = gammas_of(scores);
    let chi = chi_order(&gamma_all);
    let gamma: Vec<f64> = chi.iter().map(|&c| gamma_all[c as usize]).collect();
    let expl: Vec<&Explanation> = chi.iter().map(|&c| &scores[c as usize].explanation).collect();

    let mut exact: Vec<Option<Sol>> = vec![None; m + 1];
    exact[0] = Some(Sol::empty());
    // ranks chosen so far, ascending
    fn walk(
        start: usize,
        chosen: &mut Vec<u32>,
        expl: &[&Explanation],
        gamma: &[f64],
        m: usize,
        exact: &mut [Option<Sol>],
    ) {
        for r in start..expl.len() {
            if chosen.iter().any(|&c| overlaps(expl[c as usize], expl[r])) {
                continue;
            }
            chosen.push(r as u32);
            let ranks: Ranks = chosen.iter().rev().copied().collect();
            let sol = Sol {
                score: canonical_sum(&ranks, gamma),
                ranks,
            };
            offer(&mut exact[chosen.len()], sol);
            if chosen.len() < m {
                walk(r + 1, chosen, expl, gamma, m, exact);
            }
            chosen.pop();
        }
    }
    walk(0, &mut Vec::new(), &expl, &gamma, m, &mut exact);
    Ok(report(&Outcome::from_exact(exact), &chi, scores, m))
}

/// True iff every pair in `set` is non-overlapping.
pub fn pairwise_disjoint(set: &[ScoredExplanation]) -> bool {
    set.iter().enumerate().all(|(i, a)| {
        set[i + 1..]
            .iter()
            .all(|b| !overlaps(&a.explanation, &b.explanation))
    })
}

/// Helper for fixtures: a scored explanation with a positive effect.
pub fn scored(explanation: Explanation, gamma: f64) -> ScoredExplanation {
    ScoredExplanation {
        explanation,
        gamma,
        tau: Effect::Positive,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dict(cards: &[usize]) -> ExplainBy {
        ExplainBy::new(
            (0..cards.len()).map(|i| format!("A{i}")).collect(),
            cards
                .iter()
                .map(|&c| (0..c).map(|v| format!("v{v}")).collect())
                .collect(),
        )
    }

    #[test]
    fn colex_order() {
        assert!(colex_less(&[3, 1], &[3, 2]));
        assert!(colex_less(&[2, 1, 0], &[3]));
        assert!(colex_less(&[3], &[3, 0]));
        assert!(!colex_less(&[3, 0], &[3, 0]));
    }

    #[test]
    fn single_candidate() {
        let s = vec![scored(Explanation::of(&[(0, 0)]), 2.5)];
        let top = ca_top_m(&s, &dict(&[1]), 3).unwrap();
        assert_eq!(top.ranked.len(), 1);
        assert_eq!(top.total_score, 2.5);
        assert_eq!(top.best, vec![0.0, 2.5, 2.5, 2.5]);
    }

    #[test]
    fn parent_versus_children() {
        let d = dict(&[1, 2]);
        let s = vec![
            scored(Explanation::of(&[(0, 0)]), 10.0),
            scored(Explanation::of(&[(0, 0), (1, 0)]), 6.0),
            scored(Explanation::of(&[(0, 0), (1, 1)]), 7.0),
        ];
        let top = ca_top_m(&s, &d, 2).unwrap();
        assert_eq!(top.total_score, 13.0);
        let bf = brute_force_top_m(&s, 2).unwrap();
        assert_eq!(bf.at_most.total_score, 13.0);
        assert_eq!(bf.at_most.ranked, top.ranked);
        let one = ca_top_m(&s, &d, 1).unwrap();
        assert_eq!(one.total_score, 10.0);
    }

    #[test]
    fn disjoint_greedy() {
        let d = dict(&[3]);
        let s: Vec<_> = [5.0, 4.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &g)| scored(Explanation::of(&[(0, i as u32)]), g))
            .collect();
        let top = ca_top_m(&s, &d, 2).unwrap();
        assert_eq!(top.total_score, 9.0);
        assert_eq!(top.ranked[0].gamma, 5.0);
    }

    #[test]
    fn zero_scores_are_not_padded_in() {
        let d = dict(&[3]);
        let s: Vec<_> = [5.0, 0.0, 0.0]
            .iter()
            .enumerate()
            .map(|(i, &g)| scored(Explanation::of(&[(0, i as u32)]), g))
            .collect();
        let r = ca_top_m_full(&s, &d, 3).unwrap();
        assert_eq!(r.at_most.ranked.len(), 1);
        assert_eq!(r.exact.unwrap().ranked.len(), 3);
    }

    #[test]
    fn exact_size_may_be_infeasible() {
        let d = dict(&[1, 1]);
        // every pair overlaps
        let s = vec![
            scored(Explanation::of(&[(0, 0)]), 1.0),
            scored(Explanation::of(&[(1, 0)]), 2.0),
        ];
        let r = ca_top_m_full(&s, &d, 2).unwrap();
        assert!(r.exact.is_none());
        assert_eq!(r.at_most.total_score, 2.0);
        assert!(brute_force_top_m(&s, 2).unwrap().exact.is_none());
    }

    #[test]
    fn argument_errors() {
        let d = dict(&[2]);
        let s = vec![scored(Explanation::of(&[(0, 0)]), 1.0)];
        assert!(ca_top_m(&s, &d, 0).is_err());
        assert!(guess_and_verify(&s, &d, 3, 2).is_err());
        let unsorted = vec![
            scored(Explanation::of(&[(0, 0)]), 1.0),
            scored(Explanation::of(&[(0, 1)]), 2.0),
        ];
        assert!(guess_and_verify(&unsorted, &d, 1, 1).is_err());
        let dup = vec![s[0].clone(), s[0].clone()];
        assert!(ca_top_m(&dup, &d, 1).is_err());
        let many: Vec<_> = (0..40)
            .map(|i| scored(Explanation::of(&[(0, i)]), 1.0))
            .collect();
        assert!(brute_force_top_m(&many, 2).is_err());
    }

    #[test]
    fn hierarchy_adds_missing_ancestors() {
        let h = Hierarchy::new(&[Explanation::of(&[(0, 1), (1, 2), (2, 0)])], 3).unwrap();
        assert_eq!(h.node_count(), 8);
    }
}
