//! Exhaustive enumeration of rule body groundings.

use std::ops::ControlFlow;

use super::{BodyAtom, Ordering};
use crate::tkg::{Relation, TemporalKnowledgeGraph};

/// Body atom resolved against one graph's relation vocabulary.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Atom {
    pub rel: u32,
    pub inverted: bool,
}

/// Resolves a body; `None` if some relation does not occur in the graph,
/// in which case the body has no groundings.
pub(crate) fn compile(graph: &TemporalKnowledgeGraph, body: &[BodyAtom]) -> Option<Vec<Atom>> {
    body.iter()
        .map(|a| {
            graph.relation_idx(&a.relation).map(|rel| Atom {
                rel,
                inverted: a.inverted,
            })
        })
        .collect()
}

/// One body grounding: the chain's first and last entity, the timestamp of
/// the last atom and the ids of the facts used (pairwise distinct).
pub(crate) struct Grounding<'a> {
    pub first: u32,
    pub last: u32,
    pub last_t: i32,
    pub facts: &'a [u32],
}

/// Time bounds applied to every atom, inclusive.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Window {
    pub lo: i32,
    pub hi: i32,
}

impl Window {
    pub const ALL: Window = Window {
        lo: i32::MIN,
        hi: i32::MAX,
    };
}

/// Calls `visit` for every grounding of `atoms`, anchored at `start` when
/// given. Timestamps along the chain respect `ordering`; a fact is never
/// used twice within one grounding.
pub(crate) fn for_each_grounding<F>(
    graph: &TemporalKnowledgeGraph,
    atoms: &[Atom],
    start: Option<u32>,
    window: Window,
    ordering: Ordering,
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&Grounding<'_>) -> ControlFlow<()>,
{
    let Some(first) = atoms.first() else {
        return ControlFlow::Continue(());
    };
    let mut used = Vec::with_capacity(atoms.len());
    match start {
        Some(e1) => {
            for edge in graph.edges_in(e1, first.rel, first.inverted, window.lo, window.hi) {
                used.push(edge.fact);
                extend(graph, atoms, 1, e1, edge.other, edge.t, window, ordering, &mut used, visit)?;
                used.pop();
            }
        }
        None => {
            for &id in graph.facts_of_relation(first.rel) {
                let f = graph.fact(id);
                if f.t < window.lo || f.t > window.hi {
                    continue;
                }
                let (e1, e2) = if first.inverted { (f.o, f.s) } else { (f.s, f.o) };
                used.push(id);
                extend(graph, atoms, 1, e1, e2, f.t, window, ordering, &mut used, visit)?;
                used.pop();
            }
        }
    }
    ControlFlow::Continue(())
}

#[allow(clippy::too_many_arguments)]
fn extend<F>(
    graph: &TemporalKnowledgeGraph,
    atoms: &[Atom],
    depth: usize,
    first: u32,
    cur: u32,
    cur_t: i32,
    window: Window,
    ordering: Ordering,
    used: &mut Vec<u32>,
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&Grounding<'_>) -> ControlFlow<()>,
{
    let Some(atom) = atoms.get(depth) else {
        return visit(&Grounding {
            first,
            last: cur,
            last_t: cur_t,
            facts: used,
        });
    };
    let lo = ordering.next_min(cur_t).max(window.lo);
    if lo > window.hi {
        return ControlFlow::Continue(());
    }
    for edge in graph.edges_in(cur, atom.rel, atom.inverted, lo, window.hi) {
        if used.contains(&edge.fact) {
            continue;
        }
        used.push(edge.fact);
        let flow = extend(graph, atoms, depth + 1, first, edge.other, edge.t, window, ordering, used, visit);
        used.pop();
        flow?;
    }
    ControlFlow::Continue(())
}

/// Whether the head `(first, head, last, t)` holds for some `t` admissible
/// after `last_t`, using a fact outside the grounding.
pub(crate) fn head_holds(
    graph: &TemporalKnowledgeGraph,
    head: u32,
    g: &Grounding<'_>,
    ordering: Ordering,
) -> bool {
    let facts = graph.pair_facts(g.first, head, g.last);
    let from = facts.partition_point(|&(t, _)| t < ordering.next_min(g.last_t));
    facts[from..].iter().any(|(_, f)| !g.facts.contains(f))
}

/// `(rule_support, body_support)` of a rule over the whole graph.
pub(crate) fn count_supports(
    graph: &TemporalKnowledgeGraph,
    head: &Relation,
    body: &[BodyAtom],
    ordering: Ordering,
) -> (u64, u64) {
    let Some(atoms) = compile(graph, body) else {
        return (0, 0);
    };
    let head = graph.relation_idx(head);
    let (mut rule_support, mut body_support) = (0u64, 0u64);
    let _ = for_each_grounding(graph, &atoms, None, Window::ALL, ordering, &mut |g| {
        body_support += 1;
        if head.is_some_and(|h| head_holds(graph, h, g, ordering)) {
            rule_support += 1;
        }
        ControlFlow::Continue(())
    });
    (rule_support, body_support)
}
