use super::TemporalKnowledgeGraph;

/// Recursively removes entities that participate in fewer than two facts,
/// dropping every fact that touches them, until a fixpoint is reached.
///
/// Degree counts fact occurrences (multigraph degree); a self-loop counts
/// once for its entity.
pub fn prune_rare_entities(graph: &TemporalKnowledgeGraph) -> TemporalKnowledgeGraph {
    let facts = graph.facts_raw();
    let n = graph.entity_count();
    let mut degree = vec![0usize; n];
    let mut incident: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (id, f) in facts.iter().enumerate() {
        degree[f.s as usize] += 1;
        incident[f.s as usize].push(id as u32);
        if f.o != f.s {
            degree[f.o as usize] += 1;
            incident[f.o as usize].push(id as u32);
        }
    }

    let mut alive = vec![true; facts.len()];
    let mut removed = vec![false; n];
    let mut queue: Vec<u32> = (0..n as u32).filter(|&e| degree[e as usize] < 2).collect();
    while let Some(e) = queue.pop() {
        if removed[e as usize] {
            continue;
        }
        removed[e as usize] = true;
        for &id in &incident[e as usize] {
            if !alive[id as usize] {
                continue;
            }
            alive[id as usize] = false;
            let f = facts[id as usize];
            for other in [f.s, f.o] {
                if other == e || removed[other as usize] {
                    continue;
                }
                degree[other as usize] -= 1;
                if degree[other as usize] < 2 {
                    queue.push(other);
                }
            }
        }
    }

    let kept = facts
        .iter()
        .zip(&alive)
        .filter(|(_, &a)| a)
        .map(|(f, _)| graph.materialize(*f));
    let (pruned, _) = TemporalKnowledgeGraph::from_quadruples(kept);
    let labels = graph
        .labels()
        .iter()
        .filter(|(e, _)| pruned.entity_idx(e).is_some())
        .map(|(e, l)| (e.clone(), l.clone()))
        .collect();
    pruned.with_labels(labels)
}
