//! Breadth-first search over implicitly given graphs, optionally expanding
//! each layer in parallel. Results do not depend on the thread count.

use std::collections::HashMap;
use std::hash::Hash;

use rayon::prelude::*;

use crate::error::AnalysisError;
use crate::exec::Letter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_states: usize,
    pub max_subset_states: usize,
    pub threads: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 1_000_000,
            max_subset_states: 100_000,
            threads: 1,
        }
    }
}

/// A path found by [`bfs`].
#[derive(Debug, Clone)]
pub struct Found<S> {
    pub letters: Vec<Letter>,
    pub states: Vec<S>,
}

#[derive(Debug, Clone)]
pub struct Outcome<S> {
    pub found: Option<Found<S>>,
    pub explored: usize,
}

/// Shortest path from some initial state to a state satisfying `goal`.
/// Goal states are not expanded. Ties are broken by initial-state order,
/// then by successor order.
pub fn bfs<S, F, G>(initial: Vec<S>, succ: F, goal: G, limits: &Limits) -> Result<Outcome<S>, AnalysisError>
where
    S: Clone + Eq + Hash + Send + Sync,
    F: Fn(&S) -> Result<Vec<(Letter, S)>, AnalysisError> + Sync,
    G: Fn(&S) -> bool + Sync,
{
    let pool = if limits.threads > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(limits.threads).build().ok()
    } else {
        None
    };
    let mut nodes: Vec<(S, Option<(usize, Letter)>)> = Vec::new();
    let mut index: HashMap<S, usize> = HashMap::new();
    let mut frontier = Vec::new();

    let path_to = |nodes: &[(S, Option<(usize, Letter)>)], mut i: usize| {
        let mut letters = Vec::new();
        let mut states = vec![nodes[i].0.clone()];
        while let Some((p, l)) = &nodes[i].1 {
            letters.push(l.clone());
            states.push(nodes[*p].0.clone());
            i = *p;
        }
        letters.reverse();
        states.reverse();
        Found { letters, states }
    };

    for s in initial {
        if index.contains_key(&s) {
            continue;
        }
        let i = nodes.len();
        index.insert(s.clone(), i);
        let is_goal = goal(&s);
        nodes.push((s, None));
        if is_goal {
            return Ok(Outcome {
                found: Some(path_to(&nodes, i)),
                explored: nodes.len(),
            });
        }
        frontier.push(i);
    }

    while !frontier.is_empty() {
        let expand = |i: &usize| succ(&nodes[*i].0);
        let layer: Vec<Result<Vec<(Letter, S)>, AnalysisError>> = match &pool {
            Some(pool) => pool.install(|| frontier.par_iter().map(expand).collect()),
            None => frontier.iter().map(expand).collect(),
        };
        let mut next = Vec::new();
        for (parent, succs) in frontier.iter().zip(layer) {
            for (l, s) in succs? {
                if index.contains_key(&s) {
                    continue;
                }
                let i = nodes.len();
                if i >= limits.max_states {
                    return Err(AnalysisError::StateBudget {
                        limit: limits.max_states,
                    });
                }
                index.insert(s.clone(), i);
                let is_goal = goal(&s);
                nodes.push((s, Some((*parent, l))));
                if is_goal {
                    return Ok(Outcome {
                        found: Some(path_to(&nodes, i)),
                        explored: nodes.len(),
                    });
                }
                next.push(i);
            }
        }
        frontier = next;
    }
    Ok(Outcome {
        found: None,
        explored: nodes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::Var;

    fn letter(i: u16) -> Letter {
        Letter::Copy {
            dst: Var(i),
            src: Var(i),
        }
    }

    fn succ(n: &u32) -> Result<Vec<(Letter, u32)>, AnalysisError> {
        Ok(vec![(letter(0), n * 2), (letter(1), n + 1)])
    }

    #[test]
    fn finds_shortest_path() {
        let out = bfs(vec![1u32], succ, |n| *n == 10, &Limits::default()).unwrap();
        let found = out.found.unwrap();
        assert_eq!(found.states, vec![1, 2, 4, 5, 10]);
    }

    #[test]
    fn parallel_layers_are_deterministic() {
        let seq = bfs(vec![1u32], succ, |n| *n == 77, &Limits::default()).unwrap();
        let par = bfs(
            vec![1u32],
            succ,
            |n| *n == 77,
            &Limits {
                threads: 4,
                ..Limits::default()
            },
        )
        .unwrap();
        assert_eq!(seq.explored, par.explored);
        assert_eq!(seq.found.unwrap().letters, par.found.unwrap().letters);
    }

    #[test]
    fn budget_is_enforced() {
        let limits = Limits {
            max_states: 50,
            ..Limits::default()
        };
        assert_eq!(
            bfs(vec![1u32], succ, |_| false, &limits).unwrap_err(),
            AnalysisError::StateBudget { limit: 50 }
        );
    }
}
