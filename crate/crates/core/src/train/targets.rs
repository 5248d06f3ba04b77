use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::TrainError;

/// One expansion of a search tree: which node was branched, on what, the
/// reward, and the ids of the two children.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeRecord {
    pub node: usize,
    pub action: usize,
    pub reward: f64,
    pub children: [usize; 2],
    #[serde(default)]
    pub excluded: bool,
}

/// State values of every expanded node, bottom-up.
///
/// A child that was never expanded (leaf, pruned or infeasible) has value
/// 0; an expanded node has `r + gamma * (V(left) + V(right)) / 2`.
pub fn value_targets_from_tree(records: &[TreeRecord], gamma: f64) -> Result<HashMap<usize, f64>, TrainError> {
    let by_node: HashMap<usize, &TreeRecord> = records.iter().map(|r| (r.node, r)).collect();
    let mut values: HashMap<usize, f64> = HashMap::with_capacity(records.len());
    let mut on_stack: HashMap<usize, bool> = HashMap::new();

    for rec in records {
        if values.contains_key(&rec.node) {
            continue;
        }
        // Iterative post-order walk.
        let mut stack = vec![(rec.node, false)];
        while let Some((id, expanded)) = stack.pop() {
            let r = by_node[&id];
            if expanded {
                let v = r.children.iter().map(|c| values.get(c).copied().unwrap_or(0.0)).sum::<f64>();
                values.insert(id, r.reward + gamma * v / 2.0);
                on_stack.insert(id, false);
                continue;
            }
            if values.contains_key(&id) {
                continue;
            }
            if on_stack.get(&id).copied().unwrap_or(false) {
                return Err(TrainError::CyclicTree(id));
            }
            on_stack.insert(id, true);
            stack.push((id, true));
            for c in r.children {
                if by_node.contains_key(&c) && !values.contains_key(&c) {
                    if on_stack.get(&c).copied().unwrap_or(false) {
                        return Err(TrainError::CyclicTree(c));
                    }
                    stack.push((c, false));
                }
            }
        }
    }
    Ok(values)
}

/// Divides every target by `1 + |root_bound|`.
pub fn normalize_targets(values: &mut HashMap<usize, f64>, root_bound: f64) {
    let scale = 1.0 + root_bound.abs();
    for v in values.values_mut() {
        *v /= scale;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(node: usize, reward: f64, children: [usize; 2]) -> TreeRecord {
        TreeRecord { node, action: 0, reward, children, excluded: false }
    }

    #[test]
    fn examples() {
        let v = value_targets_from_tree(&[rec(0, 1.0, [1, 2])], 0.99).unwrap();
        assert_eq!(v[&0], 1.0);
        let v = value_targets_from_tree(&[rec(0, 0.5, [1, 2]), rec(1, 1.0, [3, 4])], 0.99).unwrap();
        assert_eq!(v[&1], 1.0);
        assert!((v[&0] - 0.995).abs() < 1e-15);
        assert!(!v.contains_key(&2));
    }

    #[test]
    fn cycle_detected() {
        let err = value_targets_from_tree(&[rec(0, 1.0, [1, 5]), rec(1, 1.0, [0, 6])], 0.99).unwrap_err();
        assert!(matches!(err, TrainError::CyclicTree(_)));
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let recs: Vec<TreeRecord> = (0..100_000).map(|i| rec(i, 0.0, [i + 1, usize::MAX])).collect();
        let v = value_targets_from_tree(&recs, 1.0).unwrap();
        assert_eq!(v.len(), 100_000);
    }
}
