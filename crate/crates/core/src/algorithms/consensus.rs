use crate::topology::Graph;

/// `out_i = min_{j∈N_i} v_j`.
pub fn local_min_consensus<T: Copy + PartialOrd>(v: &[T], graph: &Graph) -> Vec<T> {
    neighborhood_fold(v, graph, |a, b| if b < a { b } else { a })
}

/// `out_i = max_{j∈N_i} v_j`.
pub fn local_max_consensus<T: Copy + PartialOrd>(v: &[T], graph: &Graph) -> Vec<T> {
    neighborhood_fold(v, graph, |a, b| if b > a { b } else { a })
}

fn neighborhood_fold<T: Copy>(v: &[T], graph: &Graph, pick: impl Fn(T, T) -> T) -> Vec<T> {
    assert_eq!(v.len(), graph.agents(), "one value per agent");
    (0..graph.agents())
        .map(|i| {
            graph
                .neighborhood(i)
                .iter()
                .fold(v[i], |acc, &j| pick(acc, v[j]))
        })
        .collect()
}
