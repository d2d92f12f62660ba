use std::collections::VecDeque;

use super::CsrMatrix;

/// Reverse Cuthill-McKee ordering of the symmetrized nonzero pattern.
///
/// Returns `perm` with `perm[new] = old`. Explicit zeros are ignored, so rows
/// decoupled by Dirichlet elimination become isolated vertices.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj = symmetric_adjacency(a);
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    // Components are started in order of increasing minimum degree to keep
    // the result deterministic.
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&i| (degree[i], i));

    for &seed in &seeds {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(&adj, &degree, seed);
        let mut queue = VecDeque::new();
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (degree[u], u));
            for u in next {
                visited[u] = true;
                queue.push_back(u);
            }
        }
    }
    order.reverse();
    order
}

fn symmetric_adjacency(a: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = a.nrows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        let (cols, vals) = a.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            if j != i && v != 0.0 {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

/// George-Liu style search: repeat BFS from the farthest low-degree vertex
/// until the eccentricity stops growing.
fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], start: usize) -> usize {
    let mut current = start;
    let mut ecc = 0usize;
    loop {
        let levels = bfs_levels(adj, current);
        let max_level = levels.iter().filter_map(|l| *l).max().unwrap_or(0);
        let candidate = levels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Some(max_level))
            .min_by_key(|(i, _)| (degree[*i], *i))
            .map(|(i, _)| i)
            .unwrap_or(current);
        if max_level <= ecc {
            return current;
        }
        ecc = max_level;
        current = candidate;
    }
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    let mut queue = VecDeque::new();
    level[start] = Some(0);
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        let l = level[v].unwrap();
        for &u in &adj[v] {
            if level[u].is_none() {
                level[u] = Some(l + 1);
                queue.push_back(u);
            }
        }
    }
    level
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcm_is_a_permutation() {
        let mut trip = Vec::new();
        for i in 0..10 {
            trip.push((i, i, 2.0));
            trip.push((i, (i * 7 + 3) % 10, -1.0));
        }
        let a = CsrMatrix::from_triplets(10, 10, trip);
        let mut p = reverse_cuthill_mckee(&a);
        p.sort_unstable();
        assert_eq!(p, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn rcm_recovers_band_of_shuffled_path() {
        // A path graph with shuffled labels has bandwidth 1 after RCM.
        let n = 30;
        let label: Vec<usize> = (0..n).map(|i| (i * 11) % n).collect();
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((label[i], label[i], 2.0));
            if i + 1 < n {
                trip.push((label[i], label[i + 1], -1.0));
                trip.push((label[i + 1], label[i], -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, trip);
        let perm = reverse_cuthill_mckee(&a);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        for i in 0..n {
            for &j in a.row(i).0 {
                assert!(inv[i].abs_diff(inv[j]) <= 1);
            }
        }
    }
}
