//! Brute-force oracles shared by the integration tests. Nothing here calls the
//! enumeration or probability code under test.

#![allow(dead_code)]

pub type Pair = (usize, usize);

pub fn pairs_of(n: usize) -> Vec<Pair> {
    let mut out = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            out.push((u, v));
        }
    }
    out
}

/// Every subset of `host` with degree sequence `target`, by scanning all bitmasks.
pub fn brute_factors(n: usize, host: &[Pair], target: &[usize]) -> Vec<Vec<Pair>> {
    assert!(host.len() <= 20, "brute force only for tiny hosts");
    let need: usize = target.iter().sum::<usize>() / 2;
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << host.len()) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let mut deg = vec![0usize; n];
        for (i, &(u, v)) in host.iter().enumerate() {
            if mask >> i & 1 == 1 {
                deg[u] += 1;
                deg[v] += 1;
            }
        }
        if deg == target {
            out.push(
                host.iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect(),
            );
        }
    }
    out
}

/// `P(e ∈ factor)` for every host pair, as `(containing, total)`.
pub fn brute_edge_counts(n: usize, host: &[Pair], target: &[usize]) -> (Vec<u64>, u64) {
    let fs = brute_factors(n, host, target);
    let counts = host
        .iter()
        .map(|e| fs.iter().filter(|f| f.contains(e)).count() as u64)
        .collect();
    (counts, fs.len() as u64)
}

/// Labeled `d`-regular graphs on `n` vertices.
pub fn brute_regular(n: usize, d: usize) -> Vec<Vec<Pair>> {
    brute_factors(n, &pairs_of(n), &vec![d; n])
}

/// All `k`-subsets of `items`.
pub fn subsets<T: Clone>(items: &[T], k: usize) -> Vec<Vec<T>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut with: Vec<Vec<T>> = subsets(&items[1..], k - 1)
        .into_iter()
        .map(|mut s| {
            s.insert(0, items[0].clone());
            s
        })
        .collect();
    with.extend(subsets(&items[1..], k));
    with
}
