//! The reachable cone `L_k = {x ∈ Z^d : |x|₁ ≤ k, Σxᵢ ≡ k mod 2}`.
//!
//! Sites of one time slice are stored densely. In `d = 1` the index of `x`
//! is `(x + k)/2`; in `d = 2` the rotated coordinates `u = (x+y+k)/2`,
//! `v = (x−y+k)/2` range over `[0, k]²`; for `d ≥ 3` the sites are listed
//! lexicographically and looked up through a hash map.

use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct ConeSlice {
    d: u32,
    k: u32,
    sparse: Option<Sparse>,
}

#[derive(Debug, Clone)]
struct Sparse {
    sites: Vec<Vec<i32>>,
    index: HashMap<Vec<i32>, usize>,
}

impl ConeSlice {
    pub fn new(d: u32, k: u32) -> Self {
        assert!(d >= 1, "lattice dimension must be >= 1");
        let sparse = if d >= 3 {
            let mut sites = Vec::new();
            let mut cur = vec![0i32; d as usize];
            enumerate(d as usize, k as i32, k as i32, 0, &mut cur, &mut sites);
            let index = sites.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
            Some(Sparse { sites, index })
        } else {
            None
        };
        ConeSlice { d, k, sparse }
    }

    pub fn dim(&self) -> u32 {
        self.d
    }

    pub fn time(&self) -> u32 {
        self.k
    }

    pub fn len(&self) -> usize {
        let side = self.k as usize + 1;
        match (self.d, &self.sparse) {
            (1, _) => side,
            (2, _) => side * side,
            (_, Some(s)) => s.sites.len(),
            _ => unreachable!(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn site(&self, i: usize) -> Vec<i32> {
        let k = self.k as i32;
        match (self.d, &self.sparse) {
            (1, _) => vec![2 * i as i32 - k],
            (2, _) => {
                let side = self.k as usize + 1;
                let (u, v) = ((i / side) as i32, (i % side) as i32);
                vec![u + v - k, u - v]
            }
            (_, Some(s)) => s.sites[i].clone(),
            _ => unreachable!(),
        }
    }

    pub fn index_of(&self, x: &[i32]) -> Option<usize> {
        if x.len() != self.d as usize {
            return None;
        }
        let k = self.k as i32;
        let l1: i32 = x.iter().map(|c| c.abs()).sum();
        let sum: i32 = x.iter().sum();
        if l1 > k || (sum - k).rem_euclid(2) != 0 {
            return None;
        }
        match (self.d, &self.sparse) {
            (1, _) => Some(((x[0] + k) / 2) as usize),
            (2, _) => {
                let u = (x[0] + x[1] + k) / 2;
                let v = (x[0] - x[1] + k) / 2;
                Some(u as usize * (self.k as usize + 1) + v as usize)
            }
            (_, Some(s)) => s.index.get(x).copied(),
            _ => unreachable!(),
        }
    }

    /// Calls `f` with the index in `L_{k−1}` of every neighbour of site `i`.
    pub fn for_each_predecessor(&self, i: usize, prev: &ConeSlice, mut f: impl FnMut(usize)) {
        debug_assert_eq!(prev.k + 1, self.k);
        match self.d {
            1 => {
                if i >= 1 {
                    f(i - 1);
                }
                if i < self.k as usize {
                    f(i);
                }
            }
            2 => {
                let side = self.k as usize + 1;
                let prev_side = side - 1;
                let (u, v) = (i / side, i % side);
                for (du, dv) in [(1, 1), (0, 0), (1, 0), (0, 1)] {
                    if u >= du && v >= dv && u - du < prev_side && v - dv < prev_side {
                        f((u - du) * prev_side + (v - dv));
                    }
                }
            }
            _ => {
                let mut x = self.site(i);
                for j in 0..self.d as usize {
                    for step in [-1, 1] {
                        x[j] -= step;
                        if let Some(p) = prev.index_of(&x) {
                            f(p);
                        }
                        x[j] += step;
                    }
                }
            }
        }
    }
}

fn enumerate(d: usize, k: i32, budget: i32, j: usize, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
    if j == d - 1 {
        let used = k - budget;
        for c in -budget..=budget {
            if (used + c.abs() - k).rem_euclid(2) == 0 {
                cur[j] = c;
                out.push(cur.clone());
            }
        }
        return;
    }
    for c in -budget..=budget {
        cur[j] = c;
        enumerate(d, k, budget - c.abs(), j + 1, cur, out);
    }
}

/// The sites of `L_k` in slice order.
pub fn reachable_sites(d: u32, k: u32) -> Vec<Vec<i32>> {
    let s = ConeSlice::new(d, k);
    (0..s.len()).map(|i| s.site(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    fn walk_endpoints(d: usize, k: usize) -> BTreeSet<Vec<i32>> {
        let mut out = BTreeSet::new();
        let total = (2 * d).pow(k as u32);
        for mut code in 0..total {
            let mut x = vec![0i32; d];
            for _ in 0..k {
                let s = code % (2 * d);
                code /= 2 * d;
                x[s / 2] += if s.is_multiple_of(2) { 1 } else { -1 };
            }
            out.insert(x);
        }
        out
    }

    #[test]
    fn small_slices() {
        assert_eq!(reachable_sites(1, 2), vec![vec![-2], vec![0], vec![2]]);
        let s: BTreeSet<_> = reachable_sites(2, 1).into_iter().collect();
        let expected: BTreeSet<_> = [vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]].into_iter().collect();
        assert_eq!(s, expected);
        assert_eq!(ConeSlice::new(1, 7).len(), 8);
    }

    #[test]
    fn slices_match_walk_enumeration() {
        for (d, kmax) in [(1usize, 8usize), (2, 5), (3, 4)] {
            for k in 0..=kmax {
                let sites = reachable_sites(d as u32, k as u32);
                let set: BTreeSet<_> = sites.iter().cloned().collect();
                assert_eq!(set.len(), sites.len());
                assert_eq!(set, walk_endpoints(d, k), "d={d} k={k}");
            }
        }
    }

    #[test]
    fn index_round_trip_and_predecessors() {
        for d in 1..=3u32 {
            for k in 1..=5u32 {
                let cur = ConeSlice::new(d, k);
                let prev = ConeSlice::new(d, k - 1);
                for i in 0..cur.len() {
                    let x = cur.site(i);
                    assert_eq!(cur.index_of(&x), Some(i));
                    let mut got = BTreeSet::new();
                    cur.for_each_predecessor(i, &prev, |p| {
                        got.insert(prev.site(p));
                    });
                    let mut want = BTreeSet::new();
                    for j in 0..d as usize {
                        for s in [-1, 1] {
                            let mut y = x.clone();
                            y[j] += s;
                            if prev.index_of(&y).is_some() {
                                want.insert(y);
                            }
                        }
                    }
                    assert_eq!(got, want, "d={d} k={k} x={x:?}");
                }
                assert_eq!(cur.index_of(&vec![k as i32 + 1; d as usize]), None);
            }
        }
    }
}
