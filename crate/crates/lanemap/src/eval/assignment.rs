//! Gated optimal point assignment: a one-to-one matching between generated
//! and reference points that maximizes the number of matches within the
//! distance gate and, among those, minimizes the total matched distance.
//!
//! Pairs beyond the gate do not exist as edges, so the bipartite graph falls
//! apart into spatial blocks (points in different blocks are farther apart
//! than the gate and can never match). Each block is solved exactly by
//! successive shortest augmenting paths with Dijkstra and node potentials;
//! the result equals the monolithic solve.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Point2;

/// One-to-one matching; every distance is within the gate.
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    /// (generated index, reference index, distance).
    pub pairs: Vec<(usize, usize, f64)>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn total_distance(&self) -> f64 {
        self.pairs.iter().map(|&(_, _, d)| d).sum()
    }
}

/// Grid hash with cell size = gate, so all candidate partners of a point sit
/// in its 3x3 cell neighborhood.
struct Grid {
    cell: f64,
    cells: std::collections::HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn build(points: &[Point2], cell: f64) -> Self {
        let mut cells: std::collections::HashMap<(i64, i64), Vec<usize>> =
            std::collections::HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let key = ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64);
            cells.entry(key).or_default().push(i);
        }
        Self { cell, cells }
    }

    fn neighbors(&self, p: &Point2) -> impl Iterator<Item = usize> + '_ {
        let cx = (p.x / self.cell).floor() as i64;
        let cy = (p.y / self.cell).floor() as i64;
        (-1..=1).flat_map(move |dy| {
            (-1..=1).flat_map(move |dx| {
                self.cells
                    .get(&(cx + dx, cy + dy))
                    .into_iter()
                    .flatten()
                    .copied()
            })
        })
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Minimum-total-distance one-to-one assignment over all pairs within
/// `gate`, maximizing the match count first.
pub fn optimal_assignment(gen: &[Point2], reference: &[Point2], gate: f64) -> Assignment {
    assert!(gate > 0.0, "gate must be positive");
    if gen.is_empty() || reference.is_empty() {
        return Assignment::default();
    }

    // Candidate edges within the gate.
    let grid = Grid::build(reference, gate);
    let mut edges: Vec<Vec<(usize, f64)>> = vec![Vec::new(); gen.len()];
    for (gi, gp) in gen.iter().enumerate() {
        let mut local: Vec<(usize, f64)> = grid
            .neighbors(gp)
            .filter_map(|ri| {
                let d = gp.distance(&reference[ri]);
                (d <= gate).then_some((ri, d))
            })
            .collect();
        local.sort_unstable_by_key(|e| e.0);
        local.dedup_by_key(|e| e.0);
        edges[gi] = local;
    }

    // Blocks: union generated node gi with reference node gen.len() + ri.
    let mut dsu = DisjointSet::new(gen.len() + reference.len());
    for (gi, adj) in edges.iter().enumerate() {
        for &(ri, _) in adj {
            dsu.union(gi, gen.len() + ri);
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> =
        std::collections::BTreeMap::new();
    for gi in 0..gen.len() {
        if !edges[gi].is_empty() {
            let root = dsu.find(gi);
            blocks.entry(root).or_default().0.push(gi);
        }
    }
    for ri in 0..reference.len() {
        let root = dsu.find(gen.len() + ri);
        if let Some(entry) = blocks.get_mut(&root) {
            entry.1.push(ri);
        }
    }

    let mut pairs = Vec::new();
    for (lefts, rights) in blocks.values() {
        solve_block(lefts, rights, &edges, &mut pairs);
    }
    pairs.sort_unstable_by_key(|p| p.0);
    Assignment { pairs }
}

#[derive(Copy, Clone, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: usize,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap by distance, deterministic tie-break on node index.
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Successive shortest augmenting paths on one block. Node potentials keep
/// reduced costs non-negative so Dijkstra stays valid after augmentations.
fn solve_block(
    lefts: &[usize],
    rights: &[usize],
    edges: &[Vec<(usize, f64)>],
    out: &mut Vec<(usize, usize, f64)>,
) {
    let nl = lefts.len();
    let nr = rights.len();
    let right_local: std::collections::HashMap<usize, usize> =
        rights.iter().enumerate().map(|(k, &ri)| (ri, k)).collect();
    // Local adjacency.
    let adj: Vec<Vec<(usize, f64)>> = lefts
        .iter()
        .map(|&gi| {
            edges[gi]
                .iter()
                .map(|&(ri, d)| (right_local[&ri], d))
                .collect::<Vec<_>>()
        })
        .collect();

    let mut match_l: Vec<Option<usize>> = vec![None; nl];
    let mut match_r: Vec<Option<usize>> = vec![None; nr];
    let mut pot_l = vec![0.0f64; nl];
    let mut pot_r = vec![0.0f64; nr];

    loop {
        // Multi-source Dijkstra from all unmatched left nodes over the
        // residual graph. Node ids: left l -> l, right r -> nl + r.
        const UNSET: usize = usize::MAX;
        let mut dist = vec![f64::INFINITY; nl + nr];
        let mut prev_left_of_right = vec![UNSET; nr];
        let mut heap = BinaryHeap::new();
        for l in 0..nl {
            if match_l[l].is_none() {
                dist[l] = 0.0;
                heap.push(HeapEntry { dist: 0.0, node: l });
            }
        }
        let mut best_target: Option<(f64, usize)> = None;
        let mut settled = vec![false; nl + nr];
        while let Some(HeapEntry { dist: d, node }) = heap.pop() {
            if settled[node] || d > dist[node] {
                continue;
            }
            settled[node] = true;
            if node < nl {
                let l = node;
                for &(r, cost) in &adj[l] {
                    if match_l[l] == Some(r) {
                        continue;
                    }
                    let reduced = cost + pot_l[l] - pot_r[r];
                    let nd = d + reduced;
                    if nd + 1e-15 < dist[nl + r] {
                        dist[nl + r] = nd;
                        prev_left_of_right[r] = l;
                        heap.push(HeapEntry {
                            dist: nd,
                            node: nl + r,
                        });
                    }
                }
            } else {
                let r = node - nl;
                match match_r[r] {
                    None => {
                        if best_target.map(|(bd, _)| d < bd).unwrap_or(true) {
                            best_target = Some((d, r));
                        }
                        // An unmatched right node never relaxes further.
                    }
                    Some(l) => {
                        // Residual backward edge r -> l with cost -c(l, r).
                        let cost = adj[l]
                            .iter()
                            .find(|&&(rr, _)| rr == r)
                            .map(|&(_, c)| c)
                            .expect("matched edge exists");
                        let reduced = -cost - pot_l[l] + pot_r[r];
                        let nd = d + reduced;
                        if nd + 1e-15 < dist[l] {
                            dist[l] = nd;
                            heap.push(HeapEntry { dist: nd, node: l });
                        }
                    }
                }
            }
        }

        let Some((target_dist, target)) = best_target else {
            break; // no augmenting path left: matching is maximum
        };

        // Update potentials for settled nodes.
        for l in 0..nl {
            if dist[l] < f64::INFINITY {
                pot_l[l] += dist[l].min(target_dist);
            }
        }
        for r in 0..nr {
            if dist[nl + r] < f64::INFINITY {
                pot_r[r] += dist[nl + r].min(target_dist);
            }
        }

        // Walk the augmenting path backwards, flipping matches.
        let mut r = target;
        loop {
            let l = prev_left_of_right[r];
            let prev_r = match_l[l];
            match_l[l] = Some(r);
            match_r[r] = Some(l);
            match prev_r {
                Some(pr) => r = pr,
                None => break,
            }
        }
    }

    for (l, matched) in match_l.iter().enumerate() {
        if let Some(r) = *matched {
            let cost = adj[l]
                .iter()
                .find(|&&(rr, _)| rr == r)
                .map(|&(_, c)| c)
                .unwrap();
            out.push((lefts[l], rights[r], cost));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(raw: &[(f64, f64)]) -> Vec<Point2> {
        raw.iter().map(|&(x, y)| Point2::new(x, y)).collect()
    }

    /// Exhaustive search over partial injective assignments: maximum match
    /// count first, then minimum total distance.
    pub(super) fn brute_force(gen: &[Point2], reference: &[Point2], gate: f64) -> (usize, f64) {
        fn recurse(
            gi: usize,
            gen: &[Point2],
            reference: &[Point2],
            gate: f64,
            used: &mut Vec<bool>,
            count: usize,
            cost: f64,
            best: &mut (usize, f64),
        ) {
            if gi == gen.len() {
                if count > best.0 || (count == best.0 && cost < best.1) {
                    *best = (count, cost);
                }
                return;
            }
            recurse(gi + 1, gen, reference, gate, used, count, cost, best);
            for ri in 0..reference.len() {
                if used[ri] {
                    continue;
                }
                let d = gen[gi].distance(&reference[ri]);
                if d > gate {
                    continue;
                }
                used[ri] = true;
                recurse(
                    gi + 1,
                    gen,
                    reference,
                    gate,
                    used,
                    count + 1,
                    cost + d,
                    best,
                );
                used[ri] = false;
            }
        }
        let mut best = (0usize, f64::INFINITY);
        let mut used = vec![false; reference.len()];
        recurse(0, gen, reference, gate, &mut used, 0, 0.0, &mut best);
        if best.0 == 0 {
            best.1 = 0.0;
        }
        (best.0, best.1)
    }

    #[test]
    fn identical_sets_match_perfectly_at_zero_cost() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 2.0)]);
        let assignment = optimal_assignment(&a, &a, 0.2);
        assert_eq!(assignment.len(), 3);
        assert_eq!(assignment.total_distance(), 0.0);
        for &(g, r, d) in &assignment.pairs {
            assert_eq!(g, r);
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn offset_beyond_gate_matches_nothing() {
        let a = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = pts(&[(0.5, 0.0), (1.5, 0.0)]);
        assert!(optimal_assignment(&a, &b, 0.2).is_empty());
    }

    #[test]
    fn prefers_more_matches_over_cheaper_total() {
        // One generated point could grab the nearest reference point and
        // starve the other; maximum cardinality forbids that.
        let gen = pts(&[(0.0, 0.0), (0.1, 0.0)]);
        let reference = pts(&[(0.05, 0.0), (0.3, 0.0)]);
        let assignment = optimal_assignment(&gen, &reference, 0.2);
        assert_eq!(assignment.len(), 2);
    }

    #[test]
    fn matches_brute_force_on_random_small_instances() {
        let mut state = 0xdeadbeefu64;
        let mut unit = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..500 {
            let n = 1 + (unit() * 7.0) as usize;
            let m = 1 + (unit() * 7.0) as usize;
            let gate = 0.2;
            let span = if case % 2 == 0 { 0.5 } else { 0.15 };
            let gen: Vec<Point2> = (0..n)
                .map(|_| Point2::new(unit() * span, unit() * span))
                .collect();
            let reference: Vec<Point2> = (0..m)
                .map(|_| Point2::new(unit() * span, unit() * span))
                .collect();
            let assignment = optimal_assignment(&gen, &reference, gate);
            let (best_count, best_cost) = brute_force(&gen, &reference, gate);
            assert_eq!(assignment.len(), best_count, "case {case}: match count");
            let ours = assignment.total_distance();
            assert!(
                (ours - best_cost).abs() <= 1e-9 * best_cost.max(1.0),
                "case {case}: cost {ours} vs brute force {best_cost}"
            );
            // One-to-one and gated.
            let mut gs: Vec<usize> = assignment.pairs.iter().map(|p| p.0).collect();
            let mut rs: Vec<usize> = assignment.pairs.iter().map(|p| p.1).collect();
            gs.dedup();
            rs.sort_unstable();
            rs.dedup();
            assert_eq!(gs.len(), assignment.len());
            assert_eq!(rs.len(), assignment.len());
            assert!(assignment.pairs.iter().all(|&(_, _, d)| d <= gate));
        }
    }

    #[test]
    fn enlarging_the_gate_never_reduces_matches() {
        let mut state = 0x12345u64;
        let mut unit = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        let gen: Vec<Point2> = (0..30).map(|_| Point2::new(unit(), unit())).collect();
        let reference: Vec<Point2> = (0..30).map(|_| Point2::new(unit(), unit())).collect();
        let mut last = 0;
        for gate in [0.05, 0.1, 0.2, 0.4, 0.8] {
            let n = optimal_assignment(&gen, &reference, gate).len();
            assert!(n >= last, "gate {gate} lost matches");
            last = n;
        }
    }

    #[test]
    fn partitioned_solve_equals_monolithic_on_clustered_input() {
        // Two clusters far beyond the gate; block decomposition must give
        // the same result as solving the union.
        let mut gen = pts(&[(0.0, 0.0), (0.1, 0.05), (0.15, 0.1)]);
        let mut reference = pts(&[(0.05, 0.0), (0.12, 0.08)]);
        gen.extend(pts(&[(10.0, 10.0), (10.1, 10.0)]));
        reference.extend(pts(&[(10.02, 10.0), (10.13, 10.02), (10.4, 10.0)]));
        let whole = optimal_assignment(&gen, &reference, 0.2);
        let (bc1, bd1) = brute_force(&gen[..3], &reference[..2], 0.2);
        let (bc2, bd2) = brute_force(&gen[3..], &reference[2..], 0.2);
        assert_eq!(whole.len(), bc1 + bc2);
        assert!((whole.total_distance() - (bd1 + bd2)).abs() < 1e-12);
    }
}
