//! Morphological thinning to a 1-pixel-wide skeleton.
//!
//! Iterative border peeling in four directional subcycles (north, south,
//! east, west) with sequential updates. A pixel is only removed when it is a
//! *simple point* for (8, 4) connectivity, so every deletion preserves the
//! component structure of both foreground and background, and endpoints
//! (single-neighbor pixels) are never eaten. A final pass collapses the rare
//! 2x2 block that survives peeling.

use super::{BinaryMask, NEIGHBORS_8};

/// Ring cell coordinates, clockwise from north (matches `NEIGHBORS_8`).
const RING: [(i64, i64); 8] = NEIGHBORS_8;

/// Whether ring cells i and j are 8-adjacent as pixels.
const fn ring_adjacent_8(i: usize, j: usize) -> bool {
    let (dx, dy) = (RING[i].0 - RING[j].0, RING[i].1 - RING[j].1);
    let (ax, ay) = (dx.abs(), dy.abs());
    ax <= 1 && ay <= 1 && (ax + ay) != 0
}

/// Whether ring cells i and j are 4-adjacent as pixels.
const fn ring_adjacent_4(i: usize, j: usize) -> bool {
    let (dx, dy) = (RING[i].0 - RING[j].0, RING[i].1 - RING[j].1);
    dx.abs() + dy.abs() == 1
}

/// Simple-point test for one 8-neighborhood bit pattern (bit i = ring cell i
/// is foreground): exactly one foreground component in the ring and exactly
/// one background component touching an edge neighbor.
const fn is_simple_code(code: u8) -> bool {
    // Tiny union-find over the 8 ring cells.
    let mut parent = [0usize; 8];
    let mut i = 0;
    while i < 8 {
        parent[i] = i;
        i += 1;
    }
    // Foreground components under 8-adjacency.
    let mut a = 0;
    while a < 8 {
        if code & (1 << a) != 0 {
            let mut b = a + 1;
            while b < 8 {
                if code & (1 << b) != 0 && ring_adjacent_8(a, b) {
                    // Union by root replacement.
                    let mut ra = a;
                    while parent[ra] != ra {
                        ra = parent[ra];
                    }
                    let mut rb = b;
                    while parent[rb] != rb {
                        rb = parent[rb];
                    }
                    if ra != rb {
                        parent[rb] = ra;
                    }
                }
                b += 1;
            }
        }
        a += 1;
    }
    let mut fg_components = 0;
    let mut i = 0;
    while i < 8 {
        if code & (1 << i) != 0 {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            if r == i {
                fg_components += 1;
            }
        }
        i += 1;
    }
    if fg_components != 1 {
        return false;
    }

    // Background components under 4-adjacency, counted only when they touch
    // one of the edge neighbors (ring indices 0, 2, 4, 6).
    let mut bparent = [0usize; 8];
    let mut i = 0;
    while i < 8 {
        bparent[i] = i;
        i += 1;
    }
    let mut a = 0;
    while a < 8 {
        if code & (1 << a) == 0 {
            let mut b = a + 1;
            while b < 8 {
                if code & (1 << b) == 0 && ring_adjacent_4(a, b) {
                    let mut ra = a;
                    while bparent[ra] != ra {
                        ra = bparent[ra];
                    }
                    let mut rb = b;
                    while bparent[rb] != rb {
                        rb = bparent[rb];
                    }
                    if ra != rb {
                        bparent[rb] = ra;
                    }
                }
                b += 1;
            }
        }
        a += 1;
    }
    // Mark roots of background components containing an edge neighbor.
    let mut bg_components = 0;
    let mut seen = [false; 8];
    let mut k = 0;
    while k < 4 {
        let edge = k * 2;
        if code & (1 << edge) == 0 {
            let mut r = edge;
            while bparent[r] != r {
                r = bparent[r];
            }
            if !seen[r] {
                seen[r] = true;
                bg_components += 1;
            }
        }
        k += 1;
    }
    bg_components == 1
}

const fn build_simple_lut() -> [bool; 256] {
    let mut lut = [false; 256];
    let mut code = 0usize;
    while code < 256 {
        lut[code] = is_simple_code(code as u8);
        code += 1;
    }
    lut
}

static SIMPLE_LUT: [bool; 256] = build_simple_lut();

/// Whether the foreground cells of the ring form a single 8-connected
/// component. Deleting such a pixel can merge background regions (erase a
/// hole) but can never split the foreground.
const fn fg_single_component(code: u8) -> bool {
    let mut parent = [0usize; 8];
    let mut i = 0;
    while i < 8 {
        parent[i] = i;
        i += 1;
    }
    let mut a = 0;
    while a < 8 {
        if code & (1 << a) != 0 {
            let mut b = a + 1;
            while b < 8 {
                if code & (1 << b) != 0 && ring_adjacent_8(a, b) {
                    let mut ra = a;
                    while parent[ra] != ra {
                        ra = parent[ra];
                    }
                    let mut rb = b;
                    while parent[rb] != rb {
                        rb = parent[rb];
                    }
                    if ra != rb {
                        parent[rb] = ra;
                    }
                }
                b += 1;
            }
        }
        a += 1;
    }
    let mut components = 0;
    let mut i = 0;
    while i < 8 {
        if code & (1 << i) != 0 {
            let mut r = i;
            while parent[r] != r {
                r = parent[r];
            }
            if r == i {
                components += 1;
            }
        }
        i += 1;
    }
    components == 1
}

const fn build_fg_single_lut() -> [bool; 256] {
    let mut lut = [false; 256];
    let mut code = 0usize;
    while code < 256 {
        lut[code] = fg_single_component(code as u8);
        code += 1;
    }
    lut
}

static FG_SINGLE_LUT: [bool; 256] = build_fg_single_lut();

#[inline]
fn neighbor_code(mask: &BinaryMask, x: usize, y: usize) -> u8 {
    let mut code = 0u8;
    for (i, &(dx, dy)) in RING.iter().enumerate() {
        if mask.get_checked(x as i64 + dx, y as i64 + dy) {
            code |= 1 << i;
        }
    }
    code
}

/// Thins set regions to 1-pixel-wide skeletons. The output is a subset of the
/// input, keeps each component's 8-connectivity topology, and never empties a
/// non-empty component.
pub fn skeletonize(mask: &BinaryMask) -> BinaryMask {
    skeletonize_limited(mask, usize::MAX)
}

/// Test hook: run at most `max_passes` thinning passes (no block collapse).
#[doc(hidden)]
pub fn skeletonize_passes(mask: &BinaryMask, max_passes: usize) -> BinaryMask {
    skeletonize_limited(mask, max_passes)
}

fn skeletonize_limited(mask: &BinaryMask, max_passes: usize) -> BinaryMask {
    let mut img = mask.clone();
    let (w, h) = (img.width(), img.height());
    // Two subcycles per pass with the usual directional border conditions;
    // candidates are selected against a frozen view so each subcycle removes
    // one pixel layer isotropically, then deleted one by one under a live
    // simple-point guard so no deletion can break a component, punch a hole,
    // or empty a region (the guard is what the plain parallel rule lacks:
    // that rule erases an isolated 2x2 square outright).
    let mut candidates = Vec::new();
    let mut passes = 0;
    loop {
        if passes >= max_passes {
            return img;
        }
        passes += 1;
        let mut changed = false;
        for phase in 0..2 {
            candidates.clear();
            for y in 0..h {
                for x in 0..w {
                    if !img.get(x, y) {
                        continue;
                    }
                    let code = neighbor_code(&img, x, y);
                    let b = code.count_ones();
                    if !(2..=6).contains(&b) || transitions(code) != 1 {
                        continue;
                    }
                    let north = code & 1 != 0;
                    let east = code & (1 << 2) != 0;
                    let south = code & (1 << 4) != 0;
                    let west = code & (1 << 6) != 0;
                    let keep = if phase == 0 {
                        (north && east && south) || (east && south && west)
                    } else {
                        (north && east && west) || (north && south && west)
                    };
                    if !keep {
                        candidates.push((x, y));
                    }
                }
            }
            // Deletion order follows the phase's erosion direction (phase 0
            // peels south/east borders whose remaining support lies to the
            // north/west, and vice versa). Endpoint protection (B >= 2) is
            // part of candidate selection against the frozen view; the live
            // guard checks simplicity alone, so a candidate orphaned by an
            // earlier deletion of the same wave still erodes instead of
            // hardening into a spur.
            if phase == 0 {
                candidates.reverse();
            }
            for &(x, y) in &candidates {
                let code = neighbor_code(&img, x, y);
                if SIMPLE_LUT[code as usize] {
                    img.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    minimalize(&mut img);
    // Collapsing a block can strand redundant pixels and vice versa.
    while collapse_square_blocks(&mut img) {
        minimalize(&mut img);
    }
    // Two strands crossing between pixel centers fuse into a 2x2 block that
    // no deletion can thin without cutting an arm. Relocate such crossings
    // onto a neighboring mask pixel instead.
    while relocate_fused_crossings(&mut img, mask) {
        minimalize(&mut img);
        while collapse_square_blocks(&mut img) {
            minimalize(&mut img);
        }
    }
    img
}

/// Resolves 2x2 blocks that survived [`collapse_square_blocks`] by deleting
/// one block pixel and re-routing the cut strand through a nearby mask pixel
/// that is not on the skeleton yet. A candidate move is committed only when
/// the global component count is unchanged and no 2x2 block remains around
/// the edit, so the skeleton stays a connectivity-true subset of the mask.
fn relocate_fused_crossings(img: &mut BinaryMask, mask: &BinaryMask) -> bool {
    let (w, h) = (img.width(), img.height());
    if w < 2 || h < 2 {
        return false;
    }
    let mut blocks = Vec::new();
    for y in 0..h - 1 {
        for x in 0..w - 1 {
            if img.get(x, y) && img.get(x + 1, y) && img.get(x, y + 1) && img.get(x + 1, y + 1) {
                blocks.push((x, y));
            }
        }
    }
    if blocks.is_empty() {
        return false;
    }
    let baseline =
        crate::raster::connected_components(img, crate::raster::Connectivity::Eight).len();
    let mut changed = false;
    for (bx, by) in blocks {
        let block = [(bx, by), (bx + 1, by), (bx, by + 1), (bx + 1, by + 1)];
        if !block.iter().all(|&(x, y)| img.get(x, y)) {
            continue; // already resolved by an earlier move
        }
        'search: for &victim in &block {
            for dy in -2i64..=2 {
                for dx in -2i64..=2 {
                    let (hx, hy) = (bx as i64 + dx, by as i64 + dy);
                    if hx < 0 || hy < 0 || hx as usize >= w || hy as usize >= h {
                        continue;
                    }
                    let helper = (hx as usize, hy as usize);
                    if img.get(helper.0, helper.1) || !mask.get(helper.0, helper.1) {
                        continue;
                    }
                    img.set(victim.0, victim.1, false);
                    img.set(helper.0, helper.1, true);
                    let thin_around = no_block_near(img, victim) && no_block_near(img, helper);
                    let ok = thin_around
                        && crate::raster::connected_components(
                            img,
                            crate::raster::Connectivity::Eight,
                        )
                        .len()
                            == baseline;
                    if ok {
                        changed = true;
                        break 'search;
                    }
                    img.set(victim.0, victim.1, true);
                    img.set(helper.0, helper.1, false);
                }
            }
        }
    }
    changed
}

/// No fully-set 2x2 block among those overlapping pixel `p`.
fn no_block_near(img: &BinaryMask, p: (usize, usize)) -> bool {
    let (w, h) = (img.width(), img.height());
    for dy in -1i64..=0 {
        for dx in -1i64..=0 {
            let (x, y) = (p.0 as i64 + dx, p.1 as i64 + dy);
            if x < 0 || y < 0 || x as usize + 1 >= w || y as usize + 1 >= h {
                continue;
            }
            let (x, y) = (x as usize, y as usize);
            if img.get(x, y) && img.get(x + 1, y) && img.get(x, y + 1) && img.get(x + 1, y + 1) {
                return false;
            }
        }
    }
    true
}

/// Reduces the skeleton to a minimal set: any remaining simple pixel with at
/// least two neighbors is redundant and goes. This dissolves the staircase
/// corners and 2-px-wide diagonal bands the subcycle conditions cannot reach
/// (their ring transition count is 2). Real junction pixels are not simple
/// and endpoints have a single neighbor, so paths and topology survive.
fn minimalize(img: &mut BinaryMask) {
    let (w, h) = (img.width(), img.height());
    loop {
        let mut changed = false;
        for y in 0..h {
            for x in 0..w {
                if !img.get(x, y) {
                    continue;
                }
                let code = neighbor_code(img, x, y);
                if code.count_ones() >= 2 && SIMPLE_LUT[code as usize] {
                    img.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

/// Number of background-to-foreground transitions around the ring, clockwise
/// from north.
fn transitions(code: u8) -> u32 {
    let mut count = 0;
    for i in 0..8 {
        let cur = code & (1 << i) != 0;
        let next = code & (1 << ((i + 1) % 8)) != 0;
        if !cur && next {
            count += 1;
        }
    }
    count
}

/// Removes remaining 2x2 all-set blocks without ever splitting a component.
/// A simple member goes first; failing that, a member whose ring foreground
/// is a single run (its deletion can only merge a background hole away). A
/// block where every pixel carries two separate strands is left alone:
/// deleting anything there would cut the foreground.
fn collapse_square_blocks(img: &mut BinaryMask) -> bool {
    let (w, h) = (img.width(), img.height());
    if w < 2 || h < 2 {
        return false;
    }
    let mut any = false;
    loop {
        let mut changed = false;
        for y in 0..h - 1 {
            for x in 0..w - 1 {
                if !(img.get(x, y)
                    && img.get(x + 1, y)
                    && img.get(x, y + 1)
                    && img.get(x + 1, y + 1))
                {
                    continue;
                }
                let block = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)];
                let victim = block
                    .iter()
                    .find(|&&(bx, by)| SIMPLE_LUT[neighbor_code(img, bx, by) as usize])
                    .or_else(|| {
                        block
                            .iter()
                            .find(|&&(bx, by)| FG_SINGLE_LUT[neighbor_code(img, bx, by) as usize])
                    })
                    .copied();
                if let Some((vx, vy)) = victim {
                    img.set(vx, vy, false);
                    changed = true;
                    any = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    any
}

/// True when no 2x2 neighborhood is fully set.
pub fn is_thin(mask: &BinaryMask) -> bool {
    let (w, h) = (mask.width(), mask.height());
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            if mask.get(x, y) && mask.get(x + 1, y) && mask.get(x, y + 1) && mask.get(x + 1, y + 1)
            {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{connected_components, Connectivity};
    use proptest::prelude::*;

    #[test]
    fn one_pixel_line_is_unchanged() {
        let mut mask = BinaryMask::empty(20, 5);
        for x in 2..18 {
            mask.set(x, 2, true);
        }
        assert_eq!(skeletonize(&mask), mask);
    }

    /// Distance-transform ridge of a mask: for each column, the rows at
    /// maximal 4-distance from background. Independent of the thinning code.
    fn column_ridge_rows(mask: &BinaryMask) -> Vec<Vec<usize>> {
        let (w, h) = (mask.width(), mask.height());
        let mut dist = vec![vec![u32::MAX; w]; h];
        let mut queue = std::collections::VecDeque::new();
        for y in 0..h {
            for x in 0..w {
                if !mask.get(x, y) {
                    dist[y][x] = 0;
                    queue.push_back((x, y));
                }
            }
        }
        // Border counts as background too.
        for y in 0..h {
            for x in 0..w {
                if mask.get(x, y) && (x == 0 || y == 0 || x == w - 1 || y == h - 1) {
                    dist[y][x] = 1;
                    queue.push_back((x, y));
                }
            }
        }
        while let Some((x, y)) = queue.pop_front() {
            for (dx, dy) in [(0i64, -1i64), (1, 0), (0, 1), (-1, 0)] {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                if nx < 0 || ny < 0 || nx as usize >= w || ny as usize >= h {
                    continue;
                }
                let (nx, ny) = (nx as usize, ny as usize);
                if dist[ny][nx] == u32::MAX {
                    dist[ny][nx] = dist[y][x] + 1;
                    queue.push_back((nx, ny));
                }
            }
        }
        (0..w)
            .map(|x| {
                let best = (0..h).map(|y| dist[y][x]).filter(|&d| d != u32::MAX).max();
                match best {
                    Some(m) if m > 0 => (0..h)
                        .filter(|&y| mask.get(x, y) && dist[y][x] == m)
                        .collect(),
                    _ => Vec::new(),
                }
            })
            .collect()
    }

    #[test]
    fn wide_bar_thins_to_its_middle_row() {
        let mut mask = BinaryMask::empty(60, 11);
        for y in 3..8 {
            for x in 5..55 {
                mask.set(x, y, true);
            }
        }
        let skel = skeletonize(&mask);
        assert!(skel.is_subset_of(&mask));
        assert_eq!(connected_components(&skel, Connectivity::Eight).len(), 1);
        assert!(is_thin(&skel));
        let ridge = column_ridge_rows(&mask);
        for (x, y) in skel.iter_set() {
            let rows = &ridge[x];
            assert!(
                rows.iter().any(|&ry| (ry as i64 - y as i64).abs() <= 1),
                "skeleton pixel ({x}, {y}) not within 1 px of the ridge rows {rows:?}"
            );
        }
    }

    #[test]
    fn disk_collapses_to_small_center_cluster() {
        let mut mask = BinaryMask::empty(31, 31);
        for y in 0..31 {
            for x in 0..31 {
                let (dx, dy) = (x as f64 - 15.0, y as f64 - 15.0);
                if (dx * dx + dy * dy).sqrt() <= 10.5 {
                    mask.set(x, y, true);
                }
            }
        }
        let skel = skeletonize(&mask);
        assert!(skel.is_subset_of(&mask));
        assert_eq!(connected_components(&skel, Connectivity::Eight).len(), 1);
        let (mut min_x, mut min_y, mut max_x, mut max_y) = (usize::MAX, usize::MAX, 0, 0);
        for (x, y) in skel.iter_set() {
            min_x = min_x.min(x);
            min_y = min_y.min(y);
            max_x = max_x.max(x);
            max_y = max_y.max(y);
            assert!((x as i64 - 15).abs() <= 2 && (y as i64 - 15).abs() <= 2);
        }
        assert!(max_x - min_x <= 4 && max_y - min_y <= 4);
    }

    #[test]
    fn isolated_specks_survive() {
        let mut mask = BinaryMask::empty(10, 10);
        mask.set(1, 1, true);
        mask.set(5, 5, true);
        mask.set(6, 5, true);
        let skel = skeletonize(&mask);
        assert_eq!(connected_components(&skel, Connectivity::Eight).len(), 2);
        assert!(skel.get(1, 1));
    }

    #[test]
    fn two_by_two_block_shrinks_without_vanishing() {
        let mut mask = BinaryMask::empty(6, 6);
        for (x, y) in [(2, 2), (3, 2), (2, 3), (3, 3)] {
            mask.set(x, y, true);
        }
        let skel = skeletonize(&mask);
        assert_eq!(connected_components(&skel, Connectivity::Eight).len(), 1);
        assert!(is_thin(&skel));
        assert!(skel.count_ones() >= 1);
    }

    fn random_blob_mask(w: usize, h: usize, rng_seed: u64) -> BinaryMask {
        // Union of random rectangles and disks; deterministic LCG so the
        // proptest shrinker stays meaningful.
        let mut state = rng_seed
            .wrapping_mul(2862933555777941757)
            .wrapping_add(3037000493);
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut mask = BinaryMask::empty(w, h);
        let blobs = 2 + (next() % 4) as usize;
        for _ in 0..blobs {
            let cx = (next() % w as u64) as i64;
            let cy = (next() % h as u64) as i64;
            if next() % 2 == 0 {
                let r = 2 + (next() % 8) as i64;
                for y in 0..h as i64 {
                    for x in 0..w as i64 {
                        if (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r {
                            mask.set(x as usize, y as usize, true);
                        }
                    }
                }
            } else {
                let rw = 2 + (next() % 14) as i64;
                let rh = 2 + (next() % 6) as i64;
                for y in (cy - rh).max(0)..(cy + rh).min(h as i64) {
                    for x in (cx - rw).max(0)..(cx + rw).min(w as i64) {
                        mask.set(x as usize, y as usize, true);
                    }
                }
            }
        }
        mask
    }

    proptest! {
        #[test]
        fn skeleton_properties_on_random_blobs(seed in 0u64..5000) {
            let mask = random_blob_mask(48, 48, seed);
            let skel = skeletonize(&mask);
            prop_assert!(skel.is_subset_of(&mask));
            prop_assert!(is_thin(&skel));
            let before = connected_components(&mask, Connectivity::Eight).len();
            let after = connected_components(&skel, Connectivity::Eight).len();
            prop_assert_eq!(before, after);
        }
    }
}
