mod common;

use common::{mask_strategy, neighbors4, neighbors8};
use proptest::prelude::*;
use uht_core::raster::*;

/// Union-find over set pixels.
fn union_find_count(mask: &BinaryMask, eight: bool) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut parent: Vec<usize> = (0..w * h).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for y in 0..h as i32 {
        for x in 0..w as i32 {
            if !mask.get(x, y) {
                continue;
            }
            let forward: &[(i32, i32)] = if eight { &[(1, 0), (-1, 1), (0, 1), (1, 1)] } else { &[(1, 0), (0, 1)] };
            for &(dx, dy) in forward {
                if mask.get(x + dx, y + dy) {
                    let a = find(&mut parent, y as usize * w + x as usize);
                    let b = find(&mut parent, (y + dy) as usize * w + (x + dx) as usize);
                    parent[a] = b;
                }
            }
        }
    }
    (0..w * h)
        .filter(|&i| mask.bits()[i] && find(&mut parent, i) == i)
        .count()
}

/// Per-pixel neighborhood-max dilation with the anchored square kernel.
fn dilate_oracle(mask: &BinaryMask, k: usize) -> BinaryMask {
    let (w, h) = (mask.width() as i32, mask.height() as i32);
    let lo = -((k / 2) as i32);
    let hi = k as i32 - 1 - (k / 2) as i32;
    let mut out = BinaryMask::new(w as usize, h as usize);
    for y in 0..h {
        for x in 0..w {
            let hit = (lo..=hi).any(|dy| (lo..=hi).any(|dx| mask.get(x - dx, y - dy)));
            out.set(x as usize, y as usize, hit);
        }
    }
    out
}

fn is_subset(a: &BinaryMask, b: &BinaryMask) -> bool {
    a.bits().iter().zip(b.bits()).all(|(&x, &y)| !x || y)
}

/// Largest 8-connected component with holes filled.
fn solid_blob(mask: &BinaryMask) -> Option<BinaryMask> {
    connected_components(mask, Connectivity::Eight)
        .into_iter()
        .max_by_key(|c| c.count())
        .map(|c| fill_holes(&c))
}

fn on_boundary(mask: &BinaryMask, p: Pixel) -> bool {
    mask.get(p.x, p.y) && neighbors4(p.x, p.y).iter().any(|&(x, y)| !mask.get(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn components_partition_the_mask(mask in mask_strategy(40, 30)) {
        for (conn, eight) in [(Connectivity::Four, false), (Connectivity::Eight, true)] {
            let comps = connected_components(&mask, conn);
            prop_assert_eq!(comps.len(), union_find_count(&mask, eight));
            let mut cover = vec![0u8; 40 * 30];
            for c in &comps {
                prop_assert_eq!(union_find_count(c, eight), 1);
                for (i, &b) in c.bits().iter().enumerate() {
                    cover[i] += b as u8;
                }
            }
            for (i, &b) in mask.bits().iter().enumerate() {
                prop_assert_eq!(cover[i], b as u8);
            }
        }
    }

    #[test]
    fn dilation_matches_neighborhood_oracle(mask in mask_strategy(64, 64), k in prop::sample::select(vec![1usize, 2, 3, 4, 5, 6, 7, 8, 9, 35])) {
        let d = dilate(&mask, k);
        prop_assert_eq!(&d, &dilate_oracle(&mask, k));
        prop_assert!(is_subset(&mask, &d));
        prop_assert!(is_subset(&d, &dilate(&mask, k + 1)));
    }

    #[test]
    fn dilation_is_monotone_in_the_mask(mask in mask_strategy(32, 32), extra in mask_strategy(32, 32), k in 1usize..12) {
        let union = BinaryMask::from_bits(
            32,
            32,
            mask.bits().iter().zip(extra.bits()).map(|(&a, &b)| a || b).collect(),
        ).unwrap();
        prop_assert!(is_subset(&dilate(&mask, k), &dilate(&union, k)));
        prop_assert_eq!(&dilate(&mask, 1), &mask);
    }

    #[test]
    fn contour_is_the_closed_outer_boundary(mask in mask_strategy(64, 64)) {
        let Some(blob) = solid_blob(&mask) else { return Ok(()); };
        let contour = trace_contour(&blob).unwrap();
        let pts = &contour.points;
        prop_assert!(!pts.is_empty());
        prop_assert_eq!(pts[0], blob.pixels().next().unwrap());
        for (i, p) in pts.iter().enumerate() {
            let q = pts[(i + 1) % pts.len()];
            prop_assert!(on_boundary(&blob, *p), "{:?} is not a boundary pixel", p);
            prop_assert!((p.x - q.x).abs() <= 1 && (p.y - q.y).abs() <= 1);
        }
        let visited: std::collections::HashSet<Pixel> = pts.iter().copied().collect();
        for p in blob.pixels() {
            if on_boundary(&blob, p) {
                prop_assert!(visited.contains(&p), "boundary pixel {:?} missed", p);
            }
        }
        prop_assert_eq!(trace_contour(&blob).unwrap(), contour);
    }

    #[test]
    fn filled_holes_leave_only_border_reachable_background(mask in mask_strategy(30, 30)) {
        let filled = fill_holes(&mask);
        prop_assert!(is_subset(&mask, &filled));
        // every remaining background pixel reaches the border through background
        let (w, h) = (30i32, 30i32);
        let mut seen = vec![false; 900];
        let mut stack: Vec<(i32, i32)> = (0..w)
            .flat_map(|x| [(x, 0), (x, h - 1)])
            .chain((0..h).flat_map(|y| [(0, y), (w - 1, y)]))
            .filter(|&(x, y)| !mask.get(x, y))
            .collect();
        while let Some((x, y)) = stack.pop() {
            let i = (y * w + x) as usize;
            if seen[i] {
                continue;
            }
            seen[i] = true;
            for (nx, ny) in neighbors4(x, y) {
                if nx >= 0 && ny >= 0 && nx < w && ny < h && !mask.get(nx, ny) {
                    stack.push((nx, ny));
                }
            }
        }
        for (&bit, &outside) in filled.bits().iter().zip(&seen) {
            prop_assert_eq!(bit, !outside);
        }
    }

    #[test]
    fn centroid_lies_on_the_component(mask in mask_strategy(24, 24)) {
        for c in connected_components(&mask, Connectivity::Eight) {
            let p = centroid(&c).unwrap();
            prop_assert!(c.get(p.x, p.y));
        }
    }
}

#[test]
fn diagonal_neighbors_join_eight_components_only() {
    let mask = BinaryMask::from_pixels(4, 4, [Pixel::new(0, 0), Pixel::new(1, 1)]);
    assert_eq!(connected_components(&mask, Connectivity::Four).len(), 2);
    assert_eq!(connected_components(&mask, Connectivity::Eight).len(), 1);
    assert!(neighbors8(0, 0).contains(&(1, 1)));
}
