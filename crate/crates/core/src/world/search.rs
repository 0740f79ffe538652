//! Breadth-first search over action sequences with full ground truth.

use std::collections::{BTreeSet, HashSet};

use super::actions::{apply_action, Action};
use super::types::*;
use super::visibility::observe;

#[derive(Clone, PartialEq, Eq, Hash)]
struct StateKey {
    table: Vec<(ObjectId, u64, u64)>,
    covers: Vec<(ObjectId, ObjectId)>,
    azimuth: u16,
    elevation: Elevation,
    seen: Vec<ObjectId>,
}

fn key(scene: &SceneSpec, seen: &BTreeSet<ObjectId>) -> StateKey {
    StateKey {
        table: scene
            .objects
            .iter()
            .map(|o| (o.id, o.position.x.to_bits(), o.position.y.to_bits()))
            .collect(),
        covers: scene.cover_relations.iter().copied().collect(),
        azimuth: scene.camera.azimuth,
        elevation: scene.camera.elevation,
        seen: seen.iter().copied().collect(),
    }
}

/// Fewest actions after which `goal(seen)` holds, where `seen` is every
/// object id observed so far (initial view included). `None` when no
/// sequence of at most `max_depth` actions reaches the goal.
pub fn min_steps_until<G, A>(scene: &SceneSpec, goal: G, actions: A, max_depth: u32) -> Option<u32>
where
    G: Fn(&BTreeSet<ObjectId>) -> bool,
    A: Fn(&SceneSpec) -> Vec<Action>,
{
    min_steps_from(scene, observe(scene, 0).ids(), goal, actions, max_depth)
}

/// As [`min_steps_until`], starting from an existing set of seen ids.
pub fn min_steps_from<G, A>(
    scene: &SceneSpec,
    seen: BTreeSet<ObjectId>,
    goal: G,
    actions: A,
    max_depth: u32,
) -> Option<u32>
where
    G: Fn(&BTreeSet<ObjectId>) -> bool,
    A: Fn(&SceneSpec) -> Vec<Action>,
{
    let mut seen0 = seen;
    seen0.extend(observe(scene, 0).ids());
    if goal(&seen0) {
        return Some(0);
    }
    let mut visited = HashSet::new();
    visited.insert(key(scene, &seen0));
    let mut frontier = vec![(scene.clone(), seen0)];
    for depth in 1..=max_depth {
        let mut next = Vec::new();
        for (s, seen) in &frontier {
            for a in actions(s) {
                let Ok((n, out)) = apply_action(s, &a) else {
                    continue;
                };
                if out.blocked {
                    continue;
                }
                let mut seen2 = seen.clone();
                seen2.extend(out.revealed.iter().copied());
                seen2.extend(observe(&n, 0).ids());
                if goal(&seen2) {
                    return Some(depth);
                }
                if visited.insert(key(&n, &seen2)) {
                    next.push((n, seen2));
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
    None
}

/// Fewest actions to have seen every object on the table.
pub fn min_steps_full_reveal<A>(scene: &SceneSpec, actions: A, max_depth: u32) -> Option<u32>
where
    A: Fn(&SceneSpec) -> Vec<Action>,
{
    let all: BTreeSet<ObjectId> = scene.objects.iter().map(|o| o.id).collect();
    min_steps_until(scene, |seen| all.is_subset(seen), actions, max_depth)
}

/// Fewest picks and camera moves after which every id in `targets` has been
/// seen, starting with `seen` already observed.
///
/// Equivalent to [`min_steps_from`] over [`reduced_actions`](super::reduced_actions)
/// with a subset goal, but exploits that picks and camera moves never
/// displace anything: occlusion is a fixed relation per camera pose, and only
/// objects that can hide a target (or hide such an object) are worth picking.
pub fn min_steps_to_see(
    scene: &SceneSpec,
    seen: &BTreeSet<ObjectId>,
    targets: &BTreeSet<ObjectId>,
    max_depth: u32,
) -> Option<u32> {
    let n = scene.objects.len();
    if n > 64 {
        return min_steps_from(
            scene,
            seen.clone(),
            |s| targets.is_subset(s),
            super::actions::reduced_actions,
            max_depth,
        );
    }
    let index = |id: ObjectId| scene.objects.iter().position(|o| o.id == id);
    let mut target_mask = 0u64;
    let mut seen_mask = 0u64;
    for &t in targets {
        match index(t) {
            Some(i) => {
                target_mask |= 1 << i;
                if seen.contains(&t) {
                    seen_mask |= 1 << i;
                }
            }
            None if seen.contains(&t) => {}
            None => return None,
        }
    }
    let coverer: Vec<Option<usize>> = scene
        .objects
        .iter()
        .map(|o| scene.coverer_of(o.id).and_then(index))
        .collect();
    let poses: Vec<CameraState> = (0..16)
        .map(|p| {
            let el = if p < 8 {
                Elevation::Low
            } else {
                Elevation::High
            };
            CameraState::new(45 * (p % 8) as u16, el)
        })
        .collect();
    let pose_of = |c: &CameraState| {
        usize::from(c.azimuth / 45) + if c.elevation == Elevation::High { 8 } else { 0 }
    };
    let mut blockers = vec![vec![0u64; n]; 16];
    for (p, cam) in poses.iter().enumerate() {
        for (y, oy) in scene.objects.iter().enumerate() {
            for (x, ox) in scene.objects.iter().enumerate() {
                if x != y && super::visibility::occludes(cam, ox, oy) {
                    blockers[p][y] |= 1 << x;
                }
            }
        }
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let visible = |removed: u64, pose: usize| -> u64 {
        let present = all & !removed;
        let mut covered = 0u64;
        for (i, c) in coverer.iter().enumerate() {
            if c.is_some_and(|c| present >> c & 1 == 1) {
                covered |= 1 << i;
            }
        }
        let exposed = present & !covered;
        let mut v = 0u64;
        for y in 0..n {
            if exposed >> y & 1 == 1 && blockers[pose][y] & exposed == 0 {
                v |= 1 << y;
            }
        }
        v
    };

    // objects worth picking: hiders of unseen targets, closed under hiding
    let mut useful = 0u64;
    let mut queue: Vec<usize> = (0..n)
        .filter(|&i| (target_mask & !seen_mask) >> i & 1 == 1)
        .collect();
    let mut queued = target_mask & !seen_mask;
    while let Some(y) = queue.pop() {
        let mut hiders = coverer[y].map_or(0, |c| 1u64 << c);
        for b in &blockers {
            hiders |= b[y];
        }
        useful |= hiders;
        for x in 0..n {
            if hiders >> x & 1 == 1 && queued >> x & 1 == 0 {
                queued |= 1 << x;
                queue.push(x);
            }
        }
    }

    let start_pose = pose_of(&scene.camera);
    let seen0 = seen_mask | (visible(0, start_pose) & target_mask);
    if seen0 == target_mask {
        return Some(0);
    }
    let mut visited = HashSet::new();
    visited.insert((0u64, start_pose, seen0));
    let mut frontier = vec![(0u64, start_pose, seen0)];
    for depth in 1..=max_depth {
        let mut next = Vec::new();
        for &(removed, pose, s) in &frontier {
            let vis = visible(removed, pose);
            let (az, hi) = (pose % 8, pose >= 8);
            let mut moves: Vec<(u64, usize)> = vec![
                (removed, (az + 7) % 8 + if hi { 8 } else { 0 }),
                (removed, (az + 1) % 8 + if hi { 8 } else { 0 }),
                (removed, az + if hi { 0 } else { 8 }),
            ];
            for x in 0..n {
                if (vis & useful) >> x & 1 == 1 {
                    moves.push((removed | 1 << x, pose));
                }
            }
            for (r, p) in moves {
                let s2 = s | (visible(r, p) & target_mask);
                if s2 == target_mask {
                    return Some(depth);
                }
                if visited.insert((r, p, s2)) {
                    next.push((r, p, s2));
                }
            }
        }
        if next.is_empty() {
            return None;
        }
        frontier = next;
    }
    None
}
