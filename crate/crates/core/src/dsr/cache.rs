use std::collections::{BTreeMap, HashSet};

use crate::engine::SimTime;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub struct CachedRoute {
    pub route: Vec<NodeId>,
    pub learned: SimTime,
}

/// Per-destination source routes learned from route replies.
#[derive(Debug, Clone)]
pub struct RouteCache {
    routes: BTreeMap<NodeId, Vec<CachedRoute>>,
    per_dest: usize,
}

impl Default for RouteCache {
    fn default() -> Self {
        RouteCache::new(8)
    }
}

pub fn has_cycle(route: &[NodeId]) -> bool {
    let mut seen = HashSet::with_capacity(route.len());
    !route.iter().all(|n| seen.insert(*n))
}

fn contains_link(route: &[NodeId], from: NodeId, to: NodeId) -> bool {
    route.windows(2).any(|w| w[0] == from && w[1] == to)
}

impl RouteCache {
    pub fn new(per_dest: usize) -> Self {
        RouteCache {
            routes: BTreeMap::new(),
            per_dest: per_dest.max(1),
        }
    }

    /// Stores `route` (source first, destination last). Cyclic or trivial
    /// routes are refused. Re-learning a known route refreshes its time.
    pub fn insert(&mut self, route: Vec<NodeId>, now: SimTime) -> bool {
        if route.len() < 2 || has_cycle(&route) {
            return false;
        }
        let dst = *route.last().expect("len >= 2");
        let entries = self.routes.entry(dst).or_default();
        if let Some(existing) = entries.iter_mut().find(|c| c.route == route) {
            existing.learned = now;
            return true;
        }
        if entries.len() >= self.per_dest {
            let oldest = entries
                .iter()
                .enumerate()
                .min_by_key(|(_, c)| c.learned)
                .map(|(i, _)| i)
                .expect("non-empty");
            entries.remove(oldest);
        }
        entries.push(CachedRoute {
            route,
            learned: now,
        });
        true
    }

    /// Shortest route to `dst` that `accept` approves; ties go to the most
    /// recently learned.
    pub fn select<F>(&self, dst: NodeId, accept: F) -> Option<&[NodeId]>
    where
        F: Fn(&[NodeId]) -> bool,
    {
        self.routes
            .get(&dst)?
            .iter()
            .filter(|c| accept(&c.route))
            .min_by(|a, b| {
                a.route
                    .len()
                    .cmp(&b.route.len())
                    .then_with(|| b.learned.cmp(&a.learned))
            })
            .map(|c| c.route.as_slice())
    }

    /// Removes every route using the directed link `from -> to`.
    pub fn purge_link(&mut self, from: NodeId, to: NodeId) -> usize {
        let mut removed = 0;
        for entries in self.routes.values_mut() {
            let before = entries.len();
            entries.retain(|c| !contains_link(&c.route, from, to));
            removed += before - entries.len();
        }
        self.routes.retain(|_, v| !v.is_empty());
        removed
    }

    pub fn routes_to(&self, dst: NodeId) -> &[CachedRoute] {
        self.routes.get(&dst).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn len(&self) -> usize {
        self.routes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.routes.is_empty()
    }
}
