//! Brute-force reachability oracle: BFS over the union of seed-query search
//! edges and hyperlink edges, independent of the audit pipeline. Coverage
//! acceptance checks equate the explorer's result with this set.

use std::collections::{BTreeSet, VecDeque};

use crate::knowledge::{GroundTruthProfile, SeedKnowledge};
use crate::retrieval::RobotsRules;

use super::world::SyntheticWorld;

/// The queries the oracle treats as derivable from the seed alone.
pub fn seed_queries(seed: &SeedKnowledge) -> Vec<String> {
    let mut queries = vec![format!("{} {}", seed.full_name, seed.affiliation)];
    for hint in &seed.extra_hints {
        queries.push(format!("{} {}", seed.full_name, hint));
    }
    queries
}

/// Ground-truth facts on documents reachable within `hops` link hops of the
/// seed-searchable documents. Robots-disallowed documents are unreachable
/// and are never traversed; decoy and noise documents are dead ends.
pub fn reachable_facts(
    world: &SyntheticWorld,
    seed: &SeedKnowledge,
    hops: u32,
    user_agent: &str,
) -> GroundTruthProfile {
    let mut visited: BTreeSet<String> = BTreeSet::new();
    let mut frontier: VecDeque<(String, u32)> = VecDeque::new();

    for query in seed_queries(seed) {
        for entry in &world.index {
            if SyntheticWorld::index_matches(&entry.pattern, &query) {
                for url in &entry.urls {
                    if accepts(world, url, user_agent) && visited.insert(url.clone()) {
                        frontier.push_back((url.clone(), 0));
                    }
                }
            }
        }
    }

    let mut truth = GroundTruthProfile::default();
    while let Some((url, depth)) = frontier.pop_front() {
        let Some(doc) = world.documents.get(&url) else {
            continue;
        };
        for fact in &doc.facts {
            if !fact.fake {
                if let Some(t) = world.ground_truth.facts.get(&fact.key) {
                    truth.facts.insert(fact.key.clone(), t.clone());
                }
            }
        }
        for asset_url in &doc.asset_urls {
            if let Some(asset) = world.assets.get(asset_url) {
                for fact in &asset.facts {
                    if !fact.fake {
                        if let Some(t) = world.ground_truth.facts.get(&fact.key) {
                            truth.facts.insert(fact.key.clone(), t.clone());
                        }
                    }
                }
            }
        }
        if depth == hops {
            continue;
        }
        for link in &doc.links {
            if world.documents.contains_key(link)
                && accepts(world, link, user_agent)
                && visited.insert(link.clone())
            {
                frontier.push_back((link.clone(), depth + 1));
            }
        }
    }
    truth
}

/// Ratio of reachable facts over the full ground truth.
pub fn reachable_ratio(
    world: &SyntheticWorld,
    seed: &SeedKnowledge,
    hops: u32,
    user_agent: &str,
) -> f64 {
    if world.ground_truth.is_empty() {
        return 1.0;
    }
    reachable_facts(world, seed, hops, user_agent).len() as f64 / world.ground_truth.len() as f64
}

/// A document is traversable when it is not a decoy or noise page and its
/// host's robots rules permit fetching it.
fn accepts(world: &SyntheticWorld, url: &str, user_agent: &str) -> bool {
    let Some(doc) = world.documents.get(url) else {
        return false;
    };
    if doc.decoy || doc.noise {
        return false;
    }
    !robots_blocked(world, url, user_agent)
}

/// Whether the world's robots rules disallow this URL.
pub fn robots_blocked(world: &SyntheticWorld, url: &str, user_agent: &str) -> bool {
    let Ok(parsed) = url::Url::parse(url) else {
        return false;
    };
    let host = parsed.host_str().unwrap_or("").to_lowercase();
    match world.robots.get(&host) {
        Some(body) => !RobotsRules::parse(body).allows(user_agent, parsed.path()),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::super::world::build_world_from_str;
    use super::*;

    const CHAIN: &str = r#"
[world]
name = "chain"

[seed]
full_name = "Alex Chen"
affiliation = "Univ Z"

[[host]]
name = "hidden.example"
robots = "User-agent: *\nDisallow: /\n"

[[document]]
url = "https://a.example/root"
title = "Root"
links = ["https://b.example/mid"]
  [[document.fact]]
  key = "f0"
  value = "root fact"

[[document]]
url = "https://b.example/mid"
title = "Mid"
links = ["https://c.example/leaf", "https://hidden.example/secret"]
  [[document.fact]]
  key = "f1"
  value = "mid fact"

[[document]]
url = "https://c.example/leaf"
title = "Leaf"
  [[document.fact]]
  key = "f2"
  value = "leaf fact"

[[document]]
url = "https://hidden.example/secret"
title = "Hidden"
  [[document.fact]]
  key = "f3"
  value = "hidden fact"

[[index]]
pattern = "alex chen univ z"
urls = ["https://a.example/root"]
"#;

    #[test]
    fn depth_zero_sees_only_seed_searchable_docs() {
        let world = build_world_from_str(CHAIN).unwrap();
        let truth = reachable_facts(&world, &world.seed, 0, "test-agent");
        assert_eq!(truth.len(), 1);
        assert!(truth.facts.contains_key("f0"));
    }

    #[test]
    fn bfs_follows_links_up_to_hops() {
        let world = build_world_from_str(CHAIN).unwrap();
        assert_eq!(reachable_facts(&world, &world.seed, 1, "ua").len(), 2);
        assert_eq!(reachable_facts(&world, &world.seed, 2, "ua").len(), 3);
        assert_eq!(reachable_facts(&world, &world.seed, 5, "ua").len(), 3);
    }

    #[test]
    fn robots_blocked_docs_are_unreachable() {
        let world = build_world_from_str(CHAIN).unwrap();
        let truth = reachable_facts(&world, &world.seed, 5, "ua");
        assert!(!truth.facts.contains_key("f3"));
        assert!((reachable_ratio(&world, &world.seed, 5, "ua") - 0.75).abs() < 1e-12);
    }
}
