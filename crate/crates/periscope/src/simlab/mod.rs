//! Deterministic offline testbed: synthetic web worlds with planted ground
//! truth, scripted model oracles, a local serving harness, the brute-force
//! reachability oracle, and the defense-evaluation protocol.

pub mod fixtures;
mod oracle;
mod reachability;
mod server;
mod world;

pub use oracle::{
    builtin, fact_line, parse_fact_lines, GroundedMode, MatchCond, OracleAction, OracleRule,
    OracleScript, RoleBehavior, WorldOracle, BUILTIN_ORACLES,
};
pub use reachability::{reachable_facts, reachable_ratio, robots_blocked, seed_queries};
pub use server::{serve, RequestKind, RequestLogEntry, ServerHandle, ServerMetrics};
pub use world::{
    build_world, build_world_from_str, render_document, IndexEntry, InsightSpec, PlantedFact,
    SyntheticWorld, WorldAsset, WorldDocument,
};

/// Builtin reference world sources shipped with the crate.
pub fn builtin_world(name: &str) -> Option<&'static str> {
    match name.to_lowercase().as_str() {
        "w1" => Some(include_str!("../../worlds/w1.toml")),
        "w2" => Some(include_str!("../../worlds/w2.toml")),
        "w3" => Some(include_str!("../../worlds/w3.toml")),
        "w3-single" | "w3_single" => Some(include_str!("../../worlds/w3_single.toml")),
        "defense" => Some(include_str!("../../worlds/defense.toml")),
        _ => None,
    }
}

pub const BUILTIN_WORLDS: &[&str] = &["w1", "w2", "w3", "w3-single", "defense"];

/// Load a builtin world by name or any world spec by path.
pub fn load_world(name_or_path: &str) -> crate::error::Result<SyntheticWorld> {
    match builtin_world(name_or_path) {
        Some(raw) => build_world_from_str(raw),
        None => build_world(std::path::Path::new(name_or_path)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_worlds_build() {
        for name in BUILTIN_WORLDS {
            let world = load_world(name).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!world.documents.is_empty(), "{name} has documents");
        }
    }

    #[test]
    fn w1_reachable_ratio_is_point_seven() {
        let world = load_world("w1").unwrap();
        assert_eq!(world.ground_truth.len(), 10);
        let ratio = reachable_ratio(&world, &world.seed, 5, "periscope-audit/0.1");
        assert!((ratio - 0.7).abs() < 1e-12, "ratio {ratio}");
    }

    #[test]
    fn w2_reachable_ratio_is_point_eight() {
        let world = load_world("w2").unwrap();
        assert_eq!(world.ground_truth.len(), 5);
        let ratio = reachable_ratio(&world, &world.seed, 5, "periscope-audit/0.1");
        assert!((ratio - 0.8).abs() < 1e-12, "ratio {ratio}");
    }

    #[test]
    fn w3_worlds_fully_reachable() {
        for name in ["w3", "w3-single"] {
            let world = load_world(name).unwrap();
            let ratio = reachable_ratio(&world, &world.seed, 5, "ua");
            assert_eq!(ratio, 1.0, "{name}");
        }
    }

    #[test]
    fn builtin_oracles_load() {
        for name in BUILTIN_ORACLES {
            OracleScript::load(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
    }
}
