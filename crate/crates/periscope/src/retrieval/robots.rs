//! Minimal robots.txt parsing: user-agent groups, Allow/Disallow with `*`
//! wildcards and `$` anchors, longest-match precedence, Allow wins ties.

use std::collections::HashMap;

#[derive(Debug, Clone)]
struct Rule {
    allow: bool,
    pattern: String,
}

#[derive(Debug, Clone, Default)]
struct Group {
    agents: Vec<String>,
    rules: Vec<Rule>,
}

/// Parsed rule set for one host.
#[derive(Debug, Clone, Default)]
pub struct RobotsRules {
    groups: Vec<Group>,
}

impl RobotsRules {
    /// Everything allowed (used for missing or unreadable robots files).
    pub fn allow_all() -> Self {
        RobotsRules::default()
    }

    pub fn parse(text: &str) -> Self {
        let mut groups: Vec<Group> = Vec::new();
        let mut current = Group::default();
        let mut saw_rule = false;
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((field, value)) = line.split_once(':') else {
                continue;
            };
            let field = field.trim().to_lowercase();
            let value = value.trim().to_string();
            match field.as_str() {
                "user-agent" => {
                    if saw_rule {
                        groups.push(std::mem::take(&mut current));
                        saw_rule = false;
                    }
                    current.agents.push(value.to_lowercase());
                }
                "allow" | "disallow" => {
                    if current.agents.is_empty() {
                        continue;
                    }
                    saw_rule = true;
                    if !value.is_empty() {
                        current.rules.push(Rule {
                            allow: field == "allow",
                            pattern: value,
                        });
                    }
                }
                _ => {}
            }
        }
        if !current.agents.is_empty() {
            groups.push(current);
        }
        RobotsRules { groups }
    }

    /// Whether `user_agent` may fetch `path`.
    pub fn allows(&self, user_agent: &str, path: &str) -> bool {
        let ua = user_agent.to_lowercase();
        let group = self
            .groups
            .iter()
            .filter(|g| g.agents.iter().any(|a| a != "*" && ua.contains(a.as_str())))
            .max_by_key(|g| g.agents.iter().map(|a| a.len()).max().unwrap_or(0))
            .or_else(|| self.groups.iter().find(|g| g.agents.iter().any(|a| a == "*")));
        let Some(group) = group else {
            return true;
        };
        let mut best: Option<(usize, bool)> = None;
        for rule in &group.rules {
            if pattern_matches(&rule.pattern, path) {
                let specificity = rule.pattern.len();
                best = match best {
                    Some((len, _)) if len > specificity => best,
                    // Allow wins a tie
                    Some((len, allowed)) if len == specificity => {
                        Some((len, allowed || rule.allow))
                    }
                    _ => Some((specificity, rule.allow)),
                };
            }
        }
        best.map(|(_, allowed)| allowed).unwrap_or(true)
    }
}

/// Robots pattern match: literal prefix with `*` matching any run and a
/// trailing `$` anchoring the end.
fn pattern_matches(pattern: &str, path: &str) -> bool {
    let (pattern, anchored) = match pattern.strip_suffix('$') {
        Some(p) => (p, true),
        None => (pattern, false),
    };
    let parts: Vec<&str> = pattern.split('*').collect();
    let mut pos = 0usize;
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            continue;
        }
        if i == 0 {
            if !path[pos..].starts_with(part) {
                return false;
            }
            pos += part.len();
        } else {
            match path[pos..].find(part) {
                Some(found) => pos += found + part.len(),
                None => return false,
            }
        }
    }
    if anchored {
        // the last literal must reach the end (a trailing * absorbs the rest)
        if parts.last().map(|p| !p.is_empty()).unwrap_or(false) {
            return pos == path.len();
        }
    }
    true
}

/// Per-host robots rules cached for the duration of one audit.
#[derive(Debug, Default)]
pub struct RobotsCache {
    by_host: std::sync::Mutex<HashMap<String, std::sync::Arc<RobotsRules>>>,
}

impl RobotsCache {
    pub fn get(&self, host: &str) -> Option<std::sync::Arc<RobotsRules>> {
        self.by_host.lock().expect("robots cache lock").get(host).cloned()
    }

    pub fn insert(&self, host: &str, rules: RobotsRules) -> std::sync::Arc<RobotsRules> {
        let arc = std::sync::Arc::new(rules);
        self.by_host
            .lock()
            .expect("robots cache lock")
            .insert(host.to_string(), arc.clone());
        arc
    }
}
