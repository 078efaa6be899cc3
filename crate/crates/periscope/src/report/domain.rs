//! Source-domain classification for the evidentiary-source histogram.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use url::Url;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainClass {
    Education,
    Academic,
    CodeHosting,
    Social,
    Professional,
    Other,
}

impl DomainClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            DomainClass::Education => "education",
            DomainClass::Academic => "academic",
            DomainClass::CodeHosting => "code_hosting",
            DomainClass::Social => "social",
            DomainClass::Professional => "professional",
            DomainClass::Other => "other",
        }
    }
}

impl fmt::Display for DomainClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered host-classification rules: suffix rules first (`.edu` style),
/// then host-substring rules; first hit wins.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainRules {
    pub suffix_rules: Vec<(String, DomainClass)>,
    pub substring_rules: Vec<(String, DomainClass)>,
}

impl Default for DomainRules {
    fn default() -> Self {
        let suffixes = [
            (".edu", DomainClass::Education),
            (".ac.uk", DomainClass::Education),
            (".ac.jp", DomainClass::Education),
            (".edu.cn", DomainClass::Education),
        ];
        let substrings = [
            ("scholar", DomainClass::Academic),
            ("orcid", DomainClass::Academic),
            ("research", DomainClass::Academic),
            ("arxiv", DomainClass::Academic),
            ("academia", DomainClass::Academic),
            ("github", DomainClass::CodeHosting),
            ("gitlab", DomainClass::CodeHosting),
            ("bitbucket", DomainClass::CodeHosting),
            ("codeberg", DomainClass::CodeHosting),
            ("sourceforge", DomainClass::CodeHosting),
            ("code-host", DomainClass::CodeHosting),
            ("twitter", DomainClass::Social),
            ("facebook", DomainClass::Social),
            ("instagram", DomainClass::Social),
            ("reddit", DomainClass::Social),
            ("tiktok", DomainClass::Social),
            ("weibo", DomainClass::Social),
            ("mastodon", DomainClass::Social),
            ("bsky", DomainClass::Social),
            ("social", DomainClass::Social),
            ("blog", DomainClass::Social),
            ("forum", DomainClass::Social),
            ("linkedin", DomainClass::Professional),
            ("glassdoor", DomainClass::Professional),
            ("career", DomainClass::Professional),
            ("recruit", DomainClass::Professional),
        ];
        DomainRules {
            suffix_rules: suffixes.iter().map(|(s, c)| (s.to_string(), *c)).collect(),
            substring_rules: substrings.iter().map(|(s, c)| (s.to_string(), *c)).collect(),
        }
    }
}

impl DomainRules {
    pub fn classify(&self, url: &str) -> DomainClass {
        let Some(host) = Url::parse(url).ok().and_then(|u| u.host_str().map(str::to_lowercase))
        else {
            return DomainClass::Other;
        };
        for (suffix, class) in &self.suffix_rules {
            if host.ends_with(suffix.as_str()) {
                return *class;
            }
        }
        for (needle, class) in &self.substring_rules {
            if host.contains(needle.as_str()) {
                return *class;
            }
        }
        DomainClass::Other
    }
}

/// Classify each distinct source URL once and count per class; counts come
/// back descending, ties broken by class name for stable output.
pub fn domain_histogram<'a>(
    sources: impl IntoIterator<Item = &'a str>,
    rules: &DomainRules,
) -> Vec<(DomainClass, usize)> {
    let distinct: BTreeSet<&str> = sources.into_iter().collect();
    let mut counts: std::collections::BTreeMap<DomainClass, usize> = Default::default();
    for url in distinct {
        *counts.entry(rules.classify(url)).or_insert(0) += 1;
    }
    let mut out: Vec<(DomainClass, usize)> = counts.into_iter().collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.as_str().cmp(b.0.as_str())));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edu_suffix_counts_distinct_urls() {
        let rules = DomainRules::default();
        let sources = [
            "https://a.edu/x",
            "https://a.edu/y",
            "https://a.edu/x", // duplicate
            "https://social.example/z",
        ];
        let hist = domain_histogram(sources.iter().copied(), &rules);
        assert_eq!(hist[0], (DomainClass::Education, 2));
        assert_eq!(hist[1], (DomainClass::Social, 1));
    }

    #[test]
    fn empty_sources_empty_histogram() {
        let hist = domain_histogram(std::iter::empty(), &DomainRules::default());
        assert!(hist.is_empty());
    }

    #[test]
    fn classification_rules() {
        let rules = DomainRules::default();
        assert_eq!(rules.classify("https://univ-z.edu/p"), DomainClass::Education);
        assert_eq!(rules.classify("https://github.com/u"), DomainClass::CodeHosting);
        assert_eq!(rules.classify("https://code-host.example/u"), DomainClass::CodeHosting);
        assert_eq!(rules.classify("https://blog.example/p"), DomainClass::Social);
        assert_eq!(rules.classify("https://research-hub.example/p"), DomainClass::Academic);
        assert_eq!(rules.classify("https://career-profile.example/in/x"), DomainClass::Professional);
        assert_eq!(rules.classify("https://news.example/x"), DomainClass::Other);
    }
}
