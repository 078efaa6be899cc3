//! Deterministic category assignment from an ordered keyword rule table.

use crate::knowledge::Category;

/// Assigns one of the 17 categories to a fact.
pub trait Categorizer {
    fn categorize(&self, key: &str, fact: &str) -> Category;
}

/// Ordered keyword rules; the first category whose keyword list hits wins,
/// anything unmatched falls through to C17.
#[derive(Debug, Clone)]
pub struct RuleCategorizer {
    rules: Vec<(Category, Vec<String>)>,
}

impl Default for RuleCategorizer {
    fn default() -> Self {
        let table: &[(Category, &[&str])] = &[
            (Category::C2, &["email", "@", "phone", "telephone", "whatsapp", "telegram", "contact info"]),
            (Category::C13, &["health", "medical", "diagnos", "allerg", "blood", "therapy", "weight", "bmi"]),
            (Category::C14, &["salary", "income", "wealth", "net worth", "invest", "debt", "loan", "spending", "finance"]),
            (Category::C1, &["born", "birthday", "date of birth", "gender", "ethnicity", "nationality", "aged", "years old"]),
            (Category::C7, &["degree", "phd", "bachelor", "master", "majored", "graduated", "education", "studied at"]),
            (Category::C8, &["skill", "course", "certification", "certified", "training"]),
            (Category::C10, &["award", "prize", "winner", "publication", "published", "paper", "project", "honor", "maintainer", "author of"]),
            (Category::C11, &["married", "partner", "spouse", "family", "friend", "colleague", "coauthor", "father", "mother", "sibling", "children"]),
            (Category::C16, &["username", "handle", "profile link", "homepage", "website", "account", "url", "online presence", "posted"]),
            (Category::C9, &["professor", "engineer", "job", "position", "work", "career", "employer", "company", "hired", "intern"]),
            (Category::C3, &["affiliation", "member of", "university", "school", "institute", "employed by", "alumni", "department of"]),
            (Category::C5, &["address", "location", "lives in", "located", "city", "gps", "geotag", "residence", "office", "building", "neighborhood"]),
            (Category::C15, &["wedding", "milestone", "plan to", "moving to", "goal", "retirement", "anniversary", "engaged"]),
            (Category::C12, &["hobby", "hobbies", "hik", "travel", "restaurant", "gym", "sport", "music", "game", "routine", "check-in", "checkin", "running", "commute"]),
            (Category::C4, &["appearance", "photo shows", "looks like", "hair", "beard", "glasses", "portrait", "height"]),
            (Category::C6, &["personality", "belief", "values", "political", "religio", "introvert", "extrovert", "opinion"]),
        ];
        RuleCategorizer {
            rules: table
                .iter()
                .map(|(c, kws)| (*c, kws.iter().map(|k| k.to_string()).collect()))
                .collect(),
        }
    }
}

impl RuleCategorizer {
    pub fn with_rules(rules: Vec<(Category, Vec<String>)>) -> Self {
        RuleCategorizer { rules }
    }
}

impl Categorizer for RuleCategorizer {
    fn categorize(&self, key: &str, fact: &str) -> Category {
        let haystack = format!("{} {}", key, fact).to_lowercase();
        for (category, keywords) in &self.rules {
            if keywords.iter().any(|kw| haystack.contains(kw.as_str())) {
                return *category;
            }
        }
        Category::C17
    }
}
