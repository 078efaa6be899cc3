//! URL canonicalization used for queue dedup and source identity.

use url::Url;

use crate::error::{Error, Result};

/// Query parameters stripped during canonicalization unless overridden.
pub const DEFAULT_TRACKING_PARAMS: &[&str] = &[
    "utm_source",
    "utm_medium",
    "utm_campaign",
    "utm_term",
    "utm_content",
    "fbclid",
    "gclid",
    "igshid",
    "mc_cid",
    "mc_eid",
    "spm",
];

/// Canonicalize with the default tracking-parameter list.
pub fn canonicalize_url(raw: &str) -> Result<String> {
    let defaults: Vec<String> = DEFAULT_TRACKING_PARAMS.iter().map(|s| s.to_string()).collect();
    canonicalize_url_with(raw, &defaults)
}

/// Lowercase scheme and host, strip default ports and fragments, drop the
/// given tracking parameters. Deterministic and idempotent; parameter order
/// is otherwise preserved.
pub fn canonicalize_url_with(raw: &str, tracking_params: &[String]) -> Result<String> {
    let mut url = Url::parse(raw.trim()).map_err(|e| Error::BadUrl {
        input: raw.to_string(),
        reason: e.to_string(),
    })?;
    if !url.has_host() {
        return Err(Error::BadUrl {
            input: raw.to_string(),
            reason: "no host".into(),
        });
    }
    url.set_fragment(None);
    if let Some(query) = url.query() {
        let kept: Vec<String> = query
            .split('&')
            .filter(|pair| {
                let key = pair.split('=').next().unwrap_or("");
                !tracking_params
                    .iter()
                    .any(|t| t.eq_ignore_ascii_case(key))
            })
            .map(|s| s.to_string())
            .collect();
        if kept.is_empty() {
            url.set_query(None);
        } else {
            url.set_query(Some(&kept.join("&")));
        }
    }
    Ok(url.to_string())
}

/// Host portion of an already-canonical URL.
pub fn host_of(canonical: &str) -> Option<String> {
    Url::parse(canonical)
        .ok()
        .and_then(|u| u.host_str().map(|h| h.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_scheme_host_port_fragment() {
        assert_eq!(
            canonicalize_url("HTTP://Ex.com:80/a#x").unwrap(),
            "http://ex.com/a"
        );
        assert_eq!(
            canonicalize_url("https://Ex.com:443/B").unwrap(),
            "https://ex.com/B"
        );
    }

    #[test]
    fn idempotent() {
        let once = canonicalize_url("https://A.example/path?utm_source=x&q=1#frag").unwrap();
        let twice = canonicalize_url(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once, "https://a.example/path?q=1");
    }

    #[test]
    fn unparseable_error_names_input() {
        match canonicalize_url("not a url").unwrap_err() {
            Error::BadUrl { input, .. } => assert_eq!(input, "not a url"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tracking_params_dropped_others_kept_in_order() {
        assert_eq!(
            canonicalize_url("https://e.com/p?b=2&utm_campaign=c&a=1").unwrap(),
            "https://e.com/p?b=2&a=1"
        );
        assert_eq!(
            canonicalize_url("https://e.com/p?utm_source=x").unwrap(),
            "https://e.com/p"
        );
    }

    #[test]
    fn fixture_equivalence_classes() {
        // hand-built oracle table: inputs on the left must canonicalize to
        // the class representative on the right
        let table: &[(&str, &str)] = &[
            ("http://EX.com/a", "http://ex.com/a"),
            ("http://ex.com:80/a", "http://ex.com/a"),
            ("http://ex.com/a#top", "http://ex.com/a"),
            ("http://ex.com/a#bottom", "http://ex.com/a"),
            ("http://ex.com/a?utm_medium=m", "http://ex.com/a"),
            ("https://Site.Example/P?gclid=1&x=2", "https://site.example/P?x=2"),
            ("https://site.example/P?x=2", "https://site.example/P?x=2"),
            ("HTTPS://site.example:443/P?x=2#f", "https://site.example/P?x=2"),
            ("http://ex.com/b", "http://ex.com/b"),
            ("http://ex.com/b?y=1&utm_term=t&z=2", "http://ex.com/b?y=1&z=2"),
        ];
        for (input, expected) in table {
            assert_eq!(&canonicalize_url(input).unwrap(), expected, "input {input}");
        }
    }
}
