//! Readable-text extraction from minimal markup: strips script/style and
//! tags, decodes common entities, and collects anchors and media asset
//! references.

use regex::Regex;
use std::sync::OnceLock;
use url::Url;

/// What a page yields before any model sees it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PageExtract {
    /// Markup-stripped body text with collapsed whitespace.
    pub text: String,
    /// Absolutized hyperlink targets, document order, deduplicated.
    pub anchors: Vec<String>,
    /// Absolutized media references with a MIME guess.
    pub assets: Vec<(String, String)>,
}

fn href_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?is)<a\s[^>]*href\s*=\s*["']([^"']+)["']"#).unwrap())
}

fn img_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"(?is)<img\s[^>]*src\s*=\s*["']([^"']+)["']"#).unwrap())
}

fn script_style_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?is)<(script|style)\b[^>]*>.*?</(script|style)>").unwrap()
    })
}

fn tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?s)<[^>]+>").unwrap())
}

/// MIME guess for a URL path, media types only.
pub fn guess_media_mime(url: &str) -> Option<&'static str> {
    let path = url.split(['?', '#']).next().unwrap_or(url).to_lowercase();
    let ext = path.rsplit('.').next()?;
    match ext {
        "jpg" | "jpeg" => Some("image/jpeg"),
        "png" => Some("image/png"),
        "gif" => Some("image/gif"),
        "webp" => Some("image/webp"),
        "pdf" => Some("application/pdf"),
        _ => None,
    }
}

/// Extract readable text, anchors and asset references from `html`,
/// resolving relative targets against `base`.
pub fn extract_page(html: &str, base: &Url) -> PageExtract {
    let mut anchors = Vec::new();
    let mut assets = Vec::new();
    let mut push_unique = |list: &mut Vec<String>, value: String| {
        if !list.contains(&value) {
            list.push(value);
        }
    };

    for cap in href_re().captures_iter(html) {
        let target = cap[1].trim().to_string();
        if let Ok(abs) = base.join(&target) {
            let abs = abs.to_string();
            match guess_media_mime(&abs) {
                Some(mime) => {
                    if !assets.iter().any(|(u, _)| u == &abs) {
                        assets.push((abs, mime.to_string()));
                    }
                }
                None => push_unique(&mut anchors, abs),
            }
        }
    }
    for cap in img_re().captures_iter(html) {
        let target = cap[1].trim().to_string();
        if let Ok(abs) = base.join(&target) {
            let abs = abs.to_string();
            let mime = guess_media_mime(&abs).unwrap_or("image/*");
            if !assets.iter().any(|(u, _)| u == &abs) {
                assets.push((abs, mime.to_string()));
            }
        }
    }

    let without_blocks = script_style_re().replace_all(html, " ");
    let without_tags = tag_re().replace_all(&without_blocks, " ");
    let decoded = decode_entities(&without_tags);
    let text = decoded
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ");

    PageExtract {
        text,
        anchors,
        assets,
    }
}

fn decode_entities(text: &str) -> String {
    text.replace("&amp;", "&")
        .replace("&lt;", "<")
        .replace("&gt;", ">")
        .replace("&quot;", "\"")
        .replace("&#39;", "'")
        .replace("&nbsp;", " ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_markup_and_collects_links() {
        let base = Url::parse("https://site.example/people/v").unwrap();
        let html = r#"
<html><head><style>body { color: red }</style>
<script>var hidden = "secret";</script></head>
<body>
<h1>Profile &amp; Notes</h1>
<p>Works at <a href="https://lab.example/team">Lab</a>.</p>
<a href="/people/v/cv.pdf">CV</a>
<img src="photo.jpg">
</body></html>"#;
        let page = extract_page(html, &base);
        assert!(page.text.contains("Profile & Notes"));
        assert!(!page.text.contains("secret"));
        assert!(!page.text.contains("color"));
        assert_eq!(page.anchors, vec!["https://lab.example/team"]);
        assert_eq!(page.assets.len(), 2);
        assert_eq!(
            page.assets[0],
            ("https://site.example/people/v/cv.pdf".to_string(), "application/pdf".to_string())
        );
        assert_eq!(
            page.assets[1],
            ("https://site.example/people/photo.jpg".to_string(), "image/jpeg".to_string())
        );
    }

    #[test]
    fn mime_guess_by_extension() {
        assert_eq!(guess_media_mime("https://x/a.JPG"), Some("image/jpeg"));
        assert_eq!(guess_media_mime("https://x/a.pdf?dl=1"), Some("application/pdf"));
        assert_eq!(guess_media_mime("https://x/a.html"), None);
    }
}
