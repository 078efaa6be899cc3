//! PDF document-information extraction: author, producer, creation date,
//! and encryption status. Encrypted documents are reported as such with no
//! decryption attempt.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PdfMetadata {
    pub encrypted: bool,
    pub author: Option<String>,
    pub producer: Option<String>,
    pub creation_date: Option<String>,
}

impl PdfMetadata {
    pub fn has_sensitive_fields(&self) -> bool {
        self.author.is_some() || self.producer.is_some() || self.creation_date.is_some()
    }
}

/// Read the classic document-information dictionary. Non-PDF bytes are an
/// error; an encrypted document short-circuits with fields unavailable.
pub fn extract_pdf_metadata(bytes: &[u8]) -> Result<PdfMetadata> {
    if !bytes.starts_with(b"%PDF-") {
        return Err(Error::UnsupportedMedia("missing %PDF header".into()));
    }
    let doc = lopdf::Document::load_mem(bytes)
        .map_err(|e| Error::UnsupportedMedia(format!("pdf parse: {e}")))?;

    if doc.is_encrypted() {
        return Ok(PdfMetadata {
            encrypted: true,
            ..Default::default()
        });
    }

    let mut meta = PdfMetadata::default();
    if let Ok(info_obj) = doc.trailer.get(b"Info") {
        let dict = match info_obj {
            lopdf::Object::Reference(r) => doc
                .get_object(*r)
                .ok()
                .and_then(|o| o.as_dict().ok().cloned()),
            lopdf::Object::Dictionary(d) => Some(d.clone()),
            _ => None,
        };
        if let Some(dict) = dict {
            meta.author = string_field(&dict, b"Author");
            meta.producer = string_field(&dict, b"Producer");
            meta.creation_date = string_field(&dict, b"CreationDate");
        }
    }
    Ok(meta)
}

fn string_field(dict: &lopdf::Dictionary, key: &[u8]) -> Option<String> {
    dict.get(key).ok().and_then(|obj| match obj {
        lopdf::Object::String(bytes, _) => {
            let text = String::from_utf8_lossy(bytes).trim().to_string();
            (!text.is_empty()).then_some(text)
        }
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::fixtures::{pdf_encrypted, pdf_with_info};

    #[test]
    fn round_trips_planted_info_fields() {
        let bytes = pdf_with_info(
            Some("A. Researcher"),
            Some("TextForge 2.1"),
            Some("D:20240102030405Z"),
        );
        let meta = extract_pdf_metadata(&bytes).unwrap();
        assert!(!meta.encrypted);
        assert_eq!(meta.author.as_deref(), Some("A. Researcher"));
        assert_eq!(meta.producer.as_deref(), Some("TextForge 2.1"));
        assert_eq!(meta.creation_date.as_deref(), Some("D:20240102030405Z"));
    }

    #[test]
    fn encrypted_reports_without_field_access() {
        let meta = extract_pdf_metadata(&pdf_encrypted()).unwrap();
        assert!(meta.encrypted);
        assert_eq!(meta.author, None);
        assert_eq!(meta.producer, None);
        assert!(!meta.has_sensitive_fields());
    }

    #[test]
    fn empty_info_block_yields_empty_optionals() {
        let bytes = pdf_with_info(None, None, None);
        let meta = extract_pdf_metadata(&bytes).unwrap();
        assert!(!meta.encrypted);
        assert!(!meta.has_sensitive_fields());
    }

    #[test]
    fn not_a_pdf_is_an_error() {
        assert!(matches!(
            extract_pdf_metadata(b"hello world").unwrap_err(),
            Error::UnsupportedMedia(_)
        ));
    }
}
