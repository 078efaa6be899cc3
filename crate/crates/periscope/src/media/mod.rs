//! Structural metadata scanners for collected assets: EXIF in images and
//! document-information fields in PDFs. Pure functions over byte inputs.

mod exif;
mod pdf;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use exif::{extract_image_metadata, ImageMetadata};
pub use pdf::{extract_pdf_metadata, PdfMetadata};

/// One asset handed to the scanner.
#[derive(Debug, Clone)]
pub struct ScanItem {
    /// Where the bytes came from (path or URL), for reporting only.
    pub label: String,
    pub mime: String,
    pub bytes: Vec<u8>,
}

/// Finding for one distinct asset (by content hash).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediaFinding {
    pub sha256: String,
    pub labels: Vec<String>,
    pub mime: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<ImageMetadata>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pdf: Option<PdfMetadata>,
    /// True when any populated field reveals sensitive context.
    pub leak: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Scan a batch of assets, dispatching per MIME label. Unknown MIME types
/// are kept with a note; per-asset extraction errors are recorded and the
/// scan completes. Findings are keyed by content hash.
pub fn scan_assets(items: &[ScanItem]) -> BTreeMap<String, MediaFinding> {
    let mut findings: BTreeMap<String, MediaFinding> = BTreeMap::new();
    for item in items {
        let sha256 = hex::encode(Sha256::digest(&item.bytes));
        if let Some(existing) = findings.get_mut(&sha256) {
            if !existing.labels.contains(&item.label) {
                existing.labels.push(item.label.clone());
            }
            continue;
        }
        let mut finding = MediaFinding {
            sha256: sha256.clone(),
            labels: vec![item.label.clone()],
            mime: item.mime.clone(),
            image: None,
            pdf: None,
            leak: false,
            note: None,
        };
        if item.mime.starts_with("image/") {
            match extract_image_metadata(&item.bytes) {
                Ok(meta) => {
                    finding.leak = meta.has_sensitive_fields();
                    finding.image = Some(meta);
                }
                Err(e) => finding.note = Some(format!("image scan failed: {e}")),
            }
        } else if item.mime == "application/pdf" {
            match extract_pdf_metadata(&item.bytes) {
                Ok(meta) => {
                    finding.leak = meta.has_sensitive_fields();
                    if meta.encrypted {
                        finding.note = Some("encrypted document, fields unavailable".into());
                    }
                    finding.pdf = Some(meta);
                }
                Err(e) => finding.note = Some(format!("pdf scan failed: {e}")),
            }
        } else {
            finding.note = Some(format!("unsupported mime {:?}, skipped", item.mime));
        }
        findings.insert(sha256, finding);
    }
    findings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::fixtures::{jpeg_plain, jpeg_with_exif, pdf_with_info, ExifFields};

    #[test]
    fn mixed_batch_flags_leaks() {
        let items = vec![
            ScanItem {
                label: "gps.jpg".into(),
                mime: "image/jpeg".into(),
                bytes: jpeg_with_exif(&ExifFields {
                    gps: Some((40.0, -75.0)),
                    ..Default::default()
                }),
            },
            ScanItem {
                label: "clean.jpg".into(),
                mime: "image/jpeg".into(),
                bytes: jpeg_plain("clean"),
            },
            ScanItem {
                label: "cv.pdf".into(),
                mime: "application/pdf".into(),
                bytes: pdf_with_info(Some("A. Researcher"), None, None),
            },
        ];
        let findings = scan_assets(&items);
        assert_eq!(findings.len(), 3);
        let leaks = findings.values().filter(|f| f.leak).count();
        assert_eq!(leaks, 2);
    }

    #[test]
    fn empty_input_empty_findings() {
        assert!(scan_assets(&[]).is_empty());
    }

    #[test]
    fn unknown_mime_is_skipped_with_note() {
        let findings = scan_assets(&[ScanItem {
            label: "notes.txt".into(),
            mime: "text/plain".into(),
            bytes: b"hello".to_vec(),
        }]);
        let finding = findings.values().next().unwrap();
        assert!(!finding.leak);
        assert!(finding.note.as_ref().unwrap().contains("unsupported"));
    }

    #[test]
    fn duplicate_bytes_merge_labels() {
        let bytes = jpeg_plain("same");
        let items = vec![
            ScanItem {
                label: "a.jpg".into(),
                mime: "image/jpeg".into(),
                bytes: bytes.clone(),
            },
            ScanItem {
                label: "b.jpg".into(),
                mime: "image/jpeg".into(),
                bytes,
            },
        ];
        let findings = scan_assets(&items);
        assert_eq!(findings.len(), 1);
        assert_eq!(findings.values().next().unwrap().labels.len(), 2);
    }
}
