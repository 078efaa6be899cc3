//! EXIF extraction for the fields that leak real-world context: GPS
//! position, camera model, capture timestamp, creator.

use exif::{In, Tag, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Extracted image metadata. `gps` is signed decimal degrees (south and
/// west negative). Timestamps stay in their original `YYYY:MM:DD HH:MM:SS`
/// form.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ImageMetadata {
    pub has_exif: bool,
    pub gps: Option<(f64, f64)>,
    pub camera_model: Option<String>,
    pub timestamp: Option<String>,
    pub creator: Option<String>,
}

impl ImageMetadata {
    /// Any populated field that reveals context counts as sensitive.
    pub fn has_sensitive_fields(&self) -> bool {
        self.gps.is_some()
            || self.camera_model.is_some()
            || self.timestamp.is_some()
            || self.creator.is_some()
    }
}

/// Parse EXIF out of an image container. An image without an EXIF segment
/// yields `has_exif: false`; bytes that are not a readable image container
/// are an error.
pub fn extract_image_metadata(bytes: &[u8]) -> Result<ImageMetadata> {
    let mut cursor = std::io::Cursor::new(bytes);
    let parsed = match exif::Reader::new().read_from_container(&mut cursor) {
        Ok(parsed) => parsed,
        Err(exif::Error::NotFound(_)) | Err(exif::Error::BlankValue(_)) => {
            return Ok(ImageMetadata::default());
        }
        Err(e) => return Err(Error::UnsupportedMedia(e.to_string())),
    };

    let ascii_field = |tag: Tag, ifd: In| -> Option<String> {
        parsed.get_field(tag, ifd).and_then(|f| match &f.value {
            Value::Ascii(parts) => {
                let joined: Vec<String> = parts
                    .iter()
                    .map(|p| String::from_utf8_lossy(p).trim_end_matches('\0').to_string())
                    .collect();
                let text = joined.join(" ").trim().to_string();
                (!text.is_empty()).then_some(text)
            }
            _ => None,
        })
    };

    let gps = read_gps(&parsed);
    Ok(ImageMetadata {
        has_exif: true,
        gps,
        camera_model: ascii_field(Tag::Model, In::PRIMARY),
        timestamp: ascii_field(Tag::DateTimeOriginal, In::PRIMARY),
        creator: ascii_field(Tag::Artist, In::PRIMARY),
    })
}

fn read_gps(parsed: &exif::Exif) -> Option<(f64, f64)> {
    let lat = dms_to_degrees(parsed.get_field(Tag::GPSLatitude, In::PRIMARY)?)?;
    let lon = dms_to_degrees(parsed.get_field(Tag::GPSLongitude, In::PRIMARY)?)?;
    let lat_sign = ref_sign(parsed, Tag::GPSLatitudeRef, 'S');
    let lon_sign = ref_sign(parsed, Tag::GPSLongitudeRef, 'W');
    let lat = lat * lat_sign;
    let lon = lon * lon_sign;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return None;
    }
    Some((lat, lon))
}

fn ref_sign(parsed: &exif::Exif, tag: Tag, negative: char) -> f64 {
    match parsed.get_field(tag, In::PRIMARY) {
        Some(field) => {
            let text = field.display_value().to_string();
            if text.trim().eq_ignore_ascii_case(&negative.to_string()) {
                -1.0
            } else {
                1.0
            }
        }
        None => 1.0,
    }
}

fn dms_to_degrees(field: &exif::Field) -> Option<f64> {
    match &field.value {
        Value::Rational(parts) if parts.len() >= 3 => {
            let d = parts[0].to_f64();
            let m = parts[1].to_f64();
            let s = parts[2].to_f64();
            Some(d + m / 60.0 + s / 3600.0)
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simlab::fixtures::{jpeg_plain, jpeg_with_exif, ExifFields};

    #[test]
    fn round_trips_planted_fields() {
        let fields = ExifFields {
            gps: Some((40.0, -75.0)),
            model: Some("PixelCam 3000".into()),
            timestamp: Some("2024:05:01 10:30:00".into()),
            artist: Some("A. Researcher".into()),
        };
        let meta = extract_image_metadata(&jpeg_with_exif(&fields)).unwrap();
        assert!(meta.has_exif);
        assert_eq!(meta.gps, Some((40.0, -75.0)));
        assert_eq!(meta.camera_model.as_deref(), Some("PixelCam 3000"));
        assert_eq!(meta.timestamp.as_deref(), Some("2024:05:01 10:30:00"));
        assert_eq!(meta.creator.as_deref(), Some("A. Researcher"));
        assert!(meta.has_sensitive_fields());
    }

    #[test]
    fn stripped_image_reports_no_exif() {
        let meta = extract_image_metadata(&jpeg_plain("no-exif")).unwrap();
        assert!(!meta.has_exif);
        assert!(!meta.has_sensitive_fields());
        assert_eq!(meta.gps, None);
    }

    #[test]
    fn southern_western_hemispheres_are_negative() {
        let fields = ExifFields {
            gps: Some((-33.5, 151.25)),
            ..Default::default()
        };
        let meta = extract_image_metadata(&jpeg_with_exif(&fields)).unwrap();
        let (lat, lon) = meta.gps.unwrap();
        assert!((lat - -33.5).abs() < 1e-6);
        assert!((lon - 151.25).abs() < 1e-6);
    }

    #[test]
    fn garbage_is_an_error_distinct_from_no_exif() {
        let err = extract_image_metadata(b"definitely not an image").unwrap_err();
        assert!(matches!(err, Error::UnsupportedMedia(_)));
    }

    #[test]
    fn input_bytes_are_never_mutated() {
        let bytes = jpeg_with_exif(&ExifFields {
            gps: Some((1.0, 2.0)),
            ..Default::default()
        });
        let before = bytes.clone();
        let _ = extract_image_metadata(&bytes).unwrap();
        assert_eq!(bytes, before);
    }
}
