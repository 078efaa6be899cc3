//! Deterministic byte-level fixture builders: JPEGs with hand-assembled
//! EXIF segments and classic PDFs with document-information dictionaries.
//! These are intentionally written from scratch so extraction is checked
//! against an independent producer.

/// EXIF fields a fixture can plant.
#[derive(Debug, Clone, Default)]
pub struct ExifFields {
    /// Signed decimal degrees; negative latitude = S, negative longitude = W.
    pub gps: Option<(f64, f64)>,
    pub model: Option<String>,
    pub timestamp: Option<String>,
    pub artist: Option<String>,
}

const TYPE_ASCII: u16 = 2;
const TYPE_LONG: u16 = 4;
const TYPE_RATIONAL: u16 = 5;

struct IfdEntry {
    tag: u16,
    typ: u16,
    count: u32,
    /// Inline value when it fits in 4 bytes, otherwise bytes for the data
    /// area (the offset is patched during assembly).
    inline: Option<[u8; 4]>,
    data: Vec<u8>,
}

fn ascii_entry(tag: u16, text: &str) -> IfdEntry {
    let mut bytes = text.as_bytes().to_vec();
    bytes.push(0);
    if bytes.len() <= 4 {
        let mut inline = [0u8; 4];
        inline[..bytes.len()].copy_from_slice(&bytes);
        IfdEntry {
            tag,
            typ: TYPE_ASCII,
            count: bytes.len() as u32,
            inline: Some(inline),
            data: Vec::new(),
        }
    } else {
        IfdEntry {
            tag,
            typ: TYPE_ASCII,
            count: bytes.len() as u32,
            inline: None,
            data: bytes,
        }
    }
}

fn pointer_entry(tag: u16, offset_placeholder: u32) -> IfdEntry {
    IfdEntry {
        tag,
        typ: TYPE_LONG,
        count: 1,
        inline: Some(offset_placeholder.to_be_bytes()),
        data: Vec::new(),
    }
}

/// Degrees-minutes-seconds rationals for a non-negative coordinate.
fn dms_rationals(abs_degrees: f64) -> Vec<u8> {
    let total_seconds = (abs_degrees * 3600.0).round() as u64;
    let degrees = total_seconds / 3600;
    let minutes = (total_seconds % 3600) / 60;
    let seconds = total_seconds % 60;
    let mut out = Vec::with_capacity(24);
    for value in [degrees, minutes, seconds] {
        out.extend_from_slice(&(value as u32).to_be_bytes());
        out.extend_from_slice(&1u32.to_be_bytes());
    }
    out
}

fn serialize_ifd(entries: &[IfdEntry], ifd_offset: u32, next_ifd: u32) -> Vec<u8> {
    let header_len = 2 + entries.len() as u32 * 12 + 4;
    let mut data_area: Vec<u8> = Vec::new();
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(&(entries.len() as u16).to_be_bytes());
    for entry in entries {
        out.extend_from_slice(&entry.tag.to_be_bytes());
        out.extend_from_slice(&entry.typ.to_be_bytes());
        out.extend_from_slice(&entry.count.to_be_bytes());
        match &entry.inline {
            Some(four) => out.extend_from_slice(four),
            None => {
                let offset = ifd_offset + header_len + data_area.len() as u32;
                out.extend_from_slice(&offset.to_be_bytes());
                data_area.extend_from_slice(&entry.data);
            }
        }
    }
    out.extend_from_slice(&next_ifd.to_be_bytes());
    out.extend(data_area);
    out
}

fn ifd_size(entries: &[IfdEntry]) -> u32 {
    2 + entries.len() as u32 * 12
        + 4
        + entries
            .iter()
            .map(|e| if e.inline.is_none() { e.data.len() as u32 } else { 0 })
            .sum::<u32>()
}

/// A minimal JPEG whose APP1 segment carries the requested EXIF fields
/// (big-endian TIFF, IFD0 + Exif IFD + GPS IFD).
pub fn jpeg_with_exif(fields: &ExifFields) -> Vec<u8> {
    // IFD0: Model, Artist, pointers to Exif and GPS IFDs
    let mut ifd0: Vec<IfdEntry> = Vec::new();
    if let Some(model) = &fields.model {
        ifd0.push(ascii_entry(0x0110, model));
    }
    if let Some(artist) = &fields.artist {
        ifd0.push(ascii_entry(0x013b, artist));
    }
    let exif_entries: Vec<IfdEntry> = fields
        .timestamp
        .as_ref()
        .map(|ts| vec![ascii_entry(0x9003, ts)])
        .unwrap_or_default();
    let gps_entries: Vec<IfdEntry> = match fields.gps {
        Some((lat, lon)) => {
            let lat_ref = if lat < 0.0 { "S" } else { "N" };
            let lon_ref = if lon < 0.0 { "W" } else { "E" };
            vec![
                ascii_entry(0x0001, lat_ref),
                IfdEntry {
                    tag: 0x0002,
                    typ: TYPE_RATIONAL,
                    count: 3,
                    inline: None,
                    data: dms_rationals(lat.abs()),
                },
                ascii_entry(0x0003, lon_ref),
                IfdEntry {
                    tag: 0x0004,
                    typ: TYPE_RATIONAL,
                    count: 3,
                    inline: None,
                    data: dms_rationals(lon.abs()),
                },
            ]
        }
        None => Vec::new(),
    };

    let has_exif_ifd = !exif_entries.is_empty();
    let has_gps_ifd = !gps_entries.is_empty();
    if has_exif_ifd {
        ifd0.push(pointer_entry(0x8769, 0));
    }
    if has_gps_ifd {
        ifd0.push(pointer_entry(0x8825, 0));
    }

    let ifd0_offset = 8u32;
    let exif_offset = ifd0_offset + ifd_size(&ifd0);
    let gps_offset = exif_offset + if has_exif_ifd { ifd_size(&exif_entries) } else { 0 };

    // patch the pointer entries now that layout is known
    for entry in ifd0.iter_mut() {
        if entry.tag == 0x8769 {
            entry.inline = Some(exif_offset.to_be_bytes());
        }
        if entry.tag == 0x8825 {
            entry.inline = Some(gps_offset.to_be_bytes());
        }
    }

    let mut tiff: Vec<u8> = Vec::new();
    tiff.extend_from_slice(b"MM\x00\x2a");
    tiff.extend_from_slice(&ifd0_offset.to_be_bytes());
    tiff.extend(serialize_ifd(&ifd0, ifd0_offset, 0));
    if has_exif_ifd {
        tiff.extend(serialize_ifd(&exif_entries, exif_offset, 0));
    }
    if has_gps_ifd {
        tiff.extend(serialize_ifd(&gps_entries, gps_offset, 0));
    }

    let mut app1: Vec<u8> = Vec::new();
    app1.extend_from_slice(b"Exif\x00\x00");
    app1.extend(tiff);

    let mut jpeg: Vec<u8> = Vec::new();
    jpeg.extend_from_slice(&[0xFF, 0xD8]);
    jpeg.extend_from_slice(&[0xFF, 0xE1]);
    jpeg.extend_from_slice(&((app1.len() + 2) as u16).to_be_bytes());
    jpeg.extend(app1);
    jpeg.extend(comment_segment(b"fixture"));
    jpeg.extend_from_slice(&[0xFF, 0xD9]);
    jpeg
}

/// A JPEG with no EXIF segment. `label` varies the bytes so distinct
/// fixtures get distinct content hashes.
pub fn jpeg_plain(label: &str) -> Vec<u8> {
    let mut jpeg: Vec<u8> = Vec::new();
    jpeg.extend_from_slice(&[0xFF, 0xD8]);
    jpeg.extend(comment_segment(label.as_bytes()));
    jpeg.extend_from_slice(&[0xFF, 0xD9]);
    jpeg
}

fn comment_segment(payload: &[u8]) -> Vec<u8> {
    let mut seg = Vec::with_capacity(payload.len() + 4);
    seg.extend_from_slice(&[0xFF, 0xFE]);
    seg.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    seg.extend_from_slice(payload);
    seg
}

/// A classic single-page PDF whose trailer points at a document-information
/// dictionary with the given fields.
pub fn pdf_with_info(
    author: Option<&str>,
    producer: Option<&str>,
    creation_date: Option<&str>,
) -> Vec<u8> {
    let mut info = String::from("<<");
    if let Some(author) = author {
        info.push_str(&format!(" /Author ({})", escape_pdf_string(author)));
    }
    if let Some(producer) = producer {
        info.push_str(&format!(" /Producer ({})", escape_pdf_string(producer)));
    }
    if let Some(date) = creation_date {
        info.push_str(&format!(" /CreationDate ({})", escape_pdf_string(date)));
    }
    info.push_str(" >>");
    assemble_pdf(&info, None)
}

/// A PDF flagged encrypted via a standard-security /Encrypt dictionary. Its
/// info strings are placeholders; readers must report encryption without
/// attempting field access.
pub fn pdf_encrypted() -> Vec<u8> {
    let zeros32 = "0".repeat(64);
    let encrypt = format!(
        "<< /Filter /Standard /V 1 /R 2 /O <{zeros32}> /U <{zeros32}> /P -44 >>"
    );
    assemble_pdf("<< /Author (unavailable) >>", Some(&encrypt))
}

fn escape_pdf_string(s: &str) -> String {
    s.replace('\\', "\\\\").replace('(', "\\(").replace(')', "\\)")
}

fn assemble_pdf(info_dict: &str, encrypt_dict: Option<&str>) -> Vec<u8> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(b"%PDF-1.4\n");
    let mut bodies: Vec<String> = vec![
        "<< /Type /Catalog /Pages 2 0 R >>".into(),
        "<< /Type /Pages /Kids [3 0 R] /Count 1 >>".into(),
        "<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] >>".into(),
        info_dict.to_string(),
    ];
    if let Some(encrypt) = encrypt_dict {
        bodies.push(encrypt.to_string());
    }
    let mut offsets = Vec::new();
    for (i, body) in bodies.iter().enumerate() {
        offsets.push(out.len());
        out.extend_from_slice(format!("{} 0 obj\n{}\nendobj\n", i + 1, body).as_bytes());
    }
    let xref_offset = out.len();
    out.extend_from_slice(format!("xref\n0 {}\n", bodies.len() + 1).as_bytes());
    out.extend_from_slice(b"0000000000 65535 f \n");
    for offset in &offsets {
        out.extend_from_slice(format!("{offset:010} 00000 n \n").as_bytes());
    }
    let encrypt_ref = if encrypt_dict.is_some() {
        let zeros = "0".repeat(32);
        format!(" /Encrypt 5 0 R /ID [<{zeros}> <{zeros}>]")
    } else {
        String::new()
    };
    out.extend_from_slice(
        format!(
            "trailer\n<< /Size {} /Root 1 0 R /Info 4 0 R{} >>\nstartxref\n{}\n%%EOF\n",
            bodies.len() + 1,
            encrypt_ref,
            xref_offset
        )
        .as_bytes(),
    );
    out
}
