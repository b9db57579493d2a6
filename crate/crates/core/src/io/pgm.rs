use crate::error::{Error, Result};

/// Single-channel image with samples up to `maxval` (8- or 16-bit).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub data: Vec<u16>,
}

fn header_token(bytes: &[u8], pos: &mut usize) -> Result<usize> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::parse("pgm", 0, format!("expected a number at byte {start}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::parse("pgm", 0, "header number out of range"))
}

/// Binary (`P5`) PGM; 16-bit samples are big-endian.
pub fn parse_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(Error::parse("pgm", 0, "missing P5 magic"));
    }
    let mut pos = 2;
    let width = header_token(bytes, &mut pos)?;
    let height = header_token(bytes, &mut pos)?;
    let maxval = header_token(bytes, &mut pos)?;
    if width == 0 || height == 0 {
        return Err(Error::parse("pgm", 0, "zero image dimension"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::parse("pgm", 0, format!("maxval {maxval} out of range")));
    }
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::parse("pgm", 0, "missing separator after header"));
    }
    pos += 1;
    let wide = maxval > 255;
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::parse("pgm", 0, "image too large"))?;
    let need = if wide { n.checked_mul(2) } else { Some(n) }
        .ok_or_else(|| Error::parse("pgm", 0, "image too large"))?;
    let body = &bytes[pos..];
    if body.len() < need {
        return Err(Error::parse(
            "pgm",
            0,
            format!("expected {need} bytes of samples, found {}", body.len()),
        ));
    }
    let data: Vec<u16> = if wide {
        body[..need]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    } else {
        body[..need].iter().map(|&b| b as u16).collect()
    };
    if let Some(bad) = data.iter().find(|&&v| v > maxval as u16) {
        return Err(Error::parse("pgm", 0, format!("sample {bad} exceeds maxval {maxval}")));
    }
    Ok(GrayImage {
        width,
        height,
        maxval: maxval as u16,
        data,
    })
}

pub fn write_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", img.width, img.height, img.maxval).into_bytes();
    if img.maxval > 255 {
        for v in &img.data {
            out.extend_from_slice(&v.to_be_bytes());
        }
    } else {
        out.extend(img.data.iter().map(|&v| v as u8));
    }
    out
}

/// Binary (`P6`) colour image from packed RGB triples.
pub fn write_ppm(width: usize, height: usize, rgb: &[[u8; 3]]) -> Vec<u8> {
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    for px in rgb {
        out.extend_from_slice(px);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixteen_bit_round_trip() {
        let img = GrayImage {
            width: 3,
            height: 2,
            maxval: 65535,
            data: vec![0, 1, 256, 1000, 65535, 42],
        };
        assert_eq!(parse_pgm(&write_pgm(&img)).unwrap(), img);
    }

    #[test]
    fn eight_bit_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 1\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 255]);
        let img = parse_pgm(&bytes).unwrap();
        assert_eq!(img.data, vec![7, 255]);
        assert_eq!(write_pgm(&img), b"P5\n2 1\n255\n\x07\xff".to_vec());
    }

    #[test]
    fn rejects_truncation_and_overflow() {
        assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(parse_pgm(b"P5\n1 1\n10\n\x0b").is_err());
        assert!(parse_pgm(b"P2\n1 1\n255\n0").is_err());
        assert!(parse_pgm(b"P5\n99999999999999999999 1\n255\n").is_err());
    }
}
