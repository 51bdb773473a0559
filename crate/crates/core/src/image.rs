//! 8-bit RGB raster and binary PPM (P6) I/O.

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PpmError {
    #[error("not a binary PPM: expected magic `P6`, found `{0}`")]
    Magic(String),
    #[error("bad PPM header: {0}")]
    Header(String),
    #[error("only maxval 255 is supported, found {0}")]
    Maxval(u32),
    #[error("truncated PPM payload: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Row-major interleaved RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0, 0, 0])
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_raw(width: usize, height: usize, data: Vec<u8>) -> Option<Self> {
        (data.len() == width * height * 3).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    /// Left-right mirror.
    pub fn mirrored(&self) -> Self {
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                out.put(self.width - 1 - x, y, self.get(x, y));
            }
        }
        out
    }

    /// RGBA copy with opaque alpha, the layout canvas `ImageData` expects.
    pub fn to_rgba(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width * self.height * 4);
        for px in self.data.chunks_exact(3) {
            out.extend_from_slice(px);
            out.push(255);
        }
        out
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        out.write_all(&self.data)?;
        out.flush()
    }

    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.data.len() + 20);
        self.write_ppm(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_ppm<R: BufRead>(mut input: R) -> Result<Self, PpmError> {
        let magic = next_token(&mut input)?;
        if magic != "P6" {
            return Err(PpmError::Magic(magic));
        }
        let width = parse_dim(&next_token(&mut input)?, "width")?;
        let height = parse_dim(&next_token(&mut input)?, "height")?;
        let maxval = parse_dim(&next_token(&mut input)?, "maxval")?;
        if maxval != 255 {
            return Err(PpmError::Maxval(maxval as u32));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(3))
            .ok_or_else(|| PpmError::Header("dimensions overflow".into()))?;
        let mut data = Vec::with_capacity(expected);
        input.take(expected as u64).read_to_end(&mut data)?;
        if data.len() != expected {
            return Err(PpmError::Truncated {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }
}

fn parse_dim(tok: &str, what: &str) -> Result<usize, PpmError> {
    tok.parse()
        .map_err(|_| PpmError::Header(format!("{what} `{tok}` is not an integer")))
}

// Reads one whitespace-delimited header token, skipping `#` comments. Consumes
// exactly one whitespace byte after the token, as the format requires before
// the raster.
fn next_token<R: BufRead>(input: &mut R) -> Result<String, PpmError> {
    let mut tok = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if input.read(&mut byte)? == 0 {
            if tok.is_empty() {
                return Err(PpmError::Header("unexpected end of header".into()));
            }
            break;
        }
        let b = byte[0];
        if b == b'#' && tok.is_empty() {
            let mut line = Vec::new();
            input.read_until(b'\n', &mut line)?;
            continue;
        }
        if b.is_ascii_whitespace() {
            if tok.is_empty() {
                continue;
            }
            break;
        }
        tok.push(b);
    }
    Ok(String::from_utf8_lossy(&tok).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let mut img = RgbImage::new(5, 3);
        img.put(0, 0, [255, 0, 0]);
        img.put(4, 2, [1, 2, 3]);
        img.put(2, 1, [10, 32, 13]); // 32 and 13 are whitespace bytes in the raster
        let bytes = img.to_ppm_bytes();
        assert!(bytes.starts_with(b"P6\n5 3\n255\n"));
        let back = RgbImage::read_ppm(&bytes[..]).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn ppm_header_comments() {
        let mut bytes = b"P6 # comment\n2 1\n#x\n255\n".to_vec();
        bytes.extend_from_slice(&[1, 2, 3, 4, 5, 6]);
        let img = RgbImage::read_ppm(&bytes[..]).unwrap();
        assert_eq!(img.get(1, 0), [4, 5, 6]);
    }

    #[test]
    fn ppm_errors() {
        assert!(matches!(
            RgbImage::read_ppm(&b"P5\n1 1\n255\n\0"[..]),
            Err(PpmError::Magic(_))
        ));
        assert!(matches!(
            RgbImage::read_ppm(&b"P6\n2 2\n255\n\0\0\0"[..]),
            Err(PpmError::Truncated {
                expected: 12,
                actual: 3
            })
        ));
        assert!(matches!(
            RgbImage::read_ppm(&b"P6\n1 1\n65535\n"[..]),
            Err(PpmError::Maxval(65535))
        ));
    }

    #[test]
    fn mirror_twice_is_identity() {
        let mut img = RgbImage::new(4, 2);
        img.put(0, 1, [9, 9, 9]);
        let m = img.mirrored();
        assert_eq!(m.get(3, 1), [9, 9, 9]);
        assert_eq!(m.mirrored(), img);
    }
}
