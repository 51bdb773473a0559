//! FMAP binary layout, all integers and floats little-endian:
//!
//! ```text
//! "FMAP" | version: u16 = 1 | width: u32 | height: u32 | channels: u32 |
//! channels * height * width f32 values, channel-planar, rows top to bottom
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::FeatureMap;

pub const FMAP_MAGIC: [u8; 4] = *b"FMAP";
pub const FMAP_VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 4 * 3;

#[derive(Debug, Error)]
pub enum FmapError {
    #[error("bad magic: expected `FMAP`, found {0:?}")]
    Magic([u8; 4]),
    #[error("unsupported FMAP version {0}")]
    Version(u16),
    #[error("truncated FMAP: expected {expected} bytes, got {actual}")]
    Truncated { expected: u64, actual: u64 },
    #[error("FMAP dimensions {width}x{height}x{channels} overflow")]
    DimensionOverflow {
        width: u32,
        height: u32,
        channels: u32,
    },
    #[error("FMAP payload holds a non-finite value at index {0}")]
    NonFinite(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn encode_fmap<W: Write>(map: &FeatureMap, mut out: W) -> io::Result<()> {
    let dim = |v: usize| {
        u32::try_from(v)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "dimension exceeds u32"))
    };
    out.write_all(&FMAP_MAGIC)?;
    out.write_all(&FMAP_VERSION.to_le_bytes())?;
    out.write_all(&dim(map.width())?.to_le_bytes())?;
    out.write_all(&dim(map.height())?.to_le_bytes())?;
    out.write_all(&dim(map.channels())?.to_le_bytes())?;
    let mut buf = Vec::with_capacity(map.data().len() * 4);
    for v in map.data() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()
}

pub fn decode_fmap<R: Read>(mut input: R) -> Result<FeatureMap, FmapError> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    (&mut input)
        .take(HEADER_LEN as u64)
        .read_to_end(&mut header)?;
    if header.len() >= 4 {
        let magic: [u8; 4] = header[..4].try_into().unwrap();
        if magic != FMAP_MAGIC {
            return Err(FmapError::Magic(magic));
        }
    }
    if header.len() < HEADER_LEN {
        return Err(FmapError::Truncated {
            expected: HEADER_LEN as u64,
            actual: header.len() as u64,
        });
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != FMAP_VERSION {
        return Err(FmapError::Version(version));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let (width, height, channels) = (u32_at(6), u32_at(10), u32_at(14));
    let overflow = FmapError::DimensionOverflow {
        width,
        height,
        channels,
    };
    let values = (width as u64)
        .checked_mul(height as u64)
        .and_then(|n| n.checked_mul(channels as u64))
        .ok_or(overflow)?;
    let payload = values
        .checked_mul(4)
        .filter(|&b| usize::try_from(b).is_ok())
        .ok_or(FmapError::DimensionOverflow {
            width,
            height,
            channels,
        })?;

    let mut bytes = Vec::new();
    input.take(payload).read_to_end(&mut bytes)?;
    if (bytes.len() as u64) < payload {
        return Err(FmapError::Truncated {
            expected: HEADER_LEN as u64 + payload,
            actual: (HEADER_LEN + bytes.len()) as u64,
        });
    }
    let mut data = Vec::with_capacity(values as usize);
    for (i, chunk) in bytes.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(FmapError::NonFinite(i));
        }
        data.push(v);
    }
    Ok(FeatureMap {
        width: width as usize,
        height: height as usize,
        channels: channels as usize,
        data,
    })
}

pub fn write_fmap(map: &FeatureMap, path: impl AsRef<Path>) -> io::Result<()> {
    encode_fmap(map, BufWriter::new(File::create(path)?))
}

pub fn read_fmap(path: impl AsRef<Path>) -> Result<FeatureMap, FmapError> {
    decode_fmap(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> FeatureMap {
        let data: Vec<f32> = (0..2 * 3 * 4).map(|i| i as f32 * 0.37 - 2.0).collect();
        FeatureMap::from_planar(3, 2, 4, data).unwrap()
    }

    fn encoded(m: &FeatureMap) -> Vec<u8> {
        let mut buf = Vec::new();
        encode_fmap(m, &mut buf).unwrap();
        buf
    }

    #[test]
    fn header_layout() {
        let buf = encoded(&sample());
        assert_eq!(&buf[..4], b"FMAP");
        assert_eq!(&buf[4..6], &[1, 0]);
        assert_eq!(&buf[6..10], &3u32.to_le_bytes());
        assert_eq!(&buf[10..14], &2u32.to_le_bytes());
        assert_eq!(&buf[14..18], &4u32.to_le_bytes());
        assert_eq!(buf.len(), 18 + 24 * 4);
        // first value is channel 0, pixel (0, 0)
        assert_eq!(&buf[18..22], &(-2.0f32).to_le_bytes());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.fmap");
        write_fmap(&sample(), &path).unwrap();
        assert_eq!(read_fmap(&path).unwrap(), sample());
    }

    #[test]
    fn wrong_magic() {
        let mut buf = encoded(&sample());
        buf[..4].copy_from_slice(b"PMAF");
        let err = decode_fmap(&buf[..]).unwrap_err();
        assert!(matches!(err, FmapError::Magic(m) if &m == b"PMAF"));
        assert!(err.to_string().contains("FMAP"));
    }

    #[test]
    fn truncated_payload_reports_counts() {
        let buf = encoded(&sample());
        let cut = &buf[..buf.len() - 5];
        match decode_fmap(cut).unwrap_err() {
            FmapError::Truncated { expected, actual } => {
                assert_eq!(expected, buf.len() as u64);
                assert_eq!(actual, cut.len() as u64);
            }
            e => panic!("unexpected {e}"),
        }
        assert!(matches!(
            decode_fmap(&buf[..10]),
            Err(FmapError::Truncated { .. })
        ));
    }

    #[test]
    fn overflow_and_version() {
        let mut buf = encoded(&sample());
        buf[4] = 2;
        assert!(matches!(decode_fmap(&buf[..]), Err(FmapError::Version(2))));
        let mut buf = encoded(&sample());
        for i in 6..18 {
            buf[i] = 0xff;
        }
        assert!(matches!(
            decode_fmap(&buf[..]),
            Err(FmapError::DimensionOverflow { .. })
        ));
    }

    proptest! {
        #[test]
        fn bit_exact_round_trip(
            w in 1usize..6, h in 1usize..6, c in 1usize..4,
            seed in any::<u64>(),
        ) {
            let mut s = seed;
            let data: Vec<f32> = (0..w * h * c).map(|_| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                let v = f32::from_bits((s >> 32) as u32);
                if v.is_finite() { v } else { 0.5 }
            }).collect();
            let m = FeatureMap::from_planar(w, h, c, data).unwrap();
            let back = decode_fmap(&encoded(&m)[..]).unwrap();
            let a: Vec<u32> = m.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u32> = back.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(a, b);
            prop_assert_eq!((back.width(), back.height(), back.channels()), (w, h, c));
        }
    }
}
