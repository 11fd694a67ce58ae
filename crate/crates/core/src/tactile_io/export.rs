use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma};
use serde::{Deserialize, Serialize};

use super::TactileFrame;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EIPF";
pub const HEADER_LEN: usize = 16;

/// Optional outputs beside the binary frame, which is always written.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Formats {
    pub png: bool,
    pub csv: bool,
}

impl Formats {
    pub const ALL: Formats = Formats { png: true, csv: true };
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExportedFiles {
    pub binary: PathBuf,
    pub sidecar: PathBuf,
    pub png: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

/// Metadata stored next to each binary frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub h: usize,
    pub w: usize,
    pub step: usize,
    pub chamfer: f64,
    /// Magnitude mapped to full white in the PNG preview.
    pub png_normalization: f64,
    pub press_direction: [f64; 3],
    pub press_position: [f64; 3],
}

/// Decoded binary frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameData {
    pub h: usize,
    pub w: usize,
    pub step: usize,
    /// Row-major `h x w` displacements.
    pub displacement: Vec<[f32; 3]>,
}

impl FrameData {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.displacement
            .iter()
            .map(|d| d.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt())
            .collect()
    }
}

/// Writes `<stem>.eipf`, `<stem>.json` and the optional previews into `dir`.
pub fn export_frame(
    frame: &TactileFrame,
    dir: &Path,
    stem: &str,
    formats: Formats,
) -> Result<ExportedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let binary = dir.join(format!("{stem}.eipf"));
    write_binary(&binary, &encode(frame)?)?;

    let norm = png_normalization(frame);
    let sidecar = dir.join(format!("{stem}.json"));
    let meta = Sidecar {
        h: frame.h,
        w: frame.w,
        step: frame.step,
        chamfer: frame.chamfer,
        png_normalization: norm,
        press_direction: frame.press_direction.into(),
        press_position: frame.press_position.into(),
    };
    fs::write(&sidecar, serde_json::to_string_pretty(&meta)?).map_err(|e| Error::io(&sidecar, e))?;

    let mut out = ExportedFiles {
        binary,
        sidecar,
        ..Default::default()
    };
    if formats.png {
        let path = dir.join(format!("{stem}.png"));
        write_png(&path, frame.h, frame.w, &frame.magnitudes(), norm)?;
        out.png = Some(path);
    }
    if formats.csv {
        let path = dir.join(format!("{stem}.csv"));
        fs::write(&path, to_csv(frame)).map_err(|e| Error::io(&path, e))?;
        out.csv = Some(path);
    }
    Ok(out)
}

/// Binary layout: magic, then `u32` H, W, step, then `f32` row-major `H x W x 3`,
/// all little-endian.
pub fn encode(frame: &TactileFrame) -> Result<Vec<u8>> {
    let header = |v: usize, what: &str| {
        u32::try_from(v).map_err(|_| Error::FrameFormat(format!("{what} {v} does not fit in u32")))
    };
    let mut bytes = Vec::with_capacity(HEADER_LEN + 12 * frame.displacement.len());
    bytes.extend_from_slice(MAGIC);
    bytes.extend_from_slice(&header(frame.h, "height")?.to_le_bytes());
    bytes.extend_from_slice(&header(frame.w, "width")?.to_le_bytes());
    bytes.extend_from_slice(&header(frame.step, "step")?.to_le_bytes());
    for d in &frame.displacement {
        for c in d.iter() {
            bytes.extend_from_slice(&(*c as f32).to_le_bytes());
        }
    }
    Ok(bytes)
}

pub fn decode(bytes: &[u8]) -> Result<FrameData> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::FrameFormat(format!(
            "truncated header: expected {HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::FrameFormat(format!(
            "bad magic {:?}, expected \"EIPF\"",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let (h, w, step) = (u32_at(4), u32_at(8), u32_at(12));
    let expected = HEADER_LEN + h * w * 12;
    if bytes.len() != expected {
        return Err(Error::FrameFormat(format!(
            "size mismatch for {h}x{w} frame: expected {expected} bytes, got {}",
            bytes.len()
        )));
    }
    let displacement = bytes[HEADER_LEN..]
        .chunks_exact(12)
        .map(|c| [0, 4, 8].map(|o| f32::from_le_bytes(c[o..o + 4].try_into().unwrap())))
        .collect();
    Ok(FrameData {
        h,
        w,
        step,
        displacement,
    })
}

pub fn read_frame(path: &Path) -> Result<FrameData> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

fn write_binary(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Frame maximum magnitude, or 1 for an undeformed frame.
pub fn png_normalization(frame: &TactileFrame) -> f64 {
    let m = frame.max_magnitude();
    if m > 0.0 {
        m
    } else {
        1.0
    }
}

/// 16-bit grayscale magnitude image, `magnitude / norm` mapped onto `0..=65535`.
pub fn write_png(path: &Path, h: usize, w: usize, magnitudes: &[f64], norm: f64) -> Result<()> {
    let px: Vec<u16> = magnitudes
        .iter()
        .map(|m| ((m / norm).clamp(0.0, 1.0) * 65535.0).round() as u16)
        .collect();
    let img: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(w as u32, h as u32, px)
        .ok_or_else(|| Error::FrameFormat("pixel buffer does not match frame size".into()))?;
    img.save(path)?;
    Ok(())
}

fn to_csv(frame: &TactileFrame) -> String {
    let mut s = String::from("h,w,dx,dy,dz,magnitude\n");
    for h in 0..frame.h {
        for w in 0..frame.w {
            let d = frame.at(h, w);
            let _ = writeln!(s, "{h},{w},{:e},{:e},{:e},{:e}", d.x, d.y, d.z, d.norm());
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn frame(h: usize, w: usize) -> TactileFrame {
        let mut f = TactileFrame::zeros(h, w);
        for (i, d) in f.displacement.iter_mut().enumerate() {
            *d = Vector3::new(i as f64 * 0.25, -(i as f64), 1e-3);
        }
        f.step = 7;
        f
    }

    #[test]
    fn two_by_two_is_64_bytes() {
        let bytes = encode(&frame(2, 2)).unwrap();
        assert_eq!(bytes.len(), 16 + 2 * 2 * 3 * 4);
        assert_eq!(&bytes[..4], b"EIPF");
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 7);
    }

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let f = frame(3, 4);
        let files = export_frame(&f, dir.path(), "f", Formats::ALL).unwrap();
        let back = read_frame(&files.binary).unwrap();
        assert_eq!((back.h, back.w, back.step), (3, 4, 7));
        for (a, b) in back.displacement.iter().zip(&f.displacement) {
            for k in 0..3 {
                assert_eq!(a[k].to_bits(), (b[k] as f32).to_bits());
            }
        }
        let meta: Sidecar =
            serde_json::from_str(&fs::read_to_string(&files.sidecar).unwrap()).unwrap();
        assert_eq!(meta.png_normalization, f.max_magnitude());
        let csv = fs::read_to_string(files.csv.unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 13);
    }

    #[test]
    fn zero_frame_png_is_black() {
        let dir = tempfile::tempdir().unwrap();
        let f = TactileFrame::zeros(4, 4);
        let files = export_frame(&f, dir.path(), "z", Formats { png: true, csv: false }).unwrap();
        let img = image::open(files.png.unwrap()).unwrap().into_luma16();
        assert_eq!(img.dimensions(), (4, 4));
        assert!(img.pixels().all(|p| p.0[0] == 0));
        assert!(files.csv.is_none());
    }

    #[test]
    fn png_peak_is_white() {
        let dir = tempfile::tempdir().unwrap();
        let f = frame(2, 3);
        let files = export_frame(&f, dir.path(), "p", Formats { png: true, csv: false }).unwrap();
        let img = image::open(files.png.unwrap()).unwrap().into_luma16();
        assert_eq!(img.get_pixel(2, 1).0[0], 65535);
    }

    #[test]
    fn malformed_input_rejected() {
        let bytes = encode(&frame(2, 2)).unwrap();
        let err = decode(&bytes[..40]).unwrap_err().to_string();
        assert!(err.contains("expected 64") && err.contains("got 40"), "{err}");
        assert!(decode(&bytes[..10]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode(&bad).unwrap_err().to_string().contains("magic"));
    }

    proptest::proptest! {
        #[test]
        fn binary_round_trip_is_lossless(vals in proptest::collection::vec(proptest::num::f32::NORMAL | proptest::num::f32::SUBNORMAL | proptest::num::f32::ZERO, 12)) {
            let mut f = TactileFrame::zeros(2, 2);
            for (i, d) in f.displacement.iter_mut().enumerate() {
                *d = Vector3::new(vals[3 * i] as f64, vals[3 * i + 1] as f64, vals[3 * i + 2] as f64);
            }
            let back = decode(&encode(&f).unwrap()).unwrap();
            for i in 0..4 {
                for k in 0..3 {
                    proptest::prop_assert_eq!(back.displacement[i][k].to_bits(), vals[3 * i + k].to_bits());
                }
            }
        }
    }
}
