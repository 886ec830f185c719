//! Frame ingestion and export.
//!
//! Directories hold PGM or PNG images read in lexicographic filename order.
//! The raw stream format is a little-endian `u32` header (width, height,
//! frame count) followed by `width·height` bytes per frame, row-major.
//! Intensities are normalized to `[0, 1]` by `/255`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use log::warn;

use crate::error::{Error, Result};
use crate::frame::{Frame, Mask};

const IMAGE_EXTENSIONS: [&str; 4] = ["pgm", "png", "pnm", "ppm"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FrameSource {
    Directory(PathBuf),
    Raw(PathBuf),
}

impl FrameSource {
    /// A directory path reads images, anything else a raw stream.
    pub fn from_path(path: impl Into<PathBuf>) -> Self {
        let path = path.into();
        if path.is_dir() {
            FrameSource::Directory(path)
        } else {
            FrameSource::Raw(path)
        }
    }
}

/// Image files in `dir`, sorted by file name.
pub fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let known = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
        if known && path.is_file() {
            files.push(path);
        }
    }
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

/// Reads one image as grayscale in `[0, 1]`. Color images are converted
/// with BT.601 luma.
pub fn read_image(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|e| Error::format(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        DynamicImage::ImageLuma16(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
        DynamicImage::ImageLumaA8(_) | DynamicImage::ImageLumaA16(_) => {
            img.to_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect()
        }
        other => {
            warn!("{}: color image converted to grayscale (BT.601 luma)", path.display());
            other
                .to_rgb8()
                .pixels()
                .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64) / 255.0)
                .collect()
        }
    };
    Frame::new(w, h, values).map_err(|e| Error::format(path, e.to_string()))
}

/// Lazily decoded frames; every frame must match the first one's size.
pub struct FrameReader {
    inner: ReaderKind,
    shape: Option<(usize, usize)>,
}

enum ReaderKind {
    Files { files: Vec<PathBuf>, next: usize },
    Raw(RawReader),
}

struct RawReader {
    path: PathBuf,
    reader: BufReader<File>,
    width: usize,
    height: usize,
    remaining: usize,
    buf: Vec<u8>,
}

impl FrameReader {
    /// Frame size, known after the first frame (immediately for raw streams).
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.shape
    }

    /// Number of frames still to be read.
    pub fn remaining(&self) -> usize {
        match &self.inner {
            ReaderKind::Files { files, next } => files.len() - next,
            ReaderKind::Raw(r) => r.remaining,
        }
    }
}

impl Iterator for FrameReader {
    type Item = Result<Frame>;

    fn next(&mut self) -> Option<Self::Item> {
        let (frame, path) = match &mut self.inner {
            ReaderKind::Files { files, next } => {
                let path = files.get(*next)?.clone();
                *next += 1;
                (read_image(&path), path)
            }
            ReaderKind::Raw(r) => {
                if r.remaining == 0 {
                    return None;
                }
                r.remaining = r.remaining.saturating_sub(1);
                let res = match r.reader.read_exact(&mut r.buf) {
                    Ok(()) => Frame::new(r.width, r.height, r.buf.iter().map(|&b| b as f64 / 255.0).collect()),
                    Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                        r.remaining = 0;
                        Err(Error::format(&r.path, "raw stream ends before the declared frame count"))
                    }
                    Err(e) => Err(Error::io(&r.path, e)),
                };
                (res, r.path.clone())
            }
        };
        Some(frame.and_then(|f| {
            match self.shape {
                None => self.shape = Some(f.shape()),
                Some(s) if s != f.shape() => {
                    return Err(Error::format(
                        &path,
                        format!(
                            "frame size {}x{} differs from the first frame's {}x{}",
                            f.width(),
                            f.height(),
                            s.0,
                            s.1
                        ),
                    ))
                }
                Some(_) => {}
            }
            Ok(f)
        }))
    }
}

fn read_u32(reader: &mut impl Read, path: &Path) -> Result<usize> {
    let mut b = [0u8; 4];
    reader
        .read_exact(&mut b)
        .map_err(|_| Error::format(path, "raw stream header is truncated"))?;
    Ok(u32::from_le_bytes(b) as usize)
}

pub fn read_frames(source: &FrameSource) -> Result<FrameReader> {
    match source {
        FrameSource::Directory(dir) => {
            let files = list_image_files(dir)?;
            Ok(FrameReader {
                inner: ReaderKind::Files { files, next: 0 },
                shape: None,
            })
        }
        FrameSource::Raw(path) => {
            let file = File::open(path).map_err(|e| Error::io(path, e))?;
            let mut reader = BufReader::new(file);
            let width = read_u32(&mut reader, path)?;
            let height = read_u32(&mut reader, path)?;
            let count = read_u32(&mut reader, path)?;
            if width == 0 || height == 0 {
                return Err(Error::format(path, "raw stream declares an empty frame size"));
            }
            Ok(FrameReader {
                inner: ReaderKind::Raw(RawReader {
                    path: path.clone(),
                    reader,
                    width,
                    height,
                    remaining: count,
                    buf: vec![0; width * height],
                }),
                shape: Some((width, height)),
            })
        }
    }
}

/// Reads every frame of `source`.
pub fn read_all_frames(source: &FrameSource) -> Result<Vec<Frame>> {
    read_frames(source)?.collect()
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn write_raw_stream(path: &Path, frames: &[Frame]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let (w, h) = frames.first().map(Frame::shape).unwrap_or((0, 0));
    let mut bytes = Vec::with_capacity(12);
    for v in [w, h, frames.len()] {
        let v = u32::try_from(v).map_err(|_| Error::format(path, "dimension exceeds u32"))?;
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    for (i, f) in frames.iter().enumerate() {
        if f.shape() != (w, h) {
            return Err(Error::FrameSizeMismatch {
                index: i,
                expected: (w, h),
                found: f.shape(),
            });
        }
        let buf: Vec<u8> = f.values().iter().map(|&v| to_u8(v)).collect();
        out.write_all(&buf).map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn save_gray(path: &Path, width: usize, height: usize, buf: &[u8]) -> Result<()> {
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        return image::save_buffer_with_format(path, buf, width as u32, height as u32, ExtendedColorType::L8, ImageFormat::Png)
            .map_err(|e| Error::format(path, e.to_string()));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(buf, width as u32, height as u32, ExtendedColorType::L8)
        .map_err(|e| Error::format(path, e.to_string()))?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Writes an 8-bit grayscale image (PNG for `.png`, binary PGM otherwise).
/// Values are clamped to `[0, 1]`.
pub fn write_image(path: &Path, image: &Frame) -> Result<()> {
    let buf: Vec<u8> = image.values().iter().map(|&v| to_u8(v)).collect();
    save_gray(path, image.width(), image.height(), &buf)
}

/// Writes a mask as 0/255 grayscale.
pub fn write_mask(path: &Path, mask: &Mask) -> Result<()> {
    let buf: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    save_gray(path, mask.width(), mask.height(), &buf)
}

/// Reads a mask image; pixels at half intensity or above are foreground.
pub fn read_mask(path: &Path) -> Result<Mask> {
    let f = read_image(path)?;
    let bits = f.values().iter().map(|&v| v >= 0.5).collect();
    Mask::new(f.width(), f.height(), bits).map_err(|e| Error::format(path, e.to_string()))
}
