//! Integer rasterizer from scenes to RGB buffers, plus PNG export.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{Color, Rect, Scene, Shape};

pub type Rgb = [u8; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Palette {
    pub background: Rgb,
    pub separator: Rgb,
    pub black: Rgb,
    pub blue: Rgb,
    pub yellow: Rgb,
}

impl Default for Palette {
    fn default() -> Self {
        Palette {
            background: [211, 211, 211],
            separator: [100, 100, 100],
            black: [0, 0, 0],
            blue: [0, 102, 255],
            yellow: [255, 204, 0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PaletteError {
    #[error("separator must be darker than the background")]
    SeparatorNotDarker,
    #[error("palette colors must be pairwise distinct")]
    NotDistinct,
}

fn luma(c: Rgb) -> u32 {
    299 * c[0] as u32 + 587 * c[1] as u32 + 114 * c[2] as u32
}

impl Palette {
    pub fn color(&self, c: Color) -> Rgb {
        match c {
            Color::Black => self.black,
            Color::Blue => self.blue,
            Color::Yellow => self.yellow,
        }
    }

    pub fn validate(&self) -> Result<(), PaletteError> {
        if luma(self.separator) >= luma(self.background) {
            return Err(PaletteError::SeparatorNotDarker);
        }
        let all = [self.background, self.separator, self.black, self.blue, self.yellow];
        for i in 0..all.len() {
            for j in i + 1..all.len() {
                if all[i] == all[j] {
                    return Err(PaletteError::NotDistinct);
                }
            }
        }
        Ok(())
    }
}

/// Row-major 8-bit RGB buffer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn filled(width: u32, height: u32, c: Rgb) -> Self {
        let data = c.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        RgbImage { width, height, data }
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    fn put(&mut self, x: i32, y: i32, c: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i32 || y >= self.height as i32 {
            return;
        }
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    fn fill_rect(&mut self, r: &Rect, c: Rgb) {
        for y in r.y0..r.y1 {
            for x in r.x0..r.x1 {
                self.put(x, y, c);
            }
        }
    }

    pub fn count(&self, c: Rgb) -> usize {
        self.data.chunks_exact(3).filter(|p| *p == c).count()
    }
}

/// Whether local pixel `(i, j)` of an `s`-sided bounding box is inside `shape`.
///
/// Circles use a pixel-center test against the inscribed disk. Triangles have
/// their apex at the top center and their base on the bottom edge.
pub fn shape_covers(shape: Shape, s: i32, i: i32, j: i32) -> bool {
    match shape {
        Shape::Square => true,
        Shape::Circle => {
            let dx = 2 * i + 1 - s;
            let dy = 2 * j + 1 - s;
            dx * dx + dy * dy <= s * s
        }
        Shape::Triangle => (2 * i + 1 - s).abs() <= j + 1,
    }
}

/// Number of pixels a shape of side `s` covers.
pub fn shape_area(shape: Shape, s: i32) -> usize {
    (0..s)
        .flat_map(|j| (0..s).map(move |i| (i, j)))
        .filter(|&(i, j)| shape_covers(shape, s, i, j))
        .count()
}

pub fn render(scene: &Scene, palette: &Palette) -> RgbImage {
    let l = &scene.layout;
    let mut img = RgbImage::filled(l.canvas_width as u32, l.canvas_height as u32, palette.background);
    for sep in l.separator_rects() {
        img.fill_rect(&sep, palette.separator);
    }
    for o in scene.canonical_objects() {
        let r = o.bounding_box(l);
        let s = r.width();
        let c = palette.color(o.color);
        for j in 0..s {
            for i in 0..s {
                if shape_covers(o.shape, s, i, j) {
                    img.put(r.x0 + i, r.y0 + j, c);
                }
            }
        }
    }
    img
}

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot encode {path}: {source}")]
    Encode {
        path: PathBuf,
        #[source]
        source: png::EncodingError,
    },
}

fn write_png<W: Write>(img: &RgbImage, w: W) -> Result<(), png::EncodingError> {
    let mut enc = png::Encoder::new(w, img.width, img.height);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    let mut writer = enc.write_header()?;
    writer.write_image_data(&img.data)?;
    writer.finish()
}

pub fn encode_png(img: &RgbImage) -> Vec<u8> {
    let mut out = Vec::new();
    write_png(img, &mut out).expect("in-memory PNG encoding cannot fail");
    out
}

pub fn export_png(img: &RgbImage, path: &Path) -> Result<(), RenderError> {
    let file = File::create(path).map_err(|source| RenderError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    write_png(img, BufWriter::new(file)).map_err(|source| RenderError::Encode {
        path: path.to_path_buf(),
        source,
    })
}

/// Decodes an 8-bit RGB PNG.
pub fn decode_png(bytes: &[u8]) -> Option<RgbImage> {
    let decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = decoder.read_info().ok()?;
    let mut buf = vec![0; reader.output_buffer_size()?];
    let info = reader.next_frame(&mut buf).ok()?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return None;
    }
    buf.truncate(info.buffer_size());
    Some(RgbImage {
        width: info.width,
        height: info.height,
        data: buf,
    })
}
