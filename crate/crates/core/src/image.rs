//! Planar float images, 8-bit file ingestion and the mean-pooling pyramid.

use std::io::ErrorKind;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageReader, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `height x width x channels` grid of 64-bit floats.
///
/// Storage is planar: all of channel 0 in row-major order, then channel 1,
/// and so on. Values loaded from files lie in `[0, 1]`; intermediate results
/// (differences, gradients, model outputs) are not clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return Err(Error::ImageTooSmall {
                height,
                width,
                min: 1,
            });
        }
        if data.len() != height * width * channels {
            return Err(Error::InvalidConfig(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// # Panics
    /// If any dimension is zero.
    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0 && channels > 0, "empty image");
        Self {
            height,
            width,
            channels,
            data: vec![value; height * width * channels],
        }
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Self {
        Self::filled(height, width, channels, 0.0)
    }

    /// Builds an image from `f(channel, row, col)`.
    pub fn from_fn(
        height: usize,
        width: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Self {
        let mut img = Self::zeros(height, width, channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    img.data[(c * height + y) * width + x] = f(c, y, x);
                }
            }
        }
        img
    }

    /// Stacks single-plane buffers of `height * width` values into channels.
    pub fn from_planes(height: usize, width: usize, planes: Vec<Vec<f64>>) -> Result<Self> {
        let channels = planes.len();
        let mut data = Vec::with_capacity(height * width * channels);
        for p in planes {
            if p.len() != height * width {
                return Err(Error::InvalidConfig(format!(
                    "plane length {} does not match {height}x{width}",
                    p.len()
                )));
            }
            data.extend(p);
        }
        Self::new(height, width, channels, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// `(height, width, channels)`
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.height, self.width, self.channels)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.height * self.width;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.height * self.width;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn planes(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.height * self.width)
    }

    /// Copy of channel `c` as a single-channel image.
    pub fn channel(&self, c: usize) -> ImageTensor {
        Self {
            height: self.height,
            width: self.width,
            channels: 1,
            data: self.plane(c).to_vec(),
        }
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImageTensor {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    /// Element-wise combination of two same-shape images.
    pub fn zip_map(&self, other: &ImageTensor, f: impl Fn(f64, f64) -> f64) -> Result<ImageTensor> {
        self.ensure_same_shape(other)?;
        Ok(self.with_data(
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn scale(&self, a: f64) -> ImageTensor {
        self.map(|v| a * v)
    }

    pub fn clamp01(&self) -> ImageTensor {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn ensure_same_shape(&self, other: &ImageTensor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(())
    }

    fn with_data(&self, data: Vec<f64>) -> ImageTensor {
        debug_assert_eq!(data.len(), self.data.len());
        Self {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        }
    }
}

/// Reads an 8-bit grayscale or RGB PNG/JPEG, mapping each sample to `v / 255`.
pub fn load_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let path = path.as_ref();
    let reader = ImageReader::open(path).map_err(|e| match e.kind() {
        ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    let reader = reader
        .with_guessed_format()
        .map_err(|e| Error::DecodeError(e.to_string()))?;
    match reader.format() {
        Some(image::ImageFormat::Png) | Some(image::ImageFormat::Jpeg) => {}
        Some(other) => {
            return Err(Error::UnsupportedFormat(format!(
                "{other:?} files are not accepted"
            )))
        }
        None => return Err(Error::UnsupportedFormat("unrecognized file type".into())),
    }
    let decoded = reader.decode().map_err(|e| match e {
        image::ImageError::Unsupported(u) => Error::UnsupportedFormat(u.to_string()),
        other => Error::DecodeError(other.to_string()),
    })?;
    from_dynamic(&decoded)
}

fn from_dynamic(img: &DynamicImage) -> Result<ImageTensor> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(g) => ImageTensor::new(
            h,
            w,
            1,
            g.as_raw().iter().map(|&v| v as f64 / 255.0).collect(),
        ),
        DynamicImage::ImageRgb8(rgb) => {
            let raw = rgb.as_raw();
            let n = h * w;
            let mut data = vec![0.0; 3 * n];
            for (i, px) in raw.chunks_exact(3).enumerate() {
                for c in 0..3 {
                    data[c * n + i] = px[c] as f64 / 255.0;
                }
            }
            ImageTensor::new(h, w, 3, data)
        }
        other => Err(Error::UnsupportedFormat(format!(
            "need 8-bit gray or RGB, got {:?}",
            other.color()
        ))),
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Writes a 1- or 3-channel image as 8-bit PNG, clamping to `[0, 1]`.
pub fn save_png(img: &ImageTensor, path: impl AsRef<Path>) -> Result<()> {
    let (h, w, c) = img.shape();
    let enc = |e: image::ImageError| Error::EncodeError(e.to_string());
    match c {
        1 => {
            let buf: Vec<u8> = img.data().iter().map(|&v| to_u8(v)).collect();
            GrayImage::from_raw(w as u32, h as u32, buf)
                .expect("buffer sized from shape")
                .save_with_format(path, image::ImageFormat::Png)
                .map_err(enc)
        }
        3 => {
            let n = h * w;
            let mut buf = vec![0u8; 3 * n];
            for i in 0..n {
                for ch in 0..3 {
                    buf[3 * i + ch] = to_u8(img.data()[ch * n + i]);
                }
            }
            RgbImage::from_raw(w as u32, h as u32, buf)
                .expect("buffer sized from shape")
                .save_with_format(path, image::ImageFormat::Png)
                .map_err(enc)
        }
        _ => Err(Error::UnsupportedFormat(format!(
            "cannot write {c}-channel PNG"
        ))),
    }
}

/// Top-left crop to the largest size whose sides are multiples of `m`.
pub fn crop_to_multiple(img: &ImageTensor, m: usize) -> Result<ImageTensor> {
    if m == 0 {
        return Err(Error::InvalidConfig("crop multiple must be >= 1".into()));
    }
    let (h, w, _) = img.shape();
    if h < m || w < m {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            min: m,
        });
    }
    crop(img, h / m * m, w / m * m)
}

/// Top-left `height x width` crop.
pub fn crop(img: &ImageTensor, height: usize, width: usize) -> Result<ImageTensor> {
    let (h, w, c) = img.shape();
    if height > h || width > w || height == 0 || width == 0 {
        return Err(Error::ImageTooSmall {
            height: h,
            width: w,
            min: height.max(width),
        });
    }
    if height == h && width == w {
        return Ok(img.clone());
    }
    let mut data = Vec::with_capacity(height * width * c);
    for plane in img.planes() {
        for row in plane.chunks_exact(w).take(height) {
            data.extend_from_slice(&row[..width]);
        }
    }
    ImageTensor::new(height, width, c, data)
}

/// 2x2 mean pooling per channel.
pub fn downsample2x(img: &ImageTensor) -> Result<ImageTensor> {
    let (h, w, c) = img.shape();
    if h % 2 != 0 || w % 2 != 0 {
        return Err(Error::OddDimension {
            height: h,
            width: w,
        });
    }
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(oh * ow * c);
    for plane in img.planes() {
        for y in 0..oh {
            let r0 = &plane[2 * y * w..(2 * y + 1) * w];
            let r1 = &plane[(2 * y + 1) * w..(2 * y + 2) * w];
            for x in 0..ow {
                out.push(0.25 * ((r0[2 * x] + r0[2 * x + 1]) + (r1[2 * x] + r1[2 * x + 1])));
            }
        }
    }
    ImageTensor::new(oh, ow, c, out)
}

/// Adjoint of [`downsample2x`]: each coarse value `g` becomes `g / 4` on its
/// 2x2 block.
pub fn downsample2x_adjoint(grad: &ImageTensor) -> ImageTensor {
    let (h, w, c) = grad.shape();
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = ImageTensor::zeros(oh, ow, c);
    for ch in 0..c {
        let src = grad.plane(ch);
        let dst = out.plane_mut(ch);
        for y in 0..oh {
            for x in 0..ow {
                dst[y * ow + x] = 0.25 * src[(y / 2) * w + x / 2];
            }
        }
    }
    out
}

/// Successive 2x mean-pooled copies of an image, finest first.
#[derive(Debug, Clone, PartialEq)]
pub struct Pyramid {
    levels: Vec<ImageTensor>,
}

impl Pyramid {
    pub fn levels(&self) -> &[ImageTensor] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, k: usize) -> &ImageTensor {
        &self.levels[k]
    }

    pub fn into_levels(self) -> Vec<ImageTensor> {
        self.levels
    }
}

pub fn build_pyramid(img: &ImageTensor, levels: usize) -> Result<Pyramid> {
    if levels == 0 {
        return Err(Error::InvalidConfig(
            "pyramid needs at least one level".into(),
        ));
    }
    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    for k in 1..levels {
        let next = downsample2x(&out[k - 1])?;
        out.push(next);
    }
    Ok(Pyramid { levels: out })
}
