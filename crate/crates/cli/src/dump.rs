//! Raw spectrum dumps.
//!
//! A dump is two files: the data file and a text sidecar at
//! `<data path>.hdr`. The data file holds little-endian IEEE-754 `f64`
//! values, channel-major; within a channel coefficients are row-major.
//! DCT dumps store one value per coefficient, FFT dumps store interleaved
//! `(re, im)` pairs. The sidecar is `key = value` lines:
//!
//! ```text
//! format = floss-spectrum/v1
//! transform = fft
//! convention = unnormalized forward DFT, X(u,v) = sum x(m,n) exp(-2 pi i (um/M + vn/N))
//! height = 32
//! width = 32
//! channels = 3
//! dtype = f64le
//! values_per_coefficient = 2
//! layout = channel-major, row-major within channel, re/im interleaved
//! ```

use std::io::Write;
use std::path::{Path, PathBuf};

use floss_core::spectral::{dct2_plane, fft2_plane};
use floss_core::{ImageTensor, Variant};

use crate::config::ConfigFile;
use crate::CliError;

pub const FORMAT: &str = "floss-spectrum/v1";
pub const DCT_CONVENTION: &str = "orthonormal DCT-II, separable, X(u,v) = s_u s_v sum x(m,n) cos(pi(2m+1)u/2M) cos(pi(2n+1)v/2N)";
pub const FFT_CONVENTION: &str =
    "unnormalized forward DFT, X(u,v) = sum x(m,n) exp(-2 pi i (um/M + vn/N))";

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumDump {
    pub transform: Variant,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Raw values in file order.
    pub values: Vec<f64>,
}

impl SpectrumDump {
    pub fn of_image(img: &ImageTensor, transform: Variant) -> Self {
        let (h, w, c) = img.shape();
        let mut values = Vec::new();
        for plane in img.planes() {
            match transform {
                Variant::Dct => values.extend(dct2_plane(h, w, plane).coeffs),
                Variant::Fft => {
                    for z in fft2_plane(h, w, plane).coeffs {
                        values.push(z.re);
                        values.push(z.im);
                    }
                }
            }
        }
        Self {
            transform,
            height: h,
            width: w,
            channels: c,
            values,
        }
    }

    pub fn values_per_coefficient(&self) -> usize {
        match self.transform {
            Variant::Dct => 1,
            Variant::Fft => 2,
        }
    }

    pub fn header_text(&self) -> String {
        let (convention, layout) = match self.transform {
            Variant::Dct => (DCT_CONVENTION, "channel-major, row-major within channel"),
            Variant::Fft => (
                FFT_CONVENTION,
                "channel-major, row-major within channel, re/im interleaved",
            ),
        };
        format!(
            "format = {FORMAT}\ntransform = {}\nconvention = {convention}\nheight = {}\nwidth = {}\nchannels = {}\ndtype = f64le\nvalues_per_coefficient = {}\nlayout = {layout}\n",
            self.transform,
            self.height,
            self.width,
            self.channels,
            self.values_per_coefficient()
        )
    }

    /// Writes the data file and its `.hdr` sidecar.
    pub fn write(&self, path: &Path) -> Result<PathBuf, CliError> {
        let io =
            |e: std::io::Error| CliError::Input(format!("cannot write {}: {e}", path.display()));
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&bytes))
            .map_err(io)?;
        let hdr = header_path(path);
        std::fs::write(&hdr, self.header_text()).map_err(io)?;
        Ok(hdr)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let hdr = ConfigFile::load(&header_path(path))?;
        if hdr.get_raw("format") != Some(FORMAT) {
            return Err(CliError::Input("not a floss spectrum header".into()));
        }
        let transform: Variant = hdr
            .get_raw("transform")
            .ok_or_else(|| CliError::Input("header lacks transform".into()))?
            .parse()
            .map_err(|e: floss_core::Error| CliError::Input(e.to_string()))?;
        let dim = |k: &str| -> Result<usize, CliError> {
            hdr.get::<usize>(k)?
                .ok_or_else(|| CliError::Input(format!("header lacks {k}")))
        };
        let (height, width, channels) = (dim("height")?, dim("width")?, dim("channels")?);
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let mut dump = Self {
            transform,
            height,
            width,
            channels,
            values: Vec::new(),
        };
        let expected = height * width * channels * dump.values_per_coefficient() * 8;
        if bytes.len() != expected {
            return Err(CliError::Input(format!(
                "spectrum data has {} bytes, header implies {expected}",
                bytes.len()
            )));
        }
        dump.values = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        Ok(dump)
    }
}

pub fn header_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".hdr");
    PathBuf::from(s)
}
