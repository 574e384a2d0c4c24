use std::path::Path;

use image::codecs::pnm::{GraymapHeader, PnmEncoder, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};
use ndarray::Array2;
use trigbound_core::Error;

/// Grayscale image and its bit depth (8 or 16).
pub struct Gray {
    pub pixels: Array2<f64>,
    pub bits: u8,
}

fn image_error(path: &Path, e: image::ImageError) -> Error {
    Error::Parse(format!("{}: {e}", path.display()))
}

pub fn read(path: &Path) -> Result<Gray, Error> {
    let img = ImageReader::open(path)?
        .with_guessed_format()?
        .decode()
        .map_err(|e| image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (raw, bits): (Vec<f64>, u8) = match img {
        DynamicImage::ImageLuma8(b) => (b.into_raw().into_iter().map(f64::from).collect(), 8),
        DynamicImage::ImageLuma16(b) => (b.into_raw().into_iter().map(f64::from).collect(), 16),
        other => {
            return Err(Error::Argument(format!(
                "{}: expected a grayscale PGM, found {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let pixels = Array2::from_shape_vec((h, w), raw).expect("decoder returns w*h pixels");
    Ok(Gray { pixels, bits })
}

/// Rounds and clamps to the bit depth, then writes binary PGM (P5).
pub fn write(path: &Path, pixels: &Array2<f64>, bits: u8) -> Result<(), Error> {
    let (h, w) = pixels.dim();
    let q = quantize(pixels, bits);
    let (bytes, color, maxwhite) = if bits == 16 {
        let data: Vec<u8> = q.iter().flat_map(|&v| (v as u16).to_ne_bytes()).collect();
        (data, ExtendedColorType::L16, 65535)
    } else {
        (q.iter().map(|&v| v as u8).collect(), ExtendedColorType::L8, 255)
    };
    let header = GraymapHeader {
        encoding: SampleEncoding::Binary,
        height: h as u32,
        width: w as u32,
        maxwhite,
    };
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(file)
        .with_header(header.into())
        .write_image(&bytes, w as u32, h as u32, color)
        .map_err(|e| image_error(path, e))
}

/// The image as written by [`write`].
pub fn quantize(pixels: &Array2<f64>, bits: u8) -> Array2<f64> {
    let max = if bits == 16 { 65535.0 } else { 255.0 };
    pixels.mapv(|v| v.round().clamp(0.0, max))
}
