//! Raster file formats: the DPTH depth container and PNG images.

use std::io::{Read, Write};

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder};

use super::RenderError;

const MAGIC: &[u8; 4] = b"DPTH";

/// `"DPTH"`, u32 LE width, u32 LE height, then row-major f32 LE meters.
pub fn encode_dpth(width: u32, height: u32, depth: &[f32]) -> Vec<u8> {
    assert_eq!(depth.len(), width as usize * height as usize);
    let mut out = Vec::with_capacity(12 + 4 * depth.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&width.to_le_bytes());
    out.extend_from_slice(&height.to_le_bytes());
    for d in depth {
        out.extend_from_slice(&d.to_le_bytes());
    }
    out
}

pub fn write_dpth(mut w: impl Write, width: u32, height: u32, depth: &[f32]) -> std::io::Result<()> {
    w.write_all(&encode_dpth(width, height, depth))
}

pub fn read_dpth(mut r: impl Read) -> Result<(u32, u32, Vec<f32>), RenderError> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| RenderError::Format(e.to_string()))?;
    decode_dpth(&buf)
}

pub fn decode_dpth(buf: &[u8]) -> Result<(u32, u32, Vec<f32>), RenderError> {
    if buf.len() < 12 || &buf[..4] != MAGIC {
        return Err(RenderError::Format("missing DPTH header".into()));
    }
    let width = u32::from_le_bytes(buf[4..8].try_into().expect("4 bytes"));
    let height = u32::from_le_bytes(buf[8..12].try_into().expect("4 bytes"));
    let n = width as usize * height as usize;
    if buf.len() != 12 + 4 * n {
        return Err(RenderError::Format(format!("expected {} bytes, found {}", 12 + 4 * n, buf.len())));
    }
    let depth = buf[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok((width, height, depth))
}

fn encoder(out: &mut Vec<u8>) -> PngEncoder<&mut Vec<u8>> {
    PngEncoder::new_with_quality(out, CompressionType::Fast, FilterType::Sub)
}

pub fn encode_png_rgb8(width: u32, height: u32, rgb: &[u8]) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    encoder(&mut out)
        .write_image(rgb, width, height, ExtendedColorType::Rgb8)
        .map_err(|e| RenderError::Format(e.to_string()))?;
    Ok(out)
}

/// 16-bit grayscale PNG.
pub fn encode_png_gray16(width: u32, height: u32, data: &[u16]) -> Result<Vec<u8>, RenderError> {
    let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_ne_bytes()).collect();
    let mut out = Vec::new();
    encoder(&mut out)
        .write_image(&bytes, width, height, ExtendedColorType::L16)
        .map_err(|e| RenderError::Format(e.to_string()))?;
    Ok(out)
}

pub fn decode_png_gray16(bytes: &[u8]) -> Result<(u32, u32, Vec<u16>), RenderError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| RenderError::Format(e.to_string()))?;
    let g = img.to_luma16();
    Ok((g.width(), g.height(), g.into_raw()))
}

pub fn decode_png_rgb8(bytes: &[u8]) -> Result<(u32, u32, Vec<u8>), RenderError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| RenderError::Format(e.to_string()))?;
    let g = img.to_rgb8();
    Ok((g.width(), g.height(), g.into_raw()))
}
