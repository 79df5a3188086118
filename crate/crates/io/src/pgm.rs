//! 8-bit grayscale PGM (P5) frames.

use std::path::Path;

use dextrain_core::tracking::IrFrame;
use dextrain_core::Micros;
use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};

use crate::IoError;

pub fn encode_pgm(frame: &IrFrame) -> Vec<u8> {
    let mut out = Vec::new();
    PnmEncoder::new(&mut out)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(frame.pixels(), frame.width as u32, frame.height as u32, ExtendedColorType::L8)
        .expect("in-memory encode");
    out
}

pub fn decode_pgm(bytes: &[u8], t_us: Micros) -> Result<IrFrame, IoError> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Pnm)
        .map_err(|e| IoError::Parse(format!("PGM: {e}")))?;
    let gray = match img {
        image::DynamicImage::ImageLuma8(g) => g,
        other => return Err(IoError::Invalid(format!("PGM: expected 8-bit grayscale, got {:?}", other.color()))),
    };
    let (w, h) = gray.dimensions();
    IrFrame::new(t_us, w as usize, h as usize, gray.into_raw()).map_err(|e| IoError::Invalid(e.to_string()))
}

pub fn write_pgm(path: &Path, frame: &IrFrame) -> Result<(), IoError> {
    std::fs::write(path, encode_pgm(frame)).map_err(|e| IoError::io(path, e))
}

pub fn read_pgm(path: &Path, t_us: Micros) -> Result<IrFrame, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    decode_pgm(&bytes, t_us).map_err(|e| e.at(path))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_round_trip() {
        let mut f = IrFrame::dark(5, 4, 3);
        f.set(1, 2, 255);
        f.set(3, 0, 17);
        let bytes = encode_pgm(&f);
        assert!(bytes.starts_with(b"P5"));
        assert!(bytes.ends_with(f.pixels()));
        let back = decode_pgm(&bytes, 5).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rejects_other_formats() {
        assert!(decode_pgm(b"P6\n1 1\n255\n\0\0\0", 0).is_err());
        assert!(decode_pgm(b"not an image", 0).is_err());
    }
}
