//! Binary PPM (P6) classification maps.

use std::collections::BTreeMap;

use tpca_core::LabelMap;

use crate::error::{CliError, CliResult};

/// Colors for class ids 1 to 16 when the config has no palette.
pub const DEFAULT_PALETTE: [[u8; 3]; 16] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [0, 130, 200],
    [245, 130, 48],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [210, 245, 60],
    [250, 190, 212],
    [0, 128, 128],
    [220, 190, 255],
    [170, 110, 40],
    [255, 250, 200],
    [128, 0, 0],
    [170, 255, 195],
];

pub fn default_palette() -> BTreeMap<u16, [u8; 3]> {
    (1u16..).zip(DEFAULT_PALETTE).collect()
}

/// Renders `predicted` (same layout as `labels`, 0 where unlabeled) as P6.
/// Pixels unlabeled in the ground truth are black.
pub fn render(labels: &LabelMap, predicted: &[u16], palette: &BTreeMap<u16, [u8; 3]>) -> CliResult<Vec<u8>> {
    let (h, w) = (labels.height(), labels.width());
    let mut out = format!("P6\n{w} {h}\n255\n").into_bytes();
    out.reserve(h * w * 3);
    for (truth, &pred) in labels.as_slice().iter().zip(predicted) {
        if *truth == 0 {
            out.extend_from_slice(&[0, 0, 0]);
            continue;
        }
        let rgb = palette
            .get(&pred)
            .ok_or_else(|| CliError::Config(format!("field `palette`: no color for class {pred}")))?;
        out.extend_from_slice(rgb);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_colors() {
        let labels = LabelMap::new(2, 3, vec![1, 0, 1, 1, 1, 0]).unwrap();
        let img = render(&labels, &[1, 0, 1, 1, 1, 0], &default_palette()).unwrap();
        let header = b"P6\n3 2\n255\n";
        assert_eq!(&img[..header.len()], header);
        let body = &img[header.len()..];
        assert_eq!(body.len(), 18);
        assert_eq!(&body[0..3], &DEFAULT_PALETTE[0]);
        assert_eq!(&body[3..6], &[0, 0, 0]);
    }

    #[test]
    fn missing_color_is_an_error() {
        let labels = LabelMap::new(1, 1, vec![40]).unwrap();
        let err = render(&labels, &[40], &default_palette()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }
}
