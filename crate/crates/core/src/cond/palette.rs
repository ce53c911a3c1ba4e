use super::color::{hsv_to_rgb, Rgb};
use crate::error::{Error, Result};

pub const MAX_PALETTE: usize = 64;

/// One color per object id, indexed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct IdPalette {
    pub colors: Vec<Rgb>,
}

impl IdPalette {
    pub fn color(&self, object_id: u32) -> Result<Rgb> {
        self.colors
            .get(object_id as usize)
            .copied()
            .ok_or(Error::MissingPalette(object_id))
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    /// Colors rounded to 8 bits, as drawn into renders.
    pub fn bytes(&self) -> Vec<[u8; 3]> {
        self.colors
            .iter()
            .map(|c| c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8))
            .collect()
    }
}

/// `n` fully saturated colors at hues `k * 360 / n`.
pub fn assign_palette(n: usize) -> Result<IdPalette> {
    if !(1..=MAX_PALETTE).contains(&n) {
        return Err(Error::invalid(format!("palette size {n} outside 1..={MAX_PALETTE}")));
    }
    Ok(IdPalette {
        colors: (0..n)
            .map(|k| hsv_to_rgb(k as f64 * 360.0 / n as f64, 1.0, 1.0))
            .collect(),
    })
}
