//! Deterministic word-image rendering: dark glyphs on a light background,
//! one fixed-width cell per character, light per-image jitter and noise.

use crate::corpus::charset::Charset;
use crate::corpus::font::{self, GLYPH_H, GLYPH_W, NUM_FONTS};
use crate::error::{Error, Result};
use crate::image::{Image, CANVAS_H, CANVAS_W};
use crate::nn::rng::derive_rng;
use rand::Rng;

/// Horizontal pixels reserved per character.
pub const CELL_W: usize = 8;
/// Vertical glyph scale (5x7 bitmaps become 5x14).
const SCALE_Y: usize = 2;

/// Render `word` in `font_id` onto the standard canvas.
///
/// Deterministic in `(word, font_id, seed)`: the seed drives baseline
/// jitter, foreground/background levels and the noise field.
pub fn render_word(word: &str, font_id: usize, seed: u64) -> Result<Image> {
    let charset = Charset::standard();
    charset.validate_word(word)?;
    if font_id >= NUM_FONTS {
        return Err(Error::invalid(format!(
            "font_id {font_id} out of range (have {NUM_FONTS})"
        )));
    }
    let mut rng = derive_rng(seed, "render");
    let bg: f32 = 0.86 + 0.08 * rng.gen::<f32>();
    let fg: f32 = 0.06 + 0.12 * rng.gen::<f32>();
    let jx = rng.gen_range(0..2usize);
    let jy = rng.gen_range(0..5usize) as isize - 2;

    let mut img = Image::canvas(bg);
    let rows = GLYPH_H * SCALE_Y;
    let y0 = (8 + jy) as usize; // rows 6..=10; glyph bottom <= 23 < CANVAS_H

    for (ci, c) in word.chars().enumerate() {
        let idx = charset.index_of(c).expect("validated above");
        let bitmap = font::glyph(font_id, idx);
        let x0 = ci * CELL_W + 1 + jx;
        for ry in 0..rows {
            let brow = bitmap[ry / SCALE_Y];
            let slant = font::slant_offset(font_id, ry, rows);
            for gx in 0..GLYPH_W {
                if brow & (1 << (GLYPH_W - 1 - gx)) != 0 {
                    let x = x0 + gx + slant;
                    let y = y0 + ry;
                    if y < CANVAS_H && x < CANVAS_W {
                        img.set(y, x, fg);
                    }
                }
            }
        }
    }

    // Light paper grain so the clean domain is not a flat field.
    for y in 0..CANVAS_H {
        for x in 0..CANVAS_W {
            let n: f32 = rng.gen::<f32>() - 0.5;
            let v = img.get(y, x) + 0.04 * n;
            img.set(y, x, v.clamp(0.0, 1.0));
        }
    }
    Ok(img)
}
