//! Two bundled 5x7 bitmap fonts. Font 0 is the plain face; font 1 is a
//! heavier face (horizontally dilated strokes) drawn with a slight rightward
//! slant at render time.

use crate::corpus::charset::Charset;

pub const GLYPH_W: usize = 5;
pub const GLYPH_H: usize = 7;
pub const NUM_FONTS: usize = 2;

/// 5-bit rows, bit 4 = leftmost pixel; indexed by charset symbol order.
#[rustfmt::skip]
const BASE: [[u8; GLYPH_H]; 36] = [
    // a
    [0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F],
    // b
    [0x10, 0x10, 0x16, 0x19, 0x11, 0x19, 0x16],
    // c
    [0x00, 0x00, 0x0E, 0x11, 0x10, 0x11, 0x0E],
    // d
    [0x01, 0x01, 0x0D, 0x13, 0x11, 0x13, 0x0D],
    // e
    [0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E],
    // f
    [0x06, 0x09, 0x08, 0x1C, 0x08, 0x08, 0x08],
    // g
    [0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E],
    // h
    [0x10, 0x10, 0x16, 0x19, 0x11, 0x11, 0x11],
    // i
    [0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E],
    // j
    [0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C],
    // k
    [0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12],
    // l
    [0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E],
    // m
    [0x00, 0x00, 0x1A, 0x15, 0x15, 0x15, 0x11],
    // n
    [0x00, 0x00, 0x16, 0x19, 0x11, 0x11, 0x11],
    // o
    [0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E],
    // p
    [0x00, 0x00, 0x1E, 0x11, 0x1E, 0x10, 0x10],
    // q
    [0x00, 0x00, 0x0F, 0x11, 0x0F, 0x01, 0x01],
    // r
    [0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10],
    // s
    [0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E],
    // t
    [0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06],
    // u
    [0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D],
    // v
    [0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04],
    // w
    [0x00, 0x00, 0x11, 0x11, 0x15, 0x15, 0x0A],
    // x
    [0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11],
    // y
    [0x00, 0x00, 0x11, 0x11, 0x0F, 0x01, 0x0E],
    // z
    [0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F],
    // 0
    [0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E],
    // 1
    [0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x1F],
    // 2
    [0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F],
    // 3
    [0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E],
    // 4
    [0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02],
    // 5
    [0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E],
    // 6
    [0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E],
    // 7
    [0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
    // 8
    [0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E],
    // 9
    [0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C],
];

/// Glyph bitmap for `symbol_idx` in `font_id`. Font 1 dilates each row one
/// pixel to the right.
pub fn glyph(font_id: usize, symbol_idx: usize) -> [u8; GLYPH_H] {
    let base = BASE[symbol_idx];
    match font_id {
        0 => base,
        _ => {
            let mut g = base;
            for row in &mut g {
                *row |= *row >> 1;
            }
            g
        }
    }
}

/// Per-row horizontal slant offset in glyph pixels, applied at render time.
/// Row 0 is the glyph top. Font 0 is upright.
pub fn slant_offset(font_id: usize, rendered_row: usize, rendered_rows: usize) -> usize {
    if font_id == 0 {
        0
    } else {
        // Top of the glyph leans right by up to 1 pixel.
        ((rendered_rows - 1 - rendered_row) as f32 * 0.09).round() as usize
    }
}

pub fn glyph_for_char(font_id: usize, c: char) -> Option<[u8; GLYPH_H]> {
    Charset::standard().index_of(c).map(|i| glyph(font_id, i))
}
