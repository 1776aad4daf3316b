//! GPT-2 byte-to-unicode remapping.
//!
//! Printable bytes (`!`..=`~`, `¡`..=`¬`, `®`..=`ÿ`) map to the code point with
//! the same value. Every other byte is assigned, in increasing byte order, the
//! next code point starting at U+0100. The result is a bijection between the
//! 256 byte values and 256 printable characters, so any byte string can be
//! spelled with vocabulary symbols.

use std::sync::OnceLock;

struct Tables {
    forward: [char; 256],
    inverse: std::collections::HashMap<char, u8>,
}

fn is_printable(byte: u8) -> bool {
    matches!(byte, 33..=126 | 161..=172 | 174..=255)
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut forward = ['\0'; 256];
        let mut next = 256u32;
        for byte in 0..=255u8 {
            forward[byte as usize] = if is_printable(byte) {
                char::from(byte)
            } else {
                let c = char::from_u32(next).expect("code points 256..=323 are valid");
                next += 1;
                c
            };
        }
        let inverse = forward
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect();
        Tables { forward, inverse }
    })
}

/// Remapped character for a single byte.
pub fn byte_to_char(byte: u8) -> char {
    tables().forward[byte as usize]
}

/// Inverse of [`byte_to_char`]; `None` for characters outside the remap alphabet.
pub fn char_to_byte(c: char) -> Option<u8> {
    tables().inverse.get(&c).copied()
}

/// Spell a byte string in the remapped alphabet.
pub fn encode_bytes(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| byte_to_char(b)).collect()
}

/// Invert the remap. Fails on the first character outside the alphabet.
pub fn decode_str(symbol: &str) -> Result<Vec<u8>, char> {
    symbol.chars().map(|c| char_to_byte(c).ok_or(c)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printable_bytes_map_to_themselves() {
        assert_eq!(byte_to_char(b'!'), '!');
        assert_eq!(byte_to_char(b'~'), '~');
        assert_eq!(byte_to_char(0xA1), '\u{A1}');
        assert_eq!(byte_to_char(0xAC), '\u{AC}');
        assert_eq!(byte_to_char(0xAE), '\u{AE}');
        assert_eq!(byte_to_char(0xFF), '\u{FF}');
    }

    #[test]
    fn non_printable_bytes_are_shifted_in_order() {
        // 0..=32 come first, then 127..=160, then 173.
        assert_eq!(byte_to_char(0), '\u{100}');
        assert_eq!(byte_to_char(b' '), '\u{120}'); // the familiar 'Ġ'
        assert_eq!(byte_to_char(b'\n'), '\u{10A}'); // 'Ċ'
        assert_eq!(byte_to_char(127), '\u{121}');
        assert_eq!(byte_to_char(160), '\u{142}');
        assert_eq!(byte_to_char(173), '\u{143}');
    }

    #[test]
    fn remap_is_a_bijection() {
        let mut seen = std::collections::HashSet::new();
        for b in 0..=255u8 {
            let c = byte_to_char(b);
            assert!(seen.insert(c));
            assert_eq!(char_to_byte(c), Some(b));
        }
        assert_eq!(char_to_byte('a'), Some(b'a'));
        assert_eq!(char_to_byte('\u{144}'), None);
    }

    #[test]
    fn decode_rejects_foreign_chars() {
        assert_eq!(decode_str("Ġx"), Ok(vec![b' ', b'x']));
        assert_eq!(decode_str("a\u{2603}"), Err('\u{2603}'));
    }
}
