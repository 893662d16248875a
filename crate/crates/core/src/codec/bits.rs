//! MSB-first bit-level reader and writer for fixed-width fields.

/// Accumulates values MSB-first and pads the final byte with zero bits.
#[derive(Debug, Default)]
pub struct BitWriter {
    bytes: Vec<u8>,
    /// Bits used in the last byte, 0..=7 (0 means byte-aligned).
    bit_used: u8,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter::default()
    }

    /// Append the low `width` bits of `value`, most significant first.
    pub fn put(&mut self, value: u64, width: u8) {
        debug_assert!(width <= 64);
        debug_assert!(width == 64 || value < (1u64 << width));
        let mut bits = width;
        while bits > 0 {
            if self.bit_used == 0 {
                self.bytes.push(0);
            }
            let room = 8 - self.bit_used;
            let take = room.min(bits);
            let shifted = (value >> (bits - take)) & ((1u64 << take) - 1);
            let last = self.bytes.last_mut().unwrap();
            *last |= (shifted as u8) << (room - take);
            self.bit_used = (self.bit_used + take) % 8;
            bits -= take;
        }
    }

    /// Zero-pad to a byte boundary and return the buffer.
    pub fn finish(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads fixed-width values MSB-first from a byte slice.
#[derive(Debug)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    /// Next bit to read, counted from the start of the slice.
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        BitReader { bytes, pos: 0 }
    }

    /// Read `width` bits as an unsigned value, or `None` if the input is
    /// exhausted.
    pub fn get(&mut self, width: u8) -> Option<u64> {
        debug_assert!(width <= 64);
        if self.pos + width as usize > self.bytes.len() * 8 {
            return None;
        }
        let mut value: u64 = 0;
        let mut bits = width;
        while bits > 0 {
            let byte = self.bytes[self.pos / 8];
            let offset = (self.pos % 8) as u8;
            let avail = 8 - offset;
            let take = avail.min(bits);
            let chunk = (byte >> (avail - take)) & ((1u16 << take) - 1) as u8;
            value = (value << take) | u64::from(chunk);
            self.pos += take as usize;
            bits -= take;
        }
        Some(value)
    }

    /// Bits left between the cursor and the end of the slice.
    pub fn remaining_bits(&self) -> usize {
        self.bytes.len() * 8 - self.pos
    }

    /// True when fewer than eight bits remain and all of them are zero,
    /// i.e. the tail is canonical padding.
    pub fn padding_is_canonical(&mut self) -> bool {
        let rem = self.remaining_bits();
        if rem >= 8 {
            return false;
        }
        if rem == 0 {
            return true;
        }
        matches!(self.get(rem as u8), Some(0))
    }
}
