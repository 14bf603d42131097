//! Fixed-length packed bit vector used for ±1 variables.
//!
//! Bit value `0` encodes `+1`, bit value `1` encodes `-1`, so products of
//! signs are XORs of bits.

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PackedBits {
    len: usize,
    words: Vec<u64>,
}

impl PackedBits {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut bits = Self::zeros(len);
        for w in bits.words.iter_mut() {
            *w = u64::MAX;
        }
        bits.clear_tail();
        bits
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut bits = Self::zeros(len);
        for i in 0..len {
            if f(i) {
                bits.set(i, true);
            }
        }
        bits
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i & 63);
        if value {
            self.words[i >> 6] |= mask;
        } else {
            self.words[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn toggle(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i >> 6] ^= 1u64 << (i & 63);
    }

    /// Value as a ±1 sign.
    #[inline]
    pub fn sign(&self, i: usize) -> i8 {
        if self.get(i) {
            -1
        } else {
            1
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn xor_assign(&mut self, other: &PackedBits) {
        assert_eq!(self.len, other.len, "bit vector length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= *b;
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let tz = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(wi * 64 + tz)
                }
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Little-endian byte payload, bit `i` stored at byte `i / 8`, bit `i % 8`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(n);
        for w in &self.words {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.truncate(n);
        out
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> Option<Self> {
        if bytes.len() != len.div_ceil(8) {
            return None;
        }
        let mut bits = Self::zeros(len);
        for (wi, chunk) in bytes.chunks(8).enumerate() {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            bits.words[wi] = u64::from_le_bytes(buf);
        }
        let before = bits.words.clone();
        bits.clear_tail();
        // stray bits past `len` mean the payload was not produced by `to_bytes`
        if before != bits.words {
            return None;
        }
        Some(bits)
    }

    fn clear_tail(&mut self) {
        let rem = self.len & 63;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ones_has_clean_tail() {
        let b = PackedBits::ones(70);
        assert_eq!(b.count_ones(), 70);
        assert_eq!(b.iter_ones().count(), 70);
    }

    #[test]
    fn from_bytes_rejects_stray_tail_bits() {
        assert!(PackedBits::from_bytes(3, &[0b1000]).is_none());
        assert!(PackedBits::from_bytes(3, &[0b101]).is_some());
        assert!(PackedBits::from_bytes(9, &[0]).is_none());
    }

    proptest! {
        #[test]
        fn byte_round_trip(v in proptest::collection::vec(any::<bool>(), 0..300)) {
            let bits = PackedBits::from_fn(v.len(), |i| v[i]);
            let back = PackedBits::from_bytes(v.len(), &bits.to_bytes()).unwrap();
            prop_assert_eq!(&back, &bits);
            let ones: Vec<usize> = bits.iter_ones().collect();
            let expect: Vec<usize> = (0..v.len()).filter(|&i| v[i]).collect();
            prop_assert_eq!(ones, expect);
        }
    }
}
