//! Fixed-length bitset over point codes, with the "next set bit at or
//! after" scan the search loop needs.

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CodeMask {
    len: u32,
    words: Vec<u64>,
}

impl CodeMask {
    pub fn empty(len: u32) -> Self {
        CodeMask {
            len,
            words: vec![0; (len as usize).div_ceil(64)],
        }
    }

    pub fn full(len: u32) -> Self {
        let mut m = Self::empty(len);
        m.words.iter_mut().for_each(|w| *w = u64::MAX);
        m.trim_tail();
        m
    }

    fn trim_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    #[inline]
    pub fn contains(&self, i: u32) -> bool {
        self.words[(i >> 6) as usize] >> (i & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, i: u32) {
        self.words[(i >> 6) as usize] |= 1 << (i & 63);
    }

    #[inline]
    pub fn remove(&mut self, i: u32) {
        self.words[(i >> 6) as usize] &= !(1 << (i & 63));
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of set bits with index `>= from`.
    pub fn count_from(&self, from: u32) -> usize {
        if from >= self.len {
            return 0;
        }
        let w = (from >> 6) as usize;
        let head = (self.words[w] >> (from & 63)).count_ones() as usize;
        head + self.words[w + 1..]
            .iter()
            .map(|x| x.count_ones() as usize)
            .sum::<usize>()
    }

    /// Smallest set bit with index `>= from`.
    #[inline]
    pub fn next_from(&self, from: u32) -> Option<u32> {
        if from >= self.len {
            return None;
        }
        let mut w = (from >> 6) as usize;
        let mut word = self.words[w] & (u64::MAX << (from & 63));
        loop {
            if word != 0 {
                return Some((w as u32) << 6 | word.trailing_zeros());
            }
            w += 1;
            if w == self.words.len() {
                return None;
            }
            word = self.words[w];
        }
    }

    pub fn copy_from(&mut self, other: &CodeMask) {
        self.len = other.len;
        self.words.clear();
        self.words.extend_from_slice(&other.words);
    }

    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        let mut next = self.next_from(0);
        std::iter::from_fn(move || {
            let cur = next?;
            next = self.next_from(cur + 1);
            Some(cur)
        })
    }
}

impl std::fmt::Debug for CodeMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
