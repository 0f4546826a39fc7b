//! Classic Porter stemmer (the original 1980 rule set).
//!
//! Operates on case-folded ASCII words; any word containing a character
//! outside `a..=z` (digits, hyphens, non-ASCII letters) is returned unchanged
//! — stemming such tokens is undefined under the original rules and leaving
//! them intact keeps tokenization lossless.

/// Stem one case-folded word.
pub fn stem(word: &str) -> String {
    let bytes = word.as_bytes();
    if bytes.len() <= 2 || !bytes.iter().all(|b| b.is_ascii_lowercase()) {
        return word.to_string();
    }
    let mut w = Stemmer {
        b: bytes.to_vec(),
    };
    w.step_1a();
    w.step_1b();
    w.step_1c();
    w.step_2();
    w.step_3();
    w.step_4();
    w.step_5a();
    w.step_5b();
    String::from_utf8(w.b).expect("ascii in, ascii out")
}

struct Stemmer {
    b: Vec<u8>,
}

impl Stemmer {
    /// Is the letter at `i` a consonant? Vowels are a,e,i,o,u; `y` counts as
    /// a vowel when preceded by a consonant.
    fn is_consonant(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => {
                if i == 0 {
                    true
                } else {
                    !self.is_consonant(i - 1)
                }
            }
            _ => true,
        }
    }

    /// The measure m of the first `len` letters: the number of VC sequences
    /// in the form [C](VC)^m[V].
    fn measure(&self, len: usize) -> usize {
        let mut m = 0;
        let mut i = 0;
        // Skip the optional leading consonant run.
        while i < len && self.is_consonant(i) {
            i += 1;
        }
        loop {
            // Vowel run.
            while i < len && !self.is_consonant(i) {
                i += 1;
            }
            if i >= len {
                return m;
            }
            // Consonant run closes one VC.
            while i < len && self.is_consonant(i) {
                i += 1;
            }
            m += 1;
            if i >= len {
                return m;
            }
        }
    }

    /// Does the first `len`-letter stem contain a vowel?
    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.is_consonant(i))
    }

    /// Does the first `len`-letter stem end in a double consonant?
    fn ends_double_consonant(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_consonant(len - 1)
    }

    /// *o condition: stem ends consonant-vowel-consonant where the final
    /// consonant is not w, x or y.
    fn ends_cvc(&self, len: usize) -> bool {
        if len < 3 {
            return false;
        }
        self.is_consonant(len - 3)
            && !self.is_consonant(len - 2)
            && self.is_consonant(len - 1)
            && !matches!(self.b[len - 1], b'w' | b'x' | b'y')
    }

    fn ends_with(&self, suffix: &str) -> bool {
        self.b.ends_with(suffix.as_bytes())
    }

    /// Length of the stem left if `suffix` were removed.
    fn stem_len(&self, suffix: &str) -> usize {
        self.b.len() - suffix.len()
    }

    fn truncate(&mut self, len: usize) {
        self.b.truncate(len);
    }

    fn replace_suffix(&mut self, suffix: &str, replacement: &str) {
        let keep = self.stem_len(suffix);
        self.b.truncate(keep);
        self.b.extend_from_slice(replacement.as_bytes());
    }

    /// Apply the first matching (suffix, replacement) rule whose stem measure
    /// exceeds `min_m`. Returns true if any suffix *matched* (whether or not
    /// the condition passed), per the original algorithm's longest-match-stop.
    fn rule_list(&mut self, rules: &[(&str, &str)], min_m: usize) -> bool {
        for (suffix, replacement) in rules {
            if self.ends_with(suffix) {
                if self.measure(self.stem_len(suffix)) > min_m {
                    self.replace_suffix(suffix, replacement);
                }
                return true;
            }
        }
        false
    }

    fn step_1a(&mut self) {
        if self.ends_with("sses") {
            self.replace_suffix("sses", "ss");
        } else if self.ends_with("ies") {
            self.replace_suffix("ies", "i");
        } else if self.ends_with("ss") {
            // Unchanged.
        } else if self.ends_with("s") {
            self.replace_suffix("s", "");
        }
    }

    fn step_1b(&mut self) {
        if self.ends_with("eed") {
            if self.measure(self.stem_len("eed")) > 0 {
                self.replace_suffix("eed", "ee");
            }
            return;
        }
        let removed = if self.ends_with("ed") && self.has_vowel(self.stem_len("ed")) {
            self.replace_suffix("ed", "");
            true
        } else if self.ends_with("ing") && self.has_vowel(self.stem_len("ing")) {
            self.replace_suffix("ing", "");
            true
        } else {
            false
        };
        if !removed {
            return;
        }
        // Cleanup pass after removing -ed/-ing.
        if self.ends_with("at") {
            self.replace_suffix("at", "ate");
        } else if self.ends_with("bl") {
            self.replace_suffix("bl", "ble");
        } else if self.ends_with("iz") {
            self.replace_suffix("iz", "ize");
        } else if self.ends_double_consonant(self.b.len())
            && !matches!(self.b[self.b.len() - 1], b'l' | b's' | b'z')
        {
            let len = self.b.len();
            self.truncate(len - 1);
        } else if self.measure(self.b.len()) == 1 && self.ends_cvc(self.b.len()) {
            self.b.push(b'e');
        }
    }

    fn step_1c(&mut self) {
        if self.ends_with("y") && self.has_vowel(self.stem_len("y")) {
            let len = self.b.len();
            self.b[len - 1] = b'i';
        }
    }

    fn step_2(&mut self) {
        self.rule_list(
            &[
                ("ational", "ate"),
                ("tional", "tion"),
                ("enci", "ence"),
                ("anci", "ance"),
                ("izer", "ize"),
                ("abli", "able"),
                ("alli", "al"),
                ("entli", "ent"),
                ("eli", "e"),
                ("ousli", "ous"),
                ("ization", "ize"),
                ("ation", "ate"),
                ("ator", "ate"),
                ("alism", "al"),
                ("iveness", "ive"),
                ("fulness", "ful"),
                ("ousness", "ous"),
                ("aliti", "al"),
                ("iviti", "ive"),
                ("biliti", "ble"),
            ],
            0,
        );
    }

    fn step_3(&mut self) {
        self.rule_list(
            &[
                ("icate", "ic"),
                ("ative", ""),
                ("alize", "al"),
                ("iciti", "ic"),
                ("ical", "ic"),
                ("ful", ""),
                ("ness", ""),
            ],
            0,
        );
    }

    fn step_4(&mut self) {
        // "ion" requires the stem to end in s or t in addition to m > 1.
        for suffix in [
            "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement", "ment", "ent",
        ] {
            if self.ends_with(suffix) {
                if self.measure(self.stem_len(suffix)) > 1 {
                    self.replace_suffix(suffix, "");
                }
                return;
            }
        }
        if self.ends_with("ion") {
            let keep = self.stem_len("ion");
            if self.measure(keep) > 1 && keep >= 1 && matches!(self.b[keep - 1], b's' | b't') {
                self.replace_suffix("ion", "");
            }
            return;
        }
        for suffix in ["ou", "ism", "ate", "iti", "ous", "ive", "ize"] {
            if self.ends_with(suffix) {
                if self.measure(self.stem_len(suffix)) > 1 {
                    self.replace_suffix(suffix, "");
                }
                return;
            }
        }
    }

    fn step_5a(&mut self) {
        if self.ends_with("e") {
            let keep = self.stem_len("e");
            let m = self.measure(keep);
            if m > 1 || (m == 1 && !self.ends_cvc(keep)) {
                self.truncate(keep);
            }
        }
    }

    fn step_5b(&mut self) {
        let len = self.b.len();
        if self.measure(len) > 1 && self.ends_double_consonant(len) && self.b[len - 1] == b'l' {
            self.truncate(len - 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::stem;

    /// Reference pairs from the published test vocabulary of the original
    /// algorithm, chosen to exercise every step.
    #[test]
    fn canonical_reference_pairs() {
        let pairs = [
            // step 1a
            ("caresses", "caress"),
            ("ponies", "poni"),
            ("ties", "ti"),
            ("caress", "caress"),
            ("cats", "cat"),
            // step 1b (+ cleanup)
            ("feed", "feed"),
            ("agreed", "agre"),
            ("plastered", "plaster"),
            ("bled", "bled"),
            ("motoring", "motor"),
            ("sing", "sing"),
            ("hopping", "hop"),
            ("tanned", "tan"),
            ("falling", "fall"),
            ("hissing", "hiss"),
            ("fizzed", "fizz"),
            ("failing", "fail"),
            ("filing", "file"),
            // step 1c
            ("happy", "happi"),
            ("sky", "sky"),
            // multi-step showcases
            ("generalizations", "gener"),
            ("oscillators", "oscil"),
            ("relational", "relat"),
            ("conditional", "condit"),
            ("triplicate", "triplic"),
            ("controlling", "control"),
        ];
        for (word, expected) in pairs {
            assert_eq!(stem(word), expected, "stem({word:?})");
        }
    }

    #[test]
    fn study_and_studies_share_a_stem() {
        assert_eq!(stem("studies"), "studi");
        assert_eq!(stem("study"), "studi");
    }

    #[test]
    fn aging_and_ageing_share_a_stem() {
        assert_eq!(stem("aging"), stem("ageing"));
        assert_eq!(stem("aging"), "ag");
    }

    #[test]
    fn mice_and_mouse_do_not_share_a_stem() {
        // Stemming is not lemmatization.
        assert_ne!(stem("mice"), stem("mouse"));
    }

    #[test]
    fn short_and_non_alpha_words_pass_through() {
        assert_eq!(stem(""), "");
        assert_eq!(stem("ox"), "ox");
        assert_eq!(stem("state-of-the-art"), "state-of-the-art");
        assert_eq!(stem("covid19"), "covid19");
    }
}
