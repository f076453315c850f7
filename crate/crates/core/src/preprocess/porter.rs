//! Porter suffix stripping, following the original five-step rule tables.
//!
//! Within each step the longest matching suffix wins; if its condition fails
//! no other rule in that step is tried. Measure `m` counts vowel-consonant
//! pairs in the candidate stem, with `y` acting as a vowel after a consonant.
//! Words of one or two letters are returned unchanged.

/// Stems a lowercase ASCII alphabetic token. Anything else (sentinels,
/// numbers, tokens with punctuation) is returned unchanged.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_owned();
    }
    let mut w = token.as_bytes().to_vec();
    step1a(&mut w);
    step1b(&mut w);
    step1c(&mut w);
    step2(&mut w);
    step3(&mut w);
    step4(&mut w);
    step5(&mut w);
    String::from_utf8(w).expect("stemming preserves ascii")
}

fn is_cons(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => false,
        b'y' => i == 0 || !is_cons(w, i - 1),
        _ => true,
    }
}

/// Number of vowel-consonant pairs: [C](VC)^m[V].
fn measure(w: &[u8]) -> usize {
    let n = w.len();
    let mut i = 0;
    while i < n && is_cons(w, i) {
        i += 1;
    }
    let mut m = 0;
    loop {
        while i < n && !is_cons(w, i) {
            i += 1;
        }
        if i == n {
            return m;
        }
        while i < n && is_cons(w, i) {
            i += 1;
        }
        m += 1;
        if i == n {
            return m;
        }
    }
}

fn has_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| !is_cons(w, i))
}

/// *d condition: stem ends in a doubled consonant.
fn ends_double_cons(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && is_cons(w, n - 1)
}

/// *o condition: stem ends consonant-vowel-consonant and the final consonant
/// is not w, x, or y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && is_cons(w, n - 3)
        && !is_cons(w, n - 2)
        && is_cons(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

/// Longest suffix in `table` that matches `w`, if any. Suffixes within a
/// table are distinct, so the longest match is unique.
fn find_rule<'t>(w: &[u8], table: &'t [(&[u8], &[u8])]) -> Option<&'t (&'t [u8], &'t [u8])> {
    table
        .iter()
        .filter(|(suffix, _)| w.ends_with(suffix))
        .max_by_key(|(suffix, _)| suffix.len())
}

fn rewrite(w: &mut Vec<u8>, suffix_len: usize, replacement: &[u8]) {
    w.truncate(w.len() - suffix_len);
    w.extend_from_slice(replacement);
}

fn step1a(w: &mut Vec<u8>) {
    if w.ends_with(b"sses") || w.ends_with(b"ies") {
        w.truncate(w.len() - 2);
    } else if !w.ends_with(b"ss") && w.ends_with(b"s") {
        w.truncate(w.len() - 1);
    }
}

fn step1b(w: &mut Vec<u8>) {
    if w.ends_with(b"eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            w.truncate(w.len() - 1);
        }
        return;
    }
    let cut = if w.ends_with(b"ed") {
        2
    } else if w.ends_with(b"ing") {
        3
    } else {
        return;
    };
    if !has_vowel(&w[..w.len() - cut]) {
        return;
    }
    w.truncate(w.len() - cut);
    // Cleanup after a removed ed/ing: restore e, undouble, or close a short
    // stem with e.
    if w.ends_with(b"at") || w.ends_with(b"bl") || w.ends_with(b"iz") {
        w.push(b'e');
    } else if ends_double_cons(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.truncate(w.len() - 1);
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step1c(w: &mut [u8]) {
    if w.ends_with(b"y") && has_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

const STEP2: &[(&[u8], &[u8])] = &[
    (b"ational", b"ate"),
    (b"tional", b"tion"),
    (b"enci", b"ence"),
    (b"anci", b"ance"),
    (b"izer", b"ize"),
    (b"abli", b"able"),
    (b"alli", b"al"),
    (b"entli", b"ent"),
    (b"eli", b"e"),
    (b"ousli", b"ous"),
    (b"ization", b"ize"),
    (b"ation", b"ate"),
    (b"ator", b"ate"),
    (b"alism", b"al"),
    (b"iveness", b"ive"),
    (b"fulness", b"ful"),
    (b"ousness", b"ous"),
    (b"aliti", b"al"),
    (b"iviti", b"ive"),
    (b"biliti", b"ble"),
];

fn step2(w: &mut Vec<u8>) {
    if let Some(&(suffix, replacement)) = find_rule(w, STEP2) {
        if measure(&w[..w.len() - suffix.len()]) > 0 {
            rewrite(w, suffix.len(), replacement);
        }
    }
}

const STEP3: &[(&[u8], &[u8])] = &[
    (b"icate", b"ic"),
    (b"ative", b""),
    (b"alize", b"al"),
    (b"iciti", b"ic"),
    (b"ical", b"ic"),
    (b"ful", b""),
    (b"ness", b""),
];

fn step3(w: &mut Vec<u8>) {
    if let Some(&(suffix, replacement)) = find_rule(w, STEP3) {
        if measure(&w[..w.len() - suffix.len()]) > 0 {
            rewrite(w, suffix.len(), replacement);
        }
    }
}

const STEP4: &[(&[u8], &[u8])] = &[
    (b"al", b""),
    (b"ance", b""),
    (b"ence", b""),
    (b"er", b""),
    (b"ic", b""),
    (b"able", b""),
    (b"ible", b""),
    (b"ant", b""),
    (b"ement", b""),
    (b"ment", b""),
    (b"ent", b""),
    (b"ion", b""),
    (b"ou", b""),
    (b"ism", b""),
    (b"ate", b""),
    (b"iti", b""),
    (b"ous", b""),
    (b"ive", b""),
    (b"ize", b""),
];

fn step4(w: &mut Vec<u8>) {
    if let Some(&(suffix, _)) = find_rule(w, STEP4) {
        let stem = w.len() - suffix.len();
        // ion only drops after s or t.
        let fires = measure(&w[..stem]) > 1
            && (suffix != b"ion" || matches!(w[..stem].last(), Some(b's' | b't')));
        if fires {
            w.truncate(stem);
        }
    }
}

fn step5(w: &mut Vec<u8>) {
    if w.ends_with(b"e") {
        let stem = w.len() - 1;
        let m = measure(&w[..stem]);
        if m > 1 || (m == 1 && !ends_cvc(&w[..stem])) {
            w.truncate(stem);
        }
    }
    // Trailing vowels never close a VC pair, so measuring the whole word here
    // equals measuring the stem before the dropped l.
    if ends_double_cons(w) && w[w.len() - 1] == b'l' && measure(w) > 1 {
        w.truncate(w.len() - 1);
    }
}
