use serde::{Deserialize, Serialize};

/// Byte offsets of one sentence. `start..end` is the trimmed content;
/// `extent_start..extent_end` also owns the whitespace up to the next
/// sentence, so the extents of all sentences tile the input exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub start: usize,
    pub end: usize,
    pub extent_start: usize,
    pub extent_end: usize,
}

impl Sentence {
    pub fn text<'a>(&self, source: &'a str) -> &'a str {
        &source[self.start..self.end]
    }

    pub fn contains(&self, offset: usize) -> bool {
        (self.start..self.end).contains(&offset)
    }
}

const ABBREVIATIONS: &[&str] = &[
    "approx.", "dr.", "e.g.", "etc.", "fig.", "i.e.", "mr.", "mrs.", "ms.", "no.", "st.", "vs.",
];

fn is_guarded(line: &str, dot: usize) -> bool {
    let word_start = line[..dot].rfind(char::is_whitespace).map_or(0, |i| i + 1);
    let word = line[word_start..=dot].to_ascii_lowercase();
    if ABBREVIATIONS.contains(&word.as_str()) {
        return true;
    }
    // list markers such as "2." at the start of a line
    let bare = &word[..word.len() - 1];
    line[..word_start].trim().is_empty() && !bare.is_empty() && bare.bytes().all(|b| b.is_ascii_digit())
}

/// Rule-based sentence splitting: every line break ends a sentence, and so
/// does `.`, `!` or `?` followed by whitespace or the end of the text unless
/// the word is a known abbreviation or a line-initial list number.
pub fn split_sentences(text: &str) -> Vec<Sentence> {
    let mut spans = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let body = line.trim_end_matches(['\n', '\r']);
        let mut seg_start = 0;
        let bytes = body.as_bytes();
        for (i, &b) in bytes.iter().enumerate() {
            if !matches!(b, b'.' | b'!' | b'?') {
                continue;
            }
            let at_break = i + 1 == bytes.len() || bytes[i + 1].is_ascii_whitespace();
            if !at_break || (b == b'.' && is_guarded(body, i)) {
                continue;
            }
            push_trimmed(&mut spans, body, line_start, seg_start, i + 1);
            seg_start = i + 1;
        }
        push_trimmed(&mut spans, body, line_start, seg_start, bytes.len());
        line_start += line.len();
    }

    let mut out = Vec::with_capacity(spans.len());
    for (k, &(start, end)) in spans.iter().enumerate() {
        let extent_start = if k == 0 { 0 } else { start };
        let extent_end = spans.get(k + 1).map_or(text.len(), |&(next, _)| next);
        out.push(Sentence { start, end, extent_start, extent_end });
    }
    out
}

fn push_trimmed(spans: &mut Vec<(usize, usize)>, line: &str, offset: usize, from: usize, to: usize) {
    let piece = &line[from..to];
    let lead = piece.len() - piece.trim_start().len();
    let trimmed = piece.trim();
    if !trimmed.is_empty() {
        let start = offset + from + lead;
        spans.push((start, start + trimmed.len()));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(s: &str) -> Vec<&str> {
        split_sentences(s).iter().map(|x| x.text(s)).collect()
    }

    fn round_trip(s: &str) -> String {
        split_sentences(s).iter().map(|x| &s[x.extent_start..x.extent_end]).collect()
    }

    #[test]
    fn examples() {
        assert_eq!(texts("A. B."), vec!["A.", "B."]);
        let s = "L1-L2: There is no disc herniation. No spinal canal or foraminal narrowing";
        assert_eq!(texts(s), vec!["L1-L2: There is no disc herniation.", "No spinal canal or foraminal narrowing"]);
        assert!(split_sentences("").is_empty());
        assert!(split_sentences("  \n ").is_empty());
    }

    #[test]
    fn lines_guards_and_decimals() {
        let s = "FINDINGS:\n2. Disc bulge measuring 2.5 mm. Dr. Smith reviewed.\nIMPRESSION: stable";
        assert_eq!(
            texts(s),
            vec!["FINDINGS:", "2. Disc bulge measuring 2.5 mm.", "Dr. Smith reviewed.", "IMPRESSION: stable"]
        );
    }

    #[test]
    fn extents_tile_input() {
        for s in ["  A. B.  \n\nC?\r\nD", "X", "no terminator here", "A.\n", "\n\nA.  B!"] {
            assert_eq!(round_trip(s), s, "{s:?}");
        }
    }
}
