use serde::{Deserialize, Serialize};

use super::segment::MotionSegment;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentBucket {
    pub segment: MotionSegment,
    /// Sentence indices in document order.
    pub sentences: Vec<usize>,
    /// The sentences joined with single spaces.
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SegmentedReport {
    pub id: String,
    /// Non-empty buckets in segment order.
    pub buckets: Vec<SegmentBucket>,
    /// Sentences with no segment of their own and none before them.
    pub unassigned: Vec<usize>,
    pub unassigned_text: String,
}

impl SegmentedReport {
    /// True when not a single sentence could be tied to a motion segment.
    pub fn no_segments_found(&self) -> bool {
        self.buckets.is_empty()
    }

    pub fn bucket(&self, segment: MotionSegment) -> Option<&SegmentBucket> {
        self.buckets.iter().find(|b| b.segment == segment)
    }
}

/// Groups sentences by motion segment. A sentence joins the bucket of every
/// segment it names; a sentence naming none joins the most recently named
/// segment, or the unassigned bucket when no segment came before it.
pub fn assemble_segments<S: AsRef<str>>(sentences: &[S], mentions: &[Vec<MotionSegment>]) -> SegmentedReport {
    assert_eq!(sentences.len(), mentions.len(), "one mention list per sentence");
    let mut members: Vec<(MotionSegment, Vec<usize>)> = Vec::new();
    let mut unassigned = Vec::new();
    let mut last: Option<MotionSegment> = None;
    for (i, found) in mentions.iter().enumerate() {
        let mut own: Vec<MotionSegment> = Vec::new();
        for &m in found {
            if m != MotionSegment::NoSegment && !own.contains(&m) {
                own.push(m);
            }
        }
        let targets = if own.is_empty() { last.into_iter().collect() } else { own.clone() };
        if let Some(&m) = own.last() {
            last = Some(m);
        }
        if targets.is_empty() {
            unassigned.push(i);
        }
        for seg in targets {
            match members.iter_mut().find(|(s, _)| *s == seg) {
                Some((_, v)) => v.push(i),
                None => members.push((seg, vec![i])),
            }
        }
    }
    members.sort_by_key(|(s, _)| *s);
    let join = |idx: &[usize]| idx.iter().map(|&i| sentences[i].as_ref()).collect::<Vec<_>>().join(" ");
    SegmentedReport {
        id: String::new(),
        buckets: members
            .into_iter()
            .map(|(segment, sentences)| SegmentBucket { segment, text: join(&sentences), sentences })
            .collect(),
        unassigned_text: join(&unassigned),
        unassigned,
    }
}
