//! Sentence banks for the report generator. Every finding template fixes the
//! severity class of the tasks it names, so gold labels follow from the
//! template ids alone.

use std::sync::OnceLock;

use crate::pipeline::BodyPart;

pub type TemplateId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    /// May contain `{M}`, replaced by a segment mention.
    pub text: &'static str,
    /// `(task, class)` pairs the sentence determines.
    pub sets: Vec<(&'static str, usize)>,
}

type Bank = (&'static str, usize, &'static [&'static str]);

const STENOSIS: &[Bank] = &[
    ("stenosis", 0, &[
        "No spinal canal stenosis.",
        "The central canal is patent.",
        "No central canal narrowing.",
        "Mild narrowing of the central canal.",
        "Mild spinal canal stenosis.",
        "The spinal canal is normal in caliber.",
        "There is no significant canal stenosis.",
        "Minimal central canal narrowing.",
    ]),
    ("stenosis", 1, &[
        "Moderate spinal canal stenosis.",
        "There is moderate central canal narrowing.",
        "Moderate narrowing of the central canal.",
        "The central canal is moderately narrowed.",
        "Moderate central stenosis is present.",
        "Combined findings result in moderate canal stenosis.",
        "Mild to moderate central canal stenosis.",
        "There is moderate narrowing of the thecal sac.",
    ]),
    ("stenosis", 2, &[
        "Severe spinal canal stenosis.",
        "There is severe central canal narrowing.",
        "Severe narrowing of the central canal.",
        "The thecal sac is severely compressed.",
        "Marked central canal stenosis.",
        "Moderate to severe central canal stenosis.",
        "Critical central canal stenosis.",
        "The central canal is severely narrowed.",
    ]),
];

const LUMBAR_DISC: &[Bank] = &[
    ("disc", 0, &[
        "No disc herniation.",
        "There is no disc herniation.",
        "Mild disc bulge.",
        "Minimal diffuse disc bulge.",
        "The disc is normal.",
        "No focal disc protrusion.",
        "Mild disc desiccation without herniation.",
        "Normal disc height and signal.",
    ]),
    ("disc", 1, &[
        "Moderate disc herniation.",
        "There is a moderate central disc protrusion.",
        "Moderate broad-based disc bulge.",
        "A moderate posterior disc protrusion is present.",
        "Moderate left paracentral disc herniation.",
        "Moderate right paracentral disc protrusion.",
        "There is a moderate disc herniation.",
        "Disc protrusion of moderate size.",
    ]),
    ("disc", 2, &[
        "Large disc extrusion.",
        "There is a large central disc extrusion.",
        "Severe disc herniation.",
        "A large disc herniation is present.",
        "Large left paracentral disc extrusion.",
        "Large right paracentral disc extrusion with caudal migration.",
        "Severe posterior disc herniation.",
        "There is a large extruded disc fragment.",
    ]),
];

const NERVE: &[Bank] = &[
    ("nerve", 0, &[
        "No nerve root impingement.",
        "The nerve roots are free.",
        "No nerve root compression.",
        "The exiting nerve roots are unremarkable.",
        "No impingement of the traversing nerve root.",
        "Nerve roots are not displaced.",
        "No neural impingement.",
        "The descending nerve roots are normal.",
    ]),
    ("nerve", 1, &[
        "There is impingement of the traversing nerve root.",
        "The exiting nerve root is compressed.",
        "Nerve root impingement is present.",
        "The descending nerve root is displaced and compressed.",
        "Contact and compression of the left nerve root.",
        "Compression of the right traversing nerve root.",
        "The exiting nerve root is impinged.",
        "Findings result in nerve root impingement.",
    ]),
];

const CERVICAL_DISC: &[Bank] = &[
    ("disc", 0, &[
        "No disc herniation.",
        "No disc bulge.",
        "Mild disc osteophyte complex.",
        "Minimal posterior disc bulge.",
        "The disc is preserved.",
        "No focal disc protrusion.",
        "Mild disc space narrowing without herniation.",
        "Normal disc height and signal.",
    ]),
    ("disc", 1, &[
        "Moderate disc osteophyte complex.",
        "There is a moderate central disc protrusion.",
        "Moderate broad-based disc bulge.",
        "A moderate posterior disc herniation is present.",
        "Moderate left paracentral disc protrusion.",
        "Moderate right paracentral disc osteophyte complex.",
        "There is a moderate disc herniation.",
        "Disc protrusion of moderate size.",
    ]),
    ("disc", 2, &[
        "Large disc osteophyte complex.",
        "There is a large central disc extrusion.",
        "Severe disc herniation.",
        "A large disc herniation is present.",
        "Large left paracentral disc extrusion.",
        "Large right paracentral disc osteophyte complex.",
        "Severe posterior disc herniation.",
        "There is a large extruded disc fragment.",
    ]),
];

const CORD: &[Bank] = &[
    ("cord", 0, &[
        "No cord compression.",
        "The spinal cord is normal in signal.",
        "No cord signal abnormality.",
        "The cord is not compressed.",
        "Normal cord caliber.",
        "No deformity of the cord.",
        "There is no cord flattening.",
        "The cervical cord is unremarkable.",
    ]),
    ("cord", 1, &[
        "There is flattening of the cord.",
        "Cord compression is present.",
        "Abnormal cord signal is noted.",
        "The cord is compressed.",
        "There is cord signal change.",
        "Mild flattening of the ventral cord.",
        "Deformity of the cord with signal change.",
        "The spinal cord is compressed and flattened.",
    ]),
];

const FORAMINAL: &[Bank] = &[
    ("foraminal", 0, &[
        "No foraminal narrowing.",
        "Mild left foraminal narrowing.",
        "Moderate right foraminal stenosis.",
        "The neural foramina are patent.",
        "Mild bilateral foraminal narrowing.",
        "Moderate bilateral foraminal narrowing.",
        "No neuroforaminal stenosis.",
        "Foramina are widely patent.",
    ]),
    ("foraminal", 1, &[
        "Severe left foraminal stenosis.",
        "Severe right foraminal narrowing.",
        "Severe bilateral foraminal stenosis.",
        "There is severe neuroforaminal narrowing.",
        "The left neural foramen is severely narrowed.",
        "The right neural foramen is severely narrowed.",
        "Severe foraminal stenosis bilaterally.",
        "Marked bilateral neuroforaminal narrowing.",
    ]),
];

/// Whole-segment normal findings; they set every task to class 0.
const LUMBAR_NORMAL: &[&str] = &[
    "There is no disc herniation. No spinal canal or foraminal narrowing.",
    "Normal.",
    "Unremarkable.",
    "No disc herniation, canal stenosis or nerve root impingement.",
    "Normal disc. No stenosis or nerve root compression.",
    "No disc bulge or herniation. The canal and nerve roots are normal.",
    "No significant abnormality.",
    "Normal disc without stenosis or nerve root impingement.",
];

const CERVICAL_NORMAL: &[&str] = &[
    "Normal; no disc herniation or bulge. No central canal stenosis or neuroforaminal narrowing.",
    "Normal.",
    "Unremarkable.",
    "No disc herniation, cord compression or stenosis.",
    "Normal disc. No canal or foraminal stenosis. The cord is normal.",
    "No disc bulge. The canal, cord and foramina are normal.",
    "No significant abnormality.",
    "Normal disc without stenosis or cord compression.",
];

/// Impression items restating a finding at a named segment.
const IMPRESSION: &[Bank] = &[
    ("stenosis", 1, &["Moderate central canal stenosis at {M}.", "Moderate spinal stenosis at {M}."]),
    ("stenosis", 2, &["Severe central canal stenosis at {M}.", "Severe spinal stenosis at {M}."]),
    ("disc", 1, &["Moderate disc herniation at {M}.", "Moderate disc protrusion at {M}."]),
    ("disc", 2, &["Large disc extrusion at {M}.", "Severe disc herniation at {M}."]),
];

/// Label-neutral sentences naming two segments.
pub const MULTI_SEGMENT: &[&str] = &[
    "Mild facet arthropathy at {M} and {N}.",
    "Facet hypertrophy is noted at {M} and {N}.",
    "Ligamentum flavum thickening at {M} and {N}.",
];

/// Label-neutral sentences inside a segment block.
pub const NEUTRAL_FINDINGS: &[&str] = &[
    "Mild facet arthropathy.",
    "Ligamentum flavum thickening.",
    "Facet joints are unremarkable.",
    "Endplate changes are present.",
    "No fracture.",
];

pub struct TemplateTable {
    pub templates: Vec<Template>,
    banks: Vec<(&'static str, usize, Vec<TemplateId>)>,
    pub normal: Vec<TemplateId>,
    impression: Vec<(&'static str, usize, Vec<TemplateId>)>,
}

impl TemplateTable {
    fn build(body: BodyPart) -> TemplateTable {
        let mut t = TemplateTable { templates: Vec::new(), banks: Vec::new(), normal: Vec::new(), impression: Vec::new() };
        let (finding_banks, normal): (Vec<&[Bank]>, &[&str]) = match body {
            BodyPart::Lumbar => (vec![STENOSIS, LUMBAR_DISC, NERVE], LUMBAR_NORMAL),
            BodyPart::Cervical => (vec![STENOSIS, CERVICAL_DISC, CORD, FORAMINAL], CERVICAL_NORMAL),
        };
        let tasks: Vec<&'static str> = finding_banks.iter().map(|b| b[0].0).collect();
        for bank in finding_banks {
            for &(task, class, texts) in bank {
                let ids = t.push_all(texts, vec![(task, class)]);
                t.banks.push((task, class, ids));
            }
        }
        t.normal = t.push_all(normal, tasks.iter().map(|&task| (task, 0)).collect());
        for &(task, class, texts) in IMPRESSION {
            let ids = t.push_all(texts, vec![(task, class)]);
            t.impression.push((task, class, ids));
        }
        t
    }

    fn push_all(&mut self, texts: &[&'static str], sets: Vec<(&'static str, usize)>) -> Vec<TemplateId> {
        texts
            .iter()
            .map(|&text| {
                self.templates.push(Template { text, sets: sets.clone() });
                (self.templates.len() - 1) as TemplateId
            })
            .collect()
    }

    pub fn for_body(body: BodyPart) -> &'static TemplateTable {
        static LUMBAR: OnceLock<TemplateTable> = OnceLock::new();
        static CERVICAL: OnceLock<TemplateTable> = OnceLock::new();
        match body {
            BodyPart::Lumbar => LUMBAR.get_or_init(|| TemplateTable::build(body)),
            BodyPart::Cervical => CERVICAL.get_or_init(|| TemplateTable::build(body)),
        }
    }

    pub fn bank(&self, task: &str, class: usize) -> &[TemplateId] {
        self.banks
            .iter()
            .find(|(t, c, _)| *t == task && *c == class)
            .map(|(_, _, ids)| ids.as_slice())
            .unwrap_or(&[])
    }

    pub fn impression(&self, task: &str, class: usize) -> &[TemplateId] {
        self.impression
            .iter()
            .find(|(t, c, _)| *t == task && *c == class)
            .map(|(_, _, ids)| ids.as_slice())
            .unwrap_or(&[])
    }

    pub fn get(&self, id: TemplateId) -> &Template {
        &self.templates[id as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_task_class_has_eight_paraphrases() {
        for body in [BodyPart::Lumbar, BodyPart::Cervical] {
            let table = TemplateTable::for_body(body);
            for task in &body.schema().tasks {
                for class in 0..task.n_classes {
                    assert!(table.bank(&task.name, class).len() >= 8, "{} {class}", task.name);
                }
            }
            assert_eq!(table.normal.len(), 8);
        }
    }
}
