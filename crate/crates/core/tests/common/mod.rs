#![allow(dead_code)]

pub mod gradcheck;
pub mod oracles;

use segalign::pipeline::MotionSegment::{self, *};

/// Mention windows and the segment each must normalize to.
pub const NORMALIZATION_CASES: &[(&str, Option<MotionSegment>)] = &[
    ("L2-L3", Some(L2L3)),
    ("L23", Some(L2L3)),
    ("L2L3", Some(L2L3)),
    ("L@L3", Some(L2L3)),
    ("L2_L3", Some(L2L3)),
    ("L2/L3", Some(L2L3)),
    ("L2 - L3", Some(L2L3)),
    ("l2-l3", Some(L2L3)),
    ("L2-3", Some(L2L3)),
    ("L2@L3", Some(L2L3)),
    ("L 2-3", Some(L2L3)),
    ("L12", Some(L1L2)),
    ("L1-2", Some(L1L2)),
    ("L1/L2", Some(L1L2)),
    ("L3-L4", Some(L3L4)),
    ("L34", Some(L3L4)),
    ("L3L4", Some(L3L4)),
    ("L4-5", Some(L4L5)),
    ("L45", Some(L4L5)),
    ("(L4-L5)", Some(L4L5)),
    ("L4-L5:", Some(L4L5)),
    ("L5-S1", Some(L5S1)),
    ("L5S1", Some(L5S1)),
    ("L5/S1", Some(L5S1)),
    ("L5_S1", Some(L5S1)),
    ("l5-s1.", Some(L5S1)),
    ("L@S1", Some(L5S1)),
    ("C2-3", Some(C2C3)),
    ("C2-C3", Some(C2C3)),
    ("C23", Some(C2C3)),
    ("C@C3", Some(C2C3)),
    ("C3-4", Some(C3C4)),
    ("C4/C5", Some(C4C5)),
    ("C5 - C6", Some(C5C6)),
    ("C5@C6", Some(C5C6)),
    ("C6C7", Some(C6C7)),
    ("C6_C7", Some(C6C7)),
    ("C7-T1", Some(C7T1)),
    ("C7T1", Some(C7T1)),
    ("c7t1", Some(C7T1)),
    ("C7@T1", Some(C7T1)),
    ("C@T1", Some(C7T1)),
    ("L24", None),
    ("T1-T2", None),
    ("L5-1", None),
    ("L1-L3", None),
    ("C1-C2", None),
    ("L6-S1", None),
    ("S1-S2", None),
    ("C8-T1", None),
    ("T12-L1", None),
    ("L3-L2", None),
    ("L4-L4", None),
    ("L2-L3-L4", None),
    ("C7-C8", None),
    ("L4", None),
    ("4-5", None),
    ("L", None),
    ("disc", None),
    ("", None),
];
