//! Test-only helpers: a brute-force recomputation of nugget scores that shares
//! no code with the engine, random instance generation, and instrumented scorers.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Mutex;

use nugget_core::model::{act_catalog, AnnotatedTurn, CandidateSet, LengthScaling, ScoringConfig};
use nugget_core::scorer::{Scorer, ScorerError, ScorerRequest, TableScorer};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

/// `(nugget, d_phi, md_diff, md_same, ns)` computed by `fixtures/case_study_oracle.py`
/// with K=5, L=3 and weights {10, 5, 2}.
pub const CASE_STUDY: [(&str, f64, f64, f64, f64); 5] = [
    ("n1", 0.021199999999999997, 0.0064200000000000255, -0.013099999999999964, 0.5542604772274804),
    ("n2", 0.03210000000000002, 0.014640000000000009, 0.006633333333333343, 0.6004802777632916),
    ("n3", -0.029200000000000004, 0.06650000000000003, 0.053933333333333354, 0.5370237755645408),
    ("n4", 0.08189999999999997, -0.005579999999999985, -0.003533333333333314, 0.6865487379173625),
    ("n5", -0.023299999999999987, 0.07990000000000005, 0.03806666666666669, 0.5603624904688405),
];

/// Expected values for one nugget.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleNugget {
    pub id: String,
    pub d_phi: f64,
    pub md_diff: Option<f64>,
    pub md_same: Option<f64>,
    pub pre_sigmoid: f64,
    pub ns: f64,
}

fn oracle_render(texts: &[String], slot: usize, replacement: Option<&str>) -> String {
    let mut out = String::new();
    for (i, t) in texts.iter().enumerate() {
        let piece = if i == slot { replacement } else { Some(t.as_str()) };
        if let Some(p) = piece {
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(p);
        }
    }
    out
}

/// Mean of `s_t - v` over the size-`min(top, n)` subset with the largest sum,
/// found by enumerating every subset.
fn brute_force_top_mean(s_t: f64, values: &[f64], top: usize) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let m = top.min(values.len());
    let n = values.len();
    let mut best: Option<(f64, u32)> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let total: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| values[i]).sum();
        if best.is_none_or(|(b, _)| total > b) {
            best = Some((total, mask));
        }
    }
    let (_, mask) = best.unwrap();
    let diffs: f64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| s_t - values[i]).sum();
    Some(diffs / m as f64)
}

/// Straight-line recomputation from nugget texts, candidates and a text -> score map.
pub fn oracle(
    turn: &AnnotatedTurn,
    candidates: &[CandidateSet],
    cfg: &ScoringConfig,
    score_of: &dyn Fn(&str) -> f64,
) -> Vec<OracleNugget> {
    let mut nuggets = turn.nuggets.clone();
    nuggets.sort_by_key(|n| n.position);
    let texts: Vec<String> = nuggets.iter().map(|n| n.text.clone()).collect();
    let s_t = score_of(&texts.join(" "));
    let factor = match cfg.length_scaling {
        LengthScaling::Off => 1.0,
        LengthScaling::Linear { reference_length } => texts.len() as f64 / reference_length as f64,
    };
    nuggets
        .iter()
        .enumerate()
        .map(|(slot, n)| {
            let s_del = score_of(&oracle_render(&texts, slot, None));
            let set = candidates.iter().find(|c| c.nugget_id == n.id);
            let diff: Vec<f64> = set
                .map(|c| c.diff_candidates.iter().map(|d| score_of(&oracle_render(&texts, slot, Some(&d.text)))).collect())
                .unwrap_or_default();
            let same: Vec<f64> = set
                .map(|c| c.same_candidates.iter().map(|t| score_of(&oracle_render(&texts, slot, Some(t)))).collect())
                .unwrap_or_default();
            let d_phi = s_t - s_del;
            let md_diff = brute_force_top_mean(s_t, &diff, cfg.k);
            let md_same = brute_force_top_mean(s_t, &same, cfg.l);
            let pre = cfg.w_phi * factor * d_phi
                + cfg.w_diff * factor * md_diff.unwrap_or(0.0)
                + cfg.w_same * factor * md_same.unwrap_or(0.0);
            let ns = 1.0 / (1.0 + (-cfg.sigmoid_slope * pre).exp());
            OracleNugget { id: n.id.clone(), d_phi, md_diff, md_same, pre_sigmoid: pre, ns }
        })
        .collect()
}

/// A random annotated turn with unique texts everywhere.
pub fn random_annotation<R: Rng>(rng: &mut R, tag: usize) -> (AnnotatedTurn, Vec<CandidateSet>) {
    let acts = act_catalog();
    let count = rng.gen_range(2..=6);
    let nuggets: Vec<(String, String, String)> = (0..count)
        .map(|i| {
            let act = acts.choose(rng).unwrap().id;
            (format!("n{i}"), format!("Nugget {i} of turn {tag}."), act.to_string())
        })
        .collect();
    let sets = nuggets
        .iter()
        .map(|(id, _, act)| {
            let mut other: Vec<&str> = acts.iter().map(|a| a.id).filter(|a| a != act).collect();
            other.shuffle(rng);
            let mut set = CandidateSet::new(id.clone());
            for (j, a) in other.iter().take(rng.gen_range(0..=10)).enumerate() {
                set = set.with_diff(*a, format!("{id} diff {j} ({a})."));
            }
            for j in 0..rng.gen_range(0..=10) {
                set = set.with_same(format!("{id} same {j}."));
            }
            set
        })
        .collect();
    (AnnotatedTurn::from_parts(format!("turn-{tag}"), vec![], nuggets), sets)
}

pub fn random_config<R: Rng>(rng: &mut R) -> ScoringConfig {
    let mut w = [rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0)];
    w.sort_by(|a: &f64, b| b.total_cmp(a));
    ScoringConfig {
        k: rng.gen_range(1..=6),
        l: rng.gen_range(1..=6),
        w_phi: w[0],
        w_diff: w[1],
        w_same: w[2],
        sigmoid_slope: rng.gen_range(0.1..3.0),
        length_scaling: if rng.gen_bool(0.25) {
            LengthScaling::Linear { reference_length: rng.gen_range(1..=8) }
        } else {
            LengthScaling::Off
        },
        ..ScoringConfig::default()
    }
}

/// Every text the engine could ask for, each mapped to a random score in [lo, hi).
pub fn random_table<R: Rng>(
    rng: &mut R,
    turn: &AnnotatedTurn,
    candidates: &[CandidateSet],
    lo: f64,
    hi: f64,
) -> HashMap<String, f64> {
    all_texts(turn, candidates).into_iter().map(|t| (t, rng.gen_range(lo..hi))).collect()
}

pub fn all_texts(turn: &AnnotatedTurn, candidates: &[CandidateSet]) -> Vec<String> {
    let mut nuggets = turn.nuggets.clone();
    nuggets.sort_by_key(|n| n.position);
    let texts: Vec<String> = nuggets.iter().map(|n| n.text.clone()).collect();
    let mut out = vec![texts.join(" ")];
    for (slot, n) in nuggets.iter().enumerate() {
        out.push(oracle_render(&texts, slot, None));
        if let Some(set) = candidates.iter().find(|c| c.nugget_id == n.id) {
            out.extend(set.diff_candidates.iter().map(|d| oracle_render(&texts, slot, Some(&d.text))));
            out.extend(set.same_candidates.iter().map(|t| oracle_render(&texts, slot, Some(t))));
        }
    }
    out
}

pub fn table_scorer(table: &HashMap<String, f64>) -> TableScorer {
    TableScorer::new(table.clone()).unwrap()
}

/// Passes requests through to an inner scorer and records each downstream text.
pub struct CountingScorer<S> {
    pub inner: S,
    pub seen: Mutex<Vec<String>>,
}

impl<S: Scorer> CountingScorer<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, seen: Mutex::new(Vec::new()) }
    }

    pub fn calls_per_text(&self) -> HashMap<String, usize> {
        let mut m = HashMap::new();
        for t in self.seen.lock().unwrap().iter() {
            *m.entry(t.clone()).or_default() += 1;
        }
        m
    }
}

impl<S: Scorer> Scorer for CountingScorer<S> {
    fn identity(&self) -> &str {
        self.inner.identity()
    }

    fn score(&self, request: &ScorerRequest) -> Result<f64, ScorerError> {
        self.seen.lock().unwrap().push(request.turn_text.clone());
        self.inner.score(request)
    }
}
