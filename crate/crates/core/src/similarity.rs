//! Few-shot exemplar retrieval by cosine similarity of code-point vectors.
//!
//! Each text becomes the sequence of its Unicode code points; the shorter
//! vector is zero-padded. Single-character texts are therefore always
//! parallel (cosine 1.0), a known property of this scheme.

use crate::dataset::FslRecord;

pub const DEFAULT_TOP_K: usize = 3;
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityHit<'a> {
    pub record: &'a FslRecord,
    pub score: f64,
}

pub fn vectorize(text: &str) -> Vec<f64> {
    text.chars().map(|c| f64::from(u32::from(c))).collect()
}

/// Cosine of the zero-padded vectors; 0.0 when either is all zeros.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(0.0, 1.0)
}

/// Exemplars scoring at least `threshold`, best first (file order on ties),
/// at most `k` of them.
pub fn retrieve_similar<'a>(
    query: &str,
    fsl: &'a [FslRecord],
    k: usize,
    threshold: f64,
) -> Vec<SimilarityHit<'a>> {
    let q = vectorize(query);
    let mut hits: Vec<SimilarityHit<'a>> = fsl
        .iter()
        .map(|record| SimilarityHit {
            record,
            score: cosine(&q, &vectorize(&record.code)),
        })
        .filter(|h| h.score >= threshold)
        .collect();
    // Stable sort keeps file order for equal scores.
    hits.sort_by(|a, b| b.score.total_cmp(&a.score));
    hits.truncate(k);
    hits
}
