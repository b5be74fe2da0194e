//! Clustering quality (silhouette, Dunn index) and redundancy (NMI,
//! Jaccard) measures, plus the report that aggregates them over several
//! alternative clusterings.
//!
//! | Metric | Range | Preferred |
//! |--------|-------|-----------|
//! | [`silhouette`] | [-1, 1] | high |
//! | [`dunn_index`] | [0, ∞) | high |
//! | [`nmi`] | [0, 1] | low between alternatives |
//! | [`jaccard`] | [0, 1] | low between alternatives |

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::data::{zscore_rows, MultiViewDataset};
use crate::error::{MvmcError, Result};
use crate::linalg::Mat;

/// Feature space in which the internal quality indices are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricSpace {
    /// All views standardized row-wise and stacked.
    #[default]
    Concat,
    /// Each view standardized separately; scores averaged over views.
    PerView,
}

fn distance_matrix(x: &Mat) -> Mat {
    let n = x.ncols();
    let mut d = Mat::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dist = (x.column(i) - x.column(j)).norm();
            d[(i, j)] = dist;
            d[(j, i)] = dist;
        }
    }
    d
}

/// Maps arbitrary labels to `0..k`, returning the compact labels and `k`.
fn compact(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut ids = BTreeMap::new();
    for &l in labels {
        let next = ids.len();
        ids.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| ids[l]).collect(), ids.len())
}

fn check_quality_inputs(x: &Mat, labels: &[usize]) -> Result<(Vec<usize>, usize)> {
    if x.ncols() != labels.len() {
        return Err(MvmcError::shape(format!(
            "{} labels for {} samples",
            labels.len(),
            x.ncols()
        )));
    }
    let (compact, k) = compact(labels);
    if k < 2 {
        return Err(MvmcError::Metric(format!(
            "internal indices need at least 2 clusters, got {k}"
        )));
    }
    Ok((compact, k))
}

/// Mean silhouette over samples (columns of `x`); singletons score 0.
pub fn silhouette(x: &Mat, labels: &[usize]) -> Result<f64> {
    let (labels, k) = check_quality_inputs(x, labels)?;
    let n = labels.len();
    let dist = distance_matrix(x);
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let mut total = 0.0;
    let mut sums = vec![0.0; k];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            sums[labels[j]] += dist[(i, j)];
        }
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

/// Smallest between-cluster point distance over the largest cluster diameter.
pub fn dunn_index(x: &Mat, labels: &[usize]) -> Result<f64> {
    let (labels, _) = check_quality_inputs(x, labels)?;
    let n = labels.len();
    let dist = distance_matrix(x);
    let mut min_between = f64::INFINITY;
    let mut max_diameter: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            if labels[i] == labels[j] {
                max_diameter = max_diameter.max(dist[(i, j)]);
            } else {
                min_between = min_between.min(dist[(i, j)]);
            }
        }
    }
    if max_diameter <= 0.0 {
        return Err(MvmcError::Metric(
            "every cluster has zero diameter, Dunn index undefined".into(),
        ));
    }
    Ok(min_between / max_diameter)
}

struct Contingency {
    table: Vec<Vec<usize>>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    n: usize,
}

fn contingency(a: &[usize], b: &[usize]) -> Result<Contingency> {
    if a.len() != b.len() {
        return Err(MvmcError::shape(format!(
            "labelings have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(MvmcError::shape("labelings are empty"));
    }
    let (a, ka) = compact(a);
    let (b, kb) = compact(b);
    let mut table = vec![vec![0usize; kb]; ka];
    for (&i, &j) in a.iter().zip(&b) {
        table[i][j] += 1;
    }
    let rows = table.iter().map(|r| r.iter().sum()).collect();
    let cols = (0..kb).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    Ok(Contingency {
        table,
        rows,
        cols,
        n: a.len(),
    })
}

fn entropy(counts: &[usize], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by `sqrt(H(A) H(B))`.
///
/// Two single-cluster labelings score 1; a single-cluster labeling against
/// anything else scores 0.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64> {
    let ct = contingency(a, b)?;
    let n = ct.n as f64;
    let ha = entropy(&ct.rows, n);
    let hb = entropy(&ct.cols, n);
    if ha == 0.0 && hb == 0.0 {
        return Ok(1.0);
    }
    if ha == 0.0 || hb == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for (i, row) in ct.table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (ct.rows[i] as f64 * ct.cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / (ha * hb).sqrt()).clamp(0.0, 1.0))
}

fn pairs(c: usize) -> f64 {
    (c * c.saturating_sub(1) / 2) as f64
}

/// Pair-counting Jaccard coefficient `n11 / (n11 + n10 + n01)`; 0 when no
/// pair is co-clustered in either labeling.
pub fn jaccard(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        if a.len() != b.len() {
            return Err(MvmcError::shape(format!(
                "labelings have lengths {} and {}",
                a.len(),
                b.len()
            )));
        }
        return Err(MvmcError::shape("Jaccard coefficient needs at least 2 samples"));
    }
    let ct = contingency(a, b)?;
    let both: f64 = ct.table.iter().flatten().map(|&c| pairs(c)).sum();
    let in_a: f64 = ct.rows.iter().map(|&c| pairs(c)).sum();
    let in_b: f64 = ct.cols.iter().map(|&c| pairs(c)).sum();
    let union = in_a + in_b - both;
    if union == 0.0 {
        return Ok(0.0);
    }
    Ok(both / union)
}

/// Feature matrices (columns are samples) in which quality is measured.
pub fn quality_spaces(ds: &MultiViewDataset, space: MetricSpace) -> Vec<Mat> {
    let standardized: Vec<Mat> = ds.views().iter().map(zscore_rows).collect();
    match space {
        MetricSpace::PerView => standardized,
        MetricSpace::Concat => {
            let rows: usize = standardized.iter().map(|x| x.nrows()).sum();
            let mut stacked = Mat::zeros(rows, ds.n());
            let mut offset = 0;
            for x in &standardized {
                stacked.view_mut((offset, 0), x.shape()).copy_from(x);
                offset += x.nrows();
            }
            vec![stacked]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityScores {
    pub sc: Option<f64>,
    pub di: Option<f64>,
}

/// Quality of each clustering and redundancy between every pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringReport {
    pub metric_space: MetricSpace,
    pub labelings: Vec<Vec<usize>>,
    pub quality: Vec<QualityScores>,
    /// Symmetric, unit diagonal.
    pub diversity_nmi: Vec<Vec<Option<f64>>>,
    /// Symmetric, unit diagonal.
    pub diversity_jc: Vec<Vec<Option<f64>>>,
    pub mean_sc: Option<f64>,
    pub mean_di: Option<f64>,
    /// Averages over unordered pairs; absent for a single clustering.
    pub mean_nmi: Option<f64>,
    pub mean_jc: Option<f64>,
    /// `truth_nmi[k][t]`: NMI of clustering `k` against ground truth `t`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth_nmi: Option<Vec<Vec<f64>>>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = values
        .flatten()
        .fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

fn averaged_over_spaces(
    spaces: &[Mat],
    labels: &[usize],
    f: fn(&Mat, &[usize]) -> Result<f64>,
) -> Option<f64> {
    let scores: Option<Vec<f64>> = spaces.iter().map(|x| f(x, labels).ok()).collect();
    scores.map(|s| s.iter().sum::<f64>() / s.len() as f64)
}

/// Scores every labeling and every unordered pair of labelings.
///
/// Metric failures (e.g. a single-cluster labeling) leave the cell empty.
pub fn build_report(
    ds: &MultiViewDataset,
    labelings: &[Vec<usize>],
    space: MetricSpace,
    with_truths: bool,
) -> Result<ClusteringReport> {
    let n = ds.n();
    if let Some((k, l)) = labelings.iter().enumerate().find(|(_, l)| l.len() != n) {
        return Err(MvmcError::shape(format!(
            "labeling {k} has {} entries, dataset has {n} samples",
            l.len()
        )));
    }
    let spaces = quality_spaces(ds, space);
    let quality: Vec<QualityScores> = labelings
        .iter()
        .map(|l| QualityScores {
            sc: averaged_over_spaces(&spaces, l, silhouette),
            di: averaged_over_spaces(&spaces, l, dunn_index),
        })
        .collect();
    let h = labelings.len();
    let mut diversity_nmi = vec![vec![None; h]; h];
    let mut diversity_jc = vec![vec![None; h]; h];
    for i in 0..h {
        diversity_nmi[i][i] = Some(1.0);
        diversity_jc[i][i] = Some(1.0);
        for j in (i + 1)..h {
            let v = nmi(&labelings[i], &labelings[j]).ok();
            diversity_nmi[i][j] = v;
            diversity_nmi[j][i] = v;
            let v = jaccard(&labelings[i], &labelings[j]).ok();
            diversity_jc[i][j] = v;
            diversity_jc[j][i] = v;
        }
    }
    let upper = |m: &Vec<Vec<Option<f64>>>| {
        let cells: Vec<Option<f64>> = (0..h)
            .flat_map(|i| ((i + 1)..h).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j])
            .collect();
        mean(cells.into_iter())
    };
    let truth_nmi = if with_truths && !ds.ground_truths().is_empty() {
        Some(
            labelings
                .iter()
                .map(|l| {
                    ds.ground_truths()
                        .iter()
                        .map(|t| nmi(l, t))
                        .collect::<Result<Vec<f64>>>()
                })
                .collect::<Result<Vec<_>>>()?,
        )
    } else {
        None
    };
    Ok(ClusteringReport {
        metric_space: space,
        labelings: labelings.to_vec(),
        mean_sc: mean(quality.iter().map(|q| q.sc)),
        mean_di: mean(quality.iter().map(|q| q.di)),
        mean_nmi: upper(&diversity_nmi),
        mean_jc: upper(&diversity_jc),
        quality,
        diversity_nmi,
        diversity_jc,
        truth_nmi,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

impl ClusteringReport {
    /// Flat CSV: one `quality` row per clustering, one `pair` row per
    /// unordered pair.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,a,b,sc,di,nmi,jc\n");
        for (k, q) in self.quality.iter().enumerate() {
            out.push_str(&format!("quality,{k},,{},{},,\n", fmt_opt(q.sc), fmt_opt(q.di)));
        }
        let h = self.labelings.len();
        for i in 0..h {
            for j in (i + 1)..h {
                out.push_str(&format!(
                    "pair,{i},{j},,,{},{}\n",
                    fmt_opt(self.diversity_nmi[i][j]),
                    fmt_opt(self.diversity_jc[i][j])
                ));
            }
        }
        out
    }
}

/// Assignment of outputs to truths maximizing the summed NMI; returns, for
/// each truth, the matched output index and its NMI. Exhaustive search, so
/// meant for a handful of clusterings.
pub fn best_matching(outputs: &[Vec<usize>], truths: &[Vec<usize>]) -> Result<Vec<(usize, f64)>> {
    if truths.len() > outputs.len() {
        return Err(MvmcError::param(format!(
            "cannot match {} truths to {} outputs",
            truths.len(),
            outputs.len()
        )));
    }
    let scores: Vec<Vec<f64>> = truths
        .iter()
        .map(|t| outputs.iter().map(|o| nmi(o, t)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    fn search(
        t: usize,
        scores: &[Vec<f64>],
        used: &mut Vec<bool>,
        current: &mut Vec<usize>,
        best: &mut (f64, Vec<usize>),
    ) {
        if t == scores.len() {
            let total: f64 = current.iter().enumerate().map(|(t, &o)| scores[t][o]).sum();
            if total > best.0 {
                *best = (total, current.clone());
            }
            return;
        }
        for o in 0..used.len() {
            if !used[o] {
                used[o] = true;
                current.push(o);
                search(t + 1, scores, used, current, best);
                current.pop();
                used[o] = false;
            }
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    search(0, &scores, &mut vec![false; outputs.len()], &mut Vec::new(), &mut best);
    Ok(best
        .1
        .iter()
        .enumerate()
        .map(|(t, &o)| (o, scores[t][o]))
        .collect())
}
